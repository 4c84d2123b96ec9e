//! Compresses random ground trees round by round and decompresses them again.

use ctxrecomp::compress::{all_partitions, decompress, find_good_partition, tree_comp, CompressionLog};
use ctxrecomp::corpus::{random_ground_term, tree_signature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let sig = tree_signature(6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for size in [20, 60, 150] {
        let t = random_ground_term(&mut rng, &sig, size);
        let mut s = sig.clone();
        let mut log = CompressionLog::new(&s);
        let mut cur = t.clone();
        let mut sizes = vec![cur.size()];
        while cur.size() > 1 {
            cur = tree_comp(&cur, find_good_partition, &mut s, &mut log).unwrap();
            sizes.push(cur.size());
        }
        let back = decompress(&log, &cur, &s).unwrap();
        println!("size {size}: rounds {:?}, {} log entries, round trip {}", sizes, log.len(), back == t);

        // best single round over every partition of the unary letters
        let letters: Vec<_> = sig.letters_of_arity(1).collect();
        let best = all_partitions(&letters)
            .map(|p| {
                let mut s = sig.clone();
                let mut log = CompressionLog::new(&s);
                tree_comp(&t, |_, _| p.clone(), &mut s, &mut log).unwrap().size()
            })
            .min()
            .unwrap();
        println!("  best one-round size {best} ({:.2} of the input)", best as f64 / size as f64);
    }
}
