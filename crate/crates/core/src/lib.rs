pub mod cli;
pub mod compress;
pub mod corpus;
pub mod equation;
pub mod guided;
pub mod ncr;
pub mod oracle;
pub mod solver;
pub mod error;
pub mod term;
pub mod uncross;
