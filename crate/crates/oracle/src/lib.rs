//! Exhaustive reference solvers. They share no code with the solvers they
//! check beyond the input data types, and are only usable on tiny inputs.

pub mod instances;
pub mod lp;
pub mod nfms;
