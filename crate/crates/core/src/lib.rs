pub mod error;
pub mod numeric;
pub mod laurent;
pub mod mahler;
pub mod chain;
pub mod manifolds;
pub mod alexander;
pub mod quotient;
pub mod cli;
