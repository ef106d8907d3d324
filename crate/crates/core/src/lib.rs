pub mod bench;
pub mod cli;
pub mod expr;
pub mod odeint;
pub mod search;
pub mod symmetry;
