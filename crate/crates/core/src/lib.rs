pub mod cli;
pub mod closure;
pub mod models;
pub mod oracle;
pub mod par;
pub mod prover;
pub mod terms;
