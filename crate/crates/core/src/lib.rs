pub mod analysis;
pub mod cc;
pub mod cli;
pub mod ct;
pub mod domain;
pub mod ground_truth;
pub mod store;
