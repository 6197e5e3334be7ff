pub mod metrics;
pub mod quat;
pub mod reward;
pub mod sim;
pub mod controllers;
pub mod cli;
