//! Configuration, file formats, and the run commands built on them.

pub mod config;
pub mod container;
pub mod output;
pub mod pipeline;

pub use config::{format_complex, parse_complex, Overrides, RunConfig};
pub use pipeline::{cmd_demo, cmd_forward, cmd_impedance, cmd_reconstruct};
