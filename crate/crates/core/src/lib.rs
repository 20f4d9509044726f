pub mod analytic;
pub mod cli;
pub mod coherent;
pub mod error;
pub mod fano;
pub mod interval;
pub mod irreps;
pub mod linalg;
pub mod oracle;
pub mod qcalc;
pub mod real;
pub mod sdp_model;
pub mod sdpa;
pub mod solver;

pub use error::{Error, Result};
