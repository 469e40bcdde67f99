//! Optimal pairs trading for co-integrated assets with CEV-type volatility.
//!
//! The crate covers the closed-form strategies under power and exponential
//! utility, a finite-difference solver for the general HJB problem, a path
//! simulator, GMM estimation and a backtest engine.

pub mod backtest;
pub mod closed_form;
pub mod config;
pub mod error;
pub mod linalg;
pub mod gmm;
pub mod model;
pub mod optim;
pub mod pde;
pub mod sim;

pub use error::{Error, Result};
pub use model::{DerivedQuantities, ModelParams, Utility};
