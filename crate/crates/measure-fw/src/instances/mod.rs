//! Constructors for the worked problem instances: exact objectives, exact
//! influence functions, known optima where the construction pins them down,
//! and Monte Carlo oracles where the model provides them.

pub mod calibration;
pub mod cre;
pub mod deconvolution;
pub mod doptimal;
pub mod nn_risk;
pub mod nonconvex;
pub mod pmeans;
pub mod presets;
pub mod response_time;

pub use calibration::{build_calibration, ScalarFn};
pub use cre::build_cre;
pub use deconvolution::build_deconvolution;
pub use doptimal::{build_doptimal, information_determinant, BasisFn};
pub use nn_risk::{build_nn_risk, KernelFn, PotentialFn};
pub use nonconvex::build_nonconvex_calibration;
pub use pmeans::build_pmeans;
pub use response_time::{build_response_time_a, build_response_time_b, CostFn};
