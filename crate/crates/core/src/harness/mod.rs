//! Experiments, figures and the command-line front end.

pub mod cli;
pub mod config;
pub mod figure;
pub mod rates;

pub use config::{ClassSpec, MeasureInput};
pub use figure::{default_alpha_grid, figure1, FigurePanel};
pub use rates::{
    auto_c_prime, rate_exponent_hr, rate_exponent_ours, rate_experiment, slope_fit, write_rate_outputs, CPrime,
    RateConfig, RateReport, RateRow, SlopeFit,
};
