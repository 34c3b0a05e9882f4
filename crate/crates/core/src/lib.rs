//! Streaming outlier detection for non-stationary time series.
//!
//! The pipeline: a one-sided local-linear smoother with jackknife bias
//! reduction tracks the slowly varying mean of a stream, a generalized
//! extreme-value tail is fitted to calibration residuals by probability-
//! weighted moments, and each new observation is flagged when its absolute
//! residual exceeds an extreme-value quantile chosen so that the joint
//! false-alarm level over a whole block of tests stays at the target.

pub mod bandwidth;
pub mod detector;
pub mod error;
pub mod evt;
pub mod kernels;
pub mod smoother;
pub mod math;
pub mod sim;

pub use bandwidth::{cv_bandwidth, default_grid, CvConfig};
pub use detector::{
    calibrate, Bandwidth, CalibrationSummary, DetectorConfig, DetectorState, LevelSchedule,
    Variant, Verdict, Weights,
};
pub use error::{Error, Result};
pub use kernels::{equivalent_kernel, jackknife_kernel, kernel_l2_norms, quartic_kernel, Kernel};
pub use sim::{
    gen_errors, generate, inject_outliers, mean_value, outlier_height, run_scenario, Distribution,
    MeanFn, MetricsReport, Process, Scenario,
};
pub use smoother::{
    jackknife_estimate, local_linear_fit, weighted_sums, LinearFit, SmootherConfig, WindowBuffer,
    WindowSums,
};
pub use evt::{block_maxima, fit_pwm, gev_cdf, gev_quantile, scale_params, GevParams};
