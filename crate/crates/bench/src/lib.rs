//! Shared helpers for the pipeline benchmarks.

use outlier_core::detector::{self, Bandwidth, DetectorConfig, DetectorState, LevelSchedule};
use outlier_core::sim::{self, Distribution, MeanFn, Process, Scenario};

pub const SEED: u64 = 17;

/// A deterministic scenario stream of length 11 n.
pub fn stream(n: usize) -> Vec<f64> {
    let scenario = Scenario::study(MeanFn::Mu1, Process::Ar, Distribution::Normal, n, false, SEED);
    sim::generate(&scenario, 0).0
}

pub fn config(n: usize, h: Option<f64>) -> DetectorConfig {
    let mut cfg = DetectorConfig::new(n, LevelSchedule::constant(0.01).unwrap());
    if let Some(h) = h {
        cfg.bandwidth = Bandwidth::Fixed(h);
    }
    cfg
}

pub fn calibrated(n: usize, h: Option<f64>) -> DetectorState {
    let series = stream(n);
    detector::calibrate(&series[..n], &config(n, h)).expect("benchmark calibration")
}
