//! Calibrate on the first n rows and print the fit diagnostics.

use outlier_core::{detector, evt};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::ValueReader;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("calibrate needs an input file (key input or --input)".into()))?;
    let dcfg = cfg.detector_config(cfg.n)?;

    let mut reader = ValueReader::open(input)?;
    let mut calib = Vec::with_capacity(cfg.n);
    while calib.len() < cfg.n {
        match reader.next_row() {
            Some(row) => calib.push(row?.1),
            None => {
                return Err(CliError::Input {
                    row: reader.row(),
                    message: format!("need at least n = {} data rows, found {}", cfg.n, calib.len()),
                })
            }
        }
    }
    let state = detector::calibrate(&calib, &dcfg)?;
    let summary = state.summary();

    println!("bandwidth h = {}", summary.h);
    println!("usable residuals = {}", summary.residual_count);
    println!("block length r = {}", summary.block_length);
    println!("block count m = {}", summary.block_count);
    let r = &summary.theta_r;
    println!("block-scale fit: gamma = {}, mu = {}, sigma = {}", r.gamma, r.mu, r.sigma);
    let n = &summary.theta_n;
    println!("stream-scale fit: gamma = {}, mu = {}, sigma = {}", n.gamma, n.mu, n.sigma);
    let q = evt::gev_quantile(n, 1.0 - cfg.alpha)?;
    println!("q(1 - {}) = {}", cfg.alpha, q);
    Ok(())
}
