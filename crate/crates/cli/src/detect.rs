//! Calibrate on the first n rows, then stream verdicts for the rest.

use std::io::Write;

use outlier_core::detector;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{output, ValueReader};

pub const VERDICT_HEADER: &str = "index,value,estimate,residual,threshold,alpha_i,flag,fallback";

pub fn run(cfg: &RunConfig) -> Result<()> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("detect needs an input file (key input or --input)".into()))?;
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
    let mut state = detector::calibrate(&calib, &dcfg)?;

    let mut out = output(&cfg.output)?;
    writeln!(out, "{VERDICT_HEADER}").map_err(write_err)?;
    let (mut monitored, mut flagged) = (0u64, 0u64);
    while let Some(row) = reader.next_row() {
        let (file_index, value) = row?;
        let v = state.step(value);
        monitored += 1;
        flagged += v.flag as u64;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            file_index.unwrap_or(v.index),
            v.value,
            v.estimate,
            v.residual,
            v.threshold,
            v.alpha,
            v.flag as u8,
            v.fallback as u8
        )
        .map_err(write_err)?;
    }
    out.flush().map_err(write_err)?;
    eprintln!("flagged {flagged} of {monitored} monitored rows");
    Ok(())
}

fn write_err(e: std::io::Error) -> CliError {
    CliError::Io { path: "<output>".into(), source: e }
}
