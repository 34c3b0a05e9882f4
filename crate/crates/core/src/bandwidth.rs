//! Bandwidth choice by blocked cross-validation.
//!
//! Candidates come from a log-spaced grid. The scored points are the tail
//! of the calibration stretch where even the widest candidate has a
//! complete window; they are split into contiguous folds, each fold is
//! withheld in turn, and the held-out points are predicted one-sidedly
//! from the remaining ones. A candidate whose window starves somewhere
//! (all nearby points withheld) is skipped rather than scored.

use crate::error::{Error, Result};
use crate::kernels::quartic_kernel;
use crate::smoother::{jackknife_estimate, SmootherConfig, WindowBuffer};

/// Near-ties resolve toward the smaller bandwidth: a wider candidate must
/// win by this relative margin (or an absolute sliver for exact fits).
const TIE_REL: f64 = 1e-9;
const TIE_ABS: f64 = 1e-24;

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub folds: usize,
    pub grid: Vec<f64>,
    /// floor on n*h for a candidate; values below 4 are raised to 4
    pub min_points: usize,
}

impl CvConfig {
    pub fn for_length(n: usize) -> Self {
        CvConfig { folds: 5, grid: default_grid(n), min_points: 4 }
    }
}

/// Twelve log-spaced candidates from 4/n to 1/2, endpoints exact.
pub fn default_grid(n: usize) -> Vec<f64> {
    const COUNT: usize = 12;
    let lo = 4.0 / n as f64;
    let hi = 0.5;
    let mut grid: Vec<f64> = (0..COUNT)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (COUNT - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[COUNT - 1] = hi;
    grid
}

/// Cross-validated bandwidth for a calibration stretch of length `n`.
///
/// `calib` pairs indices 1..=n with values; time for index i is i/n.
/// Returns the grid value with the smallest held-out squared error,
/// preferring the smaller bandwidth on near-ties. Errors when no
/// candidate admits a fit at every scored point.
pub fn cv_bandwidth(calib: &[(i64, f64)], n: usize, cfg: &CvConfig) -> Result<f64> {
    if cfg.folds < 2 {
        return Err(Error::InvalidConfig(format!("{} folds, need at least 2", cfg.folds)));
    }
    if cfg.grid.is_empty() {
        return Err(Error::InvalidConfig("empty bandwidth grid".into()));
    }
    let min_nh = cfg.min_points.max(4) as f64;
    let mut prev = 0.0;
    for &h in &cfg.grid {
        if !(h > 0.0 && h < 1.0 && h.is_finite()) {
            return Err(Error::InvalidConfig(format!("bandwidth candidate {h} outside (0, 1)")));
        }
        if h <= prev {
            return Err(Error::InvalidConfig("grid must increase strictly".into()));
        }
        if (n as f64) * h < min_nh {
            return Err(Error::InvalidConfig(format!(
                "candidate {h} gives window n*h = {} below {min_nh}",
                n as f64 * h
            )));
        }
        prev = h;
    }
    if calib.len() != n || calib.iter().zip(1..).any(|(&(idx, _), want)| idx != want) {
        return Err(Error::InvalidConfig(format!(
            "calibration must carry indices 1..={n} in order, got {} entries",
            calib.len()
        )));
    }

    let h_max = *cfg.grid.last().unwrap();
    let first_scored = (n as f64 * h_max).ceil() as usize + 1;
    let scored: Vec<usize> = (first_scored..=n).collect();
    if scored.len() < cfg.folds {
        return Err(Error::InvalidConfig(format!(
            "only {} scorable points for {} folds",
            scored.len(),
            cfg.folds
        )));
    }

    // contiguous folds over the scored tail, sizes differing by at most one
    let base = scored.len() / cfg.folds;
    let extra = scored.len() % cfg.folds;
    let mut fold_of = vec![usize::MAX; n + 1];
    let mut pos = 0;
    for f in 0..cfg.folds {
        let len = base + usize::from(f < extra);
        for &i in &scored[pos..pos + len] {
            fold_of[i] = f;
        }
        pos += len;
    }

    let kernel = quartic_kernel();
    let mut best: Option<(f64, f64)> = None;
    'candidates: for &h in &cfg.grid {
        let smoother = SmootherConfig::new(n, h, kernel)?;
        let mut sse = 0.0;
        for fold in 0..cfg.folds {
            let mut buf = WindowBuffer::new(n + 1);
            for &(idx, x) in calib {
                let held_out = (1..=n as i64).contains(&idx) && fold_of[idx as usize] == fold;
                buf.push(idx, x, !held_out);
            }
            for &i in scored.iter().filter(|&&i| fold_of[i] == fold) {
                let t = i as f64 / n as f64;
                match jackknife_estimate(&buf, t, &smoother) {
                    Ok(est) => {
                        let e = calib[i - 1].1 - est;
                        sse += e * e;
                    }
                    Err(Error::SingularWindow { .. }) => continue 'candidates,
                    Err(e) => return Err(e),
                }
            }
        }
        let better = match best {
            None => true,
            Some((_, b)) => sse < b * (1.0 - TIE_REL) - TIE_ABS,
        };
        if better {
            best = Some((h, sse));
        }
    }
    best.map(|(h, _)| h).ok_or(Error::NoViableBandwidth)
}
