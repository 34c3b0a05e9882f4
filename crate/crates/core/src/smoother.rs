//! One-sided local-linear smoothing over a sliding window.
//!
//! Time is the observation index scaled by the calibration length: the
//! estimate at t weights entries whose index i satisfies
//! (i - n t) / (n h) in [-1, 0], so nothing after n t is ever read. The
//! jackknife estimate combines fits at bandwidths h and h/sqrt(2) to cancel
//! the second-order smoothing bias.

use crate::error::{Error, Result};
use crate::kernels::Kernel;

const DESIGN_DET_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub index: i64,
    pub value: f64,
    pub usable: bool,
}

/// Sliding window of observations, ordered by strictly increasing index.
///
/// `span` is how far back an entry stays alive: a push at index i evicts
/// everything older than i - span. Entries marked unusable stay in the
/// window (they still age out) but contribute nothing to any fit.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    entries: std::collections::VecDeque<Entry>,
    span: i64,
}

impl WindowBuffer {
    pub fn new(span: usize) -> Self {
        WindowBuffer { entries: Default::default(), span: span as i64 }
    }

    /// Appends an observation. Indices must be strictly increasing.
    pub fn push(&mut self, index: i64, value: f64, usable: bool) {
        if let Some(last) = self.entries.back() {
            assert!(index > last.index, "indices must increase: {} after {}", index, last.index);
        }
        self.entries.push_back(Entry { index, value, usable });
        let cutoff = index - self.span;
        while self.entries.front().is_some_and(|e| e.index < cutoff) {
            self.entries.pop_front();
        }
    }

    /// Flips the usable flag of the most recent entry.
    pub fn set_last_usable(&mut self, usable: bool) {
        if let Some(last) = self.entries.back_mut() {
            last.usable = usable;
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter()
    }

    /// Entries with index in [lo, hi], ascending.
    fn range(&self, lo: i64, hi: i64) -> impl Iterator<Item = &Entry> {
        let start = self.entries.partition_point(|e| e.index < lo);
        self.entries.iter().skip(start).take_while(move |e| e.index <= hi)
    }
}

/// Smoothing setup: calibration length `n`, bandwidth `h`, and the kernel.
#[derive(Debug, Clone, Copy)]
pub struct SmootherConfig {
    pub n: usize,
    pub h: f64,
    pub kernel: Kernel,
}

impl SmootherConfig {
    /// Requires n h >= 4 so a window can hold enough points for a line fit.
    pub fn new(n: usize, h: f64, kernel: Kernel) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidConfig(format!("bandwidth {h} not positive")));
        }
        if (n as f64) * h < 4.0 {
            return Err(Error::InvalidConfig(format!(
                "window n*h = {} too small, need at least 4",
                n as f64 * h
            )));
        }
        Ok(SmootherConfig { n, h, kernel })
    }
}

/// Kernel-weighted design and response sums over one window.
#[derive(Debug, Clone, Copy, Default)]
pub struct WindowSums {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub r0: f64,
    pub r1: f64,
    /// usable entries that fell inside the window, including zero-weight
    /// ones at the far edge
    pub usable: usize,
}

/// Accumulates S_l = 1/(nh) sum u^l K(u) and R_l = 1/(nh) sum x u^l K(u)
/// over usable entries with u = (i - n t)/(n h) in [-1, 0], in ascending
/// index order. `t` must be positive; bandwidth is passed separately so the
/// same config serves both jackknife component fits.
pub fn weighted_sums(buffer: &WindowBuffer, t: f64, h: f64, cfg: &SmootherConfig) -> WindowSums {
    debug_assert!(t > 0.0, "estimation time must be positive");
    let n = cfg.n as f64;
    let (nt, nh) = (n * t, n * h);
    let lo = (nt - nh).floor() as i64;
    let hi = nt.floor() as i64;

    let mut sums = WindowSums::default();
    for e in buffer.range(lo, hi) {
        if !e.usable {
            continue;
        }
        let u = (e.index as f64 - nt) / nh;
        if !(-1.0..=0.0).contains(&u) {
            continue;
        }
        sums.usable += 1;
        let w = cfg.kernel.eval(u) / nh;
        sums.s0 += w;
        sums.s1 += u * w;
        sums.s2 += u * u * w;
        sums.r0 += w * e.value;
        sums.r1 += u * w * e.value;
    }
    sums
}

/// Weighted least-squares line at the window's right edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    /// fitted level at t (the mean estimate)
    pub level: f64,
    /// fitted slope, in units of x per unit of t
    pub slope: f64,
}

/// Solves the 2x2 normal equations. Errors when fewer than two usable
/// points fell in the window or the design determinant is below 1e-12.
pub fn local_linear_fit(sums: &WindowSums, h: f64) -> Result<LinearFit> {
    if sums.usable < 2 {
        return Err(Error::SingularWindow { usable: sums.usable, det: 0.0 });
    }
    let det = sums.s0 * sums.s2 - sums.s1 * sums.s1;
    if det.abs() < DESIGN_DET_MIN {
        return Err(Error::SingularWindow { usable: sums.usable, det });
    }
    Ok(LinearFit {
        level: (sums.s2 * sums.r0 - sums.s1 * sums.r1) / det,
        slope: (sums.s0 * sums.r1 - sums.s1 * sums.r0) / (h * det),
    })
}

/// Bias-reduced level estimate at t: twice the fit at bandwidth h/sqrt(2)
/// minus the fit at h. Equals a single fit weighted by the jackknife
/// kernel up to the window discretization.
pub fn jackknife_estimate(buffer: &WindowBuffer, t: f64, cfg: &SmootherConfig) -> Result<f64> {
    let narrow_h = cfg.h / std::f64::consts::SQRT_2;
    let wide = local_linear_fit(&weighted_sums(buffer, t, cfg.h, cfg), cfg.h)?;
    let narrow = local_linear_fit(&weighted_sums(buffer, t, narrow_h, cfg), narrow_h)?;
    Ok(2.0 * narrow.level - wide.level)
}
