//! Generalized extreme-value tails for residual maxima.
//!
//! Block maxima of absolute residuals are fitted by probability-weighted
//! moments (Hosking, Wallis and Wood plotting positions), then rescaled
//! from the fitted block length to the monitored block length with the
//! max-stability relations. Shapes within 1e-6 of zero are treated as
//! Gumbel throughout so both branches agree where they meet.

use crate::error::{Error, Result};
use crate::math::gamma;

/// Shape within this of zero switches every formula to its Gumbel limit.
pub const GUMBEL_EPS: f64 = 1e-6;

const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;
const LN_2: f64 = std::f64::consts::LN_2;
const LN_3: f64 = 1.098_612_288_668_109_8;

/// Extreme-value parameters: shape `gamma`, location `mu`, scale `sigma`.
/// Positive shape means a heavy upper tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevParams {
    pub gamma: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl GevParams {
    pub fn new(gamma: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || !gamma.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "bad extreme-value parameters: gamma {gamma}, mu {mu}, sigma {sigma}"
            )));
        }
        Ok(GevParams { gamma, mu, sigma })
    }
}

/// Distribution function at `x`.
///
/// Outside the support the value saturates: 0 left of the lower endpoint
/// (positive shape), 1 right of the upper endpoint (negative shape).
pub fn gev_cdf(p: &GevParams, x: f64) -> f64 {
    let z = (x - p.mu) / p.sigma;
    if p.gamma.abs() < GUMBEL_EPS {
        return (-(-z).exp()).exp();
    }
    let w = 1.0 + p.gamma * z;
    if w <= 0.0 {
        return if p.gamma > 0.0 { 0.0 } else { 1.0 };
    }
    // w^(-1/gamma) through the log keeps tiny shapes stable
    (-(-w.ln() / p.gamma).exp()).exp()
}

/// Quantile at probability `q` in (0, 1).
pub fn gev_quantile(p: &GevParams, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidProbability { p: q });
    }
    let l = (-q.ln()).ln(); // log of the standard Gumbel transform
    if p.gamma.abs() < GUMBEL_EPS {
        return Ok(p.mu - p.sigma * l);
    }
    // ((-ln q)^(-gamma) - 1)/gamma, with expm1 so the two branches meet
    Ok(p.mu + p.sigma * (-p.gamma * l).exp_m1() / p.gamma)
}

/// Maxima of |x| over consecutive complete blocks of length `r`; a partial
/// tail block is dropped. Needs at least two complete blocks.
pub fn block_maxima(xs: &[f64], r: usize) -> Result<Vec<f64>> {
    if r < 2 {
        return Err(Error::InvalidConfig(format!("block length {r} below 2")));
    }
    let blocks = xs.len() / r;
    if blocks < 2 {
        return Err(Error::InsufficientBlocks { have: blocks, need: 2 });
    }
    Ok(xs
        .chunks_exact(r)
        .map(|b| b.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect())
}

/// Probability-weighted-moment fit on block maxima.
///
/// Sample PWMs use plotting positions (i - 0.35)/m on the ascending order
/// statistics; the shape comes from the Hosking, Wallis and Wood rational
/// approximation, and the reported `gamma` is the negative of their k, so
/// heavy tails come out positive.
pub fn fit_pwm(maxima: &[f64]) -> Result<GevParams> {
    if maxima.len() < 5 {
        return Err(Error::TooFewMaxima { have: maxima.len(), need: 5 });
    }
    let mut sorted = maxima.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len() as f64;
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::DegenerateSample);
    }

    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (i, x) in sorted.iter().enumerate() {
        let p = (i as f64 + 1.0 - 0.35) / m;
        b0 += x;
        b1 += p * x;
        b2 += p * p * x;
    }
    b0 /= m;
    b1 /= m;
    b2 /= m;

    let c = (2.0 * b1 - b0) / (3.0 * b2 - b0) - LN_2 / LN_3;
    let k = 7.8590 * c + 2.9554 * c * c;

    let (mu, sigma) = if k.abs() < GUMBEL_EPS {
        let sigma = (2.0 * b1 - b0) / LN_2;
        (b0 - EULER_MASCHERONI * sigma, sigma)
    } else {
        let g1 = gamma(1.0 + k);
        let sigma = (2.0 * b1 - b0) * k / (g1 * -(-k * LN_2).exp_m1());
        (b0 + sigma * (g1 - 1.0) / k, sigma)
    };
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::ScaleNotPositive { sigma });
    }
    GevParams::new(-k, mu, sigma)
}

/// Moves parameters fitted at block length `r` to block length `n` by
/// max-stability: with s = n/r, the scale grows by s^gamma and the
/// location by sigma (s^gamma - 1)/gamma (sigma ln s in the Gumbel limit).
pub fn scale_params(p: &GevParams, r: usize, n: usize) -> Result<GevParams> {
    if r == 0 || n == 0 {
        return Err(Error::InvalidConfig("block lengths must be positive".into()));
    }
    if r == n {
        return Ok(*p);
    }
    let ln_s = (n as f64 / r as f64).ln();
    if p.gamma.abs() < GUMBEL_EPS {
        return GevParams::new(p.gamma, p.mu + p.sigma * ln_s, p.sigma);
    }
    let grow = (p.gamma * ln_s).exp();
    GevParams::new(
        p.gamma,
        p.mu + p.sigma * (p.gamma * ln_s).exp_m1() / p.gamma,
        p.sigma * grow,
    )
}
