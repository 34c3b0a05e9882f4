//! One-sided smoothing kernels.
//!
//! All kernels here live on the closed support [-1, 0]: estimates at time t
//! may only weight observations at or before t. A [`Kernel`] bundles the
//! weight function with its first four support moments, which downstream
//! code needs to form equivalent and bias-cancelling weights.

use crate::error::{Error, Result};
use crate::math::adaptive_simpson;

const MOMENT_DET_MIN: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-10;
const SQRT2: f64 = std::f64::consts::SQRT_2;

/// A nonnegative weight function on [-1, 0] together with its support
/// moments `[k0, k1, k2, k3]` and a Lipschitz bound on the open support.
#[derive(Clone, Copy)]
pub struct Kernel {
    eval: fn(f64) -> f64,
    moments: [f64; 4],
    lipschitz: f64,
}

impl Kernel {
    pub fn new(eval: fn(f64) -> f64, moments: [f64; 4], lipschitz: f64) -> Self {
        Kernel { eval, moments, lipschitz }
    }

    /// Weight at `x`; identically zero outside [-1, 0] regardless of the
    /// wrapped function.
    pub fn eval(&self, x: f64) -> f64 {
        if (-1.0..=0.0).contains(&x) {
            (self.eval)(x)
        } else {
            0.0
        }
    }

    pub fn moments(&self) -> [f64; 4] {
        self.moments
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn moment_det(&self) -> f64 {
        let [k0, _, k2, _] = self.moments;
        k0 * k2 - self.moments[1] * self.moments[1]
    }
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernel")
            .field("moments", &self.moments)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

fn quartic(x: f64) -> f64 {
    let s = 1.0 - x * x;
    1.875 * s * s
}

/// The quartic kernel 15/8 (1 - x^2)^2 restricted to [-1, 0].
///
/// Moments are exact rationals (1, -5/16, 1/7, -5/64), verified against
/// quadrature in the tests. The Lipschitz bound 5/sqrt(3) is attained at
/// x = -1/sqrt(3).
pub fn quartic_kernel() -> Kernel {
    Kernel::new(
        quartic,
        [1.0, -5.0 / 16.0, 1.0 / 7.0, -5.0 / 64.0],
        5.0 / 3f64.sqrt(),
    )
}

fn checked_det(k: &Kernel) -> Result<f64> {
    let det = k.moment_det();
    if det.abs() < MOMENT_DET_MIN {
        return Err(Error::DegenerateMoments { det });
    }
    Ok(det)
}

fn equivalent_at(k: &Kernel, det: f64, x: f64) -> f64 {
    let [_, k1, k2, _] = k.moments;
    (k2 - k1 * x) / det * k.eval(x)
}

/// Equivalent kernel of the local-linear fit built on `k`: the asymptotic
/// shape of the fit's weights, (k2 - k1 x) / (k0 k2 - k1^2) * k(x).
///
/// Integrates to 1 with vanishing first moment. Errors when the moment
/// matrix is numerically singular.
pub fn equivalent_kernel(k: &Kernel, x: f64) -> Result<f64> {
    let det = checked_det(k)?;
    Ok(equivalent_at(k, det, x))
}

/// Bias-cancelling combination of two equivalent kernels at bandwidth ratio
/// sqrt(2): 2 sqrt(2) Kbar(sqrt(2) x) - Kbar(x).
///
/// Both the first and second support moments vanish, so a fit weighted by
/// this kernel has no second-order smoothing bias.
pub fn jackknife_kernel(k: &Kernel, x: f64) -> Result<f64> {
    let det = checked_det(k)?;
    Ok(jackknife_at(k, det, x))
}

fn jackknife_at(k: &Kernel, det: f64, x: f64) -> f64 {
    2.0 * SQRT2 * equivalent_at(k, det, SQRT2 * x) - equivalent_at(k, det, x)
}

/// L2 norms of the bias-cancelling kernel and of its interior derivative,
/// by adaptive quadrature split at the inner support edge -1/sqrt(2).
///
/// The derivative is taken by central differences (step 1e-6) and the
/// derivative integral trims 2e-6 off each support end, since the kernel
/// steps to zero there and a difference quotient across the edge is
/// meaningless.
pub fn kernel_l2_norms(k: &Kernel) -> Result<(f64, f64)> {
    let det = checked_det(k)?;
    let split = -1.0 / SQRT2;

    let sq = |x: f64| {
        let v = jackknife_at(k, det, x);
        v * v
    };
    let norm_sq = adaptive_simpson(&sq, -1.0, split, QUAD_TOL)
        + adaptive_simpson(&sq, split, 0.0, QUAD_TOL);

    const STEP: f64 = 1e-6;
    let dsq = |x: f64| {
        let d = (jackknife_at(k, det, x + STEP) - jackknife_at(k, det, x - STEP)) / (2.0 * STEP);
        d * d
    };
    let trim = 2.0 * STEP;
    let deriv_sq = adaptive_simpson(&dsq, -1.0 + trim, split, 1e-8)
        + adaptive_simpson(&dsq, split, -trim, 1e-8);

    Ok((norm_sq.sqrt(), deriv_sq.sqrt()))
}
