use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Kernel moment matrix is singular; the equivalent kernel is undefined.
    #[error("degenerate kernel moments: |k0*k2 - k1^2| = {det:e} < 1e-12")]
    DegenerateMoments { det: f64 },

    /// Local fit has no usable solution. `det` is 0.0 when the window held
    /// fewer than two usable points.
    #[error("singular window: {usable} usable point(s), design det {det:e}")]
    SingularWindow { usable: usize, det: f64 },

    #[error("need at least {need} complete blocks, have {have}")]
    InsufficientBlocks { have: usize, need: usize },

    #[error("need at least {need} block maxima for a tail fit, have {have}")]
    TooFewMaxima { have: usize, need: usize },

    #[error("degenerate sample: all block maxima are equal")]
    DegenerateSample,

    #[error("tail fit produced a non-positive scale {sigma:e}")]
    ScaleNotPositive { sigma: f64 },

    #[error("probability {p} outside (0, 1)")]
    InvalidProbability { p: f64 },

    #[error("no bandwidth candidate admits a non-singular fit at every scored point")]
    NoViableBandwidth,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
