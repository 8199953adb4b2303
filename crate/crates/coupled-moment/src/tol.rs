//! Named numerical thresholds shared across the crate.

/// Floor on a top coefficient for it to count as a volume form.
pub const EPS_VOL: f64 = 1e-12;

/// Grid averages of mean-zero fields.
pub const MEAN_ZERO: f64 = 1e-12;

/// Components of moment-map values and residuals integrate to zero within this.
pub const INTEGRAL_ZERO: f64 = 1e-8;

/// Map inversion by fixed-point iteration.
pub const INVERSE_TOL: f64 = 1e-10;
pub const INVERSE_MAX_ITER: usize = 200;

/// Relative step used for finite-difference linearizations.
pub const FD_STEP: f64 = 1e-6;
