//! Special functions, distribution functions and quadrature.
//!
//! Everything here is pure and allocation-free apart from the node tables of
//! [`GaussLegendre`]. Target accuracy for the `f64` CDFs is `1e-12` absolute.

mod distributions;
mod quadrature;
mod special;

pub use distributions::{
    normal_cdf, normal_pdf, normal_quantile, normal_sf, student_t_cdf, student_t_pdf, student_t_quantile,
    student_t_sf,
};
pub use quadrature::{integrate, GaussLegendre, Integrator, QuadratureRule, QuadratureSpec};
pub use special::{erfc, ln_gamma, reg_inc_beta};

use crate::{Error, Real, Result};

/// A probability in `[0, 1]`. NaN is rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability<T>(T);

impl<T: Real> Probability<T> {
    pub fn new(value: T) -> Result<Self> {
        if value.is_nan() || value < T::zero() || value > T::one() {
            return Err(Error::domain(format!("probability out of [0, 1]: {value}")));
        }
        Ok(Self(value))
    }

    /// Clamps values that left `[0, 1]` through rounding. NaN is still an error.
    pub(crate) fn saturating(value: T) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::domain("probability is NaN"));
        }
        Ok(Self(value.max(T::zero()).min(T::one())))
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }

    /// `1 - p`.
    pub fn complement(self) -> Self {
        Self(T::one() - self.0)
    }
}

impl From<Probability<f64>> for f64 {
    fn from(p: Probability<f64>) -> f64 {
        p.0
    }
}

pub(crate) fn require_finite<T: Real>(x: T, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be finite, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_rejects_nan_and_out_of_range() {
        assert!(Probability::new(f64::NAN).is_err());
        assert!(Probability::new(-1e-300).is_err());
        assert!(Probability::new(1.0 + 1e-15).is_err());
        assert_eq!(Probability::new(0.25).unwrap().get(), 0.25);
        assert_eq!(Probability::saturating(1.0 + 1e-16).unwrap().get(), 1.0);
        assert!(Probability::<f64>::saturating(f64::NAN).is_err());
    }
}
