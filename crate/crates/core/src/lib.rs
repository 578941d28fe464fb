//! Decision criteria for interval ("thick") null hypotheses `|mu - mu0| <= mpsd`,
//! including the prior-predictive thick t-test, together with a seeded Monte
//! Carlo engine and the analytics that turn simulated cases into error-rate
//! tables.
//!
//! The numerical layers ([`numerics`], [`priors`], [`decisions`]) are generic
//! over the scalar type through [`Real`]; the simulation and analytics layers
//! work in `f64`. Concrete aliases for `f64` are exported at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub mod analytics;
pub mod decisions;
mod error;
pub mod numerics;
pub mod priors;
pub mod sim;

pub use error::{Error, Result};

/// Floating-point scalar usable by the numerical core (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

pub type ProbabilityF64 = numerics::Probability<f64>;
pub type QuadratureSpecF64 = numerics::QuadratureSpec<f64>;
pub type IntegratorF64 = numerics::Integrator<f64>;
pub type ThickNullF64 = priors::ThickNull<f64>;
pub type PriorF64 = priors::Prior<f64>;
pub type SampleStatsF64 = decisions::SampleStats<f64>;
pub type DecisionConfigF64 = decisions::DecisionConfig<f64>;
pub type MethodF64 = decisions::Method<f64>;
pub type VerdictF64 = decisions::Verdict<f64>;
