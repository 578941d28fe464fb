use super::special::{erfc, ln_gamma_unchecked, reg_inc_beta_split};
use super::{require_finite, Probability};
use crate::{Error, Real, Result};

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf<T: Real>(x: T) -> Result<Probability<T>> {
    require_finite(x, "normal_cdf argument")?;
    Probability::saturating(T::lit(0.5) * erfc(-x / T::SQRT_2())?)
}

/// Upper tail `1 - Φ(x)`, computed without cancellation.
pub fn normal_sf<T: Real>(x: T) -> Result<Probability<T>> {
    normal_cdf(-x)
}

pub fn normal_pdf<T: Real>(x: T) -> T {
    (-(x * x) * T::lit(0.5)).exp() / (T::lit(2.0) * T::PI()).sqrt()
}

// Acklam's rational approximation; refined below.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_690e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn horner<T: Real>(coef: &[f64], x: T) -> T {
    coef.iter().fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// Inverse standard normal CDF for `p` in the open interval `(0, 1)`.
pub fn normal_quantile<T: Real>(p: Probability<T>) -> Result<T> {
    let p = p.get();
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::domain(format!("normal_quantile requires 0 < p < 1, got {p}")));
    }
    let half = T::lit(0.5);
    if p > half {
        // 1 - p is exact for p >= 0.5
        return Ok(-lower_normal_quantile(T::one() - p)?);
    }
    lower_normal_quantile(p)
}

fn lower_normal_quantile<T: Real>(p: T) -> Result<T> {
    let p_low = T::lit(0.02425);
    let mut x = if p < p_low {
        let q = (T::lit(-2.0) * p.ln()).sqrt();
        horner(&ACKLAM_C, q) / (horner(&ACKLAM_D, q) * q + T::one())
    } else {
        let q = p - T::lit(0.5);
        let r = q * q;
        horner(&ACKLAM_A, r) * q / (horner(&ACKLAM_B, r) * r + T::one())
    };
    // Halley steps against the accurate CDF.
    let sqrt_2pi = (T::lit(2.0) * T::PI()).sqrt();
    for _ in 0..3 {
        let e = normal_cdf(x)?.get() - p;
        let u = e * sqrt_2pi * (x * x * T::lit(0.5)).exp();
        let step = u / (T::one() + x * u * T::lit(0.5));
        x = x - step;
        if step.abs() <= T::epsilon() * x.abs().max(T::one()) {
            break;
        }
    }
    Ok(x)
}

fn check_df<T: Real>(df: T) -> Result<()> {
    if !(df > T::zero()) || df.is_nan() {
        return Err(Error::domain(format!("degrees of freedom must be > 0, got {df}")));
    }
    Ok(())
}

/// Half of `I_{df/(df+x^2)}(df/2, 1/2)`: the probability beyond `|x|` in one tail.
fn student_t_one_tail<T: Real>(x: T, df: T) -> Result<T> {
    if df.is_infinite() {
        return Ok(normal_cdf(-x.abs())?.get());
    }
    let x2 = x * x;
    let denom = df + x2;
    let half = T::lit(0.5);
    Ok(half * reg_inc_beta_split(df * half, half, df / denom, x2 / denom)?)
}

/// Student-t CDF with `df > 0` degrees of freedom.
pub fn student_t_cdf<T: Real>(x: T, df: T) -> Result<Probability<T>> {
    check_df(df)?;
    require_finite(x, "student_t_cdf argument")?;
    let tail = student_t_one_tail(x, df)?;
    Probability::saturating(if x > T::zero() { T::one() - tail } else { tail })
}

/// Student-t upper tail `1 - F(x)`, exact in the far right tail.
pub fn student_t_sf<T: Real>(x: T, df: T) -> Result<Probability<T>> {
    student_t_cdf(-x, df)
}

pub fn student_t_pdf<T: Real>(x: T, df: T) -> Result<T> {
    check_df(df)?;
    let half = T::lit(0.5);
    let ln_norm = ln_gamma_unchecked((df + T::one()) * half)
        - ln_gamma_unchecked(df * half)
        - half * (df * T::PI()).ln();
    Ok((ln_norm - (df + T::one()) * half * (x * x / df).ln_1p()).exp())
}

/// Student-t quantile via bracketed Newton iteration on [`student_t_cdf`].
pub fn student_t_quantile<T: Real>(p: Probability<T>, df: T) -> Result<T> {
    check_df(df)?;
    let p = p.get();
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::domain(format!("student_t_quantile requires 0 < p < 1, got {p}")));
    }
    let half = T::lit(0.5);
    if p == half {
        return Ok(T::zero());
    }
    if p < half {
        return Ok(-upper_t_quantile(p, df)?);
    }
    upper_t_quantile(T::one() - p, df)
}

/// Solves `P(T > x) = tail` for `x > 0`, `tail < 1/2`.
fn upper_t_quantile<T: Real>(tail: T, df: T) -> Result<T> {
    let mut lo = T::zero();
    let mut hi = T::one();
    while student_t_one_tail(hi, df)? > tail {
        lo = hi;
        hi = hi + hi;
        if !hi.is_finite() {
            return Err(Error::Convergence { what: "t quantile bracket", iterations: 0 });
        }
    }
    let mut x = (lo + hi) * T::lit(0.5);
    const MAX_ITER: usize = 200;
    for _ in 0..MAX_ITER {
        let f = student_t_one_tail(x, df)? - tail;
        if f == T::zero() {
            return Ok(x);
        }
        // tail is decreasing in x
        if f > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let slope = -student_t_pdf(x, df)?;
        let mut next = x - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = (lo + hi) * T::lit(0.5);
        }
        if (next - x).abs() <= T::epsilon() * T::lit(4.0) * x.abs() || hi - lo <= T::epsilon() * hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Convergence { what: "t quantile", iterations: MAX_ITER })
}
