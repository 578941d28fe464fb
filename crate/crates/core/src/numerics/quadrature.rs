use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    GaussLegendre,
    AdaptiveSimpson,
}

/// Integration rule plus accuracy target.
///
/// For Gauss-Legendre `nodes` is the number of nodes per panel; for adaptive
/// Simpson it is the number of initial panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub rule: QuadratureRule,
    pub nodes: usize,
    pub abs_tol: T,
}

impl<T: Real> QuadratureSpec<T> {
    pub fn new(rule: QuadratureRule, nodes: usize, abs_tol: T) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::domain(format!("quadrature needs at least 2 nodes, got {nodes}")));
        }
        if !(abs_tol > T::zero() && abs_tol <= T::lit(1e-6)) {
            return Err(Error::domain(format!("quadrature abs_tol must be in (0, 1e-6], got {abs_tol}")));
        }
        Ok(Self { rule, nodes, abs_tol })
    }

    pub fn gauss_legendre(nodes: usize) -> Result<Self> {
        Self::new(QuadratureRule::GaussLegendre, nodes, T::lit(1e-10))
    }
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        Self { rule: QuadratureRule::GaussLegendre, nodes: 64, abs_tol: T::lit(1e-10) }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Roots of `P_n` by Newton iteration from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("Gauss-Legendre needs n >= 2, got {n}")));
        }
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let n_t = T::lit(n as f64);
        let tol = T::epsilon() * T::lit(4.0);
        for i in 0..n.div_ceil(2) {
            let mut z = (T::PI() * (T::lit(i as f64) + T::lit(0.75)) / (n_t + T::lit(0.5))).cos();
            let mut dp = T::one();
            let mut converged = false;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z = z - dz;
                if dz.abs() <= tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Convergence { what: "Gauss-Legendre node", iterations: 100 });
            }
            let (_, d) = legendre_with_derivative(n, z);
            dp = if d.is_finite() { d } else { dp };
            let w = T::lit(2.0) / ((T::one() - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Single-panel rule mapped to `[lo, hi]`.
    pub fn apply<F: FnMut(T) -> T>(&self, mut f: F, lo: T, hi: T) -> T {
        let half = (hi - lo) * T::lit(0.5);
        let mid = (hi + lo) * T::lit(0.5);
        let sum: T = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(mid + half * x)).sum();
        sum * half
    }
}

fn legendre_with_derivative<T: Real>(n: usize, z: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = z;
    for k in 2..=n {
        let k_t = T::lit(k as f64);
        let p2 = ((T::lit(2.0) * k_t - T::one()) * z * p1 - (k_t - T::one()) * p0) / k_t;
        p0 = p1;
        p1 = p2;
    }
    let n_t = T::lit(n as f64);
    let d = n_t * (z * p1 - p0) / (z * z - T::one());
    (p1, d)
}

const MAX_DEPTH: usize = 40;

/// A prepared integration rule; node tables are computed once.
#[derive(Debug, Clone)]
pub struct Integrator<T> {
    spec: QuadratureSpec<T>,
    gauss: Option<GaussLegendre<T>>,
}

impl<T: Real> Integrator<T> {
    pub fn new(spec: QuadratureSpec<T>) -> Result<Self> {
        let spec = QuadratureSpec::new(spec.rule, spec.nodes, spec.abs_tol)?;
        let gauss = match spec.rule {
            QuadratureRule::GaussLegendre => Some(GaussLegendre::new(spec.nodes)?),
            QuadratureRule::AdaptiveSimpson => None,
        };
        Ok(Self { spec, gauss })
    }

    pub fn spec(&self) -> &QuadratureSpec<T> {
        &self.spec
    }

    /// `∫_lo^hi f`. A Gauss-Legendre panel is accepted once it agrees with the
    /// sum over its two halves to within the (depth-scaled) tolerance.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F, lo: T, hi: T) -> Result<T> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain("integration bounds must be finite"));
        }
        if lo > hi {
            return Err(Error::domain(format!("integration bounds reversed: lo={lo} > hi={hi}")));
        }
        if lo == hi {
            return Ok(T::zero());
        }
        let value = match &self.gauss {
            Some(gl) => {
                let whole = gl.apply(&mut f, lo, hi);
                gauss_adaptive(gl, &mut f, lo, hi, whole, self.spec.abs_tol, 0)?
            }
            None => {
                let panels = self.spec.nodes;
                let width = (hi - lo) / T::lit(panels as f64);
                let tol = self.spec.abs_tol / T::lit(panels as f64);
                let mut total = T::zero();
                for i in 0..panels {
                    let a = lo + width * T::lit(i as f64);
                    let b = if i + 1 == panels { hi } else { a + width };
                    total = total + simpson_panel(&mut f, a, b, tol)?;
                }
                total
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::domain("integrand is not finite on the interval"))
        }
    }
}

fn accepted<T: Real>(diff: T, estimate: T, tol: T) -> bool {
    diff <= tol || diff <= T::epsilon() * T::lit(64.0) * estimate.abs()
}

fn gauss_adaptive<T: Real, F: FnMut(T) -> T>(
    gl: &GaussLegendre<T>,
    f: &mut F,
    lo: T,
    hi: T,
    whole: T,
    tol: T,
    depth: usize,
) -> Result<T> {
    let mid = (lo + hi) * T::lit(0.5);
    let left = gl.apply(&mut *f, lo, mid);
    let right = gl.apply(&mut *f, mid, hi);
    let sum = left + right;
    if accepted((sum - whole).abs(), sum, tol) {
        return Ok(sum);
    }
    if depth >= MAX_DEPTH || !sum.is_finite() {
        return Err(Error::Convergence { what: "adaptive Gauss-Legendre", iterations: depth });
    }
    let half_tol = tol * T::lit(0.5);
    Ok(gauss_adaptive(gl, f, lo, mid, left, half_tol, depth + 1)?
        + gauss_adaptive(gl, f, mid, hi, right, half_tol, depth + 1)?)
}

fn simpson_panel<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T, tol: T) -> Result<T> {
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * T::lit(0.5);
    let fm = f(m);
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<T: Real, F: FnMut(T) -> T>(
    f: &mut F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: usize,
) -> Result<T> {
    let m = (a + b) * T::lit(0.5);
    let lm = (a + m) * T::lit(0.5);
    let rm = (m + b) * T::lit(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / T::lit(6.0) * (fa + T::lit(4.0) * flm + fm);
    let right = (b - m) / T::lit(6.0) * (fm + T::lit(4.0) * frm + fb);
    let delta = left + right - whole;
    // Richardson: error of the refined estimate is about delta / 15
    if accepted(delta.abs(), left + right, T::lit(15.0) * tol) {
        return Ok(left + right + delta / T::lit(15.0));
    }
    if depth >= MAX_DEPTH || !delta.is_finite() {
        return Err(Error::Convergence { what: "adaptive Simpson", iterations: depth });
    }
    let half_tol = tol * T::lit(0.5);
    Ok(simpson_recurse(f, a, m, fa, flm, fm, left, half_tol, depth + 1)?
        + simpson_recurse(f, m, b, fm, frm, fb, right, half_tol, depth + 1)?)
}

/// One-shot integration; builds the rule from `spec` on every call.
pub fn integrate<T: Real, F: FnMut(T) -> T>(f: F, lo: T, hi: T, spec: &QuadratureSpec<T>) -> Result<T> {
    Integrator::new(*spec)?.integrate(f, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{normal_cdf, normal_pdf};
    use approx::assert_abs_diff_eq;

    fn both_rules() -> [QuadratureSpec<f64>; 2] {
        [
            QuadratureSpec::default(),
            QuadratureSpec::new(QuadratureRule::AdaptiveSimpson, 8, 1e-10).unwrap(),
        ]
    }

    #[test]
    fn trivial_integrals() {
        for spec in both_rules() {
            assert_abs_diff_eq!(integrate(|x| x * x, 0.0, 1.0, &spec).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(integrate(|_| 1.0, -2.5, 4.0, &spec).unwrap(), 6.5, epsilon = 1e-12);
            assert_eq!(integrate(|x| x, 3.0, 3.0, &spec).unwrap(), 0.0);
        }
    }

    #[test]
    fn normal_density_mass_matches_cdf_difference() {
        let expected = normal_cdf(5.0).unwrap().get() - normal_cdf(-5.0).unwrap().get();
        assert_abs_diff_eq!(expected, 0.999_999_426_696_856_2, epsilon = 1e-15);
        for spec in both_rules() {
            assert_abs_diff_eq!(integrate(normal_pdf, -5.0, 5.0, &spec).unwrap(), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn reversed_bounds_are_a_domain_error() {
        let err = integrate(|x| x, 1.0, 0.0, &QuadratureSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(QuadratureRule::GaussLegendre, 1, 1e-8).is_err());
        assert!(QuadratureSpec::new(QuadratureRule::GaussLegendre, 16, 1e-5).is_err());
        assert!(QuadratureSpec::new(QuadratureRule::GaussLegendre, 16, 0.0).is_err());
        assert!(QuadratureSpec::new(QuadratureRule::GaussLegendre, 16, 1e-6).is_ok());
    }

    #[test]
    fn non_smooth_integrand_exhausts_depth() {
        let spec = QuadratureSpec::new(QuadratureRule::GaussLegendre, 2, 1e-12).unwrap();
        // 1/sqrt(x) style singularity at an interior point is never resolved to 1e-12 by 2-node panels
        let err = integrate(|x: f64| 1.0 / (x - 0.3).abs().sqrt(), 0.0, 1.0, &spec).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }), "{err:?}");
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [2, 5, 32, 64] {
            let gl = GaussLegendre::<f64>::new(n).unwrap();
            assert_abs_diff_eq!(gl.weights().iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            assert!(gl.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }
}
