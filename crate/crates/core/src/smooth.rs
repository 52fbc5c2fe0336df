//! Smooth maps at sample scale, the cutoff functions built from `exp(-1/t)`,
//! adaptive quadrature and finite-difference derivative probes.
//!
//! A [`SmoothMap`] carries no symbolic representation. Smoothness is never
//! proven here; the probes in this module are what the rest of the crate
//! uses to certify it on grids.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

pub type ScalarKernel<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type VectorKernel<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothnessClass {
    Analytic,
    Smooth,
    PiecewiseSmooth,
}

#[derive(Clone)]
enum Kernel<T> {
    Scalar(ScalarKernel<T>),
    Vector { codim: usize, f: VectorKernel<T> },
}

/// A callable map `R^n -> R^m` on a rectangular domain box.
#[derive(Clone)]
pub struct SmoothMap<T> {
    domain: Vec<(T, T)>,
    kernel: Kernel<T>,
    class: SmoothnessClass,
}

impl<T: Real> fmt::Debug for SmoothMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("domain", &self.domain)
            .field("codomain_dim", &self.codomain_dim())
            .field("class", &self.class)
            .finish()
    }
}

impl<T: Real> SmoothMap<T> {
    pub fn scalar<F>(domain: Vec<(T, T)>, class: SmoothnessClass, f: F) -> Self
    where
        F: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        assert!(!domain.is_empty(), "domain dimension must be positive");
        Self {
            domain,
            kernel: Kernel::Scalar(Arc::new(f)),
            class,
        }
    }

    /// A scalar function of one variable on `[lo, hi]` (either end may be infinite).
    pub fn curve<F>(lo: T, hi: T, class: SmoothnessClass, f: F) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self::scalar(vec![(lo, hi)], class, move |x| f(x[0]))
    }

    pub fn vector<F>(domain: Vec<(T, T)>, codim: usize, class: SmoothnessClass, f: F) -> Self
    where
        F: Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    {
        assert!(!domain.is_empty() && codim > 0);
        if codim == 1 {
            return Self::scalar(domain, class, move |x| f(x)[0]);
        }
        Self {
            domain,
            kernel: Kernel::Vector {
                codim,
                f: Arc::new(f),
            },
            class,
        }
    }

    /// The whole real line in every coordinate.
    pub fn unbounded(dim: usize) -> Vec<(T, T)> {
        vec![(T::neg_infinity(), T::infinity()); dim]
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn codomain_dim(&self) -> usize {
        match &self.kernel {
            Kernel::Scalar(_) => 1,
            Kernel::Vector { codim, .. } => *codim,
        }
    }

    pub fn domain(&self) -> &[(T, T)] {
        &self.domain
    }

    pub fn class(&self) -> SmoothnessClass {
        self.class
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.kernel, Kernel::Scalar(_))
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.domain.len()
            && x.iter().zip(&self.domain).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        match &self.kernel {
            Kernel::Scalar(f) => vec![f(x)],
            Kernel::Vector { f, .. } => f(x),
        }
    }

    /// The scalar kernel, for hot loops. Fails for vector-valued maps.
    pub fn scalar_kernel(&self) -> Result<ScalarKernel<T>> {
        match &self.kernel {
            Kernel::Scalar(f) => Ok(f.clone()),
            Kernel::Vector { codim, .. } => Err(Error::Contract(format!(
                "expected a scalar map, got codomain dimension {codim}"
            ))),
        }
    }

    pub fn value(&self, x: &[T]) -> Result<T> {
        Ok(self.scalar_kernel()?(x))
    }

    /// Evaluates a scalar curve. Panics on vector-valued maps.
    pub fn at(&self, t: T) -> T {
        match &self.kernel {
            Kernel::Scalar(f) => f(&[t]),
            Kernel::Vector { .. } => panic!("`at` needs a scalar curve"),
        }
    }

    /// Freezes the first coordinate: `x -> f(t, x)`.
    pub fn slice(&self, t: T) -> Result<SmoothMap<T>> {
        if self.domain.len() < 2 {
            return Err(Error::Contract("slice needs a domain of dimension >= 2".into()));
        }
        let f = self.scalar_kernel()?;
        let rest = self.domain[1..].to_vec();
        Ok(SmoothMap::scalar(rest, self.class, move |x| {
            let mut full = Vec::with_capacity(x.len() + 1);
            full.push(t);
            full.extend_from_slice(x);
            f(&full)
        }))
    }
}

/// `exp(-1/t)` for `t > 0`, zero otherwise.
#[inline]
pub fn flat_bump<T: Real>(t: T) -> T {
    if t <= T::zero() {
        T::zero()
    } else {
        (-t.recip()).exp()
    }
}

/// The flat bump: zero on `t <= 0`, `exp(-1/t)` for `t > 0`. Every
/// right-derivative at 0 vanishes.
pub fn make_flat_bump<T: Real>() -> SmoothMap<T> {
    SmoothMap::curve(T::neg_infinity(), T::infinity(), SmoothnessClass::Smooth, flat_bump)
}

/// Zero on `t <= 0` and strictly increasing on `(0, inf)`. Same formula as the
/// flat bump; kept separate because callers rely on different properties.
pub fn make_strict_ramp<T: Real>() -> SmoothMap<T> {
    SmoothMap::curve(T::neg_infinity(), T::infinity(), SmoothnessClass::Smooth, flat_bump)
}

/// Width of the flat zones of a [`StepFunction`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec<T> {
    epsilon: T,
}

impl<T: Real> BumpSpec<T> {
    pub fn new(epsilon: T) -> Result<Self> {
        if epsilon > T::zero() && epsilon < c(0.5) {
            Ok(Self { epsilon })
        } else {
            Err(Error::Precondition(format!("epsilon {epsilon} not in (0, 1/2)")))
        }
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }
}

impl<T: Real> Default for BumpSpec<T> {
    fn default() -> Self {
        Self { epsilon: c(0.25) }
    }
}

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];
const STEP_PANELS: usize = 1024;

/// Smooth nondecreasing step: 0 below `epsilon`, 1 above `1 - epsilon`.
///
/// Built as the normalized running integral of
/// `b(s) = phi(s - eps) * phi(1 - eps - s)`. The running integral is
/// tabulated at panel boundaries with a 5-point Gauss-Legendre rule and the
/// same rule finishes the partial panel, so the tabulated values and the
/// on-the-fly tail agree exactly at every knot.
#[derive(Clone, Debug)]
pub struct StepFunction<T> {
    epsilon: T,
    width: T,
    total: T,
    cumulative: Arc<Vec<T>>,
}

impl<T: Real> StepFunction<T> {
    pub fn new(spec: BumpSpec<T>) -> Self {
        let eps = spec.epsilon;
        let width = (T::one() - eps - eps) / c(STEP_PANELS as f64);
        let mut cumulative = Vec::with_capacity(STEP_PANELS + 1);
        let mut acc = T::zero();
        cumulative.push(acc);
        for k in 0..STEP_PANELS {
            let a = eps + width * c(k as f64);
            acc = acc + gl5(|s| Self::density(eps, s), a, a + width);
            cumulative.push(acc);
        }
        Self {
            epsilon: eps,
            width,
            total: acc,
            cumulative: Arc::new(cumulative),
        }
    }

    #[inline]
    fn density(eps: T, s: T) -> T {
        flat_bump(s - eps) * flat_bump(T::one() - eps - s)
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn value(&self, t: T) -> T {
        let eps = self.epsilon;
        if t <= eps {
            return T::zero();
        }
        if t >= T::one() - eps {
            return T::one();
        }
        let pos = ((t - eps) / self.width).floor();
        let k = pos.to_usize().unwrap_or(0).min(STEP_PANELS - 1);
        let a = eps + self.width * c(k as f64);
        let partial = self.cumulative[k] + gl5(|s| Self::density(eps, s), a, t);
        (partial / self.total).min(T::one())
    }
}

#[inline]
fn gl5<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T) -> T {
    let half = (b - a) * c(0.5);
    let mid = (a + b) * c(0.5);
    let mut acc = T::zero();
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        acc = acc + c::<T>(*w) * f(mid + half * c(*x));
    }
    acc * half
}

pub fn make_step<T: Real>(spec: BumpSpec<T>) -> SmoothMap<T> {
    let step = StepFunction::new(spec);
    SmoothMap::curve(T::neg_infinity(), T::infinity(), SmoothnessClass::Smooth, move |t| {
        step.value(t)
    })
}

/// Adaptive Simpson settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<T> {
    pub tol: T,
    /// Segments also pass when the error estimate is below this fraction
    /// of their own value.
    pub rel_tol: T,
    pub divergence_cap: T,
    pub max_depth: usize,
    /// Evaluation budget. Running out means the integrand is too steep or
    /// too noisy to resolve in floating point, which is reported as `+inf`.
    pub max_evals: usize,
}

impl<T: Real> Quadrature<T> {
    pub fn new(tol: T, divergence_cap: T) -> Self {
        Self {
            tol,
            rel_tol: T::zero(),
            divergence_cap,
            max_depth: 60,
            max_evals: 1 << 22,
        }
    }

    /// Integrates `f` over `[a, b]`. Returns `+inf` as soon as a sample is
    /// non-finite, the accepted partial sum exceeds the divergence cap or the
    /// evaluation budget runs out.
    pub fn integrate<F: Fn(T) -> T>(&self, f: F, a: T, b: T) -> T {
        struct Segment<T> {
            a: T,
            b: T,
            fa: T,
            fm: T,
            fb: T,
            whole: T,
            tol: T,
            depth: usize,
        }
        let simpson = |a: T, b: T, fa: T, fm: T, fb: T| (b - a) / c(6.0) * (fa + c::<T>(4.0) * fm + fb);
        let bad = |v: T| !v.is_finite();

        let (fa, fb) = (f(a), f(b));
        let m = (a + b) * c(0.5);
        let fm = f(m);
        if bad(fa) || bad(fb) || bad(fm) {
            return T::infinity();
        }
        let mut stack = vec![Segment {
            a,
            b,
            fa,
            fm,
            fb,
            whole: simpson(a, b, fa, fm, fb),
            tol: self.tol,
            depth: 0,
        }];
        let mut total = T::zero();
        let mut evals = 3;
        while let Some(s) = stack.pop() {
            evals += 2;
            if evals > self.max_evals {
                return T::infinity();
            }
            let m = (s.a + s.b) * c(0.5);
            let lm = (s.a + m) * c(0.5);
            let rm = (m + s.b) * c(0.5);
            let (flm, frm) = (f(lm), f(rm));
            if bad(flm) || bad(frm) {
                return T::infinity();
            }
            let left = simpson(s.a, m, s.fa, flm, s.fm);
            let right = simpson(m, s.b, s.fm, frm, s.fb);
            let refined = left + right;
            let diff = refined - s.whole;
            if s.depth >= self.max_depth || diff.abs() <= c::<T>(15.0) * s.tol.max(self.rel_tol * refined.abs()) {
                total = total + refined + diff / c(15.0);
                if total.abs() > self.divergence_cap {
                    return T::infinity();
                }
                continue;
            }
            // coarse estimates overshoot narrow peaks, so only accepted
            // pieces count toward the cap
            let tol = s.tol * c(0.5);
            stack.push(Segment {
                a: m,
                b: s.b,
                fa: s.fm,
                fm: frm,
                fb: s.fb,
                whole: right,
                tol,
                depth: s.depth + 1,
            });
            stack.push(Segment {
                a: s.a,
                b: m,
                fa: s.fa,
                fm: flm,
                fb: s.fm,
                whole: left,
                tol,
                depth: s.depth + 1,
            });
        }
        total
    }
}

/// Adaptive Simpson on a scalar curve. `+inf` signals divergence.
pub fn integrate<T: Real>(f: &SmoothMap<T>, a: T, b: T, tol: T, divergence_cap: T) -> Result<T> {
    if f.domain_dim() != 1 {
        return Err(Error::Contract("integrate needs a curve".into()));
    }
    let k = f.scalar_kernel()?;
    if !(tol > T::zero() && divergence_cap > T::zero()) {
        return Err(Error::Precondition("tol and divergence_cap must be positive".into()));
    }
    Ok(Quadrature::new(tol, divergence_cap).integrate(|x| k(&[x]), a, b))
}

pub const MAX_FD_ORDER: usize = 6;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Plain central difference of the given order with spacing `h`:
/// `h^-k * sum_j (-1)^j C(k, j) f(t0 + (k/2 - j) h)`.
pub fn central_difference<T, E, F>(f: F, t0: T, order: usize, h: T) -> std::result::Result<T, E>
where
    T: Real,
    F: Fn(T) -> std::result::Result<T, E>,
{
    if order == 0 {
        return f(t0);
    }
    let half = c::<T>(order as f64 * 0.5);
    let mut acc = T::zero();
    for j in 0..=order {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let w = c::<T>(sign * binomial(order, j));
        acc = acc + w * f(t0 + (half - c(j as f64)) * h)?;
    }
    Ok(acc / h.powi(order as i32))
}

/// Central difference at `h` and `h/2` combined by one Richardson step.
pub fn richardson_derivative<T, E, F>(f: F, t0: T, order: usize, h: T) -> std::result::Result<T, E>
where
    T: Real,
    F: Fn(T) -> std::result::Result<T, E>,
{
    if order == 0 {
        return f(t0);
    }
    let coarse = central_difference(&f, t0, order, h)?;
    let fine = central_difference(&f, t0, order, h * c(0.5))?;
    Ok((c::<T>(4.0) * fine - coarse) / c(3.0))
}

/// Order-`order` derivative of a scalar curve at `t0`.
pub fn fd_derivative<T: Real>(curve: &SmoothMap<T>, t0: T, order: usize, h: T) -> Result<T> {
    if curve.domain_dim() != 1 {
        return Err(Error::Contract("fd_derivative needs a curve".into()));
    }
    if order > MAX_FD_ORDER {
        return Err(Error::Precondition(format!("order {order} > {MAX_FD_ORDER}")));
    }
    if !(h > T::zero()) {
        return Err(Error::Precondition("step must be positive".into()));
    }
    let reach = h * c(order as f64 * 0.5);
    let (lo, hi) = curve.domain()[0];
    if t0 - reach < lo || t0 + reach > hi {
        return Err(Error::StencilOutsideDomain {
            lo: (t0 - reach).to_f64_lossy(),
            hi: (t0 + reach).to_f64_lossy(),
        });
    }
    let k = curve.scalar_kernel()?;
    richardson_derivative(|t| Ok::<T, Error>(k(&[t])), t0, order, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use proptest::prelude::*;

    fn simpson_oracle(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        // composite Simpson on a fixed grid, n even
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn flat_bump_values() {
        let phi = make_flat_bump::<f64>();
        assert_eq!(phi.at(0.0), 0.0);
        assert_eq!(phi.at(-5.0), 0.0);
        assert!((phi.at(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((phi.at(1.0) - 0.367_879).abs() < 1e-6);
    }

    #[test]
    fn flat_bump_is_flat_at_zero() {
        let phi = make_flat_bump::<f64>();
        for k in 1..=4 {
            let d = fd_derivative(&phi, 0.0, k, 1e-2).unwrap();
            assert!(d.abs() < 1e-6, "order {k}: {d}");
        }
    }

    #[test]
    fn ramp_values_and_monotonicity() {
        let r = make_strict_ramp::<f64>();
        assert_eq!(r.at(-1.0), 0.0);
        assert!((r.at(0.25) - (-4.0f64).exp()).abs() < 1e-15);
        assert!((r.at(0.25) - 0.018_315_6).abs() < 1e-7);
        assert!(r.at(0.3) > r.at(0.2));
    }

    #[test]
    fn bump_spec_bounds() {
        assert!(BumpSpec::new(0.0f64).is_err());
        assert!(BumpSpec::new(0.5f64).is_err());
        assert!(BumpSpec::new(0.1f64).is_ok());
        assert_eq!(BumpSpec::<f64>::default().epsilon(), 0.25);
    }

    #[test]
    fn step_boundary_values() {
        let rho = make_step(BumpSpec::<f64>::default());
        assert_eq!(rho.at(0.0), 0.0);
        assert_eq!(rho.at(0.25), 0.0);
        assert_eq!(rho.at(1.0), 1.0);
        assert_eq!(rho.at(0.75), 1.0);
    }

    #[test]
    fn step_matches_quadrature_oracle() {
        let eps = 0.25;
        let density = |s: f64| {
            let a = s - eps;
            let b = 1.0 - eps - s;
            if a <= 0.0 || b <= 0.0 {
                0.0
            } else {
                (-1.0 / a).exp() * (-1.0 / b).exp()
            }
        };
        let total = simpson_oracle(density, eps, 1.0 - eps, 200_000);
        let rho = make_step(BumpSpec::new(eps).unwrap());
        for &t in &[0.3, 0.4, 0.5, 0.6, 0.7] {
            let expected = simpson_oracle(density, eps, t, 200_000) / total;
            assert!((rho.at(t) - expected).abs() < 1e-10, "t={t}");
        }
        // the density is symmetric about 1/2
        assert!((rho.at(0.5) - 0.5).abs() < 1e-12);
        // frozen regression constant, from the oracle above
        assert!((rho.at(0.4) - 0.030_001_055_2).abs() < 1e-9, "{}", rho.at(0.4));
    }

    #[test]
    fn step_is_monotone_on_fine_grid() {
        let rho = make_step(BumpSpec::<f64>::default());
        let mut prev = rho.at(-0.5);
        for i in 0..=10_000 {
            let t = -0.5 + 2.0 * i as f64 / 10_000.0;
            let v = rho.at(t);
            assert!(v >= prev, "t={t}");
            assert!((0.0..=1.0).contains(&v));
            if !(0.25..=0.75).contains(&t) {
                assert!(v == 0.0 || v == 1.0);
            }
            prev = v;
        }
    }

    #[test]
    fn step_works_in_f32() {
        let rho = make_step(BumpSpec::<f32>::default());
        assert!((rho.at(0.5) - 0.5).abs() < 1e-5);
    }

    #[test]
    fn integrate_examples() {
        let one = SmoothMap::curve(0.0, 1.0, SmoothnessClass::Analytic, |_: f64| 1.0);
        let id = SmoothMap::curve(0.0, 1.0, SmoothnessClass::Analytic, |x: f64| x);
        let arctan = SmoothMap::curve(0.0, 1.0, SmoothnessClass::Analytic, |x: f64| 1.0 / (1.0 + x * x));
        assert!((integrate(&one, 0.0, 1.0, 1e-10, 1e6).unwrap() - 1.0).abs() < 1e-10);
        assert!((integrate(&id, 0.0, 1.0, 1e-10, 1e6).unwrap() - 0.5).abs() < 1e-10);
        let v = integrate(&arctan, 0.0, 1.0, 1e-10, 1e6).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn noisy_integrand_exhausts_budget() {
        // 1 - cos cancels near its zero, so 1/f is noise there
        let f = |x: f64| 1.0 / (1.0 - (2.0 * PI * (x - 0.7)).cos());
        let mut q = Quadrature::new(1e-9, 1e6);
        q.max_evals = 1 << 16;
        assert!(q.integrate(f, 0.0, 1.0).is_infinite());
        assert!((q.integrate(|x: f64| x, 0.0, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn integrate_detects_divergence() {
        let inv = SmoothMap::curve(0.0, 1.0, SmoothnessClass::Analytic, |x: f64| 1.0 / x);
        assert!(integrate(&inv, 0.0, 1.0, 1e-9, 1e6).unwrap().is_infinite());
        let inv_sq = SmoothMap::curve(0.0, 1.0, SmoothnessClass::Analytic, |x: f64| {
            1.0 / ((x - 1.0 / 3.0) * (x - 1.0 / 3.0))
        });
        assert!(integrate(&inv_sq, 0.0, 1.0, 1e-9, 1e6).unwrap().is_infinite());
    }

    #[test]
    fn integrate_rejects_vector_maps() {
        let v = SmoothMap::vector(vec![(0.0, 1.0)], 2, SmoothnessClass::Analytic, |x: &[f64]| vec![x[0], x[0]]);
        assert!(matches!(integrate(&v, 0.0, 1.0, 1e-9, 1e6), Err(Error::Contract(_))));
    }

    #[test]
    fn fd_examples() {
        let sq = SmoothMap::curve(-10.0, 10.0, SmoothnessClass::Analytic, |t: f64| t * t);
        assert!((fd_derivative(&sq, 1.0, 1, 1e-3).unwrap() - 2.0).abs() < 1e-6);
        let sin = SmoothMap::curve(-10.0, 10.0, SmoothnessClass::Analytic, f64::sin);
        assert!(fd_derivative(&sin, 0.0, 2, 1e-2).unwrap().abs() < 1e-4);
        assert_eq!(fd_derivative(&sin, 0.3, 0, 1e-2).unwrap(), 0.3f64.sin());
    }

    #[test]
    fn fd_errors() {
        let sq = SmoothMap::curve(0.0, 1.0, SmoothnessClass::Analytic, |t: f64| t * t);
        assert!(matches!(
            fd_derivative(&sq, 0.0, 1, 1e-3),
            Err(Error::StencilOutsideDomain { .. })
        ));
        assert!(fd_derivative(&sq, 0.5, 7, 1e-3).is_err());
        assert!(fd_derivative(&sq, 0.5, 1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn integrate_is_additive(split in 0.05f64..0.95, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let f = move |x: f64| (a * x).sin() + b * x * x + 1.5;
            let q = Quadrature::new(1e-10, 1e6);
            let whole = q.integrate(f, 0.0, 1.0);
            let parts = q.integrate(f, 0.0, split) + q.integrate(f, split, 1.0);
            prop_assert!((whole - parts).abs() <= 2e-10 * 10.0);
        }

        #[test]
        fn fd_exact_on_low_degree_polynomials(
            coeffs in proptest::collection::vec(-3.0f64..3.0, 1..=5),
            t0 in -1.0f64..1.0,
        ) {
            // degree <= order + 1 with order = deg - 1 (at least 1)
            let deg = coeffs.len() - 1;
            let order = deg.max(1) - if deg >= 2 { 1 } else { 0 };
            let p = {
                let coeffs = coeffs.clone();
                move |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            };
            let exact = {
                // order-th derivative of the polynomial
                let mut d: Vec<f64> = coeffs.clone();
                for _ in 0..order {
                    d = d.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
                }
                d.iter().rev().fold(0.0, |acc, c| acc * t0 + c)
            };
            let curve = SmoothMap::curve(-10.0, 10.0, SmoothnessClass::Analytic, p);
            let h = 1e-2;
            let est = fd_derivative(&curve, t0, order, h).unwrap();
            prop_assert!((est - exact).abs() < 1e-5 * (1.0 + exact.abs()), "{} vs {}", est, exact);
        }
    }
}
