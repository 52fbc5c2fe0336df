//! The zero-detecting functional `F(f) = exp(-exp(integral_0^1 1/f))` on
//! nonnegative functions of `[0, 1]`, with numerical checks of the estimates
//! that make it smooth.
//!
//! `F` is carried in log-log form: [`ZeroDetectResult::log_log_value`] stores
//! `integral 1/f` itself, because `exp(-exp(s))` underflows an `f64` once
//! `s` passes roughly 6.6.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::{c, Real};
use crate::smooth::{richardson_derivative, Quadrature, SmoothMap, SmoothnessClass};

/// The slice of [`Tolerances`] the zero detector reads.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroDetectConfig {
    pub quad_tol: f64,
    pub quad_rel_tol: f64,
    pub divergence_cap: f64,
    pub max_depth: usize,
    pub max_evals: usize,
    pub floor: f64,
    pub grid: usize,
    pub lemma_tol: f64,
    pub derivative_step: f64,
    pub blowup_points: usize,
    pub flat_step: f64,
    pub flat_tol: f64,
}

impl ZeroDetectConfig {
    pub fn from_tolerances(t: &Tolerances) -> Self {
        Self {
            quad_tol: t.quad_tol,
            quad_rel_tol: 0.0,
            divergence_cap: t.divergence_cap,
            max_depth: t.quad_max_depth,
            max_evals: t.quad_max_evals,
            floor: t.zero_floor,
            grid: t.zero_grid.max(2),
            lemma_tol: t.lemma_tol,
            derivative_step: t.derivative_step,
            blowup_points: t.blowup_points.max(2),
            flat_step: t.flat_step,
            flat_tol: t.flat_tol,
        }
    }

    fn quadrature<T: Real>(&self) -> Quadrature<T> {
        Quadrature {
            tol: c(self.quad_tol),
            rel_tol: c(self.quad_rel_tol),
            divergence_cap: c(self.divergence_cap),
            max_depth: self.max_depth,
            max_evals: self.max_evals,
        }
    }
}

impl Default for ZeroDetectConfig {
    fn default() -> Self {
        Self::from_tolerances(&Tolerances::default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroDetectResult<T> {
    /// `integral_0^1 1/f`, `+inf` once a zero is detected.
    pub log_log_value: T,
    /// `F(f)`; may underflow to 0 for large `log_log_value`.
    pub f_value: T,
    pub zero_detected: bool,
}

impl<T: Real> ZeroDetectResult<T> {
    fn from_integral(s: T) -> Self {
        if s.is_infinite() {
            Self {
                log_log_value: T::infinity(),
                f_value: T::zero(),
                zero_detected: true,
            }
        } else {
            Self {
                log_log_value: s,
                f_value: (-s.exp()).exp(),
                zero_detected: false,
            }
        }
    }

    /// `ln F(f) = -exp(integral 1/f)`, finite whenever no zero was detected.
    pub fn ln_f(&self) -> T {
        -self.log_log_value.exp()
    }
}

fn grid_points<T: Real>(n: usize) -> impl Iterator<Item = T> {
    let denom = (n - 1) as f64;
    (0..n).map(move |i| c(i as f64 / denom))
}

fn unit_curve<T: Real>(f: &SmoothMap<T>) -> Result<crate::smooth::ScalarKernel<T>> {
    if f.domain_dim() != 1 {
        return Err(Error::Contract(format!(
            "expected a function of one variable, got domain dimension {}",
            f.domain_dim()
        )));
    }
    f.scalar_kernel()
}

/// Minimum of `f` over an `n`-point uniform grid of `[0, 1]`, failing on the
/// first negative sample.
pub fn grid_min<T: Real>(f: &dyn Fn(T) -> T, n: usize) -> Result<T> {
    let mut min = T::infinity();
    for x in grid_points::<T>(n.max(2)) {
        let v = f(x);
        if v < T::zero() || v.is_nan() {
            return Err(Error::NegativeSample {
                x: x.to_f64_lossy(),
                value: v.to_f64_lossy(),
            });
        }
        min = min.min(v);
    }
    Ok(min)
}

/// [`functional_f`] for a bare closure on `[0, 1]`.
pub fn functional_kernel<T: Real>(f: &dyn Fn(T) -> T, cfg: &ZeroDetectConfig) -> Result<ZeroDetectResult<T>> {
    let min = grid_min(f, cfg.grid)?;
    if min < c(cfg.floor) {
        return Ok(ZeroDetectResult::from_integral(T::infinity()));
    }
    let s = cfg.quadrature().integrate(|x: T| f(x).recip(), T::zero(), T::one());
    Ok(ZeroDetectResult::from_integral(s))
}

/// Evaluates `F(f)` for a nonnegative `f` on `[0, 1]`.
pub fn functional_f<T: Real>(f: &SmoothMap<T>, cfg: &ZeroDetectConfig) -> Result<ZeroDetectResult<T>> {
    let k = unit_curve(f)?;
    functional_kernel(&|x: T| k(&[x]), cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinBoundReport<T> {
    pub lhs: T,
    pub rhs: T,
    pub derivative_bound: T,
    pub holds: bool,
}

/// Grid estimate of `max |f'|` on `[0, 1]`, using one-sided-safe centers.
pub fn estimate_max_derivative<T: Real>(f: &SmoothMap<T>, cfg: &ZeroDetectConfig) -> Result<T> {
    let k = unit_curve(f)?;
    let h: T = c(cfg.derivative_step);
    let reach = h * c(0.5);
    let mut best = T::zero();
    for x in grid_points::<T>(cfg.grid) {
        let center = x.max(reach).min(T::one() - reach);
        let d = richardson_derivative(|t| Ok::<T, Error>(k(&[t])), center, 1, h)?;
        best = best.max(d.abs());
    }
    Ok(best)
}

/// Checks `C exp(-C integral 1/f) <= min f` for positive `f` with
/// `C >= max |f'|`. The derivative bound is an estimate, so `C` may undershoot
/// it by a relative `1e-6` before the precondition fails.
pub fn check_min_bound<T: Real>(f: &SmoothMap<T>, big_c: T, cfg: &ZeroDetectConfig) -> Result<MinBoundReport<T>> {
    let k = unit_curve(f)?;
    let rhs = grid_min(&|x: T| k(&[x]), cfg.grid)?;
    if !(rhs > T::zero()) {
        return Err(Error::Precondition("f must be positive on [0, 1]".into()));
    }
    let bound = estimate_max_derivative(f, cfg)?;
    if big_c < bound * c(1.0 - 1e-6) {
        return Err(Error::Precondition(format!(
            "C = {big_c} is below the derivative bound {bound}"
        )));
    }
    let s = functional_f(f, cfg)?.log_log_value;
    let lhs = big_c * (-big_c * s).exp();
    Ok(MinBoundReport {
        lhs,
        rhs,
        derivative_bound: bound,
        holds: lhs <= rhs + c(cfg.lemma_tol),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport<T> {
    pub c_fit: T,
    /// `(t, integral_0^1 1/f(t, x) dx)` at every usable sample.
    pub samples: Vec<(T, T)>,
    pub holds: bool,
}

/// Fits the largest `c` with `integral 1/f(t, .) >= c / |t - t0|` over
/// log-spaced offsets `|t - t0|` in `offsets`, on both sides of `t0`.
pub fn check_blowup_rate<T: Real>(
    f: &SmoothMap<T>,
    t0: T,
    x0: T,
    offsets: (T, T),
    cfg: &ZeroDetectConfig,
) -> Result<BlowupReport<T>> {
    if f.domain_dim() != 2 {
        return Err(Error::Contract("expected a function of (t, x)".into()));
    }
    let k = f.scalar_kernel()?;
    if !(x0 >= T::zero() && x0 <= T::one()) {
        return Err(Error::Precondition(format!("x0 = {x0} is outside [0, 1]")));
    }
    let at_zero = k(&[t0, x0]);
    if at_zero.abs() > c(cfg.lemma_tol) {
        return Err(Error::Precondition(format!("f(t0, x0) = {at_zero} is not zero")));
    }
    let (lo, hi) = offsets;
    if !(lo > T::zero() && hi >= lo) {
        return Err(Error::Precondition("offset range must satisfy 0 < lo <= hi".into()));
    }
    let n = cfg.blowup_points;
    let ratio = (hi / lo).ln();
    let mut samples = Vec::new();
    let mut c_fit = T::infinity();
    for i in 0..n {
        let d = lo * (ratio * c(i as f64 / (n - 1) as f64)).exp();
        for t in [t0 - d, t0 + d] {
            let r = functional_kernel(&|x: T| k(&[t, x]), cfg)?;
            if r.zero_detected {
                continue;
            }
            samples.push((t, r.log_log_value));
            c_fit = c_fit.min(d * r.log_log_value);
        }
    }
    if samples.is_empty() {
        return Err(Error::Precondition("no t in the box has f(t, .) > 0".into()));
    }
    Ok(BlowupReport {
        c_fit,
        holds: c_fit > T::zero() && c_fit.is_finite(),
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport<T> {
    pub t0: T,
    /// `(order, estimate, step)`.
    pub derivative_estimates: Vec<(usize, T, T)>,
    pub verdict: bool,
}

/// Finite-difference derivatives of `t -> F(family(t, .))` at a parameter
/// where the slice has a zero.
pub fn flatness_probe<T: Real>(
    family: &SmoothMap<T>,
    t0: T,
    max_order: usize,
    cfg: &ZeroDetectConfig,
) -> Result<FlatnessReport<T>> {
    if family.domain_dim() != 2 {
        return Err(Error::Contract("expected a family of (t, x)".into()));
    }
    let k = family.scalar_kernel()?;
    let at = |t: T| functional_kernel(&|x: T| k(&[t, x]), cfg);
    if !at(t0)?.zero_detected {
        return Err(Error::Precondition(format!("family({t0}, .) has no zero on [0, 1]")));
    }
    let h: T = c(cfg.flat_step);
    let tol: T = c(cfg.flat_tol);
    let mut estimates = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        let d = richardson_derivative(|t| at(t).map(|r| r.f_value), t0, order, h)?;
        estimates.push((order, d, h));
    }
    let verdict = estimates.iter().all(|(_, d, _)| d.abs() < tol);
    Ok(FlatnessReport {
        t0,
        derivative_estimates: estimates,
        verdict,
    })
}

/// A named function of `x` on `[0, 1]` from a fixture file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveFixture {
    pub name: String,
    pub expr: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveSuite {
    #[serde(default)]
    pub description: String,
    pub functions: Vec<CurveFixture>,
}

impl CurveSuite {
    pub fn from_json(text: &str) -> Result<Self> {
        let suite: CurveSuite = serde_json::from_str(text)?;
        for f in &suite.functions {
            Expr::parse(&f.expr, &["x"])?;
        }
        Ok(suite)
    }

    /// The bundled 20-function suite.
    pub fn builtin() -> Self {
        Self::from_json(include_str!("../fixtures/zero_detect.json")).expect("bundled suite parses")
    }
}

impl CurveFixture {
    pub fn to_map<T: Real>(&self) -> Result<SmoothMap<T>> {
        let e = Expr::parse(&self.expr, &["x"])?;
        Ok(SmoothMap::curve(T::zero(), T::one(), SmoothnessClass::Analytic, move |x: T| {
            T::lit(e.eval(&[x.to_f64_lossy()]))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    fn cfg() -> ZeroDetectConfig {
        ZeroDetectConfig::default()
    }

    fn curve(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> SmoothMap<f64> {
        SmoothMap::curve(0.0, 1.0, SmoothnessClass::Analytic, f)
    }

    fn family(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> SmoothMap<f64> {
        SmoothMap::scalar(SmoothMap::unbounded(2), SmoothnessClass::Analytic, move |v: &[f64]| f(v[0], v[1]))
    }

    #[test]
    fn constant_functions_match_closed_form() {
        let one = functional_f(&curve(|_| 1.0), &cfg()).unwrap();
        assert!((one.f_value - (-E).exp()).abs() < 1e-12);
        assert!((one.f_value - 0.065_988_0).abs() < 1e-6);
        let two = functional_f(&curve(|_| 2.0), &cfg()).unwrap();
        assert!((two.f_value - (-(0.5f64).exp()).exp()).abs() < 1e-12);
        assert!((two.f_value - 0.192_295).abs() < 1e-6);
        assert!(!one.zero_detected && !two.zero_detected);
    }

    #[test]
    fn identity_has_a_zero() {
        let r = functional_f(&curve(|x| x), &cfg()).unwrap();
        assert!(r.zero_detected);
        assert_eq!(r.f_value, 0.0);
        assert!(r.log_log_value.is_infinite());
    }

    #[test]
    fn off_grid_double_zero_is_caught_by_quadrature() {
        let mut c = cfg();
        c.grid = 10;
        let r = functional_f(&curve(|x| (x - 1.0 / PI).powi(2)), &c).unwrap();
        assert!(r.zero_detected);
    }

    #[test]
    fn negative_sample_is_reported() {
        match functional_f(&curve(|x| x - 0.5), &cfg()) {
            Err(Error::NegativeSample { x, value }) => {
                assert_eq!(x, 0.0);
                assert_eq!(value, -0.5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn works_in_f32() {
        let f = SmoothMap::curve(0.0f32, 1.0, SmoothnessClass::Analytic, |_| 1.0f32);
        let r = functional_f(&f, &cfg()).unwrap();
        assert!((r.f_value - (-std::f32::consts::E).exp()).abs() < 1e-5);
    }

    #[test]
    fn min_bound_examples() {
        let r = check_min_bound(&curve(|_| 1.0), 1.0, &cfg()).unwrap();
        assert!((r.lhs - (-1.0f64).exp()).abs() < 1e-12 && r.rhs == 1.0 && r.holds);
        let r = check_min_bound(&curve(|x| 1.0 + x), 1.0, &cfg()).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-9 && r.rhs == 1.0 && r.holds);
        // C exp(-C/c) is maximized at C = c with value c/e <= c
        let r = check_min_bound(&curve(|_| 3.0), 1.0, &cfg()).unwrap();
        assert!((r.lhs - (-1.0f64 / 3.0).exp()).abs() < 1e-12 && r.holds);
    }

    #[test]
    fn min_bound_rejects_small_c() {
        let f = curve(|x| 1.0 + 2.0 * x);
        assert!(matches!(check_min_bound(&f, 1.0, &cfg()), Err(Error::Precondition(_))));
    }

    #[test]
    fn blowup_rate_quadratic_family() {
        let f = family(|t, x| t * t + (x - 0.5) * (x - 0.5));
        let r = check_blowup_rate(&f, 0.0, 0.5, (1e-3, 1e-1), &cfg()).unwrap();
        // closed form: integral = (2/|t|) atan(1/(2|t|)), so d * integral >= 2 atan 5
        let closed = |t: f64| 2.0 / t.abs() * (1.0 / (2.0 * t.abs())).atan();
        for (t, s) in &r.samples {
            assert!((s - closed(*t)).abs() < 1e-6 * closed(*t), "t={t}");
        }
        assert!(r.c_fit >= 2.0 * 5.0f64.atan() - 1e-6, "{}", r.c_fit);
        assert!(r.holds);
    }

    #[test]
    fn blowup_rate_t_squared_and_degenerate() {
        let f = family(|t, _| t * t);
        let r = check_blowup_rate(&f, 0.0, 0.3, (1e-3, 1e-1), &cfg()).unwrap();
        assert!((r.c_fit - 10.0).abs() < 1e-6 && r.holds);
        let g = family(|t, _| 1.0 + t * t);
        assert!(matches!(
            check_blowup_rate(&g, 0.0, 0.5, (1e-3, 1e-1), &cfg()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn flatness_examples() {
        let f = family(|t, x| (x - 0.5) * (x - 0.5) + t * t);
        let r = flatness_probe(&f, 0.0, 3, &cfg()).unwrap();
        assert!(r.verdict);
        assert_eq!(r.derivative_estimates.len(), 3);
        for (_, d, h) in &r.derivative_estimates {
            assert!(d.abs() < 1e-4);
            assert_eq!(*h, 1e-2);
        }
        let g = family(|t, _| 1.0 + t * t);
        assert!(matches!(flatness_probe(&g, 0.0, 3, &cfg()), Err(Error::Precondition(_))));
        let z = family(|_, x| x);
        let r = flatness_probe(&z, 0.0, 3, &cfg()).unwrap();
        assert!(r.derivative_estimates.iter().all(|(_, d, _)| *d == 0.0));
    }

    #[test]
    fn f_along_family_tends_to_zero() {
        let f = family(|t, x| (x - 0.5) * (x - 0.5) + t * t);
        let mut prev = f64::INFINITY;
        for t in [0.5, 0.3, 0.2, 0.1, 0.05] {
            let k = f.slice(t).unwrap();
            let v = functional_f(&k, &cfg()).unwrap().f_value;
            assert!(v <= prev);
            prev = v;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn builtin_suite_loads() {
        let s = CurveSuite::builtin();
        assert_eq!(s.functions.len(), 20);
        let m = s.functions[12].to_map::<f64>().unwrap();
        assert_eq!(m.at(0.5), 1.5);
    }

    proptest! {
        #[test]
        fn monotone_under_pointwise_order(a in 0.1f64..3.0, b in 0.0f64..2.0, w in 0.5f64..6.0, p in 0.0f64..6.3) {
            // f = a + b sin^2, g = f + bump keeps f <= g pointwise
            let f = curve(move |x| a + b * (w * x + p).sin().powi(2));
            let g = curve(move |x| a + b * (w * x + p).sin().powi(2) + 0.3 * x * x);
            let rf = functional_f(&f, &cfg()).unwrap();
            let rg = functional_f(&g, &cfg()).unwrap();
            prop_assert!(rf.log_log_value >= rg.log_log_value - 1e-8);
            prop_assert!(rf.f_value <= rg.f_value + 1e-12);
            prop_assert!(rf.f_value < (-1.0f64).exp());
        }
    }
}
