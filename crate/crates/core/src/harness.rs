//! Check suites and the batch runner behind the command line tool.
//!
//! Every check gets its own ChaCha8 stream seeded from the run seed and the
//! check's name, and results are ordered by suite and name, so a report
//! depends only on the settings, never on scheduling.

use std::f64::consts::{E, PI};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bundle::{
    associated_bundle, frame_roundtrip_check, gauge_check, pullback, trivial_on_cover, validate, verify_classification,
    CocycleBundle, GaugeTransformation, Representation,
};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::group::{builtin_groups, check_axioms, check_chart_roundtrip, check_representation, smoothness_probe_action, Element, Group, ProbeVerdict};
use crate::homotopy::{
    endpoint_transport, homotopy_pullback_iso, idle_factor_defect, inverse_defect, slice_biconditional, transport_equivariance,
    CylinderBundle, TransportConfig,
};
use crate::milnor::{
    bg_cover_member, bg_partition, bg_section, bg_section_from, contraction, eg_act, eg_project, even_shuffle_homotopy,
    interpolate_disjoint, milnor_distance, odd_shuffle_homotopy, MilnorPoint,
};
use crate::partition::{audit_local_finiteness, countable_refine, normalize, shrink_supports, BaseSpace, FamilyFn, PointKind, Predicate};
use crate::report::{Check, Report, SuiteReport, Verdict, SCHEMA_VERSION};
use crate::scalar::Rational;
use crate::smooth::{flat_bump, richardson_derivative, BumpSpec, Quadrature, StepFunction};
use crate::zero_detect::{
    check_min_bound, check_blowup_rate, estimate_max_derivative, flatness_probe, functional_f, functional_kernel, grid_min,
    CurveSuite, ZeroDetectConfig,
};
use crate::zoo::{self, Fixture};

/// Module suites, in report order.
pub const SUITES: [&str; 8] = ["bundle", "group", "homotopy", "milnor", "partition", "smooth", "zero_detect", "zoo"];

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Suite names; `all` expands to every module suite, `acceptance` runs
    /// the numbered criteria.
    pub suites: Vec<String>,
    /// When nonempty, only checks touching one of these fixtures run.
    pub fixtures: Vec<String>,
    pub grid: usize,
    pub tolerances: Tolerances,
    /// `KEY=VAL` overrides already applied to `tolerances`, kept for the report.
    pub overrides: Vec<String>,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suites: vec!["all".into()],
            fixtures: Vec::new(),
            grid: zoo::DEFAULT_GRID,
            tolerances: Tolerances::default(),
            overrides: Vec::new(),
            seed: 0,
            jobs: None,
            timing: false,
        }
    }
}

impl RunConfig {
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        self.tolerances.apply_override(spec)?;
        self.overrides.push(spec.trim().to_string());
        Ok(())
    }
}

/// Result of one check before it is put into a report.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Outcome {
    /// Passes when `violation <= tolerance`.
    pub fn within(violation: f64, tolerance: f64) -> Self {
        Self {
            pass: violation <= tolerance,
            max_violation: violation,
            tolerance,
            detail: String::new(),
        }
    }

    /// A boolean check; the violation is 0 or 1.
    pub fn flag(ok: bool) -> Self {
        Self {
            pass: ok,
            max_violation: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            detail: String::new(),
        }
    }

    pub fn and(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

pub struct Context {
    pub tol: Tolerances,
    pub grid: usize,
}

impl Context {
    fn zero(&self) -> ZeroDetectConfig {
        ZeroDetectConfig::from_tolerances(&self.tol)
    }

    fn fixture(&self, name: &str) -> Result<Fixture> {
        zoo::fixture(name, self.grid)
    }

    fn transport(&self) -> TransportConfig {
        TransportConfig::from_tolerances(&self.tol)
    }
}

type CheckFn = Arc<dyn Fn(&Context, &mut ChaCha8Rng) -> Result<Outcome> + Send + Sync>;

/// A registered check.
#[derive(Clone)]
pub struct CheckSpec {
    pub suite: &'static str,
    pub name: &'static str,
    pub anchor: &'static str,
    pub fixtures: &'static [&'static str],
    run: CheckFn,
}

fn spec(
    suite: &'static str,
    name: &'static str,
    anchor: &'static str,
    fixtures: &'static [&'static str],
    run: impl Fn(&Context, &mut ChaCha8Rng) -> Result<Outcome> + Send + Sync + 'static,
) -> CheckSpec {
    CheckSpec {
        suite,
        name,
        anchor,
        fixtures,
        run: Arc::new(run),
    }
}

// 64-bit FNV-1a; stable across platforms and toolchains.
fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn check_rng(seed: u64, suite: &str, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&format!("{suite}/{name}")))
}

fn finite(v: f64) -> f64 {
    if v.is_nan() || v.is_infinite() {
        f64::MAX
    } else {
        v
    }
}

impl CheckSpec {
    pub fn execute(&self, ctx: &Context, seed: u64, timing: bool) -> Check {
        let mut rng = check_rng(seed, self.suite, self.name);
        let start = Instant::now();
        let out = (self.run)(ctx, &mut rng).unwrap_or_else(|e| Outcome {
            pass: false,
            max_violation: f64::MAX,
            tolerance: 0.0,
            detail: format!("error: {e}"),
        });
        let ms = start.elapsed().as_secs_f64() * 1e3;
        Check {
            name: self.name.to_string(),
            anchor: self.anchor.to_string(),
            verdict: if out.pass { Verdict::Pass } else { Verdict::Fail },
            max_violation: finite(out.max_violation),
            tolerance: out.tolerance,
            detail: out.detail,
            runtime_ms: timing.then_some(ms),
        }
    }
}

// ---------------------------------------------------------------------------
// the numbered criteria

const GROUP_SAMPLES: usize = 10_000;
const TRIPLES: usize = 1_000;

/// Fixture names the classification criterion runs on.
pub const CLASSIFIED: [&str; 6] = ["hopf-1", "mobius", "rp-1", "rp-2", "trivial", "winding"];

fn positive_fixtures(ctx: &Context) -> Result<Vec<(String, crate::smooth::SmoothMap<f64>)>> {
    let oracle = ctx.tol.zero_oracle_grid;
    let mut out = Vec::new();
    for f in CurveSuite::builtin().functions {
        let m = f.to_map::<f64>()?;
        let k = m.scalar_kernel()?;
        if grid_min(&|x| k(&[x]), oracle)? >= ctx.tol.zero_floor {
            out.push((f.name.clone(), m));
        }
    }
    Ok(out)
}

pub fn zero_detector_suite(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.zero();
    let suite = CurveSuite::builtin();
    let mut mismatches = Vec::new();
    for f in &suite.functions {
        let m = f.to_map::<f64>()?;
        let k = m.scalar_kernel()?;
        let oracle = grid_min(&|x| k(&[x]), ctx.tol.zero_oracle_grid)? < ctx.tol.zero_floor;
        if functional_f(&m, &cfg)?.zero_detected != oracle {
            mismatches.push(f.name.clone());
        }
    }
    Ok(Outcome::within(mismatches.len() as f64, 0.0)
        .detail(format!("{}/{} agree {mismatches:?}", suite.functions.len() - mismatches.len(), suite.functions.len())))
}

pub fn closed_forms(ctx: &Context) -> Result<Outcome> {
    let mut cfg = ctx.zero();
    cfg.quad_tol = 1e-9;
    let one = functional_kernel(&|_| 1.0, &cfg)?.f_value;
    let two = functional_kernel(&|_| 2.0, &cfg)?.f_value;
    let d = (one - (-E).exp()).abs().max((two - (-(0.5f64).exp()).exp()).abs());
    Ok(Outcome::within(d, 1e-6).detail(format!("F(1) = {one:.12}, F(2) = {two:.12}")))
}

pub fn min_bound(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.zero();
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for (name, m) in positive_fixtures(ctx)? {
        let c = 1.05 * estimate_max_derivative(&m, &cfg)?;
        let r = check_min_bound(&m, c, &cfg)?;
        if !r.holds {
            return Ok(Outcome::within(r.lhs - r.rhs, cfg.lemma_tol).detail(format!("{name}: {} > {}", r.lhs, r.rhs)));
        }
        worst = worst.max(r.lhs - r.rhs);
        count += 1;
    }
    Ok(Outcome::within(worst.max(0.0), cfg.lemma_tol).detail(format!("{count} positive functions")))
}

fn bowl() -> crate::smooth::SmoothMap<f64> {
    crate::smooth::SmoothMap::scalar(
        crate::smooth::SmoothMap::unbounded(2),
        crate::smooth::SmoothnessClass::Analytic,
        |v: &[f64]| v[0] * v[0] + (v[1] - 0.5) * (v[1] - 0.5),
    )
}

pub fn blowup_rate(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.zero();
    let r = check_blowup_rate(&bowl(), 0.0, 0.5, (1e-3, 1e-1), &cfg)?;
    let bound = 2.0 * 5f64.atan() - 0.05;
    Ok(Outcome::within((bound - r.c_fit).max(0.0), 0.0).detail(format!("fitted c = {:.6}, bound {bound:.6}", r.c_fit)))
}

pub fn flatness(ctx: &Context) -> Result<Outcome> {
    let mut cfg = ctx.zero();
    cfg.flat_step = 1e-2;
    let r = flatness_probe(&bowl(), 0.0, 3, &cfg)?;
    let worst = r.derivative_estimates.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
    Ok(Outcome::within(worst, 1e-4).and(r.verdict))
}

fn five_intervals() -> (BaseSpace<f64>, FamilyFn<f64, f64>, Vec<Predicate<f64>>) {
    let space = BaseSpace::new("[0,1]", PointKind::Vector, (0..1000).map(|i| i as f64 / 999.0).collect()).expect("grid");
    let centers = [0.0, 0.25, 0.5, 0.75, 1.0];
    let family: FamilyFn<f64, f64> = Arc::new(move |x: &f64| {
        centers
            .iter()
            .map(|c| flat_bump(x - (c - 0.2)) * flat_bump(c + 0.2 - x))
            .collect()
    });
    let cover = centers
        .iter()
        .map(|&c| Arc::new(move |x: &f64| (x - c).abs() < 0.2) as Predicate<f64>)
        .collect();
    (space, family, cover)
}

pub fn partition_lemmas(ctx: &Context) -> Result<Outcome> {
    let (space, family, cover) = five_intervals();
    let floor = ctx.tol.support_floor;
    let rho = normalize((0..5).collect(), family, Some(cover), &space, floor)?;
    let mu = shrink_supports(&rho, &space)?;
    let refined = countable_refine(&rho, &space, 5)?;
    let reports = [rho.audit(&space, floor), mu.audit(&space, floor), refined.partition.audit(&space, floor)];
    let sum_err = reports.iter().map(|r| r.max_sum_error).fold(0.0, f64::max);
    let subordination: usize = reports.iter().map(|r| r.subordination_violations).sum();
    // strict: mu_i > 0 forces rho_i above half the sum of squares
    let mut strict = 0;
    for x in &space.grid {
        let r = rho.values(x);
        let half_sigma = r.iter().map(|v| v * v).sum::<f64>() / 2.0;
        for (m, v) in mu.values(x).iter().zip(&r) {
            if *m > 0.0 && *v <= half_sigma {
                strict += 1;
            }
        }
    }
    let disjoint = refined.disjointness_violations();
    Ok(Outcome::within(sum_err, ctx.tol.partition_sum)
        .and(subordination == 0 && strict == 0 && disjoint == 0)
        .detail(format!(
            "{} points; subordination violations {subordination}, strictness {strict}, same-cardinality overlaps {disjoint}",
            space.grid.len()
        )))
}

pub fn bg_structure(ctx: &Context, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst_sum: f64 = 0.0;
    let mut worst_gauge: f64 = 0.0;
    let mut failures = Vec::new();
    for g in builtin_groups() {
        for _ in 0..GROUP_SAMPLES {
            let n = 5;
            let p = MilnorPoint::<Rational>::random(&g, n, rng.gen_range(1..=n + 1), rng);
            let b = eg_project(&g, &p)?;
            // gauge independence has a float tolerance; the rest is exact
            let pf = p.to_f64();
            let q = eg_act(&g, &pf, &g.sample::<f64, _>(rng))?;
            let tau = bg_partition(&b);
            if tau.iter().any(|t| *t < 0.0) {
                failures.push(format!("{}: negative tau", g.symbol()));
            }
            worst_sum = worst_sum.max((tau.iter().sum::<f64>() - 1.0).abs());
            for (i, t) in tau.iter().enumerate() {
                let threshold = Rational::new(1.into(), num_bigint::BigInt::from(1) << (i + 1));
                if *t > 0.0 && b.weight(i) < threshold {
                    failures.push(format!("{}: tau_{i} > 0 below 1/2^{}", g.symbol(), i + 1));
                }
                if bg_cover_member(i, &b) {
                    let s = bg_section(&g, i, &b)?;
                    if eg_project(&g, &s)? != b {
                        failures.push(format!("{}: pi(s_{i}(b)) != b", g.symbol()));
                    }
                    let d = milnor_distance(&g, &bg_section_from(&g, i, &q)?, &bg_section_from(&g, i, &pf)?);
                    worst_gauge = worst_gauge.max(d);
                }
            }
            if failures.len() > 5 {
                break;
            }
        }
    }
    Ok(Outcome::within(worst_gauge, ctx.tol.section_gauge)
        .and(worst_sum <= ctx.tol.partition_sum && failures.is_empty())
        .detail(format!(
            "{} points per group, max |sum tau - 1| = {worst_sum:e}{}",
            GROUP_SAMPLES,
            if failures.is_empty() { String::new() } else { format!("; {failures:?}") }
        )))
}

pub fn shuffles(ctx: &Context, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let groups = builtin_groups();
    let mut weight: f64 = 0.0;
    let mut eqv: f64 = 0.0;
    let mut endpoints = 0usize;
    for k in 0..TRIPLES {
        let g = &groups[k % groups.len()];
        let p = MilnorPoint::<f64>::random(g, 4, rng.gen_range(1..=5), rng);
        let q = MilnorPoint::<f64>::random(g, 4, rng.gen_range(1..=5), rng);
        let h = g.sample::<f64, _>(rng);
        let t: f64 = rng.gen_range(0.0..1.0);
        let ph = eg_act(g, &p, &h)?;
        for shuffle in [odd_shuffle_homotopy::<f64> as fn(&MilnorPoint<f64>, f64) -> MilnorPoint<f64>, even_shuffle_homotopy] {
            let out = shuffle(&p, t);
            weight = weight.max((out.weight_sum() - 1.0).abs());
            eqv = eqv.max(milnor_distance(g, &shuffle(&ph, t), &eg_act(g, &out, &h)?));
            endpoints += usize::from(shuffle(&p, 0.0).entries() != p.entries());
        }
        let a = odd_shuffle_homotopy(&p, 1.0);
        let b = even_shuffle_homotopy(&q, 1.0);
        endpoints += usize::from(a.entries().iter().any(|e| e.index % 2 == 1));
        endpoints += usize::from(b.entries().iter().any(|e| e.index % 2 == 0));
        let mid = interpolate_disjoint(&a, &b, t)?;
        weight = weight.max((mid.weight_sum() - 1.0).abs());
        let moved = interpolate_disjoint(&eg_act(g, &a, &h)?, &eg_act(g, &b, &h)?, t)?;
        eqv = eqv.max(milnor_distance(g, &moved, &eg_act(g, &mid, &h)?));
        endpoints += usize::from(interpolate_disjoint(&a, &b, 0.0)?.entries() != a.entries());
        endpoints += usize::from(interpolate_disjoint(&a, &b, 1.0)?.entries() != b.entries());
        let c = contraction(g, q.clone());
        let x = (p.clone(), h.clone());
        // the homotopy lands in a longer truncation; compare entries
        endpoints += usize::from(c.eval(&x, 0.0)?.entries() != c.start(&x)?.entries());
        endpoints += usize::from(c.eval(&x, 1.0)?.entries() != c.end(&x)?.entries());
    }
    Ok(Outcome::within(eqv, ctx.tol.equivariance)
        .and(weight <= 1e-12 && endpoints == 0)
        .detail(format!("{TRIPLES} triples, weight defect {weight:e}, endpoint mismatches {endpoints}")))
}

pub fn classification(ctx: &Context, rng: &mut ChaCha8Rng, names: &[&str]) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for name in names {
        let fx = ctx.fixture(name)?;
        let b = fx
            .bundle()
            .ok_or_else(|| Error::Precondition(format!("{name} has no bundle")))?;
        let r = verify_classification(b, &ctx.tol, 1000, rng)?;
        worst = worst.max(r.gauge.max_violation);
        if !r.pass {
            failed.push(name.to_string());
        }
    }
    Ok(Outcome::within(worst, ctx.tol.classification)
        .and(failed.is_empty())
        .detail(if failed.is_empty() { format!("{names:?}") } else { format!("failed: {failed:?}") }))
}

pub fn transport(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.transport();
    let mut violations = 0;
    for name in ["time-swap", "mobius-rotation"] {
        let fx = ctx.fixture(name)?;
        let cyl = fx.cylinder().expect("cylinder fixture");
        for n in 1..=cfg.max_n {
            violations += slice_biconditional(cyl, n, &cfg)?.violations;
        }
    }
    let fx = ctx.fixture("mobius-rotation")?;
    let cyl = fx.cylinder().expect("cylinder fixture");
    let fwd = endpoint_transport(cyl, &cfg)?;
    let rev = endpoint_transport(&cyl.reversed()?, &cfg)?;
    let inv = inverse_defect(&fwd, &rev, cyl.group())?;
    let worst = fwd.check.max_violation.max(inv);
    Ok(Outcome::within(worst, ctx.tol.transport)
        .and(violations == 0 && fwd.check.pass)
        .detail(format!(
            "biconditional violations {violations}, gauge {:e}, inverse defect {inv:e}",
            fwd.check.max_violation
        )))
}

pub fn negative_control(ctx: &Context) -> Result<Outcome> {
    let dl = ctx.fixture("doubled_line")?;
    let cert = zoo::doubled_line_certificate(&dl, &ctx.tol)?;
    let mob = ctx.fixture("mobius")?;
    let search = zoo::mobius_gauge_search(&mob, &ctx.tol)?;
    let inexact = cert.probes.iter().filter(|p| !p.exact).count();
    Ok(Outcome::within(inexact as f64, 0.0)
        .and(cert.certified && search.found.is_none())
        .detail(format!(
            "alpha_0/alpha_1 at 1e-6: {:e} (floor {:e}); {} partition candidates rejected; {} constant gauges, none trivializing",
            cert.ratio_at_smallest,
            cert.floor,
            cert.rejections.iter().filter(|r| r.rejected).count(),
            search.candidates
        )))
}

/// The numbered acceptance criteria that run inside one process. The
/// determinism criterion compares two separate runs and lives with the
/// command line tool.
pub fn criteria() -> Vec<CheckSpec> {
    const S: &str = "acceptance";
    vec![
        spec(S, "01-zero-detector", "F(f) = 0 exactly when f has a zero", &[], |c, _| zero_detector_suite(c)),
        spec(S, "02-closed-forms", "F(1) = exp(-e), F(2) = exp(-exp(1/2))", &[], |c, _| closed_forms(c)),
        spec(S, "03-min-bound", "C exp(-C int 1/f) <= min f for C >= max |f'|", &[], |c, _| min_bound(c)),
        spec(S, "04-blowup-rate", "int 1/f(t, .) >= c/|t| near an isolated zero", &[], |c, _| blowup_rate(c)),
        spec(S, "05-flatness", "derivatives of F along a family vanish at a zero", &[], |c, _| flatness(c)),
        spec(S, "06-partitions", "shrunk and cardinality-refined partitions of unity", &[], |c, _| partition_lemmas(c)),
        spec(S, "07-bg-structure", "partition, cover and sections of the truncated BG", &[], bg_structure),
        spec(S, "08-shuffles", "shuffle homotopies and interpolation in EG", &[], shuffles),
        spec(S, "09-classification", "classifying map pulls EG back to the bundle", &CLASSIFIED, |c, r| {
            classification(c, r, &CLASSIFIED)
        }),
        spec(S, "10-transport", "homotopic maps pull back isomorphic bundles", &["mobius-rotation", "time-swap"], |c, _| {
            transport(c)
        }),
        spec(S, "11-negative-control", "doubled line admits no partition; Möbius is nontrivial", &["doubled_line", "mobius"], |c, _| {
            negative_control(c)
        }),
    ]
}

// ---------------------------------------------------------------------------
// module suites

fn smooth_suite() -> Vec<CheckSpec> {
    const S: &str = "smooth";
    vec![
        spec(S, "flat-bump", "phi(t) = exp(-1/t) for t > 0, 0 otherwise", &[], |_, _| {
            let d = [(1.0, (-1.0f64).exp()), (0.5, (-2.0f64).exp()), (0.0, 0.0), (-3.0, 0.0)]
                .iter()
                .map(|(t, v)| (flat_bump(*t) - v).abs())
                .fold(0.0, f64::max);
            Ok(Outcome::within(d, 1e-15))
        }),
        spec(S, "step", "smooth step: 0 below eps, 1 above 1 - eps, monotone", &[], |c, _| {
            let step = StepFunction::new(BumpSpec::<f64>::new(c.tol.step_epsilon)?);
            let eps = step.epsilon();
            let mut bad = 0;
            let mut sym: f64 = 0.0;
            let mut prev = 0.0;
            for i in 0..=1000 {
                let t = -0.5 + 2.0 * i as f64 / 1000.0;
                let v = step.value(t);
                bad += usize::from(!(0.0..=1.0).contains(&v) || v < prev);
                bad += usize::from(t <= eps && v != 0.0) + usize::from(t >= 1.0 - eps && v != 1.0);
                sym = sym.max((v + step.value(1.0 - t) - 1.0).abs());
                prev = v;
            }
            Ok(Outcome::within(sym, c.tol.partition_sum).and(bad == 0).detail(format!("{bad} shape violations")))
        }),
        spec(S, "quadrature", "adaptive Simpson on closed forms and a divergent integrand", &[], |c, _| {
            let q = Quadrature::new(c.tol.quad_tol, c.tol.divergence_cap);
            let d = (q.integrate(|x: f64| x * x, 0.0, 1.0) - 1.0 / 3.0)
                .abs()
                .max((q.integrate(f64::sin, 0.0, PI) - 2.0).abs());
            let diverges = q.integrate(|x: f64| 1.0 / x, 0.0, 1.0).is_infinite();
            Ok(Outcome::within(d, 1e-8).and(diverges))
        }),
        spec(S, "derivatives", "Richardson finite differences on sin", &[], |c, _| {
            let h = c.tol.derivative_step;
            let mut worst: f64 = 0.0;
            for (order, exact) in [(1, 0.3f64.cos()), (2, -(0.3f64.sin())), (3, -(0.3f64.cos()))] {
                let d = richardson_derivative(|t: f64| Ok::<f64, Error>(t.sin()), 0.3, order, h * 100.0)?;
                worst = worst.max((d - exact).abs());
            }
            Ok(Outcome::within(worst, 1e-6))
        }),
    ]
}

fn zero_detect_suite() -> Vec<CheckSpec> {
    const S: &str = "zero_detect";
    vec![
        spec(S, "fixture-suite", "F(f) = 0 exactly when f has a zero", &[], |c, _| zero_detector_suite(c)),
        spec(S, "closed-forms", "F(1) = exp(-e), F(2) = exp(-exp(1/2))", &[], |c, _| closed_forms(c)),
        spec(S, "min-bound", "C exp(-C int 1/f) <= min f for C >= max |f'|", &[], |c, _| min_bound(c)),
        spec(S, "blowup-rate", "int 1/f(t, .) >= c/|t| near an isolated zero", &[], |c, _| blowup_rate(c)),
        spec(S, "flatness", "derivatives of F along a family vanish at a zero", &[], |c, _| flatness(c)),
    ]
}

fn partition_suite() -> Vec<CheckSpec> {
    const S: &str = "partition";
    vec![
        spec(S, "lemmas", "shrunk and cardinality-refined partitions of unity", &[], |c, _| partition_lemmas(c)),
        spec(S, "local-finiteness", "each point meets finitely many supports", &[], |c, _| {
            let (space, _, cover) = five_intervals();
            let r = audit_local_finiteness(&cover, &space, c.tol.probe_radius);
            Ok(Outcome::within(r.max_count as f64, 2.0).detail(format!("max {} sets near {:?}", r.max_count, r.worst_point)))
        }),
    ]
}

fn group_suite() -> Vec<CheckSpec> {
    const S: &str = "group";
    vec![
        spec(S, "axioms-f64", "group axioms in floating point", &[], |c, rng| {
            let mut worst: f64 = 0.0;
            for g in builtin_groups() {
                worst = worst.max(check_axioms::<f64, _>(&g, 1000, rng)?.max_violation());
            }
            Ok(Outcome::within(worst, c.tol.group_axiom))
        }),
        spec(S, "axioms-exact", "group axioms over the rationals", &[], |_, rng| {
            let mut worst: f64 = 0.0;
            for g in builtin_groups() {
                worst = worst.max(check_axioms::<Rational, _>(&g, 200, rng)?.max_violation());
            }
            Ok(Outcome::within(worst, 0.0))
        }),
        spec(S, "representations", "linear representations are homomorphisms", &[], |c, rng| {
            let mut worst: f64 = 0.0;
            for g in builtin_groups().iter().filter(|g| g.rep_dim() > 0) {
                worst = worst.max(check_representation::<f64, _>(g, 500, rng)?);
            }
            Ok(Outcome::within(worst, c.tol.representation))
        }),
        spec(S, "charts", "charts at the identity invert their embedding", &[], |c, rng| {
            let worst = builtin_groups()
                .iter()
                .filter_map(|g| check_chart_roundtrip(g, 500, rng))
                .fold(0.0, f64::max);
            Ok(Outcome::within(worst, c.tol.chart_roundtrip))
        }),
        spec(S, "smoothness", "multiplication and inversion are smooth in charts", &[], |c, rng| {
            let mut worst: f64 = 0.0;
            let mut ok = true;
            for g in builtin_groups() {
                let r = smoothness_probe_action(&g, c.tol.smoothness_step, c.tol.smoothness_stability, 50, rng);
                ok &= r.verdict != ProbeVerdict::Fail;
                worst = worst.max(r.max_instability);
            }
            Ok(Outcome::within(worst, c.tol.smoothness_stability).and(ok))
        }),
    ]
}

fn milnor_suite() -> Vec<CheckSpec> {
    const S: &str = "milnor";
    vec![
        spec(S, "bg-structure", "partition, cover and sections of the truncated BG", &[], bg_structure),
        spec(S, "shuffles", "shuffle homotopies and interpolation in EG", &[], shuffles),
    ]
}

fn bundle_of(fx: &Fixture) -> Result<&CocycleBundle> {
    fx.bundle()
        .ok_or_else(|| Error::Precondition(format!("{} has no bundle", fx.name)))
}

fn bundle_suite() -> Vec<CheckSpec> {
    const S: &str = "bundle";
    vec![
        spec(S, "validate", "cocycle identities on every positive fixture", &["mobius", "winding", "trivial", "rp-2", "hopf-1", "doubled_line"], |c, _| {
            let mut worst: f64 = 0.0;
            let mut failed = Vec::new();
            for name in ["doubled_line", "hopf-1", "mobius", "rp-2", "trivial", "winding"] {
                let r = validate(bundle_of(&c.fixture(name)?)?, &c.tol);
                worst = worst.max(r.max_cocycle).max(r.max_inverse).max(r.max_identity);
                if !r.pass {
                    failed.push(name);
                }
            }
            Ok(Outcome::within(worst, c.tol.cocycle).and(failed.is_empty()).detail(format!("{failed:?}")))
        }),
        spec(S, "corrupted-transition", "a broken cocycle is rejected at the broken point", &["mobius"], |c, _| {
            let fx = c.fixture("mobius")?;
            let mut b = bundle_of(&fx)?.clone();
            let good = b.clone();
            b.set_transition(
                1,
                0,
                Arc::new(move |x: &[f64]| {
                    if x[0] == 0.0 {
                        Ok(Element::Sign(1))
                    } else {
                        good.transition(1, 0, x)
                    }
                }),
            );
            let r = validate(&b, &c.tol);
            let named = r.worst.as_ref().is_some_and(|w| w.point == vec![0.0]);
            Ok(Outcome::flag(!r.pass && named))
        }),
        spec(S, "pullback", "pullback along the identity and along composites", &["mobius"], |c, _| {
            let fx = c.fixture("mobius")?;
            let b = bundle_of(&fx)?;
            let base = b.base().clone();
            let same = pullback(b, base.clone(), Arc::new(|x: &[f64]| x.to_vec()))?;
            let phi = |x: &[f64]| vec![2.0 * x[0]];
            let psi = |x: &[f64]| vec![x[0] + 0.3];
            let once = pullback(b, base.clone(), Arc::new(move |x: &[f64]| phi(&psi(x))))?;
            let twice = pullback(&pullback(b, base.clone(), Arc::new(phi))?, base.clone(), Arc::new(psi))?;
            let id = GaugeTransformation::identity(b.group(), b.charts());
            let r1 = gauge_check(b, &same, &id, c.tol.cocycle)?;
            let r2 = gauge_check(&once, &twice, &id, c.tol.cocycle)?;
            Ok(Outcome::within(r1.max_violation.max(r2.max_violation), c.tol.cocycle))
        }),
        spec(S, "gauge-equivalence", "gauge witnesses compose and invert", &["mobius-degree2"], |c, _| {
            let fx = c.fixture("mobius-degree2")?;
            let b = bundle_of(&fx)?;
            let t = trivial_on_cover(b);
            let g = b.group();
            let lam = zoo::degree2_gauge();
            let refl = gauge_check(b, b, &GaugeTransformation::identity(g, b.charts()), c.tol.gauge)?;
            let fwd = gauge_check(b, &t, &lam, c.tol.gauge)?;
            let back = gauge_check(&t, b, &lam.inverse(g), c.tol.gauge)?;
            let round = gauge_check(b, b, &lam.then(&lam.inverse(g), g), c.tol.gauge)?;
            let worst = [refl.max_violation, fwd.max_violation, back.max_violation, round.max_violation]
                .into_iter()
                .fold(0.0, f64::max);
            Ok(Outcome::within(worst, c.tol.gauge))
        }),
        spec(S, "associated", "associated vector bundles and frame bundles", &["mobius", "hopf-1"], |c, _| {
            let mob = c.fixture("mobius")?;
            let b = bundle_of(&mob)?;
            let rep = Representation::standard(b.group());
            let line = associated_bundle(b, &rep)?;
            let ok_line = validate(&line, &c.tol).pass
                && line.transition(0, 1, &[0.0])? == Element::Matrix(crate::group::Matrix::from_rows(vec![vec![-1.0]])?);
            let frames = frame_roundtrip_check(b, &rep, c.tol.representation)?;
            let hopf = zoo::hopf_associated(&c.fixture("hopf-1")?, &c.tol)?;
            let worst = frames.max_violation.max(hopf.frame_roundtrip.max_violation);
            Ok(Outcome::within(worst, c.tol.representation).and(ok_line && hopf.validation.pass))
        }),
    ]
}

fn homotopy_suite() -> Vec<CheckSpec> {
    const S: &str = "homotopy";
    vec![
        spec(S, "slice-cover", "slice membership agrees with slab positivity", &["time-swap", "mobius-rotation"], |c, _| {
            let cfg = c.transport();
            let mut v = 0;
            let mut checked = 0;
            for name in ["mobius-rotation", "time-swap"] {
                let fx = c.fixture(name)?;
                for n in 1..=cfg.max_n {
                    let r = slice_biconditional(fx.cylinder().expect("cylinder"), n, &cfg)?;
                    v += r.violations;
                    checked += r.checked;
                }
            }
            Ok(Outcome::within(v as f64, 0.0).detail(format!("{checked} (point, multi-index) pairs")))
        }),
        spec(S, "mobius-rotation", "homotopic maps pull back isomorphic bundles", &["mobius-rotation"], |c, _| transport(c)),
        spec(S, "time-swap", "transport across a chart swap, equivariant and idle-factor free", &["time-swap"], |c, _| {
            let cfg = c.transport();
            let fx = c.fixture("time-swap")?;
            let cyl = fx.cylinder().expect("cylinder");
            let r = endpoint_transport(cyl, &cfg)?;
            let hs = [Element::Real(0.5), Element::Real(-2.0), Element::Real(3.25)];
            let eqv = transport_equivariance(cyl, &r, &hs, &cfg)?;
            let idle = idle_factor_defect(cyl, &r, &cfg)?;
            Ok(Outcome::within(r.check.max_violation, c.tol.transport)
                .and(r.check.pass && eqv <= c.tol.equivariance && idle <= c.tol.equivariance)
                .detail(format!("equivariance {eqv:e}, idle factors {idle:e}")))
        }),
        spec(S, "constant-homotopy", "a constant homotopy gives the identity class", &["mobius"], |c, _| {
            let fx = c.fixture("mobius")?;
            let b = bundle_of(&fx)?;
            let r = homotopy_pullback_iso(b, b.base().clone(), Arc::new(|x: &[f64], _| x.to_vec()), 11, &c.transport())?;
            let cyl = CylinderBundle::product(b, 11)?;
            let eqv = transport_equivariance(&cyl, &r, &[Element::Sign(-1)], &c.transport())?;
            Ok(Outcome::within(r.check.max_violation, c.tol.transport).and(r.check.pass && eqv == 0.0))
        }),
    ]
}

fn zoo_suite() -> Vec<CheckSpec> {
    const S: &str = "zoo";
    vec![
        spec(S, "classification", "classifying map pulls EG back to the bundle", &CLASSIFIED, |c, r| {
            classification(c, r, &CLASSIFIED)
        }),
        spec(S, "doubled-line", "doubled line admits no partition; Möbius is nontrivial", &["doubled_line", "mobius"], |c, _| {
            negative_control(c)
        }),
        spec(S, "degree-2", "Möbius pulled back along z -> z^2 is trivial", &["mobius-degree2"], |c, _| {
            let r = zoo::degree2_check(&c.fixture("mobius-degree2")?, &c.tol)?;
            Ok(Outcome::within(r.max_violation, c.tol.gauge))
        }),
        spec(S, "winding-map", "[t_i, n_i] -> sum t_i n_i is Z-equivariant", &["winding"], |_, rng| {
            let p = MilnorPoint::new(vec![crate::milnor::Entry::new(0, 1.0, Element::Int(5))], 2)?;
            let five = zoo::winding_comparison(&p)? == 5.0;
            Ok(Outcome::within(zoo::winding_equivariance(1000, 4, rng)?, 1e-12).and(five))
        }),
        spec(S, "projective-map", "[t_i, g_i] -> g_i t_i / |t| lands on the sphere", &["rp-1", "rp-2"], |c, rng| {
            let mut worst: f64 = 0.0;
            for n in 1..=2 {
                let r = zoo::projective_comparison_check(n, 1000, rng)?;
                worst = worst.max(r.max_norm_error).max(r.max_equivariance);
            }
            let fx = zoo::projective_space(2, 64)?;
            let b = bundle_of(&fx)?;
            let audit = b.partition().expect("partition").audit(b.base(), c.tol.support_floor);
            Ok(Outcome::within(worst, 1e-12)
                .and(audit.points >= 1000 && audit.max_sum_error <= c.tol.partition_sum)
                .detail(format!("RP^2 partition: {} points, sum error {:e}", audit.points, audit.max_sum_error)))
        }),
        spec(S, "product-group", "E(G x H) -> EG x EH keeps weights and is equivariant", &["product"], |_, rng| {
            let mut worst: f64 = 0.0;
            let mut exact = true;
            for (g, h) in [(Group::sign(), Group::circle()), (Group::integers(), Group::general_linear(2))] {
                let r = zoo::product_group_check(&g, &h, 1000, rng)?;
                worst = worst.max(r.max_equivariance).max(r.max_partition_error);
                exact &= r.weights_exact;
            }
            Ok(Outcome::within(worst, 1e-12).and(exact))
        }),
        spec(S, "hopf-fibers", "the classifying map remembers fiber angles", &["hopf-1"], |c, rng| {
            let d = zoo::hopf_fiber_recovery(&c.fixture("hopf-1")?, &c.tol, 500, rng)?;
            Ok(Outcome::within(d, c.tol.classification))
        }),
    ]
}

pub fn registry() -> Vec<CheckSpec> {
    let mut all = Vec::new();
    all.extend(bundle_suite());
    all.extend(group_suite());
    all.extend(homotopy_suite());
    all.extend(milnor_suite());
    all.extend(partition_suite());
    all.extend(smooth_suite());
    all.extend(zero_detect_suite());
    all.extend(zoo_suite());
    all.extend(criteria());
    all
}

fn known_fixture(name: &str) -> bool {
    zoo::NAMES.contains(&name) || zoo::fixture(name, 8).is_ok()
}

/// Checks selected by `cfg`, in report order. Unknown suite or fixture
/// names are errors.
pub fn select(cfg: &RunConfig) -> Result<Vec<CheckSpec>> {
    let mut wanted: Vec<String> = Vec::new();
    for s in &cfg.suites {
        match s.as_str() {
            "all" => wanted.extend(SUITES.iter().map(|s| s.to_string())),
            "acceptance" => wanted.push(s.clone()),
            other if SUITES.contains(&other) => wanted.push(s.clone()),
            other => return Err(Error::Unknown(format!("suite `{other}`"))),
        }
    }
    if let Some(f) = cfg.fixtures.iter().find(|f| !known_fixture(f)) {
        return Err(Error::Unknown(format!("fixture `{f}`")));
    }
    wanted.sort();
    wanted.dedup();
    let mut out: Vec<CheckSpec> = registry()
        .into_iter()
        .filter(|c| wanted.iter().any(|w| w == c.suite))
        .filter(|c| cfg.fixtures.is_empty() || c.fixtures.iter().any(|f| cfg.fixtures.iter().any(|g| g == f)))
        .collect();
    out.sort_by(|a, b| (a.suite, a.name).cmp(&(b.suite, b.name)));
    Ok(out)
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let specs = select(cfg)?;
    let ctx = Context {
        tol: cfg.tolerances.clone(),
        grid: cfg.grid.max(4),
    };
    let exec = || -> Vec<Check> { specs.par_iter().map(|s| s.execute(&ctx, cfg.seed, cfg.timing)).collect() };
    let checks = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Contract(format!("thread pool: {e}")))?
            .install(exec),
        None => exec(),
    };
    let mut suites: Vec<SuiteReport> = Vec::new();
    for (spec, check) in specs.iter().zip(checks) {
        match suites.last_mut() {
            Some(s) if s.name == spec.suite => s.checks.push(check),
            _ => suites.push(SuiteReport {
                name: spec.suite.to_string(),
                verdict: Verdict::Pass,
                checks: vec![check],
            }),
        }
    }
    for s in &mut suites {
        if s.checks.iter().any(|c| !c.passed()) {
            s.verdict = Verdict::Fail;
        }
    }
    let pass = suites.iter().all(|s| s.verdict == Verdict::Pass);
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        grid: ctx.grid,
        overrides: cfg.overrides.clone(),
        fixtures: cfg.fixtures.clone(),
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        suites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_sorted_per_suite() {
        let mut seen = std::collections::BTreeSet::new();
        for c in registry() {
            assert!(seen.insert((c.suite, c.name)), "duplicate {}/{}", c.suite, c.name);
            assert!(c.suite == "acceptance" || SUITES.contains(&c.suite));
        }
        assert_eq!(criteria().len(), 11);
    }

    #[test]
    fn selection_errors() {
        let mut cfg = RunConfig {
            suites: vec!["nosuch".into()],
            ..RunConfig::default()
        };
        assert!(matches!(select(&cfg), Err(Error::Unknown(_))));
        cfg.suites = vec!["zoo".into()];
        cfg.fixtures = vec!["klein".into()];
        assert!(matches!(select(&cfg), Err(Error::Unknown(_))));
        cfg.fixtures = vec!["winding".into()];
        let picked = select(&cfg).unwrap();
        assert!(picked.iter().all(|c| c.fixtures.contains(&"winding")));
        assert!(!picked.is_empty());
    }

    #[test]
    fn rng_streams_depend_on_name_and_seed() {
        let a: u64 = check_rng(1, "s", "a").gen();
        assert_eq!(a, check_rng(1, "s", "a").gen::<u64>());
        assert_ne!(a, check_rng(1, "s", "b").gen::<u64>());
        assert_ne!(a, check_rng(2, "s", "a").gen::<u64>());
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn small_suite_runs_deterministically() {
        let cfg = RunConfig {
            suites: vec!["smooth".into(), "partition".into()],
            seed: 42,
            ..RunConfig::default()
        };
        let a = run(&cfg).unwrap();
        assert!(a.passed(), "{a:#?}");
        let b = run(&RunConfig { jobs: Some(1), ..cfg }).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(a.checks().all(|(_, c)| c.runtime_ms.is_none()));
    }
}
