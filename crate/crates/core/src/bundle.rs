//! Principal bundles as transition cocycles over a sampled base.
//!
//! Chart convention: `h_i(b, g) = h_j(b, g_ji(b) g)`, so a point with
//! fiber coordinate `g` in chart `i` has coordinate `g_ji(b) g` in chart
//! `j`, and `g_ij g_jk = g_ik` on triple overlaps.
//!
//! Base points are coordinate vectors. Everything here is `f64`: partition
//! values are transcendental and feed straight into the group entries.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::group::{Element, Group, Matrix};
use crate::milnor::{
    bg_cover_member, bg_partition, bg_section, eg_act, eg_divide, eg_project, milnor_distance, BGPoint, Entry,
    MilnorPoint,
};
use crate::partition::{BaseSpace, PartitionOfUnity, PartitionReport, Predicate};

pub type Point = Vec<f64>;
pub type TransitionFn = Arc<dyn Fn(&[f64]) -> Result<Element<f64>> + Send + Sync>;
pub type BaseMap = Arc<dyn Fn(&[f64]) -> Point + Send + Sync>;

/// Cover, subordinate partition and transition functions of a principal
/// bundle. The partition is optional so that non-numerable examples can be
/// represented.
#[derive(Clone)]
pub struct CocycleBundle {
    name: String,
    base: BaseSpace<Point>,
    group: Group,
    cover: Vec<Predicate<Point>>,
    partition: Option<PartitionOfUnity<Point, f64>>,
    transitions: BTreeMap<(usize, usize), TransitionFn>,
}

impl fmt::Debug for CocycleBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CocycleBundle")
            .field("name", &self.name)
            .field("group", &self.group.name())
            .field("charts", &self.cover.len())
            .field("grid", &self.base.grid.len())
            .finish()
    }
}

impl CocycleBundle {
    pub fn new(name: impl Into<String>, base: BaseSpace<Point>, group: Group, cover: Vec<Predicate<Point>>) -> Self {
        Self {
            name: name.into(),
            base,
            group,
            cover,
            partition: None,
            transitions: BTreeMap::new(),
        }
    }

    pub fn with_partition(mut self, partition: PartitionOfUnity<Point, f64>) -> Result<Self> {
        if partition.len() != self.cover.len() {
            return Err(Error::CoverMismatch(format!(
                "partition has {} functions for {} charts",
                partition.len(),
                self.cover.len()
            )));
        }
        self.partition = Some(partition);
        Ok(self)
    }

    /// Stores `g_ij` only; `g_ji` falls back to its inverse unless set too.
    pub fn with_transition(mut self, i: usize, j: usize, f: TransitionFn) -> Self {
        self.transitions.insert((i, j), f);
        self
    }

    pub fn set_transition(&mut self, i: usize, j: usize, f: TransitionFn) {
        self.transitions.insert((i, j), f);
    }

    pub fn with_base(mut self, base: BaseSpace<Point>) -> Self {
        self.base = base;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn base(&self) -> &BaseSpace<Point> {
        &self.base
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn charts(&self) -> usize {
        self.cover.len()
    }

    pub fn cover(&self) -> &[Predicate<Point>] {
        &self.cover
    }

    pub fn partition(&self) -> Option<&PartitionOfUnity<Point, f64>> {
        self.partition.as_ref()
    }

    pub fn in_chart(&self, i: usize, b: &[f64]) -> bool {
        (self.cover[i])(&b.to_vec())
    }

    pub fn charts_at(&self, b: &[f64]) -> Vec<usize> {
        let b = b.to_vec();
        (0..self.charts()).filter(|&i| (self.cover[i])(&b)).collect()
    }

    /// Partition values at `b`, one per chart.
    pub fn tau(&self, b: &[f64]) -> Result<Vec<f64>> {
        let p = self
            .partition
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("{} has no partition of unity", self.name)))?;
        Ok(p.values(&b.to_vec()))
    }

    /// `g_ij(b)`.
    pub fn transition(&self, i: usize, j: usize, b: &[f64]) -> Result<Element<f64>> {
        if let Some(f) = self.transitions.get(&(i, j)) {
            return f(b);
        }
        if let Some(f) = self.transitions.get(&(j, i)) {
            return self.group.invert(&f(b)?);
        }
        if i == j {
            return Ok(self.group.identity());
        }
        Err(Error::Contract(format!("{}: no transition between charts {i} and {j}", self.name)))
    }

    /// Fiber coordinate of `x` in chart `j`.
    pub fn coordinate_in(&self, x: &TotalPoint, j: usize) -> Result<Element<f64>> {
        if !self.in_chart(j, &x.base) {
            return Err(Error::NotInChart {
                chart: j,
                point: x.base.clone(),
            });
        }
        self.group.multiply(&self.transition(j, x.chart, &x.base)?, &x.fiber)
    }

    /// `(i, b, g) ~ (j, b, g')` within `tol`.
    pub fn equivalent(&self, x: &TotalPoint, y: &TotalPoint, tol: f64) -> Result<bool> {
        if x.base != y.base {
            return Ok(false);
        }
        let moved = self.coordinate_in(x, y.chart)?;
        Ok(self.group.distance(&moved, &y.fiber) <= tol)
    }
}

/// A point of the total space in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TotalPoint {
    pub chart: usize,
    pub base: Point,
    pub fiber: Element<f64>,
}

impl TotalPoint {
    pub fn new(chart: usize, base: Point, fiber: Element<f64>) -> Self {
        Self { chart, base, fiber }
    }

    /// Right action on the fiber coordinate.
    pub fn act(&self, g: &Group, h: &Element<f64>) -> Result<Self> {
        Ok(Self {
            chart: self.chart,
            base: self.base.clone(),
            fiber: g.multiply(&self.fiber, h)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Cocycle,
    Identity,
    Inverse,
    Uncovered,
    Evaluation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub charts: Vec<usize>,
    pub point: Point,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub points: usize,
    pub max_cocycle: f64,
    pub max_identity: f64,
    pub max_inverse: f64,
    pub uncovered: usize,
    pub worst: Option<Violation>,
    pub partition: Option<PartitionReport>,
    pub pass: bool,
}

fn note(worst: &mut Option<Violation>, v: Violation) {
    if worst.as_ref().is_none_or(|w| v.amount > w.amount) {
        *worst = Some(v);
    }
}

/// Checks the cocycle identities on every grid point and every chart
/// overlap, plus coverage and the partition audit.
pub fn validate(bundle: &CocycleBundle, tol: &Tolerances) -> ValidationReport {
    let g = bundle.group();
    let mut r = ValidationReport {
        points: 0,
        max_cocycle: 0.0,
        max_identity: 0.0,
        max_inverse: 0.0,
        uncovered: 0,
        worst: None,
        partition: None,
        pass: false,
    };
    let mut failed_eval = false;
    for b in &bundle.base.grid {
        r.points += 1;
        let charts = bundle.charts_at(b);
        if charts.is_empty() {
            r.uncovered += 1;
            note(
                &mut r.worst,
                Violation {
                    kind: ViolationKind::Uncovered,
                    charts: vec![],
                    point: b.clone(),
                    amount: f64::INFINITY,
                },
            );
            continue;
        }
        let mut table = BTreeMap::new();
        for &i in &charts {
            for &j in &charts {
                match bundle.transition(i, j, b).and_then(|e| g.check(&e).map(|_| e)) {
                    Ok(e) => {
                        table.insert((i, j), e);
                    }
                    Err(_) => {
                        failed_eval = true;
                        note(
                            &mut r.worst,
                            Violation {
                                kind: ViolationKind::Evaluation,
                                charts: vec![i, j],
                                point: b.clone(),
                                amount: f64::INFINITY,
                            },
                        );
                    }
                }
            }
        }
        for &i in &charts {
            if let Some(e) = table.get(&(i, i)) {
                let d = g.distance(e, &g.identity());
                r.max_identity = r.max_identity.max(d);
                note(
                    &mut r.worst,
                    Violation {
                        kind: ViolationKind::Identity,
                        charts: vec![i],
                        point: b.clone(),
                        amount: d,
                    },
                );
            }
            for &j in &charts {
                if let (Some(a), Some(c)) = (table.get(&(i, j)), table.get(&(j, i))) {
                    let d = g.multiply(a, c).map(|p| g.distance(&p, &g.identity())).unwrap_or(f64::INFINITY);
                    r.max_inverse = r.max_inverse.max(d);
                    note(
                        &mut r.worst,
                        Violation {
                            kind: ViolationKind::Inverse,
                            charts: vec![i, j],
                            point: b.clone(),
                            amount: d,
                        },
                    );
                }
                for &k in &charts {
                    if let (Some(a), Some(c), Some(e)) = (table.get(&(i, j)), table.get(&(j, k)), table.get(&(i, k))) {
                        let d = g.multiply(a, c).map(|p| g.distance(&p, e)).unwrap_or(f64::INFINITY);
                        r.max_cocycle = r.max_cocycle.max(d);
                        note(
                            &mut r.worst,
                            Violation {
                                kind: ViolationKind::Cocycle,
                                charts: vec![i, j, k],
                                point: b.clone(),
                                amount: d,
                            },
                        );
                    }
                }
            }
        }
    }
    r.partition = bundle.partition.as_ref().map(|p| p.audit(&bundle.base, tol.support_floor));
    let partition_ok = r.partition.as_ref().is_none_or(|p| p.passes(tol.partition_sum));
    r.pass = !failed_eval
        && r.uncovered == 0
        && r.max_cocycle <= tol.cocycle
        && r.max_identity <= tol.cocycle
        && r.max_inverse <= tol.cocycle
        && partition_ok;
    if r.pass {
        r.worst = None;
    }
    r
}

/// Per-chart gauge `lambda_i: B_i -> G`, evaluated for several charts at once.
#[derive(Clone)]
pub struct GaugeTransformation {
    charts: usize,
    eval: Arc<dyn Fn(&[f64], &[usize]) -> Result<Vec<Element<f64>>> + Send + Sync>,
}

impl fmt::Debug for GaugeTransformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GaugeTransformation({} charts)", self.charts)
    }
}

impl GaugeTransformation {
    /// `eval(b, charts)` returns `lambda_i(b)` for each requested chart.
    pub fn new<F>(charts: usize, eval: F) -> Self
    where
        F: Fn(&[f64], &[usize]) -> Result<Vec<Element<f64>>> + Send + Sync + 'static,
    {
        Self {
            charts,
            eval: Arc::new(eval),
        }
    }

    pub fn from_fns(fns: Vec<TransitionFn>) -> Self {
        let charts = fns.len();
        Self::new(charts, move |b, which| which.iter().map(|&i| fns[i](b)).collect())
    }

    pub fn identity(group: &Group, charts: usize) -> Self {
        let e = group.identity::<f64>();
        Self::new(charts, move |_, which| Ok(vec![e.clone(); which.len()]))
    }

    pub fn constant(values: Vec<Element<f64>>) -> Self {
        let charts = values.len();
        Self::new(charts, move |_, which| Ok(which.iter().map(|&i| values[i].clone()).collect()))
    }

    pub fn charts(&self) -> usize {
        self.charts
    }

    pub fn eval(&self, b: &[f64], charts: &[usize]) -> Result<Vec<Element<f64>>> {
        (self.eval)(b, charts)
    }

    /// The inverse witness, from the second bundle back to the first.
    pub fn inverse(&self, group: &Group) -> Self {
        let this = self.clone();
        let g = group.clone();
        Self::new(self.charts, move |b, which| {
            this.eval(b, which)?.iter().map(|l| g.invert(l)).collect()
        })
    }

    /// `then` after `self`: the pointwise product `mu_i lambda_i`.
    pub fn then(&self, then: &GaugeTransformation, group: &Group) -> Self {
        let (a, m) = (self.clone(), then.clone());
        let g = group.clone();
        Self::new(self.charts, move |b, which| {
            let l = a.eval(b, which)?;
            let u = m.eval(b, which)?;
            u.iter().zip(&l).map(|(x, y)| g.multiply(x, y)).collect()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub points: usize,
    pub max_violation: f64,
    pub worst: Option<Violation>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Largest `d(g'_ij, lambda_i g_ij lambda_j^-1)` over the overlaps of the
/// grid of `b1`.
pub fn gauge_check(b1: &CocycleBundle, b2: &CocycleBundle, lambda: &GaugeTransformation, tol: f64) -> Result<GaugeReport> {
    if b1.charts() != b2.charts() || lambda.charts() != b1.charts() {
        return Err(Error::CoverMismatch(format!(
            "{} has {} charts, {} has {}, gauge has {}",
            b1.name(),
            b1.charts(),
            b2.name(),
            b2.charts(),
            lambda.charts()
        )));
    }
    if b1.group() != b2.group() {
        return Err(Error::GroupMismatch(format!(
            "{} vs {}",
            b1.group().symbol(),
            b2.group().symbol()
        )));
    }
    let g = b1.group();
    let mut report = GaugeReport {
        points: 0,
        max_violation: 0.0,
        worst: None,
        tolerance: tol,
        pass: false,
    };
    for b in &b1.base().grid {
        let charts = b1.charts_at(b);
        if charts != b2.charts_at(b) {
            return Err(Error::CoverMismatch(format!("chart membership differs at {b:?}")));
        }
        report.points += 1;
        if charts.is_empty() {
            continue;
        }
        let lam = lambda.eval(b, &charts)?;
        for (a, &i) in charts.iter().enumerate() {
            for (c, &j) in charts.iter().enumerate() {
                let lhs = b2.transition(i, j, b)?;
                let rhs = g.multiply(&g.multiply(&lam[a], &b1.transition(i, j, b)?)?, &g.invert(&lam[c])?)?;
                let d = g.distance(&lhs, &rhs);
                if d > report.max_violation || report.worst.is_none() {
                    report.max_violation = report.max_violation.max(d);
                    report.worst = Some(Violation {
                        kind: ViolationKind::Cocycle,
                        charts: vec![i, j],
                        point: b.clone(),
                        amount: d,
                    });
                }
            }
        }
    }
    report.pass = report.max_violation <= tol;
    Ok(report)
}

/// Pullback along `phi: B -> B'`, sampled on `base`.
pub fn pullback(bundle: &CocycleBundle, base: BaseSpace<Point>, phi: BaseMap) -> Result<CocycleBundle> {
    for b in &base.grid {
        let image = phi(b);
        if bundle.charts_at(&image).is_empty() {
            return Err(Error::ImageEscapes {
                point: b.clone(),
                image,
            });
        }
    }
    let cover: Vec<Predicate<Point>> = (0..bundle.charts())
        .map(|i| {
            let (src, phi) = (bundle.cover[i].clone(), phi.clone());
            Arc::new(move |b: &Point| src(&phi(b))) as Predicate<Point>
        })
        .collect();
    let mut out = CocycleBundle::new(format!("{}*", bundle.name), base, bundle.group.clone(), cover.clone());
    if let Some(p) = &bundle.partition {
        let (eval, phi) = (p.evaluator(), phi.clone());
        let family = Arc::new(move |b: &Point| eval(&phi(b)));
        out = out.with_partition(PartitionOfUnity::from_parts(p.indices().to_vec(), family, cover)?)?;
    }
    for (&(i, j), f) in &bundle.transitions {
        let (f, phi) = (f.clone(), phi.clone());
        out.transitions.insert((i, j), Arc::new(move |b: &[f64]| f(&phi(b))));
    }
    Ok(out)
}

/// Restrictions of `a` and `b` to the common refinement `{A_i ∩ B_j}`,
/// indexed by `i * b.charts() + j`, with the product partition.
pub fn common_refinement(a: &CocycleBundle, b: &CocycleBundle) -> Result<(CocycleBundle, CocycleBundle, Vec<(usize, usize)>)> {
    let pairs: Vec<(usize, usize)> = (0..a.charts()).flat_map(|i| (0..b.charts()).map(move |j| (i, j))).collect();
    let cover: Vec<Predicate<Point>> = pairs
        .iter()
        .map(|&(i, j)| {
            let (p, q) = (a.cover[i].clone(), b.cover[j].clone());
            Arc::new(move |x: &Point| p(x) && q(x)) as Predicate<Point>
        })
        .collect();
    let partition = match (&a.partition, &b.partition) {
        (Some(pa), Some(pb)) => {
            let (ea, eb) = (pa.evaluator(), pb.evaluator());
            let nb = b.charts();
            let family = Arc::new(move |x: &Point| {
                let (u, v) = (ea(x), eb(x));
                (0..u.len() * nb).map(|k| u[k / nb] * v[k % nb]).collect()
            });
            Some(PartitionOfUnity::from_parts((0..pairs.len()).collect(), family, cover.clone())?)
        }
        _ => None,
    };
    let build = |src: &CocycleBundle, first: bool| -> Result<CocycleBundle> {
        let mut out = CocycleBundle::new(
            format!("{}|refined", src.name),
            a.base.clone(),
            src.group.clone(),
            cover.clone(),
        );
        if let Some(p) = &partition {
            out = out.with_partition(p.clone())?;
        }
        for (x, &(i, j)) in pairs.iter().enumerate() {
            for (y, &(k, l)) in pairs.iter().enumerate() {
                let (s, t) = if first { (i, k) } else { (j, l) };
                let src = src.clone();
                out.transitions
                    .insert((x, y), Arc::new(move |p: &[f64]| src.transition(s, t, p)));
            }
        }
        Ok(out)
    };
    Ok((build(a, true)?, build(b, false)?, pairs))
}

/// The classifying maps of a numerable bundle.
#[derive(Clone, Debug)]
pub struct Classification {
    bundle: CocycleBundle,
    truncation: usize,
}

/// Builds `f: E -> EG_n` and `c: B -> BG_n` with `n` the number of charts.
pub fn classify(bundle: &CocycleBundle, tol: &Tolerances) -> Result<Classification> {
    if bundle.partition.is_none() {
        return Err(Error::Precondition(format!("{} has no partition of unity", bundle.name)));
    }
    let report = validate(bundle, tol);
    if !report.pass {
        return Err(Error::Precondition(format!(
            "{} does not validate: {:?}",
            bundle.name, report.worst
        )));
    }
    Ok(Classification {
        bundle: bundle.clone(),
        truncation: bundle.charts(),
    })
}

impl Classification {
    pub fn bundle(&self) -> &CocycleBundle {
        &self.bundle
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `f(k, b, g) = [tau_i(b), g_ik(b) g]`.
    pub fn total_map(&self, x: &TotalPoint) -> Result<MilnorPoint<f64>> {
        let b = &self.bundle;
        if !b.in_chart(x.chart, &x.base) {
            return Err(Error::NotInChart {
                chart: x.chart,
                point: x.base.clone(),
            });
        }
        let tau = b.tau(&x.base)?;
        let mut entries = Vec::new();
        for (i, &t) in tau.iter().enumerate() {
            if t > 0.0 {
                let e = b.group.multiply(&b.transition(i, x.chart, &x.base)?, &x.fiber)?;
                entries.push(Entry::new(i, t, e));
            }
        }
        MilnorPoint::with_tolerance(entries, self.truncation, 1e-9)
    }

    /// `c(b) = pi(f(k, b, e))` for any chart `k` containing `b`.
    pub fn base_map(&self, b: &[f64]) -> Result<BGPoint<f64>> {
        let k = *self.bundle.charts_at(b).first().ok_or_else(|| Error::NotInChart {
            chart: 0,
            point: b.to_vec(),
        })?;
        let x = TotalPoint::new(k, b.to_vec(), self.bundle.group.identity());
        eg_project(&self.bundle.group, &self.total_map(&x)?)
    }

    /// Pullback of `EG_n -> BG_n` along `c`, with the cover `c^-1(B_j)`,
    /// partition `tau_j o c` and transitions from the sections `s_j`.
    pub fn universal_pullback(&self) -> Result<CocycleBundle> {
        let n = self.truncation;
        let this = Arc::new(self.clone());
        let cover: Vec<Predicate<Point>> = (0..=n)
            .map(|j| {
                let this = this.clone();
                Arc::new(move |b: &Point| this.base_map(b).map(|c| bg_cover_member(j, &c)).unwrap_or(false))
                    as Predicate<Point>
            })
            .collect();
        let family = {
            let this = this.clone();
            Arc::new(move |b: &Point| match this.base_map(b) {
                Ok(c) => bg_partition(&c),
                Err(_) => vec![0.0; n + 1],
            })
        };
        let mut out = CocycleBundle::new(
            format!("c*EG[{}]", self.bundle.name),
            self.bundle.base.clone(),
            self.bundle.group.clone(),
            cover.clone(),
        )
        .with_partition(PartitionOfUnity::from_parts((0..=n).collect(), family, cover)?)?;
        let g = self.bundle.group.clone();
        for a in 0..=n {
            for c in 0..=n {
                if a == c {
                    continue;
                }
                let (this, g) = (this.clone(), g.clone());
                out.set_transition(
                    a,
                    c,
                    Arc::new(move |b: &[f64]| {
                        let base = this.base_map(b)?;
                        let sa = bg_section(&g, a, &base)?;
                        let sc = bg_section(&g, c, &base)?;
                        eg_divide(&g, &sa, &sc, 0.0, f64::INFINITY)
                            .ok_or_else(|| Error::Contract("sections differ in weights".into()))
                    }),
                );
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub validation: ValidationReport,
    pub pullback_validation: ValidationReport,
    pub gauge: GaugeReport,
    pub max_equivariance: f64,
    pub max_representative: f64,
    pub max_weight: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Pulls `EG -> BG` back along the classifying map and checks, on the
/// common refinement, the gauge `lambda_(i,j)(b) = s_j(c(b))^-1 f(i, b, e)`
/// against the original cocycle. Also probes equivariance of `f`, its
/// independence of the chart used, and that its weights are the partition.
pub fn verify_classification<R: Rng + ?Sized>(
    bundle: &CocycleBundle,
    tol: &Tolerances,
    samples: usize,
    rng: &mut R,
) -> Result<ClassificationReport> {
    let validation = validate(bundle, tol);
    let cls = classify(bundle, tol)?;
    let g = bundle.group().clone();
    let universal = cls.universal_pullback()?;
    let pullback_validation = validate(&universal, tol);
    let (orig, pulled, pairs) = common_refinement(bundle, &universal)?;
    let lambda = {
        let cls = cls.clone();
        let g = g.clone();
        GaugeTransformation::new(pairs.len(), move |b, which| {
            let base = cls.base_map(b)?;
            which
                .iter()
                .map(|&k| {
                    let (i, j) = pairs[k];
                    let s = bg_section(&g, j, &base)?;
                    let f = cls.total_map(&TotalPoint::new(i, b.to_vec(), g.identity()))?;
                    eg_divide(&g, &s, &f, 0.0, f64::INFINITY)
                        .ok_or_else(|| Error::Contract("section and classifying map disagree in weights".into()))
                })
                .collect()
        })
    };
    let gauge = gauge_check(&orig, &pulled, &lambda, tol.classification)?;

    let grid = &bundle.base().grid;
    let (mut eqv, mut rep, mut wt) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let b = &grid[rng.gen_range(0..grid.len())];
        let charts = bundle.charts_at(b);
        let k = charts[rng.gen_range(0..charts.len())];
        let x = TotalPoint::new(k, b.clone(), g.sample(rng));
        let h = g.sample(rng);
        let fx = cls.total_map(&x)?;
        eqv = eqv.max(milnor_distance(&g, &cls.total_map(&x.act(&g, &h)?)?, &eg_act(&g, &fx, &h)?));
        for &j in &charts {
            let y = TotalPoint::new(j, b.clone(), bundle.coordinate_in(&x, j)?);
            rep = rep.max(milnor_distance(&g, &cls.total_map(&y)?, &fx));
        }
        let tau = bundle.tau(b)?;
        for (i, t) in tau.iter().enumerate() {
            let w = fx.weight(i);
            if w != *t && !(w == 0.0 && *t <= 0.0) {
                wt = wt.max((w - t).abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    let pass = validation.pass
        && pullback_validation.pass
        && gauge.pass
        && eqv <= tol.equivariance
        && rep <= tol.classification
        && wt == 0.0;
    Ok(ClassificationReport {
        validation,
        pullback_validation,
        gauge,
        max_equivariance: eqv,
        max_representative: rep,
        max_weight: wt,
        samples,
        pass,
    })
}

/// A linear action of the structure group on `R^dim`.
#[derive(Clone)]
pub struct Representation {
    dim: usize,
    map: Arc<dyn Fn(&Element<f64>) -> Result<Matrix<f64>> + Send + Sync>,
}

impl fmt::Debug for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Representation(dim {})", self.dim)
    }
}

impl Representation {
    pub fn new<F>(dim: usize, map: F) -> Self
    where
        F: Fn(&Element<f64>) -> Result<Matrix<f64>> + Send + Sync + 'static,
    {
        Self { dim, map: Arc::new(map) }
    }

    /// The built-in faithful representation of the group.
    pub fn standard(group: &Group) -> Self {
        let g = group.clone();
        Self::new(group.rep_dim(), move |e| g.representation(e))
    }

    pub fn trivial(dim: usize) -> Self {
        Self::new(dim, move |_| Ok(Matrix::identity(dim)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, e: &Element<f64>) -> Result<Matrix<f64>> {
        let m = (self.map)(e)?;
        if m.dim() != self.dim {
            return Err(Error::MissingRepresentation(format!(
                "representation of dimension {} returned a {}x{} matrix",
                self.dim,
                m.dim(),
                m.dim()
            )));
        }
        Ok(m)
    }
}

/// The vector bundle `E x_G R^n` as a `GL(n)` cocycle `rep(g_ij)`.
pub fn associated_bundle(principal: &CocycleBundle, rep: &Representation) -> Result<CocycleBundle> {
    if rep.dim() == 0 {
        return Err(Error::MissingRepresentation(principal.group().symbol()));
    }
    let mut out = CocycleBundle::new(
        format!("{} x_G R^{}", principal.name, rep.dim()),
        principal.base.clone(),
        Group::general_linear(rep.dim()),
        principal.cover.clone(),
    );
    if let Some(p) = &principal.partition {
        out = out.with_partition(p.clone())?;
    }
    for a in 0..principal.charts() {
        for c in 0..principal.charts() {
            let (src, rep) = (principal.clone(), rep.clone());
            out.set_transition(a, c, Arc::new(move |b: &[f64]| Ok(Element::Matrix(rep.apply(&src.transition(a, c, b)?)?))));
        }
    }
    Ok(out)
}

fn apply_matrix(m: &Matrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m.get(i, j) * v[j]).sum()).collect()
}

/// Frame bundle of a `GL(n)` vector-bundle cocycle: the transition of the
/// frames is read off from how the chart change moves the standard basis.
pub fn frame_bundle(vector: &CocycleBundle) -> Result<CocycleBundle> {
    let n = match vector.group().kind() {
        crate::group::GroupKind::GeneralLinear(n) => *n,
        _ => return Err(Error::GroupMismatch("frame bundle needs a GL(n) cocycle".into())),
    };
    let mut out = CocycleBundle::new(
        format!("Fr({})", vector.name),
        vector.base.clone(),
        vector.group.clone(),
        vector.cover.clone(),
    );
    if let Some(p) = &vector.partition {
        out = out.with_partition(p.clone())?;
    }
    for a in 0..vector.charts() {
        for c in 0..vector.charts() {
            let src = vector.clone();
            out.set_transition(
                a,
                c,
                Arc::new(move |b: &[f64]| {
                    let Element::Matrix(m) = src.transition(a, c, b)? else {
                        return Err(Error::GroupMismatch("non-matrix transition".into()));
                    };
                    let mut cols = vec![vec![0.0; n]; n];
                    for (k, col) in cols.iter_mut().enumerate() {
                        let mut e = vec![0.0; n];
                        e[k] = 1.0;
                        *col = apply_matrix(&m, &e);
                    }
                    let rows = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
                    Ok(Element::Matrix(Matrix::from_rows(rows)?))
                }),
            );
        }
    }
    Ok(out)
}

/// Associated bundle followed by the frame bundle, compared with
/// `rep(g_ij)` under the identity gauge.
pub fn frame_roundtrip_check(principal: &CocycleBundle, rep: &Representation, tol: f64) -> Result<GaugeReport> {
    let vb = associated_bundle(principal, rep)?;
    let frames = frame_bundle(&vb)?;
    let mut direct = CocycleBundle::new("rep(g)", principal.base.clone(), vb.group.clone(), principal.cover.clone());
    for a in 0..principal.charts() {
        for c in 0..principal.charts() {
            let (src, rep) = (principal.clone(), rep.clone());
            direct.set_transition(a, c, Arc::new(move |b: &[f64]| Ok(Element::Matrix(rep.apply(&src.transition(a, c, b)?)?))));
        }
    }
    let id = GaugeTransformation::identity(frames.group(), frames.charts());
    gauge_check(&frames, &direct, &id, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeSearch {
    pub candidates: usize,
    pub found: Option<Vec<Element<f64>>>,
    pub min_violation: f64,
}

/// Tries every constant gauge from `b1` to `b2`; finite groups only.
pub fn constant_gauge_search(b1: &CocycleBundle, b2: &CocycleBundle, tol: f64) -> Result<GaugeSearch> {
    let elems: Vec<Element<f64>> = b1
        .group()
        .elements()
        .ok_or_else(|| Error::Precondition(format!("{} is not finite", b1.group().symbol())))?;
    let n = b1.charts();
    let total = elems.len().pow(n as u32);
    let mut best = GaugeSearch {
        candidates: total,
        found: None,
        min_violation: f64::INFINITY,
    };
    for code in 0..total {
        let mut c = code;
        let choice: Vec<Element<f64>> = (0..n)
            .map(|_| {
                let e = elems[c % elems.len()].clone();
                c /= elems.len();
                e
            })
            .collect();
        let r = gauge_check(b1, b2, &GaugeTransformation::constant(choice.clone()), tol)?;
        if r.max_violation < best.min_violation {
            best.min_violation = r.max_violation;
        }
        if r.pass && best.found.is_none() {
            best.found = Some(choice);
        }
    }
    Ok(best)
}

/// The product bundle `B x G` over the cover of `like`, with every
/// transition the identity.
pub fn trivial_on_cover(like: &CocycleBundle) -> CocycleBundle {
    let mut out = CocycleBundle::new(
        format!("trivial[{}]", like.name),
        like.base.clone(),
        like.group.clone(),
        like.cover.clone(),
    );
    out.partition = like.partition.clone();
    let e = like.group.identity::<f64>();
    for i in 0..like.charts() {
        for j in 0..like.charts() {
            let e = e.clone();
            out.transitions.insert((i, j), Arc::new(move |_: &[f64]| Ok(e.clone())));
        }
    }
    out
}
