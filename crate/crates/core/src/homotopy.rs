//! Transport of a bundle over `B x R` from time 0 to time 1.
//!
//! The slice cover tests, for a multi-index `k = (k(1), ..., k(n))`, that
//! the partition function `rho_k(i)` stays positive on the time slab
//! `[(i - 3/2)/n, (i + 1/2)/n]` for every `i`, using the zero-detecting
//! functional. Over such `b` the chart trivializations of consecutive slabs
//! glue to one trivialization of `{b} x [0, 1]`, and pushing fibers along
//! these glued trivializations yields the isomorphism between the bundles
//! at `t = 0` and `t = 1`.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::{common_refinement, gauge_check, pullback, CocycleBundle, GaugeReport, GaugeTransformation, Point};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::group::{Element, Group};
use crate::partition::{BaseSpace, PointKind};
use crate::smooth::{BumpSpec, StepFunction};
use crate::zero_detect::{functional_kernel, ZeroDetectConfig};

pub type MultiIndex = Vec<usize>;
pub type Homotopy = Arc<dyn Fn(&[f64], f64) -> Point + Send + Sync>;

fn step(t: f64) -> f64 {
    static STEP: OnceLock<StepFunction<f64>> = OnceLock::new();
    STEP.get_or_init(|| StepFunction::new(BumpSpec::default())).value(t)
}

fn with_time(b: &[f64], t: f64) -> Point {
    let mut p = b.to_vec();
    p.push(t);
    p
}

/// A bundle over `B x R`; base points are `b` with the time appended.
#[derive(Clone, Debug)]
pub struct CylinderBundle {
    bundle: CocycleBundle,
    base: BaseSpace<Point>,
}

/// Times at which cylinder bundles are validated: every slab for `n <= 4`
/// reaches at most `1/8` outside `[0, 1]`.
pub fn time_grid(points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|k| -0.125 + 1.25 * k as f64 / (n - 1) as f64).collect()
}

/// `base x times` as a base space of points `b ++ [t]`.
pub fn product_grid_space(base: &BaseSpace<Point>, times: &[f64]) -> Result<BaseSpace<Point>> {
    let grid = base
        .grid
        .iter()
        .flat_map(|b| times.iter().map(move |&t| with_time(b, t)))
        .collect();
    BaseSpace::new(format!("{} x R", base.name), PointKind::Vector, grid)
}

impl CylinderBundle {
    /// `bundle` must live over points `b ++ [t]` with `b` from `base`.
    pub fn new(bundle: CocycleBundle, base: BaseSpace<Point>) -> Result<Self> {
        if bundle.partition().is_none() {
            return Err(Error::Precondition(format!("{} has no partition of unity", bundle.name())));
        }
        Ok(Self { bundle, base })
    }

    /// `F^* target` for a homotopy `F: B x R -> B'`.
    pub fn from_homotopy(target: &CocycleBundle, base: BaseSpace<Point>, f: Homotopy, times: usize) -> Result<Self> {
        let grid = product_grid_space(&base, &time_grid(times))?;
        let pulled = pullback(
            target,
            grid,
            Arc::new(move |p: &[f64]| {
                let (b, t) = p.split_at(p.len() - 1);
                f(b, t[0])
            }),
        )?;
        Self::new(pulled, base)
    }

    /// The time-independent cylinder `pr^* bundle`.
    pub fn product(bundle: &CocycleBundle, times: usize) -> Result<Self> {
        Self::from_homotopy(bundle, bundle.base().clone(), Arc::new(|b: &[f64], _| b.to_vec()), times)
    }

    pub fn bundle(&self) -> &CocycleBundle {
        &self.bundle
    }

    pub fn base(&self) -> &BaseSpace<Point> {
        &self.base
    }

    pub fn charts(&self) -> usize {
        self.bundle.charts()
    }

    pub fn group(&self) -> &Group {
        self.bundle.group()
    }

    /// `rho_c(b, t)`.
    pub fn tau(&self, c: usize, b: &[f64], t: f64) -> f64 {
        self.bundle.tau(&with_time(b, t)).map(|v| v[c]).unwrap_or(0.0)
    }

    pub fn transition(&self, i: usize, j: usize, b: &[f64], t: f64) -> Result<Element<f64>> {
        self.bundle.transition(i, j, &with_time(b, t))
    }

    /// The bundle over `B x {t0}`.
    pub fn restriction(&self, t0: f64) -> Result<CocycleBundle> {
        Ok(pullback(&self.bundle, self.base.clone(), Arc::new(move |b: &[f64]| with_time(b, t0)))?
            .renamed(format!("{}|t={t0}", self.bundle.name())))
    }

    /// The same bundle with time run backwards, `t -> 1 - t`.
    pub fn reversed(&self) -> Result<Self> {
        let grid = self.bundle.base().clone();
        let flipped = pullback(
            &self.bundle,
            grid,
            Arc::new(|p: &[f64]| {
                let mut q = p.to_vec();
                let last = q.len() - 1;
                q[last] = 1.0 - q[last];
                q
            }),
        )?;
        Self::new(flipped.renamed(format!("{} reversed", self.bundle.name())), self.base.clone())
    }
}

/// The slab `[(i - 3/2)/n, (i + 1/2)/n]`, `i` counted from 1.
pub fn slab(n: usize, i: usize) -> (f64, f64) {
    let n = n as f64;
    let i = i as f64;
    ((i - 1.5) / n, (i + 0.5) / n)
}

/// Settings for the slice cover and the transport.
#[derive(Clone, Copy, Debug)]
pub struct TransportConfig {
    pub zero: ZeroDetectConfig,
    pub max_n: usize,
    pub gauge_tol: f64,
}

impl TransportConfig {
    pub fn from_tolerances(t: &Tolerances) -> Self {
        let mut zero = ZeroDetectConfig::from_tolerances(t);
        zero.grid = t.slice_grid.max(2);
        zero.divergence_cap = t.slice_cap;
        zero.quad_rel_tol = t.slice_rel_tol;
        Self {
            zero,
            max_n: t.slice_max_n.max(1),
            gauge_tol: t.transport,
        }
    }
}

/// `ln(-ln F(rho~_c(b)))` on slab `i` of `n`, i.e. `integral 1/rho~`;
/// `+inf` when the functional detects a zero.
fn slab_log_factor(cyl: &CylinderBundle, b: &[f64], n: usize, i: usize, c: usize, cfg: &ZeroDetectConfig) -> Result<f64> {
    let nf = n as f64;
    let f = |s: f64| cyl.tau(c, b, (2.0 * s + i as f64 - 1.5) / nf);
    Ok(functional_kernel(&f, cfg)?.log_log_value)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Every `k` in `I^n` with `ln(-ln rho^_k(b))`; non-members carry `+inf`.
/// Kept in this form since `ln rho^_k` itself overflows for members whose
/// partition functions get small.
pub fn slice_values(cyl: &CylinderBundle, b: &[f64], n: usize, cfg: &ZeroDetectConfig) -> Result<Vec<(MultiIndex, f64)>> {
    let m = cyl.charts();
    let mut table = vec![vec![0.0; m]; n];
    for (i, row) in table.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = slab_log_factor(cyl, b, n, i + 1, c, cfg)?;
        }
    }
    let total = m.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut k = vec![0; n];
        let mut rest = code;
        for slot in k.iter_mut().rev() {
            *slot = rest % m;
            rest /= m;
        }
        let terms: Vec<f64> = k.iter().enumerate().map(|(i, &c)| table[i][c]).collect();
        out.push((k, log_sum_exp(&terms)));
    }
    Ok(out)
}

/// Members of the slice cover at `b` for all `n <= max_n`, in the order
/// `(n, k)` lexicographic.
pub fn members_at(cyl: &CylinderBundle, b: &[f64], cfg: &TransportConfig) -> Result<Vec<(MultiIndex, f64)>> {
    let mut out = Vec::new();
    for n in 1..=cfg.max_n {
        out.extend(
            slice_values(cyl, b, n, &cfg.zero)?
                .into_iter()
                .filter(|(_, v)| v.is_finite()),
        );
    }
    if out.is_empty() {
        return Err(Error::IncreaseN {
            point: b.to_vec(),
            n: cfg.max_n,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceCover {
    pub n: usize,
    /// Members at each base grid point.
    pub members: Vec<Vec<MultiIndex>>,
    /// Grid points covered by no `k` in `I^n`.
    pub uncovered: Vec<Point>,
}

/// The sets `B_k`, `k in I^n`, on the base grid.
pub fn slice_cover(cyl: &CylinderBundle, n: usize, cfg: &TransportConfig) -> Result<SliceCover> {
    let rows: Vec<Vec<MultiIndex>> = cyl
        .base
        .grid
        .par_iter()
        .map(|b| {
            Ok(slice_values(cyl, b, n, &cfg.zero)?
                .into_iter()
                .filter(|(_, v)| v.is_finite())
                .map(|(k, _)| k)
                .collect())
        })
        .collect::<Result<_>>()?;
    let uncovered = cyl
        .base
        .grid
        .iter()
        .zip(&rows)
        .filter(|(_, r)| r.is_empty())
        .map(|(b, _)| b.clone())
        .collect();
    Ok(SliceCover {
        n,
        members: rows,
        uncovered,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiconditionalReport {
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<(Point, MultiIndex)>,
}

/// Compares membership from the functional with direct evaluation of each
/// `rho_k(i)` on the sampled slabs (positive meaning above the zero floor).
pub fn slice_biconditional(cyl: &CylinderBundle, n: usize, cfg: &TransportConfig) -> Result<BiconditionalReport> {
    let mut report = BiconditionalReport {
        checked: 0,
        violations: 0,
        first_violation: None,
    };
    let pts = cfg.zero.grid.max(2);
    for b in &cyl.base.grid {
        let positive: Vec<Vec<bool>> = (1..=n)
            .map(|i| {
                let (lo, hi) = slab(n, i);
                (0..cyl.charts())
                    .map(|c| {
                        (0..pts).all(|s| {
                            let t = lo + (hi - lo) * s as f64 / (pts - 1) as f64;
                            cyl.tau(c, b, t) >= cfg.zero.floor
                        })
                    })
                    .collect()
            })
            .collect();
        for (k, v) in slice_values(cyl, b, n, &cfg.zero)? {
            report.checked += 1;
            let direct = k.iter().enumerate().all(|(i, &c)| positive[i][c]);
            if direct != v.is_finite() {
                report.violations += 1;
                if report.first_violation.is_none() {
                    report.first_violation = Some((b.clone(), k));
                }
            }
        }
    }
    Ok(report)
}

/// The glued trivialization of `{b} x [0, 1]` along a member `k`.
///
/// Piece `j` uses chart `k(j)` on `[(j-1)/n, j/n)`. Its gauge satisfies
/// `Y_1 = e` and `Y_{j+1}(t) = g_{k(j+1) k(j)}(b, z_j(t)) Y_j(z_j(t))`,
/// where `z_j` agrees with the identity right after the switch time `j/n`
/// and then freezes at `j/n`, so it never leaves the slab overlap.
#[derive(Clone, Debug)]
pub struct Trivialization<'a> {
    cyl: &'a CylinderBundle,
    b: Point,
    k: MultiIndex,
}

pub fn cylinder_trivialize<'a>(
    cyl: &'a CylinderBundle,
    b: &[f64],
    k: &[usize],
    cfg: &TransportConfig,
) -> Result<Trivialization<'a>> {
    let n = k.len();
    for (i, &c) in k.iter().enumerate() {
        if slab_log_factor(cyl, b, n, i + 1, c, &cfg.zero)?.is_infinite() {
            return Err(Error::NotInChart {
                chart: c,
                point: b.to_vec(),
            });
        }
    }
    Ok(Trivialization {
        cyl,
        b: b.to_vec(),
        k: k.to_vec(),
    })
}

impl Trivialization<'_> {
    pub fn multi_index(&self) -> &[usize] {
        &self.k
    }

    fn n(&self) -> usize {
        self.k.len()
    }

    /// Piece containing `t`, counted from 1.
    pub fn piece(&self, t: f64) -> usize {
        let n = self.n();
        ((t * n as f64).floor() as i64 + 1).clamp(1, n as i64) as usize
    }

    pub fn chart_at(&self, t: f64) -> usize {
        self.k[self.piece(t) - 1]
    }

    fn freeze(&self, j: usize, t: f64) -> f64 {
        let n = self.n() as f64;
        let s = j as f64 / n;
        let delta = 0.5 / n;
        if t <= s {
            return t;
        }
        let x = (t - s) / delta;
        s + delta * x * (1.0 - step(x))
    }

    /// `Y_j(t)`, meaningful for `t >= (j-1)/n`.
    pub fn gauge(&self, j: usize, t: f64) -> Result<Element<f64>> {
        let g = self.cyl.group();
        if j <= 1 {
            return Ok(g.identity());
        }
        let z = self.freeze(j - 1, t);
        let step = self.cyl.transition(self.k[j - 1], self.k[j - 2], &self.b, z)?;
        g.multiply(&step, &self.gauge(j - 1, z)?)
    }

    /// `h_k(b, t, y) = (chart, Y(t) y)`.
    pub fn to_chart(&self, t: f64, y: &Element<f64>) -> Result<(usize, Element<f64>)> {
        let j = self.piece(t);
        Ok((self.k[j - 1], self.cyl.group().multiply(&self.gauge(j, t)?, y)?))
    }

    /// Inverse of [`Trivialization::to_chart`] for a point given in any
    /// chart containing `(b, t)`.
    pub fn from_chart(&self, t: f64, chart: usize, coord: &Element<f64>) -> Result<Element<f64>> {
        let g = self.cyl.group();
        let j = self.piece(t);
        let here = g.multiply(&self.cyl.transition(self.k[j - 1], chart, &self.b, t)?, coord)?;
        g.divide_left(&self.gauge(j, t)?, &here)
    }

    /// Largest jump of `h_k(b, ., e)` across the switch times, comparing
    /// both sides in the later chart.
    pub fn switch_jump(&self, eps: f64) -> Result<f64> {
        let g = self.cyl.group();
        let mut worst: f64 = 0.0;
        for j in 1..self.n() {
            let s = j as f64 / self.n() as f64;
            let (cl, yl) = self.to_chart(s - eps, &g.identity())?;
            let (cr, yr) = self.to_chart(s + eps, &g.identity())?;
            let moved = g.multiply(&self.cyl.transition(cr, cl, &self.b, s - eps)?, &yl)?;
            worst = worst.max(g.distance(&moved, &yr));
        }
        Ok(worst)
    }
}

/// The composite `f_km o ... o f_k1` over one base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTransport {
    /// Applied factors `(k, u_k(b))` in order.
    pub factors: Vec<(MultiIndex, f64)>,
    /// Start chart, end chart and end coordinate of `(c0, e)`.
    pub images: Vec<(usize, usize, Element<f64>)>,
    pub final_time: f64,
}

/// `u_k(b) = step(rho_k(b) / sigma(b))` for all members at `b`, with
/// `rho_k` the normalized `rho^_k` and `sigma = sum rho_k^2`. Members come
/// with `ln(-ln rho^_k)` as produced by [`slice_values`].
pub fn transport_weights(members: &[(MultiIndex, f64)]) -> Vec<f64> {
    let low = members.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    // rho^_k / rho^_min = exp(-(e^l_k - e^l_min))
    let raw: Vec<f64> = members
        .iter()
        .map(|m| if m.1 == low { 1.0 } else { (-(low.exp() * (m.1 - low).exp_m1())).exp() })
        .collect();
    let total: f64 = raw.iter().sum();
    let rho: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let sigma: f64 = rho.iter().map(|r| r * r).sum();
    rho.iter().map(|r| step(r / sigma)).collect()
}

fn push_through(
    triv: &Trivialization<'_>,
    u: f64,
    state: (usize, Element<f64>, f64),
) -> Result<(usize, Element<f64>, f64)> {
    let (chart, coord, t) = state;
    let fiber = triv.from_chart(t, chart, &coord)?;
    let t_new = if u >= 1.0 { 1.0 } else { (1.0 - t) * u + t };
    let (c, y) = triv.to_chart(t_new, &fiber)?;
    Ok((c, y, t_new))
}

/// Runs the composite at `b` for every start chart containing `(b, 0)`.
/// With `include_idle`, members with `u_k(b) = 0` are applied as well.
pub fn transport_at(cyl: &CylinderBundle, b: &[f64], cfg: &TransportConfig, include_idle: bool) -> Result<PointTransport> {
    let members = members_at(cyl, b, cfg)?;
    let u = transport_weights(&members);
    if u.iter().cloned().fold(0.0, f64::max) < 1.0 {
        return Err(Error::Contract(format!("sup_k u_k < 1 at {b:?}")));
    }
    let mut factors = Vec::new();
    let mut trivs = Vec::new();
    for ((k, _), &uk) in members.iter().zip(&u) {
        if uk > 0.0 || include_idle {
            factors.push((k.clone(), uk));
            trivs.push(cylinder_trivialize(cyl, b, k, cfg)?);
        }
    }
    let g = cyl.group();
    let start = cyl.bundle.charts_at(&with_time(b, 0.0));
    let mut images = Vec::new();
    let mut final_time = 0.0;
    for c0 in start {
        let mut state = (c0, g.identity(), 0.0);
        for (triv, (_, uk)) in trivs.iter().zip(&factors) {
            state = push_through(triv, *uk, state)?;
        }
        final_time = state.2;
        images.push((c0, state.0, state.1));
    }
    if final_time != 1.0 {
        return Err(Error::Contract(format!("composite ends at t = {final_time} over {b:?}")));
    }
    Ok(PointTransport {
        factors,
        images,
        final_time,
    })
}

/// The isomorphism between the restrictions at `t = 0` and `t = 1`, on
/// their common refinement.
#[derive(Clone, Debug)]
pub struct TransportResult {
    pub start: CocycleBundle,
    pub end: CocycleBundle,
    pub pairs: Vec<(usize, usize)>,
    pub gauge: GaugeTransformation,
    pub log: Vec<(Point, PointTransport)>,
    pub check: GaugeReport,
}

fn key(b: &[f64]) -> Vec<u64> {
    b.iter().map(|x| x.to_bits()).collect()
}

/// Builds the transport gauge `lambda_(c0, c1)(b) = g_{c1 c}(b, 1) y` where
/// the composite sends `(c0, e)` at time 0 to `(c, y)` at time 1, and checks
/// it against the two restrictions.
pub fn endpoint_transport(cyl: &CylinderBundle, cfg: &TransportConfig) -> Result<TransportResult> {
    let start_raw = cyl.restriction(0.0)?;
    let end_raw = cyl.restriction(1.0)?;
    let (start, end, pairs) = common_refinement(&start_raw, &end_raw)?;
    let log: Vec<(Point, PointTransport)> = cyl
        .base
        .grid
        .par_iter()
        .map(|b| Ok((b.clone(), transport_at(cyl, b, cfg, false)?)))
        .collect::<Result<_>>()?;
    let cache: Arc<BTreeMap<Vec<u64>, PointTransport>> =
        Arc::new(log.iter().map(|(b, t)| (key(b), t.clone())).collect());
    let gauge = {
        let cyl = cyl.clone();
        let cfg = *cfg;
        let pairs = pairs.clone();
        GaugeTransformation::new(pairs.len(), move |b, which| {
            let fresh;
            let tr = match cache.get(&key(b)) {
                Some(t) => t,
                None => {
                    fresh = transport_at(&cyl, b, &cfg, false)?;
                    &fresh
                }
            };
            let g = cyl.group();
            which
                .iter()
                .map(|&p| {
                    let (c0, c1) = pairs[p];
                    let (_, c, y) = tr
                        .images
                        .iter()
                        .find(|im| im.0 == c0)
                        .ok_or_else(|| Error::NotInChart {
                            chart: c0,
                            point: b.to_vec(),
                        })?;
                    g.multiply(&cyl.transition(c1, *c, b, 1.0)?, y)
                })
                .collect()
        })
    };
    let check = gauge_check(&start, &end, &gauge, cfg.gauge_tol)?;
    Ok(TransportResult {
        start,
        end,
        pairs,
        gauge,
        log,
        check,
    })
}

/// Cor: homotopic maps pull back isomorphic bundles. Pulls `target` back
/// along `f` and transports.
pub fn homotopy_pullback_iso(
    target: &CocycleBundle,
    base: BaseSpace<Point>,
    f: Homotopy,
    times: usize,
    cfg: &TransportConfig,
) -> Result<TransportResult> {
    let cyl = CylinderBundle::from_homotopy(target, base, f, times)?;
    endpoint_transport(&cyl, cfg)
}

/// Largest `d(lambda_rev_(c1, c0) lambda_fwd_(c0, c1), e)` over the grid.
pub fn inverse_defect(fwd: &TransportResult, rev: &TransportResult, group: &Group) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (b, _) in &fwd.log {
        let charts = fwd.start.charts_at(b);
        if charts.is_empty() {
            continue;
        }
        let lf = fwd.gauge.eval(b, &charts)?;
        let back: Vec<usize> = charts
            .iter()
            .map(|&p| {
                let (c0, c1) = fwd.pairs[p];
                rev.pairs.iter().position(|&q| q == (c1, c0)).expect("same chart sets")
            })
            .collect();
        let lr = rev.gauge.eval(b, &back)?;
        for (a, r) in lf.iter().zip(&lr) {
            worst = worst.max(group.distance(&group.multiply(r, a)?, &group.identity()));
        }
    }
    Ok(worst)
}

/// Largest `d(composite(c0, h), lambda h)` over the grid and the given
/// group elements.
pub fn transport_equivariance(
    cyl: &CylinderBundle,
    result: &TransportResult,
    elements: &[Element<f64>],
    cfg: &TransportConfig,
) -> Result<f64> {
    let g = cyl.group();
    let mut worst: f64 = 0.0;
    for (b, tr) in &result.log {
        let trivs: Vec<_> = tr
            .factors
            .iter()
            .map(|(k, _)| cylinder_trivialize(cyl, b, k, cfg))
            .collect::<Result<_>>()?;
        for (c0, c, y) in &tr.images {
            for h in elements {
                let mut state = (*c0, h.clone(), 0.0);
                for (triv, (_, uk)) in trivs.iter().zip(&tr.factors) {
                    state = push_through(triv, *uk, state)?;
                }
                let moved = g.multiply(&cyl.transition(*c, state.0, b, 1.0)?, &state.1)?;
                worst = worst.max(g.distance(&moved, &g.multiply(y, h)?));
            }
        }
    }
    Ok(worst)
}

/// Largest change of the transported coordinates when idle factors
/// (`u_k(b) = 0` but `b in B_k`) are applied too.
pub fn idle_factor_defect(cyl: &CylinderBundle, result: &TransportResult, cfg: &TransportConfig) -> Result<f64> {
    let g = cyl.group();
    let mut worst: f64 = 0.0;
    for (b, tr) in &result.log {
        let with_idle = transport_at(cyl, b, cfg, true)?;
        for ((c0, c, y), (d0, d, z)) in tr.images.iter().zip(&with_idle.images) {
            debug_assert_eq!(c0, d0);
            let moved = g.multiply(&cyl.transition(*c, *d, b, 1.0)?, z)?;
            worst = worst.max(g.distance(&moved, y));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::validate;
    use crate::partition::{PartitionOfUnity, Predicate};
    use crate::smooth::flat_bump;

    fn interval(n: usize) -> BaseSpace<Point> {
        BaseSpace::new(
            "I",
            PointKind::Vector,
            (0..n).map(|k| vec![k as f64 / (n - 1) as f64]).collect(),
        )
        .unwrap()
    }

    /// Chart 0 lives on `t < 0.8`, chart 1 on `t > 0.2`, with a
    /// time-dependent transition `g_01(b, t) = b + t` in `(R, +)`.
    fn time_swap() -> CylinderBundle {
        let cover: Vec<Predicate<Point>> = vec![Arc::new(|p: &Point| p[1] < 0.8), Arc::new(|p: &Point| p[1] > 0.2)];
        let family = Arc::new(|p: &Point| {
            let a = flat_bump(0.8 - p[1]);
            let b = flat_bump(p[1] - 0.2);
            vec![a / (a + b), b / (a + b)]
        });
        let base = interval(5);
        let grid = product_grid_space(&base, &time_grid(21)).unwrap();
        let bundle = CocycleBundle::new("swap", grid, Group::additive(), cover.clone())
            .with_partition(PartitionOfUnity::from_parts(vec![0, 1], family, cover).unwrap())
            .unwrap()
            .with_transition(0, 1, Arc::new(|p: &[f64]| Ok(Element::Real(p[0] + p[1]))));
        CylinderBundle::new(bundle, base).unwrap()
    }

    fn cfg() -> TransportConfig {
        TransportConfig::from_tolerances(&Tolerances::default())
    }

    #[test]
    fn slabs() {
        assert_eq!(slab(1, 1), (-0.5, 1.5));
        assert_eq!(slab(2, 1), (-0.25, 0.75));
        assert_eq!(slab(2, 2), (0.25, 1.25));
    }

    #[test]
    fn time_swap_slice_cover() {
        let cyl = time_swap();
        assert!(validate(cyl.bundle(), &Tolerances::default()).pass);
        let one = slice_cover(&cyl, 1, &cfg()).unwrap();
        assert_eq!(one.uncovered.len(), cyl.base().grid.len());
        let two = slice_cover(&cyl, 2, &cfg()).unwrap();
        assert!(two.uncovered.is_empty());
        assert!(two.members.iter().all(|m| m == &vec![vec![0, 1]]));
        for n in 1..=4 {
            let r = slice_biconditional(&cyl, n, &cfg()).unwrap();
            assert_eq!(r.violations, 0, "n={n}: {r:?}");
        }
    }

    #[test]
    fn constant_in_time_partition_recovers_the_base_cover() {
        let base = interval(9);
        let cover: Vec<Predicate<Point>> = vec![Arc::new(|p: &Point| p[0] < 0.7), Arc::new(|p: &Point| p[0] > 0.3)];
        let family = Arc::new(|p: &Point| {
            let a = flat_bump(0.7 - p[0]);
            let b = flat_bump(p[0] - 0.3);
            vec![a / (a + b), b / (a + b)]
        });
        let bundle = CocycleBundle::new("halves", base.clone(), Group::sign(), cover.clone())
            .with_partition(PartitionOfUnity::from_parts(vec![0, 1], family, cover).unwrap())
            .unwrap()
            .with_transition(0, 1, Arc::new(|_: &[f64]| Ok(Element::Sign(-1))));
        let cyl = CylinderBundle::product(&bundle, 11).unwrap();
        let sc = slice_cover(&cyl, 1, &cfg()).unwrap();
        for (b, m) in base.grid.iter().zip(&sc.members) {
            let expect: Vec<MultiIndex> = [(0, b[0] < 0.7), (1, b[0] > 0.3)]
                .iter()
                .filter(|x| x.1)
                .map(|x| vec![x.0])
                .collect();
            assert_eq!(m, &expect, "b = {b:?}");
        }
        let r = endpoint_transport(&cyl, &cfg()).unwrap();
        assert!(r.check.pass, "{:?}", r.check);
    }

    #[test]
    fn gluing_examples() {
        let cyl = time_swap();
        let b = vec![0.5];
        let single = cylinder_trivialize(&cyl, &b, &[0, 1], &cfg()).unwrap();
        assert!(single.switch_jump(1e-9).unwrap() < 1e-8);
        // frozen transition on the late piece: g_10(b, 1/2) = -(b + 1/2)
        let y = single.gauge(2, 0.9).unwrap();
        assert_eq!(y, Element::Real(-1.0));
        assert!(matches!(
            cylinder_trivialize(&cyl, &b, &[1, 0], &cfg()),
            Err(Error::NotInChart { .. })
        ));
    }

    #[test]
    fn time_swap_transport() {
        let cyl = time_swap();
        let r = endpoint_transport(&cyl, &cfg()).unwrap();
        assert!(r.check.pass, "{:?}", r.check);
        for (_, tr) in &r.log {
            assert_eq!(tr.final_time, 1.0);
        }
        let rev = endpoint_transport(&cyl.reversed().unwrap(), &cfg()).unwrap();
        assert!(rev.check.pass);
        assert!(inverse_defect(&r, &rev, cyl.group()).unwrap() < 1e-6);
        let hs = [Element::Real(0.5), Element::Real(-2.0)];
        assert!(transport_equivariance(&cyl, &r, &hs, &cfg()).unwrap() < 1e-9);
        assert!(idle_factor_defect(&cyl, &r, &cfg()).unwrap() < 1e-9);
    }

    #[test]
    fn too_small_n_asks_for_more() {
        let cyl = time_swap();
        let mut c = cfg();
        c.max_n = 1;
        assert!(matches!(endpoint_transport(&cyl, &c), Err(Error::IncreaseN { .. })));
    }
}
