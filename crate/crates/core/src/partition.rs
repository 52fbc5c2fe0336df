//! Smooth partitions of unity on sampled base spaces.
//!
//! A partition is stored as one vector-valued evaluator `x -> (mu_i(x))_i`
//! plus one membership predicate per index. Supports are audited on the
//! sample grid and on small probe balls around it; closures in the
//! D-topology are not computable from samples, so every invariant here is a
//! grid-scale statement.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real};
use crate::smooth::flat_bump;

/// A point type that can be sampled, printed and probed.
pub trait BasePoint: Clone + fmt::Debug + Send + Sync + 'static {
    /// Coordinates used in error messages and reports.
    fn coords(&self) -> Vec<f64>;

    /// The point itself plus nearby points within `radius`.
    fn probe_ball(&self, radius: f64) -> Vec<Self>;
}

impl BasePoint for f64 {
    fn coords(&self) -> Vec<f64> {
        vec![*self]
    }

    fn probe_ball(&self, radius: f64) -> Vec<Self> {
        vec![*self, self - radius, self + radius, self - radius / 2.0, self + radius / 2.0]
    }
}

impl BasePoint for Vec<f64> {
    fn coords(&self) -> Vec<f64> {
        self.clone()
    }

    fn probe_ball(&self, radius: f64) -> Vec<Self> {
        let mut out = vec![self.clone()];
        for axis in 0..self.len() {
            for step in [-radius, radius, -radius / 2.0, radius / 2.0] {
                let mut p = self.clone();
                p[axis] += step;
                out.push(p);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointKind {
    Vector,
    Angle,
    Label,
    Milnor,
}

/// A finite stand-in for a base space: a name, a point kind and a sample grid.
#[derive(Clone, Debug)]
pub struct BaseSpace<P> {
    pub name: String,
    pub kind: PointKind,
    pub grid: Vec<P>,
}

impl<P: BasePoint> BaseSpace<P> {
    pub fn new(name: impl Into<String>, kind: PointKind, grid: Vec<P>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Contract("sample grid must be nonempty".into()));
        }
        Ok(Self {
            name: name.into(),
            kind,
            grid,
        })
    }
}

pub type FamilyFn<P, T> = Arc<dyn Fn(&P) -> Vec<T> + Send + Sync>;
pub type Predicate<P> = Arc<dyn Fn(&P) -> bool + Send + Sync>;

/// Nonnegative functions summing to one, each with the cover set it must be
/// subordinate to.
#[derive(Clone)]
pub struct PartitionOfUnity<P, T> {
    indices: Vec<usize>,
    eval: FamilyFn<P, T>,
    cover: Vec<Predicate<P>>,
}

impl<P, T> fmt::Debug for PartitionOfUnity<P, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartitionOfUnity").field("indices", &self.indices).finish()
    }
}

impl<P: BasePoint, T: Real> PartitionOfUnity<P, T> {
    /// Wraps an already normalized family without checking it.
    pub fn from_parts(indices: Vec<usize>, eval: FamilyFn<P, T>, cover: Vec<Predicate<P>>) -> Result<Self> {
        if indices.len() != cover.len() {
            return Err(Error::Contract("one cover predicate per index".into()));
        }
        Ok(Self { indices, eval, cover })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// All values at `x`, in index order.
    pub fn values(&self, x: &P) -> Vec<T> {
        (self.eval)(x)
    }

    pub fn evaluator(&self) -> FamilyFn<P, T> {
        self.eval.clone()
    }

    /// Value of the function with index `index` (not position).
    pub fn value(&self, index: usize, x: &P) -> T {
        match self.indices.iter().position(|&i| i == index) {
            Some(pos) => self.values(x)[pos],
            None => T::zero(),
        }
    }

    pub fn in_cover(&self, pos: usize, x: &P) -> bool {
        (self.cover[pos])(x)
    }

    pub fn cover(&self) -> &[Predicate<P>] {
        &self.cover
    }

    /// Checks nonnegativity, the sum, and subordination on the grid.
    pub fn audit(&self, space: &BaseSpace<P>, support_floor: f64) -> PartitionReport {
        let mut report = PartitionReport::default();
        for x in &space.grid {
            let v = self.values(x);
            let mut sum = 0.0;
            let mut count = 0;
            for (pos, val) in v.iter().enumerate() {
                let val = val.to_f64_lossy();
                sum += val;
                report.min_value = report.min_value.min(val);
                if val > 0.0 && !self.in_cover(pos, x) {
                    report.subordination_violations += 1;
                }
                if val > support_floor {
                    count += 1;
                }
            }
            report.max_sum_error = report.max_sum_error.max((sum - 1.0).abs());
            report.max_support_count = report.max_support_count.max(count);
            report.points += 1;
        }
        report
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub points: usize,
    pub max_sum_error: f64,
    pub min_value: f64,
    pub subordination_violations: usize,
    pub max_support_count: usize,
}

impl Default for PartitionReport {
    fn default() -> Self {
        Self {
            points: 0,
            max_sum_error: 0.0,
            min_value: f64::INFINITY,
            subordination_violations: 0,
            max_support_count: 0,
        }
    }
}

impl PartitionReport {
    pub fn passes(&self, sum_tol: f64) -> bool {
        self.max_sum_error <= sum_tol && self.min_value >= 0.0 && self.subordination_violations == 0
    }
}

fn check_sums<P: BasePoint, T: Real>(family: &FamilyFn<P, T>, space: &BaseSpace<P>, floor: f64) -> Result<()> {
    for x in &space.grid {
        let v = family(x);
        if let Some(bad) = v.iter().find(|a| **a < T::zero() || a.is_nan()) {
            return Err(Error::NegativeSample {
                x: x.coords().first().copied().unwrap_or(f64::NAN),
                value: bad.to_f64_lossy(),
            });
        }
        let s: T = v.iter().fold(T::zero(), |a, b| a + *b);
        if !(s > c(floor)) {
            return Err(Error::VanishingSum { point: x.coords() });
        }
    }
    Ok(())
}

fn positivity_cover<P: BasePoint, T: Real>(family: &FamilyFn<P, T>, n: usize) -> Vec<Predicate<P>> {
    (0..n)
        .map(|pos| {
            let f = family.clone();
            Arc::new(move |x: &P| f(x)[pos] > T::zero()) as Predicate<P>
        })
        .collect()
}

/// Scales a nonnegative family to sum to one. When `cover` is `None` each
/// function is made subordinate to its own positivity set.
pub fn normalize<P: BasePoint, T: Real>(
    indices: Vec<usize>,
    family: FamilyFn<P, T>,
    cover: Option<Vec<Predicate<P>>>,
    space: &BaseSpace<P>,
    floor: f64,
) -> Result<PartitionOfUnity<P, T>> {
    check_sums(&family, space, floor)?;
    let n = indices.len();
    let cover = cover.unwrap_or_else(|| positivity_cover(&family, n));
    let eval: FamilyFn<P, T> = Arc::new(move |x: &P| {
        let v = family(x);
        let s = v.iter().fold(T::zero(), |a, b| a + *b);
        v.into_iter().map(|a| a / s).collect()
    });
    PartitionOfUnity::from_parts(indices, eval, cover)
}

/// Shrinks supports: `mu_i = phi(rho_i - sigma/2)` with `sigma = sum rho_j^2`,
/// renormalized. Wherever `mu_i > 0` one has `rho_i > sigma/2 > 0`.
///
/// The unnormalized sum is positive by construction but may be tiny, so
/// only strict positivity is required of it.
pub fn shrink_supports<P: BasePoint, T: Real>(
    rho: &PartitionOfUnity<P, T>,
    space: &BaseSpace<P>,
) -> Result<PartitionOfUnity<P, T>> {
    let inner = rho.evaluator();
    let family: FamilyFn<P, T> = Arc::new(move |x: &P| {
        let v = inner(x);
        let half_sigma = v.iter().fold(T::zero(), |a, b| a + *b * *b) * c(0.5);
        v.into_iter().map(|r| flat_bump(r - half_sigma)).collect()
    });
    let cover = positivity_cover(&rho.evaluator(), rho.len());
    normalize(rho.indices.clone(), family, Some(cover), space, 0.0)
}

/// `sigma_J = prod_{j in J} phi(rho_j - sum_{k not in J} rho_k)` for a subset
/// given as positions into `values`.
pub fn sigma_subset<T: Real>(values: &[T], subset: &[usize]) -> T {
    let total = values.iter().fold(T::zero(), |a, b| a + *b);
    let inside = subset.iter().fold(T::zero(), |a, &j| a + values[j]);
    let outside = total - inside;
    subset
        .iter()
        .fold(T::one(), |acc, &j| acc * flat_bump(values[j] - outside))
}

/// Every subset `J` of the support of `values` with `sigma_J > 0`, as
/// `(positions, sigma_J)`. Any `J` with `sigma_J > 0` lies inside the support,
/// so this enumeration is exact.
pub fn positive_subsets<T: Real>(values: &[T], max_cardinality: usize) -> Vec<(Vec<usize>, T)> {
    let support: Vec<usize> = (0..values.len()).filter(|&i| values[i] > T::zero()).collect();
    let m = support.len();
    let mut out = Vec::new();
    if m >= usize::BITS as usize {
        return out;
    }
    for mask in 1usize..(1 << m) {
        if mask.count_ones() as usize > max_cardinality {
            continue;
        }
        let subset: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| support[b]).collect();
        let s = sigma_subset(values, &subset);
        if s > T::zero() {
            out.push((subset, s));
        }
    }
    out
}

/// Output of [`countable_refine`].
#[derive(Clone, Debug)]
pub struct RefinedPartition<P, T> {
    /// Indexed by cardinality `n = 1..=max_cardinality`.
    pub partition: PartitionOfUnity<P, T>,
    /// For each grid point, the subsets (as original indices) with
    /// `sigma_J > 0`, grouped by cardinality.
    pub membership: Vec<BTreeMap<usize, Vec<Vec<usize>>>>,
}

impl<P: BasePoint, T: Real> RefinedPartition<P, T> {
    /// Grid points that lie in two distinct `B_J` of the same cardinality.
    pub fn disjointness_violations(&self) -> usize {
        self.membership
            .iter()
            .map(|m| m.values().filter(|sets| sets.len() > 1).count())
            .sum()
    }
}

/// Refines a partition to one indexed by cardinalities: `tau_n = sum over
/// |J| = n of sigma_J`, normalized. Sets `B_J = {sigma_J > 0}` with equal
/// cardinality are disjoint. As with [`shrink_supports`], the sum of the
/// `tau_n` only has to be strictly positive.
pub fn countable_refine<P: BasePoint, T: Real>(
    rho: &PartitionOfUnity<P, T>,
    space: &BaseSpace<P>,
    max_cardinality: usize,
) -> Result<RefinedPartition<P, T>> {
    let indices = rho.indices.clone();
    let mut membership = Vec::with_capacity(space.grid.len());
    for x in &space.grid {
        let v = rho.values(x);
        let count = v.iter().filter(|a| **a > T::zero()).count();
        if count > max_cardinality {
            return Err(Error::SupportTooLarge {
                point: x.coords(),
                count,
                limit: max_cardinality,
            });
        }
        let mut m: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
        for (subset, _) in positive_subsets(&v, max_cardinality) {
            let named = subset.iter().map(|&p| indices[p]).collect::<Vec<_>>();
            m.entry(subset.len()).or_default().push(named);
        }
        membership.push(m);
    }
    let inner = rho.evaluator();
    let family: FamilyFn<P, T> = Arc::new(move |x: &P| {
        let v = inner(x);
        let mut tau = vec![T::zero(); max_cardinality];
        for (subset, s) in positive_subsets(&v, max_cardinality) {
            tau[subset.len() - 1] = tau[subset.len() - 1] + s;
        }
        tau
    });
    let cover = positivity_cover(&family, max_cardinality);
    let partition = normalize((1..=max_cardinality).collect(), family, Some(cover), space, 0.0)?;
    Ok(RefinedPartition { partition, membership })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFinitenessReport {
    pub max_count: usize,
    pub worst_point: Vec<f64>,
    pub points: usize,
}

/// For each grid point, counts the cover sets meeting its probe ball.
pub fn audit_local_finiteness<P: BasePoint>(
    cover: &[Predicate<P>],
    space: &BaseSpace<P>,
    probe_radius: f64,
) -> LocalFinitenessReport {
    let mut report = LocalFinitenessReport {
        max_count: 0,
        worst_point: Vec::new(),
        points: space.grid.len(),
    };
    for x in &space.grid {
        let ball = x.probe_ball(probe_radius);
        let count = cover.iter().filter(|set| ball.iter().any(|p| set(p))).count();
        if count > report.max_count || report.worst_point.is_empty() {
            report.max_count = report.max_count.max(count);
            report.worst_point = x.coords();
        }
    }
    report
}
