//! Finite truncations of the Milnor construction `EG -> BG`.
//!
//! A [`MilnorPoint`] is a sparse list of `(index, weight, element)` entries
//! with positive weights summing to one. Zero-weight entries are dropped on
//! construction: their group coordinate carries no information, and the
//! sparse canonical form makes equality testable. The group itself is passed
//! to every operation rather than stored in the point.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Element, Group};
use crate::partition::BasePoint;
use crate::scalar::Scalar;
use crate::smooth::{flat_bump, BumpSpec, StepFunction};

/// Tolerance on `sum t_i = 1` used by [`MilnorPoint::new`].
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry<S> {
    pub index: usize,
    pub weight: S,
    pub element: Element<S>,
}

impl<S: Scalar> Entry<S> {
    pub fn new(index: usize, weight: S, element: Element<S>) -> Self {
        Self { index, weight, element }
    }
}

/// A point `[t_i, g_i]` of `EG_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilnorPoint<S> {
    entries: Vec<Entry<S>>,
    truncation: usize,
}

impl<S: Scalar> MilnorPoint<S> {
    /// Drops zero weights, sorts by index and checks the invariants.
    pub fn new(entries: Vec<Entry<S>>, truncation: usize) -> Result<Self> {
        Self::with_tolerance(entries, truncation, WEIGHT_TOL)
    }

    pub fn with_tolerance(mut entries: Vec<Entry<S>>, truncation: usize, tol: f64) -> Result<Self> {
        entries.retain(|e| !e.weight.is_zero());
        entries.sort_by_key(|e| e.index);
        if entries.windows(2).any(|w| w[0].index == w[1].index) {
            return Err(Error::Contract("duplicate index in Milnor point".into()));
        }
        if let Some(e) = entries.iter().find(|e| e.weight < S::zero()) {
            return Err(Error::Contract(format!("negative weight at index {}", e.index)));
        }
        if let Some(e) = entries.iter().find(|e| e.index > truncation) {
            return Err(Error::Contract(format!("index {} exceeds truncation {truncation}", e.index)));
        }
        let sum = entries.iter().fold(S::zero(), |a, e| a + e.weight.clone());
        if ((sum - S::one()).to_f64_lossy()).abs() > tol {
            return Err(Error::Contract("weights do not sum to 1".into()));
        }
        Ok(Self { entries, truncation })
    }

    /// A single entry `[(index, 1, g)]`.
    pub fn vertex(index: usize, element: Element<S>, truncation: usize) -> Result<Self> {
        Self::new(vec![Entry::new(index, S::one(), element)], truncation)
    }

    fn raw(entries: Vec<Entry<S>>, truncation: usize) -> Self {
        let mut entries = entries;
        entries.retain(|e| !e.weight.is_zero());
        entries.sort_by_key(|e| e.index);
        Self { entries, truncation }
    }

    pub fn entries(&self) -> &[Entry<S>] {
        &self.entries
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn weight(&self, index: usize) -> S {
        self.entry(index).map(|e| e.weight.clone()).unwrap_or_else(S::zero)
    }

    pub fn entry(&self, index: usize) -> Option<&Entry<S>> {
        self.entries
            .binary_search_by_key(&index, |e| e.index)
            .ok()
            .map(|k| &self.entries[k])
    }

    pub fn element(&self, index: usize) -> Option<&Element<S>> {
        self.entry(index).map(|e| &e.element)
    }

    pub fn weight_sum(&self) -> S {
        self.entries.iter().fold(S::zero(), |a, e| a + e.weight.clone())
    }

    /// Lowest index with positive weight.
    pub fn first_index(&self) -> usize {
        self.entries.first().map(|e| e.index).unwrap_or(0)
    }

    pub fn to_f64(&self) -> MilnorPoint<f64> {
        MilnorPoint {
            entries: self
                .entries
                .iter()
                .map(|e| Entry::new(e.index, e.weight.to_f64_lossy(), e.element.to_f64()))
                .collect(),
            truncation: self.truncation,
        }
    }

    pub fn with_truncation(mut self, truncation: usize) -> Result<Self> {
        if self.entries.last().is_some_and(|e| e.index > truncation) {
            return Err(Error::Contract("truncation below the largest index".into()));
        }
        self.truncation = truncation;
        Ok(self)
    }

    /// A random point with `support` entries at distinct indices `<= truncation`.
    /// Weights are ratios of small integers, so they are exact for rationals.
    pub fn random<R: Rng + ?Sized>(g: &Group, truncation: usize, support: usize, rng: &mut R) -> Self {
        let support = support.clamp(1, truncation + 1);
        let mut indices: Vec<usize> = (0..=truncation).collect();
        for k in 0..support {
            let j = rng.gen_range(k..indices.len());
            indices.swap(k, j);
        }
        let mut idx = indices[..support].to_vec();
        idx.sort_unstable();
        let raw: Vec<u64> = (0..support).map(|_| rng.gen_range(1..=1000)).collect();
        let total: u64 = raw.iter().sum();
        let total_s = S::from_u64(total).expect("small integer");
        let entries = idx
            .into_iter()
            .zip(raw)
            .map(|(i, k)| Entry::new(i, S::from_u64(k).expect("small integer") / total_s.clone(), g.sample(rng)))
            .collect();
        Self::raw(entries, truncation)
    }
}

/// A point of `BG_n` stored in canonical gauge: the element at the smallest
/// index with positive weight is the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BGPoint<S>(MilnorPoint<S>);

impl<S: Scalar> BGPoint<S> {
    pub fn point(&self) -> &MilnorPoint<S> {
        &self.0
    }

    pub fn weight(&self, index: usize) -> S {
        self.0.weight(index)
    }

    pub fn truncation(&self) -> usize {
        self.0.truncation
    }

    pub fn is_canonical(&self, g: &Group) -> bool {
        self.0.entries.first().is_none_or(|e| e.element == g.identity())
    }
}

/// Distance between Milnor points: the larger of the total variation of the
/// weights and the largest group distance at indices where both weights are
/// positive.
pub fn milnor_distance<S: Scalar>(g: &Group, p: &MilnorPoint<S>, q: &MilnorPoint<S>) -> f64 {
    let mut tv = 0.0;
    let mut elem: f64 = 0.0;
    let (mut a, mut b) = (p.entries.iter().peekable(), q.entries.iter().peekable());
    loop {
        match (a.peek(), b.peek()) {
            (Some(x), Some(y)) if x.index == y.index => {
                tv += (x.weight.clone() - y.weight.clone()).to_f64_lossy().abs();
                elem = elem.max(g.distance(&x.element, &y.element));
                a.next();
                b.next();
            }
            (Some(x), Some(y)) if x.index < y.index => {
                tv += x.weight.to_f64_lossy().abs();
                a.next();
            }
            (Some(_), Some(y)) => {
                tv += y.weight.to_f64_lossy().abs();
                b.next();
            }
            (Some(x), None) => {
                tv += x.weight.to_f64_lossy().abs();
                a.next();
            }
            (None, Some(y)) => {
                tv += y.weight.to_f64_lossy().abs();
                b.next();
            }
            (None, None) => break,
        }
    }
    tv.max(elem)
}

/// Right action: every `g_i` becomes `g_i h`.
pub fn eg_act<S: Scalar>(g: &Group, p: &MilnorPoint<S>, h: &Element<S>) -> Result<MilnorPoint<S>> {
    g.check(h)?;
    let entries = p
        .entries
        .iter()
        .map(|e| Ok(Entry::new(e.index, e.weight.clone(), g.multiply(&e.element, h)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MilnorPoint {
        entries,
        truncation: p.truncation,
    })
}

/// The `h` with `q = p . h`, computed as `g_i^-1 g'_i` at the first index and
/// checked at every other index. `None` when the weights differ beyond
/// `weight_tol` or no consistent `h` exists within `element_tol`.
pub fn eg_divide<S: Scalar>(
    g: &Group,
    p: &MilnorPoint<S>,
    q: &MilnorPoint<S>,
    weight_tol: f64,
    element_tol: f64,
) -> Option<Element<S>> {
    if p.entries.len() != q.entries.len() || p.entries.is_empty() {
        return None;
    }
    let mut h: Option<Element<S>> = None;
    for (a, b) in p.entries.iter().zip(&q.entries) {
        if a.index != b.index || (a.weight.clone() - b.weight.clone()).to_f64_lossy().abs() > weight_tol {
            return None;
        }
        let local = g.divide_left(&a.element, &b.element).ok()?;
        match &h {
            None => h = Some(local),
            Some(h0) if g.distance(h0, &local) <= element_tol => {}
            Some(_) => return None,
        }
    }
    h
}

/// Projection to `BG`: right-translates by the inverse of the element at the
/// smallest index, which then becomes exactly the identity.
pub fn eg_project<S: Scalar>(g: &Group, p: &MilnorPoint<S>) -> Result<BGPoint<S>> {
    let Some(first) = p.entries.first() else {
        return Ok(BGPoint(p.clone()));
    };
    let inv = g.invert(&first.element)?;
    let mut q = eg_act(g, p, &inv)?;
    q.entries[0].element = g.identity();
    Ok(BGPoint(q))
}

/// `2^-k` as an exact scalar.
fn dyadic<S: Scalar>(k: usize) -> S {
    S::lit(0.5f64.powi(k as i32))
}

/// Membership in `B_i = {t_i > 1/2^(i+2)}`.
pub fn bg_cover_member<S: Scalar>(i: usize, b: &BGPoint<S>) -> bool {
    b.weight(i) > dyadic(i + 2)
}

/// `rho_i(t_i) = ramp(t_i - 1/2^(i+1))` with the difference taken exactly in `S`.
fn bg_ramp<S: Scalar>(i: usize, weight: &S) -> f64 {
    let d = weight.clone() - dyadic::<S>(i + 1);
    if d > S::zero() {
        flat_bump(d.to_f64_lossy())
    } else {
        0.0
    }
}

/// All values `tau_0, ..., tau_N` of the partition of unity on `BG_N`.
pub fn bg_partition<S: Scalar>(b: &BGPoint<S>) -> Vec<f64> {
    let n = b.truncation();
    let mut rho = vec![0.0; n + 1];
    for e in &b.0.entries {
        rho[e.index] = bg_ramp(e.index, &e.weight);
    }
    let total: f64 = rho.iter().sum();
    rho.into_iter().map(|r| r / total).collect()
}

/// `tau_i(b) = rho_i(t_i) / sum_j rho_j(t_j)`.
pub fn bg_partition_value<S: Scalar>(i: usize, b: &BGPoint<S>) -> f64 {
    if i > b.truncation() {
        return 0.0;
    }
    bg_partition(b)[i]
}

/// The local section over `B_i`: `[t_j, g_j g_i^-1]`.
pub fn bg_section<S: Scalar>(g: &Group, i: usize, b: &BGPoint<S>) -> Result<MilnorPoint<S>> {
    if !bg_cover_member(i, b) {
        return Err(Error::NotInChart {
            chart: i,
            point: b.0.entries.iter().map(|e| e.weight.to_f64_lossy()).collect(),
        });
    }
    let gi = b.0.element(i).expect("member has positive weight");
    let inv = g.invert(gi)?;
    let mut s = eg_act(g, &b.0, &inv)?;
    let k = s.entries.binary_search_by_key(&i, |e| e.index).expect("present");
    s.entries[k].element = g.identity();
    Ok(s)
}

/// Section computed from an arbitrary representative of the class of `b`.
pub fn bg_section_from<S: Scalar>(g: &Group, i: usize, p: &MilnorPoint<S>) -> Result<MilnorPoint<S>> {
    bg_section(g, i, &BGPoint(p.clone()))
}

impl BasePoint for BGPoint<f64> {
    fn coords(&self) -> Vec<f64> {
        (0..=self.truncation()).map(|i| self.weight(i)).collect()
    }

    /// Moves up to `radius` of weight between pairs of indices.
    fn probe_ball(&self, radius: f64) -> Vec<Self> {
        let n = self.truncation();
        let mut out = vec![self.clone()];
        for from in &self.0.entries {
            for to in 0..=n {
                if to == from.index {
                    continue;
                }
                let moved = radius.min(from.weight);
                let mut entries = self.0.entries.clone();
                for e in entries.iter_mut() {
                    if e.index == from.index {
                        e.weight -= moved;
                    } else if e.index == to {
                        e.weight += moved;
                    }
                }
                if !entries.iter().any(|e| e.index == to) {
                    let mut elem = from.element.clone();
                    if let Some(first) = self.0.entries.first() {
                        elem = first.element.clone();
                    }
                    entries.push(Entry::new(to, moved, elem));
                }
                out.push(BGPoint(MilnorPoint::raw(entries, n)));
            }
        }
        out
    }
}

fn step() -> &'static StepFunction<f64> {
    static STEP: OnceLock<StepFunction<f64>> = OnceLock::new();
    STEP.get_or_init(|| StepFunction::new(BumpSpec::default()))
}

/// The smooth step used by the shuffles and the interpolation.
pub fn shuffle_step(t: f64) -> f64 {
    step().value(t)
}

/// For `t` in `[1/(n+1), 1/n)` returns `(n, alpha(t))`; `None` for `t <= 0`
/// or `t >= 1`.
fn shuffle_phase(t: f64) -> Option<(usize, f64)> {
    if !(t > 0.0 && t < 1.0) {
        return None;
    }
    let mut n = (1.0 / t).floor() as usize;
    // guard the floating floor against landing one interval off
    while n > 1 && t >= 1.0 / n as f64 {
        n -= 1;
    }
    while t < 1.0 / (n + 1) as f64 {
        n += 1;
    }
    let lo = 1.0 / (n + 1) as f64;
    let hi = 1.0 / n as f64;
    Some((n, shuffle_step((t - lo) / (hi - lo))))
}

/// Spreads the tail starting at `start` over two interleaved index sets:
/// index `start + j` sends `(1 - alpha)` of its weight to `start + 2j` and
/// `alpha` of it to `start + 2j + 1`.
fn spread<S: Scalar>(p: &MilnorPoint<S>, start: usize, alpha: f64) -> MilnorPoint<S> {
    let a = S::lit(alpha);
    let one_minus = S::one() - a.clone();
    let mut out = Vec::with_capacity(p.entries.len() * 2);
    for e in &p.entries {
        if e.index < start {
            out.push(e.clone());
            continue;
        }
        let j = e.index - start;
        out.push(Entry::new(start + 2 * j, one_minus.clone() * e.weight.clone(), e.element.clone()));
        out.push(Entry::new(start + 2 * j + 1, a.clone() * e.weight.clone(), e.element.clone()));
    }
    MilnorPoint::raw(out, 2 * p.truncation + 1)
}

/// Homotopy from the identity (`t <= 0`) to a map onto even-indexed points
/// (`t >= 1`). Output truncation is `2N + 1`.
pub fn odd_shuffle_homotopy<S: Scalar>(p: &MilnorPoint<S>, t: f64) -> MilnorPoint<S> {
    let out_trunc = 2 * p.truncation + 1;
    if t >= 1.0 {
        let entries = p
            .entries
            .iter()
            .map(|e| Entry::new(2 * e.index, e.weight.clone(), e.element.clone()))
            .collect();
        return MilnorPoint::raw(entries, out_trunc);
    }
    match shuffle_phase(t) {
        Some((n, alpha)) if n <= p.truncation => spread(p, n, alpha),
        _ => MilnorPoint::raw(p.entries.clone(), out_trunc),
    }
}

/// Homotopy from the identity (`t <= 0`) to a map onto odd-indexed points
/// (`t >= 1`): the odd shuffle with the kept prefix shortened by one.
pub fn even_shuffle_homotopy<S: Scalar>(p: &MilnorPoint<S>, t: f64) -> MilnorPoint<S> {
    let out_trunc = 2 * p.truncation + 1;
    if t >= 1.0 {
        let entries = p
            .entries
            .iter()
            .map(|e| Entry::new(2 * e.index + 1, e.weight.clone(), e.element.clone()))
            .collect();
        return MilnorPoint::raw(entries, out_trunc);
    }
    match shuffle_phase(t) {
        Some((n, alpha)) if n - 1 <= p.truncation => spread(p, n - 1, alpha),
        _ => MilnorPoint::raw(p.entries.clone(), out_trunc),
    }
}

/// Convex mix of an even-supported `p` and an odd-supported `q`:
/// even weights scaled by `1 - rho(t)`, odd weights by `rho(t)`.
pub fn interpolate_disjoint<S: Scalar>(p: &MilnorPoint<S>, q: &MilnorPoint<S>, t: f64) -> Result<MilnorPoint<S>> {
    if let Some(e) = p.entries.iter().find(|e| e.index % 2 == 1) {
        return Err(Error::Contract(format!("first point has odd index {}", e.index)));
    }
    if let Some(e) = q.entries.iter().find(|e| e.index % 2 == 0) {
        return Err(Error::Contract(format!("second point has even index {}", e.index)));
    }
    let r = S::lit(shuffle_step(t));
    let keep = S::one() - r.clone();
    let mut entries: Vec<Entry<S>> = p
        .entries
        .iter()
        .map(|e| Entry::new(e.index, keep.clone() * e.weight.clone(), e.element.clone()))
        .collect();
    entries.extend(
        q.entries
            .iter()
            .map(|e| Entry::new(e.index, r.clone() * e.weight.clone(), e.element.clone())),
    );
    Ok(MilnorPoint::raw(entries, p.truncation.max(q.truncation)))
}

pub type EquivariantMap<X, S> = Arc<dyn Fn(&X) -> Result<MilnorPoint<S>> + Send + Sync>;
pub type Action<X, S> = Arc<dyn Fn(&X, &Element<S>) -> Result<X> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    OddShuffle,
    Interpolation,
    EvenShuffle,
}

/// Three-stage equivariant homotopy `h0 ~ h1` over `s in [0, 1]`:
/// odd-shuffle `h0` on `[0, 1/3]`, interpolate on `[1/3, 2/3]`, undo the
/// even shuffle of `h1` on `[2/3, 1]`. Each stage runs on its own clock
/// `step(3s - k)`, which is flat at the stage boundaries.
#[derive(Clone)]
pub struct EquivariantHomotopy<X, S> {
    group: Group,
    h0: EquivariantMap<X, S>,
    h1: EquivariantMap<X, S>,
}

impl<X, S: Scalar> EquivariantHomotopy<X, S> {
    pub fn stage(s: f64) -> (Stage, f64) {
        if s < 1.0 / 3.0 {
            (Stage::OddShuffle, shuffle_step(3.0 * s))
        } else if s < 2.0 / 3.0 {
            (Stage::Interpolation, shuffle_step(3.0 * s - 1.0))
        } else {
            (Stage::EvenShuffle, shuffle_step(3.0 * s - 2.0))
        }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn eval(&self, x: &X, s: f64) -> Result<MilnorPoint<S>> {
        match Self::stage(s) {
            (Stage::OddShuffle, u) => Ok(odd_shuffle_homotopy(&(self.h0)(x)?, u)),
            (Stage::Interpolation, u) => {
                let p = odd_shuffle_homotopy(&(self.h0)(x)?, 1.0);
                let q = even_shuffle_homotopy(&(self.h1)(x)?, 1.0);
                interpolate_disjoint(&p, &q, u)
            }
            (Stage::EvenShuffle, u) => Ok(even_shuffle_homotopy(&(self.h1)(x)?, 1.0 - u)),
        }
    }

    pub fn start(&self, x: &X) -> Result<MilnorPoint<S>> {
        (self.h0)(x)
    }

    pub fn end(&self, x: &X) -> Result<MilnorPoint<S>> {
        (self.h1)(x)
    }
}

/// Builds the homotopy after checking `h(x . g) = h(x) . g` for both maps on
/// the supplied `(x, g)` samples.
pub fn equivariant_homotopy<X, S: Scalar>(
    group: &Group,
    h0: EquivariantMap<X, S>,
    h1: EquivariantMap<X, S>,
    act: &Action<X, S>,
    samples: &[(X, Element<S>)],
    tol: f64,
) -> Result<EquivariantHomotopy<X, S>> {
    for (name, h) in [("h0", &h0), ("h1", &h1)] {
        for (x, g) in samples {
            let lhs = h(&act(x, g)?)?;
            let rhs = eg_act(group, &h(x)?, g)?;
            let d = milnor_distance(group, &lhs, &rhs);
            if d > tol {
                return Err(Error::Precondition(format!("{name} is not equivariant (violation {d:e})")));
            }
        }
    }
    Ok(EquivariantHomotopy {
        group: group.clone(),
        h0,
        h1,
    })
}

/// The contraction of `EG`: on `E = EG x G` with action on the second
/// factor, `h0(p, g) = p . g` and `h1(p, g) = base . g`. Restricted to
/// `g = e` it joins the identity of `EG` to the constant map at `base`.
pub fn contraction<S: Scalar>(group: &Group, base: MilnorPoint<S>) -> EquivariantHomotopy<(MilnorPoint<S>, Element<S>), S> {
    let g0 = group.clone();
    let g1 = group.clone();
    EquivariantHomotopy {
        group: group.clone(),
        h0: Arc::new(move |(p, g): &(MilnorPoint<S>, Element<S>)| eg_act(&g0, p, g)),
        h1: Arc::new(move |(_, g): &(MilnorPoint<S>, Element<S>)| eg_act(&g1, &base, g)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::builtin_groups;
    use crate::scalar::Rational;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    fn sign_pt(entries: &[(usize, f64, i8)], n: usize) -> MilnorPoint<f64> {
        MilnorPoint::new(
            entries.iter().map(|&(i, w, s)| Entry::new(i, w, Element::Sign(s))).collect(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn construction_invariants() {
        let p = sign_pt(&[(2, 0.5, 1), (0, 0.5, -1), (1, 0.0, -1)], 3);
        assert_eq!(p.entries().len(), 2);
        assert_eq!(p.first_index(), 0);
        assert!(MilnorPoint::new(vec![Entry::new(0, 0.4, Element::Sign(1))], 1).is_err());
        assert!(MilnorPoint::new(vec![Entry::new(5, 1.0, Element::Sign(1))], 1).is_err());
    }

    #[test]
    fn action_and_division_examples() {
        let g = Group::circle();
        let p = MilnorPoint::vertex(0, Element::Turn(0.25), 2).unwrap();
        assert_eq!(eg_act(&g, &p, &Element::Turn(0.0)).unwrap(), p);
        let q = eg_act(&g, &p, &Element::Turn(0.5)).unwrap();
        assert_eq!(q.element(0), Some(&Element::Turn(0.75)));
        assert_eq!(eg_divide(&g, &p, &p, 0.0, 0.0), Some(Element::Turn(0.0)));
        let other = MilnorPoint::new(
            vec![Entry::new(0, 0.5, Element::Turn(0.0)), Entry::new(1, 0.5, Element::Turn(0.0))],
            2,
        )
        .unwrap();
        assert_eq!(eg_divide(&g, &p, &other, 1e-12, 1e-12), None);
    }

    #[test]
    fn projection_examples() {
        let g = Group::additive();
        let p = MilnorPoint::vertex(0, Element::Real(3.0), 1).unwrap();
        assert_eq!(eg_project(&g, &p).unwrap().point(), &MilnorPoint::vertex(0, Element::Real(0.0), 1).unwrap());
        let p = MilnorPoint::new(
            vec![Entry::new(0, 0.5, Element::Real(2.0)), Entry::new(1, 0.5, Element::Real(5.0))],
            1,
        )
        .unwrap();
        let b = eg_project(&g, &p).unwrap();
        assert_eq!(b.point().element(1), Some(&Element::Real(3.0)));
        assert!(b.is_canonical(&g));
    }

    #[test]
    fn cover_examples() {
        let g = Group::sign();
        let b = eg_project(&g, &sign_pt(&[(0, 1.0, 1)], 2)).unwrap();
        assert!(bg_cover_member(0, &b));
        let b = eg_project(&g, &sign_pt(&[(0, 0.875, 1), (1, 0.125, 1)], 2)).unwrap();
        assert!(!bg_cover_member(1, &b));
    }

    #[test]
    fn partition_examples() {
        let g = Group::sign();
        let b = eg_project(&g, &sign_pt(&[(0, 1.0, 1)], 3)).unwrap();
        assert_eq!(bg_partition(&b), vec![1.0, 0.0, 0.0, 0.0]);
        // t_0 = 1/2 sits exactly on the edge of the support of tau_0
        let b = eg_project(&g, &sign_pt(&[(0, 0.5, 1), (1, 0.5, -1)], 3)).unwrap();
        assert_eq!(bg_partition(&b), vec![0.0, 1.0, 0.0, 0.0]);
        // ramp(3/16) / (ramp(3/16) + ramp(1/16)) = 1 / (1 + e^(16/3 - 16))
        let b = eg_project(&g, &sign_pt(&[(0, 0.6875, 1), (1, 0.3125, -1)], 3)).unwrap();
        let expected = 1.0 / (1.0 + (16.0f64 / 3.0 - 16.0).exp());
        assert!((bg_partition_value(0, &b) - expected).abs() < 1e-15);
    }

    #[test]
    fn section_examples() {
        let g = Group::sign();
        let b = eg_project(&g, &sign_pt(&[(0, 1.0, -1)], 1)).unwrap();
        assert_eq!(bg_section(&g, 0, &b).unwrap(), sign_pt(&[(0, 1.0, 1)], 1));
        assert!(matches!(bg_section(&g, 1, &b), Err(Error::NotInChart { .. })));
    }

    #[test]
    fn odd_shuffle_examples() {
        let g: Element<f64> = Element::Sign(-1);
        let p = MilnorPoint::vertex(0, g.clone(), 2).unwrap();
        assert_eq!(odd_shuffle_homotopy(&p, 0.0).entries(), p.entries());
        assert_eq!(odd_shuffle_homotopy(&p, 1.0).entries(), p.entries());
        let q = sign_pt(&[(0, 0.5, -1), (1, 0.5, 1)], 2);
        let r = odd_shuffle_homotopy(&q, 1.0);
        assert_eq!(r.entries(), sign_pt(&[(0, 0.5, -1), (2, 0.5, 1)], 5).entries());
        assert_eq!(r.truncation(), 5);
    }

    #[test]
    fn even_shuffle_examples() {
        let p = MilnorPoint::<f64>::vertex(0, Element::Sign(-1), 2).unwrap();
        assert_eq!(even_shuffle_homotopy(&p, 0.0).entries(), p.entries());
        assert_eq!(
            even_shuffle_homotopy(&p, 1.0).entries(),
            MilnorPoint::vertex(1, Element::Sign(-1), 5).unwrap().entries()
        );
    }

    #[test]
    fn interpolation_examples() {
        let p = sign_pt(&[(0, 0.25, 1), (2, 0.75, -1)], 3);
        let q = sign_pt(&[(1, 1.0, -1)], 3);
        assert_eq!(interpolate_disjoint(&p, &q, 0.0).unwrap().entries(), p.entries());
        assert_eq!(interpolate_disjoint(&p, &q, 1.0).unwrap().entries(), q.entries());
        let r = shuffle_step(0.5);
        let mid = interpolate_disjoint(&p, &q, 0.5).unwrap();
        assert_eq!(mid.weight(2), (1.0 - r) * 0.75);
        assert_eq!(mid.weight(1), r);
        assert!(interpolate_disjoint(&q, &p, 0.5).is_err());
    }

    #[test]
    fn shuffles_are_continuous_at_breakpoints() {
        let g = Group::circle();
        let mut rng = rng();
        for _ in 0..50 {
            let p = MilnorPoint::<f64>::random(&g, 6, 4, &mut rng);
            for n in 1..=7usize {
                let t = 1.0 / n as f64;
                for f in [odd_shuffle_homotopy::<f64>, even_shuffle_homotopy::<f64>] {
                    let a = f(&p, t - 1e-6);
                    let b = f(&p, t + 1e-6);
                    assert!(milnor_distance(&g, &a, &b) < 1e-4, "n={n}");
                }
            }
        }
    }

    #[test]
    fn shuffles_are_exact_over_rationals() {
        let g = Group::positive();
        let mut rng = rng();
        for _ in 0..50 {
            let p = MilnorPoint::<Rational>::random(&g, 5, 3, &mut rng);
            for t in [0.05, 0.2, 0.4, 0.7, 0.99] {
                assert_eq!(odd_shuffle_homotopy(&p, t).weight_sum(), Rational::lit(1.0));
                assert_eq!(even_shuffle_homotopy(&p, t).weight_sum(), Rational::lit(1.0));
            }
        }
    }

    #[test]
    fn contraction_endpoints_and_equivariance() {
        let g = Group::general_linear(2);
        let mut rng = rng();
        let base = MilnorPoint::<f64>::vertex(0, g.identity(), 4).unwrap();
        let h = contraction(&g, base.clone());
        for _ in 0..100 {
            let p = MilnorPoint::random(&g, 4, 3, &mut rng);
            let e = g.identity();
            let x = (p.clone(), e.clone());
            assert_eq!(h.eval(&x, 0.0).unwrap().entries(), p.entries());
            assert_eq!(h.eval(&x, 1.0).unwrap().entries(), base.entries());
            let a = g.sample(&mut rng);
            let s: f64 = rng.gen_range(0.0..1.0);
            let lhs = h.eval(&(p.clone(), a.clone()), s).unwrap();
            let rhs = eg_act(&g, &h.eval(&x, s).unwrap(), &a).unwrap();
            assert!(milnor_distance(&g, &lhs, &rhs) < 1e-9);
            assert!((lhs.weight_sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equivariance_precondition_is_enforced() {
        let g = Group::integers();
        let act: Action<MilnorPoint<f64>, f64> = {
            let g = g.clone();
            Arc::new(move |p, h| eg_act(&g, p, h))
        };
        let id: EquivariantMap<MilnorPoint<f64>, f64> = Arc::new(|p| Ok(p.clone()));
        let constant: EquivariantMap<MilnorPoint<f64>, f64> = Arc::new(|_| MilnorPoint::vertex(0, Element::Int(0), 2));
        let samples = vec![(MilnorPoint::vertex(1, Element::Int(3), 2).unwrap(), Element::Int(2))];
        assert!(equivariant_homotopy(&g, id.clone(), id.clone(), &act, &samples, 1e-9).is_ok());
        assert!(equivariant_homotopy(&g, id, constant, &act, &samples, 1e-9).is_err());
    }

    proptest! {
        #[test]
        fn structure_of_bg(seed in any::<u64>(), which in 0usize..8) {
            let g = builtin_groups()[which].clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MilnorPoint::<Rational>::random(&g, 5, 1 + (seed % 6) as usize, &mut rng);
            let h = g.sample::<Rational, _>(&mut rng);
            let b = eg_project(&g, &p).unwrap();
            prop_assert!(b.is_canonical(&g));
            prop_assert_eq!(&eg_project(&g, &eg_act(&g, &p, &h).unwrap()).unwrap(), &b);
            prop_assert_eq!(eg_divide(&g, &p, &eg_act(&g, &p, &h).unwrap(), 0.0, 0.0), Some(h.clone()));
            let tau = bg_partition(&b);
            prop_assert!((tau.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (i, t) in tau.iter().enumerate() {
                prop_assert!(*t >= 0.0);
                if *t > 0.0 {
                    prop_assert!(b.weight(i) >= dyadic::<Rational>(i + 1));
                }
            }
            for i in 0..=5 {
                if bg_cover_member(i, &b) {
                    let s = bg_section(&g, i, &b).unwrap();
                    prop_assert_eq!(&eg_project(&g, &s).unwrap(), &b);
                    prop_assert_eq!(s.element(i), Some(&g.identity()));
                    let s2 = bg_section_from(&g, i, &eg_act(&g, &p, &h).unwrap()).unwrap();
                    prop_assert_eq!(&s2, &s);
                }
            }
            prop_assert!((0..=5).any(|i| bg_cover_member(i, &b)));
        }
    }
}
