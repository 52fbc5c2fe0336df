//! Groups used as structure groups: `(R, +)`, `(R>0, *)`, `Z`, `Z^n`, `Z/2`,
//! `S^1`, `GL(n)` and finite products of these.
//!
//! Elements are generic over [`Scalar`], so the same group law runs in
//! floating point or exactly over rationals. Circle elements are stored in
//! turns, i.e. as `theta / 2pi` in `[0, 1)`, which keeps rational arithmetic
//! exact; distances are still reported in radians.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real, Scalar};
use crate::smooth::richardson_derivative;

/// Small dense square matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Contract("matrix must be square and nonempty".into()));
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![S::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = S::one();
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut data = vec![S::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] = data[i * n + j].clone() + a.clone() * other.data[k * n + j].clone();
                }
            }
        }
        Self { n, data }
    }

    /// Gauss-Jordan inverse with pivoting on the largest magnitude.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let pivot = (col..n).max_by(|&x, &y| {
                a[x * n + col]
                    .magnitude()
                    .partial_cmp(&a[y * n + col].magnitude())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[pivot * n + col].is_zero() {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[col * n + col].clone();
            for j in 0..n {
                a[col * n + j] = a[col * n + j].clone() / p.clone();
                inv[col * n + j] = inv[col * n + j].clone() / p.clone();
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let f = a[row * n + col].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    a[row * n + j] = a[row * n + j].clone() - f.clone() * a[col * n + j].clone();
                    inv[row * n + j] = inv[row * n + j].clone() - f.clone() * inv[col * n + j].clone();
                }
            }
        }
        Some(Self { n, data: inv })
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&S) -> U) -> Matrix<U> {
        Matrix {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b.clone()).to_f64_lossy().abs())
            .fold(0.0, f64::max)
    }

    /// Block-diagonal sum.
    pub fn block_diag(blocks: &[Self]) -> Self {
        let n: usize = blocks.iter().map(|b| b.n).sum();
        let mut out = Self {
            n,
            data: vec![S::zero(); n * n],
        };
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    out.set(off + i, off + j, b.get(i, j).clone());
                }
            }
            off += b.n;
        }
        out
    }
}

/// The group a [`Group`] value describes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    /// `(R, +)`.
    Additive,
    /// `(R>0, *)`.
    Positive,
    /// `(Z, +)`, discrete.
    Integers,
    /// `(Z^n, +)`, discrete.
    Lattice(usize),
    /// `{+1, -1}` under multiplication, discrete.
    Sign,
    /// The circle, elements stored in turns.
    Circle,
    /// Invertible `n x n` matrices.
    GeneralLinear(usize),
    Product(Vec<GroupKind>),
}

/// A group element. The payload must match the group it is used with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Element<S> {
    Real(S),
    Int(i64),
    Lattice(Vec<i64>),
    Sign(i8),
    /// Angle in turns, in `[0, 1)`.
    Turn(S),
    Matrix(Matrix<S>),
    Tuple(Vec<Element<S>>),
}

impl<S: Scalar> Element<S> {
    /// Converts the scalar payload, e.g. from exact rationals to `f64`.
    pub fn map_scalar<U: Scalar>(&self, f: &impl Fn(&S) -> U) -> Element<U> {
        match self {
            Element::Real(x) => Element::Real(f(x)),
            Element::Int(n) => Element::Int(*n),
            Element::Lattice(v) => Element::Lattice(v.clone()),
            Element::Sign(s) => Element::Sign(*s),
            Element::Turn(x) => Element::Turn(f(x)),
            Element::Matrix(m) => Element::Matrix(m.map(f)),
            Element::Tuple(parts) => Element::Tuple(parts.iter().map(|p| p.map_scalar(f)).collect()),
        }
    }

    pub fn to_f64(&self) -> Element<f64> {
        self.map_scalar(&|x: &S| x.to_f64_lossy())
    }

    pub fn from_f64(e: &Element<f64>) -> Element<S> {
        e.map_scalar(&|x: &f64| S::lit(*x))
    }
}

impl<S: Scalar> fmt::Display for Element<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Real(x) => write!(f, "{}", x.to_f64_lossy()),
            Element::Int(n) => write!(f, "{n}"),
            Element::Lattice(v) => write!(f, "{v:?}"),
            Element::Sign(s) => write!(f, "{}", if *s < 0 { "-1" } else { "+1" }),
            Element::Turn(x) => write!(f, "{} turn", x.to_f64_lossy()),
            Element::Matrix(m) => write!(f, "{:?}", m.to_f64().rows()),
            Element::Tuple(parts) => {
                write!(f, "(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

pub fn wrap_turn<S: Scalar>(x: S) -> S {
    let w = x.clone() - x.floor_value();
    if w >= S::one() {
        w - S::one()
    } else {
        w
    }
}

/// Structure group descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Group {
    kind: GroupKind,
}

impl Group {
    pub fn new(kind: GroupKind) -> Self {
        Self { kind }
    }

    pub fn additive() -> Self {
        Self::new(GroupKind::Additive)
    }
    pub fn positive() -> Self {
        Self::new(GroupKind::Positive)
    }
    pub fn integers() -> Self {
        Self::new(GroupKind::Integers)
    }
    pub fn lattice(n: usize) -> Self {
        Self::new(GroupKind::Lattice(n))
    }
    pub fn sign() -> Self {
        Self::new(GroupKind::Sign)
    }
    pub fn circle() -> Self {
        Self::new(GroupKind::Circle)
    }
    pub fn general_linear(n: usize) -> Self {
        Self::new(GroupKind::GeneralLinear(n))
    }

    /// Direct product with componentwise operations and the max metric.
    pub fn product(a: &Group, b: &Group) -> Self {
        let mut factors = Vec::new();
        for g in [a, b] {
            match &g.kind {
                GroupKind::Product(fs) => factors.extend(fs.iter().cloned()),
                k => factors.push(k.clone()),
            }
        }
        Self::new(GroupKind::Product(factors))
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn factors(&self) -> Vec<Group> {
        match &self.kind {
            GroupKind::Product(fs) => fs.iter().cloned().map(Group::new).collect(),
            _ => vec![self.clone()],
        }
    }

    /// Stable name, also accepted by [`Group::from_name`].
    pub fn name(&self) -> String {
        match &self.kind {
            GroupKind::Additive => "additive".into(),
            GroupKind::Positive => "positive".into(),
            GroupKind::Integers => "integers".into(),
            GroupKind::Lattice(n) => format!("lattice-{n}"),
            GroupKind::Sign => "sign".into(),
            GroupKind::Circle => "circle".into(),
            GroupKind::GeneralLinear(n) => format!("gl-{n}"),
            GroupKind::Product(fs) => fs
                .iter()
                .map(|k| Group::new(k.clone()).name())
                .collect::<Vec<_>>()
                .join("*"),
        }
    }

    /// Conventional notation, for human-readable output.
    pub fn symbol(&self) -> String {
        match &self.kind {
            GroupKind::Additive => "R".into(),
            GroupKind::Positive => "R>0".into(),
            GroupKind::Integers => "Z".into(),
            GroupKind::Lattice(n) => format!("Z^{n}"),
            GroupKind::Sign => "Z/2".into(),
            GroupKind::Circle => "S^1".into(),
            GroupKind::GeneralLinear(n) => format!("GL({n})"),
            GroupKind::Product(fs) => fs
                .iter()
                .map(|k| Group::new(k.clone()).symbol())
                .collect::<Vec<_>>()
                .join(" x "),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let parts: Vec<&str> = name.split('*').map(str::trim).collect();
        if parts.len() > 1 {
            let factors = parts
                .iter()
                .map(|p| Group::from_name(p).map(|g| g.kind))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self::new(GroupKind::Product(factors)));
        }
        let parse_n = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| Error::Unknown(format!("group `{name}`")))
        };
        Ok(match name {
            "additive" => Self::additive(),
            "positive" => Self::positive(),
            "integers" => Self::integers(),
            "sign" => Self::sign(),
            "circle" => Self::circle(),
            _ if name.starts_with("lattice-") => Self::lattice(parse_n(&name[8..])?),
            _ if name.starts_with("gl-") => Self::general_linear(parse_n(&name[3..])?),
            _ => return Err(Error::Unknown(format!("group `{name}`"))),
        })
    }

    pub fn is_discrete(&self) -> bool {
        match &self.kind {
            GroupKind::Integers | GroupKind::Lattice(_) | GroupKind::Sign => true,
            GroupKind::Product(fs) => fs.iter().all(|k| Group::new(k.clone()).is_discrete()),
            _ => false,
        }
    }

    pub fn is_abelian(&self) -> bool {
        match &self.kind {
            GroupKind::GeneralLinear(n) => *n == 1,
            GroupKind::Product(fs) => fs.iter().all(|k| Group::new(k.clone()).is_abelian()),
            _ => true,
        }
    }

    /// Number of elements for finite groups.
    pub fn order(&self) -> Option<usize> {
        match &self.kind {
            GroupKind::Sign => Some(2),
            GroupKind::Product(fs) => fs
                .iter()
                .map(|k| Group::new(k.clone()).order())
                .try_fold(1usize, |acc, o| o.map(|o| acc * o)),
            _ => None,
        }
    }

    /// All elements of a finite group, in a fixed order.
    pub fn elements<S: Scalar>(&self) -> Option<Vec<Element<S>>> {
        match &self.kind {
            GroupKind::Sign => Some(vec![Element::Sign(1), Element::Sign(-1)]),
            GroupKind::Product(fs) => {
                let mut acc: Vec<Vec<Element<S>>> = vec![Vec::new()];
                for k in fs {
                    let elems = Group::new(k.clone()).elements::<S>()?;
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            elems.iter().map(move |e| {
                                let mut p = prefix.clone();
                                p.push(e.clone());
                                p
                            })
                        })
                        .collect();
                }
                Some(acc.into_iter().map(Element::Tuple).collect())
            }
            _ => None,
        }
    }

    pub fn identity<S: Scalar>(&self) -> Element<S> {
        match &self.kind {
            GroupKind::Additive => Element::Real(S::zero()),
            GroupKind::Positive => Element::Real(S::one()),
            GroupKind::Integers => Element::Int(0),
            GroupKind::Lattice(n) => Element::Lattice(vec![0; *n]),
            GroupKind::Sign => Element::Sign(1),
            GroupKind::Circle => Element::Turn(S::zero()),
            GroupKind::GeneralLinear(n) => Element::Matrix(Matrix::identity(*n)),
            GroupKind::Product(fs) => {
                Element::Tuple(fs.iter().map(|k| Group::new(k.clone()).identity()).collect())
            }
        }
    }

    fn mismatch<S: Scalar>(&self, e: &Element<S>) -> Error {
        Error::GroupMismatch(format!("{e} is not an element of {}", self.symbol()))
    }

    /// Checks that the payload is a valid element of this group.
    pub fn check<S: Scalar>(&self, e: &Element<S>) -> Result<()> {
        let ok = match (&self.kind, e) {
            (GroupKind::Additive, Element::Real(_)) => true,
            (GroupKind::Positive, Element::Real(x)) => *x > S::zero(),
            (GroupKind::Integers, Element::Int(_)) => true,
            (GroupKind::Lattice(n), Element::Lattice(v)) => v.len() == *n,
            (GroupKind::Sign, Element::Sign(s)) => *s == 1 || *s == -1,
            (GroupKind::Circle, Element::Turn(x)) => *x >= S::zero() && *x < S::one(),
            (GroupKind::GeneralLinear(n), Element::Matrix(m)) => m.dim() == *n && m.inverse().is_some(),
            (GroupKind::Product(fs), Element::Tuple(parts)) => {
                if fs.len() != parts.len() {
                    false
                } else {
                    for (k, p) in fs.iter().zip(parts) {
                        Group::new(k.clone()).check(p)?;
                    }
                    true
                }
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(self.mismatch(e))
        }
    }

    pub fn multiply<S: Scalar>(&self, a: &Element<S>, b: &Element<S>) -> Result<Element<S>> {
        Ok(match (&self.kind, a, b) {
            (GroupKind::Additive, Element::Real(x), Element::Real(y)) => Element::Real(x.clone() + y.clone()),
            (GroupKind::Positive, Element::Real(x), Element::Real(y)) => Element::Real(x.clone() * y.clone()),
            (GroupKind::Integers, Element::Int(x), Element::Int(y)) => Element::Int(x + y),
            (GroupKind::Lattice(n), Element::Lattice(x), Element::Lattice(y)) if x.len() == *n && y.len() == *n => {
                Element::Lattice(x.iter().zip(y).map(|(a, b)| a + b).collect())
            }
            (GroupKind::Sign, Element::Sign(x), Element::Sign(y)) => Element::Sign(x * y),
            (GroupKind::Circle, Element::Turn(x), Element::Turn(y)) => Element::Turn(wrap_turn(x.clone() + y.clone())),
            (GroupKind::GeneralLinear(n), Element::Matrix(x), Element::Matrix(y)) if x.dim() == *n && y.dim() == *n => {
                Element::Matrix(x.mul(y))
            }
            (GroupKind::Product(fs), Element::Tuple(x), Element::Tuple(y)) if x.len() == fs.len() && y.len() == fs.len() => {
                Element::Tuple(
                    fs.iter()
                        .zip(x.iter().zip(y))
                        .map(|(k, (a, b))| Group::new(k.clone()).multiply(a, b))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            (_, a, b) => {
                return Err(Error::GroupMismatch(format!(
                    "cannot multiply {a} and {b} in {}",
                    self.symbol()
                )))
            }
        })
    }

    pub fn invert<S: Scalar>(&self, a: &Element<S>) -> Result<Element<S>> {
        Ok(match (&self.kind, a) {
            (GroupKind::Additive, Element::Real(x)) => Element::Real(-x.clone()),
            (GroupKind::Positive, Element::Real(x)) if *x > S::zero() => Element::Real(S::one() / x.clone()),
            (GroupKind::Integers, Element::Int(x)) => Element::Int(-x),
            (GroupKind::Lattice(n), Element::Lattice(x)) if x.len() == *n => Element::Lattice(x.iter().map(|a| -a).collect()),
            (GroupKind::Sign, Element::Sign(x)) => Element::Sign(*x),
            (GroupKind::Circle, Element::Turn(x)) => Element::Turn(wrap_turn(-x.clone())),
            (GroupKind::GeneralLinear(n), Element::Matrix(m)) if m.dim() == *n => {
                Element::Matrix(m.inverse().ok_or_else(|| self.mismatch(a))?)
            }
            (GroupKind::Product(fs), Element::Tuple(x)) if x.len() == fs.len() => Element::Tuple(
                fs.iter()
                    .zip(x)
                    .map(|(k, a)| Group::new(k.clone()).invert(a))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => return Err(self.mismatch(a)),
        })
    }

    /// `a^-1 * b`.
    pub fn divide_left<S: Scalar>(&self, a: &Element<S>, b: &Element<S>) -> Result<Element<S>> {
        self.multiply(&self.invert(a)?, b)
    }

    /// Metric on elements: absolute difference on `R`, `|ln(a/b)|` on `R>0`,
    /// 0/1 on discrete groups, arc length in radians on the circle, max
    /// entry difference on matrices, and the max over factors on products.
    pub fn distance<S: Scalar>(&self, a: &Element<S>, b: &Element<S>) -> f64 {
        match (&self.kind, a, b) {
            (GroupKind::Additive, Element::Real(x), Element::Real(y)) => (x.clone() - y.clone()).to_f64_lossy().abs(),
            (GroupKind::Positive, Element::Real(x), Element::Real(y)) => {
                if x == y {
                    0.0
                } else {
                    (x.to_f64_lossy().ln() - y.to_f64_lossy().ln()).abs()
                }
            }
            (GroupKind::Integers, Element::Int(x), Element::Int(y)) => f64::from(u8::from(x != y)),
            (GroupKind::Lattice(_), Element::Lattice(x), Element::Lattice(y)) => f64::from(u8::from(x != y)),
            (GroupKind::Sign, Element::Sign(x), Element::Sign(y)) => f64::from(u8::from(x != y)),
            (GroupKind::Circle, Element::Turn(x), Element::Turn(y)) => {
                let d = wrap_turn(x.clone() - y.clone()).to_f64_lossy();
                std::f64::consts::TAU * d.min(1.0 - d)
            }
            (GroupKind::GeneralLinear(_), Element::Matrix(x), Element::Matrix(y)) => x.max_abs_diff(y),
            (GroupKind::Product(fs), Element::Tuple(x), Element::Tuple(y)) if x.len() == fs.len() && y.len() == fs.len() => fs
                .iter()
                .zip(x.iter().zip(y))
                .map(|(k, (a, b))| Group::new(k.clone()).distance(a, b))
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        }
    }

    pub fn approx_eq<S: Scalar>(&self, a: &Element<S>, b: &Element<S>, tol: f64) -> bool {
        self.distance(a, b) <= tol
    }

    /// Random element; continuous coordinates are rounded to multiples of
    /// `2^-10` so that they are exact in every supported scalar type.
    pub fn sample<S: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Element<S> {
        let dyadic = |x: f64| S::lit((x * 1024.0).round() / 1024.0);
        match &self.kind {
            GroupKind::Additive => Element::Real(dyadic(rng.gen_range(-3.0..3.0))),
            GroupKind::Positive => {
                let x: f64 = rng.gen_range(-2.0f64..2.0).exp();
                Element::Real(S::lit(((x * 1024.0).round() / 1024.0).max(1.0 / 1024.0)))
            }
            GroupKind::Integers => Element::Int(rng.gen_range(-5..=5)),
            GroupKind::Lattice(n) => Element::Lattice((0..*n).map(|_| rng.gen_range(-5..=5)).collect()),
            GroupKind::Sign => Element::Sign(if rng.gen_bool(0.5) { 1 } else { -1 }),
            GroupKind::Circle => Element::Turn(dyadic(rng.gen_range(0.0..1.0f64).min(1023.0 / 1024.0))),
            GroupKind::GeneralLinear(n) => loop {
                let rows = (0..*n)
                    .map(|i| {
                        (0..*n)
                            .map(|j| dyadic(f64::from(u8::from(i == j)) + rng.gen_range(-0.4..0.4)))
                            .collect()
                    })
                    .collect();
                let m = Matrix::from_rows(rows).expect("square");
                let det_ok = m
                    .to_f64()
                    .inverse()
                    .map(|inv| inv.data.iter().all(|v| v.abs() < 50.0))
                    .unwrap_or(false);
                if det_ok {
                    break Element::Matrix(m);
                }
            },
            GroupKind::Product(fs) => Element::Tuple(fs.iter().map(|k| Group::new(k.clone()).sample(rng)).collect()),
        }
    }

    /// Dimension of the standard chart at the identity; `None` for discrete
    /// groups (and products of them).
    pub fn chart_dim(&self) -> Option<usize> {
        let d = match &self.kind {
            GroupKind::Additive | GroupKind::Positive | GroupKind::Circle => 1,
            GroupKind::GeneralLinear(n) => n * n,
            GroupKind::Product(fs) => fs.iter().map(|k| Group::new(k.clone()).chart_dim().unwrap_or(0)).sum(),
            _ => 0,
        };
        (d > 0).then_some(d)
    }

    /// Chart embedding near the identity: identity on `R`, `exp` on `R>0`,
    /// angle in radians on `S^1`, `I + X` on `GL(n)`. Discrete factors of a
    /// product sit at their identity.
    pub fn chart_embed<T: Real>(&self, x: &[T]) -> Element<T> {
        match &self.kind {
            GroupKind::Additive => Element::Real(x[0]),
            GroupKind::Positive => Element::Real(x[0].exp()),
            GroupKind::Circle => Element::Turn(wrap_turn(x[0] / T::TAU())),
            GroupKind::GeneralLinear(n) => {
                let mut m = Matrix::identity(*n);
                for i in 0..*n {
                    for j in 0..*n {
                        let v = *m.get(i, j) + x[i * n + j];
                        m.set(i, j, v);
                    }
                }
                Element::Matrix(m)
            }
            GroupKind::Product(fs) => {
                let mut off = 0;
                Element::Tuple(
                    fs.iter()
                        .map(|k| {
                            let g = Group::new(k.clone());
                            let d = g.chart_dim().unwrap_or(0);
                            let e = if d == 0 { g.identity() } else { g.chart_embed(&x[off..off + d]) };
                            off += d;
                            e
                        })
                        .collect(),
                )
            }
            _ => self.identity(),
        }
    }

    /// Local inverse of [`Group::chart_embed`].
    pub fn chart_coords<T: Real>(&self, e: &Element<T>) -> Vec<T> {
        match (&self.kind, e) {
            (GroupKind::Additive, Element::Real(x)) => vec![*x],
            (GroupKind::Positive, Element::Real(x)) => vec![x.ln()],
            (GroupKind::Circle, Element::Turn(x)) => {
                let a = if *x > c(0.5) { *x - T::one() } else { *x };
                vec![a * T::TAU()]
            }
            (GroupKind::GeneralLinear(n), Element::Matrix(m)) => {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..*n {
                    for j in 0..*n {
                        let id = if i == j { T::one() } else { T::zero() };
                        out.push(*m.get(i, j) - id);
                    }
                }
                out
            }
            (GroupKind::Product(fs), Element::Tuple(parts)) => fs
                .iter()
                .zip(parts)
                .flat_map(|(k, p)| {
                    let g = Group::new(k.clone());
                    if g.chart_dim().is_some() {
                        g.chart_coords(p)
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Number of real parameters [`Group::element_from_params`] consumes.
    pub fn param_count(&self) -> usize {
        match &self.kind {
            GroupKind::Lattice(n) => *n,
            GroupKind::GeneralLinear(n) => n * n,
            GroupKind::Product(fs) => fs.iter().map(|k| Group::new(k.clone()).param_count()).sum(),
            _ => 1,
        }
    }

    /// Reads an element from real parameters: the value itself on `R` and
    /// `R>0`, nearest integers on `Z` and `Z^n`, the sign on `Z/2`, turns
    /// modulo 1 on the circle, row-major entries on `GL(n)`.
    pub fn element_from_params(&self, v: &[f64]) -> Result<Element<f64>> {
        if v.len() != self.param_count() {
            return Err(Error::GroupMismatch(format!(
                "{} expects {} parameters, got {}",
                self.symbol(),
                self.param_count(),
                v.len()
            )));
        }
        let e = match &self.kind {
            GroupKind::Additive | GroupKind::Positive => Element::Real(v[0]),
            GroupKind::Integers => Element::Int(v[0].round() as i64),
            GroupKind::Lattice(_) => Element::Lattice(v.iter().map(|x| x.round() as i64).collect()),
            GroupKind::Sign => Element::Sign(if v[0] < 0.0 { -1 } else { 1 }),
            GroupKind::Circle => Element::Turn(wrap_turn(v[0])),
            GroupKind::GeneralLinear(n) => Element::Matrix(Matrix::from_rows(v.chunks(*n).map(<[f64]>::to_vec).collect())?),
            GroupKind::Product(fs) => {
                let mut parts = Vec::with_capacity(fs.len());
                let mut at = 0;
                for k in fs {
                    let g = Group::new(k.clone());
                    let m = g.param_count();
                    parts.push(g.element_from_params(&v[at..at + m])?);
                    at += m;
                }
                Element::Tuple(parts)
            }
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(self.mismatch(&e));
        }
        self.check(&e)?;
        Ok(e)
    }

    /// Dimension of the built-in linear representation.
    pub fn rep_dim(&self) -> usize {
        match &self.kind {
            GroupKind::Additive | GroupKind::Integers | GroupKind::Circle => 2,
            GroupKind::Positive | GroupKind::Sign => 1,
            GroupKind::Lattice(n) => n + 1,
            GroupKind::GeneralLinear(n) => *n,
            GroupKind::Product(fs) => fs.iter().map(|k| Group::new(k.clone()).rep_dim()).sum(),
        }
    }

    /// Built-in faithful linear representation: unipotent `[[1, x], [0, 1]]`
    /// for `R`, `Z` and `Z^n`, scalars for `R>0` and `Z/2`, rotations for `S^1`,
    /// the defining representation of `GL(n)`, block sums for products.
    pub fn representation<S: Scalar>(&self, e: &Element<S>) -> Result<Matrix<f64>> {
        Ok(match (&self.kind, e) {
            (GroupKind::Additive, Element::Real(x)) => unipotent(&[x.to_f64_lossy()]),
            (GroupKind::Integers, Element::Int(n)) => unipotent(&[*n as f64]),
            (GroupKind::Lattice(_), Element::Lattice(v)) => unipotent(&v.iter().map(|a| *a as f64).collect::<Vec<_>>()),
            (GroupKind::Positive, Element::Real(x)) => Matrix::from_rows(vec![vec![x.to_f64_lossy()]])?,
            (GroupKind::Sign, Element::Sign(s)) => Matrix::from_rows(vec![vec![f64::from(*s)]])?,
            (GroupKind::Circle, Element::Turn(x)) => {
                let a = x.to_f64_lossy() * std::f64::consts::TAU;
                Matrix::from_rows(vec![vec![a.cos(), -a.sin()], vec![a.sin(), a.cos()]])?
            }
            (GroupKind::GeneralLinear(_), Element::Matrix(m)) => m.to_f64(),
            (GroupKind::Product(fs), Element::Tuple(parts)) if parts.len() == fs.len() => Matrix::block_diag(
                &fs.iter()
                    .zip(parts)
                    .map(|(k, p)| Group::new(k.clone()).representation(p))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => return Err(self.mismatch(e)),
        })
    }
}

fn unipotent(top: &[f64]) -> Matrix<f64> {
    let n = top.len() + 1;
    let mut m = Matrix::identity(n);
    for (j, v) in top.iter().enumerate() {
        m.set(0, j + 1, *v);
    }
    m
}

/// The groups exercised by default.
pub fn builtin_groups() -> Vec<Group> {
    vec![
        Group::additive(),
        Group::positive(),
        Group::integers(),
        Group::lattice(2),
        Group::sign(),
        Group::circle(),
        Group::general_linear(2),
        Group::product(&Group::sign(), &Group::circle()),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub associativity: f64,
    pub identity: f64,
    pub inverse: f64,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        self.associativity.max(self.identity).max(self.inverse)
    }
}

/// Associativity, identity and inverse laws on random triples.
pub fn check_axioms<S: Scalar, R: Rng + ?Sized>(g: &Group, samples: usize, rng: &mut R) -> Result<AxiomReport> {
    let e = g.identity::<S>();
    let mut r = AxiomReport {
        samples,
        associativity: 0.0,
        identity: 0.0,
        inverse: 0.0,
    };
    for _ in 0..samples {
        let (a, b, cc) = (g.sample::<S, _>(rng), g.sample::<S, _>(rng), g.sample::<S, _>(rng));
        let left = g.multiply(&g.multiply(&a, &b)?, &cc)?;
        let right = g.multiply(&a, &g.multiply(&b, &cc)?)?;
        r.associativity = r.associativity.max(g.distance(&left, &right));
        r.identity = r
            .identity
            .max(g.distance(&g.multiply(&a, &e)?, &a))
            .max(g.distance(&g.multiply(&e, &a)?, &a));
        let inv = g.invert(&a)?;
        r.inverse = r
            .inverse
            .max(g.distance(&g.multiply(&a, &inv)?, &e))
            .max(g.distance(&g.multiply(&inv, &a)?, &e));
    }
    Ok(r)
}

/// Largest `|rep(gh) - rep(g) rep(h)|` over random pairs.
pub fn check_representation<S: Scalar, R: Rng + ?Sized>(g: &Group, samples: usize, rng: &mut R) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (a, b) = (g.sample::<S, _>(rng), g.sample::<S, _>(rng));
        let lhs = g.representation(&g.multiply(&a, &b)?)?;
        let rhs = g.representation(&a)?.mul(&g.representation(&b)?);
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    Ok(worst)
}

/// Largest `|coords(embed(x)) - x|` over random small chart vectors.
pub fn check_chart_roundtrip<R: Rng + ?Sized>(g: &Group, samples: usize, rng: &mut R) -> Option<f64> {
    let d = g.chart_dim()?;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let back = g.chart_coords(&g.chart_embed(&x));
        for (a, b) in x.iter().zip(&back) {
            worst = worst.max((a - b).abs());
        }
    }
    Some(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub verdict: ProbeVerdict,
    /// Largest change of any Jacobian entry when the step is halved.
    pub max_instability: f64,
    /// Jacobian of multiplication at the identity, as a flat row-major list.
    pub multiply_gradient_at_identity: Vec<f64>,
}

/// Jacobian of `map: R^m -> R^k` at `x` by Richardson central differences.
pub fn jacobian(map: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let k = map(x).len();
    let mut jac = vec![vec![0.0; x.len()]; k];
    for j in 0..x.len() {
        for (row, jrow) in jac.iter_mut().enumerate() {
            let f = |t: f64| {
                let mut y = x.to_vec();
                y[j] = t;
                Ok::<f64, Error>(map(&y)[row])
            };
            jrow[j] = richardson_derivative(f, x[j], 1, h).unwrap_or(f64::NAN);
        }
    }
    jac
}

/// Finite-difference smoothness probe of multiplication and inversion in
/// chart coordinates. Jacobians must be finite and agree at steps `h` and
/// `h/2` within `stability`.
pub fn smoothness_probe_action<R: Rng + ?Sized>(
    g: &Group,
    h: f64,
    stability: f64,
    samples: usize,
    rng: &mut R,
) -> SmoothnessReport {
    let Some(d) = g.chart_dim() else {
        return SmoothnessReport {
            verdict: ProbeVerdict::NotApplicable,
            max_instability: 0.0,
            multiply_gradient_at_identity: Vec::new(),
        };
    };
    let mul = |v: &[f64]| {
        let a = g.chart_embed(&v[..d]);
        let b = g.chart_embed(&v[d..]);
        g.multiply(&a, &b).map(|p| g.chart_coords(&p)).unwrap_or_else(|_| vec![f64::NAN; d])
    };
    let inv = |v: &[f64]| {
        g.invert(&g.chart_embed(v))
            .map(|p| g.chart_coords(&p))
            .unwrap_or_else(|_| vec![f64::NAN; d])
    };
    let mut worst: f64 = 0.0;
    let mut finite = true;
    let mut compare = |map: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64]| {
        let a = jacobian(map, x, h);
        let b = jacobian(map, x, h / 2.0);
        for (ra, rb) in a.iter().zip(&b) {
            for (u, v) in ra.iter().zip(rb) {
                finite &= u.is_finite() && v.is_finite();
                worst = worst.max((u - v).abs());
            }
        }
    };
    for _ in 0..samples {
        let x: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-0.2..0.2)).collect();
        compare(&mul, &x);
        compare(&inv, &x[..d]);
    }
    let at_identity = jacobian(&mul, &vec![0.0; 2 * d], h);
    SmoothnessReport {
        verdict: if finite && worst <= stability {
            ProbeVerdict::Pass
        } else {
            ProbeVerdict::Fail
        },
        max_instability: worst,
        multiply_gradient_at_identity: at_identity.into_iter().flatten().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn sign_and_circle_examples() {
        let s = Group::sign();
        assert_eq!(s.multiply::<f64>(&Element::Sign(-1), &Element::Sign(-1)).unwrap(), Element::Sign(1));
        let c = Group::circle();
        let a = c.chart_embed(&[0.3f64]);
        let b = c.chart_embed(&[-0.2f64]);
        assert!((c.distance(&a, &b) - 0.5).abs() < 1e-12);
        let near_wrap = c.distance(&c.chart_embed(&[3.1f64]), &c.chart_embed(&[-3.1f64]));
        assert!((near_wrap - (std::f64::consts::TAU - 6.2)).abs() < 1e-12);
        assert_eq!(c.identity::<f64>(), Element::Turn(0.0));
    }

    #[test]
    fn product_is_componentwise() {
        let p = Group::product(&Group::sign(), &Group::circle());
        assert_eq!(p.identity::<f64>(), Element::Tuple(vec![Element::Sign(1), Element::Turn(0.0)]));
        let a = Element::Tuple(vec![Element::Sign(-1), Element::Turn(0.25)]);
        let inv = p.invert(&a).unwrap();
        assert_eq!(inv, Element::Tuple(vec![Element::Sign(-1), Element::Turn(0.75)]));
        let r = check_axioms::<f64, _>(&p, 1000, &mut rng()).unwrap();
        assert!(r.max_violation() <= 1e-12);
    }

    #[test]
    fn all_builtins_satisfy_axioms() {
        for g in builtin_groups() {
            let r = check_axioms::<f64, _>(&g, 1000, &mut rng()).unwrap();
            assert!(r.max_violation() <= 1e-12, "{}: {r:?}", g.name());
            let q = check_axioms::<Rational, _>(&g, 50, &mut rng()).unwrap();
            assert_eq!(q.max_violation(), 0.0, "{} exact", g.name());
            assert!(check_representation::<f64, _>(&g, 1000, &mut rng()).unwrap() <= 1e-10, "{}", g.name());
            if let Some(err) = check_chart_roundtrip(&g, 200, &mut rng()) {
                assert!(err <= 1e-9, "{}", g.name());
            }
        }
    }

    #[test]
    fn names_roundtrip() {
        for g in builtin_groups() {
            assert_eq!(Group::from_name(&g.name()).unwrap(), g);
        }
        assert!(Group::from_name("nosuch").is_err());
        assert!(Group::from_name("lattice-0").is_err());
    }

    #[test]
    fn mismatch_is_an_error() {
        let g = Group::sign();
        assert!(matches!(
            g.multiply::<f64>(&Element::Sign(1), &Element::Int(1)),
            Err(Error::GroupMismatch(_))
        ));
        assert!(Group::positive().check(&Element::Real(-1.0)).is_err());
        assert!(Group::circle().check(&Element::Turn(1.0)).is_err());
    }

    #[test]
    fn smoothness_probe_examples() {
        let r = smoothness_probe_action(&Group::additive(), 1e-4, 1e-5, 20, &mut rng());
        assert_eq!(r.verdict, ProbeVerdict::Pass);
        for (a, b) in r.multiply_gradient_at_identity.iter().zip([1.0, 1.0]) {
            assert!((a - b).abs() < 1e-9);
        }
        let r = smoothness_probe_action(&Group::positive(), 1e-4, 1e-5, 20, &mut rng());
        assert_eq!(r.verdict, ProbeVerdict::Pass);
        for a in &r.multiply_gradient_at_identity {
            assert!((a - 1.0).abs() < 1e-9);
        }
        let r = smoothness_probe_action(&Group::integers(), 1e-4, 1e-5, 20, &mut rng());
        assert_eq!(r.verdict, ProbeVerdict::NotApplicable);
        for g in [Group::circle(), Group::general_linear(2)] {
            assert_eq!(smoothness_probe_action(&g, 1e-4, 1e-5, 20, &mut rng()).verdict, ProbeVerdict::Pass);
        }
    }

    #[test]
    fn matrix_inverse_exact() {
        let m = Matrix::from_rows(vec![
            vec![Rational::lit(2.0), Rational::lit(1.0)],
            vec![Rational::lit(1.0), Rational::lit(1.0)],
        ])
        .unwrap();
        assert_eq!(m.mul(&m.inverse().unwrap()), Matrix::identity(2));
        let singular = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(singular.inverse().is_none());
    }

    #[test]
    fn finite_group_elements() {
        let p = Group::product(&Group::sign(), &Group::sign());
        assert_eq!(p.order(), Some(4));
        assert_eq!(p.elements::<f64>().unwrap().len(), 4);
        assert_eq!(Group::circle().order(), None);
    }

    proptest! {
        #[test]
        fn circle_wrap_stays_in_range(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let c = Group::circle();
            let p = c.multiply(&Element::Turn(a), &Element::Turn(b)).unwrap();
            prop_assert!(c.check(&p).is_ok());
            let q = c.multiply(&p, &c.invert(&Element::Turn(b)).unwrap()).unwrap();
            prop_assert!(c.distance(&q, &Element::Turn(a)) < 1e-12);
        }
    }
}
