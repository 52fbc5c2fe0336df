//! JSON bundle descriptions.
//!
//! A description names the structure group, a sample grid for the base,
//! one cover set per chart and the transitions `g_ij` as expressions in
//! the base variables. Transition `(i, j)` follows the chart convention
//! `h_i(b, g) = h_j(b, g_ji(b) g)`; only one of `(i, j)`, `(j, i)` needs to
//! be listed. Each cover set carries a margin function that is positive
//! exactly on the set; the registered partition is the normalized family
//! `phi(margin_i)` with `phi(t) = exp(-1/t)`.
//!
//! ```json
//! {
//!   "name": "mobius",
//!   "group": "sign",
//!   "base": { "name": "S^1", "kind": "angle", "vars": ["theta"], "grid": { "circle": { "points": 48 } } },
//!   "charts": [
//!     { "arc": { "start": -1.0471975511965976, "length": 5.235987755982989 } },
//!     { "arc": { "start": 2.0943951023931957, "length": 5.235987755982989 } }
//!   ],
//!   "transitions": [ { "from": 0, "to": 1, "params": ["-signum(cos(theta))"] } ]
//! }
//! ```

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::{CocycleBundle, Point};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::group::Group;
use crate::partition::{BaseSpace, PartitionOfUnity, PointKind, Predicate};
use crate::smooth::flat_bump;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BundleSpec {
    pub name: String,
    /// A group name understood by [`Group::from_name`].
    pub group: String,
    pub base: BaseSpec,
    pub charts: Vec<CoverSpec>,
    /// Register the bump partition built from the cover margins.
    #[serde(default = "yes")]
    pub partition: bool,
    pub transitions: Vec<TransitionSpec>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BaseSpec {
    pub name: String,
    pub kind: PointKind,
    pub vars: Vec<String>,
    pub grid: GridSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridSpec {
    /// `points` equally spaced angles in `[0, 2 pi)`.
    Circle { points: usize },
    /// Unit vectors in `R^(dim+1)`.
    Sphere { dim: usize, points: usize },
    /// A product grid, endpoints included.
    Box { lo: Vec<f64>, hi: Vec<f64>, points: Vec<usize> },
    Points(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverSpec {
    /// The open arc `(start, start + length)` in the angle variable `var`.
    Arc {
        #[serde(default)]
        var: usize,
        start: f64,
        length: f64,
    },
    /// `lo < x_var < hi`; a missing end is unbounded.
    Interval {
        #[serde(default)]
        var: usize,
        lo: Option<f64>,
        hi: Option<f64>,
    },
    /// `normal . x > offset`.
    HalfPlane { normal: Vec<f64>, offset: f64 },
    /// `expr > 0`.
    Expr(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TransitionSpec {
    pub from: usize,
    pub to: usize,
    /// Element parameters, see [`Group::element_from_params`].
    pub params: Vec<String>,
}

type Margin = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

impl GridSpec {
    pub fn points(&self) -> Result<Vec<Point>> {
        match self {
            GridSpec::Circle { points } => Ok((0..*points).map(|k| vec![TAU * k as f64 / *points as f64]).collect()),
            GridSpec::Sphere { dim, points } => Ok(sphere_grid(*dim, *points)),
            GridSpec::Box { lo, hi, points } => {
                if lo.len() != hi.len() || lo.len() != points.len() || points.contains(&0) {
                    return Err(Error::Format("box grid needs lo, hi and points of one length".into()));
                }
                let mut out: Vec<Point> = vec![Vec::new()];
                for ((&a, &b), &n) in lo.iter().zip(hi).zip(points) {
                    let axis: Vec<f64> = if n == 1 {
                        vec![a]
                    } else {
                        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
                    };
                    out = out
                        .into_iter()
                        .flat_map(|p| {
                            axis.iter().map(move |&x| {
                                let mut q = p.clone();
                                q.push(x);
                                q
                            })
                        })
                        .collect();
                }
                Ok(out)
            }
            GridSpec::Points(p) => Ok(p.clone()),
        }
    }
}

/// Deterministic sample of `S^dim`: exact angles for the circle, a
/// Fibonacci lattice for `S^2`, seeded Gaussian directions above that.
pub fn sphere_grid(dim: usize, points: usize) -> Vec<Point> {
    match dim {
        0 => vec![vec![1.0], vec![-1.0]],
        1 => (0..points)
            .map(|k| {
                let a = TAU * (k as f64 + 0.5) / points as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        2 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..points)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / points as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
            (0..points)
                .map(|_| loop {
                    // Box-Muller
                    let v: Vec<f64> = (0..=dim)
                        .map(|_| {
                            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                            let w: f64 = rng.gen();
                            (-2.0 * u.ln()).sqrt() * (TAU * w).cos()
                        })
                        .collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n > 1e-6 {
                        break v.into_iter().map(|x| x / n).collect();
                    }
                })
                .collect()
        }
    }
}

fn var_ok(var: usize, vars: &[String]) -> Result<()> {
    if var < vars.len() {
        Ok(())
    } else {
        Err(Error::Format(format!("variable index {var} out of range for {vars:?}")))
    }
}

impl CoverSpec {
    /// Positive exactly on the cover set.
    fn margin(&self, vars: &[String]) -> Result<Margin> {
        Ok(match self.clone() {
            CoverSpec::Arc { var, start, length } => {
                var_ok(var, vars)?;
                if !(length > 0.0 && length < TAU) {
                    return Err(Error::Format(format!("arc length {length} not in (0, 2 pi)")));
                }
                Arc::new(move |b: &[f64]| {
                    let d = (b[var] - start).rem_euclid(TAU);
                    d.min(length - d)
                })
            }
            CoverSpec::Interval { var, lo, hi } => {
                var_ok(var, vars)?;
                let (lo, hi) = (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY));
                Arc::new(move |b: &[f64]| (b[var] - lo).min(hi - b[var]))
            }
            CoverSpec::HalfPlane { normal, offset } => {
                if normal.len() != vars.len() {
                    return Err(Error::Format("half-plane normal has the wrong length".into()));
                }
                Arc::new(move |b: &[f64]| normal.iter().zip(b).map(|(n, x)| n * x).sum::<f64>() - offset)
            }
            CoverSpec::Expr(src) => {
                let names: Vec<&str> = vars.iter().map(String::as_str).collect();
                let e = Expr::parse(&src, &names)?;
                Arc::new(move |b: &[f64]| e.eval(b))
            }
        })
    }

    /// The bump `phi` applied to the margin; for arcs and intervals the
    /// product of both end bumps.
    fn bump(&self, vars: &[String]) -> Result<Margin> {
        Ok(match self.clone() {
            CoverSpec::Arc { var, start, length } => {
                self.margin(vars)?;
                Arc::new(move |b: &[f64]| {
                    let d = (b[var] - start).rem_euclid(TAU);
                    flat_bump(d) * flat_bump(length - d)
                })
            }
            CoverSpec::Interval { var, lo, hi } => {
                var_ok(var, vars)?;
                Arc::new(move |b: &[f64]| {
                    let l = lo.map_or(1.0, |lo| flat_bump(b[var] - lo));
                    let h = hi.map_or(1.0, |hi| flat_bump(hi - b[var]));
                    l * h
                })
            }
            _ => {
                let m = self.margin(vars)?;
                Arc::new(move |b: &[f64]| flat_bump(m(b)))
            }
        })
    }
}

impl BundleSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<CocycleBundle> {
        let group = Group::from_name(&self.group)?;
        let vars = &self.base.vars;
        let grid = self.base.grid.points()?;
        if let Some(p) = grid.iter().find(|p| p.len() != vars.len()) {
            return Err(Error::Format(format!("grid point {p:?} does not match variables {vars:?}")));
        }
        let base = BaseSpace::new(self.base.name.clone(), self.base.kind, grid)?;
        let mut cover: Vec<Predicate<Point>> = Vec::new();
        let mut bumps = Vec::new();
        for c in &self.charts {
            let m = c.margin(vars)?;
            cover.push(Arc::new(move |b: &Point| m(b) > 0.0));
            bumps.push(c.bump(vars)?);
        }
        let mut bundle = CocycleBundle::new(self.name.clone(), base, group.clone(), cover.clone());
        if self.partition {
            let family = Arc::new(move |b: &Point| {
                let raw: Vec<f64> = bumps.iter().map(|f| f(b)).collect();
                let total: f64 = raw.iter().sum();
                if total > 0.0 {
                    raw.iter().map(|r| r / total).collect()
                } else {
                    raw
                }
            });
            bundle = bundle.with_partition(PartitionOfUnity::from_parts((0..cover.len()).collect(), family, cover)?)?;
        }
        let names: Vec<&str> = vars.iter().map(String::as_str).collect();
        for t in &self.transitions {
            if t.from >= self.charts.len() || t.to >= self.charts.len() || t.from == t.to {
                return Err(Error::Format(format!("transition ({}, {}) out of range", t.from, t.to)));
            }
            if t.params.len() != group.param_count() {
                return Err(Error::Format(format!(
                    "{} needs {} parameters, transition ({}, {}) has {}",
                    group.symbol(),
                    group.param_count(),
                    t.from,
                    t.to,
                    t.params.len()
                )));
            }
            let exprs = t
                .params
                .iter()
                .map(|p| Expr::parse(p, &names))
                .collect::<Result<Vec<_>>>()?;
            let g = group.clone();
            bundle.set_transition(
                t.from,
                t.to,
                Arc::new(move |b: &[f64]| {
                    let v: Vec<f64> = exprs.iter().map(|e| e.eval(b)).collect();
                    g.element_from_params(&v)
                }),
            );
        }
        Ok(bundle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::validate;
    use crate::config::Tolerances;
    use crate::group::Element;

    const MOBIUS: &str = r#"{
      "name": "mobius",
      "group": "sign",
      "base": { "name": "S^1", "kind": "angle", "vars": ["theta"], "grid": { "circle": { "points": 48 } } },
      "charts": [
        { "arc": { "start": -1.0471975511965976, "length": 5.235987755982989 } },
        { "arc": { "start": 2.0943951023931957, "length": 5.235987755982989 } }
      ],
      "transitions": [ { "from": 0, "to": 1, "params": ["-signum(cos(theta))"] } ]
    }"#;

    #[test]
    fn doc_example_builds_and_validates() {
        let spec = BundleSpec::from_json(MOBIUS).unwrap();
        let b = spec.build().unwrap();
        assert_eq!(b.charts(), 2);
        assert!(validate(&b, &Tolerances::default()).pass);
        assert_eq!(b.transition(0, 1, &[0.0]).unwrap(), Element::Sign(-1));
        assert_eq!(b.transition(1, 0, &[3.0]).unwrap(), Element::Sign(1));
        let again = BundleSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn bad_descriptions_are_rejected() {
        let mut spec = BundleSpec::from_json(MOBIUS).unwrap();
        spec.transitions[0].params = vec!["phi".into()];
        assert!(matches!(spec.build(), Err(Error::Format(_))));
        spec.transitions[0].params = vec!["1".into(), "2".into()];
        assert!(matches!(spec.build(), Err(Error::Format(_))));
        assert!(BundleSpec::from_json(r#"{"name": "x"}"#).is_err());
    }

    #[test]
    fn box_and_sphere_grids() {
        let g = GridSpec::Box {
            lo: vec![0.0, -1.0],
            hi: vec![1.0, 1.0],
            points: vec![3, 2],
        };
        assert_eq!(
            g.points().unwrap(),
            vec![vec![0.0, -1.0], vec![0.0, 1.0], vec![0.5, -1.0], vec![0.5, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]
        );
        for d in 1..5 {
            for p in sphere_grid(d, 50) {
                assert_eq!(p.len(), d + 1);
                assert!((p.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
