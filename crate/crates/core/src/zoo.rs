//! Concrete bundles used as fixtures, plus the comparison maps and
//! certificates that go with them.
//!
//! Fixtures are built in code with the sample resolution as a parameter.
//! Those that fit the JSON description language carry their [`BundleSpec`].

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
use std::sync::Arc;

use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::{
    associated_bundle, constant_gauge_search, frame_roundtrip_check, gauge_check, pullback, trivial_on_cover, validate,
    CocycleBundle, GaugeReport, GaugeSearch, GaugeTransformation, Point, Representation, TotalPoint, ValidationReport,
};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::format::{sphere_grid, BaseSpec, BundleSpec, CoverSpec, GridSpec, TransitionSpec};
use crate::group::{wrap_turn, Element, Group};
use crate::homotopy::{product_grid_space, time_grid, CylinderBundle};
use crate::milnor::{eg_act, eg_divide, milnor_distance, Entry, MilnorPoint};
use crate::partition::{BaseSpace, PartitionOfUnity, PointKind, Predicate};
use crate::scalar::Rational;
use crate::smooth::{flat_bump, BumpSpec, StepFunction};

/// Arc length of the two charts on the circle.
pub const ARC_LENGTH: f64 = 5.0 * FRAC_PI_3;
/// Start angles of the two arcs; they overlap around `0` and around `pi`.
pub const ARC_STARTS: [f64; 2] = [-FRAC_PI_3, 2.0 * FRAC_PI_3];

pub const DEFAULT_GRID: usize = 48;

#[derive(Clone, Debug)]
pub enum Body {
    Bundle(CocycleBundle),
    Cylinder(CylinderBundle),
    /// Only comparison maps, no bundle.
    Comparison(Group),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub validates: bool,
    pub classifies: bool,
    pub certificate: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub summary: String,
    /// Where the construction comes from, in words.
    pub anchor: String,
    pub body: Body,
    pub spec: Option<BundleSpec>,
    pub expected: Expected,
}

impl Fixture {
    pub fn bundle(&self) -> Option<&CocycleBundle> {
        match &self.body {
            Body::Bundle(b) => Some(b),
            Body::Cylinder(c) => Some(c.bundle()),
            Body::Comparison(_) => None,
        }
    }

    pub fn cylinder(&self) -> Option<&CylinderBundle> {
        match &self.body {
            Body::Cylinder(c) => Some(c),
            _ => None,
        }
    }

    pub fn group(&self) -> &Group {
        match &self.body {
            Body::Bundle(b) => b.group(),
            Body::Cylinder(c) => c.group(),
            Body::Comparison(g) => g,
        }
    }

    pub fn describe(&self) -> String {
        let mut out = format!("{}\n  {}\n  source: {}\n  group: {}\n", self.name, self.summary, self.anchor, self.group().symbol());
        if let Some(b) = self.bundle() {
            out += &format!(
                "  base: {} ({} sample points)\n  charts: {}\n  partition: {}\n",
                b.base().name,
                b.base().grid.len(),
                b.charts(),
                if b.partition().is_some() { "registered" } else { "none" }
            );
        }
        if let Some(s) = &self.spec {
            for t in &s.transitions {
                out += &format!("  g_{}{} = {}\n", t.from, t.to, t.params.join(", "));
            }
        }
        out += &format!(
            "  expected: validates={} classifies={}",
            self.expected.validates, self.expected.classifies
        );
        if let Some(c) = &self.expected.certificate {
            out += &format!("\n  certificate: {c}");
        }
        out
    }
}

/// Fixture names accepted by [`fixture`]; `rp-N` and `hopf-N` take other
/// dimensions too.
pub const NAMES: [&str; 12] = [
    "doubled_line",
    "hopf-1",
    "hopf-2",
    "mobius",
    "mobius-degree2",
    "mobius-rotation",
    "product",
    "rp-1",
    "rp-2",
    "time-swap",
    "trivial",
    "winding",
];

pub fn fixture(name: &str, grid: usize) -> Result<Fixture> {
    let grid = grid.max(4);
    if let Some(n) = name.strip_prefix("rp-") {
        return projective_space(parse_dim(name, n)?, grid);
    }
    if let Some(n) = name.strip_prefix("hopf-") {
        return hopf(parse_dim(name, n)?, grid);
    }
    match name {
        "doubled_line" => doubled_line(grid),
        "mobius" => mobius(grid),
        "mobius-degree2" => mobius_degree2(grid),
        "mobius-rotation" => mobius_rotation(grid),
        "product" => Ok(product_group(&Group::sign(), &Group::circle())),
        "time-swap" => time_swap(grid),
        "trivial" => trivial(grid),
        "winding" => winding(grid),
        _ => Err(Error::Unknown(format!("fixture `{name}`"))),
    }
}

fn parse_dim(name: &str, n: &str) -> Result<usize> {
    n.parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Unknown(format!("fixture `{name}`")))
}

fn circle_base(grid: usize) -> BaseSpec {
    BaseSpec {
        name: "S^1".into(),
        kind: PointKind::Angle,
        vars: vec!["theta".into()],
        grid: GridSpec::Circle { points: grid },
    }
}

fn arcs() -> Vec<CoverSpec> {
    ARC_STARTS
        .iter()
        .map(|&start| CoverSpec::Arc {
            var: 0,
            start,
            length: ARC_LENGTH,
        })
        .collect()
}

fn from_spec(spec: BundleSpec, summary: &str, anchor: &str, expected: Expected) -> Result<Fixture> {
    Ok(Fixture {
        name: spec.name.clone(),
        summary: summary.into(),
        anchor: anchor.into(),
        body: Body::Bundle(spec.build()?),
        spec: Some(spec),
        expected,
    })
}

fn positive(certificate: Option<&str>) -> Expected {
    Expected {
        validates: true,
        classifies: true,
        certificate: certificate.map(String::from),
    }
}

/// One chart over the circle with structure group `GL(2)`.
pub fn trivial(grid: usize) -> Result<Fixture> {
    let spec = BundleSpec {
        name: "trivial".into(),
        group: "gl-2".into(),
        base: circle_base(grid),
        charts: vec![CoverSpec::Expr("1".into())],
        partition: true,
        transitions: Vec::new(),
    };
    from_spec(spec, "product bundle S^1 x GL(2), one chart", "one-chart product bundle", positive(None))
}

/// The Möbius double cover as a `Z/2` cocycle on two arcs: `g_01 = -1` on
/// the overlap around `0` and `+1` around `pi`.
pub fn mobius(grid: usize) -> Result<Fixture> {
    let spec = BundleSpec {
        name: "mobius".into(),
        group: "sign".into(),
        base: circle_base(grid),
        charts: arcs(),
        partition: true,
        transitions: vec![TransitionSpec {
            from: 0,
            to: 1,
            params: vec!["-signum(cos(theta))".into()],
        }],
    };
    from_spec(
        spec,
        "Möbius double cover of the circle, two arcs",
        "standard nontrivial Z/2 bundle",
        positive(Some("no constant gauge trivializes it over its two arcs")),
    )
}

/// `R -> S^1` as a `Z` cocycle: `g_01 = 1` around `0`, `0` around `pi`.
pub fn winding(grid: usize) -> Result<Fixture> {
    let spec = BundleSpec {
        name: "winding".into(),
        group: "integers".into(),
        base: circle_base(grid),
        charts: arcs(),
        partition: true,
        transitions: vec![TransitionSpec {
            from: 0,
            to: 1,
            params: vec!["(1 + signum(cos(theta)))/2".into()],
        }],
    };
    from_spec(
        spec,
        "universal cover R -> S^1 with group Z",
        "BZ and the circle; comparison map [t_i, n_i] -> sum t_i n_i",
        positive(None),
    )
}

/// `S^n -> RP^n` with charts `|x_j| > 1/(2j+2)`, partition from
/// `phi(|x_j| - 1/(2j+2))` and `g_jk = sign(x_j x_k)`. Base points are
/// unit vectors; everything is invariant under `x -> -x`.
pub fn projective_space(n: usize, grid: usize) -> Result<Fixture> {
    if n > 6 {
        return Err(Error::Precondition(format!("rp-{n}: dimensions above 6 are not sampled")));
    }
    let vars: Vec<String> = (0..=n).map(|j| format!("x{j}")).collect();
    let points = match n {
        1 => grid,
        2 => grid * grid / 4,
        _ => grid * 8,
    };
    let charts = (0..=n)
        .map(|j| CoverSpec::Expr(format!("abs(x{j}) - 1/{}", 2 * j + 2)))
        .collect();
    let mut transitions = Vec::new();
    for j in 0..=n {
        for k in j + 1..=n {
            transitions.push(TransitionSpec {
                from: j,
                to: k,
                params: vec![format!("signum(x{j}*x{k})")],
            });
        }
    }
    let spec = BundleSpec {
        name: format!("rp-{n}"),
        group: "sign".into(),
        base: BaseSpec {
            name: format!("RP^{n}"),
            kind: PointKind::Vector,
            vars,
            grid: GridSpec::Sphere { dim: n, points },
        },
        charts,
        partition: true,
        transitions,
    };
    from_spec(
        spec,
        &format!("double cover S^{n} -> RP^{n}"),
        "projective spaces as Z/2 quotients of spheres, bump partition on |x_j| > 1/(2j+2)",
        positive(None),
    )
}

fn turns(re: f64, im: f64) -> f64 {
    wrap_turn(im.atan2(re) / TAU)
}

fn modulus(b: &[f64], j: usize) -> f64 {
    b[2 * j].hypot(b[2 * j + 1])
}

/// Fiber coordinate of the point `w` of `S^(2n+1)` in chart `k`: the
/// section over chart `k` makes `z_k` positive real.
pub fn hopf_fiber(w: &[f64], k: usize) -> Element<f64> {
    Element::Turn(turns(w[2 * k], w[2 * k + 1]))
}

/// `S^(2n+1) -> CP^n` with group `S^1`: charts `|z_j| > 1/(2j+2)` and
/// `g_ij = arg z_i - arg z_j` in turns. Base points are unit vectors of
/// `C^(n+1) = R^(2n+2)` standing for their classes.
pub fn hopf(n: usize, grid: usize) -> Result<Fixture> {
    if n > 2 {
        return Err(Error::Precondition(format!("hopf-{n}: only n <= 2 is sampled")));
    }
    let m = n + 1;
    let points = grid * grid / 4 * n;
    let base = BaseSpace::new(format!("CP^{n}"), PointKind::Vector, sphere_grid(2 * n + 1, points))?;
    let threshold = |j: usize| 1.0 / (2 * j + 2) as f64;
    let cover: Vec<Predicate<Point>> = (0..m)
        .map(|j| Arc::new(move |b: &Point| modulus(b, j) > threshold(j)) as Predicate<Point>)
        .collect();
    let family = Arc::new(move |b: &Point| {
        let raw: Vec<f64> = (0..m).map(|j| flat_bump(modulus(b, j) - threshold(j))).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|r| r / total).collect()
    });
    let mut bundle = CocycleBundle::new(format!("hopf-{n}"), base, Group::circle(), cover.clone())
        .with_partition(PartitionOfUnity::from_parts((0..m).collect(), family, cover)?)?;
    for i in 0..m {
        for j in i + 1..m {
            bundle.set_transition(
                i,
                j,
                Arc::new(move |b: &[f64]| {
                    Ok(Element::Turn(wrap_turn(
                        turns(b[2 * i], b[2 * i + 1]) - turns(b[2 * j], b[2 * j + 1]),
                    )))
                }),
            );
        }
    }
    Ok(Fixture {
        name: format!("hopf-{n}"),
        summary: format!("Hopf bundle S^{} -> CP^{n}, group S^1", 2 * n + 1),
        anchor: "circle bundles over complex projective space, finite stage of S^inf -> CP^inf".into(),
        body: Body::Bundle(bundle),
        spec: None,
        expected: positive(None),
    })
}

/// Comparison-only fixture for `E(G x H) -> EG x EH`.
pub fn product_group(g: &Group, h: &Group) -> Fixture {
    Fixture {
        name: "product".into(),
        summary: format!("E({0} x {1}) against E{0} x E{1}", g.symbol(), h.symbol()),
        anchor: "[t_i, (g_i, h_i)] -> ([t_i, g_i], [t_i, h_i]) and product partitions".into(),
        body: Body::Comparison(Group::product(g, h)),
        spec: None,
        expected: Expected {
            validates: true,
            classifies: false,
            certificate: Some("weights preserved, equivariant, product partition sums to 1".into()),
        },
    }
}

/// Two copies of the line glued along `x > 0`. Points are `[x, label]`;
/// for `x > 0` only label 0 is sampled since both labels name the same
/// point. Group `R>0`, `g_10(x) = x`. No partition is registered.
pub fn doubled_line(grid: usize) -> Result<Fixture> {
    let mut pts = Vec::new();
    for k in 0..grid {
        let x = -2.0 + 4.0 * k as f64 / (grid - 1) as f64;
        pts.push(vec![x, 0.0]);
        if x <= 0.0 {
            pts.push(vec![x, 1.0]);
        }
    }
    let base = BaseSpace::new("doubled line", PointKind::Label, pts)?;
    let cover: Vec<Predicate<Point>> = (0..2)
        .map(|i| Arc::new(move |b: &Point| b[0] > 0.0 || b[1] == i as f64) as Predicate<Point>)
        .collect();
    let bundle = CocycleBundle::new("doubled_line", base, Group::positive(), cover)
        .with_transition(1, 0, Arc::new(|b: &[f64]| Ok(Element::Real(b[0]))));
    Ok(Fixture {
        name: "doubled_line".into(),
        summary: "line with doubled origin, group R>0, g_10(x) = x; not numerable".into(),
        anchor: "doubled line: a gauge would need alpha_0(x) = x alpha_1(x), which cannot extend continuously to 0".into(),
        body: Body::Bundle(bundle),
        spec: None,
        expected: Expected {
            validates: true,
            classifies: false,
            certificate: Some(
                "alpha_0/alpha_1 = x exactly at x = 10^-1..10^-6, leaving every compact subset of R>0; every candidate partition jumps by at least 1/2"
                    .into(),
            ),
        },
    })
}

/// The Möbius bundle pulled back along `psi -> 2 psi`.
pub fn mobius_degree2(grid: usize) -> Result<Fixture> {
    let target = mobius(grid)?;
    let base = BaseSpace::new("S^1", PointKind::Angle, circle_base(grid).grid.points()?)?;
    let pulled = pullback(target.bundle().expect("bundle"), base, Arc::new(|b: &[f64]| vec![2.0 * b[0]]))?
        .renamed("mobius-degree2");
    Ok(Fixture {
        name: "mobius-degree2".into(),
        summary: "Möbius bundle pulled back along the degree-2 map of the circle".into(),
        anchor: "pullback along z -> z^2 trivializes the double cover".into(),
        body: Body::Bundle(pulled),
        spec: None,
        expected: positive(Some("explicit half-angle gauge to the product bundle")),
    })
}

/// Cylinder `F^* mobius` for the rotation `F(theta, t) = theta + pi t`.
pub fn mobius_rotation(grid: usize) -> Result<Fixture> {
    let target = mobius(grid)?;
    let base = BaseSpace::new("S^1", PointKind::Angle, circle_base(grid).grid.points()?)?;
    let cyl = CylinderBundle::from_homotopy(
        target.bundle().expect("bundle"),
        base,
        Arc::new(|b: &[f64], t: f64| vec![b[0] + PI * t]),
        17,
    )?;
    Ok(Fixture {
        name: "mobius-rotation".into(),
        summary: "Möbius bundle pulled back along the rotation homotopy theta + pi t".into(),
        anchor: "homotopic maps pull back isomorphic bundles".into(),
        body: Body::Cylinder(cyl),
        spec: None,
        expected: positive(Some("transport gauge between t = 0 and t = 1 passes the gauge check")),
    })
}

/// Two charts over `I x R`: chart 0 on `t < 0.8`, chart 1 on `t > 0.2`,
/// transition `g_01(b, t) = b + t` in `(R, +)`.
pub fn time_swap(grid: usize) -> Result<Fixture> {
    let n = (grid / 8).max(3);
    let base = BaseSpace::new("I", PointKind::Vector, (0..n).map(|k| vec![k as f64 / (n - 1) as f64]).collect())?;
    let spec = BundleSpec {
        name: "time-swap".into(),
        group: "additive".into(),
        base: BaseSpec {
            name: "I x R".into(),
            kind: PointKind::Vector,
            vars: vec!["b".into(), "t".into()],
            grid: GridSpec::Points(product_grid_space(&base, &time_grid(21))?.grid),
        },
        charts: vec![
            CoverSpec::Interval {
                var: 1,
                lo: None,
                hi: Some(0.8),
            },
            CoverSpec::Interval {
                var: 1,
                lo: Some(0.2),
                hi: None,
            },
        ],
        partition: true,
        transitions: vec![TransitionSpec {
            from: 0,
            to: 1,
            params: vec!["b + t".into()],
        }],
    };
    let cyl = CylinderBundle::new(spec.build()?, base)?;
    Ok(Fixture {
        name: "time-swap".into(),
        summary: "two charts swapping over time, time-dependent transition".into(),
        anchor: "slice cover over B x R needs n = 2 here".into(),
        body: Body::Cylinder(cyl),
        spec: Some(spec),
        expected: positive(Some("slice membership matches direct slab evaluation")),
    })
}

// ---------------------------------------------------------------------------
// comparison maps

/// `[t_i, n_i] -> sum t_i n_i`, from `EZ` to `R`.
pub fn winding_comparison(p: &MilnorPoint<f64>) -> Result<f64> {
    p.entries()
        .iter()
        .map(|e| match &e.element {
            Element::Int(n) => Ok(e.weight * *n as f64),
            other => Err(Error::GroupMismatch(format!("{other} is not an integer"))),
        })
        .sum()
}

/// `max |g(p.m) - g(p) - m|` over random points and shifts.
pub fn winding_equivariance<R: Rng + ?Sized>(samples: usize, truncation: usize, rng: &mut R) -> Result<f64> {
    let g = Group::integers();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let p = MilnorPoint::random(&g, truncation, rng.gen_range(1..=truncation + 1), rng);
        let m: i64 = rng.gen_range(-5..=5);
        let moved = winding_comparison(&eg_act(&g, &p, &Element::Int(m))?)?;
        worst = worst.max((moved - winding_comparison(&p)? - m as f64).abs());
    }
    Ok(worst)
}

/// `[t_i, g_i] -> (g_i t_i / sqrt(sum t^2))_i`, from `E(Z/2)` truncated at
/// `n` to `S^n`.
pub fn projective_comparison(p: &MilnorPoint<f64>) -> Result<Vec<f64>> {
    let norm = p.entries().iter().map(|e| e.weight * e.weight).sum::<f64>().sqrt();
    let mut v = vec![0.0; p.truncation() + 1];
    for e in p.entries() {
        let s = match e.element {
            Element::Sign(s) => f64::from(s),
            ref other => return Err(Error::GroupMismatch(format!("{other} is not a sign"))),
        };
        v[e.index] = s * e.weight / norm;
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub samples: usize,
    pub max_norm_error: f64,
    pub max_equivariance: f64,
}

/// Unit norm and `g(p.(-1)) = -g(p)` for the projective comparison map.
pub fn projective_comparison_check<R: Rng + ?Sized>(n: usize, samples: usize, rng: &mut R) -> Result<ComparisonReport> {
    let g = Group::sign();
    let mut r = ComparisonReport {
        samples,
        max_norm_error: 0.0,
        max_equivariance: 0.0,
    };
    for _ in 0..samples {
        let p = MilnorPoint::random(&g, n, rng.gen_range(1..=n + 1), rng);
        let v = projective_comparison(&p)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        r.max_norm_error = r.max_norm_error.max((norm - 1.0).abs());
        let w = projective_comparison(&eg_act(&g, &p, &Element::Sign(-1))?)?;
        let d = v.iter().zip(&w).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        r.max_equivariance = r.max_equivariance.max(d);
    }
    Ok(r)
}

/// Splits `[t_i, (g_i, h_i)]` into `([t_i, g_i], [t_i, h_i])`.
pub fn product_map(p: &MilnorPoint<f64>) -> Result<(MilnorPoint<f64>, MilnorPoint<f64>)> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for e in p.entries() {
        match &e.element {
            Element::Tuple(parts) if parts.len() == 2 => {
                left.push(Entry::new(e.index, e.weight, parts[0].clone()));
                right.push(Entry::new(e.index, e.weight, parts[1].clone()));
            }
            other => return Err(Error::GroupMismatch(format!("{other} is not a pair"))),
        }
    }
    Ok((
        MilnorPoint::new(left, p.truncation())?,
        MilnorPoint::new(right, p.truncation())?,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductReport {
    pub samples: usize,
    pub weights_exact: bool,
    pub max_equivariance: f64,
    pub partition_points: usize,
    pub max_partition_error: f64,
}

fn arc_partition(theta: f64) -> Vec<f64> {
    let raw: Vec<f64> = ARC_STARTS
        .iter()
        .map(|&s| {
            let d = (theta - s).rem_euclid(TAU);
            flat_bump(d) * flat_bump(ARC_LENGTH - d)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

fn interval_partition(x: f64) -> Vec<f64> {
    let a = flat_bump(0.7 - x);
    let b = flat_bump(x - 0.3);
    let c = flat_bump(0.5 - (x - 0.5).abs());
    let t = a + b + c;
    vec![a / t, b / t, c / t]
}

/// Checks the map `E(G x H) -> EG x EH` and the product partition rule
/// `rho_ij(x, y) = sigma_i(x) tau_j(y)` on `S^1 x I`.
pub fn product_group_check<R: Rng + ?Sized>(g: &Group, h: &Group, samples: usize, rng: &mut R) -> Result<ProductReport> {
    let gh = Group::product(g, h);
    let mut r = ProductReport {
        samples,
        weights_exact: true,
        max_equivariance: 0.0,
        partition_points: 0,
        max_partition_error: 0.0,
    };
    for _ in 0..samples {
        let p = MilnorPoint::random(&gh, 4, rng.gen_range(1..=5), rng);
        let (a, b) = product_map(&p)?;
        for e in p.entries() {
            r.weights_exact &= a.weight(e.index) == e.weight && b.weight(e.index) == e.weight;
        }
        let x = g.sample(rng);
        let y = h.sample(rng);
        let (ma, mb) = product_map(&eg_act(&gh, &p, &Element::Tuple(vec![x.clone(), y.clone()]))?)?;
        let d = milnor_distance(g, &ma, &eg_act(g, &a, &x)?).max(milnor_distance(h, &mb, &eg_act(h, &b, &y)?));
        r.max_equivariance = r.max_equivariance.max(d);
    }
    for i in 0..40 {
        let theta = TAU * i as f64 / 40.0;
        let sigma = arc_partition(theta);
        for j in 0..25 {
            let tau = interval_partition(j as f64 / 24.0);
            let total: f64 = sigma.iter().flat_map(|s| tau.iter().map(move |t| s * t)).sum();
            r.partition_points += 1;
            r.max_partition_error = r.max_partition_error.max((total - 1.0).abs());
        }
    }
    Ok(r)
}

/// `max |fiber(w) - eg_divide(f(x_0), f(x))|` over sampled points of the
/// total space, where `x_0` is the identity in the same chart: the
/// classifying map remembers the fiber angle.
pub fn hopf_fiber_recovery<R: Rng + ?Sized>(
    fx: &Fixture,
    tol: &Tolerances,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let bundle = fx
        .bundle()
        .ok_or_else(|| Error::Precondition(format!("{} has no bundle", fx.name)))?;
    let cls = crate::bundle::classify(bundle, tol)?;
    let g = bundle.group();
    let grid = &bundle.base().grid;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let w = &grid[rng.gen_range(0..grid.len())];
        // a different representative of the same base point
        let phase = TAU * rng.gen_range(0.0..1.0);
        let b: Point = w
            .chunks(2)
            .flat_map(|z| {
                let (c, s) = (phase.cos(), phase.sin());
                [z[0] * c - z[1] * s, z[0] * s + z[1] * c]
            })
            .collect();
        let charts = bundle.charts_at(&b);
        let k = charts[rng.gen_range(0..charts.len())];
        let fiber = Element::Turn(wrap_turn(match (hopf_fiber(w, k), hopf_fiber(&b, k)) {
            (Element::Turn(a), Element::Turn(c)) => a - c,
            _ => unreachable!(),
        }));
        let f0 = cls.total_map(&TotalPoint::new(k, b.clone(), g.identity()))?;
        let f1 = cls.total_map(&TotalPoint::new(k, b.clone(), fiber.clone()))?;
        let got = eg_divide(g, &f0, &f1, 0.0, tol.classification)
            .ok_or_else(|| Error::Contract("classifying map changed weights along a fiber".into()))?;
        worst = worst.max(g.distance(&got, &fiber));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfAssociated {
    pub validation: ValidationReport,
    pub frame_roundtrip: GaugeReport,
}

/// The rotation representation of `S^1` on `R^2` applied to a Hopf fixture.
pub fn hopf_associated(fx: &Fixture, tol: &Tolerances) -> Result<HopfAssociated> {
    let bundle = fx
        .bundle()
        .ok_or_else(|| Error::Precondition(format!("{} has no bundle", fx.name)))?;
    let rep = Representation::standard(bundle.group());
    let vector = associated_bundle(bundle, &rep)?;
    Ok(HopfAssociated {
        validation: validate(&vector, tol),
        frame_roundtrip: frame_roundtrip_check(bundle, &rep, tol.representation)?,
    })
}

/// Every constant gauge from the Möbius cocycle to the product cocycle on
/// the same arcs. Each arc is connected and `Z/2` is discrete, so a
/// continuous gauge is constant on each chart; at grid scale only the
/// constant ones are tried.
pub fn mobius_gauge_search(fx: &Fixture, tol: &Tolerances) -> Result<GaugeSearch> {
    let b = fx
        .bundle()
        .ok_or_else(|| Error::Precondition(format!("{} has no bundle", fx.name)))?;
    constant_gauge_search(b, &trivial_on_cover(b), tol.gauge)
}

/// Half-angle gauge for the degree-2 pullback: over arc `i` the section
/// `sigma_i(theta) = (start_i + d_i(theta)) / 2` picks one square root,
/// and `lambda_i(psi) = +1` iff `sigma_i(2 psi) = psi` mod `2 pi`.
pub fn degree2_gauge() -> GaugeTransformation {
    GaugeTransformation::new(2, |b: &[f64], charts: &[usize]| {
        let psi = b[0];
        Ok(charts
            .iter()
            .map(|&i| {
                let start = ARC_STARTS[i];
                let sigma = (start + (2.0 * psi - start).rem_euclid(TAU)) / 2.0;
                let diff = (sigma - psi).rem_euclid(TAU);
                Element::Sign(if (diff - PI).abs() > FRAC_PI_2 { 1 } else { -1 })
            })
            .collect())
    })
}

pub fn degree2_check(fx: &Fixture, tol: &Tolerances) -> Result<GaugeReport> {
    let b = fx
        .bundle()
        .ok_or_else(|| Error::Precondition(format!("{} has no bundle", fx.name)))?;
    gauge_check(b, &trivial_on_cover(b), &degree2_gauge(), tol.gauge)
}

// ---------------------------------------------------------------------------
// doubled line

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeProbe {
    pub candidate: String,
    pub x: String,
    pub ratio: String,
    /// `alpha_0 / alpha_1 == x` in exact arithmetic.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRejection {
    pub candidate: String,
    /// `max |rho_0(x, label) - rho_0(y, label)|` across the origin.
    pub jump: f64,
    pub rejected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubledLineCertificate {
    pub probes: Vec<GaugeProbe>,
    pub floor: f64,
    /// Largest `alpha_0/alpha_1` at the smallest probe.
    pub ratio_at_smallest: f64,
    pub rejections: Vec<PartitionRejection>,
    /// Transition agrees with the exact one at the probes.
    pub transition_consistent: bool,
    /// The contraction `(x, i, t) -> (rho(t) + (1 - rho(t)) x, i)` is
    /// constant at `t = 1`.
    pub contraction_constant: bool,
    pub certified: bool,
}

fn pow10(k: u32) -> Rational {
    Rational::from_integer(num_bigint::BigInt::from(10u32).pow(k))
}

/// Candidate gauges `alpha_1`, exact on the rationals.
fn alpha_candidates() -> Vec<(&'static str, fn(&Rational) -> Rational)> {
    vec![
        ("1", |_| Rational::one()),
        ("2 + x", |x| Rational::from_integer(2.into()) + x),
        ("1/(1 + x^2)", |x| (Rational::one() + x * x).recip()),
        ("3 - x", |x| Rational::from_integer(3.into()) - x),
    ]
}

/// Candidate values of `rho_0` for `x > 0`, where both lines agree.
fn partition_candidates() -> Vec<(&'static str, Box<dyn Fn(f64) -> f64>)> {
    let step = StepFunction::new(BumpSpec::default());
    vec![
        ("1/2", Box::new(|_| 0.5)),
        ("step(x)", Box::new(move |x| step.value(x))),
        ("1 - step(x)", Box::new(move |x| 1.0 - StepFunction::new(BumpSpec::default()).value(x))),
        ("exp(-x)", Box::new(|x: f64| (-x).exp())),
        (
            "phi(1-x)/(phi(x)+phi(1-x))",
            Box::new(|x| {
                let (a, b) = (flat_bump(1.0 - x), flat_bump(x));
                a / (a + b)
            }),
        ),
    ]
}

/// Runs the non-extension certificate for a doubled-line fixture.
pub fn doubled_line_certificate(fx: &Fixture, tol: &Tolerances) -> Result<DoubledLineCertificate> {
    let bundle = fx
        .bundle()
        .ok_or_else(|| Error::Precondition(format!("{} has no bundle", fx.name)))?;
    let g = Group::positive();
    let floor = 1e-3;
    let exact_transition = |x: &Rational| -> Element<Rational> { Element::Real(x.clone()) };
    let mut probes = Vec::new();
    let mut consistent = true;
    let mut ratio_at_smallest: f64 = 0.0;
    for k in 1..=6u32 {
        let x = pow10(k).recip();
        let xf = 10f64.powi(-(k as i32));
        consistent &= match bundle.transition(1, 0, &[xf, 0.0])? {
            Element::Real(v) => (v - xf).abs() <= f64::EPSILON * xf,
            _ => false,
        };
        for (name, alpha1) in alpha_candidates() {
            let a1 = Element::Real(alpha1(&x));
            // product cocycle is trivial: e = alpha_1 g_10 alpha_0^-1
            let a0 = g.multiply(&a1, &exact_transition(&x))?;
            let back = g.multiply(&g.multiply(&a1, &exact_transition(&x))?, &g.invert(&a0)?)?;
            if back != g.identity() {
                return Err(Error::Contract("gauge relation failed in exact arithmetic".into()));
            }
            let ratio = match g.multiply(&a0, &g.invert(&a1)?)? {
                Element::Real(r) => r,
                _ => unreachable!(),
            };
            if k == 6 {
                ratio_at_smallest = ratio_at_smallest.max(crate::scalar::Scalar::to_f64_lossy(&ratio));
            }
            probes.push(GaugeProbe {
                candidate: name.into(),
                x: x.to_string(),
                ratio: ratio.to_string(),
                exact: ratio == x,
            });
        }
    }
    // Subordination forces rho_0 = 1 on line 0 and rho_0 = 0 on line 1 for
    // x <= 0; the shared values for x > 0 then jump by at least 1/2 on one
    // of the two lines.
    let forced = |label: usize| -> Result<f64> {
        let p = vec![-1e-9, label as f64];
        let in0 = bundle.in_chart(0, &p);
        let in1 = bundle.in_chart(1, &p);
        Ok(match (in0, in1) {
            (true, false) => 1.0,
            (false, true) => 0.0,
            _ => return Err(Error::Contract("doubled line cover changed".into())),
        })
    };
    let (left0, left1) = (forced(0)?, forced(1)?);
    let rejections = partition_candidates()
        .into_iter()
        .map(|(name, q)| {
            let right = q(1e-9);
            let jump = (right - left0).abs().max((right - left1).abs());
            PartitionRejection {
                candidate: name.into(),
                jump,
                rejected: jump > tol.breakpoint_jump,
            }
        })
        .collect::<Vec<_>>();
    let step = StepFunction::new(BumpSpec::default());
    let rho1 = step.value(1.0);
    let contraction_constant = bundle
        .base()
        .grid
        .iter()
        .map(|b| {
            let x = rho1 + (1.0 - rho1) * b[0];
            // for x > 0 both labels are one point
            if x > 0.0 { vec![x, 0.0] } else { vec![x, b[1]] }
        })
        .all(|p| p == vec![1.0, 0.0]);
    let certified = probes.iter().all(|p| p.exact)
        && consistent
        && ratio_at_smallest < floor
        && rejections.iter().all(|r| r.rejected && r.jump >= 0.5)
        && contraction_constant
        && bundle.partition().is_none();
    Ok(DoubledLineCertificate {
        probes,
        floor,
        ratio_at_smallest,
        rejections,
        transition_consistent: consistent,
        contraction_constant,
        certified,
    })
}

/// Whether a candidate `rho_0` (given on `x > 0`) could be registered as a
/// partition on the doubled line: it never can.
pub fn try_register_partition(fx: &Fixture, rho0: Arc<dyn Fn(f64) -> f64 + Send + Sync>, tol: &Tolerances) -> Result<CocycleBundle> {
    let bundle = fx
        .bundle()
        .ok_or_else(|| Error::Precondition(format!("{} has no bundle", fx.name)))?;
    let near = rho0(1e-9);
    let jump = (near - 1.0).abs().max(near.abs());
    if jump > tol.breakpoint_jump {
        return Err(Error::Precondition(format!(
            "{}: candidate partition jumps by {jump} across the origin",
            fx.name
        )));
    }
    let family = Arc::new(move |b: &Point| {
        let r = if b[0] > 0.0 { rho0(b[0]) } else if b[1] == 0.0 { 1.0 } else { 0.0 };
        vec![r, 1.0 - r]
    });
    bundle
        .clone()
        .with_partition(PartitionOfUnity::from_parts(vec![0, 1], family, bundle.cover().to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::verify_classification;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn every_name_builds() {
        for name in NAMES {
            let fx = fixture(name, 16).unwrap();
            assert_eq!(fx.name, name);
            assert!(!fx.describe().is_empty());
        }
        assert!(matches!(fixture("nosuch", 16), Err(Error::Unknown(_))));
        assert!(matches!(fixture("rp-0", 16), Err(Error::Unknown(_))));
    }

    #[test]
    fn mobius_transitions() {
        let fx = mobius(24).unwrap();
        let b = fx.bundle().unwrap();
        assert!(validate(b, &tol()).pass);
        assert_eq!(b.transition(0, 1, &[0.1]).unwrap(), Element::Sign(-1));
        assert_eq!(b.transition(0, 1, &[PI]).unwrap(), Element::Sign(1));
        let search = mobius_gauge_search(&fx, &tol()).unwrap();
        assert_eq!(search.candidates, 4);
        assert!(search.found.is_none());
        assert!(search.min_violation >= Group::sign().distance(&Element::<f64>::Sign(1), &Element::Sign(-1)));
    }

    #[test]
    fn winding_map() {
        let p = MilnorPoint::new(vec![Entry::new(0, 1.0, Element::Int(5))], 2).unwrap();
        assert_eq!(winding_comparison(&p).unwrap(), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(winding_equivariance(500, 3, &mut rng).unwrap() < 1e-12);
    }

    #[test]
    fn projective_partition_and_comparison() {
        for n in 1..=3 {
            let fx = projective_space(n, 24).unwrap();
            let b = fx.bundle().unwrap();
            let audit = b.partition().unwrap().audit(b.base(), 0.0);
            assert!(audit.passes(1e-9), "{n}: {audit:?}");
            assert!(validate(b, &tol()).pass);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = projective_comparison_check(2, 1000, &mut rng).unwrap();
        assert!(r.max_norm_error < 1e-12 && r.max_equivariance == 0.0, "{r:?}");
    }

    #[test]
    fn hopf_one() {
        let fx = hopf(1, 16).unwrap();
        let b = fx.bundle().unwrap();
        assert_eq!(b.charts(), 2);
        assert!(validate(b, &tol()).pass);
        let w = &b.base().grid[3];
        for k in b.charts_at(w) {
            let x = TotalPoint::new(k, w.clone(), hopf_fiber(w, k));
            for j in b.charts_at(w) {
                let y = b.coordinate_in(&x, j).unwrap();
                assert!(Group::circle().distance(&y, &hopf_fiber(w, j)) < 1e-12);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(hopf_fiber_recovery(&fx, &tol(), 200, &mut rng).unwrap() < 1e-8);
        let assoc = hopf_associated(&fx, &tol()).unwrap();
        assert!(assoc.validation.pass && assoc.frame_roundtrip.pass);
    }

    #[test]
    fn classification_of_small_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in ["trivial", "mobius", "winding", "rp-1"] {
            let fx = fixture(name, 16).unwrap();
            let r = verify_classification(fx.bundle().unwrap(), &tol(), 100, &mut rng).unwrap();
            assert!(r.pass, "{name}: {r:?}");
        }
    }

    #[test]
    fn products() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for (g, h) in [(Group::sign(), Group::circle()), (Group::integers(), Group::general_linear(2))] {
            let r = product_group_check(&g, &h, 300, &mut rng).unwrap();
            assert!(r.weights_exact && r.max_equivariance < 1e-12 && r.max_partition_error < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn doubled_line_is_certified() {
        let fx = doubled_line(41).unwrap();
        assert!(validate(fx.bundle().unwrap(), &tol()).pass);
        let c = doubled_line_certificate(&fx, &tol()).unwrap();
        assert!(c.certified, "{c:?}");
        let last = c.probes.last().unwrap();
        assert_eq!(last.x, "1/1000000");
        assert_eq!(last.ratio, "1/1000000");
        assert!(try_register_partition(&fx, Arc::new(|_| 0.5), &tol()).is_err());
        assert!(matches!(
            crate::bundle::classify(fx.bundle().unwrap(), &tol()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn degree2_pullback_trivializes() {
        let fx = mobius_degree2(48).unwrap();
        assert!(validate(fx.bundle().unwrap(), &tol()).pass);
        let r = degree2_check(&fx, &tol()).unwrap();
        assert!(r.pass && r.max_violation == 0.0, "{r:?}");
        // the plain Möbius bundle admits no such gauge
        let m = mobius(48).unwrap();
        let g = gauge_check(m.bundle().unwrap(), &trivial_on_cover(m.bundle().unwrap()), &degree2_gauge(), 1e-9).unwrap();
        assert!(!g.pass);
    }
}
