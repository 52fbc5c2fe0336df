use dbundle::bundle::{gauge_check, pullback, validate, verify_classification, GaugeTransformation};
use dbundle::format::BundleSpec;
use dbundle::group::Element;
use dbundle::zoo;
use dbundle::Tolerances;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

const MOBIUS: &str = r#"{
  "name": "mobius",
  "group": "sign",
  "base": { "name": "S^1", "kind": "angle", "vars": ["theta"], "grid": { "circle": { "points": 32 } } },
  "charts": [
    { "arc": { "start": -1.0471975511965976, "length": 5.235987755982989 } },
    { "arc": { "start": 2.0943951023931957, "length": 5.235987755982989 } }
  ],
  "transitions": [ { "from": 0, "to": 1, "params": ["-signum(cos(theta))"] } ]
}"#;

#[test]
fn json_mobius_matches_the_builtin_fixture() {
    let tol = Tolerances::default();
    let spec = BundleSpec::from_json(MOBIUS).unwrap();
    assert_eq!(BundleSpec::from_json(&spec.to_json().unwrap()).unwrap(), spec);
    let from_json = spec.build().unwrap();
    assert!(validate(&from_json, &tol).pass);
    let fx = zoo::mobius(32).unwrap();
    let builtin = fx.bundle().unwrap();
    let id = GaugeTransformation::identity(builtin.group(), 2);
    assert!(gauge_check(&from_json, builtin, &id, tol.gauge).unwrap().pass);
    // the transition flips sign across the two overlaps
    assert_eq!(from_json.transition(0, 1, &[0.0]).unwrap(), Element::Sign(-1));
    assert_eq!(from_json.transition(0, 1, &[PI]).unwrap(), Element::Sign(1));
}

#[test]
fn unknown_group_and_short_params_are_rejected() {
    assert!(BundleSpec::from_json(&MOBIUS.replace("\"sign\"", "\"klein\"")).and_then(|s| s.build()).is_err());
    let two = MOBIUS.replace("[\"-signum(cos(theta))\"]", "[]");
    assert!(BundleSpec::from_json(&two).and_then(|s| s.build()).is_err());
}

#[test]
fn every_numerable_fixture_classifies() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for name in ["trivial", "mobius", "winding", "rp-1", "rp-2", "hopf-1", "mobius-degree2"] {
        let fx = zoo::fixture(name, 24).unwrap();
        assert!(fx.expected.classifies);
        let r = verify_classification(fx.bundle().unwrap(), &tol, 200, &mut rng).unwrap();
        assert!(r.pass, "{name}: {:?}", r.gauge);
    }
}

#[test]
fn doubled_line_is_certified_not_classified() {
    let tol = Tolerances::default();
    let fx = zoo::fixture("doubled_line", 24).unwrap();
    assert!(!fx.expected.classifies);
    assert!(fx.bundle().unwrap().partition().is_none());
    let cert = zoo::doubled_line_certificate(&fx, &tol).unwrap();
    assert!(cert.certified);
    assert!(cert.probes.iter().all(|p| p.exact));
    assert!(zoo::try_register_partition(&fx, Arc::new(|x| if x > 0.0 { 0.5 } else { 1.0 }), &tol).is_err());
}

#[test]
fn pullback_along_a_rotation_stays_valid() {
    let tol = Tolerances::default();
    let fx = zoo::mobius(32).unwrap();
    let b = fx.bundle().unwrap();
    let turned = pullback(b, b.base().clone(), Arc::new(|x: &[f64]| vec![x[0] + 0.4])).unwrap();
    assert!(validate(&turned, &tol).pass);
    // the pulled back cocycle is the old one read at the rotated angle
    for x in [0.1, 1.3, 2.9, 4.4] {
        assert_eq!(turned.transition(0, 1, &[x]).unwrap(), b.transition(0, 1, &[x + 0.4]).unwrap());
    }
}

#[test]
fn describe_mentions_charts_and_group() {
    let text = zoo::fixture("hopf-1", 16).unwrap().describe();
    assert!(text.contains("charts: 2"));
    assert!(text.contains("S^1"));
    assert!(zoo::fixture("nosuch", 16).is_err());
}

#[test]
fn group_names_parse() {
    use dbundle::group::Group;
    for name in ["additive", "positive", "integers", "sign", "circle", "lattice-2", "gl-2", "sign*circle"] {
        assert!(Group::from_name(name).is_ok(), "{name}");
    }
    assert_eq!(Group::from_name("sign*circle").unwrap().symbol(), "Z/2 x S^1");
    assert!(Group::from_name("Z/2").is_err());
}
