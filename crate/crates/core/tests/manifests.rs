use frobkit::family::FamilyManifest;
use frobkit::frobenius::{integrate, GridSpec};
use frobkit::linalg::Vector;
use frobkit::{Config, Error};

const CFG: Config = Config::DEFAULT;

#[test]
fn polynomial_manifest_integrates_its_level_set() {
    // f(x, y, z) = x² + y² + z² written out as monomials
    let manifest = r#"{
        "kind": "kernel",
        "map": {"dom_dim": 3, "components": [[
            {"coef": 1.0, "powers": [2, 0, 0]},
            {"coef": 1.0, "powers": [0, 2, 0]},
            {"coef": 1.0, "powers": [0, 0, 2]}
        ]]},
        "x0": [0.6, 0.0, 0.8]
    }"#;
    let built = FamilyManifest::from_json(manifest).unwrap().build(&CFG).unwrap();
    let patch = integrate(&built.family, &GridSpec::uniform(2, 0.1, 5).unwrap(), 5e-3, &CFG)
        .unwrap()
        .require_complete()
        .unwrap();
    let f = built.map.unwrap();
    for (_, x) in patch.ambient_points(&built.family) {
        assert!((f.eval(&x).unwrap()[0] - 1.0).abs() < 1e-8);
    }
}

#[test]
fn explicit_manifest_only_answers_listed_points() {
    let manifest = r#"{
        "kind": "explicit",
        "points": [[0.0, 0.0], [0.5, 0.0]],
        "bases": [
            {"rows": 2, "cols": 1, "data": [1.0, 0.0]},
            {"rows": 2, "cols": 1, "data": [1.0, 0.5]}
        ]
    }"#;
    let built = FamilyManifest::from_json(manifest).unwrap().build(&CFG).unwrap();
    let alpha = built.family.alpha_at(&Vector::from_vec(vec![0.5, 0.0]), &CFG).unwrap();
    assert!((alpha.alpha[(0, 0)] - 0.5).abs() < 1e-12);
    assert!(matches!(
        built.family.eval(&Vector::from_vec(vec![0.25, 0.0])),
        Err(Error::Eval(_))
    ));
}

#[test]
fn malformed_manifests_are_rejected() {
    for bad in [
        r#"{"kind": "kernel", "map": "torus"}"#,
        r#"{"kind": "spiral"}"#,
        r#"{"kind": "explicit", "points": [[0.0]], "bases": []}"#,
        r#"{"kind": "kernel", "map": "sphere_2d", "x0": [0.0, 1.0, 2.0]}"#,
    ] {
        let result = FamilyManifest::from_json(bad).and_then(|m| m.build(&CFG));
        assert!(result.is_err(), "{bad}");
    }
}
