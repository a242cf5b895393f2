use proptest::prelude::*;

use super::*;

fn small(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        grid: GridConfig { n: 16, ..GridConfig::default() },
        estimates_n: 16,
        n_tau: 4,
        n_theta: 4,
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn default_config_round_trips() {
    let cfg = ExperimentConfig::default();
    let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
}

proptest! {
    #[test]
    fn config_round_trip_is_bit_exact(h in 1e-6f64..1.0, l in 0.1f64..100.0, seed in any::<u64>(), x in prop::collection::vec(-10.0f64..10.0, 3)) {
        let cfg = ExperimentConfig {
            grid: GridConfig { length: l, ..GridConfig::default() },
            sweep: SweepConfig { h_max: h, count: 5 },
            frames: vec![x],
            seed,
            ..ExperimentConfig::default()
        };
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back.sweep.h_max.to_bits(), h.to_bits());
        prop_assert_eq!(back.grid.length.to_bits(), l.to_bits());
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn config_errors_carry_line_context() {
    let err = ExperimentConfig::from_json("{\n  \"seed\": 1,\n  \"bogus\": 2\n}").unwrap_err();
    assert!(matches!(&err, LabError::Config(m) if m.contains("line 3")), "{err}");
    let err = ExperimentConfig::from_json(r#"{"coefficients": {"source": "files", "scalar1": "/no/such/file.json"}}"#).unwrap_err();
    assert!(matches!(&err, LabError::Config(m) if m.contains("does not exist")));
    assert!(ExperimentConfig::from_json(r#"{"frames": [[1.0, 0.0]]}"#).is_err());
}

#[test]
fn presets_build() {
    let g = make_grid(3, 16, 2.0 * std::f64::consts::PI, 0.9).unwrap();
    for p in [Preset::Zero, Preset::Identical, Preset::BumpQ, Preset::HolderQ, Preset::GradientQ] {
        let (c1, c2) = preset_pair(p, &g, 2).unwrap();
        assert_eq!(p == Preset::Zero, c1.is_zero());
        assert!(p == Preset::Identical || c2.is_zero());
    }
}

#[test]
fn coefficient_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    std::fs::write(&path, r#"[{"beta": [0, 0, 0], "profile": {"type": "smooth_bump", "center": [0, 0, 0], "radius": 0.5, "amplitude": 1.0}}]"#).unwrap();
    let cfg = ExperimentConfig {
        coefficients: CoefficientSource::Files { scalar1: Some(path), vector1: None, scalar2: None, vector2: None },
        ..small(dir.path())
    };
    let cfg = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
    let (c1, c2) = cfg.coefficient_pair(&cfg.grid().unwrap()).unwrap();
    assert_eq!(c1.scalar.pieces.len(), 1);
    assert!(c2.is_zero());
}

#[test]
fn verify_estimates_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path| {
        let cfg = ExperimentConfig { checks: vec!["sse2".into(), "jacobian".into()], ..small(dir) };
        cmd_verify_estimates(&cfg).unwrap()
    };
    let ma = run(a.path());
    let mb = run(b.path());
    assert!(ma.pass);
    assert_eq!(ma.artifacts, mb.artifacts);
    assert_eq!(ma.artifacts.len(), 3);
    for art in &ma.artifacts {
        let bytes = std::fs::read(a.path().join(&art.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), art.sha256);
    }
    assert!(a.path().join("manifest.json").is_file());

    let cfg = ExperimentConfig { checks: vec!["nope".into()], ..small(a.path()) };
    assert!(matches!(cmd_verify_estimates(&cfg), Err(LabError::UnknownCheck(_))));
}

#[test]
fn decay_guards_and_degenerate_case() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { sweep: SweepConfig { h_max: 0.125, count: 3 }, ..small(dir.path()) };
    assert!(matches!(cmd_cgo_decay(&cfg), Err(LabError::Underdetermined { .. })));
    let cfg = ExperimentConfig { coefficients: CoefficientSource::Preset { name: Preset::Zero }, ..small(dir.path()) };
    let m = cmd_cgo_decay(&cfg).unwrap();
    assert!(m.pass, "{:?}", m.failures);
    let summary: Vec<DecaySummary> = serde_json::from_slice(&std::fs::read(dir.path().join("decay/summary.json")).unwrap()).unwrap();
    assert_eq!(summary.len(), 2);
    assert!(summary.iter().all(|s| s.exact));
}

#[test]
fn identical_pair_recovers_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { coefficients: CoefficientSource::Preset { name: Preset::Identical }, ..small(dir.path()) };
    let m = cmd_recover(&cfg).unwrap();
    assert!(m.pass, "{:?}", m.failures);
    assert_eq!(m.c_phase, Complex64::new(1.0, 0.0));
    assert!(dir.path().join("recover/frame0.json").is_file());
}

#[test]
fn manifest_is_written_on_failure() {
    let dir = tempfile::tempdir().unwrap();
    // two h values cannot be extrapolated: the stage fails, the run still reports
    let cfg = ExperimentConfig { frames: vec![vec![0.0, 0.0, 0.0]], recovery_count: 2, ..small(dir.path()) };
    let m = cmd_recover(&cfg).unwrap();
    assert!(!m.pass);
    assert!(!m.failures.is_empty());
    assert!(dir.path().join("manifest.json").is_file());
}
