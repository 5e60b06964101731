use horolab_cli::{execute, main_with_args, ExperimentConfig, ExperimentKind};
use std::path::{Path, PathBuf};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec![
        "horolab".to_string(),
        sub.to_string(),
        "--config".into(),
        config.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    main_with_args(args)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const PARABOLOID: &str = r#"
experiment = "certify-curvature"
seed = 1

[submanifold]
d = 3
m = 2
n = 1
w = [{ terms = [{ exp = [2, 0], coef = 1.0 }, { exp = [0, 2], coef = 1.0 }] }]

[curvature]
grid_per_axis = 6
grid_half_width = 0.9
delta = 1e-6

[thresholds]
e_star_min = 1.999999
"#;

#[test]
fn paraboloid_certificate_is_two_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", PARABOLOID);
    assert_eq!(run("certify-curvature", &cfg, dir.path(), &[]), 0);
    let mut reader = csv::Reader::from_path(dir.path().join("certify-curvature.csv")).unwrap();
    let header = reader.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "e_star").unwrap();
    let mut rows = 0;
    for rec in reader.records() {
        let e: f64 = rec.unwrap()[col].parse().unwrap();
        assert!((e - 2.0).abs() < 1e-6, "{e}");
        rows += 1;
    }
    assert_eq!(rows, 36);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("certify-curvature.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["config"]["submanifold"]["d"], 3);
    assert_eq!(summary["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn dimension_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &PARABOLOID.replace("d = 3", "d = 4"));
    assert_eq!(run("certify-curvature", &cfg, dir.path(), &[]), 1);
    assert!(!dir.path().join("certify-curvature.csv").exists());
    let err = ExperimentConfig::from_toml(&PARABOLOID.replace("d = 3", "d = 4")).unwrap_err();
    assert!(err.to_string().contains("submanifold.d"), "{err}");
}

#[test]
fn parse_errors_carry_location() {
    let err =
        ExperimentConfig::from_toml(&PARABOLOID.replace("grid_per_axis = 6", "grid_per_axis = \"six\"")).unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");
    let err = ExperimentConfig::from_toml(&PARABOLOID.replace("delta = 1e-6", "delta = 1e-6\nbogus = 1")).unwrap_err();
    assert!(err.to_string().contains("bogus"), "{err}");
}

#[test]
fn threshold_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.toml",
        &PARABOLOID.replace("e_star_min = 1.999999", "e_star_min = 2.5"),
    );
    assert_eq!(run("certify-curvature", &cfg, dir.path(), &[]), 2);
    assert!(dir.path().join("certify-curvature.csv").exists());
}

#[test]
fn subcommand_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", PARABOLOID);
    assert_eq!(run("sublevel", &cfg, dir.path(), &[]), 1);
    assert_eq!(main_with_args(["horolab", "no-such-command"]), 1);
    assert_eq!(main_with_args(["horolab", "--help"]), 0);
}

#[test]
fn inapplicable_threshold_is_rejected() {
    let text = PARABOLOID.replace("e_star_min = 1.999999", "min_drop = 4.0");
    assert!(ExperimentConfig::from_toml(&text).is_err());
}

#[test]
fn example_configs_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, back, "{}", path.display());
            assert_eq!(horolab_cli::config_hash(&cfg), horolab_cli::config_hash(&back));
            seen += 1;
        }
    }
    assert!(seen >= 7);
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", PARABOLOID);
    let out = dir.path().join("nested");
    assert_eq!(
        run(
            "certify-curvature",
            &cfg,
            &out,
            &["--seed", "99", "--budget-scale", "0.5"]
        ),
        0
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("certify-curvature.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 99);
    assert_eq!(summary["config"]["budget_scale"], 0.5);
}

fn small_mixing(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(&configs_dir().join("mixing.toml")).unwrap();
    assert_eq!(cfg.experiment, ExperimentKind::Mixing);
    cfg.budget_scale = 0.02;
    cfg.output.dir = dir.to_path_buf();
    cfg
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let first = execute(&small_mixing(&a)).unwrap();
    let second = horolab::par::with_workers(3, || execute(&small_mixing(&b))).unwrap();
    let x = std::fs::read(first.csv).unwrap();
    let y = std::fs::read(second.csv).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
}
