use std::process::Command;

use hphase_cli::checks::{matches, registry};
use hphase_cli::{ConfigError, RunConfig};

fn hphase() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hphase"))
}

#[test]
fn config_parses_over_defaults() {
    let cfg = RunConfig::parse("# desk run\nn_max = 16\nseed = 7 # trailing\ntol.moyal.associativity = 1e-9\n").unwrap();
    assert_eq!(cfg.n_max, 16);
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.points, RunConfig::default().points);
    assert_eq!(cfg.tol("moyal", "associativity", 1.0), 1e-9);
    assert_eq!(cfg.tol("moyal", "other", 0.5), 0.5);
    assert!(!cfg.is_default_scale());
    assert!(RunConfig::default().is_default_scale());
}

#[test]
fn config_rejects_bad_input() {
    assert!(matches!(RunConfig::parse("n_max 16"), Err(ConfigError::Syntax { line: 1, .. })));
    assert!(matches!(RunConfig::parse("colour = red"), Err(ConfigError::UnknownKey(_))));
    assert!(matches!(RunConfig::parse("n_max = many"), Err(ConfigError::Invalid { .. })));
    assert!(matches!(RunConfig::parse("lambda_min = 9"), Err(ConfigError::Invalid { .. })));
    assert!(matches!(RunConfig::parse("tol.moyal.x = -1"), Err(ConfigError::Invalid { .. })));
    assert!(matches!(RunConfig::parse("points = 4096"), Err(ConfigError::Invalid { .. })));
}

#[test]
fn hash_tracks_content_not_output_dir() {
    let a = RunConfig::default();
    let mut b = a.clone();
    b.out = Some("elsewhere".into());
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = a.clone().with_overrides(["seed=1"]).unwrap();
    assert_ne!(a.hash(), c.hash());
    assert_eq!(RunConfig::parse(&c.canonical()).unwrap(), c);
}

#[test]
fn registry_covers_every_criterion_once() {
    let crit: Vec<u8> = registry().iter().map(|c| c.criterion).collect();
    assert_eq!(crit, (1..=19).collect::<Vec<u8>>());
    assert!(matches("lp-*", "lp-bony"));
    assert!(matches("*-symbols", "hpdo-symbols"));
    assert!(matches("h*o-*", "hpdo-adjoint"));
    assert!(!matches("lp-*", "hpdo-symbols"));
    assert!(matches("moyal", "moyal") && !matches("moya", "moyal"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = hphase().args(["check", "group-axioms", "--out", out]).status().unwrap();
    assert_eq!(ok.code(), Some(0));
    assert!(dir.path().join("group-axioms.json").exists());
    assert!(dir.path().join("summary.json").exists());
    let failing = hphase().args(["check", "group-axioms", "--out", out, "--set", "tol.group-axioms.seconds=1e-30"]).status().unwrap();
    assert_eq!(failing.code(), Some(1));
    let unknown = hphase().args(["check", "no-such-check", "--out", out]).status().unwrap();
    assert_eq!(unknown.code(), Some(2));
    let bad = hphase().args(["suite", "--out", out, "--set", "n_max=0"]).status().unwrap();
    assert_eq!(bad.code(), Some(2));
    let empty = hphase().args(["suite", "nothing*", "--out", out]).status().unwrap();
    assert_eq!(empty.code(), Some(2));
}

#[test]
fn csv_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let st = hphase().args(["check", "moyal", "--format", "csv", "--out", out.to_str().unwrap()]).status().unwrap();
        assert_eq!(st.code(), Some(0));
        std::fs::read(out.join("moyal.csv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("case,error\n"));
}

#[test]
fn demo_prints_growing_table() {
    let out = hphase().args(["demo", "counterexample", "--k", "1", "--N", "6"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let sups: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(sups.len(), 4);
    assert!(sups.windows(2).all(|w| w[1] > w[0]));
}
