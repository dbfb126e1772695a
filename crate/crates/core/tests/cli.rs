use std::fs;
use std::path::Path;
use std::process::Command;

use stokes_dtn::cli::{forward, recover};
use stokes_dtn::dump::SymbolDump;
use stokes_dtn::scenario::{DirectionSet, ScenarioConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stokes-dtn"))
}

fn write_config(dir: &Path, name: &str, cfg: &ScenarioConfig) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

#[test]
fn dump_round_trip_is_bit_exact() {
    let mut cfg = ScenarioConfig::random(3, 2, 21);
    cfg.directions = DirectionSet::Oversampled(5);
    let dump = forward(&cfg).unwrap();
    let back = SymbolDump::from_json(&dump.to_json().unwrap()).unwrap();
    assert_eq!(back, dump);
    let (a, b) = (dump.sequences().unwrap(), back.sequences().unwrap());
    for (x, y) in a.iter().zip(&b) {
        for (p, q) in x.symbols.iter().zip(&y.symbols) {
            for (u, v) in p.entries.entries().iter().zip(q.entries.entries()) {
                assert_eq!(u.order(), v.order());
                for (s, t) in u.coeffs().iter().zip(v.coeffs()) {
                    assert_eq!(s.re.to_bits(), t.re.to_bits());
                    assert_eq!(s.im.to_bits(), t.im.to_bits());
                }
            }
        }
    }
}

#[test]
fn malformed_dump_is_rejected() {
    let dump = forward(&ScenarioConfig::flat(2, 1)).unwrap();
    let mut bad = dump.clone();
    bad.directions[0].symbols.pop();
    assert!(SymbolDump::from_json(&serde_json::to_string(&bad).unwrap()).is_err());
    let mut bad = dump;
    bad.schema = "other".into();
    assert!(SymbolDump::from_json(&serde_json::to_string(&bad).unwrap()).is_err());
}

#[test]
fn identical_configs_give_identical_reports() {
    let cfg = ScenarioConfig::random(2, 3, 5);
    let a = recover(&cfg, &forward(&cfg).unwrap()).unwrap().to_json().unwrap();
    let b = recover(&cfg, &forward(&cfg).unwrap()).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn flat_roundtrip_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.json", &ScenarioConfig::flat(2, 3));
    let out = dir.path().join("out");
    let start = std::time::Instant::now();
    let (code, text) = run(&["roundtrip", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(code, 0, "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for o in report["orders"].as_array().unwrap() {
        assert!(o["error"]["absolute"].as_f64().unwrap() <= 1e-11);
    }
    assert!(out.join("report.txt").exists() && out.join("symbols.json").exists());
}

#[test]
fn forward_then_recover_matches_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &ScenarioConfig::random(3, 3, 9));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());
    assert_eq!(run(&["roundtrip", "--config", &cfg, "--out", a]).0, 0);
    assert_eq!(run(&["forward", "--config", &cfg, "--out", b, "--jobs", "2"]).0, 0);
    assert_eq!(run(&["recover", "--config", &cfg, "--out", b]).0, 0);
    let read = |d: &str| fs::read(Path::new(d).join("report.json")).unwrap();
    assert_eq!(read(a), read(b));
}

#[test]
fn verify_passes_and_catches_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &ScenarioConfig::random(2, 1, 3));
    let out = dir.path().join("v");
    let out = out.to_str().unwrap();
    let (code, text) = run(&["verify", "--config", &cfg, "--out", out]);
    assert_eq!(code, 0, "{text}");
    let (code, text) = run(&["verify", "--config", &cfg, "--out", out, "--mutate", "C0:1,2"]);
    assert_eq!(code, 1, "{text}");
    assert!(text.contains("FAIL transformation identity"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_n = dir.path().join("n1.json");
    fs::write(&bad_n, r#"{"n": 1, "metric": {"family": "flat"}}"#).unwrap();
    let (code, text) = run(&["forward", "--config", bad_n.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(text.contains("n >= 2"), "{text}");

    let low_k = dir.path().join("k.json");
    fs::write(&low_k, r#"{"n": 2, "depth": 3, "jet_order": 4, "metric": {"family": "flat"}}"#).unwrap();
    let (code, text) = run(&["forward", "--config", low_k.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(text.contains("K >= 5"), "{text}");

    let cfg = write_config(dir.path(), "ok.json", &ScenarioConfig::flat(2, 1));
    assert_eq!(run(&["roundtrip", "--config", &cfg, "--mutate", "B:0,0"]).0, 2);
    assert_eq!(run(&["verify", "--config", &cfg, "--mutate", "X:0,0"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["recover"]).0, 2);
}

#[test]
fn depth_and_seed_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &ScenarioConfig::random(2, 1, 0));
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let (code, text) = run(&["roundtrip", "--config", &cfg, "--out", out, "--depth", "2", "--seed", "4"]);
    assert_eq!(code, 0, "{text}");
    let dump = SymbolDump::read(&Path::new(out).join("symbols.json")).unwrap();
    assert_eq!(dump.depth, 2);
    let mut want = ScenarioConfig::random(2, 2, 4);
    want.output.dir = None;
    assert_eq!(forward(&want).unwrap(), dump);
}
