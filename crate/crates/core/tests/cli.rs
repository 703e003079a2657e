mod common;

use std::path::Path;
use std::process::Command;

use common::c;
use epr_chain::cli::{run_command, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};
use epr_chain::config::{parse_config_str, serialize_config};
use epr_chain::protocol::{ChainConfig, Coupling, Thresholds};
use epr_chain::report::RunManifest;
use epr_chain::state::random_unitary;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const QUBIT: &str = r#"{"dimension":2,"amplitudes":[{"re":0.6,"im":0},{"re":0,"im":0.8}],"shots":20000,"seed":3,"measure_particle_after":true}"#;
const CERTAIN: &str = r#"{"dimension":2,"amplitudes":[{"re":1,"im":0},{"re":0,"im":0}],"shots":5000}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn epr(args: &[&str]) -> i32 {
    run_command(std::iter::once("epr").chain(args.iter().copied()))
}

fn without_timestamp(path: &str) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn run_certain_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CERTAIN);
    let out = dir.path().join("r.json").display().to_string();
    assert_eq!(epr(&["run", "--config", &cfg, "--out", &out]), EXIT_OK);
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(m.histogram.counts, vec![5000, 0]);
    assert!(m.passed());
    assert_eq!(m.config.shots, 5000);
}

#[test]
fn run_reports_are_byte_identical_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", QUBIT);
    let a = dir.path().join("a.json").display().to_string();
    let b = dir.path().join("b.json").display().to_string();
    assert_eq!(epr(&["run", "--config", &cfg, "--out", &a]), EXIT_OK);
    assert_eq!(epr(&["run", "--config", &cfg, "--out", &b]), EXIT_OK);
    assert_eq!(without_timestamp(&a), without_timestamp(&b));
    let strip = |p: &str| -> String {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", QUBIT);
    let out = dir.path().join("r.json").display().to_string();
    assert_eq!(
        epr(&["run", "--config", &cfg, "--out", &out, "--shots", "1234", "--seed", "8", "--depth", "3"]),
        EXIT_OK
    );
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(m.histogram.shots, 1234);
    assert_eq!(m.config.seed, 8);
    assert_eq!(m.config.chain_depth, 3);
}

#[test]
fn forced_statistical_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", QUBIT);
    let out = dir.path().join("r.json").display().to_string();
    assert_eq!(epr(&["run", "--config", &cfg, "--out", &out, "--sigma", "0"]), EXIT_CHECK_FAILED);
    let zero_in_file = write(
        dir.path(),
        "z.json",
        r#"{"dimension":2,"amplitudes":[{"re":0.6,"im":0},{"re":0.8,"im":0}],"shots":5000,"thresholds":{"sigma":0}}"#,
    );
    assert_eq!(epr(&["run", "--config", &zero_in_file, "--out", &out]), EXIT_CHECK_FAILED);
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(epr(&["run", "--config", "/definitely/missing.json"]), EXIT_USAGE);
    assert_eq!(epr(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(epr(&["run"]), EXIT_USAGE);
    let bad = write(dir.path(), "bad.json", r#"{"dimension":2,"amplitudes":[{"re":1,"im":0},{"re":1,"im":0}]}"#);
    assert_eq!(epr(&["run", "--config", &bad]), EXIT_USAGE);
    assert_eq!(epr(&["verify", "--dimension", "1"]), EXIT_USAGE);
    assert_eq!(epr(&["verify", "--dimension", "16", "--depth", "3"]), EXIT_USAGE);
}

#[test]
fn verify_passes() {
    assert_eq!(epr(&["verify", "--dimension", "3", "--depth", "2"]), EXIT_OK);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json").display().to_string();
    assert_eq!(epr(&["verify", "--dimension", "5", "--depth", "1", "--out", &out]), EXIT_OK);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v.as_array().unwrap().iter().all(|c| c["passed"] == Value::Bool(true)));
}

#[test]
fn sweep_over_configs() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", QUBIT);
    let b = write(dir.path(), "b.json", CERTAIN);
    let out = dir.path().join("s.json").display().to_string();
    assert_eq!(epr(&["sweep", "--config", &a, "--config", &b, "--out", &out]), EXIT_OK);
    let v: Vec<RunManifest> = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v.len(), 2);
    assert_eq!(v[1].histogram.counts, vec![5000, 0]);
}

#[test]
fn trajectory_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", QUBIT);
    let out = dir.path().join("r.json").display().to_string();
    let csv = dir.path().join("t.csv").display().to_string();
    assert_eq!(epr(&["run", "--config", &cfg, "--out", &out, "--trajectories", &csv]), EXIT_OK);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("shot,outcome_k,eigenvalue,particle_outcome"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 20_000);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        // ideal coupling: particle reading equals device reading
        assert_eq!(r[1], r[3]);
    }
}

#[test]
fn binary_respects_thread_cap_and_rejects_bad_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CERTAIN);
    let out = dir.path().join("r.json").display().to_string();
    let bin = env!("CARGO_BIN_EXE_epr");
    let ok = Command::new(bin)
        .args(["run", "--config", &cfg, "--out", &out])
        .env("EPR_SIM_THREADS", "2")
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));
    let bad = Command::new(bin)
        .args(["run", "--config", &cfg, "--out", &out])
        .env("EPR_SIM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("EPR_SIM_THREADS"));
    let missing = Command::new(bin).args(["run", "--config", "/nope/c.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nope/c.json"));
}

fn arb_config() -> impl Strategy<Value = ChainConfig> {
    (2usize..=4, 1usize..=3, any::<u64>(), 1u64..1_000_000, any::<bool>(), any::<bool>(), prop::option::of(0.0f64..1.0))
        .prop_map(|(d, depth, seed, shots, measure, explicit, tv_max)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let amps = epr_chain::state::random_state(epr_chain::state::Layout::single("x", d).unwrap(), &mut rng)
                .amps()
                .to_vec();
            let coupling = if explicit {
                Coupling::Explicit(random_unitary(d * d, &mut rng))
            } else {
                Coupling::Ideal
            };
            ChainConfig::builder(d, amps)
                .chain_depth(depth)
                .coupling(coupling)
                .shots(shots)
                .seed(seed)
                .measure_particle_after(measure)
                .thresholds(Thresholds { sigma: 3.5, tv_max })
                .build()
                .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_schema_round_trip(cfg in arb_config()) {
        let text = serialize_config(&cfg);
        prop_assert_eq!(parse_config_str(&text).unwrap(), cfg);
    }
}

#[test]
fn qubit_example_parses_to_expected_probabilities() {
    let cfg = parse_config_str(QUBIT).unwrap();
    assert_eq!(cfg.amplitudes(), &[c(0.6, 0.0), c(0.0, 0.8)]);
}
