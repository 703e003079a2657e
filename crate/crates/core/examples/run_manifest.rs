//! Build the same JSON report the `epr run` command writes, twice, and check they agree.
//!
//! ```bash
//! cargo run -p epr-chain --example run_manifest
//! ```

use epr_chain::analysis::run_and_verify;
use epr_chain::config::{parse_config_str, serialize_config};
use epr_chain::report::{write_trajectories_csv, RunManifest};

const CONFIG: &str = r#"{
  "dimension": 2,
  "amplitudes": [{"re": 0.6, "im": 0}, {"re": 0, "im": 0.8}],
  "chain_depth": 2,
  "shots": 20000,
  "seed": 7,
  "measure_particle_after": true
}"#;

fn manifest() -> Result<RunManifest, Box<dyn std::error::Error>> {
    let config = parse_config_str(CONFIG)?;
    let (trajectories, report) = run_and_verify(&config)?;
    Ok(RunManifest::new(&config, &trajectories, report)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = parse_config_str(CONFIG)?;
    println!("normalized config:\n{}", serialize_config(&config));

    let (a, b) = (manifest()?, manifest()?);
    println!("{}", a.summary());
    let strip = |m: &RunManifest| {
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        v.as_object_mut().unwrap().remove("timestamp");
        v
    };
    println!("identical apart from timestamp: {}", strip(&a) == strip(&b));

    let (trajectories, _) = run_and_verify(&config)?;
    let mut csv = Vec::new();
    write_trajectories_csv(&mut csv, &trajectories[..5])?;
    print!("{}", String::from_utf8(csv)?);
    Ok(())
}
