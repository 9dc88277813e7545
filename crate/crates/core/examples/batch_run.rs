//! Runs a small experiment configuration through the library API and writes
//! the CSV reports and manifest into a temporary directory.

use fraclab::experiments::{run_config, RunContext};

fn main() {
    let config = br#"{"experiments": [
        {"name": "normalization", "params": {"a": [0.25, 0.75]}},
        {"name": "torsion", "acceptance": {"center_error": 1e-6}}
    ]}"#;
    let out = std::env::temp_dir().join("fraclab-batch-example");
    let manifest = run_config(config, &out, &RunContext::default(), |r| {
        println!("{}: {}", r.name, if r.pass() { "pass" } else { "FAIL" });
    })
    .expect("run succeeds");
    println!("config {} -> {}", manifest.config_hash, out.display());
}
