//! The config-driven runner as a library: parse an experiment description
//! from text, execute it into a directory, and read the report.
//!
//! Run with: cargo run --release --example experiment_from_config

use nevlab::config::parse_config_str;
use nevlab::error::Result;
use nevlab::experiment::run_experiment;

const CONFIG: &str = r#"
name = fmt-conic
kind = fmt

[curve]
components = "1", "z", "z^2"

[divisor]
poly = "w0 + w2"

[grid]
min = 2
max = 32
points = 9

[tolerances]
flatness = 1e-3
"#;

fn main() -> Result<()> {
    let config = parse_config_str(CONFIG)?;
    let out = std::env::temp_dir().join("nevlab-example");
    let report = run_experiment(&config, &out);

    println!("{}", report.summary_text());
    println!("wrote {} file(s) under {}", report.files.len(), report.directory.display());
    Ok(())
}
