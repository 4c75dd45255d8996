use std::path::PathBuf;

use contact_lattice::harness::{run_experiment, ExperimentSpec};

fn main() -> contact_lattice::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/specs");
    let name = std::env::args().nth(1).unwrap_or_else(|| "stationary_analytic.json".into());
    let out = std::env::temp_dir().join("contact-lattice-example");
    let spec = ExperimentSpec::from_path(&dir.join(name))?.with_output_dir(out);
    let report = run_experiment(&spec)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
