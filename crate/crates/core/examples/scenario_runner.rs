//! Runs a scenario from flat config text and prints its manifest.
//!
//! ```text
//! cargo run --release --example scenario_runner -- configs/sandwich.conf
//! ```

use geoflow::experiments::{self, ScenarioConfig};

fn main() -> geoflow::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ScenarioConfig::from_file(path.as_ref())?,
        None => ScenarioConfig::parse("scenario = sandwich\noutput_dir = out/sandwich_example\nflow.max_time = 20\n")?,
    };
    let manifest = experiments::run(&cfg)?;
    print!("{}", manifest.render());
    Ok(())
}
