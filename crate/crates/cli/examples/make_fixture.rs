//! Regenerates the synthetic input set used by the CLI tests:
//! `cargo run -p hydronoise-cli --example make_fixture -- <dir>`.

use std::path::PathBuf;

use hydronoise_core::synthetic::{Scenario, ScenarioConfig};

fn main() {
    let dir: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crates/cli/tests/fixtures/synthetic"));
    let scenario = Scenario::generate(ScenarioConfig::tiny(2020)).expect("scenario");
    scenario.write_inputs(&dir).expect("write inputs");
    println!("{} records, {} trips -> {}", scenario.records.len(), scenario.trips.len(), dir.display());
}
