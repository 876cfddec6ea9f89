//! Fixtures shared by the propagation benchmarks.

use hydronoise_core::acoustics::SoundContext;
use hydronoise_core::engine::{sources_by_minute, SourceSample};
use hydronoise_core::synthetic::{Scenario, ScenarioConfig};

pub fn scenario(preset: &str) -> Scenario {
    let cfg = match preset {
        "tiny" => ScenarioConfig::tiny(7),
        "small" => ScenarioConfig::small(7),
        "large" => ScenarioConfig::large(7),
        other => panic!("unknown preset {other}"),
    };
    Scenario::generate(cfg).expect("scenario")
}

/// Every source sample of a scenario at one frequency, flattened.
pub fn samples(s: &Scenario, frequency_hz: u32) -> Vec<SourceSample> {
    sources_by_minute(&s.trips, frequency_hz, &s.window)
        .expect("sources")
        .into_values()
        .flatten()
        .collect()
}

pub fn context() -> SoundContext {
    SoundContext::default()
}
