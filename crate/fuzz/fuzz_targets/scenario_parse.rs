//! Feeds arbitrary text to the scenario parser. Accepted inputs must
//! round-trip through the canonical emitter without changing meaning.

#![no_main]

use libfuzzer_sys::fuzz_target;
use synced_paths::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(scenario) = Scenario::parse(text) {
        let canonical = scenario.to_text();
        let reparsed = Scenario::parse(&canonical).expect("canonical text must parse");
        assert_eq!(scenario, reparsed, "round trip changed the scenario");
    }
});
