//! Feeds arbitrary text to the trace CSV reader. Accepted traces must
//! serialize back to bytes that parse to the same trace.

#![no_main]

use libfuzzer_sys::fuzz_target;
use synced_paths::trace::Trace;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(trace) = Trace::parse_csv(text) {
        let csv = trace.to_csv();
        let reparsed = Trace::parse_csv(&csv).expect("serialized trace must parse");
        assert_eq!(trace, reparsed, "round trip changed the trace");
    }
});
