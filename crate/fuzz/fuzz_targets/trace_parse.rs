#![no_main]

use libfuzzer_sys::fuzz_target;
use zopd_core::trace::RunTrace;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(trace) = RunTrace::from_csv(text, 4) {
            let csv = trace.to_csv();
            let again = RunTrace::from_csv(&csv, 4).expect("emitted trace must parse");
            assert_eq!(again.to_csv(), csv);
        }
    }
});
