#![no_main]

use dqsense::harness::Scenario;
use libfuzzer_sys::fuzz_target;

// Anything that parses and validates must survive a serialize/parse round trip.
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = Scenario::from_json_slice(data) {
        let again = Scenario::from_json_slice(s.to_json().as_bytes()).expect("re-parse of emitted scenario");
        assert_eq!(again, s);
        let _ = dqsense::estimation::predicted_orders(&s.position_error, &s.current_error, &s.motor, s.command_dq());
    }
});
