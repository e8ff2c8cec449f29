#![no_main]

use dqsense::harness::Trace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(trace) = Trace::read_csv(data) else { return };
    let mut out = Vec::new();
    trace.write_csv(&mut out).expect("write to memory");
    let back = Trace::read_csv(out.as_slice()).expect("re-read of emitted trace");
    assert_eq!(back.rows, trace.rows);
});
