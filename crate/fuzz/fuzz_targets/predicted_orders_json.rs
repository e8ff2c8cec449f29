//! Decoder for the predicted-orders JSON written next to each run.

#![no_main]

use dqsense::harness::read_predicted_orders;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 20 {
        return;
    }
    let _ = read_predicted_orders(data);
});
