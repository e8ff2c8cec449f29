#![no_main]

use dqsense::spectral::{harmonic_at, Spectrum};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = Spectrum::read_csv(data) else { return };
    let mut out = Vec::new();
    spec.write_csv(&mut out).expect("write to memory");
    assert_eq!(Spectrum::read_csv(out.as_slice()).expect("re-read of emitted spectrum"), spec);
    if let Some(last) = spec.lines.last() {
        let _ = harmonic_at(&spec, last.order * 0.5);
    }
});
