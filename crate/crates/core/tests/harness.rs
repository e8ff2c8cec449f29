use std::fs;

use dqsense::estimation::{predicted_orders, Channel};
use dqsense::frames::SynchronousCurrents;
use dqsense::harness::{emit, parse_formats, read_predicted_orders, run, Format, Mode, Scenario, Trace, TRACE_COLUMNS};
use dqsense::plant::MotorParams;
use dqsense::sensing::{CurrentErrorSpec, PositionErrorSpec};
use dqsense::spectral::{harmonic_at, parseval_residual, Spectrum, TimeSeries};
use dqsense::Error;

fn offset_only() -> Scenario {
    Scenario { current_error: CurrentErrorSpec::offsets(1.0, 0.0, 0.0), ..Scenario::reference_open_loop(0.0) }
}

#[test]
fn open_loop_pins_true_currents_and_skips_regulator() {
    let r = run(&Scenario::reference_open_loop(21.5)).unwrap();
    assert_eq!(r.regulator_calls, 0);
    assert!(r.closed_loop.is_none());
    assert_eq!(r.trace.len(), 12_000);
    assert!(r.trace.rows.iter().all(|row| row.id == 0.0 && row.iq == 21.5));
    // torque = 1.5 · 3 · 0.0077 · 21.5
    assert!((r.trace.rows[0].torque - 0.744_975).abs() < 1e-12);
}

#[test]
fn closed_loop_counts_every_regulator_update() {
    let s = Scenario { duration_s: 12.0, ..Scenario::reference_closed_loop(5.0) };
    let r = run(&s).unwrap();
    assert_eq!(r.regulator_calls, 12 * 20_000);
    assert_eq!(r.trace.len(), 12_000);
    let rep = r.closed_loop.unwrap();
    assert!(!rep.saturated);
    assert!((rep.mean_true - SynchronousCurrents::new(0.0, 5.0)).norm() < 1e-6);
}

#[test]
fn closed_loop_tracks_ideal_inversion_under_current_errors() {
    let s = Scenario {
        current_error: CurrentErrorSpec { gain_a: 0.05, gain_c: -0.03, ..CurrentErrorSpec::offsets(0.3, -0.2, 0.0) },
        ..Scenario::reference_closed_loop(21.5)
    };
    let rep = run(&s).unwrap().closed_loop.unwrap();
    // the pulsating error is at 5-30 Hz, far inside the 500 Hz loop
    assert!(rep.max_true_vs_ideal < 0.05, "{rep:?}");
    assert!(rep.max_estimated_vs_command < 0.05, "{rep:?}");
}

#[test]
fn feedforward_changes_transient_not_steady_state() {
    let on = Scenario { duration_s: 12.0, ..Scenario::reference_closed_loop(21.5) };
    let off = Scenario { back_emf_feedforward: false, ..on.clone() };
    let a = run(&on).unwrap();
    let b = run(&off).unwrap();
    let ra = a.closed_loop.unwrap();
    let rb = b.closed_loop.unwrap();
    assert!((ra.mean_true - rb.mean_true).norm() < 1e-6);
    // the first logged sample after start differs: without feedforward the
    // integrator must build the back-EMF voltage itself
    let early = |r: &dqsense::harness::RunResult| r.trace.rows[1].iq;
    assert!((early(&a) - early(&b)).abs() > 1e-3);
}

#[test]
fn divergence_is_reported() {
    // proportional gain far past the discrete stability limit (ω_bw·dt ≈ 10);
    // the clamp is lifted, otherwise it would hold the loop in a bounded limit cycle
    let s = Scenario {
        bandwidth_rad_per_s: Some(2e5),
        voltage_limit_volt: Some(1e9),
        ..Scenario::reference_closed_loop(1.0)
    };
    match run(&s) {
        Err(Error::Divergence { magnitude, limit, time }) => {
            assert!(magnitude > limit && limit == 100.0);
            assert!(time < 0.01, "{time}");
        }
        Err(e) => panic!("expected divergence, got {e}"),
        Ok(_) => panic!("expected divergence, run completed"),
    }
}

#[test]
fn emitted_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&offset_only()).unwrap();
    let files = emit(&r, dir.path(), &[Format::Csv]).unwrap();
    assert_eq!(files.len(), 5);

    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRACE_COLUMNS.join(","));
    let back = Trace::read_csv(text.as_bytes()).unwrap();
    assert_eq!(back, r.trace);

    for c in &r.spectra {
        let bytes = fs::read(dir.path().join(format!("spectrum_{}.csv", c.channel))).unwrap();
        assert!(bytes.starts_with(b"order,freq_hz,magnitude\n"));
        assert_eq!(Spectrum::read_csv(bytes.as_slice()).unwrap(), c.spectrum);
    }
}

#[test]
fn emitted_floats_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    emit(&run(&offset_only()).unwrap(), dir.path(), &[Format::Csv]).unwrap();
    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    for field in text.lines().nth(5).unwrap().split(',') {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{field}");
    }
}

#[test]
fn emitted_spectra_satisfy_parseval() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario {
        position_error: PositionErrorSpec::static_offset(0.1).with_harmonic(1, 0.01, 0.0),
        current_error: CurrentErrorSpec::gains(0.05, 0.0, -0.02),
        ..Scenario::reference_open_loop(21.5)
    };
    let r = run(&s).unwrap();
    emit(&r, dir.path(), &[Format::Csv]).unwrap();
    let trace = Trace::read_csv(fs::File::open(dir.path().join("trace.csv")).unwrap()).unwrap();
    for c in &r.spectra {
        let spec = Spectrum::read_csv(fs::File::open(dir.path().join(format!("spectrum_{}.csv", c.channel))).unwrap())
            .unwrap();
        let ts: TimeSeries = trace.series(&c.channel).unwrap();
        assert!(parseval_residual(&ts, &spec) < 1e-12, "{}", c.channel);
        assert!(c.parseval_residual < 1e-12);
    }
}

#[test]
fn offset_only_prediction_json_is_single_line() {
    let dir = tempfile::tempdir().unwrap();
    emit(&run(&offset_only()).unwrap(), dir.path(), &[Format::Json]).unwrap();
    let bytes = fs::read(dir.path().join("predicted_orders.json")).unwrap();
    let lines = read_predicted_orders(&bytes).unwrap();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0].order, 3.0);
    assert!((lines[0].amplitude - 0.667).abs() < 1e-3);
    assert_eq!(lines[0].channel, Channel::Dq);

    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["mode"], "open_loop");
    assert_eq!(summary["regulator_calls"], 0);
}

#[test]
fn prediction_omitted_when_expansion_does_not_apply() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario { position_error: PositionErrorSpec::none().with_harmonic(1, 0.2, 0.0), ..offset_only() };
    let r = run(&s).unwrap();
    assert!(r.predicted_orders.is_err());
    emit(&r, dir.path(), &[Format::Json]).unwrap();
    assert!(!dir.path().join("predicted_orders.json").exists());
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["prediction_note"].as_str().unwrap().contains("sideband expansion"));
}

#[test]
fn svg_plots_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario { name: "a<b & \"c\"".into(), ..offset_only() };
    let files = emit(&run(&s).unwrap(), dir.path(), &parse_formats("svg").unwrap()).unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let text = fs::read_to_string(&f).unwrap();
        assert!(text.starts_with("<svg ") && text.trim_end().ends_with("</svg>"));
        assert!(text.contains("a&lt;b &amp; &quot;c&quot;"));
        assert!(!text.contains("NaN") && !text.contains("inf"));
        // crude balance check: every element opened is self-closed or closed
        let opened = text.matches('<').count();
        let closed = text.matches("/>").count() + 2 * text.matches("</").count();
        assert_eq!(opened, closed, "{}", f.display());
        assert_eq!(text.matches("<polyline").count(), 2);
    }
}

#[test]
fn unknown_format_is_invalid_config() {
    assert!(matches!(parse_formats("csv,png"), Err(Error::InvalidConfig(_))));
    assert_eq!(parse_formats("json,csv,json").unwrap(), vec![Format::Json, Format::Csv]);
}

#[test]
fn predicted_sidebands_match_fft() {
    // offset plus a first-order position harmonic, compared line by line
    let position = PositionErrorSpec::none().with_harmonic(1, 0.01, 0.4);
    let current = CurrentErrorSpec::offsets(0.0, 0.8, 0.0);
    let s = Scenario { position_error: position.clone(), current_error: current, ..Scenario::reference_open_loop(0.0) };
    let r = run(&s).unwrap();
    let lines = predicted_orders(&position, &current, &MotorParams::REFERENCE, SynchronousCurrents::ZERO).unwrap();
    let dominant = lines.iter().filter(|l| l.order > 0.0).map(|l| l.amplitude).fold(0.0, f64::max);
    for l in lines.iter().filter(|l| l.order > 0.0 && l.amplitude > 0.01 * dominant) {
        let channels: &[&str] = match l.channel {
            Channel::D => &["id_est"],
            Channel::Q => &["iq_est"],
            Channel::Dq => &["id_est", "iq_est"],
        };
        for ch in channels {
            let measured = harmonic_at(r.spectrum(ch).unwrap(), l.order).unwrap();
            assert!(
                (measured - l.amplitude).abs() <= 0.05 * l.amplitude,
                "order {} {ch}: {measured} vs {}",
                l.order,
                l.amplitude
            );
        }
    }
}

#[test]
fn scenario_json_round_trips() {
    let s = Scenario {
        position_error: PositionErrorSpec::static_offset(0.2).with_harmonic(3, 0.001, 1.0),
        current_error: CurrentErrorSpec::gains(0.01, 0.0, 0.0),
        ..Scenario::reference_closed_loop(10.0)
    };
    let back = Scenario::from_json_slice(s.to_json().as_bytes()).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.mode, Mode::ClosedLoop);
}

#[test]
fn shipped_scenarios_run() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|x| x == "json") {
            let s = Scenario::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let r = run(&s).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(r.closed_loop.is_some(), s.mode == Mode::ClosedLoop);
            count += 1;
        }
    }
    assert!(count >= 5);
}
