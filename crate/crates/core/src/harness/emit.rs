use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::run::{ClosedLoopReport, RunResult};
use super::svg::{render, Panel};
use crate::error::{Error, Result};
use crate::estimation::{ErrorDecomposition, PredictedLine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Svg,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidConfig(format!("unknown output format {other:?}"))),
        }
    }
}

/// Parse a comma-separated format list such as `csv,svg,json`.
pub fn parse_formats(list: &str) -> Result<Vec<Format>> {
    let mut out = Vec::new();
    for f in list.split(',').filter(|s| !s.trim().is_empty()) {
        let f: Format = f.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    mode: super::Mode,
    samples: usize,
    dt_s: f64,
    constants: &'a ErrorDecomposition,
    regulator_calls: u64,
    parseval_residuals: Vec<(&'a str, f64)>,
    prediction_note: Option<&'a str>,
    closed_loop: Option<&'a ClosedLoopReport>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_predicted_orders(bytes: &[u8]) -> Result<Vec<PredictedLine>> {
    let lines: Vec<PredictedLine> = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    if lines.iter().any(|l| !(l.order.is_finite() && l.order >= 0.0 && l.amplitude.is_finite() && l.amplitude >= 0.0)) {
        return Err(Error::Parse("predicted orders need finite, non-negative order and amplitude".into()));
    }
    Ok(lines)
}

fn svg_for_pair(result: &RunResult, title: &str, channels: [&str; 2]) -> Result<String> {
    let t = result.trace.column("t").unwrap_or_default();
    let p = result.scenario.motor.pole_pairs as f64;
    let max_order = (4.0 * p).max(
        result
            .predicted_orders
            .as_ref()
            .ok()
            .and_then(|lines| lines.iter().map(|l| l.order).reduce(f64::max))
            .unwrap_or(0.0)
            + 2.0,
    );
    let columns: Vec<Vec<f64>> = channels.iter().map(|c| result.trace.column(c).unwrap_or_default()).collect();
    let mut panels = Vec::new();
    for (name, samples) in channels.iter().zip(&columns) {
        let spectrum =
            result.spectrum(name).ok_or_else(|| Error::InvalidConfig(format!("no spectrum for channel {name}")))?;
        panels.push(Panel { label: name, t: &t, samples, spectrum });
    }
    Ok(render(title, &panels, max_order))
}

/// Write the requested artifacts under `out_dir` and return their paths.
pub fn emit(result: &RunResult, out_dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    if formats.contains(&Format::Csv) {
        let path = out_dir.join("trace.csv");
        let mut w = create(&path)?;
        result.trace.write_csv(&mut w)?;
        w.flush()?;
        written.push(path);
        for s in &result.spectra {
            let path = out_dir.join(format!("spectrum_{}.csv", s.channel));
            let mut w = create(&path)?;
            s.spectrum.write_csv(&mut w)?;
            w.flush()?;
            written.push(path);
        }
    }

    if formats.contains(&Format::Json) {
        if let Ok(lines) = &result.predicted_orders {
            let path = out_dir.join("predicted_orders.json");
            write_json(&path, lines)?;
            written.push(path);
        }
        let summary = Summary {
            name: &result.scenario.name,
            mode: result.scenario.mode,
            samples: result.trace.len(),
            dt_s: result.trace.dt,
            constants: &result.constants,
            regulator_calls: result.regulator_calls,
            parseval_residuals: result.spectra.iter().map(|s| (s.channel.as_str(), s.parseval_residual)).collect(),
            prediction_note: result.predicted_orders.as_ref().err().map(String::as_str),
            closed_loop: result.closed_loop.as_ref(),
        };
        let path = out_dir.join("summary.json");
        write_json(&path, &summary)?;
        written.push(path);
    }

    if formats.contains(&Format::Svg) {
        let name = if result.scenario.name.is_empty() { "run" } else { &result.scenario.name };
        for (file, label, channels) in
            [("estimated_dq.svg", "estimated", ["id_est", "iq_est"]), ("true_dq.svg", "true", ["id", "iq"])]
        {
            let path = out_dir.join(file);
            let svg = svg_for_pair(result, &format!("{name}: {label} dq currents"), channels)?;
            fs::write(&path, svg)?;
            written.push(path);
        }
    }
    Ok(written)
}
