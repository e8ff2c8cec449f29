use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use dqsense::estimation::predicted_orders;
use dqsense::harness::{emit, parse_formats, run, validate_analytic, Scenario};
use dqsense::Error;

#[derive(Parser)]
#[command(name = "dqsense", version, about = "Sensor-error propagation through a field-oriented PMSM current loop")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its artifacts.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "csv,json")]
        formats: String,
    },
    /// Run every `*.json` scenario in a directory, one output directory each.
    Sweep {
        dir: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "csv,json")]
        formats: String,
    },
    /// Randomized comparison of the analytic error model against the
    /// brute-force sensing chain.
    Validate {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the predicted harmonic lines without simulating.
    Orders { scenario: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn run_one(path: &Path, out: &Path, formats: &str) -> dqsense::Result<Vec<PathBuf>> {
    let formats = parse_formats(formats)?;
    let scenario = Scenario::from_path(path)?;
    let result = run(&scenario)?;
    emit(&result, out, &formats)
}

fn sweep(dir: &Path, out: &Path, formats: &str) -> dqsense::Result<u8> {
    parse_formats(formats)?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!("no *.json scenarios in {}", dir.display())));
    }
    let outcomes: Vec<(PathBuf, dqsense::Result<Vec<PathBuf>>)> = paths
        .par_iter()
        .map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (p.clone(), run_one(p, &out.join(stem), formats))
        })
        .collect();
    // worst failure decides the exit code; divergence outranks bad config
    let mut code = 0;
    for (p, r) in outcomes {
        match r {
            Ok(files) => println!("ok    {} ({} files)", p.display(), files.len()),
            Err(e) => {
                eprintln!("error {}: {e}", p.display());
                code = code.max(exit_code(&e));
            }
        }
    }
    Ok(code)
}

fn orders(path: &Path) -> dqsense::Result<()> {
    let s = Scenario::from_path(path)?;
    let lines = predicted_orders(&s.position_error, &s.current_error, &s.motor, s.command_dq())?;
    println!("{:>8} {:>12} {:>7} {:>24}", "order", "freq_hz", "channel", "amplitude_a");
    for l in lines {
        let channel = channel_label(&l.channel);
        println!("{:>8.3} {:>12.6} {:>7} {:>24.17}", l.order, l.order * s.shaft_hz(), channel, l.amplitude);
    }
    Ok(())
}

fn channel_label(c: &dqsense::estimation::Channel) -> &'static str {
    use dqsense::estimation::Channel;
    match c {
        Channel::D => "d",
        Channel::Q => "q",
        Channel::Dq => "dq",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { scenario, out, formats } => run_one(&scenario, &out, &formats).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
            0
        }),
        Command::Sweep { dir, out, formats } => sweep(&dir, &out, &formats),
        Command::Validate { trials, seed } => {
            let r = validate_analytic(seed, trials);
            println!("seed              {}", r.seed);
            println!("trials            {}", r.trials);
            println!("max_abs_deviation {:.16e} A", r.max_abs_deviation);
            match r.fitted_gain_scale {
                Some(k) => println!("fitted_k_igp_scale {k:.17}"),
                None => println!("fitted_k_igp_scale n/a (no gain imbalance drawn)"),
            }
            println!("frozen_k_igp_scale {:.17}", r.frozen_gain_scale);
            Ok(if r.max_abs_deviation <= 1e-9 { 0 } else { 2 })
        }
        Command::Orders { scenario } => orders(&scenario).map(|()| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
