use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use drsim::fmt::sig9;
use drsim::harness::{reference_horizon, run_comparison, run_scenario, sweep, train_on_study, SweepAxis};
use drsim::{check_emax_bound, ComparisonStudy, Scenario};
use log::info;

/// Dead-reckoning testbed: scenario runs, predictor training and studies.
#[derive(Parser)]
#[command(name = "drsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its coherence report.
    Run {
        scenario: PathBuf,
        /// Write report.csv, series.csv, events.csv and truth.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a predictor bundle on a study's training ticks.
    Train {
        study: PathBuf,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Horizon study: mean error per predictor and horizon.
    Compare {
        study: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a scenario across values of one parameter.
    Sweep {
        scenario: PathBuf,
        /// th_pos, base_delay or loss
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. 0.1,0.2,0.5
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const QOS_FAIL: u8 = 2;

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(path: &Path, out: Option<&Path>) -> Result<u8> {
    let sc = Scenario::<f64>::load(path).with_context(|| format!("loading scenario {}", path.display()))?;
    let run = run_scenario(&sc).with_context(|| format!("running {}", sc.name))?;
    let ab = sc.trajectory.acceleration_bound(sc.dr.order);
    let emax = check_emax_bound(&run.report, &run.series, &sc.channel, &sc.dr, ab);
    println!("scenario             : {}", sc.name);
    print!("{}", run.report.to_text());
    println!(
        "e_max bound          : {} m ({})",
        sig9(emax.bound),
        if emax.satisfied { "holds" } else { "exceeded" }
    );
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir.join("report.csv"), &run.report.to_csv())?;
        write(&dir.join("series.csv"), &run.series.to_csv())?;
        write(&dir.join("events.csv"), &run.events_csv())?;
        write(&dir.join("truth.csv"), &run.truth_csv())?;
        info!("wrote CSVs to {}", dir.display());
    }
    Ok(if run.report.verdict.pass { 0 } else { QOS_FAIL })
}

fn load_study(path: &Path) -> Result<ComparisonStudy<f64>> {
    ComparisonStudy::load(path).with_context(|| format!("loading study {}", path.display()))
}

fn cmd_train(path: &Path, save: Option<&Path>) -> Result<u8> {
    let study = load_study(path)?;
    let h = reference_horizon(&study);
    let trained = train_on_study(&study, h).context("training")?;
    println!("reference horizon: {h} ticks ({} s)", sig9(trained.predictor.horizon));
    println!("axis,initial_loss,final_loss,epochs");
    for axis in 0..3 {
        let losses = &trained.losses[axis];
        let last = losses.last().copied().unwrap_or(trained.initial_loss[axis]);
        println!("{},{},{},{}", ["x", "y", "z"][axis], sig9(trained.initial_loss[axis]), sig9(last), losses.len());
    }
    if let Some(p) = save {
        trained.predictor.save(p).with_context(|| format!("saving {}", p.display()))?;
        info!("saved predictor to {}", p.display());
    }
    Ok(0)
}

fn cmd_compare(path: &Path, out: Option<&Path>) -> Result<u8> {
    let study = load_study(path)?;
    let table = run_comparison(&study).context("comparison")?;
    emit(out, &table.to_csv())?;
    Ok(0)
}

fn cmd_sweep(path: &Path, axis: &str, values: &[f64], out: Option<&Path>) -> Result<u8> {
    let axis: SweepAxis = axis.parse()?;
    let sc = Scenario::<f64>::load(path).with_context(|| format!("loading scenario {}", path.display()))?;
    let result = sweep(&sc, axis, values)?;
    emit(out, &result.to_csv())?;
    for row in &result.rows {
        if let Err(e) = &row.outcome {
            eprintln!("{} = {}: {e}", axis.name(), sig9(row.value));
        }
    }
    if result.failures() > 0 {
        bail!("{} of {} sweep rows failed", result.failures(), result.rows.len());
    }
    let all_pass = result.rows.iter().all(|r| r.outcome.as_ref().is_ok_and(|rep| rep.verdict.pass));
    Ok(if all_pass { 0 } else { QOS_FAIL })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, out } => cmd_run(scenario, out.as_deref()),
        Command::Train { study, save } => cmd_train(study, save.as_deref()),
        Command::Compare { study, out } => cmd_compare(study, out.as_deref()),
        Command::Sweep { scenario, axis, values, out } => cmd_sweep(scenario, axis, values, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
