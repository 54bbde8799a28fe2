use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rplguard::matrix::{load_matrix, metrics_of, run_jobs, Cell, JobResult};
use rplguard::output::{summarize_dir, summary_table, write_matrix_outputs, write_summary_csv};
use rplguard::{config, export};
use rplguard_core::sim::{run_scenario, DefenseMode};

#[derive(Parser)]
#[command(name = "rplguard", version, about = "Sinkhole-resistant RPL simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and export its logs.
    Run {
        /// Scenario file (`key = value`).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        defense: Option<Defense>,
        /// Skip writing the full event trace.
        #[arg(long)]
        no_trace: bool,
    },
    /// Run every cell of a scenario matrix.
    Matrix {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seeds per cell; overrides the file.
        #[arg(long)]
        reps: Option<u32>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Summarize the metric CSVs of a results directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Defense {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

fn run(
    config_path: PathBuf,
    seed: Option<u64>,
    out: PathBuf,
    defense: Option<Defense>,
    no_trace: bool,
) -> anyhow::Result<()> {
    let mut cfg =
        config::load_scenario(&config_path).with_context(|| config_path.display().to_string())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    match defense {
        Some(Defense::On) => cfg.defense = DefenseMode::Guarded,
        Some(Defense::Off) => cfg.defense = DefenseMode::Off,
        None => {}
    }
    cfg.keep_trace = !no_trace;
    let result = run_scenario(&cfg)?;
    export::write_run_artifacts(&out, &result)?;

    let name = config_path
        .file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    let cells = [Cell {
        scenario: name,
        attack_interval: cfg.attack_interval,
        defense: cfg.defense,
        config: cfg.clone(),
    }];
    let metrics = metrics_of(&result);
    write_matrix_outputs(
        &out,
        &cells,
        &[JobResult {
            cell: 0,
            seed: cfg.seed,
            outcome: Ok(metrics),
        }],
    )?;

    let c = result.confusion;
    let pct = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"));
    println!(
        "seed {} defense {}: tp {} fp {} tn {} fn {} unprobed {} dr {} pdr {} digest {:016x}",
        cfg.seed,
        cfg.defense.as_str(),
        c.tp,
        c.fp,
        c.tn,
        c.fn_,
        result.unprobed_attackers.len(),
        pct(metrics.dr),
        pct(metrics.pdr),
        result.trace.digest()
    );
    Ok(())
}

fn matrix(
    path: PathBuf,
    out: PathBuf,
    reps: Option<u32>,
    jobs: Option<usize>,
) -> anyhow::Result<bool> {
    let mut m = load_matrix(&path).with_context(|| path.display().to_string())?;
    if let Some(r) = reps {
        m.reps = r;
    }
    let list = m.jobs();
    let threads =
        jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    eprintln!(
        "{} cells x {} seeds on {threads} threads",
        m.cells.len(),
        m.reps
    );
    let results = run_jobs(&list, threads)?;
    let mut ok = true;
    for r in &results {
        if let Err(e) = &r.outcome {
            ok = false;
            let c = &m.cells[r.cell];
            eprintln!(
                "error: scenario {} interval {} {} seed {}: {e}",
                c.scenario,
                c.attack_interval,
                c.defense.as_str(),
                r.seed
            );
        }
    }
    write_matrix_outputs(&out, &m.cells, &results)?;
    Ok(ok)
}

fn report(input: PathBuf, format: Format) -> anyhow::Result<()> {
    let rows = summarize_dir(&input)?;
    match format {
        Format::Csv => write_summary_csv(std::io::stdout().lock(), &rows)?,
        Format::Table => print!("{}", summary_table(&rows)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let res = match Cli::parse().cmd {
        Cmd::Run {
            config,
            seed,
            out,
            defense,
            no_trace,
        } => run(config, seed, out, defense, no_trace).map(|_| true),
        Cmd::Matrix {
            matrix: m,
            out,
            reps,
            jobs,
        } => matrix(m, out, reps, jobs),
        Cmd::Report { input, format } => report(input, format).map(|_| true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
