//! Scenario matrices and the parallel batch runner.
//!
//! A matrix file uses the scenario syntax plus a few matrix keys. Keys at the
//! top level apply to every section; each `[name]` section is one scenario.
//! `attack_interval` and `defense` may list several values, and each
//! combination becomes a cell. `reps` and `first_seed` pick the seeds.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rayon::prelude::*;
use rplguard_core::metrics::{
    detection_rate, false_negative_rate, false_positive_rate, ConfusionCounts,
};
use rplguard_core::sim::{run_scenario, DefenseMode, RunOutput, ScenarioConfig};

use crate::config::{apply_entry, parse_defense, parse_sections, read, Entry, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scenario: String,
    pub attack_interval: f64,
    pub defense: DefenseMode,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub cells: Vec<Cell>,
    pub reps: u32,
    pub first_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub cell: usize,
    pub seed: u64,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub counts: ConfusionCounts,
    pub unprobed: u32,
    pub dr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub pdr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    pub cell: usize,
    pub seed: u64,
    pub outcome: Result<RunMetrics, String>,
}

#[derive(Debug, Clone, Default)]
struct Knobs {
    intervals: Option<(usize, Vec<f64>)>,
    defenses: Option<Vec<DefenseMode>>,
}

fn list<T>(e: &Entry, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ParseError> {
    let v: Option<Vec<T>> = e.value.split(',').map(|s| f(s.trim())).collect();
    match v {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(ParseError::BadValue {
            line: e.line,
            key: e.key.clone(),
            msg: "bad list".into(),
        }),
    }
}

fn single<T: std::str::FromStr>(e: &Entry) -> Result<T, ParseError> {
    e.value.parse().map_err(|_| ParseError::BadValue {
        line: e.line,
        key: e.key.clone(),
        msg: "not a number".into(),
    })
}

/// Applies section entries; list-valued keys are kept aside in `knobs`.
fn apply_all(
    cfg: &mut ScenarioConfig,
    knobs: &mut Knobs,
    entries: &[Entry],
    reps: &mut u32,
    first_seed: &mut u64,
    top: bool,
) -> Result<(), ParseError> {
    let presets = entries.iter().filter(|e| e.key == "preset");
    for e in presets.chain(entries.iter().filter(|e| e.key != "preset")) {
        match e.key.as_str() {
            "attack_interval" => knobs.intervals = Some((e.line, list(e, |s| s.parse().ok())?)),
            "defense" | "defense_mode" => knobs.defenses = Some(list(e, parse_defense)?),
            "reps" | "first_seed" if !top => {
                return Err(ParseError::Syntax {
                    line: e.line,
                    msg: format!("`{}` is top-level only", e.key),
                })
            }
            "reps" => *reps = single(e)?,
            "first_seed" => *first_seed = single(e)?,
            "seed" => {
                return Err(ParseError::Syntax {
                    line: e.line,
                    msg: "use `first_seed` in a matrix".into(),
                });
            }
            _ => {
                if !apply_entry(cfg, e)? {
                    return Err(ParseError::UnknownKey {
                        line: e.line,
                        key: e.key.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

pub fn parse_matrix(text: &str) -> Result<Matrix, ParseError> {
    let sections = parse_sections(text)?;
    let mut base = ScenarioConfig::default();
    let mut base_knobs = Knobs::default();
    let mut reps = 1;
    let mut first_seed = 1;
    apply_all(
        &mut base,
        &mut base_knobs,
        &sections[0].entries,
        &mut reps,
        &mut first_seed,
        true,
    )?;
    if sections.len() == 1 {
        return Err(ParseError::Syntax {
            line: 1,
            msg: "matrix has no scenario sections".into(),
        });
    }
    let mut cells = Vec::new();
    for s in &sections[1..] {
        let mut cfg = base.clone();
        let mut knobs = base_knobs.clone();
        apply_all(
            &mut cfg,
            &mut knobs,
            &s.entries,
            &mut reps,
            &mut first_seed,
            false,
        )?;
        let name = s.name.clone().expect("named section");
        let intervals = knobs
            .intervals
            .map(|(_, v)| v)
            .unwrap_or_else(|| vec![cfg.attack_interval]);
        let defenses = knobs
            .defenses
            .unwrap_or_else(|| vec![DefenseMode::Guarded, DefenseMode::Off]);
        for &iv in &intervals {
            for &d in &defenses {
                let config = ScenarioConfig {
                    attack_interval: iv,
                    defense: d,
                    ..cfg.clone()
                };
                config.validate()?;
                cells.push(Cell {
                    scenario: name.clone(),
                    attack_interval: iv,
                    defense: d,
                    config,
                });
            }
        }
    }
    Ok(Matrix {
        cells,
        reps,
        first_seed,
    })
}

pub fn load_matrix(path: &Path) -> Result<Matrix, ParseError> {
    parse_matrix(&read(path)?)
}

impl Matrix {
    /// One job per cell and seed, in (cell, seed) order.
    pub fn jobs(&self) -> Vec<Job> {
        let mut out = Vec::with_capacity(self.cells.len() * self.reps as usize);
        for (i, c) in self.cells.iter().enumerate() {
            for r in 0..u64::from(self.reps) {
                let seed = self.first_seed + r;
                out.push(Job {
                    cell: i,
                    seed,
                    config: ScenarioConfig {
                        seed,
                        ..c.config.clone()
                    },
                });
            }
        }
        out
    }
}

pub fn run_one(cfg: &ScenarioConfig) -> Result<RunMetrics, String> {
    let out = catch_unwind(AssertUnwindSafe(|| run_scenario(cfg)))
        .map_err(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_default();
            format!("panicked: {msg}")
        })?
        .map_err(|e| e.to_string())?;
    Ok(metrics_of(&out))
}

pub fn metrics_of(out: &RunOutput) -> RunMetrics {
    let c = out.confusion;
    RunMetrics {
        counts: c,
        unprobed: out.unprobed_attackers.len() as u32,
        dr: detection_rate(&c),
        fpr: false_positive_rate(&c),
        fnr: false_negative_rate(&c),
        pdr: out.delivery.pdr(),
    }
}

/// Runs every job on at most `threads` workers. Results come back in job order.
pub fn run_jobs(
    jobs: &[Job],
    threads: usize,
) -> Result<Vec<JobResult>, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|j| JobResult {
                cell: j.cell,
                seed: j.seed,
                outcome: run_one(&j.config),
            })
            .collect()
    }))
}
