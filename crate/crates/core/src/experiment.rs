//! Batch experiment grids: every document pair crossed with the three
//! structure types and a block of consecutive seeds, with per-run records
//! and per-cell summary statistics written to disk.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::render_stylesheet;
use crate::evolution::{run, EvolutionConfig, GenerationStats, RunResult};
use crate::fitness::FitnessReport;
use crate::genome::StructureType;
use crate::xml::{parse_document, Document};

/// Everything worth keeping about one evolution run. Written as JSON, one
/// file per run; `wallclock_secs` is the only field that varies between
/// reruns of the same seed.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub document: String,
    pub input: PathBuf,
    pub target: PathBuf,
    pub structure_type: String,
    pub seed: u64,
    pub success: bool,
    pub generations_used: usize,
    pub best: FitnessReport,
    pub stylesheet: String,
    pub history: Vec<GenerationStats>,
    pub wallclock_secs: f64,
}

impl RunRecord {
    pub fn new(
        document: &str,
        input: &Path,
        target: &Path,
        config: &EvolutionConfig,
        result: &RunResult,
    ) -> RunRecord {
        RunRecord {
            document: document.to_string(),
            input: input.to_path_buf(),
            target: target.to_path_buf(),
            structure_type: config.structure_type.to_string(),
            seed: config.seed,
            success: result.success,
            generations_used: result.generations_used,
            best: result.best_report.clone(),
            stylesheet: render_stylesheet(&result.best.sheet),
            history: result.history.clone(),
            wallclock_secs: result.wallclock.as_secs_f64(),
        }
    }
}

/// Aggregates for one (document, structure type) cell. Generation
/// statistics cover only the successful runs and are absent when no seed
/// succeeded; standard deviations are sample deviations, absent when fewer
/// than two values entered the aggregate.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub document: String,
    pub structure_type: String,
    pub seeds: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub generations_mean: Option<f64>,
    pub generations_sd: Option<f64>,
    pub best_f_mean: f64,
    pub best_f_sd: Option<f64>,
    pub wallclock_mean_s: f64,
    pub wallclock_sd_s: Option<f64>,
}

/// A cell that never ran, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    pub document: String,
    pub structure_type: String,
    pub error: String,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<CellSummary>,
    pub failures: Vec<CellFailure>,
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn sample_sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values).unwrap();
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    Some(var.sqrt())
}

/// Labels each pair by its input file stem, suffixing a position to any
/// stem that repeats.
fn pair_labels(pairs: &[(PathBuf, PathBuf)]) -> Vec<String> {
    let stems: Vec<String> = pairs
        .iter()
        .map(|(input, _)| {
            input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "pair".to_string())
        })
        .collect();
    stems
        .iter()
        .enumerate()
        .map(|(i, stem)| {
            if stems.iter().filter(|s| *s == stem).count() > 1 {
                format!("{stem}_{i}")
            } else {
                stem.clone()
            }
        })
        .collect()
}

/// Collapses one cell's records into its summary row.
pub fn summarize_cell(records: &[&RunRecord]) -> CellSummary {
    let first = records[0];
    let successes: Vec<&&RunRecord> = records.iter().filter(|r| r.success).collect();
    let gens: Vec<f64> = successes
        .iter()
        .map(|r| r.generations_used as f64)
        .collect();
    let best_f: Vec<f64> = records.iter().map(|r| r.best.f).collect();
    let wall: Vec<f64> = records.iter().map(|r| r.wallclock_secs).collect();
    CellSummary {
        document: first.document.clone(),
        structure_type: first.structure_type.clone(),
        seeds: records.len(),
        successes: successes.len(),
        success_rate: successes.len() as f64 / records.len() as f64,
        generations_mean: mean(&gens),
        generations_sd: sample_sd(&gens),
        best_f_mean: mean(&best_f).unwrap(),
        best_f_sd: sample_sd(&best_f),
        wallclock_mean_s: mean(&wall).unwrap(),
        wallclock_sd_s: sample_sd(&wall),
    }
}

/// Runs the full grid. Seeds are `base.seed, base.seed + 1, ...`; cells
/// run in parallel, each run is still internally deterministic. Pairs
/// whose documents fail to load are recorded as failed cells and the rest
/// of the grid proceeds.
pub fn run_grid(
    pairs: &[(PathBuf, PathBuf)],
    base: &EvolutionConfig,
    seeds: usize,
) -> ExperimentOutcome {
    let labels = pair_labels(pairs);
    let mut loaded: Vec<(usize, Document, Document)> = Vec::new();
    let mut failures: Vec<CellFailure> = Vec::new();
    for (i, (input_path, target_path)) in pairs.iter().enumerate() {
        match (load_doc(input_path), load_doc(target_path)) {
            (Ok(input), Ok(target)) => loaded.push((i, input, target)),
            (a, b) => {
                let error = a.err().or(b.err()).unwrap();
                for stype in StructureType::ALL {
                    failures.push(CellFailure {
                        document: labels[i].clone(),
                        structure_type: stype.to_string(),
                        error: error.clone(),
                    });
                }
            }
        }
    }

    let jobs: Vec<(usize, StructureType, u64)> = loaded
        .iter()
        .flat_map(|&(i, _, _)| {
            StructureType::ALL.into_iter().flat_map(move |stype| {
                (0..seeds as u64).map(move |s| (i, stype, base.seed.wrapping_add(s)))
            })
        })
        .collect();

    let mut records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(i, stype, seed)| {
            let (_, input, target) = loaded.iter().find(|(j, _, _)| *j == i).unwrap();
            let mut config = base.clone();
            config.structure_type = stype;
            config.seed = seed;
            let result = run(&config, input, target);
            RunRecord::new(&labels[i], &pairs[i].0, &pairs[i].1, &config, &result)
        })
        .collect();
    records.sort_by_key(|r| {
        (
            r.document.clone(),
            r.structure_type.clone(),
            r.seed,
        )
    });

    let mut summaries = Vec::new();
    for &(i, _, _) in &loaded {
        for stype in StructureType::ALL {
            let cell: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.document == labels[i] && r.structure_type == stype.to_string())
                .collect();
            if !cell.is_empty() {
                summaries.push(summarize_cell(&cell));
            }
        }
    }

    ExperimentOutcome {
        records,
        summaries,
        failures,
    }
}

fn load_doc(path: &Path) -> Result<Document, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_document(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes run records, summary.csv, wallclock.csv and failures.csv under
/// `out_dir` (created if needed). Returns the summary CSV text.
pub fn write_outputs(outcome: &ExperimentOutcome, out_dir: &Path) -> std::io::Result<String> {
    let runs_dir = out_dir.join("runs");
    std::fs::create_dir_all(&runs_dir)?;

    for record in &outcome.records {
        let name = format!(
            "{}_{}_seed{}.json",
            record.document, record.structure_type, record.seed
        );
        let json = serde_json::to_string_pretty(record).expect("record serializes");
        std::fs::write(runs_dir.join(name), json + "\n")?;
    }

    let mut summary = String::from(
        "document,structure_type,seeds,successes,success_rate,generations_mean,generations_sd,best_f_mean,best_f_sd,wallclock_mean_s,wallclock_sd_s\n",
    );
    for s in &outcome.summaries {
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            s.document,
            s.structure_type,
            s.seeds,
            s.successes,
            s.success_rate,
            opt(s.generations_mean),
            opt(s.generations_sd),
            s.best_f_mean,
            opt(s.best_f_sd),
            s.wallclock_mean_s,
            opt(s.wallclock_sd_s),
        ));
    }
    std::fs::write(out_dir.join("summary.csv"), &summary)?;

    let mut wallclock =
        String::from("document,structure_type,seed,wallclock_s,success,generations,best_f\n");
    for r in &outcome.records {
        wallclock.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.document,
            r.structure_type,
            r.seed,
            r.wallclock_secs,
            r.success,
            r.generations_used,
            r.best.f,
        ));
    }
    std::fs::write(out_dir.join("wallclock.csv"), wallclock)?;

    let mut fail = String::from("document,structure_type,error\n");
    for f in &outcome.failures {
        fail.push_str(&format!(
            "{},{},{}\n",
            f.document,
            f.structure_type,
            f.error.replace(',', ";").replace('\n', " "),
        ));
    }
    std::fs::write(out_dir.join("failures.csv"), fail)?;

    Ok(summary)
}

/// Convenience used by tests and the command line: grid + disk artifacts.
pub fn run_experiment(
    pairs: &[(PathBuf, PathBuf)],
    base: &EvolutionConfig,
    seeds: usize,
    out_dir: &Path,
) -> std::io::Result<ExperimentOutcome> {
    let outcome = run_grid(pairs, base, seeds);
    write_outputs(&outcome, out_dir)?;
    Ok(outcome)
}
