use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use evoxsl::config::{load_config, RunConfig};
use evoxsl::experiment::{run_experiment, RunRecord};
use evoxsl::genome::StructureType;
use evoxsl::{evaluate_sheet, parse_document, parse_stylesheet, render_stylesheet, transform};

#[derive(Parser)]
#[command(
    name = "evoxsl",
    version,
    about = "Evolves XSLT stylesheets from a single input/target XML example pair"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a stylesheet that transforms INPUT into TARGET
    Evolve {
        input: PathBuf,
        target: PathBuf,
        /// key=value settings file (all keys optional)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Random seed, overriding the config file
        #[arg(long)]
        seed: Option<u64>,
        /// Stylesheet structure type, overriding the config file
        #[arg(long = "type", value_name = "TYPE")]
        structure_type: Option<StructureType>,
        /// Where to write the best stylesheet (a JSON run record lands beside it)
        #[arg(long, default_value = "best.xsl")]
        out: PathBuf,
    },
    /// Transform INPUT with SHEET and print the canonical output lines
    Apply { sheet: PathBuf, input: PathBuf },
    /// Report the fitness of SHEET for the INPUT -> TARGET transformation
    Score {
        sheet: PathBuf,
        input: PathBuf,
        target: PathBuf,
    },
    /// Run every configured document pair x all three types x a seed block
    Experiment {
        /// key=value settings file; must name at least one `pair`
        #[arg(long)]
        config: PathBuf,
        /// Number of consecutive seeds per cell
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Base seed, overriding the config file
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for records and CSV summaries
        #[arg(long, default_value = "experiment")]
        out: PathBuf,
    },
}

fn main() {
    if let Err(message) = dispatch(Cli::parse().command) {
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}

fn dispatch(command: Command) -> Result<(), String> {
    match command {
        Command::Evolve {
            input,
            target,
            config,
            seed,
            structure_type,
            out,
        } => cmd_evolve(&input, &target, config.as_deref(), seed, structure_type, &out),
        Command::Apply { sheet, input } => cmd_apply(&sheet, &input),
        Command::Score {
            sheet,
            input,
            target,
        } => cmd_score(&sheet, &input, &target),
        Command::Experiment {
            config,
            seeds,
            seed,
            out,
        } => cmd_experiment(&config, seeds, seed, &out),
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn load_doc(path: &Path) -> Result<evoxsl::Document, String> {
    parse_document(&read_file(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_sheet(path: &Path) -> Result<evoxsl::Stylesheet, String> {
    parse_stylesheet(&read_file(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn base_config(path: Option<&Path>) -> Result<RunConfig, String> {
    match path {
        Some(p) => load_config(p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn cmd_evolve(
    input: &Path,
    target: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    structure_type: Option<StructureType>,
    out: &Path,
) -> Result<(), String> {
    let mut run_config = base_config(config)?;
    if let Some(seed) = seed {
        run_config.evolution.seed = seed;
    }
    if let Some(stype) = structure_type {
        run_config.evolution.structure_type = stype;
    }
    let input_doc = load_doc(input)?;
    let target_doc = load_doc(target)?;

    let result = evoxsl::run(&run_config.evolution, &input_doc, &target_doc);

    let sheet_text = render_stylesheet(&result.best.sheet);
    std::fs::write(out, &sheet_text).map_err(|e| format!("cannot write {}: {e}", out.display()))?;

    let label = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_string());
    let record = RunRecord::new(&label, input, target, &run_config.evolution, &result);
    let record_path = out.with_extension("json");
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    std::fs::write(&record_path, json + "\n")
        .map_err(|e| format!("cannot write {}: {e}", record_path.display()))?;

    println!(
        "success={} generations={} f={} out={}",
        result.success,
        result.generations_used,
        result.best_report.f,
        out.display()
    );
    Ok(())
}

fn cmd_apply(sheet: &Path, input: &Path) -> Result<(), String> {
    let sheet = load_sheet(sheet)?;
    let input_doc = load_doc(input)?;
    let output = transform(&sheet, &input_doc).map_err(|e| format!("transform failed: {e}"))?;
    print!("{}", output.canonical_string());
    Ok(())
}

fn cmd_score(sheet: &Path, input: &Path, target: &Path) -> Result<(), String> {
    let sheet = load_sheet(sheet)?;
    let input_doc = load_doc(input)?;
    let target_doc = load_doc(target)?;
    let report = evaluate_sheet(&sheet, &input_doc, &target_doc.canonical_lines());
    println!("d = {}", report.d);
    println!("l1 = {}", report.l1);
    println!("l2 = {}", report.l2);
    println!("s = {}", report.s);
    println!("f = {}", report.f);
    println!("solution = {}", report.solution);
    Ok(())
}

fn cmd_experiment(
    config: &Path,
    seeds: usize,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), String> {
    if seeds == 0 {
        return Err("seeds must be at least 1".to_string());
    }
    let mut run_config = base_config(Some(config))?;
    if let Some(seed) = seed {
        run_config.evolution.seed = seed;
    }
    if run_config.pairs.is_empty() {
        return Err(format!(
            "{}: experiment wants at least one `pair = input.xml target.xml` line",
            config.display()
        ));
    }

    let outcome = run_experiment(&run_config.pairs, &run_config.evolution, seeds, out)
        .map_err(|e| format!("cannot write outputs under {}: {e}", out.display()))?;

    for failure in &outcome.failures {
        eprintln!(
            "cell {}/{} failed: {}",
            failure.document, failure.structure_type, failure.error
        );
    }
    print!("{}", read_file(&out.join("summary.csv"))?);
    println!(
        "{} runs, {} failed cells; records under {}",
        outcome.records.len(),
        outcome.failures.len(),
        out.join("runs").display()
    );
    Ok(())
}
