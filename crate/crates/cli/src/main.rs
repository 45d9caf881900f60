//! `vlmc`: sample, estimate, analyze and run experiments from the shell.
//!
//! Exit codes: 0 on success, 2 when a mathematical precondition fails,
//! 3 for invalid input.

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use vlmc::analysis::{Analyzer, RecoveryQuery, ReportOptions};
use vlmc::counts::CountTrie;
use vlmc::estimator::{estimate, EstimationParams};
use vlmc::experiment::{run_recovery_experiment, ExperimentConfig};
use vlmc::sampler::{read_sidecar, Sampler, MIN_BURN_IN};
use vlmc::{Alphabet, Model, SamplePath};

#[derive(Parser)]
#[command(name = "vlmc", version, about = "Variable length Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample path from a model.
    Sample(SampleArgs),
    /// Estimate a context tree from a sample.
    Estimate(EstimateArgs),
    /// Print the theoretical quantities of a model as JSON.
    Analyze(AnalyzeArgs),
    /// Run a recovery experiment and write its CSV.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Ignored for finite models, which start from their stationary law.
    #[arg(long = "burn-in", default_value_t = MIN_BURN_IN)]
    burn_in: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    depth: usize,
    /// Truncation level for the comparison with --truth.
    #[arg(long = "K")]
    level: Option<usize>,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Symbols in order, e.g. "01". Defaults to the truth model's alphabet,
    /// then the sample's sidecar, then the sorted distinct symbols.
    #[arg(long)]
    alphabet: Option<String>,
    /// Write "word,count" lines to stderr.
    #[arg(long = "dump-counts")]
    dump_counts: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 20)]
    kmax: usize,
    /// Largest truncation level for the minimal depths.
    #[arg(long = "K", default_value_t = 1)]
    level: usize,
    /// Evaluate the recovery bound at this sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Threshold for the bound; defaults to D_d / 2.
    #[arg(long, requires = "n")]
    delta: Option<f64>,
    /// Depth for the bound; defaults to the minimal depth at --K.
    #[arg(long, requires = "n")]
    depth: Option<usize>,
    #[arg(long = "rho-len", default_value_t = 100)]
    rho_len: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configuration's output path; stdout if neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Never changes the output.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let precondition = e
                .downcast_ref::<vlmc::Error>()
                .is_some_and(vlmc::Error::is_precondition);
            ExitCode::from(if precondition { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample(a) => sample(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Analyze(a) => analyze(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn load_model(path: &Path) -> Result<Model> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Model::from_json(&text)?)
}

fn sample(a: SampleArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let path = Sampler::new(&model)?.sample(a.n, a.seed, a.burn_in)?;
    path.write(&a.out)?;
    Ok(())
}

fn resolve_alphabet(a: &EstimateArgs, truth: Option<&Model>, text: &str) -> Result<Alphabet> {
    if let Some(s) = &a.alphabet {
        return Ok(Alphabet::new(s.chars())?);
    }
    if let Some(m) = truth {
        return Ok(m.alphabet().clone());
    }
    if let Some(p) = read_sidecar(&a.sample)? {
        return Ok(Model::from_spec(&p.model)?.alphabet().clone());
    }
    let distinct: BTreeSet<char> = text.trim_end().chars().collect();
    Ok(Alphabet::new(distinct)?)
}

fn estimate_cmd(a: EstimateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.sample)
        .with_context(|| format!("reading {}", a.sample.display()))?;
    let truth = a.truth.as_deref().map(load_model).transpose()?;
    let alphabet = resolve_alphabet(&a, truth.as_ref(), &text)?;
    let sample = SamplePath::parse(alphabet, &text)?;
    let trie = CountTrie::build(sample.alphabet(), sample.symbols(), a.depth)?;
    if a.dump_counts {
        let mut err = std::io::stderr().lock();
        for (w, c) in trie.dump() {
            writeln!(err, "{},{c}", sample.alphabet().render(w.as_slice()))?;
        }
    }
    let mut params = EstimationParams::new(a.delta, a.depth);
    params.level = a.level;
    let result = estimate(&trie, params)?;
    let render = |w: &vlmc::Word| sample.alphabet().render(w.as_slice());
    let matched = match (&truth, a.level) {
        (Some(m), Some(k)) => {
            if k == 0 {
                return Err(vlmc::Error::InvalidConfig("K must be at least 1".into()).into());
            }
            Some(result.matches_at(&m.truncation(k), k))
        }
        _ => None,
    };
    let out = json!({
        "alphabet": sample.alphabet().symbols().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "n": sample.len(),
        "delta": a.delta,
        "depth": a.depth,
        "K": a.level,
        "contexts": result.rows.iter().map(|(w, p)| json!({"w": render(w), "p": p})).collect::<Vec<_>>(),
        "match_at_K": matched,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    if a.level == 0 {
        return Err(vlmc::Error::InvalidConfig("K must be at least 1".into()).into());
    }
    let model = load_model(&a.model)?;
    let analyzer = Analyzer::new(&model)?;
    let opts = ReportOptions {
        k_max: a.kmax,
        level: a.level,
        rho_len: a.rho_len,
        recovery: a.n.map(|n| RecoveryQuery {
            n,
            depth: a.depth,
            delta: a.delta,
        }),
    };
    let report = analyzer.report(&opts)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let config = ExperimentConfig::load(&a.config)?;
    let exp = config.resolve()?;
    let curve = match a.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()?
            .install(|| run_recovery_experiment(&exp))?,
        None => run_recovery_experiment(&exp)?,
    };
    let csv = curve.to_csv();
    match a.out.or(config.output) {
        Some(p) => std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}
