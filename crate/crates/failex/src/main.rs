use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use failex::config::{resolve_alpha, resolve_seed, ConfigFile, ProcessEnv, DEFAULT_EPSILON, DEFAULT_FOLDS};
use failex::error::{Error, Result};
use failex::explanation::{describe_assignment, explanation_json, read_lexicon};
use failex::io::{check_input, check_output, write_dataset_file, write_text, RawTable};
use failex::pipeline::{self, EvaluateOptions, LearnOptions};
use failex::report::{read_empirical, report_json, report_summary};
use failex::sim::generate_parallel;
use failex::Model;
use failex_core::{Error as CoreError, Lexicon};

/// Learn causal Bayesian networks from randomized trials and explain
/// failures by contrast with the nearest predicted success.
#[derive(Parser)]
#[command(name = "failex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate randomized cube-stacking trials as CSV.
    Simulate {
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// JSON config file (simulator parameters, seed).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Discretize a dataset, learn the graph and fit the tables.
    Learn {
        #[arg(long)]
        data: PathBuf,
        /// Bins per continuous variable, e.g. xOff=5,yOff=5,dropOff=7.
        #[arg(long)]
        bins: String,
        /// Declared range of a binned variable, NAME=LO:HI; repeatable.
        /// Without it the observed range is used.
        #[arg(long = "range")]
        ranges: Vec<String>,
        #[arg(long)]
        outcome: String,
        /// Outcome labels that count as success, comma separated.
        #[arg(long, value_delimiter = ',')]
        success: Vec<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Recorded in the model's fit metadata.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Explain why a parametrization fails.
    Explain {
        #[arg(long)]
        model: PathBuf,
        /// Failure value, NAME=VALUE; repeatable.
        #[arg(long = "set")]
        settings: Vec<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Also print the full result as JSON.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Cross-validate, score agreement and check monotonicity.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        folds: Option<usize>,
        /// CSV with columns <parents...>,successes,trials.
        #[arg(long)]
        empirical: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON report instead of the summary.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn check_optional_input(path: Option<&Path>) -> Result<()> {
    path.map_or(Ok(()), check_input)
}

fn run(command: Command) -> Result<()> {
    let env = ProcessEnv;
    match command {
        Command::Simulate { samples, seed, out, config } => {
            check_optional_input(config.as_deref())?;
            check_output(&out)?;
            let file = ConfigFile::load(config.as_deref())?;
            let mut cfg = file.stacking();
            cfg.seed = resolve_seed(seed, &file, &env)?.unwrap_or(0);
            let ds = generate_parallel(&cfg, samples, [5, 5, 7])?;
            write_dataset_file(&out, &ds)
        }
        Command::Learn { data, bins, ranges, outcome, success, alpha, seed, out, config } => {
            check_input(&data)?;
            check_optional_input(config.as_deref())?;
            check_output(&out)?;
            let file = ConfigFile::load(config.as_deref())?;
            if success.is_empty() {
                return Err(Error::input("--success needs at least one label"));
            }
            let opts = LearnOptions {
                bins: pipeline::parse_bins(&bins)?,
                ranges: ranges.iter().map(|r| pipeline::parse_range(r)).collect::<Result<_>>()?,
                outcome,
                success,
                alpha: resolve_alpha(alpha, &file, &env)?,
                seed: resolve_seed(seed, &file, &env)?,
            };
            let raw = RawTable::read(&data)?;
            let learned = pipeline::learn(&raw, &opts)?;
            learned.model.write(&out)?;
            let dag = learned.model.net.dag();
            println!("learned {} arcs:", dag.arc_count());
            for (a, b) in dag.arcs() {
                println!("  {a} -> {b}");
            }
            for (node, zero, rows) in &learned.zero_support {
                if *zero > 0 {
                    println!("zero-support: {node} has {zero} of {rows} parent configurations unobserved");
                }
            }
            Ok(())
        }
        Command::Explain { model, settings, epsilon, lexicon, json, config } => {
            check_input(&model)?;
            check_optional_input(lexicon.as_deref())?;
            check_optional_input(config.as_deref())?;
            let file = ConfigFile::load(config.as_deref())?;
            let epsilon = epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON);
            let model = Model::read(&model)?;
            let lexicon = match &lexicon {
                Some(p) => read_lexicon(p)?,
                None => Lexicon::stacking(),
            };
            let settings = settings.iter().map(|s| pipeline::parse_setting(s)).collect::<Result<Vec<_>>>()?;
            let explained = match pipeline::explain(&model, &settings, epsilon, &lexicon) {
                Err(Error::Core(e @ CoreError::NoSolution { .. })) => {
                    if let CoreError::NoSolution { best, best_p, best_depth, .. } = &e {
                        let best = describe_assignment(&model.net, best)?;
                        eprintln!("best found: {best} with success probability {best_p} at depth {best_depth}");
                    }
                    return Err(e.into());
                }
                other => other?,
            };
            println!("{}", explained.text);
            if json {
                let doc = explanation_json(&model.net, &explained.result, &explained.text)?;
                println!("{}", serde_json::to_string_pretty(&doc).expect("explanation serializes"));
            }
            if explained.result.solution_zero_support {
                eprintln!("warning: the solution's parent configuration was never observed during fitting");
            }
            Ok(())
        }
        Command::Evaluate { model, data, folds, empirical, alpha, seed, out, json, config } => {
            check_input(&model)?;
            check_input(&data)?;
            check_optional_input(empirical.as_deref())?;
            check_optional_input(config.as_deref())?;
            if let Some(o) = &out {
                check_output(o)?;
            }
            let file = ConfigFile::load(config.as_deref())?;
            let opts = EvaluateOptions {
                folds: folds.or(file.folds).unwrap_or(DEFAULT_FOLDS),
                alpha: resolve_alpha(alpha, &file, &env)?,
                seed: resolve_seed(seed, &file, &env)?.unwrap_or(0),
            };
            if opts.folds < 2 {
                return Err(Error::input(format!("--folds must be at least 2, got {}", opts.folds)));
            }
            let model = Model::read(&model)?;
            let ds = RawTable::read(&data)?.to_dataset(pipeline::model_specs(&model))?;
            let table = match &empirical {
                Some(p) => Some(read_empirical(&RawTable::read(p)?, &model.net)?),
                None => None,
            };
            let evaluated = pipeline::evaluate(&model, &ds, table.as_ref(), &opts)?;
            let text = report_json(&evaluated.report, evaluated.agreement_cells);
            if let Some(o) = &out {
                write_text(o, &text)?;
            }
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            let shown = if json { text } else { report_summary(&evaluated.report, evaluated.agreement_cells) };
            w.write_all(shown.as_bytes()).and_then(|_| w.flush()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}
