//! Command-line front end: thin argument handling over
//! [`geosample::pipeline`].
//!
//! Exit codes: 0 success, 1 input or contract error, 2 gated refusal
//! (the LISA step without a significant global test).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geosample::autocorr::Method;
use geosample::pipeline::{
    run_eval, run_gistar, run_lisa, run_moran, run_sample, run_select_regions, run_taxonomy,
    MatcherChoice, PipelineConfig, PipelineError, TaxonomyAction,
};

#[derive(Parser)]
#[command(
    name = "geosample",
    version,
    about = "Geo-aware dataset construction: spatial analysis, stratified sampling, taxonomy management, retrieval evaluation"
)]
struct Cli {
    /// Path to the flat JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for all report files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Master seed overriding the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,

    /// Significance level override.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Permutation count override.
    #[arg(long, global = true)]
    permutations: Option<usize>,

    /// Significance method override.
    #[arg(long, global = true, value_parser = parse_method)]
    method: Option<Method>,

    #[command(subcommand)]
    command: Command,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "analytical" => Ok(Method::Analytical),
        "permutation" => Ok(Method::Permutation),
        other => Err(format!("unknown method {other:?} (analytical | permutation)")),
    }
}

fn parse_matcher(s: &str) -> Result<MatcherChoice, String> {
    match s {
        "dictionary" => Ok(MatcherChoice::Dictionary),
        "remote" => Ok(MatcherChoice::Remote),
        other => Err(format!("unknown matcher {other:?} (dictionary | remote)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Global Moran's I over the region-aggregated raster.
    Moran,
    /// Local Moran's I with cluster typing; refuses to run when the
    /// global test does not reject randomness.
    Lisa {
        /// Compute even when the global test looks random.
        #[arg(long)]
        force: bool,
    },
    /// Getis-Ord Gi* hot/cold spot statistics.
    Gistar,
    /// Apply the selection rule over clusters and hotspots.
    SelectRegions,
    /// Allocate and place sample points over the selected regions.
    Sample(SampleArgs),
    /// Manage the label taxonomy.
    Taxonomy {
        #[command(subcommand)]
        action: TaxonomyCommand,
    },
    /// Score a ranked retrieval run against hierarchical ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Total number of sample points to allocate.
    #[arg(long)]
    total_samples: Option<u64>,
    /// Reduce infeasible per-class demands to the feasible maximum
    /// instead of failing.
    #[arg(long)]
    clamp: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Evaluation label level (2 or 3).
    #[arg(long)]
    level: Option<u8>,
    /// Comma-separated cutoffs, e.g. 5,10,20,50,100.
    #[arg(long, value_delimiter = ',')]
    cutoffs: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum TaxonomyCommand {
    /// Place a novel label by the top-down strategy.
    Add {
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "")]
        description: String,
        #[arg(long, value_parser = parse_matcher)]
        matcher: Option<MatcherChoice>,
        /// Remote matcher endpoint URL.
        #[arg(long)]
        endpoint: Option<String>,
    },
    /// Consolidate duplicate labels.
    Merge {
        #[arg(long, value_parser = parse_matcher)]
        matcher: Option<MatcherChoice>,
        #[arg(long)]
        endpoint: Option<String>,
    },
    /// Load per-image label counts and induce the occupied sub-tree.
    Map {
        /// CSV of image_id,label_name rows.
        #[arg(long)]
        counts: Option<PathBuf>,
    },
    /// Write the canonical taxonomy export.
    Export,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(alpha) = cli.alpha {
        config.alpha = alpha;
    }
    if let Some(permutations) = cli.permutations {
        config.permutations = permutations;
    }
    if let Some(method) = cli.method {
        config.method = method;
    }
    Ok(config)
}

fn dispatch(cli: &Cli) -> Result<Vec<PathBuf>, PipelineError> {
    let mut config = load_config(cli)?;
    config.validate()?; // flag overrides must stay inside preconditions too
    let out_dir = cli.out_dir.clone();
    match &cli.command {
        Command::Moran => run_moran(&config, &out_dir),
        Command::Lisa { force } => run_lisa(&config, &out_dir, *force),
        Command::Gistar => run_gistar(&config, &out_dir),
        Command::SelectRegions => run_select_regions(&config, &out_dir),
        Command::Sample(args) => {
            if let Some(total) = args.total_samples {
                config.total_samples = total;
            }
            if args.clamp {
                config.clamp = true;
            }
            run_sample(&config, &out_dir)
        }
        Command::Taxonomy { action } => {
            let action = match action {
                TaxonomyCommand::Add {
                    name,
                    description,
                    matcher,
                    endpoint,
                } => {
                    if let Some(m) = matcher {
                        config.matcher = *m;
                    }
                    if endpoint.is_some() {
                        config.endpoint = endpoint.clone();
                    }
                    TaxonomyAction::Add {
                        name: name.clone(),
                        description: description.clone(),
                    }
                }
                TaxonomyCommand::Merge { matcher, endpoint } => {
                    if let Some(m) = matcher {
                        config.matcher = *m;
                    }
                    if endpoint.is_some() {
                        config.endpoint = endpoint.clone();
                    }
                    TaxonomyAction::Merge
                }
                TaxonomyCommand::Map { counts } => {
                    if counts.is_some() {
                        config.label_counts = counts.clone();
                        config.check_paths()?;
                    }
                    TaxonomyAction::Map
                }
                TaxonomyCommand::Export => TaxonomyAction::Export,
            };
            run_taxonomy(&config, &out_dir, action)
        }
        Command::Eval(args) => {
            if let Some(level) = args.level {
                config.level = level;
            }
            if let Some(cutoffs) = &args.cutoffs {
                config.cutoffs = cutoffs.clone();
            }
            run_eval(&config, &out_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(written) => {
            if !cli.quiet {
                for path in written {
                    println!("wrote {}", path.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let kind = match &err {
                PipelineError::Gated(_) => "gated",
                PipelineError::FileNotFound(_) => "file not found",
                PipelineError::Input(_) => "input",
            };
            let message = match &err {
                PipelineError::FileNotFound(path) => path.clone(),
                PipelineError::Gated(msg) | PipelineError::Input(msg) => msg.clone(),
            };
            eprintln!("error: {kind}: {message}");
            match err {
                PipelineError::Gated(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
