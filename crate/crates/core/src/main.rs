use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use advint::pipeline::{Outcome, Pipeline, PipelineConfig, Stage};
use advint::synth::{generate, write_scenario, ScenarioConfig};
use advint::toxicity::ScorerKind;
use advint::{Error, Result};

/// Directed adversarial interaction analysis for political candidates.
#[derive(Parser)]
#[command(name = "advint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand)]
enum Command {
    /// Read the corpus; write attention.csv and ingest.json.
    Ingest,
    /// Infer party preference; write party_labels.jsonl.
    InferParty,
    /// Score replies and mentions; write toxicity_scores.jsonl.
    Score,
    /// Attribute toxic interactions; write dpp_labels.jsonl and summary.csv.
    Dpp,
    /// Induce per-candidate adversarial lexicons; write adversary_scores.csv.
    Lexicon,
    /// Fit the regression; write regression_report.csv.
    Regress,
    /// Generate a synthetic corpus with ground truth into --out.
    Synth {
        /// Scenario TOML file; defaults apply to unset keys.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Run every stage in dependency order, skipping up-to-date stages.
    All,
}

#[derive(Args)]
struct Options {
    /// Pipeline config TOML; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory with tweets.jsonl, users.jsonl, follows.jsonl, roster.csv.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    tweets: Option<PathBuf>,
    #[arg(long, global = true)]
    users: Option<PathBuf>,
    #[arg(long, global = true)]
    follows: Option<PathBuf>,
    #[arg(long, global = true)]
    roster: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    rng_seed: Option<u64>,
    /// Rerun stages even when current, and accept stale upstream artifacts.
    #[arg(long, global = true)]
    force: bool,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[arg(long, global = true)]
    tiers: Option<usize>,

    /// Hashtag lexicon JSON.
    #[arg(long, global = true)]
    hashtags: Option<PathBuf>,
    #[arg(long, global = true)]
    relatedness: Option<f64>,
    #[arg(long, global = true)]
    max_rounds: Option<usize>,
    /// Use the hashtag lists as given, without expansion from profiles.
    #[arg(long, global = true)]
    no_hashtag_bootstrap: bool,

    #[arg(long, global = true, value_parser = ["lexicon", "remote"])]
    scorer: Option<String>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Term-weight JSON for the lexicon scorer.
    #[arg(long, global = true)]
    toxicity_lexicon: Option<PathBuf>,
    /// Scoring service URL for the remote scorer.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    cache_path: Option<PathBuf>,
    #[arg(long, global = true)]
    concurrency: Option<usize>,
    #[arg(long, global = true)]
    timeout_secs: Option<f64>,

    #[arg(long, global = true)]
    min_interactions: Option<u64>,
    #[arg(long, global = true)]
    min_users: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    seed_fraction: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Rows in top_terms.csv.
    #[arg(long, global = true)]
    top: Option<usize>,
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,

    #[arg(long, global = true)]
    trim: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Options {
    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::read(p)?,
            None => PipelineConfig::default(),
        };
        set(&mut c.input.data_dir, self.data.clone());
        c.input.tweets = self.tweets.clone().or(c.input.tweets);
        c.input.users = self.users.clone().or(c.input.users);
        c.input.follows = self.follows.clone().or(c.input.follows);
        c.input.roster = self.roster.clone().or(c.input.roster);
        set(&mut c.out_dir, self.out.clone());
        set(&mut c.workers, self.workers);
        set(&mut c.rng_seed, self.rng_seed);
        set(&mut c.ingest.tiers, self.tiers);

        c.party.hashtags = self.hashtags.clone().or(c.party.hashtags);
        set(&mut c.party.params.relatedness_threshold, self.relatedness);
        set(&mut c.party.params.max_rounds, self.max_rounds);
        if self.no_hashtag_bootstrap {
            c.party.params.bootstrap = false;
        }

        if let Some(s) = &self.scorer {
            c.toxicity.scorer = if s == "remote" { ScorerKind::Remote } else { ScorerKind::Lexicon };
        }
        set(&mut c.toxicity.threshold, self.threshold);
        c.toxicity.lexicon = self.toxicity_lexicon.clone().or(c.toxicity.lexicon);
        set(&mut c.toxicity.remote.endpoint, self.endpoint.clone());
        c.toxicity.remote.cache_path = self.cache_path.clone().or(c.toxicity.remote.cache_path);
        set(&mut c.toxicity.remote.concurrency, self.concurrency);
        set(&mut c.toxicity.remote.timeout_secs, self.timeout_secs);

        let lp = &mut c.lexicon.params;
        set(&mut lp.min_interactions, self.min_interactions);
        set(&mut lp.min_users, self.min_users);
        set(&mut lp.k, self.k);
        set(&mut lp.embedding.dim, self.dim);
        set(&mut lp.embedding.window, self.window);
        set(&mut lp.bootstrap.runs, self.runs);
        set(&mut lp.bootstrap.fraction, self.seed_fraction);
        set(&mut lp.bootstrap.walk.beta, self.beta);
        set(&mut lp.bootstrap.walk.tol, self.tol);
        set(&mut lp.bootstrap.walk.max_iters, self.max_iters);
        set(&mut c.lexicon.top_n, self.top);
        c.lexicon.stopwords = self.stopwords.clone().or(c.lexicon.stopwords);

        set(&mut c.regression.trim_fraction, self.trim);
        c.validate()?;
        Ok(c)
    }
}

fn synth(opts: &Options, scenario: Option<&PathBuf>) -> Result<()> {
    let mut cfg = match scenario {
        Some(p) => ScenarioConfig::read(p)?,
        None => {
            let seed = opts
                .rng_seed
                .ok_or_else(|| Error::InvalidParameter("synth needs --scenario or --rng-seed".into()))?;
            ScenarioConfig {
                rng_seed: seed,
                ..Default::default()
            }
        }
    };
    set(&mut cfg.rng_seed, opts.rng_seed);
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from("synth"));
    let scenario = generate(&cfg)?;
    let files = write_scenario(&scenario, &dir)?;
    println!(
        "wrote {} tweets, {} users, {} follows, {} candidates to {}",
        scenario.tweets.len(),
        scenario.users.len(),
        scenario.follows.len(),
        scenario.candidates.len(),
        dir.display()
    );
    println!("ground truth: {}", files.ground_truth.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let stage = match &cli.command {
        Command::Synth { scenario } => return synth(&cli.opts, scenario.as_ref()),
        Command::All => None,
        Command::Ingest => Some(Stage::Ingest),
        Command::InferParty => Some(Stage::InferParty),
        Command::Score => Some(Stage::Score),
        Command::Dpp => Some(Stage::Dpp),
        Command::Lexicon => Some(Stage::Lexicon),
        Command::Regress => Some(Stage::Regress),
    };
    let config = cli.opts.pipeline_config()?;
    let mut pipeline = Pipeline::new(config, cli.opts.force)?;
    let outcomes = match stage {
        Some(s) => vec![(s, pipeline.run(s)?)],
        None => pipeline.run_all()?,
    };
    for (s, o) in outcomes {
        let what = match o {
            Outcome::Ran => "done",
            Outcome::Skipped => "up to date",
        };
        println!("{s}: {what}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.opts.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
