mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eeguide::codefmt::export_jsonl;
use eeguide::corpus::{self, CorpusSplit, IngestOptions};
use eeguide::guidelines::{self, GuidelineStore};
use eeguide::llmgate::{Gate, ResponseCache};
use eeguide::ontology::{self, Ontology};
use eeguide::parse_eval::{self, ScoreReport};
use eeguide::report;
use eeguide::sampling::{self, TrainPlan};
use eeguide::{ErrorKind, Variant};

use config::{Config, ConfigError};

#[derive(Parser, Debug)]
#[command(name = "eeguide", version, about = "Code-format event extraction toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every stage, overriding the configured ones.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// noguide, h, p, pn, ps, pn-int or ps-int.
    #[arg(long, global = true)]
    variant: Option<Variant>,

    #[arg(long, global = true, overrides_with = "no_ns")]
    with_ns: bool,

    #[arg(long, global = true, overrides_with = "with_ns")]
    no_ns: bool,

    /// Negative types per positive record.
    #[arg(long, global = true)]
    ns_count: Option<usize>,

    #[arg(long, global = true, overrides_with = "lenient")]
    strict: bool,

    /// Skip invalid corpus records instead of aborting.
    #[arg(long, global = true, overrides_with = "strict")]
    lenient: bool,

    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Base URL of the chat-completion endpoint.
    #[arg(long, global = true)]
    endpoint: Option<String>,

    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a corpus file and write its canonical form.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        split_name: Option<String>,
        /// Also write split statistics as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Draw a dev, Train2k or Train100 subset.
    Subset {
        #[command(subcommand)]
        kind: SubsetKind,
    },
    /// Generate, consolidate or import annotation guidelines.
    Guidelines {
        #[command(subcommand)]
        action: GuidelineAction,
    },
    /// Build training or inference prompt files.
    Build {
        #[command(subcommand)]
        kind: BuildKind,
    },
    /// Parse and validate model generations.
    Parse {
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Score generations against gold.
    Score {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Attach the error taxonomy to the report.
        #[arg(long)]
        with_errors: bool,
        /// `{instance_id: "CA" | "LN"}` manual relabels.
        #[arg(long)]
        manual: Option<PathBuf>,
        /// F1 TSV; defaults to the report path with a .tsv extension.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Categorize prediction errors.
    Errors {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        manual: Option<PathBuf>,
    },
    /// Analysis tables from score reports.
    Report {
        #[command(subcommand)]
        kind: ReportKind,
    },
}

#[derive(Subcommand, Debug)]
enum SubsetKind {
    /// Two positives per event type plus no-event filler.
    Dev {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Uniform sample.
    #[command(name = "2k")]
    Uniform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2000)]
        n: usize,
    },
    /// Every event type covered, argument-rich instances preferred.
    #[command(name = "100")]
    Covered {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
enum GuidelineAction {
    /// Generate P, PN or PS guidelines from training exemplars.
    Gen {
        #[arg(long)]
        train: PathBuf,
    },
    /// Merge a PN or PS store into single definitions.
    Consolidate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Validate human guidelines and store them canonically.
    ImportHuman {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum BuildKind {
    /// Gold-labeled prompts, optionally with negative samples.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        guidelines: Option<PathBuf>,
    },
    /// One unlabeled prompt per sentence and event type.
    Infer {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        guidelines: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ReportKind {
    /// Per-type AC of two runs in training-frequency order, as CSV.
    Delta {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        train: PathBuf,
    },
    /// Side-by-side TI/TC/AI/AC of named reports (`name=path`).
    Compare {
        #[arg(long = "report", required = true)]
        reports: Vec<String>,
    },
}

struct Ctx {
    cfg: Config,
    out: Option<PathBuf>,
    ont: Ontology,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        self.cfg.resolve(p)
    }

    fn out(&self) -> Result<PathBuf> {
        self.out
            .as_deref()
            .map(|p| self.path(p))
            .ok_or_else(|| anyhow!("this subcommand needs --out"))
    }

    fn split(&self, p: &Path) -> Result<CorpusSplit> {
        let path = self.path(p);
        let opts = IngestOptions {
            lenient: !self.cfg.strict,
            split_name: None,
        };
        Ok(corpus::ingest(&path, &self.ont, &opts)?.split)
    }

    fn store(&self, p: Option<&Path>, variant: Variant) -> Result<Option<GuidelineStore>> {
        match (variant.uses_guidelines(), p) {
            (false, _) => Ok(None),
            (true, Some(p)) => Ok(Some(GuidelineStore::load(self.path(p), variant, &self.ont)?)),
            (true, None) => bail!("variant {variant} needs --guidelines"),
        }
    }

    fn gate(&self) -> Result<Gate> {
        let dir = self.path(&self.cfg.cache_dir);
        let cache = ResponseCache::open(&dir)?;
        log::info!(
            "LLM cache {} holds {} transcript(s); endpoint {} model {}{}",
            dir.display(),
            cache.len(),
            self.cfg.endpoint.base_url,
            self.cfg.endpoint.model,
            if self.cfg.endpoint.offline { " (offline)" } else { "" }
        );
        Ok(Gate::new(self.cfg.endpoint.clone(), Some(cache))?)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn resolve_config(g: &GlobalArgs) -> Result<Config> {
    let mut cfg = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seeds = config::Seeds::all(seed);
    }
    if let Some(v) = g.variant {
        cfg.sampling.variant = v;
    }
    if g.with_ns {
        cfg.sampling.with_ns = true;
    }
    if g.no_ns {
        cfg.sampling.with_ns = false;
    }
    if let Some(n) = g.ns_count {
        cfg.sampling.ns_count = n;
    }
    if g.strict {
        cfg.strict = true;
    }
    if g.lenient {
        cfg.strict = false;
    }
    if let Some(dir) = &g.cache_dir {
        cfg.cache_dir = dir.clone();
    }
    if let Some(url) = &g.endpoint {
        cfg.endpoint.base_url = url.clone();
    }
    cfg.validate().map_err(|problems| ConfigError {
        source_name: "command-line overrides".into(),
        problems,
    })?;
    Ok(cfg)
}

fn parse_reports(ctx: &Ctx, path: &Path) -> Result<Vec<parse_eval::PredictionRecord>> {
    let inputs = parse_eval::read_predictions(ctx.path(path))?;
    Ok(parse_eval::parse_all(&inputs, &ctx.ont))
}

fn load_report(path: &Path) -> Result<ScoreReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a score report", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.global)?;
    let ont = match &cfg.ontology {
        Some(p) => ontology::load_ontology(cfg.resolve(p))?,
        None => ontology::ace05(),
    };
    log::info!(
        "config: root={} ontology={} ({} types) strict={} seeds={:?} sampling={:?}",
        cfg.root().display(),
        ont.name,
        ont.len(),
        cfg.strict,
        cfg.seeds,
        cfg.sampling
    );
    let ctx = Ctx {
        cfg,
        out: cli.global.out.clone(),
        ont,
    };
    let seeds = ctx.cfg.seeds.clone();
    let variant = ctx.cfg.sampling.variant;

    match cli.command {
        Command::Ingest { input, split_name, stats } => {
            let path = ctx.path(&input);
            let opts = IngestOptions {
                lenient: !ctx.cfg.strict,
                split_name,
            };
            let outcome = corpus::ingest(&path, &ctx.ont, &opts)?;
            let out = ctx.out()?;
            write(&out, &corpus::split_to_jsonl(&outcome.split))?;
            let st = corpus::stats(&outcome.split)?;
            log::info!(
                "{}: {} instances, {} event mentions, {} event types",
                st.split,
                st.instances,
                st.event_mentions,
                st.event_types.len()
            );
            if let Some(p) = stats {
                write(&ctx.path(&p), &(serde_json::to_string_pretty(&st)? + "\n"))?;
            }
        }
        Command::Subset { kind } => {
            let (split, n) = match &kind {
                SubsetKind::Dev { input, n } | SubsetKind::Uniform { input, n } | SubsetKind::Covered { input, n } => {
                    (ctx.split(input)?, *n)
                }
            };
            let sub = match kind {
                SubsetKind::Dev { .. } => corpus::select_dev(&split, &ctx.ont, n, seeds.subset)?,
                SubsetKind::Uniform { .. } => corpus::subset_uniform(&split, n, seeds.subset)?,
                SubsetKind::Covered { .. } => corpus::subset_covered(&split, &ctx.ont, n, seeds.subset)?,
            };
            log::info!("{}: {} instances (seed {})", sub.name, sub.len(), seeds.subset);
            write(&ctx.out()?, &corpus::split_to_jsonl(&sub))?;
        }
        Command::Guidelines { action } => match action {
            GuidelineAction::Gen { train } => {
                let split = ctx.split(&train)?;
                let gate = ctx.gate()?;
                let store = guidelines::generate_all(&split, &ctx.ont, variant, &gate, &ctx.cfg.generation, seeds.exemplars)?;
                log::info!("generated {} {variant} guideline set(s)", store.len());
                store.save(ctx.out()?, Some(&ctx.ont))?;
            }
            GuidelineAction::Consolidate { input } => {
                let store = GuidelineStore::load(ctx.path(&input), variant, &ctx.ont)?;
                let gate = ctx.gate()?;
                let merged = guidelines::consolidate_all(&store, &ctx.ont, &gate, &ctx.cfg.generation)?;
                log::info!("consolidated {} set(s) into {}", merged.len(), merged.variant);
                merged.save(ctx.out()?, Some(&ctx.ont))?;
            }
            GuidelineAction::ImportHuman { input } => {
                let store = guidelines::load_human(ctx.path(&input), &ctx.ont)?;
                store.save(ctx.out()?, Some(&ctx.ont))?;
            }
        },
        Command::Build { kind } => match kind {
            BuildKind::Train { input, guidelines } => {
                let split = ctx.split(&input)?;
                let store = ctx.store(guidelines.as_deref(), variant)?;
                let mut plan = TrainPlan::new(variant, seeds.train);
                plan.with_ns = ctx.cfg.sampling.with_ns;
                plan.ns_count = ctx.cfg.sampling.ns_count;
                let records = sampling::build_training(&split, &ctx.ont, store.as_ref(), &plan)?;
                let out = ctx.out()?;
                let n = export_jsonl(&records, &out)?;
                log::info!("wrote {n} training record(s) to {}", out.display());
            }
            BuildKind::Infer { input, guidelines } => {
                let split = ctx.split(&input)?;
                let store = ctx.store(guidelines.as_deref(), variant)?;
                let out = ctx.out()?;
                let n = sampling::export_inference(&split, &ctx.ont, store.as_ref(), variant, seeds.infer, &out)?;
                log::info!("wrote {n} inference record(s) to {}", out.display());
            }
        },
        Command::Parse { predictions } => {
            let records = parse_reports(&ctx, &predictions)?;
            let failed = records.iter().filter(|r| r.failed()).count();
            log::info!("parsed {} generation(s), {failed} with errors", records.len());
            write(&ctx.out()?, &parse_eval::records_to_jsonl(&records))?;
        }
        Command::Score { predictions, gold, with_errors, manual, tsv } => {
            let records = parse_reports(&ctx, &predictions)?;
            let gold = ctx.split(&gold)?;
            let agg = parse_eval::aggregate(&records);
            let mut report = parse_eval::score(&agg, &gold, &ctx.ont)?;
            if with_errors || manual.is_some() {
                let labels = manual.map(|m| parse_eval::load_manual_labels(ctx.path(&m))).transpose()?;
                report.errors = Some(parse_eval::categorize_errors(&agg, &gold, &records, labels.as_ref())?);
            }
            let out = ctx.out()?;
            write(&out, &report.to_json_string())?;
            let tsv = tsv.map(|p| ctx.path(&p)).unwrap_or_else(|| out.with_extension("tsv"));
            write(&tsv, &report.f1_tsv())?;
            let o = &report.overall;
            log::info!("TI {:.4} TC {:.4} AI {:.4} AC {:.4}", o.ti.f1, o.tc.f1, o.ai.f1, o.ac.f1);
        }
        Command::Errors { predictions, gold, manual } => {
            let records = parse_reports(&ctx, &predictions)?;
            let gold = ctx.split(&gold)?;
            let agg = parse_eval::aggregate(&records);
            let labels = manual.map(|m| parse_eval::load_manual_labels(ctx.path(&m))).transpose()?;
            let errors = parse_eval::categorize_errors(&agg, &gold, &records, labels.as_ref())?;
            write(&ctx.out()?, &(serde_json::to_string_pretty(&errors)? + "\n"))?;
        }
        Command::Report { kind } => match kind {
            ReportKind::Delta { a, b, train } => {
                let (a, b) = (load_report(&ctx.path(&a))?, load_report(&ctx.path(&b))?);
                let st = corpus::stats(&ctx.split(&train)?)?;
                let table = report::frequency_delta(&a, &b, &st)?;
                let out = ctx.out()?;
                report::emit_plot_data(&table, &out)?;
                print!("{}", table.to_tsv());
            }
            ReportKind::Compare { reports } => {
                let mut named = Vec::new();
                for spec in reports {
                    let (name, path) = spec
                        .split_once('=')
                        .ok_or_else(|| anyhow!("--report expects name=path, got `{spec}`"))?;
                    named.push((name.to_string(), load_report(&ctx.path(Path::new(path)))?));
                }
                let table = report::comparison_table(&named);
                if let Some(out) = &ctx.out {
                    write(&ctx.path(out), &table.to_tsv())?;
                }
                print!("{}", table.to_text());
            }
        },
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 3;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<eeguide::Error>() {
            return match e.kind() {
                ErrorKind::Input => 4,
                ErrorKind::Precondition => 5,
                ErrorKind::Io => 6,
                ErrorKind::Llm => 7,
            };
        }
        if cause.downcast_ref::<eeguide::llmgate::GateError>().is_some() {
            return 7;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 6;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
