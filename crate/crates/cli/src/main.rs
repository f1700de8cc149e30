//! `atc2`: command-line front end for the ATC voice-data pipeline.

mod eval;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use atc2_core::boost::{context_sequences, rescore, BoostMode};
use atc2_core::eld::{train, ModelKind, TrainConfig};
use atc2_core::model::ContextStore;
use atc2_core::pipeline::{
    open_sink, run_batch, timing_report, JobSettings, LifecycleConfig, LifecycleStore, PipelineConfig, PipelineError,
    ReplayEvent, Resources, StageTiming,
};
use atc2_core::quality::rank_and_select;
use atc2_core::synth::{bilingual_corpus, generate_corpus, role_corpus, SynthSpec};
use atc2_core::textnorm::NgramMode;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::io::{read_jsonl, read_records, write_lines, Fail, ResultExt};

#[derive(Parser)]
#[command(name = "atc2", version, about = "Air-traffic voice data pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (records, references, dialogues, context).
    Gen {
        /// Generator settings as JSON; defaults when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run records through the block graph.
    Process {
        /// Pipeline config JSON; the default chain when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Job settings JSON; defaults when omitted.
        #[arg(long)]
        settings: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Callback sink: a JSONL path, an http(s) URL, or "none".
        #[arg(long, default_value = "none")]
        callbacks: String,
        /// Surveillance context CSV used for callsign boosting.
        #[arg(long)]
        context: Option<PathBuf>,
        /// Language model JSON (see `train`); built-in model when omitted.
        #[arg(long)]
        eld_model: Option<PathBuf>,
        /// Writes accumulated per-stage timing as JSON.
        #[arg(long)]
        timing_out: Option<PathBuf>,
        /// Overrides the config's worker count.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Rank processed records by quality and select a batch.
    Rank {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        top_hours: f64,
        /// Writes the selected records as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Rescore record lattices with context boosting.
    Boost {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        context: Option<PathBuf>,
        #[arg(long, default_value_t = atc2_core::pipeline::DEFAULT_DISCOUNT, allow_hyphen_values = true)]
        discount: f64,
        #[arg(long, value_enum, default_value_t = Mode::Ngram)]
        mode: Mode,
        /// Reference file; required for `--mode gt`.
        #[arg(long)]
        references: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score outputs against references.
    Eval {
        #[arg(long, value_enum)]
        task: eval::Task,
        /// references.jsonl (asr, ner, srd) or dialogues.jsonl (diar).
        #[arg(long)]
        references: PathBuf,
        /// Hypotheses for asr: JSONL with `id` and `words` or `transcript`.
        #[arg(long)]
        hyps: Option<PathBuf>,
        /// Role model JSON for srd; built-in model when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Print reports.
    Report {
        /// Timing JSON written by `process --timing-out`.
        #[arg(long)]
        timing: PathBuf,
    },
    /// Replay annotation lifecycle events and print the final states.
    Lifecycle {
        #[arg(long)]
        replay: PathBuf,
        /// Lifecycle limits as JSON; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train a language or speaker-role model on generated data.
    Train {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Baseline,
    Unigram,
    Ngram,
    Gt,
}

impl From<Mode> for BoostMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Baseline => BoostMode::Baseline,
            Mode::Unigram => BoostMode::Unigram,
            Mode::Ngram => BoostMode::Ngram,
            Mode::Gt => BoostMode::GroundTruth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Eld,
    Role,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn run(cmd: Command) -> Result<(), Fail> {
    match cmd {
        Command::Gen { spec, out } => gen(spec.as_deref(), &out),
        Command::Process {
            config,
            settings,
            input,
            out,
            callbacks,
            context,
            eld_model,
            timing_out,
            parallelism,
        } => {
            let mut cfg = match config {
                Some(p) => PipelineConfig::load(&p).map_err(pipeline_fail(&p))?,
                None => PipelineConfig::default(),
            };
            if let Some(n) = parallelism {
                cfg.parallelism = n;
            }
            let js = match settings {
                Some(p) => JobSettings::load(&p).map_err(pipeline_fail(&p))?,
                None => JobSettings::default(),
            };
            let mut resources = Resources::builtin();
            if let Some(p) = context {
                resources.context = load_context(&p)?;
            }
            if let Some(p) = eld_model {
                resources.eld_model = atc2_core::eld::LinearTextModel::load(&p)
                    .with_context(|| format!("loading {}", p.display()))
                    .input()?;
            }
            let sink = open_sink(&callbacks).context("opening callback sink").config()?;
            let records = read_records(&input)?;
            let outcomes = run_batch(records, &cfg, &js, &resources, sink.as_ref()).map_err(pipeline_fail(Path::new("pipeline")))?;

            let mut timing = StageTiming::default();
            let mut ok = 0;
            for o in &outcomes {
                timing.accumulate(&o.timing);
                ok += usize::from(o.is_ok());
            }
            write_lines(&out, outcomes.iter().map(|o| o.record.to_json_line()))?;
            if let Some(p) = timing_out {
                write_json(&p, &timing)?;
            }
            log::info!("{ok}/{} job(s) finished OK", outcomes.len());
            println!("{ok}/{} ok", outcomes.len());
            Ok(())
        }
        Command::Rank {
            input,
            top_hours,
            out,
            json,
        } => {
            if !(top_hours >= 0.0) {
                return Err(Fail::Input(anyhow!("--top-hours must be non-negative")));
            }
            let records = read_records(&input)?;
            let sel = rank_and_select(&records, top_hours);
            if let Some(p) = out {
                let lines = sel
                    .selected()
                    .iter()
                    .filter_map(|s| records.iter().find(|r| r.id == s.id))
                    .map(|r| r.to_json_line());
                write_lines(&p, lines)?;
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&sel).expect("selection serializes"));
            } else {
                print!("{}", sel.funnel);
                for r in sel.selected() {
                    println!("{}\t{:.4}\t{:.3}", r.id, r.score, r.speech_len);
                }
            }
            Ok(())
        }
        Command::Boost {
            input,
            context,
            discount,
            mode,
            references,
            out,
        } => boost(&input, context.as_deref(), discount, mode.into(), references.as_deref(), &out),
        Command::Eval {
            task,
            references,
            hyps,
            model,
        } => {
            let report = eval::run(task, &references, hyps.as_deref(), model.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
        Command::Report { timing } => {
            let text = std::fs::read_to_string(&timing)
                .with_context(|| format!("reading {}", timing.display()))
                .input()?;
            let t: StageTiming = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", timing.display()))
                .input()?;
            if t.total() <= 0.0 {
                return Err(Fail::Input(anyhow!("timing has no recorded stage time")));
            }
            print!("{}", timing_report(&t));
            Ok(())
        }
        Command::Lifecycle { replay, config } => lifecycle(&replay, config.as_deref()),
        Command::Train {
            kind,
            samples,
            seed,
            out,
        } => {
            let (kind, data) = match kind {
                Kind::Eld => (ModelKind::Eld, bilingual_corpus(samples, seed)),
                Kind::Role => (ModelKind::Role, role_corpus(samples, seed)),
            };
            let cfg = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            let model = train(kind, &data, cfg).context("training").input()?;
            let acc = atc2_core::eld::accuracy(&model, &data);
            model
                .save(&out)
                .with_context(|| format!("writing {}", out.display()))
                .input()?;
            println!("training accuracy {acc:.4}");
            Ok(())
        }
    }
}

/// Maps configuration problems to exit code 3 and everything else to 2.
fn pipeline_fail(path: &Path) -> impl Fn(PipelineError) -> Fail + '_ {
    move |e| {
        let err = anyhow::Error::new(e).context(format!("{}", path.display()));
        match err.downcast_ref::<PipelineError>() {
            Some(PipelineError::Io(_)) | None => Fail::Input(err),
            Some(_) => Fail::Config(err),
        }
    }
}

fn load_context(path: &Path) -> Result<ContextStore, Fail> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .input()?;
    ContextStore::from_csv(file)
        .with_context(|| format!("parsing {}", path.display()))
        .input()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Fail> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .input()
}

fn gen(spec: Option<&Path>, out: &Path) -> Result<(), Fail> {
    let spec = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .input()?;
            SynthSpec::from_json(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .config()?
        }
        None => SynthSpec::default(),
    };
    let corpus = generate_corpus(&spec).context("generating corpus").config()?;
    corpus
        .write_dir(out)
        .with_context(|| format!("writing {}", out.display()))
        .input()?;
    println!("{} record(s) written to {}", corpus.records.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct BoostedHypothesis<'a> {
    id: &'a str,
    words: Vec<String>,
    cost: f64,
}

#[derive(serde::Deserialize)]
struct ReferenceCode {
    id: String,
    callsign: String,
}

fn boost(
    input: &Path,
    context: Option<&Path>,
    discount: f64,
    mode: BoostMode,
    references: Option<&Path>,
    out: &Path,
) -> Result<(), Fail> {
    if !discount.is_finite() || discount > 0.0 {
        return Err(Fail::Config(anyhow!("--discount must be a finite value <= 0, got {discount}")));
    }
    let records = read_records(input)?;
    let store = match context {
        Some(p) => load_context(p)?,
        None if matches!(mode, BoostMode::Unigram | BoostMode::Ngram) => {
            return Err(Fail::Config(anyhow!("--mode {} needs --context", mode.as_str())));
        }
        None => ContextStore::default(),
    };
    let truth: std::collections::HashMap<String, String> = match (mode, references) {
        (BoostMode::GroundTruth, Some(p)) => read_jsonl::<ReferenceCode>(p)?
            .into_iter()
            .map(|r| (r.id, r.callsign))
            .collect(),
        (BoostMode::GroundTruth, None) => return Err(Fail::Config(anyhow!("--mode gt needs --references"))),
        _ => Default::default(),
    };
    let table = atc2_core::textnorm::AirlineTable::builtin();
    let ngram = if mode == BoostMode::Unigram {
        NgramMode::Unigram
    } else {
        NgramMode::Ngram
    };
    let mut lines = Vec::with_capacity(records.len());
    for r in &records {
        let lattice = r
            .lattice
            .as_ref()
            .ok_or_else(|| Fail::Input(anyhow!("record {} has no lattice", r.id)))?;
        let callsigns = match mode {
            BoostMode::Baseline => Vec::new(),
            BoostMode::Unigram | BoostMode::Ngram => store.context_at(r.captured_at).callsigns,
            BoostMode::GroundTruth => vec![truth
                .get(&r.id)
                .cloned()
                .ok_or_else(|| Fail::Input(anyhow!("no reference for record {}", r.id)))?],
        };
        let best = rescore(lattice, &context_sequences(&callsigns, &table, ngram), discount)
            .with_context(|| format!("record {}", r.id))
            .input()?;
        let hyp = BoostedHypothesis {
            id: &r.id,
            words: best.tokens,
            cost: best.cost,
        };
        lines.push(serde_json::to_string(&hyp).expect("hypothesis serializes"));
    }
    write_lines(out, lines)?;
    println!("{} hypothesis(es) written to {}", records.len(), out.display());
    Ok(())
}

fn lifecycle(replay: &Path, config: Option<&Path>) -> Result<(), Fail> {
    let cfg: LifecycleConfig = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .input()?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .config()?
        }
        None => LifecycleConfig::default(),
    };
    let events: Vec<ReplayEvent> = read_jsonl(replay)?;
    let mut store = LifecycleStore::new(cfg);
    for (i, ev) in events.iter().enumerate() {
        store
            .apply(&ev.recording, &ev.event)
            .with_context(|| format!("{} event {}", replay.display(), i + 1))
            .input()?;
    }
    for item in store.items.values() {
        println!("{}", serde_json::to_string(item).expect("items serialize"));
    }
    Ok(())
}
