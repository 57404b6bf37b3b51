//! `goalcoach` command line.

use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use goalcoach_core::backend::BackendKind;
use goalcoach_core::{Backends, SessionConfig};
use goalcoach_corpus::empathy::{build_empathy_corpus, few_shot_set, write_sequences};
use goalcoach_corpus::{augment_all, load_corpus, write_corpus, AugmentationRecipe, Corpus, ToyConfig};
use goalcoach_eval::report::{load_transcript, write_report};
use goalcoach_eval::{evaluate, export_ab, replay_corpus, AbItem, Scorers};
use goalcoach_service::AppState;
use goalcoach_train::{load_backends, TrainRecipe};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Corpus(#[from] goalcoach_corpus::CorpusError),
    #[error(transparent)]
    Train(#[from] goalcoach_train::TrainError),
    #[error(transparent)]
    Eval(#[from] goalcoach_eval::EvalError),
    #[error(transparent)]
    Core(#[from] goalcoach_core::CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "goalcoach", version, about = "Goal-oriented health coaching dialogue system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and transform corpora.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Train one backend and write its artifact directory.
    Train(TrainArgs),
    /// Print a training recipe as JSON.
    Recipe {
        kind: BackendKind,
        /// `reference` or `cpu_small`.
        #[arg(long, default_value = "reference")]
        base: String,
    },
    /// Evaluate transcripts.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Serve the session API.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Convert the two released datasets into the canonical record format.
    Import {
        #[arg(long)]
        dataset1: PathBuf,
        #[arg(long)]
        dataset2: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add value-substituted (and optionally paraphrased) variants.
    Augment {
        #[arg(long)]
        corpus: PathBuf,
        /// JSON augmentation recipe.
        #[arg(long)]
        recipe: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Backends manifest supplying the paraphraser.
        #[arg(long)]
        backends: Option<PathBuf>,
    },
    /// Write the synthetic toy corpus.
    Toy {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 120)]
        weeks: usize,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0.5)]
        collision_rate: f64,
    },
    /// Silver-label empathetic dialogues and write encoded training
    /// sequences for the causal LM.
    Empathy {
        /// Directory with train.csv / valid.csv / test.csv.
        #[arg(long)]
        dialogues: PathBuf,
        /// Directory with the mechanism rating files.
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Coaching corpus for the few-shot set.
        #[arg(long)]
        coaching: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        few_shot: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        backends: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub kind: BackendKind,
    /// Training input (corpus file or directory, or the kind's data directory).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Recipe file, or `reference` / `cpu_small` for the built-in recipes.
    #[arg(long, default_value = "reference")]
    pub recipe: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Score a system transcript against a gold corpus.
    Run {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Backends manifest supplying the fluency and empathy scorers.
        #[arg(long)]
        backends: Option<PathBuf>,
    },
    /// Drive every week of a corpus through the pipeline and write the
    /// transcript.
    Replay {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        backends: Option<PathBuf>,
        /// Only weeks of this dataset.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Blind a set of paired outputs for human comparison.
    Ab {
        /// Line-delimited {input, output_a, output_b} records.
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Backends manifest; rule backends when omitted.
    #[arg(long)]
    pub backends: Option<PathBuf>,
    /// Require this value in the x-coach-token header.
    #[arg(long, env = "GOALCOACH_TOKEN")]
    pub token: Option<String>,
}

fn backends(manifest: Option<&Path>) -> Result<Backends, CliError> {
    match manifest {
        Some(p) => Ok(load_backends(p)?),
        None => Ok(Backends::rule()),
    }
}

pub fn recipe(kind: BackendKind, spec: &str) -> Result<TrainRecipe, CliError> {
    Ok(match spec {
        "reference" => TrainRecipe::reference(kind),
        "cpu_small" | "cpu-small" => TrainRecipe::cpu_small(kind),
        path => {
            let text = std::fs::read_to_string(path).map_err(io(Path::new(path)))?;
            TrainRecipe::from_json(&text, Some(kind))?
        }
    })
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let mut w = BufWriter::new(std::fs::File::create(path).map_err(io(path))?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| io(path)(e.into()))?;
        w.write_all(b"\n").map_err(io(path))?;
    }
    w.flush().map_err(io(path))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let f = std::io::BufReader::new(std::fs::File::open(path).map_err(io(path))?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok(out)
}

fn run_corpus(cmd: CorpusCommand) -> Result<(), CliError> {
    match cmd {
        CorpusCommand::Import { dataset1, dataset2, out } => {
            std::fs::create_dir_all(&out).map_err(io(&out))?;
            let (a, b) = goalcoach_corpus::import::import(&dataset1, &dataset2, &out)?;
            log::info!("imported {a} + {b} utterances into {}", out.display());
        }
        CorpusCommand::Augment {
            corpus,
            recipe,
            seed,
            out,
            backends: manifest,
        } => {
            let text = std::fs::read_to_string(&recipe).map_err(io(&recipe))?;
            let recipe: AugmentationRecipe =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", recipe.display())))?;
            let b = backends(manifest.as_deref())?;
            let c = load_corpus(&corpus)?;
            let utts: Vec<_> = c.utterances().cloned().collect();
            let augmented = augment_all(&utts, &recipe, b.paraphraser.as_ref(), seed)?;
            log::info!("{} utterances -> {}", utts.len(), augmented.len());
            let records: Vec<_> = augmented.iter().map(|u| u.to_record()).collect();
            write_jsonl(&out, &records)?;
        }
        CorpusCommand::Toy {
            out,
            weeks,
            seed,
            test_fraction,
            collision_rate,
        } => {
            let c = goalcoach_corpus::generate_toy(&ToyConfig {
                weeks,
                seed,
                test_fraction,
                collision_rate,
            });
            write_corpus(&out, &c)?;
            log::info!("{} weeks written to {}", c.weeks.len(), out.display());
        }
        CorpusCommand::Empathy {
            dialogues,
            ratings,
            out,
            coaching,
            few_shot,
            seed,
            backends: manifest,
        } => {
            let b = backends(manifest.as_deref())?;
            let ec = build_empathy_corpus(&dialogues, &ratings, b.mechanisms.as_ref())?;
            std::fs::create_dir_all(&out).map_err(io(&out))?;
            write_sequences(&out.join("train.txt"), &ec.train)?;
            write_sequences(&out.join("valid.txt"), &ec.valid)?;
            write_sequences(&out.join("test.txt"), &ec.test)?;
            if let Some(c) = coaching {
                let corpus: Corpus = load_corpus(&c)?;
                write_sequences(&out.join("few_shot.txt"), &few_shot_set(&corpus, b.mechanisms.as_ref(), few_shot, seed))?;
            }
            log::info!("{} / {} / {} sequences, {} ratings", ec.train.len(), ec.valid.len(), ec.test.len(), ec.ratings.len());
        }
    }
    Ok(())
}

fn run_eval(cmd: EvalCommand) -> Result<(), CliError> {
    match cmd {
        EvalCommand::Run {
            system,
            gold,
            report,
            backends: manifest,
        } => {
            let transcript = load_transcript(&system)?;
            let gold = load_corpus(&gold)?;
            let scorers = match &manifest {
                Some(p) => Some(load_backends(p)?),
                None => None,
            };
            let s = Scorers {
                lm: scorers.as_ref().map(|b| b.lm_scorer.as_ref()),
                regressor: scorers.as_ref().map(|b| b.regressor.as_ref()),
                plugins: Vec::new(),
            };
            let r = evaluate(&transcript, &gold, &s)?;
            write_report(&report, &r)?;
            log::info!("report written to {}", report.display());
        }
        EvalCommand::Replay {
            gold,
            out,
            backends: manifest,
            dataset,
            seed,
        } => {
            let b = backends(manifest.as_deref())?;
            let corpus = load_corpus(&gold)?;
            let weeks: Vec<_> = corpus
                .weeks
                .iter()
                .filter(|w| dataset.is_none() || w.dataset == dataset)
                .collect();
            let config = SessionConfig {
                seed,
                ..SessionConfig::default()
            };
            let records = replay_corpus(weeks.iter().copied(), &b, &config)?;
            write_jsonl(&out, &records)?;
            log::info!("{} weeks replayed into {}", weeks.len(), out.display());
        }
        EvalCommand::Ab { items, out, key, seed } => {
            let items: Vec<AbItem> = read_jsonl(&items)?;
            export_ab(&items, seed, &out, &key)?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Corpus(c) => run_corpus(c),
        Command::Train(t) => {
            let r = recipe(t.kind, &t.recipe)?;
            let m = goalcoach_train::train(t.kind, &t.corpus, &r, &t.out)?;
            for (k, v) in &m.metrics {
                log::info!("{k} = {v:.4}");
            }
            Ok(())
        }
        Command::Recipe { kind, base } => {
            let r = match base.as_str() {
                "reference" => TrainRecipe::reference(kind),
                "cpu_small" | "cpu-small" => TrainRecipe::cpu_small(kind),
                other => return Err(CliError::Usage(format!("unknown recipe base `{other}`"))),
            };
            println!("{}", serde_json::to_string_pretty(&r).expect("recipes serialize"));
            Ok(())
        }
        Command::Eval(e) => run_eval(e),
        Command::Serve(s) => {
            let mut state = AppState::new(backends(s.backends.as_deref())?);
            if let Some(t) = s.token {
                state = state.with_token(t);
            }
            let rt = tokio::runtime::Runtime::new().map_err(io(Path::new("<runtime>")))?;
            rt.block_on(goalcoach_service::serve((s.host, s.port).into(), state))
                .map_err(io(Path::new("<listener>")))
        }
    }
}
