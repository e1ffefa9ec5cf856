use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use simplify::metrics::{corpus_report, format_table, sari, EvalReport, EvalRow};
use simplify::paraphraser::{CopyConstraint, EpochLog, Paraphraser};
use simplify::pipeline::io::{load_checkpoint, read_jsonl, save_checkpoint, write_atomic, write_jsonl};
use simplify::pipeline::{
    augment_corpus, prepare_corpus, simplify_corpus, tokenize_corpus, train_delsplit, train_paraphraser, train_ranker,
    AlignedRecord, CorpusPair, Mode, Models, Partition, PipelineConfig, TokenizedPair,
};
use simplify::ranker::RankerModel;
use simplify::structgen::generate;
use simplify::{tokenize, TokenSeq};

#[derive(Parser)]
#[command(name = "hsimp", version, about = "Controllable sentence simplification")]
struct Cli {
    /// Pipeline configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Join aligned simple sentences and filter pairs by BLEU.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Dump split and deletion candidates for a corpus partition.
    GenCandidates {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        delsplit: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train the pairwise candidate ranker.
    TrainRanker {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        delsplit: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Train the copy-controlled paraphraser.
    TrainParaphraser {
        #[arg(long)]
        corpus: PathBuf,
        /// Add filtered rule candidates as extra training inputs.
        #[arg(long)]
        augment: bool,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Train the deletion-and-split model.
    TrainDelsplit {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Write the corpus plus augmented training pairs.
    Augment {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Simplify sentences from a text file (one per line) or a corpus partition.
    Simplify {
        #[arg(long, conflicts_with = "corpus")]
        input: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        partition: String,
        #[arg(long)]
        ranker: Option<PathBuf>,
        #[arg(long)]
        paraphraser: Option<PathBuf>,
        #[arg(long)]
        delsplit: Option<PathBuf>,
        /// overall, split_focused, delete_focused or paraphrase_only.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        cp: Option<f64>,
        /// Output the selected candidate without paraphrasing it.
        #[arg(long)]
        no_paraphrase: bool,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score one system output file against a corpus partition.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        outputs: PathBuf,
        #[arg(long, default_value = "system")]
        system: String,
        /// Per-sentence SARI records (JSONL).
        #[arg(long)]
        per_sentence: Option<PathBuf>,
    },
    /// Metric table for several systems: `--system name=outputs.txt`, repeatable.
    Report {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long = "system", required = true)]
        systems: Vec<String>,
        /// Machine-readable records, one per system (JSONL).
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "test")]
    partition: String,
}

fn parse_partition(name: &str) -> Result<Partition> {
    Ok(match name {
        "train" => Partition::Train,
        "dev" => Partition::Dev,
        "test" => Partition::Test,
        other => bail!("unknown partition {other:?}"),
    })
}

fn load_corpus(path: &Path) -> Result<Vec<TokenizedPair>> {
    let pairs: Vec<CorpusPair> = read_jsonl(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(tokenize_corpus(&pairs).with_context(|| format!("tokenizing {}", path.display()))?)
}

fn load_partition(args: &CorpusArgs) -> Result<Vec<TokenizedPair>> {
    let part = parse_partition(&args.partition)?;
    let rows: Vec<_> = load_corpus(&args.corpus)?.into_iter().filter(|p| p.partition == part).collect();
    if rows.is_empty() {
        bail!("partition {} of {} is empty", args.partition, args.corpus.display());
    }
    Ok(rows)
}

fn load_paraphraser(path: &Path) -> Result<Paraphraser> {
    let ckpt = load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(Paraphraser::from_checkpoint(&ckpt)?)
}

fn load_ranker(path: &Path) -> Result<RankerModel> {
    let ckpt = load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(RankerModel::from_checkpoint(&ckpt)?)
}

fn read_outputs(path: &Path, expected: usize) -> Result<Vec<TokenSeq>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != expected {
        bail!("{} has {} lines, expected {expected}", path.display(), lines.len());
    }
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| tokenize(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn eval_rows(corpus: &[TokenizedPair], outputs: Vec<TokenSeq>) -> Vec<EvalRow> {
    corpus
        .iter()
        .zip(outputs)
        .map(|(p, output)| EvalRow { source: p.complex.clone(), output, references: p.simple.clone() })
        .collect()
}

fn write_paraphraser(model: &Paraphraser, logs: &[EpochLog], output: &Path, log: Option<&Path>) -> Result<()> {
    save_checkpoint(output, &model.to_checkpoint())?;
    if let Some(l) = log {
        write_jsonl(l, logs)?;
    }
    let (total, copy) = model.parameter_counts();
    println!("saved {} ({total} parameters, {copy} in copy control)", output.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Prepare { input, output } => {
            let records: Vec<AlignedRecord> = read_jsonl(&input).with_context(|| format!("reading {}", input.display()))?;
            let (pairs, stats) = prepare_corpus(&records)?;
            write_jsonl(&output, &pairs)?;
            println!(
                "{} groups: kept {}, dropped {} too similar and {} too different",
                stats.groups,
                pairs.len(),
                stats.too_similar,
                stats.too_different
            );
        }
        Command::GenCandidates { corpus, delsplit, output } => {
            let rows = load_partition(&corpus)?;
            let model = delsplit.as_deref().map(load_paraphraser).transpose()?;
            let mut lines = String::new();
            for p in &rows {
                let cset = generate(&p.complex, &cfg.rules, model.as_ref(), cfg.paraphraser.delsplit_width)?;
                for rec in cset.dump_records()? {
                    lines.push_str(&rec);
                    lines.push('\n');
                }
            }
            write_atomic(&output, lines.as_bytes())?;
        }
        Command::TrainRanker { corpus, delsplit, output, log } => {
            let data = load_corpus(&corpus)?;
            let model = delsplit.as_deref().map(load_paraphraser).transpose()?;
            let (ranker, logs) = train_ranker(&data, &cfg, model.as_ref())?;
            save_checkpoint(&output, &ranker.to_checkpoint())?;
            if let Some(l) = log {
                write_jsonl(&l, &logs)?;
            }
            println!("saved {}", output.display());
        }
        Command::TrainParaphraser { corpus, augment, output, log } => {
            let (model, logs) = train_paraphraser(&load_corpus(&corpus)?, &cfg, augment)?;
            write_paraphraser(&model, &logs, &output, log.as_deref())?;
        }
        Command::TrainDelsplit { corpus, output, log } => {
            let (model, logs) = train_delsplit(&load_corpus(&corpus)?, &cfg)?;
            write_paraphraser(&model, &logs, &output, log.as_deref())?;
        }
        Command::Augment { corpus, output } => {
            let pairs: Vec<CorpusPair> = read_jsonl(&corpus)?;
            let out = augment_corpus(&pairs, &cfg)?;
            write_jsonl(&output, &out)?;
            println!("{} original and {} augmented pairs", pairs.len(), out.len() - pairs.len());
        }
        Command::Simplify { input, corpus, partition, ranker, paraphraser, delsplit, mode, cp, no_paraphrase, output } => {
            if let Some(m) = mode {
                cfg.control.mode = m.parse::<Mode>()?;
            }
            if let Some(c) = cp {
                cfg.control.cp = CopyConstraint::new(c)?;
            }
            if no_paraphrase {
                cfg.control.paraphrase = false;
            }
            let sources: Vec<TokenSeq> = match (input, corpus) {
                (Some(path), _) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    text.lines().map(tokenize).collect::<simplify::Result<_>>()?
                }
                (None, Some(path)) => {
                    load_partition(&CorpusArgs { corpus: path, partition })?.into_iter().map(|p| p.complex).collect()
                }
                (None, None) => bail!("one of --input or --corpus is required"),
            };
            let models = Models {
                ranker: ranker.as_deref().map(load_ranker).transpose()?,
                paraphraser: paraphraser.as_deref().map(load_paraphraser).transpose()?,
                delsplit: delsplit.as_deref().map(load_paraphraser).transpose()?,
            };
            let (results, stats) = simplify_corpus(&sources, &models, &cfg)?;
            let text: String = results.iter().map(|r| format!("{}\n", r.output)).collect();
            write_atomic(&output, text.as_bytes())?;
            println!(
                "{} sentences, {} mode fallbacks, {} decoding fallbacks",
                stats.sentences, stats.mode_fallbacks, stats.decode_fallbacks
            );
        }
        Command::Evaluate { corpus, outputs, system, per_sentence } => {
            let rows = load_partition(&corpus)?;
            let outs = read_outputs(&outputs, rows.len())?;
            let eval = eval_rows(&rows, outs);
            if let Some(path) = per_sentence {
                let records = eval
                    .iter()
                    .map(|r| sari(&r.source, &r.output, &r.references))
                    .collect::<simplify::Result<Vec<_>>>()?;
                write_jsonl(&path, &records)?;
            }
            let report = corpus_report(&system, &eval)?;
            print!("{}", format_table(std::slice::from_ref(&report)));
        }
        Command::Report { corpus, systems, json } => {
            let rows = load_partition(&corpus)?;
            let mut reports: Vec<EvalReport> = Vec::new();
            for spec in &systems {
                let Some((name, path)) = spec.split_once('=') else {
                    bail!("--system expects name=path, got {spec:?}");
                };
                let outs = read_outputs(Path::new(path), rows.len())?;
                reports.push(corpus_report(name, &eval_rows(&rows, outs))?);
            }
            print!("{}", format_table(&reports));
            if let Some(path) = json {
                write_jsonl(&path, &reports)?;
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
