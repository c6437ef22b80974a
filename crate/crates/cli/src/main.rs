mod config;
mod error;

use std::fs;
use std::io::Write;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sacc::attention::Pattern;
use sacc::bench;
use sacc::cfront::{ast_to_json, parse_source};
use sacc::model::SaccModel;
use sacc::tensor::Graph;
use sacc::train::{self, Dataset, Split};
use sacc::treesplit::{adjacency, adjacency_closure, split, split_to_json, StatementSequence};
use serde_json::json;

use config::RunConfig;
use error::{classify, CliError};

#[derive(Parser)]
#[command(name = "sacc", version, about = "Sparse-attention classifier for C programs")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// JSON run configuration with `model` and `train` sections.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `train.seed`, which also seeds split assignment.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Config override such as `model.window=5` or `epochs=10`.
    #[arg(long = "set", global = true, value_name = "K=V")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the AST of a C file as JSON.
    Parse { file: PathBuf },
    /// Print the statement trees, parent array and adjacency edges as JSON.
    Split { file: PathBuf },
    /// Train on a manifest or label directory.
    Train {
        manifest: PathBuf,
        /// Directory receiving best.sacc, last.sacc and history.csv.
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Print metrics of a checkpoint on a dataset as JSON.
    Eval {
        checkpoint: PathBuf,
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::All)]
        split: SplitArg,
    },
    /// Print the predicted label and class probabilities for one file.
    Predict { checkpoint: PathBuf, file: PathBuf },
    /// Export one head's attention weights and mask provenance.
    Attn {
        checkpoint: PathBuf,
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        layer: usize,
        #[arg(long, default_value_t = 0)]
        head: usize,
    },
    /// Sparse versus dense timing of the encoder stack, as CSV.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
        lengths: Vec<usize>,
        /// Overrides `model.patterns`.
        #[arg(long, value_delimiter = ',')]
        patterns: Option<Vec<String>>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

fn read_source(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, &e))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn load_sequence(path: &Path) -> Result<StatementSequence> {
    let ast = parse_source(&read_source(path)?)?;
    Ok(split(&ast)?)
}

fn load_checkpoint(path: &Path) -> Result<SaccModel> {
    if !path.exists() {
        return Err(CliError::new("io", format!("{}: no such file", path.display())).into());
    }
    Ok(train::load(path)?)
}

fn cmd_split(cfg: &RunConfig, file: &Path) -> Result<String> {
    let seq = load_sequence(file)?;
    let adj = if cfg.model.adj_closure { adjacency_closure(&seq) } else { adjacency(&seq) };
    Ok(split_to_json(&seq, &adj))
}

fn cmd_train(cfg: &RunConfig, manifest: &Path, out: &Path) -> Result<String> {
    let ds = train::ingest(manifest, cfg.train.seed)?;
    for f in &ds.failures {
        eprintln!("skipped {}: {}", f.id, f.error);
    }
    let outcome = train::train_with(&ds, &cfg.model, &cfg.train, |r| {
        eprintln!("epoch {:>3}  loss {:.6}  val_acc {:.4}", r.epoch, r.train_loss, r.val_accuracy);
    })?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, &e))?;
    let history = out.join("history.csv");
    fs::write(&history, train::history_csv(&outcome.history)).map_err(|e| CliError::io(&history, &e))?;
    let (best, last) = (out.join("best.sacc"), out.join("last.sacc"));
    train::save(&outcome.best, &best)?;
    train::save(&outcome.last, &last)?;
    let [n_train, n_val, n_test] = ds.split_sizes();
    Ok(json!({
        "best_epoch": outcome.best_epoch,
        "epochs": outcome.history.len(),
        "best_checkpoint": best,
        "last_checkpoint": last,
        "history": history,
        "labels": ds.label_names,
        "split_sizes": { "train": n_train, "val": n_val, "test": n_test },
        "failures": ds.failures,
    })
    .to_string())
}

fn cmd_eval(cfg: &RunConfig, checkpoint: &Path, manifest: &Path, which: SplitArg) -> Result<String> {
    let model = load_checkpoint(checkpoint)?;
    let ds = train::ingest(manifest, cfg.train.seed)?;
    let ds = relabel(ds, &model)?;
    let metrics = match which {
        SplitArg::All => train::evaluate_samples(&model, &ds.samples.iter().collect::<Vec<_>>())?,
        SplitArg::Train => train::evaluate(&model, &ds, Split::Train)?,
        SplitArg::Val => train::evaluate(&model, &ds, Split::Val)?,
        SplitArg::Test => train::evaluate(&model, &ds, Split::Test)?,
    };
    Ok(serde_json::to_string(&metrics)?)
}

/// Renumber dataset labels to the checkpoint's label order.
fn relabel(mut ds: Dataset, model: &SaccModel) -> Result<Dataset> {
    for s in &mut ds.samples {
        let name = &ds.label_names[s.label];
        s.label = model
            .label_names
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| CliError::new("label_out_of_range", format!("label `{name}` is unknown to the checkpoint")))?;
    }
    ds.label_names = model.label_names.clone();
    Ok(ds)
}

fn cmd_predict(checkpoint: &Path, file: &Path) -> Result<String> {
    let model = load_checkpoint(checkpoint)?;
    let sample = model.prepare(&load_sequence(file)?)?;
    let probs = model.predict_probs(&sample)?;
    let best = sacc::model::argmax(&probs);
    let map: serde_json::Map<String, serde_json::Value> =
        model.label_names.iter().cloned().zip(probs.iter().map(|&p| json!(p))).collect();
    Ok(json!({ "label": model.label_names[best], "probs": map }).to_string())
}

fn cmd_attn(checkpoint: &Path, file: &Path, layer: usize, head: usize) -> Result<String> {
    let model = load_checkpoint(checkpoint)?;
    let (layers, heads) = (model.config.layers, model.config.heads);
    if layer >= layers || head >= heads {
        return Err(CliError::new(
            "index_out_of_range",
            format!("layer {layer} / head {head} out of range for {layers} layers and {heads} heads"),
        )
        .into());
    }
    let sample = model.prepare(&load_sequence(file)?)?;
    let mut g = Graph::new();
    let fwd = model.forward(&mut g, &[&sample])?;
    let w = fwd.stack.attention[layer][head].weights(&g);
    let weights: Vec<&[f64]> = (0..w.rows()).map(|r| w.row(r)).collect();
    Ok(json!({
        "layer": layer,
        "head": head,
        "labels": sample.tree_labels,
        "weights": weights,
        "mask_provenance": sample.mask.provenance_matrix(),
    })
    .to_string())
}

fn cmd_bench(cfg: &RunConfig, lengths: &[usize], patterns: Option<&[String]>, repeats: usize) -> Result<String> {
    let mut model = cfg.model.clone();
    if let Some(names) = patterns {
        model.patterns = names
            .iter()
            .filter(|n| !n.is_empty())
            .map(|n| Pattern::parse(n).ok_or_else(|| CliError::new("config", format!("unknown pattern `{n}`"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(&n) = lengths.iter().find(|&&n| n == 0) {
        return Err(CliError::new("config", format!("bench lengths must be at least 1, got {n}")).into());
    }
    let rows = bench::run(&model, lengths, repeats, cfg.train.seed)?;
    Ok(bench::to_csv(&rows))
}

fn run(cli: &Cli) -> Result<String> {
    let g = &cli.global;
    let cfg = RunConfig::load(g.config.as_deref(), &g.overrides, g.seed)?;
    match &cli.command {
        Command::Parse { file } => Ok(ast_to_json(&parse_source(&read_source(file)?)?)),
        Command::Split { file } => cmd_split(&cfg, file),
        Command::Train { manifest, out } => cmd_train(&cfg, manifest, out),
        Command::Eval { checkpoint, manifest, split } => cmd_eval(&cfg, checkpoint, manifest, *split),
        Command::Predict { checkpoint, file } => cmd_predict(checkpoint, file),
        Command::Attn { checkpoint, file, layer, head } => cmd_attn(checkpoint, file, *layer, *head),
        Command::Bench { lengths, patterns, repeats } => cmd_bench(&cfg, lengths, patterns.as_deref(), *repeats),
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => return fail(&CliError::new("usage", e.to_string().trim_end())),
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    panic::set_hook(Box::new(|_| {}));
    match panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(text)) => {
            let mut out = std::io::stdout().lock();
            let ends_nl = text.ends_with('\n');
            if write!(out, "{text}").and_then(|_| if ends_nl { Ok(()) } else { writeln!(out) }).is_err() {
                return ExitCode::from(error::EXIT_INPUT);
            }
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => fail(&classify(&e)),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(&CliError::internal(msg))
        }
    }
}
