use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use compsent::corpus::{dataset_stats, filter_by_confidence, load_dataset, ColumnMap, Dataset, InputFormat};
use compsent::eval::{compute_metrics_by_domain, error_report};
use compsent::experiment::{run_experiment, EvalMode, ExperimentConfig};
use compsent::features::load_embeddings;
use compsent::mine::{
    apply_stoplist, build_index, generate_pairs, query_all, read_items_tsv, read_sentences_tsv, sample_candidates,
    write_candidates_jsonl, PairResults, SentenceIndex, TargetPair,
};
use compsent::pipeline::{deserialize_pipeline, fit_pipeline, serialize_pipeline, usable_sentences, Resources};
use compsent::rules::{load_cue_lexicon, CueLexicon};
use compsent::Error;

/// Comparative sentence classification over item pairs.
#[derive(Parser)]
#[command(name = "compsent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus file and write it back as normalized JSONL.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Label counts per domain.
    Stats {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        markdown: bool,
    },
    /// Fit the configured pipeline on the whole dataset and save it.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Predict labels with a saved model; writes CSV.
    Predict {
        #[arg(long, short)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Defaults to stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Score a saved model against a labelled dataset.
    Evaluate {
        #[arg(long, short)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the configured experiment in cross-validation mode.
    Cv(ConfigArgs),
    /// Run the configured experiment as a cross-domain matrix.
    CrossDomain(ConfigArgs),
    /// Run the cue-lexicon rule baseline.
    Baseline(ConfigArgs),
    /// Run the experiment exactly as configured.
    Run(ConfigArgs),
    /// Corpus construction tools.
    #[command(subcommand)]
    Mine(MineCommand),
    /// Collect the markdown reports in an output directory into one document.
    Report {
        dir: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MineCommand {
    /// Build an index from an `id<TAB>sentence` file.
    Index {
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Generate item pairs from a `name<TAB>type` file.
    Pairs {
        #[arg(long)]
        items: PathBuf,
        /// One item per line; pairs naming a listed item are dropped.
        #[arg(long)]
        stoplist: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Query every pair against an index, with and without cue words.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        /// Cue lexicon file; defaults to the shipped lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Sample annotation candidates from query results.
    Sample {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = 100)]
        min_support: usize,
        #[arg(long, default_value_t = 0.9)]
        cue_bias: f64,
        #[arg(long, default_value_t = 2500)]
        sample_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Corpus file (JSONL or CSV).
    #[arg(long, short)]
    input: PathBuf,
    /// jsonl or csv; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// CSV column override, `field=column`.
    #[arg(long = "column")]
    columns: Vec<String>,
    #[arg(long)]
    min_confidence: Option<f64>,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment config.
    #[arg(long, short)]
    config: PathBuf,
    /// Override a config key, e.g. `--set pipeline.scope=full`.
    #[arg(long = "set")]
    overrides: Vec<String>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 2,
        Some(
            Error::Record { .. }
            | Error::UnknownLabel(_)
            | Error::EmptyDataset
            | Error::DuplicateId(_)
            | Error::Format { .. }
            | Error::Lexicon(_)
            | Error::ModelFormat(_)
            | Error::EmptyEmbeddings
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_),
        ) => 3,
        Some(_) => 4,
        None if err.downcast_ref::<io::Error>().is_some() => 3,
        None => 4,
    }
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var("COMPSENT_WORKERS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(vec![format!("COMPSENT_WORKERS: `{v}` is not a count")]))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(Error::from).with_context(|| path.display().to_string())?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::from)?;
    }
    Ok(BufWriter::new(File::create(path).map_err(Error::from).with_context(|| path.display().to_string())?))
}

fn load_data(args: &DataArgs) -> Result<Dataset> {
    let csv = match args.format.as_deref().map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => true,
        Some("jsonl") => false,
        Some(other) => return Err(Error::Config(vec![format!("--format: unknown format `{other}`")]).into()),
        None => args.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    };
    let format = if csv {
        let mut map = ColumnMap::default();
        for c in &args.columns {
            map = map.with_override(c).map_err(|e| Error::Config(vec![format!("--column: {e}")]))?;
        }
        InputFormat::Csv(map)
    } else {
        InputFormat::Jsonl
    };
    let ds = load_dataset(open(&args.input)?, &format).with_context(|| args.input.display().to_string())?;
    Ok(match args.min_confidence {
        Some(c) => filter_by_confidence(&ds, c)?,
        None => ds,
    })
}

fn resources(embeddings: &Option<PathBuf>) -> Result<Resources> {
    Ok(Resources {
        embeddings: match embeddings {
            Some(p) => Some(Arc::new(load_embeddings(open(p)?)?)),
            None => None,
        },
    })
}

fn load_config(args: &ConfigArgs, mode: Option<EvalMode>) -> Result<ExperimentConfig> {
    let mut overrides = args.overrides.clone();
    if let Some(m) = mode {
        overrides.push(format!("eval.mode={m}"));
    }
    Ok(ExperimentConfig::load(&args.config, &overrides)?)
}

fn experiment(args: &ConfigArgs, mode: Option<EvalMode>) -> Result<()> {
    let cfg = load_config(args, mode)?;
    let outcome = run_experiment(&cfg)?;
    println!("{}", outcome.summary);
    for f in &outcome.files {
        println!("  {}", cfg.output_dir.join(f).display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { data, output } => {
            let ds = load_data(&data)?;
            ds.write_jsonl(create(&output)?)?;
            let stats = dataset_stats(&ds);
            eprintln!("{} sentences written to {}", stats.total(), output.display());
            print!("{}", stats.to_csv());
        }
        Command::Stats { data, markdown } => {
            let stats = dataset_stats(&load_data(&data)?);
            if markdown {
                print!("{}", stats.to_markdown());
            } else {
                print!("{}", stats.to_csv());
            }
        }
        Command::Train { config, output } => {
            let cfg = load_config(&config, None)?;
            cfg.check_files()?;
            let mut ds = cfg.load_data()?;
            if cfg.pipeline.needs_targets() {
                let (usable, diag) = usable_sentences(&ds);
                if !diag.excluded.is_empty() {
                    eprintln!("excluded {} sentences with unlocatable targets", diag.excluded.len());
                }
                ds = usable;
            }
            let fitted = fit_pipeline(&cfg.pipeline, &ds, &cfg.resources()?)?;
            create(&output)?.write_all(&serialize_pipeline(&fitted)?)?;
            eprintln!("trained on {} sentences, model written to {}", ds.len(), output.display());
        }
        Command::Predict {
            model,
            data,
            embeddings,
            output,
        } => {
            let fitted = deserialize_pipeline(&fs::read(&model).map_err(Error::from)?, &resources(&embeddings)?)?;
            let mut ds = load_data(&data)?;
            if fitted.spec().needs_targets() {
                let (usable, diag) = usable_sentences(&ds);
                for (id, reason) in &diag.excluded {
                    eprintln!("skipped {id}: {reason}");
                }
                ds = usable;
            }
            let mut out: Box<dyn Write> = match &output {
                Some(p) => Box::new(create(p)?),
                None => Box::new(io::stdout().lock()),
            };
            writeln!(out, "id,predicted,p_none,p_better,p_worse")?;
            for s in ds.sentences() {
                let (label, p) = fitted.predict_sentence(s)?;
                writeln!(out, "{},{label},{:.6},{:.6},{:.6}", csv_field(&s.id), p[0], p[1], p[2])?;
            }
            out.flush()?;
        }
        Command::Evaluate {
            model,
            data,
            embeddings,
            out_dir,
        } => {
            let fitted = deserialize_pipeline(&fs::read(&model).map_err(Error::from)?, &resources(&embeddings)?)?;
            let mut ds = load_data(&data)?;
            fs::create_dir_all(&out_dir).map_err(Error::from)?;
            if fitted.spec().needs_targets() {
                let (usable, diag) = usable_sentences(&ds);
                fs::write(out_dir.join("diagnostics.csv"), diag.to_csv()).map_err(Error::from)?;
                ds = usable;
            }
            let pred = fitted.predict_dataset(&ds)?;
            let domains: Vec<&str> = ds.sentences().iter().map(|s| s.domain.as_str()).collect();
            let report = compute_metrics_by_domain(&ds.labels(), &pred, &domains)?;
            let errors = error_report(&ds, &pred)?;
            fs::write(out_dir.join("report.csv"), report.to_csv()).map_err(Error::from)?;
            fs::write(out_dir.join("report.md"), report.to_markdown()).map_err(Error::from)?;
            fs::write(out_dir.join("errors.csv"), errors.entries_csv()).map_err(Error::from)?;
            fs::write(out_dir.join("error_groups.csv"), errors.groups_csv()).map_err(Error::from)?;
            println!("micro-F1 {:.4} on {} sentences", report.micro_f1, ds.len());
        }
        Command::Cv(args) => experiment(&args, Some(EvalMode::Cv))?,
        Command::CrossDomain(args) => experiment(&args, Some(EvalMode::CrossDomain))?,
        Command::Baseline(args) => experiment(&args, Some(EvalMode::Baseline))?,
        Command::Run(args) => experiment(&args, None)?,
        Command::Mine(cmd) => mine(cmd)?,
        Command::Report { dir, output } => {
            let doc = collect_reports(&dir)?;
            match output {
                Some(p) => create(&p)?.write_all(doc.as_bytes())?,
                None => print!("{doc}"),
            }
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn collect_reports(dir: &Path) -> Result<String> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(Error::from)
        .with_context(|| dir.display().to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "md"))
        .collect();
    names.sort();
    if names.is_empty() {
        bail!(Error::Format {
            line: 0,
            message: format!("no markdown reports in {}", dir.display())
        });
    }
    let mut doc = String::new();
    if let Ok(summary) = fs::read_to_string(dir.join("summary.txt")) {
        doc.push_str(&format!("# {}\n\n", summary.trim()));
    }
    for p in names {
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        doc.push_str(&format!("## {stem}\n\n{}\n", fs::read_to_string(&p).map_err(Error::from)?));
    }
    Ok(doc)
}

fn read_lines(path: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for line in open(path)?.lines() {
        let line = line.map_err(Error::from)?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.insert(t.to_lowercase());
        }
    }
    Ok(out)
}

fn read_index(path: &Path) -> Result<SentenceIndex> {
    Ok(serde_json::from_reader(open(path)?).map_err(Error::from)?)
}

fn mine(cmd: MineCommand) -> Result<()> {
    match cmd {
        MineCommand::Index { sentences, output } => {
            let rows = read_sentences_tsv(open(&sentences)?)?;
            let index = build_index(rows)?;
            serde_json::to_writer(create(&output)?, &index).map_err(Error::from)?;
            eprintln!("indexed {} sentences", index.len());
        }
        MineCommand::Pairs {
            items,
            stoplist,
            output,
        } => {
            let mut pairs = generate_pairs(&read_items_tsv(open(&items)?)?);
            if let Some(p) = stoplist {
                pairs = apply_stoplist(pairs, &read_lines(&p)?);
            }
            let mut out = create(&output)?;
            for p in &pairs {
                writeln!(out, "{}\t{}\t{}", p.item_a, p.item_b, p.pair_type)?;
            }
            out.flush()?;
            eprintln!("{} pairs", pairs.len());
        }
        MineCommand::Query {
            index,
            pairs,
            lexicon,
            output,
        } => {
            let index = read_index(&index)?;
            let mut list = Vec::new();
            for (n, line) in open(&pairs)?.lines().enumerate() {
                let line = line.map_err(Error::from)?;
                if line.trim().is_empty() {
                    continue;
                }
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() != 3 {
                    bail!(Error::Format {
                        line: n + 1,
                        message: "expected item_a<TAB>item_b<TAB>type".into()
                    });
                }
                list.push(TargetPair {
                    item_a: f[0].into(),
                    item_b: f[1].into(),
                    pair_type: f[2].into(),
                });
            }
            let lex = match lexicon {
                Some(p) => load_cue_lexicon(open(&p)?)?,
                None => CueLexicon::default_lexicon(),
            };
            let cues: BTreeSet<String> = lex.better_words().iter().chain(lex.worse_words()).cloned().collect();
            let results = query_all(&index, &list, &cues);
            let mut out = create(&output)?;
            for r in &results {
                serde_json::to_writer(&mut out, r).map_err(Error::from)?;
                writeln!(out)?;
            }
            out.flush()?;
        }
        MineCommand::Sample {
            index,
            results,
            min_support,
            cue_bias,
            sample_size,
            seed,
            output,
        } => {
            let index = read_index(&index)?;
            let mut list: Vec<PairResults> = Vec::new();
            for (n, line) in open(&results)?.lines().enumerate() {
                let line = line.map_err(Error::from)?;
                if line.trim().is_empty() {
                    continue;
                }
                list.push(serde_json::from_str(&line).map_err(|e| Error::Format {
                    line: n + 1,
                    message: e.to_string(),
                })?);
            }
            let sample = sample_candidates(&list, min_support, cue_bias, sample_size, seed)?;
            write_candidates_jsonl(&index, &sample, create(&output)?)?;
            eprintln!(
                "{} candidates from {} pairs{}",
                sample.candidates.len(),
                sample.pairs_kept,
                if sample.exhausted { " (fewer than requested)" } else { "" }
            );
        }
    }
    Ok(())
}
