use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use docfs::corpus::{
    build_vsm_with, load_corpus, read_labels, read_vocabulary, read_vsm_triplets, reduce_vsm, write_labels,
    write_vocabulary, write_vsm_triplets, CorpusFormat, IdfBase, Preprocessor, StopList,
};
use docfs::harness::{
    compare_arms, load_space, read_summary, run_bench_on, select_features, write_comparison_csv, Algorithm,
    ArmSamples, ExperimentConfig, SearchParams, DEFAULT_ALPHA,
};
use docfs::kmeans::{run_kmeans, DEFAULT_MAX_ITER};
use docfs::metrics::evaluate;
use docfs::optcore::FeatureMask;
use docfs::{Error, Result};

#[derive(Parser)]
#[command(name = "docfs", version, about = "Text feature selection with TLBO-GWO and cosine K-means")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build vocabulary, TF-IDF matrix and labels from a corpus.
    Preprocess {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "dirs")]
        format: CorpusFormat,
        /// Stop-word file replacing the bundled SMART list.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select features from a TF-IDF matrix.
    Select {
        #[arg(long)]
        vsm: PathBuf,
        /// Vocabulary file; when given, the selected terms are written too.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, default_value = "tlbo-gwo")]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 30)]
        pop: usize,
        #[arg(long, default_value_t = 0.08)]
        pmax: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster a TF-IDF matrix, optionally restricted to a feature mask.
    Cluster {
        #[arg(long)]
        vsm: PathBuf,
        /// File holding a 0/1 mask string.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Assignment file, one cluster index per line.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an assignment against labels.
    Evaluate {
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        reduction_ratio: f64,
        /// Metrics JSON file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full multi-run experiment for one or more arms.
    Bench(BenchArgs),
    /// Compare arm summaries; the first summary is the proposed arm.
    Compare {
        #[arg(long = "summary", required = true, num_args = 1..)]
        summaries: Vec<PathBuf>,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    format: Option<CorpusFormat>,
    /// One arm, or a comma-separated list whose first entry is the proposed arm.
    #[arg(long, value_delimiter = ',')]
    algorithm: Vec<Algorithm>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    pmax: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    kmeans_max_iter: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::InvalidArgument(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn preprocess(corpus: &Path, format: CorpusFormat, stopwords: Option<&Path>, out: &Path) -> Result<()> {
    let docs = load_corpus(corpus, format)?;
    let stoplist = match stopwords {
        Some(p) => StopList::from_file(p)?,
        None => StopList::smart(),
    };
    let space = build_vsm_with(&docs, &Preprocessor::new(stoplist), IdfBase::Natural)?;
    create_dir(out)?;
    write_vocabulary(&space.vocabulary, &out.join("vocab.txt"))?;
    write_vsm_triplets(&space.matrix, &out.join("vsm.csv"))?;
    write_labels(&space.labels, &out.join("labels.txt"))?;
    println!("{} documents, {} terms", space.matrix.n(), space.matrix.t());
    Ok(())
}

fn select(
    vsm: &Path,
    vocab: Option<&Path>,
    algorithm: Algorithm,
    params: SearchParams,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let matrix = read_vsm_triplets(vsm)?;
    let selection = select_features(&matrix, algorithm, params, seed)?
        .ok_or_else(|| Error::InvalidArgument("algorithm 'none' selects nothing".into()))?;
    create_dir(out)?;
    write_file(&out.join("mask.txt"), &format!("{}\n", selection.global_mask))?;
    if let Some(vocab) = vocab {
        let terms = read_vocabulary(vocab)?.select(&selection.global_mask)?;
        write_file(&out.join("selected_terms.txt"), &terms.iter().map(|t| format!("{t}\n")).collect::<String>())?;
    }
    let mut per_document = Vec::new();
    for doc in &selection.per_document {
        let id = matrix.doc_ids()[doc.doc_index];
        let mut csv = String::from("iter,best,mean\n");
        for (it, p) in doc.trace.iter().enumerate() {
            csv.push_str(&format!("{it},{},{}\n", p.best, p.mean));
        }
        write_file(&out.join(format!("convergence_{id}.csv")), &csv)?;
        per_document.push(serde_json::json!({ "doc": id, "best_fitness": doc.best_fitness }));
    }
    let record = serde_json::json!({
        "t": matrix.t(),
        "popcount": selection.global_mask.count_ones(),
        "reduction_ratio": selection.reduction_ratio,
        "per_document": per_document,
    });
    write_file(&out.join("selection.json"), &to_json(&record))?;
    println!(
        "selected {} of {} features (reduction ratio {:.4})",
        selection.global_mask.count_ones(),
        matrix.t(),
        selection.reduction_ratio
    );
    Ok(())
}

fn cluster(vsm: &Path, mask: Option<&Path>, k: usize, max_iter: usize, out: &Path) -> Result<()> {
    let mut matrix = read_vsm_triplets(vsm)?;
    if let Some(mask) = mask {
        let mask = FeatureMask::parse(read_file(mask)?.trim())?;
        matrix = reduce_vsm(&matrix, &mask)?;
    }
    let model = run_kmeans(&matrix, k, max_iter)?;
    let text: String = model.assignment.iter().map(|c| format!("{c}\n")).collect();
    write_file(out, &text)?;
    println!("{} documents in {k} clusters after {} iterations", matrix.n(), model.iterations_run);
    Ok(())
}

fn evaluate_cmd(assignment: &Path, labels: &Path, ratio: f64, out: Option<&Path>) -> Result<()> {
    let assignment: Vec<usize> = read_file(assignment)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Malformed {
                location: format!("{}:{}", assignment.display(), i + 1),
                message: format!("'{l}' is not a cluster index"),
            })
        })
        .collect::<Result<_>>()?;
    let labels = read_labels(labels)?;
    let report = evaluate(&assignment, &labels, ratio)?;
    let json = to_json(&report);
    match out {
        Some(p) => write_file(p, &json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::from_json_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.corpus {
        config.corpus = v;
    }
    if let Some(v) = args.format {
        config.format = v;
    }
    if let Some(v) = args.iters {
        config.iter_max = v;
    }
    if let Some(v) = args.pop {
        config.pop_size = v;
    }
    if let Some(v) = args.pmax {
        config.p_max = v;
    }
    if args.k.is_some() {
        config.k = args.k;
    }
    if let Some(v) = args.kmeans_max_iter {
        config.kmeans_max_iter = v;
    }
    if let Some(v) = args.runs {
        config.runs = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if args.out.is_some() {
        config.out = args.out;
    }
    let out = config
        .out
        .clone()
        .ok_or_else(|| Error::InvalidArgument("an output directory is required (--out)".into()))?;
    if config.corpus.as_os_str().is_empty() {
        return Err(Error::InvalidArgument("a corpus is required (--corpus)".into()));
    }
    let arms = if args.algorithm.is_empty() {
        vec![config.algorithm]
    } else {
        args.algorithm
    };

    let space = load_space(&config)?;
    if arms.len() == 1 {
        config.algorithm = arms[0];
        let outcome = run_bench_on(&space, &config, &out)?;
        print_summary(&outcome.summary);
        return Ok(());
    }
    let mut samples = Vec::new();
    for arm in &arms {
        let arm_config = ExperimentConfig {
            algorithm: *arm,
            ..config.clone()
        };
        let outcome = run_bench_on(&space, &arm_config, &out.join(arm.name()))?;
        print_summary(&outcome.summary);
        samples.push(ArmSamples::from(&outcome.summary));
    }
    let rows = compare_arms(&config.dataset_name(), &samples[0], &samples[1..], DEFAULT_ALPHA)?;
    write_comparison_csv(&out.join("comparison.csv"), &rows)
}

fn print_summary(s: &docfs::harness::Summary) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(
        stdout,
        "{:<9} accuracy {:.4}  precision {:.4}  recall {:.4}  F {:.4}  reduction {:.4}",
        s.settings.algorithm.name(),
        s.mean.accuracy,
        s.mean.precision,
        s.mean.recall,
        s.mean.f_measure,
        s.mean.reduction_ratio
    );
}

fn compare(summaries: &[PathBuf], dataset: Option<String>, out: &Path) -> Result<()> {
    let loaded = summaries.iter().map(|p| read_summary(p)).collect::<Result<Vec<_>>>()?;
    let samples: Vec<ArmSamples> = loaded.iter().map(ArmSamples::from).collect();
    let dataset = dataset.unwrap_or_else(|| loaded[0].dataset.clone());
    let rows = compare_arms(&dataset, &samples[0], &samples[1..], DEFAULT_ALPHA)?;
    write_comparison_csv(out, &rows)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            corpus,
            format,
            stopwords,
            out,
        } => preprocess(&corpus, format, stopwords.as_deref(), &out),
        Command::Select {
            vsm,
            vocab,
            algorithm,
            iters,
            pop,
            pmax,
            seed,
            out,
        } => select(
            &vsm,
            vocab.as_deref(),
            algorithm,
            SearchParams {
                iter_max: iters,
                pop_size: pop,
                p_max: pmax,
            },
            seed,
            &out,
        ),
        Command::Cluster {
            vsm,
            mask,
            k,
            max_iter,
            out,
        } => cluster(&vsm, mask.as_deref(), k, max_iter, &out),
        Command::Evaluate {
            assignment,
            labels,
            reduction_ratio,
            out,
        } => evaluate_cmd(&assignment, &labels, reduction_ratio, out.as_deref()),
        Command::Bench(args) => bench(args),
        Command::Compare { summaries, dataset, out } => compare(&summaries, dataset, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
