use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use exparse::chart::{decode_eager, decode_hybrid, ScoreTables};
use exparse::corpus::{evaluate, read_conll_with, write_conll, ParseTree, PunctRule, Sentence};
use exparse::neural::{Dims, FeatureSet, ScorerKind, TrainMode};
use exparse::par::map_batch;
use exparse::selftest::{run_selftest, SelftestOptions};
use exparse::train::{ensemble_parse, train as train_model, Parser, TrainConfig};
use exparse::transition::SystemKind;

use crate::{require_file, CliError, CliResult};

fn parse_system(s: &str) -> Result<Option<SystemKind>, CliError> {
    match s {
        "standard" => Ok(Some(SystemKind::ArcStandard)),
        "hybrid" => Ok(Some(SystemKind::ArcHybrid)),
        "eager" => Ok(Some(SystemKind::ArcEager)),
        "edge-factored" => Ok(None),
        other => Err(CliError::Usage(format!(
            "unknown system `{other}` (expected standard|hybrid|eager|edge-factored)"
        ))),
    }
}

fn parse_punct(s: &str) -> Result<PunctRule, CliError> {
    s.parse::<PunctRule>()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn check_pos_column(col: usize) -> Result<usize, CliError> {
    if col == 4 || col == 5 {
        Ok(col)
    } else {
        Err(CliError::Usage(format!("--pos-column must be 4 or 5, got {col}")))
    }
}

fn read_treebank(path: &PathBuf, what: &str, pos_column: usize) -> Result<Vec<Sentence>, CliError> {
    require_file(path, what)?;
    let reader = BufReader::new(File::open(path)?);
    read_conll_with(reader, pos_column).map_err(|e| CliError::Runtime(format!("{what}: {e}")))
}

#[derive(Args)]
pub struct TrainArgs {
    /// Transition system or the edge-factored graph model.
    #[arg(long)]
    system: String,
    /// local (greedy decoding) or global (exact decoding).
    #[arg(long)]
    mode: String,
    /// Number of positional features (1-4); exact decoding requires 2.
    #[arg(long, default_value_t = 2)]
    features: usize,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Optional text file with pretrained word vectors.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Punctuation convention for development UAS (ptb|ctb).
    #[arg(long, default_value = "ptb")]
    punct: String,
    /// Metrics log path (defaults to <out>.metrics).
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    lstm_dropout: f64,
    #[arg(long, default_value_t = 0.0)]
    mlp_dropout: f64,
    /// Stop early once development UAS reaches this value.
    #[arg(long)]
    stop_at_dev_uas: Option<f64>,
    /// CoNLL column holding the POS tag (4 or 5).
    #[arg(long, default_value_t = 4)]
    pos_column: usize,
}

pub fn train(args: TrainArgs) -> CliResult {
    let system = parse_system(&args.system)?;
    let mode = match args.mode.as_str() {
        "local" => TrainMode::Local,
        "global" => TrainMode::Global,
        other => return Err(CliError::Usage(format!("unknown mode `{other}` (expected local|global)"))),
    };
    let punct = parse_punct(&args.punct)?;
    let scorer = match system {
        None => {
            if mode == TrainMode::Local {
                return Err(CliError::Usage(
                    "the edge-factored model is trained globally; use --mode global".into(),
                ));
            }
            ScorerKind::BiaffineEdge
        }
        Some(system) => {
            let features = FeatureSet::from_positions(args.features)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            if mode == TrainMode::Global && system == SystemKind::ArcStandard {
                return Err(CliError::Usage(
                    "global training is unsupported for arc-standard (no O(n^3) exact decoder)"
                        .into(),
                ));
            }
            if mode == TrainMode::Global && features != FeatureSet::S0B0 {
                return Err(CliError::Usage(
                    "global training requires --features 2 (the {s0, b0} set)".into(),
                ));
            }
            ScorerKind::TransitionMlp { system, features }
        }
    };

    if let Some(path) = &args.embeddings {
        require_file(path, "--embeddings")?;
    }
    let pos_column = check_pos_column(args.pos_column)?;
    let train_set = read_treebank(&args.train, "--train", pos_column)?;
    let dev_set = read_treebank(&args.dev, "--dev", pos_column)?;

    let mut cfg = TrainConfig::new(scorer, mode);
    cfg.epochs = args.epochs;
    cfg.seed = args.seed;
    cfg.punct = punct;
    cfg.dims = Dims::default();
    cfg.lstm_dropout = args.lstm_dropout;
    cfg.mlp_dropout = args.mlp_dropout;
    cfg.stop_at_dev_uas = args.stop_at_dev_uas;
    cfg.pretrained_embeddings = args.embeddings.clone();
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let outcome = train_model(&train_set, &dev_set, &cfg)?;
    if outcome.skipped_non_projective > 0 {
        eprintln!(
            "skipped {} non-projective training sentence(s)",
            outcome.skipped_non_projective
        );
    }
    let metrics_path = args
        .metrics
        .unwrap_or_else(|| PathBuf::from(format!("{}.metrics", args.out.display())));
    let mut log = BufWriter::new(File::create(&metrics_path)?);
    for row in &outcome.metrics {
        writeln!(log, "{row}")?;
    }
    log.flush()?;
    outcome.parser.save(&args.out)?;
    println!(
        "best dev UAS {:.4} at epoch {} -> {}",
        outcome.best_dev_uas,
        outcome.best_epoch,
        args.out.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct ParseArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// CoNLL column holding the POS tag (4 or 5).
    #[arg(long, default_value_t = 4)]
    pos_column: usize,
}

pub fn parse(args: ParseArgs) -> CliResult {
    require_file(&args.model, "--model")?;
    let pos_column = check_pos_column(args.pos_column)?;
    let sentences = read_treebank(&args.input, "--input", pos_column)?;
    let parser = Parser::load(&args.model)?;
    let trees = parser.parse_batch(&sentences)?;
    let mut out = BufWriter::new(File::create(&args.output)?);
    write_conll(&trees, &sentences, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Args)]
pub struct EvalArgs {
    /// Parsed file whose HEAD column is scored.
    #[arg(long)]
    pred: PathBuf,
    /// Gold treebank.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value = "ptb")]
    punct: String,
    /// CoNLL column holding the POS tag (4 or 5).
    #[arg(long, default_value_t = 4)]
    pos_column: usize,
}

pub fn eval(args: EvalArgs) -> CliResult {
    let punct = parse_punct(&args.punct)?;
    let pos_column = check_pos_column(args.pos_column)?;
    let pred = read_treebank(&args.pred, "--pred", pos_column)?;
    let gold = read_treebank(&args.gold, "--gold", pos_column)?;
    let trees: Vec<ParseTree> = pred
        .iter()
        .map(|s| s.gold_tree())
        .collect::<exparse::Result<_>>()
        .map_err(|e| CliError::Runtime(format!("--pred: {e}")))?;
    let report = evaluate(&trees, &gold, punct)?;
    println!("UAS {:.2} UEM {:.2}", report.uas * 100.0, report.uem * 100.0);
    Ok(())
}

#[derive(Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 6)]
    max_n: usize,
    #[arg(long, default_value_t = 20)]
    draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Test hook: corrupt a score table to prove the harness catches it.
    #[arg(long, hide = true)]
    inject_corruption: bool,
}

pub fn selftest(args: SelftestArgs) -> CliResult {
    let opts = SelftestOptions {
        max_n: args.max_n,
        draws: args.draws,
        seed: args.seed,
        inject_corruption: args.inject_corruption,
    };
    let results = run_selftest(&opts);
    let mut all_ok = true;
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        all_ok &= r.passed;
    }
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Runtime("selftest failed".into()))
    }
}

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated sentence lengths.
    #[arg(long, default_value = "50,100,200,400", value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Emit machine-readable rows.
    #[arg(long)]
    json: bool,
}

pub fn bench(args: BenchArgs) -> CliResult {
    if args.sizes.is_empty() {
        return Err(CliError::Usage("--sizes needs at least one length".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut rows: Vec<(usize, f64, f64)> = Vec::new(); // n, hybrid ms, eager ms
    for &n in &args.sizes {
        if n < 1 {
            return Err(CliError::Usage("sizes must be >= 1".into()));
        }
        let hybrid = ScoreTables::random(SystemKind::ArcHybrid, n, &mut rng, -1.0, 1.0);
        let eager = ScoreTables::random(SystemKind::ArcEager, n, &mut rng, -1.0, 1.0);
        let mut hybrid_ms = 0.0;
        let mut eager_ms = 0.0;
        for _ in 0..args.reps.max(1) {
            let t0 = Instant::now();
            std::hint::black_box(decode_hybrid(&hybrid)?);
            hybrid_ms += t0.elapsed().as_secs_f64() * 1e3;
            let t0 = Instant::now();
            std::hint::black_box(decode_eager(&eager)?);
            eager_ms += t0.elapsed().as_secs_f64() * 1e3;
        }
        rows.push((n, hybrid_ms / args.reps.max(1) as f64, eager_ms / args.reps.max(1) as f64));
    }
    if args.json {
        for &(n, h, e) in &rows {
            println!(
                "{}",
                serde_json::json!({ "n": n, "hybrid_ms": h, "eager_ms": e })
            );
        }
    } else {
        println!("{:>6} {:>14} {:>14}", "n", "hybrid (ms)", "eager (ms)");
        for &(n, h, e) in &rows {
            println!("{n:>6} {h:>14.3} {e:>14.3}");
        }
    }
    for pair in rows.windows(2) {
        let (n1, h1, e1) = pair[0];
        let (n2, h2, e2) = pair[1];
        if n2 == 2 * n1 {
            let line = format!(
                "doubling {}->{}: hybrid x{:.2} eager x{:.2}",
                n1,
                n2,
                h2 / h1,
                e2 / e1
            );
            if args.json {
                println!(
                    "{}",
                    serde_json::json!({ "doubling": [n1, n2], "hybrid_ratio": h2 / h1, "eager_ratio": e2 / e1 })
                );
            } else {
                println!("{line}");
            }
        }
    }
    Ok(())
}

#[derive(Args)]
pub struct EnsembleArgs {
    /// Comma-separated checkpoint paths.
    #[arg(long, value_delimiter = ',')]
    models: Vec<PathBuf>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// CoNLL column holding the POS tag (4 or 5).
    #[arg(long, default_value_t = 4)]
    pos_column: usize,
}

pub fn ensemble(args: EnsembleArgs) -> CliResult {
    if args.models.is_empty() {
        return Err(CliError::Usage("--models needs at least one checkpoint".into()));
    }
    for m in &args.models {
        require_file(m, "--models")?;
    }
    let pos_column = check_pos_column(args.pos_column)?;
    let sentences = read_treebank(&args.input, "--input", pos_column)?;
    let parsers: Vec<Parser> = args
        .models
        .iter()
        .map(|p| Parser::load(p))
        .collect::<exparse::Result<_>>()?;
    let trees: Vec<ParseTree> = map_batch(&sentences, |s| ensemble_parse(&parsers, s))
        .into_iter()
        .collect::<exparse::Result<_>>()?;
    let mut out = BufWriter::new(File::create(&args.output)?);
    write_conll(&trees, &sentences, &mut out)?;
    out.flush()?;
    Ok(())
}
