//! The `pe` command-line driver.
//!
//! Exit codes: 0 on success, 1 on invalid input or arguments, 2 on I/O
//! failure. Settings resolve as command-line flag, then `--config` TOML, then
//! (for the seed) the `PE_SEED` environment variable, then built-in defaults.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::attribution::{
    exact_shapley, mc_shapley, occlusion_vector, ContributionVector, MaskOracle, Strategy, MAX_EXACT_PLAYERS,
};
use crate::evaluation::{
    aopc, evaluate_pe, random_scores, Ablation, AopcReport, BenchConfig, BenchMethod, ExampleInput, ScoreConfig,
};
use crate::geometry::PoincarePoint;
use crate::hierarchy::{build_pe_tree, EdgeConfig};
use crate::io::{
    export_dot, export_json, import_json, load_cache, load_caches_for, load_corpus, load_dataset, load_embeddings,
    load_parses, load_probe, load_toy_for, load_toy_oracles, write_atomic, write_probe, write_synthetic_corpus,
    CorpusExample, DataLayout, DatasetRecord, FormatError, ProbeFile, SyntheticCorpusSpec, TreeExport,
};
use crate::probes::{
    train_semantic, train_syntax, ParsedExample, SemanticProbe, SemanticTrainConfig, SyntaxProbe, SyntaxTrainConfig,
    TokenGeometry,
};
use crate::synth::SentimentSpec;

pub const SEED_ENV: &str = "PE_SEED";

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "pe", version, about = "Hierarchical attribution with hyperbolic probes")]
struct Cli {
    /// TOML file with defaults for any subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a semantic or syntax probe on a data directory.
    ProbeTrain(ProbeTrainArgs),
    /// Build one hierarchy per example and export it.
    Explain(ExplainArgs),
    /// Token contributions for every example.
    Shapley(ShapleyArgs),
    /// AOPC of word-score rankings.
    EvalAopc(EvalArgs),
    /// AOPC with one scoring term removed.
    Ablate(AblateArgs),
    /// Build-time scaling on synthetic instances; CSV output.
    Bench(BenchArgs),
    /// Check one file or a data directory.
    Validate(ValidateArgs),
    /// Write a synthetic data directory.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProbeKind {
    Semantic,
    Syntax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Toy,
    Cache,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShapleyMode {
    Exact,
    Mc,
    Occlusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RankingMethod {
    Pe,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ValidateKind {
    Dataset,
    Embeddings,
    Parses,
    Cache,
    Toy,
    Probe,
    Trees,
    Corpus,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Data directory holding dataset.jsonl and friends.
    #[arg(long)]
    data: PathBuf,
    /// Embedding directory, if not `<data>/embeddings`.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

impl DataArgs {
    fn layout(&self) -> DataLayout {
        let l = DataLayout::new(&self.data);
        match &self.embeddings {
            Some(e) => l.with_embeddings(e),
            None => l,
        }
    }
}

#[derive(Debug, Args)]
struct ProbeTrainArgs {
    #[arg(long, value_enum)]
    kind: ProbeKind,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Output dimension of the probe.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Probe directory; the probe is written to `<out>/<kind>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EdgeArgs {
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Directory with semantic.json and syntax.json.
    #[arg(long)]
    probes: PathBuf,
    #[arg(long, value_enum)]
    oracle: OracleKind,
    #[command(flatten)]
    edge: EdgeArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ShapleyArgs {
    #[arg(long, value_enum)]
    mode: ShapleyMode,
    /// Permutations for `--mode mc`.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    oracle: OracleKind,
    /// Write JSON Lines here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    probes: PathBuf,
    #[arg(long, value_enum)]
    oracle: OracleKind,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    /// Removal percentages, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[command(flatten)]
    edge: EdgeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    score: ScoreArgs,
    #[arg(long, value_enum, default_value = "pe")]
    ranking: RankingMethod,
    /// Seed for `--ranking random`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct AblateArgs {
    /// `full`, `no_prob`, `no_semantic`, `no_syntax`, or `all`.
    #[arg(long)]
    mode: String,
    #[command(flatten)]
    score: ScoreArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    method: BenchMethod,
    /// Sequence lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    edge: EdgeArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    kind: ValidateKind,
    path: PathBuf,
    /// For `--kind cache` and `--kind toy`: the number of tokens expected.
    #[arg(long)]
    n_tokens: Option<usize>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    examples: usize,
    #[arg(long, default_value_t = 8)]
    min_len: usize,
    #[arg(long, default_value_t = 20)]
    max_len: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "del")]
    strategy: Strategy,
    /// Also write full probability caches (needs `--max-len` <= 12).
    #[arg(long)]
    cache: bool,
}

/// Optional defaults read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub semantic: TrainSection,
    #[serde(default)]
    pub syntax: TrainSection,
    #[serde(default)]
    pub edge: EdgeSection,
    #[serde(default)]
    pub score: ScoreSection,
    #[serde(default)]
    pub shapley: ShapleySection,
    #[serde(default)]
    pub bench: BenchSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub dim: Option<usize>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSection {
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSection {
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub k: Option<Vec<f64>>,
    pub strategy: Option<Strategy>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapleySection {
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub repetitions: Option<usize>,
    pub dim: Option<usize>,
}

fn load_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Flag, then config file, then `PE_SEED`, then 0.
fn resolve_seed(flag: Option<u64>, cfg: &FileConfig) -> CliResult<u64> {
    if let Some(s) = flag.or(cfg.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn edge_config(args: &EdgeArgs, cfg: &FileConfig) -> CliResult<EdgeConfig> {
    let d = EdgeConfig::default();
    let e = EdgeConfig::new(
        args.alpha1.or(cfg.edge.alpha1).unwrap_or(d.alpha1),
        args.alpha2.or(cfg.edge.alpha2).unwrap_or(d.alpha2),
    );
    e.validate().map_err(invalid)?;
    Ok(e)
}

fn score_config(args: &ScoreArgs, cfg: &FileConfig) -> CliResult<ScoreConfig> {
    let d = ScoreConfig::default();
    let s = ScoreConfig {
        beta1: args.beta1.or(cfg.score.beta1).unwrap_or(d.beta1),
        beta2: args.beta2.or(cfg.score.beta2).unwrap_or(d.beta2),
        strategy: args.strategy.or(cfg.score.strategy).unwrap_or(d.strategy),
        k_percents: args.k.clone().or_else(|| cfg.score.k.clone()).unwrap_or(d.k_percents),
    };
    s.validate().map_err(invalid)?;
    Ok(s)
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(CliError::from),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialize");
    s.push('\n');
    s
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> CliResult {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::ProbeTrain(a) => probe_train(&a, &cfg, stdout),
        Command::Explain(a) => explain_cmd(&a, &cfg, stdout),
        Command::Shapley(a) => shapley_cmd(&a, &cfg, stdout),
        Command::EvalAopc(a) => eval_cmd(&a, &cfg, stdout),
        Command::Ablate(a) => ablate_cmd(&a, &cfg, stdout),
        Command::Bench(a) => bench_cmd(&a, &cfg, stdout),
        Command::Validate(a) => validate_cmd(&a, stdout),
        Command::Synth(a) => synth_cmd(&a, &cfg, stdout),
    }
}

/// Largest factor `≤ 1` that brings every row inside the unit ball.
fn input_scale(corpus: &[CorpusExample]) -> f64 {
    let max = corpus
        .iter()
        .flat_map(|c| {
            let seq = c.embeddings.sequence();
            let seq_norm = seq.iter().map(|v| v * v).sum::<f64>().sqrt();
            let toks = c.embeddings.tokens();
            let tok_max = toks.rows().into_iter().map(|r| r.dot(&r).sqrt()).fold(0.0, f64::max);
            [seq_norm, tok_max]
        })
        .fold(0.0, f64::max);
    let limit = 1.0 - crate::geometry::EPS_BOUNDARY;
    if max > limit {
        limit / max
    } else {
        1.0
    }
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    kind: &'a str,
    path: String,
    examples: usize,
    input_scale: f64,
    initial_loss: f64,
    final_loss: f64,
}

fn probe_train(a: &ProbeTrainArgs, cfg: &FileConfig, stdout: &mut dyn Write) -> CliResult {
    let corpus = load_corpus(&a.data.layout())?;
    let scale = input_scale(&corpus);
    let seed = resolve_seed(a.seed, cfg)?;
    let (section, kind) = match a.kind {
        ProbeKind::Semantic => (&cfg.semantic, "semantic"),
        ProbeKind::Syntax => (&cfg.syntax, "syntax"),
    };
    let epochs = a.epochs.or(section.epochs);
    let lr = a.lr.or(section.lr);
    let dim = a.dim.or(section.dim);
    let batch = a.batch_size.or(section.batch_size);
    let file = match a.kind {
        ProbeKind::Semantic => {
            let mut tc = SemanticTrainConfig::default();
            tc.epochs = epochs.unwrap_or(tc.epochs);
            tc.optim.lr = lr.unwrap_or(tc.optim.lr);
            tc.d_out = dim.unwrap_or(tc.d_out);
            tc.batch_size = batch.unwrap_or(tc.batch_size);
            tc.optim.seed = seed;
            let data: Vec<(Vec<f64>, usize)> = corpus
                .iter()
                .map(|c| (c.embeddings.sequence().iter().map(|v| v * scale).collect(), c.record.label))
                .collect();
            let k = data.iter().map(|d| d.1).max().unwrap_or(0).max(1) + 1;
            let (probe, log) = train_semantic(&data, k, &tc).map_err(invalid)?;
            ProbeFile::semantic(&probe, scale, log)
        }
        ProbeKind::Syntax => {
            let mut tc = SyntaxTrainConfig::default();
            tc.epochs = epochs.unwrap_or(tc.epochs);
            tc.optim.lr = lr.unwrap_or(tc.optim.lr);
            tc.d_out = dim.unwrap_or(tc.d_out);
            tc.batch_size = batch.unwrap_or(tc.batch_size);
            tc.optim.seed = seed;
            let data = corpus
                .iter()
                .map(|c| {
                    let tree = c
                        .tree
                        .clone()
                        .ok_or_else(|| invalid(format!("{}: syntax training needs parses", a.data.data.display())))?;
                    ParsedExample::new(
                        c.record.tokens.clone(),
                        c.embeddings.tokens() * scale,
                        c.embeddings.sequence().iter().map(|v| v * scale).collect(),
                        tree,
                        c.record.label,
                    )
                    .map_err(invalid)
                })
                .collect::<CliResult<Vec<_>>>()?;
            let (probe, log) = train_syntax(&data, &tc).map_err(invalid)?;
            ProbeFile::syntax(&probe, scale, log)
        }
    };
    let path = a.out.join(format!("{kind}.json"));
    write_probe(&path, &file)?;
    let log = file.log();
    log::info!("trained {kind} probe on {} examples", corpus.len());
    let summary = TrainSummary {
        kind,
        path: path.display().to_string(),
        examples: corpus.len(),
        input_scale: scale,
        initial_loss: log.initial_loss,
        final_loss: log.epoch_losses.last().copied().unwrap_or(log.initial_loss),
    };
    write_output(None, &to_json(&summary), stdout)
}

struct Probes {
    semantic: SemanticProbe,
    semantic_scale: f64,
    syntax: SyntaxProbe,
    syntax_scale: f64,
}

impl Probes {
    fn load(dir: &Path) -> CliResult<Self> {
        let read = |name: &str| -> CliResult<ProbeFile> { Ok(load_probe(&dir.join(name))?) };
        let sem = read("semantic.json")?;
        let syn = read("syntax.json")?;
        let p = Probes {
            semantic: sem.to_semantic().map_err(invalid)?,
            semantic_scale: sem.input_scale(),
            syntax: syn.to_syntax().map_err(invalid)?,
            syntax_scale: syn.input_scale(),
        };
        if p.semantic.d_in() != p.syntax.projection.ncols() {
            return Err(invalid(format!(
                "{}: semantic probe expects d_in {}, syntax probe {}",
                dir.display(),
                p.semantic.d_in(),
                p.syntax.projection.ncols()
            )));
        }
        Ok(p)
    }

    fn geometry(&self, ex: &CorpusExample) -> CliResult<TokenGeometry> {
        if ex.embeddings.d_in() != self.semantic.d_in() {
            return Err(invalid(format!(
                "example `{}` has d_in {}, probes expect {}",
                ex.record.id,
                ex.embeddings.d_in(),
                self.semantic.d_in()
            )));
        }
        let rows = ex.embeddings.tokens();
        let mut semantic = Vec::with_capacity(rows.nrows());
        let mut syntax = Vec::with_capacity(rows.nrows());
        for r in rows.rows() {
            let v = r.to_vec();
            let s: Vec<f64> = v.iter().map(|x| x * self.semantic_scale).collect();
            let y: Vec<f64> = v.iter().map(|x| x * self.syntax_scale).collect();
            semantic.push(self.semantic.project(&s).map_err(invalid)?);
            syntax.push(self.syntax.project(&y).map_err(invalid)?);
        }
        Ok(TokenGeometry { semantic, syntax })
    }
}

fn load_oracles(
    kind: OracleKind,
    layout: &DataLayout,
    records: &[DatasetRecord],
    strategy: Option<Strategy>,
) -> CliResult<Vec<Box<dyn MaskOracle>>> {
    Ok(match kind {
        OracleKind::Toy => load_toy_for(layout, records)?
            .into_iter()
            .map(|mut o| {
                if let Some(s) = strategy {
                    o.strategy = s;
                }
                Box::new(o) as Box<dyn MaskOracle>
            })
            .collect(),
        OracleKind::Cache => load_caches_for(layout, records)?
            .into_iter()
            .map(|o| Box::new(o) as Box<dyn MaskOracle>)
            .collect(),
    })
}

fn explain_cmd(a: &ExplainArgs, cfg: &FileConfig, stdout: &mut dyn Write) -> CliResult {
    let edge = edge_config(&a.edge, cfg)?;
    let layout = a.data.layout();
    let corpus = load_corpus(&layout)?;
    let probes = Probes::load(&a.probes)?;
    let records: Vec<DatasetRecord> = corpus.iter().map(|c| c.record.clone()).collect();
    let oracles = load_oracles(a.oracle, &layout, &records, None)?;
    let mut exports = Vec::with_capacity(corpus.len());
    for (ex, oracle) in corpus.iter().zip(&oracles) {
        let geometry = probes.geometry(ex)?;
        let built = build_pe_tree(&geometry, oracle.as_ref(), &edge)
            .map_err(|e| invalid(format!("example `{}`: {e}", ex.record.id)))?;
        exports.push(TreeExport::from_tree(&ex.record.id, edge.alpha1, edge.alpha2, &built.tree));
    }
    write_atomic(&a.out, export_json(&exports).as_bytes())?;
    if let Some(dot) = &a.dot {
        let items: Vec<(&TreeExport, Option<&[String]>)> = exports
            .iter()
            .zip(&corpus)
            .map(|(e, c)| (e, Some(c.record.tokens.as_slice())))
            .collect();
        write_atomic(dot, export_dot(&items).as_bytes())?;
    }
    writeln!(stdout, "explained {} examples -> {}", exports.len(), a.out.display())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

#[derive(Serialize)]
struct ShapleyLine<'a> {
    id: &'a str,
    #[serde(flatten)]
    contributions: ContributionVector,
}

fn shapley_cmd(a: &ShapleyArgs, cfg: &FileConfig, stdout: &mut dyn Write) -> CliResult {
    let layout = DataLayout::new(&a.data);
    let records = load_dataset(&layout.dataset())?;
    let oracles = load_oracles(a.oracle, &layout, &records, None)?;
    let seed = resolve_seed(a.seed, cfg)?;
    let samples = a.samples.or(cfg.shapley.samples).unwrap_or(1000);
    let mut out = String::new();
    for (r, oracle) in records.iter().zip(&oracles) {
        let o = oracle.as_ref();
        let contributions = match a.mode {
            ShapleyMode::Exact => {
                if o.n() > MAX_EXACT_PLAYERS {
                    return Err(invalid(format!(
                        "example `{}` has {} tokens; exact mode supports at most {MAX_EXACT_PLAYERS}",
                        r.id,
                        o.n()
                    )));
                }
                exact_shapley(o)
            }
            ShapleyMode::Mc => mc_shapley(o, samples, seed),
            ShapleyMode::Occlusion => occlusion_vector(o),
        }
        .map_err(|e| invalid(format!("example `{}`: {e}", r.id)))?;
        out.push_str(&serde_json::to_string(&ShapleyLine { id: &r.id, contributions }).expect("serializes"));
        out.push('\n');
    }
    write_output(a.out.as_deref(), &out, stdout)
}

struct Prepared {
    corpus: Vec<CorpusExample>,
    geometries: Vec<TokenGeometry>,
    prototypes: Vec<PoincarePoint>,
    oracles: Vec<Box<dyn MaskOracle>>,
}

impl Prepared {
    fn load(a: &ScoreArgs, strategy: Strategy) -> CliResult<Self> {
        let layout = a.data.layout();
        let corpus = load_corpus(&layout)?;
        let probes = Probes::load(&a.probes)?;
        let records: Vec<DatasetRecord> = corpus.iter().map(|c| c.record.clone()).collect();
        let oracles = load_oracles(a.oracle, &layout, &records, Some(strategy))?;
        let geometries = corpus.iter().map(|c| probes.geometry(c)).collect::<CliResult<Vec<_>>>()?;
        for c in &corpus {
            if c.record.predicted_label >= probes.semantic.k() {
                return Err(invalid(format!(
                    "example `{}` predicts label {} but the probe has {} prototypes",
                    c.record.id,
                    c.record.predicted_label,
                    probes.semantic.k()
                )));
            }
        }
        Ok(Self {
            corpus,
            geometries,
            prototypes: probes.semantic.prototypes.clone(),
            oracles,
        })
    }

    fn inputs(&self) -> Vec<ExampleInput<'_>> {
        self.corpus
            .iter()
            .zip(&self.geometries)
            .zip(&self.oracles)
            .map(|((c, g), o)| ExampleInput {
                id: &c.record.id,
                geometry: g,
                prototype: &self.prototypes[c.record.predicted_label],
                oracle: o.as_ref(),
            })
            .collect()
    }
}

fn eval_cmd(a: &EvalArgs, cfg: &FileConfig, stdout: &mut dyn Write) -> CliResult {
    let score = score_config(&a.score, cfg)?;
    let edge = edge_config(&a.score.edge, cfg)?;
    let prep = Prepared::load(&a.score, score.strategy)?;
    let report = match a.ranking {
        RankingMethod::Pe => evaluate_pe(&prep.inputs(), &score, &edge, Ablation::Full).map_err(invalid)?,
        RankingMethod::Random => {
            let seed = resolve_seed(a.seed, cfg)?;
            let inputs: Vec<(&str, &dyn MaskOracle, Vec<f64>)> = prep
                .corpus
                .iter()
                .zip(&prep.oracles)
                .enumerate()
                .map(|(i, (c, o))| {
                    (c.record.id.as_str(), o.as_ref(), random_scores(c.n(), seed.wrapping_add(i as u64)))
                })
                .collect();
            aopc(&inputs, &score).map_err(invalid)?
        }
    };
    write_output(a.score.out.as_deref(), &to_json(&report), stdout)
}

#[derive(Serialize)]
struct AblationRow {
    mode: Ablation,
    report: AopcReport,
}

fn ablate_cmd(a: &AblateArgs, cfg: &FileConfig, stdout: &mut dyn Write) -> CliResult {
    let modes: Vec<Ablation> = if a.mode == "all" {
        Ablation::ALL.to_vec()
    } else {
        vec![a.mode.parse().map_err(invalid)?]
    };
    let score = score_config(&a.score, cfg)?;
    let edge = edge_config(&a.score.edge, cfg)?;
    let prep = Prepared::load(&a.score, score.strategy)?;
    let inputs = prep.inputs();
    let rows = modes
        .into_iter()
        .map(|mode| {
            Ok(AblationRow {
                mode,
                report: evaluate_pe(&inputs, &score, &edge, mode).map_err(invalid)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_output(a.score.out.as_deref(), &to_json(&rows), stdout)
}

fn bench_cmd(a: &BenchArgs, cfg: &FileConfig, stdout: &mut dyn Write) -> CliResult {
    let d = BenchConfig::default();
    let bc = BenchConfig {
        repetitions: a.repetitions.or(cfg.bench.repetitions).unwrap_or(d.repetitions),
        dim: a.dim.or(cfg.bench.dim).unwrap_or(d.dim),
        seed: resolve_seed(a.seed, cfg)?,
        edge: edge_config(&a.edge, cfg)?,
        bootstrap_resamples: d.bootstrap_resamples,
    };
    let report = crate::evaluation::bench(a.method, &a.n, &bc).map_err(invalid)?;
    if let Some(s) = report.op_slope {
        log::info!("op-count log-log slope {:.3} [{:.3}, {:.3}]", s.slope, s.ci_low, s.ci_high);
    }
    let mut csv = String::from("n,seconds,op_count\n");
    for r in &report.rows {
        csv.push_str(&format!("{},{},{}\n", r.n, r.seconds, r.op_count));
    }
    write_output(a.out.as_deref(), &csv, stdout)
}

fn validate_cmd(a: &ValidateArgs, stdout: &mut dyn Write) -> CliResult {
    let p = &a.path;
    let check_n = |actual: usize| -> CliResult {
        match a.n_tokens {
            Some(n) if n != actual => Err(invalid(format!("{}: {actual} tokens, expected {n}", p.display()))),
            _ => Ok(()),
        }
    };
    let summary = match a.kind {
        ValidateKind::Dataset => format!("{} records", load_dataset(p)?.len()),
        ValidateKind::Embeddings => {
            let e = load_embeddings(p)?;
            check_n(e.n_tokens())?;
            format!("{} tokens x {} dims", e.n_tokens(), e.d_in())
        }
        ValidateKind::Parses => format!("{} parses", load_parses(p)?.len()),
        ValidateKind::Cache => {
            let c = load_cache(p)?;
            check_n(c.n())?;
            format!("{} entries over {} tokens", c.entries().len(), c.n())
        }
        ValidateKind::Toy => {
            let t = load_toy_oracles(p)?;
            for r in &t {
                check_n(r.oracle.n())?;
            }
            format!("{} toy oracles", t.len())
        }
        ValidateKind::Probe => {
            let f = load_probe(p)?;
            format!("{} probe", f.kind())
        }
        ValidateKind::Trees => {
            let text = crate::io::read_text(p)?;
            let t = import_json(&text).map_err(|m| invalid(format!("{}: {m}", p.display())))?;
            format!("{} trees", t.len())
        }
        ValidateKind::Corpus => {
            let layout = DataLayout::new(p);
            let corpus = load_corpus(&layout)?;
            let records: Vec<DatasetRecord> = corpus.iter().map(|c| c.record.clone()).collect();
            let mut extra = String::new();
            if layout.toy_oracles().exists() {
                load_toy_for(&layout, &records)?;
                extra.push_str(", toy oracles");
            }
            if layout.root.join("cache").is_dir() {
                load_caches_for(&layout, &records)?;
                extra.push_str(", caches");
            }
            format!("{} examples{extra}", corpus.len())
        }
    };
    writeln!(stdout, "ok: {}: {summary}", p.display()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn synth_cmd(a: &SynthArgs, cfg: &FileConfig, stdout: &mut dyn Write) -> CliResult {
    let spec = SyntheticCorpusSpec {
        sentiment: SentimentSpec {
            examples: a.examples,
            min_len: a.min_len,
            max_len: a.max_len,
            ..Default::default()
        },
        strategy: a.strategy,
        with_cache: a.cache,
        ..Default::default()
    };
    if a.examples == 0 {
        return Err(invalid("--examples must be positive"));
    }
    let seed = resolve_seed(a.seed, cfg)?;
    let n = write_synthetic_corpus(&DataLayout::new(&a.out), &spec, seed)?;
    writeln!(stdout, "wrote {n} examples to {}", a.out.display()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}
