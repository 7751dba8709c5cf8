//! Word scoring, AOPC, ablations, and build-time scaling measurements.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::{occlusion_from, AttributionError, FullCoalition, Mask, MaskOracle, Strategy};
use crate::geometry::{distance, distance_to_origin, GeometryError, PoincarePoint};
use crate::hierarchy::{
    build_greedy_baseline, build_pe_tree, CoalitionScore, EdgeConfig, HierarchyError, HierarchyTree,
};
use crate::probes::TokenGeometry;
use crate::stats::{log_log_slope, SlopeFit};
use crate::synth::bench_instance;

/// Values searched for each of α₁, α₂, β₁, β₂.
pub const GRID: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("no prototype for predicted label {label} ({k} classes)")]
    MissingPrototype { label: usize, k: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("report asks for {expected} but the oracle uses {actual}")]
    StrategyMismatch { expected: Strategy, actual: Strategy },
    #[error("non-finite score for token {0}")]
    NonFiniteScore(usize),
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub strategy: Strategy,
    pub k_percents: Vec<f64>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            beta1: 0.1,
            beta2: 0.1,
            strategy: Strategy::Del,
            k_percents: vec![10.0, 20.0],
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<(), EvaluationError> {
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..=1.0).contains(&b) {
                return Err(EvaluationError::InvalidConfig(format!("{name} = {b} outside [0, 1]")));
            }
        }
        if self.k_percents.is_empty() {
            return Err(EvaluationError::InvalidConfig("no K percentages".into()));
        }
        if let Some(k) = self.k_percents.iter().find(|k| !(**k > 0.0 && **k <= 100.0)) {
            return Err(EvaluationError::InvalidConfig(format!("K = {k}% outside (0, 100]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    NoProb,
    NoSemantic,
    NoSyntax,
}

impl std::str::FromStr for Ablation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "no_prob" => Ok(Self::NoProb),
            "no_semantic" => Ok(Self::NoSemantic),
            "no_syntax" => Ok(Self::NoSyntax),
            other => Err(format!("unknown ablation mode `{other}`")),
        }
    }
}

impl std::fmt::Display for Ablation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::NoProb => "no_prob",
            Self::NoSemantic => "no_semantic",
            Self::NoSyntax => "no_syntax",
        })
    }
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Self::Full, Self::NoProb, Self::NoSemantic, Self::NoSyntax];

    /// The score and edge settings with this mode's term zeroed.
    pub fn apply(&self, score: &ScoreConfig, edge: &EdgeConfig) -> (ScoreConfig, EdgeConfig, bool) {
        let (mut s, mut e) = (score.clone(), *edge);
        let mut use_prob = true;
        match self {
            Self::Full => {}
            Self::NoProb => {
                use_prob = false;
                e.coalition = CoalitionScore::Disabled;
            }
            Self::NoSemantic => s.beta1 = 0.0,
            Self::NoSyntax => s.beta2 = 0.0,
        }
        (s, e, use_prob)
    }
}

pub fn prototype_for(prototypes: &[PoincarePoint], label: usize) -> Result<&PoincarePoint, EvaluationError> {
    prototypes.get(label).ok_or(EvaluationError::MissingPrototype {
        label,
        k: prototypes.len(),
    })
}

/// `score_j = φ̃(j) − β₁·d(e_j^se, c_ŷ) − β₂·d(e_j^sy, 0)`.
pub fn word_scores<O: MaskOracle + ?Sized>(
    geometry: &TokenGeometry,
    prototype: &PoincarePoint,
    oracle: &O,
    beta1: f64,
    beta2: f64,
) -> Result<Vec<f64>, EvaluationError> {
    scores_with(geometry, prototype, oracle, beta1, beta2, true)
}

fn scores_with<O: MaskOracle + ?Sized>(
    geometry: &TokenGeometry,
    prototype: &PoincarePoint,
    oracle: &O,
    beta1: f64,
    beta2: f64,
    use_prob: bool,
) -> Result<Vec<f64>, EvaluationError> {
    let n = oracle.n();
    if geometry.len() != n || geometry.syntax.len() != n {
        return Err(EvaluationError::LengthMismatch {
            what: "token geometry",
            expected: n,
            actual: geometry.len(),
        });
    }
    let full = if use_prob { oracle.full_probability()? } else { 0.0 };
    (0..n)
        .map(|j| {
            let phi = if use_prob {
                occlusion_from(oracle, full, &[j], FullCoalition::UseEmptyMask)?
            } else {
                0.0
            };
            let sem = if beta1 == 0.0 {
                0.0
            } else {
                beta1 * distance(&geometry.semantic[j], prototype)?
            };
            Ok(phi - sem - beta2 * distance_to_origin(&geometry.syntax[j]))
        })
        .collect()
}

/// `⌈K%·n⌉`, at least one token, at most all of them.
pub fn top_k_count(k_percent: f64, n: usize) -> usize {
    let raw = (k_percent * n as f64 / 100.0 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Token indices by descending score, ties by ascending index.
pub fn ranking(scores: &[f64]) -> Result<Vec<usize>, EvaluationError> {
    if let Some(j) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvaluationError::NonFiniteScore(j));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(idx)
}

/// Probability drop `f(X) − f(X̃^K)` for each K after removing the top-ranked
/// tokens.
pub fn aopc_drops<O: MaskOracle + ?Sized>(
    oracle: &O,
    scores: &[f64],
    k_percents: &[f64],
) -> Result<Vec<f64>, EvaluationError> {
    let n = oracle.n();
    if scores.len() != n {
        return Err(EvaluationError::LengthMismatch {
            what: "scores",
            expected: n,
            actual: scores.len(),
        });
    }
    let order = ranking(scores)?;
    let full = oracle.full_probability()?;
    k_percents
        .iter()
        .map(|&k| {
            if n == 0 {
                return Ok(0.0);
            }
            let top = &order[..top_k_count(k, n)];
            Ok(full - oracle.query(&Mask::without(n, top))?)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleTrace {
    pub id: String,
    pub n_tokens: usize,
    pub drops: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AopcReport {
    pub strategy: Strategy,
    pub k_percents: Vec<f64>,
    /// Mean drop over examples, one per K.
    pub per_k: Vec<f64>,
    /// Mean of `per_k`.
    pub average: f64,
    /// Mean tree-building time per example, when trees were built.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_tree_seconds: Option<f64>,
    pub examples: Vec<ExampleTrace>,
}

impl AopcReport {
    fn from_traces(strategy: Strategy, k_percents: &[f64], mut examples: Vec<ExampleTrace>) -> Self {
        examples.sort_by(|a, b| a.id.cmp(&b.id));
        let m = examples.len().max(1) as f64;
        let per_k: Vec<f64> = (0..k_percents.len())
            .map(|i| examples.iter().map(|e| e.drops[i]).sum::<f64>() / m)
            .collect();
        let average = per_k.iter().sum::<f64>() / per_k.len().max(1) as f64;
        let times: Vec<f64> = examples.iter().filter_map(|e| e.tree_seconds).collect();
        let mean_tree_seconds = (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
        Self {
            strategy,
            k_percents: k_percents.to_vec(),
            per_k,
            average,
            mean_tree_seconds,
            examples,
        }
    }
}

/// One example to explain: token geometry, the predicted class's prototype
/// and the classifier oracle.
#[derive(Clone, Copy)]
pub struct ExampleInput<'a> {
    pub id: &'a str,
    pub geometry: &'a TokenGeometry,
    pub prototype: &'a PoincarePoint,
    pub oracle: &'a dyn MaskOracle,
}

fn check_strategy(cfg: &ScoreConfig, oracle: &dyn MaskOracle) -> Result<(), EvaluationError> {
    if oracle.strategy() != cfg.strategy {
        return Err(EvaluationError::StrategyMismatch {
            expected: cfg.strategy,
            actual: oracle.strategy(),
        });
    }
    Ok(())
}

/// AOPC for externally supplied rankings.
pub fn aopc(inputs: &[(&str, &dyn MaskOracle, Vec<f64>)], cfg: &ScoreConfig) -> Result<AopcReport, EvaluationError> {
    cfg.validate()?;
    let traces = inputs
        .iter()
        .map(|(id, oracle, scores)| {
            check_strategy(cfg, *oracle)?;
            Ok(ExampleTrace {
                id: id.to_string(),
                n_tokens: oracle.n(),
                drops: aopc_drops(*oracle, scores, &cfg.k_percents)?,
                tree_seconds: None,
            })
        })
        .collect::<Result<Vec<_>, EvaluationError>>()?;
    Ok(AopcReport::from_traces(cfg.strategy, &cfg.k_percents, traces))
}

/// Scores from a seeded uniform random ordering.
pub fn random_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut scores = vec![0.0; n];
    for (rank, &j) in order.iter().enumerate() {
        scores[j] = (n - rank) as f64;
    }
    scores
}

#[derive(Debug, Clone)]
pub struct Explanation {
    pub id: String,
    pub tree: HierarchyTree,
    pub scores: Vec<f64>,
    pub tree_seconds: f64,
}

/// Builds the hierarchy and word scores for one example under an ablation.
pub fn explain(
    input: &ExampleInput<'_>,
    score: &ScoreConfig,
    edge: &EdgeConfig,
    ablation: Ablation,
) -> Result<Explanation, EvaluationError> {
    let (s, e, use_prob) = ablation.apply(score, edge);
    let t = Instant::now();
    let built = build_pe_tree(input.geometry, input.oracle, &e)?;
    let tree_seconds = t.elapsed().as_secs_f64();
    let scores = scores_with(input.geometry, input.prototype, input.oracle, s.beta1, s.beta2, use_prob)?;
    Ok(Explanation {
        id: input.id.to_string(),
        tree: built.tree,
        scores,
        tree_seconds,
    })
}

/// Full pipeline AOPC: build each tree (timed), score words, remove the top
/// tokens.
pub fn evaluate_pe(
    inputs: &[ExampleInput<'_>],
    score: &ScoreConfig,
    edge: &EdgeConfig,
    ablation: Ablation,
) -> Result<AopcReport, EvaluationError> {
    score.validate()?;
    edge.validate()?;
    let traces = inputs
        .iter()
        .map(|input| {
            check_strategy(score, input.oracle)?;
            let ex = explain(input, score, edge, ablation)?;
            Ok(ExampleTrace {
                id: ex.id,
                n_tokens: input.oracle.n(),
                drops: aopc_drops(input.oracle, &ex.scores, &score.k_percents)?,
                tree_seconds: Some(ex.tree_seconds),
            })
        })
        .collect::<Result<Vec<_>, EvaluationError>>()?;
    Ok(AopcReport::from_traces(score.strategy, &score.k_percents, traces))
}

pub fn ablate(
    mode: Ablation,
    inputs: &[ExampleInput<'_>],
    score: &ScoreConfig,
    edge: &EdgeConfig,
) -> Result<AopcReport, EvaluationError> {
    evaluate_pe(inputs, score, edge, mode)
}

/// Best `(β₁, β₂)` over [`GRID`]², by the objective `f` (larger is better).
/// Earlier grid points win ties.
pub fn grid_search_betas<F>(mut f: F) -> Result<(f64, f64, f64), EvaluationError>
where
    F: FnMut(f64, f64) -> Result<f64, EvaluationError>,
{
    let mut best = (GRID[0], GRID[0], f64::NEG_INFINITY);
    for &b1 in &GRID {
        for &b2 in &GRID {
            let v = f(b1, b2)?;
            if v > best.2 {
                best = (b1, b2, v);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    Pe,
    Greedy,
}

impl std::str::FromStr for BenchMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pe" => Ok(Self::Pe),
            "greedy" => Ok(Self::Greedy),
            other => Err(format!("unknown bench method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub repetitions: usize,
    pub dim: usize,
    pub seed: u64,
    pub edge: EdgeConfig,
    pub bootstrap_resamples: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            repetitions: 1,
            dim: 16,
            seed: 0,
            edge: EdgeConfig::default(),
            bootstrap_resamples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    /// Mean wall-clock seconds per build.
    pub seconds: f64,
    /// Heap pushes plus pops for the heap builder, weight evaluations for
    /// the greedy baseline.
    pub op_count: u64,
    pub weight_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub method: BenchMethod,
    pub rows: Vec<BenchRow>,
    /// Log-log fit of `op_count` against `n`; absent with fewer than two sizes.
    pub op_slope: Option<SlopeFit>,
    pub time_slope: Option<SlopeFit>,
}

pub const MIN_BENCH_N: usize = 8;

pub fn bench(method: BenchMethod, ns: &[usize], cfg: &BenchConfig) -> Result<BenchReport, EvaluationError> {
    if let Some(&n) = ns.iter().find(|&&n| n < MIN_BENCH_N) {
        return Err(EvaluationError::InvalidConfig(format!("bench size {n} below {MIN_BENCH_N}")));
    }
    if cfg.repetitions == 0 {
        return Err(EvaluationError::InvalidConfig("zero repetitions".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let (geometry, oracle) = bench_instance(n, cfg.dim, cfg.seed);
        let mut total = 0.0;
        let mut counts = None;
        for _ in 0..cfg.repetitions {
            let t = Instant::now();
            let built = match method {
                BenchMethod::Pe => build_pe_tree(&geometry, &oracle, &cfg.edge)?,
                BenchMethod::Greedy => build_greedy_baseline(&geometry, &oracle, &cfg.edge)?,
            };
            total += t.elapsed().as_secs_f64();
            let op = match method {
                BenchMethod::Pe => built.stats.heap_ops(),
                BenchMethod::Greedy => built.stats.weight_evals,
            };
            counts = Some((op, built.stats.weight_evals));
        }
        let (op_count, weight_evals) = counts.expect("at least one repetition");
        log::info!("bench {method:?} n={n}: {op_count} ops");
        rows.push(BenchRow {
            n,
            seconds: total / cfg.repetitions as f64,
            op_count,
            weight_evals,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let fit = |ys: Vec<f64>| (rows.len() >= 2).then(|| log_log_slope(&xs, &ys, cfg.bootstrap_resamples, cfg.seed));
    let op_slope = fit(rows.iter().map(|r| r.op_count as f64).collect());
    let time_slope = fit(rows.iter().map(|r| r.seconds.max(f64::MIN_POSITIVE)).collect());
    Ok(BenchReport {
        method,
        rows,
        op_slope,
        time_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::ToyOracle;
    use crate::synth::{sentiment_set, SentimentSpec};

    fn geometry_at_origin(n: usize, dim: usize) -> TokenGeometry {
        TokenGeometry {
            semantic: vec![PoincarePoint::origin(dim); n],
            syntax: vec![PoincarePoint::origin(dim); n],
        }
    }

    #[test]
    fn top_k_rounding() {
        assert_eq!(top_k_count(10.0, 20), 2);
        assert_eq!(top_k_count(20.0, 15), 3);
        assert_eq!(top_k_count(10.0, 11), 2);
        assert_eq!(top_k_count(10.0, 3), 1);
        assert_eq!(top_k_count(100.0, 7), 7);
    }

    #[test]
    fn ranking_breaks_ties_by_index() {
        assert_eq!(ranking(&[0.5, 1.0, 0.5, 1.0]).unwrap(), vec![1, 3, 0, 2]);
        assert_eq!(ranking(&[0.0, f64::NAN]), Err(EvaluationError::NonFiniteScore(1)));
    }

    #[test]
    fn zero_betas_give_occlusion() {
        let s = sentiment_set(&SentimentSpec { examples: 3, ..Default::default() }, Strategy::Del, 1);
        let ex = &s.examples[0];
        let scores = word_scores(&ex.geometry, &s.prototypes[ex.predicted_label], &ex.oracle, 0.0, 0.0).unwrap();
        let occ = crate::attribution::occlusion_vector(&ex.oracle).unwrap();
        assert_eq!(scores, occ.values);
    }

    #[test]
    fn tokens_at_prototype_and_origin_score_occlusion() {
        let o = ToyOracle::new(vec![0.4, -0.3, 1.2], vec![], Strategy::Pad);
        let g = geometry_at_origin(3, 4);
        let proto = PoincarePoint::origin(4);
        let a = word_scores(&g, &proto, &o, 0.9, 0.7).unwrap();
        let b = word_scores(&g, &proto, &o, 0.0, 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_prototype() {
        let p = vec![PoincarePoint::origin(2)];
        assert_eq!(
            prototype_for(&p, 1).unwrap_err(),
            EvaluationError::MissingPrototype { label: 1, k: 1 }
        );
    }

    #[test]
    fn dominant_token_drop() {
        let o = ToyOracle::new(vec![0.0, 3.0, 0.0, 0.0, 0.0], vec![], Strategy::Del);
        let scores = vec![0.0, 5.0, 1.0, 0.5, 0.2];
        let drops = aopc_drops(&o, &scores, &[10.0, 20.0]).unwrap();
        let want = o.full_probability().unwrap() - 0.5;
        assert_eq!(drops, vec![want, want]);
    }

    #[test]
    fn whole_input_under_del() {
        let o = ToyOracle::new(vec![0.2, 0.9, -0.4], vec![], Strategy::Del);
        let d = aopc_drops(&o, &[1.0, 2.0, 3.0], &[100.0]).unwrap();
        let want = o.full_probability().unwrap() - o.query(&Mask::empty(3)).unwrap();
        assert_eq!(d[0], want);
    }

    #[test]
    fn shifting_scores_changes_nothing() {
        let s = sentiment_set(&SentimentSpec { examples: 10, ..Default::default() }, Strategy::Del, 2);
        let cfg = ScoreConfig::default();
        let make = |shift: f64| {
            let inputs: Vec<(&str, &dyn MaskOracle, Vec<f64>)> = s
                .examples
                .iter()
                .map(|e| {
                    let sc = random_scores(e.tokens.len(), 3).into_iter().map(|x| x + shift).collect();
                    (e.id.as_str(), &e.oracle as &dyn MaskOracle, sc)
                })
                .collect();
            aopc(&inputs, &cfg).unwrap()
        };
        assert_eq!(make(0.0), make(-17.5));
    }

    #[test]
    fn distance_scaling_identity() {
        // Scaling β by c equals scaling the distance terms by c.
        let s = sentiment_set(&SentimentSpec { examples: 2, ..Default::default() }, Strategy::Del, 4);
        let ex = &s.examples[0];
        let proto = &s.prototypes[ex.predicted_label];
        let (b1, b2, c) = (0.2, 0.3, 1.7);
        let scaled = word_scores(&ex.geometry, proto, &ex.oracle, b1 * c, b2 * c).unwrap();
        let occ = word_scores(&ex.geometry, proto, &ex.oracle, 0.0, 0.0).unwrap();
        for j in 0..ex.tokens.len() {
            let d1 = distance(&ex.geometry.semantic[j], proto).unwrap();
            let d2 = distance_to_origin(&ex.geometry.syntax[j]);
            let want = occ[j] - b1 * (c * d1) - b2 * (c * d2);
            assert!((scaled[j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn strategy_must_match() {
        let o = ToyOracle::new(vec![0.1, 0.2], vec![], Strategy::Pad);
        let inputs: Vec<(&str, &dyn MaskOracle, Vec<f64>)> = vec![("a", &o, vec![1.0, 0.0])];
        assert!(matches!(
            aopc(&inputs, &ScoreConfig::default()),
            Err(EvaluationError::StrategyMismatch { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = ScoreConfig::default();
        c.k_percents = vec![0.0];
        assert!(c.validate().is_err());
        c.k_percents = vec![101.0];
        assert!(c.validate().is_err());
        c.k_percents = vec![50.0];
        c.beta1 = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn pipeline_and_ablations() {
        let s = sentiment_set(&SentimentSpec { examples: 20, ..Default::default() }, Strategy::Del, 5);
        let inputs: Vec<ExampleInput> = s
            .examples
            .iter()
            .map(|e| ExampleInput {
                id: &e.id,
                geometry: &e.geometry,
                prototype: &s.prototypes[e.predicted_label],
                oracle: &e.oracle,
            })
            .collect();
        let cfg = ScoreConfig::default();
        let edge = EdgeConfig::default();
        let full = evaluate_pe(&inputs, &cfg, &edge, Ablation::Full).unwrap();
        assert!(full.mean_tree_seconds.unwrap() > 0.0);
        assert_eq!(full.examples.len(), 20);
        assert!(full.examples.windows(2).all(|w| w[0].id < w[1].id));
        for mode in Ablation::ALL {
            let r = ablate(mode, &inputs, &cfg, &edge).unwrap();
            assert!(r.per_k.iter().all(|x| x.is_finite()));
        }
        let no_sem_cfg = ScoreConfig { beta1: 0.0, ..cfg.clone() };
        let a = ablate(Ablation::NoSemantic, &inputs, &no_sem_cfg, &edge).unwrap();
        let b = ablate(Ablation::Full, &inputs, &no_sem_cfg, &edge).unwrap();
        assert_eq!(a.per_k, b.per_k);
    }

    #[test]
    fn grid_search_picks_best() {
        let (b1, b2, v) = grid_search_betas(|a, b| Ok(-(a - 0.3).powi(2) - (b - 0.1).powi(2))).unwrap();
        assert_eq!((b1, b2), (0.3, 0.1));
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn bench_rows_and_counts() {
        let cfg = BenchConfig::default();
        let r = bench(BenchMethod::Greedy, &[16, 32], &cfg).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|x| x.seconds > 0.0));
        // C(n + 1, 3) weight evaluations.
        assert_eq!(r.rows[0].op_count, 680);
        assert_eq!(r.rows[1].op_count, 5456);
        let again = bench(BenchMethod::Greedy, &[16, 32], &cfg).unwrap();
        assert_eq!(
            r.rows.iter().map(|x| x.op_count).collect::<Vec<_>>(),
            again.rows.iter().map(|x| x.op_count).collect::<Vec<_>>()
        );
        let single = bench(BenchMethod::Pe, &[8], &cfg).unwrap();
        assert!(single.rows[0].seconds > 0.0);
        assert!(single.op_slope.is_none());
        assert!(bench(BenchMethod::Pe, &[4], &cfg).is_err());
    }
}
