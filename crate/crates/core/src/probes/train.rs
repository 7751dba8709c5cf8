use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::{ParsedExample, ProbeError, SemanticProbe, SyntaxProbe};
use crate::geometry::PoincarePoint;
use crate::optim::{adam_step, exp_map, AdamState, OptimConfig, ParamGrads};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemanticTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub d_out: usize,
    pub optim: OptimConfig,
    /// Standard deviation of the tangent-space prototype initialisation.
    pub prototype_init_scale: f64,
}

impl Default for SemanticTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 32,
            d_out: 64,
            optim: OptimConfig::default(),
            prototype_init_scale: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntaxTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub d_out: usize,
    pub optim: OptimConfig,
    pub distance_weight: f64,
    pub depth_weight: f64,
}

impl Default for SyntaxTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 32,
            d_out: 64,
            optim: OptimConfig::default(),
            distance_weight: 1.0,
            depth_weight: 1.0,
        }
    }
}

/// Full-dataset loss recorded after every epoch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub initial_loss: f64,
    pub epoch_losses: Vec<f64>,
}

impl TrainLog {
    /// Fraction of consecutive epoch pairs whose loss did not increase.
    pub fn non_increasing_fraction(&self) -> f64 {
        let pairs = self.epoch_losses.windows(2).count();
        if pairs == 0 {
            return 1.0;
        }
        let ok = self.epoch_losses.windows(2).filter(|w| w[1] <= w[0]).count();
        ok as f64 / pairs as f64
    }
}

fn init_projection(rng: &mut Xoshiro256PlusPlus, d_out: usize, d_in: usize) -> Array2<f64> {
    let s = 1.0 / (d_in as f64).sqrt();
    Array2::from_shape_fn((d_out, d_in), |_| s * rng.sample::<f64, _>(StandardNormal))
}

fn batches(rng: &mut Xoshiro256PlusPlus, n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(size.max(1)).map(|c| c.to_vec()).collect()
}

/// Trains the label-aware probe on `(sequence embedding, label)` pairs with
/// `k` classes.
pub fn train_semantic(
    data: &[(Vec<f64>, usize)],
    k: usize,
    cfg: &SemanticTrainConfig,
) -> Result<(SemanticProbe, TrainLog), ProbeError> {
    let first = data.first().ok_or(ProbeError::EmptyDataset)?;
    cfg.optim.validate()?;
    let d_in = first.0.len();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.optim.seed);
    let projection = init_projection(&mut rng, cfg.d_out, d_in);
    let prototypes = (0..k)
        .map(|_| {
            let v: Vec<f64> = (0..cfg.d_out)
                .map(|_| cfg.prototype_init_scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            exp_map(&PoincarePoint::origin(cfg.d_out), &v)
        })
        .collect();
    let mut probe = SemanticProbe::new(projection, prototypes)?;
    let all: Vec<(&[f64], usize)> = data.iter().map(|(v, l)| (v.as_slice(), *l)).collect();
    let mut log = TrainLog {
        initial_loss: probe.loss(&all)?,
        epoch_losses: Vec::with_capacity(cfg.epochs),
    };
    let mut state = AdamState::new();
    let mut params = probe.to_params();
    for epoch in 0..cfg.epochs {
        for batch in batches(&mut rng, data.len(), cfg.batch_size) {
            let b: Vec<(&[f64], usize)> = batch.iter().map(|&i| all[i]).collect();
            let (_, grads) = probe.loss_and_grad(&b)?;
            params = adam_step(&params, &grads, &mut state, &cfg.optim)?;
            probe = SemanticProbe::from_params(&params)?;
        }
        let loss = probe.loss(&all)?;
        log::info!("semantic epoch {}: loss {loss:.6}", epoch + 1);
        log.epoch_losses.push(loss);
    }
    Ok((probe, log))
}

fn syntax_objective(probe: &SyntaxProbe, data: &[ParsedExample], cfg: &SyntaxTrainConfig) -> Result<f64, ProbeError> {
    let mut total = 0.0;
    for ex in data {
        let l = probe.loss(ex)?;
        total += cfg.distance_weight * l.dis + cfg.depth_weight * l.dep;
    }
    Ok(total / data.len() as f64)
}

/// Trains the structural probe so squared ball distances track parse-tree
/// distances and squared distances to the origin track depths.
pub fn train_syntax(data: &[ParsedExample], cfg: &SyntaxTrainConfig) -> Result<(SyntaxProbe, TrainLog), ProbeError> {
    let first = data.first().ok_or(ProbeError::EmptyDataset)?;
    cfg.optim.validate()?;
    let d_in = first.embeddings.ncols();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.optim.seed);
    let mut probe = SyntaxProbe::new(init_projection(&mut rng, cfg.d_out, d_in))?;
    let mut log = TrainLog {
        initial_loss: syntax_objective(&probe, data, cfg)?,
        epoch_losses: Vec::with_capacity(cfg.epochs),
    };
    let mut state = AdamState::new();
    let mut params = probe.to_params();
    for epoch in 0..cfg.epochs {
        for batch in batches(&mut rng, data.len(), cfg.batch_size) {
            let mut grads = ParamGrads::zeros_like(&params);
            let scale = 1.0 / batch.len() as f64;
            for &i in &batch {
                let (_, g) = probe.loss_and_grad(&data[i], cfg.distance_weight, cfg.depth_weight)?;
                grads.add_scaled(&g, scale);
            }
            params = adam_step(&params, &grads, &mut state, &cfg.optim)?;
            probe = SyntaxProbe::from_params(&params)?;
        }
        let loss = syntax_objective(&probe, data, cfg)?;
        log::info!("syntax epoch {}: loss {loss:.6}", epoch + 1);
        log.epoch_losses.push(loss);
    }
    Ok((probe, log))
}
