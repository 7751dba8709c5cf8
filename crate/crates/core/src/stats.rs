//! Small statistics helpers shared by the evaluation and probe checks.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

/// Ranks starting at 1, ties receiving their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation with tie-averaged ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Log-log slope with a 95% percentile bootstrap interval over the
/// `(x, y)` observations.
pub fn log_log_slope(x: &[f64], y: &[f64], resamples: usize, seed: u64) -> SlopeFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (slope, _) = linear_fit(&lx, &ly);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut boot = Vec::with_capacity(resamples);
    let n = lx.len();
    for _ in 0..resamples {
        let pick: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let bx: Vec<f64> = pick.iter().map(|&i| lx[i]).collect();
        if bx.iter().all(|v| *v == bx[0]) {
            continue;
        }
        let by: Vec<f64> = pick.iter().map(|&i| ly[i]).collect();
        boot.push(linear_fit(&bx, &by).0);
    }
    boot.sort_by(f64::total_cmp);
    let q = |p: f64| -> f64 {
        if boot.is_empty() {
            return slope;
        }
        let i = ((boot.len() - 1) as f64 * p).round() as usize;
        boot[i]
    };
    SlopeFit {
        slope,
        ci_low: q(0.025),
        ci_high: q(0.975),
    }
}
