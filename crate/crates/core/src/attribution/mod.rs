//! Characteristic functions over token coalitions and the contribution
//! estimators built on them: exact Shapley values by subset enumeration,
//! permutation-sampled Shapley values, and occlusion.

mod mask;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mask::{Mask, MaskError, Strategy};

/// Largest player count accepted by [`exact_shapley`].
pub const MAX_EXACT_PLAYERS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttributionError {
    #[error("exact Shapley enumeration supports at most {max} players, got {n}")]
    TooManyPlayers { n: usize, max: usize },
    #[error("coalition is empty")]
    EmptyCoalition,
    #[error("token index {index} out of range for {n} tokens")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("removing the whole input under the del strategy leaves nothing to classify")]
    EmptiesInput,
    #[error("mask {0} is not in the probability cache")]
    MissingMask(String),
    #[error("mask covers {actual} tokens but the oracle has {expected}")]
    MaskLength { expected: usize, actual: usize },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error(transparent)]
    Mask(#[from] MaskError),
}

/// Whether an oracle may be queried from several threads at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concurrency {
    Concurrent,
    Serial,
}

/// The characteristic function `v`: probability of the fixed predicted class
/// given which tokens are present.
pub trait MaskOracle: Send + Sync {
    fn n(&self) -> usize;

    fn strategy(&self) -> Strategy;

    fn query(&self, mask: &Mask) -> Result<f64, AttributionError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Concurrent
    }

    /// `f(X)`, the probability with every token present.
    fn full_probability(&self) -> Result<f64, AttributionError> {
        self.query(&Mask::full(self.n()))
    }
}

impl<O: MaskOracle + ?Sized> MaskOracle for &O {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn strategy(&self) -> Strategy {
        (**self).strategy()
    }
    fn query(&self, mask: &Mask) -> Result<f64, AttributionError> {
        (**self).query(mask)
    }
    fn concurrency(&self) -> Concurrency {
        (**self).concurrency()
    }
}

fn check_mask(oracle_n: usize, mask: &Mask) -> Result<(), AttributionError> {
    if mask.len() != oracle_n {
        return Err(AttributionError::MaskLength {
            expected: oracle_n,
            actual: mask.len(),
        });
    }
    Ok(())
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Logistic stand-in classifier: `σ(bias + Σ_present w_j + Σ_pairs b_ij)`,
/// where a pair bonus applies only when both tokens are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyOracle {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub interactions: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub bias: f64,
    pub strategy: Strategy,
}

impl ToyOracle {
    pub fn new(weights: Vec<f64>, interactions: Vec<(usize, usize, f64)>, strategy: Strategy) -> Self {
        Self {
            weights,
            interactions,
            bias: 0.0,
            strategy,
        }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn logit(&self, mask: &Mask) -> f64 {
        let mut z = self.bias;
        for j in mask.present() {
            z += self.weights[j];
        }
        for &(a, b, bonus) in &self.interactions {
            if mask.contains(a) && mask.contains(b) {
                z += bonus;
            }
        }
        z
    }
}

pub fn toy_oracle(weights: Vec<f64>, interactions: Vec<(usize, usize, f64)>, strategy: Strategy) -> ToyOracle {
    ToyOracle::new(weights, interactions, strategy)
}

impl MaskOracle for ToyOracle {
    fn n(&self) -> usize {
        self.weights.len()
    }

    fn strategy(&self) -> Strategy {
        self.strategy
    }

    fn query(&self, mask: &Mask) -> Result<f64, AttributionError> {
        check_mask(self.n(), mask)?;
        Ok(sigmoid(self.logit(mask)))
    }
}

/// Replays probabilities recorded for specific masks; unknown masks are an
/// error.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedOracle {
    n: usize,
    strategy: Strategy,
    predicted_label: usize,
    entries: HashMap<Mask, f64>,
}

impl CachedOracle {
    pub fn new(
        n: usize,
        strategy: Strategy,
        predicted_label: usize,
        entries: HashMap<Mask, f64>,
    ) -> Result<Self, AttributionError> {
        for (m, &p) in &entries {
            check_mask(n, m)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(AttributionError::InvalidProbability(p));
            }
        }
        for required in [Mask::full(n), Mask::empty(n)] {
            if !entries.contains_key(&required) {
                return Err(AttributionError::MissingMask(required.to_hex()));
            }
        }
        Ok(Self {
            n,
            strategy,
            predicted_label,
            entries,
        })
    }

    pub fn predicted_label(&self) -> usize {
        self.predicted_label
    }

    pub fn entries(&self) -> &HashMap<Mask, f64> {
        &self.entries
    }
}

impl MaskOracle for CachedOracle {
    fn n(&self) -> usize {
        self.n
    }

    fn strategy(&self) -> Strategy {
        self.strategy
    }

    fn query(&self, mask: &Mask) -> Result<f64, AttributionError> {
        check_mask(self.n, mask)?;
        self.entries
            .get(mask)
            .copied()
            .ok_or_else(|| AttributionError::MissingMask(mask.to_hex()))
    }
}

/// Counts queries made through it.
#[derive(Debug)]
pub struct CountingOracle<O> {
    inner: O,
    queries: AtomicU64,
}

impl<O: MaskOracle> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            queries: AtomicU64::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: MaskOracle> MaskOracle for CountingOracle<O> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn strategy(&self) -> Strategy {
        self.inner.strategy()
    }
    fn query(&self, mask: &Mask) -> Result<f64, AttributionError> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.inner.query(mask)
    }
    fn concurrency(&self) -> Concurrency {
        self.inner.concurrency()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionMode {
    Exact,
    MonteCarlo,
    Occlusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionVector {
    pub values: Vec<f64>,
    pub mode: ContributionMode,
}

impl ContributionVector {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Exact Shapley values via the subset form
/// `φ_j = Σ_{S ∌ j} |S|!(n−1−|S|)!/n! · (v(S ∪ {j}) − v(S))`,
/// querying each of the `2ⁿ` coalitions once.
pub fn exact_shapley<O: MaskOracle + ?Sized>(oracle: &O) -> Result<ContributionVector, AttributionError> {
    let n = oracle.n();
    if n > MAX_EXACT_PLAYERS {
        return Err(AttributionError::TooManyPlayers {
            n,
            max: MAX_EXACT_PLAYERS,
        });
    }
    let subsets = 1usize << n;
    let mut value = Vec::with_capacity(subsets);
    for s in 0..subsets {
        value.push(oracle.query(&Mask::from_present(n, (0..n).filter(|j| s >> j & 1 == 1)))?);
    }
    // weight[k] = k! (n-1-k)! / n!
    let mut weight = vec![0.0; n.max(1)];
    for (k, w) in weight.iter_mut().enumerate().take(n) {
        let mut x = 1.0 / n as f64;
        // 1/n · 1/C(n-1, k)
        for i in 0..k {
            x *= (i + 1) as f64 / (n - 1 - i) as f64;
        }
        *w = x;
    }
    let mut phi = vec![0.0; n];
    for s in 0..subsets {
        let size = (s as u64).count_ones() as usize;
        for (j, p) in phi.iter_mut().enumerate() {
            if s >> j & 1 == 0 {
                *p += weight[size] * (value[s | 1 << j] - value[s]);
            }
        }
    }
    Ok(ContributionVector {
        values: phi,
        mode: ContributionMode::Exact,
    })
}

/// The permutations [`mc_shapley`] draws for a given seed: Xoshiro256++
/// seeded through SplitMix64, each permutation a Fisher–Yates shuffle of the
/// identity.
pub fn sample_permutations(n: usize, samples: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect()
}

/// Mean marginal contribution over `samples` random orderings.
pub fn mc_shapley<O: MaskOracle + ?Sized>(
    oracle: &O,
    samples: usize,
    seed: u64,
) -> Result<ContributionVector, AttributionError> {
    if samples == 0 {
        return Err(AttributionError::ZeroSamples);
    }
    let n = oracle.n();
    let mut phi = vec![0.0; n];
    for perm in sample_permutations(n, samples, seed) {
        let mut mask = Mask::empty(n);
        let mut prev = oracle.query(&mask)?;
        for &j in &perm {
            mask.set(j, true);
            let cur = oracle.query(&mask)?;
            phi[j] += cur - prev;
            prev = cur;
        }
    }
    let r = samples as f64;
    phi.iter_mut().for_each(|p| *p /= r);
    Ok(ContributionVector {
        values: phi,
        mode: ContributionMode::MonteCarlo,
    })
}

/// Treatment of a coalition that covers every token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FullCoalition {
    /// Error under `del`, where nothing would remain of the input.
    Reject,
    /// Use the cached empty-mask value `v(∅)`.
    UseEmptyMask,
}

/// `v(N) − v(N ∖ S)`, rejecting the whole-input coalition under `del`.
pub fn occlusion<O: MaskOracle + ?Sized>(oracle: &O, coalition: &[usize]) -> Result<f64, AttributionError> {
    occlusion_with(oracle, coalition, FullCoalition::Reject)
}

pub fn occlusion_with<O: MaskOracle + ?Sized>(
    oracle: &O,
    coalition: &[usize],
    full: FullCoalition,
) -> Result<f64, AttributionError> {
    let full_p = oracle.full_probability()?;
    occlusion_from(oracle, full_p, coalition, full)
}

/// As [`occlusion_with`], reusing an already known `f(X)`.
pub fn occlusion_from<O: MaskOracle + ?Sized>(
    oracle: &O,
    full_probability: f64,
    coalition: &[usize],
    full: FullCoalition,
) -> Result<f64, AttributionError> {
    let n = oracle.n();
    if coalition.is_empty() {
        return Err(AttributionError::EmptyCoalition);
    }
    if let Some(&index) = coalition.iter().find(|&&j| j >= n) {
        return Err(AttributionError::IndexOutOfRange { index, n });
    }
    let reduced = Mask::without(n, coalition);
    if reduced.is_none_present() && oracle.strategy() == Strategy::Del && full == FullCoalition::Reject {
        return Err(AttributionError::EmptiesInput);
    }
    Ok(full_probability - oracle.query(&reduced)?)
}

/// Singleton occlusion for every token.
pub fn occlusion_vector<O: MaskOracle + ?Sized>(oracle: &O) -> Result<ContributionVector, AttributionError> {
    let full_p = oracle.full_probability()?;
    let values = (0..oracle.n())
        .map(|j| occlusion_from(oracle, full_p, &[j], FullCoalition::UseEmptyMask))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ContributionVector {
        values,
        mode: ContributionMode::Occlusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Oracle backed by an arbitrary table over all subsets.
    struct Table {
        n: usize,
        v: Vec<f64>,
    }

    impl MaskOracle for Table {
        fn n(&self) -> usize {
            self.n
        }
        fn strategy(&self) -> Strategy {
            Strategy::Pad
        }
        fn query(&self, m: &Mask) -> Result<f64, AttributionError> {
            Ok(self.v[m.present().map(|j| 1usize << j).sum::<usize>()])
        }
    }

    fn majority() -> Table {
        Table {
            n: 3,
            v: (0..8usize).map(|s| if s.count_ones() >= 2 { 1.0 } else { 0.0 }).collect(),
        }
    }

    fn random_table(rng: &mut Xoshiro256PlusPlus, n: usize) -> Table {
        Table {
            n,
            v: (0..1usize << n).map(|_| rng.random::<f64>()).collect(),
        }
    }

    /// Direct average over all n! orderings.
    fn permutation_shapley(t: &Table) -> Vec<f64> {
        fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
            if items.len() <= 1 {
                return vec![items];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.clone();
                let x = rest.remove(i);
                for mut p in perms(rest) {
                    p.insert(0, x);
                    out.push(p);
                }
            }
            out
        }
        let all = perms((0..t.n).collect());
        let mut phi = vec![0.0; t.n];
        for p in &all {
            let mut s = 0usize;
            for &j in p {
                phi[j] += t.v[s | 1 << j] - t.v[s];
                s |= 1 << j;
            }
        }
        phi.iter().map(|x| x / all.len() as f64).collect()
    }

    #[test]
    fn majority_game_is_uniform() {
        let phi = exact_shapley(&majority()).unwrap();
        for v in &phi.values {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn additive_game_returns_weights() {
        let w = [0.3, -0.1, 0.25, 0.05];
        let t = Table {
            n: 4,
            v: (0..16usize).map(|s| (0..4).filter(|j| s >> j & 1 == 1).map(|j| w[j]).sum()).collect(),
        };
        let e = exact_shapley(&t).unwrap();
        let mc = mc_shapley(&t, 3, 9).unwrap();
        for j in 0..4 {
            assert!((e.values[j] - w[j]).abs() < 1e-12);
            assert!((mc.values[j] - w[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn subset_form_matches_permutation_average() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        for n in 1..=6 {
            let t = random_table(&mut rng, n);
            let a = exact_shapley(&t).unwrap();
            let b = permutation_shapley(&t);
            for (x, y) in a.values.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn efficiency_and_dummy() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.random_range(1..=8);
            let mut t = random_table(&mut rng, n);
            let phi = exact_shapley(&t).unwrap();
            assert!((phi.sum() - (t.v[(1 << n) - 1] - t.v[0])).abs() < 1e-9);
            // Make player 0 a dummy.
            for s in 0..1usize << n {
                if s & 1 == 1 {
                    t.v[s] = t.v[s & !1];
                }
            }
            assert!(exact_shapley(&t).unwrap().values[0].abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_players_get_equal_values() {
        // v depends on whether 0 or 1 is present symmetrically.
        let t = Table {
            n: 3,
            v: (0..8usize)
                .map(|s| ((s & 1) + (s >> 1 & 1)) as f64 * 0.2 + (s >> 2 & 1) as f64 * 0.1 + if s & 3 == 3 { 0.3 } else { 0.0 })
                .collect(),
        };
        let phi = exact_shapley(&t).unwrap();
        assert!((phi.values[0] - phi.values[1]).abs() < 1e-15);
    }

    #[test]
    fn exact_rejects_large_n() {
        let o = ToyOracle::new(vec![0.0; 13], vec![], Strategy::Del);
        assert_eq!(
            exact_shapley(&o),
            Err(AttributionError::TooManyPlayers { n: 13, max: 12 })
        );
    }

    #[test]
    fn single_permutation_matches_trace() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let t = random_table(&mut rng, 5);
        let phi = mc_shapley(&t, 1, 42).unwrap();
        let perm = &sample_permutations(5, 1, 42)[0];
        let mut s = 0usize;
        let mut want = vec![0.0; 5];
        for &j in perm {
            want[j] = t.v[s | 1 << j] - t.v[s];
            s |= 1 << j;
        }
        assert_eq!(phi.values, want);
        assert_eq!(mc_shapley(&t, 1, 42).unwrap(), phi);
        assert_eq!(mc_shapley(&t, 0, 42), Err(AttributionError::ZeroSamples));
    }

    #[test]
    fn mc_converges_to_exact() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        let t = random_table(&mut rng, 6);
        let exact = exact_shapley(&t).unwrap();
        let err = |r: usize| -> f64 {
            (0..20u64)
                .map(|seed| {
                    let mc = mc_shapley(&t, r, seed).unwrap();
                    mc.values
                        .iter()
                        .zip(&exact.values)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .sum::<f64>()
                / 20.0
        };
        let errs: Vec<f64> = [10, 100, 1000].iter().map(|&r| err(r)).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn occlusion_examples() {
        let c = ToyOracle::new(vec![0.0; 4], vec![], Strategy::Pad);
        assert_eq!(occlusion(&c, &[0, 2]).unwrap(), 0.0);

        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let t = random_table(&mut rng, 4);
        for j in 0..4 {
            let full = t.v[15];
            let minus = t.v[15 & !(1 << j)];
            assert_eq!(occlusion(&t, &[j]).unwrap(), full - minus);
        }
        assert_eq!(occlusion(&t, &[]), Err(AttributionError::EmptyCoalition));
        assert_eq!(occlusion(&t, &[4]), Err(AttributionError::IndexOutOfRange { index: 4, n: 4 }));
    }

    #[test]
    fn occlusion_on_additive_table() {
        let w = [0.1, 0.2, 0.3];
        let t = Table {
            n: 3,
            v: (0..8usize).map(|s| (0..3).filter(|j| s >> j & 1 == 1).map(|j| w[j]).sum()).collect(),
        };
        assert!((occlusion(&t, &[0, 2]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn whole_input_under_del_is_signalled() {
        let o = ToyOracle::new(vec![1.0, 2.0], vec![], Strategy::Del);
        assert_eq!(occlusion(&o, &[0, 1]), Err(AttributionError::EmptiesInput));
        let v = occlusion_with(&o, &[0, 1], FullCoalition::UseEmptyMask).unwrap();
        assert!((v - (sigmoid(3.0) - 0.5)).abs() < 1e-15);
        let p = ToyOracle::new(vec![1.0, 2.0], vec![], Strategy::Pad);
        assert!(occlusion(&p, &[0, 1]).is_ok());
    }

    #[test]
    fn toy_oracle_examples() {
        let z = ToyOracle::new(vec![0.0; 5], vec![], Strategy::Del);
        assert_eq!(z.query(&Mask::from_present(5, [1, 3])).unwrap(), 0.5);
        let o = ToyOracle::new(vec![0.0, 1.7, 0.0], vec![], Strategy::Pad);
        assert_eq!(o.query(&Mask::from_present(3, [1])).unwrap(), sigmoid(1.7));
        assert!(matches!(o.query(&Mask::full(4)), Err(AttributionError::MaskLength { .. })));
    }

    #[test]
    fn toy_oracle_interactions_by_enumeration() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(6);
        let n = 8;
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pairs = vec![(0, 3, 0.8), (2, 7, -1.2), (5, 6, 0.4)];
        let o = ToyOracle::new(w.clone(), pairs.clone(), Strategy::Del);
        for s in 0..1usize << n {
            let mut z = 0.0;
            for j in 0..n {
                if s >> j & 1 == 1 {
                    z += w[j];
                }
            }
            for &(a, b, bonus) in &pairs {
                if s >> a & 1 == 1 && s >> b & 1 == 1 {
                    z += bonus;
                }
            }
            let m = Mask::from_present(n, (0..n).filter(|j| s >> j & 1 == 1));
            assert!((o.query(&m).unwrap() - 1.0 / (1.0 + (-z).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn cached_oracle_lookup_rules() {
        let mut e = HashMap::new();
        e.insert(Mask::full(2), 0.9);
        e.insert(Mask::empty(2), 0.5);
        let o = CachedOracle::new(2, Strategy::Del, 1, e.clone()).unwrap();
        assert_eq!(o.full_probability().unwrap(), 0.9);
        assert_eq!(
            o.query(&Mask::from_present(2, [0])),
            Err(AttributionError::MissingMask("01".into()))
        );
        e.remove(&Mask::empty(2));
        assert!(matches!(
            CachedOracle::new(2, Strategy::Del, 1, e.clone()),
            Err(AttributionError::MissingMask(_))
        ));
        e.insert(Mask::empty(2), 1.5);
        assert_eq!(
            CachedOracle::new(2, Strategy::Del, 1, e),
            Err(AttributionError::InvalidProbability(1.5))
        );
    }

    #[test]
    fn counting_oracle_counts() {
        let c = CountingOracle::new(ToyOracle::new(vec![0.1; 3], vec![], Strategy::Pad));
        exact_shapley(&c).unwrap();
        assert_eq!(c.queries(), 8);
    }
}
