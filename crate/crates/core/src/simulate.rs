//! Seeded piecewise-constant test signals with levels {0, 1, 2}.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{FlsaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian { variance: f64 },
    /// `scale · T` with `T` Student-t distributed with `df` degrees of freedom.
    StudentT { df: f64, scale: f64 },
}

impl NoiseModel {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Gaussian { variance } => variance.is_finite() && variance > 0.0,
            Self::StudentT { df, scale } => df.is_finite() && df > 0.0 && scale.is_finite() && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(FlsaError::InvalidConfig(format!("noise parameters must be positive: {self:?}")))
        }
    }

    fn sampler(&self) -> Result<Box<dyn Fn(&mut ChaCha8Rng) -> f64>> {
        self.validate()?;
        Ok(match *self {
            Self::Gaussian { variance } => {
                let d = Normal::new(0.0, variance.sqrt()).map_err(|e| FlsaError::InvalidConfig(e.to_string()))?;
                Box::new(move |rng| d.sample(rng))
            }
            Self::StudentT { df, scale } => {
                let d = StudentT::new(df).map_err(|e| FlsaError::InvalidConfig(e.to_string()))?;
                Box::new(move |rng| scale * d.sample(rng))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub n: usize,
    pub seed: u64,
    /// Target share of samples at level 1.
    pub level_one_fraction: f64,
    /// Target share of samples at level 2; level 0 takes the remainder.
    pub level_two_fraction: f64,
    /// Defaults to `max(5, n / 50)`.
    pub min_block_length: Option<usize>,
    pub noise: NoiseModel,
}

impl SignalSpec {
    pub fn new(n: usize, seed: u64, noise: NoiseModel) -> Self {
        Self {
            n,
            seed,
            level_one_fraction: 0.2,
            level_two_fraction: 0.2,
            min_block_length: None,
            noise,
        }
    }

    pub fn gaussian(n: usize, seed: u64, variance: f64) -> Self {
        Self::new(n, seed, NoiseModel::Gaussian { variance })
    }

    pub fn min_block(&self) -> usize {
        self.min_block_length.unwrap_or_else(|| (self.n / 50).max(5))
    }

    fn validate(&self) -> Result<()> {
        let (f1, f2) = (self.level_one_fraction, self.level_two_fraction);
        let frac_ok = |f: f64| (0.0..=1.0).contains(&f);
        if !(frac_ok(f1) && frac_ok(f2) && f1 + f2 <= 1.0) {
            return Err(FlsaError::InvalidConfig(format!(
                "level fractions must lie in [0, 1] and sum to at most 1 (got {f1}, {f2})"
            )));
        }
        let m = self.min_block();
        if m == 0 {
            return Err(FlsaError::InvalidConfig("min_block_length must be positive".into()));
        }
        if self.n < 2 * m {
            return Err(FlsaError::InvalidConfig(format!(
                "n = {} is shorter than twice the minimum block length {m}",
                self.n
            )));
        }
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSignal {
    pub truth: Vec<f64>,
    pub noisy: Vec<f64>,
}

/// Builds the noiseless signal and adds i.i.d. noise. Same `SignalSpec`, same bits.
///
/// Block lengths are drawn uniformly from `[m, 3m]` until `n` is used up (a
/// short tail is absorbed into the last block). Blocks are then visited from
/// longest to shortest and given a level drawn with weights equal to each
/// level's remaining share of its target sample count.
pub fn generate(spec: &SignalSpec) -> Result<SimulatedSignal> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let m = spec.min_block();

    let mut lengths = Vec::new();
    let mut remaining = n;
    while remaining > 0 {
        let mut len = rng.random_range(m..=3 * m);
        if remaining < len + m {
            len = remaining;
        }
        lengths.push(len);
        remaining -= len;
    }

    let fractions = [
        1.0 - spec.level_one_fraction - spec.level_two_fraction,
        spec.level_one_fraction,
        spec.level_two_fraction,
    ];
    let mut capacity = fractions.map(|f| f * n as f64);
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| lengths[b].cmp(&lengths[a]).then(a.cmp(&b)));
    let mut levels = vec![0usize; lengths.len()];
    for &block in &order {
        let weights = capacity.map(|c| c.max(0.0));
        let total: f64 = weights.iter().sum();
        let level = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for (l, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    pick = Some(l);
                    if u < *w {
                        break;
                    }
                    u -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // every target is met; take the least overfilled level
            (0..3).max_by(|&a, &b| capacity[a].total_cmp(&capacity[b])).unwrap()
        };
        levels[block] = level;
        capacity[level] -= lengths[block] as f64;
    }

    let mut truth = Vec::with_capacity(n);
    for (len, level) in lengths.iter().zip(&levels) {
        truth.extend(std::iter::repeat_n(*level as f64, *len));
    }

    let sample = spec.noise.sampler()?;
    let noisy = truth.iter().map(|t| t + sample(&mut rng)).collect();
    Ok(SimulatedSignal { truth, noisy })
}
