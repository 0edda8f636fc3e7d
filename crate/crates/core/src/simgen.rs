//! Seeded generator of synthetic traffic matrices with known baseline,
//! anomaly and noise components.
//!
//! Every random stream is derived from the master seed and the role of the
//! component it feeds, so a single set can be regenerated without producing
//! the ones before it.

use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the per-node gravity weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GravityWeights {
    #[default]
    Uniform,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSpec {
    pub n_nodes: usize,
    pub intervals: usize,
    pub interval_seconds: f64,
    /// Sum of the per-flow mean levels.
    pub total_mean: f64,
    /// Harmonic indices; harmonic `m` completes `harmonics[m]` cycles over the window.
    pub harmonics: Vec<usize>,
    /// Amplitude decay between successive harmonics.
    pub amp_ratio: f64,
    /// Amplitude of the first harmonic relative to the mean level.
    pub first_amp_ratio: f64,
    /// Phases are uniform in `[-phase_range, phase_range]`.
    pub phase_range: f64,
    pub anomaly_density: f64,
    /// Anomaly volume relative to the flow's mean level.
    pub anomaly_magnitude_ratio: f64,
    pub negative_anomalies: bool,
    /// Noise scale relative to the flow's mean level.
    pub alpha: f64,
    pub gravity: GravityWeights,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            n_nodes: 10,
            intervals: 2016,
            interval_seconds: 300.0,
            total_mean: 1e6,
            harmonics: vec![7, 14, 28, 56, 112],
            amp_ratio: 0.5,
            first_amp_ratio: 0.5,
            phase_range: std::f64::consts::PI / 5.0,
            anomaly_density: 0.01,
            anomaly_magnitude_ratio: 0.8,
            negative_anomalies: false,
            alpha: 0.1,
            gravity: GravityWeights::Uniform,
            seed: 0,
        }
    }
}

impl SimSpec {
    pub fn flows(&self) -> usize {
        self.n_nodes * self.n_nodes
    }

    /// Highest harmonic frequency in cycles per interval; the baseline has no
    /// content above it.
    pub fn critical_frequency(&self) -> f64 {
        self.harmonics.iter().copied().max().unwrap_or(0) as f64 / self.intervals as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_nodes == 0 {
            return bad("n_nodes must be at least 1".into());
        }
        if self.intervals < 2 {
            return bad("at least 2 intervals are required".into());
        }
        if !(self.total_mean > 0.0) {
            return bad("total_mean must be positive".into());
        }
        if let Some(&l) = self.harmonics.iter().find(|&&l| 2 * l >= self.intervals) {
            return bad(format!(
                "harmonic {l} is not below T/2 = {}",
                self.intervals / 2
            ));
        }
        if !(0.0..=1.0).contains(&self.anomaly_density) {
            return bad("anomaly_density must lie in [0, 1]".into());
        }
        if !(self.alpha >= 0.0) {
            return bad("alpha must be nonnegative".into());
        }
        if !(self.phase_range >= 0.0) {
            return bad("phase_range must be nonnegative".into());
        }
        Ok(())
    }
}

/// One generated traffic matrix with its ground-truth components.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSet {
    pub id: usize,
    pub baseline_index: usize,
    pub baseline: Array2<f64>,
    pub anomaly: Array2<f64>,
    pub noise: Array2<f64>,
    /// `baseline + anomaly + noise`.
    pub x: Array2<f64>,
    /// Per-flow noise standard deviation, `alpha * a_{j,0}`.
    pub sigma: Vec<f64>,
    /// The spec the set was drawn from (with its own `alpha`).
    pub spec: SimSpec,
}

/// Mean levels `a_{(s,d),0} ∝ u_s u_d` summing to `total`. Flow `(s, d)` sits
/// at index `s * n_nodes + d`.
pub fn gravity_means(
    n_nodes: usize,
    total: f64,
    weights: GravityWeights,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let u: Vec<f64> = (0..n_nodes)
        .map(|_| match weights {
            // Open interval keeps every mean strictly positive.
            GravityWeights::Uniform => loop {
                let v: f64 = rng.gen();
                if v > 0.0 {
                    break v;
                }
            },
            GravityWeights::Exponential => loop {
                let v: f64 = rng.sample(Exp1);
                if v > 0.0 {
                    break v;
                }
            },
        })
        .collect();
    let raw: Vec<f64> = u
        .iter()
        .flat_map(|&s| u.iter().map(move |&d| s * d))
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v * total / sum).collect()
}

/// `A_j(t) = a_{j,0} + sum_m a_{j,m} sin(2 pi l_m t / T + phi_{j,m})`, `t = 1..T`.
pub fn gen_baseline(spec: &SimSpec, means: &[f64], rng: &mut impl Rng) -> Array2<f64> {
    let len = spec.intervals;
    let mut a = Array2::<f64>::zeros((len, means.len()));
    for (j, &mean) in means.iter().enumerate() {
        let mut amp = spec.first_amp_ratio * mean;
        let terms: Vec<(f64, f64, f64)> = spec
            .harmonics
            .iter()
            .map(|&l| {
                let phase = if spec.phase_range > 0.0 {
                    rng.gen_range(-spec.phase_range..=spec.phase_range)
                } else {
                    0.0
                };
                let term = (
                    amp,
                    2.0 * std::f64::consts::PI * l as f64 / len as f64,
                    phase,
                );
                amp *= spec.amp_ratio;
                term
            })
            .collect();
        for (i, v) in a.column_mut(j).iter_mut().enumerate() {
            let t = (i + 1) as f64;
            *v = mean
                + terms
                    .iter()
                    .map(|(amp, w, ph)| amp * (w * t + ph).sin())
                    .sum::<f64>();
        }
    }
    a
}

/// Spikes of volume `anomaly_magnitude_ratio * a_{j,0}` at
/// `floor(density * T * P)` distinct positions drawn over the whole matrix.
pub fn gen_anomalies(spec: &SimSpec, means: &[f64], rng: &mut impl Rng) -> Array2<f64> {
    let (len, flows) = (spec.intervals, means.len());
    let mut e = Array2::<f64>::zeros((len, flows));
    let total = len * flows;
    let count = ((spec.anomaly_density * total as f64).floor() as usize).min(total);
    let sign = if spec.negative_anomalies { -1.0 } else { 1.0 };
    for pos in index::sample(rng, total, count).into_iter() {
        let (t, j) = (pos / flows, pos % flows);
        e[[t, j]] = sign * spec.anomaly_magnitude_ratio * means[j];
    }
    e
}

/// I.i.d. Gaussian noise with column scale `alpha * a_{j,0}`.
pub fn gen_noise(spec: &SimSpec, means: &[f64], rng: &mut impl Rng) -> (Array2<f64>, Vec<f64>) {
    let sigma: Vec<f64> = means.iter().map(|m| spec.alpha * m).collect();
    let mut n = Array2::<f64>::zeros((spec.intervals, means.len()));
    if spec.alpha > 0.0 {
        for v in n.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        for (mut col, s) in n.columns_mut().into_iter().zip(&sigma) {
            col *= *s;
        }
    }
    (n, sigma)
}

/// How sets are laid out: every baseline gets `anomalies_per` anomaly
/// matrices, each combined with `noises_per` noise draws at every alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetLayout {
    pub n_baselines: usize,
    pub anomalies_per: usize,
    pub noises_per: usize,
    pub alphas: Vec<f64>,
}

impl Default for DatasetLayout {
    fn default() -> Self {
        Self {
            n_baselines: 100,
            anomalies_per: 1,
            noises_per: 1,
            alphas: vec![0.1, 0.2],
        }
    }
}

/// Position of a set inside a [`DatasetLayout`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetKey {
    pub baseline: usize,
    pub anomaly: usize,
    pub alpha: f64,
    pub noise: usize,
}

impl DatasetLayout {
    pub fn validate(&self) -> Result<()> {
        if self.n_baselines == 0 || self.anomalies_per == 0 || self.noises_per == 0 {
            return Err(Error::InvalidConfig(
                "dataset counts must be at least 1".into(),
            ));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::InvalidConfig(
                "alphas must be a nonempty list of nonnegative values".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_baselines * self.sets_per_baseline()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sets_per_baseline(&self) -> usize {
        self.anomalies_per * self.alphas.len() * self.noises_per
    }

    /// Ids run baseline-major, then anomaly, then alpha, then noise draw.
    pub fn key(&self, id: usize) -> Option<SetKey> {
        if id >= self.len() {
            return None;
        }
        let per = self.sets_per_baseline();
        let (baseline, rest) = (id / per, id % per);
        let per_anomaly = self.alphas.len() * self.noises_per;
        let (anomaly, rest) = (rest / per_anomaly, rest % per_anomaly);
        let (alpha_index, noise) = (rest / self.noises_per, rest % self.noises_per);
        Some(SetKey {
            baseline,
            anomaly,
            alpha: self.alphas[alpha_index],
            noise,
        })
    }
}

const TAG_MEANS: u64 = 0x6d65_616e;
const TAG_BASELINE: u64 = 0x6261_7365;
const TAG_ANOMALY: u64 = 0x616e_6f6d;
const TAG_NOISE: u64 = 0x6e6f_6973;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of an independent stream identified by `parts` under `master`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Seeds of the four random streams behind one set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSeeds {
    pub means: u64,
    pub baseline: u64,
    pub anomaly: u64,
    pub noise: u64,
}

/// Stream seeds of set `id`. Means and baseline depend only on the baseline
/// index, so sets that share it share those components.
pub fn set_seeds(master: u64, key: &SetKey) -> SetSeeds {
    let b = key.baseline as u64;
    SetSeeds {
        means: derive_seed(master, &[b, TAG_MEANS]),
        baseline: derive_seed(master, &[b, TAG_BASELINE]),
        anomaly: derive_seed(master, &[b, TAG_ANOMALY, key.anomaly as u64]),
        noise: derive_seed(
            master,
            &[b, TAG_NOISE, key.alpha.to_bits(), key.noise as u64],
        ),
    }
}

/// Regenerates set `id` of the layout on its own.
pub fn gen_set(spec: &SimSpec, layout: &DatasetLayout, id: usize) -> Result<GroundTruthSet> {
    spec.validate()?;
    layout.validate()?;
    let key = layout.key(id).ok_or_else(|| {
        Error::InvalidConfig(format!("set id {id} outside a dataset of {}", layout.len()))
    })?;
    let seeds = set_seeds(spec.seed, &key);
    let rng = ChaCha8Rng::seed_from_u64;
    let means = gravity_means(
        spec.n_nodes,
        spec.total_mean,
        spec.gravity,
        &mut rng(seeds.means),
    );
    let baseline = gen_baseline(spec, &means, &mut rng(seeds.baseline));
    let anomaly = gen_anomalies(spec, &means, &mut rng(seeds.anomaly));
    let set_spec = SimSpec {
        alpha: key.alpha,
        ..spec.clone()
    };
    let (noise, sigma) = gen_noise(&set_spec, &means, &mut rng(seeds.noise));
    let x = &baseline + &anomaly + &noise;
    Ok(GroundTruthSet {
        id,
        baseline_index: key.baseline,
        baseline,
        anomaly,
        noise,
        x,
        sigma,
        spec: set_spec,
    })
}

/// All sets of the layout, in id order.
pub fn gen_dataset(spec: &SimSpec, layout: &DatasetLayout) -> Result<Vec<GroundTruthSet>> {
    spec.validate()?;
    layout.validate()?;
    (0..layout.len())
        .into_par_iter()
        .map(|id| gen_set(spec, layout, id))
        .collect()
}
