//! Synthetic environment: cluster-structured linear reward and consumption
//! model with bounded zero-mean noise, i.i.d. per-period contexts, and a hard
//! budget ledger.
//!
//! Every arm `a` belongs to one of `C` clusters. A pull of arm `a` under
//! context `x ∈ [0,1]^m` yields reward `μ_cᵀx + g` and a consumption vector
//! `W_cᵀx + q` where `c` is the arm's cluster and the noise keeps both
//! outcomes inside `[0,1]`.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::seeding::{self, TAG_INSTANCE};

/// Cluster membership proportions.
#[derive(Debug, Clone, PartialEq)]
pub enum Proportions {
    /// Every cluster targets `K/C` arms.
    Balanced,
    /// Explicit per-cluster weights; must be positive and sum to one.
    Explicit(Vec<f64>),
}

impl Serialize for Proportions {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Proportions::Balanced => s.serialize_str("balanced"),
            Proportions::Explicit(p) => p.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Proportions {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Weights(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "balanced" => Ok(Proportions::Balanced),
            Raw::Name(s) => Err(D::Error::custom(format!(
                "unknown proportions keyword {s:?}; expected \"balanced\" or a weight array"
            ))),
            Raw::Weights(w) => Ok(Proportions::Explicit(w)),
        }
    }
}

/// Per-entry context distribution on `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextDistribution {
    Uniform01,
    Beta { alpha: f64, beta: f64 },
    /// Gaussian rejected onto `[0,1]`; after 100 rejections the entry falls
    /// back to the clamped mean. `sd = 0` degenerates to the clamped mean,
    /// which is the supported way to get deterministic contexts.
    TruncatedGaussian { mean: f64, sd: f64 },
}

impl ContextDistribution {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            ContextDistribution::Uniform01 => rng.random::<f64>(),
            ContextDistribution::Beta { alpha, beta } => {
                Beta::new(alpha, beta).expect("validated beta params").sample(rng)
            }
            ContextDistribution::TruncatedGaussian { mean, sd } => {
                if sd == 0.0 {
                    return mean.clamp(0.0, 1.0);
                }
                let normal = Normal::new(mean, sd).expect("validated gaussian params");
                for _ in 0..100 {
                    let v = normal.sample(rng);
                    if (0.0..=1.0).contains(&v) {
                        return v;
                    }
                }
                mean.clamp(0.0, 1.0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ContextDistribution::Uniform01 => Ok(()),
            ContextDistribution::Beta { alpha, beta } => {
                if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "beta parameters must be positive finite, got ({alpha}, {beta})"
                    )))
                }
            }
            ContextDistribution::TruncatedGaussian { mean, sd } => {
                if mean.is_finite() && sd.is_finite() && sd >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "truncated gaussian needs finite mean and sd >= 0, got ({mean}, {sd})"
                    )))
                }
            }
        }
    }
}

fn default_separation() -> f64 {
    0.5
}
fn default_noise_half_width() -> f64 {
    0.25
}
fn default_proportions() -> Proportions {
    Proportions::Balanced
}
fn default_context_distribution() -> ContextDistribution {
    ContextDistribution::Uniform01
}

/// Generator settings for a synthetic instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    /// Arm count K.
    pub arms: usize,
    /// Cluster count C.
    pub clusters: usize,
    /// Context dimension m.
    pub context_dim: usize,
    /// Resource dimension d.
    pub resources: usize,
    /// Minimum pairwise 2-norm distance between cluster reward parameters.
    #[serde(default = "default_separation")]
    pub separation: f64,
    /// Noise half-width bound R in [0, 1/2]; reward and consumption noise is
    /// uniform on `[-w, w]` with `w = min(2R, mean, 1 - mean)`.
    #[serde(default = "default_noise_half_width")]
    pub noise_half_width: f64,
    #[serde(default = "default_proportions")]
    pub proportions: Proportions,
    #[serde(default = "default_context_distribution")]
    pub context_distribution: ContextDistribution,
    #[serde(default)]
    pub seed: u64,
}

impl InstanceConfig {
    /// Target cluster proportions as plain weights.
    pub fn proportion_weights(&self) -> Vec<f64> {
        match &self.proportions {
            Proportions::Balanced => vec![1.0 / self.clusters as f64; self.clusters],
            Proportions::Explicit(p) => p.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms == 0 {
            return Err(Error::Validation("arms must be >= 1".into()));
        }
        if self.clusters == 0 || self.clusters > self.arms {
            return Err(Error::Validation(format!(
                "clusters must be in 1..=arms, got {} clusters for {} arms",
                self.clusters, self.arms
            )));
        }
        if self.context_dim == 0 || self.resources == 0 {
            return Err(Error::Validation("context_dim and resources must be >= 1".into()));
        }
        if !(self.separation >= 0.0) {
            return Err(Error::Validation(format!(
                "separation must be >= 0, got {}",
                self.separation
            )));
        }
        if !(0.0..=0.5).contains(&self.noise_half_width) {
            return Err(Error::Validation(format!(
                "noise_half_width must lie in [0, 1/2], got {}",
                self.noise_half_width
            )));
        }
        let p = self.proportion_weights();
        if p.len() != self.clusters {
            return Err(Error::Validation(format!(
                "proportions has {} entries for {} clusters",
                p.len(),
                self.clusters
            )));
        }
        if p.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Validation("every cluster proportion must be positive".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "proportions must sum to 1 within 1e-12, got {sum}"
            )));
        }
        let p_min = p.iter().cloned().fold(f64::INFINITY, f64::min);
        if (self.arms as f64) * p_min < 1.0 {
            return Err(Error::Validation(format!(
                "smallest cluster would be empty: K * p_min = {} < 1",
                self.arms as f64 * p_min
            )));
        }
        self.context_distribution.validate()
    }
}

/// Deterministic rounding of proportions to integer cluster sizes: cluster
/// `c` targets `round(p_c * K)`, then the remainder is settled one arm at a
/// time against the currently smallest (deficit) or largest (surplus)
/// cluster, never emptying one. Lowest index wins ties.
pub fn membership_counts(arms: usize, weights: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = weights
        .iter()
        .map(|&p| (p * arms as f64).round() as usize)
        .collect();
    loop {
        let total: usize = counts.iter().sum();
        if total == arms {
            break;
        }
        if total < arms {
            let c = (0..counts.len()).min_by_key(|&c| (counts[c], c)).unwrap();
            counts[c] += 1;
        } else {
            let c = (0..counts.len())
                .filter(|&c| counts[c] > 1)
                .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
                .unwrap();
            counts[c] -= 1;
        }
    }
    counts
}

/// A realized environment: cluster parameters, memberships, and the context
/// law. Fields are public; `Instance::new` enforces the invariants.
#[derive(Debug, Clone)]
pub struct Instance {
    /// Arm -> cluster index (0-based), length K.
    pub memberships: Vec<usize>,
    /// Reward parameters, one row per cluster (C x m); each row has 1-norm <= 1.
    pub mu: Array2<f64>,
    /// Consumption parameters, one m x d matrix per cluster; every column has
    /// 1-norm <= 1.
    pub w: Vec<Array2<f64>>,
    /// Noise half-width bound R.
    pub noise_half_width: f64,
    pub context_distribution: ContextDistribution,
    /// Realized cluster proportions.
    pub p: Vec<f64>,
    /// Smallest realized proportion.
    pub p_min: f64,
}

impl Instance {
    pub fn new(
        memberships: Vec<usize>,
        mu: Array2<f64>,
        w: Vec<Array2<f64>>,
        noise_half_width: f64,
        context_distribution: ContextDistribution,
    ) -> Result<Instance> {
        let k = memberships.len();
        let c = mu.nrows();
        if k == 0 || c == 0 {
            return Err(Error::Validation("instance needs at least one arm and cluster".into()));
        }
        if w.len() != c {
            return Err(Error::Validation(format!(
                "expected {} consumption matrices, got {}",
                c,
                w.len()
            )));
        }
        let m = mu.ncols();
        let d = w[0].ncols();
        for (ci, wc) in w.iter().enumerate() {
            if wc.nrows() != m || wc.ncols() != d {
                return Err(Error::Validation(format!(
                    "consumption matrix {ci} has shape {}x{}, expected {m}x{d}",
                    wc.nrows(),
                    wc.ncols()
                )));
            }
            for j in 0..d {
                let norm1: f64 = wc.column(j).iter().map(|v| v.abs()).sum();
                if norm1 > 1.0 + 1e-12 {
                    return Err(Error::Validation(format!(
                        "consumption column {j} of cluster {ci} has 1-norm {norm1} > 1"
                    )));
                }
            }
        }
        for ci in 0..c {
            let norm1: f64 = mu.row(ci).iter().map(|v| v.abs()).sum();
            if norm1 > 1.0 + 1e-12 {
                return Err(Error::Validation(format!(
                    "reward row {ci} has 1-norm {norm1} > 1"
                )));
            }
        }
        if !(0.0..=0.5).contains(&noise_half_width) {
            return Err(Error::Validation(format!(
                "noise_half_width must lie in [0, 1/2], got {noise_half_width}"
            )));
        }
        let mut counts = vec![0usize; c];
        for &ci in &memberships {
            if ci >= c {
                return Err(Error::Validation(format!(
                    "membership {ci} out of range for {c} clusters"
                )));
            }
            counts[ci] += 1;
        }
        if counts.iter().any(|&n| n == 0) {
            return Err(Error::Validation("every cluster needs at least one arm".into()));
        }
        let p: Vec<f64> = counts.iter().map(|&n| n as f64 / k as f64).collect();
        let p_min = p.iter().cloned().fold(f64::INFINITY, f64::min);
        context_distribution.validate()?;
        Ok(Instance {
            memberships,
            mu,
            w,
            noise_half_width,
            context_distribution,
            p,
            p_min,
        })
    }

    pub fn arms(&self) -> usize {
        self.memberships.len()
    }
    pub fn clusters(&self) -> usize {
        self.mu.nrows()
    }
    pub fn context_dim(&self) -> usize {
        self.mu.ncols()
    }
    pub fn resources(&self) -> usize {
        self.w[0].ncols()
    }

    /// Draw one period's context matrix (K x m), entries i.i.d. from the
    /// instance's context distribution in row-major order.
    pub fn draw_context<R: Rng>(&self, rng: &mut R) -> Array2<f64> {
        let (k, m) = (self.arms(), self.context_dim());
        let mut ctx = Array2::<f64>::zeros((k, m));
        for i in 0..k {
            for j in 0..m {
                ctx[[i, j]] = self.context_distribution.sample(rng);
            }
        }
        ctx
    }

    /// Expected reward of `arm` under context row `x`.
    pub fn mean_reward(&self, arm: usize, x: &Array1<f64>) -> f64 {
        self.mu.row(self.memberships[arm]).dot(x)
    }

    /// Expected consumption vector of `arm` under context row `x`.
    pub fn mean_consumption(&self, arm: usize, x: &Array1<f64>) -> Array1<f64> {
        self.w[self.memberships[arm]].t().dot(x)
    }

    /// Play an arm (or the no-op when `arm` is `None`) under a context row.
    ///
    /// The no-op returns zeros and consumes no randomness. A real pull always
    /// consumes exactly `1 + d` uniform draws so that parallel runs sharing a
    /// seeded stream stay aligned period by period.
    pub fn pull<R: Rng>(
        &self,
        arm: Option<usize>,
        x: &Array1<f64>,
        rng: &mut R,
    ) -> Result<PullOutcome> {
        let Some(a) = arm else {
            return Ok(PullOutcome::new(0.0, Array1::zeros(self.resources())));
        };
        if a >= self.arms() {
            return Err(Error::Validation(format!(
                "arm {a} out of range for {} arms",
                self.arms()
            )));
        }
        if x.len() != self.context_dim() {
            return Err(Error::Validation(format!(
                "context row has length {}, expected {}",
                x.len(),
                self.context_dim()
            )));
        }
        let two_r = 2.0 * self.noise_half_width;
        let noisy = |mean: f64, u: f64| -> f64 {
            let w = two_r.min(mean).min(1.0 - mean).max(0.0);
            (mean + w * (2.0 * u - 1.0)).clamp(0.0, 1.0)
        };
        let reward = noisy(self.mean_reward(a, x), rng.random::<f64>());
        let mean_v = self.mean_consumption(a, x);
        let consumption =
            Array1::from_iter(mean_v.iter().map(|&mv| noisy(mv, rng.random::<f64>())));
        Ok(PullOutcome::new(reward, consumption))
    }
}

/// Observed reward and consumption of one pull.
#[derive(Debug, Clone, PartialEq)]
pub struct PullOutcome {
    pub reward: f64,
    pub consumption: Array1<f64>,
}

impl PullOutcome {
    pub fn new(reward: f64, consumption: Array1<f64>) -> PullOutcome {
        debug_assert!((0.0..=1.0).contains(&reward), "reward {reward} outside [0,1]");
        debug_assert!(
            consumption.iter().all(|v| (0.0..=1.0).contains(v)),
            "consumption outside [0,1]: {consumption}"
        );
        PullOutcome { reward, consumption }
    }
}

/// Running budget state. One scalar budget guards all resource dimensions;
/// the ledger flips to `stopped` as soon as any cumulative coordinate
/// reaches it (checked after the pull, so one overshoot is recorded).
#[derive(Debug, Clone)]
pub struct BudgetLedger {
    pub budget: f64,
    pub cumulative: Array1<f64>,
    pub stopped: bool,
}

impl BudgetLedger {
    pub fn new(budget: f64, resources: usize) -> Result<BudgetLedger> {
        if !(budget > 0.0) {
            return Err(Error::Validation(format!("budget must be positive, got {budget}")));
        }
        Ok(BudgetLedger {
            budget,
            cumulative: Array1::zeros(resources),
            stopped: false,
        })
    }

    /// Add one pull's consumption. Calling this after the ledger stopped is a
    /// contract violation.
    pub fn update(&mut self, v: &Array1<f64>) -> Result<()> {
        if self.stopped {
            return Err(Error::Contract("budget ledger updated after stopping".into()));
        }
        self.cumulative += v;
        self.stopped = self.cumulative.iter().any(|&c| c >= self.budget);
        Ok(())
    }
}

/// Generate an instance from a config. Reward parameters are re-sampled up to
/// 1000 times until all pairwise cluster distances reach the separation
/// target; exceeding the retry budget is a generation failure.
pub fn generate_instance(cfg: &InstanceConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = seeding::stream(cfg.seed, TAG_INSTANCE);
    let (k, c, m, d) = (cfg.arms, cfg.clusters, cfg.context_dim, cfg.resources);

    let counts = membership_counts(k, &cfg.proportion_weights());
    let mut memberships = Vec::with_capacity(k);
    for (ci, &n) in counts.iter().enumerate() {
        memberships.extend(std::iter::repeat(ci).take(n));
    }

    let mut mu = Array2::<f64>::zeros((c, m));
    let mut separated = false;
    for _ in 0..1000 {
        for i in 0..c {
            for j in 0..m {
                mu[[i, j]] = rng.random::<f64>();
            }
            let norm1: f64 = mu.row(i).iter().sum();
            if norm1 > 1.0 {
                mu.row_mut(i).mapv_inplace(|v| v / norm1);
            }
        }
        separated = (0..c).all(|i| {
            (i + 1..c).all(|j| {
                let diff = &mu.row(i) - &mu.row(j);
                diff.dot(&diff).sqrt() >= cfg.separation
            })
        });
        if separated {
            break;
        }
    }
    if !separated {
        return Err(Error::Generation(format!(
            "could not reach separation {} after 1000 attempts (clusters={c}, context_dim={m})",
            cfg.separation
        )));
    }

    let mut w = Vec::with_capacity(c);
    for _ in 0..c {
        let mut wc = Array2::<f64>::zeros((m, d));
        for i in 0..m {
            for j in 0..d {
                wc[[i, j]] = rng.random::<f64>();
            }
        }
        for j in 0..d {
            let norm1: f64 = wc.column(j).iter().sum();
            if norm1 > 1.0 {
                wc.column_mut(j).mapv_inplace(|v| v / norm1);
            }
        }
        w.push(wc);
    }

    Instance::new(
        memberships,
        mu,
        w,
        cfg.noise_half_width,
        cfg.context_distribution.clone(),
    )
}
