//! Benchmark quantities: the fluid upper bound on expected total reward
//! (`oracle_opt`), its exploration-phase estimate (`estimate_opt_hat`), and
//! the budget-pacing constant derived from that estimate.
//!
//! Both quantities are optimal values of the same static program: choose a
//! per-context sub-distribution over arms maximizing mean reward subject to
//! the per-period budget rate `B/T` in expectation. The oracle averages the
//! true means over Monte Carlo contexts; the estimate averages fitted
//! cluster means over the exploration contexts, scaled from the subset up
//! to the full arm population.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use serde_json::json;

use crate::env::Instance;
use crate::error::{Error, Result};
use crate::estimate::ClusterEstimate;
use crate::lp::{solve_policy_lp, PolicyLp};

/// Benchmark summary attached to a run.
#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub opt_total: f64,
    pub opt_hat_total: f64,
    pub z: f64,
    pub mc_samples: usize,
}

impl BenchmarkResult {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "opt_total": self.opt_total,
            "opt_hat_total": self.opt_hat_total,
            "z": self.z,
            "mc_samples": self.mc_samples,
        })
    }
}

/// Monte Carlo estimate of the fluid benchmark: `T` times the optimal value
/// of the per-period program with true means, averaged over `n_mc` sampled
/// context matrices, under budget rate `B/T` per resource.
pub fn oracle_opt<R: Rng>(
    instance: &Instance,
    budget: f64,
    horizon: usize,
    n_mc: usize,
    rng: &mut R,
) -> Result<f64> {
    if horizon == 0 || n_mc == 0 {
        return Err(Error::Validation(
            "oracle needs a positive horizon and sample count".into(),
        ));
    }
    if !(budget > 0.0) {
        return Err(Error::Validation(format!("budget must be positive, got {budget}")));
    }
    let k = instance.arms();
    let d = instance.resources();
    let scale = 1.0 / n_mc as f64;
    let mut rho = Array2::zeros((n_mc, k));
    let mut weights = Array3::zeros((n_mc, k, d));
    for s in 0..n_mc {
        let x = instance.draw_context(rng);
        for a in 0..k {
            let row = x.row(a).to_owned();
            rho[[s, a]] = scale * instance.mean_reward(a, &row);
            let cons = instance.mean_consumption(a, &row);
            for j in 0..d {
                weights[[s, a, j]] = scale * cons[j];
            }
        }
    }
    let beta = Array1::from_elem(d, budget / horizon as f64);
    let sol = solve_policy_lp(&PolicyLp { rho, weights, beta })?;
    Ok(horizon as f64 * sol.value)
}

/// Exploration-phase estimate of the benchmark. `sample_contexts` holds one
/// `(N_S x m)` matrix per exploration period (rows follow subset order);
/// `labels` maps each subset position to its cluster in `1..=C` (0 means
/// unmatched and the arm is dropped); `estimates[c-1]` carries the fitted
/// means of cluster `c`. The subset average is scaled by `K/N_S` to stand in
/// for the whole arm population.
pub fn estimate_opt_hat(
    sample_contexts: &[Array2<f64>],
    estimates: &[ClusterEstimate],
    labels: &[usize],
    arms: usize,
    budget: f64,
    horizon: usize,
) -> Result<f64> {
    let n_s = labels.len();
    if n_s == 0 || sample_contexts.is_empty() {
        return Err(Error::Validation(
            "the estimate needs a nonempty subset and exploration contexts".into(),
        ));
    }
    if sample_contexts.len() % n_s != 0 {
        return Err(Error::Validation(format!(
            "{} exploration periods do not divide into rounds over {n_s} arms",
            sample_contexts.len()
        )));
    }
    if horizon == 0 || !(budget > 0.0) {
        return Err(Error::Validation(
            "the estimate needs a positive horizon and budget".into(),
        ));
    }
    if estimates.is_empty() {
        return Err(Error::Validation("no cluster estimates given".into()));
    }
    let m = estimates[0].context_dim();
    let d = estimates[0].resources();
    let cols: Vec<usize> = (0..n_s).filter(|&i| labels[i] != 0).collect();
    if cols.is_empty() {
        return Err(Error::Numerical(
            "every subset arm is unmatched; the benchmark estimate is undefined".into(),
        ));
    }
    for (i, &l) in labels.iter().enumerate() {
        if l > estimates.len() {
            return Err(Error::Validation(format!(
                "subset position {i} labeled {l} but only {} clusters are fitted",
                estimates.len()
            )));
        }
    }
    let samples = sample_contexts.len();
    let t0 = samples / n_s;
    let scale = arms as f64 / (n_s as f64 * n_s as f64 * t0 as f64);
    let mut rho = Array2::zeros((samples, cols.len()));
    let mut weights = Array3::zeros((samples, cols.len(), d));
    for (s, ctx) in sample_contexts.iter().enumerate() {
        if ctx.nrows() != n_s || ctx.ncols() != m {
            return Err(Error::Validation(format!(
                "exploration context {s} has shape {:?}, expected ({n_s}, {m})",
                ctx.dim()
            )));
        }
        for (j, &pos) in cols.iter().enumerate() {
            let est = &estimates[labels[pos] - 1];
            let x = ctx.row(pos).to_owned();
            rho[[s, j]] = scale * est.mu_hat.dot(&x);
            for r in 0..d {
                weights[[s, j, r]] = scale * est.w_hat.column(r).dot(&x);
            }
        }
    }
    let beta = Array1::from_elem(d, budget / horizon as f64);
    let sol = solve_policy_lp(&PolicyLp { rho, weights, beta })?;
    Ok(horizon as f64 * sol.value)
}

/// Pacing constant `Z = N_S · OPT_hat / (2 K B')` where `B'` is the budget
/// left after exploration.
pub fn compute_z(opt_hat_total: f64, n_s: usize, arms: usize, b_prime: f64) -> Result<f64> {
    if !(b_prime > 0.0) {
        return Err(Error::Validation(format!(
            "post-exploration budget must be positive, got {b_prime}"
        )));
    }
    if arms == 0 || n_s == 0 {
        return Err(Error::Validation("Z needs positive arm and subset counts".into()));
    }
    if !opt_hat_total.is_finite() {
        return Err(Error::Numerical(format!(
            "benchmark estimate is not finite: {opt_hat_total}"
        )));
    }
    Ok(n_s as f64 * opt_hat_total / (2.0 * arms as f64 * b_prime))
}

/// Realized regret against the fluid benchmark.
pub fn regret(opt_total: f64, total_reward: f64) -> f64 {
    opt_total - total_reward
}
