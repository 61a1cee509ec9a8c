//! Arm-subset sampling, the penalized least-squares clustering fit, cluster
//! assignment, and clustering-error scoring.
//!
//! The fit minimizes, over per-arm parameters `mu_a` and cluster centers
//! `mu_c`,
//!
//! ```text
//! Q = (1/(N_S T0)) Σ_a Σ_t ½(r_t(a) - mu_aᵀx_t(a))²
//!   + (λ1/N_S)     Σ_a Π_c ‖mu_a - mu_c‖₂
//! ```
//!
//! by alternating block descent: per-arm proximal/gradient candidate steps
//! (the product penalty is handled by subgradients away from kinks and by
//! exact snap-to-center candidates at them), then weighted geometric-median
//! updates for each center. Every block step is accepted only if it lowers
//! the objective, so `Q` is nonincreasing across outer iterations by
//! construction and that is asserted each round.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg;

/// Observations for one arm: `contexts` is (T0 x m), `rewards` length T0.
#[derive(Debug, Clone)]
pub struct ArmData {
    pub contexts: Array2<f64>,
    pub rewards: Array1<f64>,
}

/// Regularization weight: fixed value or the built-in schedule
/// [`default_lambda1`].
#[derive(Debug, Clone, PartialEq)]
pub enum Lambda1Mode {
    Auto,
    Fixed(f64),
}

impl Serialize for Lambda1Mode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Lambda1Mode::Auto => s.serialize_str("auto"),
            Lambda1Mode::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Lambda1Mode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Value(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "auto" => Ok(Lambda1Mode::Auto),
            Raw::Name(s) => Err(D::Error::custom(format!(
                "unknown lambda1 keyword {s:?}; expected \"auto\" or a number"
            ))),
            Raw::Value(v) => Ok(Lambda1Mode::Fixed(v)),
        }
    }
}

fn default_delta() -> f64 {
    0.25
}
fn default_c0() -> f64 {
    1.0
}
fn default_lambda1_mode() -> Lambda1Mode {
    Lambda1Mode::Auto
}
fn default_c1() -> f64 {
    0.5
}
fn default_max_iter() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-8
}
fn default_match_tol() -> f64 {
    1e-9
}
fn default_restarts() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringConfig {
    /// Subset-size exponent, in (0, 1/2).
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Leading constant of the subset-size rule.
    #[serde(default = "default_c0")]
    pub coverage_constant: f64,
    #[serde(default = "default_lambda1_mode")]
    pub lambda1: Lambda1Mode,
    /// c1 in the automatic schedule `λ1 = c1·T0^(-1/4)`.
    #[serde(default = "default_c1")]
    pub lambda1_constant: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Outer-iteration convergence threshold on the objective decrease.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Distance below which a fitted parameter counts as equal to a center.
    #[serde(default = "default_match_tol")]
    pub match_tol: f64,
    #[serde(default = "default_restarts")]
    pub kmeans_restarts: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            delta: default_delta(),
            coverage_constant: default_c0(),
            lambda1: default_lambda1_mode(),
            lambda1_constant: default_c1(),
            max_iter: default_max_iter(),
            tol: default_tol(),
            match_tol: default_match_tol(),
            kmeans_restarts: default_restarts(),
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Validation(format!(
                "delta must lie in (0, 1/2), got {}",
                self.delta
            )));
        }
        if !(self.coverage_constant > 0.0) {
            return Err(Error::Validation("coverage_constant must be positive".into()));
        }
        if let Lambda1Mode::Fixed(v) = self.lambda1 {
            if !(v > 0.0) {
                return Err(Error::Validation(format!(
                    "fixed lambda1 must be positive, got {v}"
                )));
            }
        }
        if !(self.lambda1_constant > 0.0) {
            return Err(Error::Validation("lambda1_constant must be positive".into()));
        }
        if self.max_iter == 0 || self.kmeans_restarts == 0 {
            return Err(Error::Validation(
                "max_iter and kmeans_restarts must be positive".into(),
            ));
        }
        for (name, v) in [("tol", self.tol), ("match_tol", self.match_tol)] {
            if !(v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn resolve_lambda1(&self, t0: usize) -> f64 {
        match self.lambda1 {
            Lambda1Mode::Fixed(v) => v,
            Lambda1Mode::Auto => default_lambda1(t0, self.lambda1_constant),
        }
    }
}

/// Subset size `N_S = min(K, ceil(c0 · p_min⁻¹ · (T^δ + ln C)))`.
pub fn subset_size(k: usize, p_min: f64, clusters: usize, horizon: usize, delta: f64, c0: f64) -> usize {
    let raw = c0 * (1.0 / p_min) * ((horizon as f64).powf(delta) + (clusters as f64).ln());
    (raw.ceil() as usize).clamp(1, k)
}

/// Draw the exploration subset: `subset_size` distinct arms, uniform without
/// replacement, returned sorted ascending.
pub fn sample_subset<R: Rng>(
    k: usize,
    p_min: f64,
    clusters: usize,
    horizon: usize,
    delta: f64,
    c0: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k == 0 || clusters == 0 || horizon == 0 {
        return Err(Error::Validation(
            "subset sampling needs K >= 1, C >= 1, T >= 1".into(),
        ));
    }
    if !(p_min > 0.0 && p_min * clusters as f64 <= 1.0 + 1e-12) {
        return Err(Error::Validation(format!(
            "p_min must satisfy 0 < p_min <= 1/C, got {p_min} with C = {clusters}"
        )));
    }
    let n_s = subset_size(k, p_min, clusters, horizon, delta, c0);
    let mut ids = rand::seq::index::sample(rng, k, n_s).into_vec();
    ids.sort_unstable();
    Ok(ids)
}

/// Regularization schedule `λ1 = c1 · T0^(-1/4)`: decays slowly enough that
/// `T0·λ1²` still grows, fast enough that `λ1` times any polylog vanishes.
pub fn default_lambda1(t0: usize, c1: f64) -> f64 {
    c1 * (t0 as f64).powf(-0.25)
}

/// The clustering fit output.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    /// Arm ids of the exploration subset, in the order `data` was given.
    pub subset: Vec<usize>,
    /// Fitted per-arm parameters, (|S| x m).
    pub per_arm_params: Array2<f64>,
    /// Fitted centers, (C x m).
    pub centers: Array2<f64>,
    /// Per subset position: 1..=C, or 0 when matched to no center.
    pub labels: Vec<usize>,
    pub objective_value: f64,
    pub iterations: usize,
}

impl ClusteringResult {
    pub fn to_json(&self) -> serde_json::Value {
        let rows = |a: &Array2<f64>| -> Vec<Vec<f64>> {
            a.rows().into_iter().map(|r| r.to_vec()).collect()
        };
        json!({
            "subset": self.subset,
            "per_arm_params": rows(&self.per_arm_params),
            "centers": rows(&self.centers),
            "labels": self.labels,
            "objective_value": self.objective_value,
            "iterations": self.iterations,
        })
    }
}

struct ArmMoments {
    gram: Array2<f64>,
    xr: Array1<f64>,
    rr: f64,
}

impl ArmMoments {
    fn from_data(d: &ArmData) -> ArmMoments {
        let m = d.contexts.ncols();
        let mut gram = Array2::zeros((m, m));
        let mut xr = Array1::zeros(m);
        for (row, &r) in d.contexts.rows().into_iter().zip(d.rewards.iter()) {
            for i in 0..m {
                for j in 0..m {
                    gram[[i, j]] += row[i] * row[j];
                }
                xr[i] += row[i] * r;
            }
        }
        let rr = d.rewards.iter().map(|r| r * r).sum();
        ArmMoments { gram, xr, rr }
    }

    fn loss(&self, mu: &Array1<f64>) -> f64 {
        0.5 * (mu.dot(&self.gram.dot(mu)) - 2.0 * mu.dot(&self.xr) + self.rr)
    }

    fn loss_grad(&self, mu: &Array1<f64>) -> Array1<f64> {
        self.gram.dot(mu) - &self.xr
    }
}

fn center_distances(mu: &Array1<f64>, centers: &Array2<f64>) -> Vec<f64> {
    centers
        .rows()
        .into_iter()
        .map(|c| (mu - &c.to_owned()).mapv(|v| v * v).sum().sqrt())
        .collect()
}

fn validate_fit_inputs(
    params: &Array2<f64>,
    centers: &Array2<f64>,
    data: &[ArmData],
    n_s: usize,
    t0: usize,
) -> Result<(usize, usize)> {
    let m = params.ncols();
    if data.len() != n_s || params.nrows() != n_s {
        return Err(Error::Validation(format!(
            "expected {n_s} arms, got {} data entries and {} parameter rows",
            data.len(),
            params.nrows()
        )));
    }
    if centers.ncols() != m {
        return Err(Error::Validation("center dimension mismatch".into()));
    }
    for (i, d) in data.iter().enumerate() {
        if d.contexts.nrows() != t0 || d.rewards.len() != t0 {
            return Err(Error::Validation(format!(
                "arm {i} carries {} observations, expected {t0}",
                d.contexts.nrows()
            )));
        }
        if d.contexts.ncols() != m {
            return Err(Error::Validation("context dimension mismatch".into()));
        }
    }
    Ok((m, centers.nrows()))
}

/// Evaluate the clustering objective `Q` at the given parameters.
pub fn classifier_lasso_objective(
    params: &Array2<f64>,
    centers: &Array2<f64>,
    data: &[ArmData],
    lambda1: f64,
    n_s: usize,
    t0: usize,
) -> Result<f64> {
    validate_fit_inputs(params, centers, data, n_s, t0)?;
    let loss_scale = 1.0 / (n_s as f64 * t0 as f64);
    let pen_scale = lambda1 / n_s as f64;
    let mut q = 0.0;
    for (a, d) in data.iter().enumerate() {
        let mu = params.row(a).to_owned();
        let mut loss = 0.0;
        for (row, &r) in d.contexts.rows().into_iter().zip(d.rewards.iter()) {
            let e = r - mu.dot(&row.to_owned());
            loss += 0.5 * e * e;
        }
        q += loss_scale * loss;
        q += pen_scale * center_distances(&mu, centers).iter().product::<f64>();
    }
    Ok(q)
}

/// Analytic gradient of `Q` with respect to per-arm parameters (first) and
/// centers (second). Valid where the penalty is differentiable, i.e. all
/// arm-center distances are positive.
pub fn objective_gradient(
    params: &Array2<f64>,
    centers: &Array2<f64>,
    data: &[ArmData],
    lambda1: f64,
    n_s: usize,
    t0: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (m, c) = validate_fit_inputs(params, centers, data, n_s, t0)?;
    let loss_scale = 1.0 / (n_s as f64 * t0 as f64);
    let pen_scale = lambda1 / n_s as f64;
    let mut g_params = Array2::zeros((n_s, m));
    let mut g_centers = Array2::<f64>::zeros((c, m));
    for (a, d) in data.iter().enumerate() {
        let mu = params.row(a).to_owned();
        let mom = ArmMoments::from_data(d);
        let gs = mom.loss_grad(&mu) * loss_scale;
        let dists = center_distances(&mu, centers);
        let mut gp = Array1::<f64>::zeros(m);
        for k in 0..c {
            if dists[k] <= 0.0 {
                continue;
            }
            let rest: f64 = (0..c).filter(|&j| j != k).map(|j| dists[j]).product();
            let dir = (&mu - &centers.row(k).to_owned()) / dists[k];
            let term = dir * (pen_scale * rest);
            gp = gp + &term;
            let mut crow = g_centers.row_mut(k);
            for i in 0..m {
                crow[i] -= term[i];
            }
        }
        let total = gs + gp;
        for i in 0..m {
            g_params[[a, i]] = total[i];
        }
    }
    Ok((g_params, g_centers))
}

/// Label each fitted parameter row: the lowest-index center within
/// `match_tol` (2-norm), or 0 when none qualifies.
pub fn assign_clusters(params: &Array2<f64>, centers: &Array2<f64>, match_tol: f64) -> Vec<usize> {
    params
        .rows()
        .into_iter()
        .map(|row| {
            let mu = row.to_owned();
            center_distances(&mu, centers)
                .iter()
                .position(|&d| d <= match_tol)
                .map_or(0, |k| k + 1)
        })
        .collect()
}

fn kmeans_pp_seed<R: Rng>(points: &Array2<f64>, c: usize, rng: &mut R) -> Vec<usize> {
    let n = points.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut dist2 = vec![f64::INFINITY; n];
    while chosen.len() < c {
        let last = points.row(*chosen.last().unwrap()).to_owned();
        for i in 0..n {
            let d = (&points.row(i).to_owned() - &last).mapv(|v| v * v).sum();
            if d < dist2[i] {
                dist2[i] = d;
            }
        }
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        chosen.push(pick);
    }
    chosen
}

fn lloyd(points: &Array2<f64>, mut centers: Array2<f64>) -> Array2<f64> {
    let (n, m) = points.dim();
    let c = centers.nrows();
    for _ in 0..100 {
        let mut sums = Array2::<f64>::zeros((c, m));
        let mut counts = vec![0usize; c];
        for i in 0..n {
            let p = points.row(i).to_owned();
            let dists = center_distances(&p, &centers);
            let mut best = 0;
            for k in 1..c {
                if dists[k] < dists[best] {
                    best = k;
                }
            }
            counts[best] += 1;
            for j in 0..m {
                sums[[best, j]] += p[j];
            }
        }
        let mut moved = 0.0f64;
        for k in 0..c {
            if counts[k] == 0 {
                continue;
            }
            for j in 0..m {
                let nv = sums[[k, j]] / counts[k] as f64;
                moved = moved.max((nv - centers[[k, j]]).abs());
                centers[[k, j]] = nv;
            }
        }
        if moved < 1e-12 {
            break;
        }
    }
    centers
}

fn penalty_total(params: &Array2<f64>, centers: &Array2<f64>) -> f64 {
    params
        .rows()
        .into_iter()
        .map(|row| center_distances(&row.to_owned(), centers).iter().product::<f64>())
        .sum()
}

/// Minimize `Q` by alternating block descent, initialized from per-arm ridge
/// estimates and the best of `kmeans_restarts` k-means++ center seeds.
pub fn classifier_lasso_fit<R: Rng>(
    subset: &[usize],
    data: &[ArmData],
    clusters: usize,
    lambda1: f64,
    cfg: &ClusteringConfig,
    rng: &mut R,
) -> Result<ClusteringResult> {
    cfg.validate()?;
    if data.is_empty() || clusters == 0 {
        return Err(Error::Validation("fit needs at least one arm and one cluster".into()));
    }
    if subset.len() != data.len() {
        return Err(Error::Validation(format!(
            "subset of {} ids does not match {} data entries",
            subset.len(),
            data.len()
        )));
    }
    if !(lambda1 >= 0.0) {
        return Err(Error::Validation(format!("lambda1 must be >= 0, got {lambda1}")));
    }
    let n_s = data.len();
    let t0 = data[0].contexts.nrows();
    let m = data[0].contexts.ncols();
    for d in data {
        if d.contexts.nrows() != t0 || d.rewards.len() != t0 || d.contexts.ncols() != m {
            return Err(Error::Validation(
                "every arm must carry the same (T0 x m) observation shape".into(),
            ));
        }
    }

    let moments: Vec<ArmMoments> = data.iter().map(ArmMoments::from_data).collect();

    // Per-arm ridge initialization.
    let mut params = Array2::<f64>::zeros((n_s, m));
    for (a, mom) in moments.iter().enumerate() {
        let mut reg = mom.gram.clone();
        for i in 0..m {
            reg[[i, i]] += 1e-6;
        }
        let mu = linalg::solve_spd(&reg, &mom.xr)?;
        for i in 0..m {
            params[[a, i]] = mu[i];
        }
    }

    // Center initialization: best penalty value over k-means++ restarts.
    let mut centers = Array2::<f64>::zeros((clusters, m));
    let mut best_pen = f64::INFINITY;
    for _ in 0..cfg.kmeans_restarts {
        let seed_idx = kmeans_pp_seed(&params, clusters, rng);
        let mut cand = Array2::<f64>::zeros((clusters, m));
        for (k, &i) in seed_idx.iter().enumerate() {
            for j in 0..m {
                cand[[k, j]] = params[[i, j]];
            }
        }
        let cand = lloyd(&params, cand);
        let pen = penalty_total(&params, &cand);
        if pen < best_pen {
            best_pen = pen;
            centers = cand;
        }
    }

    let loss_scale = 1.0 / (n_s as f64 * t0 as f64);
    let pen_scale = lambda1 / n_s as f64;
    let arm_objective = |mom: &ArmMoments, mu: &Array1<f64>, centers: &Array2<f64>| -> f64 {
        loss_scale * mom.loss(mu)
            + pen_scale * center_distances(mu, centers).iter().product::<f64>()
    };
    let total_objective = |params: &Array2<f64>, centers: &Array2<f64>| -> f64 {
        moments
            .iter()
            .enumerate()
            .map(|(a, mom)| arm_objective(mom, &params.row(a).to_owned(), centers))
            .sum()
    };

    let mut q_prev = total_objective(&params, &centers);
    if !q_prev.is_finite() {
        return Err(Error::Numerical("clustering objective is non-finite at init".into()));
    }
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;

        // Block 1: per-arm parameters.
        for a in 0..n_s {
            let mom = &moments[a];
            let mu = params.row(a).to_owned();
            let mut best_f = arm_objective(mom, &mu, &centers);
            let mut best_mu = mu.clone();
            let dists = center_distances(&mu, &centers);

            // Subgradient step on the full per-arm objective; at a kink the
            // vanished factors zero out every product term, which is a valid
            // subgradient choice.
            let gs = mom.loss_grad(&mu) * loss_scale;
            let mut gp = Array1::<f64>::zeros(m);
            for k in 0..clusters {
                if dists[k] <= cfg.match_tol {
                    continue;
                }
                let rest: f64 = (0..clusters).filter(|&j| j != k).map(|j| dists[j]).product();
                gp = gp + &((&mu - &centers.row(k).to_owned()) * (pen_scale * rest / dists[k]));
            }
            let g_total = &gs + &gp;
            let mut step = 1.0;
            for _ in 0..25 {
                let cand = &mu - &(&g_total * step);
                let f = arm_objective(mom, &cand, &centers);
                if f < best_f {
                    best_f = f;
                    best_mu = cand;
                    break;
                }
                step *= 0.5;
            }

            // Proximal steps toward each center (soft-threshold on the
            // distance to that center with the other factors frozen), plus
            // the center itself as an exact-snap candidate.
            for k in 0..clusters {
                let ck = centers.row(k).to_owned();
                let weight: f64 = pen_scale
                    * (0..clusters).filter(|&j| j != k).map(|j| dists[j]).product::<f64>();
                let mut step = 1.0;
                for _ in 0..14 {
                    let z = &mu - &(&gs * step);
                    let diff = &z - &ck;
                    let nd = diff.mapv(|v| v * v).sum().sqrt();
                    let cand = if nd <= step * weight {
                        ck.clone()
                    } else {
                        &ck + &(diff * (1.0 - step * weight / nd))
                    };
                    let f = arm_objective(mom, &cand, &centers);
                    if f < best_f {
                        best_f = f;
                        best_mu = cand;
                        break;
                    }
                    step *= 0.5;
                }
                let f = arm_objective(mom, &ck, &centers);
                if f < best_f {
                    best_f = f;
                    best_mu = ck;
                }
            }
            for i in 0..m {
                params[[a, i]] = best_mu[i];
            }
        }

        // Block 2: centers. Each center solves a weighted geometric-median
        // problem (the loss does not involve centers); candidates are the
        // current center, a Weiszfeld polish, and every data point, and the
        // best is kept, so this block never increases Q.
        for k in 0..clusters {
            let weights: Vec<f64> = (0..n_s)
                .map(|a| {
                    let mu = params.row(a).to_owned();
                    let dists = center_distances(&mu, &centers);
                    (0..clusters).filter(|&j| j != k).map(|j| dists[j]).product()
                })
                .collect();
            if weights.iter().all(|&w| w <= 1e-300) {
                continue;
            }
            let median_cost = |y: &Array1<f64>| -> f64 {
                (0..n_s)
                    .map(|a| {
                        let diff = &params.row(a).to_owned() - y;
                        weights[a] * diff.mapv(|v| v * v).sum().sqrt()
                    })
                    .sum()
            };
            let mut best_y = centers.row(k).to_owned();
            let mut best_cost = median_cost(&best_y);
            let mut y = best_y.clone();
            for _ in 0..50 {
                let mut num = Array1::<f64>::zeros(m);
                let mut den = 0.0;
                for a in 0..n_s {
                    let pa = params.row(a).to_owned();
                    let d = (&pa - &y).mapv(|v| v * v).sum().sqrt();
                    if d < 1e-12 {
                        continue;
                    }
                    let w = weights[a] / d;
                    num = num + &(pa * w);
                    den += w;
                }
                if den <= 0.0 {
                    break;
                }
                let next = num / den;
                if (&next - &y).mapv(f64::abs).sum() < 1e-14 {
                    y = next;
                    break;
                }
                y = next;
            }
            for cand in std::iter::once(y.clone())
                .chain((0..n_s).map(|a| params.row(a).to_owned()))
            {
                let cost = median_cost(&cand);
                if cost < best_cost {
                    best_cost = cost;
                    best_y = cand;
                }
            }
            for j in 0..m {
                centers[[k, j]] = best_y[j];
            }
        }

        let q = total_objective(&params, &centers);
        if !q.is_finite() {
            return Err(Error::Numerical("clustering objective became non-finite".into()));
        }
        if q > q_prev + 1e-12 * (1.0 + q_prev.abs()) {
            return Err(Error::Numerical(format!(
                "clustering objective increased from {q_prev} to {q}"
            )));
        }
        let decrease = q_prev - q;
        q_prev = q;
        if decrease < cfg.tol {
            break;
        }
    }

    // Final snap: identify parameters with the centers they touch.
    for a in 0..n_s {
        let mu = params.row(a).to_owned();
        let dists = center_distances(&mu, &centers);
        if let Some(k) = dists.iter().position(|&d| d <= cfg.match_tol) {
            for j in 0..m {
                params[[a, j]] = centers[[k, j]];
            }
        }
    }
    let labels = assign_clusters(&params, &centers, cfg.match_tol);
    let objective_value = total_objective(&params, &centers);
    Ok(ClusteringResult {
        subset: subset.to_vec(),
        per_arm_params: params,
        centers,
        labels,
        objective_value,
        iterations,
    })
}

fn for_each_permutation(n: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], f: &mut impl FnMut(&[usize])) {
        if cur.len() == n {
            f(cur);
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(n, cur, used, f);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(n, &mut Vec::with_capacity(n), &mut vec![false; n], f);
}

/// The label permutation (estimated -> true, 1-based) maximizing agreement.
/// Arms with estimated label 0 are ignored. Exhaustive search, so the
/// cluster count is capped at 8.
pub fn best_permutation(est: &[usize], truth: &[usize], clusters: usize) -> Result<Vec<usize>> {
    if est.len() != truth.len() {
        return Err(Error::Validation("label arrays differ in length".into()));
    }
    if clusters == 0 {
        return Err(Error::Validation("cluster count must be positive".into()));
    }
    if clusters > 8 {
        return Err(Error::Unsupported(format!(
            "clustering error scoring enumerates label permutations and supports at most 8 clusters, got {clusters}"
        )));
    }
    let mut conf = vec![vec![0i64; clusters]; clusters];
    for (&e, &t) in est.iter().zip(truth.iter()) {
        if e == 0 {
            continue;
        }
        if e > clusters || t == 0 || t > clusters {
            return Err(Error::Validation(format!(
                "label pair ({e}, {t}) outside 1..={clusters}"
            )));
        }
        conf[e - 1][t - 1] += 1;
    }
    let mut best_perm: Vec<usize> = (0..clusters).collect();
    let mut best_agree = -1i64;
    for_each_permutation(clusters, &mut |perm| {
        let agree: i64 = (0..clusters).map(|e| conf[e][perm[e]]).sum();
        if agree > best_agree {
            best_agree = agree;
            best_perm = perm.to_vec();
        }
    });
    Ok(best_perm.iter().map(|&v| v + 1).collect())
}

/// Per-cluster error rates after the agreement-maximizing relabeling: entry
/// `c-1` is the fraction of arms mapped to cluster `c` whose true cluster
/// differs (0 when no arm maps there). Estimated label 0 is excluded from
/// numerator and denominator.
pub fn clustering_error(est: &[usize], truth: &[usize], clusters: usize) -> Result<Vec<f64>> {
    let perm = best_permutation(est, truth, clusters)?;
    let mut assigned = vec![0usize; clusters];
    let mut wrong = vec![0usize; clusters];
    for (&e, &t) in est.iter().zip(truth.iter()) {
        if e == 0 {
            continue;
        }
        let c = perm[e - 1];
        assigned[c - 1] += 1;
        if t != c {
            wrong[c - 1] += 1;
        }
    }
    Ok((0..clusters)
        .map(|c| {
            if assigned[c] == 0 {
                0.0
            } else {
                wrong[c] as f64 / assigned[c] as f64
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use ndarray::array;

    /// Synthetic clustered regression data: arm `a` in cluster `truth[a]`
    /// gets `t0` uniform contexts and rewards `muᵀx + noise`.
    fn synth_data<R: Rng>(
        true_centers: &Array2<f64>,
        truth: &[usize],
        t0: usize,
        noise: f64,
        rng: &mut R,
    ) -> Vec<ArmData> {
        let m = true_centers.ncols();
        truth
            .iter()
            .map(|&c| {
                let mu = true_centers.row(c - 1).to_owned();
                let mut contexts = Array2::zeros((t0, m));
                let mut rewards = Array1::zeros(t0);
                for t in 0..t0 {
                    for j in 0..m {
                        contexts[[t, j]] = rng.random::<f64>();
                    }
                    let x = contexts.row(t).to_owned();
                    rewards[t] = mu.dot(&x) + noise * (2.0 * rng.random::<f64>() - 1.0);
                }
                ArmData { contexts, rewards }
            })
            .collect()
    }

    #[test]
    fn subset_size_frozen_examples() {
        // ceil(2 (4 + ln 2)) = 10.
        assert_eq!(subset_size(100, 0.5, 2, 16, 0.5, 1.0), 10);
        // C = 1 drops the log term: ceil(2 * 4) = 8.
        assert_eq!(subset_size(100, 0.5, 1, 16, 0.5, 1.0), 8);
        // Cap at K.
        assert_eq!(subset_size(5, 0.5, 2, 16, 0.5, 1.0), 5);
    }

    #[test]
    fn subset_is_sorted_distinct_and_in_range() {
        let mut rng = stream(3, 0x21);
        let s = sample_subset(50, 0.2, 3, 10_000, 0.3, 1.0, &mut rng).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|&a| a < 50));
    }

    #[test]
    fn lambda1_schedule_values_and_growth() {
        assert!((default_lambda1(16, 0.5) - 0.25).abs() < 1e-15);
        assert!((default_lambda1(10_000, 0.5) - 0.05).abs() < 1e-15);
        // T0 λ1² = c1² √T0 must grow along the schedule.
        let vals: Vec<f64> = [16usize, 81, 256]
            .iter()
            .map(|&t0| t0 as f64 * default_lambda1(t0, 0.5).powi(2))
            .collect();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 2.25).abs() < 1e-12);
        assert!((vals[2] - 4.0).abs() < 1e-12);
        assert!(vals[0] < vals[1] && vals[1] < vals[2]);
    }

    #[test]
    fn objective_hand_example() {
        // One arm, one observation, r = 1 at x = 1, mu_a = 0, centers {0, 1}:
        // Q = 1/2 + 1 * (0 * 1) = 0.5.
        let params = array![[0.0]];
        let centers = array![[0.0], [1.0]];
        let data = vec![ArmData { contexts: array![[1.0]], rewards: array![1.0] }];
        let q = classifier_lasso_objective(&params, &centers, &data, 1.0, 1, 1).unwrap();
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn penalty_vanishes_on_a_center_and_without_lambda() {
        let mut rng = stream(4, 0x21);
        let centers = array![[0.3, 0.1], [0.7, 0.2]];
        let data = synth_data(&centers, &[1, 2], 5, 0.0, &mut rng);
        // Params sitting exactly on centers: objective reduces to the loss.
        let params = centers.clone();
        let with_pen =
            classifier_lasso_objective(&params, &centers, &data, 7.0, 2, 5).unwrap();
        let without =
            classifier_lasso_objective(&params, &centers, &data, 0.0, 2, 5).unwrap();
        assert!((with_pen - without).abs() < 1e-15);
        // And lambda1 = 0 equals the scaled pooled squared error by hand.
        let mut hand = 0.0;
        for (a, d) in data.iter().enumerate() {
            for t in 0..5 {
                let x = d.contexts.row(t).to_owned();
                let e = d.rewards[t] - params.row(a).to_owned().dot(&x);
                hand += 0.5 * e * e;
            }
        }
        assert!((without - hand / 10.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = stream(5, 0x21);
        let (n_s, t0, m, c) = (4usize, 6usize, 3usize, 2usize);
        let true_centers = array![[0.2, 0.4, 0.1], [0.6, 0.1, 0.3]];
        let data = synth_data(&true_centers, &[1, 1, 2, 2], t0, 0.1, &mut rng);
        for trial in 0..20 {
            // Random smooth point: keep every arm-center distance above 1e-3.
            let mut params = Array2::zeros((n_s, m));
            let mut centers = Array2::zeros((c, m));
            loop {
                for v in params.iter_mut() {
                    *v = rng.random::<f64>();
                }
                for v in centers.iter_mut() {
                    *v = rng.random::<f64>();
                }
                let ok = (0..n_s).all(|a| {
                    center_distances(&params.row(a).to_owned(), &centers)
                        .iter()
                        .all(|&d| d > 1e-3)
                });
                if ok {
                    break;
                }
            }
            let lambda1 = 0.3;
            let (gp, gc) =
                objective_gradient(&params, &centers, &data, lambda1, n_s, t0).unwrap();
            let h = 1e-5;
            let numeric = |pi: Option<(usize, usize)>, ci: Option<(usize, usize)>| -> f64 {
                let mut p2 = params.clone();
                let mut c2 = centers.clone();
                let mut qd = 0.0;
                for (sign, s) in [(1.0, h), (-1.0, -h)] {
                    if let Some((i, j)) = pi {
                        p2[[i, j]] = params[[i, j]] + s;
                    }
                    if let Some((i, j)) = ci {
                        c2[[i, j]] = centers[[i, j]] + s;
                    }
                    let q =
                        classifier_lasso_objective(&p2, &c2, &data, lambda1, n_s, t0).unwrap();
                    qd += sign * q;
                    if let Some((i, j)) = pi {
                        p2[[i, j]] = params[[i, j]];
                    }
                    if let Some((i, j)) = ci {
                        c2[[i, j]] = centers[[i, j]];
                    }
                }
                qd / (2.0 * h)
            };
            let mut worst = 0.0f64;
            for i in 0..n_s {
                for j in 0..m {
                    let fd = numeric(Some((i, j)), None);
                    let rel = (gp[[i, j]] - fd).abs() / fd.abs().max(1.0);
                    worst = worst.max(rel);
                }
            }
            for i in 0..c {
                for j in 0..m {
                    let fd = numeric(None, Some((i, j)));
                    let rel = (gc[[i, j]] - fd).abs() / fd.abs().max(1.0);
                    worst = worst.max(rel);
                }
            }
            assert!(worst <= 1e-5, "trial {trial}: worst relative error {worst}");
        }
    }

    #[test]
    fn recovers_two_clusters_on_noise_free_line() {
        // Six arms in m = 1 with true parameters 0 and 1; noise-free rewards
        // make per-arm least squares exact, so the fit must recover the
        // partition found by exhaustive 2-partition search.
        let mut rng = stream(6, 0x21);
        let true_centers = array![[0.0], [1.0]];
        let truth = [1usize, 2, 1, 2, 1, 2];
        let data = synth_data(&true_centers, &truth, 20, 0.0, &mut rng);
        let cfg = ClusteringConfig::default();
        let subset: Vec<usize> = (0..6).collect();
        let res = classifier_lasso_fit(&subset, &data, 2, 1e-3, &cfg, &mut rng).unwrap();

        // Exhaustive oracle over the 2^5 proper bipartitions with per-side
        // pooled least squares; the best split by squared error.
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1..(1u32 << 6) - 1 {
            let mut err = 0.0;
            for side in 0..2 {
                let members: Vec<usize> =
                    (0..6).filter(|&a| ((mask >> a) & 1) as usize == side).collect();
                if members.is_empty() {
                    continue;
                }
                let mut sxx = 0.0;
                let mut sxr = 0.0;
                for &a in &members {
                    for t in 0..20 {
                        sxx += data[a].contexts[[t, 0]] * data[a].contexts[[t, 0]];
                        sxr += data[a].contexts[[t, 0]] * data[a].rewards[t];
                    }
                }
                let mu = sxr / sxx;
                for &a in &members {
                    for t in 0..20 {
                        let e = data[a].rewards[t] - mu * data[a].contexts[[t, 0]];
                        err += e * e;
                    }
                }
            }
            if err < best.0 {
                best = (err, mask);
            }
        }
        let oracle: Vec<usize> = (0..6).map(|a| ((best.1 >> a) & 1) as usize + 1).collect();
        let eps = clustering_error(&res.labels, &oracle, 2).unwrap();
        assert!(eps.iter().all(|&e| e == 0.0), "labels {:?} vs oracle {:?}", res.labels, oracle);
        // Centers land on {0, 1} up to permutation.
        let mut cs = [res.centers[[0, 0]], res.centers[[1, 0]]];
        cs.sort_by(f64::total_cmp);
        assert!(cs[0].abs() < 1e-3 && (cs[1] - 1.0).abs() < 1e-3, "centers {cs:?}");
    }

    #[test]
    fn single_cluster_center_matches_pooled_least_squares() {
        let mut rng = stream(7, 0x21);
        let true_centers = array![[0.4, 0.3]];
        let truth = [1usize; 5];
        let data = synth_data(&true_centers, &truth, 12, 0.0, &mut rng);
        let cfg = ClusteringConfig::default();
        let subset: Vec<usize> = (10..15).collect();
        let res = classifier_lasso_fit(&subset, &data, 1, 0.05, &cfg, &mut rng).unwrap();
        assert!(res.labels.iter().all(|&l| l == 1), "labels {:?}", res.labels);
        // Pooled normal equations over all observations.
        let mut gram = Array2::<f64>::zeros((2, 2));
        let mut xr = Array1::<f64>::zeros(2);
        for d in &data {
            for t in 0..12 {
                let x = d.contexts.row(t).to_owned();
                for i in 0..2 {
                    for j in 0..2 {
                        gram[[i, j]] += x[i] * x[j];
                    }
                    xr[i] += x[i] * d.rewards[t];
                }
            }
        }
        let pooled = linalg::solve_spd(&gram, &xr).unwrap();
        for j in 0..2 {
            assert!(
                (res.centers[[0, j]] - pooled[j]).abs() < 1e-6,
                "center {:?} vs pooled {:?}",
                res.centers,
                pooled
            );
        }
    }

    #[test]
    fn identical_arms_bounded_by_pooled_objective() {
        // All arms share one true parameter but C = 2 is requested. The fit
        // must do at least as well as the degenerate configuration with all
        // parameters and both centers at the pooled solution.
        let mut rng = stream(8, 0x21);
        let true_centers = array![[0.5, 0.2]];
        let truth = [1usize; 8];
        let data = synth_data(&true_centers, &truth, 25, 0.2, &mut rng);
        let cfg = ClusteringConfig::default();
        let subset: Vec<usize> = (0..8).collect();
        let lambda1 = 0.1;
        let res = classifier_lasso_fit(&subset, &data, 2, lambda1, &cfg, &mut rng).unwrap();
        let mut gram = Array2::<f64>::zeros((2, 2));
        let mut xr = Array1::<f64>::zeros(2);
        for d in &data {
            for t in 0..25 {
                let x = d.contexts.row(t).to_owned();
                for i in 0..2 {
                    for j in 0..2 {
                        gram[[i, j]] += x[i] * x[j];
                    }
                    xr[i] += x[i] * d.rewards[t];
                }
            }
        }
        let pooled = linalg::solve_spd(&gram, &xr).unwrap();
        let mut degenerate_params = Array2::zeros((8, 2));
        let mut degenerate_centers = Array2::zeros((2, 2));
        for a in 0..8 {
            for j in 0..2 {
                degenerate_params[[a, j]] = pooled[j];
            }
        }
        for k in 0..2 {
            for j in 0..2 {
                degenerate_centers[[k, j]] = pooled[j];
            }
        }
        let q_degenerate = classifier_lasso_objective(
            &degenerate_params,
            &degenerate_centers,
            &data,
            lambda1,
            8,
            25,
        )
        .unwrap();
        assert!(
            res.objective_value <= q_degenerate + 1e-9,
            "fit {} vs degenerate pooled {}",
            res.objective_value,
            q_degenerate
        );
    }

    #[test]
    fn assignment_rules_and_tie_break() {
        let centers = array![[0.0, 0.0], [1.0, 0.0]];
        // Exactly on center 2; far from all; equidistant-within-tol of both.
        let params = array![[1.0, 0.0], [0.4, 0.7], [0.5, 0.0]];
        let labels = assign_clusters(&params, &centers, 1e-9);
        assert_eq!(labels, vec![2, 0, 0]);
        let loose = assign_clusters(&params, &centers, 0.6);
        assert_eq!(loose[2], 1, "tie must resolve to the lower index");
    }

    #[test]
    fn error_scoring_matches_hand_counts() {
        // Identity and permuted labelings are perfect.
        let truth: Vec<usize> = (0..12).map(|i| i % 3 + 1).collect();
        assert!(clustering_error(&truth, &truth, 3).unwrap().iter().all(|&e| e == 0.0));
        let swapped: Vec<usize> = truth.iter().map(|&t| match t {
            1 => 3,
            3 => 1,
            other => other,
        }).collect();
        assert!(clustering_error(&swapped, &truth, 3).unwrap().iter().all(|&e| e == 0.0));

        // Nine correct plus one stray from cluster 2 lands eps_1 = 0.1.
        let mut est = vec![1usize; 10];
        let mut truth2 = vec![1usize; 10];
        truth2[9] = 2;
        est.extend_from_slice(&[2; 5]);
        truth2.extend_from_slice(&[2; 5]);
        let eps = clustering_error(&est, &truth2, 2).unwrap();
        assert!((eps[0] - 0.1).abs() < 1e-15, "eps {eps:?}");
        assert_eq!(eps[1], 0.0);

        // Unassigned arms are excluded from both sides of the ratio.
        est[9] = 0;
        let eps = clustering_error(&est, &truth2, 2).unwrap();
        assert_eq!(eps[0], 0.0);

        assert!(matches!(
            clustering_error(&[1], &[1], 9),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn subset_covers_all_clusters_with_high_frequency() {
        // Memberships 120/120/60 over 300 arms; the size rule at
        // p_min = 0.2, delta = 0.3, T = 10^4 asks for 85 of them.
        let mut truth = vec![1usize; 120];
        truth.extend(vec![2usize; 120]);
        truth.extend(vec![3usize; 60]);
        let mut rng = stream(9, 0x21);
        let mut covered = 0;
        let draws = 2000;
        for _ in 0..draws {
            let s = sample_subset(300, 0.2, 3, 10_000, 0.3, 1.0, &mut rng).unwrap();
            assert_eq!(s.len(), 85);
            let mut seen = [false; 3];
            for &a in &s {
                seen[truth[a] - 1] = true;
            }
            if seen.iter().all(|&b| b) {
                covered += 1;
            }
        }
        assert!(
            covered as f64 / draws as f64 >= 0.99,
            "covered {covered}/{draws}"
        );
    }

    #[test]
    fn error_shrinks_with_more_arms_and_observations() {
        // Well-separated clusters, light noise: mean error at
        // (N_S, T0) = (60, 60) must not exceed the (20, 20) mean.
        let mut rng = stream(10, 0x21);
        let true_centers = array![
            [0.50, 0.05, 0.05],
            [0.05, 0.50, 0.05],
            [0.05, 0.05, 0.50]
        ];
        let cfg = ClusteringConfig::default();
        let reps = 50;
        let mut means = Vec::new();
        for &(n_s, t0) in &[(20usize, 20usize), (60, 60)] {
            let mut total = 0.0;
            for _ in 0..reps {
                let truth: Vec<usize> = (0..n_s).map(|a| a % 3 + 1).collect();
                let data = synth_data(&true_centers, &truth, t0, 0.1, &mut rng);
                let lambda1 = default_lambda1(t0, 0.5);
                let subset: Vec<usize> = (0..n_s).collect();
                let res =
                    classifier_lasso_fit(&subset, &data, 3, lambda1, &cfg, &mut rng).unwrap();
                let eps = clustering_error(&res.labels, &truth, 3).unwrap();
                total += eps.iter().cloned().fold(0.0, f64::max);
            }
            means.push(total / reps as f64);
        }
        assert!(
            means[1] <= means[0] + 1e-12,
            "mean max error went from {} to {}",
            means[0],
            means[1]
        );
    }
}
