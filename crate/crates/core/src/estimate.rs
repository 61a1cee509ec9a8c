//! Per-cluster ridge regression with rank-one inverse updates and the
//! optimistic (UCB-style) reward / pessimistic consumption estimates built
//! from ellipsoidal confidence sets.
//!
//! A cluster's state is the regularized Gram matrix `M = λ₂I + Σ x xᵀ`, its
//! maintained inverse, and the cross moments for the reward and each
//! consumption column. The inverse is updated by the Sherman–Morrison
//! identity and re-solved directly every 256 updates to wash out drift.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg;

/// How many rank-one updates may pass between direct inverse re-solves.
const RESOLVE_EVERY: usize = 256;
/// Audit threshold for `‖M·M⁻¹ - I‖_max` after a direct re-solve.
const INVERSE_AUDIT_TOL: f64 = 1e-8;

/// Online least-squares state for one cluster.
#[derive(Debug, Clone)]
pub struct ClusterEstimate {
    pub lambda2: f64,
    /// `M = λ₂ I + Σ x xᵀ`.
    pub m_mat: Array2<f64>,
    /// Maintained inverse of `m_mat`.
    pub m_inv: Array2<f64>,
    /// `Σ x·r`.
    pub b_r: Array1<f64>,
    /// `Σ x·vᵀ`, one column per resource (m x d).
    pub b_v: Array2<f64>,
    /// Ridge estimate of the reward parameter.
    pub mu_hat: Array1<f64>,
    /// Ridge estimate of the consumption parameters (m x d).
    pub w_hat: Array2<f64>,
    /// Number of absorbed observations.
    pub t_c: usize,
    /// Running `Σ_i ‖x_i‖_{M_i⁻¹}` with the pre-update Gram at each step.
    pub norm_sum: f64,
    updates_since_solve: usize,
}

impl ClusterEstimate {
    pub fn new(context_dim: usize, resources: usize, lambda2: f64) -> Result<ClusterEstimate> {
        if context_dim == 0 || resources == 0 {
            return Err(Error::Validation(
                "estimator needs context_dim >= 1 and resources >= 1".into(),
            ));
        }
        if !(lambda2 > 0.0) {
            return Err(Error::Validation(format!(
                "ridge weight lambda2 must be positive, got {lambda2}"
            )));
        }
        Ok(ClusterEstimate {
            lambda2,
            m_mat: Array2::eye(context_dim) * lambda2,
            m_inv: Array2::eye(context_dim) / lambda2,
            b_r: Array1::zeros(context_dim),
            b_v: Array2::zeros((context_dim, resources)),
            mu_hat: Array1::zeros(context_dim),
            w_hat: Array2::zeros((context_dim, resources)),
            t_c: 0,
            norm_sum: 0.0,
            updates_since_solve: 0,
        })
    }

    pub fn context_dim(&self) -> usize {
        self.b_r.len()
    }
    pub fn resources(&self) -> usize {
        self.b_v.ncols()
    }

    /// Absorb one observation `(x, r, v)`.
    pub fn update(&mut self, x: &Array1<f64>, reward: f64, consumption: &Array1<f64>) -> Result<()> {
        let m = self.context_dim();
        if x.len() != m || consumption.len() != self.resources() {
            return Err(Error::Validation(format!(
                "observation shapes ({}, {}) do not match estimator ({}, {})",
                x.len(),
                consumption.len(),
                m,
                self.resources()
            )));
        }
        let minv_x = self.m_inv.dot(x);
        let quad = x.dot(&minv_x).max(0.0);
        self.norm_sum += quad.sqrt();

        // Rank-one Gram update and Sherman-Morrison inverse downdate.
        for i in 0..m {
            for j in 0..m {
                self.m_mat[[i, j]] += x[i] * x[j];
            }
        }
        let denom = 1.0 + quad;
        for i in 0..m {
            for j in 0..m {
                self.m_inv[[i, j]] -= minv_x[i] * minv_x[j] / denom;
            }
        }

        for i in 0..m {
            self.b_r[i] += x[i] * reward;
            for j in 0..self.resources() {
                self.b_v[[i, j]] += x[i] * consumption[j];
            }
        }
        self.t_c += 1;
        self.updates_since_solve += 1;

        if self.updates_since_solve >= RESOLVE_EVERY {
            self.resolve_inverse()?;
        }
        self.mu_hat = self.m_inv.dot(&self.b_r);
        self.w_hat = self.m_inv.dot(&self.b_v);
        Ok(())
    }

    /// Replace the maintained inverse with a direct solve and audit it.
    fn resolve_inverse(&mut self) -> Result<()> {
        self.m_inv = linalg::inverse_spd(&self.m_mat)?;
        self.updates_since_solve = 0;
        let residual = linalg::identity_residual(&self.m_mat, &self.m_inv);
        if residual > INVERSE_AUDIT_TOL {
            return Err(Error::Numerical(format!(
                "inverse audit failed: residual {residual:.3e} > {INVERSE_AUDIT_TOL:.0e}"
            )));
        }
        Ok(())
    }

    /// `‖x‖_{M⁻¹}`, the leverage of a context under the current state.
    pub fn leverage(&self, x: &Array1<f64>) -> f64 {
        linalg::quad_form(&self.m_inv, x).max(0.0).sqrt()
    }

    /// Debug dump of the full state.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "lambda2": self.lambda2,
            "t_c": self.t_c,
            "m_mat": rows(&self.m_mat),
            "m_inv": rows(&self.m_inv),
            "b_r": self.b_r.to_vec(),
            "b_v": rows(&self.b_v),
            "mu_hat": self.mu_hat.to_vec(),
            "w_hat": rows(&self.w_hat),
            "norm_sum": self.norm_sum,
        })
    }
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Estimated clustering-error rate fed into the confidence radii.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsHatMode {
    /// `ε̂ = c₂ / (p_min · N_S)`, the rate the radii are designed around.
    Rate,
    /// A fixed value; zero reproduces the radii of the non-clustered
    /// algorithm.
    Fixed(f64),
}

impl Serialize for EpsHatMode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EpsHatMode::Rate => s.serialize_str("rate"),
            EpsHatMode::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for EpsHatMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Value(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "rate" => Ok(EpsHatMode::Rate),
            Raw::Name(s) => Err(D::Error::custom(format!(
                "unknown eps_hat keyword {s:?}; expected \"rate\" or a number"
            ))),
            Raw::Value(v) => Ok(EpsHatMode::Fixed(v)),
        }
    }
}

fn default_zeta() -> f64 {
    0.1
}
fn default_eps_hat() -> EpsHatMode {
    EpsHatMode::Rate
}
fn default_eps_hat_constant() -> f64 {
    1.0
}
fn default_lambda2() -> f64 {
    1.0
}
fn default_noise_bound() -> f64 {
    0.5
}

/// Confidence-radius settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusConfig {
    /// Confidence parameter ζ in (0, 1).
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_eps_hat")]
    pub eps_hat: EpsHatMode,
    /// c₂ in the rate mode.
    #[serde(default = "default_eps_hat_constant")]
    pub eps_hat_constant: f64,
    /// Ridge weight λ₂.
    #[serde(default = "default_lambda2")]
    pub lambda2: f64,
    /// Noise-scale bound R; the radius leading coefficient is `2(R+1)`.
    #[serde(default = "default_noise_bound")]
    pub noise_bound: f64,
}

impl Default for RadiusConfig {
    fn default() -> Self {
        RadiusConfig {
            zeta: default_zeta(),
            eps_hat: default_eps_hat(),
            eps_hat_constant: default_eps_hat_constant(),
            lambda2: default_lambda2(),
            noise_bound: default_noise_bound(),
        }
    }
}

impl RadiusConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::Validation(format!(
                "zeta must lie in (0, 1), got {}",
                self.zeta
            )));
        }
        if !(self.lambda2 > 0.0) {
            return Err(Error::Validation(format!(
                "lambda2 must be positive, got {}",
                self.lambda2
            )));
        }
        if !(self.noise_bound >= 0.0) {
            return Err(Error::Validation(format!(
                "noise_bound must be >= 0, got {}",
                self.noise_bound
            )));
        }
        if self.eps_hat_constant < 0.0 {
            return Err(Error::Validation("eps_hat_constant must be >= 0".into()));
        }
        if let EpsHatMode::Fixed(v) = self.eps_hat {
            if !(v >= 0.0) {
                return Err(Error::Validation(format!(
                    "fixed eps_hat must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Resolve the stateful parts (ε̂ under the rate mode) into plain numbers.
    pub fn resolve(&self, p_min: f64, n_s: usize) -> Result<RadiusParams> {
        self.validate()?;
        let eps_hat = match self.eps_hat {
            EpsHatMode::Fixed(v) => v,
            EpsHatMode::Rate => {
                if !(p_min > 0.0) || n_s == 0 {
                    return Err(Error::Validation(
                        "rate mode for eps_hat needs p_min > 0 and a nonempty subset".into(),
                    ));
                }
                self.eps_hat_constant / (p_min * n_s as f64)
            }
        };
        Ok(RadiusParams {
            zeta: self.zeta,
            eps_hat,
            lambda2: self.lambda2,
            coefficient: 2.0 * (self.noise_bound + 1.0),
        })
    }
}

/// Fully resolved radius parameters.
#[derive(Debug, Clone)]
pub struct RadiusParams {
    pub zeta: f64,
    pub eps_hat: f64,
    pub lambda2: f64,
    /// Leading coefficient `2(R+1)`; 3 at the default R = 1/2.
    pub coefficient: f64,
}

impl RadiusParams {
    fn radius(&self, t_c: usize, m: usize, log_scale: f64) -> f64 {
        let t = t_c.max(1) as f64;
        let m_f = m as f64;
        let arg = (log_scale * t * m_f / (self.lambda2 * self.zeta)).max(std::f64::consts::E);
        self.coefficient * (m_f * arg.ln()).sqrt()
            + self.eps_hat * m_f * (t_c as f64).sqrt()
            + (self.lambda2 * m_f).sqrt()
    }

    /// Confidence radius for the reward parameter after `t_c` observations.
    pub fn reward_radius(&self, t_c: usize, m: usize) -> f64 {
        self.radius(t_c, m, 1.0)
    }

    /// Confidence radius for the consumption parameters; the union over the
    /// `d` columns widens the log argument by a factor `d`.
    pub fn consumption_radius(&self, t_c: usize, m: usize, d: usize) -> f64 {
        self.radius(t_c, m, d as f64)
    }
}

/// Optimistic reward estimate: the maximum of `xᵀβ` over the confidence
/// ellipsoid `‖β - μ̂‖_M ≤ radius`, with the maximizing witness.
pub fn optimistic_reward(
    est: &ClusterEstimate,
    x: &Array1<f64>,
    radius: f64,
) -> (f64, Array1<f64>) {
    let minv_x = est.m_inv.dot(x);
    let norm = x.dot(&minv_x).max(0.0).sqrt();
    let value = est.mu_hat.dot(x) + radius * norm;
    let witness = if norm > 0.0 {
        &est.mu_hat + &(minv_x * (radius / norm))
    } else {
        est.mu_hat.clone()
    };
    (value, witness)
}

/// Optimistic (lowest-plausible) consumption estimate: coordinate `j` is the
/// minimum of `xᵀw_j` over that column's confidence ellipsoid.
pub fn optimistic_consumption(est: &ClusterEstimate, x: &Array1<f64>, radius: f64) -> Array1<f64> {
    let minv_x = est.m_inv.dot(x);
    let norm = x.dot(&minv_x).max(0.0).sqrt();
    let mut v = est.w_hat.t().dot(x);
    v.mapv_inplace(|e| e - radius * norm);
    v
}

/// Test fixture for the contaminated-noise response model: the observed
/// response is `μᵀx + u + h` with `u` uniform on `[-2R, 2R]` and, with
/// probability ε, a context-linear bias `h = γᵀx`.
#[derive(Debug, Clone)]
pub struct MeasurementErrorFixture {
    pub mu: Array1<f64>,
    pub gamma: Array1<f64>,
    pub epsilon: f64,
    pub noise_bound: f64,
}

impl MeasurementErrorFixture {
    /// Random fixture: `‖μ‖₁ ≤ 1`, γ entries in [-1, 1].
    pub fn random<R: Rng>(m: usize, epsilon: f64, noise_bound: f64, rng: &mut R) -> Self {
        let mut mu = Array1::from_iter((0..m).map(|_| rng.random::<f64>()));
        let norm1: f64 = mu.iter().sum();
        if norm1 > 1.0 {
            mu.mapv_inplace(|v| v / norm1);
        }
        let gamma = Array1::from_iter((0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0));
        MeasurementErrorFixture { mu, gamma, epsilon, noise_bound }
    }

    pub fn sample_response<R: Rng>(&self, x: &Array1<f64>, rng: &mut R) -> f64 {
        let u = (rng.random::<f64>() * 2.0 - 1.0) * 2.0 * self.noise_bound;
        let contaminated = rng.random::<f64>() < self.epsilon;
        let h = if contaminated { self.gamma.dot(x) } else { 0.0 };
        self.mu.dot(x) + u + h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    fn random_x<R: Rng>(m: usize, rng: &mut R) -> Array1<f64> {
        Array1::from_iter((0..m).map(|_| rng.random::<f64>()))
    }

    /// Sample a point on the boundary of `‖β - center‖_M = radius`.
    fn boundary_point<R: Rng>(
        center: &Array1<f64>,
        m_mat: &Array2<f64>,
        radius: f64,
        rng: &mut R,
    ) -> Array1<f64> {
        let m = center.len();
        let w = Array1::from_iter((0..m).map(|_| StandardNormal.sample(rng)));
        let norm_m = crate::linalg::quad_form(m_mat, &w).sqrt();
        center + &(w * (radius / norm_m))
    }

    #[test]
    fn single_update_matches_hand_computation() {
        let mut est = ClusterEstimate::new(2, 1, 1.0).unwrap();
        est.update(&array![1.0, 0.0], 0.5, &array![0.25]).unwrap();
        assert_eq!(est.m_mat, array![[2.0, 0.0], [0.0, 1.0]]);
        assert!((est.mu_hat[0] - 0.25).abs() < 1e-15);
        assert!(est.mu_hat[1].abs() < 1e-15);
        assert!((est.w_hat[[0, 0]] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn updates_match_batch_normal_equations() {
        let (m, d, n) = (4, 3, 1000);
        let mut rng = stream(21, 0xE5);
        let mut est = ClusterEstimate::new(m, d, 1.0).unwrap();
        let mut xs = Vec::new();
        let mut rs = Vec::new();
        let mut vs = Vec::new();
        for _ in 0..n {
            let x = random_x(m, &mut rng);
            let r = rng.random::<f64>();
            let v = random_x(d, &mut rng);
            est.update(&x, r, &v).unwrap();
            xs.push(x);
            rs.push(r);
            vs.push(v);
        }
        // Batch oracle: assemble the normal equations directly and solve.
        let mut gram = Array2::<f64>::eye(m);
        let mut xr = Array1::<f64>::zeros(m);
        let mut xv = Array2::<f64>::zeros((m, d));
        for i in 0..n {
            for a in 0..m {
                for b in 0..m {
                    gram[[a, b]] += xs[i][a] * xs[i][b];
                }
                xr[a] += xs[i][a] * rs[i];
                for j in 0..d {
                    xv[[a, j]] += xs[i][a] * vs[i][j];
                }
            }
        }
        let mu = crate::linalg::solve_spd(&gram, &xr).unwrap();
        for a in 0..m {
            assert!((est.mu_hat[a] - mu[a]).abs() < 1e-8, "mu mismatch at {a}");
        }
        for j in 0..d {
            let wj = crate::linalg::solve_spd(&gram, &xv.column(j).to_owned()).unwrap();
            for a in 0..m {
                assert!((est.w_hat[[a, j]] - wj[a]).abs() < 1e-8);
            }
        }
        assert!(crate::linalg::identity_residual(&est.m_mat, &est.m_inv) < 1e-6);
    }

    #[test]
    fn periodic_resolve_keeps_inverse_audited() {
        let mut est = ClusterEstimate::new(3, 1, 1.0).unwrap();
        let mut rng = stream(22, 0xE5);
        for i in 0..=768 {
            est.update(&random_x(3, &mut rng), rng.random(), &array![rng.random::<f64>()])
                .unwrap();
            if (i + 1) % 256 == 0 {
                assert!(
                    crate::linalg::identity_residual(&est.m_mat, &est.m_inv) <= 1e-8,
                    "audit at update {}",
                    i + 1
                );
            }
        }
    }

    #[test]
    fn radius_matches_frozen_value() {
        let params = RadiusConfig::default().resolve(1.0, 1).unwrap();
        // eps_hat resolves to 1.0 here; take the fixed-zero variant instead.
        let cfg = RadiusConfig { eps_hat: EpsHatMode::Fixed(0.0), ..RadiusConfig::default() };
        let params0 = cfg.resolve(1.0, 1).unwrap();
        // m = 1, t_c = 1: 3 sqrt(ln 10) + 1.
        let expect = 3.0 * (10.0f64.ln()).sqrt() + 1.0;
        assert!((params0.reward_radius(1, 1) - expect).abs() < 1e-12);
        assert!(params0.reward_radius(1, 1) < params.reward_radius(1, 1));
    }

    #[test]
    fn eps_term_adds_linearly() {
        let cfg = RadiusConfig { eps_hat: EpsHatMode::Fixed(0.1), ..RadiusConfig::default() };
        let with_eps = cfg.resolve(1.0, 1).unwrap();
        let cfg0 = RadiusConfig { eps_hat: EpsHatMode::Fixed(0.0), ..RadiusConfig::default() };
        let without = cfg0.resolve(1.0, 1).unwrap();
        let diff = with_eps.reward_radius(100, 2) - without.reward_radius(100, 2);
        assert!((diff - 0.1 * 2.0 * 10.0).abs() < 1e-12);
    }

    #[test]
    fn consumption_radius_widens_log_argument() {
        let cfg = RadiusConfig { eps_hat: EpsHatMode::Fixed(0.0), ..RadiusConfig::default() };
        let p = cfg.resolve(1.0, 1).unwrap();
        let r = p.reward_radius(50, 3);
        let c = p.consumption_radius(50, 3, 4);
        assert!(c > r);
        let expect = 3.0 * (3.0 * (4.0 * 50.0 * 3.0 / 0.1f64).ln()).sqrt() + 3.0f64.sqrt();
        assert!((c - expect).abs() < 1e-12);
    }

    #[test]
    fn log_argument_clamp_keeps_radius_floor() {
        let cfg = RadiusConfig {
            zeta: 0.99,
            eps_hat: EpsHatMode::Fixed(0.0),
            ..RadiusConfig::default()
        };
        let p = cfg.resolve(1.0, 1).unwrap();
        // t_c = 0 clamps to t = 1 and the log argument clamps to e.
        let floor = 3.0 * 1.0f64.sqrt() + 1.0;
        assert!(p.reward_radius(0, 1) >= floor - 1e-12);
    }

    #[test]
    fn rate_mode_resolves_from_subset() {
        let cfg = RadiusConfig::default();
        let p = cfg.resolve(0.2, 10).unwrap();
        assert!((p.eps_hat - 0.5).abs() < 1e-15);
        assert!((p.coefficient - 3.0).abs() < 1e-15);
    }

    #[test]
    fn witness_sits_on_ellipsoid_boundary() {
        let mut est = ClusterEstimate::new(3, 2, 1.0).unwrap();
        let mut rng = stream(30, 0xE5);
        for _ in 0..40 {
            let x = random_x(3, &mut rng);
            let v = random_x(2, &mut rng);
            est.update(&x, rng.random(), &v).unwrap();
        }
        for _ in 0..50 {
            let x = random_x(3, &mut rng);
            let radius = 2.5;
            let (value, witness) = optimistic_reward(&est, &x, radius);
            let diff = &witness - &est.mu_hat;
            let dist = crate::linalg::quad_form(&est.m_mat, &diff).sqrt();
            assert!((dist - radius).abs() < 1e-8, "witness distance {dist}");
            assert!((witness.dot(&x) - value).abs() < 1e-10);
        }
    }

    #[test]
    fn optimistic_reward_dominates_ellipsoid() {
        let mut est = ClusterEstimate::new(3, 1, 1.0).unwrap();
        let mut rng = stream(31, 0xE5);
        for _ in 0..60 {
            let x = random_x(3, &mut rng);
            est.update(&x, rng.random(), &array![rng.random::<f64>()]).unwrap();
        }
        let radius = 1.7;
        for _ in 0..10_000 {
            let x = random_x(3, &mut rng);
            let (value, _) = optimistic_reward(&est, &x, radius);
            let beta = boundary_point(&est.mu_hat, &est.m_mat, radius, &mut rng);
            assert!(value >= beta.dot(&x) - 1e-9);
        }
    }

    #[test]
    fn optimistic_consumption_lower_bounds_ellipsoid() {
        let mut est = ClusterEstimate::new(2, 3, 1.0).unwrap();
        let mut rng = stream(32, 0xE5);
        for _ in 0..60 {
            let x = random_x(2, &mut rng);
            let v = random_x(3, &mut rng);
            est.update(&x, rng.random(), &v).unwrap();
        }
        let radius = 1.3;
        for _ in 0..10_000 {
            let x = random_x(2, &mut rng);
            let opt = optimistic_consumption(&est, &x, radius);
            for j in 0..3 {
                let col = est.w_hat.column(j).to_owned();
                let beta = boundary_point(&col, &est.m_mat, radius, &mut rng);
                assert!(opt[j] <= beta.dot(&x) + 1e-9);
            }
        }
    }

    #[test]
    fn zero_context_returns_point_estimates() {
        let mut est = ClusterEstimate::new(2, 1, 1.0).unwrap();
        est.update(&array![0.5, 0.5], 0.7, &array![0.2]).unwrap();
        let x = Array1::zeros(2);
        let (value, witness) = optimistic_reward(&est, &x, 5.0);
        assert_eq!(value, 0.0);
        assert_eq!(witness, est.mu_hat);
    }

    /// The maintained pre-update leverage sum obeys the provable potential
    /// bound `Σ ‖x_i‖_{M_i⁻¹} ≤ sqrt(t·(1+m)·m·ln(1+t))` for contexts in
    /// `[0,1]^m` and λ₂ = 1.
    #[test]
    fn leverage_sum_obeys_potential_bound() {
        for (seed, m) in [(40u64, 2usize), (41, 5)] {
            let mut rng = stream(seed, 0xE5);
            let mut est = ClusterEstimate::new(m, 1, 1.0).unwrap();
            for t in 1..=3000usize {
                let x = random_x(m, &mut rng);
                est.update(&x, rng.random(), &array![rng.random::<f64>()]).unwrap();
                let bound = (t as f64 * (1.0 + m as f64) * m as f64 * (1.0 + t as f64).ln()).sqrt();
                assert!(
                    est.norm_sum <= bound,
                    "m={m} t={t}: {} > {bound}",
                    est.norm_sum
                );
            }
        }
    }

    #[test]
    fn coverage_with_contamination_gets_radius_protection() {
        // Small version of the coverage experiment; the full one is in the
        // acceptance suite.
        let (m, t, zeta) = (3usize, 200usize, 0.1);
        let mut rng = stream(50, 0xE5);
        for &eps in &[0.0, 0.05] {
            let mut hits = 0;
            let reps = 60;
            for _ in 0..reps {
                let fixture = MeasurementErrorFixture::random(m, eps, 0.5, &mut rng);
                let mut est = ClusterEstimate::new(m, 1, 1.0).unwrap();
                for _ in 0..t {
                    let x = random_x(m, &mut rng);
                    let y = fixture.sample_response(&x, &mut rng);
                    est.update(&x, y, &array![0.0]).unwrap();
                }
                let cfg = RadiusConfig { eps_hat: EpsHatMode::Fixed(eps), zeta, ..RadiusConfig::default() };
                let radius = cfg.resolve(1.0, 1).unwrap().reward_radius(t, m);
                let diff = &fixture.mu - &est.mu_hat;
                let dist = crate::linalg::quad_form(&est.m_mat, &diff).sqrt();
                if dist <= radius {
                    hits += 1;
                }
            }
            assert!(hits as f64 / reps as f64 >= 0.9, "coverage {hits}/{reps} at eps={eps}");
        }
    }
}
