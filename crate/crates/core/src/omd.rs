//! Online mirror descent with entropic regularizer (multiplicative weights)
//! over the resource-price domain `{θ ∈ [0,1]^d : ‖θ‖₁ ≤ 1}`.
//!
//! The domain is embedded in the (d+1)-simplex with a slack coordinate at
//! index 0 whose payoff is always zero; the first `d` normalized weights are
//! the prices θ. Payoffs are gains, so weights move as `w ∝ exp(η g)`.

use ndarray::Array1;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OmdState {
    /// Simplex weights, length d+1, strictly positive, summing to one.
    /// Index 0 is the slack coordinate.
    weights: Vec<f64>,
    pub eta: f64,
    pub horizon: usize,
}

impl OmdState {
    /// Uniform start over the padded simplex with the horizon-tuned step size
    /// `η = sqrt(ln(d+1) / T')`.
    pub fn init(resources: usize, horizon: usize) -> Result<OmdState> {
        if resources == 0 {
            return Err(Error::Validation("omd needs at least one resource".into()));
        }
        if horizon == 0 {
            return Err(Error::Validation("omd horizon must be positive".into()));
        }
        let eta = (((resources + 1) as f64).ln() / horizon as f64).sqrt();
        Ok(OmdState::with_eta(resources, eta, horizon))
    }

    /// Uniform start with an explicit step size.
    pub fn with_eta(resources: usize, eta: f64, horizon: usize) -> OmdState {
        OmdState {
            weights: vec![1.0 / (resources + 1) as f64; resources + 1],
            eta,
            horizon,
        }
    }

    pub fn resources(&self) -> usize {
        self.weights.len() - 1
    }

    /// Current prices θ (the non-slack weights).
    pub fn theta(&self) -> Array1<f64> {
        Array1::from_iter(self.weights[1..].iter().cloned())
    }

    /// Multiplicative-weights update for one payoff vector with entries in
    /// [-1, 1]; the slack coordinate sees payoff zero.
    pub fn step(&mut self, payoff: &Array1<f64>) -> Result<()> {
        if payoff.len() != self.resources() {
            return Err(Error::Validation(format!(
                "payoff has length {}, expected {}",
                payoff.len(),
                self.resources()
            )));
        }
        if payoff.iter().any(|g| !g.is_finite() || g.abs() > 1.0 + 1e-12) {
            return Err(Error::Contract(format!(
                "omd payoff outside [-1, 1]: {payoff}"
            )));
        }
        for (w, g) in self.weights[1..].iter_mut().zip(payoff.iter()) {
            *w *= (self.eta * g).exp();
        }
        let sum: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= sum;
        }
        debug_assert!(self.weights.iter().all(|&w| w > 0.0));
        Ok(())
    }
}

/// Best fixed price vector in hindsight over the domain's vertices
/// (the origin and the coordinate vectors), with its cumulative payoff.
pub fn hindsight_best(payoffs: &[Array1<f64>]) -> (Array1<f64>, f64) {
    if payoffs.is_empty() {
        return (Array1::zeros(0), 0.0);
    }
    let d = payoffs[0].len();
    let mut sums = Array1::<f64>::zeros(d);
    for g in payoffs {
        sums += g;
    }
    let mut best_j = None;
    let mut best = 0.0f64;
    for j in 0..d {
        if sums[j] > best {
            best = sums[j];
            best_j = Some(j);
        }
    }
    let mut theta = Array1::<f64>::zeros(d);
    if let Some(j) = best_j {
        theta[j] = 1.0;
    }
    (theta, best)
}
