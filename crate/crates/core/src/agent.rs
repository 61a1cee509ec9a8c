//! The online agent: explore a sampled arm subset round-robin, cluster the
//! subset, warm-start per-cluster estimates, then play optimistically with a
//! budget-pacing dual until the horizon or the first budget violation.
//!
//! Baselines share the ledger and stop semantics: `single_cluster_lcbwk`
//! pools every subset arm into one cluster, `random` plays uniformly with no
//! learning, and `greedy_no_knapsack` zeroes the pacing constant so scores
//! ignore consumption.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::benchmark::{compute_z, estimate_opt_hat};
use crate::cluster::{
    assign_clusters, classifier_lasso_fit, clustering_error, sample_subset, ArmData,
    ClusteringConfig, ClusteringResult,
};
use crate::env::{BudgetLedger, Instance};
use crate::error::{Error, Result};
use crate::estimate::{
    optimistic_consumption, optimistic_reward, ClusterEstimate, EpsHatMode, RadiusConfig,
    RadiusParams,
};
use crate::omd::OmdState;
use crate::seeding::{stream, TAG_ENV, TAG_POLICY, TAG_SOLVER, TAG_SUBSET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    ClusterLcbwk,
    SingleClusterLcbwk,
    Random,
    GreedyNoKnapsack,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::ClusterLcbwk,
        BaselineKind::SingleClusterLcbwk,
        BaselineKind::Random,
        BaselineKind::GreedyNoKnapsack,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::ClusterLcbwk => "cluster_lcbwk",
            BaselineKind::SingleClusterLcbwk => "single_cluster_lcbwk",
            BaselineKind::Random => "random",
            BaselineKind::GreedyNoKnapsack => "greedy_no_knapsack",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub horizon: usize,
    pub budget: f64,
    pub baseline: BaselineKind,
    pub allow_noop_in_argmax: bool,
    pub seed: u64,
    pub radius: RadiusConfig,
    pub clustering: ClusteringConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Validation("horizon must be positive".into()));
        }
        if !(self.budget > 0.0) {
            return Err(Error::Validation(format!(
                "budget must be positive, got {}",
                self.budget
            )));
        }
        if self.budget > self.horizon as f64 {
            return Err(Error::Validation(format!(
                "budget {} exceeds horizon {}; the dual payoff range requires B <= T",
                self.budget, self.horizon
            )));
        }
        self.radius.validate()?;
        self.clustering.validate()
    }
}

/// One period of a run. `arm` is -1 on no-op periods; `cluster` is 0 when no
/// cluster was involved (exploration, no-op, or the random baseline); `score`
/// is NaN outside the optimistic phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRecord {
    pub t: usize,
    pub arm: i64,
    pub cluster: usize,
    pub reward: f64,
    pub consumption: Array1<f64>,
    pub theta: Array1<f64>,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub baseline: BaselineKind,
    pub records: Vec<PeriodRecord>,
    pub t_omega: usize,
    pub total_reward: f64,
    pub n_s: usize,
    pub t0: usize,
    pub phase_boundary: usize,
    pub opt_hat: f64,
    pub z: f64,
    pub eps_c: Vec<f64>,
    pub eps_c_max: f64,
    pub regret: Option<f64>,
    pub stopped_early: bool,
    pub overshoot: f64,
    pub budget: f64,
}

/// Everything fixed at the end of the exploration phase.
#[derive(Debug, Clone)]
pub struct Preparation {
    pub subset: Vec<usize>,
    pub t0: usize,
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub estimates: Vec<ClusterEstimate>,
    pub records: Vec<PeriodRecord>,
    pub contexts: Vec<Array2<f64>>,
    pub eps_c: Vec<f64>,
    pub eps_c_max: f64,
    pub opt_hat: f64,
    /// The raw fit, absent for the pooled single-cluster baseline.
    pub clustering: Option<ClusteringResult>,
}

/// Exploration state plus the derived quantities the optimistic phase needs.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub prep: Preparation,
    pub ledger: BudgetLedger,
    pub env_rng: ChaCha12Rng,
    pub b_prime: f64,
    pub t_prime: usize,
    pub z: f64,
    pub radius: RadiusParams,
}

fn explore_and_cluster<R: Rng>(
    instance: &Instance,
    cfg: &RunConfig,
    env_rng: &mut R,
    subset_rng: &mut R,
    solver_rng: &mut R,
    ledger: &mut BudgetLedger,
) -> Result<Preparation> {
    let k = instance.arms();
    let m = instance.context_dim();
    let d = instance.resources();
    let single = matches!(cfg.baseline, BaselineKind::SingleClusterLcbwk);
    let (clusters, p_min) = if single {
        (1, 1.0)
    } else {
        (instance.clusters(), instance.p_min)
    };
    let subset = sample_subset(
        k,
        p_min,
        clusters,
        cfg.horizon,
        cfg.clustering.delta,
        cfg.clustering.coverage_constant,
        subset_rng,
    )?;
    let n_s = subset.len();
    let t0 = n_s;
    let boundary = n_s * t0;
    if cfg.budget <= boundary as f64 {
        return Err(Error::Config(format!(
            "budget {} cannot cover exploration; the run requires B > N_S T_0 = {boundary}",
            cfg.budget
        )));
    }
    if cfg.horizon <= boundary {
        return Err(Error::Config(format!(
            "horizon {} leaves no optimistic phase; the run requires T > N_S T_0 = {boundary}",
            cfg.horizon
        )));
    }

    let mut records = Vec::with_capacity(n_s * t0);
    let mut contexts = Vec::with_capacity(n_s * t0);
    let mut arm_contexts = vec![Array2::<f64>::zeros((t0, m)); n_s];
    let mut arm_rewards = vec![Array1::<f64>::zeros(t0); n_s];
    let mut arm_consumption: Vec<Vec<Array1<f64>>> = vec![Vec::with_capacity(t0); n_s];
    let mut t = 0;
    for round in 0..t0 {
        for pos in 0..n_s {
            t += 1;
            let x = instance.draw_context(env_rng);
            let arm = subset[pos];
            let row = x.row(arm).to_owned();
            let outcome = instance.pull(Some(arm), &row, env_rng)?;
            ledger.update(&outcome.consumption)?;
            debug_assert!(!ledger.stopped, "exploration cannot exhaust a budget above N_S*T0");
            for j in 0..m {
                arm_contexts[pos][[round, j]] = row[j];
            }
            arm_rewards[pos][round] = outcome.reward;
            arm_consumption[pos].push(outcome.consumption.clone());
            let mut sub_ctx = Array2::zeros((n_s, m));
            for (i, &a) in subset.iter().enumerate() {
                for j in 0..m {
                    sub_ctx[[i, j]] = x[[a, j]];
                }
            }
            contexts.push(sub_ctx);
            records.push(PeriodRecord {
                t,
                arm: arm as i64,
                cluster: 0,
                reward: outcome.reward,
                consumption: outcome.consumption,
                theta: Array1::zeros(d),
                score: f64::NAN,
            });
        }
    }

    let mut estimates: Vec<ClusterEstimate> = (0..clusters)
        .map(|_| ClusterEstimate::new(m, d, cfg.radius.lambda2))
        .collect::<Result<_>>()?;

    let (labels, mut centers, objective_value, iterations, eps_c, eps_c_max);
    let mut clustering = None;
    if single {
        labels = vec![1usize; n_s];
        objective_value = f64::NAN;
        iterations = 0;
        eps_c = Vec::new();
        eps_c_max = f64::NAN;
        centers = Array2::zeros((1, m));
    } else {
        let data: Vec<ArmData> = (0..n_s)
            .map(|pos| ArmData {
                contexts: arm_contexts[pos].clone(),
                rewards: arm_rewards[pos].clone(),
            })
            .collect();
        let lambda1 = cfg.clustering.resolve_lambda1(t0);
        let fit = classifier_lasso_fit(&subset, &data, clusters, lambda1, &cfg.clustering, solver_rng)?;
        debug_assert_eq!(
            fit.labels,
            assign_clusters(&fit.per_arm_params, &fit.centers, cfg.clustering.match_tol)
        );
        let truth: Vec<usize> = subset.iter().map(|&a| instance.memberships[a] + 1).collect();
        let e = clustering_error(&fit.labels, &truth, clusters)?;
        eps_c_max = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        eps_c = e;
        labels = fit.labels.clone();
        centers = fit.centers.clone();
        objective_value = fit.objective_value;
        iterations = fit.iterations;
        clustering = Some(fit);
    }

    // Warm-start the per-cluster states with the exploration samples in
    // period order.
    for round in 0..t0 {
        for pos in 0..n_s {
            let label = labels[pos];
            if label == 0 {
                continue;
            }
            let x = arm_contexts[pos].row(round).to_owned();
            estimates[label - 1].update(&x, arm_rewards[pos][round], &arm_consumption[pos][round])?;
        }
    }
    if single {
        for j in 0..m {
            centers[[0, j]] = estimates[0].mu_hat[j];
        }
    }

    let opt_hat = estimate_opt_hat(&contexts, &estimates, &labels, k, cfg.budget, cfg.horizon)?;
    Ok(Preparation {
        subset,
        t0,
        labels,
        centers,
        objective_value,
        iterations,
        estimates,
        records,
        contexts,
        eps_c,
        eps_c_max,
        opt_hat,
        clustering,
    })
}

/// Run the exploration and clustering phase and derive the optimistic-phase
/// constants. Fails when the resolved subset leaves no room for the
/// optimistic phase (the run needs B > N_S T_0 and T > N_S T_0).
pub fn prepare_run(instance: &Instance, cfg: &RunConfig) -> Result<PreparedRun> {
    cfg.validate()?;
    if matches!(cfg.baseline, BaselineKind::Random) {
        return Err(Error::Validation(
            "the random baseline has no preparation phase".into(),
        ));
    }
    let mut env_rng = stream(cfg.seed, TAG_ENV);
    let mut subset_rng = stream(cfg.seed, TAG_SUBSET);
    let mut solver_rng = stream(cfg.seed, TAG_SOLVER);
    let mut ledger = BudgetLedger::new(cfg.budget, instance.resources())?;
    let prep = explore_and_cluster(
        instance,
        cfg,
        &mut env_rng,
        &mut subset_rng,
        &mut solver_rng,
        &mut ledger,
    )?;
    let n_s = prep.subset.len();
    let boundary = n_s * prep.t0;
    let b_prime = cfg.budget - boundary as f64;
    let t_prime = cfg.horizon - boundary;
    let z = match cfg.baseline {
        BaselineKind::GreedyNoKnapsack => 0.0,
        _ => compute_z(prep.opt_hat, n_s, instance.arms(), b_prime)?,
    };
    let single = matches!(cfg.baseline, BaselineKind::SingleClusterLcbwk);
    let mut radius_cfg = cfg.radius.clone();
    if single {
        radius_cfg.eps_hat = EpsHatMode::Fixed(0.0);
    }
    let p_min_eff = if single { 1.0 } else { instance.p_min };
    let radius = radius_cfg.resolve(p_min_eff, n_s)?;
    Ok(PreparedRun {
        prep,
        ledger,
        env_rng,
        b_prime,
        t_prime,
        z,
        radius,
    })
}

/// Score every labeled subset arm and return the winner: its subset
/// position, Z-adjusted score, and cluster label. Ties go to the lowest arm
/// id; non-finite scores are skipped. With `allow_noop` a strictly negative
/// best score yields no-op (score recorded as 0).
#[allow(clippy::too_many_arguments)]
pub fn choose_arm(
    context: &Array2<f64>,
    subset: &[usize],
    labels: &[usize],
    estimates: &[ClusterEstimate],
    radius: &RadiusParams,
    z: f64,
    theta: &Array1<f64>,
    allow_noop: bool,
) -> Result<(Option<usize>, f64, usize)> {
    let mut best: Option<(usize, f64, usize)> = None;
    let mut any_labeled = false;
    for (pos, (&arm, &label)) in subset.iter().zip(labels.iter()).enumerate() {
        if label == 0 {
            continue;
        }
        any_labeled = true;
        let est = &estimates[label - 1];
        let m = est.context_dim();
        let d = est.resources();
        let x = context.row(arm).to_owned();
        let (r_opt, _) = optimistic_reward(est, &x, radius.reward_radius(est.t_c, m));
        let v_opt = optimistic_consumption(est, &x, radius.consumption_radius(est.t_c, m, d));
        debug_assert!(r_opt >= est.mu_hat.dot(&x) - 1e-9, "reward optimism violated");
        debug_assert!(
            v_opt
                .iter()
                .zip(est.w_hat.t().dot(&x).iter())
                .all(|(o, p)| *o <= p + 1e-9),
            "consumption optimism violated"
        );
        let score = r_opt - z * v_opt.dot(theta);
        if !score.is_finite() {
            continue;
        }
        if best.map_or(true, |(_, s, _)| score > s) {
            best = Some((pos, score, label));
        }
    }
    if !any_labeled {
        return Err(Error::Numerical(
            "every subset arm is unlabeled; nothing can be played".into(),
        ));
    }
    let Some((pos, score, label)) = best else {
        return Err(Error::Numerical(
            "every per-arm score is non-finite; aborting the run".into(),
        ));
    };
    if allow_noop && score < 0.0 {
        return Ok((None, 0.0, 0));
    }
    Ok((Some(pos), score, label))
}

/// Field-by-field equality with NaN treated as equal to itself, for
/// determinism and trace-equivalence checks.
pub fn records_bitwise_equal(a: &[PeriodRecord], b: &[PeriodRecord]) -> bool {
    let float_eq = |x: f64, y: f64| x.to_bits() == y.to_bits();
    let vec_eq = |x: &Array1<f64>, y: &Array1<f64>| {
        x.len() == y.len() && x.iter().zip(y.iter()).all(|(&u, &v)| float_eq(u, v))
    };
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|(ra, rb)| {
            ra.t == rb.t
                && ra.arm == rb.arm
                && ra.cluster == rb.cluster
                && float_eq(ra.reward, rb.reward)
                && vec_eq(&ra.consumption, &rb.consumption)
                && vec_eq(&ra.theta, &rb.theta)
                && float_eq(ra.score, rb.score)
        })
}

fn overshoot_of(ledger: &BudgetLedger) -> f64 {
    let over = ledger
        .cumulative
        .iter()
        .map(|&c| c - ledger.budget)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    debug_assert!(over <= 1.0 + 1e-9, "one pull cannot overshoot by more than 1");
    over
}

fn run_random(instance: &Instance, cfg: &RunConfig) -> Result<RunTrace> {
    let k = instance.arms();
    let d = instance.resources();
    let mut env_rng = stream(cfg.seed, TAG_ENV);
    let mut policy_rng = stream(cfg.seed, TAG_POLICY);
    let mut ledger = BudgetLedger::new(cfg.budget, d)?;
    let mut records = Vec::with_capacity(cfg.horizon);
    let mut total_reward = 0.0;
    let mut t_omega = cfg.horizon;
    let mut stopped_early = false;
    let mut overshoot = 0.0;
    for t in 1..=cfg.horizon {
        let x = instance.draw_context(&mut env_rng);
        let arm = policy_rng.random_range(0..k);
        let row = x.row(arm).to_owned();
        let outcome = instance.pull(Some(arm), &row, &mut env_rng)?;
        ledger.update(&outcome.consumption)?;
        total_reward += outcome.reward;
        records.push(PeriodRecord {
            t,
            arm: arm as i64,
            cluster: 0,
            reward: outcome.reward,
            consumption: outcome.consumption,
            theta: Array1::zeros(d),
            score: f64::NAN,
        });
        if ledger.stopped {
            t_omega = t;
            stopped_early = true;
            overshoot = overshoot_of(&ledger);
            break;
        }
    }
    Ok(RunTrace {
        baseline: cfg.baseline,
        records,
        t_omega,
        total_reward,
        n_s: 0,
        t0: 0,
        phase_boundary: 0,
        opt_hat: f64::NAN,
        z: f64::NAN,
        eps_c: Vec::new(),
        eps_c_max: f64::NAN,
        regret: None,
        stopped_early,
        overshoot,
        budget: cfg.budget,
    })
}

/// Execute one full run of the configured baseline on the instance.
pub fn run(instance: &Instance, cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate()?;
    if matches!(cfg.baseline, BaselineKind::Random) {
        return run_random(instance, cfg);
    }
    let PreparedRun {
        mut prep,
        mut ledger,
        mut env_rng,
        b_prime,
        t_prime,
        z,
        radius,
    } = prepare_run(instance, cfg)?;
    let n_s = prep.subset.len();
    let boundary = n_s * prep.t0;
    let d = instance.resources();
    let m = instance.context_dim();
    let mut omd = OmdState::init(d, t_prime)?;
    let b_rate = b_prime / t_prime as f64;
    let mut records = std::mem::take(&mut prep.records);
    let mut total_reward: f64 = records.iter().map(|r| r.reward).sum();
    let mut t_omega = cfg.horizon;
    let mut stopped_early = false;
    let mut overshoot = 0.0;
    for t in boundary + 1..=cfg.horizon {
        let x = instance.draw_context(&mut env_rng);
        let theta = omd.theta();
        let (choice, score, cluster) = choose_arm(
            &x,
            &prep.subset,
            &prep.labels,
            &prep.estimates,
            &radius,
            z,
            &theta,
            cfg.allow_noop_in_argmax,
        )?;
        let (arm_id, row) = match choice {
            Some(pos) => {
                let a = prep.subset[pos];
                (a as i64, x.row(a).to_owned())
            }
            None => (-1, Array1::zeros(m)),
        };
        let outcome = instance.pull(choice.map(|pos| prep.subset[pos]), &row, &mut env_rng)?;
        ledger.update(&outcome.consumption)?;
        total_reward += outcome.reward;
        records.push(PeriodRecord {
            t,
            arm: arm_id,
            cluster,
            reward: outcome.reward,
            consumption: outcome.consumption.clone(),
            theta,
            score,
        });
        if ledger.stopped {
            t_omega = t;
            stopped_early = true;
            overshoot = overshoot_of(&ledger);
            break;
        }
        if let Some(pos) = choice {
            prep.estimates[prep.labels[pos] - 1].update(
                &row,
                outcome.reward,
                &outcome.consumption,
            )?;
        }
        let payoff = outcome.consumption.mapv(|v| v - b_rate);
        omd.step(&payoff)?;
    }
    Ok(RunTrace {
        baseline: cfg.baseline,
        records,
        t_omega,
        total_reward,
        n_s,
        t0: prep.t0,
        phase_boundary: boundary,
        opt_hat: prep.opt_hat,
        z,
        eps_c: prep.eps_c,
        eps_c_max: prep.eps_c_max,
        regret: None,
        stopped_early,
        overshoot,
        budget: cfg.budget,
    })
}

/// Check the hard-feasibility contract of a finished trace: cumulative
/// consumption strictly below the budget in every dimension before the final
/// period, stop flagged iff the final period crossed it, and period indices
/// consistent with the stop time.
pub fn verify_budget_feasibility(trace: &RunTrace) -> Result<()> {
    let Some(last) = trace.records.last() else {
        return Err(Error::Validation("trace holds no records".into()));
    };
    if last.t != trace.t_omega {
        return Err(Error::Validation(format!(
            "last record at t = {} but stop time is {}",
            last.t, trace.t_omega
        )));
    }
    let d = last.consumption.len();
    let mut cum = Array1::<f64>::zeros(d);
    for (i, rec) in trace.records.iter().enumerate() {
        if rec.t != i + 1 {
            return Err(Error::Validation(format!(
                "record {i} has period {} out of order",
                rec.t
            )));
        }
        cum = cum + &rec.consumption;
        let crossed = cum.iter().any(|&c| c >= trace.budget);
        let is_last = i + 1 == trace.records.len();
        if crossed && !is_last {
            return Err(Error::Validation(format!(
                "budget crossed at period {} but the run kept playing",
                rec.t
            )));
        }
        if is_last && crossed != trace.stopped_early {
            return Err(Error::Validation(format!(
                "stop flag {} disagrees with final cumulative consumption",
                trace.stopped_early
            )));
        }
    }
    let over = cum
        .iter()
        .map(|&c| c - trace.budget)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    if (over - trace.overshoot).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "recorded overshoot {} but cumulative consumption implies {over}",
            trace.overshoot
        )));
    }
    Ok(())
}
