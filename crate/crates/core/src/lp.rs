//! Bundled linear-programming support.
//!
//! Two solvers live here. [`lp_solve`] is a dense two-phase tableau simplex
//! with Bland's rule for small box-constrained problems. [`solve_policy_lp`]
//! handles the large per-sample policy programs that would be far too big in
//! dense form: it minimizes the piecewise-linear dual in the `d` resource
//! prices by cutting planes, using [`lp_solve`] on the small master problems.
//! The two routes agree on shared instances, which the tests exercise.

use ndarray::{Array1, Array2, Array3};

use crate::error::{Error, Result};

const TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    PivotLimit,
}

/// `maximize objective·z` subject to `rows·z <= rhs` and `0 <= z <= upper`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Array1<f64>,
    pub rows: Array2<f64>,
    pub rhs: Array1<f64>,
    pub upper: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value; NaN unless `status == Optimal`.
    pub value: f64,
    /// Primal point; zeros unless `status == Optimal`.
    pub primal: Array1<f64>,
}

enum LoopEnd {
    Optimal,
    Unbounded,
    PivotLimit,
}

struct Tableau {
    t: Array2<f64>,
    basis: Vec<usize>,
    width: usize,
    rows: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[[i, self.width - 1]]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[[row, col]];
        for j in 0..self.width {
            self.t[[row, j]] /= piv;
        }
        for r in 0..=self.rows {
            if r == row {
                continue;
            }
            let factor = self.t[[r, col]];
            if factor != 0.0 {
                for j in 0..self.width {
                    let v = self.t[[row, j]];
                    self.t[[r, j]] -= factor * v;
                }
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Run simplex on the current objective row. Columns `>= enterable` are
    /// never brought into the basis (used to retire artificials).
    fn iterate(&mut self, enterable: usize) -> LoopEnd {
        loop {
            let obj = self.rows;
            let entering = (0..enterable).find(|&j| self.t[[obj, j]] < -TOL);
            let Some(col) = entering else {
                return LoopEnd::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.t[[i, col]];
                if a > TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((bi, br)) => {
                            ratio < br - 1e-12
                                || ((ratio - br).abs() <= 1e-12 && self.basis[i] < self.basis[bi])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return LoopEnd::Unbounded;
            };
            self.pivot(row, col);
            if self.pivots > MAX_PIVOTS {
                return LoopEnd::PivotLimit;
            }
        }
    }
}

fn validate_problem(p: &LpProblem) -> Result<(usize, usize)> {
    let n = p.objective.len();
    let m = p.rows.nrows();
    if n == 0 {
        return Err(Error::Validation("linear program has no variables".into()));
    }
    if p.rows.ncols() != n {
        return Err(Error::Validation(format!(
            "constraint matrix has {} columns for {} variables",
            p.rows.ncols(),
            n
        )));
    }
    if p.rhs.len() != m {
        return Err(Error::Validation(format!(
            "rhs length {} does not match {} rows",
            p.rhs.len(),
            m
        )));
    }
    if p.upper.len() != n {
        return Err(Error::Validation("upper-bound length mismatch".into()));
    }
    let finite = p.objective.iter().chain(p.rows.iter()).chain(p.rhs.iter()).all(|v| v.is_finite());
    if !finite {
        return Err(Error::Validation("linear program contains non-finite data".into()));
    }
    for &u in &p.upper {
        if !u.is_finite() || u < 0.0 {
            return Err(Error::Validation(format!(
                "upper bounds must be finite and >= 0, got {u}"
            )));
        }
    }
    Ok((n, m))
}

/// Solve a small dense LP by the two-phase simplex method.
pub fn lp_solve(p: &LpProblem) -> Result<LpSolution> {
    let (n, m) = validate_problem(p)?;
    let total = m + n;

    // Row layout: the m general rows, then one upper-bound row per variable.
    let row_rhs = |i: usize| if i < m { p.rhs[i] } else { p.upper[i - m] };
    let n_art = (0..total).filter(|&i| row_rhs(i) < 0.0).count();
    let width = n + total + n_art + 1;

    let mut tab = Tableau {
        t: Array2::zeros((total + 1, width)),
        basis: vec![0; total],
        width,
        rows: total,
        pivots: 0,
    };
    let mut next_art = n + total;
    for i in 0..total {
        if i < m {
            for j in 0..n {
                tab.t[[i, j]] = p.rows[[i, j]];
            }
        } else {
            tab.t[[i, i - m]] = 1.0;
        }
        tab.t[[i, n + i]] = 1.0;
        tab.t[[i, width - 1]] = row_rhs(i);
        if row_rhs(i) < 0.0 {
            for j in 0..width {
                tab.t[[i, j]] = -tab.t[[i, j]];
            }
            tab.t[[i, next_art]] = 1.0;
            tab.basis[i] = next_art;
            next_art += 1;
        } else {
            tab.basis[i] = n + i;
        }
    }

    let fail = |status: LpStatus| LpSolution {
        status,
        value: f64::NAN,
        primal: Array1::zeros(n),
    };

    if n_art > 0 {
        // Phase 1: maximize minus the sum of artificials.
        for j in (n + total)..(width - 1) {
            tab.t[[total, j]] = 1.0;
        }
        for i in 0..total {
            if tab.basis[i] >= n + total {
                for j in 0..width {
                    let v = tab.t[[i, j]];
                    tab.t[[total, j]] -= v;
                }
            }
        }
        match tab.iterate(n + total) {
            LoopEnd::Optimal => {}
            LoopEnd::Unbounded => {
                return Err(Error::Solver("phase-1 objective reported unbounded".into()))
            }
            LoopEnd::PivotLimit => return Ok(fail(LpStatus::PivotLimit)),
        }
        if tab.rhs(total) < -1e-7 {
            return Ok(fail(LpStatus::Infeasible));
        }
        // Retire artificials still in the basis at level zero. A row with no
        // usable pivot column is redundant and stays inert.
        for i in 0..total {
            if tab.basis[i] >= n + total {
                if let Some(col) = (0..n + total).find(|&j| tab.t[[i, j]].abs() > TOL) {
                    tab.pivot(i, col);
                }
            }
        }
    }

    // Phase 2 objective.
    for j in 0..width {
        tab.t[[total, j]] = 0.0;
    }
    for j in 0..n {
        tab.t[[total, j]] = -p.objective[j];
    }
    for i in 0..total {
        let k = tab.basis[i];
        let factor = tab.t[[total, k]];
        if factor != 0.0 {
            for j in 0..width {
                let v = tab.t[[i, j]];
                tab.t[[total, j]] -= factor * v;
            }
        }
    }
    match tab.iterate(n + total) {
        LoopEnd::Optimal => {}
        LoopEnd::Unbounded => return Ok(fail(LpStatus::Unbounded)),
        LoopEnd::PivotLimit => return Ok(fail(LpStatus::PivotLimit)),
    }

    let mut primal = Array1::zeros(n);
    for i in 0..total {
        if tab.basis[i] < n {
            primal[tab.basis[i]] = tab.rhs(i);
        }
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: tab.rhs(total),
        primal,
    })
}

/// The per-sample randomized-policy program:
/// `maximize Σ_t Σ_a p[t,a]·rho[t,a]` subject to
/// `Σ_t Σ_a p[t,a]·weights[t,a,·] <= beta`, `Σ_a p[t,a] <= 1` for every `t`,
/// and `p >= 0`. Callers fold any sample-averaging scale into `rho`,
/// `weights`, and `beta`.
#[derive(Debug, Clone)]
pub struct PolicyLp {
    /// Shape (samples, arms).
    pub rho: Array2<f64>,
    /// Shape (samples, arms, resources).
    pub weights: Array3<f64>,
    /// Resource caps, strictly positive, length `resources`.
    pub beta: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct PolicyLpSolution {
    /// Optimal objective value.
    pub value: f64,
    /// Minimizing resource prices.
    pub dual: Array1<f64>,
    /// Cutting planes generated.
    pub cuts: usize,
}

/// Dual function pieces at `y`: the hinge sum `h(y)` and one subgradient.
fn policy_dual_eval(p: &PolicyLp, y: &Array1<f64>) -> (f64, Array1<f64>) {
    let (samples, arms, d) = p.weights.dim();
    let mut h = 0.0;
    let mut grad = Array1::zeros(d);
    for t in 0..samples {
        let mut best = 0.0;
        let mut best_arm = None;
        for a in 0..arms {
            let mut s = p.rho[[t, a]];
            for j in 0..d {
                s -= y[j] * p.weights[[t, a, j]];
            }
            if s > best {
                best = s;
                best_arm = Some(a);
            }
        }
        if let Some(a) = best_arm {
            h += best;
            for j in 0..d {
                grad[j] -= p.weights[[t, a, j]];
            }
        }
    }
    (h, grad)
}

/// Solve the policy program by minimizing its dual
/// `g(y) = beta·y + Σ_t max(0, max_a(rho[t,a] - y·weights[t,a,:]))`
/// over `y >= 0` with cutting planes. Returns the optimal value (equal to the
/// primal optimum) without materializing the `samples x arms` variables.
pub fn solve_policy_lp(p: &PolicyLp) -> Result<PolicyLpSolution> {
    let (samples, arms, d) = p.weights.dim();
    if p.rho.dim() != (samples, arms) {
        return Err(Error::Validation(format!(
            "rho shape {:?} does not match weights {:?}",
            p.rho.dim(),
            p.weights.dim()
        )));
    }
    if p.beta.len() != d {
        return Err(Error::Validation("beta length must match resource count".into()));
    }
    if d == 0 {
        return Err(Error::Validation("policy program needs at least one resource".into()));
    }
    if !p.rho.iter().chain(p.weights.iter()).chain(p.beta.iter()).all(|v| v.is_finite()) {
        return Err(Error::Validation("policy program contains non-finite data".into()));
    }
    for &b in &p.beta {
        if !(b > 0.0) {
            return Err(Error::Validation(format!(
                "resource caps must be strictly positive, got {b}"
            )));
        }
    }

    let zero = Array1::zeros(d);
    let (h0, grad0) = policy_dual_eval(p, &zero);
    if h0 <= 1e-15 || samples == 0 || arms == 0 {
        return Ok(PolicyLpSolution { value: 0.0, dual: zero, cuts: 0 });
    }

    let beta_min = p.beta.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut y_cap = 2.0 * h0 / beta_min + 1.0;
    let tau_cap = h0;

    // Cuts h(y) >= offset + slope·y, stored as (slope, offset).
    let mut cuts: Vec<(Array1<f64>, f64)> = vec![(grad0.clone(), h0)];
    let mut upper_bound = h0;
    let mut best_y = zero;

    let max_rounds = 400;
    for _ in 0..max_rounds {
        // Master: maximize -(beta·y + tau) over the cut outer approximation.
        let k = cuts.len();
        let mut obj = Array1::zeros(d + 1);
        for j in 0..d {
            obj[j] = -p.beta[j];
        }
        obj[d] = -1.0;
        let mut rows = Array2::zeros((k, d + 1));
        let mut rhs = Array1::zeros(k);
        for (i, (slope, offset)) in cuts.iter().enumerate() {
            for j in 0..d {
                rows[[i, j]] = slope[j];
            }
            rows[[i, d]] = -1.0;
            rhs[i] = -offset;
        }
        let mut upper = Array1::from_elem(d + 1, y_cap);
        upper[d] = tau_cap;
        let master = lp_solve(&LpProblem { objective: obj, rows, rhs, upper })?;
        if master.status != LpStatus::Optimal {
            return Err(Error::Solver(format!(
                "cutting-plane master ended with status {:?}",
                master.status
            )));
        }
        let y = master.primal.slice(ndarray::s![0..d]).to_owned();
        let lower_bound = -master.value;

        // A price pressing the box means the box, not a cut, is binding;
        // widen and retry before trusting the bound.
        if y.iter().any(|&v| v >= y_cap * (1.0 - 1e-7)) {
            y_cap *= 2.0;
            if y_cap > 1e12 {
                return Err(Error::Solver("dual price box grew past 1e12".into()));
            }
            continue;
        }

        let (h, grad) = policy_dual_eval(p, &y);
        let g_val = p.beta.dot(&y) + h;
        if g_val < upper_bound {
            upper_bound = g_val;
            best_y = y.clone();
        }
        let gap = (upper_bound - lower_bound).max(0.0);
        if gap <= (1e-7 * upper_bound.abs().max(1.0)).max(1e-9) {
            return Ok(PolicyLpSolution { value: upper_bound, dual: best_y, cuts: cuts.len() });
        }
        let offset = h - grad.dot(&y);
        cuts.push((grad, offset));
    }
    Err(Error::Solver(format!(
        "cutting-plane solve did not converge within {max_rounds} rounds"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use rand::Rng;

    fn problem(
        c: Vec<f64>,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        u: Vec<f64>,
    ) -> LpProblem {
        let n = c.len();
        let m = a.len();
        let mut rows = Array2::zeros((m, n));
        for (i, r) in a.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                rows[[i, j]] = *v;
            }
        }
        LpProblem {
            objective: Array1::from_vec(c),
            rows,
            rhs: Array1::from_vec(b),
            upper: Array1::from_vec(u),
        }
    }

    #[test]
    fn simple_two_variable_optimum() {
        let p = problem(
            vec![1.0, 1.0],
            vec![vec![1.0, 2.0]],
            vec![2.0],
            vec![1.0, 1.0],
        );
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 1.5).abs() < 1e-9);
        assert!((s.primal[0] - 1.0).abs() < 1e-9);
        assert!((s.primal[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_goes_through_phase_one() {
        // -x <= -0.5 forces x >= 0.5; maximize -x lands exactly there.
        let p = problem(vec![-1.0], vec![vec![-1.0]], vec![-0.5], vec![1.0]);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value + 0.5).abs() < 1e-9);
        assert!((s.primal[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        // x >= 3 cannot hold with x <= 1.
        let p = problem(vec![1.0], vec![vec![-1.0]], vec![-3.0], vec![1.0]);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(s.value.is_nan());
    }

    #[test]
    fn equality_enforced_by_opposing_rows() {
        let p = problem(
            vec![2.0],
            vec![vec![1.0], vec![-1.0]],
            vec![0.7, -0.7],
            vec![1.0],
        );
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] - 0.7).abs() < 1e-9);
        assert!((s.value - 1.4).abs() < 1e-9);
    }

    #[test]
    fn zero_objective_is_zero_valued() {
        let p = problem(vec![0.0, 0.0], vec![vec![1.0, 1.0]], vec![1.0], vec![1.0, 1.0]);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.value.abs() < 1e-12);
    }

    /// Enumerate candidate vertices from every n-subset of the constraint
    /// set (general rows, lower bounds, upper bounds) and return the best
    /// feasible objective, or None when no feasible vertex exists.
    pub(super) fn best_vertex(p: &LpProblem) -> Option<f64> {
        let n = p.objective.len();
        let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in 0..p.rows.nrows() {
            cons.push((p.rows.row(i).to_vec(), p.rhs[i]));
        }
        for j in 0..n {
            let mut low = vec![0.0; n];
            low[j] = -1.0;
            cons.push((low, 0.0));
            let mut high = vec![0.0; n];
            high[j] = 1.0;
            cons.push((high, p.upper[j]));
        }
        let mut best: Option<f64> = None;
        let mut pick = vec![0usize; n];
        fn recurse(
            cons: &[(Vec<f64>, f64)],
            p: &LpProblem,
            pick: &mut Vec<usize>,
            depth: usize,
            start: usize,
            best: &mut Option<f64>,
        ) {
            let n = p.objective.len();
            if depth == n {
                let mut a = Array2::zeros((n, n));
                let mut b = Array1::zeros(n);
                for (r, &ci) in pick.iter().enumerate() {
                    for j in 0..n {
                        a[[r, j]] = cons[ci].0[j];
                    }
                    b[r] = cons[ci].1;
                }
                let Ok(z) = crate::linalg::solve_general(a, b) else {
                    return;
                };
                let feasible = cons.iter().all(|(row, rhs)| {
                    let lhs: f64 = row.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
                    lhs <= rhs + 1e-7
                });
                if feasible {
                    let v = p.objective.dot(&z);
                    *best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
                return;
            }
            for ci in start..cons.len() {
                pick[depth] = ci;
                recurse(cons, p, pick, depth + 1, ci + 1, best);
            }
        }
        recurse(&cons, p, &mut pick, 0, 0, &mut best);
        best
    }

    pub(super) fn random_problem<R: Rng>(rng: &mut R, max_vars: usize, max_rows: usize) -> LpProblem {
        let n = rng.random_range(1..=max_vars);
        let m = rng.random_range(0..=max_rows);
        let c = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let a = (0..m)
            .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let b = (0..m).map(|_| rng.random::<f64>() * 1.5 - 0.5).collect();
        let u = (0..n).map(|_| rng.random::<f64>() * 1.9 + 0.1).collect();
        problem(c, a, b, u)
    }

    #[test]
    fn agrees_with_vertex_enumeration() {
        let mut rng = stream(7, 0x11);
        let mut feasible_seen = 0;
        let mut infeasible_seen = 0;
        for case in 0..60 {
            let p = random_problem(&mut rng, 3, 3);
            let s = lp_solve(&p).unwrap();
            match best_vertex(&p) {
                Some(v) => {
                    feasible_seen += 1;
                    assert_eq!(s.status, LpStatus::Optimal, "case {case}");
                    assert!(
                        (s.value - v).abs() <= 1e-6 * v.abs().max(1.0),
                        "case {case}: simplex {} vs enumeration {v}",
                        s.value
                    );
                }
                None => {
                    infeasible_seen += 1;
                    assert_eq!(s.status, LpStatus::Infeasible, "case {case}");
                }
            }
        }
        assert!(feasible_seen >= 10, "generator produced too few feasible cases");
        assert!(infeasible_seen >= 1, "generator produced no infeasible cases");
    }

    fn policy(rho: Vec<Vec<f64>>, w: Vec<Vec<Vec<f64>>>, beta: Vec<f64>) -> PolicyLp {
        let samples = rho.len();
        let arms = rho[0].len();
        let d = beta.len();
        let mut rho_m = Array2::zeros((samples, arms));
        let mut w_m = Array3::zeros((samples, arms, d));
        for t in 0..samples {
            for a in 0..arms {
                rho_m[[t, a]] = rho[t][a];
                for j in 0..d {
                    w_m[[t, a, j]] = w[t][a][j];
                }
            }
        }
        PolicyLp { rho: rho_m, weights: w_m, beta: Array1::from_vec(beta) }
    }

    #[test]
    fn policy_program_frozen_example() {
        // One sample, two arms, one resource. The mix (1/9, 8/9) saturates
        // the cap 0.2 and earns 7/15.
        let p = policy(
            vec![vec![1.0, 0.4]],
            vec![vec![vec![1.0], vec![0.1]]],
            vec![0.2],
        );
        let s = solve_policy_lp(&p).unwrap();
        assert!((s.value - 7.0 / 15.0).abs() < 1e-7, "value {}", s.value);
    }

    #[test]
    fn slack_caps_reduce_to_greedy_sum() {
        let p = policy(
            vec![vec![0.9, 0.3], vec![-0.2, 0.5], vec![-0.4, -0.1]],
            vec![
                vec![vec![0.5, 0.1], vec![0.2, 0.3]],
                vec![vec![0.4, 0.4], vec![0.6, 0.2]],
                vec![vec![0.3, 0.3], vec![0.1, 0.9]],
            ],
            vec![100.0, 100.0],
        );
        let s = solve_policy_lp(&p).unwrap();
        // Prices settle at zero and every sample plays its best nonnegative arm.
        assert!((s.value - (0.9 + 0.5)).abs() < 1e-7);
        assert!(s.dual.iter().all(|&y| y.abs() < 1e-6));
    }

    #[test]
    fn empty_and_worthless_programs_are_zero() {
        let p = policy(
            vec![vec![-0.5, -0.2]],
            vec![vec![vec![0.5], vec![0.5]]],
            vec![0.3],
        );
        let s = solve_policy_lp(&p).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.cuts, 0);
    }

    #[test]
    fn cutting_plane_matches_dense_simplex() {
        let mut rng = stream(8, 0x11);
        for case in 0..30 {
            let samples = rng.random_range(1..=3);
            let arms = rng.random_range(1..=3);
            let d = rng.random_range(1..=2);
            let rho: Vec<Vec<f64>> = (0..samples)
                .map(|_| (0..arms).map(|_| rng.random::<f64>() * 1.4 - 0.2).collect())
                .collect();
            let w: Vec<Vec<Vec<f64>>> = (0..samples)
                .map(|_| {
                    (0..arms)
                        .map(|_| (0..d).map(|_| rng.random::<f64>() * 1.2 - 0.2).collect())
                        .collect()
                })
                .collect();
            let beta: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 0.9 + 0.1).collect();
            let pol = policy(rho.clone(), w.clone(), beta.clone());
            let fast = solve_policy_lp(&pol).unwrap();

            // Dense form: one variable per (sample, arm) pair.
            let nv = samples * arms;
            let mut c = vec![0.0; nv];
            let mut rows = vec![vec![0.0; nv]; d + samples];
            let mut b = vec![0.0; d + samples];
            for t in 0..samples {
                for a in 0..arms {
                    let v = t * arms + a;
                    c[v] = rho[t][a];
                    for j in 0..d {
                        rows[j][v] = w[t][a][j];
                    }
                    rows[d + t][v] = 1.0;
                }
            }
            for j in 0..d {
                b[j] = beta[j];
            }
            for t in 0..samples {
                b[d + t] = 1.0;
            }
            let dense = lp_solve(&problem(c, rows, b, vec![1.0; nv])).unwrap();
            assert_eq!(dense.status, LpStatus::Optimal, "case {case}");
            assert!(
                (fast.value - dense.value).abs() <= 1e-6 * dense.value.abs().max(1.0),
                "case {case}: cutting-plane {} vs dense {}",
                fast.value,
                dense.value
            );
        }
    }

    #[test]
    fn handles_negative_consumption_entries() {
        // Negative weight entries must not break the price search.
        let p = policy(
            vec![vec![0.6], vec![0.8]],
            vec![vec![vec![-0.3, 0.5]], vec![vec![0.4, -0.1]]],
            vec![0.25, 0.25],
        );
        let fast = solve_policy_lp(&p).unwrap();
        let dense = lp_solve(&problem(
            vec![0.6, 0.8],
            vec![vec![-0.3, 0.4], vec![0.5, -0.1], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.25, 0.25, 1.0, 1.0],
            vec![1.0, 1.0],
        ))
        .unwrap();
        assert!((fast.value - dense.value).abs() < 1e-6);
    }

    #[test]
    fn scales_to_large_sample_counts() {
        // 3600 samples x 60 arms x 2 resources would be a 216k-variable
        // dense program; the dual route stays in d = 2 dimensions.
        let mut rng = stream(9, 0x11);
        let (samples, arms, d) = (3600, 60, 2);
        let mut rho = Array2::zeros((samples, arms));
        let mut w = Array3::zeros((samples, arms, d));
        for t in 0..samples {
            for a in 0..arms {
                rho[[t, a]] = rng.random::<f64>();
                for j in 0..d {
                    w[[t, a, j]] = rng.random::<f64>();
                }
            }
        }
        let scale = 1.0 / samples as f64;
        rho.mapv_inplace(|v| v * scale);
        w.mapv_inplace(|v| v * scale);
        let p = PolicyLp { rho, weights: w, beta: Array1::from_elem(d, 0.3) };
        let s = solve_policy_lp(&p).unwrap();
        // Per-sample value is at most 1 and the caps bite below that.
        assert!(s.value > 0.3 && s.value <= 1.0, "value {}", s.value);
        assert!(s.cuts < 200, "took {} cuts", s.cuts);
    }
}
