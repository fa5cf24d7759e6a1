//! Maximum stochastic reachability for one (user, item) pair.
//!
//! Under an affine score update and soft-max selection, the largest
//! achievable recommendation probability solves a convex program: minimize
//! `lse_j(beta * (b_j.a + c_j)) - beta * (b_goal.a + c_goal)` over the box
//! of admissible actions. The minimizer is found by projected gradient
//! descent with Armijo backtracking; the optimum `gamma` gives
//! `rho_star = exp(-gamma)`.
//!
//! Deterministic (top-1) reachability is certified by minimizing a smoothed
//! margin for an increasing ladder of smoothing parameters and sandwiching
//! the true min-max margin between `lse/beta - ln(n-1)/beta` and the margin
//! evaluated at the found point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::AffineUpdate;
use crate::selection::{self, SelectionRule};

/// Half-width of the pseudo-unbounded action box used by the geometric
/// certificates.
pub const WIDE_BOX_BOUND: f64 = 1e6;

/// Smoothing ladder for top-1 certificates.
pub const TOP1_BETA_SCHEDULE: [f64; 4] = [1e1, 1e2, 1e3, 1e4];

/// Stopping rules of the projected gradient loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Stop when the projected-gradient-map infinity norm falls below this.
    pub grad_tol: f64,
    /// Stop when the objective decreased by no more than this over
    /// `stall_window` iterations.
    pub stall_tol: f64,
    pub stall_window: usize,
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking shrink factor.
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            stall_tol: 1e-12,
            stall_window: 10,
            max_iters: 20_000,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

fn clip(x: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))
}

pub(crate) struct Minimization {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_map_norm: f64,
}

/// Projected gradient descent with Armijo backtracking over any closed
/// convex set given by its Euclidean projection.
///
/// `objective` returns value and gradient; `lipschitz` scales the initial
/// step to 1/L. The optional `early_stop` predicate is evaluated on every
/// iterate and short-circuits the loop.
pub(crate) fn minimize_projected<F, P>(
    objective: &F,
    x0: DVector<f64>,
    project: &P,
    lipschitz: f64,
    settings: &SolverSettings,
    early_stop: Option<&dyn Fn(&DVector<f64>) -> bool>,
) -> Result<Minimization>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    let step0 = if lipschitz.is_finite() && lipschitz > 1e-300 {
        1.0 / lipschitz
    } else {
        1.0
    };
    let mut x = project(&x0);
    let (mut value, mut gradient) = objective(&x);
    if !value.is_finite() {
        return Err(Error::Numeric("non-finite objective at the initial point".into()));
    }

    let grad_map_norm = |x: &DVector<f64>, g: &DVector<f64>| -> f64 {
        let projected = project(&(x - g * step0));
        (0..x.len())
            .map(|i| ((x[i] - projected[i]) / step0).abs())
            .fold(0.0, f64::max)
    };

    let mut history: std::collections::VecDeque<f64> =
        std::collections::VecDeque::with_capacity(settings.stall_window + 1);
    history.push_back(value);
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < settings.max_iters {
        if let Some(stop) = early_stop {
            if stop(&x) {
                converged = true;
                break;
            }
        }
        if grad_map_norm(&x, &gradient) <= settings.grad_tol {
            converged = true;
            break;
        }

        let mut step = step0;
        let mut accepted = false;
        for _ in 0..settings.max_backtracks {
            let candidate = project(&(&x - &gradient * step));
            let (cand_value, cand_gradient) = objective(&candidate);
            if !cand_value.is_finite() {
                return Err(Error::Numeric("non-finite objective during line search".into()));
            }
            let direction_slope = gradient.dot(&(&candidate - &x));
            if cand_value <= value + settings.armijo * direction_slope {
                x = candidate;
                value = cand_value;
                gradient = cand_gradient;
                accepted = true;
                break;
            }
            step *= settings.backtrack;
        }
        iterations += 1;
        if !accepted {
            // no decrease possible at machine precision
            converged = grad_map_norm(&x, &gradient) <= settings.grad_tol;
            break;
        }

        history.push_back(value);
        if history.len() > settings.stall_window + 1 {
            history.pop_front();
        }
        if history.len() == settings.stall_window + 1
            && history.front().unwrap() - value <= settings.stall_tol
        {
            converged = true;
            break;
        }
    }
    if !converged && grad_map_norm(&x, &gradient) <= settings.grad_tol {
        converged = true;
    }

    let gm = grad_map_norm(&x, &gradient);
    Ok(Minimization {
        x,
        value,
        gradient,
        iterations,
        converged,
        grad_map_norm: gm,
    })
}

/// Box-constrained wrapper around [`minimize_projected`].
pub(crate) fn minimize_box<F>(
    objective: &F,
    x0: DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    lipschitz: f64,
    settings: &SolverSettings,
    early_stop: Option<&dyn Fn(&DVector<f64>) -> bool>,
) -> Result<Minimization>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let project = |x: &DVector<f64>| clip(x, lo, hi);
    minimize_projected(objective, x0, &project, lipschitz, settings, early_stop)
}

/// One reachability instance: the affine update restricted to the target
/// set, the goal position, the selection temperature and the action box.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachProblem {
    target_items: Vec<usize>,
    goal_pos: usize,
    b: DMatrix<f64>,
    c: DVector<f64>,
    beta: f64,
    lo: DVector<f64>,
    hi: DVector<f64>,
    a0: DVector<f64>,
    spectral: f64,
}

impl ReachProblem {
    /// Builds a problem from raw target-restricted data. `a0` is clipped
    /// into the box.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        target_items: Vec<usize>,
        b: DMatrix<f64>,
        c: DVector<f64>,
        goal_item: usize,
        beta: f64,
        lo: DVector<f64>,
        hi: DVector<f64>,
        a0: DVector<f64>,
    ) -> Result<Self> {
        let spectral = b.clone().singular_values().max();
        Self::with_spectral(target_items, b, c, goal_item, beta, lo, hi, a0, spectral)
    }

    #[allow(clippy::too_many_arguments)]
    fn with_spectral(
        target_items: Vec<usize>,
        b: DMatrix<f64>,
        c: DVector<f64>,
        goal_item: usize,
        beta: f64,
        lo: DVector<f64>,
        hi: DVector<f64>,
        a0: DVector<f64>,
        spectral: f64,
    ) -> Result<Self> {
        let t = target_items.len();
        let k = b.ncols();
        if t == 0 {
            return Err(Error::Domain("empty target set".into()));
        }
        if b.nrows() != t || c.len() != t {
            return Err(Error::Domain("target restriction dimensions mismatch".into()));
        }
        if lo.len() != k || hi.len() != k || a0.len() != k {
            return Err(Error::Domain("action dimension mismatch".into()));
        }
        for i in 0..k {
            if lo[i] > hi[i] {
                return Err(Error::Domain(format!(
                    "box lower bound {} exceeds upper bound {} in coordinate {i}",
                    lo[i], hi[i]
                )));
            }
        }
        if !(b.iter().all(|v| v.is_finite()) && c.iter().all(|v| v.is_finite())) {
            return Err(Error::Numeric("non-finite problem data".into()));
        }
        if !beta.is_finite() {
            return Err(Error::Domain("beta must be finite".into()));
        }
        let goal_pos = target_items
            .iter()
            .position(|&i| i == goal_item)
            .ok_or_else(|| Error::Domain(format!("goal item {goal_item} is not a target")))?;
        let a0 = clip(&a0, &lo, &hi);
        Ok(Self {
            target_items,
            goal_pos,
            b,
            c,
            beta,
            lo,
            hi,
            a0,
            spectral,
        })
    }

    /// Restricts an affine update to the target rows. The same scalar box
    /// applies to every action coordinate.
    #[allow(clippy::too_many_arguments)]
    pub fn from_affine(
        update: &AffineUpdate,
        targets: &[usize],
        goal_item: usize,
        beta: f64,
        box_lo: f64,
        box_hi: f64,
        a0: &[f64],
    ) -> Result<Self> {
        let (b, c) = update.restrict(targets);
        let k = update.n_actions();
        Self::from_parts(
            targets.to_vec(),
            b,
            c,
            goal_item,
            beta,
            DVector::from_element(k, box_lo),
            DVector::from_element(k, box_hi),
            DVector::from_row_slice(a0),
        )
    }

    pub fn target_items(&self) -> &[usize] {
        &self.target_items
    }

    pub fn goal_item(&self) -> usize {
        self.target_items[self.goal_pos]
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_actions(&self) -> usize {
        self.b.ncols()
    }

    pub fn initial_action(&self) -> &DVector<f64> {
        &self.a0
    }

    /// Replaces the goal item, reusing the restriction and spectral bound.
    pub fn with_goal(&self, goal_item: usize) -> Result<Self> {
        let goal_pos = self
            .target_items
            .iter()
            .position(|&i| i == goal_item)
            .ok_or_else(|| Error::Domain(format!("goal item {goal_item} is not a target")))?;
        let mut p = self.clone();
        p.goal_pos = goal_pos;
        Ok(p)
    }

    /// Replaces the selection temperature, reusing everything else.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::Domain("beta must be finite".into()));
        }
        let mut p = self.clone();
        p.beta = beta;
        Ok(p)
    }

    /// Negative log selection probability of the goal at a given action.
    pub fn objective_at(&self, action: &DVector<f64>) -> f64 {
        let z = (&self.b * action + &self.c) * self.beta;
        let lse = selection::log_sum_exp(z.as_slice());
        lse - z[self.goal_pos]
    }
}

/// Outcome of one max-reachability solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Maximum selection probability of the goal over the action box.
    pub rho_star: f64,
    /// Optimal negative log-likelihood; `rho_star = exp(-gamma_star)`.
    pub gamma_star: f64,
    /// Maximizing action, inside the box.
    pub action: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_map_norm: f64,
}

/// Maximizes the soft-max selection probability of the goal item over the
/// action box.
pub fn max_reachability(problem: &ReachProblem, settings: &SolverSettings) -> Result<SolveResult> {
    if problem.beta <= 0.0 {
        return Err(Error::Domain(format!(
            "solver requires beta > 0, got {}",
            problem.beta
        )));
    }
    let beta = problem.beta;
    let b = &problem.b;
    let goal_row = b.row(problem.goal_pos).transpose();
    let objective = move |a: &DVector<f64>| -> (f64, DVector<f64>) {
        let z = (b * a + &problem.c) * beta;
        let lse = selection::log_sum_exp(z.as_slice());
        let value = lse - z[problem.goal_pos];
        let p = z.map(|zi| (zi - lse).exp());
        let gradient = (b.transpose() * p - &goal_row) * beta;
        (value, gradient)
    };
    let lipschitz = beta * beta * problem.spectral * problem.spectral;
    let min = minimize_box(
        &objective,
        problem.a0.clone(),
        &problem.lo,
        &problem.hi,
        lipschitz,
        settings,
        None,
    )?;
    // lse >= z_goal holds in exact arithmetic; guard the rounding tail
    let gamma = min.value.max(0.0);
    Ok(SolveResult {
        rho_star: (-gamma).exp(),
        gamma_star: gamma,
        action: min.x,
        iterations: min.iterations,
        converged: min.converged,
        grad_map_norm: min.grad_map_norm,
    })
}

/// Outcome of a deterministic reachability check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reachable {
    Yes,
    No,
    Marginal,
}

/// Certificate for top-1 reachability: bounds on the smallest achievable
/// margin `max_{j != goal} (score_j - score_goal)` over the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Top1Certificate {
    pub decision: Reachable,
    pub margin_lower: f64,
    pub margin_upper: f64,
    /// Last smoothing parameter used.
    pub beta_used: f64,
    /// The action achieving `margin_upper`.
    pub action: DVector<f64>,
    pub iterations: usize,
}

/// Decides whether some feasible action makes the goal the (tied) top
/// scored target.
///
/// The goal is declared reachable when the achieved margin falls to
/// `tolerance` or below, unreachable when the certified lower bound
/// exceeds it, and marginal when the smoothing ladder is exhausted without
/// either.
pub fn top1_reachable(
    problem: &ReachProblem,
    tolerance: f64,
    settings: &SolverSettings,
) -> Result<Top1Certificate> {
    let t = problem.target_items.len();
    let k = problem.n_actions();
    let goal = problem.goal_pos;
    if t == 1 {
        return Ok(Top1Certificate {
            decision: Reachable::Yes,
            margin_lower: f64::NEG_INFINITY,
            margin_upper: f64::NEG_INFINITY,
            beta_used: 0.0,
            action: problem.a0.clone(),
            iterations: 0,
        });
    }
    let others = t - 1;
    let mut delta = DMatrix::zeros(others, k);
    let mut offsets = DVector::zeros(others);
    let mut row = 0;
    for j in 0..t {
        if j == goal {
            continue;
        }
        for col in 0..k {
            delta[(row, col)] = problem.b[(j, col)] - problem.b[(goal, col)];
        }
        offsets[row] = problem.c[j] - problem.c[goal];
        row += 1;
    }
    let margin = |a: &DVector<f64>| -> f64 {
        (&delta * a + &offsets).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    let sigma = delta.clone().singular_values().max();

    let mut action = problem.a0.clone();
    let mut best_action = action.clone();
    let mut upper = margin(&action);
    let mut lower = f64::NEG_INFINITY;
    let mut iterations = 0usize;
    let mut beta_used = 0.0;

    for &beta in &TOP1_BETA_SCHEDULE {
        beta_used = beta;
        if upper <= tolerance {
            break;
        }
        let objective = |a: &DVector<f64>| -> (f64, DVector<f64>) {
            let z = (&delta * a + &offsets) * beta;
            let lse = selection::log_sum_exp(z.as_slice());
            let p = z.map(|zi| (zi - lse).exp());
            (lse / beta, delta.transpose() * p)
        };
        let early = |a: &DVector<f64>| margin(a) <= tolerance;
        let min = minimize_box(
            &objective,
            action.clone(),
            &problem.lo,
            &problem.hi,
            beta * sigma * sigma,
            settings,
            Some(&early),
        )?;
        iterations += min.iterations;
        action = min.x;
        let here = margin(&action);
        if here < upper {
            upper = here;
            best_action = action.clone();
        }
        if upper <= tolerance {
            break;
        }
        // certified lower bound: linearize the smoothed margin over the box
        // and subtract the smoothing gap ln(n-1)/beta
        let (value, gradient) = objective(&action);
        let mut linear_floor = value;
        for i in 0..k {
            let down = gradient[i] * (problem.lo[i] - action[i]);
            let up = gradient[i] * (problem.hi[i] - action[i]);
            linear_floor += down.min(up);
        }
        lower = lower.max(linear_floor - (others as f64).ln() / beta);
        if lower > tolerance {
            break;
        }
    }

    let decision = if upper <= tolerance {
        Reachable::Yes
    } else if lower > tolerance {
        Reachable::No
    } else {
        Reachable::Marginal
    };
    Ok(Top1Certificate {
        decision,
        margin_lower: lower.min(upper),
        margin_upper: upper,
        beta_used,
        action: best_action,
        iterations,
    })
}

/// Closed-form maximum reachability under the epsilon-greedy rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonGreedyReach {
    pub rho: f64,
    /// The certificate could not resolve reachability; `rho` is the larger
    /// of the two closed-form values.
    pub marginal: bool,
    /// Set when `1 - epsilon < epsilon / (n - 1)`, where the closed form no
    /// longer dominates the unreachable value.
    pub inverted_order: bool,
}

pub fn epsilon_greedy_rho_star(
    certificate: &Top1Certificate,
    epsilon: f64,
    n_targets: usize,
) -> Result<EpsilonGreedyReach> {
    if n_targets < 2 {
        return Err(Error::Domain(format!(
            "epsilon-greedy needs at least two targets, got {n_targets}"
        )));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    let reachable = 1.0 - epsilon;
    let unreachable = epsilon / (n_targets - 1) as f64;
    let (rho, marginal) = match certificate.decision {
        Reachable::Yes => (reachable, false),
        Reachable::No => (unreachable, false),
        Reachable::Marginal => (reachable.max(unreachable), true),
    };
    Ok(EpsilonGreedyReach {
        rho,
        marginal,
        inverted_order: reachable < unreachable,
    })
}

/// Selection probability of the goal on the unmodified score vector.
pub fn baseline_rho(
    scores: &[f64],
    targets: &[usize],
    rule: &SelectionRule,
    goal: usize,
) -> Result<f64> {
    let pos = targets
        .iter()
        .position(|&t| t == goal)
        .ok_or_else(|| Error::Domain(format!("goal item {goal} is not a target")))?;
    let distribution = selection::rule_distribution(scores, targets, rule)?;
    Ok(distribution[pos])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    fn unit_box(k: usize) -> (DVector<f64>, DVector<f64>) {
        (DVector::from_element(k, -1.0), DVector::from_element(k, 1.0))
    }

    #[test]
    fn action_independent_scores_reduce_to_softmax() {
        let (lo, hi) = unit_box(2);
        let problem = ReachProblem::from_parts(
            vec![0, 1, 2],
            DMatrix::zeros(3, 2),
            DVector::from_row_slice(&[1.0, 0.0, -1.0]),
            0,
            2.0,
            lo,
            hi,
            DVector::from_row_slice(&[0.25, -0.5]),
        )
        .unwrap();
        let result = max_reachability(&problem, &settings()).unwrap();
        let expected =
            crate::selection::softmax_distribution(&[1.0, 0.0, -1.0], &[0, 1, 2], 2.0).unwrap()[0];
        assert_abs_diff_eq!(result.rho_star, expected, epsilon = 1e-12);
        assert_eq!(result.action, problem.a0);
        assert!(result.converged);
    }

    /// One action in [-1, 1], gains (1, -1), zero offsets, unit beta: the
    /// optimum sits at the upper bound with margin 2, rho = 1/(1 + e^-2).
    #[test]
    fn one_dimensional_instance_reaches_the_boundary() {
        let problem = ReachProblem::from_parts(
            vec![0, 1],
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::zeros(2),
            0,
            1.0,
            DVector::from_element(1, -1.0),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 0.0),
        )
        .unwrap();
        let result = max_reachability(&problem, &settings()).unwrap();
        assert_abs_diff_eq!(result.action[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(result.rho_star, 0.88079708, epsilon = 1e-6);
    }

    #[test]
    fn rejects_inverted_box_and_nonpositive_beta() {
        let bad_box = ReachProblem::from_parts(
            vec![0, 1],
            DMatrix::zeros(2, 1),
            DVector::zeros(2),
            0,
            1.0,
            DVector::from_element(1, 1.0),
            DVector::from_element(1, -1.0),
            DVector::zeros(1),
        );
        assert!(matches!(bad_box, Err(Error::Domain(_))));

        let (lo, hi) = unit_box(1);
        let problem = ReachProblem::from_parts(
            vec![0, 1],
            DMatrix::zeros(2, 1),
            DVector::zeros(2),
            0,
            0.0,
            lo,
            hi,
            DVector::zeros(1),
        )
        .unwrap();
        assert!(matches!(
            max_reachability(&problem, &settings()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn solution_dominates_the_starting_point() {
        let problem = ReachProblem::from_parts(
            vec![3, 7, 9],
            DMatrix::from_row_slice(3, 2, &[0.3, -0.2, -0.5, 0.1, 0.2, 0.6]),
            DVector::from_row_slice(&[0.0, 0.4, -0.1]),
            7,
            4.0,
            DVector::from_element(2, -1.0),
            DVector::from_element(2, 1.0),
            DVector::from_row_slice(&[0.3, 0.3]),
        )
        .unwrap();
        let result = max_reachability(&problem, &settings()).unwrap();
        let rho_at_start = (-problem.objective_at(problem.initial_action())).exp();
        assert!(result.rho_star >= rho_at_start - 1e-12);
    }

    #[test]
    fn top1_certificate_on_dominant_corner() {
        // margin row: (b_other - b_goal) a + 0 = -2a, minimized at a = 1
        let problem = ReachProblem::from_parts(
            vec![0, 1],
            DMatrix::from_row_slice(2, 1, &[2.0, 0.0]),
            DVector::zeros(2),
            0,
            1.0,
            DVector::from_element(1, -1.0),
            DVector::from_element(1, 1.0),
            DVector::zeros(1),
        )
        .unwrap();
        let cert = top1_reachable(&problem, 1e-9, &settings()).unwrap();
        assert_eq!(cert.decision, Reachable::Yes);
        assert!(cert.margin_upper <= -2.0 + 1e-6, "upper {}", cert.margin_upper);
    }

    #[test]
    fn top1_certificate_constant_margins() {
        let (lo, hi) = unit_box(1);
        // goal offset strictly below a competitor: unreachable
        let no = ReachProblem::from_parts(
            vec![0, 1, 2],
            DMatrix::zeros(3, 1),
            DVector::from_row_slice(&[0.0, 0.5, -1.0]),
            0,
            1.0,
            lo.clone(),
            hi.clone(),
            DVector::zeros(1),
        )
        .unwrap();
        let cert = top1_reachable(&no, 1e-9, &settings()).unwrap();
        assert_eq!(cert.decision, Reachable::No);
        assert!(cert.margin_lower > 1e-9);

        // exact tie counts as reachable
        let tie = ReachProblem::from_parts(
            vec![0, 1],
            DMatrix::zeros(2, 1),
            DVector::from_row_slice(&[0.7, 0.7]),
            0,
            1.0,
            lo,
            hi,
            DVector::zeros(1),
        )
        .unwrap();
        let cert = top1_reachable(&tie, 1e-9, &settings()).unwrap();
        assert_eq!(cert.decision, Reachable::Yes);
        assert_abs_diff_eq!(cert.margin_upper, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn epsilon_greedy_closed_form() {
        let yes = Top1Certificate {
            decision: Reachable::Yes,
            margin_lower: -1.0,
            margin_upper: -0.5,
            beta_used: 10.0,
            action: DVector::zeros(1),
            iterations: 3,
        };
        let r = epsilon_greedy_rho_star(&yes, 0.1, 11).unwrap();
        assert_abs_diff_eq!(r.rho, 0.9, epsilon = 1e-15);
        assert!(!r.marginal);

        let no = Top1Certificate {
            decision: Reachable::No,
            ..yes.clone()
        };
        let r = epsilon_greedy_rho_star(&no, 0.1, 11).unwrap();
        assert_abs_diff_eq!(r.rho, 0.01, epsilon = 1e-15);

        let r = epsilon_greedy_rho_star(&no, 0.0, 5).unwrap();
        assert_eq!(r.rho, 0.0);

        assert!(epsilon_greedy_rho_star(&yes, 0.1, 1).is_err());
        assert!(epsilon_greedy_rho_star(&yes, 1.5, 4).is_err());

        let marginal = Top1Certificate {
            decision: Reachable::Marginal,
            ..yes.clone()
        };
        let r = epsilon_greedy_rho_star(&marginal, 0.98, 3).unwrap();
        assert!(r.marginal);
        assert_abs_diff_eq!(r.rho, 0.49, epsilon = 1e-15);
        assert!(r.inverted_order);
    }

    #[test]
    fn baseline_probabilities() {
        let scores = [1.0, -1.0, 0.0];
        let rho = baseline_rho(&scores, &[0, 1], &SelectionRule::Softmax { beta: 0.0 }, 1).unwrap();
        assert_abs_diff_eq!(rho, 0.5, epsilon = 1e-15);
        let rho = baseline_rho(&scores, &[0, 1], &SelectionRule::Softmax { beta: 1.0 }, 1).unwrap();
        assert_abs_diff_eq!(rho, 0.11920292, epsilon = 1e-8);
        let rho = baseline_rho(&scores, &[0, 1, 2], &SelectionRule::Top1, 0).unwrap();
        assert_eq!(rho, 1.0);
        assert!(baseline_rho(&scores, &[0, 1], &SelectionRule::Top1, 2).is_err());
    }
}
