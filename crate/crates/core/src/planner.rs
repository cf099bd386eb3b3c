//! Non-asymptotic W₂ bounds for the Langevin update and their inversion
//! into `(h, b, K)` schedules.
//!
//! For `f` with constants `0 < m ≤ M`, LMC with constant step `h ∈ (0, 2/M)`
//! started from `ν₀` satisfies
//!
//! ```text
//! h ≤ 2/(m+M):  W₂(ν_K, π) ≤ (1 − mh)^K W₂(ν₀, π) + 1.65 (M/m) √(hp)
//! h ≥ 2/(m+M):  W₂(ν_K, π) ≤ (Mh − 1)^K W₂(ν₀, π) + 1.65 Mh/(2 − Mh) √(hp)
//! ```
//!
//! and, when the Hessian is `L`-Lipschitz and `h < 2/(m+M)`,
//!
//! ```text
//! W₂(ν_K, π) ≤ (1 − mh)^K W₂(ν₀, π) + Lhp/(2m) + 11 M^{3/2} h √p / (5m).
//! ```
//!
//! Idealized SGD with `b = hn²/(2 + hn)` injects noise of variance exactly
//! `2h` per coordinate, i.e. it *is* LMC with step `h`, which is how the SGD
//! planners reuse these bounds. Theorems produce a real-valued `b`; plans
//! round it down and recompute the step as `h_eff = 2b/(n(n − b))` so the
//! equivalence stays exact, then recompute `K` with `h_eff`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{Constants, DecomposableTarget, Potential};

/// Relative slack used when checking validity inequalities.
pub const RELATIVE_SLACK: f64 = 1e-12;

/// The result a bound or plan is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    LmcFirstOrder,
    LmcSecondOrder,
    SgdFirstOrder,
    SgdSecondOrder,
}

impl Theorem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Theorem::LmcFirstOrder => "lmc_first_order",
            Theorem::LmcSecondOrder => "lmc_second_order",
            Theorem::SgdFirstOrder => "sgd_first_order",
            Theorem::SgdSecondOrder => "sgd_second_order",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "lmc_first_order" => Ok(Theorem::LmcFirstOrder),
            "lmc_second_order" => Ok(Theorem::LmcSecondOrder),
            "sgd_first_order" | "first_order" => Ok(Theorem::SgdFirstOrder),
            "sgd_second_order" | "second_order" => Ok(Theorem::SgdSecondOrder),
            other => Err(Error::invalid(format!("unknown theorem {other:?}"))),
        }
    }
}

/// One checked inequality `lhs ≤ rhs` (or `lhs < rhs` when strict).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub theorem: Theorem,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl Condition {
    fn at_most(theorem: Theorem, name: &str, lhs: f64, rhs: f64) -> Self {
        let slack = RELATIVE_SLACK * lhs.abs().max(rhs.abs());
        Self {
            theorem,
            name: name.to_string(),
            lhs,
            rhs,
            pass: lhs <= rhs + slack,
        }
    }

    fn below(theorem: Theorem, name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            theorem,
            name: name.to_string(),
            lhs,
            rhs,
            pass: lhs < rhs,
        }
    }
}

fn all_pass(conditions: &[Condition]) -> bool {
    conditions.iter().all(|c| c.pass)
}

/// Which half of the first-order bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `h ≤ 2/(m+M)`, contraction `1 − mh`.
    SmallStep,
    /// `h ≥ 2/(m+M)`, contraction `Mh − 1`.
    LargeStep,
}

/// A W₂ upper bound split into its terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub theorem: Theorem,
    pub branch: Branch,
    /// Per-step contraction factor.
    pub contraction: f64,
    /// `contraction^K · W0`.
    pub initial_term: f64,
    /// The `√(hp)` term (first order) or the `M^{3/2} h √p` term (second order).
    pub discretization_term: f64,
    /// `Lhp/(2m)`; zero for the first-order bound.
    pub hessian_term: f64,
    pub total: f64,
}

fn check_common(h: f64, w0: f64, p: usize) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("step size must be positive, got {h}")));
    }
    if !(w0 >= 0.0 && w0.is_finite()) {
        return Err(Error::invalid(format!("initial distance must be >= 0, got {w0}")));
    }
    if p == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    Ok(())
}

/// First-order LMC bound; requires `0 < h < 2/M`. The branch is chosen by
/// comparing `h` with `2/(m+M)`.
pub fn lmc_bound_first_order(h: f64, k: u64, w0: f64, constants: &Constants, p: usize) -> Result<Bound> {
    let split = 2.0 / (constants.strong_convexity + constants.smoothness);
    let branch = if h <= split { Branch::SmallStep } else { Branch::LargeStep };
    lmc_bound_first_order_branch(h, k, w0, constants, p, branch)
}

/// Evaluates one branch formula of the first-order bound regardless of
/// which side of `2/(m+M)` the step lies on (still requires `0 < h < 2/M`).
pub fn lmc_bound_first_order_branch(
    h: f64,
    k: u64,
    w0: f64,
    constants: &Constants,
    p: usize,
    branch: Branch,
) -> Result<Bound> {
    check_common(h, w0, p)?;
    let (m, big_m) = (constants.strong_convexity, constants.smoothness);
    if h >= 2.0 / big_m {
        return Err(Error::invalid(format!("step size {h} must be < 2/M = {}", 2.0 / big_m)));
    }
    let root = (h * p as f64).sqrt();
    let (contraction, discretization) = match branch {
        Branch::SmallStep => (1.0 - m * h, 1.65 * (big_m / m) * root),
        Branch::LargeStep => (big_m * h - 1.0, 1.65 * big_m * h / (2.0 - big_m * h) * root),
    };
    let initial_term = contraction.powf(k as f64) * w0;
    Ok(Bound {
        theorem: Theorem::LmcFirstOrder,
        branch,
        contraction,
        initial_term,
        discretization_term: discretization,
        hessian_term: 0.0,
        total: initial_term + discretization,
    })
}

/// Second-order LMC bound for `L`-Hessian-Lipschitz potentials; requires `0 < h < 2/(m+M)`.
pub fn lmc_bound_second_order(h: f64, k: u64, w0: f64, constants: &Constants, p: usize) -> Result<Bound> {
    check_common(h, w0, p)?;
    let (m, big_m) = (constants.strong_convexity, constants.smoothness);
    let l = constants
        .hessian_lipschitz
        .ok_or_else(|| Error::UnsupportedTarget("second-order bound needs a Hessian-Lipschitz constant".into()))?;
    if h >= 2.0 / (m + big_m) {
        return Err(Error::invalid(format!(
            "step size {h} must be < 2/(m+M) = {}",
            2.0 / (m + big_m)
        )));
    }
    let pf = p as f64;
    let contraction = 1.0 - m * h;
    let initial_term = contraction.powf(k as f64) * w0;
    let hessian_term = l * h * pf / (2.0 * m);
    let discretization = 11.0 * big_m.powf(1.5) * h * pf.sqrt() / (5.0 * m);
    Ok(Bound {
        theorem: Theorem::LmcSecondOrder,
        branch: Branch::SmallStep,
        contraction,
        initial_term,
        discretization_term: discretization,
        hessian_term,
        total: initial_term + hessian_term + discretization,
    })
}

/// Upper bound `√(p/m) + √(2f(θ₀)/m)` on `W₂(δ_{θ₀}, π)` for a potential with `f ≥ 0`.
pub fn w0_upper_bound(f_at_theta0: f64, m: f64, p: usize) -> Result<f64> {
    if !(f_at_theta0 >= 0.0 && f_at_theta0.is_finite()) {
        return Err(Error::invalid(format!(
            "f(theta0) must be finite and >= 0, got {f_at_theta0}"
        )));
    }
    if !(m > 0.0) {
        return Err(Error::invalid(format!("m must be positive, got {m}")));
    }
    Ok((p as f64 / m).sqrt() + (2.0 * f_at_theta0 / m).sqrt())
}

/// A step-size / batch-size / iteration-count schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub theorem: Theorem,
    /// Step size prescribed by the theorem.
    pub h: f64,
    /// Step size actually used; equals `2b/(n(n−b))` for SGD plans.
    pub h_eff: f64,
    /// Integer batch size (1 for LMC plans).
    pub b: u64,
    /// Real-valued batch size prescribed by the theorem.
    pub b_real: f64,
    #[serde(rename = "K")]
    pub k: u64,
    /// `K·b` gradient evaluations.
    pub budget: u64,
    /// Real-valued right-hand side of the theorem's budget condition.
    pub budget_bound: f64,
    pub epsilon: f64,
    /// Natural log of the theorem's `Q` quantity.
    pub log_q: f64,
    /// Upper bound on the initial W₂ distance used for the soundness check.
    pub w0_bound: f64,
    /// The theorem's W₂ bound evaluated at `(h_eff, K, w0_bound)`.
    pub predicted_bound: f64,
    pub conditions: Vec<Condition>,
    #[serde(default)]
    pub notes: Vec<String>,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// Iterations from the contraction condition `K ≥ log(Q)/rate`.
fn iterations_from_log_q(log_q: f64, rate: f64, notes: &mut Vec<String>) -> u64 {
    if log_q <= 0.0 {
        notes.push("Q <= 1: requested accuracy is looser than the initial distance bound; K = 1".into());
        return 1;
    }
    ((log_q / rate).ceil() as u64).max(1)
}

/// Smallest `K ≥ 1` with `contraction^K · w0 ≤ allowance`.
fn iterations_for(contraction: f64, w0: f64, allowance: f64) -> Option<u64> {
    if allowance <= 0.0 {
        return None;
    }
    if w0 <= allowance || contraction <= 0.0 {
        return Some(1);
    }
    if contraction >= 1.0 {
        return None;
    }
    let mut k = ((w0 / allowance).ln() / -contraction.ln()).ceil().max(1.0) as u64;
    while contraction.powf(k as f64) * w0 > allowance {
        k += 1;
    }
    Some(k)
}

/// Evaluates `bound(k)`; if it exceeds `epsilon`, raises `k` to the smallest
/// value that meets it. Returns the final `(k, bound)`.
fn ensure_sound(
    k: u64,
    epsilon: f64,
    w0: f64,
    notes: &mut Vec<String>,
    bound: impl Fn(u64, f64) -> Result<Bound>,
) -> Result<(u64, Bound)> {
    let current = bound(k, w0)?;
    if current.total <= epsilon {
        return Ok((k, current));
    }
    let floor = current.total - current.initial_term;
    match iterations_for(current.contraction, w0, epsilon - floor) {
        Some(raised) if raised > k => {
            let b = bound(raised, w0)?;
            notes.push(format!(
                "K raised from {k} to {raised} so that the bound with W0 = {w0:.6e} is <= epsilon"
            ));
            Ok((raised, b))
        }
        _ => Ok((k, current)),
    }
}

/// LMC schedule: `h = min(2/(m+M), m²ε²/(11M²p))`, `K = ⌈log(Q)/(mh)⌉` with
/// `Q = (2f(θ₀) + mp)/(0.5mε)`.
pub fn plan_lmc(epsilon: f64, constants: &Constants, p: usize, f_at_theta0: f64) -> Result<Plan> {
    check_epsilon(epsilon)?;
    let theorem = Theorem::LmcFirstOrder;
    let (m, big_m) = (constants.strong_convexity, constants.smoothness);
    let pf = p as f64;
    let w0 = w0_upper_bound(f_at_theta0, m, p)?;
    let split = 2.0 / (m + big_m);
    let noise_cap = m * m * epsilon * epsilon / (11.0 * big_m * big_m * pf);
    let h = split.min(noise_cap);
    let log_q = ((2.0 * f_at_theta0 + m * pf) / (0.5 * m * epsilon)).ln();
    let mut notes = Vec::new();
    let k = iterations_from_log_q(log_q, m * h, &mut notes);
    let (k, bound) = ensure_sound(k, epsilon, w0, &mut notes, |k, w0| {
        lmc_bound_first_order(h, k, w0, constants, p)
    })?;
    let conditions = vec![
        Condition::at_most(theorem, "h ≤ 2/(m+M)", h, split),
        Condition::at_most(theorem, "h ≤ m²ε²/(11M²p)", h, noise_cap),
        Condition::at_most(theorem, "log(Q)/m ≤ hK", log_q / m, h * k as f64),
        Condition::at_most(theorem, "W₂ bound ≤ ε", bound.total, epsilon),
    ];
    finish(Plan {
        theorem,
        h,
        h_eff: h,
        b: 1,
        b_real: 1.0,
        k,
        budget: k,
        budget_bound: log_q.max(0.0) / (m * h),
        epsilon,
        log_q,
        w0_bound: w0,
        predicted_bound: bound.total,
        conditions,
        notes,
    })
}

fn finish(plan: Plan) -> Result<Plan> {
    if all_pass(&plan.conditions) {
        Ok(plan)
    } else {
        Err(Error::Infeasible(plan.conditions))
    }
}

/// `(b_int, h_eff)` with `b_int = max(1, ⌊b⌋)` and `h_eff = 2b_int/(n(n − b_int))`.
pub fn round_batch(b_real: f64, n: usize) -> (u64, f64) {
    let nf = n as f64;
    let b = (b_real.floor().max(1.0) as u64).min(n.saturating_sub(1).max(1) as u64);
    let bf = b as f64;
    (b, 2.0 * bf / (nf * (nf - bf)))
}

/// Real-valued batch size `hn²/(2 + hn)` at which idealized SGD noise matches LMC.
pub fn matching_batch(h: f64, n: usize) -> f64 {
    let nf = n as f64;
    h * nf * nf / (2.0 + h * nf)
}

fn check_f0(f_at_theta0: f64) -> Result<()> {
    if f_at_theta0 >= 0.0 && f_at_theta0.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "f(theta0) must be finite and >= 0, got {f_at_theta0}"
        )))
    }
}

/// Real-valued budget `4pκ²n·log Q′ / (m_g(8pκ² + ε²n))` of the first-order plan.
pub fn first_order_budget_bound(epsilon: f64, p: f64, kappa: f64, m_g: f64, n: f64, log_q: f64) -> f64 {
    4.0 * p * kappa * kappa * n * log_q / (m_g * (8.0 * p * kappa * kappa + epsilon * epsilon * n))
}

/// SGD schedule under first-order smoothness: `h = ε²/(4κ²p)`,
/// `b = hn²/(2 + hn)`, valid for `n ≥ 9` and `3κ√p/n ≤ ε ≤ 2κ√p/√(nM_g)`.
pub fn plan_sgd_first_order(epsilon: f64, target: &DecomposableTarget, f_at_theta0: f64) -> Result<Plan> {
    check_epsilon(epsilon)?;
    check_f0(f_at_theta0)?;
    let theorem = Theorem::SgdFirstOrder;
    let n = target.n();
    let (nf, pf) = (n as f64, target.dim() as f64);
    let c = target.component_constants();
    let (m_g, big_m_g) = (c.strong_convexity, c.smoothness);
    let kappa = target.kappa();

    let mut conditions = vec![
        Condition::at_most(theorem, "n ≥ 9", 9.0, nf),
        Condition::at_most(theorem, "ε ≥ 3κ√p/n", 3.0 * kappa * pf.sqrt() / nf, epsilon),
        Condition::at_most(
            theorem,
            "ε ≤ 2κ√p/√(nM_g)",
            epsilon,
            2.0 * kappa * pf.sqrt() / (nf * big_m_g).sqrt(),
        ),
    ];
    if !all_pass(&conditions) {
        return Err(Error::Infeasible(conditions));
    }

    let h = epsilon * epsilon / (4.0 * kappa * kappa * pf);
    let b_real = matching_batch(h, n);
    let (b, h_eff) = round_batch(b_real, n);
    let log_q = ((2.0 * f_at_theta0 + m_g * pf) / (0.1 * m_g * epsilon)).ln();
    let mut notes = Vec::new();
    let k = iterations_from_log_q(log_q, m_g * nf * h_eff, &mut notes);
    let aggregate = target.constants();
    let w0 = w0_upper_bound(f_at_theta0, aggregate.strong_convexity, target.dim())?;
    let (k, bound) = ensure_sound(k, epsilon, w0, &mut notes, |k, w0| {
        lmc_bound_first_order(h_eff, k, w0, &aggregate, target.dim())
    })?;
    let budget_bound = first_order_budget_bound(epsilon, pf, kappa, m_g, nf, log_q);

    conditions.extend([
        Condition::at_most(theorem, "1 ≤ b", 1.0, b_real),
        Condition::at_most(
            theorem,
            "h_eff ≤ 2/(m+M)",
            h_eff,
            2.0 / (aggregate.strong_convexity + aggregate.smoothness),
        ),
        Condition::at_most(theorem, "Kb ≥ 4pκ²n·log(Q′)/(m_g(8pκ²+ε²n))", budget_bound, (k * b) as f64),
        Condition::at_most(theorem, "W₂ bound ≤ ε", bound.total, epsilon),
    ]);
    finish(Plan {
        theorem,
        h,
        h_eff,
        b,
        b_real,
        k,
        budget: k * b,
        budget_bound,
        epsilon,
        log_q,
        w0_bound: w0,
        predicted_bound: bound.total,
        conditions,
        notes,
    })
}

/// SGD schedule under second-order smoothness:
/// `h = ε/(4κL_g√(M_g p max(p, n)))`, `b = hn²/(2 + hn)`.
pub fn plan_sgd_second_order(epsilon: f64, target: &DecomposableTarget, f_at_theta0: f64) -> Result<Plan> {
    check_epsilon(epsilon)?;
    check_f0(f_at_theta0)?;
    let theorem = Theorem::SgdSecondOrder;
    let c = target.component_constants();
    let l_g = c.hessian_lipschitz.ok_or_else(|| {
        Error::UnsupportedTarget("second-order planning needs a Hessian-Lipschitz constant L_g".into())
    })?;
    let n = target.n();
    let (nf, pf) = (n as f64, target.dim() as f64);
    let (m_g, big_m_g) = (c.strong_convexity, c.smoothness);
    let kappa = target.kappa();
    let spread = (pf * pf.max(nf)).sqrt();
    let scaled_eps = epsilon / (4.0 * kappa * l_g * big_m_g.sqrt());

    let mut conditions = vec![
        Condition::at_most(theorem, "n ≥ 2", 2.0, nf),
        Condition::at_most(theorem, "L_g ≥ 1", 1.0, l_g),
        Condition::at_most(theorem, "M_g ≥ 1", 1.0, big_m_g),
        Condition::at_most(theorem, "κ ≥ 1", 1.0, kappa),
        Condition::at_most(
            theorem,
            "2√(p·max(p,n))/(n(n−1)) ≤ ε/(4κL_g√M_g)",
            2.0 * spread / (nf * (nf - 1.0)),
            scaled_eps,
        ),
        Condition::at_most(
            theorem,
            "ε/(4κL_g√M_g) ≤ √(p·max(p,n))/(M_g n)",
            scaled_eps,
            spread / (big_m_g * nf),
        ),
    ];
    if !all_pass(&conditions) {
        return Err(Error::Infeasible(conditions));
    }

    let root = (big_m_g * pf * pf.max(nf)).sqrt();
    let h = epsilon / (4.0 * kappa * l_g * root);
    let b_real = matching_batch(h, n);
    let (b, h_eff) = round_batch(b_real, n);
    let log_q = ((2.0 * f_at_theta0 + m_g * pf) / (0.3 * m_g * epsilon)).ln();
    let mut notes = Vec::new();
    let k = iterations_from_log_q(log_q, m_g * nf * h_eff, &mut notes);
    let aggregate = target.constants();
    let w0 = w0_upper_bound(f_at_theta0, aggregate.strong_convexity, target.dim())?;
    let split = 2.0 / (aggregate.strong_convexity + aggregate.smoothness);
    let step_ok = Condition::below(theorem, "h_eff < 2/(m+M)", h_eff, split);
    if !step_ok.pass {
        conditions.push(step_ok);
        return Err(Error::Infeasible(conditions));
    }
    let (k, bound) = ensure_sound(k, epsilon, w0, &mut notes, |k, w0| {
        lmc_bound_second_order(h_eff, k, w0, &aggregate, target.dim())
    })?;
    let budget_bound =
        4.0 * nf * kappa * l_g * root * log_q / (m_g * (8.0 * kappa * l_g * root + nf * epsilon));

    conditions.extend([
        Condition::at_most(theorem, "1 ≤ b", 1.0, b_real),
        step_ok,
        Condition::at_most(
            theorem,
            "Kb ≥ 4nκL_g√(M_g p·max(p,n))·log(Q″)/(m_g(8κL_g√(M_g p·max(p,n)) + nε))",
            budget_bound,
            (k * b) as f64,
        ),
        Condition::at_most(theorem, "W₂ bound ≤ ε", bound.total, epsilon),
    ]);
    finish(Plan {
        theorem,
        h,
        h_eff,
        b,
        b_real,
        k,
        budget: k * b,
        budget_bound,
        epsilon,
        log_q,
        w0_bound: w0,
        predicted_bound: bound.total,
        conditions,
        notes,
    })
}

/// Every SGD planner applicable to `target`, in tie-break order.
pub fn candidate_plans(epsilon: f64, target: &DecomposableTarget, f_at_theta0: f64) -> Vec<(Theorem, Result<Plan>)> {
    let mut out = vec![(
        Theorem::SgdFirstOrder,
        plan_sgd_first_order(epsilon, target, f_at_theta0),
    )];
    if target.component_constants().hessian_lipschitz.is_some() {
        out.push((
            Theorem::SgdSecondOrder,
            plan_sgd_second_order(epsilon, target, f_at_theta0),
        ));
    }
    out
}

/// The valid SGD plan with the smallest budget `K·b`; ties go to the
/// first-order plan. Fails with every violated condition when no plan is valid.
pub fn best_plan(epsilon: f64, target: &DecomposableTarget, f_at_theta0: f64) -> Result<Plan> {
    check_epsilon(epsilon)?;
    check_f0(f_at_theta0)?;
    let mut best: Option<Plan> = None;
    let mut failed = Vec::new();
    for (_, outcome) in candidate_plans(epsilon, target, f_at_theta0) {
        match outcome {
            Ok(plan) => {
                if best.as_ref().is_none_or(|b| plan.budget < b.budget) {
                    best = Some(plan);
                }
            }
            Err(Error::Infeasible(conditions)) => failed.extend(conditions.into_iter().filter(|c| !c.pass)),
            Err(Error::UnsupportedTarget(_)) => {}
            Err(other) => return Err(other),
        }
    }
    best.ok_or(Error::Infeasible(failed))
}

/// `f(θ₀)` for a target; potentials are nonnegative by construction.
pub fn potential_at<P: Potential + ?Sized>(target: &P, theta0: &[f64]) -> Result<f64> {
    if theta0.len() != target.dim() {
        return Err(Error::invalid(format!(
            "theta0 has dimension {}, target has {}",
            theta0.len(),
            target.dim()
        )));
    }
    let v = target.value(theta0);
    check_f0(v)?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::make_isotropic_gaussian_target;

    fn constants(m: f64, big_m: f64, l: Option<f64>) -> Constants {
        Constants::new(m, big_m, l).unwrap()
    }

    fn spread_centers(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![(i as f64 - (n as f64 - 1.0) / 2.0) / n as f64]).collect()
    }

    #[test]
    fn branches_agree_at_split() {
        for (m, big_m) in [(1.0, 2.0), (0.5, 7.0), (3.0, 3.0)] {
            let c = constants(m, big_m, None);
            let h = 2.0 / (m + big_m);
            let small = lmc_bound_first_order_branch(h, 5, 2.0, &c, 3, Branch::SmallStep).unwrap();
            let large = lmc_bound_first_order_branch(h, 5, 2.0, &c, 3, Branch::LargeStep).unwrap();
            assert!((small.contraction - large.contraction).abs() < 1e-14);
            assert!((small.contraction - (big_m - m) / (big_m + m)).abs() < 1e-14);
            assert!((small.discretization_term - 1.65 * big_m / m * (3.0 * h).sqrt()).abs() < 1e-12);
            assert!((small.total - large.total).abs() < 1e-12);
            assert_eq!(lmc_bound_first_order(h, 5, 2.0, &c, 3).unwrap().branch, Branch::SmallStep);
            let above = lmc_bound_first_order(h * (1.0 + 1e-12), 5, 2.0, &c, 3).unwrap();
            assert_eq!(above.branch, Branch::LargeStep);
            assert!((above.total - small.total).abs() < 1e-9);
        }
    }

    #[test]
    fn first_order_examples() {
        let c = constants(1.0, 1.0, None);
        let b = lmc_bound_first_order(0.5, 10_000, 3.0, &c, 1).unwrap();
        assert!((b.total - 1.65 * 0.5f64.sqrt()).abs() < 1e-12);
        assert!((b.total - 1.1667).abs() < 1e-4);
        let c = constants(1.0, 2.0, None);
        let b = lmc_bound_first_order(0.1, 3, 0.0, &c, 4).unwrap();
        assert!((b.total - 1.65 * 2.0 * 0.4f64.sqrt()).abs() < 1e-14);
        assert!((b.total - 2.0871).abs() < 1e-4);
    }

    #[test]
    fn first_order_rejects_large_steps() {
        let c = constants(1.0, 2.0, None);
        assert!(lmc_bound_first_order(1.0, 1, 0.0, &c, 1).is_err());
        assert!(lmc_bound_first_order(0.0, 1, 0.0, &c, 1).is_err());
        assert!(lmc_bound_first_order(0.1, 1, -1.0, &c, 1).is_err());
        assert!(lmc_bound_first_order(0.99, 1, 0.0, &c, 1).is_ok());
    }

    #[test]
    fn second_order_examples() {
        let b = lmc_bound_second_order(0.1, 7, 0.0, &constants(1.0, 1.0, Some(0.0)), 1).unwrap();
        assert!((b.total - 0.22).abs() < 1e-15);
        let b = lmc_bound_second_order(0.1, 7, 0.0, &constants(1.0, 1.0, Some(1.0)), 4).unwrap();
        assert!((b.total - 0.64).abs() < 1e-15);
        let half = lmc_bound_second_order(0.05, 7, 0.0, &constants(1.0, 1.0, Some(1.0)), 4).unwrap();
        assert!((half.total * 2.0 - b.total).abs() < 1e-15);
    }

    #[test]
    fn second_order_errors() {
        let c = constants(1.0, 1.0, Some(1.0));
        assert!(matches!(lmc_bound_second_order(1.0, 1, 0.0, &c, 1), Err(Error::InvalidArgument(_))));
        let no_l = constants(1.0, 1.0, None);
        assert!(matches!(lmc_bound_second_order(0.1, 1, 0.0, &no_l, 1), Err(Error::UnsupportedTarget(_))));
    }

    #[test]
    fn w0_examples() {
        assert_eq!(w0_upper_bound(0.0, 1.0, 1).unwrap(), 1.0);
        assert_eq!(w0_upper_bound(2.0, 1.0, 4).unwrap(), 4.0);
        assert_eq!(w0_upper_bound(0.0, 4.0, 4).unwrap(), 1.0);
        assert!(w0_upper_bound(-1.0, 1.0, 1).is_err());
    }

    #[test]
    fn lmc_plan_example() {
        let plan = plan_lmc(0.5, &constants(1.0, 2.0, None), 4, 0.0).unwrap();
        assert!((plan.h - 1.0 / 704.0).abs() < 1e-18);
        assert!((plan.log_q - 16f64.ln()).abs() < 1e-14);
        // ⌈704·log 16⌉ = ⌈1951.90⌉
        assert_eq!(plan.k, 1952);
        assert_eq!(plan.budget, 1952);
        assert!(plan.predicted_bound <= 0.5);
    }

    #[test]
    fn lmc_plan_saturates_at_split() {
        let plan = plan_lmc(100.0, &constants(2.0, 2.0, None), 1, 0.0).unwrap();
        assert_eq!(plan.h, 0.5);
        let b = lmc_bound_first_order(plan.h, 1, 1.0, &constants(2.0, 2.0, None), 1).unwrap();
        assert_eq!(b.contraction, 0.0);
    }

    #[test]
    fn lmc_plan_dimension_scaling() {
        let c = constants(1.0, 3.0, None);
        let a = plan_lmc(0.05, &c, 8, 0.0).unwrap();
        let b = plan_lmc(0.05, &c, 16, 0.0).unwrap();
        assert!((a.h / b.h - 2.0).abs() < 1e-12);
        // K = log(Q)/(mh); Q grows with p too
        let ratio = b.k as f64 / a.k as f64;
        let expected = 2.0 * b.log_q / a.log_q;
        assert!((ratio - expected).abs() < 1e-2, "{ratio} vs {expected}");
    }

    #[test]
    fn lmc_plan_loose_accuracy_gives_one_step() {
        let plan = plan_lmc(1e6, &constants(1.0, 1.0, None), 1, 0.0).unwrap();
        assert_eq!(plan.k, 1);
        assert!(!plan.notes.is_empty());
    }

    #[test]
    fn lmc_plan_raises_k_when_q_is_not_enough() {
        // small m makes √(p/m) larger than (2f₀ + mp)/m
        let c = constants(0.01, 0.02, None);
        let plan = plan_lmc(0.5, &c, 1, 0.0).unwrap();
        assert!(plan.predicted_bound <= 0.5);
        assert!(plan.notes.iter().any(|n| n.contains("raised")));
    }

    #[test]
    fn sgd_first_order_example() {
        let t = make_isotropic_gaussian_target(1, 100, 1.0, &spread_centers(100)).unwrap();
        let plan = plan_sgd_first_order(0.1, &t, 0.0).unwrap();
        assert!((plan.h - 2.5e-3).abs() < 1e-18);
        assert!((plan.b_real - 25.0 / 2.25).abs() < 1e-12);
        assert_eq!(plan.b, 11);
        assert!((plan.h_eff - 22.0 / 8900.0).abs() < 1e-18);
        assert!((plan.log_q - 100f64.ln()).abs() < 1e-14);
        assert!((plan.budget_bound - 400.0 * 100f64.ln() / 9.0).abs() < 1e-10);
        assert!((plan.budget_bound - 204.7).abs() < 0.05);
        // K = ⌈log 100 / (100·h_eff)⌉ = ⌈18.63⌉
        assert_eq!(plan.k, 19);
        assert_eq!(plan.budget, 209);
        assert!(plan.predicted_bound <= 0.1);
    }

    #[test]
    fn sgd_first_order_window_edges() {
        let t = make_isotropic_gaussian_target(1, 100, 1.0, &spread_centers(100)).unwrap();
        let low = plan_sgd_first_order(0.03, &t, 0.0).unwrap();
        assert!(low.b_real >= 1.0);
        assert!(plan_sgd_first_order(0.2, &t, 0.0).is_ok());
        match plan_sgd_first_order(0.029, &t, 0.0) {
            Err(Error::Infeasible(c)) => {
                let failed: Vec<_> = c.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                assert_eq!(failed, vec!["ε ≥ 3κ√p/n"]);
            }
            other => panic!("{other:?}"),
        }
        match plan_sgd_first_order(0.21, &t, 0.0) {
            Err(Error::Infeasible(c)) => {
                let failed: Vec<_> = c.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                assert_eq!(failed, vec!["ε ≤ 2κ√p/√(nM_g)"]);
            }
            other => panic!("{other:?}"),
        }
        let small = make_isotropic_gaussian_target(1, 8, 1.0, &spread_centers(8)).unwrap();
        assert!(matches!(plan_sgd_first_order(0.5, &small, 0.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn lower_edge_batch_is_at_least_one() {
        for n in [9usize, 10, 50, 1000] {
            for (p, kappa) in [(1usize, 1.0), (3, 2.0), (10, 5.0)] {
                let eps = 3.0 * kappa * (p as f64).sqrt() / n as f64;
                let h = eps * eps / (4.0 * kappa * kappa * p as f64);
                assert!(matching_batch(h, n) >= 1.0 - 1e-12, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn budget_tends_to_large_n_limit() {
        // The validity window closes as n grows at fixed ε, so the limit is a
        // statement about the formula alone.
        let (eps, p, kappa, log_q) = (0.1f64, 3.0, 2.0, 5.0);
        let limit = 4.0 * p * kappa * kappa / (eps * eps) * log_q;
        let mut last_gap = f64::INFINITY;
        for n in [1e2, 1e4, 1e6, 1e8] {
            let gap = (first_order_budget_bound(eps, p, kappa, 1.0, n, log_q) - limit).abs() / limit;
            assert!(gap < last_gap);
            last_gap = gap;
        }
        assert!(last_gap < 1e-4);
    }

    #[test]
    fn second_order_window_example() {
        let t = make_isotropic_gaussian_target(1, 100, 1.0, &spread_centers(100))
            .unwrap()
            .with_hessian_lipschitz(1.0)
            .unwrap();
        let plan = plan_sgd_second_order(0.4, &t, 0.0).unwrap();
        assert!((plan.h - 0.01).abs() < 1e-17);
        assert!((plan.h - 1.0 / 100.0).abs() < 1e-17);
        assert!(plan_sgd_second_order(8.0 / 990.0, &t, 0.0).is_ok());
        assert!(plan_sgd_second_order(0.41, &t, 0.0).is_err());
        assert!(plan_sgd_second_order(8.0 / 990.0 * 0.99, &t, 0.0).is_err());
        let p = plan_sgd_second_order(0.2, &t, 0.0).unwrap();
        assert!((p.h - 0.2 / 40.0).abs() < 1e-17);
    }

    #[test]
    fn second_order_needs_hessian_constant() {
        let t = make_isotropic_gaussian_target(1, 100, 1.0, &spread_centers(100)).unwrap();
        // declared L_g = 0 < 1
        assert!(matches!(plan_sgd_second_order(0.1, &t, 0.0), Err(Error::Infeasible(_))));
        let c = t.component_constants();
        let t = t.with_component_constants(Constants::new(c.strong_convexity, c.smoothness, None).unwrap());
        assert!(matches!(plan_sgd_second_order(0.1, &t, 0.0), Err(Error::UnsupportedTarget(_))));
        let best = best_plan(0.1, &t, 0.0).unwrap();
        assert_eq!(best.theorem, Theorem::SgdFirstOrder);
    }

    #[test]
    fn best_plan_reports_all_failures() {
        let t = make_isotropic_gaussian_target(1, 100, 1.0, &spread_centers(100))
            .unwrap()
            .with_hessian_lipschitz(1.0)
            .unwrap();
        match best_plan(5.0, &t, 0.0) {
            Err(Error::Infeasible(failed)) => {
                assert!(failed.iter().any(|c| c.theorem == Theorem::SgdFirstOrder));
                assert!(failed.iter().any(|c| c.theorem == Theorem::SgdSecondOrder));
                assert!(failed.iter().all(|c| !c.pass));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn theorem_names_round_trip() {
        for t in [
            Theorem::LmcFirstOrder,
            Theorem::LmcSecondOrder,
            Theorem::SgdFirstOrder,
            Theorem::SgdSecondOrder,
        ] {
            assert_eq!(t.as_str().parse::<Theorem>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
        }
        assert_eq!("first-order".parse::<Theorem>().unwrap(), Theorem::SgdFirstOrder);
        assert!("third".parse::<Theorem>().is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_batch(11.11, 100).0, 11);
        assert_eq!(round_batch(0.4, 100).0, 1);
        let (b, h) = round_batch(33.3, 100);
        assert_eq!(b, 33);
        assert!((h - 66.0 / 6700.0).abs() < 1e-18);
    }
}
