//! Target distributions `π ∝ exp(−f)` described by their potentials.
//!
//! A [`Potential`] carries declared constants: strong convexity `m`,
//! gradient-Lipschitz constant `M` and, optionally, a Hessian-Lipschitz
//! constant `L`. The constants are declared rather than estimated;
//! [`validate_constants`] is a randomized audit of the declaration.
//!
//! [`DecomposableTarget`] is the sum-decomposable case `f = Σ_i g_i`, where
//! every component satisfies the inequalities with per-component constants
//! `m_g`, `M_g`, `L_g`, so that the sum has `m = n·m_g`, `M = n·M_g` and
//! `L = n·L_g`.
//!
//! Potentials are nonnegative: quadratic targets report `f(θ) − min f`,
//! which leaves `π` unchanged and makes `f(θ₀)` independent of any
//! constant added to the components.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::GaussianLaw;

/// Declared regularity constants of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    /// `m`: strong-convexity constant.
    pub strong_convexity: f64,
    /// `M`: Lipschitz constant of the gradient.
    pub smoothness: f64,
    /// `L`: Lipschitz constant of the Hessian in operator norm, if declared.
    pub hessian_lipschitz: Option<f64>,
}

impl Constants {
    pub fn new(strong_convexity: f64, smoothness: f64, hessian_lipschitz: Option<f64>) -> Result<Self> {
        if !(strong_convexity > 0.0 && strong_convexity.is_finite()) {
            return Err(Error::invalid(format!(
                "strong convexity constant must be positive, got {strong_convexity}"
            )));
        }
        if !(smoothness >= strong_convexity && smoothness.is_finite()) {
            return Err(Error::invalid(format!(
                "smoothness constant {smoothness} must be >= strong convexity {strong_convexity}"
            )));
        }
        if let Some(l) = hessian_lipschitz {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!(
                    "Hessian-Lipschitz constant must be >= 0, got {l}"
                )));
            }
        }
        Ok(Self {
            strong_convexity,
            smoothness,
            hessian_lipschitz,
        })
    }

    /// Condition number `M/m`.
    pub fn kappa(&self) -> f64 {
        self.smoothness / self.strong_convexity
    }

    /// Constants of a sum of `n` components sharing these constants.
    pub fn summed(&self, n: usize) -> Self {
        let n = n as f64;
        Self {
            strong_convexity: n * self.strong_convexity,
            smoothness: n * self.smoothness,
            hessian_lipschitz: self.hessian_lipschitz.map(|l| n * l),
        }
    }
}

/// A differentiable, strongly convex potential `f: ℝ^p → [0, ∞)`.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64]) -> f64;

    /// Writes `∇f(θ)` into `out` (length `dim`).
    fn gradient_into(&self, theta: &[f64], out: &mut [f64]);

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(theta, &mut out);
        out
    }

    fn constants(&self) -> Constants;
}

/// `q(θ) = ½ θᵀHθ − lᵀθ + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

/// One summand `g_i` of a decomposable potential.
pub trait Component: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64]) -> f64;

    /// `out += scale · ∇g(θ)`.
    fn add_gradient(&self, theta: &[f64], scale: f64, out: &mut [f64]);

    /// The exact quadratic form, for quadratic components.
    fn quadratic_form(&self) -> Option<QuadraticForm> {
        None
    }
}

/// `g(θ) = (w/2)·‖θ − z‖²`.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    pub center: Vec<f64>,
    pub weight: f64,
}

impl Component for SquaredDistance {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let sq: f64 = theta
            .iter()
            .zip(&self.center)
            .map(|(t, z)| (t - z) * (t - z))
            .sum();
        0.5 * self.weight * sq
    }

    fn add_gradient(&self, theta: &[f64], scale: f64, out: &mut [f64]) {
        let w = scale * self.weight;
        for ((o, t), z) in out.iter_mut().zip(theta).zip(&self.center) {
            *o += w * (t - z);
        }
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        let p = self.dim();
        let z = DVector::from_column_slice(&self.center);
        Some(QuadraticForm {
            hessian: DMatrix::identity(p, p) * self.weight,
            linear: &z * self.weight,
            constant: 0.5 * self.weight * z.norm_squared(),
        })
    }
}

/// `g(θ) = ½(y − xᵀθ)² + (penalty/2)‖θ‖²`.
#[derive(Debug, Clone)]
pub struct RidgeResidual {
    pub row: Vec<f64>,
    pub response: f64,
    pub penalty: f64,
}

impl Component for RidgeResidual {
    fn dim(&self) -> usize {
        self.row.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let r = self.response - dot(&self.row, theta);
        0.5 * r * r + 0.5 * self.penalty * dot(theta, theta)
    }

    fn add_gradient(&self, theta: &[f64], scale: f64, out: &mut [f64]) {
        let r = dot(&self.row, theta) - self.response;
        for ((o, x), t) in out.iter_mut().zip(&self.row).zip(theta) {
            *o += scale * (r * x + self.penalty * t);
        }
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        let p = self.dim();
        let x = DVector::from_column_slice(&self.row);
        Some(QuadraticForm {
            hessian: &x * x.transpose() + DMatrix::identity(p, p) * self.penalty,
            linear: &x * self.response,
            constant: 0.5 * self.response * self.response,
        })
    }
}

/// `g(θ) = log(1 + exp(−y·xᵀθ)) + (penalty/2)‖θ‖²` with label `y ∈ {−1, +1}`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    pub row: Vec<f64>,
    pub label: f64,
    pub penalty: f64,
}

impl Component for LogisticLoss {
    fn dim(&self) -> usize {
        self.row.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        softplus(-self.label * dot(&self.row, theta)) + 0.5 * self.penalty * dot(theta, theta)
    }

    fn add_gradient(&self, theta: &[f64], scale: f64, out: &mut [f64]) {
        let t = self.label * dot(&self.row, theta);
        // d/dt softplus(−t) = −σ(−t)
        let coeff = -self.label * sigmoid(-t);
        for ((o, x), th) in out.iter_mut().zip(&self.row).zip(theta) {
            *o += scale * (coeff * x + self.penalty * th);
        }
    }
}

/// A component plus a constant; changes `f` by a constant and nothing else.
#[derive(Debug, Clone)]
pub struct Shifted<C> {
    pub inner: C,
    pub offset: f64,
}

impl<C: Component> Component for Shifted<C> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        self.inner.value(theta) + self.offset
    }

    fn add_gradient(&self, theta: &[f64], scale: f64, out: &mut [f64]) {
        self.inner.add_gradient(theta, scale, out)
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        self.inner.quadratic_form().map(|mut q| {
            q.constant += self.offset;
            q
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Closed-form description of a quadratic sum: `f(θ) − min f = ½(θ−μ)ᵀH(θ−μ)`.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    pub hessian: DMatrix<f64>,
    pub mode: DVector<f64>,
    /// Minimum of the raw (unshifted) component sum.
    pub minimum: f64,
    covariance: DMatrix<f64>,
}

impl QuadraticModel {
    fn from_form(form: QuadraticForm) -> Result<Self> {
        let chol = form.hessian.clone().cholesky().ok_or_else(|| {
            Error::invalid("aggregate Hessian is not positive definite")
        })?;
        let mode = chol.solve(&form.linear);
        let minimum = form.constant - 0.5 * form.linear.dot(&mode);
        let covariance = chol.inverse();
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        Ok(Self {
            hessian: form.hessian,
            mode,
            minimum,
            covariance,
        })
    }

    /// `½(θ−μ)ᵀH(θ−μ)`, clamped at zero.
    pub fn excess(&self, theta: &[f64]) -> f64 {
        let d = DVector::from_column_slice(theta) - &self.mode;
        (0.5 * d.dot(&(&self.hessian * &d))).max(0.0)
    }

    /// `π = N(μ, H⁻¹)`.
    pub fn stationary_law(&self) -> GaussianLaw {
        GaussianLaw::new(self.mode.clone(), self.covariance.clone())
            .expect("inverse of a positive definite matrix is a covariance")
    }
}

/// `f = Σ_{i=1}^n g_i` with per-component constants `m_g ≤ M_g` (and optional `L_g`).
pub struct DecomposableTarget {
    dim: usize,
    components: Vec<Box<dyn Component>>,
    component_constants: Constants,
    quadratic: Option<QuadraticModel>,
}

impl fmt::Debug for DecomposableTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecomposableTarget")
            .field("dim", &self.dim)
            .field("n", &self.components.len())
            .field("component_constants", &self.component_constants)
            .field("quadratic", &self.quadratic.is_some())
            .finish()
    }
}

impl DecomposableTarget {
    /// Assembles a target from components with declared per-component constants.
    ///
    /// When every component is quadratic the aggregate form is solved once so
    /// that values are reported relative to the minimum and the stationary
    /// law is available in closed form.
    pub fn from_components(components: Vec<Box<dyn Component>>, component_constants: Constants) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::invalid("a decomposable target needs n >= 1 components"))?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::invalid("dimension p must be >= 1"));
        }
        if let Some(i) = components.iter().position(|c| c.dim() != dim) {
            return Err(Error::invalid(format!(
                "component {i} has dimension {}, expected {dim}",
                components[i].dim()
            )));
        }
        let forms: Option<Vec<QuadraticForm>> = components.iter().map(|c| c.quadratic_form()).collect();
        let quadratic = match forms {
            Some(forms) => {
                let mut total = QuadraticForm {
                    hessian: DMatrix::zeros(dim, dim),
                    linear: DVector::zeros(dim),
                    constant: 0.0,
                };
                for q in forms {
                    total.hessian += q.hessian;
                    total.linear += q.linear;
                    total.constant += q.constant;
                }
                Some(QuadraticModel::from_form(total)?)
            }
            None => None,
        };
        Ok(Self {
            dim,
            components,
            component_constants,
            quadratic,
        })
    }

    /// Number of components `n`.
    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn component_constants(&self) -> Constants {
        self.component_constants
    }

    /// `κ = M_g / m_g`.
    pub fn kappa(&self) -> f64 {
        self.component_constants.kappa()
    }

    /// Replaces the declared per-component constants.
    pub fn with_component_constants(mut self, constants: Constants) -> Self {
        self.component_constants = constants;
        self
    }

    /// Declares a per-component Hessian-Lipschitz constant `L_g` (any upper
    /// bound of the true constant is admissible).
    pub fn with_hessian_lipschitz(mut self, l_g: f64) -> Result<Self> {
        let c = self.component_constants;
        self.component_constants = Constants::new(c.strong_convexity, c.smoothness, Some(l_g))?;
        Ok(self)
    }

    pub fn component(&self, i: usize) -> &dyn Component {
        self.components[i].as_ref()
    }

    /// `out += scale · ∇g_i(θ)`.
    pub fn add_component_gradient(&self, i: usize, theta: &[f64], scale: f64, out: &mut [f64]) {
        self.components[i].add_gradient(theta, scale, out)
    }

    pub fn quadratic_model(&self) -> Option<&QuadraticModel> {
        self.quadratic.as_ref()
    }

    /// The exact target law, available for quadratic targets.
    pub fn stationary_law(&self) -> Option<GaussianLaw> {
        self.quadratic.as_ref().map(QuadraticModel::stationary_law)
    }

    /// `Σ g_i(θ)` without any normalization.
    pub fn raw_value(&self, theta: &[f64]) -> f64 {
        self.components.iter().map(|c| c.value(theta)).sum()
    }
}

impl Potential for DecomposableTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, theta: &[f64]) -> f64 {
        match &self.quadratic {
            Some(q) => q.excess(theta),
            None => self.raw_value(theta),
        }
    }

    fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for c in &self.components {
            c.add_gradient(theta, 1.0, out);
        }
    }

    fn constants(&self) -> Constants {
        self.component_constants.summed(self.n())
    }
}

/// Isotropic Gaussian sum: `g_i(θ) = (m_g/2)‖θ − z_i‖²`, so that
/// `π = N(z̄, (n·m_g)⁻¹ I)`, `κ = 1` and `L_g = 0`.
pub fn make_isotropic_gaussian_target(
    p: usize,
    n: usize,
    m_g: f64,
    centers: &[Vec<f64>],
) -> Result<DecomposableTarget> {
    if p == 0 || n == 0 {
        return Err(Error::invalid(format!("p and n must be >= 1 (p={p}, n={n})")));
    }
    if !(m_g > 0.0 && m_g.is_finite()) {
        return Err(Error::invalid(format!("m_g must be positive, got {m_g}")));
    }
    if centers.len() != n {
        return Err(Error::invalid(format!("expected {n} centers, got {}", centers.len())));
    }
    if let Some(bad) = centers.iter().find(|c| c.len() != p || c.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid(format!("center {bad:?} is not a finite {p}-vector")));
    }
    let components: Vec<Box<dyn Component>> = centers
        .iter()
        .map(|z| {
            Box::new(SquaredDistance {
                center: z.clone(),
                weight: m_g,
            }) as Box<dyn Component>
        })
        .collect();
    DecomposableTarget::from_components(components, Constants::new(m_g, m_g, Some(0.0))?)
}

fn check_design(design: &[Vec<f64>], rhs: &[f64], lambda: f64) -> Result<(usize, usize)> {
    let n = design.len();
    if n == 0 {
        return Err(Error::invalid("design matrix needs n >= 1 rows"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("ridge parameter must be positive, got {lambda}")));
    }
    let p = design[0].len();
    if p == 0 {
        return Err(Error::invalid("design matrix needs p >= 1 columns"));
    }
    if design.iter().any(|r| r.len() != p) {
        return Err(Error::invalid("design rows have unequal lengths"));
    }
    if rhs.len() != n {
        return Err(Error::invalid(format!("expected {n} responses, got {}", rhs.len())));
    }
    if design.iter().flatten().chain(rhs).any(|v| !v.is_finite()) {
        return Err(Error::invalid("design or responses contain non-finite values"));
    }
    Ok((n, p))
}

fn max_row_norm_sq(design: &[Vec<f64>]) -> f64 {
    design.iter().map(|r| dot(r, r)).fold(0.0, f64::max)
}

/// Ridge regression: `g_i(θ) = ½(y_i − x_iᵀθ)² + (λ/2n)‖θ‖²`.
///
/// Per-component constants are `m_g = λ/n`, `M_g = λ/n + max_i ‖x_i‖²` and
/// `L_g = 0`.
pub fn make_ridge_target(design: &[Vec<f64>], responses: &[f64], lambda: f64) -> Result<DecomposableTarget> {
    let (n, _) = check_design(design, responses, lambda)?;
    let penalty = lambda / n as f64;
    let components: Vec<Box<dyn Component>> = design
        .iter()
        .zip(responses)
        .map(|(x, &y)| {
            Box::new(RidgeResidual {
                row: x.clone(),
                response: y,
                penalty,
            }) as Box<dyn Component>
        })
        .collect();
    let constants = Constants::new(penalty, penalty + max_row_norm_sq(design), Some(0.0))?;
    DecomposableTarget::from_components(components, constants)
}

/// L2-penalized logistic regression with labels in `{−1, +1}`.
///
/// Per-component constants are `m_g = λ/n`, `M_g = λ/n + max_i ‖x_i‖²/4`
/// and `L_g = max_i ‖x_i‖³ / (6√3)`.
pub fn make_logistic_target(design: &[Vec<f64>], labels: &[f64], lambda: f64) -> Result<DecomposableTarget> {
    let (n, _) = check_design(design, labels, lambda)?;
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::invalid("logistic labels must be -1 or +1"));
    }
    let penalty = lambda / n as f64;
    let components: Vec<Box<dyn Component>> = design
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            Box::new(LogisticLoss {
                row: x.clone(),
                label: y,
                penalty,
            }) as Box<dyn Component>
        })
        .collect();
    let r2 = max_row_norm_sq(design);
    // sup |σ(1−σ)(1−2σ)| = 1/(6√3)
    let l_g = r2.powf(1.5) / (6.0 * 3f64.sqrt());
    let constants = Constants::new(penalty, penalty + 0.25 * r2, Some(l_g))?;
    DecomposableTarget::from_components(components, constants)
}

/// Settings for [`validate_constants_with`].
#[derive(Debug, Clone)]
pub struct ValidationOptions {
    pub trials: usize,
    /// Largest accepted violation of either inequality, in units of the constant.
    pub tolerance: f64,
    /// Largest accepted relative finite-difference gradient error.
    pub gradient_tolerance: f64,
    /// Half-width of the sampling box around the mode (or origin).
    pub radius: f64,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            trials: 1000,
            tolerance: 1e-8,
            gradient_tolerance: 1e-5,
            radius: 5.0,
            seed: 0,
        }
    }
}

/// Outcome of a randomized audit of declared constants.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub trials: usize,
    /// Worst `(m_declared − m_observed)⁺` over sampled pairs, aggregate and per component.
    pub max_convexity_violation: f64,
    /// Worst `(M_observed − M_declared)⁺` over sampled pairs, aggregate and per component.
    pub max_smoothness_violation: f64,
    /// Worst `‖∇f − ∇_fd f‖ / (1 + ‖∇f‖)` with central differences.
    pub max_gradient_error: f64,
    /// Worst `‖∇f − Σ∇g_i‖ / (1 + ‖∇f‖)`.
    pub max_decomposition_error: f64,
    /// Smallest observed `f(θ)`.
    pub min_value: f64,
    pub passed: bool,
}

/// Audits the declared constants of `target` with `trials` random point pairs.
pub fn validate_constants(target: &DecomposableTarget, trials: usize, tolerance: f64) -> Result<ConstantsReport> {
    validate_constants_with(
        target,
        &ValidationOptions {
            trials,
            tolerance,
            ..ValidationOptions::default()
        },
    )
}

pub fn validate_constants_with(target: &DecomposableTarget, options: &ValidationOptions) -> Result<ConstantsReport> {
    if options.trials == 0 {
        return Err(Error::invalid("validation needs trials >= 1"));
    }
    let p = target.dim();
    let center: Vec<f64> = match target.quadratic_model() {
        Some(q) => q.mode.iter().copied().collect(),
        None => vec![0.0; p],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        center
            .iter()
            .map(|c| c + rng.random_range(-options.radius..=options.radius))
            .collect()
    };

    let aggregate = target.constants();
    let per_component = target.component_constants();
    let mut convexity: f64 = 0.0;
    let mut smoothness: f64 = 0.0;
    let mut gradient_error: f64 = 0.0;
    let mut decomposition_error: f64 = 0.0;
    let mut min_value = f64::INFINITY;

    let mut g1 = vec![0.0; p];
    let mut g2 = vec![0.0; p];
    for _ in 0..options.trials {
        let t1 = draw(&mut rng);
        let t2 = draw(&mut rng);
        let delta: Vec<f64> = t2.iter().zip(&t1).map(|(a, b)| a - b).collect();
        let dist_sq = dot(&delta, &delta);
        if dist_sq == 0.0 {
            continue;
        }

        // aggregate f
        let f1 = target.value(&t1);
        let f2 = target.value(&t2);
        min_value = min_value.min(f1).min(f2);
        target.gradient_into(&t1, &mut g1);
        target.gradient_into(&t2, &mut g2);
        let (cv, sv) = pair_violations(f1, f2, &g1, &g2, &delta, dist_sq, &aggregate);
        convexity = convexity.max(cv);
        smoothness = smoothness.max(sv);

        gradient_error = gradient_error.max(finite_difference_error(target, &t1, &g1));

        let mut summed = vec![0.0; p];
        for i in 0..target.n() {
            target.add_component_gradient(i, &t1, 1.0, &mut summed);
        }
        let diff: f64 = summed.iter().zip(&g1).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        decomposition_error = decomposition_error.max(diff / (1.0 + dot(&g1, &g1).sqrt()));

        // one random component
        let i = rng.random_range(0..target.n());
        let c = target.component(i);
        g1.iter_mut().for_each(|v| *v = 0.0);
        g2.iter_mut().for_each(|v| *v = 0.0);
        c.add_gradient(&t1, 1.0, &mut g1);
        c.add_gradient(&t2, 1.0, &mut g2);
        let (cv, sv) = pair_violations(c.value(&t1), c.value(&t2), &g1, &g2, &delta, dist_sq, &per_component);
        convexity = convexity.max(cv);
        smoothness = smoothness.max(sv);
    }

    let passed = convexity <= options.tolerance
        && smoothness <= options.tolerance
        && gradient_error <= options.gradient_tolerance
        && decomposition_error <= options.gradient_tolerance
        && min_value >= -options.tolerance;
    Ok(ConstantsReport {
        trials: options.trials,
        max_convexity_violation: convexity,
        max_smoothness_violation: smoothness,
        max_gradient_error: gradient_error,
        max_decomposition_error: decomposition_error,
        min_value,
        passed,
    })
}

fn pair_violations(
    f1: f64,
    f2: f64,
    g1: &[f64],
    g2: &[f64],
    delta: &[f64],
    dist_sq: f64,
    constants: &Constants,
) -> (f64, f64) {
    // f(θ₂) − f(θ₁) − ∇f(θ₁)ᵀΔ ≥ (m/2)‖Δ‖²
    let observed_m = 2.0 * (f2 - f1 - dot(g1, delta)) / dist_sq;
    let convexity = (constants.strong_convexity - observed_m).max(0.0);
    let grad_diff: f64 = g1.iter().zip(g2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let observed_big_m = grad_diff / dist_sq.sqrt();
    let smoothness = (observed_big_m - constants.smoothness).max(0.0);
    (convexity, smoothness)
}

fn finite_difference_error(target: &dyn Potential, theta: &[f64], grad: &[f64]) -> f64 {
    let norm = dot(theta, theta).sqrt();
    let step = 1e-5 * (1.0 + norm);
    let mut probe = theta.to_vec();
    let mut err_sq = 0.0;
    for j in 0..theta.len() {
        probe[j] = theta[j] + step;
        let up = target.value(&probe);
        probe[j] = theta[j] - step;
        let down = target.value(&probe);
        probe[j] = theta[j];
        let fd = (up - down) / (2.0 * step);
        err_sq += (fd - grad[j]) * (fd - grad[j]);
    }
    err_sq.sqrt() / (1.0 + dot(grad, grad).sqrt())
}
