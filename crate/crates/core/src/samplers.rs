//! Iterative samplers.
//!
//! Three update rules share one chain representation:
//!
//! * LMC: `θ ← θ − h∇f(θ) + √(2h)·ξ`, `ξ ~ N(0, I_p)`.
//! * Idealized SGD: `θ ← θ − h∇f(θ) + h·ζ`, `ζ ~ N(0, n(n−b)/b · I_p)`.
//! * Mini-batch SGD: `θ ← θ − (hn/b)·Σ_{i∈B} ∇g_i(θ)` with `B` a uniform
//!   size-`b` subset of `{0, …, n−1}`.
//!
//! Random stream discipline: every chain owns a ChaCha8 stream. An LMC or
//! idealized-SGD step draws exactly `p` standard normals (ziggurat sampler
//! from `rand_distr`), one per coordinate in coordinate order. A mini-batch
//! step draws exactly `b` indices for a partial Fisher–Yates shuffle.
//! Nothing else touches the stream, so recording or thinning a trajectory
//! never changes it.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::isotropic_noise_variance;
use crate::potentials::{DecomposableTarget, Potential};

/// Which update rule a chain follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Lmc,
    SgdIdealized,
    SgdMinibatch,
}

/// Update rule plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Step size `h`.
    pub step_size: f64,
    /// Batch size `b`. Real-valued batches are accepted by the idealized
    /// sampler, which only uses `b` through the noise variance.
    pub batch_size: Option<f64>,
}

impl SamplerConfig {
    pub fn lmc(step_size: f64) -> Self {
        Self {
            kind: SamplerKind::Lmc,
            step_size,
            batch_size: None,
        }
    }

    pub fn sgd_idealized(step_size: f64, batch_size: f64) -> Self {
        Self {
            kind: SamplerKind::SgdIdealized,
            step_size,
            batch_size: Some(batch_size),
        }
    }

    pub fn sgd_minibatch(step_size: f64, batch_size: usize) -> Self {
        Self {
            kind: SamplerKind::SgdMinibatch,
            step_size,
            batch_size: Some(batch_size as f64),
        }
    }

    /// Checks `h > 0`, `h < 2/M` for LMC and `1 ≤ b ≤ n` for the SGD kinds.
    pub fn validate(&self, target: &DecomposableTarget) -> Result<()> {
        check_step_size(self.step_size)?;
        match self.kind {
            SamplerKind::Lmc => {
                let big_m = target.constants().smoothness;
                if self.step_size >= 2.0 / big_m {
                    return Err(Error::invalid(format!(
                        "LMC step size {} must be < 2/M = {}",
                        self.step_size,
                        2.0 / big_m
                    )));
                }
            }
            SamplerKind::SgdIdealized => {
                check_batch(self.batch(target.n())?, target.n())?;
            }
            SamplerKind::SgdMinibatch => {
                let b = self.batch(target.n())?;
                check_batch(b, target.n())?;
                if b.fract() != 0.0 {
                    return Err(Error::invalid(format!("mini-batch size must be an integer, got {b}")));
                }
            }
        }
        Ok(())
    }

    fn batch(&self, n: usize) -> Result<f64> {
        self.batch_size
            .ok_or_else(|| Error::invalid(format!("{:?} needs a batch size in [1, {n}]", self.kind)))
    }
}

fn check_step_size(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("step size must be positive, got {h}")))
    }
}

fn check_batch(b: f64, n: usize) -> Result<()> {
    if b >= 1.0 && b <= n as f64 {
        Ok(())
    } else {
        Err(Error::invalid(format!("batch size {b} outside [1, {n}]")))
    }
}

/// Current iterate, step counter and the chain's private random stream.
#[derive(Debug, Clone)]
pub struct ChainState {
    theta: Vec<f64>,
    step: u64,
    rng: ChaCha8Rng,
    grad: Vec<f64>,
    permutation: Vec<usize>,
}

impl ChainState {
    /// A chain on stream 0 of `seed`.
    pub fn new(theta0: Vec<f64>, seed: u64) -> Result<Self> {
        Self::for_chain(theta0, seed, 0)
    }

    /// Chain `chain_id` of a run with master seed `seed`: the ChaCha8 key
    /// comes from `seed` and the chain index selects the stream.
    pub fn for_chain(theta0: Vec<f64>, seed: u64, chain_id: u64) -> Result<Self> {
        if theta0.is_empty() {
            return Err(Error::invalid("initial point must have dimension >= 1"));
        }
        if theta0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("initial point {theta0:?} is not finite")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain_id);
        let p = theta0.len();
        Ok(Self {
            theta: theta0,
            step: 0,
            rng,
            grad: vec![0.0; p],
            permutation: Vec::new(),
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn into_theta(self) -> Vec<f64> {
        self.theta
    }

    fn finish_step(&mut self) -> Result<()> {
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure {
                step: self.step,
                theta: self.theta.clone(),
            });
        }
        self.step += 1;
        Ok(())
    }

    fn check_gradient(&self) -> Result<()> {
        if self.grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure {
                step: self.step,
                theta: self.theta.clone(),
            });
        }
        Ok(())
    }
}

/// Deterministic part of the Langevin update with externally supplied
/// standard-normal `noise`: `θ ← θ − h·grad + √(2h)·noise`.
pub fn lmc_update(theta: &mut [f64], grad: &[f64], h: f64, noise: &[f64]) {
    let scale = (2.0 * h).sqrt();
    for ((t, g), xi) in theta.iter_mut().zip(grad).zip(noise) {
        *t = *t - h * *g + scale * *xi;
    }
}

/// One LMC step.
pub fn lmc_step<P: Potential + ?Sized>(state: &mut ChainState, target: &P, h: f64) -> Result<()> {
    check_step_size(h)?;
    let scale = (2.0 * h).sqrt();
    gaussian_step(state, target, h, scale)
}

/// Per-coordinate standard deviation `h·√(n(n−b)/b)` of the idealized noise term `h·ζ`.
pub fn idealized_noise_std(h: f64, n: usize, b: f64) -> Result<f64> {
    Ok(h * isotropic_noise_variance(n, b)?.sqrt())
}

/// One idealized-SGD step: full gradient plus isotropic Gaussian noise of
/// variance `h²·n(n−b)/b` per coordinate. `b = n` is plain gradient descent.
pub fn sgd_idealized_step(state: &mut ChainState, target: &DecomposableTarget, h: f64, b: f64) -> Result<()> {
    check_step_size(h)?;
    let scale = idealized_noise_std(h, target.n(), b)?;
    gaussian_step(state, target, h, scale)
}

fn gaussian_step<P: Potential + ?Sized>(state: &mut ChainState, target: &P, h: f64, noise_scale: f64) -> Result<()> {
    target.gradient_into(&state.theta, &mut state.grad);
    state.check_gradient()?;
    let ChainState { theta, grad, rng, .. } = state;
    for (t, g) in theta.iter_mut().zip(grad.iter()) {
        let xi: f64 = rng.sample(StandardNormal);
        *t = *t - h * *g + noise_scale * xi;
    }
    state.finish_step()
}

/// `out = (n/b)·Σ_{i∈subset} ∇g_i(θ)`, the unbiased subset estimate of `∇f(θ)`.
pub fn minibatch_gradient(target: &DecomposableTarget, theta: &[f64], subset: &[usize], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let scale = target.n() as f64 / subset.len() as f64;
    for &i in subset {
        target.add_component_gradient(i, theta, scale, out);
    }
}

/// One true mini-batch SGD step with a uniformly drawn subset of size `b`.
///
/// The subset is the prefix of a persistent index permutation after a
/// partial Fisher–Yates pass; the pass yields a uniform size-`b` subset
/// whatever the starting arrangement, so subsets are independent across steps.
pub fn sgd_minibatch_step(state: &mut ChainState, target: &DecomposableTarget, h: f64, b: usize) -> Result<()> {
    check_step_size(h)?;
    let n = target.n();
    check_batch(b as f64, n)?;
    if state.permutation.len() != n {
        state.permutation = (0..n).collect();
    }
    let ChainState {
        theta,
        grad,
        rng,
        permutation,
        ..
    } = state;
    for i in 0..b {
        let j = rng.random_range(i..n);
        permutation.swap(i, j);
    }
    minibatch_gradient(target, theta, &permutation[..b], grad);
    state.check_gradient()?;
    for (t, g) in state.theta.iter_mut().zip(&state.grad) {
        *t -= h * g;
    }
    state.finish_step()
}

/// Empirical covariance of the component gradients at `θ`:
/// `Σ = (1/n)Σ_i ∇g_i∇g_iᵀ − ḡḡᵀ` with `ḡ = (1/n)Σ_i ∇g_i`.
pub fn noise_covariance(target: &DecomposableTarget, theta: &[f64]) -> DMatrix<f64> {
    let p = target.dim();
    let n = target.n();
    let mut grads = DMatrix::zeros(p, n);
    let mut g = vec![0.0; p];
    for i in 0..n {
        g.iter_mut().for_each(|v| *v = 0.0);
        target.add_component_gradient(i, theta, 1.0, &mut g);
        grads.column_mut(i).copy_from_slice(&g);
    }
    let mean = grads.column_mean();
    let centered = DMatrix::from_fn(p, n, |r, c| grads[(r, c)] - mean[r]);
    let cov = &centered * centered.transpose() / n as f64;
    (&cov + cov.transpose()) * 0.5
}

/// Advances `state` by one step of the configured rule.
pub fn step(state: &mut ChainState, config: &SamplerConfig, target: &DecomposableTarget) -> Result<()> {
    match config.kind {
        SamplerKind::Lmc => lmc_step(state, target, config.step_size),
        SamplerKind::SgdIdealized => {
            let b = config.batch(target.n())?;
            sgd_idealized_step(state, target, config.step_size, b)
        }
        SamplerKind::SgdMinibatch => {
            let b = config.batch(target.n())?;
            sgd_minibatch_step(state, target, config.step_size, b as usize)
        }
    }
}

/// Which iterates to keep while running a chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum Recording {
    #[default]
    None,
    /// Every `k` with `k % thin == 0`, including `k = 0`.
    Every(u64),
    /// The listed step indices.
    At(Vec<u64>),
}

impl Recording {
    fn wants(&self, k: u64) -> bool {
        match self {
            Recording::None => false,
            Recording::Every(thin) => *thin > 0 && k.is_multiple_of(*thin),
            Recording::At(ks) => ks.contains(&k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub step: u64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    pub final_state: ChainState,
    pub trajectory: Vec<TracePoint>,
}

/// Runs `steps` updates from an existing state.
pub fn run_from(
    mut state: ChainState,
    config: &SamplerConfig,
    target: &DecomposableTarget,
    steps: u64,
    recording: &Recording,
) -> Result<ChainRun> {
    config.validate(target)?;
    if state.theta.len() != target.dim() {
        return Err(Error::invalid(format!(
            "initial point has dimension {}, target has {}",
            state.theta.len(),
            target.dim()
        )));
    }
    let mut trajectory = Vec::new();
    let start = state.step;
    if recording.wants(start) {
        trajectory.push(TracePoint {
            step: start,
            theta: state.theta.clone(),
        });
    }
    for _ in 0..steps {
        step(&mut state, config, target)?;
        if recording.wants(state.step) {
            trajectory.push(TracePoint {
                step: state.step,
                theta: state.theta.clone(),
            });
        }
    }
    Ok(ChainRun {
        final_state: state,
        trajectory,
    })
}

/// Runs one chain of `steps` updates from `theta0` on stream 0 of `seed`.
pub fn run_chain(
    config: &SamplerConfig,
    target: &DecomposableTarget,
    theta0: &[f64],
    steps: u64,
    seed: u64,
    recording: &Recording,
) -> Result<ChainRun> {
    run_from(ChainState::new(theta0.to_vec(), seed)?, config, target, steps, recording)
}

/// Runs `chains` independent chains in parallel; chain `i` uses stream `i`
/// of `seed`. Results are in chain order.
pub fn run_chains(
    config: &SamplerConfig,
    target: &DecomposableTarget,
    theta0: &[f64],
    steps: u64,
    seed: u64,
    chains: usize,
    recording: &Recording,
) -> Vec<Result<ChainRun>> {
    (0..chains as u64)
        .into_par_iter()
        .map(|id| {
            let state = ChainState::for_chain(theta0.to_vec(), seed, id)?;
            run_from(state, config, target, steps, recording)
        })
        .collect()
}
