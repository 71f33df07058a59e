//! Metropolis-within-Gibbs posterior sampler for the three dynamic GP
//! network specifications.
//!
//! One iteration cycles the blocks in a fixed order: the node effects
//! `alpha` (scalar random-walk MH), the dynamic block (`delta` for M2 or
//! `f`/`sigma_eps2` for M1, plus the latent coordinates for M3), and the
//! dispersion `zeta`. The coordinate update uses a Gaussian proposal whose
//! mean is shifted by the gradient of the edge log-likelihood (a
//! first-order expansion of the full conditional); because that center
//! depends on the current point, the acceptance ratio carries the full
//! Hastings correction.
//!
//! Step sizes adapt toward standard acceptance targets during burn-in only
//! and stay frozen afterwards, preserving the correct stationary law.
//! Chains are bit-reproducible given the seed.

pub mod procrustes;

use crate::error::{Error, Result};
use crate::gp::log_pmf_raw;
use crate::net::{
    m2_log_regressors, pair_log_mu, sq_dist, theta_of_zeta, Dynamics, ModelKind, ModelSpec,
    ParamState, TemporalNetwork, ZETA_POISSON,
};
use procrustes::procrustes_align;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Random-walk step sizes per block. The latent-coordinate block has no
/// tunable step; its proposal scale comes from the model's `sigma_x2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizes {
    pub alpha: f64,
    pub delta: f64,
    pub f: f64,
    pub zeta: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            delta: 0.1,
            f: 0.3,
            zeta: 0.3,
        }
    }
}

/// Which edge-weight likelihood the chain targets. `Poisson` freezes the
/// dispersion at the equal-dispersion point `zeta = log(3/4)` and disables
/// the `zeta` block, so the fit is an ordinary Poisson model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Likelihood {
    Gp,
    Poisson,
}

/// Sampler configuration: iteration budget, thinning, seed, step sizes,
/// and burn-in adaptation.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in draw.
    pub thin: usize,
    pub seed: u64,
    pub steps: StepSizes,
    /// Adapt step sizes during burn-in toward 0.44 (scalar) / 0.234
    /// (multivariate) acceptance.
    pub adapt: bool,
    pub likelihood: Likelihood,
    /// Escape hatch for block-equivalence checks: disable the `zeta`
    /// update while keeping the configured likelihood.
    pub zeta_block: bool,
    /// Initial `zeta`; defaults to the prior mean (GP) or `log(3/4)`
    /// (Poisson).
    pub zeta_init: Option<f64>,
    /// Latent-coordinate sweeps per Gibbs iteration (M3). The coordinate
    /// proposal keeps the prior's scale regardless of how sharp the
    /// likelihood is, so strong data leave it sticky; repeating the sweep
    /// inside the dynamic block is a valid MH composition with the same
    /// stationary law and proportionally faster coordinate mixing.
    pub x_sweeps: usize,
}

impl SamplerConfig {
    pub fn new(iterations: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        Self {
            iterations,
            burn_in,
            thin,
            seed,
            steps: StepSizes::default(),
            adapt: true,
            likelihood: Likelihood::Gp,
            zeta_block: true,
            zeta_init: None,
            x_sweeps: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} must be smaller than the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin < 1 {
            return Err(Error::Config("thinning interval must be >= 1".into()));
        }
        if (self.iterations - self.burn_in) / self.thin == 0 {
            return Err(Error::Config(
                "no draw would be retained; increase iterations or reduce thinning".into(),
            ));
        }
        let s = &self.steps;
        if !(s.alpha > 0.0 && s.delta > 0.0 && s.f > 0.0 && s.zeta > 0.0) {
            return Err(Error::Config("step sizes must be positive".into()));
        }
        if self.x_sweeps < 1 {
            return Err(Error::Config("x_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Post-burn-in acceptance fractions per block (NaN for absent blocks).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceRates {
    pub alpha: f64,
    pub delta: f64,
    pub f: f64,
    pub x: f64,
    pub zeta: f64,
}

/// Thinned posterior draws with per-draw log-likelihood, acceptance
/// statistics, and the configuration echo (including the seed).
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: Vec<ParamState>,
    pub loglik: Vec<f64>,
    pub acceptance: AcceptanceRates,
    pub config: SamplerConfig,
}

impl ChainOutput {
    /// Flattened column names for one draw, in the order produced by
    /// [`ChainOutput::row`]: `alpha[i]`, then `f[t]` or `delta[l]`, then
    /// `x[t.i.k]`, then `zeta`, `rho`, `theta`, and `sigma_eps2` when
    /// present. Indices are 1-based.
    pub fn column_names(&self, spec: &ModelSpec) -> Vec<String> {
        let draw = &self.draws[0];
        let n = draw.alpha.len();
        let mut names: Vec<String> = (1..=n).map(|i| format!("alpha[{i}]")).collect();
        names.extend((1..=draw.f.len()).map(|t| format!("f[{t}]")));
        names.extend((1..=draw.delta.len()).map(|l| format!("delta[{l}]")));
        if let Dynamics::LatentSpace { dim, .. } = &spec.dynamics {
            let t_len = draw.f.len();
            for t in 1..=t_len {
                for i in 1..=n {
                    for k in 1..=*dim {
                        names.push(format!("x[{t}.{i}.{k}]"));
                    }
                }
            }
        }
        names.push("zeta".into());
        names.push("rho".into());
        names.push("theta".into());
        if draw.sigma_eps2.is_some() {
            names.push("sigma_eps2".into());
        }
        names
    }

    /// Flattened values of draw `k` matching [`ChainOutput::column_names`].
    pub fn row(&self, k: usize) -> Vec<f64> {
        let draw = &self.draws[k];
        let mut row = draw.alpha.clone();
        row.extend_from_slice(&draw.f);
        row.extend_from_slice(&draw.delta);
        row.extend_from_slice(&draw.x);
        let (rho, theta) = theta_of_zeta(draw.zeta);
        row.push(draw.zeta);
        row.push(rho);
        row.push(theta);
        if let Some(s) = draw.sigma_eps2 {
            row.push(s);
        }
        row
    }
}

/// The Gibbs sampler bound to one model specification and data set.
/// Block updates mutate a caller-owned state; every update returns its
/// accept/attempt counts.
pub struct GibbsSampler<'a> {
    spec: &'a ModelSpec,
    network: &'a TemporalNetwork,
    pairs: Vec<(usize, usize)>,
    /// M2 lagged log-regressors, fixed by the data.
    m2_regs: Option<Vec<Vec<f64>>>,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(spec: &'a ModelSpec, network: &'a TemporalNetwork) -> Result<Self> {
        spec.validate(network)?;
        let m2_regs = match &spec.dynamics {
            Dynamics::Autoregressive { lags, presample, .. } => {
                Some(m2_log_regressors(network, presample, *lags)?)
            }
            _ => None,
        };
        Ok(Self {
            spec,
            network,
            pairs: network.pairs().collect(),
            m2_regs,
        })
    }

    fn time_effect(&self, state: &ParamState, t: usize) -> f64 {
        match &self.m2_regs {
            Some(regs) => regs[t].iter().zip(&state.delta).map(|(r, d)| r * d).sum(),
            None => state.f[t],
        }
    }

    fn time_effects(&self, state: &ParamState) -> Vec<f64> {
        (0..self.network.n_times())
            .map(|t| self.time_effect(state, t))
            .collect()
    }

    /// Full log-likelihood of the current state.
    pub fn full_loglik(&self, state: &ParamState) -> f64 {
        let (rho, theta) = theta_of_zeta(state.zeta);
        let isr = 1.0 / rho.sqrt();
        let mut total = 0.0;
        for t in 0..self.network.n_times() {
            let f_eff = self.time_effect(state, t);
            for &(i, j) in &self.pairs {
                if !self.network.is_observed(i, j, t) {
                    continue;
                }
                let mu = pair_log_mu(self.spec, state, self.network, i, j, t, f_eff).exp();
                total += log_pmf_raw(mu * isr, theta, self.network.count(i, j, t));
            }
        }
        total
    }

    /// Log-likelihood of the edges incident to node `i`, with `alpha_i`
    /// overridden. Only these terms change in the `alpha` block.
    fn incident_loglik(&self, state: &ParamState, i: usize, alpha_i: f64, f_eff: &[f64]) -> f64 {
        let (rho, theta) = theta_of_zeta(state.zeta);
        let isr = 1.0 / rho.sqrt();
        let n = self.network.n_nodes();
        let dim = match &self.spec.dynamics {
            Dynamics::LatentSpace { dim, .. } => *dim,
            _ => 0,
        };
        let mut total = 0.0;
        for t in 0..self.network.n_times() {
            for j in 0..n {
                if j == i || !self.network.is_observed(i, j, t) {
                    continue;
                }
                let mut log_mu = alpha_i + state.alpha[j] + f_eff[t];
                if dim > 0 {
                    log_mu -= sq_dist(state, t, i, j, n, dim);
                }
                total += log_pmf_raw(log_mu.exp() * isr, theta, self.network.count(i, j, t));
            }
        }
        total
    }

    /// Slice-`t` log-likelihood with the time effect overridden (used by
    /// the factor block, where only slice `t` changes).
    fn slice_loglik(&self, state: &ParamState, t: usize, f_eff: f64) -> f64 {
        let (rho, theta) = theta_of_zeta(state.zeta);
        let isr = 1.0 / rho.sqrt();
        let mut total = 0.0;
        for &(i, j) in &self.pairs {
            if !self.network.is_observed(i, j, t) {
                continue;
            }
            let mu = pair_log_mu(self.spec, state, self.network, i, j, t, f_eff).exp();
            total += log_pmf_raw(mu * isr, theta, self.network.count(i, j, t));
        }
        total
    }

    /// Random-walk MH sweep over the node effects. Each `alpha_i` proposal
    /// only recomputes the likelihood terms of edges incident to `i`.
    pub fn update_alpha<R: Rng + ?Sized>(
        &self,
        state: &mut ParamState,
        rng: &mut R,
        step: f64,
    ) -> (usize, usize) {
        let f_eff = self.time_effects(state);
        let n = self.network.n_nodes();
        let mut accepted = 0;
        for i in 0..n {
            let current = state.alpha[i];
            let z: f64 = rng.sample(StandardNormal);
            let proposal = current + step * z;
            let delta_prior =
                (current * current - proposal * proposal) / (2.0 * self.spec.sigma_alpha2);
            let delta_ll = self.incident_loglik(state, i, proposal, &f_eff)
                - self.incident_loglik(state, i, current, &f_eff);
            let u: f64 = rng.random();
            if u.ln() < delta_prior + delta_ll {
                state.alpha[i] = proposal;
                accepted += 1;
            }
        }
        (accepted, n)
    }

    /// Joint spherical-normal random-walk MH update of the autoregressive
    /// coefficients (M2 only).
    pub fn update_delta<R: Rng + ?Sized>(
        &self,
        state: &mut ParamState,
        rng: &mut R,
        step: f64,
    ) -> Result<(usize, usize)> {
        let Dynamics::Autoregressive { sigma_delta2, .. } = &self.spec.dynamics else {
            return Err(Error::Config("delta block requires the M2 specification".into()));
        };
        let proposal: Vec<f64> = state
            .delta
            .iter()
            .map(|d| d + step * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let delta_prior = state
            .delta
            .iter()
            .zip(&proposal)
            .map(|(c, p)| (c * c - p * p) / (2.0 * sigma_delta2))
            .sum::<f64>();
        let old_ll = self.full_loglik(state);
        let old_delta = std::mem::replace(&mut state.delta, proposal);
        let new_ll = self.full_loglik(state);
        let u: f64 = rng.random();
        if u.ln() < delta_prior + new_ll - old_ll {
            Ok((1, 1))
        } else {
            state.delta = old_delta;
            Ok((0, 1))
        }
    }

    /// Single-site random-walk MH sweep over the latent factor path
    /// (M1/M3). The log target at `t` combines the diffuse anchor at the
    /// first time, the random-walk transitions, and the slice-`t`
    /// likelihood.
    pub fn update_f<R: Rng + ?Sized>(
        &self,
        state: &mut ParamState,
        rng: &mut R,
        step: f64,
    ) -> Result<(usize, usize)> {
        let f0_var = match &self.spec.dynamics {
            Dynamics::Factor { f0_prior_var, .. } => *f0_prior_var,
            Dynamics::LatentSpace { f0_prior_var, .. } => *f0_prior_var,
            Dynamics::Autoregressive { .. } => {
                return Err(Error::Config("factor block requires M1 or M3".into()));
            }
        };
        let sigma_eps2 = state.sigma_eps2.expect("validated M1/M3 state");
        let t_len = self.network.n_times();
        let mut accepted = 0;
        for t in 0..t_len {
            let current = state.f[t];
            let proposal = current + step * rng.sample::<f64, _>(StandardNormal);
            let prior = |f: f64| -> f64 {
                let mut lp = if t == 0 {
                    -f * f / (2.0 * f0_var)
                } else {
                    let d = f - state.f[t - 1];
                    -d * d / (2.0 * sigma_eps2)
                };
                if t + 1 < t_len {
                    let d = state.f[t + 1] - f;
                    lp -= d * d / (2.0 * sigma_eps2);
                }
                lp
            };
            let delta = prior(proposal) - prior(current) + self.slice_loglik(state, t, proposal)
                - self.slice_loglik(state, t, current);
            let u: f64 = rng.random();
            if u.ln() < delta {
                state.f[t] = proposal;
                accepted += 1;
            }
        }
        Ok((accepted, t_len))
    }

    /// Exact conjugate draw of the factor innovation variance from
    /// `IG(a + (T-1)/2, b + sum_t (f_t - f_{t-1})^2 / 2)` (M1/M3).
    pub fn update_sigma_eps<R: Rng + ?Sized>(
        &self,
        state: &mut ParamState,
        rng: &mut R,
    ) -> Result<()> {
        let (a, b) = match &self.spec.dynamics {
            Dynamics::Factor { ig_prior, .. } => *ig_prior,
            Dynamics::LatentSpace { ig_prior, .. } => *ig_prior,
            Dynamics::Autoregressive { .. } => {
                return Err(Error::Config("sigma_eps2 block requires M1 or M3".into()));
            }
        };
        let (a_post, b_post) = sigma_eps_posterior(a, b, &state.f);
        let gamma = Gamma::new(a_post, 1.0 / b_post)
            .map_err(|e| Error::InvalidParameter(format!("inverse-gamma draw: {e}")))?;
        state.sigma_eps2 = Some(1.0 / gamma.sample(rng));
        Ok(())
    }

    /// Gradient of the slice-`t` edge log-likelihood with respect to the
    /// latent coordinate of node `i`, evaluated with that coordinate at
    /// `center` (M3 only):
    /// `C_it = sum_{j != i} -2 s_ijt (center - x_jt)` with
    /// `s = 1 + (y-1) lambda/(lambda + theta y) - lambda` via the chain
    /// rule through `lambda = mu rho^(-1/2)` and
    /// `mu = exp(alpha_i + alpha_j + f_t - ||center - x_jt||^2)`.
    ///
    /// Masked edges contribute nothing; an edge whose truncation constraint
    /// fails at the center (negative-theta case) is skipped, since its
    /// likelihood is `-inf` there and the move is resolved by rejection.
    pub fn taylor_gradient(
        &self,
        state: &ParamState,
        i: usize,
        t: usize,
        center: &[f64],
    ) -> Result<Vec<f64>> {
        let Dynamics::LatentSpace { dim, .. } = &self.spec.dynamics else {
            return Err(Error::Config("taylor_gradient requires the M3 specification".into()));
        };
        let d = *dim;
        if center.len() != d {
            return Err(Error::Dimension(format!(
                "center has dimension {}, expected {d}",
                center.len()
            )));
        }
        let n = self.network.n_nodes();
        if i >= n || t >= self.network.n_times() {
            return Err(Error::Index(format!("(i={i}, t={t})")));
        }
        let (rho, theta) = theta_of_zeta(state.zeta);
        let isr = 1.0 / rho.sqrt();
        let f_t = state.f[t];
        let mut grad = vec![0.0; d];
        for j in 0..n {
            if j == i || !self.network.is_observed(i, j, t) {
                continue;
            }
            let xj = state.x_at(t, j, n, d);
            let dist2: f64 = center.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            let lambda = (state.alpha[i] + state.alpha[j] + f_t - dist2).exp() * isr;
            let y = self.network.count(i, j, t);
            let yf = y as f64;
            let denom = lambda + theta * yf;
            if denom <= 0.0 {
                continue;
            }
            let score_term = if y == 1 { 0.0 } else { (yf - 1.0) * lambda / denom };
            let s = 1.0 + score_term - lambda;
            for k in 0..d {
                grad[k] += -2.0 * s * (center[k] - xj[k]);
            }
        }
        Ok(grad)
    }

    /// Proposal mean and (isotropic) variance for the coordinate of node
    /// `i` at time `t`, from the Gaussian completion of the random-walk
    /// prior terms and the linearized likelihood with gradient `grad`.
    fn x_proposal_params(
        &self,
        state: &ParamState,
        i: usize,
        t: usize,
        grad: &[f64],
        sigma_x2: f64,
        n: usize,
        d: usize,
    ) -> (Vec<f64>, f64) {
        let t_len = self.network.n_times();
        let prev: Vec<f64> = if t > 0 {
            state.x_at(t - 1, i, n, d).to_vec()
        } else {
            vec![0.0; d]
        };
        if t + 1 < t_len {
            let next = state.x_at(t + 1, i, n, d);
            let mean = (0..d)
                .map(|k| (prev[k] + next[k] + sigma_x2 * grad[k]) / 2.0)
                .collect();
            (mean, sigma_x2 / 2.0)
        } else {
            let mean = (0..d).map(|k| prev[k] + sigma_x2 * grad[k]).collect();
            (mean, sigma_x2)
        }
    }

    /// Log target for the coordinate of node `i` at `t` placed at `pos`:
    /// random-walk prior terms plus the incident slice likelihood.
    fn x_log_target(
        &self,
        state: &ParamState,
        i: usize,
        t: usize,
        pos: &[f64],
        sigma_x2: f64,
        n: usize,
        d: usize,
    ) -> f64 {
        let t_len = self.network.n_times();
        let mut lp = 0.0;
        // N(x_t ; x_{t-1}, sigma_x2 I), anchored at zero for the first time.
        let prev: Vec<f64> = if t > 0 {
            state.x_at(t - 1, i, n, d).to_vec()
        } else {
            vec![0.0; d]
        };
        for k in 0..d {
            let diff = pos[k] - prev[k];
            lp -= diff * diff / (2.0 * sigma_x2);
        }
        if t + 1 < t_len {
            let next = state.x_at(t + 1, i, n, d);
            for k in 0..d {
                let diff = next[k] - pos[k];
                lp -= diff * diff / (2.0 * sigma_x2);
            }
        }
        let (rho, theta) = theta_of_zeta(state.zeta);
        let isr = 1.0 / rho.sqrt();
        let f_t = state.f[t];
        for j in 0..n {
            if j == i || !self.network.is_observed(i, j, t) {
                continue;
            }
            let xj = state.x_at(t, j, n, d);
            let dist2: f64 = pos.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            let mu = (state.alpha[i] + state.alpha[j] + f_t - dist2).exp();
            lp += log_pmf_raw(mu * isr, theta, self.network.count(i, j, t));
        }
        lp
    }

    /// Gradient-informed MH sweep over all latent coordinates (M3 only).
    /// The proposal is asymmetric (its center depends on the current
    /// point through the gradient), so the reverse-proposal density enters
    /// the acceptance ratio.
    pub fn update_x<R: Rng + ?Sized>(
        &self,
        state: &mut ParamState,
        rng: &mut R,
    ) -> Result<(usize, usize)> {
        let Dynamics::LatentSpace { dim, sigma_x2, .. } = &self.spec.dynamics else {
            return Err(Error::Config("coordinate block requires the M3 specification".into()));
        };
        let (d, sigma_x2) = (*dim, *sigma_x2);
        let n = self.network.n_nodes();
        let t_len = self.network.n_times();
        let mut accepted = 0;
        for t in 0..t_len {
            for i in 0..n {
                let current = state.x_at(t, i, n, d).to_vec();
                let grad_fwd = self.taylor_gradient(state, i, t, &current)?;
                let (mean_fwd, var_fwd) =
                    self.x_proposal_params(state, i, t, &grad_fwd, sigma_x2, n, d);
                let proposal: Vec<f64> = (0..d)
                    .map(|k| mean_fwd[k] + var_fwd.sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect();

                let grad_rev = self.taylor_gradient(state, i, t, &proposal)?;
                let (mean_rev, var_rev) =
                    self.x_proposal_params(state, i, t, &grad_rev, sigma_x2, n, d);

                let log_q_fwd = gaussian_logpdf_iso(&proposal, &mean_fwd, var_fwd);
                let log_q_rev = gaussian_logpdf_iso(&current, &mean_rev, var_rev);
                let delta = self.x_log_target(state, i, t, &proposal, sigma_x2, n, d)
                    - self.x_log_target(state, i, t, &current, sigma_x2, n, d)
                    + log_q_rev
                    - log_q_fwd;
                let u: f64 = rng.random();
                if u.ln() < delta {
                    let base = (t * n + i) * d;
                    state.x[base..base + d].copy_from_slice(&proposal);
                    accepted += 1;
                }
            }
        }
        Ok((accepted, n * t_len))
    }

    /// One greedy iterated-conditional-modes pass over the coordinates:
    /// every site steps toward the completion mean of its proposal (the
    /// conditional mode of prior times linearized likelihood), with the
    /// step clipped to the prior scale and kept only when it raises the
    /// local log target. Deterministic and monotone; used only to refine
    /// starting values.
    fn icm_coordinate_sweep(&self, state: &mut ParamState) {
        let Dynamics::LatentSpace { dim, sigma_x2, .. } = &self.spec.dynamics else {
            return;
        };
        let (d, sigma_x2) = (*dim, *sigma_x2);
        let max_step = sigma_x2.sqrt();
        let n = self.network.n_nodes();
        for t in 0..self.network.n_times() {
            for i in 0..n {
                let current = state.x_at(t, i, n, d).to_vec();
                let Ok(grad) = self.taylor_gradient(state, i, t, &current) else {
                    continue;
                };
                let (mean, _) = self.x_proposal_params(state, i, t, &grad, sigma_x2, n, d);
                if mean.iter().any(|v| !v.is_finite()) {
                    continue;
                }
                let mut step: Vec<f64> =
                    mean.iter().zip(&current).map(|(m, c)| 0.5 * (m - c)).collect();
                let norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
                if norm > max_step {
                    for s in step.iter_mut() {
                        *s *= max_step / norm;
                    }
                }
                let candidate: Vec<f64> =
                    current.iter().zip(&step).map(|(c, s)| c + s).collect();
                let before = self.x_log_target(state, i, t, &current, sigma_x2, n, d);
                let after = self.x_log_target(state, i, t, &candidate, sigma_x2, n, d);
                if after > before {
                    let base = (t * n + i) * d;
                    state.x[base..base + d].copy_from_slice(&candidate);
                }
            }
        }
    }

    /// Scalar random-walk MH update of the dispersion parameter.
    pub fn update_zeta<R: Rng + ?Sized>(
        &self,
        state: &mut ParamState,
        rng: &mut R,
        step: f64,
    ) -> (usize, usize) {
        let current = state.zeta;
        let proposal = current + step * rng.sample::<f64, _>(StandardNormal);
        let dm = current - self.spec.mu_zeta;
        let dp = proposal - self.spec.mu_zeta;
        let delta_prior = (dm * dm - dp * dp) / (2.0 * self.spec.sigma_zeta2);
        let old_ll = self.full_loglik(state);
        state.zeta = proposal;
        let new_ll = self.full_loglik(state);
        let u: f64 = rng.random();
        if u.ln() < delta_prior + new_ll - old_ll {
            (1, 1)
        } else {
            state.zeta = current;
            (0, 1)
        }
    }
}

/// Conjugate inverse-gamma posterior parameters for the factor innovation
/// variance: `a + (T-1)/2` and `b + sum of squared increments / 2`.
pub fn sigma_eps_posterior(a: f64, b: f64, f: &[f64]) -> (f64, f64) {
    let t_len = f.len();
    let ssq: f64 = f.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    (a + (t_len.saturating_sub(1)) as f64 / 2.0, b + ssq / 2.0)
}

fn gaussian_logpdf_iso(x: &[f64], mean: &[f64], var: f64) -> f64 {
    let d = x.len() as f64;
    let ssq: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * ssq / var - 0.5 * d * (2.0 * std::f64::consts::PI * var).ln()
}

/// Apply the likelihood-invariant identification transforms in place.
///
/// M1/M3: subtract the mean of `alpha` from every node effect and add twice
/// that mean to every factor value. M3 additionally column-centers each
/// coordinate slice and, when `x_reference` is given, rotates each slice
/// onto the reference configuration by orthogonal Procrustes. M2 is left
/// untouched (its identifying zero-sum condition is an assumption enforced
/// by the centered prior, not a likelihood invariance).
pub fn apply_identification(
    state: &mut ParamState,
    spec: &ModelSpec,
    x_reference: Option<&[f64]>,
) -> Result<()> {
    match spec.kind() {
        ModelKind::M2 => Ok(()),
        ModelKind::M1 => {
            center_alpha_into_f(state);
            Ok(())
        }
        ModelKind::M3 => {
            center_alpha_into_f(state);
            let Dynamics::LatentSpace { dim, .. } = &spec.dynamics else {
                unreachable!()
            };
            let d = *dim;
            let n = state.alpha.len();
            let t_len = state.f.len();
            // Column-center each slice (translation invariance).
            for t in 0..t_len {
                for k in 0..d {
                    let mut m = 0.0;
                    for i in 0..n {
                        m += state.x[(t * n + i) * d + k];
                    }
                    m /= n as f64;
                    for i in 0..n {
                        state.x[(t * n + i) * d + k] -= m;
                    }
                }
            }
            if let Some(reference) = x_reference {
                if reference.len() != state.x.len() {
                    return Err(Error::Dimension(format!(
                        "x reference has length {}, expected {}",
                        reference.len(),
                        state.x.len()
                    )));
                }
                for t in 0..t_len {
                    let base = t * n * d;
                    let aligned = procrustes_align(
                        &state.x[base..base + n * d],
                        &reference[base..base + n * d],
                        n,
                        d,
                    )?;
                    state.x[base..base + n * d].copy_from_slice(&aligned.rotated);
                }
            }
            Ok(())
        }
    }
}

/// Method-of-moments starting state.
///
/// The coordinate and dispersion blocks mix slowly, so a start far from
/// any data-consistent configuration spends most of the burn-in in a
/// regime where the dispersion parameter absorbs unexplained pair
/// heterogeneity. Starting values come from the data instead: latent
/// coordinates by classical scaling, node effects and factor path from
/// row and slice means of the log counts, and the dispersion from the
/// pooled moment ratio of the residuals. Initialization only; the
/// stationary law does not depend on it, and the start is a deterministic
/// function of the data so runs stay reproducible.
fn initial_state(spec: &ModelSpec, network: &TemporalNetwork, sampler: &GibbsSampler) -> ParamState {
    let mut state = ParamState::zeroed(spec, network);
    let n = network.n_nodes();
    let t_len = network.n_times();

    let dim = match &spec.dynamics {
        Dynamics::LatentSpace { dim, .. } => {
            state.x = mds_initialize(network, *dim);
            *dim
        }
        _ => 0,
    };
    let any_observed = (0..t_len)
        .any(|t| network.pairs().any(|(i, j)| network.is_observed(i, j, t)));
    if !any_observed {
        return state;
    }

    moment_fit(&mut state, spec, network, dim);
    let _ = sampler;
    state
}

/// Method-of-moments estimates of the node effects, factor path, and
/// dispersion, given the current coordinates.
fn moment_fit(state: &mut ParamState, spec: &ModelSpec, network: &TemporalNetwork, dim: usize) {
    let n = network.n_nodes();
    let t_len = network.n_times();
    // z_ijt = log(y + 1/2) + ||x_i - x_j||^2 ~ alpha_i + alpha_j + f_t.
    let z = |state: &ParamState, i: usize, j: usize, t: usize| -> f64 {
        let mut v = (network.count(i, j, t) as f64 + 0.5).ln();
        if dim > 0 {
            v += sq_dist(state, t, i, j, n, dim);
        }
        v
    };

    let mut row_sum = vec![0.0; n];
    let mut row_cnt = vec![0usize; n];
    for t in 0..t_len {
        for (i, j) in network.pairs() {
            if !network.is_observed(i, j, t) {
                continue;
            }
            let v = z(state, i, j, t);
            row_sum[i] += v;
            row_cnt[i] += 1;
            row_sum[j] += v;
            row_cnt[j] += 1;
        }
    }
    if row_cnt.iter().any(|&c| c == 0) {
        return;
    }
    let row_mean: Vec<f64> = row_sum
        .iter()
        .zip(&row_cnt)
        .map(|(s, c)| s / *c as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        state.alpha[i] = (row_mean[i] - grand) / 2.0;
    }
    // Factor path (M1/M3) from slice means net of the node effects.
    if !state.f.is_empty() {
        for t in 0..t_len {
            let mut sum = 0.0;
            let mut cnt = 0usize;
            for (i, j) in network.pairs() {
                if !network.is_observed(i, j, t) {
                    continue;
                }
                sum += z(state, i, j, t) - state.alpha[i] - state.alpha[j];
                cnt += 1;
            }
            if cnt > 0 {
                state.f[t] = sum / cnt as f64;
            }
        }
    }
    // Dispersion from the pooled moment ratio of the fitted residuals.
    let f_eff: Vec<f64> = (0..t_len)
        .map(|t| if state.f.is_empty() { 0.0 } else { state.f[t] })
        .collect();
    let mut disp_sum = 0.0;
    let mut disp_cnt = 0usize;
    for t in 0..t_len {
        for (i, j) in network.pairs() {
            if !network.is_observed(i, j, t) {
                continue;
            }
            let mut log_mu = state.alpha[i] + state.alpha[j] + f_eff[t];
            if dim > 0 {
                log_mu -= sq_dist(state, t, i, j, n, dim);
            }
            let mu = log_mu.exp();
            let y = network.count(i, j, t) as f64;
            disp_sum += (y - mu) * (y - mu) / mu.max(1e-8);
            disp_cnt += 1;
        }
    }
    if disp_cnt > 0 {
        let rho_hat = (disp_sum / disp_cnt as f64).clamp(0.3, 5e3);
        state.zeta = (rho_hat - 0.25).max(0.05).ln();
    }
    let spec_kind_is_m2 = matches!(spec.dynamics, Dynamics::Autoregressive { .. });
    if spec_kind_is_m2 {
        // The slice-mean structure lives in the regressors for M2; keep
        // the coefficients at zero and let their fast block fit them.
        state.delta.iter_mut().for_each(|d| *d = 0.0);
    }
}

/// Classical-scaling initialization of the latent coordinates.
///
/// Under the latent-space mean, `log y_ijt` is approximately
/// `alpha_i + alpha_j + f_t - ||x_it - x_jt||^2`, so double-centering the
/// log counts per slice removes the additive node and time effects and
/// leaves (minus) the double-centered squared distances; half of that
/// centered matrix is the classical MDS Gram matrix, whose top
/// eigenvectors give an embedding. Slices are Procrustes-aligned to the
/// previous one for temporal smoothness. Initialization only; the chain's
/// stationary law does not depend on it.
fn mds_initialize(network: &TemporalNetwork, d: usize) -> Vec<f64> {
    let n = network.n_nodes();
    let t_len = network.n_times();
    let mut x = vec![0.0; t_len * n * d];
    let mut previous: Option<Vec<f64>> = None;
    for t in 0..t_len {
        // log(y + 1/2), with masked entries at the slice median level.
        let mut c = vec![0.0; n * n];
        let mut observed = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && network.is_observed(i, j, t) {
                    observed.push((network.count(i, j, t) as f64 + 0.5).ln());
                }
            }
        }
        observed.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let fallback = if observed.is_empty() {
            0.0
        } else {
            observed[observed.len() / 2]
        };
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] = if i == j {
                    0.0
                } else if network.is_observed(i, j, t) {
                    (network.count(i, j, t) as f64 + 0.5).ln()
                } else {
                    fallback
                };
            }
        }
        // Put each diagonal entry at its row mean so centering ignores it.
        for i in 0..n {
            let row_mean: f64 =
                (0..n).filter(|&j| j != i).map(|j| c[i * n + j]).sum::<f64>() / (n as f64 - 1.0);
            c[i * n + i] = row_mean;
        }
        // Gram matrix: half the double-centered log counts.
        let row_means: Vec<f64> =
            (0..n).map(|i| (0..n).map(|j| c[i * n + j]).sum::<f64>() / n as f64).collect();
        let grand = row_means.iter().sum::<f64>() / n as f64;
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let centered = c[i * n + j] - row_means[i] - row_means[j] + grand;
                gram[i * n + j] = 0.5 * centered;
            }
        }
        // Symmetrize against rounding and take the top-d eigenpairs.
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (gram[i * n + j] + gram[j * n + i]);
                gram[i * n + j] = avg;
                gram[j * n + i] = avg;
            }
        }
        let (eigvals, vecs) = procrustes::jacobi_eigen(&mut gram, n);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigvals[b].partial_cmp(&eigvals[a]).unwrap());
        let mut slice = vec![0.0; n * d];
        for (k, &col) in order.iter().take(d).enumerate() {
            let scale = eigvals[col].max(0.0).sqrt();
            for i in 0..n {
                slice[i * d + k] = scale * vecs[i * n + col];
            }
        }
        if let Some(prev) = &previous {
            if let Ok(aligned) = procrustes_align(&slice, prev, n, d) {
                slice = aligned.rotated;
            }
        }
        x[t * n * d..(t + 1) * n * d].copy_from_slice(&slice);
        previous = Some(slice);
    }
    x
}

fn center_alpha_into_f(state: &mut ParamState) {
    let mean = state.alpha.iter().sum::<f64>() / state.alpha.len() as f64;
    for a in state.alpha.iter_mut() {
        *a -= mean;
    }
    for f in state.f.iter_mut() {
        *f += 2.0 * mean;
    }
}

/// Re-rotate every stored draw's coordinate slices onto an external
/// reference configuration (for example, the data-generating truth).
pub fn realign_draws(chain: &mut ChainOutput, spec: &ModelSpec, reference: &[f64]) -> Result<()> {
    for draw in chain.draws.iter_mut() {
        apply_identification(draw, spec, Some(reference))?;
    }
    Ok(())
}

struct BlockCounter {
    window_acc: usize,
    window_tot: usize,
    post_acc: usize,
    post_tot: usize,
    windows_done: usize,
}

impl BlockCounter {
    fn new() -> Self {
        Self {
            window_acc: 0,
            window_tot: 0,
            post_acc: 0,
            post_tot: 0,
            windows_done: 0,
        }
    }

    fn record(&mut self, acc: usize, tot: usize, post_burn: bool) {
        self.window_acc += acc;
        self.window_tot += tot;
        if post_burn {
            self.post_acc += acc;
            self.post_tot += tot;
        }
    }

    /// Robbins-Monro step-size adaptation toward `target` acceptance.
    fn adapt(&mut self, step: &mut f64, target: f64) {
        if self.window_tot == 0 {
            return;
        }
        self.windows_done += 1;
        let rate = self.window_acc as f64 / self.window_tot as f64;
        *step *= ((rate - target) / (self.windows_done as f64).sqrt()).exp();
        self.window_acc = 0;
        self.window_tot = 0;
    }

    fn rate(&self) -> f64 {
        if self.post_tot == 0 {
            f64::NAN
        } else {
            self.post_acc as f64 / self.post_tot as f64
        }
    }
}

const ADAPT_WINDOW: usize = 50;

/// Run one Metropolis-within-Gibbs chain.
///
/// Blocks cycle as `alpha`; the dynamic block (`f` and `sigma_eps2` for M1,
/// `delta` for M2, `f`, `sigma_eps2`, and the coordinates for M3); then
/// `zeta`. Identification transforms are applied to every retained draw,
/// with the first retained draw serving as the Procrustes reference for M3.
/// The run is bit-reproducible given the seed.
pub fn run_chain(
    spec: &ModelSpec,
    network: &TemporalNetwork,
    config: &SamplerConfig,
) -> Result<ChainOutput> {
    config.validate()?;
    let sampler = GibbsSampler::new(spec, network)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut state = initial_state(spec, network, &sampler);
    state.zeta = config.zeta_init.unwrap_or(match config.likelihood {
        Likelihood::Gp => state.zeta,
        Likelihood::Poisson => ZETA_POISSON,
    });
    state.validate(spec, network)?;

    let zeta_block = config.zeta_block && config.likelihood == Likelihood::Gp;
    let kind = spec.kind();
    let mut steps = config.steps.clone();
    let mut alpha_c = BlockCounter::new();
    let mut delta_c = BlockCounter::new();
    let mut f_c = BlockCounter::new();
    let mut x_c = BlockCounter::new();
    let mut zeta_c = BlockCounter::new();

    let retained = (config.iterations - config.burn_in) / config.thin;
    let mut draws = Vec::with_capacity(retained);
    let mut loglik = Vec::with_capacity(retained);
    let mut x_reference: Option<Vec<f64>> = None;

    let delta_target = match &spec.dynamics {
        Dynamics::Autoregressive { lags, .. } if *lags > 1 => 0.234,
        _ => 0.44,
    };

    for h in 0..config.iterations {
        let post_burn = h >= config.burn_in;

        let (acc, tot) = sampler.update_alpha(&mut state, &mut rng, steps.alpha);
        alpha_c.record(acc, tot, post_burn);

        match kind {
            ModelKind::M1 => {
                let (acc, tot) = sampler.update_f(&mut state, &mut rng, steps.f)?;
                f_c.record(acc, tot, post_burn);
                sampler.update_sigma_eps(&mut state, &mut rng)?;
            }
            ModelKind::M2 => {
                let (acc, tot) = sampler.update_delta(&mut state, &mut rng, steps.delta)?;
                delta_c.record(acc, tot, post_burn);
            }
            ModelKind::M3 => {
                let (acc, tot) = sampler.update_f(&mut state, &mut rng, steps.f)?;
                f_c.record(acc, tot, post_burn);
                sampler.update_sigma_eps(&mut state, &mut rng)?;
                for _ in 0..config.x_sweeps {
                    let (acc, tot) = sampler.update_x(&mut state, &mut rng)?;
                    x_c.record(acc, tot, post_burn);
                }
            }
        }

        if zeta_block {
            let (acc, tot) = sampler.update_zeta(&mut state, &mut rng, steps.zeta);
            zeta_c.record(acc, tot, post_burn);
        }

        if config.adapt && !post_burn && (h + 1) % ADAPT_WINDOW == 0 {
            alpha_c.adapt(&mut steps.alpha, 0.44);
            delta_c.adapt(&mut steps.delta, delta_target);
            f_c.adapt(&mut steps.f, 0.44);
            zeta_c.adapt(&mut steps.zeta, 0.44);
        }

        if post_burn && (h + 1 - config.burn_in) % config.thin == 0 {
            let mut draw = state.clone();
            apply_identification(&mut draw, spec, x_reference.as_deref())?;
            if x_reference.is_none() && kind == ModelKind::M3 {
                x_reference = Some(draw.x.clone());
            }
            loglik.push(sampler.full_loglik(&draw));
            draws.push(draw);
        }
    }

    Ok(ChainOutput {
        draws,
        loglik,
        acceptance: AcceptanceRates {
            alpha: alpha_c.rate(),
            delta: delta_c.rate(),
            f: f_c.rate(),
            x: x_c.rate(),
            zeta: zeta_c.rate(),
        },
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{avg_strength, log_likelihood};

    fn small_network(n: usize, t: usize, seed: u64) -> TemporalNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = TemporalNetwork::new(n, t).unwrap();
        for tt in 0..t {
            let pairs: Vec<(usize, usize)> = net.pairs().collect();
            for (i, j) in pairs {
                net.set_count(i, j, tt, rng.random_range(0..10)).unwrap();
            }
        }
        net
    }

    fn random_m3_state(
        spec: &ModelSpec,
        net: &TemporalNetwork,
        zeta: f64,
        seed: u64,
    ) -> ParamState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = ParamState::zeroed(spec, net);
        for a in st.alpha.iter_mut() {
            *a = 0.4 * (rng.random::<f64>() - 0.5);
        }
        for f in st.f.iter_mut() {
            *f = 0.6 * (rng.random::<f64>() - 0.5);
        }
        for x in st.x.iter_mut() {
            *x = rng.random::<f64>() - 0.5;
        }
        st.zeta = zeta;
        st
    }

    #[test]
    fn zero_step_keeps_every_block_constant() {
        let net = small_network(4, 3, 1);
        let spec = ModelSpec::m1();
        let sampler = GibbsSampler::new(&spec, &net).unwrap();
        let mut state = ParamState::zeroed(&spec, &net);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let before = state.clone();
        sampler.update_alpha(&mut state, &mut rng, 0.0);
        sampler.update_f(&mut state, &mut rng, 0.0).unwrap();
        sampler.update_zeta(&mut state, &mut rng, 0.0);
        assert_eq!(state.alpha, before.alpha);
        assert_eq!(state.f, before.f);
        assert_eq!(state.zeta, before.zeta);
    }

    #[test]
    fn restricted_alpha_delta_equals_full_likelihood_delta() {
        let net = small_network(6, 3, 3);
        for spec in [ModelSpec::m1(), ModelSpec::m3(2)] {
            let sampler = GibbsSampler::new(&spec, &net).unwrap();
            let mut st = random_m3_state(&spec, &net, 0.8, 7);
            if spec.kind() == ModelKind::M1 {
                st.x.clear();
                st.validate(&spec, &net).unwrap();
            }
            let f_eff = sampler.time_effects(&st);
            for i in [0usize, 3, 5] {
                let bumped = st.alpha[i] + 0.37;
                let restricted = sampler.incident_loglik(&st, i, bumped, &f_eff)
                    - sampler.incident_loglik(&st, i, st.alpha[i], &f_eff);
                let base = log_likelihood(&spec, &st, &net).unwrap();
                let mut moved = st.clone();
                moved.alpha[i] = bumped;
                let full = log_likelihood(&spec, &moved, &net).unwrap() - base;
                assert!(
                    (restricted - full).abs() < 1e-10,
                    "i={i}: {restricted} vs {full}"
                );
            }
        }
    }

    #[test]
    fn sigma_eps_posterior_worked_example() {
        // T = 2, increment 2, a = b = 1: shape 1.5, rate 3.
        let (a_post, b_post) = sigma_eps_posterior(1.0, 1.0, &[0.0, 2.0]);
        assert_eq!(a_post, 1.5);
        assert_eq!(b_post, 3.0);
        // Constant path leaves the prior rate untouched.
        let (a2, b2) = sigma_eps_posterior(2.0, 2.0, &[1.3, 1.3, 1.3]);
        assert_eq!(a2, 3.0);
        assert_eq!(b2, 2.0);
    }

    #[test]
    fn taylor_gradient_matches_finite_differences() {
        let net = small_network(5, 2, 11);
        let spec = ModelSpec::m3(2);
        let sampler = GibbsSampler::new(&spec, &net).unwrap();
        let st = random_m3_state(&spec, &net, 1.2, 13);
        let (i, t) = (2usize, 1usize);
        let center = st.x_at(t, i, 5, 2).to_vec();
        let grad = sampler.taylor_gradient(&st, i, t, &center).unwrap();

        let ll_at = |pos: &[f64]| -> f64 {
            let mut moved = st.clone();
            let base = (t * 5 + i) * 2;
            moved.x[base..base + 2].copy_from_slice(pos);
            // Only the incident slice-t terms vary, so the full-likelihood
            // difference isolates them exactly.
            log_likelihood(&spec, &moved, &net).unwrap()
        };
        let h = 1e-6;
        for k in 0..2 {
            let mut up = center.clone();
            let mut dn = center.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (ll_at(&up) - ll_at(&dn)) / (2.0 * h);
            assert!(
                (fd - grad[k]).abs() <= 1e-5 * (1.0 + fd.abs()),
                "component {k}: fd {fd} vs analytic {}",
                grad[k]
            );
        }
    }

    #[test]
    fn taylor_gradient_poisson_special_case() {
        // At theta = 0 the edge score is the Poisson score, so the gradient
        // reduces to sum_j -2 (y - mu) (x_i - x_j) with mu the edge mean.
        let net = small_network(4, 1, 17);
        let spec = ModelSpec::m3(2);
        let sampler = GibbsSampler::new(&spec, &net).unwrap();
        let mut st = random_m3_state(&spec, &net, 0.0, 19);
        st.zeta = ZETA_POISSON;
        let i = 1usize;
        let center = st.x_at(0, i, 4, 2).to_vec();
        let grad = sampler.taylor_gradient(&st, i, 0, &center).unwrap();
        let mut oracle = vec![0.0; 2];
        for j in 0..4 {
            if j == i {
                continue;
            }
            let xj = st.x_at(0, j, 4, 2);
            let dist2: f64 = center.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            let mu = (st.alpha[i] + st.alpha[j] + st.f[0] - dist2).exp();
            let y = net.count(i, j, 0) as f64;
            for k in 0..2 {
                oracle[k] += -2.0 * (y - mu) * (center[k] - xj[k]);
            }
        }
        for k in 0..2 {
            assert!((grad[k] - oracle[k]).abs() < 1e-10, "component {k}");
        }
    }

    #[test]
    fn x_proposal_is_brownian_bridge_mean_without_data() {
        // Flat likelihood (all masked): interior proposal mean is the
        // midpoint of the two neighbors.
        let mut net = small_network(3, 3, 23);
        let pairs: Vec<_> = net.pairs().collect();
        for t in 0..3 {
            for &(i, j) in &pairs {
                net.set_missing(i, j, t).unwrap();
            }
        }
        let spec = ModelSpec::m3(2);
        let sampler = GibbsSampler::new(&spec, &net).unwrap();
        let st = random_m3_state(&spec, &net, 0.5, 29);
        let (i, t) = (1usize, 1usize);
        let center = st.x_at(t, i, 3, 2).to_vec();
        let grad = sampler.taylor_gradient(&st, i, t, &center).unwrap();
        assert!(grad.iter().all(|g| *g == 0.0));
        let (mean, var) = sampler.x_proposal_params(&st, i, t, &grad, 0.25, 3, 2);
        for k in 0..2 {
            let mid = (st.x_at(0, i, 3, 2)[k] + st.x_at(2, i, 3, 2)[k]) / 2.0;
            assert!((mean[k] - mid).abs() < 1e-15);
        }
        assert_eq!(var, 0.125);
        // Boundary t = T: single-neighbor completion.
        let center_t = st.x_at(2, i, 3, 2).to_vec();
        let grad_t = sampler.taylor_gradient(&st, i, 2, &center_t).unwrap();
        let (mean_t, var_t) = sampler.x_proposal_params(&st, i, 2, &grad_t, 0.25, 3, 2);
        for k in 0..2 {
            assert!((mean_t[k] - st.x_at(1, i, 3, 2)[k]).abs() < 1e-15);
        }
        assert_eq!(var_t, 0.25);
    }

    #[test]
    fn identification_preserves_likelihood_and_centers_alpha() {
        let net = small_network(6, 3, 31);
        for spec in [ModelSpec::m1(), ModelSpec::m3(2)] {
            let mut st = random_m3_state(&spec, &net, 1.0, 37);
            if spec.kind() == ModelKind::M1 {
                st.x.clear();
            }
            for a in st.alpha.iter_mut() {
                *a += 0.9;
            }
            let before = log_likelihood(&spec, &st, &net).unwrap();
            let reference: Option<Vec<f64>> = if spec.kind() == ModelKind::M3 {
                let mut r = st.clone();
                apply_identification(&mut r, &spec, None).unwrap();
                Some(r.x)
            } else {
                None
            };
            apply_identification(&mut st, &spec, reference.as_deref()).unwrap();
            let after = log_likelihood(&spec, &st, &net).unwrap();
            assert!((before - after).abs() < 1e-10, "{before} vs {after}");
            let sum: f64 = st.alpha.iter().sum();
            assert!(sum.abs() < 1e-12);
        }
        // Already-centered alpha is untouched (M1 case).
        let spec = ModelSpec::m1();
        let mut st = ParamState::zeroed(&spec, &net);
        st.alpha = vec![0.5, -0.5, 0.3, -0.3, 0.2, -0.2];
        let alpha_before = st.alpha.clone();
        apply_identification(&mut st, &spec, None).unwrap();
        for (a, b) in st.alpha.iter().zip(&alpha_before) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn chain_retains_expected_draw_count() {
        let net = small_network(4, 2, 41);
        let spec = ModelSpec::m1();
        // iterations = burn_in + thin: exactly one retained draw.
        let config = SamplerConfig::new(30, 20, 10, 5);
        let out = run_chain(&spec, &net, &config).unwrap();
        assert_eq!(out.draws.len(), 1);
        assert_eq!(out.loglik.len(), 1);
        let config = SamplerConfig::new(100, 20, 7, 5);
        let out = run_chain(&spec, &net, &config).unwrap();
        assert_eq!(out.draws.len(), (100 - 20) / 7);
        // Invalid configurations are rejected up front.
        assert!(run_chain(&spec, &net, &SamplerConfig::new(10, 10, 1, 0)).is_err());
        assert!(run_chain(&spec, &net, &SamplerConfig::new(12, 10, 5, 0)).is_err());
    }

    #[test]
    fn chain_is_bit_reproducible() {
        let net = small_network(5, 2, 43);
        let spec = ModelSpec::m3(2);
        let config = SamplerConfig::new(60, 20, 2, 99);
        let a = run_chain(&spec, &net, &config).unwrap();
        let b = run_chain(&spec, &net, &config).unwrap();
        assert_eq!(a.draws.len(), b.draws.len());
        for (x, y) in a.draws.iter().zip(&b.draws) {
            assert_eq!(x, y);
        }
        assert_eq!(a.loglik, b.loglik);
    }

    #[test]
    fn poisson_arm_equals_gp_with_zeta_block_disabled() {
        let net = small_network(5, 2, 47);
        for spec in [ModelSpec::m1(), ModelSpec::m2(2), ModelSpec::m3(2)] {
            let mut poisson_cfg = SamplerConfig::new(60, 20, 2, 7);
            poisson_cfg.likelihood = Likelihood::Poisson;
            let mut frozen_cfg = SamplerConfig::new(60, 20, 2, 7);
            frozen_cfg.likelihood = Likelihood::Gp;
            frozen_cfg.zeta_block = false;
            frozen_cfg.zeta_init = Some(ZETA_POISSON);
            let a = run_chain(&spec, &net, &poisson_cfg).unwrap();
            let b = run_chain(&spec, &net, &frozen_cfg).unwrap();
            for (x, y) in a.draws.iter().zip(&b.draws) {
                assert_eq!(x, y, "kind {:?}", spec.kind());
            }
            assert_eq!(a.loglik, b.loglik);
        }
    }

    #[test]
    fn column_names_align_with_rows() {
        let net = small_network(3, 2, 53);
        let spec = ModelSpec::m3(2);
        let config = SamplerConfig::new(25, 20, 5, 3);
        let out = run_chain(&spec, &net, &config).unwrap();
        let names = out.column_names(&spec);
        let row = out.row(0);
        assert_eq!(names.len(), row.len());
        // alpha(3) + f(2) + x(2*3*2) + zeta/rho/theta + sigma_eps2
        assert_eq!(names.len(), 3 + 2 + 12 + 3 + 1);
        assert_eq!(names[0], "alpha[1]");
        assert_eq!(names[5], "x[1.1.1]");
        assert!(names.contains(&"theta".to_string()));
        let (rho, theta) = theta_of_zeta(out.draws[0].zeta);
        let zpos = names.iter().position(|n| n == "zeta").unwrap();
        assert_eq!(row[zpos], out.draws[0].zeta);
        assert_eq!(row[zpos + 1], rho);
        assert_eq!(row[zpos + 2], theta);
    }

    #[test]
    fn m2_chain_runs_and_blocks_reject_wrong_kind() {
        let mut net = small_network(4, 3, 59);
        // Ensure positive strengths for the log regressors.
        let pairs: Vec<_> = net.pairs().collect();
        for t in 0..3 {
            for &(i, j) in &pairs {
                let c = net.count(i, j, t);
                net.set_count(i, j, t, c + 1).unwrap();
            }
        }
        for t in 0..3 {
            assert!(avg_strength(&net, t).unwrap() > 0.0);
        }
        let spec = ModelSpec::m2(2);
        let config = SamplerConfig::new(40, 20, 2, 11);
        let out = run_chain(&spec, &net, &config).unwrap();
        assert_eq!(out.draws.len(), 10);
        assert!(out.acceptance.delta.is_finite());
        assert!(out.acceptance.x.is_nan());

        let sampler = GibbsSampler::new(&spec, &net).unwrap();
        let mut st = ParamState::zeroed(&spec, &net);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sampler.update_f(&mut st, &mut rng, 0.1).is_err());
        assert!(sampler.update_x(&mut st, &mut rng).is_err());
        assert!(sampler.update_sigma_eps(&mut st, &mut rng).is_err());
    }
}
