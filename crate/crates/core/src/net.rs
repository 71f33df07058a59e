//! Temporal-network data model, the three dynamic mean specifications, prior
//! hyperparameters, and the joint GP log-likelihood.
//!
//! The model classes share the edge intensity `log mu_ijt = alpha_i +
//! alpha_j + f_ijt` and differ in the time component:
//!
//! - M1 (latent factor): `f_ijt = f_t`, a Gaussian random walk.
//! - M2 (autoregressive): `f_ijt = sum_l delta_l log(ytilde_{t-l})` where
//!   `ytilde_s` is the lagged average strength per node pair.
//! - M3 (latent space): `f_ijt = f_t - ||x_it - x_jt||^2` with random-walk
//!   latent coordinates.
//!
//! Edge weights are conditionally `GP(mu_ijt rho^(-1/2), theta(zeta))` with
//! `rho = 1/4 + exp(zeta)` and `theta = 1 - rho^(-1/2)`.

use crate::error::{Error, Result};
use crate::gp::log_pmf_raw;

/// Map the unconstrained dispersion `zeta` to `(rho, theta)`:
/// `rho = 1/4 + exp(zeta)`, `theta = 1 - rho^(-1/2)`.
///
/// `zeta = log(3/4)` gives `(1, 0)`, the equal-dispersion (Poisson) point;
/// `zeta -> -inf` approaches `(1/4, -1)`.
pub fn theta_of_zeta(zeta: f64) -> (f64, f64) {
    let rho = 0.25 + zeta.exp();
    (rho, 1.0 - 1.0 / rho.sqrt())
}

/// The `zeta` value at which the GP likelihood reduces to Poisson.
pub const ZETA_POISSON: f64 = -0.287_682_072_451_780_9; // log(3/4)

/// An undirected count-weighted temporal network: an `N x N x T` symmetric
/// tensor of nonnegative integer weights plus an observation mask.
///
/// Diagonal entries are structurally absent; they are stored as zero and
/// never enter any likelihood sum.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalNetwork {
    n_nodes: usize,
    n_times: usize,
    counts: Vec<u64>,
    mask: Vec<bool>,
    labels: Vec<String>,
}

impl TemporalNetwork {
    /// An all-observed, all-zero network with default labels `1..=N`.
    pub fn new(n_nodes: usize, n_times: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::Dimension(format!(
                "network needs at least 2 nodes, got {n_nodes}"
            )));
        }
        if n_times < 1 {
            return Err(Error::Dimension("network needs at least 1 time slice".into()));
        }
        let len = n_nodes * n_nodes * n_times;
        Ok(Self {
            n_nodes,
            n_times,
            counts: vec![0; len],
            mask: vec![true; len],
            labels: (1..=n_nodes).map(|i| i.to_string()).collect(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn set_labels(&mut self, labels: Vec<String>) -> Result<()> {
        if labels.len() != self.n_nodes {
            return Err(Error::Dimension(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n_nodes
            )));
        }
        self.labels = labels;
        Ok(())
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, t: usize) -> usize {
        (t * self.n_nodes + i) * self.n_nodes + j
    }

    fn check(&self, i: usize, j: usize, t: usize) -> Result<()> {
        if i >= self.n_nodes || j >= self.n_nodes || t >= self.n_times {
            return Err(Error::Index(format!(
                "({i}, {j}, t={t}) in a {}x{}x{} network",
                self.n_nodes, self.n_nodes, self.n_times
            )));
        }
        if i == j {
            return Err(Error::Index(format!(
                "diagonal entry ({i}, {i}) is structurally absent"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn count(&self, i: usize, j: usize, t: usize) -> u64 {
        self.counts[self.idx(i, j, t)]
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize, t: usize) -> bool {
        self.mask[self.idx(i, j, t)]
    }

    /// Set a symmetric observed count.
    pub fn set_count(&mut self, i: usize, j: usize, t: usize, count: u64) -> Result<()> {
        self.check(i, j, t)?;
        let (a, b) = (self.idx(i, j, t), self.idx(j, i, t));
        self.counts[a] = count;
        self.counts[b] = count;
        self.mask[a] = true;
        self.mask[b] = true;
        Ok(())
    }

    /// Mark a symmetric entry as missing.
    pub fn set_missing(&mut self, i: usize, j: usize, t: usize) -> Result<()> {
        self.check(i, j, t)?;
        let (a, b) = (self.idx(i, j, t), self.idx(j, i, t));
        self.counts[a] = 0;
        self.counts[b] = 0;
        self.mask[a] = false;
        self.mask[b] = false;
        Ok(())
    }

    /// Unordered node pairs `(i, j)` with `j > i`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_nodes;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }

    /// Missing entries as `(i, j, t)` triples with `j > i`.
    pub fn missing_entries(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for t in 0..self.n_times {
            for (i, j) in self.pairs() {
                if !self.is_observed(i, j, t) {
                    out.push((i, j, t));
                }
            }
        }
        out
    }

    /// True when a slice has no missing entries.
    pub fn slice_fully_observed(&self, t: usize) -> bool {
        self.pairs().all(|(i, j)| self.is_observed(i, j, t))
    }
}

/// Average network strength at time `t`:
/// `S_t = N^(-1) sum_i sum_{j != i} y_ijt` (each unordered pair counted
/// twice in the double sum).
///
/// Errors on masked entries, directing the caller to imputation.
pub fn avg_strength(network: &TemporalNetwork, t: usize) -> Result<f64> {
    if t >= network.n_times() {
        return Err(Error::Index(format!("time {t} of {}", network.n_times())));
    }
    let mut sum = 0u64;
    for (i, j) in network.pairs() {
        if !network.is_observed(i, j, t) {
            return Err(Error::MaskedEntry { i, j, t });
        }
        sum += network.count(i, j, t);
    }
    Ok(2.0 * sum as f64 / network.n_nodes() as f64)
}

/// Which of the three dynamic specifications a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Latent local-level factor.
    M1,
    /// Autoregressive in lagged average strength.
    M2,
    /// Latent space with a common factor.
    M3,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::M1 => write!(f, "m1"),
            ModelKind::M2 => write!(f, "m2"),
            ModelKind::M3 => write!(f, "m3"),
        }
    }
}

/// Inverse-gamma prior hyperparameters `(a, b)`.
pub type IgPrior = (f64, f64);

/// Specification-specific structure and hyperparameters. Exactly the fields
/// of the chosen model class are present.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// M1: random-walk factor `f_t` with innovation variance `sigma_eps2`
    /// (inverse-gamma prior) and diffuse `f_1 ~ N(0, f0_prior_var)` anchor.
    Factor { ig_prior: IgPrior, f0_prior_var: f64 },
    /// M2: `k`-lag autoregression on the log lagged average strength, with
    /// pre-sample values of `log(ytilde_s)` for `s <= 0` supplied up front.
    Autoregressive {
        lags: usize,
        sigma_delta2: f64,
        presample: Vec<f64>,
    },
    /// M3: latent coordinates in `R^d` evolving as random walks with step
    /// covariance `sigma_x2 I_d`, plus the M1 factor block.
    LatentSpace {
        dim: usize,
        sigma_x2: f64,
        ig_prior: IgPrior,
        f0_prior_var: f64,
    },
}

/// A model class plus all prior hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub dynamics: Dynamics,
    /// Prior variance of the node effects `alpha_i ~ N(0, sigma_alpha2)`.
    pub sigma_alpha2: f64,
    /// Gaussian prior mean of the dispersion parameter `zeta`.
    pub mu_zeta: f64,
    /// Gaussian prior variance of `zeta`.
    pub sigma_zeta2: f64,
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self.dynamics {
            Dynamics::Factor { .. } => ModelKind::M1,
            Dynamics::Autoregressive { .. } => ModelKind::M2,
            Dynamics::LatentSpace { .. } => ModelKind::M3,
        }
    }

    /// M1 with default weakly informative priors: IG(2, 2) on `sigma_eps2`
    /// and a diffuse `f_1` anchor with variance 100.
    pub fn m1() -> Self {
        Self {
            dynamics: Dynamics::Factor {
                ig_prior: (2.0, 2.0),
                f0_prior_var: 100.0,
            },
            sigma_alpha2: 1.0,
            mu_zeta: 0.0,
            sigma_zeta2: 25.0,
        }
    }

    /// M2 with `k` lags; pre-sample log regressors default to 1.2.
    pub fn m2(lags: usize) -> Self {
        Self {
            dynamics: Dynamics::Autoregressive {
                lags,
                sigma_delta2: 1.0,
                presample: vec![1.2; lags],
            },
            sigma_alpha2: 1.0,
            mu_zeta: 0.0,
            sigma_zeta2: 25.0,
        }
    }

    /// M3 with latent dimension `d` and fixed coordinate step variance 0.25.
    pub fn m3(dim: usize) -> Self {
        Self {
            dynamics: Dynamics::LatentSpace {
                dim,
                sigma_x2: 0.25,
                ig_prior: (2.0, 2.0),
                f0_prior_var: 100.0,
            },
            sigma_alpha2: 1.0,
            mu_zeta: 0.0,
            sigma_zeta2: 25.0,
        }
    }

    pub fn validate(&self, network: &TemporalNetwork) -> Result<()> {
        if !(self.sigma_alpha2 > 0.0) || !(self.sigma_zeta2 > 0.0) {
            return Err(Error::InvalidParameter(
                "prior variances must be strictly positive".into(),
            ));
        }
        match &self.dynamics {
            Dynamics::Factor { ig_prior, f0_prior_var } => {
                if !(ig_prior.0 > 0.0 && ig_prior.1 > 0.0 && *f0_prior_var > 0.0) {
                    return Err(Error::InvalidParameter(
                        "factor priors must be strictly positive".into(),
                    ));
                }
            }
            Dynamics::Autoregressive {
                lags,
                sigma_delta2,
                presample,
            } => {
                if *lags < 1 {
                    return Err(Error::InvalidParameter("lag order must be >= 1".into()));
                }
                if *lags > network.n_times() {
                    return Err(Error::InvalidParameter(format!(
                        "lag order {} exceeds T = {}",
                        lags,
                        network.n_times()
                    )));
                }
                if !(*sigma_delta2 > 0.0) {
                    return Err(Error::InvalidParameter(
                        "sigma_delta2 must be strictly positive".into(),
                    ));
                }
                if presample.len() != *lags {
                    return Err(Error::Dimension(format!(
                        "{} pre-sample values for lag order {}",
                        presample.len(),
                        lags
                    )));
                }
            }
            Dynamics::LatentSpace {
                dim,
                sigma_x2,
                ig_prior,
                f0_prior_var,
            } => {
                if *dim < 1 {
                    return Err(Error::InvalidParameter("latent dimension must be >= 1".into()));
                }
                if !(*sigma_x2 > 0.0 && ig_prior.0 > 0.0 && ig_prior.1 > 0.0 && *f0_prior_var > 0.0)
                {
                    return Err(Error::InvalidParameter(
                        "latent-space priors must be strictly positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One point in parameter space. Fields not used by the owning model kind
/// stay empty (`f`, `delta`, `x`) or `None` (`sigma_eps2`).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamState {
    /// Node effects, length `N`.
    pub alpha: Vec<f64>,
    /// Latent factor path, length `T` (M1/M3).
    pub f: Vec<f64>,
    /// Autoregressive coefficients, length `k` (M2).
    pub delta: Vec<f64>,
    /// Latent coordinates, `T x N x d` row-major (M3).
    pub x: Vec<f64>,
    /// Unconstrained dispersion.
    pub zeta: f64,
    /// Factor innovation variance (M1/M3).
    pub sigma_eps2: Option<f64>,
}

impl ParamState {
    /// The all-zero state of the correct shape for `spec` and `network`,
    /// with `zeta` at the prior mean and `sigma_eps2` at the prior mean of
    /// its inverse-gamma law (or `b/a` when that mean does not exist).
    pub fn zeroed(spec: &ModelSpec, network: &TemporalNetwork) -> Self {
        let n = network.n_nodes();
        let t = network.n_times();
        let (f, delta, x, sigma_eps2) = match &spec.dynamics {
            Dynamics::Factor { ig_prior, .. } => {
                (vec![0.0; t], Vec::new(), Vec::new(), Some(ig_mean(*ig_prior)))
            }
            Dynamics::Autoregressive { lags, .. } => {
                (Vec::new(), vec![0.0; *lags], Vec::new(), None)
            }
            Dynamics::LatentSpace { dim, ig_prior, .. } => (
                vec![0.0; t],
                Vec::new(),
                vec![0.0; t * n * dim],
                Some(ig_mean(*ig_prior)),
            ),
        };
        Self {
            alpha: vec![0.0; n],
            f,
            delta,
            x,
            zeta: spec.mu_zeta,
            sigma_eps2,
        }
    }

    /// Latent coordinate vector of node `i` at time `t`.
    #[inline]
    pub fn x_at(&self, t: usize, i: usize, n_nodes: usize, dim: usize) -> &[f64] {
        let base = (t * n_nodes + i) * dim;
        &self.x[base..base + dim]
    }

    pub fn validate(&self, spec: &ModelSpec, network: &TemporalNetwork) -> Result<()> {
        let n = network.n_nodes();
        let t = network.n_times();
        if self.alpha.len() != n {
            return Err(Error::Dimension(format!(
                "alpha has length {}, expected {n}",
                self.alpha.len()
            )));
        }
        if !self.zeta.is_finite() {
            return Err(Error::InvalidParameter("zeta must be finite".into()));
        }
        match &spec.dynamics {
            Dynamics::Factor { .. } => {
                if self.f.len() != t {
                    return Err(Error::Dimension(format!(
                        "f has length {}, expected {t}",
                        self.f.len()
                    )));
                }
                if !matches!(self.sigma_eps2, Some(v) if v > 0.0) {
                    return Err(Error::InvalidParameter(
                        "sigma_eps2 must be present and positive for M1".into(),
                    ));
                }
            }
            Dynamics::Autoregressive { lags, .. } => {
                if self.delta.len() != *lags {
                    return Err(Error::Dimension(format!(
                        "delta has length {}, expected {lags}",
                        self.delta.len()
                    )));
                }
            }
            Dynamics::LatentSpace { dim, .. } => {
                if self.f.len() != t {
                    return Err(Error::Dimension(format!(
                        "f has length {}, expected {t}",
                        self.f.len()
                    )));
                }
                if self.x.len() != t * n * dim {
                    return Err(Error::Dimension(format!(
                        "x has length {}, expected {}",
                        self.x.len(),
                        t * n * dim
                    )));
                }
                if !matches!(self.sigma_eps2, Some(v) if v > 0.0) {
                    return Err(Error::InvalidParameter(
                        "sigma_eps2 must be present and positive for M3".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn ig_mean((a, b): IgPrior) -> f64 {
    if a > 1.0 {
        b / (a - 1.0)
    } else {
        b / a
    }
}

/// The time component of the log mean at each slice: `f_t` for M1/M3 and
/// the autoregressive combination of lagged log average strengths for M2.
pub(crate) fn time_effects(
    spec: &ModelSpec,
    state: &ParamState,
    network: &TemporalNetwork,
) -> Result<Vec<f64>> {
    match &spec.dynamics {
        Dynamics::Factor { .. } | Dynamics::LatentSpace { .. } => Ok(state.f.clone()),
        Dynamics::Autoregressive { lags, presample, .. } => {
            let regs = m2_log_regressors(network, presample, *lags)?;
            Ok(regs
                .iter()
                .map(|w| w.iter().zip(&state.delta).map(|(r, d)| r * d).sum())
                .collect())
        }
    }
}

/// Lagged log-regressors for M2: `w[t][l-1] = log(ytilde_{t-l})` with
/// `ytilde_s = S_s / (N - 1)` and pre-sample values for `s <= 0`.
pub(crate) fn m2_log_regressors(
    network: &TemporalNetwork,
    presample: &[f64],
    lags: usize,
) -> Result<Vec<Vec<f64>>> {
    let t_max = network.n_times();
    // log(ytilde_s) for observed slices, 0-based.
    let mut log_y = Vec::with_capacity(t_max);
    // Slices beyond t_max - 1 are never referenced as regressors of
    // in-sample times, so a masked final slice is fine.
    let needed = t_max.saturating_sub(1);
    for s in 0..t_max {
        if s < needed {
            let s_bar = avg_strength(network, s)?;
            let ytilde = s_bar / (network.n_nodes() as f64 - 1.0);
            if ytilde <= 0.0 {
                return Err(Error::Likelihood(format!(
                    "average strength at time {} is zero; its log regressor is undefined",
                    s + 1
                )));
            }
            log_y.push(ytilde.ln());
        } else {
            log_y.push(f64::NAN); // never read
        }
    }
    let mut regs = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let mut w = Vec::with_capacity(lags);
        for l in 1..=lags {
            if t >= l {
                w.push(log_y[t - l]);
            } else {
                // Paper time t+1 minus lag l is <= 0: pre-sample value for
                // ytilde_{t+1-l}, stored as presample[l-t-1].
                w.push(presample[l - t - 1]);
            }
        }
        regs.push(w);
    }
    Ok(regs)
}

/// Squared Euclidean distance between latent coordinates of `i` and `j`.
#[inline]
pub(crate) fn sq_dist(state: &ParamState, t: usize, i: usize, j: usize, n: usize, d: usize) -> f64 {
    let xi = state.x_at(t, i, n, d);
    let xj = state.x_at(t, j, n, d);
    xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Log mean intensity for one (i, j, t) given the precomputed time effect.
#[inline]
pub(crate) fn pair_log_mu(
    spec: &ModelSpec,
    state: &ParamState,
    network: &TemporalNetwork,
    i: usize,
    j: usize,
    t: usize,
    f_eff_t: f64,
) -> f64 {
    let base = state.alpha[i] + state.alpha[j] + f_eff_t;
    match &spec.dynamics {
        Dynamics::LatentSpace { dim, .. } => {
            base - sq_dist(state, t, i, j, network.n_nodes(), *dim)
        }
        _ => base,
    }
}

/// Time effect at a single slice, touching only the lagged slices the
/// autoregressive kind actually references for that `t`.
fn time_effect_at(
    spec: &ModelSpec,
    state: &ParamState,
    network: &TemporalNetwork,
    t: usize,
) -> Result<f64> {
    match &spec.dynamics {
        Dynamics::Factor { .. } | Dynamics::LatentSpace { .. } => Ok(state.f[t]),
        Dynamics::Autoregressive { lags, presample, .. } => {
            let mut f = 0.0;
            for l in 1..=*lags {
                let reg = if t >= l {
                    let s_bar = avg_strength(network, t - l)?;
                    let ytilde = s_bar / (network.n_nodes() as f64 - 1.0);
                    if ytilde <= 0.0 {
                        return Err(Error::Likelihood(format!(
                            "average strength at time {} is zero; its log regressor is undefined",
                            t - l + 1
                        )));
                    }
                    ytilde.ln()
                } else {
                    presample[l - t - 1]
                };
                f += state.delta[l - 1] * reg;
            }
            Ok(f)
        }
    }
}

/// Mean intensity `mu_ijt` under the given specification.
///
/// M1: `exp(alpha_i + alpha_j + f_t)`;
/// M2: `exp(alpha_i + alpha_j + sum_l delta_l log(ytilde_{t-l}))`;
/// M3: `exp(alpha_i + alpha_j + f_t - ||x_it - x_jt||^2)`.
pub fn mean_intensity(
    spec: &ModelSpec,
    state: &ParamState,
    network: &TemporalNetwork,
    i: usize,
    j: usize,
    t: usize,
) -> Result<f64> {
    network.check(i, j, t)?;
    state.validate(spec, network)?;
    let f_eff = time_effect_at(spec, state, network, t)?;
    Ok(pair_log_mu(spec, state, network, i, j, t, f_eff).exp())
}

/// Joint GP log-likelihood over observed unordered pairs:
/// `sum_t sum_{j>i, observed} log GP(y_ijt | mu_ijt rho^(-1/2), theta(zeta))`.
///
/// Masked entries contribute zero. Returns `-infinity` (not an error) when
/// an observed count exceeds a negative-theta truncation bound.
pub fn log_likelihood(
    spec: &ModelSpec,
    state: &ParamState,
    network: &TemporalNetwork,
) -> Result<f64> {
    state.validate(spec, network)?;
    let f_eff = time_effects(spec, state, network)?;
    let (rho, theta) = theta_of_zeta(state.zeta);
    let inv_sqrt_rho = 1.0 / rho.sqrt();
    let mut total = 0.0;
    for t in 0..network.n_times() {
        for (i, j) in network.pairs() {
            if !network.is_observed(i, j, t) {
                continue;
            }
            let mu = pair_log_mu(spec, state, network, i, j, t, f_eff[t]).exp();
            total += log_pmf_raw(mu * inv_sqrt_rho, theta, network.count(i, j, t));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GpParams;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::ln_gamma;

    fn random_network(n: usize, t: usize, seed: u64) -> TemporalNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = TemporalNetwork::new(n, t).unwrap();
        for tt in 0..t {
            let pairs: Vec<(usize, usize)> = net.pairs().collect();
            for (i, j) in pairs {
                net.set_count(i, j, tt, rng.random_range(0..12)).unwrap();
            }
        }
        net
    }

    #[test]
    fn theta_of_zeta_reference_points() {
        let (rho, theta) = theta_of_zeta(3.0);
        assert!((rho - 20.3355).abs() < 1e-3, "rho={rho}");
        assert!((theta - 0.7782).abs() < 1e-3, "theta={theta}");
        // Equal-dispersion point is exact.
        let (rho, theta) = theta_of_zeta(ZETA_POISSON);
        assert_eq!(rho, 1.0);
        assert_eq!(theta, 0.0);
        // zeta -> -inf boundary.
        let (rho, theta) = theta_of_zeta(-700.0);
        assert!((rho - 0.25).abs() < 1e-12);
        assert!((theta + 1.0).abs() < 1e-12);
    }

    #[test]
    fn network_symmetry_and_diagonal() {
        let mut net = TemporalNetwork::new(3, 2).unwrap();
        net.set_count(0, 2, 1, 7).unwrap();
        assert_eq!(net.count(2, 0, 1), 7);
        assert!(net.set_count(1, 1, 0, 3).is_err());
        assert!(net.set_count(0, 3, 0, 3).is_err());
        net.set_missing(0, 1, 0).unwrap();
        assert!(!net.is_observed(1, 0, 0));
        assert_eq!(net.missing_entries(), vec![(0, 1, 0)]);
    }

    #[test]
    fn avg_strength_hand_sum() {
        // N=3 slice with pairs (1,2)=2, (1,3)=4, (2,3)=6: double sum is
        // 2*(2+4+6) = 24, so S = 24/3 = 8.
        let mut net = TemporalNetwork::new(3, 1).unwrap();
        net.set_count(0, 1, 0, 2).unwrap();
        net.set_count(0, 2, 0, 4).unwrap();
        net.set_count(1, 2, 0, 6).unwrap();
        assert_eq!(avg_strength(&net, 0).unwrap(), 8.0);
    }

    #[test]
    fn avg_strength_uniform_and_empty() {
        let mut net = TemporalNetwork::new(5, 1).unwrap();
        assert_eq!(avg_strength(&net, 0).unwrap(), 0.0);
        let pairs: Vec<_> = net.pairs().collect();
        for (i, j) in pairs {
            net.set_count(i, j, 0, 3).unwrap();
        }
        // All off-diagonal counts c give (N-1) c.
        assert_eq!(avg_strength(&net, 0).unwrap(), 12.0);
        net.set_missing(0, 1, 0).unwrap();
        assert!(matches!(
            avg_strength(&net, 0),
            Err(Error::MaskedEntry { i: 0, j: 1, t: 0 })
        ));
    }

    #[test]
    fn avg_strength_scales_linearly() {
        let net = random_network(6, 3, 5);
        let mut scaled = net.clone();
        let pairs: Vec<_> = net.pairs().collect();
        for t in 0..3 {
            for &(i, j) in &pairs {
                scaled.set_count(i, j, t, 4 * net.count(i, j, t)).unwrap();
            }
        }
        for t in 0..3 {
            let a = avg_strength(&net, t).unwrap();
            let b = avg_strength(&scaled, t).unwrap();
            assert!((b - 4.0 * a).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_intensity_cases() {
        let net = TemporalNetwork::new(4, 2).unwrap();
        // All parameters zero: mu = 1 for every kind.
        let spec1 = ModelSpec::m1();
        let st1 = ParamState::zeroed(&spec1, &net);
        assert_eq!(mean_intensity(&spec1, &st1, &net, 0, 1, 0).unwrap(), 1.0);

        let spec3 = ModelSpec::m3(2);
        let mut st3 = ParamState::zeroed(&spec3, &net);
        st3.alpha = vec![0.1, -0.2, 0.3, 0.0];
        st3.f = vec![0.5, -0.5];
        // Coinciding coordinates reduce M3 to M1 at the same (alpha, f).
        let spec1b = ModelSpec::m1();
        let mut st1b = ParamState::zeroed(&spec1b, &net);
        st1b.alpha = st3.alpha.clone();
        st1b.f = st3.f.clone();
        let a = mean_intensity(&spec3, &st3, &net, 1, 2, 1).unwrap();
        let b = mean_intensity(&spec1b, &st1b, &net, 1, 2, 1).unwrap();
        assert!((a - b).abs() < 1e-15);

        // M2 with delta = (0.7, 0.1) and unit pre-sample log regressors.
        let mut spec2 = ModelSpec::m2(2);
        if let Dynamics::Autoregressive { presample, .. } = &mut spec2.dynamics {
            *presample = vec![1.0, 1.0];
        }
        let mut st2 = ParamState::zeroed(&spec2, &net);
        st2.delta = vec![0.7, 0.1];
        let mu = mean_intensity(&spec2, &st2, &net, 0, 1, 0).unwrap();
        assert!((mu - 0.8f64.exp()).abs() < 1e-12);

        assert!(mean_intensity(&spec1, &st1, &net, 1, 1, 0).is_err());
    }

    #[test]
    fn likelihood_single_edge_matches_gp() {
        let mut net = TemporalNetwork::new(2, 1).unwrap();
        net.set_count(0, 1, 0, 5).unwrap();
        let spec = ModelSpec::m1();
        let mut st = ParamState::zeroed(&spec, &net);
        st.alpha = vec![0.2, -0.1];
        st.f = vec![0.4];
        st.zeta = 1.3;
        let (rho, theta) = theta_of_zeta(st.zeta);
        let mu = (0.2f64 - 0.1 + 0.4).exp();
        let gp = GpParams::new(mu / rho.sqrt(), theta).unwrap();
        let ll = log_likelihood(&spec, &st, &net).unwrap();
        assert!((ll - gp.log_pmf(5)).abs() < 1e-13);
    }

    #[test]
    fn likelihood_poisson_at_equal_dispersion() {
        // zeta = log(3/4) makes the model exactly Poisson with rate mu.
        let net = random_network(5, 3, 9);
        let spec = ModelSpec::m1();
        let mut st = ParamState::zeroed(&spec, &net);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for a in st.alpha.iter_mut() {
            *a = rng.random::<f64>() - 0.5;
        }
        for f in st.f.iter_mut() {
            *f = rng.random::<f64>() - 0.5;
        }
        st.zeta = ZETA_POISSON;
        let ll = log_likelihood(&spec, &st, &net).unwrap();
        // Independent Poisson oracle.
        let mut oracle = 0.0;
        for t in 0..3 {
            for (i, j) in net.pairs() {
                let mu = (st.alpha[i] + st.alpha[j] + st.f[t]).exp();
                let y = net.count(i, j, t) as f64;
                oracle += y * mu.ln() - mu - ln_gamma(y + 1.0);
            }
        }
        assert!((ll - oracle).abs() < 1e-10, "{ll} vs {oracle}");
    }

    #[test]
    fn likelihood_all_masked_is_zero() {
        let mut net = random_network(4, 2, 2);
        let pairs: Vec<_> = net.pairs().collect();
        for t in 0..2 {
            for &(i, j) in &pairs {
                net.set_missing(i, j, t).unwrap();
            }
        }
        let spec = ModelSpec::m1();
        let st = ParamState::zeroed(&spec, &net);
        assert_eq!(log_likelihood(&spec, &st, &net).unwrap(), 0.0);
    }

    #[test]
    fn likelihood_invariant_under_node_permutation() {
        let net = random_network(5, 2, 13);
        let spec = ModelSpec::m3(2);
        let mut st = ParamState::zeroed(&spec, &net);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for a in st.alpha.iter_mut() {
            *a = rng.random::<f64>() - 0.5;
        }
        for f in st.f.iter_mut() {
            *f = rng.random::<f64>() - 0.5;
        }
        for x in st.x.iter_mut() {
            *x = rng.random::<f64>() - 0.5;
        }
        st.zeta = 0.8;
        let base = log_likelihood(&spec, &st, &net).unwrap();

        // Permute node labels and permute alpha / rows of x identically.
        let perm = [2usize, 0, 4, 1, 3];
        let mut pnet = TemporalNetwork::new(5, 2).unwrap();
        for t in 0..2 {
            for (i, j) in net.pairs() {
                pnet.set_count(perm[i], perm[j], t, net.count(i, j, t)).unwrap();
            }
        }
        let mut pst = st.clone();
        for i in 0..5 {
            pst.alpha[perm[i]] = st.alpha[i];
            for t in 0..2 {
                for k in 0..2 {
                    pst.x[(t * 5 + perm[i]) * 2 + k] = st.x[(t * 5 + i) * 2 + k];
                }
            }
        }
        let permuted = log_likelihood(&spec, &pst, &pnet).unwrap();
        assert!((base - permuted).abs() < 1e-10);
    }

    #[test]
    fn likelihood_m1_shift_invariance() {
        // (alpha, f) -> (alpha + c, f - 2c) leaves the likelihood unchanged.
        let net = random_network(6, 4, 21);
        let spec = ModelSpec::m1();
        let mut st = ParamState::zeroed(&spec, &net);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for a in st.alpha.iter_mut() {
            *a = rng.random::<f64>() - 0.5;
        }
        for f in st.f.iter_mut() {
            *f = rng.random::<f64>() - 0.5;
        }
        st.zeta = 2.0;
        let base = log_likelihood(&spec, &st, &net).unwrap();
        for c in [-0.7, 0.3, 1.9] {
            let mut shifted = st.clone();
            for a in shifted.alpha.iter_mut() {
                *a += c;
            }
            for f in shifted.f.iter_mut() {
                *f -= 2.0 * c;
            }
            let ll = log_likelihood(&spec, &shifted, &net).unwrap();
            assert!((ll - base).abs() < 1e-9, "c={c}: {ll} vs {base}");
        }
    }

    #[test]
    fn likelihood_m3_isometry_invariance() {
        let net = random_network(5, 3, 31);
        let spec = ModelSpec::m3(2);
        let mut st = ParamState::zeroed(&spec, &net);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for a in st.alpha.iter_mut() {
            *a = rng.random::<f64>() - 0.5;
        }
        for f in st.f.iter_mut() {
            *f = rng.random::<f64>() - 0.5;
        }
        for x in st.x.iter_mut() {
            *x = rng.random::<f64>() - 0.5;
        }
        st.zeta = 1.0;
        let base = log_likelihood(&spec, &st, &net).unwrap();

        // Common rotation + translation per time slice.
        let mut moved = st.clone();
        for t in 0..3 {
            let phi = 0.3 + 0.5 * t as f64;
            let (c, s) = (phi.cos(), phi.sin());
            let (dx, dy) = (1.5 - t as f64, -0.4);
            for i in 0..5 {
                let b = (t * 5 + i) * 2;
                let (x, y) = (st.x[b], st.x[b + 1]);
                moved.x[b] = c * x - s * y + dx;
                moved.x[b + 1] = s * x + c * y + dy;
            }
        }
        let ll = log_likelihood(&spec, &moved, &net).unwrap();
        assert!((ll - base).abs() < 1e-9);
    }

    #[test]
    fn m2_regressors_use_presample_then_data() {
        let mut net = TemporalNetwork::new(3, 3).unwrap();
        let pairs: Vec<_> = net.pairs().collect();
        for t in 0..3 {
            for &(i, j) in &pairs {
                net.set_count(i, j, t, (t as u64 + 1) * 3).unwrap();
            }
        }
        // ytilde_t = S_t/(N-1) = (N-1)c_t/(N-1) = c_t = 3(t+1).
        let regs = m2_log_regressors(&net, &[1.2, 0.9], 2).unwrap();
        assert_eq!(regs.len(), 3);
        assert_eq!(regs[0], vec![1.2, 0.9]);
        assert_eq!(regs[1], vec![3.0f64.ln(), 1.2]);
        assert_eq!(regs[2], vec![6.0f64.ln(), 3.0f64.ln()]);
    }

    #[test]
    fn state_validation_catches_shape_errors() {
        let net = TemporalNetwork::new(4, 2).unwrap();
        let spec = ModelSpec::m3(2);
        let mut st = ParamState::zeroed(&spec, &net);
        st.x.pop();
        assert!(st.validate(&spec, &net).is_err());
        let spec2 = ModelSpec::m2(3);
        assert!(spec2.validate(&net).is_err()); // k > T
    }
}
