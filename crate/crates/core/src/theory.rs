//! Computable theoretical properties of GP networks: the total-strength
//! convolution law, spectral-radius concentration experiments, the average
//! strength and dispersion-index formulas with their inverse solvers, the
//! lognormal-sum variance, and per-edge dispersion diagnostics.

use crate::error::{Error, Result};
use crate::gp::special::zeta_j0;
use crate::gp::{sample_raw, GpParams};
use crate::net::TemporalNetwork;
use crate::stats;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Expected value, variance, and dispersion index of a network strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthMoments {
    pub expected: f64,
    pub variance: f64,
    pub dispersion_index: f64,
}

impl StrengthMoments {
    pub fn of(params: &GpParams) -> Self {
        let (expected, variance) = params.mean_var();
        Self {
            expected,
            variance,
            dispersion_index: variance / expected,
        }
    }
}

/// The total strength of independent GP edges with a shared dispersion
/// parameter is itself GP: `sum_ij GP(lambda_ij, theta) ~ GP(sum lambda, theta)`.
pub fn total_strength_law(lambdas: &[f64], theta: f64) -> Result<GpParams> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter(
            "total_strength_law: need at least one edge intensity".into(),
        ));
    }
    GpParams::new(lambdas.iter().sum(), theta)
}

/// Conditional expected average strength per node pair,
/// `gamma exp(f_t) / (1 - theta)` with `gamma = exp(sigma_alpha2)` when the
/// factor is known at `t`, and `gamma exp(f_{t-1} + sigma_eps2/2) / (1 - theta)`
/// when it is one step ahead (`f_value` is then the lagged factor).
pub fn expected_avg_strength(
    sigma_alpha2: f64,
    theta: f64,
    f_value: f64,
    sigma_eps2: f64,
    f_known: bool,
) -> f64 {
    let gamma = sigma_alpha2.exp();
    let f_eff = if f_known { f_value } else { f_value + sigma_eps2 / 2.0 };
    gamma * f_eff.exp() / (1.0 - theta)
}

/// Conditional dispersion index of the network strength,
/// `1/(1-theta)^2 + 2 gamma (gamma - 1) (2N + gamma - 3) exp(f)` where the
/// exponent is `f_t` (factor known) or `f_{t-1} + sigma_eps2` (unknown).
///
/// The first term is the per-edge GP dispersion floor; the second collects
/// the heterogeneity of the lognormal node effects.
pub fn dispersion_index(
    sigma_alpha2: f64,
    theta: f64,
    f_value: f64,
    sigma_eps2: f64,
    n_nodes: usize,
    f_known: bool,
) -> f64 {
    let gamma = sigma_alpha2.exp();
    let f_eff = if f_known { f_value } else { f_value + sigma_eps2 };
    1.0 / ((1.0 - theta) * (1.0 - theta))
        + 2.0 * gamma * (gamma - 1.0) * (2.0 * n_nodes as f64 + gamma - 3.0) * f_eff.exp()
}

/// Conditional moments of the random cumulants of the average strength:
/// `E[(kappa^(j))^m] = exp(m^2 sigma_alpha2/2 + m f_t) (zeta_j0)^m` with an
/// extra `exp(m^2 sigma_eps2/2)` factor when the factor is unknown.
///
/// The sign convention follows the closed form of `zeta_j0`: the cumulants
/// of the strength are `-lambda_t * zeta_j0(theta, j)`, so odd orders carry
/// a negative sign here.
pub fn cumulant_moment(
    j: u32,
    m: u32,
    sigma_alpha2: f64,
    theta: f64,
    f_value: f64,
    sigma_eps2: f64,
    f_known: bool,
) -> Result<f64> {
    if m < 1 {
        return Err(Error::Range("cumulant_moment: need m >= 1".into()));
    }
    let z = zeta_j0(theta, j)?;
    let mf = m as f64;
    let mut log_scale = mf * mf * sigma_alpha2 / 2.0 + mf * f_value;
    if !f_known {
        log_scale += mf * mf * sigma_eps2 / 2.0;
    }
    Ok(log_scale.exp() * z.powi(m as i32))
}

/// Dense symmetric matrix with zero or user-set entries, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Build from row-major data, verifying symmetry.
    pub fn from_raw(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} entries for a {n}x{n} matrix",
                data.len()
            )));
        }
        let m = Self { n, data };
        for i in 0..n {
            for j in (i + 1)..n {
                if m.at(i, j) != m.at(j, i) {
                    return Err(Error::InvalidParameter(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Symmetric write.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    fn matvec(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    fn max_abs_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|x| x.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Largest absolute eigenvalue of a symmetric matrix.
///
/// Power iteration with Rayleigh-quotient convergence (tolerance `1e-10`)
/// applied to the Gershgorin-shifted matrices `A + cI` and `cI - A`, which
/// pins down the largest and smallest eigenvalues without sign ambiguity.
/// Stagnating runs restart from a fresh random vector.
pub fn spectral_radius(matrix: &SymMatrix) -> Result<f64> {
    let n = matrix.n;
    if n == 0 {
        return Err(Error::Dimension("spectral_radius: empty matrix".into()));
    }
    let c = matrix.max_abs_row_sum();
    if c == 0.0 {
        return Ok(0.0);
    }
    // Eigenvalues of A + cI are c + lambda_i >= 0; dominant one is c + lambda_max.
    let lam_max = shifted_dominant(matrix, c, 1.0)? - c;
    // Eigenvalues of cI - A are c - lambda_i >= 0; dominant one is c - lambda_min.
    let lam_min = c - shifted_dominant(matrix, c, -1.0)?;
    Ok(lam_max.abs().max(lam_min.abs()))
}

/// Dominant eigenvalue of `sign * A + c I` by power iteration.
fn shifted_dominant(a: &SymMatrix, c: f64, sign: f64) -> Result<f64> {
    let n = a.n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ca1c);
    let scale = c.max(1.0);
    let mut best = 0.0;
    for _restart in 0..6 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        normalize(&mut v);
        let mut av = vec![0.0; n];
        let mut rayleigh = 0.0;
        for _ in 0..100_000 {
            a.matvec(&v, &mut av);
            for i in 0..n {
                av[i] = sign * av[i] + c * v[i];
            }
            rayleigh = v.iter().zip(&av).map(|(x, y)| x * y).sum();
            let resid: f64 = av
                .iter()
                .zip(&v)
                .map(|(y, x)| (y - rayleigh * x) * (y - rayleigh * x))
                .sum::<f64>()
                .sqrt();
            let norm = normalize(&mut av);
            std::mem::swap(&mut v, &mut av);
            if norm == 0.0 {
                return Ok(0.0);
            }
            if resid <= 1e-10 * scale {
                return Ok(rayleigh);
            }
        }
        best = rayleigh;
    }
    // Eigenvalue clusters can keep the residual just above tolerance; the
    // Rayleigh quotient is still accurate to residual^2 / gap.
    Ok(best)
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Output of the spectral-radius concentration experiment.
#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    /// Number of nodes.
    pub n: usize,
    /// Per-replication deviations `|rho(Y) - rho(Lambda/(1-theta))|`.
    pub deviations: Vec<f64>,
    /// `max_i sum_j lambda_ij / (1-theta)^3`.
    pub v2: f64,
    /// `sqrt(v2 log N) + K log N` with `K` estimated from the
    /// sub-exponential constants of the largest edge intensities.
    pub bound_shape: f64,
    /// 95th percentile of the deviations.
    pub quantile95: f64,
    /// Spectral radius of the expectation matrix `Lambda/(1-theta)`.
    pub rho_expected: f64,
}

/// Simulate GP adjacency matrices with intensity matrix `lambda` and record
/// how the spectral radius concentrates around its expectation.
pub fn concentration_experiment(
    lambda: &SymMatrix,
    theta: f64,
    reps: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    let n = lambda.n();
    if n < 2 {
        return Err(Error::Dimension("need at least 2 nodes".into()));
    }
    if !(-1.0 < theta && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta={theta}")));
    }
    for i in 0..n {
        if lambda.at(i, i) != 0.0 {
            return Err(Error::InvalidParameter("diagonal must be zero".into()));
        }
        for j in 0..n {
            if lambda.at(i, j) < 0.0 {
                return Err(Error::InvalidParameter("intensities must be nonnegative".into()));
            }
        }
    }

    let expectation = lambda.scaled(1.0 / (1.0 - theta));
    let rho_expected = spectral_radius(&expectation)?;

    let mut v2: f64 = 0.0;
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| lambda.at(i, j)).sum();
        v2 = v2.max(s / (1.0 - theta).powi(3));
    }

    let k_est = orlicz_scale_estimate(lambda, theta)?;
    let log_n = (n as f64).ln();
    let bound_shape = (v2 * log_n).sqrt() + k_est * log_n;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deviations = Vec::with_capacity(reps);
    let mut y = SymMatrix::zeros(n);
    for _ in 0..reps {
        for i in 0..n {
            for j in (i + 1)..n {
                let l = lambda.at(i, j);
                let draw = if l > 0.0 { sample_raw(l, theta, &mut rng) } else { 0 };
                y.set(i, j, draw as f64);
            }
        }
        deviations.push((spectral_radius(&y)? - rho_expected).abs());
    }
    let mut sorted = deviations.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile95 = stats::quantile(&sorted, 0.95);
    Ok(ConcentrationReport {
        n,
        deviations,
        v2,
        bound_shape,
        quantile95,
        rho_expected,
    })
}

/// Estimate the sub-exponential scale `max_ij sqrt(v_ij) + b_ij` over the
/// distinct positive intensities of the matrix.
fn orlicz_scale_estimate(lambda: &SymMatrix, theta: f64) -> Result<f64> {
    let r = if theta > 0.0 {
        (theta - theta.ln() - 1.0) / 2.0
    } else {
        0.5
    };
    let mut distinct: Vec<f64> = Vec::new();
    for i in 0..lambda.n() {
        for j in (i + 1)..lambda.n() {
            let l = lambda.at(i, j);
            if l > 0.0 && !distinct.iter().any(|&x| x == l) {
                distinct.push(l);
            }
        }
    }
    let mut k: f64 = 0.0;
    for l in distinct {
        let (v, b) = GpParams::new(l, theta)?.subexp_constants(r)?;
        k = k.max(v.sqrt() + b);
    }
    Ok(k)
}

/// Variance of `sum_{i != j} X_i X_j` for iid lognormals
/// `X = exp(V)`, `V ~ N(0, sigma2)`:
/// `2 N (N-1) e^{2 sigma2} (e^{sigma2} - 1)(2N + e^{sigma2} - 3)`.
pub fn lognormal_sum_variance(n_nodes: usize, sigma2: f64) -> f64 {
    let n = n_nodes as f64;
    let e = sigma2.exp();
    2.0 * n * (n - 1.0) * (2.0 * sigma2).exp() * (e - 1.0) * (2.0 * n + e - 3.0)
}

/// Solve `dispersion_index(theta) = target_d` for `theta` in `(-1, 1)` by
/// bisection (the index is monotone increasing in `theta`). Returns `None`
/// when even `theta -> -1` overshoots the target, the regime where
/// underdispersion cannot be achieved.
pub fn theta_for_dispersion(
    sigma_alpha2: f64,
    target_d: f64,
    n_nodes: usize,
    f_value: f64,
) -> Option<f64> {
    if target_d <= 0.0 {
        return None;
    }
    let d = |theta: f64| dispersion_index(sigma_alpha2, theta, f_value, 0.0, n_nodes, true);
    bisect_increasing(d, target_d)
}

/// Solve `expected_avg_strength(theta) = target` for `theta` in `(-1, 1)`
/// by bisection. `None` when the strength at `theta -> -1` already exceeds
/// the target.
pub fn theta_for_strength(sigma_alpha2: f64, target: f64, f_value: f64) -> Option<f64> {
    if target <= 0.0 {
        return None;
    }
    let s = |theta: f64| expected_avg_strength(sigma_alpha2, theta, f_value, 0.0, true);
    bisect_increasing(s, target)
}

fn bisect_increasing<F: Fn(f64) -> f64>(f: F, target: f64) -> Option<f64> {
    let mut lo = -1.0 + 1e-12;
    let mut hi = 1.0 - 1e-12;
    if f(lo) > target || f(hi) < target {
        return None;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// One row of the per-edge dispersion diagnostic table.
#[derive(Debug, Clone)]
pub struct EdgeDispersionRow {
    pub i: usize,
    pub j: usize,
    /// Sub-period index: 0 for `t < split_index`, 1 otherwise.
    pub period: usize,
    pub mean: f64,
    pub variance: f64,
    pub log_mean: f64,
    pub log_variance: f64,
    pub log_dispersion: f64,
    /// Lag-1 sample autocorrelation of the edge series.
    pub acf1: f64,
    /// True when the edge is constant over the sub-period; the log fields
    /// are NaN in that case.
    pub degenerate: bool,
}

/// Per-edge log-mean vs log-variance and dispersion vs lag-1 autocorrelation
/// over two sub-periods split at `split_index`.
///
/// Masked entries are skipped; every edge needs at least 3 observed values
/// per sub-period. Edges with zero sample variance are flagged rather than
/// log-transformed.
pub fn dispersion_diagnostics(
    network: &TemporalNetwork,
    split_index: usize,
) -> Result<Vec<EdgeDispersionRow>> {
    let t_max = network.n_times();
    if split_index == 0 || split_index >= t_max {
        return Err(Error::Range(format!(
            "split index must lie strictly inside 1..{t_max}"
        )));
    }
    let mut rows = Vec::new();
    for (i, j) in network.pairs() {
        for (period, range) in [(0usize, 0..split_index), (1usize, split_index..t_max)] {
            let series: Vec<f64> = range
                .clone()
                .filter(|&t| network.is_observed(i, j, t))
                .map(|t| network.count(i, j, t) as f64)
                .collect();
            if series.len() < 3 {
                return Err(Error::InsufficientDraws(format!(
                    "edge ({i}, {j}) has {} observed values in sub-period {period}; need >= 3",
                    series.len()
                )));
            }
            let mean = stats::mean(&series);
            let variance = stats::variance(&series);
            let degenerate = variance == 0.0;
            let (log_mean, log_variance, log_dispersion) = if degenerate || mean == 0.0 {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                (mean.ln(), variance.ln(), (variance / mean).ln())
            };
            let acf1 = stats::autocorrelation(&series, 1);
            rows.push(EdgeDispersionRow {
                i,
                j,
                period,
                mean,
                variance,
                log_mean,
                log_variance,
                log_dispersion,
                acf1,
                degenerate,
            });
        }
    }
    Ok(rows)
}
