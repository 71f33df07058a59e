//! Posterior predictive machinery: average-strength bands, missing-edge
//! imputation, and the calibration metric suite (MAE/MSE/RMSE, interval
//! coverage and width, and randomized-PIT tail probabilities).

use crate::error::{Error, Result};
use crate::gp::sample_raw;
use crate::net::{pair_log_mu, theta_of_zeta, time_effects, ModelSpec, TemporalNetwork};
use crate::sampler::ChainOutput;
use crate::stats;
use rand::Rng;

/// Simulated predictive values, one sequence per target, with one value
/// per retained posterior draw.
#[derive(Debug, Clone)]
pub struct PredictiveDraws {
    /// Target entries as `(i, j, t)` with `j > i`.
    pub targets: Vec<(usize, usize, usize)>,
    /// `values[k]` holds the per-draw simulated counts for target `k`.
    pub values: Vec<Vec<u64>>,
}

/// Per-time posterior predictive band of the average strength.
#[derive(Debug, Clone, Copy)]
pub struct StrengthBand {
    pub t: usize,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Simulate a full network slice per retained draw and report the
/// across-draw mean and equal-tail 95% band of the average strength at
/// each time.
pub fn posterior_predictive_strength<R: Rng + ?Sized>(
    chain: &ChainOutput,
    spec: &ModelSpec,
    network: &TemporalNetwork,
    rng: &mut R,
) -> Result<Vec<StrengthBand>> {
    if chain.draws.is_empty() {
        return Err(Error::InsufficientDraws("empty chain".into()));
    }
    let n = network.n_nodes();
    let t_len = network.n_times();
    let pairs: Vec<(usize, usize)> = network.pairs().collect();
    let mut strengths: Vec<Vec<f64>> = vec![Vec::with_capacity(chain.draws.len()); t_len];
    for draw in &chain.draws {
        let f_eff = time_effects(spec, draw, network)?;
        let (rho, theta) = theta_of_zeta(draw.zeta);
        let isr = 1.0 / rho.sqrt();
        for t in 0..t_len {
            let mut total = 0u64;
            for &(i, j) in &pairs {
                let mu = pair_log_mu(spec, draw, network, i, j, t, f_eff[t]).exp();
                total += sample_raw(mu * isr, theta, rng);
            }
            strengths[t].push(2.0 * total as f64 / n as f64);
        }
    }
    Ok(strengths
        .into_iter()
        .enumerate()
        .map(|(t, mut s)| {
            let mean = stats::mean(&s);
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            StrengthBand {
                t,
                mean,
                lower: stats::quantile(&s, 0.025),
                upper: stats::quantile(&s, 0.975),
            }
        })
        .collect())
}

/// Posterior predictive draws for every masked entry: one GP variate per
/// retained draw at that draw's `mu_ijt`, `rho`, `theta`.
pub fn impute_missing<R: Rng + ?Sized>(
    chain: &ChainOutput,
    spec: &ModelSpec,
    network: &TemporalNetwork,
    rng: &mut R,
) -> Result<PredictiveDraws> {
    let targets = network.missing_entries();
    if targets.is_empty() {
        return Err(Error::NoMissingEntries);
    }
    if chain.draws.is_empty() {
        return Err(Error::InsufficientDraws("empty chain".into()));
    }
    let mut values = vec![Vec::with_capacity(chain.draws.len()); targets.len()];
    for draw in &chain.draws {
        let f_eff = time_effects(spec, draw, network)?;
        let (rho, theta) = theta_of_zeta(draw.zeta);
        let isr = 1.0 / rho.sqrt();
        for (k, &(i, j, t)) in targets.iter().enumerate() {
            let mu = pair_log_mu(spec, draw, network, i, j, t, f_eff[t]).exp();
            values[k].push(sample_raw(mu * isr, theta, rng));
        }
    }
    Ok(PredictiveDraws { targets, values })
}

/// The calibration metric suite over a set of predictive targets.
#[derive(Debug, Clone, Copy)]
pub struct MetricReport {
    /// Mean absolute error of the predictive means.
    pub mae: f64,
    /// Mean squared error of the predictive means.
    pub mse: f64,
    /// `sqrt(mse)`.
    pub rmse: f64,
    /// Fraction of truths inside the equal-tail 95% predictive interval.
    pub coverage: f64,
    /// Average width of those intervals.
    pub awi: f64,
    /// Mean of the randomized predictive tail probabilities.
    pub mtp: f64,
    /// Variance of the randomized predictive tail probabilities.
    pub vtp: f64,
    /// Proportion of extreme observations: truths outside the same 95%
    /// interval, so `coverage + pe = 1`.
    pub pe: f64,
}

/// Score predictive draws against the realized truths.
///
/// The tail probability of a discrete predictive law is the randomized
/// probability integral transform `u = F(y-1) + v p(y)` with `v` uniform
/// and `F`, `p` the empirical predictive CDF and pmf; under perfect
/// calibration `u` is uniform with mean 1/2 and variance 1/12.
pub fn predictive_metrics<R: Rng + ?Sized>(
    truths: &[u64],
    draws: &PredictiveDraws,
    rng: &mut R,
) -> Result<MetricReport> {
    if truths.len() != draws.targets.len() {
        return Err(Error::Dimension(format!(
            "{} truths for {} targets",
            truths.len(),
            draws.targets.len()
        )));
    }
    if draws.values.iter().any(|v| v.len() < 100) {
        return Err(Error::InsufficientDraws(
            "predictive metrics need at least 100 draws per target".into(),
        ));
    }
    let n_targets = truths.len() as f64;
    let mut mae = 0.0;
    let mut mse = 0.0;
    let mut covered = 0usize;
    let mut awi = 0.0;
    let mut pits = Vec::with_capacity(truths.len());
    for (values, &truth) in draws.values.iter().zip(truths) {
        let m = values.len() as f64;
        let mean = values.iter().map(|&v| v as f64).sum::<f64>() / m;
        let err = mean - truth as f64;
        mae += err.abs();
        mse += err * err;

        let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lower = stats::quantile(&sorted, 0.025);
        let upper = stats::quantile(&sorted, 0.975);
        if (truth as f64) >= lower && (truth as f64) <= upper {
            covered += 1;
        }
        awi += upper - lower;

        // Empirical CDF strictly below the truth and pmf at the truth.
        let below = values.iter().filter(|&&v| v < truth).count() as f64 / m;
        let at = values.iter().filter(|&&v| v == truth).count() as f64 / m;
        let v: f64 = rng.random();
        pits.push(below + v * at);
    }
    let coverage = covered as f64 / n_targets;
    let mse = mse / n_targets;
    Ok(MetricReport {
        mae: mae / n_targets,
        mse,
        rmse: mse.sqrt(),
        coverage,
        awi: awi / n_targets,
        mtp: stats::mean(&pits),
        vtp: stats::variance(&pits),
        pe: 1.0 - coverage,
    })
}

/// The randomized PIT values alone, for calibration tests over many
/// targets.
pub fn randomized_pit<R: Rng + ?Sized>(
    truths: &[u64],
    draws: &PredictiveDraws,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if truths.len() != draws.targets.len() {
        return Err(Error::Dimension("one truth per target".into()));
    }
    let mut pits = Vec::with_capacity(truths.len());
    for (values, &truth) in draws.values.iter().zip(truths) {
        let m = values.len() as f64;
        let below = values.iter().filter(|&&v| v < truth).count() as f64 / m;
        let at = values.iter().filter(|&&v| v == truth).count() as f64 / m;
        let v: f64 = rng.random();
        pits.push(below + v * at);
    }
    Ok(pits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GpParams;
    use crate::net::{ModelSpec, ParamState};
    use crate::sampler::{AcceptanceRates, SamplerConfig};
    use crate::stats::{chi_square_gof, ks_test};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// A chain degenerate at one known state, repeated `reps` times.
    fn degenerate_chain(state: ParamState, reps: usize) -> ChainOutput {
        ChainOutput {
            draws: vec![state; reps],
            loglik: vec![0.0; reps],
            acceptance: AcceptanceRates {
                alpha: f64::NAN,
                delta: f64::NAN,
                f: f64::NAN,
                x: f64::NAN,
                zeta: f64::NAN,
            },
            config: SamplerConfig::new(2, 1, 1, 0),
        }
    }

    #[test]
    fn strength_band_centers_on_generative_expectation() {
        // Degenerate chain at alpha = 0, f known: the predictive mean of
        // the average strength is (N-1) e^f per time.
        let n = 8usize;
        let net = TemporalNetwork::new(n, 2).unwrap();
        let spec = ModelSpec::m1();
        let mut st = ParamState::zeroed(&spec, &net);
        st.f = vec![0.4, -0.2];
        st.zeta = 1.0;
        let chain = degenerate_chain(st, 4000);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bands = posterior_predictive_strength(&chain, &spec, &net, &mut rng).unwrap();
        assert_eq!(bands.len(), 2);
        for band in &bands {
            let expect = (n as f64 - 1.0) * st_f(band.t).exp();
            // Monte Carlo error of the mean across 4000 slice simulations.
            let (rho, _) = theta_of_zeta(1.0);
            let edge_var = expect / (n as f64 - 1.0) * rho;
            let se = (edge_var * 2.0 * (n as f64 - 1.0) / n as f64 / 4000.0).sqrt() * n as f64;
            assert!(
                (band.mean - expect).abs() < 5.0 * se + 0.05 * expect,
                "t={}: {} vs {expect}",
                band.t,
                band.mean
            );
            assert!(band.lower <= band.mean && band.mean <= band.upper);
        }
        fn st_f(t: usize) -> f64 {
            [0.4, -0.2][t]
        }
    }

    #[test]
    fn poisson_draw_has_equal_predictive_mean_and_variance() {
        let n = 6usize;
        let net = TemporalNetwork::new(n, 1).unwrap();
        let spec = ModelSpec::m1();
        let mut st = ParamState::zeroed(&spec, &net);
        st.f = vec![1.2];
        st.zeta = crate::net::ZETA_POISSON;
        let chain = degenerate_chain(st, 6000);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Use a single masked edge as the predictive target.
        let mut masked = net.clone();
        masked.set_missing(0, 1, 0).unwrap();
        let draws = impute_missing(&chain, &spec, &masked, &mut rng).unwrap();
        let vals: Vec<f64> = draws.values[0].iter().map(|&v| v as f64).collect();
        let mean = stats::mean(&vals);
        let var = stats::variance(&vals);
        let mu = 1.2f64.exp();
        let se = (mu / vals.len() as f64).sqrt();
        assert!((mean - mu).abs() < 4.0 * se);
        assert!((var - mu).abs() < 0.1 * mu);
    }

    #[test]
    fn imputation_without_missing_entries_errors() {
        let net = TemporalNetwork::new(4, 1).unwrap();
        let spec = ModelSpec::m1();
        let st = ParamState::zeroed(&spec, &net);
        let chain = degenerate_chain(st, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            impute_missing(&chain, &spec, &net, &mut rng),
            Err(Error::NoMissingEntries)
        ));
    }

    #[test]
    fn imputation_law_matches_poisson_oracle() {
        // Degenerate chain with theta = 0 and mu = 5: the imputation law is
        // Poisson(5), checked by chi-square goodness of fit.
        let n = 4usize;
        let mut net = TemporalNetwork::new(n, 1).unwrap();
        net.set_missing(0, 1, 0).unwrap();
        let spec = ModelSpec::m1();
        let mut st = ParamState::zeroed(&spec, &net);
        st.f = vec![5.0f64.ln()];
        st.zeta = crate::net::ZETA_POISSON;
        let chain = degenerate_chain(st, 50_000);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = impute_missing(&chain, &spec, &net, &mut rng).unwrap();
        let max = 20usize;
        let mut observed = vec![0.0; max + 1];
        for &v in &draws.values[0] {
            observed[(v as usize).min(max)] += 1.0;
        }
        let gp = GpParams::new(5.0, 0.0).unwrap();
        let reps = draws.values[0].len() as f64;
        let mut expected: Vec<f64> = (0..max).map(|y| gp.log_pmf(y as u64).exp() * reps).collect();
        expected.push(reps - expected.iter().sum::<f64>());
        let (_, _, p) = chi_square_gof(&observed, &expected).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    fn synthetic_predictive(
        law: GpParams,
        n_targets: usize,
        n_draws: usize,
        seed: u64,
    ) -> (Vec<u64>, PredictiveDraws) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truths: Vec<u64> = (0..n_targets).map(|_| law.sample(&mut rng)).collect();
        let targets = (0..n_targets).map(|k| (0, 1, k)).collect();
        let values = (0..n_targets)
            .map(|_| (0..n_draws).map(|_| law.sample(&mut rng)).collect())
            .collect();
        (truths, PredictiveDraws { targets, values })
    }

    #[test]
    fn metrics_trivia() {
        // Point-mass predictive equal to the truth: zero errors.
        let truths = vec![7u64; 5];
        let draws = PredictiveDraws {
            targets: (0..5).map(|k| (0, 1, k)).collect(),
            values: vec![vec![7u64; 200]; 5],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = predictive_metrics(&truths, &draws, &mut rng).unwrap();
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.mse, 0.0);
        assert_eq!(m.coverage, 1.0);
        assert_eq!(m.pe, 0.0);

        // Point mass at the wrong value: coverage 0, PE 1.
        let wrong = vec![3u64; 5];
        let m = predictive_metrics(&wrong, &draws, &mut rng).unwrap();
        assert_eq!(m.coverage, 0.0);
        assert_eq!(m.pe, 1.0);

        // Draw-count precondition.
        let thin = PredictiveDraws {
            targets: vec![(0, 1, 0)],
            values: vec![vec![1u64; 50]],
        };
        assert!(predictive_metrics(&[1], &thin, &mut rng).is_err());
    }

    #[test]
    fn metrics_identities_hold() {
        let law = GpParams::new(2.0, 0.4).unwrap();
        let (truths, draws) = synthetic_predictive(law, 40, 400, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = predictive_metrics(&truths, &draws, &mut rng).unwrap();
        assert!((m.rmse * m.rmse - m.mse).abs() < 1e-12);
        assert!((m.coverage + m.pe - 1.0).abs() < 1e-12);
        assert!(m.vtp >= 0.0);
    }

    #[test]
    fn calibrated_pit_is_uniform() {
        // Truths drawn from the predictive law itself: MTP near 1/2, VTP
        // near 1/12, and the PIT sample passes a KS test against U(0,1).
        let law = GpParams::new(3.0, 0.5).unwrap();
        let (truths, draws) = synthetic_predictive(law, 800, 600, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = predictive_metrics(&truths, &draws, &mut rng).unwrap();
        assert!((m.mtp - 0.5).abs() < 0.05, "MTP = {}", m.mtp);
        assert!((m.vtp - 1.0 / 12.0).abs() < 0.015, "VTP = {}", m.vtp);

        let pits = randomized_pit(&truths, &draws, &mut rng).unwrap();
        let (_, p) = ks_test(&pits, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(p > 0.01, "KS p = {p}");
    }
}
