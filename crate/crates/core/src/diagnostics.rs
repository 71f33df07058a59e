//! Chain quality and model-comparison statistics: effective sample size,
//! the Geweke convergence diagnostic, DIC, and posterior summaries.

use crate::error::{Error, Result};
use crate::net::{log_likelihood, ModelSpec, ParamState, TemporalNetwork};
use crate::sampler::ChainOutput;
use crate::stats;
use statrs::function::erf::erfc;

/// Effective sample size of an autocorrelated sequence:
/// `n / (1 + 2 sum_k rho_k)` with the sum truncated by the initial
/// positive-sequence rule on consecutive autocorrelation pairs. Capped at
/// `n`.
pub fn ess(draws: &[f64]) -> Result<f64> {
    let n = draws.len();
    if n < 10 {
        return Err(Error::InsufficientDraws(format!(
            "ess needs at least 10 draws, got {n}"
        )));
    }
    if stats::variance(draws) == 0.0 {
        return Err(Error::Degenerate("ess of a constant sequence".into()));
    }
    let mut sum = 0.0;
    let mut k = 1;
    while k + 1 < n {
        let pair = stats::autocorrelation(draws, k) + stats::autocorrelation(draws, k + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 2;
    }
    Ok((n as f64 / (1.0 + 2.0 * sum)).min(n as f64))
}

/// Geweke convergence diagnostic: a z-test comparing the means of the
/// first `frac_first` and last `frac_last` fractions of the chain, with
/// window variances taken from the zero-frequency spectral density
/// (non-overlapping batch means, batch length `n^(1/3)`). Returns `(z, p)`
/// with a two-sided normal p-value.
pub fn geweke(draws: &[f64], frac_first: f64, frac_last: f64) -> Result<(f64, f64)> {
    if !(frac_first > 0.0 && frac_last > 0.0 && frac_first + frac_last <= 1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "geweke window fractions ({frac_first}, {frac_last}) must be positive and sum to at most 1"
        )));
    }
    let n = draws.len();
    let n1 = (n as f64 * frac_first).floor() as usize;
    let n2 = (n as f64 * frac_last).floor() as usize;
    if n1 < 20 || n2 < 20 {
        return Err(Error::InsufficientDraws(format!(
            "geweke windows of {n1} and {n2} points; both need at least 20"
        )));
    }
    let first = &draws[..n1];
    let last = &draws[n - n2..];
    let (m1, s1) = (stats::mean(first), spectral_variance(first));
    let (m2, s2) = (stats::mean(last), spectral_variance(last));
    let denom = (s1 / n1 as f64 + s2 / n2 as f64).sqrt();
    let z = if m1 == m2 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY * (m1 - m2).signum()
    } else {
        (m1 - m2) / denom
    };
    let p = if z.is_finite() {
        erfc(z.abs() / std::f64::consts::SQRT_2)
    } else {
        0.0
    };
    Ok((z, p))
}

/// Zero-frequency spectral density estimate by non-overlapping batch
/// means: `L * var(batch means)` with `L = floor(n^(1/3))`.
fn spectral_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    let batch = (n as f64).powf(1.0 / 3.0).floor().max(1.0) as usize;
    let n_batches = n / batch;
    if n_batches < 2 {
        return stats::variance(xs);
    }
    let means: Vec<f64> = (0..n_batches)
        .map(|b| stats::mean(&xs[b * batch..(b + 1) * batch]))
        .collect();
    batch as f64 * stats::variance(&means)
}

/// Deviance Information Criterion with the plug-in point estimate at the
/// elementwise posterior mean of every continuous quantity (latent states
/// included): `p_DIC = 2 (log p(y|mean) - mean log p(y|draw))` and
/// `DIC = -2 log p(y|mean) + 2 p_DIC`.
///
/// A likelihood failure at the plug-in point (for example, an observed
/// count beyond a negative-theta truncation bound) is reported as a
/// diagnostic error rather than a crash.
pub fn dic(
    chain: &ChainOutput,
    spec: &ModelSpec,
    network: &TemporalNetwork,
) -> Result<(f64, f64)> {
    if chain.draws.is_empty() {
        return Err(Error::InsufficientDraws("dic of an empty chain".into()));
    }
    let mean_state = posterior_mean_state(&chain.draws);
    let ll_mean = log_likelihood(spec, &mean_state, network)?;
    if !ll_mean.is_finite() {
        return Err(Error::Likelihood(format!(
            "log-likelihood at the posterior mean is {ll_mean}"
        )));
    }
    let mean_ll = stats::mean(&chain.loglik);
    let p_dic = 2.0 * (ll_mean - mean_ll);
    Ok((-2.0 * ll_mean + 2.0 * p_dic, p_dic))
}

/// Elementwise mean of every continuous component across draws.
pub fn posterior_mean_state(draws: &[ParamState]) -> ParamState {
    let k = draws.len() as f64;
    let mut mean = draws[0].clone();
    scale_state(&mut mean, 1.0 / k);
    for d in &draws[1..] {
        add_scaled(&mut mean, d, 1.0 / k);
    }
    mean
}

fn scale_state(s: &mut ParamState, c: f64) {
    for v in s.alpha.iter_mut() {
        *v *= c;
    }
    for v in s.f.iter_mut() {
        *v *= c;
    }
    for v in s.delta.iter_mut() {
        *v *= c;
    }
    for v in s.x.iter_mut() {
        *v *= c;
    }
    s.zeta *= c;
    if let Some(se) = s.sigma_eps2.as_mut() {
        *se *= c;
    }
}

fn add_scaled(acc: &mut ParamState, d: &ParamState, c: f64) {
    for (a, b) in acc.alpha.iter_mut().zip(&d.alpha) {
        *a += c * b;
    }
    for (a, b) in acc.f.iter_mut().zip(&d.f) {
        *a += c * b;
    }
    for (a, b) in acc.delta.iter_mut().zip(&d.delta) {
        *a += c * b;
    }
    for (a, b) in acc.x.iter_mut().zip(&d.x) {
        *a += c * b;
    }
    acc.zeta += c * d.zeta;
    if let (Some(a), Some(b)) = (acc.sigma_eps2.as_mut(), d.sigma_eps2) {
        *a += c * b;
    }
}

/// Per-parameter posterior summary.
#[derive(Debug, Clone)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    /// Equal-tail 95% interval.
    pub lower95: f64,
    pub upper95: f64,
    /// ESS over the number of retained draws; NaN for constant series.
    pub ess_fraction: f64,
    pub geweke_z: f64,
    pub geweke_p: f64,
}

/// Posterior summary table over every flattened chain column.
#[derive(Debug, Clone)]
pub struct ChainSummary {
    pub rows: Vec<ParameterSummary>,
}

impl ChainSummary {
    pub fn get(&self, name: &str) -> Option<&ParameterSummary> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Summarize every parameter of a chain: moments, equal-tail 95% interval
/// (linear interpolation of order statistics), ESS fraction, and the
/// Geweke diagnostic. Diagnostics that need variation or length are NaN
/// for constant or short series rather than errors.
pub fn summarize(chain: &ChainOutput, spec: &ModelSpec) -> Result<ChainSummary> {
    if chain.draws.is_empty() {
        return Err(Error::InsufficientDraws("summarize of an empty chain".into()));
    }
    let names = chain.column_names(spec);
    let n = chain.draws.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(n); names.len()];
    for k in 0..n {
        for (c, v) in chain.row(k).into_iter().enumerate() {
            columns[c].push(v);
        }
    }
    let rows = names
        .into_iter()
        .zip(columns)
        .map(|(name, series)| {
            let mut sorted = series.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let ess_fraction = ess(&series).map(|e| e / n as f64).unwrap_or(f64::NAN);
            let (geweke_z, geweke_p) = geweke(&series, 0.1, 0.5).unwrap_or((f64::NAN, f64::NAN));
            ParameterSummary {
                name,
                mean: stats::mean(&series),
                median: stats::quantile(&sorted, 0.5),
                sd: stats::variance(&series).sqrt(),
                lower95: stats::quantile(&sorted, 0.025),
                upper95: stats::quantile(&sorted, 0.975),
                ess_fraction,
                geweke_z,
                geweke_p,
            }
        })
        .collect();
    Ok(ChainSummary { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::ModelKind;
    use crate::sampler::{run_chain, SamplerConfig};
    use crate::TemporalNetwork;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn ess_of_iid_draws_is_near_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let e = ess(&draws).unwrap();
        let frac = e / draws.len() as f64;
        assert!((0.8..=1.2).contains(&frac), "ESS/n = {frac}");
    }

    #[test]
    fn ess_of_ar1_matches_analytic_factor() {
        // AR(1) with phi = 0.5: ESS/n -> (1-phi)/(1+phi) = 1/3.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let phi = 0.5;
        let innov_sd = (1.0f64 - phi * phi).sqrt();
        let mut draws = Vec::with_capacity(n);
        let mut x = 0.0;
        for _ in 0..n {
            x = phi * x + innov_sd * rng.sample::<f64, _>(StandardNormal);
            draws.push(x);
        }
        let frac = ess(&draws).unwrap() / n as f64;
        assert!((frac - 1.0 / 3.0).abs() < 0.2 / 3.0, "ESS/n = {frac}");
    }

    #[test]
    fn ess_rejects_constant_and_short_sequences() {
        assert!(matches!(ess(&vec![2.0; 100]), Err(Error::Degenerate(_))));
        assert!(ess(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn ess_never_exceeds_n() {
        // Antithetic (negatively autocorrelated) sequences are capped.
        let draws: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let e = ess(&draws).unwrap();
        assert!(e <= 1000.0);
    }

    #[test]
    fn geweke_null_calibration() {
        // White noise: about 5% of 100 replicates reject at the 5% level.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rejections = 0;
        for _ in 0..100 {
            let draws: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
            let (_, p) = geweke(&draws, 0.1, 0.5).unwrap();
            if p < 0.05 {
                rejections += 1;
            }
        }
        assert!(rejections <= 12, "{rejections} rejections out of 100");
    }

    #[test]
    fn geweke_detects_drift() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 2000;
        let draws: Vec<f64> = (0..n)
            .map(|i| 5.0 * i as f64 / n as f64 + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let (_, p) = geweke(&draws, 0.1, 0.5).unwrap();
        assert!(p < 0.01, "p = {p}");
    }

    #[test]
    fn geweke_zero_on_mirrored_windows() {
        // Palindrome with equal half-window fractions: identical windows.
        // Integer-valued draws keep the window sums exact.
        let half: Vec<f64> = (0..500).map(|i| (i % 13) as f64).collect();
        let mut draws = half.clone();
        draws.extend(half.iter().rev());
        let (z, p) = geweke(&draws, 0.5, 0.5).unwrap();
        assert_eq!(z, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geweke_rejects_short_chains() {
        assert!(geweke(&vec![0.0; 50], 0.1, 0.5).is_err());
        assert!(geweke(&vec![0.0; 1000], 0.0, 0.5).is_err());
    }

    fn tiny_chain(seed: u64) -> (ChainOutput, ModelSpec, TemporalNetwork) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = TemporalNetwork::new(4, 2).unwrap();
        let pairs: Vec<_> = net.pairs().collect();
        for t in 0..2 {
            for &(i, j) in &pairs {
                net.set_count(i, j, t, rng.random_range(0..6)).unwrap();
            }
        }
        let spec = crate::ModelSpec::m1();
        let chain = run_chain(&spec, &net, &SamplerConfig::new(60, 20, 2, seed)).unwrap();
        (chain, spec, net)
    }

    #[test]
    fn dic_single_draw_and_duplication() {
        let (chain, spec, net) = tiny_chain(5);
        let mut single = chain.clone();
        single.draws.truncate(1);
        single.loglik.truncate(1);
        let (d, p) = dic(&single, &spec, &net).unwrap();
        assert!(p.abs() < 1e-10, "p_DIC = {p}");
        assert!((d + 2.0 * single.loglik[0]).abs() < 1e-10);

        // Duplicating every draw changes nothing.
        let (d0, p0) = dic(&chain, &spec, &net).unwrap();
        let mut doubled = chain.clone();
        doubled.draws.extend(chain.draws.clone());
        doubled.loglik.extend(chain.loglik.clone());
        let (d1, p1) = dic(&doubled, &spec, &net).unwrap();
        assert!((d0 - d1).abs() < 1e-10);
        assert!((p0 - p1).abs() < 1e-10);
    }

    #[test]
    fn summarize_reports_moments_and_intervals() {
        let (chain, spec, _) = tiny_chain(7);
        let summary = summarize(&chain, &spec).unwrap();
        assert_eq!(summary.rows.len(), chain.column_names(&spec).len());
        for row in &summary.rows {
            assert!(row.lower95 <= row.median + 1e-12, "{}", row.name);
            assert!(row.median <= row.upper95 + 1e-12, "{}", row.name);
        }
        // alpha is centered per draw in M1, so its mean column vanishes.
        let zeta = summary.get("zeta").unwrap();
        assert!(zeta.sd >= 0.0);
    }

    #[test]
    fn summarize_gaussian_reference_quantiles() {
        // Hand-built chain over a single scalar: standard normal draws.
        let (mut chain, spec, _) = tiny_chain(9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut template = chain.draws[0].clone();
        // Dyadic values keep the constant-column mean exact.
        template.alpha = vec![0.25, -0.25, 0.5, -0.5];
        chain.draws = (0..20_000)
            .map(|_| {
                let mut d = template.clone();
                d.zeta = rng.sample(StandardNormal);
                d
            })
            .collect();
        chain.loglik = vec![0.0; chain.draws.len()];
        let summary = summarize(&chain, &spec).unwrap();
        let zeta = summary.get("zeta").unwrap();
        assert!(zeta.mean.abs() < 0.03);
        assert!((zeta.lower95 + 1.96).abs() < 0.098, "lower {}", zeta.lower95);
        assert!((zeta.upper95 - 1.96).abs() < 0.098, "upper {}", zeta.upper95);
        // Constant columns collapse and flag their diagnostics as NaN.
        let a1 = summary.get("alpha[1]").unwrap();
        assert_eq!(a1.sd, 0.0);
        assert_eq!(a1.lower95, a1.upper95);
        assert!(a1.ess_fraction.is_nan());
    }

    #[test]
    fn median_of_odd_sorted_integers_is_middle() {
        let (mut chain, spec, _) = tiny_chain(13);
        let template = chain.draws[0].clone();
        chain.draws = [3.0, 1.0, 2.0, 5.0, 4.0]
            .iter()
            .map(|&v| {
                let mut d = template.clone();
                d.zeta = v;
                d
            })
            .collect();
        chain.loglik = vec![0.0; 5];
        let summary = summarize(&chain, &spec).unwrap();
        assert_eq!(summary.get("zeta").unwrap().median, 3.0);
        assert_eq!(chain.draws.len(), 5);
        assert_eq!(spec.kind(), ModelKind::M1);
    }
}
