//! Small statistical helpers shared by the diagnostics, the experiments,
//! and the test suites: moments, quantiles, autocorrelations, and classical
//! goodness-of-fit tests.

use crate::error::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Equal-tail quantile by linear interpolation of order statistics
/// (`p` in `[0, 1]`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = p * (n as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Lag-`k` sample autocorrelation with the biased (1/n) covariance
/// normalization conventional in spectral ESS estimators.
pub fn autocorrelation(xs: &[f64], k: usize) -> f64 {
    let n = xs.len();
    if k >= n {
        return 0.0;
    }
    let m = mean(xs);
    let c0: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 0.0;
    }
    let ck: f64 = (0..n - k).map(|i| (xs[i] - m) * (xs[i + k] - m)).sum::<f64>() / n as f64;
    ck / c0
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let lo = i as f64 / n;
        let hi = (i as f64 + 1.0) / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// One-sample KS test; the p-value uses the asymptotic Kolmogorov law with
/// the Stephens small-sample correction.
pub fn ks_test<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> Result<(f64, f64)> {
    if data.len() < 8 {
        return Err(Error::InsufficientDraws(format!(
            "KS test needs at least 8 points, got {}",
            data.len()
        )));
    }
    let d = ks_statistic(data, cdf);
    let n = data.len() as f64;
    let lambda = d * (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    Ok((d, kolmogorov_sf(lambda)))
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1.0f64).powi(k + 1) * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Pearson chi-square goodness-of-fit test. Cells with expected count below
/// 5 are pooled into their predecessor. Returns `(statistic, dof, p_value)`.
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> Result<(f64, usize, f64)> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::Dimension(
            "chi_square_gof: observed and expected must have equal nonzero length".into(),
        ));
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for (&o, &e) in observed.iter().zip(expected) {
        match cells.last_mut() {
            Some(last) if last.1 < 5.0 => {
                last.0 += o;
                last.1 += e;
            }
            _ => cells.push((o, e)),
        }
    }
    // A trailing sparse cell pools backwards.
    while cells.len() > 1 && cells.last().unwrap().1 < 5.0 {
        let (o, e) = cells.pop().unwrap();
        let last = cells.last_mut().unwrap();
        last.0 += o;
        last.1 += e;
    }
    if cells.len() < 2 {
        return Err(Error::Degenerate(
            "chi_square_gof: fewer than two cells after pooling".into(),
        ));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let chi = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InvalidParameter(format!("chi-square dof: {e}")))?;
    Ok((stat, dof, 1.0 - chi.cdf(stat)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::Normal;

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&xs, 0.5), 2.5);
    }

    #[test]
    fn ks_accepts_its_own_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..4000).map(|_| rng.random::<f64>()).collect();
        let (_, p) = ks_test(&data, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(p > 0.01, "p={p}");
    }

    #[test]
    fn ks_rejects_shifted_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data: Vec<f64> = (0..4000).map(|_| rng.random::<f64>() + 0.08).collect();
        let (_, p) = ks_test(&data, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(p < 0.01, "p={p}");
    }

    #[test]
    fn chi_square_detects_fit_and_misfit() {
        let norm = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let edges: Vec<f64> = (-30..=30).map(|k| k as f64 / 10.0).collect();
        let mut observed = vec![0.0; edges.len() + 1];
        for _ in 0..n {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            let cell = edges.partition_point(|e| *e < z);
            observed[cell] += 1.0;
        }
        let mut expected = Vec::with_capacity(edges.len() + 1);
        let mut prev = 0.0;
        for e in &edges {
            let c = norm.cdf(*e);
            expected.push((c - prev) * n as f64);
            prev = c;
        }
        expected.push((1.0 - prev) * n as f64);
        let (_, _, p) = chi_square_gof(&observed, &expected).unwrap();
        assert!(p > 0.01, "p={p}");

        // Shift the expectation and the test must reject.
        let mut shifted = Vec::with_capacity(edges.len() + 1);
        let mut prev = 0.0;
        for e in &edges {
            let c = norm.cdf(*e - 0.15);
            shifted.push((c - prev) * n as f64);
            prev = c;
        }
        shifted.push((1.0 - prev) * n as f64);
        let (_, _, p) = chi_square_gof(&observed, &shifted).unwrap();
        assert!(p < 0.001, "p={p}");
    }
}
