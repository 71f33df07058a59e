// Temporary experiment; deleted before release.
use gpnet_core::sampler::{apply_identification, realign_draws, run_chain, SamplerConfig};
use gpnet_core::simgen::{generate, SimDesign};
use gpnet_core::stats::quantile;
use gpnet_core::ModelKind;

#[test]
fn coverage_m3() {
    for seed in [101u64, 104, 105, 106] {
        let mut design = SimDesign::desk(ModelKind::M3);
        design.seed = seed;
        let (net, mut truth) = generate(&design).unwrap();
        let spec = design.model_spec();
        apply_identification(&mut truth, &spec, None).unwrap();
        let cfg = SamplerConfig::new(2000, 800, 4, seed + 1000);
        let mut chain = run_chain(&spec, &net, &cfg).unwrap();
        realign_draws(&mut chain, &spec, &truth.x).unwrap();

        let n = 20usize;
        let t_len = 8usize;
        let d = 2usize;
        // alpha coverage
        let mut alpha_cov = 0;
        for i in 0..n {
            let mut series: Vec<f64> = chain.draws.iter().map(|dr| dr.alpha[i]).collect();
            series.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (lo, hi) = (quantile(&series, 0.025), quantile(&series, 0.975));
            if truth.alpha[i] >= lo && truth.alpha[i] <= hi {
                alpha_cov += 1;
            }
        }
        // coordinate coverage per (i, t): both components inside marginal intervals
        let mut xy_cov = 0;
        for t in 0..t_len {
            for i in 0..n {
                let mut inside = true;
                for k in 0..d {
                    let idx = (t * n + i) * d + k;
                    let mut series: Vec<f64> =
                        chain.draws.iter().map(|dr| dr.x[idx]).collect();
                    series.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let (lo, hi) = (quantile(&series, 0.025), quantile(&series, 0.975));
                    if truth.x[idx] < lo || truth.x[idx] > hi {
                        inside = false;
                    }
                }
                if inside {
                    xy_cov += 1;
                }
            }
        }
        let mut zetas: Vec<f64> = chain.draws.iter().map(|dr| dr.zeta).collect();
        zetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let thetas: Vec<f64> = chain
            .draws
            .iter()
            .map(|dr| gpnet_core::net::theta_of_zeta(dr.zeta).1)
            .collect();
        eprintln!(
            "seed {seed}: alpha_cov {alpha_cov}/20 xy_cov {}/{} ({:.2}) zeta95=({:.3},{:.3}) theta={:.4}",
            xy_cov,
            n * t_len,
            xy_cov as f64 / (n * t_len) as f64,
            quantile(&zetas, 0.025),
            quantile(&zetas, 0.975),
            thetas.iter().sum::<f64>() / thetas.len() as f64,
        );
    }
}
