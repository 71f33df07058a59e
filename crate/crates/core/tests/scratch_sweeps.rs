// Temporary experiment; deleted before release.
use gpnet_core::net::theta_of_zeta;
use gpnet_core::sampler::{run_chain, SamplerConfig};
use gpnet_core::simgen::{generate, SimDesign};
use gpnet_core::ModelKind;

#[test]
fn sweep_scan() {
    for seed in [101u64, 102, 103] {
        let mut design = SimDesign::desk(ModelKind::M3);
        design.seed = seed;
        let (net, _truth) = generate(&design).unwrap();
        let spec = design.model_spec();
        for sweeps in [5usize, 15, 30] {
            let mut cfg = SamplerConfig::new(2000, 800, 4, seed + 1000);
            cfg.x_sweeps = sweeps;
            let t0 = std::time::Instant::now();
            let chain = run_chain(&spec, &net, &cfg).unwrap();
            let thetas: Vec<f64> =
                chain.draws.iter().map(|d| theta_of_zeta(d.zeta).1).collect();
            let mut zetas: Vec<f64> = chain.draws.iter().map(|d| d.zeta).collect();
            zetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = zetas.len();
            eprintln!(
                "seed {seed} sweeps {sweeps}: theta={:.4} zeta95=({:.3},{:.3}) x_acc={:.3} [{:?}]",
                thetas.iter().sum::<f64>() / n as f64,
                zetas[(0.025 * n as f64) as usize],
                zetas[(0.975 * n as f64) as usize],
                chain.acceptance.x,
                t0.elapsed()
            );
        }
    }
}
