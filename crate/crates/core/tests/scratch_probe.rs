// Temporary diagnostic probe; deleted before release.
use gpnet_core::net::{log_likelihood, theta_of_zeta, Dynamics};
use gpnet_core::sampler::{run_chain, SamplerConfig};
use gpnet_core::simgen::{generate, SimDesign};
use gpnet_core::{ModelKind, ModelSpec, ParamState, TemporalNetwork};

fn log_posterior(
    spec: &ModelSpec,
    st: &ParamState,
    net: &TemporalNetwork,
) -> (f64, f64, f64, f64, f64) {
    let ll = log_likelihood(spec, st, net).unwrap();
    let lp_alpha: f64 = st
        .alpha
        .iter()
        .map(|a| -a * a / (2.0 * spec.sigma_alpha2))
        .sum();
    let (sx2, f0v, _d) = match &spec.dynamics {
        Dynamics::LatentSpace {
            sigma_x2,
            f0_prior_var,
            dim,
            ..
        } => (*sigma_x2, *f0_prior_var, *dim),
        _ => unreachable!(),
    };
    let se2 = st.sigma_eps2.unwrap();
    let t_len = st.f.len();
    let mut lp_f = -st.f[0] * st.f[0] / (2.0 * f0v);
    for t in 1..t_len {
        let d = st.f[t] - st.f[t - 1];
        lp_f += -d * d / (2.0 * se2) - 0.5 * se2.ln();
    }
    let n = st.alpha.len();
    let d = 2usize;
    let mut lp_x = 0.0;
    for i in 0..n {
        for k in 0..d {
            let mut prev = 0.0;
            for t in 0..t_len {
                let cur = st.x[(t * n + i) * d + k];
                let diff = cur - prev;
                lp_x += -diff * diff / (2.0 * sx2);
                prev = cur;
            }
        }
    }
    let dz = st.zeta - spec.mu_zeta;
    let lp_z = -dz * dz / (2.0 * spec.sigma_zeta2);
    (ll, lp_alpha, lp_f, lp_x, lp_z)
}

#[test]
fn probe_truth_vs_posterior_draw() {
    let mut design = SimDesign::desk(ModelKind::M3);
    design.seed = 102;
    let (net, truth) = generate(&design).unwrap();
    let spec = design.model_spec();
    let cfg = SamplerConfig::new(2000, 800, 4, 1102);
    let chain = run_chain(&spec, &net, &cfg).unwrap();
    let last = chain.draws.last().unwrap();

    let t = log_posterior(&spec, &truth, &net);
    let p = log_posterior(&spec, last, &net);
    eprintln!("truth: ll={:.1} a={:.1} f={:.1} x={:.1} z={:.2} total={:.1}", t.0, t.1, t.2, t.3, t.4, t.0+t.1+t.2+t.3+t.4);
    eprintln!("draw : ll={:.1} a={:.1} f={:.1} x={:.1} z={:.2} total={:.1}", p.0, p.1, p.2, p.3, p.4, p.0+p.1+p.2+p.3+p.4);
    eprintln!("truth zeta={} draw zeta={}", truth.zeta, last.zeta);
    let (_, th_t) = theta_of_zeta(truth.zeta);
    let (_, th_d) = theta_of_zeta(last.zeta);
    eprintln!("theta truth={th_t:.4} draw={th_d:.4}");
}
