//! Implementations of the six subcommands: simulate, fit, diagnose,
//! predict, properties, and dispersion.

use crate::config::{parse_list, ConfigFile};
use crate::formats::{
    digest_config, dispersion_posterior_summary, ingest_edges, out_path, read_chain, write_chain,
    write_edges, write_table, write_truth, Manifest,
};
use anyhow::{anyhow, bail, Context, Result};
use gpnet_core::diagnostics::{dic, summarize};
use gpnet_core::forecast::{impute_missing, posterior_predictive_strength, predictive_metrics};
use gpnet_core::sampler::{run_chain, Likelihood, SamplerConfig, StepSizes};
use gpnet_core::simgen::{generate, DesignDynamics, SimDesign};
use gpnet_core::theory::{
    concentration_experiment, dispersion_diagnostics, theta_for_dispersion, theta_for_strength,
    total_strength_law, StrengthMoments, SymMatrix,
};
use gpnet_core::{Dynamics, ModelKind, ModelSpec, TemporalNetwork};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::PathBuf;

pub use crate::{
    DiagnoseArgs, DispersionArgs, FitArgs, PredictArgs, PropertiesArgs, SimulateArgs, SpecOpts,
};

fn parse_model(raw: &str) -> Result<ModelKind> {
    match raw.to_ascii_lowercase().as_str() {
        "m1" => Ok(ModelKind::M1),
        "m2" => Ok(ModelKind::M2),
        "m3" => Ok(ModelKind::M3),
        other => bail!("unknown model '{other}' (expected m1, m2, or m3)"),
    }
}

fn parse_likelihood(raw: &str) -> Result<Likelihood> {
    match raw.to_ascii_lowercase().as_str() {
        "gp" => Ok(Likelihood::Gp),
        "poisson" => Ok(Likelihood::Poisson),
        other => bail!("unknown likelihood '{other}' (expected gp or poisson)"),
    }
}

/// Resolved model-structure options shared by fit, diagnose, and predict.
pub struct ResolvedSpec {
    pub spec: ModelSpec,
    pub config: BTreeMap<String, String>,
}

pub fn resolve_spec(opts: &SpecOpts, file: &ConfigFile) -> Result<ResolvedSpec> {
    let model = file
        .resolve_opt(opts.model.clone(), "model")?
        .ok_or_else(|| anyhow!("--model is required (m1, m2, or m3)"))?;
    let kind = parse_model(&model)?;
    let lags = file.resolve(opts.lags, "lags", 2usize)?;
    let dim = file.resolve(opts.dim, "dim", 2usize)?;
    let sigma_alpha2 = file.resolve(opts.sigma_alpha2, "sigma-alpha2", 1.0)?;
    let mu_zeta = file.resolve(opts.mu_zeta, "mu-zeta", 0.0)?;
    let sigma_zeta2 = file.resolve(opts.sigma_zeta2, "sigma-zeta2", 25.0)?;
    let ig_a = file.resolve(opts.ig_a, "ig-a", 2.0)?;
    let ig_b = file.resolve(opts.ig_b, "ig-b", 2.0)?;
    let f0_var = file.resolve(opts.f0_var, "f0-var", 100.0)?;
    let sigma_delta2 = file.resolve(opts.sigma_delta2, "sigma-delta2", 1.0)?;
    let sigma_x2 = file.resolve(opts.sigma_x2, "sigma-x2", 0.25)?;
    let presample_raw = file.resolve_opt(opts.presample.clone(), "presample")?;
    let presample: Vec<f64> = match presample_raw.as_deref() {
        Some(raw) => parse_list(raw)?,
        None => vec![1.2; lags],
    };
    if presample.len() != lags {
        bail!("--presample needs exactly {lags} values, found {}", presample.len());
    }

    let dynamics = match kind {
        ModelKind::M1 => Dynamics::Factor {
            ig_prior: (ig_a, ig_b),
            f0_prior_var: f0_var,
        },
        ModelKind::M2 => Dynamics::Autoregressive {
            lags,
            sigma_delta2,
            presample: presample.clone(),
        },
        ModelKind::M3 => Dynamics::LatentSpace {
            dim,
            sigma_x2,
            ig_prior: (ig_a, ig_b),
            f0_prior_var: f0_var,
        },
    };
    let spec = ModelSpec {
        dynamics,
        sigma_alpha2,
        mu_zeta,
        sigma_zeta2,
    };

    let mut config = BTreeMap::new();
    config.insert("model".into(), kind.to_string());
    config.insert("sigma-alpha2".into(), sigma_alpha2.to_string());
    config.insert("mu-zeta".into(), mu_zeta.to_string());
    config.insert("sigma-zeta2".into(), sigma_zeta2.to_string());
    match kind {
        ModelKind::M1 => {
            config.insert("ig-a".into(), ig_a.to_string());
            config.insert("ig-b".into(), ig_b.to_string());
            config.insert("f0-var".into(), f0_var.to_string());
        }
        ModelKind::M2 => {
            config.insert("lags".into(), lags.to_string());
            config.insert("sigma-delta2".into(), sigma_delta2.to_string());
            config.insert(
                "presample".into(),
                presample.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            );
        }
        ModelKind::M3 => {
            config.insert("dim".into(), dim.to_string());
            config.insert("sigma-x2".into(), sigma_x2.to_string());
            config.insert("ig-a".into(), ig_a.to_string());
            config.insert("ig-b".into(), ig_b.to_string());
            config.insert("f0-var".into(), f0_var.to_string());
        }
    }
    Ok(ResolvedSpec { spec, config })
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let model = file
        .resolve_opt(args.model.clone(), "model")?
        .ok_or_else(|| anyhow!("--model is required (m1, m2, or m3)"))?;
    let kind = parse_model(&model)?;
    let out_dir = resolve_out(&file, &args.out)?;

    let mut design = SimDesign::desk(kind);
    design.n_nodes = file.resolve(args.nodes, "nodes", design.n_nodes)?;
    design.n_times = file.resolve(args.times, "times", design.n_times)?;
    design.zeta_true = file.resolve(args.zeta, "zeta", design.zeta_true)?;
    design.mu_alpha = file.resolve(args.mu_alpha, "mu-alpha", design.mu_alpha)?;
    design.sigma_alpha2 = file.resolve(args.sigma_alpha2, "sigma-alpha2", design.sigma_alpha2)?;
    design.seed = file.resolve(args.seed, "seed", 1)?;
    match &mut design.dynamics {
        DesignDynamics::Factor { sigma_eps2, f0_var } => {
            *sigma_eps2 = file.resolve(args.sigma_eps2, "sigma-eps2", *sigma_eps2)?;
            *f0_var = file.resolve(args.f0_var, "f0-var", *f0_var)?;
        }
        DesignDynamics::Autoregressive { delta, presample } => {
            if let Some(raw) = file.resolve_opt(args.delta.clone(), "delta")? {
                *delta = parse_list(&raw)?;
            }
            if let Some(raw) = file.resolve_opt(args.presample.clone(), "presample")? {
                *presample = parse_list(&raw)?;
            }
            if presample.len() != delta.len() {
                bail!(
                    "--presample needs exactly {} values, found {}",
                    delta.len(),
                    presample.len()
                );
            }
        }
        DesignDynamics::LatentSpace {
            dim,
            sigma_x2,
            sigma_eps2,
            f0_var,
        } => {
            *dim = file.resolve(args.dim, "dim", *dim)?;
            *sigma_x2 = file.resolve(args.sigma_x2, "sigma-x2", *sigma_x2)?;
            *sigma_eps2 = file.resolve(args.sigma_eps2, "sigma-eps2", *sigma_eps2)?;
            *f0_var = file.resolve(args.f0_var, "f0-var", *f0_var)?;
        }
    }
    let mask_count = file.resolve(args.mask_count, "mask-count", 0usize)?;

    let (mut network, truth) = generate(&design)?;
    if mask_count > 0 {
        mask_last_slice(&mut network, mask_count, design.seed)?;
    }
    let spec = design.model_spec();

    let mut config = BTreeMap::new();
    config.insert("model".into(), kind.to_string());
    config.insert("nodes".into(), design.n_nodes.to_string());
    config.insert("times".into(), design.n_times.to_string());
    config.insert("zeta".into(), design.zeta_true.to_string());
    config.insert("mu-alpha".into(), design.mu_alpha.to_string());
    config.insert("sigma-alpha2".into(), design.sigma_alpha2.to_string());
    config.insert("seed".into(), design.seed.to_string());
    config.insert("mask-count".into(), mask_count.to_string());
    match &design.dynamics {
        DesignDynamics::Factor { sigma_eps2, f0_var } => {
            config.insert("sigma-eps2".into(), sigma_eps2.to_string());
            config.insert("f0-var".into(), f0_var.to_string());
        }
        DesignDynamics::Autoregressive { delta, presample } => {
            config.insert(
                "delta".into(),
                delta.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            );
            config.insert(
                "presample".into(),
                presample.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            );
        }
        DesignDynamics::LatentSpace {
            dim,
            sigma_x2,
            sigma_eps2,
            f0_var,
        } => {
            config.insert("dim".into(), dim.to_string());
            config.insert("sigma-x2".into(), sigma_x2.to_string());
            config.insert("sigma-eps2".into(), sigma_eps2.to_string());
            config.insert("f0-var".into(), f0_var.to_string());
        }
    }

    let edges = out_path(&out_dir, "edges.csv");
    let truth_path = out_path(&out_dir, "truth.csv");
    write_edges(&network, &edges)?;
    write_truth(&truth, &spec, &truth_path)?;
    let mut manifest = Manifest::new("simulate", design.seed, config);
    manifest.labels = Some(network.labels().to_vec());
    manifest.outputs = vec!["edges.csv".into(), "truth.csv".into()];
    manifest.write(&out_path(&out_dir, "manifest.json"))?;
    Ok(())
}

/// Mask `count` random entries of the last slice, reproducibly.
fn mask_last_slice(network: &mut TemporalNetwork, count: usize, seed: u64) -> Result<()> {
    use rand::Rng;
    let t = network.n_times() - 1;
    let mut pairs: Vec<(usize, usize)> = network.pairs().collect();
    if count > pairs.len() {
        bail!("cannot mask {count} of {} pairs", pairs.len());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
    for k in 0..count {
        let pick = k + rng.random_range(0..pairs.len() - k);
        pairs.swap(k, pick);
        let (i, j) = pairs[k];
        network.set_missing(i, j, t)?;
    }
    Ok(())
}

pub struct ResolvedSamplerConfig {
    pub sampler: SamplerConfig,
    pub chains: usize,
    pub config: BTreeMap<String, String>,
}

pub fn resolve_sampler(args: &FitArgs, file: &ConfigFile) -> Result<ResolvedSamplerConfig> {
    let iterations = file.resolve(args.iters, "iters", 2000usize)?;
    let burn_in = file.resolve(args.burnin, "burnin", 800usize)?;
    let thin = file.resolve(args.thin, "thin", 4usize)?;
    let seed = file.resolve(args.seed, "seed", 1u64)?;
    let chains = file.resolve(args.chains, "chains", 1usize)?;
    let likelihood_raw = file.resolve(args.likelihood.clone(), "likelihood", "gp".to_string())?;
    let likelihood = parse_likelihood(&likelihood_raw)?;
    let adapt = !file.resolve(Some(args.no_adapt).filter(|v| *v), "no-adapt", false)?;
    let defaults = StepSizes::default();
    let steps = StepSizes {
        alpha: file.resolve(args.step_alpha, "step-alpha", defaults.alpha)?,
        delta: file.resolve(args.step_delta, "step-delta", defaults.delta)?,
        f: file.resolve(args.step_f, "step-f", defaults.f)?,
        zeta: file.resolve(args.step_zeta, "step-zeta", defaults.zeta)?,
    };
    if chains < 1 {
        bail!("--chains must be at least 1");
    }
    let mut sampler = SamplerConfig::new(iterations, burn_in, thin, seed);
    sampler.likelihood = likelihood;
    sampler.adapt = adapt;
    sampler.steps = steps.clone();
    sampler.validate()?;

    let mut config = BTreeMap::new();
    config.insert("iters".into(), iterations.to_string());
    config.insert("burnin".into(), burn_in.to_string());
    config.insert("thin".into(), thin.to_string());
    config.insert("seed".into(), seed.to_string());
    config.insert("chains".into(), chains.to_string());
    config.insert("likelihood".into(), likelihood_raw.to_ascii_lowercase());
    config.insert("no-adapt".into(), (!adapt).to_string());
    config.insert("step-alpha".into(), steps.alpha.to_string());
    config.insert("step-delta".into(), steps.delta.to_string());
    config.insert("step-f".into(), steps.f.to_string());
    config.insert("step-zeta".into(), steps.zeta.to_string());
    Ok(ResolvedSamplerConfig {
        sampler,
        chains,
        config,
    })
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let resolved_spec = resolve_spec(&args.spec, &file)?;
    let sampler_cfg = resolve_sampler(args, &file)?;
    let data = file
        .resolve_opt(args.data.clone(), "data")?
        .ok_or_else(|| anyhow!("--data is required"))?;
    let out_dir = resolve_out(&file, &args.out)?;

    let network = ingest_edges(&data)?;
    let mut config = resolved_spec.config.clone();
    config.extend(sampler_cfg.config.clone());
    config.insert("data".into(), data.display().to_string());
    let digest = digest_config(&config);

    let mut outputs = Vec::new();
    let mut last_acceptance = None;
    for k in 0..sampler_cfg.chains {
        let mut cfg = sampler_cfg.sampler.clone();
        cfg.seed = sampler_cfg.sampler.seed + k as u64;
        let chain = run_chain(&resolved_spec.spec, &network, &cfg)
            .with_context(|| format!("running chain {}", k + 1))?;
        let name = if sampler_cfg.chains == 1 {
            "chain.csv".to_string()
        } else {
            format!("chain_{}.csv", k + 1)
        };
        write_chain(&chain, &resolved_spec.spec, &digest, &out_path(&out_dir, &name))?;
        outputs.push(name);
        last_acceptance = Some(chain.acceptance);
    }

    let mut manifest = Manifest::new("fit", sampler_cfg.sampler.seed, config);
    manifest.labels = Some(network.labels().to_vec());
    if let Some(acc) = last_acceptance {
        manifest = manifest.with_acceptance(&acc);
    }
    manifest.outputs = outputs;
    manifest.write(&out_path(&out_dir, "manifest.json"))?;
    Ok(())
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let resolved = resolve_spec(&args.spec, &file)?;
    let data = file
        .resolve_opt(args.data.clone(), "data")?
        .ok_or_else(|| anyhow!("--data is required"))?;
    let chain_path = file
        .resolve_opt(args.chain.clone(), "chain")?
        .ok_or_else(|| anyhow!("--chain is required"))?;
    let out_dir = resolve_out(&file, &args.out)?;

    let network = ingest_edges(&data)?;
    let chain = read_chain(&chain_path, &resolved.spec)?;

    let summary = summarize(&chain, &resolved.spec)?;
    let rows: Vec<Vec<String>> = summary
        .rows
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.mean.to_string(),
                r.median.to_string(),
                r.sd.to_string(),
                r.lower95.to_string(),
                r.upper95.to_string(),
                r.ess_fraction.to_string(),
                r.geweke_z.to_string(),
                r.geweke_p.to_string(),
            ]
        })
        .collect();
    write_table(
        &[
            "name",
            "mean",
            "median",
            "sd",
            "lower95",
            "upper95",
            "ess_fraction",
            "geweke_z",
            "geweke_p",
        ],
        &rows,
        &out_path(&out_dir, "summary.csv"),
    )?;

    let (theta_mean, rho_mean) = dispersion_posterior_summary(&chain);
    let dic_json = match dic(&chain, &resolved.spec, &network) {
        Ok((dic_value, p_dic)) => serde_json::json!({
            "dic": dic_value,
            "p_dic": p_dic,
            "posterior_mean_theta": theta_mean,
            "posterior_mean_rho": rho_mean,
        }),
        Err(e) => serde_json::json!({
            "dic": null,
            "p_dic": null,
            "posterior_mean_theta": theta_mean,
            "posterior_mean_rho": rho_mean,
            "error": e.to_string(),
        }),
    };
    crate::formats::write_atomic(
        &out_path(&out_dir, "dic.json"),
        &format!("{}\n", serde_json::to_string_pretty(&dic_json)?),
    )?;

    let mut config = resolved.config.clone();
    config.insert("data".into(), data.display().to_string());
    config.insert("chain".into(), chain_path.display().to_string());
    let mut manifest = Manifest::new("diagnose", chain.config.seed, config);
    manifest.outputs = vec!["summary.csv".into(), "dic.json".into()];
    manifest.write(&out_path(&out_dir, "manifest.json"))?;
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let resolved = resolve_spec(&args.spec, &file)?;
    let data = file
        .resolve_opt(args.data.clone(), "data")?
        .ok_or_else(|| anyhow!("--data is required"))?;
    let chain_path = file
        .resolve_opt(args.chain.clone(), "chain")?
        .ok_or_else(|| anyhow!("--chain is required"))?;
    let seed = file.resolve(args.seed, "seed", 1u64)?;
    let label = file.resolve(args.label.clone(), "label", "run".to_string())?;
    let truth_data = file.resolve_opt(args.truth_data.clone(), "truth-data")?;
    let out_dir = resolve_out(&file, &args.out)?;

    let network = ingest_edges(&data)?;
    let chain = read_chain(&chain_path, &resolved.spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let bands = posterior_predictive_strength(&chain, &resolved.spec, &network, &mut rng)?;
    let band_rows: Vec<Vec<String>> = bands
        .iter()
        .map(|b| {
            vec![
                (b.t + 1).to_string(),
                b.mean.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
            ]
        })
        .collect();
    write_table(
        &["t", "mean", "lower95", "upper95"],
        &band_rows,
        &out_path(&out_dir, "strength_bands.csv"),
    )?;

    let mut outputs = vec!["strength_bands.csv".to_string()];
    let missing = network.missing_entries();
    if !missing.is_empty() {
        let draws = impute_missing(&chain, &resolved.spec, &network, &mut rng)?;
        let labels = network.labels();
        let mut rows = Vec::new();
        for (k, &(i, j, t)) in draws.targets.iter().enumerate() {
            for (d, &v) in draws.values[k].iter().enumerate() {
                rows.push(vec![
                    (t + 1).to_string(),
                    labels[i].clone(),
                    labels[j].clone(),
                    (d + 1).to_string(),
                    v.to_string(),
                ]);
            }
        }
        write_table(
            &["t", "i", "j", "draw", "value"],
            &rows,
            &out_path(&out_dir, "predictive_draws.csv"),
        )?;
        outputs.push("predictive_draws.csv".into());

        if let Some(truth_path) = &truth_data {
            let truth_net = ingest_edges(truth_path)?;
            if truth_net.n_nodes() != network.n_nodes() || truth_net.n_times() != network.n_times()
            {
                bail!("--truth-data dimensions do not match --data");
            }
            let truths: Vec<u64> = draws
                .targets
                .iter()
                .map(|&(i, j, t)| {
                    if truth_net.is_observed(i, j, t) {
                        Ok(truth_net.count(i, j, t))
                    } else {
                        Err(anyhow!("truth data is masked at ({i}, {j}, t={t})"))
                    }
                })
                .collect::<Result<_>>()?;
            let m = predictive_metrics(&truths, &draws, &mut rng)?;
            write_table(
                &["label", "mae", "mse", "rmse", "coverage", "awi", "mtp", "vtp", "pe"],
                &[vec![
                    label.clone(),
                    m.mae.to_string(),
                    m.mse.to_string(),
                    m.rmse.to_string(),
                    m.coverage.to_string(),
                    m.awi.to_string(),
                    m.mtp.to_string(),
                    m.vtp.to_string(),
                    m.pe.to_string(),
                ]],
                &out_path(&out_dir, "metrics.csv"),
            )?;
            outputs.push("metrics.csv".into());
        }
    } else if truth_data.is_some() {
        bail!("--truth-data was given but --data has no masked entries to impute");
    }

    let mut config = resolved.config.clone();
    config.insert("data".into(), data.display().to_string());
    config.insert("chain".into(), chain_path.display().to_string());
    config.insert("seed".into(), seed.to_string());
    config.insert("label".into(), label);
    if let Some(t) = &truth_data {
        config.insert("truth-data".into(), t.display().to_string());
    }
    let mut manifest = Manifest::new("predict", seed, config);
    manifest.outputs = outputs;
    manifest.write(&out_path(&out_dir, "manifest.json"))?;
    Ok(())
}

pub fn properties(args: &PropertiesArgs) -> Result<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let out_dir = resolve_out(&file, &args.out)?;
    let seed = file.resolve(args.seed, "seed", 1u64)?;
    let reps = file.resolve(args.reps, "reps", 200usize)?;
    let lambdas_raw = file.resolve(
        args.lambdas.clone(),
        "lambdas",
        "1,2".to_string(),
    )?;
    let lambdas: Vec<f64> = parse_list(&lambdas_raw)?;
    let theta_law = file.resolve(args.theta_law, "theta-law", 0.3)?;
    let conc_nodes_raw = file.resolve(args.conc_nodes.clone(), "conc-nodes", "10,20,40".to_string())?;
    let conc_nodes: Vec<usize> = parse_list(&conc_nodes_raw)?;
    let conc_thetas_raw = file.resolve(args.conc_thetas.clone(), "conc-thetas", "0,0.6".to_string())?;
    let conc_thetas: Vec<f64> = parse_list(&conc_thetas_raw)?;

    // Total strength law for the requested intensities.
    let law = total_strength_law(&lambdas, theta_law)?;
    let m = StrengthMoments::of(&law);
    write_table(
        &["lambda_sum", "theta", "expected", "variance", "dispersion_index"],
        &[vec![
            law.lambda().to_string(),
            law.theta().to_string(),
            m.expected.to_string(),
            m.variance.to_string(),
            m.dispersion_index.to_string(),
        ]],
        &out_path(&out_dir, "strength_law.csv"),
    )?;

    // Sensitivity curves: theta solving a target dispersion index per
    // sigma_alpha2, for a few network sizes, and theta solving a target
    // average strength for a few factor levels.
    let grid: Vec<f64> = (1..=40).map(|k| 0.005 * k as f64).collect();
    let mut disp_rows = Vec::new();
    for &target in &[0.5, 1.5] {
        for &n in &[10usize, 20, 22] {
            for &s2 in &grid {
                let theta = theta_for_dispersion(s2, target, n, 0.0);
                disp_rows.push(vec![
                    target.to_string(),
                    n.to_string(),
                    s2.to_string(),
                    theta.map_or("NA".to_string(), |t| t.to_string()),
                ]);
            }
        }
    }
    write_table(
        &["target_dispersion", "n_nodes", "sigma_alpha2", "theta"],
        &disp_rows,
        &out_path(&out_dir, "sensitivity_dispersion.csv"),
    )?;

    let mut strength_rows = Vec::new();
    for &target in &[10.0, 20.0] {
        for f in [10.0f64.ln(), 20.0f64.ln(), 32.0f64.ln()] {
            for &s2 in &grid {
                let theta = theta_for_strength(s2, target, f);
                strength_rows.push(vec![
                    target.to_string(),
                    f.to_string(),
                    s2.to_string(),
                    theta.map_or("NA".to_string(), |t| t.to_string()),
                ]);
            }
        }
    }
    write_table(
        &["target_strength", "f_value", "sigma_alpha2", "theta"],
        &strength_rows,
        &out_path(&out_dir, "sensitivity_strength.csv"),
    )?;

    // Concentration experiment over network sizes and dispersion values.
    let mut conc_rows = Vec::new();
    for &theta in &conc_thetas {
        for (cfg_idx, &n) in conc_nodes.iter().enumerate() {
            let lambda = ring_intensity_matrix(n, 2.0);
            let report = concentration_experiment(
                &lambda,
                theta,
                reps,
                seed.wrapping_add(cfg_idx as u64),
            )?;
            conc_rows.push(vec![
                n.to_string(),
                theta.to_string(),
                report.quantile95.to_string(),
                report.bound_shape.to_string(),
                report.v2.to_string(),
                report.rho_expected.to_string(),
            ]);
        }
    }
    write_table(
        &["n_nodes", "theta", "quantile95", "bound_shape", "v2", "rho_expected"],
        &conc_rows,
        &out_path(&out_dir, "concentration.csv"),
    )?;

    let mut config = BTreeMap::new();
    config.insert("seed".into(), seed.to_string());
    config.insert("reps".into(), reps.to_string());
    config.insert("lambdas".into(), lambdas_raw);
    config.insert("theta-law".into(), theta_law.to_string());
    config.insert("conc-nodes".into(), conc_nodes_raw);
    config.insert("conc-thetas".into(), conc_thetas_raw);
    let mut manifest = Manifest::new("properties", seed, config);
    manifest.outputs = vec![
        "strength_law.csv".into(),
        "sensitivity_dispersion.csv".into(),
        "sensitivity_strength.csv".into(),
        "concentration.csv".into(),
    ];
    manifest.write(&out_path(&out_dir, "manifest.json"))?;
    Ok(())
}

/// A fixed banded intensity pattern used by the concentration experiment:
/// every pair at ring distance 1 or 2 has the base intensity, scaled down
/// with distance.
pub fn ring_intensity_matrix(n: usize, base: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let ring = (j - i).min(n - (j - i));
            if ring == 1 {
                m.set(i, j, base);
            } else if ring == 2 {
                m.set(i, j, base / 2.0);
            }
        }
    }
    m
}

pub fn dispersion(args: &DispersionArgs) -> Result<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let data = file
        .resolve_opt(args.data.clone(), "data")?
        .ok_or_else(|| anyhow!("--data is required"))?;
    let split = file
        .resolve_opt(args.split, "split")?
        .ok_or_else(|| anyhow!("--split is required (1-based boundary of the second sub-period)"))?;
    let out_dir = resolve_out(&file, &args.out)?;

    let network = ingest_edges(&data)?;
    // The CLI takes the 1-based first time of the second sub-period.
    if split < 2 {
        bail!("--split must be at least 2");
    }
    let rows = dispersion_diagnostics(&network, split - 1)?;
    let labels = network.labels();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                labels[r.i].clone(),
                labels[r.j].clone(),
                (r.period + 1).to_string(),
                r.mean.to_string(),
                r.variance.to_string(),
                r.log_mean.to_string(),
                r.log_variance.to_string(),
                r.log_dispersion.to_string(),
                r.acf1.to_string(),
                r.degenerate.to_string(),
            ]
        })
        .collect();
    write_table(
        &[
            "i",
            "j",
            "period",
            "mean",
            "variance",
            "log_mean",
            "log_variance",
            "log_dispersion",
            "acf1",
            "degenerate",
        ],
        &table,
        &out_path(&out_dir, "dispersion.csv"),
    )?;

    let mut config = BTreeMap::new();
    config.insert("data".into(), data.display().to_string());
    config.insert("split".into(), split.to_string());
    let mut manifest = Manifest::new("dispersion", 0, config);
    manifest.outputs = vec!["dispersion.csv".into()];
    manifest.write(&out_path(&out_dir, "manifest.json"))?;
    Ok(())
}

fn resolve_out(file: &ConfigFile, cli: &Option<PathBuf>) -> Result<PathBuf> {
    let out = file
        .resolve_opt(cli.clone(), "out")?
        .ok_or_else(|| anyhow!("--out is required"))?;
    std::fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    Ok(out)
}

