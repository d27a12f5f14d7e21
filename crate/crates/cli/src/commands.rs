use std::fmt::Write as _;
use std::path::Path;

use hais_core::anneal::SWEEP_CSV_HEADER;
use hais_core::kernel::half_power_gamma;
use hais_core::likelihood::LikelihoodReport;
use hais_core::linalg::Matrix;
use hais_core::pipeline::io::{read_matrix, read_pgm, write_binary_matrix, write_text_matrix};
use hais_core::pipeline::{apply_whiten, extract_patches, fit_whiten, PatchConfig, WhitenTransform};
use hais_core::{
    analysis_log_likelihood, convergence_sweep, generative_log_likelihood, run_chain, AnyModel, Dataset,
    EnergyModel, Estimator, GaussianReference, HaisConfig, ModelFile,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::manifest::RunManifest;
use crate::{AnnealArgs, CliError, CommonArgs, EstimateArgs, LoglikArgs, PreprocessArgs, SweepArgs};

/// 17 significant digits, enough to round-trip any f64.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn prepare(common: &CommonArgs) -> Result<(), CliError> {
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&common.out)
        .map_err(|e| usage(format!("cannot create output directory {}: {e}", common.out.display())))
}

fn load_model(path: &Path) -> Result<AnyModel<f64>, CliError> {
    let file = ModelFile::load(path)?;
    Ok(file.build::<f64>()?)
}

fn analysis_target<'m>(model: &'m AnyModel<f64>, command: &str) -> Result<&'m dyn EnergyModel<f64>, CliError> {
    model.as_analysis().ok_or_else(|| {
        usage(format!(
            "`{command}` needs an analysis model but the file holds a {}; use `loglik --generative`",
            model.kind()
        ))
    })
}

fn parse_estimator(name: &str) -> Result<Estimator, CliError> {
    Ok(name.parse::<Estimator>()?)
}

fn anneal_config(a: &AnnealArgs, n: usize, estimator: Estimator, seed: u64) -> Result<HaisConfig<f64>, CliError> {
    let mut cfg = HaisConfig::new(n, a.particles, seed)
        .with_estimator(estimator)
        .with_epsilon(a.epsilon);
    cfg.gamma = a.gamma.unwrap_or_else(|| half_power_gamma(a.epsilon));
    cfg.mh_sigma = a.mh_sigma;
    cfg.validate()?;
    Ok(cfg)
}

fn config_json(cfg: &HaisConfig<f64>, common: &CommonArgs) -> serde_json::Value {
    json!({
        "n_distributions": cfg.n_distributions,
        "n_particles": cfg.n_particles,
        "epsilon": cfg.epsilon,
        "gamma": cfg.gamma,
        "estimator": cfg.estimator.name(),
        "mh_sigma": cfg.mh_sigma,
        "seed": cfg.seed,
        "threads": common.threads,
        "out": common.out.display().to_string(),
    })
}

pub fn estimate(a: &EstimateArgs, argv: &[String]) -> Result<(), CliError> {
    prepare(&a.common)?;
    let model = load_model(&a.model)?;
    let target = analysis_target(&model, "estimate")?;
    let cfg = anneal_config(&a.anneal, a.n, parse_estimator(&a.estimator)?, a.common.seed)?;
    let est = run_chain(&GaussianReference::standard(target.dim()), target, &cfg)?;

    println!("log_z {}", num(est.log_z));
    println!("std_err {}", num(est.std_err));
    println!("ess {}", num(est.ess));
    println!("acceptance_rate {}", num(est.acceptance_rate));
    if let Some(t) = target.analytic_log_z() {
        println!("analytic_log_z {}", num(t));
    }

    let out = &a.common.out;
    let csv = format!(
        "log_z,std_err,ess,acceptance_rate\n{},{},{},{}\n",
        num(est.log_z),
        num(est.std_err),
        num(est.ess),
        num(est.acceptance_rate)
    );
    write_file(&out.join("estimate.csv"), &csv)?;
    if let Some(path) = &a.particles_out {
        let mut s = String::from("particle,log_weight\n");
        for (i, w) in est.particle_log_weights.iter().enumerate() {
            let _ = writeln!(s, "{i},{}", num(*w));
        }
        write_file(path, &s)?;
    }

    let mut config = config_json(&cfg, &a.common);
    config["model"] = json!(a.model.display().to_string());
    config["particles_out"] = json!(a.particles_out.as_ref().map(|p| p.display().to_string()));
    let mut manifest = RunManifest::new("estimate", config, cfg.seed, argv);
    manifest.add_input(&a.model)?;
    manifest.write(out)
}

fn report_csv(report: &LikelihoodReport<f64>) -> String {
    let mut s = String::from("index,log_likelihood,std_err_logz,ess\n");
    for p in &report.points {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            p.index,
            num(p.log_likelihood),
            num(p.std_err_logz),
            num(p.ess)
        );
    }
    let _ = writeln!(
        s,
        "# mean_ll={},std_err={},points={},failures={}",
        num(report.mean_ll),
        num(report.std_err),
        report.points.len(),
        report.failures.len()
    );
    s
}

/// Standard error of the mean log likelihood coming from the normalizer
/// estimates alone.
fn hais_std_err(report: &LikelihoodReport<f64>) -> f64 {
    match &report.log_z {
        Some(est) => est.std_err,
        None => {
            let n = report.points.len() as f64;
            report.points.iter().map(|p| p.std_err_logz.powi(2)).sum::<f64>().sqrt() / n
        }
    }
}

pub fn loglik(a: &LoglikArgs, argv: &[String]) -> Result<(), CliError> {
    prepare(&a.common)?;
    let model = load_model(&a.model)?;
    let data = Dataset::new(read_matrix(&a.data)?)?;
    let cfg = anneal_config(&a.anneal, a.n, parse_estimator(&a.estimator)?, a.common.seed)?;
    let report = if a.generative {
        let gen = model.as_generative().ok_or_else(|| {
            usage(format!("--generative needs a generative model but the file holds a {}", model.kind()))
        })?;
        generative_log_likelihood(gen, &data, &cfg)?
    } else {
        if model.as_generative().is_some() {
            return Err(usage(format!(
                "{} is a generative model; pass --generative",
                model.kind()
            )));
        }
        analysis_log_likelihood(analysis_target(&model, "loglik")?, &data, &cfg)?
    };

    for f in &report.failures {
        eprintln!("datapoint {} failed: {}", f.index, f.message);
    }
    let hais_se = hais_std_err(&report);
    println!(
        "mean_ll {} std_err {} hais_std_err {} points {} failures {}",
        num(report.mean_ll),
        num(report.std_err),
        num(hais_se),
        report.points.len(),
        report.failures.len()
    );

    let out = &a.common.out;
    write_file(&out.join("loglik.csv"), &report_csv(&report))?;
    let summary = json!({
        "mode": if a.generative { "generative" } else { "analysis" },
        "mean_ll": report.mean_ll,
        "std_err_over_datapoints": report.std_err,
        "std_err_hais": hais_se,
        "points": report.points.len(),
        "log_z": report.log_z.as_ref().map(|e| json!({
            "log_z": e.log_z,
            "std_err": e.std_err,
            "ess": e.ess,
            "acceptance_rate": e.acceptance_rate,
        })),
        "failures": report.failures.iter().map(|f| json!({"index": f.index, "message": f.message})).collect::<Vec<_>>(),
    });
    write_file(
        &out.join("loglik.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;

    let mut config = config_json(&cfg, &a.common);
    config["model"] = json!(a.model.display().to_string());
    config["data"] = json!(a.data.display().to_string());
    config["generative"] = json!(a.generative);
    let mut manifest = RunManifest::new("loglik", config, cfg.seed, argv);
    manifest.add_input(&a.model)?;
    manifest.add_input(&a.data)?;
    manifest.write(out)?;

    if report.points.is_empty() && !report.failures.is_empty() {
        return Err(CliError::Runtime(format!("all {} datapoints failed", report.failures.len())));
    }
    Ok(())
}

pub fn sweep(a: &SweepArgs, argv: &[String]) -> Result<(), CliError> {
    prepare(&a.common)?;
    let estimators = a
        .estimators
        .iter()
        .map(|s| parse_estimator(s))
        .collect::<Result<Vec<_>, _>>()?;
    if a.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    if let Some(bad) = a.n_list.iter().find(|&&n| n == 0) {
        return Err(usage(format!("--n-list entries must be positive, got {bad}")));
    }
    let model = load_model(&a.model)?;
    let target = analysis_target(&model, "sweep")?;
    let base = anneal_config(&a.anneal, 1, Estimator::Hais, a.common.seed)?;
    let q = GaussianReference::standard(target.dim());
    let rows = convergence_sweep(&q, target, &a.n_list, &estimators, a.repeats, &base)?;
    let truth = target.analytic_log_z();

    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.n_distributions,
            r.estimator.name(),
            r.repeat,
            num(r.log_z),
            num(r.std_err),
            num(r.ess),
            num(r.seconds)
        );
    }
    let out = &a.common.out;
    write_file(&out.join("sweep.csv"), &csv)?;
    if a.svg {
        write_file(&out.join("sweep.svg"), &crate::svg::render(&rows, &estimators, truth))?;
    }

    if let Some(t) = truth {
        println!("true log_z {}", num(t));
    }
    for &n in &a.n_list {
        for &e in &estimators {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.n_distributions == n && r.estimator == e)
                .map(|r| r.log_z)
                .collect();
            println!("N {n} {} mean log_z {}", e.name(), num(v.iter().sum::<f64>() / v.len() as f64));
        }
    }

    let mut config = config_json(&base, &a.common);
    config["n_distributions"] = json!(a.n_list);
    config["estimator"] = json!(estimators.iter().map(|e| e.name()).collect::<Vec<_>>());
    config["repeats"] = json!(a.repeats);
    config["svg"] = json!(a.svg);
    config["model"] = json!(a.model.display().to_string());
    let mut manifest = RunManifest::new("sweep", config, base.seed, argv);
    manifest.add_input(&a.model)?;
    manifest.write(out)
}

fn variance_range(m: &Matrix<f64>) -> (f64, f64) {
    let n = m.rows() as f64;
    (0..m.cols())
        .map(|j| {
            let mean = m.iter_rows().map(|r| r[j]).sum::<f64>() / n;
            m.iter_rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

pub fn preprocess(a: &PreprocessArgs, argv: &[String]) -> Result<(), CliError> {
    prepare(&a.common)?;
    let patch_cfg = PatchConfig {
        patch_edge: a.patch_edge,
        n_patches: a.n_patches,
        apply_log: !a.no_log,
    };
    let data = match &a.matrix {
        Some(path) => read_matrix(path)?,
        None => {
            let images = a.images.iter().map(|p| read_pgm(p)).collect::<Result<Vec<_>, _>>()?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
            extract_patches(&images, &patch_cfg, &mut rng)?
        }
    };
    if data.rows() < 2 {
        return Err(usage(format!("need at least 2 rows to whiten, got {}", data.rows())));
    }

    let (transform, fitted) = match &a.apply_transform {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            (WhitenTransform::from_json(&text)?, false)
        }
        None => (fit_whiten(&data, a.components.unwrap_or(data.cols()))?, true),
    };
    let whitened = apply_whiten(&transform, &data)?;

    let out = &a.common.out;
    let data_name = if a.binary { "whitened.bin" } else { "whitened.txt" };
    if a.binary {
        write_binary_matrix(&out.join(data_name), &whitened)?;
    } else {
        write_text_matrix(&out.join(data_name), &whitened)?;
    }
    if fitted {
        write_file(&out.join("transform.json"), &transform.to_json())?;
    }
    let (lo, hi) = variance_range(&whitened);
    println!(
        "rows {} input_dim {} components {} output variance min {} max {}",
        whitened.rows(),
        transform.input_dim(),
        transform.output_dim(),
        num(lo),
        num(hi)
    );

    let config = json!({
        "images": a.images.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "matrix": a.matrix.as_ref().map(|p| p.display().to_string()),
        "patch_edge": a.patch_edge,
        "n_patches": a.n_patches,
        "apply_log": !a.no_log,
        "components": transform.output_dim(),
        "apply_transform": a.apply_transform.as_ref().map(|p| p.display().to_string()),
        "binary": a.binary,
        "seed": a.common.seed,
        "threads": a.common.threads,
        "out": out.display().to_string(),
    });
    let mut manifest = RunManifest::new("preprocess", config, a.common.seed, argv);
    for p in a.matrix.iter().chain(&a.images).chain(&a.apply_transform) {
        manifest.add_input(p)?;
    }
    manifest.write(out)
}
