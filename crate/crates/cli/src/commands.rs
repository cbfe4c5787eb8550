use std::fs;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use wavestab::continuation::{branch_validate, critical_mu, trace_branch};
use wavestab::spectral::nan_max;
use wavestab::stability::{spectrum_along_branch, trivial_full_variation};
use wavestab::verify::{run_verify as verify_suites, VerifyConfig};
use wavestab::wave::symbol_compare;
use wavestab::{Branch, WaveParameters};

use crate::output::{num, provenance, sink, write_json, Table};
use crate::{CliError, RunConfig};

pub fn run_dispersion(config: &RunConfig) -> Result<(), CliError> {
    let mut t = Table::create(
        config.out.as_deref(),
        &provenance("dispersion", config),
        &["n", "mu_star"],
    )?;
    for n in 1..=config.n_max {
        t.row([n.to_string(), num(critical_mu(n, config.k, config.h)?)])?;
    }
    t.finish()
}

/// Paths of the branch JSON and CSV: `--out` with its extension replaced,
/// or `branch.json` and `branch.csv`.
pub fn branch_paths(config: &RunConfig) -> (PathBuf, PathBuf) {
    let base = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("branch"));
    (base.with_extension("json"), base.with_extension("csv"))
}

/// Traces the branch and writes whatever converged, even when the trace
/// stops early.
pub fn run_branch(config: &RunConfig) -> Result<(), CliError> {
    let trace = trace_branch(
        config.mode,
        config.eps_max,
        config.steps,
        config.params(),
        config.n_trunc,
        config.newton(),
    );
    let prov = provenance("branch", config);
    let (json_path, csv_path) = branch_paths(config);
    let b = &trace.branch;
    if !b.points.is_empty() {
        write_json(&json_path, prov.clone(), b)?;
    }
    let mut t = Table::create(
        Some(&csv_path),
        &prov,
        &["eps", "mu", "residual", "min_graph", "dmean"],
    )?;
    for p in &b.points {
        t.row([
            num(p.eps),
            num(p.mu),
            num(p.residual_norm),
            num(p.min_graph),
            num(p.depth_shift()),
        ])?;
    }
    t.finish()?;

    let max_residual = b.points.iter().map(|p| p.residual_norm).fold(0.0, nan_max);
    eprintln!(
        "branch mode {}: {} points, max residual {max_residual:.3e}",
        b.mode,
        b.points.len()
    );
    if let Ok(v) = branch_validate(b) {
        let fmt = |o: Option<f64>| o.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        eprintln!(
            "observed order: profile {}, mu {}; max Bernoulli residual {:.3e}",
            fmt(v.profile_order),
            fmt(v.mu_order),
            v.max_bernoulli
        );
    }
    match trace.failure {
        Some(e) => Err(CliError::Convergence(e.to_string())),
        None => Ok(()),
    }
}

pub fn run_spectrum(config: &RunConfig) -> Result<(), CliError> {
    let path = config
        .branch
        .as_ref()
        .ok_or_else(|| CliError::Config("spectrum needs --branch <file>".into()))?;
    let branch: Branch = serde_json::from_str(&fs::read_to_string(path)?)?;
    if branch.mode != 1 {
        return Err(CliError::Config(format!(
            "the prediction covers the first branch only, got mode {}",
            branch.mode
        )));
    }
    let spectra = spectrum_along_branch(&branch)?;
    let mut t = Table::create(
        config.out.as_deref(),
        &provenance("spectrum", config),
        &["eps", "lambda_min", "prediction", "rel_err", "n_negative"],
    )?;
    for s in &spectra {
        t.row([
            num(s.eps),
            num(s.transformed.lambda_min),
            num(s.transformed.prediction.unwrap_or(0.0)),
            s.rel_err.map(num).unwrap_or_default(),
            s.transformed.n_negative.to_string(),
        ])?;
    }
    t.finish()?;

    let nonzero: Vec<_> = spectra.iter().filter(|s| s.eps != 0.0).collect();
    let confirmed = !nonzero.is_empty()
        && nonzero
            .iter()
            .all(|s| s.transformed.lambda_min < 0.0 && s.transformed.n_negative >= 1);
    if confirmed {
        eprintln!(
            "instability confirmed at all {} nonzero amplitudes",
            nonzero.len()
        );
        Ok(())
    } else {
        Err(CliError::Verification(
            "lambda_min is not negative at every nonzero amplitude".into(),
        ))
    }
}

fn axis(range: [f64; 2], count: usize, i: usize) -> f64 {
    range[0] + (range[1] - range[0]) * i as f64 / (count - 1) as f64
}

pub fn run_region(config: &RunConfig) -> Result<(), CliError> {
    let n = config.grid;
    let base = config.params();
    let rows = (0..n * n)
        .into_par_iter()
        .map(|cell| {
            let h = axis(config.h_range, n, cell / n);
            let mu = axis(config.mu_range, n, cell % n);
            let v = trivial_full_variation(&WaveParameters { h, mu, ..base })?;
            Ok([
                num(h),
                num(mu),
                v.cond_w.to_string(),
                v.cond_h.to_string(),
                v.class.as_str().to_string(),
            ])
        })
        .collect::<Result<Vec<_>, wavestab::Error>>()?;
    let mut t = Table::create(
        config.out.as_deref(),
        &provenance("region", config),
        &["h", "mu", "cond_w", "cond_h", "class"],
    )?;
    for r in rows {
        t.row(r)?;
    }
    t.finish()
}

pub fn run_symbols(config: &RunConfig) -> Result<(), CliError> {
    let mut t = Table::create(
        config.out.as_deref(),
        &provenance("symbols", config),
        &["n", "finite_depth", "infinite_depth"],
    )?;
    for r in symbol_compare(config.k * config.h, config.n_max)? {
        t.row([r.n.to_string(), num(r.finite_depth), num(r.infinite_depth)])?;
    }
    t.finish()
}

pub fn run_verify(config: &RunConfig) -> Result<(), CliError> {
    let report = verify_suites(&VerifyConfig {
        seed: config.seed,
        order: config.n_trunc,
        params: config.params(),
        ..VerifyConfig::default()
    })?;
    let text = report.render();
    print!("{text}");
    if let Some(path) = &config.out {
        let mut out = sink(Some(path))?;
        writeln!(out, "# {}", provenance("verify", config))?;
        out.write_all(text.as_bytes())?;
        out.flush()?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<_> = report
            .suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| s.name)
            .collect();
        Err(CliError::Verification(failed.join(", ")))
    }
}
