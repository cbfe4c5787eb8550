//! Run configuration shared by all subcommands.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use wavestab::verify::DEFAULT_SEED;
use wavestab::{NewtonSettings, WaveParameters};

use crate::CliError;

pub const MAX_EPS: f64 = 0.1;
pub const MAX_ORDER: usize = 512;

/// Flags accepted by every subcommand. Values from `--config` take precedence.
#[derive(Args, Clone, Debug)]
pub struct Flags {
    /// Wave number.
    #[arg(long, global = true)]
    pub k: Option<f64>,
    /// Conformal mean depth.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Gravitational acceleration.
    #[arg(long, global = true)]
    pub g: Option<f64>,
    /// Bifurcating mode.
    #[arg(long, global = true)]
    pub mode: Option<usize>,
    /// Largest branch amplitude.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eps_max: Option<f64>,
    /// Number of nonzero branch amplitudes.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Fourier truncation order, a power of two.
    #[arg(long, global = true)]
    pub n_trunc: Option<usize>,
    /// Newton tolerance on the sup norm of the residual.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output path. Tables go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random test vectors, decimal or 0x-prefixed hex.
    #[arg(long, global = true, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Points per axis of the stability-region grid.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Largest mode in dispersion and symbol tables.
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    /// Branch JSON read by `spectrum`.
    #[arg(long, global = true)]
    pub branch: Option<PathBuf>,
    /// JSON file of configuration values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| e.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub k: f64,
    pub h: f64,
    pub g: f64,
    pub mode: usize,
    pub eps_max: f64,
    pub steps: usize,
    pub n_trunc: usize,
    pub tol: f64,
    pub seed: u64,
    pub grid: usize,
    pub n_max: usize,
    pub h_range: [f64; 2],
    pub mu_range: [f64; 2],
    pub out: Option<PathBuf>,
    pub branch: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            h: 1.0,
            g: 1.0,
            mode: 1,
            eps_max: 0.05,
            steps: 10,
            n_trunc: 128,
            tol: NewtonSettings::default().tol,
            seed: DEFAULT_SEED,
            grid: 101,
            n_max: 10,
            h_range: [0.05, 3.0],
            mu_range: [0.05, 3.0],
            out: None,
            branch: None,
        }
    }
}

impl RunConfig {
    /// Defaults, then flags, then the `--config` file, validated.
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let mut c = Self::default();
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = flags.$f.clone() { c.$f = v; })* };
        }
        take!(k, h, g, mode, eps_max, steps, n_trunc, tol, seed, grid, n_max);
        if flags.out.is_some() {
            c.out = flags.out.clone();
        }
        if flags.branch.is_some() {
            c.branch = flags.branch.clone();
        }
        if let Some(path) = &flags.config {
            c = c.overridden_by(path)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn overridden_by(self, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let Value::Object(file) = file else {
            return Err(CliError::Config(format!(
                "{}: expected a JSON object",
                path.display()
            )));
        };
        let mut merged = serde_json::to_value(self)?;
        if let Value::Object(m) = &mut merged {
            m.extend(file);
        }
        serde_json::from_value(merged)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        for (name, v) in [
            ("k", self.k),
            ("h", self.h),
            ("g", self.g),
            ("tol", self.tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(0.0..=MAX_EPS).contains(&self.eps_max) {
            return bad(format!(
                "eps_max must lie in [0, {MAX_EPS}], got {}",
                self.eps_max
            ));
        }
        if !self.n_trunc.is_power_of_two() || self.n_trunc > MAX_ORDER {
            return bad(format!(
                "n_trunc must be a power of two at most {MAX_ORDER}, got {}",
                self.n_trunc
            ));
        }
        if self.mode == 0 || self.mode > self.n_trunc {
            return bad(format!(
                "mode must lie in 1..={}, got {}",
                self.n_trunc, self.mode
            ));
        }
        if self.grid < 2 {
            return bad(format!(
                "grid needs at least 2 points per axis, got {}",
                self.grid
            ));
        }
        for (name, [lo, hi]) in [("h_range", self.h_range), ("mu_range", self.mu_range)] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return bad(format!(
                    "{name} must satisfy 0 < min < max, got [{lo}, {hi}]"
                ));
            }
        }
        Ok(())
    }

    /// Parameters with `μ` left at its default; commands set it as needed.
    pub fn params(&self) -> WaveParameters {
        WaveParameters {
            k: self.k,
            h: self.h,
            g: self.g,
            ..WaveParameters::default()
        }
    }

    pub fn newton(&self) -> NewtonSettings {
        NewtonSettings {
            tol: self.tol,
            ..NewtonSettings::default()
        }
    }
}
