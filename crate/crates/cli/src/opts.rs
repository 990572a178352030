use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::InputError;

/// Flags shared by every subcommand. Each may also come from the TOML file
/// given by `--config`, under the same key; flags win.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Opts {
    /// Coupling matrix CSV (n rows of n values).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Limit kernel: CSV path or `constant:c`.
    #[arg(long)]
    pub w: Option<String>,
    /// Finite-n coupling matrix CSV compared against `--w`.
    #[arg(long)]
    pub wn: Option<PathBuf>,
    /// Motif file (`v=3` header, one-based edges) or builtin name.
    #[arg(long)]
    pub motif: Option<String>,
    /// `product`, `monochrome` or `table:PATH`.
    #[arg(long)]
    pub phi: Option<String>,
    /// `rademacher`, `uniform:c` or `csv:PATH`.
    #[arg(long)]
    pub mu: Option<String>,
    /// Colour count; shorthand for `--mu uniform:c`.
    #[arg(long)]
    pub c: Option<usize>,
    /// `multilinear` (alias `ising`), `potts` or `generic`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Target value(s) of the statistic, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// System size(s), comma-separated.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// `a:b:k` (k points from a to b) or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Data CSV of atom indices.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub site: Option<usize>,
    /// Profile CSV (one row per block).
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Norm exponents, comma-separated (`inf` allowed).
    #[arg(long)]
    pub r: Option<String>,
    /// Random starts of the variational solver.
    #[arg(long)]
    pub starts: Option<usize>,
}

impl Opts {
    /// Fills unset flags from the TOML file at `path`.
    pub fn merged(self, path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(self) };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Opts = toml::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let mut merged = serde_json::to_value(&file)?;
        let flags = serde_json::to_value(&self)?;
        if let (Some(m), Some(f)) = (merged.as_object_mut(), flags.as_object()) {
            for (k, v) in f {
                if !v.is_null() {
                    m.insert(k.clone(), v.clone());
                }
            }
        }
        Ok(serde_json::from_value(merged)?)
    }

    pub fn theta_or(&self, default: f64) -> f64 {
        self.theta.unwrap_or(default)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn ns(&self, default: &[usize]) -> Result<Vec<usize>> {
        match &self.n {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| InputError(format!("--n: '{x}' is not a size")).into()))
                .collect(),
        }
    }

    pub fn n_single(&self) -> Result<Option<usize>> {
        match &self.n {
            None => Ok(None),
            Some(_) => {
                let v = self.ns(&[])?;
                if v.len() != 1 {
                    return Err(InputError("--n takes a single size here".into()).into());
                }
                Ok(Some(v[0]))
            }
        }
    }

    pub fn ts(&self) -> Result<Option<Vec<f64>>> {
        self.t.as_deref().map(|s| parse_list(s, "--t")).transpose()
    }

    pub fn grid(&self) -> Result<Option<Vec<f64>>> {
        self.grid.as_deref().map(parse_grid).transpose()
    }
}

pub fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            let x = x.trim();
            x.parse::<f64>().map_err(|_| InputError(format!("{flag}: '{x}' is not a number")).into())
        })
        .collect()
}

/// `a:b:k` or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, k] => {
            let a: f64 = a.trim().parse().map_err(|_| InputError(format!("--grid: bad start '{a}'")))?;
            let b: f64 = b.trim().parse().map_err(|_| InputError(format!("--grid: bad end '{b}'")))?;
            let k: usize = k.trim().parse().map_err(|_| InputError(format!("--grid: bad count '{k}'")))?;
            if k < 2 {
                return Err(InputError("--grid needs at least two points".into()).into());
            }
            Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
        }
        [_] => parse_list(s, "--grid"),
        _ => Err(InputError(format!("--grid: cannot parse '{s}'")).into()),
    }
}
