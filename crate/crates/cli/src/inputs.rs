use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use ldpustat::gibbs::{CompleteFamily, GibbsModel};
use ldpustat::kernel::{embed_matrix, StepKernel, SymmetricMatrix};
use ldpustat::variational::Family;
use ldpustat::{io, FiniteBaseMeasureF64, Motif, PhiKernelF64, StepKernelF64};

use crate::opts::Opts;
use crate::InputError;

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn matrix(path: &Path) -> Result<SymmetricMatrix<f64>> {
    io::parse_matrix(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// `constant:c` or a kernel CSV.
pub fn kernel(spec: &str) -> Result<StepKernelF64> {
    if let Some(c) = spec.strip_prefix("constant:") {
        let c: f64 = c.trim().parse().map_err(|_| InputError(format!("bad constant kernel '{spec}'")))?;
        return Ok(StepKernel::constant(c));
    }
    let path = Path::new(spec);
    io::parse_kernel(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// The one kernel given by `--matrix`, `--wn` or `--w`.
pub fn single_kernel(o: &Opts) -> Result<StepKernelF64> {
    match (&o.matrix, &o.wn, &o.w) {
        (Some(p), None, None) | (None, Some(p), None) => Ok(embed_matrix(&matrix(p)?)),
        (None, None, Some(w)) => kernel(w),
        _ => Err(InputError("give exactly one of --matrix, --wn, --w".into()).into()),
    }
}

/// `(W_n, W)` from `--wn` (or `--matrix`) and `--w`.
pub fn kernel_pair(o: &Opts) -> Result<(StepKernelF64, StepKernelF64)> {
    let first = o.wn.as_ref().or(o.matrix.as_ref()).ok_or_else(|| InputError("missing --wn".into()))?;
    let second = o.w.as_deref().ok_or_else(|| InputError("missing --w".into()))?;
    Ok((embed_matrix(&matrix(first)?), kernel(second)?))
}

pub fn motif(o: &Opts) -> Result<Motif> {
    let spec = o.motif.as_deref().unwrap_or("k2");
    let path = Path::new(spec);
    if path.is_file() {
        Motif::parse(&read(path)?).with_context(|| format!("in {}", path.display()))
    } else if spec.contains('/') || spec.ends_with(".txt") {
        Err(InputError(format!("motif file {spec} not found")).into())
    } else {
        Ok(Motif::builtin(spec)?)
    }
}

pub fn family(o: &Opts) -> Result<Family> {
    Ok(o.family.as_deref().unwrap_or("multilinear").parse::<Family>()?)
}

/// Measure from `--mu`, else `--c` colours, else the family default.
pub fn measure(o: &Opts, family: Family) -> Result<FiniteBaseMeasureF64> {
    match (&o.mu, o.c) {
        (Some(spec), _) => measure_spec(spec),
        (None, Some(c)) => Ok(FiniteBaseMeasureF64::uniform_colors(c)?),
        (None, None) => match family {
            Family::Potts => Err(InputError("Potts needs --c or --mu".into()).into()),
            _ => Ok(FiniteBaseMeasureF64::rademacher()),
        },
    }
}

pub fn measure_spec(spec: &str) -> Result<FiniteBaseMeasureF64> {
    if spec.eq_ignore_ascii_case("rademacher") {
        return Ok(FiniteBaseMeasureF64::rademacher());
    }
    if let Some(c) = spec.strip_prefix("uniform:") {
        let c: usize = c.trim().parse().map_err(|_| InputError(format!("bad colour count in '{spec}'")))?;
        return Ok(FiniteBaseMeasureF64::uniform_colors(c)?);
    }
    let path = Path::new(spec.strip_prefix("csv:").unwrap_or(spec));
    io::parse_measure(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// `--phi`, defaulting to the family's kernel.
pub fn phi(o: &Opts, arity: usize, mu: &FiniteBaseMeasureF64, family: Family) -> Result<PhiKernelF64> {
    let default = match family {
        Family::Potts => "monochrome",
        _ => "product",
    };
    let spec = o.phi.as_deref().unwrap_or(default);
    match spec {
        "product" => Ok(PhiKernelF64::product(arity, mu)),
        "monochrome" => Ok(PhiKernelF64::monochrome(arity, mu)),
        s => match s.strip_prefix("table:") {
            Some(p) => {
                let path = Path::new(p);
                let values = io::parse_phi_table(&read(path)?).with_context(|| format!("in {}", path.display()))?;
                Ok(PhiKernelF64::table(arity, mu, values, None)?)
            }
            None => Err(InputError(format!("unknown φ '{s}'")).into()),
        },
    }
}

/// Model from `--matrix` (with motif, φ, μ) or a complete graph of size
/// `--n` for `--family ising|potts`.
pub fn gibbs_model(o: &Opts, n_override: Option<usize>) -> Result<GibbsModel> {
    let theta = o.theta_or(0.0);
    if let Some(path) = &o.matrix {
        let fam = family(o)?;
        let q = matrix(path)?;
        let motif = motif(o)?;
        let mu = measure(o, fam)?;
        let phi = phi(o, motif.v(), &mu, fam)?;
        return Ok(GibbsModel::new(motif, q, phi, mu, theta)?);
    }
    let (cf, mu) = complete_family(o)?;
    let n = match n_override {
        Some(n) => n,
        None => o.n_single()?.ok_or_else(|| InputError("give --matrix or --n".into()))?,
    };
    Ok(GibbsModel::complete(cf, n, theta, mu)?)
}

pub fn complete_family(o: &Opts) -> Result<(CompleteFamily, FiniteBaseMeasureF64)> {
    let cf: CompleteFamily = o.family.as_deref().unwrap_or("ising").parse()?;
    let mu = measure(o, cf.into())?;
    Ok((cf, mu))
}
