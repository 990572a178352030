use anyhow::Result;
use clap::ValueEnum;
use ldpustat::functionals::{divergence, g1, g2, lift_xi1, lift_xi2, t_functional, BlockMeasure, TiltProfile, DEFAULT_TABLE_LIMIT};
use ldpustat::io::{self, profile_csv, table_csv};
use ldpustat::tilt::TiltSolverConfig;
use ldpustat::variational::{constrained_rate, legendre_rate, solve_z, Family, SolveConfig};
use ldpustat::{FiniteBaseMeasureF64, Motif, PhiKernelF64, StepKernelF64};
use serde_json::{json, Value};

use crate::inputs;
use crate::opts::Opts;
use crate::output::{num, to_json, Sink};
use crate::InputError;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Op {
    /// `Z(θ)` with its optimizers.
    Zlimit,
    /// `(θ, Z'(θ), θZ' − Z)` over `--grid`.
    Legendre,
    /// Constrained rate at each `--t`.
    Rate,
    /// Objective terms of the profile in `--profile`.
    Objective,
}

pub struct Problem {
    pub family: Family,
    pub motif: Motif,
    pub w: StepKernelF64,
    pub mu: FiniteBaseMeasureF64,
    pub phi: Option<PhiKernelF64>,
    pub cfg: SolveConfig,
}

impl Problem {
    pub fn from_opts(o: &Opts) -> Result<Self> {
        let family = inputs::family(o)?;
        let motif = inputs::motif(o)?;
        let w = inputs::kernel(o.w.as_deref().unwrap_or("constant:1"))?;
        let mu = inputs::measure(o, family)?;
        let phi = match family {
            Family::Generic => Some(inputs::phi(o, motif.v(), &mu, family)?),
            _ => None,
        };
        let mut cfg = SolveConfig { blocks: o.blocks, seed: o.seed(), ..SolveConfig::default() };
        if let Some(s) = o.starts {
            cfg.starts = s;
        }
        cfg.validate()?;
        Ok(Self { family, motif, w, mu, phi, cfg })
    }
}

pub fn run(op: Op, o: &Opts) -> Result<bool> {
    let sink = Sink::new(o.out.as_deref())?;
    let p = Problem::from_opts(o)?;
    let value = match op {
        Op::Zlimit => zlimit(&p, o.theta_or(0.0), &sink)?,
        Op::Legendre => {
            let grid = o.grid()?.ok_or_else(|| InputError("missing --grid".into()))?;
            let pts = legendre_rate(p.family, &p.motif, &p.w, &p.mu, p.phi.as_ref(), &grid, &p.cfg)?;
            let rows: Vec<Vec<f64>> = pts.iter().map(|r| vec![r.theta, r.t, r.rate]).collect();
            let file = sink.file("rate_curve.csv", &table_csv(&["theta", "t", "rate"], &rows))?;
            json!({ "points": to_json(&pts)?, "csv": file })
        }
        Op::Rate => {
            let ts = o.ts()?.ok_or_else(|| InputError("missing --t".into()))?;
            let mut out = Vec::new();
            let mut rows = Vec::new();
            for t in ts {
                let r = constrained_rate(p.family, &p.motif, &p.w, &p.mu, p.phi.as_ref(), t, None, &p.cfg)?;
                rows.push(vec![r.t, r.rate, r.multiplier]);
                out.push(to_json(&r)?);
            }
            let file = sink.file("rates.csv", &table_csv(&["t", "rate", "multiplier"], &rows))?;
            json!({ "rates": out, "csv": file })
        }
        Op::Objective => objective(&p, o)?,
    };
    sink.json("solve.json", &value)?;
    Ok(true)
}

fn zlimit(p: &Problem, theta: f64, sink: &Sink) -> Result<Value> {
    let r = solve_z(p.family, &p.motif, &p.w, &p.mu, p.phi.as_ref(), theta, &p.cfg)?;
    let mut refs = Vec::new();
    for (i, f) in r.optimizers.iter().enumerate() {
        refs.push(sink.file(&format!("optimizer_{i}.csv"), &profile_csv(&r.widths, r.channels, f))?);
    }
    let optimizers = if sink.active() { json!(refs) } else { to_json(&r.optimizers)? };
    Ok(json!({
        "family": to_json(&r.family)?,
        "theta": num(theta),
        "z_value": num(r.value),
        "optimizers": optimizers,
        "optimizer_g": to_json(&r.optimizer_g)?,
        "residuals": to_json(&r.residuals)?,
        "stationary_values": to_json(&r.stationary_values)?,
        "constant_lower_bound": num(r.constant_lower_bound),
        "flags": {
            "multiple_optimizers": r.optimizers.len() > 1,
            "non_differentiable": r.multiple_g(1e-6),
            "starts_converged": r.starts.iter().filter(|s| s.converged).count(),
            "starts": r.starts.len(),
        },
    }))
}

fn objective(p: &Problem, o: &Opts) -> Result<Value> {
    let path = o.profile.as_ref().ok_or_else(|| InputError("missing --profile".into()))?;
    let prof = io::parse_profile(&inputs::read(path)?)?;
    let widths = p.w.widths();
    if prof.block_count() != widths.len() {
        return Err(InputError(format!("profile has {} blocks, kernel has {}", prof.block_count(), widths.len())).into());
    }
    let theta = o.theta_or(0.0);
    let (g, penalty) = match (p.family, &prof) {
        (Family::Multilinear, TiltProfile::Real { values }) => {
            prof.check_range(&p.mu)?;
            let nu = lift_xi1(&p.mu, &widths, values, &TiltSolverConfig::default())?;
            (g1(&p.motif, &p.w, values)?, divergence(&nu, &p.mu)?)
        }
        (Family::Potts, TiltProfile::Potts { .. }) => {
            let nu = lift_xi2(&widths, &prof)?;
            (g2(&p.motif, &p.w, &prof)?, divergence(&nu, &p.mu)?)
        }
        (Family::Generic, TiltProfile::Potts { colors, values }) if *colors == p.mu.len() => {
            let nu = BlockMeasure::new(widths.clone(), *colors, values.clone())?;
            let phi = p.phi.as_ref().expect("generic family carries φ");
            (t_functional(&p.motif, &p.w, &nu, phi, DEFAULT_TABLE_LIMIT)?, divergence(&nu, &p.mu)?)
        }
        _ => return Err(InputError("profile shape does not match the family".into()).into()),
    };
    Ok(json!({ "theta": num(theta), "g": num(g), "penalty": num(penalty), "value": num(theta * g - penalty) }))
}
