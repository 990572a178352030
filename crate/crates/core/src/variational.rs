//! Mean-field variational problems on step kernels.
//!
//! `Z(θ) = sup { θ G(f) − P(f) }` over profiles on the blocks of `W`, where
//! `(G, P)` is `(G₁, ∫γ)` for real profiles, `(G₂, ∫Σ f_r log(f_r/μ_r))` for
//! colour profiles and `(T_{W,φ}, D(·|ρ))` for block measures. Rate curves
//! come from Legendre sweeps over `θ` or from a direct augmented-Lagrangian
//! solve of `inf { P(f) : G(f) = t }`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{g1, g1_gradient, g2, g2_gradient, TiltProfile, DEFAULT_TABLE_LIMIT};
use crate::kernel::{derive_seed, StepKernel};
use crate::motif::Motif;
use crate::tilt::{gamma, kl_probs, mean_map, FiniteBaseMeasure, TiltSolverConfig};
use crate::ustat::{advance, checked_pow, PhiKernel};

/// Which variational problem a profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Real profiles `f ∈ cl(𝒩)` with `G₁` (product `φ`).
    Multilinear,
    /// Colour profiles with `G₂` (monochrome `φ`).
    Potts,
    /// Block measures with a tabulated `φ`.
    Generic,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "multilinear" | "ising" | "real" => Ok(Family::Multilinear),
            "potts" | "monochrome" => Ok(Family::Potts),
            "generic" => Ok(Family::Generic),
            _ => Err(Error::Config(format!("unknown family '{s}'"))),
        }
    }
}

/// Settings shared by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Refines `W` onto the common refinement with `blocks` uniform blocks.
    pub blocks: Option<usize>,
    /// Initial damping `λ` of the fixed-point map; halved whenever a step
    /// would lower the objective.
    pub damping: f64,
    /// Stationarity residual (sup-norm, mean/probability space) at which a
    /// start counts as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Random starts in addition to the constant and typical ones.
    pub starts: usize,
    pub seed: u64,
    /// Width-weighted `L¹` distance under which two profiles coincide.
    pub dedup_tolerance: f64,
    /// Points of the constant-profile pre-solve (per axis for simplices).
    pub constant_grid: usize,
    pub theta_grid: Vec<f64>,
    pub table_limit: usize,
    pub tilt: TiltSolverConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            blocks: None,
            damping: 0.5,
            tolerance: 1e-10,
            max_iterations: 100_000,
            starts: 16,
            seed: 0,
            dedup_tolerance: 1e-5,
            constant_grid: 201,
            theta_grid: Vec::new(),
            table_limit: DEFAULT_TABLE_LIMIT,
            tilt: TiltSolverConfig::default(),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping {} must lie in (0, 1]", self.damping)));
        }
        if !(self.tolerance > 0.0) || !(self.dedup_tolerance > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 || self.constant_grid < 2 {
            return Err(Error::Config("max_iterations and constant_grid must be positive".into()));
        }
        if self.blocks == Some(0) {
            return Err(Error::Config("block count must be positive".into()));
        }
        self.tilt.validate()
    }
}

/// Outcome of one start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartDiagnostics {
    pub start: usize,
    pub origin: String,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub value: f64,
}

/// Optimal value, optimizer set and per-start diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub family: Family,
    pub theta: f64,
    /// `Z(θ)`, the objective at the first optimizer.
    pub value: f64,
    /// Block widths of the partition the profiles live on.
    pub widths: Vec<f64>,
    /// Channels per block: 1, `c` or `k`.
    pub channels: usize,
    /// Distinct global maximizers (row-major `m × channels`).
    pub optimizers: Vec<Vec<f64>>,
    /// `G` (or `T_{W,φ}`) at each optimizer.
    pub optimizer_g: Vec<f64>,
    pub residuals: Vec<f64>,
    /// All distinct converged stationary points, best first.
    pub stationary_points: Vec<Vec<f64>>,
    pub stationary_values: Vec<f64>,
    /// Best objective among constant profiles: a lower bound on `Z(θ)`.
    pub constant_lower_bound: f64,
    pub starts: Vec<StartDiagnostics>,
}

impl SolveResult {
    /// True when optimizers with distinct `G` coexist, so `Z` may fail to
    /// be differentiable at `θ`.
    pub fn multiple_g(&self, tol: f64) -> bool {
        let (lo, hi) = self.optimizer_g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &g| (a.min(g), b.max(g)));
        hi - lo > tol
    }
}

enum Kind {
    Real,
    Simplex { table: Option<Vec<f64>> },
}

/// A variational problem on a fixed partition.
struct Problem<'a> {
    motif: &'a Motif,
    w: StepKernel<f64>,
    mu: &'a FiniteBaseMeasure<f64>,
    kind: Kind,
    widths: Vec<f64>,
    channels: usize,
    tilt: TiltSolverConfig,
}

impl<'a> Problem<'a> {
    fn new(
        motif: &'a Motif,
        w: &StepKernel<f64>,
        mu: &'a FiniteBaseMeasure<f64>,
        family: Family,
        phi: Option<&PhiKernel<f64>>,
        cfg: &SolveConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let w = match cfg.blocks {
            Some(m) => {
                let uniform: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
                w.refine_to(&merge(w.breakpoints(), &uniform))?
            }
            None => w.clone(),
        };
        let (kind, channels) = match family {
            Family::Multilinear => (Kind::Real, 1),
            Family::Potts => (Kind::Simplex { table: None }, mu.len()),
            Family::Generic => {
                let phi = phi.ok_or_else(|| Error::Config("the generic family needs a φ kernel".into()))?;
                if phi.arity() != motif.v() || phi.support_size() != mu.len() {
                    return Err(Error::Dimension("φ does not match the motif or the measure".into()));
                }
                (Kind::Simplex { table: Some(phi.to_table(cfg.table_limit)?) }, mu.len())
            }
        };
        let widths = w.widths();
        Ok(Self { motif, w, mu, kind, widths, channels, tilt: cfg.tilt })
    }

    fn blocks(&self) -> usize {
        self.widths.len()
    }

    /// `G(x)` and its gradient per unit width.
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        match &self.kind {
            Kind::Real => Ok((g1(self.motif, &self.w, x)?, g1_gradient(self.motif, &self.w, x)?)),
            Kind::Simplex { table: None } => {
                let f = TiltProfile::Potts { colors: self.channels, values: x.to_vec() };
                Ok((g2(self.motif, &self.w, &f)?, g2_gradient(self.motif, &self.w, &f)?))
            }
            Kind::Simplex { table: Some(t) } => Ok(table_field(self.motif, &self.w, x, self.channels, t)),
        }
    }

    fn g(&self, x: &[f64]) -> Result<f64> {
        match &self.kind {
            Kind::Real => g1(self.motif, &self.w, x),
            Kind::Simplex { table: None } => g2(self.motif, &self.w, &TiltProfile::Potts { colors: self.channels, values: x.to_vec() }),
            Kind::Simplex { table: Some(t) } => Ok(table_field(self.motif, &self.w, x, self.channels, t).0),
        }
    }

    fn penalty(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            Kind::Real => {
                let mut s = 0.0;
                for (&f, &d) in x.iter().zip(&self.widths) {
                    s += d * gamma(self.mu, f, &self.tilt)?;
                }
                Ok(s)
            }
            Kind::Simplex { .. } => Ok(x
                .chunks(self.channels)
                .zip(&self.widths)
                .map(|(row, &d)| d * kl_probs(row, self.mu.probs()))
                .sum()),
        }
    }

    /// The fixed-point image: tilt of `μ` by `scale · grad` in each block.
    fn target(&self, scale: f64, grad: &[f64]) -> Vec<f64> {
        match self.kind {
            Kind::Real => grad.iter().map(|&g| mean_map(self.mu, scale * g)).collect(),
            Kind::Simplex { .. } => {
                let p = self.mu.probs();
                let mut out = Vec::with_capacity(grad.len());
                for row in grad.chunks(self.channels) {
                    let shift = row.iter().map(|&g| scale * g).fold(f64::NEG_INFINITY, f64::max);
                    let raw: Vec<f64> = row.iter().zip(p).map(|(&g, &pk)| pk * (scale * g - shift).exp()).collect();
                    let z: f64 = raw.iter().sum();
                    out.extend(raw.into_iter().map(|r| r / z));
                }
                out
            }
        }
    }

    fn typical(&self) -> Vec<f64> {
        match self.kind {
            Kind::Real => vec![mean_map(self.mu, 0.0); self.blocks()],
            Kind::Simplex { .. } => self.widths.iter().flat_map(|_| self.mu.probs().iter().copied()).collect(),
        }
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.chunks(self.channels)
            .zip(b.chunks(self.channels))
            .zip(&self.widths)
            .map(|((x, y), &d)| d * x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>())
            .sum()
    }

    /// Constant profiles for the pre-solve: a grid on `cl(𝒩)`, or on the
    /// simplex for colour laws.
    fn constant_grid(&self, points: usize) -> Vec<Vec<f64>> {
        let m = self.blocks();
        match self.kind {
            Kind::Real => {
                let (lo, hi) = self.mu.mean_range();
                (0..points)
                    .map(|i| vec![lo + (hi - lo) * i as f64 / (points - 1) as f64; m])
                    .collect()
            }
            Kind::Simplex { .. } => simplex_grid(self.channels, points * 25)
                .into_iter()
                .map(|row| (0..m).flat_map(|_| row.iter().copied()).collect())
                .collect(),
        }
    }

    /// Deterministic starting profiles, labelled by origin.
    fn starts(&self, cfg: &SolveConfig, best_constant: &[f64]) -> Vec<(String, Vec<f64>)> {
        let m = self.blocks();
        let k = self.channels;
        let mut out = vec![("typical".to_string(), self.typical()), ("constant-presolve".to_string(), best_constant.to_vec())];
        match self.kind {
            Kind::Real => {
                let (lo, hi) = self.mu.mean_range();
                let spread = cfg.starts.div_ceil(2).max(2);
                for j in 0..spread {
                    let c = lo + (hi - lo) * (j as f64 + 0.5) / spread as f64;
                    out.push((format!("constant:{c:.6}"), vec![c; m]));
                }
                for s in 0..cfg.starts {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, s as u64));
                    out.push((format!("random:{s}"), (0..m).map(|_| rng.gen_range(lo..=hi)).collect()));
                }
            }
            Kind::Simplex { .. } => {
                let p = self.mu.probs();
                for r in 0..k {
                    let row: Vec<f64> = (0..k).map(|j| 0.2 * p[j] + if j == r { 0.8 } else { 0.0 }).collect();
                    out.push((format!("vertex:{r}"), (0..m).flat_map(|_| row.iter().copied()).collect()));
                }
                for s in 0..cfg.starts {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, s as u64));
                    let mut x = Vec::with_capacity(m * k);
                    for _ in 0..m {
                        // Dirichlet(1) via normalised exponentials
                        let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                        let z: f64 = e.iter().sum();
                        x.extend(e.into_iter().map(|v| v / z));
                    }
                    out.push((format!("random:{s}"), x));
                }
            }
        }
        out
    }
}

fn merge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|x, y| (*x - *y).abs() <= 1e-14);
    all
}

/// All points of the simplex `Δ_k` with coordinates in `(1/R)ℕ`, for the
/// largest `R ≤ 60` keeping at most `limit` points.
fn simplex_grid(k: usize, limit: usize) -> Vec<Vec<f64>> {
    let count = |r: usize| -> usize {
        // C(r + k − 1, k − 1)
        (1..k).fold(1usize, |acc, i| acc.saturating_mul(r + i) / i)
    };
    let r = (1..=60).rev().find(|&r| count(r) <= limit).unwrap_or(1);
    let mut out = Vec::new();
    let mut parts = vec![0usize; k];
    fn rec(pos: usize, left: usize, r: usize, parts: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if pos + 1 == parts.len() {
            parts[pos] = left;
            out.push(parts.iter().map(|&p| p as f64 / r as f64).collect());
            return;
        }
        for a in 0..=left {
            parts[pos] = a;
            rec(pos + 1, left - a, r, parts, out);
        }
    }
    rec(0, r, r, &mut parts, &mut out);
    out
}

/// `T_{W,φ}(ν)` and its field `∂T/∂ν(u, b)` per unit width, by exhaustive
/// block and atom enumeration over a dense `φ` table.
fn table_field(motif: &Motif, w: &StepKernel<f64>, rows: &[f64], k: usize, table: &[f64]) -> (f64, Vec<f64>) {
    let m = w.block_count();
    let v = motif.v();
    let widths = w.widths();
    let tuples = checked_pow(m, v).unwrap_or(usize::MAX);
    let atoms = table.len();
    let mut value = 0.0;
    let mut field = vec![0.0; m * k];
    let mut blocks = vec![0usize; v];
    let mut b = vec![0usize; v];
    for _ in 0..tuples {
        let mut weight: f64 = blocks.iter().map(|&u| widths[u]).product();
        for &(x, y) in motif.edges() {
            weight *= w.value(blocks[x], blocks[y]);
        }
        if weight != 0.0 {
            b.iter_mut().for_each(|x| *x = 0);
            for t in table.iter().take(atoms) {
                if *t != 0.0 {
                    let probs: Vec<f64> = (0..v).map(|a| rows[blocks[a] * k + b[a]]).collect();
                    value += weight * t * probs.iter().product::<f64>();
                    for a in 0..v {
                        let others: f64 = (0..v).filter(|&c| c != a).map(|c| probs[c]).product();
                        field[blocks[a] * k + b[a]] += weight * t * others / widths[blocks[a]];
                    }
                }
                advance(&mut b, k);
            }
        }
        advance(&mut blocks, m);
    }
    (value, field)
}

#[derive(Clone)]
struct Run {
    x: Vec<f64>,
    g: f64,
    penalty: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Point of an ascent with everything needed to step from it.
struct State {
    x: Vec<f64>,
    g: f64,
    penalty: f64,
    value: f64,
    target: Vec<f64>,
    residual: f64,
}

fn state(
    p: &Problem,
    x: Vec<f64>,
    scale: &dyn Fn(f64) -> f64,
    objective: &dyn Fn(f64, f64) -> f64,
) -> Result<State> {
    let (g, grad) = p.eval(&x)?;
    let target = p.target(scale(g), &grad);
    let residual = x.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let penalty = p.penalty(&x)?;
    Ok(State { value: objective(g, penalty), x, g, penalty, target, residual })
}

/// Damped fixed-point ascent of `objective(G, P)` with multiplier
/// `scale(G)`: `x ← (1−λ)x + λ·target(scale(G(x))·∇G(x))`. A step that
/// lowers the objective halves `λ`; inside the rounding band of the
/// objective a step must shrink the residual instead.
fn ascend(
    p: &Problem,
    x: Vec<f64>,
    scale: &dyn Fn(f64) -> f64,
    objective: &dyn Fn(f64, f64) -> f64,
    cfg: &SolveConfig,
) -> Result<Run> {
    let mut eta = cfg.damping;
    let mut good_steps = 0usize;
    let mut cur = state(p, x, scale, objective)?;
    for it in 0..cfg.max_iterations {
        if cur.residual <= cfg.tolerance {
            return Ok(Run { x: cur.x, g: cur.g, penalty: cur.penalty, iterations: it, residual: cur.residual, converged: true });
        }
        let band = 1e-13 * (1.0 + cur.value.abs());
        loop {
            let cand: Vec<f64> = cur.x.iter().zip(&cur.target).map(|(&a, &b)| (1.0 - eta) * a + eta * b).collect();
            let next = state(p, cand, scale, objective)?;
            let accept = next.value > cur.value + band
                || (next.value >= cur.value - band && next.residual < cur.residual);
            if accept || eta < 1e-9 {
                cur = next;
                break;
            }
            eta *= 0.5;
            good_steps = 0;
        }
        good_steps += 1;
        if good_steps >= 20 && eta < cfg.damping {
            eta = (eta * 2.0).min(cfg.damping);
            good_steps = 0;
        }
    }
    Ok(Run { x: cur.x, g: cur.g, penalty: cur.penalty, iterations: cfg.max_iterations, residual: cur.residual, converged: false })
}

fn solve(p: &Problem, family: Family, theta: f64, cfg: &SolveConfig) -> Result<SolveResult> {
    if !theta.is_finite() {
        return Err(Error::Config(format!("θ = {theta} must be finite")));
    }
    let objective = |g: f64, pen: f64| theta * g - pen;
    // constant-profile pre-solve
    let grid = p.constant_grid(cfg.constant_grid);
    let scored: Vec<(f64, usize)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, x)| -> Result<(f64, usize)> { Ok((objective(p.g(x)?, p.penalty(x)?), i)) })
        .collect::<Result<_>>()?;
    let (constant_lower_bound, best_idx) = scored
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, 0), |acc, s| if s.0 > acc.0 { s } else { acc });
    let starts = p.starts(cfg, &grid[best_idx]);
    let runs: Vec<Run> = starts
        .par_iter()
        .map(|(_, x0)| ascend(p, x0.clone(), &|_| theta, &objective, cfg))
        .collect::<Result<_>>()?;

    let diagnostics: Vec<StartDiagnostics> = runs
        .iter()
        .zip(&starts)
        .enumerate()
        .map(|(i, (r, (origin, _)))| StartDiagnostics {
            start: i,
            origin: origin.clone(),
            iterations: r.iterations,
            converged: r.converged,
            residual: r.residual,
            value: objective(r.g, r.penalty),
        })
        .collect();

    let mut converged: Vec<(f64, &Run)> = runs.iter().filter(|r| r.converged).map(|r| (objective(r.g, r.penalty), r)).collect();
    if converged.is_empty() {
        let best = runs
            .iter()
            .max_by(|a, b| objective(a.g, a.penalty).total_cmp(&objective(b.g, b.penalty)))
            .expect("at least one start");
        return Err(Error::NotConverged {
            best_value: objective(best.g, best.penalty),
            residual: best.residual,
            iterations: best.iterations,
            best_profile: best.x.clone(),
        });
    }
    // stable sort keeps start order among ties
    converged.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut distinct: Vec<(f64, &Run)> = Vec::new();
    for (v, r) in converged {
        if distinct.iter().all(|(_, d)| p.distance(&d.x, &r.x) >= cfg.dedup_tolerance) {
            distinct.push((v, r));
        }
    }
    let best = distinct[0].0;
    let cut = best - 1e-9 * best.abs().max(1.0);
    let optimal: Vec<&(f64, &Run)> = distinct.iter().filter(|(v, _)| *v >= cut).collect();
    Ok(SolveResult {
        family,
        theta,
        value: best,
        widths: p.widths.clone(),
        channels: p.channels,
        optimizers: optimal.iter().map(|(_, r)| r.x.clone()).collect(),
        optimizer_g: optimal.iter().map(|(_, r)| r.g).collect(),
        residuals: optimal.iter().map(|(_, r)| r.residual).collect(),
        stationary_points: distinct.iter().map(|(_, r)| r.x.clone()).collect(),
        stationary_values: distinct.iter().map(|(v, _)| *v).collect(),
        constant_lower_bound,
        starts: diagnostics,
    })
}

/// `Z(θ) = sup_f θ G₁(f) − ∫ γ(f)` over real profiles on the blocks of `W`.
pub fn solve_z_multilinear(
    motif: &Motif,
    w: &StepKernel<f64>,
    mu: &FiniteBaseMeasure<f64>,
    theta: f64,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    let p = Problem::new(motif, w, mu, Family::Multilinear, None, cfg)?;
    solve(&p, Family::Multilinear, theta, cfg)
}

/// `Z(θ) = sup_f θ G₂(f) − ∫ Σ_r f_r log(f_r/μ_r)` over colour profiles.
pub fn solve_z_potts(
    motif: &Motif,
    w: &StepKernel<f64>,
    mu: &FiniteBaseMeasure<f64>,
    theta: f64,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    let p = Problem::new(motif, w, mu, Family::Potts, None, cfg)?;
    solve(&p, Family::Potts, theta, cfg)
}

/// `Z(θ) = sup_ν θ T_{W,φ}(ν) − D(ν | ρ)` over block measures, by blockwise
/// tilting of `μ` with the `φ`-local field.
pub fn solve_z_generic(
    motif: &Motif,
    w: &StepKernel<f64>,
    mu: &FiniteBaseMeasure<f64>,
    phi: &PhiKernel<f64>,
    theta: f64,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    let p = Problem::new(motif, w, mu, Family::Generic, Some(phi), cfg)?;
    solve(&p, Family::Generic, theta, cfg)
}

/// Dispatches on `family`; `phi` is used by the generic family only.
pub fn solve_z(
    family: Family,
    motif: &Motif,
    w: &StepKernel<f64>,
    mu: &FiniteBaseMeasure<f64>,
    phi: Option<&PhiKernel<f64>>,
    theta: f64,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    let p = Problem::new(motif, w, mu, family, phi, cfg)?;
    solve(&p, family, theta, cfg)
}

/// One point of a parametric rate curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub theta: f64,
    pub z: f64,
    /// `G` at the first optimizer, i.e. `Z'(θ)` when the optimizer is unique.
    pub t: f64,
    /// `θ t − Z(θ)`.
    pub rate: f64,
    /// Optimizers with distinct `G` coexist: the curve is not single-valued
    /// here.
    pub flagged: bool,
    pub t_values: Vec<f64>,
}

/// Parametric curve `θ ↦ (t(θ), θ t(θ) − Z(θ))` over `theta_grid`.
pub fn legendre_rate(
    family: Family,
    motif: &Motif,
    w: &StepKernel<f64>,
    mu: &FiniteBaseMeasure<f64>,
    phi: Option<&PhiKernel<f64>>,
    theta_grid: &[f64],
    cfg: &SolveConfig,
) -> Result<Vec<RatePoint>> {
    let p = Problem::new(motif, w, mu, family, phi, cfg)?;
    theta_grid
        .par_iter()
        .map(|&theta| {
            let r = solve(&p, family, theta, cfg)?;
            let t = r.optimizer_g[0];
            Ok(RatePoint {
                theta,
                z: r.value,
                t,
                rate: theta * t - r.value,
                flagged: r.multiple_g(1e-6),
                t_values: r.optimizer_g.clone(),
            })
        })
        .collect()
}

/// Result of a direct constrained solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstrainedResult {
    pub t: f64,
    /// `inf { P(f) : G(f) = t }`.
    pub rate: f64,
    pub witness: Vec<f64>,
    pub widths: Vec<f64>,
    /// Lagrange multiplier, the `θ` dual to `t`.
    pub multiplier: f64,
    pub violation: f64,
    pub residual: f64,
    pub starts_converged: usize,
}

/// `I(t) = inf { P(f) : G(f) = t }` by an augmented Lagrangian over
/// profiles, multistarted from feasible constant profiles. `range` is the
/// achievable interval for `t`; when absent the range of `G` over constant
/// profiles is used.
#[allow(clippy::too_many_arguments)]
pub fn constrained_rate(
    family: Family,
    motif: &Motif,
    w: &StepKernel<f64>,
    mu: &FiniteBaseMeasure<f64>,
    phi: Option<&PhiKernel<f64>>,
    t: f64,
    range: Option<(f64, f64)>,
    cfg: &SolveConfig,
) -> Result<ConstrainedResult> {
    let p = Problem::new(motif, w, mu, family, phi, cfg)?;
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            let gs: Vec<f64> = p.constant_grid(cfg.constant_grid).iter().map(|x| p.g(x)).collect::<Result<_>>()?;
            gs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &g| (a.min(g), b.max(g)))
        }
    };
    let slack = 1e-12 * t.abs().max(1.0);
    if !(t >= lo - slack && t <= hi + slack) {
        return Err(Error::Infeasible { target: t, lo, hi });
    }
    let mut starts = vec![p.typical()];
    starts.extend(feasible_constants(&p, t, cfg.constant_grid)?);
    let runs: Vec<(Run, f64)> = starts.into_par_iter().map(|x0| augmented_lagrangian(&p, x0, t, cfg)).collect::<Result<_>>()?;
    let tol_violation = 1e-9 * t.abs().max(1.0);
    let ok: Vec<&(Run, f64)> = runs.iter().filter(|(r, _)| r.converged && (r.g - t).abs() <= tol_violation).collect();
    let pick = |set: &[&(Run, f64)]| -> Option<(Run, f64)> {
        set.iter()
            .min_by(|a, b| a.0.penalty.total_cmp(&b.0.penalty))
            .map(|(r, l)| (r.clone(), *l))
    };
    let (best, lambda) = match pick(&ok) {
        Some(b) => b,
        None => {
            let all: Vec<&(Run, f64)> = runs.iter().collect();
            let (r, _) = pick(&all).expect("at least one start");
            return Err(Error::NotConverged {
                best_value: r.penalty,
                residual: r.residual.max((r.g - t).abs()),
                iterations: r.iterations,
                best_profile: r.x,
            });
        }
    };
    Ok(ConstrainedResult {
        t,
        rate: best.penalty,
        witness: best.x,
        widths: p.widths.clone(),
        multiplier: lambda,
        violation: best.g - t,
        residual: best.residual,
        starts_converged: ok.len(),
    })
}

/// Constant profiles with `G = t`, found along the segment from each grid
/// point of the constant pre-solve back to the typical profile.
fn feasible_constants(p: &Problem, t: f64, points: usize) -> Result<Vec<Vec<f64>>> {
    let typical = p.typical();
    let g0 = p.g(&typical)? - t;
    let mut out = Vec::new();
    for end in p.constant_grid(points.min(41)) {
        let path = |s: f64| -> Vec<f64> { typical.iter().zip(&end).map(|(&a, &b)| (1.0 - s) * a + s * b).collect() };
        let g1v = p.g(&end)? - t;
        if g0 == 0.0 || g0.signum() == g1v.signum() {
            continue;
        }
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if (p.g(&path(mid))? - t).signum() == g0.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        let x = path(0.5 * (a + b));
        if out.iter().all(|y: &Vec<f64>| p.distance(y, &x) > 1e-6) {
            out.push(x);
        }
    }
    Ok(out)
}

fn augmented_lagrangian(p: &Problem, x0: Vec<f64>, t: f64, cfg: &SolveConfig) -> Result<(Run, f64)> {
    let mut lambda = 0.0;
    let mut rho = 10.0;
    let mut x = x0;
    let mut prev = f64::INFINITY;
    let mut last = None;
    for _ in 0..200 {
        let (l, r) = (lambda, rho);
        let run = ascend(
            p,
            x,
            &|g| l - r * (g - t),
            &|g, pen| l * g - pen - 0.5 * r * (g - t) * (g - t),
            cfg,
        )?;
        let viol = run.g - t;
        lambda -= rho * viol;
        let done = run.converged && viol.abs() <= 1e-11 * t.abs().max(1.0);
        if run.converged && viol.abs() > 0.25 * prev {
            rho = (rho * 2.0).min(1e6);
        }
        prev = viol.abs();
        x = run.x.clone();
        last = Some(run);
        if done {
            break;
        }
    }
    let run = last.expect("at least one outer iteration");
    // the multiplier update above is one step past the final inner solve
    Ok((run, lambda))
}
