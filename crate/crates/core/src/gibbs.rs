//! Finite-n Gibbs measures `dR_{n,θ}/dμ^{⊗n} ∝ exp(nθ U_n)`: exact
//! enumeration, closed sums for complete couplings, a systematic-scan
//! heat-bath sampler, thermodynamic integration of `Z_n`, exact tail rates
//! and a weak-law harness against variational optimizers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::fmt12;
use crate::kernel::{derive_seed, SymmetricMatrix};
use crate::motif::Motif;
use crate::scalar::log_sum_exp;
use crate::tilt::FiniteBaseMeasure;
use crate::ustat::{local_field_u, u_statistic, DataVector, PhiKernel};
use crate::variational::{Family, SolveResult};

/// Default cap on enumerated configurations.
pub const DEFAULT_STATE_LIMIT: usize = 1 << 20;

/// The bundle `(H, Q_n, φ, μ, θ)`.
#[derive(Debug, Clone)]
pub struct GibbsModel {
    motif: Motif,
    q: SymmetricMatrix<f64>,
    phi: PhiKernel<f64>,
    mu: FiniteBaseMeasure<f64>,
    theta: f64,
}

impl GibbsModel {
    pub fn new(motif: Motif, q: SymmetricMatrix<f64>, phi: PhiKernel<f64>, mu: FiniteBaseMeasure<f64>, theta: f64) -> Result<Self> {
        if phi.arity() != motif.v() {
            return Err(Error::Dimension(format!("φ has arity {} but the motif has {} vertices", phi.arity(), motif.v())));
        }
        if phi.atoms() != mu.atoms() {
            return Err(Error::SupportMismatch);
        }
        if q.n() < motif.v() {
            return Err(Error::Dimension(format!("n = {} is smaller than v = {}", q.n(), motif.v())));
        }
        if !theta.is_finite() {
            return Err(Error::Config(format!("θ = {theta} must be finite")));
        }
        Ok(Self { motif, q, phi, mu, theta })
    }

    /// `H = K₂`, `Q = 1{i ≠ j}` with the product (`Ising`) or monochrome
    /// (`Potts`) kernel.
    pub fn complete(family: CompleteFamily, n: usize, theta: f64, mu: FiniteBaseMeasure<f64>) -> Result<Self> {
        let phi = match family {
            CompleteFamily::Ising => PhiKernel::product(2, &mu),
            CompleteFamily::Potts => PhiKernel::monochrome(2, &mu),
        };
        Self::new(Motif::edge(), SymmetricMatrix::complete(n), phi, mu, theta)
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..self.clone() }
    }

    pub fn n(&self) -> usize {
        self.q.n()
    }

    pub fn motif(&self) -> &Motif {
        &self.motif
    }

    pub fn coupling(&self) -> &SymmetricMatrix<f64> {
        &self.q
    }

    pub fn phi(&self) -> &PhiKernel<f64> {
        &self.phi
    }

    pub fn mu(&self) -> &FiniteBaseMeasure<f64> {
        &self.mu
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `U_n` of a configuration.
    pub fn u(&self, x: &DataVector) -> Result<f64> {
        u_statistic(&self.motif, &self.q, x, &self.phi)
    }

    /// SHA-256 of the model's defining data, as lowercase hex.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.motif.to_text().as_bytes());
        h.update((self.n() as u64).to_le_bytes());
        for &x in self.q.as_slice() {
            h.update(x.to_le_bytes());
        }
        h.update(self.phi.name().as_bytes());
        if let Ok(t) = self.phi.to_table(1 << 16) {
            for x in t {
                h.update(x.to_le_bytes());
            }
        }
        for (&a, &p) in self.mu.atoms().iter().zip(self.mu.probs()) {
            h.update(a.to_le_bytes());
            h.update(p.to_le_bytes());
        }
        h.update(self.theta.to_le_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Complete-coupling families with closed-form `U_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompleteFamily {
    Ising,
    Potts,
}

impl std::str::FromStr for CompleteFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ising" | "multilinear" => Ok(Self::Ising),
            "potts" => Ok(Self::Potts),
            _ => Err(Error::Config(format!("unknown complete-graph family '{s}'"))),
        }
    }
}

impl From<CompleteFamily> for Family {
    fn from(f: CompleteFamily) -> Self {
        match f {
            CompleteFamily::Ising => Family::Multilinear,
            CompleteFamily::Potts => Family::Potts,
        }
    }
}

/// Enumeration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExactOptions {
    /// Maximum number of (lumped) configurations.
    pub limit: usize,
    /// Group sites that `Q` cannot tell apart and enumerate atom counts per
    /// group instead of individual configurations.
    pub lump: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { limit: DEFAULT_STATE_LIMIT, lump: true }
    }
}

/// Classes of sites `i, j` with `Q(i, k) = Q(j, k)` for every `k ∉ {i, j}`.
/// Swapping two such sites is an automorphism of `Q`, so `U_n` is invariant
/// under permutations within a class.
pub fn twin_classes(q: &SymmetricMatrix<f64>) -> Vec<Vec<usize>> {
    let n = q.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if find(&mut parent, i) == find(&mut parent, j) {
                continue;
            }
            if (0..n).all(|k| k == i || k == j || q.get(i, k) == q.get(j, k)) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[b] = a;
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if index[r] == usize::MAX {
            index[r] = classes.len();
            classes.push(Vec::new());
        }
        classes[index[r]].push(i);
    }
    classes
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0; n + 1];
    for i in 1..=n {
        lf[i] = lf[i - 1] + (i as f64).ln();
    }
    lf
}

/// All ways to split `total` items over `k` labelled cells.
fn compositions(total: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for a in (0..=left).rev() {
            cur[pos] = a;
            rec(pos + 1, left - a, cur, out);
        }
    }
    rec(0, total, &mut cur, &mut out);
    out
}

fn composition_count(total: usize, k: usize) -> f64 {
    (1..k).fold(1.0, |acc, i| acc * (total + i) as f64 / i as f64)
}

/// `(log μ^{⊗n}-mass, U_n)` for every lumped configuration class.
fn enumerate_terms(model: &GibbsModel, opts: &ExactOptions) -> Result<Vec<(f64, f64)>> {
    let n = model.n();
    let k = model.mu.len();
    let classes = if opts.lump { twin_classes(&model.q) } else { (0..n).map(|i| vec![i]).collect() };
    let size: f64 = classes.iter().map(|c| composition_count(c.len(), k)).product();
    if size > opts.limit as f64 {
        return Err(Error::StateSpaceTooLarge { size, limit: opts.limit });
    }
    let lf = log_factorials(n);
    let log_p: Vec<f64> = model.mu.probs().iter().map(|p| p.ln()).collect();
    let per_class: Vec<Vec<(Vec<usize>, f64)>> = classes
        .iter()
        .map(|c| {
            compositions(c.len(), k)
                .into_iter()
                .map(|counts| {
                    let mut lw = lf[c.len()];
                    for (r, &m) in counts.iter().enumerate() {
                        lw += m as f64 * log_p[r] - lf[m];
                    }
                    (counts, lw)
                })
                .collect()
        })
        .collect();
    let total = size as usize;
    (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0usize; n];
            let mut lw = 0.0;
            for (class, options) in classes.iter().zip(&per_class).rev() {
                let (counts, w) = &options[idx % options.len()];
                idx /= options.len();
                lw += w;
                let mut sites = class.iter();
                for (r, &m) in counts.iter().enumerate() {
                    for _ in 0..m {
                        x[*sites.next().expect("counts sum to the class size")] = r;
                    }
                }
            }
            let u = model.u(&DataVector::new(x, k)?)?;
            Ok((lw, u))
        })
        .collect()
}

/// `Z_n(θ) = n⁻¹ log E_{μ^{⊗n}} exp(nθ U_n)` by enumeration.
pub fn exact_logz(model: &GibbsModel, opts: &ExactOptions) -> Result<f64> {
    let n = model.n() as f64;
    let terms: Vec<f64> = enumerate_terms(model, opts)?.into_iter().map(|(lw, u)| lw + n * model.theta * u).collect();
    Ok(log_sum_exp(&terms) / n)
}

/// `Z_n(θ)` for `H = K₂` and `Q = 1{i≠j}` by summing over atom counts:
/// `U_n = (S² − Σx²)/n²` (Ising) or `Σ_r (N_r² − N_r)/n²` (Potts).
pub fn exact_logz_complete(family: CompleteFamily, n: usize, theta: f64, mu: &FiniteBaseMeasure<f64>, limit: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Dimension("n must be at least 2".into()));
    }
    let k = mu.len();
    let size = composition_count(n, k);
    if size > limit as f64 {
        return Err(Error::StateSpaceTooLarge { size, limit });
    }
    let lf = log_factorials(n);
    let log_p: Vec<f64> = mu.probs().iter().map(|p| p.ln()).collect();
    let nf = n as f64;
    let terms: Vec<f64> = compositions(n, k)
        .par_iter()
        .map(|counts| {
            let mut lw = lf[n];
            for (r, &m) in counts.iter().enumerate() {
                lw += m as f64 * log_p[r] - lf[m];
            }
            let u = match family {
                CompleteFamily::Ising => {
                    let s: f64 = counts.iter().zip(mu.atoms()).map(|(&m, &a)| m as f64 * a).sum();
                    let s2: f64 = counts.iter().zip(mu.atoms()).map(|(&m, &a)| m as f64 * a * a).sum();
                    (s * s - s2) / (nf * nf)
                }
                CompleteFamily::Potts => counts.iter().map(|&m| (m * m - m) as f64).sum::<f64>() / (nf * nf),
            };
            lw + nf * theta * u
        })
        .collect();
    Ok(log_sum_exp(&terms) / nf)
}

/// The Gibbs distribution over all `k^n` configurations, indexed with
/// site 0 as the most significant digit.
pub fn exact_distribution(model: &GibbsModel, limit: usize) -> Result<Vec<f64>> {
    let terms = enumerate_terms(model, &ExactOptions { limit, lump: false })?;
    let n = model.n() as f64;
    let logs: Vec<f64> = terms.iter().map(|(lw, u)| lw + n * model.theta * u).collect();
    let z = log_sum_exp(&logs);
    Ok(logs.into_iter().map(|l| (l - z).exp()).collect())
}

fn decode(mut index: usize, n: usize, k: usize) -> Vec<usize> {
    let mut x = vec![0usize; n];
    for slot in x.iter_mut().rev() {
        *slot = index % k;
        index /= k;
    }
    x
}

/// Heat-bath conditional law of site `i` given the rest, computed from the
/// local field of `U_n`.
pub fn heat_bath_conditional(model: &GibbsModel, x: &DataVector, site: usize) -> Result<Vec<f64>> {
    let h = local_field_u(&model.motif, &model.q, x, &model.phi, site)?;
    Ok(softmax_weights(model.mu.probs(), &h, model.theta))
}

fn softmax_weights(probs: &[f64], h: &[f64], theta: f64) -> Vec<f64> {
    let logs: Vec<f64> = probs.iter().zip(h).map(|(p, &hc)| p.ln() + theta * hc).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// One systematic-scan sweep of the heat-bath kernel applied to a
/// distribution over all configurations.
pub fn apply_sweep(model: &GibbsModel, dist: &[f64]) -> Result<Vec<f64>> {
    let n = model.n();
    let k = model.mu.len();
    if dist.len() != k.pow(n as u32) {
        return Err(Error::Dimension(format!("distribution has {} entries, expected {}", dist.len(), k.pow(n as u32))));
    }
    let mut cur = dist.to_vec();
    for site in 0..n {
        let stride = k.pow((n - 1 - site) as u32);
        let mut next = vec![0.0; cur.len()];
        for (idx, out) in next.iter_mut().enumerate() {
            let x = DataVector::new(decode(idx, n, k), k)?;
            let cond = heat_bath_conditional(model, &x, site)?;
            let base = idx - x.get(site) * stride;
            let mass: f64 = (0..k).map(|c| cur[base + c * stride]).sum();
            *out = mass * cond[x.get(site)];
        }
        cur = next;
    }
    Ok(cur)
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Groups of consecutive sites averaged into the profile `ω̄`.
    pub blocks: usize,
    /// Sweeps between full recomputations of the cached `U_n`.
    pub check_every: usize,
    /// Starting configuration; drawn from `μ^{⊗n}` when absent.
    pub init: Option<Vec<usize>>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { sweeps: 10_000, burn_in: 1_000, thin: 1, seed: 0, blocks: 10, check_every: 100, init: None }
    }
}

impl ChainConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.thin == 0 || self.check_every == 0 {
            return Err(Error::Config("thin and check_every must be positive".into()));
        }
        if self.blocks == 0 || self.blocks > n {
            return Err(Error::Config(format!("blocks must lie in 1..={n}")));
        }
        if self.burn_in > self.sweeps {
            return Err(Error::Config("burn-in exceeds the number of sweeps".into()));
        }
        Ok(())
    }

    pub fn kept(&self) -> usize {
        (self.sweeps - self.burn_in) / self.thin
    }
}

/// Observables of one retained sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub u_n: f64,
    pub block_means: Vec<f64>,
    pub color_fracs: Vec<f64>,
}

/// Retained sweeps plus run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalRecord {
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
    pub blocks: usize,
    pub model_hash: String,
    pub records: Vec<SweepRecord>,
    pub drift_checks: usize,
    pub max_drift: f64,
}

impl EmpiricalRecord {
    /// `sweep,u_n,block_mean_*,color_frac_*` with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sweep,u_n");
        if let Some(r) = self.records.first() {
            for b in 0..r.block_means.len() {
                s.push_str(&format!(",block_mean_{b}"));
            }
            for c in 0..r.color_fracs.len() {
                s.push_str(&format!(",color_frac_{c}"));
            }
        }
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!("{},{}", r.sweep, fmt12(r.u_n)));
            for v in r.block_means.iter().chain(&r.color_fracs) {
                s.push_str(&format!(",{}", fmt12(*v)));
            }
            s.push('\n');
        }
        s
    }
}

/// Incremental fields for `H = K₂` with a separable symmetric `φ`:
/// `F[i][r] = Σ_j Q(i, j) g_r(x_j)`.
struct PairFields {
    factors: Vec<Vec<f64>>,
    f: Vec<f64>,
}

/// Sampler state: configuration, cached `U_n`, generator and sweep count.
pub struct ChainState {
    x: DataVector,
    u: f64,
    rng: ChaCha8Rng,
    sweep: usize,
    fields: Option<PairFields>,
    drift_checks: usize,
    max_drift: f64,
}

impl ChainState {
    pub fn new(model: &GibbsModel, cfg: &ChainConfig) -> Result<Self> {
        cfg.validate(model.n())?;
        let k = model.mu.len();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let x = match &cfg.init {
            Some(init) => {
                if init.len() != model.n() {
                    return Err(Error::Dimension(format!("initial state has {} sites, model has {}", init.len(), model.n())));
                }
                DataVector::new(init.clone(), k)?
            }
            None => {
                let probs = model.mu.probs();
                DataVector::new((0..model.n()).map(|_| sample(probs, rng.gen())).collect(), k)?
            }
        };
        let u = model.u(&x)?;
        let mut st = Self { x, u, rng, sweep: 0, fields: None, drift_checks: 0, max_drift: 0.0 };
        if model.motif.is_single_edge() {
            if let Some(factors) = model.phi.separable_factors() {
                st.fields = Some(PairFields { factors, f: Vec::new() });
                st.rebuild_fields(model);
            }
        }
        Ok(st)
    }

    fn rebuild_fields(&mut self, model: &GibbsModel) {
        if let Some(pf) = &mut self.fields {
            let n = model.n();
            let r = pf.factors.len();
            pf.f = vec![0.0; n * r];
            for i in 0..n {
                let row = model.q.row(i);
                for (j, &qij) in row.iter().enumerate() {
                    if qij != 0.0 {
                        for (ri, g) in pf.factors.iter().enumerate() {
                            pf.f[i * r + ri] += qij * g[self.x.get(j)];
                        }
                    }
                }
            }
        }
    }

    pub fn x(&self) -> &DataVector {
        &self.x
    }

    /// Cached `U_n` of the current configuration.
    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweep
    }

    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// Local field `h(c)` of `U_n` at `site`.
    fn field(&self, model: &GibbsModel, site: usize) -> Result<Vec<f64>> {
        let k = model.mu.len();
        match &self.fields {
            Some(pf) => {
                let r = pf.factors.len();
                let scale = 2.0 / model.n() as f64;
                Ok((0..k)
                    .map(|c| scale * pf.factors.iter().enumerate().map(|(ri, g)| g[c] * pf.f[site * r + ri]).sum::<f64>())
                    .collect())
            }
            None => local_field_u(&model.motif, &model.q, &self.x, &model.phi, site),
        }
    }

    /// One systematic scan over all sites, then the periodic drift check.
    pub fn sweep(&mut self, model: &GibbsModel, check_every: usize) -> Result<()> {
        let n = model.n();
        let probs = model.mu.probs();
        for site in 0..n {
            let h = self.field(model, site)?;
            let w = softmax_weights(probs, &h, model.theta);
            let old = self.x.get(site);
            let new = sample(&w, self.rng.gen());
            if new != old {
                self.u += (h[new] - h[old]) / n as f64;
                self.x.set(site, new);
                if let Some(pf) = &mut self.fields {
                    let r = pf.factors.len();
                    let row = model.q.row(site);
                    for ri in 0..r {
                        let d = pf.factors[ri][new] - pf.factors[ri][old];
                        if d != 0.0 {
                            for (j, &qj) in row.iter().enumerate() {
                                pf.f[j * r + ri] += qj * d;
                            }
                        }
                    }
                }
            }
        }
        self.sweep += 1;
        if self.sweep % check_every == 0 {
            let exact = model.u(&self.x)?;
            self.max_drift = self.max_drift.max((exact - self.u).abs());
            self.drift_checks += 1;
            self.u = exact;
            self.rebuild_fields(model);
        }
        Ok(())
    }

    fn record(&self, model: &GibbsModel, blocks: usize) -> SweepRecord {
        let n = model.n();
        let k = model.mu.len();
        let atoms = model.mu.atoms();
        let mut sums = vec![0.0; blocks];
        let mut counts = vec![0usize; blocks];
        let mut colors = vec![0usize; k];
        for i in 0..n {
            let b = i * blocks / n;
            sums[b] += atoms[self.x.get(i)];
            counts[b] += 1;
            colors[self.x.get(i)] += 1;
        }
        SweepRecord {
            sweep: self.sweep,
            u_n: self.u,
            block_means: sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect(),
            color_fracs: colors.iter().map(|&c| c as f64 / n as f64).collect(),
        }
    }
}

/// Index drawn from `probs` with the uniform variate `r`.
fn sample(probs: &[f64], r: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    let target = r * total;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Runs a chain, handing every retained sweep to `observe` together with
/// the configuration.
pub fn run_chain(
    model: &GibbsModel,
    cfg: &ChainConfig,
    mut observe: impl FnMut(&SweepRecord, &DataVector),
) -> Result<ChainState> {
    let mut st = ChainState::new(model, cfg)?;
    for s in 1..=cfg.sweeps {
        st.sweep(model, cfg.check_every)?;
        if s > cfg.burn_in && (s - cfg.burn_in) % cfg.thin == 0 {
            observe(&st.record(model, cfg.blocks), &st.x);
        }
    }
    Ok(st)
}

/// Systematic-scan heat-bath chain; every retained sweep is recorded.
pub fn glauber_chain(model: &GibbsModel, cfg: &ChainConfig) -> Result<EmpiricalRecord> {
    let mut records = Vec::with_capacity(cfg.kept());
    let st = run_chain(model, cfg, |r, _| records.push(r.clone()))?;
    Ok(EmpiricalRecord {
        seed: cfg.seed,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        blocks: cfg.blocks,
        model_hash: model.fingerprint(),
        records,
        drift_checks: st.drift_checks,
        max_drift: st.max_drift,
    })
}

/// Mean and batch-means standard error.
fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let size = n / batches;
    if batches < 2 || size == 0 {
        return (mean, 0.0);
    }
    let bm: Vec<f64> = (0..batches).map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let bbar = bm.iter().sum::<f64>() / batches as f64;
    let var = bm.iter().map(|m| (m - bbar) * (m - bbar)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// Thermodynamic-integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TiConfig {
    pub chain: ChainConfig,
    pub batches: usize,
    /// Double the grid until the truncation estimate meets `target_error`.
    pub refine: bool,
    pub target_error: f64,
    pub max_doublings: usize,
}

impl Default for TiConfig {
    fn default() -> Self {
        Self { chain: ChainConfig::default(), batches: 20, refine: false, target_error: 1e-3, max_doublings: 3 }
    }
}

/// `Z_n(θ)` with its error budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiEstimate {
    pub theta: f64,
    pub value: f64,
    /// `mc_error + truncation_error`.
    pub error: f64,
    pub mc_error: f64,
    pub truncation_error: f64,
    pub grid: Vec<f64>,
    pub means: Vec<f64>,
    pub mean_errors: Vec<f64>,
}

fn trapezoid(grid: &[f64], ys: &[f64]) -> f64 {
    grid.windows(2).zip(ys.windows(2)).map(|(g, y)| 0.5 * (g[1] - g[0]) * (y[0] + y[1])).sum()
}

fn ti_summary(grid: &[f64], means: &[f64], errs: &[f64]) -> (f64, f64, f64) {
    let value = trapezoid(grid, means);
    let mut mc = 0.0;
    for j in 0..grid.len() {
        let left = if j > 0 { grid[j] - grid[j - 1] } else { 0.0 };
        let right = if j + 1 < grid.len() { grid[j + 1] - grid[j] } else { 0.0 };
        let c = 0.5 * (left + right);
        mc += c * c * errs[j] * errs[j];
    }
    let trunc = if grid.len() >= 3 {
        let mut idx: Vec<usize> = (0..grid.len()).step_by(2).collect();
        if *idx.last().unwrap() != grid.len() - 1 {
            idx.push(grid.len() - 1);
        }
        let g2: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let y2: Vec<f64> = idx.iter().map(|&i| means[i]).collect();
        (value - trapezoid(&g2, &y2)).abs() / 3.0
    } else {
        0.0
    };
    (value, mc.sqrt(), trunc)
}

/// `Z_n(θ_end) = ∫₀^{θ_end} E_{R_{n,s}}[U_n] ds` by the trapezoid rule over
/// `grid`, each mean from an independent chain seeded by its `θ`.
pub fn estimate_logz_ti(model: &GibbsModel, grid: &[f64], cfg: &TiConfig) -> Result<TiEstimate> {
    if grid.is_empty() || grid[0] != 0.0 {
        return Err(Error::Config("the θ-grid must start at 0".into()));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if grid.len() > 1 && !(up || down) {
        return Err(Error::Config("the θ-grid must be strictly monotone".into()));
    }
    cfg.chain.validate(model.n())?;
    if cfg.chain.kept() < cfg.batches.max(1) {
        return Err(Error::Config("fewer retained sweeps than batches".into()));
    }
    let mean_at = |theta: f64| -> Result<(f64, f64)> {
        let chain = ChainConfig { seed: derive_seed(cfg.chain.seed, theta.to_bits()), ..cfg.chain.clone() };
        let mut us = Vec::with_capacity(chain.kept());
        run_chain(&model.with_theta(theta), &chain, |r, _| us.push(r.u_n))?;
        Ok(batch_means(&us, cfg.batches))
    };
    let mut grid = grid.to_vec();
    let stats: Vec<(f64, f64)> = grid.par_iter().map(|&t| mean_at(t)).collect::<Result<_>>()?;
    let (mut means, mut errs): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
    let (mut value, mut mc, mut trunc) = ti_summary(&grid, &means, &errs);
    let mut doublings = 0;
    while cfg.refine && trunc > cfg.target_error && doublings < cfg.max_doublings {
        let mids: Vec<f64> = grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let extra: Vec<(f64, f64)> = mids.par_iter().map(|&t| mean_at(t)).collect::<Result<_>>()?;
        let mut g = Vec::with_capacity(grid.len() + mids.len());
        let mut m = Vec::with_capacity(g.capacity());
        let mut e = Vec::with_capacity(g.capacity());
        for j in 0..grid.len() {
            g.push(grid[j]);
            m.push(means[j]);
            e.push(errs[j]);
            if j < mids.len() {
                g.push(mids[j]);
                m.push(extra[j].0);
                e.push(extra[j].1);
            }
        }
        grid = g;
        means = m;
        errs = e;
        (value, mc, trunc) = ti_summary(&grid, &means, &errs);
        doublings += 1;
    }
    Ok(TiEstimate {
        theta: *grid.last().unwrap(),
        value,
        error: mc + trunc,
        mc_error: mc,
        truncation_error: trunc,
        grid,
        means,
        mean_errors: errs,
    })
}

/// Exact `−n⁻¹ log P(U_n ≥ t)` under `μ^{⊗n}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRate {
    pub n: usize,
    pub log_probability: f64,
    /// `+∞` when no configuration reaches `t`.
    pub rate: f64,
}

/// Exact tail rates for each `n`, with `model_for(n)` supplying the model
/// (its `θ` is ignored). `U_n ≥ t` is tested with slack
/// `1e-12 · max(1, |t|)`.
pub fn tail_probability_exact(
    model_for: &dyn Fn(usize) -> Result<GibbsModel>,
    t: f64,
    n_list: &[usize],
    opts: &ExactOptions,
) -> Result<Vec<TailRate>> {
    let slack = 1e-12 * t.abs().max(1.0);
    n_list
        .iter()
        .map(|&n| {
            let model = model_for(n)?;
            if model.n() != n {
                return Err(Error::Dimension(format!("model for n = {n} has {} sites", model.n())));
            }
            let hits: Vec<f64> = enumerate_terms(&model, opts)?.into_iter().filter(|&(_, u)| u >= t - slack).map(|(lw, _)| lw).collect();
            let lp = log_sum_exp(&hits).min(0.0);
            let rate = if hits.is_empty() { f64::INFINITY } else { (-lp / n as f64).max(0.0) };
            Ok(TailRate { n, log_probability: lp, rate })
        })
        .collect()
}

/// Test function on `[0, 1]` with exact integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    /// `Σ_k c_k x^k`.
    Polynomial(Vec<f64>),
    /// Piecewise constant on `breakpoints` (from 0 to 1).
    Step { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl TestFunction {
    pub fn constant(c: f64) -> Self {
        TestFunction::Polynomial(vec![c])
    }

    /// `∫_a^b g`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            TestFunction::Polynomial(c) => c
                .iter()
                .enumerate()
                .map(|(k, &ck)| ck * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k + 1) as f64)
                .sum(),
            TestFunction::Step { breakpoints, values } => breakpoints
                .windows(2)
                .zip(values)
                .map(|(w, &v)| v * (b.min(w[1]) - a.max(w[0])).max(0.0))
                .sum(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Polynomial(c) => format!("poly{c:?}"),
            TestFunction::Step { breakpoints, values } => format!("step{breakpoints:?}->{values:?}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let TestFunction::Step { breakpoints, values } = self {
            let ok = breakpoints.len() == values.len() + 1
                && breakpoints.first() == Some(&0.0)
                && breakpoints.last() == Some(&1.0)
                && breakpoints.windows(2).all(|w| w[1] > w[0]);
            if !ok {
                return Err(Error::Breakpoints("step test function needs increasing breakpoints from 0 to 1".into()));
            }
        }
        Ok(())
    }
}

/// Weak-law harness settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeakLawConfig {
    pub chain: ChainConfig,
    pub chains: usize,
}

impl Default for WeakLawConfig {
    fn default() -> Self {
        Self { chain: ChainConfig::default(), chains: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakLawEntry {
    pub test: String,
    /// Chain-averaged `min_f max_r |∫ω_{n,r} g − ∫f_r g|`.
    pub discrepancy: f64,
    pub error: f64,
    pub per_chain: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakLawReport {
    pub n: usize,
    pub chains: usize,
    pub kept_per_chain: usize,
    pub entries: Vec<WeakLawEntry>,
    /// Maximum discrepancy over the finite test family.
    pub surrogate_distance: f64,
    pub surrogate_note: String,
}

/// Compares the empirical profile `ω_n` (site values, or per-colour
/// indicators) with the optimizers of `solution` through each test
/// function, averaging over independent chains.
pub fn weak_law_check(model: &GibbsModel, solution: &SolveResult, tests: &[TestFunction], cfg: &WeakLawConfig) -> Result<WeakLawReport> {
    let n = model.n();
    let k = model.mu.len();
    let channels = solution.channels;
    let real = match (solution.family, channels) {
        (Family::Multilinear, 1) => true,
        (Family::Potts | Family::Generic, c) if c == k => false,
        _ => return Err(Error::Dimension("solver result does not match the model's atoms".into())),
    };
    let wsum: f64 = solution.widths.iter().sum();
    if (wsum - 1.0).abs() > 1e-9 || solution.optimizers.iter().any(|f| f.len() != solution.widths.len() * channels) {
        return Err(Error::Dimension("solver profiles do not match their partition".into()));
    }
    if cfg.chains == 0 || tests.is_empty() {
        return Err(Error::Config("need at least one chain and one test function".into()));
    }
    tests.iter().try_for_each(TestFunction::validate)?;
    cfg.chain.validate(n)?;

    let cells: Vec<Vec<f64>> = tests
        .iter()
        .map(|g| (0..n).map(|i| g.integral(i as f64 / n as f64, (i + 1) as f64 / n as f64)).collect())
        .collect();
    let mut edges = vec![0.0];
    for &w in &solution.widths {
        edges.push(edges.last().unwrap() + w);
    }
    // targets[g][opt][r] = ∫ f_r g
    let targets: Vec<Vec<Vec<f64>>> = tests
        .iter()
        .map(|g| {
            solution
                .optimizers
                .iter()
                .map(|f| {
                    (0..channels)
                        .map(|r| (0..solution.widths.len()).map(|u| f[u * channels + r] * g.integral(edges[u], edges[u + 1])).sum())
                        .collect()
                })
                .collect()
        })
        .collect();
    let atoms = model.mu.atoms();
    let per_chain: Vec<Vec<f64>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| -> Result<Vec<f64>> {
            let chain = ChainConfig { seed: derive_seed(cfg.chain.seed, c as u64), ..cfg.chain.clone() };
            let mut acc = vec![0.0; tests.len()];
            let mut kept = 0usize;
            run_chain(model, &chain, |_, x| {
                kept += 1;
                for (gi, cell) in cells.iter().enumerate() {
                    let emp: Vec<f64> = (0..channels)
                        .map(|r| {
                            (0..n)
                                .map(|i| {
                                    let v = if real { atoms[x.get(i)] } else if x.get(i) == r { 1.0 } else { 0.0 };
                                    v * cell[i]
                                })
                                .sum()
                        })
                        .collect();
                    let d = targets[gi]
                        .iter()
                        .map(|t| emp.iter().zip(t).map(|(e, t)| (e - t).abs()).fold(0.0, f64::max))
                        .fold(f64::INFINITY, f64::min);
                    acc[gi] += d;
                }
            })?;
            Ok(acc.into_iter().map(|a| a / kept.max(1) as f64).collect())
        })
        .collect::<Result<_>>()?;
    let entries: Vec<WeakLawEntry> = tests
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let vals: Vec<f64> = per_chain.iter().map(|c| c[gi]).collect();
            let m = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / m;
            let error = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0) / m).sqrt()
            } else {
                0.0
            };
            WeakLawEntry { test: g.label(), discrepancy: mean, error, per_chain: vals }
        })
        .collect();
    Ok(WeakLawReport {
        n,
        chains: cfg.chains,
        kept_per_chain: cfg.chain.kept(),
        surrogate_distance: entries.iter().map(|e| e.discrepancy).fold(0.0, f64::max),
        entries,
        surrogate_note: "maximum over a finite test family; a surrogate for the Lipschitz-dual distance".into(),
    })
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical(n1: usize, n2: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n1 + n2) as f64 / (n1 * n2) as f64).sqrt()
}

/// `U_n` of `count` independent draws from `μ^{⊗n}`.
pub fn iid_u_samples(model: &GibbsModel, count: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = model.mu.len();
    let probs = model.mu.probs();
    (0..count)
        .map(|_| {
            let x = DataVector::new((0..model.n()).map(|_| sample(probs, rng.gen())).collect(), k)?;
            model.u(&x)
        })
        .collect()
}
