//! Limiting functionals on step objects: homomorphism-type integrals
//! `t(H, W, f)`, the functional `T_{W,φ}(ν)`, the mean-field objectives
//! `G₁`, `G₂`, their gradients, the lifts `Ξ₁`, `Ξ₂`, and `D(ν | ρ)`.
//!
//! Every object lives on the block partition of the kernel `W`: a profile is
//! one value (or one colour vector) per block, and a [`BlockMeasure`] has
//! one conditional atom law per block. All integrals are exact block sums.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::StepKernel;
use crate::motif::Motif;
use crate::scalar::Scalar;
use crate::tilt::{inverse_mean, kl_probs, tilted_probs, Extended, FiniteBaseMeasure, TiltSolverConfig};
use crate::ustat::{advance, checked_pow, PhiKernel};

/// Default cap on `k^v` for tabulated `φ`.
pub const DEFAULT_TABLE_LIMIT: usize = 1 << 20;

fn stochastic_tolerance<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

/// A law `ν` on `[0,1] × atoms` whose first marginal is uniform, stored as
/// one conditional atom distribution per block of a fixed partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockMeasure<T> {
    widths: Vec<T>,
    atoms: usize,
    rows: Vec<T>,
}

impl<T: Scalar> BlockMeasure<T> {
    /// `rows` is the row-stochastic `m × k` matrix, row-major.
    pub fn new(widths: Vec<T>, atoms: usize, rows: Vec<T>) -> Result<Self> {
        if widths.is_empty() || atoms == 0 || rows.len() != widths.len() * atoms {
            return Err(Error::Dimension(format!(
                "{} blocks × {atoms} atoms needs {} entries, got {}",
                widths.len(),
                widths.len() * atoms,
                rows.len()
            )));
        }
        let total: T = widths.iter().copied().sum();
        if widths.iter().any(|&w| !(w > T::zero())) || (total - T::one()).abs() > stochastic_tolerance::<T>() {
            return Err(Error::Breakpoints("block widths must be positive and sum to 1".into()));
        }
        check_stochastic(&rows, atoms)?;
        Ok(Self { widths, atoms, rows })
    }

    /// `ρ = U[0,1] ⊗ μ` on the given partition.
    pub fn product(widths: Vec<T>, mu: &FiniteBaseMeasure<T>) -> Result<Self> {
        let rows = widths.iter().flat_map(|_| mu.probs().iter().copied()).collect();
        Self::new(widths, mu.len(), rows)
    }

    pub fn block_count(&self) -> usize {
        self.widths.len()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms
    }

    pub fn widths(&self) -> &[T] {
        &self.widths
    }

    pub fn row(&self, u: usize) -> &[T] {
        &self.rows[u * self.atoms..(u + 1) * self.atoms]
    }

    pub fn rows(&self) -> &[T] {
        &self.rows
    }

    /// `E_ν[B | A ∈ block u]` for each block.
    pub fn conditional_means(&self, atoms: &[T]) -> Vec<T> {
        (0..self.block_count())
            .map(|u| self.row(u).iter().zip(atoms).map(|(&p, &a)| p * a).sum())
            .collect()
    }
}

fn check_stochastic<T: Scalar>(rows: &[T], k: usize) -> Result<()> {
    for (u, row) in rows.chunks(k).enumerate() {
        if row.iter().any(|&p| !(p >= T::zero())) {
            return Err(Error::Profile(format!("row {u} has a negative or non-finite entry")));
        }
        let s: T = row.iter().copied().sum();
        if (s - T::one()).abs() > stochastic_tolerance::<T>() {
            return Err(Error::Profile(format!("row {u} sums to {s}, not 1")));
        }
    }
    Ok(())
}

/// The mean-field order parameter: a real value per block in `cl(𝒩)`, or a
/// colour distribution per block.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TiltProfile<T> {
    Real { values: Vec<T> },
    Potts { colors: usize, values: Vec<T> },
}

impl<T: Scalar> TiltProfile<T> {
    pub fn real(values: Vec<T>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Profile("real profile needs finite values on at least one block".into()));
        }
        Ok(TiltProfile::Real { values })
    }

    /// `values` is the `m × c` matrix of colour probabilities, row-major.
    pub fn potts(colors: usize, values: Vec<T>) -> Result<Self> {
        if colors == 0 || values.is_empty() || values.len() % colors != 0 {
            return Err(Error::Dimension(format!("{} entries do not form rows of {colors} colours", values.len())));
        }
        check_stochastic(&values, colors)?;
        Ok(TiltProfile::Potts { colors, values })
    }

    pub fn block_count(&self) -> usize {
        match self {
            TiltProfile::Real { values } => values.len(),
            TiltProfile::Potts { colors, values } => values.len() / colors,
        }
    }

    pub fn values(&self) -> &[T] {
        match self {
            TiltProfile::Real { values } | TiltProfile::Potts { values, .. } => values,
        }
    }

    /// Channel `r` of a Potts profile as a per-block vector.
    pub fn channel(&self, r: usize) -> Vec<T> {
        match self {
            TiltProfile::Real { values } => values.clone(),
            TiltProfile::Potts { colors, values } => values.chunks(*colors).map(|row| row[r]).collect(),
        }
    }

    /// Checks the real variant against `cl(𝒩) = [min atom, max atom]`.
    pub fn check_range(&self, mu: &FiniteBaseMeasure<T>) -> Result<()> {
        if let TiltProfile::Real { values } = self {
            let (lo, hi) = mu.mean_range();
            if let Some(&v) = values.iter().find(|&&v| v < lo || v > hi) {
                return Err(Error::OutOfRange { value: v.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
            }
        }
        Ok(())
    }
}

fn check_blocks<T: Scalar>(motif: &Motif, w: &StepKernel<T>, fs: &[Vec<T>]) -> Result<()> {
    if fs.len() != motif.v() {
        return Err(Error::Dimension(format!("{} vertex functions for a motif on {} vertices", fs.len(), motif.v())));
    }
    let m = w.block_count();
    if let Some(f) = fs.iter().find(|f| f.len() != m) {
        return Err(Error::Dimension(format!("vertex function has {} blocks, kernel has {m}", f.len())));
    }
    Ok(())
}

/// Brute-force block sum of `∫ Π_E W(x_a, x_b) Π_a f_a(x_a) dx` over all
/// `m^v` block tuples.
pub fn t_motif_brute<T: Scalar>(motif: &Motif, w: &StepKernel<T>, fs: &[Vec<T>]) -> Result<T> {
    check_blocks(motif, w, fs)?;
    let m = w.block_count();
    let widths = w.widths();
    let v = motif.v();
    let tail = checked_pow(m, v - 1).ok_or(Error::TooManyBlocks { blocks: m, limit: 0 })?;
    let partials: Vec<T> = (0..m)
        .into_par_iter()
        .map(|u0| {
            let mut idx = vec![0usize; v];
            idx[0] = u0;
            let mut acc = T::zero();
            for _ in 0..tail {
                let mut term = T::one();
                for (a, &u) in idx.iter().enumerate() {
                    term *= widths[u] * fs[a][u];
                }
                if term != T::zero() {
                    for &(a, b) in motif.edges() {
                        term *= w.value(idx[a], idx[b]);
                    }
                    acc += term;
                }
                advance(&mut idx[1..], m);
            }
            acc
        })
        .collect();
    Ok(partials.into_iter().sum())
}

/// Leaf-elimination message into `a` from its subtree, including `a`'s own
/// site weight `sw[a]` unless `bare`.
fn tree_message<T: Scalar>(
    a: usize,
    parent: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    sw: &[Vec<T>],
    w: &StepKernel<T>,
    bare: bool,
) -> Vec<T> {
    seen[a] = true;
    let m = w.block_count();
    let mut msg = if bare { vec![T::one(); m] } else { sw[a].clone() };
    for &c in &adj[a] {
        if c == parent {
            continue;
        }
        let child = tree_message(c, a, adj, seen, sw, w, false);
        for (u, out) in msg.iter_mut().enumerate() {
            let s: T = (0..m).map(|u2| w.value(u, u2) * child[u2]).sum();
            *out *= s;
        }
    }
    msg
}

fn site_weights<T: Scalar>(w: &StepKernel<T>, fs: &[Vec<T>]) -> Vec<Vec<T>> {
    let widths = w.widths();
    fs.iter().map(|f| f.iter().zip(&widths).map(|(&x, &d)| x * d).collect()).collect()
}

/// `t(H, W, f₁, …, f_v)`: leaf elimination on forests, brute force
/// otherwise.
pub fn t_motif<T: Scalar>(motif: &Motif, w: &StepKernel<T>, fs: &[Vec<T>]) -> Result<T> {
    if !motif.is_forest() {
        return t_motif_brute(motif, w, fs);
    }
    check_blocks(motif, w, fs)?;
    let adj = motif.neighbours();
    let sw = site_weights(w, fs);
    let mut seen = vec![false; motif.v()];
    let mut total = T::one();
    for root in 0..motif.v() {
        if !seen[root] {
            total *= tree_message(root, usize::MAX, &adj, &mut seen, &sw, w, false).into_iter().sum::<T>();
        }
    }
    Ok(total)
}

/// Density of `t(H, W, f)` with vertex `a` pinned to each block: entry `u`
/// is the integral over the other vertices with `x_a` fixed in block `u`
/// and the factor `f_a` removed.
pub fn pinned_integral<T: Scalar>(motif: &Motif, w: &StepKernel<T>, fs: &[Vec<T>], a: usize) -> Result<Vec<T>> {
    check_blocks(motif, w, fs)?;
    if a >= motif.v() {
        return Err(Error::Dimension(format!("vertex {a} out of range")));
    }
    let m = w.block_count();
    if motif.is_forest() {
        let adj = motif.neighbours();
        let sw = site_weights(w, fs);
        let mut seen = vec![false; motif.v()];
        let mut msg = tree_message(a, usize::MAX, &adj, &mut seen, &sw, w, true);
        for root in 0..motif.v() {
            if !seen[root] {
                let s: T = tree_message(root, usize::MAX, &adj, &mut seen, &sw, w, false).into_iter().sum();
                msg.iter_mut().for_each(|x| *x *= s);
            }
        }
        return Ok(msg);
    }
    let widths = w.widths();
    let v = motif.v();
    let tail = checked_pow(m, v - 1).ok_or(Error::TooManyBlocks { blocks: m, limit: 0 })?;
    let out: Vec<T> = (0..m)
        .into_par_iter()
        .map(|u| {
            let mut rest = vec![0usize; v - 1];
            let mut idx = vec![0usize; v];
            let mut acc = T::zero();
            for _ in 0..tail {
                let mut r = rest.iter();
                for (b, slot) in idx.iter_mut().enumerate() {
                    *slot = if b == a { u } else { *r.next().unwrap() };
                }
                let mut term = T::one();
                for (b, &ub) in idx.iter().enumerate() {
                    if b != a {
                        term *= widths[ub] * fs[b][ub];
                    }
                }
                if term != T::zero() {
                    for &(x, y) in motif.edges() {
                        term *= w.value(idx[x], idx[y]);
                    }
                    acc += term;
                }
                advance(&mut rest, m);
            }
            acc
        })
        .collect();
    Ok(out)
}

/// `G_{1,W}(f) = t(H, W, f, …, f)`.
pub fn g1<T: Scalar>(motif: &Motif, w: &StepKernel<T>, f: &[T]) -> Result<T> {
    t_motif(motif, w, &vec![f.to_vec(); motif.v()])
}

/// `G_{2,W}(f) = Σ_r t(H, W, f_r, …, f_r)`.
pub fn g2<T: Scalar>(motif: &Motif, w: &StepKernel<T>, f: &TiltProfile<T>) -> Result<T> {
    let c = potts_colors(f)?;
    (0..c).map(|r| g1(motif, w, &f.channel(r))).sum()
}

fn potts_colors<T>(f: &TiltProfile<T>) -> Result<usize> {
    match f {
        TiltProfile::Potts { colors, .. } => Ok(*colors),
        TiltProfile::Real { .. } => Err(Error::Profile("expected a colour profile".into())),
    }
}

/// `∂G₁/∂f(u)` per unit block width: `Σ_a` of the pinned integral at `a`.
pub fn g1_gradient<T: Scalar>(motif: &Motif, w: &StepKernel<T>, f: &[T]) -> Result<Vec<T>> {
    let fs = vec![f.to_vec(); motif.v()];
    let mut grad = vec![T::zero(); w.block_count()];
    for a in 0..motif.v() {
        for (g, p) in grad.iter_mut().zip(pinned_integral(motif, w, &fs, a)?) {
            *g += p;
        }
    }
    Ok(grad)
}

/// `∂G₂/∂f_r(u)` per unit block width, as an `m × c` row-major matrix.
pub fn g2_gradient<T: Scalar>(motif: &Motif, w: &StepKernel<T>, f: &TiltProfile<T>) -> Result<Vec<T>> {
    let c = potts_colors(f)?;
    let m = w.block_count();
    let mut out = vec![T::zero(); m * c];
    for r in 0..c {
        for (u, g) in g1_gradient(motif, w, &f.channel(r))?.into_iter().enumerate() {
            out[u * c + r] = g;
        }
    }
    Ok(out)
}

/// `T_{W,φ}(ν) = E[φ(B₁, …, B_v) Π_E W(A_a, A_b)]` under `(A_a, B_a)` iid
/// from `ν`. Separable `φ` reduce to [`t_motif`]; others are tabulated
/// (at most `table_limit` entries).
pub fn t_functional<T: Scalar>(
    motif: &Motif,
    w: &StepKernel<T>,
    nu: &BlockMeasure<T>,
    phi: &PhiKernel<T>,
    table_limit: usize,
) -> Result<T> {
    if nu.block_count() != w.block_count() {
        return Err(Error::Dimension(format!(
            "measure has {} blocks, kernel has {}",
            nu.block_count(),
            w.block_count()
        )));
    }
    if nu.atom_count() != phi.support_size() || phi.arity() != motif.v() {
        return Err(Error::Dimension("φ does not match the measure or motif".into()));
    }
    let m = w.block_count();
    let v = motif.v();
    if let Some(factors) = phi.separable_factors() {
        let mut total = T::zero();
        for g in factors {
            let f: Vec<T> = (0..m).map(|u| nu.row(u).iter().zip(&g).map(|(&p, &x)| p * x).sum()).collect();
            total += t_motif(motif, w, &vec![f; v])?;
        }
        return Ok(total);
    }
    let table = phi.to_table(table_limit)?;
    let k = nu.atom_count();
    let widths = w.widths();
    let tail = checked_pow(m, v - 1).ok_or(Error::TooManyBlocks { blocks: m, limit: 0 })?;
    let partials: Vec<T> = (0..m)
        .into_par_iter()
        .map(|u0| {
            let mut idx = vec![0usize; v];
            idx[0] = u0;
            let mut acc = T::zero();
            let mut buf = table.clone();
            for _ in 0..tail {
                let mut weight = T::one();
                for &u in &idx {
                    weight *= widths[u];
                }
                for &(a, b) in motif.edges() {
                    weight *= w.value(idx[a], idx[b]);
                }
                if weight != T::zero() {
                    // contract the last axis with ν(·|u_a) repeatedly
                    buf.copy_from_slice(&table);
                    let mut len = table.len();
                    for a in (0..v).rev() {
                        let row = nu.row(idx[a]);
                        len /= k;
                        for i in 0..len {
                            buf[i] = (0..k).map(|j| buf[i * k + j] * row[j]).sum();
                        }
                    }
                    acc += weight * buf[0];
                }
                advance(&mut idx[1..], m);
            }
            acc
        })
        .collect();
    Ok(partials.into_iter().sum())
}

/// Clamps a mean into `cl(𝒩)` when it lies outside by at most `margin`.
fn clamp_mean<T: Scalar>(mu: &FiniteBaseMeasure<T>, x: T, margin: T) -> T {
    let (lo, hi) = mu.mean_range();
    if x < lo && lo - x <= margin {
        lo
    } else if x > hi && x - hi <= margin {
        hi
    } else {
        x
    }
}

/// `Ξ₁(f)`: block `u` carries the tilt of `μ` with mean `f(u)`; endpoint
/// values give point masses on the extreme atoms.
pub fn lift_xi1<T: Scalar>(mu: &FiniteBaseMeasure<T>, widths: &[T], f: &[T], cfg: &TiltSolverConfig) -> Result<BlockMeasure<T>> {
    if widths.len() != f.len() {
        return Err(Error::Dimension(format!("{} widths for {} profile values", widths.len(), f.len())));
    }
    let k = mu.len();
    let (lo_idx, hi_idx) = mu.extreme_atoms();
    let mut rows = Vec::with_capacity(f.len() * k);
    for &x in f {
        let x = clamp_mean(mu, x, T::lit(cfg.margin));
        match inverse_mean(mu, x, cfg)? {
            Extended::Finite(theta) => rows.extend(tilted_probs(mu, theta)),
            e => {
                let hit = if matches!(e, Extended::PosInf) { hi_idx } else { lo_idx };
                rows.extend((0..k).map(|j| if j == hit { T::one() } else { T::zero() }));
            }
        }
    }
    BlockMeasure::new(widths.to_vec(), k, rows)
}

/// `Ξ₂(f)`: the colour profile read as conditional laws.
pub fn lift_xi2<T: Scalar>(widths: &[T], f: &TiltProfile<T>) -> Result<BlockMeasure<T>> {
    let c = potts_colors(f)?;
    if f.block_count() != widths.len() {
        return Err(Error::Dimension(format!("{} widths for {} profile blocks", widths.len(), f.block_count())));
    }
    BlockMeasure::new(widths.to_vec(), c, f.values().to_vec())
}

/// `D(ν | ρ) = ∫ D(ν(·|u) ‖ μ) du`.
pub fn divergence<T: Scalar>(nu: &BlockMeasure<T>, mu: &FiniteBaseMeasure<T>) -> Result<T> {
    if nu.atom_count() != mu.len() {
        return Err(Error::SupportMismatch);
    }
    Ok((0..nu.block_count()).map(|u| nu.widths()[u] * kl_probs(nu.row(u), mu.probs())).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{cut_norm_exact, lp_norm};
    use crate::tilt::{gamma, mean_map};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_kernel(m: usize, seed: u64, lo: f64, hi: f64, uniform: bool) -> StepKernel<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vals = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let x = rng.gen_range(lo..hi);
                vals[i * m + j] = x;
                vals[j * m + i] = x;
            }
        }
        if uniform {
            return StepKernel::uniform(m, vals).unwrap();
        }
        let mut cuts: Vec<f64> = (0..m - 1).map(|_| rng.gen_range(0.05..0.95)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        if cuts.len() != m - 1 {
            return StepKernel::uniform(m, vals).unwrap();
        }
        let mut bp = vec![0.0];
        bp.extend(cuts);
        bp.push(1.0);
        StepKernel::new(bp, vals).unwrap()
    }

    fn random_vec(m: usize, seed: u64, lo: f64, hi: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| rng.gen_range(lo..hi)).collect()
    }

    fn random_potts(m: usize, c: usize, seed: u64) -> TiltProfile<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vals = Vec::new();
        for _ in 0..m {
            let row: Vec<f64> = (0..c).map(|_| rng.gen_range(0.1..1.0)).collect();
            let s: f64 = row.iter().sum();
            vals.extend(row.iter().map(|x| x / s));
        }
        TiltProfile::potts(c, vals).unwrap()
    }

    #[test]
    fn t_motif_examples() {
        let w = StepKernel::<f64>::constant(1.0);
        let fs = vec![vec![2.0], vec![-0.5], vec![3.0]];
        assert!((t_motif(&Motif::triangle(), &w, &fs).unwrap() + 3.0).abs() < 1e-15);
        assert!((t_motif(&Motif::path(3).unwrap(), &w, &fs).unwrap() + 3.0).abs() < 1e-15);
        let w = random_kernel(4, 1, -1.0, 1.0, false);
        let mut fs = vec![random_vec(4, 2, -1.0, 1.0); 3];
        fs[1] = vec![0.0; 4];
        assert_eq!(t_motif(&Motif::triangle(), &w, &fs).unwrap(), 0.0);
    }

    #[test]
    fn tree_dp_matches_brute_force() {
        let motifs = [
            Motif::edge(),
            Motif::path(4).unwrap(),
            Motif::star(3).unwrap(),
            Motif::new(4, vec![(0, 1), (2, 3)]).unwrap(),
            Motif::new(3, vec![(0, 1)]).unwrap(),
        ];
        for (s, m) in motifs.iter().enumerate() {
            let w = random_kernel(5, s as u64, -1.0, 2.0, s % 2 == 0);
            let fs: Vec<Vec<f64>> = (0..m.v()).map(|a| random_vec(5, 100 + a as u64, -1.0, 1.0)).collect();
            let dp = t_motif(m, &w, &fs).unwrap();
            let bf = t_motif_brute(m, &w, &fs).unwrap();
            assert!((dp - bf).abs() <= 1e-10 * bf.abs().max(1e-12), "{dp} vs {bf}");
        }
    }

    #[test]
    fn g1_k2_is_a_quadratic_form() {
        let w = random_kernel(4, 7, -1.0, 1.0, false);
        let f = random_vec(4, 8, -1.0, 1.0);
        let d = w.widths();
        let mut direct = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                direct += d[i] * d[j] * w.value(i, j) * f[i] * f[j];
            }
        }
        assert!((g1(&Motif::edge(), &w, &f).unwrap() - direct).abs() < 1e-15);
        assert!((g1(&Motif::triangle(), &StepKernel::<f64>::constant(1.0), &[0.3]).unwrap() - 0.027).abs() < 1e-15);
        assert_eq!(g1(&Motif::triangle(), &w, &[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn g2_examples() {
        let w = StepKernel::<f64>::constant(1.0);
        let f = TiltProfile::potts(3, vec![1.0 / 3.0; 3]).unwrap();
        assert!((g2(&Motif::triangle(), &w, &f).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        let w = random_kernel(3, 3, 0.0, 1.0, true);
        let single = TiltProfile::potts(2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let ones = t_motif(&Motif::triangle(), &w, &vec![vec![1.0; 3]; 3]).unwrap();
        assert!((g2(&Motif::triangle(), &w, &single).unwrap() - ones).abs() < 1e-15);
        assert!(TiltProfile::potts(2, vec![0.7, 0.7]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let w = StepKernel::<f64>::constant(1.0);
        let g = g1_gradient(&Motif::edge(), &w, &[0.4]).unwrap();
        assert!((g[0] - 0.8).abs() < 1e-15);
        let w = random_kernel(3, 5, -1.0, 1.0, false);
        assert!(g1_gradient(&Motif::triangle(), &w, &[0.0; 3]).unwrap().iter().all(|&x| x == 0.0));
        let f = TiltProfile::<f64>::potts(3, vec![1.0 / 3.0; 3]).unwrap();
        let g = g2_gradient(&Motif::triangle(), &StepKernel::constant(1.0), &f).unwrap();
        assert!((g[0] - g[1]).abs() < 1e-15 && (g[1] - g[2]).abs() < 1e-15);
        let single = TiltProfile::<f64>::potts(2, vec![1.0, 0.0]).unwrap();
        let g = g2_gradient(&Motif::triangle(), &StepKernel::constant(1.0), &single).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-15 && g[1] == 0.0);
    }

    /// Central differences of `G` against the density gradient times width.
    fn fd_check(motif: &Motif, w: &StepKernel<f64>, f: &[f64], grad: &[f64]) {
        let h = 1e-5;
        let d = w.widths();
        for u in 0..f.len() {
            let mut fp = f.to_vec();
            let mut fm = f.to_vec();
            fp[u] += h;
            fm[u] -= h;
            let fd = (g1(motif, w, &fp).unwrap() - g1(motif, w, &fm).unwrap()) / (2.0 * h);
            let an = grad[u] * d[u];
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "block {u}: {fd} vs {an}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (s, m) in [Motif::edge(), Motif::triangle(), Motif::path(3).unwrap(), Motif::cycle(4).unwrap()].iter().enumerate() {
            let w = random_kernel(4, 20 + s as u64, -1.0, 2.0, false);
            let f = random_vec(4, 30 + s as u64, -0.9, 0.9);
            fd_check(m, &w, &f, &g1_gradient(m, &w, &f).unwrap());
        }
        let w = random_kernel(3, 9, 0.0, 2.0, false);
        let f = random_potts(3, 3, 11);
        let grad = g2_gradient(&Motif::triangle(), &w, &f).unwrap();
        let d = w.widths();
        let h = 1e-5;
        for u in 0..3 {
            for r in 0..3 {
                let bump = |s: f64| {
                    let mut v = f.values().to_vec();
                    v[u * 3 + r] += s;
                    // the objective is defined off the simplex by the same formula
                    let ch: Vec<Vec<f64>> = (0..3).map(|c| (0..3).map(|b| v[b * 3 + c]).collect()).collect();
                    ch.iter().map(|c| g1(&Motif::triangle(), &w, c).unwrap()).sum::<f64>()
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                let an = grad[u * 3 + r] * d[u];
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn t_functional_examples() {
        let mu = FiniteBaseMeasure::<f64>::rademacher();
        let w = random_kernel(3, 1, -1.0, 1.0, false);
        let rho = BlockMeasure::product(w.widths(), &mu).unwrap();
        let t = t_functional(&Motif::triangle(), &w, &rho, &PhiKernel::product(3, &mu), DEFAULT_TABLE_LIMIT).unwrap();
        assert!(t.abs() < 1e-15);
        let c = 4;
        let mu = FiniteBaseMeasure::<f64>::uniform_colors(c).unwrap();
        let one = StepKernel::constant(1.0);
        let rho = BlockMeasure::product(one.widths(), &mu).unwrap();
        let t = t_functional(&Motif::triangle(), &one, &rho, &PhiKernel::monochrome(3, &mu), DEFAULT_TABLE_LIMIT).unwrap();
        assert!((t - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn table_path_matches_separable_path() {
        let mu = FiniteBaseMeasure::new(vec![-1.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let w = random_kernel(3, 4, -1.0, 1.0, false);
        let nu = BlockMeasure::new(
            w.widths(),
            3,
            vec![0.1, 0.6, 0.3, 0.5, 0.25, 0.25, 0.2, 0.2, 0.6],
        )
        .unwrap();
        for m in [Motif::triangle(), Motif::path(3).unwrap()] {
            for phi in [PhiKernel::product(3, &mu), PhiKernel::monochrome(3, &mu)] {
                let tab = PhiKernel::table(3, &mu, phi.to_table(1000).unwrap(), None).unwrap();
                let a = t_functional(&m, &w, &nu, &phi, 1000).unwrap();
                let b = t_functional(&m, &w, &nu, &tab, 1000).unwrap();
                assert!((a - b).abs() < 1e-14);
            }
        }
        let tab = PhiKernel::table(3, &mu, vec![0.5; 27], None).unwrap();
        assert!(matches!(
            t_functional(&Motif::triangle(), &w, &nu, &tab, 10),
            Err(Error::TableTooLarge { .. })
        ));
    }

    #[test]
    fn t_functional_matches_monte_carlo() {
        // (A, B) iid from ν: A uniform on [0,1], B from the row of A's block
        let mu = FiniteBaseMeasure::new(vec![-1.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let w = random_kernel(3, 12, -1.0, 1.0, false);
        let nu = BlockMeasure::new(w.widths(), 3, vec![0.1, 0.6, 0.3, 0.5, 0.25, 0.25, 0.2, 0.2, 0.6]).unwrap();
        let table: Vec<f64> = (0..27).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let phi = PhiKernel::table(3, &mu, table, None).unwrap();
        let motif = Motif::triangle();
        let exact = t_functional(&motif, &w, &nu, &phi, 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let mut xs = [0.0; 3];
            let mut bs = [0usize; 3];
            for a in 0..3 {
                xs[a] = rng.gen::<f64>();
                let u = (0..3).find(|&u| xs[a] < w.breakpoints()[u + 1]).unwrap_or(2);
                let r: f64 = rng.gen();
                let row = nu.row(u);
                bs[a] = if r < row[0] { 0 } else if r < row[0] + row[1] { 1 } else { 2 };
            }
            let val = phi.eval(&bs) * w.eval(xs[0], xs[1]) * w.eval(xs[1], xs[2]) * w.eval(xs[0], xs[2]);
            s += val;
            s2 += val * val;
        }
        let mean = s / draws as f64;
        let se = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn lifts_reproduce_profiles() {
        let mu = FiniteBaseMeasure::<f64>::new(vec![-1.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let cfg = TiltSolverConfig::default();
        let widths = vec![0.25; 4];
        let f = vec![-0.3, 0.0, 1.2, 1.9];
        let nu = lift_xi1(&mu, &widths, &f, &cfg).unwrap();
        for (got, want) in nu.conditional_means(mu.atoms()).iter().zip(&f) {
            assert!((got - want).abs() < 1e-10);
        }
        let rho = lift_xi1(&mu, &widths, &vec![mu.mean(); 4], &cfg).unwrap();
        for u in 0..4 {
            for (a, b) in rho.row(u).iter().zip(mu.probs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let top = lift_xi1(&mu, &widths, &[2.0; 4], &cfg).unwrap();
        assert_eq!(top.row(2), &[0.0, 0.0, 1.0]);
        let d = divergence(&top, &mu).unwrap();
        assert!((d + 0.3f64.ln()).abs() < 1e-15);
        // D(Ξ₁(f) | ρ) is the block average of γ
        let want: f64 = f.iter().map(|&x| 0.25 * gamma(&mu, x, &cfg).unwrap()).sum();
        assert!((divergence(&nu, &mu).unwrap() - want).abs() < 1e-10);
        assert!(divergence(&BlockMeasure::product(widths.clone(), &mu).unwrap(), &mu).unwrap() == 0.0);
    }

    #[test]
    fn xi2_and_potts_divergence() {
        let mu = FiniteBaseMeasure::colors(vec![0.2, 0.3, 0.5]).unwrap();
        let widths = vec![0.5, 0.3, 0.2];
        let f = random_potts(3, 3, 5);
        let nu = lift_xi2(&widths, &f).unwrap();
        let mut want = 0.0;
        for u in 0..3 {
            for r in 0..3 {
                let x = f.values()[u * 3 + r];
                want += widths[u] * x * (x / mu.probs()[r]).ln();
            }
        }
        assert!((divergence(&nu, &mu).unwrap() - want).abs() < 1e-14);
        let det = TiltProfile::potts(3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(lift_xi2(&widths, &det).unwrap().rows().iter().all(|&x| x == 0.0 || x == 1.0));
        let uni = FiniteBaseMeasure::uniform_colors(3).unwrap();
        let nu = lift_xi2(&widths, &TiltProfile::potts(3, vec![1.0 / 3.0; 9]).unwrap()).unwrap();
        assert!(divergence(&nu, &uni).unwrap().abs() < 1e-15);
    }

    #[test]
    fn lifts_connect_t_and_g() {
        let mu = FiniteBaseMeasure::new(vec![-1.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let cfg = TiltSolverConfig::default();
        let w = random_kernel(4, 6, -1.0, 1.0, false);
        let f = random_vec(4, 7, -0.8, 1.8);
        let nu = lift_xi1(&mu, &w.widths(), &f, &cfg).unwrap();
        for m in [Motif::triangle(), Motif::path(3).unwrap()] {
            let tab = PhiKernel::table(3, &mu, PhiKernel::product(3, &mu).to_table(100).unwrap(), None).unwrap();
            let t = t_functional(&m, &w, &nu, &tab, 100).unwrap();
            assert!((t - g1(&m, &w, &f).unwrap()).abs() < 1e-10);
        }
        let colors = FiniteBaseMeasure::uniform_colors(3).unwrap();
        let fp = random_potts(4, 3, 8);
        let nu = lift_xi2(&w.widths(), &fp).unwrap();
        let tab = PhiKernel::table(3, &colors, PhiKernel::monochrome(3, &colors).to_table(100).unwrap(), None).unwrap();
        let t = t_functional(&Motif::triangle(), &w, &nu, &tab, 100).unwrap();
        assert!((t - g2(&Motif::triangle(), &w, &fp).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn f32_functionals() {
        let w = StepKernel::<f32>::constant(1.0);
        let g = g1(&Motif::edge(), &w, &[0.5f32]).unwrap();
        assert!((g - 0.25).abs() < 1e-7);
        let _ = mean_map(&FiniteBaseMeasure::<f32>::rademacher(), 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn counting_bound(seed in 0u64..10_000, q in 1.0f64..8.0) {
            let w = random_kernel(4, seed, -2.0, 2.0, seed % 2 == 0);
            for m in [Motif::edge(), Motif::triangle(), Motif::path(3).unwrap(), Motif::star(3).unwrap()] {
                let fs: Vec<Vec<f64>> = (0..m.v()).map(|a| random_vec(4, seed * 7 + a as u64, -1.0, 1.0)).collect();
                let t = t_motif(&m, &w, &fs).unwrap();
                let norm = lp_norm(&w, q * m.max_degree() as f64).unwrap();
                prop_assert!(t.abs() <= norm.powi(m.edge_count() as i32) * (1.0 + 1e-12));
            }
        }

        #[test]
        fn counting_lemma_stability(seed in 0u64..10_000) {
            let w1 = random_kernel(5, seed, -1.0, 1.0, true);
            let w2 = random_kernel(5, seed + 1, -1.0, 1.0, true);
            let f1 = random_vec(5, seed + 2, -1.0, 1.0);
            let f2 = random_vec(5, seed + 3, -1.0, 1.0);
            let fs = vec![f1, f2];
            let d = cut_norm_exact(&w1.difference(&w2), 20).unwrap();
            let gap = (t_motif(&Motif::edge(), &w1, &fs).unwrap() - t_motif(&Motif::edge(), &w2, &fs).unwrap()).abs();
            // [-1,1]-valued functions split into four [0,1] pieces
            prop_assert!(gap <= 4.0 * d + 1e-12);
            let gs: Vec<Vec<f64>> = fs.iter().map(|f| f.iter().map(|x| x.abs()).collect()).collect();
            let gap = (t_motif(&Motif::edge(), &w1, &gs).unwrap() - t_motif(&Motif::edge(), &w2, &gs).unwrap()).abs();
            prop_assert!(gap <= d + 1e-12);
        }
    }
}
