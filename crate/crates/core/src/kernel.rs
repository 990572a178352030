//! Symmetric matrices, step graphons, cut norms and the regularity validators
//! used to qualify a coupling sequence.
//!
//! Every graphon here is a step kernel: a symmetric block matrix on a
//! partition of `[0, 1]`. For such kernels the supremum in the cut norm is
//! attained on unions of blocks, so the exact cut norm is a finite search.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::motif::Motif;
use crate::scalar::Scalar;

/// Derives an independent stream seed from a master seed and a stream index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Symmetric `n × n` matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Scalar> SymmetricMatrix<T> {
    /// Validates symmetry (to a relative `1e-12`) and discards the diagonal.
    pub fn new(n: usize, mut entries: Vec<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("matrix must have at least one row".into()));
        }
        if entries.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        let tol = T::lit(1e-12);
        for i in 0..n {
            entries[i * n + i] = T::zero();
            for j in i + 1..n {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::Degenerate(format!("non-finite entry at ({i}, {j})")));
                }
                if (a - b).abs() > tol * (T::one() + a.abs().max(b.abs())) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                let mid = (a + b) / T::lit(2.0);
                entries[i * n + j] = mid;
                entries[j * n + i] = mid;
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Dimension(format!("row {i} has {} entries, expected {n}", r.len())));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, entries: vec![T::zero(); n * n] }
    }

    /// Complete-graph coupling `Q(i, j) = 1{i ≠ j}`.
    pub fn complete(n: usize) -> Self {
        let mut entries = vec![T::one(); n * n];
        for i in 0..n {
            entries[i * n + i] = T::zero();
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    /// `Q^σ(i, j) = Q(σ(i), σ(j))`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        Self { n, entries }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|&x| x * c).collect() }
    }

    /// `n⁻² Σ |Q(i, j)|`.
    pub fn l1_norm(&self) -> T {
        let nn = T::from_usize_lossy(self.n * self.n);
        self.entries.iter().map(|x| x.abs()).sum::<T>() / nn
    }
}

/// Piecewise-constant function on a partition of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> StepFunction<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>) -> Result<Self> {
        validate_breakpoints(&breakpoints)?;
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} blocks",
                values.len(),
                breakpoints.len() - 1
            )));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn uniform(values: Vec<T>) -> Result<Self> {
        Self::new(uniform_breakpoints(values.len()), values)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn widths(&self) -> Vec<T> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Value at `x`, right-continuous except at 1.
    pub fn eval(&self, x: T) -> T {
        self.values[locate(&self.breakpoints, x)]
    }

    pub fn integral(&self) -> T {
        self.widths().iter().zip(&self.values).map(|(&w, &v)| w * v).sum()
    }

    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `(∫ |f|^r)^{1/r}`; `r = ∞` gives the sup norm.
    pub fn lp_norm(&self, r: T) -> Result<T> {
        if !(r >= T::one()) {
            return Err(Error::Exponent(r.as_f64()));
        }
        if r.is_infinite() {
            return Ok(self.sup_abs());
        }
        let s: T = self.widths().iter().zip(&self.values).map(|(&w, v)| w * v.abs().powf(r)).sum();
        Ok(s.powf(T::one() / r))
    }
}

/// Symmetric step graphon.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
}

pub(crate) fn uniform_breakpoints<T: Scalar>(m: usize) -> Vec<T> {
    let mm = T::from_usize_lossy(m);
    (0..=m).map(|i| T::from_usize_lossy(i) / mm).collect()
}

fn validate_breakpoints<T: Scalar>(bp: &[T]) -> Result<()> {
    if bp.len() < 2 {
        return Err(Error::Breakpoints("need at least one block".into()));
    }
    if bp[0] != T::zero() || bp[bp.len() - 1] != T::one() {
        return Err(Error::Breakpoints("partition must start at 0 and end at 1".into()));
    }
    if bp.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Breakpoints("breakpoints must be strictly increasing".into()));
    }
    Ok(())
}

/// Index of the block containing `x`.
fn locate<T: Scalar>(bp: &[T], x: T) -> usize {
    let m = bp.len() - 1;
    // first breakpoint strictly greater than x
    let k = bp.partition_point(|&b| b <= x);
    k.saturating_sub(1).min(m - 1)
}

fn merge_breakpoints<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let tol = T::epsilon() * T::lit(64.0);
    let mut all: Vec<T> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<T> = Vec::with_capacity(all.len());
    for x in all {
        match out.last() {
            Some(&last) if x - last <= tol => {}
            _ => out.push(x),
        }
    }
    let last = out.len() - 1;
    out[last] = T::one();
    out
}

impl<T: Scalar> StepKernel<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>) -> Result<Self> {
        validate_breakpoints(&breakpoints)?;
        let m = breakpoints.len() - 1;
        if values.len() != m * m {
            return Err(Error::Dimension(format!("expected {} block values, got {}", m * m, values.len())));
        }
        let tol = T::lit(1e-12);
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = (values[i * m + j], values[j * m + i]);
                if (a - b).abs() > tol * (T::one() + a.abs().max(b.abs())) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { breakpoints, values })
    }

    /// `m` equal-width blocks with the given row-major values.
    pub fn uniform(m: usize, values: Vec<T>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Breakpoints("need at least one block".into()));
        }
        Self::new(uniform_breakpoints(m), values)
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("kernel rows must form a square matrix".into()));
        }
        Self::uniform(m, rows.into_iter().flatten().collect())
    }

    pub fn constant(c: T) -> Self {
        Self { breakpoints: vec![T::zero(), T::one()], values: vec![c] }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// Samples `f` at block midpoints of a uniform `m`-block partition.
    pub fn from_fn_midpoint(m: usize, f: impl Fn(T, T) -> T) -> Result<Self> {
        let bp = uniform_breakpoints::<T>(m);
        let half = T::lit(0.5);
        let mut values = vec![T::zero(); m * m];
        for i in 0..m {
            let x = (bp[i] + bp[i + 1]) * half;
            for j in i..m {
                let y = (bp[j] + bp[j + 1]) * half;
                let v = f(x, y);
                values[i * m + j] = v;
                values[j * m + i] = v;
            }
        }
        Self::new(bp, values)
    }

    pub fn block_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[i * self.block_count() + j]
    }

    pub fn widths(&self) -> Vec<T> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn is_uniform(&self) -> bool {
        let m = self.block_count();
        let tol = T::epsilon() * T::lit(64.0);
        let mm = T::from_usize_lossy(m);
        self.breakpoints
            .iter()
            .enumerate()
            .all(|(i, &b)| (b - T::from_usize_lossy(i) / mm).abs() <= tol)
    }

    /// `W(x, y)`.
    pub fn eval(&self, x: T, y: T) -> T {
        self.value(locate(&self.breakpoints, x), locate(&self.breakpoints, y))
    }

    /// Block values times block areas, row-major.
    pub fn weighted_values(&self) -> Vec<T> {
        let w = self.widths();
        let m = w.len();
        let mut out = vec![T::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = self.values[i * m + j] * w[i] * w[j];
            }
        }
        out
    }

    /// Re-expresses the kernel on a finer partition containing all of its
    /// breakpoints.
    pub fn refine_to(&self, bp: &[T]) -> Result<Self> {
        validate_breakpoints(bp)?;
        let half = T::lit(0.5);
        let idx: Vec<usize> = bp.windows(2).map(|w| locate(&self.breakpoints, (w[0] + w[1]) * half)).collect();
        let m = idx.len();
        let mut values = vec![T::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                values[i * m + j] = self.value(idx[i], idx[j]);
            }
        }
        Ok(Self { breakpoints: bp.to_vec(), values })
    }

    /// `self − other` on the common refinement.
    pub fn difference(&self, other: &Self) -> Self {
        if self.breakpoints == other.breakpoints {
            let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect();
            return Self { breakpoints: self.breakpoints.clone(), values };
        }
        let bp = merge_breakpoints(&self.breakpoints, &other.breakpoints);
        let a = self.refine_to(&bp).expect("merged partition is valid");
        let b = other.refine_to(&bp).expect("merged partition is valid");
        let values = a.values.iter().zip(&b.values).map(|(&x, &y)| x - y).collect();
        Self { breakpoints: bp, values }
    }

    /// Rearranges the blocks: block `k` of the result is block `perm[k]` of
    /// `self` (a measure-preserving relabelling of `[0, 1]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = self.block_count();
        assert_eq!(perm.len(), m, "permutation length must equal block count");
        let w = self.widths();
        let mut bp = Vec::with_capacity(m + 1);
        let mut acc = T::zero();
        bp.push(acc);
        for &p in perm {
            acc += w[p];
            bp.push(acc);
        }
        bp[m] = T::one();
        let mut values = vec![T::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                values[i * m + j] = self.value(perm[i], perm[j]);
            }
        }
        Self { breakpoints: bp, values }
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        Self { breakpoints: self.breakpoints.clone(), values: self.values.iter().map(|&x| f(x)).collect() }
    }
}

/// `W_Q`: the uniform `n`-block kernel with block values `Q(i, j)`.
pub fn embed_matrix<T: Scalar>(q: &SymmetricMatrix<T>) -> StepKernel<T> {
    StepKernel { breakpoints: uniform_breakpoints(q.n()), values: q.as_slice().to_vec() }
}

/// `G / ‖G‖₁` for a simple graph adjacency matrix, so that `‖W_Q‖₁ = 1`.
pub fn scaled_adjacency<T: Scalar>(g: &SymmetricMatrix<T>) -> Result<SymmetricMatrix<T>> {
    if g.as_slice().iter().any(|&x| x != T::zero() && x != T::one()) {
        return Err(Error::Degenerate("adjacency entries must be 0 or 1".into()));
    }
    let norm = g.l1_norm();
    if norm == T::zero() {
        return Err(Error::Degenerate("graph has no edges".into()));
    }
    Ok(g.scaled(T::one() / norm))
}

/// Options shared by the cut-norm routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutNormOptions {
    /// Largest block count searched exhaustively.
    pub exhaustive_limit: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for CutNormOptions {
    fn default() -> Self {
        Self { exhaustive_limit: 20, restarts: 16, seed: 0x5eed }
    }
}

/// A cut-norm value together with whether it is certified exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutBound<T> {
    pub value: T,
    pub exact: bool,
}

/// Exact cut norm `d_□(W, 0)` of a step kernel.
///
/// For a fixed row set `S` the best column set takes every column whose
/// partial sum has the chosen sign, so only the `2^m` row sets are
/// enumerated (Gray-code order, `O(m)` per step).
pub fn cut_norm_exact<T: Scalar>(w: &StepKernel<T>, limit: usize) -> Result<T> {
    let m = w.block_count();
    if m > limit {
        return Err(Error::TooManyBlocks { blocks: m, limit });
    }
    Ok(cut_norm_gray(&w.weighted_values(), m))
}

fn cut_norm_gray<T: Scalar>(a: &[T], m: usize) -> T {
    let mut col = vec![T::zero(); m];
    let mut in_s = vec![false; m];
    let mut best = T::zero();
    let total: u64 = 1u64 << m;
    for step in 1..total {
        let bit = step.trailing_zeros() as usize;
        let row = &a[bit * m..(bit + 1) * m];
        if in_s[bit] {
            for (c, &x) in col.iter_mut().zip(row) {
                *c -= x;
            }
        } else {
            for (c, &x) in col.iter_mut().zip(row) {
                *c += x;
            }
        }
        in_s[bit] = !in_s[bit];
        let (mut pos, mut neg) = (T::zero(), T::zero());
        for &c in &col {
            if c > T::zero() {
                pos += c;
            } else {
                neg -= c;
            }
        }
        best = best.max(pos).max(neg);
    }
    best
}

/// Lower bound on the cut norm by alternating best responses from random
/// starting row sets. Restart 0 starts from the full set.
pub fn cut_norm_heuristic<T: Scalar>(w: &StepKernel<T>, restarts: usize, seed: u64) -> T {
    let a = w.weighted_values();
    let m = w.block_count();
    let restarts = restarts.max(1);
    let vals: Vec<T> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            let start: Vec<bool> = if r == 0 { vec![true; m] } else { (0..m).map(|_| rng.gen_bool(0.5)).collect() };
            alternate_best_response(&a, m, start)
        })
        .collect();
    vals.into_iter().fold(T::zero(), T::max)
}

fn alternate_best_response<T: Scalar>(a: &[T], m: usize, mut rows: Vec<bool>) -> T {
    let mut best = T::zero();
    let mut sums = vec![T::zero(); m];
    for _ in 0..200 {
        // columns given rows
        sums.iter_mut().for_each(|s| *s = T::zero());
        for i in (0..m).filter(|&i| rows[i]) {
            for (s, &x) in sums.iter_mut().zip(&a[i * m..(i + 1) * m]) {
                *s += x;
            }
        }
        let pos: T = sums.iter().filter(|&&s| s > T::zero()).copied().sum();
        let neg: T = -sums.iter().filter(|&&s| s < T::zero()).copied().sum::<T>();
        let sign = if pos >= neg { T::one() } else { -T::one() };
        let cols: Vec<bool> = sums.iter().map(|&s| s * sign > T::zero()).collect();
        // rows given columns
        let mut value = T::zero();
        for i in 0..m {
            let r: T = (0..m).filter(|&j| cols[j]).map(|j| a[i * m + j]).sum();
            rows[i] = r * sign > T::zero();
            if rows[i] {
                value += r * sign;
            }
        }
        if value <= best * (T::one() + T::epsilon() * T::lit(8.0)) {
            best = best.max(value);
            break;
        }
        best = value;
    }
    best
}

/// Cut norm of `w`, exact when the block count permits.
pub fn cut_norm<T: Scalar>(w: &StepKernel<T>, opts: &CutNormOptions) -> CutBound<T> {
    match cut_norm_exact(w, opts.exhaustive_limit) {
        Ok(value) => CutBound { value, exact: true },
        Err(_) => CutBound { value: cut_norm_heuristic(w, opts.restarts, opts.seed), exact: false },
    }
}

/// Strong cut distance `d_□(W₁, W₂)` on the common refinement.
pub fn cut_distance<T: Scalar>(w1: &StepKernel<T>, w2: &StepKernel<T>, opts: &CutNormOptions) -> CutBound<T> {
    cut_norm(&w1.difference(w2), opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakCutOptions {
    pub cut: CutNormOptions,
    /// Block counts up to this value are permuted exhaustively.
    pub exhaustive_max_blocks: usize,
    /// Annealing proposals when the permutation search is not exhaustive.
    pub anneal_steps: usize,
    pub seed: u64,
}

impl Default for WeakCutOptions {
    fn default() -> Self {
        Self { cut: CutNormOptions::default(), exhaustive_max_blocks: 8, anneal_steps: 4000, seed: 0x5eed }
    }
}

/// Upper bound on the weak cut distance over block permutations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakCutResult<T> {
    pub value: T,
    /// Best permutation of the first kernel's blocks.
    pub permutation: Vec<usize>,
    /// True when every permutation was tried and every cut norm was exact.
    pub certified_exact: bool,
}

/// `min_σ d_□(W₁^σ, W₂)`: exhaustive for small block counts, annealed
/// otherwise.
pub fn weak_cut_distance<T: Scalar>(w1: &StepKernel<T>, w2: &StepKernel<T>, opts: &WeakCutOptions) -> WeakCutResult<T> {
    if w1.block_count() <= opts.exhaustive_max_blocks {
        weak_cut_distance_exhaustive(w1, w2, &opts.cut)
    } else {
        weak_cut_distance_annealed(w1, w2, opts)
    }
}

/// Heap's-algorithm sweep over all block permutations of `w1`.
pub fn weak_cut_distance_exhaustive<T: Scalar>(
    w1: &StepKernel<T>,
    w2: &StepKernel<T>,
    opts: &CutNormOptions,
) -> WeakCutResult<T> {
    let m = w1.block_count();
    let mut perm: Vec<usize> = (0..m).collect();
    let first = cut_distance(w1, w2, opts);
    let mut best = WeakCutResult { value: first.value, permutation: perm.clone(), certified_exact: first.exact };
    let mut all_exact = first.exact;
    let mut c = vec![0usize; m];
    let mut i = 1;
    while i < m && best.value > T::zero() {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let d = cut_distance(&w1.permuted(&perm), w2, opts);
            all_exact &= d.exact;
            if d.value < best.value {
                best.value = d.value;
                best.permutation = perm.clone();
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best.certified_exact = all_exact;
    best
}

/// Simulated annealing over block permutations with swap proposals. Starts
/// from the identity and from the degree-sorted alignment.
pub fn weak_cut_distance_annealed<T: Scalar>(
    w1: &StepKernel<T>,
    w2: &StepKernel<T>,
    opts: &WeakCutOptions,
) -> WeakCutResult<T> {
    let m = w1.block_count();
    let energy = |p: &[usize]| cut_distance(&w1.permuted(p), w2, &opts.cut).value.as_f64();
    let identity: Vec<usize> = (0..m).collect();
    let mut starts = vec![identity];
    if w1.block_count() == w2.block_count() {
        let d1 = degree_profile(w1);
        let d2 = degree_profile(w2);
        let order = |v: &[T]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap().then(a.cmp(&b)));
            idx
        };
        let (o1, o2) = (order(d1.values()), order(d2.values()));
        let mut aligned = vec![0; m];
        for k in 0..m {
            aligned[o2[k]] = o1[k];
        }
        starts.push(aligned);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best_perm = starts[0].clone();
    let mut best_e = energy(&best_perm);
    let steps_per_start = (opts.anneal_steps / starts.len()).max(1);
    for start in starts {
        let mut cur = start;
        let mut cur_e = energy(&cur);
        if cur_e < best_e {
            best_e = cur_e;
            best_perm = cur.clone();
        }
        let t0 = (cur_e * 0.1).max(1e-12);
        for step in 0..steps_per_start {
            if m < 2 || best_e == 0.0 {
                break;
            }
            let frac = step as f64 / steps_per_start as f64;
            let temp = t0 * (1e-4f64).powf(frac);
            let a = rng.gen_range(0..m);
            let mut b = rng.gen_range(0..m - 1);
            if b >= a {
                b += 1;
            }
            cur.swap(a, b);
            let e = energy(&cur);
            let u: f64 = rng.gen();
            if e <= cur_e || u < ((cur_e - e) / temp).exp() {
                cur_e = e;
                if e < best_e {
                    best_e = e;
                    best_perm = cur.clone();
                }
            } else {
                cur.swap(a, b);
            }
        }
    }
    let value = cut_distance(&w1.permuted(&best_perm), w2, &opts.cut).value;
    WeakCutResult { value, permutation: best_perm, certified_exact: false }
}

/// `‖W‖_r = (∫∫ |W|^r)^{1/r}`; `r = ∞` is the sup norm.
pub fn lp_norm<T: Scalar>(w: &StepKernel<T>, r: T) -> Result<T> {
    if !(r >= T::one()) {
        return Err(Error::Exponent(r.as_f64()));
    }
    if r.is_infinite() {
        return Ok(w.values().iter().fold(T::zero(), |acc, v| acc.max(v.abs())));
    }
    let widths = w.widths();
    let m = widths.len();
    let mut s = T::zero();
    for i in 0..m {
        for j in 0..m {
            let v = w.value(i, j).abs();
            if v > T::zero() {
                s += widths[i] * widths[j] * v.powf(r);
            }
        }
    }
    Ok(s.powf(T::one() / r))
}

/// `𝔯_W(x) = ∫ |W(x, y)| dy`, constant on the row blocks of `W`.
pub fn degree_profile<T: Scalar>(w: &StepKernel<T>) -> StepFunction<T> {
    let widths = w.widths();
    let m = widths.len();
    let values = (0..m).map(|i| (0..m).map(|j| w.value(i, j).abs() * widths[j]).sum()).collect();
    StepFunction { breakpoints: w.breakpoints().to_vec(), values }
}

/// Thresholds against which the regularity flags are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionThresholds {
    /// A norm is reported finite when it does not exceed this bound.
    pub norm_bound: f64,
    /// Bound on the degree statistics `E 𝔯`, `E 𝔯^{v-1}` and `‖𝔯‖_∞`.
    pub degree_bound: f64,
    /// Cutoff `K` of the tail statistic `E[𝔯^{v-1}; 𝔯^{v-1} > K]`.
    pub ui_cutoff: f64,
    /// The uniform-integrability proxy passes when the tail statistic is at
    /// most this value.
    pub ui_tolerance: f64,
}

impl Default for AssumptionThresholds {
    fn default() -> Self {
        Self { norm_bound: 10.0, degree_bound: 10.0, ui_cutoff: 10.0, ui_tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormPair {
    pub wn: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeStats {
    pub sup: f64,
    pub mean: f64,
    pub moment_v_minus_1: f64,
    pub tail_v_minus_1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeStatsPair {
    pub wn: DegreeStats,
    pub w: DegreeStats,
}

/// Pass/fail flags. Motif-specific conditions are `None` when the motif is
/// not of the required shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionFlags {
    /// `‖W_n‖_{qΔ}` and `‖W‖_{qΔ}` within the norm bound.
    pub q_delta_finite: bool,
    /// Both sup norms within the norm bound (the `q = ∞` case).
    pub bounded: bool,
    /// Edge motif: both `E 𝔯` within the degree bound.
    pub edge_degree_mean: Option<bool>,
    /// Star motif: tail statistic of `𝔯_{W_n}^{v-1}` small and
    /// `E 𝔯_W^{v-1}` bounded.
    pub star_uniform_integrability: Option<bool>,
    /// Tree motif: both `‖𝔯‖_∞` within the degree bound.
    pub tree_degree_sup: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub p: f64,
    pub q: f64,
    pub q_delta: f64,
    /// Exponent (`"1"`, `qΔ`, `"inf"`) to the pair of norms.
    pub q_delta_norms: BTreeMap<String, NormPair>,
    pub degree_profile: DegreeStatsPair,
    pub flags: AssumptionFlags,
    pub thresholds: AssumptionThresholds,
}

fn exponent_key(r: f64) -> String {
    if r.is_infinite() {
        "inf".to_string()
    } else {
        format!("{r}")
    }
}

fn degree_stats<T: Scalar>(w: &StepKernel<T>, v: usize, cutoff: f64) -> DegreeStats {
    let prof = degree_profile(w);
    let widths: Vec<f64> = prof.widths().iter().map(|x| x.as_f64()).collect();
    let vals: Vec<f64> = prof.values().iter().map(|x| x.as_f64()).collect();
    let k = (v - 1) as i32;
    let mut mean = 0.0;
    let mut moment = 0.0;
    let mut tail = 0.0;
    for (&wd, &r) in widths.iter().zip(&vals) {
        mean += wd * r;
        let rk = r.powi(k);
        moment += wd * rk;
        if rk > cutoff {
            tail += wd * rk;
        }
    }
    DegreeStats { sup: vals.iter().fold(0.0, |m, &x| m.max(x)), mean, moment_v_minus_1: moment, tail_v_minus_1: tail }
}

/// Norms and degree statistics of a coupling kernel `W_n` and its limit `W`,
/// flagged against `thresholds`. Uniform integrability is judged from a
/// finite-n tail statistic, not asymptotically.
pub fn check_assumptions<T: Scalar>(
    wn: &StepKernel<T>,
    w: &StepKernel<T>,
    motif: &Motif,
    p: f64,
    q: f64,
    thresholds: &AssumptionThresholds,
) -> Result<AssumptionReport> {
    if !(p >= 1.0) {
        return Err(Error::Exponent(p));
    }
    if !(q > 1.0) {
        return Err(Error::Config(format!("q must exceed 1, got {q}")));
    }
    let conj = 1.0 / p + 1.0 / q;
    if conj > 1.0 + 1e-12 {
        return Err(Error::HolderExponents(conj));
    }
    let delta = motif.max_degree().max(1) as f64;
    let q_delta = q * delta;
    let mut norms = BTreeMap::new();
    for r in [1.0, q_delta, f64::INFINITY] {
        let rt = T::lit(r);
        norms.insert(exponent_key(r), NormPair { wn: lp_norm(wn, rt)?.as_f64(), w: lp_norm(w, rt)?.as_f64() });
    }
    let v = motif.v();
    let stats = DegreeStatsPair {
        wn: degree_stats(wn, v, thresholds.ui_cutoff),
        w: degree_stats(w, v, thresholds.ui_cutoff),
    };
    let qd = norms[&exponent_key(q_delta)];
    let inf = norms["inf"];
    let nb = thresholds.norm_bound;
    let db = thresholds.degree_bound;
    let flags = AssumptionFlags {
        q_delta_finite: qd.wn <= nb && qd.w <= nb,
        bounded: inf.wn <= nb && inf.w <= nb,
        edge_degree_mean: motif.is_single_edge().then(|| stats.wn.mean <= db && stats.w.mean <= db),
        star_uniform_integrability: motif
            .is_star()
            .then(|| stats.wn.tail_v_minus_1 <= thresholds.ui_tolerance && stats.w.moment_v_minus_1 <= db),
        tree_degree_sup: motif.is_tree().then(|| stats.wn.sup <= db && stats.w.sup <= db),
    };
    Ok(AssumptionReport {
        p,
        q,
        q_delta,
        q_delta_norms: norms,
        degree_profile: stats,
        flags,
        thresholds: *thresholds,
    })
}

/// Coupling `Q(i, j) = B_ij (ij/n²)^{-α}` with `B_ij ~ Bernoulli(1/2)` iid
/// above the diagonal (indices one-based in the formula).
pub fn bernoulli_power_law(n: usize, alpha: f64, seed: u64) -> SymmetricMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nn = (n * n) as f64;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                let v = (((i + 1) * (j + 1)) as f64 / nn).powf(-alpha);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
    }
    SymmetricMatrix { n, entries }
}

/// Exact cell averages of `W(x, y) = ½ (xy)^{-α}` on `m` uniform blocks.
pub fn power_law_cell_average(m: usize, alpha: f64) -> StepKernel<f64> {
    let mf = m as f64;
    let e = 1.0 - alpha;
    let avg: Vec<f64> = (0..m).map(|i| mf * (((i + 1) as f64 / mf).powf(e) - (i as f64 / mf).powf(e)) / e).collect();
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            values[i * m + j] = 0.5 * avg[i] * avg[j];
        }
    }
    StepKernel { breakpoints: uniform_breakpoints(m), values }
}

/// `‖W_Q − W‖₁` for `W(x, y) = ½ (xy)^{-α}`. Cells where `Q(i, j) − W` keeps
/// one sign are integrated in closed form; cells crossed by the level set
/// `W = Q(i, j)` are split adaptively.
pub fn power_law_l1_distance(q: &SymmetricMatrix<f64>, alpha: f64) -> f64 {
    let n = q.n();
    let nf = n as f64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (x0, x1) = (i as f64 / nf, (i + 1) as f64 / nf);
                    let (y0, y1) = (j as f64 / nf, (j + 1) as f64 / nf);
                    power_law_cell_gap(alpha, q.get(i, j), x0, x1, y0, y1, 4)
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// `∫∫_{[x0,x1]×[y0,y1]} |c − ½ (xy)^{-α}|`.
fn power_law_cell_gap(alpha: f64, c: f64, x0: f64, x1: f64, y0: f64, y1: f64, depth: u32) -> f64 {
    let e = 1.0 - alpha;
    let w = |x: f64, y: f64| 0.5 * (x * y).powf(-alpha);
    let area = (x1 - x0) * (y1 - y0);
    let mass = 0.5 * (x1.powf(e) - x0.powf(e)) * (y1.powf(e) - y0.powf(e)) / (e * e);
    let w_max = if x0 == 0.0 || y0 == 0.0 { f64::INFINITY } else { w(x0, y0) };
    let w_min = w(x1, y1);
    if w_max <= c {
        return c * area - mass;
    }
    if w_min >= c {
        return mass - c * area;
    }
    if depth == 0 {
        let mid = w(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        return mass - c * area + 2.0 * (c - mid).max(0.0) * area;
    }
    const SPLIT: usize = 4;
    let mut s = 0.0;
    for a in 0..SPLIT {
        let xa = x0 + (x1 - x0) * a as f64 / SPLIT as f64;
        let xb = x0 + (x1 - x0) * (a + 1) as f64 / SPLIT as f64;
        for b in 0..SPLIT {
            let ya = y0 + (y1 - y0) * b as f64 / SPLIT as f64;
            let yb = y0 + (y1 - y0) * (b + 1) as f64 / SPLIT as f64;
            s += power_law_cell_gap(alpha, c, xa, xb, ya, yb, depth - 1);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn anti_diag() -> StepKernel<f64> {
        embed_matrix(&SymmetricMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap())
    }

    fn random_kernel(m: usize, seed: u64) -> StepKernel<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let x: f64 = rng.gen_range(-1.0..1.0);
                v[i * m + j] = x;
                v[j * m + i] = x;
            }
        }
        StepKernel::uniform(m, v).unwrap()
    }

    /// Brute force over all (S, T) pairs.
    fn cut_norm_pairs(w: &StepKernel<f64>) -> f64 {
        let a = w.weighted_values();
        let m = w.block_count();
        let mut best: f64 = 0.0;
        for s in 0u32..(1 << m) {
            for t in 0u32..(1 << m) {
                let mut sum = 0.0;
                for i in 0..m {
                    if s >> i & 1 == 1 {
                        for j in 0..m {
                            if t >> j & 1 == 1 {
                                sum += a[i * m + j];
                            }
                        }
                    }
                }
                best = best.max(sum.abs());
            }
        }
        best
    }

    #[test]
    fn embed_examples() {
        let z = embed_matrix(&SymmetricMatrix::<f64>::zeros(1));
        assert_eq!(z.block_count(), 1);
        assert_eq!(z.value(0, 0), 0.0);
        let k = anti_diag();
        assert_eq!(k.value(0, 1), 1.0);
        assert_eq!(k.value(0, 0), 0.0);
        assert_eq!(k.eval(0.1, 0.9), 1.0);
        for n in [2usize, 5, 9] {
            let w = embed_matrix(&SymmetricMatrix::<f64>::complete(n));
            let expect = (n - 1) as f64 / n as f64;
            assert!((lp_norm(&w, 1.0).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let err = SymmetricMatrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err();
        assert_eq!(err, Error::NotSymmetric { row: 0, col: 1 });
        assert!(StepKernel::uniform(2, vec![0.0, 1.0, 0.5, 0.0]).is_err());
    }

    #[test]
    fn diagonal_is_discarded() {
        let q = SymmetricMatrix::from_rows(vec![vec![3.0, 1.0], vec![1.0, 4.0]]).unwrap();
        assert_eq!(q.get(0, 0), 0.0);
        assert_eq!(q.get(1, 1), 0.0);
    }

    #[test]
    fn scaled_adjacency_examples() {
        let k3 = scaled_adjacency(&SymmetricMatrix::<f64>::complete(3)).unwrap();
        assert!((k3.get(0, 1) - 9.0 / 6.0).abs() < 1e-14);
        assert!((embed_matrix(&k3).values().iter().sum::<f64>() / 9.0 - 1.0).abs() < 1e-14);
        let e = scaled_adjacency(&SymmetricMatrix::<f64>::complete(2)).unwrap();
        assert!((e.get(0, 1) - 2.0).abs() < 1e-14);
        assert!(matches!(scaled_adjacency(&SymmetricMatrix::<f64>::zeros(4)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn cut_norm_examples() {
        assert_eq!(cut_norm_exact(&StepKernel::<f64>::zero(), 20).unwrap(), 0.0);
        assert!((cut_norm_exact(&anti_diag(), 20).unwrap() - 0.5).abs() < 1e-15);
        assert!((cut_norm_pairs(&anti_diag()) - 0.5).abs() < 1e-15);
        let c = StepKernel::<f64>::uniform(3, vec![0.7; 9]).unwrap();
        assert!((cut_norm_exact(&c, 20).unwrap() - 0.7).abs() < 1e-14);
        assert!((cut_norm_heuristic(&c, 1, 1) - 0.7).abs() < 1e-14);
        assert_eq!(cut_norm_heuristic(&StepKernel::<f64>::zero(), 4, 1), 0.0);
    }

    #[test]
    fn exhaustive_limit_enforced() {
        let w = random_kernel(6, 3);
        assert_eq!(cut_norm_exact(&w, 5), Err(Error::TooManyBlocks { blocks: 6, limit: 5 }));
        assert!(!cut_norm(&w, &CutNormOptions { exhaustive_limit: 5, ..Default::default() }).exact);
    }

    #[test]
    fn gray_code_matches_pair_enumeration() {
        for seed in 0..20 {
            let w = random_kernel(1 + (seed as usize % 7), seed);
            let a = cut_norm_exact(&w, 20).unwrap();
            let b = cut_norm_pairs(&w);
            assert!((a - b).abs() < 1e-12, "seed {seed}: {a} vs {b}");
        }
    }

    #[test]
    fn heuristic_never_exceeds_exact() {
        for seed in 0..30 {
            let m = 2 + seed as usize % 13;
            let w = random_kernel(m, 100 + seed);
            let exact = cut_norm_exact(&w, 20).unwrap();
            let h = cut_norm_heuristic(&w, 8, seed);
            assert!(h <= exact + 1e-12, "m={m}: {h} > {exact}");
            assert!(h >= 0.5 * exact);
        }
    }

    #[test]
    fn heuristic_is_reproducible() {
        let w = random_kernel(40, 9);
        let a = cut_norm_heuristic(&w, 6, 77);
        let b = cut_norm_heuristic(&w, 6, 77);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn non_uniform_breakpoints_refine() {
        let w1 = StepKernel::new(vec![0.0, 0.25, 1.0], vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        let w2 = StepKernel::uniform(2, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        let d = w1.difference(&w2);
        assert_eq!(d.block_count(), 3);
        // blocks [0,.25), [.25,.5), [.5,1): difference on the middle block only
        assert_eq!(d.value(1, 1), 2.0 - 1.0);
        let cd = cut_distance(&w1, &w2, &CutNormOptions::default());
        assert!(cd.exact);
        assert!((cd.value - cut_norm_pairs(&d)).abs() < 1e-14);
    }

    #[test]
    fn weak_cut_recovers_permutation() {
        let w = random_kernel(6, 5);
        let p = w.permuted(&[3, 0, 5, 1, 4, 2]);
        let r = weak_cut_distance(&p, &w, &WeakCutOptions::default());
        assert!(r.value < 1e-14, "{}", r.value);
        assert!(r.certified_exact);
        let d = cut_distance(&p, &w, &CutNormOptions::default()).value;
        assert!(r.value <= d + 1e-15);
    }

    #[test]
    fn annealing_matches_exhaustive_on_six_blocks() {
        for seed in 0..3 {
            let w1 = random_kernel(6, 200 + seed);
            let w2 = random_kernel(6, 300 + seed);
            let ex = weak_cut_distance_exhaustive(&w1, &w2, &CutNormOptions::default());
            let an = weak_cut_distance_annealed(
                &w1,
                &w2,
                &WeakCutOptions { anneal_steps: 6000, seed, ..Default::default() },
            );
            assert!(!an.certified_exact);
            assert!((an.value - ex.value).abs() < 1e-12, "seed {seed}: {} vs {}", an.value, ex.value);
        }
    }

    #[test]
    fn lp_norm_examples() {
        let c = StepKernel::constant(-0.3_f64);
        for r in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert!((lp_norm(&c, r).unwrap() - 0.3).abs() < 1e-14);
        }
        assert!((lp_norm(&anti_diag(), 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(lp_norm(&c, 0.5), Err(Error::Exponent(0.5)));
    }

    #[test]
    fn degree_profile_examples() {
        let one = degree_profile(&StepKernel::constant(1.0_f64));
        assert_eq!(one.values(), &[1.0]);
        let r = degree_profile(&anti_diag());
        assert_eq!(r.values(), &[0.5, 0.5]);
        let w = random_kernel(7, 11);
        let prof = degree_profile(&w);
        assert!((prof.integral() - lp_norm(&w, 1.0).unwrap()).abs() < 1e-12);
        assert!(prof.values().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn f32_kernels_work() {
        let w = StepKernel::<f32>::uniform(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((cut_norm_exact(&w, 20).unwrap() - 0.5).abs() < 1e-6);
        assert!((lp_norm(&w, 2.0).unwrap() - 0.5f32.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn assumptions_complete_graph_all_pass() {
        for n in [4usize, 10] {
            let wn = embed_matrix(&scaled_adjacency(&SymmetricMatrix::<f64>::complete(n)).unwrap());
            let w = StepKernel::constant(1.0);
            for motif in [Motif::edge(), Motif::star(3).unwrap(), Motif::path(4).unwrap()] {
                let rep = check_assumptions(&wn, &w, &motif, f64::INFINITY, 2.0, &Default::default()).unwrap();
                assert!(rep.flags.q_delta_finite && rep.flags.bounded);
                assert_eq!(rep.flags.tree_degree_sup, Some(true));
                assert_eq!(rep.flags.star_uniform_integrability.unwrap_or(true), true);
                assert_eq!(rep.flags.edge_degree_mean.unwrap_or(true), true);
            }
        }
    }

    #[test]
    fn assumptions_reject_inconsistent_exponents() {
        let w = StepKernel::constant(1.0);
        assert!(matches!(
            check_assumptions(&w, &w, &Motif::edge(), 1.5, 2.0, &Default::default()),
            Err(Error::HolderExponents(_))
        ));
        assert!(check_assumptions(&w, &w, &Motif::edge(), 2.0, 1.0, &Default::default()).is_err());
    }

    #[test]
    fn power_law_l1_limits() {
        let e: f64 = 0.7;
        let zero = power_law_l1_distance(&SymmetricMatrix::zeros(50), 0.3);
        assert!((zero - 0.5 / (e * e)).abs() < 1e-12);
        let mut big = SymmetricMatrix::complete(40);
        for x in big.entries.iter_mut() {
            *x = 1e4;
        }
        let d = power_law_l1_distance(&big, 0.3);
        assert!((d - (1e4 - 0.5 / (e * e))).abs() < 1e-3, "{d}");
        let q = bernoulli_power_law(2000, 0.3, 7);
        let d = power_law_l1_distance(&q, 0.3);
        assert!((d - 1.0 / (2.0 * 0.49)).abs() < 0.05 * 1.0204, "{d}");
    }

    #[test]
    fn power_law_flags() {
        // qΔ = 2 < 1/α: finite; sup norm diverges with resolution.
        let w = power_law_cell_average(200, 0.3);
        let wn = embed_matrix(&bernoulli_power_law(200, 0.3, 1));
        let rep = check_assumptions(&wn, &w, &Motif::edge(), 2.0, 2.0, &Default::default()).unwrap();
        assert!(rep.flags.q_delta_finite);
        assert!(!rep.flags.bounded);
        assert!(rep.q_delta_norms["inf"].w > 10.0);
    }

    #[test]
    fn flags_consistent_with_statistics() {
        let w = random_kernel(5, 1).map_values(|x| 30.0 * x);
        let rep = check_assumptions(&w, &w, &Motif::star(2).unwrap(), 2.0, 2.0, &Default::default()).unwrap();
        let t = rep.thresholds;
        let qd = rep.q_delta_norms["4"];
        assert_eq!(rep.flags.q_delta_finite, qd.wn <= t.norm_bound && qd.w <= t.norm_bound);
        assert_eq!(
            rep.flags.tree_degree_sup,
            Some(rep.degree_profile.wn.sup <= t.degree_bound && rep.degree_profile.w.sup <= t.degree_bound)
        );
        assert!(rep.q_delta_norms.values().all(|p| p.wn >= 0.0 && p.w >= 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn cut_distance_is_pseudometric(s1 in 0u64..10_000, s2 in 0u64..10_000, s3 in 0u64..10_000, m in 1usize..7) {
            let (a, b, c) = (random_kernel(m, s1), random_kernel(m + 1, s2), random_kernel(m, s3));
            let o = CutNormOptions::default();
            let ab = cut_distance(&a, &b, &o).value;
            let ba = cut_distance(&b, &a, &o).value;
            let ac = cut_distance(&a, &c, &o).value;
            let bc = cut_distance(&b, &c, &o).value;
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!(cut_distance(&a, &a, &o).value < 1e-15);
            prop_assert!((cut_distance(&a, &StepKernel::zero(), &o).value - cut_norm_exact(&a, 20).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn lp_norm_nondecreasing(seed in 0u64..10_000, m in 1usize..8) {
            let w = random_kernel(m, seed);
            let rs = [1.0, 1.3, 2.0, 3.0, 8.0, f64::INFINITY];
            let norms: Vec<f64> = rs.iter().map(|&r| lp_norm(&w, r).unwrap()).collect();
            for k in 1..norms.len() {
                prop_assert!(norms[k] >= norms[k - 1] - 1e-12);
            }
        }

        #[test]
        fn degree_profile_integrates_to_l1(seed in 0u64..10_000, m in 1usize..10) {
            let w = random_kernel(m, seed);
            prop_assert!((degree_profile(&w).integral() - lp_norm(&w, 1.0).unwrap()).abs() < 1e-12);
        }
    }
}
