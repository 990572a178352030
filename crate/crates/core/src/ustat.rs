//! Inhomogeneous U- and V-statistics
//!
//! `V_n = n^{-v} Σ_{[n]^v} φ(x_{i_1}, …, x_{i_v}) Π_{(a,b) ∈ E(H)} Q(i_a, i_b)`
//! and `U_n` is the same sum over tuples of distinct indices. Direct
//! enumeration is the reference semantics; the forest message-passing path
//! is an accelerator for separable kernels and must agree with it.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{embed_matrix, lp_norm, SymmetricMatrix};
pub use crate::motif::Motif;
use crate::scalar::Scalar;
use crate::tilt::FiniteBaseMeasure;

/// Tuples enumerated exhaustively when validating an envelope.
pub const ENVELOPE_EXHAUSTIVE_LIMIT: usize = 1 << 20;

type Callback<T> = Arc<dyn Fn(&[usize]) -> T + Send + Sync>;

/// How `φ` is evaluated on a tuple of atom indices.
#[derive(Clone)]
pub enum PhiForm<T> {
    /// `Π x_a` (multilinear forms).
    Product,
    /// `1{x_1 = … = x_v}` (monochromatic copies).
    Monochrome,
    /// Dense table over atom-index tuples in lexicographic order.
    Table(Vec<T>),
    /// Arbitrary function of the atom-index tuple.
    Callback(Callback<T>),
}

impl<T: fmt::Debug> fmt::Debug for PhiForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiForm::Product => write!(f, "Product"),
            PhiForm::Monochrome => write!(f, "Monochrome"),
            PhiForm::Table(t) => write!(f, "Table({} entries)", t.len()),
            PhiForm::Callback(_) => write!(f, "Callback"),
        }
    }
}

/// The kernel `φ` bound to the atoms of a finite support, with its envelope
/// `ψ` (one value per atom) and tail exponent `p`.
#[derive(Debug, Clone)]
pub struct PhiKernel<T> {
    arity: usize,
    form: PhiForm<T>,
    atoms: Vec<T>,
    envelope: Vec<T>,
    tail_exponent: f64,
}

impl<T: Scalar> PhiKernel<T> {
    /// `φ = Π x_a` with envelope `ψ(x) = |x|`.
    pub fn product(arity: usize, mu: &FiniteBaseMeasure<T>) -> Self {
        Self {
            arity,
            form: PhiForm::Product,
            atoms: mu.atoms().to_vec(),
            envelope: mu.atoms().iter().map(|a| a.abs()).collect(),
            tail_exponent: f64::INFINITY,
        }
    }

    /// `φ = 1{all equal}` with envelope `ψ ≡ 1`.
    pub fn monochrome(arity: usize, mu: &FiniteBaseMeasure<T>) -> Self {
        Self {
            arity,
            form: PhiForm::Monochrome,
            atoms: mu.atoms().to_vec(),
            envelope: vec![T::one(); mu.len()],
            tail_exponent: f64::INFINITY,
        }
    }

    /// Dense table of `k^v` values. The envelope defaults to the constant
    /// `(max |φ|)^{1/v}`.
    pub fn table(arity: usize, mu: &FiniteBaseMeasure<T>, values: Vec<T>, envelope: Option<Vec<T>>) -> Result<Self> {
        let k = mu.len();
        let size = checked_pow(k, arity).ok_or(Error::TableTooLarge { size: usize::MAX, limit: ENVELOPE_EXHAUSTIVE_LIMIT })?;
        if values.len() != size {
            return Err(Error::Dimension(format!("table needs {size} entries, got {}", values.len())));
        }
        let envelope = envelope.unwrap_or_else(|| {
            let max = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            vec![max.powf(T::one() / T::from_usize_lossy(arity)); k]
        });
        let phi = Self { arity, form: PhiForm::Table(values), atoms: mu.atoms().to_vec(), envelope, tail_exponent: f64::INFINITY };
        phi.check_envelope(0)?;
        Ok(phi)
    }

    /// Arbitrary `φ` on atom indices; the envelope is mandatory.
    pub fn callback(
        arity: usize,
        mu: &FiniteBaseMeasure<T>,
        f: impl Fn(&[usize]) -> T + Send + Sync + 'static,
        envelope: Vec<T>,
    ) -> Result<Self> {
        let phi = Self {
            arity,
            form: PhiForm::Callback(Arc::new(f)),
            atoms: mu.atoms().to_vec(),
            envelope,
            tail_exponent: f64::INFINITY,
        };
        phi.check_envelope(0)?;
        Ok(phi)
    }

    /// Overrides the tail exponent `p` used in Hölder-type bounds.
    pub fn with_tail_exponent(mut self, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::Exponent(p));
        }
        self.tail_exponent = p;
        Ok(self)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn form(&self) -> &PhiForm<T> {
        &self.form
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn envelope(&self) -> &[T] {
        &self.envelope
    }

    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    pub fn name(&self) -> &'static str {
        match self.form {
            PhiForm::Product => "product",
            PhiForm::Monochrome => "monochrome",
            PhiForm::Table(_) => "table",
            PhiForm::Callback(_) => "callback",
        }
    }

    /// `φ` at a tuple of atom indices.
    #[inline]
    pub fn eval(&self, idx: &[usize]) -> T {
        match &self.form {
            PhiForm::Product => idx.iter().map(|&k| self.atoms[k]).fold(T::one(), |a, b| a * b),
            PhiForm::Monochrome => {
                if idx.windows(2).all(|w| w[0] == w[1]) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            PhiForm::Table(t) => {
                let k = self.atoms.len();
                t[idx.iter().fold(0usize, |acc, &i| acc * k + i)]
            }
            PhiForm::Callback(f) => f(idx),
        }
    }

    /// `φ(b) = Σ_r Π_a g_r(b_a)` for the separable builtins.
    pub fn separable_factors(&self) -> Option<Vec<Vec<T>>> {
        match self.form {
            PhiForm::Product => Some(vec![self.atoms.clone()]),
            PhiForm::Monochrome => {
                let k = self.atoms.len();
                Some((0..k).map(|r| (0..k).map(|c| if c == r { T::one() } else { T::zero() }).collect()).collect())
            }
            _ => None,
        }
    }

    /// Dense table of `φ` over all atom tuples, if within `limit` entries.
    pub fn to_table(&self, limit: usize) -> Result<Vec<T>> {
        let k = self.atoms.len();
        let size = checked_pow(k, self.arity).filter(|&s| s <= limit).ok_or(Error::TableTooLarge {
            size: checked_pow(k, self.arity).unwrap_or(usize::MAX),
            limit,
        })?;
        let mut idx = vec![0usize; self.arity];
        let mut out = Vec::with_capacity(size);
        for _ in 0..size {
            out.push(self.eval(&idx));
            advance(&mut idx, k);
        }
        Ok(out)
    }

    /// Checks `|φ| ≤ Π ψ` exhaustively on small supports, otherwise on
    /// `10⁴` random tuples drawn with `seed`.
    pub fn check_envelope(&self, seed: u64) -> Result<()> {
        let k = self.atoms.len();
        if self.envelope.len() != k {
            return Err(Error::Dimension(format!("envelope has {} entries for {k} atoms", self.envelope.len())));
        }
        let check = |idx: &[usize]| -> Result<()> {
            let phi = self.eval(idx).abs();
            let bound = idx.iter().map(|&i| self.envelope[i]).fold(T::one(), |a, b| a * b);
            if phi > bound * (T::one() + T::lit(1e-12)) + T::lit(1e-300) {
                return Err(Error::Config(format!("envelope violated at atoms {idx:?}: |φ| = {phi} > {bound}")));
            }
            Ok(())
        };
        match checked_pow(k, self.arity).filter(|&s| s <= ENVELOPE_EXHAUSTIVE_LIMIT) {
            Some(size) => {
                let mut idx = vec![0usize; self.arity];
                for _ in 0..size {
                    check(&idx)?;
                    advance(&mut idx, k);
                }
            }
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut idx = vec![0usize; self.arity];
                for _ in 0..10_000 {
                    idx.iter_mut().for_each(|i| *i = rng.gen_range(0..k));
                    check(&idx)?;
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Odometer increment of a base-`k` digit vector (last digit fastest).
pub(crate) fn advance(idx: &mut [usize], k: usize) {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < k {
            return;
        }
        *d = 0;
    }
}

/// Atom indices `(X_1, …, X_n)` into a support of size `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DataVector {
    indices: Vec<usize>,
}

impl DataVector {
    pub fn new(indices: Vec<usize>, support_size: usize) -> Result<Self> {
        if let Some(i) = indices.iter().position(|&k| k >= support_size) {
            return Err(Error::Dimension(format!(
                "data entry {i} = {} out of range for {support_size} atoms",
                indices[i]
            )));
        }
        Ok(Self { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> usize {
        self.indices[i]
    }

    pub fn set(&mut self, i: usize, atom: usize) {
        self.indices[i] = atom;
    }

    /// `x ∘ σ`: entry `i` of the result is entry `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self { indices: perm.iter().map(|&p| self.indices[p]).collect() }
    }
}

fn check_dims<T: Scalar>(motif: &Motif, q: &SymmetricMatrix<T>, x: &DataVector, phi: &PhiKernel<T>) -> Result<()> {
    if q.n() != x.len() {
        return Err(Error::Dimension(format!("Q is {0}×{0} but data has {1} entries", q.n(), x.len())));
    }
    if phi.arity() != motif.v() {
        return Err(Error::Dimension(format!("φ has arity {} but motif has {} vertices", phi.arity(), motif.v())));
    }
    if let Some(&bad) = x.indices().iter().find(|&&k| k >= phi.support_size()) {
        return Err(Error::Dimension(format!("data atom {bad} outside φ's support")));
    }
    Ok(())
}

/// For each vertex `a`, the earlier vertices joined to it by an edge.
fn back_edges(motif: &Motif) -> Vec<Vec<usize>> {
    let mut back = vec![Vec::new(); motif.v()];
    for &(a, b) in motif.edges() {
        back[b.max(a)].push(a.min(b));
    }
    back
}

/// Which indices a position may take during enumeration.
#[derive(Clone, Copy)]
enum Slot {
    Any,
    Fixed(usize),
    Not(usize),
}

struct Enumerator<'a, T> {
    back: Vec<Vec<usize>>,
    q: &'a SymmetricMatrix<T>,
    distinct: bool,
    slots: Vec<Slot>,
}

impl<'a, T: Scalar> Enumerator<'a, T> {
    /// Calls `leaf(tuple, weight)` for every admissible tuple with nonzero
    /// edge product.
    fn run(&self, pos: usize, tuple: &mut Vec<usize>, weight: T, leaf: &mut impl FnMut(&[usize], T)) {
        if pos == self.slots.len() {
            leaf(tuple, weight);
            return;
        }
        let n = self.q.n();
        let mut visit = |i: usize, tuple: &mut Vec<usize>| {
            if self.distinct && tuple.contains(&i) {
                return;
            }
            let mut w = weight;
            for &b in &self.back[pos] {
                w *= self.q.get(tuple[b], i);
            }
            if w == T::zero() {
                return;
            }
            tuple.push(i);
            self.run(pos + 1, tuple, w, leaf);
            tuple.pop();
        };
        match self.slots[pos] {
            Slot::Fixed(i) => visit(i, tuple),
            Slot::Any => (0..n).for_each(|i| visit(i, tuple)),
            Slot::Not(s) => (0..n).filter(|&i| i != s).for_each(|i| visit(i, tuple)),
        }
    }
}

fn tuple_sum<T: Scalar>(motif: &Motif, q: &SymmetricMatrix<T>, x: &DataVector, phi: &PhiKernel<T>, distinct: bool) -> T {
    let v = motif.v();
    let back = back_edges(motif);
    let partials: Vec<T> = (0..q.n())
        .into_par_iter()
        .map(|i0| {
            let mut slots = vec![Slot::Any; v];
            slots[0] = Slot::Fixed(i0);
            let e = Enumerator { back: back.clone(), q, distinct, slots };
            let mut acc = T::zero();
            let mut atoms = vec![0usize; v];
            e.run(0, &mut Vec::with_capacity(v), T::one(), &mut |t, w| {
                for (a, &i) in atoms.iter_mut().zip(t) {
                    *a = x.get(i);
                }
                acc += w * phi.eval(&atoms);
            });
            acc
        })
        .collect();
    partials.into_iter().sum()
}

fn scale<T: Scalar>(n: usize, v: usize) -> T {
    T::from_usize_lossy(n).powi(-(v as i32))
}

/// `V_n` by direct `O(n^v)` enumeration.
pub fn v_statistic_direct<T: Scalar>(motif: &Motif, q: &SymmetricMatrix<T>, x: &DataVector, phi: &PhiKernel<T>) -> Result<T> {
    check_dims(motif, q, x, phi)?;
    Ok(tuple_sum(motif, q, x, phi, false) * scale(q.n(), motif.v()))
}

/// `V_n` by message passing on a forest motif with a separable `φ`;
/// `None` when either condition fails.
pub fn v_statistic_forest<T: Scalar>(
    motif: &Motif,
    q: &SymmetricMatrix<T>,
    x: &DataVector,
    phi: &PhiKernel<T>,
) -> Result<Option<T>> {
    check_dims(motif, q, x, phi)?;
    let factors = match (motif.is_forest(), phi.separable_factors()) {
        (true, Some(f)) => f,
        _ => return Ok(None),
    };
    let n = q.n();
    let adj = motif.neighbours();
    let mut total = T::zero();
    for g in &factors {
        let site: Vec<T> = x.indices().iter().map(|&k| g[k]).collect();
        let mut seen = vec![false; motif.v()];
        let mut prod = T::one();
        for root in 0..motif.v() {
            if seen[root] {
                continue;
            }
            let msg = forest_message(root, usize::MAX, &adj, &mut seen, &site, q, n);
            prod *= msg.iter().copied().sum::<T>();
        }
        total += prod;
    }
    Ok(Some(total * scale(n, motif.v())))
}

/// `m_a(i) = g(x_i) Π_{children c} Σ_j Q(i, j) m_c(j)`.
fn forest_message<T: Scalar>(
    a: usize,
    parent: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    site: &[T],
    q: &SymmetricMatrix<T>,
    n: usize,
) -> Vec<T> {
    seen[a] = true;
    let mut msg = site.to_vec();
    for &c in &adj[a] {
        if c == parent {
            continue;
        }
        let child = forest_message(c, a, adj, seen, site, q, n);
        for (i, m) in msg.iter_mut().enumerate() {
            let row = q.row(i);
            let s: T = row.iter().zip(&child).map(|(&qij, &cj)| qij * cj).sum();
            *m *= s;
        }
    }
    msg
}

/// `V_n`: forest fast path when available, otherwise direct enumeration.
pub fn v_statistic<T: Scalar>(motif: &Motif, q: &SymmetricMatrix<T>, x: &DataVector, phi: &PhiKernel<T>) -> Result<T> {
    match v_statistic_forest(motif, q, x, phi)? {
        Some(v) => Ok(v),
        None => v_statistic_direct(motif, q, x, phi),
    }
}

/// `U_n`, summing over distinct index tuples only.
pub fn u_statistic<T: Scalar>(motif: &Motif, q: &SymmetricMatrix<T>, x: &DataVector, phi: &PhiKernel<T>) -> Result<T> {
    check_dims(motif, q, x, phi)?;
    if q.n() < motif.v() {
        return Err(Error::Dimension(format!("n = {} is smaller than v = {}", q.n(), motif.v())));
    }
    Ok(tuple_sum(motif, q, x, phi, true) * scale(q.n(), motif.v()))
}

/// `|U_n − V_n|`.
pub fn uv_gap<T: Scalar>(motif: &Motif, q: &SymmetricMatrix<T>, x: &DataVector, phi: &PhiKernel<T>) -> Result<T> {
    Ok((u_statistic(motif, q, x, phi)? - v_statistic_direct(motif, q, x, phi)?).abs())
}

fn local_sum<T: Scalar>(
    motif: &Motif,
    q: &SymmetricMatrix<T>,
    x: &DataVector,
    phi: &PhiKernel<T>,
    site: usize,
    distinct: bool,
) -> Result<Vec<T>> {
    check_dims(motif, q, x, phi)?;
    if site >= q.n() {
        return Err(Error::Dimension(format!("site {site} out of range for n = {}", q.n())));
    }
    let v = motif.v();
    let k = phi.support_size();
    let back = back_edges(motif);
    let mut out = vec![T::zero(); k];
    let mut atoms = vec![0usize; v];
    // partition by the first position holding `site`
    for a in 0..v {
        let slots: Vec<Slot> = (0..v)
            .map(|b| match b.cmp(&a) {
                std::cmp::Ordering::Less => Slot::Not(site),
                std::cmp::Ordering::Equal => Slot::Fixed(site),
                std::cmp::Ordering::Greater => {
                    if distinct {
                        Slot::Not(site)
                    } else {
                        Slot::Any
                    }
                }
            })
            .collect();
        let e = Enumerator { back: back.clone(), q, distinct, slots };
        e.run(0, &mut Vec::with_capacity(v), T::one(), &mut |t, w| {
            for c in 0..k {
                for (slot, &i) in atoms.iter_mut().zip(t) {
                    *slot = if i == site { c } else { x.get(i) };
                }
                out[c] += w * phi.eval(&atoms);
            }
        });
    }
    let s = T::from_usize_lossy(q.n()) * scale(q.n(), v);
    out.iter_mut().for_each(|o| *o *= s);
    Ok(out)
}

/// Local field of `V_n` at `site`: entry `c` is `n · n^{-v}` times the sum
/// over all tuples containing `site`, with `x_site := c`. For atoms `c, c'`,
/// `V_n(x_site := c) − V_n(x_site := c') = (h(c) − h(c')) / n` exactly.
pub fn local_field<T: Scalar>(
    motif: &Motif,
    q: &SymmetricMatrix<T>,
    x: &DataVector,
    phi: &PhiKernel<T>,
    site: usize,
) -> Result<Vec<T>> {
    local_sum(motif, q, x, phi, site, false)
}

/// Local field of `U_n` at `site` (distinct tuples), the quantity driving
/// the single-site conditionals of the Gibbs measure.
pub fn local_field_u<T: Scalar>(
    motif: &Motif,
    q: &SymmetricMatrix<T>,
    x: &DataVector,
    phi: &PhiKernel<T>,
    site: usize,
) -> Result<Vec<T>> {
    local_sum(motif, q, x, phi, site, true)
}

/// Hölder bound `‖W_Q‖_{qΔ}^{|E(H)|} (n⁻¹ Σ ψ(x_i)^p)^{v/p}` on `|V_n|`
/// (with `p = φ`'s tail exponent; `p = ∞` uses `max ψ(x_i)^v`).
pub fn holder_bound<T: Scalar>(
    motif: &Motif,
    q: &SymmetricMatrix<T>,
    x: &DataVector,
    phi: &PhiKernel<T>,
    q_exp: f64,
) -> Result<T> {
    check_dims(motif, q, x, phi)?;
    let p = phi.tail_exponent();
    if !(q_exp > 1.0) || 1.0 / p + 1.0 / q_exp > 1.0 + 1e-12 {
        return Err(Error::HolderExponents(1.0 / p + 1.0 / q_exp));
    }
    let r = q_exp * motif.max_degree().max(1) as f64;
    let wnorm = lp_norm(&embed_matrix(q), T::lit(r))?;
    let psi: Vec<T> = x.indices().iter().map(|&k| phi.envelope()[k]).collect();
    let v = motif.v();
    let data_term = if p.is_infinite() {
        psi.iter().fold(T::zero(), |m, &s| m.max(s)).powi(v as i32)
    } else {
        let pt = T::lit(p);
        let mean = psi.iter().map(|s| s.powf(pt)).sum::<T>() / T::from_usize_lossy(x.len());
        mean.powf(T::from_usize_lossy(v) / pt)
    };
    Ok(wnorm.powi(motif.edge_count() as i32) * data_term)
}
