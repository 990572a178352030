//! Exponential tilts of a finite-support base measure: log-MGF `α`, mean
//! map `α'`, its inverse `β`, the rate integrand `γ = D(μ_θ ‖ μ)` and
//! Kullback–Leibler divergences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability measure on finitely many distinct real atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteBaseMeasure<T> {
    atoms: Vec<T>,
    probs: Vec<T>,
}

fn sum_tolerance<T: Scalar>(k: usize) -> T {
    T::lit(1e-12).max(T::epsilon() * T::from_usize_lossy(16 * k.max(1)))
}

impl<T: Scalar> FiniteBaseMeasure<T> {
    /// Non-degenerate base measure: at least two distinct atoms, every
    /// probability strictly positive, total mass 1 within `1e-12`.
    pub fn new(atoms: Vec<T>, probs: Vec<T>) -> Result<Self> {
        let m = Self::with_null_atoms(atoms, probs)?;
        if m.atoms.len() < 2 {
            return Err(Error::Measure("a non-degenerate measure needs at least two atoms".into()));
        }
        if let Some(k) = m.probs.iter().position(|&p| !(p > T::zero())) {
            return Err(Error::Measure(format!("atom {k} has zero probability")));
        }
        Ok(m)
    }

    /// Like [`FiniteBaseMeasure::new`] but permits zero-probability atoms and
    /// a single atom (tilted measures, point masses).
    pub fn with_null_atoms(atoms: Vec<T>, mut probs: Vec<T>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return Err(Error::Measure(format!("{} atoms but {} probabilities", atoms.len(), probs.len())));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::Measure("atoms must be finite".into()));
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if atoms[i] == atoms[j] {
                    return Err(Error::Measure(format!("duplicate atom {}", atoms[i])));
                }
            }
        }
        if probs.iter().any(|&p| !(p >= T::zero()) || !p.is_finite()) {
            return Err(Error::Measure("probabilities must be finite and nonnegative".into()));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > sum_tolerance::<T>(probs.len()) {
            return Err(Error::Measure(format!("probabilities sum to {total}, not 1")));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self { atoms, probs })
    }

    /// `½(δ₋₁ + δ₁)`.
    pub fn rademacher() -> Self {
        Self::new(vec![-T::one(), T::one()], vec![T::lit(0.5); 2]).unwrap()
    }

    /// Uniform measure on the colours `1..=c`.
    pub fn uniform_colors(c: usize) -> Result<Self> {
        if c < 2 {
            return Err(Error::Measure("need at least two colours".into()));
        }
        let p = T::one() / T::from_usize_lossy(c);
        Self::new((1..=c).map(T::from_usize_lossy).collect(), vec![p; c])
    }

    /// Colours `1..=c` with the given probabilities.
    pub fn colors(probs: Vec<T>) -> Result<Self> {
        Self::new((1..=probs.len()).map(T::from_usize_lossy).collect(), probs)
    }

    /// Point mass on one atom of `self`'s support.
    pub fn point_mass_like(&self, atom: usize) -> Self {
        let mut probs = vec![T::zero(); self.len()];
        probs[atom] = T::one();
        Self { atoms: self.atoms.clone(), probs }
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> T {
        self.atoms.iter().zip(&self.probs).map(|(&a, &p)| a * p).sum()
    }

    /// Index of the smallest and largest atom.
    pub fn extreme_atoms(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut hi = 0;
        for k in 1..self.len() {
            if self.atoms[k] < self.atoms[lo] {
                lo = k;
            }
            if self.atoms[k] > self.atoms[hi] {
                hi = k;
            }
        }
        (lo, hi)
    }

    /// `cl(𝒩) = [min atom, max atom]`.
    pub fn mean_range(&self) -> (T, T) {
        let (lo, hi) = self.extreme_atoms();
        (self.atoms[lo], self.atoms[hi])
    }

    pub fn same_support(&self, other: &Self) -> bool {
        self.atoms == other.atoms
    }
}

/// Real number or one of the two infinities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Extended<T> {
    NegInf,
    Finite(T),
    PosInf,
}

impl<T: Scalar> Extended<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Extended::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// Maps the sentinels to `±∞` of the scalar type.
    pub fn to_scalar(self) -> T {
        match self {
            Extended::NegInf => T::neg_infinity(),
            Extended::Finite(x) => x,
            Extended::PosInf => T::infinity(),
        }
    }
}

/// Safeguarded Newton settings for `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TiltSolverConfig {
    /// Stop once the Newton step falls below `tolerance · (1 + |θ|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Half-width of the initial bracket `[-b, b]`, doubled until it
    /// contains the root.
    pub bracket: f64,
    /// Distance kept from the closure endpoints when profiles are clamped.
    pub margin: f64,
}

impl Default for TiltSolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-15, max_iterations: 200, bracket: 1.0, margin: 1e-12 }
    }
}

impl TiltSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.margin > 0.0) || !(self.bracket > 0.0) {
            return Err(Error::Config("tilt solver tolerance, margin and bracket must be positive".into()));
        }
        Ok(())
    }
}

/// Tilted weights `p_k e^{θ a_k}` renormalised, with the log normaliser.
fn tilt_weights<T: Scalar>(mu: &FiniteBaseMeasure<T>, theta: T) -> (Vec<T>, T) {
    let shift = mu.atoms.iter().map(|&a| theta * a).fold(T::neg_infinity(), T::max);
    let raw: Vec<T> = mu.atoms.iter().zip(&mu.probs).map(|(&a, &p)| p * (theta * a - shift).exp()).collect();
    let z: T = raw.iter().copied().sum();
    (raw.into_iter().map(|w| w / z).collect(), shift + z.ln())
}

/// `α(θ) = log Σ p_k e^{θ a_k}`.
pub fn log_mgf<T: Scalar>(mu: &FiniteBaseMeasure<T>, theta: T) -> T {
    tilt_weights(mu, theta).1
}

/// `α'(θ)`, the mean of the tilted measure.
pub fn mean_map<T: Scalar>(mu: &FiniteBaseMeasure<T>, theta: T) -> T {
    let (w, _) = tilt_weights(mu, theta);
    w.iter().zip(&mu.atoms).map(|(&p, &a)| p * a).sum()
}

/// `α''(θ)`, the variance of the tilted measure.
pub fn variance<T: Scalar>(mu: &FiniteBaseMeasure<T>, theta: T) -> T {
    let (w, _) = tilt_weights(mu, theta);
    let m: T = w.iter().zip(&mu.atoms).map(|(&p, &a)| p * a).sum();
    w.iter().zip(&mu.atoms).map(|(&p, &a)| p * (a - m) * (a - m)).sum()
}

/// Probabilities of the `θ`-tilt; entries may underflow to zero.
pub fn tilted_probs<T: Scalar>(mu: &FiniteBaseMeasure<T>, theta: T) -> Vec<T> {
    tilt_weights(mu, theta).0
}

/// `μ_θ` with `dμ_θ/dμ = e^{θx - α(θ)}`.
pub fn tilted_measure<T: Scalar>(mu: &FiniteBaseMeasure<T>, theta: T) -> FiniteBaseMeasure<T> {
    FiniteBaseMeasure { atoms: mu.atoms.clone(), probs: tilted_probs(mu, theta) }
}

fn check_range<T: Scalar>(mu: &FiniteBaseMeasure<T>, m: T) -> Result<(T, T)> {
    let (lo, hi) = mu.mean_range();
    if !(m >= lo && m <= hi) {
        return Err(Error::OutOfRange { value: m.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
    }
    Ok((lo, hi))
}

/// `β(m)`: solves `α'(θ) = m` by Newton steps kept inside a bisection
/// bracket. The closure endpoints map to `±∞`.
pub fn inverse_mean<T: Scalar>(mu: &FiniteBaseMeasure<T>, m: T, cfg: &TiltSolverConfig) -> Result<Extended<T>> {
    let (lo, hi) = check_range(mu, m)?;
    if m == hi {
        return Ok(Extended::PosInf);
    }
    if m == lo {
        return Ok(Extended::NegInf);
    }
    let two = T::lit(2.0);
    let mut a = -T::lit(cfg.bracket);
    let mut b = T::lit(cfg.bracket);
    let mut guard = 0;
    while mean_map(mu, a) > m {
        b = a;
        a = a * two;
        guard += 1;
        if guard > 2100 || !a.is_finite() {
            return Ok(Extended::NegInf);
        }
    }
    while mean_map(mu, b) < m {
        a = b;
        b = b * two;
        guard += 1;
        if guard > 2100 || !b.is_finite() {
            return Ok(Extended::PosInf);
        }
    }
    let tol = T::lit(cfg.tolerance);
    let mut theta = (a + b) / two;
    for _ in 0..cfg.max_iterations {
        let (w, _) = tilt_weights(mu, theta);
        let mean: T = w.iter().zip(&mu.atoms).map(|(&p, &x)| p * x).sum();
        let var: T = w.iter().zip(&mu.atoms).map(|(&p, &x)| p * (x - mean) * (x - mean)).sum();
        let resid = mean - m;
        if resid == T::zero() {
            break;
        }
        if resid > T::zero() {
            b = theta;
        } else {
            a = theta;
        }
        let mut next = if var > T::zero() { theta - resid / var } else { T::nan() };
        if !(next > a && next < b) {
            next = (a + b) / two;
        }
        let step = (next - theta).abs();
        theta = next;
        if step <= tol * (T::one() + theta.abs()) || b - a <= tol * (T::one() + theta.abs()) {
            break;
        }
    }
    Ok(Extended::Finite(theta))
}

/// `γ(β(m)) = D(μ_{β(m)} ‖ μ)`; at an endpoint, `-log μ(endpoint atom)`.
pub fn gamma<T: Scalar>(mu: &FiniteBaseMeasure<T>, m: T, cfg: &TiltSolverConfig) -> Result<T> {
    let (lo_idx, hi_idx) = mu.extreme_atoms();
    Ok(match inverse_mean(mu, m, cfg)? {
        Extended::PosInf => -mu.probs[hi_idx].ln(),
        Extended::NegInf => -mu.probs[lo_idx].ln(),
        Extended::Finite(theta) => (theta * m - log_mgf(mu, theta)).max(T::zero()),
    })
}

/// `Σ p_k log(p_k / q_k)` with `0 log 0 = 0`; `+∞` when `p` charges a
/// `q`-null atom.
pub fn kl_probs<T: Scalar>(p: &[T], q: &[T]) -> T {
    let mut d = T::zero();
    for (&pk, &qk) in p.iter().zip(q) {
        if pk > T::zero() {
            if qk <= T::zero() {
                return T::infinity();
            }
            d += pk * (pk / qk).ln();
        }
    }
    d.max(T::zero())
}

/// `D(ν ‖ μ)` for two measures on the same atoms.
pub fn kl_divergence<T: Scalar>(nu: &FiniteBaseMeasure<T>, mu: &FiniteBaseMeasure<T>) -> Result<T> {
    if !nu.same_support(mu) {
        return Err(Error::SupportMismatch);
    }
    Ok(kl_probs(&nu.probs, &mu.probs))
}
