//! Scalar Gaussian reproducing kernel `k(x) = exp(−|x|²/(2σ²))` and its
//! exact partial derivatives.
//!
//! The kernel is separable, so every partial derivative factors into 1-D
//! derivatives of `exp(−t²/(2σ²))`:
//!
//! ```text
//! dⁿ/dtⁿ exp(−t²/2σ²) = (−1/σ)ⁿ Heₙ(t/σ) exp(−t²/2σ²)
//! ```
//!
//! with probabilists' Hermite polynomials `He₀ = 1`, `He₁ = s`,
//! `Heₙ₊₁ = s·Heₙ − n·Heₙ₋₁`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{JetOrder, JetState};
use crate::tensor::{Vec3, MAX_DIM};

/// Highest total derivative order the kernel supports.
pub const MAX_DERIVATIVE_ORDER: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelConfig<T> {
    sigma: T,
    dim: usize,
}

impl<T: Scalar> KernelConfig<T> {
    pub fn new(sigma: T, dim: usize) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "kernel scale must be positive and finite, got {sigma:?}"
            )));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidConfig(format!(
                "spatial dimension must be 2 or 3, got {dim}"
            )));
        }
        Ok(Self { sigma, dim })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same kernel over another scalar type (e.g. dual numbers).
    pub fn cast<S: Scalar>(&self, f: impl Fn(T) -> S) -> KernelConfig<S> {
        KernelConfig {
            sigma: f(self.sigma),
            dim: self.dim,
        }
    }
}

/// Per-axis derivative orders `α`, `|α| ≤ 5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    orders: [u8; MAX_DIM],
}

impl MultiIndex {
    pub fn new(orders: &[usize]) -> Result<Self> {
        if orders.len() > MAX_DIM {
            return Err(Error::Shape(format!(
                "multi-index has {} entries, at most {MAX_DIM} allowed",
                orders.len()
            )));
        }
        let total: usize = orders.iter().sum();
        if total > MAX_DERIVATIVE_ORDER {
            return Err(Error::OrderTooHigh {
                order: total,
                max: MAX_DERIVATIVE_ORDER,
            });
        }
        let mut o = [0u8; MAX_DIM];
        for (slot, &v) in o.iter_mut().zip(orders) {
            *slot = v as u8;
        }
        Ok(Self { orders: o })
    }

    pub fn zero() -> Self {
        Self { orders: [0; MAX_DIM] }
    }

    /// Multi-index counting how often each axis occurs in `axes`.
    pub fn from_axes(axes: &[usize]) -> Result<Self> {
        let mut counts = [0usize; MAX_DIM];
        for &a in axes {
            if a >= MAX_DIM {
                return Err(Error::Shape(format!("axis {a} out of range")));
            }
            counts[a] += 1;
        }
        Self::new(&counts)
    }

    pub fn orders(&self) -> [usize; MAX_DIM] {
        [
            self.orders[0] as usize,
            self.orders[1] as usize,
            self.orders[2] as usize,
        ]
    }

    pub fn total(&self) -> usize {
        self.orders.iter().map(|&o| o as usize).sum()
    }

    pub fn checked_add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        let a = self.orders();
        let b = other.orders();
        Self::new(&[a[0] + b[0], a[1] + b[1], a[2] + b[2]])
    }
}

/// All multi-indices with `|α| ≤ order` in dimension `dim`, graded by total
/// order and lexicographic within a grade. This fixes the slot order of the
/// Gram matrix.
pub fn jet_multi_indices(dim: usize, order: JetOrder) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::zero()];
    if order >= JetOrder::One {
        for b in 0..dim {
            out.push(MultiIndex::from_axes(&[b]).expect("valid axis"));
        }
    }
    if order >= JetOrder::Two {
        for b in 0..dim {
            for c in b..dim {
                out.push(MultiIndex::from_axes(&[b, c]).expect("valid axes"));
            }
        }
    }
    out
}

/// `k(x)`.
pub fn eval_k<T: Scalar>(cfg: &KernelConfig<T>, x: &[T]) -> T {
    let mut r2 = T::zero();
    for &xi in x.iter().take(cfg.dim) {
        r2 += xi * xi;
    }
    (-r2 / (T::from_f64(2.0) * cfg.sigma * cfg.sigma)).exp()
}

/// `∂^α k(x)` from the Hermite factorization.
pub fn eval_k_deriv<T: Scalar>(cfg: &KernelConfig<T>, alpha: &MultiIndex, x: &[T]) -> Result<T> {
    let order = alpha.total();
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::OrderTooHigh {
            order,
            max: MAX_DERIVATIVE_ORDER,
        });
    }
    let mut z = [T::zero(); MAX_DIM];
    for (zi, &xi) in z.iter_mut().zip(x.iter().take(cfg.dim)) {
        *zi = xi;
    }
    let table = KernelTable::new(cfg, &z, order);
    Ok(table.get(alpha.orders()))
}

/// Every partial derivative of `k` at one displacement up to a fixed order.
///
/// Holds `e = k(z)` and the per-axis factors `(−1/σ)ⁿ Heₙ(zᵢ/σ)`, so a
/// lookup costs `dim` multiplications.
#[derive(Clone, Debug)]
pub struct KernelTable<T> {
    value: T,
    factors: [[T; MAX_DERIVATIVE_ORDER + 1]; MAX_DIM],
    dim: usize,
    order: usize,
}

impl<T: Scalar> KernelTable<T> {
    pub fn new(cfg: &KernelConfig<T>, z: &Vec3<T>, order: usize) -> Self {
        debug_assert!(order <= MAX_DERIVATIVE_ORDER);
        let inv_sigma = T::one() / cfg.sigma;
        let mut factors = [[T::zero(); MAX_DERIVATIVE_ORDER + 1]; MAX_DIM];
        let mut r2 = T::zero();
        for axis in 0..cfg.dim {
            let s = z[axis] * inv_sigma;
            r2 += s * s;
            // Heₙ(s)
            let mut he = [T::zero(); MAX_DERIVATIVE_ORDER + 1];
            he[0] = T::one();
            if order >= 1 {
                he[1] = s;
            }
            for n in 1..order {
                he[n + 1] = s * he[n] - T::from_usize(n) * he[n - 1];
            }
            let mut scale = T::one();
            for n in 0..=order {
                factors[axis][n] = scale * he[n];
                scale = -scale * inv_sigma;
            }
        }
        for f in factors.iter_mut().skip(cfg.dim) {
            f[0] = T::one();
        }
        Self {
            value: (-r2 / T::from_f64(2.0)).exp(),
            factors,
            dim: cfg.dim,
            order,
        }
    }

    pub fn value(&self) -> T {
        self.value
    }

    /// `∂^α k(z)` for per-axis orders `counts`.
    #[inline]
    pub fn get(&self, counts: [usize; MAX_DIM]) -> T {
        debug_assert!(counts.iter().sum::<usize>() <= self.order);
        let mut v = self.value;
        for (axis, &c) in counts.iter().enumerate().take(self.dim) {
            v *= self.factors[axis][c];
        }
        v
    }

    /// Partial derivative along the listed axes, e.g. `[0, 1, 1]` is `∂₀∂₁∂₁ k`.
    #[inline]
    pub fn partial(&self, axes: &[usize]) -> T {
        let mut counts = [0usize; MAX_DIM];
        for &a in axes {
            counts[a] += 1;
        }
        self.get(counts)
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Scalar> GramMatrix<T> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.size + c]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// `½ cᵀ G c`.
    pub fn quadratic_form(&self, c: &[T]) -> T {
        assert_eq!(c.len(), self.size);
        let mut total = T::zero();
        for r in 0..self.size {
            let mut row = T::zero();
            for (g, &v) in self.data[r * self.size..(r + 1) * self.size].iter().zip(c) {
                row += *g * v;
            }
            total += c[r] * row;
        }
        total / T::from_f64(2.0)
    }

    /// `G c`.
    pub fn apply(&self, c: &[T]) -> Vec<T> {
        assert_eq!(c.len(), self.size);
        (0..self.size)
            .map(|r| {
                let mut s = T::zero();
                for (g, &v) in self.data[r * self.size..(r + 1) * self.size].iter().zip(c) {
                    s += *g * v;
                }
                s
            })
            .collect()
    }
}

/// Block Gram matrix on rows `(particle i, multi-index α, component a)`:
///
/// `G[(i,α,a),(j,β,b)] = δ_ab (−1)^|β| ∂^(α+β) k(qᵢ − qⱼ)` for `|α|, |β| ≤ order`.
///
/// Only the upper triangle is evaluated; the lower one is its mirror image.
pub fn gram_matrix<T: Scalar>(
    cfg: &KernelConfig<T>,
    state: &JetState<T>,
    order: JetOrder,
) -> Result<GramMatrix<T>> {
    let dim = cfg.dim;
    if state.dim() != dim {
        return Err(Error::Shape(format!(
            "state dimension {} differs from kernel dimension {dim}",
            state.dim()
        )));
    }
    let positions = state.positions();
    check_distinct(dim, positions)?;
    let slots = jet_multi_indices(dim, order);
    let per = slots.len() * dim;
    let n = positions.len();
    let size = n * per;
    let mut data = vec![T::zero(); size * size];
    let kmax = 2 * order.as_usize();
    for i in 0..n {
        for j in i..n {
            let z = crate::tensor::sub(&positions[i], &positions[j]);
            let table = KernelTable::new(cfg, &z, kmax);
            for (ai, alpha) in slots.iter().enumerate() {
                for (bi, beta) in slots.iter().enumerate() {
                    let sum = alpha.checked_add(beta)?;
                    let mut v = table.get(sum.orders());
                    if beta.total() % 2 == 1 {
                        v = -v;
                    }
                    for a in 0..dim {
                        let r = i * per + ai * dim + a;
                        let c = j * per + bi * dim + a;
                        if r <= c {
                            data[r * size + c] = v;
                        }
                    }
                }
            }
        }
    }
    for r in 0..size {
        for c in 0..r {
            data[r * size + c] = data[c * size + r];
        }
    }
    Ok(GramMatrix { size, data })
}

pub(crate) fn check_distinct<T: Scalar>(dim: usize, positions: &[Vec3<T>]) -> Result<()> {
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if (0..dim).all(|a| positions[i][a] == positions[j][a]) {
                return Err(Error::CoincidentParticles { i, j });
            }
        }
    }
    Ok(())
}
