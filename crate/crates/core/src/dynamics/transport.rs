//! Transport of vector jets and jet momenta by a flow map.
//!
//! For `Ψ` with jets `A = DΨ`, `B = D²Ψ`, `C = D³Ψ` at `x` and `y = Ψ(x)`,
//! the pushforward `v = Ψ_* w`, `v(y) = A w(x)`, has at `y`
//!
//! ```text
//! W    = A w
//! DW   = B[a][e][f] w_e + A Dw                     (derivatives in x)
//! D²W  = C[a][e][f][g] w_e + B[a][e][f] Dw[e][g] + B[a][e][g] Dw[e][f] + A D²w
//! Dv   = DW A⁻¹
//! D²v  = D²W(A⁻¹·, A⁻¹·) + DW D²(Ψ⁻¹),   D²(Ψ⁻¹)[e][b][c] = −A⁻¹[e][a] B[a][f][g] A⁻¹[f][b] A⁻¹[g][c]
//! ```
//!
//! A momentum is moved by duality, `⟨Ψ^* M, w⟩ = ⟨M, Ψ_* w⟩`, which for jets of
//! order `k` needs the flow derivatives up to order `k + 1`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{JetMomentum, JetOrder};
use crate::tensor::{inverse, lu_solve, zero_mat, zero_ten3, Mat3, Ten3, Vec3};

use super::flow::{FlowMap, SeedJet};

/// Jet of a map at a point: its image and first three derivatives.
pub type MapJet<T> = SeedJet<T>;

/// Value and first two derivatives of a vector field at a point.
///
/// `dw[a][b] = ∂_b w_a`, `d2w[a][b][c] = ∂_b∂_c w_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorJet<T> {
    pub w: Vec3<T>,
    pub dw: Mat3<T>,
    pub d2w: Ten3<T>,
}

impl<T: Scalar> VectorJet<T> {
    pub fn zero() -> Self {
        VectorJet {
            w: [T::zero(); 3],
            dw: zero_mat(),
            d2w: zero_ten3(),
        }
    }
}

/// `Ψ_* w` at `Ψ(x)`, truncated to `order`.
pub fn push_forward_vector_jet<T: Scalar>(
    dim: usize,
    order: JetOrder,
    map: &MapJet<T>,
    w: &VectorJet<T>,
) -> Result<VectorJet<T>> {
    let d = dim;
    let (a, b, c) = (&map.a, &map.b, &map.c);
    let mut out = VectorJet::zero();
    for i in 0..d {
        for e in 0..d {
            out.w[i] += a[i][e] * w.w[e];
        }
    }
    if order == JetOrder::Zero {
        return Ok(out);
    }
    let ai = inverse(d, a).ok_or(Error::SingularJacobian(0))?;
    let mut dw_x = zero_mat();
    for i in 0..d {
        for f in 0..d {
            let mut v = T::zero();
            for e in 0..d {
                v += b[i][e][f] * w.w[e] + a[i][e] * w.dw[e][f];
            }
            dw_x[i][f] = v;
        }
    }
    out.dw = crate::tensor::mat_mul(d, &dw_x, &ai);
    if order == JetOrder::One {
        return Ok(out);
    }
    let mut d2w_x = zero_ten3();
    for i in 0..d {
        for f in 0..d {
            for g in 0..d {
                let mut v = T::zero();
                for e in 0..d {
                    v += c[i][e][f][g] * w.w[e]
                        + b[i][e][f] * w.dw[e][g]
                        + b[i][e][g] * w.dw[e][f]
                        + a[i][e] * w.d2w[e][f][g];
                }
                d2w_x[i][f][g] = v;
            }
        }
    }
    // second derivative of the inverse map at y
    let mut d2inv = zero_ten3();
    for e in 0..d {
        for bb in 0..d {
            for cc in 0..d {
                let mut v = T::zero();
                for r in 0..d {
                    for f in 0..d {
                        for g in 0..d {
                            v += ai[e][r] * b[r][f][g] * ai[f][bb] * ai[g][cc];
                        }
                    }
                }
                d2inv[e][bb][cc] = -v;
            }
        }
    }
    for i in 0..d {
        for bb in 0..d {
            for cc in 0..d {
                let mut v = T::zero();
                for e in 0..d {
                    for f in 0..d {
                        v += d2w_x[i][e][f] * ai[e][bb] * ai[f][cc];
                    }
                    v += dw_x[i][e] * d2inv[e][bb][cc];
                }
                out.d2w[i][bb][cc] = v;
            }
        }
    }
    Ok(out)
}

/// Independent coordinates of a vector jet: `w`, `Dw`, and `D²w[a][b][c]` for `b ≤ c`.
fn jet_coordinates(dim: usize, order: JetOrder) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for a in 0..dim {
        out.push((0, a, 0, 0));
    }
    if order >= JetOrder::One {
        for a in 0..dim {
            for b in 0..dim {
                out.push((1, a, b, 0));
            }
        }
    }
    if order >= JetOrder::Two {
        for a in 0..dim {
            for b in 0..dim {
                for c in b..dim {
                    out.push((2, a, b, c));
                }
            }
        }
    }
    out
}

fn basis_jet<T: Scalar>(slot: (usize, usize, usize, usize)) -> VectorJet<T> {
    let mut w = VectorJet::zero();
    match slot {
        (0, a, _, _) => w.w[a] = T::one(),
        (1, a, b, _) => w.dw[a][b] = T::one(),
        (_, a, b, c) => {
            w.d2w[a][b][c] = T::one();
            w.d2w[a][c][b] = T::one();
        }
    }
    w
}

fn read_coordinate<T: Scalar>(w: &VectorJet<T>, slot: (usize, usize, usize, usize)) -> T {
    match slot {
        (0, a, _, _) => w.w[a],
        (1, a, b, _) => w.dw[a][b],
        (_, a, b, c) => w.d2w[a][b][c],
    }
}

/// The jet `w` at `x` with `Ψ_* w = v` at `Ψ(x)`.
pub fn pull_back_vector_jet<T: Scalar>(
    dim: usize,
    order: JetOrder,
    map: &MapJet<T>,
    v: &VectorJet<T>,
) -> Result<VectorJet<T>> {
    let slots = jet_coordinates(dim, order);
    let n = slots.len();
    let mut m = vec![T::zero(); n * n];
    for (col, &s) in slots.iter().enumerate() {
        let image = push_forward_vector_jet(dim, order, map, &basis_jet(s))?;
        for (row, &r) in slots.iter().enumerate() {
            m[row * n + col] = read_coordinate(&image, r);
        }
    }
    let rhs: Vec<T> = slots.iter().map(|&r| read_coordinate(v, r)).collect();
    let x = lu_solve(n, &m, &rhs).ok_or(Error::SingularJacobian(0))?;
    let mut w = VectorJet::zero();
    for (&s, &val) in slots.iter().zip(&x) {
        match s {
            (0, a, _, _) => w.w[a] = val,
            (1, a, b, _) => w.dw[a][b] = val,
            (_, a, b, c) => {
                w.d2w[a][b][c] = val;
                w.d2w[a][c][b] = val;
            }
        }
    }
    Ok(w)
}

/// `⟨m, w⟩ = Σⱼ pⱼ·w + μ¹ⱼ : Dw + μ²ⱼ ⋮ D²w` with one jet per particle.
pub fn pairing<T: Scalar>(m: &JetMomentum<T>, jets: &[VectorJet<T>]) -> Result<T> {
    if jets.len() != m.len() {
        return Err(Error::Shape(format!("{} jets for {} particles", jets.len(), m.len())));
    }
    let mut total = T::zero();
    for (j, w) in jets.iter().enumerate() {
        total += pairing_at(m, j, w);
    }
    Ok(total)
}

fn pairing_at<T: Scalar>(m: &JetMomentum<T>, j: usize, w: &VectorJet<T>) -> T {
    let d = m.dim();
    let mut v = T::zero();
    for a in 0..d {
        v += m.p()[j][a] * w.w[a];
    }
    if m.order() >= JetOrder::One {
        for a in 0..d {
            for b in 0..d {
                v += m.mu1()[j][a][b] * w.dw[a][b];
            }
        }
    }
    if m.order() >= JetOrder::Two {
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    v += m.mu2()[j][a][b][c] * w.d2w[a][b][c];
                }
            }
        }
    }
    v
}

/// Momentum at the start of a flow segment from the momentum `m1` at its end.
///
/// The segment must seed one identity jet per particle at the start
/// positions and run to `t = 1`; the result satisfies
/// `⟨m(t), w⟩ = ⟨m1, Ψ_* w⟩` for `Ψ` the segment's flow.
pub fn pushforward_momentum<T: Scalar>(flow: &FlowMap<T>, m1: &JetMomentum<T>) -> Result<JetMomentum<T>> {
    let d = m1.dim();
    let k = m1.order();
    let needed = k.as_usize() + 1;
    if flow.derivative_order < needed {
        return Err(Error::MissingJacobian {
            needed,
            available: flow.derivative_order,
        });
    }
    let ends = flow.last();
    if ends.len() != m1.len() {
        return Err(Error::Shape(format!("{} seeds for {} particles", ends.len(), m1.len())));
    }
    let slots = jet_coordinates(d, k);
    let mut p = vec![[T::zero(); 3]; m1.len()];
    let mut mu1 = vec![zero_mat(); if k >= JetOrder::One { m1.len() } else { 0 }];
    let mut mu2 = vec![zero_ten3(); if k >= JetOrder::Two { m1.len() } else { 0 }];
    let half = T::from_f64(0.5);
    for (j, map) in ends.iter().enumerate() {
        for &s in &slots {
            let image = push_forward_vector_jet(d, k, map, &basis_jet(s)).map_err(|_| Error::SingularJacobian(j))?;
            let val = pairing_at(m1, j, &image);
            match s {
                (0, a, _, _) => p[j][a] = val,
                (1, a, b, _) => mu1[j][a][b] = val,
                (_, a, b, c) if b == c => mu2[j][a][b][b] = val,
                (_, a, b, c) => {
                    mu2[j][a][b][c] = val * half;
                    mu2[j][a][c][b] = val * half;
                }
            }
        }
    }
    JetMomentum::new(d, k, p, mu1, mu2)
}
