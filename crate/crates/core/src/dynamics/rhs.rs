//! Right-hand side of the reduced geodesic equations on a flat phase vector.
//!
//! Particles move with the flow, `q̇ = u(q)`, and the momentum is transported
//! so that `⟨m(t), w⟩` follows `∂ₜm + £ᵤm = 0`. Matching the coefficients of
//! `w`, `∂w` and `∂²w` at every particle gives, with `uₐ,ᵦ = ∂_b u_a`:
//!
//! ```text
//! ṗ_e       = −Σ_a p_a u_a,e − Σ_ab μ¹[a][b] u_a,be − Σ_abc μ²[a][b][c] u_a,bce
//! μ̇¹[g][f]  =  Σ_b μ¹[g][b] u_f,b − Σ_a μ¹[a][f] u_a,g
//!             + Σ_bc μ²[g][b][c] u_f,bc − Σ_ab (μ²[a][b][f] + μ²[a][f][b]) u_a,bg
//! μ̇²[g][f][h] = sym_fh [ Σ_c μ²[g][f][c] u_h,c + Σ_b μ²[g][b][f] u_h,b − Σ_a u_a,g μ²[a][f][h] ]
//! ```
//!
//! For `k = 0` this is `q̇ᵢ = Σⱼ k(qᵢ−qⱼ)pⱼ`, `ṗᵢ = −Σⱼ (pᵢ·pⱼ)∇k(qᵢ−qⱼ)`.
//! Jet slots follow the chain rule: `q̇¹ = Du q¹` and
//! `q̇²[a][b][c] = Σ u_a,ef q¹[e][b] q¹[f][c] + Σ u_a,e q²[e][b][c]`.

use crate::error::{Error, Result};
use crate::kernel::KernelConfig;
use crate::scalar::{Dual, Scalar};
use crate::state::{FlatLayout, JetOrder, PhasePoint};
use crate::tensor::{zero_mat, zero_ten3, Mat3, Ten3, Vec3};

use super::velocity::{Source, VelocityJet};

/// Time derivative of a phase point, stored flat in the phase layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTangent<T> {
    pub layout: FlatLayout,
    pub values: Vec<T>,
}

impl<T: Scalar> PhaseTangent<T> {
    /// Component view with the same field structure as a phase point.
    pub fn as_phase_point(&self) -> PhasePoint<T> {
        self.layout.unpack(&self.values)
    }

    pub fn position_rate(&self, i: usize) -> Vec3<T> {
        self.as_phase_point().state.positions()[i]
    }

    pub fn momentum_rate(&self, i: usize) -> Vec3<T> {
        self.as_phase_point().momentum.p()[i]
    }
}

/// Checked right-hand side of a phase point.
pub fn rhs<T: Scalar>(cfg: &KernelConfig<T>, x: &PhasePoint<T>) -> Result<PhaseTangent<T>> {
    if cfg.dim() != x.dim() {
        return Err(Error::Shape(format!(
            "kernel dimension {} differs from phase point dimension {}",
            cfg.dim(),
            x.dim()
        )));
    }
    crate::kernel::check_distinct(x.dim(), x.state.positions())?;
    let layout = x.layout();
    let flat = x.to_flat();
    let mut out = vec![T::zero(); flat.len()];
    rhs_flat(cfg, &layout, &flat, &mut out);
    Ok(PhaseTangent { layout, values: out })
}

/// Unchecked right-hand side on flat storage.
pub fn rhs_flat<T: Scalar>(cfg: &KernelConfig<T>, layout: &FlatLayout, x: &[T], out: &mut [T]) {
    if layout.order == JetOrder::Zero {
        landmark_rhs(cfg, layout, x, out);
    } else {
        jet_rhs(cfg, layout, x, out);
    }
}

/// The landmark system, visiting each pair once.
fn landmark_rhs<T: Scalar>(cfg: &KernelConfig<T>, layout: &FlatLayout, x: &[T], out: &mut [T]) {
    let d = layout.dim;
    let n = layout.n;
    let off = layout.momentum_offset();
    let inv_s2 = T::one() / (cfg.sigma() * cfg.sigma());
    let half = T::from_f64(0.5);
    let (q, p) = x.split_at(off);
    let (dq, dp) = out.split_at_mut(off);
    dq.copy_from_slice(p);
    dp.iter_mut().for_each(|v| *v = T::zero());
    for i in 0..n {
        let qi = &q[i * d..i * d + d];
        let pi = &p[i * d..i * d + d];
        for j in i + 1..n {
            let qj = &q[j * d..j * d + d];
            let pj = &p[j * d..j * d + d];
            let mut z = [T::zero(); 3];
            let mut r2 = T::zero();
            let mut pp = T::zero();
            for a in 0..d {
                z[a] = qi[a] - qj[a];
                r2 += z[a] * z[a];
                pp += pi[a] * pj[a];
            }
            let kij = (-(r2 * inv_s2) * half).exp();
            // ∇k(qᵢ − qⱼ) = −z kᵢⱼ / σ²
            let c = pp * kij * inv_s2;
            for a in 0..d {
                dq[i * d + a] += kij * pj[a];
                dq[j * d + a] += kij * pi[a];
                dp[i * d + a] += c * z[a];
                dp[j * d + a] -= c * z[a];
            }
        }
    }
}

fn jet_rhs<T: Scalar>(cfg: &KernelConfig<T>, layout: &FlatLayout, x: &[T], out: &mut [T]) {
    let pp = layout.unpack(x);
    let d = layout.dim;
    let k = layout.order;
    let src = Source::from_phase(&pp);
    let r = k.as_usize() + 1;
    let n = layout.n;
    let mut dq = vec![[T::zero(); 3]; n];
    let mut dq1 = vec![zero_mat(); if k >= JetOrder::One { n } else { 0 }];
    let mut dq2 = vec![zero_ten3(); if k >= JetOrder::Two { n } else { 0 }];
    let mut dp = vec![[T::zero(); 3]; n];
    let mut dmu1 = vec![zero_mat(); dq1.len()];
    let mut dmu2 = vec![zero_ten3(); dq2.len()];
    for i in 0..n {
        let jet = src.jet(cfg, &pp.state.positions()[i], r);
        dq[i] = jet.u;
        let p = &pp.momentum.p()[i];
        // ṗ
        for e in 0..d {
            let mut v = T::zero();
            for a in 0..d {
                v -= p[a] * jet.du[a][e];
            }
            if k >= JetOrder::One {
                let m1 = &pp.momentum.mu1()[i];
                for a in 0..d {
                    for b in 0..d {
                        v -= m1[a][b] * jet.d2u[a][b][e];
                    }
                }
            }
            if k >= JetOrder::Two {
                let m2 = &pp.momentum.mu2()[i];
                for a in 0..d {
                    for b in 0..d {
                        for c in 0..d {
                            v -= m2[a][b][c] * jet.d3u[a][b][c][e];
                        }
                    }
                }
            }
            dp[i][e] = v;
        }
        if k >= JetOrder::One {
            let q1 = &pp.state.jacobians()[i];
            dq1[i] = advect_jacobian(d, &jet, q1);
            dmu1[i] = mu1_rate(d, k, &jet, &pp.momentum.mu1()[i], pp.momentum.mu2().get(i));
        }
        if k >= JetOrder::Two {
            let q1 = &pp.state.jacobians()[i];
            let q2 = &pp.state.hessians()[i];
            dq2[i] = advect_hessian(d, &jet, q1, q2);
            dmu2[i] = mu2_rate(d, &jet, &pp.momentum.mu2()[i]);
        }
    }
    let sl = layout.state_len();
    out[..sl].copy_from_slice(&pack_parts(layout, &dq, &dq1, &dq2));
    out[sl..].copy_from_slice(&pack_parts(layout, &dp, &dmu1, &dmu2));
}

fn pack_parts<T: Scalar>(layout: &FlatLayout, v: &[Vec3<T>], m: &[Mat3<T>], t: &[Ten3<T>]) -> Vec<T> {
    let d = layout.dim;
    let mut out = Vec::with_capacity(layout.state_len());
    for x in v {
        out.extend(x.iter().take(d).copied());
    }
    for x in m {
        for row in x.iter().take(d) {
            out.extend(row.iter().take(d).copied());
        }
    }
    for x in t {
        for mat in x.iter().take(d) {
            for row in mat.iter().take(d) {
                out.extend(row.iter().take(d).copied());
            }
        }
    }
    out
}

/// `Du · A`.
pub(crate) fn advect_jacobian<T: Scalar>(d: usize, jet: &VelocityJet<T>, a: &Mat3<T>) -> Mat3<T> {
    crate::tensor::mat_mul(d, &jet.du, a)
}

/// `D²u(A·, A·) + Du · B`.
pub(crate) fn advect_hessian<T: Scalar>(d: usize, jet: &VelocityJet<T>, a: &Mat3<T>, b: &Ten3<T>) -> Ten3<T> {
    let mut out = zero_ten3();
    for i in 0..d {
        for s in 0..d {
            for t in s..d {
                let mut v = T::zero();
                for e in 0..d {
                    let mut inner = T::zero();
                    for f in 0..d {
                        inner += jet.d2u[i][e][f] * a[f][t];
                    }
                    v += inner * a[e][s];
                    v += jet.du[i][e] * b[e][s][t];
                }
                out[i][s][t] = v;
                out[i][t][s] = v;
            }
        }
    }
    out
}

fn mu1_rate<T: Scalar>(
    d: usize,
    k: JetOrder,
    jet: &VelocityJet<T>,
    m1: &Mat3<T>,
    m2: Option<&Ten3<T>>,
) -> Mat3<T> {
    let mut out = zero_mat();
    for g in 0..d {
        for f in 0..d {
            let mut v = T::zero();
            for b in 0..d {
                v += m1[g][b] * jet.du[f][b];
            }
            for a in 0..d {
                v -= m1[a][f] * jet.du[a][g];
            }
            if k >= JetOrder::Two {
                let m2 = m2.expect("order-2 momentum carries mu2");
                for b in 0..d {
                    for c in 0..d {
                        v += m2[g][b][c] * jet.d2u[f][b][c];
                    }
                }
                for a in 0..d {
                    for b in 0..d {
                        v -= (m2[a][b][f] + m2[a][f][b]) * jet.d2u[a][b][g];
                    }
                }
            }
            out[g][f] = v;
        }
    }
    out
}

fn mu2_rate<T: Scalar>(d: usize, jet: &VelocityJet<T>, m2: &Ten3<T>) -> Ten3<T> {
    let mut raw = zero_ten3();
    for g in 0..d {
        for f in 0..d {
            for h in 0..d {
                let mut v = T::zero();
                for c in 0..d {
                    v += m2[g][f][c] * jet.du[h][c];
                    v += m2[g][c][f] * jet.du[h][c];
                }
                for a in 0..d {
                    v -= jet.du[a][g] * m2[a][f][h];
                }
                raw[g][f][h] = v;
            }
        }
    }
    let half = T::from_f64(0.5);
    let mut out = zero_ten3();
    for g in 0..d {
        for f in 0..d {
            for h in 0..d {
                out[g][f][h] = (raw[g][f][h] + raw[g][h][f]) * half;
            }
        }
    }
    out
}

/// `λᵀ (∂f/∂x)` for the right-hand side `f` at `x`.
///
/// Order-0 phase points use the closed-form adjoint of the landmark
/// equations; jets assemble the Jacobian column by column with dual numbers.
pub fn rhs_vjp<T: Scalar>(cfg: &KernelConfig<T>, layout: &FlatLayout, x: &[T], lambda: &[T], out: &mut [T]) {
    if layout.order == JetOrder::Zero {
        landmark_vjp(cfg, layout, x, lambda, out);
    } else {
        dual_vjp(cfg, layout, x, lambda, out);
    }
}

/// Forward-mode vector-Jacobian product, one dual pass per input slot.
pub fn dual_vjp<T: Scalar>(cfg: &KernelConfig<T>, layout: &FlatLayout, x: &[T], lambda: &[T], out: &mut [T]) {
    let cfg_d = cfg.cast(Dual::constant);
    let mut xd: Vec<Dual<T>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut fd = vec![Dual::<T>::zero_value(); x.len()];
    for c in 0..x.len() {
        xd[c].eps = T::one();
        rhs_flat(&cfg_d, layout, &xd, &mut fd);
        xd[c].eps = T::zero();
        let mut s = T::zero();
        for (l, f) in lambda.iter().zip(&fd) {
            s += *l * f.eps;
        }
        out[c] = s;
    }
}

impl<T: Scalar> Dual<T> {
    fn zero_value() -> Self {
        Dual::constant(T::zero())
    }
}

/// Closed-form adjoint of `q̇ᵢ = Σⱼ kᵢⱼ pⱼ`, `ṗᵢ = −Σⱼ (pᵢ·pⱼ) ∇kᵢⱼ`, one pass per pair.
///
/// With `z = qᵢ − qⱼ`, `∇k = −z k/σ²` and `∇²k = (z zᵀ/σ⁴ − I/σ²) k`.
fn landmark_vjp<T: Scalar>(cfg: &KernelConfig<T>, layout: &FlatLayout, x: &[T], lambda: &[T], out: &mut [T]) {
    let d = layout.dim;
    let n = layout.n;
    let off = layout.momentum_offset();
    let inv_s2 = T::one() / (cfg.sigma() * cfg.sigma());
    let half = T::from_f64(0.5);
    let (q, p) = x.split_at(off);
    let (lq, lp) = lambda.split_at(off);
    let (gq, gp) = out.split_at_mut(off);
    gq.iter_mut().for_each(|v| *v = T::zero());
    gp.copy_from_slice(lq);
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (u, v)| s + *u * *v);
    for i in 0..n {
        let (qi, pi) = (&q[i * d..i * d + d], &p[i * d..i * d + d]);
        let (lqi, lpi) = (&lq[i * d..i * d + d], &lp[i * d..i * d + d]);
        for j in i + 1..n {
            let (qj, pj) = (&q[j * d..j * d + d], &p[j * d..j * d + d]);
            let (lqj, lpj) = (&lq[j * d..j * d + d], &lp[j * d..j * d + d]);
            let mut z = [T::zero(); 3];
            let mut dl = [T::zero(); 3];
            let mut r2 = T::zero();
            for a in 0..d {
                z[a] = qi[a] - qj[a];
                dl[a] = lpi[a] - lpj[a];
                r2 += z[a] * z[a];
            }
            let kij = (-(r2 * inv_s2) * half).exp();
            let gk = -kij * inv_s2;
            let pp = dot(pi, pj);
            let z_dl = dot(&z[..d], &dl[..d]);
            // (λpᵢ − λpⱼ)·∇k
            let dl_grad = gk * z_dl;
            let cross = dot(lqi, pj) + dot(lqj, pi);
            for a in 0..d {
                gp[i * d + a] += kij * lqj[a] - pj[a] * dl_grad;
                gp[j * d + a] += kij * lqi[a] - pi[a] * dl_grad;
                let hess_dl = kij * (z[a] * z_dl * inv_s2 * inv_s2 - dl[a] * inv_s2);
                let g = cross * gk * z[a] - pp * hess_dl;
                gq[i * d + a] += g;
                gq[j * d + a] -= g;
            }
        }
    }
}
