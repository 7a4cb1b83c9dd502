//! The Eulerian velocity field induced by a jet momentum.
//!
//! ```text
//! u_a(x) = Σⱼ [ p_ja k(x−qⱼ) − Σ_b μ¹ⱼ[a][b] ∂_b k(x−qⱼ) + Σ_bc μ²ⱼ[a][b][c] ∂_b∂_c k(x−qⱼ) ]
//! ```
//!
//! i.e. `u = K m`: the kernel applied to the distributional momentum.

use crate::error::{Error, Result};
use crate::kernel::{KernelConfig, KernelTable, MultiIndex, MAX_DERIVATIVE_ORDER};
use crate::scalar::Scalar;
use crate::state::{JetMomentum, JetOrder, PhasePoint};
use crate::tensor::{sub, zero_mat, zero_ten3, zero_ten4, Mat3, Ten3, Ten4, Vec3, MAX_DIM};

/// Value and spatial derivatives of `u` at one point, up to order 3.
///
/// `du[a][b] = ∂_b u_a`, `d2u[a][b][c] = ∂_b∂_c u_a`, `d3u[a][b][c][e] = ∂_b∂_c∂_e u_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityJet<T> {
    pub order: usize,
    pub u: Vec3<T>,
    pub du: Mat3<T>,
    pub d2u: Ten3<T>,
    pub d3u: Ten4<T>,
}

/// Borrowed particle data of a momentum source.
#[derive(Clone, Copy)]
pub(crate) struct Source<'a, T> {
    pub dim: usize,
    pub order: JetOrder,
    pub positions: &'a [Vec3<T>],
    pub p: &'a [Vec3<T>],
    pub mu1: &'a [Mat3<T>],
    pub mu2: &'a [Ten3<T>],
}

impl<'a, T: Scalar> Source<'a, T> {
    pub fn from_phase(x: &'a PhasePoint<T>) -> Self {
        Self::new(x.state.positions(), &x.momentum)
    }

    pub fn new(positions: &'a [Vec3<T>], m: &'a JetMomentum<T>) -> Self {
        Source {
            dim: m.dim(),
            order: m.order(),
            positions,
            p: m.p(),
            mu1: m.mu1(),
            mu2: m.mu2(),
        }
    }

    /// `∂^γ u_a(x)` contribution of particle `j`, given its kernel table at `x − qⱼ`.
    #[inline]
    fn partial(&self, j: usize, table: &KernelTable<T>, gamma: [usize; MAX_DIM], a: usize) -> T {
        let d = self.dim;
        let mut v = self.p[j][a] * table.get(gamma);
        if self.order >= JetOrder::One {
            let m1 = &self.mu1[j][a];
            for b in 0..d {
                let mut g = gamma;
                g[b] += 1;
                v -= m1[b] * table.get(g);
            }
        }
        if self.order >= JetOrder::Two {
            let m2 = &self.mu2[j][a];
            for b in 0..d {
                for c in b..d {
                    let mut g = gamma;
                    g[b] += 1;
                    g[c] += 1;
                    let coef = if b == c { m2[b][b] } else { m2[b][c] + m2[c][b] };
                    v += coef * table.get(g);
                }
            }
        }
        v
    }

    /// Velocity and its derivatives up to `order` (≤ 3) at `x`.
    pub fn jet(&self, cfg: &KernelConfig<T>, x: &Vec3<T>, order: usize) -> VelocityJet<T> {
        debug_assert!(order <= 3);
        let d = self.dim;
        let kmax = order + self.order.as_usize();
        let mut out = VelocityJet {
            order,
            u: [T::zero(); 3],
            du: zero_mat(),
            d2u: zero_ten3(),
            d3u: zero_ten4(),
        };
        for j in 0..self.positions.len() {
            let z = sub(x, &self.positions[j]);
            let table = KernelTable::new(cfg, &z, kmax);
            for a in 0..d {
                out.u[a] += self.partial(j, &table, [0; 3], a);
                if order >= 1 {
                    for b in 0..d {
                        let mut g = [0; 3];
                        g[b] += 1;
                        out.du[a][b] += self.partial(j, &table, g, a);
                    }
                }
                if order >= 2 {
                    for b in 0..d {
                        for c in b..d {
                            let mut g = [0; 3];
                            g[b] += 1;
                            g[c] += 1;
                            let v = self.partial(j, &table, g, a);
                            out.d2u[a][b][c] += v;
                        }
                    }
                }
                if order >= 3 {
                    for b in 0..d {
                        for c in b..d {
                            for e in c..d {
                                let mut g = [0; 3];
                                g[b] += 1;
                                g[c] += 1;
                                g[e] += 1;
                                let v = self.partial(j, &table, g, a);
                                out.d3u[a][b][c][e] += v;
                            }
                        }
                    }
                }
            }
        }
        // mirror the sorted-index entries to every permutation
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let mut s = [b, c];
                    s.sort_unstable();
                    out.d2u[a][b][c] = out.d2u[a][s[0]][s[1]];
                    for e in 0..d {
                        let mut s = [b, c, e];
                        s.sort_unstable();
                        out.d3u[a][b][c][e] = out.d3u[a][s[0]][s[1]][s[2]];
                    }
                }
            }
        }
        out
    }

    /// `∂^α u(x)` for an arbitrary multi-index.
    pub fn at(&self, cfg: &KernelConfig<T>, alpha: &MultiIndex, x: &Vec3<T>) -> Vec3<T> {
        let kmax = alpha.total() + self.order.as_usize();
        let mut out = [T::zero(); 3];
        for j in 0..self.positions.len() {
            let z = sub(x, &self.positions[j]);
            let table = KernelTable::new(cfg, &z, kmax);
            for (a, slot) in out.iter_mut().enumerate().take(self.dim) {
                *slot += self.partial(j, &table, alpha.orders(), a);
            }
        }
        out
    }
}

/// Velocity field generated by a phase point.
#[derive(Clone, Debug)]
pub struct VelocityField<T> {
    kernel: KernelConfig<T>,
    source: PhasePoint<T>,
}

impl<T: Scalar> VelocityField<T> {
    pub fn new(kernel: KernelConfig<T>, source: PhasePoint<T>) -> Result<Self> {
        if kernel.dim() != source.dim() {
            return Err(Error::Shape(format!(
                "kernel dimension {} differs from source dimension {}",
                kernel.dim(),
                source.dim()
            )));
        }
        Ok(Self { kernel, source })
    }

    pub fn kernel(&self) -> &KernelConfig<T> {
        &self.kernel
    }

    pub fn source(&self) -> &PhasePoint<T> {
        &self.source
    }

    /// Derivatives of `u` at `x` up to `order ≤ 3`.
    pub fn jet(&self, x: &Vec3<T>, order: usize) -> Result<VelocityJet<T>> {
        let needed = order + self.source.order().as_usize();
        if order > 3 || needed > MAX_DERIVATIVE_ORDER {
            return Err(Error::OrderTooHigh {
                order: needed,
                max: MAX_DERIVATIVE_ORDER,
            });
        }
        Ok(Source::from_phase(&self.source).jet(&self.kernel, x, order))
    }
}

/// `∂^α u(x)`; requires `|α| + k ≤ 5`.
pub fn velocity_at<T: Scalar>(v: &VelocityField<T>, alpha: &MultiIndex, x: &Vec3<T>) -> Result<Vec3<T>> {
    let needed = alpha.total() + v.source.order().as_usize();
    if needed > MAX_DERIVATIVE_ORDER {
        return Err(Error::OrderTooHigh {
            order: needed,
            max: MAX_DERIVATIVE_ORDER,
        });
    }
    Ok(Source::from_phase(&v.source).at(&v.kernel, alpha, x))
}
