//! Flow of the velocity field along a phase trajectory.
//!
//! Seeds follow `ẏ = u(t, y)`. On request the first three spatial derivatives
//! of the flow are carried along, `A = DΦ`, `B = D²Φ`, `C = D³Φ`:
//!
//! ```text
//! Ȧ[a][b]       = u_a,e A[e][b]
//! Ḃ[a][b][c]    = u_a,ef A[e][b] A[f][c] + u_a,e B[e][b][c]
//! Ċ[a][b][c][g] = u_a,efh A[e][b] A[f][c] A[h][g]
//!               + u_a,ef (B[e][b][g] A[f][c] + A[e][b] B[f][c][g] + A[f][g] B[e][b][c])
//!               + u_a,e C[e][b][c][g]
//! ```
//!
//! The phase point itself is stepped with exactly the same arithmetic as
//! [`integrate`](super::integrate::integrate), so seeds placed on particles
//! reproduce particle trajectories bit for bit.

use crate::error::{Error, Result};
use crate::kernel::KernelConfig;
use crate::scalar::Scalar;
use crate::state::{FlatLayout, PhasePoint};
use crate::tensor::{identity, zero_mat, zero_ten3, zero_ten4, Mat3, Ten3, Ten4, Vec3};

use super::integrate::{check_input, check_step, rk4_step, IntegratorConfig};
use super::rhs::rhs_flat;
use super::velocity::{Source, VelocityJet};

/// Position of a seed and the derivatives of the flow at it.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedJet<T> {
    pub point: Vec3<T>,
    pub a: Mat3<T>,
    pub b: Ten3<T>,
    pub c: Ten4<T>,
}

impl<T: Scalar> SeedJet<T> {
    /// Identity map jet at `x`.
    pub fn at(dim: usize, x: Vec3<T>) -> Self {
        SeedJet {
            point: x,
            a: identity(dim),
            b: zero_ten3(),
            c: zero_ten4(),
        }
    }
}

/// Sampled flow of a set of seeds.
///
/// `samples[s][i]` holds seed `i` at `times[s]`. Derivatives above
/// `derivative_order` are not tracked and keep their initial values.
#[derive(Clone, Debug)]
pub struct FlowMap<T> {
    pub dim: usize,
    pub derivative_order: usize,
    pub times: Vec<T>,
    pub samples: Vec<Vec<SeedJet<T>>>,
}

impl<T: Scalar> FlowMap<T> {
    pub fn points(&self, s: usize) -> Vec<Vec3<T>> {
        self.samples[s].iter().map(|j| j.point).collect()
    }

    pub fn jacobians(&self, s: usize) -> Result<Vec<Mat3<T>>> {
        if self.derivative_order < 1 {
            return Err(Error::MissingJacobian {
                needed: 1,
                available: self.derivative_order,
            });
        }
        Ok(self.samples[s].iter().map(|j| j.a).collect())
    }

    /// Trajectory of seed `i` over all samples.
    pub fn trajectory(&self, i: usize) -> Vec<Vec3<T>> {
        self.samples.iter().map(|s| s[i].point).collect()
    }

    pub fn last(&self) -> &[SeedJet<T>] {
        self.samples.last().expect("a flow has at least one sample")
    }
}

/// Flow seeds over `[0, 1]`, with `DΦ` if `with_jacobian`.
pub fn flow_points<T: Scalar>(
    cfg: &KernelConfig<T>,
    icfg: &IntegratorConfig,
    x0: &PhasePoint<T>,
    seeds: &[Vec3<T>],
    with_jacobian: bool,
) -> Result<FlowMap<T>> {
    let jets: Vec<_> = seeds.iter().map(|&s| SeedJet::at(x0.dim(), s)).collect();
    flow_map(cfg, icfg, x0, &jets, usize::from(with_jacobian), 0)
}

/// Flow seed jets from grid time `start / S` to `1`, with `x` the phase point at `start`.
///
/// Seeds start from the given jets, which lets callers compose segments.
pub fn flow_map<T: Scalar>(
    cfg: &KernelConfig<T>,
    icfg: &IntegratorConfig,
    x: &PhasePoint<T>,
    seeds: &[SeedJet<T>],
    derivative_order: usize,
    start: usize,
) -> Result<FlowMap<T>> {
    check_input(cfg, x)?;
    if derivative_order > 3 {
        return Err(Error::OrderTooHigh {
            order: derivative_order,
            max: 3,
        });
    }
    if start > icfg.steps() {
        return Err(Error::InvalidParams(format!(
            "start step {start} beyond {} steps",
            icfg.steps()
        )));
    }
    let needed = derivative_order + x.order().as_usize();
    if needed > crate::kernel::MAX_DERIVATIVE_ORDER {
        return Err(Error::OrderTooHigh {
            order: needed,
            max: crate::kernel::MAX_DERIVATIVE_ORDER,
        });
    }
    let d = x.dim();
    let layout = x.layout();
    let seed_layout = SeedLayout { dim: d, order: derivative_order };
    let pl = layout.len();
    let sl = seed_layout.len();
    let mut y = x.to_flat();
    for s in seeds {
        seed_layout.pack(s, &mut y);
    }
    let unpack_all = |y: &[T]| -> Vec<SeedJet<T>> {
        (0..seeds.len()).map(|i| seed_layout.unpack(&y[pl + i * sl..pl + (i + 1) * sl])).collect()
    };
    let h = icfg.step_size::<T>();
    let mut times = vec![icfg.time(start)];
    let mut samples = vec![unpack_all(&y)];
    let mut next = vec![T::zero(); y.len()];
    for s in start..icfg.steps() {
        rk4_step(
            |y: &[T], out: &mut [T]| {
                let (phase, seeds) = y.split_at(pl);
                let (dphase, dseeds) = out.split_at_mut(pl);
                rhs_flat(cfg, &layout, phase, dphase);
                seed_rhs(cfg, &layout, phase, &seed_layout, seeds, dseeds);
            },
            &y,
            h,
            &mut next,
            None,
        );
        check_step(&layout, &next[..pl], s + 1)?;
        if next[pl..].iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: s + 1 });
        }
        std::mem::swap(&mut y, &mut next);
        times.push(icfg.time(s + 1));
        samples.push(unpack_all(&y));
    }
    Ok(FlowMap {
        dim: d,
        derivative_order,
        times,
        samples,
    })
}

#[derive(Clone, Copy)]
struct SeedLayout {
    dim: usize,
    order: usize,
}

impl SeedLayout {
    fn len(&self) -> usize {
        (0..=self.order + 1).map(|r| self.dim.pow(r as u32)).sum::<usize>() - 1
    }

    fn pack<T: Scalar>(&self, s: &SeedJet<T>, out: &mut Vec<T>) {
        let d = self.dim;
        out.extend(s.point.iter().take(d).copied());
        if self.order >= 1 {
            for r in s.a.iter().take(d) {
                out.extend(r.iter().take(d).copied());
            }
        }
        if self.order >= 2 {
            for m in s.b.iter().take(d) {
                for r in m.iter().take(d) {
                    out.extend(r.iter().take(d).copied());
                }
            }
        }
        if self.order >= 3 {
            for t in s.c.iter().take(d) {
                for m in t.iter().take(d) {
                    for r in m.iter().take(d) {
                        out.extend(r.iter().take(d).copied());
                    }
                }
            }
        }
    }

    fn unpack<T: Scalar>(&self, y: &[T]) -> SeedJet<T> {
        let d = self.dim;
        let mut s = SeedJet::at(d, [T::zero(); 3]);
        let mut it = y.iter().copied();
        for v in s.point.iter_mut().take(d) {
            *v = it.next().unwrap();
        }
        if self.order >= 1 {
            for r in s.a.iter_mut().take(d) {
                for v in r.iter_mut().take(d) {
                    *v = it.next().unwrap();
                }
            }
        }
        if self.order >= 2 {
            for m in s.b.iter_mut().take(d) {
                for r in m.iter_mut().take(d) {
                    for v in r.iter_mut().take(d) {
                        *v = it.next().unwrap();
                    }
                }
            }
        }
        if self.order >= 3 {
            for t in s.c.iter_mut().take(d) {
                for m in t.iter_mut().take(d) {
                    for r in m.iter_mut().take(d) {
                        for v in r.iter_mut().take(d) {
                            *v = it.next().unwrap();
                        }
                    }
                }
            }
        }
        s
    }
}

fn seed_rhs<T: Scalar>(
    cfg: &KernelConfig<T>,
    layout: &FlatLayout,
    phase: &[T],
    sl: &SeedLayout,
    seeds: &[T],
    out: &mut [T],
) {
    let pp = layout.unpack(phase);
    let src = Source::from_phase(&pp);
    let n = sl.len();
    let mut buf = Vec::with_capacity(n);
    for (y, o) in seeds.chunks(n).zip(out.chunks_mut(n)) {
        let s = sl.unpack(y);
        let jet = src.jet(cfg, &s.point, sl.order);
        let rate = seed_rate(sl.dim, sl.order, &jet, &s);
        buf.clear();
        sl.pack(&rate, &mut buf);
        o.copy_from_slice(&buf);
    }
}

/// Time derivative of a seed jet under velocity jet `jet` at its point.
pub(crate) fn seed_rate<T: Scalar>(d: usize, order: usize, jet: &VelocityJet<T>, s: &SeedJet<T>) -> SeedJet<T> {
    let mut r = SeedJet {
        point: jet.u,
        a: zero_mat(),
        b: zero_ten3(),
        c: zero_ten4(),
    };
    let (a, b, c) = (&s.a, &s.b, &s.c);
    if order >= 1 {
        r.a = crate::tensor::mat_mul(d, &jet.du, a);
    }
    if order >= 2 {
        // D²u(A·, A·) contracted once per slot
        let mut ua = zero_ten3();
        for i in 0..d {
            for e in 0..d {
                for x in 0..d {
                    let mut v = T::zero();
                    for f in 0..d {
                        v += jet.d2u[i][e][f] * a[f][x];
                    }
                    ua[i][e][x] = v;
                }
            }
        }
        for i in 0..d {
            for bb in 0..d {
                for cc in 0..d {
                    let mut v = T::zero();
                    for e in 0..d {
                        v += ua[i][e][cc] * a[e][bb] + jet.du[i][e] * b[e][bb][cc];
                    }
                    r.b[i][bb][cc] = v;
                }
            }
        }
        if order >= 3 {
            for i in 0..d {
                for bb in 0..d {
                    for cc in 0..d {
                        for g in 0..d {
                            let mut v = T::zero();
                            for e in 0..d {
                                for f in 0..d {
                                    let mut w = T::zero();
                                    for hh in 0..d {
                                        w += jet.d3u[i][e][f][hh] * a[hh][g];
                                    }
                                    v += w * a[e][bb] * a[f][cc];
                                    v += jet.d2u[i][e][f] * (b[e][bb][g] * a[f][cc] + a[e][bb] * b[f][cc][g]);
                                }
                            }
                            for e in 0..d {
                                v += ua[i][e][g] * b[e][bb][cc] + jet.du[i][e] * c[e][bb][cc][g];
                            }
                            r.c[i][bb][cc][g] = v;
                        }
                    }
                }
            }
        }
    }
    r
}
