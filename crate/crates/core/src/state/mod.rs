//! Points of the reduced configuration spaces and their momenta.
//!
//! A [`JetState`] of order `k` carries, per particle, a position and (for
//! `k ≥ 1`) the local Jacobian and (for `k = 2`) the local Hessian of the
//! warp. A [`JetMomentum`] holds the coefficients of the distributional
//! momentum
//!
//! ```text
//! ⟨m, w⟩ = Σⱼ pⱼ·w(qⱼ) + Σ μ¹ⱼ[a][b] ∂_b w_a(qⱼ) + Σ μ²ⱼ[a][b][c] ∂_b∂_c w_a(qⱼ)
//! ```
//!
//! Small tensors are padded to three slots; two-dimensional data keeps the
//! unused slots at zero.

mod io;

pub use io::{
    format_float, format_landmarks, format_phase_point, parse_landmarks, parse_phase_point,
    read_landmarks, read_state, write_landmarks, write_state, LANDMARK_HEADER, PHASE_HEADER,
};

use crate::error::{Error, Result};
use crate::kernel::check_distinct;
use crate::scalar::Scalar;
use crate::tensor::{
    asymmetry, det, identity, symmetrize_last_two, zero_mat, zero_ten3, Mat3, Ten3, Vec3,
};

/// Relative tolerance under which a tensor counts as symmetric on ingest.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JetOrder {
    Zero = 0,
    One = 1,
    Two = 2,
}

impl JetOrder {
    pub fn as_usize(self) -> usize {
        self as usize
    }

    pub fn from_usize(k: usize) -> Result<Self> {
        match k {
            0 => Ok(JetOrder::Zero),
            1 => Ok(JetOrder::One),
            2 => Ok(JetOrder::Two),
            _ => Err(Error::InvalidConfig(format!("jet order must be 0, 1 or 2, got {k}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JetState<T> {
    dim: usize,
    order: JetOrder,
    positions: Vec<Vec3<T>>,
    jacobians: Vec<Mat3<T>>,
    hessians: Vec<Ten3<T>>,
}

impl<T: Scalar> JetState<T> {
    /// Validated state. `jacobians` must be empty for `k = 0`, `hessians`
    /// empty for `k < 2`. Hessians are symmetrized in their last two slots.
    pub fn new(
        dim: usize,
        order: JetOrder,
        positions: Vec<Vec3<T>>,
        jacobians: Vec<Mat3<T>>,
        mut hessians: Vec<Ten3<T>>,
    ) -> Result<Self> {
        check_dim(dim)?;
        let n = positions.len();
        let want_jac = if order >= JetOrder::One { n } else { 0 };
        let want_hess = if order >= JetOrder::Two { n } else { 0 };
        if jacobians.len() != want_jac || hessians.len() != want_hess {
            return Err(Error::Shape(format!(
                "order {} state with {n} particles needs {want_jac} jacobians and {want_hess} hessians, got {} and {}",
                order.as_usize(),
                jacobians.len(),
                hessians.len()
            )));
        }
        for v in &positions {
            check_padding_vec(dim, v)?;
        }
        check_distinct(dim, &positions)?;
        for (j, m) in jacobians.iter().enumerate() {
            if det(dim, m) == T::zero() {
                return Err(Error::SingularJacobian(j));
            }
        }
        for h in hessians.iter_mut() {
            symmetrize_last_two(dim, h);
        }
        Ok(Self {
            dim,
            order,
            positions,
            jacobians,
            hessians,
        })
    }

    /// Order-0 state from positions alone.
    pub fn from_positions(dim: usize, positions: Vec<Vec3<T>>) -> Result<Self> {
        Self::new(dim, JetOrder::Zero, positions, Vec::new(), Vec::new())
    }

    /// Positions with identity Jacobians and zero Hessians up to `order`.
    pub fn with_identity_jets(dim: usize, order: JetOrder, positions: Vec<Vec3<T>>) -> Result<Self> {
        let n = positions.len();
        let jac = if order >= JetOrder::One { vec![identity(dim); n] } else { Vec::new() };
        let hess = if order >= JetOrder::Two { vec![zero_ten3(); n] } else { Vec::new() };
        Self::new(dim, order, positions, jac, hess)
    }

    /// Order-0 state without the distinctness check (harness use only).
    pub fn from_positions_unchecked(dim: usize, positions: Vec<Vec3<T>>) -> Self {
        Self {
            dim,
            order: JetOrder::Zero,
            positions,
            jacobians: Vec::new(),
            hessians: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> JetOrder {
        self.order
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3<T>] {
        &self.positions
    }

    pub fn jacobians(&self) -> &[Mat3<T>] {
        &self.jacobians
    }

    pub fn hessians(&self) -> &[Ten3<T>] {
        &self.hessians
    }

    /// Shift every position by `c`.
    pub fn translated(&self, c: &Vec3<T>) -> Self {
        let mut out = self.clone();
        for q in out.positions.iter_mut() {
            for a in 0..self.dim {
                q[a] += c[a];
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JetMomentum<T> {
    dim: usize,
    order: JetOrder,
    p: Vec<Vec3<T>>,
    mu1: Vec<Mat3<T>>,
    mu2: Vec<Ten3<T>>,
}

impl<T: Scalar> JetMomentum<T> {
    /// `mu2` is symmetrized in its last two slots.
    pub fn new(
        dim: usize,
        order: JetOrder,
        p: Vec<Vec3<T>>,
        mu1: Vec<Mat3<T>>,
        mut mu2: Vec<Ten3<T>>,
    ) -> Result<Self> {
        check_dim(dim)?;
        let n = p.len();
        let want1 = if order >= JetOrder::One { n } else { 0 };
        let want2 = if order >= JetOrder::Two { n } else { 0 };
        if mu1.len() != want1 || mu2.len() != want2 {
            return Err(Error::Shape(format!(
                "order {} momentum with {n} particles needs {want1} mu1 and {want2} mu2 blocks, got {} and {}",
                order.as_usize(),
                mu1.len(),
                mu2.len()
            )));
        }
        for t in mu2.iter_mut() {
            symmetrize_last_two(dim, t);
        }
        Ok(Self { dim, order, p, mu1, mu2 })
    }

    pub fn from_p(dim: usize, p: Vec<Vec3<T>>) -> Result<Self> {
        Self::new(dim, JetOrder::Zero, p, Vec::new(), Vec::new())
    }

    pub fn zeros(dim: usize, order: JetOrder, n: usize) -> Self {
        Self {
            dim,
            order,
            p: vec![[T::zero(); 3]; n],
            mu1: if order >= JetOrder::One { vec![zero_mat(); n] } else { Vec::new() },
            mu2: if order >= JetOrder::Two { vec![zero_ten3(); n] } else { Vec::new() },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> JetOrder {
        self.order
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn p(&self) -> &[Vec3<T>] {
        &self.p
    }

    pub fn mu1(&self) -> &[Mat3<T>] {
        &self.mu1
    }

    pub fn mu2(&self) -> &[Ten3<T>] {
        &self.mu2
    }

    /// Multiply every coefficient by `s`.
    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        let d = self.dim;
        for v in out.p.iter_mut() {
            v.iter_mut().take(d).for_each(|x| *x *= s);
        }
        for m in out.mu1.iter_mut() {
            m.iter_mut().take(d).flat_map(|r| r.iter_mut().take(d)).for_each(|x| *x *= s);
        }
        for t in out.mu2.iter_mut() {
            for m in t.iter_mut().take(d) {
                m.iter_mut().take(d).flat_map(|r| r.iter_mut().take(d)).for_each(|x| *x *= s);
            }
        }
        out
    }

    /// Euclidean norm of every coefficient.
    pub fn norm(&self) -> T {
        let layout = FlatLayout::new(self.dim, self.order, self.len());
        let mut buf = vec![T::zero(); layout.momentum_len()];
        layout.pack_momentum(self, &mut buf);
        buf.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }
}

/// A point `(q, m)` of the reduced cotangent bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<T> {
    pub state: JetState<T>,
    pub momentum: JetMomentum<T>,
}

impl<T: Scalar> PhasePoint<T> {
    pub fn new(state: JetState<T>, momentum: JetMomentum<T>) -> Result<Self> {
        if state.dim != momentum.dim || state.order != momentum.order || state.len() != momentum.len() {
            return Err(Error::Shape(format!(
                "state (d={}, k={}, N={}) and momentum (d={}, k={}, N={}) disagree",
                state.dim,
                state.order.as_usize(),
                state.len(),
                momentum.dim,
                momentum.order.as_usize(),
                momentum.len()
            )));
        }
        Ok(Self { state, momentum })
    }

    /// Zero momentum at `state`.
    pub fn at_rest(state: JetState<T>) -> Self {
        let momentum = JetMomentum::zeros(state.dim, state.order, state.len());
        Self { state, momentum }
    }

    pub fn dim(&self) -> usize {
        self.state.dim
    }

    pub fn order(&self) -> JetOrder {
        self.state.order
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    pub fn layout(&self) -> FlatLayout {
        FlatLayout::new(self.dim(), self.order(), self.len())
    }

    pub fn to_flat(&self) -> Vec<T> {
        let layout = self.layout();
        let mut out = vec![T::zero(); layout.len()];
        layout.pack(self, &mut out);
        out
    }
}

/// Embed into or truncate to another jet order. New Jacobian slots are the
/// identity, new Hessian and momentum slots are zero.
pub fn project_order<T: Scalar>(x: &PhasePoint<T>, target: JetOrder) -> PhasePoint<T> {
    let n = x.len();
    let d = x.dim();
    let s = &x.state;
    let m = &x.momentum;
    let jacobians = if target >= JetOrder::One {
        if s.order >= JetOrder::One { s.jacobians.clone() } else { vec![identity(d); n] }
    } else {
        Vec::new()
    };
    let hessians = if target >= JetOrder::Two {
        if s.order >= JetOrder::Two { s.hessians.clone() } else { vec![zero_ten3(); n] }
    } else {
        Vec::new()
    };
    let mu1 = if target >= JetOrder::One {
        if m.order >= JetOrder::One { m.mu1.clone() } else { vec![zero_mat(); n] }
    } else {
        Vec::new()
    };
    let mu2 = if target >= JetOrder::Two {
        if m.order >= JetOrder::Two { m.mu2.clone() } else { vec![zero_ten3(); n] }
    } else {
        Vec::new()
    };
    PhasePoint {
        state: JetState {
            dim: d,
            order: target,
            positions: s.positions.clone(),
            jacobians,
            hessians,
        },
        momentum: JetMomentum {
            dim: d,
            order: target,
            p: m.p.clone(),
            mu1,
            mu2,
        },
    }
}

/// Offsets of a phase point packed into one flat vector:
/// positions, jacobians, hessians, then p, mu1, mu2, each particle-major
/// with only the leading `dim` slots stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlatLayout {
    pub dim: usize,
    pub order: JetOrder,
    pub n: usize,
}

impl FlatLayout {
    pub fn new(dim: usize, order: JetOrder, n: usize) -> Self {
        Self { dim, order, n }
    }

    fn jac_len(&self) -> usize {
        if self.order >= JetOrder::One { self.n * self.dim * self.dim } else { 0 }
    }

    fn hess_len(&self) -> usize {
        if self.order >= JetOrder::Two { self.n * self.dim.pow(3) } else { 0 }
    }

    pub fn state_len(&self) -> usize {
        self.n * self.dim + self.jac_len() + self.hess_len()
    }

    pub fn momentum_len(&self) -> usize {
        self.state_len()
    }

    pub fn len(&self) -> usize {
        2 * self.state_len()
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn positions_offset(&self) -> usize {
        0
    }

    pub fn jacobians_offset(&self) -> usize {
        self.n * self.dim
    }

    pub fn hessians_offset(&self) -> usize {
        self.jacobians_offset() + self.jac_len()
    }

    pub fn momentum_offset(&self) -> usize {
        self.state_len()
    }

    pub fn pack<T: Scalar>(&self, x: &PhasePoint<T>, out: &mut [T]) {
        assert_eq!(out.len(), self.len());
        let (state, momentum) = out.split_at_mut(self.state_len());
        self.pack_state(&x.state, state);
        self.pack_momentum(&x.momentum, momentum);
    }

    pub fn pack_state<T: Scalar>(&self, s: &JetState<T>, out: &mut [T]) {
        pack_blocks(self, &s.positions, &s.jacobians, &s.hessians, out);
    }

    pub fn pack_momentum<T: Scalar>(&self, m: &JetMomentum<T>, out: &mut [T]) {
        pack_blocks(self, &m.p, &m.mu1, &m.mu2, out);
    }

    /// Inverse of [`FlatLayout::pack`] without invariant checks.
    pub fn unpack<T: Scalar>(&self, flat: &[T]) -> PhasePoint<T> {
        assert_eq!(flat.len(), self.len());
        let (state, momentum) = flat.split_at(self.state_len());
        let (positions, jacobians, hessians) = unpack_blocks(self, state);
        let (p, mu1, mu2) = unpack_blocks(self, momentum);
        PhasePoint {
            state: JetState {
                dim: self.dim,
                order: self.order,
                positions,
                jacobians,
                hessians,
            },
            momentum: JetMomentum {
                dim: self.dim,
                order: self.order,
                p,
                mu1,
                mu2,
            },
        }
    }

    /// Momentum slice of a flat vector as a [`JetMomentum`].
    pub fn unpack_momentum<T: Scalar>(&self, flat: &[T]) -> JetMomentum<T> {
        assert_eq!(flat.len(), self.momentum_len());
        let (p, mu1, mu2) = unpack_blocks(self, flat);
        JetMomentum {
            dim: self.dim,
            order: self.order,
            p,
            mu1,
            mu2,
        }
    }

    /// State slice of a flat vector as a [`JetState`], unchecked.
    pub fn unpack_state<T: Scalar>(&self, flat: &[T]) -> JetState<T> {
        assert_eq!(flat.len(), self.state_len());
        let (positions, jacobians, hessians) = unpack_blocks(self, flat);
        JetState {
            dim: self.dim,
            order: self.order,
            positions,
            jacobians,
            hessians,
        }
    }
}

fn pack_blocks<T: Scalar>(
    layout: &FlatLayout,
    v: &[Vec3<T>],
    m: &[Mat3<T>],
    t: &[Ten3<T>],
    out: &mut [T],
) {
    let d = layout.dim;
    let mut k = 0;
    for x in v {
        for &c in x.iter().take(d) {
            out[k] = c;
            k += 1;
        }
    }
    for x in m {
        for row in x.iter().take(d) {
            for &c in row.iter().take(d) {
                out[k] = c;
                k += 1;
            }
        }
    }
    for x in t {
        for mat in x.iter().take(d) {
            for row in mat.iter().take(d) {
                for &c in row.iter().take(d) {
                    out[k] = c;
                    k += 1;
                }
            }
        }
    }
    debug_assert_eq!(k, out.len());
}

type Blocks<T> = (Vec<Vec3<T>>, Vec<Mat3<T>>, Vec<Ten3<T>>);

fn unpack_blocks<T: Scalar>(layout: &FlatLayout, flat: &[T]) -> Blocks<T> {
    let d = layout.dim;
    let n = layout.n;
    let mut k = 0;
    let mut next = || {
        let v = flat[k];
        k += 1;
        v
    };
    let mut v = vec![[T::zero(); 3]; n];
    for x in v.iter_mut() {
        for c in x.iter_mut().take(d) {
            *c = next();
        }
    }
    let nm = if layout.order >= JetOrder::One { n } else { 0 };
    let mut m = vec![zero_mat(); nm];
    for x in m.iter_mut() {
        for row in x.iter_mut().take(d) {
            for c in row.iter_mut().take(d) {
                *c = next();
            }
        }
    }
    let nt = if layout.order >= JetOrder::Two { n } else { 0 };
    let mut t = vec![zero_ten3(); nt];
    for x in t.iter_mut() {
        for mat in x.iter_mut().take(d) {
            for row in mat.iter_mut().take(d) {
                for c in row.iter_mut().take(d) {
                    *c = next();
                }
            }
        }
    }
    (v, m, t)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("spatial dimension must be 2 or 3, got {dim}")))
    }
}

fn check_padding_vec<T: Scalar>(dim: usize, v: &Vec3<T>) -> Result<()> {
    for (a, c) in v.iter().enumerate() {
        if !c.is_finite() {
            return Err(Error::NonFinite(format!("position component {a}")));
        }
        if a >= dim && *c != T::zero() {
            return Err(Error::Shape(format!("position has nonzero slot {a} in dimension {dim}")));
        }
    }
    Ok(())
}

/// Largest asymmetry of `mu2` relative to its magnitude, per particle.
pub(crate) fn relative_asymmetry<T: Scalar>(dim: usize, t: &Ten3<T>) -> f64 {
    let scale = t
        .iter()
        .flat_map(|m| m.iter().flat_map(|r| r.iter()))
        .fold(0.0_f64, |acc, v| acc.max(v.to_f64().abs()));
    asymmetry(dim, t) / (1.0 + scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PhasePoint<f64> {
        let state = JetState::from_positions(2, vec![[0.0, 1.0, 0.0], [2.0, -1.0, 0.0]]).unwrap();
        let mom = JetMomentum::from_p(2, vec![[0.5, 0.25, 0.0], [-1.0, 3.0, 0.0]]).unwrap();
        PhasePoint::new(state, mom).unwrap()
    }

    #[test]
    fn raise_pads_identity_and_zero() {
        let x = sample();
        let up = project_order(&x, JetOrder::One);
        assert_eq!(up.state.jacobians(), &[identity::<f64>(2); 2]);
        assert!(up.momentum.mu1().iter().all(|m| *m == zero_mat()));
        let up2 = project_order(&x, JetOrder::Two);
        assert_eq!(up2.state.hessians().len(), 2);
        assert_eq!(up2.momentum.mu2().len(), 2);
    }

    #[test]
    fn raise_then_lower_is_identity() {
        let x = sample();
        for k in [JetOrder::One, JetOrder::Two] {
            assert_eq!(project_order(&project_order(&x, k), JetOrder::Zero), x);
        }
    }

    #[test]
    fn lowering_truncates() {
        let x = project_order(&sample(), JetOrder::One);
        let down = project_order(&x, JetOrder::Zero);
        assert_eq!(down.state.positions(), sample().state.positions());
        assert_eq!(down.momentum.p(), sample().momentum.p());
    }

    #[test]
    fn duplicate_positions_rejected() {
        let r = JetState::from_positions(2, vec![[1.0, 2.0, 0.0], [1.0, 2.0, 0.0]]);
        assert!(matches!(r, Err(Error::CoincidentParticles { i: 0, j: 1 })));
    }

    #[test]
    fn singular_jacobian_rejected() {
        let r = JetState::new(
            2,
            JetOrder::One,
            vec![[0.0; 3]],
            vec![[[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0; 3]]],
            vec![],
        );
        assert!(matches!(r, Err(Error::SingularJacobian(0))));
    }

    #[test]
    fn empty_state_is_valid() {
        let s = JetState::<f64>::from_positions(3, vec![]).unwrap();
        let x = PhasePoint::at_rest(s);
        assert!(x.is_empty());
        assert_eq!(x.to_flat().len(), 0);
    }

    #[test]
    fn mu2_symmetrized_on_construction() {
        let mut t = zero_ten3::<f64>();
        t[0][0][1] = 1.0;
        let m = JetMomentum::new(2, JetOrder::Two, vec![[0.0; 3]], vec![zero_mat()], vec![t]).unwrap();
        assert_eq!(m.mu2()[0][0][0][1], 0.5);
        assert_eq!(m.mu2()[0][0][1][0], 0.5);
    }

    #[test]
    fn flat_round_trip() {
        let x = project_order(&sample(), JetOrder::Two);
        let flat = x.to_flat();
        assert_eq!(flat.len(), x.layout().len());
        assert_eq!(x.layout().unpack(&flat), x);
    }

    #[test]
    fn mismatched_phase_point_rejected() {
        let s = JetState::from_positions(2, vec![[0.0; 3]]).unwrap();
        let m = JetMomentum::<f64>::zeros(2, JetOrder::One, 1);
        assert!(PhasePoint::new(s, m).is_err());
    }
}
