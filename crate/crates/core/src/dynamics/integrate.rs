//! Fixed-step classical Runge–Kutta integration on `[0, 1]`.

use crate::error::{Error, Result};
use crate::kernel::{check_distinct, KernelConfig};
use crate::scalar::Scalar;
use crate::state::{FlatLayout, PhasePoint};

use super::rhs::rhs_flat;

/// Pairwise distance below which two particles count as collided.
pub const COLLISION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntegratorConfig {
    steps: usize,
}

impl IntegratorConfig {
    pub fn new(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidConfig("integrator needs at least one step".into()));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_size<T: Scalar>(&self) -> T {
        T::one() / T::from_usize(self.steps)
    }

    /// `tₛ = s/S`.
    pub fn time<T: Scalar>(&self, s: usize) -> T {
        T::from_usize(s) / T::from_usize(self.steps)
    }
}

/// Phase states at the `S + 1` grid times, stored flat.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub layout: FlatLayout,
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn point(&self, s: usize) -> PhasePoint<T> {
        self.layout.unpack(&self.states[s])
    }

    pub fn first(&self) -> PhasePoint<T> {
        self.point(0)
    }

    pub fn last(&self) -> PhasePoint<T> {
        self.point(self.states.len() - 1)
    }
}

/// Stage inputs of one RK4 step, `y₁ = y`, `y₂ = y + h/2 k₁`, `y₃ = y + h/2 k₂`, `y₄ = y + h k₃`.
#[derive(Clone, Debug)]
pub struct Stages<T> {
    pub inputs: [Vec<T>; 4],
}

impl<T> Default for Stages<T> {
    fn default() -> Self {
        Stages {
            inputs: [Vec::new(), Vec::new(), Vec::new(), Vec::new()],
        }
    }
}

/// One classical RK4 step of `ẏ = f(y)`.
pub fn rk4_step<T: Scalar, F>(mut f: F, y: &[T], h: T, out: &mut [T], mut stages: Option<&mut Stages<T>>)
where
    F: FnMut(&[T], &mut [T]),
{
    let n = y.len();
    let half = h / T::from_f64(2.0);
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    f(y, &mut k1);
    if let Some(s) = stages.as_deref_mut() {
        s.inputs[0] = y.to_vec();
    }
    for i in 0..n {
        tmp[i] = y[i] + half * k1[i];
    }
    f(&tmp, &mut k2);
    if let Some(s) = stages.as_deref_mut() {
        s.inputs[1] = tmp.clone();
    }
    for i in 0..n {
        tmp[i] = y[i] + half * k2[i];
    }
    f(&tmp, &mut k3);
    if let Some(s) = stages.as_deref_mut() {
        s.inputs[2] = tmp.clone();
    }
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(&tmp, &mut k4);
    if let Some(s) = stages {
        s.inputs[3] = tmp;
    }
    let sixth = h / T::from_f64(6.0);
    let two = T::from_f64(2.0);
    for i in 0..n {
        out[i] = y[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
}

/// Integrate the geodesic equations from `t = 0` to `t = 1`.
pub fn integrate<T: Scalar>(cfg: &KernelConfig<T>, icfg: &IntegratorConfig, x0: &PhasePoint<T>) -> Result<Trajectory<T>> {
    integrate_with_stages(cfg, icfg, x0, None)
}

/// As [`integrate`], optionally recording every step's stage inputs.
pub fn integrate_with_stages<T: Scalar>(
    cfg: &KernelConfig<T>,
    icfg: &IntegratorConfig,
    x0: &PhasePoint<T>,
    mut stages: Option<&mut Vec<Stages<T>>>,
) -> Result<Trajectory<T>> {
    check_input(cfg, x0)?;
    let layout = x0.layout();
    let h = icfg.step_size::<T>();
    let mut states = Vec::with_capacity(icfg.steps() + 1);
    let mut times = Vec::with_capacity(icfg.steps() + 1);
    states.push(x0.to_flat());
    times.push(T::zero());
    for s in 0..icfg.steps() {
        let mut next = vec![T::zero(); layout.len()];
        let mut st = Stages::default();
        rk4_step(
            |y, out| rhs_flat(cfg, &layout, y, out),
            &states[s],
            h,
            &mut next,
            stages.as_ref().map(|_| &mut st),
        );
        if let Some(all) = stages.as_deref_mut() {
            all.push(st);
        }
        check_step(&layout, &next, s + 1)?;
        states.push(next);
        times.push(icfg.time(s + 1));
    }
    Ok(Trajectory { layout, times, states })
}

pub(crate) fn check_input<T: Scalar>(cfg: &KernelConfig<T>, x0: &PhasePoint<T>) -> Result<()> {
    if cfg.dim() != x0.dim() {
        return Err(Error::Shape(format!(
            "kernel dimension {} differs from phase point dimension {}",
            cfg.dim(),
            x0.dim()
        )));
    }
    check_distinct(x0.dim(), x0.state.positions())
}

/// Reject non-finite values and collided particles after a step.
pub(crate) fn check_step<T: Scalar>(layout: &FlatLayout, y: &[T], step: usize) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp { step });
    }
    let d = layout.dim;
    let tol = COLLISION_TOLERANCE * COLLISION_TOLERANCE;
    for i in 0..layout.n {
        for j in i + 1..layout.n {
            let mut r2 = 0.0;
            for a in 0..d {
                let diff = y[i * d + a].to_f64() - y[j * d + a].to_f64();
                r2 += diff * diff;
            }
            if r2 < tol {
                return Err(Error::Collision { step, i, j });
            }
        }
    }
    Ok(())
}
