//! Geodesic shooting: `E(p₀) = H(q₀, p₀) + w F(q(1))` and its exact gradient.
//!
//! The gradient differentiates the RK4 recursion itself. With stage inputs
//! `y₁ … y₄` of a step and `λ` the adjoint of its output,
//!
//! ```text
//! ȳ₄ = J(y₄)ᵀ (h/6 λ)
//! ȳ₃ = J(y₃)ᵀ (h/3 λ + h ȳ₄)
//! ȳ₂ = J(y₂)ᵀ (h/3 λ + h/2 ȳ₃)
//! ȳ₁ = J(y₁)ᵀ (h/6 λ + h/2 ȳ₂)
//! λ ← λ + ȳ₁ + ȳ₂ + ȳ₃ + ȳ₄
//! ```

use crate::dynamics::hamiltonian::{hamiltonian, hamiltonian_momentum_gradient};
use crate::dynamics::integrate::{integrate, integrate_with_stages, IntegratorConfig, Stages, Trajectory};
use crate::dynamics::rhs::rhs_vjp;
use crate::error::{Error, Result};
use crate::kernel::KernelConfig;
use crate::scalar::Scalar;
use crate::state::{FlatLayout, JetMomentum, JetState, PhasePoint};

use super::target::{dissimilarity, dissimilarity_gradient, Target};

#[derive(Clone, Debug)]
pub struct ShootingProblem<T> {
    pub initial: JetState<T>,
    pub target: Target<T>,
    pub kernel: KernelConfig<T>,
    pub integrator: IntegratorConfig,
}

/// Energy split into its two terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts<T> {
    pub kinetic: T,
    pub dissimilarity: T,
    pub total: T,
}

impl<T: Scalar> ShootingProblem<T> {
    pub fn new(initial: JetState<T>, target: Target<T>, kernel: KernelConfig<T>, integrator: IntegratorConfig) -> Result<Self> {
        if kernel.dim() != initial.dim() {
            return Err(Error::Shape(format!(
                "kernel dimension {} differs from state dimension {}",
                kernel.dim(),
                initial.dim()
            )));
        }
        target.check_state(&initial)?;
        Ok(Self {
            initial,
            target,
            kernel,
            integrator,
        })
    }

    pub fn layout(&self) -> FlatLayout {
        FlatLayout::new(self.initial.dim(), self.initial.order(), self.initial.len())
    }

    pub fn phase_point(&self, p0: &JetMomentum<T>) -> Result<PhasePoint<T>> {
        PhasePoint::new(self.initial.clone(), p0.clone())
    }

    /// Geodesic from `(q₀, p₀)`.
    pub fn shoot(&self, p0: &JetMomentum<T>) -> Result<Trajectory<T>> {
        integrate(&self.kernel, &self.integrator, &self.phase_point(p0)?)
    }

    pub fn energy_parts(&self, p0: &JetMomentum<T>) -> Result<EnergyParts<T>> {
        let x0 = self.phase_point(p0)?;
        let kinetic = hamiltonian(&self.kernel, &x0)?;
        let tr = integrate(&self.kernel, &self.integrator, &x0)?;
        let f = dissimilarity(&self.target, &tr.last().state)?;
        Ok(EnergyParts {
            kinetic,
            dissimilarity: f,
            total: kinetic + self.target.weight() * f,
        })
    }
}

pub fn shooting_energy<T: Scalar>(prob: &ShootingProblem<T>, p0: &JetMomentum<T>) -> Result<T> {
    Ok(prob.energy_parts(p0)?.total)
}

/// Energy and its gradient with respect to `p₀` in dense `(p, μ¹, μ²)` storage.
pub fn shooting_energy_and_gradient<T: Scalar>(prob: &ShootingProblem<T>, p0: &JetMomentum<T>) -> Result<(EnergyParts<T>, JetMomentum<T>)> {
    let x0 = prob.phase_point(p0)?;
    let layout = x0.layout();
    let w = prob.target.weight();
    let kinetic = hamiltonian(&prob.kernel, &x0)?;
    let mut stages = Vec::with_capacity(prob.integrator.steps());
    let tr = integrate_with_stages(&prob.kernel, &prob.integrator, &x0, Some(&mut stages))?;
    let end = tr.last();
    let f = dissimilarity(&prob.target, &end.state)?;
    let df = dissimilarity_gradient(&prob.target, &end.state)?;
    let sl = layout.state_len();
    let mut lambda = vec![T::zero(); layout.len()];
    layout.pack_momentum(&df, &mut lambda[..sl]);
    for v in &mut lambda[..sl] {
        *v *= w;
    }
    let h = prob.integrator.step_size::<T>();
    for st in stages.iter().rev() {
        lambda = step_adjoint(&prob.kernel, &layout, st, h, &lambda);
    }
    let dh = hamiltonian_momentum_gradient(&prob.kernel, &x0)?;
    for (l, g) in lambda[sl..].iter_mut().zip(&dh) {
        *l += *g;
    }
    let grad = layout.unpack_momentum(&lambda[sl..]);
    let grad = JetMomentum::new(grad.dim(), grad.order(), grad.p().to_vec(), grad.mu1().to_vec(), grad.mu2().to_vec())?;
    let parts = EnergyParts {
        kinetic,
        dissimilarity: f,
        total: kinetic + w * f,
    };
    Ok((parts, grad))
}

pub fn shooting_gradient<T: Scalar>(prob: &ShootingProblem<T>, p0: &JetMomentum<T>) -> Result<JetMomentum<T>> {
    Ok(shooting_energy_and_gradient(prob, p0)?.1)
}

fn step_adjoint<T: Scalar>(cfg: &KernelConfig<T>, layout: &FlatLayout, st: &Stages<T>, h: T, lambda: &[T]) -> Vec<T> {
    let n = lambda.len();
    let sixth = h / T::from_f64(6.0);
    let third = h / T::from_f64(3.0);
    let half = h / T::from_f64(2.0);
    let mut bar = [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
    let mut seed = vec![T::zero(); n];
    for i in 0..n {
        seed[i] = sixth * lambda[i];
    }
    rhs_vjp(cfg, layout, &st.inputs[3], &seed, &mut bar[3]);
    for i in 0..n {
        seed[i] = third * lambda[i] + h * bar[3][i];
    }
    rhs_vjp(cfg, layout, &st.inputs[2], &seed, &mut bar[2]);
    for i in 0..n {
        seed[i] = third * lambda[i] + half * bar[2][i];
    }
    rhs_vjp(cfg, layout, &st.inputs[1], &seed, &mut bar[1]);
    for i in 0..n {
        seed[i] = sixth * lambda[i] + half * bar[1][i];
    }
    rhs_vjp(cfg, layout, &st.inputs[0], &seed, &mut bar[0]);
    (0..n).map(|i| lambda[i] + bar[0][i] + bar[1][i] + bar[2][i] + bar[3][i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::target::LandmarkTarget;

    fn one_landmark(y: [f64; 3], w: f64, sigma: f64) -> ShootingProblem<f64> {
        ShootingProblem::new(
            JetState::from_positions(2, vec![[0.0; 3]]).unwrap(),
            Target::Landmarks(LandmarkTarget::new(vec![y], w).unwrap()),
            KernelConfig::new(sigma, 2).unwrap(),
            IntegratorConfig::new(10).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn no_motion_energy() {
        let prob = one_landmark([3.0, 4.0, 0.0], 1.0, 1.0);
        let e = shooting_energy(&prob, &JetMomentum::zeros(2, crate::JetOrder::Zero, 1)).unwrap();
        assert_eq!(e, 25.0);
    }

    #[test]
    fn closed_form_minimizer_is_stationary() {
        let w = 1.0;
        let y = [0.3, -0.2, 0.0];
        let prob = one_landmark(y, w, 50.0);
        let c = 2.0 * w / (1.0 + 2.0 * w);
        let p0 = JetMomentum::from_p(2, vec![[c * y[0], c * y[1], 0.0]]).unwrap();
        let g = shooting_gradient(&prob, &p0).unwrap();
        assert!(g.norm() <= 1e-10, "{}", g.norm());
    }
}
