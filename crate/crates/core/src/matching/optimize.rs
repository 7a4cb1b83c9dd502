//! Minimization of the shooting energy over the initial momentum.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::JetMomentum;

use super::shooting::{shooting_energy_and_gradient, EnergyParts, ShootingProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Steepest descent with Armijo backtracking.
    GradientDescent,
    /// Limited-memory BFGS with the same line search.
    Lbfgs { memory: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub method: Method,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Step shrink factor while backtracking.
    pub shrink: f64,
    pub max_backtracks: usize,
    /// First trial step.
    pub initial_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iters: 200,
            grad_tol: 1e-6,
            method: Method::Lbfgs { memory: 8 },
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
            initial_step: 1.0,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.grad_tol > 0.0) {
            return bad("gradient tolerance must be positive");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("Armijo constant must lie in (0, 1)");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink factor must lie in (0, 1)");
        }
        if !(self.initial_step > 0.0) {
            return bad("initial step must be positive");
        }
        if let Method::Lbfgs { memory: 0 } = self.method {
            return bad("L-BFGS memory must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    BudgetExhausted,
    /// No step along the search direction decreased the energy enough.
    LineSearchFailed,
}

/// Per-iteration record; entry `0` is the starting point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub energies: Vec<f64>,
    pub dissimilarities: Vec<f64>,
    pub grad_norms: Vec<f64>,
    /// Accepted step length of each iteration.
    pub step_sizes: Vec<f64>,
    /// Energy evaluations including line-search trials.
    pub evaluations: usize,
}

impl Diagnostics {
    pub fn iterations(&self) -> usize {
        self.step_sizes.len()
    }
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub p0: JetMomentum<T>,
    pub status: Status,
    pub diagnostics: Diagnostics,
}

/// Minimize `E(p₀)` from `p0_init`.
pub fn solve<T: Scalar>(
    prob: &ShootingProblem<T>,
    p0_init: &JetMomentum<T>,
    opt: &OptimizerSettings,
) -> Result<Solution<T>> {
    opt.validate()?;
    let layout = prob.layout();
    let to_flat = |m: &JetMomentum<T>| -> Vec<f64> {
        let mut v = vec![T::zero(); layout.momentum_len()];
        layout.pack_momentum(m, &mut v);
        v.iter().map(|x| x.to_f64()).collect()
    };
    let from_flat = |v: &[f64]| -> Result<JetMomentum<T>> {
        let raw: Vec<T> = v.iter().map(|&x| T::from_f64(x)).collect();
        let m = layout.unpack_momentum(&raw);
        JetMomentum::new(m.dim(), m.order(), m.p().to_vec(), m.mu1().to_vec(), m.mu2().to_vec())
    };
    let eval = |v: &[f64]| -> Result<(EnergyParts<T>, Vec<f64>)> {
        let m = from_flat(v)?;
        let (e, g) = shooting_energy_and_gradient(prob, &m)?;
        Ok((e, to_flat(&g)))
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut x = to_flat(p0_init);
    let (mut e, mut g) = eval(&x)?;
    let mut diag = Diagnostics {
        energies: vec![e.total.to_f64()],
        dissimilarities: vec![e.dissimilarity.to_f64()],
        grad_norms: vec![norm(&g)],
        step_sizes: Vec::new(),
        evaluations: 1,
    };
    let mut history: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut step = opt.initial_step;
    let mut status = Status::BudgetExhausted;
    for _ in 0..=opt.max_iters {
        if norm(&g) <= opt.grad_tol {
            status = Status::Converged;
            break;
        }
        if diag.iterations() == opt.max_iters {
            break;
        }
        let mut dir = match opt.method {
            Method::GradientDescent => g.iter().map(|v| -v).collect::<Vec<_>>(),
            Method::Lbfgs { .. } => two_loop(&g, &history),
        };
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let trial0 = match opt.method {
            Method::Lbfgs { .. } if !history.is_empty() => 1.0,
            _ => step,
        };
        let e0 = e.total.to_f64();
        let mut alpha = trial0;
        let mut accepted = None;
        for _ in 0..opt.max_backtracks {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            diag.evaluations += 1;
            match eval(&xn) {
                // change below energy resolution: judge by the gradient instead
                Ok((en, gn)) if (en.total.to_f64() - e0).abs() <= 1e-13 * e0.abs().max(1.0) => {
                    let curvature = dot(&gn, &dir);
                    if en.total.to_f64() <= e0 && curvature >= 0.9 * slope && curvature <= -0.8 * slope {
                        accepted = Some((xn, en, gn));
                        break;
                    }
                    alpha *= opt.shrink;
                }
                Ok((en, gn)) if en.total.to_f64() <= e0 + opt.armijo * alpha * slope => {
                    accepted = Some((xn, en, gn));
                    break;
                }
                Ok(_) | Err(Error::BlowUp { .. }) | Err(Error::Collision { .. }) | Err(Error::NonFinite(_)) => {
                    alpha *= opt.shrink;
                }
                Err(other) => return Err(other),
            }
        }
        let Some((xn, en, gn)) = accepted else {
            status = Status::LineSearchFailed;
            break;
        };
        if let Method::Lbfgs { memory } = opt.method {
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            if dot(&s, &y) > 1e-300 {
                history.push_back((s, y));
                if history.len() > memory {
                    history.pop_front();
                }
            }
        }
        step = match opt.method {
            Method::GradientDescent => alpha / opt.shrink,
            Method::Lbfgs { .. } => opt.initial_step,
        };
        diag.step_sizes.push(alpha);
        x = xn;
        e = en;
        g = gn;
        diag.energies.push(e.total.to_f64());
        diag.dissimilarities.push(e.dissimilarity.to_f64());
        diag.grad_norms.push(norm(&g));
    }
    Ok(Solution {
        p0: from_flat(&x)?,
        status,
        diagnostics: diag,
    })
}

/// L-BFGS direction `−H g` from stored pairs `(s, y)`, oldest first.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    if let Some((s, y)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y), (a, rho)) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::IntegratorConfig;
    use crate::matching::target::{LandmarkTarget, Target};
    use crate::{JetOrder, JetState, KernelConfig};

    fn problem(y: [f64; 3], w: f64) -> ShootingProblem<f64> {
        ShootingProblem::new(
            JetState::from_positions(2, vec![[0.0; 3]]).unwrap(),
            Target::Landmarks(LandmarkTarget::new(vec![y], w).unwrap()),
            KernelConfig::new(100.0, 2).unwrap(),
            IntegratorConfig::new(5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn already_matched_converges_immediately() {
        let prob = problem([0.0; 3], 1.0);
        let sol = solve(&prob, &JetMomentum::zeros(2, JetOrder::Zero, 1), &OptimizerSettings::default()).unwrap();
        assert_eq!(sol.status, Status::Converged);
        assert_eq!(sol.diagnostics.iterations(), 0);
    }

    #[test]
    fn both_methods_reach_closed_form() {
        for method in [Method::GradientDescent, Method::Lbfgs { memory: 5 }] {
            let w = 10.0;
            let y = [0.6, 0.2, 0.0];
            let prob = problem(y, w);
            let opt = OptimizerSettings {
                method,
                max_iters: 500,
                grad_tol: 1e-8,
                initial_step: 0.05,
                ..Default::default()
            };
            let sol = solve(&prob, &JetMomentum::zeros(2, JetOrder::Zero, 1), &opt).unwrap();
            assert_eq!(sol.status, Status::Converged, "{method:?}");
            let c = 2.0 * w / (1.0 + 2.0 * w);
            let p = sol.p0.p()[0];
            assert!((p[0] - c * y[0]).abs() < 1e-6 && (p[1] - c * y[1]).abs() < 1e-6, "{p:?}");
            assert!(sol.diagnostics.energies.windows(2).all(|e| e[1] <= e[0]));
        }
    }

    #[test]
    fn iteration_budget_reported() {
        let prob = problem([0.5, 0.0, 0.0], 1.0);
        let opt = OptimizerSettings {
            method: Method::GradientDescent,
            max_iters: 2,
            initial_step: 1e-3,
            ..Default::default()
        };
        let sol = solve(&prob, &JetMomentum::zeros(2, JetOrder::Zero, 1), &opt).unwrap();
        assert_eq!(sol.status, Status::BudgetExhausted);
        assert_eq!(sol.diagnostics.iterations(), 2);
    }
}
