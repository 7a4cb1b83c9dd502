use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, jet_multi_indices, KernelConfig};
use crate::scalar::Scalar;
use crate::state::{FlatLayout, JetMomentum, JetOrder, PhasePoint};

/// Momentum coefficients in the Gram slot order `(particle, α, component)`.
///
/// The coefficient of `∂_b∂_c` for `b < c` collects both `μ²[a][b][c]` and
/// `μ²[a][c][b]`.
pub fn momentum_coefficients<T: Scalar>(m: &JetMomentum<T>) -> Vec<T> {
    let d = m.dim();
    let slots = jet_multi_indices(d, m.order());
    let mut out = Vec::with_capacity(m.len() * slots.len() * d);
    for j in 0..m.len() {
        for alpha in &slots {
            let axes = axes_of(alpha.orders());
            for a in 0..d {
                let v = match axes.as_slice() {
                    [] => m.p()[j][a],
                    [b] => m.mu1()[j][a][*b],
                    [b, c] if b == c => m.mu2()[j][a][*b][*b],
                    [b, c] => m.mu2()[j][a][*b][*c] + m.mu2()[j][a][*c][*b],
                    _ => unreachable!("jet slots have order ≤ 2"),
                };
                out.push(v);
            }
        }
    }
    out
}

/// Pull a gradient with respect to the coefficient vector back to the dense
/// `(p, μ¹, μ²)` storage, packed like [`FlatLayout::pack_momentum`].
pub(crate) fn coefficient_gradient_to_dense<T: Scalar>(layout: &FlatLayout, order: JetOrder, g: &[T]) -> Vec<T> {
    let d = layout.dim;
    let slots = jet_multi_indices(d, order);
    let mut dense = vec![T::zero(); layout.momentum_len()];
    let per = slots.len() * d;
    let n = layout.n;
    let p_off = 0;
    let mu1_off = n * d;
    let mu2_off = mu1_off + if order >= JetOrder::One { n * d * d } else { 0 };
    for j in 0..n {
        for (si, alpha) in slots.iter().enumerate() {
            let axes = axes_of(alpha.orders());
            for a in 0..d {
                let v = g[j * per + si * d + a];
                match axes.as_slice() {
                    [] => dense[p_off + j * d + a] = v,
                    [b] => dense[mu1_off + j * d * d + a * d + b] = v,
                    [b, c] => {
                        dense[mu2_off + j * d * d * d + a * d * d + b * d + c] = v;
                        dense[mu2_off + j * d * d * d + a * d * d + c * d + b] = v;
                    }
                    _ => unreachable!(),
                }
            }
        }
    }
    dense
}

fn axes_of(orders: [usize; 3]) -> Vec<usize> {
    let mut axes = Vec::new();
    for (axis, &o) in orders.iter().enumerate() {
        for _ in 0..o {
            axes.push(axis);
        }
    }
    axes
}

/// `H = ½ mᵀ G m`.
pub fn hamiltonian<T: Scalar>(cfg: &KernelConfig<T>, x: &PhasePoint<T>) -> Result<T> {
    check_dim(cfg, x)?;
    let g = gram_matrix(cfg, &x.state, x.order())?;
    Ok(g.quadratic_form(&momentum_coefficients(&x.momentum)))
}

/// `∂H/∂m` in dense momentum storage, i.e. `G c` mapped back to `(p, μ¹, μ²)`.
pub fn hamiltonian_momentum_gradient<T: Scalar>(cfg: &KernelConfig<T>, x: &PhasePoint<T>) -> Result<Vec<T>> {
    check_dim(cfg, x)?;
    let g = gram_matrix(cfg, &x.state, x.order())?;
    let gc = g.apply(&momentum_coefficients(&x.momentum));
    Ok(coefficient_gradient_to_dense(&x.layout(), x.order(), &gc))
}

fn check_dim<T: Scalar>(cfg: &KernelConfig<T>, x: &PhasePoint<T>) -> Result<()> {
    if cfg.dim() != x.dim() {
        return Err(Error::Shape(format!(
            "kernel dimension {} differs from phase point dimension {}",
            cfg.dim(),
            x.dim()
        )));
    }
    Ok(())
}
