//! Matching targets and their dissimilarities `F(q(1))`.

use crate::error::{Error, Result};
use crate::image::RasterImage;
use crate::scalar::Scalar;
use crate::state::{JetMomentum, JetOrder, JetState};
use crate::tensor::{zero_mat, zero_ten3, Mat3, Ten3, Vec3};

/// `F = Σᵢ |zᵢ − yᵢ|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkTarget<T> {
    pub targets: Vec<Vec3<T>>,
    pub weight: T,
}

/// Per-component weights of a [`JetTarget`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetWeights<T> {
    pub position: T,
    pub jacobian: T,
    pub hessian: T,
}

impl<T: Scalar> Default for JetWeights<T> {
    fn default() -> Self {
        JetWeights {
            position: T::one(),
            jacobian: T::one(),
            hessian: T::one(),
        }
    }
}

/// `F = Σᵢ λ₀|zᵢ − yᵢ|² + λ₁‖Zᵢ − Yᵢ‖² + λ₂‖Z²ᵢ − Y²ᵢ‖²` over the components present.
#[derive(Clone, Debug, PartialEq)]
pub struct JetTarget<T> {
    pub positions: Vec<Vec3<T>>,
    pub jacobians: Option<Vec<Mat3<T>>>,
    pub hessians: Option<Vec<Ten3<T>>>,
    pub components: JetWeights<T>,
    pub weight: T,
}

/// Sum of squared differences on a lattice, `F = Σₓ hᵈ |I₀(zₓ) − I₁(x)|²`.
///
/// Lattice particle `x` starts at `x` and `zₓ = q_x(1)` plays the role of
/// `φ⁻¹(x)`, so the moving image is compared through the flow.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTarget<T> {
    pub fixed: RasterImage<T>,
    pub moving: RasterImage<T>,
    lattice: Vec<[T; 2]>,
    fixed_values: Vec<T>,
    cell: T,
    pub weight: T,
}

impl<T: Scalar> ImageTarget<T> {
    /// Lattice of every `stride`-th pixel of `fixed`, centered in the image.
    pub fn new(fixed: RasterImage<T>, moving: RasterImage<T>, stride: usize, weight: T) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParams("lattice stride must be positive".into()));
        }
        check_weight(weight)?;
        let start = |n: usize| ((n - 1) % stride) / 2;
        let mut lattice = Vec::new();
        let mut fixed_values = Vec::new();
        for row in (start(fixed.height())..fixed.height()).step_by(stride) {
            for col in (start(fixed.width())..fixed.width()).step_by(stride) {
                let x = fixed.position(col, row);
                if !moving.contains(&x) {
                    return Err(Error::InvalidParams(format!(
                        "lattice point ({:?}, {:?}) outside the moving image",
                        x[0], x[1]
                    )));
                }
                lattice.push(x);
                fixed_values.push(fixed.pixel(col, row));
            }
        }
        let cell = fixed.spacing() * T::from_usize(stride);
        Ok(Self {
            fixed,
            moving,
            lattice,
            fixed_values,
            cell,
            weight,
        })
    }

    pub fn lattice(&self) -> &[[T; 2]] {
        &self.lattice
    }

    /// Lattice spacing `h`.
    pub fn cell(&self) -> T {
        self.cell
    }

    /// Lattice columns and rows.
    pub fn lattice_shape(&self) -> (usize, usize) {
        let stride = (self.cell / self.fixed.spacing()).to_f64().round() as usize;
        let count = |n: usize| (n - 1 - ((n - 1) % stride) / 2) / stride + 1;
        (count(self.fixed.width()), count(self.fixed.height()))
    }

    /// Lattice particles at their start positions.
    pub fn initial_state(&self) -> Result<JetState<T>> {
        JetState::from_positions(2, self.lattice.iter().map(|x| [x[0], x[1], T::zero()]).collect())
    }

    /// `I₁(x)` at each lattice point.
    pub fn fixed_values(&self) -> &[T] {
        &self.fixed_values
    }
}

/// What the endpoint state is compared against.
#[derive(Clone, Debug, PartialEq)]
pub enum Target<T> {
    Landmarks(LandmarkTarget<T>),
    Jets(JetTarget<T>),
    Image(ImageTarget<T>),
}

fn check_weight<T: Scalar>(w: T) -> Result<()> {
    if !(w > T::zero()) || !w.is_finite() {
        return Err(Error::InvalidParams(format!("weight must be positive, got {w:?}")));
    }
    Ok(())
}

impl<T: Scalar> LandmarkTarget<T> {
    pub fn new(targets: Vec<Vec3<T>>, weight: T) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self { targets, weight })
    }
}

impl<T: Scalar> JetTarget<T> {
    pub fn new(
        positions: Vec<Vec3<T>>,
        jacobians: Option<Vec<Mat3<T>>>,
        hessians: Option<Vec<Ten3<T>>>,
        components: JetWeights<T>,
        weight: T,
    ) -> Result<Self> {
        check_weight(weight)?;
        let n = positions.len();
        if jacobians.as_ref().is_some_and(|j| j.len() != n) || hessians.as_ref().is_some_and(|h| h.len() != n) {
            return Err(Error::Shape(format!("jet target components disagree with {n} positions")));
        }
        for (name, w) in [("position", components.position), ("jacobian", components.jacobian), ("hessian", components.hessian)] {
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(Error::InvalidParams(format!("{name} weight must be non-negative")));
            }
        }
        Ok(Self {
            positions,
            jacobians,
            hessians,
            components,
            weight,
        })
    }

    /// Highest jet order the target measures.
    pub fn order(&self) -> JetOrder {
        if self.hessians.is_some() {
            JetOrder::Two
        } else if self.jacobians.is_some() {
            JetOrder::One
        } else {
            JetOrder::Zero
        }
    }
}

impl<T: Scalar> Target<T> {
    pub fn weight(&self) -> T {
        match self {
            Target::Landmarks(t) => t.weight,
            Target::Jets(t) => t.weight,
            Target::Image(t) => t.weight,
        }
    }

    /// Verify that `q` has the shape this target measures.
    pub fn check_state(&self, q: &JetState<T>) -> Result<()> {
        let count = |n: usize| {
            if n == q.len() {
                Ok(())
            } else {
                Err(Error::Shape(format!("target has {n} points, state has {} particles", q.len())))
            }
        };
        match self {
            Target::Landmarks(t) => count(t.targets.len()),
            Target::Jets(t) => {
                count(t.positions.len())?;
                if t.order() > q.order() {
                    return Err(Error::Shape(format!(
                        "target measures order {} but the state carries order {}",
                        t.order().as_usize(),
                        q.order().as_usize()
                    )));
                }
                Ok(())
            }
            Target::Image(t) => {
                if q.dim() != 2 || q.order() != JetOrder::Zero {
                    return Err(Error::Shape("image matching uses plain 2D particles".into()));
                }
                count(t.lattice.len())
            }
        }
    }
}

/// `F(q)`, without the weight.
pub fn dissimilarity<T: Scalar>(target: &Target<T>, q: &JetState<T>) -> Result<T> {
    target.check_state(q)?;
    let d = q.dim();
    let sq = |a: &Vec3<T>, b: &Vec3<T>| (0..d).fold(T::zero(), |s, i| s + (a[i] - b[i]) * (a[i] - b[i]));
    let value = match target {
        Target::Landmarks(t) => q.positions().iter().zip(&t.targets).fold(T::zero(), |s, (z, y)| s + sq(z, y)),
        Target::Jets(t) => {
            let mut f = T::zero();
            for i in 0..q.len() {
                f += t.components.position * sq(&q.positions()[i], &t.positions[i]);
                if let Some(jac) = &t.jacobians {
                    let (z, y) = (&q.jacobians()[i], &jac[i]);
                    for a in 0..d {
                        f += t.components.jacobian * sq(&z[a], &y[a]);
                    }
                }
                if let Some(hes) = &t.hessians {
                    let (z, y) = (&q.hessians()[i], &hes[i]);
                    for a in 0..d {
                        for b in 0..d {
                            f += t.components.hessian * sq(&z[a][b], &y[a][b]);
                        }
                    }
                }
            }
            f
        }
        Target::Image(t) => {
            let area = t.cell * t.cell;
            let mut f = T::zero();
            for (z, &i1) in q.positions().iter().zip(&t.fixed_values) {
                let r = t.moving.sample(&[z[0], z[1]]) - i1;
                f += area * r * r;
            }
            f
        }
    };
    if !value.is_finite() {
        return Err(Error::NonFinite("dissimilarity".into()));
    }
    Ok(value)
}

/// `DF(q)` in state-shaped storage: position, Jacobian and Hessian slots.
pub fn dissimilarity_gradient<T: Scalar>(target: &Target<T>, q: &JetState<T>) -> Result<JetMomentum<T>> {
    target.check_state(q)?;
    let d = q.dim();
    let n = q.len();
    let k = q.order();
    let two = T::from_f64(2.0);
    let mut p = vec![[T::zero(); 3]; n];
    let mut mu1 = vec![zero_mat(); if k >= JetOrder::One { n } else { 0 }];
    let mut mu2 = vec![zero_ten3(); if k >= JetOrder::Two { n } else { 0 }];
    match target {
        Target::Landmarks(t) => {
            for i in 0..n {
                for a in 0..d {
                    p[i][a] = two * (q.positions()[i][a] - t.targets[i][a]);
                }
            }
        }
        Target::Jets(t) => {
            let c = &t.components;
            for i in 0..n {
                for a in 0..d {
                    p[i][a] = two * c.position * (q.positions()[i][a] - t.positions[i][a]);
                }
                if let Some(jac) = &t.jacobians {
                    for a in 0..d {
                        for b in 0..d {
                            mu1[i][a][b] = two * c.jacobian * (q.jacobians()[i][a][b] - jac[i][a][b]);
                        }
                    }
                }
                if let Some(hes) = &t.hessians {
                    for a in 0..d {
                        for b in 0..d {
                            for e in 0..d {
                                mu2[i][a][b][e] = two * c.hessian * (q.hessians()[i][a][b][e] - hes[i][a][b][e]);
                            }
                        }
                    }
                }
            }
        }
        Target::Image(t) => {
            let scale = two * t.cell * t.cell;
            for (i, (z, &i1)) in q.positions().iter().zip(&t.fixed_values).enumerate() {
                let x = [z[0], z[1]];
                let r = t.moving.sample(&x) - i1;
                let g = t.moving.gradient(&x);
                p[i][0] = scale * r * g[0];
                p[i][1] = scale * r * g[1];
            }
        }
    }
    if p.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dissimilarity gradient".into()));
    }
    JetMomentum::new(d, k, p, mu1, mu2)
}
