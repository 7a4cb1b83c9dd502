//! Raster images on a physical lattice, bilinear sampling and PGM files.

mod pgm;
mod synthetic;

pub use pgm::{parse_pgm, read_pgm, write_pgm, format_pgm, PgmEncoding};
pub use synthetic::{make_synthetic, Synthetic};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A 2D scalar image. Pixel `(col, row)` sits at
/// `(origin[0] + col·spacing, origin[1] + row·spacing)`; values are row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterImage<T> {
    width: usize,
    height: usize,
    spacing: T,
    origin: [T; 2],
    values: Vec<T>,
}

impl<T: Scalar> RasterImage<T> {
    pub fn new(width: usize, height: usize, spacing: T, origin: [T; 2], values: Vec<T>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidParams(format!("image must be at least 2×2, got {width}×{height}")));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidParams(format!("spacing must be positive, got {:?}", spacing)));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("image origin".into()));
        }
        if values.len() != width * height {
            return Err(Error::Shape(format!(
                "{} values for a {width}×{height} image",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("pixel ({}, {})", i % width, i / width)));
        }
        Ok(Self {
            width,
            height,
            spacing,
            origin,
            values,
        })
    }

    /// Image of constant value.
    pub fn constant(width: usize, height: usize, spacing: T, origin: [T; 2], value: T) -> Result<Self> {
        Self::new(width, height, spacing, origin, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn origin(&self) -> [T; 2] {
        self.origin
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn pixel(&self, col: usize, row: usize) -> T {
        self.values[row * self.width + col]
    }

    /// Physical position of pixel `(col, row)`.
    pub fn position(&self, col: usize, row: usize) -> [T; 2] {
        [
            self.origin[0] + T::from_usize(col) * self.spacing,
            self.origin[1] + T::from_usize(row) * self.spacing,
        ]
    }

    /// Physical bounding box `[min, max]` of the pixel lattice.
    pub fn extent(&self) -> ([T; 2], [T; 2]) {
        (self.origin, self.position(self.width - 1, self.height - 1))
    }

    pub fn contains(&self, x: &[T; 2]) -> bool {
        let (lo, hi) = self.extent();
        (0..2).all(|a| x[a] >= lo[a] && x[a] <= hi[a])
    }

    /// Same lattice, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(self.width, self.height, self.spacing, self.origin, values)
    }

    fn cell(&self, x: &[T; 2]) -> [Cell<T>; 2] {
        let dims = [self.width, self.height];
        let mut out = [Cell::default(), Cell::default()];
        for a in 0..2 {
            let u = (x[a] - self.origin[a]) / self.spacing;
            let last = T::from_usize(dims[a] - 1);
            let (u, clamped) = if u < T::zero() {
                (T::zero(), true)
            } else if u > last {
                (last, true)
            } else {
                (u, false)
            };
            let i = (u.to_f64().floor() as usize).min(dims[a] - 2);
            out[a] = Cell {
                index: i,
                frac: u - T::from_usize(i),
                clamped,
            };
        }
        out
    }

    /// Bilinear interpolation, clamping queries to the lattice extent.
    pub fn sample(&self, x: &[T; 2]) -> T {
        let [cx, cy] = self.cell(x);
        let (i, j) = (cx.index, cy.index);
        let one = T::one();
        let v00 = self.pixel(i, j);
        let v10 = self.pixel(i + 1, j);
        let v01 = self.pixel(i, j + 1);
        let v11 = self.pixel(i + 1, j + 1);
        let (fx, fy) = (cx.frac, cy.frac);
        (one - fy) * ((one - fx) * v00 + fx * v10) + fy * ((one - fx) * v01 + fx * v11)
    }

    /// Derivative of the interpolant; zero across a clamped axis.
    pub fn gradient(&self, x: &[T; 2]) -> [T; 2] {
        let [cx, cy] = self.cell(x);
        let (i, j) = (cx.index, cy.index);
        let one = T::one();
        let v00 = self.pixel(i, j);
        let v10 = self.pixel(i + 1, j);
        let v01 = self.pixel(i, j + 1);
        let v11 = self.pixel(i + 1, j + 1);
        let (fx, fy) = (cx.frac, cy.frac);
        let gx = if cx.clamped {
            T::zero()
        } else {
            ((one - fy) * (v10 - v00) + fy * (v11 - v01)) / self.spacing
        };
        let gy = if cy.clamped {
            T::zero()
        } else {
            ((one - fx) * (v01 - v00) + fx * (v11 - v10)) / self.spacing
        };
        [gx, gy]
    }

    pub fn map_scalar<S: Scalar>(&self, f: impl Fn(T) -> S) -> RasterImage<S> {
        RasterImage {
            width: self.width,
            height: self.height,
            spacing: f(self.spacing),
            origin: [f(self.origin[0]), f(self.origin[1])],
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell<T> {
    index: usize,
    frac: T,
    clamped: bool,
}

impl<T: Scalar> Default for Cell<T> {
    fn default() -> Self {
        Cell {
            index: 0,
            frac: T::zero(),
            clamped: false,
        }
    }
}
