use crate::error::{Error, Result};

use super::RasterImage;

/// Test-image generators, in physical coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Synthetic {
    /// Filled disc with a cosine ramp of width `edge` just inside its rim.
    Disc {
        center: [f64; 2],
        radius: f64,
        edge: f64,
        foreground: f64,
        background: f64,
    },
    /// `background + amplitude · exp(−|x − center|² / (2 std²))`.
    GaussianBlob {
        center: [f64; 2],
        std: f64,
        amplitude: f64,
        background: f64,
    },
}

impl Synthetic {
    fn check(&self, img: &RasterImage<f64>) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        let center = match *self {
            Synthetic::Disc { center, radius, edge, .. } => {
                if !(radius >= 0.0) || !radius.is_finite() {
                    return fail(format!("disc radius must be non-negative, got {radius}"));
                }
                if !(edge > 0.0) || !edge.is_finite() {
                    return fail(format!("disc edge width must be positive, got {edge}"));
                }
                center
            }
            Synthetic::GaussianBlob { center, std, .. } => {
                if !(std > 0.0) || !std.is_finite() {
                    return fail(format!("blob std must be positive, got {std}"));
                }
                center
            }
        };
        if !img.contains(&center) {
            return fail(format!("center ({}, {}) outside the image domain", center[0], center[1]));
        }
        Ok(())
    }

    /// Intensity at physical point `x`.
    pub fn value(&self, x: &[f64; 2]) -> f64 {
        match *self {
            Synthetic::Disc {
                center,
                radius,
                edge,
                foreground,
                background,
            } => {
                let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
                let inner = radius - edge;
                let t = if r >= radius {
                    0.0
                } else if r <= inner {
                    1.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * (r - inner) / edge).cos())
                };
                background + (foreground - background) * t
            }
            Synthetic::GaussianBlob {
                center,
                std,
                amplitude,
                background,
            } => {
                let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                background + amplitude * (-r2 / (2.0 * std * std)).exp()
            }
        }
    }
}

/// Render `kind` on a `width × height` lattice.
pub fn make_synthetic(
    kind: &Synthetic,
    width: usize,
    height: usize,
    spacing: f64,
    origin: [f64; 2],
) -> Result<RasterImage<f64>> {
    let blank = RasterImage::constant(width, height, spacing, origin, 0.0)?;
    kind.check(&blank)?;
    let mut values = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            values.push(kind.value(&blank.position(col, row)));
        }
    }
    blank.with_values(values)
}
