use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use lddmm_core::state::format_float;
use lddmm_core::tensor::Vec3;

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// CSV table with a fixed header; floats use 17 significant digits.
pub struct Csv {
    text: String,
    columns: usize,
}

pub enum Cell<'a> {
    Int(usize),
    Float(f64),
    Text(&'a str),
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let names: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
        Csv {
            text: format!("{}\n", names.join(",")),
            columns: names.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "row width differs from the header");
        let parts: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::Int(v) => v.to_string(),
                Cell::Float(v) => format_float(*v),
                Cell::Text(s) => s.to_string(),
            })
            .collect();
        let _ = writeln!(self.text, "{}", parts.join(","));
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}

/// Axis names `prefix_0 … prefix_{d-1}`.
pub fn axis_columns(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|a| format!("{prefix}_{a}")).collect()
}

pub fn vec_cells(v: &Vec3<f64>, dim: usize) -> impl Iterator<Item = Cell<'static>> + '_ {
    v.iter().take(dim).map(|&x| Cell::Float(x))
}

type Layer = (&'static str, f64, Vec<Vec<[f64; 2]>>);

/// Polyline figure in the plane of the first two coordinates.
#[derive(Default)]
pub struct Figure {
    layers: Vec<Layer>,
}

impl Figure {
    /// Add a group of polylines drawn in `color` with relative stroke width `weight`.
    pub fn layer(&mut self, color: &'static str, weight: f64, lines: Vec<Vec<[f64; 2]>>) {
        self.layers.push((color, weight, lines));
    }

    pub fn render(&self) -> String {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in self.layers.iter().flat_map(|l| l.2.iter().flatten()) {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        if !lo[0].is_finite() {
            lo = [0.0; 2];
            hi = [1.0; 2];
        }
        let span = [(hi[0] - lo[0]).max(1e-9), (hi[1] - lo[1]).max(1e-9)];
        let margin = [0.05 * span[0], 0.05 * span[1]];
        let view = [lo[0] - margin[0], lo[1] - margin[1], span[0] + 2.0 * margin[0], span[1] + 2.0 * margin[1]];
        let unit = view[2].max(view[3]) / 1000.0;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}" width="800" height="{:.0}">"#,
            view[0],
            view[1],
            view[2],
            view[3],
            800.0 * view[3] / view[2]
        );
        for (color, weight, lines) in &self.layers {
            let _ = writeln!(
                out,
                r#"<g fill="none" stroke="{color}" stroke-width="{:.6}" stroke-linejoin="round">"#,
                unit * weight
            );
            for line in lines {
                let pts: Vec<String> = line.iter().map(|p| format!("{:.6},{:.6}", p[0], p[1])).collect();
                let _ = writeln!(out, r#"<polyline points="{}"/>"#, pts.join(" "));
            }
            out.push_str("</g>\n");
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Regular grid of `nx × ny` vertices over `[x0, x1] × [y0, y1]`, row-major.
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub points: Vec<Vec3<f64>>,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, rect: [f64; 4]) -> Self {
        let mut points = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let x = rect[0] + (rect[2] - rect[0]) * i as f64 / (nx - 1) as f64;
                let y = rect[1] + (rect[3] - rect[1]) * j as f64 / (ny - 1) as f64;
                points.push([x, y, 0.0]);
            }
        }
        Grid { nx, ny, points }
    }

    /// Bounding box of `pts` padded by `pad`.
    pub fn around(nx: usize, ny: usize, pts: &[Vec3<f64>], pad: f64) -> Self {
        let mut r = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in pts {
            r[0] = r[0].min(p[0]);
            r[1] = r[1].min(p[1]);
            r[2] = r[2].max(p[0]);
            r[3] = r[3].max(p[1]);
        }
        if pts.is_empty() {
            r = [0.0; 4];
        }
        Self::new(nx, ny, [r[0] - pad, r[1] - pad, r[2] + pad, r[3] + pad])
    }

    /// Row and column polylines through `moved`, laid out like `points`.
    pub fn polylines(&self, moved: &[Vec3<f64>]) -> Vec<Vec<[f64; 2]>> {
        let at = |i: usize, j: usize| {
            let p = moved[j * self.nx + i];
            [p[0], p[1]]
        };
        let mut lines: Vec<Vec<[f64; 2]>> = (0..self.ny).map(|j| (0..self.nx).map(|i| at(i, j)).collect()).collect();
        lines.extend((0..self.nx).map(|i| (0..self.ny).map(|j| at(i, j)).collect()));
        lines
    }
}
