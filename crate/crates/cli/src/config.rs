use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lddmm_core::dynamics::IntegratorConfig;
use lddmm_core::matching::{Method, OptimizerSettings};
use lddmm_core::{JetOrder, KernelConfig};

#[derive(Parser, Debug)]
#[command(name = "lddmm", version, about = "Landmark, jet-particle and image registration by geodesic shooting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Match a source landmark file onto a target landmark file.
    MatchLandmarks {
        source: PathBuf,
        target: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        opt: OptArgs,
        /// Jet order carried by the source particles.
        #[arg(long = "jet-order", default_value_t = 0)]
        jet_order: usize,
    },
    /// Register a moving PGM image onto a fixed one.
    MatchImage {
        fixed: PathBuf,
        moving: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        opt: OptArgs,
        #[command(flatten)]
        raster: RasterArgs,
        /// Lattice stride in pixels.
        #[arg(long, default_value_t = 4)]
        stride: usize,
    },
    /// Integrate a phase file forward over [0, 1].
    Shoot {
        phase: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Deform a regular grid by the flow of a phase file.
    FlowGrid {
        phase: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Grid vertices per axis, `NX,NY`.
        #[arg(long, value_parser = parse_counts, default_value = "21,21")]
        grid: (usize, usize),
        /// Grid rectangle `XMIN,YMIN,XMAX,YMAX`; defaults to the particle bounds padded by 2σ.
        #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
        extent: Option<[f64; 4]>,
        /// Add the flow Jacobian determinant to the point table.
        #[arg(long)]
        jacobian: bool,
    },
    /// Write synthetic fixtures: PGM images or random landmark pairs.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long)]
        out: PathBuf,
        /// Image size in pixels, `W,H`.
        #[arg(long, value_parser = parse_counts, default_value = "64,64")]
        size: (usize, usize),
        #[command(flatten)]
        raster: RasterArgs,
        /// Disc or blob center in physical units; defaults to the image center.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        center: Option<[f64; 2]>,
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
        /// Width of the cosine ramp at the disc rim.
        #[arg(long, default_value_t = 3.0)]
        edge: f64,
        #[arg(long, default_value_t = 6.0)]
        std: f64,
        /// Landmark count.
        #[arg(long, default_value_t = 5)]
        count: usize,
        /// Maximum landmark displacement.
        #[arg(long, default_value_t = 0.5)]
        displacement: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Disc,
    Blob,
    Landmarks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lbfgs,
    Gd,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Kernel width.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// RK4 steps over [0, 1].
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct OptArgs {
    /// Weight of the dissimilarity term.
    #[arg(long, default_value_t = 1.0)]
    pub weight: f64,
    #[arg(long = "max-iters", default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long = "grad-tol", default_value_t = 1e-6)]
    pub grad_tol: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Lbfgs)]
    pub method: MethodArg,
}

#[derive(Args, Debug, Clone)]
pub struct RasterArgs {
    /// Physical size of a pixel.
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    /// Physical position of pixel (0, 0), `X,Y`.
    #[arg(long, value_parser = parse_pair, default_value = "0,0", allow_hyphen_values = true)]
    pub origin: [f64; 2],
}

fn parse_list<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse::<f64>().map_err(|_| format!("{p:?} is not a number"))?;
        if !o.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(out)
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    parse_list::<2>(s)
}

fn parse_rect(s: &str) -> std::result::Result<[f64; 4], String> {
    let r = parse_list::<4>(s)?;
    if !(r[2] > r[0] && r[3] > r[1]) {
        return Err("extent needs XMIN < XMAX and YMIN < YMAX".into());
    }
    Ok(r)
}

fn parse_counts(s: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts[..] else {
        return Err(format!("expected two comma-separated counts, got {s:?}"));
    };
    let n = |p: &str| p.parse::<usize>().map_err(|_| format!("{p:?} is not a count"));
    let (a, b) = (n(a)?, n(b)?);
    if a < 2 || b < 2 {
        return Err("counts must be at least 2".into());
    }
    Ok((a, b))
}

/// Validated numeric settings shared by the commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub sigma: f64,
    pub steps: usize,
    pub weight: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub method: Method,
    pub jet_order: JetOrder,
    pub stride: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(run: &RunArgs, opt: Option<&OptArgs>, jet_order: usize, stride: usize) -> Result<Self> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if !(v > 0.0 && v.is_finite()) {
                bail!("--{name} must be positive, got {v}");
            }
            Ok(())
        };
        positive("sigma", run.sigma)?;
        if run.steps == 0 {
            bail!("--steps must be positive");
        }
        if stride == 0 {
            bail!("--stride must be positive");
        }
        let Ok(order) = JetOrder::from_usize(jet_order) else {
            bail!("--jet-order must be 0, 1 or 2, got {jet_order}");
        };
        let (weight, max_iters, grad_tol, method) = match opt {
            Some(o) => {
                positive("weight", o.weight)?;
                positive("grad-tol", o.grad_tol)?;
                if o.max_iters == 0 {
                    bail!("--max-iters must be positive");
                }
                let method = match o.method {
                    MethodArg::Lbfgs => Method::Lbfgs { memory: 8 },
                    MethodArg::Gd => Method::GradientDescent,
                };
                (o.weight, o.max_iters, o.grad_tol, method)
            }
            None => (1.0, 1, 1.0, Method::Lbfgs { memory: 8 }),
        };
        Ok(Self {
            sigma: run.sigma,
            steps: run.steps,
            weight,
            max_iters,
            grad_tol,
            method,
            jet_order: order,
            stride,
            out: run.out.clone(),
        })
    }

    pub fn kernel(&self, dim: usize) -> Result<KernelConfig<f64>> {
        Ok(KernelConfig::new(self.sigma, dim)?)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        Ok(IntegratorConfig::new(self.steps)?)
    }

    pub fn optimizer(&self) -> OptimizerSettings {
        OptimizerSettings {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            method: self.method,
            ..Default::default()
        }
    }
}

pub fn check_raster(r: &RasterArgs) -> Result<()> {
    if !(r.spacing > 0.0 && r.spacing.is_finite()) {
        bail!("--spacing must be positive, got {}", r.spacing);
    }
    Ok(())
}
