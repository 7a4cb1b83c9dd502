use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lddmm_core::dynamics::{flow_points, hamiltonian, integrate, FlowMap, IntegratorConfig, Trajectory};
use lddmm_core::image::{format_pgm, make_synthetic, read_pgm, PgmEncoding, Synthetic};
use lddmm_core::matching::{solve, ImageTarget, LandmarkTarget, ShootingProblem, Solution, Status, Target};
use lddmm_core::state::format_landmarks;
use lddmm_core::tensor::{det, Vec3};
use lddmm_core::{format_phase_point, read_landmarks, read_state, JetMomentum, JetState, KernelConfig, PhasePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{check_raster, Command, RunConfig, SynthKind};
use crate::output::{axis_columns, vec_cells, write_atomic, Cell, Csv, Figure, Grid};

/// Exit status of a successful command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Converged,
    NotConverged(Status),
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Done | Outcome::Converged => 0,
            Outcome::NotConverged(_) => 2,
        }
    }
}

const FIGURE_GRID: usize = 21;

pub fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::MatchLandmarks {
            source,
            target,
            run,
            opt,
            jet_order,
        } => {
            let cfg = RunConfig::new(&run, Some(&opt), jet_order, 1)?;
            match_landmarks(&source, &target, &cfg)
        }
        Command::MatchImage {
            fixed,
            moving,
            run,
            opt,
            raster,
            stride,
        } => {
            check_raster(&raster)?;
            let cfg = RunConfig::new(&run, Some(&opt), 0, stride)?;
            let fixed = read_pgm(&fixed, raster.spacing, raster.origin).with_context(|| format!("reading {}", fixed.display()))?;
            let moving = read_pgm(&moving, raster.spacing, raster.origin).with_context(|| format!("reading {}", moving.display()))?;
            match_image(fixed, moving, &cfg)
        }
        Command::Shoot { phase, run } => {
            let x0 = load_phase(&phase)?;
            let cfg = RunConfig::new(&run, None, x0.order().as_usize(), 1)?;
            shoot(&x0, &cfg)
        }
        Command::FlowGrid {
            phase,
            run,
            grid,
            extent,
            jacobian,
        } => {
            let x0 = load_phase(&phase)?;
            let cfg = RunConfig::new(&run, None, x0.order().as_usize(), 1)?;
            flow_grid(&x0, &cfg, grid, extent, jacobian)
        }
        Command::Synth {
            kind,
            out,
            size,
            raster,
            center,
            radius,
            edge,
            std,
            count,
            displacement,
            seed,
        } => {
            check_raster(&raster)?;
            let (w, h) = size;
            let center = center.unwrap_or([
                raster.origin[0] + raster.spacing * (w - 1) as f64 / 2.0,
                raster.origin[1] + raster.spacing * (h - 1) as f64 / 2.0,
            ]);
            let shape = match kind {
                SynthKind::Disc => Synthetic::Disc {
                    center,
                    radius,
                    edge,
                    foreground: 1.0,
                    background: 0.0,
                },
                SynthKind::Blob => Synthetic::GaussianBlob {
                    center,
                    std,
                    amplitude: 1.0,
                    background: 0.0,
                },
                SynthKind::Landmarks => return synth_landmarks(&out, count, displacement, seed),
            };
            let img = make_synthetic(&shape, w, h, raster.spacing, raster.origin)?;
            write_atomic(&out, &format_pgm(&img, PgmEncoding::Binary, u16::MAX))?;
            Ok(Outcome::Done)
        }
    }
}

fn load_phase(path: &Path) -> Result<PhasePoint<f64>> {
    read_state(path).with_context(|| format!("reading {}", path.display()))
}

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))
}

fn match_landmarks(source: &Path, target: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let src: JetState<f64> = read_landmarks(source).with_context(|| format!("reading {}", source.display()))?;
    let tgt: JetState<f64> = read_landmarks(target).with_context(|| format!("reading {}", target.display()))?;
    if src.dim() != tgt.dim() {
        bail!("source is {}-dimensional, target is {}-dimensional", src.dim(), tgt.dim());
    }
    if src.len() != tgt.len() {
        bail!("source has {} landmarks, target has {}", src.len(), tgt.len());
    }
    let d = src.dim();
    let initial = JetState::with_identity_jets(d, cfg.jet_order, src.positions().to_vec())?;
    let prob = ShootingProblem::new(
        initial,
        Target::Landmarks(LandmarkTarget::new(tgt.positions().to_vec(), cfg.weight)?),
        cfg.kernel(d)?,
        cfg.integrator()?,
    )?;
    let sol = solve(&prob, &JetMomentum::zeros(d, cfg.jet_order, src.len()), &cfg.optimizer())?;
    prepare_out(cfg)?;
    let x0 = prob.phase_point(&sol.p0)?;
    write_atomic(&cfg.out.join("p0.txt"), format_phase_point(&x0).as_bytes())?;
    let tr = prob.shoot(&sol.p0)?;
    trajectory_csv(&tr, &prob.integrator).save(&cfg.out.join("trajectory.csv"))?;
    energy_csv(&sol).save(&cfg.out.join("energy.csv"))?;
    let end = tr.last();
    write_atomic(&cfg.out.join("endpoint.txt"), format_landmarks(d, end.state.positions()).as_bytes())?;
    let mut extent: Vec<Vec3<f64>> = src.positions().to_vec();
    extent.extend_from_slice(tgt.positions());
    let grid = Grid::around(FIGURE_GRID, FIGURE_GRID, &extent, cfg.sigma);
    let flow = flow_points(&prob.kernel, &prob.integrator, &x0, &grid.points, false)?;
    let mut fig = Figure::default();
    fig.layer("#8a8a8a", 1.0, grid.polylines(&flow.points(flow.times.len() - 1)));
    fig.layer("#c0392b", 2.5, particle_paths(&tr));
    fig.save(&cfg.out.join("grid.svg"))?;
    Ok(report(&sol))
}

fn match_image(
    fixed: lddmm_core::image::RasterImage<f64>,
    moving: lddmm_core::image::RasterImage<f64>,
    cfg: &RunConfig,
) -> Result<Outcome> {
    let target = ImageTarget::new(fixed, moving, cfg.stride, cfg.weight)?;
    let (nx, ny) = target.lattice_shape();
    let initial = target.initial_state()?;
    let n = initial.len();
    let prob = ShootingProblem::new(initial, Target::Image(target), cfg.kernel(2)?, cfg.integrator()?)?;
    let sol = solve(&prob, &JetMomentum::zeros(2, cfg.jet_order, n), &cfg.optimizer())?;
    prepare_out(cfg)?;
    let x0 = prob.phase_point(&sol.p0)?;
    write_atomic(&cfg.out.join("p0.txt"), format_phase_point(&x0).as_bytes())?;
    energy_csv(&sol).save(&cfg.out.join("energy.csv"))?;

    let Target::Image(target) = &prob.target else { unreachable!() };
    let lattice_flow = flow_points(&prob.kernel, &prob.integrator, &x0, prob.initial.positions(), true)?;
    let min_det = min_determinant(&lattice_flow)?;
    let fixed = &target.fixed;
    let pixels: Vec<Vec3<f64>> = (0..fixed.height())
        .flat_map(|row| (0..fixed.width()).map(move |col| (col, row)))
        .map(|(col, row)| {
            let p = fixed.position(col, row);
            [p[0], p[1], 0.0]
        })
        .collect();
    let pixel_flow = flow_points(&prob.kernel, &prob.integrator, &x0, &pixels, false)?;
    let warped: Vec<f64> = pixel_flow.last().iter().map(|s| target.moving.sample(&[s.point[0], s.point[1]])).collect();
    let warped = fixed.with_values(warped)?;
    write_atomic(&cfg.out.join("warped.pgm"), &format_pgm(&warped, PgmEncoding::Binary, u16::MAX))?;

    let d = &sol.diagnostics;
    let mut summary = Csv::new(&["quantity", "value"]);
    summary.row(&[Cell::Text("status"), Cell::Text(status_name(sol.status))]);
    summary.row(&[Cell::Text("iterations"), Cell::Int(d.iterations())]);
    summary.row(&[Cell::Text("initial_dissimilarity"), Cell::Float(d.dissimilarities[0])]);
    summary.row(&[Cell::Text("final_dissimilarity"), Cell::Float(*d.dissimilarities.last().unwrap())]);
    summary.row(&[Cell::Text("min_jacobian_det"), Cell::Float(min_det)]);
    summary.save(&cfg.out.join("summary.csv"))?;

    let lattice = Grid {
        nx,
        ny,
        points: prob.initial.positions().to_vec(),
    };
    let mut fig = Figure::default();
    fig.layer("#8a8a8a", 1.0, lattice.polylines(&lattice_flow.points(lattice_flow.times.len() - 1)));
    fig.save(&cfg.out.join("grid.svg"))?;
    Ok(report(&sol))
}

fn shoot(x0: &PhasePoint<f64>, cfg: &RunConfig) -> Result<Outcome> {
    let kernel = cfg.kernel(x0.dim())?;
    let icfg = cfg.integrator()?;
    let tr = integrate(&kernel, &icfg, x0)?;
    prepare_out(cfg)?;
    trajectory_csv(&tr, &icfg).save(&cfg.out.join("trajectory.csv"))?;
    let mut ham = Csv::new(&["step", "t", "hamiltonian"]);
    for s in 0..tr.len() {
        let h = hamiltonian(&kernel, &tr.point(s))?;
        ham.row(&[Cell::Int(s), Cell::Float(tr.times[s]), Cell::Float(h)]);
    }
    ham.save(&cfg.out.join("hamiltonian.csv"))?;
    let grid = Grid::around(FIGURE_GRID, FIGURE_GRID, x0.state.positions(), 2.0 * cfg.sigma);
    let flow = flow_points(&kernel, &icfg, x0, &grid.points, false)?;
    let mut fig = Figure::default();
    fig.layer("#8a8a8a", 1.0, grid.polylines(&flow.points(flow.times.len() - 1)));
    fig.layer("#c0392b", 2.5, particle_paths(&tr));
    fig.save(&cfg.out.join("grid.svg"))?;
    Ok(Outcome::Done)
}

fn flow_grid(x0: &PhasePoint<f64>, cfg: &RunConfig, (nx, ny): (usize, usize), extent: Option<[f64; 4]>, jacobian: bool) -> Result<Outcome> {
    let kernel: KernelConfig<f64> = cfg.kernel(x0.dim())?;
    let icfg = cfg.integrator()?;
    let grid = match extent {
        Some(r) => Grid::new(nx, ny, r),
        None => Grid::around(nx, ny, x0.state.positions(), 2.0 * cfg.sigma),
    };
    let flow = flow_points(&kernel, &icfg, x0, &grid.points, jacobian)?;
    prepare_out(cfg)?;
    let d = x0.dim();
    let end = flow.points(flow.times.len() - 1);
    let mut header = vec!["i".to_string(), "j".to_string()];
    header.extend(axis_columns("start", d));
    header.extend(axis_columns("end", d));
    if jacobian {
        header.push("det".into());
    }
    let dets = if jacobian { Some(flow.jacobians(flow.times.len() - 1)?) } else { None };
    let mut table = Csv::new(&header);
    for (idx, (start, stop)) in grid.points.iter().zip(&end).enumerate() {
        let mut cells = vec![Cell::Int(idx % nx), Cell::Int(idx / nx)];
        cells.extend(vec_cells(start, d));
        cells.extend(vec_cells(stop, d));
        if let Some(j) = &dets {
            cells.push(Cell::Float(det(d, &j[idx])));
        }
        table.row(&cells);
    }
    table.save(&cfg.out.join("grid.csv"))?;
    let mut fig = Figure::default();
    fig.layer("#8a8a8a", 1.0, grid.polylines(&end));
    fig.save(&cfg.out.join("grid.svg"))?;
    Ok(Outcome::Done)
}

fn synth_landmarks(out: &Path, count: usize, displacement: f64, seed: u64) -> Result<Outcome> {
    if count == 0 {
        bail!("--count must be positive");
    }
    if !(displacement >= 0.0 && displacement.is_finite()) {
        bail!("--displacement must be non-negative, got {displacement}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // spacing that a unit square can still hold
    let min_gap = 0.5 / (count as f64).sqrt();
    let mut src: Vec<Vec3<f64>> = Vec::with_capacity(count);
    while src.len() < count {
        let q = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0];
        if src.iter().all(|p| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() >= min_gap) {
            src.push(q);
        }
    }
    let tgt: Vec<Vec3<f64>> = src
        .iter()
        .map(|q| {
            let mut dq = [0.0; 2];
            if displacement > 0.0 {
                dq = [rng.gen_range(-displacement..displacement), rng.gen_range(-displacement..displacement)];
            }
            [q[0] + dq[0], q[1] + dq[1], 0.0]
        })
        .collect();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_atomic(&out.join("source.txt"), format_landmarks(2, &src).as_bytes())?;
    write_atomic(&out.join("target.txt"), format_landmarks(2, &tgt).as_bytes())?;
    Ok(Outcome::Done)
}

fn trajectory_csv(tr: &Trajectory<f64>, icfg: &IntegratorConfig) -> Csv {
    let d = tr.layout.dim;
    let mut header = vec!["step".to_string(), "t".to_string(), "particle".to_string()];
    header.extend(axis_columns("q", d));
    header.extend(axis_columns("p", d));
    let mut csv = Csv::new(&header);
    for s in 0..tr.len() {
        let x = tr.point(s);
        for i in 0..x.len() {
            let mut cells = vec![Cell::Int(s), Cell::Float(icfg.time(s)), Cell::Int(i)];
            cells.extend(vec_cells(&x.state.positions()[i], d));
            cells.extend(vec_cells(&x.momentum.p()[i], d));
            csv.row(&cells);
        }
    }
    csv
}

fn energy_csv(sol: &Solution<f64>) -> Csv {
    let d = &sol.diagnostics;
    let mut csv = Csv::new(&["iteration", "energy", "dissimilarity", "grad_norm", "step"]);
    for it in 0..d.energies.len() {
        let step = if it == 0 { 0.0 } else { d.step_sizes[it - 1] };
        csv.row(&[
            Cell::Int(it),
            Cell::Float(d.energies[it]),
            Cell::Float(d.dissimilarities[it]),
            Cell::Float(d.grad_norms[it]),
            Cell::Float(step),
        ]);
    }
    csv
}

fn particle_paths(tr: &Trajectory<f64>) -> Vec<Vec<[f64; 2]>> {
    let n = tr.first().len();
    (0..n)
        .map(|i| {
            (0..tr.len())
                .map(|s| {
                    let q = tr.point(s).state.positions()[i];
                    [q[0], q[1]]
                })
                .collect()
        })
        .collect()
}

fn min_determinant(flow: &FlowMap<f64>) -> Result<f64> {
    let mut min = f64::INFINITY;
    for s in 0..flow.times.len() {
        for a in flow.jacobians(s)? {
            min = min.min(det(flow.dim, &a));
        }
    }
    Ok(min)
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::BudgetExhausted => "budget-exhausted",
        Status::LineSearchFailed => "line-search-failed",
    }
}

fn report(sol: &Solution<f64>) -> Outcome {
    let d = &sol.diagnostics;
    println!(
        "{}: {} iterations, energy {:.6e}, gradient norm {:.3e}",
        status_name(sol.status),
        d.iterations(),
        d.energies.last().unwrap(),
        d.grad_norms.last().unwrap()
    );
    match sol.status {
        Status::Converged => Outcome::Converged,
        other => Outcome::NotConverged(other),
    }
}
