use std::path::Path;
use std::process::{Command, Output};

use lddmm_core::image::{make_synthetic, read_pgm, write_pgm, PgmEncoding, Synthetic};
use lddmm_core::{read_landmarks, read_state, JetState, PhasePoint};

fn lddmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lddmm")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

// exact reconstruction of the 17-digit float text written by the CLI
fn lossless(v: f64) -> f64 {
    format!("{v:.16e}").parse().unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn one_particle_trajectory_is_straight() {
    let dir = tempfile::tempdir().unwrap();
    let phase = dir.path().join("phase.txt");
    write(&phase, "lddmm-phase 1 2 1 0\n0.3 -0.2 0.7 0.4\n");
    let out = dir.path().join("run");
    let res = lddmm(&["shoot", s(&phase), "--steps", "16", "--out", s(&out)]);
    assert!(res.status.success());
    for r in rows(&out.join("trajectory.csv")) {
        let t = r[1];
        assert!((r[3] - lossless(0.3 + t * 0.7)).abs() <= 1e-15);
        assert!((r[4] - lossless(-0.2 + t * 0.4)).abs() <= 1e-15);
        assert_eq!((r[5], r[6]), (0.7, 0.4));
    }
    let h = rows(&out.join("hamiltonian.csv"));
    assert!(h.iter().all(|r| r[2] == h[0][2]));
}

#[test]
fn zero_momentum_grid_is_regular() {
    let dir = tempfile::tempdir().unwrap();
    let phase = dir.path().join("phase.txt");
    write(&phase, "lddmm-phase 1 2 2 0\n0 0 0 0\n1 1 0 0\n");
    let out = dir.path().join("grid");
    assert!(lddmm(&["flow-grid", s(&phase), "--grid", "4,3", "--jacobian", "--out", s(&out)]).status.success());
    let r = rows(&out.join("grid.csv"));
    assert_eq!(r.len(), 12);
    for row in r {
        assert_eq!((row[2], row[3]), (row[4], row[5]));
        assert_eq!(row[6], 1.0);
    }
}

#[test]
fn rotation_jet_decays_far_away() {
    let dir = tempfile::tempdir().unwrap();
    let phase = dir.path().join("phase.txt");
    // 1-jet at the origin, antisymmetric mu1, no linear momentum
    write(&phase, "lddmm-phase 1 2 1 1\n0 0 0 0 1 0 0 1 0 0.5 -0.5 0\n");
    let out = dir.path().join("grid");
    let res = lddmm(&[
        "flow-grid", s(&phase), "--grid", "21,21", "--extent", "-10,-10,10,10", "--jacobian", "--out", s(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for row in rows(&out.join("grid.csv")) {
        let (x, y) = (row[2], row[3]);
        let (dx, dy) = (row[4] - x, row[5] - y);
        let r = (x * x + y * y).sqrt();
        if r >= 10.0 {
            assert!((dx * dx + dy * dy).sqrt() <= 1e-15);
        }
        if r > 0.0 && r <= 1.0 {
            // tangential displacement
            let radial = (dx * x + dy * y) / r;
            let tangential = (-dx * y + dy * x) / r;
            assert!(tangential.abs() > 3.0 * radial.abs(), "{tangential} {radial}");
        }
        assert!(row[6] > 0.0);
    }
}

#[test]
fn identical_landmarks_give_zero_momentum() {
    let dir = tempfile::tempdir().unwrap();
    let lm = dir.path().join("lm.txt");
    write(&lm, "lddmm-landmarks 1 2 3\n0 0\n1 0\n0 1\n");
    let out = dir.path().join("m");
    let res = lddmm(&["match-landmarks", s(&lm), s(&lm), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(0));
    let p0: PhasePoint<f64> = read_state(out.join("p0.txt")).unwrap();
    assert!(p0.momentum.p().iter().all(|p| p.iter().all(|&v| v == 0.0)));
    assert_eq!(rows(&out.join("energy.csv")).len(), 1);
}

#[test]
fn single_pair_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = (dir.path().join("s.txt"), dir.path().join("t.txt"));
    write(&src, "lddmm-landmarks 1 2 1\n0.1 0.2\n");
    write(&tgt, "lddmm-landmarks 1 2 1\n0.4 -0.1\n");
    let out = dir.path().join("m");
    let res = lddmm(&[
        "match-landmarks", s(&src), s(&tgt), "--sigma", "50", "--weight", "1", "--grad-tol", "1e-10", "--out", s(&out),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let p0: PhasePoint<f64> = read_state(out.join("p0.txt")).unwrap();
    let c = 2.0 / 3.0;
    assert!((p0.momentum.p()[0][0] - c * 0.3).abs() <= 1e-6);
    assert!((p0.momentum.p()[0][1] + c * 0.3).abs() <= 1e-6);
    let end: JetState<f64> = read_landmarks(out.join("endpoint.txt")).unwrap();
    assert_eq!(end.len(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    write(&a, "lddmm-landmarks 1 2 2\n0 0\n1 0\n");
    write(&b, "lddmm-landmarks 1 2 3\n0 0\n1 0\n0 1\n");
    let out = dir.path().join("m");
    let res = lddmm(&["match-landmarks", s(&a), s(&b), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains('2') && msg.contains('3'), "{msg}");

    write(&b, "lddmm-landmarks 1 2 2\n0.3 0.2\n1.2 -0.4\n");
    let res = lddmm(&["match-landmarks", s(&a), s(&b), "--max-iters", "1", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));

    write(&b, "lddmm-landmarks 1 2 2\n0 0\n1 oops\n");
    let res = lddmm(&["match-landmarks", s(&a), s(&b), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));

    assert_eq!(lddmm(&["shoot", "--bogus"]).status.code(), Some(1));
    assert_eq!(lddmm(&["shoot", s(&a), "--sigma", "-1", "--out", s(&out)]).status.code(), Some(1));
    assert_eq!(lddmm(&["--help"]).status.code(), Some(0));
}

#[test]
fn blow_up_names_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let phase = dir.path().join("phase.txt");
    write(&phase, "lddmm-phase 1 2 2 0\n0 0 1e300 0\n0.5 0 -1e300 0\n");
    let res = lddmm(&["shoot", s(&phase), "--out", s(&dir.path().join("o"))]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("step"));
}

#[test]
fn outputs_are_reproducible_and_rereadable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let lm = d.join("lm");
    assert!(lddmm(&["synth", "--kind", "landmarks", "--count", "4", "--seed", "7", "--out", s(&lm)]).status.success());
    let mut runs = Vec::new();
    for name in ["r1", "r2"] {
        let out = d.join(name);
        let res = lddmm(&[
            "match-landmarks",
            s(&lm.join("source.txt")),
            s(&lm.join("target.txt")),
            "--jet-order",
            "1",
            "--max-iters",
            "15",
            "--out",
            s(&out),
        ]);
        assert!(matches!(res.status.code(), Some(0) | Some(2)));
        runs.push(out);
    }
    for f in ["p0.txt", "trajectory.csv", "energy.csv", "endpoint.txt", "grid.svg"] {
        assert_eq!(std::fs::read(runs[0].join(f)).unwrap(), std::fs::read(runs[1].join(f)).unwrap(), "{f}");
    }
    let p0: PhasePoint<f64> = read_state(runs[0].join("p0.txt")).unwrap();
    assert_eq!(p0.len(), 4);
    let energies: Vec<f64> = rows(&runs[0].join("energy.csv")).iter().map(|r| r[1]).collect();
    assert!(energies.windows(2).all(|e| e[1] <= e[0]));
}

#[test]
fn image_matching_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let blob = |c: [f64; 2]| Synthetic::GaussianBlob {
        center: c,
        std: 3.0,
        amplitude: 1.0,
        background: 0.0,
    };
    let f = d.join("f.pgm");
    let m = d.join("m.pgm");
    write_pgm(&f, &make_synthetic(&blob([7.5, 7.5]), 16, 16, 0.5, [1.0, 2.0]).unwrap(), PgmEncoding::Binary, 65535).unwrap();
    write_pgm(&m, &make_synthetic(&blob([8.5, 7.0]), 16, 16, 0.5, [1.0, 2.0]).unwrap(), PgmEncoding::Ascii, 65535).unwrap();
    let out = d.join("run");
    let args = ["--spacing", "0.5", "--origin", "1,2", "--stride", "2", "--sigma", "2", "--weight", "50", "--max-iters", "40"];
    let res = Command::new(env!("CARGO_BIN_EXE_lddmm"))
        .args(["match-image", s(&f), s(&m), "--out", s(&out)])
        .args(args)
        .output()
        .unwrap();
    assert!(matches!(res.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let value = |k: &str| -> f64 {
        summary.lines().find(|l| l.starts_with(&format!("{k},"))).unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!(value("final_dissimilarity") < 0.5 * value("initial_dissimilarity"));
    assert!(value("min_jacobian_det") > 0.0);
    let warped = read_pgm(out.join("warped.pgm"), 0.5, [1.0, 2.0]).unwrap();
    assert_eq!((warped.width(), warped.height()), (16, 16));
    let p0: PhasePoint<f64> = read_state(out.join("p0.txt")).unwrap();
    assert_eq!(p0.len(), 64);

    let same = d.join("same");
    let res = lddmm(&["match-image", s(&f), s(&f), "--out", s(&same)]);
    assert_eq!(res.status.code(), Some(0));
    let p0: PhasePoint<f64> = read_state(same.join("p0.txt")).unwrap();
    assert!(p0.momentum.p().iter().all(|p| p[0] == 0.0 && p[1] == 0.0));
}

#[test]
fn synthetic_images_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pgm");
    let b = dir.path().join("b.pgm");
    for p in [&a, &b] {
        assert!(lddmm(&["synth", "--kind", "disc", "--size", "32,24", "--radius", "6", "--out", s(p)]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let img = read_pgm(&a, 1.0, [0.0; 2]).unwrap();
    assert_eq!(img.sample(&[15.5, 11.5]), 1.0);
    assert_eq!(img.sample(&[0.0, 0.0]), 0.0);
    assert_eq!(lddmm(&["synth", "--kind", "blob", "--center", "99,1", "--out", s(&a)]).status.code(), Some(1));
}
