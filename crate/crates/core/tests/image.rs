use lddmm_core::image::{format_pgm, parse_pgm, read_pgm, write_pgm, PgmEncoding, RasterImage};
use proptest::prelude::*;

fn random_image(w: usize, h: usize, spacing: f64, seed: &[f64]) -> RasterImage<f64> {
    let vals = (0..w * h).map(|i| seed[i % seed.len()]).collect();
    RasterImage::new(w, h, spacing, [-1.0, 0.5], vals).unwrap()
}

proptest! {
    #[test]
    fn sample_is_continuous_across_cell_edges(
        vals in prop::collection::vec(0.0f64..1.0, 30),
        col in 1usize..5,
        t in 0.0f64..1.0,
        spacing in 0.2f64..3.0,
    ) {
        let img = random_image(6, 5, spacing, &vals);
        let o = img.origin();
        let y = o[1] + t * 4.0 * spacing;
        let edge = o[0] + col as f64 * spacing;
        let eps = 1e-13 * spacing;
        let gap = (img.sample(&[edge - eps, y]) - img.sample(&[edge + eps, y])).abs();
        prop_assert!(gap <= 1e-12, "vertical edge gap {}", gap);
        let x = o[0] + t * 5.0 * spacing;
        let edge = o[1] + (col.min(3)) as f64 * spacing;
        let gap = (img.sample(&[x, edge - eps]) - img.sample(&[x, edge + eps])).abs();
        prop_assert!(gap <= 1e-12, "horizontal edge gap {}", gap);
    }

    #[test]
    fn gradient_line_integral_recovers_sample_difference(
        vals in prop::collection::vec(0.0f64..1.0, 30),
        a in 0.0f64..5.0,
        b in 0.0f64..5.0,
        row in 0.0f64..4.0,
        axis in 0usize..2,
    ) {
        let img = random_image(6, 5, 0.7, &vals);
        let o = img.origin();
        let sp = img.spacing();
        let fixed = if axis == 0 { row } else { row.min(4.0) };
        let (lo, hi) = if axis == 0 { (a.min(b), a.max(b)) } else { (a.min(b).min(4.0), a.max(b).min(4.0)) };
        let point = |s: f64| if axis == 0 { [o[0] + s * sp, o[1] + fixed * sp] } else { [o[0] + fixed * sp, o[1] + s * sp] };
        // the derivative along the segment is constant inside each cell
        let mut breaks = vec![lo];
        breaks.extend((lo.floor() as usize + 1..=hi.ceil() as usize).map(|k| k as f64).filter(|&k| k > lo && k < hi));
        breaks.push(hi);
        let mut integral = 0.0;
        for w in breaks.windows(2) {
            let mid = point(0.5 * (w[0] + w[1]));
            integral += img.gradient(&mid)[axis] * (w[1] - w[0]) * sp;
        }
        let diff = img.sample(&point(hi)) - img.sample(&point(lo));
        prop_assert!((integral - diff).abs() <= 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences(
        vals in prop::collection::vec(0.0f64..1.0, 30),
        u in 0.0f64..5.0,
        v in 0.0f64..4.0,
    ) {
        let img = random_image(6, 5, 1.3, &vals);
        // stay away from the cell edges
        let u = u.floor() + 0.1 + 0.8 * u.fract();
        let v = v.floor() + 0.1 + 0.8 * v.fract();
        let o = img.origin();
        let sp = img.spacing();
        let x = [o[0] + u * sp, o[1] + v * sp];
        let g = img.gradient(&x);
        let h = 1e-6;
        for a in 0..2 {
            let mut p = x;
            p[a] += h;
            let mut m = x;
            m[a] -= h;
            let fd = (img.sample(&p) - img.sample(&m)) / (2.0 * h);
            prop_assert!((fd - g[a]).abs() <= 1e-8, "{} vs {}", fd, g[a]);
        }
    }

    #[test]
    fn pgm_round_trip_within_quantization(
        vals in prop::collection::vec(0.0f64..=1.0, 12),
        binary in any::<bool>(),
        maxval in prop::sample::select(vec![255u16, 1000, 65535]),
    ) {
        let img = random_image(4, 3, 1.0, &vals);
        let enc = if binary { PgmEncoding::Binary } else { PgmEncoding::Ascii };
        let back = parse_pgm(&format_pgm(&img, enc, maxval), 1.0, [-1.0, 0.5]).unwrap();
        for (a, b) in img.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 1.0 / maxval as f64);
        }
    }
}

#[test]
fn constant_image_is_flat_everywhere() {
    let img = RasterImage::constant(5, 4, 0.5, [0.0; 2], 0.3).unwrap();
    for x in [[-10.0, -10.0], [0.7, 1.1], [30.0, 0.2], [1.25, 100.0]] {
        assert_eq!(img.sample(&x), 0.3);
        assert_eq!(img.gradient(&x), [0.0, 0.0]);
    }
}

#[test]
fn clamped_queries_keep_the_interior_derivative() {
    // I = column index, constant along rows
    let vals: Vec<f64> = (0..12).map(|i| (i % 4) as f64 / 3.0).collect();
    let img = RasterImage::new(4, 3, 2.0, [0.0; 2], vals).unwrap();
    let below = img.gradient(&[3.0, -5.0]);
    assert_eq!(below, [1.0 / 6.0, 0.0]);
    let right = img.gradient(&[50.0, 1.0]);
    assert_eq!(right, [0.0, 0.0]);
    assert_eq!(img.sample(&[50.0, 1.0]), 1.0);
}

#[test]
fn pgm_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.pgm");
    std::fs::write(&path, b"P2\n2 2\n255\n0 255\n255 0\n").unwrap();
    let img = read_pgm(&path, 1.0, [0.0; 2]).unwrap();
    assert_eq!(img.values(), &[0.0, 1.0, 1.0, 0.0]);
    let out = dir.path().join("b.pgm");
    write_pgm(&out, &img, PgmEncoding::Binary, 255).unwrap();
    assert_eq!(read_pgm(&out, 1.0, [0.0; 2]).unwrap().values(), img.values());
    std::fs::write(&path, b"P5\n2 2\n255\n\x00\x01").unwrap();
    assert!(read_pgm(&path, 1.0, [0.0; 2]).is_err());
}
