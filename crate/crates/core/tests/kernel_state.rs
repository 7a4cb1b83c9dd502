use lddmm_core::tensor::{Mat3, Ten3, Vec3};
use lddmm_core::{
    eval_k_deriv, format_phase_point, gram_matrix, parse_phase_point, project_order, JetMomentum, JetOrder, JetState,
    KernelConfig, MultiIndex, PhasePoint,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn order_of(k: usize) -> JetOrder {
    JetOrder::from_usize(k).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, d: usize, k: JetOrder, n: usize) -> JetState<f64> {
    let mut pts: Vec<Vec3<f64>> = Vec::new();
    while pts.len() < n {
        let mut q = [0.0; 3];
        for v in q.iter_mut().take(d) {
            *v = rng.gen_range(-1.5..1.5);
        }
        if pts.iter().all(|p| (0..d).any(|a| (p[a] - q[a]).abs() > 1e-3)) {
            pts.push(q);
        }
    }
    let jac: Vec<Mat3<f64>> = (0..if k >= JetOrder::One { n } else { 0 })
        .map(|_| {
            let mut m = [[0.0; 3]; 3];
            for a in 0..d {
                for b in 0..d {
                    m[a][b] = if a == b { 1.0 } else { 0.0 } + rng.gen_range(-0.3..0.3);
                }
            }
            m
        })
        .collect();
    let hes: Vec<Ten3<f64>> = (0..if k == JetOrder::Two { n } else { 0 })
        .map(|_| {
            let mut t = [[[0.0; 3]; 3]; 3];
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        t[a][b][c] = rng.gen_range(-0.5..0.5);
                    }
                }
            }
            t
        })
        .collect();
    JetState::new(d, k, pts, jac, hes).unwrap()
}

fn random_momentum(rng: &mut ChaCha8Rng, d: usize, k: JetOrder, n: usize) -> JetMomentum<f64> {
    let mut v = || rng.gen_range(-2.0..2.0);
    let p = (0..n)
        .map(|_| {
            let mut x = [0.0; 3];
            x.iter_mut().take(d).for_each(|e| *e = v());
            x
        })
        .collect();
    let mu1 = (0..if k >= JetOrder::One { n } else { 0 })
        .map(|_| {
            let mut m = [[0.0; 3]; 3];
            for row in m.iter_mut().take(d) {
                row.iter_mut().take(d).for_each(|e| *e = v());
            }
            m
        })
        .collect();
    let mu2 = (0..if k == JetOrder::Two { n } else { 0 })
        .map(|_| {
            let mut t = [[[0.0; 3]; 3]; 3];
            for m in t.iter_mut().take(d) {
                for row in m.iter_mut().take(d) {
                    row.iter_mut().take(d).for_each(|e| *e = v());
                }
            }
            t
        })
        .collect();
    JetMomentum::new(d, k, p, mu1, mu2).unwrap()
}

fn all_multi_indices(dim: usize, max: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for a in 0..=max {
        for b in 0..=max - a {
            for c in 0..=if dim == 3 { max - a - b } else { 0 } {
                out.push(MultiIndex::new(&[a, b, c][..dim]).unwrap());
            }
        }
    }
    out
}

#[test]
fn derivative_consistency_by_step_halving() {
    let cfg = KernelConfig::new(0.9, 3).unwrap();
    let x = [0.31, -0.42, 0.17];
    for alpha in all_multi_indices(3, 4) {
        for axis in 0..3 {
            let mut raised = alpha.orders();
            raised[axis] += 1;
            let beta = MultiIndex::new(&raised).unwrap();
            let exact = eval_k_deriv(&cfg, &beta, &x).unwrap();
            let err = |h: f64| {
                let mut p = x;
                p[axis] += h;
                let mut m = x;
                m[axis] -= h;
                let fd = (eval_k_deriv(&cfg, &alpha, &p).unwrap() - eval_k_deriv(&cfg, &alpha, &m).unwrap()) / (2.0 * h);
                (fd - exact).abs()
            };
            let (e1, e2) = (err(2e-2), err(1e-2));
            let ratio = e1 / e2;
            assert!((3.5..=4.5).contains(&ratio), "{alpha:?} axis {axis}: ratio {ratio}");
        }
    }
}

#[test]
fn gram_is_symmetric_psd_and_translation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let d = 2 + trial % 2;
        let k = order_of(trial % 3);
        let n = rng.gen_range(1..=6);
        let cfg = KernelConfig::new(rng.gen_range(0.5..2.0), d).unwrap();
        let state = random_state(&mut rng, d, k, n);
        let g = gram_matrix(&cfg, &state, k).unwrap();
        let m = g.size();
        for r in 0..m {
            for c in 0..m {
                assert_eq!(g.get(r, c).to_bits(), g.get(c, r).to_bits());
            }
        }
        let dense = DMatrix::from_fn(m, m, |r, c| g.get(r, c));
        let min = dense.symmetric_eigen().eigenvalues.min();
        assert!(min >= -1e-10, "trial {trial}: min eigenvalue {min}");
        let mut shift = [0.0; 3];
        shift.iter_mut().take(d).for_each(|s| *s = rng.gen_range(-10.0..10.0));
        let moved = gram_matrix(&cfg, &state.translated(&shift), k).unwrap();
        let scale = g.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in g.data().iter().zip(moved.data()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }
}

proptest! {
    #[test]
    fn phase_file_round_trip(seed in any::<u64>(), d in 2usize..=3, k in 0usize..=2, n in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = order_of(k);
        let x = PhasePoint::new(random_state(&mut rng, d, k, n), random_momentum(&mut rng, d, k, n)).unwrap();
        let text = format_phase_point(&x);
        let back: PhasePoint<f64> = parse_phase_point(&text).unwrap();
        prop_assert_eq!(&back, &x);
        prop_assert_eq!(format_phase_point(&back), text);
    }

    #[test]
    fn projection_through_second_order_is_transparent(seed in any::<u64>(), from in 0usize..=2, to in 0usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = order_of(from);
        let x = PhasePoint::new(random_state(&mut rng, 2, k, 3), random_momentum(&mut rng, 2, k, 3)).unwrap();
        let to = order_of(to);
        prop_assert_eq!(project_order(&project_order(&x, JetOrder::Two), to), project_order(&x, to));
    }
}
