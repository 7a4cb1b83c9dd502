use lddmm_core::dynamics::flow::{flow_map, SeedJet};
use lddmm_core::dynamics::{
    flow_points, hamiltonian, integrate, pairing, pull_back_vector_jet, pushforward_momentum, IntegratorConfig,
    VectorJet,
};
use lddmm_core::tensor::{det, zero_mat, zero_ten3, Mat3, Ten3, Vec3};
use lddmm_core::{project_order, JetMomentum, JetOrder, JetState, KernelConfig, PhasePoint, Scalar};
use lddmm_core::Dual;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, d: usize, n: usize, k: JetOrder, scale: f64) -> PhasePoint<f64> {
    let mut positions: Vec<Vec3<f64>> = Vec::new();
    while positions.len() < n {
        let mut q = [0.0; 3];
        for v in q.iter_mut().take(d) {
            *v = rng.gen_range(-1.5..1.5);
        }
        if positions.iter().all(|p| (0..d).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>() > 0.25) {
            positions.push(q);
        }
    }
    let state = JetState::with_identity_jets(d, k, positions).unwrap();
    let vec3 = |rng: &mut ChaCha8Rng| {
        let mut v = [0.0; 3];
        for x in v.iter_mut().take(d) {
            *x = rng.gen_range(-scale..scale);
        }
        v
    };
    let p: Vec<_> = (0..n).map(|_| vec3(rng)).collect();
    let mu1: Vec<Mat3<f64>> = if k >= JetOrder::One {
        (0..n)
            .map(|_| {
                let mut m = zero_mat();
                for r in m.iter_mut().take(d) {
                    for v in r.iter_mut().take(d) {
                        *v = rng.gen_range(-scale..scale) * 0.5;
                    }
                }
                m
            })
            .collect()
    } else {
        vec![]
    };
    let mu2: Vec<Ten3<f64>> = if k >= JetOrder::Two {
        (0..n)
            .map(|_| {
                let mut t = zero_ten3();
                for m in t.iter_mut().take(d) {
                    for r in m.iter_mut().take(d) {
                        for v in r.iter_mut().take(d) {
                            *v = rng.gen_range(-scale..scale) * 0.25;
                        }
                    }
                }
                t
            })
            .collect()
    } else {
        vec![]
    };
    PhasePoint::new(state, JetMomentum::new(d, k, p, mu1, mu2).unwrap()).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

fn momentum_flat(m: &JetMomentum<f64>) -> Vec<f64> {
    let d = m.dim();
    let mut v = Vec::new();
    for j in 0..m.len() {
        v.extend(&m.p()[j][..d]);
        if m.order() >= JetOrder::One {
            for r in &m.mu1()[j][..d] {
                v.extend(&r[..d]);
            }
        }
        if m.order() >= JetOrder::Two {
            for t in &m.mu2()[j][..d] {
                for r in &t[..d] {
                    v.extend(&r[..d]);
                }
            }
        }
    }
    v
}

#[test]
fn energy_is_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = KernelConfig::new(1.0, 2).unwrap();
    let icfg = IntegratorConfig::new(1000).unwrap();
    for k in [JetOrder::Zero, JetOrder::One, JetOrder::Two] {
        let n = rng.gen_range(1..=5);
        let x = random_point(&mut rng, 2, n, k, 0.6);
        let tr = integrate(&cfg, &icfg, &x).unwrap();
        let h0 = hamiltonian(&cfg, &x).unwrap();
        let h1 = hamiltonian(&cfg, &tr.last()).unwrap();
        assert!(((h1 - h0) / h0).abs() <= 1e-8, "k={k:?}: {h0} -> {h1}");
    }
}

#[test]
fn embedded_jets_reproduce_lower_order_trajectories() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = KernelConfig::new(1.0, 2).unwrap();
    let icfg = IntegratorConfig::new(100).unwrap();
    for (lo, hi) in [(JetOrder::Zero, JetOrder::One), (JetOrder::One, JetOrder::Two)] {
        let x = random_point(&mut rng, 2, 3, lo, 0.7);
        let a = integrate(&cfg, &icfg, &x).unwrap();
        let b = integrate(&cfg, &icfg, &project_order(&x, hi)).unwrap();
        for s in 0..a.len() {
            let low = project_order(&b.point(s), lo);
            assert!(rel_err(&low.to_flat(), &a.states[s]) <= 1e-10);
        }
    }
}

#[test]
fn two_particle_head_on_stays_on_axis() {
    let cfg = KernelConfig::new(1.0, 2).unwrap();
    let s = JetState::from_positions(2, vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
    let m = JetMomentum::from_p(2, vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
    let x = PhasePoint::new(s, m).unwrap();
    let coarse = integrate(&cfg, &IntegratorConfig::new(100).unwrap(), &x).unwrap();
    let fine = integrate(&cfg, &IntegratorConfig::new(1000).unwrap(), &x).unwrap();
    for st in &coarse.states {
        let pp = coarse.layout.unpack(st);
        let total = pp.momentum.p()[0][0] + pp.momentum.p()[1][0];
        assert!(total.abs() < 1e-14);
        assert!(pp.state.positions().iter().all(|q| q[1] == 0.0));
    }
    let e = rel_err(&coarse.states[100], &fine.states[1000]);
    assert!(e <= 1e-8, "{e}");
}

#[test]
fn rk4_converges_at_fourth_order() {
    let cfg = KernelConfig::new(1.0, 2).unwrap();
    let s = JetState::from_positions(2, vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
    let m = JetMomentum::from_p(2, vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
    let x = PhasePoint::new(s, m).unwrap();
    let end = |steps| integrate(&cfg, &IntegratorConfig::new(steps).unwrap(), &x).unwrap().states[steps].clone();
    let runs: Vec<_> = [125, 250, 500, 1000].into_iter().map(end).collect();
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let e1 = diff(&runs[0], &runs[1]);
    let e2 = diff(&runs[1], &runs[2]);
    let e3 = diff(&runs[2], &runs[3]);
    for order in [(e1 / e2).log2(), (e2 / e3).log2()] {
        assert!((3.8..=4.2).contains(&order), "{order}");
    }
}

// m(t) from the integrator against the transport of m(1) back along the flow.
fn advection_error(k: JetOrder, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = KernelConfig::new(1.0, 2).unwrap();
    let icfg = IntegratorConfig::new(200).unwrap();
    let x = random_point(&mut rng, 2, 3, k, 0.6);
    let tr = integrate(&cfg, &icfg, &x).unwrap();
    let m1 = tr.last().momentum;
    let mut worst: f64 = 0.0;
    for s in (0..=200).step_by(40) {
        let xs = tr.point(s);
        let seeds: Vec<_> = xs.state.positions().iter().map(|&q| SeedJet::at(2, q)).collect();
        let flow = flow_map(&cfg, &icfg, &xs, &seeds, k.as_usize() + 1, s).unwrap();
        let mt = pushforward_momentum(&flow, &m1).unwrap();
        worst = worst.max(rel_err(&momentum_flat(&mt), &momentum_flat(&xs.momentum)));
    }
    worst
}

#[test]
fn transported_endpoint_momentum_matches_trajectory() {
    for (k, tol) in [(JetOrder::Zero, 1e-6), (JetOrder::One, 1e-6), (JetOrder::Two, 1e-4)] {
        let e = advection_error(k, 3 + k.as_usize() as u64);
        assert!(e <= tol, "k={k:?}: {e}");
    }
}

#[test]
fn pairing_with_advected_fields_is_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = KernelConfig::new(1.0, 2).unwrap();
    let icfg = IntegratorConfig::new(200).unwrap();
    let k = JetOrder::Two;
    let x = random_point(&mut rng, 2, 2, k, 0.6);
    let tr = integrate(&cfg, &icfg, &x).unwrap();
    let end = tr.last();
    let w1: Vec<VectorJet<f64>> = (0..2)
        .map(|_| {
            let mut w = VectorJet::zero();
            for a in 0..2 {
                w.w[a] = rng.gen_range(-1.0..1.0);
                for b in 0..2 {
                    w.dw[a][b] = rng.gen_range(-1.0..1.0);
                    for c in b..2 {
                        let v = rng.gen_range(-1.0..1.0);
                        w.d2w[a][b][c] = v;
                        w.d2w[a][c][b] = v;
                    }
                }
            }
            w
        })
        .collect();
    let reference = pairing(&end.momentum, &w1).unwrap();
    for s in (0..200).step_by(50) {
        let xs = tr.point(s);
        let seeds: Vec<_> = xs.state.positions().iter().map(|&q| SeedJet::at(2, q)).collect();
        let flow = flow_map(&cfg, &icfg, &xs, &seeds, 3, s).unwrap();
        let wt: Vec<_> = flow.last().iter().zip(&w1).map(|(map, w)| pull_back_vector_jet(2, k, map, w).unwrap()).collect();
        let v = pairing(&xs.momentum, &wt).unwrap();
        assert!((v - reference).abs() <= 1e-7 * (1.0 + reference.abs()), "{v} vs {reference}");
    }
}

type D2 = Dual<Dual<f64>>;

// Second-order jet at `q` of `w(x) = c(x) Πⱼ Πᵣ ℓⱼᵣ(x)` with affine ℓ vanishing at qⱼ.
fn vanishing_field_jet(q: &Vec3<f64>, particles: &[Vec3<f64>], k: usize, coeffs: &[[f64; 6]; 2], dirs: &[Vec<[f64; 2]>]) -> VectorJet<f64> {
    let eval = |x: [D2; 2], a: usize| -> D2 {
        let c = &coeffs[a];
        let lift = |v: f64| Dual::constant(Dual::constant(v));
        let mut w = lift(c[0]) + lift(c[1]) * x[0] + lift(c[2]) * x[1] + lift(c[3]) * x[0] * x[0] + lift(c[4]) * x[0] * x[1] + lift(c[5]) * x[1] * x[1];
        for (j, p) in particles.iter().enumerate() {
            for r in 0..=k {
                let dir = dirs[j][r];
                w *= lift(dir[0]) * (x[0] - lift(p[0])) + lift(dir[1]) * (x[1] - lift(p[1]));
            }
        }
        w
    };
    let mut out = VectorJet::zero();
    for b in 0..2 {
        for c in 0..2 {
            let mut x = [Dual::constant(Dual::constant(q[0])), Dual::constant(Dual::constant(q[1]))];
            x[b].re.eps += 1.0;
            x[c].eps.re += 1.0;
            for a in 0..2 {
                let v = eval(x, a);
                out.w[a] = v.re.re;
                out.dw[a][b] = v.re.eps;
                out.d2w[a][b][c] = v.eps.eps;
            }
        }
    }
    out
}

#[test]
fn momentum_annihilates_fields_vanishing_at_particles() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in [JetOrder::Zero, JetOrder::One, JetOrder::Two] {
        for _ in 0..5 {
            let x = random_point(&mut rng, 2, 3, k, 1.0);
            let ps = x.state.positions().to_vec();
            let mut coeffs = [[0.0; 6]; 2];
            for c in coeffs.iter_mut().flatten() {
                *c = rng.gen_range(-1.0..1.0);
            }
            let dirs: Vec<Vec<[f64; 2]>> = (0..ps.len())
                .map(|_| (0..=k.as_usize()).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect())
                .collect();
            let jets: Vec<_> = ps.iter().map(|q| vanishing_field_jet(q, &ps, k.as_usize(), &coeffs, &dirs)).collect();
            assert_eq!(pairing(&x.momentum, &jets).unwrap(), 0.0);
        }
    }
}

#[test]
fn flow_jacobians_preserve_orientation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = KernelConfig::new(1.0, 2).unwrap();
    let icfg = IntegratorConfig::new(50).unwrap();
    for k in [JetOrder::Zero, JetOrder::Two] {
        let x = random_point(&mut rng, 2, 4, k, 1.0);
        let seeds: Vec<Vec3<f64>> = (0..25).map(|i| [(i % 5) as f64 * 0.6 - 1.2, (i / 5) as f64 * 0.6 - 1.2, 0.0]).collect();
        let f = flow_points(&cfg, &icfg, &x, &seeds, true).unwrap();
        for s in 0..f.samples.len() {
            assert!(f.jacobians(s).unwrap().iter().all(|a| det(2, a) > 0.0));
        }
    }
}

#[test]
fn three_dimensional_jets_conserve_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cfg = KernelConfig::new(1.0, 3).unwrap();
    let x = random_point(&mut rng, 3, 2, JetOrder::Two, 0.5);
    let tr = integrate(&cfg, &IntegratorConfig::new(200).unwrap(), &x).unwrap();
    let h0 = hamiltonian(&cfg, &x).unwrap();
    let h1 = hamiltonian(&cfg, &tr.last()).unwrap();
    assert!(((h1 - h0) / h0).abs() < 1e-8);
    assert!(tr.last().state.jacobians().iter().all(|a| det(3, a).to_f64() > 0.0));
}
