use proptest::prelude::*;

use rectify::certify::{c_alpha, weighted_product_check, linear_product_check, grad_bound, lagarias_sequence, LagariasParams};
use rectify::density::{DyadicCube, DyadicField};
use rectify::moduli::Modulus;
use rectify::pointset::{Generator, IntegerCube, PointSet};
use rectify::transport::{box_map_1d, box_map_2d, compose, Mode};

fn perturbed(d: usize, side: i64, amp: f64, seed: u64) -> PointSet {
    PointSet::generate(Generator::Perturbed { d, spacing: 1.0, side, amplitude: amp, seed }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn counts_add_over_a_partition(seed in 0u64..1000, cx in 0i64..8, cy in 0i64..8) {
        let x = perturbed(2, 16, 0.3, seed);
        let big = x.count(&IntegerCube::new(vec![cx, cy], 8)).unwrap();
        let mut parts = 0;
        for a in 0..2 {
            for b in 0..2 {
                parts += x.count(&IntegerCube::new(vec![cx + 4 * a, cy + 4 * b], 4)).unwrap();
            }
        }
        prop_assert_eq!(big, parts);
    }

    #[test]
    fn deviation_is_at_least_one(seed in 0u64..1000, rho in 0.5f64..2.0, i in 1u32..3) {
        let x = perturbed(2, 16, 0.3, seed);
        let k = 1i64 << i;
        let c = IntegerCube::new(vec![3, 5], k);
        let e = x.deviation(rho, &c).unwrap();
        prop_assert!(e >= 1.0);
        let n = x.count(&c).unwrap() as f64;
        let r = n / (rho * (k * k) as f64);
        prop_assert!((e - r.max(1.0 / r)).abs() < 1e-12);
    }

    #[test]
    fn lattice_deviation_is_translation_invariant(tx in 0i64..8, ty in 0i64..8, i in 0u32..3) {
        let x = PointSet::generate(Generator::Lattice { d: 2, spacing: 1.0, side: 20 }).unwrap();
        let k = 1i64 << i;
        let a = x.deviation(1.0, &IntegerCube::new(vec![0, 0], k)).unwrap();
        let b = x.deviation(1.0, &IntegerCube::new(vec![tx, ty], k)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn averaging_is_a_mass_preserving_projection(seed in 0u64..1000, i in 0u32..4) {
        let f = DyadicField::random(2, 4, 1.0, 2.0, seed).unwrap();
        let g = f.average(i).unwrap();
        let gg = g.average(i).unwrap();
        prop_assert!((g.total_mass() - f.total_mass()).abs() < 1e-12);
        for (a, b) in g.values().iter().zip(gg.values()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
        let back = g.refine(4 - i).unwrap().average(i).unwrap();
        for (a, b) in g.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_oscillation_bounds(seed in 0u64..1000, level in 0u32..4, ix in 0usize..8, iy in 0usize..8) {
        let f = DyadicField::random(2, 4, 1.0, 2.0, seed).unwrap();
        let n = 1usize << level;
        let c = DyadicCube { level, index: vec![ix % n, iy % n] };
        let osc = f.mean_osc(&c).unwrap();
        prop_assert!(osc >= 0.0);
        // ⨍|f − m| ≤ (sup − inf)/2 for values in [1, 2].
        prop_assert!(osc <= 0.5 + 1e-12);
        let flat = DyadicField::constant(2, 1.7, 4).unwrap();
        prop_assert!(flat.mean_osc(&c).unwrap() < 1e-12);
    }

    #[test]
    fn box_map_determinants(alpha in 0.01f64..0.99, axis in 0usize..2) {
        let m = box_map_2d(alpha, axis).unwrap();
        for k in 0..m.len() {
            let want = if m.in_first_half(k) { 2.0 * alpha } else { 2.0 * (1.0 - alpha) };
            prop_assert!((m.piece(k).det() - want).abs() < 1e-12);
        }
        prop_assert!(m.check().passes(1e-12));
    }

    #[test]
    fn box_map_round_trip(alpha in 0.02f64..0.98, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let m = box_map_2d(alpha, 1).unwrap();
        let p = m.apply_inv(m.apply([x, y]).unwrap()).unwrap();
        prop_assert!((p[0] - x).abs() < 1e-12 && (p[1] - y).abs() < 1e-12);
        let line = box_map_1d(&[alpha, 1.0 - alpha]).unwrap();
        prop_assert!((line.eval_inv(line.eval(x).unwrap()).unwrap() - x).abs() < 1e-14);
    }

    #[test]
    fn grad_bound_is_monotone(es in prop::collection::vec(1.0f64..1.5, 1..8), k in 0usize..8, bump in 0.0f64..0.2, c in 0.1f64..5.0) {
        let m = es.len() as u32;
        let g = grad_bound(&es, 2, c, 1, m).unwrap();
        let mut up = es.clone();
        let j = k % es.len();
        up[j] += bump;
        prop_assert!(grad_bound(&up, 2, c, 1, m).unwrap() >= g);
        prop_assert!(grad_bound(&es, 2, c * 1.5, 1, m).unwrap() >= g);
        prop_assert_eq!(grad_bound(&vec![1.0; es.len()], 2, c, 1, m).unwrap(), 1.0);
    }

    #[test]
    fn weighted_product_respects_the_horizon_constant(raw in prop::collection::vec(0.001f64..1.0, 1..64), a_idx in 0usize..3) {
        let alpha = [0.25, 0.5, 1.0][a_idx];
        let a: Vec<f64> = raw.iter().enumerate().map(|(k, u)| u / (k as f64 + 2.0)).collect();
        let r = weighted_product_check(&a, alpha).unwrap();
        prop_assert!(r.c_needed <= c_alpha(alpha, a.len()) * (1.0 + 1e-12));
    }

    #[test]
    fn linear_product_never_fails_past_threshold(raw in prop::collection::vec(0.001f64..2.0, 1..80), decay in 0.3f64..0.95) {
        let a: Vec<f64> = raw.iter().enumerate().map(|(k, u)| u * decay.powi(k as i32)).collect();
        prop_assert!(linear_product_check(&a).unwrap().violations.is_empty());
    }

    #[test]
    fn lagarias_monotonicity(p in 0.0f64..2.0, c1 in 0.05f64..0.95, c5 in 2.1f64..6.0) {
        let l = lagarias_sequence(LagariasParams { p, d: 1, c1, c5, u2: 10.0 }, 50).unwrap();
        prop_assert!(l.u.windows(2).all(|w| w[1].1 > w[0].1));
        prop_assert!(l.rows.windows(2).all(|w| w[1].2 <= w[0].2 && w[1].1 >= w[0].1));
    }

    #[test]
    fn tangent_extension_stays_concave(p in 0.0f64..4.0, t in 0.01f64..2.0, h in 0.001f64..0.5) {
        let w = Modulus::log_power(p).unwrap();
        let (a, b, m) = (w.eval_ext(t).unwrap(), w.eval_ext(t + 2.0 * h).unwrap(), w.eval_ext(t + h).unwrap());
        prop_assert!(m + 1e-9 >= 0.5 * (a + b));
        prop_assert!(b + 1e-12 >= a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn composed_map_pushes_forward_and_inverts(seed in 0u64..1000) {
        let f = DyadicField::random(2, 3, 1.0, 2.0, seed).unwrap();
        let u = compose(&f, 3, Mode::Exact2D).unwrap();
        let rep = u.pushforward_check(3).unwrap();
        prop_assert!(rep.max_error <= 1e-9);
        prop_assert!(u.round_trip_error(200, seed).unwrap() <= 1e-9);
        let line = DyadicField::random(1, 5, 1.0, 2.0, seed).unwrap();
        let v = compose(&line, 5, Mode::Exact1D).unwrap();
        prop_assert!(v.pushforward_check(5).unwrap().max_error <= 1e-12);
    }
}
