use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qtlab_core::donaldson::{build_schedule, eval_poly};
use qtlab_core::integral_geometry::grassmann::{gaussian_matrix, haar_orthogonal};
use qtlab_core::integral_geometry::sample_grassmannian;
use qtlab_core::mc::stream_rng;
use qtlab_core::model::{discretize_window, tail_majorant, SubmanifoldY};
use qtlab_core::polynomial::{search_good_value, ValueLandscape};
use qtlab_core::transversality::{
    chained_ms_bound, hyperplane_sandwich, mi, ms, standard_j, LinearMapR, Subspace,
};

fn matrix(max: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(-3.0f64..3.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
    })
}

fn cmatrix(r: usize, c: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), r * c)
        .prop_map(move |v| DMatrix::from_iterator(r, c, v.into_iter().map(|(a, b)| Complex64::new(a, b))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ms_is_mi_of_transpose(m in matrix(6)) {
        let u = LinearMapR::new(m);
        let (a, b) = (ms(&u).unwrap(), mi(&u.transpose()).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + u.op_norm()));
    }

    #[test]
    fn ms_is_scale_equivariant(m in matrix(6), s in 0.01f64..100.0) {
        let a = ms(&LinearMapR::new(m.clone())).unwrap();
        let b = ms(&LinearMapR::new(m * s)).unwrap();
        prop_assert!((b - s * a).abs() <= 1e-9 * (1.0 + s * a));
    }

    #[test]
    fn ms_is_at_most_op_norm(m in matrix(6)) {
        let u = LinearMapR::new(m);
        prop_assert!(ms(&u).unwrap() <= u.op_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn sandwich_holds(n in 2usize..=3, r in 1usize..=3, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let m = gaussian_matrix(2 * r, 2 * n, &mut rng);
        let u = LinearMapR::with_complex(m, standard_j(n), standard_j(r)).unwrap();
        let nu = gaussian_matrix(2 * n, 1, &mut rng);
        let sw = hyperplane_sandwich(&u, &Subspace::complement_of(&nu)).unwrap();
        prop_assert!(sw.lower_slack() >= -1e-9);
        prop_assert!(sw.upper_slack() >= -1e-9);
    }

    #[test]
    fn complex_linear_maps_have_equal_moduli(c in (2usize..=3, 1usize..=3).prop_flat_map(|(n, r)| cmatrix(r, n)), seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let u = LinearMapR::from_complex(&c);
        let nu = gaussian_matrix(2 * c.ncols(), 1, &mut rng);
        let sw = hyperplane_sandwich(&u, &Subspace::complement_of(&nu)).unwrap();
        prop_assert!((sw.ms_k - sw.ms_h).abs() < 1e-9);
    }

    #[test]
    fn chain_residual_nonpositive(a in matrix(5), extra in 1usize..=5, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let b = gaussian_matrix(extra, a.ncols(), &mut rng);
        let res = chained_ms_bound(&LinearMapR::new(a), &LinearMapR::new(b)).unwrap();
        prop_assert!(res <= 1e-9);
    }

    #[test]
    fn haar_frames_are_orthonormal(n in 1usize..=7, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let q = haar_orthogonal(n, &mut rng);
        prop_assert!((q.transpose() * &q - DMatrix::identity(n, n)).amax() < 1e-12);
        let k = 1 + (seed as usize) % n;
        let g = sample_grassmannian(k, n, &mut rng).unwrap();
        prop_assert!((g.frame.transpose() * &g.frame - DMatrix::identity(k, k)).amax() < 1e-12);
    }

    #[test]
    fn colour_classes_are_separated(k in 4u32..=64, d in 1.0f64..6.0, side in 0.2f64..1.0) {
        let y = SubmanifoldY::real_square(-side / 2.0, side / 2.0).unwrap();
        let net = discretize_window(&y, k).unwrap();
        let col = net.color(d);
        let min_dist = d * net.delta;
        for c in 0..col.n_colors {
            let cls = col.class(c);
            for (i, &a) in cls.iter().enumerate() {
                for &b in &cls[i + 1..] {
                    let dist: f64 = net.points[a].iter().zip(&net.points[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                    prop_assert!(dist >= min_dist);
                }
            }
        }
    }

    #[test]
    fn tail_majorant_recursion(m1 in prop::collection::vec(0.0f64..2.0, 1..4), c in 0.2f64..3.0, n in 0u64..30) {
        // M2(n) e^{-Cn} - M2(n+1) e^{-C(n+1)} = M1(n) e^{-Cn}
        let a = tail_majorant(&m1, c, n).unwrap().value;
        let b = tail_majorant(&m1, c, n + 1).unwrap().value;
        let lhs = a - b * (-c).exp();
        let rhs = eval_poly(&m1, n as f64);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + a.abs()));
        prop_assert!(a >= rhs * (1.0 - 1e-12));
    }

    #[test]
    fn search_budget_is_monotone(seed in any::<u64>(), b in 1usize..200, extra in 0usize..200) {
        let mut rng = stream_rng(seed, 1);
        let values: Vec<Vec<f64>> = (0..30).map(|_| {
            let v = gaussian_matrix(2, 1, &mut rng);
            vec![0.05 * v[0], 0.05 * v[1]]
        }).collect();
        let ms_terms = vec![0.0; values.len()];
        let land = ValueLandscape { values, ms_terms, value_weight: 1.0 };
        let small = search_good_value(&land, 0.1, b, &mut stream_rng(seed, 2));
        let large = search_good_value(&land, 0.1, b + extra, &mut stream_rng(seed, 2));
        if let Ok(s) = small {
            prop_assert!(large.unwrap().module >= s.module);
        }
    }

    #[test]
    fn schedule_invariants(eps in 0.01f64..0.5, a in 3.0f64..50.0, p0 in 1.0f64..3.0, p1 in 0.0f64..3.0, n in 1usize..40) {
        let p = [p0, p1];
        let s = match build_schedule(eps, a, &p, 1.0, 4.0, n) {
            Ok(s) => s,
            Err(qtlab_core::Error::Degenerate(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        prop_assert_eq!(s.len(), n);
        let e1 = eps / a;
        for i in 0..n {
            prop_assert!(s.eps[i] <= e1);
            prop_assert!(s.eta[i] * eval_poly(&p, (1.0 / s.eps[i]).ln()) <= s.eps[i] * (1.0 + 1e-12));
            if i + 1 < n {
                prop_assert!(s.eta[i + 1] <= s.eta[i] / 2.0);
                prop_assert!(s.eps[i + 1] <= s.eta[i] / (2.0 * a) * (1.0 + 1e-12));
            }
        }
    }
}
