use std::collections::BTreeMap;

use framesmith::analysis::{
    approx_order_experiment, filterbank_analyze, filterbank_synthesize, mallat_l2_check,
    PeriodLattice, Signal,
};
use framesmith::builder::{
    build_dual, build_tight, dual_correction, random_free_polys, seed_polyphase_row, FrameSystem,
};
use framesmith::extension::{dual_extend, tight_extend};
use framesmith::factorization::{sos_factor, sup_bound, SosOptions};
use framesmith::grid::{eval_grid, grid_size_for_degree};
use framesmith::moments::{dual_lambda, vm_targets};
use framesmith::multi_index::up_to_order;
use framesmith::polyphase::{product_residual, Product};
use framesmith::verify::{check_uep_dual, verify_frame_system};
use framesmith::{DilationMatrix, LambdaSet, MultiIndex, TrigPoly};
use num_complex::Complex64;
use proptest::prelude::*;

fn matrices() -> Vec<DilationMatrix> {
    [
        vec![vec![2]],
        vec![vec![3]],
        vec![vec![-2]],
        vec![vec![5]],
        vec![vec![1, 1], vec![1, -1]],
        vec![vec![1, -1], vec![1, 1]],
        vec![vec![2, 0], vec![0, 2]],
        vec![vec![2, 1], vec![0, 2]],
        vec![vec![0, 2], vec![1, 0]],
        vec![vec![2, 0, 0], vec![0, 1, 1], vec![0, -1, 1]],
    ]
    .into_iter()
    .map(|e| DilationMatrix::new(e).unwrap())
    .collect()
}

fn matrix() -> impl Strategy<Value = DilationMatrix> {
    (0..matrices().len()).prop_map(|i| matrices().swap_remove(i))
}

fn poly(d: usize, max_deg: i64, max_terms: usize) -> impl Strategy<Value = TrigPoly> {
    prop::collection::vec(
        (
            prop::collection::vec(-max_deg..=max_deg, d),
            -1.0..1.0f64,
            -1.0..1.0f64,
        ),
        1..=max_terms,
    )
    .prop_map(move |terms| {
        TrigPoly::from_terms(
            d,
            terms
                .into_iter()
                .map(|(k, re, im)| (k, Complex64::new(re, im))),
        )
        .unwrap()
    })
}

fn rational() -> impl Strategy<Value = f64> {
    (1i32..=6).prop_flat_map(|q| (-q..=q).prop_map(move |p| p as f64 / q as f64))
}

fn lambda_set() -> impl Strategy<Value = LambdaSet> {
    (0u32..=3, 1usize..=2).prop_flat_map(|(n, d)| {
        let count = up_to_order(d, n).len();
        prop::collection::vec((rational(), rational()), count).prop_map(move |vals| {
            let values: BTreeMap<MultiIndex, Complex64> = up_to_order(d, n)
                .into_iter()
                .zip(vals)
                .map(|(a, (re, im))| {
                    let v = if a.is_zero() {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(re, im)
                    };
                    (a, v)
                })
                .collect();
            LambdaSet::new(n, d, values).unwrap()
        })
    })
}

/// Central difference approximation of `D^beta p(x)`.
fn finite_difference(p: &TrigPoly, x: &[f64], beta: &[u32], h: f64) -> Complex64 {
    match beta.iter().position(|&b| b > 0) {
        None => p.eval(x),
        Some(j) => {
            let mut rest = beta.to_vec();
            rest[j] -= 1;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            (finite_difference(p, &xp, &rest, h) - finite_difference(p, &xm, &rest, h)) / (2.0 * h)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coset_decomposition(m in matrix(), k in prop::collection::vec(-1000i64..1000, 3)) {
        let k = &k[..m.dim()];
        let (i, l) = m.decompose(k);
        let back: Vec<i64> = m.apply(&l).iter().zip(&m.digits()[i]).map(|(a, b)| a + b).collect();
        prop_assert_eq!(back.as_slice(), k);
    }

    #[test]
    fn digits_are_a_transversal(m in matrix()) {
        prop_assert_eq!(m.digits().len() as i64, m.det().abs());
        for (i, s) in m.digits().iter().enumerate() {
            prop_assert_eq!(m.coset_index(s), i);
        }
    }

    #[test]
    fn split_merge_round_trip(m in matrix(), seed in any::<u64>()) {
        let d = m.dim();
        let p = TrigPoly::from_terms(
            d,
            (0..6).map(|t| {
                let k: Vec<i64> = (0..d).map(|j| ((seed >> (4 * (t + j))) % 9) as i64 - 4).collect();
                (k, Complex64::new(t as f64 + 0.5, -(t as f64) / 3.0))
            }),
        )
        .unwrap();
        let back = TrigPoly::polyphase_merge(&p.polyphase_split(&m), &m).unwrap();
        prop_assert!(back.max_coeff_diff(&p) <= 1e-14);
    }

    #[test]
    fn leibniz_rule(p in poly(2, 3, 5), q in poly(2, 3, 5), b0 in 0u32..=2, b1 in 0u32..=2) {
        let beta = MultiIndex(vec![b0, b1]);
        let lhs = (&p * &q).derivative_at_origin(&beta);
        let mut rhs = Complex64::default();
        let mut scale = 0.0;
        for g in beta.below() {
            let term = beta.binomial(&g) * p.derivative_at_origin(&g) * q.derivative_at_origin(&beta.sub(&g));
            scale += term.norm();
            rhs += term;
        }
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn conj_is_an_involution(p in poly(2, 4, 6), x0 in -0.5..0.5f64, x1 in -0.5..0.5f64) {
        prop_assert_eq!(p.conj().conj(), p.clone());
        prop_assert!((p.conj().eval(&[x0, x1]) - p.eval(&[x0, x1]).conj()).norm() <= 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences(p in poly(2, 2, 5), b0 in 0u32..=2, b1 in 0u32..=1) {
        // Rounding in nested central differences swamps orders above two.
        prop_assume!(b0 + b1 <= 2);
        let beta = MultiIndex(vec![b0, b1]);
        let exact = p.derivative_at_origin(&beta);
        let approx = finite_difference(&p, &[0.0, 0.0], &beta.0, 1e-4);
        let scale: f64 = p
            .terms()
            .map(|(k, c)| {
                c.norm()
                    * k.iter()
                        .zip(&beta.0)
                        .map(|(&kj, &bj)| (2.0 * std::f64::consts::PI * kj as f64).abs().powi(bj as i32))
                        .product::<f64>()
            })
            .sum();
        prop_assert!((exact - approx).norm() <= 1e-6 * scale.max(1.0));
    }

    #[test]
    fn dual_lambda_is_an_involution(lambda in lambda_set()) {
        prop_assert!(dual_lambda(&dual_lambda(&lambda)).max_diff(&lambda) <= 1e-13);
    }

    #[test]
    fn zeroth_targets(m in matrix(), lambda in lambda_set()) {
        prop_assume!(lambda.dim() == m.dim());
        let targets = vm_targets(&lambda, &m);
        let zero = MultiIndex::zero(m.dim());
        for k in 0..m.m() {
            let v = targets[&(k, zero.clone())];
            prop_assert!((v - 1.0 / (m.m() as f64).sqrt()).norm() <= 1e-15);
        }
    }

    #[test]
    fn sup_bound_is_homogeneous(p in poly(1, 4, 4), c in 0.01..100.0f64) {
        let t = p.norm_sqr();
        let a = sup_bound(&t.scale(c));
        let b = c * sup_bound(&t);
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        let n = grid_size_for_degree(t.max_degree(), 256);
        prop_assert!(sup_bound(&t) >= eval_grid(&t, n).max_abs() * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sos_reproduces_sums_of_squares(p in poly(2, 1, 3), q in poly(2, 1, 3)) {
        let t = &(&p.norm_sqr() + &q.norm_sqr()) + &TrigPoly::constant(2, 0.1);
        let f = sos_factor(&t, &SosOptions::default()).unwrap();
        let sum = f.factors.iter().fold(TrigPoly::zero(2), |acc, g| &acc + &g.norm_sqr());
        let n = grid_size_for_degree(sum.max_degree().max(t.max_degree()), 32);
        let err = eval_grid(&(&sum - &t), n).max_abs();
        prop_assert!(err <= 1e-6 * eval_grid(&t, n).max_abs());
    }

    #[test]
    fn extensions_keep_rows_and_bound_degrees(m_idx in 0usize..3, n in 0u32..=2, seed in any::<u64>(), tight in any::<bool>()) {
        let m = [
            DilationMatrix::new(vec![vec![2]]).unwrap(),
            DilationMatrix::new(vec![vec![3]]).unwrap(),
            DilationMatrix::quincunx(),
        ][m_idx]
            .clone();
        let lambda = LambdaSet::delta(n, m.dim());
        let row = seed_polyphase_row(&lambda, &m, n, &random_free_polys(&m, n, 0.02, seed)).unwrap();
        let row_t = seed_polyphase_row(&lambda, &m, n, &random_free_polys(&m, n, 0.02, seed ^ 1)).unwrap();
        let corr = dual_correction(&row, &row_t, n).unwrap();
        let deg = corr.row.iter().chain(&corr.row_dual).map(TrigPoly::max_degree).max().unwrap();
        let (p, pt) = if tight {
            let mut unit = vec![TrigPoly::constant(m.dim(), 0.6), TrigPoly::constant(m.dim(), 0.8)];
            unit.push(TrigPoly::zero(m.dim()));
            let p = tight_extend(&unit).unwrap();
            prop_assert_eq!(p.row(0), unit.as_slice());
            (p.clone(), p)
        } else {
            let (p, pt) = dual_extend(&corr.row, &corr.row_dual).unwrap();
            prop_assert_eq!(p.row(0), corr.row.as_slice());
            prop_assert_eq!(pt.row(0), corr.row_dual.as_slice());
            prop_assert!(p.max_degree() <= 2 * deg && pt.max_degree() <= 2 * deg);
            (p, pt)
        };
        // Rounding in the extension grows with the fourth power of the row size.
        let size: f64 = p.row(0).iter().map(TrigPoly::l1_norm).sum::<f64>()
            * pt.row(0).iter().map(TrigPoly::l1_norm).sum::<f64>();
        let tol = 1e-9f64.max(1e3 * f64::EPSILON * size * size);
        let r = product_residual(&p, &pt, Product::Rows, 64).unwrap();
        let c = product_residual(&p, &pt, Product::Columns, 64).unwrap();
        prop_assert!(r <= tol && c <= tol, "rows {r:e}, columns {c:e}, tolerance {tol:e}");
    }

    #[test]
    fn corrections_keep_moment_targets(n in 0u32..=2, seed in any::<u64>()) {
        let m = DilationMatrix::new(vec![vec![2]]).unwrap();
        let lambda = LambdaSet::delta(n, 1);
        let row = seed_polyphase_row(&lambda, &m, n, &random_free_polys(&m, n, 0.05, seed)).unwrap();
        let row_t = seed_polyphase_row(&dual_lambda(&lambda), &m, n, &random_free_polys(&m, n, 0.05, !seed)).unwrap();
        let corr = dual_correction(&row, &row_t, n).unwrap();
        for beta in up_to_order(1, n) {
            for (p, q) in row.iter().zip(&corr.row) {
                let before = p.derivative_at_origin(&beta);
                let after = q.derivative_at_origin(&beta);
                let scale = (2.0 * std::f64::consts::PI).powi(beta.order() as i32);
                prop_assert!((before - after).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn provenance_rebuild_and_reports_are_stable(n in 0u32..=2, seed in any::<u64>()) {
        let m = DilationMatrix::new(vec![vec![2]]).unwrap();
        let lambda = LambdaSet::delta(n, 1);
        let fs = build_dual(
            &m,
            n,
            &lambda,
            &random_free_polys(&m, n, 0.02, seed),
            &random_free_polys(&m, n, 0.02, seed.wrapping_add(1)),
        )
        .unwrap();
        let again = fs.rebuild().unwrap();
        let worst = fs
            .polyphase
            .rows()
            .iter()
            .flatten()
            .zip(again.polyphase.rows().iter().flatten())
            .map(|(a, b)| a.max_coeff_diff(b))
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-15);
        let loaded = FrameSystem::from_json(&fs.to_json().unwrap()).unwrap();
        prop_assert_eq!(verify_frame_system(&fs), verify_frame_system(&loaded));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    // Quincunx systems of order 2 sit at the edge of double precision and are left out.
    #[test]
    fn reconstruction_follows_uep(m_idx in 0usize..3, n in 0u32..=2, scale in 0.0..0.1f64, seed in any::<u64>()) {
        let m = [
            DilationMatrix::new(vec![vec![2]]).unwrap(),
            DilationMatrix::new(vec![vec![4]]).unwrap(),
            DilationMatrix::quincunx(),
        ][m_idx]
            .clone();
        prop_assume!(!(m_idx == 2 && n == 2));
        let d = m.dim();
        let fs = build_dual(
            &m,
            n,
            &LambdaSet::delta(n, d),
            &random_free_polys(&m, n, scale, seed),
            &random_free_polys(&m, n, scale, seed.wrapping_add(7)),
        );
        // Ill-conditioned draws are rejected by the builder itself.
        let Ok(fs) = fs else { return Ok(()) };
        let uep = check_uep_dual(&fs.uep_matrix().unwrap(), &fs.uep_matrix_dual().unwrap()).unwrap();
        let shape: &[usize] = if d == 1 { &[64] } else { &[8, 8] };
        let values: Vec<f64> = (0..64).map(|i| ((i as u64).wrapping_mul(seed | 1) % 1000) as f64 / 500.0 - 1.0).collect();
        let x = Signal::from_real(PeriodLattice::diagonal(shape).unwrap(), &values).unwrap();
        let levels = if m.m() == 4 { 2 } else { 3 };
        let y = filterbank_synthesize(&fs, &filterbank_analyze(&fs, &x, levels).unwrap()).unwrap();
        if uep <= 1e-10 {
            prop_assert!(y.max_abs_diff(&x) <= 1e-10, "UEP {uep:e}, PR {:e}", y.max_abs_diff(&x));
        }
    }
}

#[test]
fn tight_products_are_monotone() {
    let m = DilationMatrix::new(vec![vec![2]]).unwrap();
    for n in 0..=2 {
        let fs = build_tight(&m, n, &LambdaSet::delta(n, 1), &[]).unwrap();
        let r = mallat_l2_check(&fs.refinable, &m, 8, 64).unwrap();
        assert!(r.monotone, "n = {n}: {:?}", r.norms);
        assert!(r.estimate <= 1.0 + 1e-6);
    }
}

#[test]
fn slopes_track_vanishing_moments() {
    let m = DilationMatrix::new(vec![vec![2]]).unwrap();
    let f = |x: &[f64]| {
        (2.0 * std::f64::consts::PI * x[0]).cos() + 0.3 * (6.0 * std::f64::consts::PI * x[0]).sin()
    };
    let levels = [6, 7, 8, 9, 10, 11];
    let slope = |fs: &FrameSystem| {
        approx_order_experiment(fs, &f, &levels, 15)
            .unwrap()
            .slope
            .unwrap()
    };

    let haar = build_tight(&m, 0, &LambdaSet::delta(0, 1), &[]).unwrap();
    let s = slope(&haar);
    assert!((-1.2..=-0.8).contains(&s), "Haar slope {s}");

    let dual = build_dual(
        &m,
        1,
        &LambdaSet::delta(1, 1),
        &random_free_polys(&m, 1, 0.05, 11),
        &random_free_polys(&m, 1, 0.05, 12),
    )
    .unwrap();
    let s = slope(&dual);
    assert!((-2.4..=-1.6).contains(&s), "dual VM1 slope {s}");

    // Tight systems can exceed order n + 1 but never fall short of it.
    let tight = build_tight(&m, 1, &LambdaSet::delta(1, 1), &[]).unwrap();
    let s = slope(&tight);
    assert!(s <= -1.6, "tight VM1 slope {s}");
}
