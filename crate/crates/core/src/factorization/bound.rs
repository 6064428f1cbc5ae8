use std::f64::consts::PI;

use crate::grid::eval_grid;
use crate::trigpoly::TrigPoly;

/// Largest grid used by [`sup_bound`], counted in points.
const MAX_GRID_POINTS: usize = 1 << 20;

/// Rigorous upper bound on `sup |T|`.
///
/// Every point lies within `1/(2N)` of a grid point in each coordinate, and
/// Bernstein's inequality bounds the partial derivatives, so with `G` the grid
/// maximum, `D` the sum of the per-axis degrees and `S = sup|T|`:
/// `S <= G + pi D S / N`. Both `G / (1 - pi D / N)` and
/// `G + pi D sum|c_k| / N` follow; the smallest of these and `sum|c_k|` is returned.
pub fn sup_bound(t: &TrigPoly) -> f64 {
    let l1 = t.l1_norm();
    if t.len() <= 1 {
        return l1;
    }
    let total_degree: i64 = t.degree().iter().sum();
    let d = t.dim() as u32;
    let mut n = (64 * total_degree.max(1) as usize).next_power_of_two();
    while n > 2 && n.pow(d) > MAX_GRID_POINTS {
        n /= 2;
    }
    let g = eval_grid(t, n).max_abs();
    // covers rounding in the transform
    let slack = 1e-13 * l1;
    let ratio = PI * total_degree as f64 / n as f64;
    let mut bound = l1.min(g + ratio * l1 + slack);
    if ratio < 1.0 {
        bound = bound.min((g + slack) / (1.0 - ratio));
    }
    bound
}

/// Minimum of `Re T` over an `n^d` grid.
pub fn grid_min_real(t: &TrigPoly, n: usize) -> f64 {
    eval_grid(t, n)
        .values
        .iter()
        .map(|v| v.re)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_and_monomial() {
        assert_eq!(sup_bound(&TrigPoly::constant(1, 3.0)), 3.0);
        let e = TrigPoly::exp_axis(1, 0);
        let b = sup_bound(&e);
        assert!((1.0..=1.0 + 1e-12).contains(&b));
        assert_eq!(sup_bound(&TrigPoly::zero(2)), 0.0);
    }

    #[test]
    fn bound_dominates_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let coeffs: Vec<Complex64> = (0..6)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let p = TrigPoly::from_coeffs_1d(&coeffs);
            let b = sup_bound(&p);
            let dense = (0..10_000)
                .map(|j| p.eval(&[j as f64 / 10_000.0]).norm())
                .fold(0.0, f64::max);
            assert!(b >= dense);
            assert!(b <= dense * 1.06);
        }
    }

    #[test]
    fn scales_linearly() {
        let p = &TrigPoly::sin_squared_axis(2, 0) + &TrigPoly::exp_axis(2, 1).scale(0.3);
        let b = sup_bound(&p);
        for c in [0.5, 2.0, 7.0] {
            assert!((sup_bound(&p.scale(c)) - c * b).abs() <= 1e-14 * c * b);
        }
    }
}
