use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{bound::grid_min_real, check_real};
use crate::error::{Error, Result};
use crate::grid::{eval_grid, grid_size_for_degree};
use crate::trigpoly::TrigPoly;

/// Roots within this distance of the unit circle are treated as lying on it.
/// Double roots on the circle split by about `sqrt(eps)` under perturbation.
const PAIRING_TOLERANCE: f64 = 1e-5;

const NEGATIVITY_TOLERANCE: f64 = 1e-12;

const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;

/// Spectral factor of a nonnegative univariate polynomial: `t` with `|t|^2 = T`
/// and only nonnegative frequencies.
///
/// The roots of `z^D T(z)` come in pairs `r, 1/conj(r)`; the factor keeps the
/// member inside the unit disk, and roots on the circle (which have even
/// multiplicity) are split by taking every other one in angular order.
pub fn riesz_factor(t: &TrigPoly) -> Result<TrigPoly> {
    if t.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: t.dim(),
        });
    }
    check_real(t)?;
    let scale = t.l1_norm().max(1.0);
    let deg = t.max_degree();
    let c0 = t.coeff(&[0]).re;
    if deg == 0 {
        if c0 < -NEGATIVITY_TOLERANCE * scale {
            return Err(Error::Negative(c0));
        }
        return Ok(TrigPoly::constant(1, c0.max(0.0).sqrt()));
    }
    let n = grid_size_for_degree(deg, (4 * deg as usize).max(64));
    let min = grid_min_real(t, n);
    if min < -NEGATIVITY_TOLERANCE * scale {
        return Err(Error::Negative(min));
    }

    let d = deg as usize;
    let coeffs: Vec<Complex64> = (0..=2 * d).map(|j| t.coeff(&[j as i64 - deg])).collect();
    let roots: Vec<Complex64> = companion_roots(&coeffs)
        .into_iter()
        .map(|r| polish(&coeffs, r))
        .collect();
    let derivative: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &c)| c * j as f64)
        .collect();
    let chosen = select_roots(roots, d, &derivative)?;

    let mut q = vec![Complex64::new(1.0, 0.0)];
    for r in &chosen {
        let mut next = vec![Complex64::default(); q.len() + 1];
        for (j, &c) in q.iter().enumerate() {
            next[j + 1] += c;
            next[j] -= c * r;
        }
        q = next;
    }
    // mean of |q|^2 over the torus must equal the mean of T
    let energy: f64 = q.iter().map(|c| c.norm_sqr()).sum();
    let a = (c0 / energy).sqrt();
    let factor = TrigPoly::from_coeffs_1d(&q.iter().map(|c| c * a).collect::<Vec<_>>());

    let residual = eval_grid(&(&factor.norm_sqr() - t), n).max_abs();
    let allowed = RECONSTRUCTION_TOLERANCE * eval_grid(t, n).max_abs().max(1.0);
    if residual > allowed {
        return Err(Error::Factorization(format!(
            "spectral factor reproduces T only to {residual:.3e}"
        )));
    }
    Ok(factor)
}

/// Eigenvalues of the companion matrix of `sum_j coeffs[j] z^j`.
fn companion_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let mut c = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        c[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        c[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let (_, t) = c.schur().unpack();
    (0..deg).map(|i| t[(i, i)]).collect()
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::default();
    let mut dp = Complex64::default();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// A few Newton steps, kept only while they reduce `|P|`.
fn polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, mut dp) = horner(coeffs, z);
    for _ in 0..8 {
        if dp.norm() == 0.0 {
            break;
        }
        let candidate = z - p / dp;
        let (cp, cdp) = horner(coeffs, candidate);
        if cp.norm() >= p.norm() {
            break;
        }
        z = candidate;
        p = cp;
        dp = cdp;
    }
    z
}

/// Inside roots are kept; circle roots are paired in angular order and each
/// pair is replaced by one double root, refined as a simple root of `P'`.
fn select_roots(
    roots: Vec<Complex64>,
    d: usize,
    derivative: &[Complex64],
) -> Result<Vec<Complex64>> {
    let mut chosen: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|r| r.norm() < 1.0 - PAIRING_TOLERANCE)
        .collect();
    let mut circle: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|r| (r.norm() - 1.0).abs() <= PAIRING_TOLERANCE)
        .collect();
    if !circle.len().is_multiple_of(2) || chosen.len() + circle.len() / 2 != d {
        return Err(Error::Factorization(format!(
            "root pairing failed: {} roots inside the disk, {} on the circle, degree {d}",
            chosen.len(),
            circle.len()
        )));
    }
    circle.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    // a pair straddling the branch cut of arg ends up split between both ends
    if circle.len() >= 2
        && (circle[0] - circle[circle.len() - 1]).norm() < (circle[0] - circle[1]).norm()
    {
        circle.rotate_right(1);
    }
    for pair in circle.chunks_exact(2) {
        let mean = (pair[0] + pair[1]) / 2.0;
        let start = mean / mean.norm();
        let refined = polish(derivative, start);
        let r = if (refined - start).norm() < PAIRING_TOLERANCE {
            refined
        } else {
            start
        };
        chosen.push(r / r.norm());
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check(t: &TrigPoly) -> TrigPoly {
        let f = riesz_factor(t).unwrap();
        assert!(f.terms().all(|(k, _)| k[0] >= 0));
        assert!(f.norm_sqr().max_coeff_diff(t) < 1e-12);
        f
    }

    #[test]
    fn worked_examples() {
        let e = TrigPoly::exp_axis(1, 0);
        let one = TrigPoly::constant(1, 1.0);
        let t = &one + &(&e + &e.conj()).scale(0.5);
        let f = check(&t);
        assert!((f.eval(&[0.0]).norm() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(riesz_factor(&one).unwrap(), one);
        // sin^2 has a double root at z = 1
        let f = check(&TrigPoly::sin_squared_axis(1, 0));
        assert!(f.eval(&[0.0]).norm() < 1e-7);
    }

    #[test]
    fn rejects_bad_input() {
        let e = TrigPoly::exp_axis(1, 0);
        assert!(matches!(riesz_factor(&e), Err(Error::NotReal(_))));
        let neg = &TrigPoly::constant(1, 0.5) - &(&e + &e.conj());
        assert!(matches!(riesz_factor(&neg), Err(Error::Negative(_))));
        assert!(matches!(
            riesz_factor(&TrigPoly::constant(2, 1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let deg = rng.gen_range(1..=8);
            let coeffs: Vec<Complex64> = (0..=deg)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let t = TrigPoly::from_coeffs_1d(&coeffs).norm_sqr();
            let f = riesz_factor(&t).unwrap();
            let err = eval_grid(&(&f.norm_sqr() - &t), 64).max_abs();
            assert!(err <= 1e-8 * t.l1_norm().max(1.0), "error {err}");
        }
    }
}
