use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{bound::grid_min_real, check_real, riesz::riesz_factor};
use crate::error::{Error, Result};
use crate::grid::{eval_grid, grid_size_for_degree};
use crate::lattice::IVec;
use crate::trigpoly::TrigPoly;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SosOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the coefficient mismatch, relative to `sum |c_k|`.
    pub tolerance: f64,
    /// Required minimum of `T` for the Gram-matrix search.
    pub margin: f64,
    /// Accepted `sup |sum |t_i|^2 - T|` relative to `sup |T|`.
    pub acceptance: f64,
}

impl Default for SosOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-9,
            margin: 1e-6,
            acceptance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SosMethod {
    Constant,
    Riesz,
    Separable,
    Gram,
}

#[derive(Debug, Clone)]
pub struct SosFactorization {
    pub factors: Vec<TrigPoly>,
    pub method: SosMethod,
    pub iterations: usize,
    /// `sup |sum |t_i|^2 - T|` on the verification grid.
    pub residual: f64,
}

/// Writes a nonnegative polynomial as `sum_i |t_i|^2`.
pub fn sos_factor(t: &TrigPoly, opts: &SosOptions) -> Result<SosFactorization> {
    check_real(t)?;
    let d = t.dim();
    let (factors, method, iterations) = if t.max_degree() == 0 {
        let c = t.coeff(&vec![0; d]).re;
        if c < 0.0 {
            return Err(Error::Negative(c));
        }
        (
            vec![TrigPoly::constant(d, c.sqrt())],
            SosMethod::Constant,
            0,
        )
    } else if d == 1 {
        (vec![riesz_factor(t)?], SosMethod::Riesz, 0)
    } else if let Some(f) = separable_factor(t)? {
        (vec![f], SosMethod::Separable, 0)
    } else {
        let n = grid_size_for_degree(t.max_degree(), 16);
        let min = grid_min_real(t, n);
        if min < opts.margin {
            return Err(Error::precondition(
                "Gram-matrix factorization needs a strictly positive polynomial",
                min,
                opts.margin,
            ));
        }
        let (factors, iterations) = gram_factor(t, opts)?;
        (factors, SosMethod::Gram, iterations)
    };

    let mut sum = TrigPoly::zero(d);
    for f in &factors {
        sum = &sum + &f.norm_sqr();
    }
    let n = grid_size_for_degree(sum.max_degree().max(t.max_degree()), 16);
    let residual = eval_grid(&(&sum - t), n).max_abs();
    let scale = eval_grid(t, n).max_abs().max(f64::MIN_POSITIVE);
    if residual > opts.acceptance * scale {
        return Err(Error::SosNotConverged {
            iterations,
            residual,
        });
    }
    Ok(SosFactorization {
        factors,
        method,
        iterations,
        residual,
    })
}

/// Detects `T(x) = prod_j T_j(x_j)` and factors each axis separately.
///
/// For such `T`, `c_k c_0^{d-1} = prod_j c_{k_j e_j}`, and the axis slices
/// `S_j` (means of `T` over the other variables) are nonnegative.
fn separable_factor(t: &TrigPoly) -> Result<Option<TrigPoly>> {
    let d = t.dim();
    let c0 = t.coeff(&vec![0; d]).re;
    if c0 <= 0.0 {
        return Ok(None);
    }
    let slices: Vec<TrigPoly> = (0..d).map(|j| t.axis_slice(j)).collect();
    let tol = 1e-12 * t.l1_norm().max(1.0) * c0.powi(d as i32 - 1).max(1.0);
    let mut matched = 0usize;
    let mut ok = true;
    for_each_in_box(&slices, |k, prod| {
        let lhs = t.coeff(k) * c0.powi(d as i32 - 1);
        if (lhs - prod).norm() > tol {
            ok = false;
        }
        if t.coeff(k).norm() > 0.0 {
            matched += 1;
        }
    });
    if !ok || matched != t.len() {
        return Ok(None);
    }
    let mut out = TrigPoly::constant(d, c0.powf(-(d as f64 - 1.0) / 2.0));
    for (j, s) in slices.iter().enumerate() {
        out = &out * &riesz_factor(s)?.embed_axis(d, j);
    }
    Ok(Some(out))
}

/// Visits every `k` in the product of the slice supports with `prod_j S_j[k_j]`.
fn for_each_in_box(slices: &[TrigPoly], mut f: impl FnMut(&[i64], Complex64)) {
    let supports: Vec<Vec<(i64, Complex64)>> = slices
        .iter()
        .map(|s| s.terms().map(|(k, &c)| (k[0], c)).collect())
        .collect();
    if supports.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; slices.len()];
    loop {
        let k: IVec = idx.iter().zip(&supports).map(|(&i, s)| s[i].0).collect();
        let prod: Complex64 = idx.iter().zip(&supports).map(|(&i, s)| s[i].1).product();
        f(&k, prod);
        let mut axis = 0;
        loop {
            if axis == idx.len() {
                return;
            }
            idx[axis] += 1;
            if idx[axis] < supports[axis].len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Alternating projections between the affine set of Hermitian `G` with
/// `sum_{k-l=delta} G_kl = c_delta` and the PSD cone, over the frequency box
/// `prod_j [0, deg_j]`.
fn gram_factor(t: &TrigPoly, opts: &SosOptions) -> Result<(Vec<TrigPoly>, usize)> {
    let d = t.dim();
    let deg = t.degree();
    let mut freqs: Vec<IVec> = vec![vec![]];
    for &dj in &deg {
        freqs = freqs
            .into_iter()
            .flat_map(|f| {
                (0..=dj).map(move |v| {
                    let mut g = f.clone();
                    g.push(v);
                    g
                })
            })
            .collect();
    }
    let size = freqs.len();

    // entries grouped by the frequency difference they contribute to
    let mut diagonals: BTreeMap<IVec, Vec<(usize, usize)>> = BTreeMap::new();
    for (a, ka) in freqs.iter().enumerate() {
        for (b, kb) in freqs.iter().enumerate() {
            let delta: IVec = ka.iter().zip(kb).map(|(x, y)| x - y).collect();
            diagonals.entry(delta).or_default().push((a, b));
        }
    }
    let target = |delta: &IVec| t.coeff(delta);
    let scale = t.l1_norm();

    let project_affine = |g: &mut DMatrix<Complex64>| -> f64 {
        let mut worst: f64 = 0.0;
        for (delta, entries) in &diagonals {
            let s: Complex64 = entries.iter().map(|&(a, b)| g[(a, b)]).sum();
            let defect = target(delta) - s;
            worst = worst.max(defect.norm());
            let share = defect / entries.len() as f64;
            for &(a, b) in entries {
                g[(a, b)] += share;
            }
        }
        worst
    };

    let mut g = DMatrix::<Complex64>::zeros(size, size);
    let c0 = t.coeff(&vec![0; d]);
    for i in 0..size {
        g[(i, i)] = c0 / size as f64;
    }
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    while iterations < opts.max_iterations {
        iterations += 1;
        project_affine(&mut g);
        g = project_psd(&g);
        residual = mismatch(&g, &diagonals, &target);
        if residual <= opts.tolerance * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SosNotConverged {
            iterations,
            residual,
        });
    }

    let eig = nalgebra::SymmetricEigen::new(g);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut factors = Vec::new();
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= 1e-14 * top {
            continue;
        }
        let w = lam.sqrt();
        let terms = freqs
            .iter()
            .enumerate()
            .map(|(a, k)| (k.clone(), eig.eigenvectors[(a, i)] * w));
        factors.push(TrigPoly::from_terms(d, terms)?);
    }
    Ok((factors, iterations))
}

fn mismatch(
    g: &DMatrix<Complex64>,
    diagonals: &BTreeMap<IVec, Vec<(usize, usize)>>,
    target: &impl Fn(&IVec) -> Complex64,
) -> f64 {
    diagonals
        .iter()
        .map(|(delta, entries)| {
            let s: Complex64 = entries.iter().map(|&(a, b)| g[(a, b)]).sum();
            (target(delta) - s).norm()
        })
        .fold(0.0, f64::max)
}

fn project_psd(g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let hermitian = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(hermitian);
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * clipped[j]);
    scaled * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_any_dimension() {
        for d in 1..=3 {
            let r = sos_factor(&TrigPoly::constant(d, 4.0), &SosOptions::default()).unwrap();
            assert_eq!(r.method, SosMethod::Constant);
            assert_eq!(r.factors, vec![TrigPoly::constant(d, 2.0)]);
        }
    }

    #[test]
    fn separable_product() {
        let one = TrigPoly::constant(2, 1.0);
        let tx = &one + &TrigPoly::sin_squared_axis(2, 0);
        let ty = &one + &TrigPoly::sin_squared_axis(2, 1).scale(0.5);
        let t = &tx * &ty;
        let r = sos_factor(&t, &SosOptions::default()).unwrap();
        assert_eq!(r.method, SosMethod::Separable);
        assert_eq!(r.factors.len(), 1);
        assert!(r.factors[0].norm_sqr().max_coeff_diff(&t) < 1e-12);
    }

    #[test]
    fn gram_path_on_non_separable_polynomial() {
        let sx = TrigPoly::sin_squared_axis(2, 0);
        let sy = TrigPoly::sin_squared_axis(2, 1);
        let t = &TrigPoly::constant(2, 1.0) - &(&sx * &sy).scale(0.5);
        let r = sos_factor(&t, &SosOptions::default()).unwrap();
        assert_eq!(r.method, SosMethod::Gram);
        assert!(r.residual <= 1e-6);
    }

    #[test]
    fn univariate_delegates_to_riesz() {
        let t = &TrigPoly::constant(1, 1.0) + &TrigPoly::sin_squared_axis(1, 0);
        let r = sos_factor(&t, &SosOptions::default()).unwrap();
        assert_eq!(r.method, SosMethod::Riesz);
        assert_eq!(r.factors.len(), 1);
    }

    #[test]
    fn negative_constant_rejected() {
        assert!(matches!(
            sos_factor(&TrigPoly::constant(2, -1.0), &SosOptions::default()),
            Err(Error::Negative(_))
        ));
    }
}
