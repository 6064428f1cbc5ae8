//! Completion of polyphase rows and columns to square biorthogonal matrices.
//!
//! Two families live here. The Householder extension and the inductive
//! column extension complete biorthogonal columns pointwise; their entries
//! are generally not polynomials, so they are evaluated at a point. The
//! explicit completions [`dual_extend`] and [`tight_extend`] are quadratic
//! in the input row and therefore keep polynomial entries; those are what
//! the construction pipelines use.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polyphase::{
    constant_columns_residual, row_pairing_residual, CMatrix, PolyphaseMatrix, DEFAULT_GRID,
};
use crate::trigpoly::TrigPoly;

/// Tolerance for grid checks of the input preconditions.
pub const PRECONDITION_TOLERANCE: f64 = 1e-10;

/// Pivots closer than this to 1 make the Householder formulas singular.
const PIVOT_EPS: f64 = 1e-12;

/// Extends a pair of vectors with `q^T conj(qt) = 1` to square matrices
/// `N`, `Nt` whose first columns are `q`, `qt` and `N^T conj(Nt) = I`.
///
/// `pivot` selects which coordinate of the normalized `q` plays the role of
/// the Householder pivot; `None` picks the one farthest from 1.
pub fn householder_extend_vectors(
    q: &[Complex64],
    qt: &[Complex64],
    pivot: Option<usize>,
) -> Result<(CMatrix, CMatrix)> {
    let n = q.len();
    if qt.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: qt.len(),
        });
    }
    if n == 0 {
        return Err(Error::ShapeMismatch("empty column".into()));
    }
    let pairing: Complex64 = q.iter().zip(qt).map(|(a, b)| a * b.conj()).sum();
    let defect = (pairing - 1.0).norm();
    if defect > PRECONDITION_TOLERANCE {
        return Err(Error::precondition(
            "columns are not biorthogonal",
            defect,
            PRECONDITION_TOLERANCE,
        ));
    }

    let norm = q.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let u: Vec<Complex64> = if norm > 0.0 {
        q.iter().map(|z| z / norm).collect()
    } else {
        vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n]
    };
    let pivot = pivot.unwrap_or_else(|| farthest_from_one(&u));
    let mut swapped = u.clone();
    swapped.swap(0, pivot);
    let mut unitary = householder_unitary(&swapped)?;
    unitary.swap_rows(0, pivot);

    let mut nt = unitary.clone();
    let mut nmat = CMatrix::zeros(n, n);
    for (i, (&a, &b)) in q.iter().zip(qt).enumerate() {
        nmat[(i, 0)] = a;
        nt[(i, 0)] = b;
    }
    for k in 1..n {
        let proj: Complex64 = (0..n).map(|i| nt[(i, k)] * qt[i].conj()).sum();
        for i in 0..n {
            nmat[(i, k)] = nt[(i, k)] - proj * q[i];
        }
    }
    Ok((nmat, nt))
}

fn farthest_from_one(u: &[Complex64]) -> usize {
    u.iter()
        .enumerate()
        .max_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Unitary matrix with first column `u` (a unit vector with `u_0 != 1`).
fn householder_unitary(u: &[Complex64]) -> Result<CMatrix> {
    let n = u.len();
    let denom = Complex64::new(1.0, 0.0) - u[0].conj();
    if denom.norm() < PIVOT_EPS {
        return Err(Error::Degenerate("Householder pivot equals 1".into()));
    }
    let phase = (Complex64::new(1.0, 0.0) - u[0]) / denom;
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        out[(i, 0)] = u[i];
    }
    for k in 1..n {
        out[(0, k)] = u[k].conj() * phase;
        for nu in 1..n {
            let delta = if nu == k { 1.0 } else { 0.0 };
            out[(nu, k)] = Complex64::new(delta, 0.0) - u[nu] * u[k].conj() / denom;
        }
    }
    Ok(out)
}

/// Pointwise Householder extension of a pair of polynomial columns.
///
/// The pivot is fixed from the values at the origin, so the extension is
/// smooth near the origin; at points where the pivot coordinate of the
/// normalized column equals 1 evaluation fails.
#[derive(Debug, Clone)]
pub struct HouseholderExtension {
    q: Vec<TrigPoly>,
    qt: Vec<TrigPoly>,
    pivot: usize,
}

impl HouseholderExtension {
    pub fn pivot(&self) -> usize {
        self.pivot
    }

    pub fn eval(&self, x: &[f64]) -> Result<(CMatrix, CMatrix)> {
        let q: Vec<Complex64> = self.q.iter().map(|p| p.eval(x)).collect();
        let qt: Vec<Complex64> = self.qt.iter().map(|p| p.eval(x)).collect();
        householder_extend_vectors(&q, &qt, Some(self.pivot))
    }
}

pub fn householder_extend_pair(q: &[TrigPoly], qt: &[TrigPoly]) -> Result<HouseholderExtension> {
    let residual = row_pairing_residual(q, qt, 1.0, DEFAULT_GRID)?;
    if residual > PRECONDITION_TOLERANCE {
        return Err(Error::precondition(
            "sum_nu q_nu conj(qt_nu) = 1",
            residual,
            PRECONDITION_TOLERANCE,
        ));
    }
    let d = q.first().map(TrigPoly::dim).unwrap_or(1);
    let origin = vec![0.0; d];
    let q0: Vec<Complex64> = q.iter().map(|p| p.eval(&origin)).collect();
    let norm = q0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let u: Vec<Complex64> = q0.iter().map(|z| z / norm).collect();
    let pivot = farthest_from_one(&u);
    if (u[pivot] - 1.0).norm() < PIVOT_EPS {
        return Err(Error::Degenerate(
            "every Householder pivot equals 1 at the origin".into(),
        ));
    }
    Ok(HouseholderExtension {
        q: q.to_vec(),
        qt: qt.to_vec(),
        pivot,
    })
}

/// Extends `n x j` matrices with `A^T conj(At) = I_j` to `n x n` matrices
/// with the same first `j` columns and `N^T conj(Nt) = I_n`, by induction on
/// `j` with the Householder extension as the base case.
pub fn extend_columns(a: &CMatrix, at: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let (n, j) = a.shape();
    if at.shape() != (n, j) {
        return Err(Error::ShapeMismatch(format!(
            "{n}x{j} against {}x{}",
            at.nrows(),
            at.ncols()
        )));
    }
    if j > n || j == 0 {
        return Err(Error::ShapeMismatch(format!(
            "cannot extend {j} columns to size {n}"
        )));
    }
    let residual = constant_columns_residual(a, at);
    if residual > PRECONDITION_TOLERANCE {
        return Err(Error::precondition(
            "A^T conj(At) = I",
            residual,
            PRECONDITION_TOLERANCE,
        ));
    }
    if j == n {
        return Ok((a.clone(), at.clone()));
    }
    let col = |m: &CMatrix, k: usize| -> Vec<Complex64> { m.column(k).iter().copied().collect() };
    let (base, base_t) = householder_extend_vectors(&col(a, 0), &col(at, 0), None)?;
    if j == 1 {
        return Ok((base, base_t));
    }

    // coordinates of columns 1..j in the complement bases {base_l}, {base_t_l}, l >= 1
    let coords = |src: &CMatrix, dual_basis: &CMatrix| -> CMatrix {
        CMatrix::from_fn(n - 1, j - 1, |l, k| {
            (0..n)
                .map(|i| src[(i, k + 1)] * dual_basis[(i, l + 1)].conj())
                .sum()
        })
    };
    let alpha = coords(a, &base_t);
    let alpha_t = coords(at, &base);
    let (alpha_full, alpha_t_full) = extend_columns(&alpha, &alpha_t)?;

    let mut out = CMatrix::zeros(n, n);
    let mut out_t = CMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..j {
            out[(i, k)] = a[(i, k)];
            out_t[(i, k)] = at[(i, k)];
        }
    }
    for k in j..n {
        for i in 0..n {
            let mut s = Complex64::default();
            let mut st = Complex64::default();
            for l in 0..n - 1 {
                s += alpha_full[(l, k - 1)] * base[(i, l + 1)];
                st += alpha_t_full[(l, k - 1)] * base_t[(i, l + 1)];
            }
            out[(i, k)] = s;
            out_t[(i, k)] = st;
        }
    }
    Ok((out, out_t))
}

/// Explicit square completion of a dual pair of rows whose last entries vanish.
///
/// With `R` the last index and `j = R - nu`, rows `nu = 1..=R` are
/// `mu_{nu k} = delta_{jk} - mu_{0k} conj(mut_{0j})` for `k < R` and
/// `mu_{nu R} = conj(mut_{0j})`, and symmetrically for the tilde matrix.
/// The result satisfies `M conj(Mt)^T = I`.
pub fn dual_extend(
    row: &[TrigPoly],
    row_t: &[TrigPoly],
) -> Result<(PolyphaseMatrix, PolyphaseMatrix)> {
    if row.len() != row_t.len() {
        return Err(Error::LengthMismatch {
            expected: row.len(),
            got: row_t.len(),
        });
    }
    if row.len() < 2 {
        return Err(Error::ShapeMismatch(
            "row needs at least two entries".into(),
        ));
    }
    let last = row.len() - 1;
    check_trailing_zero(&row[last], "primal row")?;
    check_trailing_zero(&row_t[last], "dual row")?;
    let residual = row_pairing_residual(row, row_t, 1.0, DEFAULT_GRID)?;
    if residual > PRECONDITION_TOLERANCE {
        return Err(Error::precondition(
            "sum_k mu_0k conj(mut_0k) = 1",
            residual,
            PRECONDITION_TOLERANCE,
        ));
    }
    Ok(explicit_completion(row, row_t))
}

/// Explicit unitary completion of a unit-norm row whose last entry vanishes.
pub fn tight_extend(row: &[TrigPoly]) -> Result<PolyphaseMatrix> {
    if row.len() < 2 {
        return Err(Error::ShapeMismatch(
            "row needs at least two entries".into(),
        ));
    }
    check_trailing_zero(&row[row.len() - 1], "row")?;
    let residual = row_pairing_residual(row, row, 1.0, DEFAULT_GRID)?;
    if residual > PRECONDITION_TOLERANCE {
        return Err(Error::precondition(
            "sum_k |mu_0k|^2 = 1",
            residual,
            PRECONDITION_TOLERANCE,
        ));
    }
    Ok(explicit_completion(row, row).0)
}

fn check_trailing_zero(p: &TrigPoly, which: &str) -> Result<()> {
    let size = p.l1_norm();
    if size > 0.0 {
        return Err(Error::precondition(
            format!("last entry of the {which} must vanish identically"),
            size,
            0.0,
        ));
    }
    Ok(())
}

fn explicit_completion(row: &[TrigPoly], row_t: &[TrigPoly]) -> (PolyphaseMatrix, PolyphaseMatrix) {
    let last = row.len() - 1;
    let d = row[0].dim();
    let conj: Vec<TrigPoly> = row.iter().map(TrigPoly::conj).collect();
    let conj_t: Vec<TrigPoly> = row_t.iter().map(TrigPoly::conj).collect();
    let mut rows = vec![row.to_vec()];
    let mut rows_t = vec![row_t.to_vec()];
    for nu in 1..=last {
        let j = last - nu;
        let mut r = Vec::with_capacity(row.len());
        let mut rt = Vec::with_capacity(row.len());
        for k in 0..last {
            let delta = TrigPoly::constant(d, if k == j { 1.0 } else { 0.0 });
            r.push(&delta - &(&row[k] * &conj_t[j]));
            rt.push(&delta - &(&row_t[k] * &conj[j]));
        }
        r.push(conj_t[j].clone());
        rt.push(conj[j].clone());
        rows.push(r);
        rows_t.push(rt);
    }
    (
        PolyphaseMatrix::from_rows(rows).expect("completion is square"),
        PolyphaseMatrix::from_rows(rows_t).expect("completion is square"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyphase::{product_residual, Product};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn householder_swap_example() {
        let q = [c(0.0), c(1.0)];
        let (n, nt) = householder_extend_vectors(&q, &q, None).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        assert!((n - &expected).norm() < 1e-15);
        assert!((nt - expected).norm() < 1e-15);
    }

    #[test]
    fn householder_haar_column() {
        let q = [c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)];
        let (n, nt) = householder_extend_vectors(&q, &q, None).unwrap();
        assert!(constant_columns_residual(&n, &nt) < 1e-14);
        assert!((n[(0, 0)] - q[0]).norm() < 1e-15);
        assert!((n * nt.adjoint() - CMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn householder_rejects_non_dual() {
        let q = [c(1.0), c(1.0)];
        assert!(matches!(
            householder_extend_vectors(&q, &q, None),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn column_induction_on_constant_tight_example() {
        let a = CMatrix::from_row_slice(
            3,
            2,
            &[
                c(FRAC_1_SQRT_2),
                c(FRAC_1_SQRT_2),
                c(0.5),
                c(-0.5),
                c(0.5),
                c(-0.5),
            ],
        );
        let (n, nt) = extend_columns(&a, &a).unwrap();
        assert!(constant_columns_residual(&n, &nt) < 1e-12);
        for i in 0..3 {
            for k in 0..2 {
                assert_eq!(n[(i, k)], a[(i, k)]);
            }
        }
        let square = CMatrix::identity(3, 3);
        let (same, _) = extend_columns(&square, &square).unwrap();
        assert_eq!(same, square);
    }

    #[test]
    fn pointwise_extension_of_polynomial_column() {
        // q = (1 + e)/2, (1 - e)/2 has unit norm everywhere
        let e = TrigPoly::exp_axis(1, 0);
        let one = TrigPoly::constant(1, 1.0);
        let q = vec![(&one + &e).scale(0.5), (&one - &e).scale(0.5)];
        let ext = householder_extend_pair(&q, &q).unwrap();
        for x in [0.0, 0.1, 0.37, 0.8] {
            let (n, nt) = ext.eval(&[x]).unwrap();
            assert!(constant_columns_residual(&n, &nt) < 1e-12);
        }
    }

    #[test]
    fn dual_extend_haar_rows() {
        let h = FRAC_1_SQRT_2;
        let row: Vec<TrigPoly> = [h, h, 0.0, 0.0]
            .iter()
            .map(|&v| TrigPoly::constant(1, v))
            .collect();
        let (m, mt) = dual_extend(&row, &row).unwrap();
        assert_eq!(m.nrows(), 4);
        let expected_row2 = [-0.5, 0.5, 0.0, h];
        for (k, v) in expected_row2.iter().enumerate() {
            assert!((m.entry(2, k).coeff(&[0]) - c(*v)).norm() < 1e-15);
        }
        // nu = 1 with vanishing mut_{0,m}: unit row e_m
        for k in 0..4 {
            let target = if k == 2 { 1.0 } else { 0.0 };
            assert!((m.entry(1, k).coeff(&[0]) - c(target)).norm() < 1e-15);
        }
        assert!(product_residual(&m, &mt, Product::Rows, 16).unwrap() < 1e-14);
        assert!(product_residual(&m, &mt, Product::Columns, 16).unwrap() < 1e-14);
    }

    #[test]
    fn tight_extend_examples() {
        let h = FRAC_1_SQRT_2;
        let row: Vec<TrigPoly> = [h, h, 0.0]
            .iter()
            .map(|&v| TrigPoly::constant(1, v))
            .collect();
        let m = tight_extend(&row).unwrap();
        let r1 = [-0.5, 0.5, h];
        let r2 = [0.5, -0.5, h];
        for k in 0..3 {
            assert!((m.entry(1, k).coeff(&[0]) - c(r1[k])).norm() < 1e-15);
            assert!((m.entry(2, k).coeff(&[0]) - c(r2[k])).norm() < 1e-15);
        }
        assert!(product_residual(&m, &m, Product::Columns, 16).unwrap() < 1e-14);

        let unit: Vec<TrigPoly> = [1.0, 0.0]
            .iter()
            .map(|&v| TrigPoly::constant(1, v))
            .collect();
        let m = tight_extend(&unit).unwrap();
        assert!(product_residual(&m, &m, Product::Columns, 8).unwrap() < 1e-15);
    }

    #[test]
    fn tight_extend_requires_vanishing_tail() {
        let h = FRAC_1_SQRT_2;
        let row: Vec<TrigPoly> = [h, h].iter().map(|&v| TrigPoly::constant(1, v)).collect();
        assert!(matches!(
            tight_extend(&row),
            Err(Error::Precondition { .. })
        ));
        let row: Vec<TrigPoly> = [1.0, 1.0, 0.0]
            .iter()
            .map(|&v| TrigPoly::constant(1, v))
            .collect();
        assert!(matches!(
            tight_extend(&row),
            Err(Error::Precondition { .. })
        ));
    }
}
