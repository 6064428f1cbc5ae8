//! Polyphase matrices and the pointwise product identities they must satisfy.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{eval_grid, grid_size_for_degree, GridValues};
use crate::trigpoly::TrigPoly;

/// Complex matrix evaluated at a single point.
pub type CMatrix = DMatrix<Complex64>;

/// Default minimum number of grid points per axis for identity checks.
pub const DEFAULT_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowTag {
    Refinable,
    Wavelet,
    Auxiliary,
}

/// Rectangular array of trigonometric polynomials; row `nu` holds the
/// polyphase components of mask `nu`, column `k` the coset `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyphaseMatrix {
    rows: Vec<Vec<TrigPoly>>,
    tags: Vec<RowTag>,
}

impl PolyphaseMatrix {
    pub fn new(rows: Vec<Vec<TrigPoly>>, tags: Vec<RowTag>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::ShapeMismatch("polyphase matrix has no rows".into()));
        };
        let cols = first.len();
        let d = first
            .first()
            .map(TrigPoly::dim)
            .ok_or_else(|| Error::ShapeMismatch("polyphase matrix has no columns".into()))?;
        if tags.len() != rows.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} tags for {} rows",
                tags.len(),
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| p.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
        }
        Ok(Self { rows, tags })
    }

    /// Row 0 tagged refinable, every other row a wavelet.
    pub fn from_rows(rows: Vec<Vec<TrigPoly>>) -> Result<Self> {
        let tags = (0..rows.len())
            .map(|i| {
                if i == 0 {
                    RowTag::Refinable
                } else {
                    RowTag::Wavelet
                }
            })
            .collect();
        Self::new(rows, tags)
    }

    /// Constant real matrix, convenient for hand-written examples.
    pub fn constant(d: usize, values: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(
            values
                .iter()
                .map(|r| r.iter().map(|&v| TrigPoly::constant(d, v)).collect())
                .collect(),
        )
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn dim(&self) -> usize {
        self.rows[0][0].dim()
    }

    pub fn rows(&self) -> &[Vec<TrigPoly>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[TrigPoly] {
        &self.rows[i]
    }

    pub fn tags(&self) -> &[RowTag] {
        &self.tags
    }

    pub fn entry(&self, i: usize, j: usize) -> &TrigPoly {
        &self.rows[i][j]
    }

    /// Keeps the first `k` columns.
    pub fn first_columns(&self, k: usize) -> Result<Self> {
        if k > self.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "cannot take {k} of {} columns",
                self.ncols()
            )));
        }
        Ok(Self {
            rows: self.rows.iter().map(|r| r[..k].to_vec()).collect(),
            tags: self.tags.clone(),
        })
    }

    pub fn max_degree(&self) -> i64 {
        self.rows
            .iter()
            .flatten()
            .map(TrigPoly::max_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> CMatrix {
        CMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.rows[i][j].eval(x))
    }

    fn eval_on_grid(&self, n: usize) -> Vec<Vec<GridValues>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|p| eval_grid(p, n)).collect())
            .collect()
    }
}

/// Which pointwise product is compared with the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Product {
    /// `A^T conj(B) = I_cols`: columns are biorthogonal.
    Columns,
    /// `A conj(B)^T = I_rows`: rows are biorthogonal.
    Rows,
}

/// Max-norm distance of `A^T conj(B)` (or `A conj(B)^T`) from the identity over a
/// uniform grid fine enough to resolve every entry of the product.
pub fn product_residual(
    a: &PolyphaseMatrix,
    b: &PolyphaseMatrix,
    product: Product,
    min_grid: usize,
) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} against {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let n = grid_size_for_degree(a.max_degree() + b.max_degree(), min_grid);
    let ga = a.eval_on_grid(n);
    let gb = b.eval_on_grid(n);
    let points = n.pow(a.dim() as u32);
    let cols = a.ncols();
    let mut worst: f64 = 0.0;
    for idx in 0..points {
        match product {
            Product::Columns => {
                for k in 0..cols {
                    for l in 0..cols {
                        let mut s: Complex64 = ga
                            .iter()
                            .zip(&gb)
                            .map(|(ra, rb)| ra[k].values[idx] * rb[l].values[idx].conj())
                            .sum();
                        if k == l {
                            s -= 1.0;
                        }
                        worst = worst.max(s.norm());
                    }
                }
            }
            Product::Rows => {
                for (i, ra) in ga.iter().enumerate() {
                    for (j, rb) in gb.iter().enumerate() {
                        let mut s: Complex64 = ra
                            .iter()
                            .zip(rb)
                            .map(|(x, y)| x.values[idx] * y.values[idx].conj())
                            .sum();
                        if i == j {
                            s -= 1.0;
                        }
                        worst = worst.max(s.norm());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Max over a grid of `|sum_k a_k conj(b_k) - target|`.
pub fn row_pairing_residual(
    a: &[TrigPoly],
    b: &[TrigPoly],
    target: f64,
    min_grid: usize,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let d = a.first().map(TrigPoly::dim).unwrap_or(1);
    let mut pairing = TrigPoly::constant(d, -target);
    for (p, q) in a.iter().zip(b) {
        pairing = pairing.checked_add(&p.checked_mul(&q.conj())?)?;
    }
    let n = grid_size_for_degree(pairing.max_degree(), min_grid);
    Ok(eval_grid(&pairing, n).max_abs())
}

/// Pointwise identity residual `max |A^T conj(B) - I|` for constant matrices.
pub fn constant_columns_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    let p = a.transpose() * b.map(|z| z.conj());
    let n = p.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..p.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}
