//! Integer dilation matrices and their coset structure.
//!
//! A [`DilationMatrix`] is an expansive integer matrix `M`. The lattice
//! `Z^d` splits into `m = |det M|` cosets modulo `M Z^d`; one representative
//! of each coset (a *digit*) is fixed once at construction so that every
//! later computation indexes cosets the same way.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical slack used when testing that every eigenvalue lies outside the unit circle.
pub const EXPANSIVE_TOLERANCE: f64 = 1e-9;

/// Integer vector in `Z^d`.
pub type IVec = Vec<i64>;

/// An expansive integer `d x d` matrix together with its digit set and exact inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DilationMatrix {
    entries: Vec<Vec<i64>>,
    det: i64,
    /// Adjugate, so that `M^{-1} = adj / det` exactly.
    adj: Vec<Vec<i64>>,
    digits: Vec<IVec>,
    /// `adj * s mod |det|` for each digit, used for coset lookup.
    keys: HashMap<IVec, usize>,
}

impl Serialize for DilationMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DilationMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<Vec<i64>>::deserialize(d)?;
        DilationMatrix::new(entries).map_err(serde::de::Error::custom)
    }
}

impl DilationMatrix {
    /// Validates `entries` (row-major) and computes the digit set.
    pub fn new(entries: Vec<Vec<i64>>) -> Result<Self> {
        let d = entries.len();
        if d == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        for row in &entries {
            if row.len() != d {
                return Err(Error::NotSquare {
                    rows: d,
                    cols: row.len(),
                });
            }
        }
        let det = determinant(&entries);
        if det == 0 {
            return Err(Error::Singular);
        }
        let min_modulus = min_eigenvalue_modulus(&entries);
        if min_modulus <= 1.0 + EXPANSIVE_TOLERANCE {
            return Err(Error::NotExpansive {
                modulus: min_modulus,
            });
        }
        let adj = adjugate(&entries);
        let (digits, keys) = enumerate_digits(&adj, det);
        Ok(Self {
            entries,
            det,
            adj,
            digits,
            keys,
        })
    }

    /// `c * I_d`.
    pub fn scalar(d: usize, c: i64) -> Result<Self> {
        let entries = (0..d)
            .map(|i| (0..d).map(|j| if i == j { c } else { 0 }).collect())
            .collect();
        Self::new(entries)
    }

    /// The quincunx matrix `[[1, 1], [1, -1]]`.
    pub fn quincunx() -> Self {
        Self::new(vec![vec![1, 1], vec![1, -1]]).expect("quincunx matrix is expansive")
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// `m = |det M|`, the number of cosets.
    pub fn m(&self) -> usize {
        self.det.unsigned_abs() as usize
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn digits(&self) -> &[IVec] {
        &self.digits
    }

    pub fn transpose(&self) -> Result<Self> {
        let d = self.dim();
        let t = (0..d)
            .map(|i| (0..d).map(|j| self.entries[j][i]).collect())
            .collect();
        Self::new(t)
    }

    /// `M k`.
    pub fn apply(&self, k: &[i64]) -> IVec {
        mat_vec(&self.entries, k)
    }

    /// `M^T k`.
    pub fn apply_transpose(&self, k: &[i64]) -> IVec {
        let d = self.dim();
        (0..d)
            .map(|j| (0..d).map(|i| self.entries[i][j] * k[i]).sum())
            .collect()
    }

    /// Exact `M^{-1} k` when integral.
    pub fn solve_integral(&self, k: &[i64]) -> Option<IVec> {
        let num = mat_vec(&self.adj, k);
        num.iter()
            .map(|&v| {
                if v % self.det == 0 {
                    Some(v / self.det)
                } else {
                    None
                }
            })
            .collect()
    }

    /// `M^{-1} k` as floating-point numbers (computed from the exact numerators).
    pub fn inverse_apply(&self, k: &[i64]) -> Vec<f64> {
        mat_vec(&self.adj, k)
            .into_iter()
            .map(|v| v as f64 / self.det as f64)
            .collect()
    }

    /// `M^{-1} x` for a real vector.
    pub fn inverse_apply_real(&self, x: &[f64]) -> Vec<f64> {
        self.adj
            .iter()
            .map(|row| {
                row.iter().zip(x).map(|(&a, &v)| a as f64 * v).sum::<f64>() / self.det as f64
            })
            .collect()
    }

    /// `(M^T)^{-1} x` for a real vector.
    pub fn inverse_transpose_apply_real(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|j| (0..d).map(|i| self.adj[i][j] as f64 * x[i]).sum::<f64>() / self.det as f64)
            .collect()
    }

    /// `M^T x` for a real vector.
    pub fn transpose_apply_real(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|j| (0..d).map(|i| self.entries[i][j] as f64 * x[i]).sum())
            .collect()
    }

    /// Index `i` of the digit with `k = M l + digits[i]` for some integer `l`.
    pub fn coset_index(&self, k: &[i64]) -> usize {
        let key = reduce_key(&self.adj, self.det, k);
        self.keys[&key]
    }

    /// Splits `k = M l + digits[i]` and returns `(i, l)`.
    pub fn decompose(&self, k: &[i64]) -> (usize, IVec) {
        let i = self.coset_index(k);
        let diff: IVec = k.iter().zip(&self.digits[i]).map(|(a, b)| a - b).collect();
        let l = self
            .solve_integral(&diff)
            .expect("difference from coset digit is in M Z^d");
        (i, l)
    }

    /// Digit set of `M^T` with the same canonicalization.
    pub fn dual_digits(&self) -> Vec<IVec> {
        self.transpose()
            .expect("transpose of an expansive matrix is expansive")
            .digits
    }

    /// Smallest eigenvalue modulus of `M`.
    pub fn min_eigenvalue_modulus(&self) -> f64 {
        min_eigenvalue_modulus(&self.entries)
    }
}

fn mat_vec(a: &[Vec<i64>], k: &[i64]) -> IVec {
    a.iter()
        .map(|row| row.iter().zip(k).map(|(x, y)| x * y).sum())
        .collect()
}

fn reduce_key(adj: &[Vec<i64>], det: i64, k: &[i64]) -> IVec {
    let modulus = det.abs();
    mat_vec(adj, k)
        .into_iter()
        .map(|v| v.rem_euclid(modulus))
        .collect()
}

/// Scans `[0, |det|)^d` by total degree, then with the first coordinate varying
/// fastest, keeping the first point seen from each coset.
fn enumerate_digits(adj: &[Vec<i64>], det: i64) -> (Vec<IVec>, HashMap<IVec, usize>) {
    let d = adj.len();
    let m = det.unsigned_abs() as usize;
    let bound = det.abs();
    let mut digits = Vec::with_capacity(m);
    let mut keys = HashMap::with_capacity(m);
    let max_sum = (bound - 1) * d as i64;
    'outer: for total in 0..=max_sum {
        for point in points_with_sum(d, total, bound) {
            let key = reduce_key(adj, det, &point);
            if let std::collections::hash_map::Entry::Vacant(e) = keys.entry(key) {
                e.insert(digits.len());
                digits.push(point);
                if digits.len() == m {
                    break 'outer;
                }
            }
        }
    }
    (digits, keys)
}

/// Points of `[0, bound)^d` with coordinate sum `total`, ordered with the
/// last coordinate as the most significant key.
fn points_with_sum(d: usize, total: i64, bound: i64) -> Vec<IVec> {
    fn rec(d: usize, total: i64, bound: i64, prefix_rev: &mut Vec<i64>, out: &mut Vec<IVec>) {
        if d == 1 {
            if total < bound {
                let mut p = vec![total];
                p.extend(prefix_rev.iter().rev());
                out.push(p);
            }
            return;
        }
        for last in 0..bound.min(total + 1) {
            prefix_rev.push(last);
            rec(d - 1, total - last, bound, prefix_rev, out);
            prefix_rev.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, total, bound, &mut Vec::new(), &mut out);
    out
}

/// Exact determinant via fraction-free (Bareiss) elimination.
pub(crate) fn determinant(a: &[Vec<i64>]) -> i64 {
    let n = a.len();
    let mut m: Vec<Vec<i128>> = a
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&i| m[i][k] != 0) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    (sign * m[n - 1][n - 1]) as i64
}

fn adjugate(a: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    if n == 1 {
        return vec![vec![1]];
    }
    let mut adj = vec![vec![0; n]; n];
    for (i, adj_row) in adj.iter_mut().enumerate() {
        for (j, entry) in adj_row.iter_mut().enumerate() {
            let minor: Vec<Vec<i64>> = a
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != j)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != i)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            *entry = sign * determinant(&minor);
        }
    }
    adj
}

fn min_eigenvalue_modulus(a: &[Vec<i64>]) -> f64 {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j] as f64);
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min)
}
