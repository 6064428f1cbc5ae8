//! Periodic filter banks on lattice quotients `Z^d / P`.
//!
//! One level splits a signal into its `m` cosets `x_j[p] = x[M p + s_j]`,
//! living on `Z^d / P'` with `P' = M^{-1} P`, and maps them through the
//! polyphase matrix: `c_nu[l] = sum_j sum_q conj(at^{(nu,j)}_q) x_j[l + q]`,
//! where `at^{(nu,j)}` are the coefficients of `mut_{nu j}`. Synthesis is
//! `x_j[p] = sum_nu sum_q a^{(nu,j)}_q c_nu[p - q]`; the identity
//! `M^T conj(Mt) = I` makes the round trip exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::accurate::Dot2;
use crate::builder::FrameSystem;
use crate::error::{Error, Result};
use crate::lattice::{DilationMatrix, IVec};
use crate::polyphase::PolyphaseMatrix;

/// Period lattice in Hermite normal form: upper triangular basis (columns)
/// with positive diagonal. Representatives are `0 <= k_i < b_ii`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodLattice {
    basis: Vec<Vec<i64>>,
}

impl PeriodLattice {
    /// Lattice generated by the columns of `generators` (a `d x d` matrix).
    pub fn new(generators: Vec<Vec<i64>>) -> Result<Self> {
        let d = generators.len();
        if d == 0 || generators.iter().any(|r| r.len() != d) {
            return Err(Error::NotSquare {
                rows: d,
                cols: generators.first().map_or(0, Vec::len),
            });
        }
        let mut b = generators;
        for i in (0..d).rev() {
            loop {
                let pivot = (0..=i)
                    .filter(|&c| b[i][c] != 0)
                    .min_by_key(|&c| b[i][c].abs());
                let Some(p) = pivot else {
                    return Err(Error::Singular);
                };
                swap_columns(&mut b, p, i);
                let mut done = true;
                for c in 0..i {
                    if b[i][c] != 0 {
                        let q = b[i][c] / b[i][i];
                        for row in b.iter_mut() {
                            row[c] -= q * row[i];
                        }
                        done &= b[i][c] == 0;
                    }
                }
                if done {
                    break;
                }
            }
            if b[i][i] < 0 {
                for row in b.iter_mut() {
                    row[i] = -row[i];
                }
            }
        }
        Ok(Self { basis: b })
    }

    /// `n_0 Z x n_1 Z x ...`.
    pub fn diagonal(shape: &[usize]) -> Result<Self> {
        let d = shape.len();
        Self::new(
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| if i == j { shape[i] as i64 } else { 0 })
                        .collect()
                })
                .collect(),
        )
    }

    /// `M^k Z^d`.
    pub fn dilated(m: &DilationMatrix, k: u32) -> Result<Self> {
        let d = m.dim();
        let mut cols: Vec<IVec> = (0..d)
            .map(|j| (0..d).map(|i| i64::from(i == j)).collect())
            .collect();
        for _ in 0..k {
            cols = cols.iter().map(|c| m.apply(c)).collect();
        }
        Self::new(
            (0..d)
                .map(|i| cols.iter().map(|c| c[i]).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Row-major basis matrix; its columns generate the lattice.
    pub fn basis(&self) -> &[Vec<i64>] {
        &self.basis
    }

    pub fn size(&self) -> usize {
        (0..self.dim()).map(|i| self.basis[i][i] as usize).product()
    }

    /// Canonical representative of `k + P`.
    pub fn reduce(&self, k: &[i64]) -> IVec {
        let mut v = k.to_vec();
        for i in (0..self.dim()).rev() {
            let q = v[i].div_euclid(self.basis[i][i]);
            if q != 0 {
                for (r, row) in self.basis.iter().enumerate() {
                    v[r] -= q * row[i];
                }
            }
        }
        v
    }

    pub fn index(&self, k: &[i64]) -> usize {
        let v = self.reduce(k);
        let mut idx = 0usize;
        for i in (0..self.dim()).rev() {
            idx = idx * self.basis[i][i] as usize + v[i] as usize;
        }
        idx
    }

    pub fn point(&self, mut idx: usize) -> IVec {
        (0..self.dim())
            .map(|i| {
                let b = self.basis[i][i] as usize;
                let v = idx % b;
                idx /= b;
                v as i64
            })
            .collect()
    }

    /// `M^{-1} P`, which must be an integer lattice.
    pub fn coarsen(&self, m: &DilationMatrix) -> Result<Self> {
        let d = self.dim();
        let mut cols = Vec::with_capacity(d);
        for c in 0..d {
            let col: IVec = (0..d).map(|r| self.basis[r][c]).collect();
            let image = m.solve_integral(&col).ok_or_else(|| {
                Error::InvalidArgument(
                    "period lattice is not divisible by the dilation matrix".into(),
                )
            })?;
            cols.push(image);
        }
        Self::new(
            (0..d)
                .map(|i| cols.iter().map(|c| c[i]).collect())
                .collect(),
        )
    }
}

fn swap_columns(b: &mut [Vec<i64>], a: usize, c: usize) {
    if a != c {
        for row in b.iter_mut() {
            row.swap(a, c);
        }
    }
}

/// Samples on `Z^d / P`, indexed as [`PeriodLattice::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub lattice: PeriodLattice,
    pub values: Vec<Complex64>,
}

impl Signal {
    pub fn new(lattice: PeriodLattice, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.size() {
            return Err(Error::LengthMismatch {
                expected: lattice.size(),
                got: values.len(),
            });
        }
        Ok(Self { lattice, values })
    }

    pub fn from_real(lattice: PeriodLattice, values: &[f64]) -> Result<Self> {
        Self::new(
            lattice,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn zeros(lattice: PeriodLattice) -> Self {
        let n = lattice.size();
        Self {
            lattice,
            values: vec![Complex64::default(); n],
        }
    }

    pub fn max_abs_diff(&self, other: &Signal) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// Detail coefficients per level (finest first) and the final coarse signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    pub details: Vec<Vec<Signal>>,
    pub coarse: Signal,
}

impl Pyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Zeros the details of the finest `k` levels.
    pub fn drop_finest(&mut self, k: usize) {
        for level in self.details.iter_mut().take(k) {
            for s in level.iter_mut() {
                s.values.iter_mut().for_each(|v| *v = Complex64::default());
            }
        }
    }
}

/// Coefficients of every polyphase entry as `(q, a_q)` lists, `[nu][j]`.
fn taps(p: &PolyphaseMatrix, m: usize) -> Vec<Vec<Vec<(IVec, Complex64)>>> {
    p.rows()
        .iter()
        .map(|row| {
            row[..m]
                .iter()
                .map(|e| e.terms().map(|(k, &c)| (k.clone(), c)).collect())
                .collect()
        })
        .collect()
}

fn analyze_level(
    x: &Signal,
    m: &DilationMatrix,
    taps_t: &[Vec<Vec<(IVec, Complex64)>>],
) -> Result<Vec<Signal>> {
    let coarse = x.lattice.coarsen(m)?;
    let size = coarse.size();
    let cosets: Vec<Vec<Complex64>> = m
        .digits()
        .iter()
        .map(|s| {
            (0..size)
                .map(|idx| {
                    let p = coarse.point(idx);
                    let k: IVec = m.apply(&p).iter().zip(s).map(|(a, b)| a + b).collect();
                    x.values[x.lattice.index(&k)]
                })
                .collect()
        })
        .collect();
    Ok(taps_t
        .iter()
        .map(|row| {
            let mut out = vec![Complex64::default(); size];
            for (idx, slot) in out.iter_mut().enumerate() {
                let l = coarse.point(idx);
                let mut acc = Dot2::default();
                for (j, entry) in row.iter().enumerate() {
                    for (q, a) in entry {
                        let k: IVec = l.iter().zip(q).map(|(u, v)| u + v).collect();
                        acc.add(a.conj(), cosets[j][coarse.index(&k)]);
                    }
                }
                *slot = acc.value();
            }
            Signal {
                lattice: coarse.clone(),
                values: out,
            }
        })
        .collect())
}

fn synthesize_level(
    bands: &[&Signal],
    fine: &PeriodLattice,
    m: &DilationMatrix,
    taps_p: &[Vec<Vec<(IVec, Complex64)>>],
) -> Result<Signal> {
    let coarse = &bands[0].lattice;
    let size = coarse.size();
    let mut out = Signal::zeros(fine.clone());
    for (j, s) in m.digits().iter().enumerate() {
        for idx in 0..size {
            let p = coarse.point(idx);
            let mut acc = Dot2::default();
            for (nu, band) in bands.iter().enumerate() {
                for (q, a) in &taps_p[nu][j] {
                    let k: IVec = p.iter().zip(q).map(|(u, v)| u - v).collect();
                    acc.add(*a, band.values[coarse.index(&k)]);
                }
            }
            let acc = acc.value();
            let k: IVec = m.apply(&p).iter().zip(s).map(|(a, b)| a + b).collect();
            out.values[fine.index(&k)] = acc;
        }
    }
    Ok(out)
}

fn check_signal(fs: &FrameSystem, lattice: &PeriodLattice) -> Result<()> {
    if lattice.dim() != fs.matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: fs.matrix.dim(),
            got: lattice.dim(),
        });
    }
    Ok(())
}

/// Multi-level analysis with the dual masks (the primal ones for tight frames).
pub fn filterbank_analyze(fs: &FrameSystem, signal: &Signal, levels: usize) -> Result<Pyramid> {
    check_signal(fs, &signal.lattice)?;
    let m = &fs.matrix;
    let dual = fs.polyphase_dual.as_ref().unwrap_or(&fs.polyphase);
    let taps_t = taps(dual, m.m());
    let mut details = Vec::with_capacity(levels);
    let mut current = signal.clone();
    for _ in 0..levels {
        let mut bands = analyze_level(&current, m, &taps_t)?;
        current = bands.remove(0);
        details.push(bands);
    }
    Ok(Pyramid {
        details,
        coarse: current,
    })
}

/// Inverse of [`filterbank_analyze`] using the primal masks.
pub fn filterbank_synthesize(fs: &FrameSystem, pyramid: &Pyramid) -> Result<Signal> {
    let m = &fs.matrix;
    let taps_p = taps(&fs.polyphase, m.m());
    let mut current = pyramid.coarse.clone();
    check_signal(fs, &current.lattice)?;
    for level in pyramid.details.iter().rev() {
        if level.len() + 1 != taps_p.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} detail bands for {} wavelets",
                level.len(),
                taps_p.len() - 1
            )));
        }
        if level.iter().any(|b| b.lattice != current.lattice) {
            return Err(Error::ShapeMismatch(
                "detail bands live on different lattices".into(),
            ));
        }
        let fine = fine_lattice(&current.lattice, m)?;
        let bands: Vec<&Signal> = std::iter::once(&current).chain(level.iter()).collect();
        current = synthesize_level(&bands, &fine, m, &taps_p)?;
    }
    Ok(current)
}

/// `M P'`.
fn fine_lattice(coarse: &PeriodLattice, m: &DilationMatrix) -> Result<PeriodLattice> {
    let d = coarse.dim();
    let cols: Vec<IVec> = (0..d)
        .map(|c| m.apply(&(0..d).map(|r| coarse.basis[r][c]).collect::<Vec<_>>()))
        .collect();
    PeriodLattice::new(
        (0..d)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect(),
    )
}
