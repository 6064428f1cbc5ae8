//! Fourier-side refinable functions, the L2 bound for truncated products,
//! periodic lattice filter banks and the approximation-order experiment.

mod approx;
mod filterbank;

pub use approx::{approx_order_experiment, ApproxOrderReport};
pub use filterbank::{filterbank_analyze, filterbank_synthesize, PeriodLattice, Pyramid, Signal};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::eval_grid;
use crate::lattice::DilationMatrix;
use crate::trigpoly::TrigPoly;
use crate::verify::check_sub_qmf;

/// Required `|m0(0) - 1|` for the infinite product to converge.
pub const ORIGIN_TOLERANCE: f64 = 1e-12;

const MAX_MALLAT_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiHat {
    pub value: Complex64,
    pub depth: u32,
    /// Last factor of the product, `m0(M*^{-J} x)`; close to 1 once the product has settled.
    pub last_factor: Complex64,
}

/// Truncated product `prod_{j=1}^{J} m0(M*^{-j} x)`.
pub fn phihat(m0: &TrigPoly, m: &DilationMatrix, x: &[f64], depth: u32) -> Result<PhiHat> {
    if m0.dim() != m.dim() || x.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: if m0.dim() != m.dim() {
                m0.dim()
            } else {
                x.len()
            },
        });
    }
    if depth == 0 {
        return Err(Error::InvalidArgument(
            "truncation depth must be at least 1".into(),
        ));
    }
    let at_origin = (m0.eval(&vec![0.0; m.dim()]) - 1.0).norm();
    if at_origin > ORIGIN_TOLERANCE {
        return Err(Error::precondition(
            "m0(0) = 1",
            at_origin,
            ORIGIN_TOLERANCE,
        ));
    }
    let mut y = x.to_vec();
    let mut value = Complex64::new(1.0, 0.0);
    let mut last_factor = value;
    for _ in 0..depth {
        y = m.inverse_transpose_apply_real(&y);
        last_factor = m0.eval(&y);
        value *= last_factor;
    }
    Ok(PhiHat {
        value,
        depth,
        last_factor,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MallatReport {
    /// `||f_k||_2` for `k = 0..=J`.
    pub norms: Vec<f64>,
    pub estimate: f64,
    pub grid: usize,
    pub within_bound: bool,
    pub monotone: bool,
    /// Set when the hypotheses of the bound (sub-QMF inequality, `m0(0) = 1`) fail.
    pub hypothesis_violated: bool,
}

impl MallatReport {
    pub fn flagged(&self) -> bool {
        self.hypothesis_violated || !self.within_bound
    }
}

/// `||f_J||_2` for `f_J(x) = prod_{j=1}^{J} m0(M*^{-j} x)` restricted to `M*^J [-1/2, 1/2]^d`.
///
/// Substituting `x = M*^J y` gives `||f_J||^2 = m^J * mean_y prod_{i<J} |m0(M*^i y)|^2`,
/// the constant coefficient of a trigonometric polynomial. On an `N^d` grid finer
/// than its frequency span the mean is exact, and `M*` maps grid points to grid points.
pub fn mallat_l2_check(
    m0: &TrigPoly,
    m: &DilationMatrix,
    depth: u32,
    min_grid: usize,
) -> Result<MallatReport> {
    if m0.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: m0.dim(),
        });
    }
    let d = m.dim();
    let power = m0.norm_sqr().real_part_poly();
    let deg = power.max_degree();

    // frequency span of prod_{i<J} P(M*^i y): sum_i ||M^i||_inf * deg
    let mut span: i64 = 0;
    let mut mp: Vec<Vec<i64>> = (0..d)
        .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
        .collect();
    for _ in 0..depth {
        let norm: i64 = mp
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<i64>())
            .max()
            .unwrap_or(0);
        span += norm * deg;
        mp = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| mp[i][k] * m.entries()[k][j]).sum())
                    .collect()
            })
            .collect();
    }
    let n = ((2 * span + 1) as usize).max(min_grid).next_power_of_two();
    let points = n
        .checked_pow(d as u32)
        .filter(|&p| p <= MAX_MALLAT_POINTS)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "depth {depth} needs a {n}^{d} grid; lower the depth"
            ))
        })?;

    let values: Vec<f64> = eval_grid(&power, n).values.iter().map(|v| v.re).collect();
    let mut sums = vec![0.0; depth as usize + 1];
    let mt = m.transpose().expect("transpose of a dilation matrix");
    for idx in 0..points {
        let mut v: Vec<i64> = (0..d)
            .map(|a| ((idx / n.pow(a as u32)) % n) as i64)
            .collect();
        let mut acc = 1.0;
        sums[0] += 1.0;
        for slot in sums.iter_mut().skip(1) {
            acc *= values[crate::grid::grid_index(n, &v)];
            *slot += acc;
            v = mt
                .apply(&v)
                .iter()
                .map(|c| c.rem_euclid(n as i64))
                .collect();
        }
    }
    let mf = m.m() as f64;
    let norms: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(k, s)| (mf.powi(k as i32) * s / points as f64).max(0.0).sqrt())
        .collect();
    let estimate = *norms.last().unwrap_or(&1.0);
    let monotone = norms.windows(2).all(|w| w[1] <= w[0] + 1e-9);

    let row = m0.polyphase_split(m);
    let origin = (m0.eval(&vec![0.0; d]) - 1.0).norm();
    let hypothesis_violated = origin > ORIGIN_TOLERANCE || !check_sub_qmf(&row, m)?.pass;
    Ok(MallatReport {
        norms,
        estimate,
        grid: n,
        within_bound: estimate <= 1.0 + 1e-6,
        monotone,
        hypothesis_violated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn haar() -> TrigPoly {
        (&TrigPoly::constant(1, 1.0) + &TrigPoly::exp_axis(1, 0)).scale(0.5)
    }

    #[test]
    fn phihat_of_haar() {
        let m = DilationMatrix::new(vec![vec![2]]).unwrap();
        assert_eq!(
            phihat(&haar(), &m, &[0.0], 7).unwrap().value,
            Complex64::new(1.0, 0.0)
        );
        assert!(phihat(&haar(), &m, &[1.0], 20).unwrap().value.norm() < 1e-6);
        let a = phihat(&haar(), &m, &[0.37], 28).unwrap().value;
        let b = phihat(&haar(), &m, &[0.37], 33).unwrap().value;
        assert!((a - b).norm() < 1e-8);
        assert!(phihat(&haar().scale(1.1), &m, &[0.1], 3).is_err());
    }

    #[test]
    fn mallat_haar_and_scaled() {
        let m = DilationMatrix::new(vec![vec![2]]).unwrap();
        let r = mallat_l2_check(&haar(), &m, 8, 64).unwrap();
        assert!(r.norms.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(!r.flagged());
        let r = mallat_l2_check(&haar().scale(1.2), &m, 4, 64).unwrap();
        assert!(r.estimate > 1.0);
        assert!(r.flagged());
    }

    #[test]
    fn mallat_quincunx_haar() {
        let m = DilationMatrix::quincunx();
        let row = vec![
            TrigPoly::constant(2, FRAC_1_SQRT_2),
            TrigPoly::constant(2, FRAC_1_SQRT_2),
        ];
        let m0 = TrigPoly::polyphase_merge(&row, &m).unwrap();
        let r = mallat_l2_check(&m0, &m, 6, 16).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12);
        assert!(r.monotone);
    }
}
