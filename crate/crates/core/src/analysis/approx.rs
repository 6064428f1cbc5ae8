use serde::{Deserialize, Serialize};

use super::filterbank::{filterbank_analyze, filterbank_synthesize, PeriodLattice, Signal};
use crate::builder::FrameSystem;
use crate::error::{Error, Result};

/// Errors below this are treated as exact reproduction and excluded from the fit.
const EXACT: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxOrderReport {
    pub levels: Vec<u32>,
    /// RMS of `f - P_j f` over the fine samples, per level.
    pub errors: Vec<f64>,
    /// Least-squares slope of `log_lambda e_j` against `j`; `None` when `f` is reproduced exactly.
    pub slope: Option<f64>,
    /// RMS residual of the linear fit.
    pub fit_residual: Option<f64>,
    pub lambda: f64,
    pub fine_level: u32,
}

/// Measures the decay of `e_j = ||f - P_j f||` where `P_j f` keeps only the
/// scaling part at level `j`.
///
/// `f` is sampled at `M^{-K} p`, `p` in `Z^d / M^K Z^d`, with `K = fine_level`,
/// so it must be `Z^d`-periodic. `P_j f` analyzes `K - j` levels, zeros every
/// detail band and synthesizes.
pub fn approx_order_experiment(
    fs: &FrameSystem,
    f: &dyn Fn(&[f64]) -> f64,
    levels: &[u32],
    fine_level: u32,
) -> Result<ApproxOrderReport> {
    if levels.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a decay fit needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    if let Some(&bad) = levels.iter().find(|&&j| j >= fine_level) {
        return Err(Error::InvalidArgument(format!(
            "level {bad} is not coarser than the sampling level {fine_level}"
        )));
    }
    let m = &fs.matrix;
    let lattice = PeriodLattice::dilated(m, fine_level)?;
    let mut x_values = Vec::with_capacity(lattice.size());
    for idx in 0..lattice.size() {
        let mut y: Vec<f64> = lattice.point(idx).iter().map(|&v| v as f64).collect();
        for _ in 0..fine_level {
            y = m.inverse_apply_real(&y);
        }
        x_values.push(f(&y));
    }
    let x = Signal::from_real(lattice, &x_values)?;

    let mut errors = Vec::with_capacity(levels.len());
    for &j in levels {
        let depth = (fine_level - j) as usize;
        let mut pyr = filterbank_analyze(fs, &x, depth)?;
        pyr.drop_finest(depth);
        let approx = filterbank_synthesize(fs, &pyr)?;
        let diff = Signal {
            lattice: x.lattice.clone(),
            values: x
                .values
                .iter()
                .zip(&approx.values)
                .map(|(a, b)| a - b)
                .collect(),
        };
        errors.push(diff.rms());
    }

    let lambda = m.min_eigenvalue_modulus();
    let (slope, fit_residual) = if errors.iter().any(|&e| e <= EXACT) {
        (None, None)
    } else {
        let xs: Vec<f64> = levels.iter().map(|&j| j as f64).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.ln() / lambda.ln()).collect();
        let (slope, residual) = linear_fit(&xs, &ys);
        (Some(slope), Some(residual))
    };
    Ok(ApproxOrderReport {
        levels: levels.to_vec(),
        errors,
        slope,
        fit_residual,
        lambda,
        fine_level,
    })
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, residual)
}
