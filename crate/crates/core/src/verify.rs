//! Independent checks of the identities a frame system claims.
//!
//! Everything here works from coefficients alone, so a [`FrameSystem`] read
//! from disk is verified exactly like one fresh out of the builder.

use serde::{Deserialize, Serialize};

use crate::builder::{
    FrameKind, FrameSystem, DUAL_UEP_TOLERANCE, SOS_UEP_TOLERANCE, TIGHT_UEP_TOLERANCE,
    VM_TOLERANCE,
};
use crate::error::Result;
use crate::factorization::{sup_bound, SosMethod};
use crate::grid::{eval_grid, grid_size_for_degree};
use crate::lattice::DilationMatrix;
use crate::moments::{check_lambda_pair, check_vm_masks, check_vm_polyphase};
use crate::polyphase::{
    product_residual, row_pairing_residual, PolyphaseMatrix, Product, DEFAULT_GRID,
};
use crate::trigpoly::TrigPoly;

pub const SUB_QMF_TOLERANCE: f64 = 1e-9;
pub const COSET_IDENTITY_TOLERANCE: f64 = 1e-11;
pub const VM0_TOLERANCE: f64 = 1e-10;

/// Max over the grid of `|M^T(x) conj(Mt(x)) - I_m|`.
pub fn check_uep_dual(a: &PolyphaseMatrix, b: &PolyphaseMatrix) -> Result<f64> {
    product_residual(a, b, Product::Columns, DEFAULT_GRID)
}

/// Max over the grid of `|M^T(x) conj(M(x)) - I_m|`.
pub fn check_uep_tight(a: &PolyphaseMatrix) -> Result<f64> {
    product_residual(a, a, Product::Columns, DEFAULT_GRID)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    /// Grid maximum with a Bernstein correction.
    SupBound,
    /// `1 - sum_{k<m} |mu_0k|^2` equals the sum of squares of the remaining entries.
    Complement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubQmfReport {
    pub pass: bool,
    /// Certified upper bound on `sup sum_{k<m} |mu_0k|^2`, when one was found.
    pub bound: f64,
    pub method: BoundMethod,
    /// Grid point where the sum exceeds 1, if any.
    pub witness: Option<Vec<f64>>,
    pub grid_max: f64,
    /// Residual of `sum_s |m0(x + M*^{-1} s)|^2 = sum_k |mu_0k(M* x)|^2` on test points.
    pub coset_identity_residual: f64,
}

/// Certifies `sum_{k<m} |mu_0k|^2 <= 1`.
///
/// `row` holds at least the `m` polyphase components of the refinable mask;
/// if it carries further entries (a full row of a square completion) and the
/// whole row has unit norm identically, the tail is a sum-of-squares
/// certificate for the bound. Otherwise the rigorous grid bound is used.
pub fn check_sub_qmf(row: &[TrigPoly], m: &DilationMatrix) -> Result<SubQmfReport> {
    let mm = m.m();
    let head = &row[..mm.min(row.len())];
    let d = m.dim();
    let sigma = head
        .iter()
        .fold(TrigPoly::zero(d), |acc, p| &acc + &p.norm_sqr())
        .real_part_poly();
    let n = grid_size_for_degree(sigma.max_degree(), DEFAULT_GRID);
    let grid = eval_grid(&sigma, n);
    let (arg, grid_max) = grid.values.iter().enumerate().map(|(i, v)| (i, v.re)).fold(
        (0, f64::NEG_INFINITY),
        |best, cur| if cur.1 > best.1 { cur } else { best },
    );
    let witness = (grid_max > 1.0 + SUB_QMF_TOLERANCE).then(|| grid.point(arg));

    let mut bound = sup_bound(&sigma);
    let mut method = BoundMethod::SupBound;
    if bound > 1.0 + SUB_QMF_TOLERANCE && row.len() > mm {
        let full = row_pairing_residual(row, row, 1.0, DEFAULT_GRID)?;
        if 1.0 + full < bound {
            bound = 1.0 + full;
            method = BoundMethod::Complement;
        }
    }
    let coset_identity_residual = coset_identity_residual(head, m)?;
    Ok(SubQmfReport {
        pass: bound <= 1.0 + SUB_QMF_TOLERANCE && witness.is_none(),
        bound,
        method,
        witness,
        grid_max,
        coset_identity_residual,
    })
}

/// Checks `sum_{s in D(M*)} |m0(x + M*^{-1} s)|^2 = sum_k |mu_0k(M* x)|^2` at grid points.
fn coset_identity_residual(head: &[TrigPoly], m: &DilationMatrix) -> Result<f64> {
    let mask = TrigPoly::polyphase_merge(head, m)?;
    let d = m.dim();
    let per_axis: usize = match d {
        1 => 64,
        2 => 12,
        _ => 5,
    };
    let shifts: Vec<Vec<f64>> = m
        .dual_digits()
        .iter()
        .map(|s| m.inverse_transpose_apply_real(&s.iter().map(|&v| v as f64).collect::<Vec<_>>()))
        .collect();
    let mut worst: f64 = 0.0;
    for idx in 0..per_axis.pow(d as u32) {
        let x = crate::grid::grid_point(per_axis, d, idx);
        let x: Vec<f64> = x.iter().map(|v| v + 0.013).collect();
        let lhs: f64 = shifts
            .iter()
            .map(|s| {
                let y: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + b).collect();
                mask.eval(&y).norm_sqr()
            })
            .sum();
        let mx = m.transpose_apply_real(&x);
        let rhs: f64 = head.iter().map(|p| p.eval(&mx).norm_sqr()).sum();
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Necessary condition for a frame: every wavelet mask vanishes at the origin.
pub fn check_frame_necessary_vm0(masks: &[TrigPoly]) -> bool {
    vm0_residual(masks) <= VM0_TOLERANCE
}

fn vm0_residual(masks: &[TrigPoly]) -> f64 {
    masks
        .iter()
        .map(|w| w.eval(&vec![0.0; w.dim()]).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub equation: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl Report {
    fn push(&mut self, name: &str, equation: &str, residual: f64, tolerance: f64) {
        // NaN residuals fail
        let pass = residual <= tolerance;
        self.overall &= pass;
        self.checks.push(Check {
            name: name.into(),
            equation: equation.into(),
            residual,
            tolerance,
            pass,
        });
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Runs every check that applies to the system. Malformed systems produce
/// failing entries rather than errors.
pub fn verify_frame_system(fs: &FrameSystem) -> Report {
    let mut report = Report {
        checks: Vec::new(),
        overall: true,
    };
    let m = &fs.matrix;
    let mm = m.m();
    let tight = fs.kind == FrameKind::Tight;
    let n = fs.vm_order as i64;

    let shape_ok = fs.polyphase.ncols() >= mm
        && fs.polyphase.dim() == m.dim()
        && fs.polyphase.nrows() == fs.wavelets.len() + 1
        && fs
            .polyphase_dual
            .as_ref()
            .is_none_or(|p| p.nrows() == fs.polyphase.nrows() && p.ncols() == fs.polyphase.ncols())
        && (tight || fs.polyphase_dual.is_some());
    report.push(
        "shape",
        "polyphase matrices have r + 1 rows and at least m columns",
        if shape_ok { 0.0 } else { f64::INFINITY },
        0.0,
    );
    if !shape_ok {
        return report;
    }
    let primal = &fs.polyphase;
    let dual = fs.polyphase_dual.as_ref().unwrap_or(primal);

    for (label, mask) in [
        ("refinable", &fs.refinable),
        ("refinable-dual", fs.refinable_dual_or_primal()),
    ] {
        let v = mask.eval(&vec![0.0; m.dim()]);
        report.push(
            &format!("{label}-at-origin"),
            "m0(0) = 1",
            (v - 1.0).norm(),
            1e-12,
        );
        if tight {
            break;
        }
    }

    let consistency =
        |square: &PolyphaseMatrix, refinable: &TrigPoly, wavelets: &[TrigPoly]| -> f64 {
            square
                .rows()
                .iter()
                .zip(std::iter::once(refinable).chain(wavelets))
                .map(
                    |(row, mask)| match TrigPoly::polyphase_merge(&row[..mm], m) {
                        Ok(merged) => merged.max_coeff_diff(mask),
                        Err(_) => f64::INFINITY,
                    },
                )
                .fold(0.0, f64::max)
        };
    report.push(
        "mask-polyphase-consistency",
        "m_nu(x) = m^{-1/2} sum_k e^{2 pi i (s_k, x)} mu_nu,k(M^T x)",
        consistency(primal, &fs.refinable, &fs.wavelets),
        1e-12,
    );
    if !tight {
        report.push(
            "dual-mask-polyphase-consistency",
            "mt_nu(x) = m^{-1/2} sum_k e^{2 pi i (s_k, x)} mut_nu,k(M^T x)",
            consistency(
                dual,
                fs.refinable_dual_or_primal(),
                fs.wavelets_dual_or_primal(),
            ),
            1e-12,
        );
    }

    let gram = fs
        .provenance
        .sos
        .as_ref()
        .is_some_and(|s| s.method == Some(SosMethod::Gram));
    let uep_tol = if gram {
        SOS_UEP_TOLERANCE
    } else if tight {
        TIGHT_UEP_TOLERANCE
    } else {
        DUAL_UEP_TOLERANCE
    };
    let residual_or_inf = |r: Result<f64>| r.unwrap_or(f64::INFINITY);
    let (a, b) = (primal.first_columns(mm), dual.first_columns(mm));
    let uep = match (&a, &b) {
        (Ok(a), Ok(b)) => residual_or_inf(check_uep_dual(a, b)),
        _ => f64::INFINITY,
    };
    if tight {
        report.push("uep-tight", "M^T conj(M) = I_m", uep, uep_tol);
    } else {
        report.push("uep-dual", "M^T conj(Mt) = I_m", uep, uep_tol);
    }
    if primal.ncols() == primal.nrows() {
        report.push(
            "square-completion",
            "rows of the square completions are biorthonormal",
            residual_or_inf(product_residual(primal, dual, Product::Rows, DEFAULT_GRID)),
            uep_tol,
        );
    }

    if !tight {
        report.push(
            "lambda-duality",
            "sum_{g <= a} C(a, g) lambda_g conj(lambdat_{a-g}) = 0 for 0 < [a] <= n",
            residual_or_inf(check_lambda_pair(&fs.lambda, &fs.lambda_dual)),
            1e-10,
        );
    } else {
        report.push(
            "lambda-self-duality",
            "sum_{g <= a} C(a, g) lambda_g conj(lambda_{a-g}) = 0 for 0 < [a] <= n",
            residual_or_inf(check_lambda_pair(&fs.lambda, &fs.lambda)),
            1e-10,
        );
    }
    report.push(
        "vm-polyphase",
        "D^b mu_0k(0) match the moment targets of lambda; auxiliary entries vanish to order n",
        residual_or_inf(check_vm_polyphase(primal.row(0), &fs.lambda, m)),
        VM_TOLERANCE,
    );
    if !tight {
        report.push(
            "vm-polyphase-dual",
            "D^b mut_0k(0) match the moment targets of lambdat; auxiliary entries vanish to order n",
            residual_or_inf(check_vm_polyphase(dual.row(0), &fs.lambda_dual, m)),
            VM_TOLERANCE,
        );
    }
    report.push(
        "vm-wavelets",
        "D^b [m_nu(M*^{-1} x)](0) = 0 for [b] <= n",
        check_vm_masks(&fs.wavelets, m, n),
        VM_TOLERANCE,
    );
    if !tight {
        report.push(
            "vm-wavelets-dual",
            "D^b [mt_nu(M*^{-1} x)](0) = 0 for [b] <= n",
            check_vm_masks(fs.wavelets_dual_or_primal(), m, n),
            VM_TOLERANCE,
        );
    }
    let vm0 = vm0_residual(&fs.wavelets).max(vm0_residual(fs.wavelets_dual_or_primal()));
    report.push(
        "vm0-necessary",
        "m_nu(0) = 0 for every wavelet mask",
        vm0,
        VM0_TOLERANCE,
    );

    if tight {
        match check_sub_qmf(primal.row(0), m) {
            Ok(q) => {
                report.push(
                    "sub-qmf",
                    "sum_{k<m} |mu_0k|^2 <= 1",
                    (q.bound - 1.0).max(0.0),
                    SUB_QMF_TOLERANCE,
                );
                report.push(
                    "coset-identity",
                    "sum_s |m0(x + M*^{-1} s)|^2 = sum_k |mu_0k(M* x)|^2",
                    q.coset_identity_residual,
                    COSET_IDENTITY_TOLERANCE,
                );
            }
            Err(_) => report.push(
                "sub-qmf",
                "sum_{k<m} |mu_0k|^2 <= 1",
                f64::INFINITY,
                SUB_QMF_TOLERANCE,
            ),
        }
    }
    report
}

/// Coefficientwise `max |p - q|` helper for callers comparing masks.
pub fn max_mask_difference(a: &[TrigPoly], b: &[TrigPoly]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(p, q)| p.max_coeff_diff(q))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_dual, build_tight};
    use crate::moments::LambdaSet;
    use std::f64::consts::FRAC_1_SQRT_2;

    const H: f64 = FRAC_1_SQRT_2;

    #[test]
    fn constant_examples() {
        let m =
            PolyphaseMatrix::constant(1, &[vec![H, H], vec![0.5, -0.5], vec![0.5, -0.5]]).unwrap();
        assert!(check_uep_tight(&m).unwrap() < 1e-15);
        let mp = PolyphaseMatrix::constant(1, &[vec![H, H], vec![H, 0.0], vec![0.0, H]]).unwrap();
        let mtp = PolyphaseMatrix::constant(1, &[vec![H, H], vec![H, -H], vec![-H, H]]).unwrap();
        assert!(check_uep_dual(&mp, &mtp).unwrap() < 1e-15);
        let haar = PolyphaseMatrix::constant(1, &[vec![H, H], vec![H, -H]]).unwrap();
        assert!(check_uep_tight(&haar).unwrap() < 1e-15);

        let bumped =
            PolyphaseMatrix::constant(1, &[vec![H + 1e-3, H], vec![0.5, -0.5], vec![0.5, -0.5]])
                .unwrap();
        assert!(check_uep_dual(&bumped, &m).unwrap() >= 1e-4);
    }

    #[test]
    fn sub_qmf_examples() {
        let m = DilationMatrix::new(vec![vec![2]]).unwrap();
        let row = [TrigPoly::constant(1, H), TrigPoly::constant(1, H)];
        let r = check_sub_qmf(&row, &m).unwrap();
        assert!(r.pass);
        assert!((r.bound - 1.0).abs() < 1e-15);
        assert!(r.coset_identity_residual < 1e-11);

        let scaled: Vec<TrigPoly> = row.iter().map(|p| p.scale(1.1)).collect();
        let r = check_sub_qmf(&scaled, &m).unwrap();
        assert!(!r.pass);
        assert!(r.witness.is_some());
    }

    #[test]
    fn vm0_examples() {
        let e = TrigPoly::exp_axis(1, 0);
        let haar_wavelet = (&TrigPoly::constant(1, 1.0) - &e).scale(0.5 * H);
        assert!(check_frame_necessary_vm0(&[
            haar_wavelet.clone(),
            -&haar_wavelet
        ]));
        assert!(!check_frame_necessary_vm0(&[
            TrigPoly::constant(1, 0.5),
            e.scale(0.5)
        ]));
        assert!(check_frame_necessary_vm0(&[]));
    }

    #[test]
    fn built_systems_pass_and_corruption_is_named() {
        let m = DilationMatrix::new(vec![vec![2]]).unwrap();
        let fs = build_tight(&m, 1, &LambdaSet::delta(1, 1), &[]).unwrap();
        let report = verify_frame_system(&fs);
        assert!(report.overall, "{report:?}");
        assert!(check_sub_qmf(fs.polyphase.row(0), &m).unwrap().pass);

        let fs = build_dual(&m, 1, &LambdaSet::delta(1, 1), &[], &[]).unwrap();
        assert!(verify_frame_system(&fs).overall);

        let mut json: serde_json::Value = serde_json::to_value(&fs).unwrap();
        json["polyphase"]["rows"][1][0]["terms"][0]["re"] = serde_json::json!(0.3);
        let corrupted: FrameSystem = serde_json::from_value(json).unwrap();
        let report = verify_frame_system(&corrupted);
        assert!(!report.overall);
        assert!(report.failures().any(|c| c.name == "uep-dual"));
    }
}
