//! End-to-end construction of dual-pair and tight wavelet frame systems.
//!
//! Both pipelines start from moment parameters `lambda`, seed a polyphase
//! row matching the moment targets, correct it so that a completion exists,
//! and complete it to a square matrix with [`dual_extend`] or [`tight_extend`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use log::{debug, info};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::extension::{dual_extend, tight_extend};
use crate::factorization::{sos_factor, sup_bound, SosMethod, SosOptions};
use crate::lattice::DilationMatrix;
use crate::moments::{
    check_lambda_pair, check_vm_masks, check_vm_polyphase, dual_lambda, extend_self_dual, g_basis,
    vm_targets, LambdaSet,
};
use crate::multi_index::{of_order, up_to_order, MultiIndex};
use crate::polyphase::{product_residual, PolyphaseMatrix, Product, DEFAULT_GRID};
use crate::trigpoly::TrigPoly;

pub const SCHEMA: &str = "framesmith-fs/1";

/// Residual allowed for the polyphase identity of a dual pair.
pub const DUAL_UEP_TOLERANCE: f64 = 1e-10;
/// Residual allowed for the polyphase identity of a tight frame.
pub const TIGHT_UEP_TOLERANCE: f64 = 1e-9;
/// Residual allowed when a Gram-matrix factorization was needed.
pub const SOS_UEP_TOLERANCE: f64 = 1e-6;
pub const VM_TOLERANCE: f64 = 1e-9;
/// Allowed `|D^beta sigma(0)| / (2 pi)^[beta]` in the dual correction.
pub const SIGMA_TOLERANCE: f64 = 1e-10;
/// Cap on `sum_k |mu''_0k|^2` after damping.
pub const DAMPING_CAP: f64 = 2.0;

const MAX_DAMPING_POWER: u32 = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    DualPair,
    Tight,
}

/// Free remainder polynomial `T_{k,alpha}` multiplying `prod_j (1 - e^{2 pi i x_j})^{alpha_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreePoly {
    pub k: usize,
    pub alpha: MultiIndex,
    pub poly: TrigPoly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    pub l: u32,
    pub exponents: Vec<u32>,
    /// Certified bound on `sum_k |mu''_0k|^2`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosRecord {
    pub method: Option<SosMethod>,
    pub factors: usize,
    pub residual: f64,
}

/// Every free choice made by a pipeline; enough to rebuild the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed_order: u32,
    pub seed_lambda: LambdaSet,
    pub free_polys: Vec<FreePoly>,
    #[serde(default)]
    pub free_polys_dual: Vec<FreePoly>,
    #[serde(default)]
    pub damping: Option<Damping>,
    #[serde(default)]
    pub sos: Option<SosRecord>,
    #[serde(default)]
    pub rng_seed: Option<u64>,
    #[serde(default)]
    pub sos_options: Option<SosOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSystem {
    pub schema: String,
    pub kind: FrameKind,
    pub matrix: DilationMatrix,
    pub vm_order: u32,
    pub lambda: LambdaSet,
    pub lambda_dual: LambdaSet,
    pub refinable: TrigPoly,
    #[serde(default)]
    pub refinable_dual: Option<TrigPoly>,
    pub wavelets: Vec<TrigPoly>,
    #[serde(default)]
    pub wavelets_dual: Option<Vec<TrigPoly>>,
    /// Square completion; its first `m` columns form the polyphase matrix of the masks.
    pub polyphase: PolyphaseMatrix,
    #[serde(default)]
    pub polyphase_dual: Option<PolyphaseMatrix>,
    pub provenance: Provenance,
}

impl FrameSystem {
    /// Number of wavelet masks.
    pub fn redundancy(&self) -> usize {
        self.wavelets.len()
    }

    /// Polyphase matrix of the masks, `(r + 1) x m`.
    pub fn uep_matrix(&self) -> Result<PolyphaseMatrix> {
        self.polyphase.first_columns(self.matrix.m())
    }

    /// Polyphase matrix of the dual masks; the primal one for tight frames.
    pub fn uep_matrix_dual(&self) -> Result<PolyphaseMatrix> {
        match &self.polyphase_dual {
            Some(p) => p.first_columns(self.matrix.m()),
            None => self.uep_matrix(),
        }
    }

    pub fn refinable_dual_or_primal(&self) -> &TrigPoly {
        self.refinable_dual.as_ref().unwrap_or(&self.refinable)
    }

    pub fn wavelets_dual_or_primal(&self) -> &[TrigPoly] {
        self.wavelets_dual.as_deref().unwrap_or(&self.wavelets)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let fs: FrameSystem = serde_json::from_str(s)?;
        if fs.schema != SCHEMA {
            return Err(Error::InvalidArgument(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                fs.schema
            )));
        }
        Ok(fs)
    }

    /// Reruns the pipeline from the recorded inputs and free choices.
    pub fn rebuild(&self) -> Result<FrameSystem> {
        let p = &self.provenance;
        let mut fs = match self.kind {
            FrameKind::DualPair => build_dual(
                &self.matrix,
                self.vm_order,
                &p.seed_lambda,
                &p.free_polys,
                &p.free_polys_dual,
            )?,
            FrameKind::Tight => build_tight_with(
                &self.matrix,
                self.vm_order,
                &p.seed_lambda,
                &p.free_polys,
                &p.sos_options.unwrap_or_default(),
            )?,
        };
        fs.provenance.rng_seed = p.rng_seed;
        Ok(fs)
    }
}

/// `prod_j (1 - e^{2 pi i x_j})^{alpha_j}`, which vanishes to order `[alpha]` at 0.
fn vanishing_factor(alpha: &MultiIndex) -> TrigPoly {
    let d = alpha.dim();
    let mut out = TrigPoly::constant(d, 1.0);
    for (j, &a) in alpha.0.iter().enumerate() {
        let base = &TrigPoly::constant(d, 1.0) - &TrigPoly::exp_axis(d, j);
        out = &out * &base.pow(a);
    }
    out
}

fn check_free_polys(free: &[FreePoly], m: &DilationMatrix, bound: u32) -> Result<()> {
    for f in free {
        if f.k >= m.m() {
            return Err(Error::InvalidArgument(format!(
                "free polynomial for coset {} but only {} cosets",
                f.k,
                m.m()
            )));
        }
        if f.alpha.dim() != m.dim() || f.poly.dim() != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                got: if f.alpha.dim() != m.dim() {
                    f.alpha.dim()
                } else {
                    f.poly.dim()
                },
            });
        }
        if f.alpha.order() != bound + 1 {
            return Err(Error::InvalidArgument(format!(
                "free polynomial index {} must have order {}",
                f.alpha,
                bound + 1
            )));
        }
    }
    Ok(())
}

/// Polyphase row with the moment targets of `lambda` up to order `bound`:
/// `mu'_0k = sum_{[a] <= bound} target(k, a) g_a + sum_{[a] = bound + 1} T_{k,a} prod_j (1 - e^{2 pi i x_j})^{a_j}`.
pub fn seed_polyphase_row(
    lambda: &LambdaSet,
    m: &DilationMatrix,
    bound: u32,
    free: &[FreePoly],
) -> Result<Vec<TrigPoly>> {
    if lambda.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: lambda.dim(),
        });
    }
    if lambda.order() < bound {
        return Err(Error::InvalidArgument(format!(
            "lambda has order {} but the seed needs order {bound}",
            lambda.order()
        )));
    }
    check_free_polys(free, m, bound)?;
    let lambda = lambda.truncate(bound);
    let targets = vm_targets(&lambda, m);
    let basis = g_basis(bound, m.dim());
    let mut row: Vec<TrigPoly> = (0..m.m())
        .map(|k| {
            let mut p = TrigPoly::zero(m.dim());
            for alpha in up_to_order(m.dim(), bound) {
                p = &p + &basis.get(&alpha).scale(targets[&(k, alpha.clone())]);
            }
            p
        })
        .collect();
    for f in free {
        row[f.k] = &row[f.k] + &(&f.poly * &vanishing_factor(&f.alpha));
    }
    Ok(row)
}

/// Random free polynomials with coefficients uniform in `[-scale, scale]`
/// (real and imaginary parts) and frequencies in `[-1, 1]^d`.
pub fn random_free_polys(m: &DilationMatrix, bound: u32, scale: f64, seed: u64) -> Vec<FreePoly> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = m.dim();
    let mut out = Vec::new();
    for k in 0..m.m() {
        for alpha in of_order(d, bound + 1) {
            let terms: Vec<_> = (0..2)
                .map(|_| {
                    let freq = (0..d).map(|_| rng.gen_range(-1..=1)).collect();
                    let c = Complex64::new(
                        rng.gen_range(-scale..=scale),
                        rng.gen_range(-scale..=scale),
                    );
                    (freq, c)
                })
                .collect();
            let poly = TrigPoly::from_terms(d, terms).expect("frequencies have dimension d");
            out.push(FreePoly { k, alpha, poly });
        }
    }
    out
}

/// Output of the dual correction: both rows extended by two entries.
#[derive(Debug, Clone)]
pub struct DualCorrection {
    pub row: Vec<TrigPoly>,
    pub row_dual: Vec<TrigPoly>,
    /// `sigma = sum_l mu'_0l conj(mut_0l)`.
    pub sigma: TrigPoly,
}

fn pairing(a: &[TrigPoly], b: &[TrigPoly]) -> TrigPoly {
    let d = a[0].dim();
    a.iter()
        .zip(b)
        .fold(TrigPoly::zero(d), |acc, (p, q)| &acc + &(p * &q.conj()))
}

/// Scales the primal row by `2 - sigma` and appends `1 - sigma`, `conj(1 - sigma)`
/// and a vanishing entry, so that `sum_k mu_0k conj(mut_0k) = 1` identically.
///
/// Rejects the pair unless `sigma - 1` vanishes to order `n` at the origin,
/// which holds exactly when the two rows carry dual moment parameters.
pub fn dual_correction(row: &[TrigPoly], row_dual: &[TrigPoly], n: u32) -> Result<DualCorrection> {
    if row.len() != row_dual.len() || row.is_empty() {
        return Err(Error::LengthMismatch {
            expected: row.len(),
            got: row_dual.len(),
        });
    }
    let d = row[0].dim();
    let sigma = pairing(row, row_dual);
    let mut worst: f64 = (sigma.eval(&vec![0.0; d]) - 1.0).norm();
    for beta in up_to_order(d, n).into_iter().filter(|b| !b.is_zero()) {
        let v = sigma.derivative_at_origin(&beta).norm() / (2.0 * PI).powi(beta.order() as i32);
        worst = worst.max(v);
    }
    if worst > SIGMA_TOLERANCE {
        return Err(Error::precondition(
            "sum_l mu'_0l conj(mut_0l) - 1 must vanish to order n at 0 (dual moment parameters)",
            worst,
            SIGMA_TOLERANCE,
        ));
    }
    let one = TrigPoly::constant(d, 1.0);
    let two_minus = &TrigPoly::constant(d, 2.0) - &sigma;
    let one_minus = &one - &sigma;
    let mut out: Vec<TrigPoly> = row.iter().map(|p| p * &two_minus).collect();
    out.push(one_minus.clone());
    out.push(TrigPoly::zero(d));
    let mut out_dual = row_dual.to_vec();
    out_dual.push(one_minus.conj());
    out_dual.push(TrigPoly::zero(d));
    Ok(DualCorrection {
        row: out,
        row_dual: out_dual,
        sigma,
    })
}

fn masks_from(square: &PolyphaseMatrix, m: &DilationMatrix) -> Result<Vec<TrigPoly>> {
    square
        .rows()
        .iter()
        .map(|r| TrigPoly::polyphase_merge(&r[..m.m()], m))
        .collect()
}

fn check_refinable(mask: &TrigPoly) -> Result<()> {
    let v = mask.eval(&vec![0.0; mask.dim()]);
    let defect = (v - 1.0).norm();
    if defect > 1e-12 {
        return Err(Error::precondition(
            "refinable mask must equal 1 at the origin",
            defect,
            1e-12,
        ));
    }
    Ok(())
}

/// Dual-pair pipeline: `r = m + 1` wavelets in each family, both with
/// vanishing moments up to order `n`.
pub fn build_dual(
    m: &DilationMatrix,
    n: u32,
    lambda: &LambdaSet,
    free: &[FreePoly],
    free_dual: &[FreePoly],
) -> Result<FrameSystem> {
    if lambda.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: lambda.dim(),
        })
        .stage("lambda");
    }
    if lambda.order() < n {
        return Err(Error::InvalidArgument(format!(
            "lambda has order {} but vanishing moments of order {n} were requested",
            lambda.order()
        )))
        .stage("lambda");
    }
    let lambda = lambda.truncate(n);
    let lambda_dual = dual_lambda(&lambda);
    let pair = check_lambda_pair(&lambda, &lambda_dual).stage("lambda")?;
    debug!("dual lambda pairing residual {pair:.3e}");

    let row = seed_polyphase_row(&lambda, m, n, free).stage("seed")?;
    let row_dual = seed_polyphase_row(&lambda_dual, m, n, free_dual).stage("seed")?;
    let corrected = dual_correction(&row, &row_dual, n).stage("correction")?;
    let (square, square_dual) =
        dual_extend(&corrected.row, &corrected.row_dual).stage("extension")?;

    let masks = masks_from(&square, m).stage("masks")?;
    let masks_dual = masks_from(&square_dual, m).stage("masks")?;
    check_refinable(&masks[0]).stage("masks")?;
    check_refinable(&masks_dual[0]).stage("masks")?;

    let fs = FrameSystem {
        schema: SCHEMA.into(),
        kind: FrameKind::DualPair,
        matrix: m.clone(),
        vm_order: n,
        lambda: lambda.clone(),
        lambda_dual,
        refinable: masks[0].clone(),
        refinable_dual: Some(masks_dual[0].clone()),
        wavelets: masks[1..].to_vec(),
        wavelets_dual: Some(masks_dual[1..].to_vec()),
        polyphase: square,
        polyphase_dual: Some(square_dual),
        provenance: Provenance {
            seed_order: n,
            seed_lambda: lambda,
            free_polys: free.to_vec(),
            free_polys_dual: free_dual.to_vec(),
            damping: None,
            sos: None,
            rng_seed: None,
            sos_options: None,
        },
    };
    check_built(&fs, DUAL_UEP_TOLERANCE).stage("verification")?;
    info!(
        "built dual pair: m = {}, n = {n}, r = {}",
        m.m(),
        fs.redundancy()
    );
    Ok(fs)
}

fn check_built(fs: &FrameSystem, tolerance: f64) -> Result<()> {
    let a = fs.uep_matrix()?;
    let b = fs.uep_matrix_dual()?;
    let residual = product_residual(&a, &b, Product::Columns, DEFAULT_GRID)?;
    if residual > tolerance {
        return Err(Error::precondition("M^T conj(Mt) = I", residual, tolerance));
    }
    let n = fs.vm_order as i64;
    let vm = check_vm_masks(&fs.wavelets, &fs.matrix, n).max(check_vm_masks(
        fs.wavelets_dual_or_primal(),
        &fs.matrix,
        n,
    ));
    if vm > VM_TOLERANCE {
        return Err(Error::precondition(
            "wavelet vanishing moments",
            vm,
            VM_TOLERANCE,
        ));
    }
    Ok(())
}

/// `1 - sin^{2L}(pi x_j)` for one axis.
fn damping_axis(d: usize, j: usize, l: u32) -> TrigPoly {
    &TrigPoly::constant(d, 1.0) - &TrigPoly::sin_squared_axis(d, j).pow(l)
}

/// Multiplies the row by `prod_i (1 - sin^{2L} pi x_i)^{M_i}` with `L = ceil((n + 1) / 2)`
/// and the smallest uniform `M_i` for which `sum_k |mu''_0k|^2 <= 2` is certified.
pub fn tight_damp(row: &[TrigPoly], n: u32) -> Result<(Vec<TrigPoly>, Damping)> {
    let d = row
        .first()
        .map(TrigPoly::dim)
        .ok_or_else(|| Error::ShapeMismatch("empty row".into()))?;
    let l = (n + 1).div_ceil(2).max(1);
    let factor = (0..d).fold(TrigPoly::constant(d, 1.0), |acc, j| {
        &acc * &damping_axis(d, j, l)
    });
    let factor_sq = factor.norm_sqr().real_part_poly();

    let mut sigma = sum_norm_sqr(row);
    // the damping factor equals 1 at the origin
    let at_origin = sigma.eval(&vec![0.0; d]).norm();
    if at_origin > DAMPING_CAP {
        return Err(Error::precondition(
            "sum_k |mu'_0k(0)|^2 must not exceed the damping cap",
            at_origin,
            DAMPING_CAP,
        ));
    }
    let mut power = 0u32;
    let mut factor_pow = TrigPoly::constant(d, 1.0);
    loop {
        let bound = sup_bound(&sigma);
        if bound <= DAMPING_CAP {
            let damped = row.iter().map(|p| p * &factor_pow).collect();
            debug!("damping: L = {l}, M = {power}, bound {bound:.6}");
            return Ok((
                damped,
                Damping {
                    l,
                    exponents: vec![power; d],
                    bound,
                },
            ));
        }
        if power >= MAX_DAMPING_POWER {
            return Err(Error::Degenerate(format!(
                "damping exponent {power} still leaves sup sigma bound {bound:.6} above {DAMPING_CAP}"
            )));
        }
        power += 1;
        factor_pow = &factor_pow * &factor;
        sigma = (&sigma * &factor_sq).real_part_poly();
    }
}

fn sum_norm_sqr(row: &[TrigPoly]) -> TrigPoly {
    let d = row[0].dim();
    row.iter()
        .fold(TrigPoly::zero(d), |acc, p| &acc + &p.norm_sqr())
        .real_part_poly()
}

/// `mu_0k = (3/2 - sigma/2) mu''_0k` with `sigma = sum_k |mu''_0k|^2`; returns the row and `sigma`.
pub fn tight_correction(row: &[TrigPoly]) -> Result<(Vec<TrigPoly>, TrigPoly)> {
    let d = row
        .first()
        .map(TrigPoly::dim)
        .ok_or_else(|| Error::ShapeMismatch("empty row".into()))?;
    let sigma = sum_norm_sqr(row);
    let bound = sup_bound(&sigma);
    if bound > DAMPING_CAP {
        return Err(Error::precondition(
            "sup sum_k |mu''_0k|^2 <= 2",
            bound,
            DAMPING_CAP,
        ));
    }
    let scale = &TrigPoly::constant(d, 1.5) - &sigma.scale(0.5);
    Ok((row.iter().map(|p| p * &scale).collect(), sigma))
}

/// Appends `(1 - sigma) t_i` for a sum-of-squares factorization
/// `1 - sigma/4 = sum_i |t_i|^2`, then a vanishing entry.
pub fn tight_complete(
    row: &[TrigPoly],
    sigma: &TrigPoly,
    opts: &SosOptions,
) -> Result<(Vec<TrigPoly>, SosRecord)> {
    let d = sigma.dim();
    let one_minus = &TrigPoly::constant(d, 1.0) - sigma;
    let mut out = row.to_vec();
    let record = if one_minus.l1_norm() <= 1e-14 {
        SosRecord {
            method: None,
            factors: 0,
            residual: 0.0,
        }
    } else {
        let target = (&TrigPoly::constant(d, 1.0) - &sigma.scale(0.25)).real_part_poly();
        let sos = sos_factor(&target, opts)?;
        for t in &sos.factors {
            out.push(&one_minus * t);
        }
        SosRecord {
            method: Some(sos.method),
            factors: sos.factors.len(),
            residual: sos.residual,
        }
    };
    out.push(TrigPoly::zero(d));
    Ok((out, record))
}

/// Tight-frame pipeline for self-dual moment parameters.
pub fn build_tight(
    m: &DilationMatrix,
    n: u32,
    lambda: &LambdaSet,
    free: &[FreePoly],
) -> Result<FrameSystem> {
    build_tight_with(m, n, lambda, free, &SosOptions::default())
}

/// [`build_tight`] with explicit settings for the sum-of-squares completion.
pub fn build_tight_with(
    m: &DilationMatrix,
    n: u32,
    lambda: &LambdaSet,
    free: &[FreePoly],
    opts: &SosOptions,
) -> Result<FrameSystem> {
    if lambda.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: lambda.dim(),
        })
        .stage("lambda");
    }
    if lambda.order() < n {
        return Err(Error::InvalidArgument(format!(
            "lambda has order {} but vanishing moments of order {n} were requested",
            lambda.order()
        )))
        .stage("lambda");
    }
    let seed_order = 2 * n;
    let seed_lambda = if lambda.order() >= seed_order {
        lambda.truncate(seed_order)
    } else {
        extend_self_dual(lambda, seed_order, &BTreeMap::new())
    };
    let self_dual = check_lambda_pair(&seed_lambda, &seed_lambda).stage("lambda")?;
    if self_dual > 1e-14 {
        return Err(Error::precondition(
            "lambda must be self-dual",
            self_dual,
            1e-14,
        ))
        .stage("lambda");
    }

    let seeded = seed_polyphase_row(&seed_lambda, m, seed_order, free).stage("seed")?;
    let (damped, damping) = tight_damp(&seeded, n).stage("damping")?;
    let (corrected, sigma) = tight_correction(&damped).stage("correction")?;
    let (full_row, sos) = tight_complete(&corrected, &sigma, opts).stage("completion")?;
    let square = tight_extend(&full_row).stage("extension")?;

    let masks = masks_from(&square, m).stage("masks")?;
    check_refinable(&masks[0]).stage("masks")?;
    let tolerance = if sos.method == Some(SosMethod::Gram) {
        SOS_UEP_TOLERANCE
    } else {
        TIGHT_UEP_TOLERANCE
    };
    let lambda_n = seed_lambda.truncate(n);
    let fs = FrameSystem {
        schema: SCHEMA.into(),
        kind: FrameKind::Tight,
        matrix: m.clone(),
        vm_order: n,
        lambda: lambda_n.clone(),
        lambda_dual: lambda_n,
        refinable: masks[0].clone(),
        refinable_dual: None,
        wavelets: masks[1..].to_vec(),
        wavelets_dual: None,
        polyphase: square,
        polyphase_dual: None,
        provenance: Provenance {
            seed_order,
            seed_lambda,
            free_polys: free.to_vec(),
            free_polys_dual: Vec::new(),
            damping: Some(damping),
            sos: Some(sos),
            rng_seed: None,
            sos_options: (*opts != SosOptions::default()).then_some(*opts),
        },
    };
    check_built(&fs, tolerance).stage("verification")?;
    let vm =
        check_vm_polyphase(&fs.polyphase.row(0)[..m.m()], &fs.lambda, m).stage("verification")?;
    if vm > VM_TOLERANCE {
        return Err(Error::precondition(
            "refinable row moment targets",
            vm,
            VM_TOLERANCE,
        ))
        .stage("verification");
    }
    info!(
        "built tight frame: m = {}, n = {n}, r = {}",
        m.m(),
        fs.redundancy()
    );
    Ok(fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::eval_grid;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn dyadic() -> DilationMatrix {
        DilationMatrix::new(vec![vec![2]]).unwrap()
    }

    #[test]
    fn seed_examples() {
        let m = dyadic();
        let row = seed_polyphase_row(&LambdaSet::delta(1, 1), &m, 1, &[]).unwrap();
        assert!(row[0].max_coeff_diff(&TrigPoly::constant(1, FRAC_1_SQRT_2)) < 1e-15);
        let e = TrigPoly::exp_axis(1, 0);
        let expected = (&TrigPoly::constant(1, 1.5) - &e.scale(0.5)).scale(FRAC_1_SQRT_2);
        assert!(row[1].max_coeff_diff(&expected) < 1e-15);
        for p in &row {
            assert!((p.eval(&[0.0]) - FRAC_1_SQRT_2).norm() < 1e-15);
        }
    }

    #[test]
    fn seed_meets_targets_with_free_polys() {
        let m = DilationMatrix::quincunx();
        let lambda = LambdaSet::delta(2, 2);
        let free = random_free_polys(&m, 2, 0.3, 9);
        let row = seed_polyphase_row(&lambda, &m, 2, &free).unwrap();
        assert!(check_vm_polyphase(&row, &lambda, &m).unwrap() < 1e-12);
    }

    fn c(v: f64) -> TrigPoly {
        TrigPoly::constant(1, v)
    }

    #[test]
    fn correction_of_haar_rows() {
        let h = FRAC_1_SQRT_2;
        let r = dual_correction(&[c(h), c(h)], &[c(h), c(h)], 0).unwrap();
        assert!(r.sigma.max_coeff_diff(&c(1.0)) < 1e-15);
        assert!(r.row[2].is_empty() && r.row[3].is_empty());
        assert!(r.row[0].max_coeff_diff(&c(h)) < 1e-15);
    }

    fn sin_2pi() -> TrigPoly {
        // sin 2 pi x = (e - conj e) / 2i
        let e = TrigPoly::exp_axis(1, 0);
        (&e - &e.conj()).scale(Complex64::new(0.0, -0.5))
    }

    #[test]
    fn correction_rejects_mismatched_moments() {
        let h = FRAC_1_SQRT_2;
        let bumped = (&c(1.0) - &sin_2pi().scale(Complex64::new(0.0, 0.5))).scale(h);
        let err = dual_correction(&[c(h), c(h)], &[c(h), bumped.clone()], 1);
        assert!(matches!(err, Err(Error::Precondition { .. })));
        let ok = dual_correction(&[c(h), bumped.clone()], &[c(h), bumped], 1).unwrap();
        let total = pairing(&ok.row, &ok.row_dual);
        assert!(eval_grid(&(&total - &c(1.0)), 32).max_abs() < 1e-14);
    }

    #[test]
    fn correction_leaves_square_defect() {
        let m = dyadic();
        let lambda = LambdaSet::delta(2, 1);
        let free = random_free_polys(&m, 2, 0.2, 1);
        let free_dual = random_free_polys(&m, 2, 0.2, 2);
        let row = seed_polyphase_row(&lambda, &m, 2, &free).unwrap();
        let row_dual = seed_polyphase_row(&dual_lambda(&lambda), &m, 2, &free_dual).unwrap();
        let r = dual_correction(&row, &row_dual, 2).unwrap();
        let head = pairing(&r.row[..2], &r.row_dual[..2]);
        let one_minus = &c(1.0) - &r.sigma;
        let defect = &(&c(1.0) - &head) - &(&one_minus * &one_minus);
        assert!(eval_grid(&defect, 64).max_abs() < 1e-12);
    }

    #[test]
    fn haar_dual_and_tight() {
        let m = dyadic();
        let fs = build_dual(&m, 0, &LambdaSet::delta(0, 1), &[], &[]).unwrap();
        assert_eq!(fs.redundancy(), 3);
        let expected = (&c(1.0) - &TrigPoly::exp_axis(1, 0)).scale(0.5 * FRAC_1_SQRT_2);
        assert!(fs
            .wavelets
            .iter()
            .any(|w| w.max_coeff_diff(&expected) < 1e-15 || w.max_coeff_diff(&-&expected) < 1e-15));

        let fs = build_tight(&m, 0, &LambdaSet::delta(0, 1), &[]).unwrap();
        assert_eq!(fs.polyphase.nrows(), 3);
        assert_eq!(fs.provenance.damping.as_ref().unwrap().exponents, vec![0]);
        assert_eq!(fs.provenance.sos.as_ref().unwrap().factors, 0);
    }

    #[test]
    fn damping_examples() {
        let h = FRAC_1_SQRT_2;
        let (row, damping) = tight_damp(&[c(h), c(h)], 0).unwrap();
        assert_eq!(damping.exponents, vec![0]);
        assert!(row[0].max_coeff_diff(&c(h)) < 1e-15);

        let m = dyadic();
        let lambda = extend_self_dual(&LambdaSet::delta(0, 1), 2, &BTreeMap::new());
        let seeded = seed_polyphase_row(&lambda, &m, 2, &random_free_polys(&m, 2, 3.0, 8)).unwrap();
        assert!(sup_bound(&sum_norm_sqr(&seeded)) > 2.0);
        let (damped, damping) = tight_damp(&seeded, 1).unwrap();
        assert_eq!(damping.l, 1);
        assert!(damping.exponents[0] > 0);
        assert!(sup_bound(&sum_norm_sqr(&damped)) <= 2.0);
        let scaled: Vec<TrigPoly> = seeded.iter().map(|p| p.scale(3.0)).collect();
        assert!(matches!(
            tight_damp(&scaled, 1),
            Err(Error::Precondition { .. })
        ));
        for beta in up_to_order(1, 1) {
            for (a, b) in seeded.iter().zip(&damped) {
                let diff = (a.derivative_at_origin(&beta) - b.derivative_at_origin(&beta)).norm();
                assert!(diff < 1e-13);
            }
        }
    }

    #[test]
    fn tight_correction_identity() {
        let m = dyadic();
        let lambda = extend_self_dual(&LambdaSet::delta(0, 1), 2, &BTreeMap::new());
        let seeded = seed_polyphase_row(&lambda, &m, 2, &random_free_polys(&m, 2, 0.2, 4)).unwrap();
        let (damped, _) = tight_damp(&seeded, 1).unwrap();
        let (row, sigma) = tight_correction(&damped).unwrap();
        let one = c(1.0);
        let lhs = &one - &sum_norm_sqr(&row);
        let om = &one - &sigma;
        let rhs = &(&om * &om) * &(&one - &sigma.scale(0.25));
        assert!(eval_grid(&(&lhs - &rhs), 128).max_abs() < 1e-12);
    }

    #[test]
    fn rebuild_reproduces() {
        let m = dyadic();
        let lambda = LambdaSet::delta(1, 1);
        let free = random_free_polys(&m, 1, 0.1, 3);
        let fs = build_dual(&m, 1, &lambda, &free, &[]).unwrap();
        assert_eq!(fs.rebuild().unwrap(), fs);
        let json = fs.to_json().unwrap();
        assert_eq!(FrameSystem::from_json(&json).unwrap(), fs);
    }

    #[test]
    fn stage_tags() {
        let m = dyadic();
        let not_self_dual =
            LambdaSet::from_slice_1d(&[Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.0)])
                .unwrap();
        match build_tight(&m, 1, &not_self_dual, &[]) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "lambda"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
