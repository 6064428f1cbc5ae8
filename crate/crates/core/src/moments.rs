//! Vanishing-moment bookkeeping.
//!
//! A refinable mask whose polyphase row satisfies the moment targets for a
//! parameter set `lambda` produces wavelets with vanishing moments. This
//! module holds those parameter sets, the recursions relating a set to its
//! dual (or to itself in the tight case), the interpolation basis `g_alpha`
//! used to build rows with prescribed derivatives at the origin, and the
//! residual checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::accurate::Dot2;
use crate::error::{Error, Result};
use crate::lattice::DilationMatrix;
use crate::multi_index::{up_to_order, MultiIndex};
use crate::trigpoly::TrigPoly;

/// Parameters `lambda_alpha` for every `[alpha] <= n`, with `lambda_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSet {
    n: u32,
    d: usize,
    values: BTreeMap<MultiIndex, Complex64>,
}

impl LambdaSet {
    pub fn new(n: u32, d: usize, values: BTreeMap<MultiIndex, Complex64>) -> Result<Self> {
        for alpha in up_to_order(d, n) {
            if !values.contains_key(&alpha) {
                return Err(Error::InvalidArgument(format!(
                    "lambda missing for alpha = {alpha}"
                )));
            }
        }
        if let Some(alpha) = values.keys().find(|a| a.dim() != d || a.order() > n) {
            return Err(Error::InvalidArgument(format!(
                "lambda has unexpected index {alpha} for n = {n}, d = {d}"
            )));
        }
        let l0 = values[&MultiIndex::zero(d)];
        if (l0 - Complex64::new(1.0, 0.0)).norm() > 1e-14 {
            return Err(Error::InvalidArgument(format!(
                "lambda_0 must be 1, got {l0}"
            )));
        }
        Ok(Self { n, d, values })
    }

    /// `lambda_alpha = delta_{alpha, 0}`.
    pub fn delta(n: u32, d: usize) -> Self {
        let values = up_to_order(d, n)
            .into_iter()
            .map(|a| {
                let v = if a.is_zero() { 1.0 } else { 0.0 };
                (a, Complex64::new(v, 0.0))
            })
            .collect();
        Self { n, d, values }
    }

    /// Univariate set from `(lambda_0, lambda_1, ..., lambda_n)`.
    pub fn from_slice_1d(values: &[Complex64]) -> Result<Self> {
        let n = values
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidArgument("lambda needs at least lambda_0".into()))?
            as u32;
        Self::new(
            n,
            1,
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (MultiIndex(vec![i as u32]), v))
                .collect(),
        )
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, alpha: &MultiIndex) -> Complex64 {
        self.values[alpha]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.values.iter()
    }

    /// Keeps only `[alpha] <= n`.
    pub fn truncate(&self, n: u32) -> Self {
        Self {
            n: n.min(self.n),
            d: self.d,
            values: self
                .values
                .iter()
                .filter(|(a, _)| a.order() <= n)
                .map(|(a, &v)| (a.clone(), v))
                .collect(),
        }
    }

    pub fn max_diff(&self, other: &LambdaSet) -> f64 {
        self.values
            .iter()
            .map(|(a, v)| (v - other.values.get(a).copied().unwrap_or_default()).norm())
            .fold(0.0, f64::max)
    }
}

/// Dual parameters: `lambda~_0 = 1` and, in increasing order,
/// `lambda~_a = -conj(lambda_a) - sum_{0 < b < a} C(a, b) conj(lambda_b) lambda~_{a-b}`.
///
/// The result annihilates every pairing sum checked by [`check_lambda_pair`].
pub fn dual_lambda(lambda: &LambdaSet) -> LambdaSet {
    let d = lambda.d;
    let mut dual: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
    for alpha in up_to_order(d, lambda.n) {
        if alpha.is_zero() {
            dual.insert(alpha, Complex64::new(1.0, 0.0));
            continue;
        }
        let mut v = Dot2::default();
        v.add(-lambda.get(&alpha).conj(), Complex64::new(1.0, 0.0));
        for beta in alpha.below() {
            if beta.is_zero() || beta == alpha {
                continue;
            }
            v.add(
                -alpha.binomial(&beta) * lambda.get(&beta).conj(),
                dual[&alpha.sub(&beta)],
            );
        }
        dual.insert(alpha, v.value());
    }
    LambdaSet {
        n: lambda.n,
        d,
        values: dual,
    }
}

/// Worst `|sum_{0 <= g <= a} C(a, g) lambda_g conj(lambda~_{a-g})|` over `0 < [a] <= n`.
pub fn check_lambda_pair(lambda: &LambdaSet, dual: &LambdaSet) -> Result<f64> {
    if lambda.n != dual.n || lambda.d != dual.d {
        return Err(Error::ShapeMismatch(format!(
            "lambda sets have (n, d) = ({}, {}) and ({}, {})",
            lambda.n, lambda.d, dual.n, dual.d
        )));
    }
    Ok(up_to_order(lambda.d, lambda.n)
        .into_iter()
        .filter(|a| !a.is_zero())
        .map(|alpha| pairing_sum(lambda, dual, &alpha).norm())
        .fold(0.0, f64::max))
}

fn pairing_sum(lambda: &LambdaSet, dual: &LambdaSet, alpha: &MultiIndex) -> Complex64 {
    let mut acc = Dot2::default();
    for g in alpha.below() {
        acc.add(
            alpha.binomial(&g) * lambda.get(&g),
            dual.get(&alpha.sub(&g)).conj(),
        );
    }
    acc.value()
}

/// Self-dual parameters: `Im lambda_a` is free (default 0) and `Re lambda_a`
/// is fixed by `2 Re lambda_a = -sum_{0 < g < a} C(a, g) lambda_g conj(lambda_{a-g})`.
pub fn self_dual_lambda(n: u32, d: usize, free_imag: &BTreeMap<MultiIndex, f64>) -> LambdaSet {
    extend_self_dual(&LambdaSet::delta(0, d), n, free_imag)
}

/// Continues the self-dual recursion of `base` up to order `n`, keeping the
/// values already present in `base`.
pub fn extend_self_dual(
    base: &LambdaSet,
    n: u32,
    free_imag: &BTreeMap<MultiIndex, f64>,
) -> LambdaSet {
    let d = base.d;
    let mut values = base.values.clone();
    for alpha in up_to_order(d, n) {
        if values.contains_key(&alpha) {
            continue;
        }
        let mut s = Complex64::default();
        for g in alpha.below() {
            if g.is_zero() || g == alpha {
                continue;
            }
            s += alpha.binomial(&g) * values[&g] * values[&alpha.sub(&g)].conj();
        }
        let im = free_imag.get(&alpha).copied().unwrap_or(0.0);
        values.insert(alpha, Complex64::new(-s.re / 2.0, im));
    }
    LambdaSet {
        n: n.max(base.n),
        d,
        values,
    }
}

/// Trigonometric polynomials `g_alpha`, `[alpha] <= n`, with
/// `D^beta g_alpha(0) = delta_{alpha beta}` for all `[beta] <= n`.
#[derive(Debug, Clone)]
pub struct GBasis {
    pub n: u32,
    pub d: usize,
    pub polys: BTreeMap<MultiIndex, TrigPoly>,
}

impl GBasis {
    pub fn get(&self, alpha: &MultiIndex) -> &TrigPoly {
        &self.polys[alpha]
    }

    /// Largest `|D^beta g_alpha(0) - delta_{alpha beta}| / (2 pi)^([beta] - [alpha])`:
    /// the Kronecker defect of `(2 pi i)^[alpha] g_alpha` under the normalized
    /// derivative `D^beta / (2 pi i)^[beta]`.
    pub fn kronecker_residual(&self) -> f64 {
        let indices = up_to_order(self.d, self.n);
        let mut worst: f64 = 0.0;
        for (alpha, g) in &self.polys {
            for beta in &indices {
                let target = if alpha == beta { 1.0 } else { 0.0 };
                let v = g.derivative_at_origin(beta);
                let scale = (2.0 * PI).powi(beta.order() as i32 - alpha.order() as i32);
                worst = worst.max((v - target).norm() / scale);
            }
        }
        worst
    }
}

/// Builds the basis from `t_j = (e^{2 pi i x_j} - 1) / (2 pi i)`.
///
/// `t^alpha / alpha!` already has the right derivatives up to order `[alpha]`;
/// higher-order derivatives are removed by subtracting multiples of the
/// higher-order basis elements, which are therefore built first.
pub fn g_basis(n: u32, d: usize) -> GBasis {
    let inv_two_pi_i = Complex64::new(0.0, -1.0 / (2.0 * PI));
    let t: Vec<TrigPoly> = (0..d)
        .map(|j| (&TrigPoly::exp_axis(d, j) - &TrigPoly::constant(d, 1.0)).scale(inv_two_pi_i))
        .collect();
    let powers: Vec<Vec<TrigPoly>> = t
        .iter()
        .map(|tj| {
            let mut v = vec![TrigPoly::constant(d, 1.0)];
            for e in 1..=n {
                let next = &v[e as usize - 1] * tj;
                v.push(next);
            }
            v
        })
        .collect();

    let indices = up_to_order(d, n);
    let mut polys: BTreeMap<MultiIndex, TrigPoly> = BTreeMap::new();
    for alpha in indices.iter().rev() {
        let mut raw = TrigPoly::constant(d, 1.0 / alpha.factorial());
        for (j, &a) in alpha.0.iter().enumerate() {
            raw = &raw * &powers[j][a as usize];
        }
        let mut g = raw.clone();
        for beta in indices.iter().filter(|b| b.order() > alpha.order()) {
            let c = raw.derivative_at_origin(beta);
            if c.norm() > 0.0 {
                g = &g - &polys[beta].scale(c);
            }
        }
        polys.insert(alpha.clone(), g);
    }
    GBasis { n, d, polys }
}

/// `(-2 pi i M^{-1} s_k)^beta` for every digit `k`.
fn digit_powers(m: &DilationMatrix, beta: &MultiIndex) -> Vec<Complex64> {
    let minus_two_pi_i = Complex64::new(0.0, -2.0 * PI);
    m.digits()
        .iter()
        .map(|s| {
            let y = m.inverse_apply(s);
            y.iter()
                .zip(&beta.0)
                .fold(Complex64::new(1.0, 0.0), |acc, (&yj, &bj)| {
                    acc * (minus_two_pi_i * yj).powu(bj)
                })
        })
        .collect()
}

/// Moment targets: `(1/sqrt m) sum_{g <= b} lambda_g C(b, g) (-2 pi i M^{-1} s_k)^{b-g}`
/// keyed by `(k, beta)` for every digit `k` and `[beta] <= lambda.order()`.
pub fn vm_targets(
    lambda: &LambdaSet,
    m: &DilationMatrix,
) -> BTreeMap<(usize, MultiIndex), Complex64> {
    let inv_sqrt_m = 1.0 / (m.m() as f64).sqrt();
    let mut out = BTreeMap::new();
    for beta in up_to_order(lambda.d, lambda.n) {
        let mut per_digit = vec![Complex64::default(); m.m()];
        for g in beta.below() {
            let c = lambda.get(&g) * beta.binomial(&g);
            for (slot, p) in per_digit.iter_mut().zip(digit_powers(m, &beta.sub(&g))) {
                *slot += c * p;
            }
        }
        for (k, v) in per_digit.into_iter().enumerate() {
            out.insert((k, beta.clone()), v * inv_sqrt_m);
        }
    }
    out
}

/// Worst violation of the moment targets by a polyphase row.
///
/// Entries `0..m` are compared with [`vm_targets`]; entries past `m - 1`
/// must have all derivatives up to `lambda.order()` vanishing.
pub fn check_vm_polyphase(row: &[TrigPoly], lambda: &LambdaSet, m: &DilationMatrix) -> Result<f64> {
    if row.len() < m.m() {
        return Err(Error::LengthMismatch {
            expected: m.m(),
            got: row.len(),
        });
    }
    let targets = vm_targets(lambda, m);
    let mut worst: f64 = 0.0;
    for ((k, beta), target) in &targets {
        worst = worst.max((row[*k].derivative_at_origin(beta) - target).norm());
    }
    for entry in &row[m.m()..] {
        for beta in up_to_order(lambda.d, lambda.n) {
            worst = worst.max(entry.derivative_at_origin(&beta).norm());
        }
    }
    Ok(worst)
}

/// Worst `|D^beta m_nu(M*^{-1} x)|_{x=0}|` over the given wavelet masks and `[beta] <= n`.
/// A negative `n` checks nothing.
pub fn check_vm_masks(masks: &[TrigPoly], m: &DilationMatrix, n: i64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    let indices = up_to_order(m.dim(), n as u32);
    masks
        .iter()
        .flat_map(|mask| {
            indices
                .iter()
                .map(move |beta| mask.dilated_derivative_at_origin(m, beta).norm())
        })
        .fold(0.0, f64::max)
}

#[derive(Serialize, Deserialize)]
struct LambdaEntry {
    alpha: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct LambdaJson {
    n: u32,
    d: usize,
    values: Vec<LambdaEntry>,
}

impl Serialize for LambdaSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LambdaJson {
            n: self.n,
            d: self.d,
            values: up_to_order(self.d, self.n)
                .into_iter()
                .map(|a| {
                    let v = self.values[&a];
                    LambdaEntry {
                        alpha: a.0,
                        re: v.re,
                        im: v.im,
                    }
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LambdaSet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = LambdaJson::deserialize(de)?;
        let values = raw
            .values
            .into_iter()
            .map(|e| (MultiIndex(e.alpha), Complex64::new(e.re, e.im)))
            .collect();
        LambdaSet::new(raw.n, raw.d, values).map_err(serde::de::Error::custom)
    }
}
