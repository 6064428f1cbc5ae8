//! Multivariate trigonometric (Laurent) polynomials.
//!
//! A [`TrigPoly`] is a finite sum `sum_k c_k e^{2 pi i (k, x)}` over integer
//! frequency vectors `k`. Evaluation is 1-periodic in every variable.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::accurate::Dot2;
use crate::error::{Error, Result};
use crate::lattice::{DilationMatrix, IVec};
use crate::multi_index::MultiIndex;

/// Coefficients below this modulus are dropped after every operation.
pub const CLEANUP_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    d: usize,
    terms: BTreeMap<IVec, Complex64>,
}

impl TrigPoly {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: impl Into<Complex64>) -> Self {
        Self::monomial(vec![0; d], c)
    }

    /// `c e^{2 pi i (k, x)}`.
    pub fn monomial(k: IVec, c: impl Into<Complex64>) -> Self {
        let d = k.len();
        let mut p = Self::zero(d);
        p.add_term(k, c.into());
        p.cleanup();
        p
    }

    /// `e^{2 pi i x_j}`.
    pub fn exp_axis(d: usize, j: usize) -> Self {
        let mut k = vec![0; d];
        k[j] = 1;
        Self::monomial(k, 1.0)
    }

    /// `sin^2(pi x_j) = (2 - e^{2 pi i x_j} - e^{-2 pi i x_j}) / 4`.
    pub fn sin_squared_axis(d: usize, j: usize) -> Self {
        let mut k = vec![0; d];
        let mut p = Self::constant(d, 0.5);
        k[j] = 1;
        p.add_term(k.clone(), Complex64::new(-0.25, 0.0));
        k[j] = -1;
        p.add_term(k, Complex64::new(-0.25, 0.0));
        p
    }

    pub fn from_terms(
        d: usize,
        terms: impl IntoIterator<Item = (IVec, Complex64)>,
    ) -> Result<Self> {
        let mut p = Self::zero(d);
        for (k, c) in terms {
            if k.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: k.len(),
                });
            }
            p.add_term(k, c);
        }
        p.cleanup();
        Ok(p)
    }

    /// Univariate polynomial from coefficients of frequencies `0, 1, 2, ...`.
    pub fn from_coeffs_1d(coeffs: &[Complex64]) -> Self {
        let mut p = Self::zero(1);
        for (k, &c) in coeffs.iter().enumerate() {
            p.add_term(vec![k as i64], c);
        }
        p.cleanup();
        p
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&IVec, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.terms.get(k).copied().unwrap_or_default()
    }

    fn add_term(&mut self, k: IVec, c: Complex64) {
        *self.terms.entry(k).or_default() += c;
    }

    fn cleanup(&mut self) {
        self.terms.retain(|_, c| c.norm() >= CLEANUP_THRESHOLD);
    }

    fn check_dim(&self, other: &TrigPoly) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &TrigPoly) -> Result<TrigPoly> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(k.clone(), c);
        }
        out.cleanup();
        Ok(out)
    }

    pub fn checked_sub(&self, other: &TrigPoly) -> Result<TrigPoly> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(k.clone(), -c);
        }
        out.cleanup();
        Ok(out)
    }

    pub fn checked_mul(&self, other: &TrigPoly) -> Result<TrigPoly> {
        self.check_dim(other)?;
        let mut sums: BTreeMap<IVec, Dot2> = BTreeMap::new();
        for (k1, &c1) in &self.terms {
            for (k2, &c2) in &other.terms {
                let k: IVec = k1.iter().zip(k2).map(|(a, b)| a + b).collect();
                sums.entry(k).or_default().add(c1, c2);
            }
        }
        let mut out = Self {
            d: self.d,
            terms: sums.into_iter().map(|(k, s)| (k, s.value())).collect(),
        };
        out.cleanup();
        Ok(out)
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> TrigPoly {
        let c = c.into();
        let mut out = Self::zero(self.d);
        for (k, &v) in &self.terms {
            out.add_term(k.clone(), v * c);
        }
        out.cleanup();
        out
    }

    /// Pointwise complex conjugate: `c_k -> conj(c_{-k})`.
    pub fn conj(&self) -> TrigPoly {
        Self {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.iter().map(|v| -v).collect(), c.conj()))
                .collect(),
        }
    }

    /// `|p|^2 = conj(p) p`.
    pub fn norm_sqr(&self) -> TrigPoly {
        &self.conj() * self
    }

    pub fn pow(&self, e: u32) -> TrigPoly {
        let mut out = Self::constant(self.d, 1.0);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, &c)| {
                let phase: f64 = k.iter().zip(x).map(|(&kj, &xj)| kj as f64 * xj).sum();
                c * Complex64::from_polar(1.0, 2.0 * PI * phase)
            })
            .sum()
    }

    /// `D^beta p(0) = sum_k c_k (2 pi i k)^beta`.
    pub fn derivative_at_origin(&self, beta: &MultiIndex) -> Complex64 {
        self.weighted_moment(beta, |k| k.iter().map(|&v| v as f64).collect())
    }

    /// `D^beta [p((M^T)^{-1} x)]` at `x = 0`, i.e. `sum_k c_k (2 pi i M^{-1} k)^beta`.
    pub fn dilated_derivative_at_origin(&self, m: &DilationMatrix, beta: &MultiIndex) -> Complex64 {
        self.weighted_moment(beta, |k| m.inverse_apply(k))
    }

    /// `(2 pi i)^[beta] sum_k c_k y(k)^beta`, with the sum compensated and the
    /// power of `2 pi i` applied once.
    fn weighted_moment(&self, beta: &MultiIndex, y: impl Fn(&[i64]) -> Vec<f64>) -> Complex64 {
        let mut acc = Dot2::default();
        for (k, &c) in &self.terms {
            let w: f64 = y(k)
                .iter()
                .zip(&beta.0)
                .map(|(&yj, &bj)| yj.powi(bj as i32))
                .product();
            acc.add(c, Complex64::new(w, 0.0));
        }
        let order = beta.order();
        let i_pow = match order % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        acc.value() * (2.0 * PI).powi(order as i32) * i_pow
    }

    /// `p(M^T x)`: frequency `k` moves to `M k`.
    pub fn compose_transpose(&self, m: &DilationMatrix) -> TrigPoly {
        Self {
            d: self.d,
            terms: self.terms.iter().map(|(k, &c)| (m.apply(k), c)).collect(),
        }
    }

    /// Coset components `mu_k` with `p(x) = m^{-1/2} sum_k e^{2 pi i (s_k, x)} mu_k(M^T x)`.
    pub fn polyphase_split(&self, m: &DilationMatrix) -> Vec<TrigPoly> {
        let scale = (m.m() as f64).sqrt();
        let mut out = vec![Self::zero(self.d); m.m()];
        for (k, &c) in &self.terms {
            let (i, l) = m.decompose(k);
            out[i].add_term(l, c * scale);
        }
        for p in &mut out {
            p.cleanup();
        }
        out
    }

    /// Inverse of [`TrigPoly::polyphase_split`].
    pub fn polyphase_merge(mus: &[TrigPoly], m: &DilationMatrix) -> Result<TrigPoly> {
        if mus.len() != m.m() {
            return Err(Error::LengthMismatch {
                expected: m.m(),
                got: mus.len(),
            });
        }
        let d = m.dim();
        let scale = 1.0 / (m.m() as f64).sqrt();
        let mut out = Self::zero(d);
        for (mu, s) in mus.iter().zip(m.digits()) {
            if mu.d != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: mu.d,
                });
            }
            for (l, &c) in &mu.terms {
                let k: IVec = m.apply(l).iter().zip(s).map(|(a, b)| a + b).collect();
                out.add_term(k, c * scale);
            }
        }
        out.cleanup();
        Ok(out)
    }

    /// Largest `|k_j|` over the support, per axis.
    pub fn degree(&self) -> Vec<i64> {
        let mut deg = vec![0; self.d];
        for k in self.terms.keys() {
            for (dj, &kj) in deg.iter_mut().zip(k) {
                *dj = (*dj).max(kj.abs());
            }
        }
        deg
    }

    pub fn max_degree(&self) -> i64 {
        self.degree().into_iter().max().unwrap_or(0)
    }

    /// `sum_k |c_k|`, an upper bound for the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn max_coeff_diff(&self, other: &TrigPoly) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &c) in &self.terms {
            worst = worst.max((c - other.coeff(k)).norm());
        }
        for (k, &c) in &other.terms {
            if !self.terms.contains_key(k) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    /// `max_k |c_k - conj(c_{-k})|`; zero iff the polynomial is real-valued.
    pub fn hermitian_defect(&self) -> f64 {
        self.max_coeff_diff(&self.conj())
    }

    /// `Re p` as a trigonometric polynomial.
    pub fn real_part_poly(&self) -> TrigPoly {
        (self + &self.conj()).scale(0.5)
    }

    /// Replaces variable `x_j` in a univariate polynomial: `p(x) -> p(x_j)` in dimension `d`.
    pub fn embed_axis(&self, d: usize, j: usize) -> TrigPoly {
        debug_assert_eq!(self.d, 1);
        Self {
            d,
            terms: self
                .terms
                .iter()
                .map(|(k, &c)| {
                    let mut v = vec![0; d];
                    v[j] = k[0];
                    (v, c)
                })
                .collect(),
        }
    }

    /// Univariate restriction to frequencies along axis `j` (other coordinates zero).
    pub fn axis_slice(&self, j: usize) -> TrigPoly {
        let mut out = Self::zero(1);
        for (k, &c) in &self.terms {
            if k.iter().enumerate().all(|(i, &v)| i == j || v == 0) {
                out.add_term(vec![k[j]], c);
            }
        }
        out
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&TrigPoly> for &TrigPoly {
            type Output = TrigPoly;
            /// Panics on dimension mismatch; use the `checked_*` variant to get an error instead.
            fn $method(self, rhs: &TrigPoly) -> TrigPoly {
                self.$checked(rhs)
                    .expect("trigonometric polynomial dimensions agree")
            }
        }
        impl $tr<TrigPoly> for TrigPoly {
            type Output = TrigPoly;
            fn $method(self, rhs: TrigPoly) -> TrigPoly {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self.scale(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    k: IVec,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TrigPolyJson {
    d: usize,
    terms: Vec<TermJson>,
}

impl Serialize for TrigPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrigPolyJson {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| TermJson {
                    k: k.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPoly {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = TrigPolyJson::deserialize(de)?;
        TrigPoly::from_terms(
            raw.d,
            raw.terms
                .into_iter()
                .map(|t| (t.k, Complex64::new(t.re, t.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi_index::MultiIndex;

    fn e1() -> TrigPoly {
        TrigPoly::exp_axis(1, 0)
    }

    fn one() -> TrigPoly {
        TrigPoly::constant(1, 1.0)
    }

    #[test]
    fn product_of_conjugate_factors() {
        let p = &(&one() + &e1()) * &(&one() - &e1());
        let expected = &one() - &e1().pow(2);
        assert_eq!(p, expected);
    }

    #[test]
    fn conj_reflects_frequencies() {
        let p = e1().scale(Complex64::i());
        let c = p.conj();
        assert_eq!(c.coeff(&[-1]), -Complex64::i());
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn eval_examples() {
        let p = &one() + &e1();
        assert!((p.eval(&[0.0]) - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(p.eval(&[0.5]).norm() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let b0 = MultiIndex(vec![0]);
        let b1 = MultiIndex(vec![1]);
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        assert!((e1().derivative_at_origin(&b1) - two_pi_i).norm() < 1e-14);
        let p = &one() - &e1();
        assert!(p.derivative_at_origin(&b0).norm() < 1e-15);
        assert!((p.derivative_at_origin(&b1) + two_pi_i).norm() < 1e-14);
    }

    #[test]
    fn dilated_derivative_halves_frequency() {
        let m = DilationMatrix::new(vec![vec![2]]).unwrap();
        let v = e1().dilated_derivative_at_origin(&m, &MultiIndex(vec![1]));
        assert!((v - Complex64::new(0.0, PI)).norm() < 1e-14);
        let p = &one() + &e1().scale(3.0);
        let v0 = p.dilated_derivative_at_origin(&m, &MultiIndex(vec![0]));
        assert!((v0 - p.eval(&[0.0])).norm() < 1e-14);
    }

    #[test]
    fn haar_polyphase() {
        let m = DilationMatrix::new(vec![vec![2]]).unwrap();
        let mask = (&one() + &e1()).scale(0.5);
        let mus = mask.polyphase_split(&m);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((mus[0].coeff(&[0]) - Complex64::new(h, 0.0)).norm() < 1e-15);
        assert!((mus[1].coeff(&[0]) - Complex64::new(h, 0.0)).norm() < 1e-15);
        assert_eq!(mus[0].len(), 1);
        let back = TrigPoly::polyphase_merge(&mus, &m).unwrap();
        assert!(back.max_coeff_diff(&mask) < 1e-15);

        let ones = one().polyphase_split(&m);
        assert!((ones[0].coeff(&[0]) - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(ones[1].is_empty());
    }

    #[test]
    fn merge_of_unit_row_is_constant() {
        let q = DilationMatrix::quincunx();
        let mus = vec![TrigPoly::constant(2, 1.0), TrigPoly::zero(2)];
        let p = TrigPoly::polyphase_merge(&mus, &q).unwrap();
        assert!((p.coeff(&[0, 0]) - Complex64::new(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(p.len(), 1);
        assert!(TrigPoly::polyphase_merge(&mus[..1], &q).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = TrigPoly::constant(1, 1.0);
        let b = TrigPoly::constant(2, 1.0);
        assert!(matches!(
            a.checked_add(&b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(a.checked_mul(&b).is_err());
    }

    #[test]
    fn json_is_sorted_and_round_trips() {
        let p = TrigPoly::from_terms(
            2,
            vec![
                (vec![1, 0], Complex64::new(1.0, 2.0)),
                (vec![-1, 3], Complex64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.starts_with(r#"{"d":2,"terms":[{"k":[-1,3]"#));
        let q: TrigPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
