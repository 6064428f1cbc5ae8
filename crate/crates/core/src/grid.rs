//! Evaluation of trigonometric polynomials on uniform periodic grids.
//!
//! Values at `x = j / n` only depend on `k mod n`, so wrapping the
//! coefficients into an `n^d` array and running an unnormalized inverse DFT
//! along each axis gives exact grid values for any `n`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::trigpoly::TrigPoly;

/// Values of a polynomial at the points `j / n`, `j in [0, n)^d`, axis 0 fastest.
#[derive(Debug, Clone)]
pub struct GridValues {
    pub n: usize,
    pub d: usize,
    pub values: Vec<Complex64>,
}

impl GridValues {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid point of a linear index.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        grid_point(self.n, self.d, idx)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub fn grid_point(n: usize, d: usize, mut idx: usize) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let j = idx % n;
            idx /= n;
            j as f64 / n as f64
        })
        .collect()
}

/// Linear index of the integer grid coordinates `j` (taken mod `n`).
pub fn grid_index(n: usize, j: &[i64]) -> usize {
    let mut idx = 0usize;
    for &v in j.iter().rev() {
        idx = idx * n + v.rem_euclid(n as i64) as usize;
    }
    idx
}

pub fn eval_grid(p: &TrigPoly, n: usize) -> GridValues {
    let d = p.dim();
    let total = n.pow(d as u32);
    let mut buf = vec![Complex64::default(); total];
    for (k, &c) in p.terms() {
        buf[grid_index(n, k)] += c;
    }
    inverse_dft_nd(&mut buf, n, d);
    GridValues { n, d, values: buf }
}

/// Unnormalized `sum_k a_k e^{+2 pi i (k, j) / n}` applied along every axis in place.
pub(crate) fn inverse_dft_nd(buf: &mut [Complex64], n: usize, d: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let total = buf.len();
    let mut line = vec![Complex64::default(); n];
    for axis in 0..d {
        let stride = n.pow(axis as u32);
        for base in 0..total {
            // visit each line once: the coordinate along `axis` must be zero
            if !(base / stride).is_multiple_of(n) {
                continue;
            }
            for (t, slot) in line.iter_mut().enumerate() {
                *slot = buf[base + t * stride];
            }
            fft.process(&mut line);
            for (t, &v) in line.iter().enumerate() {
                buf[base + t * stride] = v;
            }
        }
    }
}

/// Smallest power of two that is at least `max(min, 2 * degree + 1)`.
pub fn grid_size_for_degree(degree: i64, min: usize) -> usize {
    let need = (2 * degree.max(0) as usize + 1).max(min);
    need.next_power_of_two()
}
