//! Error-free transformations for sums of products.

use num_complex::Complex64;

/// Compensated complex dot product: the result is as accurate as if it were
/// accumulated in twice the working precision and rounded once.
#[derive(Default)]
pub(crate) struct Dot2 {
    re: TwoSum,
    im: TwoSum,
}

impl Dot2 {
    pub(crate) fn add(&mut self, a: Complex64, b: Complex64) {
        self.re.add_product(a.re, b.re);
        self.re.add_product(-a.im, b.im);
        self.im.add_product(a.re, b.im);
        self.im.add_product(a.im, b.re);
    }

    pub(crate) fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

#[derive(Default)]
struct TwoSum {
    sum: f64,
    err: f64,
}

impl TwoSum {
    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let pe = a.mul_add(b, -p);
        let s = self.sum + p;
        let z = s - self.sum;
        let se = (self.sum - (s - z)) + (p - z);
        self.sum = s;
        self.err += se + pe;
    }

    fn value(&self) -> f64 {
        self.sum + self.err
    }
}
