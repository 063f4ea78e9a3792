//! Multivariate polynomials in expanded monomial form.
//!
//! Used by the certification engine for the non-affine branch conditions that
//! consecutive constraint removals generate. Monomials are keyed by their
//! exponent vectors; coefficients below a relative threshold of 1e-14 are
//! merged away after each operation to bound coefficient noise.

use std::collections::BTreeMap;

const MERGE_REL_TOL: f64 = 1e-14;

/// Polynomial over `nvars` variables, stored as exponent-vector -> coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        if c != 0.0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// Affine polynomial `coeffs . x + offset`.
    pub fn affine(coeffs: &[f64], offset: f64) -> Self {
        let nvars = coeffs.len();
        let mut p = Poly::constant(nvars, offset);
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                let mut e = vec![0; nvars];
                e[i] = 1;
                p.terms.insert(e, c);
            }
        }
        p
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Some(c) if the polynomial is a constant (possibly zero).
    pub fn as_constant(&self) -> Option<f64> {
        if self.terms.is_empty() {
            return Some(0.0);
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&vec![0; self.nvars]) {
                return Some(*c);
            }
        }
        None
    }

    /// Some((coeffs, offset)) if degree <= 1.
    pub fn as_affine(&self) -> Option<(Vec<f64>, f64)> {
        if self.degree() > 1 {
            return None;
        }
        let mut coeffs = vec![0.0; self.nvars];
        let mut offset = 0.0;
        for (e, &c) in &self.terms {
            match e.iter().position(|&x| x > 0) {
                None => offset = c,
                Some(i) => coeffs[i] = c,
            }
        }
        Some((coeffs, offset))
    }

    fn merge_noise(&mut self) {
        let max = self
            .terms
            .values()
            .fold(0.0_f64, |acc, &c| acc.max(c.abs()));
        if max == 0.0 {
            self.terms.clear();
            return;
        }
        let cut = max * MERGE_REL_TOL;
        self.terms.retain(|_, c| c.abs() > cut);
    }

    pub fn add(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert(0.0) += c;
        }
        out.merge_noise();
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Poly {
        let mut out = self.clone();
        if k == 0.0 {
            out.terms.clear();
            return out;
        }
        for c in out.terms.values_mut() {
            *c *= k;
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out.merge_noise();
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for (e, &c) in &self.terms {
            let mut t = c;
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    t *= x[i];
                }
            }
            acc += t;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_roundtrip() {
        let p = Poly::affine(&[2.0, -1.0], 3.0);
        assert_eq!(p.degree(), 1);
        let (c, o) = p.as_affine().unwrap();
        assert_eq!(c, vec![2.0, -1.0]);
        assert_eq!(o, 3.0);
        assert_eq!(p.eval(&[1.0, 1.0]), 4.0);
    }

    #[test]
    fn product_degree_and_eval() {
        let a = Poly::affine(&[1.0, 0.0], -1.0); // x - 1
        let b = Poly::affine(&[0.0, 1.0], 1.0); // y + 1
        let p = a.mul(&b);
        assert_eq!(p.degree(), 2);
        // (x-1)(y+1) at (2,3) = 1*4 = 4
        assert!((p.eval(&[2.0, 3.0]) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn cancellation_yields_zero() {
        let a = Poly::affine(&[1.0, 2.0], 3.0);
        let z = a.sub(&a);
        assert!(z.is_zero());
        assert_eq!(z.as_constant(), Some(0.0));
    }

    #[test]
    fn noise_merging() {
        let a = Poly::affine(&[1.0], 0.0);
        let tiny = Poly::constant(1, 1e-300);
        let s = a.add(&tiny);
        assert_eq!(s.terms.len(), 1);
    }
}
