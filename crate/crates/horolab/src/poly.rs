//! Sparse multivariate polynomials with exact differentiation.

use crate::error::{domain, Result};

/// A term `coeff * prod_i t_i^exps[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub exps: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: Vec<Term>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Poly::new(nvars, vec![(vec![0; nvars], c)]).expect("constant polynomial")
    }

    /// Coordinate function `t_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly::new(nvars, vec![(e, 1.0)]).expect("coordinate polynomial")
    }

    /// Builds a polynomial, merging repeated exponents and dropping zeros.
    pub fn new(nvars: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        let mut merged: Vec<Term> = Vec::new();
        for (exps, coeff) in terms {
            if exps.len() != nvars {
                return domain(format!("monomial has {} exponents, expected {nvars}", exps.len()));
            }
            if !coeff.is_finite() {
                return domain("non-finite coefficient");
            }
            match merged.iter_mut().find(|t| t.exps == exps) {
                Some(t) => t.coeff += coeff,
                None => merged.push(Term { exps, coeff }),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        merged.sort_by(|a, b| a.exps.cmp(&b.exps));
        Ok(Poly { nvars, terms: merged })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        debug_assert_eq!(t.len(), self.nvars);
        self.terms
            .iter()
            .map(|term| {
                term.exps
                    .iter()
                    .zip(t)
                    .fold(term.coeff, |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    /// Exact partial derivative in variable `i`.
    pub fn derivative(&self, i: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exps[i] > 0)
            .map(|t| {
                let mut e = t.exps.clone();
                let k = e[i];
                e[i] -= 1;
                (e, t.coeff * k as f64)
            })
            .collect();
        Poly::new(self.nvars, terms).expect("derivative of valid polynomial")
    }

    pub fn scaled(&self, c: f64) -> Poly {
        Poly::new(
            self.nvars,
            self.terms.iter().map(|t| (t.exps.clone(), c * t.coeff)).collect(),
        )
        .expect("scaled polynomial")
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let terms = self
            .terms
            .iter()
            .chain(&other.terms)
            .map(|t| (t.exps.clone(), t.coeff))
            .collect();
        Poly::new(self.nvars, terms).expect("sum of polynomials")
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let e = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                terms.push((e, a.coeff * b.coeff));
            }
        }
        Poly::new(self.nvars, terms).expect("product of polynomials")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(terms: &[(&[u32], f64)]) -> Poly {
        let n = terms[0].0.len();
        Poly::new(n, terms.iter().map(|(e, c)| (e.to_vec(), *c)).collect()).unwrap()
    }

    #[test]
    fn eval_and_derivative() {
        // 3 x^2 y - y^3 + 2
        let q = p(&[(&[2, 1], 3.0), (&[0, 3], -1.0), (&[0, 0], 2.0)]);
        assert_eq!(q.eval(&[2.0, 1.0]), 12.0 - 1.0 + 2.0);
        let qx = q.derivative(0);
        assert_eq!(qx.eval(&[2.0, 1.0]), 12.0);
        let qy = q.derivative(1);
        assert_eq!(qy.eval(&[2.0, 1.0]), 12.0 - 3.0);
        assert_eq!(q.degree(), 3);
    }

    #[test]
    fn merges_and_drops_zero_terms() {
        let q = p(&[(&[1], 1.0), (&[1], -1.0), (&[2], 1.0)]);
        assert_eq!(q.terms().len(), 1);
        assert!(Poly::constant(1, 0.0).is_zero());
    }

    #[test]
    fn product_matches_pointwise() {
        let a = p(&[(&[1, 0], 1.0), (&[0, 1], 2.0)]);
        let b = p(&[(&[1, 1], -1.0), (&[0, 0], 0.5)]);
        let t = [0.3, -0.7];
        assert!((a.mul(&b).eval(&t) - a.eval(&t) * b.eval(&t)).abs() < 1e-15);
    }

    #[test]
    fn wrong_arity_rejected() {
        assert!(Poly::new(2, vec![(vec![1], 1.0)]).is_err());
    }
}
