//! Sparse real polynomials in up to three variables, enough to take exact
//! Lie brackets of polynomial-coefficient vector fields.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent vector `(e1, e2, e3)`.
pub type Monomial = [u32; 3];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    pub fn monomial(c: f64, exps: Monomial) -> Self {
        let mut p = Self::zero();
        if c != 0.0 {
            p.terms.insert(exps, c);
        }
        p
    }

    /// `c * x_k` (0-based `k`).
    pub fn var(k: usize, c: f64) -> Self {
        let mut e = [0; 3];
        e[k] = 1;
        Self::monomial(c, e)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| *c != 0.0);
        self
    }

    /// Exact partial derivative in `x_k`.
    pub fn partial(&self, k: usize) -> Self {
        let mut out = Self::zero();
        for (e, &c) in &self.terms {
            if e[k] == 0 {
                continue;
            }
            let mut e2 = *e;
            e2[k] -= 1;
            *out.terms.entry(e2).or_insert(0.0) += c * e[k] as f64;
        }
        out.prune()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, &c)| {
                e.iter()
                    .zip(x.iter().chain(std::iter::repeat(&0.0)))
                    .fold(c, |acc, (&k, &xi)| acc * xi.powi(k as i32))
            })
            .sum()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            *out.terms.entry(*e).or_insert(0.0) += c;
        }
        out.prune()
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &rhs.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                *out.terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out.prune()
    }
}

/// A vector field `Σ_k c_k(x) ∂_k` with polynomial components.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyField {
    pub comps: Vec<Poly>,
}

impl PolyField {
    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Poly::is_zero)
    }

    /// Applies the field as a derivation to a scalar polynomial.
    pub fn apply(&self, f: &Poly) -> Poly {
        self.comps
            .iter()
            .enumerate()
            .fold(Poly::zero(), |acc, (k, c)| &acc + &(c * &f.partial(k)))
    }

    /// Lie bracket `[self, other]`, component `k` = `self(other_k) − other(self_k)`.
    pub fn bracket(&self, other: &PolyField) -> PolyField {
        let comps = (0..self.comps.len())
            .map(|k| &self.apply(&other.comps[k]) - &other.apply(&self.comps[k]))
            .collect();
        PolyField { comps }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_power() {
        let p = Poly::monomial(3.0, [2, 1, 0]);
        let dx = p.partial(0);
        assert_eq!(dx, Poly::monomial(6.0, [1, 1, 0]));
        assert!(p.partial(2).is_zero());
        assert_eq!(p.eval(&[2.0, 5.0]), 60.0);
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let a = PolyField {
            comps: vec![Poly::constant(1.0), Poly::var(1, 2.0)],
        };
        let b = PolyField {
            comps: vec![Poly::var(0, 1.0), Poly::monomial(1.0, [2, 0, 0])],
        };
        let ab = a.bracket(&b);
        let ba = b.bracket(&a);
        for (x, y) in ab.comps.iter().zip(&ba.comps) {
            assert!((x + y).is_zero());
        }
    }
}
