//! Integer polynomials with non-negative coefficients.

use serde::{Deserialize, Serialize};

/// `c0 + c1·x + c2·x² + …`; non-negative coefficients make it non-decreasing on ℕ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poly {
    pub coeffs: Vec<u64>,
}

impl Poly {
    pub fn new(coeffs: Vec<u64>) -> Self {
        Poly { coeffs }
    }

    pub fn constant(c: u64) -> Self {
        Poly { coeffs: vec![c] }
    }

    /// `offset + slope·x`
    pub fn linear(offset: u64, slope: u64) -> Self {
        Poly {
            coeffs: vec![offset, slope],
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly {
            coeffs: (0..len)
                .map(|i| {
                    self.coeffs
                        .get(i)
                        .copied()
                        .unwrap_or(0)
                        .saturating_add(other.coeffs.get(i).copied().unwrap_or(0))
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::constant(0);
        }
        let mut coeffs = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].saturating_add(a.saturating_mul(*b));
            }
        }
        Poly { coeffs }
    }

    /// `x ↦ self(inner(x))`
    pub fn compose(&self, inner: &Poly) -> Poly {
        self.coeffs.iter().rev().fold(Poly::constant(0), |acc, &c| {
            acc.mul(inner).add(&Poly::constant(c))
        })
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &c| acc.saturating_mul(x).saturating_add(c))
    }
}
