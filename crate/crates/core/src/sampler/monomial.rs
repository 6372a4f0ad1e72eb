use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

/// Largest `n + sum(k)` accepted by [`monomial_integral`]; keeps both the
/// reduced numerator and denominator inside the `f64` range.
pub const MONOMIAL_LIMIT: usize = 170;

/// Exponents `k_i` of the monomial `prod |c_i|^(2 k_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialExponents {
    exponents: Vec<u32>,
}

impl MonomialExponents {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.iter().all(|&k| k == 0) {
            return Err(Error::InvalidArgument(
                "at least one exponent must be positive".into(),
            ));
        }
        Ok(Self { exponents })
    }

    /// Leading exponents followed by zeros up to dimension `n`.
    pub fn padded(leading: &[u32], n: usize) -> Result<Self> {
        if leading.len() > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: leading.len(),
            });
        }
        let mut exponents = leading.to_vec();
        exponents.resize(n, 0);
        Self::new(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn degree(&self) -> usize {
        self.exponents.iter().map(|&k| k as usize).sum()
    }
}

/// Exact rational value of a sphere monomial integral, in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialIntegral {
    pub numerator: BigUint,
    pub denominator: BigUint,
}

impl MonomialIntegral {
    pub fn value(&self) -> f64 {
        let num = self.numerator.to_f64().expect("bounded by MONOMIAL_LIMIT");
        let den = self
            .denominator
            .to_f64()
            .expect("bounded by MONOMIAL_LIMIT");
        num / den
    }

    /// True when the value equals `num / den` exactly.
    pub fn equals_ratio(&self, num: u64, den: u64) -> bool {
        &self.numerator * BigUint::from(den) == &self.denominator * BigUint::from(num)
    }
}

fn factorial(k: usize) -> BigUint {
    (2..=k).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// `int prod |c_i|^(2 k_i) dV = (n-1)! prod k_i! / (n - 1 + sum k_i)!` over the
/// normalized measure on the unit sphere of `C^n`.
pub fn monomial_integral(k: &MonomialExponents, n: usize) -> Result<MonomialIntegral> {
    if n == 0 || k.exponents.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: k.exponents.len(),
        });
    }
    let total = n + k.degree();
    if total > MONOMIAL_LIMIT {
        return Err(Error::MonomialTooLarge {
            total,
            limit: MONOMIAL_LIMIT,
        });
    }
    let numerator = k
        .exponents
        .iter()
        .fold(factorial(n - 1), |acc, &ki| acc * factorial(ki as usize));
    let denominator = factorial(total - 1);
    let g = numerator.gcd(&denominator);
    Ok(MonomialIntegral {
        numerator: numerator / &g,
        denominator: denominator / g,
    })
}
