//! Exact scalars: the rationals and prime fields, behind one field-object
//! trait so module code is written once.

use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Field descriptor object. `Elem` values only combine within one field
/// instance; the prime-field instance carries its modulus.
pub trait Field: Clone + fmt::Debug + Send + Sync + 'static {
    type Elem: Clone + PartialEq + fmt::Debug + Send + Sync + 'static;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_bigint(&self, n: &BigInt) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// None on zero.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    /// Exact string form for serialized dumps.
    fn display(&self, a: &Self::Elem) -> String;
    /// "Q" or "F_p" tag for reports.
    fn name(&self) -> String;

    fn from_i64(&self, n: i64) -> Self::Elem {
        self.from_bigint(&BigInt::from(n))
    }

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        self.inv(b).map(|bi| self.mul(a, &bi))
    }
}

/// The field of rational numbers with arbitrary-precision arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn from_bigint(&self, n: &BigInt) -> BigRational {
        BigRational::from_integer(n.clone())
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn display(&self, a: &BigRational) -> String {
        a.to_string()
    }
    fn name(&self) -> String {
        "Q".to_string()
    }
}

/// The prime field F_p for a runtime prime p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    pub p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<PrimeField> {
        if p < 2 || !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        Ok(PrimeField { p })
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Field for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn from_bigint(&self, n: &BigInt) -> u64 {
        let p = BigInt::from(self.p);
        let mut r = n % &p;
        if r.is_negative() {
            r += &p;
        }
        let digits = r.to_u64_digits().1;
        digits.first().copied().unwrap_or(0)
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.p
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.p - (b % self.p)) % self.p
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.p - a % self.p) % self.p
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        // p < 2^32 in all supported runs keeps this in range; use u128 to be safe.
        ((*a as u128 * *b as u128) % self.p as u128) as u64
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        if a % self.p == 0 {
            return None;
        }
        // Fermat: a^(p-2) mod p.
        let mut base = a % self.p;
        let mut exp = self.p - 2;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            exp >>= 1;
        }
        Some(acc)
    }
    fn is_zero(&self, a: &u64) -> bool {
        a % self.p == 0
    }
    fn display(&self, a: &u64) -> String {
        (a % self.p).to_string()
    }
    fn name(&self) -> String {
        format!("F_{}", self.p)
    }
}

/// Runtime tag for the CLI and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldKind {
    Q,
    Fp(u64),
}

impl FieldKind {
    pub fn name(&self) -> String {
        match self {
            FieldKind::Q => "Q".to_string(),
            FieldKind::Fp(p) => format!("F_{p}"),
        }
    }
}

/// Exact rational helpers used by the straightening engine.
pub fn rat_is_integer(r: &BigRational) -> bool {
    r.denom().is_one() || r.is_zero()
}

pub fn rat_to_bigint(r: &BigRational) -> Result<BigInt> {
    if !rat_is_integer(r) {
        return Err(Error::Inconsistency(format!(
            "expected an integer, found {r}"
        )));
    }
    Ok(r.numer() / r.denom())
}

pub fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n as u64 {
        acc *= BigInt::from(k);
    }
    acc
}

/// Binomial coefficient with an arbitrary integer top argument.
pub fn binomial_int(top: i64, k: u32) -> BigInt {
    let mut num = BigInt::one();
    for j in 0..k as i64 {
        num *= BigInt::from(top - j);
    }
    num / factorial(k)
}
