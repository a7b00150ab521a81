//! Exact arithmetic over prime fields `F_q`.
//!
//! Every coded operation in this crate reduces to element arithmetic here.
//! Only prime moduli are supported: all algorithms in the crate are
//! field-agnostic, and primes already cover the binary case `q = 2` as well
//! as every demand space used by the linear-function-retrieval variant.
//!
//! Elements carry their modulus so that mixing fields is caught immediately;
//! an operation on elements of different fields is a programming error and
//! panics rather than coercing.

use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GfError {
    #[error("modulus {0} is not a prime in [2, 2^16)")]
    NotPrime(u32),
    #[error("division by zero in F_{0}")]
    DivisionByZero(u32),
    #[error("value {value} is not a residue modulo {q}")]
    OutOfRange { value: u64, q: u32 },
}

/// A prime field `F_q`, identified by its modulus.
///
/// The context is a tiny copyable value; containers (vectors, matrices,
/// libraries) store one copy and enforce it on their elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fq {
    q: u32,
}

impl Fq {
    /// Moduli are restricted to primes below 2^16 so that products always
    /// fit in a `u64` after widening.
    pub fn new(q: u32) -> Result<Self, GfError> {
        if q < (1 << 16) && is_prime(q) {
            Ok(Self { q })
        } else {
            Err(GfError::NotPrime(q))
        }
    }

    pub fn modulus(&self) -> u32 {
        self.q
    }

    /// Embeds an integer, reducing it modulo `q`.
    pub fn el(&self, value: u64) -> FieldElement {
        FieldElement {
            value: (value % u64::from(self.q)) as u32,
            q: self.q,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.el(0)
    }

    pub fn one(&self) -> FieldElement {
        self.el(1)
    }

    /// All field elements in ascending residue order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        let q = self.q;
        (0..q).map(move |v| FieldElement { value: v, q })
    }

    // Raw residue arithmetic. Inputs must already be reduced; these are the
    // hot-path primitives behind the typed operators and the packet math in
    // the scheme module.

    #[inline]
    pub fn add_raw(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.q && b < self.q);
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub_raw(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.q && b < self.q);
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg_raw(&self, a: u32) -> u32 {
        debug_assert!(a < self.q);
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul_raw(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.q && b < self.q);
        ((u64::from(a) * u64::from(b)) % u64::from(self.q)) as u32
    }

    pub fn inv_raw(&self, a: u32) -> Result<u32, GfError> {
        debug_assert!(a < self.q);
        if a == 0 {
            return Err(GfError::DivisionByZero(self.q));
        }
        // Extended Euclid on (a, q); q prime guarantees gcd 1.
        let (mut r0, mut r1) = (i64::from(a), i64::from(self.q));
        let (mut s0, mut s1) = (1i64, 0i64);
        while r1 != 0 {
            let k = r0 / r1;
            (r0, r1) = (r1, r0 - k * r1);
            (s0, s1) = (s1, s0 - k * s1);
        }
        debug_assert_eq!(r0, 1);
        Ok(s0.rem_euclid(i64::from(self.q)) as u32)
    }
}

impl fmt::Display for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

/// A residue in `F_q`. Operators panic when the operands belong to
/// different fields.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    q: u32,
}

impl FieldElement {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> Fq {
        Fq { q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn inv(&self) -> Result<FieldElement, GfError> {
        let v = self.field().inv_raw(self.value)?;
        Ok(FieldElement { value: v, q: self.q })
    }
}

macro_rules! check_ctx {
    ($a:expr, $b:expr) => {
        assert_eq!(
            $a.q, $b.q,
            "field context mismatch: F_{} vs F_{}",
            $a.q, $b.q
        );
    };
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        check_ctx!(self, rhs);
        FieldElement {
            value: self.field().add_raw(self.value, rhs.value),
            q: self.q,
        }
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        check_ctx!(self, rhs);
        FieldElement {
            value: self.field().sub_raw(self.value, rhs.value),
            q: self.q,
        }
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        check_ctx!(self, rhs);
        FieldElement {
            value: self.field().mul_raw(self.value, rhs.value),
            q: self.q,
        }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            value: self.field().neg_raw(self.value),
            q: self.q,
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.q)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    if q.is_multiple_of(2) {
        return q == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= q as u64 {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn prime_validation() {
        for q in [2u32, 3, 5, 7, 11, 65521] {
            assert!(Fq::new(q).is_ok(), "{q} must be accepted");
        }
        for q in [0u32, 1, 4, 6, 9, 65536, 65537] {
            assert!(Fq::new(q).is_err(), "{q} must be rejected");
        }
    }

    #[test]
    fn characteristic_two_addition() {
        let f2 = Fq::new(2).unwrap();
        assert_eq!((f2.el(1) + f2.el(1)).value(), 0);
    }

    #[test]
    fn modular_addition() {
        let f5 = Fq::new(5).unwrap();
        assert_eq!((f5.el(3) + f5.el(4)).value(), 2);
    }

    #[test]
    fn additive_identity() {
        let f3 = Fq::new(3).unwrap();
        for x in f3.elements() {
            assert_eq!(f3.zero() + x, x);
        }
    }

    #[test]
    fn multiplication_wraps() {
        let f5 = Fq::new(5).unwrap();
        assert_eq!((f5.el(2) * f5.el(3)).value(), 1);
        let f2 = Fq::new(2).unwrap();
        assert_eq!((f2.el(1) * f2.el(1)).value(), 1);
    }

    #[test]
    fn multiplicative_identity() {
        let f7 = Fq::new(7).unwrap();
        for x in f7.elements() {
            assert_eq!(x * f7.one(), x);
        }
    }

    #[test]
    fn inverses() {
        let f5 = Fq::new(5).unwrap();
        assert_eq!(f5.el(2).inv().unwrap().value(), 3);
        let f2 = Fq::new(2).unwrap();
        assert_eq!(f2.el(1).inv().unwrap().value(), 1);
        assert_eq!(f5.el(0).inv(), Err(GfError::DivisionByZero(5)));
    }

    #[test]
    fn inverse_is_involutive() {
        let f11 = Fq::new(11).unwrap();
        for x in f11.elements().filter(|x| !x.is_zero()) {
            assert_eq!(x.inv().unwrap().inv().unwrap(), x);
        }
    }

    #[test]
    #[should_panic(expected = "field context mismatch")]
    fn mixing_contexts_panics() {
        let a = Fq::new(2).unwrap().el(1);
        let b = Fq::new(3).unwrap().el(1);
        let _ = a + b;
    }

    // Field axioms, exhaustively over every element pair/triple for small q.
    #[test]
    fn field_axioms_exhaustive() {
        for q in [2u32, 3, 5, 7] {
            let f = Fq::new(q).unwrap();
            let els: Vec<_> = f.elements().collect();
            for &a in &els {
                for &b in &els {
                    assert_eq!(a + b, b + a);
                    assert_eq!(a * b, b * a);
                    assert_eq!(a + (-a), f.zero());
                    assert_eq!(a - b, a + (-b));
                    if !b.is_zero() {
                        assert_eq!(b * b.inv().unwrap(), f.one());
                    }
                    for &c in &els {
                        assert_eq!((a + b) + c, a + (b + c));
                        assert_eq!((a * b) * c, a * (b * c));
                        assert_eq!(a * (b + c), a * b + a * c);
                    }
                }
            }
        }
    }

    // Widening: the largest supported modulus must not overflow.
    #[test]
    fn no_overflow_near_u16_boundary() {
        let f = Fq::new(65521).unwrap();
        let a = f.el(65520);
        let b = a * a;
        assert_eq!(b.value(), (65520u64 * 65520 % 65521) as u32);
        assert_eq!(a * a.inv().unwrap(), f.one());
    }
}
