use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Element `a + b√2` of the ring ℤ[√2].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Zr2 {
    pub a: BigInt,
    pub b: BigInt,
}

impl Zr2 {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>) -> Self {
        Zr2 { a: a.into(), b: b.into() }
    }

    pub fn int(a: i64) -> Self {
        Zr2::new(a, 0)
    }

    pub fn sqrt2() -> Self {
        Zr2::new(0, 1)
    }

    /// `√2` is irrational, so this is the only zero.
    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn conjugate(&self) -> Zr2 {
        Zr2 { a: self.a.clone(), b: -&self.b }
    }

    /// Field norm `a² − 2b²`.
    pub fn norm(&self) -> BigInt {
        &self.a * &self.a - BigInt::from(2) * &self.b * &self.b
    }

    /// Exact sign of the real number `a + b√2`.
    pub fn signum(&self) -> Ordering {
        let sa = self.a.sign();
        let sb = self.b.sign();
        use num_bigint::Sign::*;
        match (sa, sb) {
            (NoSign, NoSign) => Ordering::Equal,
            (Plus, Plus) | (Plus, NoSign) | (NoSign, Plus) => Ordering::Greater,
            (Minus, Minus) | (Minus, NoSign) | (NoSign, Minus) => Ordering::Less,
            // opposite signs: compare a² with 2b²
            (Plus, Minus) => (&self.a * &self.a).cmp(&(BigInt::from(2) * &self.b * &self.b)),
            (Minus, Plus) => (BigInt::from(2) * &self.b * &self.b).cmp(&(&self.a * &self.a)),
        }
    }

    /// `self / √2`, when it stays in the ring (i.e. `a` is even).
    pub fn div_sqrt2(&self) -> Option<Zr2> {
        if self.a.is_even() {
            Some(Zr2 { a: self.b.clone(), b: &self.a / 2 })
        } else {
            None
        }
    }

    pub fn scale(&self, k: &BigInt) -> Zr2 {
        Zr2 { a: &self.a * k, b: &self.b * k }
    }
}

impl Ord for Zr2 {
    /// Order of the real values.
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl PartialOrd for Zr2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Zr2 {
    type Output = Zr2;
    fn add(self, rhs: &Zr2) -> Zr2 {
        Zr2 { a: &self.a + &rhs.a, b: &self.b + &rhs.b }
    }
}

impl Add for Zr2 {
    type Output = Zr2;
    fn add(self, rhs: Zr2) -> Zr2 {
        &self + &rhs
    }
}

impl Sub for &Zr2 {
    type Output = Zr2;
    fn sub(self, rhs: &Zr2) -> Zr2 {
        Zr2 { a: &self.a - &rhs.a, b: &self.b - &rhs.b }
    }
}

impl Sub for Zr2 {
    type Output = Zr2;
    fn sub(self, rhs: Zr2) -> Zr2 {
        &self - &rhs
    }
}

impl Mul for &Zr2 {
    type Output = Zr2;
    /// `(a + b√2)(c + d√2) = (ac + 2bd) + (ad + bc)√2`
    fn mul(self, rhs: &Zr2) -> Zr2 {
        Zr2 { a: &self.a * &rhs.a + BigInt::from(2) * &self.b * &rhs.b, b: &self.a * &rhs.b + &self.b * &rhs.a }
    }
}

impl Mul for Zr2 {
    type Output = Zr2;
    fn mul(self, rhs: Zr2) -> Zr2 {
        &self * &rhs
    }
}

impl Neg for &Zr2 {
    type Output = Zr2;
    fn neg(self) -> Zr2 {
        Zr2 { a: -&self.a, b: -&self.b }
    }
}

impl Neg for Zr2 {
    type Output = Zr2;
    fn neg(self) -> Zr2 {
        -&self
    }
}

impl fmt::Display for Zr2 {
    /// Always as an integer pair: `1+0√2`, `0-1√2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_negative() {
            write!(f, "{}-{}√2", self.a, -&self.b)
        } else {
            write!(f, "{}+{}√2", self.a, self.b)
        }
    }
}

/// Element of the field ℚ(√2); only used to normalize rays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Qr2 {
    pub a: BigRational,
    pub b: BigRational,
}

impl Qr2 {
    pub fn from_ring(z: &Zr2) -> Qr2 {
        Qr2 { a: BigRational::from_integer(z.a.clone()), b: BigRational::from_integer(z.b.clone()) }
    }

    pub fn mul(&self, rhs: &Qr2) -> Qr2 {
        let two = BigRational::from_integer(2.into());
        Qr2 { a: &self.a * &rhs.a + two * &self.b * &rhs.b, b: &self.a * &rhs.b + &self.b * &rhs.a }
    }

    /// `(a − b√2) / (a² − 2b²)`; `None` for zero.
    pub fn recip(&self) -> Option<Qr2> {
        let two = BigRational::from_integer(2.into());
        let n = &self.a * &self.a - two * &self.b * &self.b;
        if n.is_zero() {
            return None;
        }
        Some(Qr2 { a: &self.a / &n, b: -&self.b / &n })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ring_examples() {
        assert_eq!(Zr2::sqrt2() * Zr2::sqrt2(), Zr2::int(2));
        assert_eq!(Zr2::new(1, 1) * Zr2::new(1, -1), Zr2::int(-1));
        assert!(Zr2::new(0, 0).is_zero());
        assert!(!Zr2::new(2, -1).is_zero());
        assert_eq!(-Zr2::new(3, -2), Zr2::new(-3, 2));
        assert_eq!(Zr2::new(1, 2) + Zr2::new(3, -5), Zr2::new(4, -3));
    }

    #[test]
    fn exact_sign() {
        assert_eq!(Zr2::new(-1, 1).signum(), Ordering::Greater); // √2 − 1
        assert_eq!(Zr2::new(2, -1).signum(), Ordering::Greater); // 2 − √2
        assert_eq!(Zr2::new(1, -1).signum(), Ordering::Less);
        assert_eq!(Zr2::new(-3, 2).signum(), Ordering::Less); // 2√2 − 3 ≈ −0.17
        assert!(Zr2::int(1) < Zr2::sqrt2());
    }

    #[test]
    fn display_integer_pairs() {
        assert_eq!(Zr2::new(1, 0).to_string(), "1+0√2");
        assert_eq!(Zr2::new(0, -1).to_string(), "0-1√2");
    }

    fn zr2() -> impl Strategy<Value = Zr2> {
        (-20i64..20, -20i64..20).prop_map(|(a, b)| Zr2::new(a, b))
    }

    proptest! {
        #[test]
        fn ring_laws(x in zr2(), y in zr2(), z in zr2()) {
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            prop_assert_eq!((&x * &y).norm(), x.norm() * y.norm());
        }

        #[test]
        fn sign_matches_float(x in zr2()) {
            let v = x.a.to_string().parse::<f64>().unwrap()
                + x.b.to_string().parse::<f64>().unwrap() * std::f64::consts::SQRT_2;
            let expected = if x.is_zero() { Ordering::Equal } else if v > 0.0 { Ordering::Greater } else { Ordering::Less };
            prop_assert_eq!(x.signum(), expected);
        }

        #[test]
        fn recip_inverts(x in zr2()) {
            prop_assume!(!x.is_zero());
            let q = Qr2::from_ring(&x);
            let prod = q.mul(&q.recip().unwrap());
            prop_assert_eq!(prod, Qr2::from_ring(&Zr2::int(1)));
        }
    }
}
