//! Exact coefficient fields: the rationals, prime fields GF(p) and binary
//! extension fields GF(2^k), together with real valuations on them.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: {0} vs {1}")]
    Mismatch(Field, Field),
    #[error("operation requires characteristic 2, field is {0}")]
    WrongCharacteristic(Field),
    #[error("{0} is not a prime below 2^32")]
    NotPrime(u64),
    #[error("binary field degree {0} is outside 1..=16")]
    UnsupportedDegree(u32),
    #[error("modulus {0:#b} is not an irreducible polynomial of degree {1}")]
    ReducibleModulus(u32, u32),
    #[error("invalid field spec `{0}`")]
    InvalidSpec(String),
    #[error("literal `{0}` is not an element of {1}")]
    InvalidLiteral(String, Field),
    #[error("valuation {0} is not applicable to {1}")]
    InapplicableValuation(Valuation, Field),
}

/// A binary extension field GF(2^k), given by an irreducible modulus.
///
/// The modulus is stored as a bit mask including the leading `t^k` bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryField {
    degree: u32,
    modulus: u32,
}

/// Default irreducible moduli for GF(2^k), indexed by `k - 1`.
const DEFAULT_MODULI: [u32; 16] = [
    0b11,      // t + 1
    0b111,     // t^2 + t + 1
    0b1011,    // t^3 + t + 1
    0x13,      // t^4 + t + 1
    0x25,      // t^5 + t^2 + 1
    0x43,      // t^6 + t + 1
    0x83,      // t^7 + t + 1
    0x11B,     // t^8 + t^4 + t^3 + t + 1
    0x211,     // t^9 + t^4 + 1
    0x409,     // t^10 + t^3 + 1
    0x805,     // t^11 + t^2 + 1
    0x1009,    // t^12 + t^3 + 1
    0x201B,    // t^13 + t^4 + t^3 + t + 1
    0x4021,    // t^14 + t^5 + 1
    0x8003,    // t^15 + t + 1
    0x1002B,   // t^16 + t^5 + t^3 + t + 1
];

pub const MAX_BINARY_DEGREE: u32 = 16;

fn poly_degree(p: u64) -> u32 {
    63 - p.leading_zeros()
}

fn poly_mod(mut a: u64, m: u64) -> u64 {
    let dm = poly_degree(m);
    while a != 0 && poly_degree(a) >= dm {
        a ^= m << (poly_degree(a) - dm);
    }
    a
}

fn is_irreducible(modulus: u32, degree: u32) -> bool {
    if modulus >> degree != 1 || modulus & 1 == 0 && degree > 1 {
        return false;
    }
    // trial division by every polynomial of degree 1..=degree/2
    for d in 1..=degree / 2 {
        for low in 0..(1u64 << d) {
            let divisor = (1u64 << d) | low;
            if poly_mod(modulus as u64, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

impl BinaryField {
    pub fn new(degree: u32) -> Result<Self, FieldError> {
        if degree == 0 || degree > MAX_BINARY_DEGREE {
            return Err(FieldError::UnsupportedDegree(degree));
        }
        Ok(BinaryField { degree, modulus: DEFAULT_MODULI[degree as usize - 1] })
    }

    pub fn with_modulus(degree: u32, modulus: u32) -> Result<Self, FieldError> {
        if degree == 0 || degree > MAX_BINARY_DEGREE {
            return Err(FieldError::UnsupportedDegree(degree));
        }
        if !is_irreducible(modulus, degree) {
            return Err(FieldError::ReducibleModulus(modulus, degree));
        }
        Ok(BinaryField { degree, modulus })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn order(&self) -> u32 {
        1 << self.degree
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        let mut acc: u64 = 0;
        let mut a = a as u64;
        let mut b = b;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            a <<= 1;
            b >>= 1;
        }
        poly_mod(acc, self.modulus as u64) as u32
    }

    fn pow(&self, mut a: u32, mut e: u64) -> u32 {
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            None
        } else {
            Some(self.pow(a, (self.order() - 2) as u64))
        }
    }

    fn sqrt(&self, a: u32) -> u32 {
        self.pow(a, 1u64 << (self.degree - 1))
    }

    /// Absolute trace GF(2^k) -> GF(2).
    fn trace(&self, a: u32) -> u32 {
        let mut t = a;
        let mut acc = a;
        for _ in 1..self.degree {
            t = self.mul(t, t);
            acc ^= t;
        }
        acc
    }

    /// Half-trace, defined for odd degree: H(z)^2 + H(z) = z + Tr(z).
    fn half_trace(&self, z: u32) -> u32 {
        debug_assert!(self.degree % 2 == 1);
        let mut acc = z;
        let mut t = z;
        for _ in 0..(self.degree - 1) / 2 {
            t = self.mul(t, t);
            t = self.mul(t, t);
            acc ^= t;
        }
        acc
    }

    fn format_element(&self, bits: u32) -> String {
        if bits == 0 {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for i in (0..self.degree).rev() {
            if bits >> i & 1 == 1 {
                parts.push(match i {
                    0 => "1".to_string(),
                    1 => "t".to_string(),
                    _ => format!("t^{i}"),
                });
            }
        }
        parts.join("+")
    }
}

/// Descriptor of one of the supported coefficient fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Rational,
    Prime(u64),
    Binary(BinaryField),
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn prime(p: u64) -> Result<Field, FieldError> {
        if p >= 1 << 32 || !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Field::Prime(p))
    }

    pub fn binary(degree: u32) -> Result<Field, FieldError> {
        BinaryField::new(degree).map(Field::Binary)
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            Field::Rational => 0,
            Field::Prime(p) => *p,
            Field::Binary(_) => 2,
        }
    }

    pub fn is_char2(&self) -> bool {
        self.characteristic() == 2
    }

    /// Number of elements, `None` for the rationals.
    pub fn order(&self) -> Option<u64> {
        match self {
            Field::Rational => None,
            Field::Prime(p) => Some(*p),
            Field::Binary(b) => Some(b.order() as u64),
        }
    }

    pub fn zero(&self) -> Scalar {
        self.from_i64(0)
    }

    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(&self, n: i64) -> Scalar {
        match *self {
            Field::Rational => Scalar::Rational(BigRational::from_integer(BigInt::from(n))),
            Field::Prime(p) => Scalar::Prime { value: n.rem_euclid(p as i64) as u64, modulus: p },
            Field::Binary(bf) => Scalar::Binary { bits: (n.rem_euclid(2)) as u32, field: bf },
        }
    }

    pub fn from_bigint(&self, n: &BigInt) -> Scalar {
        match *self {
            Field::Rational => Scalar::Rational(BigRational::from_integer(n.clone())),
            Field::Prime(p) => {
                let r = n.mod_floor(&BigInt::from(p));
                Scalar::Prime { value: r.to_u64().unwrap(), modulus: p }
            }
            Field::Binary(bf) => {
                let r = n.mod_floor(&BigInt::from(2));
                Scalar::Binary { bits: r.to_u32().unwrap(), field: bf }
            }
        }
    }

    /// Maps a rational number into the field; fails when the denominator
    /// vanishes in positive characteristic.
    pub fn from_rational(&self, q: &BigRational) -> Result<Scalar, FieldError> {
        let num = self.from_bigint(q.numer());
        let den = self.from_bigint(q.denom());
        num.checked_div(&den)
    }

    /// The generator `t` of a binary field (the residue class of the
    /// indeterminate modulo the modulus).
    pub fn generator(&self) -> Option<Scalar> {
        match *self {
            Field::Binary(bf) if bf.degree > 1 => Some(Scalar::Binary { bits: 2, field: bf }),
            Field::Binary(bf) => Some(Scalar::Binary { bits: poly_mod(2, bf.modulus as u64) as u32, field: bf }),
            _ => None,
        }
    }

    /// All elements of a finite field in canonical order.
    pub fn elements(&self) -> Option<Vec<Scalar>> {
        match *self {
            Field::Rational => None,
            Field::Prime(p) => Some((0..p).map(|value| Scalar::Prime { value, modulus: p }).collect()),
            Field::Binary(bf) => Some((0..bf.order()).map(|bits| Scalar::Binary { bits, field: bf }).collect()),
        }
    }

    fn check(&self, a: &Scalar) -> Result<(), FieldError> {
        if a.field() == *self {
            Ok(())
        } else {
            Err(FieldError::Mismatch(*self, a.field()))
        }
    }

    /// Square root when `a` is a square. In GF(p) the root with the
    /// smaller residue is returned; in GF(2^k) the root always exists and is
    /// unique.
    pub fn sqrt(&self, a: &Scalar) -> Result<Option<Scalar>, FieldError> {
        self.check(a)?;
        Ok(match a {
            Scalar::Rational(q) => {
                if q.is_negative() {
                    None
                } else {
                    let n = q.numer().sqrt();
                    let d = q.denom().sqrt();
                    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
                        Some(Scalar::Rational(BigRational::new(n, d)))
                    } else {
                        None
                    }
                }
            }
            &Scalar::Prime { value, modulus } => {
                tonelli_shanks(value, modulus).map(|r| Scalar::Prime { value: r, modulus })
            }
            &Scalar::Binary { bits, field } => Some(Scalar::Binary { bits: field.sqrt(bits), field }),
        })
    }

    /// Solves `a*u^2 + u + c = 0` in a field of characteristic 2.
    ///
    /// With `a != 0` the substitution `u = v/a` gives `v^2 + v = a*c`, which
    /// is solvable iff `Tr(a*c) = 0`. The root comes from the half-trace for
    /// odd degree and from exhaustive search (smallest canonical element)
    /// for even degree.
    pub fn solve_affine_quadratic_char2(&self, a: &Scalar, c: &Scalar) -> Result<Option<Scalar>, FieldError> {
        if !self.is_char2() {
            return Err(FieldError::WrongCharacteristic(*self));
        }
        self.check(a)?;
        self.check(c)?;
        if a.is_zero() {
            return Ok(Some(c.clone()));
        }
        match *self {
            Field::Prime(_) => {
                // GF(2): a = 1, so u^2 + u = u(u+1) = 0 for every u
                Ok(if c.is_zero() { Some(self.zero()) } else { None })
            }
            Field::Binary(bf) => {
                let (Scalar::Binary { bits: ab, .. }, Scalar::Binary { bits: cb, .. }) = (a, c) else {
                    unreachable!()
                };
                let z = bf.mul(*ab, *cb);
                if bf.trace(z) != 0 {
                    return Ok(None);
                }
                let v = if bf.degree % 2 == 1 {
                    bf.half_trace(z)
                } else {
                    (0..bf.order()).find(|&v| bf.mul(v, v) ^ v == z).expect("trace-zero element has a root")
                };
                let u = bf.mul(v, bf.inv(*ab).unwrap());
                Ok(Some(Scalar::Binary { bits: u, field: bf }))
            }
            Field::Rational => unreachable!(),
        }
    }

    /// Absolute trace to GF(2), only for characteristic 2.
    pub fn trace_char2(&self, a: &Scalar) -> Result<u32, FieldError> {
        self.check(a)?;
        match (self, a) {
            (Field::Binary(bf), Scalar::Binary { bits, .. }) => Ok(bf.trace(*bits)),
            (Field::Prime(2), Scalar::Prime { value, .. }) => Ok(*value as u32),
            _ => Err(FieldError::WrongCharacteristic(*self)),
        }
    }

    /// Parses a literal in the field's canonical syntax: `p/q` or integers
    /// for the rationals, integers (and `a/b`) for GF(p), polynomials in
    /// `t` such as `t^2+t+1` for GF(2^k).
    pub fn parse_literal(&self, text: &str) -> Result<Scalar, FieldError> {
        let bad = || FieldError::InvalidLiteral(text.to_string(), *self);
        let s = text.trim();
        match self {
            Field::Binary(bf) => {
                let mut acc = self.zero();
                for part in s.split('+') {
                    let part = part.trim();
                    let e = if part == "t" {
                        1
                    } else if let Some(exp) = part.strip_prefix("t^") {
                        exp.parse::<u64>().map_err(|_| bad())?
                    } else {
                        let n: BigInt = part.parse().map_err(|_| bad())?;
                        acc = &acc + &self.from_bigint(&n);
                        continue;
                    };
                    let g = self.generator().unwrap();
                    let Scalar::Binary { bits, .. } = g else { unreachable!() };
                    acc = &acc + &Scalar::Binary { bits: bf.pow(bits, e), field: *bf };
                }
                Ok(acc)
            }
            _ => {
                let (num, den) = match s.split_once('/') {
                    Some((n, d)) => (n.trim(), d.trim()),
                    None => (s, "1"),
                };
                let n: BigInt = num.parse().map_err(|_| bad())?;
                let d: BigInt = den.parse().map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                self.from_rational(&BigRational::new(n, d)).map_err(|_| bad())
            }
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rational => write!(f, "q"),
            Field::Prime(p) => write!(f, "fp:{p}"),
            Field::Binary(bf) => {
                if bf.modulus == DEFAULT_MODULI[bf.degree as usize - 1] {
                    write!(f, "f2k:{}", bf.degree)
                } else {
                    let mut parts = Vec::new();
                    for i in (0..=bf.degree).rev() {
                        if bf.modulus >> i & 1 == 1 {
                            parts.push(match i {
                                0 => "1".to_string(),
                                1 => "t".to_string(),
                                _ => format!("t{i}"),
                            });
                        }
                    }
                    write!(f, "f2k:{}:modulus={}", bf.degree, parts.join("+"))
                }
            }
        }
    }
}

fn parse_modulus(text: &str, degree: u32) -> Option<u32> {
    let mut m: u32 = 0;
    for part in text.split('+') {
        let part = part.trim();
        let e = if part == "1" {
            0
        } else if part == "t" {
            1
        } else {
            let rest = part.strip_prefix('t')?;
            rest.strip_prefix('^').unwrap_or(rest).parse::<u32>().ok()?
        };
        if e > degree {
            return None;
        }
        m ^= 1 << e;
    }
    Some(m)
}

impl FromStr for Field {
    type Err = FieldError;

    /// `q`, `fp:7`, `f2k:4` or `f2k:4:modulus=t4+t+1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FieldError::InvalidSpec(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["q"] | ["Q"] => Ok(Field::Rational),
            ["fp", p] => Field::prime(p.parse().map_err(|_| bad())?),
            ["f2k", k] => Field::binary(k.parse().map_err(|_| bad())?),
            ["f2k", k, m] => {
                let k: u32 = k.parse().map_err(|_| bad())?;
                let text = m.strip_prefix("modulus=").ok_or_else(bad)?;
                let modulus = parse_modulus(text, k).ok_or_else(bad)?;
                BinaryField::with_modulus(k, modulus).map(Field::Binary)
            }
            _ => Err(bad()),
        }
    }
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

fn tonelli_shanks(a: u64, p: u64) -> Option<u64> {
    if a == 0 || p == 2 {
        return Some(a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let mut q = p - 1;
    let mut s = 0;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| pow_mod(z, (p - 1) / 2, p) == p - 1).unwrap();
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r.min(p - r))
}

/// An exact field element in canonical form. Equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Rational(BigRational),
    Prime { value: u64, modulus: u64 },
    Binary { bits: u32, field: BinaryField },
}

impl Scalar {
    pub fn field(&self) -> Field {
        match self {
            Scalar::Rational(_) => Field::Rational,
            Scalar::Prime { modulus, .. } => Field::Prime(*modulus),
            Scalar::Binary { field, .. } => Field::Binary(*field),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(q) => q.is_zero(),
            Scalar::Prime { value, .. } => *value == 0,
            Scalar::Binary { bits, .. } => *bits == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rational(q) => q.is_one(),
            Scalar::Prime { value, .. } => *value == 1,
            Scalar::Binary { bits, .. } => *bits == 1,
        }
    }

    /// True for negative rationals; always false in finite fields.
    pub fn is_negative(&self) -> bool {
        matches!(self, Scalar::Rational(q) if q.is_negative())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(q) => Some(q),
            _ => None,
        }
    }

    fn same_field(&self, other: &Scalar) -> Result<(), FieldError> {
        let (a, b) = (self.field(), other.field());
        if a == b {
            Ok(())
        } else {
            Err(FieldError::Mismatch(a, b))
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar, FieldError> {
        self.same_field(other)?;
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a + b),
            (&Scalar::Prime { value: a, modulus }, &Scalar::Prime { value: b, .. }) => {
                Scalar::Prime { value: ((a as u128 + b as u128) % modulus as u128) as u64, modulus }
            }
            (&Scalar::Binary { bits: a, field }, &Scalar::Binary { bits: b, .. }) => Scalar::Binary { bits: a ^ b, field },
            _ => unreachable!(),
        })
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar, FieldError> {
        self.checked_add(&other.neg_ref())
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar, FieldError> {
        self.same_field(other)?;
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a * b),
            (&Scalar::Prime { value: a, modulus }, &Scalar::Prime { value: b, .. }) => {
                Scalar::Prime { value: mul_mod(a, b, modulus), modulus }
            }
            (&Scalar::Binary { bits: a, field }, &Scalar::Binary { bits: b, .. }) => {
                Scalar::Binary { bits: field.mul(a, b), field }
            }
            _ => unreachable!(),
        })
    }

    pub fn inv(&self) -> Result<Scalar, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(match self {
            Scalar::Rational(q) => Scalar::Rational(q.recip()),
            &Scalar::Prime { value, modulus } => Scalar::Prime { value: pow_mod(value, modulus - 2, modulus), modulus },
            &Scalar::Binary { bits, field } => Scalar::Binary { bits: field.inv(bits).unwrap(), field },
        })
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar, FieldError> {
        self.same_field(other)?;
        self.checked_mul(&other.inv()?)
    }

    fn neg_ref(&self) -> Scalar {
        match self {
            Scalar::Rational(q) => Scalar::Rational(-q),
            &Scalar::Prime { value, modulus } => Scalar::Prime { value: (modulus - value) % modulus, modulus },
            b @ Scalar::Binary { .. } => b.clone(),
        }
    }

    pub fn pow(&self, e: u64) -> Scalar {
        let mut r = self.field().one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                r = &r * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        r
    }

    /// Formats in the field's literal syntax, bare (no parentheses).
    pub fn to_literal(&self) -> String {
        self.to_string()
    }

    /// True when the literal needs parentheses to be used as a factor.
    pub fn is_compound_literal(&self) -> bool {
        match self {
            Scalar::Binary { bits, .. } => bits.count_ones() > 1,
            _ => false,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(q) => {
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Scalar::Prime { value, .. } => write!(f, "{value}"),
            Scalar::Binary { bits, field } => write!(f, "{}", field.format_element(*bits)),
        }
    }
}

// Operator impls panic on a field mismatch; the checked_* methods report it.
impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.checked_add(rhs).expect("scalar field mismatch")
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.checked_sub(rhs).expect("scalar field mismatch")
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.checked_mul(rhs).expect("scalar field mismatch")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_ref()
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_ref()
    }
}

/// A real valuation `| | : K -> R>=0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Trivial,
    Archimedean,
    PAdic(u64),
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Trivial => write!(f, "trivial"),
            Valuation::Archimedean => write!(f, "archimedean"),
            Valuation::PAdic(p) => write!(f, "padic:{p}"),
        }
    }
}

impl FromStr for Valuation {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "trivial" => Ok(Valuation::Trivial),
            "archimedean" | "abs" => Ok(Valuation::Archimedean),
            other => {
                let p = other
                    .strip_prefix("padic:")
                    .and_then(|p| p.parse::<u64>().ok())
                    .filter(|&p| is_prime(p))
                    .ok_or_else(|| FieldError::InvalidSpec(s.to_string()))?;
                Ok(Valuation::PAdic(p))
            }
        }
    }
}

fn multiplicity(n: &BigInt, p: &BigInt) -> i64 {
    let mut n = n.abs();
    let mut m = 0;
    while !n.is_zero() && (&n % p).is_zero() {
        n /= p;
        m += 1;
    }
    m
}

impl Valuation {
    pub fn applies_to(&self, field: &Field) -> bool {
        matches!((self, field), (Valuation::Trivial, _) | (_, Field::Rational))
    }

    /// The value `|a|` as an exact rational. On the rationals the
    /// archimedean value is the absolute value, which is itself rational;
    /// use [`Valuation::eval_f64`] for a display approximation.
    pub fn eval(&self, a: &Scalar) -> Result<BigRational, FieldError> {
        let field = a.field();
        if !self.applies_to(&field) {
            return Err(FieldError::InapplicableValuation(*self, field));
        }
        if a.is_zero() {
            return Ok(BigRational::zero());
        }
        let q = a.as_rational();
        Ok(match self {
            Valuation::Trivial => BigRational::one(),
            Valuation::Archimedean => q.unwrap().abs(),
            Valuation::PAdic(p) => {
                let q = q.unwrap();
                let pb = BigInt::from(*p);
                let m = multiplicity(q.numer(), &pb) - multiplicity(q.denom(), &pb);
                let pm = BigRational::from_integer(pb.pow(m.unsigned_abs() as u32));
                if m >= 0 {
                    pm.recip()
                } else {
                    pm
                }
            }
        })
    }

    pub fn eval_f64(&self, a: &Scalar) -> Result<f64, FieldError> {
        let v = self.eval(a)?;
        Ok(v.to_f64().unwrap_or(f64::NAN))
    }
}
