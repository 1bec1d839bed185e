//! Arithmetic over GF(p) for primes p <= 257 and GF(2^m) for 1 <= m <= 8.
//!
//! Elements are canonical integers in `0..q`. Multiplication and inversion go
//! through log/antilog tables built once per [`Field`]; for characteristic 2 the
//! tables are derived from a carryless multiply reduced by the field polynomial,
//! and [`clmul_reduce`] stays available as the reference path.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// A field element. Always `< q` for the field it belongs to.
pub type Elem = u16;

/// Largest prime order accepted.
pub const MAX_PRIME: u32 = 257;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("unsupported field order {0}: expected a prime <= 257 or 2^m with m <= 8")]
    UnsupportedOrder(u32),
    #[error("reduction polynomial {poly:#x} is not irreducible of degree {degree}")]
    ReduciblePoly { poly: u32, degree: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("cannot parse field spec {0:?}")]
    Parse(String),
}

/// Default irreducible polynomials for GF(2^m), indexed by m.
const DEFAULT_POLY: [u32; 9] = [0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11D];

#[derive(Debug)]
struct Tables {
    exp: Vec<Elem>,
    log: Vec<u16>,
}

/// A finite field GF(q). Cheap to clone; the tables are shared.
#[derive(Clone)]
pub struct Field {
    q: u32,
    p: u32,
    m: u32,
    poly: u32,
    tables: Arc<Tables>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)?;
        if self.m > 1 {
            write!(f, "[poly={:#x}]", self.poly)?;
        }
        Ok(())
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={}", self.q)?;
        if self.m > 1 && self.poly != DEFAULT_POLY[self.m as usize] {
            write!(f, ",poly={:#x}", self.poly)?;
        }
        Ok(())
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.poly == other.poly
    }
}

impl Eq for Field {}

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn degree(poly: u32) -> u32 {
    31 - poly.leading_zeros()
}

/// Remainder of `a` modulo `b` as polynomials over GF(2).
fn poly_mod(mut a: u32, b: u32) -> u32 {
    let db = degree(b);
    while a != 0 && degree(a) >= db {
        a ^= b << (degree(a) - db);
    }
    a
}

/// Exhaustive irreducibility test: no polynomial of degree 1..=m/2 divides `poly`.
pub fn is_irreducible_gf2(poly: u32) -> bool {
    if poly < 2 {
        return false;
    }
    let m = degree(poly);
    if m == 1 {
        return true;
    }
    for d in 1..=m / 2 {
        for cand in (1u32 << d)..(1u32 << (d + 1)) {
            if poly_mod(poly, cand) == 0 {
                return false;
            }
        }
    }
    true
}

/// Carryless product of `a` and `b` reduced modulo `poly` (degree `m`).
pub fn clmul_reduce(a: u32, b: u32, poly: u32) -> u32 {
    let mut prod = 0u32;
    for i in 0..16 {
        if (b >> i) & 1 == 1 {
            prod ^= a << i;
        }
    }
    poly_mod(prod, poly)
}

impl Field {
    /// Builds GF(q) using the default reduction polynomial when q = 2^m, m > 1.
    pub fn new(q: u32) -> Result<Self, FieldError> {
        if q >= 2 && q.is_power_of_two() && q <= 256 {
            let m = q.trailing_zeros();
            Self::with_poly(q, DEFAULT_POLY[m as usize])
        } else {
            Self::with_poly(q, 0)
        }
    }

    /// Builds GF(q) with an explicit reduction polynomial (ignored for prime q).
    pub fn with_poly(q: u32, poly: u32) -> Result<Self, FieldError> {
        if q >= 2 && q.is_power_of_two() && q <= 256 {
            let m = q.trailing_zeros();
            let poly = if m == 1 { 0x3 } else { poly };
            if degree(poly) != m || !is_irreducible_gf2(poly) {
                return Err(FieldError::ReduciblePoly { poly, degree: m });
            }
            Ok(Self::build(q, 2, m, poly))
        } else if is_prime(q) && q <= MAX_PRIME {
            Ok(Self::build(q, q, 1, 0))
        } else {
            Err(FieldError::UnsupportedOrder(q))
        }
    }

    fn build(q: u32, p: u32, m: u32, poly: u32) -> Self {
        let raw_mul = |a: u32, b: u32| -> u32 {
            if p == 2 {
                clmul_reduce(a, b, poly)
            } else {
                a * b % p
            }
        };
        // smallest generator of the multiplicative group
        let order = q - 1;
        let mut exp = vec![0 as Elem; 2 * order as usize];
        let mut log = vec![0u16; q as usize];
        for g in 1..q.max(2) {
            let mut x = 1u32;
            let mut ok = true;
            for i in 0..order {
                exp[i as usize] = x as Elem;
                if i > 0 && x == 1 {
                    ok = false;
                    break;
                }
                x = raw_mul(x, g);
            }
            if ok {
                break;
            }
        }
        for i in 0..order as usize {
            exp[i + order as usize] = exp[i];
            log[exp[i] as usize] = i as u16;
        }
        Field {
            q,
            p,
            m,
            poly,
            tables: Arc::new(Tables { exp, log }),
        }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Reduction polynomial bitmask; zero for prime fields.
    pub fn poly(&self) -> u32 {
        if self.m > 1 {
            self.poly
        } else {
            0
        }
    }

    pub fn is_binary_char(&self) -> bool {
        self.p == 2
    }

    pub fn contains(&self, a: Elem) -> bool {
        u32::from(a) < self.q
    }

    /// All elements in integer order.
    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.q as Elem
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.p == 2 {
            a ^ b
        } else {
            let s = u32::from(a) + u32::from(b);
            (if s >= self.p { s - self.p } else { s }) as Elem
        }
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        if self.p == 2 || a == 0 {
            a
        } else {
            (self.p - u32::from(a)) as Elem
        }
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = &self.tables;
        t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
    }

    pub fn inv(&self, a: Elem) -> Result<Elem, FieldError> {
        if a == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let t = &self.tables;
        let order = (self.q - 1) as usize;
        Ok(t.exp[(order - t.log[a as usize] as usize) % order])
    }

    /// `a / b`; panics on `b == 0`.
    #[inline]
    pub fn div(&self, a: Elem, b: Elem) -> Elem {
        self.mul(a, self.inv(b).expect("division by zero"))
    }

    /// Reference multiply that bypasses the tables.
    pub fn mul_reference(&self, a: Elem, b: Elem) -> Elem {
        if self.p == 2 {
            clmul_reduce(u32::from(a), u32::from(b), if self.m == 1 { 0x3 } else { self.poly }) as Elem
        } else {
            (u32::from(a) * u32::from(b) % self.p) as Elem
        }
    }

    /// Dot product of two equal-length slices.
    pub fn dot(&self, a: &[Elem], b: &[Elem]) -> Elem {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = 0;
        let mut n = 0u64;
        for (&x, &y) in a.iter().zip(b) {
            if x != 0 && y != 0 {
                acc = self.add(acc, self.mul(x, y));
                n += 1;
            }
        }
        crate::ops::record(n, n);
        acc
    }

    /// `dst += c * src`, counting one multiply and add per nonzero source entry.
    pub fn axpy(&self, dst: &mut [Elem], c: Elem, src: &[Elem]) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        let mut n = 0u64;
        if c == 1 {
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d = self.add(*d, s);
                    n += 1;
                }
            }
            crate::ops::record(0, n);
        } else {
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d = self.add(*d, self.mul(c, s));
                    n += 1;
                }
            }
            crate::ops::record(n, n);
        }
    }

    /// `dst += c * src` charged as a dense kernel: one multiply and add per entry.
    pub fn axpy_dense(&self, dst: &mut [Elem], c: Elem, src: &[Elem]) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = self.add(*d, self.mul(c, s));
        }
        let n = dst.len() as u64;
        crate::ops::record(n, n);
    }

    /// `v *= c` in place.
    pub fn scale(&self, v: &mut [Elem], c: Elem) {
        if c == 1 {
            return;
        }
        let mut n = 0u64;
        for x in v.iter_mut() {
            if *x != 0 {
                *x = self.mul(*x, c);
                n += 1;
            }
        }
        crate::ops::record(n, 0);
    }
}

impl FromStr for Field {
    type Err = FieldError;

    /// Parses `q=<int>[,poly=<hex>]` or a bare order.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FieldError::Parse(s.to_string());
        let mut q = None;
        let mut poly = None;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some(v) = part.strip_prefix("q=") {
                q = Some(v.parse::<u32>().map_err(|_| bad())?);
            } else if let Some(v) = part.strip_prefix("poly=") {
                poly = Some(parse_hex(v).ok_or_else(bad)?);
            } else if q.is_none() {
                q = Some(part.parse::<u32>().map_err(|_| bad())?);
            } else {
                return Err(bad());
            }
        }
        let q = q.ok_or_else(bad)?;
        match poly {
            Some(p) => Field::with_poly(q, p),
            None => Field::new(q),
        }
    }
}

/// Parses `0x1d`, `1d` or `0X1D`.
pub fn parse_hex(s: &str) -> Option<u32> {
    let t = s.trim();
    let t = t
        .strip_prefix("0x")
        .or_else(|| t.strip_prefix("0X"))
        .unwrap_or(t);
    u32::from_str_radix(t, 16).ok()
}
