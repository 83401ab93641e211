//! Exact arithmetic in GF(p^m).
//!
//! Elements are stored as a single code `sum c_i * p^i` over the polynomial
//! coefficients `c_0..c_{m-1}` (constant term in the least significant
//! digit). The context carries the irreducible modulus and, for small
//! fields, dense operation tables.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// An element of GF(p^m), valid only together with its [`FieldCtx`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FieldElem(pub u64);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    pub fn code(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

const TABLE_LIMIT: u64 = 256;

/// Arithmetic context for GF(p^m).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldCtx {
    p: u64,
    m: u32,
    q: u64,
    /// Monic irreducible modulus, ascending coefficients, length m+1.
    modulus: Vec<u64>,
    add_t: Vec<u64>,
    mul_t: Vec<u64>,
    inv_t: Vec<u64>,
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

/// Polynomials over GF(p), ascending coefficient vectors with no trailing zeros.
fn poly_trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn poly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = poly_trim(a.to_vec());
    let db = b.len() - 1;
    let lead_inv = mod_inv(b[db], p);
    while r.len() > db {
        let dr = r.len() - 1;
        let coef = (r[dr] * lead_inv) % p;
        for i in 0..=db {
            let idx = dr - db + i;
            r[idx] = (r[idx] + p - (coef * b[i]) % p) % p;
        }
        r = poly_trim(r);
        if r.is_empty() {
            break;
        }
    }
    r
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // p is prime and a != 0 mod p
    mod_pow(a % p, p - 2, p)
}

fn mod_pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// Decode a polynomial code into base-p digits.
fn decode(code: u64, p: u64, len: u32) -> Vec<u64> {
    let mut c = code;
    (0..len)
        .map(|_| {
            let d = c % p;
            c /= p;
            d
        })
        .collect()
}

fn encode(digits: &[u64], p: u64) -> u64 {
    digits.iter().rev().fold(0, |acc, &d| acc * p + d)
}

fn is_irreducible(modulus: &[u64], p: u64) -> bool {
    let m = modulus.len() - 1;
    if m == 0 || modulus[m] == 0 {
        return false;
    }
    // trial division by every monic polynomial of degree 1..=m/2
    for d in 1..=(m / 2) {
        let count = p.pow(d as u32);
        for code in 0..count {
            let mut cand = decode(code, p, d as u32);
            cand.push(1);
            if poly_rem(modulus, &cand, p).is_empty() {
                return false;
            }
        }
    }
    true
}

impl FieldCtx {
    /// Build GF(p^m). With no modulus given, the lexicographically least
    /// monic irreducible of degree m is chosen, so contexts are
    /// reproducible across runs.
    pub fn new(p: u64, m: u32, modulus: Option<Vec<u64>>) -> Result<FieldCtx> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if m == 0 {
            return Err(Error::DegreeMismatch { want: 1, got: 0 });
        }
        let modulus = match modulus {
            Some(v) => {
                let v = poly_trim(v.iter().map(|c| c % p).collect());
                if v.len() != m as usize + 1 {
                    return Err(Error::DegreeMismatch {
                        want: m,
                        got: v.len().saturating_sub(1) as u32,
                    });
                }
                if m > 1 && !is_irreducible(&v, p) {
                    return Err(Error::ReducibleModulus { p });
                }
                v
            }
            None => Self::least_irreducible(p, m),
        };
        let q = p.checked_pow(m).ok_or_else(|| {
            Error::TooLarge(format!("field order p^m overflows: p={p}, m={m}"))
        })?;
        let mut ctx = FieldCtx {
            p,
            m,
            q,
            modulus,
            add_t: vec![],
            mul_t: vec![],
            inv_t: vec![],
        };
        if q <= TABLE_LIMIT {
            ctx.build_tables();
        }
        Ok(ctx)
    }

    fn least_irreducible(p: u64, m: u32) -> Vec<u64> {
        if m == 1 {
            return vec![0, 1]; // x
        }
        // lex order on (c_{m-1}, .., c_0) equals numeric order of the code
        // with c_{m-1} in the most significant digit
        for k in 0..p.pow(m) {
            let hi_first = decode(k, p, m);
            let mut cand: Vec<u64> = hi_first.into_iter().rev().collect();
            cand.push(1);
            if is_irreducible(&cand, p) {
                return cand;
            }
        }
        unreachable!("an irreducible of every degree exists over GF(p)")
    }

    fn build_tables(&mut self) {
        let q = self.q as usize;
        self.add_t = vec![0; q * q];
        self.mul_t = vec![0; q * q];
        self.inv_t = vec![0; q];
        for a in 0..q as u64 {
            for b in 0..q as u64 {
                self.add_t[a as usize * q + b as usize] =
                    self.add_raw(FieldElem(a), FieldElem(b)).0;
                self.mul_t[a as usize * q + b as usize] =
                    self.mul_raw(FieldElem(a), FieldElem(b)).0;
            }
        }
        for a in 1..q as u64 {
            self.inv_t[a as usize] = self.inv_raw(FieldElem(a)).0;
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn elem(&self, code: u64) -> Result<FieldElem> {
        if code < self.q {
            Ok(FieldElem(code))
        } else {
            Err(Error::TooLarge(format!(
                "element code {code} out of range for GF({})",
                self.q
            )))
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.q).map(FieldElem)
    }

    fn add_raw(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let da = decode(a.0, self.p, self.m);
        let db = decode(b.0, self.p, self.m);
        let sum: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        FieldElem(encode(&sum, self.p))
    }

    fn mul_raw(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let da = decode(a.0, self.p, self.m);
        let db = decode(b.0, self.p, self.m);
        let mut prod = vec![0u64; 2 * self.m as usize];
        for (i, &x) in da.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        let rem = poly_rem(&prod, &self.modulus, self.p);
        let mut digits = vec![0u64; self.m as usize];
        digits[..rem.len()].copy_from_slice(&rem);
        FieldElem(encode(&digits, self.p))
    }

    fn inv_raw(&self, a: FieldElem) -> FieldElem {
        // a^(q-2) in the multiplicative group of order q-1
        let mut acc = FieldElem::ONE;
        let mut base = a;
        let mut e = self.q - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if !self.add_t.is_empty() {
            FieldElem(self.add_t[(a.0 * self.q + b.0) as usize])
        } else {
            self.add_raw(a, b)
        }
    }

    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if !self.mul_t.is_empty() {
            FieldElem(self.mul_t[(a.0 * self.q + b.0) as usize])
        } else {
            self.mul_raw(a, b)
        }
    }

    pub fn neg(&self, a: FieldElem) -> FieldElem {
        let da = decode(a.0, self.p, self.m);
        let n: Vec<u64> = da.iter().map(|&x| (self.p - x) % self.p).collect();
        FieldElem(encode(&n, self.p))
    }

    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if !self.inv_t.is_empty() {
            Ok(FieldElem(self.inv_t[a.0 as usize]))
        } else {
            Ok(self.inv_raw(a))
        }
    }

    /// Serialized form "GF(p^m;c_m,...,c_0)" with modulus coefficients
    /// listed from the leading term down.
    pub fn spec_string(&self) -> String {
        let coeffs: Vec<String> = self.modulus.iter().rev().map(|c| c.to_string()).collect();
        format!("GF({}^{};{})", self.p, self.m, coeffs.join(","))
    }

    pub fn parse_spec(s: &str) -> Result<FieldCtx> {
        let err = |msg: &str| Error::Parse {
            line: 0,
            msg: format!("field spec {s:?}: {msg}"),
        };
        let body = s
            .strip_prefix("GF(")
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| err("expected GF(p^m;coeffs)"))?;
        let (pm, coeffs) = match body.split_once(';') {
            Some((a, b)) => (a, Some(b)),
            None => (body, None),
        };
        let (p, m) = match pm.split_once('^') {
            Some((p, m)) => (
                p.trim().parse::<u64>().map_err(|_| err("bad p"))?,
                m.trim().parse::<u32>().map_err(|_| err("bad m"))?,
            ),
            None => (pm.trim().parse::<u64>().map_err(|_| err("bad p"))?, 1),
        };
        let modulus = match coeffs {
            Some(cs) => {
                let desc: Vec<u64> = cs
                    .split(',')
                    .map(|c| c.trim().parse::<u64>().map_err(|_| err("bad coefficient")))
                    .collect::<Result<_>>()?;
                Some(desc.into_iter().rev().collect())
            }
            None => None,
        };
        FieldCtx::new(p, m, modulus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf2_is_the_prime_field() {
        let f = FieldCtx::new(2, 1, None).unwrap();
        assert_eq!(f.order(), 2);
        assert_eq!(f.modulus(), &[0, 1]);
        assert_eq!(f.add(FieldElem(1), FieldElem(1)), FieldElem(0));
    }

    #[test]
    fn gf4_modulus_is_x2_x_1() {
        // exhaustive over the 4 monic quadratics: x^2+x+1 is the only
        // irreducible one
        let mut irreducible = vec![];
        for c1 in 0..2u64 {
            for c0 in 0..2u64 {
                if is_irreducible(&[c0, c1, 1], 2) {
                    irreducible.push(vec![c0, c1, 1]);
                }
            }
        }
        assert_eq!(irreducible, vec![vec![1, 1, 1]]);
        let f = FieldCtx::new(2, 2, None).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        // x * x = x + 1
        assert_eq!(f.mul(FieldElem(2), FieldElem(2)), FieldElem(3));
    }

    #[test]
    fn four_is_not_prime() {
        assert_eq!(FieldCtx::new(4, 1, None), Err(Error::NotPrime(4)));
    }

    #[test]
    fn gf3_inverse_of_two() {
        let f = FieldCtx::new(3, 1, None).unwrap();
        assert_eq!(f.inv(FieldElem(2)).unwrap(), FieldElem(2));
        assert_eq!(f.inv(FieldElem(0)), Err(Error::DivisionByZero));
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^2 + 1 = (x+1)^2 over GF(2)
        assert_eq!(
            FieldCtx::new(2, 2, Some(vec![1, 0, 1])),
            Err(Error::ReducibleModulus { p: 2 })
        );
    }

    #[test]
    fn field_axioms_exhaustive_small_orders() {
        for (p, m) in [(2, 1), (3, 1), (2, 2), (5, 1), (2, 3), (3, 2), (2, 4)] {
            let f = FieldCtx::new(p, m, None).unwrap();
            let els: Vec<FieldElem> = f.elements().collect();
            for &a in &els {
                assert_eq!(f.add(a, FieldElem::ZERO), a);
                assert_eq!(f.mul(a, FieldElem::ONE), a);
                assert_eq!(f.add(a, f.neg(a)), FieldElem::ZERO);
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElem::ONE);
                }
                for &b in &els {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for &c in &els {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn spec_string_round_trip() {
        for (p, m) in [(2, 1), (3, 1), (2, 2), (2, 3), (3, 2)] {
            let f = FieldCtx::new(p, m, None).unwrap();
            let g = FieldCtx::parse_spec(&f.spec_string()).unwrap();
            assert_eq!(f, g);
        }
        let f = FieldCtx::parse_spec("GF(2^2;1,1,1)").unwrap();
        assert_eq!(f.order(), 4);
    }
}
