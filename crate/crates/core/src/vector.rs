//! Finitely supported vectors in the free module over GF(q) with
//! generators `g_0 .. g_{horizon-1}`.

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use std::collections::BTreeMap;

pub const MAX_HORIZON: u32 = 1 << 16;

/// Sparse vector: only nonzero coefficients are stored, keys below the
/// horizon.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SparseVec {
    horizon: u32,
    entries: BTreeMap<u32, FieldElem>,
}

impl SparseVec {
    pub fn zero(horizon: u32) -> SparseVec {
        SparseVec {
            horizon,
            entries: BTreeMap::new(),
        }
    }

    pub fn generator(horizon: u32, xi: u32) -> Result<SparseVec> {
        Self::from_entries(horizon, [(xi, FieldElem::ONE)])
    }

    pub fn from_entries(
        horizon: u32,
        entries: impl IntoIterator<Item = (u32, FieldElem)>,
    ) -> Result<SparseVec> {
        if horizon > MAX_HORIZON {
            return Err(Error::TooLarge(format!(
                "horizon {horizon} exceeds cap {MAX_HORIZON}"
            )));
        }
        let mut map = BTreeMap::new();
        for (xi, e) in entries {
            if xi >= horizon {
                return Err(Error::HorizonMismatch(xi, horizon));
            }
            if !e.is_zero() {
                map.insert(xi, e);
            }
        }
        Ok(SparseVec {
            horizon,
            entries: map,
        })
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn coeff(&self, xi: u32) -> FieldElem {
        self.entries.get(&xi).copied().unwrap_or(FieldElem::ZERO)
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.keys().copied()
    }

    pub fn min_support(&self) -> Option<u32> {
        self.entries.keys().next().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, FieldElem)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Sum e_xi * f(xi) over the support.
    pub fn evaluate(&self, ctx: &FieldCtx, f: &[FieldElem]) -> Result<FieldElem> {
        if (f.len() as u32) < self.horizon {
            return Err(Error::HorizonMismatch(self.horizon, f.len() as u32));
        }
        let mut acc = FieldElem::ZERO;
        for (xi, e) in self.iter() {
            acc = ctx.add(acc, ctx.mul(e, f[xi as usize]));
        }
        Ok(acc)
    }

    /// e0*y0 + e1*y1 with zero coefficients dropped.
    pub fn combine(
        ctx: &FieldCtx,
        e0: FieldElem,
        y0: &SparseVec,
        e1: FieldElem,
        y1: &SparseVec,
    ) -> Result<SparseVec> {
        if y0.horizon != y1.horizon {
            return Err(Error::HorizonMismatch(y0.horizon, y1.horizon));
        }
        let mut map = BTreeMap::new();
        for (xi, e) in y0.iter() {
            let v = ctx.mul(e0, e);
            if !v.is_zero() {
                map.insert(xi, v);
            }
        }
        for (xi, e) in y1.iter() {
            let v = ctx.add(
                map.get(&xi).copied().unwrap_or(FieldElem::ZERO),
                ctx.mul(e1, e),
            );
            if v.is_zero() {
                map.remove(&xi);
            } else {
                map.insert(xi, v);
            }
        }
        Ok(SparseVec {
            horizon: y0.horizon,
            entries: map,
        })
    }

    pub fn scale(&self, ctx: &FieldCtx, e: FieldElem) -> SparseVec {
        let mut map = BTreeMap::new();
        for (xi, c) in self.iter() {
            let v = ctx.mul(e, c);
            if !v.is_zero() {
                map.insert(xi, v);
            }
        }
        SparseVec {
            horizon: self.horizon,
            entries: map,
        }
    }

    /// Dense code: digit xi of the base-q expansion is the coefficient
    /// code of g_xi. Only usable when q^horizon fits in u64.
    pub fn dense_code(&self, ctx: &FieldCtx) -> u64 {
        let q = ctx.order();
        let mut acc = 0u64;
        for xi in (0..self.horizon).rev() {
            acc = acc * q + self.coeff(xi).code();
        }
        acc
    }

    pub fn from_dense_code(ctx: &FieldCtx, horizon: u32, mut code: u64) -> SparseVec {
        let q = ctx.order();
        let mut map = BTreeMap::new();
        for xi in 0..horizon {
            let c = code % q;
            code /= q;
            if c != 0 {
                map.insert(xi, FieldElem(c));
            }
        }
        SparseVec {
            horizon,
            entries: map,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(p: u64, m: u32) -> FieldCtx {
        FieldCtx::new(p, m, None).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let f2 = gf(2, 1);
        let y = SparseVec::from_entries(3, [(0, FieldElem(1)), (1, FieldElem(1))]).unwrap();
        // zero function
        assert_eq!(
            y.evaluate(&f2, &[FieldElem::ZERO; 3]).unwrap(),
            FieldElem::ZERO
        );
        // indicator of {1}
        let ind = [FieldElem(0), FieldElem(1), FieldElem(0)];
        assert_eq!(y.evaluate(&f2, &ind).unwrap(), FieldElem(1));

        let f3 = gf(3, 1);
        let y = SparseVec::from_entries(4, [(2, FieldElem(2))]).unwrap();
        let f = [FieldElem(0), FieldElem(0), FieldElem(2), FieldElem(0)];
        assert_eq!(y.evaluate(&f3, &f).unwrap(), FieldElem(1));
    }

    #[test]
    fn combine_examples() {
        let f2 = gf(2, 1);
        let g0 = SparseVec::generator(4, 0).unwrap();
        let g1 = SparseVec::generator(4, 1).unwrap();
        let z = SparseVec::combine(&f2, FieldElem(1), &g0, FieldElem(1), &g0).unwrap();
        assert!(z.is_zero());
        let s = SparseVec::combine(&f2, FieldElem(1), &g0, FieldElem(1), &g1).unwrap();
        assert_eq!(s.support().collect::<Vec<_>>(), vec![0, 1]);

        let f3 = gf(3, 1);
        let y0 = SparseVec::from_entries(4, [(0, FieldElem(1)), (1, FieldElem(1))]).unwrap();
        let y1 = SparseVec::generator(4, 1).unwrap();
        let z = SparseVec::combine(&f3, FieldElem(2), &y0, FieldElem(1), &y1).unwrap();
        assert_eq!(z.coeff(0), FieldElem(2));
        assert_eq!(z.coeff(1), FieldElem::ZERO);
        assert_eq!(z.support().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn horizon_mismatch_rejected() {
        let f2 = gf(2, 1);
        let a = SparseVec::generator(3, 0).unwrap();
        let b = SparseVec::generator(4, 0).unwrap();
        assert!(SparseVec::combine(&f2, FieldElem(1), &a, FieldElem(1), &b).is_err());
        assert!(a.evaluate(&f2, &[FieldElem::ZERO; 2]).is_err());
    }

    proptest! {
        #[test]
        fn evaluate_is_linear(
            p in prop::sample::select(vec![2u64, 3, 5]),
            ycode0 in 0u64..81,
            ycode1 in 0u64..81,
            fcode in 0u64..625,
            e0 in 0u64..5,
            e1 in 0u64..5,
        ) {
            let ctx = gf(p, 1);
            let lam = 4u32;
            let q = ctx.order();
            let y0 = SparseVec::from_dense_code(&ctx, lam, ycode0 % q.pow(lam));
            let y1 = SparseVec::from_dense_code(&ctx, lam, ycode1 % q.pow(lam));
            let f: Vec<FieldElem> = {
                let mut c = fcode;
                (0..lam).map(|_| { let d = c % q; c /= q; FieldElem(d) }).collect()
            };
            let e0 = FieldElem(e0 % q);
            let e1 = FieldElem(e1 % q);
            let lhs = SparseVec::combine(&ctx, e0, &y0, e1, &y1).unwrap()
                .evaluate(&ctx, &f).unwrap();
            let rhs = ctx.add(
                ctx.mul(e0, y0.evaluate(&ctx, &f).unwrap()),
                ctx.mul(e1, y1.evaluate(&ctx, &f).unwrap()),
            );
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn combine_support_is_contained_in_union(
            ycode0 in 0u64..256,
            ycode1 in 0u64..256,
            e0 in 0u64..2,
            e1 in 0u64..2,
        ) {
            let ctx = gf(2, 1);
            let y0 = SparseVec::from_dense_code(&ctx, 8, ycode0);
            let y1 = SparseVec::from_dense_code(&ctx, 8, ycode1);
            let z = SparseVec::combine(&ctx, FieldElem(e0), &y0, FieldElem(e1), &y1).unwrap();
            for xi in z.support() {
                prop_assert!(y0.coeff(xi) != FieldElem::ZERO || y1.coeff(xi) != FieldElem::ZERO);
            }
            for (_, c) in z.iter() {
                prop_assert!(!c.is_zero());
            }
        }
    }
}
