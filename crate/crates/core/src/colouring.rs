//! Colourings on the index set S, the principal filter window, and the
//! almost-equality relation it induces.

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::ladder::LadderSystem;
use std::collections::{BTreeMap, BTreeSet};

/// A finite filter over {0..L-1} is principal; it is represented by its
/// generating window I0. A set is "large" iff it contains I0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterD {
    length: usize,
    window: BTreeSet<usize>,
}

impl FilterD {
    pub fn new(length: usize, window: impl IntoIterator<Item = usize>) -> Result<FilterD> {
        let window: BTreeSet<usize> = window.into_iter().collect();
        if window.is_empty() {
            return Err(Error::InfeasibleParams("filter window is empty".into()));
        }
        if let Some(&max) = window.iter().next_back() {
            if max >= length {
                return Err(Error::InfeasibleParams(format!(
                    "window index {max} not below length {length}"
                )));
            }
        }
        Ok(FilterD { length, window })
    }

    /// Default window: the tail {ceil(L/2) .. L-1}, the finite image of
    /// the cofinite filter.
    pub fn tail(length: usize) -> Result<FilterD> {
        let start = ((length + 1) / 2).min(length.saturating_sub(1));
        FilterD::new(length, start..length)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn window(&self) -> impl Iterator<Item = usize> + '_ {
        self.window.iter().copied()
    }

    pub fn window_size(&self) -> usize {
        self.window.len()
    }

    pub fn in_window(&self, n: usize) -> bool {
        self.window.contains(&n)
    }

    /// s and t agree on a D-large set, i.e. on all of I0.
    pub fn almost_equal(&self, s: &[FieldElem], t: &[FieldElem]) -> Result<bool> {
        if s.len() != t.len() {
            return Err(Error::LengthMismatch(s.len(), t.len()));
        }
        if s.len() != self.length {
            return Err(Error::LengthMismatch(s.len(), self.length));
        }
        Ok(self.window.iter().all(|&n| s[n] == t[n]))
    }
}

/// An F-colouring on S: one length-L value tuple per delta.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Colouring {
    length: usize,
    values: BTreeMap<u32, Vec<FieldElem>>,
}

impl Colouring {
    pub fn new(
        length: usize,
        values: impl IntoIterator<Item = (u32, Vec<FieldElem>)>,
    ) -> Result<Colouring> {
        let values: BTreeMap<u32, Vec<FieldElem>> = values.into_iter().collect();
        for v in values.values() {
            if v.len() != length {
                return Err(Error::LengthMismatch(v.len(), length));
            }
        }
        Ok(Colouring { length, values })
    }

    pub fn zero(length: usize, s: &[u32]) -> Colouring {
        Colouring {
            length,
            values: s
                .iter()
                .map(|&d| (d, vec![FieldElem::ZERO; length]))
                .collect(),
        }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn s(&self) -> impl Iterator<Item = u32> + '_ {
        self.values.keys().copied()
    }

    pub fn value(&self, delta: u32) -> Option<&[FieldElem]> {
        self.values.get(&delta).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[FieldElem])> + '_ {
        self.values.iter().map(|(&d, v)| (d, v.as_slice()))
    }

    pub fn same_shape(&self, other: &Colouring) -> bool {
        self.length == other.length
            && self.values.keys().eq(other.values.keys())
    }

    pub fn matches(&self, sys: &LadderSystem) -> bool {
        self.length == sys.length() && self.s().eq(sys.s().iter().copied())
    }

    /// Componentwise e0*a + e1*b.
    pub fn combine(
        ctx: &FieldCtx,
        e0: FieldElem,
        a: &Colouring,
        e1: FieldElem,
        b: &Colouring,
    ) -> Result<Colouring> {
        if !a.same_shape(b) {
            return Err(Error::ShapeMismatch);
        }
        let values = a
            .values
            .iter()
            .map(|(&d, va)| {
                let vb = &b.values[&d];
                let v = va
                    .iter()
                    .zip(vb)
                    .map(|(&x, &y)| ctx.add(ctx.mul(e0, x), ctx.mul(e1, y)))
                    .collect();
                (d, v)
            })
            .collect();
        Ok(Colouring {
            length: a.length,
            values,
        })
    }

    /// a - b.
    pub fn difference(ctx: &FieldCtx, a: &Colouring, b: &Colouring) -> Result<Colouring> {
        let neg_one = ctx.neg(FieldElem::ONE);
        Colouring::combine(ctx, FieldElem::ONE, a, neg_one, b)
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().all(|v| v.iter().all(|e| e.is_zero()))
    }

    /// Dense code over the coordinates (delta, n) in order; digit base q.
    pub fn dense_code(&self, ctx: &FieldCtx) -> u64 {
        let q = ctx.order();
        let mut acc = 0u64;
        for (_, v) in self.values.iter().rev() {
            for &e in v.iter().rev() {
                acc = acc * q + e.code();
            }
        }
        acc
    }

    pub fn from_dense_code(ctx: &FieldCtx, length: usize, s: &[u32], mut code: u64) -> Colouring {
        let q = ctx.order();
        let mut values = BTreeMap::new();
        for &d in s {
            let v: Vec<FieldElem> = (0..length)
                .map(|_| {
                    let c = code % q;
                    code /= q;
                    FieldElem(c)
                })
                .collect();
            values.insert(d, v);
        }
        Colouring { length, values }
    }
}

/// The colouring f(z): delta maps to the evaluations of f on the ladder
/// steps of delta.
pub fn apply_uniformizer(
    ctx: &FieldCtx,
    f: &[FieldElem],
    sys: &LadderSystem,
) -> Result<Colouring> {
    if f.len() as u32 != sys.horizon() {
        return Err(Error::HorizonMismatch(f.len() as u32, sys.horizon()));
    }
    let mut values = BTreeMap::new();
    for &delta in sys.s() {
        let steps = sys.ladder(delta).expect("delta in S");
        let v: Vec<FieldElem> = steps
            .iter()
            .map(|y| y.evaluate(ctx, f))
            .collect::<Result<_>>()?;
        values.insert(delta, v);
    }
    Ok(Colouring {
        length: sys.length(),
        values,
    })
}

/// a and b are equivalent iff a - b is a uniform colouring.
pub fn is_equivalent(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    a: &Colouring,
    b: &Colouring,
) -> Result<bool> {
    if !a.matches(sys) || !b.matches(sys) {
        return Err(Error::ShapeMismatch);
    }
    let diff = Colouring::difference(ctx, a, b)?;
    Ok(crate::uniformize::global_uniformize(ctx, sys, filter, &diff)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf2() -> FieldCtx {
        FieldCtx::new(2, 1, None).unwrap()
    }

    #[test]
    fn almost_equal_examples() {
        let d = FilterD::new(2, [1]).unwrap();
        let s = vec![FieldElem(0), FieldElem(1)];
        let t = vec![FieldElem(1), FieldElem(1)];
        assert!(d.almost_equal(&s, &s).unwrap());
        assert!(d.almost_equal(&s, &t).unwrap());
        let full = FilterD::new(2, [0, 1]).unwrap();
        assert!(!full.almost_equal(&s, &t).unwrap());
    }

    #[test]
    fn almost_equal_is_an_equivalence() {
        let ctx = gf2();
        let d = FilterD::new(3, [1, 2]).unwrap();
        let q = ctx.order();
        let tuples: Vec<Vec<FieldElem>> = (0..q.pow(3))
            .map(|mut c| {
                (0..3)
                    .map(|_| {
                        let e = FieldElem(c % q);
                        c /= q;
                        e
                    })
                    .collect()
            })
            .collect();
        for s in &tuples {
            assert!(d.almost_equal(s, s).unwrap());
            for t in &tuples {
                assert_eq!(d.almost_equal(s, t).unwrap(), d.almost_equal(t, s).unwrap());
                for u in &tuples {
                    if d.almost_equal(s, t).unwrap() && d.almost_equal(t, u).unwrap() {
                        assert!(d.almost_equal(s, u).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn combine_examples() {
        let ctx = gf2();
        let a = Colouring::new(2, [(3, vec![FieldElem(1), FieldElem(0)])]).unwrap();
        let b = Colouring::new(2, [(3, vec![FieldElem(0), FieldElem(1)])]).unwrap();
        let z = Colouring::combine(&ctx, FieldElem(1), &a, ctx.neg(FieldElem(1)), &a).unwrap();
        assert!(z.is_zero());
        let s = Colouring::combine(&ctx, FieldElem(1), &a, FieldElem(1), &b).unwrap();
        assert_eq!(s.value(3).unwrap(), &[FieldElem(1), FieldElem(1)]);

        let f3 = FieldCtx::new(3, 1, None).unwrap();
        let c = Colouring::new(1, [(3, vec![FieldElem(2)])]).unwrap();
        let zero = Colouring::zero(1, &[3]);
        let scaled = Colouring::combine(&f3, FieldElem(2), &c, FieldElem(0), &zero).unwrap();
        assert_eq!(scaled.value(3).unwrap(), &[FieldElem(1)]);
    }

    #[test]
    fn tail_window_default() {
        let d = FilterD::tail(4).unwrap();
        assert_eq!(d.window().collect::<Vec<_>>(), vec![2, 3]);
        let d = FilterD::tail(1).unwrap();
        assert_eq!(d.window().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn empty_window_rejected() {
        assert!(FilterD::new(3, []).is_err());
        assert!(FilterD::new(2, [2]).is_err());
    }

    #[test]
    fn dense_code_round_trip() {
        let ctx = FieldCtx::new(3, 1, None).unwrap();
        let s = [3u32, 5];
        for code in 0..81 {
            let c = Colouring::from_dense_code(&ctx, 2, &s, code);
            assert_eq!(c.dense_code(&ctx), code);
        }
    }
}
