//! Constructive uniformization: the per-delta triangular solve, prefix
//! extension, global uniformization and initial-segment patching.

use crate::colouring::{Colouring, FilterD};
use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::ladder::LadderSystem;
use crate::vector::SparseVec;
use std::collections::{BTreeMap, BTreeSet};

/// A function defined exactly on the initial segment [0, mu) of the
/// horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialUniformizer {
    horizon: u32,
    values: Vec<FieldElem>,
}

impl PartialUniformizer {
    pub fn empty(horizon: u32) -> PartialUniformizer {
        PartialUniformizer {
            horizon,
            values: vec![],
        }
    }

    pub fn new(horizon: u32, values: Vec<FieldElem>) -> Result<PartialUniformizer> {
        if values.len() as u32 > horizon {
            return Err(Error::HorizonMismatch(values.len() as u32, horizon));
        }
        Ok(PartialUniformizer { horizon, values })
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn mu(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn values(&self) -> &[FieldElem] {
        &self.values
    }

    pub fn get(&self, xi: u32) -> Option<FieldElem> {
        self.values.get(xi as usize).copied()
    }

    /// Evaluate on a vector whose support lies inside the domain.
    pub fn eval(&self, ctx: &FieldCtx, y: &SparseVec) -> Result<FieldElem> {
        let mut acc = FieldElem::ZERO;
        for (xi, e) in y.iter() {
            let v = self
                .get(xi)
                .ok_or(Error::HorizonMismatch(xi, self.mu()))?;
            acc = ctx.add(acc, ctx.mul(e, v));
        }
        Ok(acc)
    }

    /// Zero-filled total function on [0, horizon).
    pub fn to_total(&self) -> Vec<FieldElem> {
        let mut out = self.values.clone();
        out.resize(self.horizon as usize, FieldElem::ZERO);
        out
    }

    /// Prefix test: other agrees with self on the whole domain of self.
    pub fn extends(&self, prefix: &PartialUniformizer) -> bool {
        self.mu() >= prefix.mu() && self.values[..prefix.values.len()] == prefix.values[..]
    }
}

/// Solve g(y_n) = target(n) for all steps of one ladder, by induction on
/// n: every step contributes a fresh support coordinate, every other
/// still-unset coordinate is filled with 0, and the fresh coordinate is
/// solved for.
pub fn solve_ladder_equations(
    ctx: &FieldCtx,
    ladder: &[SparseVec],
    target: &[FieldElem],
) -> Result<BTreeMap<u32, FieldElem>> {
    if ladder.len() != target.len() {
        return Err(Error::LengthMismatch(ladder.len(), target.len()));
    }
    let mut g: BTreeMap<u32, FieldElem> = BTreeMap::new();
    let mut covered: BTreeSet<u32> = BTreeSet::new();
    for (n, y) in ladder.iter().enumerate() {
        let fresh = y
            .support()
            .find(|xi| !covered.contains(xi))
            .ok_or(Error::NoFreshCoordinate {
                delta: 0,
                step: n,
            })?;
        for xi in y.support() {
            if xi != fresh {
                g.entry(xi).or_insert(FieldElem::ZERO);
            }
        }
        let mut rest = FieldElem::ZERO;
        for (xi, e) in y.iter() {
            if xi != fresh {
                rest = ctx.add(rest, ctx.mul(e, g[&xi]));
            }
        }
        let coeff = y.coeff(fresh);
        let val = ctx.mul(ctx.inv(coeff)?, ctx.sub(target[n], rest));
        g.insert(fresh, val);
        covered.extend(y.support());
    }
    Ok(g)
}

/// Window agreement of a total (or zero-filled) f with the colouring at
/// one delta.
fn window_agrees(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    a: &Colouring,
    f: &[FieldElem],
    delta: u32,
) -> Result<bool> {
    let steps = sys.ladder(delta).expect("delta in S");
    let target = a.value(delta).expect("delta in S");
    for n in filter.window() {
        if steps[n].evaluate(ctx, f)? != target[n] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Extend a prefix uniformizer to a larger initial segment, processing
/// each newly covered delta in increasing order: solve its equation
/// system, let already-set coordinates win, fill the rest with 0.
pub fn extend_uniformizer(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    a: &Colouring,
    f0: &PartialUniformizer,
    mu1: u32,
) -> Result<PartialUniformizer> {
    if !a.matches(sys) {
        return Err(Error::ShapeMismatch);
    }
    let mu0 = f0.mu();
    if mu1 < mu0 || mu1 > sys.horizon() {
        return Err(Error::HorizonMismatch(mu1, sys.horizon()));
    }
    // verified precondition: f0 uniformizes Res(a)(mu0+1)
    let f0_total = f0.to_total();
    for &delta in sys.s() {
        if delta <= mu0 && !window_agrees(ctx, sys, filter, a, &f0_total, delta)? {
            return Err(Error::NotAUniformizer { delta });
        }
    }

    let mut vals: Vec<Option<FieldElem>> = f0.values().iter().map(|&e| Some(e)).collect();
    vals.resize(mu1 as usize, None);
    for &delta in sys.s() {
        if delta <= mu0 || delta > mu1 {
            continue;
        }
        let g = solve_ladder_equations(ctx, sys.ladder(delta).unwrap(), a.value(delta).unwrap())
            .map_err(|e| match e {
                Error::NoFreshCoordinate { step, .. } => Error::NoFreshCoordinate { delta, step },
                other => other,
            })?;
        for (xi, v) in g {
            let slot = &mut vals[xi as usize];
            if slot.is_none() {
                *slot = Some(v);
            }
        }
    }
    let f1 = PartialUniformizer::new(
        sys.horizon(),
        vals.into_iter().map(|v| v.unwrap_or(FieldElem::ZERO)).collect(),
    )?;
    // the merge may have broken a window constraint when ladders overlap
    let f1_total = f1.to_total();
    for &delta in sys.s() {
        if delta <= mu1 && !window_agrees(ctx, sys, filter, a, &f1_total, delta)? {
            return Err(Error::ExtensionFailed { delta });
        }
    }
    Ok(f1)
}

/// Find a total uniformizer for the colouring, or decide that none
/// exists. The sequential extension is tried first; when it fails the
/// exact linear decision takes over.
pub fn global_uniformize(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    a: &Colouring,
) -> Result<Option<PartialUniformizer>> {
    if !a.matches(sys) {
        return Err(Error::ShapeMismatch);
    }
    let empty = PartialUniformizer::empty(sys.horizon());
    match extend_uniformizer(ctx, sys, filter, a, &empty, sys.horizon()) {
        Ok(f) => Ok(Some(f)),
        Err(Error::ExtensionFailed { .. }) => {
            match crate::quotient::unifset_membership(ctx, sys, filter, a)? {
                Some(f) => Ok(Some(PartialUniformizer::new(sys.horizon(), f)?)),
                None => Ok(None),
            }
        }
        Err(e) => Err(e),
    }
}

/// Glue a prefix fix below mu onto a function g that already works above
/// mu. Returns the patched total uniformizer, or None when no prefix fix
/// exists.
pub fn patch_initial(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    a: &Colouring,
    g: &[FieldElem],
    mu: u32,
) -> Result<Option<PartialUniformizer>> {
    if !a.matches(sys) {
        return Err(Error::ShapeMismatch);
    }
    if g.len() as u32 != sys.horizon() {
        return Err(Error::HorizonMismatch(g.len() as u32, sys.horizon()));
    }
    // verified precondition: g works on every delta from mu on
    for &delta in sys.s() {
        if delta >= mu && !window_agrees(ctx, sys, filter, a, g, delta)? {
            return Err(Error::PatchFailed { delta });
        }
    }
    let empty = PartialUniformizer::empty(sys.horizon());
    let f = match extend_uniformizer(ctx, sys, filter, a, &empty, mu) {
        Ok(f) => f,
        Err(Error::ExtensionFailed { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut h = f.values().to_vec();
    h.extend_from_slice(&g[mu as usize..]);
    for &delta in sys.s() {
        if !window_agrees(ctx, sys, filter, a, &h, delta)? {
            return Err(Error::PatchFailed { delta });
        }
    }
    Ok(Some(PartialUniformizer::new(sys.horizon(), h)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::{generate, GenParams, Regime};

    fn gf2() -> FieldCtx {
        FieldCtx::new(2, 1, None).unwrap()
    }

    fn vecs(horizon: u32, entries: &[&[(u32, u64)]]) -> Vec<SparseVec> {
        entries
            .iter()
            .map(|es| {
                SparseVec::from_entries(horizon, es.iter().map(|&(xi, c)| (xi, FieldElem(c))))
                    .unwrap()
            })
            .collect()
    }

    /// The shared-step instance with both ladders equal to <g1>.
    fn paper_q(_ctx: &FieldCtx) -> (LadderSystem, FilterD) {
        let sys = LadderSystem::new(
            5,
            1,
            [(3, vecs(5, &[&[(1, 1)]])), (4, vecs(5, &[&[(1, 1)]]))],
        )
        .unwrap();
        (sys, FilterD::new(1, [0]).unwrap())
    }

    fn separated(ctx: &FieldCtx) -> (LadderSystem, FilterD) {
        let _ = ctx;
        let sys = LadderSystem::new(
            6,
            2,
            [
                (3, vecs(6, &[&[(0, 1)], &[(1, 1), (2, 1)]])),
                (5, vecs(6, &[&[(1, 1)], &[(4, 1)]])),
            ],
        )
        .unwrap();
        (sys, FilterD::new(2, [1]).unwrap())
    }

    #[test]
    fn solve_examples() {
        let ctx = gf2();
        let ladder = vecs(4, &[&[(0, 1), (1, 1)], &[(1, 1), (2, 1)]]);
        let g = solve_ladder_equations(&ctx, &ladder, &[FieldElem(1), FieldElem(0)]).unwrap();
        assert_eq!(g[&0], FieldElem(1));
        assert_eq!(g[&1], FieldElem(0));
        assert_eq!(g[&2], FieldElem(0));
        // g satisfies both equations
        for (y, want) in ladder.iter().zip([FieldElem(1), FieldElem(0)]) {
            let mut acc = FieldElem::ZERO;
            for (xi, e) in y.iter() {
                acc = ctx.add(acc, ctx.mul(e, g[&xi]));
            }
            assert_eq!(acc, want);
        }

        // zero target gives the zero solution on the domain
        let g = solve_ladder_equations(&ctx, &ladder, &[FieldElem(0), FieldElem(0)]).unwrap();
        assert!(g.values().all(|e| e.is_zero()));

        // missing fresh coordinate
        let ladder = vecs(4, &[&[(1, 1)], &[(1, 1)]]);
        assert!(matches!(
            solve_ladder_equations(&ctx, &ladder, &[FieldElem(0), FieldElem(0)]),
            Err(Error::NoFreshCoordinate { .. })
        ));
    }

    #[test]
    fn solve_satisfies_equations_on_random_ladders() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (p, m) in [(2u64, 1u32), (3, 1), (2, 2)] {
            let ctx = FieldCtx::new(p, m, None).unwrap();
            for trial in 0..200 {
                let params = GenParams {
                    horizon: 9,
                    length: 1 + trial % 4,
                    s: vec![8],
                    window: vec![0],
                    regime: Regime::Separated,
                    max_extras: 3,
                };
                let sys = generate(&ctx, trial as u64, &params).unwrap();
                let ladder = sys.ladder(8).unwrap();
                let target: Vec<FieldElem> = (0..params.length)
                    .map(|_| FieldElem(rng.gen_range(0..ctx.order())))
                    .collect();
                let g = solve_ladder_equations(&ctx, ladder, &target).unwrap();
                for (y, &want) in ladder.iter().zip(&target) {
                    let mut acc = FieldElem::ZERO;
                    for (xi, e) in y.iter() {
                        acc = ctx.add(acc, ctx.mul(e, g[&xi]));
                    }
                    assert_eq!(acc, want);
                }
            }
        }
    }

    #[test]
    fn extend_on_separated_instance() {
        let ctx = gf2();
        let (sys, filter) = separated(&ctx);
        // a with a_{5,1} = 1, everything else 0
        let a = Colouring::new(
            2,
            [
                (3, vec![FieldElem(0), FieldElem(0)]),
                (5, vec![FieldElem(0), FieldElem(1)]),
            ],
        )
        .unwrap();
        let f0 = extend_uniformizer(
            &ctx,
            &sys,
            &filter,
            &a,
            &PartialUniformizer::empty(6),
            4,
        )
        .unwrap();
        let f1 = extend_uniformizer(&ctx, &sys, &filter, &a, &f0, 6).unwrap();
        assert!(f1.extends(&f0));
        assert_eq!(f1.get(4), Some(FieldElem(1)));
        assert_eq!(f1.get(5), Some(FieldElem(0)));

        // mu1 = mu0 is the identity extension
        let same = extend_uniformizer(&ctx, &sys, &filter, &a, &f0, f0.mu()).unwrap();
        assert_eq!(same, f0);
    }

    #[test]
    fn extend_fails_on_overlapping_conflict() {
        let ctx = gf2();
        let (sys, filter) = paper_q(&ctx);
        // a_{3,0} = 0, a_{4,0} = 1: the shared step g1 cannot serve both
        let a = Colouring::new(1, [(3, vec![FieldElem(0)]), (4, vec![FieldElem(1)])]).unwrap();
        let r = extend_uniformizer(
            &ctx,
            &sys,
            &filter,
            &a,
            &PartialUniformizer::empty(5),
            5,
        );
        assert_eq!(r, Err(Error::ExtensionFailed { delta: 4 }));
    }

    #[test]
    fn global_uniformize_examples() {
        let ctx = gf2();
        let (sys, filter) = paper_q(&ctx);
        let zero = Colouring::zero(1, &[3, 4]);
        let f = global_uniformize(&ctx, &sys, &filter, &zero).unwrap().unwrap();
        assert!(f.values().iter().all(|e| e.is_zero()));

        let ones = Colouring::new(1, [(3, vec![FieldElem(1)]), (4, vec![FieldElem(1)])]).unwrap();
        let f = global_uniformize(&ctx, &sys, &filter, &ones).unwrap().unwrap();
        assert_eq!(f.get(1), Some(FieldElem(1)));

        let bad = Colouring::new(1, [(3, vec![FieldElem(1)]), (4, vec![FieldElem(0)])]).unwrap();
        assert!(global_uniformize(&ctx, &sys, &filter, &bad).unwrap().is_none());
        // brute force over all 32 functions agrees
        let mut found = false;
        for code in 0..32u64 {
            let f: Vec<FieldElem> = (0..5).map(|i| FieldElem((code >> i) & 1)).collect();
            let col = crate::colouring::apply_uniformizer(&ctx, &f, &sys).unwrap();
            if filter
                .almost_equal(col.value(3).unwrap(), bad.value(3).unwrap())
                .unwrap()
                && filter
                    .almost_equal(col.value(4).unwrap(), bad.value(4).unwrap())
                    .unwrap()
            {
                found = true;
            }
        }
        assert!(!found);
    }

    #[test]
    fn patch_initial_examples() {
        let ctx = gf2();
        let (sys, filter) = separated(&ctx);
        // g correct at delta = 5 only (a_{5,1} = 1 via f(4) = 1), wrong at
        // delta = 3 (a_{3,1} = 1 needs f(1) + f(2) = 1)
        let a = Colouring::new(
            2,
            [
                (3, vec![FieldElem(0), FieldElem(1)]),
                (5, vec![FieldElem(0), FieldElem(1)]),
            ],
        )
        .unwrap();
        let mut g = vec![FieldElem::ZERO; 6];
        g[4] = FieldElem(1);
        let h = patch_initial(&ctx, &sys, &filter, &a, &g, 4).unwrap().unwrap();
        assert_eq!(h.mu(), 6);
        let total = h.to_total();
        for &delta in sys.s() {
            assert!(window_agrees(&ctx, &sys, &filter, &a, &total, delta).unwrap());
        }

        // g already uniformizes everything, mu = 0
        let zero = Colouring::zero(2, &[3, 5]);
        let g = vec![FieldElem::ZERO; 6];
        let h = patch_initial(&ctx, &sys, &filter, &zero, &g, 0).unwrap().unwrap();
        assert_eq!(h.to_total(), g);

        // overlapping instance, no h exists
        let (sys, filter) = paper_q(&ctx);
        let a = Colouring::new(1, [(3, vec![FieldElem(1)]), (4, vec![FieldElem(0)])]).unwrap();
        let mut g = vec![FieldElem::ZERO; 5];
        g[1] = FieldElem(1);
        // g fails its own precondition at delta = 4
        match patch_initial(&ctx, &sys, &filter, &a, &g, 4) {
            Err(Error::PatchFailed { .. }) | Ok(None) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn separated_systems_always_uniformize() {
        // finite mirror of the nonstationary case: exhaustive over all
        // colourings of small separated instances
        for (p, m) in [(2u64, 1u32), (3, 1)] {
            let ctx = FieldCtx::new(p, m, None).unwrap();
            for seed in 0..10 {
                let params = GenParams {
                    horizon: 6,
                    length: 2,
                    s: vec![3, 5],
                    window: vec![1],
                    regime: Regime::Separated,
                    max_extras: 1,
                };
                let sys = generate(&ctx, seed, &params).unwrap();
                let filter = FilterD::new(2, [1]).unwrap();
                assert!(sys.is_window_separated(&filter));
                let q = ctx.order();
                let dims = sys.s().len() * sys.length();
                for code in 0..q.pow(dims as u32) {
                    let a = Colouring::from_dense_code(&ctx, 2, sys.s(), code);
                    let f = global_uniformize(&ctx, &sys, &filter, &a).unwrap();
                    assert!(f.is_some(), "seed {seed}, colouring {code}");
                }
            }
        }
    }
}
