//! Ladder systems on a finite horizon: the defining clauses, the
//! window-separation predicate, and seeded instance generators.

use crate::colouring::FilterD;
use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::vector::SparseVec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// A ladder system: every delta in S carries a length-L sequence of
/// vectors with supports below delta.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderSystem {
    horizon: u32,
    length: usize,
    s: Vec<u32>,
    ladders: BTreeMap<u32, Vec<SparseVec>>,
}

/// One violated defining clause, as data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub delta: u32,
    pub step: usize,
    pub clause: &'static str,
}

impl LadderSystem {
    /// Structural construction; the defining clauses are checked
    /// separately by [`LadderSystem::validate`].
    pub fn new(
        horizon: u32,
        length: usize,
        ladders: impl IntoIterator<Item = (u32, Vec<SparseVec>)>,
    ) -> Result<LadderSystem> {
        let ladders: BTreeMap<u32, Vec<SparseVec>> = ladders.into_iter().collect();
        if length == 0 {
            return Err(Error::InfeasibleParams("ladder length must be >= 1".into()));
        }
        for (&delta, steps) in &ladders {
            if delta >= horizon {
                return Err(Error::InfeasibleParams(format!(
                    "delta {delta} not below horizon {horizon}"
                )));
            }
            if (delta as usize) < length {
                return Err(Error::InfeasibleParams(format!(
                    "delta {delta} smaller than ladder length {length}"
                )));
            }
            if steps.len() != length {
                return Err(Error::LengthMismatch(steps.len(), length));
            }
            for y in steps {
                if y.horizon() != horizon {
                    return Err(Error::HorizonMismatch(y.horizon(), horizon));
                }
            }
        }
        let s = ladders.keys().copied().collect();
        Ok(LadderSystem {
            horizon,
            length,
            s,
            ladders,
        })
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn s(&self) -> &[u32] {
        &self.s
    }

    pub fn ladder(&self, delta: u32) -> Option<&[SparseVec]> {
        self.ladders.get(&delta).map(|v| v.as_slice())
    }

    /// Union of the step supports of delta.
    pub fn ladder_support(&self, delta: u32) -> BTreeSet<u32> {
        self.ladders
            .get(&delta)
            .map(|steps| steps.iter().flat_map(|y| y.support()).collect())
            .unwrap_or_default()
    }

    /// Check the defining clauses for every delta. Violations are data,
    /// not faults.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = vec![];
        for (&delta, steps) in &self.ladders {
            let mut seen: BTreeSet<u32> = BTreeSet::new();
            let mut prev_min: Option<u32> = None;
            for (n, y) in steps.iter().enumerate() {
                if y.is_zero() {
                    out.push(Violation {
                        delta,
                        step: n,
                        clause: "nonzero",
                    });
                    continue;
                }
                if y.support().any(|xi| xi >= delta) {
                    out.push(Violation {
                        delta,
                        step: n,
                        clause: "support-below-delta",
                    });
                }
                let min = y.min_support().expect("nonzero");
                if let Some(pm) = prev_min {
                    if min <= pm {
                        out.push(Violation {
                            delta,
                            step: n,
                            clause: "min-supports-increasing",
                        });
                    }
                }
                prev_min = Some(min);
                if y.support().all(|xi| seen.contains(&xi)) {
                    out.push(Violation {
                        delta,
                        step: n,
                        clause: "fresh-support",
                    });
                }
                seen.extend(y.support());
            }
        }
        out
    }

    /// True iff for every delta, every window step's min support lies
    /// above all smaller members of S.
    pub fn is_window_separated(&self, filter: &FilterD) -> bool {
        for (i, &delta) in self.s.iter().enumerate() {
            if i == 0 {
                continue;
            }
            let below = self.s[i - 1];
            let steps = &self.ladders[&delta];
            for n in filter.window() {
                match steps[n].min_support() {
                    Some(min) if min > below => {}
                    _ => return false,
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Separated,
    Overlapping,
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub horizon: u32,
    pub length: usize,
    pub s: Vec<u32>,
    pub window: Vec<usize>,
    pub regime: Regime,
    /// Maximum extra support coordinates per step beyond the min.
    pub max_extras: usize,
}

struct DeltaPlan {
    mins: Vec<u32>,
    overlap_hit: bool,
}

/// Pick strictly increasing step minima for one delta. Window steps of a
/// separated system must start above `floor`; overlapping generation may
/// instead pull window minima from `pool`.
fn plan_mins(
    rng: &mut ChaCha8Rng,
    delta: u32,
    length: usize,
    window: &BTreeSet<usize>,
    floor: Option<u32>,
    pool: &BTreeSet<u32>,
    want_overlap: bool,
) -> Option<DeltaPlan> {
    'attempt: for attempt in 0..64 {
        let minimal = attempt == 63;
        let mut mins = Vec::with_capacity(length);
        let mut overlap_hit = false;
        for n in 0..length {
            let mut lb = mins.last().map(|&m: &u32| m + 1).unwrap_or(0);
            if let Some(fl) = floor {
                if window.contains(&n) {
                    lb = lb.max(fl + 1);
                }
            }
            let hb = delta.checked_sub((length - n) as u32)?;
            if lb > hb {
                if minimal {
                    return None;
                }
                continue 'attempt;
            }
            let pick = if want_overlap && window.contains(&n) && !overlap_hit {
                let candidates: Vec<u32> =
                    pool.iter().copied().filter(|&x| x >= lb && x <= hb).collect();
                candidates.choose(rng).copied().inspect(|_| overlap_hit = true)
            } else {
                None
            };
            let m = pick.unwrap_or_else(|| {
                if minimal {
                    lb
                } else {
                    rng.gen_range(lb..=hb)
                }
            });
            mins.push(m);
        }
        return Some(DeltaPlan { mins, overlap_hit });
    }
    None
}

/// Deterministic seeded generator. Output always passes
/// [`LadderSystem::validate`]; the separated regime additionally passes
/// [`LadderSystem::is_window_separated`], the overlapping regime shares a
/// window-step support coordinate between two distinct deltas.
pub fn generate(ctx: &FieldCtx, seed: u64, params: &GenParams) -> Result<LadderSystem> {
    let GenParams {
        horizon,
        length,
        ref s,
        ref window,
        regime,
        max_extras,
    } = *params;
    if length == 0 {
        return Err(Error::InfeasibleParams("length must be >= 1".into()));
    }
    let window: BTreeSet<usize> = window.iter().copied().collect();
    if window.iter().any(|&n| n >= length) {
        return Err(Error::InfeasibleParams("window index out of range".into()));
    }
    let mut sorted = s.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != s.len() {
        return Err(Error::InfeasibleParams("S has repeated elements".into()));
    }
    for &d in &sorted {
        if (d as usize) < length {
            return Err(Error::InfeasibleParams(format!(
                "delta {d} smaller than ladder length {length}"
            )));
        }
        if d >= horizon {
            return Err(Error::InfeasibleParams(format!(
                "delta {d} not below horizon {horizon}"
            )));
        }
    }
    if regime == Regime::Overlapping && sorted.len() < 2 {
        return Err(Error::InfeasibleParams(
            "overlapping regime needs |S| >= 2".into(),
        ));
    }

    for sub in 0..128u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15) ^ sub);
        if let Some(sys) = try_generate(ctx, &mut rng, horizon, length, &sorted, &window, regime,
                                        max_extras)? {
            return Ok(sys);
        }
    }
    Err(Error::InfeasibleParams(
        "generator could not satisfy the requested regime".into(),
    ))
}

#[allow(clippy::too_many_arguments)]
fn try_generate(
    ctx: &FieldCtx,
    rng: &mut ChaCha8Rng,
    horizon: u32,
    length: usize,
    s: &[u32],
    window: &BTreeSet<usize>,
    regime: Regime,
    max_extras: usize,
) -> Result<Option<LadderSystem>> {
    let nonzero: Vec<FieldElem> = ctx.elements().filter(|e| !e.is_zero()).collect();
    let mut ladders: BTreeMap<u32, Vec<SparseVec>> = BTreeMap::new();
    // window-step support coordinates of earlier deltas, for overlap
    let mut pool: BTreeSet<u32> = BTreeSet::new();
    let mut overlapped = false;

    for (i, &delta) in s.iter().enumerate() {
        let floor = if regime == Regime::Separated && i > 0 {
            Some(s[i - 1])
        } else {
            None
        };
        let want_overlap = regime == Regime::Overlapping && i > 0 && !overlapped;
        let plan = match plan_mins(rng, delta, length, window, floor, &pool, want_overlap) {
            Some(p) => p,
            None => {
                return Err(Error::InfeasibleParams(format!(
                    "no admissible step minima for delta {delta}"
                )))
            }
        };
        overlapped |= plan.overlap_hit;
        let future_mins: BTreeSet<u32> = plan.mins.iter().copied().collect();
        let mut steps = Vec::with_capacity(length);
        for (n, &m) in plan.mins.iter().enumerate() {
            let mut entries = vec![(m, *nonzero.choose(rng).expect("field has nonzero"))];
            let candidates: Vec<u32> = (m + 1..delta)
                .filter(|x| !future_mins.contains(x))
                .collect();
            let extras = rng.gen_range(0..=max_extras.min(candidates.len()));
            for &xi in candidates.choose_multiple(rng, extras) {
                entries.push((xi, *nonzero.choose(rng).expect("nonzero")));
            }
            let y = SparseVec::from_entries(horizon, entries)?;
            if window.contains(&n) {
                pool.extend(y.support());
            }
            steps.push(y);
        }
        ladders.insert(delta, steps);
    }

    if regime == Regime::Overlapping && !overlapped {
        return Ok(None);
    }
    let sys = LadderSystem::new(horizon, length, ladders)?;
    debug_assert!(sys.validate().is_empty());
    Ok(Some(sys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf2() -> FieldCtx {
        FieldCtx::new(2, 1, None).unwrap()
    }

    fn vecs(horizon: u32, entries: &[&[(u32, u64)]]) -> Vec<SparseVec> {
        entries
            .iter()
            .map(|es| {
                SparseVec::from_entries(
                    horizon,
                    es.iter().map(|&(xi, c)| (xi, FieldElem(c))),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn validate_ok_example() {
        // S = {3}, L = 2, z(3) = <g0, g1+g2>
        let sys = LadderSystem::new(
            6,
            2,
            [(3, vecs(6, &[&[(0, 1)], &[(1, 1), (2, 1)]]))],
        )
        .unwrap();
        assert!(sys.validate().is_empty());
    }

    #[test]
    fn validate_catches_repeated_support() {
        let sys = LadderSystem::new(6, 2, [(3, vecs(6, &[&[(1, 1)], &[(1, 1)]]))]).unwrap();
        let v = sys.validate();
        assert!(v
            .iter()
            .any(|v| v.clause == "fresh-support" && v.delta == 3 && v.step == 1));
    }

    #[test]
    fn validate_catches_support_above_delta() {
        let sys = LadderSystem::new(6, 1, [(3, vecs(6, &[&[(3, 1)]]))]).unwrap();
        let v = sys.validate();
        assert!(v.iter().any(|v| v.clause == "support-below-delta"));
    }

    #[test]
    fn window_separated_examples() {
        let d = FilterD::new(2, [1]).unwrap();
        let sys = LadderSystem::new(
            6,
            2,
            [
                (3, vecs(6, &[&[(0, 1)], &[(1, 1), (2, 1)]])),
                (5, vecs(6, &[&[(1, 1)], &[(4, 1)]])),
            ],
        )
        .unwrap();
        assert!(sys.is_window_separated(&d));

        // paper-q shape: both deltas use g1 in the window step
        let d0 = FilterD::new(1, [0]).unwrap();
        let sys = LadderSystem::new(
            5,
            1,
            [(3, vecs(5, &[&[(1, 1)]])), (4, vecs(5, &[&[(1, 1)]]))],
        )
        .unwrap();
        assert!(!sys.is_window_separated(&d0));

        // singleton S: vacuous
        let sys = LadderSystem::new(5, 1, [(3, vecs(5, &[&[(1, 1)]]))]).unwrap();
        assert!(sys.is_window_separated(&d0));
    }

    #[test]
    fn generate_is_deterministic_and_valid() {
        let ctx = gf2();
        let params = GenParams {
            horizon: 6,
            length: 2,
            s: vec![3, 5],
            window: vec![1],
            regime: Regime::Separated,
            max_extras: 2,
        };
        let a = generate(&ctx, 1, &params).unwrap();
        let b = generate(&ctx, 1, &params).unwrap();
        assert_eq!(a, b);
        assert!(a.validate().is_empty());
        let d = FilterD::new(2, [1]).unwrap();
        assert!(a.is_window_separated(&d));
    }

    #[test]
    fn generate_overlapping_shares_window_support() {
        let ctx = gf2();
        let params = GenParams {
            horizon: 8,
            length: 2,
            s: vec![4, 6],
            window: vec![1],
            regime: Regime::Overlapping,
            max_extras: 1,
        };
        for seed in 0..20 {
            let sys = generate(&ctx, seed, &params).unwrap();
            assert!(sys.validate().is_empty());
            let w4: BTreeSet<u32> = sys.ladder(4).unwrap()[1].support().collect();
            let w6: BTreeSet<u32> = sys.ladder(6).unwrap()[1].support().collect();
            assert!(
                w4.intersection(&w6).next().is_some(),
                "seed {seed}: no shared window coordinate"
            );
        }
    }

    #[test]
    fn generate_rejects_infeasible() {
        let ctx = gf2();
        let params = GenParams {
            horizon: 4,
            length: 5,
            s: vec![3],
            window: vec![0],
            regime: Regime::Separated,
            max_extras: 0,
        };
        assert!(matches!(
            generate(&ctx, 1, &params),
            Err(Error::InfeasibleParams(_))
        ));
        let params = GenParams {
            horizon: 6,
            length: 1,
            s: vec![3],
            window: vec![0],
            regime: Regime::Overlapping,
            max_extras: 0,
        };
        assert!(matches!(
            generate(&ctx, 1, &params),
            Err(Error::InfeasibleParams(_))
        ));
    }

    // independent slow re-check of the defining clauses
    fn slow_check(sys: &LadderSystem) -> bool {
        for &delta in sys.s() {
            let steps = sys.ladder(delta).unwrap();
            for (n, y) in steps.iter().enumerate() {
                if y.is_zero() {
                    return false;
                }
                for xi in y.support() {
                    if xi >= delta {
                        return false;
                    }
                }
                if n > 0 {
                    let a = steps[n - 1].min_support().unwrap();
                    let b = y.min_support().unwrap();
                    if b <= a {
                        return false;
                    }
                }
                let mut union: BTreeSet<u32> = BTreeSet::new();
                for m in steps.iter().take(n) {
                    union.extend(m.support());
                }
                if y.support().all(|xi| union.contains(&xi)) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn validate_matches_slow_check_on_generated_corpus() {
        let ctx = FieldCtx::new(3, 1, None).unwrap();
        for seed in 0..50 {
            let params = GenParams {
                horizon: 8,
                length: 3,
                s: vec![3, 5, 7],
                window: vec![2],
                regime: Regime::Separated,
                max_extras: 2,
            };
            let sys = generate(&ctx, seed, &params).unwrap();
            assert!(sys.validate().is_empty());
            assert!(slow_check(&sys));
        }
        // and on a hand-broken system both report a problem
        let bad = LadderSystem::new(6, 2, [(3, vecs(6, &[&[(1, 1)], &[(1, 1)]]))]).unwrap();
        assert!(!bad.validate().is_empty());
        assert!(!slow_check(&bad));
    }
}
