//! The subspace of uniform colourings inside the space of all
//! colourings, its dimension and class count, coset representatives, and
//! an independent brute-force oracle.

use crate::colouring::{Colouring, FilterD};
use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::ladder::LadderSystem;
use std::collections::{HashMap, HashSet};

pub const DEFAULT_REP_CAP: u64 = 256;

/// Oracle enumeration budget; instances whose exhaustive search exceeds
/// it are rejected with `TooLarge`. Overridable through the
/// `LADDERLAB_ORACLE_BUDGET` environment variable.
pub const DEFAULT_ORACLE_BUDGET: u64 = 1 << 20;

pub fn oracle_budget() -> u64 {
    std::env::var("LADDERLAB_ORACLE_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_ORACLE_BUDGET)
}

#[derive(Debug, Clone)]
pub struct QuotientReport {
    /// Dimension of the colouring space over GF(q): |S| * L.
    pub dim_colset: usize,
    /// Dimension of the uniform subspace over GF(q).
    pub dim_unifset: usize,
    /// q^(dim_colset - dim_unifset).
    pub class_count: u64,
    /// One colouring per coset, materialized only below the cap.
    pub coset_reps: Option<Vec<Colouring>>,
}

/// Dense row over GF(q).
fn row_scale(ctx: &FieldCtx, row: &mut [FieldElem], e: FieldElem) {
    for x in row.iter_mut() {
        *x = ctx.mul(e, *x);
    }
}

fn row_axpy(ctx: &FieldCtx, dst: &mut [FieldElem], src: &[FieldElem], e: FieldElem) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = ctx.add(*d, ctx.mul(e, s));
    }
}

/// Reduced row echelon form; returns pivot column per surviving row.
/// Deterministic: first nonzero pivot, rows kept in order of first use.
fn echelonize(ctx: &FieldCtx, rows: &mut Vec<Vec<FieldElem>>) -> Vec<usize> {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut pivots = vec![];
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pr) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pr);
        let inv = ctx.inv(rows[rank][col]).expect("pivot nonzero");
        row_scale(ctx, &mut rows[rank], inv);
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let e = ctx.neg(rows[r][col]);
                let (head, tail) = rows.split_at_mut(rank.max(r));
                let (a, b) = if r < rank {
                    (&mut head[r], &tail[0])
                } else {
                    (&mut tail[0], &head[rank])
                };
                row_axpy(ctx, a, b, e);
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    pivots
}

/// The window-evaluation matrix: one row per (delta, window index) pair
/// in (delta, n) order, one column per generator.
fn window_matrix(ctx: &FieldCtx, sys: &LadderSystem, filter: &FilterD) -> Vec<Vec<FieldElem>> {
    let lam = sys.horizon() as usize;
    let mut rows = vec![];
    for &delta in sys.s() {
        let steps = sys.ladder(delta).expect("delta in S");
        for n in filter.window() {
            let mut row = vec![FieldElem::ZERO; lam];
            for (xi, e) in steps[n].iter() {
                row[xi as usize] = ctx.add(row[xi as usize], e);
            }
            rows.push(row);
        }
    }
    let _ = ctx;
    rows
}

fn window_rank(ctx: &FieldCtx, sys: &LadderSystem, filter: &FilterD) -> usize {
    let mut m = window_matrix(ctx, sys, filter);
    echelonize(ctx, &mut m);
    m.len()
}

/// Echelonized basis of the uniform subspace inside F^(S x L), with
/// coordinates ordered by (delta, n). Off-window coordinates are free;
/// window coordinates range over the image of the evaluation map.
pub fn unifset_basis(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
) -> Vec<Vec<FieldElem>> {
    let l = sys.length();
    let ncoords = sys.s().len() * l;
    let coord = |di: usize, n: usize| di * l + n;

    // image of f |-> window evaluations: row space of the transpose
    let wm = window_matrix(ctx, sys, filter);
    let nwin = wm.len();
    let lam = sys.horizon() as usize;
    let mut image: Vec<Vec<FieldElem>> = (0..lam)
        .map(|xi| (0..nwin).map(|r| wm[r][xi]).collect())
        .collect();
    echelonize(ctx, &mut image);

    let win: Vec<usize> = filter.window().collect();
    let mut basis = vec![];
    for img in &image {
        let mut v = vec![FieldElem::ZERO; ncoords];
        let mut k = 0;
        for di in 0..sys.s().len() {
            for &n in &win {
                v[coord(di, n)] = img[k];
                k += 1;
            }
        }
        basis.push(v);
    }
    for di in 0..sys.s().len() {
        for n in 0..l {
            if !filter.in_window(n) {
                let mut v = vec![FieldElem::ZERO; ncoords];
                v[coord(di, n)] = FieldElem::ONE;
                basis.push(v);
            }
        }
    }
    echelonize(ctx, &mut basis);
    basis
}

/// Decide membership of a colouring in the uniform subspace by an exact
/// linear solve on the window constraints; on success return a witness
/// uniformizer (zero on unconstrained generators).
pub fn unifset_membership(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    a: &Colouring,
) -> Result<Option<Vec<FieldElem>>> {
    if !a.matches(sys) {
        return Err(Error::ShapeMismatch);
    }
    let lam = sys.horizon() as usize;
    // augmented rows [coefficients | rhs]
    let mut rows = vec![];
    for &delta in sys.s() {
        let steps = sys.ladder(delta).expect("delta in S");
        let target = a.value(delta).expect("delta in S");
        for n in filter.window() {
            let mut row = vec![FieldElem::ZERO; lam + 1];
            for (xi, e) in steps[n].iter() {
                row[xi as usize] = ctx.add(row[xi as usize], e);
            }
            row[lam] = target[n];
            rows.push(row);
        }
    }
    let pivots = echelonize(ctx, &mut rows);
    if pivots.contains(&lam) {
        return Ok(None); // inconsistent: pivot in the rhs column
    }
    let mut f = vec![FieldElem::ZERO; lam];
    for (row, &col) in rows.iter().zip(&pivots) {
        // free variables are zero, so the pivot variable equals the rhs
        // minus contributions of free columns (all zero)
        f[col] = row[lam];
    }
    // sanity: witness satisfies every window constraint
    for &delta in sys.s() {
        let steps = sys.ladder(delta).unwrap();
        let target = a.value(delta).unwrap();
        for n in filter.window() {
            debug_assert_eq!(steps[n].evaluate(ctx, &f)?, target[n]);
        }
    }
    Ok(Some(f))
}

/// Exact class count and optional coset representatives.
pub fn class_count(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    rep_cap: u64,
) -> Result<QuotientReport> {
    let q = ctx.order();
    let l = sys.length();
    let ns = sys.s().len();
    let dim_colset = ns * l;
    let rank = window_rank(ctx, sys, filter);
    let dim_unifset = rank + ns * (l - filter.window_size());
    let codim = (dim_colset - dim_unifset) as u32;
    let class_count = q.checked_pow(codim).ok_or_else(|| {
        Error::TooLarge(format!("q^{codim} classes overflow"))
    })?;

    let coset_reps = if class_count <= rep_cap {
        let basis = unifset_basis(ctx, sys, filter);
        let pivots: HashSet<usize> = basis
            .iter()
            .map(|row| row.iter().position(|e| !e.is_zero()).expect("nonzero row"))
            .collect();
        let free: Vec<usize> = (0..dim_colset).filter(|i| !pivots.contains(i)).collect();
        debug_assert_eq!(free.len(), codim as usize);
        let mut reps = vec![];
        for mut code in 0..class_count {
            let mut coords = vec![FieldElem::ZERO; dim_colset];
            for &i in &free {
                coords[i] = FieldElem(code % q);
                code /= q;
            }
            reps.push(colouring_from_coords(sys, &coords));
        }
        Some(reps)
    } else {
        None
    };
    Ok(QuotientReport {
        dim_colset,
        dim_unifset,
        class_count,
        coset_reps,
    })
}

fn colouring_from_coords(sys: &LadderSystem, coords: &[FieldElem]) -> Colouring {
    let l = sys.length();
    Colouring::new(
        l,
        sys.s()
            .iter()
            .enumerate()
            .map(|(di, &d)| (d, coords[di * l..(di + 1) * l].to_vec())),
    )
    .expect("coords have shape S x L")
}

/// Independent oracle: enumerate every function f on the horizon to
/// collect the set of uniform colourings, then count equivalence classes
/// by spreading labels along uniform differences.
pub fn brute_class_count(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
) -> Result<u64> {
    let budget = oracle_budget();
    let q = ctx.order();
    let l = sys.length();
    let ns = sys.s().len();
    let dims = (ns * l) as u32;
    let ncol = q
        .checked_pow(dims)
        .filter(|&n| n <= budget)
        .ok_or_else(|| Error::TooLarge(format!("q^(|S|*L) = q^{dims} exceeds oracle budget")))?;
    let nfun = q
        .checked_pow(sys.horizon())
        .filter(|&n| n <= budget)
        .ok_or_else(|| {
            Error::TooLarge(format!("q^horizon = q^{} exceeds oracle budget", sys.horizon()))
        })?;

    // all uniform colourings, from the f side: the window pattern of f
    // crossed with every off-window assignment
    let win: Vec<(usize, usize)> = sys
        .s()
        .iter()
        .enumerate()
        .flat_map(|(di, _)| filter.window().map(move |n| (di, n)))
        .collect();
    let off: Vec<(usize, usize)> = (0..ns)
        .flat_map(|di| (0..l).filter(|&n| !filter.in_window(n)).map(move |n| (di, n)))
        .collect();
    let coord = |di: usize, n: usize| (di * l + n) as u32;

    let mut window_patterns: HashSet<u64> = HashSet::new();
    let s: Vec<u32> = sys.s().to_vec();
    for fcode in 0..nfun {
        let f: Vec<FieldElem> = {
            let mut c = fcode;
            (0..sys.horizon())
                .map(|_| {
                    let d = FieldElem(c % q);
                    c /= q;
                    d
                })
                .collect()
        };
        let mut pat = 0u64;
        for &(di, n) in win.iter().rev() {
            let y = &sys.ladder(s[di]).unwrap()[n];
            pat = pat * q + y.evaluate(ctx, &f)?.code();
        }
        window_patterns.insert(pat);
    }
    let mut uniform: Vec<u64> = vec![];
    let noff = q.pow(off.len() as u32);
    for &pat in &window_patterns {
        // decode the window pattern back into full-coordinate codes
        let mut wdigits = vec![];
        let mut c = pat;
        for _ in 0..win.len() {
            wdigits.push(c % q);
            c /= q;
        }
        for offcode in 0..noff {
            let mut digits = vec![0u64; (dims) as usize];
            for (k, &(di, n)) in win.iter().enumerate() {
                digits[coord(di, n) as usize] = wdigits[k];
            }
            let mut c = offcode;
            for &(di, n) in &off {
                digits[coord(di, n) as usize] = c % q;
                c /= q;
            }
            let full = digits.iter().rev().fold(0u64, |acc, &d| acc * q + d);
            uniform.push(full);
        }
    }

    // label spreading: a ~ b iff a - b is uniform
    let mut label: HashMap<u64, u32> = HashMap::new();
    let mut classes = 0u64;
    let mut parent: Vec<u32> = vec![];
    fn find(parent: &mut Vec<u32>, mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for code in 0..ncol {
        if label.contains_key(&code) {
            continue;
        }
        let id = parent.len() as u32;
        parent.push(id);
        classes += 1;
        let base = decode_digits(code, q, dims);
        for &u in &uniform {
            let ud = decode_digits(u, q, dims);
            let sum: Vec<u64> = base
                .iter()
                .zip(&ud)
                .map(|(&x, &y)| ctx.add(FieldElem(x), FieldElem(y)).code())
                .collect();
            let scode = sum.iter().rev().fold(0u64, |acc, &d| acc * q + d);
            if let Some(&other) = label.get(&scode) {
                let (a, b) = (find(&mut parent, other), find(&mut parent, id));
                if a != b {
                    parent[b as usize] = a;
                    classes -= 1;
                }
            } else {
                label.insert(scode, id);
            }
        }
    }
    Ok(classes)
}

fn decode_digits(mut code: u64, q: u64, n: u32) -> Vec<u64> {
    (0..n)
        .map(|_| {
            let d = code % q;
            code /= q;
            d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::SparseVec;

    fn vecs(horizon: u32, entries: &[&[(u32, u64)]]) -> Vec<SparseVec> {
        entries
            .iter()
            .map(|es| {
                SparseVec::from_entries(horizon, es.iter().map(|&(xi, c)| (xi, FieldElem(c))))
                    .unwrap()
            })
            .collect()
    }

    fn paper_q() -> (LadderSystem, FilterD) {
        let sys = LadderSystem::new(
            5,
            1,
            [(3, vecs(5, &[&[(1, 1)]])), (4, vecs(5, &[&[(1, 1)]]))],
        )
        .unwrap();
        (sys, FilterD::new(1, [0]).unwrap())
    }

    #[test]
    fn paper_q_has_two_classes_over_gf2() {
        let ctx = FieldCtx::new(2, 1, None).unwrap();
        let (sys, filter) = paper_q();
        let report = class_count(&ctx, &sys, &filter, DEFAULT_REP_CAP).unwrap();
        assert_eq!(report.dim_colset, 2);
        assert_eq!(report.dim_unifset, 1);
        assert_eq!(report.class_count, 2);
        assert_eq!(brute_class_count(&ctx, &sys, &filter).unwrap(), 2);
        let basis = unifset_basis(&ctx, &sys, &filter);
        assert_eq!(basis, vec![vec![FieldElem(1), FieldElem(1)]]);
    }

    #[test]
    fn gf3_analogue_has_three_classes() {
        let ctx = FieldCtx::new(3, 1, None).unwrap();
        let (sys, filter) = paper_q();
        let report = class_count(&ctx, &sys, &filter, DEFAULT_REP_CAP).unwrap();
        assert_eq!(report.class_count, 3);
        assert_eq!(brute_class_count(&ctx, &sys, &filter).unwrap(), 3);
    }

    #[test]
    fn separated_instance_dimensions() {
        let ctx = FieldCtx::new(2, 1, None).unwrap();
        let sys = LadderSystem::new(
            6,
            2,
            [
                (3, vecs(6, &[&[(0, 1)], &[(1, 1), (2, 1)]])),
                (5, vecs(6, &[&[(1, 1)], &[(4, 1)]])),
            ],
        )
        .unwrap();
        let filter = FilterD::new(2, [1]).unwrap();
        let report = class_count(&ctx, &sys, &filter, DEFAULT_REP_CAP).unwrap();
        assert_eq!(report.dim_colset, 4);
        assert_eq!(report.dim_unifset, 4);
        assert_eq!(report.class_count, 1);
        assert_eq!(brute_class_count(&ctx, &sys, &filter).unwrap(), 1);
    }

    #[test]
    fn empty_s_is_trivial() {
        let ctx = FieldCtx::new(2, 1, None).unwrap();
        let sys = LadderSystem::new(4, 1, []).unwrap();
        let filter = FilterD::new(1, [0]).unwrap();
        let report = class_count(&ctx, &sys, &filter, DEFAULT_REP_CAP).unwrap();
        assert_eq!(report.class_count, 1);
        assert_eq!(brute_class_count(&ctx, &sys, &filter).unwrap(), 1);
    }

    #[test]
    fn membership_examples() {
        let ctx = FieldCtx::new(2, 1, None).unwrap();
        let (sys, filter) = paper_q();
        let zero = Colouring::zero(1, &[3, 4]);
        let f = unifset_membership(&ctx, &sys, &filter, &zero).unwrap().unwrap();
        assert!(f.iter().all(|e| e.is_zero()));

        let ones =
            Colouring::new(1, [(3, vec![FieldElem(1)]), (4, vec![FieldElem(1)])]).unwrap();
        assert!(unifset_membership(&ctx, &sys, &filter, &ones).unwrap().is_some());

        let mixed =
            Colouring::new(1, [(3, vec![FieldElem(1)]), (4, vec![FieldElem(0)])]).unwrap();
        assert!(unifset_membership(&ctx, &sys, &filter, &mixed).unwrap().is_none());
    }

    #[test]
    fn reps_are_pairwise_nonequivalent_and_cover() {
        let ctx = FieldCtx::new(3, 1, None).unwrap();
        let (sys, filter) = paper_q();
        let report = class_count(&ctx, &sys, &filter, DEFAULT_REP_CAP).unwrap();
        let reps = report.coset_reps.unwrap();
        assert_eq!(reps.len(), 3);
        for (i, a) in reps.iter().enumerate() {
            for b in reps.iter().skip(i + 1) {
                let d = Colouring::difference(&ctx, a, b).unwrap();
                assert!(unifset_membership(&ctx, &sys, &filter, &d).unwrap().is_none());
            }
        }
        // every colouring is equivalent to exactly one rep
        let dims = (sys.s().len() * sys.length()) as u32;
        for code in 0..ctx.order().pow(dims) {
            let c = Colouring::from_dense_code(&ctx, 1, sys.s(), code);
            let hits = reps
                .iter()
                .filter(|r| {
                    let d = Colouring::difference(&ctx, &c, r).unwrap();
                    unifset_membership(&ctx, &sys, &filter, &d).unwrap().is_some()
                })
                .count();
            assert_eq!(hits, 1);
        }
    }

    #[test]
    fn unifset_is_a_subspace() {
        let ctx = FieldCtx::new(3, 1, None).unwrap();
        let (sys, filter) = paper_q();
        let dims = (sys.s().len() * sys.length()) as u32;
        let members: Vec<Colouring> = (0..ctx.order().pow(dims))
            .map(|code| Colouring::from_dense_code(&ctx, 1, sys.s(), code))
            .filter(|c| unifset_membership(&ctx, &sys, &filter, c).unwrap().is_some())
            .collect();
        for a in &members {
            for b in &members {
                for e0 in ctx.elements() {
                    for e1 in ctx.elements() {
                        let c = Colouring::combine(&ctx, e0, a, e1, b).unwrap();
                        assert!(
                            unifset_membership(&ctx, &sys, &filter, &c).unwrap().is_some()
                        );
                    }
                }
            }
        }
    }
}
