//! Coded models: each colouring is turned into a finite relational
//! structure whose isomorphism type remembers only the colouring's
//! equivalence class.

use crate::colouring::{Colouring, FilterD};
use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::ladder::LadderSystem;
use crate::vector::SparseVec;
use std::collections::{BTreeMap, BTreeSet};

pub const DOMAIN_CAP: u64 = 1 << 20;
const STRUCTURE_PAIR_CAP: u64 = 1 << 22;

/// A function {0..L-1} -> F vanishing on the filter window, encoded by
/// its off-window digits in base q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OdCode(pub u64);

/// Element label of a coded model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    /// (delta, u) with u in OD.
    S { copy: usize, di: usize, u: OdCode },
    /// (y, c) with y a vector below the restriction bound.
    V { copy: usize, y: u64, c: u64 },
}

/// A coded model, possibly restricted to an initial segment and possibly
/// a tagged disjoint union of several colourings' models.
#[derive(Debug, Clone)]
pub struct CodedModel {
    ctx: FieldCtx,
    sys: LadderSystem,
    filter: FilterD,
    colourings: Vec<Colouring>,
    /// Restriction bound; the full model has mu = horizon.
    mu: u32,
    /// Same-copy relation present (disjoint unions).
    sim: bool,
    s_incl: Vec<u32>,
    nod: u64,
    nvy: u64,
    /// pr[n][global spoint index] = global vpoint element id.
    pr: Vec<Vec<u32>>,
}

impl CodedModel {
    pub fn build(
        ctx: &FieldCtx,
        sys: &LadderSystem,
        filter: &FilterD,
        a: &Colouring,
    ) -> Result<CodedModel> {
        if !a.matches(sys) {
            return Err(Error::ShapeMismatch);
        }
        Self::assemble(ctx, sys, filter, vec![a.clone()], sys.horizon(), false)
    }

    fn assemble(
        ctx: &FieldCtx,
        sys: &LadderSystem,
        filter: &FilterD,
        colourings: Vec<Colouring>,
        mu: u32,
        sim: bool,
    ) -> Result<CodedModel> {
        let q = ctx.order();
        let l = sys.length();
        let s_incl: Vec<u32> = sys.s().iter().copied().filter(|&d| d <= mu).collect();
        let off = l - filter.window_size();
        let nod = q.pow(off as u32);
        let nvy = q
            .checked_pow(mu)
            .ok_or_else(|| Error::TooLarge(format!("q^{mu} vectors overflow")))?;
        let copies = colourings.len() as u64;
        let n_sp = s_incl.len() as u64 * nod;
        let n_vp = nvy
            .checked_mul(q)
            .ok_or_else(|| Error::TooLarge("vpoint count overflows".into()))?;
        let total = copies
            .checked_mul(n_sp + n_vp)
            .filter(|&t| t <= DOMAIN_CAP)
            .ok_or_else(|| {
                Error::TooLarge(format!("domain exceeds cap {DOMAIN_CAP}"))
            })?;
        let _ = total;

        let mut model = CodedModel {
            ctx: ctx.clone(),
            sys: sys.clone(),
            filter: filter.clone(),
            colourings,
            mu,
            sim,
            s_incl,
            nod,
            nvy,
            pr: vec![],
        };
        model.pr = (0..l)
            .map(|n| {
                (0..model.n_spoints())
                    .map(|k| model.pr_expected(n, k as u32))
                    .collect()
            })
            .collect();
        Ok(model)
    }

    /// The induced substructure on vectors supported below mu and on
    /// deltas at most mu.
    pub fn restrict(&self, mu: u32) -> Result<CodedModel> {
        if mu > self.sys.horizon() {
            return Err(Error::HorizonMismatch(mu, self.sys.horizon()));
        }
        Self::assemble(
            &self.ctx,
            &self.sys,
            &self.filter,
            self.colourings.clone(),
            mu,
            self.sim,
        )
    }

    /// Tagged disjoint union; the `sim` relation relates same-copy pairs
    /// when requested.
    pub fn disjoint_union(models: &[&CodedModel], add_sim: bool) -> Result<CodedModel> {
        let first = models.first().ok_or(Error::VocabularyMismatch)?;
        for m in models {
            if m.ctx != first.ctx
                || m.sys != first.sys
                || m.filter != first.filter
                || m.mu != first.mu
            {
                return Err(Error::VocabularyMismatch);
            }
        }
        let colourings = models
            .iter()
            .flat_map(|m| m.colourings.iter().cloned())
            .collect();
        Self::assemble(
            &first.ctx,
            &first.sys,
            &first.filter,
            colourings,
            first.mu,
            add_sim,
        )
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn sys(&self) -> &LadderSystem {
        &self.sys
    }

    pub fn filter(&self) -> &FilterD {
        &self.filter
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }

    pub fn copies(&self) -> usize {
        self.colourings.len()
    }

    pub fn colouring(&self, copy: usize) -> &Colouring {
        &self.colourings[copy]
    }

    pub fn has_sim(&self) -> bool {
        self.sim
    }

    /// The single-copy model of one tag.
    pub fn copy_model(&self, copy: usize) -> Result<CodedModel> {
        Self::assemble(
            &self.ctx,
            &self.sys,
            &self.filter,
            vec![self.colourings[copy].clone()],
            self.mu,
            false,
        )
    }

    pub fn n_spoints_per_copy(&self) -> u64 {
        self.s_incl.len() as u64 * self.nod
    }

    pub fn n_vpoints_per_copy(&self) -> u64 {
        self.nvy * self.ctx.order()
    }

    pub fn n_spoints(&self) -> u64 {
        self.n_spoints_per_copy() * self.copies() as u64
    }

    pub fn n_vpoints(&self) -> u64 {
        self.n_vpoints_per_copy() * self.copies() as u64
    }

    pub fn n_elements(&self) -> u64 {
        self.n_spoints() + self.n_vpoints()
    }

    pub fn s_included(&self) -> &[u32] {
        &self.s_incl
    }

    pub fn od_count(&self) -> u64 {
        self.nod
    }

    /// Value u(n) of the OD function with the given code.
    pub fn od_value(&self, u: OdCode, n: usize) -> FieldElem {
        if self.filter.in_window(n) {
            return FieldElem::ZERO;
        }
        let q = self.ctx.order();
        let mut code = u.0;
        for k in 0..self.sys.length() {
            if self.filter.in_window(k) {
                continue;
            }
            if k == n {
                return FieldElem(code % q);
            }
            code /= q;
        }
        FieldElem::ZERO
    }

    /// Encode a full length-L tuple as an OD code; None if it does not
    /// vanish on the window.
    pub fn od_encode(&self, values: &[FieldElem]) -> Option<OdCode> {
        let q = self.ctx.order();
        let mut code = 0u64;
        for k in (0..self.sys.length()).rev() {
            if self.filter.in_window(k) {
                if !values[k].is_zero() {
                    return None;
                }
            } else {
                code = code * q + values[k].code();
            }
        }
        Some(OdCode(code))
    }

    pub fn od_add(&self, a: OdCode, b: OdCode) -> OdCode {
        let q = self.ctx.order();
        let off = self.sys.length() - self.filter.window_size();
        let mut code = 0u64;
        let (mut ca, mut cb) = (a.0, b.0);
        let mut mult = 1u64;
        for _ in 0..off {
            let s = self.ctx.add(FieldElem(ca % q), FieldElem(cb % q));
            code += s.code() * mult;
            mult *= q;
            ca /= q;
            cb /= q;
        }
        OdCode(code)
    }

    pub fn spoint_id(&self, copy: usize, di: usize, u: OdCode) -> u32 {
        (copy as u64 * self.n_spoints_per_copy() + di as u64 * self.nod + u.0) as u32
    }

    pub fn vpoint_id(&self, copy: usize, y: u64, c: u64) -> u32 {
        (self.n_spoints() + copy as u64 * self.n_vpoints_per_copy() + y * self.ctx.order() + c)
            as u32
    }

    pub fn label(&self, id: u32) -> Label {
        let id = id as u64;
        let nsp = self.n_spoints();
        if id < nsp {
            let per = self.n_spoints_per_copy();
            let copy = (id / per) as usize;
            let rest = id % per;
            Label::S {
                copy,
                di: (rest / self.nod) as usize,
                u: OdCode(rest % self.nod),
            }
        } else {
            let id = id - nsp;
            let per = self.n_vpoints_per_copy();
            let copy = (id / per) as usize;
            let rest = id % per;
            let q = self.ctx.order();
            Label::V {
                copy,
                y: rest / q,
                c: rest % q,
            }
        }
    }

    /// The dense code of a sparse vector inside this model's vector
    /// space (support must sit below mu).
    pub fn vec_code(&self, y: &SparseVec) -> Result<u64> {
        if let Some(max) = y.support().last() {
            if max >= self.mu {
                return Err(Error::HorizonMismatch(max, self.mu));
            }
        }
        Ok(y.dense_code(&self.ctx))
    }

    fn pr_expected(&self, n: usize, sid: u32) -> u32 {
        let Label::S { copy, di, u } = self.label(sid) else {
            unreachable!("spoint id")
        };
        let delta = self.s_incl[di];
        let y = &self.sys.ladder(delta).expect("delta in s")[n];
        let a = self.colourings[copy].value(delta).expect("delta in s")[n];
        let c = self.ctx.add(a, self.od_value(u, n));
        self.vpoint_id(copy, y.dense_code(&self.ctx), c.code())
    }

    pub fn pr(&self, n: usize, sid: u32) -> u32 {
        self.pr[n][sid as usize]
    }

    /// Fault injection for the validity checker.
    pub fn corrupt_pr_entry(&mut self, n: usize, sid: u32, new_target: u32) {
        self.pr[n][sid as usize] = new_target;
    }

    pub fn p_b(&self, b: FieldElem, vid: u32) -> u32 {
        let Label::V { copy, y, c } = self.label(vid) else {
            panic!("p_b applies to vpoints");
        };
        let c2 = self.ctx.add(FieldElem(c), b);
        self.vpoint_id(copy, y, c2.code())
    }

    pub fn p_u(&self, u: OdCode, sid: u32) -> u32 {
        let Label::S { copy, di, u: v } = self.label(sid) else {
            panic!("p_u applies to spoints");
        };
        self.spoint_id(copy, di, self.od_add(v, u))
    }

    pub fn t_e(&self, e: FieldElem, vid: u32) -> u32 {
        let Label::V { copy, y, c } = self.label(vid) else {
            panic!("t_e applies to vpoints");
        };
        let yv = SparseVec::from_dense_code(&self.ctx, self.mu, y).scale(&self.ctx, e);
        let c2 = self.ctx.mul(e, FieldElem(c));
        self.vpoint_id(copy, yv.dense_code(&self.ctx), c2.code())
    }

    /// Partial: defined only on same-copy pairs.
    pub fn plus(&self, v1: u32, v2: u32) -> Option<u32> {
        let (Label::V { copy: t1, y: y1, c: c1 }, Label::V { copy: t2, y: y2, c: c2 }) =
            (self.label(v1), self.label(v2))
        else {
            return None;
        };
        if t1 != t2 {
            return None;
        }
        let a = SparseVec::from_dense_code(&self.ctx, self.mu, y1);
        let b = SparseVec::from_dense_code(&self.ctx, self.mu, y2);
        let sum = SparseVec::combine(&self.ctx, FieldElem::ONE, &a, FieldElem::ONE, &b).ok()?;
        let c = self.ctx.add(FieldElem(c1), FieldElem(c2));
        Some(self.vpoint_id(t1, sum.dense_code(&self.ctx), c.code()))
    }

    /// Explicit relation tables, suitable for permutation, serialization
    /// and isomorphism search.
    pub fn to_structure(&self) -> Result<Structure> {
        let n_vp = self.n_vpoints();
        let per = self.n_vpoints_per_copy();
        let pairs = per * per * self.copies() as u64;
        if pairs > STRUCTURE_PAIR_CAP {
            return Err(Error::TooLarge(format!(
                "plus table would hold {pairs} entries"
            )));
        }
        let q = self.ctx.order();
        let n = self.n_elements() as usize;
        let mut st = Structure {
            n,
            length: self.sys.length(),
            r_vec: BTreeMap::new(),
            r_s: BTreeMap::new(),
            pr: vec![BTreeMap::new(); self.sys.length()],
            p_b: BTreeMap::new(),
            p_u: BTreeMap::new(),
            t_e: BTreeMap::new(),
            plus: BTreeMap::new(),
            sim: None,
        };
        for sid in 0..self.n_spoints() as u32 {
            let Label::S { di, .. } = self.label(sid) else {
                unreachable!()
            };
            st.r_s.entry(self.s_incl[di]).or_default().push(sid);
            for n in 0..self.sys.length() {
                st.pr[n].insert(sid, self.pr(n, sid));
            }
            for u in 0..self.nod {
                st.p_u
                    .entry(u)
                    .or_default()
                    .insert(sid, self.p_u(OdCode(u), sid));
            }
        }
        let vbase = self.n_spoints() as u32;
        for vid in vbase..vbase + n_vp as u32 {
            let Label::V { y, .. } = self.label(vid) else {
                unreachable!()
            };
            st.r_vec.entry(y).or_default().push(vid);
            for b in 0..q {
                st.p_b
                    .entry(b)
                    .or_default()
                    .insert(vid, self.p_b(FieldElem(b), vid));
            }
            for e in 0..q {
                st.t_e
                    .entry(e)
                    .or_default()
                    .insert(vid, self.t_e(FieldElem(e), vid));
            }
            for w in vbase..vbase + n_vp as u32 {
                if let Some(s) = self.plus(vid, w) {
                    st.plus.insert((vid, w), s);
                }
            }
        }
        if self.sim {
            let mut sim = BTreeSet::new();
            for a in 0..n as u32 {
                let ca = copy_of(self.label(a));
                for b in 0..n as u32 {
                    if ca == copy_of(self.label(b)) {
                        sim.insert((a, b));
                    }
                }
            }
            st.sim = Some(sim);
        }
        Ok(st)
    }

    /// Recompute every defining clause; returns per-clause results.
    pub fn stats(&self) -> ModelStats {
        let q = self.ctx.order();
        let mut clauses: Vec<(&'static str, bool, Option<String>)> = vec![];

        let expect = self.copies() as u64
            * (self.s_incl.len() as u64 * self.nod + self.nvy * q);
        clauses.push((
            "domain",
            self.n_elements() == expect,
            None,
        ));

        // clause (iv): stored Pr tables against their defining formula
        let mut pr_ok = true;
        let mut witness = None;
        'outer: for n in 0..self.sys.length() {
            for sid in 0..self.n_spoints() as u32 {
                if self.pr(n, sid) != self.pr_expected(n, sid) {
                    pr_ok = false;
                    witness = Some(format!("Pr_{n} at spoint {sid}"));
                    break 'outer;
                }
            }
        }
        clauses.push(("pr", pr_ok, witness));

        // (v): P_b bijective on vpoints per b
        let vbase = self.n_spoints() as u32;
        let nv = self.n_vpoints() as usize;
        let mut pb_ok = true;
        for b in 0..q {
            let mut seen = vec![false; nv];
            for vid in vbase..vbase + nv as u32 {
                let t = self.p_b(FieldElem(b), vid);
                let k = (t - vbase) as usize;
                if seen[k] {
                    pb_ok = false;
                }
                seen[k] = true;
            }
        }
        clauses.push(("p_b", pb_ok, None));

        // (vi): P_u bijective on spoints per u
        let ns = self.n_spoints() as usize;
        let mut pu_ok = true;
        for u in 0..self.nod {
            let mut seen = vec![false; ns];
            for sid in 0..ns as u32 {
                let t = self.p_u(OdCode(u), sid) as usize;
                if seen[t] {
                    pu_ok = false;
                }
                seen[t] = true;
            }
        }
        clauses.push(("p_u", pu_ok, None));

        // (vii): plus is the group operation of Vec x F per copy
        let mut plus_ok = true;
        let zero_id = |copy: usize| self.vpoint_id(copy, 0, 0);
        for copy in 0..self.copies() {
            let z = zero_id(copy);
            let base = vbase as u64 + copy as u64 * self.n_vpoints_per_copy();
            for vid in base..base + self.n_vpoints_per_copy() {
                let vid = vid as u32;
                if self.plus(vid, z) != Some(vid) || self.plus(z, vid) != Some(vid) {
                    plus_ok = false;
                }
            }
        }
        clauses.push(("plus", plus_ok, None));

        // (viii): T_e bijective for e != 0
        let mut te_ok = true;
        for e in 1..q {
            let mut seen = vec![false; nv];
            for vid in vbase..vbase + nv as u32 {
                let k = (self.t_e(FieldElem(e), vid) - vbase) as usize;
                if seen[k] {
                    te_ok = false;
                }
                seen[k] = true;
            }
        }
        clauses.push(("t_e", te_ok, None));

        ModelStats {
            domain_size: self.n_elements(),
            spoints: self.n_spoints(),
            vpoints: self.n_vpoints(),
            r_delta_block: self.nod,
            r_vec_block: q * self.copies() as u64,
            clauses,
        }
    }
}

fn copy_of(l: Label) -> usize {
    match l {
        Label::S { copy, .. } | Label::V { copy, .. } => copy,
    }
}

#[derive(Debug, Clone)]
pub struct ModelStats {
    pub domain_size: u64,
    pub spoints: u64,
    pub vpoints: u64,
    pub r_delta_block: u64,
    pub r_vec_block: u64,
    pub clauses: Vec<(&'static str, bool, Option<String>)>,
}

impl ModelStats {
    pub fn all_ok(&self) -> bool {
        self.clauses.iter().all(|(_, ok, _)| *ok)
    }
}

/// Label-keyed relation tables of a coded-model-shaped structure.
/// Element identities are anonymous ids; only the vocabulary symbols
/// (R_y, R_delta, Pr_n, P_b, P_u, T_e, +, ~) survive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    pub n: usize,
    pub length: usize,
    pub r_vec: BTreeMap<u64, Vec<u32>>,
    pub r_s: BTreeMap<u32, Vec<u32>>,
    pub pr: Vec<BTreeMap<u32, u32>>,
    pub p_b: BTreeMap<u64, BTreeMap<u32, u32>>,
    pub p_u: BTreeMap<u64, BTreeMap<u32, u32>>,
    pub t_e: BTreeMap<u64, BTreeMap<u32, u32>>,
    pub plus: BTreeMap<(u32, u32), u32>,
    pub sim: Option<BTreeSet<(u32, u32)>>,
}

impl Structure {
    /// Relabel every element through the permutation: element i becomes
    /// perm[i].
    pub fn permute(&self, perm: &[u32]) -> Structure {
        let p = |x: u32| perm[x as usize];
        let map_fn = |t: &BTreeMap<u32, u32>| t.iter().map(|(&a, &b)| (p(a), p(b))).collect();
        Structure {
            n: self.n,
            length: self.length,
            r_vec: self
                .r_vec
                .iter()
                .map(|(&y, v)| {
                    let mut v: Vec<u32> = v.iter().map(|&x| p(x)).collect();
                    v.sort_unstable();
                    (y, v)
                })
                .collect(),
            r_s: self
                .r_s
                .iter()
                .map(|(&d, v)| {
                    let mut v: Vec<u32> = v.iter().map(|&x| p(x)).collect();
                    v.sort_unstable();
                    (d, v)
                })
                .collect(),
            pr: self.pr.iter().map(map_fn).collect(),
            p_b: self.p_b.iter().map(|(&k, t)| (k, map_fn(t))).collect(),
            p_u: self.p_u.iter().map(|(&k, t)| (k, map_fn(t))).collect(),
            t_e: self.t_e.iter().map(|(&k, t)| (k, map_fn(t))).collect(),
            plus: self
                .plus
                .iter()
                .map(|(&(a, b), &c)| ((p(a), p(b)), p(c)))
                .collect(),
            sim: self
                .sim
                .as_ref()
                .map(|s| s.iter().map(|&(a, b)| (p(a), p(b))).collect()),
        }
    }
}
