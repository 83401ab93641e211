//! The two-way bridge between uniformizers and isomorphisms of coded
//! models, structure decoding, isomorphism-class counting and the
//! restriction-extension property, with brute-force oracles.

use crate::colouring::{Colouring, FilterD};
use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::ladder::LadderSystem;
use crate::model::{CodedModel, Label, Structure};
use crate::uniformize::PartialUniformizer;
use crate::vector::SparseVec;
use std::collections::BTreeMap;

pub const RAW_ISO_CAP: usize = 128;

/// A bijection between the domains of two structures, flagged once both
/// directions of relation preservation have been checked.
#[derive(Debug, Clone)]
pub struct StructureMap {
    pub mapping: Vec<u32>,
    pub verified: bool,
}

/// Full preservation check of a candidate bijection.
pub fn verify_iso(a: &Structure, b: &Structure, map: &[u32]) -> bool {
    if map.len() != a.n || a.n != b.n {
        return false;
    }
    let mut seen = vec![false; b.n];
    for &t in map {
        if t as usize >= b.n || seen[t as usize] {
            return false;
        }
        seen[t as usize] = true;
    }
    let blocks_match = |xa: &BTreeMap<u64, Vec<u32>>, xb: &BTreeMap<u64, Vec<u32>>| {
        if xa.keys().ne(xb.keys()) {
            return false;
        }
        for (k, va) in xa {
            let mut img: Vec<u32> = va.iter().map(|&x| map[x as usize]).collect();
            img.sort_unstable();
            let mut vb = xb[k].clone();
            vb.sort_unstable();
            if img != vb {
                return false;
            }
        }
        true
    };
    if !blocks_match(&a.r_vec, &b.r_vec) {
        return false;
    }
    {
        if a.r_s.keys().ne(b.r_s.keys()) {
            return false;
        }
        for (k, va) in &a.r_s {
            let mut img: Vec<u32> = va.iter().map(|&x| map[x as usize]).collect();
            img.sort_unstable();
            let mut vb = b.r_s[k].clone();
            vb.sort_unstable();
            if img != vb {
                return false;
            }
        }
    }
    let fn_match = |ta: &BTreeMap<u32, u32>, tb: &BTreeMap<u32, u32>| {
        if ta.len() != tb.len() {
            return false;
        }
        ta.iter()
            .all(|(&x, &y)| tb.get(&map[x as usize]) == Some(&map[y as usize]))
    };
    if a.pr.len() != b.pr.len() {
        return false;
    }
    for (ta, tb) in a.pr.iter().zip(&b.pr) {
        if !fn_match(ta, tb) {
            return false;
        }
    }
    for (fam_a, fam_b) in [(&a.p_b, &b.p_b), (&a.p_u, &b.p_u), (&a.t_e, &b.t_e)] {
        if fam_a.keys().ne(fam_b.keys()) {
            return false;
        }
        for (k, ta) in fam_a {
            if !fn_match(ta, &fam_b[k]) {
                return false;
            }
        }
    }
    if a.plus.len() != b.plus.len() {
        return false;
    }
    for (&(x, y), &z) in &a.plus {
        if b.plus.get(&(map[x as usize], map[y as usize])) != Some(&map[z as usize]) {
            return false;
        }
    }
    match (&a.sim, &b.sim) {
        (None, None) => {}
        (Some(sa), Some(sb)) => {
            if sa.len() != sb.len() {
                return false;
            }
            for &(x, y) in sa {
                if !sb.contains(&(map[x as usize], map[y as usize])) {
                    return false;
                }
            }
        }
        _ => return false,
    }
    true
}

fn check_uniformizes(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    diff: &Colouring,
    f: &PartialUniformizer,
) -> Result<()> {
    for &delta in sys.s() {
        if delta > f.mu() {
            continue;
        }
        let steps = sys.ladder(delta).expect("delta in S");
        let target = diff.value(delta).expect("delta in S");
        for n in filter.window() {
            if f.eval(ctx, &steps[n])? != target[n] {
                return Err(Error::NotAUniformizer { delta });
            }
        }
    }
    Ok(())
}

/// Build the isomorphism between the mu-restrictions of the models of a
/// and b induced by a uniformizer of b - a: vector points shift by f(y),
/// each delta's zero function moves to f(z_delta) - (b - a)(delta).
pub fn iso_from_uniformizer(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    a: &Colouring,
    b: &Colouring,
    f: &PartialUniformizer,
) -> Result<StructureMap> {
    let diff = Colouring::difference(ctx, b, a)?;
    check_uniformizes(ctx, sys, filter, &diff, f)?;
    let mu = f.mu();
    let ma = CodedModel::build(ctx, sys, filter, a)?.restrict(mu)?;
    let mb = CodedModel::build(ctx, sys, filter, b)?.restrict(mu)?;

    let mut mapping = vec![0u32; ma.n_elements() as usize];
    for id in 0..ma.n_elements() as u32 {
        mapping[id as usize] = match ma.label(id) {
            Label::V { copy, y, c } => {
                let yv = SparseVec::from_dense_code(ctx, mu, y);
                let fy = f.eval(ctx, &yv)?;
                mb.vpoint_id(copy, y, ctx.add(fy, FieldElem(c)).code())
            }
            Label::S { copy, di, u } => {
                let delta = ma.s_included()[di];
                let steps = sys.ladder(delta).expect("delta in S");
                let dv = diff.value(delta).expect("delta in S");
                let hat: Vec<FieldElem> = (0..sys.length())
                    .map(|n| Ok(ctx.sub(f.eval(ctx, &steps[n])?, dv[n])))
                    .collect::<Result<_>>()?;
                let hat = mb
                    .od_encode(&hat)
                    .ok_or(Error::NotAUniformizer { delta })?;
                mb.spoint_id(copy, di, mb.od_add(hat, u))
            }
        };
    }
    let ok = verify_iso(&ma.to_structure()?, &mb.to_structure()?, &mapping);
    if !ok {
        return Err(Error::MalformedIso("constructed map failed verification".into()));
    }
    Ok(StructureMap {
        mapping,
        verified: true,
    })
}

/// Read the uniformizer back off an isomorphism of restrictions: f(xi)
/// is the colour shift of the generator line of xi.
pub fn uniformizer_from_iso(
    ctx: &FieldCtx,
    ma: &CodedModel,
    mb: &CodedModel,
    map: &[u32],
) -> Result<PartialUniformizer> {
    if !verify_iso(&ma.to_structure()?, &mb.to_structure()?, map) {
        return Err(Error::MalformedIso("relation preservation fails".into()));
    }
    let mu = ma.mu();
    let mut values = Vec::with_capacity(mu as usize);
    for xi in 0..mu {
        let code = SparseVec::generator(mu, xi)?.dense_code(ctx);
        let src = ma.vpoint_id(0, code, 0);
        match mb.label(map[src as usize]) {
            Label::V { y, c, .. } if y == code => values.push(FieldElem(c)),
            _ => {
                return Err(Error::MalformedIso(format!(
                    "generator line {xi} not fixed setwise"
                )))
            }
        }
    }
    let f = PartialUniformizer::new(ma.sys().horizon(), values)?;
    let diff = Colouring::difference(ctx, mb.colouring(0), ma.colouring(0))?;
    check_uniformizes(ctx, ma.sys(), ma.filter(), &diff, &f)
        .map_err(|_| Error::MalformedIso("extracted function does not uniformize".into()))?;
    Ok(f)
}

/// Read a colouring out of an anonymous coded-model-shaped structure:
/// pick a witness in each R_delta, rebuild the vector part by additive
/// closure over chosen generator images, then recover the colours from
/// the Pr tables. Correct at coset level only.
pub fn decode_structure(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    st: &Structure,
) -> Result<(Colouring, StructureMap)> {
    if st.sim.is_some() {
        return Err(Error::NotCoded("tagged unions cannot be decoded".into()));
    }
    let q = ctx.order();
    let lam = sys.horizon();
    let nvy = q
        .checked_pow(lam)
        .ok_or_else(|| Error::TooLarge("q^horizon overflows".into()))?;
    if st.r_vec.len() as u64 != nvy || !st.r_s.keys().eq(sys.s().iter()) {
        return Err(Error::NotCoded("unary blocks do not match the instance".into()));
    }

    // identity of the vector part: the unique idempotent of the zero line
    let zero_block = &st.r_vec[&0];
    let e0 = *zero_block
        .iter()
        .find(|&&e| st.plus.get(&(e, e)) == Some(&e))
        .ok_or_else(|| Error::NotCoded("no additive identity".into()))?;

    // arbitrary generator images, first in domain order
    let mut gen_img = vec![0u32; lam as usize];
    for xi in 0..lam {
        let code = SparseVec::generator(lam, xi)?.dense_code(ctx);
        let block = st
            .r_vec
            .get(&code)
            .ok_or_else(|| Error::NotCoded(format!("missing generator line {xi}")))?;
        gen_img[xi as usize] = *block.first().ok_or_else(|| {
            Error::NotCoded(format!("empty generator line {xi}"))
        })?;
    }

    let vimg = additive_closure(ctx, st, lam, e0, &gen_img)?;

    // one witness per delta and the colours it induces
    let mut values = vec![];
    let mut s_elem = BTreeMap::new();
    for &delta in sys.s() {
        let s_delta = *st.r_s[&delta]
            .first()
            .ok_or_else(|| Error::NotCoded(format!("empty R_{delta}")))?;
        s_elem.insert(delta, s_delta);
        let steps = sys.ladder(delta).expect("delta in S");
        let mut tuple = vec![];
        for n in 0..sys.length() {
            let r = *st.pr[n]
                .get(&s_delta)
                .ok_or_else(|| Error::NotCoded(format!("Pr_{n} undefined on R_{delta}")))?;
            let z = vimg[steps[n].dense_code(ctx) as usize];
            let c = (0..q)
                .find(|&c| st.p_b.get(&c).and_then(|t| t.get(&z)) == Some(&r))
                .ok_or_else(|| {
                    Error::NotCoded(format!("no colour matches Pr_{n} at delta {delta}"))
                })?;
            tuple.push(FieldElem(c));
        }
        values.push((delta, tuple));
    }
    let b = Colouring::new(sys.length(), values)?;

    let mb = CodedModel::build(ctx, sys, filter, &b)?;
    let mut mapping = vec![0u32; mb.n_elements() as usize];
    for id in 0..mb.n_elements() as u32 {
        mapping[id as usize] = match mb.label(id) {
            Label::V { y, c, .. } => *st
                .p_b
                .get(&c)
                .and_then(|t| t.get(&vimg[y as usize]))
                .ok_or_else(|| Error::NotCoded("P_b table incomplete".into()))?,
            Label::S { di, u, .. } => {
                let delta = mb.s_included()[di];
                *st.p_u
                    .get(&u.0)
                    .and_then(|t| t.get(&s_elem[&delta]))
                    .ok_or_else(|| Error::NotCoded("P_u table incomplete".into()))?
            }
        };
    }
    if !verify_iso(&mb.to_structure()?, st, &mapping) {
        return Err(Error::NotCoded("decoded map is not an isomorphism".into()));
    }
    Ok((
        b,
        StructureMap {
            mapping,
            verified: true,
        },
    ))
}

/// Images of every vector, folded from generator images through the
/// target's own + and T_e tables.
fn additive_closure(
    ctx: &FieldCtx,
    st: &Structure,
    lam: u32,
    e0: u32,
    gen_img: &[u32],
) -> Result<Vec<u32>> {
    let q = ctx.order();
    let nvy = q.pow(lam);
    let mut vimg = vec![0u32; nvy as usize];
    for ycode in 0..nvy {
        let mut acc = e0;
        let mut c = ycode;
        for xi in 0..lam {
            let d = c % q;
            c /= q;
            if d == 0 {
                continue;
            }
            let term = *st
                .t_e
                .get(&d)
                .and_then(|t| t.get(&gen_img[xi as usize]))
                .ok_or_else(|| Error::NotCoded("T_e table incomplete".into()))?;
            acc = *st
                .plus
                .get(&(acc, term))
                .ok_or_else(|| Error::NotCoded("+ table incomplete".into()))?;
        }
        vimg[ycode as usize] = acc;
    }
    Ok(vimg)
}

/// Structure-guided exhaustive isomorphism search from a canonical model
/// into an anonymous structure: try every assignment of generator
/// images, force the rest by additivity and the Pr tables, verify.
pub fn brute_iso(m: &CodedModel, target: &Structure) -> Result<Option<StructureMap>> {
    if m.has_sim() || target.sim.is_some() {
        return Err(Error::TooLarge(
            "guided search handles single copies; decompose unions first".into(),
        ));
    }
    let ctx = m.ctx().clone();
    let sys = m.sys().clone();
    let q = ctx.order();
    let mu = m.mu();
    if m.n_elements() as usize != target.n {
        return Ok(None);
    }
    let nvy = q.pow(mu);
    if target.r_vec.len() as u64 != nvy {
        return Ok(None);
    }
    let Some(zero_block) = target.r_vec.get(&0) else {
        return Ok(None);
    };
    let Some(&e0) = zero_block
        .iter()
        .find(|&&e| target.plus.get(&(e, e)) == Some(&e))
    else {
        return Ok(None);
    };

    let mut gen_blocks: Vec<&Vec<u32>> = Vec::with_capacity(mu as usize);
    for xi in 0..mu {
        let gcode = SparseVec::generator(mu, xi)?.dense_code(&ctx);
        match target.r_vec.get(&gcode) {
            Some(block) => gen_blocks.push(block),
            None => return Ok(None),
        }
    }

    let total = q
        .checked_pow(mu)
        .ok_or_else(|| Error::TooLarge("q^mu candidate space overflows".into()))?;
    let ma_struct = m.to_structure()?;
    let mut gen_img = vec![0u32; mu as usize];
    'cand: for mut cand in 0..total {
        for xi in 0..mu as usize {
            let pick = (cand % q) as usize;
            cand /= q;
            if pick >= gen_blocks[xi].len() {
                continue 'cand;
            }
            gen_img[xi] = gen_blocks[xi][pick];
        }
        let Ok(vimg) = additive_closure(&ctx, target, mu, e0, &gen_img) else {
            continue;
        };
        // find the witness spoint for each delta
        let mut s_img: BTreeMap<u32, u32> = BTreeMap::new();
        let mut ok = true;
        for (di, &delta) in m.s_included().iter().enumerate() {
            let steps = sys.ladder(delta).expect("delta in S");
            let a = m.colouring(0).value(delta).expect("delta in S");
            let Some(block) = target.r_s.get(&delta) else {
                ok = false;
                break;
            };
            let want: Vec<u32> = (0..sys.length())
                .map(|n| {
                    let z = vimg[steps[n].dense_code(&ctx) as usize];
                    target
                        .p_b
                        .get(&a[n].code())
                        .and_then(|t| t.get(&z))
                        .copied()
                        .unwrap_or(u32::MAX)
                })
                .collect();
            let found = block.iter().find(|&&s| {
                (0..sys.length()).all(|n| target.pr[n].get(&s) == Some(&want[n]))
            });
            match found {
                Some(&s) => {
                    s_img.insert(delta, s);
                    let _ = di;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let mut mapping = vec![0u32; m.n_elements() as usize];
        let mut valid = true;
        for id in 0..m.n_elements() as u32 {
            mapping[id as usize] = match m.label(id) {
                Label::V { y, c, .. } => {
                    match target.p_b.get(&c).and_then(|t| t.get(&vimg[y as usize])) {
                        Some(&t) => t,
                        None => {
                            valid = false;
                            break;
                        }
                    }
                }
                Label::S { di, u, .. } => {
                    let delta = m.s_included()[di];
                    match target.p_u.get(&u.0).and_then(|t| t.get(&s_img[&delta])) {
                        Some(&t) => t,
                        None => {
                            valid = false;
                            break;
                        }
                    }
                }
            };
        }
        if valid && verify_iso(&ma_struct, target, &mapping) {
            return Ok(Some(StructureMap {
                mapping,
                verified: true,
            }));
        }
    }
    Ok(None)
}

/// Raw backtracking isomorphism search with forward propagation through
/// the function tables. Independent of the guided search; capped at 128
/// elements.
pub fn brute_iso_raw(a: &Structure, b: &Structure) -> Result<Option<Vec<u32>>> {
    if a.n > RAW_ISO_CAP || b.n > RAW_ISO_CAP {
        return Err(Error::TooLarge(format!(
            "raw search capped at {RAW_ISO_CAP} elements"
        )));
    }
    if a.n != b.n {
        return Ok(None);
    }
    // unary label of each element: (kind, key)
    fn labels(st: &Structure) -> Vec<(u8, u64)> {
        let mut out = vec![(u8::MAX, 0u64); st.n];
        for (&y, block) in &st.r_vec {
            for &e in block {
                out[e as usize] = (0, y);
            }
        }
        for (&d, block) in &st.r_s {
            for &e in block {
                out[e as usize] = (1, d as u64);
            }
        }
        out
    }
    let la = labels(a);
    let lb = labels(b);
    let mut by_label: BTreeMap<(u8, u64), Vec<u32>> = BTreeMap::new();
    for (i, &l) in lb.iter().enumerate() {
        by_label.entry(l).or_default().push(i as u32);
    }
    // function tables flattened for propagation
    let mut tables: Vec<(&BTreeMap<u32, u32>, &BTreeMap<u32, u32>)> = vec![];
    for (ta, tb) in a.pr.iter().zip(&b.pr) {
        tables.push((ta, tb));
    }
    for (fam_a, fam_b) in [(&a.p_b, &b.p_b), (&a.p_u, &b.p_u), (&a.t_e, &b.t_e)] {
        if fam_a.keys().ne(fam_b.keys()) {
            return Ok(None);
        }
        for (k, ta) in fam_a {
            tables.push((ta, &fam_b[k]));
        }
    }
    let mut plus_by_elem: Vec<Vec<(u32, u32)>> = vec![vec![]; a.n];
    for (&(x, y), _) in &a.plus {
        plus_by_elem[x as usize].push((x, y));
        if x != y {
            plus_by_elem[y as usize].push((x, y));
        }
    }

    struct Search<'s> {
        a: &'s Structure,
        b: &'s Structure,
        la: &'s [(u8, u64)],
        lb: &'s [(u8, u64)],
        tables: &'s [(&'s BTreeMap<u32, u32>, &'s BTreeMap<u32, u32>)],
        plus_by_elem: &'s [Vec<(u32, u32)>],
        map: Vec<Option<u32>>,
        inv: Vec<Option<u32>>,
    }

    impl Search<'_> {
        /// Assign x -> y and propagate forced images; returns the list
        /// of assignments made, or None on conflict (caller unwinds).
        fn assign(&mut self, x: u32, y: u32, trail: &mut Vec<u32>) -> bool {
            match (self.map[x as usize], self.inv[y as usize]) {
                (Some(cur), _) => return cur == y,
                (None, Some(_)) => return false,
                (None, None) => {}
            }
            if self.la[x as usize] != self.lb[y as usize] {
                return false;
            }
            self.map[x as usize] = Some(y);
            self.inv[y as usize] = Some(x);
            trail.push(x);
            for &(ta, tb) in self.tables {
                match (ta.get(&x), tb.get(&y)) {
                    (Some(&fx), Some(&fy)) => {
                        if !self.assign(fx, fy, trail) {
                            return false;
                        }
                    }
                    (None, None) => {}
                    _ => return false,
                }
            }
            for &(u, v) in &self.plus_by_elem[x as usize].to_vec() {
                let (mu, mv) = (self.map[u as usize], self.map[v as usize]);
                if let (Some(mu), Some(mv)) = (mu, mv) {
                    let z = self.a.plus[&(u, v)];
                    match self.b.plus.get(&(mu, mv)) {
                        Some(&mz) => {
                            if !self.assign(z, mz, trail) {
                                return false;
                            }
                        }
                        None => return false,
                    }
                }
            }
            if let (Some(sa), Some(sb)) = (&self.a.sim, &self.b.sim) {
                for (u, mu) in self.map.iter().enumerate() {
                    if let Some(mu) = mu {
                        let lhs = sa.contains(&(x, u as u32));
                        let rhs = sb.contains(&(y, *mu));
                        if lhs != rhs {
                            return false;
                        }
                    }
                }
            }
            true
        }

        fn unwind(&mut self, trail: &[u32], from: usize) {
            for &x in &trail[from..] {
                let y = self.map[x as usize].take().unwrap();
                self.inv[y as usize] = None;
            }
        }

        fn solve(&mut self, by_label: &BTreeMap<(u8, u64), Vec<u32>>) -> bool {
            let Some(x) = self.map.iter().position(|m| m.is_none()) else {
                return true;
            };
            let x = x as u32;
            let Some(cands) = by_label.get(&self.la[x as usize]) else {
                return false;
            };
            for &y in cands {
                if self.inv[y as usize].is_some() {
                    continue;
                }
                let mut trail = vec![];
                if self.assign(x, y, &mut trail) && self.solve(by_label) {
                    return true;
                }
                self.unwind(&trail, 0);
            }
            false
        }
    }

    let mut search = Search {
        a,
        b,
        la: &la,
        lb: &lb,
        tables: &tables,
        plus_by_elem: &plus_by_elem,
        map: vec![None; a.n],
        inv: vec![None; b.n],
    };
    if search.solve(&by_label) {
        let map: Vec<u32> = search.map.iter().map(|m| m.unwrap()).collect();
        debug_assert!(verify_iso(a, b, &map));
        Ok(Some(map))
    } else {
        Ok(None)
    }
}

/// Count isomorphism classes among the coded models of every colouring,
/// entirely with the exhaustive isomorphism search.
pub fn iso_class_count(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
) -> Result<u64> {
    let q = ctx.order();
    let dims = (sys.s().len() * sys.length()) as u32;
    let budget = crate::quotient::oracle_budget().min(1 << 12);
    let ncol = q
        .checked_pow(dims)
        .filter(|&n| n <= budget)
        .ok_or_else(|| Error::TooLarge("too many colourings for iso cross-check".into()))?;
    let mut reps: Vec<CodedModel> = vec![];
    for code in 0..ncol {
        let c = Colouring::from_dense_code(ctx, sys.length(), sys.s(), code);
        let m = CodedModel::build(ctx, sys, filter, &c)?;
        let st = m.to_structure()?;
        let mut matched = false;
        for r in &reps {
            if brute_iso(r, &st)?.is_some() {
                matched = true;
                break;
            }
        }
        if !matched {
            reps.push(m);
        }
    }
    Ok(reps.len() as u64)
}

/// No(M) at finite scale: the quotient class count, optionally
/// cross-checked against the isomorphism-class count of the coded
/// models.
pub fn classify_no(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    cross_check: bool,
) -> Result<(u64, Option<u64>)> {
    let report = crate::quotient::class_count(ctx, sys, filter, crate::quotient::DEFAULT_REP_CAP)?;
    let checked = if cross_check {
        Some(iso_class_count(ctx, sys, filter)?)
    } else {
        None
    };
    Ok((report.class_count, checked))
}

/// Disjoint unions with the same-copy relation are isomorphic iff the
/// copies can be matched pairwise isomorphically.
pub fn union_iso(u1: &CodedModel, u2: &CodedModel) -> Result<bool> {
    let l = u1.copies();
    if l != u2.copies() {
        return Ok(false);
    }
    let mut pair: Vec<Vec<bool>> = vec![vec![false; l]; l];
    for i in 0..l {
        let mi = u1.copy_model(i)?;
        for j in 0..l {
            let st = u2.copy_model(j)?.to_structure()?;
            pair[i][j] = brute_iso(&mi, &st)?.is_some();
        }
    }
    // perfect matching over at most a handful of copies
    fn matching(pair: &[Vec<bool>], used: &mut [bool], i: usize) -> bool {
        if i == pair.len() {
            return true;
        }
        for j in 0..pair.len() {
            if pair[i][j] && !used[j] {
                used[j] = true;
                if matching(pair, used, i + 1) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    Ok(matching(&pair, &mut vec![false; l], 0))
}

/// Number of multisets of size l over nu isomorphism classes:
/// C(nu + l - 1, l). For nu = 2 this is l + 1.
pub fn union_class_count(nu: u64, l: u64) -> u64 {
    let mut num = 1u64;
    let mut den = 1u64;
    for k in 1..=l {
        num *= nu + l - k;
        den *= k;
    }
    num / den
}

/// Count classes of l-fold tagged unions built over the given pairwise
/// non-equivalent representatives, optionally verifying the closed form
/// by brute classification.
pub fn classify_union(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    reps: &[Colouring],
    l: usize,
    cross_check: bool,
) -> Result<(u64, Option<u64>)> {
    let nu = reps.len() as u64;
    if nu == 0 || l == 0 {
        return Err(Error::InfeasibleParams("need nu >= 1 and l >= 1".into()));
    }
    let count = union_class_count(nu, l as u64);
    let checked = if cross_check {
        let models: Vec<CodedModel> = reps
            .iter()
            .map(|c| CodedModel::build(ctx, sys, filter, c))
            .collect::<Result<_>>()?;
        let ntuples = (nu as usize).checked_pow(l as u32).ok_or_else(|| {
            Error::TooLarge("tuple space overflows".into())
        })?;
        let mut class_reps: Vec<CodedModel> = vec![];
        for mut t in 0..ntuples {
            let parts: Vec<&CodedModel> = (0..l)
                .map(|_| {
                    let m = &models[t % nu as usize];
                    t /= nu as usize;
                    m
                })
                .collect();
            let u = CodedModel::disjoint_union(&parts, true)?;
            let mut matched = false;
            for r in &class_reps {
                if union_iso(r, &u)? {
                    matched = true;
                    break;
                }
            }
            if !matched {
                class_reps.push(u);
            }
        }
        Some(class_reps.len() as u64)
    } else {
        None
    };
    Ok((count, checked))
}

#[derive(Debug, Clone)]
pub enum ExtensionCheck {
    Holds,
    /// A restriction isomorphism (given by its uniformizer) with no
    /// extension.
    Counterexample(PartialUniformizer),
}

/// The back-and-forth criterion at finite scale: every isomorphism of
/// mu0-restrictions (equivalently every prefix uniformizer of b - a)
/// must extend to the mu1-restrictions.
pub fn check_extension_property(
    ctx: &FieldCtx,
    sys: &LadderSystem,
    filter: &FilterD,
    a: &Colouring,
    b: &Colouring,
    mu0: u32,
    mu1: u32,
) -> Result<ExtensionCheck> {
    if mu0 > mu1 || mu1 > sys.horizon() {
        return Err(Error::HorizonMismatch(mu0, mu1));
    }
    let q = ctx.order();
    let budget = crate::quotient::oracle_budget();
    let n0 = q
        .checked_pow(mu0)
        .filter(|&n| n <= budget)
        .ok_or_else(|| Error::TooLarge("q^mu0 exceeds oracle budget".into()))?;
    let nsuf = q
        .checked_pow(mu1 - mu0)
        .filter(|&n| n <= budget)
        .ok_or_else(|| Error::TooLarge("q^(mu1-mu0) exceeds oracle budget".into()))?;
    let diff = Colouring::difference(ctx, b, a)?;

    let decode = |mut code: u64, len: u32| -> Vec<FieldElem> {
        (0..len)
            .map(|_| {
                let d = FieldElem(code % q);
                code /= q;
                d
            })
            .collect()
    };

    for f0code in 0..n0 {
        let f0 = PartialUniformizer::new(sys.horizon(), decode(f0code, mu0))?;
        if check_uniformizes(ctx, sys, filter, &diff, &f0).is_err() {
            continue;
        }
        let mut extendable = false;
        for sufcode in 0..nsuf {
            let mut vals = f0.values().to_vec();
            vals.extend(decode(sufcode, mu1 - mu0));
            let f1 = PartialUniformizer::new(sys.horizon(), vals)?;
            if check_uniformizes(ctx, sys, filter, &diff, &f1).is_ok() {
                extendable = true;
                break;
            }
        }
        if !extendable {
            return Ok(ExtensionCheck::Counterexample(f0));
        }
    }
    Ok(ExtensionCheck::Holds)
}
