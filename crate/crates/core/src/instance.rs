//! Line-oriented instance files ([field] / [params] / [ladders] /
//! [colourings]) and a matching serialization for anonymous structures.
//! Both formats are diffable UTF-8 meant for hand-authoring fixtures.

use crate::colouring::{Colouring, FilterD};
use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::ladder::LadderSystem;
use crate::model::Structure;
use crate::vector::SparseVec;
use std::collections::{BTreeMap, BTreeSet};

/// A fully validated instance: the field, the ladder system, the filter
/// window, and any named colourings the file carries.
#[derive(Debug, Clone)]
pub struct Instance {
    pub ctx: FieldCtx,
    pub sys: LadderSystem,
    pub filter: FilterD,
    pub colourings: Vec<(String, Colouring)>,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// "(xi:coeff,...)" -> sparse vector.
fn parse_vec(s: &str, horizon: u32, ctx: &FieldCtx, line: usize) -> Result<SparseVec> {
    let body = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| perr(line, format!("expected (xi:coeff,...), got {s:?}")))?;
    let mut entries = vec![];
    if !body.trim().is_empty() {
        for part in body.split(',') {
            let (xi, c) = part
                .split_once(':')
                .ok_or_else(|| perr(line, format!("bad vector entry {part:?}")))?;
            let xi: u32 = xi
                .trim()
                .parse()
                .map_err(|_| perr(line, format!("bad coordinate {xi:?}")))?;
            let c: u64 = c
                .trim()
                .parse()
                .map_err(|_| perr(line, format!("bad coefficient {c:?}")))?;
            let c = ctx
                .elem(c)
                .map_err(|_| perr(line, format!("coefficient {c} not in the field")))?;
            entries.push((xi, c));
        }
    }
    SparseVec::from_entries(horizon, entries)
        .map_err(|e| perr(line, format!("invalid vector: {e}")))
}

fn emit_vec(v: &SparseVec) -> String {
    let parts: Vec<String> = v.iter().map(|(xi, c)| format!("{xi}:{}", c.code())).collect();
    format!("({})", parts.join(","))
}

/// Whitespace-split a ladder line into vector tokens, respecting the
/// parentheses.
fn vec_tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

pub fn parse_instance_str(text: &str) -> Result<Instance> {
    let mut section = String::new();
    let mut field: Option<(FieldCtx, usize)> = None;
    let mut params: BTreeMap<String, (String, usize)> = BTreeMap::new();
    let mut ladder_lines: Vec<(usize, String)> = vec![];
    let mut colouring_lines: Vec<(usize, String)> = vec![];

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            match section.as_str() {
                "field" | "params" | "filter" | "ladders" | "colourings" => {}
                other => return Err(perr(line, format!("unknown section [{other}]"))),
            }
            continue;
        }
        match section.as_str() {
            "field" => {
                let ctx = FieldCtx::parse_spec(t).map_err(|e| perr(line, e.to_string()))?;
                field = Some((ctx, line));
            }
            "params" | "filter" => {
                let (k, v) = t
                    .split_once('=')
                    .ok_or_else(|| perr(line, format!("expected key = value, got {t:?}")))?;
                params.insert(k.trim().to_string(), (v.trim().to_string(), line));
            }
            "ladders" => ladder_lines.push((line, t.to_string())),
            "colourings" => colouring_lines.push((line, t.to_string())),
            "" => return Err(perr(line, "content before the first section header")),
            _ => unreachable!(),
        }
    }

    let (ctx, _) = field.ok_or_else(|| perr(0, "missing [field] section"))?;
    let get = |key: &str| -> Result<(String, usize)> {
        params
            .get(key)
            .cloned()
            .ok_or_else(|| perr(0, format!("missing parameter {key}")))
    };
    let (h, hl) = get("horizon")?;
    let horizon: u32 = h.parse().map_err(|_| perr(hl, "bad horizon"))?;
    let (l, ll) = get("length")?;
    let length: usize = l.parse().map_err(|_| perr(ll, "bad length"))?;

    let filter = match params.get("window") {
        Some((w, wl)) => {
            let idx: Vec<usize> = w
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| perr(*wl, "bad window index")))
                .collect::<Result<_>>()?;
            FilterD::new(length, idx).map_err(|e| perr(*wl, e.to_string()))?
        }
        None => FilterD::tail(length)?,
    };

    let mut ladders: Vec<(u32, Vec<SparseVec>)> = vec![];
    for (line, t) in &ladder_lines {
        let (d, rest) = t
            .split_once(':')
            .ok_or_else(|| perr(*line, format!("expected delta: vectors, got {t:?}")))?;
        let delta: u32 = d
            .trim()
            .parse()
            .map_err(|_| perr(*line, format!("bad delta {d:?}")))?;
        let steps: Vec<SparseVec> = vec_tokens(rest)
            .into_iter()
            .map(|tok| parse_vec(tok, horizon, &ctx, *line))
            .collect::<Result<_>>()?;
        if steps.len() != length {
            return Err(perr(
                *line,
                format!("delta {delta} has {} steps, expected {length}", steps.len()),
            ));
        }
        if (delta as usize) < length || delta >= horizon {
            return Err(Error::Validation {
                clause: "delta-in-range",
                delta,
                step: 0,
            });
        }
        ladders.push((delta, steps));
    }
    let sys = LadderSystem::new(horizon, length, ladders)?;
    let violations = sys.validate();
    if let Some(v) = violations.first() {
        return Err(Error::Validation {
            clause: v.clause,
            delta: v.delta,
            step: v.step,
        });
    }

    let mut colourings = vec![];
    let mut names = BTreeSet::new();
    for (line, t) in &colouring_lines {
        let (name, rest) = t
            .split_once(':')
            .ok_or_else(|| perr(*line, format!("expected name: values, got {t:?}")))?;
        let name = name.trim().to_string();
        if !names.insert(name.clone()) {
            return Err(perr(*line, format!("duplicate colouring {name:?}")));
        }
        let mut values = vec![];
        for part in rest.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (d, vals) = part
                .split_once("->")
                .ok_or_else(|| perr(*line, format!("expected delta -> values, got {part:?}")))?;
            let delta: u32 = d
                .trim()
                .parse()
                .map_err(|_| perr(*line, format!("bad delta {d:?}")))?;
            if sys.ladder(delta).is_none() {
                return Err(perr(*line, format!("delta {delta} is not in S")));
            }
            let tuple: Vec<FieldElem> = vals
                .split(',')
                .map(|c| {
                    let c: u64 = c
                        .trim()
                        .parse()
                        .map_err(|_| perr(*line, format!("bad colour {c:?}")))?;
                    ctx.elem(c)
                        .map_err(|_| perr(*line, format!("colour {c} not in the field")))
                })
                .collect::<Result<_>>()?;
            values.push((delta, tuple));
        }
        let c = Colouring::new(length, values).map_err(|e| perr(*line, e.to_string()))?;
        if !c.matches(&sys) {
            return Err(perr(
                *line,
                format!("colouring {name:?} does not cover S exactly"),
            ));
        }
        colourings.push((name, c));
    }

    Ok(Instance {
        ctx,
        sys,
        filter,
        colourings,
    })
}

pub fn parse_instance(path: &std::path::Path) -> Result<Instance> {
    parse_instance_str(&std::fs::read_to_string(path)?)
}

pub fn emit_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str("[field]\n");
    out.push_str(&inst.ctx.spec_string());
    out.push('\n');
    out.push_str("\n[params]\n");
    out.push_str(&format!("horizon = {}\n", inst.sys.horizon()));
    out.push_str(&format!("length = {}\n", inst.sys.length()));
    let window: Vec<String> = inst.filter.window().map(|n| n.to_string()).collect();
    out.push_str(&format!("window = {}\n", window.join(",")));
    out.push_str("\n[ladders]\n");
    for &delta in inst.sys.s() {
        let steps: Vec<String> = inst
            .sys
            .ladder(delta)
            .expect("delta in S")
            .iter()
            .map(emit_vec)
            .collect();
        out.push_str(&format!("{delta}: {}\n", steps.join(" ")));
    }
    if !inst.colourings.is_empty() {
        out.push_str("\n[colourings]\n");
        for (name, c) in &inst.colourings {
            let parts: Vec<String> = c
                .iter()
                .map(|(delta, vals)| {
                    let vs: Vec<String> = vals.iter().map(|v| v.code().to_string()).collect();
                    format!("{delta} -> {}", vs.join(","))
                })
                .collect();
            out.push_str(&format!("{name}: {}\n", parts.join("; ")));
        }
    }
    out
}

fn emit_fn_table(out: &mut String, t: &BTreeMap<u32, u32>) {
    let parts: Vec<String> = t.iter().map(|(x, y)| format!("{x}->{y}")).collect();
    out.push_str(&parts.join(" "));
    out.push('\n');
}

fn parse_fn_table(s: &str, line: usize) -> Result<BTreeMap<u32, u32>> {
    let mut t = BTreeMap::new();
    for part in s.split_whitespace() {
        let (x, y) = part
            .split_once("->")
            .ok_or_else(|| perr(line, format!("bad table entry {part:?}")))?;
        let x: u32 = x.parse().map_err(|_| perr(line, "bad element id"))?;
        let y: u32 = y.parse().map_err(|_| perr(line, "bad element id"))?;
        t.insert(x, y);
    }
    Ok(t)
}

/// Serialize an anonymous structure. Elements appear only as ids, so the
/// file reveals nothing about which colouring produced it.
pub fn emit_structure(st: &Structure) -> String {
    let mut out = String::new();
    out.push_str("[structure]\n");
    out.push_str(&format!("n = {}\n", st.n));
    out.push_str(&format!("length = {}\n", st.length));
    out.push_str("\n[r_vec]\n");
    for (y, block) in &st.r_vec {
        let ids: Vec<String> = block.iter().map(|e| e.to_string()).collect();
        out.push_str(&format!("{y}: {}\n", ids.join(",")));
    }
    out.push_str("\n[r_s]\n");
    for (d, block) in &st.r_s {
        let ids: Vec<String> = block.iter().map(|e| e.to_string()).collect();
        out.push_str(&format!("{d}: {}\n", ids.join(",")));
    }
    out.push_str("\n[pr]\n");
    for (n, t) in st.pr.iter().enumerate() {
        out.push_str(&format!("{n}: "));
        emit_fn_table(&mut out, t);
    }
    for (name, fam) in [("p_b", &st.p_b), ("p_u", &st.p_u), ("t_e", &st.t_e)] {
        out.push_str(&format!("\n[{name}]\n"));
        for (k, t) in fam {
            out.push_str(&format!("{k}: "));
            emit_fn_table(&mut out, t);
        }
    }
    out.push_str("\n[plus]\n");
    for (&(x, y), &z) in &st.plus {
        out.push_str(&format!("{x},{y}->{z}\n"));
    }
    if let Some(sim) = &st.sim {
        out.push_str("\n[sim]\n");
        for &(x, y) in sim {
            out.push_str(&format!("{x},{y}\n"));
        }
    }
    out
}

pub fn parse_structure_str(text: &str) -> Result<Structure> {
    let mut section = String::new();
    let mut n = None;
    let mut length = None;
    let mut r_vec: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    let mut r_s: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut pr: Vec<(usize, BTreeMap<u32, u32>)> = vec![];
    let mut p_b: BTreeMap<u64, BTreeMap<u32, u32>> = BTreeMap::new();
    let mut p_u: BTreeMap<u64, BTreeMap<u32, u32>> = BTreeMap::new();
    let mut t_e: BTreeMap<u64, BTreeMap<u32, u32>> = BTreeMap::new();
    let mut plus: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    let mut sim: Option<BTreeSet<(u32, u32)>> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            if section == "sim" {
                sim = Some(BTreeSet::new());
            }
            continue;
        }
        match section.as_str() {
            "structure" => {
                let (k, v) = t
                    .split_once('=')
                    .ok_or_else(|| perr(line, "expected key = value"))?;
                let v = v.trim();
                match k.trim() {
                    "n" => n = Some(v.parse::<usize>().map_err(|_| perr(line, "bad n"))?),
                    "length" => {
                        length = Some(v.parse::<usize>().map_err(|_| perr(line, "bad length"))?)
                    }
                    other => return Err(perr(line, format!("unknown key {other:?}"))),
                }
            }
            "r_vec" | "r_s" | "pr" | "p_b" | "p_u" | "t_e" => {
                let (k, rest) = t
                    .split_once(':')
                    .ok_or_else(|| perr(line, "expected key: entries"))?;
                let k = k.trim();
                match section.as_str() {
                    "r_vec" | "r_s" => {
                        let block: Vec<u32> = rest
                            .split(',')
                            .filter(|s| !s.trim().is_empty())
                            .map(|s| s.trim().parse().map_err(|_| perr(line, "bad element id")))
                            .collect::<Result<_>>()?;
                        if section == "r_vec" {
                            let y: u64 = k.parse().map_err(|_| perr(line, "bad vector code"))?;
                            r_vec.insert(y, block);
                        } else {
                            let d: u32 = k.parse().map_err(|_| perr(line, "bad delta"))?;
                            r_s.insert(d, block);
                        }
                    }
                    "pr" => {
                        let idx: usize = k.parse().map_err(|_| perr(line, "bad index"))?;
                        pr.push((idx, parse_fn_table(rest, line)?));
                    }
                    fam => {
                        let key: u64 = k.parse().map_err(|_| perr(line, "bad table key"))?;
                        let table = parse_fn_table(rest, line)?;
                        match fam {
                            "p_b" => p_b.insert(key, table),
                            "p_u" => p_u.insert(key, table),
                            _ => t_e.insert(key, table),
                        };
                    }
                }
            }
            "plus" => {
                let (xy, z) = t
                    .split_once("->")
                    .ok_or_else(|| perr(line, "expected x,y->z"))?;
                let (x, y) = xy
                    .split_once(',')
                    .ok_or_else(|| perr(line, "expected x,y->z"))?;
                let x: u32 = x.trim().parse().map_err(|_| perr(line, "bad element id"))?;
                let y: u32 = y.trim().parse().map_err(|_| perr(line, "bad element id"))?;
                let z: u32 = z.trim().parse().map_err(|_| perr(line, "bad element id"))?;
                plus.insert((x, y), z);
            }
            "sim" => {
                let (x, y) = t
                    .split_once(',')
                    .ok_or_else(|| perr(line, "expected x,y"))?;
                let x: u32 = x.trim().parse().map_err(|_| perr(line, "bad element id"))?;
                let y: u32 = y.trim().parse().map_err(|_| perr(line, "bad element id"))?;
                sim.as_mut().expect("section seen").insert((x, y));
            }
            "" => return Err(perr(line, "content before the first section header")),
            other => return Err(perr(line, format!("unknown section [{other}]"))),
        }
    }

    let n = n.ok_or_else(|| perr(0, "missing n"))?;
    let length = length.ok_or_else(|| perr(0, "missing length"))?;
    pr.sort_by_key(|&(i, _)| i);
    let indices: Vec<usize> = pr.iter().map(|&(i, _)| i).collect();
    if indices != (0..pr.len()).collect::<Vec<_>>() || pr.len() != length {
        return Err(perr(0, "pr tables must cover 0..length exactly"));
    }
    Ok(Structure {
        n,
        length,
        r_vec,
        r_s,
        pr: pr.into_iter().map(|(_, t)| t).collect(),
        p_b,
        p_u,
        t_e,
        plus,
        sim,
    })
}

pub fn parse_structure(path: &std::path::Path) -> Result<Structure> {
    parse_structure_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CodedModel;

    const PAPER_Q2: &str = "\
# the two-ladder overlap instance over GF(2)
[field]
GF(2^1;1,0)

[params]
horizon = 5
length = 1
window = 0

[ladders]
3: (1:1)
4: (1:1)

[colourings]
zero: 3 -> 0; 4 -> 0
one: 3 -> 1; 4 -> 1
";

    #[test]
    fn parse_paper_q2() {
        let inst = parse_instance_str(PAPER_Q2).unwrap();
        assert_eq!(inst.ctx.order(), 2);
        assert_eq!(inst.sys.horizon(), 5);
        assert_eq!(inst.sys.s(), &[3, 4]);
        assert_eq!(inst.colourings.len(), 2);
        let report =
            crate::quotient::class_count(&inst.ctx, &inst.sys, &inst.filter, 16).unwrap();
        assert_eq!(report.class_count, 2);
    }

    #[test]
    fn round_trip_instance() {
        let inst = parse_instance_str(PAPER_Q2).unwrap();
        let emitted = emit_instance(&inst);
        let again = parse_instance_str(&emitted).unwrap();
        assert_eq!(emit_instance(&again), emitted);
        assert_eq!(again.sys.s(), inst.sys.s());
        assert_eq!(again.colourings, inst.colourings);
    }

    #[test]
    fn delta_below_length_rejected() {
        let bad = "\
[field]
GF(2^1;1,0)
[params]
horizon = 5
length = 2
window = 1
[ladders]
1: (0:1) (0:1)
";
        // delta 1 cannot carry 2 strictly increasing supports below it
        assert!(matches!(
            parse_instance_str(bad),
            Err(Error::Validation { .. }) | Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn empty_s_is_valid() {
        let inst = parse_instance_str(
            "[field]\nGF(3^1;1,0)\n[params]\nhorizon = 4\nlength = 1\nwindow = 0\n[ladders]\n",
        )
        .unwrap();
        assert!(inst.sys.s().is_empty());
        let report =
            crate::quotient::class_count(&inst.ctx, &inst.sys, &inst.filter, 16).unwrap();
        assert_eq!(report.class_count, 1);
    }

    #[test]
    fn filter_section_accepted() {
        let inst = parse_instance_str(
            "[field]\nGF(2^1;1,0)\n[params]\nhorizon = 5\nlength = 2\n[filter]\nwindow = 0,1\n[ladders]\n",
        )
        .unwrap();
        assert_eq!(inst.filter.window_size(), 2);
    }

    #[test]
    fn structure_round_trip() {
        let inst = parse_instance_str(PAPER_Q2).unwrap();
        let m = CodedModel::build(&inst.ctx, &inst.sys, &inst.filter, &inst.colourings[0].1)
            .unwrap();
        let st = m.to_structure().unwrap();
        let emitted = emit_structure(&st);
        let again = parse_structure_str(&emitted).unwrap();
        assert_eq!(emit_structure(&again), emitted);
        assert!(crate::isobridge::verify_iso(
            &st,
            &again,
            &(0..st.n as u32).collect::<Vec<_>>()
        ));
    }
}
