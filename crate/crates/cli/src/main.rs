//! Batch driver: instance I/O, quotient and classification experiments,
//! structure coding/decoding, and oracle cross-checks. Exit code 0 means
//! success with all requested cross-checks passing, 1 flags an oracle
//! mismatch, 2 is a usage or validation error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ladderlab_core::colouring::is_equivalent;
use ladderlab_core::instance::{
    emit_instance, emit_structure, parse_instance, parse_structure, Instance,
};
use ladderlab_core::isobridge;
use ladderlab_core::model::CodedModel;
use ladderlab_core::quotient::{self, DEFAULT_REP_CAP};
use ladderlab_core::uniformize::{global_uniformize, solve_ladder_equations};
use ladderlab_core::{Colouring, Error, FieldCtx, GenParams, Regime};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ladderlab", version, about = "ladder-system uniformization experiments")]
struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

#[derive(Args)]
struct InstanceArg {
    /// Instance file.
    file: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random instance and print it.
    Gen {
        #[arg(long, default_value = "0")]
        seed: u64,
        /// Field spec such as "GF(2^1;1,0)" or "GF(4)".
        #[arg(long, default_value = "GF(2^1;1,0)")]
        field: String,
        #[arg(long, default_value = "6")]
        horizon: u32,
        #[arg(long, default_value = "2")]
        length: usize,
        /// Comma-separated deltas for S.
        #[arg(long, default_value = "3,5")]
        s: String,
        /// Comma-separated window indices; defaults to the tail window.
        #[arg(long)]
        window: Option<String>,
        #[arg(long, value_enum, default_value = "separated")]
        regime: RegimeArg,
        #[arg(long, default_value = "1")]
        max_extras: usize,
    },
    /// Parse an instance and check the ladder clauses.
    Validate(InstanceArg),
    /// Solve one ladder's window equations for a named colouring.
    Solve {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long)]
        delta: u32,
        #[arg(long)]
        colouring: String,
    },
    /// Search for a global uniformizer of b - a.
    Uniformize {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Compute |ColSet/UnifSet| for the instance.
    Quotient {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long)]
        cross_check: bool,
        /// Coset-representative cap.
        #[arg(long, default_value_t = DEFAULT_REP_CAP)]
        cap: u64,
    },
    /// Emit the coded model of a named colouring as an anonymous structure.
    Code {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long)]
        colouring: String,
    },
    /// Decide whether the models of two named colourings are isomorphic.
    Iso {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Also compare against the uniformizer-based equivalence test.
        #[arg(long)]
        cross_check: bool,
    },
    /// Recover a colouring from a structure file (coset-level).
    Decode {
        #[command(flatten)]
        inst: InstanceArg,
        /// Structure file produced by `code`.
        structure: PathBuf,
    },
    /// Count isomorphism classes of coded models, or of l-fold unions.
    Classify {
        #[command(flatten)]
        inst: InstanceArg,
        /// Count classes of l-fold tagged disjoint unions instead.
        #[arg(long, value_name = "L")]
        union: Option<usize>,
        #[arg(long)]
        cross_check: bool,
    },
    /// Reproduce class_count = |F| on the bundled paper-shadow family.
    Demo,
}

#[derive(Copy, Clone, ValueEnum)]
enum RegimeArg {
    Separated,
    Overlapping,
}

#[derive(Serialize)]
struct Report {
    operation: String,
    digest: String,
    seed: Option<u64>,
    results: serde_json::Map<String, serde_json::Value>,
    cross_check: Option<String>,
}

impl Report {
    fn new(operation: &str, digest: String) -> Report {
        Report {
            operation: operation.to_string(),
            digest,
            seed: None,
            results: serde_json::Map::new(),
            cross_check: None,
        }
    }

    fn put(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    fn emit(&self, format: Format) {
        match format {
            Format::JsonLines => {
                println!("{}", serde_json::to_string(self).expect("serializable"));
            }
            Format::Text => {
                println!("operation: {}", self.operation);
                println!("digest: {}", self.digest);
                if let Some(seed) = self.seed {
                    println!("seed: {seed}");
                }
                for (k, v) in &self.results {
                    println!("{k}: {v}");
                }
                if let Some(cc) = &self.cross_check {
                    println!("cross-check: {cc}");
                }
            }
        }
    }
}

fn digest_file(path: &PathBuf) -> String {
    match std::fs::read(path) {
        Ok(bytes) => hex::encode(Sha256::digest(&bytes)),
        Err(_) => String::new(),
    }
}

fn digest_str(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

fn named<'i>(inst: &'i Instance, name: &str) -> Result<&'i Colouring, Error> {
    inst.colourings
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, c)| c)
        .ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("no colouring named {name:?} in the instance"),
        })
}

fn colouring_string(c: &Colouring) -> String {
    let parts: Vec<String> = c
        .iter()
        .map(|(delta, vals)| {
            let vs: Vec<String> = vals.iter().map(|v| v.code().to_string()).collect();
            format!("{delta} -> {}", vs.join(","))
        })
        .collect();
    parts.join("; ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd, cli.format) {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Ok(true) = success, Ok(false) = a cross-check mismatch was detected.
fn run(cmd: Cmd, format: Format) -> Result<bool, Error> {
    match cmd {
        Cmd::Gen {
            seed,
            field,
            horizon,
            length,
            s,
            window,
            regime,
            max_extras,
        } => {
            let ctx = FieldCtx::parse_spec(&field)?;
            let s: Vec<u32> = s
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim().parse().map_err(|_| Error::Parse {
                        line: 0,
                        msg: format!("bad delta {t:?}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            let window: Vec<usize> = match window {
                Some(w) => w
                    .split(',')
                    .map(|t| {
                        t.trim().parse().map_err(|_| Error::Parse {
                            line: 0,
                            msg: format!("bad window index {t:?}"),
                        })
                    })
                    .collect::<Result<_, _>>()?,
                None => ladderlab_core::FilterD::tail(length)?.window().collect(),
            };
            let params = GenParams {
                horizon,
                length,
                s,
                window: window.clone(),
                regime: match regime {
                    RegimeArg::Separated => Regime::Separated,
                    RegimeArg::Overlapping => Regime::Overlapping,
                },
                max_extras,
            };
            let sys = ladderlab_core::ladder::generate(&ctx, seed, &params)?;
            let inst = Instance {
                ctx,
                sys,
                filter: ladderlab_core::FilterD::new(length, window)?,
                colourings: vec![],
            };
            print!("{}", emit_instance(&inst));
            Ok(true)
        }
        Cmd::Validate(a) => {
            let inst = parse_instance(&a.file)?;
            let mut report = Report::new("validate", digest_file(&a.file));
            report.put("horizon", inst.sys.horizon());
            report.put("length", inst.sys.length() as u64);
            report.put("s", inst.sys.s().iter().map(|&d| d as u64).collect::<Vec<_>>());
            report.put("valid", true);
            report.emit(format);
            Ok(true)
        }
        Cmd::Solve {
            inst: a,
            delta,
            colouring,
        } => {
            let inst = parse_instance(&a.file)?;
            let c = named(&inst, &colouring)?;
            let ladder = inst.sys.ladder(delta).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("delta {delta} is not in S"),
            })?;
            let target = c.value(delta).expect("matching colouring");
            let sol = solve_ladder_equations(&inst.ctx, ladder, target)?;
            let mut report = Report::new("solve", digest_file(&a.file));
            report.put("delta", delta);
            let s: Vec<String> = sol.iter().map(|(xi, e)| format!("{xi}:{}", e.code())).collect();
            report.put("assignment", s.join(","));
            report.emit(format);
            Ok(true)
        }
        Cmd::Uniformize { inst: a, a: na, b: nb } => {
            let inst = parse_instance(&a.file)?;
            let ca = named(&inst, &na)?;
            let cb = named(&inst, &nb)?;
            let diff = Colouring::difference(&inst.ctx, cb, ca)?;
            let found = global_uniformize(&inst.ctx, &inst.sys, &inst.filter, &diff)?;
            let mut report = Report::new("uniformize", digest_file(&a.file));
            match &found {
                Some(f) => {
                    report.put("uniform", true);
                    let vals: Vec<String> =
                        f.values().iter().map(|e| e.code().to_string()).collect();
                    report.put("values", vals.join(","));
                }
                None => report.put("uniform", false),
            }
            report.emit(format);
            Ok(true)
        }
        Cmd::Quotient {
            inst: a,
            cross_check,
            cap,
        } => {
            let inst = parse_instance(&a.file)?;
            let rep = quotient::class_count(&inst.ctx, &inst.sys, &inst.filter, cap)?;
            let mut report = Report::new("quotient", digest_file(&a.file));
            report.put("dim_colset", rep.dim_colset as u64);
            report.put("dim_unifset", rep.dim_unifset as u64);
            report.put("class_count", rep.class_count);
            let mut ok = true;
            if cross_check {
                let brute = quotient::brute_class_count(&inst.ctx, &inst.sys, &inst.filter)?;
                report.put("brute_class_count", brute);
                if brute == rep.class_count {
                    report.cross_check = Some("pass".into());
                } else {
                    report.cross_check = Some("ORACLE MISMATCH".into());
                    ok = false;
                }
            }
            report.emit(format);
            Ok(ok)
        }
        Cmd::Code { inst: a, colouring } => {
            let inst = parse_instance(&a.file)?;
            let c = named(&inst, &colouring)?;
            let m = CodedModel::build(&inst.ctx, &inst.sys, &inst.filter, c)?;
            print!("{}", emit_structure(&m.to_structure()?));
            Ok(true)
        }
        Cmd::Iso {
            inst: a,
            a: na,
            b: nb,
            cross_check,
        } => {
            let inst = parse_instance(&a.file)?;
            let ca = named(&inst, &na)?;
            let cb = named(&inst, &nb)?;
            let ma = CodedModel::build(&inst.ctx, &inst.sys, &inst.filter, ca)?;
            let stb = CodedModel::build(&inst.ctx, &inst.sys, &inst.filter, cb)?.to_structure()?;
            let found = isobridge::brute_iso(&ma, &stb)?;
            let mut report = Report::new("iso", digest_file(&a.file));
            report.put("isomorphic", found.is_some());
            let mut ok = true;
            if cross_check {
                let equiv = is_equivalent(&inst.ctx, &inst.sys, &inst.filter, ca, cb)?;
                report.put("is_equivalent", equiv);
                if equiv == found.is_some() {
                    report.cross_check = Some("pass".into());
                } else {
                    report.cross_check = Some("ORACLE MISMATCH".into());
                    ok = false;
                }
            }
            report.emit(format);
            Ok(ok)
        }
        Cmd::Decode { inst: a, structure } => {
            let inst = parse_instance(&a.file)?;
            let st = parse_structure(&structure)?;
            let (c, _) = isobridge::decode_structure(&inst.ctx, &inst.sys, &inst.filter, &st)?;
            let mut report = Report::new("decode", digest_file(&structure));
            report.put("colouring", colouring_string(&c));
            report.emit(format);
            Ok(true)
        }
        Cmd::Classify {
            inst: a,
            union,
            cross_check,
        } => {
            let inst = parse_instance(&a.file)?;
            let mut report = Report::new("classify", digest_file(&a.file));
            let mut ok = true;
            match union {
                None => {
                    let (count, checked) =
                        isobridge::classify_no(&inst.ctx, &inst.sys, &inst.filter, cross_check)?;
                    report.put("class_count", count);
                    if let Some(checked) = checked {
                        report.put("iso_class_count", checked);
                        if checked == count {
                            report.cross_check = Some("pass".into());
                        } else {
                            report.cross_check = Some("ORACLE MISMATCH".into());
                            ok = false;
                        }
                    }
                }
                Some(l) => {
                    let q = quotient::class_count(&inst.ctx, &inst.sys, &inst.filter, DEFAULT_REP_CAP)?;
                    let reps = q.coset_reps.ok_or_else(|| {
                        Error::TooLarge("too many cosets to materialize representatives".into())
                    })?;
                    let (count, checked) = isobridge::classify_union(
                        &inst.ctx,
                        &inst.sys,
                        &inst.filter,
                        &reps,
                        l,
                        cross_check,
                    )?;
                    report.put("union_l", l as u64);
                    report.put("class_count", count);
                    if let Some(checked) = checked {
                        report.put("brute_class_count", checked);
                        if checked == count {
                            report.cross_check = Some("pass".into());
                        } else {
                            report.cross_check = Some("ORACLE MISMATCH".into());
                            ok = false;
                        }
                    }
                }
            }
            report.emit(format);
            Ok(ok)
        }
        Cmd::Demo => {
            let fixtures: [(&str, &str); 3] = [
                ("paper_q2", include_str!("../../../fixtures/paper_q2.inst")),
                ("paper_q3", include_str!("../../../fixtures/paper_q3.inst")),
                ("paper_q4", include_str!("../../../fixtures/paper_q4.inst")),
            ];
            let mut ok = true;
            for (name, text) in fixtures {
                let inst = ladderlab_core::instance::parse_instance_str(text)?;
                let rep =
                    quotient::class_count(&inst.ctx, &inst.sys, &inst.filter, DEFAULT_REP_CAP)?;
                let brute = quotient::brute_class_count(&inst.ctx, &inst.sys, &inst.filter)?;
                let mut report = Report::new("demo", digest_str(text));
                report.put("instance", name);
                report.put("field_order", inst.ctx.order());
                report.put("class_count", rep.class_count);
                report.put("brute_class_count", brute);
                if rep.class_count == inst.ctx.order() && brute == rep.class_count {
                    report.cross_check = Some("pass".into());
                } else {
                    report.cross_check = Some("ORACLE MISMATCH".into());
                    ok = false;
                }
                report.emit(format);
            }
            Ok(ok)
        }
    }
}
