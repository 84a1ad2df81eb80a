//! Line-oriented transcript serialization and the audit that re-verifies
//! the pipeline contract from the file alone.
//!
//! Format: key/value header lines (n, m, seed, trial, adversary, class,
//! oblivious), then one line per example in clean-then-corrupted order:
//!
//! ```text
//! role point_id label position_after_shuffle
//! ```

use crate::adversary::AdversaryTranscript;
use crate::domain::{
    build_class_majority_lb, build_class_majority_lb_rand, build_class_oig_lb, HypothesisClass,
};
use crate::error::{Error, Result};
use std::fmt::Write as _;

pub fn to_text(t: &AdversaryTranscript) -> String {
    let mut out = String::new();
    writeln!(out, "n {}", t.n).unwrap();
    writeln!(out, "m {}", t.m).unwrap();
    writeln!(out, "seed {}", t.master_seed).unwrap();
    writeln!(out, "trial {}", t.trial).unwrap();
    writeln!(out, "adversary {}", t.adversary_id).unwrap();
    writeln!(out, "class {}", t.class_desc).unwrap();
    writeln!(out, "oblivious {}", if t.oblivious { 1 } else { 0 }).unwrap();
    // position_after_shuffle of combined index j
    let mut pos = vec![0usize; t.permutation.len()];
    for (i, &j) in t.permutation.iter().enumerate() {
        pos[j] = i;
    }
    for (j, ex) in t.clean.iter().enumerate() {
        writeln!(
            out,
            "clean {} {} {}",
            ex.point.id,
            ex.label as u8,
            pos[j]
        )
        .unwrap();
    }
    for (j, ex) in t.corrupted.iter().enumerate() {
        writeln!(
            out,
            "corrupted {} {} {}",
            ex.point.id,
            ex.label as u8,
            pos[t.n + j]
        )
        .unwrap();
    }
    out
}

/// A parsed transcript file (not yet validated).
#[derive(Debug, Clone)]
pub struct TranscriptFile {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub trial: u64,
    pub adversary_id: String,
    pub class_desc: String,
    pub oblivious: bool,
    /// (is_clean, point_id, label, position) in file order.
    pub rows: Vec<(bool, usize, u8, usize)>,
}

pub fn parse(text: &str) -> Result<TranscriptFile> {
    let mut n = None;
    let mut m = None;
    let mut seed = None;
    let mut trial = 0u64;
    let mut adversary_id = String::new();
    let mut class_desc = String::new();
    let mut oblivious = false;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Malformed(format!("line {}: {what}", lineno + 1));
        let mut parts = line.split_whitespace();
        let key = parts.next().ok_or_else(|| bad("empty line"))?;
        match key {
            "n" => n = Some(parse_num(parts.next(), lineno)?),
            "m" => m = Some(parse_num(parts.next(), lineno)?),
            "seed" => seed = Some(parse_num(parts.next(), lineno)? as u64),
            "trial" => trial = parse_num(parts.next(), lineno)? as u64,
            "adversary" => adversary_id = parts.next().unwrap_or("").to_string(),
            "class" => class_desc = parts.collect::<Vec<_>>().join(" "),
            "oblivious" => oblivious = parse_num(parts.next(), lineno)? != 0,
            "clean" | "corrupted" => {
                let id = parse_num(parts.next(), lineno)?;
                let label = parse_num(parts.next(), lineno)? as u8;
                let position = parse_num(parts.next(), lineno)?;
                if label > 1 {
                    return Err(bad("label must be 0 or 1"));
                }
                rows.push((key == "clean", id, label, position));
            }
            other => return Err(bad(&format!("unknown key `{other}`"))),
        }
    }
    Ok(TranscriptFile {
        n: n.ok_or_else(|| Error::Malformed("missing n header".into()))?,
        m: m.ok_or_else(|| Error::Malformed("missing m header".into()))?,
        seed: seed.ok_or_else(|| Error::Malformed("missing seed header".into()))?,
        trial,
        adversary_id,
        class_desc,
        oblivious,
        rows,
    })
}

fn parse_num(tok: Option<&str>, lineno: usize) -> Result<usize> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Malformed(format!("line {}: expected a number", lineno + 1)))
}

/// Rebuilds the class named by a transcript header, when it is one of the
/// named constructions.
pub fn class_from_desc(desc: &str) -> Option<HypothesisClass> {
    let mut parts = desc.split_whitespace();
    let kind = parts.next()?;
    let mut kv = std::collections::HashMap::new();
    for p in parts {
        let (k, v) = p.split_once('=')?;
        kv.insert(k, v.parse::<usize>().ok()?);
    }
    match kind {
        "majority_lb" => build_class_majority_lb(*kv.get("r")?, *kv.get("d")?).ok(),
        "majority_lb_rand" => {
            build_class_majority_lb_rand(*kv.get("r")?, *kv.get("d")?, *kv.get("copies")?).ok()
        }
        "oig_lb" => build_class_oig_lb(*kv.get("pairs")?).ok(),
        _ => None,
    }
}

/// Re-verifies the pipeline contract on a parsed transcript. Returns the
/// list of violations; an empty list is a clean report.
pub fn audit(file: &TranscriptFile) -> Vec<String> {
    let mut violations = Vec::new();
    let clean_count = file.rows.iter().filter(|r| r.0).count();
    let corrupted_count = file.rows.len() - clean_count;
    if clean_count != file.n {
        violations.push(format!(
            "count violation: {} clean rows, header n={}",
            clean_count, file.n
        ));
    }
    if corrupted_count != file.m {
        violations.push(format!(
            "arity violation: {} corrupted rows, header m={}",
            corrupted_count, file.m
        ));
    }
    // positions must be a bijection on [n+m]
    let total = file.rows.len();
    let mut seen = vec![false; total];
    for &(_, _, _, pos) in &file.rows {
        if pos >= total || seen[pos] {
            violations.push(format!(
                "permutation violation: position {pos} missing, repeated, or out of range"
            ));
        } else {
            seen[pos] = true;
        }
    }
    // monotone labeling against the named class's target
    match class_from_desc(&file.class_desc) {
        Some(class) => {
            let target = class.target();
            for &(is_clean, id, label, _) in &file.rows {
                if id >= class.domain().len() {
                    violations.push(format!("domain violation: point id {id} out of range"));
                    continue;
                }
                let expected = target.eval(&class.domain().point(id)) as u8;
                if label != expected {
                    violations.push(format!(
                        "monotonicity violation: {} point {id} labeled {label}, target says {expected}",
                        if is_clean { "clean" } else { "corrupted" }
                    ));
                }
            }
        }
        None => violations.push(format!(
            "unknown class `{}`: labels not verified",
            file.class_desc
        )),
    }
    violations
}
