//! LP file format (`Minimize / Subject To / Bounds / Binaries / End`).
//!
//! Numbers are written with Rust's shortest round-trip formatting, so an
//! export followed by [`parse_lp_text`] reproduces every coefficient exactly.
//! Names are sanitized to the format's identifier rules and made unique.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use thiserror::Error;

use crate::encoder::model::{MilpModel, Sense, VarId, VarKind};

#[derive(Debug, Error, PartialEq)]
pub enum LpParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `End`")]
    MissingEnd,
}

fn sanitize(raw: &str, used: &mut HashSet<String>, prefix: &str) -> String {
    let mut s: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    let bad_start = s.chars().next().is_none_or(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E');
    if bad_start {
        s = format!("{prefix}{s}");
    }
    let mut name = s.clone();
    let mut k = 1;
    while !used.insert(name.to_ascii_lowercase()) {
        name = format!("{s}_{k}");
        k += 1;
    }
    name
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn write_terms(out: &mut String, terms: &[(VarId, f64)], names: &[String]) {
    for (k, &(v, c)) in terms.iter().enumerate() {
        let sign = if c < 0.0 { "-" } else if k == 0 { "" } else { "+" };
        if !sign.is_empty() {
            out.push(' ');
            out.push_str(sign);
        }
        let _ = write!(out, " {} {}", num(c.abs()), names[v.0]);
    }
}

/// Renders `model` in LP format.
pub fn export_lp_text(model: &MilpModel) -> String {
    let mut used = HashSet::new();
    let names: Vec<String> = model.vars.iter().map(|v| sanitize(&v.name, &mut used, "v_")).collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name.replace('\n', " "));
    out.push_str("Minimize\n obj:");
    let mut obj: Vec<(VarId, f64)> = Vec::new();
    for &(v, c) in &model.objective {
        match obj.iter_mut().find(|(w, _)| *w == v) {
            Some(e) => e.1 += c,
            None => obj.push((v, c)),
        }
    }
    obj.retain(|&(_, c)| c != 0.0);
    write_terms(&mut out, &obj, &names);
    out.push_str("\nSubject To\n");
    let mut row_names = HashSet::new();
    for c in &model.constraints {
        let name = sanitize(&c.name, &mut row_names, "r_");
        let _ = write!(out, " {name}:");
        write_terms(&mut out, &c.coeffs, &names);
        let _ = writeln!(out, " {} {}", c.sense, num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (v, name) in model.vars.iter().zip(&names) {
        if v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0 {
            continue;
        }
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if v.lower == v.upper {
            let _ = writeln!(out, " {name} = {}", num(v.lower));
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", num(v.lower), num(v.upper));
        }
    }
    let bins: Vec<&str> = model
        .vars
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Head,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
}

struct Builder {
    model: MilpModel,
    index: HashMap<String, VarId>,
}

impl Builder {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        // LP format default bounds are [0, +inf).
        let v = self.model.continuous(name, 0.0, f64::INFINITY);
        self.index.insert(name.to_string(), v);
        v
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

fn is_number(tok: &str) -> bool {
    parse_number(tok).is_some()
}

/// Parses `+ 3 x - y + 2.5 z` into terms.
fn parse_terms(b: &mut Builder, toks: &[&str], line: usize) -> Result<Vec<(VarId, f64)>, LpParseError> {
    let mut terms = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let mut sign = 1.0;
        while i < toks.len() && (toks[i] == "+" || toks[i] == "-") {
            if toks[i] == "-" {
                sign = -sign;
            }
            i += 1;
        }
        let mut coef = 1.0;
        if i < toks.len() && is_number(toks[i]) {
            coef = parse_number(toks[i]).unwrap();
            i += 1;
        }
        let Some(name) = toks.get(i) else {
            return Err(LpParseError::Syntax { line, msg: "term without variable".into() });
        };
        if is_number(name) || *name == "+" || *name == "-" {
            return Err(LpParseError::Syntax { line, msg: format!("expected variable, found `{name}`") });
        }
        terms.push((b.var(name), sign * coef));
        i += 1;
    }
    Ok(terms)
}

fn tokenize(s: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(s.len() + 8);
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if (c == '<' || c == '>' || c == '=') && !spaced.ends_with(['<', '>', '=']) {
            spaced.push(' ');
            spaced.push(c);
            if i + 1 < chars.len() && chars[i + 1] == '=' && c != '=' {
                spaced.push('=');
                i += 1;
            }
            spaced.push(' ');
        } else if (c == '+' || c == '-') && !spaced.ends_with(['e', 'E']) {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
        i += 1;
    }
    // Re-glue signed infinities written as `- inf`.
    let raw: Vec<String> = spaced.split_whitespace().map(str::to_string).collect();
    let mut out: Vec<String> = Vec::new();
    for t in raw {
        let lower = t.to_ascii_lowercase();
        if (lower == "inf" || lower == "infinity") && matches!(out.last().map(String::as_str), Some("+" | "-")) {
            let s = out.pop().unwrap();
            out.push(format!("{s}{t}"));
        } else {
            out.push(t);
        }
    }
    out
}

fn sense_of(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "<" | "=<" => Some(Sense::Le),
        ">=" | ">" | "=>" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Parses LP text produced by [`export_lp_text`] (and the common subset of the format).
pub fn parse_lp_text(text: &str) -> Result<MilpModel, LpParseError> {
    let mut b = Builder { model: MilpModel::new("lp"), index: HashMap::new() };
    let mut section = Section::Head;
    let mut ended = false;
    // Rows may span lines; accumulate until a sense and rhs are present.
    let mut pending = String::new();
    let mut pending_line = 0;
    let mut row_count = 0;

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if let Some(comment) = raw.trim().strip_prefix('\\') {
            if section == Section::Head && b.model.name == "lp" && !comment.trim().is_empty() {
                b.model.name = comment.trim().to_string();
            }
        }
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        let next = match lower.as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "maximize" | "maximise" | "max" => {
                return Err(LpParseError::Syntax { line: line_no, msg: "maximization is not supported".into() })
            }
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "generals" | "general" | "integers" => Some(Section::Generals),
            "end" => {
                ended = true;
                break;
            }
            _ => None,
        };
        if let Some(s) = next {
            if !pending.trim().is_empty() {
                return Err(LpParseError::Syntax { line: pending_line, msg: "unterminated row".into() });
            }
            section = s;
            continue;
        }
        match section {
            Section::Head => return Err(LpParseError::Syntax { line: line_no, msg: "content before a section".into() }),
            Section::Objective => {
                let body = match line.split_once(':') {
                    Some((_, rest)) => rest,
                    None => line,
                };
                let toks = tokenize(body);
                let toks: Vec<&str> = toks.iter().map(String::as_str).collect();
                let terms = parse_terms(&mut b, &toks, line_no)?;
                b.model.objective.extend(terms);
            }
            Section::Constraints => {
                if pending.is_empty() {
                    pending_line = line_no;
                }
                pending.push(' ');
                pending.push_str(line);
                let toks = tokenize(pending.split_once(':').map_or(pending.as_str(), |(_, r)| r));
                let Some(k) = toks.iter().position(|t| sense_of(t).is_some()) else { continue };
                if k + 1 >= toks.len() {
                    continue;
                }
                let name = match pending.split_once(':') {
                    Some((n, _)) => n.trim().to_string(),
                    None => format!("r{row_count}"),
                };
                let lhs: Vec<&str> = toks[..k].iter().map(String::as_str).collect();
                let terms = parse_terms(&mut b, &lhs, pending_line)?;
                let sense = sense_of(&toks[k]).unwrap();
                let rhs_toks: Vec<&str> = toks[k + 1..].iter().map(String::as_str).collect();
                let rhs = match rhs_toks.as_slice() {
                    [v] => parse_number(v),
                    ["-", v] => parse_number(v).map(|x| -x),
                    ["+", v] => parse_number(v),
                    _ => None,
                }
                .ok_or_else(|| LpParseError::Syntax { line: pending_line, msg: "bad right-hand side".into() })?;
                b.model
                    .add_constraint(name, terms, sense, rhs)
                    .map_err(|e| LpParseError::Syntax { line: pending_line, msg: e.to_string() })?;
                row_count += 1;
                pending.clear();
            }
            Section::Bounds => parse_bound(&mut b, line, line_no)?,
            Section::Binaries | Section::Generals => {
                for name in line.split_whitespace() {
                    let v = b.var(name);
                    if section == Section::Generals {
                        return Err(LpParseError::Syntax { line: line_no, msg: "general integers are not supported".into() });
                    }
                    let var = &mut b.model.vars[v.0];
                    var.kind = VarKind::Binary;
                    var.lower = var.lower.max(0.0);
                    var.upper = var.upper.min(1.0);
                }
            }
        }
    }
    if !ended {
        return Err(LpParseError::MissingEnd);
    }
    Ok(b.model)
}

fn parse_bound(b: &mut Builder, line: &str, line_no: usize) -> Result<(), LpParseError> {
    let err = |msg: &str| LpParseError::Syntax { line: line_no, msg: msg.into() };
    let toks = tokenize(line);
    let toks: Vec<&str> = toks.iter().map(String::as_str).collect();
    // Glue unary minus onto numbers: ["-", "3"] -> "-3".
    let mut t: Vec<String> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if (toks[i] == "-" || toks[i] == "+") && i + 1 < toks.len() && is_number(toks[i + 1]) {
            t.push(format!("{}{}", toks[i], toks[i + 1]));
            i += 2;
        } else {
            t.push(toks[i].to_string());
            i += 1;
        }
    }
    let t: Vec<&str> = t.iter().map(String::as_str).collect();
    match t.as_slice() {
        [name, free] if free.eq_ignore_ascii_case("free") => {
            let v = b.var(name);
            b.model.vars[v.0].lower = f64::NEG_INFINITY;
            b.model.vars[v.0].upper = f64::INFINITY;
        }
        [lo, s1, name, s2, up] if sense_of(s1) == Some(Sense::Le) && sense_of(s2) == Some(Sense::Le) => {
            let lo = parse_number(lo).ok_or_else(|| err("bad lower bound"))?;
            let up = parse_number(up).ok_or_else(|| err("bad upper bound"))?;
            let v = b.var(name);
            b.model.vars[v.0].lower = lo;
            b.model.vars[v.0].upper = up;
        }
        [name, s, val] if !is_number(name) => {
            let val = parse_number(val).ok_or_else(|| err("bad bound value"))?;
            let v = b.var(name);
            let var = &mut b.model.vars[v.0];
            match sense_of(s).ok_or_else(|| err("bad bound sense"))? {
                Sense::Le => var.upper = val,
                Sense::Ge => var.lower = val,
                Sense::Eq => {
                    var.lower = val;
                    var.upper = val;
                }
            }
        }
        [val, s, name] => {
            let val = parse_number(val).ok_or_else(|| err("bad bound value"))?;
            let v = b.var(name);
            let var = &mut b.model.vars[v.0];
            match sense_of(s).ok_or_else(|| err("bad bound sense"))? {
                Sense::Le => var.lower = val,
                Sense::Ge => var.upper = val,
                Sense::Eq => {
                    var.lower = val;
                    var.upper = val;
                }
            }
        }
        _ => return Err(err("unrecognized bound")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_has_only_sections() {
        let text = export_lp_text(&MilpModel::new("empty"));
        assert_eq!(text, "\\ empty\nMinimize\n obj:\nSubject To\nBounds\nEnd\n");
        let back = parse_lp_text(&text).unwrap();
        assert!(back.vars.is_empty() && back.constraints.is_empty());
    }

    #[test]
    fn knapsack_round_trip() {
        let mut m = MilpModel::new("knap");
        let a = m.binary("a");
        let b = m.binary("b");
        m.add_constraint("cap", [(a, 1.0), (b, 1.0)], Sense::Le, 1.0).unwrap();
        m.add_objective(a, -3.0);
        m.add_objective(b, -2.0);
        let text = export_lp_text(&m);
        assert!(text.contains(" obj: - 3 a - 2 b\n"));
        assert!(text.contains(" cap: 1 a + 1 b <= 1\n"));
        assert!(text.contains("Binaries\n a b\n"));
        let back = parse_lp_text(&text).unwrap();
        assert_eq!(back.vars.len(), 2);
        assert_eq!(back.constraints[0].coeffs, m.constraints[0].coeffs);
        assert_eq!(back.num_binaries(), 2);
    }

    #[test]
    fn awkward_names_and_numbers_survive() {
        let mut m = MilpModel::new("odd");
        let x = m.continuous("e[0,1]", f64::NEG_INFINITY, f64::INFINITY);
        let y = m.continuous("1st", -2.5, 1e-7);
        let z = m.continuous("z", 0.1 + 0.2, 0.1 + 0.2);
        m.add_constraint("c(1)", [(x, 1.0 / 3.0), (y, -1e300), (z, 2.0)], Sense::Ge, -0.1).unwrap();
        let text = export_lp_text(&m);
        let back = parse_lp_text(&text).unwrap();
        assert_eq!(back.vars.len(), 3);
        for (orig, parsed) in m.vars.iter().zip(&back.vars) {
            assert_eq!((orig.lower, orig.upper), (parsed.lower, parsed.upper));
        }
        assert_eq!(back.constraints[0].coeffs, m.constraints[0].coeffs);
        assert_eq!(back.constraints[0].rhs, -0.1);
    }

    #[test]
    fn missing_end_is_an_error() {
        assert_eq!(parse_lp_text("Minimize\n obj: x\n"), Err(LpParseError::MissingEnd));
    }
}
