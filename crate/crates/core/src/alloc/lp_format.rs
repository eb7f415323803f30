//! CPLEX LP text format: writer and a reader for the subset it writes.

use std::fmt::Write as _;

use super::milp::{Cmp, Direction, Model};

fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

fn write_terms(out: &mut String, model: &Model, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, &(i, a)) in terms.iter().enumerate() {
        let name = &model.vars[i].name;
        if a < 0.0 {
            let _ = write!(out, " - {} {name}", fmt_num(-a));
        } else if k == 0 {
            let _ = write!(out, " {} {name}", fmt_num(a));
        } else {
            let _ = write!(out, " + {} {name}", fmt_num(a));
        }
    }
}

/// Deterministic LP text for `model`.
pub fn to_lp_string(model: &Model) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\\ {}", model.name);
    s.push_str(match model.direction {
        Direction::Maximize => "Maximize\n",
        Direction::Minimize => "Minimize\n",
    });
    let obj: Vec<(usize, f64)> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.objective != 0.0)
        .map(|(i, v)| (i, v.objective))
        .collect();
    s.push_str(" obj:");
    write_terms(&mut s, model, &obj);
    s.push('\n');
    s.push_str("Subject To\n");
    for c in &model.constraints {
        let _ = write!(s, " {}:", c.name);
        write_terms(&mut s, model, &c.terms);
        let op = match c.cmp {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        };
        let _ = writeln!(s, " {op} {}", fmt_num(c.rhs));
    }
    s.push_str("Bounds\n");
    for v in model.vars.iter().filter(|v| !v.is_binary()) {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(s, " {} free", v.name);
        } else {
            let _ = writeln!(s, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
        }
    }
    let general: Vec<&str> = model
        .vars
        .iter()
        .filter(|v| v.integer && !v.is_binary())
        .map(|v| v.name.as_str())
        .collect();
    if !general.is_empty() {
        s.push_str("General\n");
        for n in general {
            let _ = writeln!(s, " {n}");
        }
    }
    let binary: Vec<&str> = model.vars.iter().filter(|v| v.is_binary()).map(|v| v.name.as_str()).collect();
    if !binary.is_empty() {
        s.push_str("Binary\n");
        for n in binary {
            let _ = writeln!(s, " {n}");
        }
    }
    s.push_str("End\n");
    s
}

#[derive(Debug, PartialEq, Eq)]
pub struct LpParseError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LpParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LP line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for LpParseError {}

fn parse_num(tok: &str) -> Option<f64> {
    match tok {
        "+inf" | "inf" | "+infinity" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

/// Parses `coef name` terms separated by `+`/`-`. Unknown names are created
/// with default bounds `[0, +inf)`.
fn parse_terms(toks: &[&str], model: &mut Model, line: usize) -> Result<Vec<(usize, f64)>, LpParseError> {
    let err = |m: &str| LpParseError {
        line,
        message: m.into(),
    };
    let mut terms = Vec::new();
    let mut k = 0;
    let mut sign = 1.0;
    while k < toks.len() {
        match toks[k] {
            "+" => {
                sign = 1.0;
                k += 1;
                continue;
            }
            "-" => {
                sign = -1.0;
                k += 1;
                continue;
            }
            _ => {}
        }
        let (coef, name) = match parse_num(toks[k]) {
            Some(c) if k + 1 < toks.len() => {
                k += 2;
                (c, toks[k - 1])
            }
            Some(0.0) if k + 1 == toks.len() => {
                // Empty expression written as a lone 0.
                k += 1;
                continue;
            }
            Some(_) => return Err(err("coefficient without variable")),
            None => {
                k += 1;
                (1.0, toks[k - 1])
            }
        };
        let idx = match model.vars.iter().position(|v| v.name == name) {
            Some(i) => i,
            None => model.add_var(name, 0.0, f64::INFINITY, false, 0.0),
        };
        terms.push((idx, sign * coef));
        sign = 1.0;
    }
    Ok(terms)
}

/// Reads the LP dialect produced by [`to_lp_string`].
pub fn parse_lp(text: &str) -> Result<Model, LpParseError> {
    #[derive(PartialEq)]
    enum Section {
        Start,
        Objective,
        Constraints,
        Bounds,
        General,
        Binary,
        End,
    }
    let mut model = Model::new("", Direction::Minimize);
    let mut section = Section::Start;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |m: String| LpParseError { line, message: m };
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(c) = l.strip_prefix('\\') {
            if section == Section::Start && model.name.is_empty() {
                model.name = c.trim().to_string();
            }
            continue;
        }
        match l.to_ascii_lowercase().as_str() {
            "maximize" | "maximise" | "max" => {
                model.direction = Direction::Maximize;
                section = Section::Objective;
                continue;
            }
            "minimize" | "minimise" | "min" => {
                model.direction = Direction::Minimize;
                section = Section::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                section = Section::Constraints;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "general" | "generals" => {
                section = Section::General;
                continue;
            }
            "binary" | "binaries" => {
                section = Section::Binary;
                continue;
            }
            "end" => {
                section = Section::End;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Start | Section::End => return Err(err(format!("unexpected text {l:?}"))),
            Section::Objective => {
                let body = l.split_once(':').map_or(l, |(_, b)| b);
                let toks: Vec<&str> = body.split_whitespace().collect();
                for (idx, a) in parse_terms(&toks, &mut model, line)? {
                    model.vars[idx].objective = a;
                }
            }
            Section::Constraints => {
                let (name, body) = l.split_once(':').ok_or_else(|| err("constraint without name".into()))?;
                let toks: Vec<&str> = body.split_whitespace().collect();
                let op_at = toks
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "=" | "=<" | "=>"))
                    .ok_or_else(|| err("constraint without comparison".into()))?;
                let cmp = match toks[op_at] {
                    "<=" | "=<" => Cmp::Le,
                    ">=" | "=>" => Cmp::Ge,
                    _ => Cmp::Eq,
                };
                if op_at + 2 != toks.len() {
                    return Err(err("expected a single right-hand side".into()));
                }
                let rhs = parse_num(toks[op_at + 1]).ok_or_else(|| err("bad right-hand side".into()))?;
                let terms = parse_terms(&toks[..op_at], &mut model, line)?;
                model.add_constraint(name.trim(), terms, cmp, rhs);
            }
            Section::Bounds => {
                let toks: Vec<&str> = l.split_whitespace().collect();
                let var = |model: &mut Model, name: &str| match model.vars.iter().position(|v| v.name == name) {
                    Some(i) => i,
                    None => model.add_var(name, 0.0, f64::INFINITY, false, 0.0),
                };
                match toks.as_slice() {
                    [name, "free"] => {
                        let i = var(&mut model, name);
                        model.vars[i].lower = f64::NEG_INFINITY;
                        model.vars[i].upper = f64::INFINITY;
                    }
                    [lo, "<=", name, "<=", hi] => {
                        let lo = parse_num(lo).ok_or_else(|| err("bad lower bound".into()))?;
                        let hi = parse_num(hi).ok_or_else(|| err("bad upper bound".into()))?;
                        let i = var(&mut model, name);
                        model.vars[i].lower = lo;
                        model.vars[i].upper = hi;
                    }
                    _ => return Err(err(format!("unsupported bound {l:?}"))),
                }
            }
            Section::General | Section::Binary => {
                for name in l.split_whitespace() {
                    let i = match model.vars.iter().position(|v| v.name == name) {
                        Some(i) => i,
                        None => return Err(err(format!("unknown variable {name}"))),
                    };
                    model.vars[i].integer = true;
                    if section == Section::Binary {
                        model.vars[i].lower = 0.0;
                        model.vars[i].upper = 1.0;
                    }
                }
            }
        }
    }
    if section != Section::End {
        return Err(LpParseError {
            line: text.lines().count(),
            message: "missing End".into(),
        });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Model {
        let mut m = Model::new("sample", Direction::Maximize);
        let z = m.add_var("z", 0.0, f64::INFINITY, false, 1.0);
        let a = m.add_var("y_0_0", 0.0, 7.0, true, 0.0);
        let b = m.add_var("x_1", 0.0, 1.0, true, 0.0);
        let f = m.add_var("w", f64::NEG_INFINITY, f64::INFINITY, false, -0.5);
        m.add_constraint("c0", vec![(a, 1.0), (z, -1.0)], Cmp::Ge, 0.0);
        m.add_constraint("c1", vec![(a, 2.5), (b, 12.0), (f, -1.0)], Cmp::Le, 30.0);
        m.add_constraint("c2", vec![(b, 1.0)], Cmp::Eq, 1.0);
        m
    }

    #[test]
    fn roundtrip_recovers_structure() {
        let m = sample();
        let text = to_lp_string(&m);
        let back = parse_lp(&text).unwrap();
        assert_eq!(back.direction, m.direction);
        assert_eq!(back.name, m.name);
        let mut want = m.vars.clone();
        let mut got = back.vars.clone();
        want.sort_by(|a, b| a.name.cmp(&b.name));
        got.sort_by(|a, b| a.name.cmp(&b.name));
        assert_eq!(got, want);
        assert_eq!(back.constraints.len(), m.constraints.len());
        // Re-emitting gives identical text once variable order is the same.
        assert_eq!(to_lp_string(&parse_lp(&to_lp_string(&back)).unwrap()), to_lp_string(&back));
    }

    #[test]
    fn empty_model_is_valid() {
        let m = Model::new("empty", Direction::Minimize);
        let text = to_lp_string(&m);
        assert_eq!(text, "\\ empty\nMinimize\n obj: 0\nSubject To\nBounds\nEnd\n");
        let back = parse_lp(&text).unwrap();
        assert!(back.vars.is_empty() && back.constraints.is_empty());
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_lp("Maximize\n obj: x\nSubject To\n c: x <=\nEnd\n").is_err());
        assert!(parse_lp("Maximize\n obj: x\n").is_err());
    }
}
