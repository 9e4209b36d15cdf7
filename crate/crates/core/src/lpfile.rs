//! CPLEX LP text output and a reader for the subset of the grammar we emit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::system::{ConstraintSystem, Direction, Row, Sense, VarKind};

const TERMS_PER_LINE: usize = 8;

fn push_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    if terms.is_empty() {
        // An empty expression is not valid LP syntax.
        if let Some(name) = names.first() {
            let _ = write!(out, " 0 {name}");
        }
        return;
    }
    for (i, &(j, a)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { "-" } else { "+" };
        let mag = a.abs();
        if i == 0 && sign == "+" {
            out.push(' ');
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{mag} ");
        }
        out.push_str(&names[j]);
    }
}

fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// Renders `sys` in CPLEX LP format. Every variable gets a bounds line;
/// binary and integer variables are listed under `Generals`.
pub fn emit_lp(sys: &ConstraintSystem) -> String {
    let names: Vec<String> = sys.vars.iter().map(|v| v.name.clone()).collect();
    let mut out = String::new();
    out.push_str(match sys.objective.direction {
        Direction::Min => "Minimize\n",
        Direction::Max => "Maximize\n",
    });
    out.push_str(" obj:");
    push_terms(&mut out, &sys.objective.coeffs, &names);
    out.push_str("\nSubject To\n");
    for (i, r) in sys.rows.iter().enumerate() {
        let _ = write!(out, " c{i}:");
        push_terms(&mut out, &r.coeffs, &names);
        let _ = writeln!(out, " {} {}", r.sense.symbol(), fmt_num(r.rhs));
    }
    out.push_str("Bounds\n");
    for v in &sys.vars {
        let _ = match (v.lo, v.hi) {
            (lo, hi) if lo == f64::NEG_INFINITY && hi == f64::INFINITY => {
                writeln!(out, " {} free", v.name)
            }
            (lo, hi) if lo == hi => writeln!(out, " {} = {}", v.name, fmt_num(lo)),
            (lo, hi) if hi == f64::INFINITY => writeln!(out, " {} >= {}", v.name, fmt_num(lo)),
            (lo, hi) => writeln!(out, " {} <= {} <= {}", fmt_num(lo), v.name, fmt_num(hi)),
        };
    }
    let generals: Vec<&str> = sys
        .vars
        .iter()
        .filter(|v| v.kind != VarKind::Real)
        .map(|v| v.name.as_str())
        .collect();
    if !generals.is_empty() {
        out.push_str("Generals\n");
        for chunk in generals.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp(sys: &ConstraintSystem, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, emit_lp(sys))?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

struct Tok {
    text: String,
    line: usize,
}

fn is_op(t: &str) -> bool {
    matches!(t, "<=" | ">=" | "=<" | "=>" | "=" | "<" | ">")
}

fn op_sense(t: &str) -> Sense {
    match t {
        "<=" | "=<" | "<" => Sense::Le,
        ">=" | "=>" | ">" => Sense::Ge,
        _ => Sense::Eq,
    }
}

fn parse_num(t: &Tok) -> Result<f64> {
    match t.text.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        s => s
            .parse()
            .map_err(|_| Error::parse(t.line, format!("expected a number, got `{}`", t.text))),
    }
}

fn is_num(t: &str) -> bool {
    t.parse::<f64>().is_ok() || matches!(t.to_ascii_lowercase().as_str(), "inf" | "+inf" | "-inf")
}

/// Splits `x+y` or `-x` into separate sign and operand tokens, leaving
/// numbers such as `-1.5` and `2e-3` intact.
fn split_signs(word: &str) -> Vec<String> {
    if is_num(word) || is_op(word) {
        return vec![word.to_string()];
    }
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in word.chars() {
        let exponent = matches!(prev, Some('e' | 'E'))
            && cur.len() > 1
            && cur[..cur.len() - 1].parse::<f64>().is_ok();
        if (c == '+' || c == '-') && !exponent {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else {
            cur.push(c);
        }
        prev = Some(c);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

struct Names {
    index: HashMap<String, usize>,
    order: Vec<String>,
}

impl Names {
    fn get(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        self.order.push(name.to_string());
        self.index.insert(name.to_string(), self.order.len() - 1);
        self.order.len() - 1
    }
}

/// Parses a linear expression `[+|-] [coef] name ...` starting at `pos`,
/// stopping at a relational operator or the end of the token slice.
fn parse_expr(toks: &[Tok], pos: &mut usize, names: &mut Names) -> Result<Vec<(usize, f64)>> {
    let mut terms = Vec::new();
    while *pos < toks.len() && !is_op(&toks[*pos].text) {
        let mut sign = 1.0;
        while *pos < toks.len() && (toks[*pos].text == "+" || toks[*pos].text == "-") {
            if toks[*pos].text == "-" {
                sign = -sign;
            }
            *pos += 1;
        }
        let t = toks
            .get(*pos)
            .ok_or_else(|| Error::parse(toks[*pos - 1].line, "dangling sign"))?;
        let mut coef = 1.0;
        if is_num(&t.text) {
            coef = parse_num(t)?;
            *pos += 1;
        }
        let t = toks
            .get(*pos)
            .filter(|t| !is_op(&t.text) && !is_num(&t.text))
            .ok_or_else(|| Error::parse(t.line, "expected a variable name"))?;
        terms.push((names.get(&t.text), sign * coef));
        *pos += 1;
    }
    Ok(terms)
}

/// Reads the LP dialect written by [`emit_lp`]: one objective, named or
/// unnamed constraints, bounds lines, `Generals`/`Binaries` and `End`.
/// Integer variables with bounds `[0, 1]` come back as binary.
pub fn parse_lp(text: &str) -> Result<ConstraintSystem> {
    let mut section = Section::None;
    let mut direction = Direction::Min;
    let mut obj_toks: Vec<Tok> = Vec::new();
    let mut con_toks: Vec<Tok> = Vec::new();
    let mut bound_lines: Vec<(usize, Vec<String>)> = Vec::new();
    let mut general_names: Vec<String> = Vec::new();
    let mut binary_names: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        let next = match lower.as_str() {
            "minimize" | "minimise" | "min" => {
                direction = Direction::Min;
                Some(Section::Objective)
            }
            "maximize" | "maximise" | "max" => {
                direction = Direction::Max;
                Some(Section::Objective)
            }
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "generals" | "general" | "gen" => Some(Section::Generals),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        // Split off operators glued to neighbours, e.g. `x>=1`.
        let spaced = line
            .replace(">=", " >= ")
            .replace("<=", " <= ")
            .replace("=>", " => ")
            .replace("=<", " =< ");
        let spaced = if spaced.contains(">=")
            || spaced.contains("<=")
            || spaced.contains("=>")
            || spaced.contains("=<")
        {
            spaced
        } else {
            spaced.replace('=', " = ")
        };
        let words: Vec<String> = spaced.split_whitespace().map(str::to_string).collect();
        let push = |dst: &mut Vec<Tok>| {
            for w in &words {
                for piece in split_signs(w) {
                    dst.push(Tok {
                        text: piece,
                        line: line_no,
                    });
                }
            }
        };
        match section {
            Section::Objective => push(&mut obj_toks),
            Section::Constraints => push(&mut con_toks),
            Section::Bounds => bound_lines.push((line_no, words)),
            Section::Generals => general_names.extend(words.iter().cloned()),
            Section::Binaries => binary_names.extend(words.iter().cloned()),
            Section::None => return Err(Error::parse(line_no, "text before the objective section")),
            Section::End => return Err(Error::parse(line_no, "text after `End`")),
        }
    }

    // Bounds lines fix the variable order; anything else follows in order
    // of first appearance.
    let mut names = Names {
        index: HashMap::new(),
        order: Vec::new(),
    };
    let mut bounds: Vec<(usize, f64, f64)> = Vec::new();
    for (line_no, words) in &bound_lines {
        let ws: Vec<&str> = words.iter().map(String::as_str).collect();
        let tok = |i: usize| Tok {
            text: ws[i].to_string(),
            line: *line_no,
        };
        let bad = || Error::parse(*line_no, "unrecognised bounds line");
        let (name, lo, hi) = match ws.as_slice() {
            [name, free] if free.eq_ignore_ascii_case("free") => {
                (*name, f64::NEG_INFINITY, f64::INFINITY)
            }
            [lo, op1, name, op2, hi] if op_sense(op1) == Sense::Le && op_sense(op2) == Sense::Le => {
                (*name, parse_num(&tok(0))?, parse_num(&tok(4))?)
            }
            [name, op, _] if is_op(op) && !is_num(name) => match op_sense(op) {
                Sense::Ge => (*name, parse_num(&tok(2))?, f64::NAN),
                Sense::Le => (*name, f64::NAN, parse_num(&tok(2))?),
                Sense::Eq => {
                    let v = parse_num(&tok(2))?;
                    (*name, v, v)
                }
            },
            [_, op, name] if is_op(op) => match op_sense(op) {
                Sense::Le => (*name, parse_num(&tok(0))?, f64::NAN),
                Sense::Ge => (*name, f64::NAN, parse_num(&tok(0))?),
                Sense::Eq => {
                    let v = parse_num(&tok(0))?;
                    (*name, v, v)
                }
            },
            _ => return Err(bad()),
        };
        bounds.push((names.get(name), lo, hi));
    }

    let objective = {
        let mut pos = 0;
        if obj_toks.first().is_some_and(|t| t.text.ends_with(':')) {
            pos = 1;
        }
        let terms = parse_expr(&obj_toks, &mut pos, &mut names)?;
        if pos < obj_toks.len() {
            return Err(Error::parse(obj_toks[pos].line, "unexpected token in objective"));
        }
        terms
    };

    let mut rows = Vec::new();
    let mut pos = 0;
    while pos < con_toks.len() {
        if con_toks[pos].text.ends_with(':') {
            pos += 1;
        }
        let start_line = con_toks.get(pos).map_or(0, |t| t.line);
        let terms = parse_expr(&con_toks, &mut pos, &mut names)?;
        let op = con_toks
            .get(pos)
            .ok_or_else(|| Error::parse(start_line, "constraint without a relation"))?;
        let sense = op_sense(&op.text);
        pos += 1;
        let rhs_tok = con_toks
            .get(pos)
            .ok_or_else(|| Error::parse(op.line, "constraint without a right-hand side"))?;
        let rhs = parse_num(rhs_tok)?;
        pos += 1;
        rows.push(Row::new(terms, sense, rhs));
    }

    let mut sys = ConstraintSystem::default();
    for name in &names.order {
        sys.add_named_var(name.clone(), VarKind::Real, 0.0, f64::INFINITY);
    }
    for (j, lo, hi) in bounds {
        if !lo.is_nan() {
            sys.vars[j].lo = lo;
        }
        if !hi.is_nan() {
            sys.vars[j].hi = hi;
        }
    }
    for name in general_names.iter().chain(&binary_names) {
        let j = names.get(name);
        if j >= sys.vars.len() {
            sys.add_named_var(name.clone(), VarKind::Real, 0.0, f64::INFINITY);
        }
        sys.vars[j].kind = VarKind::Integer;
    }
    for name in &binary_names {
        let v = &mut sys.vars[names.index[name]];
        v.lo = v.lo.max(0.0);
        v.hi = v.hi.min(1.0);
    }
    for v in &mut sys.vars {
        if v.kind == VarKind::Integer && v.lo == 0.0 && v.hi == 1.0 {
            v.kind = VarKind::Binary;
        }
    }
    sys.rows = rows;
    sys.set_objective(direction, objective);
    Ok(sys)
}

pub fn read_lp(path: impl AsRef<Path>) -> Result<ConstraintSystem> {
    parse_lp(&std::fs::read_to_string(path)?)
}
