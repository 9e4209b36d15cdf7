//! Sparse linear constraint systems and their plain-text format.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Real,
    Binary,
    Integer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Ge => ">=",
            Sense::Le => "<=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// `(variable, coefficient)` pairs, variables strictly increasing.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    /// Sorts terms, sums repeated variables and drops zeros.
    pub fn new(mut coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Row {
        Row {
            coeffs: {
                normalize_terms(&mut coeffs);
                coeffs
            },
            sense,
            rhs,
        }
    }

    pub fn ge(coeffs: Vec<(usize, f64)>, rhs: f64) -> Row {
        Row::new(coeffs, Sense::Ge, rhs)
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

pub(crate) fn normalize_terms(terms: &mut Vec<(usize, f64)>) {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for &(j, a) in terms.iter() {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    *terms = out;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Objective {
    pub direction: Direction,
    pub coeffs: Vec<(usize, f64)>,
}

impl Objective {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, c)| c * x[j]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConstraintSystem {
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
    pub objective: Objective,
}

impl ConstraintSystem {
    /// `n` real variables `x0..x{n-1}` on `[0, inf)`, no rows, objective `min 0`.
    pub fn new(n: usize) -> Self {
        let mut sys = ConstraintSystem::default();
        for _ in 0..n {
            sys.add_var(VarKind::Real, 0.0, f64::INFINITY);
        }
        sys
    }

    /// Adds a variable named `x<index>`.
    pub fn add_var(&mut self, kind: VarKind, lo: f64, hi: f64) -> usize {
        let name = format!("x{}", self.vars.len());
        self.add_named_var(name, kind, lo, hi)
    }

    pub fn add_named_var(&mut self, name: String, kind: VarKind, lo: f64, hi: f64) -> usize {
        self.vars.push(Var { name, kind, lo, hi });
        self.vars.len() - 1
    }

    pub fn add_row(&mut self, row: Row) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn set_objective(&mut self, direction: Direction, mut coeffs: Vec<(usize, f64)>) {
        normalize_terms(&mut coeffs);
        self.objective = Objective { direction, coeffs };
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Checks that every term refers to an existing variable.
    pub fn check(&self) -> Result<()> {
        let n = self.vars.len();
        let bad = |terms: &[(usize, f64)]| terms.iter().any(|&(j, _)| j >= n);
        if let Some(i) = self.rows.iter().position(|r| bad(&r.coeffs)) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} refers to a variable beyond {n}"
            )));
        }
        if bad(&self.objective.coeffs) {
            return Err(Error::DimensionMismatch(format!(
                "objective refers to a variable beyond {n}"
            )));
        }
        Ok(())
    }

    /// Row constraints only; bounds and integrality are ignored.
    pub fn rows_satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.rows.iter().all(|r| r.is_satisfied(x, tol))
    }

    /// Rows, bounds and integrality.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.vars.len()
            && self.vars.iter().zip(x).all(|(v, &xi)| {
                xi >= v.lo - tol
                    && xi <= v.hi + tol
                    && (v.kind == VarKind::Real || (xi - xi.round()).abs() <= tol)
            })
            && self.rows_satisfied(x, tol)
    }

    /// Same system with every variable continuous. Binary variables keep
    /// their `[0, 1]` box.
    pub fn relaxed(&self) -> ConstraintSystem {
        let mut sys = self.clone();
        for v in &mut sys.vars {
            if v.kind == VarKind::Binary {
                v.lo = v.lo.max(0.0);
                v.hi = v.hi.min(1.0);
            }
            v.kind = VarKind::Real;
        }
        sys
    }

    /// Rows rewritten as `>=` rows: `<=` rows are negated, equalities split.
    pub fn ge_rows(&self) -> Vec<Row> {
        let mut out = Vec::with_capacity(self.rows.len());
        let neg = |r: &Row| Row {
            coeffs: r.coeffs.iter().map(|&(j, a)| (j, -a)).collect(),
            sense: Sense::Ge,
            rhs: -r.rhs,
        };
        for r in &self.rows {
            match r.sense {
                Sense::Ge => out.push(r.clone()),
                Sense::Le => out.push(neg(r)),
                Sense::Eq => {
                    out.push(Row {
                        sense: Sense::Ge,
                        ..r.clone()
                    });
                    out.push(neg(r));
                }
            }
        }
        out
    }

    /// Text format:
    ///
    /// ```text
    /// vars 3
    /// var 0 binary
    /// var 2 real -inf 4
    /// row >= 1 0:1 2:1
    /// obj min 0:3 1:2
    /// ```
    ///
    /// Variables default to `real` on `[0, inf)`. The sense of a row may be
    /// omitted, meaning `>=`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sys: Option<ConstraintSystem> = None;
        let mut objective_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap_or_default();
            if head == "vars" {
                if sys.is_some() {
                    return Err(Error::parse(line_no, "second `vars` line"));
                }
                let n = parse_tok::<usize>(toks.next(), line_no, "variable count")?;
                sys = Some(ConstraintSystem::new(n));
                continue;
            }
            let Some(s) = sys.as_mut() else {
                return Err(Error::parse(line_no, "expected `vars <n>` first"));
            };
            let n = s.vars.len();
            match head {
                "var" => {
                    let j = parse_tok::<usize>(toks.next(), line_no, "variable index")?;
                    if j >= n {
                        return Err(Error::parse(line_no, format!("variable {j} out of range")));
                    }
                    let kind = match toks.next() {
                        Some("real") => VarKind::Real,
                        Some("binary") => VarKind::Binary,
                        Some("integer") => VarKind::Integer,
                        other => {
                            return Err(Error::parse(
                                line_no,
                                format!("unknown variable kind {:?}", other.unwrap_or("")),
                            ))
                        }
                    };
                    let (lo, hi) = match (toks.next(), toks.next()) {
                        (None, _) if kind == VarKind::Binary => (0.0, 1.0),
                        (None, _) => (0.0, f64::INFINITY),
                        (Some(a), Some(b)) => (parse_bound(a, line_no)?, parse_bound(b, line_no)?),
                        _ => return Err(Error::parse(line_no, "bounds need both lo and hi")),
                    };
                    if lo > hi {
                        return Err(Error::parse(line_no, "lower bound exceeds upper bound"));
                    }
                    let v = &mut s.vars[j];
                    v.kind = kind;
                    v.lo = lo;
                    v.hi = hi;
                }
                "row" => {
                    let mut first = toks.next();
                    let sense = match first {
                        Some(">=") => Some(Sense::Ge),
                        Some("<=") => Some(Sense::Le),
                        Some("=") => Some(Sense::Eq),
                        _ => None,
                    };
                    if sense.is_some() {
                        first = toks.next();
                    }
                    let rhs = parse_tok::<f64>(first, line_no, "right-hand side")?;
                    let terms = parse_terms(toks, n, line_no)?;
                    s.rows.push(Row::new(terms, sense.unwrap_or(Sense::Ge), rhs));
                }
                "obj" => {
                    if objective_seen {
                        return Err(Error::parse(line_no, "second `obj` line"));
                    }
                    objective_seen = true;
                    let direction = match toks.next() {
                        Some("min") => Direction::Min,
                        Some("max") => Direction::Max,
                        _ => return Err(Error::parse(line_no, "expected `min` or `max`")),
                    };
                    let terms = parse_terms(toks, n, line_no)?;
                    s.set_objective(direction, terms);
                }
                other => {
                    return Err(Error::parse(line_no, format!("unknown directive `{other}`")));
                }
            }
        }
        sys.ok_or_else(|| Error::parse(1, "missing `vars <n>` line"))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.vars.len());
        for (j, v) in self.vars.iter().enumerate() {
            let kind = match v.kind {
                VarKind::Real => "real",
                VarKind::Binary => "binary",
                VarKind::Integer => "integer",
            };
            let default = match v.kind {
                VarKind::Binary => (0.0, 1.0),
                _ => (0.0, f64::INFINITY),
            };
            if (v.lo, v.hi) == default && v.kind == VarKind::Real {
                continue;
            }
            let _ = write!(out, "var {j} {kind}");
            if (v.lo, v.hi) != default {
                let _ = write!(out, " {} {}", fmt_bound(v.lo), fmt_bound(v.hi));
            }
            out.push('\n');
        }
        for r in &self.rows {
            let _ = write!(out, "row {} {}", r.sense.symbol(), r.rhs);
            for &(j, a) in &r.coeffs {
                let _ = write!(out, " {j}:{a}");
            }
            out.push('\n');
        }
        let dir = match self.objective.direction {
            Direction::Min => "min",
            Direction::Max => "max",
        };
        let _ = write!(out, "obj {dir}");
        for &(j, c) in &self.objective.coeffs {
            let _ = write!(out, " {j}:{c}");
        }
        out.push('\n');
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{tok}`")))
}

fn parse_bound(tok: &str, line: usize) -> Result<f64> {
    match tok {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => parse_tok(Some(tok), line, "bound"),
    }
}

fn fmt_bound(b: f64) -> String {
    if b == f64::INFINITY {
        "inf".into()
    } else if b == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{b}")
    }
}

fn parse_terms<'a>(
    toks: impl Iterator<Item = &'a str>,
    n: usize,
    line: usize,
) -> Result<Vec<(usize, f64)>> {
    toks.map(|t| {
        let (j, a) = t
            .split_once(':')
            .ok_or_else(|| Error::parse(line, format!("expected idx:coef, got `{t}`")))?;
        let j: usize = parse_tok(Some(j), line, "variable index")?;
        if j >= n {
            return Err(Error::parse(line, format!("variable {j} out of range")));
        }
        Ok((j, parse_tok(Some(a), line, "coefficient")?))
    })
    .collect()
}
