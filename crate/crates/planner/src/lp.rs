//! Linear constraint systems and their LP text form.
//!
//! The text form is the common CPLEX-style LP dialect: an objective section,
//! `Subject To`, `Bounds`, `Generals`, `Binaries`, `End`. Every variable is
//! listed under `Bounds` in declaration order so a parse restores the exact
//! variable layout.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().fold(0.0, |s, &(v, a)| s + a * values[v])
    }

    pub fn satisfied(&self, values: &[f64], tol: f64) -> bool {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum ObjectiveSense {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Objective {
    pub sense: ObjectiveSense,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct ConstraintSystem {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
    var_index: HashMap<String, usize>,
    row_index: HashMap<String, usize>,
}

/// Structural equality: same variables, rows and objective in the same order.
impl PartialEq for ConstraintSystem {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.constraints == other.constraints && self.objective == other.objective
    }
}

fn check_name(name: &str) -> Result<(), PlanError> {
    let reserved = ["inf", "infinity", "nan", "free"];
    if !netoperad_core::operad::is_identifier(name) || reserved.contains(&name.to_ascii_lowercase().as_str()) {
        return Err(PlanError::InvalidName(name.to_string()));
    }
    Ok(())
}

/// Merges repeated variables and drops zero coefficients, keeping first-seen order.
fn normalize(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (v, a) in terms {
        match out.iter_mut().find(|(w, _)| *w == v) {
            Some((_, b)) => *b += a,
            None => out.push((v, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

impl ConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lo: f64, hi: f64) -> Result<usize, PlanError> {
        let name = name.into();
        check_name(&name)?;
        if self.var_index.contains_key(&name) {
            return Err(PlanError::DuplicateName(name));
        }
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(PlanError::InvalidBounds { name, lo, hi });
        }
        let idx = self.vars.len();
        self.var_index.insert(name.clone(), idx);
        self.vars.push(Variable { name, kind, lo, hi });
        Ok(idx)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, PlanError> {
        let name = name.into();
        check_name(&name)?;
        if self.row_index.contains_key(&name) {
            return Err(PlanError::DuplicateName(name));
        }
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| *v >= self.vars.len()) {
            return Err(PlanError::UnknownVariable(format!("#{v}")));
        }
        if !rhs.is_finite() || terms.iter().any(|(_, a)| !a.is_finite()) {
            return Err(PlanError::NonFinite(name));
        }
        let idx = self.constraints.len();
        self.row_index.insert(name.clone(), idx);
        self.constraints.push(Constraint {
            name,
            terms: normalize(terms),
            sense,
            rhs,
        });
        Ok(idx)
    }

    pub fn set_objective(&mut self, sense: ObjectiveSense, terms: Vec<(usize, f64)>) -> Result<(), PlanError> {
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| *v >= self.vars.len()) {
            return Err(PlanError::UnknownVariable(format!("#{v}")));
        }
        self.objective = Objective {
            sense,
            terms: normalize(terms),
        };
        Ok(())
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn constraint(&self, name: &str) -> Option<usize> {
        self.row_index.get(name).copied()
    }

    /// Narrows a variable's bounds (used to fix decisions).
    pub fn fix(&mut self, var: usize, value: f64) {
        self.vars[var].lo = value;
        self.vars[var].hi = value;
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.terms.iter().fold(0.0, |s, &(v, a)| s + a * values[v])
    }

    /// Names of constraints violated by `values`, bounds and integrality included.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (v, x) in self.vars.iter().zip(values) {
            let integral = v.kind == VarKind::Continuous || (x - x.round()).abs() <= tol;
            if *x < v.lo - tol || *x > v.hi + tol || !integral {
                out.push(format!("bounds of {}", v.name));
            }
        }
        out.extend(self.constraints.iter().filter(|c| !c.satisfied(values, tol)).map(|c| c.name.clone()));
        out
    }

    pub fn is_feasible(&self, values: &[f64], tol: f64) -> bool {
        values.len() == self.vars.len() && self.violations(values, tol).is_empty()
    }

    pub fn to_lp(&self) -> String {
        export_lp(self)
    }
}

fn write_expr(out: &mut String, cs: &ConstraintSystem, terms: &[(usize, f64)]) {
    let mut line_len = 0usize;
    for &(v, a) in terms {
        let sign = if a.is_sign_negative() { '-' } else { '+' };
        let piece = format!(" {sign} {} {}", a.abs(), cs.vars[v].name);
        if line_len + piece.len() > 200 {
            out.push_str("\n   ");
            line_len = 0;
        }
        line_len += piece.len();
        out.push_str(&piece);
    }
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// Renders the system as LP text.
///
/// Variable names follow the compiler's scheme and are used verbatim; an empty
/// row is written with a `0` left-hand side.
pub fn export_lp(cs: &ConstraintSystem) -> String {
    let mut out = String::from("\\ netoperad constraint system\n");
    out.push_str(match cs.objective.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_expr(&mut out, cs, &cs.objective.terms);
    out.push_str("\nSubject To\n");
    for c in &cs.constraints {
        let _ = write!(out, " {}:", c.name);
        if c.terms.is_empty() {
            out.push_str(" 0");
        }
        write_expr(&mut out, cs, &c.terms);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &cs.vars {
        if v.lo == f64::NEG_INFINITY && v.hi == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_bound(v.lo), v.name, fmt_bound(v.hi));
        }
    }
    for (header, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let names: Vec<&str> = cs.vars.iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if !names.is_empty() {
            let _ = writeln!(out, "{header}");
            for chunk in names.chunks(8) {
                let _ = writeln!(out, " {}", chunk.join(" "));
            }
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Objective,
    Rows,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn header(line: &str) -> Option<(Section, Option<ObjectiveSense>)> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some((Section::Objective, Some(ObjectiveSense::Minimize))),
        "maximize" | "maximise" | "max" => Some((Section::Objective, Some(ObjectiveSense::Maximize))),
        "subject to" | "such that" | "st" | "s.t." => Some((Section::Rows, None)),
        "bounds" | "bound" => Some((Section::Bounds, None)),
        "generals" | "general" | "gen" => Some((Section::Generals, None)),
        "binaries" | "binary" | "bin" => Some((Section::Binaries, None)),
        "end" => Some((Section::End, None)),
        _ => None,
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => {
            let first = tok.chars().next()?;
            if first.is_ascii_digit() || matches!(first, '.' | '+' | '-') {
                tok.parse().ok()
            } else {
                None
            }
        }
    }
}

fn parse_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

struct Parser {
    names: Vec<String>,
    index: HashMap<String, usize>,
    kinds: BTreeMap<usize, VarKind>,
    bounds: BTreeMap<usize, (f64, f64)>,
}

impl Parser {
    fn var(&mut self, name: &str) -> Result<usize, PlanError> {
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        check_name(name)?;
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    /// `[sign] [coef] name` repeated; a lone `0` stands for an empty expression.
    fn expr(&mut self, toks: &[&str], line: usize) -> Result<Vec<(usize, f64)>, PlanError> {
        let err = |msg: &str| PlanError::LpParse {
            line,
            message: msg.to_string(),
        };
        let mut terms = Vec::new();
        let mut i = 0;
        if toks == ["0"] {
            return Ok(terms);
        }
        while i < toks.len() {
            let mut sign = 1.0;
            while i < toks.len() && (toks[i] == "+" || toks[i] == "-") {
                if toks[i] == "-" {
                    sign = -sign;
                }
                i += 1;
            }
            let mut coef = 1.0;
            if let Some(x) = toks.get(i).and_then(|t| parse_number(t)) {
                coef = x;
                i += 1;
            }
            let name = toks.get(i).ok_or_else(|| err("expected a variable name"))?;
            if parse_number(name).is_some() || parse_sense(name).is_some() {
                return Err(err(&format!("unexpected token `{name}`")));
            }
            terms.push((self.var(name)?, sign * coef));
            i += 1;
        }
        Ok(terms)
    }
}

/// Parses the LP dialect written by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<ConstraintSystem, PlanError> {
    let mut section = None;
    let mut sense = ObjectiveSense::Minimize;
    // (line number, tokens) per logical statement
    let mut objective: Vec<(usize, String)> = Vec::new();
    let mut rows: Vec<(usize, String)> = Vec::new();
    let mut bounds: Vec<(usize, String)> = Vec::new();
    let mut generals: Vec<String> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((s, obj)) = header(line) {
            section = Some(s);
            if let Some(o) = obj {
                sense = o;
            }
            continue;
        }
        let n = n + 1;
        match section {
            None => {
                return Err(PlanError::LpParse {
                    line: n,
                    message: "content before the objective section".into(),
                })
            }
            Some(Section::Objective) => objective.push((n, line.to_string())),
            Some(Section::Rows) => {
                // a new statement starts with `name:`
                let starts = line.split_whitespace().next().is_some_and(|t| t.ends_with(':'));
                match rows.last_mut() {
                    Some(last) if !starts => {
                        last.1.push(' ');
                        last.1.push_str(line);
                    }
                    _ => rows.push((n, line.to_string())),
                }
            }
            Some(Section::Bounds) => bounds.push((n, line.to_string())),
            Some(Section::Generals) => generals.extend(line.split_whitespace().map(str::to_string)),
            Some(Section::Binaries) => binaries.extend(line.split_whitespace().map(str::to_string)),
            Some(Section::End) => {
                return Err(PlanError::LpParse {
                    line: n,
                    message: "content after End".into(),
                })
            }
        }
    }
    if section != Some(Section::End) {
        return Err(PlanError::LpParse {
            line: text.lines().count(),
            message: "missing End".into(),
        });
    }

    let mut p = Parser {
        names: Vec::new(),
        index: HashMap::new(),
        kinds: BTreeMap::new(),
        bounds: BTreeMap::new(),
    };
    // Bounds first so declaration order is restored.
    for (n, line) in &bounds {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = || PlanError::LpParse {
            line: *n,
            message: format!("unsupported bound `{line}`"),
        };
        match toks.as_slice() {
            [name, free] if free.eq_ignore_ascii_case("free") => {
                let v = p.var(name)?;
                p.bounds.insert(v, (f64::NEG_INFINITY, f64::INFINITY));
            }
            [lo, "<=", name, "<=", hi] => {
                let (lo, hi) = (parse_number(lo).ok_or_else(err)?, parse_number(hi).ok_or_else(err)?);
                let v = p.var(name)?;
                p.bounds.insert(v, (lo, hi));
            }
            [name, op, x] => {
                let x = parse_number(x).ok_or_else(err)?;
                let v = p.var(name)?;
                let cur = p.bounds.get(&v).copied().unwrap_or((0.0, f64::INFINITY));
                let b = match parse_sense(op).ok_or_else(err)? {
                    Sense::Le => (cur.0, x),
                    Sense::Ge => (x, cur.1),
                    Sense::Eq => (x, x),
                };
                p.bounds.insert(v, b);
            }
            _ => return Err(err()),
        }
    }
    let obj_line = objective.iter().map(|(_, l)| l.as_str()).collect::<Vec<_>>().join(" ");
    let obj_n = objective.first().map_or(0, |(n, _)| *n);
    let mut obj_toks: Vec<&str> = obj_line.split_whitespace().collect();
    if obj_toks.first().is_some_and(|t| t.ends_with(':')) {
        obj_toks.remove(0);
    }
    let obj_terms = p.expr(&obj_toks, obj_n)?;
    let mut parsed_rows = Vec::new();
    for (n, line) in &rows {
        let (name, rest) = line.split_once(':').ok_or_else(|| PlanError::LpParse {
            line: *n,
            message: "constraint without a name".into(),
        })?;
        let toks: Vec<&str> = rest.split_whitespace().collect();
        let pos = toks.iter().position(|t| parse_sense(t).is_some()).ok_or_else(|| PlanError::LpParse {
            line: *n,
            message: "constraint without a sense".into(),
        })?;
        let sense = parse_sense(toks[pos]).expect("checked");
        let rhs = match &toks[pos + 1..] {
            [x] => parse_number(x),
            _ => None,
        }
        .ok_or_else(|| PlanError::LpParse {
            line: *n,
            message: "expected one right-hand-side number".into(),
        })?;
        let terms = p.expr(&toks[..pos], *n)?;
        parsed_rows.push((name.trim().to_string(), terms, sense, rhs));
    }
    for name in &generals {
        let v = p.var(name)?;
        p.kinds.insert(v, VarKind::Integer);
    }
    for name in &binaries {
        let v = p.var(name)?;
        p.kinds.insert(v, VarKind::Binary);
    }

    let mut cs = ConstraintSystem::new();
    for (i, name) in p.names.iter().enumerate() {
        let kind = p.kinds.get(&i).copied().unwrap_or(VarKind::Continuous);
        let default = if kind == VarKind::Binary { (0.0, 1.0) } else { (0.0, f64::INFINITY) };
        let (lo, hi) = p.bounds.get(&i).copied().unwrap_or(default);
        cs.add_var(name.clone(), kind, lo, hi)?;
    }
    for (name, terms, sense, rhs) in parsed_rows {
        cs.add_constraint(name, terms, sense, rhs)?;
    }
    cs.set_objective(sense, obj_terms)?;
    Ok(cs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConstraintSystem {
        let mut cs = ConstraintSystem::new();
        let x = cs.add_var("x", VarKind::Binary, 0.0, 1.0).unwrap();
        let y = cs.add_var("y", VarKind::Integer, -2.0, 7.0).unwrap();
        let z = cs.add_var("z", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        cs.add_constraint("r1", vec![(x, 1.0), (y, -2.5), (z, 0.1)], Sense::Le, 3.25).unwrap();
        cs.add_constraint("r2", vec![(z, -1.0)], Sense::Eq, -4.0).unwrap();
        cs.add_constraint("r3", vec![], Sense::Ge, -1.0).unwrap();
        cs.set_objective(ObjectiveSense::Maximize, vec![(y, 2.0), (x, -1.0)]).unwrap();
        cs
    }

    #[test]
    fn round_trip() {
        let cs = sample();
        let text = export_lp(&cs);
        assert_eq!(parse_lp(&text).unwrap(), cs);
    }

    #[test]
    fn empty_system() {
        let cs = ConstraintSystem::new();
        let text = export_lp(&cs);
        assert!(text.contains("Subject To") && text.ends_with("End\n"));
        assert_eq!(parse_lp(&text).unwrap(), cs);
    }

    #[test]
    fn merges_terms_and_rejects_bad_names() {
        let mut cs = ConstraintSystem::new();
        let x = cs.add_var("x", VarKind::Binary, 0.0, 1.0).unwrap();
        cs.add_constraint("r", vec![(x, 1.0), (x, 2.0)], Sense::Le, 1.0).unwrap();
        assert_eq!(cs.constraints()[0].terms, vec![(x, 3.0)]);
        assert!(cs.add_var("inf", VarKind::Binary, 0.0, 1.0).is_err());
        assert!(cs.add_var("x", VarKind::Binary, 0.0, 1.0).is_err());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = parse_lp("Minimize\n obj: x\nSubject To\n r: x\nEnd\n").unwrap_err();
        assert!(matches!(err, PlanError::LpParse { line: 4, .. }));
    }
}
