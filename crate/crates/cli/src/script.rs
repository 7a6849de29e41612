//! Composition scripts: named types and operations built from template generators.
//!
//! ```text
//! # comments run to the end of the line
//! type w = [cut, helo, qd, qd]
//! let a = edge(w, carrying, 1, 0)     # node 1 carried by node 0
//! let b = overlay(a, edge(w, carrying, 3, 1))
//! result b
//! ```
//!
//! Calls: `id(T)`, `unit()`, `edge(T, interaction, source, target)`,
//! `link(T, interaction, i, j)`, `overlay(x, ...)`, `parallel(x, ...)`,
//! `compose(f, g1, ..., gk)` and `permute(x, [p0, p1, ...])`. Without a
//! `result` line the last binding is the result; an empty script yields the
//! unit operation.

use std::collections::BTreeMap;

use netoperad_core::template::{InducedOperad, TemplateError};
use netoperad_core::{EdgeKey, Endpoints, InteractionId, NetOperation, NetType, OperadError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Operad {
        line: usize,
        #[source]
        source: OperadError,
    },
    #[error("line {line}: {source}")]
    Template {
        line: usize,
        #[source]
        source: TemplateError,
    },
}

impl ScriptError {
    /// The line the error points at.
    pub fn line(&self) -> usize {
        match self {
            ScriptError::Syntax { line, .. } | ScriptError::Operad { line, .. } | ScriptError::Template { line, .. } => {
                *line
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(usize),
    Sym(char),
}

#[derive(Debug, Clone)]
enum Expr {
    Name(String),
    Num(usize),
    List(Vec<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone)]
enum Value {
    Type(NetType),
    Op(NetOperation),
}

fn tokenize(src: &str, line: usize) -> Result<Vec<Tok>, ScriptError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek().filter(|c| c.is_ascii_alphanumeric() || **c == '_') {
                s.push(c);
                chars.next();
            }
            out.push(Tok::Ident(s));
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek().filter(|c| c.is_ascii_digit()) {
                s.push(c);
                chars.next();
            }
            let n = s.parse().map_err(|_| ScriptError::Syntax {
                line,
                message: format!("number `{s}` is too large"),
            })?;
            out.push(Tok::Num(n));
        } else if "()[],=".contains(c) {
            out.push(Tok::Sym(c));
            chars.next();
        } else {
            return Err(ScriptError::Syntax {
                line,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ScriptError> {
        Err(ScriptError::Syntax {
            line: self.line,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ScriptError> {
        match self.next() {
            Some(Tok::Sym(s)) if s == c => Ok(()),
            other => self.err(format!("expected `{c}`, found {}", show(other.as_ref()))),
        }
    }

    fn ident(&mut self) -> Result<String, ScriptError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => self.err(format!("expected a name, found {}", show(other.as_ref()))),
        }
    }

    fn list(&mut self, close: char) -> Result<Vec<Expr>, ScriptError> {
        let mut items = Vec::new();
        if self.peek() == Some(&Tok::Sym(close)) {
            self.next();
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            match self.next() {
                Some(Tok::Sym(',')) => continue,
                Some(Tok::Sym(c)) if c == close => return Ok(items),
                other => return self.err(format!("expected `,` or `{close}`, found {}", show(other.as_ref()))),
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ScriptError> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(Expr::Num(n)),
            Some(Tok::Sym('[')) => Ok(Expr::List(self.list(']')?)),
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::Sym('(')) {
                    self.next();
                    Ok(Expr::Call(name, self.list(')')?))
                } else {
                    Ok(Expr::Name(name))
                }
            }
            other => self.err(format!("expected an expression, found {}", show(other.as_ref()))),
        }
    }

    fn done(&self) -> Result<(), ScriptError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.err(format!("unexpected {}", show(Some(t)))),
        }
    }
}

fn show(t: Option<&Tok>) -> String {
    match t {
        None => "end of line".into(),
        Some(Tok::Ident(s)) => format!("`{s}`"),
        Some(Tok::Num(n)) => format!("`{n}`"),
        Some(Tok::Sym(c)) => format!("`{c}`"),
    }
}

struct Interp<'a> {
    operad: &'a InducedOperad,
    env: BTreeMap<String, Value>,
    line: usize,
}

impl Interp<'_> {
    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ScriptError> {
        Err(ScriptError::Syntax {
            line: self.line,
            message: message.into(),
        })
    }

    fn op_err(&self) -> impl Fn(OperadError) -> ScriptError + '_ {
        |source| ScriptError::Operad { line: self.line, source }
    }

    fn tmpl_err(&self) -> impl Fn(TemplateError) -> ScriptError + '_ {
        |source| ScriptError::Template { line: self.line, source }
    }

    fn type_literal(&self, items: &[Expr]) -> Result<NetType, ScriptError> {
        let mut names = Vec::new();
        for e in items {
            match e {
                Expr::Name(n) => names.push(n.as_str()),
                _ => return self.syntax("a type is a list of color names"),
            }
        }
        self.operad.net_type(&names).map_err(self.tmpl_err())
    }

    fn eval(&self, e: &Expr) -> Result<Value, ScriptError> {
        match e {
            Expr::Name(n) => self
                .env
                .get(n)
                .cloned()
                .map_or_else(|| self.syntax(format!("`{n}` is not defined")), Ok),
            Expr::List(items) => Ok(Value::Type(self.type_literal(items)?)),
            Expr::Num(_) => self.syntax("a number is not a value here"),
            Expr::Call(f, args) => self.call(f, args),
        }
    }

    fn op(&self, e: &Expr) -> Result<NetOperation, ScriptError> {
        match self.eval(e)? {
            Value::Op(o) => Ok(o),
            Value::Type(_) => self.syntax("expected an operation, found a type"),
        }
    }

    fn ty(&self, e: &Expr) -> Result<NetType, ScriptError> {
        match self.eval(e)? {
            Value::Type(t) => Ok(t),
            Value::Op(_) => self.syntax("expected a type, found an operation"),
        }
    }

    fn num(&self, e: &Expr) -> Result<usize, ScriptError> {
        match e {
            Expr::Num(n) => Ok(*n),
            _ => self.syntax("expected a node index"),
        }
    }

    fn word(&self, e: &Expr) -> Result<String, ScriptError> {
        match e {
            Expr::Name(n) => Ok(n.clone()),
            _ => self.syntax("expected an interaction name"),
        }
    }

    fn arity(&self, f: &str, args: &[Expr], n: usize) -> Result<(), ScriptError> {
        if args.len() == n {
            Ok(())
        } else {
            self.syntax(format!("`{f}` takes {n} arguments, found {}", args.len()))
        }
    }

    fn call(&self, f: &str, args: &[Expr]) -> Result<Value, ScriptError> {
        let op = match f {
            "id" => {
                self.arity(f, args, 1)?;
                self.operad.identity(&self.ty(&args[0])?).map_err(self.tmpl_err())?
            }
            "unit" => {
                self.arity(f, args, 0)?;
                self.operad.unit()
            }
            "edge" | "link" => {
                self.arity(f, args, 4)?;
                let t = self.ty(&args[0])?;
                let name = self.word(&args[1])?;
                let (i, j) = (self.num(&args[2])?, self.num(&args[3])?);
                let key = if f == "edge" {
                    EdgeKey::new(InteractionId::directed(name), Endpoints::directed(i, j).map_err(self.op_err())?)
                } else {
                    EdgeKey::new(InteractionId::undirected(name), Endpoints::undirected(i, j).map_err(self.op_err())?)
                };
                self.operad.generator(&t, key).map_err(self.tmpl_err())?
            }
            "overlay" | "parallel" => {
                if args.is_empty() {
                    return self.syntax(format!("`{f}` needs at least one operation"));
                }
                let mut acc = self.op(&args[0])?;
                for a in &args[1..] {
                    let b = self.op(a)?;
                    acc = if f == "overlay" { acc.overlay(&b) } else { acc.parallel(&b) }.map_err(self.op_err())?;
                }
                acc
            }
            "compose" => {
                if args.is_empty() {
                    return self.syntax("`compose` needs an outer operation");
                }
                let outer = self.op(&args[0])?;
                let inner = args[1..].iter().map(|a| self.op(a)).collect::<Result<Vec<_>, _>>()?;
                outer.compose(&inner).map_err(self.op_err())?
            }
            "permute" => {
                self.arity(f, args, 2)?;
                let x = self.op(&args[0])?;
                let Expr::List(items) = &args[1] else {
                    return self.syntax("`permute` takes a list of node indices");
                };
                let sigma = items.iter().map(|e| self.num(e)).collect::<Result<Vec<_>, _>>()?;
                x.permute(&sigma).map_err(self.op_err())?
            }
            _ => return self.syntax(format!("unknown function `{f}`")),
        };
        Ok(Value::Op(op))
    }
}

/// Runs a script against the operad of a template.
pub fn run(operad: &InducedOperad, src: &str) -> Result<NetOperation, ScriptError> {
    let mut it = Interp {
        operad,
        env: BTreeMap::new(),
        line: 0,
    };
    let mut last: Option<NetOperation> = None;
    let mut result: Option<NetOperation> = None;
    for (i, raw) in src.lines().enumerate() {
        it.line = i + 1;
        let text = raw.split('#').next().unwrap_or("");
        let toks = tokenize(text, it.line)?;
        if toks.is_empty() {
            continue;
        }
        if result.is_some() {
            return it.syntax("nothing may follow `result`");
        }
        let mut p = Parser {
            toks,
            pos: 0,
            line: it.line,
        };
        match p.ident()?.as_str() {
            kw @ ("type" | "let") => {
                let name = p.ident()?;
                p.expect('=')?;
                let e = p.expr()?;
                p.done()?;
                let v = if kw == "type" {
                    Value::Type(it.ty(&e)?)
                } else {
                    let o = it.op(&e)?;
                    last = Some(o.clone());
                    Value::Op(o)
                };
                if it.env.insert(name.clone(), v).is_some() {
                    return it.syntax(format!("`{name}` is already defined"));
                }
            }
            "result" => {
                let e = p.expr()?;
                p.done()?;
                result = Some(it.op(&e)?);
            }
            other => return it.syntax(format!("expected `type`, `let` or `result`, found `{other}`")),
        }
    }
    Ok(result.or(last).unwrap_or_else(|| operad.unit()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use netoperad_core::template::NetworkTemplate;

    fn sail() -> InducedOperad {
        let bytes = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sailboat_template.json")).unwrap();
        InducedOperad::new(NetworkTemplate::parse(&bytes).unwrap())
    }

    #[test]
    fn carrying_example_has_three_edges() {
        let src = "type w = [cut, helo, qd, qd]\n\
                   let f = overlay(edge(w, carrying, 1, 0), edge(w, carrying, 2, 0), edge(w, carrying, 3, 1))\n";
        let op = run(&sail(), src).unwrap();
        assert_eq!(op.edge_count(), 3);
        assert_eq!(op.node_count(), 4);
    }

    #[test]
    fn empty_script_is_the_unit() {
        let op = sail();
        assert_eq!(run(&op, "# nothing\n\n").unwrap(), op.unit());
    }

    #[test]
    fn slot_type_mismatch_names_both_words() {
        let src = "type s1 = [helo, qd]\ntype s2 = [cut]\n\
                   let inner = edge(s1, carrying, 1, 0)\n\
                   let outer = parallel(id(s1), id(s2))\n\
                   let bad = compose(outer, id(s2), inner)\n";
        let err = run(&sail(), src).unwrap_err();
        assert_eq!(err.line(), 5);
        let msg = err.to_string();
        assert!(msg.contains("slot 0"), "{msg}");
        assert!(msg.contains("helo") && msg.contains("cut"), "{msg}");
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let op = sail();
        assert_eq!(run(&op, "type w = [cut]\nlet x = edge(w, carrying, 0)\n").unwrap_err().line(), 2);
        assert_eq!(run(&op, "let x = nope\n").unwrap_err().line(), 1);
        assert!(run(&op, "type w = [cut, qd]\nlet x = edge(w, carrying, 0, 1)").is_err());
    }
}
