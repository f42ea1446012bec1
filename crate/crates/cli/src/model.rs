//! Model files: an optional `kind` line, `param` bindings, and one payload
//! (ensemble records, a potential `H`, or a gas `e`, `v` pair).

use std::collections::BTreeMap;
use std::fmt;

use jetmoments_core::frame::PotentialChart;
use jetmoments_core::{Expr, FiniteEnsemble, GasChart};

use crate::grammar::{lex_line, print_expr, fmt_num, Cursor, IdentUse, Pos, SyntaxError, Tok, Token, FUNCTIONS};

/// Largest potential dimension; the reserved variables are `l1` to `l4`.
pub const MAX_DIM: usize = 4;
/// Ensemble weights summing to within this of one are rescaled.
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Ensemble,
    Potential,
    Gas,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Ensemble => "ensemble",
            Kind::Potential => "potential",
            Kind::Gas => "gas",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub expr: Expr,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// Records as written: coordinates then weight.
    Ensemble(Vec<Vec<f64>>),
    Potential { dim: usize, h: Expr },
    Gas { e: Expr, v: Expr },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub params: Vec<Param>,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemanticError {
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for SemanticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    Syntax(SyntaxError),
    Semantic(SemanticError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Syntax(e) => e.fmt(f),
            ModelError::Semantic(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<SyntaxError> for ModelError {
    fn from(e: SyntaxError) -> Self {
        ModelError::Syntax(e)
    }
}

fn semantic(pos: Pos, message: impl Into<String>) -> ModelError {
    ModelError::Semantic(SemanticError { pos, message: message.into() })
}

fn syntax(pos: Pos, expected: &[&str], found: impl fmt::Display) -> ModelError {
    ModelError::Syntax(SyntaxError {
        pos,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: found.to_string(),
    })
}

const KEYWORDS: [&str; 6] = ["kind", "param", "dim", "H", "e", "v"];

fn reserved_vars(kind: Kind, dim: usize) -> Vec<String> {
    match kind {
        Kind::Gas => vec!["T".into(), "p".into()],
        Kind::Potential => (1..=dim).map(|i| format!("l{i}")).collect(),
        Kind::Ensemble => Vec::new(),
    }
}

fn is_reserved_name(name: &str) -> bool {
    name == "T" || name == "p" || name.strip_prefix('l').is_some_and(|d| d.parse::<usize>().is_ok_and(|i| (1..=MAX_DIM).contains(&i)))
}

/// A statement before name resolution.
enum Stmt {
    Kind(Kind, Pos),
    Param(String, Pos, Expr, Vec<IdentUse>),
    Dim(usize, Pos),
    Assign(char, Pos, Expr, Vec<IdentUse>),
    Record(Vec<f64>, Pos),
}

fn parse_stmt(toks: &[Token]) -> Result<Option<Stmt>, ModelError> {
    let first = &toks[0];
    let mut cur = Cursor::new(toks);
    let stmt = match &first.tok {
        Tok::End => return Ok(None),
        Tok::Ident(k) if k == "kind" => {
            cur.next();
            let t = cur.next();
            let kind = match &t.tok {
                Tok::Ident(s) if s == "ensemble" => Kind::Ensemble,
                Tok::Ident(s) if s == "potential" => Kind::Potential,
                Tok::Ident(s) if s == "gas" => Kind::Gas,
                other => return Err(syntax(t.pos, &["`ensemble`", "`potential`", "`gas`"], other)),
            };
            Stmt::Kind(kind, first.pos)
        }
        Tok::Ident(k) if k == "param" => {
            cur.next();
            let t = cur.next();
            let Tok::Ident(name) = t.tok else { return Err(syntax(t.pos, &["parameter name"], &t.tok)) };
            if KEYWORDS.contains(&name.as_str()) || FUNCTIONS.contains(&name.as_str()) || is_reserved_name(&name) {
                return Err(semantic(t.pos, format!("`{name}` is reserved and cannot be a parameter")));
            }
            expect_eq(&mut cur)?;
            let e = cur.expr()?;
            Stmt::Param(name, t.pos, e, std::mem::take(&mut cur.idents))
        }
        Tok::Ident(k) if k == "dim" => {
            cur.next();
            let t = cur.next();
            match t.tok {
                Tok::Num(x) if x.fract() == 0.0 && x >= 0.0 && x <= 1e6 => Stmt::Dim(x as usize, t.pos),
                other => return Err(syntax(t.pos, &["integer dimension"], other)),
            }
        }
        Tok::Ident(k) if (k == "H" || k == "e" || k == "v") => {
            cur.next();
            expect_eq(&mut cur)?;
            let e = cur.expr()?;
            Stmt::Assign(k.chars().next().unwrap(), first.pos, e, std::mem::take(&mut cur.idents))
        }
        Tok::Num(_) | Tok::Op('-') | Tok::Op('+') => {
            let mut rec = Vec::new();
            loop {
                let t = cur.next();
                let (sign, t) = match t.tok {
                    Tok::Op('-') => (-1.0, cur.next()),
                    Tok::Op('+') => (1.0, cur.next()),
                    Tok::End => break,
                    _ => (1.0, t),
                };
                match t.tok {
                    Tok::Num(x) => rec.push(sign * x),
                    other => return Err(syntax(t.pos, &["number"], other)),
                }
            }
            return Ok(Some(Stmt::Record(rec, first.pos)));
        }
        other => {
            return Err(syntax(first.pos, &["`kind`", "`param`", "`dim`", "`H`", "`e`", "`v`", "number"], other));
        }
    };
    cur.expect_end()?;
    Ok(Some(stmt))
}

fn expect_eq(cur: &mut Cursor<'_>) -> Result<(), ModelError> {
    let t = cur.next();
    if t.tok != Tok::Eq {
        return Err(syntax(t.pos, &["`=`"], &t.tok));
    }
    Ok(())
}

/// Turns bound identifiers into `Param` nodes; reserved ones stay `Var`.
fn resolve(e: &Expr, idents: &[IdentUse], vars: &[String], params: &BTreeMap<String, f64>) -> Result<Expr, ModelError> {
    for u in idents {
        if !vars.contains(&u.name) && !params.contains_key(&u.name) {
            return Err(semantic(u.pos, format!("unbound name `{}`", u.name)));
        }
    }
    let map: BTreeMap<String, Expr> =
        e.variables().into_iter().filter(|n| !vars.contains(n)).map(|n| (n.clone(), Expr::Param(n))).collect();
    Ok(e.substitute(&map))
}

pub fn parse_model(text: &str) -> Result<ModelFile, ModelError> {
    let mut stmts = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let toks = lex_line(line, i + 1)?;
        if let Some(s) = parse_stmt(&toks)? {
            stmts.push(s);
        }
    }

    let mut kind = None;
    let mut dim = None;
    for s in &stmts {
        match s {
            Stmt::Kind(k, pos) => {
                if kind.is_some() {
                    return Err(semantic(*pos, "duplicate `kind`"));
                }
                kind = Some(*k);
            }
            Stmt::Dim(d, pos) => {
                if dim.is_some() {
                    return Err(semantic(*pos, "duplicate `dim`"));
                }
                if !(1..=MAX_DIM).contains(d) {
                    return Err(semantic(*pos, format!("dimension must be between 1 and {MAX_DIM}, got {d}")));
                }
                dim = Some((*d, *pos));
            }
            _ => {}
        }
    }
    let end = Pos { line: text.split('\n').count(), col: 1 };
    let kind = match kind {
        Some(k) => k,
        None => match stmts.iter().find(|s| !matches!(s, Stmt::Param(..))) {
            None | Some(Stmt::Record(..)) => Kind::Ensemble,
            Some(Stmt::Dim(..)) => Kind::Potential,
            Some(Stmt::Assign(c, ..)) => if *c == 'H' { Kind::Potential } else { Kind::Gas },
            Some(Stmt::Kind(..) | Stmt::Param(..)) => unreachable!(),
        },
    };
    if let (Some((_, pos)), false) = (dim, kind == Kind::Potential) {
        return Err(semantic(pos, format!("`dim` is not allowed in a {} model", kind.name())));
    }
    let dim = match (kind, dim) {
        (Kind::Potential, None) => return Err(semantic(end, "potential model needs a `dim` line")),
        (_, d) => d.map_or(0, |d| d.0),
    };
    let vars = reserved_vars(kind, dim);

    let mut values = BTreeMap::new();
    let mut params = Vec::new();
    let mut records = Vec::new();
    let mut assigned: BTreeMap<char, (Pos, Expr, Vec<IdentUse>)> = BTreeMap::new();
    for s in stmts {
        match s {
            Stmt::Param(name, pos, e, idents) => {
                if values.contains_key(&name) {
                    return Err(semantic(pos, format!("parameter `{name}` is declared twice")));
                }
                let e = resolve(&e, &idents, &[], &values)?;
                let value = e
                    .eval_f64(&[], &[], &values)
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| semantic(pos, format!("parameter `{name}` does not evaluate to a finite number")))?;
                values.insert(name.clone(), value);
                params.push(Param { name, expr: e, value });
            }
            Stmt::Record(rec, pos) => {
                if kind != Kind::Ensemble {
                    return Err(semantic(pos, format!("numeric records are not allowed in a {} model", kind.name())));
                }
                if rec.len() < 2 {
                    return Err(semantic(pos, "a record needs at least one coordinate and a weight"));
                }
                if let Some(first) = records.first().map(|r: &(Vec<f64>, Pos)| r.0.len()) {
                    if rec.len() != first {
                        return Err(semantic(pos, format!("record has {} fields, expected {first}", rec.len())));
                    }
                }
                if !(rec[rec.len() - 1] > 0.0) {
                    return Err(semantic(pos, "weights must be positive"));
                }
                records.push((rec, pos));
            }
            Stmt::Assign(c, pos, e, idents) => {
                let allowed = match kind {
                    Kind::Potential => c == 'H',
                    Kind::Gas => c == 'e' || c == 'v',
                    Kind::Ensemble => false,
                };
                if !allowed {
                    return Err(semantic(pos, format!("`{c}` is not allowed in a {} model", kind.name())));
                }
                if assigned.contains_key(&c) {
                    return Err(semantic(pos, format!("`{c}` is assigned twice")));
                }
                assigned.insert(c, (pos, e, idents));
            }
            Stmt::Kind(..) | Stmt::Dim(..) => {}
        }
    }
    let mut take = |c: char| -> Result<Expr, ModelError> {
        let (_, e, idents) = assigned.remove(&c).ok_or_else(|| semantic(end, format!("missing `{c} = …`")))?;
        resolve(&e, &idents, &vars, &values)
    };
    let payload = match kind {
        Kind::Ensemble => {
            if records.len() < 2 {
                return Err(semantic(end, format!("an ensemble needs at least two records, got {}", records.len())));
            }
            let total: f64 = records.iter().map(|r| r.0[r.0.len() - 1]).sum();
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(semantic(records[0].1, format!("weights sum to {}, not 1", fmt_num(total))));
            }
            Payload::Ensemble(records.into_iter().map(|r| r.0).collect())
        }
        Kind::Potential => Payload::Potential { dim, h: take('H')? },
        Kind::Gas => {
            let e = take('e')?;
            Payload::Gas { e, v: take('v')? }
        }
    };
    Ok(ModelFile { params, payload })
}

impl ModelFile {
    pub fn kind(&self) -> Kind {
        match self.payload {
            Payload::Ensemble(_) => Kind::Ensemble,
            Payload::Potential { .. } => Kind::Potential,
            Payload::Gas { .. } => Kind::Gas,
        }
    }

    pub fn param_values(&self) -> BTreeMap<String, f64> {
        self.params.iter().map(|p| (p.name.clone(), p.value)).collect()
    }

    /// Dimension of `λ`.
    pub fn dim(&self) -> usize {
        match &self.payload {
            Payload::Ensemble(r) => r[0].len() - 1,
            Payload::Potential { dim, .. } => *dim,
            Payload::Gas { .. } => 2,
        }
    }

    /// The ensemble with weights rescaled to sum to exactly one.
    pub fn ensemble(&self) -> Option<FiniteEnsemble> {
        let Payload::Ensemble(records) = &self.payload else { return None };
        let points = records.iter().map(|r| r[..r.len() - 1].to_vec()).collect();
        let weights = records.iter().map(|r| r[r.len() - 1]).collect();
        FiniteEnsemble::normalized(points, weights).ok()
    }

    pub fn potential(&self) -> Option<PotentialChart> {
        let Payload::Potential { dim, h } = &self.payload else { return None };
        PotentialChart::new(h.clone(), *dim, self.param_values()).ok()
    }

    pub fn gas(&self) -> Option<GasChart> {
        let Payload::Gas { e, v } = &self.payload else { return None };
        GasChart::new(e.clone(), v.clone(), self.param_values()).ok()
    }

    /// Canonical text; parsing it gives back an equal model.
    pub fn pretty(&self) -> String {
        let mut out = format!("kind {}\n", self.kind().name());
        for p in &self.params {
            out.push_str(&format!("param {} = {}\n", p.name, print_expr(&p.expr)));
        }
        match &self.payload {
            Payload::Ensemble(records) => {
                for r in records {
                    let fields: Vec<String> = r.iter().map(|x| fmt_num(*x)).collect();
                    out.push_str(&fields.join(" "));
                    out.push('\n');
                }
            }
            Payload::Potential { dim, h } => out.push_str(&format!("dim {dim}\nH = {}\n", print_expr(h))),
            Payload::Gas { e, v } => out.push_str(&format!("e = {}\nv = {}\n", print_expr(e), print_expr(v))),
        }
        out
    }
}
