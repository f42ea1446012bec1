//! Lexer, precedence-climbing expression parser and printer.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary `-`, `^` (right
//! associative). The printer inserts exactly the parentheses the parser
//! needs to rebuild the same tree.

use std::fmt;

use jetmoments_core::Expr;

/// 1-based line and column (in characters).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Eq,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Op(c) => write!(f, "`{c}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::End => write!(f, "end of line"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: syntax error: expected {}, found {}", self.pos, self.expected.join(" or "), self.found)
    }
}

fn syntax(pos: Pos, expected: &[&str], found: impl fmt::Display) -> SyntaxError {
    SyntaxError { pos, expected: expected.iter().map(|s| s.to_string()).collect(), found: found.to_string() }
}

pub const FUNCTIONS: [&str; 3] = ["exp", "ln", "sqrt"];
const MAX_DEPTH: usize = 200;

/// Tokens of one line; the comment after `#` is dropped. Always ends with `End`.
pub fn lex_line(line: &str, lineno: usize) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line: lineno, col: i + 1 };
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let x: f64 = text.parse().map_err(|_| syntax(pos, &["number"], format!("`{text}`")))?;
            if !x.is_finite() {
                return Err(syntax(pos, &["finite number"], format!("`{text}`")));
            }
            out.push(Token { tok: Tok::Num(x), pos });
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '=' => Tok::Eq,
            _ => return Err(syntax(pos, &["expression", "statement"], format!("character {c:?}"))),
        };
        out.push(Token { tok, pos });
        i += 1;
    }
    out.push(Token { tok: Tok::End, pos: Pos { line: lineno, col: chars.len() + 1 } });
    Ok(out)
}

/// An identifier as it occurred in an expression.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentUse {
    pub name: String,
    pub pos: Pos,
}

/// Cursor over the tokens of one line.
pub struct Cursor<'a> {
    toks: &'a [Token],
    i: usize,
    depth: usize,
    pub idents: Vec<IdentUse>,
}

fn binary_prec(c: char) -> Option<(u8, bool)> {
    // (precedence, right associative)
    match c {
        '+' | '-' => Some((1, false)),
        '*' | '/' => Some((2, false)),
        '^' => Some((4, true)),
        _ => None,
    }
}

const UNARY_PREC: u8 = 3;

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        Self { toks, i: 0, depth: 0, idents: Vec::new() }
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.i.min(self.toks.len() - 1)]
    }

    pub fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    pub fn expect_end(&mut self) -> Result<(), SyntaxError> {
        let t = self.peek();
        match t.tok {
            Tok::End => Ok(()),
            _ => Err(syntax(t.pos, &["operator", "end of line"], &t.tok)),
        }
    }

    pub fn expr(&mut self) -> Result<Expr, SyntaxError> {
        Ok(self.climb(0)?.0)
    }

    fn too_deep(&self) -> SyntaxError {
        syntax(self.peek().pos, &["shallower nesting"], "expression nested too deeply")
    }

    // Each parse returns the tree depth of its result, so that long flat
    // chains are bounded as well as deep recursion.
    fn climb(&mut self, min: u8) -> Result<(Expr, usize), SyntaxError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.too_deep());
        }
        let (mut lhs, mut depth) = self.unary()?;
        while let Tok::Op(c) = self.peek().tok {
            let Some((prec, right)) = binary_prec(c) else { break };
            if prec < min {
                break;
            }
            self.next();
            let (rhs, rd) = self.climb(if right { prec } else { prec + 1 })?;
            depth = depth.max(rd) + 1;
            if depth > MAX_DEPTH {
                return Err(self.too_deep());
            }
            let (a, b) = (Box::new(lhs), Box::new(rhs));
            lhs = match c {
                '+' => Expr::Add(a, b),
                '-' => Expr::Sub(a, b),
                '*' => Expr::Mul(a, b),
                '/' => Expr::Div(a, b),
                _ => Expr::Pow(a, b),
            };
        }
        self.depth -= 1;
        Ok((lhs, depth))
    }

    fn unary(&mut self) -> Result<(Expr, usize), SyntaxError> {
        if self.peek().tok == Tok::Op('-') {
            self.next();
            let (e, d) = self.climb(UNARY_PREC)?;
            return Ok((Expr::Neg(Box::new(e)), d + 1));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<(Expr, usize), SyntaxError> {
        let t = self.next();
        match t.tok {
            Tok::Num(x) => Ok((Expr::Const(x), 1)),
            Tok::LParen => {
                let e = self.climb(0)?;
                self.close()?;
                Ok(e)
            }
            Tok::Ident(name) if FUNCTIONS.contains(&name.as_str()) => {
                let open = self.next();
                if open.tok != Tok::LParen {
                    return Err(syntax(open.pos, &["`(`"], &open.tok));
                }
                let (arg, d) = self.climb(0)?;
                self.close()?;
                let arg = Box::new(arg);
                let e = match name.as_str() {
                    "exp" => Expr::Exp(arg),
                    "ln" => Expr::Ln(arg),
                    _ => Expr::Sqrt(arg),
                };
                Ok((e, d + 1))
            }
            Tok::Ident(name) => {
                self.idents.push(IdentUse { name: name.clone(), pos: t.pos });
                Ok((Expr::Var(name), 1))
            }
            other => Err(syntax(t.pos, &["number", "identifier", "`(`", "`-`"], other)),
        }
    }

    fn close(&mut self) -> Result<(), SyntaxError> {
        let t = self.next();
        if t.tok != Tok::RParen {
            return Err(syntax(t.pos, &["`)`", "operator"], &t.tok));
        }
        Ok(())
    }
}

/// Parses a whole line as one expression.
pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    let toks = lex_line(text, 1)?;
    let mut c = Cursor::new(&toks);
    let e = c.expr()?;
    c.expect_end()?;
    Ok(e)
}

/// Shortest decimal that reads back as the same `f64`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() {
        let mut b = ryu::Buffer::new();
        let s = b.format_finite(x);
        s.strip_suffix(".0").unwrap_or(s).to_string()
    } else {
        x.to_string()
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => UNARY_PREC,
        Expr::Const(c) if *c < 0.0 || c.is_sign_negative() => UNARY_PREC,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

/// Prints `e` in the model-file grammar. Variables and parameters both
/// print as their names.
pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn child(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    let bin = |out: &mut String, a: &Expr, op: &str, b: &Expr, p: u8| {
        child(out, a, prec(a) < p);
        out.push_str(op);
        child(out, b, prec(b) <= p);
    };
    match e {
        Expr::Const(c) => out.push_str(&fmt_num(*c)),
        Expr::Var(n) | Expr::Param(n) => out.push_str(n),
        Expr::Add(a, b) => bin(out, a, " + ", b, 1),
        Expr::Sub(a, b) => bin(out, a, " - ", b, 1),
        Expr::Mul(a, b) => bin(out, a, " * ", b, 2),
        Expr::Div(a, b) => bin(out, a, " / ", b, 2),
        Expr::Neg(a) => {
            out.push('-');
            child(out, a, prec(a) < UNARY_PREC);
        }
        Expr::Pow(a, b) => {
            child(out, a, prec(a) <= 4);
            out.push('^');
            child(out, b, prec(b) < 4);
        }
        Expr::Exp(a) | Expr::Ln(a) | Expr::Sqrt(a) => {
            out.push_str(match e {
                Expr::Exp(_) => "exp",
                Expr::Ln(_) => "ln",
                _ => "sqrt",
            });
            child(out, a, true);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Expr {
        Expr::var(n)
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("a + b * c ^ d ^ e").unwrap();
        let want = v("a") + v("b") * v("c").pow(v("d").pow(v("e")));
        assert_eq!(e, want);
        assert_eq!(parse_expr("a - b - c").unwrap(), (v("a") - v("b")) - v("c"));
        assert_eq!(parse_expr("-a^2").unwrap(), Expr::Neg(Box::new(v("a").pow(Expr::c(2.0)))));
        assert_eq!(parse_expr("-a*b").unwrap(), Expr::Neg(Box::new(v("a"))) * v("b"));
        assert_eq!(parse_expr("2^-1").unwrap(), Expr::c(2.0).pow(Expr::Neg(Box::new(Expr::c(1.0)))));
    }

    #[test]
    fn functions_numbers_comments() {
        assert_eq!(parse_expr("exp(ln(x)) # note").unwrap(), v("x").ln().exp());
        assert_eq!(parse_expr("1.5e-3").unwrap(), Expr::c(1.5e-3));
        assert_eq!(parse_expr(".5").unwrap(), Expr::c(0.5));
        assert!(parse_expr("2e").is_err());
        assert!(parse_expr("1e999").is_err());
        assert!(parse_expr("exp x").is_err());
    }

    #[test]
    fn dangling_operator() {
        let err = parse_expr("C1*").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 4 });
        assert!(err.expected.contains(&"number".to_string()));
        assert_eq!(err.found, "end of line");
    }

    #[test]
    fn deep_nesting_is_an_error() {
        let s = "(".repeat(10_000);
        assert!(parse_expr(&s).is_err());
        let s = "-".repeat(10_000);
        assert!(parse_expr(&s).is_err());
        let s = vec!["1"; 10_000].join("+");
        assert!(parse_expr(&s).is_err());
        let s = vec!["1"; 100].join("+");
        assert!(parse_expr(&s).is_ok());
    }

    #[test]
    fn printer_round_trip() {
        for s in ["a - (b - c)", "(a + b) * c", "-(a * b)", "(-a)^b", "a^(b^c)", "(a^b)^c", "a / (b * c)", "--a", "a^(-b)"] {
            let e = parse_expr(s).unwrap();
            assert_eq!(parse_expr(&print_expr(&e)).unwrap(), e, "{s}");
        }
        assert_eq!(print_expr(&parse_expr("a^(b^c)").unwrap()), "a^b^c");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(1e300), "1e300");
    }
}
