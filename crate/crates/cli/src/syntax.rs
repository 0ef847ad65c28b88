//! Lexer and parser for `.pss` source files.
//!
//! ```text
//! term    := abs | app ;
//! abs     := "\" ident "<=" term "." term ;
//! app     := atom { atom } ;
//! atom    := "Top" | ident | "(" term ")" ;
//! ctxdecl := "context" { ident "<=" term ";" } "stack" { term ";" } ;
//! defn    := "let" ident "=" term ";" ;
//! goal    := "check" term | "sub" term "<=" term | "wf" term
//!          | "normalize" term | "superpath" term ;
//! ```
//!
//! `λ`, `≤` and `⊤` are accepted for `\`, `<=` and `Top`. Comments run from
//! `--` to the end of the line.

use std::fmt;

use pss_core::{ExtContext, Name, Term};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

const KEYWORDS: &[&str] = &[
    "Top", "let", "context", "stack", "property", "check", "sub", "wf", "normalize", "superpath",
];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Lambda,
    Le,
    Top,
    Dot,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Eq,
    Ident(String),
    Keyword(&'static str),
    /// Text of a `property` statement up to its `;`.
    Raw(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Lambda => f.write_str("`\\`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Top => f.write_str("`Top`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Keyword(k) => write!(f, "keyword `{k}`"),
            Tok::Raw(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

// `$` and `'` appear in machine-generated names, which the printer emits.
fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$' || c == '\''
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        let mut adv = 1;
        let tok = match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => None,
            '-' if chars.get(i + 1) == Some(&'-') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '\\' | 'λ' => Some(Tok::Lambda),
            '≤' => Some(Tok::Le),
            '⊤' => Some(Tok::Top),
            '<' if chars.get(i + 1) == Some(&'=') => {
                adv = 2;
                Some(Tok::Le)
            }
            '.' => Some(Tok::Dot),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            c if is_ident_start(c) => {
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                adv = j - i;
                let word: String = chars[i..j].iter().collect();
                if word == "property" {
                    out.push(Spanned {
                        tok: Tok::Keyword("property"),
                        line,
                        col,
                    });
                    let mut k = j;
                    while k < chars.len() && chars[k] != ';' && chars[k] != '\n' {
                        k += 1;
                    }
                    let raw: String = chars[j..k].iter().collect();
                    adv = k - i;
                    Some(Tok::Raw(raw.trim().to_string()))
                } else {
                    Some(match KEYWORDS.iter().find(|k| **k == word) {
                    Some(&"Top") => Tok::Top,
                    Some(k) => Tok::Keyword(k),
                    None => Tok::Ident(word),
                })
                }
            }
            other => {
                return Err(ParseError {
                    line,
                    col,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        if let Some(tok) = tok {
            out.push(Spanned {
                tok,
                line: start.0,
                col: start.1,
            });
        }
        i += adv;
        col += adv;
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

/// The request a file makes of the checker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Goal {
    Check(Term),
    Sub(Term, Term),
    Wf(Term),
    Normalize(Term),
    Superpath(Term),
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Check(t) => write!(f, "check {t}"),
            Goal::Sub(u, t) => write!(f, "sub {u} <= {t}"),
            Goal::Wf(t) => write!(f, "wf {t}"),
            Goal::Normalize(t) => write!(f, "normalize {t}"),
            Goal::Superpath(t) => write!(f, "superpath {t}"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SourceFile {
    /// Property a counterexample file replays.
    pub property: Option<String>,
    /// Definitions in order, each already expanded.
    pub definitions: Vec<(Name, Term)>,
    pub context: Option<ExtContext>,
    pub goal: Option<Goal>,
}

impl SourceFile {
    pub fn definition(&self, name: &str) -> Option<&Term> {
        self.definitions.iter().find(|(n, _)| n.as_str() == name).map(|(_, t)| t)
    }

    pub fn context(&self) -> ExtContext {
        self.context.clone().unwrap_or_else(ExtContext::empty)
    }

    /// Parses `text` as a term over this file's definitions.
    pub fn parse_term(&self, text: &str) -> Result<Term, ParseError> {
        let mut p = Parser::new(lex(text)?);
        let t = p.term()?;
        p.expect(Tok::Eof)?;
        Ok(self.expand(&t))
    }

    /// Substitutes definitions for the free names they bind.
    pub fn expand(&self, t: &Term) -> Term {
        let mut t = t.clone();
        for (n, d) in self.definitions.iter().rev() {
            if t.occurs_free(n) {
                t = t.subst(n, d);
            }
        }
        t
    }
}

/// Prints a file the parser reads back to the same definitions, context
/// and goal.
impl fmt::Display for SourceFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.property {
            writeln!(f, "property {p};")?;
        }
        if let Some(ctx) = &self.context {
            f.write_str("context")?;
            for (x, t) in ctx.annots() {
                write!(f, " {x} <= {t};")?;
            }
            f.write_str(" stack")?;
            for e in ctx.stack() {
                write!(f, " {e};")?;
            }
            writeln!(f)?;
        }
        for (n, t) in &self.definitions {
            writeln!(f, "let {n} = {t};")?;
        }
        if let Some(g) = &self.goal {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(toks: Vec<Spanned>) -> Parser {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Spanned {
        let s = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        s
    }

    fn error_here(&self, msg: String) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            col: s.col,
            msg,
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {want}, found {}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Name::new(&s))
            }
            other => Err(self.error_here(format!("expected identifier, found {other}"))),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if *self.peek() == Tok::Lambda {
            self.bump();
            let x = self.ident()?;
            self.expect(Tok::Le)?;
            let a = self.term()?;
            self.expect(Tok::Dot)?;
            let b = self.term()?;
            return Ok(Term::abs(x, a, b));
        }
        let mut t = self.atom()?;
        loop {
            match self.peek() {
                Tok::Top | Tok::Ident(_) | Tok::LParen => {
                    let v = self.atom()?;
                    t = Term::app(t, v);
                }
                // A trailing abstraction extends to the right.
                Tok::Lambda => {
                    let v = self.term()?;
                    return Ok(Term::app(t, v));
                }
                _ => return Ok(t),
            }
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Top => {
                self.bump();
                Ok(Term::Top)
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Term::var(s.as_str()))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            other => Err(self.error_here(format!("expected a term, found {other}"))),
        }
    }

    fn eat(&mut self, t: Tok) -> bool {
        if *self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn starts_statement(&self) -> bool {
        matches!(self.peek(), Tok::Keyword(_) | Tok::Eof | Tok::RBrace)
    }

    fn file(&mut self) -> Result<SourceFile, ParseError> {
        let mut f = SourceFile::default();
        loop {
            let here = self.toks[self.pos].clone();
            match here.tok.clone() {
                Tok::Eof => return Ok(f),
                Tok::Keyword("property") => {
                    self.bump();
                    let name = match self.bump() {
                        Spanned { tok: Tok::Raw(w), .. } if !w.is_empty() => w,
                        other => return Err(err_at(&other, "expected a property name")),
                    };
                    self.expect(Tok::Semi)?;
                    f.property = Some(name);
                }
                Tok::Keyword("context") => {
                    self.bump();
                    if f.context.is_some() {
                        return Err(err_at(&here, "second context declaration"));
                    }
                    let braced = self.eat(Tok::LBrace);
                    let mut annots = Vec::new();
                    while matches!(self.peek(), Tok::Ident(_)) {
                        let x = self.ident()?;
                        self.expect(Tok::Le)?;
                        let t = f.expand(&self.term()?);
                        self.expect(Tok::Semi)?;
                        annots.push((x, t));
                    }
                    let mut stack = Vec::new();
                    if self.eat(Tok::Keyword("stack")) {
                        while !self.starts_statement() {
                            let t = f.expand(&self.term()?);
                            self.expect(Tok::Semi)?;
                            stack.push(t);
                        }
                    }
                    if braced {
                        self.expect(Tok::RBrace)?;
                    }
                    f.context = Some(ExtContext::new(annots, stack));
                }
                Tok::Keyword("let") => {
                    self.bump();
                    let at = self.toks[self.pos].clone();
                    let x = self.ident()?;
                    if f.definition(x.as_str()).is_some() {
                        return Err(err_at(&at, &format!("`{x}` is already defined")));
                    }
                    self.expect(Tok::Eq)?;
                    let t = f.expand(&self.term()?);
                    self.expect(Tok::Semi)?;
                    f.definitions.push((x, t));
                }
                Tok::Keyword(k @ ("check" | "sub" | "wf" | "normalize" | "superpath")) => {
                    self.bump();
                    if f.goal.is_some() {
                        return Err(err_at(&here, "a file has at most one goal"));
                    }
                    let t = f.expand(&self.term()?);
                    let g = match k {
                        "check" => Goal::Check(t),
                        "wf" => Goal::Wf(t),
                        "normalize" => Goal::Normalize(t),
                        "superpath" => Goal::Superpath(t),
                        _ => {
                            self.expect(Tok::Le)?;
                            Goal::Sub(t, f.expand(&self.term()?))
                        }
                    };
                    self.eat(Tok::Semi);
                    f.goal = Some(g);
                }
                other => return Err(err_at(&here, &format!("expected a declaration, found {other}"))),
            }
        }
    }
}

fn err_at(s: &Spanned, msg: &str) -> ParseError {
    ParseError {
        line: s.line,
        col: s.col,
        msg: msg.to_string(),
    }
}

pub fn parse(text: &str) -> Result<SourceFile, ParseError> {
    Parser::new(lex(text)?).file()
}

/// Parses a single term with no definitions in scope.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    SourceFile::default().parse_term(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn grammar_examples() {
        assert_eq!(t("\\x <= Top . x"), Term::abs("x", Term::Top, Term::var("x")));
        assert_eq!(
            t("f a b"),
            Term::app(Term::app(Term::var("f"), Term::var("a")), Term::var("b"))
        );
        assert_eq!(
            t("\\x <= Top . x x"),
            Term::abs("x", Term::Top, Term::app(Term::var("x"), Term::var("x")))
        );
        assert_eq!(t("λx ≤ ⊤. x"), t("\\x <= Top . x"));
        assert_eq!(t("f \\x <= Top . x"), Term::app(Term::var("f"), t("\\x<=Top.x")));
    }

    #[test]
    fn errors_have_positions() {
        let e = parse_term("\\x <= Top x").unwrap_err();
        assert_eq!((e.line, e.col), (1, 12));
        assert!(e.msg.contains("`.`"), "{}", e.msg);
        let e = parse("let a = Top;\nlet a = Top;").unwrap_err();
        assert_eq!((e.line, e.col), (2, 5));
        assert!(parse("let a = #;").is_err());
    }

    #[test]
    fn definitions_expand_without_capture() {
        let f = parse("let id = \\x <= Top . x;\nlet k = \\y <= Top . id;\nwf k y").unwrap();
        assert_eq!(f.definition("k").unwrap(), &t("\\y <= Top . \\x <= Top . x"));
        let Some(Goal::Wf(g)) = &f.goal else { panic!() };
        assert_eq!(g, &Term::app(t("\\y <= Top . \\x <= Top . x"), Term::var("y")));
        let f = parse("let a = y;\nlet b = \\y <= Top . a;").unwrap();
        let b = f.definition("b").unwrap();
        assert!(b.occurs_free(&Name::new("y")));
    }

    #[test]
    fn context_with_and_without_braces() {
        let plain = parse("context x <= Top; y <= x; stack Top;").unwrap();
        let braced = parse("context { x <= Top; y <= x; stack Top; }").unwrap();
        let want = ExtContext::new(
            vec![(Name::new("x"), Term::Top), (Name::new("y"), Term::var("x"))],
            vec![Term::Top],
        );
        assert_eq!(plain.context, Some(want.clone()));
        assert_eq!(braced.context, Some(want));
    }

    #[test]
    fn comments_and_property() {
        let f = parse("-- a note\nproperty stair-golden;\ncontext stack\n").unwrap();
        assert_eq!(f.property.as_deref(), Some("stair-golden"));
        assert_eq!(f.context, Some(ExtContext::empty()));
    }

    #[test]
    fn file_round_trip() {
        let src = "property diamond;\ncontext x <= Top; stack (\\a <= x . a) x;\nlet t0 = x (\\a <= Top . a);\nsub x <= Top\n";
        let f = parse(src).unwrap();
        assert_eq!(f.to_string(), src);
    }
}
