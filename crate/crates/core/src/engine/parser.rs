//! Lexer and recursive-descent parser for the rule language.
//!
//! ```text
//! clause := term ( ":-" conj )? "."
//! conj   := disj ( "," disj )*
//! disj   := item ( ";" item )*
//! item   := "(" conj ")" | "\+" "(" term ")" | "\+" term
//!         | term "<=" term | "member" "(" term "," term ")" | term
//! ```
//!
//! `%` starts a comment running to end of line. Comment lines directly above
//! a clause become its notes; a note of the form `@ some.id` names the clause.

use std::collections::HashMap;
use std::sync::Arc;

use super::number::Fixed;
use super::term::{BodyItem, Builtin, Clause, Literal, Symbol, Term, VarId, LIST_CONS};
use super::EngineError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Atom(String),
    Var(String),
    Number(Fixed),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bar,
    Comma,
    Semi,
    Dot,
    Neck,
    Naf,
    LessEq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Atom(a) => format!("atom `{a}`"),
            Tok::Var(v) => format!("variable `{v}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Neck => "`:-`".into(),
            Tok::Naf => "`\\+`".into(),
            Tok::LessEq => "`<=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Comment {
    line: usize,
    text: String,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> EngineError {
    EngineError::Syntax { line, column, message: message.into() }
}

fn lex(src: &str) -> Result<(Vec<Spanned>, Vec<Comment>), EngineError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut comments = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            let start = i + 1;
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            comments.push(Comment { line: tl, text: text.trim().to_string() });
            continue;
        }
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '|' => Some(Tok::Bar),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = simple {
            bump!();
            toks.push(Spanned { tok, line: tl, col: tc });
            continue;
        }
        let next = chars.get(i + 1).copied();
        match (c, next) {
            ('.', _) => {
                bump!();
                toks.push(Spanned { tok: Tok::Dot, line: tl, col: tc });
            }
            (':', Some('-')) => {
                bump!();
                bump!();
                toks.push(Spanned { tok: Tok::Neck, line: tl, col: tc });
            }
            ('\\', Some('+')) => {
                bump!();
                bump!();
                toks.push(Spanned { tok: Tok::Naf, line: tl, col: tc });
            }
            ('<', Some('=')) => {
                bump!();
                bump!();
                toks.push(Spanned { tok: Tok::LessEq, line: tl, col: tc });
            }
            ('\'', _) => {
                bump!();
                let mut text = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(tl, tc, "unterminated quoted atom")),
                        Some('\'') => {
                            bump!();
                            break;
                        }
                        Some('\\') => {
                            bump!();
                            match chars.get(i) {
                                Some(&e) => {
                                    text.push(e);
                                    bump!();
                                }
                                None => return Err(syntax(tl, tc, "unterminated quoted atom")),
                            }
                        }
                        Some(&ch) => {
                            text.push(ch);
                            bump!();
                        }
                    }
                }
                if text.is_empty() {
                    return Err(syntax(tl, tc, "empty quoted atom"));
                }
                toks.push(Spanned { tok: Tok::Atom(text), line: tl, col: tc });
            }
            (d, _) if d.is_ascii_digit() || (d == '-' && next.is_some_and(|n| n.is_ascii_digit())) => {
                let start = i;
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    bump!();
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let n = text.parse::<Fixed>().map_err(|e| syntax(tl, tc, e.to_string()))?;
                toks.push(Spanned { tok: Tok::Number(n), line: tl, col: tc });
            }
            (a, _) if a.is_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    bump!();
                }
                let text: String = chars[start..i].iter().collect();
                let tok = if a.is_uppercase() || a == '_' { Tok::Var(text) } else { Tok::Atom(text) };
                toks.push(Spanned { tok, line: tl, col: tc });
            }
            _ => return Err(syntax(tl, tc, format!("unexpected character `{c}`"))),
        }
    }
    toks.push(Spanned { tok: Tok::Eof, line, col });
    Ok((toks, comments))
}

/// Per-clause variable table.
#[derive(Default)]
struct VarScope {
    names: Vec<Symbol>,
    by_name: HashMap<String, VarId>,
}

impl VarScope {
    fn var(&mut self, name: &str) -> VarId {
        // `_` and `_Name` are fresh at every occurrence.
        if name.starts_with('_') {
            let id = VarId(self.names.len() as u32);
            self.names.push(name.into());
            return id;
        }
        if let Some(id) = self.by_name.get(name) {
            return *id;
        }
        let id = VarId(self.names.len() as u32);
        self.names.push(name.into());
        self.by_name.insert(name.to_string(), id);
        id
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    scope: VarScope,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> EngineError {
        let (l, c) = self.here();
        syntax(l, c, msg)
    }

    fn expect(&mut self, want: Tok) -> Result<(), EngineError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", want.describe(), self.peek().describe())))
        }
    }

    fn term(&mut self) -> Result<Term, EngineError> {
        match self.advance() {
            Tok::Number(n) => Ok(Term::Number(n)),
            Tok::Var(v) => Ok(Term::Var(self.scope.var(&v))),
            Tok::Atom(a) => {
                if *self.peek() == Tok::LParen {
                    self.advance();
                    let mut args = vec![self.term()?];
                    while *self.peek() == Tok::Comma {
                        self.advance();
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Term::Compound(a.into(), args.into()))
                } else {
                    Ok(Term::Atom(a.into()))
                }
            }
            Tok::LBracket => {
                if *self.peek() == Tok::RBracket {
                    self.advance();
                    return Ok(Term::nil());
                }
                let mut items = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.advance();
                    items.push(self.term()?);
                }
                let tail = if *self.peek() == Tok::Bar {
                    self.advance();
                    self.term()?
                } else {
                    Term::nil()
                };
                self.expect(Tok::RBracket)?;
                Ok(items.into_iter().rev().fold(tail, |t, h| Term::Compound(LIST_CONS.into(), vec![h, t].into())))
            }
            other => {
                self.pos -= 1;
                Err(self.error(format!("expected a term, found {}", other.describe())))
            }
        }
    }

    fn callable(&mut self) -> Result<Term, EngineError> {
        let t = self.term()?;
        match &t {
            Term::Atom(_) | Term::Compound(..) if !is_list_cell(&t) => Ok(t),
            _ => Err(self.error(format!("`{t}` is not callable"))),
        }
    }

    fn conj(&mut self) -> Result<Vec<BodyItem>, EngineError> {
        let mut items = vec![self.disj()?];
        while *self.peek() == Tok::Comma {
            self.advance();
            items.push(self.disj()?);
        }
        Ok(items)
    }

    fn disj(&mut self) -> Result<BodyItem, EngineError> {
        let first = self.item()?;
        if *self.peek() != Tok::Semi {
            return Ok(first);
        }
        let mut alternatives = vec![vec![first]];
        while *self.peek() == Tok::Semi {
            self.advance();
            alternatives.push(vec![self.item()?]);
        }
        Ok(BodyItem::Builtin(Builtin::Disjunction { alternatives, grouped: false }))
    }

    fn item(&mut self) -> Result<BodyItem, EngineError> {
        match self.peek() {
            Tok::LParen => {
                self.advance();
                let mut inner = self.conj()?;
                self.expect(Tok::RParen)?;
                if inner.len() == 1 {
                    if let BodyItem::Builtin(Builtin::Disjunction { grouped, .. }) = &mut inner[0] {
                        if !*grouped {
                            *grouped = true;
                            return Ok(inner.pop().unwrap());
                        }
                    }
                }
                Ok(BodyItem::Builtin(Builtin::Disjunction { alternatives: vec![inner], grouped: true }))
            }
            Tok::Naf => {
                self.advance();
                // `\+(p(X))` versus `\+p(X)`; a parenthesised callable is the
                // former only when the parenthesis closes right after it.
                if *self.peek() == Tok::LParen {
                    self.advance();
                    let atom = self.callable()?;
                    self.expect(Tok::RParen)?;
                    Ok(BodyItem::Literal(Literal { positive: false, atom, bare: false }))
                } else {
                    let atom = self.callable()?;
                    Ok(BodyItem::Literal(Literal { positive: false, atom, bare: true }))
                }
            }
            _ => {
                let is_member = matches!(self.peek(), Tok::Atom(a) if a == "member")
                    && *self.peek_at(1) == Tok::LParen;
                let is_bounded = matches!(self.peek(), Tok::Atom(a) if a == "bounded")
                    && *self.peek_at(1) == Tok::LParen;
                let t = self.term()?;
                if *self.peek() == Tok::LessEq {
                    self.advance();
                    let rhs = self.term()?;
                    return Ok(BodyItem::Builtin(Builtin::LessEq(t, rhs)));
                }
                match t {
                    Term::Compound(_, args) if (is_member || is_bounded) && args.len() == 2 => {
                        let b = args[1].clone();
                        let a = args[0].clone();
                        Ok(BodyItem::Builtin(if is_member {
                            Builtin::Member(a, b)
                        } else {
                            Builtin::Bounded(a, b)
                        }))
                    }
                    t @ (Term::Atom(_) | Term::Compound(..)) if !is_list_cell(&t) => {
                        Ok(BodyItem::Literal(Literal::pos(t)))
                    }
                    other => Err(self.error(format!("`{other}` is not callable"))),
                }
            }
        }
    }
}

fn is_list_cell(t: &Term) -> bool {
    matches!(t, Term::Compound(f, a) if &**f == LIST_CONS && a.len() == 2)
}

/// Parses clauses without any semantic checks. `source` prefixes default
/// clause ids (`source#1`, `source#2`, ...).
pub fn parse_clauses(src: &str, source: &str) -> Result<Vec<Clause>, EngineError> {
    let (toks, comments) = lex(src)?;
    let mut p = Parser { toks, pos: 0, scope: VarScope::default() };
    let mut clauses = Vec::new();
    let mut consumed_comments = 0usize;
    while *p.peek() != Tok::Eof {
        p.scope = VarScope::default();
        let (start_line, _) = p.here();
        let head = p.callable()?;
        let body = if *p.peek() == Tok::Neck {
            p.advance();
            p.conj()?
        } else {
            Vec::new()
        };
        p.expect(Tok::Dot)?;

        // Notes: the contiguous run of comment lines ending right above the clause.
        let mut notes = Vec::new();
        let mut want_line = start_line;
        for c in comments[consumed_comments..].iter().rev() {
            if c.line >= start_line {
                continue;
            }
            if c.line + 1 == want_line {
                notes.push(c.text.clone());
                want_line = c.line;
            } else {
                break;
            }
        }
        notes.reverse();
        let end_line = p.toks[p.pos - 1].line;
        while consumed_comments < comments.len() && comments[consumed_comments].line <= end_line {
            consumed_comments += 1;
        }

        let id = notes
            .iter()
            .find_map(|n| n.strip_prefix('@').map(|s| s.trim().to_string()))
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("{source}#{}", clauses.len() + 1));
        let scope = std::mem::take(&mut p.scope);
        clauses.push(Clause { head, body, var_names: scope.names, id, notes });
    }
    Ok(clauses)
}

/// A query atom plus the names of its variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub atom: Term,
    pub var_names: Vec<Symbol>,
}

impl Query {
    /// Wraps an already-built atom; variables are named `_G<n>`.
    pub fn from_atom(atom: Term) -> Self {
        let mut vars = Vec::new();
        atom.collect_vars(&mut vars);
        let max = vars.iter().map(|v| v.0 + 1).max().unwrap_or(0);
        let var_names = (0..max).map(|i| Arc::from(format!("_G{i}"))).collect();
        Query { atom, var_names }
    }
}

/// Parses a single callable term, e.g. `permitted(ferpa, A, 3)`. A trailing
/// `.` is optional.
pub fn parse_query(src: &str) -> Result<Query, EngineError> {
    let (toks, _) = lex(src)?;
    let mut p = Parser { toks, pos: 0, scope: VarScope::default() };
    let atom = p.callable()?;
    if *p.peek() == Tok::Dot {
        p.advance();
    }
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {} after query", p.peek().describe())));
    }
    Ok(Query { atom, var_names: p.scope.names })
}

/// Parses a ground term such as `derivedFrom(d2, d1, psiTool([[totalBudget, 0.08]]))`.
pub fn parse_ground_term(src: &str) -> Result<Term, EngineError> {
    let (toks, _) = lex(src)?;
    let mut p = Parser { toks, pos: 0, scope: VarScope::default() };
    let t = p.term()?;
    if *p.peek() == Tok::Dot {
        p.advance();
    }
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {}", p.peek().describe())));
    }
    if !t.is_ground() {
        return Err(syntax(1, 1, format!("`{}` is not ground", t.display_with(&p.scope.names))));
    }
    Ok(t)
}

/// Token stream of `src` rendered as strings, comments and whitespace dropped.
pub fn tokens(src: &str) -> Result<Vec<String>, EngineError> {
    let (toks, _) = lex(src)?;
    Ok(toks
        .into_iter()
        .filter(|t| t.tok != Tok::Eof)
        .map(|t| match t.tok {
            Tok::Atom(a) => a,
            Tok::Var(v) => v,
            Tok::Number(n) => n.to_string(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::LBracket => "[".into(),
            Tok::RBracket => "]".into(),
            Tok::Bar => "|".into(),
            Tok::Comma => ",".into(),
            Tok::Semi => ";".into(),
            Tok::Dot => ".".into(),
            Tok::Neck => ":-".into(),
            Tok::Naf => "\\+".into(),
            Tok::LessEq => "<=".into(),
            Tok::Eof => unreachable!(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fact() {
        let cs = parse_clauses("p(a).", "t").unwrap();
        assert_eq!(cs.len(), 1);
        assert!(cs[0].is_fact());
        assert_eq!(cs[0].id, "t#1");
    }

    #[test]
    fn anonymous_vars_are_fresh() {
        let cs = parse_clauses("p(_X, _X, _, Y, Y) :- q(Y).", "t").unwrap();
        let c = &cs[0];
        assert_eq!(c.var_count(), 4);
        let args = c.head.args();
        assert_ne!(args[0], args[1]);
        assert_eq!(args[3], args[4]);
    }

    #[test]
    fn negation_spellings() {
        let cs = parse_clauses("p(X) :- q(X), \\+(r(X)), \\+s(X).", "t").unwrap();
        match (&cs[0].body[1], &cs[0].body[2]) {
            (BodyItem::Literal(a), BodyItem::Literal(b)) => {
                assert!(!a.positive && !a.bare);
                assert!(!b.positive && b.bare);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn builtins_and_disjunction() {
        let src = "r(X) :- p(X), (a(X); b(X)), member([k, V], X), V <= 0.1.";
        let cs = parse_clauses(src, "t").unwrap();
        let body = &cs[0].body;
        assert!(matches!(&body[1], BodyItem::Builtin(Builtin::Disjunction { alternatives, grouped: true }) if alternatives.len() == 2));
        assert!(matches!(&body[2], BodyItem::Builtin(Builtin::Member(..))));
        assert!(matches!(&body[3], BodyItem::Builtin(Builtin::LessEq(..))));
    }

    #[test]
    fn top_level_disjunction_stays_ungrouped() {
        let cs = parse_clauses("d(A) :- x(A); y(A).", "t").unwrap();
        assert!(matches!(&cs[0].body[0], BodyItem::Builtin(Builtin::Disjunction { grouped: false, .. })));
        assert_eq!(cs[0].to_string(), "d(A) :-\n    x(A); y(A).");
    }

    #[test]
    fn notes_and_ids() {
        let src = "% header\n\n% @first.rule\n% explains p\np(a).\nq(b).\n";
        let cs = parse_clauses(src, "f").unwrap();
        assert_eq!(cs[0].id, "first.rule");
        assert_eq!(cs[0].notes, vec!["@first.rule".to_string(), "explains p".to_string()]);
        assert_eq!(cs[1].id, "f#2");
        assert!(cs[1].notes.is_empty());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_clauses("p(a).\nq(b", "t").unwrap_err();
        match err {
            EngineError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_clauses("p(a) :- X.", "t").is_err());
        assert!(parse_clauses("p(0.1234567).", "t").is_err());
    }

    #[test]
    fn numbers_and_terminating_dot() {
        let cs = parse_clauses("small(X) :- num(X), X <= 2.", "t").unwrap();
        assert!(matches!(&cs[0].body[1], BodyItem::Builtin(Builtin::LessEq(_, Term::Number(n))) if *n == Fixed::from_int(2)));
    }
}
