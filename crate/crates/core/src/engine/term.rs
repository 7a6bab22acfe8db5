//! Terms, literals and clauses of the rule language.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use super::number::Fixed;

pub type Symbol = Arc<str>;

/// Functor name used for list cells; `[]` is the empty list atom.
pub const LIST_CONS: &str = ".";
pub const LIST_NIL: &str = "[]";

/// Variable identifier. Inside a clause ids are dense and index the clause's
/// name table; during resolution clauses are renamed to fresh ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Atom(Symbol),
    Number(Fixed),
    Var(VarId),
    Compound(Symbol, Arc<[Term]>),
}

/// Predicate signature `name/arity`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredKey {
    pub name: Symbol,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: &str, arity: usize) -> Self {
        PredKey { name: name.into(), arity }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl serde::Serialize for PredKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(name.into())
    }

    pub fn number(value: Fixed) -> Term {
        Term::Number(value)
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        debug_assert!(!args.is_empty(), "compounds have arity >= 1");
        Term::Compound(functor.into(), args.into())
    }

    pub fn nil() -> Term {
        Term::atom(LIST_NIL)
    }

    pub fn list(items: impl IntoIterator<Item = Term, IntoIter: DoubleEndedIterator>) -> Term {
        items.into_iter().rev().fold(Term::nil(), |tail, head| {
            Term::Compound(LIST_CONS.into(), Arc::new([head, tail]))
        })
    }

    /// Elements of a proper list, or `None` for anything else (including
    /// partial lists with an unbound tail).
    pub fn as_list(&self) -> Option<Vec<&Term>> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Atom(a) if &**a == LIST_NIL => return Some(items),
                Term::Compound(f, args) if &**f == LIST_CONS && args.len() == 2 => {
                    items.push(&args[0]);
                    cur = &args[1];
                }
                _ => return None,
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    pub fn pred_key(&self) -> Option<PredKey> {
        match self {
            Term::Atom(a) => Some(PredKey { name: a.clone(), arity: 0 }),
            Term::Compound(f, args) => Some(PredKey { name: f.clone(), arity: args.len() }),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<Fixed> {
        match self {
            Term::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    /// True when no compound appears anywhere in the term.
    pub fn is_flat(&self) -> bool {
        match self {
            Term::Compound(_, args) => args.iter().all(|a| !matches!(a, Term::Compound(..))),
            _ => true,
        }
    }

    /// Renders with `names` supplying variable names (falling back to `_G<n>`).
    pub fn display_with<'a>(&'a self, names: &'a [Symbol]) -> impl fmt::Display + 'a {
        Named { term: self, names }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, &[])
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

struct Named<'a> {
    term: &'a Term,
    names: &'a [Symbol],
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self.term, self.names)
    }
}

pub(crate) fn atom_needs_quotes(name: &str) -> bool {
    if name == LIST_NIL {
        return false;
    }
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return true,
    }
    !chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_atom(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if atom_needs_quotes(name) {
        f.write_char('\'')?;
        for c in name.chars() {
            match c {
                '\'' => f.write_str("\\'")?,
                '\\' => f.write_str("\\\\")?,
                c => f.write_char(c)?,
            }
        }
        f.write_char('\'')
    } else {
        f.write_str(name)
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, term: &Term, names: &[Symbol]) -> fmt::Result {
    match term {
        Term::Atom(a) => write_atom(f, a),
        Term::Number(n) => write!(f, "{n}"),
        Term::Var(v) => match names.get(v.0 as usize) {
            Some(name) => f.write_str(name),
            None => write!(f, "_G{}", v.0),
        },
        Term::Compound(func, args) if &**func == LIST_CONS && args.len() == 2 => {
            f.write_char('[')?;
            write_term(f, &args[0], names)?;
            let mut tail = &args[1];
            loop {
                match tail {
                    Term::Compound(g, rest) if &**g == LIST_CONS && rest.len() == 2 => {
                        f.write_str(", ")?;
                        write_term(f, &rest[0], names)?;
                        tail = &rest[1];
                    }
                    Term::Atom(a) if &**a == LIST_NIL => break,
                    other => {
                        f.write_str(" | ")?;
                        write_term(f, other, names)?;
                        break;
                    }
                }
            }
            f.write_char(']')
        }
        Term::Compound(func, args) => {
            write_atom(f, func)?;
            f.write_char('(')?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_term(f, a, names)?;
            }
            f.write_char(')')
        }
    }
}

/// A possibly negated atom. `bare` records the `\+p(X)` spelling (without
/// parentheses) so that programs print back the way they were written.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Term,
    pub bare: bool,
}

impl Literal {
    pub fn pos(atom: Term) -> Self {
        Literal { positive: true, atom, bare: false }
    }

    pub fn neg(atom: Term) -> Self {
        Literal { positive: false, atom, bare: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Builtin {
    /// `A <= B` over numbers.
    LessEq(Term, Term),
    /// `member(Elem, List)`; the list must be ground when reached.
    Member(Term, Term),
    /// `bounded(CS, N)`: `CS` is a ground list of at most `N` elements.
    Bounded(Term, Term),
    /// `(A ; B ; ...)`, each alternative a conjunction. `grouped` is false only
    /// for an unparenthesised top-level disjunction.
    Disjunction { alternatives: Vec<Vec<BodyItem>>, grouped: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BodyItem {
    Literal(Literal),
    Builtin(Builtin),
}

impl BodyItem {
    pub fn pos(atom: Term) -> Self {
        BodyItem::Literal(Literal::pos(atom))
    }

    pub fn neg(atom: Term) -> Self {
        BodyItem::Literal(Literal::neg(atom))
    }

    /// Visits every literal, descending into disjunctions.
    pub fn for_each_literal<'a>(&'a self, f: &mut impl FnMut(&'a Literal)) {
        match self {
            BodyItem::Literal(l) => f(l),
            BodyItem::Builtin(Builtin::Disjunction { alternatives, .. }) => {
                for alt in alternatives {
                    for item in alt {
                        item.for_each_literal(f);
                    }
                }
            }
            BodyItem::Builtin(_) => {}
        }
    }

    pub fn for_each_term<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            BodyItem::Literal(l) => f(&l.atom),
            BodyItem::Builtin(Builtin::LessEq(a, b))
            | BodyItem::Builtin(Builtin::Member(a, b))
            | BodyItem::Builtin(Builtin::Bounded(a, b)) => {
                f(a);
                f(b);
            }
            BodyItem::Builtin(Builtin::Disjunction { alternatives, .. }) => {
                for alt in alternatives {
                    for item in alt {
                        item.for_each_term(f);
                    }
                }
            }
        }
    }
}

/// A rule or fact. Facts are clauses with an empty body and a ground head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<BodyItem>,
    /// Source names of the clause's variables, indexed by `VarId`.
    pub var_names: Vec<Symbol>,
    /// Stable identifier used in proofs and provenance.
    pub id: String,
    /// Comment lines that preceded the clause in its source file.
    pub notes: Vec<String>,
}

impl Clause {
    pub fn is_fact(&self) -> bool {
        self.body.is_empty() && self.head.is_ground()
    }

    pub fn var_count(&self) -> u32 {
        self.var_names.len() as u32
    }

    pub fn pred_key(&self) -> PredKey {
        self.head.pred_key().expect("clause heads are callable")
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head.display_with(&self.var_names))?;
        if !self.body.is_empty() {
            f.write_str(" :-")?;
            for (i, item) in self.body.iter().enumerate() {
                f.write_str(if i == 0 { "\n    " } else { ",\n    " })?;
                write_item(f, item, &self.var_names)?;
            }
        }
        f.write_char('.')
    }
}

fn write_conj(f: &mut fmt::Formatter<'_>, items: &[BodyItem], names: &[Symbol]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_item(f, item, names)?;
    }
    Ok(())
}

fn write_item(f: &mut fmt::Formatter<'_>, item: &BodyItem, names: &[Symbol]) -> fmt::Result {
    match item {
        BodyItem::Literal(l) if l.positive => write!(f, "{}", l.atom.display_with(names)),
        BodyItem::Literal(l) if l.bare => write!(f, "\\+{}", l.atom.display_with(names)),
        BodyItem::Literal(l) => write!(f, "\\+({})", l.atom.display_with(names)),
        BodyItem::Builtin(Builtin::LessEq(a, b)) => {
            write!(f, "{} <= {}", a.display_with(names), b.display_with(names))
        }
        BodyItem::Builtin(Builtin::Member(a, b)) => {
            write!(f, "member({}, {})", a.display_with(names), b.display_with(names))
        }
        BodyItem::Builtin(Builtin::Bounded(a, b)) => {
            write!(f, "bounded({}, {})", a.display_with(names), b.display_with(names))
        }
        BodyItem::Builtin(Builtin::Disjunction { alternatives, grouped }) => {
            if *grouped {
                f.write_char('(')?;
            }
            for (i, alt) in alternatives.iter().enumerate() {
                if i > 0 {
                    f.write_str("; ")?;
                }
                // `;` binds tighter than `,`, so a multi-literal branch needs
                // its own parentheses.
                if alternatives.len() > 1 && alt.len() > 1 {
                    f.write_char('(')?;
                    write_conj(f, alt, names)?;
                    f.write_char(')')?;
                } else {
                    write_conj(f, alt, names)?;
                }
            }
            if *grouped {
                f.write_char(')')?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_print_with_brackets() {
        let l = Term::list(vec![
            Term::list(vec![Term::atom("totalBudget"), Term::number("0.05".parse().unwrap())]),
        ]);
        assert_eq!(l.to_string(), "[[totalBudget, 0.05]]");
        assert_eq!(l.as_list().unwrap().len(), 1);
        assert_eq!(Term::nil().to_string(), "[]");
    }

    #[test]
    fn odd_atoms_are_quoted() {
        assert_eq!(Term::atom("ds-1").to_string(), "'ds-1'");
        assert_eq!(Term::atom("Upper").to_string(), "'Upper'");
        assert_eq!(Term::atom("ok_1").to_string(), "ok_1");
        assert_eq!(Term::atom("it's").to_string(), "'it\\'s'");
    }

    #[test]
    fn unnamed_vars_print_generated_names() {
        let t = Term::compound("p", vec![Term::Var(VarId(7))]);
        assert_eq!(t.to_string(), "p(_G7)");
        let names: Vec<Symbol> = (0..8).map(|i| format!("V{i}").into()).collect();
        assert_eq!(t.display_with(&names).to_string(), "p(V7)");
    }
}
