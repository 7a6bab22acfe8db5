//! Depth-bounded SLD resolution with negation as failure.
//!
//! Goals are solved depth-first, clauses in source order, body items left to
//! right. Each (goal variant, remaining depth) pair is solved once and its
//! answers cached, so shared subgoals are not re-derived. Answers to a goal are
//! deduplicated up to variable renaming, keeping the first proof found. A
//! ground goal stops at its first proof.
//!
//! Depth counts clause resolutions along a branch: a fact needs depth 1, a
//! rule whose body only uses facts needs depth 2. Builtins are free. Negated
//! goals are decided with the full depth limit of the query, since a missed
//! proof there would turn into a wrong positive answer.

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};
use std::sync::Arc;

use super::number::Fixed;
use super::parser::Query;
use super::program::Program;
use super::proof::Proof;
use super::term::{BodyItem, Builtin, Clause, Literal, Symbol, Term, VarId};
use super::EngineError;

/// Variable bindings with an undo trail.
#[derive(Debug, Default)]
pub(crate) struct Bindings {
    slots: Vec<Option<Term>>,
    trail: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Mark {
    trail: usize,
    slots: usize,
}

impl Bindings {
    pub(crate) fn new(vars: u32) -> Self {
        Bindings { slots: vec![None; vars as usize], trail: Vec::new() }
    }

    /// Reserves `n` fresh variables and returns the first id.
    pub(crate) fn alloc(&mut self, n: u32) -> u32 {
        let off = self.slots.len() as u32;
        self.slots.resize(self.slots.len() + n as usize, None);
        off
    }

    pub(crate) fn mark(&self) -> Mark {
        Mark { trail: self.trail.len(), slots: self.slots.len() }
    }

    pub(crate) fn undo(&mut self, m: Mark) {
        while self.trail.len() > m.trail {
            let v = self.trail.pop().unwrap();
            self.slots[v as usize] = None;
        }
        self.slots.truncate(m.slots);
    }

    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.slots.get(v.0 as usize) {
                Some(Some(next)) => t = next,
                _ => break,
            }
        }
        t
    }

    pub(crate) fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| self.resolve(a)).collect()),
            other => other.clone(),
        }
    }

    /// Resolves `t` after shifting its variables by `off`.
    pub(crate) fn resolve_renamed(&self, t: &Term, off: u32) -> Term {
        match t {
            Term::Var(v) => self.resolve(&Term::Var(VarId(v.0 + off))),
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| self.resolve_renamed(a, off)).collect())
            }
            other => other.clone(),
        }
    }

    fn occurs(&self, v: VarId, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }

    fn bind(&mut self, v: VarId, t: Term) {
        self.slots[v.0 as usize] = Some(t);
        self.trail.push(v.0);
    }

    /// Unifies with occurs check. On failure partial bindings remain; callers
    /// undo to a mark.
    pub(crate) fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), _) => {
                if self.occurs(*x, &b) {
                    return false;
                }
                self.bind(*x, b);
                true
            }
            (_, Term::Var(y)) => {
                if self.occurs(*y, &a) {
                    return false;
                }
                self.bind(*y, a);
                true
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| self.unify(x, y))
            }
            _ => a == b,
        }
    }
}

/// Shifts every variable of `t` by `off`.
pub(crate) fn rename(t: &Term, off: u32) -> Term {
    if off == 0 {
        return t.clone();
    }
    match t {
        Term::Var(v) => Term::Var(VarId(v.0 + off)),
        Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| rename(a, off)).collect()),
        other => other.clone(),
    }
}

/// Cheap rejection test on unbound terms: false only when the two can never
/// unify because some pair of non-variable subterms clashes near the top.
fn may_unify(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Var(_), _) | (_, Term::Var(_)) => true,
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys.iter()).all(|(x, y)| match (x, y) {
                    (Term::Var(_), _) | (_, Term::Var(_)) => true,
                    (Term::Compound(f, xs), Term::Compound(g, ys)) => f == g && xs.len() == ys.len(),
                    _ => x == y,
                })
        }
        _ => a == b,
    }
}

fn var_span(t: &Term) -> u32 {
    match t {
        Term::Var(v) => v.0 + 1,
        Term::Compound(_, args) => args.iter().map(var_span).max().unwrap_or(0),
        _ => 0,
    }
}

/// Renumbers variables by first occurrence, continuing the numbering in `map`.
fn canon_with(t: &Term, map: &mut HashMap<VarId, VarId>) -> Term {
    match t {
        Term::Var(v) => {
            let next = VarId(map.len() as u32);
            Term::Var(*map.entry(*v).or_insert(next))
        }
        Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| canon_with(a, map)).collect()),
        other => other.clone(),
    }
}

pub(crate) fn canonical(t: &Term) -> Term {
    if t.is_ground() {
        return t.clone();
    }
    canon_with(t, &mut HashMap::default())
}

/// One answer to a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    /// Values of the query's named variables, in order of first appearance.
    pub bindings: Vec<(Symbol, Term)>,
    /// The query atom with the bindings applied.
    pub answer: Term,
    pub proof: Arc<Proof>,
}

impl Solution {
    pub fn get(&self, name: &str) -> Option<&Term> {
        self.bindings.iter().find(|(n, _)| &**n == name).map(|(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SolveResult {
    pub solutions: Vec<Solution>,
    /// Some branch was cut off by the depth limit, so answers may be missing.
    pub truncated: bool,
}

#[derive(Debug, Default)]
struct Entry {
    answers: Vec<(Term, Arc<Proof>)>,
    truncated: bool,
}

enum Cont<'a> {
    Done,
    Items(&'a [BodyItem], &'a Cont<'a>),
    EndBranch { index: usize, start: usize, next: &'a Cont<'a> },
}

struct Ctx<'c> {
    clause: &'c Clause,
    off: u32,
    depth: u32,
    goal: &'c Term,
}

#[derive(Default)]
struct Collect {
    entry: Entry,
    seen: HashSet<Term>,
    stop_at_first: bool,
}

/// Solves `query` against `program` with at most `depth_limit` nested clause
/// resolutions.
pub fn solve(program: &Program, query: &Query, depth_limit: u32) -> Result<SolveResult, EngineError> {
    Solver::new(program, depth_limit).solve(query)
}

/// A resolution engine over one program, caching subgoal answers across
/// queries. Not shared between threads; build one per worker.
pub struct Solver<'p> {
    program: &'p Program,
    depth_limit: u32,
    memo: HashMap<(Term, u32), Arc<Entry>>,
    /// Answers computed without hitting the depth limit, valid at any depth
    /// at least the recorded one.
    complete: HashMap<Term, (u32, Arc<Entry>)>,
    /// First proof recorded for each canonical answer, with the depth it was
    /// found at. Reusing it keeps recursive proofs from growing one level per
    /// depth step.
    proofs: HashMap<Term, (u32, Arc<Proof>)>,
}

impl<'p> Solver<'p> {
    pub fn new(program: &'p Program, depth_limit: u32) -> Self {
        Solver {
            program,
            depth_limit,
            memo: HashMap::default(),
            complete: HashMap::default(),
            proofs: HashMap::default(),
        }
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn depth_limit(&self) -> u32 {
        self.depth_limit
    }

    pub fn solve(&mut self, query: &Query) -> Result<SolveResult, EngineError> {
        if self.depth_limit == 0 {
            return Err(EngineError::InvalidDepth);
        }
        let entry = self.answers(&query.atom, self.depth_limit)?;
        let nvars = (query.var_names.len() as u32).max(var_span(&query.atom));
        let mut solutions = Vec::with_capacity(entry.answers.len());
        for (ans, proof) in &entry.answers {
            let mut b = Bindings::new(nvars);
            let off = b.alloc(var_span(ans));
            let renamed = rename(ans, off);
            let unified = b.unify(&query.atom, &renamed);
            debug_assert!(unified, "answers are instances of the goal");
            let mut bindings = Vec::new();
            for (i, name) in query.var_names.iter().enumerate() {
                if name.starts_with('_') {
                    continue;
                }
                bindings.push((name.clone(), b.resolve(&Term::Var(VarId(i as u32)))));
            }
            let proof = if proof.is_ground() {
                proof.clone()
            } else {
                proof.map_terms(&mut |t| b.resolve(&rename(t, off)))
            };
            solutions.push(Solution { bindings, answer: b.resolve(&query.atom), proof });
        }
        Ok(SolveResult { solutions, truncated: entry.truncated })
    }

    /// First proof of `goal`, if any.
    pub fn prove(&mut self, goal: &Term) -> Result<Option<Arc<Proof>>, EngineError> {
        if self.depth_limit == 0 {
            return Err(EngineError::InvalidDepth);
        }
        let entry = self.answers(goal, self.depth_limit)?;
        Ok(entry.answers.first().map(|(_, p)| p.clone()))
    }

    pub fn holds(&mut self, goal: &Term) -> Result<bool, EngineError> {
        Ok(self.prove(goal)?.is_some())
    }

    fn answers(&mut self, goal: &Term, depth: u32) -> Result<Arc<Entry>, EngineError> {
        let canon = canonical(goal);
        if let Some((d0, e)) = self.complete.get(&canon) {
            if *d0 <= depth {
                return Ok(e.clone());
            }
        }
        let key = (canon, depth);
        if let Some(e) = self.memo.get(&key) {
            return Ok(e.clone());
        }
        let (canon, depth) = key;
        let entry = Arc::new(self.compute(&canon, depth)?);
        if entry.truncated {
            self.memo.insert((canon, depth), entry.clone());
        } else {
            match self.complete.get(&canon) {
                Some((d0, _)) if *d0 <= depth => {}
                _ => {
                    self.complete.insert(canon, (depth, entry.clone()));
                }
            }
        }
        Ok(entry)
    }

    fn compute(&mut self, goal: &Term, depth: u32) -> Result<Entry, EngineError> {
        let key = goal
            .pred_key()
            .ok_or_else(|| EngineError::Type(format!("`{goal}` is not callable")))?;
        let program = self.program;
        let indices = program.clause_indices(&key);
        let mut out = Collect { stop_at_first: goal.is_ground(), ..Collect::default() };
        if depth == 0 {
            out.entry.truncated = !indices.is_empty();
            return Ok(out.entry);
        }
        let mut b = Bindings::new(var_span(goal));
        for &ci in indices {
            let clause = &program.clauses()[ci];
            if !may_unify(goal, &clause.head) {
                continue;
            }
            let mark = b.mark();
            let off = b.alloc(clause.var_count());
            if b.unify(goal, &rename(&clause.head, off)) {
                let ctx = Ctx { clause, off, depth: depth - 1, goal };
                let mut proofs = Vec::new();
                let stop = self.run(&Cont::Items(&clause.body, &Cont::Done), &ctx, &mut b, &mut proofs, &mut out)?;
                if stop {
                    b.undo(mark);
                    break;
                }
            }
            b.undo(mark);
        }
        if out.stop_at_first && !out.entry.answers.is_empty() {
            out.entry.truncated = false;
        }
        Ok(out.entry)
    }

    /// Runs the continuation; returns true once the caller should stop.
    fn run(
        &mut self,
        cont: &Cont<'_>,
        ctx: &Ctx<'_>,
        b: &mut Bindings,
        proofs: &mut Vec<Arc<Proof>>,
        out: &mut Collect,
    ) -> Result<bool, EngineError> {
        match cont {
            Cont::Done => {
                record(ctx, b, proofs, out, &mut self.proofs);
                Ok(out.stop_at_first && !out.entry.answers.is_empty())
            }
            Cont::EndBranch { index, start, next } => {
                let children = proofs.split_off(*start);
                proofs.push(Arc::new(Proof::Branch { index: *index, children: children.clone() }));
                let stop = self.run(next, ctx, b, proofs, out)?;
                proofs.pop();
                proofs.extend(children);
                Ok(stop)
            }
            Cont::Items(items, next) => {
                let Some((item, tail)) = items.split_first() else {
                    return self.run(next, ctx, b, proofs, out);
                };
                let rest = Cont::Items(tail, next);
                match item {
                    BodyItem::Literal(lit) if lit.positive => self.positive(lit, &rest, ctx, b, proofs, out),
                    BodyItem::Literal(lit) => self.negative(lit, &rest, ctx, b, proofs, out),
                    BodyItem::Builtin(Builtin::Disjunction { alternatives, .. }) => {
                        for (index, alt) in alternatives.iter().enumerate() {
                            let end = Cont::EndBranch { index, start: proofs.len(), next: &rest };
                            if self.run(&Cont::Items(alt, &end), ctx, b, proofs, out)? {
                                return Ok(true);
                            }
                        }
                        Ok(false)
                    }
                    BodyItem::Builtin(bi) => self.builtin(bi, &rest, ctx, b, proofs, out),
                }
            }
        }
    }

    fn positive(
        &mut self,
        lit: &Literal,
        rest: &Cont<'_>,
        ctx: &Ctx<'_>,
        b: &mut Bindings,
        proofs: &mut Vec<Arc<Proof>>,
        out: &mut Collect,
    ) -> Result<bool, EngineError> {
        let goal = b.resolve_renamed(&lit.atom, ctx.off);
        let entry = self.answers(&goal, ctx.depth)?;
        out.entry.truncated |= entry.truncated;
        for (ans, proof) in &entry.answers {
            let mark = b.mark();
            let ok = if ans.is_ground() {
                b.unify(&goal, ans).then(|| proof.clone())
            } else {
                let off = b.alloc(var_span(ans));
                b.unify(&goal, &rename(ans, off)).then(|| proof.map_terms(&mut |t| rename(t, off)))
            };
            if let Some(p) = ok {
                proofs.push(p);
                let stop = self.run(rest, ctx, b, proofs, out)?;
                proofs.pop();
                if stop {
                    b.undo(mark);
                    return Ok(true);
                }
            }
            b.undo(mark);
        }
        Ok(false)
    }

    fn negative(
        &mut self,
        lit: &Literal,
        rest: &Cont<'_>,
        ctx: &Ctx<'_>,
        b: &mut Bindings,
        proofs: &mut Vec<Arc<Proof>>,
        out: &mut Collect,
    ) -> Result<bool, EngineError> {
        let goal = b.resolve_renamed(&lit.atom, ctx.off);
        if !goal.is_ground() {
            return Err(EngineError::Flounders { goal: format!("\\+({goal})") });
        }
        let entry = self.answers(&goal, self.depth_limit)?;
        if !entry.answers.is_empty() {
            return Ok(false);
        }
        out.entry.truncated |= entry.truncated;
        proofs.push(Arc::new(Proof::Naf { atom: goal }));
        let stop = self.run(rest, ctx, b, proofs, out)?;
        proofs.pop();
        Ok(stop)
    }

    fn builtin(
        &mut self,
        bi: &Builtin,
        rest: &Cont<'_>,
        ctx: &Ctx<'_>,
        b: &mut Bindings,
        proofs: &mut Vec<Arc<Proof>>,
        out: &mut Collect,
    ) -> Result<bool, EngineError> {
        match bi {
            Builtin::LessEq(x, y) => {
                let (x, y) = (b.resolve_renamed(x, ctx.off), b.resolve_renamed(y, ctx.off));
                if !x.is_ground() || !y.is_ground() {
                    return Err(EngineError::Flounders { goal: format!("{x} <= {y}") });
                }
                let (Term::Number(p), Term::Number(q)) = (&x, &y) else {
                    return Err(EngineError::Type(format!("`{x} <= {y}` compares non-numbers")));
                };
                if p > q {
                    return Ok(false);
                }
                self.leaf("<=", vec![x, y], rest, ctx, b, proofs, out)
            }
            Builtin::Member(elem, list) => {
                let list = b.resolve_renamed(list, ctx.off);
                if !list.is_ground() {
                    return Err(EngineError::Flounders { goal: format!("member(_, {list})") });
                }
                let items: Vec<Term> = match list.as_list() {
                    Some(items) => items.into_iter().cloned().collect(),
                    None => return Err(EngineError::Type(format!("member/2 expects a list, got `{list}`"))),
                };
                let elem = b.resolve_renamed(elem, ctx.off);
                for item in items {
                    let mark = b.mark();
                    if b.unify(&elem, &item) {
                        let stop = self.leaf("member", vec![item, list.clone()], rest, ctx, b, proofs, out)?;
                        if stop {
                            b.undo(mark);
                            return Ok(true);
                        }
                    }
                    b.undo(mark);
                }
                Ok(false)
            }
            Builtin::Bounded(set, n) => {
                let (set, n) = (b.resolve_renamed(set, ctx.off), b.resolve_renamed(n, ctx.off));
                if !set.is_ground() || !n.is_ground() {
                    return Err(EngineError::Flounders { goal: format!("bounded({set}, {n})") });
                }
                let (Some(items), Term::Number(limit)) = (set.as_list(), &n) else {
                    return Err(EngineError::Type(format!("bounded/2 expects a list and a number, got `{set}`, `{n}`")));
                };
                if Fixed::from_int(items.len() as i64) > *limit {
                    return Ok(false);
                }
                self.leaf("bounded", vec![set, n], rest, ctx, b, proofs, out)
            }
            Builtin::Disjunction { .. } => unreachable!("handled by run"),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn leaf(
        &mut self,
        name: &str,
        args: Vec<Term>,
        rest: &Cont<'_>,
        ctx: &Ctx<'_>,
        b: &mut Bindings,
        proofs: &mut Vec<Arc<Proof>>,
        out: &mut Collect,
    ) -> Result<bool, EngineError> {
        proofs.push(Arc::new(Proof::Builtin { name: name.to_string(), args }));
        let stop = self.run(rest, ctx, b, proofs, out)?;
        proofs.pop();
        Ok(stop)
    }
}

fn record(
    ctx: &Ctx<'_>,
    b: &Bindings,
    proofs: &[Arc<Proof>],
    out: &mut Collect,
    known: &mut HashMap<Term, (u32, Arc<Proof>)>,
) {
    let answer = b.resolve(ctx.goal);
    let mut map = HashMap::default();
    let canon = if answer.is_ground() { answer } else { canon_with(&answer, &mut map) };
    if !out.seen.insert(canon.clone()) {
        return;
    }
    let depth = ctx.depth + 1;
    if let Some((d, proof)) = known.get(&canon) {
        if *d <= depth {
            out.entry.answers.push((canon, proof.clone()));
            return;
        }
    }
    let children = proofs
        .iter()
        .map(|p| {
            if p.is_ground() {
                p.clone()
            } else {
                p.map_terms(&mut |t| canon_with(&b.resolve(t), &mut map))
            }
        })
        .collect();
    let proof = Proof::Clause {
        rule_id: ctx.clause.id.clone(),
        fact: ctx.clause.is_fact(),
        atom: canon.clone(),
        children,
    };
    let proof = Arc::new(proof);
    known.insert(canon.clone(), (depth, proof.clone()));
    out.entry.answers.push((canon, proof));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::parser::parse_query;

    fn run(src: &str, q: &str, depth: u32) -> SolveResult {
        let p = Program::parse(src).unwrap();
        solve(&p, &parse_query(q).unwrap(), depth).unwrap()
    }

    fn strings(r: &SolveResult) -> Vec<String> {
        r.solutions.iter().map(|s| s.answer.to_string()).collect()
    }

    #[test]
    fn doubly_left_recursive_proofs_stay_short() {
        let src = "p0(c, b).\np0(c, a).\np1(X) :- p1(Z), p1(X).\np1(Z) :- p1(Z), p1(a).\np1(Z) :- p0(Z, X).\n";
        let r = run(src, "p1(X)", 64);
        assert_eq!(strings(&r), vec!["p1(c)"]);
        assert!(r.solutions[0].proof.height() <= 3);
        let p = Program::parse(src).unwrap();
        assert!(crate::engine::replay(&p, &r.solutions[0].proof, 64).is_ok());
    }

    #[test]
    fn one_step_resolution() {
        let r = run("q(a).\np(X) :- q(X).", "p(Y)", 8);
        assert_eq!(r.solutions.len(), 1);
        assert_eq!(r.solutions[0].get("Y").unwrap().to_string(), "a");
    }

    #[test]
    fn comparison_filters() {
        let r = run("num(1).\nnum(3).\nsmall(X) :- num(X), X <= 2.", "small(X)", 8);
        assert_eq!(strings(&r), vec!["small(1)"]);
    }

    #[test]
    fn source_order_and_dedup() {
        let r = run("p(b).\np(a).\np(b).\nq(X) :- p(X).", "q(X)", 8);
        assert_eq!(strings(&r), vec!["q(b)", "q(a)"]);
    }

    #[test]
    fn naf_succeeds_on_missing_fact() {
        let src = "s(d1).\nok(X) :- s(X), \\+(id(X)).";
        let r = run(src, "ok(d1)", 8);
        assert_eq!(r.solutions.len(), 1);
        let leaves = r.solutions[0].proof.leaves();
        assert_eq!(leaves.len(), 2);
    }

    #[test]
    fn floundering_is_an_error() {
        let p = Program::parse("bad(X) :- \\+(q(X)).\nq(a).").unwrap();
        let err = solve(&p, &parse_query("bad(Y)").unwrap(), 8).unwrap_err();
        assert!(matches!(err, EngineError::Flounders { .. }));
    }

    #[test]
    fn depth_truncation_is_flagged() {
        let src = "e(a,b).\ne(b,c).\ne(c,d).\nt(X,Y) :- e(X,Y).\nt(X,Y) :- e(X,Z), t(Z,Y).";
        let shallow = run(src, "t(a, W)", 2);
        assert!(shallow.truncated);
        assert_eq!(strings(&shallow), vec!["t(a, b)"]);
        let deep = run(src, "t(a, W)", 10);
        assert_eq!(strings(&deep), vec!["t(a, b)", "t(a, c)", "t(a, d)"]);
    }

    #[test]
    fn left_recursion_terminates() {
        let src = "e(a,b).\ne(b,c).\nt(X,Y) :- t(X,Z), e(Z,Y).\nt(X,Y) :- e(X,Y).";
        let r = run(src, "t(a, c)", 16);
        assert_eq!(r.solutions.len(), 1);
    }

    #[test]
    fn member_and_bounded() {
        let src = "req(CS, C) :- member(C, CS).\nok(CS) :- bounded(CS, 2), req(CS, x), req(CS, y).";
        assert_eq!(run(src, "ok([x, y])", 8).solutions.len(), 1);
        assert_eq!(run(src, "ok([x, z])", 8).solutions.len(), 0);
        assert_eq!(run(src, "ok([x, y, z])", 8).solutions.len(), 0);
    }

    #[test]
    fn disjunction_proofs_record_branch() {
        let src = "a(1).\nb(2).\nc(X) :- (a(X); b(X)).";
        let r = run(src, "c(X)", 8);
        assert_eq!(strings(&r), vec!["c(1)", "c(2)"]);
        match &*r.solutions[1].proof {
            Proof::Clause { children, .. } => {
                assert!(matches!(&*children[0], Proof::Branch { index: 1, .. }))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_ground_answers_bind_query() {
        let r = run("in(u, A).\nok(A) :- in(u, A).", "ok(f(Z))", 8);
        assert_eq!(r.solutions.len(), 1);
        assert_eq!(r.solutions[0].answer.to_string(), "ok(f(_G1))".replace("_G1", &r.solutions[0].get("Z").unwrap().to_string()));
    }

    #[test]
    fn comparing_atoms_is_a_type_error() {
        let p = Program::parse("v(a).\nw(X) :- v(X), X <= 1.").unwrap();
        assert!(matches!(solve(&p, &parse_query("w(X)").unwrap(), 4), Err(EngineError::Type(_))));
    }
}
