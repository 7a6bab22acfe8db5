//! Predicate dependency graph and stratification.

use std::collections::{BTreeMap, HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;

use super::term::{Clause, PredKey};
use super::EngineError;

/// Layer index for every predicate mentioned by a program. A predicate only
/// depends negatively on predicates in strictly lower layers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stratification {
    layers: BTreeMap<PredKey, usize>,
}

impl Stratification {
    pub fn layer(&self, key: &PredKey) -> Option<usize> {
        self.layers.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PredKey, usize)> {
        self.layers.iter().map(|(k, v)| (k, *v))
    }

    /// Number of distinct layers (highest index + 1).
    pub fn depth(&self) -> usize {
        self.layers.values().max().map_or(0, |m| m + 1)
    }

    pub(crate) fn insert_base(&mut self, key: PredKey) {
        self.layers.entry(key).or_insert(0);
    }
}

/// Builds the dependency graph of `clauses` and assigns layers.
pub fn check_stratification(clauses: &[Clause]) -> Result<Stratification, EngineError> {
    let mut graph: DiGraph<PredKey, bool> = DiGraph::new();
    let mut nodes: HashMap<PredKey, NodeIndex> = HashMap::new();
    let mut node = |g: &mut DiGraph<PredKey, bool>, k: PredKey| *nodes.entry(k.clone()).or_insert_with(|| g.add_node(k));

    for c in clauses {
        let head = node(&mut graph, c.pred_key());
        for item in &c.body {
            item.for_each_literal(&mut |lit| {
                if let Some(k) = lit.atom.pred_key() {
                    let body = node(&mut graph, k);
                    // Edge weight: true for a negative dependency.
                    graph.add_edge(head, body, !lit.positive);
                }
            });
        }
    }

    // tarjan_scc yields components in reverse topological order, i.e.
    // dependencies come before the predicates that use them.
    let sccs = tarjan_scc(&graph);
    let mut comp_of = vec![0usize; graph.node_count()];
    for (ci, comp) in sccs.iter().enumerate() {
        for &n in comp {
            comp_of[n.index()] = ci;
        }
    }

    for comp in &sccs {
        for &n in comp {
            for e in graph.edges(n) {
                if *e.weight() && comp_of[e.target().index()] == comp_of[n.index()] {
                    let cycle = cycle_through(&graph, &comp_of, n, e.target());
                    return Err(EngineError::Stratification { cycle });
                }
            }
        }
    }

    let mut comp_layer = vec![0usize; sccs.len()];
    for (ci, comp) in sccs.iter().enumerate() {
        let mut layer = 0;
        for &n in comp {
            for e in graph.edges(n) {
                let tc = comp_of[e.target().index()];
                if tc != ci {
                    layer = layer.max(comp_layer[tc] + usize::from(*e.weight()));
                }
            }
        }
        comp_layer[ci] = layer;
    }

    let layers = graph
        .node_indices()
        .map(|n| (graph[n].clone(), comp_layer[comp_of[n.index()]]))
        .collect();
    Ok(Stratification { layers })
}

/// Path `from -> to -> ... -> from` inside one component.
fn cycle_through(graph: &DiGraph<PredKey, bool>, comp_of: &[usize], from: NodeIndex, to: NodeIndex) -> Vec<PredKey> {
    let comp = comp_of[from.index()];
    let mut prev: HashMap<NodeIndex, NodeIndex> = HashMap::new();
    let mut queue = VecDeque::from([to]);
    let mut seen = vec![false; graph.node_count()];
    seen[to.index()] = true;
    while let Some(n) = queue.pop_front() {
        if n == from {
            break;
        }
        for e in graph.edges(n) {
            let t = e.target();
            if comp_of[t.index()] == comp && !seen[t.index()] {
                seen[t.index()] = true;
                prev.insert(t, n);
                queue.push_back(t);
            }
        }
    }
    let mut back = vec![from];
    let mut cur = from;
    while cur != to {
        cur = prev[&cur];
        back.push(cur);
    }
    std::iter::once(from).chain(back.into_iter().rev()).map(|n| graph[n].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::parser::parse_clauses;

    fn strat(src: &str) -> Result<Stratification, EngineError> {
        check_stratification(&parse_clauses(src, "t").unwrap())
    }

    #[test]
    fn empty_program() {
        assert!(strat("").unwrap().is_empty());
    }

    #[test]
    fn negation_raises_layer() {
        let s = strat("q(a).\np(X) :- r(X), \\+(q(X)).\nr(a).").unwrap();
        assert_eq!(s.layer(&PredKey::new("q", 1)), Some(0));
        assert_eq!(s.layer(&PredKey::new("p", 1)), Some(1));
    }

    #[test]
    fn positive_recursion_is_fine() {
        let s = strat("path(X,Y) :- edge(X,Y).\npath(X,Y) :- edge(X,Z), path(Z,Y).").unwrap();
        assert_eq!(s.layer(&PredKey::new("path", 2)), Some(0));
    }

    #[test]
    fn cycle_is_named() {
        match strat("p(X) :- \\+(q(X)).\nq(X) :- \\+(p(X)).") {
            Err(EngineError::Stratification { cycle }) => {
                assert_eq!(cycle.first(), cycle.last());
                assert!(cycle.contains(&PredKey::new("p", 1)));
                assert!(cycle.contains(&PredKey::new("q", 1)));
                assert_eq!(cycle.len(), 3);
            }
            other => panic!("{other:?}"),
        }
        assert!(strat("p(a) :- \\+p(a).").is_err());
    }
}
