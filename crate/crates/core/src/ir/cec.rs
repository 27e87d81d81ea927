use std::collections::BTreeSet;

use super::block::QueryBlock;
use super::expr::{ColumnRef, Predicate};
use super::relset::RelSet;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnEquivalenceClass {
    pub members: BTreeSet<ColumnRef>,
    /// Spanning subset of the equality quals that built the class.
    pub source_predicates: Vec<Predicate>,
}

impl ColumnEquivalenceClass {
    pub fn relids(&self) -> RelSet {
        self.members.iter().map(|c| c.rti).collect()
    }

    pub fn contains(&self, c: ColumnRef) -> bool {
        self.members.contains(&c)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Connected components of the column-equality graph over a list of predicates.
pub fn cecs_from_predicates<'a>(preds: impl IntoIterator<Item = &'a Predicate>) -> Vec<ColumnEquivalenceClass> {
    let edges: Vec<(&Predicate, ColumnRef, ColumnRef)> = preds
        .into_iter()
        .filter_map(|p| p.as_column_equality().map(|(a, b)| (p, a, b)))
        .filter(|(_, a, b)| a != b)
        .collect();
    let cols: Vec<ColumnRef> = edges
        .iter()
        .flat_map(|(_, a, b)| [*a, *b])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let idx = |c: &ColumnRef| cols.binary_search(c).unwrap();
    let mut uf = UnionFind { parent: (0..cols.len()).collect() };
    let mut spanning: Vec<&Predicate> = Vec::new();
    for (p, a, b) in &edges {
        if uf.union(idx(a), idx(b)) {
            spanning.push(p);
        }
    }
    let mut classes: Vec<ColumnEquivalenceClass> = Vec::new();
    let mut root_of_class: Vec<usize> = Vec::new();
    for (i, c) in cols.iter().enumerate() {
        let r = uf.find(i);
        match root_of_class.iter().position(|x| *x == r) {
            Some(k) => {
                classes[k].members.insert(*c);
            }
            None => {
                root_of_class.push(r);
                classes.push(ColumnEquivalenceClass {
                    members: BTreeSet::from([*c]),
                    source_predicates: Vec::new(),
                });
            }
        }
    }
    for p in spanning {
        let (a, _) = p.as_column_equality().unwrap();
        let r = uf.find(idx(&a));
        let k = root_of_class.iter().position(|x| *x == r).unwrap();
        classes[k].source_predicates.push(p.clone());
    }
    classes
}

/// Equivalence classes induced by the block's inner equality quals.
pub fn derive_cecs(block: &QueryBlock) -> Vec<ColumnEquivalenceClass> {
    let inner = block.inner_join_quals();
    cecs_from_predicates(block.quals.iter().chain(inner.iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::BinaryOp;
    use crate::ir::expr::ScalarExpr;

    fn eq(a: (usize, usize), b: (usize, usize)) -> Predicate {
        Predicate::new(ScalarExpr::binary(BinaryOp::Eq, ScalarExpr::col(a.0, a.1), ScalarExpr::col(b.0, b.1)))
    }

    #[test]
    fn transitive_components() {
        let preds = [eq((1, 1), (2, 1)), eq((2, 1), (3, 1)), eq((4, 2), (5, 2))];
        let cecs = cecs_from_predicates(preds.iter());
        assert_eq!(cecs.len(), 2);
        assert_eq!(cecs[0].members.len(), 3);
        assert_eq!(cecs[0].source_predicates.len(), 2);
        assert_eq!(cecs[1].members.len(), 2);
    }

    #[test]
    fn redundant_edge_not_in_spanning_set() {
        let preds = [eq((1, 1), (2, 1)), eq((2, 1), (3, 1)), eq((1, 1), (3, 1))];
        let cecs = cecs_from_predicates(preds.iter());
        assert_eq!(cecs.len(), 1);
        assert_eq!(cecs[0].source_predicates.len(), 2);
    }
}
