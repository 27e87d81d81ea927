use std::collections::BTreeMap;

use super::descriptor::{RelDescriptor, RelKey};
use crate::cbo::PathNode;
use crate::error::{Error, Result};
use crate::ir::{ColumnRef, RelSet, Rti, ScalarExpr};

/// Correspondence from a cached entry's numbering to the current block's.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMapping {
    /// Cached rti to current rti.
    pub rel_map: BTreeMap<Rti, Rti>,
    /// Per cached rel, cached column position to current position. Absent
    /// means identity; only subquery rels with reordered outputs need one.
    pub col_maps: BTreeMap<Rti, Vec<usize>>,
}

impl IdMapping {
    pub fn identity(s: RelSet) -> Self {
        Self { rel_map: s.iter().map(|r| (r, r)).collect(), col_maps: BTreeMap::new() }
    }

    /// Pairs every cached rel with the current rel of the same key. Declines
    /// when a key repeats on either side, since the pairing would be a guess.
    pub fn between(cached: &RelDescriptor, current: &RelDescriptor) -> Option<Self> {
        if cached.rels.len() != current.rels.len() {
            return None;
        }
        let mut m = IdMapping::default();
        for (i, (rti, key)) in cached.rels.iter().enumerate() {
            if cached.rels[..i].iter().any(|(_, k)| k.same_relation(key)) {
                return None;
            }
            let mut hits = current.rels.iter().filter(|(_, k)| k.same_relation(key));
            let (target, target_key) = hits.next()?;
            if hits.next().is_some() {
                return None;
            }
            m.rel_map.insert(*rti, *target);
            if let (RelKey::Subquery { targets: old, .. }, RelKey::Subquery { targets: new, .. }) = (key, target_key) {
                if old != new {
                    let mut used = vec![false; new.len()];
                    let mut perm = Vec::with_capacity(old.len());
                    for t in old {
                        let j = (0..new.len()).find(|&j| !used[j] && &new[j] == t)?;
                        used[j] = true;
                        perm.push(j + 1);
                    }
                    m.col_maps.insert(*rti, perm);
                }
            }
        }
        Some(m)
    }

    pub fn map_rti(&self, r: Rti) -> Option<Rti> {
        self.rel_map.get(&r).copied()
    }

    pub fn map_column(&self, c: ColumnRef) -> Option<(Rti, usize)> {
        let r = self.map_rti(c.rti)?;
        let col = match self.col_maps.get(&c.rti) {
            Some(p) => *p.get(c.col - 1)?,
            None => c.col,
        };
        Some((r, col))
    }

    pub fn translate_relset(&self, s: RelSet) -> Result<RelSet> {
        s.iter().map(|r| self.map_rti(r).ok_or(Error::UnmappedRti(r))).collect()
    }

    /// Rewrites a cached expression into the current numbering.
    pub fn translate_expr(&self, e: &ScalarExpr) -> Result<ScalarExpr> {
        if let Some(c) = e.column_refs().into_iter().find(|c| self.map_rti(c.rti).is_none()) {
            return Err(Error::UnmappedRti(c.rti));
        }
        Ok(e.clone().map_columns(&|c| {
            let (r, col) = self.map_column(c).unwrap_or((c.rti, c.col));
            ColumnRef::new(r, col)
        }))
    }

    /// Cached paths renumbered and relabelled for the current block.
    pub(crate) fn translate_paths(&self, paths: &[PathNode], probe: &RelDescriptor) -> Vec<PathNode> {
        let map = |r: Rti| self.map_rti(r).unwrap_or(r);
        let label = |r: Rti| probe.aliases[r - 1].clone();
        paths
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.remap(&map, &label);
                p
            })
            .collect()
    }
}
