//! Cache of intermediate plans shared across the planning of one query.
//!
//! Entries are bucketed by a cheap structural signature. A signature hit is
//! confirmed by a full match: the probing relation set is mapped onto the
//! cached one (tables by OID, subqueries by canonical text) and every
//! planning input is rendered under that mapping and compared.

mod descriptor;
mod mapping;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use xxhash_rust::xxh3::Xxh3;

pub use descriptor::{BlockDescriptor, RelDescriptor, RelKey};
pub use mapping::IdMapping;

use crate::catalog::Oid;
use crate::cbo::{IntermediatePlan, Level, PathNode};

/// Structural fingerprint used to bucket entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    pub level: Level,
    /// Sorted base-table OIDs.
    pub oids: Vec<Oid>,
    pub bloom_count: usize,
    pub restriction_count: usize,
    pub join_pred_count: usize,
    pub lateral_count: usize,
    pub output_count: usize,
    pub cec_count: usize,
    pub subquery_count: usize,
}

impl Signature {
    pub fn hash64(&self) -> u64 {
        let mut h = Xxh3::new();
        h.update(self.level.name().as_bytes());
        h.update(&(self.oids.len() as u64).to_le_bytes());
        for o in &self.oids {
            h.update(&o.to_le_bytes());
        }
        for n in [
            self.bloom_count,
            self.restriction_count,
            self.join_pred_count,
            self.lateral_count,
            self.output_count,
            self.cec_count,
            self.subquery_count,
        ] {
            h.update(&(n as u64).to_le_bytes());
        }
        h.digest()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LevelStats {
    pub probes: u64,
    pub signature_hits: u64,
    pub full_matches: u64,
    pub inserts: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CacheStats {
    pub levels: BTreeMap<Level, LevelStats>,
    /// Per level, bucket length seen by a probe to number of such probes.
    /// Probes that find no bucket are not recorded.
    pub visits: BTreeMap<Level, BTreeMap<usize, u64>>,
}

impl CacheStats {
    fn level(&mut self, l: Level) -> &mut LevelStats {
        self.levels.entry(l).or_default()
    }

    fn visit(&mut self, l: Level, len: usize) {
        *self.visits.entry(l).or_default().entry(len).or_default() += 1;
    }

    /// Fraction of non-empty bucket visits, over all levels, that found a
    /// bucket of length one. `None` before any such visit.
    pub fn singleton_visit_share(&self) -> Option<f64> {
        let (mut ones, mut all) = (0u64, 0u64);
        for h in self.visits.values() {
            ones += h.get(&1).copied().unwrap_or(0);
            all += h.values().sum::<u64>();
        }
        (all > 0).then(|| ones as f64 / all as f64)
    }

    pub fn total(&self) -> LevelStats {
        let mut t = LevelStats::default();
        for s in self.levels.values() {
            t.probes += s.probes;
            t.signature_hits += s.signature_hits;
            t.full_matches += s.full_matches;
            t.inserts += s.inserts;
        }
        t
    }
}

#[derive(Debug, Clone)]
struct RelEntry {
    descriptor: RelDescriptor,
    paths: Vec<PathNode>,
}

#[derive(Debug, Clone)]
struct BlockEntry {
    descriptor: BlockDescriptor,
    plan: IntermediatePlan,
}

#[derive(Debug, Default)]
pub struct PlanCache {
    rels: HashMap<u64, Vec<RelEntry>>,
    blocks: HashMap<u64, Vec<BlockEntry>>,
    pub stats: CacheStats,
    /// Test hook: the next hit returns a plan whose total cost is off by one.
    pub corrupt_next_hit: bool,
}

impl PlanCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rels.values().map(Vec::len).sum::<usize>() + self.blocks.values().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        self.rels.clear();
        self.blocks.clear();
    }

    fn take_corruption(&mut self) -> bool {
        std::mem::take(&mut self.corrupt_next_hit)
    }

    /// Paths for the probing relation set, translated into its numbering.
    pub fn lookup_rel(&mut self, d: &RelDescriptor) -> Option<Vec<PathNode>> {
        self.stats.level(d.level).probes += 1;
        let bucket = self.rels.get(&d.signature.hash64())?;
        self.stats.visit(d.level, bucket.len());
        let candidates: Vec<&RelEntry> = bucket.iter().filter(|e| e.descriptor.signature == d.signature).collect();
        if candidates.is_empty() {
            return None;
        }
        self.stats.level(d.level).signature_hits += 1;
        let mine = d.render(&IdMapping::identity(d.relids));
        let mut found = None;
        for e in candidates {
            let Some(m) = IdMapping::between(&e.descriptor, d) else { continue };
            if e.descriptor.render(&m) == mine {
                found = Some(m.translate_paths(&e.paths, d));
                break;
            }
        }
        let mut paths = found?;
        self.stats.level(d.level).full_matches += 1;
        if self.take_corruption() {
            for p in &mut paths {
                p.cost.total += 1.0;
            }
        }
        Some(paths)
    }

    pub fn insert_rel(&mut self, d: RelDescriptor, paths: Vec<PathNode>) {
        self.stats.level(d.level).inserts += 1;
        self.rels
            .entry(d.signature.hash64())
            .or_default()
            .push(RelEntry { descriptor: d, paths });
    }

    pub fn lookup_block(&mut self, d: &BlockDescriptor) -> Option<IntermediatePlan> {
        self.stats.level(Level::Block).probes += 1;
        let bucket = self.blocks.get(&d.signature.hash64())?;
        self.stats.visit(Level::Block, bucket.len());
        let candidates: Vec<&BlockEntry> = bucket.iter().filter(|e| e.descriptor.signature == d.signature).collect();
        if candidates.is_empty() {
            return None;
        }
        self.stats.level(Level::Block).signature_hits += 1;
        let mut plan = candidates.into_iter().find(|e| e.descriptor.key == d.key)?.plan.clone();
        self.stats.level(Level::Block).full_matches += 1;
        if self.take_corruption() {
            plan.cheapest_cost.total += 1.0;
            if let Some(p) = plan.paths.first_mut() {
                p.cost.total += 1.0;
            }
        }
        Some(plan)
    }

    pub fn insert_block(&mut self, d: BlockDescriptor, plan: IntermediatePlan) {
        self.stats.level(Level::Block).inserts += 1;
        self.blocks
            .entry(d.signature.hash64())
            .or_default()
            .push(BlockEntry { descriptor: d, plan });
    }

    /// Bucket length to number of buckets, per level.
    pub fn bucket_histogram(&self) -> BTreeMap<Level, BTreeMap<usize, usize>> {
        let mut out: BTreeMap<Level, BTreeMap<usize, usize>> = BTreeMap::new();
        for bucket in self.rels.values() {
            let level = bucket[0].descriptor.level;
            *out.entry(level).or_default().entry(bucket.len()).or_default() += 1;
        }
        for bucket in self.blocks.values() {
            *out.entry(Level::Block).or_default().entry(bucket.len()).or_default() += 1;
        }
        out
    }

    /// Tab-separated per-level summary.
    pub fn stats_tsv(&self) -> String {
        let hist = self.bucket_histogram();
        let mut out = String::from("level\tprobes\tsignature_hits\tfull_matches\tinserts\tbuckets\tmax_bucket\tvisits\tlen_1\tlen_2\tlen_3\tlen_4_plus\n");
        for level in [Level::Base, Level::Join, Level::Block] {
            let s = self.stats.levels.get(&level).copied().unwrap_or_default();
            let h = hist.get(&level);
            let buckets: usize = h.map(|h| h.values().sum()).unwrap_or(0);
            let max = h.and_then(|h| h.keys().next_back().copied()).unwrap_or(0);
            let v = self.stats.visits.get(&level);
            let at = |len: usize| v.and_then(|v| v.get(&len).copied()).unwrap_or(0);
            let visits: u64 = v.map(|v| v.values().sum()).unwrap_or(0);
            let long: u64 = v.map(|v| v.range(4..).map(|(_, n)| n).sum()).unwrap_or(0);
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                level.name(),
                s.probes,
                s.signature_hits,
                s.full_matches,
                s.inserts,
                buckets,
                max,
                visits,
                at(1),
                at(2),
                at(3),
                long
            );
        }
        out
    }
}
