//! Candidate generation: single items, item pairs, pattern extensions and
//! pattern merges, each optionally widened into exclusive-or clauses over an
//! item's nearest embedding neighbors.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::data::{Clause, Conjunction, ItemId, LabeledDatabase, Pattern};
use crate::embeddings::NeighborTable;
use crate::error::{Error, Result};
use crate::model::{Model, ModelEntry, PatternId};
use crate::tidset::TidSet;

/// How a candidate was formed. Parents are removed from the model when the
/// candidate is accepted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    Singleton,
    Pair,
    PatternPlusItem { parent: PatternId },
    PatternMerge { parents: [PatternId; 2] },
}

impl Provenance {
    pub fn parents(&self) -> &[PatternId] {
        match self {
            Provenance::Singleton | Provenance::Pair => &[],
            Provenance::PatternPlusItem { parent } => std::slice::from_ref(parent),
            Provenance::PatternMerge { parents } => parents,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Provenance::Singleton => "singleton",
            Provenance::Pair => "pair",
            Provenance::PatternPlusItem { .. } => "pattern+item",
            Provenance::PatternMerge { .. } => "pattern+pattern",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub conjunction: Conjunction,
    pub provenance: Provenance,
    /// Supports and label side, once scored.
    pub pattern: Option<Pattern>,
    pub gain: Option<f64>,
    pub p_value: Option<f64>,
}

impl Candidate {
    pub fn new(conjunction: Conjunction, provenance: Provenance) -> Self {
        Candidate {
            conjunction,
            provenance,
            pattern: None,
            gain: None,
            p_value: None,
        }
    }

    pub fn parents(&self) -> &[PatternId] {
        self.provenance.parents()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Significance level of the Fisher filter.
    pub alpha: f64,
    /// Minimum overlap of item pairs.
    pub min_overlap: f64,
    /// Maximum neighborhood size `K` for exclusive-or clauses.
    pub max_neighbors: usize,
    /// Maximum `|∩σ| / |∪σ|` of an exclusive-or clause.
    pub xor_overlap_max: f64,
    /// When false, candidates are not filtered by significance.
    pub significance_filter: bool,
    /// Stop after this many accepted patterns.
    pub max_rounds: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            alpha: 0.01,
            min_overlap: 0.3,
            max_neighbors: 5,
            xor_overlap_max: 0.05,
            significance_filter: true,
            max_rounds: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.min_overlap) {
            return Err(Error::Config(format!("min_overlap must lie in [0, 1], got {}", self.min_overlap)));
        }
        if !(0.0..=1.0).contains(&self.xor_overlap_max) {
            return Err(Error::Config(format!(
                "xor_overlap_max must lie in [0, 1], got {}",
                self.xor_overlap_max
            )));
        }
        Ok(())
    }
}

/// `|T₁ ∩ T₂| / min(|T₁|, |T₂|) ≥ min_overlap`; items that never occur fail.
pub fn overlap_filter(i1: ItemId, i2: ItemId, db: &LabeledDatabase, min_overlap: f64) -> Result<bool> {
    for i in [i1, i2] {
        if i.index() >= db.n_items() {
            return Err(Error::UnknownItem(i.0));
        }
    }
    let (t1, t2) = (db.tids(i1), db.tids(i2));
    let denom = t1.len().min(t2.len());
    if denom == 0 {
        return Ok(false);
    }
    Ok(passes_overlap(t1.intersection_len(t2), denom, min_overlap))
}

fn passes_overlap(inter: usize, denom: usize, min_overlap: f64) -> bool {
    inter as f64 / denom as f64 >= min_overlap
}

/// Whether `clause`, built around `anchor` from its nearest neighbors, is
/// exclusive enough (`|∩σ| / |∪σ| < a`) and close enough (every other item
/// is a neighbor of the anchor at some rank `k` with similarity above `b_k`).
pub fn filter_xor_clause(
    clause: &Clause,
    anchor: ItemId,
    db: &LabeledDatabase,
    neighbors: &NeighborTable,
    config: &SearchConfig,
) -> bool {
    if clause.len() < 2 || !clause.contains(anchor) {
        return false;
    }
    if clause.items().iter().any(|i| i.index() >= db.n_items()) {
        return false;
    }
    for &item in clause.items() {
        if item == anchor {
            continue;
        }
        let Some(rank) = neighbors.neighbors(anchor).iter().position(|e| e.0 == item) else {
            return false;
        };
        let sim = neighbors.neighbors(anchor)[rank].1;
        match neighbors.threshold(rank + 1) {
            Some(b) if sim > b => {}
            _ => return false,
        }
    }
    exclusive_enough(clause, db, config.xor_overlap_max)
}

fn exclusive_enough(clause: &Clause, db: &LabeledDatabase, max_ratio: f64) -> bool {
    let mut inter = TidSet::full(db.n_total());
    let mut union = TidSet::empty(db.n_total());
    for &i in clause.items() {
        inter.intersect_with(db.tids(i));
        union.union_with(db.tids(i));
    }
    let u = union.len();
    u > 0 && (inter.len() as f64) / (u as f64) < max_ratio
}

/// Per-database static part of the candidate space: which item pairs pass the
/// overlap filter and which exclusive-or widenings of every item pass the
/// clause filter.
#[derive(Clone, Debug)]
pub struct CandidateSpace {
    pairs: Vec<(ItemId, ItemId)>,
    /// Per item: the clause `{I}` followed by its accepted widenings, each with
    /// its selection when it has more than one item.
    clauses: Vec<Vec<(Clause, Option<TidSet>)>>,
}

impl CandidateSpace {
    pub fn new(db: &LabeledDatabase, config: &SearchConfig, neighbors: Option<&NeighborTable>) -> Result<Self> {
        config.validate()?;
        let pairs = overlapping_pairs(db, config.min_overlap);
        let mut clauses = Vec::with_capacity(db.n_items());
        for item in db.vocab().ids() {
            let mut v = vec![(Clause::single(item), None)];
            if let Some(nb) = neighbors {
                let k_max = config.max_neighbors.min(nb.k());
                let mut members = vec![item];
                for rank in 1..=k_max {
                    let Some((n, _)) = nb.neighbor(item, rank) else {
                        break;
                    };
                    if n.index() >= db.n_items() {
                        break;
                    }
                    members.push(n);
                    let clause = Clause::new(members.iter().copied())?;
                    if filter_xor_clause(&clause, item, db, nb, config) {
                        let sel = db.select_clause_unchecked(&clause);
                        v.push((clause, Some(sel)));
                    }
                }
            }
            clauses.push(v);
        }
        Ok(CandidateSpace { pairs, clauses })
    }

    pub fn pairs(&self) -> &[(ItemId, ItemId)] {
        &self.pairs
    }

    /// The clause `{item}` and its accepted exclusive-or widenings.
    pub fn clauses_of(&self, item: ItemId) -> impl Iterator<Item = &Clause> {
        self.clauses[item.index()].iter().map(|c| &c.0)
    }

    fn clause_selection<'a>(&'a self, db: &'a LabeledDatabase, item: ItemId, k: usize) -> &'a TidSet {
        let (clause, sel) = &self.clauses[item.index()][k];
        match sel {
            Some(s) => s,
            None => db.tids(clause.items()[0]),
        }
    }

    /// Single items and pairs, which do not depend on the model.
    pub fn base_candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::new();
        for variants in &self.clauses {
            for (clause, _) in variants {
                out.push(Candidate::new(
                    Conjunction::new(vec![clause.clone()]).expect("one clause"),
                    Provenance::Singleton,
                ));
            }
        }
        for &(a, b) in &self.pairs {
            for (ca, _) in &self.clauses[a.index()] {
                for (cb, _) in &self.clauses[b.index()] {
                    if let Ok(conj) = Conjunction::new(vec![ca.clone(), cb.clone()]) {
                        out.push(Candidate::new(conj, Provenance::Pair));
                    }
                }
            }
        }
        dedup_sorted(out)
    }

    /// `∧(γ(P) ∪ {A})` for every item clause `A` disjoint from `P` with a
    /// non-empty selection, together with that selection.
    pub fn extensions(&self, db: &LabeledDatabase, entry: &ModelEntry) -> Vec<(Candidate, TidSet)> {
        let conj = entry.pattern.conjunction();
        let mut out = Vec::new();
        for item in db.vocab().ids() {
            if conj.contains_item(item) {
                continue;
            }
            for (k, (clause, _)) in self.clauses[item.index()].iter().enumerate() {
                if conj.shares_items_with_clause(clause) {
                    continue;
                }
                let sel_c = self.clause_selection(db, item, k);
                if entry.selection().is_disjoint(sel_c) {
                    continue;
                }
                let ext = conj.with_clause(clause.clone()).expect("disjoint clause");
                out.push((
                    Candidate::new(ext, Provenance::PatternPlusItem { parent: entry.id }),
                    entry.selection().intersection(sel_c),
                ));
            }
        }
        out
    }

    /// `∧(γ(P₁) ∪ γ(P₂))` if the two are item-disjoint and co-occur.
    pub fn merge(&self, a: &ModelEntry, b: &ModelEntry) -> Option<(Candidate, TidSet)> {
        let (a, b) = if a.id < b.id { (a, b) } else { (b, a) };
        let conj = a.pattern.conjunction().merged(b.pattern.conjunction())?;
        if a.selection().is_disjoint(b.selection()) {
            return None;
        }
        Some((
            Candidate::new(conj, Provenance::PatternMerge { parents: [a.id, b.id] }),
            a.selection().intersection(b.selection()),
        ))
    }

    /// The full candidate set for `model`.
    pub fn candidates(&self, db: &LabeledDatabase, model: &Model) -> Vec<Candidate> {
        let mut out = self.base_candidates();
        let entries = model.entries();
        for e in entries {
            out.extend(self.extensions(db, e).into_iter().map(|(c, _)| c));
        }
        for (i, a) in entries.iter().enumerate() {
            for b in &entries[i + 1..] {
                if let Some((c, _)) = self.merge(a, b) {
                    out.push(c);
                }
            }
        }
        let present: HashSet<&Conjunction> = model.patterns().map(Pattern::conjunction).collect();
        out.retain(|c| !present.contains(&c.conjunction));
        dedup_sorted(out)
    }
}

/// Sorts by (provenance class, clauses, parents) and drops repeated
/// (clauses, parents) pairs.
fn dedup_sorted(mut v: Vec<Candidate>) -> Vec<Candidate> {
    v.sort_by(|a, b| {
        class(&a.provenance)
            .cmp(&class(&b.provenance))
            .then_with(|| a.conjunction.cmp(&b.conjunction))
            .then_with(|| a.parents().cmp(b.parents()))
    });
    v.dedup_by(|a, b| a.conjunction == b.conjunction && a.parents() == b.parents());
    v
}

fn class(p: &Provenance) -> u8 {
    match p {
        Provenance::Singleton => 0,
        Provenance::Pair => 1,
        Provenance::PatternPlusItem { .. } => 2,
        Provenance::PatternMerge { .. } => 3,
    }
}

/// Unordered item pairs `I₁ < I₂` passing the overlap filter, in canonical
/// order. Co-occurrences are counted from the transactions.
pub fn overlapping_pairs(db: &LabeledDatabase, min_overlap: f64) -> Vec<(ItemId, ItemId)> {
    let m = db.n_items();
    let support: Vec<usize> = db.vocab().ids().map(|i| db.item_support(i)).collect();
    let mut out = Vec::new();
    if min_overlap <= 0.0 {
        for a in 0..m {
            for b in a + 1..m {
                if support[a] > 0 && support[b] > 0 {
                    out.push((ItemId(a as u32), ItemId(b as u32)));
                }
            }
        }
        return out;
    }
    let mut counts = vec![0usize; m];
    let mut touched = Vec::new();
    for a in db.vocab().ids() {
        for tid in db.tids(a).iter() {
            for &b in db.transaction(tid) {
                if b > a {
                    if counts[b.index()] == 0 {
                        touched.push(b);
                    }
                    counts[b.index()] += 1;
                }
            }
        }
        touched.sort_unstable();
        for &b in &touched {
            let denom = support[a.index()].min(support[b.index()]);
            if passes_overlap(counts[b.index()], denom, min_overlap) {
                out.push((a, b));
            }
            counts[b.index()] = 0;
        }
        touched.clear();
    }
    out
}

/// All candidates for `model`, in deterministic order.
pub fn create_candidates(
    model: &Model,
    db: &LabeledDatabase,
    config: &SearchConfig,
    neighbors: Option<&NeighborTable>,
) -> Result<Vec<Candidate>> {
    Ok(CandidateSpace::new(db, config, neighbors)?.candidates(db, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;

    fn db_from(rows: Vec<(Label, Vec<&str>)>) -> LabeledDatabase {
        LabeledDatabase::from_token_rows(rows).unwrap()
    }

    #[test]
    fn overlap_arithmetic() {
        // |T1| = 100, |T2| = 50, |T1 ∩ T2| = 20
        let mut rows = Vec::new();
        for i in 0..200 {
            let mut t = vec!["pad"];
            if i < 100 {
                t.push("one");
            }
            if (80..130).contains(&i) {
                t.push("two");
            }
            rows.push((if i % 2 == 0 { Label::Pos } else { Label::Neg }, t));
        }
        let db = db_from(rows);
        let id = |t: &str| db.vocab().id(t).unwrap();
        assert!(overlap_filter(id("one"), id("two"), &db, 0.3).unwrap());
        assert!(!overlap_filter(id("one"), id("two"), &db, 0.41).unwrap());
        assert!(overlap_filter(id("one"), id("one"), &db, 1.0).unwrap());
    }

    #[test]
    fn disjoint_items_fail_overlap() {
        let db = db_from(vec![(Label::Pos, vec!["a"]), (Label::Neg, vec!["b"])]);
        assert!(!overlap_filter(ItemId(0), ItemId(1), &db, 0.3).unwrap());
    }

    #[test]
    fn three_overlapping_items() {
        let db = db_from(vec![
            (Label::Pos, vec!["A", "B", "C"]),
            (Label::Neg, vec!["A", "B", "C"]),
            (Label::Pos, vec!["A"]),
        ]);
        let model = Model::new(&db);
        let cands = create_candidates(&model, &db, &SearchConfig::default(), None).unwrap();
        let names: Vec<Vec<&str>> = cands
            .iter()
            .map(|c| c.conjunction.items().iter().map(|&i| db.vocab().token(i).unwrap()).collect())
            .collect();
        assert_eq!(
            names,
            vec![
                vec!["A"],
                vec!["B"],
                vec!["C"],
                vec!["A", "B"],
                vec!["A", "C"],
                vec!["B", "C"]
            ]
        );
    }

    #[test]
    fn pair_enumeration_matches_direct_filter() {
        let db = db_from(vec![
            (Label::Pos, vec!["a", "b"]),
            (Label::Pos, vec!["a", "c", "d"]),
            (Label::Neg, vec!["b", "c"]),
            (Label::Neg, vec!["d"]),
            (Label::Neg, vec!["a", "d", "e"]),
        ]);
        for t in [0.0, 0.3, 0.5, 0.7, 1.0] {
            let got = overlapping_pairs(&db, t);
            let mut want = Vec::new();
            for a in db.vocab().ids() {
                for b in db.vocab().ids().filter(|&b| b > a) {
                    if overlap_filter(a, b, &db, t).unwrap() {
                        want.push((a, b));
                    }
                }
            }
            assert_eq!(got, want, "threshold {t}");
        }
    }
}
