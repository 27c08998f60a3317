//! Labeled transaction data and the pattern language over it.
//!
//! A [`LabeledDatabase`] is a set of transactions, each a set of items plus one
//! of two labels. Patterns are conjunctions of clauses; a clause is an
//! exclusive-or over items and holds on a transaction iff *exactly one* of its
//! items is present.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::stats;
use crate::tidset::TidSet;

/// Dense item identifier; the numeric order is the canonical item order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    /// `l⁻`, e.g. correctly classified.
    Neg,
    /// `l⁺`, e.g. misclassified.
    Pos,
}

impl Label {
    pub fn symbol(self) -> &'static str {
        match self {
            Label::Neg => "-",
            Label::Pos => "+",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Label> {
        match s {
            "-" => Some(Label::Neg),
            "+" => Some(Label::Pos),
            _ => None,
        }
    }

    pub fn opposite(self) -> Label {
        match self {
            Label::Neg => Label::Pos,
            Label::Pos => Label::Neg,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Partition {
    All,
    Neg,
    Pos,
}

impl From<Label> for Partition {
    fn from(l: Label) -> Self {
        match l {
            Label::Neg => Partition::Neg,
            Label::Pos => Partition::Pos,
        }
    }
}

/// Bijection between token strings and dense [`ItemId`]s, in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    items: Vec<String>,
    index: HashMap<String, ItemId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Self::new();
        for t in tokens {
            v.intern(t.as_ref());
        }
        v
    }

    pub fn intern(&mut self, token: &str) -> ItemId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = ItemId(self.items.len() as u32);
        self.items.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn id(&self, token: &str) -> Option<ItemId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: ItemId) -> Option<&str> {
        self.items.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ItemId> {
        (0..self.items.len() as u32).map(ItemId)
    }

    pub fn tokens(&self) -> &[String] {
        &self.items
    }
}

/// An exclusive-or over a non-empty set of items, kept in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    items: Vec<ItemId>,
}

impl Clause {
    pub fn new<I: IntoIterator<Item = ItemId>>(items: I) -> Result<Clause> {
        let mut items: Vec<ItemId> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        if items.is_empty() {
            return Err(Error::Contract("a clause needs at least one item".into()));
        }
        Ok(Clause { items })
    }

    pub fn single(item: ItemId) -> Clause {
        Clause { items: vec![item] }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.items.binary_search(&item).is_ok()
    }
}

/// The clause structure of a pattern: pairwise item-disjoint clauses in
/// canonical (lexicographic) order. This is the identity of a pattern.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conjunction {
    clauses: Vec<Clause>,
}

impl Conjunction {
    pub fn new(mut clauses: Vec<Clause>) -> Result<Conjunction> {
        if clauses.is_empty() {
            return Err(Error::Contract("a pattern needs at least one clause".into()));
        }
        clauses.sort_unstable();
        let mut seen: Vec<ItemId> = clauses.iter().flat_map(|c| c.items.iter().copied()).collect();
        let n = seen.len();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != n {
            return Err(Error::Contract("pattern clauses must be item-disjoint".into()));
        }
        Ok(Conjunction { clauses })
    }

    /// Plain conjunctive pattern: one single-item clause per item.
    pub fn of_items<I: IntoIterator<Item = ItemId>>(items: I) -> Result<Conjunction> {
        Self::new(items.into_iter().map(Clause::single).collect())
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// `it(P)`, in canonical order.
    pub fn items(&self) -> Vec<ItemId> {
        let mut v: Vec<ItemId> = self.clauses.iter().flat_map(|c| c.items.iter().copied()).collect();
        v.sort_unstable();
        v
    }

    pub fn n_items(&self) -> usize {
        self.clauses.iter().map(Clause::len).sum()
    }

    pub fn contains_item(&self, item: ItemId) -> bool {
        self.clauses.iter().any(|c| c.contains(item))
    }

    pub fn shares_items_with(&self, other: &Conjunction) -> bool {
        self.clauses
            .iter()
            .flat_map(|c| c.items.iter())
            .any(|&i| other.contains_item(i))
    }

    pub fn shares_items_with_clause(&self, clause: &Clause) -> bool {
        clause.items.iter().any(|&i| self.contains_item(i))
    }

    /// `∧(γ(self) ∪ {clause})`, or `None` if the clause reuses an item.
    pub fn with_clause(&self, clause: Clause) -> Option<Conjunction> {
        if self.shares_items_with_clause(&clause) {
            return None;
        }
        let mut clauses = self.clauses.clone();
        clauses.push(clause);
        clauses.sort_unstable();
        Some(Conjunction { clauses })
    }

    /// `∧(γ(self) ∪ γ(other))`, or `None` if the two share an item.
    pub fn merged(&self, other: &Conjunction) -> Option<Conjunction> {
        if self.shares_items_with(other) {
            return None;
        }
        let mut clauses = self.clauses.clone();
        clauses.extend(other.clauses.iter().cloned());
        clauses.sort_unstable();
        Some(Conjunction { clauses })
    }
}

/// A pattern together with its supports in both label partitions and the
/// label it is associated with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    conjunction: Conjunction,
    /// `None` when both partitions have exactly the same relative support.
    pub label_side: Option<Label>,
    pub support_neg: usize,
    pub support_pos: usize,
}

impl Pattern {
    /// Computes supports and label side of `conjunction` on `db`.
    pub fn evaluate(conjunction: Conjunction, db: &LabeledDatabase) -> Result<Pattern> {
        let sel = db.select(&conjunction)?;
        Ok(Self::from_selection(conjunction, &sel, db))
    }

    pub(crate) fn from_selection(conjunction: Conjunction, sel: &TidSet, db: &LabeledDatabase) -> Pattern {
        let support_pos = sel.intersection_len(db.mask(Label::Pos));
        let support_neg = sel.len() - support_pos;
        let label_side = stats::label_side_for(support_neg, support_pos, db);
        Pattern {
            conjunction,
            label_side,
            support_neg,
            support_pos,
        }
    }

    pub fn conjunction(&self) -> &Conjunction {
        &self.conjunction
    }

    pub fn clauses(&self) -> &[Clause] {
        self.conjunction.clauses()
    }

    pub fn items(&self) -> Vec<ItemId> {
        self.conjunction.items()
    }

    pub fn n_items(&self) -> usize {
        self.conjunction.n_items()
    }

    pub fn support(&self) -> usize {
        self.support_neg + self.support_pos
    }

    pub fn support_in(&self, partition: Partition) -> usize {
        match partition {
            Partition::All => self.support(),
            Partition::Neg => self.support_neg,
            Partition::Pos => self.support_pos,
        }
    }
}

/// Something the selection operator can be applied to.
pub trait Condition {
    fn select_in(&self, db: &LabeledDatabase) -> Result<TidSet>;
}

impl Condition for Clause {
    fn select_in(&self, db: &LabeledDatabase) -> Result<TidSet> {
        db.select_clause(self)
    }
}

impl Condition for Conjunction {
    fn select_in(&self, db: &LabeledDatabase) -> Result<TidSet> {
        db.select(self)
    }
}

impl Condition for Pattern {
    fn select_in(&self, db: &LabeledDatabase) -> Result<TidSet> {
        db.select(&self.conjunction)
    }
}

/// Immutable labeled transaction store.
///
/// Transactions keep their input order as ids. Each item keeps its tid set over
/// the whole database; partition-restricted sets are the intersection with the
/// partition masks, which are computed once.
#[derive(Clone, Debug)]
pub struct LabeledDatabase {
    vocab: Vocabulary,
    rows: Vec<Vec<ItemId>>,
    labels: Vec<Label>,
    item_tids: Vec<TidSet>,
    pos_mask: TidSet,
    neg_mask: TidSet,
    n_pos: usize,
}

impl LabeledDatabase {
    /// Builds a database. Duplicate items within a row are collapsed. Both
    /// labels must occur.
    pub fn new(vocab: Vocabulary, rows: Vec<(Label, Vec<ItemId>)>) -> Result<LabeledDatabase> {
        let n = rows.len();
        let m = vocab.len();
        let mut item_tids = vec![TidSet::empty(n); m];
        let mut pos_mask = TidSet::empty(n);
        let mut out_rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for (tid, (label, mut items)) in rows.into_iter().enumerate() {
            items.sort_unstable();
            items.dedup();
            for &i in &items {
                if i.index() >= m {
                    return Err(Error::UnknownItem(i.0));
                }
                item_tids[i.index()].insert(tid);
            }
            if label == Label::Pos {
                pos_mask.insert(tid);
            }
            labels.push(label);
            out_rows.push(items);
        }
        let n_pos = pos_mask.len();
        if n_pos == 0 {
            return Err(Error::SingleLabel("+"));
        }
        if n_pos == n {
            return Err(Error::SingleLabel("-"));
        }
        let mut neg_mask = TidSet::full(n);
        neg_mask.difference_with(&pos_mask);
        Ok(LabeledDatabase {
            vocab,
            rows: out_rows,
            labels,
            item_tids,
            pos_mask,
            neg_mask,
            n_pos,
        })
    }

    /// Builds a database from token rows, interning tokens in first-seen order.
    pub fn from_token_rows<I, R, S>(rows: I) -> Result<LabeledDatabase>
    where
        I: IntoIterator<Item = (Label, R)>,
        R: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary::new();
        let rows: Vec<(Label, Vec<ItemId>)> = rows
            .into_iter()
            .map(|(l, toks)| (l, toks.into_iter().map(|t| vocab.intern(t.as_ref())).collect()))
            .collect();
        Self::new(vocab, rows)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// `|D|`
    pub fn n_total(&self) -> usize {
        self.rows.len()
    }

    /// `|D⁻|`
    pub fn n_neg(&self) -> usize {
        self.rows.len() - self.n_pos
    }

    /// `|D⁺|`
    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_in(&self, partition: Partition) -> usize {
        match partition {
            Partition::All => self.n_total(),
            Partition::Neg => self.n_neg(),
            Partition::Pos => self.n_pos(),
        }
    }

    /// `|𝓘|`
    pub fn n_items(&self) -> usize {
        self.vocab.len()
    }

    pub fn transaction(&self, tid: usize) -> &[ItemId] {
        &self.rows[tid]
    }

    pub fn label(&self, tid: usize) -> Label {
        self.labels[tid]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn transactions(&self) -> impl Iterator<Item = (Label, &[ItemId])> {
        self.labels.iter().copied().zip(self.rows.iter().map(Vec::as_slice))
    }

    pub fn mask(&self, label: Label) -> &TidSet {
        match label {
            Label::Pos => &self.pos_mask,
            Label::Neg => &self.neg_mask,
        }
    }

    fn check(&self, item: ItemId) -> Result<()> {
        if item.index() < self.item_tids.len() {
            Ok(())
        } else {
            Err(Error::UnknownItem(item.0))
        }
    }

    /// `σ_I(D)`; panics on an unknown item.
    #[inline]
    pub fn tids(&self, item: ItemId) -> &TidSet {
        &self.item_tids[item.index()]
    }

    pub fn tids_in(&self, item: ItemId, partition: Partition) -> Result<TidSet> {
        self.check(item)?;
        Ok(self.restrict(self.tids(item), partition))
    }

    pub fn item_support(&self, item: ItemId) -> usize {
        self.tids(item).len()
    }

    pub fn item_support_in(&self, item: ItemId, label: Label) -> usize {
        self.tids(item).intersection_len(self.mask(label))
    }

    pub fn restrict(&self, set: &TidSet, partition: Partition) -> TidSet {
        match partition {
            Partition::All => set.clone(),
            Partition::Neg => set.intersection(&self.neg_mask),
            Partition::Pos => set.intersection(&self.pos_mask),
        }
    }

    /// Transactions where exactly one item of the clause is present.
    pub fn select_clause(&self, clause: &Clause) -> Result<TidSet> {
        for &i in clause.items() {
            self.check(i)?;
        }
        Ok(self.select_clause_unchecked(clause))
    }

    pub(crate) fn select_clause_unchecked(&self, clause: &Clause) -> TidSet {
        match clause.items() {
            [single] => self.tids(*single).clone(),
            items => TidSet::exactly_one(self.n_total(), items.iter().map(|&i| self.tids(i))),
        }
    }

    /// Transactions where every clause holds.
    pub fn select(&self, conj: &Conjunction) -> Result<TidSet> {
        for c in conj.clauses() {
            for &i in c.items() {
                self.check(i)?;
            }
        }
        Ok(self.select_unchecked(conj))
    }

    pub(crate) fn select_unchecked(&self, conj: &Conjunction) -> TidSet {
        let mut clauses = conj.clauses().iter();
        let first = clauses.next().expect("conjunction is non-empty");
        let mut sel = self.select_clause_unchecked(first);
        for c in clauses {
            match c.items() {
                [single] => sel.intersect_with(self.tids(*single)),
                _ => sel.intersect_with(&self.select_clause_unchecked(c)),
            }
        }
        sel
    }

    /// The selection operator `σ_c(partition)`.
    pub fn selection<C: Condition + ?Sized>(&self, condition: &C, partition: Partition) -> Result<TidSet> {
        let sel = condition.select_in(self)?;
        Ok(self.restrict(&sel, partition))
    }

    /// `(|σ_P(D⁻)|, |σ_P(D⁺)|)`
    pub fn pattern_support(&self, conj: &Conjunction) -> Result<(usize, usize)> {
        let sel = self.select(conj)?;
        let pos = sel.intersection_len(&self.pos_mask);
        Ok((sel.len() - pos, pos))
    }

    /// For each item of `clause`, the number of transactions in
    /// `σ_P(partition)` where that item is the active one.
    pub fn clause_item_counts(
        &self,
        conj: &Conjunction,
        clause: &Clause,
        partition: Partition,
    ) -> Result<Vec<usize>> {
        if !conj.clauses().contains(clause) {
            return Err(Error::Contract("clause is not part of the pattern".into()));
        }
        let sel = self.restrict(&self.select(conj)?, partition);
        Ok(clause
            .items()
            .iter()
            .map(|&i| sel.intersection_len(self.tids(i)))
            .collect())
    }

    /// Evaluates `conj` into a [`Pattern`] with supports and label side.
    pub fn pattern(&self, conj: Conjunction) -> Result<Pattern> {
        Pattern::evaluate(conj, self)
    }

    /// Item ids for the given tokens.
    pub fn conjunction_from_tokens<C, S>(&self, clauses: C) -> Result<Conjunction>
    where
        C: IntoIterator,
        C::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = Vec::new();
        for cl in clauses {
            let mut ids = Vec::new();
            for t in cl {
                let t = t.as_ref();
                ids.push(self.vocab.id(t).ok_or_else(|| Error::UnknownToken(t.to_owned()))?);
            }
            out.push(Clause::new(ids)?);
        }
        Conjunction::new(out)
    }
}
