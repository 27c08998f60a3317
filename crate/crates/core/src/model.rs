//! The pattern set and its incremental cost bookkeeping.
//!
//! Besides the patterns, the model keeps, for every item, the ids of the
//! patterns containing it and its residual count (occurrences outside every
//! such pattern's selection). An edit `M ⊕ C` that removes the parents `R`
//! only changes the residual terms of items in `it(C) ∪ it(R)`, so its gain is
//! computed from those terms alone.

use crate::codelen::{data_bits_from_selection, lb, lstar, CostContext};
use crate::data::{Conjunction, ItemId, LabeledDatabase, Pattern};
use crate::error::{Error, Result};
use crate::tidset::TidSet;

/// Stable identity of a pattern within one model; assigned in acceptance order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternId(pub u32);

#[derive(Clone, Debug)]
pub struct ModelEntry {
    pub id: PatternId,
    pub pattern: Pattern,
    pub model_bits: f64,
    pub data_bits: f64,
    /// Search round in which the pattern was accepted (1-based).
    pub round: usize,
    pub gain_bits: f64,
    pub p_value: f64,
    selection: TidSet,
}

impl ModelEntry {
    pub fn selection(&self) -> &TidSet {
        &self.selection
    }
}

/// The outcome of evaluating `M ⊕ C` without applying it.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub gain: f64,
    /// The part of the gain that depends on the candidate and the items it
    /// touches; `gain = global + local`.
    pub local: f64,
    pub pattern: Pattern,
    pub selection: TidSet,
    pub model_bits: f64,
    pub data_bits: f64,
}

#[derive(Clone, Debug)]
pub struct Model {
    ctx: CostContext,
    entries: Vec<ModelEntry>,
    covering: Vec<Vec<PatternId>>,
    residual: Vec<usize>,
    versions: Vec<u64>,
    next_id: u32,
    total_bits: f64,
}

impl Model {
    /// The singleton-only baseline model for `db`.
    pub fn new(db: &LabeledDatabase) -> Model {
        let ctx = CostContext::new(db);
        let residual: Vec<usize> = db.vocab().ids().map(|i| db.item_support(i)).collect();
        let mut total = lstar(1) + ctx.singleton_model_bits();
        for &r in &residual {
            total += lb(ctx.n_total, r);
        }
        Model {
            ctx,
            covering: vec![Vec::new(); residual.len()],
            versions: vec![0; residual.len()],
            residual,
            entries: Vec::new(),
            next_id: 0,
            total_bits: total,
        }
    }

    pub fn context(&self) -> &CostContext {
        &self.ctx
    }

    /// `|𝒫|`
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Patterns in acceptance order.
    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn patterns(&self) -> impl Iterator<Item = &Pattern> {
        self.entries.iter().map(|e| &e.pattern)
    }

    pub fn entry(&self, id: PatternId) -> Option<&ModelEntry> {
        self.entries.binary_search_by_key(&id, |e| e.id).ok().map(|k| &self.entries[k])
    }

    pub fn contains(&self, id: PatternId) -> bool {
        self.entry(id).is_some()
    }

    pub fn contains_conjunction(&self, conj: &Conjunction) -> bool {
        self.entries.iter().any(|e| e.pattern.conjunction() == conj)
    }

    /// Residual occurrences of `item` not covered by its patterns.
    pub fn residual_count(&self, item: ItemId) -> Option<usize> {
        self.residual.get(item.index()).copied()
    }

    /// Ids of the patterns containing `item`.
    pub fn covering(&self, item: ItemId) -> &[PatternId] {
        &self.covering[item.index()]
    }

    /// Bumped whenever the set of patterns containing `item` changes.
    pub fn item_version(&self, item: ItemId) -> u64 {
        self.versions[item.index()]
    }

    /// Cached `L(M) + L(D | M)`.
    pub fn total_bits(&self) -> f64 {
        self.total_bits
    }

    /// Change of the pattern-count code when `removed` patterns leave and one
    /// enters. Infinite if fewer than `removed` patterns exist.
    pub fn global_delta(&self, removed: usize) -> f64 {
        let now = self.entries.len() as u64;
        if removed as u64 > now {
            return f64::INFINITY;
        }
        lstar(now + 2 - removed as u64) - lstar(now + 1)
    }

    pub(crate) fn check_parents(&self, remove: &[PatternId]) -> Result<()> {
        for (k, id) in remove.iter().enumerate() {
            if !self.contains(*id) {
                return Err(Error::Contract(format!("parent pattern {} is not in the model", id.0)));
            }
            if remove[..k].contains(id) {
                return Err(Error::Contract(format!("parent pattern {} listed twice", id.0)));
            }
        }
        Ok(())
    }

    fn residual_with(&self, db: &LabeledDatabase, item: ItemId, remove: &[PatternId], extra: Option<&TidSet>) -> usize {
        let mut covers: Vec<&[u64]> = self.covering[item.index()]
            .iter()
            .filter(|id| !remove.contains(id))
            .map(|&id| self.entry(id).expect("covering list is coherent").selection.words())
            .collect();
        if let Some(s) = extra {
            covers.push(s.words());
        }
        let tids = db.tids(item).words();
        match covers.as_slice() {
            [] => db.item_support(item),
            [one] => tids.iter().zip(*one).map(|(t, c)| (t & !c).count_ones() as usize).sum(),
            _ => {
                let mut count = 0;
                for (w, &t) in tids.iter().enumerate() {
                    if t == 0 {
                        continue;
                    }
                    let mut cov = 0u64;
                    for c in &covers {
                        cov |= c[w];
                    }
                    count += (t & !cov).count_ones() as usize;
                }
                count
            }
        }
    }

    /// Evaluates `M ⊕ conj` with `remove` leaving the model.
    pub fn evaluate(&self, db: &LabeledDatabase, conj: &Conjunction, remove: &[PatternId]) -> Result<Evaluation> {
        self.check_parents(remove)?;
        let selection = db.select(conj)?;
        Ok(self.evaluate_selected(db, conj.clone(), selection, remove))
    }

    /// [`Model::evaluate`] with the candidate's selection already computed and
    /// the parents already validated.
    pub(crate) fn evaluate_selected(
        &self,
        db: &LabeledDatabase,
        conj: Conjunction,
        selection: TidSet,
        remove: &[PatternId],
    ) -> Evaluation {
        let (local, model_bits, data_bits) = self.local_parts(db, &conj, &selection, remove);
        let gain = self.global_delta(remove.len()) + local;
        let pattern = Pattern::from_selection(conj, &selection, db);
        Evaluation {
            gain,
            local,
            pattern,
            selection,
            model_bits,
            data_bits,
        }
    }

    /// `(local gain, model bits, data bits)` of the candidate. The local gain
    /// only depends on the candidate, the parents and the covering state of
    /// the touched items.
    pub(crate) fn local_parts(
        &self,
        db: &LabeledDatabase,
        conj: &Conjunction,
        selection: &TidSet,
        remove: &[PatternId],
    ) -> (f64, f64, f64) {
        let model_bits = self.ctx.pattern_model_bits(conj);
        let data_bits = data_bits_from_selection(db, conj, selection);
        let mut local = model_bits + data_bits;
        for id in remove {
            let e = self.entry(*id).expect("parents checked");
            local -= e.model_bits + e.data_bits;
        }
        for item in self.touched_items(conj, remove) {
            let extra = conj.contains_item(item).then_some(selection);
            let after = self.residual_with(db, item, remove, extra);
            let before = self.residual[item.index()];
            if after != before {
                local += lb(self.ctx.n_total, after) - lb(self.ctx.n_total, before);
            }
        }
        (local, model_bits, data_bits)
    }

    /// Items whose residual term changes under `M ⊕ conj` with parents
    /// `remove`, in canonical order.
    pub fn touched_items(&self, conj: &Conjunction, remove: &[PatternId]) -> Vec<ItemId> {
        let mut items = conj.items();
        for id in remove {
            if let Some(e) = self.entry(*id) {
                items.extend(e.pattern.items());
            }
        }
        items.sort_unstable();
        items.dedup();
        items
    }

    /// Applies `M ⊕ conj`, removing `remove`. Returns the new pattern's id and
    /// the gain that was applied to the cached total.
    pub fn apply(
        &mut self,
        db: &LabeledDatabase,
        conj: &Conjunction,
        remove: &[PatternId],
        round: usize,
        p_value: f64,
    ) -> Result<(PatternId, f64)> {
        let ev = self.evaluate(db, conj, remove)?;
        Ok(self.apply_evaluated(db, ev, remove, round, p_value))
    }

    pub(crate) fn apply_evaluated(
        &mut self,
        db: &LabeledDatabase,
        ev: Evaluation,
        remove: &[PatternId],
        round: usize,
        p_value: f64,
    ) -> (PatternId, f64) {
        let touched = self.touched_items(ev.pattern.conjunction(), remove);
        let id = PatternId(self.next_id);
        self.next_id += 1;
        self.entries.retain(|e| !remove.contains(&e.id));
        for list in &mut self.covering {
            list.retain(|p| !remove.contains(p));
        }
        for item in ev.pattern.items() {
            self.covering[item.index()].push(id);
        }
        let gain = ev.gain;
        self.entries.push(ModelEntry {
            id,
            pattern: ev.pattern,
            model_bits: ev.model_bits,
            data_bits: ev.data_bits,
            round,
            gain_bits: gain,
            p_value,
            selection: ev.selection,
        });
        for item in touched {
            self.residual[item.index()] = self.residual_with(db, item, &[], None);
            self.versions[item.index()] += 1;
        }
        self.total_bits += gain;
        (id, gain)
    }
}
