//! Codelengths, in bits.
//!
//! The total encoded size of a database under a model is
//! `L(M) + L(D | M)`:
//!
//! * every pattern is sent once per label partition as a data-to-model code
//!   (`log C(|Dˡ|, |σ_P(Dˡ)|)`), followed by which item of each exclusive-or
//!   clause is active where, using shrinking binomials;
//! * each item's occurrences not explained by a pattern containing it are sent
//!   with a singleton code over the whole database;
//! * the model pays for the pattern count, each pattern's clause count and
//!   clause items, and the parametric complexity of every binomial used above.
//!
//! All parametric complexities are binomial (two-category) normalized maximum
//! likelihood terms. `0 log 0 = 0` throughout.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::data::{Conjunction, ItemId, Label, LabeledDatabase};
use crate::error::{Error, Result};
use crate::model::{Model, PatternId};
use crate::tidset::TidSet;

/// Normalizing constant of Rissanen's universal code for the integers.
pub const RISSANEN_C0: f64 = 2.865064;

const LN_FACT_TABLE: usize = 1 << 17;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        t.push(0.0);
        t.push(0.0);
        for n in 2..LN_FACT_TABLE {
            t.push(ln_gamma(n as f64 + 1.0));
        }
        t
    })
}

/// `ln n!`
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < LN_FACT_TABLE {
        ln_fact_table()[n as usize]
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)`; the caller guarantees `k <= n`.
#[inline]
pub(crate) fn ln_binom(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n, "ln_binom({n}, {k})");
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `log₂ C(n, k)` without the domain check.
#[inline]
pub(crate) fn lb(n: usize, k: usize) -> f64 {
    ln_binom(n as u64, k as u64) / std::f64::consts::LN_2
}

/// `log₂ C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("log_binomial: k = {k} exceeds n = {n}")));
    }
    Ok(ln_binom(n, k) / std::f64::consts::LN_2)
}

/// Rissanen's universal code for positive integers,
/// `L_ℕ(n) = log₂ c₀ + log₂ n + log₂ log₂ n + …` over the positive terms.
pub fn universal_int_code(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("universal integer code is undefined at 0".into()));
    }
    Ok(lstar(n))
}

#[inline]
pub(crate) fn lstar(n: u64) -> f64 {
    debug_assert!(n >= 1);
    let mut bits = RISSANEN_C0.log2();
    let mut x = (n as f64).log2();
    while x > 0.0 {
        bits += x;
        x = x.log2();
    }
    bits
}

/// Parametric complexity of the binomial NML code over `n` trials,
/// `log₂ Σ_k C(n,k) (k/n)^k ((n−k)/n)^(n−k)`, with `pc(0) = 0`.
pub fn binomial_param_complexity(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let log_term = |k: u64| {
        let kf = k as f64;
        let rest = nf - kf;
        let mut t = ln_binom(n, k);
        if k > 0 {
            t += kf * (kf / nf).ln();
        }
        if k < n {
            t += rest * (rest / nf).ln();
        }
        t
    };
    // terms are symmetric in k and largest at the ends, where they equal 1
    let max = 0.0_f64;
    let mut acc = 0.0;
    for k in 0..=n {
        acc += (log_term(k) - max).exp();
    }
    (max + acc.ln()) / std::f64::consts::LN_2
}

/// Per-database constants of the encoding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostContext {
    pub n_total: usize,
    pub n_neg: usize,
    pub n_pos: usize,
    pub n_items: usize,
    pub pc_total: f64,
    pub pc_neg: f64,
    pub pc_pos: f64,
    pub pc_items: f64,
}

impl CostContext {
    pub fn new(db: &LabeledDatabase) -> Self {
        CostContext {
            n_total: db.n_total(),
            n_neg: db.n_neg(),
            n_pos: db.n_pos(),
            n_items: db.n_items(),
            pc_total: binomial_param_complexity(db.n_total() as u64),
            pc_neg: binomial_param_complexity(db.n_neg() as u64),
            pc_pos: binomial_param_complexity(db.n_pos() as u64),
            pc_items: binomial_param_complexity(db.n_items() as u64),
        }
    }

    /// Model bits of one pattern: clause count, clause items and the
    /// complexities of its two partition codes.
    pub fn pattern_model_bits(&self, conj: &Conjunction) -> f64 {
        let mut bits = lstar(conj.clauses().len() as u64) + self.pc_pos + self.pc_neg;
        for cl in conj.clauses() {
            bits += lb(self.n_items, cl.len()) + self.pc_items;
        }
        bits
    }

    /// Model bits independent of the patterns: one singleton complexity per item.
    pub fn singleton_model_bits(&self) -> f64 {
        self.n_items as f64 * self.pc_total
    }
}

/// Cost of sending which clause item is active in each of `support`
/// transactions, items taken in the order given. The result does not depend on
/// that order.
pub fn clause_code_length(support: usize, counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total > support {
        return Err(Error::Domain(format!(
            "clause counts sum to {total}, more than the support {support}"
        )));
    }
    Ok(clause_bits(support, counts.iter().copied()))
}

fn clause_bits(support: usize, counts: impl Iterator<Item = usize>) -> f64 {
    let mut remaining = support;
    let mut bits = 0.0;
    for c in counts {
        bits += lb(remaining, c);
        remaining -= c;
    }
    bits
}

/// `log C(|D|, |σ_I(D)|)`: the label-agnostic baseline code of one item.
pub fn singleton_baseline_cost(item: ItemId, db: &LabeledDatabase) -> Result<f64> {
    if item.index() >= db.n_items() {
        return Err(Error::UnknownItem(item.0));
    }
    Ok(lb(db.n_total(), db.item_support(item)))
}

/// Data bits of a pattern given its selection on the whole database.
pub(crate) fn data_bits_from_selection(db: &LabeledDatabase, conj: &Conjunction, sel: &TidSet) -> f64 {
    let mut bits = 0.0;
    for label in [Label::Neg, Label::Pos] {
        let mask = db.mask(label);
        let s = sel.intersection_len(mask);
        bits += lb(db.n_in(label.into()), s);
        for cl in conj.clauses() {
            if cl.len() == 1 {
                // log C(s, s) = 0
                continue;
            }
            bits += clause_bits(s, cl.items().iter().map(|&i| sel.intersection3_len(mask, db.tids(i))));
        }
    }
    bits
}

/// `L(π_P(D) | P)`: the label-conditioned data cost of a pattern.
pub fn pattern_data_cost(conj: &Conjunction, db: &LabeledDatabase) -> Result<f64> {
    let sel = db.select(conj)?;
    Ok(data_bits_from_selection(db, conj, &sel))
}

/// Like [`pattern_data_cost`], with each clause's items sent in the given order
/// instead of the canonical one.
pub fn pattern_data_cost_ordered(
    conj: &Conjunction,
    orders: &[Vec<ItemId>],
    db: &LabeledDatabase,
) -> Result<f64> {
    if orders.len() != conj.clauses().len() {
        return Err(Error::Contract("one item order per clause expected".into()));
    }
    for (cl, ord) in conj.clauses().iter().zip(orders) {
        let mut sorted = ord.clone();
        sorted.sort_unstable();
        if sorted != cl.items() {
            return Err(Error::Contract("item order is not a permutation of its clause".into()));
        }
    }
    let sel = db.select(conj)?;
    let mut bits = 0.0;
    for label in [Label::Neg, Label::Pos] {
        let mask = db.mask(label);
        let s = sel.intersection_len(mask);
        bits += lb(db.n_in(label.into()), s);
        for ord in orders {
            bits += clause_bits(s, ord.iter().map(|&i| sel.intersection3_len(mask, db.tids(i))));
        }
    }
    Ok(bits)
}

/// Residual singleton code of `item` under the current model.
pub fn residual_singleton_cost(item: ItemId, model: &Model, db: &LabeledDatabase) -> Result<f64> {
    let r = model.residual_count(item).ok_or(Error::UnknownItem(item.0))?;
    Ok(lb(db.n_total(), r))
}

/// `L(M)` for the model's current pattern set.
pub fn model_cost(model: &Model, db: &LabeledDatabase) -> f64 {
    let ctx = CostContext::new(db);
    let mut bits = lstar(model.len() as u64 + 1);
    for e in model.entries() {
        bits += ctx.pattern_model_bits(e.pattern.conjunction());
    }
    bits + ctx.singleton_model_bits()
}

/// Itemized total codelength.
#[derive(Clone, Debug, PartialEq)]
pub struct CostBreakdown {
    pub model_bits: f64,
    pub data_bits: f64,
    /// `(id, model bits, data bits)` per pattern, in model order.
    pub per_pattern_bits: Vec<(PatternId, f64, f64)>,
    /// Residual singleton code per item.
    pub per_singleton_bits: Vec<f64>,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.model_bits + self.data_bits
    }
}

/// `L(M) + L(D | M)` recomputed from scratch, ignoring every cached value in
/// the model.
pub fn total_cost(model: &Model, db: &LabeledDatabase) -> CostBreakdown {
    let ctx = CostContext::new(db);
    let n = db.n_total();
    let mut covered = vec![TidSet::empty(n); db.n_items()];
    let mut per_pattern = Vec::with_capacity(model.len());
    let mut model_bits = lstar(model.len() as u64 + 1) + ctx.singleton_model_bits();
    let mut data_bits = 0.0;
    for e in model.entries() {
        let conj = e.pattern.conjunction();
        let sel = db.select_unchecked(conj);
        let mb = ctx.pattern_model_bits(conj);
        let db_bits = data_bits_from_selection(db, conj, &sel);
        for i in conj.items() {
            covered[i.index()].union_with(&sel);
        }
        model_bits += mb;
        data_bits += db_bits;
        per_pattern.push((e.id, mb, db_bits));
    }
    let mut per_singleton = Vec::with_capacity(db.n_items());
    for item in db.vocab().ids() {
        let mut rest = db.tids(item).clone();
        rest.difference_with(&covered[item.index()]);
        let b = lb(n, rest.len());
        data_bits += b;
        per_singleton.push(b);
    }
    CostBreakdown {
        model_bits,
        data_bits,
        per_pattern_bits: per_pattern,
        per_singleton_bits: per_singleton,
    }
}

/// Exact codelength change of `M ⊕ candidate`, where the parents listed in
/// `remove` leave the model. Negative means the candidate compresses.
pub fn gain(model: &Model, candidate: &Conjunction, remove: &[PatternId], db: &LabeledDatabase) -> Result<f64> {
    Ok(model.evaluate(db, candidate, remove)?.gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Clause;

    fn exact_binom(n: u64, k: u64) -> u128 {
        let mut r: u128 = 1;
        for i in 0..k as u128 {
            r = r * (n as u128 - i) / (i + 1);
        }
        r
    }

    #[test]
    fn log_binomial_points() {
        assert_eq!(log_binomial(10, 0).unwrap(), 0.0);
        assert_eq!(log_binomial(5, 5).unwrap(), 0.0);
        assert!((log_binomial(10, 3).unwrap() - 120f64.log2()).abs() < 1e-12);
        assert!((log_binomial(10, 3).unwrap() - 6.90689).abs() < 1e-5);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn log_binomial_matches_integers_up_to_30() {
        for n in 0..=30u64 {
            for k in 0..=n {
                let want = (exact_binom(n, k) as f64).log2();
                let got = log_binomial(n, k).unwrap();
                assert!((got - want).abs() < 1e-9, "C({n},{k}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn universal_code_points() {
        // log2(2.865064) = 1.518567...
        assert!((universal_int_code(1).unwrap() - 1.518567).abs() < 1e-6);
        assert!((universal_int_code(2).unwrap() - universal_int_code(1).unwrap() - 1.0).abs() < 1e-12);
        assert!(universal_int_code(0).is_err());
    }

    #[test]
    fn universal_code_is_monotone() {
        let mut prev = lstar(1);
        for n in 2..=1_000_000u64 {
            let cur = lstar(n);
            assert!(cur >= prev, "L({n}) = {cur} < L({}) = {prev}", n - 1);
            prev = cur;
        }
    }

    #[test]
    fn param_complexity_points() {
        assert_eq!(binomial_param_complexity(0), 0.0);
        assert!((binomial_param_complexity(1) - 1.0).abs() < 1e-12);
        assert!((binomial_param_complexity(2) - 2.5f64.log2()).abs() < 1e-12);
        assert!((binomial_param_complexity(2) - 1.32193).abs() < 1e-5);
    }

    #[test]
    fn param_complexity_grows_like_half_log_n() {
        // C(n) ~ sqrt(pi n / 2)
        let n = 100_000u64;
        let approx = 0.5 * (std::f64::consts::PI * n as f64 / 2.0).log2();
        assert!((binomial_param_complexity(n) - approx).abs() < 0.01);
    }

    #[test]
    fn clause_code_examples() {
        // support 10, A active 6 times, B 4 times
        let bits = clause_code_length(10, &[6, 4]).unwrap();
        assert!((bits - 210f64.log2()).abs() < 1e-12);
        assert!(clause_code_length(5, &[4, 4]).is_err());
    }

    #[test]
    fn singleton_baseline_points() {
        let rows: Vec<(Label, Vec<&str>)> = (0..10)
            .map(|i| {
                let l = if i % 2 == 0 { Label::Pos } else { Label::Neg };
                let mut t = vec!["all"];
                if i < 5 {
                    t.push("half");
                }
                (l, t)
            })
            .collect();
        let mut rows = rows;
        rows[0].1.push("never-but-once");
        let db = LabeledDatabase::from_token_rows(rows).unwrap();
        let id = |t: &str| db.vocab().id(t).unwrap();
        assert_eq!(singleton_baseline_cost(id("all"), &db).unwrap(), 0.0);
        assert!((singleton_baseline_cost(id("half"), &db).unwrap() - 252f64.log2()).abs() < 1e-12);
        assert!((singleton_baseline_cost(id("half"), &db).unwrap() - 7.97728).abs() < 1e-5);
        assert!((singleton_baseline_cost(id("never-but-once"), &db).unwrap() - 10f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn conjunctive_pattern_data_cost_has_no_inner_terms() {
        let db = LabeledDatabase::from_token_rows(vec![
            (Label::Pos, vec!["a", "b"]),
            (Label::Pos, vec!["a", "b"]),
            (Label::Pos, vec!["a"]),
            (Label::Neg, vec!["b"]),
            (Label::Neg, vec!["a", "b"]),
        ])
        .unwrap();
        let conj = Conjunction::of_items(db.vocab().ids()).unwrap();
        let want = lb(2, 1) + lb(3, 2);
        assert!((pattern_data_cost(&conj, &db).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn xor_clause_inner_cost() {
        // σ_P(D⁺) = 10 with A in 6 and B in 4; D⁻ has no occurrence.
        let mut rows = Vec::new();
        for i in 0..10 {
            rows.push((Label::Pos, vec![if i < 6 { "A" } else { "B" }]));
        }
        for _ in 0..5 {
            rows.push((Label::Neg, vec!["C"]));
        }
        let db = LabeledDatabase::from_token_rows(rows).unwrap();
        let cl = Clause::new([db.vocab().id("A").unwrap(), db.vocab().id("B").unwrap()]).unwrap();
        let conj = Conjunction::new(vec![cl]).unwrap();
        let want = lb(5, 0) + lb(10, 10) + 210f64.log2();
        assert!((pattern_data_cost(&conj, &db).unwrap() - want).abs() < 1e-12);
    }
}
