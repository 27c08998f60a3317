//! Slow reference computations for the test suite.
//!
//! Everything here is recomputed from the definitions with exact integer
//! arithmetic (big binomials, rational tail sums) and linear scans over the
//! transactions. Only the data model is shared with `labeldesc`; none of its
//! cost, statistics or search code is called.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use labeldesc::data::{Conjunction, ItemId, Label, LabeledDatabase};
use labeldesc::model::Model;
use labeldesc::stats::ContingencyCells;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("input too large for the oracle: {0}")]
    TooLarge(String),
}

pub type OracleResult<T> = Result<T, OracleError>;

/// A fast value next to its reference value.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub case: String,
    pub fast: f64,
    pub oracle: f64,
    pub diff: f64,
}

impl OracleReport {
    pub fn new(case: impl Into<String>, fast: f64, oracle: f64) -> Self {
        OracleReport {
            case: case.into(),
            fast,
            oracle,
            diff: (fast - oracle).abs(),
        }
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.diff < tolerance
    }
}

fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut r = BigUint::one();
    for i in 0..k {
        r *= n - i;
        r /= i + 1;
    }
    r
}

fn pow(b: u64, e: u64) -> BigUint {
    let mut r = BigUint::one();
    for _ in 0..e {
        r *= b;
    }
    r
}

/// `log₂ x` for a positive big integer, from its leading 64 bits.
fn log2_big(x: &BigUint) -> f64 {
    assert!(!x.is_zero());
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().expect("fits").to_f64().expect("finite").log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("fits") as f64;
    top.log2() + shift as f64
}

fn log2_binom(n: u64, k: u64) -> f64 {
    log2_big(&binom(n, k))
}

/// `log₂ Σ_k C(n,k) (k/n)^k ((n−k)/n)^(n−k)`, summed as the exact rational
/// `Σ_k C(n,k) k^k (n−k)^(n−k) / n^n`.
pub fn oracle_nml_binomial(n: u64) -> OracleResult<f64> {
    if n > 20 {
        return Err(OracleError::TooLarge(format!("nml for n = {n} > 20")));
    }
    Ok(nml_exact(n))
}

fn nml_exact(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // 0^0 = 1
    let num: BigUint = (0..=n).map(|k| binom(n, k) * pow(k, k) * pow(n - k, n - k)).sum();
    log2_big(&num) - log2_big(&pow(n, n))
}

/// The one-sided tail for a pattern associated with `side`, summed over every
/// table with the observed margins that is at least as extreme.
pub fn oracle_fisher(cells: &ContingencyCells, side: Option<Label>) -> f64 {
    let n = cells.n;
    let n_pos = cells.b + cells.d;
    let support = cells.c;
    if support == 0 || side.is_none() {
        return 1.0;
    }
    let total = binom(n, support);
    let mut tail = BigUint::zero();
    // x = occurrences in D⁺
    for x in 0..=support {
        let extreme = match side {
            Some(Label::Pos) => x >= cells.d,
            _ => support - x >= support - cells.d,
        };
        if extreme {
            tail += binom(n_pos, x) * binom(n - n_pos, support - x);
        }
    }
    if tail.is_zero() {
        return 0.0;
    }
    (log2_big(&tail) - log2_big(&total)).exp2()
}

fn lstar(n: u64) -> f64 {
    assert!(n >= 1);
    let mut bits = 2.865064f64.log2();
    let mut x = (n as f64).log2();
    while x > 0.0 {
        bits += x;
        x = x.log2();
    }
    bits
}

fn holds(db: &LabeledDatabase, conj: &Conjunction, tid: usize) -> bool {
    let row = db.transaction(tid);
    conj.clauses()
        .iter()
        .all(|cl| cl.items().iter().filter(|i| row.contains(i)).count() == 1)
}

fn pattern_cost(db: &LabeledDatabase, conj: &Conjunction, n_items: u64) -> f64 {
    let n = db.n_total() as u64;
    let n_pos = db.n_pos() as u64;
    let n_neg = n - n_pos;
    let mut bits = lstar(conj.clauses().len() as u64) + nml_exact(n_pos) + nml_exact(n_neg);
    for cl in conj.clauses() {
        bits += log2_binom(n_items, cl.len() as u64) + nml_exact(n_items);
    }
    for (label, size) in [(Label::Neg, n_neg), (Label::Pos, n_pos)] {
        let sel: Vec<usize> = (0..db.n_total())
            .filter(|&t| db.label(t) == label && holds(db, conj, t))
            .collect();
        bits += log2_binom(size, sel.len() as u64);
        for cl in conj.clauses() {
            let mut slots = sel.len() as u64;
            for item in cl.items() {
                let count = sel.iter().filter(|&&t| db.transaction(t).contains(item)).count() as u64;
                bits += log2_binom(slots, count);
                slots -= count;
            }
        }
    }
    bits
}

/// `L(M) + L(D | M)` for the pattern set `patterns`, recomputed from scratch.
///
/// Limited to `|D| ≤ 200`, `|𝓘| ≤ 50` and at most 5 patterns.
pub fn oracle_total_cost_of(patterns: &[Conjunction], db: &LabeledDatabase) -> OracleResult<f64> {
    if db.n_total() > 200 || db.n_items() > 50 || patterns.len() > 5 {
        return Err(OracleError::TooLarge(format!(
            "|D| = {}, |I| = {}, |P| = {}",
            db.n_total(),
            db.n_items(),
            patterns.len()
        )));
    }
    let n = db.n_total() as u64;
    let m = db.n_items() as u64;
    let mut bits = lstar(patterns.len() as u64 + 1) + m as f64 * nml_exact(n);
    for p in patterns {
        bits += pattern_cost(db, p, m);
    }
    for k in 0..db.n_items() {
        let item = ItemId(k as u32);
        let residual = (0..db.n_total())
            .filter(|&t| db.transaction(t).contains(&item))
            .filter(|&t| !patterns.iter().any(|p| p.contains_item(item) && holds(db, p, t)))
            .count() as u64;
        bits += log2_binom(n, residual);
    }
    Ok(bits)
}

/// [`oracle_total_cost_of`] for the patterns of `model`.
pub fn oracle_total_cost(model: &Model, db: &LabeledDatabase) -> OracleResult<f64> {
    let patterns: Vec<Conjunction> = model.patterns().map(|p| p.conjunction().clone()).collect();
    oracle_total_cost_of(&patterns, db)
}

/// The single conjunctive pattern of at most three items whose one-pattern
/// model has the smallest total cost, with that cost, if it beats the empty
/// model. Ties go to the earliest pattern in (length, item order).
pub fn oracle_best_single_pattern(db: &LabeledDatabase) -> OracleResult<Option<(Conjunction, f64)>> {
    let m = db.n_items();
    if m > 12 {
        return Err(OracleError::TooLarge(format!("|I| = {m} > 12")));
    }
    let baseline = oracle_total_cost_of(&[], db)?;
    let mut best: Option<(Conjunction, f64)> = None;
    let mut consider = |items: Vec<u32>| -> OracleResult<()> {
        let conj = Conjunction::of_items(items.into_iter().map(ItemId)).expect("distinct items");
        let cost = oracle_total_cost_of(std::slice::from_ref(&conj), db)?;
        if cost < baseline && best.as_ref().is_none_or(|(_, b)| cost < *b) {
            best = Some((conj, cost));
        }
        Ok(())
    };
    let m = m as u32;
    for a in 0..m {
        consider(vec![a])?;
    }
    for a in 0..m {
        for b in a + 1..m {
            consider(vec![a, b])?;
        }
    }
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                consider(vec![a, b, c])?;
            }
        }
    }
    Ok(best)
}
