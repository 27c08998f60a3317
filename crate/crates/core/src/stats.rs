//! One-sided Fisher exact test for pattern/label association, and label-side
//! assignment.
//!
//! Under the null hypothesis the pattern's occurrences are spread over the two
//! partitions at random, so the number of occurrences falling into `D⁺`
//! follows a hypergeometric distribution with population `|D|`, `|D⁺|`
//! successes and `|σ_P(D)|` draws. A pattern associated with `l⁺` is tested
//! on the upper tail of that count; a pattern associated with `l⁻` on the
//! upper tail of its `D⁻` count.

use crate::codelen::ln_binom;
use crate::data::{Label, LabeledDatabase, Pattern};
use crate::error::{Error, Result};

/// The 2×2 table of a pattern against the labels.
///
/// `c = |σ_P(D)|`, `a = |D| − c`, `d = |σ_P(D⁺)|`, `b = |D⁺| − d`, `n = |D|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContingencyCells {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
    pub n: u64,
}

impl ContingencyCells {
    pub fn new(n: u64, n_pos: u64, support: u64, support_pos: u64) -> Result<Self> {
        if n_pos > n || support > n || support_pos > support || support_pos > n_pos {
            return Err(Error::Domain(format!(
                "inconsistent table: n={n} n_pos={n_pos} support={support} support_pos={support_pos}"
            )));
        }
        if support - support_pos > n - n_pos {
            return Err(Error::Domain("more negative occurrences than negative transactions".into()));
        }
        Ok(ContingencyCells {
            a: n - support,
            b: n_pos - support_pos,
            c: support,
            d: support_pos,
            n,
        })
    }

    pub fn for_pattern(p: &Pattern, db: &LabeledDatabase) -> Self {
        ContingencyCells {
            a: (db.n_total() - p.support()) as u64,
            b: (db.n_pos() - p.support_pos) as u64,
            c: p.support() as u64,
            d: p.support_pos as u64,
            n: db.n_total() as u64,
        }
    }

    pub fn n_pos(&self) -> u64 {
        self.b + self.d
    }
}

/// `P(X ≥ at_least)` for `X ~ Hypergeom(population, successes, draws)`.
pub fn hypergeom_upper_tail(population: u64, successes: u64, draws: u64, at_least: u64) -> f64 {
    debug_assert!(successes <= population && draws <= population);
    let lo = at_least.max((draws + successes).saturating_sub(population));
    let hi = draws.min(successes);
    if lo > hi {
        return 0.0;
    }
    if lo == (draws + successes).saturating_sub(population) {
        // the whole support of X
        return 1.0;
    }
    let ln_total = ln_binom(population, draws);
    let ln_term = |j: u64| ln_binom(successes, j) + ln_binom(population - successes, draws - j) - ln_total;
    let terms: Vec<f64> = (lo..=hi).map(ln_term).collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()).exp().min(1.0)
}

/// One-sided p-value of the table for a pattern associated with `side`.
/// `None` (no association) gives 1.
pub fn fisher_p_value(cells: ContingencyCells, side: Option<Label>) -> f64 {
    if cells.c == 0 {
        return 1.0;
    }
    let n_pos = cells.n_pos();
    match side {
        None => 1.0,
        Some(Label::Pos) => hypergeom_upper_tail(cells.n, n_pos, cells.c, cells.d),
        Some(Label::Neg) => hypergeom_upper_tail(cells.n, cells.n - n_pos, cells.c, cells.c - cells.d),
    }
}

/// One-sided Fisher exact test of `p` against its own label side.
pub fn fisher_one_sided(p: &Pattern, db: &LabeledDatabase) -> f64 {
    fisher_p_value(ContingencyCells::for_pattern(p, db), p.label_side)
}

/// The label whose partition has the strictly higher relative support, or
/// `None` on an exact tie.
pub fn assign_label_side(p: &Pattern, db: &LabeledDatabase) -> Option<Label> {
    label_side_for(p.support_neg, p.support_pos, db)
}

pub(crate) fn label_side_for(support_neg: usize, support_pos: usize, db: &LabeledDatabase) -> Option<Label> {
    // support_pos / |D⁺| against support_neg / |D⁻|, cross-multiplied
    let pos = support_pos as u128 * db.n_neg() as u128;
    let neg = support_neg as u128 * db.n_pos() as u128;
    match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => Some(Label::Pos),
        std::cmp::Ordering::Less => Some(Label::Neg),
        std::cmp::Ordering::Equal => None,
    }
}
