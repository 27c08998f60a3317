//! Word vectors, cosine similarity and nearest-neighbor tables.
//!
//! Vectors are read from the common whitespace text format: an optional
//! `count dim` header line, then one `token v₁ … v_d` line per token. Only
//! tokens of the database vocabulary are kept.

use std::io::BufRead;

use log::warn;

use crate::data::{ItemId, Vocabulary};
use crate::error::{Error, Result};

/// Vectors for the covered part of a vocabulary, indexed by [`ItemId`].
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: Vec<Option<Vec<f64>>>,
}

impl EmbeddingTable {
    /// An empty table over `n_items` items.
    pub fn new(dim: usize, n_items: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: vec![None; n_items],
        }
    }

    /// Sets the vector of `item`; a second assignment is ignored.
    pub fn insert(&mut self, item: ItemId, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Domain(format!(
                "vector of dimension {} in a table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("vector has a non-finite component".into()));
        }
        let slot = self.vectors.get_mut(item.index()).ok_or(Error::UnknownItem(item.0))?;
        if slot.is_some() {
            return Ok(false);
        }
        *slot = Some(vector);
        Ok(true)
    }

    /// Builds a table over `vocab` from `(token, vector)` pairs; tokens
    /// outside the vocabulary are skipped and the first vector of a repeated
    /// token wins.
    pub fn from_token_vectors<'a, I>(vocab: &Vocabulary, dim: usize, vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a [f64])>,
    {
        let mut t = EmbeddingTable::new(dim, vocab.len());
        for (tok, v) in vectors {
            if let Some(id) = vocab.id(tok) {
                t.insert(id, v.to_vec())?;
            }
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_items(&self) -> usize {
        self.vectors.len()
    }

    pub fn get(&self, item: ItemId) -> Option<&[f64]> {
        self.vectors.get(item.index())?.as_deref()
    }

    /// Items that have a vector, in canonical order.
    pub fn covered(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.vectors
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_some())
            .map(|(k, _)| ItemId(k as u32))
    }

    pub fn uncovered(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.vectors
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(k, _)| ItemId(k as u32))
    }

    pub fn n_covered(&self) -> usize {
        self.vectors.iter().filter(|v| v.is_some()).count()
    }

    /// Writes the table in the text format, tokens in canonical order.
    pub fn write_text<W: std::io::Write>(&self, vocab: &Vocabulary, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.n_covered(), self.dim)?;
        for item in self.covered() {
            let token = vocab.token(item).ok_or(Error::UnknownItem(item.0))?;
            write!(out, "{token}")?;
            for v in self.get(item).expect("covered") {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Reads vectors for the tokens of `vocab`.
///
/// A repeated token keeps its first vector. Lines whose dimension disagrees
/// with the header (or with the first vector line) are format errors.
pub fn load_vectors<R: BufRead>(reader: R, vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let mut dim: Option<usize> = None;
    let mut table: Option<EmbeddingTable> = None;
    let mut first = true;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if first {
            first = false;
            if let [count, d] = fields.as_slice() {
                if let (Ok(_), Ok(d)) = (count.parse::<u64>(), d.parse::<usize>()) {
                    dim = Some(d);
                    continue;
                }
            }
        }
        let (token, values) = (fields[0], &fields[1..]);
        let d = *dim.get_or_insert(values.len());
        if values.len() != d {
            return Err(Error::format(lineno, format!("expected {d} components, found {}", values.len())));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(d, vocab.len()));
        let Some(item) = vocab.id(token) else {
            continue;
        };
        let mut v = Vec::with_capacity(d);
        for s in values {
            let x: f64 = s
                .parse()
                .map_err(|_| Error::format(lineno, format!("`{s}` is not a number")))?;
            if !x.is_finite() {
                return Err(Error::format(lineno, format!("non-finite component `{s}`")));
            }
            v.push(x);
        }
        if !table.insert(item, v)? {
            warn!("line {lineno}: repeated token `{token}`, keeping the first vector");
        }
    }
    let table = table.unwrap_or_else(|| EmbeddingTable::new(dim.unwrap_or(0), vocab.len()));
    if table.n_covered() == 0 {
        warn!("no vocabulary token has a vector");
    }
    Ok(table)
}

/// `u·v / (‖u‖ ‖v‖)`
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Domain("cosine of vectors of different dimension".into()));
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine similarity is undefined for a zero vector".into()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Up to `K` nearest neighbors per item and the per-rank similarity floors.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborTable {
    k: usize,
    lists: Vec<Vec<(ItemId, f64)>>,
    thresholds: Vec<f64>,
}

impl NeighborTable {
    /// Maximum neighborhood size `K`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Neighbors of `item` by descending similarity; empty when uncovered.
    pub fn neighbors(&self, item: ItemId) -> &[(ItemId, f64)] {
        self.lists.get(item.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `nb(item, rank)` with its similarity; ranks start at 1.
    pub fn neighbor(&self, item: ItemId, rank: usize) -> Option<(ItemId, f64)> {
        rank.checked_sub(1).and_then(|r| self.neighbors(item).get(r).copied())
    }

    /// `b_k`, the third quartile of the rank-`k` similarities.
    pub fn threshold(&self, rank: usize) -> Option<f64> {
        rank.checked_sub(1).and_then(|r| self.thresholds.get(r).copied())
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Restricts every list to its first `k` entries, keeping the thresholds
    /// of those ranks.
    pub fn truncated(&self, k: usize) -> NeighborTable {
        NeighborTable {
            k: k.min(self.k),
            lists: self.lists.iter().map(|l| l[..l.len().min(k)].to_vec()).collect(),
            thresholds: self.thresholds[..self.thresholds.len().min(k)].to_vec(),
        }
    }
}

/// Nearest-rank third quartile: the value at 1-based position `⌈0.75 N⌉` of
/// the ascending sort.
pub fn third_quartile(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (3 * v.len()).div_ceil(4);
    Some(v[pos - 1])
}

/// Exact `K`-nearest-neighbor table by cosine similarity over the covered
/// items. Equal similarities are ordered by item id.
pub fn build_neighbor_table(table: &EmbeddingTable, k: usize) -> Result<NeighborTable> {
    if k == 0 {
        return Err(Error::Config("neighborhood size must be at least 1".into()));
    }
    let mut units: Vec<(ItemId, Vec<f64>)> = Vec::new();
    for item in table.covered() {
        let v = table.get(item).expect("covered");
        let norm = dot(v, v).sqrt();
        if norm == 0.0 {
            warn!("item {item} has a zero vector and is treated as uncovered");
            continue;
        }
        units.push((item, v.iter().map(|x| x / norm).collect()));
    }
    let mut lists: Vec<Vec<(ItemId, f64)>> = vec![Vec::new(); table.n_items()];
    for a in 0..units.len() {
        for b in a + 1..units.len() {
            let s = dot(&units[a].1, &units[b].1).clamp(-1.0, 1.0);
            let (ia, ib) = (units[a].0, units[b].0);
            push_bounded(&mut lists[ia.index()], (ib, s), k);
            push_bounded(&mut lists[ib.index()], (ia, s), k);
        }
    }
    let mut thresholds = Vec::with_capacity(k);
    for rank in 0..k {
        let sims: Vec<f64> = lists.iter().filter_map(|l| l.get(rank).map(|e| e.1)).collect();
        match third_quartile(&sims) {
            Some(q) => thresholds.push(q),
            None => break,
        }
    }
    Ok(NeighborTable { k, lists, thresholds })
}

fn ranks_before(a: &(ItemId, f64), b: &(ItemId, f64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
}

fn push_bounded(list: &mut Vec<(ItemId, f64)>, entry: (ItemId, f64), k: usize) {
    if list.len() == k && !ranks_before(&entry, list.last().expect("k >= 1")) {
        return;
    }
    let pos = list.iter().position(|e| ranks_before(&entry, e)).unwrap_or(list.len());
    list.insert(pos, entry);
    list.truncate(k);
}
