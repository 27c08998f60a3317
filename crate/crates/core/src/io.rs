//! File formats: labeled data, planted truth, pattern reports and run
//! manifests.
//!
//! The data file has one transaction per line: the label (`+` or `-`), a
//! single tab, then space-separated tokens. Blank lines and lines starting
//! with `#` are skipped. Writers emit every line's tokens sorted and
//! deduplicated, so reading and writing a canonical file reproduces it byte
//! for byte.
//!
//! Truth files and pattern reports are JSON Lines.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Label, LabeledDatabase};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::search::SearchTrace;
use crate::synth::{PlantedPattern, PlantedTruth, TokenRows};

pub const TOOL: &str = "labeldesc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn skip(line: &str) -> bool {
    line.trim().is_empty() || line.starts_with('#')
}

/// Reads a data file into token rows.
pub fn read_rows<R: BufRead>(reader: R) -> Result<TokenRows> {
    let mut rows = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if skip(&line) {
            continue;
        }
        let lineno = k + 1;
        let (label, tokens) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(lineno, "expected `<label>\\t<tokens>`"))?;
        let label = Label::from_symbol(label)
            .ok_or_else(|| Error::format(lineno, format!("label must be `+` or `-`, found `{label}`")))?;
        rows.push((label, tokens.split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect()));
    }
    Ok(TokenRows { rows })
}

/// Reads a data file into a database.
pub fn read_database<R: BufRead>(reader: R) -> Result<LabeledDatabase> {
    read_rows(reader)?.to_database()
}

pub fn write_rows<W: Write>(rows: &TokenRows, mut out: W) -> Result<()> {
    for (label, tokens) in &rows.rows {
        let tokens: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
        write_line(&mut out, *label, tokens)?;
    }
    Ok(())
}

pub fn write_database<W: Write>(db: &LabeledDatabase, mut out: W) -> Result<()> {
    for (label, items) in db.transactions() {
        let tokens: BTreeSet<&str> = items
            .iter()
            .map(|&i| db.vocab().token(i).ok_or(Error::UnknownItem(i.0)))
            .collect::<Result<_>>()?;
        write_line(&mut out, label, tokens)?;
    }
    Ok(())
}

fn write_line<W: Write>(out: &mut W, label: Label, tokens: BTreeSet<&str>) -> Result<()> {
    write!(out, "{}\t", label.symbol())?;
    for (k, t) in tokens.into_iter().enumerate() {
        if k > 0 {
            write!(out, " ")?;
        }
        write!(out, "{t}")?;
    }
    writeln!(out)?;
    Ok(())
}

/// Reads a truth file: one [`PlantedPattern`] object per line.
pub fn read_truth<R: BufRead>(reader: R) -> Result<PlantedTruth> {
    let mut patterns = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if skip(&line) {
            continue;
        }
        let p: PlantedPattern =
            serde_json::from_str(&line).map_err(|e| Error::format(k + 1, e.to_string()))?;
        patterns.push(p);
    }
    Ok(PlantedTruth { patterns })
}

pub fn write_truth<W: Write>(truth: &PlantedTruth, mut out: W) -> Result<()> {
    for p in &truth.patterns {
        serde_json::to_writer(&mut out, p)?;
        writeln!(out)?;
    }
    Ok(())
}

/// First line of a pattern report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool: String,
    pub version: String,
    /// Digest of the run manifest that produced the report.
    pub digest: String,
    pub n_transactions: usize,
    pub n_neg: usize,
    pub n_pos: usize,
    pub n_items: usize,
    pub rounds: usize,
    pub baseline_bits: f64,
    pub final_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportedPattern {
    pub round: usize,
    pub clauses: Vec<Vec<String>>,
    /// `"+"`, `"-"`, or absent for a pattern with equal rates.
    pub label: Option<String>,
    pub support_neg: usize,
    pub support_pos: usize,
    pub gain_bits: f64,
    pub p_value: f64,
}

impl ReportedPattern {
    pub fn item_set(&self) -> BTreeSet<String> {
        self.clauses.iter().flatten().cloned().collect()
    }
}

/// Mined patterns in acceptance order, behind a header.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternReport {
    pub header: ReportHeader,
    pub patterns: Vec<ReportedPattern>,
}

impl PatternReport {
    pub fn new(db: &LabeledDatabase, model: &Model, trace: &SearchTrace, digest: String) -> Result<Self> {
        let mut entries: Vec<_> = model.entries().iter().collect();
        entries.sort_by_key(|e| (e.round, e.id));
        let patterns = entries
            .into_iter()
            .map(|e| {
                let clauses = e
                    .pattern
                    .clauses()
                    .iter()
                    .map(|c| {
                        c.items()
                            .iter()
                            .map(|&i| db.vocab().token(i).map(str::to_owned).ok_or(Error::UnknownItem(i.0)))
                            .collect()
                    })
                    .collect::<Result<_>>()?;
                Ok(ReportedPattern {
                    round: e.round,
                    clauses,
                    label: e.pattern.label_side.map(|l| l.symbol().to_owned()),
                    support_neg: e.pattern.support_neg,
                    support_pos: e.pattern.support_pos,
                    gain_bits: e.gain_bits,
                    p_value: e.p_value,
                })
            })
            .collect::<Result<_>>()?;
        Ok(PatternReport {
            header: ReportHeader {
                tool: TOOL.into(),
                version: VERSION.into(),
                digest,
                n_transactions: db.n_total(),
                n_neg: db.n_neg(),
                n_pos: db.n_pos(),
                n_items: db.n_items(),
                rounds: trace.rounds.len(),
                baseline_bits: trace.baseline_bits,
                final_bits: trace.final_bits(),
            },
            patterns,
        })
    }

    pub fn item_sets(&self) -> Vec<BTreeSet<String>> {
        self.patterns.iter().map(ReportedPattern::item_set).collect()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, &self.header)?;
        writeln!(out)?;
        for p in &self.patterns {
            serde_json::to_writer(&mut out, p)?;
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut header = None;
        let mut patterns = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line = line?;
            if skip(&line) {
                continue;
            }
            let err = |e: serde_json::Error| Error::format(k + 1, e.to_string());
            if header.is_none() {
                header = Some(serde_json::from_str(&line).map_err(err)?);
            } else {
                patterns.push(serde_json::from_str(&line).map_err(err)?);
            }
        }
        let header = header.ok_or_else(|| Error::format(1, "missing report header"))?;
        Ok(PatternReport { header, patterns })
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// What a run did and with which inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    /// Input name → SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub wall_clock_secs: f64,
    pub rounds: Option<usize>,
    pub final_bits: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config,
            inputs: BTreeMap::new(),
            seeds: Vec::new(),
            wall_clock_secs: 0.0,
            rounds: None,
            final_bits: None,
        }
    }

    /// Digest over everything that determines the output: tool, version,
    /// command, config, input digests and seeds. Timing and results are left
    /// out so that repeated runs agree.
    pub fn digest(&self) -> String {
        let key = serde_json::json!({
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "seeds": self.seeds,
        });
        sha256_hex(key.to_string().as_bytes())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_round_trip_is_canonical() {
        let text = "# comment\n+\tb a a\n\n-\tc\n-\t\n";
        let rows = read_rows(text.as_bytes()).unwrap();
        assert_eq!(rows.rows.len(), 3);
        let mut out = Vec::new();
        write_rows(&rows, &mut out).unwrap();
        let canon = String::from_utf8(out).unwrap();
        assert_eq!(canon, "+\ta b\n-\tc\n-\t\n");
        let db = read_database(canon.as_bytes()).unwrap();
        let mut again = Vec::new();
        write_database(&db, &mut again).unwrap();
        assert_eq!(String::from_utf8(again).unwrap(), canon);
    }

    #[test]
    fn format_errors_carry_line_numbers() {
        match read_rows("+\ta\n*\tb\n".as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match read_rows("+\ta\n\n+ a\n".as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn digest_ignores_timing() {
        let mut a = RunManifest::new("mine", serde_json::json!({"alpha": 0.01}));
        let mut b = a.clone();
        a.wall_clock_secs = 1.0;
        b.wall_clock_secs = 2.0;
        b.final_bits = Some(3.0);
        assert_eq!(a.digest(), b.digest());
        b.seeds.push(1);
        assert_ne!(a.digest(), b.digest());
    }
}
