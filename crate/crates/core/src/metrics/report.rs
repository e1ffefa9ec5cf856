//! Corpus-level evaluation: SARI components plus length, readability and
//! conservativeness statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bleu::corpus_bleu;
use super::readability::fk_from_counts;
use super::sari::sari;
use crate::error::{Error, Result};
use crate::text::{compression_ratio, syllables, TokenSeq};

pub const COLUMNS: [&str; 12] = ["SARI", "add", "keep", "del", "FK", "SLen", "OLen", "CR", "%split", "s-BL", "%new", "%eq"];

/// One evaluation row.
#[derive(Clone, Debug)]
pub struct EvalRow {
    pub source: TokenSeq,
    pub output: TokenSeq,
    pub references: Vec<TokenSeq>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub rows: usize,
    pub sari: f64,
    pub add: f64,
    pub keep: f64,
    pub del: f64,
    pub fk: f64,
    pub slen: f64,
    pub olen: f64,
    pub cr: f64,
    pub pct_split: f64,
    pub self_bleu: f64,
    pub pct_new: f64,
    pub pct_eq: f64,
}

struct RowStats {
    sari: [f64; 4],
    words: usize,
    sentences: usize,
    syllables: usize,
    slen: f64,
    cr: f64,
    split: bool,
    new: f64,
    eq: bool,
}

fn row_stats(row: &EvalRow) -> Result<RowStats> {
    let s = sari(&row.source, &row.output, &row.references)?;
    let words = row.output.word_count();
    let sentences = row.output.sentence_count();
    let out_types = row.output.word_types();
    let src_types = row.source.word_types();
    let new = if out_types.is_empty() {
        0.0
    } else {
        out_types.iter().filter(|w| !src_types.contains(*w)).count() as f64 / out_types.len() as f64
    };
    Ok(RowStats {
        sari: [s.sari, s.add_f1, s.keep_f1, s.del_precision],
        words,
        sentences,
        syllables: row.output.words().map(syllables).sum(),
        slen: words as f64 / sentences as f64,
        cr: compression_ratio(&row.output, &row.source),
        split: sentences > row.source.sentence_count(),
        new,
        eq: row.output.tokens() == row.source.tokens(),
    })
}

/// Builds the report. Rows are scored in parallel and reduced in input order so
/// results do not depend on scheduling.
pub fn corpus_report(system: &str, rows: &[EvalRow]) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("evaluation corpus".into()));
    }
    let stats = rows.par_iter().map(row_stats).collect::<Result<Vec<_>>>()?;
    let n = stats.len() as f64;
    let mean = |f: &dyn Fn(&RowStats) -> f64| stats.iter().map(f).sum::<f64>() / n;
    let pct = |f: &dyn Fn(&RowStats) -> bool| 100.0 * stats.iter().filter(|s| f(s)).count() as f64 / n;
    let words: usize = stats.iter().map(|s| s.words).sum();
    let fk = if words == 0 {
        0.0
    } else {
        fk_from_counts(words, stats.iter().map(|s| s.sentences).sum(), stats.iter().map(|s| s.syllables).sum())
    };
    let self_bleu = corpus_bleu(rows.iter().map(|r| (&r.output, std::slice::from_ref(&r.source))))?;
    Ok(EvalReport {
        system: system.to_string(),
        rows: rows.len(),
        sari: mean(&|s| s.sari[0]),
        add: mean(&|s| s.sari[1]),
        keep: mean(&|s| s.sari[2]),
        del: mean(&|s| s.sari[3]),
        fk,
        slen: mean(&|s| s.slen),
        olen: mean(&|s| s.words as f64),
        cr: mean(&|s| s.cr),
        pct_split: pct(&|s| s.split),
        self_bleu,
        pct_new: 100.0 * mean(&|s| s.new),
        pct_eq: pct(&|s| s.eq),
    })
}

impl EvalReport {
    pub fn values(&self) -> [f64; 12] {
        [
            self.sari,
            self.add,
            self.keep,
            self.del,
            self.fk,
            self.slen,
            self.olen,
            self.cr,
            self.pct_split,
            self.self_bleu,
            self.pct_new,
            self.pct_eq,
        ]
    }
}

/// Aligned plain-text table, one line per system.
pub fn format_table(reports: &[EvalReport]) -> String {
    let name_width = reports.iter().map(|r| r.system.len()).chain(["system".len()]).max().unwrap_or(6);
    let mut out = format!("{:<name_width$}", "system");
    for col in COLUMNS {
        out.push_str(&format!(" {col:>7}"));
    }
    out.push('\n');
    for r in reports {
        out.push_str(&format!("{:<name_width$}", r.system));
        for v in r.values() {
            out.push_str(&format!(" {v:>7.2}"));
        }
        out.push('\n');
    }
    out
}
