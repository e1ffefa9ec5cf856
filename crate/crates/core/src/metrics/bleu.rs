//! BLEU with up to 4-gram precision, brevity penalty and add-one smoothing of
//! zero higher-order precisions.

use crate::error::{Error, Result};
use crate::text::{ngrams, TokenSeq};

const MAX_ORDER: usize = 4;

/// Clipped match statistics for one hypothesis; sums across a corpus give
/// corpus BLEU.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn collect(output: &TokenSeq, references: &[TokenSeq]) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::MissingReference);
        }
        if output.is_empty() || references.iter().any(TokenSeq::is_empty) {
            return Err(Error::EmptyInput("bleu operand".into()));
        }
        let mut stats = BleuStats { hyp_len: output.len(), ..Default::default() };
        // Closest reference length, shorter on ties.
        stats.ref_len = references
            .iter()
            .map(TokenSeq::len)
            .min_by_key(|&l| (l.abs_diff(output.len()), l))
            .unwrap_or(0);
        for n in 1..=MAX_ORDER {
            let hyp = ngrams(output, n)?;
            let refs = references.iter().map(|r| ngrams(r, n)).collect::<Result<Vec<_>>>()?;
            for (gram, &count) in hyp.counts() {
                let max_ref = refs.iter().map(|r| r.count(gram)).max().unwrap_or(0);
                stats.matches[n - 1] += count.min(max_ref);
            }
            stats.totals[n - 1] += hyp.total();
        }
        Ok(stats)
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// Score on a 0-100 scale.
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..MAX_ORDER {
            let (m, t) = (self.matches[n] as f64, self.totals[n] as f64);
            let p = if n > 0 && self.matches[n] == 0 { (m + 1.0) / (t + 1.0) } else { m / t };
            log_sum += p.ln();
        }
        let (c, r) = (self.hyp_len as f64, self.ref_len as f64);
        let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
        100.0 * bp * (log_sum / MAX_ORDER as f64).exp()
    }
}

pub fn bleu(output: &TokenSeq, references: &[TokenSeq]) -> Result<f64> {
    Ok(BleuStats::collect(output, references)?.score())
}

pub fn self_bleu(output: &TokenSeq, source: &TokenSeq) -> Result<f64> {
    bleu(output, std::slice::from_ref(source))
}

/// BLEU over a corpus of (output, references) rows from summed statistics.
pub fn corpus_bleu<'a, I>(rows: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a TokenSeq, &'a [TokenSeq])>,
{
    let mut total = BleuStats::default();
    for (out, refs) in rows {
        total.add(&BleuStats::collect(out, refs)?);
    }
    Ok(total.score())
}
