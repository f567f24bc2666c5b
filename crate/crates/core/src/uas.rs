//! Unlabeled attachment score.

use std::collections::BTreeMap;

use num_traits::Float;

use crate::conllu::{ensure_aligned, CorpusFile};
use crate::error::Result;
use crate::tree::{HeadVector, ParseSet, Violation};

/// Matched heads out of total words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AttachmentCount {
    pub correct: usize,
    pub total: usize,
}

impl AttachmentCount {
    /// `correct / total`; zero for an empty count.
    pub fn ratio<F: Float>(&self) -> F {
        if self.total == 0 {
            return F::zero();
        }
        F::from(self.correct).unwrap() / F::from(self.total).unwrap()
    }

    pub fn uas(&self) -> f64 {
        self.ratio()
    }
}

impl std::ops::AddAssign for AttachmentCount {
    fn add_assign(&mut self, rhs: Self) {
        self.correct += rhs.correct;
        self.total += rhs.total;
    }
}

fn sentence_count(pred: &HeadVector, gold: &HeadVector) -> Result<AttachmentCount> {
    if pred.len() != gold.len() {
        return Err(Violation::Length {
            expected: gold.len(),
            found: pred.len(),
        }
        .into());
    }
    let correct = pred
        .heads()
        .iter()
        .zip(gold.heads())
        .filter(|(p, g)| p == g)
        .count();
    Ok(AttachmentCount {
        correct,
        total: gold.len(),
    })
}

/// Fraction of words whose predicted head equals the gold head.
pub fn sentence_uas(pred: &HeadVector, gold: &HeadVector) -> Result<f64> {
    Ok(sentence_count(pred, gold)?.uas())
}

/// Matched heads over all words of aligned parse collections.
pub fn attachment_count<P, G>(pred: &P, gold: &G) -> Result<AttachmentCount>
where
    P: ParseSet + ?Sized,
    G: ParseSet + ?Sized,
{
    ensure_aligned(gold, pred)?;
    let mut total = AttachmentCount::default();
    for (p, g) in pred.parse_list().into_iter().zip(gold.parse_list()) {
        total += sentence_count(p, g)?;
    }
    Ok(total)
}

/// Micro-averaged UAS: total matched heads over total words.
pub fn corpus_uas<P, G>(pred: &P, gold: &G) -> Result<f64>
where
    P: ParseSet + ?Sized,
    G: ParseSet + ?Sized,
{
    Ok(attachment_count(pred, gold)?.uas())
}

/// UAS grouped by the gold file's POS tag of each dependent.
pub fn uas_by_pos<P>(pred: &P, gold: &CorpusFile) -> Result<BTreeMap<String, AttachmentCount>>
where
    P: ParseSet + ?Sized,
{
    ensure_aligned(gold, pred)?;
    let mut groups: BTreeMap<String, AttachmentCount> = BTreeMap::new();
    for (p, g) in pred.parse_list().into_iter().zip(&gold.sentences) {
        for ((ph, gh), tok) in p.heads().iter().zip(g.heads.heads()).zip(&g.sentence.tokens) {
            let e = groups.entry(tok.pos.clone()).or_default();
            e.total += 1;
            if ph == gh {
                e.correct += 1;
            }
        }
    }
    Ok(groups)
}
