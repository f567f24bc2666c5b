//! Minimum-Bayes-risk aggregation under the attachment-score objective.
//!
//! Summed sentence UAS against the individuals decomposes into per-word head
//! votes, so the ensemble parse is the projective single-root tree with the
//! largest total vote, found with Eisner's O(n³) span algorithm. Normalizing
//! the votes into per-word probabilities does not change the argmax, so the
//! decoder works on raw weighted counts.

use std::borrow::Borrow;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_integer::Integer;
use rayon::prelude::*;

use crate::conllu::CorpusFile;
use crate::dpst::{build_hit_counts, f1_aggregate};
use crate::error::{invalid, Error, Result};
use crate::tree::{HeadVector, ParseSet, ParserOutput, Violation};
use crate::uas::attachment_count;
use crate::{Score, Weight};

/// Weighted head votes for one sentence: `get(a, j)` is the total weight of
/// individuals attaching word `j` to `a` (0 = ROOT).
#[derive(Clone, Debug, PartialEq)]
pub struct VoteTable<W> {
    n: usize,
    // row-major (n + 1) x n, row = head, column = dependent - 1
    votes: Vec<W>,
}

impl<W: Score> VoteTable<W> {
    pub fn zeros(n: usize) -> Self {
        VoteTable {
            n,
            votes: vec![W::zero(); (n + 1) * n],
        }
    }

    /// Sentence length.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, head: usize, dependent: usize) -> W {
        self.votes[head * self.n + dependent - 1]
    }

    /// Adds `w` to the vote for `head -> dependent`.
    pub fn add(&mut self, head: usize, dependent: usize, w: W) -> Result<()> {
        if dependent == 0 || dependent > self.n || head > self.n {
            return Err(Violation::HeadOutOfRange {
                word: dependent,
                head,
            }
            .into());
        }
        if head == dependent {
            return Err(Violation::SelfLoop { word: dependent }.into());
        }
        let i = head * self.n + dependent - 1;
        self.votes[i] = self.votes[i] + w;
        Ok(())
    }

    /// Total votes collected by the arcs of `parse`.
    pub fn score(&self, parse: &HeadVector) -> W {
        parse
            .heads()
            .iter()
            .enumerate()
            .fold(W::zero(), |acc, (i, &h)| acc + self.get(h, i + 1))
    }

    /// Total weight cast for word `dependent`.
    pub fn column_total(&self, dependent: usize) -> W {
        (0..=self.n).fold(W::zero(), |acc, a| acc + self.get(a, dependent))
    }

    /// Applies `f(dependent, vote)` to every entry.
    pub fn map<V: Score>(&self, f: impl Fn(usize, W) -> V) -> VoteTable<V> {
        let n = self.n;
        VoteTable {
            n,
            votes: self
                .votes
                .iter()
                .enumerate()
                .map(|(i, &v)| f(i % n + 1, v))
                .collect(),
        }
    }
}

/// Tallies `votes[a][j] = Σ_k weight_k · [parse_k(j) = a]`.
pub fn build_vote_matrix<W, P>(parses: &[P], weights: &[W]) -> Result<VoteTable<W>>
where
    W: Score,
    P: Borrow<HeadVector>,
{
    if parses.len() != weights.len() {
        return Err(invalid(format!(
            "{} parses but {} weights",
            parses.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| w < W::zero()) {
        return Err(invalid("weights must be non-negative"));
    }
    if !weights.iter().any(|&w| w > W::zero()) {
        return Err(invalid("at least one weight must be positive"));
    }
    let n = parses[0].borrow().len();
    let mut table = VoteTable::zeros(n);
    for (p, &w) in parses.iter().zip(weights) {
        let p = p.borrow();
        if p.len() != n {
            return Err(Violation::Length {
                expected: n,
                found: p.len(),
            }
            .into());
        }
        for (i, &h) in p.heads().iter().enumerate() {
            table.add(h, i + 1, w)?;
        }
    }
    Ok(table)
}

/// Square table indexed by 1-based word positions.
struct Chart<T> {
    size: usize,
    cells: Vec<T>,
}

impl<T: Copy> Chart<T> {
    fn new(n: usize, fill: T) -> Self {
        let size = n + 2;
        Chart {
            size,
            cells: vec![fill; size * size],
        }
    }

    fn get(&self, s: usize, t: usize) -> T {
        self.cells[s * self.size + t]
    }

    fn set(&mut self, s: usize, t: usize, v: T) {
        self.cells[s * self.size + t] = v;
    }
}

/// Index of the first maximum; later candidates must be strictly better.
fn argmax_first<W: Score>(candidates: impl Iterator<Item = (usize, W)>) -> (usize, W) {
    let mut best: Option<(usize, W)> = None;
    for (i, v) in candidates {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.expect("empty candidate range")
}

/// Projective single-root tree maximizing the summed votes of its arcs,
/// together with that score.
///
/// Uses complete and incomplete span items over the words; ROOT takes
/// exactly one dependent in a final step. Ties go to the smallest split
/// point and the smallest ROOT dependent.
pub fn eisner_decode<W: Score>(votes: &VoteTable<W>) -> Result<(HeadVector, W)> {
    let n = votes.n();
    if n == 0 {
        return Err(invalid("cannot decode an empty sentence"));
    }
    let zero = W::zero();
    // complete spans headed at the left (right-facing) and right end
    let mut comp_r = Chart::new(n, zero);
    let mut comp_l = Chart::new(n, zero);
    // both incomplete items over s..t join the same two halves, so they share a split
    let mut bp_incomp = Chart::new(n, 0usize);
    let mut bp_comp_r = Chart::new(n, 0usize);
    let mut bp_comp_l = Chart::new(n, 0usize);
    let mut incomp_r = Chart::new(n, zero);
    let mut incomp_l = Chart::new(n, zero);

    for width in 1..n {
        for s in 1..=n - width {
            let t = s + width;
            let (r, base) = argmax_first((s..t).map(|r| (r, comp_r.get(s, r) + comp_l.get(r + 1, t))));
            bp_incomp.set(s, t, r);
            incomp_r.set(s, t, base + votes.get(s, t));
            incomp_l.set(s, t, base + votes.get(t, s));

            let (r, v) = argmax_first((s..t).map(|r| (r, comp_l.get(s, r) + incomp_l.get(r, t))));
            comp_l.set(s, t, v);
            bp_comp_l.set(s, t, r);

            let (r, v) = argmax_first((s + 1..=t).map(|r| (r, incomp_r.get(s, r) + comp_r.get(r, t))));
            comp_r.set(s, t, v);
            bp_comp_r.set(s, t, r);
        }
    }

    let (root, score) = argmax_first(
        (1..=n).map(|r| (r, comp_l.get(1, r) + comp_r.get(r, n) + votes.get(0, r))),
    );

    let mut heads = vec![0usize; n];
    heads[root - 1] = 0;
    // (kind, s, t): 0 = complete right, 1 = complete left, 2 = incomplete right, 3 = incomplete left
    let mut stack = vec![(1u8, 1usize, root), (0u8, root, n)];
    while let Some((kind, s, t)) = stack.pop() {
        if s == t {
            continue;
        }
        match kind {
            0 => {
                let r = bp_comp_r.get(s, t);
                stack.push((2, s, r));
                stack.push((0, r, t));
            }
            1 => {
                let r = bp_comp_l.get(s, t);
                stack.push((1, s, r));
                stack.push((3, r, t));
            }
            _ => {
                if kind == 2 {
                    heads[t - 1] = s;
                } else {
                    heads[s - 1] = t;
                }
                let r = bp_incomp.get(s, t);
                stack.push((0, s, r));
                stack.push((1, r + 1, t));
            }
        }
    }
    Ok((HeadVector::new(heads), score))
}

/// Which similarity the ensemble maximizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    /// Sentence UAS; decoded with Eisner's algorithm.
    #[default]
    Uas,
    /// Phrasal F1 over dependency phrases; decoded with the span DP.
    F1,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uas" => Ok(Objective::Uas),
            "f1" => Ok(Objective::F1),
            _ => Err(invalid(format!("unknown objective {s:?} (expected uas or f1)"))),
        }
    }
}

/// Rational weights rescaled to integers over their common denominator.
fn integer_weights(weights: &[Weight]) -> Result<Vec<i64>> {
    let lcm = weights.iter().fold(1i64, |acc, w| acc.lcm(w.denom()));
    weights
        .iter()
        .map(|w| {
            w.numer()
                .checked_mul(lcm / w.denom())
                .ok_or_else(|| invalid(format!("weight {w} overflows the integer vote scale")))
        })
        .collect()
}

/// Ensemble parses for every sentence, one decode per sentence.
///
/// `weights` overrides the outputs' own weights. Sentences are decoded in
/// parallel on the current rayon pool; the result keeps sentence order.
pub fn aggregate_parses<S>(
    outputs: &[S],
    objective: Objective,
    weights: Option<&[Weight]>,
) -> Result<Vec<HeadVector>>
where
    S: Borrow<ParserOutput> + Sync,
{
    if outputs.is_empty() {
        return Err(invalid("no individuals to aggregate"));
    }
    let first = outputs[0].borrow();
    for o in &outputs[1..] {
        crate::conllu::ensure_aligned(first, o.borrow())?;
    }
    let weights: Vec<Weight> = match weights {
        Some(w) => {
            if w.len() != outputs.len() {
                return Err(invalid(format!(
                    "{} weights given for {} individuals",
                    w.len(),
                    outputs.len()
                )));
            }
            w.to_vec()
        }
        None => outputs.iter().map(|o| o.borrow().weight).collect(),
    };
    let int_weights = integer_weights(&weights)?;
    (0..first.parses.len())
        .into_par_iter()
        .map(|i| {
            let parses: Vec<&HeadVector> = outputs.iter().map(|o| &o.borrow().parses[i]).collect();
            decode_sentence(&parses, &int_weights, objective)
                .map_err(|e| invalid(format!("sentence {}: {e}", i + 1)))
        })
        .collect()
}

fn decode_sentence(parses: &[&HeadVector], weights: &[i64], objective: Objective) -> Result<HeadVector> {
    let n = parses[0].len();
    if n == 1 {
        return Ok(HeadVector::new(vec![0]));
    }
    match objective {
        Objective::Uas => {
            let votes = build_vote_matrix(parses, weights)?;
            Ok(eisner_decode(&votes)?.0)
        }
        Objective::F1 => {
            let hits = build_hit_counts(parses, weights)?;
            Ok(crate::dpst::dpst_to_heads(&f1_aggregate(&hits, n)?.0))
        }
    }
}

/// Aggregates aligned individuals into a corpus shaped like `template`
/// (usually the first input file).
pub fn aggregate_corpus<S>(
    template: &CorpusFile,
    outputs: &[S],
    objective: Objective,
    weights: Option<&[Weight]>,
) -> Result<CorpusFile>
where
    S: Borrow<ParserOutput> + Sync,
{
    if let Some(o) = outputs.first() {
        crate::conllu::ensure_aligned(template, o.borrow())?;
    }
    let heads = aggregate_parses(outputs, objective, weights)?;
    template.with_heads(heads)
}

/// Validation UAS of each individual, rounded half-up to `digits` decimals.
pub fn weights_from_validation<S, G>(outputs: &[S], gold: &G, digits: u32) -> Result<Vec<Weight>>
where
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    let scale = 10i64
        .checked_pow(digits)
        .ok_or_else(|| invalid(format!("precision of {digits} digits is too fine")))?;
    outputs
        .iter()
        .map(|o| {
            let c = attachment_count(o.borrow(), gold)?;
            if c.total == 0 {
                return Ok(Weight::from_integer(0));
            }
            let (correct, total) = (c.correct as i64, c.total as i64);
            let scaled = (2 * correct * scale + total) / (2 * total);
            Ok(Weight::new(scaled, scale))
        })
        .collect()
}

/// Something that turns a set of individuals into ensemble parses.
pub trait EnsembleAggregator: Sync {
    fn aggregate(&self, members: &[&ParserOutput]) -> Result<Vec<HeadVector>>;
}

/// Unit-weight MBR aggregator that counts how many ensembles it decoded.
#[derive(Debug, Default)]
pub struct MbrEnsemble {
    pub objective: Objective,
    decodes: AtomicUsize,
}

impl MbrEnsemble {
    pub fn new(objective: Objective) -> Self {
        MbrEnsemble {
            objective,
            decodes: AtomicUsize::new(0),
        }
    }

    /// Number of ensembles aggregated so far.
    pub fn decode_count(&self) -> usize {
        self.decodes.load(Ordering::Relaxed)
    }
}

impl EnsembleAggregator for MbrEnsemble {
    fn aggregate(&self, members: &[&ParserOutput]) -> Result<Vec<HeadVector>> {
        self.decodes.fetch_add(1, Ordering::Relaxed);
        let unit = vec![Weight::from_integer(1); members.len()];
        aggregate_parses(members, self.objective, Some(&unit))
    }
}
