//! Exhaustive reference implementations for checking the decoders.
//!
//! Everything here enumerates projective single-root trees, whose number
//! grows exponentially, so each entry point is guarded by a maximum
//! sentence length.

use std::borrow::Borrow;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conllu::{read_corpus, write_corpus, CorpusFile, CorpusSentence};
use crate::diversity::{disagreement, kw_variance, society_entropy, Scope};
use crate::dpst::{build_hit_counts, dpst_to_heads, f1_aggregate, heads_to_dpst, Dpst, HitCountTable};
use crate::error::{Error, Result};
use crate::mbr::{build_vote_matrix, eisner_decode};
use crate::tree::{is_well_formed, HeadVector, ParserOutput, Sentence};
use crate::Score;

/// Longest sentence [`enumerate_projective_parses`] accepts.
pub const MAX_ENUMERATION_LEN: usize = 8;

/// Longest sentence [`brute_force_f1_aggregate`] accepts.
pub const MAX_F1_ORACLE_LEN: usize = 6;

/// Number of projective single-root trees for n = 1..=8.
pub const PROJECTIVE_TREE_COUNTS: [usize; 8] = [1, 2, 7, 30, 143, 728, 3876, 21318];

fn guard(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::Guard(format!("sentence length {n} outside 1..={max}")));
    }
    Ok(())
}

/// Every projective single-root parse of an `n`-word sentence, built by
/// choosing a root and recursively splitting each side into adjacent
/// subtrees.
pub fn enumerate_projective_parses(n: usize) -> Result<Vec<HeadVector>> {
    guard(n, MAX_ENUMERATION_LEN)?;
    let mut out = Vec::new();
    for root in 1..=n {
        for left in forests(1, root) {
            for right in forests(root + 1, n + 1) {
                let mut heads = vec![0usize; n];
                for (arcs, tops) in [&left, &right] {
                    for &(w, h) in arcs {
                        heads[w - 1] = h;
                    }
                    for &t in tops {
                        heads[t - 1] = root;
                    }
                }
                heads[root - 1] = 0;
                out.push(HeadVector::new(heads));
            }
        }
    }
    Ok(out)
}

/// Internal arcs and top words.
type Forest = (Vec<(usize, usize)>, Vec<usize>);

/// Sequences of adjacent subtrees tiling `b..e`.
fn forests(b: usize, e: usize) -> Vec<Forest> {
    if b == e {
        return vec![(Vec::new(), Vec::new())];
    }
    let mut out = Vec::new();
    for m in b + 1..=e {
        for (arcs, top) in subtrees(b, m) {
            for (rest_arcs, rest_tops) in forests(m, e) {
                let mut a = arcs.clone();
                a.extend(rest_arcs);
                let mut tops = vec![top];
                tops.extend(rest_tops);
                out.push((a, tops));
            }
        }
    }
    out
}

/// Single subtrees covering exactly `b..e`.
fn subtrees(b: usize, e: usize) -> Vec<(Vec<(usize, usize)>, usize)> {
    let mut out = Vec::new();
    for r in b..e {
        for (la, lt) in forests(b, r) {
            for (ra, rt) in forests(r + 1, e) {
                let mut arcs = la.clone();
                arcs.extend(ra);
                arcs.extend(lt.iter().chain(&rt).map(|&t| (t, r)));
                out.push((arcs, r));
            }
        }
    }
    out
}

/// Best projective single-root tree under the summed-vote objective, by
/// enumeration. Ties keep the first tree in enumeration order.
pub fn brute_force_uas_aggregate<W, P>(parses: &[P], weights: &[W]) -> Result<(HeadVector, W)>
where
    W: Score,
    P: Borrow<HeadVector>,
{
    let votes = build_vote_matrix(parses, weights)?;
    let mut best: Option<(HeadVector, W)> = None;
    for t in enumerate_projective_parses(votes.n())? {
        let s = votes.score(&t);
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((t, s));
        }
    }
    Ok(best.expect("at least one tree"))
}

/// Best phrase tree under the total-hit-count objective, by enumeration.
pub fn brute_force_f1_aggregate<W: Score>(hits: &HitCountTable<W>, n: usize) -> Result<(Dpst, W)> {
    guard(n, MAX_F1_ORACLE_LEN)?;
    let mut best: Option<(Dpst, W)> = None;
    for p in enumerate_projective_parses(n)? {
        let t = heads_to_dpst(&p)?;
        let s = t.score(hits);
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((t, s));
        }
    }
    Ok(best.expect("at least one tree"))
}

/// Random tree (not necessarily projective or single-rooted): words are
/// attached in random order to ROOT or an already attached word.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> HeadVector {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut placed = vec![0usize];
    let mut heads = vec![0usize; n];
    for w in order {
        heads[w - 1] = placed[rng.gen_range(0..placed.len())];
        placed.push(w);
    }
    HeadVector::new(heads)
}

/// Uniformly drawn projective single-root tree.
pub fn random_projective_parse<R: Rng>(rng: &mut R, n: usize) -> Result<HeadVector> {
    let all = enumerate_projective_parses(n)?;
    Ok(all[rng.gen_range(0..all.len())].clone())
}

/// Outcome of one self-test property.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, failures: Vec<String>, cases: usize) -> Self {
        Check {
            name: name.to_string(),
            passed: failures.is_empty(),
            detail: match failures.first() {
                None => format!("{cases} cases"),
                Some(f) => format!("{} of {cases} failed; first: {f}", failures.len()),
            },
        }
    }
}

/// Seeded randomized comparison of the decoders against the oracles, plus
/// structural round trips. `max_len` is capped by the oracle guards.
pub fn run_selftest(max_len: usize, cases: usize, seed: u64) -> Result<Vec<Check>> {
    let max_len = max_len.clamp(1, MAX_ENUMERATION_LEN);
    let f1_len = max_len.min(MAX_F1_ORACLE_LEN);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut failures = Vec::new();
    for n in 1..=max_len {
        let found = enumerate_projective_parses(n)?;
        let expected = PROJECTIVE_TREE_COUNTS[n - 1];
        if found.len() != expected || !found.iter().all(is_well_formed) {
            failures.push(format!("n={n}: {} trees, expected {expected}", found.len()));
        }
    }
    checks.push(Check::new("enumeration counts", failures, max_len));

    let mut failures = Vec::new();
    for _ in 0..cases {
        let n = rng.gen_range(1..=max_len);
        let k = rng.gen_range(1..=5);
        let parses: Vec<HeadVector> = (0..k).map(|_| random_tree(&mut rng, n)).collect();
        let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=3)).collect();
        let votes = build_vote_matrix(&parses, &weights)?;
        let (tree, score) = eisner_decode(&votes)?;
        let (_, best) = brute_force_uas_aggregate(&parses, &weights)?;
        if score != best || votes.score(&tree) != score || !is_well_formed(&tree) {
            failures.push(format!("parses {parses:?} weights {weights:?}: eisner {score}, oracle {best}"));
        }
    }
    checks.push(Check::new("eisner decoder optimal", failures, cases));

    let mut failures = Vec::new();
    for _ in 0..cases {
        let n = rng.gen_range(1..=f1_len);
        let k = rng.gen_range(1..=4);
        let parses = (0..k)
            .map(|_| random_projective_parse(&mut rng, n))
            .collect::<Result<Vec<_>>>()?;
        let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=3)).collect();
        let hits = build_hit_counts(&parses, &weights)?;
        let (tree, score) = f1_aggregate(&hits, n)?;
        let (_, best) = brute_force_f1_aggregate(&hits, n)?;
        if score != best || tree.score(&hits) != score {
            failures.push(format!("parses {parses:?} weights {weights:?}: dp {score}, oracle {best}"));
        }
    }
    checks.push(Check::new("phrase DP optimal", failures, cases));

    let mut failures = Vec::new();
    let mut count = 0;
    for n in 1..=max_len.min(7) {
        for p in enumerate_projective_parses(n)? {
            count += 1;
            let back = dpst_to_heads(&heads_to_dpst(&p)?);
            if back != p {
                failures.push(format!("{p} -> {back}"));
            }
        }
    }
    checks.push(Check::new("heads/phrase-tree round trip", failures, count));

    let mut failures = Vec::new();
    for case in 0..cases {
        let (gold, outputs) = random_population(&mut rng, max_len)?;
        let dis: f64 = disagreement(&outputs, &gold, Scope::Corpus)?;
        let kw: f64 = kw_variance(&outputs, &gold, Scope::Corpus)?;
        if (dis - 2.0 * kw).abs() > 1e-12 * dis.abs().max(1.0) {
            failures.push(format!("case {case}: disagreement {dis} vs 2*kw {}", 2.0 * kw));
        }
        let se: f64 = society_entropy(&outputs, Scope::Corpus, std::f64::consts::E)?;
        let unanimous = outputs.iter().all(|o| o.parses == outputs[0].parses);
        let bound = (outputs.len() as f64).ln();
        if se < 0.0 || se > bound + 1e-12 || (se == 0.0) != unanimous {
            failures.push(format!("case {case}: society entropy {se} (bound {bound}, unanimous {unanimous})"));
        }
    }
    checks.push(Check::new("diversity identities", failures, cases));

    let mut failures = Vec::new();
    for case in 0..cases.min(50) {
        let (gold, _) = random_population(&mut rng, max_len)?;
        let corpus = CorpusFile {
            sentences: gold
                .iter()
                .enumerate()
                .map(|(i, h)| Ok(CorpusSentence::bare(Sentence::anonymous((i + 1).to_string(), h.len())?, h.clone())))
                .collect::<Result<_>>()?,
            ..Default::default()
        };
        let mut first = Vec::new();
        write_corpus(&corpus, &mut first)?;
        let reread = read_corpus(&first[..], true)?;
        let mut second = Vec::new();
        write_corpus(&reread, &mut second)?;
        if first != second || reread.sentences != corpus.sentences {
            failures.push(format!("case {case}"));
        }
    }
    checks.push(Check::new("CoNLL-U round trip", failures, cases.min(50)));
    Ok(checks)
}

/// Random gold corpus with 2 to 6 random individuals.
fn random_population<R: Rng>(rng: &mut R, max_len: usize) -> Result<(Vec<HeadVector>, Vec<ParserOutput>)> {
    let sentences = rng.gen_range(1..=4);
    let lens: Vec<usize> = (0..sentences).map(|_| rng.gen_range(1..=max_len)).collect();
    let gold: Vec<HeadVector> = lens.iter().map(|&n| random_tree(rng, n)).collect();
    let k = rng.gen_range(2..=6);
    let outputs = (0..k)
        .map(|i| {
            let parses = lens
                .iter()
                .zip(&gold)
                .map(|(&n, g)| if rng.gen_bool(0.4) { g.clone() } else { random_tree(rng, n) })
                .collect();
            ParserOutput::new(format!("p{i}"), parses)
        })
        .collect::<Result<_>>()?;
    Ok((gold, outputs))
}
