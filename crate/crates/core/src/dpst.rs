//! Dependency-based phrase-structure trees and F1-objective aggregation.
//!
//! A projective single-root parse corresponds one-to-one to a tree of
//! dependency phrases: every word owns the node spanning its yield, and the
//! node's children are its dependents' nodes. Each node therefore has exactly
//! one word of its span that is not covered by a child (the one-leaf
//! constraint), which makes every tree over n words have exactly n phrases.
//! Maximizing summed phrasal F1 against a set of such trees then reduces to
//! maximizing the total hit count of the chosen phrases.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::warn;

use crate::conllu::ensure_aligned;
use crate::error::{invalid, Result};
use crate::tree::{HeadVector, ParseSet, Violation};
use crate::Score;

/// Half-open word interval `begin..end` over 1-based positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub begin: usize,
    pub end: usize,
}

impl Span {
    pub fn new(begin: usize, end: usize) -> Self {
        Span { begin, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.begin
    }

    pub fn contains(&self, word: usize) -> bool {
        self.begin <= word && word < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.begin, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DpstNode {
    pub span: Span,
    pub head: usize,
    /// Head words of the child nodes, left to right.
    pub children: Vec<usize>,
}

/// Dependency phrase tree. Node `w` (stored at `w - 1`) is the phrase headed
/// by word `w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dpst {
    root: usize,
    nodes: Vec<DpstNode>,
}

impl Dpst {
    /// Checks the structural invariants: one node per word, the root spans
    /// the sentence, and each node's children tile its span except for the
    /// head word.
    pub fn from_nodes(root: usize, mut nodes: Vec<DpstNode>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(invalid("a phrase tree needs at least one node"));
        }
        nodes.sort_by_key(|node| node.head);
        for (i, node) in nodes.iter().enumerate() {
            if node.head != i + 1 {
                return Err(invalid(format!("expected one node per word, missing word {}", i + 1)));
            }
        }
        if root == 0 || root > n || nodes[root - 1].span != Span::new(1, n + 1) {
            return Err(invalid(format!("root node must head word in 1..={n} and span 1:{}", n + 1)));
        }
        let mut parent_seen = vec![false; n + 1];
        for node in &nodes {
            let Span { begin, end } = node.span;
            if !(1 <= begin && begin < end && end <= n + 1 && node.span.contains(node.head)) {
                return Err(invalid(format!("node {} has invalid span {}", node.head, node.span)));
            }
            let mut cursor = begin;
            for &c in &node.children {
                if c == 0 || c > n || c == node.head {
                    return Err(invalid(format!("node {} has invalid child {c}", node.head)));
                }
                if std::mem::replace(&mut parent_seen[c], true) {
                    return Err(invalid(format!("node {c} has more than one parent")));
                }
                let cs = nodes[c - 1].span;
                if cursor == node.head {
                    cursor += 1;
                }
                if cs.begin != cursor {
                    return Err(invalid(format!(
                        "children of node {} do not tile its span around the head",
                        node.head
                    )));
                }
                cursor = cs.end;
            }
            if cursor == node.head {
                cursor += 1;
            }
            if cursor != end {
                return Err(invalid(format!(
                    "children of node {} do not tile its span around the head",
                    node.head
                )));
            }
        }
        if parent_seen[root] {
            return Err(invalid("root node cannot be a child"));
        }
        if let Some(w) = (1..=n).find(|&w| w != root && !parent_seen[w]) {
            return Err(invalid(format!("node {w} is not attached to the tree")));
        }
        Ok(Dpst { root, nodes })
    }

    /// Number of words (and of nodes).
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Head word of the top node.
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, head: usize) -> &DpstNode {
        &self.nodes[head - 1]
    }

    pub fn nodes(&self) -> &[DpstNode] {
        &self.nodes
    }

    /// Total hit count of this tree's phrases.
    pub fn score<W: Score>(&self, hits: &HitCountTable<W>) -> W {
        self.nodes
            .iter()
            .fold(W::zero(), |acc, node| acc + hits.get(node.span))
    }
}

/// Phrase tree of a projective single-root parse.
pub fn heads_to_dpst(parse: &HeadVector) -> Result<Dpst> {
    parse.check_tree()?;
    let roots = parse.root_dependents();
    if roots.len() != 1 {
        return Err(Violation::MultiRoot { roots }.into());
    }
    let n = parse.len();
    let mut children = vec![Vec::new(); n + 1];
    for (i, &h) in parse.heads().iter().enumerate() {
        children[h].push(i + 1);
    }
    let mut nodes = Vec::with_capacity(n);
    for (i, (lo, end, size)) in parse.yield_extents().into_iter().enumerate() {
        if end - lo != size {
            return Err(Violation::NonProjective { word: i + 1 }.into());
        }
        nodes.push(DpstNode {
            span: Span::new(lo, end),
            head: i + 1,
            children: std::mem::take(&mut children[i + 1]),
        });
    }
    Ok(Dpst {
        root: roots[0],
        nodes,
    })
}

/// Inverse of [`heads_to_dpst`].
pub fn dpst_to_heads(tree: &Dpst) -> HeadVector {
    let mut heads = vec![0; tree.n()];
    for node in tree.nodes() {
        for &c in &node.children {
            heads[c - 1] = node.head;
        }
    }
    HeadVector::new(heads)
}

/// The tree's phrases; exactly `n` of them.
pub fn extract_phrases(tree: &Dpst) -> BTreeSet<Span> {
    tree.nodes().iter().map(|node| node.span).collect()
}

fn overlap(a: &Dpst, b: &Dpst) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Violation::Length {
            expected: b.n(),
            found: a.n(),
        }
        .into());
    }
    let pa = extract_phrases(a);
    Ok(extract_phrases(b).intersection(&pa).count())
}

/// `2|C(a) ∩ C(b)| / (|C(a)| + |C(b)|)`.
pub fn sentence_f1(a: &Dpst, b: &Dpst) -> Result<f64> {
    let common = overlap(a, b)?;
    Ok(2.0 * common as f64 / (a.n() + b.n()) as f64)
}

/// Micro-averaged phrasal F1. Sentences where either side is not a
/// projective single-root parse are skipped with a warning.
pub fn corpus_f1<P, G>(pred: &P, gold: &G) -> Result<f64>
where
    P: ParseSet + ?Sized,
    G: ParseSet + ?Sized,
{
    ensure_aligned(gold, pred)?;
    let (mut common, mut total) = (0usize, 0usize);
    for (i, (p, g)) in pred.parse_list().into_iter().zip(gold.parse_list()).enumerate() {
        match (heads_to_dpst(p), heads_to_dpst(g)) {
            (Ok(a), Ok(b)) => {
                common += overlap(&a, &b)?;
                total += a.n() + b.n();
            }
            (Err(e), _) | (_, Err(e)) => {
                warn!("sentence {}: skipped in phrasal F1: {e}", i + 1);
            }
        }
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * common as f64 / total as f64)
}

/// Weighted number of individuals containing each phrase. Spans never seen
/// are implicitly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct HitCountTable<W> {
    n: usize,
    counts: BTreeMap<Span, W>,
}

impl<W: Score> HitCountTable<W> {
    pub fn new(n: usize) -> Self {
        HitCountTable {
            n,
            counts: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, span: Span) -> W {
        self.counts.get(&span).copied().unwrap_or_else(W::zero)
    }

    pub fn add(&mut self, span: Span, w: W) {
        let e = self.counts.entry(span).or_insert_with(W::zero);
        *e = *e + w;
    }

    /// Non-zero entries in span order.
    pub fn iter(&self) -> impl Iterator<Item = (Span, W)> + '_ {
        self.counts.iter().map(|(s, w)| (*s, *w))
    }
}

/// `h(c) = Σ_k weight_k · [c ∈ C(T_k)]`. Parses that cannot be turned into a
/// phrase tree are skipped with a warning.
pub fn build_hit_counts<W, P>(parses: &[P], weights: &[W]) -> Result<HitCountTable<W>>
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
    if parses.is_empty() {
        return Err(invalid("no parses to count"));
    }
    let n = parses[0].borrow().len();
    let mut table = HitCountTable::new(n);
    let mut used = 0;
    for (k, (p, &w)) in parses.iter().zip(weights).enumerate() {
        let p = p.borrow();
        if p.len() != n {
            return Err(Violation::Length {
                expected: n,
                found: p.len(),
            }
            .into());
        }
        if w < W::zero() {
            return Err(invalid("weights must be non-negative"));
        }
        match heads_to_dpst(p) {
            Ok(tree) => {
                for span in extract_phrases(&tree) {
                    table.add(span, w);
                }
                used += 1;
            }
            Err(e) => warn!("individual {} skipped from phrase counts: {e}", k + 1),
        }
    }
    if used == 0 {
        return Err(invalid("every individual was skipped: none is a projective single-root parse"));
    }
    Ok(table)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Choice {
    Incl,
    Excl,
}

/// Phrase tree over `n` words maximizing the total hit count, with that
/// score.
///
/// Over each span `b:e` the DP keeps the best structure in which `b:e` is a
/// phrase headed by some word `j` (left part `b:j`, right part `j+1:e`), and
/// the best in which `b:e` is only a placeholder joining two adjacent
/// sub-structures. The full span is always a phrase, so the result has a
/// single root. Ties go to the smallest `j`, then to the phrase reading.
pub fn f1_aggregate<W: Score>(hits: &HitCountTable<W>, n: usize) -> Result<(Dpst, W)> {
    if n == 0 {
        return Err(invalid("cannot decode an empty sentence"));
    }
    if hits.n() != n {
        return Err(Violation::Length {
            expected: n,
            found: hits.n(),
        }
        .into());
    }
    let mut chart = SpanChart::new(n);
    for (span, w) in hits.iter() {
        let at = chart.at(span.begin, span.end);
        chart.hits[at] = w;
    }
    for width in 1..=n {
        for b in 1..=n + 1 - width {
            chart.fill(b, b + width);
        }
    }
    let mut nodes: Vec<Option<DpstNode>> = vec![None; n];
    let root = chart.phrase(1, n + 1, &mut nodes);
    let nodes = nodes
        .into_iter()
        .map(|node| node.expect("every word heads a phrase"))
        .collect();
    let score = chart.incl[chart.at(1, n + 1)];
    Ok((Dpst { root, nodes }, score))
}

/// DP tables over spans `b:e`, `1 <= b <= e <= n + 1`.
struct SpanChart<W> {
    size: usize,
    hits: Vec<W>,
    best: Vec<W>,
    incl: Vec<W>,
    incl_split: Vec<usize>,
    excl_split: Vec<usize>,
    choice: Vec<Choice>,
}

impl<W: Score> SpanChart<W> {
    fn new(n: usize) -> Self {
        let size = n + 2;
        let cells = size * size;
        SpanChart {
            size,
            hits: vec![W::zero(); cells],
            best: vec![W::zero(); cells],
            incl: vec![W::zero(); cells],
            incl_split: vec![0; cells],
            excl_split: vec![0; cells],
            choice: vec![Choice::Incl; cells],
        }
    }

    fn at(&self, b: usize, e: usize) -> usize {
        b * self.size + e
    }

    fn fill(&mut self, b: usize, e: usize) {
        let here = self.at(b, e);
        let mut inc: Option<(usize, W)> = None;
        for j in b..e {
            let v = self.best[self.at(b, j)] + self.hits[here] + self.best[self.at(j + 1, e)];
            if inc.is_none_or(|(_, x)| v > x) {
                inc = Some((j, v));
            }
        }
        let (ij, iv) = inc.expect("non-empty span");
        self.incl[here] = iv;
        self.incl_split[here] = ij;

        let mut exc: Option<(usize, W)> = None;
        for j in b + 1..e {
            let v = self.best[self.at(b, j)] + self.best[self.at(j, e)];
            if exc.is_none_or(|(_, x)| v > x) {
                exc = Some((j, v));
            }
        }
        match exc {
            Some((ej, ev)) if ev > iv => {
                self.best[here] = ev;
                self.excl_split[here] = ej;
                self.choice[here] = Choice::Excl;
            }
            _ => {
                self.best[here] = iv;
                self.choice[here] = Choice::Incl;
            }
        }
    }

    /// Builds the phrase over `b:e` and returns its head word.
    fn phrase(&self, b: usize, e: usize, nodes: &mut [Option<DpstNode>]) -> usize {
        let j = self.incl_split[self.at(b, e)];
        let mut children = self.forest(b, j, nodes);
        children.extend(self.forest(j + 1, e, nodes));
        nodes[j - 1] = Some(DpstNode {
            span: Span::new(b, e),
            head: j,
            children,
        });
        j
    }

    /// Head words of the phrases tiling `b:e`, left to right.
    fn forest(&self, b: usize, e: usize, nodes: &mut [Option<DpstNode>]) -> Vec<usize> {
        if b == e {
            return Vec::new();
        }
        match self.choice[self.at(b, e)] {
            Choice::Incl => vec![self.phrase(b, e, nodes)],
            Choice::Excl => {
                let j = self.excl_split[self.at(b, e)];
                let mut out = self.forest(b, j, nodes);
                out.extend(self.forest(j, e, nodes));
                out
            }
        }
    }
}
