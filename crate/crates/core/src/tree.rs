//! Sentences, head vectors and structural checks on dependency trees.

use std::fmt;

use crate::conllu::CorpusFile;
use crate::error::{invalid, Result};
use crate::Weight;

/// A word of a sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    /// Part-of-speech tag; `_` when the source carried none.
    pub pos: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence, checking that it is non-empty and that token
    /// indices run 1, 2, … n.
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Result<Self> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(invalid(format!("sentence {id} has no tokens")));
        }
        for (i, tok) in tokens.iter().enumerate() {
            if tok.index != i + 1 {
                return Err(invalid(format!(
                    "sentence {id}: token at position {} has index {}",
                    i + 1,
                    tok.index
                )));
            }
        }
        Ok(Sentence { id, tokens })
    }

    /// Sentence with placeholder forms and empty tags, mostly for tests.
    pub fn anonymous(id: impl Into<String>, n: usize) -> Result<Self> {
        let tokens = (1..=n)
            .map(|index| Token {
                index,
                form: format!("w{index}"),
                pos: "_".to_string(),
            })
            .collect();
        Sentence::new(id, tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One sentence's parse: `heads()[j - 1]` is the head of word `j`, with 0
/// standing for ROOT.
///
/// The vector itself is unchecked; use [`HeadVector::check_tree`] or
/// [`validate`] to establish the tree invariants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeadVector(Vec<usize>);

impl HeadVector {
    pub fn new(heads: Vec<usize>) -> Self {
        HeadVector(heads)
    }

    pub fn heads(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Head of the 1-based word `word`.
    pub fn head(&self, word: usize) -> usize {
        self.0[word - 1]
    }

    /// Words attached directly to ROOT, ascending.
    pub fn root_dependents(&self) -> Vec<usize> {
        self.dependents(0)
    }

    /// Direct dependents of `head` (0 for ROOT), ascending.
    pub fn dependents(&self, head: usize) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|&(_, &h)| h == head)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Checks head ranges, self-attachment and acyclicity. Multiple ROOT
    /// dependents and crossing arcs are allowed.
    pub fn check_tree(&self) -> Result<(), Violation> {
        if let Some(v) = range_violations(&self.0).into_iter().next() {
            return Err(v);
        }
        if let Some(cycle) = find_cycles(&self.0).into_iter().next() {
            return Err(Violation::Cycle { words: cycle });
        }
        Ok(())
    }

    /// Smallest and one-past-largest word of each word's yield, plus the
    /// yield size. Assumes a tree.
    pub(crate) fn yield_extents(&self) -> Vec<(usize, usize, usize)> {
        let n = self.0.len();
        // (min, max, size) indexed by word - 1
        let mut ext: Vec<(usize, usize, usize)> = (1..=n).map(|w| (w, w, 1)).collect();
        for w in postorder(&self.0) {
            let h = self.0[w - 1];
            if h == 0 {
                continue;
            }
            let (lo, hi, size) = ext[w - 1];
            let e = &mut ext[h - 1];
            e.0 = e.0.min(lo);
            e.1 = e.1.max(hi);
            e.2 += size;
        }
        ext.into_iter().map(|(lo, hi, s)| (lo, hi + 1, s)).collect()
    }
}

impl From<Vec<usize>> for HeadVector {
    fn from(v: Vec<usize>) -> Self {
        HeadVector(v)
    }
}

impl fmt::Display for HeadVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, h) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{h}")?;
        }
        write!(f, "]")
    }
}

/// A defect found in a parse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Length { expected: usize, found: usize },
    HeadOutOfRange { word: usize, head: usize },
    SelfLoop { word: usize },
    /// Words on one cycle, ascending.
    Cycle { words: Vec<usize> },
    /// ROOT dependents when there is more than one.
    MultiRoot { roots: Vec<usize> },
    /// A word whose yield is not a contiguous interval.
    NonProjective { word: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Length { expected, found } => {
                write!(f, "expected {expected} heads, found {found}")
            }
            Violation::HeadOutOfRange { word, head } => {
                write!(f, "word {word} has out-of-range head {head}")
            }
            Violation::SelfLoop { word } => write!(f, "word {word} is its own head"),
            Violation::Cycle { words } => {
                let ws: Vec<String> = words.iter().map(|w| w.to_string()).collect();
                write!(f, "cycle through words {}", ws.join(","))
            }
            Violation::MultiRoot { roots } => {
                let ws: Vec<String> = roots.iter().map(|w| w.to_string()).collect();
                write!(f, "multiple ROOT dependents {}", ws.join(","))
            }
            Violation::NonProjective { word } => {
                write!(f, "yield of word {word} is not contiguous")
            }
        }
    }
}

fn range_violations(heads: &[usize]) -> Vec<Violation> {
    let n = heads.len();
    let mut out = Vec::new();
    for (i, &h) in heads.iter().enumerate() {
        let word = i + 1;
        if h > n {
            out.push(Violation::HeadOutOfRange { word, head: h });
        } else if h == word {
            out.push(Violation::SelfLoop { word });
        }
    }
    out
}

/// Cycles of the head function, each reported once with sorted members.
/// Heads must be in range.
fn find_cycles(heads: &[usize]) -> Vec<Vec<usize>> {
    let n = heads.len();
    // 0 = unvisited, 1 = on current path, 2 = finished
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    let mut cycles = Vec::new();
    for start in 1..=n {
        let mut path = Vec::new();
        let mut w = start;
        while state[w] == 0 {
            state[w] = 1;
            path.push(w);
            let h = heads[w - 1];
            if h > n {
                break;
            }
            w = h;
        }
        if w <= n && state[w] == 1 {
            let pos = path.iter().position(|&p| p == w).unwrap();
            let mut cycle = path[pos..].to_vec();
            cycle.sort_unstable();
            cycles.push(cycle);
        }
        for p in path {
            state[p] = 2;
        }
    }
    cycles
}

/// Words ordered so that every word precedes its head. Assumes a tree.
fn postorder(heads: &[usize]) -> Vec<usize> {
    let n = heads.len();
    let mut children = vec![Vec::new(); n + 1];
    for (i, &h) in heads.iter().enumerate() {
        children[h].push(i + 1);
    }
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0usize];
    while let Some(w) = stack.pop() {
        if w != 0 {
            order.push(w);
        }
        stack.extend(children[w].iter().copied());
    }
    order.reverse();
    order
}

/// True iff every word's yield is a contiguous interval.
pub fn is_projective(sentence_len: usize, parse: &HeadVector) -> Result<bool> {
    if parse.len() != sentence_len {
        return Err(Violation::Length {
            expected: sentence_len,
            found: parse.len(),
        }
        .into());
    }
    parse.check_tree()?;
    Ok(first_non_projective(parse).is_none())
}

fn first_non_projective(parse: &HeadVector) -> Option<usize> {
    parse
        .yield_extents()
        .into_iter()
        .enumerate()
        .find(|&(_, (lo, end, size))| end - lo != size)
        .map(|(i, _)| i + 1)
}

/// True iff exactly one word attaches to ROOT.
pub fn is_single_root(parse: &HeadVector) -> Result<bool> {
    parse.check_tree()?;
    Ok(parse.heads().iter().filter(|&&h| h == 0).count() == 1)
}

/// True iff `parse` is a projective tree with exactly one ROOT dependent.
pub fn is_well_formed(parse: &HeadVector) -> bool {
    parse.check_tree().is_ok()
        && parse.heads().iter().filter(|&&h| h == 0).count() == 1
        && first_non_projective(parse).is_none()
}

/// Every invariant `parse` violates for `sentence`. An empty report means a
/// projective single-root tree.
pub fn validate(parse: &HeadVector, sentence: &Sentence) -> Vec<Violation> {
    if parse.len() != sentence.len() {
        return vec![Violation::Length {
            expected: sentence.len(),
            found: parse.len(),
        }];
    }
    let mut report = range_violations(parse.heads());
    if !report.is_empty() {
        return report;
    }
    let cycles = find_cycles(parse.heads());
    let tree = cycles.is_empty();
    report.extend(cycles.into_iter().map(|words| Violation::Cycle { words }));
    let roots = parse.root_dependents();
    if roots.len() > 1 {
        report.push(Violation::MultiRoot { roots });
    }
    if tree {
        if let Some(word) = first_non_projective(parse) {
            report.push(Violation::NonProjective { word });
        }
    }
    report
}

/// A named individual's parses of a corpus, in sentence order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParserOutput {
    pub name: String,
    pub parses: Vec<HeadVector>,
    pub weight: Weight,
}

impl ParserOutput {
    /// Output with unit weight. Every parse must be a tree.
    pub fn new(name: impl Into<String>, parses: Vec<HeadVector>) -> Result<Self> {
        Self::weighted(name, parses, Weight::from_integer(1))
    }

    pub fn weighted(name: impl Into<String>, parses: Vec<HeadVector>, weight: Weight) -> Result<Self> {
        let name = name.into();
        if weight < Weight::from_integer(0) {
            return Err(invalid(format!("{name}: negative weight {weight}")));
        }
        for (i, p) in parses.iter().enumerate() {
            p.check_tree()
                .map_err(|v| invalid(format!("{name}: sentence {}: {v}", i + 1)))?;
        }
        Ok(ParserOutput {
            name,
            parses,
            weight,
        })
    }

    pub fn from_corpus(name: impl Into<String>, corpus: &CorpusFile) -> Self {
        ParserOutput {
            name: name.into(),
            parses: corpus.sentences.iter().map(|s| s.heads.clone()).collect(),
            weight: Weight::from_integer(1),
        }
    }

    pub fn word_count(&self) -> usize {
        self.parses.iter().map(HeadVector::len).sum()
    }
}

/// Anything holding one parse per sentence of a corpus.
pub trait ParseSet {
    fn parse_list(&self) -> Vec<&HeadVector>;
}

impl ParseSet for CorpusFile {
    fn parse_list(&self) -> Vec<&HeadVector> {
        self.sentences.iter().map(|s| &s.heads).collect()
    }
}

impl ParseSet for ParserOutput {
    fn parse_list(&self) -> Vec<&HeadVector> {
        self.parses.iter().collect()
    }
}

impl ParseSet for [HeadVector] {
    fn parse_list(&self) -> Vec<&HeadVector> {
        self.iter().collect()
    }
}

impl ParseSet for [&HeadVector] {
    fn parse_list(&self) -> Vec<&HeadVector> {
        self.to_vec()
    }
}

impl ParseSet for Vec<HeadVector> {
    fn parse_list(&self) -> Vec<&HeadVector> {
        self.iter().collect()
    }
}

impl<T: ParseSet + ?Sized> ParseSet for &T {
    fn parse_list(&self) -> Vec<&HeadVector> {
        (**self).parse_list()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hv(h: &[usize]) -> HeadVector {
        HeadVector::new(h.to_vec())
    }

    #[test]
    fn projectivity_examples() {
        assert!(is_projective(3, &hv(&[2, 0, 2])).unwrap());
        assert!(is_projective(3, &hv(&[0, 1, 2])).unwrap());
        assert!(!is_projective(3, &hv(&[2, 0, 1])).unwrap());
    }

    #[test]
    fn projectivity_rejects_malformed() {
        assert!(is_projective(3, &hv(&[2, 1, 2])).is_err());
        assert!(is_projective(2, &hv(&[1, 0])).is_err());
        assert!(is_projective(3, &hv(&[2, 0])).is_err());
    }

    #[test]
    fn single_root_examples() {
        assert!(is_single_root(&hv(&[0, 1, 2])).unwrap());
        assert!(!is_single_root(&hv(&[0, 0, 2])).unwrap());
        assert!(is_single_root(&hv(&[2, 0, 2])).unwrap());
    }

    #[test]
    fn validate_examples() {
        let s = Sentence::anonymous("s", 3).unwrap();
        assert!(validate(&hv(&[2, 0, 2]), &s).is_empty());
        assert_eq!(
            validate(&hv(&[2, 1, 2]), &s),
            vec![Violation::Cycle { words: vec![1, 2] }]
        );
        assert_eq!(
            validate(&hv(&[2, 0]), &s),
            vec![Violation::Length {
                expected: 3,
                found: 2
            }]
        );
    }

    #[test]
    fn validate_reports_all_defects() {
        let s = Sentence::anonymous("s", 4).unwrap();
        let report = validate(&hv(&[0, 0, 1, 2]), &s);
        assert_eq!(
            report,
            vec![
                Violation::MultiRoot { roots: vec![1, 2] },
                Violation::NonProjective { word: 1 }
            ]
        );
        let report = validate(&hv(&[1, 0, 9]), &Sentence::anonymous("s", 3).unwrap());
        assert_eq!(
            report,
            vec![
                Violation::SelfLoop { word: 1 },
                Violation::HeadOutOfRange { word: 3, head: 9 }
            ]
        );
    }

    #[test]
    fn sentence_rejects_gaps_and_empty() {
        assert!(Sentence::new("x", vec![]).is_err());
        let toks = vec![Token {
            index: 2,
            form: "a".into(),
            pos: "_".into(),
        }];
        assert!(Sentence::new("x", toks).is_err());
    }

    #[test]
    fn parser_output_rejects_cycles_and_negative_weight() {
        assert!(ParserOutput::new("a", vec![hv(&[2, 1])]).is_err());
        assert!(ParserOutput::weighted("a", vec![hv(&[0])], Weight::new(-1, 2)).is_err());
        let p = ParserOutput::new("a", vec![hv(&[0, 0])]).unwrap();
        assert_eq!(p.word_count(), 2);
    }

    #[test]
    fn yields_of_chain() {
        let ext = hv(&[0, 1, 2]).yield_extents();
        assert_eq!(ext, vec![(1, 4, 3), (2, 4, 2), (3, 4, 1)]);
    }
}
