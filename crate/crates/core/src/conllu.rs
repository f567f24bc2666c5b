//! Reading and writing the CoNLL-U subset used as the interchange format.
//!
//! Token lines carry ten tab-separated columns. Only ID, FORM, UPOS/XPOS and
//! HEAD are interpreted; the remaining columns are kept verbatim so a file
//! can be written back unchanged. Lines starting with `#` are comments and a
//! blank line ends a sentence.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::debug;

use crate::error::{Error, Result};
use crate::tree::{HeadVector, ParseSet, Sentence, Token, Violation};

const COLUMNS: usize = 10;

/// Columns that are carried through but not interpreted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtraColumns {
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl ExtraColumns {
    pub fn blank() -> Self {
        let u = || "_".to_string();
        ExtraColumns {
            lemma: u(),
            upos: u(),
            xpos: u(),
            feats: u(),
            deprel: u(),
            deps: u(),
            misc: u(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusSentence {
    /// Comment lines preceding the sentence, including the leading `#`.
    pub comments: Vec<String>,
    pub sentence: Sentence,
    pub heads: HeadVector,
    /// One entry per token.
    pub columns: Vec<ExtraColumns>,
}

impl CorpusSentence {
    /// Sentence with blank extra columns and no comments.
    pub fn bare(sentence: Sentence, heads: HeadVector) -> Self {
        let columns = vec![ExtraColumns::blank(); sentence.len()];
        CorpusSentence {
            comments: Vec::new(),
            sentence,
            heads,
            columns,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusFile {
    pub source: String,
    pub sentences: Vec<CorpusSentence>,
    /// Non-fatal findings from reading: multi-root or non-projective
    /// sentences, skipped multi-word or empty-node lines, stray comments.
    pub warnings: Vec<String>,
}

impl CorpusFile {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(|s| s.heads.len()).sum()
    }

    /// Copy of this corpus with every sentence's heads replaced. Dependency
    /// labels are cleared since they no longer describe the new arcs.
    pub fn with_heads(&self, heads: Vec<HeadVector>) -> Result<CorpusFile> {
        if heads.len() != self.sentences.len() {
            return Err(Mismatch::SentenceCount {
                expected: self.sentences.len(),
                found: heads.len(),
            }
            .into());
        }
        let mut out = self.clone();
        out.warnings.clear();
        for (i, (s, h)) in out.sentences.iter_mut().zip(heads).enumerate() {
            if h.len() != s.sentence.len() {
                return Err(Mismatch::TokenCount {
                    sentence: i + 1,
                    id: s.sentence.id.clone(),
                    expected: s.sentence.len(),
                    found: h.len(),
                }
                .into());
            }
            s.heads = h;
            for c in &mut s.columns {
                c.deprel = "_".to_string();
                c.deps = "_".to_string();
            }
        }
        Ok(out)
    }
}

/// Reads a corpus. With `strict`, multi-word token ranges and empty nodes are
/// errors; otherwise they are skipped with a warning.
pub fn read_corpus<R: BufRead>(reader: R, strict: bool) -> Result<CorpusFile> {
    let mut corpus = CorpusFile::default();
    let mut pending = Pending::default();
    let mut last_line = 0;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.starts_with('#') {
            pending.comments.push(line.to_string());
        } else if line.trim().is_empty() {
            if !pending.tokens.is_empty() {
                pending.finish(&mut corpus)?;
            }
        } else {
            pending.token_line(line, lineno, strict, &mut corpus.warnings)?;
        }
    }
    if !pending.tokens.is_empty() {
        pending.finish(&mut corpus)?;
    }
    if !pending.comments.is_empty() {
        let msg = format!(
            "line {last_line}: {} trailing comment line(s) without a sentence dropped",
            pending.comments.len()
        );
        debug!("{msg}");
        corpus.warnings.push(msg);
    }
    Ok(corpus)
}

pub fn read_corpus_file(path: impl AsRef<Path>, strict: bool) -> Result<CorpusFile> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut corpus = read_corpus(BufReader::new(file), strict)?;
    corpus.source = path.display().to_string();
    Ok(corpus)
}

#[derive(Default)]
struct Pending {
    comments: Vec<String>,
    tokens: Vec<Token>,
    heads: Vec<usize>,
    lines: Vec<usize>,
    columns: Vec<ExtraColumns>,
}

impl Pending {
    fn token_line(
        &mut self,
        line: &str,
        lineno: usize,
        strict: bool,
        warnings: &mut Vec<String>,
    ) -> Result<()> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != COLUMNS {
            return Err(parse_error(
                lineno,
                format!("expected {COLUMNS} tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            if strict {
                return Err(parse_error(
                    lineno,
                    format!("multi-word token or empty node id {id:?} is not supported"),
                ));
            }
            let msg = format!("line {lineno}: skipped multi-word token or empty node {id:?}");
            debug!("{msg}");
            warnings.push(msg);
            return Ok(());
        }
        let index: usize = id
            .parse()
            .map_err(|_| parse_error(lineno, format!("token id {id:?} is not an integer")))?;
        let expected = self.tokens.len() + 1;
        if index < expected {
            return Err(parse_error(lineno, format!("duplicate token id {index}")));
        }
        if index > expected {
            return Err(parse_error(
                lineno,
                format!("missing token id {expected} (found {index})"),
            ));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| parse_error(lineno, format!("head {:?} is not an integer", cols[6])))?;
        let extra = ExtraColumns {
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
            feats: cols[5].to_string(),
            deprel: cols[7].to_string(),
            deps: cols[8].to_string(),
            misc: cols[9].to_string(),
        };
        let pos = if extra.upos != "_" {
            extra.upos.clone()
        } else {
            extra.xpos.clone()
        };
        self.tokens.push(Token {
            index,
            form: cols[1].to_string(),
            pos,
        });
        self.heads.push(head);
        self.lines.push(lineno);
        self.columns.push(extra);
        Ok(())
    }

    fn finish(&mut self, corpus: &mut CorpusFile) -> Result<()> {
        let Pending {
            comments,
            tokens,
            heads,
            lines,
            columns,
        } = std::mem::take(self);
        let n = tokens.len();
        if let Some(pos) = heads.iter().position(|&h| h > n) {
            return Err(parse_error(
                lines[pos],
                format!("head {} out of range for a {n}-token sentence", heads[pos]),
            ));
        }
        let heads = HeadVector::new(heads);
        if let Err(v) = heads.check_tree() {
            let line = match &v {
                Violation::SelfLoop { word } | Violation::HeadOutOfRange { word, .. } => {
                    lines[word - 1]
                }
                Violation::Cycle { words } => lines[words[0] - 1],
                _ => lines[0],
            };
            return Err(parse_error(line, v.to_string()));
        }
        let position = corpus.sentences.len() + 1;
        let id = comments
            .iter()
            .find_map(|c| sent_id(c))
            .unwrap_or_else(|| position.to_string());
        let sentence = Sentence::new(id, tokens).map_err(|e| parse_error(lines[0], e.to_string()))?;
        for v in crate::tree::validate(&heads, &sentence) {
            let msg = format!("line {}: sentence {}: {v}", lines[0], sentence.id);
            debug!("{msg}");
            corpus.warnings.push(msg);
        }
        corpus.sentences.push(CorpusSentence {
            comments,
            sentence,
            heads,
            columns,
        });
        Ok(())
    }
}

fn sent_id(comment: &str) -> Option<String> {
    let rest = comment.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix("sent_id")?.trim_start();
    let rest = rest.strip_prefix('=')?;
    Some(rest.trim().to_string())
}

fn parse_error(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

fn field(s: &str) -> &str {
    if s.is_empty() {
        "_"
    } else {
        s
    }
}

/// Writes a corpus in the same ten-column format, one blank line after each
/// sentence.
pub fn write_corpus<W: Write>(corpus: &CorpusFile, mut out: W) -> Result<()> {
    for s in &corpus.sentences {
        for c in &s.comments {
            writeln!(out, "{c}")?;
        }
        for ((tok, head), cols) in s.sentence.tokens.iter().zip(s.heads.heads()).zip(&s.columns) {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                tok.index,
                field(&tok.form),
                field(&cols.lemma),
                field(&cols.upos),
                field(&cols.xpos),
                field(&cols.feats),
                head,
                field(&cols.deprel),
                field(&cols.deps),
                field(&cols.misc),
            )?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_corpus_file(corpus: &CorpusFile, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_corpus(corpus, std::io::BufWriter::new(file))
}

/// First point where two or more corpora stop lining up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mismatch {
    SentenceCount {
        expected: usize,
        found: usize,
    },
    TokenCount {
        /// 1-based sentence position.
        sentence: usize,
        id: String,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::SentenceCount { expected, found } => {
                write!(f, "expected {expected} sentences, found {found}")
            }
            Mismatch::TokenCount {
                sentence,
                id,
                expected,
                found,
            } => write!(
                f,
                "sentence {sentence} (id {id}): expected {expected} tokens, found {found}"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignmentReport {
    /// Index of the offending file and what went wrong, if anything.
    pub mismatch: Option<(usize, Mismatch)>,
    /// Word forms that differ between files; alignment still holds.
    pub warnings: Vec<String>,
}

impl AlignmentReport {
    pub fn is_aligned(&self) -> bool {
        self.mismatch.is_none()
    }

    pub fn into_result(self) -> Result<()> {
        match self.mismatch {
            None => Ok(()),
            Some((_, m)) => Err(m.into()),
        }
    }
}

/// Compares every file against the first: equal sentence counts and equal
/// token counts per sentence.
pub fn check_alignment(files: &[&CorpusFile]) -> AlignmentReport {
    let mut report = AlignmentReport::default();
    let Some((first, rest)) = files.split_first() else {
        return report;
    };
    for (k, other) in rest.iter().enumerate() {
        let file_index = k + 1;
        if other.len() != first.len() {
            report.mismatch = Some((
                file_index,
                Mismatch::SentenceCount {
                    expected: first.len(),
                    found: other.len(),
                },
            ));
            return report;
        }
        for (i, (a, b)) in first.sentences.iter().zip(&other.sentences).enumerate() {
            if a.sentence.len() != b.sentence.len() {
                report.mismatch = Some((
                    file_index,
                    Mismatch::TokenCount {
                        sentence: i + 1,
                        id: a.sentence.id.clone(),
                        expected: a.sentence.len(),
                        found: b.sentence.len(),
                    },
                ));
                return report;
            }
            let differs = a
                .sentence
                .tokens
                .iter()
                .zip(&b.sentence.tokens)
                .any(|(x, y)| x.form != y.form);
            if differs {
                let msg = format!(
                    "file {file_index}: sentence {} (id {}) has different word forms",
                    i + 1,
                    a.sentence.id
                );
                debug!("{msg}");
                report.warnings.push(msg);
            }
        }
    }
    report
}

/// Checks that two parse collections have the same shape.
pub fn ensure_aligned<A, B>(a: &A, b: &B) -> Result<()>
where
    A: ParseSet + ?Sized,
    B: ParseSet + ?Sized,
{
    let (a, b) = (a.parse_list(), b.parse_list());
    if a.len() != b.len() {
        return Err(Mismatch::SentenceCount {
            expected: a.len(),
            found: b.len(),
        }
        .into());
    }
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        if x.len() != y.len() {
            return Err(Mismatch::TokenCount {
                sentence: i + 1,
                id: (i + 1).to_string(),
                expected: x.len(),
                found: y.len(),
            }
            .into());
        }
    }
    Ok(())
}
