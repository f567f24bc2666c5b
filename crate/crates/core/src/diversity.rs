//! Diversity of a set of individuals, measured over per-word head decisions.
//!
//! Society entropy looks at the heads themselves and needs no gold parse, so
//! it sees both whether individuals fail on different words and whether they
//! fail in different ways. The other measures reduce every decision to
//! correct/incorrect against gold and only see the former.
//!
//! Words of all sentences in scope are pooled into one sample set.

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Float;

use crate::conllu::ensure_aligned;
use crate::error::{invalid, Error, Result};
use crate::tree::{ParseSet, ParserOutput};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiversityMetric {
    SocietyEntropy,
    Disagreement,
    KwVariance,
    FleissKappa,
    Kuncheva,
    Pcdm,
}

impl DiversityMetric {
    pub const ALL: [DiversityMetric; 6] = [
        DiversityMetric::SocietyEntropy,
        DiversityMetric::Disagreement,
        DiversityMetric::KwVariance,
        DiversityMetric::FleissKappa,
        DiversityMetric::Kuncheva,
        DiversityMetric::Pcdm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DiversityMetric::SocietyEntropy => "society-entropy",
            DiversityMetric::Disagreement => "disagreement",
            DiversityMetric::KwVariance => "kw-variance",
            DiversityMetric::FleissKappa => "fleiss-kappa",
            DiversityMetric::Kuncheva => "kuncheva",
            DiversityMetric::Pcdm => "pcdm",
        }
    }

    pub fn requires_gold(self) -> bool {
        self != DiversityMetric::SocietyEntropy
    }
}

impl fmt::Display for DiversityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiversityMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DiversityMetric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown diversity metric {s:?}")))
    }
}

/// Which Fleiss' kappa expression to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FleissForm {
    /// `Σ c·w / (n·K·(1−K)·p̄·(1−p̄))`, negative whenever defined and non-zero.
    #[default]
    AsPrinted,
    /// `1 − Σ c·w / (n·K·(K−1)·p̄·(1−p̄))`.
    Classic,
}

impl FromStr for FleissForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(FleissForm::AsPrinted),
            "classic" => Ok(FleissForm::Classic),
            _ => Err(invalid(format!("unknown Fleiss form {s:?} (expected as-printed or classic)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiversityConfig {
    pub metric: DiversityMetric,
    /// Logarithm base for society entropy.
    pub log_base: f64,
    pub fleiss_form: FleissForm,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        DiversityConfig {
            metric: DiversityMetric::SocietyEntropy,
            log_base: std::f64::consts::E,
            fleiss_form: FleissForm::AsPrinted,
        }
    }
}

impl DiversityConfig {
    pub fn new(metric: DiversityMetric) -> Self {
        DiversityConfig {
            metric,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.log_base > 1.0) || !self.log_base.is_finite() {
            return Err(invalid(format!("log base must exceed 1, got {}", self.log_base)));
        }
        Ok(())
    }
}

/// Which words a measure is computed over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scope {
    /// Every word of every sentence, pooled.
    #[default]
    Corpus,
    /// One sentence, by 0-based position.
    Sentence(usize),
}

fn check_selection<S: Borrow<ParserOutput>>(selected: &[S]) -> Result<()> {
    let Some(first) = selected.first() else {
        return Err(invalid("empty selection"));
    };
    for s in &selected[1..] {
        ensure_aligned(first.borrow(), s.borrow())?;
    }
    Ok(())
}

fn sentence_range(count: usize, scope: Scope) -> Result<std::ops::Range<usize>> {
    match scope {
        Scope::Corpus => Ok(0..count),
        Scope::Sentence(i) if i < count => Ok(i..i + 1),
        Scope::Sentence(i) => Err(invalid(format!(
            "sentence {} out of range for a {count}-sentence corpus",
            i + 1
        ))),
    }
}

/// Heads chosen by every individual for each word in scope: `[word][k]`.
fn head_columns<S: Borrow<ParserOutput>>(selected: &[S], scope: Scope) -> Result<Vec<Vec<usize>>> {
    check_selection(selected)?;
    let first = selected[0].borrow();
    let mut out = Vec::new();
    for i in sentence_range(first.parses.len(), scope)? {
        for j in 0..first.parses[i].len() {
            out.push(selected.iter().map(|s| s.borrow().parses[i].heads()[j]).collect());
        }
    }
    Ok(out)
}

/// Correctness of each individual on each word in scope: `[k][word]`.
fn hit_matrix<S, G>(selected: &[S], gold: &G, scope: Scope) -> Result<Vec<Vec<bool>>>
where
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    check_selection(selected)?;
    let gold = gold.parse_list();
    let range = sentence_range(gold.len(), scope)?;
    selected
        .iter()
        .map(|s| {
            let s = s.borrow();
            ensure_aligned(&gold[..], s)?;
            Ok(range
                .clone()
                .flat_map(|i| {
                    s.parses[i]
                        .heads()
                        .iter()
                        .zip(gold[i].heads())
                        .map(|(p, g)| p == g)
                        .collect::<Vec<_>>()
                })
                .collect())
        })
        .collect()
}

/// Per-word count of correct individuals, plus K and n.
struct Tally {
    k: usize,
    correct: Vec<usize>,
}

impl Tally {
    fn new(hits: &[Vec<bool>]) -> Self {
        let n = hits.first().map_or(0, Vec::len);
        let correct = (0..n).map(|j| hits.iter().filter(|h| h[j]).count()).collect();
        Tally { k: hits.len(), correct }
    }

    fn n(&self) -> usize {
        self.correct.len()
    }

    fn sum_correct_times_wrong(&self) -> usize {
        self.correct.iter().map(|&c| c * (self.k - c)).sum()
    }

    fn require_words(&self, metric: &'static str) -> Result<()> {
        if self.n() == 0 {
            return Err(Error::Undefined {
                metric,
                reason: "no words in scope".into(),
            });
        }
        Ok(())
    }
}

fn real<F: Float>(x: usize) -> F {
    F::from(x).expect("count fits the float type")
}

/// Fraction of individuals choosing each head.
pub fn society_distribution<F: Float>(heads: &[usize]) -> Result<BTreeMap<usize, F>> {
    if heads.is_empty() {
        return Err(invalid("society distribution of an empty selection"));
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &h in heads {
        *counts.entry(h).or_default() += 1;
    }
    let k: F = real(heads.len());
    Ok(counts.into_iter().map(|(h, c)| (h, real::<F>(c) / k)).collect())
}

fn entropy<F: Float>(dist: &BTreeMap<usize, F>, log_base: F) -> F {
    let ln_base = log_base.ln();
    dist.values()
        .filter(|&&p| p > F::zero())
        .fold(F::zero(), |acc, &p| acc - p * p.ln() / ln_base)
}

/// Mean entropy of the per-word society distribution. Needs no gold parse.
pub fn society_entropy<F, S>(selected: &[S], scope: Scope, log_base: F) -> Result<F>
where
    F: Float,
    S: Borrow<ParserOutput>,
{
    if !(log_base > F::one()) {
        return Err(invalid("log base must exceed 1"));
    }
    let columns = head_columns(selected, scope)?;
    if columns.is_empty() {
        return Err(Error::Undefined {
            metric: "society-entropy",
            reason: "no words in scope".into(),
        });
    }
    let mut total = F::zero();
    for col in &columns {
        total = total + entropy(&society_distribution::<F>(col)?, log_base);
    }
    Ok(total / real(columns.len()))
}

/// Fraction of ordered pairs (self-pairs included) and words where exactly
/// one of the two individuals is correct.
pub fn disagreement<F, S, G>(selected: &[S], gold: &G, scope: Scope) -> Result<F>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    let hits = hit_matrix(selected, gold, scope)?;
    let k = hits.len();
    let n = hits[0].len();
    if n == 0 {
        return Err(Error::Undefined {
            metric: "disagreement",
            reason: "no words in scope".into(),
        });
    }
    let mut xor = 0usize;
    for a in &hits {
        for b in &hits {
            xor += a.iter().zip(b).filter(|(x, y)| x != y).count();
        }
    }
    Ok(real::<F>(xor) / (real::<F>(n) * real::<F>(k * k)))
}

/// `Σ_j c_j·w_j / (n·K²)` with `c_j`, `w_j` the numbers of individuals right
/// and wrong on word j.
pub fn kw_variance<F, S, G>(selected: &[S], gold: &G, scope: Scope) -> Result<F>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    let t = Tally::new(&hit_matrix(selected, gold, scope)?);
    t.require_words("kw-variance")?;
    Ok(real::<F>(t.sum_correct_times_wrong()) / (real::<F>(t.n()) * real::<F>(t.k * t.k)))
}

pub fn fleiss_kappa<F, S, G>(selected: &[S], gold: &G, scope: Scope, form: FleissForm) -> Result<F>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    let t = Tally::new(&hit_matrix(selected, gold, scope)?);
    t.require_words("fleiss-kappa")?;
    if t.k < 2 {
        return Err(Error::Undefined {
            metric: "fleiss-kappa",
            reason: "needs at least two individuals".into(),
        });
    }
    let hits: usize = t.correct.iter().sum();
    if hits == 0 || hits == t.n() * t.k {
        return Err(Error::Undefined {
            metric: "fleiss-kappa",
            reason: "mean accuracy is 0 or 1".into(),
        });
    }
    let (n, k) = (real::<F>(t.n()), real::<F>(t.k));
    let p = real::<F>(hits) / (n * k);
    let spread = p * (F::one() - p);
    let cw = real::<F>(t.sum_correct_times_wrong());
    Ok(match form {
        FleissForm::AsPrinted => cw / (n * k * (F::one() - k) * spread),
        FleissForm::Classic => F::one() - cw / (n * k * (k - F::one()) * spread),
    })
}

/// `Σ_j min(c_j, w_j) / (n·(K − ⌈K/2⌉))`.
pub fn kuncheva_diversity<F, S, G>(selected: &[S], gold: &G, scope: Scope) -> Result<F>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    let t = Tally::new(&hit_matrix(selected, gold, scope)?);
    t.require_words("kuncheva")?;
    if t.k < 2 {
        return Err(Error::Undefined {
            metric: "kuncheva",
            reason: "needs at least two individuals".into(),
        });
    }
    let smooth: usize = t.correct.iter().map(|&c| c.min(t.k - c)).sum();
    let half = t.k - t.k.div_ceil(2);
    Ok(real::<F>(smooth) / (real::<F>(t.n()) * real::<F>(half)))
}

/// Fraction of words where between 10% and 90% of the individuals
/// (inclusive) are correct.
pub fn pcdm<F, S, G>(selected: &[S], gold: &G, scope: Scope) -> Result<F>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    let t = Tally::new(&hit_matrix(selected, gold, scope)?);
    t.require_words("pcdm")?;
    let diverse = t
        .correct
        .iter()
        .filter(|&&c| 10 * c >= t.k && 10 * c <= 9 * t.k)
        .count();
    Ok(real::<F>(diverse) / real::<F>(t.n()))
}

/// The configured measure. `gold` may be omitted only for society entropy.
pub fn diversity<F, S, G>(selected: &[S], gold: Option<&G>, config: &DiversityConfig, scope: Scope) -> Result<F>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    config.validate()?;
    let need_gold = || {
        gold.ok_or_else(|| invalid(format!("{} needs a gold parse", config.metric)))
    };
    match config.metric {
        DiversityMetric::SocietyEntropy => {
            society_entropy(selected, scope, F::from(config.log_base).unwrap())
        }
        DiversityMetric::Disagreement => disagreement(selected, need_gold()?, scope),
        DiversityMetric::KwVariance => kw_variance(selected, need_gold()?, scope),
        DiversityMetric::FleissKappa => fleiss_kappa(selected, need_gold()?, scope, config.fleiss_form),
        DiversityMetric::Kuncheva => kuncheva_diversity(selected, need_gold()?, scope),
        DiversityMetric::Pcdm => pcdm(selected, need_gold()?, scope),
    }
}
