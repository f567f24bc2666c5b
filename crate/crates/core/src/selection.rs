//! Choosing ensemble members on a labeled validation set.
//!
//! The diversity objective scores a set by the summed validation UAS of its
//! members plus `alpha` times a diversity measure of the set, and grows the
//! set greedily starting from the single best individual. It never decodes
//! an ensemble. Ensemble validation instead decodes every candidate ensemble
//! at every step and keeps the one with the best validation UAS.

use std::borrow::Borrow;

use num_traits::Float;

use crate::conllu::ensure_aligned;
use crate::diversity::{diversity, DiversityConfig, Scope};
use crate::error::{invalid, Error, Result};
use crate::mbr::EnsembleAggregator;
use crate::tree::{HeadVector, ParseSet, ParserOutput};
use crate::uas::attachment_count;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SelectionMethod {
    /// Quality plus `alpha`-weighted diversity.
    #[default]
    DiversityObjective,
    /// Quality only; `alpha` is ignored.
    QualityOnly,
    /// Greedy on the validated UAS of the aggregated ensemble.
    EnsembleValidation,
}

impl std::str::FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diversity-objective" => Ok(SelectionMethod::DiversityObjective),
            "quality-only" => Ok(SelectionMethod::QualityOnly),
            "ensemble-validation" => Ok(SelectionMethod::EnsembleValidation),
            _ => Err(invalid(format!(
                "unknown selection method {s:?} (expected diversity-objective, quality-only or ensemble-validation)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionConfig<F> {
    pub alpha: F,
    /// Number of individuals to select.
    pub size: usize,
    pub metric: DiversityConfig,
    pub method: SelectionMethod,
}

impl<F: Float> SelectionConfig<F> {
    pub fn new(alpha: F, size: usize, metric: DiversityConfig) -> Self {
        SelectionConfig {
            alpha,
            size,
            metric,
            method: SelectionMethod::DiversityObjective,
        }
    }

    fn validate(&self, candidates: usize) -> Result<()> {
        if self.size == 0 || self.size > candidates {
            return Err(invalid(format!(
                "selection size {} must be between 1 and the number of candidates ({candidates})",
                self.size
            )));
        }
        if !(self.alpha >= F::zero()) || !self.alpha.is_finite() {
            return Err(invalid("alpha must be a non-negative number"));
        }
        self.metric.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult<F> {
    /// Names of the chosen individuals in selection order.
    pub chosen: Vec<String>,
    /// Positions of the chosen individuals in the candidate list.
    pub indices: Vec<usize>,
    /// Objective value (or ensemble UAS for ensemble validation) after each
    /// addition.
    pub step_objectives: Vec<F>,
    pub config: SelectionConfig<F>,
}

/// `Σ_κ UAS(κ) + alpha · diversity(set)` over the pooled validation words.
///
/// A single individual has no diversity, so a singleton set scores its UAS
/// alone. The diversity term is skipped when `alpha` is zero.
pub fn selection_objective<F, S, G>(selected: &[S], gold: &G, alpha: F, metric: &DiversityConfig) -> Result<F>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    if selected.is_empty() {
        return Err(invalid("empty selection"));
    }
    let mut correct = 0usize;
    let mut total = 0usize;
    for s in selected {
        let c = attachment_count(s.borrow(), gold)?;
        correct += c.correct;
        total = c.total;
    }
    quality_plus_diversity(selected, gold, correct, total, alpha, metric)
}

fn quality_plus_diversity<F, S, G>(
    selected: &[S],
    gold: &G,
    correct: usize,
    total: usize,
    alpha: F,
    metric: &DiversityConfig,
) -> Result<F>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    // summed UAS of equally sized corpora is the summed match count over one word count
    let quality = if total == 0 {
        F::zero()
    } else {
        F::from(correct).unwrap() / F::from(total).unwrap()
    };
    if alpha == F::zero() || selected.len() < 2 {
        return Ok(quality);
    }
    let div: F = diversity(selected, Some(gold), metric, Scope::Corpus)?;
    Ok(quality + alpha * div)
}

/// Index of the first strictly largest value.
fn first_argmax<F: PartialOrd + Copy>(values: impl IntoIterator<Item = (usize, F)>) -> Option<(usize, F)> {
    let mut best: Option<(usize, F)> = None;
    for (i, v) in values {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}

fn check_candidates<S, G>(candidates: &[S], gold: &G) -> Result<()>
where
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    if candidates.is_empty() {
        return Err(invalid("no candidates"));
    }
    for c in candidates {
        ensure_aligned(gold, c.borrow())?;
    }
    Ok(())
}

/// Greedy selection under the quality-plus-diversity objective.
///
/// The first member is the candidate with the best validation UAS; each later
/// member maximizes the objective of the grown set. Ties go to the earlier
/// candidate. With [`SelectionMethod::QualityOnly`] the diversity term is
/// dropped.
pub fn forward_stepwise_select<F, S, G>(candidates: &[S], gold: &G, config: &SelectionConfig<F>) -> Result<SelectionResult<F>>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    config.validate(candidates.len())?;
    check_candidates(candidates, gold)?;
    let alpha = match config.method {
        SelectionMethod::QualityOnly => F::zero(),
        SelectionMethod::DiversityObjective => config.alpha,
        SelectionMethod::EnsembleValidation => {
            return Err(invalid("ensemble validation needs an aggregator; use select()"))
        }
    };
    let counts: Vec<usize> = candidates
        .iter()
        .map(|c| attachment_count(c.borrow(), gold).map(|a| a.correct))
        .collect::<Result<_>>()?;
    let total = gold.parse_list().iter().map(|p| p.len()).sum();

    let first = first_argmax(counts.iter().copied().enumerate()).expect("non-empty").0;
    let mut chosen = vec![first];
    let mut correct = counts[first];
    let mut step_objectives = vec![quality_plus_diversity(&[candidates[first].borrow()], gold, correct, total, alpha, &config.metric)?];

    while chosen.len() < config.size {
        let mut scored = Vec::new();
        for (i, c) in candidates.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let mut set: Vec<&ParserOutput> = chosen.iter().map(|&k| candidates[k].borrow()).collect();
            set.push(c.borrow());
            let value = quality_plus_diversity(&set, gold, correct + counts[i], total, alpha, &config.metric)?;
            scored.push((i, value));
        }
        let (next, value) = first_argmax(scored).expect("remaining candidates");
        chosen.push(next);
        correct += counts[next];
        step_objectives.push(value);
    }
    Ok(SelectionResult {
        chosen: chosen.iter().map(|&i| candidates[i].borrow().name.clone()).collect(),
        indices: chosen,
        step_objectives,
        config: *config,
    })
}

fn ensemble_count<G: ParseSet + ?Sized>(
    members: &[&ParserOutput],
    gold: &G,
    aggregator: &dyn EnsembleAggregator,
) -> Result<usize> {
    let parses: Vec<HeadVector> = aggregator.aggregate(members)?;
    Ok(attachment_count(&parses, gold)?.correct)
}

/// Greedy selection on the validated UAS of the aggregated ensemble.
///
/// Every step aggregates each remaining candidate together with the members
/// chosen so far, so a full run decodes `Σ_t (K − t + 1)` ensembles.
pub fn ensemble_validation_select<S, G>(
    candidates: &[S],
    gold: &G,
    size: usize,
    aggregator: &dyn EnsembleAggregator,
) -> Result<SelectionResult<f64>>
where
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    let mut config = SelectionConfig::new(0.0, size, DiversityConfig::default());
    config.method = SelectionMethod::EnsembleValidation;
    config.validate(candidates.len())?;
    check_candidates(candidates, gold)?;
    let total: usize = gold.parse_list().iter().map(|p| p.len()).sum();
    let mut chosen: Vec<usize> = Vec::new();
    let mut step_objectives = Vec::new();
    while chosen.len() < size {
        let mut scored = Vec::new();
        for i in 0..candidates.len() {
            if chosen.contains(&i) {
                continue;
            }
            let mut set: Vec<&ParserOutput> = chosen.iter().map(|&k| candidates[k].borrow()).collect();
            set.push(candidates[i].borrow());
            scored.push((i, ensemble_count(&set, gold, aggregator)?));
        }
        let (next, correct) = first_argmax(scored).expect("remaining candidates");
        chosen.push(next);
        step_objectives.push(if total == 0 { 0.0 } else { correct as f64 / total as f64 });
    }
    Ok(SelectionResult {
        chosen: chosen.iter().map(|&i| candidates[i].borrow().name.clone()).collect(),
        indices: chosen,
        step_objectives,
        config,
    })
}

/// Runs whichever method `config` names.
pub fn select<S, G>(
    candidates: &[S],
    gold: &G,
    config: &SelectionConfig<f64>,
    aggregator: &dyn EnsembleAggregator,
) -> Result<SelectionResult<f64>>
where
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    match config.method {
        SelectionMethod::EnsembleValidation => {
            let mut r = ensemble_validation_select(candidates, gold, config.size, aggregator)?;
            r.config = *config;
            Ok(r)
        }
        _ => forward_stepwise_select(candidates, gold, config),
    }
}

/// One row of an alpha sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<F> {
    pub alpha: F,
    pub selection: SelectionResult<F>,
    /// Validation UAS of the selected members' unit-weight ensemble.
    pub ensemble_uas: f64,
}

/// `0.0, 0.1, …, 5.0`.
pub fn default_alpha_grid<F: Float>() -> Vec<F> {
    (0..=50).map(|i| F::from(i).unwrap() / F::from(10).unwrap()).collect()
}

/// Forward-stepwise selection for each distinct alpha of `grid` (first
/// occurrence order), with the validation UAS of each selected ensemble.
pub fn alpha_sweep<F, S, G>(
    candidates: &[S],
    gold: &G,
    metric: &DiversityConfig,
    size: usize,
    grid: &[F],
    aggregator: &dyn EnsembleAggregator,
) -> Result<Vec<SweepRow<F>>>
where
    F: Float,
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    if grid.is_empty() {
        return Err(invalid("empty alpha grid"));
    }
    let mut alphas: Vec<F> = Vec::new();
    for &a in grid {
        if !alphas.contains(&a) {
            alphas.push(a);
        }
    }
    let mut rows = Vec::with_capacity(alphas.len());
    for alpha in alphas {
        let config = SelectionConfig::new(alpha, size, *metric);
        let selection = forward_stepwise_select(candidates, gold, &config)?;
        let members: Vec<&ParserOutput> = selection.indices.iter().map(|&i| candidates[i].borrow()).collect();
        let parses = aggregator.aggregate(&members)?;
        let ensemble_uas = attachment_count(&parses, gold)?.uas();
        rows.push(SweepRow {
            alpha,
            selection,
            ensemble_uas,
        });
    }
    Ok(rows)
}

/// UAS of the unit-weight ensemble of the first `t` candidates, for every
/// `t` from 1 to K.
pub fn incremental_curve<S, G>(
    candidates_ordered: &[S],
    gold: &G,
    aggregator: &dyn EnsembleAggregator,
) -> Result<Vec<(usize, f64)>>
where
    S: Borrow<ParserOutput>,
    G: ParseSet + ?Sized,
{
    check_candidates(candidates_ordered, gold)?;
    let all: Vec<&ParserOutput> = candidates_ordered.iter().map(Borrow::borrow).collect();
    (1..=all.len())
        .map(|t| {
            let parses = aggregator.aggregate(&all[..t])?;
            Ok((t, attachment_count(&parses, gold)?.uas()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diversity::DiversityMetric;
    use crate::mbr::{MbrEnsemble, Objective};

    fn hv(h: &[usize]) -> HeadVector {
        HeadVector::new(h.to_vec())
    }

    /// Ten-word gold: a right chain.
    fn gold10() -> Vec<HeadVector> {
        vec![hv(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9])]
    }

    /// Chain parse with the words in `wrong` re-attached to `alt(j)`.
    fn with_errors(name: &str, wrong: &[usize], alt: impl Fn(usize) -> usize) -> ParserOutput {
        let mut h: Vec<usize> = (0..10).collect();
        for &j in wrong {
            h[j - 1] = alt(j);
        }
        ParserOutput::new(name, vec![HeadVector::new(h)]).unwrap()
    }

    #[test]
    fn objective_examples() {
        let g = gold10();
        let six = with_errors("six", &[2, 3, 4, 5], |j| j - 2);
        let cfg = DiversityConfig::default();
        let v: f64 = selection_objective(&[&six], &g, 0.0, &cfg).unwrap();
        assert!((v - 0.6).abs() < 1e-12);
        let v: f64 = selection_objective(&[&six, &six], &g, 1.0, &cfg).unwrap();
        assert!((v - 1.2).abs() < 1e-12);
        let empty: [&ParserOutput; 0] = [];
        assert!(selection_objective::<f64, _, _>(&empty, &g, 1.0, &cfg).is_err());
    }

    #[test]
    fn objective_adds_weighted_diversity() {
        let g = gold10();
        let a = with_errors("a", &[2, 3, 4, 5], |j| j - 2);
        let b = with_errors("b", &[6, 7, 8, 9, 10], |j| j - 2);
        let cfg = DiversityConfig::new(DiversityMetric::KwVariance);
        let kw: f64 = crate::diversity::kw_variance(&[&a, &b], &g, Scope::Corpus).unwrap();
        let v: f64 = selection_objective(&[&a, &b], &g, 0.5, &cfg).unwrap();
        assert!((v - (0.6 + 0.5 + 0.5 * kw)).abs() < 1e-12);
    }

    #[test]
    fn quality_only_sorts_by_uas() {
        let g = gold10();
        let c = vec![
            with_errors("u5", &[2, 3, 4, 5, 6], |j| j - 2),
            with_errors("u8", &[2, 3], |j| j - 2),
            with_errors("u6", &[2, 3, 4, 5], |j| j - 2),
            with_errors("u8b", &[7, 8], |j| j - 2),
        ];
        let mut cfg = SelectionConfig::new(0.0, 3, DiversityConfig::default());
        let r = forward_stepwise_select(&c, &g, &cfg).unwrap();
        assert_eq!(r.chosen, vec!["u8", "u8b", "u6"]);
        cfg.alpha = 3.0;
        cfg.method = SelectionMethod::QualityOnly;
        let q = forward_stepwise_select(&c, &g, &cfg).unwrap();
        assert_eq!(q.chosen, r.chosen);
        cfg.size = 1;
        cfg.method = SelectionMethod::DiversityObjective;
        assert_eq!(forward_stepwise_select(&c, &g, &cfg).unwrap().chosen, vec!["u8"]);
    }

    #[test]
    fn duplicate_loses_to_diverse_candidate() {
        let g = gold10();
        let best = with_errors("best", &[2, 3], |j| j - 2);
        let dup = ParserOutput { name: "dup".into(), ..best.clone() };
        let other = with_errors("other", &[6, 7, 8, 9], |j| j - 2);
        let c = vec![best, dup, other];
        // step 2: duplicate scores 0.8 + 0.8; other scores 0.8 + 0.6 + alpha·SE with SE = 6/10·ln 2
        let cfg = SelectionConfig::new(1.0, 2, DiversityConfig::default());
        let r = forward_stepwise_select(&c, &g, &cfg).unwrap();
        assert_eq!(r.chosen, vec!["best", "other"]);
        let se = 0.6 * 2f64.ln();
        assert!((r.step_objectives[1] - (1.4 + se)).abs() < 1e-12);
        let small = SelectionConfig::new(0.1, 2, DiversityConfig::default());
        assert_eq!(forward_stepwise_select(&c, &g, &small).unwrap().chosen, vec!["best", "dup"]);
    }

    #[test]
    fn config_errors() {
        let g = gold10();
        let c = vec![with_errors("a", &[], |j| j)];
        let cfg = SelectionConfig::new(0.0, 2, DiversityConfig::default());
        assert!(forward_stepwise_select(&c, &g, &cfg).is_err());
        let cfg = SelectionConfig::new(-1.0, 1, DiversityConfig::default());
        assert!(forward_stepwise_select(&c, &g, &cfg).is_err());
        let wrong_gold = vec![hv(&[0])];
        let cfg = SelectionConfig::new(0.0, 1, DiversityConfig::default());
        assert!(matches!(forward_stepwise_select(&c, &wrong_gold, &cfg), Err(Error::Alignment(_))));
    }

    #[test]
    fn ensemble_validation_examples() {
        let g = gold10();
        let right = with_errors("right", &[], |j| j);
        let wrong = with_errors("wrong", &[2, 3, 4, 5, 6, 7, 8, 9, 10], |j| j - 2);
        let agg = MbrEnsemble::new(Objective::Uas);
        let r = ensemble_validation_select(&[&wrong, &right], &g, 1, &agg).unwrap();
        assert_eq!(r.chosen, vec!["right"]);
        assert_eq!(agg.decode_count(), 2);
        let all = ensemble_validation_select(&[&wrong, &right], &g, 2, &agg).unwrap();
        assert_eq!(all.chosen, vec!["right", "wrong"]);
        assert_eq!(agg.decode_count(), 2 + 3);
    }

    #[test]
    fn sweep_deduplicates_and_zero_matches_quality_only() {
        let g = gold10();
        let c = vec![
            with_errors("a", &[2, 3], |j| j - 2),
            with_errors("b", &[2, 3], |j| j - 2),
            with_errors("c", &[6, 7, 8], |j| j - 2),
        ];
        let agg = MbrEnsemble::new(Objective::Uas);
        let cfg = DiversityConfig::default();
        let rows = alpha_sweep(&c, &g, &cfg, 2, &[0.0, 0.0], &agg).unwrap();
        assert_eq!(rows.len(), 1);
        let q = forward_stepwise_select(&c, &g, &SelectionConfig::new(0.0, 2, cfg)).unwrap();
        assert_eq!(rows[0].selection, q);
        assert!(alpha_sweep::<f64, _, _>(&c, &g, &cfg, 2, &[], &agg).is_err());
        let grid: Vec<f64> = default_alpha_grid();
        assert_eq!(grid.len(), 51);
        assert!((grid[50] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn curve_examples() {
        let g = gold10();
        let x = with_errors("x", &[2, 3], |j| j - 2);
        let agg = MbrEnsemble::new(Objective::Uas);
        let curve = incremental_curve(&[&x], &g, &agg).unwrap();
        assert_eq!(curve.len(), 1);
        assert!((curve[0].1 - 0.8).abs() < 1e-12);
        let flat = incremental_curve(&[&x, &x], &g, &agg).unwrap();
        assert_eq!(flat[0].1, flat[1].1);
    }
}
