//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{all_assignments, gold_corpus, hv, is_projective_tree, output, perturb};
use depsemble::conllu::{read_corpus, write_corpus};
use depsemble::diversity::{disagreement, kuncheva_diversity, kw_variance, pcdm, society_entropy, Scope};
use depsemble::dpst::{build_hit_counts, dpst_to_heads, f1_aggregate, heads_to_dpst};
use depsemble::mbr::{aggregate_parses, build_vote_matrix};
use depsemble::oracle::{
    brute_force_f1_aggregate, brute_force_uas_aggregate, enumerate_projective_parses, random_projective_parse,
    random_tree,
};
use depsemble::selection::{ensemble_validation_select, forward_stepwise_select, incremental_curve};
use depsemble::uas::attachment_count;
use depsemble::{
    eisner_decode, DiversityConfig, DiversityMetric, HeadVector, MbrEnsemble, Objective, ParserOutput, Selection,
    Weight,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const METRIC_REL_TOL: f64 = 1e-12;
const ENSEMBLE_MARGIN: f64 = 0.02;
const TIME_LIMIT: Duration = Duration::from_secs(5);

/// Criteria that cannot hold for any correct implementation. They still run
/// and print their failure, but do not fail the target. See the README.
const UNATTAINABLE: &[&str] = &["6c "];

type Check = Result<String, String>;

type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uas_decoder_optimal() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for case in 0..200 {
        let k = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=7);
        let parses: Vec<HeadVector> = (0..k).map(|_| random_tree(&mut rng, n)).collect();
        let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
        let votes = build_vote_matrix(&parses, &weights).map_err(|e| e.to_string())?;
        let (tree, score) = eisner_decode(&votes).map_err(|e| e.to_string())?;
        let (_, best) = brute_force_uas_aggregate(&parses, &weights).map_err(|e| e.to_string())?;
        ensure(score == best && votes.score(&tree) == score, || {
            format!("case {case}: decoder {score}, enumeration {best}")
        })?;
    }
    Ok(format!("200 cases equal, {:.2?}", start.elapsed()))
}

fn f1_decoder_optimal() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    for case in 0..200 {
        let k = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=6);
        let parses = (0..k)
            .map(|_| random_projective_parse(&mut rng, n))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
        let hits = build_hit_counts(&parses, &weights).map_err(|e| e.to_string())?;
        let (tree, score) = f1_aggregate(&hits, n).map_err(|e| e.to_string())?;
        let (_, best) = brute_force_f1_aggregate(&hits, n).map_err(|e| e.to_string())?;
        ensure(score == best && tree.score(&hits) == score, || {
            format!("case {case}: dp {score}, enumeration {best}")
        })?;
    }
    Ok(format!("200 cases equal, {:.2?}", start.elapsed()))
}

fn enumeration_counts() -> Check {
    const PINNED: [usize; 7] = [1, 2, 7, 30, 143, 728, 3876];
    let mut counts = Vec::new();
    for n in 1..=7 {
        let filtered = all_assignments(n).filter(|h| is_projective_tree(h)).count();
        let found = enumerate_projective_parses(n).map_err(|e| e.to_string())?.len();
        ensure(found == filtered && found == PINNED[n - 1], || {
            format!("n = {n}: enumerated {found}, filter {filtered}, pinned {}", PINNED[n - 1])
        })?;
        counts.push(found);
    }
    Ok(format!("{counts:?}"))
}

fn metric_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let k = rng.gen_range(1..=8);
        let gold: Vec<HeadVector> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let n = rng.gen_range(1..=10);
                random_tree(&mut rng, n)
            })
            .collect();
        let p = rng.gen_range(0.0..1.0);
        let outs: Vec<ParserOutput> = (0..k)
            .map(|i| output(&format!("p{i}"), gold.iter().map(|g| perturb(&mut rng, g, p)).collect()))
            .collect();
        let e = |e: depsemble::Error| e.to_string();
        let dis: f64 = disagreement(&outs, &gold, Scope::Corpus).map_err(e)?;
        let kw: f64 = kw_variance(&outs, &gold, Scope::Corpus).map_err(e)?;
        let rel = (dis - 2.0 * kw).abs() / dis.abs().max(f64::MIN_POSITIVE);
        if dis != 0.0 {
            worst = worst.max(rel);
        }
        ensure(dis == 0.0 && kw == 0.0 || rel <= METRIC_REL_TOL, || {
            format!("case {case}: disagreement {dis}, kw {kw}")
        })?;
        let se: f64 = society_entropy(&outs, Scope::Corpus, std::f64::consts::E).map_err(e)?;
        let unanimous = outs.iter().all(|o| o.parses == outs[0].parses);
        ensure(se >= 0.0 && se <= (k as f64).ln() + METRIC_REL_TOL && (se == 0.0) == unanimous, || {
            format!("case {case}: society entropy {se}, unanimous {unanimous}")
        })?;
        if k >= 2 {
            let kd: f64 = kuncheva_diversity(&outs, &gold, Scope::Corpus).map_err(e)?;
            ensure((0.0..=1.0).contains(&kd), || format!("case {case}: kuncheva {kd}"))?;
        }
    }
    let gold = vec![hv(&[0, 1])];
    let mut ten = vec![output("right", gold.clone())];
    ten.extend((1..10).map(|i| output(&format!("w{i}"), vec![hv(&[2, 0])])));
    let boundary: f64 = pcdm(&ten, &gold, Scope::Corpus).map_err(|e| e.to_string())?;
    ensure(boundary == 1.0, || format!("pcdm at proportion 0.1 is {boundary}"))?;
    Ok(format!("100 configurations, worst relative gap {worst:.1e}, pcdm boundary diverse"))
}

fn round_trips() -> Check {
    let canonical = "# sent_id = a\n# text = The dog barks .\n\
        1\tThe\tthe\tDET\tDT\tDefinite=Def\t2\tdet\t_\t_\n\
        2\tdog\tdog\tNOUN\tNN\tNumber=Sing\t3\tnsubj\t_\t_\n\
        3\tbarks\tbark\tVERB\tVBZ\t_\t0\troot\t_\tSpaceAfter=No\n\
        4\t.\t.\tPUNCT\t.\t_\t3\tpunct\t_\t_\n\n\
        # sent_id = b\n\
        1\tYes\tyes\tINTJ\tUH\t_\t0\troot\t_\t_\n\n";
    let corpus = read_corpus(canonical.as_bytes(), true).map_err(|e| e.to_string())?;
    let mut written = Vec::new();
    write_corpus(&corpus, &mut written).map_err(|e| e.to_string())?;
    ensure(written == canonical.as_bytes(), || {
        format!("rewritten file differs:\n{}", String::from_utf8_lossy(&written))
    })?;
    let mut count = 0;
    for n in 1..=7 {
        for p in enumerate_projective_parses(n).map_err(|e| e.to_string())? {
            let back = dpst_to_heads(&heads_to_dpst(&p).map_err(|e| e.to_string())?);
            ensure(back == p, || format!("{p} came back as {back}"))?;
            count += 1;
        }
    }
    Ok(format!("CoNLL-U byte-identical, {count} phrase-tree round trips"))
}

/// Random gold corpora with 2 to 6 candidates of mixed quality.
fn selection_cases() -> Vec<(Vec<HeadVector>, Vec<ParserOutput>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    (0..30)
        .map(|_| {
            let gold = gold_corpus(&mut rng, 5, 3..=12);
            let k = rng.gen_range(2..=6);
            let cands = (0..k)
                .map(|i| {
                    let p = rng.gen_range(0.1..0.8);
                    output(&format!("c{i}"), gold.iter().map(|g| perturb(&mut rng, g, p)).collect())
                })
                .collect();
            (gold, cands)
        })
        .collect()
}

fn uas_order(gold: &[HeadVector], cands: &[ParserOutput]) -> Result<Vec<usize>, String> {
    let counts: Vec<usize> = cands
        .iter()
        .map(|c| attachment_count(c, gold).map(|a| a.correct))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    Ok(order)
}

fn quality_only_is_truncation() -> Check {
    for (case, (gold, cands)) in selection_cases().iter().enumerate() {
        let order = uas_order(gold, cands)?;
        for size in 1..=cands.len() {
            let r = forward_stepwise_select(cands, gold, &Selection::new(0.0, size, DiversityConfig::default()))
                .map_err(|e| e.to_string())?;
            ensure(r.indices == order[..size], || {
                format!("case {case}: alpha 0 chose {:?}, UAS order {order:?}", r.indices)
            })?;
        }
    }
    Ok("30 configurations, every size".into())
}

fn first_member_is_best() -> Check {
    for (case, (gold, cands)) in selection_cases().iter().enumerate() {
        let best = uas_order(gold, cands)?[0];
        for metric in DiversityMetric::ALL {
            for alpha in [0.0, 0.5, 1.0, 3.0] {
                let r = forward_stepwise_select(cands, gold, &Selection::new(alpha, 1, DiversityConfig::new(metric)))
                    .map_err(|e| e.to_string())?;
                ensure(r.indices[0] == best, || {
                    format!("case {case}: {metric} alpha {alpha} starts with {}", r.indices[0])
                })?;
            }
        }
    }
    Ok("30 configurations x 6 metrics x 4 alphas".into())
}

fn duplicate_never_raises_entropy() -> Check {
    let e = |e: depsemble::Error| e.to_string();
    let se = |set: &[&ParserOutput]| society_entropy::<f64, _>(set, Scope::Corpus, std::f64::consts::E);
    let mut trials = 0;
    let mut raised = Vec::new();
    for (case, (_, cands)) in selection_cases().iter().enumerate() {
        for size in 1..=cands.len() {
            let set: Vec<&ParserOutput> = cands.iter().take(size).collect();
            let base = se(&set).map_err(e)?;
            for dup in 0..size {
                let mut grown = set.clone();
                grown.push(set[dup]);
                let after = se(&grown).map_err(e)?;
                trials += 1;
                if after > base {
                    raised.push(format!("case {case} size {size} copy of {dup}: {base:.4} -> {after:.4}"));
                }
            }
        }
    }
    let a = output("a", vec![hv(&[0, 1])]);
    let b = output("b", vec![hv(&[2, 0])]);
    let small = se(&[&a, &a, &b]).map_err(e)?;
    let grown = se(&[&a, &a, &b, &b]).map_err(e)?;
    ensure(raised.is_empty(), || {
        format!(
            "{} of {trials} duplications raised the entropy (first: {}); minimal case: votes 2:1 give {small:.4}, \
             copying the minority voter gives 2:2 = {grown:.4}",
            raised.len(),
            raised[0]
        )
    })?;
    Ok(format!("{trials} duplications"))
}

/// Two strong individuals with independent errors and three weak ones
/// that make the same mistakes.
fn correlated_society(seed: u64) -> (Vec<HeadVector>, Vec<ParserOutput>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gold = gold_corpus(&mut rng, 150, 5..=20);
    let strong = |rng: &mut ChaCha8Rng, name: &str| {
        output(name, gold.iter().map(|g| perturb(rng, g, 0.22)).collect())
    };
    let s1 = strong(&mut rng, "strong1");
    let s2 = strong(&mut rng, "strong2");
    let weak: Vec<HeadVector> = gold.iter().map(|g| perturb(&mut rng, g, 0.6)).collect();
    let ws = (1..=3).map(|i| output(&format!("weak{i}"), weak.clone()));
    (gold.clone(), [s1, s2].into_iter().chain(ws).collect())
}

fn error_accumulation() -> Check {
    let start = Instant::now();
    let (gold, outs) = correlated_society(7);
    let e = |e: depsemble::Error| e.to_string();
    let acc: Vec<f64> = outs
        .iter()
        .map(|o| attachment_count(o, &gold).map(|c| c.uas()))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    let ensemble = MbrEnsemble::new(Objective::Uas);
    let curve = incremental_curve(&outs, &gold, &ensemble).map_err(e)?;
    let uas: Vec<f64> = curve.iter().map(|&(_, u)| u).collect();
    ensure(uas[4] < uas[1] && uas[4] < uas[0], || format!("curve {uas:?} does not drop"))?;

    let config = Selection::new(1.0, 3, DiversityConfig::new(DiversityMetric::SocietyEntropy));
    let chosen = forward_stepwise_select(&outs, &gold, &config).map_err(e)?;
    let members: Vec<&ParserOutput> = chosen.indices.iter().map(|&i| &outs[i]).collect();
    let selected = attachment_count(&aggregate_parses(&members, Objective::Uas, None).map_err(e)?, &gold)
        .map_err(e)?
        .uas();
    ensure(selected >= uas[4], || {
        format!("selected {:?} reach {selected:.4}, all five {:.4}", chosen.chosen, uas[4])
    })?;
    ensure(start.elapsed() < TIME_LIMIT, || format!("took {:.2?}", start.elapsed()))?;
    Ok(format!(
        "individuals {:.3?}, curve {:.3?}, selected {:?} -> {selected:.3}, {:.2?}",
        acc,
        uas,
        chosen.chosen,
        start.elapsed()
    ))
}

fn ensemble_beats_individuals() -> Check {
    let e = |e: depsemble::Error| e.to_string();
    let mut margins = Vec::new();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let gold = gold_corpus(&mut rng, 150, 10..=20);
        let words: usize = gold.iter().map(HeadVector::len).sum();
        ensure(words >= 2000, || format!("seed {seed}: only {words} words"))?;
        let outs: Vec<ParserOutput> = (0..5)
            .map(|i| output(&format!("p{i}"), gold.iter().map(|g| perturb(&mut rng, g, 0.42)).collect()))
            .collect();
        let best = outs
            .iter()
            .map(|o| attachment_count(o, &gold).map(|c| c.uas()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(e)?
            .into_iter()
            .fold(0.0, f64::max);
        let ensemble = attachment_count(&aggregate_parses(&outs, Objective::Uas, None).map_err(e)?, &gold)
            .map_err(e)?
            .uas();
        margins.push((best, ensemble - best));
    }
    let mean = margins.iter().map(|m| m.1).sum::<f64>() / margins.len() as f64;
    let best = margins.iter().map(|m| m.0).sum::<f64>() / margins.len() as f64;
    ensure(mean >= ENSEMBLE_MARGIN, || format!("mean margin {mean:.4}"))?;
    Ok(format!("best individual {best:.3}, mean margin {mean:.3} over 10 seeds"))
}

fn efficiency() -> Check {
    let e = |e: depsemble::Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gold = gold_corpus(&mut rng, 1000, 1..=40);
    let outs: Vec<ParserOutput> = (0..6)
        .map(|i| output(&format!("p{i}"), gold.iter().map(|g| perturb(&mut rng, g, 0.3)).collect()))
        .collect();
    let weights: Vec<Weight> = (1..=6).map(|i| Weight::new(i, 7)).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let parses = pool.install(|| aggregate_parses(&outs, Objective::Uas, Some(&weights))).map_err(e)?;
    let elapsed = start.elapsed();
    ensure(parses.len() == 1000, || "wrong sentence count".into())?;
    ensure(elapsed < TIME_LIMIT, || format!("aggregation took {elapsed:.2?}"))?;

    let small: Vec<ParserOutput> = outs
        .iter()
        .map(|o| output(&o.name, o.parses[..50].to_vec()))
        .collect();
    let small_gold = &gold[..50];
    let counter = MbrEnsemble::new(Objective::Uas);
    let size = 4;
    forward_stepwise_select(&small, small_gold, &Selection::new(1.0, size, DiversityConfig::default())).map_err(e)?;
    let stepwise = counter.decode_count();
    ensemble_validation_select(&small, small_gold, size, &counter).map_err(e)?;
    let validation = counter.decode_count() - stepwise;
    let k = small.len();
    let expected: usize = (1..=size).map(|t| k - t + 1).sum();
    ensure(stepwise == 0 && validation == expected, || {
        format!("decodes: stepwise {stepwise}, validation {validation} (expected {expected})")
    })?;
    Ok(format!(
        "1000 sentences x 6 in {elapsed:.2?} on one worker; decodes stepwise {stepwise}, validation {validation}"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 decoder optimality (attachment objective)", uas_decoder_optimal),
        ("2 decoder optimality (phrasal F1 objective)", f1_decoder_optimal),
        ("3 projective tree enumeration counts", enumeration_counts),
        ("4 diversity metric identities", metric_identities),
        ("5 round trips", round_trips),
        ("6a quality-only selection is UAS truncation", quality_only_is_truncation),
        ("6b first member is the best individual", first_member_is_best),
        ("6c duplicates never raise society entropy", duplicate_never_raises_entropy),
        ("7 correlated weak members drag the ensemble down", error_accumulation),
        ("8 ensemble beats its members", ensemble_beats_individuals),
        ("9 efficiency and decode counts", efficiency),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) if UNATTAINABLE.iter().any(|u| name.starts_with(u)) => {
                println!("FAIL  criterion {name}: {detail} [unattainable, not counted]");
            }
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
