mod args;

use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;
use depsemble::conllu::{check_alignment, read_corpus_file, write_corpus};
use depsemble::diversity::{diversity, Scope};
use depsemble::dpst::corpus_f1;
use depsemble::mbr::weights_from_validation;
use depsemble::selection::{alpha_sweep, default_alpha_grid, incremental_curve, select};
use depsemble::uas::{attachment_count, uas_by_pos};
use depsemble::{
    aggregate_corpus, CorpusFile, DiversityConfig, MbrEnsemble, Objective, ParserOutput, Selection, Weight,
};

use args::{
    AggregateArgs, Cli, Command, CurveArgs, DiversityArgs, DiversityOptions, EvaluateArgs, SelectArgs, SelftestArgs,
};

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn data(context: impl fmt::Display, e: impl fmt::Display) -> Failure {
    Failure::Data(format!("{context}: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Aggregate(a) => aggregate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Diversity(a) => diversity_cmd(a),
        Command::Select(a) => select_cmd(a),
        Command::Curve(a) => curve(a),
        Command::Selftest(a) => selftest(a),
    }
}

fn read(path: &Path) -> Outcome<CorpusFile> {
    let corpus = read_corpus_file(path, false).map_err(|e| data(path.display(), e))?;
    for w in &corpus.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(corpus)
}

fn name_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Reads every file and checks that all of them line up with the first.
fn read_aligned(paths: &[PathBuf]) -> Outcome<Vec<CorpusFile>> {
    let corpora = paths.iter().map(|p| read(p)).collect::<Outcome<Vec<_>>>()?;
    let refs: Vec<&CorpusFile> = corpora.iter().collect();
    let report = check_alignment(&refs);
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if let Some((k, m)) = report.mismatch {
        return Err(Failure::Data(format!(
            "{} is not aligned with {}: {m}",
            paths[k].display(),
            paths[0].display()
        )));
    }
    Ok(corpora)
}

fn outputs(paths: &[PathBuf], corpora: &[CorpusFile]) -> Vec<ParserOutput> {
    paths
        .iter()
        .zip(corpora)
        .map(|(p, c)| ParserOutput::from_corpus(name_of(p), c))
        .collect()
}

/// Reads gold and checks it against the first prediction file.
fn read_gold(gold: &Path, first: &CorpusFile) -> Outcome<CorpusFile> {
    let g = read(gold)?;
    let report = check_alignment(&[&g, first]);
    if let Some((_, m)) = report.mismatch {
        return Err(Failure::Data(format!(
            "{} is not aligned with {}: {m}",
            first.source,
            gold.display()
        )));
    }
    Ok(g)
}

fn parse_weight(s: &str) -> Option<Weight> {
    let s = s.trim();
    if s.contains('/') {
        return Weight::from_str(s).ok();
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) || frac.len() > 15 {
        return None;
    }
    let scale = 10i64.pow(frac.len() as u32);
    let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    if int < 0 || s.starts_with('-') {
        return None;
    }
    Some(Weight::new(int.checked_mul(scale)?.checked_add(frac)?, scale))
}

fn sink(path: Option<&Path>) -> Outcome<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(|e| data(p.display(), e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn aggregate(a: AggregateArgs) -> Outcome {
    let fixed = match &a.weights {
        Some(ws) => {
            if ws.len() != a.inputs.len() {
                return Err(Failure::Usage(format!(
                    "{} weights given for {} inputs",
                    ws.len(),
                    a.inputs.len()
                )));
            }
            let parsed = ws
                .iter()
                .map(|w| parse_weight(w).ok_or_else(|| Failure::Usage(format!("invalid weight {w:?}"))))
                .collect::<Outcome<Vec<_>>>()?;
            if parsed.iter().all(|w| *w == Weight::from_integer(0)) {
                return Err(Failure::Usage("all weights are zero".into()));
            }
            Some(parsed)
        }
        None => None,
    };
    let corpora = read_aligned(&a.inputs)?;
    let outs = outputs(&a.inputs, &corpora);
    let weights = match (&a.weights_from_gold, fixed) {
        (Some(gold), _) => {
            let g = read_gold(gold, &corpora[0])?;
            let w = weights_from_validation(&outs, &g, a.weight_digits).map_err(|e| data(gold.display(), e))?;
            for (o, w) in outs.iter().zip(&w) {
                eprintln!("weight\t{}\t{}", o.name, weight_decimal(*w, a.weight_digits));
            }
            Some(w)
        }
        (None, w) => w,
    };
    let merged = aggregate_corpus(&corpora[0], &outs, a.objective.into(), weights.as_deref())
        .map_err(|e| data("aggregate", e))?;
    let mut out = sink(a.output.as_deref())?;
    write_corpus(&merged, &mut out).map_err(|e| data("write", e))?;
    out.flush()?;
    Ok(())
}

fn weight_decimal(w: Weight, digits: u32) -> String {
    let scale = 10i64.pow(digits);
    let scaled = *w.numer() * (scale / *w.denom());
    if digits == 0 {
        return scaled.to_string();
    }
    format!(
        "{}.{:0width$}",
        scaled / scale,
        scaled % scale,
        width = digits as usize
    )
}

fn evaluate(a: EvaluateArgs) -> Outcome {
    let pred = read(&a.pred)?;
    let gold = read_gold(&a.gold, &pred)?;
    let mut out = sink(None)?;
    writeln!(out, "metric\tvalue")?;
    match Objective::from(a.metric) {
        Objective::Uas => {
            let c = attachment_count(&pred, &gold).map_err(|e| data(a.pred.display(), e))?;
            writeln!(out, "uas\t{:.6}", c.uas())?;
        }
        Objective::F1 => {
            let f1 = corpus_f1(&pred, &gold).map_err(|e| data(a.pred.display(), e))?;
            writeln!(out, "f1\t{f1:.6}")?;
        }
    }
    if a.by_pos {
        let groups = uas_by_pos(&pred, &gold).map_err(|e| data(a.pred.display(), e))?;
        writeln!(out, "pos\tuas\tsupport")?;
        for (pos, c) in groups {
            writeln!(out, "{pos}\t{:.6}\t{}", c.uas(), c.total)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn diversity_config(o: &DiversityOptions) -> DiversityConfig {
    let mut config = DiversityConfig::new(o.metric.into());
    config.log_base = o.log_base;
    config.fleiss_form = o.fleiss_form.into();
    config
}

fn diversity_cmd(a: DiversityArgs) -> Outcome {
    let config = diversity_config(&a.options);
    if config.metric.requires_gold() && a.gold.is_none() {
        return Err(Failure::Usage(format!("--metric {} requires --gold", config.metric)));
    }
    let corpora = read_aligned(&a.inputs)?;
    let outs = outputs(&a.inputs, &corpora);
    let gold = match &a.gold {
        Some(g) => Some(read_gold(g, &corpora[0])?),
        None => None,
    };
    let value: f64 = diversity(&outs, gold.as_ref(), &config, Scope::Corpus).map_err(|e| data("diversity", e))?;
    let mut out = sink(None)?;
    writeln!(out, "metric\tvalue")?;
    writeln!(out, "{}\t{value:.6}", config.metric)?;
    out.flush()?;
    Ok(())
}

/// Expands directories into their `.conllu` files, sorted by name.
fn candidate_paths(given: &[PathBuf]) -> Outcome<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for p in given {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| data(p.display(), e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "conllu"))
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(data(p.display(), "no .conllu files"));
            }
            paths.extend(found);
        } else {
            paths.push(p.clone());
        }
    }
    Ok(paths)
}

fn select_cmd(a: SelectArgs) -> Outcome {
    let config = diversity_config(&a.options);
    if a.size == 0 {
        return Err(Failure::Usage("--size must be at least 1".into()));
    }
    if !(a.alpha >= 0.0) || !a.alpha.is_finite() {
        return Err(Failure::Usage("--alpha must be a non-negative number".into()));
    }
    let paths = candidate_paths(&a.candidates)?;
    if a.size > paths.len() {
        return Err(Failure::Usage(format!(
            "--size {} exceeds the number of candidates ({})",
            a.size,
            paths.len()
        )));
    }
    let corpora = read_aligned(&paths)?;
    let outs = outputs(&paths, &corpora);
    let gold = read_gold(&a.gold, &corpora[0])?;
    let ensemble = MbrEnsemble::new(Objective::Uas);
    let mut out = sink(a.output.as_deref())?;
    if a.sweep {
        let rows = alpha_sweep(&outs, &gold, &config, a.size, &default_alpha_grid::<f64>(), &ensemble)
            .map_err(|e| data("select", e))?;
        writeln!(out, "alpha\tensemble_uas\tchosen")?;
        for r in rows {
            writeln!(out, "{:.1}\t{:.6}\t{}", r.alpha, r.ensemble_uas, r.selection.chosen.join(","))?;
        }
    } else {
        let mut selection = Selection::new(a.alpha, a.size, config);
        selection.method = a.method.into();
        let result = select(&outs, &gold, &selection, &ensemble).map_err(|e| data("select", e))?;
        writeln!(out, "step\tname\tobjective")?;
        for (t, (name, obj)) in result.chosen.iter().zip(&result.step_objectives).enumerate() {
            writeln!(out, "{}\t{name}\t{obj:.6}", t + 1)?;
        }
        log::info!("{} ensemble decodes", ensemble.decode_count());
    }
    out.flush()?;
    Ok(())
}

fn curve(a: CurveArgs) -> Outcome {
    let corpora = read_aligned(&a.inputs)?;
    let outs = outputs(&a.inputs, &corpora);
    let gold = read_gold(&a.gold, &corpora[0])?;
    let ensemble = MbrEnsemble::new(a.objective.into());
    let rows = incremental_curve(&outs, &gold, &ensemble).map_err(|e| data("curve", e))?;
    let mut out = sink(None)?;
    writeln!(out, "t\tuas")?;
    for (t, uas) in rows {
        writeln!(out, "{t}\t{uas:.6}")?;
    }
    out.flush()?;
    Ok(())
}

fn selftest(a: SelftestArgs) -> Outcome {
    if a.cases == 0 {
        return Err(Failure::Usage("--cases must be at least 1".into()));
    }
    let checks = depsemble::oracle::run_selftest(a.max_len, a.cases, a.seed).map_err(|e| data("selftest", e))?;
    let mut out = sink(None)?;
    writeln!(out, "seed\t{}", a.seed)?;
    let mut failed = 0;
    for c in &checks {
        writeln!(out, "{}\t{}\t{}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        failed += usize::from(!c.passed);
    }
    out.flush()?;
    if failed > 0 {
        return Err(Failure::Data(format!("{failed} self-test properties failed")));
    }
    Ok(())
}
