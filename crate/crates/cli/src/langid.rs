use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use corpaudit_core::corpus_io::read_parallel;
use corpaudit_core::export::{read_jsonl_file, single_rater};
use corpaudit_core::langid::{filter_eval, FilterDecision, LangIdConfig, LangIdFilter, LangIdModel, Prediction};
use serde::Serialize;

use crate::audit::{load_rules, output};
use crate::{EvalArgs, FilterArgs, LangidCommand, PredictArgs, TrainArgs};

pub fn run(command: &LangidCommand) -> Result<()> {
    match command {
        LangidCommand::Train(args) => train(args),
        LangidCommand::Predict(args) => predict(args),
        LangidCommand::Filter(args) => filter(args),
        LangidCommand::Eval(args) => eval(args),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn training_files(args: &TrainArgs) -> Result<Vec<(String, PathBuf)>> {
    let mut files = args.inputs.clone();
    if let Some(dir) = &args.data {
        for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
            let path = entry?.path();
            if path.extension().is_some_and(|x| x == "txt") {
                let lang = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                files.push((lang, path));
            }
        }
    }
    files.sort();
    if files.is_empty() {
        bail!("no training files (expected LANG.txt files or --input LANG=FILE)");
    }
    Ok(files)
}

fn train(args: &TrainArgs) -> Result<()> {
    let mut corpora = Vec::new();
    for (lang, path) in training_files(args)? {
        corpora.push((lang, read_lines(&path)?));
    }
    let config = LangIdConfig {
        alpha: args.alpha,
        max_order: args.max_order,
        min_text_length: args.min_length,
        ..LangIdConfig::default()
    };
    let model = LangIdModel::train(&corpora, config).context("training")?;
    model.save(&args.out)?;
    log::info!("trained {} languages into {}", corpora.len(), args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct PredictionLine<'a> {
    line: usize,
    text: &'a str,
    #[serde(flatten)]
    prediction: Prediction,
}

fn predict(args: &PredictArgs) -> Result<()> {
    let model = LangIdModel::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let texts = match (&args.text, &args.input) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(p)) => read_lines(p)?,
        (None, None) => bail!("give --text or --input"),
    };
    let mut out = output(None)?;
    for (line, text) in texts.iter().enumerate() {
        let prediction = model.predict(text)?;
        serde_json::to_writer(&mut out, &PredictionLine { line, text, prediction })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn filter(args: &FilterArgs) -> Result<()> {
    let model = LangIdModel::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let rules = load_rules(args.rules.as_deref())?;
    let mut langid = LangIdFilter::new(&model);
    if let Some(ds) = &args.dataset {
        langid = langid.with_rules(&rules, ds);
    }
    let mut out = output(args.out.as_deref())?;
    let mut kept_out = match &args.kept {
        Some(p) => Some(output(Some(p))?),
        None => None,
    };
    let (mut total, mut kept, mut unevaluable) = (0usize, 0usize, 0usize);
    for pair in read_parallel(&args.corpus, &args.src, &args.tgt)? {
        let pair = pair?;
        let decision = langid.decide(&pair);
        total += 1;
        unevaluable += usize::from(!decision.is_evaluable());
        if decision.kept {
            kept += 1;
            if let Some(k) = kept_out.as_mut() {
                writeln!(k, "{}\t{}", pair.src_text, pair.tgt_text)?;
            }
        }
        serde_json::to_writer(&mut out, &decision)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    if let Some(mut k) = kept_out {
        k.flush()?;
    }
    log::info!("kept {kept} of {total} pairs ({unevaluable} unevaluable)");
    Ok(())
}

fn read_decisions(path: &Path) -> Result<Vec<FilterDecision>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn eval(args: &EvalArgs) -> Result<()> {
    let decisions = read_decisions(&args.decisions)?;
    let lines =
        read_jsonl_file(&args.annotations).with_context(|| format!("reading {}", args.annotations.display()))?;
    let annotations: HashMap<String, _> = single_rater(&lines)
        .into_iter()
        .map(|l| (l.id.clone(), l.record()))
        .collect();
    let metrics = filter_eval(&annotations, &decisions)?;
    if metrics.unevaluable > 0 {
        log::warn!("{} pairs were unevaluable and left out", metrics.unevaluable);
    }
    let mut out = output(args.out.as_deref())?;
    metrics.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}
