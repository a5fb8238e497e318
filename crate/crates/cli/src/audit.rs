use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use corpaudit_core::export::{read_jsonl_file, stats_from_export, ExportLine};
use corpaudit_core::langtags::{lint_codes, read_code_list, IsoRegistry, LintReport, RulesDatabase};
use corpaudit_core::report::{DatasetInput, ReportBundle};
use corpaudit_core::sampling::{read_sizes_file, sample_file, sizes_for};
use corpaudit_core::stats::{agreement_accuracy, read_stats_csv, read_stats_file, sizes_from_stats};
use corpaudit_core::{AnnotationRecord, Granularity};
use corpaudit_service::ProjectStore;

use crate::{AgreementArgs, ReportArgs, SampleArgs, ServeArgs, StatsArgs, StatsInput};

/// Stdout, or a buffered file.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn sample(args: &SampleArgs) -> Result<()> {
    let langs: Vec<&str> = args.langs.iter().map(String::as_str).collect();
    let sample = sample_file(&args.corpus, &args.dataset, args.kind, &langs, args.n, args.seed)
        .with_context(|| format!("sampling {}", args.corpus.display()))?;
    log::info!(
        "drew {} of {} items from {}",
        sample.items.len(),
        sample.corpus.total_sentences,
        args.corpus.display()
    );
    let mut out = output(args.out.as_deref())?;
    sample.write_jsonl(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let store =
        ProjectStore::open(&args.root).with_context(|| format!("opening project root {}", args.root.display()))?;
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime
        .block_on(corpaudit_service::serve(Arc::new(store), addr))
        .with_context(|| format!("serving on {addr}"))?;
    Ok(())
}

fn jsonl_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl") && p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .jsonl files in {}", dir.display());
    }
    Ok(files)
}

pub fn load_inputs(input: &StatsInput) -> Result<Vec<DatasetInput>> {
    let mut datasets: Vec<(String, Vec<corpaudit_core::CorpusStats>)> = Vec::new();
    if let Some(dir) = &input.annotations {
        let mut grouped: BTreeMap<String, Vec<ExportLine>> = BTreeMap::new();
        for path in jsonl_files(dir)? {
            let lines = read_jsonl_file(&path).with_context(|| format!("reading {}", path.display()))?;
            for line in lines {
                let name = input.dataset.clone().unwrap_or_else(|| line.corpus.clone());
                grouped.entry(name).or_default().push(line);
            }
        }
        for (name, lines) in grouped {
            let stats = stats_from_export(&lines, &name).with_context(|| format!("statistics for {name}"))?;
            datasets.push((name, stats));
        }
    } else {
        if input.dataset.is_some() && input.tables.len() > 1 {
            bail!("--dataset names a single table; got {} tables", input.tables.len());
        }
        for path in &input.tables {
            let stats = match &input.dataset {
                Some(name) => {
                    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
                    read_stats_csv(file, name)
                }
                None => read_stats_file(path),
            }
            .with_context(|| format!("reading {}", path.display()))?;
            let name = stats.first().map(|s| s.dataset.clone()).unwrap_or_default();
            datasets.push((name, stats));
        }
    }

    let size_rows = match &input.sizes {
        Some(p) => read_sizes_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => Vec::new(),
    };
    Ok(datasets
        .into_iter()
        .map(|(dataset, stats)| {
            let mut sizes = sizes_from_stats(&stats);
            for (lang, n) in sizes_for(&size_rows, &dataset) {
                match n {
                    Some(n) => sizes.insert(lang, n),
                    None => sizes.remove(&lang),
                };
            }
            DatasetInput { dataset, stats, sizes }
        })
        .collect())
}

fn write_bundle(bundle: &ReportBundle, out: &Path) -> Result<()> {
    for path in bundle.write_to(out)? {
        println!("{}", path.display());
    }
    Ok(())
}

pub fn stats(args: &StatsArgs) -> Result<()> {
    let inputs = load_inputs(&args.input)?;
    write_bundle(&ReportBundle::build(&inputs, &[])?, &args.out)
}

pub fn load_rules(path: Option<&Path>) -> Result<std::borrow::Cow<'static, RulesDatabase>> {
    Ok(match path {
        Some(p) => {
            std::borrow::Cow::Owned(RulesDatabase::load(p).with_context(|| format!("loading rules {}", p.display()))?)
        }
        None => std::borrow::Cow::Borrowed(RulesDatabase::builtin()),
    })
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let inputs = load_inputs(&args.input)?;
    let rules = load_rules(args.rules.as_deref())?;
    let lint: Vec<LintReport> = args
        .codes
        .iter()
        .map(|(dataset, path)| {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(lint_codes(
                &rules,
                IsoRegistry::builtin(),
                &read_code_list(&text),
                dataset,
            ))
        })
        .collect::<Result<_>>()?;
    write_bundle(&ReportBundle::build(&inputs, &lint)?, &args.out)
}

fn rater_records(path: &Path, rater: Option<&str>) -> Result<Vec<AnnotationRecord>> {
    let lines = read_jsonl_file(path).with_context(|| format!("reading {}", path.display()))?;
    let records: Vec<AnnotationRecord> = lines
        .iter()
        .filter(|l| rater.is_none_or(|r| l.rater == r))
        .map(ExportLine::record)
        .collect();
    let mut raters: Vec<&str> = records.iter().map(|r| r.rater_id.as_str()).collect();
    raters.sort();
    raters.dedup();
    if raters.len() > 1 {
        bail!(
            "{} holds several raters ({}); pick one with --ref-rater/--other-rater",
            path.display(),
            raters.join(", ")
        );
    }
    if records.is_empty() {
        bail!("{}: no annotations", path.display());
    }
    Ok(records)
}

pub fn agreement(args: &AgreementArgs) -> Result<()> {
    let reference = rater_records(&args.reference, args.ref_rater.as_deref())?;
    let other = rater_records(&args.other, args.other_rater.as_deref())?;
    let levels = match args.classes {
        Some(n) => vec![Granularity::from_classes(n)?],
        None => Granularity::ALL.to_vec(),
    };
    let mut out = output(None)?;
    writeln!(out, "classes,accuracy,items")?;
    for g in levels {
        let acc = agreement_accuracy(&reference, &other, g).context("comparing annotations")?;
        writeln!(out, "{},{acc:.2},{}", g.classes(), reference.len())?;
    }
    out.flush()?;
    Ok(())
}
