use std::io::Write;

use anyhow::{Context, Result};
use corpaudit_core::langtags::{lint_codes, read_code_list, IsoRegistry};

use crate::audit::{load_rules, output};
use crate::CodesArgs;

pub fn codes(args: &CodesArgs) -> Result<()> {
    let rules = load_rules(args.rules.as_deref())?;
    let text = std::fs::read_to_string(&args.list).with_context(|| format!("reading {}", args.list.display()))?;
    let list = read_code_list(&text);
    let report = lint_codes(&rules, IsoRegistry::builtin(), &list, &args.dataset);
    log::info!(
        "{}: {} codes, {} findings, {} warnings",
        args.dataset,
        report.codes,
        report.issues.len(),
        report.warnings.len()
    );
    if let Some(path) = &args.out {
        let mut file = output(Some(path))?;
        report.write_csv(&mut file)?;
        file.flush()?;
    }
    let mut out = output(None)?;
    match args.format.as_str() {
        "csv" => report.write_csv(&mut out)?,
        _ => out.write_all(report.to_markdown().as_bytes())?,
    }
    out.flush()?;
    Ok(())
}
