use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use super::WorkbookReport;
use crate::controls::{audit_workbook, ControlConfig};
use crate::ingest::load_workbook;

/// Expand files and directories into the workbooks to audit, sorted.
/// Directories are walked recursively for `*.xlsx`, skipping `~$` lock files
/// and hidden directories. Explicit file arguments are always kept.
pub fn collect_paths(inputs: &[PathBuf]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for input in inputs {
        if !input.is_dir() {
            out.push(input.clone());
            continue;
        }
        let walker = WalkDir::new(input)
            .follow_links(true)
            .into_iter()
            .filter_entry(|e| e.depth() == 0 || !(e.file_type().is_dir() && is_hidden(e.path())));
        for entry in walker.flatten() {
            if entry.file_type().is_file() && is_workbook(entry.path()) {
                out.push(entry.into_path());
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn is_hidden(path: &Path) -> bool {
    path.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'))
}

fn is_workbook(path: &Path) -> bool {
    let name = path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
    !name.starts_with("~$") && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xlsx"))
}

/// Load and audit one file; load failures become a failed-file record.
pub fn audit_file(path: &Path, config: &ControlConfig) -> WorkbookReport {
    match load_workbook(path) {
        Ok(model) => audit_workbook(&model, config),
        Err(e) => WorkbookReport::failed(&path.to_string_lossy(), format!("{}: {e}", e.code())),
    }
}

/// Audit every workbook on a pool of `jobs` workers (0 = one per CPU).
/// Reports come back sorted by path whatever the worker count.
pub fn scan(inputs: &[PathBuf], config: &ControlConfig, jobs: usize) -> Vec<WorkbookReport> {
    let paths = collect_paths(inputs);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("worker pool");
    let mut reports: Vec<WorkbookReport> = pool.install(|| paths.par_iter().map(|p| audit_file(p, config)).collect());
    reports.sort_by(|a, b| a.path.cmp(&b.path));
    reports
}
