use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::{exit_code, render_csv, render_json, render_text, scan, Format};
use crate::controls::{ControlConfig, ControlId};
use crate::ingest::{calculation_cells, load_workbook, occupied_cells};

const EXIT_LOAD_FAILURE: i32 = 2;
const EXIT_USAGE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "ssaudit",
    version,
    about = "Audit spreadsheets against three review controls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit workbooks and directories of workbooks.
    Scan {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// JSON control configuration (default: $SSAUDIT_CONFIG, else built-in).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 means one per CPU.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Print occupied and calculation cell counts for one workbook.
    Metrics { file: PathBuf },
    /// Describe what a control checks.
    Explain { control: String },
}

/// Entry point shared by the binary and tests; returns the exit status.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match cli.command {
        Command::Scan {
            paths,
            config,
            format,
            out,
            jobs,
        } => run_scan(&paths, config, format, out, jobs),
        Command::Metrics { file } => match load_workbook(&file) {
            Ok(model) => {
                println!("path: {}", file.display());
                println!("occupied_cells: {}", occupied_cells(&model));
                println!("calculation_cells: {}", calculation_cells(&model));
                0
            }
            Err(e) => {
                eprintln!("ssaudit: {}: {}: {e}", file.display(), e.code());
                EXIT_LOAD_FAILURE
            }
        },
        Command::Explain { control } => match ControlId::parse(&control) {
            Some(c) => {
                print!("{}", explain(c));
                0
            }
            None => {
                eprintln!(
                    "ssaudit: unknown control '{control}' (expected one of: {})",
                    ControlId::ALL.map(|c| c.key()).join(", ")
                );
                EXIT_USAGE
            }
        },
    }
}

fn load_config(explicit: Option<PathBuf>) -> Result<ControlConfig, String> {
    let path = explicit.or_else(|| std::env::var_os("SSAUDIT_CONFIG").map(PathBuf::from));
    match path {
        Some(p) => ControlConfig::from_file(&p).map_err(|e| e.to_string()),
        None => Ok(ControlConfig::default()),
    }
}

fn run_scan(paths: &[PathBuf], config: Option<PathBuf>, format: Format, out: Option<PathBuf>, jobs: usize) -> i32 {
    let config = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ssaudit: {e}");
            return EXIT_USAGE;
        }
    };
    let reports = scan(paths, &config, jobs);
    if reports.is_empty() {
        eprintln!("ssaudit: no .xlsx files found");
        return EXIT_USAGE;
    }
    for r in &reports {
        if let Some(e) = &r.error {
            eprintln!("ssaudit: {}: {e}", r.path);
        }
    }
    let document = match format {
        Format::Text => render_text(&reports),
        Format::Json => render_json(&reports, &config.digest()),
        Format::Csv => render_csv(&reports),
    };
    let written = match &out {
        Some(p) => std::fs::write(p, document.as_bytes()),
        None => std::io::stdout().lock().write_all(document.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("ssaudit: cannot write report: {e}");
        return EXIT_USAGE;
    }
    exit_code(&reports)
}

fn explain(control: ControlId) -> String {
    let body = match control {
        ControlId::DataValidity => {
            "Passes when the workbook contains check cells that cross-verify its data.\n\
             A check cell is a formula that differences or compares independently\n\
             derived figures (for example SUM(B:B)-SUM(C:C), or a tolerance test on\n\
             such a difference), placed next to a label such as \"check\" or reading\n\
             from two separate blocks of data.\n\
             \n\
             Two kinds of coverage are required:\n\
             \x20 input_check   at least one check reading only input values\n\
             \x20               (required when the workbook has input cells)\n\
             \x20 output_check  at least one check reading calculated values\n\
             \x20               (required when the workbook has formulas)\n\
             A check only counts when nothing it depends on is circular or\n\
             broken (#REF!, other error values, missing sheets, names or\n\
             external workbooks).\n"
        }
        ControlId::PlacementLabels => {
            "Passes when data is visible, labeled and laid out so a reader can follow it.\n\
             \x20 hidden_data       no hidden sheet, row or column holds data\n\
             \x20 header_labels     every block of data with more than one cell has a\n\
             \x20                   header row or column made mostly of labels\n\
             \x20 mixed_input_calc  a block holding both inputs and formulas styles them\n\
             \x20                   differently (fill, font color or bold)\n\
             \x20 orphan_region     no block of data is disconnected from every formula\n\
             \x20                   (configurable with orphan_fails_verdict)\n"
        }
        ControlId::DisplayConstants => {
            "Passes when formulas take their constants from cells instead of embedding them.\n\
             \x20 buried_constants  numeric literals inside formulas, other than the\n\
             \x20                   whitelist (-1, 0, 1 by default) and exempt argument\n\
             \x20                   positions such as the digits of ROUND, must not\n\
             \x20                   exceed max_buried_constants (0 by default)\n\
             Example: =780000*.35 fails with two findings; putting 780000 and .35\n\
             in labeled cells and writing =B1*B2 passes.\n"
        }
    };
    format!("{} ({})\n\n{body}", control.title(), control.key())
}
