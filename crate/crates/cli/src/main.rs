//! Command-line driver: check, graph, analyze, metrics, and diff over
//! directories of `.ml` mini-language files.
//!
//! Exit codes: 0 on success, 1 when any error-severity diagnostic (or file
//! error) occurs, 2 on usage errors. Diagnostics go to stderr; data goes to
//! stdout or the configured output path, and outputs are byte-stable across
//! runs on identical inputs.

mod report;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use safegraph::analysis::{self, Mode};
use safegraph::frontend::{self, ResolvedCorpus};
use safegraph::graph::{build_extended_call_graph, BuildOptions};
use safegraph::metrics::count_corpus_abstractions;

#[derive(Parser)]
#[command(
    name = "safegraph",
    version,
    about = "Static safety analysis over multi-package corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the corpus and report unsafe-discipline diagnostics.
    Check {
        /// Directories of .ml files, or explicit files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Emit the merged extended call graph (structured text).
    Graph {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Emit per-function safety verdicts per analysis mode.
    Analyze {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Emit the per-package metrics report, CDFs, matrix, and prevalence.
    Metrics {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Compare unsafe-abstraction counts between two corpus snapshots.
    Diff {
        old: PathBuf,
        new: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Conservative,
    Optimistic,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    #[value(name = "structured-text")]
    StructuredText,
    Csv,
}

#[derive(Args)]
struct CommonOpts {
    /// Analysis mode for verdict-producing commands.
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Trusted packages: bodies are never traversed, only declared-unsafe
    /// signatures count.
    #[arg(long, value_delimiter = ',', value_name = "a,b,c")]
    trusted: Vec<String>,
    /// Generic-instantiation depth cap.
    #[arg(long, default_value_t = 8, value_name = "N")]
    depth_cap: u32,
    /// CDF cap percentile in (0, 100].
    #[arg(long, default_value_t = 100.0, value_name = "P")]
    cap_percentile: f64,
    /// Output format; defaults to the subcommand's natural format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output file, or output directory for `metrics`.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(()) => 0,
        Err(Failure::Diagnostics) => 1,
        Err(Failure::Io(msg)) => {
            eprintln!("error[E-IO] {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
    };
    ExitCode::from(code)
}

enum Failure {
    /// Error diagnostics were already printed to stderr.
    Diagnostics,
    Io(String),
    Usage(String),
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Check { inputs, opts } => {
            validate_common(&opts)?;
            let _ = load_corpus(&inputs)?;
            Ok(())
        }
        Command::Graph { inputs, opts } => {
            validate_common(&opts)?;
            if opts.format == Some(FormatArg::Csv) {
                return Err(Failure::Usage(
                    "--format csv is not supported by `graph`; it emits structured-text".into(),
                ));
            }
            let rc = load_corpus(&inputs)?;
            let graph = build_extended_call_graph(&rc, &build_options(&opts));
            write_output(opts.out.as_deref(), &report::render_graph(&graph))
        }
        Command::Analyze { inputs, opts } => {
            validate_common(&opts)?;
            let rc = load_corpus(&inputs)?;
            let graph = build_extended_call_graph(&rc, &build_options(&opts));
            let conservative = analysis::run_mode(&rc, &graph, Mode::Conservative);
            let optimistic = analysis::run_mode(&rc, &graph, Mode::Optimistic);
            let outcomes: Vec<&analysis::ModeOutcome> = match opts.mode {
                ModeArg::Conservative => vec![&conservative],
                ModeArg::Optimistic => vec![&optimistic],
                ModeArg::Both => vec![&conservative, &optimistic],
            };
            let vacuous: BTreeSet<_> =
                analysis::find_vacuous_declared_unsafe(&rc).into_iter().collect();
            let text = match opts.format.unwrap_or(FormatArg::Csv) {
                FormatArg::Csv => report::render_verdicts_csv(&outcomes, &vacuous),
                FormatArg::StructuredText => report::render_verdicts_json(&outcomes, &vacuous),
            };
            write_output(opts.out.as_deref(), &text)
        }
        Command::Metrics { inputs, opts } => {
            validate_common(&opts)?;
            if opts.format == Some(FormatArg::StructuredText) {
                return Err(Failure::Usage(
                    "--format structured-text is not supported by `metrics`; it emits CSV".into(),
                ));
            }
            let rc = load_corpus(&inputs)?;
            let graph = build_extended_call_graph(&rc, &build_options(&opts));
            let cap_tenths = cap_tenths(&opts)?;
            let (report_csv, cdfs) = report::metrics_outputs(&rc, &graph, cap_tenths);
            match &opts.out {
                None => write_output(None, &report_csv),
                Some(dir) => {
                    std::fs::create_dir_all(dir)
                        .map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
                    write_file(&dir.join("metrics.csv"), &report_csv)?;
                    for (name, content) in cdfs {
                        write_file(&dir.join(name), &content)?;
                    }
                    Ok(())
                }
            }
        }
        Command::Diff { old, new, opts } => {
            validate_common(&opts)?;
            if opts.format == Some(FormatArg::StructuredText) {
                return Err(Failure::Usage(
                    "--format structured-text is not supported by `diff`; it emits CSV".into(),
                ));
            }
            // Counting is lexical, so snapshots only need to parse.
            let old_corpus = parse_inputs(std::slice::from_ref(&old))?;
            let new_corpus = parse_inputs(std::slice::from_ref(&new))?;
            let old_counts = count_corpus_abstractions(&old_corpus);
            let new_counts = count_corpus_abstractions(&new_corpus);
            write_output(opts.out.as_deref(), &report::render_diff_csv(&old_counts, &new_counts))
        }
    }
}

fn validate_common(opts: &CommonOpts) -> Result<(), Failure> {
    if opts.depth_cap < 1 {
        return Err(Failure::Usage("--depth-cap must be at least 1".into()));
    }
    cap_tenths(opts).map(|_| ())
}

fn cap_tenths(opts: &CommonOpts) -> Result<u64, Failure> {
    let tenths = (opts.cap_percentile * 10.0).round();
    if !(tenths > 0.0 && tenths <= 1000.0) {
        return Err(Failure::Usage("--cap-percentile must be in (0, 100]".into()));
    }
    Ok(tenths as u64)
}

fn build_options(opts: &CommonOpts) -> BuildOptions {
    BuildOptions {
        trusted: opts.trusted.iter().cloned().collect(),
        depth_cap: opts.depth_cap,
        early_termination: false,
    }
}

/// Collects `.ml` sources: directories contribute their files sorted by
/// name, explicit files are taken as given.
fn collect_files(inputs: &[PathBuf]) -> Result<Vec<(String, String)>, Failure> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "ml"))
                .collect();
            paths.sort();
            for p in paths {
                files.push(read_source(&p)?);
            }
        } else if input.is_file() {
            files.push(read_source(input)?);
        } else {
            return Err(Failure::Io(format!("{}: no such file or directory", input.display())));
        }
    }
    Ok(files)
}

fn read_source(path: &Path) -> Result<(String, String), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok((path.display().to_string(), text))
}

fn parse_inputs(inputs: &[PathBuf]) -> Result<safegraph::model::Corpus, Failure> {
    let files = collect_files(inputs)?;
    frontend::parse_corpus(&files).map_err(|diags| {
        print_diagnostics(&diags);
        Failure::Diagnostics
    })
}

/// Parses, resolves, and checks discipline. Warnings go to stderr and do
/// not fail the run; any error-severity diagnostic does.
fn load_corpus(inputs: &[PathBuf]) -> Result<ResolvedCorpus, Failure> {
    let files = collect_files(inputs)?;
    let rc = frontend::parse_and_resolve(&files).map_err(|diags| {
        print_diagnostics(&diags);
        Failure::Diagnostics
    })?;
    let diags = frontend::check_unsafe_discipline(&rc);
    print_diagnostics(&diags);
    if frontend::has_errors(&diags) {
        return Err(Failure::Diagnostics);
    }
    Ok(rc)
}

fn print_diagnostics(diags: &[frontend::Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => write_file(path, text),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}
