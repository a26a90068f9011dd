//! Command-line driver. `run` is the whole program minus process exit, so
//! tests can drive it in-process.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::appscan::{findings_csv_bytes, findings_json_bytes, load_permission_db, scan_app, AppBundle, FindingKind, PermissionDb};
use crate::config::{AnalysisConfig, OutputFormat, RunConfig};
use crate::linkage::PairKind;
use crate::mapping::{ExtractOptions, ProtectionMap};
use crate::pipeline::{extract_corpus, write_atomic, write_debug_dump};

#[derive(Parser, Debug)]
#[command(name = "xlperm", version, about = "Cross-language permission mapping extraction and app auditing")]
struct Cli {
    /// JSON file overriding analysis tunables (see `config --print-defaults`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Extract the API → condition map from a framework corpus.
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// One entry per checked path instead of one per API.
        #[arg(long)]
        per_path: bool,
        /// Write edges.txt / nodes.txt of the cross-language graph here.
        #[arg(long)]
        debug_dump: Option<PathBuf>,
    },
    /// Audit app bundles against a map.
    Scan {
        #[arg(long)]
        map: PathBuf,
        /// Permission levels; the built-in table when omitted.
        #[arg(long)]
        permdb: Option<PathBuf>,
        #[arg(long = "app", num_args = 0..)]
        apps: Vec<PathBuf>,
        /// Directory receiving one report per app.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        fail_on_findings: bool,
    },
    Config {
        #[arg(long)]
        print_defaults: bool,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Writes to the console are best effort; a closed pipe is not an analysis error.
macro_rules! say {
    ($w:expr, $($t:tt)*) => { let _ = writeln!($w, $($t)*); };
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                say!(out, "{}", text.trim_end());
            } else {
                say!(err, "{}", text.trim_end());
            }
            return code;
        }
    };
    let mut io = Io { out, err };
    let analysis = match &cli.config {
        None => AnalysisConfig::default(),
        Some(p) => match load_analysis_config(p) {
            Ok(c) => c,
            Err((code, msg)) => {
                say!(io.err, "{msg}");
                return code;
            }
        },
    };
    match cli.cmd {
        Cmd::Extract { corpus, out, format, per_path, debug_dump } => {
            let rc = RunConfig {
                corpus_dir: Some(corpus),
                output_path: Some(out),
                format: format.into(),
                per_path,
                debug_dump,
                analysis,
                ..Default::default()
            };
            cmd_extract(&rc, &mut io)
        }
        Cmd::Scan { map, permdb, apps, out, format, fail_on_findings } => {
            let rc = RunConfig {
                map_path: Some(map),
                permdb_path: permdb,
                app_dirs: apps,
                output_path: Some(out),
                format: format.into(),
                fail_on_findings,
                analysis,
                ..Default::default()
            };
            cmd_scan(&rc, &mut io)
        }
        Cmd::Config { print_defaults } => {
            if print_defaults {
                let text = serde_json::to_string_pretty(&AnalysisConfig::default()).expect("serializable");
                say!(io.out, "{text}");
            } else {
                say!(io.err, "nothing to do; try --print-defaults");
            }
            0
        }
    }
}

fn load_analysis_config(p: &Path) -> Result<AnalysisConfig, (i32, String)> {
    let text = fs::read_to_string(p).map_err(|e| (3, format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| (4, format!("{}: {e}", p.display())))
}

fn cmd_extract(rc: &RunConfig, io: &mut Io<'_>) -> i32 {
    let corpus = rc.corpus_dir.as_deref().expect("set by caller");
    let out_path = rc.output_path.as_deref().expect("set by caller");
    let opts = ExtractOptions { per_path: rc.per_path };
    let ex = match extract_corpus(corpus, &rc.analysis, &opts) {
        Ok(ex) => ex,
        Err(e) => {
            say!(io.err, "error: {e}");
            return e.exit_code();
        }
    };
    for d in &ex.diagnostics {
        say!(io.err, "{d}");
    }
    let bytes = match rc.format {
        OutputFormat::Json => ex.map.to_json_bytes(),
        OutputFormat::Csv => ex.map.to_csv_bytes(),
    };
    if let Some(dir) = &rc.debug_dump {
        if let Err(e) = write_debug_dump(&ex.cfg, dir) {
            say!(io.err, "error: {e}");
            return 3;
        }
    }
    if let Err(e) = write_atomic(out_path, &bytes) {
        say!(io.err, "error: {e}");
        return 3;
    }
    say!(io.out, "pairs AIDL {}", ex.linkage.count(PairKind::Aidl));
    say!(io.out, "pairs JNI {}", ex.linkage.count(PairKind::Jni));
    say!(io.out, "entries {}", ex.map.entries.len());
    say!(io.out, "diagnostics {}", ex.diagnostics.len());
    0
}

fn cmd_scan(rc: &RunConfig, io: &mut Io<'_>) -> i32 {
    let map_path = rc.map_path.as_deref().expect("set by caller");
    let out_dir = rc.output_path.as_deref().expect("set by caller");
    // Check every input exists before doing any work.
    let mut inputs: Vec<&Path> = vec![map_path];
    inputs.extend(rc.permdb_path.as_deref());
    inputs.extend(rc.app_dirs.iter().map(PathBuf::as_path));
    if let Some(missing) = inputs.iter().find(|p| !p.exists()) {
        say!(io.err, "error: {}: not found", missing.display());
        return 3;
    }
    let map = match fs::read_to_string(map_path) {
        Err(e) => {
            say!(io.err, "error: {}: {e}", map_path.display());
            return 3;
        }
        Ok(text) => match ProtectionMap::from_json_str(&text) {
            Ok(m) => m,
            Err(e) => {
                say!(io.err, "error: {}: {e}", map_path.display());
                return 4;
            }
        },
    };
    let db = match &rc.permdb_path {
        None => PermissionDb::builtin(),
        Some(p) => match fs::read_to_string(p) {
            Err(e) => {
                say!(io.err, "error: {}: {e}", p.display());
                return 3;
            }
            Ok(text) => match load_permission_db(&text, &p.display().to_string()) {
                Ok(db) => db,
                Err(e) => {
                    say!(io.err, "error: {e}");
                    return e.exit_code();
                }
            },
        },
    };
    if let Err(e) = fs::create_dir_all(out_dir) {
        say!(io.err, "error: {}: {e}", out_dir.display());
        return 3;
    }
    let mut dirs = rc.app_dirs.clone();
    dirs.sort();
    let mut reports = Vec::new();
    for dir in &dirs {
        let app = match AppBundle::load(dir) {
            Ok(a) => a,
            Err(e) => {
                say!(io.err, "error: {e}");
                return e.exit_code();
            }
        };
        match scan_app(&app, &map, &db, &rc.analysis) {
            Ok(f) => reports.push((app.manifest.package.clone(), f)),
            Err(e) => {
                say!(io.err, "error: {}: {e}", app.manifest.package);
                return e.exit_code();
            }
        }
    }
    reports.sort();
    for (pkg, findings) in &reports {
        let (name, bytes) = match rc.format {
            OutputFormat::Json => (format!("{pkg}.json"), findings_json_bytes(pkg, findings)),
            OutputFormat::Csv => (format!("{pkg}.csv"), findings_csv_bytes(findings)),
        };
        if let Err(e) = write_atomic(&out_dir.join(name), &bytes) {
            say!(io.err, "error: {e}");
            return 3;
        }
    }
    let count = |k| reports.iter().flat_map(|(_, f)| f).filter(|f| f.kind == k).count();
    let (op, hj) = (count(FindingKind::OverPrivilege), count(FindingKind::ComponentHijacking));
    say!(io.out, "apps scanned {}", reports.len());
    say!(io.out, "{} {op}", FindingKind::OverPrivilege);
    say!(io.out, "{} {hj}", FindingKind::ComponentHijacking);
    if rc.fail_on_findings && op + hj > 0 {
        1
    } else {
        0
    }
}
