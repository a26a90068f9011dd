//! Corpus loading and the end-to-end extraction run.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;
use walkdir::WalkDir;

use crate::cfg::{build_cross_cfg, CrossCfg};
use crate::config::AnalysisConfig;
use crate::diag::Diagnostic;
use crate::frontend::{build_symbol_table, parse_source, FrontendError, SourceUnit, SymbolTable, SyntaxError};
use crate::linkage::{link, Linkage, LinkageError};
use crate::mapping::{extract_mappings, ExtractOptions, ProtectionMap};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Linkage(#[from] LinkageError),
}

impl PipelineError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }

    /// 2 for anything wrong with the corpus itself, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } => 3,
            _ => 2,
        }
    }
}

/// `(relative path, contents)` sorted by path.
pub type SourceFiles = Vec<(String, String)>;

fn rel(root: &Path, p: &Path) -> String {
    p.strip_prefix(root)
        .unwrap_or(p)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Every file under `dir` with one of `exts`, read and sorted by relative path.
pub fn read_sources(root: &Path, dir: &Path, exts: &[&str]) -> Result<SourceFiles, PipelineError> {
    let mut files = Vec::new();
    if !dir.exists() {
        return Ok(files);
    }
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            PipelineError::Io { path, source: e.into() }
        })?;
        let p = entry.path();
        let matches = p.extension().and_then(|e| e.to_str()).is_some_and(|e| exts.contains(&e));
        if entry.file_type().is_file() && matches {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::io(p, e))?;
            files.push((rel(root, p), text));
        }
    }
    files.sort();
    Ok(files)
}

/// The framework sources of a corpus directory.
pub fn read_corpus(dir: &Path) -> Result<SourceFiles, PipelineError> {
    if !dir.is_dir() {
        return Err(PipelineError::io(dir, io::Error::new(io::ErrorKind::NotFound, "corpus directory not found")));
    }
    let mut files = read_sources(dir, &dir.join("framework/java"), &["mjava"])?;
    files.extend(read_sources(dir, &dir.join("framework/native"), &["mcpp"])?);
    files.sort();
    Ok(files)
}

/// Content hash over sorted `(path, contents)` pairs.
pub fn corpus_id(files: &[(String, String)]) -> String {
    let mut sorted: Vec<&(String, String)> = files.iter().collect();
    sorted.sort();
    let mut h = Sha256::new();
    for (path, text) in sorted {
        h.update((path.len() as u64).to_le_bytes());
        h.update(path.as_bytes());
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn parse_all(files: &[(String, String)]) -> Result<Vec<SourceUnit>, SyntaxError> {
    files.iter().map(|(path, text)| parse_source(text, path)).collect()
}

pub struct Extraction {
    pub symtab: SymbolTable,
    pub linkage: Linkage,
    pub cfg: CrossCfg,
    pub map: ProtectionMap,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn extract_sources(
    files: &[(String, String)],
    config: &AnalysisConfig,
    opts: &ExtractOptions,
) -> Result<Extraction, PipelineError> {
    let mut files = files.to_vec();
    files.sort();
    let units = parse_all(&files)?;
    let symtab = build_symbol_table(&units)?;
    let linkage = link(&units, &symtab)?;
    let cfg = build_cross_cfg(&symtab, &linkage.registry, &linkage.pairs, config);
    let mut diagnostics = linkage.diagnostics.clone();
    diagnostics.extend(cfg.diagnostics.iter().cloned());
    let mut map = extract_mappings(&cfg, config, opts, &mut diagnostics);
    map.corpus_id = corpus_id(&files);
    Ok(Extraction { symtab, linkage, cfg, map, diagnostics })
}

pub fn extract_corpus(dir: &Path, config: &AnalysisConfig, opts: &ExtractOptions) -> Result<Extraction, PipelineError> {
    extract_sources(&read_corpus(dir)?, config, opts)
}

/// Write `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| PipelineError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| PipelineError::io(path, e))?;
    tmp.persist(path).map_err(|e| PipelineError::io(path, e.error))?;
    Ok(())
}

/// `edges.txt` and `nodes.txt` under `dir`.
pub fn write_debug_dump(cfg: &CrossCfg, dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    write_atomic(&dir.join("edges.txt"), cfg.edges_text().as_bytes())?;
    write_atomic(&dir.join("nodes.txt"), cfg.nodes_text().as_bytes())
}
