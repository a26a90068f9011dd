//! Dialect parsers, canonical printer and the corpus-wide symbol table.

mod ast;
mod cpp;
mod java;
mod lexer;
mod parser;
mod printer;
mod symtab;

use thiserror::Error;

pub use ast::*;
pub use cpp::parse_cpp;
pub use java::parse_java;
pub use printer::pretty_print;
pub use symtab::{build_symbol_table, MethodInfo, MethodRef, SymbolTable, TypeInfo};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{path}:{line}: syntax error, expected {expected}")]
pub struct SyntaxError {
    pub path: String,
    pub line: u32,
    pub expected: String,
}

impl SyntaxError {
    pub fn new(path: &str, line: u32, expected: &str) -> Self {
        SyntaxError { path: path.to_string(), line, expected: expected.to_string() }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("duplicate type {0}")]
    DuplicateType(String),
}

/// Parse a unit, choosing the dialect from the file extension.
pub fn parse_source(source: &str, path: &str) -> Result<SourceUnit, SyntaxError> {
    if path.ends_with(".mcpp") {
        parse_cpp(source, path)
    } else {
        parse_java(source, path)
    }
}
