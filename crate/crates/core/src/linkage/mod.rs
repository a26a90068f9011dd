//! Cross-language entry points: AIDL remote methods, JNI registrations and
//! the service-identifier registry that ties `getService` lookups to classes.

mod aidl;
mod jni;
mod registry;

use std::fmt;

use thiserror::Error;

use crate::diag::Diagnostic;
use crate::frontend::{MethodRef, SourceUnit, SymbolTable};

pub use aidl::match_aidl_pairs;
pub use jni::{collect_jni_registrations, jni_arity, match_jni_pairs, JniRegistration};
pub use registry::{collect_service_registry, RegistryEntry, ServiceRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairKind {
    Aidl,
    Jni,
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairKind::Aidl => "AIDL",
            PairKind::Jni => "JNI",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatchKey {
    /// The native owner is part of the key so that ambiguous candidates
    /// (several services implementing one interface) stay distinct.
    Aidl { interface: String, method: String, arity: usize, native_owner: String },
    Jni { class_path: String, java_name: String, signature: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntryPointPair {
    pub kind: PairKind,
    pub match_key: MatchKey,
    pub java_method: MethodRef,
    pub native_method: MethodRef,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LinkageError {
    #[error("service identifier {identifier:?} registered to both {first} and {second}")]
    ConflictingRegistration { identifier: String, first: String, second: String },
}

/// Everything linkage produces for one corpus.
#[derive(Debug, Clone, Default)]
pub struct Linkage {
    pub registry: ServiceRegistry,
    /// Sorted by kind, then match key.
    pub pairs: Vec<EntryPointPair>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Linkage {
    pub fn count(&self, kind: PairKind) -> usize {
        self.pairs.iter().filter(|p| p.kind == kind).count()
    }
}

pub fn link(units: &[SourceUnit], symtab: &SymbolTable) -> Result<Linkage, LinkageError> {
    let (registry, mut diagnostics) = collect_service_registry(units, symtab)?;
    let (mut pairs, d) = match_aidl_pairs(units, symtab, &registry);
    diagnostics.extend(d);
    let (jni, d) = match_jni_pairs(units, symtab);
    diagnostics.extend(d);
    pairs.extend(jni);
    pairs.sort();
    pairs.dedup();
    Ok(Linkage { registry, pairs, diagnostics })
}

pub(crate) fn unmatched(kind: PairKind, side: &str, method: &MethodRef, path: &str, line: u32) -> Diagnostic {
    Diagnostic::new("UNMATCHED", format!("UNMATCHED {kind} {side} {method} {path}:{line}"))
}
