//! Cross-language control-flow graph.
//!
//! Every method in the graph contributes an ENTRY node plus one node per
//! statement (preorder through `if` branches), chained by FALLTHROUGH edges.
//! Call sites get CALL edges to callee entries; linked entry-point pairs get
//! an XLANG edge from the Java endpoint to the native one. There are no
//! return edges: a path that enters a callee ends inside it.

mod build;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use crate::diag::Diagnostic;
use crate::frontend::{Language, MethodRef};
use crate::linkage::EntryPointPair;
use crate::mapping::Condition;

pub use build::{build_cross_cfg, CfgBuilder, Fragment, MethodNodes, StmtNode};
pub use resolve::{BindingVar, CallResolution, Evidence, RecvType, Resolver, TypeBinding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRole {
    Entry,
    Call,
    Check,
    Return,
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeRole::Entry => "ENTRY",
            NodeRole::Call => "CALL",
            NodeRole::Check => "CHECK",
            NodeRole::Return => "RETURN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Call,
    Fallthrough,
    Xlang,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Call => "CALL",
            EdgeKind::Fallthrough => "FALLTHROUGH",
            EdgeKind::Xlang => "XLANG",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgNode {
    pub id: usize,
    pub method: MethodRef,
    /// Statement index in preorder; `None` for the entry node.
    pub site: Option<usize>,
    pub language: Language,
    pub role: NodeRole,
    /// Proceed-condition; present exactly on CHECK nodes.
    pub condition: Option<Condition>,
    pub unresolved: Vec<String>,
    pub line: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    /// Same-language AIDL link, carried as a CALL edge.
    pub aidl: bool,
}

#[derive(Debug, Clone, Default)]
pub struct CrossCfg {
    /// Indexed by id.
    pub nodes: Vec<CfgNode>,
    pub edges: BTreeSet<Edge>,
    /// Linkage edge (from, to) → the pair it realises.
    pub pair_index: BTreeMap<(usize, usize), EntryPointPair>,
    /// Public Java frontier methods of the backward fragments.
    pub api_candidates: BTreeSet<MethodRef>,
    pub diagnostics: Vec<Diagnostic>,
    succ: BTreeMap<usize, Vec<usize>>,
}

impl CrossCfg {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn entry_of(&self, method: &MethodRef) -> Option<usize> {
        self.nodes.iter().find(|n| &n.method == method && n.site.is_none()).map(|n| n.id)
    }

    /// Successor ids in ascending order.
    pub fn successors(&self, id: usize) -> &[usize] {
        self.succ.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn xlang_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Xlang)
    }

    pub fn has_edge(&self, from: usize, to: usize, kind: EdgeKind) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to && e.kind == kind)
    }

    pub(crate) fn index_successors(&mut self) {
        self.succ.clear();
        for e in &self.edges {
            self.succ.entry(e.from).or_default().push(e.to);
        }
        for v in self.succ.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
    }

    /// `FROM_ID KIND TO_ID`, one line per edge.
    pub fn edges_text(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.from, e.kind, e.to).unwrap();
        }
        out
    }

    /// `ID LANG ROLE METHOD SITE`, one line per node.
    pub fn nodes_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let site = n.site.map_or("-".to_string(), |s| s.to_string());
            writeln!(out, "{} {} {} {} {site}", n.id, n.language, n.role, n.method).unwrap();
        }
        out
    }
}
