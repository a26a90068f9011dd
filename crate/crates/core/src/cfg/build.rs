//! Fragment construction and cross-language assembly.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::AnalysisConfig;
use crate::diag::Diagnostic;
use crate::frontend::{Expr, Language, MethodInfo, MethodRef, StmtKind, SymbolTable, Visibility};
use crate::linkage::{EntryPointPair, ServiceRegistry};
use crate::mapping::{recognize_check, Condition, GuardOutcome};

use super::{CfgNode, CrossCfg, Edge, EdgeKind, NodeRole, Resolver};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StmtNode {
    pub role: NodeRole,
    pub condition: Option<Condition>,
    pub line: u32,
    /// Methods this statement may call: implementations plus any
    /// body-less method the call names.
    pub calls: Vec<MethodRef>,
    pub unresolved: Vec<String>,
}

/// The per-method node chain, computed once per method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodNodes {
    pub language: Language,
    pub line: u32,
    pub stmts: Vec<StmtNode>,
}

impl MethodNodes {
    pub fn has_check(&self) -> bool {
        self.stmts.iter().any(|s| s.role == NodeRole::Check)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Fragment {
    pub methods: BTreeSet<MethodRef>,
    pub api_candidates: BTreeSet<MethodRef>,
}

pub struct CfgBuilder<'a> {
    pub resolver: Resolver<'a>,
    config: &'a AnalysisConfig,
    cache: BTreeMap<MethodRef, MethodNodes>,
    callers: Option<BTreeMap<MethodRef, BTreeSet<MethodRef>>>,
    diags: Vec<Diagnostic>,
}

impl<'a> CfgBuilder<'a> {
    pub fn new(symtab: &'a SymbolTable, registry: &'a ServiceRegistry, config: &'a AnalysisConfig) -> Self {
        CfgBuilder {
            resolver: Resolver::new(symtab, registry, config),
            config,
            cache: BTreeMap::new(),
            callers: None,
            diags: Vec::new(),
        }
    }

    fn symtab(&self) -> &'a SymbolTable {
        self.resolver.symtab
    }

    pub fn method_nodes(&mut self, key: &MethodRef) -> Option<&MethodNodes> {
        if !self.cache.contains_key(key) {
            let info = self.symtab().lookup(key)?;
            let nodes = self.compute_nodes(info);
            self.cache.insert(key.clone(), nodes);
        }
        self.cache.get(key)
    }

    fn compute_nodes(&mut self, m: &MethodInfo) -> MethodNodes {
        let mut stmts = Vec::new();
        for s in m.decl.flat_statements() {
            let (role, condition) = match &s.kind {
                StmtKind::If { .. } => match recognize_check(s, &m.decl, self.config) {
                    GuardOutcome::Guard(g) => (NodeRole::Check, Some(g.proceed)),
                    GuardOutcome::Rejected(d) => {
                        self.diags.push(Diagnostic::new(d.code, format!("{} ({}:{})", d.text, m.path, s.line)));
                        (NodeRole::Call, None)
                    }
                    GuardOutcome::NotAGuard => (NodeRole::Call, None),
                },
                StmtKind::Return(_) => (NodeRole::Return, None),
                _ => (NodeRole::Call, None),
            };
            let mut calls = BTreeSet::new();
            let mut unresolved = Vec::new();
            for c in s.own_calls() {
                let res = self.resolver.resolve_call(m, c);
                if let Some(st) = &res.static_target {
                    if self.symtab().lookup(st).is_some_and(|x| x.decl.body.is_none()) {
                        calls.insert(st.clone());
                    }
                }
                if res.is_unresolved() {
                    if let Expr::Call { callee, .. } = c {
                        unresolved.push(callee.clone());
                    }
                }
                calls.extend(res.targets);
            }
            for e in s.own_exprs() {
                e.for_each_new(&mut |type_name, args| {
                    if let Some(t) = self.resolver.symtab.resolve_type(type_name, &m.scope()) {
                        let simple = t.rsplit('.').next().unwrap_or(&t).to_string();
                        if let Some(ctor) = self.resolver.symtab.lookup_parts(&t, &simple, args.len()) {
                            calls.insert(ctor.key.clone());
                        }
                    }
                });
            }
            stmts.push(StmtNode { role, condition, line: s.line, calls: calls.into_iter().collect(), unresolved });
        }
        MethodNodes { language: m.language, line: m.decl.line, stmts }
    }

    /// Forward closure from `entry` over resolved, bodied callees.
    pub fn build_native_fragment(&mut self, entry: &MethodRef) -> Fragment {
        let mut frag = Fragment::default();
        let mut work = vec![entry.clone()];
        while let Some(m) = work.pop() {
            if !frag.methods.insert(m.clone()) {
                continue;
            }
            let Some(nodes) = self.method_nodes(&m) else { continue };
            let next: Vec<MethodRef> = nodes.stmts.iter().flat_map(|s| s.calls.iter().cloned()).collect();
            for t in next {
                if self.symtab().lookup(&t).is_some_and(|x| x.decl.body.is_some()) && !frag.methods.contains(&t) {
                    work.push(t);
                }
            }
        }
        frag
    }

    pub fn contains_security_check(&mut self, frag: &Fragment) -> bool {
        frag.methods.iter().any(|m| self.method_nodes(m).is_some_and(MethodNodes::has_check))
    }

    fn caller_index(&mut self) -> &BTreeMap<MethodRef, BTreeSet<MethodRef>> {
        if self.callers.is_none() {
            let keys: Vec<MethodRef> = self
                .symtab()
                .methods
                .values()
                .filter(|m| m.decl.body.is_some() && m.key.name != "onTransact")
                .map(|m| m.key.clone())
                .collect();
            let mut index: BTreeMap<MethodRef, BTreeSet<MethodRef>> = BTreeMap::new();
            for k in keys {
                let targets: Vec<MethodRef> = match self.method_nodes(&k) {
                    Some(n) => n.stmts.iter().flat_map(|s| s.calls.iter().cloned()).collect(),
                    None => continue,
                };
                for t in targets {
                    if t != k {
                        index.entry(t).or_default().insert(k.clone());
                    }
                }
            }
            self.callers = Some(index);
        }
        self.callers.as_ref().unwrap()
    }

    /// Reverse call-graph closure from `entry` within its language;
    /// uncalled public Java methods of the closure become API candidates.
    pub fn build_java_fragment_backward(&mut self, entry: &MethodRef) -> Fragment {
        let symtab = self.symtab();
        let lang = symtab.lookup(entry).map(|m| m.language);
        let index = self.caller_index().clone();
        let mut frag = Fragment::default();
        let mut work = vec![entry.clone()];
        while let Some(m) = work.pop() {
            if !frag.methods.insert(m.clone()) {
                continue;
            }
            let callers: Vec<&MethodRef> = index
                .get(&m)
                .into_iter()
                .flatten()
                .filter(|c| symtab.lookup(c).map(|x| x.language) == lang)
                .collect();
            if callers.is_empty() {
                let public_java = symtab
                    .lookup(&m)
                    .is_some_and(|x| x.language == Language::Java && x.decl.visibility == Visibility::Public);
                if public_java {
                    frag.api_candidates.insert(m.clone());
                }
            }
            work.extend(callers.into_iter().cloned());
        }
        frag
    }

    pub fn take_diagnostics(&mut self) -> Vec<Diagnostic> {
        let mut out = std::mem::take(&mut self.diags);
        out.extend(self.resolver.take_diagnostics());
        out
    }
}

/// Link retained fragments into one graph.
pub fn build_cross_cfg(
    symtab: &SymbolTable,
    registry: &ServiceRegistry,
    pairs: &[EntryPointPair],
    config: &AnalysisConfig,
) -> CrossCfg {
    let mut b = CfgBuilder::new(symtab, registry, config);
    let mut methods = BTreeSet::new();
    let mut api_candidates = BTreeSet::new();
    let mut links = Vec::new();
    for pair in pairs {
        if symtab.lookup(&pair.native_method).is_none() || symtab.lookup(&pair.java_method).is_none() {
            continue;
        }
        let native = b.build_native_fragment(&pair.native_method);
        if !b.contains_security_check(&native) {
            continue;
        }
        let java = b.build_java_fragment_backward(&pair.java_method);
        methods.extend(native.methods);
        methods.extend(java.methods);
        api_candidates.extend(java.api_candidates);
        links.push(pair.clone());
    }
    let mut g = assemble(&mut b, &methods, &links);
    g.api_candidates = api_candidates;
    g.diagnostics = b.take_diagnostics();
    g
}

fn assemble(b: &mut CfgBuilder<'_>, methods: &BTreeSet<MethodRef>, links: &[EntryPointPair]) -> CrossCfg {
    let mut ordered: Vec<(String, &MethodRef)> = methods.iter().map(|m| (m.to_string(), m)).collect();
    ordered.sort();
    let mut g = CrossCfg::default();
    let mut entry_ids = BTreeMap::new();
    let mut chains: Vec<(Vec<usize>, Vec<Vec<MethodRef>>)> = Vec::new();
    for (_, m) in &ordered {
        let Some(nodes) = b.method_nodes(m).cloned() else { continue };
        let entry = g.nodes.len();
        entry_ids.insert((*m).clone(), entry);
        g.nodes.push(CfgNode {
            id: entry,
            method: (*m).clone(),
            site: None,
            language: nodes.language,
            role: NodeRole::Entry,
            condition: None,
            unresolved: Vec::new(),
            line: nodes.line,
        });
        let mut ids = vec![entry];
        let mut calls = vec![Vec::new()];
        for (site, s) in nodes.stmts.into_iter().enumerate() {
            let id = g.nodes.len();
            g.nodes.push(CfgNode {
                id,
                method: (*m).clone(),
                site: Some(site),
                language: nodes.language,
                role: s.role,
                condition: s.condition,
                unresolved: s.unresolved,
                line: s.line,
            });
            ids.push(id);
            calls.push(s.calls);
        }
        chains.push((ids, calls));
    }
    for (ids, calls) in &chains {
        for w in ids.windows(2) {
            g.edges.insert(Edge { from: w[0], to: w[1], kind: EdgeKind::Fallthrough, aidl: false });
        }
        for (id, targets) in ids.iter().zip(calls) {
            for t in targets {
                if let Some(&to) = entry_ids.get(t) {
                    g.edges.insert(Edge { from: *id, to, kind: EdgeKind::Call, aidl: false });
                }
            }
        }
    }
    for pair in links {
        let (Some(&from), Some(&to)) = (entry_ids.get(&pair.java_method), entry_ids.get(&pair.native_method)) else {
            continue;
        };
        let same_language = g.nodes[from].language == g.nodes[to].language;
        let kind = if same_language { EdgeKind::Call } else { EdgeKind::Xlang };
        g.edges.insert(Edge { from, to, kind, aidl: same_language });
        g.pair_index.insert((from, to), pair.clone());
    }
    g.index_successors();
    g
}
