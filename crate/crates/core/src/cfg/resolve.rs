//! Call-target resolution: declared types, value tracing for strong
//! pointers and member variables, and the virtual-dispatch fallback.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::config::AnalysisConfig;
use crate::diag::Diagnostic;
use crate::frontend::{Expr, MethodInfo, MethodRef, StmtKind, SymbolTable};
use crate::linkage::ServiceRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Evidence {
    ServiceId,
    Constructor,
    ReturnType,
    MemberInit,
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Evidence::ServiceId => "SERVICE_ID",
            Evidence::Constructor => "CONSTRUCTOR",
            Evidence::ReturnType => "RETURN_TYPE",
            Evidence::MemberInit => "MEMBER_INIT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum BindingVar {
    Local { method: MethodRef, name: String },
    Field { class: String, field: String },
}

/// `bound_type == None` is UNKNOWN.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeBinding {
    pub variable: BindingVar,
    pub bound_type: Option<String>,
    pub evidence: Option<Evidence>,
}

/// Static type of a receiver expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecvType {
    Known(String),
    /// A type outside the analysed code, named as best we can.
    External(String),
    Unknown,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallResolution {
    /// Implementations the call may run (empty when unresolved).
    pub targets: Vec<MethodRef>,
    /// The method the call names statically, which may be body-less.
    pub static_target: Option<MethodRef>,
    /// Best-effort reference for a call into code that is not loaded.
    pub external: Option<MethodRef>,
    pub intrinsic: bool,
}

impl CallResolution {
    pub fn is_unresolved(&self) -> bool {
        !self.intrinsic && self.targets.is_empty()
    }
}

const GLUE: &[&str] = &[
    "getCallingPid", "getCallingUid", "getpid", "transact", "getService", "checkService", "addService",
    "defaultServiceManager", "interface_cast", "asInterface", "ALOGE", "ALOGW", "ALOGI", "ALOGD", "ALOGV",
];
const TRANSPARENT: &[&str] = &["interface_cast", "asInterface"];
const MAX_TRACE_DEPTH: usize = 24;

pub struct Resolver<'a> {
    pub symtab: &'a SymbolTable,
    registry: &'a ServiceRegistry,
    config: &'a AnalysisConfig,
    bindings: BTreeMap<BindingVar, TypeBinding>,
    in_progress: BTreeSet<BindingVar>,
    depth: usize,
    diags: Vec<Diagnostic>,
    reported: BTreeSet<String>,
}

impl<'a> Resolver<'a> {
    pub fn new(symtab: &'a SymbolTable, registry: &'a ServiceRegistry, config: &'a AnalysisConfig) -> Self {
        Resolver {
            symtab,
            registry,
            config,
            bindings: BTreeMap::new(),
            in_progress: BTreeSet::new(),
            depth: 0,
            diags: Vec::new(),
            reported: BTreeSet::new(),
        }
    }

    pub fn take_diagnostics(&mut self) -> Vec<Diagnostic> {
        std::mem::take(&mut self.diags)
    }

    pub fn bindings(&self) -> impl Iterator<Item = &TypeBinding> {
        self.bindings.values()
    }

    fn report(&mut self, code: &'static str, text: String) {
        if self.reported.insert(text.clone()) {
            self.diags.push(Diagnostic::new(code, text));
        }
    }

    pub fn is_intrinsic(&self, callee: &str) -> bool {
        GLUE.contains(&callee) || self.config.check_function_names.iter().any(|c| c == callee)
    }

    fn method(&self, key: &MethodRef) -> Option<&'a MethodInfo> {
        self.symtab.lookup(key)
    }

    // ---- calls -------------------------------------------------------

    pub fn resolve_call(&mut self, m: &MethodInfo, call: &Expr) -> CallResolution {
        let Expr::Call { receiver, callee, args } = call else { return CallResolution::default() };
        if self.is_intrinsic(callee) {
            return CallResolution { intrinsic: true, ..Default::default() };
        }
        let arity = args.len();
        match receiver.as_deref() {
            None => self.resolve_unqualified(m, callee, arity),
            Some(Expr::Ident(t)) if t == "this" => self.resolve_unqualified(m, callee, arity),
            Some(recv) => self.resolve_on_receiver(m, recv, callee, arity),
        }
    }

    fn resolve_unqualified(&mut self, m: &MethodInfo, name: &str, arity: usize) -> CallResolution {
        let mut owner = m.key.owner.clone();
        while let Some(o) = owner {
            if let Some(found) = self.symtab.find_method(&o, name, arity) {
                let key = found.key.clone();
                let targets = if found.decl.body.is_some() {
                    vec![key.clone()]
                } else {
                    self.resolve_virtual_call(&o, name, arity)
                };
                return CallResolution { targets, static_target: Some(key), ..Default::default() };
            }
            // Inner classes see the enclosing class's methods.
            owner = self.symtab.type_info(&o).and_then(|t| t.enclosing.clone());
        }
        let free = MethodRef::new(None, name, arity);
        if let Some(f) = self.method(&free) {
            let targets = if f.decl.body.is_some() { vec![free.clone()] } else { Vec::new() };
            return CallResolution { targets, static_target: Some(free), ..Default::default() };
        }
        CallResolution::default()
    }

    fn resolve_on_receiver(&mut self, m: &MethodInfo, recv: &Expr, name: &str, arity: usize) -> CallResolution {
        let declared = self.type_of(recv, m);
        let bound = self.binding_for_receiver(m, recv);
        let mut res = CallResolution::default();
        match &declared {
            RecvType::Known(t) => {
                res.static_target = self.symtab.find_method(t, name, arity).map(|x| x.key.clone());
            }
            RecvType::External(t) => res.external = Some(MethodRef::new(Some(t), name, arity)),
            RecvType::Unknown => {}
        }
        // A bound value only redirects dispatch within one language; crossing
        // languages is the job of the linkage edges.
        if let Some(b) = bound.filter(|b| self.symtab.type_info(b).is_some_and(|t| t.language == m.language)) {
            if let Some(x) = self.symtab.find_bodied_method(&b, name, arity) {
                res.targets = vec![x.key.clone()];
                return res;
            }
        }
        if let RecvType::Known(t) = &declared {
            res.targets = self.resolve_virtual_call(t, name, arity);
        }
        res
    }

    /// Dispatch on a declared type with no binding: the type's own (or
    /// inherited) implementation, else the unique implementing class.
    pub fn resolve_virtual_call(&mut self, declared: &str, name: &str, arity: usize) -> Vec<MethodRef> {
        if let Some(found) = self.symtab.find_method(declared, name, arity) {
            if found.decl.body.is_some() {
                return vec![found.key.clone()];
            }
        }
        let impls: BTreeSet<MethodRef> = self
            .symtab
            .implementers(declared)
            .iter()
            .filter_map(|c| self.symtab.find_bodied_method(c, name, arity))
            .map(|x| x.key.clone())
            .collect();
        match impls.len() {
            1 => impls.into_iter().collect(),
            0 => Vec::new(),
            _ => {
                let list: Vec<String> = impls.iter().map(ToString::to_string).collect();
                self.report(
                    "AMBIGUOUS_DISPATCH",
                    format!("AMBIGUOUS_DISPATCH {declared}.{name}/{arity} -> {}", list.join(", ")),
                );
                Vec::new()
            }
        }
    }

    // ---- types -------------------------------------------------------

    fn is_local(m: &MethodInfo, name: &str) -> bool {
        m.decl.local_type(name).is_some()
    }

    fn declared(&self, written: &str, m: &MethodInfo) -> RecvType {
        match self.symtab.resolve_type(written, &m.scope()) {
            Some(t) => RecvType::Known(t),
            None => {
                let base = crate::frontend::base_type_name(written).replace("::", ".");
                if base.is_empty() || !base.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                    return RecvType::Unknown;
                }
                let suffix = format!(".{}", base.split('.').next().unwrap_or(&base));
                let imported = m.imports.iter().find(|i| i.ends_with(&suffix));
                match imported {
                    Some(i) => {
                        let rest = base.split_once('.').map(|(_, r)| format!(".{r}")).unwrap_or_default();
                        RecvType::External(format!("{i}{rest}"))
                    }
                    None => RecvType::External(base),
                }
            }
        }
    }

    /// Field `name` visible from `m`: (declaring class, declared type).
    fn visible_field(&self, m: &MethodInfo, name: &str) -> Option<(String, String)> {
        let mut owner = m.key.owner.clone();
        while let Some(o) = owner {
            if let Some((decl_in, f)) = self.symtab.find_field(&o, name) {
                return Some((decl_in.to_string(), f.declared_type.clone()));
            }
            owner = self.symtab.type_info(&o).and_then(|t| t.enclosing.clone());
        }
        None
    }

    fn field_type(&self, class: &str, written: &str) -> RecvType {
        match self.symtab.type_info(class) {
            Some(info) => match self.symtab.resolve_type(written, &info.scope()) {
                Some(t) => RecvType::Known(t),
                None => RecvType::External(crate::frontend::base_type_name(written)),
            },
            None => RecvType::Unknown,
        }
    }

    pub fn type_of(&mut self, e: &Expr, m: &MethodInfo) -> RecvType {
        match e {
            Expr::Ident(n) if n == "this" => m.key.owner.clone().map_or(RecvType::Unknown, RecvType::Known),
            Expr::Ident(n) => {
                if let Some(t) = m.decl.local_type(n) {
                    return self.declared(t, m);
                }
                if let Some((class, t)) = self.visible_field(m, n) {
                    return self.field_type(&class, &t);
                }
                // A type name used as a static receiver.
                if n.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    return self.declared(n, m);
                }
                RecvType::Unknown
            }
            Expr::FieldAccess { base, field } => {
                if matches!(&**base, Expr::Ident(t) if t == "this") {
                    return match self.visible_field(m, field) {
                        Some((class, t)) => self.field_type(&class, &t),
                        None => RecvType::Unknown,
                    };
                }
                if let Some(path) = e.dotted_path() {
                    if let Some(t) = self.symtab.resolve_type(&path, &m.scope()) {
                        return RecvType::Known(t);
                    }
                }
                match self.type_of(base, m) {
                    RecvType::Known(t) => match self.symtab.find_field(&t, field) {
                        Some((class, f)) => {
                            let (class, written) = (class.to_string(), f.declared_type.clone());
                            self.field_type(&class, &written)
                        }
                        None => RecvType::Unknown,
                    },
                    RecvType::External(t) => RecvType::External(format!("{t}.{field}")),
                    RecvType::Unknown => RecvType::Unknown,
                }
            }
            Expr::New { type_name, .. } => self.declared(type_name, m),
            Expr::Call { callee, args, .. } if TRANSPARENT.contains(&callee.as_str()) => match args.first() {
                Some(inner) => self.type_of(inner, m),
                None => RecvType::Unknown,
            },
            Expr::Call { .. } => {
                let res = self.resolve_call(m, e);
                let Some(target) = res.static_target.as_ref().and_then(|k| self.method(k)) else {
                    return RecvType::Unknown;
                };
                if target.decl.return_type.is_empty() {
                    return RecvType::Unknown;
                }
                self.declared(&target.decl.return_type.clone(), target)
            }
            _ => RecvType::Unknown,
        }
    }

    // ---- bindings ----------------------------------------------------

    fn binding_for_receiver(&mut self, m: &MethodInfo, recv: &Expr) -> Option<String> {
        match recv {
            Expr::Ident(n) if Self::is_local(m, n) => self.resolve_strong_pointer(m, n).bound_type,
            Expr::Ident(n) => {
                let (class, _) = self.visible_field(m, n)?;
                self.resolve_member_variable(&class, n).bound_type
            }
            Expr::FieldAccess { base, field } if matches!(&**base, Expr::Ident(t) if t == "this") => {
                let (class, _) = self.visible_field(m, field)?;
                self.resolve_member_variable(&class, field).bound_type
            }
            Expr::Call { .. } | Expr::New { .. } => self.trace(recv, m).map(|(t, _)| t),
            _ => None,
        }
    }

    /// Trace what a local of `m` holds from its assignments and, through
    /// calls, from the returns of the called functions.
    pub fn resolve_strong_pointer(&mut self, m: &MethodInfo, name: &str) -> TypeBinding {
        let var = BindingVar::Local { method: m.key.clone(), name: name.to_string() };
        if let Some(b) = self.bindings.get(&var) {
            return b.clone();
        }
        if !self.in_progress.insert(var.clone()) {
            return unknown(var);
        }
        let values: Vec<Expr> = m.decl.values_assigned_to(name).into_iter().cloned().collect();
        let found: Vec<(String, Evidence)> = values.iter().filter_map(|v| self.trace(v, m)).collect();
        self.in_progress.remove(&var);
        let b = self.combine(var, found, None);
        self.bindings.insert(b.variable.clone(), b.clone());
        b
    }

    /// Scan every method of `class` (constructors first) for stores into
    /// `field` and trace the stored values.
    pub fn resolve_member_variable(&mut self, class: &str, field: &str) -> TypeBinding {
        let var = BindingVar::Field { class: class.to_string(), field: field.to_string() };
        if let Some(b) = self.bindings.get(&var) {
            return b.clone();
        }
        if !self.in_progress.insert(var.clone()) {
            return unknown(var);
        }
        let mut methods: Vec<&MethodInfo> = self.symtab.methods_of(class).collect();
        methods.sort_by_key(|mi| !mi.decl.is_constructor());
        let mut found = Vec::new();
        if let Some(init) = self
            .symtab
            .type_info(class)
            .and_then(|t| t.decl.fields.iter().find(|f| f.name == field))
            .and_then(|f| f.init.clone())
        {
            if let Some(ctor) = methods.first().copied() {
                found.extend(self.trace(&init, ctor));
            }
        }
        for mi in methods {
            if Self::is_local(mi, field) {
                continue;
            }
            let stored: Vec<Expr> = mi
                .decl
                .flat_statements()
                .into_iter()
                .filter_map(|s| match &s.kind {
                    StmtKind::Assign { target: Expr::Ident(n), value } if n == field => Some(value.clone()),
                    StmtKind::Assign { target: Expr::FieldAccess { base, field: f }, value }
                        if f == field && matches!(&**base, Expr::Ident(t) if t == "this") =>
                    {
                        Some(value.clone())
                    }
                    _ => None,
                })
                .collect();
            for v in &stored {
                found.extend(self.trace(v, mi));
            }
        }
        self.in_progress.remove(&var);
        let b = self.combine(var, found, Some(Evidence::MemberInit));
        self.bindings.insert(b.variable.clone(), b.clone());
        b
    }

    fn combine(&mut self, var: BindingVar, found: Vec<(String, Evidence)>, force: Option<Evidence>) -> TypeBinding {
        let types: BTreeSet<&String> = found.iter().map(|(t, _)| t).collect();
        match types.len() {
            0 => unknown(var),
            1 => TypeBinding {
                bound_type: Some(found[0].0.clone()),
                evidence: Some(force.unwrap_or(found[0].1)),
                variable: var,
            },
            _ => {
                let list: Vec<&str> = types.iter().map(|s| s.as_str()).collect();
                self.report("BINDING_CONFLICT", format!("BINDING_CONFLICT {var:?} -> {}", list.join(", ")));
                unknown(var)
            }
        }
    }

    fn trace(&mut self, v: &Expr, m: &MethodInfo) -> Option<(String, Evidence)> {
        if v.is_null() || self.depth > MAX_TRACE_DEPTH {
            return None;
        }
        self.depth += 1;
        let out = self.trace_inner(v, m);
        self.depth -= 1;
        out
    }

    fn trace_inner(&mut self, v: &Expr, m: &MethodInfo) -> Option<(String, Evidence)> {
        match v {
            Expr::New { type_name, .. } => {
                self.symtab.resolve_type(type_name, &m.scope()).map(|t| (t, Evidence::Constructor))
            }
            Expr::Call { callee, args, .. } if callee == "getService" || callee == "checkService" => {
                match args.first() {
                    Some(Expr::StrLit(id)) => self.registry.get(id).map(|c| (c.to_string(), Evidence::ServiceId)),
                    _ => None,
                }
            }
            Expr::Call { callee, args, .. } if TRANSPARENT.contains(&callee.as_str()) => {
                self.trace(args.first()?, m)
            }
            Expr::Ident(n) if Self::is_local(m, n) => {
                let b = self.resolve_strong_pointer(m, n);
                Some((b.bound_type?, b.evidence?))
            }
            Expr::Ident(n) => {
                let (class, _) = self.visible_field(m, n)?;
                let b = self.resolve_member_variable(&class, n);
                Some((b.bound_type?, b.evidence?))
            }
            Expr::FieldAccess { base, field } if matches!(&**base, Expr::Ident(t) if t == "this") => {
                let (class, _) = self.visible_field(m, field)?;
                let b = self.resolve_member_variable(&class, field);
                Some((b.bound_type?, b.evidence?))
            }
            Expr::Call { .. } => {
                let res = self.resolve_call(m, v);
                let mut found = BTreeSet::new();
                for t in res.targets {
                    let Some(callee) = self.method(&t) else { continue };
                    let returns: Vec<Expr> = callee
                        .decl
                        .flat_statements()
                        .into_iter()
                        .filter_map(|s| match &s.kind {
                            StmtKind::Return(Some(e)) => Some(e.clone()),
                            _ => None,
                        })
                        .collect();
                    for r in &returns {
                        if let Some((ty, _)) = self.trace(r, callee) {
                            found.insert(ty);
                        }
                    }
                }
                match found.len() {
                    1 => found.into_iter().next().map(|t| (t, Evidence::ReturnType)),
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

fn unknown(variable: BindingVar) -> TypeBinding {
    TypeBinding { variable, bound_type: None, evidence: None }
}
