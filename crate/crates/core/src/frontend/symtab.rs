//! Corpus-wide index of types and methods.
//!
//! Lookups that cannot be answered unambiguously return `None` (the UNKNOWN
//! entry); nothing here ever picks "the first of several" candidates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::java::qualify;
use super::FrontendError;

/// `(owner, name, arity)`; owner is `None` for free functions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodRef {
    pub owner: Option<String>,
    pub name: String,
    pub arity: usize,
}

impl MethodRef {
    pub fn new(owner: Option<&str>, name: &str, arity: usize) -> Self {
        MethodRef { owner: owner.map(str::to_string), name: name.to_string(), arity }
    }

    pub fn of(decl: &MethodDecl) -> Self {
        MethodRef { owner: decl.owner.clone(), name: decl.name.clone(), arity: decl.arity() }
    }

    /// Parse `pkg.Class.method/arity`. A name without dots is a free function.
    pub fn parse(text: &str) -> Option<Self> {
        let (path, arity) = text.rsplit_once('/')?;
        let arity = arity.parse().ok()?;
        let (owner, name) = match path.rsplit_once('.') {
            Some((o, n)) => (Some(o.to_string()), n.to_string()),
            None => (None, path.to_string()),
        };
        let valid = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '$' || c == '.');
        if !valid(&name) || owner.as_deref().is_some_and(|o| !valid(o) || o.ends_with('.')) {
            return None;
        }
        Some(MethodRef { owner, name, arity })
    }

    pub fn fqn(&self) -> String {
        match &self.owner {
            Some(o) => format!("{o}.{}", self.name),
            None => self.name.clone(),
        }
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.fqn(), self.arity)
    }
}

/// Name-resolution context: where a type name is written.
#[derive(Debug, Clone)]
pub struct Scope {
    pub language: Language,
    pub package: String,
    pub imports: Vec<String>,
    /// Innermost enclosing type, if any.
    pub enclosing: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TypeInfo {
    pub fqn: String,
    pub decl: TypeDecl,
    pub language: Language,
    pub path: String,
    pub package: String,
    pub imports: Vec<String>,
    pub enclosing: Option<String>,
}

impl TypeInfo {
    pub fn scope(&self) -> Scope {
        Scope {
            language: self.language,
            package: self.package.clone(),
            imports: self.imports.clone(),
            enclosing: Some(self.fqn.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodInfo {
    pub key: MethodRef,
    pub decl: MethodDecl,
    pub language: Language,
    pub path: String,
    pub package: String,
    pub imports: Vec<String>,
}

impl MethodInfo {
    pub fn scope(&self) -> Scope {
        Scope {
            language: self.language,
            package: self.package.clone(),
            imports: self.imports.clone(),
            enclosing: self.key.owner.clone(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    pub types: BTreeMap<String, TypeInfo>,
    pub methods: BTreeMap<MethodRef, MethodInfo>,
    /// Resolved extends/implements edges, child → parents.
    pub hierarchy: BTreeMap<String, Vec<String>>,
    /// Supertype names as written, for types outside the corpus.
    pub raw_parents: BTreeMap<String, Vec<String>>,
}

pub fn build_symbol_table(units: &[SourceUnit]) -> Result<SymbolTable, FrontendError> {
    let mut table = SymbolTable::default();
    for unit in units {
        for ty in &unit.types {
            table.add_type(unit, ty, &unit.package, None)?;
        }
        for f in &unit.free_functions {
            table.add_method(unit, f);
        }
    }
    let edges: Vec<(String, Vec<String>)> = table
        .types
        .values()
        .map(|t| {
            let scope = Scope { enclosing: t.enclosing.clone(), ..t.scope() };
            let parents = t.decl.supertypes().filter_map(|s| table.resolve_type(s, &scope)).collect();
            (t.fqn.clone(), parents)
        })
        .collect();
    table.hierarchy = edges.into_iter().collect();
    Ok(table)
}

impl SymbolTable {
    fn add_type(
        &mut self,
        unit: &SourceUnit,
        ty: &TypeDecl,
        prefix: &str,
        enclosing: Option<&str>,
    ) -> Result<(), FrontendError> {
        let fqn = qualify(prefix, &ty.name);
        if self.types.contains_key(&fqn) {
            return Err(FrontendError::DuplicateType(fqn));
        }
        for m in &ty.methods {
            self.add_method(unit, m);
        }
        for n in &ty.nested {
            self.add_type(unit, n, &fqn, Some(&fqn))?;
        }
        self.raw_parents.insert(fqn.clone(), ty.supertypes().cloned().collect());
        let info = TypeInfo {
            fqn: fqn.clone(),
            decl: TypeDecl { nested: Vec::new(), ..ty.clone() },
            language: unit.language,
            path: unit.path.clone(),
            package: unit.package.clone(),
            imports: unit.imports.clone(),
            enclosing: enclosing.map(str::to_string),
        };
        self.types.insert(fqn, info);
        Ok(())
    }

    fn add_method(&mut self, unit: &SourceUnit, m: &MethodDecl) {
        let key = MethodRef::of(m);
        if let Some(existing) = self.methods.get(&key) {
            // A bodied definition wins over a bare declaration.
            if existing.decl.body.is_some() || m.body.is_none() {
                return;
            }
        }
        let info = MethodInfo {
            key: key.clone(),
            decl: m.clone(),
            language: unit.language,
            path: unit.path.clone(),
            package: unit.package.clone(),
            imports: unit.imports.clone(),
        };
        self.methods.insert(key, info);
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty() && self.methods.is_empty()
    }

    pub fn lookup(&self, key: &MethodRef) -> Option<&MethodInfo> {
        self.methods.get(key)
    }

    pub fn lookup_parts(&self, owner: &str, name: &str, arity: usize) -> Option<&MethodInfo> {
        self.methods.get(&MethodRef::new(Some(owner), name, arity))
    }

    pub fn type_info(&self, fqn: &str) -> Option<&TypeInfo> {
        self.types.get(fqn)
    }

    /// Resolve a type name as written at `scope` to a corpus fqn.
    pub fn resolve_type(&self, written: &str, scope: &Scope) -> Option<String> {
        let name = base_type_name(written).replace("::", ".");
        if name.is_empty() {
            return None;
        }
        if name.contains('.') && self.types.contains_key(&name) {
            return Some(name);
        }
        let (head, rest) = match name.split_once('.') {
            Some((h, r)) => (h, Some(r)),
            None => (name.as_str(), None),
        };
        let finish = |base: String| -> Option<String> {
            let full = match rest {
                Some(r) => format!("{base}.{r}"),
                None => base,
            };
            self.types.contains_key(&full).then_some(full)
        };
        // Nested types of the enclosing chain (and of the chain's supertypes).
        let mut outer = scope.enclosing.clone();
        while let Some(e) = outer {
            for t in std::iter::once(e.clone()).chain(self.ancestors(&e)) {
                if let Some(hit) = finish(format!("{t}.{head}")) {
                    return Some(hit);
                }
            }
            outer = self.types.get(&e).and_then(|t| t.enclosing.clone());
        }
        let suffix = format!(".{head}");
        for imp in &scope.imports {
            if imp.ends_with(&suffix) {
                if let Some(hit) = finish(imp.clone()) {
                    return Some(hit);
                }
            }
        }
        if let Some(hit) = finish(qualify(&scope.package, head)) {
            return Some(hit);
        }
        for imp in &scope.imports {
            if let Some(pkg) = imp.strip_suffix(".*") {
                if let Some(hit) = finish(format!("{pkg}.{head}")) {
                    return Some(hit);
                }
            }
        }
        if let Some(hit) = finish(head.to_string()) {
            return Some(hit);
        }
        // Last resort: a unique top-level type of that simple name in the
        // same language (namespaces in the native dialect are loose).
        let candidates: Vec<&TypeInfo> = self
            .types
            .values()
            .filter(|t| t.decl.name == head && t.enclosing.is_none() && t.language == scope.language)
            .collect();
        match candidates.as_slice() {
            [only] => finish(only.fqn.clone()),
            _ => None,
        }
    }

    pub fn parents(&self, fqn: &str) -> &[String] {
        self.hierarchy.get(fqn).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Proper supertypes, breadth-first, each once.
    pub fn ancestors(&self, fqn: &str) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut queue: VecDeque<&str> = self.parents(fqn).iter().map(String::as_str).collect();
        while let Some(t) = queue.pop_front() {
            if t == fqn || !seen.insert(t.to_string()) {
                continue;
            }
            out.push(t.to_string());
            queue.extend(self.parents(t).iter().map(String::as_str));
        }
        out
    }

    pub fn is_subtype(&self, child: &str, parent: &str) -> bool {
        child == parent || self.ancestors(child).iter().any(|a| a == parent)
    }

    /// Concrete classes that are proper subtypes of `fqn`, sorted.
    pub fn implementers(&self, fqn: &str) -> Vec<String> {
        self.types
            .values()
            .filter(|t| t.decl.kind == TypeKind::Class && t.fqn != fqn && self.is_subtype(&t.fqn, fqn))
            .map(|t| t.fqn.clone())
            .collect()
    }

    /// `name/arity` on `fqn` or the nearest supertype declaring it.
    pub fn find_method(&self, fqn: &str, name: &str, arity: usize) -> Option<&MethodInfo> {
        std::iter::once(fqn.to_string())
            .chain(self.ancestors(fqn))
            .find_map(|t| self.lookup_parts(&t, name, arity))
    }

    /// Like [`find_method`](Self::find_method) but skips body-less declarations.
    pub fn find_bodied_method(&self, fqn: &str, name: &str, arity: usize) -> Option<&MethodInfo> {
        std::iter::once(fqn.to_string())
            .chain(self.ancestors(fqn))
            .filter_map(|t| self.lookup_parts(&t, name, arity))
            .find(|m| m.decl.body.is_some())
    }

    /// Field on `fqn` or a supertype: (declaring type, field).
    pub fn find_field(&self, fqn: &str, name: &str) -> Option<(&str, &FieldDecl)> {
        std::iter::once(fqn.to_string()).chain(self.ancestors(fqn)).find_map(|t| {
            let info = self.types.get(&t)?;
            info.decl.fields.iter().find(|f| f.name == name).map(|f| (info.fqn.as_str(), f))
        })
    }

    pub fn methods_of<'a>(&'a self, fqn: &'a str) -> impl Iterator<Item = &'a MethodInfo> + 'a {
        self.methods.values().filter(move |m| m.key.owner.as_deref() == Some(fqn))
    }

    pub fn free_functions_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a MethodInfo> + 'a {
        self.methods.values().filter(move |m| m.key.owner.is_none() && m.key.name == name)
    }
}
