use std::collections::{BTreeMap, BTreeSet};

use crate::diag::Diagnostic;
use crate::frontend::{
    base_type_name, Expr, Language, MethodInfo, MethodRef, SourceUnit, StmtKind, SymbolTable, TypeInfo, TypeKind,
};

use super::{unmatched, EntryPointPair, MatchKey, PairKind, ServiceRegistry};

const LOOKUP_CALLS: &[&str] = &["getService", "checkService"];

fn calls_named(m: &MethodInfo, name: &str) -> bool {
    m.decl.flat_statements().iter().any(|s| {
        s.own_calls().iter().any(|c| matches!(c, Expr::Call { callee, .. } if callee == name))
    })
}

fn called_names(m: &MethodInfo) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in m.decl.flat_statements() {
        for c in s.own_calls() {
            if let Expr::Call { callee, .. } = c {
                out.insert(callee.clone());
            }
        }
    }
    out
}

/// A type any of whose methods calls `transact`: a proxy, never a service.
fn is_proxy(symtab: &SymbolTable, fqn: &str) -> bool {
    symtab.methods_of(fqn).any(|m| calls_named(m, "transact"))
}

/// Java `I<X>` interfaces with a nested class that calls `transact`.
fn remote_interfaces(symtab: &SymbolTable) -> Vec<&TypeInfo> {
    symtab
        .types
        .values()
        .filter(|t| t.language == Language::Java && t.decl.kind == TypeKind::Interface)
        .filter(|t| {
            let mut chars = t.decl.name.chars();
            chars.next() == Some('I') && chars.next().is_some_and(|c| c.is_ascii_uppercase())
        })
        .filter(|t| {
            let prefix = format!("{}.", t.fqn);
            symtab.types.keys().any(|k| k.starts_with(&prefix) && is_proxy(symtab, k))
        })
        .collect()
}

fn written_base(name: &str) -> String {
    let b = base_type_name(name);
    let b = b.split('<').next().unwrap_or(&b).to_string();
    b.rsplit(['.', ':']).next().unwrap_or(&b).to_string()
}

/// Whether `class` (or something it derives from) follows the
/// `X` / `Bn<X>` / `I<X>` naming convention for interface `iface`.
fn follows_naming(symtab: &SymbolTable, class: &str, iface: &str) -> bool {
    let x = &iface[1..];
    let wanted = [x.to_string(), format!("Bn{x}"), iface.to_string()];
    let chain: Vec<String> = std::iter::once(class.to_string()).chain(symtab.ancestors(class)).collect();
    chain.iter().any(|t| {
        let mut names = vec![symtab.types.get(t).map(|i| i.decl.name.clone()).unwrap_or_default()];
        names.extend(symtab.raw_parents.get(t).into_iter().flatten().map(|r| written_base(r)));
        names.iter().any(|n| wanted.contains(n))
    })
}

/// Java methods whose `getService("id")` result is stored in an `iface`-typed value.
fn looked_up_as(symtab: &SymbolTable, iface: &TypeInfo) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for m in symtab.methods.values().filter(|m| m.language == Language::Java) {
        let scope = m.scope();
        let is_iface = |declared: &str| symtab.resolve_type(declared, &scope).as_deref() == Some(iface.fqn.as_str());
        for s in m.decl.flat_statements() {
            let (declared, value) = match &s.kind {
                StmtKind::VarDecl { declared_type, init: Some(v), .. } => (Some(declared_type.clone()), v),
                StmtKind::Assign { target, value } => {
                    let declared = match target {
                        Expr::Ident(n) => m.decl.local_type(n).map(str::to_string).or_else(|| field_type(symtab, m, n)),
                        Expr::FieldAccess { base, field } if matches!(&**base, Expr::Ident(b) if b == "this") => {
                            field_type(symtab, m, field)
                        }
                        _ => None,
                    };
                    (declared, value)
                }
                StmtKind::Return(Some(v)) => (Some(m.decl.return_type.clone()), v),
                _ => continue,
            };
            if !declared.is_some_and(|d| is_iface(&d)) {
                continue;
            }
            value.for_each_call(&mut |c| {
                if let Expr::Call { callee, args, .. } = c {
                    if LOOKUP_CALLS.contains(&callee.as_str()) {
                        if let Some(Expr::StrLit(id)) = args.first() {
                            out.insert(id.clone());
                        }
                    }
                }
            });
        }
    }
    out
}

fn field_type(symtab: &SymbolTable, m: &MethodInfo, name: &str) -> Option<String> {
    let owner = m.key.owner.as_deref()?;
    symtab.find_field(owner, name).map(|(_, f)| f.declared_type.clone())
}

pub fn match_aidl_pairs(
    _units: &[SourceUnit],
    symtab: &SymbolTable,
    registry: &ServiceRegistry,
) -> (Vec<EntryPointPair>, Vec<Diagnostic>) {
    let mut pairs = Vec::new();
    let mut diags = Vec::new();
    let handlers: Vec<&MethodInfo> =
        symtab.methods.values().filter(|m| m.key.name == "onTransact" && m.decl.body.is_some()).collect();
    let dispatch: BTreeMap<&MethodRef, BTreeSet<String>> = handlers.iter().map(|h| (&h.key, called_names(h))).collect();

    for iface in remote_interfaces(symtab) {
        let nested_prefix = format!("{}.", iface.fqn);
        let services: BTreeSet<&str> =
            looked_up_as(symtab, iface).iter().filter_map(|id| registry.get(id)).collect();
        for remote in symtab.methods_of(&iface.fqn).filter(|m| m.decl.body.is_none()) {
            let name = &remote.key.name;
            let arity = remote.key.arity;
            let mut candidates = BTreeSet::new();
            // (a) a class deriving from a type whose unit dispatches `name` from onTransact.
            for class in symtab.types.values() {
                if class.decl.kind != TypeKind::Class
                    || class.fqn.starts_with(&nested_prefix)
                    || is_proxy(symtab, &class.fqn)
                {
                    continue;
                }
                let Some(own) = symtab.lookup_parts(&class.fqn, name, arity) else { continue };
                if own.decl.body.is_none() || !follows_naming(symtab, &class.fqn, &iface.decl.name) {
                    continue;
                }
                let chain: BTreeSet<String> =
                    std::iter::once(class.fqn.clone()).chain(symtab.ancestors(&class.fqn)).collect();
                let dispatched = handlers.iter().any(|h| {
                    dispatch[&h.key].contains(name)
                        && chain.iter().any(|t| symtab.types.get(t).is_some_and(|ti| ti.path == h.path))
                });
                if dispatched {
                    candidates.insert(own.key.clone());
                }
            }
            // (b) the registry target of an identifier looked up as this interface.
            for class in &services {
                if is_proxy(symtab, class) {
                    continue;
                }
                if let Some(m) = symtab.find_bodied_method(class, name, arity) {
                    candidates.insert(m.key.clone());
                }
            }
            if candidates.is_empty() {
                diags.push(unmatched(PairKind::Aidl, "JAVA", &remote.key, &remote.path, remote.decl.line));
                continue;
            }
            if candidates.len() > 1 {
                let list: Vec<String> = candidates.iter().map(ToString::to_string).collect();
                diags.push(Diagnostic::new(
                    "AMBIGUOUS",
                    format!("AMBIGUOUS AIDL {} -> {}", remote.key, list.join(", ")),
                ));
            }
            for native in candidates {
                pairs.push(EntryPointPair {
                    kind: PairKind::Aidl,
                    match_key: MatchKey::Aidl {
                        interface: iface.fqn.clone(),
                        method: name.clone(),
                        arity,
                        native_owner: native.owner.clone().unwrap_or_default(),
                    },
                    java_method: remote.key.clone(),
                    native_method: native,
                });
            }
        }
    }

    for h in handlers.iter().filter(|h| h.language == Language::Cpp) {
        let used = pairs.iter().any(|p| {
            dispatch[&h.key].contains(&p.native_method.name)
                && p.native_method.owner.as_deref().is_some_and(|o| {
                    std::iter::once(o.to_string())
                        .chain(symtab.ancestors(o))
                        .any(|t| symtab.types.get(&t).is_some_and(|ti| ti.path == h.path))
                })
        });
        if !used {
            diags.push(unmatched(PairKind::Aidl, "NATIVE", &h.key, &h.path, h.decl.line));
        }
    }
    pairs.sort();
    (pairs, diags)
}
