use std::collections::BTreeMap;

use crate::diag::Diagnostic;
use crate::frontend::{Expr, Language, MethodInfo, SourceUnit, SymbolTable};

use super::LinkageError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub class: String,
    pub path: String,
    pub line: u32,
}

/// Service identifier → implementing class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServiceRegistry {
    pub entries: BTreeMap<String, RegistryEntry>,
}

impl ServiceRegistry {
    pub fn get(&self, identifier: &str) -> Option<&str> {
        self.entries.get(identifier).map(|e| e.class.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn collect_service_registry(
    _units: &[SourceUnit],
    symtab: &SymbolTable,
) -> Result<(ServiceRegistry, Vec<Diagnostic>), LinkageError> {
    let mut registry = ServiceRegistry::default();
    let mut diags = Vec::new();
    for m in symtab.methods.values() {
        for stmt in m.decl.flat_statements() {
            for call in stmt.own_calls() {
                let Expr::Call { receiver: Some(recv), callee, args } = call else { continue };
                if callee != "addService" || args.len() < 2 || !is_service_manager(recv, m) {
                    continue;
                }
                let Expr::StrLit(identifier) = &args[0] else { continue };
                let Some(class) = service_class(&args[1], m, symtab) else {
                    diags.push(Diagnostic::new(
                        "UNRESOLVED_SERVICE_CLASS",
                        format!("UNRESOLVED_SERVICE_CLASS {identifier:?} {}:{}", m.path, stmt.line),
                    ));
                    continue;
                };
                match registry.entries.get(identifier) {
                    Some(existing) if existing.class != class => {
                        return Err(LinkageError::ConflictingRegistration {
                            identifier: identifier.clone(),
                            first: existing.class.clone(),
                            second: class,
                        });
                    }
                    Some(_) => {}
                    None => {
                        registry.entries.insert(
                            identifier.clone(),
                            RegistryEntry { class, path: m.path.clone(), line: stmt.line },
                        );
                    }
                }
            }
        }
    }
    Ok((registry, diags))
}

fn is_service_manager(recv: &Expr, m: &MethodInfo) -> bool {
    match m.language {
        Language::Java => recv
            .dotted_path()
            .is_some_and(|p| p == "ServiceManager" || p.ends_with(".ServiceManager")),
        Language::Cpp => match recv {
            Expr::Call { .. } => calls_default_service_manager(recv),
            Expr::Ident(name) => m.decl.values_assigned_to(name).into_iter().any(calls_default_service_manager),
            _ => false,
        },
    }
}

fn calls_default_service_manager(e: &Expr) -> bool {
    let mut found = false;
    e.for_each_call(&mut |c| {
        if matches!(c, Expr::Call { callee, .. } if callee == "defaultServiceManager") {
            found = true;
        }
    });
    found
}

fn service_class(arg: &Expr, m: &MethodInfo, symtab: &SymbolTable) -> Option<String> {
    let scope = m.scope();
    match arg {
        Expr::New { type_name, .. } => symtab.resolve_type(type_name, &scope),
        Expr::Ident(name) => {
            let declared = m.decl.local_type(name).map(str::to_string).or_else(|| {
                let owner = m.key.owner.as_deref()?;
                symtab.find_field(owner, name).map(|(_, f)| f.declared_type.clone())
            })?;
            symtab.resolve_type(&declared, &scope)
        }
        _ => None,
    }
}
