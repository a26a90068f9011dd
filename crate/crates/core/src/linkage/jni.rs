use std::collections::BTreeSet;

use crate::diag::Diagnostic;
use crate::frontend::{Expr, GlobalDecl, JniTableEntry, Language, MethodRef, SourceUnit, SymbolTable};

use super::{EntryPointPair, MatchKey, PairKind};

const REGISTER_CALLS: &[&str] = &["RegisterMethodsOrDie", "registerNativeMethods", "jniRegisterNativeMethods"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JniRegistration {
    /// Slash-separated, as written.
    pub class_path: String,
    pub entries: Vec<JniTableEntry>,
    pub registering_function: String,
    pub path: String,
    pub line: u32,
}

/// Number of parameters in a JNI method descriptor such as
/// `(Ljava/lang/String;[II)V`, or `None` if it is malformed.
pub fn jni_arity(signature: &str) -> Option<usize> {
    let inner = signature.strip_prefix('(')?;
    let (params, ret) = inner.split_once(')')?;
    if ret.is_empty() {
        return None;
    }
    let mut chars = params.chars();
    let mut count = 0;
    while let Some(mut c) = chars.next() {
        while c == '[' {
            c = chars.next()?;
        }
        match c {
            'Z' | 'B' | 'C' | 'S' | 'I' | 'J' | 'F' | 'D' => {}
            'L' => {
                let mut closed = false;
                for d in chars.by_ref() {
                    if d == ';' {
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    return None;
                }
            }
            _ => return None,
        }
        count += 1;
    }
    Some(count)
}

fn find_global<'a>(units: &'a [SourceUnit], home: &'a SourceUnit, name: &str) -> Option<&'a GlobalDecl> {
    let named = |g: &&GlobalDecl| match g {
        GlobalDecl::JniTable { name: n, .. } | GlobalDecl::ClassPath { name: n, .. } => n == name,
    };
    home.globals.iter().find(named).or_else(|| {
        let hits: Vec<&GlobalDecl> = units.iter().flat_map(|u| u.globals.iter()).filter(named).collect();
        match hits.as_slice() {
            [only] => Some(*only),
            _ => None,
        }
    })
}

pub fn collect_jni_registrations(units: &[SourceUnit]) -> (Vec<JniRegistration>, Vec<Diagnostic>) {
    let mut regs = Vec::new();
    let mut diags = Vec::new();
    for unit in units.iter().filter(|u| u.language == Language::Cpp) {
        for m in unit.all_methods() {
            for stmt in m.flat_statements() {
                for call in stmt.own_calls() {
                    let Expr::Call { callee, args, .. } = call else { continue };
                    if !REGISTER_CALLS.contains(&callee.as_str()) {
                        continue;
                    }
                    let mut table = None;
                    let mut class_path = None;
                    for a in args {
                        match a {
                            Expr::StrLit(s) => class_path = Some(s.clone()),
                            Expr::Ident(n) => match find_global(units, unit, n) {
                                Some(GlobalDecl::JniTable { entries, .. }) => table = Some(entries.clone()),
                                Some(GlobalDecl::ClassPath { value, .. }) => class_path = Some(value.clone()),
                                None => {}
                            },
                            _ => {}
                        }
                    }
                    let function = MethodRef::of(m).to_string();
                    match (table, class_path) {
                        (Some(entries), Some(class_path)) => regs.push(JniRegistration {
                            class_path,
                            entries,
                            registering_function: function,
                            path: unit.path.clone(),
                            line: stmt.line,
                        }),
                        _ => diags.push(Diagnostic::new(
                            "INCOMPLETE_REGISTRATION",
                            format!("INCOMPLETE_REGISTRATION {callee} in {function} {}:{}", unit.path, stmt.line),
                        )),
                    }
                }
            }
        }
    }
    (regs, diags)
}

pub fn match_jni_pairs(units: &[SourceUnit], symtab: &SymbolTable) -> (Vec<EntryPointPair>, Vec<Diagnostic>) {
    let (regs, mut diags) = collect_jni_registrations(units);
    let mut pairs = Vec::new();
    let mut seen = BTreeSet::new();
    for reg in &regs {
        let class = reg.class_path.replace(['/', '$'], ".");
        for e in &reg.entries {
            let key = MatchKey::Jni {
                class_path: reg.class_path.clone(),
                java_name: e.java_name.clone(),
                signature: e.signature.clone(),
            };
            if seen.contains(&key) {
                continue;
            }
            let Some(arity) = jni_arity(&e.signature) else {
                diags.push(Diagnostic::new(
                    "BAD_SIGNATURE",
                    format!("BAD_SIGNATURE {:?} for {class}.{} {}:{}", e.signature, e.java_name, reg.path, reg.line),
                ));
                continue;
            };
            let java = MethodRef::new(Some(&class), &e.java_name, arity);
            let java_ok = symtab.lookup(&java).is_some_and(|m| m.language == Language::Java);
            if !java_ok {
                diags.push(Diagnostic::new(
                    "UNRESOLVED_JAVA_METHOD",
                    format!("UNRESOLVED_JAVA_METHOD {} {} {}:{}", reg.class_path, e.java_name, reg.path, reg.line),
                ));
            }
            let native = native_function(symtab, &e.native_function, &reg.path);
            if native.is_none() {
                diags.push(Diagnostic::new(
                    "UNRESOLVED_NATIVE_FUNCTION",
                    format!("UNRESOLVED_NATIVE_FUNCTION {} {}:{}", e.native_function, reg.path, reg.line),
                ));
            }
            if let (true, Some(native)) = (java_ok, native) {
                seen.insert(key.clone());
                pairs.push(EntryPointPair { kind: PairKind::Jni, match_key: key, java_method: java, native_method: native });
            }
        }
    }
    (pairs, diags)
}

/// A uniquely named native free function, preferring the registering unit.
fn native_function(symtab: &SymbolTable, name: &str, home: &str) -> Option<MethodRef> {
    let hits: Vec<_> = symtab
        .free_functions_named(name)
        .filter(|m| m.language == Language::Cpp && m.decl.body.is_some())
        .collect();
    if let Some(local) = hits.iter().find(|m| m.path == home) {
        return Some(local.key.clone());
    }
    match hits.as_slice() {
        [only] => Some(only.key.clone()),
        _ => None,
    }
}
