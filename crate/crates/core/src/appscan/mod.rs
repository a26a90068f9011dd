//! App auditing against a protection map: reachability, over-privilege and
//! component hijacking.

mod manifest;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::json;
use thiserror::Error;

pub use manifest::{
    load_permission_db, parse_manifest, AppManifest, ComponentDecl, ComponentKind, PermissionDb, ProtectionLevel,
    BUILTIN_PERMISSION_DB,
};

use crate::cfg::{RecvType, Resolver};
use crate::config::AnalysisConfig;
use crate::frontend::{build_symbol_table, Expr, FrontendError, MethodRef, SourceUnit, SymbolTable, SyntaxError, Visibility};
use crate::linkage::ServiceRegistry;
use crate::mapping::{app_assumptions, ProtectionMap};
use crate::pipeline::{parse_all, read_sources};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("{path}: {why}")]
    Io { path: PathBuf, why: String },
    #[error("{file}: {pointer}: {why}")]
    Schema { file: String, pointer: String, why: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("no protection level known for {0}")]
    UnknownPermissionLevel(String),
}

impl ScanError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScanError::Io { .. } => 3,
            ScanError::Syntax(_) | ScanError::Frontend(_) => 2,
            ScanError::Schema { .. } | ScanError::UnknownPermissionLevel(_) => 4,
        }
    }
}

pub struct AppBundle {
    pub dir: PathBuf,
    pub manifest: AppManifest,
    pub units: Vec<SourceUnit>,
    pub symtab: SymbolTable,
}

impl AppBundle {
    pub fn from_parts(dir: &Path, manifest: AppManifest, units: Vec<SourceUnit>) -> Result<AppBundle, ScanError> {
        let symtab = build_symbol_table(&units)?;
        for (i, c) in manifest.components.iter().enumerate() {
            for (j, m) in c.entry_methods.iter().enumerate() {
                if symtab.lookup(m).is_none() {
                    return Err(ScanError::Schema {
                        file: dir.join("manifest.json").display().to_string(),
                        pointer: format!("/components/{i}/entry_methods/{j}"),
                        why: format!("{m} is not defined in the app code"),
                    });
                }
            }
        }
        Ok(AppBundle { dir: dir.to_path_buf(), manifest, units, symtab })
    }

    /// `manifest.json` plus `src/**/*.mjava`.
    pub fn load(dir: &Path) -> Result<AppBundle, ScanError> {
        let mpath = dir.join("manifest.json");
        let text = fs::read_to_string(&mpath).map_err(|e| ScanError::Io { path: mpath.clone(), why: e.to_string() })?;
        let manifest = parse_manifest(&text, &mpath.display().to_string())?;
        let files = read_sources(dir, &dir.join("src"), &["mjava"]).map_err(|e| ScanError::Io {
            path: dir.to_path_buf(),
            why: e.to_string(),
        })?;
        let units = parse_all(&files)?;
        Self::from_parts(dir, manifest, units)
    }

    /// Public bodied methods of the app plus every component entry.
    pub fn whole_app_start(&self) -> Vec<MethodRef> {
        let mut out: BTreeSet<MethodRef> = self
            .symtab
            .methods
            .values()
            .filter(|m| m.decl.body.is_some() && m.decl.visibility == Visibility::Public)
            .map(|m| m.key.clone())
            .collect();
        for c in &self.manifest.components {
            out.extend(c.entry_methods.iter().cloned());
        }
        out.into_iter().collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reach {
    pub apis: BTreeSet<MethodRef>,
    pub truncated: bool,
}

/// Map keys that a call to `r` (outside the app) may denote.
fn map_key_for(r: &MethodRef, keys: &BTreeMap<MethodRef, ()>) -> Option<MethodRef> {
    if keys.contains_key(r) {
        return Some(r.clone());
    }
    let owner = r.owner.as_deref()?;
    if owner.contains('.') {
        return None;
    }
    // Unqualified type name: accept a unique map key with that simple owner.
    let mut hits = keys.keys().filter(|k| {
        k.name == r.name
            && k.arity == r.arity
            && k.owner.as_deref().is_some_and(|o| o.rsplit('.').next() == Some(owner))
    });
    let first = hits.next()?;
    hits.next().is_none().then(|| first.clone())
}

/// Forward call-graph closure over the app code from `start`, collecting
/// the mapped APIs it calls.
pub fn reachable_apis(app: &AppBundle, start: &[MethodRef], map: &ProtectionMap, budget: Duration) -> Reach {
    let began = Instant::now();
    let keys: BTreeMap<MethodRef, ()> = map.entries.iter().map(|e| (e.api.clone(), ())).collect();
    let registry = ServiceRegistry::default();
    let config = AnalysisConfig::default();
    let mut resolver = Resolver::new(&app.symtab, &registry, &config);
    let mut reach = Reach::default();
    let mut seen = BTreeSet::new();
    let mut work: Vec<MethodRef> = start.iter().rev().cloned().collect();
    while let Some(k) = work.pop() {
        if began.elapsed() > budget {
            reach.truncated = true;
            break;
        }
        if !seen.insert(k.clone()) {
            continue;
        }
        let Some(m) = app.symtab.lookup(&k) else { continue };
        let mut found = Vec::new();
        for s in m.decl.flat_statements() {
            for c in s.own_calls() {
                let res = resolver.resolve_call(m, c);
                found.extend(res.targets);
                if let Some(ext) = res.external {
                    reach.apis.extend(map_key_for(&ext, &keys));
                }
            }
            for e in s.own_exprs() {
                let mut news = Vec::new();
                e.for_each_new(&mut |t, args| news.push((t.to_string(), args.to_vec())));
                for (t, args) in news {
                    let arity = args.len();
                    let expr = Expr::New { type_name: t, args };
                    match resolver.type_of(&expr, m) {
                        RecvType::Known(t) => {
                            let simple = t.rsplit('.').next().unwrap_or(&t).to_string();
                            found.extend(app.symtab.lookup_parts(&t, &simple, arity).map(|c| c.key.clone()));
                        }
                        RecvType::External(t) => {
                            let simple = t.rsplit('.').next().unwrap_or(&t).to_string();
                            reach.apis.extend(map_key_for(&MethodRef::new(Some(&t), &simple, arity), &keys));
                        }
                        RecvType::Unknown => {}
                    }
                }
            }
        }
        work.extend(found.into_iter().filter(|t| !seen.contains(t)));
    }
    reach
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FindingKind {
    OverPrivilege,
    ComponentHijacking,
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingKind::OverPrivilege => "OVER_PRIVILEGE",
            FindingKind::ComponentHijacking => "COMPONENT_HIJACKING",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Finding {
    pub app: String,
    pub kind: FindingKind,
    pub subject: String,
    pub detail: Vec<String>,
    pub evidence: Vec<String>,
    pub truncated: bool,
}

/// Permissions an app still needs for `api` once PID/UID atoms are ruled out.
pub fn required_permissions(map: &ProtectionMap, api: &MethodRef) -> BTreeSet<String> {
    map.get(api).map(|e| e.condition.simplify(&app_assumptions).permissions()).unwrap_or_default()
}

/// Every permission named by the map or the manifest must have a level.
pub fn check_levels(manifest: &AppManifest, map: &ProtectionMap, db: &PermissionDb) -> Result<(), ScanError> {
    let mut names: BTreeSet<String> = manifest.uses_permissions.clone();
    for c in &manifest.components {
        names.extend(c.guard_permissions.iter().cloned());
    }
    names.extend(map.entries.iter().flat_map(|e| e.condition.permissions()));
    names.iter().try_for_each(|p| db.level(p).map(drop))
}

pub fn detect_over_privilege(
    app: &AppBundle,
    map: &ProtectionMap,
    db: &PermissionDb,
    budget: Duration,
) -> Result<Vec<Finding>, ScanError> {
    check_levels(&app.manifest, map, db)?;
    let reach = reachable_apis(app, &app.whole_app_start(), map, budget);
    if reach.truncated {
        log::warn!("{}: reachability budget exhausted, over-privilege findings suppressed", app.manifest.package);
        return Ok(Vec::new());
    }
    let used: BTreeSet<String> = reach.apis.iter().flat_map(|a| required_permissions(map, a)).collect();
    Ok(app
        .manifest
        .uses_permissions
        .difference(&used)
        .map(|p| Finding {
            app: app.manifest.package.clone(),
            kind: FindingKind::OverPrivilege,
            subject: p.clone(),
            detail: Vec::new(),
            evidence: Vec::new(),
            truncated: false,
        })
        .collect())
}

pub fn detect_component_hijacking(
    app: &AppBundle,
    map: &ProtectionMap,
    db: &PermissionDb,
    budget: Duration,
) -> Result<Vec<Finding>, ScanError> {
    check_levels(&app.manifest, map, db)?;
    let mut out = Vec::new();
    for c in app.manifest.components.iter().filter(|c| c.exported) {
        let reach = reachable_apis(app, &c.entry_methods, map, budget);
        let mut p_r = BTreeSet::new();
        for api in &reach.apis {
            for p in required_permissions(map, api) {
                if db.level(&p)? == ProtectionLevel::Dangerous {
                    p_r.insert(p);
                }
            }
        }
        let mut signature_guarded = false;
        for p in &c.guard_permissions {
            signature_guarded |= db.level(p)? == ProtectionLevel::Signature;
        }
        if p_r.is_subset(&c.guard_permissions) || signature_guarded {
            continue;
        }
        let exposed: BTreeSet<String> = p_r.difference(&c.guard_permissions).cloned().collect();
        let evidence = reach
            .apis
            .iter()
            .filter(|a| required_permissions(map, a).iter().any(|p| exposed.contains(p)))
            .map(ToString::to_string)
            .collect();
        out.push(Finding {
            app: app.manifest.package.clone(),
            kind: FindingKind::ComponentHijacking,
            subject: c.name.clone(),
            detail: exposed.into_iter().collect(),
            evidence,
            truncated: reach.truncated,
        });
    }
    Ok(out)
}

/// Both detectors, findings sorted.
pub fn scan_app(app: &AppBundle, map: &ProtectionMap, db: &PermissionDb, config: &AnalysisConfig) -> Result<Vec<Finding>, ScanError> {
    let budget = Duration::from_secs_f64(config.reach_budget_seconds.max(0.0));
    let mut findings = detect_over_privilege(app, map, db, budget)?;
    findings.extend(detect_component_hijacking(app, map, db, budget)?);
    findings.sort();
    Ok(findings)
}

pub fn findings_json_bytes(app: &str, findings: &[Finding]) -> Vec<u8> {
    let list: Vec<_> = findings
        .iter()
        .map(|f| {
            json!({
                "kind": f.kind.to_string(),
                "subject": f.subject,
                "detail": f.detail,
                "evidence": f.evidence,
                "truncated": f.truncated,
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&json!({"app": app, "findings": list})).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// One row per finding; list fields are `;`-joined.
pub fn findings_csv_bytes(findings: &[Finding]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["app", "kind", "subject", "detail", "evidence", "truncated"]).expect("in-memory write");
    for f in findings {
        w.write_record([
            f.app.clone(),
            f.kind.to_string(),
            f.subject.clone(),
            f.detail.join(";"),
            f.evidence.join(";"),
            f.truncated.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}
