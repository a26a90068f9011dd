//! App manifest and permission-level database formats.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{Map, Value};

use super::ScanError;
use crate::frontend::MethodRef;
use crate::mapping::valid_permission_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ComponentKind {
    Activity,
    Service,
    Receiver,
    Provider,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecl {
    pub name: String,
    pub kind: ComponentKind,
    pub exported: bool,
    pub guard_permissions: BTreeSet<String>,
    pub entry_methods: Vec<MethodRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppManifest {
    pub package: String,
    pub uses_permissions: BTreeSet<String>,
    pub components: Vec<ComponentDecl>,
}

fn err(file: &str, pointer: impl Into<String>, why: impl Into<String>) -> ScanError {
    ScanError::Schema { file: file.to_string(), pointer: pointer.into(), why: why.into() }
}

struct Obj<'a> {
    file: &'a str,
    at: String,
    map: &'a Map<String, Value>,
}

impl<'a> Obj<'a> {
    fn new(file: &'a str, at: String, v: &'a Value, keys: &[&str]) -> Result<Self, ScanError> {
        let map = v.as_object().ok_or_else(|| err(file, &at, "expected object"))?;
        if let Some(k) = map.keys().find(|k| !keys.contains(&k.as_str())) {
            return Err(err(file, format!("{at}/{k}"), "unknown key"));
        }
        Ok(Obj { file, at, map })
    }

    fn ptr(&self, k: &str) -> String {
        format!("{}/{k}", self.at)
    }

    fn get(&self, k: &str) -> Result<&'a Value, ScanError> {
        self.map.get(k).ok_or_else(|| err(self.file, self.ptr(k), "missing"))
    }

    fn string(&self, k: &str) -> Result<&'a str, ScanError> {
        self.get(k)?.as_str().ok_or_else(|| err(self.file, self.ptr(k), "expected string"))
    }

    fn strings(&self, k: &str) -> Result<Vec<(String, &'a str)>, ScanError> {
        let arr = self.get(k)?.as_array().ok_or_else(|| err(self.file, self.ptr(k), "expected array"))?;
        arr.iter()
            .enumerate()
            .map(|(i, v)| {
                let at = format!("{}/{i}", self.ptr(k));
                v.as_str().map(|s| (at.clone(), s)).ok_or_else(|| err(self.file, at, "expected string"))
            })
            .collect()
    }

    fn permissions(&self, k: &str) -> Result<BTreeSet<String>, ScanError> {
        let mut out = BTreeSet::new();
        for (at, p) in self.strings(k)? {
            if !valid_permission_name(p) {
                return Err(err(self.file, at, format!("invalid permission name {p:?}")));
            }
            out.insert(p.to_string());
        }
        Ok(out)
    }
}

pub fn parse_manifest(text: &str, file: &str) -> Result<AppManifest, ScanError> {
    let v: Value = serde_json::from_str(text).map_err(|e| err(file, "", e.to_string()))?;
    let top = Obj::new(file, String::new(), &v, &["package", "uses_permissions", "components"])?;
    let package = top.string("package")?;
    if package.is_empty() || !package.split('.').all(|s| !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')) {
        return Err(err(file, "/package", "expected dotted name"));
    }
    let uses_permissions = top.permissions("uses_permissions")?;
    let list = top.get("components")?.as_array().ok_or_else(|| err(file, "/components", "expected array"))?;
    let mut components = Vec::new();
    let mut names = BTreeSet::new();
    for (i, c) in list.iter().enumerate() {
        let o = Obj::new(
            file,
            format!("/components/{i}"),
            c,
            &["name", "kind", "exported", "guard_permissions", "entry_methods"],
        )?;
        let name = o.string("name")?.to_string();
        if !names.insert(name.clone()) {
            return Err(err(file, o.ptr("name"), format!("duplicate component {name}")));
        }
        let kind = match o.string("kind")? {
            "activity" => ComponentKind::Activity,
            "service" => ComponentKind::Service,
            "receiver" => ComponentKind::Receiver,
            "provider" => ComponentKind::Provider,
            other => return Err(err(file, o.ptr("kind"), format!("unknown component kind {other:?}"))),
        };
        let exported = o.get("exported")?.as_bool().ok_or_else(|| err(file, o.ptr("exported"), "expected boolean"))?;
        let guard_permissions = o.permissions("guard_permissions")?;
        let mut entry_methods = Vec::new();
        for (at, s) in o.strings("entry_methods")? {
            entry_methods.push(MethodRef::parse(s).ok_or_else(|| err(file, at, "expected pkg.Class.method/arity"))?);
        }
        components.push(ComponentDecl { name, kind, exported, guard_permissions, entry_methods });
    }
    Ok(AppManifest { package: package.to_string(), uses_permissions, components })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProtectionLevel {
    Normal,
    Dangerous,
    Signature,
}

impl fmt::Display for ProtectionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtectionLevel::Normal => "NORMAL",
            ProtectionLevel::Dangerous => "DANGEROUS",
            ProtectionLevel::Signature => "SIGNATURE",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PermissionDb {
    pub levels: BTreeMap<String, ProtectionLevel>,
}

/// Levels of the permissions known to be enforced in native code.
pub const BUILTIN_PERMISSION_DB: &str = r#"{
  "android.permission.ACCESS_DRM_CERTIFICATES": "SIGNATURE",
  "android.permission.ACCESS_FM_RADIO": "SIGNATURE",
  "android.permission.ACCESS_SURFACE_FLINGER": "SIGNATURE",
  "android.permission.CAMERA": "DANGEROUS",
  "android.permission.CAPTURE_AUDIO_HOTWORD": "SIGNATURE",
  "android.permission.CONTROL_WIFI_DISPLAY": "SIGNATURE",
  "android.permission.INTERNET": "NORMAL",
  "android.permission.LOCATION_HARDWARE": "SIGNATURE",
  "android.permission.MODIFY_AUDIO_ROUTING": "SIGNATURE",
  "android.permission.MODIFY_AUDIO_SETTINGS": "NORMAL",
  "android.permission.READ_FRAME_BUFFER": "SIGNATURE",
  "android.permission.RECORD_AUDIO": "DANGEROUS"
}
"#;

impl PermissionDb {
    pub fn builtin() -> PermissionDb {
        load_permission_db(BUILTIN_PERMISSION_DB, "<builtin>").expect("builtin db is valid")
    }

    pub fn level(&self, permission: &str) -> Result<ProtectionLevel, ScanError> {
        self.levels.get(permission).copied().ok_or_else(|| ScanError::UnknownPermissionLevel(permission.to_string()))
    }
}

pub fn load_permission_db(text: &str, file: &str) -> Result<PermissionDb, ScanError> {
    let v: Value = serde_json::from_str(text).map_err(|e| err(file, "", e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| err(file, "", "expected object"))?;
    let mut levels = BTreeMap::new();
    for (name, level) in obj {
        let at = format!("/{}", name.replace('~', "~0").replace('/', "~1"));
        if !valid_permission_name(name) {
            return Err(err(file, at, "invalid permission name"));
        }
        let level = match level.as_str().map(str::to_ascii_uppercase).as_deref() {
            Some("NORMAL") => ProtectionLevel::Normal,
            Some("DANGEROUS") => ProtectionLevel::Dangerous,
            Some("SIGNATURE") => ProtectionLevel::Signature,
            _ => return Err(err(file, at, format!("unknown protection level {level}"))),
        };
        levels.insert(name.clone(), level);
    }
    Ok(PermissionDb { levels })
}
