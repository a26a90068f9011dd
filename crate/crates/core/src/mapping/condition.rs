//! Boolean protection conditions over check atoms.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckAtom {
    Permission(String),
    /// Caller UID equals the named constant, e.g. `AID_SYSTEM`.
    UidEq(String),
    /// Caller PID equals the service's own PID.
    PidSelf,
}

impl fmt::Display for CheckAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckAtom::Permission(p) => f.write_str(p),
            CheckAtom::UidEq(c) => write!(f, "uid == {c}"),
            CheckAtom::PidSelf => f.write_str("callingPid == getpid()"),
        }
    }
}

pub fn valid_permission_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// `True` and `Unsatisfiable` only ever appear as whole-condition values
/// once normalized.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    True,
    Unsatisfiable,
    Atom(CheckAtom),
    And(Vec<Condition>),
    Or(Vec<Condition>),
}

impl Condition {
    pub fn atom(a: CheckAtom) -> Self {
        Condition::Atom(a)
    }

    pub fn permission(name: &str) -> Self {
        Condition::Atom(CheckAtom::Permission(name.to_string()))
    }

    pub fn and(children: Vec<Condition>) -> Self {
        Condition::And(children).normalize()
    }

    pub fn or(children: Vec<Condition>) -> Self {
        Condition::Or(children).normalize()
    }

    /// Flatten same-operator nesting, fold constants, dedupe and sort
    /// children, and unwrap single-child nodes.
    pub fn normalize(&self) -> Condition {
        match self {
            Condition::True | Condition::Unsatisfiable | Condition::Atom(_) => self.clone(),
            Condition::And(children) => {
                let mut set = BTreeSet::new();
                for c in children {
                    match c.normalize() {
                        Condition::True => {}
                        Condition::Unsatisfiable => return Condition::Unsatisfiable,
                        Condition::And(inner) => set.extend(inner),
                        other => {
                            set.insert(other);
                        }
                    }
                }
                collapse(set, Condition::True, Condition::And)
            }
            Condition::Or(children) => {
                let mut set = BTreeSet::new();
                for c in children {
                    match c.normalize() {
                        Condition::Unsatisfiable => {}
                        Condition::True => return Condition::True,
                        Condition::Or(inner) => set.extend(inner),
                        other => {
                            set.insert(other);
                        }
                    }
                }
                collapse(set, Condition::Unsatisfiable, Condition::Or)
            }
        }
    }

    /// Substitute the atoms `assume` decides and re-normalize.
    pub fn simplify(&self, assume: &dyn Fn(&CheckAtom) -> Option<bool>) -> Condition {
        fn subst(c: &Condition, assume: &dyn Fn(&CheckAtom) -> Option<bool>) -> Condition {
            match c {
                Condition::Atom(a) => match assume(a) {
                    Some(true) => Condition::True,
                    Some(false) => Condition::Unsatisfiable,
                    None => c.clone(),
                },
                Condition::And(cs) => Condition::And(cs.iter().map(|c| subst(c, assume)).collect()),
                Condition::Or(cs) => Condition::Or(cs.iter().map(|c| subst(c, assume)).collect()),
                Condition::True | Condition::Unsatisfiable => c.clone(),
            }
        }
        subst(self, assume).normalize()
    }

    pub fn eval(&self, value: &dyn Fn(&CheckAtom) -> bool) -> bool {
        match self {
            Condition::True => true,
            Condition::Unsatisfiable => false,
            Condition::Atom(a) => value(a),
            Condition::And(cs) => cs.iter().all(|c| c.eval(value)),
            Condition::Or(cs) => cs.iter().any(|c| c.eval(value)),
        }
    }

    pub fn atoms(&self) -> BTreeSet<CheckAtom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<CheckAtom>) {
        match self {
            Condition::Atom(a) => {
                out.insert(a.clone());
            }
            Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
            Condition::True | Condition::Unsatisfiable => {}
        }
    }

    pub fn permissions(&self) -> BTreeSet<String> {
        self.atoms()
            .into_iter()
            .filter_map(|a| match a {
                CheckAtom::Permission(p) => Some(p),
                _ => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        match self {
            Condition::True => json!({"const": true}),
            Condition::Unsatisfiable => json!({"const": false}),
            Condition::Atom(CheckAtom::Permission(p)) => json!({"atom": "permission", "name": p}),
            Condition::Atom(CheckAtom::UidEq(c)) => json!({"atom": "uid_eq", "const": c}),
            Condition::Atom(CheckAtom::PidSelf) => json!({"atom": "pid_self"}),
            Condition::And(cs) => json!({"op": "and", "args": cs.iter().map(Condition::to_json).collect::<Vec<_>>()}),
            Condition::Or(cs) => json!({"op": "or", "args": cs.iter().map(Condition::to_json).collect::<Vec<_>>()}),
        }
    }

    pub fn from_json(v: &Value) -> Result<Condition, ConditionParseError> {
        let bad = |why: &str| ConditionParseError(format!("{why}: {v}"));
        let obj = v.as_object().ok_or_else(|| bad("expected object"))?;
        if let Some(op) = obj.get("op") {
            let args = obj
                .get("args")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("missing args"))?
                .iter()
                .map(Condition::from_json)
                .collect::<Result<Vec<_>, _>>()?;
            return match op.as_str() {
                Some("and") => Ok(Condition::And(args)),
                Some("or") => Ok(Condition::Or(args)),
                _ => Err(bad("unknown op")),
            };
        }
        if let (Some(c), None) = (obj.get("const"), obj.get("atom")) {
            return match c.as_bool() {
                Some(true) => Ok(Condition::True),
                Some(false) => Ok(Condition::Unsatisfiable),
                None => Err(bad("const must be boolean")),
            };
        }
        let field = |k: &str| obj.get(k).and_then(Value::as_str).map(str::to_string).ok_or_else(|| bad(k));
        match obj.get("atom").and_then(Value::as_str) {
            Some("permission") => {
                let name = field("name")?;
                if !valid_permission_name(&name) {
                    return Err(bad("invalid permission name"));
                }
                Ok(Condition::Atom(CheckAtom::Permission(name)))
            }
            Some("uid_eq") => Ok(Condition::Atom(CheckAtom::UidEq(field("const")?))),
            Some("pid_self") => Ok(Condition::Atom(CheckAtom::PidSelf)),
            _ => Err(bad("unknown condition node")),
        }
    }

    /// Infix rendering used by the CSV output.
    pub fn infix(&self) -> String {
        match self {
            Condition::True => "true".into(),
            Condition::Unsatisfiable => "false".into(),
            Condition::Atom(a) => a.to_string(),
            Condition::And(cs) => cs
                .iter()
                .map(|c| match c {
                    Condition::Or(_) => format!("({})", c.infix()),
                    _ => c.infix(),
                })
                .collect::<Vec<_>>()
                .join(" && "),
            Condition::Or(cs) => cs
                .iter()
                .map(|c| match c {
                    Condition::And(_) => format!("({})", c.infix()),
                    _ => c.infix(),
                })
                .collect::<Vec<_>>()
                .join(" || "),
        }
    }
}

fn collapse(set: BTreeSet<Condition>, empty: Condition, wrap: fn(Vec<Condition>) -> Condition) -> Condition {
    let mut v: Vec<Condition> = set.into_iter().collect();
    match v.len() {
        0 => empty,
        1 => v.pop().unwrap(),
        _ => wrap(v),
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.infix())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("malformed condition: {0}")]
pub struct ConditionParseError(pub String);

/// The valuation used when scanning third-party apps: such an app never
/// runs in the service's process and never holds a system UID.
pub fn app_assumptions(atom: &CheckAtom) -> Option<bool> {
    match atom {
        CheckAtom::PidSelf | CheckAtom::UidEq(_) => Some(false),
        CheckAtom::Permission(_) => None,
    }
}
