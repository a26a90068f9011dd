//! Guard recognition: which `if` statements are security checks, and what
//! must hold for execution to proceed past them.

use std::collections::BTreeMap;

use crate::config::AnalysisConfig;
use crate::diag::Diagnostic;
use crate::frontend::{BinaryOp, Expr, MethodDecl, Stmt, StmtKind, UnaryOp};

use super::condition::{CheckAtom, Condition};

/// Boolean structure of a guard condition before negation is pushed down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom(CheckAtom),
    /// A leaf the analysis cannot interpret (`isHttp(url)`, `x == 3`).
    Other,
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    fn has_atom(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Other => false,
            Formula::Not(f) => f.has_atom(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::has_atom),
        }
    }

    /// Negation normal form of `self` (or of `!self` when `negate`).
    pub fn nnf(&self, negate: bool) -> Formula {
        match (self, negate) {
            (Formula::Not(f), n) => f.nnf(!n),
            (Formula::And(fs), false) => Formula::And(fs.iter().map(|f| f.nnf(false)).collect()),
            (Formula::And(fs), true) => Formula::Or(fs.iter().map(|f| f.nnf(true)).collect()),
            (Formula::Or(fs), false) => Formula::Or(fs.iter().map(|f| f.nnf(false)).collect()),
            (Formula::Or(fs), true) => Formula::And(fs.iter().map(|f| f.nnf(true)).collect()),
            (leaf, false) => leaf.clone(),
            (leaf, true) => Formula::Not(Box::new(leaf.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    /// Condition under which the denial branch runs.
    pub denial_formula: Formula,
    /// The rendered denial value, e.g. `PERMISSION_DENIED`.
    pub denial: String,
    /// What must hold to get past the guard.
    pub proceed: Condition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuardOutcome {
    NotAGuard,
    Guard(Guard),
    /// Looks like a guard but cannot be encoded; skipped conservatively.
    Rejected(Diagnostic),
}

struct Ctx<'a> {
    config: &'a AnalysisConfig,
    /// Locals holding the result of an intrinsic or check call.
    env: BTreeMap<&'a str, &'a Expr>,
    non_literal: Option<String>,
}

const INTRINSICS: &[&str] = &["getCallingPid", "getCallingUid", "getpid"];

fn callee_of(e: &Expr) -> Option<&str> {
    match e {
        Expr::Call { callee, .. } => Some(callee),
        _ => None,
    }
}

impl<'a> Ctx<'a> {
    fn new(method: &'a MethodDecl, config: &'a AnalysisConfig) -> Self {
        let mut env = BTreeMap::new();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in method.flat_statements() {
            let (name, value) = match &s.kind {
                StmtKind::VarDecl { name, init: Some(v), .. } => (name.as_str(), v),
                StmtKind::Assign { target: Expr::Ident(name), value } => (name.as_str(), value),
                _ => continue,
            };
            *counts.entry(name).or_default() += 1;
            let interesting = callee_of(value).is_some_and(|c| {
                INTRINSICS.contains(&c) || config.check_function_names.iter().any(|n| n == c)
            });
            if interesting {
                env.insert(name, value);
            }
        }
        // A local reassigned elsewhere is not a stable alias.
        env.retain(|name, _| counts.get(name) == Some(&1));
        Ctx { config, env, non_literal: None }
    }

    fn subst<'e>(&self, e: &'e Expr) -> &'e Expr
    where
        'a: 'e,
    {
        match e {
            Expr::Ident(n) => self.env.get(n.as_str()).copied().unwrap_or(e),
            _ => e,
        }
    }

    fn is_call_to(&self, e: &Expr, name: &str) -> bool {
        callee_of(self.subst(e)) == Some(name)
    }

    /// Permission atom for a check call, if `e` is one.
    fn check_atom(&mut self, e: &Expr) -> Option<Formula> {
        let Expr::Call { callee, args, .. } = self.subst(e) else { return None };
        if !self.config.check_function_names.iter().any(|n| n == callee) {
            return None;
        }
        match args.first() {
            Some(Expr::StrLit(p)) => Some(Formula::Atom(CheckAtom::Permission(p.clone()))),
            _ => {
                self.non_literal = Some(callee.clone());
                Some(Formula::Other)
            }
        }
    }

    fn formula(&mut self, e: &Expr) -> Formula {
        if let Some(f) = self.check_atom(e) {
            return f;
        }
        match e {
            Expr::Unary(UnaryOp::Not, inner) => Formula::Not(Box::new(self.formula(inner))),
            Expr::Binary(BinaryOp::And, l, r) => Formula::And(vec![self.formula(l), self.formula(r)]),
            Expr::Binary(BinaryOp::Or, l, r) => Formula::Or(vec![self.formula(l), self.formula(r)]),
            Expr::Binary(op @ (BinaryOp::Eq | BinaryOp::Neq), l, r) => {
                let Some((atom, holds_when_equal)) = self.comparison(l, r).or_else(|| self.comparison(r, l)) else {
                    return Formula::Other;
                };
                if holds_when_equal == (*op == BinaryOp::Eq) {
                    atom
                } else {
                    Formula::Not(Box::new(atom))
                }
            }
            Expr::Ident(n) if self.env.contains_key(n.as_str()) => {
                let target = self.env[n.as_str()];
                self.formula(target)
            }
            _ => Formula::Other,
        }
    }

    /// `l == r` as an atom, with whether equality means the atom holds.
    fn comparison(&mut self, l: &Expr, r: &Expr) -> Option<(Formula, bool)> {
        if let Some(atom) = self.check_atom(l) {
            let c = constant_name(r)?;
            return match c.as_str() {
                "PERMISSION_GRANTED" | "true" | "OK" | "NO_ERROR" => Some((atom, true)),
                "PERMISSION_DENIED" | "false" => Some((atom, false)),
                _ => None,
            };
        }
        if self.is_call_to(l, "getCallingUid") {
            let c = constant_name(r)?;
            return Some((Formula::Atom(CheckAtom::UidEq(c)), true));
        }
        if self.is_call_to(l, "getCallingPid") && self.is_call_to(r, "getpid") {
            return Some((Formula::Atom(CheckAtom::PidSelf), true));
        }
        None
    }
}

fn constant_name(e: &Expr) -> Option<String> {
    match e {
        Expr::Ident(n) => Some(n.clone()),
        Expr::FieldAccess { .. } => e.dotted_path().map(|p| p.rsplit('.').next().unwrap_or(&p).to_string()),
        Expr::IntLit(v) => Some(v.to_string()),
        _ => None,
    }
}

fn render_denial(e: &Expr) -> Option<String> {
    match e {
        Expr::Unary(UnaryOp::Neg, inner) => render_denial(inner).map(|s| format!("-{s}")),
        _ => constant_name(e),
    }
}

/// The denial value a branch ends with, if it ends by denying.
fn denial_of(branch: &[Stmt], config: &AnalysisConfig) -> Option<String> {
    match &branch.last()?.kind {
        StmtKind::Return(Some(e)) => {
            let d = render_denial(e)?;
            config.denial_constants.iter().any(|c| *c == d).then_some(d)
        }
        StmtKind::Throw(Expr::New { type_name, .. })
            if type_name.rsplit('.').next() == Some("SecurityException") =>
        {
            Some("throw SecurityException".into())
        }
        _ => None,
    }
}

/// NNF formula → positive condition; `None` when only uninterpretable
/// leaves remain, `Err` when an atom would have to be false.
fn to_condition(f: &Formula) -> Result<Option<Condition>, CheckAtom> {
    match f {
        Formula::Atom(a) => Ok(Some(Condition::Atom(a.clone()))),
        Formula::Other | Formula::Not(_) if !f.has_atom() => Ok(None),
        Formula::Not(inner) => match &**inner {
            Formula::Atom(a) => Err(a.clone()),
            other => unreachable!("not in NNF: {other:?}"),
        },
        Formula::Other => Ok(None),
        Formula::And(fs) | Formula::Or(fs) => {
            let mut kids = Vec::new();
            for k in fs {
                if let Some(c) = to_condition(k)? {
                    kids.push(c);
                }
            }
            if kids.is_empty() {
                return Ok(None);
            }
            Ok(Some(if matches!(f, Formula::And(_)) { Condition::and(kids) } else { Condition::or(kids) }))
        }
    }
}

pub fn recognize_check(stmt: &Stmt, method: &MethodDecl, config: &AnalysisConfig) -> GuardOutcome {
    let StmtKind::If { cond, then_block, else_block } = &stmt.kind else {
        return GuardOutcome::NotAGuard;
    };
    let (branch, denial_when_true) = if !then_block.is_empty() {
        (then_block, true)
    } else {
        (else_block, false)
    };
    let Some(denial) = denial_of(branch, config) else {
        return GuardOutcome::NotAGuard;
    };
    let mut ctx = Ctx::new(method, config);
    let written = ctx.formula(cond);
    if let Some(callee) = ctx.non_literal.take() {
        return GuardOutcome::Rejected(Diagnostic::new(
            "GUARD_NON_LITERAL_PERMISSION",
            format!("GUARD_NON_LITERAL_PERMISSION {callee} in {} line {}", method.name, stmt.line),
        ));
    }
    if !written.has_atom() {
        return GuardOutcome::NotAGuard;
    }
    let denial_formula = if denial_when_true { written } else { Formula::Not(Box::new(written)) };
    match to_condition(&denial_formula.nnf(true)) {
        Ok(Some(proceed)) => GuardOutcome::Guard(Guard { denial_formula, denial, proceed }),
        Ok(None) => GuardOutcome::NotAGuard,
        Err(atom) => GuardOutcome::Rejected(Diagnostic::new(
            "NEGATIVE_ATOM_REQUIRED",
            format!("NEGATIVE_ATOM_REQUIRED {atom} in {} line {}", method.name, stmt.line),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_cpp;

    fn method(body: &str) -> MethodDecl {
        let src = format!("status_t f(int a) {{\n{body}\n}}");
        let u = parse_cpp(&src, "t.mcpp").unwrap();
        u.free_functions.into_iter().next().unwrap()
    }

    fn outcome(body: &str) -> GuardOutcome {
        let m = method(body);
        let config = AnalysisConfig::default();
        let stmt = m.flat_statements().into_iter().find(|s| matches!(s.kind, StmtKind::If { .. })).unwrap().clone();
        recognize_check(&stmt, &m, &config)
    }

    fn proceed(body: &str) -> Condition {
        match outcome(body) {
            GuardOutcome::Guard(g) => g.proceed,
            other => panic!("not a guard: {other:?}"),
        }
    }

    fn perm(p: &str) -> Condition {
        Condition::permission(p)
    }

    #[test]
    fn camera_service_guard() {
        let body = r#"
    int callingPid = getCallingPid();
    if (callingPid != getpid() && !checkCallingPermission(String16("android.permission.CAMERA"))) {
        ALOGE("Permission Denial");
        return PERMISSION_DENIED;
    }
    return OK;"#;
        let GuardOutcome::Guard(g) = outcome(body) else { panic!() };
        assert_eq!(g.denial, "PERMISSION_DENIED");
        let not = |a: CheckAtom| Formula::Not(Box::new(Formula::Atom(a)));
        assert_eq!(
            g.denial_formula,
            Formula::And(vec![not(CheckAtom::PidSelf), not(CheckAtom::Permission("android.permission.CAMERA".into()))])
        );
        assert_eq!(g.proceed, Condition::or(vec![perm("android.permission.CAMERA"), Condition::Atom(CheckAtom::PidSelf)]));
    }

    #[test]
    fn comparison_without_atom_is_not_a_guard() {
        assert_eq!(outcome("if (x == 3) { return PERMISSION_DENIED; }"), GuardOutcome::NotAGuard);
    }

    #[test]
    fn check_without_denial_is_not_a_guard() {
        assert_eq!(outcome(r#"if (!checkCallingPermission("A")) { return OK; }"#), GuardOutcome::NotAGuard);
    }

    #[test]
    fn substitution_matches_manual_inlining() {
        let via_local = proceed(
            r#"const int pid = getCallingPid();
    if (pid != getpid() && !checkCallingPermission("android.permission.RECORD_AUDIO")) { return -EPERM; }"#,
        );
        let inlined = proceed(
            r#"if (getCallingPid() != getpid() && !checkCallingPermission("android.permission.RECORD_AUDIO")) { return -EPERM; }"#,
        );
        assert_eq!(via_local, inlined);
        assert_eq!(via_local.atoms().len(), 2);
    }

    #[test]
    fn de_morgan_flattens() {
        let c = proceed(r#"if (!checkCallingPermission("A") && (!checkCallingPermission("B") && !checkCallingPermission("C"))) { return PERMISSION_DENIED; }"#);
        assert_eq!(c, Condition::Or(vec![perm("A"), perm("B"), perm("C")]));
    }

    #[test]
    fn uid_guard_and_java_style_comparison() {
        let c = proceed(
            r#"int uid = getCallingUid();
    if (uid != AID_SYSTEM && checkCallingOrSelfPermission("X") != PackageManager.PERMISSION_GRANTED) { throw new SecurityException("no"); }"#,
        );
        assert_eq!(c, Condition::or(vec![perm("X"), Condition::Atom(CheckAtom::UidEq("AID_SYSTEM".into()))]));
    }

    #[test]
    fn else_branch_denial() {
        let c = proceed(r#"if (checkCallingPermission("A")) { } else { return PERMISSION_DENIED; }"#);
        assert_eq!(c, perm("A"));
    }

    #[test]
    fn inverted_guard_rejected() {
        let o = outcome(r#"if (getCallingUid() == AID_SHELL) { return PERMISSION_DENIED; }"#);
        assert!(matches!(o, GuardOutcome::Rejected(d) if d.code == "NEGATIVE_ATOM_REQUIRED"));
    }

    #[test]
    fn non_literal_permission_rejected() {
        let o = outcome(r#"if (!checkCallingPermission(sPerm)) { return PERMISSION_DENIED; }"#);
        assert!(matches!(o, GuardOutcome::Rejected(d) if d.code == "GUARD_NON_LITERAL_PERMISSION"));
    }

    #[test]
    fn uninterpretable_leaves_are_dropped() {
        let c = proceed(r#"if (isHttp(a) && !checkCallingPermission("INTERNET")) { return PERMISSION_DENIED; }"#);
        assert_eq!(c, perm("INTERNET"));
        let c = proceed(r#"if (!checkCallingPermission("INTERNET") || isHttp(a)) { return PERMISSION_DENIED; }"#);
        assert_eq!(c, perm("INTERNET"));
    }
}
