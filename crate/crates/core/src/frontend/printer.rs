//! Canonical dialect text for a parsed unit. Re-parsing the output yields a
//! structurally equal tree (positions aside).

use std::fmt::Write;

use super::ast::*;

pub fn pretty_print(unit: &SourceUnit) -> String {
    let mut p = Printer { out: String::new(), lang: unit.language };
    match unit.language {
        Language::Java => p.java_unit(unit),
        Language::Cpp => p.cpp_unit(unit),
    }
    p.out
}

struct Printer {
    out: String,
    lang: Language,
}

impl Printer {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn java_unit(&mut self, unit: &SourceUnit) {
        if !unit.package.is_empty() {
            self.line(0, &format!("package {};", unit.package));
        }
        for imp in &unit.imports {
            self.line(0, &format!("import {imp};"));
        }
        for ty in &unit.types {
            self.java_type(ty, 0);
        }
    }

    fn java_type(&mut self, ty: &TypeDecl, depth: usize) {
        let mut head = String::from(match ty.kind {
            TypeKind::Class => "class ",
            TypeKind::Interface => "interface ",
        });
        head.push_str(&ty.name);
        if let Some(e) = &ty.extends {
            write!(head, " extends {e}").unwrap();
        }
        if !ty.implements.is_empty() {
            write!(head, " implements {}", ty.implements.join(", ")).unwrap();
        }
        head.push_str(" {");
        self.line(depth, &head);
        for f in &ty.fields {
            let text = match &f.init {
                Some(e) => format!("{} {} = {};", f.declared_type, f.name, self.expr(e)),
                None => format!("{} {};", f.declared_type, f.name),
            };
            self.line(depth + 1, &text);
        }
        for m in &ty.methods {
            self.method(m, depth + 1, &m.name);
        }
        for n in &ty.nested {
            self.java_type(n, depth + 1);
        }
        self.line(depth, "}");
    }

    fn signature(&self, m: &MethodDecl, name: &str) -> String {
        let params: Vec<String> = m
            .params
            .iter()
            .map(|p| {
                if p.name.is_empty() {
                    p.declared_type.clone()
                } else {
                    format!("{} {}", p.declared_type, p.name)
                }
            })
            .collect();
        let mut s = String::new();
        if m.visibility == Visibility::Public && self.lang == Language::Java {
            s.push_str("public ");
        }
        if !m.return_type.is_empty() {
            s.push_str(&m.return_type);
            s.push(' ');
        }
        write!(s, "{}({})", name, params.join(", ")).unwrap();
        s
    }

    fn method(&mut self, m: &MethodDecl, depth: usize, name: &str) {
        let sig = self.signature(m, name);
        match &m.body {
            None => self.line(depth, &format!("{sig};")),
            Some(body) => {
                self.line(depth, &format!("{sig} {{"));
                self.block(body, depth + 1);
                self.line(depth, "}");
            }
        }
    }

    fn cpp_unit(&mut self, unit: &SourceUnit) {
        let segments: Vec<&str> = if unit.package.is_empty() {
            Vec::new()
        } else {
            unit.package.split('.').collect()
        };
        for s in &segments {
            self.line(0, &format!("namespace {s} {{"));
        }
        for g in &unit.globals {
            match g {
                GlobalDecl::ClassPath { name, value, .. } => {
                    self.line(0, &format!("static const char* const {name} = {};", quote(value)));
                }
                GlobalDecl::JniTable { name, entries, .. } => {
                    self.line(0, &format!("static const JNINativeMethod {name}[] = {{"));
                    for e in entries {
                        self.line(
                            1,
                            &format!(
                                "{{{}, {}, (void*){}}},",
                                quote(&e.java_name),
                                quote(&e.signature),
                                e.native_function
                            ),
                        );
                    }
                    self.line(0, "};");
                }
            }
        }
        for ty in &unit.types {
            self.cpp_class(ty);
        }
        for f in &unit.free_functions {
            match &f.owner {
                Some(owner) => {
                    let class = owner.rsplit('.').next().unwrap_or(owner);
                    self.method(f, 0, &format!("{class}::{}", f.name));
                }
                None => self.method(f, 0, &f.name),
            }
        }
        for _ in &segments {
            self.line(0, "}");
        }
    }

    fn cpp_class(&mut self, ty: &TypeDecl) {
        let mut head = format!("class {}", ty.name);
        let bases: Vec<String> = ty.supertypes().map(|b| format!("public {b}")).collect();
        if !bases.is_empty() {
            write!(head, " : {}", bases.join(", ")).unwrap();
        }
        head.push_str(" {");
        self.line(0, &head);
        let mut current: Option<Visibility> = None;
        for m in &ty.methods {
            if current != Some(m.visibility) {
                current = Some(m.visibility);
                self.line(0, if m.visibility == Visibility::Public { "public:" } else { "private:" });
            }
            if m.is_out_of_line {
                let sig = self.signature(m, &m.name);
                self.line(1, &format!("{sig};"));
            } else {
                self.method(m, 1, &m.name);
            }
        }
        if !ty.fields.is_empty() {
            self.line(0, "private:");
        }
        for f in &ty.fields {
            let text = match &f.init {
                Some(e) => format!("{} {} = {};", f.declared_type, f.name, self.expr(e)),
                None => format!("{} {};", f.declared_type, f.name),
            };
            self.line(1, &text);
        }
        self.line(0, "};");
        for m in ty.methods.iter().filter(|m| m.is_out_of_line) {
            let name = format!("{}::{}", ty.name, m.name);
            self.method(m, 0, &name);
        }
    }

    fn block(&mut self, stmts: &[Stmt], depth: usize) {
        for s in stmts {
            self.stmt(s, depth);
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) {
        match &s.kind {
            StmtKind::VarDecl { name, declared_type, init } => {
                let text = match init {
                    Some(e) => format!("{declared_type} {name} = {};", self.expr(e)),
                    None => format!("{declared_type} {name};"),
                };
                self.line(depth, &text);
            }
            StmtKind::Assign { target, value } => {
                let text = format!("{} = {};", self.expr(target), self.expr(value));
                self.line(depth, &text);
            }
            StmtKind::Expr(e) => {
                let text = format!("{};", self.expr(e));
                self.line(depth, &text);
            }
            StmtKind::If { cond, then_block, else_block } => {
                let text = format!("if ({}) {{", self.expr(cond));
                self.line(depth, &text);
                self.block(then_block, depth + 1);
                if else_block.is_empty() {
                    self.line(depth, "}");
                } else {
                    self.line(depth, "} else {");
                    self.block(else_block, depth + 1);
                    self.line(depth, "}");
                }
            }
            StmtKind::Return(None) => self.line(depth, "return;"),
            StmtKind::Return(Some(e)) => {
                let text = format!("return {};", self.expr(e));
                self.line(depth, &text);
            }
            StmtKind::Throw(e) => {
                let text = format!("throw {};", self.expr(e));
                self.line(depth, &text);
            }
            StmtKind::Opaque(raw) => self.line(depth, raw),
        }
    }

    fn expr(&self, e: &Expr) -> String {
        match e {
            Expr::Call { receiver, callee, args } => {
                let args: Vec<String> = args.iter().map(|a| self.expr(a)).collect();
                match receiver {
                    Some(r) => {
                        let sep = if self.lang == Language::Cpp { "->" } else { "." };
                        format!("{}{sep}{callee}({})", self.operand(r), args.join(", "))
                    }
                    None => format!("{callee}({})", args.join(", ")),
                }
            }
            Expr::New { type_name, args } => {
                let args: Vec<String> = args.iter().map(|a| self.expr(a)).collect();
                format!("new {type_name}({})", args.join(", "))
            }
            Expr::FieldAccess { base, field } => format!("{}.{field}", self.operand(base)),
            Expr::Ident(n) => n.clone(),
            Expr::StrLit(s) => quote(s),
            Expr::IntLit(v) => v.to_string(),
            Expr::Unary(op, inner) => {
                let sym = match op {
                    UnaryOp::Not => "!",
                    UnaryOp::Neg => "-",
                };
                format!("{sym}{}", self.operand(inner))
            }
            Expr::Binary(op, l, r) => {
                format!("{} {} {}", self.operand(l), op.symbol(), self.operand(r))
            }
        }
    }

    /// Sub-expression, parenthesized unless it is atomic or postfix.
    fn operand(&self, e: &Expr) -> String {
        match e {
            Expr::Binary(..) | Expr::Unary(..) | Expr::New { .. } => format!("({})", self.expr(e)),
            _ => self.expr(e),
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\0' => out.push_str("\\0"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
