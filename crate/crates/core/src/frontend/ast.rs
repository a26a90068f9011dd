//! Shared syntax tree for the MiniJava and MiniCpp dialects.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Language {
    Java,
    Cpp,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Java => "JAVA",
            Language::Cpp => "CPP",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: String,
    pub language: Language,
    /// Dotted package (Java) or namespace (C++); empty when absent.
    pub package: String,
    pub imports: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub free_functions: Vec<MethodDecl>,
    pub globals: Vec<GlobalDecl>,
}

impl SourceUnit {
    pub fn empty(path: &str, language: Language) -> Self {
        SourceUnit {
            path: path.to_string(),
            language,
            package: String::new(),
            imports: Vec::new(),
            types: Vec::new(),
            free_functions: Vec::new(),
            globals: Vec::new(),
        }
    }

    /// Copy with every source position zeroed, for structural comparison.
    pub fn without_positions(&self) -> SourceUnit {
        let mut unit = self.clone();
        for ty in &mut unit.types {
            ty.strip_positions();
        }
        for m in &mut unit.free_functions {
            m.strip_positions();
        }
        for g in &mut unit.globals {
            match g {
                GlobalDecl::JniTable { line, .. } | GlobalDecl::ClassPath { line, .. } => *line = 0,
            }
        }
        unit
    }

    /// Every method of the unit: type members (recursively through nested
    /// types) followed by free functions.
    pub fn all_methods(&self) -> Vec<&MethodDecl> {
        fn walk<'a>(ty: &'a TypeDecl, out: &mut Vec<&'a MethodDecl>) {
            out.extend(ty.methods.iter());
            for n in &ty.nested {
                walk(n, out);
            }
        }
        let mut out = Vec::new();
        for ty in &self.types {
            walk(ty, &mut out);
        }
        out.extend(self.free_functions.iter());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeKind {
    Class,
    Interface,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub kind: TypeKind,
    pub extends: Option<String>,
    pub implements: Vec<String>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub nested: Vec<TypeDecl>,
    pub line: u32,
}

impl TypeDecl {
    fn strip_positions(&mut self) {
        self.line = 0;
        for m in &mut self.methods {
            m.strip_positions();
        }
        for n in &mut self.nested {
            n.strip_positions();
        }
    }

    /// Direct supertypes as written: `extends` first, then `implements`.
    pub fn supertypes(&self) -> impl Iterator<Item = &String> {
        self.extends.iter().chain(self.implements.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub declared_type: String,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Visibility {
    Public,
    NonPublic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub declared_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    /// Fully qualified owner type, `None` for free functions.
    pub owner: Option<String>,
    pub name: String,
    pub params: Vec<Param>,
    /// Empty for constructors.
    pub return_type: String,
    pub visibility: Visibility,
    pub body: Option<Vec<Stmt>>,
    /// C++ `Class::method` definition form.
    pub is_out_of_line: bool,
    pub line: u32,
}

impl MethodDecl {
    fn strip_positions(&mut self) {
        self.line = 0;
        if let Some(body) = &mut self.body {
            strip_block(body);
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn is_constructor(&self) -> bool {
        self.return_type.is_empty()
    }

    /// Declared type of a parameter or local, first declaration wins.
    pub fn local_type(&self, name: &str) -> Option<&str> {
        if let Some(p) = self.params.iter().find(|p| p.name == name) {
            return Some(&p.declared_type);
        }
        self.flat_statements().into_iter().find_map(|s| match &s.kind {
            StmtKind::VarDecl { name: n, declared_type, .. } if n == name => Some(declared_type.as_str()),
            _ => None,
        })
    }

    /// Every value stored into local `name`: initializers and plain assignments.
    pub fn values_assigned_to(&self, name: &str) -> Vec<&Expr> {
        self.flat_statements()
            .into_iter()
            .filter_map(|s| match &s.kind {
                StmtKind::VarDecl { name: n, init: Some(e), .. } if n == name => Some(e),
                StmtKind::Assign { target: Expr::Ident(n), value } if n == name => Some(value),
                _ => None,
            })
            .collect()
    }

    /// Statements in preorder, descending into `if` branches.
    pub fn flat_statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        if let Some(body) = &self.body {
            flatten_into(body, &mut out);
        }
        out
    }
}

fn strip_block(block: &mut [Stmt]) {
    for s in block {
        s.line = 0;
        if let StmtKind::If {
            then_block,
            else_block,
            ..
        } = &mut s.kind
        {
            strip_block(then_block);
            strip_block(else_block);
        }
    }
}

pub fn flatten_into<'a>(block: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
    for s in block {
        out.push(s);
        if let StmtKind::If {
            then_block,
            else_block,
            ..
        } = &s.kind
        {
            flatten_into(then_block, out);
            flatten_into(else_block, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlobalDecl {
    /// `static const JNINativeMethod name[] = { {"java", "sig", (void*)native}, ... };`
    JniTable {
        name: String,
        entries: Vec<JniTableEntry>,
        line: u32,
    },
    /// `static const char* const name = "a/b/C";`
    ClassPath { name: String, value: String, line: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JniTableEntry {
    pub java_name: String,
    pub signature: String,
    pub native_function: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl {
        name: String,
        declared_type: String,
        init: Option<Expr>,
    },
    Assign {
        target: Expr,
        value: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then_block: Vec<Stmt>,
        else_block: Vec<Stmt>,
    },
    Return(Option<Expr>),
    Throw(Expr),
    /// Raw text of a statement the dialect parser could not understand.
    Opaque(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Eq,
    Neq,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Eq => "==",
            BinaryOp::Neq => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Call {
        receiver: Option<Box<Expr>>,
        callee: String,
        args: Vec<Expr>,
    },
    New {
        type_name: String,
        args: Vec<Expr>,
    },
    FieldAccess {
        base: Box<Expr>,
        field: String,
    },
    Ident(String),
    StrLit(String),
    IntLit(i64),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn call(receiver: Option<Expr>, callee: &str, args: Vec<Expr>) -> Expr {
        Expr::Call {
            receiver: receiver.map(Box::new),
            callee: callee.to_string(),
            args,
        }
    }

    pub fn ident(name: &str) -> Expr {
        Expr::Ident(name.to_string())
    }

    /// Visit every call expression in preorder.
    pub fn for_each_call<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Expr::Call { receiver, args, .. } => {
                f(self);
                if let Some(r) = receiver {
                    r.for_each_call(f);
                }
                for a in args {
                    a.for_each_call(f);
                }
            }
            Expr::New { args, .. } => {
                for a in args {
                    a.for_each_call(f);
                }
            }
            Expr::FieldAccess { base, .. } => base.for_each_call(f),
            Expr::Unary(_, e) => e.for_each_call(f),
            Expr::Binary(_, l, r) => {
                l.for_each_call(f);
                r.for_each_call(f);
            }
            Expr::Ident(_) | Expr::StrLit(_) | Expr::IntLit(_) => {}
        }
    }

    /// Visit every `new T(...)` expression in preorder.
    pub fn for_each_new<'a>(&'a self, f: &mut dyn FnMut(&'a str, &'a [Expr])) {
        match self {
            Expr::New { type_name, args } => {
                f(type_name, args);
                for a in args {
                    a.for_each_new(f);
                }
            }
            Expr::Call { receiver, args, .. } => {
                if let Some(r) = receiver {
                    r.for_each_new(f);
                }
                for a in args {
                    a.for_each_new(f);
                }
            }
            Expr::FieldAccess { base, .. } => base.for_each_new(f),
            Expr::Unary(_, e) => e.for_each_new(f),
            Expr::Binary(_, l, r) => {
                l.for_each_new(f);
                r.for_each_new(f);
            }
            Expr::Ident(_) | Expr::StrLit(_) | Expr::IntLit(_) => {}
        }
    }

    /// Dotted rendering of identifier / field-access chains (`a.b.c`).
    pub fn dotted_path(&self) -> Option<String> {
        match self {
            Expr::Ident(n) => Some(n.clone()),
            Expr::FieldAccess { base, field } => {
                base.dotted_path().map(|b| format!("{b}.{field}"))
            }
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Expr::Ident(n) if n == "NULL" || n == "null" || n == "nullptr")
            || matches!(self, Expr::IntLit(0))
    }
}

impl Stmt {
    pub fn new(kind: StmtKind, line: u32) -> Self {
        Stmt { kind, line }
    }

    /// Expressions owned directly by this statement (not by nested blocks).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::VarDecl { init, .. } => init.iter().collect(),
            StmtKind::Assign { target, value } => vec![target, value],
            StmtKind::Expr(e) | StmtKind::Throw(e) => vec![e],
            StmtKind::If { cond, .. } => vec![cond],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Opaque(_) => Vec::new(),
        }
    }

    /// Call expressions owned directly by this statement.
    pub fn own_calls(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        for e in self.own_exprs() {
            e.for_each_call(&mut |c| out.push(c));
        }
        out
    }
}

/// Strip `const`, `sp<..>`, `wp<..>`, pointer/reference and array suffixes
/// from a declared type, leaving the named type.
pub fn base_type_name(declared: &str) -> String {
    let mut t = declared.trim();
    if let Some(rest) = t.strip_prefix("const ") {
        t = rest.trim();
    }
    let t = t.trim_end_matches(['*', '&', ' ']);
    let t = t.trim_end_matches("[]");
    for wrapper in ["sp<", "wp<"] {
        if let Some(inner) = t.strip_prefix(wrapper) {
            if let Some(inner) = inner.strip_suffix('>') {
                return base_type_name(inner);
            }
        }
    }
    t.to_string()
}
