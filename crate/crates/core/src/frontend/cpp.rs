//! MiniCpp declarations: namespaces, classes, out-of-line definitions,
//! free functions, JNI registration tables and class-path constants.

use super::ast::*;
use super::java::qualify;
use super::lexer::{tokenize, Tok};
use super::parser::{PResult, Parser};
use super::SyntaxError;

const FN_MODIFIERS: &[&str] = &["static", "inline", "virtual", "explicit", "extern", "constexpr"];

/// Parse one MiniCpp compilation unit.
pub fn parse_cpp(source: &str, path: &str) -> Result<SourceUnit, SyntaxError> {
    let toks = tokenize(source, path)?;
    let mut p = Parser::new(source, path, toks, Language::Cpp);
    let mut unit = SourceUnit::empty(path, Language::Cpp);
    let mut ns_stack: Vec<String> = Vec::new();
    let mut defs: Vec<MethodDecl> = Vec::new();
    loop {
        if p.at_eof() {
            if !ns_stack.is_empty() {
                return Err(p.err("`}` closing namespace"));
            }
            break;
        }
        if p.is_punct("}") && !ns_stack.is_empty() {
            p.bump();
            ns_stack.pop();
            continue;
        }
        if p.eat_word("namespace") {
            let name = p.expect_ident()?;
            p.expect_punct("{")?;
            ns_stack.push(name);
            if unit.package.is_empty() {
                unit.package = ns_stack.join(".");
            }
            continue;
        }
        p.cpp_item(&mut unit, &mut defs)?;
    }
    attach_definitions(&mut unit, defs);
    Ok(unit)
}

/// Move out-of-line `Class::method` definitions into their class when the
/// class is declared in the same unit, replacing a body-less declaration.
fn attach_definitions(unit: &mut SourceUnit, defs: Vec<MethodDecl>) {
    for def in defs {
        let owner = def.owner.clone().unwrap_or_default();
        let Some(ty) = unit
            .types
            .iter_mut()
            .find(|t| qualify(&unit.package, &t.name) == owner)
        else {
            unit.free_functions.push(def);
            continue;
        };
        if let Some(slot) = ty
            .methods
            .iter_mut()
            .find(|m| m.name == def.name && m.arity() == def.arity() && m.body.is_none())
        {
            let visibility = slot.visibility;
            *slot = MethodDecl { visibility, ..def };
        } else {
            ty.methods.push(def);
        }
    }
}

impl Parser<'_> {
    fn cpp_item(&mut self, unit: &mut SourceUnit, defs: &mut Vec<MethodDecl>) -> PResult<()> {
        if self.eat_punct(";") {
            return Ok(());
        }
        if self.eat_word("using") {
            while !self.eat_punct(";") {
                if self.at_eof() {
                    return Err(self.err("`;`"));
                }
                self.bump();
            }
            return Ok(());
        }
        if self.is_word("class") || self.is_word("struct") {
            if let Some(ty) = self.cpp_class(&unit.package)? {
                unit.types.push(ty);
            }
            return Ok(());
        }
        // static const JNINativeMethod name[] = {...};
        if self.is_word("static") && self.is_word_at(1, "const") && self.is_word_at(2, "JNINativeMethod") {
            let line = self.line();
            self.bump();
            self.bump();
            self.bump();
            let name = self.expect_ident()?;
            self.expect_punct("[")?;
            self.expect_punct("]")?;
            self.expect_punct("=")?;
            self.expect_punct("{")?;
            let mut entries = Vec::new();
            while !self.eat_punct("}") {
                entries.push(self.jni_entry()?);
                if !self.eat_punct(",") {
                    self.expect_punct("}")?;
                    break;
                }
            }
            self.expect_punct(";")?;
            unit.globals.push(GlobalDecl::JniTable { name, entries, line });
            return Ok(());
        }
        // static const char* [const] name = "a/b/C";
        if self.is_word("static") && self.is_word_at(1, "const") && self.is_word_at(2, "char") && self.is_punct_at(3, "*") {
            let line = self.line();
            for _ in 0..4 {
                self.bump();
            }
            self.eat_word("const");
            let name = self.expect_ident()?;
            self.expect_punct("=")?;
            let value = self.expect_str()?;
            self.expect_punct(";")?;
            unit.globals.push(GlobalDecl::ClassPath { name, value, line });
            return Ok(());
        }
        self.cpp_function_or_global(&unit.package, &mut unit.free_functions, defs)
    }

    fn jni_entry(&mut self) -> PResult<JniTableEntry> {
        self.expect_punct("{")?;
        let java_name = self.expect_str()?;
        self.expect_punct(",")?;
        let signature = self.expect_str()?;
        self.expect_punct(",")?;
        if self.eat_punct("(") {
            self.expect_word("void")?;
            self.expect_punct("*")?;
            self.expect_punct(")")?;
        }
        let native_function = self.expect_ident()?;
        self.expect_punct("}")?;
        Ok(JniTableEntry { java_name, signature, native_function })
    }

    /// `class Name [: public Base, ...] { members };` Forward declarations
    /// yield `None`.
    fn cpp_class(&mut self, package: &str) -> PResult<Option<TypeDecl>> {
        let is_struct = self.is_word("struct");
        self.bump();
        let line = self.line();
        let name = self.expect_ident()?;
        if self.eat_punct(";") {
            return Ok(None);
        }
        let fqn = qualify(package, &name);
        let mut ty = TypeDecl {
            name,
            kind: TypeKind::Class,
            extends: None,
            implements: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
            nested: Vec::new(),
            line,
        };
        if self.eat_punct(":") {
            loop {
                while self.is_word("public") || self.is_word("protected") || self.is_word("private") || self.is_word("virtual") {
                    self.bump();
                }
                let base = self.parse_type()?;
                if ty.extends.is_none() {
                    ty.extends = Some(base);
                } else {
                    ty.implements.push(base);
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("{")?;
        let mut visibility = if is_struct { Visibility::Public } else { Visibility::NonPublic };
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.err("`}`"));
            }
            if self.eat_punct(";") {
                continue;
            }
            if (self.is_word("public") || self.is_word("private") || self.is_word("protected"))
                && self.is_punct_at(1, ":")
            {
                visibility = if self.is_word("public") { Visibility::Public } else { Visibility::NonPublic };
                self.bump();
                self.bump();
                continue;
            }
            if self.is_word("friend") {
                while !self.eat_punct(";") {
                    self.bump();
                }
                continue;
            }
            self.cpp_member(&mut ty, &fqn, visibility)?;
        }
        self.expect_punct(";")?;
        Ok(Some(ty))
    }

    fn cpp_member(&mut self, ty: &mut TypeDecl, fqn: &str, visibility: Visibility) -> PResult<()> {
        while matches!(self.peek(), Tok::Ident(w) if FN_MODIFIERS.contains(&w.as_str())) {
            self.bump();
        }
        let line = self.line();
        let is_ctor = self.is_word(&ty.name) && self.is_punct_at(1, "(");
        let is_dtor = self.is_punct("~");
        if is_ctor || is_dtor {
            let mut name = String::new();
            if self.eat_punct("~") {
                name.push('~');
            }
            name.push_str(&self.expect_ident()?);
            let params = self.parse_params()?;
            let body = self.cpp_function_tail()?;
            ty.methods.push(MethodDecl {
                owner: Some(fqn.to_string()),
                name,
                params,
                return_type: String::new(),
                visibility,
                body,
                is_out_of_line: false,
                line,
            });
            return Ok(());
        }
        let declared_type = self.parse_type()?;
        let name = self.expect_ident()?;
        if self.is_punct("(") {
            let params = self.parse_params()?;
            let body = self.cpp_function_tail()?;
            ty.methods.push(MethodDecl {
                owner: Some(fqn.to_string()),
                name,
                params,
                return_type: declared_type,
                visibility,
                body,
                is_out_of_line: false,
                line,
            });
            return Ok(());
        }
        let init = if self.eat_punct("=") { Some(self.parse_expr()?) } else { None };
        self.expect_punct(";")?;
        ty.fields.push(FieldDecl { name, declared_type, init });
        Ok(())
    }

    /// After a parameter list: qualifiers, `= 0`, constructor initializer
    /// list, then a body or `;`. Initializers become leading assignments.
    fn cpp_function_tail(&mut self) -> PResult<Option<Vec<Stmt>>> {
        while self.is_word("const") || self.is_word("override") || self.is_word("final") {
            self.bump();
        }
        if self.eat_punct("=") {
            // `= 0`, `= default`, `= delete`
            self.bump();
            self.expect_punct(";")?;
            return Ok(None);
        }
        if self.eat_punct(";") {
            return Ok(None);
        }
        let mut inits = Vec::new();
        if self.eat_punct(":") {
            loop {
                let line = self.line();
                let field = self.expect_ident()?;
                let mut args = self.parse_args()?;
                let value = if args.len() == 1 {
                    args.pop().unwrap_or(Expr::IntLit(0))
                } else {
                    Expr::call(None, &field, args)
                };
                inits.push(Stmt::new(StmtKind::Assign { target: Expr::Ident(field), value }, line));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let mut body = self.parse_block()?;
        if !inits.is_empty() {
            inits.append(&mut body);
            body = inits;
        }
        Ok(Some(body))
    }

    fn cpp_function_or_global(
        &mut self,
        package: &str,
        free: &mut Vec<MethodDecl>,
        defs: &mut Vec<MethodDecl>,
    ) -> PResult<()> {
        while matches!(self.peek(), Tok::Ident(w) if FN_MODIFIERS.contains(&w.as_str())) {
            self.bump();
        }
        let line = self.line();
        // Out-of-line constructor / destructor: `C::C(` or `C::~C(`.
        if matches!(self.peek(), Tok::Ident(_))
            && self.is_punct_at(1, "::")
            && (self.is_punct_at(2, "~") || (matches!(self.peek_at(2), Tok::Ident(_)) && self.is_punct_at(3, "(")))
            && self.ctor_like()
        {
            let class = self.expect_ident()?;
            self.expect_punct("::")?;
            let mut name = String::new();
            if self.eat_punct("~") {
                name.push('~');
            }
            name.push_str(&self.expect_ident()?);
            let params = self.parse_params()?;
            let body = self.cpp_function_tail()?;
            defs.push(MethodDecl {
                owner: Some(qualify(package, &class)),
                name,
                params,
                return_type: String::new(),
                visibility: Visibility::Public,
                body,
                is_out_of_line: true,
                line,
            });
            return Ok(());
        }
        let return_type = self.parse_type()?;
        let first = self.expect_ident()?;
        let (owner, name) = if self.eat_punct("::") {
            (Some(first), self.expect_ident()?)
        } else {
            (None, first)
        };
        if !self.is_punct("(") {
            // Global variable definition; not needed by the analysis.
            if self.eat_punct("=") {
                self.parse_expr()?;
            }
            self.expect_punct(";")?;
            return Ok(());
        }
        let params = self.parse_params()?;
        let body = self.cpp_function_tail()?;
        match owner {
            Some(class) => defs.push(MethodDecl {
                owner: Some(qualify(package, &class)),
                name,
                params,
                return_type,
                visibility: Visibility::Public,
                body,
                is_out_of_line: true,
                line,
            }),
            None => free.push(MethodDecl {
                owner: None,
                name,
                params,
                return_type,
                visibility: Visibility::Public,
                body,
                is_out_of_line: false,
                line,
            }),
        }
        Ok(())
    }

    /// `C::C(` / `C::~C(` where both names agree.
    fn ctor_like(&self) -> bool {
        match (self.peek_at(0), self.peek_at(2), self.peek_at(3)) {
            (Tok::Ident(a), Tok::Ident(b), _) => a == b,
            (Tok::Ident(a), Tok::Punct("~"), Tok::Ident(b)) => a == b,
            _ => false,
        }
    }
}
