//! MiniJava declarations: package, imports, classes and interfaces.

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::parser::{PResult, Parser};
use super::SyntaxError;

const MODIFIERS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "native", "synchronized",
    "transient", "volatile", "default", "strictfp",
];

/// Parse one MiniJava compilation unit.
pub fn parse_java(source: &str, path: &str) -> Result<SourceUnit, SyntaxError> {
    let toks = tokenize(source, path)?;
    let mut p = Parser::new(source, path, toks, Language::Java);
    let mut unit = SourceUnit::empty(path, Language::Java);
    if p.eat_word("package") {
        unit.package = p.qualified_name()?;
        p.expect_punct(";")?;
    }
    while p.eat_word("import") {
        p.eat_word("static");
        let mut name = p.qualified_name()?;
        if p.is_punct(".") && p.is_punct_at(1, "*") {
            p.bump();
            p.bump();
            name.push_str(".*");
        }
        p.expect_punct(";")?;
        unit.imports.push(name);
    }
    let prefix = unit.package.clone();
    while !p.at_eof() {
        let ty = p.java_type_decl(&prefix)?;
        unit.types.push(ty);
    }
    Ok(unit)
}

struct Modifiers {
    public: bool,
}

impl Parser<'_> {
    fn java_modifiers(&mut self) -> PResult<Modifiers> {
        let mut public = false;
        loop {
            self.skip_annotations()?;
            match self.peek() {
                Tok::Ident(w) if MODIFIERS.contains(&w.as_str()) => {
                    if w == "public" {
                        public = true;
                    }
                    self.bump();
                }
                _ => return Ok(Modifiers { public }),
            }
        }
    }

    fn java_type_decl(&mut self, prefix: &str) -> PResult<TypeDecl> {
        self.java_modifiers()?;
        let line = self.line();
        let kind = if self.eat_word("class") {
            TypeKind::Class
        } else if self.eat_word("interface") {
            TypeKind::Interface
        } else {
            return Err(self.err("`class` or `interface`"));
        };
        let name = self.expect_ident()?;
        let fqn = qualify(prefix, &name);
        let mut ty = TypeDecl {
            name,
            kind,
            extends: None,
            implements: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
            nested: Vec::new(),
            line,
        };
        if self.eat_word("extends") {
            ty.extends = Some(self.qualified_name()?);
            // Interfaces may extend several interfaces.
            while self.eat_punct(",") {
                ty.implements.push(self.qualified_name()?);
            }
        }
        if self.eat_word("implements") {
            loop {
                ty.implements.push(self.qualified_name()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("{")?;
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.err("`}`"));
            }
            if self.eat_punct(";") {
                continue;
            }
            self.java_member(&mut ty, &fqn)?;
        }
        Ok(ty)
    }

    fn java_member(&mut self, ty: &mut TypeDecl, fqn: &str) -> PResult<()> {
        let save = self.pos;
        let mods = self.java_modifiers()?;
        if self.is_word("class") || self.is_word("interface") {
            self.pos = save;
            let nested = self.java_type_decl(fqn)?;
            ty.nested.push(nested);
            return Ok(());
        }
        let line = self.line();
        let visibility = if mods.public || ty.kind == TypeKind::Interface {
            Visibility::Public
        } else {
            Visibility::NonPublic
        };
        // Constructor: `Name(`.
        if self.is_word(&ty.name) && self.is_punct_at(1, "(") {
            let name = self.expect_ident()?;
            let params = self.parse_params()?;
            self.skip_throws()?;
            let body = Some(self.parse_block()?);
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
            self.skip_throws()?;
            let body = if self.eat_punct(";") { None } else { Some(self.parse_block()?) };
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

    fn skip_throws(&mut self) -> PResult<()> {
        if self.eat_word("throws") {
            loop {
                self.qualified_name()?;
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn qualify(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
