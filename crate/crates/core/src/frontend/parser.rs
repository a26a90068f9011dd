//! Recursive-descent machinery shared by the two dialect front ends:
//! types, statements, expressions and in-body error recovery.

use super::ast::*;
use super::lexer::{Tok, Token};
use super::SyntaxError;

pub(crate) type PResult<T> = Result<T, SyntaxError>;

/// Words that can never start a type in a declaration.
const STMT_KEYWORDS: &[&str] = &[
    "return", "if", "else", "throw", "new", "this", "delete", "case", "default", "break",
    "continue", "for", "while", "switch", "do", "try", "catch", "finally", "synchronized",
    "goto", "sizeof",
];

/// Identifiers followed by `(` that are control keywords, not calls.
const NON_CALL_WORDS: &[&str] = &[
    "if", "for", "while", "switch", "catch", "synchronized", "sizeof", "return", "case",
];

pub(crate) struct Parser<'s> {
    pub(crate) src: &'s str,
    pub(crate) path: &'s str,
    pub(crate) toks: Vec<Token>,
    pub(crate) pos: usize,
    pub(crate) lang: Language,
}

impl<'s> Parser<'s> {
    pub(crate) fn new(src: &'s str, path: &'s str, toks: Vec<Token>, lang: Language) -> Self {
        Parser { src, path, toks, pos: 0, lang }
    }

    // Cursor helpers

    pub(crate) fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    pub(crate) fn peek(&self) -> &Tok {
        self.peek_at(0)
    }

    pub(crate) fn line(&self) -> u32 {
        self.toks[self.pos.min(self.toks.len() - 1)].line
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub(crate) fn is_punct_at(&self, offset: usize, p: &str) -> bool {
        matches!(self.peek_at(offset), Tok::Punct(q) if *q == p)
    }

    pub(crate) fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    pub(crate) fn is_word_at(&self, offset: usize, w: &str) -> bool {
        matches!(self.peek_at(offset), Tok::Ident(s) if s == w)
    }

    pub(crate) fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn err(&self, expected: &str) -> SyntaxError {
        SyntaxError::new(self.path, self.line(), expected)
    }

    pub(crate) fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(&format!("`{p}`")))
        }
    }

    pub(crate) fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.err(&format!("`{w}`")))
        }
    }

    pub(crate) fn expect_ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err("identifier")),
        }
    }

    pub(crate) fn expect_str(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err("string literal")),
        }
    }

    /// Dotted (Java) or `::`-separated (C++) qualified name, kept as written.
    pub(crate) fn qualified_name(&mut self) -> PResult<String> {
        let mut name = self.expect_ident()?;
        loop {
            let sep = if self.is_punct(".") && matches!(self.peek_at(1), Tok::Ident(_)) {
                "."
            } else if self.is_punct("::") && matches!(self.peek_at(1), Tok::Ident(_)) {
                "::"
            } else {
                break;
            };
            self.bump();
            name.push_str(sep);
            name.push_str(&self.expect_ident()?);
        }
        Ok(name)
    }

    /// Skip `@Annotation` and `@Annotation(...)`.
    pub(crate) fn skip_annotations(&mut self) -> PResult<()> {
        while self.is_punct("@") && !self.is_word_at(1, "interface") {
            self.bump();
            self.qualified_name()?;
            if self.is_punct("(") {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(())
    }

    pub(crate) fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect_punct(open)?;
        let mut depth = 1;
        while depth > 0 {
            if self.at_eof() {
                return Err(self.err(&format!("`{close}`")));
            }
            if self.is_punct(open) {
                depth += 1;
            } else if self.is_punct(close) {
                depth -= 1;
            }
            self.bump();
        }
        Ok(())
    }

    // Types

    /// Parse a type and return its canonical spelling, e.g. `const sp<IFoo>&`.
    pub(crate) fn parse_type(&mut self) -> PResult<String> {
        let mut out = String::new();
        if self.eat_word("const") {
            out.push_str("const ");
        }
        match self.peek() {
            Tok::Ident(w) if !STMT_KEYWORDS.contains(&w.as_str()) => {}
            _ => return Err(self.err("type")),
        }
        let mut name = self.qualified_name()?;
        // `unsigned int`, `long long` and friends.
        while matches!(name.as_str(), "unsigned" | "signed" | "long" | "short")
            && matches!(self.peek(), Tok::Ident(w) if matches!(w.as_str(), "int" | "long" | "char" | "short"))
        {
            name.push(' ');
            name.push_str(&self.expect_ident()?);
        }
        out.push_str(&name);
        if self.is_punct("<") {
            self.bump();
            let inner = self.parse_type()?;
            self.expect_punct(">")?;
            out.push('<');
            out.push_str(&inner);
            out.push('>');
        }
        loop {
            if self.is_punct("*") || self.is_punct("&") {
                if let Tok::Punct(p) = self.bump() {
                    out.push_str(p);
                }
            } else if self.is_punct("[") && self.is_punct_at(1, "]") {
                self.bump();
                self.bump();
                out.push_str("[]");
            } else if self.is_word("const") && self.lang == Language::Cpp {
                // `char* const`: trailing const carries no information for us.
                self.bump();
            } else {
                break;
            }
        }
        Ok(out)
    }

    /// Speculatively parse `T`, succeeding only if followed by an identifier.
    fn try_type_then_ident(&mut self) -> Option<(String, String)> {
        let save = self.pos;
        let ty = match self.parse_type() {
            Ok(t) => t,
            Err(_) => {
                self.pos = save;
                return None;
            }
        };
        match self.peek().clone() {
            Tok::Ident(name) if !STMT_KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                Some((ty, name))
            }
            _ => {
                self.pos = save;
                None
            }
        }
    }

    pub(crate) fn parse_params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        if self.is_word("void") && self.is_punct_at(1, ")") {
            self.bump();
            self.bump();
            return Ok(params);
        }
        loop {
            self.skip_annotations()?;
            self.eat_word("final");
            let declared_type = self.parse_type()?;
            let name = match self.peek().clone() {
                Tok::Ident(n) => {
                    self.bump();
                    n
                }
                _ => String::new(),
            };
            // C++ default arguments.
            if self.eat_punct("=") {
                self.parse_expr()?;
            }
            params.push(Param { name, declared_type });
            if self.eat_punct(",") {
                continue;
            }
            self.expect_punct(")")?;
            return Ok(params);
        }
    }

    // Statements

    /// Parse `{ stmt* }`.
    pub(crate) fn parse_block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if self.at_eof() {
                return Err(self.err("`}`"));
            }
            self.parse_stmt_recovering(&mut stmts)?;
        }
        self.bump();
        Ok(stmts)
    }

    /// A block, or a single statement standing in for one.
    fn parse_branch(&mut self) -> PResult<Vec<Stmt>> {
        if self.is_punct("{") {
            self.parse_block()
        } else {
            let mut stmts = Vec::new();
            self.parse_stmt_recovering(&mut stmts)?;
            Ok(stmts)
        }
    }

    pub(crate) fn parse_stmt_recovering(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let start = self.pos;
        match self.parse_stmt(out) {
            Ok(()) => Ok(()),
            Err(_) => {
                self.pos = start;
                self.recover_stmt(out)
            }
        }
    }

    fn parse_stmt(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let line = self.line();
        if self.is_punct("{") {
            let inner = self.parse_block()?;
            out.extend(inner);
            return Ok(());
        }
        if self.eat_punct(";") {
            return Ok(());
        }
        if self.eat_word("if") {
            self.expect_punct("(")?;
            let cond = self.parse_expr()?;
            self.expect_punct(")")?;
            let then_block = self.parse_branch()?;
            let else_block = if self.eat_word("else") {
                self.parse_branch()?
            } else {
                Vec::new()
            };
            out.push(Stmt::new(StmtKind::If { cond, then_block, else_block }, line));
            return Ok(());
        }
        if self.eat_word("return") {
            let value = if self.is_punct(";") { None } else { Some(self.parse_expr()?) };
            self.expect_punct(";")?;
            out.push(Stmt::new(StmtKind::Return(value), line));
            return Ok(());
        }
        if self.eat_word("throw") {
            let value = self.parse_expr()?;
            self.expect_punct(";")?;
            out.push(Stmt::new(StmtKind::Throw(value), line));
            return Ok(());
        }
        if let Tok::Ident(w) = self.peek() {
            if STMT_KEYWORDS.contains(&w.as_str()) && w != "this" && w != "new" {
                return Err(self.err("statement"));
            }
        }
        let save = self.pos;
        while self.is_word("final") || self.is_word("static") {
            self.bump();
        }
        if let Some((declared_type, name)) = self.try_type_then_ident() {
            if self.eat_punct(";") {
                out.push(Stmt::new(StmtKind::VarDecl { name, declared_type, init: None }, line));
                return Ok(());
            }
            if self.eat_punct("=") {
                let init = self.parse_expr()?;
                self.expect_punct(";")?;
                out.push(Stmt::new(
                    StmtKind::VarDecl { name, declared_type, init: Some(init) },
                    line,
                ));
                return Ok(());
            }
            if self.lang == Language::Cpp && self.is_punct("(") {
                let mut args = self.parse_args()?;
                self.expect_punct(";")?;
                let init = if args.len() == 1 {
                    args.pop()
                } else {
                    Some(Expr::New { type_name: base_type_name(&declared_type), args })
                };
                out.push(Stmt::new(StmtKind::VarDecl { name, declared_type, init }, line));
                return Ok(());
            }
        }
        self.pos = save;
        let expr = self.parse_expr()?;
        if self.eat_punct("=") {
            if !matches!(expr, Expr::Ident(_) | Expr::FieldAccess { .. }) {
                return Err(self.err("assignable expression"));
            }
            let value = self.parse_expr()?;
            self.expect_punct(";")?;
            out.push(Stmt::new(StmtKind::Assign { target: expr, value }, line));
            return Ok(());
        }
        self.expect_punct(";")?;
        out.push(Stmt::new(StmtKind::Expr(expr), line));
        Ok(())
    }

    /// Skip one unparseable statement. Calls that can still be recovered from
    /// its tokens become expression statements; otherwise it is kept verbatim.
    fn recover_stmt(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let start = self.pos;
        let line = self.line();
        let mut depth: i32 = 0;
        let end;
        loop {
            match self.peek() {
                Tok::Eof => return Err(self.err("end of statement")),
                Tok::Punct(p) => {
                    let p = *p;
                    match p {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" => depth -= 1,
                        "}" => {
                            if depth == 0 {
                                // Closing brace of the enclosing block.
                                end = self.pos;
                                break;
                            }
                            depth -= 1;
                            if depth == 0 {
                                self.bump();
                                // `};` closes a braced initializer statement.
                                self.eat_punct(";");
                                end = self.pos;
                                break;
                            }
                        }
                        ";" if depth == 0 => {
                            self.bump();
                            end = self.pos;
                            break;
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
            self.bump();
        }
        if end == start {
            return Err(self.err("statement"));
        }
        let calls = self.recover_calls(start, end);
        if calls.is_empty() {
            let raw = self.src[self.toks[start].start..self.toks[end - 1].end].to_string();
            out.push(Stmt::new(StmtKind::Opaque(raw), line));
        } else {
            for (call_line, call) in calls {
                out.push(Stmt::new(StmtKind::Expr(call), call_line));
            }
        }
        self.pos = end;
        Ok(())
    }

    fn recover_calls(&mut self, start: usize, end: usize) -> Vec<(u32, Expr)> {
        let mut found = Vec::new();
        let mut j = start;
        while j + 1 < end {
            let is_call_head = matches!(&self.toks[j].tok, Tok::Ident(w) if !NON_CALL_WORDS.contains(&w.as_str()))
                && (matches!(self.toks[j + 1].tok, Tok::Punct("("))
                    || matches!(self.toks[j + 1].tok, Tok::Punct("<")));
            if !is_call_head {
                j += 1;
                continue;
            }
            // Extend back over a receiver chain `a.b->c(`.
            let mut head = j;
            while head >= start + 2
                && matches!(self.toks[head - 1].tok, Tok::Punct(".") | Tok::Punct("->") | Tok::Punct("::"))
                && matches!(self.toks[head - 2].tok, Tok::Ident(_))
            {
                head -= 2;
            }
            self.pos = head;
            match self.parse_postfix() {
                Ok(e) if self.pos <= end && matches!(e, Expr::Call { .. }) => {
                    found.push((self.toks[head].line, e));
                    j = self.pos.max(j + 1);
                }
                _ => j += 1,
            }
        }
        found
    }

    // Expressions

    pub(crate) fn parse_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.parse_expr()?);
            if self.eat_punct(",") {
                continue;
            }
            self.expect_punct(")")?;
            return Ok(args);
        }
    }

    pub(crate) fn parse_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_and()?;
        while self.eat_punct("||") {
            let rhs = self.parse_and()?;
            lhs = Expr::Binary(BinaryOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_equality()?;
        while self.eat_punct("&&") {
            let rhs = self.parse_equality()?;
            lhs = Expr::Binary(BinaryOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_equality(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = if self.eat_punct("==") {
                BinaryOp::Eq
            } else if self.eat_punct("!=") {
                BinaryOp::Neq
            } else {
                break;
            };
            let rhs = self.parse_unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.parse_unary()?)));
        }
        if self.eat_punct("-") {
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.parse_unary()?)));
        }
        // Address-of and dereference carry no meaning for the analysis.
        if self.lang == Language::Cpp && (self.eat_punct("&") || self.eat_punct("*")) {
            return self.parse_unary();
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let mut e = self.parse_primary()?;
        loop {
            if self.is_punct(".") || self.is_punct("->") || self.is_punct("::") {
                self.bump();
                let name = self.expect_ident()?;
                if self.is_punct("(") {
                    let args = self.parse_args()?;
                    e = Expr::Call { receiver: Some(Box::new(e)), callee: name, args };
                } else {
                    e = Expr::FieldAccess { base: Box::new(e), field: name };
                }
            } else {
                return Ok(e);
            }
        }
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::IntLit(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::StrLit(s))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.parse_expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(w) if w == "new" => {
                self.bump();
                let type_name = self.qualified_name()?;
                let args = if self.is_punct("(") { self.parse_args()? } else { Vec::new() };
                Ok(Expr::New { type_name, args })
            }
            Tok::Ident(w) if STMT_KEYWORDS.contains(&w.as_str()) && w != "this" => {
                Err(self.err("expression"))
            }
            Tok::Ident(w) => {
                self.bump();
                if (w == "String16" || w == "String8") && self.is_punct("(") {
                    let save = self.pos;
                    self.bump();
                    if let Tok::Str(s) = self.peek().clone() {
                        self.bump();
                        if self.eat_punct(")") {
                            return Ok(Expr::StrLit(s));
                        }
                    }
                    self.pos = save;
                }
                if self.is_punct("(") {
                    let args = self.parse_args()?;
                    return Ok(Expr::Call { receiver: None, callee: w, args });
                }
                if self.is_punct("<") {
                    // Template call such as `interface_cast<IFoo>(binder)`.
                    let save = self.pos;
                    self.bump();
                    if self.parse_type().is_ok() && self.eat_punct(">") && self.is_punct("(") {
                        let args = self.parse_args()?;
                        return Ok(Expr::Call { receiver: None, callee: w, args });
                    }
                    self.pos = save;
                }
                Ok(Expr::Ident(w))
            }
            _ => Err(self.err("expression")),
        }
    }
}
