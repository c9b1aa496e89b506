//! Recursive-descent parser: one source file is one package.

use crate::model::{
    Abi, CallSiteRecord, CalleeExpr, Corpus, FunctionId, FunctionRecord, GenericParam,
    GlobalRecord, ImplRecord, InterfaceRecord, MethodSig, Origin, PackageUnit, Param, Span,
    Statement, TypeDecl, TypeRef, UnsafeOpKind,
};

use super::diag::{self, Diagnostic};
use super::token::{tokenize, Token, TokenKind};

/// Parses a set of named source files into a corpus.
///
/// On success every model invariant holds: unique names, dependencies
/// present, and an acyclic direct-dependency relation. Packages are sorted
/// by name so the result is independent of file ordering.
pub fn parse_corpus(files: &[(String, String)]) -> Result<Corpus, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut packages: Vec<PackageUnit> = Vec::new();

    for (name, text) in files {
        let (tokens, mut lex_diags) = tokenize(text, name);
        if !lex_diags.is_empty() {
            diags.append(&mut lex_diags);
            continue;
        }
        let mut parser = Parser { tokens: &tokens, pos: 0, source_name: name };
        match parser.package_file() {
            Ok(pkg) => packages.push(pkg),
            Err(d) => diags.push(d),
        }
    }

    packages.sort_by(|a, b| a.name.cmp(&b.name));
    validate_corpus(&packages, &mut diags);

    if diag::has_errors(&diags) {
        diag::sort_diagnostics(&mut diags);
        Err(diags)
    } else {
        Ok(Corpus { packages })
    }
}

fn validate_corpus(packages: &[PackageUnit], diags: &mut Vec<Diagnostic>) {
    for (i, pkg) in packages.iter().enumerate() {
        if packages[..i].iter().any(|p| p.name == pkg.name) {
            diags.push(Diagnostic::error(
                diag::E_DUP_PACKAGE,
                format!("package `{}` is declared more than once", pkg.name),
                &pkg.source_name,
                Span { line: 1, col: 1 },
            ));
        }
        validate_package_items(pkg, diags);
        for dep in &pkg.dependencies {
            if !packages.iter().any(|p| &p.name == dep) {
                diags.push(Diagnostic::error(
                    diag::E_UNKNOWN_DEPENDENCY,
                    format!("package `{}` depends on `{dep}`, which is not in the corpus", pkg.name),
                    &pkg.source_name,
                    Span { line: 1, col: 1 },
                ));
            }
        }
    }
    check_dependency_cycles(packages, diags);
}

fn validate_package_items(pkg: &PackageUnit, diags: &mut Vec<Diagnostic>) {
    for (i, f) in pkg.functions.iter().enumerate() {
        if pkg.functions[..i].iter().any(|g| g.id == f.id) {
            diags.push(Diagnostic::error(
                diag::E_DUP_FUNCTION,
                format!("function `{}` is declared more than once", f.id),
                &pkg.source_name,
                f.loc,
            ));
        }
    }
    for (i, it) in pkg.interfaces.iter().enumerate() {
        if pkg.interfaces[..i].iter().any(|j| j.name == it.name) {
            diags.push(Diagnostic::error(
                diag::E_DUP_INTERFACE,
                format!("interface `{}` is declared more than once", it.name),
                &pkg.source_name,
                it.loc,
            ));
        }
    }
    for (i, t) in pkg.types.iter().enumerate() {
        if pkg.types[..i].iter().any(|u| u.name == t.name) {
            diags.push(Diagnostic::error(
                diag::E_DUP_TYPE,
                format!("type `{}` is declared more than once", t.name),
                &pkg.source_name,
                t.loc,
            ));
        }
    }
    for (i, g) in pkg.globals.iter().enumerate() {
        if pkg.globals[..i].iter().any(|h| h.name == g.name) {
            diags.push(Diagnostic::error(
                diag::E_DUP_GLOBAL,
                format!("global `{}` is declared more than once", g.name),
                &pkg.source_name,
                g.loc,
            ));
        }
    }
    for (i, im) in pkg.impls.iter().enumerate() {
        if pkg.impls[..i]
            .iter()
            .any(|jm| jm.interface == im.interface && jm.self_type == im.self_type)
        {
            diags.push(Diagnostic::error(
                diag::E_DUP_IMPL,
                format!("duplicate implementation of `{}` for `{}`", im.interface, im.self_type),
                &pkg.source_name,
                im.loc,
            ));
        }
    }
}

fn check_dependency_cycles(packages: &[PackageUnit], diags: &mut Vec<Diagnostic>) {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut marks: Vec<Mark> = vec![Mark::White; packages.len()];
    let index = |name: &str| packages.iter().position(|p| p.name == name);

    fn visit(
        at: usize,
        packages: &[PackageUnit],
        marks: &mut [Mark],
        index: &dyn Fn(&str) -> Option<usize>,
        trail: &mut Vec<String>,
        diags: &mut Vec<Diagnostic>,
    ) {
        marks[at] = Mark::Grey;
        trail.push(packages[at].name.clone());
        for dep in &packages[at].dependencies {
            let Some(j) = index(dep) else { continue };
            match marks[j] {
                Mark::White => visit(j, packages, marks, index, trail, diags),
                Mark::Grey => {
                    let start = trail.iter().position(|n| n == dep).unwrap_or(0);
                    let mut cycle = trail[start..].to_vec();
                    cycle.push(dep.clone());
                    diags.push(Diagnostic::error(
                        diag::E_DEP_CYCLE,
                        format!("dependency cycle: {}", cycle.join(" -> ")),
                        &packages[at].source_name,
                        Span { line: 1, col: 1 },
                    ));
                }
                Mark::Black => {}
            }
        }
        trail.pop();
        marks[at] = Mark::Black;
    }

    for i in 0..packages.len() {
        if marks[i] == Mark::White {
            visit(i, packages, &mut marks, &index, &mut Vec::new(), diags);
        }
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    source_name: &'a str,
}

/// Lexical scope the parser threads through a function body.
struct BodyCtx<'g> {
    generics: &'g [GenericParam],
    unsafe_depth: u32,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek2(&self) -> Option<&Token> {
        self.tokens.get(self.pos + 1)
    }

    fn here(&self) -> Span {
        self.peek()
            .map(|t| t.loc)
            .or_else(|| self.tokens.last().map(|t| t.loc))
            .unwrap_or(Span { line: 1, col: 1 })
    }

    fn err(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic::error(diag::E_PARSE, message, self.source_name, self.here())
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword && t.lexeme == kw)
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Punct && t.lexeme == p)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Span, Diagnostic> {
        if self.at_keyword(kw) {
            let loc = self.tokens[self.pos].loc;
            self.pos += 1;
            Ok(loc)
        } else {
            Err(self.err(format!("expected `{kw}`")))
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<Span, Diagnostic> {
        if self.at_punct(p) {
            let loc = self.tokens[self.pos].loc;
            self.pos += 1;
            Ok(loc)
        } else {
            Err(self.err(format!("expected `{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Span), Diagnostic> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                let out = (t.lexeme.clone(), t.loc);
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.err("expected an identifier")),
        }
    }

    fn package_file(&mut self) -> Result<PackageUnit, Diagnostic> {
        self.expect_keyword("package")
            .map_err(|_| self.err("a package file must begin with a `package` header"))?;
        let (name, _) = self.expect_ident()?;
        self.expect_punct(";")?;
        let mut pkg = PackageUnit::empty(&name, self.source_name);
        while self.peek().is_some() {
            self.item(&mut pkg)?;
        }
        Ok(pkg)
    }

    fn item(&mut self, pkg: &mut PackageUnit) -> Result<(), Diagnostic> {
        if self.eat_keyword("use") {
            let (dep, _) = self.expect_ident()?;
            self.expect_punct(";")?;
            if !pkg.dependencies.contains(&dep) {
                pkg.dependencies.push(dep);
            }
            return Ok(());
        }
        if self.eat_keyword("type") {
            let (name, loc) = self.expect_ident()?;
            self.expect_punct(";")?;
            pkg.types.push(TypeDecl { name, loc });
            return Ok(());
        }
        if self.eat_keyword("global") {
            let mutable = self.eat_keyword("mut");
            let (name, loc) = self.expect_ident()?;
            self.expect_punct(";")?;
            pkg.globals.push(GlobalRecord { name, mutable, loc });
            return Ok(());
        }
        if self.at_keyword("extern") {
            return self.extern_fn(pkg);
        }

        let declared_unsafe = self.eat_keyword("unsafe");
        if self.at_keyword("interface") {
            return self.interface(pkg, declared_unsafe);
        }
        if self.at_keyword("impl") {
            return self.impl_block(pkg, declared_unsafe);
        }
        if self.at_keyword("fn") {
            let f = self.fn_decl(pkg, declared_unsafe, None)?;
            pkg.functions.push(f);
            return Ok(());
        }
        Err(self.err("expected an item (use, type, global, interface, impl, extern, or fn)"))
    }

    fn extern_fn(&mut self, pkg: &mut PackageUnit) -> Result<(), Diagnostic> {
        self.expect_keyword("extern")?;
        let abi = match self.peek() {
            Some(t) if t.kind == TokenKind::AbiString => {
                let abi = match t.lexeme.as_str() {
                    "\"C\"" => Abi::C,
                    "\"intrinsic\"" => Abi::Intrinsic,
                    _ => Abi::Native,
                };
                self.pos += 1;
                abi
            }
            _ => return Err(self.err("expected an ABI string after `extern`")),
        };
        self.expect_keyword("fn")?;
        let (name, loc) = self.expect_ident()?;
        self.expect_punct("(")?;
        let params = self.params(None)?;
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        pkg.functions.push(FunctionRecord {
            id: FunctionId::free(&pkg.name, &name),
            declared_unsafe: true,
            generics: Vec::new(),
            params,
            body: Vec::new(),
            origin: Origin::External { abi },
            generated: false,
            loc,
        });
        Ok(())
    }

    fn interface(&mut self, pkg: &mut PackageUnit, declared_unsafe: bool) -> Result<(), Diagnostic> {
        let loc = self.expect_keyword("interface")?;
        let (name, _) = self.expect_ident()?;
        self.expect_punct("{")?;
        let mut methods = Vec::new();
        while !self.at_punct("}") {
            let sig_unsafe = self.eat_keyword("unsafe");
            self.expect_keyword("fn")?;
            let (mname, _) = self.expect_ident()?;
            self.expect_punct("(")?;
            let params = self.params(Some(&TypeRef::DynInterface(name.clone())))?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            if methods.iter().any(|m: &MethodSig| m.name == mname) {
                return Err(self.err(format!("method `{mname}` declared twice in interface `{name}`")));
            }
            methods.push(MethodSig { name: mname, declared_unsafe: sig_unsafe, params });
        }
        self.expect_punct("}")?;
        pkg.interfaces.push(InterfaceRecord { name, declared_unsafe, methods, loc });
        Ok(())
    }

    fn impl_block(&mut self, pkg: &mut PackageUnit, declared_unsafe: bool) -> Result<(), Diagnostic> {
        let loc = self.expect_keyword("impl")?;
        let (interface, _) = self.expect_ident()?;
        self.expect_keyword("for")?;
        let (self_type, _) = self.expect_ident()?;
        self.expect_punct("{")?;
        let mut methods = Vec::new();
        while !self.at_punct("}") {
            let m_unsafe = self.eat_keyword("unsafe");
            let f = self.fn_decl(pkg, m_unsafe, Some(&self_type))?;
            methods.push(f.id.clone());
            pkg.functions.push(f);
        }
        self.expect_punct("}")?;
        pkg.impls.push(ImplRecord { interface, self_type, declared_unsafe, methods, loc });
        Ok(())
    }

    /// Parses a `fn` declaration. `self_type` is `Some` inside an impl block,
    /// where the method id is qualified by the implementing type and `self`
    /// parameters are permitted. The leading `unsafe` has been consumed.
    fn fn_decl(
        &mut self,
        pkg: &PackageUnit,
        declared_unsafe: bool,
        self_type: Option<&str>,
    ) -> Result<FunctionRecord, Diagnostic> {
        self.expect_keyword("fn")?;
        let (name, loc) = self.expect_ident()?;
        let mut generics = Vec::new();
        if self.at_punct("<") {
            self.expect_punct("<")?;
            loop {
                let (gname, _) = self.expect_ident()?;
                let bound = if self.at_punct(":") {
                    self.expect_punct(":")?;
                    Some(self.expect_ident()?.0)
                } else {
                    None
                };
                if generics.iter().any(|g: &GenericParam| g.name == gname) {
                    return Err(self.err(format!("generic parameter `{gname}` declared twice")));
                }
                generics.push(GenericParam { name: gname, bound });
                if self.at_punct(",") {
                    self.expect_punct(",")?;
                } else {
                    break;
                }
            }
            self.expect_punct(">")?;
        }
        self.expect_punct("(")?;
        let self_ty = self_type.map(|t| TypeRef::Concrete(t.to_string()));
        let params = self.params_with_generics(self_ty.as_ref(), &generics)?;
        self.expect_punct(")")?;
        let ctx = BodyCtx { generics: &generics, unsafe_depth: 0 };
        let body = self.block(&ctx)?;
        let id = match self_type {
            Some(t) => FunctionId::method(&pkg.name, t, &name),
            None => FunctionId::free(&pkg.name, &name),
        };
        Ok(FunctionRecord {
            id,
            declared_unsafe,
            generics,
            params,
            body,
            origin: Origin::Native,
            generated: false,
            loc,
        })
    }

    fn params(&mut self, self_ty: Option<&TypeRef>) -> Result<Vec<Param>, Diagnostic> {
        self.params_with_generics(self_ty, &[])
    }

    fn params_with_generics(
        &mut self,
        self_ty: Option<&TypeRef>,
        generics: &[GenericParam],
    ) -> Result<Vec<Param>, Diagnostic> {
        let mut params = Vec::new();
        if self.at_punct(")") {
            return Ok(params);
        }
        loop {
            if self.at_keyword("self") {
                let Some(ty) = self_ty else {
                    return Err(self.err("`self` parameter outside an implementation or interface"));
                };
                self.pos += 1;
                params.push(Param { name: "self".into(), ty: ty.clone() });
            } else {
                let (name, _) = self.expect_ident()?;
                self.expect_punct(":")?;
                let ty = self.type_ref(generics)?;
                params.push(Param { name, ty });
            }
            if self.at_punct(",") {
                self.expect_punct(",")?;
            } else {
                break;
            }
        }
        Ok(params)
    }

    /// `type := IDENT | "dyn" IDENT | "fnptr"`. Names matching an enclosing
    /// generic parameter become generic variables.
    fn type_ref(&mut self, generics: &[GenericParam]) -> Result<TypeRef, Diagnostic> {
        if self.eat_keyword("dyn") {
            let (name, _) = self.expect_ident()?;
            return Ok(TypeRef::DynInterface(name));
        }
        if self.eat_keyword("fnptr") {
            return Ok(TypeRef::FnValue);
        }
        let (name, _) = self.expect_ident()?;
        if generics.iter().any(|g| g.name == name) {
            Ok(TypeRef::GenericVar(name))
        } else {
            Ok(TypeRef::Concrete(name))
        }
    }

    fn block(&mut self, ctx: &BodyCtx<'_>) -> Result<Vec<Statement>, Diagnostic> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.at_punct("}") {
            stmts.push(self.statement(ctx)?);
        }
        self.expect_punct("}")?;
        Ok(stmts)
    }

    fn statement(&mut self, ctx: &BodyCtx<'_>) -> Result<Statement, Diagnostic> {
        if self.at_keyword("let") {
            let loc = self.expect_keyword("let")?;
            let (name, _) = self.expect_ident()?;
            self.expect_punct(":")?;
            let ty = self.type_ref(ctx.generics)?;
            self.expect_punct(";")?;
            return Ok(Statement::LocalDecl { name, ty, loc });
        }
        if self.at_keyword("unsafe") {
            let loc = self.expect_keyword("unsafe")?;
            let inner = BodyCtx { generics: ctx.generics, unsafe_depth: ctx.unsafe_depth + 1 };
            let body = self.block(&inner)?;
            return Ok(Statement::UnsafeBlock { body, loc });
        }
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Keyword && t.lexeme.starts_with('@') {
                return self.primitive();
            }
        }
        if self.at_keyword("indirect") {
            let loc = self.expect_keyword("indirect")?;
            let (var, _) = self.expect_ident()?;
            self.expect_punct(";")?;
            return Ok(Statement::Call(CallSiteRecord {
                callee: CalleeExpr::Indirect { var },
                type_args: Vec::new(),
                args: Vec::new(),
                in_unsafe_block: ctx.unsafe_depth > 0,
                resolved: None,
                loc,
            }));
        }
        self.call_statement(ctx)
    }

    fn primitive(&mut self) -> Result<Statement, Diagnostic> {
        let tok = self.peek().expect("caller checked").clone();
        self.pos += 1;
        let loc = tok.loc;
        let (kind, global, write) = match tok.lexeme.as_str() {
            "@deref_ptr" => (UnsafeOpKind::RawDeref, None, false),
            "@asm" => (UnsafeOpKind::InlineAsm, None, false),
            "@union_field" => (UnsafeOpKind::UnionField, None, false),
            "@read_global" => (UnsafeOpKind::GlobalAccess, Some(self.expect_ident()?.0), false),
            "@write_global" => (UnsafeOpKind::GlobalAccess, Some(self.expect_ident()?.0), true),
            other => return Err(self.err(format!("unknown primitive `{other}`"))),
        };
        self.expect_punct(";")?;
        Ok(Statement::Primitive { kind, global, write, loc })
    }

    fn call_statement(&mut self, ctx: &BodyCtx<'_>) -> Result<Statement, Diagnostic> {
        let (first, loc) = self.expect_ident()?;

        if self.at_punct(".") {
            self.expect_punct(".")?;
            let (method, _) = self.expect_ident()?;
            self.expect_punct("(")?;
            let args = self.call_args()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(Statement::Call(CallSiteRecord {
                callee: CalleeExpr::Method { receiver: first, method },
                type_args: Vec::new(),
                args,
                in_unsafe_block: ctx.unsafe_depth > 0,
                resolved: None,
                loc,
            }));
        }

        let mut segments = vec![first];
        let mut type_args = Vec::new();
        while self.at_punct("::") {
            if matches!(self.peek2(), Some(t) if t.kind == TokenKind::Punct && t.lexeme == "<") {
                self.expect_punct("::")?;
                self.expect_punct("<")?;
                loop {
                    type_args.push(self.type_ref(ctx.generics)?);
                    if self.at_punct(",") {
                        self.expect_punct(",")?;
                    } else {
                        break;
                    }
                }
                self.expect_punct(">")?;
                break;
            }
            self.expect_punct("::")?;
            let (seg, _) = self.expect_ident()?;
            segments.push(seg);
            if segments.len() > 3 {
                return Err(self.err("call paths have at most three segments"));
            }
        }
        self.expect_punct("(")?;
        let args = self.call_args()?;
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        Ok(Statement::Call(CallSiteRecord {
            callee: CalleeExpr::Path(segments),
            type_args,
            args,
            in_unsafe_block: ctx.unsafe_depth > 0,
            resolved: None,
            loc,
        }))
    }

    fn call_args(&mut self) -> Result<Vec<String>, Diagnostic> {
        let mut args = Vec::new();
        if self.at_punct(")") {
            return Ok(args);
        }
        loop {
            let (arg, _) = self.expect_ident()?;
            args.push(arg);
            if self.at_punct(",") {
                self.expect_punct(",")?;
            } else {
                break;
            }
        }
        Ok(args)
    }
}
