//! Name resolution and call classification.
//!
//! Binds every call site to its target and classifies it as static, generic,
//! dynamic, generic-receiver, or indirect. Receiver types come only from
//! parameter and local declarations. Type and interface names are rewritten
//! to package-qualified form (`pkg::Name`).

use std::collections::BTreeMap;

use crate::model::{
    CalleeExpr, Corpus, FunctionId, FunctionRecord, GenericParam, InterfaceRecord,
    PackageUnit, ResolvedCallee, Span, Statement, TypeRef, UnsafeOpKind,
};

use super::diag::{self, Diagnostic};

/// A corpus whose call sites are all bound and whose type names are
/// qualified. Construction goes through [`resolve_names`], so holding one is
/// proof the corpus resolved without errors.
#[derive(Clone, Debug)]
pub struct ResolvedCorpus {
    corpus: Corpus,
    tables: SymbolTables,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct SymbolTables {
    /// Package name -> index in `corpus.packages`.
    pub packages: BTreeMap<String, usize>,
    /// Qualified type name -> owning package index.
    pub types: BTreeMap<String, usize>,
    /// Qualified interface name -> (package index, interface index).
    pub interfaces: BTreeMap<String, (usize, usize)>,
    /// Function id -> (package index, function index).
    pub functions: BTreeMap<FunctionId, (usize, usize)>,
    /// (qualified interface, qualified type) -> impl method ids by short name.
    pub impls: BTreeMap<(String, String), BTreeMap<String, FunctionId>>,
    /// (qualified type, method name) -> implementations providing it.
    pub methods_by_type: BTreeMap<(String, String), Vec<(String, FunctionId)>>,
}

impl ResolvedCorpus {
    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn packages(&self) -> &[PackageUnit] {
        &self.corpus.packages
    }

    pub fn function(&self, id: &FunctionId) -> Option<&FunctionRecord> {
        let (p, f) = *self.tables.functions.get(id)?;
        Some(&self.corpus.packages[p].functions[f])
    }

    pub fn interface(&self, qualified: &str) -> Option<&InterfaceRecord> {
        let (p, i) = *self.tables.interfaces.get(qualified)?;
        Some(&self.corpus.packages[p].interfaces[i])
    }

    /// The unique implementation method for `(interface, type, method)`.
    pub fn impl_method(&self, interface: &str, self_type: &str, method: &str) -> Option<&FunctionId> {
        self.tables
            .impls
            .get(&(interface.to_string(), self_type.to_string()))?
            .get(method)
    }

    /// All implementations of `method` on `self_type`, as (interface, id).
    pub fn methods_on_type(&self, self_type: &str, method: &str) -> &[(String, FunctionId)] {
        self.tables
            .methods_by_type
            .get(&(self_type.to_string(), method.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Does an implementation of `interface` for `ty` exist?
    pub fn satisfies_bound(&self, ty: &TypeRef, interface: &str) -> bool {
        match ty {
            TypeRef::Concrete(name) => {
                self.tables.impls.contains_key(&(interface.to_string(), name.clone()))
            }
            TypeRef::DynInterface(name) => name == interface,
            _ => false,
        }
    }

    /// Whether calling this resolved target is an unsafe operation: the
    /// target is declared unsafe or external, or the interface method
    /// signature is declared unsafe. Indirect calls are never unsafe.
    pub fn is_unsafe_callee(&self, resolved: &ResolvedCallee) -> bool {
        match resolved {
            ResolvedCallee::Static { target } | ResolvedCallee::Generic { target } => {
                self.function(target).map(|f| f.declared_unsafe).unwrap_or(false)
            }
            ResolvedCallee::Dynamic { interface, method }
            | ResolvedCallee::GenericReceiver { interface, method, .. } => self
                .interface(interface)
                .and_then(|it| it.method(method))
                .map(|sig| sig.declared_unsafe)
                .unwrap_or(false),
            ResolvedCallee::Indirect => false,
        }
    }
}

/// Resolves all names in a parsed corpus, classifying every call site.
pub fn resolve_names(corpus: Corpus) -> Result<ResolvedCorpus, Vec<Diagnostic>> {
    let mut corpus = corpus;
    let mut diags = Vec::new();

    let mut tables = collect_declarations(&corpus, &mut diags);
    register_impls(&corpus, &mut tables, &mut diags);
    if diag::has_errors(&diags) {
        diag::sort_diagnostics(&mut diags);
        return Err(diags);
    }

    qualify_signatures(&mut corpus, &tables, &mut diags);
    // Callee signatures must be fully qualified before bodies are resolved,
    // so bound checks compare qualified interface names.
    let fn_infos = collect_fn_infos(&corpus);
    resolve_bodies(&mut corpus, &tables, &fn_infos, &mut diags);

    if diag::has_errors(&diags) {
        diag::sort_diagnostics(&mut diags);
        Err(diags)
    } else {
        Ok(ResolvedCorpus { corpus, tables })
    }
}

#[derive(Clone, Debug)]
struct FnInfo {
    /// Generic parameters with qualified bounds.
    generics: Vec<GenericParam>,
}

fn collect_fn_infos(corpus: &Corpus) -> BTreeMap<FunctionId, FnInfo> {
    corpus
        .functions()
        .map(|(_, f)| {
            (
                f.id.clone(),
                FnInfo { generics: f.generics.clone() },
            )
        })
        .collect()
}

fn collect_declarations(corpus: &Corpus, _diags: &mut [Diagnostic]) -> SymbolTables {
    let mut tables = SymbolTables::default();
    for (pi, pkg) in corpus.packages.iter().enumerate() {
        tables.packages.insert(pkg.name.clone(), pi);
        for t in &pkg.types {
            tables.types.insert(format!("{}::{}", pkg.name, t.name), pi);
        }
        for (ii, it) in pkg.interfaces.iter().enumerate() {
            tables.interfaces.insert(format!("{}::{}", pkg.name, it.name), (pi, ii));
        }
        for (fi, f) in pkg.functions.iter().enumerate() {
            tables.functions.insert(f.id.clone(), (pi, fi));
        }
    }
    tables
}

fn register_impls(corpus: &Corpus, tables: &mut SymbolTables, diags: &mut Vec<Diagnostic>) {
    for pkg in &corpus.packages {
        for im in &pkg.impls {
            let Some(interface) =
                resolve_item_name(&im.interface, pkg, corpus, &NameSpace::Interface, diags, im.loc)
            else {
                continue;
            };
            let Some(self_type) =
                resolve_item_name(&im.self_type, pkg, corpus, &NameSpace::Type, diags, im.loc)
            else {
                continue;
            };

            let (ipi, iii) = tables.interfaces[&interface];
            let sig_record = &corpus.packages[ipi].interfaces[iii];
            if sig_record.declared_unsafe != im.declared_unsafe {
                let msg = if sig_record.declared_unsafe {
                    format!("implementation of unsafe interface `{interface}` must be marked unsafe")
                } else {
                    format!("implementation of safe interface `{interface}` may not be marked unsafe")
                };
                diags.push(Diagnostic::error(diag::E_IMPL_SAFETY, msg, &pkg.source_name, im.loc));
            }

            let mut method_map: BTreeMap<String, FunctionId> = BTreeMap::new();
            for id in &im.methods {
                let short = id.as_str().rsplit("::").next().unwrap().to_string();
                let f = corpus.function(id).expect("impl method is in its package");
                if !f.generics.is_empty() {
                    diags.push(Diagnostic::error(
                        diag::E_GENERIC_METHOD,
                        format!("implementation method `{id}` may not declare generic parameters"),
                        &pkg.source_name,
                        f.loc,
                    ));
                }
                match sig_record.method(&short) {
                    None => diags.push(Diagnostic::error(
                        diag::E_IMPL_COVERAGE,
                        format!("method `{short}` is not declared by interface `{interface}`"),
                        &pkg.source_name,
                        f.loc,
                    )),
                    Some(sig) if sig.declared_unsafe != f.declared_unsafe => {
                        diags.push(Diagnostic::error(
                            diag::E_METHOD_SAFETY,
                            format!(
                                "method `{short}` must match the `unsafe` marker of its interface signature"
                            ),
                            &pkg.source_name,
                            f.loc,
                        ))
                    }
                    Some(_) => {}
                }
                method_map.insert(short, id.clone());
            }
            for sig in &sig_record.methods {
                if !method_map.contains_key(&sig.name) {
                    diags.push(Diagnostic::error(
                        diag::E_IMPL_COVERAGE,
                        format!(
                            "implementation of `{interface}` for `{self_type}` is missing method `{}`",
                            sig.name
                        ),
                        &pkg.source_name,
                        im.loc,
                    ));
                }
            }

            let key = (interface.clone(), self_type.clone());
            if tables.impls.contains_key(&key) {
                diags.push(Diagnostic::error(
                    diag::E_DUP_IMPL,
                    format!("`{interface}` is already implemented for `{self_type}` elsewhere in the corpus"),
                    &pkg.source_name,
                    im.loc,
                ));
                continue;
            }
            for (short, id) in &method_map {
                tables
                    .methods_by_type
                    .entry((self_type.clone(), short.clone()))
                    .or_default()
                    .push((interface.clone(), id.clone()));
            }
            tables.impls.insert(key, method_map);
        }
    }
    for entries in tables.methods_by_type.values_mut() {
        entries.sort();
    }
}

enum NameSpace {
    Type,
    Interface,
}

/// Resolves a surface type or interface name in a package's scope: the
/// package itself shadows its direct dependencies; a name found in two
/// dependencies is ambiguous.
fn resolve_item_name(
    short: &str,
    pkg: &PackageUnit,
    corpus: &Corpus,
    space: &NameSpace,
    diags: &mut Vec<Diagnostic>,
    loc: Span,
) -> Option<String> {
    let declares = |p: &PackageUnit| match space {
        NameSpace::Type => p.types.iter().any(|t| t.name == short),
        NameSpace::Interface => p.interfaces.iter().any(|i| i.name == short),
    };
    if declares(pkg) {
        return Some(format!("{}::{short}", pkg.name));
    }
    let mut hits: Vec<&str> = pkg
        .dependencies
        .iter()
        .filter_map(|d| corpus.package(d))
        .filter(|p| declares(p))
        .map(|p| p.name.as_str())
        .collect();
    hits.sort_unstable();
    match hits.len() {
        0 => {
            let (code, what) = match space {
                NameSpace::Type => (diag::E_UNKNOWN_TYPE, "type"),
                NameSpace::Interface => (diag::E_UNKNOWN_INTERFACE, "interface"),
            };
            diags.push(Diagnostic::error(
                code,
                format!("unknown {what} `{short}` in package `{}`", pkg.name),
                &pkg.source_name,
                loc,
            ));
            None
        }
        1 => Some(format!("{}::{short}", hits[0])),
        _ => {
            let (code, what) = match space {
                NameSpace::Type => (diag::E_AMBIGUOUS_TYPE, "type"),
                NameSpace::Interface => (diag::E_AMBIGUOUS_INTERFACE, "interface"),
            };
            diags.push(Diagnostic::error(
                code,
                format!("{what} `{short}` is declared by dependencies {}", hits.join(" and ")),
                &pkg.source_name,
                loc,
            ));
            None
        }
    }
}

fn qualify_type(
    ty: &TypeRef,
    pkg: &PackageUnit,
    corpus: &Corpus,
    diags: &mut Vec<Diagnostic>,
    loc: Span,
) -> TypeRef {
    match ty {
        TypeRef::Concrete(name) => {
            match resolve_item_name(name, pkg, corpus, &NameSpace::Type, diags, loc) {
                Some(q) => TypeRef::Concrete(q),
                None => ty.clone(),
            }
        }
        TypeRef::DynInterface(name) => {
            match resolve_item_name(name, pkg, corpus, &NameSpace::Interface, diags, loc) {
                Some(q) => TypeRef::DynInterface(q),
                None => ty.clone(),
            }
        }
        other => other.clone(),
    }
}

fn qualify_signatures(corpus: &mut Corpus, _tables: &SymbolTables, diags: &mut Vec<Diagnostic>) {
    let snapshot = corpus.clone();
    for pkg in &mut corpus.packages {
        let scope_pkg = snapshot.package(&pkg.name).expect("package exists in snapshot");
        for f in &mut pkg.functions {
            for g in &mut f.generics {
                if let Some(bound) = &g.bound {
                    g.bound = resolve_item_name(
                        bound,
                        scope_pkg,
                        &snapshot,
                        &NameSpace::Interface,
                        diags,
                        f.loc,
                    );
                }
            }
            for p in &mut f.params {
                p.ty = qualify_type(&p.ty, scope_pkg, &snapshot, diags, f.loc);
            }
        }
        for it in &mut pkg.interfaces {
            let loc = it.loc;
            for m in &mut it.methods {
                for p in &mut m.params {
                    p.ty = qualify_type(&p.ty, scope_pkg, &snapshot, diags, loc);
                }
            }
        }
        for im in &mut pkg.impls {
            if let Some(q) =
                resolve_item_name(&im.interface, scope_pkg, &snapshot, &NameSpace::Interface, diags, im.loc)
            {
                im.interface = q;
            }
            if let Some(q) =
                resolve_item_name(&im.self_type, scope_pkg, &snapshot, &NameSpace::Type, diags, im.loc)
            {
                im.self_type = q;
            }
        }
    }
}

/// Lexical environment for a function body: parameters plus block-scoped
/// locals, innermost first.
struct Env {
    scopes: Vec<Vec<(String, TypeRef)>>,
}

impl Env {
    fn lookup(&self, name: &str) -> Option<&TypeRef> {
        self.scopes
            .iter()
            .rev()
            .find_map(|scope| scope.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t))
    }
}

struct BodyResolver<'a> {
    snapshot: &'a Corpus,
    tables: &'a SymbolTables,
    fn_infos: &'a BTreeMap<FunctionId, FnInfo>,
    pkg: &'a PackageUnit,
    caller_generics: &'a [GenericParam],
    diags: &'a mut Vec<Diagnostic>,
}

fn resolve_bodies(
    corpus: &mut Corpus,
    tables: &SymbolTables,
    fn_infos: &BTreeMap<FunctionId, FnInfo>,
    diags: &mut Vec<Diagnostic>,
) {
    let snapshot = corpus.clone();
    for pkg in &mut corpus.packages {
        let scope_pkg = snapshot.package(&pkg.name).expect("package exists in snapshot");
        for f in &mut pkg.functions {
            let mut env = Env { scopes: vec![f.params.iter().map(|p| (p.name.clone(), p.ty.clone())).collect()] };
            let mut body = std::mem::take(&mut f.body);
            let mut resolver = BodyResolver {
                snapshot: &snapshot,
                tables,
                fn_infos,
                pkg: scope_pkg,
                caller_generics: &f.generics,
                diags,
            };
            resolver.resolve_block(&mut body, &mut env);
            f.body = body;
        }
    }
}

impl BodyResolver<'_> {
    fn error(&mut self, code: &'static str, message: String, loc: Span) {
        self.diags.push(Diagnostic::error(code, message, &self.pkg.source_name, loc));
    }

    fn resolve_block(&mut self, stmts: &mut [Statement], env: &mut Env) {
        env.scopes.push(Vec::new());
        for stmt in stmts.iter_mut() {
            match stmt {
                Statement::LocalDecl { name, ty, loc } => {
                    let qualified = self.qualify_local_type(ty, *loc);
                    *ty = qualified.clone();
                    env.scopes.last_mut().unwrap().push((name.clone(), qualified));
                }
                Statement::UnsafeBlock { body, .. } => self.resolve_block(body, env),
                Statement::Primitive { kind, global, loc, .. } => {
                    if *kind == UnsafeOpKind::GlobalAccess {
                        let name = global.clone().unwrap_or_default();
                        self.check_global(&name, *loc);
                    }
                }
                Statement::Call(call) => {
                    let loc = call.loc;
                    let mut type_args = Vec::with_capacity(call.type_args.len());
                    for t in &call.type_args {
                        type_args.push(self.qualify_local_type(t, loc));
                    }
                    call.type_args = type_args;
                    call.resolved = self.classify_call(call, env);
                }
            }
        }
        env.scopes.pop();
    }

    /// Qualifies a type written inside a body; generic variables were
    /// already identified by the parser.
    fn qualify_local_type(&mut self, ty: &TypeRef, loc: Span) -> TypeRef {
        qualify_type(ty, self.pkg, self.snapshot, self.diags, loc)
    }

    fn check_global(&mut self, name: &str, loc: Span) {
        let mut candidates: Vec<&crate::model::GlobalRecord> = Vec::new();
        if let Some(g) = self.pkg.global(name) {
            candidates.push(g);
        } else {
            let mut dep_hits: Vec<(&str, &crate::model::GlobalRecord)> = self
                .pkg
                .dependencies
                .iter()
                .filter_map(|d| self.snapshot.package(d))
                .filter_map(|p| p.global(name).map(|g| (p.name.as_str(), g)))
                .collect();
            dep_hits.sort_by_key(|(n, _)| *n);
            if dep_hits.len() > 1 {
                let pkgs: Vec<&str> = dep_hits.iter().map(|(n, _)| *n).collect();
                self.error(
                    diag::E_AMBIGUOUS_GLOBAL,
                    format!("global `{name}` is declared by dependencies {}", pkgs.join(" and ")),
                    loc,
                );
                return;
            }
            candidates.extend(dep_hits.into_iter().map(|(_, g)| g));
        }
        match candidates.first() {
            None => self.error(
                diag::E_UNKNOWN_GLOBAL,
                format!("unknown global `{name}` in package `{}`", self.pkg.name),
                loc,
            ),
            Some(g) if !g.mutable => self.error(
                diag::E_IMMUTABLE_GLOBAL,
                format!("global `{name}` is immutable and may not appear in a global-access primitive"),
                loc,
            ),
            Some(_) => {}
        }
    }

    fn classify_call(
        &mut self,
        call: &crate::model::CallSiteRecord,
        env: &Env,
    ) -> Option<ResolvedCallee> {
        let loc = call.loc;
        match &call.callee {
            CalleeExpr::Indirect { var } => {
                match env.lookup(var) {
                    None => {
                        self.error(
                            diag::E_UNKNOWN_CALLEE,
                            format!("no parameter or local named `{var}`"),
                            loc,
                        );
                        None
                    }
                    Some(TypeRef::FnValue) => Some(ResolvedCallee::Indirect),
                    Some(ty) => {
                        self.error(
                            diag::E_INDIRECT_NOT_FNPTR,
                            format!("`{var}` has type `{ty}`, not `fnptr`"),
                            loc,
                        );
                        None
                    }
                }
            }
            CalleeExpr::Method { receiver, method } => {
                let Some(recv_ty) = env.lookup(receiver).cloned() else {
                    self.error(
                        diag::E_UNKNOWN_CALLEE,
                        format!("no parameter or local named `{receiver}`"),
                        loc,
                    );
                    return None;
                };
                match recv_ty {
                    TypeRef::Concrete(ty) => self.static_method(&ty, method, loc),
                    TypeRef::DynInterface(interface) => {
                        self.interface_method(&interface, method, loc)?;
                        Some(ResolvedCallee::Dynamic { interface, method: method.clone() })
                    }
                    TypeRef::GenericVar(var) => {
                        let bound = self
                            .caller_generics
                            .iter()
                            .find(|g| g.name == var)
                            .and_then(|g| g.bound.clone());
                        match bound {
                            None => {
                                self.error(
                                    diag::E_UNKNOWN_METHOD,
                                    format!("generic receiver `{receiver}: {var}` has no interface bound, so no method can be called on it"),
                                    loc,
                                );
                                None
                            }
                            Some(interface) => {
                                self.interface_method(&interface, method, loc)?;
                                Some(ResolvedCallee::GenericReceiver {
                                    interface,
                                    method: method.clone(),
                                    var,
                                })
                            }
                        }
                    }
                    TypeRef::FnValue => {
                        self.error(
                            diag::E_UNKNOWN_METHOD,
                            format!("`{receiver}` is a function value and has no methods"),
                            loc,
                        );
                        None
                    }
                }
            }
            CalleeExpr::Path(segments) => self.path_call(segments, call, loc),
        }
    }

    /// Verifies the interface declares the method.
    fn interface_method(&mut self, interface: &str, method: &str, loc: Span) -> Option<()> {
        let Some((pi, ii)) = self.tables.interfaces.get(interface).copied() else {
            self.error(diag::E_UNKNOWN_INTERFACE, format!("unknown interface `{interface}`"), loc);
            return None;
        };
        let record = &self.snapshot.packages[pi].interfaces[ii];
        if record.method(method).is_none() {
            self.error(
                diag::E_UNKNOWN_METHOD,
                format!("interface `{interface}` declares no method `{method}`"),
                loc,
            );
            return None;
        }
        Some(())
    }

    fn static_method(&mut self, ty: &str, method: &str, loc: Span) -> Option<ResolvedCallee> {
        let key = (ty.to_string(), method.to_string());
        match self.tables.methods_by_type.get(&key).map(Vec::as_slice).unwrap_or(&[]) {
            [] => {
                self.error(
                    diag::E_UNKNOWN_METHOD,
                    format!("no implementation provides method `{method}` for `{ty}`"),
                    loc,
                );
                None
            }
            [(_, id)] => Some(ResolvedCallee::Static { target: id.clone() }),
            many => {
                let ifaces: Vec<&str> = many.iter().map(|(i, _)| i.as_str()).collect();
                self.error(
                    diag::E_AMBIGUOUS_METHOD,
                    format!(
                        "method `{method}` on `{ty}` is reachable through interfaces {}",
                        ifaces.join(" and ")
                    ),
                    loc,
                );
                None
            }
        }
    }

    fn path_call(
        &mut self,
        segments: &[String],
        call: &crate::model::CallSiteRecord,
        loc: Span,
    ) -> Option<ResolvedCallee> {
        let in_scope =
            |p: &str| p == self.pkg.name || self.pkg.dependencies.iter().any(|d| d == p);
        let target = match segments {
            [name] => {
                let id = FunctionId::free(&self.pkg.name, name);
                if !self.tables.functions.contains_key(&id) {
                    self.error(
                        diag::E_UNKNOWN_CALLEE,
                        format!("no function `{name}` in package `{}`", self.pkg.name),
                        loc,
                    );
                    return None;
                }
                id
            }
            [first, name] => {
                if in_scope(first) {
                    let id = FunctionId::free(first, name);
                    if !self.tables.functions.contains_key(&id) {
                        self.error(
                            diag::E_UNKNOWN_CALLEE,
                            format!("no function `{name}` in package `{first}`"),
                            loc,
                        );
                        return None;
                    }
                    id
                } else if self.tables.packages.contains_key(first) {
                    self.error(
                        diag::E_UNKNOWN_PACKAGE,
                        format!("package `{first}` is not a declared dependency of `{}`", self.pkg.name),
                        loc,
                    );
                    return None;
                } else {
                    // `Type::method` with an unqualified type name.
                    let ty = resolve_item_name(
                        first,
                        self.pkg,
                        self.snapshot,
                        &NameSpace::Type,
                        self.diags,
                        loc,
                    )?;
                    return match self.static_method(&ty, name, loc)? {
                        ResolvedCallee::Static { target } => {
                            self.check_call_shape(&target, call, loc)
                        }
                        other => Some(other),
                    };
                }
            }
            [pkg_name, ty_name, method] => {
                if !in_scope(pkg_name) {
                    let code = if self.tables.packages.contains_key(pkg_name) {
                        diag::E_UNKNOWN_PACKAGE
                    } else {
                        diag::E_UNKNOWN_CALLEE
                    };
                    self.error(
                        code,
                        format!("package `{pkg_name}` is not a declared dependency of `{}`", self.pkg.name),
                        loc,
                    );
                    return None;
                }
                let qualified = format!("{pkg_name}::{ty_name}");
                if !self.tables.types.contains_key(&qualified) {
                    self.error(
                        diag::E_UNKNOWN_TYPE,
                        format!("package `{pkg_name}` declares no type `{ty_name}`"),
                        loc,
                    );
                    return None;
                }
                return match self.static_method(&qualified, method, loc)? {
                    ResolvedCallee::Static { target } => self.check_call_shape(&target, call, loc),
                    other => Some(other),
                };
            }
            _ => unreachable!("parser limits paths to three segments"),
        };
        self.check_call_shape(&target, call, loc)
    }

    /// Validates type-argument arity and bounds against the target, and
    /// picks the static or generic classification.
    fn check_call_shape(
        &mut self,
        target: &FunctionId,
        call: &crate::model::CallSiteRecord,
        loc: Span,
    ) -> Option<ResolvedCallee> {
        let info = self.fn_infos.get(target).expect("target collected");
        if info.generics.len() != call.type_args.len() {
            self.error(
                diag::E_TYPE_ARG_ARITY,
                format!(
                    "`{target}` takes {} type argument(s) but {} were supplied",
                    info.generics.len(),
                    call.type_args.len()
                ),
                loc,
            );
            return None;
        }
        let mut ok = true;
        for (g, arg) in info.generics.iter().zip(&call.type_args) {
            let Some(bound) = &g.bound else { continue };
            let satisfied = match arg {
                TypeRef::GenericVar(var) => self
                    .caller_generics
                    .iter()
                    .find(|cg| cg.name == *var)
                    .and_then(|cg| cg.bound.as_ref())
                    .is_some_and(|b| b == bound),
                ground => {
                    // Resolution has already qualified the argument.
                    let resolved = ResolvedCorpusView {
                        tables: self.tables,
                    };
                    resolved.satisfies(ground, bound)
                }
            };
            if !satisfied {
                ok = false;
                self.error(
                    diag::E_BOUND_UNSATISFIED,
                    format!("type argument `{arg}` does not satisfy the bound `{}: {bound}`", g.name),
                    loc,
                );
            }
        }
        if !ok {
            return None;
        }
        if info.generics.is_empty() {
            Some(ResolvedCallee::Static { target: target.clone() })
        } else {
            Some(ResolvedCallee::Generic { target: target.clone() })
        }
    }
}

/// Bound checking needs the impl table before `ResolvedCorpus` exists.
struct ResolvedCorpusView<'a> {
    tables: &'a SymbolTables,
}

impl ResolvedCorpusView<'_> {
    fn satisfies(&self, ty: &TypeRef, interface: &str) -> bool {
        match ty {
            TypeRef::Concrete(name) => {
                self.tables.impls.contains_key(&(interface.to_string(), name.clone()))
            }
            TypeRef::DynInterface(name) => name == interface,
            _ => false,
        }
    }
}


#[cfg(test)]
mod more_tests {
    use super::*;
    use crate::frontend::parser::parse_corpus;

    fn resolve(srcs: &[(&str, &str)]) -> Result<ResolvedCorpus, Vec<Diagnostic>> {
        let files: Vec<(String, String)> =
            srcs.iter().map(|(n, s)| (n.to_string(), s.to_string())).collect();
        resolve_names(parse_corpus(&files).expect("parse"))
    }

    #[test]
    fn impl_methods_may_not_be_generic() {
        let err = resolve(&[(
            "p.ml",
            "package p; type A; interface I { fn m(self); } impl I for A { fn m<T>(self) { } }",
        )])
        .unwrap_err();
        assert!(err.iter().any(|d| d.code == diag::E_GENERIC_METHOD));
    }

    #[test]
    fn impl_of_an_unimported_interface_is_unknown() {
        let err = resolve(&[
            ("lib.ml", "package lib; interface I { fn m(self); }"),
            ("p.ml", "package p; type A; impl I for A { fn m(self) { } }"),
        ])
        .unwrap_err();
        assert!(err.iter().any(|d| d.code == diag::E_UNKNOWN_INTERFACE));
    }

    #[test]
    fn ambiguous_dependency_types_are_rejected() {
        let err = resolve(&[
            ("a.ml", "package a; type Shared;"),
            ("b.ml", "package b; type Shared;"),
            ("u.ml", "package u; use a; use b;\nfn f(x: Shared) { }"),
        ])
        .unwrap_err();
        assert!(err.iter().any(|d| d.code == diag::E_AMBIGUOUS_TYPE));
    }

    #[test]
    fn own_declarations_shadow_dependency_declarations() {
        let rc = resolve(&[
            ("a.ml", "package a; type Shared;"),
            ("u.ml", "package u; use a; type Shared;\nfn f(x: Shared) { }"),
        ])
        .unwrap();
        let f = rc.function(&FunctionId::free("u", "f")).unwrap();
        assert_eq!(f.params[0].ty, TypeRef::Concrete("u::Shared".into()));
    }

    #[test]
    fn dyn_type_argument_satisfies_its_own_interface_bound() {
        let rc = resolve(&[(
            "p.ml",
            "package p; interface I { fn m(self); }\nfn g<T: I>(x: T) { x.m(); }\nfn f() { g::<dyn I>(); }",
        )])
        .unwrap();
        // The instantiation at dyn I dispatches dynamically.
        let g = crate::graph::build_extended_call_graph(
            &rc,
            &crate::graph::BuildOptions::default(),
        );
        let keys: Vec<String> = g.nodes().map(|(i, _)| g.key(i).to_string()).collect();
        assert!(keys.iter().any(|k| k == "p::g[T=dyn p::I]"), "{keys:?}");
        assert!(keys.iter().any(|k| k == "abstract:dyn:p::I::m"), "{keys:?}");
    }
}
