//! Program-facts data model shared by every stage of the analyzer:
//! packages, functions, interfaces, implementations, types, substitutions,
//! and the unsafe-operation categories.
//!
//! All values are immutable after construction and safe to share read-only
//! across workers.

use std::fmt;

/// Fully qualified function identifier: `package::name` for free functions,
/// `package::Type::name` for implementation methods.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunctionId(String);

impl FunctionId {
    pub fn free(package: &str, name: &str) -> Self {
        FunctionId(format!("{package}::{name}"))
    }

    pub fn method(package: &str, self_type: &str, name: &str) -> Self {
        FunctionId(format!("{package}::{self_type}::{name}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The owning package (first path segment).
    pub fn package(&self) -> &str {
        self.0.split("::").next().unwrap_or(&self.0)
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A type reference as written in a parameter, local, or type-argument
/// position. `Concrete` and `DynInterface` names are package-qualified
/// (`pkg::Name`) once name resolution has run; straight out of the parser
/// they hold the surface spelling.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeRef {
    Concrete(String),
    GenericVar(String),
    DynInterface(String),
    FnValue,
}

impl TypeRef {
    /// Ground types contain no generic variables.
    pub fn is_ground(&self) -> bool {
        !matches!(self, TypeRef::GenericVar(_))
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Concrete(name) => f.write_str(name),
            TypeRef::GenericVar(name) => f.write_str(name),
            TypeRef::DynInterface(name) => write!(f, "dyn {name}"),
            TypeRef::FnValue => f.write_str("fnptr"),
        }
    }
}

/// Errors raised by model-level constructors and operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelError {
    /// A generic variable had no binding when a ground result was required.
    UnboundVariable { var: String },
    /// A substitution's keys do not match the function's declared generics.
    ArityMismatch { function: FunctionId, expected: Vec<String>, got: Vec<String> },
    /// Two bindings for the same generic variable.
    DuplicateBinding { var: String },
    /// A substitution value still contains a generic variable.
    NonGroundBinding { var: String },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::UnboundVariable { var } => {
                write!(f, "generic variable `{var}` has no binding")
            }
            ModelError::ArityMismatch { function, expected, got } => write!(
                f,
                "substitution for `{function}` binds [{}] but the function declares [{}]",
                got.join(", "),
                expected.join(", ")
            ),
            ModelError::DuplicateBinding { var } => {
                write!(f, "duplicate binding for generic variable `{var}`")
            }
            ModelError::NonGroundBinding { var } => {
                write!(f, "binding for `{var}` is not a ground type")
            }
        }
    }
}

impl std::error::Error for ModelError {}

/// An ordered mapping from generic variable names to ground types.
///
/// Bindings are kept in the order they were supplied; [`make_node_key`]
/// normalizes to the function's declaration order so node identity is
/// canonical.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    bindings: Vec<(String, TypeRef)>,
}

impl Substitution {
    pub fn empty() -> Self {
        Substitution::default()
    }

    /// Builds a substitution, rejecting duplicate keys and non-ground values.
    pub fn new(bindings: Vec<(String, TypeRef)>) -> Result<Self, ModelError> {
        for (i, (var, ty)) in bindings.iter().enumerate() {
            if !ty.is_ground() {
                return Err(ModelError::NonGroundBinding { var: var.clone() });
            }
            if bindings[..i].iter().any(|(prev, _)| prev == var) {
                return Err(ModelError::DuplicateBinding { var: var.clone() });
            }
        }
        Ok(Substitution { bindings })
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, var: &str) -> Option<&TypeRef> {
        self.bindings.iter().find(|(name, _)| name == var).map(|(_, ty)| ty)
    }

    pub fn bindings(&self) -> &[(String, TypeRef)] {
        &self.bindings
    }

    /// Applies the substitution to `t`, leaving unbound variables in place.
    /// Ground inputs are returned unchanged.
    pub fn apply(&self, t: &TypeRef) -> TypeRef {
        match t {
            TypeRef::GenericVar(var) => match self.get(var) {
                Some(bound) => bound.clone(),
                None => t.clone(),
            },
            other => other.clone(),
        }
    }

    /// Applies the substitution where a ground result is required.
    pub fn apply_ground(&self, t: &TypeRef) -> Result<TypeRef, ModelError> {
        match self.apply(t) {
            TypeRef::GenericVar(var) => Err(ModelError::UnboundVariable { var }),
            ground => Ok(ground),
        }
    }
}

/// Canonical call-graph node key: the function id plus its substitution
/// rendered in generics declaration order. Lexicographic ordering of keys is
/// the export order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeKey(String);

impl NodeKey {
    pub(crate) fn raw(text: String) -> Self {
        NodeKey(text)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Builds the canonical node key for `(function, substitution)`.
///
/// The substitution must bind exactly the function's declared generics
/// (empty for non-generic functions); bindings are re-ordered to declaration
/// order so equal pairs always produce equal keys.
pub fn make_node_key(func: &FunctionRecord, s: &Substitution) -> Result<NodeKey, ModelError> {
    let expected: Vec<&str> = func.generics.iter().map(|g| g.name.as_str()).collect();
    let mut normalized = Vec::with_capacity(expected.len());
    for name in &expected {
        match s.get(name) {
            Some(ty) => normalized.push((name.to_string(), ty.clone())),
            None => return Err(arity_error(func, s, &expected)),
        }
    }
    if s.len() != expected.len() {
        return Err(arity_error(func, s, &expected));
    }
    Ok(NodeKey::raw(render_node_key(&func.id, &normalized)))
}

fn arity_error(func: &FunctionRecord, s: &Substitution, expected: &[&str]) -> ModelError {
    ModelError::ArityMismatch {
        function: func.id.clone(),
        expected: expected.iter().map(|n| n.to_string()).collect(),
        got: s.bindings().iter().map(|(n, _)| n.clone()).collect(),
    }
}

pub(crate) fn render_node_key(id: &FunctionId, bindings: &[(String, TypeRef)]) -> String {
    if bindings.is_empty() {
        return id.to_string();
    }
    let parts: Vec<String> = bindings.iter().map(|(n, t)| format!("{n}={t}")).collect();
    format!("{id}[{}]", parts.join(","))
}

/// Origin of a function record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Defined in the corpus with a body.
    Native,
    /// External declaration (`extern "..." fn`); body is empty and the
    /// function is always declared unsafe.
    External { abi: Abi },
    /// An abstract interface method materialized as a record; produced only
    /// when facts are imported directly, never by the frontend.
    AbstractInterfaceMethod,
}

/// Binary-interface tag of an external declaration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Abi {
    C,
    Intrinsic,
    Native,
}

impl fmt::Display for Abi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Abi::C => f.write_str("C"),
            Abi::Intrinsic => f.write_str("intrinsic"),
            Abi::Native => f.write_str("native"),
        }
    }
}

/// A declared generic parameter with an optional single interface bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericParam {
    pub name: String,
    /// Interface name; package-qualified after resolution.
    pub bound: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: TypeRef,
}

/// The five unsafe-operation categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnsafeOpKind {
    UnsafeCall,
    RawDeref,
    GlobalAccess,
    InlineAsm,
    UnionField,
}

impl UnsafeOpKind {
    pub const ALL: [UnsafeOpKind; 5] = [
        UnsafeOpKind::UnsafeCall,
        UnsafeOpKind::RawDeref,
        UnsafeOpKind::GlobalAccess,
        UnsafeOpKind::InlineAsm,
        UnsafeOpKind::UnionField,
    ];

    pub fn label(self) -> &'static str {
        match self {
            UnsafeOpKind::UnsafeCall => "unsafe_call",
            UnsafeOpKind::RawDeref => "raw_deref",
            UnsafeOpKind::GlobalAccess => "global_access",
            UnsafeOpKind::InlineAsm => "inline_asm",
            UnsafeOpKind::UnionField => "union_field",
        }
    }
}

/// A 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Syntactic callee of a call statement, as parsed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CalleeExpr {
    /// `f`, `pkg::f`, `Type::m`, or `pkg::Type::m` (1 to 3 segments).
    Path(Vec<String>),
    /// `receiver.method(...)`.
    Method { receiver: String, method: String },
    /// `indirect var` — a call through a function value.
    Indirect { var: String },
}

/// Semantic classification of a call site, filled in by name resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResolvedCallee {
    /// Unique concrete target.
    Static { target: FunctionId },
    /// Generic target; the explicit type arguments live on the call site.
    Generic { target: FunctionId },
    /// Interface-method call on a `dyn` receiver.
    Dynamic { interface: String, method: String },
    /// Method call on a bound generic variable; resolved per instantiation.
    GenericReceiver { interface: String, method: String, var: String },
    /// Call through a function value.
    Indirect,
}

/// One call occurrence inside a function body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallSiteRecord {
    pub callee: CalleeExpr,
    /// Explicit type arguments (`f::<A, B>(..)`); empty otherwise.
    pub type_args: Vec<TypeRef>,
    /// Value arguments, kept for faithful re-rendering.
    pub args: Vec<String>,
    /// True when the call is lexically inside an `unsafe` block.
    pub in_unsafe_block: bool,
    pub resolved: Option<ResolvedCallee>,
    pub loc: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Call(CallSiteRecord),
    UnsafeBlock { body: Vec<Statement>, loc: Span },
    Primitive {
        kind: UnsafeOpKind,
        global: Option<String>,
        /// Distinguishes `@write_global` from `@read_global` when rendering.
        write: bool,
        loc: Span,
    },
    LocalDecl { name: String, ty: TypeRef, loc: Span },
}

/// One declared function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionRecord {
    pub id: FunctionId,
    pub declared_unsafe: bool,
    pub generics: Vec<GenericParam>,
    pub params: Vec<Param>,
    /// Empty for external declarations.
    pub body: Vec<Statement>,
    pub origin: Origin,
    /// Compiler-generated records are skipped by all counting.
    pub generated: bool,
    pub loc: Span,
}

impl FunctionRecord {
    pub fn is_generic(&self) -> bool {
        !self.generics.is_empty()
    }

    /// Whether this record participates in function totals and taxonomy
    /// counts: native or external origin and not generated.
    pub fn counts_as_function(&self) -> bool {
        !self.generated && !matches!(self.origin, Origin::AbstractInterfaceMethod)
    }

    /// Lexical check: does the body contain at least one unsafe block?
    pub fn body_contains_unsafe_block(&self) -> bool {
        fn walk(stmts: &[Statement]) -> bool {
            stmts.iter().any(|s| matches!(s, Statement::UnsafeBlock { .. }))
        }
        walk(&self.body)
    }
}

/// One interface method signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodSig {
    pub name: String,
    pub declared_unsafe: bool,
    pub params: Vec<Param>,
}

/// An abstract interface declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceRecord {
    pub name: String,
    pub declared_unsafe: bool,
    pub methods: Vec<MethodSig>,
    pub loc: Span,
}

impl InterfaceRecord {
    pub fn method(&self, name: &str) -> Option<&MethodSig> {
        self.methods.iter().find(|m| m.name == name)
    }
}

/// An implementation of an interface for a concrete type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImplRecord {
    /// Interface name; package-qualified after resolution.
    pub interface: String,
    /// Implementing concrete type name; package-qualified after resolution.
    pub self_type: String,
    pub declared_unsafe: bool,
    /// Ids of the method records stored in the owning package's function list.
    pub methods: Vec<FunctionId>,
    pub loc: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalRecord {
    pub name: String,
    pub mutable: bool,
    pub loc: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub loc: Span,
}

/// One package: the unit of compilation and dependency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackageUnit {
    pub name: String,
    /// Direct dependencies, in declaration order, de-duplicated.
    pub dependencies: Vec<String>,
    pub functions: Vec<FunctionRecord>,
    pub interfaces: Vec<InterfaceRecord>,
    pub impls: Vec<ImplRecord>,
    pub globals: Vec<GlobalRecord>,
    pub types: Vec<TypeDecl>,
    /// Source file this package was parsed from, for diagnostics.
    pub source_name: String,
}

impl PackageUnit {
    pub fn empty(name: &str, source_name: &str) -> Self {
        PackageUnit {
            name: name.to_string(),
            dependencies: Vec::new(),
            functions: Vec::new(),
            interfaces: Vec::new(),
            impls: Vec::new(),
            globals: Vec::new(),
            types: Vec::new(),
            source_name: source_name.to_string(),
        }
    }

    pub fn global(&self, name: &str) -> Option<&GlobalRecord> {
        self.globals.iter().find(|g| g.name == name)
    }
}

/// A parsed corpus: packages sorted by name so downstream passes are
/// independent of file ordering.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub packages: Vec<PackageUnit>,
}

impl Corpus {
    pub fn package(&self, name: &str) -> Option<&PackageUnit> {
        self.packages.iter().find(|p| p.name == name)
    }

    pub fn functions(&self) -> impl Iterator<Item = (&PackageUnit, &FunctionRecord)> {
        self.packages.iter().flat_map(|p| p.functions.iter().map(move |f| (p, f)))
    }

    pub fn function(&self, id: &FunctionId) -> Option<&FunctionRecord> {
        self.package(id.package())?.functions.iter().find(|f| &f.id == id)
    }
}
