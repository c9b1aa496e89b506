//! Extended call graph construction.
//!
//! Nodes pair a function with a ground substitution of its generic
//! parameters. Statically unknowable targets (dynamic dispatch, indirect
//! calls, instantiations abandoned at the depth cap) become abstract or
//! unresolved nodes with no outgoing edges; the analysis seeds them unsafe
//! in conservative mode and treats them as safe leaves in optimistic mode,
//! which is all that distinguishes the two graph variants.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::frontend::ResolvedCorpus;
use crate::model::{
    render_node_key, FunctionId, NodeKey, ResolvedCallee, Statement, Substitution, TypeRef,
};

pub type NodeIdx = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphNode {
    /// A function at a ground substitution; empty for non-generic functions.
    Ground { function: FunctionId, subst: Substitution },
    /// The un-grounded representative of a generic function. It carries the
    /// function's reported verdict.
    Ungrounded { function: FunctionId },
    /// Unknown implementation behind a dynamic-interface dispatch.
    AbstractDynamic { interface: String, method: String },
    /// Method call on the unknown receiver type inside an un-grounded
    /// generic function.
    AbstractGenericReceiver { function: FunctionId, method: String },
    /// An indirect call site; one node per site.
    UnresolvedIndirect { function: FunctionId, site: usize },
    /// A generic instantiation abandoned at the depth cap.
    UnresolvedCapped { function: FunctionId },
}

impl GraphNode {
    pub fn key(&self) -> NodeKey {
        let text = match self {
            GraphNode::Ground { function, subst } => render_node_key(function, subst.bindings()),
            GraphNode::Ungrounded { function } => format!("{function}[*]"),
            GraphNode::AbstractDynamic { interface, method } => {
                format!("abstract:dyn:{interface}::{method}")
            }
            GraphNode::AbstractGenericReceiver { function, method } => {
                format!("abstract:recv:{function}::{method}")
            }
            GraphNode::UnresolvedIndirect { function, site } => {
                format!("unresolved:indirect:{function}#{site}")
            }
            GraphNode::UnresolvedCapped { function } => format!("unresolved:capped:{function}"),
        };
        NodeKey::raw(text)
    }

    pub fn export_kind(&self) -> &'static str {
        match self {
            GraphNode::Ground { .. } => "ground",
            GraphNode::Ungrounded { .. } => "ungrounded",
            GraphNode::AbstractDynamic { .. } | GraphNode::AbstractGenericReceiver { .. } => {
                "abstract"
            }
            GraphNode::UnresolvedIndirect { .. } | GraphNode::UnresolvedCapped { .. } => {
                "unresolved"
            }
        }
    }

    /// The function (or interface method) this node stands for, as exported.
    pub fn export_function_id(&self) -> String {
        match self {
            GraphNode::Ground { function, .. }
            | GraphNode::Ungrounded { function }
            | GraphNode::AbstractGenericReceiver { function, .. }
            | GraphNode::UnresolvedIndirect { function, .. }
            | GraphNode::UnresolvedCapped { function } => function.to_string(),
            GraphNode::AbstractDynamic { interface, method } => format!("{interface}::{method}"),
        }
    }

    /// The package a node belongs to, used for external-edge tagging and
    /// merge validation. Abstract dynamic nodes belong to the interface's
    /// declaring package.
    pub fn package(&self) -> &str {
        match self {
            GraphNode::Ground { function, .. }
            | GraphNode::Ungrounded { function }
            | GraphNode::AbstractGenericReceiver { function, .. }
            | GraphNode::UnresolvedIndirect { function, .. }
            | GraphNode::UnresolvedCapped { function } => function.package(),
            GraphNode::AbstractDynamic { interface, .. } => {
                interface.split("::").next().unwrap_or(interface)
            }
        }
    }

    /// The function whose body this node would expand, if any.
    pub fn function(&self) -> Option<&FunctionId> {
        match self {
            GraphNode::Ground { function, .. } | GraphNode::Ungrounded { function } => {
                Some(function)
            }
            _ => None,
        }
    }

    pub fn is_abstract_or_unresolved(&self) -> bool {
        matches!(
            self,
            GraphNode::AbstractDynamic { .. }
                | GraphNode::AbstractGenericReceiver { .. }
                | GraphNode::UnresolvedIndirect { .. }
                | GraphNode::UnresolvedCapped { .. }
        )
    }
}

/// Edge tag for calls into trusted packages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LeafKind {
    SafeLeaf,
    UnsafeLeaf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EdgeInfo {
    /// Caller and callee live in different packages.
    pub external: bool,
    /// Set when the callee is in a trusted package (body never traversed).
    pub leaf: Option<LeafKind>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    pub trusted: BTreeSet<String>,
    pub depth_cap: u32,
    pub early_termination: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { trusted: BTreeSet::new(), depth_cap: 8, early_termination: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphError {
    /// Graphs built with different options cannot be merged.
    MetaMismatch,
    /// A referenced node's package is absent from the merge set.
    DanglingExternal { key: NodeKey, package: String },
    NoImplementation { self_type: String, method: String },
    AmbiguousMethod { self_type: String, method: String },
    NonGroundReceiver,
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::MetaMismatch => {
                f.write_str("graphs were built with different options and cannot be merged")
            }
            GraphError::DanglingExternal { key, package } => {
                write!(f, "node `{key}` belongs to `{package}`, which is not in the merge set")
            }
            GraphError::NoImplementation { self_type, method } => {
                write!(f, "no implementation provides `{method}` for `{self_type}`")
            }
            GraphError::AmbiguousMethod { self_type, method } => {
                write!(f, "method `{method}` on `{self_type}` is ambiguous")
            }
            GraphError::NonGroundReceiver => f.write_str("receiver type is not ground"),
        }
    }
}

impl std::error::Error for GraphError {}

/// The extended call graph. Conservative and optimistic variants share the
/// node and edge sets; [`DualCallGraph::conservative_seed_extension`] is the
/// only difference, consumed by the analysis.
#[derive(Clone, Debug)]
pub struct DualCallGraph {
    nodes: Vec<GraphNode>,
    keys: Vec<NodeKey>,
    index: BTreeMap<NodeKey, NodeIdx>,
    edges: BTreeMap<(NodeIdx, NodeIdx), EdgeInfo>,
    /// Packages whose function roots this graph covers.
    home_packages: BTreeSet<String>,
    /// Nodes whose expansion was cut short by early termination.
    truncated: BTreeSet<NodeIdx>,
    options: BuildOptions,
}

impl DualCallGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, idx: NodeIdx) -> &GraphNode {
        &self.nodes[idx]
    }

    pub fn key(&self, idx: NodeIdx) -> &NodeKey {
        &self.keys[idx]
    }

    pub fn index_of(&self, key: &NodeKey) -> Option<NodeIdx> {
        self.index.get(key).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeIdx, &GraphNode)> {
        self.nodes.iter().enumerate()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeIdx, NodeIdx, EdgeInfo)> + '_ {
        self.edges.iter().map(|(&(u, v), &info)| (u, v, info))
    }

    pub fn options(&self) -> &BuildOptions {
        &self.options
    }

    pub fn home_packages(&self) -> &BTreeSet<String> {
        &self.home_packages
    }

    pub fn is_truncated(&self, idx: NodeIdx) -> bool {
        self.truncated.contains(&idx)
    }

    pub fn truncated_nodes(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        self.truncated.iter().copied()
    }

    /// The abstract and unresolved nodes: extra seeds for conservative mode.
    pub fn conservative_seed_extension(&self) -> BTreeSet<NodeIdx> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_abstract_or_unresolved())
            .map(|(i, _)| i)
            .collect()
    }

    /// Forward adjacency, successors sorted.
    pub fn adjacency(&self) -> Vec<Vec<NodeIdx>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(u, v) in self.edges.keys() {
            adj[u].push(v);
        }
        adj
    }

    /// Structural equality key: nodes, edges, and flags by node key, so two
    /// graphs compare equal regardless of internal index assignment.
    fn shape(&self) -> GraphShape {
        let mut edges = BTreeSet::new();
        for (&(u, v), &info) in &self.edges {
            edges.insert((self.keys[u].clone(), self.keys[v].clone(), info));
        }
        GraphShape {
            nodes: self.index.keys().cloned().collect(),
            edges,
            truncated: self.truncated.iter().map(|&i| self.keys[i].clone()).collect(),
            home: self.home_packages.clone(),
        }
    }
}

#[derive(PartialEq, Eq)]
struct GraphShape {
    nodes: BTreeSet<NodeKey>,
    edges: BTreeSet<(NodeKey, NodeKey, EdgeInfo)>,
    truncated: BTreeSet<NodeKey>,
    home: BTreeSet<String>,
}

impl PartialEq for DualCallGraph {
    fn eq(&self, other: &Self) -> bool {
        self.options == other.options && self.shape() == other.shape()
    }
}

impl Eq for DualCallGraph {}

/// Reverses an adjacency list: edge `(u, v)` is present in the result iff
/// `(v, u)` is present in the input. The node set is unchanged.
pub fn reverse_graph(adj: &[Vec<NodeIdx>]) -> Vec<Vec<NodeIdx>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (u, succs) in adj.iter().enumerate() {
        for &v in succs {
            rev[v].push(u);
        }
    }
    rev
}

/// Outcome of resolving one generic call in a calling context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instantiation {
    Ground { target: FunctionId, subst: Substitution },
    Unresolved(UnresolvedReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnresolvedReason {
    /// A type argument still contains a generic variable (un-grounded caller).
    NonGroundArguments,
    DepthCapExceeded,
}

/// Substitutes a generic call's explicit type arguments through the caller's
/// substitution. A ground result yields the callee instantiation, entered at
/// `depth + 1`; non-ground arguments or an exceeded cap yield `Unresolved`.
///
/// `caller_subst` is `None` inside an un-grounded representative.
pub fn instantiate_generic_call(
    rc: &ResolvedCorpus,
    target: &FunctionId,
    type_args: &[TypeRef],
    caller_subst: Option<&Substitution>,
    depth: u32,
    depth_cap: u32,
) -> Instantiation {
    let callee = rc.function(target).expect("resolved target exists");
    debug_assert_eq!(callee.generics.len(), type_args.len(), "resolution checked arity");
    let mut bindings = Vec::with_capacity(type_args.len());
    for (g, arg) in callee.generics.iter().zip(type_args) {
        let substituted = match caller_subst {
            Some(s) => s.apply(arg),
            None => arg.clone(),
        };
        if !substituted.is_ground() {
            return Instantiation::Unresolved(UnresolvedReason::NonGroundArguments);
        }
        bindings.push((g.name.clone(), substituted));
    }
    if depth + 1 > depth_cap {
        return Instantiation::Unresolved(UnresolvedReason::DepthCapExceeded);
    }
    let subst = Substitution::new(bindings).expect("ground, distinct bindings");
    Instantiation::Ground { target: target.clone(), subst }
}

/// Method-call target of a ground or dynamic receiver, looked up in the
/// corpus implementation table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MethodTarget {
    Static(FunctionId),
    Dynamic { interface: String, method: String },
}

pub fn resolve_method_call(
    receiver: &TypeRef,
    method: &str,
    rc: &ResolvedCorpus,
) -> Result<MethodTarget, GraphError> {
    match receiver {
        TypeRef::DynInterface(interface) => {
            Ok(MethodTarget::Dynamic { interface: interface.clone(), method: method.to_string() })
        }
        TypeRef::Concrete(ty) => match rc.methods_on_type(ty, method) {
            [] => Err(GraphError::NoImplementation {
                self_type: ty.clone(),
                method: method.to_string(),
            }),
            [(_, id)] => Ok(MethodTarget::Static(id.clone())),
            _ => Err(GraphError::AmbiguousMethod {
                self_type: ty.clone(),
                method: method.to_string(),
            }),
        },
        TypeRef::FnValue => Err(GraphError::NoImplementation {
            self_type: "fnptr".to_string(),
            method: method.to_string(),
        }),
        TypeRef::GenericVar(_) => Err(GraphError::NonGroundReceiver),
    }
}

/// Builds the extended call graph for the whole corpus.
pub fn build_extended_call_graph(rc: &ResolvedCorpus, options: &BuildOptions) -> DualCallGraph {
    let home = rc.packages().iter().map(|p| p.name.clone()).collect();
    Builder::new(rc, options).run(home)
}

/// Builds the per-package view: the package's own function nodes plus
/// everything they demand, stopping at other packages' non-generic functions
/// and representatives (kept as marked external references) while expanding
/// reachable generic instantiations.
pub fn build_package_graph(
    rc: &ResolvedCorpus,
    package: &str,
    options: &BuildOptions,
) -> DualCallGraph {
    let global = build_extended_call_graph(rc, options);
    restrict_to_package(&global, package)
}

fn restrict_to_package(global: &DualCallGraph, package: &str) -> DualCallGraph {
    let adjacency = global.adjacency();
    let expandable = |idx: NodeIdx| -> bool {
        let node = &global.nodes[idx];
        if global.options.trusted.contains(node.package()) {
            return false;
        }
        match node {
            GraphNode::Ungrounded { function } => function.package() == package,
            GraphNode::Ground { function, subst } => {
                function.package() == package || !subst.is_empty()
            }
            _ => false,
        }
    };

    let mut keep = BTreeSet::new();
    let mut queue: VecDeque<NodeIdx> = VecDeque::new();
    for (idx, node) in global.nodes() {
        let is_root = match node {
            GraphNode::Ungrounded { function } => function.package() == package,
            GraphNode::Ground { function, subst } => {
                function.package() == package && subst.is_empty()
            }
            _ => false,
        };
        if is_root {
            keep.insert(idx);
            queue.push_back(idx);
        }
    }
    let mut kept_edges: BTreeSet<(NodeIdx, NodeIdx)> = BTreeSet::new();
    while let Some(u) = queue.pop_front() {
        if !expandable(u) {
            continue;
        }
        for &v in &adjacency[u] {
            kept_edges.insert((u, v));
            if keep.insert(v) {
                queue.push_back(v);
            }
        }
    }

    let mut out = Builder::empty_graph(global.options.clone(), [package.to_string()].into());
    let mut remap = BTreeMap::new();
    for &idx in &keep {
        let new_idx = out.nodes.len();
        out.nodes.push(global.nodes[idx].clone());
        out.keys.push(global.keys[idx].clone());
        out.index.insert(global.keys[idx].clone(), new_idx);
        if global.truncated.contains(&idx) {
            out.truncated.insert(new_idx);
        }
        remap.insert(idx, new_idx);
    }
    for (u, v) in kept_edges {
        let info = global.edges[&(u, v)];
        out.edges.insert((remap[&u], remap[&v]), info);
    }
    out
}

/// Unions per-package graphs into a corpus graph. Node identity is
/// preserved (keyed by node key), so merging is idempotent and commutative.
/// Fails if a referenced node's package has no graph in the merge set.
pub fn merge_package_graphs(graphs: &[DualCallGraph]) -> Result<DualCallGraph, GraphError> {
    let Some(first) = graphs.first() else {
        return Ok(Builder::empty_graph(BuildOptions::default(), BTreeSet::new()));
    };
    if graphs.iter().any(|g| g.options != first.options) {
        return Err(GraphError::MetaMismatch);
    }
    let home: BTreeSet<String> =
        graphs.iter().flat_map(|g| g.home_packages.iter().cloned()).collect();

    let mut out = Builder::empty_graph(first.options.clone(), home);
    for g in graphs {
        for (idx, node) in g.nodes() {
            let key = g.keys[idx].clone();
            if !out.index.contains_key(&key) {
                let new_idx = out.nodes.len();
                out.nodes.push(node.clone());
                out.keys.push(key.clone());
                out.index.insert(key, new_idx);
            }
        }
    }
    for g in graphs {
        for idx in g.truncated_nodes() {
            let new_idx = out.index[&g.keys[idx]];
            out.truncated.insert(new_idx);
        }
        for (u, v, info) in g.edges() {
            let nu = out.index[&g.keys[u]];
            let nv = out.index[&g.keys[v]];
            out.edges.insert((nu, nv), info);
        }
    }
    for (idx, node) in out.nodes.iter().enumerate() {
        let pkg = node.package();
        if !out.home_packages.contains(pkg) {
            return Err(GraphError::DanglingExternal {
                key: out.keys[idx].clone(),
                package: pkg.to_string(),
            });
        }
    }
    Ok(out)
}

struct Builder<'a> {
    rc: &'a ResolvedCorpus,
    options: &'a BuildOptions,
    graph: DualCallGraph,
    /// Ground instantiations awaiting expansion, with their depth.
    queue: VecDeque<(NodeIdx, u32)>,
}

impl<'a> Builder<'a> {
    fn new(rc: &'a ResolvedCorpus, options: &'a BuildOptions) -> Self {
        Builder {
            rc,
            options,
            graph: Self::empty_graph(options.clone(), BTreeSet::new()),
            queue: VecDeque::new(),
        }
    }

    fn empty_graph(options: BuildOptions, home: BTreeSet<String>) -> DualCallGraph {
        DualCallGraph {
            nodes: Vec::new(),
            keys: Vec::new(),
            index: BTreeMap::new(),
            edges: BTreeMap::new(),
            home_packages: home,
            truncated: BTreeSet::new(),
            options,
        }
    }

    fn run(mut self, home: BTreeSet<String>) -> DualCallGraph {
        // Roots: one node per function. Non-generic functions get their
        // ground node; generic functions get the un-grounded representative.
        for pkg in self.rc.packages() {
            for f in &pkg.functions {
                let node = if f.is_generic() {
                    GraphNode::Ungrounded { function: f.id.clone() }
                } else {
                    GraphNode::Ground { function: f.id.clone(), subst: Substitution::empty() }
                };
                self.intern(node);
            }
        }
        let roots = self.graph.nodes.len();
        for idx in 0..roots {
            self.expand(idx, 0);
        }
        while let Some((idx, depth)) = self.queue.pop_front() {
            self.expand(idx, depth);
        }
        self.graph.home_packages = home;
        self.graph
    }

    fn intern(&mut self, node: GraphNode) -> NodeIdx {
        self.intern_flagged(node).0
    }

    /// Returns the node index and whether the node was newly created.
    fn intern_flagged(&mut self, node: GraphNode) -> (NodeIdx, bool) {
        let key = node.key();
        if let Some(&idx) = self.graph.index.get(&key) {
            return (idx, false);
        }
        let idx = self.graph.nodes.len();
        self.graph.nodes.push(node);
        self.graph.keys.push(key.clone());
        self.graph.index.insert(key, idx);
        (idx, true)
    }

    fn add_edge(&mut self, from: NodeIdx, to: NodeIdx) {
        let caller_pkg = self.graph.nodes[from].package().to_string();
        let callee = &self.graph.nodes[to];
        let callee_pkg = callee.package();
        let leaf = if self.options.trusted.contains(callee_pkg) {
            let is_unsafe = callee
                .function()
                .and_then(|id| self.rc.function(id))
                .map(|f| f.declared_unsafe)
                .unwrap_or(false);
            Some(if is_unsafe { LeafKind::UnsafeLeaf } else { LeafKind::SafeLeaf })
        } else {
            None
        };
        let info = EdgeInfo { external: caller_pkg != callee_pkg, leaf };
        self.graph.edges.insert((from, to), info);
    }

    /// Scans the node's function body, emitting edges and enqueuing newly
    /// discovered ground instantiations at `depth + 1`.
    fn expand(&mut self, idx: NodeIdx, depth: u32) {
        let (function, subst) = match &self.graph.nodes[idx] {
            GraphNode::Ground { function, subst } => (function.clone(), Some(subst.clone())),
            GraphNode::Ungrounded { function } => (function.clone(), None),
            _ => return,
        };
        if self.options.trusted.contains(function.package()) {
            return;
        }
        let rc = self.rc;
        let record = rc.function(&function).expect("graph nodes refer to corpus functions");
        let mut site_counter = 0usize;
        self.walk(idx, &function, &record.body, subst.as_ref(), depth, &mut site_counter);
    }

    /// Walks statements in order. With early termination enabled, the first
    /// unsafe block stops the walk: the function is already a propagation
    /// seed, so its remaining calls cannot change any verdict.
    fn walk(
        &mut self,
        from: NodeIdx,
        function: &FunctionId,
        stmts: &[Statement],
        subst: Option<&Substitution>,
        depth: u32,
        site_counter: &mut usize,
    ) -> bool {
        for stmt in stmts {
            match stmt {
                Statement::LocalDecl { .. } | Statement::Primitive { .. } => {}
                Statement::UnsafeBlock { body, .. } => {
                    if self.options.early_termination {
                        self.graph.truncated.insert(from);
                        return false;
                    }
                    if !self.walk(from, function, body, subst, depth, site_counter) {
                        return false;
                    }
                }
                Statement::Call(call) => {
                    let resolved = call.resolved.as_ref().expect("corpus is resolved");
                    match resolved {
                        ResolvedCallee::Static { target } => {
                            let to = self.intern(GraphNode::Ground {
                                function: target.clone(),
                                subst: Substitution::empty(),
                            });
                            self.add_edge(from, to);
                        }
                        ResolvedCallee::Generic { target } => {
                            self.generic_call(from, target, &call.type_args, subst, depth);
                        }
                        ResolvedCallee::Dynamic { interface, method } => {
                            let to = self.intern(GraphNode::AbstractDynamic {
                                interface: interface.clone(),
                                method: method.clone(),
                            });
                            self.add_edge(from, to);
                        }
                        ResolvedCallee::GenericReceiver { interface, method, var } => {
                            self.generic_receiver_call(from, function, subst, interface, method, var);
                        }
                        ResolvedCallee::Indirect => {
                            let to = self.intern(GraphNode::UnresolvedIndirect {
                                function: function.clone(),
                                site: *site_counter,
                            });
                            *site_counter += 1;
                            self.add_edge(from, to);
                        }
                    }
                }
            }
        }
        true
    }

    fn generic_call(
        &mut self,
        from: NodeIdx,
        target: &FunctionId,
        type_args: &[TypeRef],
        subst: Option<&Substitution>,
        depth: u32,
    ) {
        match instantiate_generic_call(self.rc, target, type_args, subst, depth, self.options.depth_cap)
        {
            Instantiation::Ground { target, subst } => {
                let trusted = self.options.trusted.contains(target.package());
                let (to, was_new) = self.intern_flagged(GraphNode::Ground { function: target, subst });
                self.add_edge(from, to);
                // With breadth-first processing the first discovery carries
                // the minimal depth, so each instantiation expands once.
                if was_new && !trusted {
                    self.queue.push_back((to, depth + 1));
                }
            }
            Instantiation::Unresolved(UnresolvedReason::NonGroundArguments) => {
                let to = self.intern(GraphNode::Ungrounded { function: target.clone() });
                self.add_edge(from, to);
            }
            Instantiation::Unresolved(UnresolvedReason::DepthCapExceeded) => {
                let to = self.intern(GraphNode::UnresolvedCapped { function: target.clone() });
                self.add_edge(from, to);
            }
        }
    }

}

impl Builder<'_> {
    fn generic_receiver_call(
        &mut self,
        from: NodeIdx,
        function: &FunctionId,
        subst: Option<&Substitution>,
        interface: &str,
        method: &str,
        var: &str,
    ) {
        let Some(s) = subst else {
            let to = self.intern(GraphNode::AbstractGenericReceiver {
                function: function.clone(),
                method: method.to_string(),
            });
            self.add_edge(from, to);
            return;
        };
        let receiver = s.apply(&TypeRef::GenericVar(var.to_string()));
        match receiver {
            TypeRef::Concrete(ty) => {
                // The bound check at resolution guarantees a unique
                // implementation of (interface, ty).
                match self.rc.impl_method(interface, &ty, method) {
                    Some(id) => {
                        let to = self.intern(GraphNode::Ground {
                            function: id.clone(),
                            subst: Substitution::empty(),
                        });
                        self.add_edge(from, to);
                    }
                    None => {
                        debug_assert!(false, "bound checked at resolution");
                        let to = self.intern(GraphNode::AbstractDynamic {
                            interface: interface.to_string(),
                            method: method.to_string(),
                        });
                        self.add_edge(from, to);
                    }
                }
            }
            _ => {
                // dyn receivers dispatch dynamically; other shapes cannot
                // reach here once bounds are checked.
                let to = self.intern(GraphNode::AbstractDynamic {
                    interface: interface.to_string(),
                    method: method.to_string(),
                });
                self.add_edge(from, to);
            }
        }
    }
}

#[cfg(test)]
impl DualCallGraph {
    /// Bare graph over anonymous ground nodes, for propagation tests.
    pub(crate) fn synthetic(n: usize, edge_list: &[(usize, usize)]) -> DualCallGraph {
        let mut g = Builder::empty_graph(BuildOptions::default(), ["t".to_string()].into());
        for i in 0..n {
            let node = GraphNode::Ground {
                function: FunctionId::free("t", &format!("n{i}")),
                subst: Substitution::empty(),
            };
            let key = node.key();
            g.index.insert(key.clone(), i);
            g.nodes.push(node);
            g.keys.push(key);
        }
        for &(u, v) in edge_list {
            g.edges.insert((u, v), EdgeInfo { external: false, leaf: None });
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{worked_example, fixture_files, resolve_srcs};

    fn key_set(g: &DualCallGraph) -> BTreeSet<String> {
        g.nodes().map(|(i, _)| g.key(i).to_string()).collect()
    }

    fn edge_keys(g: &DualCallGraph) -> BTreeSet<(String, String, bool)> {
        g.edges()
            .map(|(u, v, info)| (g.key(u).to_string(), g.key(v).to_string(), info.external))
            .collect()
    }

    #[test]
    fn worked_example_matches_the_worked_example() {
        let rc = worked_example();
        let g = build_extended_call_graph(&rc, &BuildOptions::default());
        let expected_nodes: BTreeSet<String> = [
            "library1::foo",
            "library2::bar",
            "library3::TypeA::baz",
            "library4::qux",
            "library5::TypeB::baz",
            "abstract:dyn:library3::HasBaz::baz",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(key_set(&g), expected_nodes);

        let expected_edges: BTreeSet<(String, String, bool)> = [
            ("library1::foo", "library2::bar", true),
            ("library2::bar", "abstract:dyn:library3::HasBaz::baz", true),
            ("library5::TypeB::baz", "library4::qux", true),
        ]
        .iter()
        .map(|(a, b, x)| (a.to_string(), b.to_string(), *x))
        .collect();
        assert_eq!(edge_keys(&g), expected_edges);
    }

    #[test]
    fn single_function_corpus_is_one_node_no_edges() {
        let rc = resolve_srcs(&[("p.ml", "package p;\nfn lonely() { }")]);
        let g = build_extended_call_graph(&rc, &BuildOptions::default());
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn generic_chain_instantiates_each_link_once() {
        let rc = resolve_srcs(&[(
            "chain.ml",
            "package chainpkg;\ntype TypeA;\nfn start() { f::<TypeA>(); }\nfn f<T>() { g::<T>(); }\nfn g<T>() { h::<T>(); }\nfn h<T>() { }",
        )]);
        let g = build_extended_call_graph(&rc, &BuildOptions::default());
        let expected: BTreeSet<String> = [
            "chainpkg::start",
            "chainpkg::f[*]",
            "chainpkg::g[*]",
            "chainpkg::h[*]",
            "chainpkg::f[T=chainpkg::TypeA]",
            "chainpkg::g[T=chainpkg::TypeA]",
            "chainpkg::h[T=chainpkg::TypeA]",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(key_set(&g), expected);
        let edges = edge_keys(&g);
        assert!(edges.contains(&(
            "chainpkg::f[T=chainpkg::TypeA]".into(),
            "chainpkg::g[T=chainpkg::TypeA]".into(),
            false
        )));
        assert!(edges.contains(&("chainpkg::f[*]".into(), "chainpkg::g[*]".into(), false)));
        assert_eq!(edges.len(), 5);
    }

    #[test]
    fn mutual_recursion_at_fixed_types_memoizes() {
        let rc = resolve_srcs(&[(
            "loop.ml",
            "package looppkg;\ntype TypeA;\nfn start() { f::<TypeA>(); }\nfn f<T>() { g::<T>(); }\nfn g<T>() { f::<T>(); }",
        )]);
        let g = build_extended_call_graph(&rc, &BuildOptions::default());
        // Two ground instantiations plus a cycle between them; no divergence.
        let grounds: Vec<_> = g
            .nodes()
            .filter(|(_, n)| matches!(n, GraphNode::Ground { subst, .. } if !subst.is_empty()))
            .collect();
        assert_eq!(grounds.len(), 2);
        let edges = edge_keys(&g);
        assert!(edges.contains(&(
            "looppkg::g[T=looppkg::TypeA]".into(),
            "looppkg::f[T=looppkg::TypeA]".into(),
            false
        )));
    }

    #[test]
    fn depth_cap_yields_an_unresolved_node_and_terminates() {
        let rc = resolve_srcs(&[(
            "cap.ml",
            "package cappkg;\ntype TypeA;\nfn start() { r1::<TypeA>(); }\nfn r1<T>() { r2::<T>(); }\nfn r2<T>() { r3::<T>(); }\nfn r3<T>() { r4::<T>(); }\nfn r4<T>() { r1::<T>(); }",
        )]);
        let opts = BuildOptions { depth_cap: 3, ..BuildOptions::default() };
        let g = build_extended_call_graph(&rc, &opts);
        let keys = key_set(&g);
        assert!(keys.contains("cappkg::r3[T=cappkg::TypeA]"));
        assert!(!keys.contains("cappkg::r4[T=cappkg::TypeA]"));
        assert!(keys.contains("unresolved:capped:cappkg::r4"));
        let capped = g.index_of(&NodeKey::raw("unresolved:capped:cappkg::r4".into())).unwrap();
        assert!(g.adjacency()[capped].is_empty());
    }

    #[test]
    fn generic_receiver_resolves_statically_at_instantiation() {
        let mut files = fixture_files("worked_example");
        files.push((
            "library6.ml".into(),
            "package library6;\nuse library3;\nuse library5;\n\nfn call_it<T: HasBaz>(x: T) {\n    x.baz();\n}\n\nfn run() {\n    call_it::<TypeB>();\n}\n".into(),
        ));
        let rc = crate::frontend::parse_and_resolve(&files).expect("well-formed");
        let g = build_extended_call_graph(&rc, &BuildOptions::default());
        let edges = edge_keys(&g);
        assert!(edges.contains(&(
            "library6::call_it[T=library5::TypeB]".into(),
            "library5::TypeB::baz".into(),
            true
        )));
        assert!(edges.contains(&(
            "library6::call_it[*]".into(),
            "abstract:recv:library6::call_it::baz".into(),
            false
        )));
    }

    #[test]
    fn trusted_packages_become_leaves() {
        let rc = worked_example();
        let opts = BuildOptions {
            trusted: ["library4".to_string()].into(),
            ..BuildOptions::default()
        };
        let g = build_extended_call_graph(&rc, &opts);
        let (u, v, info) = g
            .edges()
            .find(|(u, _, _)| g.key(*u).as_str() == "library5::TypeB::baz")
            .expect("edge into trusted package");
        assert_eq!(g.key(v).as_str(), "library4::qux");
        assert_eq!(info.leaf, Some(LeafKind::UnsafeLeaf));
        assert!(g.adjacency()[g.index_of(g.key(v)).unwrap()].is_empty());
        let _ = u;

        let opts = BuildOptions {
            trusted: ["library2".to_string()].into(),
            ..BuildOptions::default()
        };
        let g = build_extended_call_graph(&rc, &opts);
        let (_, _, info) = g
            .edges()
            .find(|(u, _, _)| g.key(*u).as_str() == "library1::foo")
            .expect("edge into trusted package");
        assert_eq!(info.leaf, Some(LeafKind::SafeLeaf));
        // bar's body is not traversed, so the abstract node never appears.
        assert!(!key_set(&g).contains("abstract:dyn:library3::HasBaz::baz"));
    }

    #[test]
    fn merging_the_five_package_graphs_reproduces_the_corpus_graph() {
        let rc = worked_example();
        let opts = BuildOptions::default();
        let global = build_extended_call_graph(&rc, &opts);
        let parts: Vec<DualCallGraph> = ["library1", "library2", "library3", "library4", "library5"]
            .iter()
            .map(|p| build_package_graph(&rc, p, &opts))
            .collect();
        let merged = merge_package_graphs(&parts).expect("closed merge set");
        assert_eq!(merged, global);
    }

    #[test]
    fn merge_is_idempotent_and_commutative() {
        let rc = worked_example();
        let opts = BuildOptions::default();
        let g3 = build_package_graph(&rc, "library3", &opts);
        let g4 = build_package_graph(&rc, "library4", &opts);
        let single = merge_package_graphs(std::slice::from_ref(&g3)).unwrap();
        assert_eq!(single, g3);
        let ab = merge_package_graphs(&[g3.clone(), g4.clone()]).unwrap();
        let ba = merge_package_graphs(&[g4, g3]).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn merge_detects_dangling_external_references() {
        let rc = worked_example();
        let g1 = build_package_graph(&rc, "library1", &opts_default());
        let err = merge_package_graphs(std::slice::from_ref(&g1)).unwrap_err();
        assert!(matches!(err, GraphError::DanglingExternal { package, .. } if package == "library2"));
    }

    fn opts_default() -> BuildOptions {
        BuildOptions::default()
    }

    #[test]
    fn merge_on_synthetic_corpora_matches_direct_build() {
        for seed in 0..20u64 {
            let files = crate::synth::generate_corpus_sources(seed);
            let rc = crate::frontend::parse_and_resolve(&files).expect("well-formed");
            let opts = BuildOptions::default();
            let global = build_extended_call_graph(&rc, &opts);
            let parts: Vec<DualCallGraph> = rc
                .packages()
                .iter()
                .map(|p| build_package_graph(&rc, &p.name, &opts))
                .collect();
            let merged = merge_package_graphs(&parts).expect("closed merge set");
            assert_eq!(merged, global, "seed {seed}");
            let mut reversed = parts;
            reversed.reverse();
            let merged_rev = merge_package_graphs(&reversed).expect("closed merge set");
            assert_eq!(merged_rev, global, "seed {seed} (reversed merge order)");
        }
    }

    #[test]
    fn reverse_of_worked_example_flips_every_edge() {
        let rc = worked_example();
        let g = build_extended_call_graph(&rc, &BuildOptions::default());
        let adj = g.adjacency();
        let rev = reverse_graph(&adj);
        let foo = g.index_of(&NodeKey::raw("library1::foo".into())).unwrap();
        let bar = g.index_of(&NodeKey::raw("library2::bar".into())).unwrap();
        let qux = g.index_of(&NodeKey::raw("library4::qux".into())).unwrap();
        let baz5 = g.index_of(&NodeKey::raw("library5::TypeB::baz".into())).unwrap();
        let abs = g
            .index_of(&NodeKey::raw("abstract:dyn:library3::HasBaz::baz".into()))
            .unwrap();
        assert_eq!(rev[bar], vec![foo]);
        assert_eq!(rev[abs], vec![bar]);
        assert_eq!(rev[qux], vec![baz5]);
        assert!(rev[foo].is_empty());
    }

    #[test]
    fn reverse_of_empty_graph_is_empty() {
        assert!(reverse_graph(&[]).is_empty());
    }

    #[test]
    fn early_termination_flags_truncated_functions() {
        let rc = worked_example();
        let opts = BuildOptions { early_termination: true, ..BuildOptions::default() };
        let g = build_extended_call_graph(&rc, &opts);
        let baz5 = g.index_of(&NodeKey::raw("library5::TypeB::baz".into())).unwrap();
        assert!(g.is_truncated(baz5));
        // The call inside the unsafe block is not traversed.
        assert!(g.adjacency()[baz5].is_empty());

        let all_safe = resolve_srcs(&[("p.ml", "package p;\nfn a() { b(); }\nfn b() { }")]);
        let g = build_extended_call_graph(&all_safe, &opts);
        assert_eq!(g.truncated_nodes().count(), 0);
    }

    #[test]
    fn construction_is_deterministic() {
        for seed in [3u64, 11, 29] {
            let files = crate::synth::generate_corpus_sources(seed);
            let rc = crate::frontend::parse_and_resolve(&files).expect("well-formed");
            let a = build_extended_call_graph(&rc, &BuildOptions::default());
            let b = build_extended_call_graph(&rc, &BuildOptions::default());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn abstract_and_unresolved_nodes_have_no_out_edges() {
        for seed in 0..20u64 {
            let files = crate::synth::generate_corpus_sources(seed);
            let rc = crate::frontend::parse_and_resolve(&files).expect("well-formed");
            let g = build_extended_call_graph(&rc, &BuildOptions::default());
            let adj = g.adjacency();
            for (idx, node) in g.nodes() {
                if node.is_abstract_or_unresolved() {
                    assert!(adj[idx].is_empty(), "{} has out-edges", g.key(idx));
                }
            }
        }
    }

    #[test]
    fn external_tags_exactly_mark_package_crossings() {
        for seed in 0..20u64 {
            let files = crate::synth::generate_corpus_sources(seed);
            let rc = crate::frontend::parse_and_resolve(&files).expect("well-formed");
            let g = build_extended_call_graph(&rc, &BuildOptions::default());
            for (u, v, info) in g.edges() {
                let crossing = g.node(u).package() != g.node(v).package();
                assert_eq!(info.external, crossing);
            }
        }
    }

    #[test]
    fn instantiate_substitutes_through_the_caller() {
        let rc = resolve_srcs(&[(
            "p.ml",
            "package p;\ntype TypeA;\nfn f<T>(x: T) { g::<T>(); }\nfn g<T>() { }\nfn main_like() { f::<TypeA>(); }",
        )]);
        let g_id = FunctionId::free("p", "g");
        let caller = Substitution::new(vec![(
            "T".into(),
            TypeRef::Concrete("p::TypeA".into()),
        )])
        .unwrap();
        let inst = instantiate_generic_call(
            &rc,
            &g_id,
            &[TypeRef::GenericVar("T".into())],
            Some(&caller),
            1,
            8,
        );
        match inst {
            Instantiation::Ground { target, subst } => {
                assert_eq!(target, g_id);
                assert_eq!(subst.get("T"), Some(&TypeRef::Concrete("p::TypeA".into())));
            }
            other => panic!("expected ground instantiation, got {other:?}"),
        }
        // Un-grounded caller: the same argument stays non-ground.
        let inst = instantiate_generic_call(
            &rc,
            &g_id,
            &[TypeRef::GenericVar("T".into())],
            None,
            0,
            8,
        );
        assert_eq!(inst, Instantiation::Unresolved(UnresolvedReason::NonGroundArguments));
        // Depth cap.
        let inst = instantiate_generic_call(
            &rc,
            &g_id,
            &[TypeRef::Concrete("p::TypeA".into())],
            None,
            8,
            8,
        );
        assert_eq!(inst, Instantiation::Unresolved(UnresolvedReason::DepthCapExceeded));
    }

    #[test]
    fn mixed_type_arguments_substitute_per_position() {
        let rc = resolve_srcs(&[(
            "mix.ml",
            "package mix;\ntype TypeA;\ntype TypeB;\nfn f<T>() { g::<T, TypeB>(); }\nfn g<T, U>() { }\nfn start() { f::<TypeA>(); }",
        )]);
        let g = build_extended_call_graph(&rc, &BuildOptions::default());
        let keys = key_set(&g);
        assert!(keys.contains("mix::g[T=mix::TypeA,U=mix::TypeB]"), "{keys:?}");
        // From the representative the first argument is open, so the edge
        // goes to g's representative.
        let edges = edge_keys(&g);
        assert!(edges.contains(&("mix::f[*]".into(), "mix::g[*]".into(), false)));
    }

    #[test]
    fn function_values_instantiate_unbounded_generics() {
        let rc = resolve_srcs(&[(
            "fp.ml",
            "package fp;\nfn f<T>() { }\nfn start() { f::<fnptr>(); }",
        )]);
        let g = build_extended_call_graph(&rc, &BuildOptions::default());
        assert!(key_set(&g).contains("fp::f[T=fnptr]"));
    }

    #[test]
    fn method_resolution_uses_the_implementation_table() {
        let rc = worked_example();
        let a = resolve_method_call(
            &TypeRef::Concrete("library3::TypeA".into()),
            "baz",
            &rc,
        )
        .unwrap();
        assert_eq!(a, MethodTarget::Static(FunctionId::method("library3", "TypeA", "baz")));
        let b = resolve_method_call(
            &TypeRef::Concrete("library5::TypeB".into()),
            "baz",
            &rc,
        )
        .unwrap();
        assert_eq!(b, MethodTarget::Static(FunctionId::method("library5", "TypeB", "baz")));
        let d = resolve_method_call(
            &TypeRef::DynInterface("library3::HasBaz".into()),
            "baz",
            &rc,
        )
        .unwrap();
        assert_eq!(
            d,
            MethodTarget::Dynamic { interface: "library3::HasBaz".into(), method: "baz".into() }
        );
        let missing =
            resolve_method_call(&TypeRef::Concrete("library3::TypeA".into()), "nope", &rc);
        assert!(matches!(missing, Err(GraphError::NoImplementation { .. })));
    }
}
