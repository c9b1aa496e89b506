//! Reverse worklist propagation of unsafety over the extended call graph,
//! the safe / possibly-unsafe function taxonomy, and the operation and
//! callee-ABI censuses.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::frontend::ResolvedCorpus;
use crate::graph::{reverse_graph, DualCallGraph, GraphNode, NodeIdx};
use crate::model::{FunctionId, Origin, ResolvedCallee, Statement, Substitution, UnsafeOpKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Conservative,
    Optimistic,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::Conservative, Mode::Optimistic];

    pub fn label(self) -> &'static str {
        match self {
            Mode::Conservative => "conservative",
            Mode::Optimistic => "optimistic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SafetyLabel {
    Safe,
    PossiblyUnsafe,
}

impl SafetyLabel {
    pub fn label(self) -> &'static str {
        match self {
            SafetyLabel::Safe => "safe",
            SafetyLabel::PossiblyUnsafe => "possibly_unsafe",
        }
    }
}

/// Seeds for the worklist: every node of a function whose body contains an
/// unsafe block, plus (conservative mode only) all abstract and unresolved
/// nodes. Declared-unsafe functions are not seeded: their callers sit inside
/// unsafe blocks and seed themselves. Trusted packages' bodies are never
/// inspected.
pub fn seed_worklist(
    graph: &DualCallGraph,
    rc: &ResolvedCorpus,
    mode: Mode,
) -> BTreeSet<NodeIdx> {
    let trusted = &graph.options().trusted;
    let mut seeds = BTreeSet::new();
    for (idx, node) in graph.nodes() {
        match node.function() {
            Some(id) => {
                if trusted.contains(id.package()) {
                    continue;
                }
                let f = rc.function(id).expect("graph node refers to a corpus function");
                if f.body_contains_unsafe_block() {
                    seeds.insert(idx);
                }
            }
            None => {
                if mode == Mode::Conservative && node.is_abstract_or_unresolved() {
                    seeds.insert(idx);
                }
            }
        }
    }
    seeds
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PropagationStats {
    /// Total worklist insertions; at most one per node.
    pub enqueues: usize,
}

/// Marks every node from which some seed is reachable in the forward call
/// graph, by reversing the graph and propagating from the seeds to callers.
/// Runs in O(nodes + edges); each node enters the worklist at most once.
pub fn propagate_unsafety(graph: &DualCallGraph, seeds: &BTreeSet<NodeIdx>) -> Vec<SafetyLabel> {
    propagate_unsafety_with_stats(graph, seeds).0
}

pub fn propagate_unsafety_with_stats(
    graph: &DualCallGraph,
    seeds: &BTreeSet<NodeIdx>,
) -> (Vec<SafetyLabel>, PropagationStats) {
    let reversed = reverse_graph(&graph.adjacency());
    let mut labels = vec![SafetyLabel::Safe; graph.node_count()];
    let mut work: VecDeque<NodeIdx> = VecDeque::new();
    let mut stats = PropagationStats::default();
    for &s in seeds {
        labels[s] = SafetyLabel::PossiblyUnsafe;
        work.push_back(s);
        stats.enqueues += 1;
    }
    while let Some(current) = work.pop_front() {
        for &caller in &reversed[current] {
            if labels[caller] == SafetyLabel::Safe {
                labels[caller] = SafetyLabel::PossiblyUnsafe;
                work.push_back(caller);
                stats.enqueues += 1;
            }
        }
    }
    debug_assert!(stats.enqueues <= graph.node_count());
    (labels, stats)
}

/// Reference implementation: for every node independently, forward-search
/// for a seed. Used as the ground truth for `propagate_unsafety`.
pub fn brute_force_oracle(graph: &DualCallGraph, seeds: &BTreeSet<NodeIdx>) -> Vec<SafetyLabel> {
    let adjacency = graph.adjacency();
    let n = graph.node_count();
    (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                if seeds.contains(&u) {
                    return SafetyLabel::PossiblyUnsafe;
                }
                for &v in &adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            SafetyLabel::Safe
        })
        .collect()
}

/// Per-function verdict under one analysis mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionVerdict {
    pub id: FunctionId,
    pub label: SafetyLabel,
    pub declared_unsafe: bool,
}

/// A function is possibly unsafe when it is declared unsafe or its
/// representative node (the ground node for non-generic functions, the
/// un-grounded representative for generic ones) was marked by propagation.
pub fn classify_functions(
    rc: &ResolvedCorpus,
    graph: &DualCallGraph,
    node_labels: &[SafetyLabel],
) -> BTreeMap<FunctionId, FunctionVerdict> {
    let mut verdicts = BTreeMap::new();
    for (_, f) in rc.corpus().functions() {
        if !f.counts_as_function() {
            continue;
        }
        let representative = if f.is_generic() {
            GraphNode::Ungrounded { function: f.id.clone() }
        } else {
            GraphNode::Ground { function: f.id.clone(), subst: Substitution::empty() }
        };
        let node_label = graph
            .index_of(&representative.key())
            .map(|idx| node_labels[idx])
            .unwrap_or(SafetyLabel::Safe);
        let label = if f.declared_unsafe || node_label == SafetyLabel::PossiblyUnsafe {
            SafetyLabel::PossiblyUnsafe
        } else {
            SafetyLabel::Safe
        };
        verdicts.insert(
            f.id.clone(),
            FunctionVerdict { id: f.id.clone(), label, declared_unsafe: f.declared_unsafe },
        );
    }
    verdicts
}

/// Everything one analysis mode produces.
#[derive(Clone, Debug)]
pub struct ModeOutcome {
    pub mode: Mode,
    pub seeds: BTreeSet<NodeIdx>,
    pub node_labels: Vec<SafetyLabel>,
    pub functions: BTreeMap<FunctionId, FunctionVerdict>,
}

impl ModeOutcome {
    pub fn possibly_unsafe_functions(&self) -> BTreeSet<FunctionId> {
        self.functions
            .values()
            .filter(|v| v.label == SafetyLabel::PossiblyUnsafe)
            .map(|v| v.id.clone())
            .collect()
    }
}

pub fn run_mode(rc: &ResolvedCorpus, graph: &DualCallGraph, mode: Mode) -> ModeOutcome {
    let seeds = seed_worklist(graph, rc, mode);
    let node_labels = propagate_unsafety(graph, &seeds);
    let functions = classify_functions(rc, graph, &node_labels);
    ModeOutcome { mode, seeds, node_labels, functions }
}

/// Census of unsafe-operation occurrences by lexical context. An occurrence
/// inside an unsafe block counts under the block context even within a
/// declared-unsafe function; occurrences elsewhere in a declared-unsafe body
/// count under the function context.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts([u64; 5]);

impl OpCounts {
    pub fn get(&self, kind: UnsafeOpKind) -> u64 {
        self.0[kind_index(kind)]
    }

    fn add(&mut self, kind: UnsafeOpKind) {
        self.0[kind_index(kind)] += 1;
    }

    fn accumulate(&mut self, other: &OpCounts) {
        for i in 0..5 {
            self.0[i] += other.0[i];
        }
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

fn kind_index(kind: UnsafeOpKind) -> usize {
    UnsafeOpKind::ALL.iter().position(|k| *k == kind).expect("kind is in ALL")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContextCounts {
    pub in_block: OpCounts,
    pub in_unsafe_fn: OpCounts,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpCensus {
    pub per_package: BTreeMap<String, ContextCounts>,
    pub totals: ContextCounts,
}

pub fn classify_unsafe_ops(rc: &ResolvedCorpus) -> OpCensus {
    let mut census = OpCensus::default();
    for pkg in rc.packages() {
        let mut counts = ContextCounts::default();
        for f in &pkg.functions {
            if f.generated {
                continue;
            }
            count_ops(rc, &f.body, f.declared_unsafe, false, &mut counts);
        }
        census.totals.in_block.accumulate(&counts.in_block);
        census.totals.in_unsafe_fn.accumulate(&counts.in_unsafe_fn);
        census.per_package.insert(pkg.name.clone(), counts);
    }
    census
}

fn count_ops(
    rc: &ResolvedCorpus,
    stmts: &[Statement],
    in_unsafe_fn: bool,
    in_block: bool,
    counts: &mut ContextCounts,
) {
    let record = |kind: UnsafeOpKind, counts: &mut ContextCounts| {
        if in_block {
            counts.in_block.add(kind);
        } else if in_unsafe_fn {
            counts.in_unsafe_fn.add(kind);
        }
        // Outside both contexts would be a discipline error; the census
        // only runs on error-free corpora.
    };
    for stmt in stmts {
        match stmt {
            Statement::LocalDecl { .. } => {}
            Statement::Primitive { kind, .. } => record(*kind, counts),
            Statement::Call(call) => {
                let resolved = call.resolved.as_ref().expect("corpus is resolved");
                if rc.is_unsafe_callee(resolved) {
                    record(UnsafeOpKind::UnsafeCall, counts);
                }
            }
            Statement::UnsafeBlock { body, .. } => {
                count_ops(rc, body, in_unsafe_fn, true, counts);
            }
        }
    }
}

/// Census of call sites targeting declared-unsafe functions, binned by the
/// callee's origin. Targets in trusted packages land in their own bin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AbiCensus {
    pub native: u64,
    pub c: u64,
    pub intrinsic: u64,
    pub trusted: u64,
}

impl AbiCensus {
    pub fn total(&self) -> u64 {
        self.native + self.c + self.intrinsic + self.trusted
    }
}

pub fn classify_called_abis(rc: &ResolvedCorpus, trusted: &BTreeSet<String>) -> AbiCensus {
    let mut census = AbiCensus::default();
    for pkg in rc.packages() {
        for f in &pkg.functions {
            if f.generated {
                continue;
            }
            bin_calls(rc, &f.body, trusted, &mut census);
        }
    }
    census
}

fn bin_calls(
    rc: &ResolvedCorpus,
    stmts: &[Statement],
    trusted: &BTreeSet<String>,
    census: &mut AbiCensus,
) {
    for stmt in stmts {
        match stmt {
            Statement::UnsafeBlock { body, .. } => bin_calls(rc, body, trusted, census),
            Statement::Call(call) => {
                let resolved = call.resolved.as_ref().expect("corpus is resolved");
                if !rc.is_unsafe_callee(resolved) {
                    continue;
                }
                match resolved {
                    ResolvedCallee::Static { target } | ResolvedCallee::Generic { target } => {
                        if trusted.contains(target.package()) {
                            census.trusted += 1;
                        } else {
                            match &rc.function(target).expect("target exists").origin {
                                Origin::External { abi } => match abi {
                                    crate::model::Abi::C => census.c += 1,
                                    crate::model::Abi::Intrinsic => census.intrinsic += 1,
                                    crate::model::Abi::Native => census.native += 1,
                                },
                                _ => census.native += 1,
                            }
                        }
                    }
                    ResolvedCallee::Dynamic { interface, .. }
                    | ResolvedCallee::GenericReceiver { interface, .. } => {
                        let pkg = interface.split("::").next().unwrap_or(interface);
                        if trusted.contains(pkg) {
                            census.trusted += 1;
                        } else {
                            census.native += 1;
                        }
                    }
                    ResolvedCallee::Indirect => {}
                }
            }
            _ => {}
        }
    }
}

/// Declared-unsafe, native-origin functions whose bodies contain no unsafe
/// operation occurrence at all. A lexical body check, not a call-graph one.
pub fn find_vacuous_declared_unsafe(rc: &ResolvedCorpus) -> Vec<FunctionId> {
    let mut vacuous: Vec<FunctionId> = Vec::new();
    for (_, f) in rc.corpus().functions() {
        if !f.counts_as_function() || !f.declared_unsafe || !matches!(f.origin, Origin::Native) {
            continue;
        }
        if !body_has_unsafe_occurrence(rc, &f.body) {
            vacuous.push(f.id.clone());
        }
    }
    vacuous.sort();
    vacuous
}

fn body_has_unsafe_occurrence(rc: &ResolvedCorpus, stmts: &[Statement]) -> bool {
    stmts.iter().any(|stmt| match stmt {
        Statement::LocalDecl { .. } => false,
        Statement::Primitive { .. } => true,
        Statement::UnsafeBlock { body, .. } => body_has_unsafe_occurrence(rc, body),
        Statement::Call(call) => {
            rc.is_unsafe_callee(call.resolved.as_ref().expect("corpus is resolved"))
        }
    })
}
