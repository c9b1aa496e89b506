//! Deterministic report rendering. Every emitter produces a complete string
//! so identical inputs yield byte-identical outputs.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use safegraph::analysis::{
    AbiCensus, FunctionVerdict, Mode, ModeOutcome, OpCensus, SafetyLabel,
};
use safegraph::frontend::ResolvedCorpus;
use safegraph::graph::DualCallGraph;
use safegraph::metrics::{
    abstraction_prevalence, cdf_series, count_corpus_abstractions, dependency_unsafety_matrix,
    format_mean_tenths, format_percent, mean_direct_dependencies, only_safe_percentage,
    package_metrics, snapshot_diff, AbstractionCounts, CdfSeries, PackageMetrics, SnapshotDiff,
};
use safegraph::model::{FunctionId, UnsafeOpKind};

#[derive(Serialize)]
struct NodeExport {
    key: String,
    kind: &'static str,
    function_id: String,
    substitution: Vec<(String, String)>,
}

#[derive(Serialize)]
struct EdgeExport {
    from_key: String,
    to_key: String,
    external: bool,
}

#[derive(Serialize)]
struct MetaExport {
    depth_cap: u32,
    trusted_packages: Vec<String>,
    early_termination: bool,
}

#[derive(Serialize)]
struct GraphExport {
    nodes: Vec<NodeExport>,
    edges: Vec<EdgeExport>,
    meta: MetaExport,
}

/// The graph export: nodes sorted lexicographically by key, edges by
/// (from, to) key pair.
pub fn render_graph(graph: &DualCallGraph) -> String {
    let mut nodes: Vec<NodeExport> = graph
        .nodes()
        .map(|(_, node)| {
            let substitution = match node {
                safegraph::graph::GraphNode::Ground { subst, .. } => subst
                    .bindings()
                    .iter()
                    .map(|(name, ty)| (name.clone(), ty.to_string()))
                    .collect(),
                _ => Vec::new(),
            };
            NodeExport {
                key: node.key().to_string(),
                kind: node.export_kind(),
                function_id: node.export_function_id(),
                substitution,
            }
        })
        .collect();
    nodes.sort_by(|a, b| a.key.cmp(&b.key));

    let mut edges: Vec<EdgeExport> = graph
        .edges()
        .map(|(u, v, info)| EdgeExport {
            from_key: graph.key(u).to_string(),
            to_key: graph.key(v).to_string(),
            external: info.external,
        })
        .collect();
    edges.sort_by(|a, b| (&a.from_key, &a.to_key).cmp(&(&b.from_key, &b.to_key)));

    let options = graph.options();
    let export = GraphExport {
        nodes,
        edges,
        meta: MetaExport {
            depth_cap: options.depth_cap,
            trusted_packages: options.trusted.iter().cloned().collect(),
            early_termination: options.early_termination,
        },
    };
    let mut text = serde_json::to_string_pretty(&export).expect("serializable export");
    text.push('\n');
    text
}

#[derive(Serialize)]
struct VerdictExport {
    id: String,
    mode: &'static str,
    label: &'static str,
    declared_unsafe: bool,
    vacuous: bool,
}

fn verdict_rows(
    outcomes: &[&ModeOutcome],
    vacuous: &BTreeSet<FunctionId>,
) -> Vec<VerdictExport> {
    let mut ids: BTreeSet<&FunctionId> = BTreeSet::new();
    for outcome in outcomes {
        ids.extend(outcome.functions.keys());
    }
    let mut rows = Vec::new();
    for id in ids {
        for outcome in outcomes {
            let Some(v) = outcome.functions.get(id) else { continue };
            rows.push(VerdictExport {
                id: id.to_string(),
                mode: outcome.mode.label(),
                label: v.label.label(),
                declared_unsafe: v.declared_unsafe,
                vacuous: vacuous.contains(id),
            });
        }
    }
    rows
}

/// Verdicts as CSV, ordered by function id then mode.
pub fn render_verdicts_csv(outcomes: &[&ModeOutcome], vacuous: &BTreeSet<FunctionId>) -> String {
    let mut out = String::from("id,mode,label,declared_unsafe,vacuous\n");
    for row in verdict_rows(outcomes, vacuous) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.id, row.mode, row.label, row.declared_unsafe, row.vacuous
        ));
    }
    out
}

pub fn render_verdicts_json(outcomes: &[&ModeOutcome], vacuous: &BTreeSet<FunctionId>) -> String {
    let rows = verdict_rows(outcomes, vacuous);
    let mut text = serde_json::to_string_pretty(&rows).expect("serializable verdicts");
    text.push('\n');
    text
}

fn op_census_line(label: &str, counts: &safegraph::analysis::OpCounts) -> String {
    let parts: Vec<String> = UnsafeOpKind::ALL
        .iter()
        .map(|k| format!("{}={}", k.label(), counts.get(*k)))
        .collect();
    format!("# op_census {label} {}\n", parts.join(" "))
}

/// The per-package metrics report with `#`-prefixed corpus summary rows.
pub fn render_metrics_csv(
    rc: &ResolvedCorpus,
    rows: &[PackageMetrics],
    conservative: &BTreeMap<FunctionId, FunctionVerdict>,
    optimistic: &BTreeMap<FunctionId, FunctionVerdict>,
    ops: &OpCensus,
    abis: &AbiCensus,
) -> String {
    let mut out = String::from(
        "package,blocks,unsafe_fns,unsafe_interfaces,unsafe_impls,fns_total,fns_possibly_unsafe_conservative,fns_possibly_unsafe_optimistic,direct_deps\n",
    );
    if rows.is_empty() {
        out.push_str("# empty_corpus\n");
        return out;
    }
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.name,
            r.counts.blocks,
            r.counts.unsafe_fns,
            r.counts.unsafe_interfaces,
            r.counts.unsafe_impls,
            r.fns_total,
            r.fns_possibly_unsafe_conservative,
            r.fns_possibly_unsafe_optimistic,
            r.direct_deps
        ));
    }

    let counts = count_corpus_abstractions(rc.corpus());
    let prevalence = abstraction_prevalence(&counts);
    out.push_str(&format!(
        "# prevalence any={} blocks={} unsafe_fns={} unsafe_interfaces={} unsafe_impls={}\n",
        prevalence.percent(prevalence.any),
        prevalence.percent(prevalence.blocks),
        prevalence.percent(prevalence.unsafe_fns),
        prevalence.percent(prevalence.unsafe_interfaces),
        prevalence.percent(prevalence.unsafe_impls),
    ));

    let (c_safe, total) = only_safe_percentage(rc, conservative).expect("non-empty corpus");
    let (o_safe, _) = only_safe_percentage(rc, optimistic).expect("non-empty corpus");
    out.push_str(&format!(
        "# only_safe conservative={} optimistic={}\n",
        format_percent(c_safe, total),
        format_percent(o_safe, total),
    ));

    let own: BTreeMap<String, bool> = counts.iter().map(|(k, v)| (k.clone(), v.any())).collect();
    let matrix = dependency_unsafety_matrix(rc.corpus(), &own);
    out.push_str(&format!(
        "# dependency_matrix own_and_deps={} own_no_deps={} deps_no_own={} neither={}\n",
        format_percent(matrix.own_and_deps, matrix.total),
        format_percent(matrix.own_no_deps, matrix.total),
        format_percent(matrix.deps_no_own, matrix.total),
        format_percent(matrix.neither, matrix.total),
    ));

    let (sum, n) = mean_direct_dependencies(rc.corpus()).expect("non-empty corpus");
    out.push_str(&format!("# mean_direct_deps {}\n", format_mean_tenths(sum, n)));

    out.push_str(&op_census_line("block", &ops.totals.in_block));
    out.push_str(&op_census_line("function", &ops.totals.in_unsafe_fn));

    out.push_str(&format!(
        "# abi_census native={} c={} intrinsic={} trusted={}\n",
        abis.native, abis.c, abis.intrinsic, abis.trusted
    ));
    if abis.total() > 0 {
        out.push_str(&format!(
            "# abi_census_pct native={} c={} intrinsic={} trusted={}\n",
            format_percent(abis.native, abis.total()),
            format_percent(abis.c, abis.total()),
            format_percent(abis.intrinsic, abis.total()),
            format_percent(abis.trusted, abis.total()),
        ));
    }
    out
}

/// A CDF file: two columns, count and cumulative percent.
pub fn render_cdf_csv(series: &CdfSeries) -> String {
    let mut out = String::from("count,cumulative_percent\n");
    for p in &series.points {
        out.push_str(&format!("{},{}\n", p.value, series.cumulative_percent(p)));
    }
    out
}

/// The CDF files the `metrics` subcommand writes, as (name, content).
pub fn metrics_cdf_files(
    rc: &ResolvedCorpus,
    conservative: &ModeOutcome,
    optimistic: &ModeOutcome,
    cap_tenths: u64,
) -> Vec<(&'static str, String)> {
    let counts = count_corpus_abstractions(rc.corpus());
    let blocks: Vec<u64> = counts.values().map(|c| c.blocks).collect();
    let unsafe_fns: Vec<u64> = counts.values().map(|c| c.unsafe_fns).collect();
    let per_pkg_pu = |outcome: &ModeOutcome| -> Vec<u64> {
        rc.packages()
            .iter()
            .map(|pkg| {
                pkg.functions
                    .iter()
                    .filter(|f| f.counts_as_function())
                    .filter(|f| {
                        outcome
                            .functions
                            .get(&f.id)
                            .map(|v| v.label == SafetyLabel::PossiblyUnsafe)
                            .unwrap_or(false)
                    })
                    .count() as u64
            })
            .collect()
    };
    vec![
        ("cdf_blocks.csv", render_cdf_csv(&cdf_series(&blocks, cap_tenths))),
        ("cdf_unsafe_fns.csv", render_cdf_csv(&cdf_series(&unsafe_fns, cap_tenths))),
        (
            "cdf_possibly_unsafe_conservative.csv",
            render_cdf_csv(&cdf_series(&per_pkg_pu(conservative), cap_tenths)),
        ),
        (
            "cdf_possibly_unsafe_optimistic.csv",
            render_cdf_csv(&cdf_series(&per_pkg_pu(optimistic), cap_tenths)),
        ),
    ]
}

/// Builds the full metrics report set for a resolved corpus.
pub fn metrics_outputs(
    rc: &ResolvedCorpus,
    graph: &DualCallGraph,
    cap_tenths: u64,
) -> (String, Vec<(&'static str, String)>) {
    let conservative = safegraph::analysis::run_mode(rc, graph, Mode::Conservative);
    let optimistic = safegraph::analysis::run_mode(rc, graph, Mode::Optimistic);
    let rows = package_metrics(rc, &conservative.functions, &optimistic.functions);
    let ops = safegraph::analysis::classify_unsafe_ops(rc);
    let abis = safegraph::analysis::classify_called_abis(rc, &graph.options().trusted);
    let report = render_metrics_csv(rc, &rows, &conservative.functions, &optimistic.functions, &ops, &abis);
    let cdfs = if rows.is_empty() {
        Vec::new()
    } else {
        metrics_cdf_files(rc, &conservative, &optimistic, cap_tenths)
    };
    (report, cdfs)
}

/// The snapshot diff report with summary rows.
pub fn render_diff_csv(
    old: &BTreeMap<String, AbstractionCounts>,
    new: &BTreeMap<String, AbstractionCounts>,
) -> String {
    let diff: SnapshotDiff = snapshot_diff(old, new);
    let mut out = String::from(
        "package,blocks_old,blocks_new,blocks_change,unsafe_fns_old,unsafe_fns_new,unsafe_fns_change\n",
    );
    for r in &diff.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.package,
            r.blocks_old,
            r.blocks_new,
            r.blocks_class.label(),
            r.unsafe_fns_old,
            r.unsafe_fns_new,
            r.unsafe_fns_class.label()
        ));
    }
    if diff.is_empty() {
        out.push_str("# no_matched_packages\n");
    } else {
        let b = diff.blocks_summary();
        out.push_str(&format!(
            "# blocks same={} increase={} decrease={}\n",
            format_percent(b.same, b.matched),
            format_percent(b.increase, b.matched),
            format_percent(b.decrease, b.matched)
        ));
        let f = diff.unsafe_fns_summary();
        out.push_str(&format!(
            "# unsafe_fns same={} increase={} decrease={}\n",
            format_percent(f.same, f.matched),
            format_percent(f.increase, f.matched),
            format_percent(f.decrease, f.matched)
        ));
    }
    if !diff.unmatched_old.is_empty() {
        out.push_str(&format!("# unmatched_old {}\n", diff.unmatched_old.join(",")));
    }
    if !diff.unmatched_new.is_empty() {
        out.push_str(&format!("# unmatched_new {}\n", diff.unmatched_new.join(",")));
    }
    out
}
