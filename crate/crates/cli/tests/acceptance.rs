//! Acceptance suite. Each test exercises one acceptance criterion end to
//! end at its stated tolerance and prints one pass line; a failed assertion
//! is the fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the per-criterion lines.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use safegraph::analysis::{
    brute_force_oracle, classify_called_abis, classify_unsafe_ops, find_vacuous_declared_unsafe,
    run_mode, Mode, SafetyLabel,
};
use safegraph::frontend::{self, ResolvedCorpus};
use safegraph::graph::{build_extended_call_graph, BuildOptions, GraphNode};
use safegraph::metrics::{
    abstraction_prevalence, cdf_series, count_corpus_abstractions, dependency_unsafety_matrix,
    format_mean_tenths, format_percent, mean_direct_dependencies, only_safe_percentage,
    snapshot_diff, AbstractionCounts,
};
use safegraph::model::{FunctionId, UnsafeOpKind};
use safegraph::synth;

fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn load_fixture(name: &str) -> ResolvedCorpus {
    let dir = fixture_dir(name);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "ml"))
        .collect();
    paths.sort();
    let files: Vec<(String, String)> = paths
        .iter()
        .map(|p| {
            (p.file_name().unwrap().to_string_lossy().into_owned(),
             std::fs::read_to_string(p).expect("read fixture"))
        })
        .collect();
    frontend::parse_and_resolve(&files).expect("fixture is well-formed")
}

fn resolve(srcs: &[(&str, &str)]) -> ResolvedCorpus {
    let files: Vec<(String, String)> =
        srcs.iter().map(|(n, s)| (n.to_string(), s.to_string())).collect();
    frontend::parse_and_resolve(&files).expect("well-formed")
}

fn ids(names: &[&str]) -> BTreeSet<FunctionId> {
    names
        .iter()
        .map(|n| {
            let parts: Vec<&str> = n.split("::").collect();
            match parts.as_slice() {
                [p, f] => FunctionId::free(p, f),
                [p, t, f] => FunctionId::method(p, t, f),
                _ => panic!("bad id {n}"),
            }
        })
        .collect()
}

fn pass(n: u32, what: &str) {
    println!("[acceptance] criterion {n:02} ({what}): PASS");
}

#[test]
fn criterion_01_worked_example_verdict_sets() {
    let started = Instant::now();
    let rc = load_fixture("worked_example");
    let graph = build_extended_call_graph(&rc, &BuildOptions::default());
    let conservative = run_mode(&rc, &graph, Mode::Conservative);
    let optimistic = run_mode(&rc, &graph, Mode::Optimistic);

    assert_eq!(
        conservative.possibly_unsafe_functions(),
        ids(&["library1::foo", "library2::bar", "library5::TypeB::baz", "library4::qux"]),
        "conservative set"
    );
    assert_eq!(
        optimistic.possibly_unsafe_functions(),
        ids(&["library5::TypeB::baz", "library4::qux"]),
        "optimistic set"
    );
    let baz3 = FunctionId::method("library3", "TypeA", "baz");
    assert_eq!(conservative.functions[&baz3].label, SafetyLabel::Safe);
    assert_eq!(optimistic.functions[&baz3].label, SafetyLabel::Safe);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass(1, "worked_example verdict sets");
}

#[test]
fn criterion_02_and_03_oracle_equivalence_and_mode_monotonicity() {
    let started = Instant::now();
    let mut corpora = 0u32;
    for seed in 0..200u64 {
        let files = synth::generate_corpus_sources(seed);
        let rc = frontend::parse_and_resolve(&files)
            .unwrap_or_else(|d| panic!("seed {seed}: {d:?}"));
        let fns = rc.corpus().functions().count();
        assert!(fns <= 50, "seed {seed}: {fns} functions");
        let graph = build_extended_call_graph(&rc, &BuildOptions::default());
        assert!(graph.edge_count() <= 150, "seed {seed}: {} edges", graph.edge_count());

        let conservative = run_mode(&rc, &graph, Mode::Conservative);
        let optimistic = run_mode(&rc, &graph, Mode::Optimistic);
        for outcome in [&conservative, &optimistic] {
            let oracle = brute_force_oracle(&graph, &outcome.seeds);
            assert_eq!(outcome.node_labels, oracle, "seed {seed} {:?}", outcome.mode);
        }
        assert!(
            optimistic
                .possibly_unsafe_functions()
                .is_subset(&conservative.possibly_unsafe_functions()),
            "seed {seed}: monotonicity violated"
        );
        corpora += 1;
    }
    assert!(corpora >= 200);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(2, "oracle equivalence on 200 randomized corpora");
    pass(3, "mode monotonicity on the same corpora");
}

#[test]
fn criterion_04_early_termination_equivalence() {
    let plain = BuildOptions::default();
    let truncating = BuildOptions { early_termination: true, ..BuildOptions::default() };

    for fixture in ["worked_example", "generics", "capped"] {
        let rc = load_fixture(fixture);
        for mode in Mode::BOTH {
            let a = run_mode(&rc, &build_extended_call_graph(&rc, &plain), mode);
            let b = run_mode(&rc, &build_extended_call_graph(&rc, &truncating), mode);
            assert_eq!(a.functions, b.functions, "fixture {fixture} mode {mode:?}");
        }
    }
    for seed in 0..200u64 {
        let files = synth::generate_corpus_sources(seed);
        let rc = frontend::parse_and_resolve(&files).expect("well-formed");
        for mode in Mode::BOTH {
            let a = run_mode(&rc, &build_extended_call_graph(&rc, &plain), mode);
            let b = run_mode(&rc, &build_extended_call_graph(&rc, &truncating), mode);
            assert_eq!(a.functions, b.functions, "seed {seed} mode {mode:?}");
        }
    }
    pass(4, "early-termination equivalence");
}

#[test]
fn criterion_05_generic_instantiation_and_depth_cap() {
    let rc = load_fixture("generics");
    let graph = build_extended_call_graph(&rc, &BuildOptions::default());
    let fgh_nodes: BTreeSet<String> = graph
        .nodes()
        .filter(|(_, n)| {
            matches!(n, GraphNode::Ground { function, .. } | GraphNode::Ungrounded { function }
                if ["chainpkg::f", "chainpkg::g", "chainpkg::h"].contains(&function.as_str()))
        })
        .map(|(i, _)| graph.key(i).to_string())
        .collect();
    let expected: BTreeSet<String> = [
        "chainpkg::f[T=chainpkg::TypeA]",
        "chainpkg::g[T=chainpkg::TypeA]",
        "chainpkg::h[T=chainpkg::TypeA]",
        "chainpkg::f[*]",
        "chainpkg::g[*]",
        "chainpkg::h[*]",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(fgh_nodes, expected, "chain node set");

    let rc = load_fixture("capped");
    let started = Instant::now();
    let graph =
        build_extended_call_graph(&rc, &BuildOptions { depth_cap: 3, ..BuildOptions::default() });
    assert!(started.elapsed().as_secs_f64() < 1.0, "cap fixture must terminate fast");
    let keys: BTreeSet<String> = graph.nodes().map(|(i, _)| graph.key(i).to_string()).collect();
    assert!(keys.contains("cappkg::r3[T=cappkg::TypeA]"));
    assert!(keys.contains("unresolved:capped:cappkg::r4"));
    assert!(!keys.contains("cappkg::r4[T=cappkg::TypeA]"));
    let unresolved = graph.nodes().filter(|(_, n)| n.is_abstract_or_unresolved()).count();
    assert_eq!(unresolved, 1, "exactly one unresolved node");
    pass(5, "generic instantiation and depth cap");
}

#[test]
fn criterion_06_discipline_diagnostics_and_vacuous_list() {
    // A declared-unsafe call outside any unsafe context: exactly one error.
    let rc = resolve(&[(
        "bad.ml",
        "package p;\nunsafe fn danger() { }\nfn caller() { danger(); }",
    )]);
    let diags = frontend::check_unsafe_discipline(&rc);
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].code, "E-UNSAFE-OP");
    assert!(diags[0].is_error());

    // An empty unsafe block: exactly the redundancy warning.
    let rc = resolve(&[("warn.ml", "package p;\nfn f() { unsafe { } }")]);
    let diags = frontend::check_unsafe_discipline(&rc);
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].code, "W-REDUNDANT-UNSAFE");
    assert!(!diags[0].is_error());

    // A declared-unsafe function with a fully safe body: no warnings, but
    // it appears in the vacuous list.
    let rc = resolve(&[("vac.ml", "package p;\nunsafe fn harmless() { }")]);
    assert!(frontend::check_unsafe_discipline(&rc).is_empty());
    assert_eq!(find_vacuous_declared_unsafe(&rc), vec![FunctionId::free("p", "harmless")]);
    pass(6, "discipline diagnostics and vacuous detection");
}

#[test]
fn criterion_07_worked_example_metrics_structural_reproduction() {
    let rc = load_fixture("worked_example");
    let counts = count_corpus_abstractions(rc.corpus());

    let prevalence = abstraction_prevalence(&counts);
    assert_eq!(prevalence.percent(prevalence.any), "40.0");
    assert_eq!(prevalence.percent(prevalence.blocks), "20.0");

    let own = counts.iter().map(|(k, v)| (k.clone(), v.any())).collect();
    let matrix = dependency_unsafety_matrix(rc.corpus(), &own);
    assert_eq!(format_percent(matrix.own_and_deps, matrix.total), "20.0");
    assert_eq!(format_percent(matrix.own_no_deps, matrix.total), "20.0");
    assert_eq!(format_percent(matrix.deps_no_own, matrix.total), "40.0");
    assert_eq!(format_percent(matrix.neither, matrix.total), "20.0");

    let graph = build_extended_call_graph(&rc, &BuildOptions::default());
    let conservative = run_mode(&rc, &graph, Mode::Conservative);
    let optimistic = run_mode(&rc, &graph, Mode::Optimistic);
    let (c, t) = only_safe_percentage(&rc, &conservative.functions).unwrap();
    assert_eq!(format_percent(c, t), "20.0");
    let (o, t) = only_safe_percentage(&rc, &optimistic.functions).unwrap();
    assert_eq!(format_percent(o, t), "60.0");

    let blocks: Vec<u64> = counts.values().map(|c| c.blocks).collect();
    let cdf = cdf_series(&blocks, 1000);
    let rendered: Vec<(u64, String)> =
        cdf.points.iter().map(|p| (p.value, cdf.cumulative_percent(p))).collect();
    assert_eq!(rendered, vec![(0, "80.0".to_string()), (1, "100.0".to_string())]);

    let (sum, n) = mean_direct_dependencies(rc.corpus()).unwrap();
    assert_eq!(format_mean_tenths(sum, n), "1.0");
    pass(7, "worked_example metrics structural reproduction");
}

#[test]
fn criterion_08_snapshot_diff() {
    let rc = load_fixture("worked_example");
    let counts = count_corpus_abstractions(rc.corpus());
    let same = snapshot_diff(&counts, &counts);
    let b = same.blocks_summary();
    assert_eq!(format_percent(b.same, b.matched), "100.0");
    let f = same.unsafe_fns_summary();
    assert_eq!(format_percent(f.same, f.matched), "100.0");

    let old: std::collections::BTreeMap<String, AbstractionCounts> = (0..10)
        .map(|i|
            (format!("p{i}"), AbstractionCounts { blocks: 2, ..AbstractionCounts::default() }))
        .collect();
    let mut new = old.clone();
    new.get_mut("p5").unwrap().blocks += 1;
    let diff = snapshot_diff(&old, &new);
    let b = diff.blocks_summary();
    assert_eq!(format_percent(b.same, b.matched), "90.0");
    assert_eq!(format_percent(b.increase, b.matched), "10.0");
    assert_eq!(format_percent(b.decrease, b.matched), "0.0");
    pass(8, "snapshot diff");
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_safegraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn criterion_09_every_subcommand_is_byte_deterministic() {
    let worked_example = fixture_dir("worked_example");
    let worked_example = worked_example.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["check", worked_example],
        vec!["graph", worked_example],
        vec!["analyze", worked_example, "--mode", "both"],
        vec!["analyze", worked_example, "--format", "structured-text"],
        vec!["metrics", worked_example],
        vec!["diff", worked_example, worked_example],
    ];
    for args in &cases {
        let a = run_cli(args);
        let b = run_cli(args);
        assert_eq!(a.status.code(), Some(0), "{args:?} stderr: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?} stdout differs between runs");
        assert_eq!(a.stderr, b.stderr, "{args:?} stderr differs between runs");
    }

    // File outputs are byte-stable too.
    let out_a = std::env::temp_dir().join("safegraph_acc_a");
    let out_b = std::env::temp_dir().join("safegraph_acc_b");
    for dir in [&out_a, &out_b] {
        let _ = std::fs::remove_dir_all(dir);
        let status = Command::new(env!("CARGO_BIN_EXE_safegraph"))
            .args(["metrics", worked_example, "--out", dir.to_str().unwrap()])
            .status()
            .expect("binary runs");
        assert!(status.success());
    }
    let mut names: Vec<String> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        vec![
            "cdf_blocks.csv",
            "cdf_possibly_unsafe_conservative.csv",
            "cdf_possibly_unsafe_optimistic.csv",
            "cdf_unsafe_fns.csv",
            "metrics.csv"
        ]
    );
    for name in &names {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    let _ = std::fs::remove_dir_all(&out_a);
    let _ = std::fs::remove_dir_all(&out_b);
    pass(9, "byte-deterministic subcommands");
}

#[test]
fn criterion_10_op_and_abi_census_on_constructed_fixtures() {
    // 13 native, 4 C, 3 intrinsic unsafe calls -> 65/20/15 percent.
    let mut src = String::from(
        "package p;\nextern \"C\" fn c0();\nextern \"intrinsic\" fn i0();\nunsafe fn n0() { }\nfn f() {\n",
    );
    for _ in 0..13 {
        src.push_str("    unsafe { n0(); }\n");
    }
    for _ in 0..4 {
        src.push_str("    unsafe { c0(); }\n");
    }
    for _ in 0..3 {
        src.push_str("    unsafe { i0(); }\n");
    }
    src.push_str("}\n");
    let rc = resolve(&[("abi.ml", &src)]);
    let abis = classify_called_abis(&rc, &BTreeSet::new());
    assert_eq!((abis.native, abis.c, abis.intrinsic, abis.trusted), (13, 4, 3, 0));
    assert_eq!(format_percent(abis.native, abis.total()), "65.0");
    assert_eq!(format_percent(abis.c, abis.total()), "20.0");
    assert_eq!(format_percent(abis.intrinsic, abis.total()), "15.0");

    // 3 raw dereferences in blocks, 2 inline asm in a declared-unsafe body.
    let rc = resolve(&[(
        "ops.ml",
        "package p;\nfn f() { unsafe { @deref_ptr; @deref_ptr; @deref_ptr; } }\nunsafe fn g() { @asm; @asm; }",
    )]);
    let ops = classify_unsafe_ops(&rc);
    assert_eq!(ops.totals.in_block.get(UnsafeOpKind::RawDeref), 3);
    assert_eq!(ops.totals.in_unsafe_fn.get(UnsafeOpKind::InlineAsm), 2);
    assert_eq!(ops.totals.in_block.get(UnsafeOpKind::UnsafeCall), 0);
    assert_eq!(ops.totals.in_unsafe_fn.get(UnsafeOpKind::RawDeref), 0);

    // WorkedExample's censuses, for the report shape on the worked example.
    let rc = load_fixture("worked_example");
    let ops = classify_unsafe_ops(&rc);
    assert_eq!(ops.totals.in_block.get(UnsafeOpKind::UnsafeCall), 1);
    assert_eq!(ops.totals.in_block.get(UnsafeOpKind::GlobalAccess), 1);
    assert_eq!(ops.totals.in_unsafe_fn.total(), 0);
    let abis = classify_called_abis(&rc, &BTreeSet::new());
    assert_eq!((abis.native, abis.c, abis.intrinsic, abis.trusted), (1, 0, 0, 0));
    pass(10, "operation and ABI censuses on constructed fixtures");
}
