//! Property tests over randomized inputs: parser totality, pretty-print
//! round trips, lexer agreement with an independent scanner, reversal
//! involution, and the lexical discipline invariant.

use proptest::prelude::*;

use safegraph::frontend::{self, token};
use safegraph::graph::reverse_graph;
use safegraph::model::{ResolvedCallee, Statement};
use safegraph::synth;

#[test]
fn parsing_any_input_never_panics() {
    // Quick deterministic fuzz over byte soup and near-grammar fragments.
    let mut rng = synth::Rng::new(0xabcdef);
    let alphabet: Vec<char> =
        "package use fn unsafe impl interface {}();:<>,.@\"abcXYZ09_ \n\t$#%!".chars().collect();
    for _ in 0..500 {
        let len = rng.below(200) as usize;
        let src: String =
            (0..len).map(|_| alphabet[rng.below(alphabet.len() as u64) as usize]).collect();
        let _ = frontend::parse_corpus(&[("fuzz.ml".to_string(), src)]);
    }
}

proptest! {
    #[test]
    fn parse_corpus_is_total_on_arbitrary_strings(src in ".{0,300}") {
        let _ = frontend::parse_corpus(&[("any.ml".to_string(), src)]);
    }

    #[test]
    fn reversal_is_an_involution(edges in proptest::collection::vec((0usize..30, 0usize..30), 0..80)) {
        let mut adj = vec![Vec::new(); 30];
        for (u, v) in &edges {
            adj[*u].push(*v);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let mut twice = reverse_graph(&reverse_graph(&adj));
        for list in &mut twice {
            list.sort_unstable();
        }
        prop_assert_eq!(twice, adj);
    }
}

#[test]
fn pretty_print_round_trips_on_synthetic_corpora() {
    for seed in 0..60u64 {
        let files = synth::generate_corpus_sources(seed);
        let corpus = frontend::parse_corpus(&files).expect("well-formed");
        let printed = frontend::render_corpus(&corpus);
        let refiles: Vec<(String, String)> = corpus
            .packages
            .iter()
            .map(|p| (format!("{}.ml", p.name), frontend::render_package(p)))
            .collect();
        let reparsed = frontend::parse_corpus(&refiles)
            .unwrap_or_else(|d| panic!("seed {seed} reparse failed: {d:?}"));
        let reprinted = frontend::render_corpus(&reparsed);
        assert_eq!(printed, reprinted, "seed {seed} round trip changed structure");
    }
}

/// Independent scanner: a regex lexeme counter that shares nothing with the
/// hand-written lexer.
#[test]
fn token_count_matches_a_regex_scanner() {
    let lexeme_re = regex::Regex::new(
        r#"//[^\n]*|"[^"\n]*"|@[A-Za-z0-9_]+|[A-Za-z][A-Za-z0-9_]*|::|[;,(){}<>.:]"#,
    )
    .unwrap();
    let mut rng = synth::Rng::new(0x5eed);
    for seed in 0..40u64 {
        let files = synth::generate_corpus_sources(seed);
        for (name, src) in files {
            let (tokens, diags) = token::tokenize(&src, &name);
            assert!(diags.is_empty(), "{name}: {diags:?}");
            let expected = lexeme_re
                .find_iter(&src)
                .filter(|m| !m.as_str().starts_with("//"))
                .count();
            assert_eq!(tokens.len(), expected, "{name} token count");
            // Concatenating lexemes reproduces the significant content.
            let glued: String = tokens.iter().map(|t| t.lexeme.as_str()).collect();
            let stripped: String = lexeme_re
                .find_iter(&src)
                .map(|m| m.as_str())
                .filter(|s| !s.starts_with("//"))
                .collect();
            assert_eq!(glued, stripped, "{name} lexeme content");
        }
        // Sprinkle comments and odd spacing into one file and re-check.
        let files = synth::generate_corpus_sources(seed);
        if let Some((name, src)) = files.into_iter().next() {
            let mut spaced = String::new();
            for line in src.lines() {
                spaced.push_str(line);
                if rng.chance(30) {
                    spaced.push_str("   // trailing note");
                }
                spaced.push('\n');
            }
            let (tokens, diags) = token::tokenize(&spaced, &name);
            assert!(diags.is_empty());
            let expected = lexeme_re
                .find_iter(&spaced)
                .filter(|m| !m.as_str().starts_with("//"))
                .count();
            assert_eq!(tokens.len(), expected);
        }
    }
}

/// In an error-free corpus every unsafe operation is lexically enclosed by
/// an unsafe block or a declared-unsafe function.
#[test]
fn discipline_invariant_holds_on_clean_corpora() {
    fn assert_enclosed(
        rc: &frontend::ResolvedCorpus,
        stmts: &[Statement],
        in_unsafe: bool,
    ) {
        for stmt in stmts {
            match stmt {
                Statement::Primitive { kind, .. } => {
                    assert!(in_unsafe, "bare {:?}", kind)
                }
                Statement::Call(call) => {
                    let resolved = call.resolved.as_ref().unwrap();
                    if rc.is_unsafe_callee(resolved) {
                        assert!(in_unsafe, "bare unsafe call {:?}", resolved);
                    }
                    if matches!(resolved, ResolvedCallee::Indirect) {
                        // indirect calls are never unsafe operations
                    }
                }
                Statement::UnsafeBlock { body, .. } => assert_enclosed(rc, body, true),
                Statement::LocalDecl { .. } => {}
            }
        }
    }
    for seed in 0..40u64 {
        let files = synth::generate_corpus_sources(seed);
        let rc = frontend::parse_and_resolve(&files).expect("well-formed");
        let diags = frontend::check_unsafe_discipline(&rc);
        assert!(!frontend::has_errors(&diags), "seed {seed}");
        for pkg in rc.packages() {
            for f in &pkg.functions {
                assert_enclosed(&rc, &f.body, f.declared_unsafe);
            }
        }
    }
}

/// The warning set is exactly the unsafe blocks whose subtree contains no
/// unsafe operation.
#[test]
fn redundant_warnings_match_an_independent_emptiness_walk() {
    fn subtree_has_op(rc: &frontend::ResolvedCorpus, stmts: &[Statement]) -> bool {
        stmts.iter().any(|s| match s {
            Statement::Primitive { .. } => true,
            Statement::Call(c) => rc.is_unsafe_callee(c.resolved.as_ref().unwrap()),
            Statement::UnsafeBlock { body, .. } => subtree_has_op(rc, body),
            Statement::LocalDecl { .. } => false,
        })
    }
    fn count_redundant(rc: &frontend::ResolvedCorpus, stmts: &[Statement]) -> usize {
        stmts
            .iter()
            .map(|s| match s {
                Statement::UnsafeBlock { body, .. } => {
                    usize::from(!subtree_has_op(rc, body)) + count_redundant(rc, body)
                }
                _ => 0,
            })
            .sum()
    }
    for seed in 0..40u64 {
        let files = synth::generate_corpus_sources(seed);
        let rc = frontend::parse_and_resolve(&files).expect("well-formed");
        let warnings = frontend::check_unsafe_discipline(&rc)
            .iter()
            .filter(|d| d.code == "W-REDUNDANT-UNSAFE")
            .count();
        let expected: usize = rc
            .packages()
            .iter()
            .flat_map(|p| p.functions.iter())
            .map(|f| count_redundant(&rc, &f.body))
            .sum();
        assert_eq!(warnings, expected, "seed {seed}");
    }
}
