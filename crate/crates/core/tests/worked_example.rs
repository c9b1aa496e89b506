//! End-to-end checks of the five-package worked example shipped in
//! `fixtures/worked_example`.

use std::path::{Path, PathBuf};

use safegraph::frontend::{self, ResolvedCorpus};
use safegraph::model::{FunctionId, ResolvedCallee, Statement};

fn worked_example_files() -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/worked_example");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("fixture dir")
        .map(|e| e.expect("entry").path())
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            (p.file_name().unwrap().to_string_lossy().into_owned(),
             std::fs::read_to_string(&p).expect("read"))
        })
        .collect()
}

fn worked_example() -> ResolvedCorpus {
    frontend::parse_and_resolve(&worked_example_files()).expect("worked_example resolves")
}

#[test]
fn parses_into_five_packages_with_the_expected_items() {
    let corpus = frontend::parse_corpus(&worked_example_files()).expect("worked_example parses");
    assert_eq!(corpus.packages.len(), 5);
    let names: Vec<&str> = corpus.packages.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, vec!["library1", "library2", "library3", "library4", "library5"]);

    let lib4 = corpus.package("library4").unwrap();
    assert_eq!(lib4.functions.len(), 1);
    assert!(lib4.functions[0].declared_unsafe);
    assert!(lib4.functions[0].body.is_empty());

    let lib5 = corpus.package("library5").unwrap();
    assert_eq!(lib5.impls.len(), 1);
    let baz = &lib5.functions[0];
    assert_eq!(baz.id, FunctionId::method("library5", "TypeB", "baz"));
    assert!(matches!(baz.body.as_slice(), [Statement::UnsafeBlock { .. }]));

    let deps: Vec<usize> =
        corpus.packages.iter().map(|p| p.dependencies.len()).collect();
    assert_eq!(deps, vec![1, 2, 0, 0, 2]);
}

#[test]
fn the_polymorphic_call_is_classified_dynamic() {
    let rc = worked_example();
    let bar = rc.function(&FunctionId::free("library2", "bar")).unwrap();
    let Statement::Call(call) = &bar.body[0] else { panic!("expected a call") };
    assert_eq!(
        call.resolved,
        Some(ResolvedCallee::Dynamic {
            interface: "library3::HasBaz".into(),
            method: "baz".into()
        })
    );
}

#[test]
fn discipline_is_clean_on_the_worked_example() {
    let diags = frontend::check_unsafe_discipline(&worked_example());
    assert!(diags.is_empty(), "{diags:?}");
}
