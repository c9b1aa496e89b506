//! Mini-language frontend: lexer, parser, name resolution, and the unsafe
//! discipline checker.

pub mod diag;
mod discipline;
mod parser;
mod render;
mod resolve;
pub mod token;

pub use diag::{has_errors, sort_diagnostics, Diagnostic, Severity};
pub use discipline::check_unsafe_discipline;
pub use parser::parse_corpus;
pub use render::render_package;
pub use resolve::{resolve_names, ResolvedCorpus};

use crate::model::Corpus;

/// Parses and resolves in one step.
pub fn parse_and_resolve(files: &[(String, String)]) -> Result<ResolvedCorpus, Vec<Diagnostic>> {
    resolve_names(parse_corpus(files)?)
}

/// Renders every package of a parsed corpus, sorted by package name.
/// Useful for round-trip checks; resolved corpora are not renderable.
pub fn render_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for pkg in &corpus.packages {
        out.push_str(&render_package(pkg));
        out.push('\n');
    }
    out
}
