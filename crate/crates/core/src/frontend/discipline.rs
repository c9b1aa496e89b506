//! Unsafe-usage discipline: every unsafe operation must sit inside an
//! unsafe block or a declared-unsafe function body, and unsafe blocks that
//! guard nothing draw a warning.

use crate::model::{FunctionRecord, PackageUnit, Statement};

use super::diag::{self, Diagnostic};
use super::resolve::ResolvedCorpus;

/// Checks the whole corpus. Never fails; the diagnostics are the result.
pub fn check_unsafe_discipline(rc: &ResolvedCorpus) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for pkg in rc.packages() {
        for f in &pkg.functions {
            check_function(rc, pkg, f, &mut diags);
        }
    }
    diag::sort_diagnostics(&mut diags);
    diags
}

fn check_function(
    rc: &ResolvedCorpus,
    pkg: &PackageUnit,
    f: &FunctionRecord,
    diags: &mut Vec<Diagnostic>,
) {
    walk(rc, pkg, &f.body, f.declared_unsafe, diags);
}

/// Returns whether the statement list transitively contains an unsafe
/// operation occurrence.
fn walk(
    rc: &ResolvedCorpus,
    pkg: &PackageUnit,
    stmts: &[Statement],
    in_unsafe_context: bool,
    diags: &mut Vec<Diagnostic>,
) -> bool {
    let mut contains_op = false;
    for stmt in stmts {
        match stmt {
            Statement::LocalDecl { .. } => {}
            Statement::Primitive { kind, loc, .. } => {
                contains_op = true;
                if !in_unsafe_context {
                    diags.push(Diagnostic::error(
                        diag::E_UNSAFE_OP,
                        format!(
                            "{} requires an unsafe block or a declared-unsafe function",
                            kind.label()
                        ),
                        &pkg.source_name,
                        *loc,
                    ));
                }
            }
            Statement::Call(call) => {
                let resolved = call.resolved.as_ref().expect("corpus is resolved");
                if rc.is_unsafe_callee(resolved) {
                    contains_op = true;
                    if !in_unsafe_context {
                        diags.push(Diagnostic::error(
                            diag::E_UNSAFE_OP,
                            "call to a declared-unsafe function requires an unsafe block or a declared-unsafe function",
                            &pkg.source_name,
                            call.loc,
                        ));
                    }
                }
            }
            Statement::UnsafeBlock { body, loc } => {
                let inner = walk(rc, pkg, body, true, diags);
                if !inner {
                    diags.push(Diagnostic::warning(
                        diag::W_REDUNDANT_UNSAFE,
                        "unsafe block contains no unsafe operation",
                        &pkg.source_name,
                        *loc,
                    ));
                }
                contains_op |= inner;
            }
        }
    }
    contains_op
}
