//! Diagnostics emitted by the frontend. Errors prevent analysis; warnings
//! do not.

use std::fmt;

use crate::model::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

/// A single diagnostic with a stable short code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    /// Source file the diagnostic refers to, when known.
    pub source_name: String,
    pub loc: Span,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>, source_name: &str, loc: Span) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            source_name: source_name.to_string(),
            loc,
        }
    }

    pub fn warning(code: &'static str, message: impl Into<String>, source_name: &str, loc: Span) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
            source_name: source_name.to_string(),
            loc,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] {}:{}: {}", self.code, self.source_name, self.loc, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Stable ordering for reporting: by file, position, then code.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (&a.source_name, a.loc.line, a.loc.col, a.code)
            .cmp(&(&b.source_name, b.loc.line, b.loc.col, b.code))
    });
}

// Lexing and parsing.
pub const E_LEX: &str = "E-LEX";
pub const E_PARSE: &str = "E-PARSE";

// Corpus assembly.
pub const E_DUP_PACKAGE: &str = "E-DUP-PACKAGE";
pub const E_DUP_FUNCTION: &str = "E-DUP-FUNCTION";
pub const E_DUP_INTERFACE: &str = "E-DUP-INTERFACE";
pub const E_DUP_TYPE: &str = "E-DUP-TYPE";
pub const E_DUP_GLOBAL: &str = "E-DUP-GLOBAL";
pub const E_DUP_IMPL: &str = "E-DUP-IMPL";
pub const E_UNKNOWN_DEPENDENCY: &str = "E-UNKNOWN-DEPENDENCY";
pub const E_DEP_CYCLE: &str = "E-DEP-CYCLE";

// Name resolution.
pub const E_UNKNOWN_PACKAGE: &str = "E-UNKNOWN-PACKAGE";
pub const E_UNKNOWN_CALLEE: &str = "E-UNKNOWN-CALLEE";
pub const E_UNKNOWN_TYPE: &str = "E-UNKNOWN-TYPE";
pub const E_UNKNOWN_INTERFACE: &str = "E-UNKNOWN-INTERFACE";
pub const E_UNKNOWN_GLOBAL: &str = "E-UNKNOWN-GLOBAL";
pub const E_UNKNOWN_METHOD: &str = "E-UNKNOWN-METHOD";
pub const E_AMBIGUOUS_METHOD: &str = "E-AMBIGUOUS-METHOD";
pub const E_AMBIGUOUS_TYPE: &str = "E-AMBIGUOUS-TYPE";
pub const E_AMBIGUOUS_INTERFACE: &str = "E-AMBIGUOUS-INTERFACE";
pub const E_AMBIGUOUS_GLOBAL: &str = "E-AMBIGUOUS-GLOBAL";
pub const E_GENERIC_METHOD: &str = "E-GENERIC-METHOD";
pub const E_TYPE_ARG_ARITY: &str = "E-TYPE-ARG-ARITY";
pub const E_BOUND_UNSATISFIED: &str = "E-BOUND-UNSATISFIED";
pub const E_IMPL_COVERAGE: &str = "E-IMPL-COVERAGE";
pub const E_IMPL_SAFETY: &str = "E-IMPL-SAFETY";
pub const E_METHOD_SAFETY: &str = "E-METHOD-SAFETY";
pub const E_IMMUTABLE_GLOBAL: &str = "E-IMMUTABLE-GLOBAL";
pub const E_INDIRECT_NOT_FNPTR: &str = "E-INDIRECT-NOT-FNPTR";

// Unsafe discipline.
pub const E_UNSAFE_OP: &str = "E-UNSAFE-OP";
pub const W_REDUNDANT_UNSAFE: &str = "W-REDUNDANT-UNSAFE";
