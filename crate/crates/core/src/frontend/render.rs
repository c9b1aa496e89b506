//! Pretty-printer for parsed packages. Rendering a freshly parsed package
//! and re-parsing it reproduces the same structure, which the round-trip
//! tests rely on. Resolved corpora rewrite type names to qualified form and
//! are not renderable source.

use crate::model::{
    CalleeExpr, Origin, PackageUnit, Param, Statement, UnsafeOpKind,
};

/// Renders one package back to mini-language source.
pub fn render_package(pkg: &PackageUnit) -> String {
    let mut out = String::new();
    out.push_str(&format!("package {};\n", pkg.name));
    for dep in &pkg.dependencies {
        out.push_str(&format!("use {dep};\n"));
    }
    for t in &pkg.types {
        out.push_str(&format!("type {};\n", t.name));
    }
    for g in &pkg.globals {
        let m = if g.mutable { "mut " } else { "" };
        out.push_str(&format!("global {m}{};\n", g.name));
    }
    for it in &pkg.interfaces {
        let u = if it.declared_unsafe { "unsafe " } else { "" };
        out.push_str(&format!("{u}interface {} {{\n", it.name));
        for m in &it.methods {
            let mu = if m.declared_unsafe { "unsafe " } else { "" };
            out.push_str(&format!("    {mu}fn {}({});\n", m.name, render_params(&m.params)));
        }
        out.push_str("}\n");
    }

    // Impl methods are stored in the package function list; remember which
    // ids they are so free functions are not printed twice.
    let mut method_ids = Vec::new();
    for im in &pkg.impls {
        let u = if im.declared_unsafe { "unsafe " } else { "" };
        out.push_str(&format!("{u}impl {} for {} {{\n", im.interface, im.self_type));
        for id in &im.methods {
            method_ids.push(id.clone());
            let f = pkg
                .functions
                .iter()
                .find(|f| &f.id == id)
                .expect("impl method id refers to a package function");
            let fu = if f.declared_unsafe { "unsafe " } else { "" };
            let name = f.id.as_str().rsplit("::").next().unwrap();
            out.push_str(&format!("    {fu}fn {name}({})", render_params(&f.params)));
            render_block(&mut out, &f.body, 1);
        }
        out.push_str("}\n");
    }

    for f in &pkg.functions {
        if method_ids.contains(&f.id) {
            continue;
        }
        let name = f.id.as_str().rsplit("::").next().unwrap();
        match &f.origin {
            Origin::External { abi } => {
                out.push_str(&format!("extern \"{abi}\" fn {name}({});\n", render_params(&f.params)));
            }
            Origin::Native => {
                let u = if f.declared_unsafe { "unsafe " } else { "" };
                let generics = if f.generics.is_empty() {
                    String::new()
                } else {
                    let parts: Vec<String> = f
                        .generics
                        .iter()
                        .map(|g| match &g.bound {
                            Some(b) => format!("{}: {b}", g.name),
                            None => g.name.clone(),
                        })
                        .collect();
                    format!("<{}>", parts.join(", "))
                };
                out.push_str(&format!("{u}fn {name}{generics}({})", render_params(&f.params)));
                render_block(&mut out, &f.body, 0);
            }
            Origin::AbstractInterfaceMethod => {}
        }
    }
    out
}

fn render_params(params: &[Param]) -> String {
    let parts: Vec<String> = params
        .iter()
        .map(|p| {
            if p.name == "self" {
                "self".to_string()
            } else {
                format!("{}: {}", p.name, p.ty)
            }
        })
        .collect();
    parts.join(", ")
}

fn render_block(out: &mut String, body: &[Statement], depth: usize) {
    out.push_str(" {\n");
    for stmt in body {
        render_statement(out, stmt, depth + 1);
    }
    out.push_str(&"    ".repeat(depth));
    out.push_str("}\n");
}

fn render_statement(out: &mut String, stmt: &Statement, depth: usize) {
    let pad = "    ".repeat(depth);
    match stmt {
        Statement::LocalDecl { name, ty, .. } => {
            out.push_str(&format!("{pad}let {name}: {ty};\n"));
        }
        Statement::UnsafeBlock { body, .. } => {
            out.push_str(&format!("{pad}unsafe"));
            out.push_str(" {\n");
            for s in body {
                render_statement(out, s, depth + 1);
            }
            out.push_str(&format!("{pad}}}\n"));
        }
        Statement::Primitive { kind, global, write, .. } => {
            let text = match (kind, write) {
                (UnsafeOpKind::RawDeref, _) => "@deref_ptr".to_string(),
                (UnsafeOpKind::InlineAsm, _) => "@asm".to_string(),
                (UnsafeOpKind::UnionField, _) => "@union_field".to_string(),
                (UnsafeOpKind::GlobalAccess, false) => {
                    format!("@read_global {}", global.as_deref().unwrap_or("?"))
                }
                (UnsafeOpKind::GlobalAccess, true) => {
                    format!("@write_global {}", global.as_deref().unwrap_or("?"))
                }
                (UnsafeOpKind::UnsafeCall, _) => "@asm".to_string(), // not producible by the parser
            };
            out.push_str(&format!("{pad}{text};\n"));
        }
        Statement::Call(call) => {
            let targs = if call.type_args.is_empty() {
                String::new()
            } else {
                let parts: Vec<String> = call.type_args.iter().map(|t| t.to_string()).collect();
                format!("::<{}>", parts.join(", "))
            };
            let args = call.args.join(", ");
            match &call.callee {
                CalleeExpr::Path(segs) => {
                    out.push_str(&format!("{pad}{}{targs}({args});\n", segs.join("::")));
                }
                CalleeExpr::Method { receiver, method } => {
                    out.push_str(&format!("{pad}{receiver}.{method}({args});\n"));
                }
                CalleeExpr::Indirect { var } => {
                    out.push_str(&format!("{pad}indirect {var};\n"));
                }
            }
        }
    }
}
