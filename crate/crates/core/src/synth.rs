//! Deterministic synthetic-corpus generation.
//!
//! Produces randomized but always well-formed corpora (they parse, resolve,
//! and pass the discipline check with no errors) exercising the constructs
//! the analysis cares about: unsafe blocks and functions, external
//! declarations, mutable globals, interfaces with dynamic dispatch, generic
//! functions with bounds, and indirect calls. The generator has its own
//! splitmix64 state so corpora are stable across toolchains.

/// splitmix64; good enough for corpus shapes and stable forever.
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n.max(1)
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.below(100) < percent
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            let i = self.below(items.len() as u64) as usize;
            Some(&items[i])
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum FnKind {
    Plain,
    Unsafe,
    Generic,
}

struct FnPlan {
    name: String,
    kind: FnKind,
    /// For generic functions: the index of the package whose interface
    /// bounds `T`.
    bound_iface: Option<usize>,
    dyn_param: Option<usize>,
    fnptr_param: bool,
}

struct PkgPlan {
    deps: Vec<usize>,
    has_global: bool,
    /// `Some(declared_unsafe)` when the package declares interface `I<i>`.
    interface: Option<bool>,
    /// Interfaces (by owning package index) implemented for this package's
    /// own type `T<i>`.
    impls: Vec<usize>,
    fns: Vec<FnPlan>,
    externs: Vec<(String, &'static str)>,
}

/// Everything phase two needs to emit valid call statements.
struct Catalog {
    /// (package, name) of safe callable free functions.
    safe_fns: Vec<(usize, String)>,
    /// (package, name) of declared-unsafe callables (native and extern).
    unsafe_fns: Vec<(usize, String)>,
    /// (package, fn name, bound interface package).
    generic_fns: Vec<(usize, String, usize)>,
    /// (interface package, implementing package): `I<j>` for `T<i>`.
    impl_pairs: Vec<(usize, usize)>,
}

impl Catalog {
    fn visible(caller: usize, owner: usize, pkgs: &[PkgPlan]) -> bool {
        owner == caller || pkgs[caller].deps.contains(&owner)
    }
}

/// Generates the named source files of one synthetic corpus.
pub fn generate_corpus_sources(seed: u64) -> Vec<(String, String)> {
    let mut rng = Rng::new(seed);
    let npkg = 3 + rng.below(4) as usize;
    let mut fn_budget = 50i64;

    // Phase one: plan every declaration so bodies can reference anything.
    let mut pkgs: Vec<PkgPlan> = Vec::new();
    for i in 0..npkg {
        let mut deps = Vec::new();
        for j in 0..i {
            if rng.chance(40) {
                deps.push(j);
            }
        }
        let has_global = rng.chance(50);
        let interface = if rng.chance(60) { Some(rng.chance(15)) } else { None };
        let mut impls = Vec::new();
        for j in 0..=i {
            let dep_has_iface = deps.contains(&j)
                && pkgs.get(j).map(|p: &PkgPlan| p.interface.is_some()).unwrap_or(false);
            let own_iface = j == i && interface.is_some();
            if (dep_has_iface || own_iface) && rng.chance(60) {
                impls.push(j);
            }
        }
        let mut fns = Vec::new();
        let plain = 2 + rng.below(3);
        for k in 0..plain {
            if fn_budget <= 0 {
                break;
            }
            fn_budget -= 1;
            let dyn_param = if rng.chance(35) {
                // any visible interface
                let mut cands: Vec<usize> = (0..=i)
                    .filter(|&j| {
                        (j == i && interface.is_some())
                            || (deps.contains(&j) && pkgs[j].interface.is_some())
                    })
                    .collect();
                cands.sort_unstable();
                rng.pick(&cands).copied()
            } else {
                None
            };
            let fnptr_param = rng.chance(25);
            fns.push(FnPlan {
                name: format!("f{i}_{k}"),
                kind: FnKind::Plain,
                bound_iface: None,
                dyn_param,
                fnptr_param,
            });
        }
        if rng.chance(45) && fn_budget > 0 {
            fn_budget -= 1;
            fns.push(FnPlan {
                name: format!("u{i}"),
                kind: FnKind::Unsafe,
                bound_iface: None,
                dyn_param: None,
                fnptr_param: false,
            });
        }
        // A generic function needs a visible interface to bound `T`.
        let bound_cands: Vec<usize> = (0..=i)
            .filter(|&j| {
                (j == i && interface.is_some()) || (deps.contains(&j) && pkgs[j].interface.is_some())
            })
            .collect();
        if !bound_cands.is_empty() && rng.chance(60) && fn_budget > 0 {
            fn_budget -= 1;
            let bound = *rng.pick(&bound_cands).unwrap();
            fns.push(FnPlan {
                name: format!("gen{i}"),
                kind: FnKind::Generic,
                bound_iface: Some(bound),
                dyn_param: None,
                fnptr_param: false,
            });
        }
        let mut externs = Vec::new();
        if rng.chance(40) && fn_budget > 0 {
            fn_budget -= 1;
            let abi = *rng.pick(&["C", "intrinsic", "native"]).unwrap();
            externs.push((format!("ext{i}"), abi));
        }
        pkgs.push(PkgPlan { deps, has_global, interface, impls, fns, externs });
    }

    // Impl methods count as functions too; drop impls the budget cannot fit.
    for pkg in &mut pkgs {
        let keep = pkg.impls.len().min(fn_budget.max(0) as usize);
        fn_budget -= keep as i64;
        pkg.impls.truncate(keep);
    }

    let catalog = build_catalog(&pkgs);

    // Phase two: emit source text, generating bodies against the catalog.
    let mut call_budget = 150i64;
    let mut files = Vec::new();
    for (i, pkg) in pkgs.iter().enumerate() {
        let mut src = String::new();
        src.push_str(&format!("package pkg{i};\n"));
        for d in &pkg.deps {
            src.push_str(&format!("use pkg{d};\n"));
        }
        src.push_str(&format!("type T{i};\n"));
        if pkg.has_global {
            src.push_str(&format!("global mut g{i};\n"));
        }
        if let Some(declared_unsafe) = pkg.interface {
            let u = if declared_unsafe { "unsafe " } else { "" };
            src.push_str(&format!("{u}interface I{i} {{ fn m{i}(self); }}\n"));
        }
        for &j in &pkg.impls {
            let u = if pkgs[j].interface == Some(true) { "unsafe " } else { "" };
            src.push_str(&format!("{u}impl I{j} for T{i} {{\n    fn m{j}(self)"));
            let body = gen_body(i, pkg, &pkgs, &catalog, &mut rng, &mut call_budget, 2);
            src.push_str(&body);
            src.push_str("}\n");
        }
        for (name, abi) in &pkg.externs {
            src.push_str(&format!("extern \"{abi}\" fn {name}();\n"));
        }
        for f in &pkg.fns {
            match f.kind {
                FnKind::Plain => {
                    let mut params = Vec::new();
                    if let Some(j) = f.dyn_param {
                        params.push(format!("obj: dyn I{j}"));
                    }
                    if f.fnptr_param {
                        params.push("cb: fnptr".to_string());
                    }
                    src.push_str(&format!("fn {}({})", f.name, params.join(", ")));
                    let body = gen_plain_body(
                        i,
                        f,
                        pkg,
                        &pkgs,
                        &catalog,
                        &mut rng,
                        &mut call_budget,
                    );
                    src.push_str(&body);
                }
                FnKind::Unsafe => {
                    src.push_str(&format!("unsafe fn {}()", f.name));
                    if rng.chance(50) {
                        // Vacuous: declared unsafe, fully safe body.
                        src.push_str(" {\n}\n");
                    } else {
                        src.push_str(" {\n");
                        src.push_str("    @deref_ptr;\n");
                        if pkg.has_global && rng.chance(50) {
                            src.push_str(&format!("    @write_global g{i};\n"));
                        }
                        src.push_str("}\n");
                    }
                }
                FnKind::Generic => {
                    let j = f.bound_iface.expect("generic plan has a bound");
                    src.push_str(&format!("fn {}<T: I{j}>(x: T)", f.name));
                    src.push_str(" {\n");
                    if call_budget > 0 {
                        src.push_str(&format!("    x.m{j}();\n"));
                        call_budget -= 1;
                    }
                    if call_budget > 0 && rng.chance(40) {
                        if let Some((p, name)) = pick_visible(&catalog.safe_fns, i, &pkgs, &mut rng)
                        {
                            src.push_str(&format!("    {};\n", render_call(i, p, &name)));
                            call_budget -= 1;
                        }
                    }
                    src.push_str("}\n");
                }
            }
        }
        files.push((format!("pkg{i}.ml"), src));
    }
    files
}

fn build_catalog(pkgs: &[PkgPlan]) -> Catalog {
    let mut catalog = Catalog {
        safe_fns: Vec::new(),
        unsafe_fns: Vec::new(),
        generic_fns: Vec::new(),
        impl_pairs: Vec::new(),
    };
    for (i, pkg) in pkgs.iter().enumerate() {
        for f in &pkg.fns {
            match f.kind {
                FnKind::Plain => catalog.safe_fns.push((i, f.name.clone())),
                FnKind::Unsafe => catalog.unsafe_fns.push((i, f.name.clone())),
                FnKind::Generic => {
                    catalog.generic_fns.push((i, f.name.clone(), f.bound_iface.unwrap()))
                }
            }
        }
        for (name, _) in &pkg.externs {
            catalog.unsafe_fns.push((i, name.clone()));
        }
        for &j in &pkg.impls {
            catalog.impl_pairs.push((j, i));
        }
    }
    catalog
}

fn pick_visible(
    items: &[(usize, String)],
    caller: usize,
    pkgs: &[PkgPlan],
    rng: &mut Rng,
) -> Option<(usize, String)> {
    let visible: Vec<&(usize, String)> = items
        .iter()
        .filter(|(owner, _)| Catalog::visible(caller, *owner, pkgs))
        .collect();
    rng.pick(&visible).map(|&(owner, ref name)| (*owner, name.clone()))
}

fn render_call(caller: usize, owner: usize, name: &str) -> String {
    if owner == caller {
        format!("{name}()")
    } else {
        format!("pkg{owner}::{name}()")
    }
}

/// A body for impl methods and helper calls: safe statements only.
fn gen_body(
    caller: usize,
    _pkg: &PkgPlan,
    pkgs: &[PkgPlan],
    catalog: &Catalog,
    rng: &mut Rng,
    call_budget: &mut i64,
    _indent: usize,
) -> String {
    let mut out = String::from(" {\n");
    let stmts = rng.below(3);
    for _ in 0..stmts {
        if *call_budget <= 0 {
            break;
        }
        if rng.chance(70) {
            if let Some((p, name)) = pick_visible(&catalog.safe_fns, caller, pkgs, rng) {
                out.push_str(&format!("        {};\n", render_call(caller, p, &name)));
                *call_budget -= 1;
            }
        } else if let Some((p, name)) = pick_visible(&catalog.unsafe_fns, caller, pkgs, rng) {
            out.push_str(&format!(
                "        unsafe {{\n            {};\n        }}\n",
                render_call(caller, p, &name)
            ));
            *call_budget -= 1;
        }
    }
    out.push_str("    }\n");
    out
}

fn gen_plain_body(
    caller: usize,
    plan: &FnPlan,
    pkg: &PkgPlan,
    pkgs: &[PkgPlan],
    catalog: &Catalog,
    rng: &mut Rng,
    call_budget: &mut i64,
) -> String {
    let mut out = String::from(" {\n");
    let mut locals = 0usize;
    let stmts = 2 + rng.below(4);
    for _ in 0..stmts {
        if *call_budget <= 0 {
            break;
        }
        match rng.below(12) {
            // Static call to a safe function.
            0..=3 => {
                if let Some((p, name)) = pick_visible(&catalog.safe_fns, caller, pkgs, rng) {
                    out.push_str(&format!("    {};\n", render_call(caller, p, &name)));
                    *call_budget -= 1;
                }
            }
            // Unsafe call, properly wrapped.
            4..=5 => {
                if let Some((p, name)) = pick_visible(&catalog.unsafe_fns, caller, pkgs, rng) {
                    out.push_str(&format!(
                        "    unsafe {{\n        {};\n    }}\n",
                        render_call(caller, p, &name)
                    ));
                    *call_budget -= 1;
                }
            }
            // Dynamic dispatch through the dyn parameter.
            6 => {
                if let Some(j) = plan.dyn_param {
                    out.push_str(&format!("    obj.m{j}();\n"));
                    *call_budget -= 1;
                }
            }
            // Indirect call through the function-value parameter.
            7 => {
                if plan.fnptr_param {
                    out.push_str("    indirect cb;\n");
                    *call_budget -= 1;
                }
            }
            // Generic instantiation with a bound-satisfying explicit type.
            8 => {
                let cands: Vec<(usize, String, usize)> = catalog
                    .generic_fns
                    .iter()
                    .filter(|(owner, _, _)| Catalog::visible(caller, *owner, pkgs))
                    .cloned()
                    .collect();
                if let Some((owner, name, bound)) = rng.pick(&cands).cloned() {
                    let types: Vec<usize> = catalog
                        .impl_pairs
                        .iter()
                        .filter(|(iface, ty)| {
                            *iface == bound && Catalog::visible(caller, *ty, pkgs)
                        })
                        .map(|(_, ty)| *ty)
                        .collect();
                    if let Some(&ty) = rng.pick(&types) {
                        let call = if owner == caller {
                            format!("{name}::<T{ty}>()")
                        } else {
                            format!("pkg{owner}::{name}::<T{ty}>()")
                        };
                        out.push_str(&format!("    {call};\n"));
                        *call_budget -= 1;
                    }
                }
            }
            // Unsafe block with a primitive, or an occasional redundant one.
            9 => {
                if rng.chance(12) {
                    out.push_str("    unsafe {\n    }\n");
                } else if pkg.has_global && rng.chance(40) {
                    let prim = if rng.chance(50) { "@write_global" } else { "@read_global" };
                    out.push_str(&format!("    unsafe {{\n        {prim} g{caller};\n    }}\n"));
                } else {
                    out.push_str("    unsafe {\n        @deref_ptr;\n    }\n");
                }
            }
            // Method call through a typed local.
            10 => {
                let pairs: Vec<(usize, usize)> = catalog
                    .impl_pairs
                    .iter()
                    .filter(|(iface, ty)| {
                        Catalog::visible(caller, *iface, pkgs) && Catalog::visible(caller, *ty, pkgs)
                    })
                    .copied()
                    .collect();
                if let Some(&(iface, ty)) = rng.pick(&pairs) {
                    out.push_str(&format!("    let v{locals}: T{ty};\n"));
                    out.push_str(&format!("    v{locals}.m{iface}();\n"));
                    locals += 1;
                    *call_budget -= 1;
                }
            }
            // Static method call through a type path.
            _ => {
                let pairs: Vec<(usize, usize)> = catalog
                    .impl_pairs
                    .iter()
                    .filter(|(iface, ty)| {
                        Catalog::visible(caller, *iface, pkgs) && Catalog::visible(caller, *ty, pkgs)
                    })
                    .copied()
                    .collect();
                if let Some(&(iface, ty)) = rng.pick(&pairs) {
                    let path = if rng.chance(50) {
                        format!("T{ty}::m{iface}")
                    } else {
                        format!("pkg{ty}::T{ty}::m{iface}")
                    };
                    out.push_str(&format!("    {path}();\n"));
                    *call_budget -= 1;
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
