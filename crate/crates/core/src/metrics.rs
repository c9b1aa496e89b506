//! Corpus-level metrics: abstraction prevalence, CDF series, only-safe
//! percentages, the package-vs-dependency unsafety matrix, mean dependency
//! counts, and two-snapshot diffs.
//!
//! Internal arithmetic is exact over integers; rounding to one decimal
//! (half away from zero) happens only when a value is formatted for a
//! report.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{FunctionVerdict, SafetyLabel};
use crate::frontend::ResolvedCorpus;
use crate::model::{Corpus, FunctionId, PackageUnit, Statement};

/// Percentage rounded to tenths, half away from zero. `total` must be > 0.
pub fn percent_tenths(count: u64, total: u64) -> u64 {
    rounded_tenths(count * 100, total)
}

/// `(value * 10 / total)` rounded half away from zero.
fn rounded_tenths(value: u64, total: u64) -> u64 {
    let scaled = value * 10;
    let q = scaled / total;
    let r = scaled % total;
    if r * 2 >= total {
        q + 1
    } else {
        q
    }
}

/// Renders tenths as a one-decimal string: 401 -> "40.1".
pub fn format_tenths(tenths: u64) -> String {
    format!("{}.{}", tenths / 10, tenths % 10)
}

pub fn format_percent(count: u64, total: u64) -> String {
    format_tenths(percent_tenths(count, total))
}

/// Per-package counts of the four unsafe abstractions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AbstractionCounts {
    pub blocks: u64,
    pub unsafe_fns: u64,
    pub unsafe_interfaces: u64,
    pub unsafe_impls: u64,
}

impl AbstractionCounts {
    pub fn any(&self) -> bool {
        self.blocks > 0 || self.unsafe_fns > 0 || self.unsafe_interfaces > 0 || self.unsafe_impls > 0
    }
}

/// Counts unsafe abstractions in one package. Blocks count per lexical
/// occurrence (nested blocks each count); declared-unsafe functions include
/// external declarations; generated records are skipped.
pub fn count_unsafe_abstractions(pkg: &PackageUnit) -> AbstractionCounts {
    let mut counts = AbstractionCounts::default();
    for f in &pkg.functions {
        if f.generated {
            continue;
        }
        if f.declared_unsafe && f.counts_as_function() {
            counts.unsafe_fns += 1;
        }
        counts.blocks += count_blocks(&f.body);
    }
    counts.unsafe_interfaces = pkg.interfaces.iter().filter(|i| i.declared_unsafe).count() as u64;
    counts.unsafe_impls = pkg.impls.iter().filter(|i| i.declared_unsafe).count() as u64;
    counts
}

fn count_blocks(stmts: &[Statement]) -> u64 {
    stmts
        .iter()
        .map(|s| match s {
            Statement::UnsafeBlock { body, .. } => 1 + count_blocks(body),
            _ => 0,
        })
        .sum()
}

pub fn count_corpus_abstractions(corpus: &Corpus) -> BTreeMap<String, AbstractionCounts> {
    corpus
        .packages
        .iter()
        .map(|p| (p.name.clone(), count_unsafe_abstractions(p)))
        .collect()
}

/// How many packages use each abstraction at least once. All fields are
/// package counts against `total`; an empty corpus sets the explicit flag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Prevalence {
    pub total: u64,
    pub any: u64,
    pub blocks: u64,
    pub unsafe_fns: u64,
    pub unsafe_interfaces: u64,
    pub unsafe_impls: u64,
}

impl Prevalence {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn percent(&self, count: u64) -> String {
        format_percent(count, self.total)
    }
}

pub fn abstraction_prevalence(counts: &BTreeMap<String, AbstractionCounts>) -> Prevalence {
    let mut p = Prevalence { total: counts.len() as u64, ..Prevalence::default() };
    for c in counts.values() {
        if c.any() {
            p.any += 1;
        }
        if c.blocks > 0 {
            p.blocks += 1;
        }
        if c.unsafe_fns > 0 {
            p.unsafe_fns += 1;
        }
        if c.unsafe_interfaces > 0 {
            p.unsafe_interfaces += 1;
        }
        if c.unsafe_impls > 0 {
            p.unsafe_impls += 1;
        }
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CdfPoint {
    pub value: u64,
    /// Packages whose count is <= `value`.
    pub covered: u64,
}

/// Cumulative distribution of a per-package count, truncated at the first
/// point whose cumulative fraction exceeds the cap percentile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdfSeries {
    pub points: Vec<CdfPoint>,
    pub total: u64,
    /// Cap percentile in tenths (1000 = 100.0%).
    pub cap_tenths: u64,
}

impl CdfSeries {
    pub fn cumulative_percent(&self, point: &CdfPoint) -> String {
        format_percent(point.covered, self.total)
    }
}

pub fn cdf_series(counts: &[u64], cap_tenths: u64) -> CdfSeries {
    let total = counts.len() as u64;
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let mut points: Vec<CdfPoint> = Vec::new();
    let mut covered = 0u64;
    let mut i = 0usize;
    while i < sorted.len() {
        let value = sorted[i];
        while i < sorted.len() && sorted[i] == value {
            covered += 1;
            i += 1;
        }
        // covered/total * 100 > cap  <=>  covered * 1000 > cap_tenths * total
        if covered * 1000 > cap_tenths * total {
            break;
        }
        points.push(CdfPoint { value, covered });
    }
    CdfSeries { points, total, cap_tenths }
}

/// Packages in which every reported function is safe under one mode.
/// Returns `(only_safe, total_packages)`, or `None` for an empty corpus.
pub fn only_safe_percentage(
    rc: &ResolvedCorpus,
    verdicts: &BTreeMap<FunctionId, FunctionVerdict>,
) -> Option<(u64, u64)> {
    let packages = rc.packages();
    if packages.is_empty() {
        return None;
    }
    let only_safe = packages
        .iter()
        .filter(|pkg| {
            pkg.functions
                .iter()
                .filter(|f| f.counts_as_function())
                .all(|f| match verdicts.get(&f.id) {
                    Some(v) => v.label == SafetyLabel::Safe,
                    None => true,
                })
        })
        .count() as u64;
    Some((only_safe, packages.len() as u64))
}

/// The 2x2 partition of packages by (own unsafe) x (any transitive
/// dependency unsafe).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DependencyMatrix {
    pub own_and_deps: u64,
    pub own_no_deps: u64,
    pub deps_no_own: u64,
    pub neither: u64,
    pub total: u64,
}

pub fn dependency_unsafety_matrix(
    corpus: &Corpus,
    own_unsafe: &BTreeMap<String, bool>,
) -> DependencyMatrix {
    let mut matrix = DependencyMatrix { total: corpus.packages.len() as u64, ..Default::default() };
    let mut closure_cache: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for pkg in &corpus.packages {
        let own = own_unsafe.get(&pkg.name).copied().unwrap_or(false);
        let closure = transitive_deps(corpus, &pkg.name, &mut closure_cache);
        let deps = closure.iter().any(|d| own_unsafe.get(d).copied().unwrap_or(false));
        match (own, deps) {
            (true, true) => matrix.own_and_deps += 1,
            (true, false) => matrix.own_no_deps += 1,
            (false, true) => matrix.deps_no_own += 1,
            (false, false) => matrix.neither += 1,
        }
    }
    matrix
}

/// The transitive dependency closure of a package (the package itself
/// excluded). The dependency relation is acyclic by corpus invariant.
pub fn transitive_deps(
    corpus: &Corpus,
    name: &str,
    cache: &mut BTreeMap<String, BTreeSet<String>>,
) -> BTreeSet<String> {
    if let Some(hit) = cache.get(name) {
        return hit.clone();
    }
    let mut out = BTreeSet::new();
    if let Some(pkg) = corpus.package(name) {
        for dep in &pkg.dependencies {
            out.insert(dep.clone());
            out.extend(transitive_deps(corpus, dep, cache));
        }
    }
    cache.insert(name.to_string(), out.clone());
    out
}

/// Exact mean of direct-dependency counts as `(sum, package_count)`;
/// `None` for an empty corpus. Report emission rounds to one decimal.
pub fn mean_direct_dependencies(corpus: &Corpus) -> Option<(u64, u64)> {
    if corpus.packages.is_empty() {
        return None;
    }
    let sum = corpus.packages.iter().map(|p| p.dependencies.len() as u64).sum();
    Some((sum, corpus.packages.len() as u64))
}

pub fn format_mean_tenths(sum: u64, n: u64) -> String {
    format_tenths(rounded_tenths(sum, n))
}

/// One row of the per-package metrics report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackageMetrics {
    pub name: String,
    pub counts: AbstractionCounts,
    pub fns_total: u64,
    pub fns_possibly_unsafe_conservative: u64,
    pub fns_possibly_unsafe_optimistic: u64,
    pub direct_deps: u64,
}

pub fn package_metrics(
    rc: &ResolvedCorpus,
    conservative: &BTreeMap<FunctionId, FunctionVerdict>,
    optimistic: &BTreeMap<FunctionId, FunctionVerdict>,
) -> Vec<PackageMetrics> {
    rc.packages()
        .iter()
        .map(|pkg| {
            let count_pu = |verdicts: &BTreeMap<FunctionId, FunctionVerdict>| {
                pkg.functions
                    .iter()
                    .filter(|f| f.counts_as_function())
                    .filter(|f| {
                        verdicts
                            .get(&f.id)
                            .map(|v| v.label == SafetyLabel::PossiblyUnsafe)
                            .unwrap_or(false)
                    })
                    .count() as u64
            };
            PackageMetrics {
                name: pkg.name.clone(),
                counts: count_unsafe_abstractions(pkg),
                fns_total: pkg.functions.iter().filter(|f| f.counts_as_function()).count() as u64,
                fns_possibly_unsafe_conservative: count_pu(conservative),
                fns_possibly_unsafe_optimistic: count_pu(optimistic),
                direct_deps: pkg.dependencies.len() as u64,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffClass {
    Same,
    Increase,
    Decrease,
}

impl DiffClass {
    pub fn label(self) -> &'static str {
        match self {
            DiffClass::Same => "same",
            DiffClass::Increase => "increase",
            DiffClass::Decrease => "decrease",
        }
    }

    fn of(old: u64, new: u64) -> DiffClass {
        match new.cmp(&old) {
            std::cmp::Ordering::Equal => DiffClass::Same,
            std::cmp::Ordering::Greater => DiffClass::Increase,
            std::cmp::Ordering::Less => DiffClass::Decrease,
        }
    }
}

/// Per-package change between two snapshots, for unsafe blocks and
/// declared-unsafe functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffRecord {
    pub package: String,
    pub blocks_old: u64,
    pub blocks_new: u64,
    pub blocks_class: DiffClass,
    pub unsafe_fns_old: u64,
    pub unsafe_fns_new: u64,
    pub unsafe_fns_class: DiffClass,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SnapshotDiff {
    /// Matched packages, sorted by name.
    pub records: Vec<DiffRecord>,
    /// Packages only present in the old snapshot.
    pub unmatched_old: Vec<String>,
    /// Packages only present in the new snapshot.
    pub unmatched_new: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DiffSummary {
    pub same: u64,
    pub increase: u64,
    pub decrease: u64,
    pub matched: u64,
}

impl SnapshotDiff {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn blocks_summary(&self) -> DiffSummary {
        self.summarize(|r| r.blocks_class)
    }

    pub fn unsafe_fns_summary(&self) -> DiffSummary {
        self.summarize(|r| r.unsafe_fns_class)
    }

    fn summarize(&self, class: impl Fn(&DiffRecord) -> DiffClass) -> DiffSummary {
        let mut s = DiffSummary { matched: self.records.len() as u64, ..Default::default() };
        for r in &self.records {
            match class(r) {
                DiffClass::Same => s.same += 1,
                DiffClass::Increase => s.increase += 1,
                DiffClass::Decrease => s.decrease += 1,
            }
        }
        s
    }
}

/// Diffs two snapshots' abstraction counts. Packages are matched by name;
/// unmatched packages are excluded from the summary and reported.
pub fn snapshot_diff(
    old: &BTreeMap<String, AbstractionCounts>,
    new: &BTreeMap<String, AbstractionCounts>,
) -> SnapshotDiff {
    let mut diff = SnapshotDiff::default();
    for (name, o) in old {
        match new.get(name) {
            None => diff.unmatched_old.push(name.clone()),
            Some(n) => diff.records.push(DiffRecord {
                package: name.clone(),
                blocks_old: o.blocks,
                blocks_new: n.blocks,
                blocks_class: DiffClass::of(o.blocks, n.blocks),
                unsafe_fns_old: o.unsafe_fns,
                unsafe_fns_new: n.unsafe_fns,
                unsafe_fns_class: DiffClass::of(o.unsafe_fns, n.unsafe_fns),
            }),
        }
    }
    for name in new.keys() {
        if !old.contains_key(name) {
            diff.unmatched_new.push(name.clone());
        }
    }
    diff
}
