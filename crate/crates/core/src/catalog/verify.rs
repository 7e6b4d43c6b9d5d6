//! Machine checks of the tables and of the reflection-word certificates.

use serde::Serialize;

use super::{AppendixEntry, Catalog, Instance, Table, TableRow};
use crate::diagram::{cartan_type_name, detect_cartan_type, BicharacterMatrix};
use crate::exec::Execution;
use crate::groupoid::{apply_word, diagram_orbit, explore, induction_shape, witnesses_finiteness_induction, Caps, GroupoidResult, Verdict};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub caps: Caps,
    pub exec: Execution,
}

/// Outcome at one `(d, q, j)`: all instances are full and finite, and
/// pairwise Weyl equivalent.
#[derive(Debug, Clone, Serialize)]
pub struct RowCheck {
    pub dim: usize,
    pub param: String,
    pub j: Option<usize>,
    pub instances: usize,
    /// `explored`; at rank 7 and up `cartan` (finite Cartan type) or
    /// `certificate` (reflection word plus diagram orbit).
    pub method: &'static str,
    pub num_bases: Option<usize>,
    pub num_roots: Option<usize>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowReport {
    pub table: Table,
    pub row: u32,
    pub checks: Vec<RowCheck>,
}

impl RowReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.failures.is_empty())
    }

    pub fn failures(&self) -> impl Iterator<Item = &String> {
        self.checks.iter().flat_map(|c| c.failures.iter())
    }
}

/// From this rank on the groupoids have millions of bases. Finiteness is
/// then read off a finite Cartan type (single-diagram rows) or the row's
/// reflection-word certificate, and equivalence off the diagram orbit.
const LARGE_RANK: usize = 7;

/// Diagram orbits at large rank are tiny; this only guards against runaways.
const MAX_ORBIT_DIAGRAMS: usize = 100_000;

/// Checks a row at the given ranks and parameters; empty slices select
/// the row's defaults.
pub fn verify_row(catalog: &Catalog, row: &TableRow, dims: &[usize], params: &[Scalar], opts: VerifyOptions) -> RowReport {
    let dims = if dims.is_empty() { row.default_dims() } else { dims.to_vec() };
    let params = if params.is_empty() { row.constraint.verification_params(row.torsion()) } else { params.to_vec() };
    let mut checks = Vec::new();
    for &d in &dims {
        for &param in &params {
            let js = match row.j_values(d) {
                Ok(js) => js,
                Err(e) => {
                    checks.push(failed_check(d, param, None, e.to_string()));
                    continue;
                }
            };
            for j in js {
                checks.push(match row.instances_at(d, param, j) {
                    Ok(inst) if d >= LARGE_RANK => check_large(catalog, row, d, param, j, &inst, opts),
                    Ok(inst) => check_instances(d, param, j, &inst, opts),
                    Err(e) => failed_check(d, param, j, e.to_string()),
                });
            }
        }
    }
    RowReport { table: row.table, row: row.row, checks }
}

fn failed_check(dim: usize, param: Scalar, j: Option<usize>, failure: String) -> RowCheck {
    RowCheck { dim, param: param.to_string(), j, instances: 0, method: "explored", num_bases: None, num_roots: None, failures: vec![failure] }
}

fn finite_cartan_name(m: &BicharacterMatrix) -> Option<String> {
    detect_cartan_type(m).ok().flatten().and_then(|a| cartan_type_name(&a))
}

fn check_instances(d: usize, param: Scalar, j: Option<usize>, inst: &[Instance], opts: VerifyOptions) -> RowCheck {
    let mut check = RowCheck { dim: d, param: param.to_string(), j, instances: inst.len(), method: "explored", num_bases: None, num_roots: None, failures: Vec::new() };
    if inst.is_empty() {
        check.failures.push(format!("no instances at d={d}"));
        return check;
    }
    // only the first exploration is kept; it supplies the orbit
    let first = explore(&inst[0].matrix, opts.caps);
    let summary = |r: &GroupoidResult| (r.verdict().clone(), r.num_bases(), if r.is_full_finite() { r.num_roots() } else { 0 });
    let mut summaries = vec![summary(&first)];
    summaries.extend(opts.exec.map(&inst[1..], |i| summary(&explore(&i.matrix, opts.caps))));
    for (i, (v, _, _)) in inst.iter().zip(&summaries) {
        if *v != Verdict::FullFinite {
            check.failures.push(format!("{}: {v}", i.describe()));
        }
    }
    if !check.failures.is_empty() {
        return check;
    }
    let (_, bases0, roots0) = summaries[0];
    check.num_bases = Some(bases0);
    check.num_roots = Some(roots0);
    for (i, &(_, b, r)) in inst.iter().zip(&summaries).skip(1) {
        if (b, r) != (bases0, roots0) {
            check.failures.push(format!("{}: {b} bases and {r} roots, but {} has {bases0} and {roots0}", i.describe(), inst[0].describe()));
        }
    }
    if inst.len() > 1 && check.failures.is_empty() {
        // orbits are equal or disjoint, so membership of each diagram at E
        // in the orbit of the first instance decides equivalence
        match diagram_orbit(&inst[0].matrix, MAX_ORBIT_DIAGRAMS) {
            Ok(orbit) => {
                for i in &inst[1..] {
                    if !orbit.contains(&i.matrix.to_dynkin().canonical()) {
                        check.failures.push(format!("{} is not Weyl equivalent to {}", i.describe(), inst[0].describe()));
                    }
                }
            }
            Err(e) => check.failures.push(e.to_string()),
        }
    }
    check
}

fn check_large(catalog: &Catalog, row: &TableRow, d: usize, param: Scalar, j: Option<usize>, inst: &[Instance], opts: VerifyOptions) -> RowCheck {
    let mut check = RowCheck { dim: d, param: param.to_string(), j, instances: inst.len(), method: "cartan", num_bases: None, num_roots: None, failures: Vec::new() };
    if inst.is_empty() {
        check.failures.push(format!("no instances at d={d}"));
        return check;
    }
    if inst.len() == 1 {
        if finite_cartan_name(&inst[0].matrix).is_none() {
            check.failures.push(format!("{}: not of finite Cartan type", inst[0].describe()));
        }
        return check;
    }
    check.method = "certificate";
    let Some(entry) = catalog.appendix_for(row.table, row.row).next() else {
        check.failures.push(format!("rank {d} row without a reflection-word certificate"));
        return check;
    };
    let k = path_diagram(row, d);
    let Some(base) = inst.iter().find(|i| i.diagram == k) else {
        check.failures.push(format!("diagram {k} has no instance at d={d}"));
        return check;
    };
    let certified = entry
        .word(d)
        .map_err(|e| e.to_string())
        .and_then(|w| witnesses_finiteness_induction(&base.matrix, &w, opts.caps).map_err(|e| e.to_string()));
    match certified {
        Ok(true) => {}
        Ok(false) => check.failures.push(format!("{}: certificate word does not witness finiteness", base.describe())),
        Err(e) => check.failures.push(format!("{}: {e}", base.describe())),
    }
    match diagram_orbit(&base.matrix, MAX_ORBIT_DIAGRAMS) {
        Ok(orbit) => {
            for i in inst.iter().filter(|i| i.diagram != k) {
                if !orbit.contains(&i.matrix.to_dynkin().canonical()) {
                    check.failures.push(format!("{} is not Weyl equivalent to {}", i.describe(), base.describe()));
                }
            }
        }
        Err(e) => check.failures.push(format!("{}: {e}", base.describe())),
    }
    check
}

/// Two rows checked to be Weyl inequivalent at a common `(d, q)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossPair {
    pub left: (Table, u32),
    pub right: (Table, u32),
    pub dim: usize,
    #[serde(serialize_with = "ser_display")]
    pub param: Scalar,
}

fn ser_display<S: serde::Serializer>(s: &Scalar, ser: S) -> Result<S::Ok, S::Error> {
    ser.collect_str(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub pair: CrossPair,
    pub distinct: bool,
    pub failure: Option<String>,
}

/// `count` deterministic pairs of rows sharing a rank and an admissible
/// parameter, spread evenly over all such pairs.
pub fn cross_row_pairs(catalog: &Catalog, count: usize) -> Vec<CrossPair> {
    let t = catalog.torsion();
    let mut params = vec![t.generic()];
    if let Ok(z) = t.root_of_unity(3) {
        params.push(z);
    }
    let mut all = Vec::new();
    for (table, d) in [(Table::Rank4, 4), (Table::RankGe5, 5)] {
        for &param in &params {
            let rows: Vec<&TableRow> = catalog
                .table(table)
                .filter(|r| r.constraint.admits(param) && r.native_dim().is_none_or(|n| n == d))
                .collect();
            for (a, ra) in rows.iter().enumerate() {
                for rb in &rows[a + 1..] {
                    all.push(CrossPair { left: (table, ra.row), right: (table, rb.row), dim: d, param });
                }
            }
        }
    }
    if all.len() <= count {
        return all;
    }
    (0..count).map(|i| all[i * all.len() / count].clone()).collect()
}

pub fn verify_cross_pair(catalog: &Catalog, pair: &CrossPair) -> CrossCheck {
    let run = || -> Result<bool, String> {
        let left = catalog.row(pair.left.0, pair.left.1).map_err(|e| e.to_string())?;
        let right = catalog.row(pair.right.0, pair.right.1).map_err(|e| e.to_string())?;
        let m1 = left.instantiate(1, pair.dim, pair.param).map_err(|e| e.to_string())?;
        let m2 = right.instantiate(1, pair.dim, pair.param).map_err(|e| e.to_string())?;
        let orbit = diagram_orbit(&m1, MAX_ORBIT_DIAGRAMS).map_err(|e| e.to_string())?;
        Ok(!orbit.contains(&m2.to_dynkin().canonical()))
    };
    match run() {
        Ok(distinct) => CrossCheck {
            pair: pair.clone(),
            distinct,
            failure: (!distinct).then(|| format!("rows {} and {} are Weyl equivalent", pair.left.1, pair.right.1)),
        },
        Err(e) => CrossCheck { pair: pair.clone(), distinct: false, failure: Some(e) },
    }
}

/// One application of a certificate word.
#[derive(Debug, Clone, Serialize)]
pub struct AppendixCheck {
    pub table: Table,
    pub row: u32,
    pub label: u32,
    pub dim: usize,
    pub param: String,
    pub diagram: usize,
    pub j: Option<usize>,
    pub indices: Vec<usize>,
    pub word: String,
    pub final_basis: Option<String>,
    pub trace_compared: bool,
    pub failures: Vec<String>,
}

/// The first row diagram whose edges are exactly `{i, i+1}`.
fn path_diagram(row: &TableRow, d: usize) -> usize {
    let param = row.constraint.samples(row.torsion())[0];
    for k in 1..=row.diagrams.len() {
        if let Ok(m) = row.instantiate(k, d, param) {
            let g = m.to_dynkin();
            let is_path = (0..d).all(|a| (a + 1..d).all(|b| g.has_edge(a, b) == (b == a + 1)));
            if is_path {
                return k;
            }
        }
    }
    1
}

/// Applies the entry's word to the first path diagram of each of its rows,
/// at every sampled parameter and stated rank and index set.
pub fn verify_appendix(catalog: &Catalog, entry: &AppendixEntry, opts: VerifyOptions) -> Vec<AppendixCheck> {
    let mut out = Vec::new();
    for &r in &entry.rows {
        let row = match catalog.row(entry.table, r) {
            Ok(row) => row,
            Err(e) => {
                out.push(blank(entry, r, 0, String::new(), 0, Some(e.to_string())));
                continue;
            }
        };
        let dims = if entry.dims.is_empty() { row.default_dims() } else { entry.dims.clone() };
        for d in dims {
            let k = path_diagram(row, d);
            let template = &row.diagrams[k - 1];
            let sets = match entry.index_sets(template, d) {
                Ok(s) if !s.is_empty() => s,
                Ok(_) => {
                    out.push(blank(entry, r, d, String::new(), k, Some(format!("no index set of diagram {k} matches at d={d}"))));
                    continue;
                }
                Err(e) => {
                    out.push(blank(entry, r, d, String::new(), k, Some(e.to_string())));
                    continue;
                }
            };
            for param in row.constraint.samples(row.torsion()) {
                for (j, indices) in &sets {
                    out.push(check_word(entry, row, d, k, param, *j, indices, opts));
                }
            }
        }
    }
    out
}

fn blank(entry: &AppendixEntry, row: u32, dim: usize, param: String, diagram: usize, failure: Option<String>) -> AppendixCheck {
    AppendixCheck {
        table: entry.table,
        row,
        label: entry.label(),
        dim,
        param,
        diagram,
        j: None,
        indices: Vec::new(),
        word: String::new(),
        final_basis: None,
        trace_compared: false,
        failures: failure.into_iter().collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn check_word(entry: &AppendixEntry, row: &TableRow, d: usize, diagram: usize, param: Scalar, j: Option<usize>, indices: &[usize], opts: VerifyOptions) -> AppendixCheck {
    let mut c = blank(entry, row.row, d, param.to_string(), diagram, None);
    c.j = j;
    c.indices = indices.to_vec();
    let inst = match row.instance(diagram, d, param, j, indices) {
        Ok(i) => i,
        Err(e) => {
            c.failures.push(e.to_string());
            return c;
        }
    };
    let word = match entry.word(d) {
        Ok(w) => w,
        Err(e) => {
            c.failures.push(e.to_string());
            return c;
        }
    };
    c.word = word.to_string();
    let trace = match apply_word(&inst.matrix, &word) {
        Ok(t) => t,
        Err(e) => {
            c.failures.push(format!("{}: {e}", inst.describe()));
            return c;
        }
    };
    c.final_basis = Some(trace.last().to_compressed());
    match entry.expected_trace(d) {
        Ok(Some(expected)) => {
            c.trace_compared = true;
            if expected.len() != trace.bases.len() {
                c.failures.push(format!("printed chain has {} tuples, word visits {}", expected.len(), trace.bases.len()));
            } else if let Some(pos) = expected.iter().zip(&trace.bases).position(|(a, b)| a != b) {
                c.failures.push(format!("tuple {pos} differs: printed {}, computed {}", expected[pos].to_compressed(), trace.bases[pos].to_compressed()));
            }
        }
        Ok(None) => {}
        Err(e) => c.failures.push(e.to_string()),
    }
    if induction_shape(trace.last()).is_none() {
        c.failures.push(format!("final basis {} is not E with one vector replaced by a negative root", trace.last().to_compressed()));
    } else {
        match witnesses_finiteness_induction(&inst.matrix, &word, opts.caps) {
            Ok(true) => {}
            Ok(false) => c.failures.push("restriction to the remaining vertices is not full and finite".into()),
            Err(e) => c.failures.push(e.to_string()),
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rows_verify() {
        let cat = Catalog::builtin();
        let opts = VerifyOptions::default();
        let report = verify_row(cat, cat.row(Table::Rank4, 1).unwrap(), &[], &[], opts);
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
        assert_eq!(report.checks[0].num_roots, Some(20));
        assert_eq!(report.checks[0].num_bases, Some(120));
    }

    #[test]
    fn cross_pairs_are_deterministic() {
        let cat = Catalog::builtin();
        let a = cross_row_pairs(cat, 20);
        assert_eq!(a.len(), 20);
        assert_eq!(a, cross_row_pairs(cat, 20));
    }

    #[test]
    fn appendix_row_6() {
        let cat = Catalog::builtin();
        let entry = cat.appendix_for(Table::Rank4, 6).next().unwrap();
        let checks = verify_appendix(cat, entry, VerifyOptions::default());
        assert!(!checks.is_empty());
        for c in &checks {
            assert!(c.failures.is_empty(), "{c:?}");
            assert!(c.trace_compared);
        }
    }
}
