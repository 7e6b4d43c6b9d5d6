//! Exhaustive search over small diagrams with labels in `mu_N`.

use rustc_hash::FxHashSet;
use serde::Serialize;

use super::{Catalog, CatalogError, Table};
use crate::criteria::necessary_conditions;
use crate::diagram::{is_connected_subset, CanonicalDiagram, DiagramJson, DynkinDiagram};
use crate::exec::Execution;
use crate::groupoid::{explore, Caps, Verdict};
use crate::scalar::{Scalar, TorsionConfig};

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub dim: usize,
    pub n: u32,
    /// Labeled diagrams enumerated at rank `dim`.
    pub labeled: u64,
    /// Connected diagrams up to isomorphism.
    pub classes: usize,
    /// Classes discarded because a connected restriction is not finite.
    pub pruned: usize,
    pub explored: usize,
    pub survivors: usize,
    pub not_full: usize,
    /// Classes whose exploration hit a cap; they are counted as infinite.
    pub cap_exceeded: usize,
    /// Table compared against, if any covers this rank.
    pub table: Option<Table>,
    /// Distinct table diagrams with all labels in `mu_N`.
    pub table_classes: usize,
    pub matched: usize,
    pub predicate_checks: usize,
    pub discrepancies: Vec<String>,
    pub survivor_diagrams: Vec<DiagramJson>,
    #[serde(skip)]
    pub survivor_classes: Vec<CanonicalDiagram>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

fn labels(torsion: TorsionConfig, n: u32) -> Vec<Scalar> {
    let step = (torsion.order() / n) as i64;
    (0..n as i64).map(|t| torsion.scalar(0, t * step)).collect()
}

/// Connected labeled diagrams of rank `k` up to isomorphism.
fn connected_classes(torsion: TorsionConfig, k: usize, n: u32, exec: Execution) -> (u64, Vec<CanonicalDiagram>) {
    let mu = labels(torsion, n);
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let total = ((n - 1) as u64).pow(k as u32) * (n as u64).pow(pairs.len() as u32);
    let chunks = 256u64.min(total).max(1);
    let ranges: Vec<(u64, u64)> = (0..chunks).map(|c| (c * total / chunks, (c + 1) * total / chunks)).collect();
    let parts = exec.map(&ranges, |&(lo, hi)| {
        let mut seen: FxHashSet<CanonicalDiagram> = FxHashSet::default();
        let mut vertices = vec![mu[0]; k];
        let mut edges = Vec::with_capacity(pairs.len());
        for mut code in lo..hi {
            for v in vertices.iter_mut() {
                *v = mu[1 + (code % (n as u64 - 1)) as usize];
                code /= n as u64 - 1;
            }
            edges.clear();
            let mut adj = vec![0u32; k];
            for &(a, b) in &pairs {
                let t = (code % n as u64) as usize;
                code /= n as u64;
                if t != 0 {
                    edges.push((a, b, mu[t]));
                    adj[a] |= 1 << b;
                    adj[b] |= 1 << a;
                }
            }
            let mut reach = 1u32;
            loop {
                let next = reach | (0..k).filter(|&i| reach >> i & 1 == 1).fold(0, |acc, i| acc | adj[i]);
                if next == reach {
                    break;
                }
                reach = next;
            }
            if reach.count_ones() as usize != k {
                continue;
            }
            let g = DynkinDiagram::new(torsion, vertices.clone(), &edges).expect("valid labels");
            seen.insert(g.canonical());
        }
        seen
    });
    let mut all: FxHashSet<CanonicalDiagram> = FxHashSet::default();
    for p in parts {
        all.extend(p);
    }
    let mut classes: Vec<CanonicalDiagram> = all.into_iter().collect();
    classes.sort();
    (total, classes)
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect()).collect()
}

/// Every connected diagram of rank `d` with labels in `mu_N`, explored,
/// and compared with the table covering rank `d`.
///
/// Classes are pruned before exploration when a connected induced
/// subdiagram of rank `d - 1` did not survive the previous level: a
/// restriction of a finite root system is finite.
pub fn exhaustive_sweep(catalog: &Catalog, d: usize, n: u32, caps: Caps, exec: Execution) -> Result<SweepReport, CatalogError> {
    let torsion = catalog.torsion();
    if n < 2 || !torsion.contains_roots_of_order(n) {
        return Err(CatalogError::Expr(format!("N = {n} must be at least 2 and divide the torsion order {}", torsion.order())));
    }
    if !(1..=8).contains(&d) {
        return Err(CatalogError::Expr(format!("rank {d} is outside 1..=8")));
    }
    let mut survivors: FxHashSet<CanonicalDiagram> = FxHashSet::default();
    let mut report = SweepReport {
        dim: d,
        n,
        labeled: 0,
        classes: 0,
        pruned: 0,
        explored: 0,
        survivors: 0,
        not_full: 0,
        cap_exceeded: 0,
        table: None,
        table_classes: 0,
        matched: 0,
        predicate_checks: 0,
        discrepancies: Vec::new(),
        survivor_diagrams: Vec::new(),
        survivor_classes: Vec::new(),
    };
    for k in 1..=d {
        let (labeled, classes) = connected_classes(torsion, k, n, exec);
        let subs = subsets_of_size(k, k.saturating_sub(1));
        let candidates: Vec<CanonicalDiagram> = if k == 1 {
            classes.clone()
        } else {
            classes
                .iter()
                .filter(|c| {
                    let g = c.to_dynkin();
                    subs.iter().filter(|s| is_connected_subset(&g, s)).all(|s| survivors.contains(&g.induced(s).canonical()))
                })
                .cloned()
                .collect()
        };
        let verdicts = exec.map(&candidates, |c| explore(&c.to_dynkin().to_bicharacter(), caps).verdict().clone());
        let mut next = FxHashSet::default();
        let (mut not_full, mut capped) = (0, 0);
        for (c, v) in candidates.iter().zip(&verdicts) {
            match v {
                Verdict::FullFinite => {
                    next.insert(c.clone());
                }
                Verdict::NotFull { .. } => not_full += 1,
                Verdict::CapExceeded(_) => capped += 1,
            }
        }
        if k == d {
            report.labeled = labeled;
            report.classes = classes.len();
            report.pruned = classes.len() - candidates.len();
            report.explored = candidates.len();
            report.not_full = not_full;
            report.cap_exceeded = capped;
        }
        survivors = next;
    }
    let mut found: Vec<CanonicalDiagram> = survivors.iter().cloned().collect();
    found.sort();
    report.survivors = found.len();

    // necessary conditions must hold on every survivor
    let checks = exec.map(&found, |c| necessary_conditions(&c.to_dynkin().to_bicharacter()));
    for (c, res) in found.iter().zip(checks) {
        match res {
            Ok(reports) => {
                report.predicate_checks += reports.iter().filter(|r| r.applicable).count();
                for r in reports.iter().filter(|r| r.violated()) {
                    report.discrepancies.push(format!("survivor {} violates {}: {}", c.to_dynkin(), r.name, r.detail));
                }
            }
            Err(e) => report.discrepancies.push(format!("survivor {}: {e}", c.to_dynkin())),
        }
    }

    let table = match d {
        4 => Some(Table::Rank4),
        5.. => Some(Table::RankGe5),
        _ => None,
    };
    if let Some(table) = table {
        report.table = Some(table);
        let mut listed: FxHashSet<CanonicalDiagram> = FxHashSet::default();
        let mut origin: Vec<(CanonicalDiagram, String)> = Vec::new();
        for row in catalog.table(table) {
            if row.native_dim().is_some_and(|nd| nd != d) {
                continue;
            }
            for param in row.constraint.roots_of_unity(torsion, n) {
                let instances = match row.instances(d, param) {
                    Ok(i) => i,
                    Err(e) => {
                        report.discrepancies.push(e.to_string());
                        continue;
                    }
                };
                for inst in instances {
                    if !inst.matrix.entries().iter().all(|s| s.pow(n as i64).is_one()) {
                        continue;
                    }
                    let c = inst.matrix.to_dynkin().canonical();
                    if listed.insert(c.clone()) {
                        origin.push((c, inst.describe()));
                    }
                }
            }
        }
        report.table_classes = listed.len();
        for c in &found {
            if listed.contains(c) {
                report.matched += 1;
            } else {
                report.discrepancies.push(format!("survivor {} is in no row of the {table} table", c.to_dynkin()));
            }
        }
        origin.sort();
        for (c, desc) in origin {
            if !survivors.contains(&c) {
                report.discrepancies.push(format!("{desc} was not found by the sweep"));
            }
        }
    }
    report.survivor_diagrams = found.iter().map(|c| c.to_dynkin().to_json()).collect();
    report.survivor_classes = found;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank4_at_minus_one_is_simply_laced() {
        let r = exhaustive_sweep(Catalog::builtin(), 4, 2, Caps::default(), Execution::default()).unwrap();
        assert!(r.passed(), "{:?}", r.discrepancies);
        // A4 and D4 at q = -1
        assert_eq!(r.survivors, 2);
        for g in &r.survivor_diagrams {
            assert!(g.vertices.iter().all(|v| v == "-1"));
            assert!(g.edges.iter().all(|e| e.2 == "-1"));
        }
    }

    #[test]
    fn rank2_at_order_three() {
        let r = exhaustive_sweep(Catalog::builtin(), 2, 3, Caps::default(), Execution::Sequential).unwrap();
        assert!(r.passed(), "{:?}", r.discrepancies);
        assert_eq!(r.labeled, 4 * 3);
        assert!(r.survivors > 0);
        assert_eq!(r.table, None);
    }
}
