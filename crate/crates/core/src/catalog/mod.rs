//! The rank 4 and rank >= 5 classification tables, and the reflection
//! words certifying finiteness of their rows.
//!
//! Table data lives in `data/` and is embedded at build time. A row is a
//! list of diagram templates in the symbol `q`; rank >= 5 rows are families
//! built from a simple chain plus up to two tail vertices.

mod expr;
mod sweep;
mod verify;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::diagram::{build_simple_chain, parse_diagram_file, BicharacterMatrix, DiagramError, DiagramFile, DynkinDiagram, Generator, SimpleChainSpec};
use crate::groupoid::{Basis, GroupoidError, ReflectionWord};
use crate::scalar::{parse_scalar, Scalar, TorsionConfig};

pub use sweep::{exhaustive_sweep, SweepReport};
pub use verify::{cross_row_pairs, verify_appendix, verify_cross_pair, verify_row, AppendixCheck, CrossCheck, CrossPair, RowCheck, RowReport, VerifyOptions};

include!(concat!(env!("OUT_DIR"), "/catalog_files.rs"));

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("{file}:{line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("missing data file `{0}`")]
    Missing(String),
    #[error("no row {row} in the {table} table")]
    UnknownRow { table: Table, row: u32 },
    #[error("{table} row {row}: parameter {param} violates {constraint}")]
    Constraint { table: Table, row: u32, constraint: String, param: String },
    #[error("{table} row {row}: {message}")]
    Instance { table: Table, row: u32, message: String },
    #[error("bad expression: {0}")]
    Expr(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    Rank4,
    RankGe5,
}

impl Table {
    pub fn key(self) -> &'static str {
        match self {
            Table::Rank4 => "rank4",
            Table::RankGe5 => "rank_ge5",
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Table {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rank4" | "4" => Ok(Table::Rank4),
            "rank_ge5" | "ge5" | "5" => Ok(Table::RankGe5),
            _ => Err(format!("unknown table `{s}` (expected rank4 or rank_ge5)")),
        }
    }
}

/// Admissible values of the row parameter `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `q^k != 1` for each listed `k`.
    NotRoots(Vec<u32>),
    /// `q` is a primitive `n`-th root of unity.
    Primitive(u32),
}

impl Constraint {
    fn parse(text: &str) -> Result<Constraint, String> {
        if let Some(rest) = text.strip_prefix("ne:") {
            let ks = rest.split(',').map(|k| k.parse::<u32>().map_err(|_| format!("bad exponent `{k}`"))).collect::<Result<Vec<_>, _>>()?;
            if ks.contains(&0) {
                return Err("exponent 0".into());
            }
            Ok(Constraint::NotRoots(ks))
        } else if let Some(n) = text.strip_prefix("R:") {
            let n: u32 = n.parse().map_err(|_| format!("bad order `{n}`"))?;
            if n < 2 {
                return Err("order must be at least 2".into());
            }
            Ok(Constraint::Primitive(n))
        } else {
            Err(format!("bad constraint `{text}`"))
        }
    }

    pub fn admits(&self, q: Scalar) -> bool {
        match self {
            Constraint::NotRoots(ks) => ks.iter().all(|&k| !q.pow(k as i64).is_one()),
            Constraint::Primitive(n) => q.is_primitive_root(*n),
        }
    }

    /// Parameters the tables are checked at: generic `q` and a primitive
    /// 7th root for inequality constraints, every primitive root otherwise.
    pub fn samples(&self, torsion: TorsionConfig) -> Vec<Scalar> {
        match self {
            Constraint::NotRoots(_) => {
                let mut out = vec![torsion.generic()];
                let order = std::iter::once(7).chain(5..64).find(|&m| torsion.contains_roots_of_order(m) && torsion.root_of_unity(m).is_ok_and(|z| self.admits(z)));
                if let Some(m) = order {
                    out.push(torsion.root_of_unity(m).expect("order divides torsion"));
                }
                out
            }
            Constraint::Primitive(n) => self.roots_of_unity(torsion, *n),
        }
    }

    /// Generic `q` when admissible, plus one admissible root of unity.
    pub fn verification_params(&self, torsion: TorsionConfig) -> Vec<Scalar> {
        let s = self.samples(torsion);
        let keep = if matches!(self, Constraint::NotRoots(_)) { 2 } else { 1 };
        s.into_iter().take(keep).collect()
    }

    /// Admissible `q` with `q^n = 1`, ordered by exponent.
    pub fn roots_of_unity(&self, torsion: TorsionConfig, n: u32) -> Vec<Scalar> {
        torsion.roots_of_unity(n).unwrap_or_default().into_iter().filter(|&z| self.admits(z)).collect()
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::NotRoots(ks) => {
                let ks: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
                write!(f, "ne:{}", ks.join(","))
            }
            Constraint::Primitive(n) => write!(f, "R:{n}"),
        }
    }
}

/// A vertex of a family: the last chain vertex or a tail vertex (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Chain,
    Tail(usize),
}

/// A simple chain `C(len, p; S)` with `|S| = count`, plus tail vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub jrange: Option<(String, String)>,
    pub chain_len: String,
    pub chain_param: Scalar,
    pub count: String,
    pub tails: Vec<Scalar>,
    pub edges: Vec<(Node, Node, Scalar)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Template {
    Fixed(DiagramFile),
    Family(Family),
}

fn eval(expr: &str, d: usize, j: Option<usize>) -> Result<i64, CatalogError> {
    expr::eval(expr, d as i64, j.map(|j| j as i64)).map_err(|m| CatalogError::Expr(format!("{expr}: {m}")))
}

fn eval_usize(expr: &str, d: usize, j: Option<usize>) -> Result<usize, CatalogError> {
    let v = eval(expr, d, j)?;
    usize::try_from(v).map_err(|_| CatalogError::Expr(format!("{expr} evaluates to {v}")))
}

/// All increasing `k`-subsets of `1..=n`.
fn index_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            if n - i + 1 < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(1, n, k, &mut Vec::new(), &mut out);
    }
    out
}

impl Template {
    pub fn native_dim(&self) -> Option<usize> {
        match self {
            Template::Fixed(file) => Some(file.template.dim()),
            Template::Family(_) => None,
        }
    }

    /// Values of `j` at rank `d`; `[None]` when the template has no `j`.
    pub fn j_values(&self, d: usize) -> Result<Vec<Option<usize>>, CatalogError> {
        match self {
            Template::Family(Family { jrange: Some((lo, hi)), .. }) => {
                let (lo, hi) = (eval_usize(lo, d, None)?, eval_usize(hi, d, None)?);
                Ok((lo..=hi).map(Some).collect())
            }
            _ => Ok(vec![None]),
        }
    }

    /// Chain index sets `S` at `(d, j)`.
    pub fn index_sets(&self, d: usize, j: Option<usize>) -> Result<Vec<Vec<usize>>, CatalogError> {
        match self {
            Template::Fixed(_) => Ok(vec![Vec::new()]),
            Template::Family(fam) => {
                let len = eval_usize(&fam.chain_len, d, j)?;
                let count = eval_usize(&fam.count, d, j)?;
                Ok(index_subsets(len, count))
            }
        }
    }

    /// The bicharacter at rank `d` with `q` replaced by `param`.
    pub fn build(&self, d: usize, j: Option<usize>, indices: &[usize], param: Scalar) -> Result<BicharacterMatrix, CatalogError> {
        match self {
            Template::Fixed(file) => {
                if file.template.dim() != d {
                    return Err(CatalogError::Expr(format!("fixed diagram has rank {}, not {d}", file.template.dim())));
                }
                Ok(file.template.to_bicharacter().substitute(param)?)
            }
            Template::Family(fam) => {
                let len = eval_usize(&fam.chain_len, d, j)?;
                let count = eval_usize(&fam.count, d, j)?;
                if len + fam.tails.len() != d || len == 0 {
                    return Err(CatalogError::Expr(format!("chain of length {len} with {} tails is not rank {d}", fam.tails.len())));
                }
                if indices.len() != count {
                    return Err(CatalogError::Expr(format!("index set has {} elements, expected {count}", indices.len())));
                }
                let q = fam.chain_param.substitute(param).map_err(DiagramError::from)?;
                let chain = build_simple_chain(&SimpleChainSpec { d: len, q, indices: indices.to_vec() })?;
                let torsion = param.torsion();
                let mut vertices = chain.vertices().to_vec();
                for t in &fam.tails {
                    vertices.push(t.substitute(param).map_err(DiagramError::from)?);
                }
                let mut edges: Vec<(usize, usize, Scalar)> = (1..len).map(|i| (i - 1, i, chain.edge(i - 1, i))).collect();
                let node = |n: Node| match n {
                    Node::Chain => len - 1,
                    Node::Tail(k) => len + k - 1,
                };
                for &(a, b, s) in &fam.edges {
                    edges.push((node(a), node(b), s.substitute(param).map_err(DiagramError::from)?));
                }
                Ok(DynkinDiagram::new(torsion, vertices, &edges)?.to_bicharacter())
            }
        }
    }
}

/// One row of a classification table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub table: Table,
    pub row: u32,
    pub constraint: Constraint,
    pub diagrams: Vec<Template>,
    pub files: Vec<String>,
}

/// A row diagram at concrete `(d, q, j, S)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub table: Table,
    pub row: u32,
    /// 1-based position of the diagram in its row.
    pub diagram: usize,
    pub dim: usize,
    pub param: Scalar,
    pub j: Option<usize>,
    pub indices: Vec<usize>,
    pub matrix: BicharacterMatrix,
}

impl Instance {
    pub fn describe(&self) -> String {
        let mut s = format!("{} row {} diagram {} (d={}, q={}", self.table, self.row, self.diagram, self.dim, self.param);
        if let Some(j) = self.j {
            s.push_str(&format!(", j={j}"));
        }
        if !self.indices.is_empty() {
            let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
            s.push_str(&format!(", S={{{}}}", idx.join(",")));
        }
        s.push(')');
        s
    }
}

impl TableRow {
    pub fn is_family(&self) -> bool {
        matches!(self.diagrams[0], Template::Family(_))
    }

    pub fn native_dim(&self) -> Option<usize> {
        self.diagrams[0].native_dim()
    }

    pub fn torsion(&self) -> TorsionConfig {
        match &self.diagrams[0] {
            Template::Fixed(f) => f.template.torsion(),
            Template::Family(f) => f.chain_param.torsion(),
        }
    }

    /// Ranks checked by default: the native rank, or 5 and 6 for families.
    pub fn default_dims(&self) -> Vec<usize> {
        match self.native_dim() {
            Some(d) => vec![d],
            None => vec![5, 6],
        }
    }

    pub fn j_values(&self, d: usize) -> Result<Vec<Option<usize>>, CatalogError> {
        self.diagrams[0].j_values(d)
    }

    fn check_param(&self, param: Scalar) -> Result<(), CatalogError> {
        if self.constraint.admits(param) {
            Ok(())
        } else {
            Err(CatalogError::Constraint { table: self.table, row: self.row, constraint: self.constraint.to_string(), param: param.to_string() })
        }
    }

    /// One instance with explicit `j` and index set.
    pub fn instance(&self, diagram: usize, d: usize, param: Scalar, j: Option<usize>, indices: &[usize]) -> Result<Instance, CatalogError> {
        self.check_param(param)?;
        let template = self.diagrams.get(diagram.wrapping_sub(1)).ok_or_else(|| CatalogError::Instance {
            table: self.table,
            row: self.row,
            message: format!("no diagram {diagram} (row has {})", self.diagrams.len()),
        })?;
        let wrap = |e: CatalogError| CatalogError::Instance { table: self.table, row: self.row, message: e.to_string() };
        let matrix = template.build(d, j, indices, param).map_err(wrap)?;
        matrix.check_vertices().map_err(|e| wrap(e.into()))?;
        Ok(Instance { table: self.table, row: self.row, diagram, dim: d, param, j, indices: indices.to_vec(), matrix })
    }

    /// Every diagram of the row at `(d, j)`, over all index sets.
    pub fn instances_at(&self, d: usize, param: Scalar, j: Option<usize>) -> Result<Vec<Instance>, CatalogError> {
        let mut out = Vec::new();
        for (k, template) in self.diagrams.iter().enumerate() {
            let wrap = |e: CatalogError| CatalogError::Instance { table: self.table, row: self.row, message: e.to_string() };
            for indices in template.index_sets(d, j).map_err(wrap)? {
                out.push(self.instance(k + 1, d, param, j, &indices)?);
            }
        }
        Ok(out)
    }

    /// Every instance at rank `d` over all `j`.
    pub fn instances(&self, d: usize, param: Scalar) -> Result<Vec<Instance>, CatalogError> {
        let mut out = Vec::new();
        for j in self.j_values(d)? {
            out.extend(self.instances_at(d, param, j)?);
        }
        Ok(out)
    }

    /// The first instance of diagram `diagram` (1-based) at rank `d`.
    pub fn instantiate(&self, diagram: usize, d: usize, param: Scalar) -> Result<BicharacterMatrix, CatalogError> {
        let template = self.diagrams.get(diagram.wrapping_sub(1)).ok_or(CatalogError::UnknownRow { table: self.table, row: self.row })?;
        let j = template.j_values(d)?[0];
        let indices = template.index_sets(d, j)?.into_iter().next().ok_or_else(|| CatalogError::Instance {
            table: self.table,
            row: self.row,
            message: format!("no index set at d={d}"),
        })?;
        Ok(self.instance(diagram, d, param, j, &indices)?.matrix)
    }
}

/// A reflection word certifying finiteness of one or more rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppendixEntry {
    pub table: Table,
    pub rows: Vec<u32>,
    label: Option<u32>,
    pub dims: Vec<usize>,
    /// Index set spec of the simple chain, such as `1` or `1..j`.
    pub indices: Option<String>,
    word: Vec<String>,
    trace: Vec<String>,
}

fn expand_tokens(tokens: &[String], d: usize, j: Option<usize>) -> Result<Vec<usize>, CatalogError> {
    let mut out = Vec::new();
    for tok in tokens {
        if let Some((a, b)) = tok.split_once("..") {
            let (a, b) = (eval_usize(a, d, j)?, eval_usize(b, d, j)?);
            if a <= b {
                out.extend(a..=b);
            } else {
                out.extend((b..=a).rev());
            }
        } else {
            out.push(eval_usize(tok, d, j)?);
        }
    }
    Ok(out)
}

impl AppendixEntry {
    /// The label under which the word is printed.
    pub fn label(&self) -> u32 {
        self.label.unwrap_or(self.rows[0])
    }

    pub fn word(&self, d: usize) -> Result<ReflectionWord, CatalogError> {
        Ok(ReflectionWord::new(expand_tokens(&self.word, d, None)?))
    }

    /// The printed chain of bases, starting at `E`, when there is one.
    pub fn expected_trace(&self, d: usize) -> Result<Option<Vec<Basis>>, CatalogError> {
        if self.trace.is_empty() {
            return Ok(None);
        }
        let bases = self.trace.iter().map(|t| Basis::parse_compressed(t, d)).collect::<Result<Vec<_>, _>>()?;
        Ok(Some(bases))
    }

    /// `(j, S)` pairs the word is stated for at rank `d`, matched against
    /// the chain size of `template`.
    pub fn index_sets(&self, template: &Template, d: usize) -> Result<Vec<(Option<usize>, Vec<usize>)>, CatalogError> {
        let mut out = Vec::new();
        for j in template.j_values(d)? {
            match &self.indices {
                None => {
                    for s in template.index_sets(d, j)? {
                        out.push((j, s));
                    }
                }
                Some(spec) => {
                    let set = expand_tokens(&[spec.clone()], d, j)?;
                    if template.index_sets(d, j)?.contains(&set) {
                        out.push((j, set));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The embedded tables and certificates.
#[derive(Debug, Clone)]
pub struct Catalog {
    torsion: TorsionConfig,
    rows: Vec<TableRow>,
    appendix: Vec<AppendixEntry>,
}

impl Catalog {
    /// The embedded data at the default torsion.
    pub fn builtin() -> &'static Catalog {
        static CATALOG: OnceLock<Catalog> = OnceLock::new();
        CATALOG.get_or_init(|| Catalog::load(TorsionConfig::default()).expect("embedded catalog data is valid"))
    }

    /// The embedded data with scalars in `torsion`.
    pub fn load(torsion: TorsionConfig) -> Result<Catalog, CatalogError> {
        Catalog::from_files(FILES, torsion)
    }

    /// Parses a catalog from `(relative path, contents)` pairs laid out
    /// like `data/`.
    pub fn from_files(files: &[(&str, &str)], torsion: TorsionConfig) -> Result<Catalog, CatalogError> {
        let get = |name: &str| files.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| CatalogError::Missing(name.to_string()));
        let manifest = get("manifest.txt")?;
        let mut rows: Vec<TableRow> = Vec::new();
        for (n, line) in manifest.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| CatalogError::Format { file: "manifest.txt".into(), line: n + 1, message };
            let [table, row, diagram, file, constraint] = content.split_whitespace().collect::<Vec<_>>()[..] else {
                return Err(err("expected `TABLE ROW DIAGRAM FILE CONSTRAINT`".into()));
            };
            let table: Table = table.parse().map_err(err)?;
            let row: u32 = row.parse().map_err(|_| err(format!("bad row `{row}`")))?;
            let diagram: usize = diagram.parse().map_err(|_| err(format!("bad diagram `{diagram}`")))?;
            let constraint = Constraint::parse(constraint).map_err(err)?;
            let text = get(file)?;
            let template = if file.ends_with(".fam") {
                Template::Family(parse_family(text, file, torsion)?)
            } else {
                let parsed = parse_diagram_file(text, torsion).map_err(|e| CatalogError::Format { file: file.to_string(), line: 0, message: e.to_string() })?;
                Template::Fixed(parsed)
            };
            let generator = match &template {
                Template::Fixed(f) => f.generator,
                Template::Family(_) => family_generator(text),
            };
            match (generator, &constraint) {
                (Generator::Generic, Constraint::NotRoots(_)) => {}
                (Generator::Order(k), Constraint::Primitive(n)) if k == *n => {}
                _ => return Err(err(format!("`gen` line of {file} does not match constraint {constraint}"))),
            }
            match rows.last_mut() {
                Some(last) if last.table == table && last.row == row => {
                    if diagram != last.diagrams.len() + 1 || last.constraint != constraint {
                        return Err(err(format!("diagram {diagram} out of sequence or constraint changed")));
                    }
                    if last.is_family() != matches!(template, Template::Family(_)) || last.native_dim() != template.native_dim() {
                        return Err(err("diagrams of one row must share their rank".into()));
                    }
                    last.diagrams.push(template);
                    last.files.push(file.to_string());
                }
                _ => {
                    if diagram != 1 {
                        return Err(err(format!("row {row} starts at diagram {diagram}")));
                    }
                    if rows.iter().any(|r| r.table == table && r.row == row) {
                        return Err(err(format!("row {row} listed twice")));
                    }
                    rows.push(TableRow { table, row, constraint, diagrams: vec![template], files: vec![file.to_string()] });
                }
            }
        }
        let appendix = parse_appendix(get("appendix.txt")?)?;
        for entry in &appendix {
            for &r in &entry.rows {
                if !rows.iter().any(|x| x.table == entry.table && x.row == r) {
                    return Err(CatalogError::UnknownRow { table: entry.table, row: r });
                }
            }
        }
        Ok(Catalog { torsion, rows, appendix })
    }

    pub fn torsion(&self) -> TorsionConfig {
        self.torsion
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    pub fn table(&self, table: Table) -> impl Iterator<Item = &TableRow> {
        self.rows.iter().filter(move |r| r.table == table)
    }

    pub fn row(&self, table: Table, row: u32) -> Result<&TableRow, CatalogError> {
        self.rows.iter().find(|r| r.table == table && r.row == row).ok_or(CatalogError::UnknownRow { table, row })
    }

    pub fn appendix(&self) -> &[AppendixEntry] {
        &self.appendix
    }

    /// Appendix entries that cover `row`.
    pub fn appendix_for(&self, table: Table, row: u32) -> impl Iterator<Item = &AppendixEntry> {
        self.appendix.iter().filter(move |e| e.table == table && e.rows.contains(&row))
    }
}

fn family_generator(text: &str) -> Generator {
    for line in text.lines() {
        let words: Vec<&str> = line.split('#').next().unwrap_or("").split_whitespace().collect();
        if let ["gen", "q", "order", k] = words[..] {
            if let Ok(k) = k.parse() {
                return Generator::Order(k);
            }
        }
    }
    Generator::Generic
}

fn parse_family(text: &str, file: &str, torsion: TorsionConfig) -> Result<Family, CatalogError> {
    let mut jrange = None;
    let mut chain = None;
    let mut tails: Vec<Option<Scalar>> = Vec::new();
    let mut edges = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let err = |message: String| CatalogError::Format { file: file.to_string(), line: n + 1, message };
        let words: Vec<&str> = line.split('#').next().unwrap_or("").split_whitespace().collect();
        let scalar = |t: &str| parse_scalar(t, torsion).map_err(|e| err(e.to_string()));
        let node = |t: &str| -> Result<Node, CatalogError> {
            if t == "c" {
                return Ok(Node::Chain);
            }
            t.strip_prefix('t').and_then(|k| k.parse().ok()).filter(|&k| k >= 1).map(Node::Tail).ok_or_else(|| err(format!("bad node `{t}`")))
        };
        match words[..] {
            [] => {}
            ["gen", ..] => {}
            ["jrange", lo, hi] => jrange = Some((lo.to_string(), hi.to_string())),
            ["chain", len, param, count] => chain = Some((len.to_string(), scalar(param)?, count.to_string())),
            ["v", t, label] => {
                let Node::Tail(k) = node(t)? else {
                    return Err(err("only tail vertices carry `v` lines".into()));
                };
                if tails.len() < k {
                    tails.resize(k, None);
                }
                if tails[k - 1].replace(scalar(label)?).is_some() {
                    return Err(err(format!("duplicate vertex {t}")));
                }
            }
            ["e", a, b, label] => edges.push((node(a)?, node(b)?, scalar(label)?)),
            _ => return Err(err(format!("unrecognized line `{}`", line.trim()))),
        }
    }
    let missing = |m: &str| CatalogError::Format { file: file.to_string(), line: 0, message: m.to_string() };
    let (chain_len, chain_param, count) = chain.ok_or_else(|| missing("missing `chain` line"))?;
    let tails = tails.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| missing("tail vertex without label"))?;
    for &(a, b, _) in &edges {
        for n in [a, b] {
            if let Node::Tail(k) = n {
                if k > tails.len() {
                    return Err(missing("edge to an undeclared tail vertex"));
                }
            }
        }
        if a == b {
            return Err(missing("loop edge"));
        }
    }
    Ok(Family { jrange, chain_len, chain_param, count, tails, edges })
}

fn parse_appendix(text: &str) -> Result<Vec<AppendixEntry>, CatalogError> {
    let mut out: Vec<AppendixEntry> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let err = |message: String| CatalogError::Format { file: "appendix.txt".into(), line: n + 1, message };
        let words: Vec<&str> = line.split('#').next().unwrap_or("").split_whitespace().collect();
        match words.first() {
            None => {}
            Some(&"entry") => {
                let table: Table = words.get(1).ok_or_else(|| err("missing table".into()))?.parse().map_err(err)?;
                let rows = words
                    .get(2)
                    .ok_or_else(|| err("missing rows".into()))?
                    .split(',')
                    .map(|r| r.parse::<u32>().map_err(|_| err(format!("bad row `{r}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut entry = AppendixEntry { table, rows, label: None, dims: Vec::new(), indices: None, word: Vec::new(), trace: Vec::new() };
                let mut rest = words[3..].iter();
                while let Some(&key) = rest.next() {
                    let value = rest.next().ok_or_else(|| err(format!("`{key}` needs a value")))?;
                    match key {
                        "label" => entry.label = Some(value.parse().map_err(|_| err(format!("bad label `{value}`")))?),
                        "dims" => {
                            entry.dims = value.split(',').map(|d| d.parse().map_err(|_| err(format!("bad rank `{d}`")))).collect::<Result<_, _>>()?;
                        }
                        "indices" => entry.indices = Some(value.to_string()),
                        _ => return Err(err(format!("unknown key `{key}`"))),
                    }
                }
                out.push(entry);
            }
            Some(&kind @ ("word" | "trace")) => {
                let entry = out.last_mut().ok_or_else(|| err(format!("`{kind}` before any entry")))?;
                let tokens = words[1..].iter().map(|w| w.to_string());
                if kind == "word" {
                    if !entry.word.is_empty() {
                        return Err(err("second `word` line".into()));
                    }
                    entry.word.extend(tokens);
                } else {
                    entry.trace.extend(tokens);
                }
            }
            Some(other) => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    if let Some(e) = out.iter().find(|e| e.word.is_empty()) {
        return Err(CatalogError::Format { file: "appendix.txt".into(), line: 0, message: format!("entry for row {} has no word", e.rows[0]) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> &'static Catalog {
        Catalog::builtin()
    }

    #[test]
    fn embedded_data_loads() {
        let c = cat();
        assert_eq!(c.table(Table::Rank4).count(), 22);
        assert_eq!(c.table(Table::RankGe5).count(), 22);
        let diagrams: usize = c.table(Table::Rank4).map(|r| r.diagrams.len()).sum();
        assert_eq!(diagrams, 97);
        assert!(c.appendix().len() >= 20);
    }

    #[test]
    fn subsets() {
        assert_eq!(index_subsets(3, 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(index_subsets(3, 0), vec![Vec::<usize>::new()]);
        assert!(index_subsets(2, 3).is_empty());
    }

    #[test]
    fn family_instances() {
        let c = cat();
        let q = c.torsion().generic();
        // row 2: j ranges over 1..=(d+1)/2, both diagrams
        let row = c.row(Table::RankGe5, 2).unwrap();
        assert_eq!(row.j_values(5).unwrap(), vec![Some(1), Some(2), Some(3)]);
        let inst = row.instances_at(5, q, Some(1)).unwrap();
        // C(5,q;i) for 5 choices, C(5,q^-1;S) with |S| = 5
        assert_eq!(inst.len(), 6);
        // row 3 tail attaches to the last chain vertex
        let m = c.row(Table::RankGe5, 3).unwrap().instantiate(1, 5, q).unwrap();
        let dg = m.to_dynkin();
        assert!(dg.has_edge(3, 4));
        assert_eq!(dg.edge(3, 4).to_string(), "q^-2");
        assert_eq!(dg.vertex(4).to_string(), "q");
    }

    #[test]
    fn constraints() {
        let t = TorsionConfig::default();
        let c = Constraint::parse("ne:1,2").unwrap();
        assert!(c.admits(t.generic()));
        assert!(!c.admits(t.minus_one()));
        assert_eq!(c.samples(t).len(), 2);
        let r = Constraint::parse("R:5").unwrap();
        assert_eq!(r.samples(t).len(), 4);
        assert_eq!(r.to_string(), "R:5");
        assert!(Constraint::parse("R:1").is_err());
        let row = cat().row(Table::Rank4, 5).unwrap();
        if let Constraint::NotRoots(_) = row.constraint {
            assert!(row.instance(1, 4, t.one(), None, &[]).is_err());
        }
    }

    #[test]
    fn appendix_words() {
        let c = cat();
        let e = c.appendix_for(Table::RankGe5, 9).next().unwrap();
        assert_eq!(e.label(), 8);
        assert_eq!(e.word(5).unwrap().to_string(), "s1s2s3s5s4s3s2s1");
        let e = c.appendix_for(Table::RankGe5, 4).next().unwrap();
        assert_eq!(e.word(5).unwrap().letters(), &[1, 2, 3, 4, 5, 4, 3, 2, 1]);
        let e = c.appendix_for(Table::Rank4, 6).next().unwrap();
        let trace = e.expected_trace(4).unwrap().unwrap();
        assert_eq!(trace.len(), e.word(4).unwrap().len() + 1);
    }

    #[test]
    fn malformed_manifest_reports_line() {
        let files = [("manifest.txt", "rank4 1 1 missing.dgm ne:1\n"), ("appendix.txt", "")];
        assert_eq!(Catalog::from_files(&files, TorsionConfig::default()).unwrap_err(), CatalogError::Missing("missing.dgm".into()));
        let files = [("manifest.txt", "rank4 x\n"), ("appendix.txt", "")];
        assert!(matches!(Catalog::from_files(&files, TorsionConfig::default()), Err(CatalogError::Format { line: 1, .. })));
    }
}
