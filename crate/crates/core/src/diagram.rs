//! Bicharacter matrices and generalized Dynkin diagrams.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::groupoid::cartan_entry;
use crate::scalar::{parse_scalar, Scalar, ScalarError, TorsionConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("expected {expected} entries, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("vector of length {actual} does not match dimension {dim}")]
    Length { dim: usize, actual: usize },
    #[error("index {index} out of range 1..={dim}")]
    Index { index: usize, dim: usize },
    #[error("empty index set")]
    EmptySubset,
    #[error("vertex {0} has label 1")]
    TrivialVertex(usize),
    #[error("invalid simple chain: {0}")]
    Chain(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// The matrix `(q_ij)` of a bicharacter on `Z^d` with respect to the
/// standard basis. Indices are 0-based in the API.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BicharacterMatrix {
    dim: usize,
    torsion: TorsionConfig,
    entries: Vec<Scalar>,
}

impl BicharacterMatrix {
    pub fn new(torsion: TorsionConfig, dim: usize, entries: Vec<Scalar>) -> Result<Self, DiagramError> {
        if entries.len() != dim * dim || dim == 0 {
            return Err(DiagramError::Shape { expected: dim * dim, actual: entries.len() });
        }
        for s in &entries {
            if s.torsion() != torsion {
                return Err(ScalarError::TorsionMismatch {
                    left: torsion.order(),
                    right: s.torsion().order(),
                }
                .into());
            }
        }
        Ok(BicharacterMatrix { dim, torsion, entries })
    }

    pub fn from_fn(torsion: TorsionConfig, dim: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Result<Self, DiagramError> {
        let entries = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        Self::new(torsion, dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn torsion(&self) -> TorsionConfig {
        self.torsion
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.entries
    }

    /// `chi(x, y) = prod q_ij^(x_i y_j)`.
    pub fn chi(&self, x: &[i64], y: &[i64]) -> Result<Scalar, DiagramError> {
        for v in [x, y] {
            if v.len() != self.dim {
                return Err(DiagramError::Length { dim: self.dim, actual: v.len() });
            }
        }
        let mut acc = self.torsion.one();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yj != 0 {
                    acc = acc * self.get(i, j).pow(xi * yj);
                }
            }
        }
        Ok(acc)
    }

    pub fn to_dynkin(&self) -> DynkinDiagram {
        let d = self.dim;
        let vertices = (0..d).map(|i| self.get(i, i)).collect();
        let mut edges = vec![self.torsion.one(); d * d];
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    edges[i * d + j] = self.get(i, j) * self.get(j, i);
                }
            }
        }
        DynkinDiagram { dim: d, torsion: self.torsion, vertices, edges }
    }

    /// Submatrix on the given 0-based indices, in the given order.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self, DiagramError> {
        if subset.is_empty() {
            return Err(DiagramError::EmptySubset);
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= self.dim) {
            return Err(DiagramError::Index { index: bad + 1, dim: self.dim });
        }
        Self::from_fn(self.torsion, subset.len(), |a, b| self.get(subset[a], subset[b]))
    }

    /// Replaces `(q_ij, q_ji)` by `(t q_ij, t^-1 q_ji)`.
    pub fn twist(&self, i: usize, j: usize, t: Scalar) -> Self {
        let mut out = self.clone();
        let d = self.dim;
        out.entries[i * d + j] = out.entries[i * d + j] * t;
        out.entries[j * d + i] = out.entries[j * d + i] * t.inv();
        out
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        BicharacterMatrix {
            dim: d,
            torsion: self.torsion,
            entries: (0..d * d).map(|k| self.get(k % d, k / d)).collect(),
        }
    }

    /// Substitutes `q := param` in every entry.
    pub fn substitute(&self, param: Scalar) -> Result<Self, DiagramError> {
        let entries = self
            .entries
            .iter()
            .map(|s| s.substitute(param))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(param.torsion(), self.dim, entries)
    }

    pub fn check_vertices(&self) -> Result<(), DiagramError> {
        match (0..self.dim).find(|&i| self.get(i, i).is_one()) {
            Some(i) => Err(DiagramError::TrivialVertex(i + 1)),
            None => Ok(()),
        }
    }
}

/// Vertex labels `q_ii` and symmetric edge labels `q_ij q_ji`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DynkinDiagram {
    dim: usize,
    torsion: TorsionConfig,
    vertices: Vec<Scalar>,
    edges: Vec<Scalar>,
}

impl DynkinDiagram {
    /// Builds a diagram from vertex labels and `(i, j, label)` edges
    /// (0-based); missing edges are 1.
    pub fn new(torsion: TorsionConfig, vertices: Vec<Scalar>, edge_list: &[(usize, usize, Scalar)]) -> Result<Self, DiagramError> {
        let d = vertices.len();
        if d == 0 {
            return Err(DiagramError::Shape { expected: 1, actual: 0 });
        }
        let mut edges = vec![torsion.one(); d * d];
        for &(i, j, s) in edge_list {
            for k in [i, j] {
                if k >= d {
                    return Err(DiagramError::Index { index: k + 1, dim: d });
                }
            }
            if i == j {
                return Err(DiagramError::Index { index: i + 1, dim: d });
            }
            edges[i * d + j] = s;
            edges[j * d + i] = s;
        }
        Ok(DynkinDiagram { dim: d, torsion, vertices, edges })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn torsion(&self) -> TorsionConfig {
        self.torsion
    }

    pub fn vertex(&self, i: usize) -> Scalar {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[Scalar] {
        &self.vertices
    }

    pub fn edge(&self, i: usize, j: usize) -> Scalar {
        self.edges[i * self.dim + j]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && !self.edge(i, j).is_one()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(move |&j| self.has_edge(i, j))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    pub fn num_edges(&self) -> usize {
        (0..self.dim).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        is_connected_subset(self, &(0..self.dim).collect::<Vec<_>>())
    }

    /// Representative matrix with `q_ij` = edge label for `i < j`, `q_ji = 1`.
    pub fn to_bicharacter(&self) -> BicharacterMatrix {
        let d = self.dim;
        let one = self.torsion.one();
        let entries = (0..d * d)
            .map(|k| {
                let (i, j) = (k / d, k % d);
                match i.cmp(&j) {
                    std::cmp::Ordering::Equal => self.vertices[i],
                    std::cmp::Ordering::Less => self.edge(i, j),
                    std::cmp::Ordering::Greater => one,
                }
            })
            .collect();
        BicharacterMatrix { dim: d, torsion: self.torsion, entries }
    }

    pub fn induced(&self, subset: &[usize]) -> DynkinDiagram {
        let n = subset.len();
        let vertices = subset.iter().map(|&i| self.vertices[i]).collect();
        let edges = (0..n * n).map(|k| self.edge(subset[k / n], subset[k % n])).collect();
        DynkinDiagram { dim: n, torsion: self.torsion, vertices, edges }
    }

    pub fn permuted(&self, perm: &[usize]) -> DynkinDiagram {
        self.induced(perm)
    }

    /// Vertex order of a path graph, starting from the smaller end.
    pub fn path_order(&self) -> Option<Vec<usize>> {
        let d = self.dim;
        if d == 1 {
            return Some(vec![0]);
        }
        if !self.is_connected() || self.num_edges() != d - 1 || (0..d).any(|i| self.degree(i) > 2) {
            return None;
        }
        let start = (0..d).find(|&i| self.degree(i) == 1)?;
        let mut order = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        while order.len() < d {
            let next = self.neighbors(cur).find(|&j| j != prev)?;
            prev = cur;
            cur = next;
            order.push(cur);
        }
        Some(order)
    }

    /// Minimum of the permuted label sequences over all vertex orders.
    pub fn canonical(&self) -> CanonicalDiagram {
        let d = self.dim;
        let code = |s: Scalar| (s.free_exp(), s.tor_exp());
        let vert: Vec<Cell> = self.vertices.iter().map(|&s| code(s)).collect();
        let edge: Vec<Cell> = self.edges.iter().map(|&s| code(s)).collect();
        let mut search = CanonSearch {
            d,
            vert: &vert,
            edge: &edge,
            used: vec![false; d],
            order: Vec::with_capacity(d),
            current: Vec::with_capacity(d * (d + 1) / 2),
            best: None,
        };
        search.run();
        CanonicalDiagram { dim: d, torsion: self.torsion, cells: search.best.expect("nonempty search") }
    }

    pub fn to_json(&self) -> DiagramJson {
        let d = self.dim;
        let mut edges = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                if self.has_edge(i, j) {
                    edges.push((i + 1, j + 1, self.edge(i, j).to_string()));
                }
            }
        }
        DiagramJson { dim: d, vertices: self.vertices.iter().map(|s| s.to_string()).collect(), edges }
    }
}

impl fmt::Display for DynkinDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.vertices.iter().map(|s| s.to_string()).collect();
        write!(f, "vertices [{}]", labels.join(", "))?;
        let json = self.to_json();
        if json.edges.is_empty() {
            return write!(f, "; no edges");
        }
        let edges: Vec<String> = json.edges.iter().map(|(i, j, s)| format!("{i}-{j}: {s}")).collect();
        write!(f, "; edges {}", edges.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagramJson {
    pub dim: usize,
    pub vertices: Vec<String>,
    pub edges: Vec<(usize, usize, String)>,
}

type Cell = (i64, u32);

/// Branch and bound over vertex orders. Position `k` contributes its vertex
/// label followed by its edges to positions `0..k`, so the sequence is
/// compared prefix by prefix.
struct CanonSearch<'a> {
    d: usize,
    vert: &'a [Cell],
    edge: &'a [Cell],
    used: Vec<bool>,
    order: Vec<usize>,
    current: Vec<Cell>,
    best: Option<Vec<Cell>>,
}

impl CanonSearch<'_> {
    fn run(&mut self) {
        if self.order.len() == self.d {
            if self.best.as_ref().map_or(true, |b| self.current < *b) {
                self.best = Some(self.current.clone());
            }
            return;
        }
        for v in 0..self.d {
            if self.used[v] {
                continue;
            }
            let mark = self.current.len();
            self.current.push(self.vert[v]);
            for &u in &self.order {
                self.current.push(self.edge[v * self.d + u]);
            }
            let worse = self
                .best
                .as_ref()
                .is_some_and(|best| self.current[..] > best[..self.current.len()]);
            if !worse {
                self.used[v] = true;
                self.order.push(v);
                self.run();
                self.order.pop();
                self.used[v] = false;
            }
            self.current.truncate(mark);
        }
    }
}

/// Twist- and permutation-invariant key of a diagram.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalDiagram {
    dim: usize,
    torsion: TorsionConfig,
    cells: Vec<Cell>,
}

impl CanonicalDiagram {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_dynkin(&self) -> DynkinDiagram {
        let d = self.dim;
        let mut vertices = Vec::with_capacity(d);
        let mut edges = vec![self.torsion.one(); d * d];
        let mut it = self.cells.iter();
        for k in 0..d {
            let &(f, t) = it.next().expect("cell");
            vertices.push(self.torsion.scalar(f, t as i64));
            for u in 0..k {
                let &(f, t) = it.next().expect("cell");
                let s = self.torsion.scalar(f, t as i64);
                edges[k * d + u] = s;
                edges[u * d + k] = s;
            }
        }
        DynkinDiagram { dim: d, torsion: self.torsion, vertices, edges }
    }
}

pub(crate) fn is_connected_subset(diagram: &DynkinDiagram, subset: &[usize]) -> bool {
    if subset.is_empty() {
        return false;
    }
    let mut seen = vec![false; subset.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(a) = stack.pop() {
        for b in 0..subset.len() {
            if !seen[b] && diagram.has_edge(subset[a], subset[b]) {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Generalized Cartan matrix, row-major.
pub type CartanMatrix = Vec<Vec<i64>>;

/// The Cartan matrix if `q_ij q_ji = q_ii^(a_ij)` holds for the Cartan
/// integers `a_ij`.
pub fn detect_cartan_type(m: &BicharacterMatrix) -> Result<Option<CartanMatrix>, DiagramError> {
    m.check_vertices()?;
    let d = m.dim();
    let mut a = vec![vec![0i64; d]; d];
    for i in 0..d {
        a[i][i] = 2;
        let p = m.get(i, i);
        for j in 0..d {
            if i == j {
                continue;
            }
            let r = m.get(i, j) * m.get(j, i);
            let Some(aij) = cartan_entry(p, r) else {
                return Ok(None);
            };
            if p.pow(aij) != r {
                return Ok(None);
            }
            a[i][j] = aij;
        }
    }
    Ok(Some(a))
}

/// Name of a finite-type Cartan matrix, e.g. `A_4` or `B_3+A_1`.
///
/// A vertex `i` with `a_ij = -2` (or `-3`) is the short end of a multiple
/// bond.
pub fn cartan_type_name(a: &CartanMatrix) -> Option<String> {
    let d = a.len();
    let mut seen = vec![false; d];
    let mut parts = Vec::new();
    for start in 0..d {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < comp.len() {
            let i = comp[k];
            for j in 0..d {
                if !seen[j] && a[i][j] != 0 {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        parts.push(connected_type_name(a, &comp)?);
    }
    parts.sort();
    Some(parts.join("+"))
}

fn connected_type_name(a: &CartanMatrix, comp: &[usize]) -> Option<String> {
    let n = comp.len();
    if n == 1 {
        return Some("A_1".into());
    }
    let mut bonds = Vec::new();
    for (x, &i) in comp.iter().enumerate() {
        for &j in &comp[x + 1..] {
            if a[i][j] != 0 || a[j][i] != 0 {
                if a[i][j] == 0 || a[j][i] == 0 {
                    return None;
                }
                bonds.push((i, j, a[i][j] * a[j][i]));
            }
        }
    }
    if bonds.len() != n - 1 {
        return None;
    }
    let degree = |v: usize| bonds.iter().filter(|b| b.0 == v || b.1 == v).count();
    let multi: Vec<_> = bonds.iter().filter(|b| b.2 > 1).collect();
    if bonds.iter().any(|b| b.2 > 3) {
        return None;
    }
    let max_deg = comp.iter().map(|&v| degree(v)).max().unwrap_or(0);
    match multi.len() {
        0 => {
            if max_deg <= 2 {
                return Some(format!("A_{n}"));
            }
            let branches: Vec<usize> = comp.iter().copied().filter(|&v| degree(v) >= 3).collect();
            if branches.len() != 1 || degree(branches[0]) != 3 {
                return None;
            }
            let centre = branches[0];
            let mut arms: Vec<usize> = bonds
                .iter()
                .filter_map(|b| if b.0 == centre { Some(b.1) } else if b.1 == centre { Some(b.0) } else { None })
                .map(|first| arm_length(&bonds, centre, first))
                .collect();
            arms.sort_unstable();
            match (arms[0], arms[1], arms[2]) {
                (1, 1, _) => Some(format!("D_{n}")),
                (1, 2, 2) => Some("E_6".into()),
                (1, 2, 3) => Some("E_7".into()),
                (1, 2, 4) => Some("E_8".into()),
                _ => None,
            }
        }
        1 => {
            if max_deg > 2 {
                return None;
            }
            let &(i, j, prod) = multi[0];
            if prod == 3 {
                return (n == 2).then(|| "G_2".into());
            }
            if n == 2 {
                return Some("B_2".into());
            }
            let short = if a[i][j] == -2 { i } else { j };
            let long = if short == i { j } else { i };
            if degree(short) == 1 {
                Some(format!("B_{n}"))
            } else if degree(long) == 1 {
                Some(format!("C_{n}"))
            } else if n == 4 {
                Some("F_4".into())
            } else {
                None
            }
        }
        _ => None,
    }
}

fn arm_length(bonds: &[(usize, usize, i64)], from: usize, first: usize) -> usize {
    let mut prev = from;
    let mut cur = first;
    let mut len = 1;
    loop {
        let next = bonds.iter().find_map(|b| {
            if b.0 == cur && b.1 != prev {
                Some(b.1)
            } else if b.1 == cur && b.0 != prev {
                Some(b.0)
            } else {
                None
            }
        });
        match next {
            Some(n) => {
                prev = cur;
                cur = n;
                len += 1;
            }
            None => return len,
        }
    }
}

/// The simple chain `C(d, q; i_1, ..., i_j)`; indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleChainSpec {
    pub d: usize,
    pub q: Scalar,
    pub indices: Vec<usize>,
}

pub fn build_simple_chain(spec: &SimpleChainSpec) -> Result<DynkinDiagram, DiagramError> {
    let d = spec.d;
    let q = spec.q;
    if d < 1 {
        return Err(DiagramError::Chain("length must be positive".into()));
    }
    if q.is_one() {
        return Err(DiagramError::Chain("parameter must not be 1".into()));
    }
    if spec.indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DiagramError::Chain("indices must be strictly increasing".into()));
    }
    if let Some(&bad) = spec.indices.iter().find(|&&i| i == 0 || i > d) {
        return Err(DiagramError::Index { index: bad, dim: d });
    }
    let torsion = q.torsion();
    let minus_one = torsion.minus_one();
    let in_set = |i: usize| spec.indices.contains(&i);
    // edge[i] joins vertices i-1 and i (1-based); edge[1] is virtual
    let edge: Vec<Scalar> = (0..=d).map(|i| if in_set(i) { q } else { q.inv() }).collect();
    let mut vertices = Vec::with_capacity(d);
    for i in 1..=d {
        let label = if i == d {
            if in_set(d) {
                minus_one
            } else {
                q
            }
        } else if edge[i] != edge[i + 1] {
            minus_one
        } else {
            edge[i].inv()
        };
        vertices.push(label);
    }
    let edges: Vec<_> = (2..=d).map(|i| (i - 2, i - 1, edge[i])).collect();
    DynkinDiagram::new(torsion, vertices, &edges)
}

/// How the symbol `q` of a diagram file is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Generic,
    /// `q` stands for the fixed primitive root `zK`.
    Order(u32),
}

/// A parsed diagram file. Labels are kept as expressions in `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramFile {
    pub generator: Generator,
    pub template: DynkinDiagram,
}

impl DiagramFile {
    /// The diagram with `q` read according to the `gen` line.
    pub fn diagram(&self) -> Result<DynkinDiagram, DiagramError> {
        let torsion = self.template.torsion();
        match self.generator {
            Generator::Generic => Ok(self.template.clone()),
            Generator::Order(k) => {
                let z = torsion.root_of_unity(k)?;
                Ok(self.template.to_bicharacter().substitute(z)?.to_dynkin())
            }
        }
    }

    pub fn matrix(&self) -> Result<BicharacterMatrix, DiagramError> {
        Ok(self.diagram()?.to_bicharacter())
    }
}

/// Parses the line-oriented diagram format. `torsion` is used unless the
/// file carries its own `torsion` line.
pub fn parse_diagram_file(text: &str, torsion: TorsionConfig) -> Result<DiagramFile, DiagramError> {
    let err = |line: usize, message: String| DiagramError::Format { line, message };
    let mut torsion = torsion;
    let mut dim: Option<usize> = None;
    let mut generator = Generator::Generic;
    let mut vertices: Vec<Option<Scalar>> = Vec::new();
    let mut raw_edges: Vec<(usize, usize, usize, String)> = Vec::new();
    let mut raw_vertices: Vec<(usize, usize, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        match words[0] {
            "dim" => {
                if dim.is_some() {
                    return Err(err(lineno, "duplicate `dim` line".into()));
                }
                let d: usize = words
                    .get(1)
                    .and_then(|w| w.parse().ok())
                    .filter(|&d| d >= 1 && words.len() == 2)
                    .ok_or_else(|| err(lineno, "expected `dim D` with D >= 1".into()))?;
                dim = Some(d);
            }
            "torsion" => {
                let n: u32 = words
                    .get(1)
                    .and_then(|w| w.parse().ok())
                    .filter(|_| words.len() == 2)
                    .ok_or_else(|| err(lineno, "expected `torsion N`".into()))?;
                torsion = TorsionConfig::new(n).map_err(|e| err(lineno, e.to_string()))?;
            }
            "gen" => {
                generator = match words.as_slice() {
                    [_, "q", "generic"] => Generator::Generic,
                    [_, "q", "order", k] => {
                        let k: u32 = k.parse().map_err(|_| err(lineno, format!("bad order `{k}`")))?;
                        Generator::Order(k)
                    }
                    _ => return Err(err(lineno, "expected `gen q generic` or `gen q order K`".into())),
                };
            }
            "v" => {
                let [_, i, label] = words.as_slice() else {
                    return Err(err(lineno, "expected `v i SCALAR`".into()));
                };
                let i: usize = i.parse().map_err(|_| err(lineno, format!("bad vertex index `{i}`")))?;
                raw_vertices.push((lineno, i, label.to_string()));
            }
            "e" => {
                let [_, i, j, label] = words.as_slice() else {
                    return Err(err(lineno, "expected `e i j SCALAR`".into()));
                };
                let i: usize = i.parse().map_err(|_| err(lineno, format!("bad vertex index `{i}`")))?;
                let j: usize = j.parse().map_err(|_| err(lineno, format!("bad vertex index `{j}`")))?;
                raw_edges.push((lineno, i, j, label.to_string()));
            }
            other => return Err(err(lineno, format!("unknown directive `{other}`"))),
        }
    }
    let d = dim.ok_or_else(|| err(0, "missing `dim` line".into()))?;
    if let Generator::Order(k) = generator {
        if !torsion.contains_roots_of_order(k) {
            return Err(err(0, format!("order {k} does not divide torsion order {}", torsion.order())));
        }
    }
    vertices.resize(d, None);
    for (lineno, i, label) in raw_vertices {
        if i == 0 || i > d {
            return Err(err(lineno, format!("vertex {i} out of range 1..={d}")));
        }
        if vertices[i - 1].is_some() {
            return Err(err(lineno, format!("duplicate vertex {i}")));
        }
        vertices[i - 1] = Some(parse_scalar(&label, torsion).map_err(|e| err(lineno, e.to_string()))?);
    }
    let mut edges = Vec::new();
    let mut seen_edges = std::collections::BTreeSet::new();
    for (lineno, i, j, label) in raw_edges {
        if i == 0 || i > d || j == 0 || j > d || i == j {
            return Err(err(lineno, format!("invalid edge {i}-{j}")));
        }
        if !seen_edges.insert((i.min(j), i.max(j))) {
            return Err(err(lineno, format!("duplicate edge {i}-{j}")));
        }
        let s = parse_scalar(&label, torsion).map_err(|e| err(lineno, e.to_string()))?;
        edges.push((i - 1, j - 1, s));
    }
    let vertices = vertices
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| err(0, format!("vertex {} has no label", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DiagramFile { generator, template: DynkinDiagram::new(torsion, vertices, &edges)? })
}

/// Writes a diagram in the file format, with `q` generic.
pub fn format_diagram_file(diagram: &DynkinDiagram) -> String {
    let mut out = format!("dim {}\n", diagram.dim());
    if diagram.torsion() != TorsionConfig::default() {
        out.push_str(&format!("torsion {}\n", diagram.torsion().order()));
    }
    out.push_str("gen q generic\n");
    for (i, v) in diagram.vertices().iter().enumerate() {
        out.push_str(&format!("v {} {}\n", i + 1, v));
    }
    for (i, j, s) in diagram.to_json().edges {
        out.push_str(&format!("e {i} {j} {s}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> TorsionConfig {
        TorsionConfig::default()
    }

    fn s(text: &str) -> Scalar {
        parse_scalar(text, cfg()).unwrap()
    }

    fn a4() -> BicharacterMatrix {
        parse_diagram_file(
            "dim 4\ngen q generic\nv 1 q\nv 2 q\nv 3 q\nv 4 q\ne 1 2 q^-1\ne 2 3 q^-1\ne 3 4 q^-1\n",
            cfg(),
        )
        .unwrap()
        .matrix()
        .unwrap()
    }

    #[test]
    fn chi_examples() {
        let q = cfg().generic();
        let m = BicharacterMatrix::new(cfg(), 2, vec![q, q.inv(), cfg().one(), q]).unwrap();
        assert_eq!(m.chi(&[1, 0], &[0, 1]).unwrap(), q.inv());
        assert!(m.chi(&[0, 0], &[3, -1]).unwrap().is_one());
        assert_eq!(m.chi(&[1, 1], &[1, 1]).unwrap(), q);
        assert!(m.chi(&[1], &[1, 1]).is_err());
    }

    #[test]
    fn dynkin_of_trivial_matrix() {
        let m = BicharacterMatrix::from_fn(cfg(), 3, |_, _| cfg().one()).unwrap();
        let d = m.to_dynkin();
        assert!(d.vertices().iter().all(|v| v.is_one()));
        assert_eq!(d.num_edges(), 0);
        assert!(!d.is_connected());
    }

    #[test]
    fn transpose_gives_same_diagram() {
        let m = a4().twist(0, 2, s("z7^3*q^2"));
        assert_eq!(m.to_dynkin(), m.transpose().to_dynkin());
    }

    #[test]
    fn a4_path_and_cartan_matrix() {
        let m = a4();
        let d = m.to_dynkin();
        assert_eq!(d.path_order(), Some(vec![0, 1, 2, 3]));
        let a = detect_cartan_type(&m).unwrap().unwrap();
        assert_eq!(a, vec![vec![2, -1, 0, 0], vec![-1, 2, -1, 0], vec![0, -1, 2, -1], vec![0, 0, -1, 2]]);
        assert_eq!(cartan_type_name(&a).as_deref(), Some("A_4"));
    }

    #[test]
    fn not_of_cartan_type() {
        let text = "dim 4\ngen q generic\nv 1 q\nv 2 q\nv 3 -1\nv 4 -q^-1\ne 1 2 q^-1\ne 2 3 q^-1\ne 3 4 -q\n";
        let m = parse_diagram_file(text, cfg()).unwrap().matrix().unwrap();
        assert_eq!(detect_cartan_type(&m).unwrap(), None);
        let single = BicharacterMatrix::new(cfg(), 1, vec![cfg().generic()]).unwrap();
        assert_eq!(detect_cartan_type(&single).unwrap(), Some(vec![vec![2]]));
        let trivial = BicharacterMatrix::new(cfg(), 1, vec![cfg().one()]).unwrap();
        assert_eq!(detect_cartan_type(&trivial), Err(DiagramError::TrivialVertex(1)));
    }

    #[test]
    fn cartan_names() {
        let b3 = vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -2, 2]];
        assert_eq!(cartan_type_name(&b3).as_deref(), Some("B_3"));
        let c3 = vec![vec![2, -1, 0], vec![-1, 2, -2], vec![0, -1, 2]];
        assert_eq!(cartan_type_name(&c3).as_deref(), Some("C_3"));
        let f4 = vec![vec![2, -1, 0, 0], vec![-1, 2, -1, 0], vec![0, -2, 2, -1], vec![0, 0, -1, 2]];
        assert_eq!(cartan_type_name(&f4).as_deref(), Some("F_4"));
        let d4 = vec![vec![2, -1, 0, 0], vec![-1, 2, -1, -1], vec![0, -1, 2, 0], vec![0, -1, 0, 2]];
        assert_eq!(cartan_type_name(&d4).as_deref(), Some("D_4"));
        let affine = vec![vec![2, -2], vec![-2, 2]];
        assert_eq!(cartan_type_name(&affine), None);
        let split = vec![vec![2, 0], vec![0, 2]];
        assert_eq!(cartan_type_name(&split).as_deref(), Some("A_1+A_1"));
    }

    #[test]
    fn disconnected_path() {
        let text = "dim 3\nv 1 q\nv 2 q\nv 3 q\ne 1 2 q^-1\n";
        let d = parse_diagram_file(text, cfg()).unwrap().diagram().unwrap();
        assert!(!d.is_connected());
        let one = parse_diagram_file("dim 1\nv 1 q\n", cfg()).unwrap().diagram().unwrap();
        assert!(one.is_connected());
    }

    #[test]
    fn simple_chain_examples() {
        let q = cfg().generic();
        let c = build_simple_chain(&SimpleChainSpec { d: 4, q, indices: vec![1, 3, 4] }).unwrap();
        assert_eq!(c.vertices(), &[s("-1"), s("-1"), s("q^-1"), s("-1")]);
        assert_eq!([c.edge(0, 1), c.edge(1, 2), c.edge(2, 3)], [s("q^-1"), s("q"), s("q")]);
        let c = build_simple_chain(&SimpleChainSpec { d: 5, q, indices: vec![1, 3, 4] }).unwrap();
        assert_eq!(c.vertices(), &[s("-1"), s("-1"), s("q^-1"), s("-1"), s("q")]);
        assert_eq!(
            [c.edge(0, 1), c.edge(1, 2), c.edge(2, 3), c.edge(3, 4)],
            [s("q^-1"), s("q"), s("q"), s("q^-1")]
        );
        let c = build_simple_chain(&SimpleChainSpec { d: 5, q, indices: vec![] }).unwrap();
        assert!(c.vertices().iter().all(|&v| v == q));
        assert_eq!(detect_cartan_type(&c.to_bicharacter()).unwrap().map(|a| cartan_type_name(&a)), Some(Some("A_5".into())));
        assert!(build_simple_chain(&SimpleChainSpec { d: 3, q: cfg().one(), indices: vec![] }).is_err());
        assert!(build_simple_chain(&SimpleChainSpec { d: 3, q, indices: vec![2, 1] }).is_err());
        assert!(build_simple_chain(&SimpleChainSpec { d: 3, q, indices: vec![4] }).is_err());
    }

    #[test]
    fn restriction() {
        let m = a4();
        assert_eq!(m.restrict(&[0, 1, 2, 3]).unwrap(), m);
        let sub = m.restrict(&[0, 1, 2]).unwrap();
        let a = detect_cartan_type(&sub).unwrap().unwrap();
        assert_eq!(cartan_type_name(&a).as_deref(), Some("A_3"));
        assert_eq!(m.restrict(&[2]).unwrap().entries(), &[cfg().generic()]);
        assert_eq!(m.restrict(&[4]), Err(DiagramError::Index { index: 5, dim: 4 }));
        assert_eq!(m.restrict(&[]), Err(DiagramError::EmptySubset));
    }

    #[test]
    fn canonical_form_is_permutation_invariant() {
        let d = a4().to_dynkin();
        let key = d.canonical();
        assert_eq!(d.permuted(&[2, 0, 3, 1]).canonical(), key);
        assert_eq!(key.to_dynkin().canonical(), key);
        let other = build_simple_chain(&SimpleChainSpec { d: 4, q: cfg().generic(), indices: vec![1] }).unwrap();
        assert_ne!(other.canonical(), key);
    }

    #[test]
    fn file_format_errors_carry_line_numbers() {
        let cases = [
            ("dim 2\nv 1 q\nv 2 q\ne 1 3 q\n", 4),
            ("dim 2\nv 1 q\nv 1 q\n", 3),
            ("dim 2\n# c\nv 1 qq\nv 2 q\n", 3),
            ("dim 2\nbogus\n", 2),
            ("dim 1\ngen q order\n", 2),
        ];
        for (text, line) in cases {
            match parse_diagram_file(text, cfg()) {
                Err(DiagramError::Format { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(parse_diagram_file("dim 2\nv 1 q\n", cfg()).is_err());
    }

    #[test]
    fn order_generator_substitutes_root() {
        let text = "dim 2\ngen q order 3\nv 1 -q^-1\nv 2 q\ne 1 2 -q\n";
        let d = parse_diagram_file(text, cfg()).unwrap().diagram().unwrap();
        assert_eq!(d.vertex(0), s("-z3^2"));
        assert_eq!(d.edge(0, 1), s("-z3"));
    }

    #[test]
    fn file_round_trip_and_json() {
        let d = a4().to_dynkin();
        let back = parse_diagram_file(&format_diagram_file(&d), cfg()).unwrap().diagram().unwrap();
        assert_eq!(back, d);
        let json = serde_json::to_string(&d.to_json()).unwrap();
        assert_eq!(
            json,
            r#"{"dim":4,"vertices":["q","q","q","q"],"edges":[[1,2,"q^-1"],[2,3,"q^-1"],[3,4,"q^-1"]]}"#
        );
    }

    fn arb_matrix(d: usize) -> impl Strategy<Value = BicharacterMatrix> {
        proptest::collection::vec((-3i64..4, 0i64..12), d * d).prop_map(move |cells| {
            BicharacterMatrix::from_fn(cfg(), d, |i, j| {
                let (f, t) = cells[i * d + j];
                cfg().scalar(f, t * 210)
            })
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn twist_invariance(m in arb_matrix(4), i in 0usize..4, j in 0usize..4, f in -5i64..5, t in 0i64..2520) {
            prop_assume!(i != j);
            let twisted = m.twist(i, j, cfg().scalar(f, t));
            prop_assert_eq!(twisted.to_dynkin(), m.to_dynkin());
        }

        #[test]
        fn chi_is_bilinear(m in arb_matrix(3), x in proptest::collection::vec(-4i64..5, 3), x2 in proptest::collection::vec(-4i64..5, 3), y in proptest::collection::vec(-4i64..5, 3)) {
            let sum: Vec<i64> = x.iter().zip(&x2).map(|(a, b)| a + b).collect();
            prop_assert_eq!(m.chi(&sum, &y).unwrap(), m.chi(&x, &y).unwrap() * m.chi(&x2, &y).unwrap());
            prop_assert_eq!(m.chi(&y, &sum).unwrap(), m.chi(&y, &x).unwrap() * m.chi(&y, &x2).unwrap());
        }

        #[test]
        fn simple_chain_relation(d in 3usize..8, f in 1i64..3, mask in 0u32..256) {
            let q = cfg().generic().pow(f);
            let indices: Vec<usize> = (1..=d).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            let c = build_simple_chain(&SimpleChainSpec { d, q, indices }).unwrap();
            for i in 1..d - 1 {
                prop_assert!((c.vertex(i).pow(2) * c.edge(i - 1, i) * c.edge(i, i + 1)).is_one());
            }
        }

        #[test]
        fn cartan_matrix_recheck(m in arb_matrix(3)) {
            if m.check_vertices().is_ok() {
                if let Some(a) = detect_cartan_type(&m).unwrap() {
                    for i in 0..3 {
                        for j in 0..3 {
                            if i != j {
                                prop_assert_eq!(m.get(i, i).pow(a[i][j]), m.get(i, j) * m.get(j, i));
                            }
                        }
                    }
                }
            }
        }

        #[test]
        fn canonical_under_random_permutation(m in arb_matrix(4), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
            let d = m.to_dynkin();
            prop_assert_eq!(d.permuted(&perm).canonical(), d.canonical());
        }
    }
}
