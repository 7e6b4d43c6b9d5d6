//! Reflections, exploration of the Weyl groupoid, roots and Weyl equivalence.
//!
//! Bases are stored as `d x d` row-major `i32` matrices whose rows are the
//! basis vectors in coordinates of the standard basis `E`.

use std::fmt;
use std::hash::BuildHasher;
use std::str::FromStr;
use std::sync::OnceLock;

use hashbrown::HashTable;
use rustc_hash::{FxBuildHasher, FxHashSet};
use serde_json::{json, Value};
use thiserror::Error;

use crate::diagram::{BicharacterMatrix, CanonicalDiagram, DiagramError, DynkinDiagram};
use crate::exec::Execution;
use crate::scalar::{gcd, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupoidError {
    #[error("reflection at letter {position} (s{index}) is undefined: no Cartan integer a_{index},{other}")]
    WordFailed { position: usize, index: usize, other: usize },
    #[error("letter {letter} out of range 1..={dim}")]
    Letter { letter: usize, dim: usize },
    #[error("groupoid is not full and finite ({0})")]
    NotFinite(String),
    #[error("dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cannot parse `{text}`: {message}")]
    Parse { text: String, message: String },
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

fn parse_error(text: &str, message: &str) -> GroupoidError {
    GroupoidError::Parse { text: text.to_string(), message: message.to_string() }
}

/// `-m` for the smallest `m >= 0` with `(1 + p + ... + p^m)(p^m r - 1) = 0`,
/// or `None` if there is no such `m`.
pub fn cartan_entry(p: Scalar, r: Scalar) -> Option<i64> {
    if p.torsion() != r.torsion() {
        return None;
    }
    let n = p.torsion().order() as i64;
    cartan_exponent(p.free_exp(), p.tor_exp() as i64, r.free_exp(), r.tor_exp() as i64, n)
}

fn cartan_exponent(pf: i64, pt: i64, rf: i64, rt: i64, n: i64) -> Option<i64> {
    // p has finite order k > 1: the geometric sum vanishes at m = k - 1
    let m2 = if pf == 0 {
        let k = n / gcd(n as u64, pt.rem_euclid(n) as u64) as i64;
        (k > 1).then_some(k - 1)
    } else {
        None
    };
    let m1 = if pf != 0 {
        if rf % pf != 0 {
            None
        } else {
            let m = -rf / pf;
            (m >= 0 && (m * pt + rt).rem_euclid(n) == 0).then_some(m)
        }
    } else if rf != 0 {
        None
    } else {
        solve_linear_congruence(pt, -rt, n)
    };
    match (m1, m2) {
        (Some(a), Some(b)) => Some(-a.min(b)),
        (Some(a), None) | (None, Some(a)) => Some(-a),
        (None, None) => None,
    }
}

/// Smallest `m >= 0` with `a m = b (mod n)`.
fn solve_linear_congruence(a: i64, b: i64, n: i64) -> Option<i64> {
    let a = a.rem_euclid(n);
    let b = b.rem_euclid(n);
    let g = gcd(a as u64, n as u64) as i64;
    if b % g != 0 {
        return None;
    }
    let n2 = n / g;
    if n2 == 1 {
        return Some(0);
    }
    let inv = mod_inverse(a / g, n2)?;
    Some(((b / g) % n2 * inv).rem_euclid(n2))
}

fn mod_inverse(a: i64, n: i64) -> Option<i64> {
    let (mut old_r, mut r) = (a.rem_euclid(n), n);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(n))
}

/// An ordered basis of `Z^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Basis {
    dim: usize,
    coords: Vec<i32>,
}

impl Basis {
    pub fn standard(dim: usize) -> Basis {
        let mut coords = vec![0; dim * dim];
        for i in 0..dim {
            coords[i * dim + i] = 1;
        }
        Basis { dim, coords }
    }

    pub fn from_vectors(vectors: &[Vec<i32>]) -> Result<Basis, GroupoidError> {
        let dim = vectors.len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(GroupoidError::Parse { text: format!("{vectors:?}"), message: "not a square matrix".into() });
        }
        Ok(Basis { dim, coords: vectors.concat() })
    }

    fn from_slice(dim: usize, coords: &[i32]) -> Basis {
        Basis { dim, coords: coords.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, i: usize) -> &[i32] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[i32]> {
        self.coords.chunks(self.dim)
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords
    }

    /// Inverse matrix (row-major), if the vectors form a `Z`-basis.
    pub fn inverse(&self) -> Option<Vec<i64>> {
        let d = self.dim;
        let mut a: Vec<Vec<i64>> = self.vectors().map(|v| v.iter().map(|&x| x as i64).collect()).collect();
        let mut inv: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| (i == j) as i64).collect()).collect();
        for c in 0..d {
            // Euclid on column c among rows c..d
            loop {
                let pivot = (c..d).filter(|&r| a[r][c] != 0).min_by_key(|&r| a[r][c].abs())?;
                a.swap(c, pivot);
                inv.swap(c, pivot);
                let mut done = true;
                for r in c + 1..d {
                    if a[r][c] != 0 {
                        let f = a[r][c] / a[c][c];
                        for k in 0..d {
                            a[r][k] -= f * a[c][k];
                            inv[r][k] -= f * inv[c][k];
                        }
                        if a[r][c] != 0 {
                            done = false;
                        }
                    }
                }
                if done {
                    break;
                }
            }
            if a[c][c].abs() != 1 {
                return None;
            }
            if a[c][c] < 0 {
                for k in 0..d {
                    a[c][k] = -a[c][k];
                    inv[c][k] = -inv[c][k];
                }
            }
        }
        for c in (0..d).rev() {
            for r in 0..c {
                let f = a[r][c];
                if f != 0 {
                    for k in 0..d {
                        a[r][k] -= f * a[c][k];
                        inv[r][k] -= f * inv[c][k];
                    }
                }
            }
        }
        Some(inv.concat())
    }

    /// Coordinates of `v` (given in `E`-coordinates) with respect to this basis.
    pub fn coordinates_of(&self, v: &[i32]) -> Option<Vec<i64>> {
        let d = self.dim;
        let inv = self.inverse()?;
        Some((0..d).map(|k| (0..d).map(|i| v[i] as i64 * inv[i * d + k]).sum()).collect())
    }

    /// Tuple in compressed notation, e.g. `(-1,12,3,4)`.
    pub fn to_compressed(&self) -> String {
        let parts: Vec<String> = self.vectors().map(format_vector).collect();
        format!("({})", parts.join(","))
    }

    pub fn parse_compressed(text: &str, dim: usize) -> Result<Basis, GroupoidError> {
        let t = text.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| parse_error(text, "expected parenthesised tuple"))?;
        let vectors = split_top_level(inner)
            .iter()
            .map(|part| parse_vector(part, dim))
            .collect::<Result<Vec<_>, _>>()?;
        if vectors.len() != dim {
            return Err(parse_error(text, &format!("expected {dim} vectors")));
        }
        Basis::from_vectors(&vectors)
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_compressed())
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (k, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..k]);
                start = k + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// `m_1 e_1 + m_2 e_2 + ...` written as `1^m1 2^m2 ...`; exponents 1 and
/// zero terms are dropped, negative vectors get a leading `-`. Vectors of
/// mixed sign, or of dimension above 9, use `[a,b,...]`.
pub fn format_vector(v: &[i32]) -> String {
    let nonneg = v.iter().all(|&x| x >= 0);
    let nonpos = v.iter().all(|&x| x <= 0);
    if v.len() > 9 || !(nonneg || nonpos) || v.iter().any(|&x| x.abs() > 9) {
        let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        return format!("[{}]", parts.join(","));
    }
    if nonneg && nonpos {
        return "0".into();
    }
    let mut out = String::new();
    if !nonneg {
        out.push('-');
    }
    for (i, &x) in v.iter().enumerate() {
        let m = x.abs();
        if m == 0 {
            continue;
        }
        out.push_str(&(i + 1).to_string());
        if m > 1 {
            out.push('^');
            out.push_str(&m.to_string());
        }
    }
    out
}

pub fn parse_vector(text: &str, dim: usize) -> Result<Vec<i32>, GroupoidError> {
    let t = text.trim().replace('\u{2212}', "-");
    if let Some(inner) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        let v = inner
            .split(',')
            .map(|x| x.trim().parse::<i32>().map_err(|_| parse_error(text, "bad integer")))
            .collect::<Result<Vec<_>, _>>()?;
        if v.len() != dim {
            return Err(parse_error(text, "wrong length"));
        }
        return Ok(v);
    }
    if t == "0" {
        return Ok(vec![0; dim]);
    }
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, t.as_str()),
    };
    let mut v = vec![0; dim];
    let chars: Vec<char> = body.chars().collect();
    if chars.is_empty() {
        return Err(parse_error(text, "empty vector"));
    }
    let mut k = 0;
    while k < chars.len() {
        let i = chars[k].to_digit(10).ok_or_else(|| parse_error(text, "expected index digit"))? as usize;
        if i == 0 || i > dim {
            return Err(parse_error(text, &format!("index {i} out of range 1..={dim}")));
        }
        k += 1;
        let mut m = 1;
        if k < chars.len() && chars[k] == '^' {
            m = chars
                .get(k + 1)
                .and_then(|c| c.to_digit(10))
                .ok_or_else(|| parse_error(text, "expected exponent digit"))? as i32;
            k += 2;
        }
        v[i - 1] += sign * m;
    }
    Ok(v)
}

/// A product of simple reflections, written as printed: the rightmost
/// letter acts first. Letters are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ReflectionWord {
    letters: Vec<usize>,
}

impl ReflectionWord {
    pub fn new(letters: Vec<usize>) -> ReflectionWord {
        ReflectionWord { letters }
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Letters in the order they act.
    pub fn application_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.letters.iter().rev().copied()
    }
}

impl FromStr for ReflectionWord {
    type Err = GroupoidError;

    /// Accepts `s4s3s2s1`, `s_4 s_3`, or plain `4 3 2 1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned = s.replace(['s', '_'], " ");
        let letters = cleaned
            .split_whitespace()
            .map(|w| w.parse::<usize>().map_err(|_| parse_error(s, &format!("bad letter `{w}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ReflectionWord { letters })
    }
}

impl fmt::Display for ReflectionWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "s{l}")?;
        }
        Ok(())
    }
}

/// Exploration limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_bases: usize,
    pub max_coeff: i64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_bases: 1_000_000, max_coeff: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapReason {
    Bases,
    Coefficient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    FullFinite,
    /// The Cartan integer `a_{index,other}` does not exist at `basis`
    /// (0-based indices).
    NotFull { basis: Basis, index: usize, other: usize },
    /// Presumed infinite; never a proof.
    CapExceeded(CapReason),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::FullFinite => "full_finite",
            Verdict::NotFull { .. } => "not_full",
            Verdict::CapExceeded(_) => "cap_exceeded",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::FullFinite => write!(f, "full_finite"),
            Verdict::NotFull { basis, index, other } => {
                write!(f, "not_full (a_{},{} undefined at {})", index + 1, other + 1, basis)
            }
            Verdict::CapExceeded(CapReason::Bases) => write!(f, "cap_exceeded (too many bases)"),
            Verdict::CapExceeded(CapReason::Coefficient) => write!(f, "cap_exceeded (coefficient too large)"),
        }
    }
}

/// Exponent form of a bicharacter, for fast Gram matrices.
pub(crate) struct Form {
    d: usize,
    n: i64,
    free: Vec<i64>,
    tor: Vec<i64>,
}

impl Form {
    pub(crate) fn new(m: &BicharacterMatrix) -> Form {
        Form {
            d: m.dim(),
            n: m.torsion().order() as i64,
            free: m.entries().iter().map(|s| s.free_exp()).collect(),
            tor: m.entries().iter().map(|s| s.tor_exp() as i64).collect(),
        }
    }

    /// `G = F A F^T` for both exponent matrices; torsion reduced mod `N`.
    pub(crate) fn gram(&self, f: &[i32], gf: &mut [i64], gt: &mut [i64]) {
        let d = self.d;
        let mut tf = [0i64; 64];
        let mut tt = [0i64; 64];
        for k in 0..d {
            for j in 0..d {
                let (mut sf, mut st) = (0i64, 0i64);
                for i in 0..d {
                    let x = f[k * d + i] as i64;
                    if x != 0 {
                        sf += x * self.free[i * d + j];
                        st += x * self.tor[i * d + j];
                    }
                }
                tf[k * d + j] = sf;
                tt[k * d + j] = st.rem_euclid(self.n);
            }
        }
        for k in 0..d {
            for l in 0..d {
                let (mut sf, mut st) = (0i64, 0i64);
                for j in 0..d {
                    let y = f[l * d + j] as i64;
                    if y != 0 {
                        sf += tf[k * d + j] * y;
                        st += tt[k * d + j] * y;
                    }
                }
                gf[k * d + l] = sf;
                gt[k * d + l] = st.rem_euclid(self.n);
            }
        }
    }

    fn gram_any(&self, f: &[i32], gf: &mut [i64], gt: &mut [i64]) {
        if self.d <= 8 {
            return self.gram(f, gf, gt);
        }
        let d = self.d;
        for k in 0..d {
            for l in 0..d {
                let (mut sf, mut st) = (0i64, 0i64);
                for i in 0..d {
                    for j in 0..d {
                        let c = f[k * d + i] as i64 * f[l * d + j] as i64;
                        sf += c * self.free[i * d + j];
                        st = (st + c * self.tor[i * d + j]).rem_euclid(self.n);
                    }
                }
                gf[k * d + l] = sf;
                gt[k * d + l] = st;
            }
        }
    }

    /// Cartan integers `a_ij` for all `j` at a basis with Gram matrix `g`;
    /// `Err(j)` names the first undefined one.
    fn cartan_row(&self, gf: &[i64], gt: &[i64], i: usize, out: &mut [i64]) -> Result<(), usize> {
        let d = self.d;
        let (pf, pt) = (gf[i * d + i], gt[i * d + i]);
        for j in 0..d {
            if j == i {
                out[j] = 2;
                continue;
            }
            let rf = gf[i * d + j] + gf[j * d + i];
            let rt = gt[i * d + j] + gt[j * d + i];
            out[j] = cartan_exponent(pf, pt, rf, rt, self.n).ok_or(j)?;
        }
        Ok(())
    }

    /// Writes `s_i(F)` into `out`; returns the largest absolute coordinate.
    fn reflect_into(&self, f: &[i32], a: &[i64], i: usize, out: &mut [i32]) -> i64 {
        let d = self.d;
        let mut max = 0i64;
        for j in 0..d {
            for k in 0..d {
                let v = if j == i {
                    -(f[i * d + k] as i64)
                } else {
                    f[j * d + k] as i64 - a[j] * f[i * d + k] as i64
                };
                max = max.max(v.abs());
                out[j * d + k] = v.clamp(i32::MIN as i64, i32::MAX as i64) as i32;
            }
        }
        max
    }
}

/// Outcome of [`explore`].
#[derive(Debug, Clone)]
pub struct GroupoidResult {
    dim: usize,
    arena: Vec<i32>,
    verdict: Verdict,
    depth: usize,
    roots: OnceLock<Vec<Vec<i32>>>,
}

impl GroupoidResult {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn verdict(&self) -> &Verdict {
        &self.verdict
    }

    pub fn is_full_finite(&self) -> bool {
        self.verdict == Verdict::FullFinite
    }

    /// Number of BFS levels below `E`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_bases(&self) -> usize {
        self.arena.len() / (self.dim * self.dim)
    }

    /// Reached bases in BFS order, as row-major coordinate slices.
    pub fn basis_slices(&self) -> impl Iterator<Item = &[i32]> {
        self.arena.chunks(self.dim * self.dim)
    }

    pub fn bases(&self) -> impl Iterator<Item = Basis> + '_ {
        self.basis_slices().map(|s| Basis::from_slice(self.dim, s))
    }

    /// All vectors of all reached bases and their negatives, sorted.
    pub fn roots(&self) -> &[Vec<i32>] {
        self.roots.get_or_init(|| {
            let mut set: FxHashSet<&[i32]> = FxHashSet::default();
            for v in self.arena.chunks(self.dim) {
                set.insert(v);
            }
            let mut roots: Vec<Vec<i32>> = Vec::with_capacity(2 * set.len());
            for v in set {
                roots.push(v.to_vec());
                roots.push(v.iter().map(|x| -x).collect());
            }
            roots.sort_unstable();
            roots.dedup();
            roots
        })
    }

    pub fn num_roots(&self) -> usize {
        self.roots().len()
    }

    pub fn contains_root(&self, v: &[i32]) -> bool {
        self.roots().binary_search_by(|r| r.as_slice().cmp(v)).is_ok()
    }

    /// Roots with all coordinates nonnegative.
    pub fn positive_roots(&self) -> Result<Vec<Vec<i32>>, GroupoidError> {
        if !self.is_full_finite() {
            return Err(GroupoidError::NotFinite(self.verdict.to_string()));
        }
        let mut pos: Vec<Vec<i32>> = self.roots().iter().filter(|r| r.iter().all(|&x| x >= 0)).cloned().collect();
        pos.sort_by_key(|r| (r.iter().sum::<i32>(), std::cmp::Reverse(r.clone())));
        Ok(pos)
    }

    pub fn to_json(&self) -> Value {
        let positive = self.positive_roots().unwrap_or_default();
        json!({
            "verdict": self.verdict.name(),
            "num_bases": self.num_bases(),
            "num_roots": self.num_roots(),
            "positive_roots": positive,
            "depth": self.depth,
        })
    }
}

fn is_positive(v: &[i32]) -> bool {
    v.iter().all(|&x| x >= 0) && v.iter().any(|&x| x > 0)
}

fn result(dim: usize, arena: Vec<i32>, verdict: Verdict, depth: usize) -> GroupoidResult {
    GroupoidResult { dim, arena, verdict, depth, roots: OnceLock::new() }
}

/// Walks upward from `E`, always reflecting at the first basis vector that
/// is still positive. In a finite groupoid this ends after `|Delta^+|` steps
/// at a basis of negative vectors; infinite ones run into a cap quickly.
fn probe(form: &Form, caps: Caps) -> Option<GroupoidResult> {
    let d = form.d;
    let dd = d * d;
    let mut cur = Basis::standard(d).coords;
    let mut next = vec![0i32; dd];
    let (mut gf, mut gt) = (vec![0i64; dd], vec![0i64; dd]);
    let mut a = vec![0i64; d];
    let mut path = cur.clone();
    let mut seen: FxHashSet<Vec<i32>> = FxHashSet::default();
    seen.insert(cur.clone());
    loop {
        let i = (0..d).find(|&i| is_positive(&cur[i * d..(i + 1) * d]))?;
        form.gram_any(&cur, &mut gf, &mut gt);
        if let Err(j) = form.cartan_row(&gf, &gt, i, &mut a) {
            let basis = Basis::from_slice(d, &cur);
            let depth = seen.len() - 1;
            return Some(result(d, path, Verdict::NotFull { basis, index: i, other: j }, depth));
        }
        if form.reflect_into(&cur, &a, i, &mut next) > caps.max_coeff {
            let depth = seen.len() - 1;
            return Some(result(d, path, Verdict::CapExceeded(CapReason::Coefficient), depth));
        }
        if !seen.insert(next.clone()) {
            return None;
        }
        path.extend_from_slice(&next);
        if seen.len() > caps.max_bases {
            let depth = seen.len() - 1;
            return Some(result(d, path, Verdict::CapExceeded(CapReason::Bases), depth));
        }
        std::mem::swap(&mut cur, &mut next);
    }
}

/// Breadth-first exploration of all bases reachable from `E`.
///
/// Levels are processed in lexicographic order of the basis matrices, so
/// the result is deterministic. A cheap upward walk runs first and settles
/// most infinite cases early.
pub fn explore(m: &BicharacterMatrix, caps: Caps) -> GroupoidResult {
    let form = Form::new(m);
    if let Some(early) = probe(&form, caps) {
        return early;
    }
    bfs(&form, caps)
}

fn bfs(form: &Form, caps: Caps) -> GroupoidResult {
    let d = form.d;
    let dd = d * d;
    let hasher = FxBuildHasher;
    let mut arena: Vec<i32> = Basis::standard(d).coords;
    let mut table: HashTable<u32> = HashTable::new();
    table.insert_unique(hasher.hash_one(&arena[..dd]), 0, |_| unreachable!());
    let mut level: Vec<u32> = vec![0];
    let mut depth = 0;
    let mut cur = vec![0i32; dd];
    let mut next = vec![0i32; dd];
    let (mut gf, mut gt) = (vec![0i64; dd], vec![0i64; dd]);
    let mut a = vec![0i64; d];
    loop {
        let mut new_level = Vec::new();
        for &k in &level {
            let k = k as usize;
            cur.copy_from_slice(&arena[k * dd..(k + 1) * dd]);
            form.gram_any(&cur, &mut gf, &mut gt);
            for i in 0..d {
                if let Err(j) = form.cartan_row(&gf, &gt, i, &mut a) {
                    let basis = Basis::from_slice(d, &cur);
                    return result(d, arena, Verdict::NotFull { basis, index: i, other: j }, depth);
                }
                if form.reflect_into(&cur, &a, i, &mut next) > caps.max_coeff {
                    return result(d, arena, Verdict::CapExceeded(CapReason::Coefficient), depth);
                }
                let h = hasher.hash_one(&next[..]);
                let found = table.find(h, |&idx| {
                    let idx = idx as usize;
                    arena[idx * dd..(idx + 1) * dd] == next[..]
                });
                if found.is_none() {
                    let idx = (arena.len() / dd) as u32;
                    arena.extend_from_slice(&next);
                    let arena_ref = &arena;
                    table.insert_unique(h, idx, |&x| {
                        let x = x as usize;
                        hasher.hash_one(&arena_ref[x * dd..(x + 1) * dd])
                    });
                    new_level.push(idx);
                    if arena.len() / dd > caps.max_bases {
                        return result(d, arena, Verdict::CapExceeded(CapReason::Bases), depth + 1);
                    }
                }
            }
        }
        if new_level.is_empty() {
            return result(d, arena, Verdict::FullFinite, depth);
        }
        new_level.sort_unstable_by(|&x, &y| {
            let (x, y) = (x as usize, y as usize);
            arena[x * dd..(x + 1) * dd].cmp(&arena[y * dd..(y + 1) * dd])
        });
        level = new_level;
        depth += 1;
    }
}

/// The Cartan integer `a_ij` at basis `F` (0-based indices).
pub fn cartan_integer(m: &BicharacterMatrix, f: &Basis, i: usize, j: usize) -> Option<i64> {
    let p = chi_vectors(m, f.vector(i), f.vector(i));
    let r = chi_vectors(m, f.vector(i), f.vector(j)) * chi_vectors(m, f.vector(j), f.vector(i));
    cartan_entry(p, r)
}

fn chi_vectors(m: &BicharacterMatrix, x: &[i32], y: &[i32]) -> Scalar {
    let x: Vec<i64> = x.iter().map(|&v| v as i64).collect();
    let y: Vec<i64> = y.iter().map(|&v| v as i64).collect();
    m.chi(&x, &y).expect("basis vectors have dimension d")
}

/// `s_i(F)`; `Err(j)` if `a_ij` is undefined.
pub fn reflect(m: &BicharacterMatrix, f: &Basis, i: usize) -> Result<Basis, GroupoidError> {
    let form = Form::new(m);
    let d = f.dim;
    let dd = d * d;
    let (mut gf, mut gt) = (vec![0i64; dd], vec![0i64; dd]);
    form.gram_any(&f.coords, &mut gf, &mut gt);
    let mut a = vec![0i64; d];
    form.cartan_row(&gf, &gt, i, &mut a)
        .map_err(|j| GroupoidError::WordFailed { position: 1, index: i + 1, other: j + 1 })?;
    let mut out = vec![0i32; dd];
    form.reflect_into(&f.coords, &a, i, &mut out);
    Ok(Basis { dim: d, coords: out })
}

/// The diagram of `chi` read at `F`: `p_ij = chi(f_i, f_j)`.
pub fn diagram_at(m: &BicharacterMatrix, f: &Basis) -> DynkinDiagram {
    matrix_at(m, f).to_dynkin()
}

pub fn matrix_at(m: &BicharacterMatrix, f: &Basis) -> BicharacterMatrix {
    BicharacterMatrix::from_fn(m.torsion(), f.dim, |i, j| chi_vectors(m, f.vector(i), f.vector(j)))
        .expect("dimension matches")
}

/// Bases visited by a word, starting with `E`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordTrace {
    pub bases: Vec<Basis>,
}

impl WordTrace {
    pub fn last(&self) -> &Basis {
        self.bases.last().expect("trace starts with E")
    }
}

pub fn apply_word(m: &BicharacterMatrix, word: &ReflectionWord) -> Result<WordTrace, GroupoidError> {
    let d = m.dim();
    let mut bases = vec![Basis::standard(d)];
    for (position, letter) in word.application_order().enumerate() {
        if letter == 0 || letter > d {
            return Err(GroupoidError::Letter { letter, dim: d });
        }
        let next = reflect(m, bases.last().expect("nonempty"), letter - 1).map_err(|e| match e {
            GroupoidError::WordFailed { index, other, .. } => GroupoidError::WordFailed { position: position + 1, index, other },
            other => other,
        })?;
        bases.push(next);
    }
    Ok(WordTrace { bases })
}

/// If `F = (E \ {e_k}) u {-alpha}` with `alpha` a nonzero vector with
/// nonnegative coordinates, returns `(k, alpha)`.
pub fn induction_shape(f: &Basis) -> Option<(usize, Vec<i32>)> {
    let d = f.dim;
    let mut present = vec![false; d];
    let mut negative = None;
    for v in f.vectors() {
        let unit = v.iter().filter(|&&x| x != 0).count() == 1 && v.iter().any(|&x| x == 1);
        if unit {
            let k = v.iter().position(|&x| x == 1).expect("unit vector");
            if present[k] {
                return None;
            }
            present[k] = true;
        } else if v.iter().all(|&x| x <= 0) && v.iter().any(|&x| x < 0) {
            if negative.is_some() {
                return None;
            }
            negative = Some(v.iter().map(|x| -x).collect::<Vec<i32>>());
        } else {
            return None;
        }
    }
    let alpha = negative?;
    let missing: Vec<usize> = (0..d).filter(|&k| !present[k]).collect();
    (missing.len() == 1).then(|| (missing[0], alpha))
}

/// Checks the finiteness-by-induction certificate: `w(E)` consists of
/// `d - 1` vectors of `E` and one negative root, and the bicharacter
/// restricted to those `d - 1` vectors is full and finite.
pub fn witnesses_finiteness_induction(m: &BicharacterMatrix, word: &ReflectionWord, caps: Caps) -> Result<bool, GroupoidError> {
    let trace = apply_word(m, word)?;
    let Some((missing, _alpha)) = induction_shape(trace.last()) else {
        return Ok(false);
    };
    if m.dim() == 1 {
        return Ok(true);
    }
    let rest: Vec<usize> = (0..m.dim()).filter(|&k| k != missing).collect();
    Ok(explore(&m.restrict(&rest)?, caps).is_full_finite())
}

/// Canonical diagrams at all reached bases.
pub fn orbit_diagrams(m: &BicharacterMatrix, r: &GroupoidResult, exec: Execution) -> Result<FxHashSet<CanonicalDiagram>, GroupoidError> {
    if !r.is_full_finite() {
        return Err(GroupoidError::NotFinite(r.verdict().to_string()));
    }
    let form = Form::new(m);
    let d = r.dim;
    let dd = d * d;
    let (mut gf, mut gt) = (vec![0i64; dd], vec![0i64; dd]);
    // dedupe raw (vertex, edge) labels before the permutation search
    let mut raw: FxHashSet<Vec<(i64, i64)>> = FxHashSet::default();
    for f in r.basis_slices() {
        form.gram_any(f, &mut gf, &mut gt);
        let mut cells = Vec::with_capacity(dd);
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    cells.push((gf[i * d + i], gt[i * d + i]));
                } else {
                    cells.push((gf[i * d + j] + gf[j * d + i], (gt[i * d + j] + gt[j * d + i]).rem_euclid(form.n)));
                }
            }
        }
        raw.insert(cells);
    }
    let torsion = m.torsion();
    let raw: Vec<Vec<(i64, i64)>> = raw.into_iter().collect();
    let canon = exec.map(&raw, |cells| {
        let vertices: Vec<Scalar> = (0..d).map(|i| torsion.scalar(cells[i * d + i].0, cells[i * d + i].1)).collect();
        let mut edges = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                edges.push((i, j, torsion.scalar(cells[i * d + j].0, cells[i * d + j].1)));
            }
        }
        DynkinDiagram::new(torsion, vertices, &edges).expect("valid diagram").canonical()
    });
    Ok(canon.into_iter().collect())
}

/// Canonical diagrams of the objects reachable from `E`, found by searching
/// diagrams instead of bases: the diagram at `s_i(F)` depends only on the
/// diagram at `F`. Cheap even when the groupoid has millions of bases, but
/// says nothing about finiteness. Fails if a reflection is undefined or
/// more than `max_diagrams` diagrams turn up.
pub fn diagram_orbit(m: &BicharacterMatrix, max_diagrams: usize) -> Result<FxHashSet<CanonicalDiagram>, GroupoidError> {
    let d = m.dim();
    let e = Basis::standard(d);
    let start = m.to_dynkin().canonical();
    let mut seen: FxHashSet<CanonicalDiagram> = FxHashSet::default();
    seen.insert(start.clone());
    let mut queue = vec![start];
    while let Some(c) = queue.pop() {
        let rep = c.to_dynkin().to_bicharacter();
        for i in 0..d {
            let f = reflect(&rep, &e, i)?;
            let next = diagram_at(&rep, &f).canonical();
            if seen.insert(next.clone()) {
                if seen.len() > max_diagrams {
                    return Err(GroupoidError::NotFinite(format!("more than {max_diagrams} diagrams")));
                }
                queue.push(next);
            }
        }
    }
    Ok(seen)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Smallest canonical diagram common to both orbits.
    pub shared: Option<CanonicalDiagram>,
}

/// Two full and finite bicharacters are Weyl equivalent when the sets of
/// diagrams over their reachable bases meet.
pub fn weyl_equivalent(m1: &BicharacterMatrix, m2: &BicharacterMatrix, caps: Caps) -> Result<Equivalence, GroupoidError> {
    if m1.dim() != m2.dim() {
        return Err(GroupoidError::DimensionMismatch(m1.dim(), m2.dim()));
    }
    for m in [m1, m2] {
        let r = explore(m, caps);
        if !r.is_full_finite() {
            return Err(GroupoidError::NotFinite(r.verdict().to_string()));
        }
    }
    let o1 = diagram_orbit(m1, caps.max_bases)?;
    let o2 = diagram_orbit(m2, caps.max_bases)?;
    let shared = o1.intersection(&o2).min().cloned();
    Ok(Equivalence { equivalent: shared.is_some(), shared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build_simple_chain, parse_diagram_file, SimpleChainSpec};
    use crate::scalar::{parse_scalar, TorsionConfig};
    use proptest::prelude::*;

    fn cfg() -> TorsionConfig {
        TorsionConfig::default()
    }

    fn s(text: &str) -> Scalar {
        parse_scalar(text, cfg()).unwrap()
    }

    fn load(text: &str) -> BicharacterMatrix {
        parse_diagram_file(text, cfg()).unwrap().matrix().unwrap()
    }

    fn a2() -> BicharacterMatrix {
        load("dim 2\nv 1 q\nv 2 q\ne 1 2 q^-1\n")
    }

    fn a4() -> BicharacterMatrix {
        load("dim 4\nv 1 q\nv 2 q\nv 3 q\nv 4 q\ne 1 2 q^-1\ne 2 3 q^-1\ne 3 4 q^-1\n")
    }

    #[test]
    fn cartan_entry_examples() {
        assert_eq!(cartan_entry(s("q"), s("q^-1")), Some(-1));
        assert_eq!(cartan_entry(s("q"), s("q^-2")), Some(-2));
        assert_eq!(cartan_entry(s("-1"), s("q")), Some(-1));
        assert_eq!(cartan_entry(s("q"), s("q")), None);
        assert_eq!(cartan_entry(s("q"), s("1")), Some(0));
        assert_eq!(cartan_entry(s("1"), s("q")), None);
        assert_eq!(cartan_entry(s("1"), s("1")), Some(0));
        // p of order 3: m = 2 at the latest
        assert_eq!(cartan_entry(s("z3"), s("q")), Some(-2));
        assert_eq!(cartan_entry(s("z3"), s("z3^2")), Some(-1));
        assert_eq!(cartan_entry(s("z5"), s("z5^2")), Some(-3));
    }

    #[test]
    fn congruence_solver() {
        assert_eq!(solve_linear_congruence(3, 6, 9), Some(2));
        assert_eq!(solve_linear_congruence(2, 1, 4), None);
        assert_eq!(solve_linear_congruence(0, 0, 4), Some(0));
        assert_eq!(solve_linear_congruence(5, 3, 7), Some(2));
    }

    #[test]
    fn a2_reflection_and_exploration() {
        let m = a2();
        let f = reflect(&m, &Basis::standard(2), 0).unwrap();
        assert_eq!(f.to_compressed(), "(-1,12)");
        assert_eq!(reflect(&m, &f, 0).unwrap(), Basis::standard(2));
        let r = explore(&m, Caps::default());
        assert!(r.is_full_finite());
        assert_eq!(r.num_bases(), 6);
        assert_eq!(r.positive_roots().unwrap(), vec![vec![1, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn a4_counts() {
        let r = explore(&a4(), Caps::default());
        assert!(r.is_full_finite());
        assert_eq!(r.num_bases(), 120);
        assert_eq!(r.positive_roots().unwrap().len(), 10);
    }

    #[test]
    fn rank_one() {
        let m = BicharacterMatrix::new(cfg(), 1, vec![s("q")]).unwrap();
        let r = explore(&m, Caps::default());
        assert!(r.is_full_finite());
        assert_eq!(r.positive_roots().unwrap(), vec![vec![1]]);
    }

    #[test]
    fn infinite_and_non_full_examples() {
        // a_12 a_21 = 4: affine, presumed infinite
        let affine = load("dim 2\nv 1 q\nv 2 q\ne 1 2 q^-2\n");
        assert_eq!(explore(&affine, Caps::default()).verdict(), &Verdict::CapExceeded(CapReason::Coefficient));
        // q q^m q^-1... with generic edge q no Cartan integer exists
        let bad = load("dim 2\nv 1 q\nv 2 q\ne 1 2 q\n");
        assert!(matches!(explore(&bad, Caps::default()).verdict(), Verdict::NotFull { index: 0, other: 1, .. }));
        let r = explore(&affine, Caps { max_bases: 5, max_coeff: i64::MAX });
        assert_eq!(r.verdict(), &Verdict::CapExceeded(CapReason::Bases));
    }

    #[test]
    fn compressed_notation() {
        let b = Basis::parse_compressed("(-12^23^24,2,4,3)", 4).unwrap();
        assert_eq!(b.vector(0), &[-1, -2, -2, -1]);
        assert_eq!(b.to_compressed(), "(-12^23^24,2,4,3)");
        assert_eq!(parse_vector("\u{2212}1234", 4).unwrap(), vec![-1, -1, -1, -1]);
        assert_eq!(format_vector(&[1, -1]), "[1,-1]");
        assert_eq!(parse_vector("[1,-1]", 2).unwrap(), vec![1, -1]);
        assert_eq!(format_vector(&[0, 0]), "0");
        assert!(parse_vector("5", 4).is_err());
        assert!(Basis::parse_compressed("(1,2)", 3).is_err());
    }

    #[test]
    fn words() {
        let w: ReflectionWord = "s4s3s2s1".parse().unwrap();
        assert_eq!(w.letters(), &[4, 3, 2, 1]);
        assert_eq!(w.application_order().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(w.to_string(), "s4s3s2s1");
        let empty = apply_word(&a4(), &ReflectionWord::default()).unwrap();
        assert_eq!(empty.bases, vec![Basis::standard(4)]);
        assert!(matches!(apply_word(&a4(), &"5".parse().unwrap()), Err(GroupoidError::Letter { letter: 5, dim: 4 })));
    }

    #[test]
    fn word_failure_reports_position() {
        let bad = load("dim 2\nv 1 q\nv 2 q\ne 1 2 q\n");
        let err = apply_word(&bad, &"1 1".parse().unwrap()).unwrap_err();
        assert_eq!(err, GroupoidError::WordFailed { position: 1, index: 1, other: 2 });
    }

    #[test]
    fn induction_certificate() {
        assert!(!witnesses_finiteness_induction(&a4(), &ReflectionWord::default(), Caps::default()).unwrap());
        // s2 s1 on A_2 maps E to (e2, -(e1+e2))
        let w: ReflectionWord = "2 1".parse().unwrap();
        assert_eq!(apply_word(&a2(), &w).unwrap().last().to_compressed(), "(2,-12)");
        assert!(witnesses_finiteness_induction(&a2(), &w, Caps::default()).unwrap());
    }

    #[test]
    fn inverse_of_basis() {
        let b = Basis::parse_compressed("(-12^23^24,2,4,3)", 4).unwrap();
        let inv = b.inverse().unwrap();
        for (k, v) in b.vectors().enumerate() {
            let c = b.coordinates_of(v).unwrap();
            for (l, x) in c.iter().enumerate() {
                assert_eq!(*x, (k == l) as i64);
            }
        }
        assert_eq!(inv.len(), 16);
        assert!(Basis::from_vectors(&[vec![2, 0], vec![0, 1]]).unwrap().inverse().is_none());
    }

    #[test]
    fn simple_chain_equivalence() {
        let q = cfg().generic();
        let c = |d, q, idx: Vec<usize>| build_simple_chain(&SimpleChainSpec { d, q, indices: idx }).unwrap().to_bicharacter();
        let e = weyl_equivalent(&c(4, q, vec![1]), &c(4, q.inv(), vec![1, 2, 3, 4]), Caps::default()).unwrap();
        assert!(e.equivalent);
        let e = weyl_equivalent(&c(4, q, vec![1]), &c(4, q, vec![]), Caps::default()).unwrap();
        assert!(!e.equivalent);
    }

    #[test]
    fn diagram_orbit_matches_basis_orbit() {
        let z3 = cfg().root_of_unity(3).unwrap();
        let chains = [(4, cfg().generic(), vec![1, 3]), (4, z3, vec![2]), (5, z3.neg(), vec![1, 2, 5])];
        for (d, q, idx) in chains {
            let m = build_simple_chain(&SimpleChainSpec { d, q, indices: idx }).unwrap().to_bicharacter();
            let r = explore(&m, Caps::default());
            let by_bases = orbit_diagrams(&m, &r, Execution::Sequential).unwrap();
            assert_eq!(diagram_orbit(&m, 10_000).unwrap(), by_bases);
        }
        // an undefined reflection makes the orbit undefined
        let bad = load("dim 2\nv 1 q\nv 2 q\ne 1 2 q\n");
        assert!(diagram_orbit(&bad, 100).is_err());
    }

    fn twisted(m: &BicharacterMatrix, seed: &[(usize, usize, i64, i64)]) -> BicharacterMatrix {
        let mut out = m.clone();
        for &(i, j, f, t) in seed {
            if i != j && i < m.dim() && j < m.dim() {
                out = out.twist(i, j, cfg().scalar(f, t));
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn twist_invariance_of_explore(seed in proptest::collection::vec((0usize..4, 0usize..4, -3i64..3, 0i64..2520), 1..5)) {
            let m = a4();
            let t = twisted(&m, &seed);
            let (r1, r2) = (explore(&m, Caps::default()), explore(&t, Caps::default()));
            prop_assert_eq!(r1.verdict(), r2.verdict());
            prop_assert_eq!(r1.roots(), r2.roots());
            let b1: Vec<Basis> = r1.bases().collect();
            let b2: Vec<Basis> = r2.bases().collect();
            prop_assert_eq!(b1, b2);
        }

        #[test]
        fn double_reflection_is_identity(steps in proptest::collection::vec(0usize..4, 0..12), i in 0usize..4) {
            let m = a4();
            let mut f = Basis::standard(4);
            for k in steps {
                f = reflect(&m, &f, k).unwrap();
            }
            prop_assert_eq!(reflect(&m, &reflect(&m, &f, i).unwrap(), i).unwrap(), f);
        }
    }
}
