//! Ising and QUBO problem forms and the exact transforms between them.
//!
//! The Ising energy carries no leading minus:
//! `E(s) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i`, with `s_i` in {-1, +1}.
//! QUBO energies are `sum_{i<=j} Q_ij y_i y_j + offset` with `y_i` in {0, 1}.
//! The two are related by `y = (1 + s) / 2`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a value with 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinState(Vec<i8>);

impl SpinState {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(i) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::contract(format!("spin {i} is {} (must be +1 or -1)", spins[i])));
        }
        Ok(SpinState(spins))
    }

    pub fn all_down(n: usize) -> Self {
        SpinState(vec![-1; n])
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }

    /// `y_i = (1 + s_i) / 2`
    pub fn to_binary(&self) -> BinaryState {
        BinaryState(self.0.iter().map(|&s| u8::from(s > 0)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryState(Vec<u8>);

impl BinaryState {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::contract(format!("variable {i} is {} (must be 0 or 1)", bits[i])));
        }
        Ok(BinaryState(bits))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    /// `s_i = 2 y_i - 1`
    pub fn to_spins(&self) -> SpinState {
        SpinState(self.0.iter().map(|&y| if y == 1 { 1 } else { -1 }).collect())
    }
}

/// Spin-glass problem with fields `h` and upper-triangular couplings `J_ij`, `i < j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsingProblem {
    h: Vec<f64>,
    couplings: BTreeMap<(usize, usize), f64>,
}

impl IsingProblem {
    pub fn new(n: usize) -> Self {
        IsingProblem {
            h: vec![0.0; n],
            couplings: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    pub fn field(&self, i: usize) -> f64 {
        self.h[i]
    }

    pub fn set_field(&mut self, i: usize, value: f64) {
        self.h[i] = value;
    }

    /// Adds `value` to `J_ij`. Symmetric input folds onto the upper triangle.
    pub fn add_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j {
            return Err(Error::contract(format!("self-coupling on spin {i}")));
        }
        if i.max(j) >= self.n() {
            return Err(Error::contract(format!("coupling ({i}, {j}) out of range")));
        }
        *self.couplings.entry(ordered(i, j)).or_insert(0.0) += value;
        Ok(())
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&ordered(i, j)).copied().unwrap_or(0.0)
    }

    /// Stored couplings in ascending `(i, j)` order.
    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn num_couplings(&self) -> usize {
        self.couplings.len()
    }

    /// Neighbour lists `(j, J_ij)` for every spin, both directions.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n()];
        for (&(i, j), &v) in &self.couplings {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        adj
    }

    /// Largest magnitude among all fields and couplings.
    pub fn max_abs(&self) -> f64 {
        self.h
            .iter()
            .chain(self.couplings.values())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().chain(self.couplings.values()).all(|v| v.is_finite())
    }

    /// Energy of a raw spin slice; the caller guarantees the length.
    pub fn energy(&self, s: &[i8]) -> f64 {
        debug_assert_eq!(s.len(), self.n());
        let field: f64 = self.h.iter().zip(s).map(|(h, &si)| h * f64::from(si)).sum();
        let pair: f64 = self
            .couplings
            .iter()
            .map(|(&(i, j), v)| v * f64::from(s[i] * s[j]))
            .sum();
        pair + field
    }

    /// Local field `h_i + sum_j J_ij s_j` given an adjacency list.
    pub(crate) fn local_field(&self, adj: &[Vec<(usize, f64)>], s: &[i8], i: usize) -> f64 {
        adj[i]
            .iter()
            .fold(self.h[i], |acc, &(j, v)| acc + v * f64::from(s[j]))
    }
}

/// Binary quadratic problem, upper-triangular `Q` including the diagonal, plus a constant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuboProblem {
    n: usize,
    q: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl QuboProblem {
    pub fn new(n: usize) -> Self {
        QuboProblem {
            n,
            q: BTreeMap::new(),
            offset: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `value` to `Q_ij`; entries below the diagonal fold onto the upper triangle.
    pub fn add(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i.max(j) >= self.n {
            return Err(Error::contract(format!("entry ({i}, {j}) out of range")));
        }
        *self.q.entry(ordered(i, j)).or_insert(0.0) += value;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q.get(&ordered(i, j)).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.q.iter().map(|(&k, &v)| (k, v))
    }

    pub fn num_entries(&self) -> usize {
        self.q.len()
    }

    /// `Q^diag`: the diagonal part only.
    pub fn diag_part(&self) -> QuboProblem {
        QuboProblem {
            n: self.n,
            q: self.q.iter().filter(|(k, _)| k.0 == k.1).map(|(&k, &v)| (k, v)).collect(),
            offset: 0.0,
        }
    }

    /// `Q^upper`: the strictly upper-triangular part only.
    pub fn upper_part(&self) -> QuboProblem {
        QuboProblem {
            n: self.n,
            q: self.q.iter().filter(|(k, _)| k.0 < k.1).map(|(&k, &v)| (k, v)).collect(),
            offset: 0.0,
        }
    }

    /// Dense symmetric matrix with off-diagonal entries halved, so that
    /// `x^T S x` equals the upper-triangular form for every real `x`.
    pub fn to_symmetric_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (&(i, j), &v) in &self.q {
            if i == j {
                m[i][i] = v;
            } else {
                m[i][j] = v / 2.0;
                m[j][i] = v / 2.0;
            }
        }
        m
    }

    /// `sum_{i<=j} Q_ij x_i x_j` for real `x` (no offset).
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.q.iter().map(|(&(i, j), v)| v * x[i] * x[j]).sum()
    }

    /// Energy of a raw binary slice; the caller guarantees the length.
    pub fn energy(&self, y: &[u8]) -> f64 {
        debug_assert_eq!(y.len(), self.n);
        let body: f64 = self
            .q
            .iter()
            .filter(|(&(i, j), _)| y[i] == 1 && y[j] == 1)
            .map(|(_, v)| v)
            .sum();
        body + self.offset
    }

    pub fn is_finite(&self) -> bool {
        self.offset.is_finite() && self.q.values().all(|v| v.is_finite())
    }
}

pub fn ising_energy(p: &IsingProblem, s: &SpinState) -> Result<f64> {
    if s.len() != p.n() {
        return Err(Error::contract(format!(
            "state has {} spins, problem has {}",
            s.len(),
            p.n()
        )));
    }
    Ok(p.energy(s.as_slice()))
}

pub fn qubo_energy(p: &QuboProblem, y: &BinaryState) -> Result<f64> {
    if y.len() != p.n() {
        return Err(Error::contract(format!(
            "state has {} variables, problem has {}",
            y.len(),
            p.n()
        )));
    }
    Ok(p.energy(y.as_slice()))
}

/// Upper-triangular `Q` of `(sum_i a_i x_i)^2`: `Q_ii = a_i^2`, `Q_ij = 2 a_i a_j`.
pub fn square_polynomial(coeffs: &[f64]) -> QuboProblem {
    let n = coeffs.len();
    let mut q = QuboProblem::new(n);
    for i in 0..n {
        q.q.insert((i, i), coeffs[i] * coeffs[i]);
        for j in i + 1..n {
            q.q.insert((i, j), 2.0 * coeffs[i] * coeffs[j]);
        }
    }
    q
}

/// Symmetric (outer-product) representation `Q_ij = a_i a_j` of the same square.
pub fn square_polynomial_symmetric(coeffs: &[f64]) -> Vec<Vec<f64>> {
    coeffs
        .iter()
        .map(|a| coeffs.iter().map(|b| a * b).collect())
        .collect()
}

/// Folds a dense symmetric matrix onto upper-triangular storage (`Q_ij + Q_ji`).
pub fn fold_symmetric(m: &[Vec<f64>]) -> QuboProblem {
    let n = m.len();
    let mut q = QuboProblem::new(n);
    for i in 0..n {
        q.q.insert((i, i), m[i][i]);
        for j in i + 1..n {
            q.q.insert((i, j), m[i][j] + m[j][i]);
        }
    }
    q
}

/// Substitutes `s = 2y - 1` into the Ising energy.
pub fn ising_to_qubo(p: &IsingProblem) -> QuboProblem {
    let n = p.n();
    let mut diag: Vec<f64> = p.fields().iter().map(|h| 2.0 * h).collect();
    let mut q = QuboProblem::new(n);
    let mut offset = -p.fields().iter().sum::<f64>();
    for ((i, j), v) in p.couplings() {
        q.q.insert((i, j), 4.0 * v);
        diag[i] -= 2.0 * v;
        diag[j] -= 2.0 * v;
        offset += v;
    }
    for (i, d) in diag.into_iter().enumerate() {
        if d != 0.0 {
            q.q.insert((i, i), d);
        }
    }
    q.offset = offset;
    q
}

/// Substitutes `y = (1 + s) / 2`; returns the Ising problem and its constant term.
pub fn qubo_to_ising(p: &QuboProblem) -> (IsingProblem, f64) {
    let mut ising = IsingProblem::new(p.n());
    let mut offset = p.offset;
    for (&(i, j), &v) in &p.q {
        if i == j {
            ising.h[i] += v / 2.0;
            offset += v / 2.0;
        } else {
            ising.couplings.insert((i, j), v / 4.0);
            ising.h[i] += v / 4.0;
            ising.h[j] += v / 4.0;
            offset += v / 4.0;
        }
    }
    (ising, offset)
}

// ---------------------------------------------------------------------------
// Text formats

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(body, _)| body).trim()
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse_line(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse_line(line, format!("invalid {what} '{tok}'")))
}

fn parse_value(tok: Option<&str>, line: usize) -> Result<f64> {
    let v: f64 = parse_num(tok, "value", line)?;
    if !v.is_finite() {
        return Err(Error::parse_line(line, "value must be finite"));
    }
    Ok(v)
}

fn expect_end<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match toks.next() {
        Some(extra) => Err(Error::parse_line(line, format!("unexpected token '{extra}'"))),
        None => Ok(()),
    }
}

/// Non-empty, comment-stripped lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.is_empty())
}

pub fn ising_to_text(p: &IsingProblem) -> String {
    let mut out = format!("ising {}\n", p.n());
    for (i, &h) in p.fields().iter().enumerate() {
        if h != 0.0 {
            let _ = writeln!(out, "h {i} {}", format_value(h));
        }
    }
    for ((i, j), v) in p.couplings() {
        let _ = writeln!(out, "J {i} {j} {}", format_value(v));
    }
    out
}

pub fn ising_from_text(text: &str) -> Result<IsingProblem> {
    let mut lines = content_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| Error::parse_line(1, "missing 'ising <n>' header"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("ising") {
        return Err(Error::parse_line(hl, "expected 'ising <n>' header"));
    }
    let n: usize = parse_num(toks.next(), "spin count", hl)?;
    expect_end(toks, hl)?;

    let mut p = IsingProblem::new(n);
    let mut seen_h = vec![false; n];
    for (ln, line) in lines {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("h") => {
                let i: usize = parse_num(toks.next(), "index", ln)?;
                let v = parse_value(toks.next(), ln)?;
                expect_end(toks, ln)?;
                if i >= n {
                    return Err(Error::parse_line(ln, format!("index {i} out of range")));
                }
                if std::mem::replace(&mut seen_h[i], true) {
                    return Err(Error::parse_line(ln, format!("duplicate field for spin {i}")));
                }
                p.h[i] = v;
            }
            Some("J") => {
                let i: usize = parse_num(toks.next(), "index", ln)?;
                let j: usize = parse_num(toks.next(), "index", ln)?;
                let v = parse_value(toks.next(), ln)?;
                expect_end(toks, ln)?;
                if i >= j {
                    return Err(Error::parse_line(ln, format!("coupling ({i}, {j}) needs i < j")));
                }
                if j >= n {
                    return Err(Error::parse_line(ln, format!("index {j} out of range")));
                }
                if p.couplings.insert((i, j), v).is_some() {
                    return Err(Error::parse_line(ln, format!("duplicate coupling ({i}, {j})")));
                }
            }
            Some(other) => {
                return Err(Error::parse_line(ln, format!("unknown record '{other}'")));
            }
            None => unreachable!("blank lines are filtered"),
        }
    }
    Ok(p)
}

pub fn qubo_to_text(p: &QuboProblem) -> String {
    let mut out = format!("qubo {} {}\n", p.n(), format_value(p.offset));
    for ((i, j), v) in p.entries() {
        let _ = writeln!(out, "{i} {j} {}", format_value(v));
    }
    out
}

pub fn qubo_from_text(text: &str) -> Result<QuboProblem> {
    let mut lines = content_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| Error::parse_line(1, "missing 'qubo <n> <offset>' header"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("qubo") {
        return Err(Error::parse_line(hl, "expected 'qubo <n> <offset>' header"));
    }
    let n: usize = parse_num(toks.next(), "variable count", hl)?;
    let offset = parse_value(toks.next(), hl)?;
    expect_end(toks, hl)?;

    let mut p = QuboProblem::new(n);
    p.offset = offset;
    for (ln, line) in lines {
        let mut toks = line.split_whitespace();
        let i: usize = parse_num(toks.next(), "index", ln)?;
        let j: usize = parse_num(toks.next(), "index", ln)?;
        let v = parse_value(toks.next(), ln)?;
        expect_end(toks, ln)?;
        if i > j {
            return Err(Error::parse_line(ln, format!("entry ({i}, {j}) needs i <= j")));
        }
        if j >= n {
            return Err(Error::parse_line(ln, format!("index {j} out of range")));
        }
        if p.q.insert((i, j), v).is_some() {
            return Err(Error::parse_line(ln, format!("duplicate entry ({i}, {j})")));
        }
    }
    Ok(p)
}

pub fn save_ising(p: &IsingProblem, path: &Path) -> Result<()> {
    std::fs::write(path, ising_to_text(p))?;
    Ok(())
}

pub fn load_ising(path: &Path) -> Result<IsingProblem> {
    ising_from_text(&std::fs::read_to_string(path)?)
}

pub fn save_qubo(p: &QuboProblem, path: &Path) -> Result<()> {
    std::fs::write(path, qubo_to_text(p))?;
    Ok(())
}

pub fn load_qubo(path: &Path) -> Result<QuboProblem> {
    qubo_from_text(&std::fs::read_to_string(path)?)
}
