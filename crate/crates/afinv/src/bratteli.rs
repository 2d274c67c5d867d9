//! Bratteli diagrams: the stationary diagram of a nonnegative Anosov matrix,
//! the Effros-Shen diagram of a continued fraction, telescoping, and the
//! common-block stable-isomorphism semi-decision.
//!
//! A diagram is a leveled multigraph stored as vertex counts per level plus
//! one incidence matrix per step; entry `(i, j)` counts edges from vertex `j`
//! of level `k` into vertex `i` of level `k+1`. The single root with its two
//! edges is stored as an explicit 2x1 incidence of ones, which keeps every
//! level uniform and telescoping total.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::contfrac::CFExpansion;
use crate::error::{Error, Result};
use crate::intmat::{is_anosov, Mat2Z};

/// Products during the common-block search are abandoned once any entry
/// exceeds this bound; absence within the bound is part of the semi-decision
/// contract.
pub const BLOCK_ENTRY_BOUND_EXP: u32 = 12;

fn entry_bound() -> BigInt {
    BigInt::from(10u32).pow(BLOCK_ENTRY_BOUND_EXP)
}

/// Rectangular nonnegative integer incidence matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncMat {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IncMat {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "incidence matrix needs {rows}x{cols} = {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|e| e.is_negative()) {
            return Err(Error::InvalidInput(
                "incidence entries are edge multiplicities and must be nonnegative".into(),
            ));
        }
        Ok(IncMat { rows, cols, entries })
    }

    pub fn from_mat2(m: &Mat2Z) -> Result<Self> {
        IncMat::new(
            2,
            2,
            vec![m.a11.clone(), m.a12.clone(), m.a21.clone(), m.a22.clone()],
        )
    }

    /// The 2x1 root inclusion of ones.
    pub fn root() -> Self {
        IncMat {
            rows: 2,
            cols: 1,
            entries: vec![BigInt::one(), BigInt::one()],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    /// `self * other`, composing `other` (earlier step) with `self` (later).
    pub fn mul(&self, other: &IncMat) -> Result<IncMat> {
        if self.cols != other.rows {
            return Err(Error::InvalidInput(format!(
                "incidence shapes do not chain: {}x{} after {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut entries = vec![BigInt::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = BigInt::zero();
                for k in 0..self.cols {
                    acc += self.get(i, k) * other.get(k, j);
                }
                entries[i * other.cols + j] = acc;
            }
        }
        IncMat::new(self.rows, other.cols, entries)
    }

    fn max_entry(&self) -> &BigInt {
        self.entries.iter().max().expect("nonempty")
    }

    fn has_zero_row_or_col(&self) -> bool {
        (0..self.rows).any(|i| (0..self.cols).all(|j| self.get(i, j).is_zero()))
            || (0..self.cols).any(|j| (0..self.rows).all(|i| self.get(i, j).is_zero()))
    }
}

/// How a diagram was produced; generated diagrams can be extended on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generator {
    Stationary(Mat2Z),
    EffrosShen(CFExpansion),
    Explicit,
}

/// Leveled multigraph presented by vertex counts and incidence matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BratteliDiagram {
    levels: Vec<usize>,
    incidences: Vec<IncMat>,
    generator: Generator,
}

impl BratteliDiagram {
    pub fn new(levels: Vec<usize>, incidences: Vec<IncMat>, generator: Generator) -> Result<Self> {
        if levels.is_empty() || levels.len() != incidences.len() + 1 {
            return Err(Error::InvalidInput(
                "diagram needs one more level than incidences".into(),
            ));
        }
        for (k, inc) in incidences.iter().enumerate() {
            if inc.cols() != levels[k] || inc.rows() != levels[k + 1] {
                return Err(Error::InvalidInput(format!(
                    "incidence {k} has shape {}x{}, expected {}x{}",
                    inc.rows(),
                    inc.cols(),
                    levels[k + 1],
                    levels[k]
                )));
            }
            if generator != Generator::Explicit && inc.has_zero_row_or_col() {
                return Err(Error::InvalidInput(format!(
                    "generated diagrams admit no dead vertices, incidence {k} has a zero row or column"
                )));
            }
        }
        Ok(BratteliDiagram {
            levels,
            incidences,
            generator,
        })
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn incidences(&self) -> &[IncMat] {
        &self.incidences
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn depth(&self) -> usize {
        self.incidences.len()
    }

    /// Content equality, ignoring the generator tag.
    pub fn same_content(&self, other: &BratteliDiagram) -> bool {
        self.levels == other.levels && self.incidences == other.incidences
    }
}

impl fmt::Display for BratteliDiagram {
    /// One level per line: `n | incidence entries row-major`, where the
    /// incidence is the one leading into that level (the root line has none).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} |", self.levels[0])?;
        for (k, inc) in self.incidences.iter().enumerate() {
            let entries = inc
                .entries()
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            if k + 1 == self.incidences.len() {
                write!(f, "{} | {entries}", self.levels[k + 1])?;
            } else {
                writeln!(f, "{} | {entries}", self.levels[k + 1])?;
            }
        }
        Ok(())
    }
}

impl FromStr for BratteliDiagram {
    type Err = Error;

    /// Parse the line-oriented serialization; the generator tag is not part
    /// of the text form, so parsed diagrams are explicit.
    fn from_str(s: &str) -> Result<Self> {
        let err = |line: &str| Error::Parse(format!("bad diagram line {line:?}"));
        let mut levels: Vec<usize> = Vec::new();
        let mut incidences: Vec<IncMat> = Vec::new();
        for (idx, line) in s.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
            let (n_str, rest) = line.split_once('|').ok_or_else(|| err(line))?;
            let n: usize = n_str.trim().parse().map_err(|_| err(line))?;
            let entries: Vec<BigInt> = rest
                .split_whitespace()
                .map(|t| BigInt::from_str(t).map_err(|_| err(line)))
                .collect::<Result<_>>()?;
            if idx == 0 {
                if !entries.is_empty() {
                    return Err(err(line));
                }
            } else {
                let cols = levels[idx - 1];
                incidences.push(IncMat::new(n, cols, entries)?);
            }
            levels.push(n);
        }
        BratteliDiagram::new(levels, incidences, Generator::Explicit)
    }
}

/// Stationary diagram of a nonnegative Anosov matrix with positive trace:
/// a single root with two edges, then `depth - 1` repetitions of `m`.
pub fn stationary_diagram(m: &Mat2Z, depth: usize) -> Result<BratteliDiagram> {
    if !is_anosov(m) || m.trace() <= BigInt::from(2u32) || !m.is_nonneg() {
        return Err(Error::NotAnosov(format!(
            "stationary diagrams need a nonnegative Anosov matrix with trace > 2, got {m}"
        )));
    }
    if depth == 0 {
        return Err(Error::InvalidInput("diagram depth must be positive".into()));
    }
    let mut levels = vec![1usize];
    levels.extend(std::iter::repeat(2).take(depth));
    let mut incidences = vec![IncMat::root()];
    for _ in 1..depth {
        incidences.push(IncMat::from_mat2(m)?);
    }
    BratteliDiagram::new(levels, incidences, Generator::Stationary(m.clone()))
}

/// Effros-Shen diagram of a continued fraction: level `k >= 1` carries the
/// incidence `[[a_{k-1}, 1], [1, 0]]`, partial quotients read from the
/// preperiod and then cyclically from the period.
pub fn effros_shen_diagram(e: &CFExpansion, depth: usize) -> Result<BratteliDiagram> {
    if depth == 0 {
        return Err(Error::InvalidInput("diagram depth must be positive".into()));
    }
    let mut levels = vec![1usize];
    levels.extend(std::iter::repeat(2).take(depth));
    let mut incidences = vec![IncMat::root()];
    for k in 0..depth.saturating_sub(1) {
        let a = e.quotient(k);
        if a.is_negative() {
            return Err(Error::InvalidInput(format!(
                "partial quotient a_{k} = {a} is negative and cannot be an edge multiplicity; \
                 Effros-Shen diagrams need a positive slope"
            )));
        }
        incidences.push(IncMat::new(
            2,
            2,
            vec![a.clone(), BigInt::one(), BigInt::one(), BigInt::zero()],
        )?);
    }
    BratteliDiagram::new(levels, incidences, Generator::EffrosShen(e.clone()))
}

/// Telescope consecutive incidences into group products.
///
/// Groups cover a prefix of the incidence list; any remaining incidences keep
/// their own levels. Vertex counts at group boundaries are preserved.
pub fn telescope(d: &BratteliDiagram, grouping: &[usize]) -> Result<BratteliDiagram> {
    if grouping.iter().any(|&g| g == 0) {
        return Err(Error::InvalidInput("telescoping groups must be positive".into()));
    }
    let total: usize = grouping.iter().sum();
    if total > d.depth() {
        return Err(Error::InvalidInput(format!(
            "grouping covers {total} incidences but the diagram has {}",
            d.depth()
        )));
    }
    let mut levels = vec![d.levels()[0]];
    let mut incidences: Vec<IncMat> = Vec::new();
    let mut pos = 0usize;
    let groups = grouping
        .iter()
        .copied()
        .chain(std::iter::repeat(1).take(d.depth() - total));
    for g in groups {
        // product over the group, later steps applied on the left
        let mut acc = d.incidences()[pos].clone();
        for k in 1..g {
            acc = d.incidences()[pos + k].mul(&acc)?;
        }
        pos += g;
        levels.push(d.levels()[pos]);
        incidences.push(acc);
    }
    BratteliDiagram::new(levels, incidences, Generator::Explicit)
}

/// Witness that `length` consecutive telescoped blocks of two diagrams agree:
/// block `i` of diagram 1 is the product of `grouping1[i]` incidences
/// starting at `start1`, and likewise for diagram 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockWitness {
    pub start1: usize,
    pub start2: usize,
    pub length: usize,
    pub grouping1: Vec<usize>,
    pub grouping2: Vec<usize>,
}

impl BlockWitness {
    /// Recompute both block sequences and check they match.
    pub fn verify(&self, d1: &BratteliDiagram, d2: &BratteliDiagram) -> bool {
        let blocks = |d: &BratteliDiagram, start: usize, grouping: &[usize]| -> Option<Vec<IncMat>> {
            let mut out = Vec::new();
            let mut pos = start;
            for &g in grouping {
                if pos + g > d.depth() {
                    return None;
                }
                let mut acc = d.incidences()[pos].clone();
                for k in 1..g {
                    acc = d.incidences()[pos + k].mul(&acc).ok()?;
                }
                out.push(acc);
                pos += g;
            }
            Some(out)
        };
        if self.grouping1.len() != self.length || self.grouping2.len() != self.length {
            return false;
        }
        match (
            blocks(d1, self.start1, &self.grouping1),
            blocks(d2, self.start2, &self.grouping2),
        ) {
            (Some(b1), Some(b2)) => b1 == b2,
            _ => false,
        }
    }
}

/// Regenerate a generated diagram at a larger depth; explicit diagrams are
/// returned as-is.
fn extend_to(d: &BratteliDiagram, depth: usize) -> Result<BratteliDiagram> {
    if d.depth() >= depth {
        return Ok(d.clone());
    }
    match d.generator() {
        Generator::Stationary(m) => stationary_diagram(m, depth),
        Generator::EffrosShen(e) => effros_shen_diagram(e, depth),
        Generator::Explicit => Ok(d.clone()),
    }
}

/// Start offsets that can yield distinct block sequences; generated diagrams
/// repeat, so only offsets up to one period past the preperiod matter.
fn canonical_starts(d: &BratteliDiagram) -> Vec<usize> {
    match d.generator() {
        Generator::Stationary(_) => vec![0, 1].into_iter().filter(|&s| s < d.depth()).collect(),
        Generator::EffrosShen(e) => {
            let span = 1 + e.preperiod().len() + e.period().len();
            (0..span.min(d.depth())).collect()
        }
        Generator::Explicit => (0..d.depth()).collect(),
    }
}

/// Cumulative group products from each start, cut off at the entry bound.
fn products_from(d: &BratteliDiagram, start: usize) -> Vec<IncMat> {
    let bound = entry_bound();
    let mut out: Vec<IncMat> = Vec::new();
    let mut acc: Option<IncMat> = None;
    for k in start..d.depth() {
        let next = match &acc {
            None => d.incidences()[k].clone(),
            Some(p) => match d.incidences()[k].mul(p) {
                Ok(v) => v,
                Err(_) => break,
            },
        };
        if *next.max_entry() > bound {
            break;
        }
        acc = Some(next.clone());
        out.push(next);
    }
    out
}

/// Search for a common telescoped block of length `max_depth`.
///
/// Deterministic and symmetric: starts and group sizes are tried in
/// ascending order, so the first witness is the smallest. `None` means "not
/// found within this depth and the entry bound", never "not stably
/// isomorphic".
pub fn common_block_search(
    d1: &BratteliDiagram,
    d2: &BratteliDiagram,
    max_depth: usize,
) -> Result<Option<BlockWitness>> {
    if max_depth == 0 {
        return Err(Error::InvalidInput("block length must be positive".into()));
    }
    // generous regeneration: enough incidences for max_depth blocks of any
    // group size that can stay under the entry bound
    let margin = 64 * max_depth + 2;
    let d1 = extend_to(d1, margin + canonical_starts(d1).last().copied().unwrap_or(0))?;
    let d2 = extend_to(d2, margin + canonical_starts(d2).last().copied().unwrap_or(0))?;

    for s1 in canonical_starts(&d1) {
        for s2 in canonical_starts(&d2) {
            if let Some((g1, g2)) = match_blocks(&d1, &d2, s1, s2, max_depth) {
                return Ok(Some(BlockWitness {
                    start1: s1,
                    start2: s2,
                    length: max_depth,
                    grouping1: g1,
                    grouping2: g2,
                }));
            }
        }
    }
    Ok(None)
}

fn match_blocks(
    d1: &BratteliDiagram,
    d2: &BratteliDiagram,
    s1: usize,
    s2: usize,
    blocks_needed: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    if blocks_needed == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    let p1 = products_from(d1, s1);
    let p2 = products_from(d2, s2);
    for (i, b1) in p1.iter().enumerate() {
        for (j, b2) in p2.iter().enumerate() {
            if b1 == b2 {
                if let Some((mut g1, mut g2)) =
                    match_blocks(d1, d2, s1 + i + 1, s2 + j + 1, blocks_needed - 1)
                {
                    g1.insert(0, i + 1);
                    g2.insert(0, j + 1);
                    return Some((g1, g2));
                }
            }
        }
    }
    None
}
