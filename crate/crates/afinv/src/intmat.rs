//! Integer matrix algebra: Anosov predicates, Perron-Frobenius eigendata,
//! GL(2,Z)/SL(2,Z) conjugacy decisions through RL-words, and Smith normal
//! form for square integer matrices.
//!
//! The conjugacy engine canonicalizes a hyperbolic matrix with positive
//! trace and determinant one to a word `R^{e1} L^{e2} ... L^{e2k}` in
//! `R = [[1,1],[0,1]]` and `L = [[1,0],[1,1]]`. Two such matrices are
//! SL(2,Z)-conjugate iff the words agree up to an even rotation of the
//! exponent tuple, GL(2,Z)-conjugate iff they agree up to any rotation.
//! Negative traces are negated first and determinant -1 matrices are decided
//! through their squares, transporting a square-level conjugator back.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::contfrac;
use crate::error::{Error, Result};
use crate::exactnum::QuadSurd;

/// 2x2 integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat2Z {
    pub a11: BigInt,
    pub a12: BigInt,
    pub a21: BigInt,
    pub a22: BigInt,
}

impl Mat2Z {
    pub fn new(
        a11: impl Into<BigInt>,
        a12: impl Into<BigInt>,
        a21: impl Into<BigInt>,
        a22: impl Into<BigInt>,
    ) -> Self {
        Mat2Z {
            a11: a11.into(),
            a12: a12.into(),
            a21: a21.into(),
            a22: a22.into(),
        }
    }

    pub fn identity() -> Self {
        Mat2Z::new(1, 0, 0, 1)
    }

    /// `R^e = [[1,e],[0,1]]`.
    pub fn gen_r(e: impl Into<BigInt>) -> Self {
        Mat2Z::new(1, e, 0, 1)
    }

    /// `L^e = [[1,0],[e,1]]`.
    pub fn gen_l(e: impl Into<BigInt>) -> Self {
        Mat2Z::new(1, 0, e, 1)
    }

    /// The flip `[[0,1],[1,0]]`, determinant -1.
    pub fn flip() -> Self {
        Mat2Z::new(0, 1, 1, 0)
    }

    pub fn det(&self) -> BigInt {
        &self.a11 * &self.a22 - &self.a12 * &self.a21
    }

    pub fn trace(&self) -> BigInt {
        &self.a11 + &self.a22
    }

    pub fn is_identity(&self) -> bool {
        self.a11.is_one() && self.a12.is_zero() && self.a21.is_zero() && self.a22.is_one()
    }

    pub fn is_nonneg(&self) -> bool {
        !self.a11.is_negative()
            && !self.a12.is_negative()
            && !self.a21.is_negative()
            && !self.a22.is_negative()
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs().is_one()
    }

    pub fn mul(&self, other: &Mat2Z) -> Mat2Z {
        Mat2Z {
            a11: &self.a11 * &other.a11 + &self.a12 * &other.a21,
            a12: &self.a11 * &other.a12 + &self.a12 * &other.a22,
            a21: &self.a21 * &other.a11 + &self.a22 * &other.a21,
            a22: &self.a21 * &other.a12 + &self.a22 * &other.a22,
        }
    }

    pub fn neg(&self) -> Mat2Z {
        Mat2Z {
            a11: -&self.a11,
            a12: -&self.a12,
            a21: -&self.a21,
            a22: -&self.a22,
        }
    }

    pub fn pow(&self, k: u32) -> Mat2Z {
        let mut acc = Mat2Z::identity();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact inverse, defined only for `|det| = 1`.
    pub fn inverse(&self) -> Result<Mat2Z> {
        let det = self.det();
        if !det.abs().is_one() {
            return Err(Error::InvalidInput(format!(
                "matrix {self} is not unimodular (det = {det})"
            )));
        }
        // adjugate divided by det; det = +-1 so multiply instead
        let adj = Mat2Z {
            a11: self.a22.clone(),
            a12: -&self.a12,
            a21: -&self.a21,
            a22: self.a11.clone(),
        };
        Ok(if det.is_one() { adj } else { adj.neg() })
    }

    pub fn transpose(&self) -> Mat2Z {
        Mat2Z {
            a11: self.a11.clone(),
            a12: self.a21.clone(),
            a21: self.a12.clone(),
            a22: self.a22.clone(),
        }
    }

    /// Conjugate of `self` by the flip: swaps both diagonals.
    pub fn anti_transpose(&self) -> Mat2Z {
        Mat2Z {
            a11: self.a22.clone(),
            a12: self.a21.clone(),
            a21: self.a12.clone(),
            a22: self.a11.clone(),
        }
    }

    /// `t * self * t^-1` for unimodular `t`.
    pub fn conjugate_by(&self, t: &Mat2Z) -> Result<Mat2Z> {
        Ok(t.mul(self).mul(&t.inverse()?))
    }
}

impl fmt::Display for Mat2Z {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{};{},{}", self.a11, self.a12, self.a21, self.a22)
    }
}

impl FromStr for Mat2Z {
    type Err = Error;

    /// Parse the CLI matrix syntax `"a11,a12;a21,a22"`.
    fn from_str(s: &str) -> Result<Self> {
        let m = MatNZ::from_str(s)?;
        if m.n() != 2 {
            return Err(Error::Parse(format!("expected a 2x2 matrix, got {}x{}", m.n(), m.n())));
        }
        Ok(Mat2Z {
            a11: m.get(0, 0).clone(),
            a12: m.get(0, 1).clone(),
            a21: m.get(1, 0).clone(),
            a22: m.get(1, 1).clone(),
        })
    }
}

/// Anosov predicate: unimodular with `|trace| > 2`.
pub fn is_anosov(m: &Mat2Z) -> bool {
    m.det().abs().is_one() && m.trace().abs() > BigInt::from(2u32)
}

fn require_anosov(m: &Mat2Z) -> Result<()> {
    if !is_anosov(m) {
        return Err(Error::NotAnosov(format!(
            "{m} has trace {} and det {}",
            m.trace(),
            m.det()
        )));
    }
    Ok(())
}

/// Perron-Frobenius eigenvalue `(t + sqrt(t^2 - 4 det))/2 > 1` of an Anosov
/// matrix with positive trace.
pub fn perron_eigenvalue(m: &Mat2Z) -> Result<QuadSurd> {
    require_anosov(m)?;
    let t = m.trace();
    if t <= BigInt::from(2u32) {
        return Err(Error::InvalidInput(format!(
            "perron_eigenvalue expects trace > 2; normalize {m} first (negate or square)"
        )));
    }
    let disc = &t * &t - BigInt::from(4u32) * m.det();
    // disc is never a perfect square here: t^2 - 4 = s^2 or t^2 + 4 = s^2 has
    // no integer solutions with |t| > 2
    QuadSurd::new(t, BigInt::one(), BigInt::from(2u32), disc)
        .map_err(|_| Error::InvalidInput("perfect-square discriminant".into()))
}

/// Slope `theta = v2/v1 > 0` of the Perron-Frobenius eigenvector of a
/// nonnegative Anosov matrix with positive trace and `a21 != 0`.
pub fn eigen_slope(m: &Mat2Z) -> Result<QuadSurd> {
    require_anosov(m)?;
    if m.trace() <= BigInt::from(2u32) || !m.is_nonneg() {
        return Err(Error::InvalidInput(format!(
            "eigen_slope expects a nonnegative matrix with trace > 2, got {m}"
        )));
    }
    if m.a21.is_zero() {
        return Err(Error::InvalidInput(
            "eigen_slope expects a21 != 0 (slope convention)".into(),
        ));
    }
    let lambda = perron_eigenvalue(m)?;
    // theta = (lambda - a11)/a12 when a12 != 0, else a21/(lambda - a22)
    if !m.a12.is_zero() {
        let p = lambda.p() - &m.a11 * lambda.r();
        QuadSurd::new(p, lambda.q().clone(), lambda.r() * &m.a12, lambda.d().clone())
    } else {
        // (lambda - a22) = (p - a22 r + q sqrt(D))/r; invert and scale by a21
        let p = lambda.p() - &m.a22 * lambda.r();
        let q = lambda.q().clone();
        let d = lambda.d().clone();
        let norm = &p * &p - &q * &q * &d;
        QuadSurd::new(&m.a21 * lambda.r() * &p, -(&m.a21 * lambda.r() * &q), norm, d)
    }
}

// ---------------------------------------------------------------------------
// RL-words
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Letter {
    R,
    L,
}

/// Alternating word `R^{e1} L^{e2} ... R^{e_{2k-1}} L^{e_{2k}}`, the canonical
/// conjugacy representative of a hyperbolic matrix with trace > 2 and det 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RLWord {
    exponents: Vec<BigInt>,
}

impl RLWord {
    fn new(exponents: Vec<BigInt>) -> Result<Self> {
        if exponents.is_empty() || exponents.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "RL-word needs an even, nonempty exponent list, got {} entries",
                exponents.len()
            )));
        }
        if exponents.iter().any(|e| !e.is_positive()) {
            return Err(Error::InvalidInput("RL-word exponents must be positive".into()));
        }
        Ok(RLWord { exponents })
    }

    pub fn exponents(&self) -> &[BigInt] {
        &self.exponents
    }

    /// Matrix product of the word.
    pub fn matrix(&self) -> Mat2Z {
        let mut acc = Mat2Z::identity();
        for (i, e) in self.exponents.iter().enumerate() {
            let factor = if i % 2 == 0 {
                Mat2Z::gen_r(e.clone())
            } else {
                Mat2Z::gen_l(e.clone())
            };
            acc = acc.mul(&factor);
        }
        acc
    }

    fn rotated(&self, k: usize) -> Vec<BigInt> {
        let n = self.exponents.len();
        (0..n).map(|i| self.exponents[(i + k) % n].clone()).collect()
    }

    /// Smallest rotation offset aligning `self` onto `other`, restricted to
    /// even offsets for the SL flavor.
    pub fn rotation_onto(&self, other: &RLWord, group: ConjugacyGroup) -> Option<usize> {
        if self.exponents.len() != other.exponents.len() {
            return None;
        }
        let step = match group {
            ConjugacyGroup::Gl => 1,
            ConjugacyGroup::Sl => 2,
        };
        (0..self.exponents.len())
            .step_by(step)
            .find(|&k| self.rotated(k) == other.exponents)
    }

    /// Product of the first `k` blocks (used to realize rotations by
    /// conjugation).
    fn prefix_matrix(&self, k: usize) -> Mat2Z {
        let mut acc = Mat2Z::identity();
        for (i, e) in self.exponents.iter().take(k).enumerate() {
            let factor = if i % 2 == 0 {
                Mat2Z::gen_r(e.clone())
            } else {
                Mat2Z::gen_l(e.clone())
            };
            acc = acc.mul(&factor);
        }
        acc
    }
}

impl fmt::Display for RLWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.exponents.iter().enumerate() {
            let letter = if i % 2 == 0 { 'R' } else { 'L' };
            if e.is_one() {
                write!(f, "{letter}")?;
            } else {
                write!(f, "{letter}^{e}")?;
            }
        }
        Ok(())
    }
}

/// RL-word of a nonnegative hyperbolic matrix together with the recorded
/// conjugator: `m = conjugator * word * conjugator^-1`.
#[derive(Debug, Clone)]
pub struct RlDecomposition {
    pub word: RLWord,
    pub conjugator: Mat2Z,
}

/// Peel the unique R/L letter word of a nonnegative det-1 matrix.
fn peel_blocks(m: &Mat2Z) -> Result<Vec<(Letter, BigInt)>> {
    let mut cur = m.clone();
    let mut blocks: Vec<(Letter, BigInt)> = Vec::new();
    while !cur.is_identity() {
        let row1_ge_row2 = cur.a11 >= cur.a21 && cur.a12 >= cur.a22;
        let row2_ge_row1 = cur.a21 >= cur.a11 && cur.a22 >= cur.a12;
        if row1_ge_row2 && !(cur.a21.is_zero() && cur.a22.is_zero()) {
            // peel R^e from the left: subtract row 2 from row 1, e times
            let mut e: Option<BigInt> = None;
            for (x, y) in [(&cur.a11, &cur.a21), (&cur.a12, &cur.a22)] {
                if y.is_positive() {
                    let q = x.div_floor(y);
                    e = Some(match e {
                        None => q,
                        Some(cur_e) => cur_e.min(q),
                    });
                }
            }
            let e = e.ok_or_else(|| Error::InvalidInput("zero row during peeling".into()))?;
            cur.a11 = &cur.a11 - &e * &cur.a21;
            cur.a12 = &cur.a12 - &e * &cur.a22;
            blocks.push((Letter::R, e));
        } else if row2_ge_row1 {
            let mut e: Option<BigInt> = None;
            for (x, y) in [(&cur.a21, &cur.a11), (&cur.a22, &cur.a12)] {
                if y.is_positive() {
                    let q = x.div_floor(y);
                    e = Some(match e {
                        None => q,
                        Some(cur_e) => cur_e.min(q),
                    });
                }
            }
            let e = e.ok_or_else(|| Error::InvalidInput("zero row during peeling".into()))?;
            cur.a21 = &cur.a21 - &e * &cur.a11;
            cur.a22 = &cur.a22 - &e * &cur.a12;
            blocks.push((Letter::L, e));
        } else {
            return Err(Error::InvalidInput(format!(
                "{m} is not a product of nonnegative powers of R and L"
            )));
        }
    }
    Ok(blocks)
}

/// Greedy RL decomposition of a nonnegative hyperbolic matrix.
///
/// Peels the unique letter word of `m` in the free monoid generated by R and
/// L, then rotates it into the alternating `R...L` block form, recording the
/// rotation as a conjugator. The result is verified by reconstruction.
pub fn rl_decompose(m: &Mat2Z) -> Result<RlDecomposition> {
    if !m.det().is_one() {
        return Err(Error::InvalidInput(format!(
            "rl_decompose expects det 1, got det {} (decide det -1 matrices via conjugacy_test)",
            m.det()
        )));
    }
    if m.trace() <= BigInt::from(2u32) {
        return Err(Error::InvalidInput(format!(
            "rl_decompose expects a hyperbolic matrix with trace > 2, got trace {}",
            m.trace()
        )));
    }
    if !m.is_nonneg() || m.is_identity() {
        return Err(Error::InvalidInput(
            "rl_decompose expects a nonnegative non-identity matrix".into(),
        ));
    }
    let blocks = peel_blocks(m)?;
    let n = blocks.len();
    debug_assert!(n >= 2, "trace > 2 excludes pure R- or L-powers");

    let block_matrix = |b: &[(Letter, BigInt)]| -> Mat2Z {
        b.iter().fold(Mat2Z::identity(), |acc, (l, e)| {
            acc.mul(&match l {
                Letter::R => Mat2Z::gen_r(e.clone()),
                Letter::L => Mat2Z::gen_l(e.clone()),
            })
        })
    };

    let (rotated, prefix): (Vec<(Letter, BigInt)>, Mat2Z) =
        match (blocks[0].0, blocks[n - 1].0) {
            (Letter::R, Letter::L) => (blocks.clone(), Mat2Z::identity()),
            (Letter::R, Letter::R) => {
                // move the trailing R block to the front; m = P * W * P^-1
                // with P the product of all but the last block
                let prefix = block_matrix(&blocks[..n - 1]);
                let mut rot = vec![blocks[n - 1].clone()];
                rot.extend_from_slice(&blocks[..n - 1]);
                (rot, prefix)
            }
            (Letter::L, _) => {
                // move the leading L block to the back
                let prefix = block_matrix(&blocks[..1]);
                let mut rot = blocks[1..].to_vec();
                rot.push(blocks[0].clone());
                (rot, prefix)
            }
        };

    // merge same-letter neighbours created at the seam
    let mut merged: Vec<(Letter, BigInt)> = Vec::with_capacity(rotated.len());
    for (l, e) in rotated {
        match merged.last_mut() {
            Some((pl, pe)) if *pl == l => *pe += e,
            _ => merged.push((l, e)),
        }
    }
    if merged.first().map(|b| b.0) != Some(Letter::R) || merged.last().map(|b| b.0) != Some(Letter::L)
    {
        return Err(Error::InvalidInput("RL normal form rotation failed".into()));
    }
    let word = RLWord::new(merged.into_iter().map(|(_, e)| e).collect())?;

    // reconstruction check: m = prefix * word * prefix^-1
    let rebuilt = word.matrix().conjugate_by(&prefix)?;
    if &rebuilt != m {
        return Err(Error::InvalidInput(
            "RL decomposition failed verification; this is a bug".into(),
        ));
    }
    Ok(RlDecomposition {
        word,
        conjugator: prefix,
    })
}

// ---------------------------------------------------------------------------
// Words of arbitrary hyperbolic matrices and conjugacy decisions
// ---------------------------------------------------------------------------

/// Conjugating group flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugacyGroup {
    Gl,
    Sl,
}

/// Which normalization the decision procedure applied before comparing words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    Negated,
    Squared,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::None => write!(f, "none"),
            Normalization::Negated => write!(f, "negated"),
            Normalization::Squared => write!(f, "squared"),
        }
    }
}

/// Outcome of a conjugacy decision, with a verified witness when conjugate.
#[derive(Debug, Clone)]
pub struct ConjugacyOutcome {
    pub conjugate: bool,
    /// `n = witness * m * witness^-1` when `conjugate`.
    pub witness: Option<Mat2Z>,
    pub normalization: Normalization,
}

/// Word data of a det-1, trace > 2 matrix: `m = conjugator * word.matrix() *
/// conjugator^-1` with `det(conjugator) = 1`.
struct HyperbolicWord {
    word: RLWord,
    conjugator: Mat2Z,
}

/// Compute the RL-word of an arbitrary det-1, trace > 2 matrix through the
/// continued fraction of its attracting fixed point.
fn hyperbolic_word_general(m: &Mat2Z) -> Result<HyperbolicWord> {
    debug_assert!(m.det().is_one() && m.trace() > BigInt::from(2u32));
    // c = 0 would force trace 2, excluded
    let disc = m.trace().pow(2) - BigInt::from(4u32);
    let x = QuadSurd::new(
        &m.a11 - &m.a22,
        BigInt::one(),
        BigInt::from(2u32) * &m.a21,
        disc,
    )?;
    let cf = contfrac::cf_expand(&x);
    let step = |a: &BigInt| Mat2Z::new(a.clone(), 1, 1, 0);
    let preperiod_matrix = cf
        .preperiod()
        .iter()
        .fold(Mat2Z::identity(), |acc, a| acc.mul(&step(a)));
    let cycle_matrix = cf
        .period()
        .iter()
        .fold(Mat2Z::identity(), |acc, a| acc.mul(&step(a)));

    let m_reduced = m.conjugate_by(&preperiod_matrix.inverse()?)?;
    // m_reduced stabilizes the purely periodic tail, so it is a power of the
    // cycle matrix; find the exponent by exact matching
    let mut power = cycle_matrix.clone();
    let mut k: usize = 1;
    loop {
        if power == m_reduced {
            break;
        }
        if power.trace() > m_reduced.trace() || k > 4096 {
            return Err(Error::InvalidInput(
                "cycle-power matching failed; this is a bug".into(),
            ));
        }
        power = power.mul(&cycle_matrix);
        k += 1;
    }

    let mut exponents: Vec<BigInt> = Vec::with_capacity(cf.period().len() * k);
    for _ in 0..k {
        exponents.extend(cf.period().iter().cloned());
    }
    debug_assert!(exponents.len() % 2 == 0, "det 1 forces an even letter count");
    let mut word = RLWord::new(exponents)?;
    let mut conjugator = preperiod_matrix;

    if conjugator.det() == BigInt::from(-1) {
        // restore an SL conjugator: rotate the word once through the flip,
        // m = (P F L^{e1}) rot_1(word) (P F L^{e1})^-1
        let e1 = word.exponents()[0].clone();
        conjugator = conjugator.mul(&Mat2Z::flip()).mul(&Mat2Z::gen_l(e1));
        word = RLWord::new(word.rotated(1))?;
    }

    let rebuilt = word.matrix().conjugate_by(&conjugator)?;
    if &rebuilt != m {
        return Err(Error::InvalidInput(
            "hyperbolic word failed verification; this is a bug".into(),
        ));
    }
    Ok(HyperbolicWord { word, conjugator })
}

fn hyperbolic_word(m: &Mat2Z) -> Result<HyperbolicWord> {
    if m.is_nonneg() && !m.is_identity() {
        let dec = rl_decompose(m)?;
        return Ok(HyperbolicWord {
            word: dec.word,
            conjugator: dec.conjugator,
        });
    }
    hyperbolic_word_general(m)
}

/// Primitive automorph of a det-1, trace > 2 matrix: the generator (up to
/// sign and inversion) of its GL(2,Z) centralizer, plus whether it has
/// determinant -1.
fn primitive_automorph(m: &Mat2Z) -> Result<(Mat2Z, bool)> {
    let disc = m.trace().pow(2) - BigInt::from(4u32);
    let x = QuadSurd::new(
        &m.a11 - &m.a22,
        BigInt::one(),
        BigInt::from(2u32) * &m.a21,
        disc,
    )?;
    let cf = contfrac::cf_expand(&x);
    let step = |a: &BigInt| Mat2Z::new(a.clone(), 1, 1, 0);
    let preperiod_matrix = cf
        .preperiod()
        .iter()
        .fold(Mat2Z::identity(), |acc, a| acc.mul(&step(a)));
    let cycle_matrix = cf
        .period()
        .iter()
        .fold(Mat2Z::identity(), |acc, a| acc.mul(&step(a)));
    let automorph = preperiod_matrix
        .mul(&cycle_matrix)
        .mul(&preperiod_matrix.inverse()?);
    Ok((automorph, cf.period().len() % 2 == 1))
}

/// Decide conjugacy of det-1 matrices with trace > 2 via word rotation,
/// producing a witness with the determinant the rotation demands.
fn conjugate_positive_det1(m: &Mat2Z, n: &Mat2Z, group: ConjugacyGroup) -> Result<ConjugacyOutcome> {
    let wm = hyperbolic_word(m)?;
    let wn = hyperbolic_word(n)?;
    let Some(k) = wm.word.rotation_onto(&wn.word, group) else {
        return Ok(ConjugacyOutcome {
            conjugate: false,
            witness: None,
            normalization: Normalization::None,
        });
    };
    // wm rotated by k equals wn as a tuple. For even k the rotation is
    // realized by the det-1 block prefix; odd k routes through the flip.
    let prefix = wm.word.prefix_matrix(k);
    let t = if k % 2 == 0 {
        // m = Tm W Tm^-1, W = Pk rot_k(W) Pk^-1, rot_k(W) = Wn = Tn^-1 n Tn
        wn.conjugator
            .mul(&prefix.inverse()?)
            .mul(&wm.conjugator.inverse()?)
    } else {
        wn.conjugator
            .mul(&Mat2Z::flip())
            .mul(&prefix.inverse()?)
            .mul(&wm.conjugator.inverse()?)
    };
    debug_assert_eq!(&m.conjugate_by(&t)?, n);
    Ok(ConjugacyOutcome {
        conjugate: true,
        witness: Some(t),
        normalization: Normalization::None,
    })
}

/// Full conjugacy decision for Anosov matrices.
pub fn conjugacy_test_in(m: &Mat2Z, n: &Mat2Z, group: ConjugacyGroup) -> Result<ConjugacyOutcome> {
    require_anosov(m)?;
    require_anosov(n)?;
    let reject = |normalization| ConjugacyOutcome {
        conjugate: false,
        witness: None,
        normalization,
    };
    // characteristic polynomials must match
    if m.trace() != n.trace() || m.det() != n.det() {
        return Ok(reject(Normalization::None));
    }
    if m.det().is_one() {
        if m.trace() > BigInt::from(2u32) {
            conjugate_positive_det1(m, n, group)
        } else {
            // trace < -2: classify the negated pair; the witness transfers
            let mut out = conjugate_positive_det1(&m.neg(), &n.neg(), group)?;
            out.normalization = Normalization::Negated;
            Ok(out)
        }
    } else {
        // det -1: decide through the squares and transport the witness back.
        // Any conjugator of the squares differs from a conjugator of (m, n)
        // by an element of the centralizer, which commutes with m itself.
        let m2 = m.mul(m);
        let n2 = n.mul(n);
        let sq = conjugate_positive_det1(&m2, &n2, ConjugacyGroup::Gl)?;
        let Some(t0) = sq.witness else {
            return Ok(reject(Normalization::Squared));
        };
        if &m.conjugate_by(&t0)? != n {
            return Ok(reject(Normalization::Squared));
        }
        let witness = match group {
            ConjugacyGroup::Gl => Some(t0),
            ConjugacyGroup::Sl => {
                if t0.det().is_one() {
                    Some(t0)
                } else {
                    // fix the determinant with a det -1 automorph, if any
                    let (u0, has_odd_cycle) = primitive_automorph(&m2)?;
                    if has_odd_cycle {
                        let t = t0.mul(&u0);
                        debug_assert_eq!(&m.conjugate_by(&t)?, n);
                        Some(t)
                    } else {
                        None
                    }
                }
            }
        };
        Ok(ConjugacyOutcome {
            conjugate: witness.is_some(),
            witness,
            normalization: Normalization::Squared,
        })
    }
}

/// GL(2,Z)-conjugacy of Anosov matrices.
pub fn conjugacy_test(m: &Mat2Z, n: &Mat2Z) -> Result<bool> {
    Ok(conjugacy_test_in(m, n, ConjugacyGroup::Gl)?.conjugate)
}

/// Exhaustive search for a conjugator `T` with `n T = T m`, `|det T| = 1`
/// and all `|entries| <= bound`.
///
/// Among all solutions the smallest is returned, ordered by total entry
/// magnitude and then row-major with `x` before `-x`; self-conjugacy yields
/// the identity. Absence is a semi-decision: "not found within bound".
pub fn brute_force_conjugator(m: &Mat2Z, n: &Mat2Z, bound: u32) -> Option<Mat2Z> {
    type Key = (u64, [(u64, bool); 4]);
    let key = |t: [i64; 4]| -> Key {
        (
            t.iter().map(|x| x.unsigned_abs()).sum(),
            [
                (t[0].unsigned_abs(), t[0] < 0),
                (t[1].unsigned_abs(), t[1] < 0),
                (t[2].unsigned_abs(), t[2] < 0),
                (t[3].unsigned_abs(), t[3] < 0),
            ],
        )
    };
    let b = bound as i64;
    let mut best: Option<(Key, Mat2Z)> = None;
    for a11 in -b..=b {
        for a12 in -b..=b {
            for a21 in -b..=b {
                for a22 in -b..=b {
                    let det = a11 * a22 - a12 * a21;
                    if det != 1 && det != -1 {
                        continue;
                    }
                    let k = key([a11, a12, a21, a22]);
                    if best.as_ref().is_some_and(|(bk, _)| *bk <= k) {
                        continue;
                    }
                    let t = Mat2Z::new(a11, a12, a21, a22);
                    if n.mul(&t) == t.mul(m) {
                        best = Some((k, t));
                    }
                }
            }
        }
    }
    best.map(|(_, t)| t)
}

// ---------------------------------------------------------------------------
// Square integer matrices and Smith normal form
// ---------------------------------------------------------------------------

/// Square integer matrix of arbitrary size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatNZ {
    n: usize,
    entries: Vec<BigInt>,
}

impl MatNZ {
    pub fn new(n: usize, entries: Vec<BigInt>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {n}x{n} = {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(MatNZ { n, entries })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidInput("matrix must be square".into()));
            }
            entries.extend(row.iter().map(|&x| BigInt::from(x)));
        }
        MatNZ::new(n, entries)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        MatNZ { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.n + j] = v;
    }

    pub fn transpose(&self) -> MatNZ {
        let mut t = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &MatNZ) -> MatNZ {
        let n = self.n;
        let mut out = MatNZ {
            n,
            entries: vec![BigInt::zero(); n * n],
        };
        for i in 0..n {
            for j in 0..n {
                let mut acc = BigInt::zero();
                for k in 0..n {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn is_nonneg(&self) -> bool {
        self.entries.iter().all(|e| !e.is_negative())
    }

    pub fn has_zero_row_or_col(&self) -> bool {
        (0..self.n).any(|i| (0..self.n).all(|j| self.get(i, j).is_zero()))
            || (0..self.n).any(|j| (0..self.n).all(|i| self.get(i, j).is_zero()))
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let n = self.n;
        let mut a = self.entries.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k * n + k].is_zero() {
                let Some(swap) = (k + 1..n).find(|&i| !a[i * n + k].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    a.swap(k * n + j, swap * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j])
                        .div_floor(&prev);
                    a[i * n + j] = v;
                }
                a[i * n + k] = BigInt::zero();
            }
            prev = a[k * n + k].clone();
        }
        sign * a[(n - 1) * n + (n - 1)].clone()
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.n {
            self.entries.swap(i * self.n + k, j * self.n + k);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.n {
            self.entries.swap(k * self.n + i, k * self.n + j);
        }
    }

    /// row(i) -= q * row(j)
    fn row_sub(&mut self, i: usize, j: usize, q: &BigInt) {
        for k in 0..self.n {
            let v = self.get(i, k) - q * self.get(j, k);
            self.set(i, k, v);
        }
    }

    /// col(i) -= q * col(j)
    fn col_sub(&mut self, i: usize, j: usize, q: &BigInt) {
        for k in 0..self.n {
            let v = self.get(k, i) - q * self.get(k, j);
            self.set(k, i, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for k in 0..self.n {
            let v = -self.get(i, k);
            self.set(i, k, v);
        }
    }
}

impl fmt::Display for MatNZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.get(i, j).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "{}", rows.join(";"))
    }
}

impl FromStr for MatNZ {
    type Err = Error;

    /// Parse semicolon-separated rows of comma-separated integers.
    fn from_str(s: &str) -> Result<Self> {
        let rows: Vec<Vec<BigInt>> = s
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|cell| {
                        BigInt::from_str(cell.trim())
                            .map_err(|_| Error::Parse(format!("bad matrix entry {cell:?}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parse(format!(
                "matrix rows must all have length {n} (square matrix)"
            )));
        }
        MatNZ::new(n, rows.into_iter().flatten().collect())
    }
}

/// Smith normal form: `U * m * V = S` with `U, V` unimodular and `S` a
/// nonnegative diagonal with `d1 | d2 | ... | dn`.
///
/// Pivots take the smallest nonzero absolute value in deterministic
/// row-major scan order, so `U` and `V` are reproducible.
pub fn smith_normal_form(m: &MatNZ) -> (MatNZ, MatNZ, MatNZ) {
    let n = m.n();
    let mut s = m.clone();
    let mut u = MatNZ::identity(n);
    let mut v = MatNZ::identity(n);

    diagonalize(&mut s, &mut u, &mut v, 0);

    // enforce the divisibility chain
    loop {
        let mut fixed = true;
        for k in 0..n - 1 {
            let a = s.get(k, k).clone();
            let b = s.get(k + 1, k + 1).clone();
            if !a.is_zero() && !b.is_multiple_of(&a) {
                // fold d_{k+1} into column k and rediagonalize from k
                let minus_one = BigInt::from(-1);
                s.col_sub(k, k + 1, &minus_one);
                v.col_sub(k, k + 1, &minus_one);
                diagonalize(&mut s, &mut u, &mut v, k);
                fixed = false;
                break;
            }
            if a.is_zero() && !b.is_zero() {
                // push zeros to the end
                s.swap_rows(k, k + 1);
                u.swap_rows(k, k + 1);
                s.swap_cols(k, k + 1);
                v.swap_cols(k, k + 1);
                fixed = false;
                break;
            }
        }
        if fixed {
            break;
        }
    }

    for k in 0..n {
        if s.get(k, k).is_negative() {
            s.negate_row(k);
            u.negate_row(k);
        }
    }
    (u, s, v)
}

fn find_pivot(s: &MatNZ, from: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in from..s.n() {
        for j in from..s.n() {
            let x = s.get(i, j);
            if x.is_zero() {
                continue;
            }
            match best {
                None => best = Some((i, j)),
                Some(b) => {
                    if x.abs() < s.get(b.0, b.1).abs() {
                        best = Some((i, j));
                    }
                }
            }
        }
    }
    best
}

fn diagonalize(s: &mut MatNZ, u: &mut MatNZ, v: &mut MatNZ, from: usize) {
    let n = s.n();
    let mut k = from;
    while k < n {
        let Some((pi, pj)) = find_pivot(s, k) else {
            break;
        };
        s.swap_rows(k, pi);
        u.swap_rows(k, pi);
        s.swap_cols(k, pj);
        v.swap_cols(k, pj);
        let mut clean = true;
        for i in k + 1..n {
            if !s.get(i, k).is_zero() {
                let q = s.get(i, k).div_floor(s.get(k, k));
                s.row_sub(i, k, &q);
                u.row_sub(i, k, &q);
                if !s.get(i, k).is_zero() {
                    clean = false;
                }
            }
        }
        for j in k + 1..n {
            if !s.get(k, j).is_zero() {
                let q = s.get(k, j).div_floor(s.get(k, k));
                s.col_sub(j, k, &q);
                v.col_sub(j, k, &q);
                if !s.get(k, j).is_zero() {
                    clean = false;
                }
            }
        }
        if clean {
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::FieldElem;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn m2(a: i64, b: i64, c: i64, d: i64) -> Mat2Z {
        Mat2Z::new(a, b, c, d)
    }

    #[test]
    fn anosov_predicate() {
        assert!(is_anosov(&m2(2, 1, 1, 1)));
        assert!(!is_anosov(&m2(1, 1, 0, 1))); // parabolic
        assert!(!is_anosov(&m2(1, 1, 1, 0))); // trace 1, det -1
        assert!(!is_anosov(&m2(1, 1, 1, 1))); // det 0
    }

    #[test]
    fn perron_eigenvalues() {
        let lam = perron_eigenvalue(&m2(2, 1, 1, 1)).unwrap();
        assert_eq!(lam, QuadSurd::new(3, 1, 2, 5).unwrap());
        let lam = perron_eigenvalue(&m2(5, 3, 3, 2)).unwrap();
        assert_eq!(lam, QuadSurd::new(7, 3, 2, 5).unwrap());
        let lam = perron_eigenvalue(&m2(3, 2, 1, 1)).unwrap();
        assert_eq!(lam, QuadSurd::new(2, 1, 1, 3).unwrap());
        assert!(perron_eigenvalue(&m2(1, 1, 0, 1)).is_err());
    }

    #[test]
    fn perron_satisfies_characteristic_equation() {
        for m in [m2(2, 1, 1, 1), m2(5, 3, 3, 2), m2(3, 2, 1, 1), m2(3, 1, 1, 0)] {
            let lam = FieldElem::Surd(perron_eigenvalue(&m).unwrap());
            let lhs = lam
                .mul(&lam)
                .unwrap()
                .sub(&lam.mul(&FieldElem::from_int(m.trace())).unwrap())
                .unwrap()
                .add(&FieldElem::from_int(m.det()))
                .unwrap();
            assert!(lhs.is_zero());
        }
    }

    #[test]
    fn eigen_slopes() {
        let theta = eigen_slope(&m2(2, 1, 1, 1)).unwrap();
        assert_eq!(theta, QuadSurd::new(-1, 1, 2, 5).unwrap());
        // the square has the same eigenvector
        let theta2 = eigen_slope(&m2(5, 3, 3, 2)).unwrap();
        assert_eq!(theta2, QuadSurd::new(-1, 1, 2, 5).unwrap());
        assert!(eigen_slope(&m2(1, 1, 1, 1)).is_err());
    }

    #[test]
    fn eigen_slope_is_projectively_fixed() {
        // (a21 + a22 theta)/(a11 + a12 theta) = theta, exactly
        for m in [m2(2, 1, 1, 1), m2(5, 3, 3, 2), m2(3, 2, 1, 1), m2(3, 1, 1, 0)] {
            let theta = FieldElem::Surd(eigen_slope(&m).unwrap());
            let num = FieldElem::from_int(m.a21.clone())
                .add(&FieldElem::from_int(m.a22.clone()).mul(&theta).unwrap())
                .unwrap();
            let den = FieldElem::from_int(m.a11.clone())
                .add(&FieldElem::from_int(m.a12.clone()).mul(&theta).unwrap())
                .unwrap();
            assert_eq!(num.div(&den).unwrap(), theta);
        }
    }

    #[test]
    fn rl_words_of_small_matrices() {
        let dec = rl_decompose(&m2(2, 1, 1, 1)).unwrap();
        assert_eq!(dec.word.exponents(), &[BigInt::from(1), BigInt::from(1)]);
        let dec = rl_decompose(&m2(5, 3, 3, 2)).unwrap();
        assert_eq!(dec.word.exponents(), &[1.into(), 1.into(), 1.into(), 1.into()]);
        let dec = rl_decompose(&m2(3, 1, 2, 1)).unwrap();
        assert_eq!(dec.word.exponents(), &[BigInt::from(1), BigInt::from(2)]);
        assert!(rl_decompose(&m2(3, 1, 1, 0)).is_err()); // det -1
        assert!(rl_decompose(&m2(1, 1, 0, 1)).is_err()); // parabolic
    }

    #[test]
    fn rl_decompose_reconstructs_rotated_forms() {
        // L-first product: L R = [[1,1],[1,2]]
        let m = m2(1, 1, 1, 2);
        let dec = rl_decompose(&m).unwrap();
        assert_eq!(dec.word.exponents(), &[BigInt::from(1), BigInt::from(1)]);
        assert_eq!(dec.word.matrix().conjugate_by(&dec.conjugator).unwrap(), m);
        // R L R rotates to R^2 L
        let m = Mat2Z::gen_r(1).mul(&Mat2Z::gen_l(1)).mul(&Mat2Z::gen_r(1));
        let dec = rl_decompose(&m).unwrap();
        assert_eq!(dec.word.exponents(), &[BigInt::from(2), BigInt::from(1)]);
        assert_eq!(dec.word.matrix().conjugate_by(&dec.conjugator).unwrap(), m);
    }

    #[test]
    fn conjugacy_explicit_conjugates() {
        let a = m2(2, 1, 1, 1);
        let t = m2(1, 1, 0, 1);
        let n = a.conjugate_by(&t).unwrap();
        assert!(conjugacy_test(&a, &n).unwrap());
        assert!(!conjugacy_test(&a, &m2(5, 3, 3, 2)).unwrap()); // traces 3 vs 7
        // transpose pair, conjugate in GL but not SL
        let m = m2(3, 2, 1, 1);
        let n = m2(3, 1, 2, 1);
        assert!(conjugacy_test(&m, &n).unwrap());
        let out = conjugacy_test_in(&m, &n, ConjugacyGroup::Sl).unwrap();
        assert!(!out.conjugate);
        let found = brute_force_conjugator(&m, &n, 5).unwrap();
        assert_eq!(n.mul(&found), found.mul(&m));
    }

    #[test]
    fn conjugacy_handles_negative_entries_and_traces() {
        let a = m2(2, 1, 1, 1);
        let t = m2(2, 1, 1, 1).mul(&m2(0, 1, -1, 3)); // some unimodular matrix
        assert!(t.det().abs().is_one());
        let n = a.conjugate_by(&t).unwrap();
        let out = conjugacy_test_in(&a, &n, ConjugacyGroup::Gl).unwrap();
        assert!(out.conjugate);
        let w = out.witness.unwrap();
        assert_eq!(a.conjugate_by(&w).unwrap(), n);

        // negative trace pair
        let am = a.neg();
        let nm = n.neg();
        let out = conjugacy_test_in(&am, &nm, ConjugacyGroup::Gl).unwrap();
        assert!(out.conjugate);
        assert_eq!(out.normalization, Normalization::Negated);
    }

    #[test]
    fn conjugacy_det_minus_one_via_squares() {
        let a = m2(3, 1, 1, 0); // det -1, trace 3
        let t = m2(1, 1, 0, 1);
        let n = a.conjugate_by(&t).unwrap();
        let out = conjugacy_test_in(&a, &n, ConjugacyGroup::Gl).unwrap();
        assert!(out.conjugate);
        assert_eq!(out.normalization, Normalization::Squared);
        let w = out.witness.unwrap();
        assert_eq!(a.conjugate_by(&w).unwrap(), n);
        // transpose of a det -1 matrix
        let nt = a.transpose();
        let expected = brute_force_conjugator(&a, &nt, 10).is_some();
        assert_eq!(conjugacy_test(&a, &nt).unwrap(), expected);
    }

    #[test]
    fn brute_force_finds_smallest_witnesses() {
        let a = m2(2, 1, 1, 1);
        assert_eq!(brute_force_conjugator(&a, &a, 1), Some(Mat2Z::identity()));
        let n = m2(1, 1, 1, 2);
        assert_eq!(brute_force_conjugator(&a, &n, 3), Some(Mat2Z::flip()));
        assert_eq!(brute_force_conjugator(&a, &m2(5, 3, 3, 2), 10), None);
    }

    #[test]
    fn conjugacy_agrees_with_brute_force_on_samples() {
        let mut rng = StdRng::seed_from_u64(crate::test_seed() ^ 3);
        let mut tested = 0;
        while tested < 60 {
            let a = m2(
                rng.random_range(-5..=5),
                rng.random_range(-5..=5),
                rng.random_range(-5..=5),
                rng.random_range(-5..=5),
            );
            let b = m2(
                rng.random_range(-5..=5),
                rng.random_range(-5..=5),
                rng.random_range(-5..=5),
                rng.random_range(-5..=5),
            );
            if !is_anosov(&a) || !is_anosov(&b) {
                continue;
            }
            tested += 1;
            let ours = conjugacy_test(&a, &b).unwrap();
            if brute_force_conjugator(&a, &b, 10).is_some() {
                assert!(ours, "brute force found a conjugator for {a} ~ {b}");
            }
            if !ours {
                assert!(brute_force_conjugator(&a, &b, 10).is_none());
            }
        }
    }

    #[test]
    fn snf_examples() {
        let m = MatNZ::from_rows(&[vec![-1, -1], vec![-1, 0]]).unwrap();
        let (u, s, v) = smith_normal_form(&m);
        assert_eq!(s, MatNZ::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap());
        assert_eq!(u.mul(&m).mul(&v), s);

        let m = MatNZ::from_rows(&[vec![2, 0], vec![0, 3]]).unwrap();
        let (u, s, v) = smith_normal_form(&m);
        assert_eq!(s, MatNZ::from_rows(&[vec![1, 0], vec![0, 6]]).unwrap());
        assert_eq!(u.mul(&m).mul(&v), s);

        let m = MatNZ::from_rows(&[vec![0, 0], vec![0, 0]]).unwrap();
        let (_, s, _) = smith_normal_form(&m);
        assert_eq!(s, MatNZ::from_rows(&[vec![0, 0], vec![0, 0]]).unwrap());
    }

    #[test]
    fn snf_random_validity() {
        let mut rng = StdRng::seed_from_u64(crate::test_seed() ^ 4);
        for _ in 0..100 {
            let n = rng.random_range(1..=4);
            let entries: Vec<BigInt> = (0..n * n)
                .map(|_| BigInt::from(rng.random_range(-9..=9)))
                .collect();
            let m = MatNZ::new(n, entries).unwrap();
            let (u, s, v) = smith_normal_form(&m);
            assert_eq!(u.mul(&m).mul(&v), s, "U m V != S for {m}");
            assert!(u.det().abs().is_one(), "U not unimodular for {m}");
            assert!(v.det().abs().is_one(), "V not unimodular for {m}");
            for k in 0..n {
                for j in 0..n {
                    if k != j {
                        assert!(s.get(k, j).is_zero());
                    }
                }
                assert!(!s.get(k, k).is_negative());
                if k + 1 < n {
                    let a = s.get(k, k);
                    let b = s.get(k + 1, k + 1);
                    assert!(
                        a.is_zero() && b.is_zero() || !a.is_zero() && b.is_multiple_of(a),
                        "divisibility chain broken for {m}: {a} then {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn matrix_parsing_round_trips() {
        let m: Mat2Z = "2,1;1,1".parse().unwrap();
        assert_eq!(m, m2(2, 1, 1, 1));
        assert_eq!(m.to_string().parse::<Mat2Z>().unwrap(), m);
        let m: MatNZ = "1,2,3;4,5,6;7,8,9".parse().unwrap();
        assert_eq!(m.to_string().parse::<MatNZ>().unwrap(), m);
        assert!("1,2;3".parse::<MatNZ>().is_err());
    }
}
