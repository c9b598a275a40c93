//! Laurent polynomials and matrices over the group ring C[Z^k].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{L2tError, Result};
use crate::numeric::{ComplexMatrix, ComplexPolynomial, C64, ONE, ZERO};

/// Coefficients smaller than this times the largest one are dropped.
pub const CANONICAL_REL_TOL: f64 = 1e-14;

/// Largest matrix handled by exact cofactor expansion.
pub const SYMBOLIC_DET_CAP: usize = 6;

/// A group element of Z^k written additively.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentVector(pub Vec<i64>);

impl ExponentVector {
    pub fn zero(k: usize) -> Self {
        Self(vec![0; k])
    }

    pub fn unit(k: usize, i: usize) -> Self {
        let mut v = vec![0; k];
        v[i] = 1;
        Self(v)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }

    pub fn scaled(&self, s: i64) -> Self {
        Self(self.0.iter().map(|a| a * s).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Image under the homomorphism sending generator i to `images[i]`.
    pub fn push_forward(&self, images: &[ExponentVector], target_rank: usize) -> Self {
        let mut out = vec![0; target_rank];
        for (&e, img) in self.0.iter().zip(images) {
            for (o, &x) in out.iter_mut().zip(&img.0) {
                *o += e * x;
            }
        }
        Self(out)
    }

    /// Evaluates the character `prod z_i^{g_i}`.
    pub fn character(&self, z: &[C64]) -> C64 {
        self.0.iter().zip(z).fold(ONE, |acc, (&e, &zi)| acc * zi.powi(e as i32))
    }
}

/// Finite sum of complex multiples of group elements, in canonical form:
/// sorted terms, no zero coefficients.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LaurentWire", into = "LaurentWire")]
pub struct LaurentElement {
    rank: usize,
    terms: BTreeMap<ExponentVector, C64>,
}

#[derive(Serialize, Deserialize)]
struct TermWire {
    exp: Vec<i64>,
    coeff: C64,
}

#[derive(Serialize, Deserialize)]
struct LaurentWire {
    k: usize,
    terms: Vec<TermWire>,
}

impl TryFrom<LaurentWire> for LaurentElement {
    type Error = L2tError;

    fn try_from(w: LaurentWire) -> Result<Self> {
        LaurentElement::from_terms(w.k, w.terms.into_iter().map(|t| (ExponentVector(t.exp), t.coeff)))
    }
}

impl From<LaurentElement> for LaurentWire {
    fn from(e: LaurentElement) -> Self {
        LaurentWire {
            k: e.rank,
            terms: e.terms.into_iter().map(|(g, c)| TermWire { exp: g.0, coeff: c }).collect(),
        }
    }
}

impl fmt::Debug for LaurentElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(g, c)| format!("({:.6}{:+.6}i){:?}", c.re, c.im, g.0))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl LaurentElement {
    pub fn zero(rank: usize) -> Self {
        Self { rank, terms: BTreeMap::new() }
    }

    pub fn constant(rank: usize, c: C64) -> Self {
        Self::monomial(rank, ExponentVector::zero(rank), c)
    }

    pub fn one(rank: usize) -> Self {
        Self::constant(rank, ONE)
    }

    pub fn monomial(rank: usize, g: ExponentVector, c: C64) -> Self {
        let mut terms = BTreeMap::new();
        if c != ZERO {
            terms.insert(g, c);
        }
        Self { rank, terms }
    }

    /// Real-coefficient shorthand: `[(exponents, coefficient)]`.
    pub fn real(rank: usize, terms: &[(&[i64], f64)]) -> Result<Self> {
        Self::from_terms(rank, terms.iter().map(|(e, c)| (ExponentVector(e.to_vec()), C64::new(*c, 0.0))))
    }

    /// The generator `z_i`.
    pub fn variable(rank: usize, i: usize) -> Self {
        Self::monomial(rank, ExponentVector::unit(rank, i), ONE)
    }

    /// Sums repeated exponents and canonicalises.
    pub fn from_terms(rank: usize, terms: impl IntoIterator<Item = (ExponentVector, C64)>) -> Result<Self> {
        let mut map: BTreeMap<ExponentVector, C64> = BTreeMap::new();
        for (g, c) in terms {
            if g.rank() != rank {
                return Err(L2tError::RankMismatch { expected: rank, found: g.rank() });
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(L2tError::Invalid("non-finite coefficient".into()));
            }
            *map.entry(g).or_insert(ZERO) += c;
        }
        Ok(Self::canonical(rank, map))
    }

    fn canonical(rank: usize, mut terms: BTreeMap<ExponentVector, C64>) -> Self {
        let scale = terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = CANONICAL_REL_TOL * scale;
        terms.retain(|_, c| c.norm() > cut && *c != ZERO);
        Self { rank, terms }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, g: &ExponentVector) -> C64 {
        self.terms.get(g).copied().unwrap_or(ZERO)
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn check_rank(&self, other: &Self) -> Result<()> {
        if self.rank != other.rank {
            return Err(L2tError::RankMismatch { expected: self.rank, found: other.rank });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_rank(other)?;
        let mut terms = self.terms.clone();
        for (g, c) in &other.terms {
            *terms.entry(g.clone()).or_insert(ZERO) += c;
        }
        Ok(Self::canonical(self.rank, terms))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(-ONE)
    }

    pub fn scale(&self, s: C64) -> Self {
        let terms = self.terms.iter().map(|(g, c)| (g.clone(), c * s)).collect();
        Self::canonical(self.rank, terms)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_rank(other)?;
        let mut terms: BTreeMap<ExponentVector, C64> = BTreeMap::new();
        for (g, a) in &self.terms {
            for (h, b) in &other.terms {
                *terms.entry(g.add(h)).or_insert(ZERO) += a * b;
            }
        }
        Ok(Self::canonical(self.rank, terms))
    }

    /// The involution `sum c_g g -> sum conj(c_g) g^{-1}`.
    pub fn involution(&self) -> Self {
        let terms = self.terms.iter().map(|(g, c)| (g.neg(), c.conj())).collect();
        Self { rank: self.rank, terms }
    }

    /// Evaluates at a point of the unit torus.
    pub fn evaluate(&self, z: &[C64]) -> Result<C64> {
        if z.len() != self.rank {
            return Err(L2tError::RankMismatch { expected: self.rank, found: z.len() });
        }
        for zi in z {
            let m = zi.norm();
            if (m - 1.0).abs() > 1e-9 {
                return Err(L2tError::OffTorus { modulus: m });
            }
        }
        Ok(self.evaluate_unchecked(z))
    }

    /// Evaluates anywhere on (C^*)^k.
    pub fn evaluate_unchecked(&self, z: &[C64]) -> C64 {
        self.terms.iter().map(|(g, c)| c * g.character(z)).sum()
    }

    /// Applies `g -> prod_j t_j^{phi_j(g)} g` to every term.
    pub fn multi_twist(&self, spec: &MultiTwistSpec) -> Result<Self> {
        if let Some(bad) = spec.classes.iter().find(|c| c.rank() != self.rank) {
            return Err(L2tError::RankMismatch { expected: self.rank, found: bad.rank() });
        }
        let terms = self.terms.iter().map(|(g, c)| (g.clone(), c * spec.weight(g))).collect();
        Ok(Self::canonical(self.rank, terms))
    }

    /// Image under the group homomorphism with generator images `images`.
    pub fn push_forward(&self, images: &[ExponentVector], target_rank: usize) -> Result<Self> {
        if images.len() != self.rank {
            return Err(L2tError::RankMismatch { expected: self.rank, found: images.len() });
        }
        if let Some(bad) = images.iter().find(|g| g.rank() != target_rank) {
            return Err(L2tError::RankMismatch { expected: target_rank, found: bad.rank() });
        }
        Self::from_terms(target_rank, self.terms.iter().map(|(g, &c)| (g.push_forward(images, target_rank), c)))
    }

    /// Per-variable minimum and maximum exponent; `None` when zero.
    pub fn exponent_bounds(&self) -> Option<Vec<(i64, i64)>> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let mut b: Vec<(i64, i64)> = first.0.iter().map(|&e| (e, e)).collect();
        for g in it {
            for (bi, &e) in b.iter_mut().zip(&g.0) {
                bi.0 = bi.0.min(e);
                bi.1 = bi.1.max(e);
            }
        }
        Some(b)
    }

    /// For rank one: the polynomial `z^{-min} p(z)` and the shift `min`.
    pub fn to_univariate(&self) -> Result<(ComplexPolynomial, i64)> {
        if self.rank != 1 {
            return Err(L2tError::RankMismatch { expected: 1, found: self.rank });
        }
        let Some(b) = self.exponent_bounds() else {
            return Ok((ComplexPolynomial::new(Vec::new()), 0));
        };
        let (lo, hi) = b[0];
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for (g, c) in &self.terms {
            coeffs[(g.0[0] - lo) as usize] = *c;
        }
        Ok((ComplexPolynomial::new(coeffs), lo))
    }

    /// Substitutes values for all but the last variable and returns the
    /// univariate polynomial in the last one (shifted to start at degree 0).
    pub fn slice_last(&self, head: &[C64]) -> Result<ComplexPolynomial> {
        if self.rank == 0 || head.len() + 1 != self.rank {
            return Err(L2tError::RankMismatch { expected: self.rank.saturating_sub(1), found: head.len() });
        }
        let Some(b) = self.exponent_bounds() else {
            return Ok(ComplexPolynomial::new(Vec::new()));
        };
        let (lo, hi) = b[self.rank - 1];
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for (g, c) in &self.terms {
            let head_char: C64 =
                g.0[..self.rank - 1].iter().zip(head).fold(ONE, |acc, (&e, &z)| acc * z.powi(e as i32));
            coeffs[(g.0[self.rank - 1] - lo) as usize] += c * head_char;
        }
        Ok(ComplexPolynomial::new(coeffs))
    }
}

/// A real cohomology class on Z^k, i.e. a homomorphism Z^k -> R.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CohomologyClass(pub Vec<f64>);

impl CohomologyClass {
    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, g: &ExponentVector) -> f64 {
        self.0.iter().zip(&g.0).map(|(a, &e)| a * e as f64).sum()
    }
}

/// Pairs (phi_j, t_j) defining `g -> prod t_j^{phi_j(g)} g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiTwistSpec {
    pub classes: Vec<CohomologyClass>,
    pub params: Vec<f64>,
}

impl MultiTwistSpec {
    pub fn new(classes: Vec<CohomologyClass>, params: Vec<f64>) -> Result<Self> {
        if classes.len() != params.len() {
            return Err(L2tError::Shape(format!(
                "{} classes but {} twist parameters",
                classes.len(),
                params.len()
            )));
        }
        if let Some(&t) = params.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            return Err(L2tError::NonPositiveTwist(t));
        }
        Ok(Self { classes, params })
    }

    pub fn single(class: CohomologyClass, t: f64) -> Result<Self> {
        Self::new(vec![class], vec![t])
    }

    /// Concatenation; twisting by the result equals twisting by both.
    pub fn compose(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.classes.extend(other.classes.iter().cloned());
        out.params.extend(other.params.iter().copied());
        out
    }

    pub fn weight(&self, g: &ExponentVector) -> f64 {
        self.classes.iter().zip(&self.params).map(|(c, t)| t.powf(c.apply(g))).product()
    }
}

/// Matrix over C[Z^k], row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LaurentMatrixWire", into = "LaurentMatrixWire")]
pub struct LaurentMatrix {
    rank: usize,
    rows: usize,
    cols: usize,
    entries: Vec<LaurentElement>,
}

#[derive(Serialize, Deserialize)]
struct LaurentMatrixWire {
    k: usize,
    rows: usize,
    cols: usize,
    /// Row-major list of rows, each a list of elements given as term lists.
    entries: Vec<Vec<Vec<TermWire>>>,
}

impl TryFrom<LaurentMatrixWire> for LaurentMatrix {
    type Error = L2tError;

    fn try_from(w: LaurentMatrixWire) -> Result<Self> {
        if w.entries.len() != w.rows || w.entries.iter().any(|r| r.len() != w.cols) {
            return Err(L2tError::Shape(format!(
                "matrix declared {}x{} but entries do not match",
                w.rows, w.cols
            )));
        }
        let mut entries = Vec::with_capacity(w.rows * w.cols);
        for row in w.entries {
            for cell in row {
                entries.push(LaurentElement::from_terms(
                    w.k,
                    cell.into_iter().map(|t| (ExponentVector(t.exp), t.coeff)),
                )?);
            }
        }
        LaurentMatrix::new(w.k, w.rows, w.cols, entries)
    }
}

impl From<LaurentMatrix> for LaurentMatrixWire {
    fn from(m: LaurentMatrix) -> Self {
        let cols = m.cols;
        let mut entries = Vec::with_capacity(m.rows);
        let mut it = m.entries.into_iter();
        for _ in 0..m.rows {
            let row = (0..cols)
                .map(|_| {
                    let e = it.next().expect("entry count");
                    e.terms.into_iter().map(|(g, c)| TermWire { exp: g.0, coeff: c }).collect()
                })
                .collect();
            entries.push(row);
        }
        LaurentMatrixWire { k: m.rank, rows: m.rows, cols, entries }
    }
}

impl fmt::Debug for LaurentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LaurentMatrix k={} {}x{} [", self.rank, self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:?}", self.get(i, j))).collect();
            writeln!(f, "  {}", row.join(" | "))?;
        }
        write!(f, "]")
    }
}

impl LaurentMatrix {
    pub fn new(rank: usize, rows: usize, cols: usize, entries: Vec<LaurentElement>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(L2tError::Shape(format!("{} entries for a {}x{} matrix", entries.len(), rows, cols)));
        }
        if let Some(bad) = entries.iter().find(|e| e.rank != rank) {
            return Err(L2tError::RankMismatch { expected: rank, found: bad.rank });
        }
        Ok(Self { rank, rows, cols, entries })
    }

    pub fn zeros(rank: usize, rows: usize, cols: usize) -> Self {
        Self { rank, rows, cols, entries: vec![LaurentElement::zero(rank); rows * cols] }
    }

    pub fn identity(rank: usize, n: usize) -> Self {
        let mut m = Self::zeros(rank, n, n);
        for i in 0..n {
            m.set(i, i, LaurentElement::one(rank));
        }
        m
    }

    pub fn from_rows(rank: usize, rows: Vec<Vec<LaurentElement>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(L2tError::Shape("ragged rows".into()));
        }
        Self::new(rank, r, c, rows.into_iter().flatten().collect())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentElement {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: LaurentElement) {
        debug_assert_eq!(e.rank, self.rank);
        self.entries[i * self.cols + j] = e;
    }

    pub fn entries(&self) -> &[LaurentElement] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(LaurentElement::is_zero)
    }

    pub fn max_coeff(&self) -> f64 {
        self.entries.iter().map(LaurentElement::max_coeff).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(L2tError::Shape("matrix sum of different shapes".into()));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Self::new(self.rank, self.rows, self.cols, entries)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { entries: self.entries.iter().map(|e| e.scale(s)).collect(), ..self.clone() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.rank != other.rank {
            return Err(L2tError::RankMismatch { expected: self.rank, found: other.rank });
        }
        if self.cols != other.rows {
            return Err(L2tError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rank, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: BTreeMap<ExponentVector, C64> = BTreeMap::new();
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    for (g, x) in &a.terms {
                        for (h, y) in &b.terms {
                            *acc.entry(g.add(h)).or_insert(ZERO) += x * y;
                        }
                    }
                }
                out.set(i, j, LaurentElement::canonical(self.rank, acc));
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.rank, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// Transpose combined with the involution on entries.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.rank, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).involution());
            }
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rank, rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.set(a, b, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn evaluate(&self, z: &[C64]) -> Result<ComplexMatrix> {
        if z.len() != self.rank {
            return Err(L2tError::RankMismatch { expected: self.rank, found: z.len() });
        }
        for zi in z {
            if (zi.norm() - 1.0).abs() > 1e-9 {
                return Err(L2tError::OffTorus { modulus: zi.norm() });
            }
        }
        Ok(self.evaluate_unchecked(z))
    }

    pub fn evaluate_unchecked(&self, z: &[C64]) -> ComplexMatrix {
        let data = self.entries.iter().map(|e| e.evaluate_unchecked(z)).collect();
        ComplexMatrix::new(self.rows, self.cols, data).expect("shape is consistent")
    }

    pub fn multi_twist(&self, spec: &MultiTwistSpec) -> Result<Self> {
        let entries = self.entries.iter().map(|e| e.multi_twist(spec)).collect::<Result<_>>()?;
        Self::new(self.rank, self.rows, self.cols, entries)
    }

    pub fn push_forward(&self, images: &[ExponentVector], target_rank: usize) -> Result<Self> {
        let entries = self.entries.iter().map(|e| e.push_forward(images, target_rank)).collect::<Result<_>>()?;
        Self::new(target_rank, self.rows, self.cols, entries)
    }

    /// Exact determinant by cofactor expansion with memoised minors.
    pub fn symbolic_det(&self) -> Result<LaurentElement> {
        if !self.is_square() {
            return Err(L2tError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if n > SYMBOLIC_DET_CAP {
            return Err(L2tError::SymbolicCap { size: n, cap: SYMBOLIC_DET_CAP });
        }
        if n == 0 {
            return Ok(LaurentElement::one(self.rank));
        }
        // minors[mask] = determinant of rows (n - popcount(mask))..n on the
        // column set `mask`, built up from the bottom row.
        let full = (1usize << n) - 1;
        let mut minors: Vec<Option<LaurentElement>> = vec![None; full + 1];
        minors[0] = Some(LaurentElement::one(self.rank));
        for mask in 1..=full {
            let size = mask.count_ones() as usize;
            let row = n - size;
            let mut acc: BTreeMap<ExponentVector, C64> = BTreeMap::new();
            let mut position = 0;
            for j in 0..n {
                if mask & (1 << j) == 0 {
                    continue;
                }
                let sign = if position % 2 == 0 { ONE } else { -ONE };
                position += 1;
                let a = self.get(row, j);
                if a.is_zero() {
                    continue;
                }
                let minor = minors[mask & !(1 << j)].as_ref().expect("smaller minors first");
                for (g, x) in &a.terms {
                    for (h, y) in &minor.terms {
                        *acc.entry(g.add(h)).or_insert(ZERO) += sign * x * y;
                    }
                }
            }
            minors[mask] = Some(LaurentElement::canonical(self.rank, acc));
        }
        Ok(minors[full].take().expect("full minor"))
    }
}
