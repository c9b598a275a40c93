//! Based chain complexes over C[Z^k], twisting by representations, and
//! L2-torsion.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{L2tError, Result};
use crate::laurent::{ExponentVector, LaurentElement, LaurentMatrix};
use crate::mahler::{is_det_zero, random_torus_points, rdet_abelian, MahlerResult, QuadConfig, ZeroEvidence};
use crate::numeric::{orthogonal_residual, ComplexMatrix, C64};

pub const DEFAULT_UNIMODULAR_TOL: f64 = 1e-9;
/// Relative tolerance for commutation and factorisation checks.
pub const MATRIX_CHECK_TOL: f64 = 1e-9;
/// Relative residual below which a row counts as dependent.
pub const ROW_RANK_TOL: f64 = 1e-8;
const SUBSET_TEST_POINTS: usize = 4;
const SUBSET_ATTEMPTS: u64 = 8;

fn default_unimodular_tol() -> f64 {
    DEFAULT_UNIMODULAR_TOL
}

/// Finite-dimensional representation given by generator images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RepWire", into = "RepWire")]
pub struct Representation {
    n: usize,
    images: Vec<ComplexMatrix>,
    unimodular_tol: f64,
}

#[derive(Serialize, Deserialize)]
struct RepWire {
    n: usize,
    #[serde(alias = "images")]
    generator_images: Vec<ComplexMatrix>,
    #[serde(default = "default_unimodular_tol")]
    unimodular_tol: f64,
}

impl TryFrom<RepWire> for Representation {
    type Error = L2tError;

    fn try_from(w: RepWire) -> Result<Self> {
        Representation::with_tol(w.n, w.generator_images, w.unimodular_tol)
    }
}

impl From<Representation> for RepWire {
    fn from(r: Representation) -> Self {
        RepWire { n: r.n, generator_images: r.images, unimodular_tol: r.unimodular_tol }
    }
}

fn relative_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    a.sub(b).map(|d| d.max_abs() / scale).unwrap_or(f64::INFINITY)
}

impl Representation {
    pub fn new(n: usize, images: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tol(n, images, DEFAULT_UNIMODULAR_TOL)
    }

    /// Checks shapes and `|det - 1| <= tol` (relative to the entry scale for
    /// large images).
    pub fn with_tol(n: usize, images: Vec<ComplexMatrix>, unimodular_tol: f64) -> Result<Self> {
        for m in &images {
            if m.rows() != n || m.cols() != n {
                return Err(L2tError::Shape(format!("generator image is {}x{}, expected {n}x{n}", m.rows(), m.cols())));
            }
            let dev = (m.det()? - C64::new(1.0, 0.0)).norm();
            let scale = m.max_abs().max(1.0).powi(n as i32);
            if dev > unimodular_tol * scale {
                return Err(L2tError::NotUnimodular(dev));
            }
        }
        Ok(Self { n, images, unimodular_tol })
    }

    /// The trivial representation of Z^k in dimension n.
    pub fn trivial(n: usize, k: usize) -> Self {
        Self { n, images: vec![ComplexMatrix::identity(n); k], unimodular_tol: DEFAULT_UNIMODULAR_TOL }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn generator_count(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[ComplexMatrix] {
        &self.images
    }

    pub fn check_commuting(&self) -> Result<()> {
        for (i, a) in self.images.iter().enumerate() {
            for b in &self.images[i + 1..] {
                if relative_diff(&a.mul(b)?, &b.mul(a)?) > MATRIX_CHECK_TOL * a.max_abs().max(1.0) * b.max_abs().max(1.0)
                {
                    return Err(L2tError::NotAdmissible("generator images do not commute".into()));
                }
            }
        }
        Ok(())
    }

    /// `prod_i rho(e_i)^{g_i}` (images are assumed to commute).
    pub fn image(&self, g: &ExponentVector) -> Result<ComplexMatrix> {
        if g.rank() != self.images.len() {
            return Err(L2tError::RankMismatch { expected: self.images.len(), found: g.rank() });
        }
        let mut acc = ComplexMatrix::identity(self.n);
        for (m, &e) in self.images.iter().zip(&g.0) {
            if e != 0 {
                acc = acc.mul(&m.pow(e)?)?;
            }
        }
        Ok(acc)
    }

    /// Conjugate representation `T rho T^{-1}`.
    pub fn conjugate(&self, t: &ComplexMatrix) -> Result<Self> {
        let ti = t.inverse()?;
        let images = self.images.iter().map(|m| t.mul(m)?.mul(&ti)).collect::<Result<_>>()?;
        Ok(Self { images, ..self.clone() })
    }

    /// Block direct sum with another representation of the same group.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.images.len() != other.images.len() {
            return Err(L2tError::RankMismatch { expected: self.images.len(), found: other.images.len() });
        }
        let images = self.images.iter().zip(&other.images).map(|(a, b)| a.direct_sum(b)).collect();
        Ok(Self { n: self.n + other.n, images, unimodular_tol: self.unimodular_tol.max(other.unimodular_tol) })
    }
}

/// Data (gamma, rho) with rho factoring through gamma: Z^s -> Z^k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TripleWire", into = "TripleWire")]
pub struct AdmissibleTriple {
    gamma: Vec<ExponentVector>,
    target_rank: usize,
    rep: Representation,
    witness: Option<Representation>,
}

#[derive(Serialize, Deserialize)]
struct TripleWire {
    gamma: Vec<ExponentVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_rank: Option<usize>,
    rep: Representation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<Representation>,
}

impl TryFrom<TripleWire> for AdmissibleTriple {
    type Error = L2tError;

    fn try_from(w: TripleWire) -> Result<Self> {
        let k = match (w.target_rank, w.gamma.first()) {
            (Some(k), _) => k,
            (None, Some(g)) => g.rank(),
            (None, None) => 0,
        };
        AdmissibleTriple::new(w.gamma, k, w.rep, w.witness)
    }
}

impl From<AdmissibleTriple> for TripleWire {
    fn from(t: AdmissibleTriple) -> Self {
        TripleWire { gamma: t.gamma, target_rank: Some(t.target_rank), rep: t.rep, witness: t.witness }
    }
}

impl AdmissibleTriple {
    /// Validates the triple. Without a witness the map gamma must be
    /// injective; with one, rho(g) must equal witness(gamma(g)) on every
    /// generator.
    pub fn new(
        gamma: Vec<ExponentVector>,
        target_rank: usize,
        rep: Representation,
        witness: Option<Representation>,
    ) -> Result<Self> {
        if rep.generator_count() != gamma.len() {
            return Err(L2tError::Shape(format!(
                "{} generator images for {} source generators",
                rep.generator_count(),
                gamma.len()
            )));
        }
        if let Some(g) = gamma.iter().find(|g| g.rank() != target_rank) {
            return Err(L2tError::RankMismatch { expected: target_rank, found: g.rank() });
        }
        rep.check_commuting()?;
        match &witness {
            Some(w) => {
                if w.dim() != rep.dim() || w.generator_count() != target_rank {
                    return Err(L2tError::NotAdmissible("witness has the wrong shape".into()));
                }
                w.check_commuting()?;
                for (i, g) in gamma.iter().enumerate() {
                    let lhs = &rep.images[i];
                    let rhs = w.image(g)?;
                    if relative_diff(lhs, &rhs) > MATRIX_CHECK_TOL {
                        return Err(L2tError::NotAdmissible(format!(
                            "generator {i}: rho does not factor through gamma"
                        )));
                    }
                }
            }
            None => {
                if !gamma.is_empty() {
                    let rows: Vec<Vec<C64>> =
                        gamma.iter().map(|g| g.0.iter().map(|&e| C64::new(e as f64, 0.0)).collect()).collect();
                    let m = ComplexMatrix::from_rows(&rows)?;
                    if m.rank(1e-9) < gamma.len() {
                        return Err(L2tError::NotAdmissible(
                            "gamma is not injective; supply a witness representation on the target".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self { gamma, target_rank, rep, witness })
    }

    /// The triple (identity, witness) for a representation of Z^k itself.
    pub fn identity(rep: Representation) -> Result<Self> {
        let k = rep.generator_count();
        let gamma = (0..k).map(|i| ExponentVector::unit(k, i)).collect();
        Self::new(gamma, k, rep, None)
    }

    pub fn gamma(&self) -> &[ExponentVector] {
        &self.gamma
    }

    pub fn target_rank(&self) -> usize {
        self.target_rank
    }

    pub fn rep(&self) -> &Representation {
        &self.rep
    }
}

/// Replaces each term c g by the block c z^{image(g)} matrix(g).
fn twist_with(
    m: &LaurentMatrix,
    n: usize,
    target_rank: usize,
    image: &dyn Fn(&ExponentVector) -> Result<(ExponentVector, ComplexMatrix)>,
) -> Result<LaurentMatrix> {
    let mut cache: HashMap<ExponentVector, (ExponentVector, ComplexMatrix)> = HashMap::new();
    let (r, c) = (m.rows(), m.cols());
    let mut terms: Vec<Vec<(ExponentVector, C64)>> = vec![Vec::new(); r * n * c * n];
    for i in 0..r {
        for j in 0..c {
            for (g, &coef) in m.get(i, j).terms() {
                if !cache.contains_key(g) {
                    cache.insert(g.clone(), image(g)?);
                }
                let (tg, mat) = &cache[g];
                for a in 0..n {
                    for b in 0..n {
                        let v = coef * mat[(a, b)];
                        if v != C64::new(0.0, 0.0) {
                            terms[(i * n + a) * c * n + j * n + b].push((tg.clone(), v));
                        }
                    }
                }
            }
        }
    }
    let entries = terms.into_iter().map(|t| LaurentElement::from_terms(target_rank, t)).collect::<Result<_>>()?;
    LaurentMatrix::new(target_rank, r * n, c * n, entries)
}

/// Twist of a matrix over C[Z^s] by an admissible triple.
pub fn twist_matrix(m: &LaurentMatrix, triple: &AdmissibleTriple) -> Result<LaurentMatrix> {
    if m.rank() != triple.gamma.len() {
        return Err(L2tError::RankMismatch { expected: triple.gamma.len(), found: m.rank() });
    }
    let k = triple.target_rank;
    twist_with(m, triple.rep.dim(), k, &|g| Ok((g.push_forward(&triple.gamma, k), triple.rep.image(g)?)))
}

/// Twist by a representation of Z^k itself (gamma = identity).
pub fn diagonal_twist(m: &LaurentMatrix, rep: &Representation) -> Result<LaurentMatrix> {
    if m.rank() != rep.generator_count() {
        return Err(L2tError::RankMismatch { expected: rep.generator_count(), found: m.rank() });
    }
    twist_with(m, rep.dim(), m.rank(), &|g| Ok((g.clone(), rep.image(g)?)))
}

/// Finite based free chain complex over C[Z^k]. `boundaries[i]` maps
/// degree `min_degree + i + 1` to `min_degree + i` and has shape
/// `ranks[i + 1] x ranks[i]` (row-vector convention).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexWire", into = "ComplexWire")]
pub struct BasedChainComplex {
    rank: usize,
    min_degree: i64,
    ranks: Vec<usize>,
    boundaries: Vec<LaurentMatrix>,
}

#[derive(Serialize, Deserialize)]
struct ComplexWire {
    k: usize,
    #[serde(default)]
    min_degree: i64,
    ranks: Vec<usize>,
    boundaries: Vec<LaurentMatrix>,
}

impl TryFrom<ComplexWire> for BasedChainComplex {
    type Error = L2tError;

    fn try_from(w: ComplexWire) -> Result<Self> {
        BasedChainComplex::new(w.k, w.min_degree, w.ranks, w.boundaries)
    }
}

impl From<BasedChainComplex> for ComplexWire {
    fn from(c: BasedChainComplex) -> Self {
        ComplexWire { k: c.rank, min_degree: c.min_degree, ranks: c.ranks, boundaries: c.boundaries }
    }
}

impl BasedChainComplex {
    pub fn new(rank: usize, min_degree: i64, ranks: Vec<usize>, boundaries: Vec<LaurentMatrix>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(L2tError::Shape("a chain complex needs at least one module".into()));
        }
        if boundaries.len() + 1 != ranks.len() {
            return Err(L2tError::Shape(format!("{} modules need {} boundaries", ranks.len(), ranks.len() - 1)));
        }
        for (i, d) in boundaries.iter().enumerate() {
            if d.rank() != rank {
                return Err(L2tError::RankMismatch { expected: rank, found: d.rank() });
            }
            if d.rows() != ranks[i + 1] || d.cols() != ranks[i] {
                return Err(L2tError::Shape(format!(
                    "boundary {} is {}x{}, expected {}x{}",
                    i,
                    d.rows(),
                    d.cols(),
                    ranks[i + 1],
                    ranks[i]
                )));
            }
        }
        for i in 1..boundaries.len() {
            let (upper, lower) = (&boundaries[i], &boundaries[i - 1]);
            let prod = upper.mul(lower)?;
            let scale = upper.max_coeff().max(1.0) * lower.max_coeff().max(1.0) * ranks[i].max(1) as f64;
            if prod.max_coeff() > 1e-9 * scale {
                return Err(L2tError::Invalid(format!(
                    "boundary composition in degree {} is not zero (max coefficient {:.3e})",
                    min_degree + i as i64 + 1,
                    prod.max_coeff()
                )));
            }
        }
        Ok(Self { rank, min_degree, ranks, boundaries })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn min_degree(&self) -> i64 {
        self.min_degree
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn boundaries(&self) -> &[LaurentMatrix] {
        &self.boundaries
    }

    /// Degree of the module `ranks[i]`.
    pub fn degree(&self, i: usize) -> i64 {
        self.min_degree + i as i64
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.ranks.iter().enumerate().map(|(i, &r)| if self.degree(i) % 2 == 0 { r as i64 } else { -(r as i64) }).sum()
    }

    pub fn map_boundaries(&self, f: impl Fn(&LaurentMatrix) -> Result<LaurentMatrix>) -> Result<Self> {
        let boundaries: Vec<LaurentMatrix> = self.boundaries.iter().map(f).collect::<Result<_>>()?;
        let rank = boundaries.first().map_or(self.rank, LaurentMatrix::rank);
        let mut ranks = vec![0; self.ranks.len()];
        if boundaries.is_empty() {
            return Ok(self.clone());
        }
        for (i, d) in boundaries.iter().enumerate() {
            ranks[i] = d.cols();
            ranks[i + 1] = d.rows();
        }
        Self::new(rank, self.min_degree, ranks, boundaries)
    }

    pub fn twist(&self, triple: &AdmissibleTriple) -> Result<Self> {
        if self.rank != triple.gamma.len() {
            return Err(L2tError::RankMismatch { expected: triple.gamma.len(), found: self.rank });
        }
        let n = triple.rep.dim();
        let mut out = self.map_boundaries(|d| twist_matrix(d, triple))?;
        out.rank = triple.target_rank;
        out.ranks = self.ranks.iter().map(|r| r * n).collect();
        Ok(out)
    }

    pub fn diagonal_twist(&self, rep: &Representation) -> Result<Self> {
        if self.rank != rep.generator_count() {
            return Err(L2tError::RankMismatch { expected: rep.generator_count(), found: self.rank });
        }
        let n = rep.dim();
        let mut out = self.map_boundaries(|d| diagonal_twist(d, rep))?;
        out.ranks = self.ranks.iter().map(|r| r * n).collect();
        Ok(out)
    }

    /// Combinatorial Laplacians, one per module.
    pub fn laplacians(&self) -> Result<Vec<LaurentMatrix>> {
        let l = self.boundaries.len();
        (0..self.ranks.len())
            .map(|i| {
                let mut acc = LaurentMatrix::zeros(self.rank, self.ranks[i], self.ranks[i]);
                if i >= 1 {
                    let d = &self.boundaries[i - 1];
                    acc = acc.add(&d.mul(&d.adjoint())?)?;
                }
                if i < l {
                    let d = &self.boundaries[i];
                    acc = acc.add(&d.adjoint().mul(d)?)?;
                }
                Ok(acc)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorsionStatus {
    Ok,
    NotWeaklyAcyclic,
    NotDeterminantClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorsionMethod {
    #[default]
    Subset,
    Laplacian,
}

/// One factor of a torsion product: `rdet^exponent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionFactor {
    pub degree: i64,
    pub size: usize,
    pub exponent: f64,
    pub rdet: MahlerResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionValue {
    pub value: f64,
    #[serde(with = "crate::mahler::log_value_serde")]
    pub log_value: f64,
    pub status: TorsionStatus,
    pub method: TorsionMethod,
    pub estimated_error: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<TorsionFactor>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TorsionValue {
    fn failed(status: TorsionStatus, method: TorsionMethod, why: String) -> Self {
        Self {
            value: 0.0,
            log_value: f64::NEG_INFINITY,
            status,
            method,
            estimated_error: 0.0,
            factors: Vec::new(),
            warnings: vec![why],
        }
    }

    fn from_factors(method: TorsionMethod, factors: Vec<TorsionFactor>) -> Self {
        let log_value: f64 = factors.iter().map(|f| f.exponent * f.rdet.log_value).sum();
        let estimated_error = factors.iter().map(|f| f.exponent.abs() * f.rdet.estimated_error).sum();
        let warnings = factors.iter().flat_map(|f| f.rdet.warnings.iter().cloned()).collect();
        Self {
            value: log_value.exp(),
            log_value,
            status: TorsionStatus::Ok,
            method,
            estimated_error,
            factors,
            warnings,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == TorsionStatus::Ok
    }

    /// `value^s` for a real power (used for square roots and inverses).
    pub fn powf(mut self, s: f64) -> Self {
        if self.is_ok() {
            self.log_value *= s;
            self.value = self.log_value.exp();
            self.estimated_error *= s.abs();
        }
        self
    }
}

/// Greedy choice of `need` rows of `rows` (in the given order) whose
/// restrictions to `cols` are independent at every evaluation point.
fn choose_rows(evals: &[ComplexMatrix], order: &[usize], cols: &[usize], need: usize) -> Option<Vec<usize>> {
    let mut bases: Vec<Vec<Vec<C64>>> = vec![Vec::new(); evals.len()];
    let mut chosen = Vec::with_capacity(need);
    for &r in order {
        if chosen.len() == need {
            break;
        }
        let residuals: Option<Vec<Vec<C64>>> = evals
            .iter()
            .zip(&bases)
            .map(|(m, basis)| {
                let v: Vec<C64> = cols.iter().map(|&j| m[(r, j)]).collect();
                orthogonal_residual(basis, &v, ROW_RANK_TOL)
            })
            .collect();
        if let Some(res) = residuals {
            for (basis, q) in bases.iter_mut().zip(res) {
                basis.push(q);
            }
            chosen.push(r);
        }
    }
    (chosen.len() == need).then(|| {
        chosen.sort_unstable();
        chosen
    })
}

enum SelectionFailure {
    /// Module ranks alone rule out acyclicity.
    Counting(String),
    /// No independent rows in this ordering.
    Rank(usize),
}

/// Row selections `S_i` and column complements for each boundary.
fn select_blocks(
    c: &BasedChainComplex,
    evals: &[Vec<ComplexMatrix>],
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<(Vec<usize>, Vec<usize>)>, SelectionFailure> {
    let l = c.boundaries.len();
    if l == 0 {
        return if c.ranks[0] == 0 {
            Ok(Vec::new())
        } else {
            Err(SelectionFailure::Counting("a single nonzero module has homology".into()))
        };
    }
    let mut prev: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(l);
    for i in 1..=l {
        let cols: Vec<usize> = (0..c.ranks[i - 1]).filter(|j| prev.binary_search(j).is_err()).collect();
        let need = cols.len();
        if need > c.ranks[i] || (i == l && need != c.ranks[i]) {
            return Err(SelectionFailure::Counting(format!(
                "module ranks {:?} leave homology in degree {}",
                c.ranks,
                c.degree(if need > c.ranks[i] { i - 1 } else { i })
            )));
        }
        let mut order: Vec<usize> = (0..c.ranks[i]).collect();
        order.shuffle(rng);
        let point_evals: Vec<ComplexMatrix> = evals.iter().map(|e| e[i - 1].clone()).collect();
        let rows = choose_rows(&point_evals, &order, &cols, need).ok_or(SelectionFailure::Rank(i))?;
        out.push((rows.clone(), cols));
        prev = rows;
    }
    Ok(out)
}

/// Torsion as an alternating product of regularised determinants of
/// square blocks of the boundaries, chosen so that each block is
/// nonsingular.
pub fn torsion_subset(c: &BasedChainComplex, seed: u64, cfg: &QuadConfig) -> Result<TorsionValue> {
    cfg.validate()?;
    let pts = random_torus_points(c.rank, SUBSET_TEST_POINTS, seed ^ 0x7e57_9017);
    let evals: Vec<Vec<ComplexMatrix>> =
        pts.iter().map(|z| c.boundaries.iter().map(|d| d.evaluate_unchecked(z)).collect()).collect();
    let mut last_failure = String::new();
    let mut rank_failures = 0;
    for attempt in 0..SUBSET_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let blocks = match select_blocks(c, &evals, &mut rng) {
            Ok(b) => b,
            Err(SelectionFailure::Counting(why)) => {
                return Ok(TorsionValue::failed(TorsionStatus::NotWeaklyAcyclic, TorsionMethod::Subset, why))
            }
            Err(SelectionFailure::Rank(i)) => {
                rank_failures += 1;
                last_failure = format!("no nonsingular block for the boundary out of degree {}", c.degree(i));
                continue;
            }
        };
        let factors: Vec<Result<TorsionFactor>> = blocks
            .par_iter()
            .enumerate()
            .map(|(idx, (rows, cols))| {
                let i = idx + 1;
                let block = c.boundaries[idx].submatrix(rows, cols);
                let rdet = rdet_abelian(&block, cfg)?;
                let degree = c.degree(i);
                Ok(TorsionFactor { degree, size: rows.len(), exponent: if degree % 2 == 0 { 1.0 } else { -1.0 }, rdet })
            })
            .collect();
        let factors: Vec<TorsionFactor> = factors.into_iter().collect::<Result<_>>()?;
        if let Some(f) = factors.iter().find(|f| f.rdet.is_zero() || !f.rdet.log_value.is_finite()) {
            last_failure = format!("block in degree {} has vanishing regularised determinant", f.degree);
            continue;
        }
        return Ok(TorsionValue::from_factors(TorsionMethod::Subset, factors));
    }
    let status = if rank_failures == SUBSET_ATTEMPTS {
        TorsionStatus::NotWeaklyAcyclic
    } else {
        TorsionStatus::NotDeterminantClass
    };
    Ok(TorsionValue::failed(status, TorsionMethod::Subset, last_failure))
}

/// Torsion from the determinants of the combinatorial Laplacians:
/// `log tau = 1/2 sum_p (-1)^p p log rdet(Delta_p)`.
pub fn torsion_laplacian(c: &BasedChainComplex, cfg: &QuadConfig) -> Result<TorsionValue> {
    cfg.validate()?;
    let laps = c.laplacians()?;
    let factors: Vec<Result<TorsionFactor>> = laps
        .par_iter()
        .enumerate()
        .filter(|(_, d)| d.rows() > 0)
        .map(|(i, d)| {
            let p = c.degree(i);
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            Ok(TorsionFactor { degree: p, size: d.rows(), exponent: 0.5 * sign * p as f64, rdet: rdet_abelian(d, cfg)? })
        })
        .collect();
    let factors: Vec<TorsionFactor> = factors.into_iter().collect::<Result<_>>()?;
    if let Some(f) = factors.iter().find(|f| f.rdet.is_zero()) {
        return Ok(TorsionValue::failed(
            TorsionStatus::NotWeaklyAcyclic,
            TorsionMethod::Laplacian,
            format!("Laplacian in degree {} has vanishing determinant", f.degree),
        ));
    }
    Ok(TorsionValue::from_factors(TorsionMethod::Laplacian, factors))
}

pub fn torsion(c: &BasedChainComplex, method: TorsionMethod, seed: u64, cfg: &QuadConfig) -> Result<TorsionValue> {
    match method {
        TorsionMethod::Subset => torsion_subset(c, seed, cfg),
        TorsionMethod::Laplacian => torsion_laplacian(c, cfg),
    }
}

/// Whether every Laplacian has nonvanishing determinant. Over Z^k this is
/// equivalent to weak acyclicity, and determinant class is automatic.
pub fn is_weakly_acyclic(c: &BasedChainComplex) -> Result<(bool, ZeroEvidence)> {
    let mut evidence = ZeroEvidence::Symbolic;
    for d in c.laplacians()? {
        if d.rows() == 0 {
            continue;
        }
        let (zero, ev) = is_det_zero(&d)?;
        if ev == ZeroEvidence::Probabilistic {
            evidence = ev;
        }
        if zero {
            return Ok((false, evidence));
        }
    }
    Ok((true, evidence))
}
