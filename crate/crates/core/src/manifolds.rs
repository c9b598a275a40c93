//! Seifert pieces, graph manifolds, the closed-form torsion, and chain
//! models of tori, solid tori, surface-times-circle pieces and mapping tori.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::chain::{torsion_subset, BasedChainComplex, Representation, TorsionValue};
use crate::error::{L2tError, Result};
use crate::laurent::{ExponentVector, LaurentElement, LaurentMatrix};
use crate::mahler::QuadConfig;
use crate::numeric::{eigenvalues, ComplexMatrix, C64};

pub const UNIMODULAR_TOL: f64 = 1e-9;

/// Seifert fibered piece M(g, b; q_1/p_1, ..., q_k/p_k) with the image of
/// the regular fiber under the representation and a class value on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PieceWire", into = "PieceWire")]
pub struct SeifertPiece {
    pub genus: u32,
    pub boundary: u32,
    pub fibers: Vec<(i64, i64)>,
    pub fiber_image: ComplexMatrix,
    pub psi_h: f64,
}

#[derive(Serialize, Deserialize)]
struct PieceWire {
    g: u32,
    b: u32,
    #[serde(default)]
    fibers: Vec<(i64, i64)>,
    rho_h: ComplexMatrix,
    #[serde(default)]
    psi_h: f64,
}

impl TryFrom<PieceWire> for SeifertPiece {
    type Error = L2tError;

    fn try_from(w: PieceWire) -> Result<Self> {
        SeifertPiece::new(w.g, w.b, w.fibers, w.rho_h, w.psi_h)
    }
}

impl From<SeifertPiece> for PieceWire {
    fn from(p: SeifertPiece) -> Self {
        PieceWire { g: p.genus, b: p.boundary, fibers: p.fibers, rho_h: p.fiber_image, psi_h: p.psi_h }
    }
}

impl SeifertPiece {
    pub fn new(genus: u32, boundary: u32, fibers: Vec<(i64, i64)>, fiber_image: ComplexMatrix, psi_h: f64) -> Result<Self> {
        for &(q, p) in &fibers {
            if p <= 0 {
                return Err(L2tError::Invalid(format!("exceptional fiber ({q}, {p}) needs p > 0")));
            }
            if q.unsigned_abs().gcd(&p.unsigned_abs()) != 1 {
                return Err(L2tError::Invalid(format!("exceptional fiber ({q}, {p}) is not coprime")));
            }
        }
        if boundary == 0 && fibers.is_empty() {
            return Err(L2tError::Invalid("a piece needs a boundary torus or an exceptional fiber".into()));
        }
        if !fiber_image.is_square() {
            return Err(L2tError::NotSquare { rows: fiber_image.rows(), cols: fiber_image.cols() });
        }
        check_unimodular(&fiber_image)?;
        if !psi_h.is_finite() {
            return Err(L2tError::Invalid("fiber class value must be finite".into()));
        }
        Ok(Self { genus, boundary, fibers, fiber_image, psi_h })
    }

    /// The trefoil exterior M(0, 1; 1/2, 1/3).
    pub fn trefoil(fiber_image: ComplexMatrix, psi_h: f64) -> Result<Self> {
        Self::new(0, 1, vec![(1, 2), (1, 3)], fiber_image, psi_h)
    }

    /// Orbifold Euler characteristic as a reduced fraction (num, den).
    pub fn chi_orb_fraction(&self) -> (i64, i64) {
        let den = self.fibers.iter().fold(1i64, |acc, &(_, p)| acc.lcm(&p));
        let mut num = (2 - 2 * self.genus as i64 - self.boundary as i64) * den;
        for &(_, p) in &self.fibers {
            num -= den - den / p;
        }
        let g = num.gcd(&den);
        (num / g, den / g)
    }
}

/// Orbifold Euler characteristic `2 - 2g - b - sum (1 - 1/p_i)`.
pub fn chi_orb(piece: &SeifertPiece) -> f64 {
    let (n, d) = piece.chi_orb_fraction();
    n as f64 / d as f64
}

fn check_unimodular(m: &ComplexMatrix) -> Result<()> {
    let dev = (m.det()? - C64::new(1.0, 0.0)).norm();
    if dev > UNIMODULAR_TOL * m.max_abs().max(1.0).powi(m.rows() as i32) {
        return Err(L2tError::NotUnimodular(dev));
    }
    Ok(())
}

/// Product of the moduli of the eigenvalues of modulus at most one.
///
/// Computed as the reciprocal of the product over moduli above one, which is
/// the same for unimodular input and keeps full relative accuracy when the
/// small eigenvalues are tiny.
pub fn lambda_of(rho_h: &ComplexMatrix) -> Result<f64> {
    if !rho_h.is_square() {
        return Err(L2tError::NotSquare { rows: rho_h.rows(), cols: rho_h.cols() });
    }
    check_unimodular(rho_h)?;
    let log: f64 = eigenvalues(rho_h)?.iter().map(|z| z.norm()).filter(|&m| m > 1.0).map(f64::ln).sum();
    Ok((-log).exp())
}

/// Graph manifold as a list of Seifert pieces; the exclusion flags are
/// taken on trust.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphManifold {
    pub pieces: Vec<SeifertPiece>,
    #[serde(default)]
    pub not_s1xd2: bool,
    #[serde(default)]
    pub not_s1xs2: bool,
    #[serde(default)]
    pub infinite_pi1: bool,
}

impl GraphManifold {
    pub fn new(pieces: Vec<SeifertPiece>) -> Self {
        Self { pieces, not_s1xd2: true, not_s1xs2: true, infinite_pi1: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pieces.is_empty() {
            return Err(L2tError::Invalid("graph manifold has no pieces".into()));
        }
        if !(self.not_s1xd2 && self.not_s1xs2 && self.infinite_pi1) {
            return Err(L2tError::Invalid(
                "exclusion flags not_s1xd2, not_s1xs2 and infinite_pi1 must all be true".into(),
            ));
        }
        let n = self.pieces[0].fiber_image.rows();
        if self.pieces.iter().any(|p| p.fiber_image.rows() != n) {
            return Err(L2tError::Shape("pieces carry representations of different dimensions".into()));
        }
        Ok(())
    }
}

/// `prod_pieces Lambda(rho(h))^{chi_orb}`.
pub fn torsion_graph_manifold(m: &GraphManifold) -> Result<f64> {
    m.validate()?;
    let mut log = 0.0;
    for p in &m.pieces {
        log += chi_orb(p) * lambda_of(&p.fiber_image)?.ln();
    }
    Ok(log.exp())
}

/// `sum_pieces -|psi(h)| chi_orb`.
pub fn thurston_norm_graph(m: &GraphManifold) -> Result<f64> {
    m.validate()?;
    let mut total = 0.0;
    for p in &m.pieces {
        let chi = chi_orb(p);
        if chi > 0.0 {
            return Err(L2tError::Invalid(format!("piece has positive orbifold Euler characteristic {chi}")));
        }
        total += -p.psi_h.abs() * chi;
    }
    Ok(total)
}

/// Chain models. Group elements are exponent vectors in Z^k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    /// Standard CW torus with 1-cells mapping to `e1`, `e2`.
    Torus { e1: ExponentVector, e2: ExponentVector },
    /// Sigma x S^1 for Sigma of genus g with `boundary_count` boundary
    /// circles, retracted to a wedge of `2g + boundary_count - 1` circles.
    /// `edges` are the images of the wedge circles, `h` that of the fiber.
    SeifertProduct { genus: u32, boundary_count: u32, edges: Vec<ExponentVector>, h: ExponentVector },
    /// Solid torus with core `h^m f^n`.
    SolidTorus { m: i64, n: i64, h: ExponentVector, f: ExponentVector },
    /// Mapping torus of a chain map on a fiber complex. The result lives
    /// over Z^{k+1} with the circle direction as the last variable.
    MappingTorus { fiber: BasedChainComplex, maps: Vec<LaurentMatrix> },
}

fn mono(g: &ExponentVector, c: f64) -> LaurentElement {
    LaurentElement::monomial(g.rank(), g.clone(), C64::new(c, 0.0))
}

/// `z^g - 1`.
fn minus_one(g: &ExponentVector) -> Result<LaurentElement> {
    mono(g, 1.0).sub(&LaurentElement::one(g.rank()))
}

fn same_rank(gs: &[&ExponentVector]) -> Result<usize> {
    let k = gs.first().map_or(0, |g| g.rank());
    if let Some(g) = gs.iter().find(|g| g.rank() != k) {
        return Err(L2tError::RankMismatch { expected: k, found: g.rank() });
    }
    Ok(k)
}

/// Builds the untwisted chain complex of a model.
pub fn build_model_complex(model: &ModelSpec) -> Result<BasedChainComplex> {
    match model {
        ModelSpec::Torus { e1, e2 } => {
            let k = same_rank(&[e1, e2])?;
            let d2 = LaurentMatrix::from_rows(k, vec![vec![minus_one(e2)?.neg(), minus_one(e1)?]])?;
            let d1 = LaurentMatrix::from_rows(k, vec![vec![minus_one(e1)?], vec![minus_one(e2)?]])?;
            BasedChainComplex::new(k, 0, vec![1, 2, 1], vec![d1, d2])
        }
        ModelSpec::SeifertProduct { genus, boundary_count, edges, h } => {
            let m = (2 * genus + boundary_count) as usize;
            if *boundary_count == 0 || m == 0 {
                return Err(L2tError::Invalid("the surface needs at least one boundary circle".into()));
            }
            if edges.len() != m - 1 {
                return Err(L2tError::Shape(format!("expected {} edge images, got {}", m - 1, edges.len())));
            }
            let mut all: Vec<&ExponentVector> = edges.iter().collect();
            all.push(h);
            let k = same_rank(&all)?;
            let m = m - 1;
            let one_minus_h = minus_one(h)?.neg();
            // Columns: wedge circles, then the fiber circle.
            let mut d2 = LaurentMatrix::zeros(k, m, m + 1);
            let mut d1 = LaurentMatrix::zeros(k, m + 1, 1);
            for (j, x) in edges.iter().enumerate() {
                d2.set(j, j, one_minus_h.clone());
                d2.set(j, m, minus_one(x)?.neg());
                d1.set(j, 0, minus_one(x)?);
            }
            d1.set(m, 0, one_minus_h);
            BasedChainComplex::new(k, 0, vec![1, m + 1, m], vec![d1, d2])
        }
        ModelSpec::SolidTorus { m, n, h, f } => {
            let k = same_rank(&[h, f])?;
            let core = h.scaled(*m).add(&f.scaled(*n));
            let d1 = LaurentMatrix::from_rows(k, vec![vec![minus_one(&core)?]])?;
            BasedChainComplex::new(k, 0, vec![1, 1], vec![d1])
        }
        ModelSpec::MappingTorus { fiber, maps } => mapping_torus(fiber, maps),
    }
}

fn extend_rank(m: &LaurentMatrix) -> Result<LaurentMatrix> {
    let k = m.rank();
    let images: Vec<ExponentVector> = (0..k).map(|i| ExponentVector::unit(k + 1, i)).collect();
    m.push_forward(&images, k + 1)
}

/// Mapping cone of `1 - h f`: modules `D_p + D_{p-1}` with boundary
/// `[[d_p, 0], [1 - h f_{p-1}, -d_{p-1}]]`.
fn mapping_torus(fiber: &BasedChainComplex, maps: &[LaurentMatrix]) -> Result<BasedChainComplex> {
    let r = fiber.ranks();
    let k = fiber.rank();
    if maps.len() != r.len() {
        return Err(L2tError::Shape(format!("{} modules need {} chain map components", r.len(), maps.len())));
    }
    for (p, f) in maps.iter().enumerate() {
        if f.rank() != k || f.rows() != r[p] || f.cols() != r[p] {
            return Err(L2tError::Shape(format!("chain map component {p} has the wrong shape")));
        }
    }
    let d = fiber.boundaries();
    for (i, di) in d.iter().enumerate() {
        // f_{i+1} d_{i+1} = d_{i+1} f_i in row convention.
        let lhs = maps[i + 1].mul(di)?;
        let rhs = di.mul(&maps[i])?;
        let diff = lhs.add(&rhs.scale(C64::new(-1.0, 0.0)))?;
        if diff.max_coeff() > 1e-9 * lhs.max_coeff().max(rhs.max_coeff()).max(1.0) {
            return Err(L2tError::Invalid(format!("monodromy is not a chain map in degree {}", fiber.degree(i + 1))));
        }
    }
    let kk = k + 1;
    let h = LaurentElement::variable(kk, k);
    let ext_d: Vec<LaurentMatrix> = d.iter().map(extend_rank).collect::<Result<_>>()?;
    let ext_f: Vec<LaurentMatrix> = maps.iter().map(extend_rank).collect::<Result<_>>()?;
    let len = r.len();
    // New module p (p = 0..=len) is D_p + D_{p-1}.
    let rank_of = |p: usize| -> usize { r.get(p).copied().unwrap_or(0) + if p == 0 { 0 } else { r[p - 1] } };
    let ranks: Vec<usize> = (0..=len).map(rank_of).collect();
    let mut boundaries = Vec::with_capacity(len);
    for p in 1..=len {
        let (top, bot) = (r.get(p).copied().unwrap_or(0), r[p - 1]);
        let (left, right) = (r[p - 1], if p >= 2 { r[p - 2] } else { 0 });
        let mut b = LaurentMatrix::zeros(kk, top + bot, left + right);
        if p < len {
            let dp = &ext_d[p - 1];
            for i in 0..top {
                for j in 0..left {
                    b.set(i, j, dp.get(i, j).clone());
                }
            }
        }
        // 1 - h f_{p-1}
        let mut hf = LaurentMatrix::identity(kk, bot);
        for i in 0..bot {
            for j in 0..bot {
                let v = hf.get(i, j).sub(&h.mul(ext_f[p - 1].get(i, j))?)?;
                hf.set(i, j, v);
            }
        }
        for i in 0..bot {
            for j in 0..left {
                b.set(top + i, j, hf.get(i, j).clone());
            }
        }
        if p >= 2 {
            let dm = &ext_d[p - 2];
            for i in 0..bot {
                for j in 0..right {
                    b.set(top + i, left + j, dm.get(i, j).neg());
                }
            }
        }
        boundaries.push(b);
    }
    BasedChainComplex::new(kk, fiber.min_degree(), ranks, boundaries)
}

/// Mapping torus of a torus homeomorphism with the fiber group killed:
/// fiber homology chain complex with zero boundaries over Z^0, maps
/// `(1, A, det A)`.
pub fn abelian_torus_bundle(a: [[i64; 2]; 2]) -> Result<BasedChainComplex> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() != 1 {
        return Err(L2tError::Invalid(format!("monodromy has determinant {det}")));
    }
    let c = |x: i64| LaurentElement::constant(0, C64::new(x as f64, 0.0));
    let fiber = BasedChainComplex::new(
        0,
        0,
        vec![1, 2, 1],
        vec![LaurentMatrix::zeros(0, 2, 1), LaurentMatrix::zeros(0, 1, 2)],
    )?;
    // Row convention: basis vector e_i maps to row i.
    let f1 = LaurentMatrix::from_rows(0, vec![vec![c(a[0][0]), c(a[1][0])], vec![c(a[0][1]), c(a[1][1])]])?;
    let maps = vec![LaurentMatrix::identity(0, 1), f1, LaurentMatrix::from_rows(0, vec![vec![c(det)]])?];
    mapping_torus(&fiber, &maps)
}

/// Torsion of a model twisted by a representation of its target Z^k.
pub fn model_torsion(model: &ModelSpec, rep: &Representation, seed: u64, cfg: &QuadConfig) -> Result<TorsionValue> {
    let c = build_model_complex(model)?;
    torsion_subset(&c.diagonal_twist(rep)?, seed, cfg)
}

/// Images of the generators of a Seifert piece in some Z^k, ordered as
/// `a_1, b_1, ..., a_g, b_g, e_1..e_b, f_1..f_k, h`, together with a
/// representation of Z^k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceRealization {
    pub gamma: Vec<ExponentVector>,
    pub psi_hat: Representation,
}

/// `m p - n q = 1`.
fn core_coefficients(q: i64, p: i64) -> (i64, i64) {
    let e = p.extended_gcd(&q);
    debug_assert_eq!(e.gcd.abs(), 1);
    let s = e.gcd.signum();
    (e.x * s, -e.y * s)
}

impl PieceRealization {
    /// Realisation through H = Z: `h -> P = lcm(p_i)`, `f_i -> -q_i P / p_i`,
    /// surface generators to 0 except `e_1`, which balances the boundary
    /// relation. `root` is the image of the generator of Z, so rho(h) =
    /// root^P. Closed surfaces need `sum q_i / p_i = 0`.
    pub fn through_fiber_root(piece: &SeifertPiece, root: &ComplexMatrix) -> Result<Self> {
        let big_p = piece.fibers.iter().fold(1i64, |acc, &(_, p)| acc.lcm(&p));
        let g = piece.genus as usize;
        let b = piece.boundary as usize;
        let f_img: Vec<i64> = piece.fibers.iter().map(|&(q, p)| -q * big_p / p).collect();
        let f_sum: i64 = f_img.iter().sum();
        let mut gamma = vec![ExponentVector(vec![0]); 2 * g + b];
        if b >= 1 {
            gamma[2 * g] = ExponentVector(vec![-f_sum]);
        } else if f_sum != 0 {
            return Err(L2tError::Invalid(
                "closed base needs sum q_i/p_i = 0 for a realisation through Z".into(),
            ));
        }
        gamma.extend(f_img.into_iter().map(|x| ExponentVector(vec![x])));
        gamma.push(ExponentVector(vec![big_p]));
        let psi_hat = Representation::new(root.rows(), vec![root.clone()])?;
        Ok(Self { gamma, psi_hat })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub closed_form: f64,
    pub chain_value: f64,
    pub ratio: f64,
    pub surface_times_circle: f64,
    pub solid_tori: Vec<f64>,
    pub boundary_tori: Vec<f64>,
    pub estimated_error: f64,
}

fn ok_value(t: TorsionValue, what: &str) -> Result<TorsionValue> {
    if !t.is_ok() {
        return Err(L2tError::Invalid(format!("{what}: torsion status {:?} ({})", t.status, t.warnings.join("; "))));
    }
    Ok(t)
}

/// Compares `Lambda^{chi_orb}` with the gluing product
/// `tau(Sigma x S^1) prod tau(D_i) / prod tau(T_i)` computed from chain
/// complexes.
pub fn crosscheck_graph_formula(
    piece: &SeifertPiece,
    real: &PieceRealization,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<CrosscheckReport> {
    let g = piece.genus as usize;
    let b = piece.boundary as usize;
    let k = piece.fibers.len();
    let expected = 2 * g + b + k + 1;
    if real.gamma.len() != expected {
        return Err(L2tError::Shape(format!("expected {expected} generator images, got {}", real.gamma.len())));
    }
    let rank = real.psi_hat.generator_count();
    if let Some(x) = real.gamma.iter().find(|x| x.rank() != rank) {
        return Err(L2tError::RankMismatch { expected: rank, found: x.rank() });
    }
    let h = &real.gamma[expected - 1];
    if h.is_zero() {
        return Err(L2tError::NotAdmissible("the fiber must map to an element of infinite order".into()));
    }
    let boundary_gens = &real.gamma[2 * g..expected - 1];
    let total = boundary_gens.iter().fold(ExponentVector::zero(rank), |acc, x| acc.add(x));
    if !total.is_zero() {
        return Err(L2tError::NotAdmissible("boundary images do not sum to zero".into()));
    }
    let fs = &real.gamma[2 * g + b..expected - 1];
    for (&(q, p), f) in piece.fibers.iter().zip(fs) {
        if !f.scaled(p).add(&h.scaled(q)).is_zero() {
            return Err(L2tError::NotAdmissible(format!("f^{p} h^{q} does not map to zero")));
        }
    }
    let rho_h = real.psi_hat.image(h)?;
    let scale = rho_h.max_abs().max(1.0);
    if rho_h.sub(&piece.fiber_image)?.max_abs() > 1e-9 * scale {
        return Err(L2tError::NotAdmissible("psi_hat(gamma(h)) differs from the piece's fiber image".into()));
    }

    let closed_form = lambda_of(&piece.fiber_image)?.powf(chi_orb(piece));
    let rep = &real.psi_hat;
    let product = ModelSpec::SeifertProduct {
        genus: piece.genus,
        boundary_count: (b + k) as u32,
        edges: real.gamma[..expected - 2].to_vec(),
        h: h.clone(),
    };
    let sigma = ok_value(model_torsion(&product, rep, seed, cfg)?, "surface times circle")?;
    let mut log = sigma.log_value;
    let mut err = sigma.estimated_error;
    let mut solid = Vec::new();
    let mut tori = Vec::new();
    for (i, (&(q, p), f)) in piece.fibers.iter().zip(fs).enumerate() {
        let (m, n) = core_coefficients(q, p);
        let d = ModelSpec::SolidTorus { m, n, h: h.clone(), f: f.clone() };
        let td = ok_value(model_torsion(&d, rep, seed.wrapping_add(i as u64 + 1), cfg)?, "solid torus")?;
        let t = ModelSpec::Torus { e1: h.clone(), e2: f.clone() };
        let tt = ok_value(model_torsion(&t, rep, seed.wrapping_add(101 + i as u64), cfg)?, "boundary torus")?;
        log += td.log_value - tt.log_value;
        err += td.estimated_error + tt.estimated_error;
        solid.push(td.value);
        tori.push(tt.value);
    }
    let chain_value = log.exp();
    Ok(CrosscheckReport {
        closed_form,
        chain_value,
        ratio: chain_value / closed_form,
        surface_times_circle: sigma.value,
        solid_tori: solid,
        boundary_tori: tori,
        estimated_error: err,
    })
}

/// Torsion of a whole graph manifold through the chain pipeline, one
/// realisation per piece.
pub fn chain_torsion_graph_manifold(
    m: &GraphManifold,
    realizations: &[PieceRealization],
    seed: u64,
    cfg: &QuadConfig,
) -> Result<f64> {
    m.validate()?;
    if realizations.len() != m.pieces.len() {
        return Err(L2tError::Shape("one realisation per piece is required".into()));
    }
    let mut log = 0.0;
    for (i, (p, r)) in m.pieces.iter().zip(realizations).enumerate() {
        log += crosscheck_graph_formula(p, r, seed.wrapping_add(1000 * i as u64), cfg)?.chain_value.ln();
    }
    Ok(log.exp())
}
