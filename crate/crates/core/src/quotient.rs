//! Heuristic Fuglede-Kadison determinant estimates through finite quotients.
//!
//! Every estimate here is labeled heuristic: nothing guarantees convergence
//! for non-abelian groups.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::Representation;
use crate::error::{L2tError, Result};
use crate::laurent::LaurentMatrix;
use crate::numeric::{ComplexMatrix, C64, ONE};

pub const HEURISTIC_LABEL: &str = "heuristic";
const RELATOR_TOL: f64 = 1e-9;

/// A word in the source generators: `(generator, exponent)` pairs.
pub type Word = Vec<(usize, i64)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordTerm {
    pub coeff: C64,
    #[serde(default)]
    pub word: Word,
}

/// Matrix over the group ring of a presented group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WordMatrixWire")]
pub struct WordMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<Vec<WordTerm>>>,
}

#[derive(Deserialize)]
struct WordMatrixWire {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<Vec<WordTerm>>>,
}

impl TryFrom<WordMatrixWire> for WordMatrix {
    type Error = L2tError;
    fn try_from(w: WordMatrixWire) -> Result<Self> {
        WordMatrix::new(w.rows, w.cols, w.entries)
    }
}

impl WordMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Vec<Vec<WordTerm>>>) -> Result<Self> {
        if entries.len() != rows || entries.iter().any(|r| r.len() != cols) {
            return Err(L2tError::Shape(format!("word matrix entries do not match {rows}x{cols}")));
        }
        Ok(WordMatrix { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &[WordTerm] {
        &self.entries[i][j]
    }

    /// One generator per variable of C[Z^k].
    pub fn from_laurent(m: &LaurentMatrix) -> Self {
        let entries = (0..m.rows())
            .map(|i| {
                (0..m.cols())
                    .map(|j| {
                        m.get(i, j)
                            .terms()
                            .map(|(g, &c)| WordTerm {
                                coeff: c,
                                word: g.0.iter().enumerate().filter(|(_, &e)| e != 0).map(|(v, &e)| (v, e)).collect(),
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        WordMatrix { rows: m.rows(), cols: m.cols(), entries }
    }

    /// Rescales each term by `t^{sum psi(gen) * exp}`.
    pub fn alexander_twist(&self, psi: &[f64], t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(L2tError::NonPositiveTwist(t));
        }
        let mut out = self.clone();
        for term in out.entries.iter_mut().flatten().flatten() {
            let mut s = 0.0;
            for &(g, e) in &term.word {
                let v = psi.get(g).ok_or_else(|| L2tError::Shape(format!("no class value for generator {g}")))?;
                s += v * e as f64;
            }
            term.coeff *= t.powf(s);
        }
        Ok(out)
    }

    fn max_generator(&self) -> Option<usize> {
        self.entries.iter().flatten().flatten().flat_map(|t| t.word.iter().map(|&(g, _)| g)).max()
    }
}

/// Finite quotient `Q` given by the right-regular permutation action of each
/// source generator: element `x` goes to `generators[g][x] = x * g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuotientWire")]
pub struct FiniteQuotient {
    order: usize,
    generators: Vec<Vec<usize>>,
    relators: Vec<Word>,
}

#[derive(Deserialize)]
struct QuotientWire {
    order: usize,
    generators: Vec<Vec<usize>>,
    #[serde(default)]
    relators: Vec<Word>,
}

impl TryFrom<QuotientWire> for FiniteQuotient {
    type Error = L2tError;
    fn try_from(w: QuotientWire) -> Result<Self> {
        FiniteQuotient::new(w.order, w.generators, w.relators)
    }
}

fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (x, &y) in perm.iter().enumerate() {
        inv[y] = x;
    }
    inv
}

impl FiniteQuotient {
    pub fn new(order: usize, generators: Vec<Vec<usize>>, relators: Vec<Word>) -> Result<Self> {
        if order == 0 {
            return Err(L2tError::Invalid("quotient order must be positive".into()));
        }
        for (g, p) in generators.iter().enumerate() {
            if p.len() != order {
                return Err(L2tError::Shape(format!("generator {g} permutes {} points, order is {order}", p.len())));
            }
            let mut seen = vec![false; order];
            for &y in p {
                if y >= order || std::mem::replace(&mut seen[y], true) {
                    return Err(L2tError::Invalid(format!("generator {g} is not a permutation")));
                }
            }
        }
        let q = FiniteQuotient { order, generators, relators };
        for (i, r) in q.relators.iter().enumerate() {
            let img = q.word_permutation(r)?;
            if img.iter().enumerate().any(|(x, &y)| x != y) {
                return Err(L2tError::Invalid(format!("relator {i} does not map to the identity")));
            }
        }
        Ok(q)
    }

    /// `Z/m` with one generator.
    pub fn cyclic(m: usize) -> Result<Self> {
        Self::abelian(&[m])
    }

    /// `Z/m_1 x ... x Z/m_k`, generators the standard basis.
    pub fn abelian(moduli: &[usize]) -> Result<Self> {
        if moduli.iter().any(|&m| m == 0) {
            return Err(L2tError::Invalid("moduli must be positive".into()));
        }
        let order: usize = moduli.iter().product();
        let k = moduli.len();
        let stride: Vec<usize> = (0..k).map(|i| moduli[i + 1..].iter().product()).collect();
        let generators = (0..k)
            .map(|g| {
                (0..order)
                    .map(|x| {
                        let digit = (x / stride[g]) % moduli[g];
                        x - digit * stride[g] + ((digit + 1) % moduli[g]) * stride[g]
                    })
                    .collect()
            })
            .collect();
        let mut relators = Vec::new();
        for a in 0..k {
            relators.push(vec![(a, moduli[a] as i64)]);
            for b in a + 1..k {
                relators.push(vec![(a, 1), (b, 1), (a, -1), (b, -1)]);
            }
        }
        Self::new(order, generators, relators)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    /// `x -> x * w` as an index map.
    pub fn word_permutation(&self, w: &[(usize, i64)]) -> Result<Vec<usize>> {
        let mut cur: Vec<usize> = (0..self.order).collect();
        for &(g, e) in w {
            let p = self
                .generators
                .get(g)
                .ok_or_else(|| L2tError::Shape(format!("generator {g} not in quotient with {} generators", self.generators.len())))?;
            let step = if e < 0 { invert(p) } else { p.clone() };
            for _ in 0..e.unsigned_abs() {
                for y in cur.iter_mut() {
                    *y = step[*y];
                }
            }
        }
        Ok(cur)
    }
}

fn word_image(rep: &Representation, w: &[(usize, i64)]) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(rep.dim());
    for &(g, e) in w {
        let img = rep
            .images()
            .get(g)
            .ok_or_else(|| L2tError::Shape(format!("representation has no image for generator {g}")))?;
        acc = acc.mul(&img.pow(e)?)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientEstimate {
    pub value: f64,
    #[serde(with = "crate::mahler::log_value_serde")]
    pub log_value: f64,
    pub order: usize,
    pub dimension: usize,
    pub label: String,
}

impl QuotientEstimate {
    fn new(log_abs_det: f64, order: usize, dimension: usize) -> Self {
        let log_value = log_abs_det / order as f64;
        QuotientEstimate { value: log_value.exp(), log_value, order, dimension, label: HEURISTIC_LABEL.into() }
    }
}

/// Substitutes every group element `w` by `P(w) (x) rho(w)` and returns
/// `|det|^{1/|Q|}`, or 0 if singular. `rho = None` means the trivial
/// one-dimensional representation.
pub fn rdet_finite_quotient(m: &WordMatrix, q: &FiniteQuotient, rep: Option<&Representation>) -> Result<QuotientEstimate> {
    let numeric = quotient_matrix(m, q, rep)?;
    let (log_det, _) = numeric.log_abs_det()?;
    Ok(QuotientEstimate::new(log_det, q.order(), numeric.rows()))
}

/// The `|Q| n rows x |Q| n cols` numeric matrix.
pub fn quotient_matrix(m: &WordMatrix, q: &FiniteQuotient, rep: Option<&Representation>) -> Result<ComplexMatrix> {
    if m.rows() != m.cols() {
        return Err(L2tError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if let Some(g) = m.max_generator() {
        if g >= q.generator_count() {
            return Err(L2tError::Shape(format!("word uses generator {g}, quotient has {}", q.generator_count())));
        }
    }
    let trivial = Representation::trivial(1, q.generator_count());
    let rep = rep.unwrap_or(&trivial);
    if rep.generator_count() != q.generator_count() {
        return Err(L2tError::Shape(format!(
            "representation has {} generators, quotient has {}",
            rep.generator_count(),
            q.generator_count()
        )));
    }
    let n = rep.dim();
    for (i, r) in q.relators().iter().enumerate() {
        let img = word_image(rep, r)?;
        let scale = img.max_abs().max(1.0);
        if !img.approx_eq(&ComplexMatrix::identity(n), RELATOR_TOL * scale) {
            return Err(L2tError::NotAdmissible(format!("representation violates relator {i}")));
        }
    }
    let order = q.order();
    let block = order * n;
    let mut out = ComplexMatrix::zeros(m.rows() * block, m.cols() * block);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            for term in m.entry(i, j) {
                let perm = q.word_permutation(&term.word)?;
                let img = word_image(rep, &term.word)?.scale(term.coeff);
                for (x, &y) in perm.iter().enumerate() {
                    for a in 0..n {
                        for b in 0..n {
                            out[(i * block + x * n + a, j * block + y * n + b)] += img[(a, b)];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Fast path for matrices over C[Z^k] and the quotient `prod Z/m_i`: the
/// regular representation splits into characters at roots of unity.
pub fn rdet_abelian_quotient(m: &LaurentMatrix, moduli: &[usize]) -> Result<QuotientEstimate> {
    if moduli.len() != m.rank() {
        return Err(L2tError::RankMismatch { expected: m.rank(), found: moduli.len() });
    }
    if !m.is_square() {
        return Err(L2tError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if moduli.iter().any(|&q| q == 0) {
        return Err(L2tError::Invalid("moduli must be positive".into()));
    }
    let order: usize = moduli.iter().product();
    let logs: Vec<f64> = (0..order)
        .into_par_iter()
        .map(|mut idx| {
            let mut z = vec![ONE; moduli.len()];
            for v in (0..moduli.len()).rev() {
                let a = idx % moduli[v];
                idx /= moduli[v];
                z[v] = C64::from_polar(1.0, std::f64::consts::TAU * a as f64 / moduli[v] as f64);
            }
            m.evaluate_unchecked(&z).log_abs_det().map(|(l, _)| l)
        })
        .collect::<Result<_>>()?;
    Ok(QuotientEstimate::new(crate::mahler::pairwise_sum(&logs), order, m.rows() * order))
}

/// Estimates for several quotients, evaluated in parallel.
pub fn rdet_finite_quotients(
    m: &WordMatrix,
    quotients: &[FiniteQuotient],
    rep: Option<&Representation>,
) -> Result<Vec<QuotientEstimate>> {
    quotients.par_iter().map(|q| rdet_finite_quotient(m, q, rep)).collect()
}

/// Torus-bundle preset: `pi_1 = Z^2 x|_A Z` with generators `x, y, h`
/// (`h v h^-1 = A v`) and its quotient `(Z/m)^2 x| Z/r`, `A^r = I mod m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusBundlePreset {
    pub monodromy: [[i64; 2]; 2],
    pub modulus: usize,
    pub period: usize,
    pub quotient: FiniteQuotient,
    /// Fox Jacobian of the monodromy on the two 1-cells of the fiber.
    pub jacobian: WordMatrix,
}

fn mat_mul_mod(a: [[i64; 2]; 2], b: [[i64; 2]; 2], m: i64) -> [[i64; 2]; 2] {
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = (a[i][0] * b[0][j] + a[i][1] * b[1][j]).rem_euclid(m);
        }
    }
    c
}

fn power_word(g: usize, e: i64) -> Vec<(usize, i64)> {
    if e == 0 {
        vec![]
    } else {
        vec![(g, e)]
    }
}

/// Fox derivatives of `x^a y^c` with respect to x and y.
fn fox_xy(a: i64, c: i64) -> Result<[Vec<WordTerm>; 2]> {
    if a < 0 || c < 0 {
        return Err(L2tError::Invalid("preset needs a non-negative monodromy".into()));
    }
    let dx = (0..a).map(|i| WordTerm { coeff: ONE, word: power_word(0, i) }).collect();
    let dy = (0..c)
        .map(|i| {
            let mut w = power_word(0, a);
            w.extend(power_word(1, i));
            WordTerm { coeff: ONE, word: w }
        })
        .collect();
    Ok([dx, dy])
}

impl TorusBundlePreset {
    pub fn new(a: [[i64; 2]; 2], modulus: usize) -> Result<Self> {
        if a[0][0] * a[1][1] - a[0][1] * a[1][0] != 1 {
            return Err(L2tError::Invalid("monodromy must lie in SL(2, Z)".into()));
        }
        if modulus < 2 {
            return Err(L2tError::Invalid("modulus must be at least 2".into()));
        }
        let mi = modulus as i64;
        let id = [[1, 0], [0, 1]];
        let a_mod = mat_mul_mod(a, id, mi);
        let mut powers = vec![id];
        while powers.len() <= 6 * modulus * modulus {
            let next = mat_mul_mod(*powers.last().expect("nonempty"), a_mod, mi);
            if next == id {
                break;
            }
            powers.push(next);
        }
        let period = powers.len();
        let order = modulus * modulus * period;
        let index = |v: [i64; 2], j: usize| ((v[0] as usize * modulus) + v[1] as usize) * period + j;
        // (v, j)(w, l) = (v + A^j w, j + l)
        let mut gens = vec![vec![0; order]; 3];
        for v0 in 0..mi {
            for v1 in 0..mi {
                for (j, p) in powers.iter().enumerate() {
                    let x = index([v0, v1], j);
                    for (g, w) in [[1i64, 0], [0, 1]].iter().enumerate() {
                        let moved = [
                            (v0 + p[0][0] * w[0] + p[0][1] * w[1]).rem_euclid(mi),
                            (v1 + p[1][0] * w[0] + p[1][1] * w[1]).rem_euclid(mi),
                        ];
                        gens[g][x] = index(moved, j);
                    }
                    gens[2][x] = index([v0, v1], (j + 1) % period);
                }
            }
        }
        // A e_x = (a00, a10), A e_y = (a01, a11); abelian words x^a y^c.
        let img_x = (a[0][0], a[1][0]);
        let img_y = (a[0][1], a[1][1]);
        let relator = |g: usize, (p, c): (i64, i64)| {
            let mut w = vec![(2, 1), (g, 1), (2, -1)];
            w.extend(power_word(1, -c));
            w.extend(power_word(0, -p));
            w
        };
        let relators = vec![relator(0, img_x), relator(1, img_y), vec![(0, 1), (1, 1), (0, -1), (1, -1)]];
        let quotient = FiniteQuotient::new(order, gens, relators)?;
        let [jxx, jxy] = fox_xy(img_x.0, img_x.1)?;
        let [jyx, jyy] = fox_xy(img_y.0, img_y.1)?;
        let jacobian = WordMatrix::new(2, 2, vec![vec![jxx, jxy], vec![jyx, jyy]])?;
        Ok(TorusBundlePreset { monodromy: a, modulus, period, quotient, jacobian })
    }

    /// `I - t h J` with `h` twisted by `t`.
    fn twisted_cells(&self, t: f64) -> Result<(WordMatrix, WordMatrix)> {
        let prefix = |terms: &[WordTerm], sign: f64| -> Vec<WordTerm> {
            terms
                .iter()
                .map(|w| {
                    let mut word = vec![(2usize, 1i64)];
                    word.extend(w.word.iter().copied());
                    WordTerm { coeff: w.coeff * sign, word }
                })
                .collect()
        };
        let mut rows = Vec::new();
        for i in 0..2 {
            let mut row = Vec::new();
            for j in 0..2 {
                let mut cell = prefix(self.jacobian.entry(i, j), -1.0);
                if i == j {
                    cell.push(WordTerm { coeff: ONE, word: vec![] });
                }
                row.push(cell);
            }
            rows.push(row);
        }
        let psi = [0.0, 0.0, 1.0];
        let one_cell = WordMatrix::new(
            1,
            1,
            vec![vec![vec![WordTerm { coeff: ONE, word: vec![] }, WordTerm { coeff: -ONE, word: vec![(2, 1)] }]]],
        )?;
        Ok((WordMatrix::new(2, 2, rows)?.alexander_twist(&psi, t)?, one_cell.alexander_twist(&psi, t)?))
    }

    /// Heuristic Alexander curve value at `t`:
    /// `est(I - t h J) / est(1 - t h)^2`.
    pub fn curve_value(&self, t: f64) -> Result<QuotientEstimate> {
        let (middle, ends) = self.twisted_cells(t)?;
        let num = rdet_finite_quotient(&middle, &self.quotient, None)?;
        let den = rdet_finite_quotient(&ends, &self.quotient, None)?;
        let log_value = num.log_value - 2.0 * den.log_value;
        Ok(QuotientEstimate {
            value: log_value.exp(),
            log_value,
            order: self.quotient.order(),
            dimension: num.dimension,
            label: HEURISTIC_LABEL.into(),
        })
    }

    pub fn curve(&self, ts: &[f64]) -> Result<Vec<QuotientEstimate>> {
        ts.par_iter().map(|&t| self.curve_value(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::LaurentElement;

    fn one_minus(lambda: f64) -> WordMatrix {
        WordMatrix::new(
            1,
            1,
            vec![vec![vec![
                WordTerm { coeff: ONE, word: vec![] },
                WordTerm { coeff: C64::new(-lambda, 0.0), word: vec![(0, 1)] },
            ]]],
        )
        .unwrap()
    }

    #[test]
    fn circulant_identity() {
        for (lambda, m) in [(0.5, 8usize), (2.0, 8), (2.0, 256)] {
            let est = rdet_finite_quotient(&one_minus(lambda), &FiniteQuotient::cyclic(m).unwrap(), None).unwrap();
            let expect = (1.0 - lambda.powi(m as i32)).abs().powf(1.0 / m as f64);
            assert!((est.value - expect).abs() < 1e-9 * expect.max(1.0), "{lambda} {m}: {}", est.value);
            assert_eq!(est.label, "heuristic");
        }
    }

    #[test]
    fn trivial_quotient_augments() {
        let q = FiniteQuotient::new(1, vec![vec![0]], vec![]).unwrap();
        let est = rdet_finite_quotient(&one_minus(3.0), &q, None).unwrap();
        assert!((est.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn relator_violation_rejected() {
        let bad = FiniteQuotient::new(3, vec![vec![1, 2, 0]], vec![vec![(0, 2)]]);
        assert!(bad.is_err());
    }

    #[test]
    fn abelian_fast_path_matches_dense() {
        let m = LaurentMatrix::from_rows(
            2,
            vec![
                vec![
                    LaurentElement::real(2, &[(&[1, 0], 1.0), (&[0, 0], 2.5)]).unwrap(),
                    LaurentElement::real(2, &[(&[0, 1], 0.7)]).unwrap(),
                ],
                vec![
                    LaurentElement::real(2, &[(&[-1, 1], 0.3)]).unwrap(),
                    LaurentElement::real(2, &[(&[0, 0], 1.0), (&[1, 1], -0.4)]).unwrap(),
                ],
            ],
        )
        .unwrap();
        let fast = rdet_abelian_quotient(&m, &[4, 3]).unwrap();
        let dense =
            rdet_finite_quotient(&WordMatrix::from_laurent(&m), &FiniteQuotient::abelian(&[4, 3]).unwrap(), None).unwrap();
        assert!((fast.log_value - dense.log_value).abs() < 1e-10, "{fast:?} {dense:?}");
    }

    #[test]
    fn torus_bundle_quotient_is_consistent() {
        let p = TorusBundlePreset::new([[2, 1], [1, 1]], 3).unwrap();
        assert_eq!(p.period, 4);
        assert_eq!(p.quotient.order(), 36);
        let v = p.curve_value(4.0).unwrap();
        assert!(v.value.is_finite() && v.value > 0.0);
    }
}
