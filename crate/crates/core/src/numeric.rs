//! Small dense complex linear algebra and polynomial root finding.
//!
//! Matrices here are tiny (n <= ~30), so everything is plain row-major
//! storage with O(n^3) kernels.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{L2tError, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixWire", into = "MatrixWire")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<C64>>,
}

impl TryFrom<MatrixWire> for ComplexMatrix {
    type Error = L2tError;

    fn try_from(w: MatrixWire) -> Result<Self> {
        if w.entries.len() != w.rows || w.entries.iter().any(|r| r.len() != w.cols) {
            return Err(L2tError::Shape(format!(
                "matrix declared {}x{} but entries do not match",
                w.rows, w.cols
            )));
        }
        ComplexMatrix::new(w.rows, w.cols, w.entries.into_iter().flatten().collect())
    }
}

impl From<ComplexMatrix> for MatrixWire {
    fn from(m: ComplexMatrix) -> Self {
        let entries = m.data.chunks(m.cols.max(1)).take(m.rows).map(|r| r.to_vec()).collect();
        MatrixWire { rows: m.rows, cols: m.cols, entries }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(L2tError::Shape(format!(
                "{} entries supplied for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(L2tError::Invalid("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(L2tError::Shape("ragged rows".into()));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    /// Convenience for real-valued literals in tests and presets.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> =
            rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(L2tError::Shape("matrix sum of different shapes".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(L2tError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = self.transpose();
        out.data.iter_mut().for_each(|z| *z = z.conj());
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Self::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out[(self.rows + i, self.cols + j)] = other[(i, j)];
            }
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| (a - b).norm() <= tol)
    }

    /// LU factorisation with partial pivoting. Returns the packed factors, the
    /// permutation parity and whether a zero pivot was met.
    fn lu(&self) -> (Vec<C64>, Vec<usize>, bool, bool) {
        let n = self.rows;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        let mut singular = false;
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd = !odd;
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= f * u;
                }
            }
        }
        (a, perm, odd, singular)
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> Result<C64> {
        let (log_abs, phase) = self.log_abs_det()?;
        if log_abs == f64::NEG_INFINITY {
            return Ok(ZERO);
        }
        Ok(phase * log_abs.exp())
    }

    /// `(log|det|, det/|det|)`; `log|det| = -inf` for singular input.
    /// Avoids overflow for the large matrices built by finite quotients.
    pub fn log_abs_det(&self) -> Result<(f64, C64)> {
        if !self.is_square() {
            return Err(L2tError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if n == 0 {
            return Ok((0.0, ONE));
        }
        let (a, _, odd, singular) = self.lu();
        if singular {
            return Ok((f64::NEG_INFINITY, ZERO));
        }
        let mut log_abs = 0.0;
        let mut phase = if odd { -ONE } else { ONE };
        for k in 0..n {
            let d = a[k * n + k];
            log_abs += d.norm().ln();
            phase *= d / d.norm();
        }
        Ok((log_abs, phase))
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(L2tError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let (a, perm, _, singular) = self.lu();
        if singular {
            return Err(L2tError::Invalid("singular matrix has no inverse".into()));
        }
        let mut inv = Self::zeros(n, n);
        for col in 0..n {
            // Solve L U x = P e_col.
            let mut x: Vec<C64> = (0..n).map(|i| if perm[i] == col { ONE } else { ZERO }).collect();
            for i in 0..n {
                for k in 0..i {
                    let l = a[i * n + k];
                    x[i] = x[i] - l * x[k];
                }
            }
            for i in (0..n).rev() {
                for k in i + 1..n {
                    let u = a[i * n + k];
                    x[i] = x[i] - u * x[k];
                }
                x[i] /= a[i * n + i];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Ok(inv)
    }

    /// Integer power; negative exponents go through the inverse.
    pub fn pow(&self, e: i64) -> Result<Self> {
        if !self.is_square() {
            return Err(L2tError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let mut base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Numeric rank by Gram-Schmidt on the rows, relative tolerance `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        let mut basis: Vec<Vec<C64>> = Vec::new();
        for i in 0..self.rows {
            if let Some(q) = orthogonal_residual(&basis, self.row(i), tol) {
                basis.push(q);
            }
        }
        basis.len()
    }
}

/// Projects `v` off an orthonormal `basis`; returns the normalised residual
/// when it is larger than `tol * |v|`.
pub(crate) fn orthogonal_residual(basis: &[Vec<C64>], v: &[C64], tol: f64) -> Option<Vec<C64>> {
    let norm_v = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm_v == 0.0 {
        return None;
    }
    let mut r = v.to_vec();
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for q in basis {
            let proj: C64 = q.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
            r.iter_mut().zip(q).for_each(|(x, qi)| *x -= proj * qi);
        }
    }
    let norm_r = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm_r <= tol * norm_v {
        return None;
    }
    r.iter_mut().for_each(|x| *x /= norm_r);
    Some(r)
}

/// Determinant of a square matrix (LU, partial pivoting).
pub fn numeric_det(m: &ComplexMatrix) -> Result<C64> {
    m.det()
}

/// Checks that every below-diagonal entry has modulus at most `tol`, and
/// returns the diagonal in order.
pub fn is_upper_triangular(m: &ComplexMatrix, tol: f64) -> (bool, Vec<C64>) {
    let n = m.rows().min(m.cols());
    let diag = (0..n).map(|i| m[(i, i)]).collect();
    let upper = m.is_square()
        && (0..m.rows()).all(|i| (0..i.min(m.cols())).all(|j| m[(i, j)].norm() <= tol));
    (upper, diag)
}

/// Polynomial with complex coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPolynomial {
    coeffs: Vec<C64>,
}

/// Relative threshold below which a leading coefficient is trimmed.
pub const LEADING_TRIM: f64 = 1e-14;

impl ComplexPolynomial {
    /// Builds the polynomial, dropping leading coefficients whose modulus is
    /// below `LEADING_TRIM` times the largest coefficient.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while let Some(last) = coeffs.last() {
            if last.norm() <= LEADING_TRIM * scale {
                coeffs.pop();
            } else {
                break;
            }
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and derivative by Horner.
    fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `sum |a_i| r^i`, the scale of rounding in evaluations at modulus `r`.
    pub fn abs_eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect();
        Self { coeffs }
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `lead * prod (z - r)`.
    pub fn from_roots(lead: C64, roots: &[C64]) -> Self {
        let mut c = vec![lead];
        for &r in roots {
            let mut next = vec![ZERO; c.len() + 1];
            for (i, &a) in c.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            c = next;
        }
        Self::new(c)
    }
}

pub const ABERTH_MAX_ITER: usize = 500;
pub const ABERTH_STEP_TOL: f64 = 1e-13;
/// Residual allowance, in units of `deg * eps * sum |a_i| |z|^i`.
const ABERTH_BACKWARD: f64 = 64.0;
/// Roots closer than this (relative to their modulus) are always merged.
pub const ROOT_MERGE_TOL: f64 = 1e-7;

/// All roots of `p`, repeated according to multiplicity.
///
/// Aberth-Ehrlich iteration started on circles read off the Newton polygon of
/// the coefficient moduli. Clusters whose spread is consistent with a
/// rounding-perturbed multiple root are replaced by their centroid.
pub fn poly_roots(p: &ComplexPolynomial) -> Result<Vec<C64>> {
    Ok(poly_roots_grouped(p)?
        .into_iter()
        .flat_map(|(z, m)| std::iter::repeat_n(z, m))
        .collect())
}

/// Roots as `(value, multiplicity)` pairs.
pub fn poly_roots_grouped(p: &ComplexPolynomial) -> Result<Vec<(C64, usize)>> {
    let raw = aberth_raw(p)?;
    Ok(cluster_roots(p, &raw, f64::EPSILON)
        .into_iter()
        .map(|(z, m)| if m > 1 && z != ZERO { (polish_multiple(p, z, m), m) } else { (z, m) })
        .collect())
}

/// Newton on the (m-1)-th derivative, where an m-fold root is simple.
pub(crate) fn polish_multiple(p: &ComplexPolynomial, z0: C64, m: usize) -> C64 {
    let mut d = p.clone();
    for _ in 1..m {
        d = d.derivative();
    }
    let mut z = z0;
    let mut converged = false;
    for _ in 0..16 {
        let (v, dv) = d.eval_with_derivative(z);
        if dv == ZERO {
            break;
        }
        let step = v / dv;
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm() {
            converged = true;
            break;
        }
    }
    // Keep the centroid if polishing wandered off.
    if converged && (z - z0).norm() <= 0.05 * z0.norm().max(1.0) {
        z
    } else {
        z0
    }
}

/// Unclustered Aberth output; zero roots are exact.
pub(crate) fn aberth_raw(p: &ComplexPolynomial) -> Result<Vec<C64>> {
    let deg = p.degree().ok_or(L2tError::ZeroPolynomial)?;
    if deg == 0 {
        return Err(L2tError::Invalid("constant polynomial has no roots".into()));
    }
    let scale = p.max_coeff();
    // Exact (or negligible) trailing coefficients are roots at the origin.
    let zeros = p.coeffs.iter().take_while(|c| c.norm() <= LEADING_TRIM * scale * 1e-2).count();
    let q = ComplexPolynomial { coeffs: p.coeffs[zeros..].to_vec() };
    let mut roots = vec![ZERO; zeros];
    match q.degree().unwrap_or(0) {
        0 => {}
        1 => roots.push(-q.coeffs[0] / q.coeffs[1]),
        _ => roots.extend(aberth(&q)),
    }
    Ok(roots)
}

fn initial_guesses(p: &ComplexPolynomial) -> Vec<C64> {
    let n = p.coeffs.len() - 1;
    // Upper convex hull of (i, log|a_i|).
    let pts: Vec<(f64, f64)> = p
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| (i as f64, if c.norm() > 0.0 { c.norm().ln() } else { f64::NEG_INFINITY }))
        .collect();
    let mut hull: Vec<usize> = Vec::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        if y == f64::NEG_INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let (xa, ya) = pts[a];
            let (xb, yb) = pts[b];
            // Drop b when it lies on or below segment a -> i.
            if (yb - ya) * (x - xa) <= (y - ya) * (xb - xa) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut guesses = Vec::with_capacity(n);
    let sigma = 0.7;
    for w in hull.windows(2) {
        let (i, j) = (w[0], w[1]);
        let count = j - i;
        let r = ((pts[i].1 - pts[j].1) / count as f64).exp();
        for k in 0..count {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / count as f64
                + 2.0 * std::f64::consts::PI * i as f64 / n as f64
                + sigma;
            guesses.push(C64::from_polar(r, angle));
        }
    }
    guesses
}

fn aberth(p: &ComplexPolynomial) -> Vec<C64> {
    let mut z = initial_guesses(p);
    let n = z.len();
    let mut done = vec![false; n];
    for _ in 0..ABERTH_MAX_ITER {
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (pv, dp) = p.eval_with_derivative(z[k]);
            if pv == ZERO {
                done[k] = true;
                continue;
            }
            let ratio = pv / dp;
            let backward_ok = pv.norm() <= ABERTH_BACKWARD * n as f64 * f64::EPSILON * p.abs_eval(z[k].norm());
            let repulsion: C64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = z[k] - z[j];
                    if d == ZERO {
                        ZERO
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let denom = ONE - ratio * repulsion;
            let step = if denom == ZERO || !denom.is_finite() { ratio } else { ratio / denom };
            if !step.is_finite() {
                continue;
            }
            z[k] -= step;
            let rel = step.norm() / z[k].norm().max(f64::MIN_POSITIVE);
            // A tiny step next to a colliding neighbour is not convergence;
            // require a small residual as well.
            if rel < ABERTH_STEP_TOL && backward_ok {
                done[k] = true;
            }
        }
        if done.iter().all(|&d| d) {
            break;
        }
    }
    z
}

/// Groups the roots of `p` into clusters. Roots closer than
/// `ROOT_MERGE_TOL` relative are merged outright. A larger group separated
/// from the rest by a gap is merged when its radius is within the spread
/// that coefficient noise of relative size `eta` produces around an m-fold
/// root, `(eta |p|(c) / |p^(m)(c) / m!|)^(1/m)` at the centroid `c`.
pub fn cluster_roots(p: &ComplexPolynomial, roots: &[C64], eta: f64) -> Vec<(C64, usize)> {
    let eta = eta.max(f64::EPSILON);
    let n = roots.len();
    let mut assigned = vec![false; n];
    let mut out = Vec::new();
    // Visit roots in a fixed order so the grouping is deterministic.
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| !assigned[j])
            .map(|j| ((roots[j] - roots[i]).norm(), j))
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0));
        let scale = roots[i].norm().max(1e-300);
        let mut chosen = cand.iter().take_while(|c| c.0 <= ROOT_MERGE_TOL * scale).count().max(1);
        for m in (chosen + 1..=cand.len()).rev() {
            let d = cand[m - 1].0;
            if d > 0.1 * scale || cand.get(m).is_some_and(|next| next.0 <= 3.0 * d) {
                continue;
            }
            let members: Vec<C64> = cand[..m].iter().map(|&(_, j)| roots[j]).collect();
            let centroid = members.iter().sum::<C64>() / m as f64;
            let radius = members.iter().map(|z| (z - centroid).norm()).fold(0.0, f64::max);
            let taylor = taylor_coeff(p, centroid, m).norm();
            let size = p.abs_eval(centroid.norm());
            if taylor > 0.0 && radius <= 3.0 * (eta * size / taylor).powf(1.0 / m as f64) {
                chosen = m;
                break;
            }
        }
        let members: Vec<usize> = cand[..chosen].iter().map(|&(_, j)| j).collect();
        let centroid = members.iter().map(|&j| roots[j]).sum::<C64>() / chosen as f64;
        for &j in &members {
            assigned[j] = true;
        }
        out.push((centroid, chosen));
    }
    out
}

/// `p^(m)(c) / m!` by repeated synthetic division.
fn taylor_coeff(p: &ComplexPolynomial, c: C64, m: usize) -> C64 {
    let mut q = p.coeffs.clone();
    for _ in 0..m {
        if q.len() <= 1 {
            return ZERO;
        }
        // Divide by (z - c), dropping the remainder.
        let mut next = vec![ZERO; q.len() - 1];
        let mut acc = ZERO;
        for k in (1..q.len()).rev() {
            acc = acc * c + q[k];
            next[k - 1] = acc;
        }
        q = next;
    }
    q.iter().rev().fold(ZERO, |acc, &x| acc * c + x)
}

/// Characteristic polynomial `det(zI - m)` by the Faddeev-LeVerrier trace
/// recursion, on a norm-scaled copy of `m`.
pub fn characteristic_polynomial(m: &ComplexMatrix) -> Result<ComplexPolynomial> {
    if !m.is_square() {
        return Err(L2tError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let s = m.max_abs().max(f64::MIN_POSITIVE);
    let a = m.scale(C64::new(1.0 / s, 0.0));
    let mut c = vec![ZERO; n + 1];
    c[n] = ONE;
    let mut mk = ComplexMatrix::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = a.mul(&mk)?;
        for i in 0..n {
            next[(i, i)] += c[n - k + 1];
        }
        mk = next;
        c[n - k] = -a.mul(&mk)?.trace() / k as f64;
    }
    // The trace recursion loses the constant term to cancellation when
    // eigenvalue moduli are spread out; LU gives it directly.
    let det = a.det()?;
    c[0] = if n % 2 == 0 { det } else { -det };
    // Undo the scaling: roots of the scaled polynomial are lambda / s.
    let coeffs = c.iter().enumerate().map(|(i, &ci)| ci * s.powi((n - i) as i32)).collect();
    Ok(ComplexPolynomial { coeffs })
}

/// Eigenvalues with multiplicity (characteristic polynomial + roots).
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(L2tError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if m.rows() == 0 {
        return Ok(Vec::new());
    }
    let s = m.max_abs();
    if s == 0.0 {
        return Ok(vec![ZERO; m.rows()]);
    }
    let scaled = m.scale(C64::new(1.0 / s, 0.0));
    let p = characteristic_polynomial(&scaled)?;
    let p = ComplexPolynomial { coeffs: p.coeffs };
    Ok(poly_roots(&p)?.into_iter().map(|z| z * s).collect())
}
