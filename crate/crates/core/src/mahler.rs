//! Mahler measures of Laurent polynomials and determinants of matrices
//! over C[Z^k].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{L2tError, Result};
use crate::laurent::{LaurentElement, LaurentMatrix, SYMBOLIC_DET_CAP};
use crate::numeric::{aberth_raw, cluster_roots, polish_multiple, ComplexMatrix, ComplexPolynomial, C64};

/// Samples with modulus below this are left out of grid means.
pub const NEGLIGIBLE_SAMPLE: f64 = 1e-300;
/// Fraction of discarded samples above which a result is flagged.
pub const DISCARD_WARN_FRACTION: f64 = 1e-3;
/// Relative level below which a determinant sample counts as zero.
pub const DET_ZERO_REL: f64 = 1e-12;
/// Number of random torus points in the probabilistic zero test.
pub const ZERO_TEST_POINTS: usize = 16;

const BLOCK: usize = 4096;
const INTERP_TRIM: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Auto,
    Roots,
    Grid,
    Nested,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MahlerMethod {
    /// Closed form (constants, products of roots).
    Roots,
    /// Mean of log|p| on a tensor grid of the torus.
    Grid,
    /// Outer grid over all but the last variable, roots in the last one.
    Nested,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadConfig {
    pub tol: f64,
    pub min_grid: usize,
    pub max_grid: usize,
    /// Cap on grid points per refinement level.
    pub max_points: usize,
    pub method: MethodChoice,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { tol: 1e-4, min_grid: 64, max_grid: 1 << 14, max_points: 1 << 24, method: MethodChoice::Auto }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(L2tError::Invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !self.max_grid.is_power_of_two() || self.max_grid > 1 << 14 {
            return Err(L2tError::Invalid(format!("grid cap must be a power of two <= 16384, got {}", self.max_grid)));
        }
        if !self.min_grid.is_power_of_two() || self.min_grid < 2 {
            return Err(L2tError::Invalid(format!("minimum grid must be a power of two >= 2, got {}", self.min_grid)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroEvidence {
    Symbolic,
    Probabilistic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MahlerResult {
    pub value: f64,
    /// `None` encodes log 0.
    #[serde(with = "log_value_serde")]
    pub log_value: f64,
    pub method: MahlerMethod,
    pub estimated_error: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_evidence: Option<ZeroEvidence>,
}

pub(crate) mod log_value_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

impl MahlerResult {
    fn from_log(log_value: f64, method: MahlerMethod, estimated_error: f64) -> Self {
        Self {
            value: log_value.exp(),
            log_value,
            method,
            estimated_error,
            warnings: Vec::new(),
            zero_evidence: None,
        }
    }

    fn from_value(value: f64, method: MahlerMethod) -> Self {
        Self { value, log_value: value.ln(), ..Self::from_log(0.0, method, 0.0) }
    }

    pub fn zero(method: MahlerMethod, evidence: ZeroEvidence) -> Self {
        Self {
            value: 0.0,
            log_value: f64::NEG_INFINITY,
            method,
            estimated_error: 0.0,
            warnings: Vec::new(),
            zero_evidence: Some(evidence),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0
    }
}

/// Pairwise (cascade) summation; fixed association order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// One sample of a grid integrand: modulus and the scale it is compared to.
#[derive(Clone, Copy, Debug)]
struct Sample {
    abs: f64,
    scale: f64,
}

#[derive(Clone, Copy, Debug)]
struct GridMean {
    mean: f64,
    discarded: usize,
    negligible: usize,
    total: usize,
}

/// Mean of log|f| on the shifted grid ((j + 1/2) / n) in each of `dims`
/// axes. Blocks of fixed size are summed pairwise and then combined
/// pairwise, so the result does not depend on the worker count.
fn grid_log_mean(dims: usize, n: usize, f: &(dyn Fn(&[C64]) -> Sample + Sync)) -> GridMean {
    let total = n.pow(dims as u32);
    let nodes: Vec<C64> = (0..n)
        .map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64))
        .collect();
    let blocks = total.div_ceil(BLOCK);
    let parts: Vec<(f64, usize, usize)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(total);
            let mut logs = Vec::with_capacity(end - start);
            let mut discarded = 0;
            let mut negligible = 0;
            let mut z = vec![C64::new(1.0, 0.0); dims];
            for idx in start..end {
                let mut r = idx;
                for zi in z.iter_mut() {
                    *zi = nodes[r % n];
                    r /= n;
                }
                let s = f(&z);
                if s.abs <= DET_ZERO_REL * s.scale {
                    negligible += 1;
                }
                if s.abs < NEGLIGIBLE_SAMPLE || !s.abs.is_finite() {
                    discarded += 1;
                } else {
                    logs.push(s.abs.ln());
                }
            }
            (pairwise_sum(&logs), discarded, negligible)
        })
        .collect();
    let sums: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let discarded: usize = parts.iter().map(|p| p.1).sum();
    let negligible: usize = parts.iter().map(|p| p.2).sum();
    let kept = total - discarded;
    let mean = if kept == 0 { f64::NEG_INFINITY } else { pairwise_sum(&sums) / kept as f64 };
    GridMean { mean, discarded, negligible, total }
}

/// Grid sizes per axis visited by dyadic refinement.
fn levels(cfg: &QuadConfig, dims: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = cfg.min_grid.max(2);
    while n <= cfg.max_grid {
        if dims > 0 && n.checked_pow(dims as u32).is_none_or(|t| t > cfg.max_points) {
            break;
        }
        out.push(n);
        n *= 2;
    }
    if out.is_empty() {
        out.push(cfg.min_grid.max(2));
    }
    out
}

/// Outcome of dyadic refinement: final mean, its change from the previous
/// level, and the discard statistics at the final level.
struct Refined {
    mean: f64,
    change: f64,
    last: GridMean,
    converged: bool,
}

/// Convergence needs two successive level changes below tolerance: a single
/// small change can be a coincidence when zeros lie close to the torus.
fn refine(cfg: &QuadConfig, dims: usize, f: &(dyn Fn(&[C64]) -> Sample + Sync)) -> Refined {
    let mut prev: Option<f64> = None;
    let mut changes = [f64::INFINITY; 2];
    let mut last = None;
    for n in levels(cfg, dims) {
        let g = grid_log_mean(dims, n, f);
        last = Some(g);
        if g.negligible == g.total {
            break;
        }
        if let Some(p) = prev {
            changes = [changes[1], (g.mean - p).abs()];
            if changes.iter().all(|&c| c < cfg.tol) {
                return Refined { mean: g.mean, change: changes[0].max(changes[1]), last: g, converged: true };
            }
        }
        prev = Some(g.mean);
    }
    let last = last.expect("at least one level");
    Refined { mean: last.mean, change: changes[1], last, converged: false }
}

fn grid_warnings(r: &Refined) -> Vec<String> {
    let mut w = Vec::new();
    if !r.converged {
        w.push(format!("grid refinement stopped at the cap; last change {:.3e}", r.change));
    }
    let frac = r.last.discarded as f64 / r.last.total as f64;
    if frac > DISCARD_WARN_FRACTION {
        w.push(format!("{:.3}% of grid samples were discarded as zero", 100.0 * frac));
    }
    w
}

/// Mahler measure of a one-variable polynomial: `(log Mah, root logs)`.
/// Root logs are `log|r|` for the nonzero roots, sorted. Near-multiple
/// roots consistent with coefficient noise `eta` count at their centroid.
fn univariate_log_mahler(p: &ComplexPolynomial, eta: f64) -> Option<(f64, Vec<f64>)> {
    let deg = p.degree()?;
    let lead = p.leading().norm();
    if deg == 0 {
        return Some((lead.ln(), Vec::new()));
    }
    let roots = aberth_raw(p).ok()?;
    let mut logs: Vec<f64> = cluster_roots(p, &roots, eta)
        .into_iter()
        .map(|(r, m)| if m > 1 { (polish_multiple(p, r, m), m) } else { (r, m) })
        .filter(|(r, _)| r.norm() > 0.0)
        .flat_map(|(r, m)| std::iter::repeat_n(r.norm().ln(), m))
        .collect();
    logs.sort_by(f64::total_cmp);
    let big: f64 = logs.iter().map(|&l| l.max(0.0)).sum();
    Some((lead.ln() + big, logs))
}

fn poly_scale(p: &LaurentElement) -> f64 {
    p.terms().map(|(_, c)| c.norm()).sum()
}

/// Mahler measure of a Laurent polynomial.
pub fn mahler_measure(p: &LaurentElement, cfg: &QuadConfig) -> Result<MahlerResult> {
    cfg.validate()?;
    if p.is_zero() {
        return Ok(MahlerResult::zero(MahlerMethod::Roots, ZeroEvidence::Symbolic));
    }
    let k = p.rank();
    if k == 0 || p.len() == 1 {
        // Constants and monomials.
        let c = p.terms().next().map(|(_, c)| c.norm()).unwrap_or(0.0);
        return Ok(MahlerResult::from_value(c, MahlerMethod::Roots));
    }
    let method = match cfg.method {
        MethodChoice::Auto if k == 1 => MethodChoice::Roots,
        MethodChoice::Auto => MethodChoice::Nested,
        MethodChoice::Nested if k == 1 => MethodChoice::Roots,
        MethodChoice::Roots if k != 1 => {
            return Err(L2tError::Invalid("the roots method needs a one-variable polynomial".into()))
        }
        m => m,
    };
    match method {
        MethodChoice::Roots => {
            let (poly, _) = p.to_univariate()?;
            let (log, _) = univariate_log_mahler(&poly, f64::EPSILON).ok_or(L2tError::ZeroPolynomial)?;
            Ok(MahlerResult::from_log(log, MahlerMethod::Roots, 0.0))
        }
        MethodChoice::Grid => Ok(mahler_grid(p, cfg)),
        _ => Ok(mahler_nested(p, cfg)),
    }
}

fn mahler_grid(p: &LaurentElement, cfg: &QuadConfig) -> MahlerResult {
    let scale = poly_scale(p);
    let f = |z: &[C64]| Sample { abs: p.evaluate_unchecked(z).norm(), scale };
    let r = refine(cfg, p.rank(), &f);
    if r.last.negligible == r.last.total {
        return MahlerResult::zero(MahlerMethod::Grid, ZeroEvidence::Probabilistic);
    }
    let mut out = MahlerResult::from_log(r.mean, MahlerMethod::Grid, r.change.min(1.0));
    out.warnings = grid_warnings(&r);
    out
}

/// Sum of kink corrections for the positive parts of the sorted root logs
/// between consecutive outer nodes (cyclically), in units of the mean.
fn kink_correction(root_logs: &[Option<Vec<f64>>]) -> f64 {
    let n = root_logs.len();
    let mut parts = Vec::new();
    for j in 0..n {
        let (Some(a), Some(b)) = (&root_logs[j], &root_logs[(j + 1) % n]) else {
            continue;
        };
        if a.len() != b.len() {
            continue;
        }
        for (&x, &y) in a.iter().zip(b) {
            if (x < 0.0 && y > 0.0) || (x > 0.0 && y < 0.0) {
                let pos = x.max(y);
                let span = x.abs() + y.abs();
                parts.push(pos * pos / (2.0 * span) - pos / 2.0);
            }
        }
    }
    pairwise_sum(&parts) / n as f64
}

fn mahler_nested(p: &LaurentElement, cfg: &QuadConfig) -> MahlerResult {
    nested_log_mean(p.rank(), cfg, &|head: &[C64]| p.slice_last(head).ok().map(|q| (q, f64::EPSILON)))
}

/// Outer grid over the first `k - 1` variables; at each node `slice` gives
/// the polynomial in the last variable, whose Mahler measure comes from its
/// roots. Converges like the grid method (two small successive changes).
fn nested_log_mean(
    k: usize,
    cfg: &QuadConfig,
    slice: &(dyn Fn(&[C64]) -> Option<(ComplexPolynomial, f64)> + Sync),
) -> MahlerResult {
    let outer = k - 1;
    if outer == 0 {
        return match slice(&[]).and_then(|(p, eta)| univariate_log_mahler(&p, eta)) {
            Some((l, _)) if l.is_finite() => MahlerResult::from_log(l, MahlerMethod::Roots, 0.0),
            _ => MahlerResult::zero(MahlerMethod::Roots, ZeroEvidence::Probabilistic),
        };
    }
    let mut prev: Option<f64> = None;
    let mut change = f64::INFINITY;
    let mut prev_change = f64::INFINITY;
    let mut result = None;
    for n in levels(cfg, outer) {
        let nodes: Vec<C64> = (0..n)
            .map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64))
            .collect();
        let total = n.pow(outer as u32);
        let want_roots = outer == 1;
        let samples: Vec<Option<(f64, Vec<f64>)>> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let mut r = idx;
                let head: Vec<C64> = (0..outer)
                    .map(|_| {
                        let z = nodes[r % n];
                        r /= n;
                        z
                    })
                    .collect();
                let (poly, eta) = slice(&head)?;
                univariate_log_mahler(&poly, eta).map(|(l, logs)| (l, if want_roots { logs } else { Vec::new() }))
            })
            .collect();
        let kept: Vec<f64> = samples.iter().flatten().map(|s| s.0).filter(|l| l.is_finite()).collect();
        let discarded = total - kept.len();
        if kept.is_empty() {
            return MahlerResult::zero(MahlerMethod::Nested, ZeroEvidence::Probabilistic);
        }
        let mut mean = pairwise_sum(&kept) / kept.len() as f64;
        if want_roots && discarded == 0 {
            let logs: Vec<Option<Vec<f64>>> = samples.into_iter().map(|s| s.map(|s| s.1)).collect();
            mean += kink_correction(&logs);
        }
        if let Some(pv) = prev {
            prev_change = change;
            change = (mean - pv).abs();
        }
        result = Some((mean, discarded, total));
        if change < cfg.tol && prev_change < cfg.tol {
            break;
        }
        prev = Some(mean);
    }
    let (mean, discarded, total) = result.expect("at least one level");
    let converged = change < cfg.tol && prev_change < cfg.tol;
    let err = if converged { change.max(prev_change) } else { change };
    let mut out = MahlerResult::from_log(mean, MahlerMethod::Nested, err.min(1.0));
    if !converged {
        out.warnings.push(format!("outer refinement stopped at the cap; last change {change:.3e}"));
    }
    if discarded as f64 > DISCARD_WARN_FRACTION * total as f64 {
        out.warnings.push(format!("{discarded} of {total} outer slices vanished identically"));
    }
    out
}

/// Range of total exponents of the last variable in `det m`, from row and
/// column bounds; `None` if a row or column is zero.
fn det_last_bounds(m: &LaurentMatrix) -> Option<(i64, i64)> {
    let last = m.rank() - 1;
    let bound = |cells: &mut dyn Iterator<Item = &LaurentElement>| -> Option<(i64, i64)> {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for e in cells {
            if let Some(b) = e.exponent_bounds() {
                lo = lo.min(b[last].0);
                hi = hi.max(b[last].1);
            }
        }
        (lo <= hi).then_some((lo, hi))
    };
    let n = m.rows();
    let (mut rlo, mut rhi, mut clo, mut chi) = (0, 0, 0, 0);
    for i in 0..n {
        let (a, b) = bound(&mut (0..n).map(|j| m.get(i, j)))?;
        rlo += a;
        rhi += b;
        let (a, b) = bound(&mut (0..n).map(|j| m.get(j, i)))?;
        clo += a;
        chi += b;
    }
    Some((rlo.max(clo), rhi.min(chi)))
}

/// `det m(head, w)` as a polynomial in the last variable (times `w^-lo`),
/// interpolated at roots of unity, with its relative coefficient accuracy.
/// The grid is oversampled; the surplus coefficients are pure round-off and
/// measure it.
fn det_slice(m: &LaurentMatrix, head: &[C64], lo: i64, hi: i64) -> Option<(ComplexPolynomial, f64)> {
    let len = (hi - lo + 1) as usize;
    let n = len + (len / 4).max(8);
    let mut z = head.to_vec();
    z.push(C64::new(1.0, 0.0));
    let mut values = Vec::with_capacity(n);
    let mut scale = 0.0f64;
    for j in 0..n {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        *z.last_mut().expect("nonempty") = C64::from_polar(1.0, theta);
        let a = m.evaluate_unchecked(&z);
        scale = scale.max(hadamard(&a));
        let d = a.det().ok()?;
        values.push(d * C64::from_polar(1.0, -theta * lo as f64));
    }
    let mut coeffs: Vec<C64> = (0..n)
        .map(|d| {
            let terms: Vec<C64> = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((j * d) % n) as f64 / n as f64))
                .collect();
            let re: Vec<f64> = terms.iter().map(|t| t.re).collect();
            let im: Vec<f64> = terms.iter().map(|t| t.im).collect();
            C64::new(pairwise_sum(&re), pairwise_sum(&im)) / n as f64
        })
        .collect();
    let noise = coeffs[len..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    coeffs.truncate(len);
    let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max <= DET_ZERO_REL * scale {
        return None;
    }
    let cut = (INTERP_TRIM * max).max(4.0 * noise);
    while coeffs.last().is_some_and(|c| c.norm() < cut) {
        coeffs.pop();
    }
    // Low-order round-off would otherwise become spurious roots near 0.
    let low = coeffs.iter().take_while(|c| c.norm() < cut).count();
    coeffs.drain(..low);
    let eta = (4.0 * noise / max).max(f64::EPSILON);
    Some((ComplexPolynomial::new(coeffs), eta))
}

/// Product of row 2-norms (Hadamard bound on |det|).
fn hadamard(m: &ComplexMatrix) -> f64 {
    (0..m.rows()).map(|i| m.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).product()
}

fn det_sample(m: &LaurentMatrix, z: &[C64]) -> Sample {
    let a = m.evaluate_unchecked(z);
    let scale = hadamard(&a);
    match a.log_abs_det() {
        Ok((l, _)) if l.is_finite() => Sample { abs: l.exp(), scale },
        _ => Sample { abs: 0.0, scale },
    }
}

/// Regularised determinant of a square matrix over C[Z^k]: the Mahler
/// measure of its determinant. Returns value 0 for a zero determinant.
pub fn rdet_abelian(m: &LaurentMatrix, cfg: &QuadConfig) -> Result<MahlerResult> {
    cfg.validate()?;
    if !m.is_square() {
        return Err(L2tError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if m.rows() == 0 {
        return Ok(MahlerResult::from_value(1.0, MahlerMethod::Roots));
    }
    if m.rows() <= SYMBOLIC_DET_CAP {
        let det = m.symbolic_det()?;
        return mahler_measure(&det, cfg);
    }
    if m.rank() == 0 {
        let s = det_sample(m, &[]);
        if s.abs <= DET_ZERO_REL * s.scale {
            return Ok(MahlerResult::zero(MahlerMethod::Roots, ZeroEvidence::Probabilistic));
        }
        return Ok(MahlerResult::from_value(s.abs, MahlerMethod::Roots));
    }
    if cfg.method == MethodChoice::Grid {
        let f = |z: &[C64]| det_sample(m, z);
        let r = refine(cfg, m.rank(), &f);
        if r.last.negligible == r.last.total {
            return Ok(MahlerResult::zero(MahlerMethod::Grid, ZeroEvidence::Probabilistic));
        }
        let mut out = MahlerResult::from_log(r.mean, MahlerMethod::Grid, r.change.min(1.0));
        out.warnings = grid_warnings(&r);
        return Ok(out);
    }
    let Some((lo, hi)) = det_last_bounds(m) else {
        return Ok(MahlerResult::zero(MahlerMethod::Roots, ZeroEvidence::Symbolic));
    };
    if lo > hi {
        return Ok(MahlerResult::zero(MahlerMethod::Roots, ZeroEvidence::Symbolic));
    }
    Ok(nested_log_mean(m.rank(), cfg, &|head: &[C64]| det_slice(m, head, lo, hi)))
}

/// Random points of the unit torus from a seeded generator.
pub fn random_torus_points(k: usize, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..k).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))).collect())
        .collect()
}

/// Whether the determinant vanishes identically, with the kind of evidence.
pub fn is_det_zero(m: &LaurentMatrix) -> Result<(bool, ZeroEvidence)> {
    if !m.is_square() {
        return Err(L2tError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if m.rows() <= SYMBOLIC_DET_CAP {
        return Ok((m.symbolic_det()?.is_zero(), ZeroEvidence::Symbolic));
    }
    let pts = random_torus_points(m.rank(), ZERO_TEST_POINTS, 0x5eed_0f_2e40);
    let zero = pts.iter().all(|z| {
        let s = det_sample(m, z);
        s.abs <= DET_ZERO_REL * s.scale
    });
    Ok((zero, ZeroEvidence::Probabilistic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::ExponentVector;

    fn poly(k: usize, terms: &[(&[i64], f64)]) -> LaurentElement {
        LaurentElement::from_terms(k, terms.iter().map(|(e, c)| (ExponentVector(e.to_vec()), C64::new(*c, 0.0))))
            .unwrap()
    }

    #[test]
    fn powers_of_cyclotomic_polynomials() {
        for (p, e) in [(3usize, 6usize), (2, 5), (5, 4), (12, 3), (1, 8)] {
            let roots: Vec<C64> = (0..p * e)
                .map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j % p) as f64 / p as f64))
                .collect();
            let q = ComplexPolynomial::from_roots(C64::new(1.0, 0.0), &roots);
            let (l, _) = univariate_log_mahler(&q, f64::EPSILON).unwrap();
            assert!(l.abs() < 1e-9, "(z^{p} - 1)^{e}: {l:e}");
        }
    }

    #[test]
    fn lehmer_polynomial() {
        let p = poly(
            1,
            &[
                (&[10], 1.0),
                (&[9], 1.0),
                (&[7], -1.0),
                (&[6], -1.0),
                (&[5], -1.0),
                (&[4], -1.0),
                (&[3], -1.0),
                (&[1], 1.0),
                (&[0], 1.0),
            ],
        );
        let r = mahler_measure(&p, &QuadConfig::default()).unwrap();
        assert_eq!(r.method, MahlerMethod::Roots);
        assert!((r.value - 1.1762808182599183).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn simple_one_variable_values() {
        let cfg = QuadConfig::default();
        // 2z - 1 has the root 1/2 inside: Mah = 2
        let p = poly(1, &[(&[1], 2.0), (&[0], -1.0)]);
        assert!((mahler_measure(&p, &cfg).unwrap().value - 2.0).abs() < 1e-12);
        // monomial shifts do not matter
        let q = poly(1, &[(&[-3], 2.0), (&[-4], -1.0)]);
        assert!((mahler_measure(&q, &cfg).unwrap().value - 2.0).abs() < 1e-12);
        let c = poly(0, &[(&[], -3.0)]);
        assert_eq!(mahler_measure(&c, &cfg).unwrap().value, 3.0);
        let z = LaurentElement::zero(2);
        assert_eq!(mahler_measure(&z, &cfg).unwrap().value, 0.0);
    }

    #[test]
    fn smyth_value_both_paths() {
        let p = poly(2, &[(&[0, 0], 1.0), (&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let nested = mahler_measure(&p, &QuadConfig::with_tol(1e-8)).unwrap();
        assert!((nested.value - 1.3813564445185).abs() < 1e-6, "{:?}", nested);
        let cfg = QuadConfig { method: MethodChoice::Grid, ..QuadConfig::default() };
        let grid = mahler_measure(&p, &cfg).unwrap();
        assert!((grid.value - 1.3813564445185).abs() < 1e-3, "{:?}", grid);
    }

    #[test]
    fn grid_is_bit_stable_across_pools() {
        let p = poly(2, &[(&[0, 0], 1.0), (&[1, 0], 0.5), (&[0, 1], -0.3), (&[1, 1], 0.2)]);
        let cfg = QuadConfig { method: MethodChoice::Grid, max_grid: 256, ..QuadConfig::default() };
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| mahler_measure(&p, &cfg).unwrap().log_value)
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }

    #[test]
    fn rdet_of_large_matrices() {
        // diag(2 - z, 1, ..., 1) of size 8: Mah = 2
        let k = 1;
        let mut m = LaurentMatrix::identity(k, 8);
        m.set(0, 0, poly(1, &[(&[0], 2.0), (&[1], -1.0)]));
        let r = rdet_abelian(&m, &QuadConfig::default()).unwrap();
        assert_eq!(r.method, MahlerMethod::Roots);
        assert!((r.value - 2.0).abs() < 1e-12, "{:?}", r);
        let grid = QuadConfig { method: MethodChoice::Grid, ..QuadConfig::with_tol(1e-10) };
        let r = rdet_abelian(&m, &grid).unwrap();
        assert_eq!(r.method, MahlerMethod::Grid);
        assert!((r.value - 2.0).abs() < 1e-9, "{:?}", r);
        let (zero, ev) = is_det_zero(&m).unwrap();
        assert!(!zero && ev == ZeroEvidence::Probabilistic);
        m.set(0, 0, LaurentElement::zero(1));
        assert!(rdet_abelian(&m, &QuadConfig::default()).unwrap().is_zero());
        assert!(is_det_zero(&m).unwrap().0);
    }

    #[test]
    fn result_json_round_trip() {
        let r = MahlerResult::zero(MahlerMethod::Grid, ZeroEvidence::Probabilistic);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"log_value\":null"));
        let back: MahlerResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
