//! L2-Alexander torsion curves, symmetric torsion, the upper-triangular
//! reduction and convexity scans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{torsion_subset, BasedChainComplex, Representation, TorsionValue};
use crate::error::{L2tError, Result};
use crate::laurent::{CohomologyClass, LaurentMatrix, MultiTwistSpec};
use crate::mahler::{rdet_abelian, QuadConfig};
use crate::manifolds::{chi_orb, torsion_graph_manifold, GraphManifold};
use crate::numeric::{is_upper_triangular, ComplexMatrix, C64};

pub const CONVEXITY_TOL: f64 = 1e-6;
const TRIANGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Raw,
    Symmetric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub t: f64,
    /// `None` where the value is not determined.
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlexanderCurve {
    pub samples: Vec<CurveSample>,
    pub class: CohomologyClass,
    pub normalization: Normalization,
}

/// Formats like C's `%.12g`.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mant, e) = s.split_once('e').expect("exponent form");
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        let e: i32 = e.parse().expect("exponent");
        format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    }
}

impl AlexanderCurve {
    /// `t,value` rows; undetermined values are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for s in &self.samples {
            let v = s.value.map(format_sig12).unwrap_or_default();
            out.push_str(&format!("{},{}\n", format_sig12(s.t), v));
        }
        out
    }
}

/// `n` points from `t_min` to `t_max`, equally spaced in log t.
pub fn log_spaced(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max >= t_min && t_max.is_finite()) {
        return Err(L2tError::Invalid(format!("bad sample range [{t_min}, {t_max}]")));
    }
    if n == 0 {
        return Err(L2tError::Invalid("need at least one sample".into()));
    }
    if n == 1 {
        return Ok(vec![t_min]);
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    Ok((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect())
}

fn check_samples(ts: &[f64]) -> Result<()> {
    if let Some(&t) = ts.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        return Err(L2tError::NonPositiveTwist(t));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(L2tError::Invalid("sample points must be strictly increasing".into()));
    }
    Ok(())
}

/// Thurston norm of a graph manifold for fiber values `psi_h` per piece.
fn graph_norm(m: &GraphManifold, psi_h: &[f64]) -> Result<f64> {
    if psi_h.len() != m.pieces.len() {
        return Err(L2tError::Shape(format!("{} class values for {} pieces", psi_h.len(), m.pieces.len())));
    }
    let mut x = 0.0;
    for (p, v) in m.pieces.iter().zip(psi_h) {
        let chi = chi_orb(p);
        if chi > 0.0 {
            return Err(L2tError::Invalid(format!("piece has positive orbifold Euler characteristic {chi}")));
        }
        x += -v.abs() * chi;
    }
    Ok(x)
}

/// Closed-form curve `max{1, t^x}` (raw) or `max{t^{x/2}, t^{-x/2}}`
/// (symmetric). `psi` lists the class value on each piece's fiber; `None`
/// takes the values stored on the pieces.
pub fn alexander_graph_curve(
    m: &GraphManifold,
    psi: Option<&CohomologyClass>,
    t_samples: &[f64],
    normalization: Normalization,
) -> Result<AlexanderCurve> {
    m.validate()?;
    check_samples(t_samples)?;
    let class = match psi {
        Some(c) => c.clone(),
        None => CohomologyClass(m.pieces.iter().map(|p| p.psi_h).collect()),
    };
    let x = graph_norm(m, &class.0)?;
    let samples = t_samples
        .iter()
        .map(|&t| {
            let value = match normalization {
                Normalization::Raw => t.powf(x).max(1.0),
                Normalization::Symmetric => t.powf(x / 2.0).max(t.powf(-x / 2.0)),
            };
            CurveSample { t, value: Some(value) }
        })
        .collect();
    Ok(AlexanderCurve { samples, class, normalization })
}

/// Torsion of the complex after `g -> t^{psi(g)} g`.
pub fn alexander_torsion(c: &BasedChainComplex, psi: &CohomologyClass, t: f64, seed: u64, cfg: &QuadConfig) -> Result<TorsionValue> {
    let spec = MultiTwistSpec::single(psi.clone(), t)?;
    let twisted = c.map_boundaries(|d| d.multi_twist(&spec))?;
    torsion_subset(&twisted, seed, cfg)
}

/// `tau(c twisted by diag(t^psi, t^-psi))^{1/2}`.
pub fn symmetric_alexander_complex(
    c: &BasedChainComplex,
    psi: &CohomologyClass,
    t: f64,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<TorsionValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(L2tError::NonPositiveTwist(t));
    }
    if psi.rank() != c.rank() {
        return Err(L2tError::RankMismatch { expected: c.rank(), found: psi.rank() });
    }
    let images = psi
        .0
        .iter()
        .map(|&v| ComplexMatrix::diagonal(&[C64::new(t.powf(v), 0.0), C64::new(t.powf(-v), 0.0)]))
        .collect();
    let rep = Representation::new(2, images)?;
    Ok(torsion_subset(&c.diagonal_twist(&rep)?, seed, cfg)?.powf(0.5))
}

/// Alexander curve of a chain complex (raw or symmetric), samples in
/// parallel.
pub fn alexander_complex_curve(
    c: &BasedChainComplex,
    psi: &CohomologyClass,
    t_samples: &[f64],
    normalization: Normalization,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<AlexanderCurve> {
    check_samples(t_samples)?;
    let values: Vec<Result<TorsionValue>> = t_samples
        .par_iter()
        .map(|&t| match normalization {
            Normalization::Raw => alexander_torsion(c, psi, t, seed, cfg),
            Normalization::Symmetric => symmetric_alexander_complex(c, psi, t, seed, cfg),
        })
        .collect();
    let mut samples = Vec::with_capacity(t_samples.len());
    for (&t, v) in t_samples.iter().zip(values) {
        let v = v?;
        samples.push(CurveSample { t, value: v.is_ok().then_some(v.value) });
    }
    Ok(AlexanderCurve { samples, class: psi.clone(), normalization })
}

/// Report of the upper-triangular reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperTriangularReport {
    /// `prod_i A(N, phi_i, e)`.
    pub product: f64,
    /// Directly twisted torsion, when computed.
    pub direct: Option<f64>,
    /// The classes `phi_i = log|chi_i|`, one list per diagonal entry.
    pub classes: Vec<CohomologyClass>,
    pub factors: Vec<f64>,
}

fn diagonal_logs(images: &[&ComplexMatrix]) -> Result<Vec<CohomologyClass>> {
    let n = images.first().map_or(0, |m| m.rows());
    let mut classes = vec![Vec::with_capacity(images.len()); n];
    for m in images {
        let (upper, diag) = is_upper_triangular(m, TRIANGULAR_TOL * m.max_abs().max(1.0));
        if !upper {
            return Err(L2tError::NotUpperTriangular);
        }
        for (i, d) in diag.iter().enumerate() {
            if d.norm() == 0.0 {
                return Err(L2tError::Invalid("zero diagonal character".into()));
            }
            classes[i].push(d.norm().ln());
        }
    }
    Ok(classes.into_iter().map(CohomologyClass).collect())
}

/// Graph-manifold form: the symmetric closed-form curve at t = e for each
/// diagonal character of rho(h), compared with the closed-form torsion.
pub fn upper_triangular_torsion_graph(m: &GraphManifold) -> Result<UpperTriangularReport> {
    m.validate()?;
    let images: Vec<&ComplexMatrix> = m.pieces.iter().map(|p| &p.fiber_image).collect();
    let classes = diagonal_logs(&images)?;
    let e = std::f64::consts::E;
    let factors: Vec<f64> = classes
        .iter()
        .map(|phi| {
            let curve = alexander_graph_curve(m, Some(phi), &[e], Normalization::Symmetric)?;
            Ok(curve.samples[0].value.expect("closed form is always determined"))
        })
        .collect::<Result<_>>()?;
    Ok(UpperTriangularReport {
        product: factors.iter().product(),
        direct: Some(torsion_graph_manifold(m)?),
        classes,
        factors,
    })
}

/// Chain-complex form over C[Z^k]: `prod_i A(c, phi_i, e)` against the
/// torsion of the complex twisted by `rep` itself.
pub fn upper_triangular_torsion_complex(
    c: &BasedChainComplex,
    rep: &Representation,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<UpperTriangularReport> {
    let images: Vec<&ComplexMatrix> = rep.images().iter().collect();
    let classes = diagonal_logs(&images)?;
    let e = std::f64::consts::E;
    let mut factors = Vec::with_capacity(classes.len());
    for phi in &classes {
        let t = alexander_torsion(c, phi, e, seed, cfg)?;
        if !t.is_ok() {
            return Err(L2tError::NotWeaklyAcyclic);
        }
        factors.push(t.value);
    }
    let direct = torsion_subset(&c.diagonal_twist(rep)?, seed, cfg)?;
    Ok(UpperTriangularReport {
        product: factors.iter().product(),
        direct: direct.is_ok().then_some(direct.value),
        classes,
        factors,
    })
}

/// Entropy and norm of a fibered class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberedCurveSpec {
    pub entropy: f64,
    pub thurston_norm: f64,
}

/// 1 below `1/h`, `t^x` above `h`, undetermined in between.
pub fn fibered_reference_curve(spec: &FiberedCurveSpec, t_samples: &[f64]) -> Result<AlexanderCurve> {
    if !(spec.entropy >= 1.0) || !(spec.thurston_norm >= 0.0) {
        return Err(L2tError::Invalid("fibered curve needs entropy >= 1 and norm >= 0".into()));
    }
    check_samples(t_samples)?;
    let h = spec.entropy;
    let samples = t_samples
        .iter()
        .map(|&t| {
            let value = if t < 1.0 / h {
                Some(1.0)
            } else if t > h {
                Some(t.powf(spec.thurston_norm))
            } else {
                None
            };
            CurveSample { t, value }
        })
        .collect();
    Ok(AlexanderCurve { samples, class: CohomologyClass(vec![spec.thurston_norm]), normalization: Normalization::Raw })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
    pub s_values: Vec<f64>,
    pub log_values: Vec<f64>,
    pub second_differences: Vec<f64>,
    pub min_second_difference: f64,
    pub tolerance: f64,
    pub verdict: bool,
}

/// Samples `s -> log rdet(Omega twisted by (Phi, exp(base + s dir)))` on
/// equally spaced `s` in `[s_min, s_max]` and checks discrete convexity.
#[allow(clippy::too_many_arguments)]
pub fn convexity_scan(
    omega: &LaurentMatrix,
    classes: &[CohomologyClass],
    base: &[f64],
    direction: &[f64],
    samples: usize,
    s_range: (f64, f64),
    tolerance: f64,
    cfg: &QuadConfig,
) -> Result<ConvexityReport> {
    if samples < 5 || samples % 2 == 0 {
        return Err(L2tError::Invalid(format!("sample count must be odd and at least 5, got {samples}")));
    }
    if base.len() != classes.len() || direction.len() != classes.len() {
        return Err(L2tError::Shape("base and direction need one entry per class".into()));
    }
    // Second differences at the `tolerance` scale need values at least as accurate.
    let cfg = &QuadConfig { tol: cfg.tol.min(tolerance), ..cfg.clone() };
    if rdet_abelian(omega, cfg)?.is_zero() {
        return Err(L2tError::ZeroDeterminant);
    }
    let (s0, s1) = s_range;
    let s_values: Vec<f64> =
        (0..samples).map(|i| s0 + (s1 - s0) * i as f64 / (samples - 1) as f64).collect();
    let log_values: Vec<f64> = s_values
        .par_iter()
        .map(|&s| {
            let params: Vec<f64> = base.iter().zip(direction).map(|(b, d)| (b + s * d).exp()).collect();
            let spec = MultiTwistSpec::new(classes.to_vec(), params)?;
            Ok(rdet_abelian(&omega.multi_twist(&spec)?, cfg)?.log_value)
        })
        .collect::<Result<_>>()?;
    let second_differences: Vec<f64> =
        log_values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let min_second_difference = second_differences.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConvexityReport {
        base: base.to_vec(),
        direction: direction.to_vec(),
        s_values,
        log_values,
        second_differences,
        min_second_difference,
        tolerance,
        verdict: min_second_difference >= -tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::LaurentElement;
    use crate::manifolds::{build_model_complex, ModelSpec, SeifertPiece};
    use crate::laurent::ExponentVector;

    fn trefoil(t: f64) -> GraphManifold {
        let rho = ComplexMatrix::diagonal(&[C64::new(t.powi(6), 0.0), C64::new(t.powi(-6), 0.0)]);
        GraphManifold::new(vec![SeifertPiece::trefoil(rho, 6.0).unwrap()])
    }

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(0.25), "0.25");
        assert_eq!(format_sig12(2.0f64.sqrt()), "1.41421356237");
        assert_eq!(format_sig12(1.5e-7), "1.5e-07");
        assert_eq!(format_sig12(123456789012345.0), "1.23456789012e+14");
    }

    #[test]
    fn graph_curve_values() {
        let m = trefoil(2.0);
        let c = alexander_graph_curve(&m, None, &[0.5, 1.0, 2.0], Normalization::Raw).unwrap();
        let v: Vec<f64> = c.samples.iter().map(|s| s.value.unwrap()).collect();
        assert_eq!(v, vec![1.0, 1.0, 2.0]);
        let zero = CohomologyClass(vec![0.0]);
        let c = alexander_graph_curve(&m, Some(&zero), &[0.5, 3.0], Normalization::Raw).unwrap();
        assert!(c.samples.iter().all(|s| s.value == Some(1.0)));
        let s = alexander_graph_curve(&m, None, &[0.5, 2.0], Normalization::Symmetric).unwrap();
        assert!((s.samples[0].value.unwrap() - s.samples[1].value.unwrap()).abs() < 1e-15);
        assert!(c.to_csv().starts_with("t,value\n0.5,1\n"));
    }

    #[test]
    fn fibered_reference() {
        let spec = FiberedCurveSpec { entropy: 1.0, thurston_norm: 0.0 };
        let c = fibered_reference_curve(&spec, &[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(c.samples.iter().map(|s| s.value).collect::<Vec<_>>(), vec![Some(1.0), None, Some(1.0)]);
        let h = 2.0;
        let spec = FiberedCurveSpec { entropy: h, thurston_norm: 1.0 };
        let c = fibered_reference_curve(&spec, &[2.0 * h]).unwrap();
        assert_eq!(c.samples[0].value, Some(2.0 * h));
    }

    #[test]
    fn upper_triangular_graph_matches_closed_form() {
        let s: f64 = 1.7;
        let m = trefoil(s);
        let r = upper_triangular_torsion_graph(&m).unwrap();
        assert!((r.product - s).abs() < 1e-9 * s, "{r:?}");
        assert!((r.direct.unwrap() - s).abs() < 1e-9 * s);
    }

    #[test]
    fn symmetric_torus_is_one() {
        let k = 2;
        let c = build_model_complex(&ModelSpec::Torus {
            e1: ExponentVector::unit(k, 0),
            e2: ExponentVector::unit(k, 1),
        })
        .unwrap();
        for t in [0.5, 2.0, 3.0] {
            let v = symmetric_alexander_complex(&c, &CohomologyClass(vec![1.0, -0.5]), t, 0, &QuadConfig::default())
                .unwrap();
            assert!((v.value - 1.0).abs() < 1e-9, "{v:?}");
        }
    }

    #[test]
    fn kinked_one_by_one_scan() {
        // Omega = g - c, psi(g) = 1: V(t) = max(t, |c|).
        let c = 1.5;
        let omega = LaurentMatrix::from_rows(1, vec![vec![LaurentElement::real(1, &[(&[1], 1.0), (&[0], -c)]).unwrap()]])
            .unwrap();
        let classes = vec![CohomologyClass(vec![1.0])];
        let r = convexity_scan(&omega, &classes, &[0.0], &[1.0], 33, (-1.0, 1.0), CONVEXITY_TOL, &QuadConfig::default())
            .unwrap();
        for (s, v) in r.s_values.iter().zip(&r.log_values) {
            assert!((v - s.max(c.ln())).abs() < 1e-12);
        }
        assert!(r.verdict);
        let flat = convexity_scan(&omega, &classes, &[0.3], &[0.0], 5, (-1.0, 1.0), CONVEXITY_TOL, &QuadConfig::default())
            .unwrap();
        assert!(flat.second_differences.iter().all(|d| d.abs() < 1e-14));
    }
}
