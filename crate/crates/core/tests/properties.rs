//! Property tests for the algebraic and numerical invariants.

mod common;

use common::*;
use l2t_core::alexander::{alexander_graph_curve, upper_triangular_torsion_complex, Normalization};
use l2t_core::chain::{torsion_subset, AdmissibleTriple, BasedChainComplex, Representation};
use l2t_core::laurent::{ExponentVector, LaurentElement, LaurentMatrix};
use l2t_core::mahler::{mahler_measure, QuadConfig};
use l2t_core::manifolds::{thurston_norm_graph, GraphManifold};
use l2t_core::numeric::{eigenvalues, poly_roots, ComplexMatrix, ComplexPolynomial, C64};
use l2t_core::quotient::{rdet_abelian_quotient, rdet_finite_quotient, FiniteQuotient, WordMatrix};
use proptest::prelude::*;
use rand::Rng;

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

fn laurent_gap(a: &LaurentElement, b: &LaurentElement) -> f64 {
    let scale = a.max_coeff().max(b.max_coeff()).max(1.0);
    a.sub(b).unwrap().max_coeff() / scale
}

fn random_matrix(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> ComplexMatrix {
    let data = (0..n * n).map(|_| random_c(rng)).collect();
    ComplexMatrix::new(n, n, data).unwrap()
}

fn symbolic_torsion(cx: &BasedChainComplex, rep: &Representation) -> f64 {
    let twisted = cx.diagonal_twist(rep).unwrap();
    let v = torsion_subset(&twisted, 0, &QuadConfig::default()).unwrap();
    assert!(v.is_ok(), "status {:?}", v.status);
    v.value
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn ring_multiplication_is_associative_and_commutative(seed in any::<u64>(), k in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_laurent(&mut r, k, 4, 2);
        let b = random_laurent(&mut r, k, 4, 2);
        let c = random_laurent(&mut r, k, 4, 2);
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(laurent_gap(&left, &right) < 1e-13);
        prop_assert!(laurent_gap(&a.mul(&b).unwrap(), &b.mul(&a).unwrap()) < 1e-13);
    }

    #[test]
    fn involution_is_an_antihomomorphism_of_order_two(seed in any::<u64>(), k in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_laurent(&mut r, k, 4, 2);
        let b = random_laurent(&mut r, k, 4, 2);
        prop_assert!(laurent_gap(&a.involution().involution(), &a) < 1e-15);
        let lhs = a.mul(&b).unwrap().involution();
        let rhs = b.involution().mul(&a.involution()).unwrap();
        prop_assert!(laurent_gap(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn symbolic_determinant_is_multiplicative(seed in any::<u64>(), n in 1usize..=3, k in 1usize..=2) {
        let mut r = rng(seed);
        let a = random_laurent_matrix(&mut r, k, n, n, 2, 1);
        let b = random_laurent_matrix(&mut r, k, n, n, 2, 1);
        let ab = a.mul(&b).unwrap().symbolic_det().unwrap();
        let prod = a.symbolic_det().unwrap().mul(&b.symbolic_det().unwrap()).unwrap();
        prop_assert!(laurent_gap(&ab, &prod) < 1e-12);
    }

    #[test]
    fn symbolic_determinant_evaluates_to_numeric(seed in any::<u64>(), n in 1usize..=4, k in 1usize..=3) {
        let mut r = rng(seed);
        let m = random_laurent_matrix(&mut r, k, n, n, 3, 2);
        let z: Vec<C64> = (0..k).map(|_| C64::from_polar(1.0, r.gen_range(0.0..std::f64::consts::TAU))).collect();
        let det = m.symbolic_det().unwrap().evaluate(&z).unwrap();
        let numeric = m.evaluate(&z).unwrap().det().unwrap();
        prop_assert!(close(det, numeric, 1e-10), "{det} vs {numeric}");
    }

    #[test]
    fn eigenvalues_multiply_to_determinant(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, n);
        let ev = eigenvalues(&m).unwrap();
        let prod = ev.iter().fold(C64::new(1.0, 0.0), |acc, z| acc * z);
        let sum: C64 = ev.iter().sum();
        prop_assert!(close(prod, m.det().unwrap(), 1e-9));
        prop_assert!(close(sum, m.trace(), 1e-9));
    }

    #[test]
    fn eigenvalue_moduli_are_conjugation_invariant(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, n);
        let t = conjugator(&mut r, n);
        let conj = t.mul(&m).unwrap().mul(&t.inverse().unwrap()).unwrap();
        let moduli = |m: &ComplexMatrix| {
            let mut v: Vec<f64> = eigenvalues(m).unwrap().iter().map(|z| z.norm()).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        for (a, b) in moduli(&m).iter().zip(moduli(&conj)) {
            prop_assert!((a - b).abs() <= 1e-7 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn roots_reconstruct_the_polynomial(seed in any::<u64>(), deg in 1usize..=14) {
        let mut r = rng(seed);
        let p = ComplexPolynomial::new((0..=deg).map(|_| random_coeff(&mut r)).collect());
        let roots = poly_roots(&p).unwrap();
        prop_assert_eq!(roots.len(), deg);
        let q = ComplexPolynomial::from_roots(p.leading(), &roots);
        let scale = p.max_coeff();
        for (a, b) in p.coeffs().iter().zip(q.coeffs()) {
            prop_assert!((a - b).norm() <= 1e-8 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn mahler_measure_ignores_monomials_and_involution(seed in any::<u64>(), k in 1usize..=2) {
        let mut r = rng(seed);
        let p = random_laurent(&mut r, k, 4, 2);
        let cfg = QuadConfig::with_tol(1e-8);
        let base = mahler_measure(&p, &cfg).unwrap().log_value;
        let shift = LaurentElement::monomial(k, random_exponent(&mut r, k, 3), C64::from_polar(1.0, 0.7));
        let shifted = mahler_measure(&p.mul(&shift).unwrap(), &cfg).unwrap().log_value;
        let inv = mahler_measure(&p.involution(), &cfg).unwrap().log_value;
        let tol = if k == 1 { 1e-9 } else { 1e-5 };
        prop_assert!((base - shifted).abs() <= tol, "{base} vs {shifted}");
        prop_assert!((base - inv).abs() <= tol, "{base} vs {inv}");
    }

    #[test]
    fn univariate_mahler_measure_is_multiplicative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_laurent(&mut r, 1, 5, 4);
        let q = random_laurent(&mut r, 1, 5, 4);
        let cfg = QuadConfig::default();
        let pq = mahler_measure(&p.mul(&q).unwrap(), &cfg).unwrap().log_value;
        let sum = mahler_measure(&p, &cfg).unwrap().log_value + mahler_measure(&q, &cfg).unwrap().log_value;
        prop_assert!((pq - sum).abs() <= 1e-8, "{pq} vs {sum}");
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), k in 1usize..=3) {
        let mut r = rng(seed);
        let p = random_laurent(&mut r, k, 5, 3);
        let back: LaurentElement = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(&back, &p);
        let cx = random_weakly_acyclic(&mut r, k, 3);
        let back: BasedChainComplex = serde_json::from_str(&serde_json::to_string(&cx).unwrap()).unwrap();
        prop_assert_eq!(&back, &cx);
        let m = random_laurent_matrix(&mut r, k, 2, 3, 2, 1);
        let back: LaurentMatrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn torsion_is_invariant_under_basis_change_and_conjugation(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let cx = random_weakly_acyclic(&mut r, 1, 3);
        let rep = commuting_rep(&mut r, n, 1, 0.5);
        let base = symbolic_torsion(&cx, &rep);
        let rebased = symbolic_torsion(&rebase_unimodular(&mut r, &cx), &rep);
        let t = conjugator(&mut r, n);
        let conj = symbolic_torsion(&cx, &rep.conjugate(&t).unwrap());
        prop_assert!(rel_err(rebased, base) <= 1e-6, "{rebased} vs {base}");
        prop_assert!(rel_err(conj, base) <= 1e-6, "{conj} vs {base}");
    }

    #[test]
    fn torsion_is_multiplicative_on_direct_sums(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cx = random_weakly_acyclic(&mut r, 1, 3);
        let a = commuting_rep(&mut r, 1, 1, 0.5);
        let b = commuting_rep(&mut r, 2, 1, 0.5);
        let sum = symbolic_torsion(&cx, &a.direct_sum(&b).unwrap());
        let prod = symbolic_torsion(&cx, &a) * symbolic_torsion(&cx, &b);
        prop_assert!(rel_err(sum, prod) <= 1e-6, "{sum} vs {prod}");
    }

    #[test]
    fn twisted_torus_has_unit_torsion(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let triple: AdmissibleTriple = random_torus_triple(&mut r, n, 1);
        let torus = l2t_core::manifolds::build_model_complex(&l2t_core::manifolds::ModelSpec::Torus {
            e1: ExponentVector::unit(2, 0),
            e2: ExponentVector::unit(2, 1),
        })
        .unwrap();
        let v = torsion_subset(&torus.twist(&triple).unwrap(), seed, &QuadConfig::default()).unwrap();
        prop_assert!(v.is_ok());
        prop_assert!((v.value - 1.0).abs() <= 1e-9, "{}", v.value);
    }

    #[test]
    fn graph_curves_respect_the_normalizations(seed in any::<u64>(), t in 0.2f64..5.0) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let pieces: Vec<_> = (0..r.gen_range(1..=3)).map(|_| random_seifert(&mut r, n).0).collect();
        let m = GraphManifold::new(pieces);
        let x = thurston_norm_graph(&m).unwrap();
        let ts = [t.min(1.0 / t), t.max(1.0 / t)];
        let sym = alexander_graph_curve(&m, None, &ts, Normalization::Symmetric).unwrap();
        let raw = alexander_graph_curve(&m, None, &ts, Normalization::Raw).unwrap();
        let (s0, s1) = (sym.samples[0].value.unwrap(), sym.samples[1].value.unwrap());
        prop_assert!(rel_err(s0, s1) <= 1e-12, "{s0} vs {s1}");
        for (s, w) in sym.samples.iter().zip(&raw.samples) {
            let ratio = w.value.unwrap() / s.value.unwrap();
            prop_assert!(rel_err(ratio, s.t.powf(x / 2.0)) <= 1e-12, "ratio {ratio} at t={}", s.t);
        }
    }

    #[test]
    fn quotient_estimate_is_conjugation_invariant(seed in any::<u64>(), m in 2usize..=7) {
        let mut r = rng(seed);
        let omega = random_laurent_matrix(&mut r, 1, 2, 2, 2, 1);
        let words = WordMatrix::from_laurent(&omega);
        let q = FiniteQuotient::cyclic(m).unwrap();
        let a = r.gen_range(0..m) as f64;
        let w = C64::from_polar(1.0, std::f64::consts::TAU * a / m as f64);
        let rep = Representation::new(2, vec![ComplexMatrix::diagonal(&[w, w.inv()])]).unwrap();
        let t = conjugator(&mut r, 2);
        let base = rdet_finite_quotient(&words, &q, Some(&rep)).unwrap();
        let conj = rdet_finite_quotient(&words, &q, Some(&rep.conjugate(&t).unwrap())).unwrap();
        prop_assert!((base.log_value - conj.log_value).abs() <= 1e-8 * base.log_value.abs().max(1.0));
        let dense = rdet_finite_quotient(&words, &q, None).unwrap();
        let fast = rdet_abelian_quotient(&omega, &[m]).unwrap();
        prop_assert!((dense.log_value - fast.log_value).abs() <= 1e-9 * dense.log_value.abs().max(1.0));
    }

    #[test]
    fn upper_triangular_reduction_is_conjugation_invariant(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = rng(seed);
        let cx = random_weakly_acyclic(&mut r, 1, 3);
        let img = upper_triangular(&mut r, n, 0.7);
        let rep = Representation::new(n, vec![img]).unwrap();
        let cfg = QuadConfig::default();
        let base = upper_triangular_torsion_complex(&cx, &rep, 0, &cfg).unwrap();
        // Conjugation inside the upper-triangular group keeps the input valid.
        let t = to_sl(upper_triangular(&mut r, n, 0.5));
        let conj = upper_triangular_torsion_complex(&cx, &rep.conjugate(&t).unwrap(), 0, &cfg).unwrap();
        prop_assert!(rel_err(base.product, base.direct.unwrap()) <= 1e-6);
        prop_assert!(rel_err(conj.product, base.product) <= 1e-6);
    }
}
