//! Seeded random fixtures shared by the integration tests.
#![allow(dead_code)]

use l2t_core::chain::{AdmissibleTriple, BasedChainComplex, Representation};
use l2t_core::laurent::{ExponentVector, LaurentElement, LaurentMatrix};
use l2t_core::manifolds::SeifertPiece;
use l2t_core::numeric::{ComplexMatrix, C64};
use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Nonzero coefficient bounded away from 0.
pub fn random_coeff(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(rng.gen_range(0.3..2.0), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Scales a square matrix to determinant 1.
pub fn to_sl(m: ComplexMatrix) -> ComplexMatrix {
    let n = m.rows() as f64;
    let d = m.det().unwrap();
    m.scale(d.powf(-1.0 / n))
}

/// Well-conditioned element of SL(n, C).
pub fn conjugator(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(n).scale(c(1.5, 0.0));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += random_c(rng) * 0.6;
        }
    }
    to_sl(m)
}

/// Diagonal unimodular entries with log-moduli in `[-spread, spread]`.
pub fn unimodular_diag(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<C64> {
    let mut logs: Vec<f64> = (0..n).map(|_| rng.gen_range(-spread..=spread)).collect();
    let mut args: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let ml = logs.iter().sum::<f64>() / n as f64;
    let ma = args.iter().sum::<f64>() / n as f64;
    logs.iter_mut().for_each(|l| *l -= ml);
    args.iter_mut().for_each(|a| *a -= ma);
    logs.iter().zip(&args).map(|(&l, &a)| C64::from_polar(l.exp(), a)).collect()
}

/// Commuting generator images `T D_j T^-1` for Z^k in SL(n, C).
pub fn commuting_rep(rng: &mut ChaCha8Rng, n: usize, k: usize, spread: f64) -> Representation {
    let t = conjugator(rng, n);
    let ti = t.inverse().unwrap();
    let images = (0..k)
        .map(|_| {
            let d = ComplexMatrix::diagonal(&unimodular_diag(rng, n, spread));
            t.mul(&d).unwrap().mul(&ti).unwrap()
        })
        .collect();
    Representation::new(n, images).unwrap()
}

/// Upper-triangular unimodular matrix with random off-diagonal part.
pub fn upper_triangular(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::diagonal(&unimodular_diag(rng, n, spread));
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = random_c(rng);
        }
    }
    m
}

pub fn random_exponent(rng: &mut ChaCha8Rng, k: usize, max_exp: i64) -> ExponentVector {
    ExponentVector((0..k).map(|_| rng.gen_range(-max_exp..=max_exp)).collect())
}

pub fn random_laurent(rng: &mut ChaCha8Rng, k: usize, terms: usize, max_exp: i64) -> LaurentElement {
    loop {
        let ts: Vec<_> = (0..terms).map(|_| (random_exponent(rng, k, max_exp), random_coeff(rng))).collect();
        let e = LaurentElement::from_terms(k, ts).unwrap();
        if !e.is_zero() {
            return e;
        }
    }
}

pub fn random_laurent_matrix(
    rng: &mut ChaCha8Rng,
    k: usize,
    rows: usize,
    cols: usize,
    terms: usize,
    max_exp: i64,
) -> LaurentMatrix {
    let entries = (0..rows * cols)
        .map(|_| {
            let t = rng.gen_range(1..=terms);
            random_laurent(rng, k, t, max_exp)
        })
        .collect();
    LaurentMatrix::new(k, rows, cols, entries).unwrap()
}

pub fn constant_matrix(k: usize, m: &ComplexMatrix) -> LaurentMatrix {
    let entries = m.data().iter().map(|&z| LaurentElement::constant(k, z)).collect();
    LaurentMatrix::new(k, m.rows(), m.cols(), entries).unwrap()
}

/// Koszul complex of `(a, b)`: ranks 1, 2, 1.
pub fn koszul2(a: &LaurentElement, b: &LaurentElement) -> BasedChainComplex {
    let k = a.rank();
    let d1 = LaurentMatrix::from_rows(k, vec![vec![a.clone()], vec![b.clone()]]).unwrap();
    let d2 = LaurentMatrix::from_rows(k, vec![vec![b.neg(), a.clone()]]).unwrap();
    BasedChainComplex::new(k, 0, vec![1, 2, 1], vec![d1, d2]).unwrap()
}

/// Koszul complex of `(a, b, c)`: ranks 1, 3, 3, 1.
pub fn koszul3(a: &LaurentElement, b: &LaurentElement, c: &LaurentElement) -> BasedChainComplex {
    let k = a.rank();
    let z = LaurentElement::zero(k);
    let d1 = LaurentMatrix::from_rows(k, vec![vec![a.clone()], vec![b.clone()], vec![c.clone()]]).unwrap();
    let d2 = LaurentMatrix::from_rows(
        k,
        vec![
            vec![b.clone(), a.neg(), z.clone()],
            vec![c.clone(), z.clone(), a.neg()],
            vec![z, c.clone(), b.neg()],
        ],
    )
    .unwrap();
    let d3 = LaurentMatrix::from_rows(k, vec![vec![c.clone(), b.neg(), a.clone()]]).unwrap();
    BasedChainComplex::new(k, 0, vec![1, 3, 3, 1], vec![d1, d2, d3]).unwrap()
}

/// Random constant change of basis on every module.
pub fn rebase(rng: &mut ChaCha8Rng, cx: &BasedChainComplex) -> BasedChainComplex {
    rebase_with(rng, cx, false)
}

/// Change of basis by matrices of determinant 1, which leaves torsion fixed.
pub fn rebase_unimodular(rng: &mut ChaCha8Rng, cx: &BasedChainComplex) -> BasedChainComplex {
    rebase_with(rng, cx, true)
}

fn rebase_with(rng: &mut ChaCha8Rng, cx: &BasedChainComplex, unimodular: bool) -> BasedChainComplex {
    let k = cx.rank();
    let ranks = cx.ranks().to_vec();
    let us: Vec<ComplexMatrix> = ranks
        .iter()
        .map(|&r| {
            let mut m = ComplexMatrix::identity(r);
            for i in 0..r {
                for j in 0..r {
                    m[(i, j)] += random_c(rng) * 0.5;
                }
            }
            if unimodular {
                to_sl(m)
            } else {
                m
            }
        })
        .collect();
    let boundaries = cx
        .boundaries()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            // d: C_{i+1} -> C_i, rows indexed by C_{i+1}.
            let left = constant_matrix(k, &us[i + 1]);
            let right = constant_matrix(k, &us[i].inverse().unwrap());
            left.mul(d).unwrap().mul(&right).unwrap()
        })
        .collect();
    BasedChainComplex::new(k, cx.min_degree(), ranks, boundaries).unwrap()
}

/// Weakly acyclic 3-term (`terms = 3`) or 4-term Koszul complex with a
/// random basis.
pub fn random_weakly_acyclic(rng: &mut ChaCha8Rng, k: usize, terms: usize) -> BasedChainComplex {
    let el = |rng: &mut ChaCha8Rng| {
        let t = rng.gen_range(2..=3);
        random_laurent(rng, k, t, 2)
    };
    let cx = if terms == 3 {
        let (a, b) = (el(rng), el(rng));
        koszul2(&a, &b)
    } else {
        let (a, b, c) = (el(rng), el(rng), el(rng));
        koszul3(&a, &b, &c)
    };
    rebase(rng, &cx)
}

/// Random Seifert piece with `g <= 2`, `b <= 2`, at most 3 exceptional
/// fibers and a fiber image `S^P` for a random root `S in SL(n)`; returns
/// the piece and `S`. Closed bases get fibers with `sum q/p = 0`; the
/// orbifold Euler characteristic is nonpositive.
pub fn random_seifert(rng: &mut ChaCha8Rng, n: usize) -> (SeifertPiece, ComplexMatrix) {
    let (genus, boundary, fibers) = loop {
        let (g, b, f) = random_base(rng);
        let chi = 2.0 - 2.0 * g as f64 - b as f64 - f.iter().map(|&(_, p)| 1.0 - 1.0 / p as f64).sum::<f64>();
        if chi <= 0.0 {
            break (g, b, f);
        }
    };
    let big_p = fibers.iter().fold(1i64, |a, &(_, p)| a.lcm(&p));
    let t = conjugator(rng, n);
    let d = ComplexMatrix::diagonal(&unimodular_diag(rng, n, 2.0 / big_p as f64));
    let root = t.mul(&d).unwrap().mul(&t.inverse().unwrap()).unwrap();
    let image = root.pow(big_p).unwrap();
    let piece = SeifertPiece::new(genus, boundary, fibers, image, 1.0).unwrap();
    (piece, root)
}

fn random_base(rng: &mut ChaCha8Rng) -> (u32, u32, Vec<(i64, i64)>) {
    let genus = rng.gen_range(0..=2u32);
    let boundary = rng.gen_range(0..=2u32);
    let mut fibers = Vec::new();
    if boundary == 0 {
        let p = rng.gen_range(2..=5i64);
        let q = *[1, -1].choose(rng).unwrap() * coprime_to(rng, p);
        fibers.push((q, p));
        fibers.push((-q, p));
    } else {
        for _ in 0..rng.gen_range(0..=3) {
            let p = rng.gen_range(2..=5i64);
            let q = *[1, -1].choose(rng).unwrap() * coprime_to(rng, p);
            fibers.push((q, p));
        }
    }
    (genus, boundary, fibers)
}

fn coprime_to(rng: &mut ChaCha8Rng, p: i64) -> i64 {
    loop {
        let q = rng.gen_range(1..=2 * p);
        if q.gcd(&p) == 1 {
            return q;
        }
    }
}

/// `(gamma, rho, witness)` for Z^2 -> Z^k with infinite image, rho through
/// a commuting witness in SL(n).
pub fn random_torus_triple(rng: &mut ChaCha8Rng, n: usize, k: usize) -> AdmissibleTriple {
    let gamma: Vec<ExponentVector> = loop {
        let g: Vec<ExponentVector> = (0..2).map(|_| random_exponent(rng, k, 2)).collect();
        if g.iter().any(|x| !x.is_zero()) {
            break g;
        }
    };
    let witness = commuting_rep(rng, n, k, 0.8);
    let images = gamma.iter().map(|g| witness.image(g).unwrap()).collect();
    let rep = Representation::with_tol(n, images, 1e-7).unwrap();
    AdmissibleTriple::new(gamma, k, rep, Some(witness)).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
