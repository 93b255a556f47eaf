//! Random matrix and state ensembles used by the samplers and tests.

use super::{CMat, CVec, DensityOperator};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;

/// Standard normal via Box-Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Standard complex Gaussian entry (unit variance per real component).
pub fn standard_complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

/// Ginibre matrix: iid standard complex Gaussian entries.
pub fn ginibre<R: Rng>(n: usize, rng: &mut R) -> CMat {
    Array2::from_shape_fn((n, n), |_| standard_complex(rng))
}

/// GUE-type random Hermitian matrix `(G + G†)/2`.
pub fn hermitian<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let g = ginibre(n, rng);
    (&g + &super::dagger(&g)).mapv(|z| 0.5 * z)
}

/// Random traceless Hermitian matrix.
pub fn traceless_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let mut h = hermitian(n, rng);
    let shift = super::trace(&h) / n as f64;
    for i in 0..n {
        h[[i, i]] -= shift;
    }
    h
}

/// Haar-random unitary: modified Gram-Schmidt of a Ginibre matrix
/// (positive-real R diagonal, so the distribution is exactly Haar).
pub fn unitary_haar<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let g = ginibre(n, rng);
    let mut cols: Vec<CVec> = (0..n).map(|j| g.column(j).to_owned()).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let proj: Complex64 = cols[i]
                    .iter()
                    .zip(cols[j].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let prev = cols[i].clone();
                cols[j].zip_mut_with(&prev, |b, a| *b -= proj * a);
            }
        }
        let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].mapv_inplace(|z| z / norm);
    }
    let mut u = CMat::zeros((n, n));
    for (j, col) in cols.iter().enumerate() {
        u.column_mut(j).assign(col);
    }
    u
}

/// Hilbert-Schmidt random full-rank density matrix `GG†/tr(GG†)`.
pub fn density_hs<R: Rng>(n: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(n, rng);
    let gg = g.dot(&super::dagger(&g));
    let tr = super::trace(&gg).re;
    DensityOperator::from_matrix(gg.mapv(|z| z / tr)).expect("GG†/tr is a state")
}

/// Random pure state from a Gaussian vector.
pub fn pure_state<R: Rng>(n: usize, rng: &mut R) -> DensityOperator {
    let mut psi: CVec = Array1::from_shape_fn(n, |_| standard_complex(rng));
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.mapv_inplace(|z| z / norm);
    DensityOperator::pure(&psi).expect("normalized vector")
}

/// Random probability vector (flat Dirichlet via exponentials).
pub fn probability_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| -f64::ln(rng.gen_range(f64::MIN_POSITIVE..1.0)))
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Zero-mean random Hermitian with unit Frobenius norm.
pub fn hermitian_direction<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let h = hermitian(n, rng);
    let norm = super::norm_fro(&h);
    if norm == 0.0 {
        let mut e = CMat::zeros((n, n));
        e[[0, 0]] = super::ONE;
        return e;
    }
    h.mapv(|z| z / norm)
}
