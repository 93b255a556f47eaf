//! Fixed-point algebra `N = {a_1, ..., a_s}'` and the trace-preserving
//! conditional expectation onto it.
//!
//! The commutant is the kernel of the vectorized generator, identified by its
//! zero eigenspace. Misidentifying `N` silently would corrupt every entropy
//! quantity downstream, so the kernel is cross-checked against an independent
//! Gaussian-elimination rank computation of the stacked commutator system and
//! the spectral separation between the zero band and the gap must exceed 10³.

use crate::linalg::{
    self, hs_inner, identity, kron, norm_fro, unvec, vec_col, CMat, HermitianOperator,
    LinalgError, Superoperator,
};
use crate::lindblad::{LindbladError, LindbladGenerator};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Relative kernel threshold on the spectrum of `Σ ad² `.
const KERNEL_RTOL: f64 = 1e-9;
/// Required separation between the zero band and the first nonzero eigenvalue.
const SEPARATION_FACTOR: f64 = 1e3;
/// Tolerance for the `T_{t_max} → E_N` consistency check.
const LIMIT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FixedPointError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(
        "kernel identification ambiguous: zero band {zero_band:.3e} vs first nonzero {first_nonzero:.3e} (need separation {SEPARATION_FACTOR})"
    )]
    SpectralAmbiguity { zero_band: f64, first_nonzero: f64 },
    #[error("kernel dimension {kernel} disagrees with commutant system rank count {linear_system}")]
    DimensionDisagreement { kernel: usize, linear_system: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("semigroup limit deviates from conditional expectation by {deviation:.3e} > {LIMIT_TOL:.0e}")]
    ExpectationInconsistency { deviation: f64 },
}

/// Orthonormal (Hilbert-Schmidt) basis of the commutant algebra.
#[derive(Debug, Clone)]
pub struct CommutantBasis {
    dim: usize,
    basis: Vec<CMat>,
}

impl CommutantBasis {
    /// Solve `[a_k, x] = 0` jointly via the zero eigenspace of `Σ_k ad_{a_k}²`.
    pub fn from_jumps(dim: usize, jumps: &[HermitianOperator]) -> Result<Self, FixedPointError> {
        for j in jumps {
            if j.dim() != dim {
                return Err(FixedPointError::DimensionMismatch {
                    expected: dim,
                    got: j.dim(),
                });
            }
        }
        if jumps.is_empty() {
            // Commutant of nothing is the full matrix algebra; the matrix
            // units are already HS-orthonormal.
            let mut basis = Vec::with_capacity(dim * dim);
            for j in 0..dim {
                for i in 0..dim {
                    let mut e = CMat::zeros((dim, dim));
                    e[[i, j]] = linalg::c64(1.0, 0.0);
                    basis.push(e);
                }
            }
            return Ok(Self { dim, basis });
        }

        // Σ_k ad_{a_k}† ad_{a_k} is exactly the vectorized generator.
        let eye = identity(dim);
        let mut k_mat = CMat::zeros((dim * dim, dim * dim));
        for j in jumps {
            let a = j.matrix();
            let a2 = a.dot(a);
            k_mat = k_mat + kron(&eye, &a2) + kron(&a2.t().to_owned(), &eye)
                - kron(&a.t().to_owned(), a).mapv(|z| 2.0 * z);
        }
        let dec = linalg::eigh(&k_mat)?;
        let scale = dec
            .values
            .iter()
            .map(|v| v.abs())
            .fold(f64::MIN_POSITIVE, f64::max);
        let thresh = KERNEL_RTOL * scale;
        let kernel_dim = dec.values.iter().filter(|&&v| v.abs() <= thresh).count();
        let zero_band = dec.values[..kernel_dim]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        if kernel_dim < dec.values.len() {
            let first_nonzero = dec.values[kernel_dim];
            if zero_band > 0.0 && first_nonzero < SEPARATION_FACTOR * zero_band {
                return Err(FixedPointError::SpectralAmbiguity {
                    zero_band,
                    first_nonzero,
                });
            }
        }

        // Independent count: rank of the stacked commutator superoperators.
        let mut stacked = CMat::zeros((jumps.len() * dim * dim, dim * dim));
        for (k, j) in jumps.iter().enumerate() {
            let a = j.matrix();
            let ad = kron(&eye, a) - kron(&a.t().to_owned(), &eye);
            for r in 0..dim * dim {
                for c in 0..dim * dim {
                    stacked[[k * dim * dim + r, c]] = ad[[r, c]];
                }
            }
        }
        let rank = gaussian_rank(stacked);
        let d_linear = dim * dim - rank;
        if d_linear != kernel_dim {
            return Err(FixedPointError::DimensionDisagreement {
                kernel: kernel_dim,
                linear_system: d_linear,
            });
        }

        let mut basis: Vec<CMat> = (0..kernel_dim)
            .map(|k| unvec(&dec.vectors.column(k).to_owned(), dim))
            .collect();
        orthonormalize(&mut basis);
        Ok(Self { dim, basis })
    }

    /// Basis from a generator's jumps.
    pub fn from_generator(gen: &LindbladGenerator) -> Result<Self, FixedPointError> {
        Self::from_jumps(gen.dim(), gen.jumps())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the commutant algebra.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// Conditional expectation `E_N(x) = Σ_i b_i tr(b_i† x)`.
    pub fn conditional_expectation(&self, x: &CMat) -> Result<CMat, FixedPointError> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(FixedPointError::DimensionMismatch {
                expected: self.dim,
                got: x.nrows(),
            });
        }
        let mut out = CMat::zeros((self.dim, self.dim));
        for b in &self.basis {
            let coeff = hs_inner(b, x);
            out.zip_mut_with(b, |o, bij| *o += coeff * bij);
        }
        Ok(out)
    }

    /// The expectation as a superoperator (projector onto `vec(N)`).
    pub fn expectation_superop(&self) -> Superoperator {
        let n2 = self.dim * self.dim;
        let mut p = CMat::zeros((n2, n2));
        for b in &self.basis {
            let v = vec_col(b);
            for r in 0..n2 {
                for c in 0..n2 {
                    p[[r, c]] += v[r] * v[c].conj();
                }
            }
        }
        Superoperator::from_matrix(self.dim, p).expect("square by construction")
    }
}

/// Max deviation `‖T_{t_max}(x) - E_N(x)‖_F` over random Hermitian samples.
/// A deviation above `1e-6` is an internal inconsistency, not user error.
pub fn check_expectation_limit(
    gen: &LindbladGenerator,
    basis: &CommutantBasis,
    samples: usize,
    t_max: f64,
    seed: u64,
) -> Result<f64, FixedPointError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = linalg::random::hermitian(gen.dim(), &mut rng);
        let evolved = gen.evolve_matrix(&x, t_max)?;
        let projected = basis.conditional_expectation(&x)?;
        let dev = norm_fro(&(&evolved - &projected)) / norm_fro(&x).max(1.0);
        worst = worst.max(dev);
    }
    if worst > LIMIT_TOL {
        return Err(FixedPointError::ExpectationInconsistency { deviation: worst });
    }
    Ok(worst)
}

/// Modified Gram-Schmidt with a re-orthogonalization pass.
fn orthonormalize(vecs: &mut [CMat]) {
    for j in 0..vecs.len() {
        for _pass in 0..2 {
            for i in 0..j {
                let proj = hs_inner(&vecs[i], &vecs[j]);
                let prev = vecs[i].clone();
                vecs[j].zip_mut_with(&prev, |b, a| *b -= proj * a);
            }
        }
        let norm = norm_fro(&vecs[j]);
        vecs[j].mapv_inplace(|z| z / norm);
    }
}

/// Numerical rank by Gaussian elimination with partial pivoting.
fn gaussian_rank(mut m: Array2<num_complex::Complex64>) -> usize {
    let rows = m.nrows();
    let cols = m.ncols();
    let scale = m.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let tol = 1e-9 * scale;
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        if row >= rows {
            break;
        }
        // Pivot search in this column.
        let (mut best, mut best_abs) = (row, m[[row, col]].norm());
        for r in row + 1..rows {
            let a = m[[r, col]].norm();
            if a > best_abs {
                best = r;
                best_abs = a;
            }
        }
        if best_abs <= tol {
            continue;
        }
        if best != row {
            for c in 0..cols {
                let tmp = m[[row, c]];
                m[[row, c]] = m[[best, c]];
                m[[best, c]] = tmp;
            }
        }
        let pivot = m[[row, col]];
        for r in row + 1..rows {
            let factor = m[[r, col]] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for c in col..cols {
                let sub = factor * m[[row, c]];
                m[[r, c]] -= sub;
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, commutator, random, trace, DensityOperator, ZERO};
    use ndarray::array;

    fn pauli_jumps(which: &[usize]) -> Vec<HermitianOperator> {
        let one = c64(1.0, 0.0);
        let ps = [
            array![[ZERO, one], [one, ZERO]],
            array![[ZERO, c64(0.0, -1.0)], [c64(0.0, 1.0), ZERO]],
            array![[one, ZERO], [ZERO, -one]],
        ];
        which
            .iter()
            .map(|&k| HermitianOperator::new(ps[k].clone()).unwrap())
            .collect()
    }

    #[test]
    fn dephasing_commutant_is_diagonal_algebra() {
        let basis = CommutantBasis::from_jumps(2, &pauli_jumps(&[2])).unwrap();
        assert_eq!(basis.rank(), 2);
        for b in basis.basis() {
            assert!(b[[0, 1]].norm() < 1e-10);
            assert!(b[[1, 0]].norm() < 1e-10);
        }
        let sx = array![[ZERO, c64(1.0, 0.0)], [c64(1.0, 0.0), ZERO]];
        let out = basis.conditional_expectation(&sx).unwrap();
        assert!(norm_fro(&out) < 1e-10);
    }

    #[test]
    fn ergodic_commutant_is_trivial() {
        let basis = CommutantBasis::from_jumps(2, &pauli_jumps(&[0, 1, 2])).unwrap();
        assert_eq!(basis.rank(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random::hermitian(2, &mut rng);
        let out = basis.conditional_expectation(&x).unwrap();
        let expect = identity(2).mapv(|z| z * trace(&x) / 2.0);
        assert!(norm_fro(&(&out - &expect)) < 1e-10);
    }

    #[test]
    fn empty_jump_set_gives_full_algebra() {
        let basis = CommutantBasis::from_jumps(3, &[]).unwrap();
        assert_eq!(basis.rank(), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random::hermitian(3, &mut rng);
        let out = basis.conditional_expectation(&x).unwrap();
        assert!(norm_fro(&(&out - &x)) < 1e-12);
    }

    #[test]
    fn projection_fixes_commutant_elements() {
        let jumps = pauli_jumps(&[2]);
        let basis = CommutantBasis::from_jumps(2, &jumps).unwrap();
        let x = array![[c64(0.3, 0.0), ZERO], [ZERO, c64(1.9, 0.0)]];
        let out = basis.conditional_expectation(&x).unwrap();
        assert!(norm_fro(&(&out - &x)) < 1e-12);
    }

    #[test]
    fn expectation_is_idempotent_self_adjoint_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let jumps = vec![
            HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap(),
            HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap(),
        ];
        let basis = CommutantBasis::from_jumps(4, &jumps).unwrap();
        let x = random::hermitian(4, &mut rng);
        let y = random::hermitian(4, &mut rng);
        let ex = basis.conditional_expectation(&x).unwrap();
        let eex = basis.conditional_expectation(&ex).unwrap();
        assert!(norm_fro(&(&eex - &ex)) < 1e-10);
        assert!((trace(&ex).re - trace(&x).re).abs() < 1e-12 * trace(&x).re.abs().max(1.0));
        let ey = basis.conditional_expectation(&y).unwrap();
        let lhs = hs_inner(&ex, &y).re;
        let rhs = hs_inner(&x, &ey).re;
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        // E_N(x) commutes with every jump.
        for a in &jumps {
            assert!(norm_fro(&commutator(a.matrix(), &ex)) < 1e-8);
        }
    }

    #[test]
    fn bimodule_property_on_commutant_elements() {
        let jumps = pauli_jumps(&[2]);
        let basis = CommutantBasis::from_jumps(2, &jumps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random::hermitian(2, &mut rng);
        let b = basis.basis()[0].clone();
        let c = basis.basis()[1].clone();
        let lhs = basis
            .conditional_expectation(&b.dot(&x).dot(&c))
            .unwrap();
        let rhs = b.dot(&basis.conditional_expectation(&x).unwrap()).dot(&c);
        assert!(norm_fro(&(&lhs - &rhs)) < 1e-9);
    }

    #[test]
    fn expectation_commutes_with_semigroup() {
        let jumps = pauli_jumps(&[2]);
        let gen = LindbladGenerator::build(jumps.clone()).unwrap();
        let basis = CommutantBasis::from_jumps(2, &jumps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random::hermitian(2, &mut rng);
        let t = 0.6;
        let e_x = basis.conditional_expectation(&x).unwrap();
        let t_e = gen.evolve_matrix(&e_x, t).unwrap();
        let e_t = basis
            .conditional_expectation(&gen.evolve_matrix(&x, t).unwrap())
            .unwrap();
        assert!(norm_fro(&(&t_e - &e_x)) < 1e-9);
        assert!(norm_fro(&(&e_t - &e_x)) < 1e-9);
    }

    #[test]
    fn kernel_dimension_matches_generator_zero_multiplicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let jumps = vec![
            HermitianOperator::new(random::hermitian(3, &mut rng)).unwrap(),
            HermitianOperator::new(random::hermitian(3, &mut rng)).unwrap(),
        ];
        let gen = LindbladGenerator::build(jumps.clone()).unwrap();
        let basis = CommutantBasis::from_jumps(3, &jumps).unwrap();
        assert_eq!(basis.rank(), gen.zero_multiplicity());
    }

    #[test]
    fn dephasing_limit_matches_expectation() {
        let jumps = pauli_jumps(&[2]);
        let gen = LindbladGenerator::build(jumps.clone()).unwrap();
        let basis = CommutantBasis::from_generator(&gen).unwrap();
        // ‖T_t(σ_x)‖ = e^{-4t} → vanishes at t = 10.
        let dev = check_expectation_limit(&gen, &basis, 20, 10.0, 42).unwrap();
        assert!(dev <= 1e-6);
        // Identity never deviates.
        let e_i = basis.conditional_expectation(&identity(2)).unwrap();
        assert!(norm_fro(&(&e_i - &identity(2))) < 1e-12);
    }

    #[test]
    fn random_two_jump_limit_matches_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let jumps = vec![
            HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap(),
            HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap(),
        ];
        let gen = LindbladGenerator::build(jumps.clone()).unwrap();
        let basis = CommutantBasis::from_generator(&gen).unwrap();
        let t_max = 30.0 / gen.spectral_gap().unwrap();
        let dev = check_expectation_limit(&gen, &basis, 10, t_max, 3).unwrap();
        assert!(dev <= 1e-6, "deviation {dev}");
    }

    #[test]
    fn expectation_superop_is_projector() {
        let jumps = pauli_jumps(&[2]);
        let basis = CommutantBasis::from_jumps(2, &jumps).unwrap();
        let p = basis.expectation_superop();
        let p2 = p.compose(&p).unwrap();
        assert!(norm_fro(&(p2.matrix() - p.matrix())) < 1e-10);
        // Agreement with the direct form on a state.
        let rho = DensityOperator::pure(&ndarray::array![c64(1.0, 0.0), c64(1.0, 0.0)]).unwrap();
        let via_superop = p.apply(rho.matrix()).unwrap();
        let direct = basis.conditional_expectation(rho.matrix()).unwrap();
        assert!(norm_fro(&(&via_superop - &direct)) < 1e-12);
    }
}
