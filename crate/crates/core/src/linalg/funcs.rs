//! Matrix functions, divided-difference transforms, and superoperator
//! vectorization built on the Hermitian eigensolver.

use super::{dagger, eigh, vec_col, CMat, HermitianOperator, LinalgError, Superoperator, ONE};
use ndarray::Array2;

/// Relative threshold below which two eigenvalues count as degenerate in a
/// divided difference; the limit `f'` is the correct continuous extension
/// there.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// `f(A) = U f(Λ) U†` by spectral calculus.
///
/// Fails with [`LinalgError::Domain`] if `f` is undefined (non-finite) at an
/// eigenvalue of `A`.
pub fn matrix_function(
    a: &HermitianOperator,
    f: impl Fn(f64) -> f64,
) -> Result<HermitianOperator, LinalgError> {
    let dec = a.eigh()?;
    let mut w = Vec::with_capacity(dec.values.len());
    for &lam in &dec.values {
        let y = f(lam);
        if !y.is_finite() {
            return Err(LinalgError::Domain { eigenvalue: lam });
        }
        w.push(y);
    }
    Ok(HermitianOperator::symmetrize(dec.reassemble(&w)))
}

/// Divided-difference (double operator integral) transform.
///
/// In the eigenbasis of `sigma` with eigenvalues `λ_i`, maps
/// `X_{ij} ↦ X_{ij} (f(λ_i) - f(λ_j)) / (λ_i - λ_j)`, with `f'(λ_i)` on the
/// diagonal and on near-degenerate pairs. For `f = log` this equals
/// `∫₀^∞ (σ+r)⁻¹ X (σ+r)⁻¹ dr`.
///
/// `sigma` must be positive definite (otherwise restrict to its support
/// before calling).
pub fn divided_difference_transform(
    sigma: &HermitianOperator,
    x: &HermitianOperator,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> Result<HermitianOperator, LinalgError> {
    if sigma.dim() != x.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: sigma.dim(),
            got: x.dim(),
        });
    }
    let dec = sigma.eigh()?;
    let lams = &dec.values;
    let max_abs = lams.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if lams[0] <= 0.0 {
        return Err(LinalgError::Singular {
            min_eigenvalue: lams[0],
        });
    }
    let mut w = dec.to_eigenbasis(x.matrix());
    let n = lams.len();
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (lams[i], lams[j]);
            let factor = if (li - lj).abs() <= DEGENERACY_RTOL * max_abs {
                df(0.5 * (li + lj))
            } else {
                (f(li) - f(lj)) / (li - lj)
            };
            if !factor.is_finite() {
                return Err(LinalgError::Domain { eigenvalue: li });
            }
            w[[i, j]] *= factor;
        }
    }
    Ok(HermitianOperator::symmetrize(dec.from_eigenbasis(&w)))
}

/// [`divided_difference_transform`] specialized to `f = ln`.
pub fn log_transform(
    sigma: &HermitianOperator,
    x: &HermitianOperator,
) -> Result<HermitianOperator, LinalgError> {
    divided_difference_transform(sigma, x, f64::ln, |t| 1.0 / t)
}

/// Build the superoperator matrix of a linear map by evaluating it on the
/// matrix units. Column `i + j·n` of the result is `vec(Φ(E_ij))`.
pub fn vectorize_map(
    n: usize,
    phi: impl Fn(&CMat) -> CMat,
) -> Result<Superoperator, LinalgError> {
    let mut s = CMat::zeros((n * n, n * n));
    for j in 0..n {
        for i in 0..n {
            let mut e = Array2::zeros((n, n));
            e[[i, j]] = ONE;
            let out = phi(&e);
            if out.nrows() != n || out.ncols() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    got: out.nrows(),
                });
            }
            let col = vec_col(&out);
            s.column_mut(i + j * n).assign(&col);
        }
    }
    Superoperator::from_matrix(n, s)
}

/// Choi matrix `J(Φ) = Σ_ij E_ij ⊗ Φ(E_ij)`.
///
/// Errors with [`LinalgError::NonHermitianChoi`] when the map is not
/// Hermiticity-preserving, rather than silently symmetrizing.
pub fn choi_matrix(s: &Superoperator) -> Result<HermitianOperator, LinalgError> {
    let n = s.dim();
    let mut j_mat = CMat::zeros((n * n, n * n));
    for i in 0..n {
        for j in 0..n {
            let mut e = Array2::zeros((n, n));
            e[[i, j]] = ONE;
            let out = s.apply(&e)?;
            // Block (i, j) of the Choi matrix is Φ(E_ij).
            for a in 0..n {
                for b in 0..n {
                    j_mat[[i * n + a, j * n + b]] = out[[a, b]];
                }
            }
        }
    }
    let dev = super::hermiticity_deviation(&j_mat);
    if dev > 1e-9 {
        return Err(LinalgError::NonHermitianChoi { deviation: dev });
    }
    Ok(HermitianOperator::symmetrize(j_mat))
}

/// Complete positivity test: Choi eigenvalues all at least `-1e-9` relative
/// to the largest one.
pub fn is_completely_positive(s: &Superoperator) -> Result<bool, LinalgError> {
    let choi = choi_matrix(s)?;
    let evs = choi.eigenvalues()?;
    let scale = evs.iter().map(|v| v.abs()).fold(1.0, f64::max);
    Ok(evs[0] >= -1e-9 * scale)
}

/// Adjoint of a superoperator with respect to the Hilbert-Schmidt inner
/// product (conjugate transpose of its matrix).
pub fn superop_adjoint(s: &Superoperator) -> Superoperator {
    Superoperator::from_matrix(s.dim(), dagger(s.matrix())).expect("same shape")
}

/// Unitary exponential `e^A` of an anti-Hermitian matrix, via the Hermitian
/// eigendecomposition of `iA`.
pub fn exp_anti_hermitian(a: &CMat) -> Result<CMat, LinalgError> {
    let h = a.mapv(|z| num_complex::Complex64::new(0.0, 1.0) * z);
    let dec = eigh(&h)?;
    Ok(dec.function_complex(|lam| num_complex::Complex64::from_polar(1.0, -lam)))
}

/// Exponential `e^{tS}` of a Hermitian superoperator via its spectral
/// decomposition.
pub fn superop_exp_hermitian(s: &Superoperator, t: f64) -> Result<Superoperator, LinalgError> {
    let dec = eigh(s.matrix())?;
    let m = dec.function(|lam| (t * lam).exp());
    Superoperator::from_matrix(s.dim(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, commutator, identity, kron, norm_fro, random, trace, ZERO};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sigma_x() -> CMat {
        array![[ZERO, ONE], [ONE, ZERO]]
    }

    fn sigma_z() -> CMat {
        array![[ONE, ZERO], [ZERO, c64(-1.0, 0.0)]]
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = HermitianOperator::new(CMat::zeros((3, 3))).unwrap();
        let e = matrix_function(&z, f64::exp).unwrap();
        assert!(norm_fro(&(e.matrix() - &identity(3))) < 1e-14);
    }

    #[test]
    fn log_of_diagonal() {
        let a = HermitianOperator::new(array![
            [ONE, ZERO],
            [ZERO, c64(std::f64::consts::E, 0.0)]
        ])
        .unwrap();
        let l = matrix_function(&a, f64::ln).unwrap();
        assert!(l.matrix()[[0, 0]].norm() < 1e-14);
        assert!((l.matrix()[[1, 1]].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_function_matches_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = HermitianOperator::new(random::hermitian(6, &mut rng)).unwrap();
        let sq = matrix_function(&a, |x| x * x).unwrap();
        let direct = a.matrix().dot(a.matrix());
        assert!(norm_fro(&(sq.matrix() - &direct)) < 1e-10 * norm_fro(&direct).max(1.0));
    }

    #[test]
    fn log_undefined_on_singular_input() {
        let a = HermitianOperator::new(array![[ONE, ZERO], [ZERO, ZERO]]).unwrap();
        match matrix_function(&a, f64::ln) {
            Err(LinalgError::Domain { eigenvalue }) => assert!(eigenvalue.abs() < 1e-14),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn divided_difference_at_maximally_mixed_scales_by_n() {
        // σ = I/n: divided difference of log at (1/n, 1/n) is n.
        let n = 3;
        let sigma = HermitianOperator::new(identity(n).mapv(|z| z / n as f64)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = HermitianOperator::new(random::hermitian(n, &mut rng)).unwrap();
        let out = log_transform(&sigma, &x).unwrap();
        let expect = x.matrix().mapv(|z| z * n as f64);
        assert!(norm_fro(&(out.matrix() - &expect)) < 1e-10);
    }

    #[test]
    fn divided_difference_off_diagonal_factor() {
        // σ = diag(1/3, 2/3), X = σ_x: off-diagonal factor 3 ln 2.
        let sigma =
            HermitianOperator::new(array![[c64(1.0 / 3.0, 0.0), ZERO], [ZERO, c64(2.0 / 3.0, 0.0)]])
                .unwrap();
        let x = HermitianOperator::new(sigma_x()).unwrap();
        let out = log_transform(&sigma, &x).unwrap();
        let expect = 3.0 * f64::ln(2.0);
        assert!((out.matrix()[[0, 1]].re - expect).abs() < 1e-12);
        assert!((out.matrix()[[1, 0]].re - expect).abs() < 1e-12);
    }

    #[test]
    fn divided_difference_matches_resolvent_quadrature() {
        // ∫₀^R (σ+r)⁻¹ X (σ+r)⁻¹ dr against the closed form, on a 3x3 case.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sigma_raw = random::density_hs(3, &mut rng);
        let sigma = sigma_raw.hermitian().clone();
        let x = HermitianOperator::new(random::hermitian(3, &mut rng)).unwrap();
        let closed = log_transform(&sigma, &x).unwrap();

        // Quadrature in the eigenbasis of σ: entry-wise
        // ∫₀^R dr /((λi+r)(λj+r)), substituted u = r/(1+r) for stability:
        // plain composite Simpson on log-spaced panels up to R = 1e6.
        let dec = sigma.eigh().unwrap();
        let w = dec.to_eigenbasis(x.matrix());
        let lams = dec.values.clone();
        let mut acc = CMat::zeros((3, 3));
        let integrand = |r: f64, li: f64, lj: f64| 1.0 / ((li + r) * (lj + r));
        let mut edges = vec![0.0f64];
        let mut r = 1e-10;
        while r < 1e6 {
            edges.push(r);
            r *= 1.05;
        }
        edges.push(1e6);
        for i in 0..3 {
            for j in 0..3 {
                let mut total = 0.0;
                for pair in edges.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    let m = 0.5 * (a + b);
                    let fa = integrand(a, lams[i], lams[j]);
                    let fb = integrand(b, lams[i], lams[j]);
                    let fm = integrand(m, lams[i], lams[j]);
                    total += (b - a) / 6.0 * (fa + 4.0 * fm + fb);
                }
                acc[[i, j]] = w[[i, j]] * total;
            }
        }
        let quad = dec.from_eigenbasis(&acc);
        let diff = norm_fro(&(closed.matrix() - &quad));
        assert!(diff < 1e-4, "quadrature mismatch {diff}");
    }

    #[test]
    fn divided_difference_identity_function_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma = random::density_hs(4, &mut rng).hermitian().clone();
        let x = HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap();
        let out = divided_difference_transform(&sigma, &x, |t| t, |_| 1.0).unwrap();
        assert!(norm_fro(&(out.matrix() - x.matrix())) < 1e-11);
    }

    #[test]
    fn divided_difference_is_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sigma = random::density_hs(4, &mut rng).hermitian().clone();
        let x = HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap();
        let y = HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap();
        let jx = log_transform(&sigma, &x).unwrap();
        let jy = log_transform(&sigma, &y).unwrap();
        let lhs = trace(&y.matrix().dot(jx.matrix())).re;
        let rhs = trace(&jy.matrix().dot(x.matrix())).re;
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn vectorize_identity_map() {
        let s = vectorize_map(3, |x| x.clone()).unwrap();
        assert!(norm_fro(&(s.matrix() - &identity(9))) < 1e-14);
    }

    #[test]
    fn vectorize_conjugation_matches_kron_convention() {
        // Φ(x) = a x a† with a = σ_z: S = conj(σ_z) ⊗ σ_z.
        let a = sigma_z();
        let s = vectorize_map(2, |x| a.dot(x).dot(&dagger(&a))).unwrap();
        let expect = kron(&a.mapv(|z| z.conj()), &a);
        assert!(norm_fro(&(s.matrix() - &expect)) < 1e-14);
        // And it acts correctly.
        let x = sigma_x();
        let out = s.apply(&x).unwrap();
        let direct = a.dot(&x).dot(&dagger(&a));
        assert!(norm_fro(&(&out - &direct)) < 1e-14);
    }

    #[test]
    fn trace_channel_superoperator_has_rank_one() {
        let n = 2;
        let s = vectorize_map(n, |x| identity(n).mapv(|z| z * trace(x) / n as f64)).unwrap();
        // Rank via Gram spectrum of S†S.
        let gram = dagger(s.matrix()).dot(s.matrix());
        let evs = crate::linalg::eigvalsh(&gram).unwrap();
        let scale = evs.last().unwrap().max(1e-30);
        let rank = evs.iter().filter(|&&v| v > 1e-10 * scale).count();
        assert_eq!(rank, 1);
    }

    #[test]
    fn choi_of_identity_is_scaled_entangled_projector() {
        let n = 2;
        let s = Superoperator::identity(n);
        let choi = choi_matrix(&s).unwrap();
        // Σ E_ij ⊗ E_ij = n · |Ω⟩⟨Ω| has eigenvalues {n, 0, 0, 0}.
        let evs = choi.eigenvalues().unwrap();
        assert!((evs[3] - n as f64).abs() < 1e-12);
        assert!(evs[2].abs() < 1e-12);
        assert!(is_completely_positive(&s).unwrap());
    }

    #[test]
    fn transpose_map_is_not_cp() {
        let s = vectorize_map(2, |x| x.t().to_owned()).unwrap();
        let choi = choi_matrix(&s).unwrap();
        let evs = choi.eigenvalues().unwrap();
        assert!((evs[0] + 1.0).abs() < 1e-12, "expected eigenvalue -1");
        assert!(!is_completely_positive(&s).unwrap());
    }

    #[test]
    fn nonhermiticity_preserving_map_is_flagged() {
        // Φ(x) = σ_x x (not Hermiticity-preserving).
        let a = sigma_x();
        let s = vectorize_map(2, |x| a.dot(x)).unwrap();
        assert!(matches!(
            choi_matrix(&s),
            Err(LinalgError::NonHermitianChoi { .. })
        ));
    }

    #[test]
    fn functoriality_under_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap();
        let u = random::unitary_haar(4, &mut rng);
        let conj = HermitianOperator::symmetrize(u.dot(a.matrix()).dot(&dagger(&u)));
        let f = |x: f64| (0.3 * x).tanh();
        let lhs = matrix_function(&conj, f).unwrap();
        let rhs_inner = matrix_function(&a, f).unwrap();
        let rhs = u.dot(rhs_inner.matrix()).dot(&dagger(&u));
        assert!(norm_fro(&(lhs.matrix() - &rhs)) < 1e-10);
    }

    #[test]
    fn commutator_sanity() {
        let c = commutator(&sigma_z(), &sigma_x());
        // [σ_z, σ_x] = 2iσ_y = [[0, 2], [-2, 0]].
        assert!((c[[0, 1]] - c64(2.0, 0.0)).norm() < 1e-14);
        assert!((c[[1, 0]] - c64(-2.0, 0.0)).norm() < 1e-14);
    }
}
