//! Symmetric Lindblad generators built from self-adjoint jump operators.
//!
//! `L(x) = Σ_k (a_k² x + x a_k² - 2 a_k x a_k) = Σ_k [a_k, [a_k, x]]` is
//! positive semidefinite and self-adjoint for the trace inner product, so its
//! vectorized matrix is Hermitian and the semigroup `T_t = e^{-tL}` comes
//! from one cached eigendecomposition.

use crate::linalg::{
    self, c64, commutator, identity, kron, norm_fro, trace, unvec, vec_col, CMat, DensityOperator,
    Eigh, HermitianOperator, LinalgError, Superoperator,
};
use thiserror::Error;

/// Relative threshold separating the zero eigenspace of `L` from the gap.
const ZERO_EIG_RTOL: f64 = 1e-9;
/// Agreement tolerance between the two algebraic forms of `L`.
const FORM_TOL: f64 = 1e-12;
/// Negative-eigenvalue clamp for evolved states.
const EVOLVE_CLAMP: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LindbladError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("jump operator {index} has dimension {got}, expected {expected}")]
    JumpDimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("at least one jump operator is required")]
    NoJumps,
    #[error("semigroup is defined for t >= 0, got {0}")]
    NegativeTime(f64),
    #[error("generator is zero up to tolerance (central jumps); no spectral gap")]
    DegenerateGenerator,
    #[error("explicit and double-commutator forms disagree by {deviation:.3e}")]
    FormMismatch { deviation: f64 },
}

/// A symmetric Lindblad generator with its cached vectorization and spectrum.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    dim: usize,
    jumps: Vec<HermitianOperator>,
    superop: Superoperator,
    spectral: Eigh,
    gap: Option<f64>,
    zero_multiplicity: usize,
}

impl LindbladGenerator {
    /// Build from self-adjoint jumps; computes and caches the superoperator
    /// and its eigendecomposition.
    pub fn build(jumps: Vec<HermitianOperator>) -> Result<Self, LindbladError> {
        let first = jumps.first().ok_or(LindbladError::NoJumps)?;
        let dim = first.dim();
        for (index, j) in jumps.iter().enumerate() {
            if j.dim() != dim {
                return Err(LindbladError::JumpDimensionMismatch {
                    index,
                    expected: dim,
                    got: j.dim(),
                });
            }
        }

        // vec(L x) = Σ_k [ I⊗a² + (a²)ᵀ⊗I - 2 aᵀ⊗a ] vec(x).
        let mut s = CMat::zeros((dim * dim, dim * dim));
        let eye = identity(dim);
        for j in &jumps {
            let a = j.matrix();
            let a2 = a.dot(a);
            let at = a.t().to_owned();
            let a2t = a2.t().to_owned();
            s = s + kron(&eye, &a2) + kron(&a2t, &eye) - kron(&at, &a).mapv(|z| 2.0 * z);
        }
        let superop = Superoperator::from_matrix(dim, s)?;

        // Cross-check the closed forms against each other and against the
        // vectorization on a deterministic probe set.
        let probe = probe_matrices(dim);
        let mut scale: f64 = 1.0;
        for j in &jumps {
            scale = scale.max(norm_fro(j.matrix()).powi(2));
        }
        let budget = scale * jumps.len() as f64;
        for x in &probe {
            let xscale = norm_fro(x).max(1.0);
            let explicit = apply_explicit(&jumps, x);
            let double = apply_double_commutator(&jumps, x);
            let dev = norm_fro(&(&explicit - &double));
            if dev > FORM_TOL * budget * xscale {
                return Err(LindbladError::FormMismatch { deviation: dev });
            }
            let via_superop = superop.apply(x)?;
            let dev2 = norm_fro(&(&explicit - &via_superop));
            if dev2 > 1e-10 * budget * xscale {
                return Err(LindbladError::FormMismatch { deviation: dev2 });
            }
        }

        let spectral = linalg::eigh(superop.matrix())?;
        let max_ev = spectral
            .values
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        let thresh = ZERO_EIG_RTOL * max_ev.max(f64::MIN_POSITIVE);
        let zero_multiplicity = spectral
            .values
            .iter()
            .filter(|&&v| v.abs() <= thresh)
            .count();
        let gap = spectral
            .values
            .iter()
            .copied()
            .filter(|&v| v > thresh)
            .fold(f64::INFINITY, f64::min);
        let gap = if gap.is_finite() { Some(gap) } else { None };

        Ok(Self {
            dim,
            jumps,
            superop,
            spectral,
            gap,
            zero_multiplicity,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jumps(&self) -> &[HermitianOperator] {
        &self.jumps
    }

    pub fn superoperator(&self) -> &Superoperator {
        &self.superop
    }

    /// Cached eigendecomposition of the vectorized generator.
    pub fn spectral(&self) -> &Eigh {
        &self.spectral
    }

    /// Apply `L` to a matrix.
    pub fn apply(&self, x: &CMat) -> Result<CMat, LindbladError> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(LindbladError::JumpDimensionMismatch {
                index: 0,
                expected: self.dim,
                got: x.nrows(),
            });
        }
        Ok(apply_explicit(&self.jumps, x))
    }

    /// The semigroup map `e^{-tS}` as a superoperator.
    pub fn evolution_superop(&self, t: f64) -> Result<Superoperator, LindbladError> {
        if t < 0.0 {
            return Err(LindbladError::NegativeTime(t));
        }
        let m = self.spectral.function(|lam| (-t * lam).exp());
        Ok(Superoperator::from_matrix(self.dim, m)?)
    }

    /// Evolve a state: `ρ_t = unvec(e^{-tS} vec ρ)`, with floating-point
    /// negativity clamped at `1e-9` and the trace renormalized.
    pub fn evolve(&self, rho: &DensityOperator, t: f64) -> Result<DensityOperator, LindbladError> {
        if t < 0.0 {
            return Err(LindbladError::NegativeTime(t));
        }
        let out = self.evolve_matrix(rho.matrix(), t)?;
        let herm = HermitianOperator::symmetrize(out);
        Ok(DensityOperator::with_clamp(herm, EVOLVE_CLAMP)?)
    }

    /// Evolve an arbitrary matrix (no state postprocessing).
    pub fn evolve_matrix(&self, x: &CMat, t: f64) -> Result<CMat, LindbladError> {
        if t < 0.0 {
            return Err(LindbladError::NegativeTime(t));
        }
        let v = vec_col(x);
        // U e^{-tΛ} U† v without forming the full map.
        let u = &self.spectral.vectors;
        let coeffs = linalg::dagger(u).dot(&v);
        let scaled = ndarray::Array1::from_iter(
            coeffs
                .iter()
                .zip(self.spectral.values.iter())
                .map(|(conj_c, &lam)| conj_c * (-t * lam).exp()),
        );
        let vt = u.dot(&scaled);
        Ok(unvec(&vt, self.dim))
    }

    /// The derivation blocks `i[a_k, x]`.
    pub fn derivation(&self, x: &CMat) -> Result<Vec<CMat>, LindbladError> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(LindbladError::JumpDimensionMismatch {
                index: 0,
                expected: self.dim,
                got: x.nrows(),
            });
        }
        Ok(self
            .jumps
            .iter()
            .map(|a| commutator(a.matrix(), x).mapv(|z| c64(0.0, 1.0) * z))
            .collect())
    }

    /// Smallest nonzero eigenvalue of the vectorized generator.
    pub fn spectral_gap(&self) -> Result<f64, LindbladError> {
        self.gap.ok_or(LindbladError::DegenerateGenerator)
    }

    /// Multiplicity of the zero eigenvalue (= dimension of the fixed-point
    /// algebra).
    pub fn zero_multiplicity(&self) -> usize {
        self.zero_multiplicity
    }

    /// Amplified generator `L ⊗ id_m` via Kronecker-lifted jumps `a_k ⊗ I_m`.
    pub fn lift_ancilla(&self, m: usize) -> Result<LindbladGenerator, LindbladError> {
        if m == 0 {
            return Err(LindbladError::JumpDimensionMismatch {
                index: 0,
                expected: 1,
                got: 0,
            });
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let eye = identity(m);
        let lifted: Vec<HermitianOperator> = self
            .jumps
            .iter()
            .map(|a| HermitianOperator::symmetrize(kron(a.matrix(), &eye)))
            .collect();
        LindbladGenerator::build(lifted)
    }
}

/// `Σ_k (a² x + x a² - 2 a x a)`.
pub fn apply_explicit(jumps: &[HermitianOperator], x: &CMat) -> CMat {
    let n = x.nrows();
    let mut out = CMat::zeros((n, n));
    for j in jumps {
        let a = j.matrix();
        let a2 = a.dot(a);
        out = out + a2.dot(x) + x.dot(&a2) - a.dot(x).dot(a).mapv(|z| 2.0 * z);
    }
    out
}

/// `Σ_k [a_k, [a_k, x]]` (equal to the explicit form; kept as an independent
/// route for cross-checks).
pub fn apply_double_commutator(jumps: &[HermitianOperator], x: &CMat) -> CMat {
    let n = x.nrows();
    let mut out = CMat::zeros((n, n));
    for j in jumps {
        let a = j.matrix();
        out = out + commutator(a, &commutator(a, x));
    }
    out
}

/// Small deterministic probe set: identity, a matrix unit, and a dense
/// complex pattern.
fn probe_matrices(n: usize) -> Vec<CMat> {
    let mut probes = vec![identity(n)];
    let mut e01 = CMat::zeros((n, n));
    e01[[0, 1.min(n - 1)]] = c64(1.0, 0.0);
    probes.push(e01);
    probes.push(CMat::from_shape_fn((n, n), |(i, j)| {
        c64(
            ((i * 7 + j * 3 + 1) % 5) as f64 - 2.0,
            ((i * 2 + j * 11) % 7) as f64 - 3.0,
        )
    }));
    probes
}

/// Dirichlet form `tr(x L(x)) = Σ_k ‖[a_k, x]‖²_HS` for Hermitian `x`.
pub fn dirichlet_form(
    gen: &LindbladGenerator,
    x: &HermitianOperator,
) -> Result<f64, LindbladError> {
    let lx = gen.apply(x.matrix())?;
    Ok(trace(&x.matrix().dot(&lx)).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dagger, is_completely_positive, random, ZERO};
    use ndarray::array;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli() -> [CMat; 3] {
        let one = Complex64::new(1.0, 0.0);
        [
            array![[ZERO, one], [one, ZERO]],
            array![[ZERO, c64(0.0, -1.0)], [c64(0.0, 1.0), ZERO]],
            array![[one, ZERO], [ZERO, -one]],
        ]
    }

    fn dephasing() -> LindbladGenerator {
        let [_, _, sz] = pauli();
        LindbladGenerator::build(vec![HermitianOperator::new(sz).unwrap()]).unwrap()
    }

    fn plus_state() -> DensityOperator {
        let psi = ndarray::array![c64(1.0, 0.0), c64(1.0, 0.0)];
        DensityOperator::pure(&psi).unwrap()
    }

    #[test]
    fn dephasing_acts_on_sigma_x() {
        // σ_z² σ_x + σ_x σ_z² - 2 σ_z σ_x σ_z = σ_x + σ_x + 2σ_x = 4σ_x.
        let gen = dephasing();
        let [sx, _, _] = pauli();
        let out = gen.apply(&sx).unwrap();
        assert!(norm_fro(&(&out - &sx.mapv(|z| 4.0 * z))) < 1e-13);
    }

    #[test]
    fn diagonal_states_are_fixed_points_of_dephasing() {
        let gen = dephasing();
        let p = 0.3;
        let rho = array![[c64(p, 0.0), ZERO], [ZERO, c64(1.0 - p, 0.0)]];
        let out = gen.apply(&rho).unwrap();
        assert!(norm_fro(&out) < 1e-14);
    }

    #[test]
    fn three_pauli_generator_matches_double_commutator_sum() {
        let jumps: Vec<HermitianOperator> = pauli()
            .into_iter()
            .map(|p| HermitianOperator::new(p).unwrap())
            .collect();
        let gen = LindbladGenerator::build(jumps.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let x = random::hermitian(2, &mut rng);
            let via_gen = gen.apply(&x).unwrap();
            let brute = apply_double_commutator(&jumps, &x);
            assert!(norm_fro(&(&via_gen - &brute)) < 1e-12);
        }
        // Traceless part is triply degenerate: L(σ_j) = 8 σ_j for each Pauli.
        for p in pauli() {
            let out = gen.apply(&p).unwrap();
            assert!(norm_fro(&(&out - &p.mapv(|z| 8.0 * z))) < 1e-12);
        }
    }

    #[test]
    fn spectral_gap_of_dephasing_is_four() {
        // Superoperator spectrum by brute force is {0, 0, 4, 4}.
        let gen = dephasing();
        let evs = &gen.spectral().values;
        let expect = [0.0, 0.0, 4.0, 4.0];
        for (v, e) in evs.iter().zip(expect.iter()) {
            assert!((v - e).abs() < 1e-12);
        }
        assert!((gen.spectral_gap().unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(gen.zero_multiplicity(), 2);
    }

    #[test]
    fn three_pauli_gap_is_triply_degenerate() {
        let jumps: Vec<HermitianOperator> = pauli()
            .into_iter()
            .map(|p| HermitianOperator::new(p).unwrap())
            .collect();
        let gen = LindbladGenerator::build(jumps).unwrap();
        let evs = &gen.spectral().values;
        assert!(evs[0].abs() < 1e-12);
        for k in 1..4 {
            assert!((evs[k] - 8.0).abs() < 1e-11);
        }
    }

    #[test]
    fn central_jump_has_no_gap() {
        let gen =
            LindbladGenerator::build(vec![HermitianOperator::new(identity(2)).unwrap()]).unwrap();
        assert!(matches!(
            gen.spectral_gap(),
            Err(LindbladError::DegenerateGenerator)
        ));
    }

    #[test]
    fn evolve_at_time_zero_is_identity() {
        let gen = dephasing();
        let rho = plus_state();
        let out = gen.evolve(&rho, 0.0).unwrap();
        assert!(norm_fro(&(out.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn evolve_rejects_negative_time() {
        let gen = dephasing();
        assert!(matches!(
            gen.evolve(&plus_state(), -0.1),
            Err(LindbladError::NegativeTime(_))
        ));
    }

    #[test]
    fn dephasing_off_diagonals_decay_at_superoperator_rate() {
        // ρ01(t) = ρ01(0) e^{-ct} with c = 4 read off the superoperator
        // spectrum.
        let gen = dephasing();
        let rho = plus_state();
        let t = 0.37;
        let out = gen.evolve(&rho, t).unwrap();
        let expect = 0.5 * (-4.0 * t).exp();
        assert!((out.matrix()[[0, 1]].re - expect).abs() < 1e-12);
    }

    #[test]
    fn semigroup_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let jumps = vec![
            HermitianOperator::new(random::hermitian(3, &mut rng)).unwrap(),
            HermitianOperator::new(random::hermitian(3, &mut rng)).unwrap(),
        ];
        let gen = LindbladGenerator::build(jumps).unwrap();
        let rho = random::density_hs(3, &mut rng);
        let (t, s) = (0.4, 0.9);
        let a = gen.evolve(&gen.evolve(&rho, t).unwrap(), s).unwrap();
        let b = gen.evolve(&rho, t + s).unwrap();
        assert!(norm_fro(&(a.matrix() - b.matrix())) < 1e-9);
    }

    #[test]
    fn semigroup_is_cp_unital_trace_preserving_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let jumps = vec![HermitianOperator::new(random::hermitian(2, &mut rng)).unwrap()];
        let gen = LindbladGenerator::build(jumps).unwrap();
        let tt = gen.evolution_superop(0.3).unwrap();
        assert!(is_completely_positive(&tt).unwrap());
        // Unital: T_t(I) = I.
        let ti = tt.apply(&identity(2)).unwrap();
        assert!(norm_fro(&(&ti - &identity(2))) < 1e-11);
        // Trace preserving and self-adjoint on random pairs.
        let x = random::hermitian(2, &mut rng);
        let y = random::hermitian(2, &mut rng);
        let tx = tt.apply(&x).unwrap();
        let ty = tt.apply(&y).unwrap();
        assert!((trace(&tx).re - trace(&x).re).abs() < 1e-11);
        let lhs = trace(&dagger(&tx).dot(&y)).re;
        let rhs = trace(&dagger(&x).dot(&ty)).re;
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn derivation_pauli_algebra() {
        // δ(σ_x) for jump σ_z: i[σ_z, σ_x] = i · 2iσ_y = -2σ_y.
        let gen = dephasing();
        let [sx, sy, _] = pauli();
        let blocks = gen.derivation(&sx).unwrap();
        assert_eq!(blocks.len(), 1);
        assert!(norm_fro(&(&blocks[0] + &sy.mapv(|z| 2.0 * z))) < 1e-13);
    }

    #[test]
    fn derivation_vanishes_on_commutant() {
        let gen = dephasing();
        let x = array![[c64(0.7, 0.0), ZERO], [ZERO, c64(0.1, 0.0)]];
        let blocks = gen.derivation(&x).unwrap();
        assert!(norm_fro(&blocks[0]) < 1e-14);
    }

    #[test]
    fn derivation_satisfies_leibniz_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let jumps = vec![
            HermitianOperator::new(random::hermitian(3, &mut rng)).unwrap(),
            HermitianOperator::new(random::hermitian(3, &mut rng)).unwrap(),
        ];
        let gen = LindbladGenerator::build(jumps).unwrap();
        let x = random::hermitian(3, &mut rng);
        let y = random::hermitian(3, &mut rng);
        let xy = x.dot(&y);
        let dxy = gen.derivation(&xy).unwrap();
        let dx = gen.derivation(&x).unwrap();
        let dy = gen.derivation(&y).unwrap();
        let scale = (norm_fro(&x) * norm_fro(&y)).max(1.0);
        for k in 0..dxy.len() {
            let rhs = dx[k].dot(&y) + x.dot(&dy[k]);
            assert!(norm_fro(&(&dxy[k] - &rhs)) < 1e-12 * scale * 10.0);
        }
    }

    #[test]
    fn dirichlet_form_matches_commutator_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let jumps = vec![
            HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap(),
            HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap(),
        ];
        let gen = LindbladGenerator::build(jumps.clone()).unwrap();
        let x = HermitianOperator::new(random::hermitian(4, &mut rng)).unwrap();
        let lhs = dirichlet_form(&gen, &x).unwrap();
        let rhs: f64 = jumps
            .iter()
            .map(|a| norm_fro(&commutator(a.matrix(), x.matrix())).powi(2))
            .sum();
        assert!(lhs >= -1e-12);
        assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));
    }

    #[test]
    fn scaling_jumps_scales_generator_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random::hermitian(3, &mut rng);
        let c = 1.7;
        let g1 =
            LindbladGenerator::build(vec![HermitianOperator::new(a.clone()).unwrap()]).unwrap();
        let g2 = LindbladGenerator::build(vec![HermitianOperator::new(a.mapv(|z| c * z)).unwrap()])
            .unwrap();
        let gap1 = g1.spectral_gap().unwrap();
        let gap2 = g2.spectral_gap().unwrap();
        assert!((gap2 - c * c * gap1).abs() < 1e-9 * gap2.max(1.0));
    }

    #[test]
    fn ancilla_lift_acts_trivially_on_environment() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let gen = dephasing();
        let lifted = gen.lift_ancilla(3).unwrap();
        assert_eq!(lifted.dim(), 6);
        let rho = random::density_hs(2, &mut rng);
        let tau = random::density_hs(3, &mut rng);
        let product = kron(rho.matrix(), tau.matrix());
        let rho_prod = DensityOperator::from_matrix(product).unwrap();
        let t = 0.8;
        let evolved = lifted.evolve(&rho_prod, t).unwrap();
        let expect = kron(gen.evolve(&rho, t).unwrap().matrix(), tau.matrix());
        assert!(norm_fro(&(evolved.matrix() - &expect)) < 1e-10);
        // Gap is unchanged by amplification.
        assert!((lifted.spectral_gap().unwrap() - gen.spectral_gap().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn jump_dimension_mismatch_is_rejected() {
        let a = HermitianOperator::new(identity(2)).unwrap();
        let b = HermitianOperator::new(identity(3)).unwrap();
        assert!(matches!(
            LindbladGenerator::build(vec![a, b]),
            Err(LindbladError::JumpDimensionMismatch { .. })
        ));
    }
}
