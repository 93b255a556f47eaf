//! Numerical MLSI constant estimation.
//!
//! The constant is estimated as the smallest observed ratio `I(ρ) / 2D(ρ‖E_N ρ)`
//! over states of the ancilla-extended system (convention: `2λD ≤ I`). The
//! estimate is an upper bound on the true constant; consistency against the
//! geometric lower bound is checked by the `bound` module.
//!
//! Sampling mixes Hilbert-Schmidt full-rank states, random pure states,
//! near-fixed-point perturbations, and a deterministic linearization probe
//! along the spectral-gap eigenvector (which pins the estimate at or below
//! the gap). The best candidates are refined by normalized-gradient descent
//! on a square-root parameterization `ρ = GG†/tr(GG†)`, so iterates stay in
//! the state simplex by construction.

use crate::entropy::{self, EntropyError};
use crate::exec;
use crate::fixedpoint::{CommutantBasis, FixedPointError};
use crate::linalg::{
    self, norm_fro, trace, unvec, CMat, DensityOperator, HermitianOperator, LinalgError,
};
use crate::lindblad::{LindbladError, LindbladGenerator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// States with `D(ρ‖E_N ρ)` below this are rejected as ratio inputs.
pub const NEAR_FIXED_POINT_TOL: f64 = 1e-12;
/// Slack allowed on the `lambda_est ≤ gap` sanity invariant.
const GAP_SLACK: f64 = 0.05;

#[derive(Debug, Error)]
pub enum MlsiError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("state is numerically a fixed point (D = {d:.3e}); ratio ill-conditioned")]
    NearFixedPoint { d: f64 },
    #[error("ancilla dimension must be at least 1")]
    BadAncilla,
    #[error("estimate {lambda_est} exceeds spectral gap {gap} beyond 5% slack")]
    GapSanity { lambda_est: f64, gap: f64 },
}

/// Convention marker for reported constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `2λ D ≤ I`, i.e. `λ = inf I/(2D)`.
    TwoD,
    /// `λ D ≤ I`, i.e. `λ = inf I/D`.
    OneD,
}

impl Convention {
    pub fn label(&self) -> &'static str {
        match self {
            Convention::TwoD => "2D",
            Convention::OneD => "D",
        }
    }
}

/// Result of [`estimate_mlsi`].
#[derive(Debug, Clone)]
pub struct MlsiEstimate {
    /// `inf I/(2D)` over everything sampled and refined.
    pub lambda_est: f64,
    pub ancilla_dim: usize,
    pub argmin_state: DensityOperator,
    pub samples_used: usize,
    pub optimizer_iterations: usize,
    pub converged: bool,
    pub convention: Convention,
}

impl MlsiEstimate {
    /// The same constant in the factor-free convention `λD ≤ I`.
    pub fn lambda_factor_free(&self) -> f64 {
        2.0 * self.lambda_est
    }
}

/// `I(ρ) / 2D(ρ‖E_N ρ)`.
pub fn mlsi_ratio(
    gen: &LindbladGenerator,
    basis: &CommutantBasis,
    rho: &DensityOperator,
) -> Result<f64, MlsiError> {
    let sigma = entropy::expectation_state(basis, rho)?;
    let d = entropy::relative_entropy(rho, &sigma)?;
    if !d.is_finite() || d <= NEAR_FIXED_POINT_TOL {
        return Err(MlsiError::NearFixedPoint { d });
    }
    let fisher = entropy::entropy_production(gen, rho)?.value;
    Ok(fisher / (2.0 * d))
}

/// Estimate the MLSI constant of `L ⊗ id_m` by sampling and local descent.
/// Deterministic for a fixed seed; samples evaluate in parallel with derived
/// per-sample seeds and reduce by an associative minimum.
pub fn estimate_mlsi(
    gen: &LindbladGenerator,
    ancilla_dim: usize,
    n_samples: usize,
    opt_budget: usize,
    seed: u64,
) -> Result<MlsiEstimate, MlsiError> {
    if ancilla_dim == 0 {
        return Err(MlsiError::BadAncilla);
    }
    let lifted = gen.lift_ancilla(ancilla_dim)?;
    let basis = CommutantBasis::from_generator(&lifted)?;
    let d = lifted.dim();

    // Deterministic linearization probes along the gap eigenvector keep the
    // estimate at or below the spectral gap regardless of sampling luck.
    let mut candidates: Vec<DensityOperator> = gap_probes(&lifted, &basis);
    let probe_count = candidates.len();

    let sampled: Vec<Option<DensityOperator>> = exec::map_indexed(n_samples, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9 + k as u64 * 0x1000_0000_1b3));
        sample_state(&basis, d, k, n_samples, &mut rng)
    });
    candidates.extend(sampled.into_iter().flatten());
    let samples_used = candidates.len() - probe_count;

    // Score everything in parallel.
    let scored: Vec<Option<f64>> = exec::map_slice(&candidates, |rho| {
        mlsi_ratio(&lifted, &basis, rho).ok()
    });
    let mut ranked: Vec<(f64, usize)> = scored
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|v| (v, i)))
        .collect();
    ranked.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));

    let (mut best_ratio, mut best_state) = match ranked.first() {
        Some(&(v, i)) => (v, candidates[i].clone()),
        None => {
            return Err(MlsiError::NearFixedPoint { d: 0.0 });
        }
    };

    // Refine the leading candidates by descent.
    let mut iterations = 0usize;
    let mut converged = false;
    let refine_count = ranked.len().min(3);
    if opt_budget > 0 {
        let share = opt_budget / refine_count.max(1);
        for &(_, idx) in ranked.iter().take(refine_count) {
            let outcome = descend(&lifted, &basis, &candidates[idx], share)?;
            iterations += outcome.iterations;
            converged |= outcome.converged;
            if outcome.ratio < best_ratio {
                best_ratio = outcome.ratio;
                best_state = outcome.state;
            }
        }
    }

    if let Ok(gap) = lifted.spectral_gap() {
        if best_ratio > gap * (1.0 + GAP_SLACK) {
            return Err(MlsiError::GapSanity {
                lambda_est: best_ratio,
                gap,
            });
        }
    }

    Ok(MlsiEstimate {
        lambda_est: best_ratio,
        ancilla_dim,
        argmin_state: best_state,
        samples_used,
        optimizer_iterations: iterations,
        converged,
        convention: Convention::TwoD,
    })
}

/// Decay verification report.
#[derive(Debug, Clone)]
pub struct DecayCheck {
    /// Max of `D(t) - e^{-2λt} D(0)` over states and times (exponent per the
    /// 2D convention).
    pub max_violation: f64,
    /// State index and time attaining it, when positive.
    pub witness: Option<(usize, f64)>,
    pub exponent_convention: Convention,
}

/// Check `D(T_t ρ ‖ E_N ρ) ≤ e^{-2λt} D(ρ ‖ E_N ρ)` over a state list.
/// Violations are data, not errors.
pub fn verify_decay(
    gen: &LindbladGenerator,
    basis: &CommutantBasis,
    lambda: f64,
    states: &[DensityOperator],
    t_grid: &[f64],
) -> Result<DecayCheck, MlsiError> {
    let per_state: Vec<Result<(f64, f64), MlsiError>> = exec::map_slice(states, |rho| {
        let sigma = entropy::expectation_state(basis, rho)?;
        let d0 = entropy::relative_entropy(rho, &sigma)?;
        let mut worst = f64::NEG_INFINITY;
        let mut worst_t = 0.0;
        for &t in t_grid {
            let dt = entropy::relative_entropy(&gen.evolve(rho, t)?, &sigma)?;
            let violation = dt - (-2.0 * lambda * t).exp() * d0;
            if violation > worst {
                worst = violation;
                worst_t = t;
            }
        }
        Ok((worst, worst_t))
    });

    let mut max_violation = f64::NEG_INFINITY;
    let mut witness = None;
    for (idx, res) in per_state.into_iter().enumerate() {
        let (v, t) = res?;
        if v > max_violation {
            max_violation = v;
            witness = if v > 0.0 { Some((idx, t)) } else { None };
        }
    }
    Ok(DecayCheck {
        max_violation,
        witness,
        exponent_convention: Convention::TwoD,
    })
}

/// Near-fixed-point probes along the gap eigenvector of the superoperator.
fn gap_probes(gen: &LindbladGenerator, basis: &CommutantBasis) -> Vec<DensityOperator> {
    let d = gen.dim();
    let spectral = gen.spectral();
    let scale = spectral
        .values
        .iter()
        .map(|v| v.abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    let Some(gap_idx) = spectral.values.iter().position(|&v| v > 1e-9 * scale) else {
        return Vec::new();
    };
    let x = unvec(&spectral.vectors.column(gap_idx).to_owned(), d);
    let xd = linalg::dagger(&x);
    let herm = (&x + &xd).mapv(|z| 0.5 * z);
    let anti = (&x - &xd).mapv(|z| z * linalg::c64(0.0, -0.5));
    let mut dir = if norm_fro(&herm) >= norm_fro(&anti) {
        herm
    } else {
        anti
    };
    // Remove any fixed-point component; the remainder still lies in the gap
    // eigenspace because E_N projects onto the kernel.
    if let Ok(proj) = basis.conditional_expectation(&dir) {
        dir = &dir - &proj;
    }
    let norm = norm_fro(&dir);
    if norm < 1e-12 {
        return Vec::new();
    }
    dir.mapv_inplace(|z| z / norm);

    let mut probes = Vec::new();
    for eps in [1e-3, 1e-4] {
        let mat = linalg::identity(d).mapv(|z| z / d as f64) + dir.mapv(|z| z * eps);
        if let Ok(op) = HermitianOperator::new(mat) {
            if let Ok(rho) = DensityOperator::with_clamp(op, 1e-9) {
                probes.push(rho);
            }
        }
    }
    probes
}

/// Draw one state from the sampling mixture: 50% Hilbert-Schmidt full rank,
/// 30% pure, 20% near-fixed-point perturbations.
fn sample_state<R: Rng>(
    basis: &CommutantBasis,
    d: usize,
    index: usize,
    total: usize,
    rng: &mut R,
) -> Option<DensityOperator> {
    let frac = (index as f64 + 0.5) / total.max(1) as f64;
    if frac < 0.5 {
        Some(linalg::random::density_hs(d, rng))
    } else if frac < 0.8 {
        Some(linalg::random::pure_state(d, rng))
    } else {
        let base = linalg::random::density_hs(d, rng);
        let anchor_mat = basis.conditional_expectation(base.matrix()).ok()?;
        // Keep the anchor comfortably positive.
        let anchor = anchor_mat.mapv(|z| z * 0.9)
            + linalg::identity(d).mapv(|z| z * (0.1 / d as f64));
        let mut dir = linalg::random::traceless_hermitian(d, rng);
        let proj = basis.conditional_expectation(&dir).ok()?;
        dir = &dir - &proj;
        let norm = norm_fro(&dir);
        if norm < 1e-10 {
            return Some(base);
        }
        dir.mapv_inplace(|z| z / norm);
        let floor = HermitianOperator::symmetrize(anchor.clone())
            .eigenvalues()
            .ok()?[0];
        let eps = 0.5 * floor.max(1e-6);
        let mat = anchor + dir.mapv(|z| z * eps);
        let op = HermitianOperator::symmetrize(mat);
        DensityOperator::with_clamp(op, 1e-9).ok()
    }
}

struct DescentOutcome {
    ratio: f64,
    state: DensityOperator,
    iterations: usize,
    converged: bool,
}

/// Normalized-gradient descent on `G` with `ρ = GG†/tr(GG†)`. The gradient is
/// estimated by central finite differences; normalizing the direction makes
/// the trajectory invariant under rescaling the objective, so jump rescaling
/// `a_k → c a_k` rescales the estimate exactly by `c²`.
fn descend(
    gen: &LindbladGenerator,
    basis: &CommutantBasis,
    start: &DensityOperator,
    budget: usize,
) -> Result<DescentOutcome, MlsiError> {
    let d = gen.dim();
    let dec = start.hermitian().eigh()?;
    // G0 = ρ^{1/2}, floored to keep the search in full-rank territory.
    let sqrt_vals: Vec<f64> = dec.values.iter().map(|&v| v.max(1e-12).sqrt()).collect();
    let g0 = dec.reassemble(&sqrt_vals);

    let mut params = mat_to_params(&g0);
    let mut evals_left = budget as isize;
    let eval = |p: &[f64], evals_left: &mut isize| -> f64 {
        *evals_left -= 1;
        ratio_of_params(gen, basis, p, d)
    };

    let mut current = eval(&params, &mut evals_left);
    let mut state = state_of_params(&params, d);
    let mut step = 0.05;
    let mut iterations = 0usize;
    let mut converged = false;
    let fd_step = 1e-6;

    while evals_left > 0 {
        iterations += 1;
        // Central-difference gradient.
        let mut grad = vec![0.0; params.len()];
        let mut pert = params.clone();
        for i in 0..params.len() {
            let base = params[i];
            pert[i] = base + fd_step;
            let up = eval(&pert, &mut evals_left);
            pert[i] = base - fd_step;
            let down = eval(&pert, &mut evals_left);
            pert[i] = base;
            grad[i] = (up - down) / (2.0 * fd_step);
        }
        let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 || !gnorm.is_finite() {
            converged = true;
            break;
        }
        let pnorm: f64 = params.iter().map(|p| p * p).sum::<f64>().sqrt();
        let mut accepted = false;
        for _try in 0..8 {
            let trial: Vec<f64> = params
                .iter()
                .zip(grad.iter())
                .map(|(p, g)| p - step * pnorm * g / gnorm)
                .collect();
            let value = eval(&trial, &mut evals_left);
            if value.is_finite() && value < current {
                params = trial;
                current = value;
                accepted = true;
                step = (step * 1.3).min(0.2);
                break;
            }
            step *= 0.5;
        }
        if accepted {
            state = state_of_params(&params, d);
        }
        if step < 1e-9 {
            converged = true;
            break;
        }
        if evals_left <= 0 {
            break;
        }
    }

    Ok(DescentOutcome {
        ratio: current,
        state,
        iterations,
        converged,
    })
}

fn mat_to_params(g: &CMat) -> Vec<f64> {
    let mut p = Vec::with_capacity(2 * g.len());
    for z in g.iter() {
        p.push(z.re);
        p.push(z.im);
    }
    p
}

fn params_to_mat(p: &[f64], d: usize) -> CMat {
    CMat::from_shape_fn((d, d), |(i, j)| {
        let k = 2 * (i * d + j);
        linalg::c64(p[k], p[k + 1])
    })
}

fn state_of_params(p: &[f64], d: usize) -> DensityOperator {
    let g = params_to_mat(p, d);
    let gg = g.dot(&linalg::dagger(&g));
    let tr = trace(&gg).re;
    let mat = if tr > 0.0 {
        gg.mapv(|z| z / tr)
    } else {
        linalg::identity(d).mapv(|z| z / d as f64)
    };
    DensityOperator::with_clamp(HermitianOperator::symmetrize(mat), 1e-9)
        .unwrap_or_else(|_| DensityOperator::maximally_mixed(d))
}

fn ratio_of_params(gen: &LindbladGenerator, basis: &CommutantBasis, p: &[f64], d: usize) -> f64 {
    let rho = state_of_params(p, d);
    mlsi_ratio(gen, basis, &rho).unwrap_or(f64::INFINITY)
}
