//! Relative entropy, Fisher information (entropy production), decay curves,
//! and the de Bruijn consistency residual.
//!
//! Conventions: natural logarithm throughout; `+∞` is the IEEE infinity,
//! produced only by an explicit support check and never by log arithmetic.

use crate::exec;
use crate::fixedpoint::{CommutantBasis, FixedPointError};
use crate::linalg::{
    self, log_transform, matrix_function, trace, DensityOperator, HermitianOperator, LinalgError,
};
use crate::lindblad::{LindbladError, LindbladGenerator};
use thiserror::Error;

/// Eigenvalue threshold defining the support of a state.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Kernel threshold for the reference state's support projector.
const KERNEL_TOL: f64 = 1e-12;
/// Mixing weight for regularizing singular states before logarithms.
pub const REG_EPSILON: f64 = 1e-10;
/// Agreement tolerance between the two Fisher information formulas.
const FISHER_FORM_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "Fisher formulas disagree: trace form {trace_form:.9e} vs divided-difference form {dd_form:.9e}"
    )]
    FisherFormMismatch { trace_form: f64, dd_form: f64 },
    #[error("time grid must be ascending and start at 0")]
    BadTimeGrid,
    #[error("finite-difference step {h:.3e} outside [{min:.0e}, {max:.0e}]")]
    StepOutOfRange { h: f64, min: f64, max: f64 },
    #[error("de Bruijn residual needs t - h >= 0, got t = {t}, h = {h}")]
    NegativeWindow { t: f64, h: f64 },
}

/// Quantum relative entropy `D(ρ‖σ) = tr(ρ ln ρ - ρ ln σ)` on the support of
/// `σ`; `f64::INFINITY` when `supp(ρ) ⊄ supp(σ)`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64, EntropyError> {
    if rho.dim() != sigma.dim() {
        return Err(EntropyError::DimensionMismatch {
            expected: sigma.dim(),
            got: rho.dim(),
        });
    }
    let sig = sigma.hermitian().eigh()?;

    // Mass of ρ on the kernel of σ.
    let rho_in_sigma_basis = sig.to_eigenbasis(rho.matrix());
    let mut kernel_mass = 0.0;
    for (j, &lam) in sig.values.iter().enumerate() {
        if lam <= KERNEL_TOL {
            kernel_mass += rho_in_sigma_basis[[j, j]].re;
        }
    }
    if kernel_mass > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }

    // tr(ρ ln ρ): sum over the spectrum of ρ with 0 ln 0 = 0.
    let rho_dec = rho.hermitian().eigh()?;
    let mut tr_rho_ln_rho = 0.0;
    for &lam in &rho_dec.values {
        if lam > KERNEL_TOL {
            tr_rho_ln_rho += lam * lam.ln();
        }
    }

    // tr(ρ ln σ) restricted to the support of σ.
    let mut tr_rho_ln_sigma = 0.0;
    for (j, &lam) in sig.values.iter().enumerate() {
        if lam > KERNEL_TOL {
            tr_rho_ln_sigma += rho_in_sigma_basis[[j, j]].re * lam.ln();
        }
    }

    let d = tr_rho_ln_rho - tr_rho_ln_sigma;
    // Clamp roundoff-negative values; D >= 0 by Klein's inequality.
    if d < 0.0 && d > -1e-9 {
        return Ok(0.0);
    }
    Ok(d)
}

/// Fisher information with provenance flags.
#[derive(Debug, Clone, Copy)]
pub struct FisherInfo {
    /// `tr(L(ρ) ln ρ)`.
    pub value: f64,
    /// Whether the state was mixed with `ε I/n` before taking logarithms.
    pub regularized: bool,
    /// Deviation between the trace form and the divided-difference form.
    pub forms_deviation: f64,
}

/// Entropy production `I(ρ) = tr(L(ρ) ln ρ)`, cross-checked against
/// `Σ_k tr(i[a_k, ρ] · J^ln_ρ(i[a_k, ρ]))`.
///
/// Singular states are regularized as `(1-ε)ρ + ε I/n` with `ε = 1e-10` and
/// the result is flagged.
pub fn entropy_production(
    gen: &LindbladGenerator,
    rho: &DensityOperator,
) -> Result<FisherInfo, EntropyError> {
    if rho.dim() != gen.dim() {
        return Err(EntropyError::DimensionMismatch {
            expected: gen.dim(),
            got: rho.dim(),
        });
    }
    let evs = rho.hermitian().eigenvalues()?;
    let regularized = evs[0] < SUPPORT_TOL;
    let work = if regularized {
        let n = rho.dim();
        let mixed = rho.matrix().mapv(|z| z * (1.0 - REG_EPSILON))
            + linalg::identity(n).mapv(|z| z * (REG_EPSILON / n as f64));
        DensityOperator::from_matrix(mixed)?
    } else {
        rho.clone()
    };

    let herm = work.hermitian();
    let log_rho = matrix_function(herm, f64::ln)?;
    let l_rho = gen.apply(work.matrix())?;
    let trace_form = trace(&l_rho.dot(log_rho.matrix())).re;

    let mut dd_form = 0.0;
    for block in gen.derivation(work.matrix())? {
        let b = HermitianOperator::symmetrize(block);
        let transformed = log_transform(herm, &b)?;
        dd_form += trace(&b.matrix().dot(transformed.matrix())).re;
    }

    let forms_deviation = (trace_form - dd_form).abs();
    if forms_deviation > FISHER_FORM_TOL * trace_form.abs().max(1.0) {
        return Err(EntropyError::FisherFormMismatch { trace_form, dd_form });
    }
    Ok(FisherInfo {
        value: trace_form,
        regularized,
        forms_deviation,
    })
}

/// Sampled trajectory of `D(T_t ρ ‖ E_N ρ)` and `I(T_t ρ)`.
#[derive(Debug, Clone)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub entropies: Vec<f64>,
    pub fisher: Vec<f64>,
}

/// Evaluate the decay curve on an ascending grid starting at 0. Grid points
/// are independent given the cached spectral data, so they run through the
/// execution strategy.
pub fn decay_curve(
    gen: &LindbladGenerator,
    basis: &CommutantBasis,
    rho: &DensityOperator,
    t_grid: &[f64],
) -> Result<DecayCurve, EntropyError> {
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EntropyError::BadTimeGrid);
    }
    let sigma = expectation_state(basis, rho)?;
    let points = exec::map_slice(t_grid, |&t| -> Result<(f64, f64), EntropyError> {
        let rho_t = gen.evolve(rho, t)?;
        let d = relative_entropy(&rho_t, &sigma)?;
        let fisher = entropy_production(gen, &rho_t)?.value;
        Ok((d, fisher))
    });
    let mut entropies = Vec::with_capacity(t_grid.len());
    let mut fisher = Vec::with_capacity(t_grid.len());
    for p in points {
        let (d, i) = p?;
        entropies.push(d);
        fisher.push(i);
    }
    Ok(DecayCurve {
        times: t_grid.to_vec(),
        entropies,
        fisher,
    })
}

/// `E_N(ρ)` as a state.
pub fn expectation_state(
    basis: &CommutantBasis,
    rho: &DensityOperator,
) -> Result<DensityOperator, EntropyError> {
    let projected = basis.conditional_expectation(rho.matrix())?;
    let herm = HermitianOperator::symmetrize(projected);
    Ok(DensityOperator::with_clamp(herm, 1e-9)?)
}

/// `|(D(t+h) - D(t-h)) / 2h + I(T_t ρ)|`: central-difference check that the
/// entropy dissipates at exactly the Fisher rate. Second order in `h`.
pub fn de_bruijn_residual(
    gen: &LindbladGenerator,
    basis: &CommutantBasis,
    rho: &DensityOperator,
    t: f64,
    h: f64,
) -> Result<f64, EntropyError> {
    const H_MIN: f64 = 1e-5;
    const H_MAX: f64 = 1e-3;
    if !(H_MIN..=H_MAX).contains(&h) {
        return Err(EntropyError::StepOutOfRange {
            h,
            min: H_MIN,
            max: H_MAX,
        });
    }
    if t - h < 0.0 {
        return Err(EntropyError::NegativeWindow { t, h });
    }
    let sigma = expectation_state(basis, rho)?;
    let d_plus = relative_entropy(&gen.evolve(rho, t + h)?, &sigma)?;
    let d_minus = relative_entropy(&gen.evolve(rho, t - h)?, &sigma)?;
    let fisher = entropy_production(gen, &gen.evolve(rho, t)?)?.value;
    Ok(((d_plus - d_minus) / (2.0 * h) + fisher).abs())
}
