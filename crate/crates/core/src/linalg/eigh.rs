//! Hermitian eigendecomposition.
//!
//! Householder reduction to real symmetric tridiagonal form followed by
//! implicit-shift QL iteration, with the unitary transform accumulated for
//! the full decomposition. Matrices here are small (dense semigroup
//! superoperators and interval Laplacians, a few thousand rows at most), so
//! an O(n³) dense path with no external solver dependency is the right
//! trade-off.

use super::{dagger, identity, CMat, LinalgError, ONE, ZERO};
use num_complex::Complex64;

/// QL iteration cap per eigenvalue.
const MAX_QL_ITER: usize = 100;

/// Result of [`eigh`]: `A = U diag(values) U†` with ascending real values
/// and orthonormal columns in `vectors`.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    /// `U diag(w) U†` for caller-supplied spectrum `w`.
    pub fn reassemble(&self, w: &[f64]) -> CMat {
        let n = self.values.len();
        debug_assert_eq!(w.len(), n);
        let mut scaled = self.vectors.clone();
        for (j, &wj) in w.iter().enumerate() {
            scaled.column_mut(j).mapv_inplace(|z| z * wj);
        }
        scaled.dot(&dagger(&self.vectors))
    }

    /// `U diag(f(λ)) U†`.
    pub fn function(&self, f: impl Fn(f64) -> f64) -> CMat {
        let w: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        self.reassemble(&w)
    }

    /// `U diag(f(λ)) U†` for complex-valued `f` (unitary exponentials).
    pub fn function_complex(&self, f: impl Fn(f64) -> Complex64) -> CMat {
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            scaled.column_mut(j).mapv_inplace(|z| z * w);
        }
        scaled.dot(&dagger(&self.vectors))
    }

    /// Transform `x` into the eigenbasis: `U† x U`.
    pub fn to_eigenbasis(&self, x: &CMat) -> CMat {
        dagger(&self.vectors).dot(x).dot(&self.vectors)
    }

    /// Transform back from the eigenbasis: `U x U†`.
    pub fn from_eigenbasis(&self, x: &CMat) -> CMat {
        self.vectors.dot(x).dot(&dagger(&self.vectors))
    }
}

/// Eigendecomposition of a Hermitian matrix (symmetrized defensively).
pub fn eigh(a: &CMat) -> Result<Eigh, LinalgError> {
    solve(a, true).map(|(values, vectors)| Eigh {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

/// Eigenvalues only, ascending. Skips the transform accumulation.
pub fn eigvalsh(a: &CMat) -> Result<Vec<f64>, LinalgError> {
    solve(a, false).map(|(values, _)| values)
}

fn solve(a: &CMat, want_vectors: bool) -> Result<(Vec<f64>, Option<CMat>), LinalgError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| identity(0))));
    }
    let sym = (a + &dagger(a)).mapv(|z| 0.5 * z);
    let (mut d, mut e, q) = tridiagonalize(sym, want_vectors);
    let mut q = q;
    tql(&mut d, &mut e, q.as_mut())?;

    // Sort ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = q.map(|qm| {
        let mut sorted = CMat::zeros((n, n));
        for (new_col, &old_col) in order.iter().enumerate() {
            sorted.column_mut(new_col).assign(&qm.column(old_col));
        }
        sorted
    });
    Ok((values, vectors))
}

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
/// form. Returns the diagonal, the (real, nonnegative) subdiagonal padded to
/// length `n`, and, when requested, the accumulated unitary `Q` with
/// `A = Q T Q†`.
fn tridiagonalize(mut m: CMat, want_vectors: bool) -> (Vec<f64>, Vec<f64>, Option<CMat>) {
    let n = m.nrows();
    let mut q = if want_vectors { Some(identity(n)) } else { None };

    for k in 0..n.saturating_sub(2) {
        let l = n - (k + 1);
        let xnorm2: f64 = (k + 1..n).map(|i| m[[i, k]].norm_sqr()).sum();
        let xnorm = xnorm2.sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = m[[k + 1, k]];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;

        // Reflector v = x - alpha e1, chosen so |v[0]| = |x0| + ‖x‖ (no cancellation).
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| m[[i, k]]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 < f64::MIN_POSITIVE {
            continue;
        }
        let tau = 2.0 / vnorm2;

        // Rank-2 update of the trailing block: A ← A - v q† - q v†
        // with q = τ(Av) - (τ²κ/2)v, κ = v†Av.
        let mut w = vec![ZERO; l];
        for i in 0..l {
            let mut s = ZERO;
            for j in 0..l {
                s += m[[k + 1 + i, k + 1 + j]] * v[j];
            }
            w[i] = s;
        }
        let kappa: Complex64 = v.iter().zip(&w).map(|(vi, wi)| vi.conj() * wi).sum();
        let coeff = kappa * (tau * tau / 2.0);
        let qv: Vec<Complex64> = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| tau * wi - coeff * vi)
            .collect();
        for i in 0..l {
            for j in 0..l {
                let upd = v[i] * qv[j].conj() + qv[i] * v[j].conj();
                m[[k + 1 + i, k + 1 + j]] -= upd;
            }
        }

        // Column k now reduces to a single subdiagonal entry.
        m[[k + 1, k]] = alpha;
        m[[k, k + 1]] = alpha.conj();
        for i in k + 2..n {
            m[[i, k]] = ZERO;
            m[[k, i]] = ZERO;
        }

        if let Some(qm) = q.as_mut() {
            // Q ← Q · diag(I, I - τvv†)
            for r in 0..n {
                let mut u = ZERO;
                for j in 0..l {
                    u += qm[[r, k + 1 + j]] * v[j];
                }
                let tu = tau * u;
                for j in 0..l {
                    qm[[r, k + 1 + j]] -= tu * v[j].conj();
                }
            }
        }
    }

    // Phase-rotate so the subdiagonal is real nonnegative.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut dk = ONE;
    let mut phases = vec![ONE; n];
    for k in 0..n {
        d[k] = m[[k, k]].re;
        phases[k] = dk;
        if k + 1 < n {
            let t = m[[k + 1, k]];
            let tn = t.norm();
            e[k] = tn;
            dk = if tn > 0.0 { t * dk / tn } else { dk };
        }
    }
    if let Some(qm) = q.as_mut() {
        for (j, ph) in phases.iter().enumerate() {
            if (ph - ONE).norm() != 0.0 {
                qm.column_mut(j).mapv_inplace(|z| z * ph);
            }
        }
    }
    (d, e, q)
}

/// Implicit-shift QL iteration on a real symmetric tridiagonal matrix,
/// rotations accumulated into the complex columns of `q` when present.
fn tql(d: &mut [f64], e: &mut [f64], mut q: Option<&mut CMat>) -> Result<(), LinalgError> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITER {
                return Err(LinalgError::NoConvergence {
                    max_iter: MAX_QL_ITER,
                });
            }
            // Wilkinson-style shift.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow_restart = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow_restart = i > l;
                    if !underflow_restart {
                        // i == l: treat as a completed sweep for this l.
                    }
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
                if let Some(qm) = q.as_deref_mut() {
                    for row in 0..qm.nrows() {
                        let f1 = qm[[row, i + 1]];
                        let f0 = qm[[row, i]];
                        qm[[row, i + 1]] = s * f0 + c * f1;
                        qm[[row, i]] = c * f0 - s * f1;
                    }
                }
            }
            if underflow_restart {
                continue;
            }
            if r == 0.0 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, norm_fro, random};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reconstruction_residual(a: &CMat, dec: &Eigh) -> f64 {
        let rebuilt = dec.reassemble(&dec.values);
        norm_fro(&(a - &rebuilt))
    }

    fn unitarity_residual(u: &CMat) -> f64 {
        let n = u.nrows();
        norm_fro(&(dagger(u).dot(u) - identity(n)))
    }

    #[test]
    fn diagonal_matrix_sorted_spectrum() {
        let a = array![
            [c64(3.0, 0.0), ZERO, ZERO],
            [ZERO, c64(1.0, 0.0), ZERO],
            [ZERO, ZERO, c64(2.0, 0.0)]
        ];
        let dec = eigh(&a).unwrap();
        assert!((dec.values[0] - 1.0).abs() < 1e-14);
        assert!((dec.values[1] - 2.0).abs() < 1e-14);
        assert!((dec.values[2] - 3.0).abs() < 1e-14);
        // Eigenvectors are permuted basis vectors.
        for j in 0..3 {
            let col = dec.vectors.column(j);
            let max: f64 = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pauli_x_spectrum() {
        let sx = array![[ZERO, ONE], [ONE, ZERO]];
        let dec = eigh(&sx).unwrap();
        assert!((dec.values[0] + 1.0).abs() < 1e-14);
        assert!((dec.values[1] - 1.0).abs() < 1e-14);
        assert!(reconstruction_residual(&sx, &dec) < 1e-14);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [2usize, 3, 5, 8, 16] {
            let a = random::hermitian(n, &mut rng);
            let dec = eigh(&a).unwrap();
            let scale = dec.values.iter().map(|x| x.abs()).fold(1e-30, f64::max);
            assert!(
                reconstruction_residual(&a, &dec) <= 1e-10 * scale,
                "n={n} residual {} vs scale {scale}",
                reconstruction_residual(&a, &dec)
            );
            assert!(unitarity_residual(&dec.vectors) < 1e-10);
            for w in dec.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn degenerate_spectrum_is_handled() {
        // Projector-like matrix with a triple eigenvalue.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random::unitary_haar(4, &mut rng);
        let lam = [2.0, 2.0, 2.0, -1.0];
        let mut a = CMat::zeros((4, 4));
        for (k, &lk) in lam.iter().enumerate() {
            let col = u.column(k).to_owned();
            for i in 0..4 {
                for j in 0..4 {
                    a[[i, j]] += lk * col[i] * col[j].conj();
                }
            }
        }
        let dec = eigh(&a).unwrap();
        assert!((dec.values[0] + 1.0).abs() < 1e-10);
        for k in 1..4 {
            assert!((dec.values[k] - 2.0).abs() < 1e-10);
        }
        assert!(reconstruction_residual(&a, &dec) < 1e-10);
    }

    #[test]
    fn eigvalsh_matches_eigh() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random::hermitian(12, &mut rng);
        let vals = eigvalsh(&a).unwrap();
        let dec = eigh(&a).unwrap();
        for (x, y) in vals.iter().zip(dec.values.iter()) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn moderate_tridiagonal_scale() {
        // Discrete Laplacian-like matrix, checks the QL path at larger n.
        let n = 256;
        let mut a = CMat::zeros((n, n));
        for i in 0..n {
            a[[i, i]] = c64(2.0, 0.0);
            if i + 1 < n {
                a[[i, i + 1]] = c64(-1.0, 0.0);
                a[[i + 1, i]] = c64(-1.0, 0.0);
            }
        }
        let vals = eigvalsh(&a).unwrap();
        // Known spectrum 2 - 2cos(kπ/(n+1)), k = 1..n.
        let expect: f64 = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((vals[0] - expect).abs() < 1e-10);
    }
}
