//! Compact matrix Lie groups, their representations, and the transference of
//! sub-Laplacians to Lindblad generators.
//!
//! Supported groups are SU(2) and d-tori. SU(2) carries the spin
//! representations (plus direct sums and tensor products); torus
//! representations are given by integer weight vectors. Horizontal systems
//! are direction sets in the defining Lie algebra, Gram-orthonormalized for
//! the invariant inner product that makes the standard basis orthonormal.
//!
//! Transference: for each horizontal direction `X_k` the jump operator is
//! `a_k = -i φ_u(X_k)`, fixed by `u(exp(tX_k)) = e^{i t a_k}`. Differentiating
//! `g ↦ u(g)† x u(g)` along `exp(tX_k)·g` then gives exactly
//! `-i u(g)†[a_k, x]u(g)`, which is the identity the finite-difference checks
//! pin down.

use crate::exec;
use crate::linalg::{
    self, commutator, dagger, exp_anti_hermitian, hermiticity_deviation, identity, kron, norm_fro,
    norm_max, CMat, HermitianOperator, LinalgError,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LieGroupError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("spin must be a nonnegative half-integer; got numerator {0}")]
    BadSpin(i64),
    #[error("direction {index} is not anti-Hermitian (deviation {deviation:.3e})")]
    NotAntiHermitian { index: usize, deviation: f64 },
    #[error("direction {index} lies outside the Lie algebra (residual {residual:.3e})")]
    OutsideAlgebra { index: usize, residual: f64 },
    #[error("directions are linearly dependent (Gram min eigenvalue {0:.3e})")]
    DependentDirections(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("groups do not match")]
    GroupMismatch,
    #[error("torus weights must all have length {expected}, entry {index} has {got}")]
    BadWeights {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("unknown direction name {0:?} (expected X, Y or Z)")]
    UnknownDirection(String),
    #[error("representation is not a Lie algebra homomorphism (residual {0:.3e})")]
    NotHomomorphism(f64),
}

/// A supported compact group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Group {
    Su2,
    Torus { dim: usize },
}

impl Group {
    pub fn algebra_dim(&self) -> usize {
        match self {
            Group::Su2 => 3,
            Group::Torus { dim } => *dim,
        }
    }

    /// Dimension of the defining matrix representation.
    pub fn defining_dim(&self) -> usize {
        match self {
            Group::Su2 => 2,
            Group::Torus { dim } => *dim,
        }
    }

    /// Orthonormal anti-Hermitian basis of the Lie algebra in the defining
    /// representation: `{-iσ_k/2}` for su(2), `{i E_kk}` for the torus.
    pub fn algebra_basis(&self) -> Vec<CMat> {
        match self {
            Group::Su2 => {
                let half_i = linalg::c64(0.0, -0.5);
                let x = ndarray::array![
                    [linalg::c64(0.0, 0.0), half_i],
                    [half_i, linalg::c64(0.0, 0.0)]
                ];
                let y = ndarray::array![
                    [linalg::c64(0.0, 0.0), linalg::c64(-0.5, 0.0)],
                    [linalg::c64(0.5, 0.0), linalg::c64(0.0, 0.0)]
                ];
                let z = ndarray::array![
                    [half_i, linalg::c64(0.0, 0.0)],
                    [linalg::c64(0.0, 0.0), linalg::c64(0.0, 0.5)]
                ];
                vec![x, y, z]
            }
            Group::Torus { dim } => (0..*dim)
                .map(|k| {
                    let mut m = CMat::zeros((*dim, *dim));
                    m[[k, k]] = linalg::c64(0.0, 1.0);
                    m
                })
                .collect(),
        }
    }

    /// Invariant inner product making [`Group::algebra_basis`] orthonormal:
    /// `-c tr(AB)` with `c = 2` for su(2) and `c = 1` for the torus.
    pub fn inner(&self, a: &CMat, b: &CMat) -> f64 {
        let c = match self {
            Group::Su2 => 2.0,
            Group::Torus { .. } => 1.0,
        };
        -c * linalg::trace(&a.dot(b)).re
    }

    /// Coordinates of an algebra element in the orthonormal basis.
    pub fn coordinates(&self, a: &CMat) -> Vec<f64> {
        self.algebra_basis()
            .iter()
            .map(|b| self.inner(b, a))
            .collect()
    }

    /// Haar-random group element.
    pub fn haar<R: Rng>(&self, rng: &mut R) -> GroupElement {
        match self {
            Group::Su2 => {
                // Unit quaternion from four Gaussians.
                let q: Vec<f64> = (0..4)
                    .map(|_| linalg::random::standard_normal(rng))
                    .collect();
                let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                let (a, b, c, d) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
                let u = ndarray::array![
                    [linalg::c64(a, b), linalg::c64(c, d)],
                    [linalg::c64(-c, d), linalg::c64(a, -b)]
                ];
                GroupElement::Su2(u)
            }
            Group::Torus { dim } => {
                let angles = (0..*dim)
                    .map(|_| rng.gen_range(0.0..(2.0 * std::f64::consts::PI)))
                    .collect();
                GroupElement::Torus(angles)
            }
        }
    }

    /// Coordinates (in the algebra basis) of a logarithm of a defining-rep
    /// group element.
    pub fn log_coordinates(&self, g: &GroupElement) -> Vec<f64> {
        match (self, g) {
            (Group::Su2, GroupElement::Su2(u)) => {
                // u = cos(θ/2) I - i sin(θ/2) n·σ = exp(θ n·X).
                let cos_half = (0.5 * linalg::trace(u).re).clamp(-1.0, 1.0);
                let b = (u - &dagger(u)).mapv(|z| 0.5 * z);
                let sin_half = norm_fro(&b) / f64::sqrt(2.0);
                if sin_half < 1e-14 {
                    if cos_half > 0.0 {
                        return vec![0.0, 0.0, 0.0];
                    }
                    // -I: any axis reaches it at angle 2π; pick Z.
                    return vec![0.0, 0.0, 2.0 * std::f64::consts::PI];
                }
                let theta = 2.0 * sin_half.atan2(cos_half);
                // B = -i sin(θ/2) n·σ, so n_k = Im(entries)/sin…
                let nx = b[[0, 1]].im / -sin_half;
                let ny = b[[0, 1]].re / -sin_half;
                let nz = b[[0, 0]].im / -sin_half;
                vec![theta * nx, theta * ny, theta * nz]
            }
            (Group::Torus { .. }, GroupElement::Torus(angles)) => angles.clone(),
            _ => panic!("group/element mismatch"),
        }
    }

    /// Defining-representation matrix of a group element.
    pub fn defining_matrix(&self, g: &GroupElement) -> CMat {
        match (self, g) {
            (Group::Su2, GroupElement::Su2(u)) => u.clone(),
            (Group::Torus { dim }, GroupElement::Torus(angles)) => {
                let mut m = CMat::zeros((*dim, *dim));
                for (k, &t) in angles.iter().enumerate() {
                    m[[k, k]] = linalg::c64(0.0, t).exp();
                }
                m
            }
            _ => panic!("group/element mismatch"),
        }
    }
}

/// An abstract group element: an SU(2) matrix or a torus angle vector.
#[derive(Debug, Clone)]
pub enum GroupElement {
    Su2(CMat),
    Torus(Vec<f64>),
}

impl GroupElement {
    pub fn identity_of(group: &Group) -> Self {
        match group {
            Group::Su2 => GroupElement::Su2(identity(2)),
            Group::Torus { dim } => GroupElement::Torus(vec![0.0; *dim]),
        }
    }
}

/// A finite-dimensional unitary representation given by the images of the
/// algebra basis.
#[derive(Debug, Clone)]
pub struct Representation {
    group: Group,
    dim: usize,
    algebra_images: Vec<CMat>,
    /// Torus reps keep their weight vectors for exact quadrature.
    weights: Option<Vec<Vec<i64>>>,
}

impl Representation {
    /// Spin-`j` representation of SU(2), `j = two_j / 2`.
    ///
    /// Angular momentum matrices from the ladder construction; the algebra
    /// map sends `-iσ_k/2 ↦ -iJ_k`.
    pub fn su2_spin(two_j: u32) -> Result<Self, LieGroupError> {
        let n = two_j as usize + 1;
        let j = two_j as f64 / 2.0;
        let mut jz = CMat::zeros((n, n));
        let mut jp = CMat::zeros((n, n));
        for idx in 0..n {
            let m = j - idx as f64;
            jz[[idx, idx]] = linalg::c64(m, 0.0);
            if idx > 0 {
                // J₊ |j, m⟩ = sqrt(j(j+1) - m(m+1)) |j, m+1⟩
                let amp = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
                jp[[idx - 1, idx]] = linalg::c64(amp, 0.0);
            }
        }
        let jm = dagger(&jp);
        let jx = (&jp + &jm).mapv(|z| 0.5 * z);
        let jy = (&jp - &jm).mapv(|z| linalg::c64(0.0, -0.5) * z);
        let images = vec![
            jx.mapv(|z| linalg::c64(0.0, -1.0) * z),
            jy.mapv(|z| linalg::c64(0.0, -1.0) * z),
            jz.mapv(|z| linalg::c64(0.0, -1.0) * z),
        ];
        let rep = Self {
            group: Group::Su2,
            dim: n,
            algebra_images: images,
            weights: None,
        };
        rep.validate()?;
        Ok(rep)
    }

    /// Torus representation by diagonal phases with integer weights; one
    /// weight vector per basis vector of the target space.
    pub fn torus(weights: Vec<Vec<i64>>) -> Result<Self, LieGroupError> {
        let n = weights.len();
        let d = weights.first().map(|w| w.len()).unwrap_or(0);
        for (index, w) in weights.iter().enumerate() {
            if w.len() != d {
                return Err(LieGroupError::BadWeights {
                    index,
                    expected: d,
                    got: w.len(),
                });
            }
        }
        let images = (0..d)
            .map(|k| {
                let mut m = CMat::zeros((n, n));
                for (l, w) in weights.iter().enumerate() {
                    m[[l, l]] = linalg::c64(0.0, w[k] as f64);
                }
                m
            })
            .collect();
        let rep = Self {
            group: Group::Torus { dim: d },
            dim: n,
            algebra_images: images,
            weights: Some(weights),
        };
        rep.validate()?;
        Ok(rep)
    }

    /// Direct sum of two representations of the same group.
    pub fn direct_sum(&self, other: &Self) -> Result<Self, LieGroupError> {
        if self.group != other.group {
            return Err(LieGroupError::GroupMismatch);
        }
        let n = self.dim + other.dim;
        let images = self
            .algebra_images
            .iter()
            .zip(&other.algebra_images)
            .map(|(a, b)| {
                let mut m = CMat::zeros((n, n));
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        m[[i, j]] = a[[i, j]];
                    }
                }
                for i in 0..other.dim {
                    for j in 0..other.dim {
                        m[[self.dim + i, self.dim + j]] = b[[i, j]];
                    }
                }
                m
            })
            .collect();
        let weights = match (&self.weights, &other.weights) {
            (Some(a), Some(b)) => {
                let mut w = a.clone();
                w.extend(b.iter().cloned());
                Some(w)
            }
            _ => None,
        };
        Ok(Self {
            group: self.group.clone(),
            dim: n,
            algebra_images: images,
            weights,
        })
    }

    /// Tensor product of two representations of the same group
    /// (`A ⊗ I + I ⊗ B` on the algebra).
    pub fn tensor(&self, other: &Self) -> Result<Self, LieGroupError> {
        if self.group != other.group {
            return Err(LieGroupError::GroupMismatch);
        }
        let images = self
            .algebra_images
            .iter()
            .zip(&other.algebra_images)
            .map(|(a, b)| {
                kron(a, &identity(other.dim)) + kron(&identity(self.dim), b)
            })
            .collect();
        let weights = match (&self.weights, &other.weights) {
            (Some(a), Some(b)) => {
                let mut w = Vec::with_capacity(a.len() * b.len());
                for wa in a {
                    for wb in b {
                        w.push(wa.iter().zip(wb).map(|(x, y)| x + y).collect());
                    }
                }
                Some(w)
            }
            _ => None,
        };
        Ok(Self {
            group: self.group.clone(),
            dim: self.dim * other.dim,
            algebra_images: images,
            weights,
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn algebra_images(&self) -> &[CMat] {
        &self.algebra_images
    }

    pub fn weights(&self) -> Option<&[Vec<i64>]> {
        self.weights.as_deref()
    }

    /// Image of an algebra element given by coordinates in the basis.
    pub fn algebra_map(&self, coords: &[f64]) -> CMat {
        let mut m = CMat::zeros((self.dim, self.dim));
        for (c, img) in coords.iter().zip(&self.algebra_images) {
            m.zip_mut_with(img, |o, x| *o += *c * x);
        }
        m
    }

    /// Unitary image of a group element: `exp(φ_u(log g))`.
    pub fn unitary(&self, g: &GroupElement) -> Result<CMat, LieGroupError> {
        match (g, &self.weights) {
            (GroupElement::Torus(angles), Some(weights)) => {
                // Exact diagonal phases e^{i⟨w, θ⟩}.
                let mut m = CMat::zeros((self.dim, self.dim));
                for (l, w) in weights.iter().enumerate() {
                    let phase: f64 = w.iter().zip(angles).map(|(&wk, &t)| wk as f64 * t).sum();
                    m[[l, l]] = linalg::c64(0.0, phase).exp();
                }
                Ok(m)
            }
            _ => {
                let coords = self.group.log_coordinates(g);
                Ok(exp_anti_hermitian(&self.algebra_map(&coords))?)
            }
        }
    }

    /// Homomorphism residual `max ‖φ([b_i,b_j]) - [φ(b_i),φ(b_j)]‖` over
    /// basis pairs.
    pub fn homomorphism_residual(&self) -> f64 {
        let basis = self.group.algebra_basis();
        let mut worst: f64 = 0.0;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let bracket = commutator(&basis[i], &basis[j]);
                let coords = self.group.coordinates(&bracket);
                let lhs = self.algebra_map(&coords);
                let rhs = commutator(&self.algebra_images[i], &self.algebra_images[j]);
                worst = worst.max(norm_fro(&(&lhs - &rhs)));
            }
        }
        worst
    }

    fn validate(&self) -> Result<(), LieGroupError> {
        for (index, img) in self.algebra_images.iter().enumerate() {
            let dev = hermiticity_deviation(&img.mapv(|z| linalg::c64(0.0, 1.0) * z));
            if dev > 1e-12 {
                return Err(LieGroupError::NotAntiHermitian {
                    index,
                    deviation: dev,
                });
            }
        }
        let res = self.homomorphism_residual();
        if res > 1e-10 {
            return Err(LieGroupError::NotHomomorphism(res));
        }
        Ok(())
    }
}

/// A set of horizontal directions in the defining Lie algebra, orthonormal
/// for the invariant inner product.
#[derive(Debug, Clone)]
pub struct HorizontalSystem {
    group: Group,
    directions: Vec<CMat>,
    /// Conditioning factor of the input Gram matrix; 1.0 for inputs that were
    /// already orthonormal. Non-orthonormal inputs change the CC metric by at
    /// most this factor.
    change_of_basis: f64,
}

impl HorizontalSystem {
    pub fn new(group: Group, raw: Vec<CMat>) -> Result<Self, LieGroupError> {
        if raw.is_empty() {
            return Err(LieGroupError::DependentDirections(0.0));
        }
        let basis = group.algebra_basis();
        let n = group.defining_dim();
        for (index, x) in raw.iter().enumerate() {
            if x.nrows() != n || x.ncols() != n {
                return Err(LieGroupError::DimensionMismatch {
                    expected: n,
                    got: x.nrows(),
                });
            }
            let dev = hermiticity_deviation(&x.mapv(|z| linalg::c64(0.0, 1.0) * z));
            if dev > 1e-12 {
                return Err(LieGroupError::NotAntiHermitian {
                    index,
                    deviation: dev,
                });
            }
            // Membership in the algebra: the basis expansion must reproduce x.
            let coords = group.coordinates(x);
            let mut rebuilt = CMat::zeros((n, n));
            for (c, b) in coords.iter().zip(&basis) {
                rebuilt.zip_mut_with(b, |o, v| *o += *c * v);
            }
            let residual = norm_max(&(&rebuilt - x));
            if residual > 1e-10 * norm_max(x).max(1.0) {
                return Err(LieGroupError::OutsideAlgebra { index, residual });
            }
        }

        // Gram matrix in the invariant inner product.
        let s = raw.len();
        let mut gram = ndarray::Array2::<f64>::zeros((s, s));
        for i in 0..s {
            for j in 0..s {
                gram[[i, j]] = group.inner(&raw[i], &raw[j]);
            }
        }
        let gram_c = gram.mapv(|x| linalg::c64(x, 0.0));
        let evs = linalg::eigvalsh(&gram_c)?;
        let (min_ev, max_ev) = (evs[0], evs[evs.len() - 1]);
        if min_ev <= 1e-10 * max_ev.max(1.0) {
            return Err(LieGroupError::DependentDirections(min_ev));
        }

        let already_orthonormal = {
            let mut dev: f64 = 0.0;
            for i in 0..s {
                for j in 0..s {
                    let target = if i == j { 1.0 } else { 0.0 };
                    dev = dev.max((gram[[i, j]] - target).abs());
                }
            }
            dev < 1e-12
        };
        if already_orthonormal {
            return Ok(Self {
                group,
                directions: raw,
                change_of_basis: 1.0,
            });
        }

        // Gram-orthonormalize and record the conditioning factor.
        let mut dirs = raw;
        for j in 0..s {
            for _pass in 0..2 {
                for i in 0..j {
                    let proj = group.inner(&dirs[i], &dirs[j]);
                    let prev = dirs[i].clone();
                    dirs[j].zip_mut_with(&prev, |b, a| *b -= proj * a);
                }
            }
            let norm = group.inner(&dirs[j], &dirs[j]).sqrt();
            dirs[j].mapv_inplace(|z| z / norm);
        }
        Ok(Self {
            group,
            directions: dirs,
            change_of_basis: (max_ev / min_ev).sqrt(),
        })
    }

    /// SU(2) system from direction names among `X`, `Y`, `Z`.
    pub fn su2_named(names: &[String]) -> Result<Self, LieGroupError> {
        let basis = Group::Su2.algebra_basis();
        let mut dirs = Vec::with_capacity(names.len());
        for name in names {
            let idx = match name.to_ascii_uppercase().as_str() {
                "X" => 0,
                "Y" => 1,
                "Z" => 2,
                _ => return Err(LieGroupError::UnknownDirection(name.clone())),
            };
            dirs.push(basis[idx].clone());
        }
        Self::new(Group::Su2, dirs)
    }

    /// Torus system from direction vectors in `ℝ^d`.
    pub fn torus_directions(dim: usize, vectors: &[Vec<f64>]) -> Result<Self, LieGroupError> {
        let basis = Group::Torus { dim }.algebra_basis();
        let mut dirs = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != dim {
                return Err(LieGroupError::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            let mut m = CMat::zeros((dim, dim));
            for (c, b) in v.iter().zip(&basis) {
                m.zip_mut_with(b, |o, x| *o += *c * x);
            }
            dirs.push(m);
        }
        Self::new(Group::Torus { dim }, dirs)
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn directions(&self) -> &[CMat] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn change_of_basis(&self) -> f64 {
        self.change_of_basis
    }

    /// `exp(Σ_k c_k X_k)` in the defining representation. Closed forms for
    /// SU(2) (axis-angle) and tori (diagonal phases); the generic spectral
    /// exponential otherwise.
    pub fn exp_tangent(&self, coeffs: &[f64]) -> Result<CMat, LieGroupError> {
        let n = self.group.defining_dim();
        let mut a = CMat::zeros((n, n));
        for (c, x) in coeffs.iter().zip(&self.directions) {
            a.zip_mut_with(x, |o, v| *o += *c * v);
        }
        match &self.group {
            Group::Su2 => {
                // A = -i(v·σ)/2: exp(A) = cos(|v|/2) I - i sin(|v|/2) v̂·σ.
                let vx = -2.0 * a[[0, 1]].im;
                let vy = -2.0 * a[[0, 1]].re;
                let vz = -2.0 * a[[0, 0]].im;
                let norm = (vx * vx + vy * vy + vz * vz).sqrt();
                if norm < 1e-300 {
                    return Ok(identity(2));
                }
                let (c, s) = ((0.5 * norm).cos(), (0.5 * norm).sin());
                let (nx, ny, nz) = (vx / norm, vy / norm, vz / norm);
                Ok(ndarray::array![
                    [
                        linalg::c64(c, -s * nz),
                        linalg::c64(-s * ny, -s * nx)
                    ],
                    [
                        linalg::c64(s * ny, -s * nx),
                        linalg::c64(c, s * nz)
                    ]
                ])
            }
            Group::Torus { dim } => {
                let mut m = CMat::zeros((*dim, *dim));
                for l in 0..*dim {
                    m[[l, l]] = linalg::c64(0.0, a[[l, l]].im).exp();
                }
                Ok(m)
            }
        }
    }

    /// Bracket-generation check: returns whether iterated commutators of the
    /// directions span the algebra, and the first depth at which they do.
    pub fn hormander_check(&self, max_depth: usize) -> (bool, usize) {
        let basis = self.group.algebra_basis();
        let adim = basis.len();
        // Coordinates of the current span, kept orthonormal.
        let mut span: Vec<Vec<f64>> = Vec::new();
        let mut layer: Vec<CMat> = Vec::new();
        let add = |span: &mut Vec<Vec<f64>>, m: &CMat, group: &Group| -> bool {
            let mut coords = group.coordinates(m);
            for v in span.iter() {
                let dot: f64 = coords.iter().zip(v).map(|(a, b)| a * b).sum();
                for (c, b) in coords.iter_mut().zip(v) {
                    *c -= dot * b;
                }
            }
            let norm: f64 = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-9 {
                coords.iter_mut().for_each(|c| *c /= norm);
                span.push(coords);
                true
            } else {
                false
            }
        };

        for x in &self.directions {
            if add(&mut span, x, &self.group) {
                layer.push(x.clone());
            }
        }
        if span.len() == adim {
            return (true, 1);
        }
        let mut all_layers = layer.clone();
        for depth in 2..=max_depth {
            let mut next_layer = Vec::new();
            for x in &self.directions {
                for v in &all_layers {
                    let br = commutator(x, v);
                    if add(&mut span, &br, &self.group) {
                        next_layer.push(br);
                    }
                }
            }
            if span.len() == adim {
                return (true, depth);
            }
            if next_layer.is_empty() {
                return (false, depth);
            }
            all_layers = next_layer;
        }
        (false, max_depth)
    }
}

/// Transfer the sub-Laplacian of a horizontal system through a representation:
/// `a_k = -i φ_u(X_k)`.
pub fn transfer_lindbladian(
    rep: &Representation,
    system: &HorizontalSystem,
) -> Result<Vec<HermitianOperator>, LieGroupError> {
    if rep.group() != system.group() {
        return Err(LieGroupError::GroupMismatch);
    }
    let mut jumps = Vec::with_capacity(system.len());
    for x in system.directions() {
        let coords = system.group().coordinates(x);
        let phi = rep.algebra_map(&coords);
        let a = phi.mapv(|z| linalg::c64(0.0, -1.0) * z);
        jumps.push(HermitianOperator::new(a)?);
    }
    Ok(jumps)
}

/// Max finite-difference residual of the transference identity
/// `X_k(g ↦ u(g)†xu(g)) = -i u(g)†[a_k, x]u(g)` (derivative along
/// `exp(tX_k)·g`) over random samples.
pub fn intertwining_residual(
    rep: &Representation,
    system: &HorizontalSystem,
    jumps: &[HermitianOperator],
    samples: usize,
    seed: u64,
) -> Result<f64, LieGroupError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let g = system.group().haar(&mut rng);
        let ug = rep.unitary(&g)?;
        let x = linalg::random::hermitian(rep.dim(), &mut rng);
        let k = rng.gen_range(0..system.len());

        let mut coeffs = vec![0.0; system.len()];
        coeffs[k] = h;
        let step_plus = system.exp_tangent(&coeffs)?;
        coeffs[k] = -h;
        let step_minus = system.exp_tangent(&coeffs)?;
        let g_mat = system.group().defining_matrix(&g);
        let g_plus = element_from_matrix(system.group(), &step_plus.dot(&g_mat));
        let g_minus = element_from_matrix(system.group(), &step_minus.dot(&g_mat));

        let f = |u: &CMat| dagger(u).dot(&x).dot(u);
        let u_plus = rep.unitary(&g_plus)?;
        let u_minus = rep.unitary(&g_minus)?;
        let fd = (&f(&u_plus) - &f(&u_minus)).mapv(|z| z / (2.0 * h));

        let bracket = commutator(jumps[k].matrix(), &x).mapv(|z| linalg::c64(0.0, -1.0) * z);
        let analytic = dagger(&ug).dot(&bracket).dot(&ug);
        let dev = norm_fro(&(&fd - &analytic)) / norm_fro(&x).max(1.0);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Recover a [`GroupElement`] from its defining-representation matrix.
pub fn element_from_matrix(group: &Group, m: &CMat) -> GroupElement {
    match group {
        Group::Su2 => GroupElement::Su2(m.clone()),
        Group::Torus { dim } => {
            let angles = (0..*dim).map(|k| m[[k, k]].arg()).collect();
            GroupElement::Torus(angles)
        }
    }
}

/// Haar average `∫ u(g)† x u(g) dμ(g)`.
///
/// SU(2) uses Monte Carlo over uniform S³ samples (O(n_quad^{-1/2})); tori use
/// an exact product-grid quadrature sized by the weight range, which
/// annihilates every nontrivial character.
pub fn haar_twirl(
    rep: &Representation,
    x: &CMat,
    n_quad: usize,
    seed: u64,
) -> Result<CMat, LieGroupError> {
    if x.nrows() != rep.dim() || x.ncols() != rep.dim() {
        return Err(LieGroupError::DimensionMismatch {
            expected: rep.dim(),
            got: x.nrows(),
        });
    }
    match (&rep.group, &rep.weights) {
        (Group::Torus { dim }, Some(weights)) => {
            // Per-dimension grid of size 2·max|w_d| + 1.
            let d = *dim;
            let mut sizes = Vec::with_capacity(d);
            for k in 0..d {
                let wmax = weights.iter().map(|w| w[k].unsigned_abs()).max().unwrap_or(0);
                sizes.push((2 * wmax as usize + 1).max(1));
            }
            let total: usize = sizes.iter().product();
            let mut acc = CMat::zeros((rep.dim(), rep.dim()));
            for flat in 0..total {
                let mut rem = flat;
                let mut angles = Vec::with_capacity(d);
                for &m in &sizes {
                    let idx = rem % m;
                    rem /= m;
                    angles.push(2.0 * std::f64::consts::PI * idx as f64 / m as f64);
                }
                let u = rep.unitary(&GroupElement::Torus(angles))?;
                acc = acc + dagger(&u).dot(x).dot(&u);
            }
            Ok(acc.mapv(|z| z / total as f64))
        }
        _ => {
            // Parallel Monte Carlo shards with derived seeds.
            let shards = 16.min(n_quad.max(1));
            let per_shard = n_quad.div_ceil(shards);
            let partials = exec::map_indexed(shards, |s| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                let mut acc = CMat::zeros((rep.dim(), rep.dim()));
                let mut count = 0usize;
                for _ in 0..per_shard {
                    let g = rep.group.haar(&mut rng);
                    if let Ok(u) = rep.unitary(&g) {
                        acc = acc + dagger(&u).dot(x).dot(&u);
                        count += 1;
                    }
                }
                (acc, count)
            });
            let mut acc = CMat::zeros((rep.dim(), rep.dim()));
            let mut count = 0usize;
            for (a, c) in partials {
                acc = acc + a;
                count += c;
            }
            Ok(acc.mapv(|z| z / count.max(1) as f64))
        }
    }
}
