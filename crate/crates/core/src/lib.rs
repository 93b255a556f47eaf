//! Numerical toolkit for symmetric quantum Markov semigroups and their
//! entropy decay rates.
//!
//! The crate builds Lindblad generators from self-adjoint jump operators,
//! computes fixed-point algebras and conditional expectations, estimates
//! modified log-Sobolev (MLSI) constants by direct optimization, and
//! assembles a geometric lower bound on the complete log-Sobolev constant
//! from four ingredients: the number of horizontal directions of a compact
//! Lie group, the size of a finite averaging design for the group twirl,
//! the Carnot-Caratheodory diameter, and a log-Sobolev constant of the
//! weighted unit interval.
//!
//! Modules mirror that pipeline:
//!
//! * [`linalg`] - dense complex Hermitian linear algebra (in-house
//!   eigensolver, matrix functions, superoperator vectorization).
//! * [`lindblad`] - generator construction, semigroup evolution, spectra.
//! * [`fixedpoint`] - commutant bases and conditional expectations.
//! * [`entropy`] - relative entropy, Fisher information, decay curves.
//! * [`mlsi`] - numerical MLSI constant estimation over ancilla extensions.
//! * [`liegroup`] - SU(2) and torus representations, Hormander systems,
//!   transference of sub-Laplacians to Lindbladians, Haar twirls.
//! * [`ccgeom`] - Carnot-Caratheodory distances and diameters by
//!   horizontal-path optimization.
//! * [`design`] - finite averaging designs with Caratheodory support
//!   reduction.
//! * [`interval`] - weighted-interval log-Sobolev machinery.
//! * [`bound`] - assembly of the final lower bound and the end-to-end
//!   pipeline report.
//!
//! With the default `parallel` feature the sampling- and grid-heavy
//! operations fan out over rayon; disabling it yields a sequential build
//! with identical results.

pub mod bound;
pub mod ccgeom;
pub mod design;
pub mod entropy;
pub mod exec;
pub mod fixedpoint;
pub mod interval;
pub mod io;
pub mod liegroup;
pub mod lindblad;
pub mod linalg;
pub mod mlsi;

pub use linalg::{CMat, DensityOperator, HermitianOperator, LinalgError, Superoperator};
pub use lindblad::{LindbladError, LindbladGenerator};
