//! Coherence freezing of a dephased two-level atom and polarization dynamics
//! of the supersymmetric multiphoton Jaynes–Cummings model.
//!
//! * [`reservoir`]: discrete thermal bath, occupations and correlation kernels.
//! * [`coherence_control`]: the driven-atom decay rate and the envelope that
//!   cancels it, with a per-sample feasibility classification.
//! * [`susy_fock`]: truncated ladder operators, the generators `N, N', Q, Q†`
//!   and residuals of their graded algebra.
//! * [`jcm_dynamics`]: `c1`/`c2` coefficients, coherence and `(u, v)`
//!   evolution, zero-detuning closed forms and a brute-force oracle.
//! * [`numerics`]: RK4, trapezoid quadrature, finite-difference residuals.
//! * [`cli`]: JSON configuration and CSV/JSON emission.
//!
//! Units are ħ = k_B = 1.

pub mod cli;
pub mod coherence_control;
pub mod jcm_dynamics;
pub mod numerics;
pub mod reservoir;
pub mod susy_fock;
