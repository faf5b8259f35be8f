//! Brute-force evaluation of the second-order master-equation integrand
//!
//! ```text
//! Tr_r [H_I(t), [H_I(t'), ρ_q ⊗ ρ_r]]
//! ```
//!
//! on explicit truncated Fock ⊗ spin matrices, next to two analytic routes:
//!
//! * [`trace_terms`] evaluates the three trace groups T1, T2, T3 (the
//!   `HH'ρ + ρH'H`, `QρQ + Q†ρQ†` and `QρQ† + Q†ρQ` pieces) as 2×2 atomic
//!   operators using only the Fock moments. It matches the oracle for every
//!   `k`.
//! * [`closed_form_offdiag_terms`] is the per-term `⟨0|·|1⟩` reduction that the
//!   `c1`/`c2` coefficients integrate. Its T1 term matches the oracle. Its T3
//!   term, `−|g|² 2cos(δ(t'−t)) (m+k)!/m! ρ10`, does not: `σ−ρσ+` and `σ+ρσ−`
//!   are diagonal, so T3 has no off-diagonal part. Its T2 term is zero, which
//!   holds only for `k ≥ 1`; at `k = 0` the oracle carries
//!   `−2 g² e^{−iδ(t+t')} ρ10`.
//!
//! Consequently the oracle reproduces `c1 ρ01` exactly and gives no `c2 ρ10`
//! coupling for `k ≥ 1`.
//!
//! Matrices passed in and returned are 2×2 in the atomic label basis: index 0
//! is `|0⟩` (σz = −1), index 1 is `|1⟩` (σz = +1). Internally the spin-major
//! layout of [`crate::susy_fock`] puts σz = +1 first.
//!
//! [`dephasing_oracle_integrand`] does the same for a two-level atom driven by
//! `|E|²` and coupled to the discrete reservoir through σz.

use ndarray::{array, Array2};
use num_complex::Complex64 as C64;

use super::{JcmError, JcmParams};
use crate::coherence_control::DrivenAtomParams;
use crate::reservoir::ReservoirSpec;
use crate::susy_fock::{build_generators, ladder_ops, SusyError};

fn z() -> C64 {
    C64::new(0.0, 0.0)
}

fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

fn commutator(x: &Array2<C64>, y: &Array2<C64>) -> Array2<C64> {
    x.dot(y) - y.dot(x)
}

/// Spin-major block index for an atomic label.
fn block_of(label: usize) -> usize {
    1 - label
}

/// `ρ_q ⊗ |m⟩⟨m|` in the spin-major layout.
fn embed_state(rho_q: &Array2<C64>, dim: usize, m: usize) -> Array2<C64> {
    let mut out = Array2::<C64>::zeros((2 * dim, 2 * dim));
    for a in 0..2 {
        for b in 0..2 {
            out[[block_of(a) * dim + m, block_of(b) * dim + m]] = rho_q[[a, b]];
        }
    }
    out
}

/// Trace over the Fock factor, returned in the label basis.
fn trace_field(full: &Array2<C64>, dim: usize) -> Array2<C64> {
    let mut out = Array2::<C64>::zeros((2, 2));
    for a in 0..2 {
        for b in 0..2 {
            let (ra, rb) = (block_of(a) * dim, block_of(b) * dim);
            out[[a, b]] = (0..dim).map(|n| full[[ra + n, rb + n]]).sum();
        }
    }
    out
}

fn check_state(rho_q: &Array2<C64>) {
    assert_eq!(rho_q.dim(), (2, 2), "atomic density matrix must be 2x2");
}

/// Brute-force `Tr_r[H_I(t), [H_I(t'), ρ_q ⊗ |m⟩⟨m|]]` with
/// `H_I(s) = g e^{−iδs} Q + g* e^{iδs} Q†`.
pub fn oracle_integrand(
    p: &JcmParams,
    rho_q: &Array2<C64>,
    t: f64,
    t_prime: f64,
    dim: usize,
) -> Result<Array2<C64>, JcmError> {
    check_state(rho_q);
    let need = (p.m() + p.k()) as usize + 2;
    if dim < need {
        return Err(SusyError::DimensionTooSmall { need, got: dim }.into());
    }
    let gen = build_generators(dim, p.k())?;
    let (q, qd) = (gen.q.matrix(), gen.q_dagger.matrix());
    let (g, delta) = (p.g(), p.delta());
    let hamiltonian =
        |s: f64| q.mapv(|x| x * g * cis(-delta * s)) + qd.mapv(|x| x * g.conj() * cis(delta * s));

    let state = embed_state(rho_q, dim, p.m() as usize);
    let inner = commutator(&hamiltonian(t_prime), &state);
    let outer = commutator(&hamiltonian(t), &inner);
    Ok(trace_field(&outer, dim))
}

/// The three trace groups as 2×2 operators.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTerms {
    pub t1: Array2<C64>,
    pub t2: Array2<C64>,
    pub t3: Array2<C64>,
}

impl TraceTerms {
    pub fn total(&self) -> Array2<C64> {
        &self.t1 + &self.t2 + &self.t3
    }
}

/// Evaluates T1, T2, T3 from the Fock moments `⟨m|a^k(a†)^k|m⟩`,
/// `⟨m|(a†)^k a^k|m⟩` and `⟨m|(a†)^{2k}|m⟩ = δ_{k0}`, with no Fock matrices.
pub fn trace_terms(p: &JcmParams, rho_q: &Array2<C64>, t: f64, t_prime: f64) -> TraceTerms {
    check_state(rho_q);
    // Label basis: σ+ = |1⟩⟨0|, σ− = |0⟩⟨1|.
    let sp: Array2<C64> = array![[z(), z()], [C64::new(1.0, 0.0), z()]];
    let sm: Array2<C64> = array![[z(), C64::new(1.0, 0.0)], [z(), z()]];
    let proj_up = sp.dot(&sm);
    let proj_down = sm.dot(&sp);

    let gg = C64::new(p.coupling_sq(), 0.0);
    let (r, f) = (C64::new(p.rising(), 0.0), C64::new(p.falling(), 0.0));
    let pair = if p.k() == 0 { C64::new(1.0, 0.0) } else { z() };
    let (g, delta) = (p.g(), p.delta());
    let lag = delta * (t_prime - t);

    let left = (&proj_down * (cis(lag) * f) + &proj_up * (cis(-lag) * r)) * gg;
    let right = (&proj_down * (cis(-lag) * f) + &proj_up * (cis(lag) * r)) * gg;
    let t1 = left.dot(rho_q) + rho_q.dot(&right);

    let sum_phase = delta * (t + t_prime);
    let t2 = (sm.dot(rho_q).dot(&sm) * (g * g * cis(-sum_phase) * pair)
        + sp.dot(rho_q).dot(&sp) * (g.conj() * g.conj() * cis(sum_phase) * pair))
        * C64::new(-2.0, 0.0);

    let t3 = (sm.dot(rho_q).dot(&sp) * r + sp.dot(rho_q).dot(&sm) * f)
        * (-gg * C64::new(2.0 * lag.cos(), 0.0));

    TraceTerms { t1, t2, t3 }
}

/// `⟨0|T1|1⟩, ⟨0|T2|1⟩, ⟨0|T3|1⟩` in the reduced form whose time integral gives
/// `c1 ρ01 − c2 ρ10`.
pub fn closed_form_offdiag_terms(
    p: &JcmParams,
    rho01: C64,
    rho10: C64,
    t: f64,
    t_prime: f64,
) -> [C64; 3] {
    let gg = p.coupling_sq();
    let (r, f) = (p.rising(), p.falling());
    let lag = p.delta() * (t_prime - t);
    [
        cis(lag) * gg * (r + f) * rho01,
        z(),
        rho10 * (-gg * 2.0 * lag.cos() * r),
    ]
}

/// Brute-force second-order integrand for a two-level atom under a driving
/// field of constant intensity `e_sq` (real, non-negative amplitude) and the
/// σz-coupled reservoir.
///
/// Each reservoir mode is a truncated Fock space of `fock_dim` levels in its
/// thermal state. Terms mixing the field with a mode, or two different modes,
/// carry a factor `⟨a + a†⟩ = 0` and are omitted; everything else is computed
/// from explicit matrices. Returns the 2×2 atomic matrix in the label basis.
pub fn dephasing_oracle_integrand(
    atom: &DrivenAtomParams,
    e_sq: f64,
    bath: &ReservoirSpec,
    rho_q: &Array2<C64>,
    t: f64,
    t_prime: f64,
    fock_dim: usize,
) -> Result<Array2<C64>, JcmError> {
    check_state(rho_q);
    let (a, a_dag) = ladder_ops(fock_dim)?;
    let (a, a_dag) = (a.matrix(), a_dag.matrix());

    // Field part, atom only: H_f(s) = −(d/2)[E e^{iω0 s} σ+ + E* e^{−iω0 s} σ−].
    let sp: Array2<C64> = array![[z(), z()], [C64::new(1.0, 0.0), z()]];
    let sm: Array2<C64> = array![[z(), C64::new(1.0, 0.0)], [z(), z()]];
    let amp = -0.5 * atom.dipole_d() * e_sq.sqrt();
    let w0 = atom.omega0();
    let field = |s: f64| &sp * (cis(w0 * s) * amp) + &sm * (cis(-w0 * s) * amp);
    let mut out = commutator(&field(t), &commutator(&field(t_prime), rho_q));

    // Reservoir part: H_k(s) = g σz ⊗ (a e^{−iωs} + a† e^{iωs}) per mode.
    // σz = diag(−1, +1) in the label basis; the layout here is label-major.
    let n = fock_dim;
    let sz = [-1.0, 1.0];
    for mode in &bath.modes {
        let thermal: Vec<f64> = {
            let weights: Vec<f64> = (0..n)
                .map(|level| {
                    if bath.temperature == 0.0 {
                        if level == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        (-(level as f64) * mode.omega / bath.temperature).exp()
                    }
                })
                .collect();
            let norm: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / norm).collect()
        };
        let coupling = |s: f64| {
            let quad =
                a.mapv(|x| x * cis(-mode.omega * s)) + a_dag.mapv(|x| x * cis(mode.omega * s));
            let mut h = Array2::<C64>::zeros((2 * n, 2 * n));
            for (label, sign) in sz.iter().enumerate() {
                h.slice_mut(ndarray::s![
                    label * n..(label + 1) * n,
                    label * n..(label + 1) * n
                ])
                .assign(&quad.mapv(|x| x * (mode.g * sign)));
            }
            h
        };
        let mut state = Array2::<C64>::zeros((2 * n, 2 * n));
        for i in 0..2 {
            for j in 0..2 {
                for level in 0..n {
                    state[[i * n + level, j * n + level]] = rho_q[[i, j]] * thermal[level];
                }
            }
        }
        let full = commutator(&coupling(t), &commutator(&coupling(t_prime), &state));
        for i in 0..2 {
            for j in 0..2 {
                out[[i, j]] += (0..n)
                    .map(|level| full[[i * n + level, j * n + level]])
                    .sum::<C64>();
            }
        }
    }
    Ok(out)
}
