//! Off-diagonal (polarization) dynamics of the multiphoton Jaynes–Cummings
//! model with the field held in a Fock state `|m⟩`.
//!
//! The coherences obey
//!
//! ```text
//! ρ̇01 = c1(t) ρ01 − c2(t) ρ10
//! ρ̇10 = c1*(t) ρ10 − c2(t) ρ01
//! c1(t) = −|g|² [(m+k)!/m! + m!/(m−k)!] (1 − e^{−iδt})/(iδ)
//! c2(t) = −|g|² (m+k)!/m! · 2 sin(δt)/δ
//! ```
//!
//! and `u = ρ01 + ρ10`, `v = i(ρ01 − ρ10)` follow the equivalent real system.
//! At zero detuning the solutions are Gaussians in `t`, see
//! [`closed_form_zero_detuning`].
//!
//! Atomic labels: `|1⟩` has σz = +1 and `|0⟩` has σz = −1.
//!
//! [`oracle`] recomputes the coupling integrand by brute force on truncated
//! Fock matrices. It agrees with the `c1` channel and disagrees with the `c2`
//! channel; see the module docs there.

pub mod oracle;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherence_control::OffDiagState;
use crate::numerics::{self, NumericsError};
use crate::susy_fock::{falling_moment, rising_moment, SusyError};

/// Below this `|δ|·t` the phase integral uses its Taylor series.
pub const SMALL_PHASE: f64 = 1e-6;
/// Trajectories abort once `|u|` exceeds this.
pub const GROWTH_LIMIT: f64 = 1e12;
pub const DEFAULT_STEP: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JcmError {
    #[error("jcm.{field} must be finite (got {value})")]
    NonFinite { field: &'static str, value: f64 },
    #[error("detuning must be zero for the closed form (got {0})")]
    NonzeroDetuning(f64),
    #[error(
        "|u| exceeded {limit:e} at t = {t}; the linearized dynamics has left its validity regime"
    )]
    GrowthLimit { t: f64, limit: f64 },
    #[error("integration step must be > 0 (got {0})")]
    NonPositiveStep(f64),
    #[error(transparent)]
    Susy(#[from] SusyError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcmParams {
    g: C64,
    k: u32,
    m: u32,
    omega0: f64,
    omega: f64,
    delta: f64,
}

impl JcmParams {
    pub fn new(g: C64, k: u32, m: u32, omega0: f64, omega: f64) -> Result<Self, JcmError> {
        for (field, value) in [
            ("g", g.re),
            ("g", g.im),
            ("omega0", omega0),
            ("omega", omega),
        ] {
            if !value.is_finite() {
                return Err(JcmError::NonFinite { field, value });
            }
        }
        // Validates that both moments are representable.
        rising_moment(m, k)?;
        Ok(Self {
            g,
            k,
            m,
            omega0,
            omega,
            delta: f64::from(k) * omega - omega0,
        })
    }

    /// Picks `ω0 = kω − δ`. The stored detuning is recomputed from the
    /// frequencies, so it can differ from `delta` in the last bits.
    pub fn with_detuning(g: C64, k: u32, m: u32, omega: f64, delta: f64) -> Result<Self, JcmError> {
        Self::new(g, k, m, f64::from(k) * omega - delta, omega)
    }

    pub fn g(&self) -> C64 {
        self.g
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn omega0(&self) -> f64 {
        self.omega0
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `g g*`.
    pub fn coupling_sq(&self) -> f64 {
        self.g.norm_sqr()
    }

    /// `(m+k)!/m!`
    pub fn rising(&self) -> f64 {
        rising_moment(self.m, self.k).expect("validated at construction")
    }

    /// `m!/(m−k)!`, zero for `m < k`.
    pub fn falling(&self) -> f64 {
        falling_moment(self.m, self.k).expect("validated at construction")
    }
}

/// Whether `Im c1` enters the integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum C1Mode {
    #[default]
    Full,
    /// Keep `Re c1` only, dropping the frequency-shift part.
    RealPart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientPair {
    pub c1: C64,
    pub c2: f64,
}

/// `(1 − e^{−iδt})/(iδ) = ∫0^t e^{−iδs} ds`.
pub fn phase_integral(delta: f64, t: f64) -> C64 {
    let x = delta * t;
    if x.abs() < SMALL_PHASE {
        // t − iδt²/2 − δ²t³/6 + iδ³t⁴/24
        let re = t * (1.0 - x * x / 6.0);
        let im = -t * x / 2.0 * (1.0 - x * x / 12.0);
        C64::new(re, im)
    } else {
        let half = (0.5 * x).sin();
        C64::new(x.sin() / delta, -2.0 * half * half / delta)
    }
}

/// `2 sin(δt)/δ`, the real value of the `c2` bracket.
pub fn sine_kernel(delta: f64, t: f64) -> f64 {
    let x = delta * t;
    if x.abs() < SMALL_PHASE {
        2.0 * t * (1.0 - x * x / 6.0)
    } else {
        2.0 * x.sin() / delta
    }
}

/// The `c2` bracket as literally written: the sum of the forward integral and
/// `(1 − e^{iδt})/(−iδ)`. Its imaginary part cancels analytically.
pub fn c2_bracket_complex(delta: f64, t: f64) -> C64 {
    phase_integral(delta, t) + phase_integral(-delta, t)
}

/// Precomputed moments for repeated coefficient evaluation.
#[derive(Debug, Clone, Copy)]
struct CoefficientModel {
    gg: f64,
    rising: f64,
    falling: f64,
    delta: f64,
    mode: C1Mode,
}

impl CoefficientModel {
    fn new(p: &JcmParams, mode: C1Mode) -> Self {
        Self {
            gg: p.coupling_sq(),
            rising: p.rising(),
            falling: p.falling(),
            delta: p.delta,
            mode,
        }
    }

    fn at(&self, t: f64) -> CoefficientPair {
        let c1 = phase_integral(self.delta, t) * (-self.gg * (self.rising + self.falling));
        let c1 = match self.mode {
            C1Mode::Full => c1,
            C1Mode::RealPart => C64::new(c1.re, 0.0),
        };
        CoefficientPair {
            c1,
            c2: -self.gg * self.rising * sine_kernel(self.delta, t),
        }
    }
}

pub fn coefficients(p: &JcmParams, t: f64) -> CoefficientPair {
    CoefficientModel::new(p, C1Mode::Full).at(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizationState {
    pub u: f64,
    pub v: f64,
}

impl PolarizationState {
    /// `u = ρ01 + ρ10`, `v = i(ρ01 − ρ10)`. Real parts only; the imaginary
    /// parts vanish for a Hermitian pair.
    pub fn from_offdiag(s: &OffDiagState) -> Self {
        let (u, v) = uv_complex(s);
        Self { u: u.re, v: v.re }
    }

    pub fn to_offdiag(&self) -> OffDiagState {
        // ρ01 = (u − iv)/2, ρ10 = (u + iv)/2
        OffDiagState::new(
            C64::new(self.u, -self.v) * 0.5,
            C64::new(self.u, self.v) * 0.5,
        )
    }
}

/// Complex `(u, v)` for an arbitrary pair.
pub fn uv_complex(s: &OffDiagState) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    (s.rho01 + s.rho10, i * (s.rho01 - s.rho10))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub lambda_u: f64,
    pub lambda_v: f64,
}

/// `λu = −|g|²[m!/(m−k)! − (m+k)!/m!]`, `λv = −|g|²[m!/(m−k)! + 3(m+k)!/m!]`.
pub fn lambda_exponents(p: &JcmParams) -> Exponents {
    let gg = p.coupling_sq();
    let (r, f) = (p.rising(), p.falling());
    Exponents {
        lambda_u: -gg * (f - r),
        lambda_v: -gg * (f + 3.0 * r),
    }
}

pub fn closed_form_zero_detuning(
    p: &JcmParams,
    u0: f64,
    v0: f64,
    t: f64,
) -> Result<PolarizationState, JcmError> {
    if p.delta != 0.0 {
        return Err(JcmError::NonzeroDetuning(p.delta));
    }
    let e = lambda_exponents(p);
    Ok(PolarizationState {
        u: u0 * (0.5 * e.lambda_u * t * t).exp(),
        v: v0 * (0.5 * e.lambda_v * t * t).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Largest RK4 step; grid intervals are subdivided to respect it.
    pub step: f64,
    pub c1_mode: C1Mode,
    pub growth_limit: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            c1_mode: C1Mode::Full,
            growth_limit: GROWTH_LIMIT,
        }
    }
}

fn check_options(opts: &EvolveOptions) -> Result<(), JcmError> {
    if opts.step <= 0.0 || !opts.step.is_finite() {
        return Err(JcmError::NonPositiveStep(opts.step));
    }
    Ok(())
}

fn map_guard(err: NumericsError, limit: f64) -> JcmError {
    match err {
        NumericsError::GuardTripped { t, .. } | NumericsError::NonFinite { t, .. } => {
            JcmError::GrowthLimit { t, limit }
        }
        other => other.into(),
    }
}

/// RK4 on the coupled complex pair `(ρ01, ρ10)`; one state per grid point.
pub fn evolve_offdiag(
    p: &JcmParams,
    rho01_0: C64,
    rho10_0: C64,
    grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<OffDiagState>, JcmError> {
    check_options(opts)?;
    let model = CoefficientModel::new(p, opts.c1_mode);
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let c = model.at(t);
        dy[0] = c.c1 * y[0] - y[1] * c.c2;
        dy[1] = c.c1.conj() * y[1] - y[0] * c.c2;
    };
    let limit = opts.growth_limit;
    let guard = |_: f64, y: &[C64]| (y[0] + y[1]).norm() <= limit;
    let traj = numerics::rk4_integrate_with(rhs, &[rho01_0, rho10_0], grid, Some(opts.step), guard)
        .map_err(|e| map_guard(e, limit))?;
    Ok(traj
        .into_iter()
        .map(|y| OffDiagState::new(y[0], y[1]))
        .collect())
}

/// RK4 on the real `(u, v)` system
///
/// ```text
/// u̇ = (Re c1 − c2) u + Im c1 · v
/// v̇ = (Re c1 + c2) v − Im c1 · u
/// ```
pub fn evolve_uv(
    p: &JcmParams,
    u0: f64,
    v0: f64,
    grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<PolarizationState>, JcmError> {
    check_options(opts)?;
    let model = CoefficientModel::new(p, opts.c1_mode);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let c = model.at(t);
        dy[0] = (c.c1.re - c.c2) * y[0] + c.c1.im * y[1];
        dy[1] = (c.c1.re + c.c2) * y[1] - c.c1.im * y[0];
    };
    let limit = opts.growth_limit;
    let guard = |_: f64, y: &[f64]| y[0].abs() <= limit;
    let traj = numerics::rk4_integrate_with(rhs, &[u0, v0], grid, Some(opts.step), guard)
        .map_err(|e| map_guard(e, limit))?;
    Ok(traj
        .into_iter()
        .map(|y| PolarizationState { u: y[0], v: y[1] })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::TimeGrid;
    use std::f64::consts::PI;

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn p(m: u32, k: u32, delta: f64) -> JcmParams {
        JcmParams::with_detuning(one(), k, m, 1.0, delta).unwrap()
    }

    #[test]
    fn detuning_is_derived_from_frequencies() {
        let q = JcmParams::new(one(), 2, 3, 1.5, 1.0).unwrap();
        assert_eq!(q.delta(), 0.5);
        assert_eq!(p(3, 2, 0.0).delta(), 0.0);
        assert!(JcmParams::new(C64::new(f64::NAN, 0.0), 1, 1, 1.0, 1.0).is_err());
        assert!(matches!(
            JcmParams::new(one(), 100, 80, 1.0, 1.0),
            Err(JcmError::Susy(SusyError::MomentOverflow { .. }))
        ));
    }

    #[test]
    fn zero_detuning_coefficients() {
        let q = p(3, 2, 0.0);
        for t in [0.0, 0.25, 1.0, 3.0] {
            let c = coefficients(&q, t);
            assert!((c.c1 - C64::new(-26.0 * t, 0.0)).norm() < 1e-12);
            assert_eq!(c.c1.im, 0.0);
            assert!((c.c2 + 40.0 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficients_vanish_at_origin() {
        for (m, k, d) in [(0, 0, 0.0), (3, 2, 1.0), (5, 1, -2.0)] {
            let c = coefficients(&p(m, k, d), 0.0);
            assert_eq!(c.c1, C64::new(0.0, 0.0));
            assert_eq!(c.c2, 0.0);
        }
    }

    #[test]
    fn detuned_half_period() {
        let q = JcmParams::new(one(), 2, 3, 1.0, 1.0).unwrap();
        assert_eq!(q.delta(), 1.0);
        let c = coefficients(&q, PI);
        assert!(c.c2.abs() < 1e-13);
        assert!((c.c1 - C64::new(0.0, 52.0)).norm() < 1e-12);
    }

    #[test]
    fn small_detuning_is_continuous() {
        for (m, k) in [(3, 2), (0, 0), (5, 1)] {
            let g = C64::new(0.6, 0.8);
            let q0 = JcmParams::new(g, k, m, f64::from(k), 1.0).unwrap();
            let q1 = JcmParams::new(g, k, m, f64::from(k) - 1e-8, 1.0).unwrap();
            assert_eq!(q0.delta(), 0.0);
            for t in [0.1, 0.5, 1.0] {
                let (a, b) = (coefficients(&q0, t), coefficients(&q1, t));
                assert!((a.c1 - b.c1).norm() <= 1e-6 * a.c1.norm());
                assert!(rel(b.c2, a.c2) <= 1e-6);
            }
        }
    }

    #[test]
    fn series_and_direct_branches_meet() {
        // Just below and above the switch.
        let t = 1.0;
        for d in [0.99e-6, 1.01e-6] {
            let s = phase_integral(d, t);
            let direct = (one() - C64::new(0.0, -d * t).exp()) / C64::new(0.0, d);
            assert!((s - direct).norm() < 1e-9);
        }
    }

    #[test]
    fn c2_bracket_is_real() {
        for d in [0.0, 1e-9, 1e-3, 0.5, 2.0, -1.3] {
            for i in 0..20 {
                let t = 0.31 * i as f64;
                let z = c2_bracket_complex(d, t);
                assert!(z.im.abs() < 1e-12, "δ={d} t={t}: {z}");
                assert!((z.re - sine_kernel(d, t)).abs() < 1e-12 * (1.0 + z.re.abs()));
            }
        }
    }

    #[test]
    fn real_part_mode_drops_imaginary_c1() {
        let q = p(2, 1, 0.7);
        let full = CoefficientModel::new(&q, C1Mode::Full).at(0.8);
        let real = CoefficientModel::new(&q, C1Mode::RealPart).at(0.8);
        assert!(full.c1.im != 0.0);
        assert_eq!(real.c1, C64::new(full.c1.re, 0.0));
        assert_eq!(real.c2, full.c2);
    }

    #[test]
    fn exponent_examples() {
        let e = lambda_exponents(&p(3, 2, 0.0));
        assert_eq!((e.lambda_u, e.lambda_v), (14.0, -66.0));
        let e = lambda_exponents(
            &JcmParams::with_detuning(C64::new(0.0, 2.0), 0, 7, 1.0, 0.0).unwrap(),
        );
        assert_eq!(e.lambda_u, 0.0);
        assert_eq!(e.lambda_v, -16.0);
        let s = closed_form_zero_detuning(&p(3, 2, 0.0), 0.4, -0.9, 0.0).unwrap();
        assert_eq!((s.u, s.v), (0.4, -0.9));
        assert!(matches!(
            closed_form_zero_detuning(&p(3, 2, 0.5), 1.0, 0.0, 1.0),
            Err(JcmError::NonzeroDetuning(_))
        ));
    }

    #[test]
    fn exponent_sign_law() {
        for m in 0..8 {
            for k in 0..4 {
                let e = lambda_exponents(&p(m, k, 0.0));
                if k == 0 {
                    assert_eq!(e.lambda_u, 0.0);
                } else {
                    assert!(e.lambda_u > 0.0);
                }
                assert!(e.lambda_v < 0.0);
            }
        }
    }

    #[test]
    fn zero_initial_coherence_stays_zero() {
        let grid = TimeGrid::new(0.0, 1.0, 0.1).unwrap().points();
        let z = C64::new(0.0, 0.0);
        let traj = evolve_offdiag(&p(3, 2, 0.4), z, z, &grid, &EvolveOptions::default()).unwrap();
        assert!(traj.iter().all(|s| s.rho01 == z && s.rho10 == z));
    }

    #[test]
    fn offdiag_matches_zero_detuning_closed_form() {
        let q = p(3, 2, 0.0);
        let grid = TimeGrid::new(0.0, 0.5, 0.01).unwrap().points();
        let half = C64::new(0.5, 0.0);
        let traj = evolve_offdiag(&q, half, half, &grid, &EvolveOptions::default()).unwrap();
        for (t, s) in grid.iter().zip(&traj) {
            let pol = PolarizationState::from_offdiag(s);
            assert!(rel(pol.u, (7.0 * t * t).exp()) < 1e-9);
            assert!(pol.v.abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_start_stays_hermitian() {
        let q = JcmParams::new(C64::new(0.3, -0.7), 2, 4, 1.2, 0.9).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 0.05).unwrap().points();
        let r = C64::new(0.2, 0.35);
        let traj = evolve_offdiag(&q, r, r.conj(), &grid, &EvolveOptions::default()).unwrap();
        assert!(traj.iter().all(|s| s.hermiticity_defect() < 1e-10));
    }

    #[test]
    fn uv_decouples_at_zero_detuning() {
        let q = p(3, 2, 0.0);
        let grid = TimeGrid::new(0.0, 0.5, 0.05).unwrap().points();
        let traj = evolve_uv(&q, 0.0, 1.0, &grid, &EvolveOptions::default()).unwrap();
        for (t, s) in grid.iter().zip(&traj) {
            assert_eq!(s.u, 0.0);
            assert!(rel(s.v, (-33.0 * t * t).exp()) < 1e-9);
        }
    }

    #[test]
    fn k0_dispersion_is_constant() {
        let q = p(4, 0, 0.0);
        let grid = TimeGrid::new(0.0, 2.0, 0.1).unwrap().points();
        let traj = evolve_uv(&q, 1.0, 0.0, &grid, &EvolveOptions::default()).unwrap();
        assert!(traj.iter().all(|s| (s.u - 1.0).abs() < 1e-12 && s.v == 0.0));
    }

    #[test]
    fn offdiag_and_uv_agree_off_resonance() {
        let q = JcmParams::new(C64::new(0.8, 0.3), 1, 2, 0.4, 1.1).unwrap();
        let grid = TimeGrid::new(0.0, 1.5, 0.05).unwrap().points();
        let start = PolarizationState { u: 0.7, v: -0.4 };
        let s0 = start.to_offdiag();
        let opts = EvolveOptions::default();
        let a = evolve_offdiag(&q, s0.rho01, s0.rho10, &grid, &opts).unwrap();
        let b = evolve_uv(&q, start.u, start.v, &grid, &opts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let (u, v) = uv_complex(x);
            assert!((u - C64::new(y.u, 0.0)).norm() < 1e-8);
            assert!((v - C64::new(y.v, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn polarization_round_trip() {
        let s = PolarizationState { u: 0.3, v: -1.25 };
        let back = PolarizationState::from_offdiag(&s.to_offdiag());
        assert_eq!(back, s);
        assert!(s.to_offdiag().hermiticity_defect() < 1e-16);
    }

    #[test]
    fn growth_guard_aborts() {
        let q = p(3, 2, 0.0);
        // u = exp(7t²) crosses 1e12 at t = sqrt(ln(1e12)/7) ≈ 1.983.
        let grid = TimeGrid::new(0.0, 3.0, 0.01).unwrap().points();
        let opts = EvolveOptions {
            step: 1e-3,
            ..EvolveOptions::default()
        };
        match evolve_uv(&q, 1.0, 0.0, &grid, &opts) {
            Err(JcmError::GrowthLimit { t, limit }) => {
                assert_eq!(limit, GROWTH_LIMIT);
                assert!((t - (1e12f64.ln() / 7.0).sqrt()).abs() < 2e-3, "t = {t}");
            }
            other => panic!("expected growth abort, got {other:?}"),
        }
        assert!(evolve_offdiag(&q, one() * 0.5, one() * 0.5, &grid, &opts).is_err());
    }

    #[test]
    fn rejects_bad_step() {
        let opts = EvolveOptions {
            step: 0.0,
            ..EvolveOptions::default()
        };
        assert_eq!(
            evolve_uv(&p(1, 1, 0.0), 1.0, 0.0, &[0.0, 1.0], &opts),
            Err(JcmError::NonPositiveStep(0.0))
        );
    }
}
