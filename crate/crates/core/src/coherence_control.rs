//! Off-diagonal dynamics of a two-level atom under a driving field plus a
//! dephasing reservoir, and the field envelope that cancels the decay.
//!
//! The coherences obey `ρ̇01 = −Γ(t) ρ01` and `ρ̇10 = −Γ(t) ρ10` with
//!
//! ```text
//! Γ(t) = 2 [ (sin ω0t / ω0) (d²/4) |E(t)|² + Σk 2gk²(2n̄k+1) sin(ωk t)/ωk ]
//! ```
//!
//! Choosing `|E(t)|²` so the bracket vanishes freezes the coherence. That
//! choice is not always physical: it can demand a negative intensity, or an
//! unbounded one where `sin ω0t` crosses zero. [`null_field`] classifies every
//! sample rather than hiding either case.

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{self, NumericsError};
use crate::reservoir::{reservoir_rate, ReservoirSpec};

pub const DEFAULT_SIN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoherenceError {
    #[error("atom.omega0 must be > 0 (got {0})")]
    NonPositiveFrequency(f64),
    #[error("atom.dipole_d must be > 0 (got {0})")]
    NonPositiveDipole(f64),
    #[error("sin_threshold must be > 0 (got {0})")]
    BadThreshold(f64),
    #[error("t = {t} lies outside the envelope grid [{start}, {stop}]")]
    OutOfRange { t: f64, start: f64, stop: f64 },
    #[error("envelope is undefined (singular sample) near t = {t}")]
    UndefinedEnvelope { t: f64 },
    #[error("evolution grid must start at the envelope start {expected} (got {got})")]
    GridMismatch { expected: f64, got: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenAtomParams {
    omega0: f64,
    dipole_d: f64,
}

impl DrivenAtomParams {
    pub fn new(omega0: f64, dipole_d: f64) -> Result<Self, CoherenceError> {
        if omega0 <= 0.0 || !omega0.is_finite() {
            return Err(CoherenceError::NonPositiveFrequency(omega0));
        }
        if dipole_d <= 0.0 || !dipole_d.is_finite() {
            return Err(CoherenceError::NonPositiveDipole(dipole_d));
        }
        Ok(Self { omega0, dipole_d })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn dipole_d(&self) -> f64 {
        self.dipole_d
    }

    /// `(sin ω0t / ω0)(d²/4)`, the factor multiplying `|E(t)|²` in the rate.
    fn field_factor(&self, t: f64) -> f64 {
        (self.omega0 * t).sin() / self.omega0 * self.dipole_d * self.dipole_d / 4.0
    }
}

/// Sampled `|E(t)|²`, linearly interpolated between samples. A NaN sample marks
/// an envelope value that does not exist (see [`Feasibility::Singular`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Envelope {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, CoherenceError> {
        numerics::validate_grid(&grid, 1)?;
        if grid.len() != values.len() {
            return Err(NumericsError::LengthMismatch {
                grid: grid.len(),
                values: values.len(),
            }
            .into());
        }
        Ok(Self { grid, values })
    }

    pub fn zero(grid: Vec<f64>) -> Result<Self, CoherenceError> {
        let values = vec![0.0; grid.len()];
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn stop(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Sub-envelope over samples `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self, CoherenceError> {
        Self::new(
            self.grid[range.clone()].to_vec(),
            self.values[range].to_vec(),
        )
    }

    pub fn value_at(&self, t: f64) -> Result<f64, CoherenceError> {
        let (start, stop) = (self.start(), self.stop());
        if !(t >= start && t <= stop) {
            return Err(CoherenceError::OutOfRange { t, start, stop });
        }
        // First index with grid[idx] >= t.
        let idx = self.grid.partition_point(|&x| x < t);
        let v = if self.grid[idx] == t {
            self.values[idx]
        } else {
            let (t0, t1) = (self.grid[idx - 1], self.grid[idx]);
            let (v0, v1) = (self.values[idx - 1], self.values[idx]);
            v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        };
        if v.is_nan() {
            Err(CoherenceError::UndefinedEnvelope { t })
        } else {
            Ok(v)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Feasibility {
    /// `|E|² ≥ 0` and finite.
    Feasible,
    /// Nulling needs `|E|² < 0`.
    InfeasibleNegative,
    /// `sin ω0t` vanishes while the reservoir rate does not.
    Singular,
    /// Both factors vanish; any finite field works to threshold precision.
    Indeterminate,
}

impl Feasibility {
    pub fn label(&self) -> &'static str {
        match self {
            Feasibility::Feasible => "FEASIBLE",
            Feasibility::InfeasibleNegative => "INFEASIBLE_NEGATIVE",
            Feasibility::Singular => "SINGULAR",
            Feasibility::Indeterminate => "INDETERMINATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub times: Vec<f64>,
    pub classes: Vec<Feasibility>,
}

impl FeasibilityReport {
    pub fn count(&self, class: Feasibility) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// Maximal runs of consecutive FEASIBLE samples, as index ranges.
    pub fn feasible_windows(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in self.classes.iter().enumerate() {
            match (c, start) {
                (Feasibility::Feasible, None) => start = Some(i),
                (Feasibility::Feasible, Some(_)) => {}
                (_, Some(s)) => {
                    out.push(s..i);
                    start = None;
                }
                (_, None) => {}
            }
        }
        if let Some(s) = start {
            out.push(s..self.classes.len());
        }
        out
    }
}

/// `Γ(t)` with the envelope interpolated at `t`.
pub fn total_rate(
    atom: &DrivenAtomParams,
    env: &Envelope,
    bath: &ReservoirSpec,
    t: f64,
) -> Result<f64, CoherenceError> {
    let e2 = env.value_at(t)?;
    Ok(rate_with_field(atom, bath, e2, t))
}

fn rate_with_field(atom: &DrivenAtomParams, bath: &ReservoirSpec, e2: f64, t: f64) -> f64 {
    2.0 * (atom.field_factor(t) * e2 + reservoir_rate(bath, t))
}

/// Solves the nulling condition for `|E(t)|²` at every grid sample.
///
/// Where `|sin ω0t| < sin_threshold` no value is computed: the sample is
/// INDETERMINATE (stored as 0) when the reservoir rate is also below threshold
/// relative to [`ReservoirSpec::rate_scale`], otherwise SINGULAR (stored as
/// NaN). Negative solutions are kept as-is and flagged.
pub fn null_field(
    atom: &DrivenAtomParams,
    bath: &ReservoirSpec,
    grid: &[f64],
    sin_threshold: f64,
) -> Result<(Envelope, FeasibilityReport), CoherenceError> {
    if sin_threshold <= 0.0 || !sin_threshold.is_finite() {
        return Err(CoherenceError::BadThreshold(sin_threshold));
    }
    numerics::validate_grid(grid, 1)?;
    let scale = bath.rate_scale();
    let d2 = atom.dipole_d * atom.dipole_d;

    let mut values = Vec::with_capacity(grid.len());
    let mut classes = Vec::with_capacity(grid.len());
    for &t in grid {
        let s = (atom.omega0 * t).sin();
        let rate = reservoir_rate(bath, t);
        let (value, class) = if s.abs() >= sin_threshold {
            // + 0.0 folds a −0 result into +0.
            let v = -(4.0 / d2) * (atom.omega0 / s) * rate + 0.0;
            if v >= 0.0 && v.is_finite() {
                (v, Feasibility::Feasible)
            } else {
                (v, Feasibility::InfeasibleNegative)
            }
        } else if rate.abs() <= sin_threshold * scale {
            (0.0, Feasibility::Indeterminate)
        } else {
            (f64::NAN, Feasibility::Singular)
        };
        values.push(value);
        classes.push(class);
    }
    Ok((
        Envelope::new(grid.to_vec(), values)?,
        FeasibilityReport {
            times: grid.to_vec(),
            classes,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffDiagState {
    pub rho01: C64,
    pub rho10: C64,
}

impl OffDiagState {
    pub fn new(rho01: C64, rho10: C64) -> Self {
        Self { rho01, rho10 }
    }

    /// Hermitian pair with `ρ10 = conj(ρ01)`.
    pub fn hermitian(rho01: C64) -> Self {
        Self {
            rho01,
            rho10: rho01.conj(),
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.rho10 - self.rho01.conj()).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceEvolution {
    pub times: Vec<f64>,
    /// `Γ` at each grid time.
    pub rates: Vec<f64>,
    /// `ρ(0)·exp(−∫Γ)`, trapezoid quadrature on the grid.
    pub quadrature: Vec<OffDiagState>,
    /// RK4 on the same grid, `Γ` interpolated at the stage times.
    pub rk4: Vec<OffDiagState>,
}

impl CoherenceEvolution {
    /// The reported trajectory.
    pub fn trajectory(&self) -> &[OffDiagState] {
        &self.quadrature
    }
}

pub fn evolve_offdiag(
    atom: &DrivenAtomParams,
    env: &Envelope,
    bath: &ReservoirSpec,
    rho0: OffDiagState,
    grid: &[f64],
) -> Result<CoherenceEvolution, CoherenceError> {
    numerics::validate_grid(grid, 2)?;
    if grid[0] != env.start() {
        return Err(CoherenceError::GridMismatch {
            expected: env.start(),
            got: grid[0],
        });
    }
    let rates = grid
        .iter()
        .map(|&t| total_rate(atom, env, bath, t))
        .collect::<Result<Vec<_>, _>>()?;
    let exponents = numerics::cumulative_trapezoid(grid, &rates)?;
    let quadrature = exponents
        .iter()
        .map(|&x| {
            let damp = (-x).exp();
            OffDiagState::new(rho0.rho01 * damp, rho0.rho10 * damp)
        })
        .collect();

    // The envelope was range-checked at every grid point, so stage times in
    // between can only fail on a singular neighbour; that error is captured.
    let failure = std::cell::Cell::new(None);
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let gamma = match total_rate(atom, env, bath, t) {
            Ok(g) => g,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        };
        dy[0] = -y[0] * gamma;
        dy[1] = -y[1] * gamma;
    };
    let rk = numerics::rk4_integrate(rhs, &[rho0.rho01, rho0.rho10], grid);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let rk4 = rk?
        .into_iter()
        .map(|y| OffDiagState::new(y[0], y[1]))
        .collect();

    Ok(CoherenceEvolution {
        times: grid.to_vec(),
        rates,
        quadrature,
        rk4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::TimeGrid;
    use crate::reservoir::ReservoirMode;

    fn resonant_bath() -> ReservoirSpec {
        ReservoirSpec::single(1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn atom_validation() {
        assert!(DrivenAtomParams::new(0.0, 1.0).is_err());
        assert!(DrivenAtomParams::new(1.0, 0.0).is_err());
        assert!(DrivenAtomParams::new(1.0, 2.0).is_ok());
    }

    #[test]
    fn envelope_interpolates_linearly() {
        let env = Envelope::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, -2.0]).unwrap();
        assert_eq!(env.value_at(0.5).unwrap(), 1.0);
        assert_eq!(env.value_at(2.0).unwrap(), 0.0);
        assert_eq!(env.value_at(3.0).unwrap(), -2.0);
        assert!(matches!(
            env.value_at(3.1),
            Err(CoherenceError::OutOfRange { .. })
        ));
        assert!(matches!(
            env.value_at(-0.1),
            Err(CoherenceError::OutOfRange { .. })
        ));
        assert!(Envelope::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(Envelope::new(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn rate_without_field_is_twice_reservoir_rate() {
        let atom = DrivenAtomParams::new(1.3, 0.7).unwrap();
        let grid = TimeGrid::new(0.0, 5.0, 0.1).unwrap().points();
        let env = Envelope::zero(grid.clone()).unwrap();
        for &t in &grid {
            let g = total_rate(&atom, &env, &resonant_bath(), t).unwrap();
            assert!((g - 4.0 * t.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn rate_vanishes_at_origin() {
        let atom = DrivenAtomParams::new(2.0, 3.0).unwrap();
        let env = Envelope::new(vec![0.0, 1.0], vec![5.0, 5.0]).unwrap();
        assert_eq!(total_rate(&atom, &env, &resonant_bath(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn resonant_bath_needs_negative_intensity() {
        let atom = DrivenAtomParams::new(1.0, 2.0).unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 0.01).unwrap().points();
        let (env, report) =
            null_field(&atom, &resonant_bath(), &grid, DEFAULT_SIN_THRESHOLD).unwrap();
        assert_eq!(report.count(Feasibility::Feasible), 0);
        for ((v, c), t) in env.values().iter().zip(&report.classes).zip(&grid) {
            match c {
                Feasibility::InfeasibleNegative => assert!((v + 2.0).abs() < 1e-12, "t={t} v={v}"),
                Feasibility::Indeterminate => assert!((t.sin()).abs() < 1e-6),
                other => panic!("unexpected {other:?} at t={t}"),
            }
        }
        assert_eq!(report.classes[0], Feasibility::Indeterminate);
    }

    #[test]
    fn detuned_mode_gives_feasible_sample() {
        let atom = DrivenAtomParams::new(1.0, 2.0).unwrap();
        let bath = ReservoirSpec::single(2.0, 1.0, 0.0).unwrap();
        let (env, report) = null_field(&atom, &bath, &[2.0], DEFAULT_SIN_THRESHOLD).unwrap();
        let expected = -(4.0f64).sin() / (2.0f64).sin();
        assert!((env.values()[0] - expected).abs() < 1e-14);
        assert!((env.values()[0] - 0.8323).abs() < 1e-4);
        assert_eq!(report.classes[0], Feasibility::Feasible);
    }

    #[test]
    fn uncoupled_bath_needs_no_field() {
        let atom = DrivenAtomParams::new(1.0, 1.5).unwrap();
        let bath = ReservoirSpec::new(
            vec![
                ReservoirMode::new(1.0, 0.0).unwrap(),
                ReservoirMode::new(3.0, 0.0).unwrap(),
            ],
            2.0,
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 7.0, 0.05).unwrap().points();
        let (env, report) = null_field(&atom, &bath, &grid, DEFAULT_SIN_THRESHOLD).unwrap();
        for (v, c) in env.values().iter().zip(&report.classes) {
            assert_eq!(*v, 0.0);
            assert!(v.is_sign_positive());
            assert!(matches!(
                c,
                Feasibility::Feasible | Feasibility::Indeterminate
            ));
        }
    }

    #[test]
    fn singular_sample_is_flagged() {
        // ω0 = 1 at t = π while a ω = 1.5 mode keeps the rate nonzero.
        let atom = DrivenAtomParams::new(1.0, 1.0).unwrap();
        let bath = ReservoirSpec::single(1.5, 1.0, 0.0).unwrap();
        let (env, report) =
            null_field(&atom, &bath, &[std::f64::consts::PI], DEFAULT_SIN_THRESHOLD).unwrap();
        assert_eq!(report.classes[0], Feasibility::Singular);
        assert!(env.values()[0].is_nan());
        assert!(matches!(
            env.value_at(std::f64::consts::PI),
            Err(CoherenceError::UndefinedEnvelope { .. })
        ));
    }

    #[test]
    fn null_field_rejects_bad_threshold() {
        let atom = DrivenAtomParams::new(1.0, 1.0).unwrap();
        assert!(null_field(&atom, &resonant_bath(), &[0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn windows_cover_feasible_runs() {
        use Feasibility::*;
        let report = FeasibilityReport {
            times: (0..7).map(f64::from).collect(),
            classes: vec![
                Feasible,
                Feasible,
                Singular,
                Feasible,
                InfeasibleNegative,
                Feasible,
                Feasible,
            ],
        };
        assert_eq!(report.feasible_windows(), vec![0..2, 3..4, 5..7]);
    }

    #[test]
    fn nulled_rate_is_zero_on_grid() {
        let atom = DrivenAtomParams::new(1.0, 2.0).unwrap();
        let bath = ReservoirSpec::new(
            vec![
                ReservoirMode::new(2.0, 1.0).unwrap(),
                ReservoirMode::new(4.0, 0.5).unwrap(),
            ],
            0.5,
        )
        .unwrap();
        let grid = TimeGrid::new(1.8, 2.8, 0.01).unwrap().points();
        let (env, report) = null_field(&atom, &bath, &grid, DEFAULT_SIN_THRESHOLD).unwrap();
        assert_eq!(report.count(Feasibility::Feasible), grid.len());
        for &t in &grid {
            assert!(total_rate(&atom, &env, &bath, t).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn frozen_coherence() {
        let atom = DrivenAtomParams::new(1.0, 2.0).unwrap();
        let bath = ReservoirSpec::single(2.0, 1.0, 0.0).unwrap();
        let grid = TimeGrid::new(1.7, 3.0, 1e-3).unwrap().points();
        let (env, report) = null_field(&atom, &bath, &grid, DEFAULT_SIN_THRESHOLD).unwrap();
        assert_eq!(report.count(Feasibility::Feasible), grid.len());
        let rho0 = OffDiagState::hermitian(C64::new(0.3, 0.1));
        let ev = evolve_offdiag(&atom, &env, &bath, rho0, &grid).unwrap();
        for s in ev.trajectory() {
            assert!((s.rho01 - rho0.rho01).norm() < 1e-8);
            assert!(s.hermiticity_defect() < 1e-10);
        }
    }

    #[test]
    fn free_decay_matches_closed_form() {
        let atom = DrivenAtomParams::new(1.0, 2.0).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 1e-3).unwrap().points();
        let env = Envelope::zero(grid.clone()).unwrap();
        let rho0 = OffDiagState::hermitian(C64::new(0.4, -0.2));
        let ev = evolve_offdiag(&atom, &env, &resonant_bath(), rho0, &grid).unwrap();
        for ((t, q), r) in grid.iter().zip(&ev.quadrature).zip(&ev.rk4) {
            let exact = rho0.rho01 * (-4.0 * (1.0 - t.cos())).exp();
            assert!((q.rho01 - exact).norm() <= 1e-6 * exact.norm());
            assert!((q.rho01 - r.rho01).norm() <= 1e-6 * q.rho01.norm());
            assert!(q.hermiticity_defect() < 1e-10);
            assert!(r.hermiticity_defect() < 1e-10);
        }
    }

    #[test]
    fn zero_coherence_stays_zero() {
        let atom = DrivenAtomParams::new(1.0, 2.0).unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 0.01).unwrap().points();
        let env = Envelope::zero(grid.clone()).unwrap();
        let zero = OffDiagState::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let ev = evolve_offdiag(&atom, &env, &resonant_bath(), zero, &grid).unwrap();
        assert!(ev.quadrature.iter().chain(&ev.rk4).all(|s| *s == zero));
    }

    #[test]
    fn decay_is_monotone_where_rate_positive() {
        let atom = DrivenAtomParams::new(1.0, 2.0).unwrap();
        let grid = TimeGrid::new(0.0, 6.0, 1e-2).unwrap().points();
        let env = Envelope::zero(grid.clone()).unwrap();
        let rho0 = OffDiagState::hermitian(C64::new(0.5, 0.0));
        let ev = evolve_offdiag(&atom, &env, &resonant_bath(), rho0, &grid).unwrap();
        for i in 1..grid.len() {
            if ev.rates[i - 1] > 0.0 && ev.rates[i] > 0.0 {
                assert!(ev.quadrature[i].rho01.norm() < ev.quadrature[i - 1].rho01.norm());
            }
        }
    }

    #[test]
    fn evolution_grid_must_start_with_envelope() {
        let atom = DrivenAtomParams::new(1.0, 2.0).unwrap();
        let env = Envelope::zero(vec![0.0, 1.0, 2.0]).unwrap();
        let rho0 = OffDiagState::hermitian(C64::new(0.5, 0.0));
        assert!(matches!(
            evolve_offdiag(&atom, &env, &resonant_bath(), rho0, &[0.5, 1.0]),
            Err(CoherenceError::GridMismatch { .. })
        ));
        assert!(matches!(
            evolve_offdiag(&atom, &env, &resonant_bath(), rho0, &[0.0, 2.5]),
            Err(CoherenceError::OutOfRange { .. })
        ));
    }
}
