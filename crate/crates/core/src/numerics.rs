//! Deterministic numerical kernels shared by the dynamics modules: fixed-step
//! fourth-order Runge–Kutta for small linear systems, composite trapezoid
//! quadrature, and a central-difference residual check for trajectories.
//!
//! Everything here is a pure function of its inputs. Summation order is fixed,
//! so identical inputs give bit-identical outputs.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("grid.step must be > 0 (got {0})")]
    NonPositiveStep(f64),
    #[error("grid.stop must be > grid.start (start {start}, stop {stop})")]
    EmptyRange { start: f64, stop: f64 },
    #[error("time grid must be strictly increasing (violated at index {index})")]
    NotIncreasing { index: usize },
    #[error("time grid values must be finite (index {index})")]
    NonFiniteGrid { index: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("sample count mismatch: {grid} grid points, {values} values")]
    LengthMismatch { grid: usize, values: usize },
    #[error("state dimension must be >= 1")]
    EmptyState,
    #[error("non-finite state at step {index} (t = {t})")]
    NonFinite { index: usize, t: f64 },
    #[error("integration guard tripped at step {index} (t = {t})")]
    GuardTripped { index: usize, t: f64 },
}

/// Scalar types a trajectory can be made of.
pub trait StateScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn is_finite(&self) -> bool;
    fn magnitude(&self) -> f64;
}

impl StateScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl StateScalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Uniform sampling of `[start, stop]`. Points are `start + i*step`; the last
/// point is clamped to `stop`, so the final interval may be shorter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    stop: f64,
    step: f64,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, NumericsError> {
        if step <= 0.0 || !step.is_finite() {
            return Err(NumericsError::NonPositiveStep(step));
        }
        if stop <= start || !start.is_finite() || !stop.is_finite() {
            return Err(NumericsError::EmptyRange { start, stop });
        }
        Ok(Self { start, stop, step })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn points(&self) -> Vec<f64> {
        // A trailing sliver shorter than 1e-9 steps is absorbed into the
        // previous interval instead of producing a near-duplicate point.
        let span = (self.stop - self.start) / self.step;
        let intervals = ((span - 1e-9).ceil() as usize).max(1);
        let mut pts: Vec<f64> = (0..intervals)
            .map(|i| self.start + i as f64 * self.step)
            .collect();
        pts.push(self.stop);
        pts
    }
}

pub fn validate_grid(grid: &[f64], min_len: usize) -> Result<(), NumericsError> {
    if grid.len() < min_len {
        return Err(NumericsError::TooFewSamples {
            need: min_len,
            got: grid.len(),
        });
    }
    for (index, t) in grid.iter().enumerate() {
        if !t.is_finite() {
            return Err(NumericsError::NonFiniteGrid { index });
        }
    }
    for (index, w) in grid.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(NumericsError::NotIncreasing { index: index + 1 });
        }
    }
    Ok(())
}

/// Classic RK4 stepping exactly from grid point to grid point.
///
/// `rhs(t, y, dy)` writes the derivative into `dy`. Returns one state per grid
/// point, the first being `y0`.
pub fn rk4_integrate<S, F>(rhs: F, y0: &[S], grid: &[f64]) -> Result<Vec<Vec<S>>, NumericsError>
where
    S: StateScalar,
    F: Fn(f64, &[S], &mut [S]),
{
    rk4_integrate_with(rhs, y0, grid, None, |_, _| true)
}

/// RK4 with optional substepping and an abort guard.
///
/// Each grid interval is split into `ceil(dt / max_step)` equal substeps when
/// `max_step` is given. `guard(t, y)` is checked after every substep; a
/// `false` aborts with [`NumericsError::GuardTripped`]. Only grid-point states
/// are returned.
pub fn rk4_integrate_with<S, F, G>(
    rhs: F,
    y0: &[S],
    grid: &[f64],
    max_step: Option<f64>,
    guard: G,
) -> Result<Vec<Vec<S>>, NumericsError>
where
    S: StateScalar,
    F: Fn(f64, &[S], &mut [S]),
    G: Fn(f64, &[S]) -> bool,
{
    let n = y0.len();
    if n == 0 {
        return Err(NumericsError::EmptyState);
    }
    validate_grid(grid, 1)?;
    if let Some(h) = max_step {
        if h <= 0.0 || !h.is_finite() {
            return Err(NumericsError::NonPositiveStep(h));
        }
    }
    if y0.iter().any(|y| !y.is_finite()) {
        return Err(NumericsError::NonFinite {
            index: 0,
            t: grid[0],
        });
    }

    let mut out = Vec::with_capacity(grid.len());
    out.push(y0.to_vec());
    let mut y = y0.to_vec();
    let mut k1 = vec![S::zero(); n];
    let mut k2 = vec![S::zero(); n];
    let mut k3 = vec![S::zero(); n];
    let mut k4 = vec![S::zero(); n];
    let mut tmp = vec![S::zero(); n];
    let mut step_index = 0usize;

    for w in grid.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let substeps = match max_step {
            Some(h) => (((tb - ta) / h) - 1e-9).ceil().max(1.0) as usize,
            None => 1,
        };
        let h = (tb - ta) / substeps as f64;
        for s in 0..substeps {
            let t = ta + s as f64 * h;
            rhs(t, &y, &mut k1);
            for i in 0..n {
                tmp[i] = y[i] + k1[i] * (0.5 * h);
            }
            rhs(t + 0.5 * h, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + k2[i] * (0.5 * h);
            }
            rhs(t + 0.5 * h, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + k3[i] * h;
            }
            let t_next = if s + 1 == substeps { tb } else { t + h };
            rhs(t + h, &tmp, &mut k4);
            for i in 0..n {
                y[i] = y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            step_index += 1;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(NumericsError::NonFinite {
                    index: step_index,
                    t: t_next,
                });
            }
            if !guard(t_next, &y) {
                return Err(NumericsError::GuardTripped {
                    index: step_index,
                    t: t_next,
                });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Composite trapezoid rule over (possibly non-uniform) samples.
pub fn trapezoid<S: StateScalar>(grid: &[f64], values: &[S]) -> Result<S, NumericsError> {
    check_samples(grid, values)?;
    Ok(grid
        .windows(2)
        .zip(values.windows(2))
        .fold(S::zero(), |acc, (t, f)| {
            acc + (f[0] + f[1]) * (0.5 * (t[1] - t[0]))
        }))
}

/// Running trapezoid integral, `out[i] = ∫_{grid[0]}^{grid[i]} f`.
pub fn cumulative_trapezoid<S: StateScalar>(
    grid: &[f64],
    values: &[S],
) -> Result<Vec<S>, NumericsError> {
    check_samples(grid, values)?;
    let mut acc = S::zero();
    let mut out = Vec::with_capacity(grid.len());
    out.push(acc);
    for (t, f) in grid.windows(2).zip(values.windows(2)) {
        acc = acc + (f[0] + f[1]) * (0.5 * (t[1] - t[0]));
        out.push(acc);
    }
    Ok(out)
}

fn check_samples<S>(grid: &[f64], values: &[S]) -> Result<(), NumericsError> {
    if grid.len() != values.len() {
        return Err(NumericsError::LengthMismatch {
            grid: grid.len(),
            values: values.len(),
        });
    }
    validate_grid(grid, 2)
}

/// Largest component-wise gap between the central-difference derivative of a
/// trajectory and `rhs` evaluated on it. Interior points only; the residual is
/// O(h²) for a smooth solution.
pub fn finite_diff_check<S, F>(grid: &[f64], trajectory: &[Vec<S>], rhs: F) -> f64
where
    S: StateScalar,
    F: Fn(f64, &[S], &mut [S]),
{
    if grid.len() < 3 || trajectory.len() != grid.len() {
        return 0.0;
    }
    let n = trajectory[0].len();
    let mut f = vec![S::zero(); n];
    let mut worst = 0.0f64;
    for i in 1..grid.len() - 1 {
        let dt = grid[i + 1] - grid[i - 1];
        rhs(grid[i], &trajectory[i], &mut f);
        for c in 0..n {
            let d = (trajectory[i + 1][c] - trajectory[i - 1][c]) * (1.0 / dt);
            worst = worst.max((d - f[c]).magnitude());
        }
    }
    worst
}
