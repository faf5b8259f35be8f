//! Discrete thermal reservoir coupled to the atomic σz.
//!
//! Units are ħ = k_B = 1 throughout. Couplings are real, so every `g²` below is
//! `g * g`. All sums run over the modes in the order they were given.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReservoirError {
    #[error("mode frequency must be > 0 and finite (got {0})")]
    NonPositiveFrequency(f64),
    #[error("mode coupling must be finite (got {0})")]
    NonFiniteCoupling(f64),
    #[error("reservoir.temperature must be >= 0 and finite (got {0})")]
    NegativeTemperature(f64),
    #[error("reservoir.modes must be non-empty")]
    NoModes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirMode {
    pub omega: f64,
    pub g: f64,
}

impl ReservoirMode {
    pub fn new(omega: f64, g: f64) -> Result<Self, ReservoirError> {
        let mode = Self { omega, g };
        mode.validate()?;
        Ok(mode)
    }

    fn validate(&self) -> Result<(), ReservoirError> {
        if self.omega <= 0.0 || !self.omega.is_finite() {
            return Err(ReservoirError::NonPositiveFrequency(self.omega));
        }
        if !self.g.is_finite() {
            return Err(ReservoirError::NonFiniteCoupling(self.g));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    pub modes: Vec<ReservoirMode>,
    pub temperature: f64,
}

impl ReservoirSpec {
    pub fn new(modes: Vec<ReservoirMode>, temperature: f64) -> Result<Self, ReservoirError> {
        let spec = Self { modes, temperature };
        spec.validate()?;
        Ok(spec)
    }

    pub fn single(omega: f64, g: f64, temperature: f64) -> Result<Self, ReservoirError> {
        Self::new(vec![ReservoirMode::new(omega, g)?], temperature)
    }

    /// Checks the invariants that deserialization cannot enforce.
    pub fn validate(&self) -> Result<(), ReservoirError> {
        if self.modes.is_empty() {
            return Err(ReservoirError::NoModes);
        }
        if self.temperature < 0.0 || !self.temperature.is_finite() {
            return Err(ReservoirError::NegativeTemperature(self.temperature));
        }
        self.modes.iter().try_for_each(ReservoirMode::validate)
    }

    /// Occupation of every mode, in mode order.
    pub fn occupations(&self) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| occupation_unchecked(m.omega, self.temperature))
            .collect()
    }

    /// `Σ 2g²(2n̄+1)/ω`: the amplitude that bounds `|reservoir_rate|`.
    pub fn rate_scale(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let n = occupation_unchecked(m.omega, self.temperature);
                2.0 * m.g * m.g * (2.0 * n + 1.0) / m.omega
            })
            .sum()
    }
}

/// Bose–Einstein occupation `1/(exp(ω/T) − 1)`; exactly 0 at `T = 0`.
pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64, ReservoirError> {
    if omega <= 0.0 || !omega.is_finite() {
        return Err(ReservoirError::NonPositiveFrequency(omega));
    }
    if temperature < 0.0 || !temperature.is_finite() {
        return Err(ReservoirError::NegativeTemperature(temperature));
    }
    Ok(occupation_unchecked(omega, temperature))
}

fn occupation_unchecked(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

/// The four bath correlation integrals and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerms {
    pub a1: C64,
    pub a2: C64,
    pub a3: C64,
    pub a4: C64,
    pub total: C64,
}

/// `(1 − e^{−iωt})/(iω)`, the integral of `e^{−iωs}` over `[0, t]`.
fn phase_integral(omega: f64, t: f64) -> C64 {
    let i = C64::new(0.0, 1.0);
    (C64::new(1.0, 0.0) - (-i * omega * t).exp()) / (i * omega)
}

pub fn kernel_terms(spec: &ReservoirSpec, t: f64) -> KernelTerms {
    let zero = C64::new(0.0, 0.0);
    let (mut a1, mut a2, mut a3, mut a4) = (zero, zero, zero, zero);
    for m in &spec.modes {
        let n = occupation_unchecked(m.omega, spec.temperature);
        let g2 = m.g * m.g;
        let fwd = phase_integral(m.omega, t);
        // (1 − e^{iωt})/(−iω) is the conjugate of the forward integral.
        let back = phase_integral(-m.omega, t);
        a1 += fwd * (g2 * (n + 1.0));
        a2 += back * (g2 * n);
        a3 += back * (g2 * (n + 1.0));
        a4 += fwd * (g2 * n);
    }
    KernelTerms {
        a1,
        a2,
        a3,
        a4,
        total: a1 + a2 + a3 + a4,
    }
}

/// `Σ 2g²(2n̄+1) sin(ωt)/ω`, the real part of the kernel total.
pub fn reservoir_rate(spec: &ReservoirSpec, t: f64) -> f64 {
    spec.modes
        .iter()
        .map(|m| {
            let n = occupation_unchecked(m.omega, spec.temperature);
            2.0 * m.g * m.g * (2.0 * n + 1.0) * (m.omega * t).sin() / m.omega
        })
        .sum()
}
