//! JSON configuration, mode dispatch and output emission.
//!
//! Every run reads one strict JSON document. CSV outputs start with `#`
//! metadata lines (tool version, mode, resolved configuration) followed by a
//! single header row; floats are written with 17 significant digits. JSON
//! reports carry the same metadata in a `metadata` object. Nothing in the
//! output depends on the clock or the environment, so identical configs give
//! identical bytes.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherence_control::{
    self, CoherenceError, DrivenAtomParams, Envelope, Feasibility, OffDiagState,
    DEFAULT_SIN_THRESHOLD,
};
use crate::jcm_dynamics::{
    self, C1Mode, EvolveOptions, JcmError, JcmParams, PolarizationState, DEFAULT_STEP, GROWTH_LIMIT,
};
use crate::numerics::TimeGrid;
use crate::reservoir::{kernel_terms, reservoir_rate, ReservoirSpec};
use crate::susy_fock::{build_generators, verify_algebra};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_FOCK_DIM: usize = 32;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

fn invalid(msg: impl ToString) -> CliError {
    CliError::Validation(msg.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Rate,
    NullField,
    EvolveCoherence,
    SusyCheck,
    EvolvePolarization,
    Sweep,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Rate => "rate",
            Mode::NullField => "null-field",
            Mode::EvolveCoherence => "evolve-coherence",
            Mode::SusyCheck => "susy-check",
            Mode::EvolvePolarization => "evolve-polarization",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeKind {
    /// Solve for the envelope that cancels the decay rate.
    #[default]
    NullField,
    /// No driving field.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub omega0: f64,
    pub dipole_d: f64,
    #[serde(default)]
    pub envelope: EnvelopeKind,
}

/// A coupling written either as a bare real number or as `{"re", "im"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl Coupling {
    pub fn value(&self) -> C64 {
        match *self {
            Coupling::Real(re) => C64::new(re, 0.0),
            Coupling::Complex { re, im } => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JcmConfig {
    pub g: Coupling,
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

fn default_omega() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericConfig {
    /// Largest RK4 step for the polarization integrators.
    pub step: f64,
    pub sin_threshold: f64,
    pub fock_dim: usize,
    pub c1_mode: C1Mode,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            sin_threshold: DEFAULT_SIN_THRESHOLD,
            fock_dim: DEFAULT_FOCK_DIM,
            c1_mode: C1Mode::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// `[re, im]`
    #[serde(default = "default_rho01")]
    pub rho01: [f64; 2],
    /// Defaults to the conjugate of `rho01`.
    #[serde(default)]
    pub rho10: Option<[f64; 2]>,
}

fn default_rho01() -> [f64; 2] {
    [0.5, 0.0]
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            rho01: default_rho01(),
            rho10: None,
        }
    }
}

impl InitialConfig {
    pub fn state(&self) -> OffDiagState {
        let rho01 = C64::new(self.rho01[0], self.rho01[1]);
        match self.rho10 {
            Some([re, im]) => OffDiagState::new(rho01, C64::new(re, im)),
            None => OffDiagState::hermitian(rho01),
        }
    }

    fn resolved(&self) -> Self {
        let s = self.state();
        Self {
            rho01: self.rho01,
            rho10: Some([s.rho10.re, s.rho10.im]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub m: Vec<u32>,
    pub k: Vec<u32>,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reservoir: Option<ReservoirSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<AtomConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jcm: Option<JcmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

/// Parses and validates a config.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    parse_config_with_mode(text, None)
}

/// Like [`parse_config`], with `mode` replacing the configured mode before
/// validation.
pub fn parse_config_with_mode(text: &str, mode: Option<Mode>) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." || path.is_empty() {
            CliError::Config(e.into_inner().to_string())
        } else {
            CliError::Config(format!("{path}: {}", e.into_inner()))
        }
    })?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    cfg.initial = cfg.initial.resolved();
    validate(&cfg)?;
    Ok(cfg)
}

fn require<'a, T>(block: &'a Option<T>, name: &str, mode: Mode) -> Result<&'a T, CliError> {
    block
        .as_ref()
        .ok_or_else(|| invalid(format!("mode {} requires a `{name}` block", mode.as_str())))
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let mode = cfg.mode;
    let n = &cfg.numeric;
    if n.step <= 0.0 || !n.step.is_finite() {
        return Err(invalid(format!(
            "numeric.step must be > 0 (got {})",
            n.step
        )));
    }
    if n.sin_threshold <= 0.0 || !n.sin_threshold.is_finite() {
        return Err(invalid(format!(
            "numeric.sin_threshold must be > 0 (got {})",
            n.sin_threshold
        )));
    }
    let init = cfg.initial.state();
    for v in [init.rho01.re, init.rho01.im, init.rho10.re, init.rho10.im] {
        if !v.is_finite() {
            return Err(invalid("initial state must be finite"));
        }
    }

    if mode != Mode::SusyCheck {
        require(&cfg.grid, "grid", mode)?;
        time_grid(cfg)?;
    }
    if matches!(mode, Mode::Rate | Mode::NullField | Mode::EvolveCoherence) {
        require(&cfg.reservoir, "reservoir", mode)?
            .validate()
            .map_err(invalid)?;
    }
    if matches!(mode, Mode::NullField | Mode::EvolveCoherence) {
        atom_params(require(&cfg.atom, "atom", mode)?)?;
    }
    match mode {
        Mode::SusyCheck => {
            let jcm = require(&cfg.jcm, "jcm", mode)?;
            let need = jcm.k as usize + 2;
            if n.fock_dim < need {
                return Err(invalid(format!(
                    "numeric.fock_dim must be >= jcm.k + 2 = {need} (got {})",
                    n.fock_dim
                )));
            }
            build_generators(n.fock_dim, jcm.k).map_err(invalid)?;
        }
        Mode::EvolvePolarization => {
            let jcm = require(&cfg.jcm, "jcm", mode)?;
            let m = jcm
                .m
                .ok_or_else(|| invalid("mode evolve-polarization requires jcm.m"))?;
            jcm_params(jcm, m, jcm.k)?;
        }
        Mode::Sweep => {
            let jcm = require(&cfg.jcm, "jcm", mode)?;
            let sweep = require(&cfg.sweep, "sweep", mode)?;
            if jcm.omega0.is_some() || jcm.delta.is_some() {
                return Err(invalid(
                    "mode sweep takes detunings from sweep.delta; remove jcm.omega0 and jcm.delta",
                ));
            }
            for (name, len) in [
                ("m", sweep.m.len()),
                ("k", sweep.k.len()),
                ("delta", sweep.delta.len()),
            ] {
                if len == 0 {
                    return Err(invalid(format!("sweep.{name} must be non-empty")));
                }
            }
            for point in sweep_points(sweep) {
                sweep_params(jcm, point)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn time_grid(cfg: &RunConfig) -> Result<TimeGrid, CliError> {
    let g = cfg.grid.as_ref().ok_or_else(|| {
        invalid(format!(
            "mode {} requires a `grid` block",
            cfg.mode.as_str()
        ))
    })?;
    TimeGrid::new(g.start, g.stop, g.step).map_err(invalid)
}

fn atom_params(atom: &AtomConfig) -> Result<DrivenAtomParams, CliError> {
    DrivenAtomParams::new(atom.omega0, atom.dipole_d).map_err(invalid)
}

/// Resolves `(ω0, δ)`: either may be given, and if both are they must agree.
fn jcm_params(cfg: &JcmConfig, m: u32, k: u32) -> Result<JcmParams, CliError> {
    let g = cfg.g.value();
    let kf = f64::from(k);
    let params = match (cfg.omega0, cfg.delta) {
        (Some(w0), None) => JcmParams::new(g, k, m, w0, cfg.omega),
        (None, delta) => JcmParams::with_detuning(g, k, m, cfg.omega, delta.unwrap_or(0.0)),
        (Some(w0), Some(delta)) => {
            let implied = kf * cfg.omega - w0;
            if (implied - delta).abs() > 1e-12 * (1.0 + delta.abs() + w0.abs()) {
                return Err(invalid(format!(
                    "jcm.delta = {delta} disagrees with k*omega - omega0 = {implied}"
                )));
            }
            JcmParams::new(g, k, m, w0, cfg.omega)
        }
    };
    params.map_err(invalid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SweepPoint {
    m: u32,
    k: u32,
    delta: f64,
}

/// Points in output order: `m` outermost, then `k`, then `delta`.
fn sweep_points(s: &SweepConfig) -> Vec<SweepPoint> {
    let mut out = Vec::with_capacity(s.m.len() * s.k.len() * s.delta.len());
    for &m in &s.m {
        for &k in &s.k {
            for &delta in &s.delta {
                out.push(SweepPoint { m, k, delta });
            }
        }
    }
    out
}

fn sweep_params(cfg: &JcmConfig, pt: SweepPoint) -> Result<JcmParams, CliError> {
    JcmParams::with_detuning(cfg.g.value(), pt.k, pt.m, cfg.omega, pt.delta).map_err(invalid)
}

fn evolve_options(cfg: &RunConfig) -> EvolveOptions {
    EvolveOptions {
        step: cfg.numeric.step,
        c1_mode: cfg.numeric.c1_mode,
        growth_limit: GROWTH_LIMIT,
    }
}

fn numerical(e: impl ToString) -> CliError {
    CliError::Numerical(e.to_string())
}

fn jcm_failure(e: JcmError) -> CliError {
    match e {
        JcmError::GrowthLimit { .. } | JcmError::Numerics(_) => numerical(e),
        other => invalid(other),
    }
}

fn coherence_failure(e: CoherenceError) -> CliError {
    match e {
        CoherenceError::UndefinedEnvelope { .. } | CoherenceError::Numerics(_) => numerical(e),
        other => invalid(other),
    }
}

/// `{:.16e}`: 17 significant digits, round-trips every `f64`.
struct F(f64);

impl std::fmt::Display for F {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.16e}", self.0)
    }
}

fn csv_row(out: &mut dyn Write, cells: &[String]) -> io::Result<()> {
    writeln!(out, "{}", cells.join(","))
}

fn floats(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| F(v).to_string()).collect()
}

fn config_echo(cfg: &RunConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

fn csv_metadata(out: &mut dyn Write, cfg: &RunConfig, extra: &[String]) -> io::Result<()> {
    writeln!(out, "# tool: {TOOL_NAME} {TOOL_VERSION}")?;
    writeln!(out, "# mode: {}", cfg.mode.as_str())?;
    writeln!(out, "# config: {}", config_echo(cfg))?;
    for line in extra {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Metadata {
    tool: String,
    mode: Mode,
    config: RunConfig,
}

fn json_metadata(cfg: &RunConfig) -> Metadata {
    Metadata {
        tool: format!("{TOOL_NAME} {TOOL_VERSION}"),
        mode: cfg.mode,
        config: cfg.clone(),
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

/// Runs a validated config, writing the artifact to `out`.
///
/// On error nothing useful may have been written; callers that write to a
/// file should buffer.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    validate(cfg)?;
    match cfg.mode {
        Mode::Rate => run_rate(cfg, out),
        Mode::NullField => run_null_field(cfg, out),
        Mode::EvolveCoherence => run_evolve_coherence(cfg, out),
        Mode::SusyCheck => run_susy_check(cfg, out),
        Mode::EvolvePolarization => run_evolve_polarization(cfg, out),
        Mode::Sweep => run_sweep(cfg, out),
    }
}

fn reservoir(cfg: &RunConfig) -> &ReservoirSpec {
    cfg.reservoir.as_ref().expect("validated")
}

fn run_rate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let bath = reservoir(cfg);
    let grid = time_grid(cfg)?.points();
    csv_metadata(out, cfg, &[])?;
    writeln!(
        out,
        "t,a1_re,a1_im,a2_re,a2_im,a3_re,a3_im,a4_re,a4_im,total_re,total_im,reservoir_rate"
    )?;
    for &t in &grid {
        let k = kernel_terms(bath, t);
        let mut row = vec![t];
        for z in [k.a1, k.a2, k.a3, k.a4, k.total] {
            row.extend([z.re, z.im]);
        }
        row.push(reservoir_rate(bath, t));
        csv_row(out, &floats(&row))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Window {
    start: f64,
    stop: f64,
    samples: usize,
}

#[derive(Serialize)]
struct Sample {
    t: f64,
    /// `None` (JSON null) for SINGULAR samples.
    envelope_sq: Option<f64>,
    class: Feasibility,
}

#[derive(Serialize)]
struct FeasibilityOutput {
    metadata: Metadata,
    summary: BTreeMap<&'static str, usize>,
    feasible_windows: Vec<Window>,
    samples: Vec<Sample>,
}

fn run_null_field(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let atom = atom_params(cfg.atom.as_ref().expect("validated"))?;
    let grid = time_grid(cfg)?.points();
    let (env, report) =
        coherence_control::null_field(&atom, reservoir(cfg), &grid, cfg.numeric.sin_threshold)
            .map_err(coherence_failure)?;

    let mut summary = BTreeMap::new();
    summary.insert("samples", report.classes.len());
    for class in [
        Feasibility::Feasible,
        Feasibility::InfeasibleNegative,
        Feasibility::Singular,
        Feasibility::Indeterminate,
    ] {
        summary.insert(class.label(), report.count(class));
    }
    let feasible_windows = report
        .feasible_windows()
        .into_iter()
        .map(|r| Window {
            start: report.times[r.start],
            stop: report.times[r.end - 1],
            samples: r.len(),
        })
        .collect();
    let samples = report
        .times
        .iter()
        .zip(env.values())
        .zip(&report.classes)
        .map(|((&t, &v), &class)| Sample {
            t,
            envelope_sq: v.is_finite().then_some(v),
            class,
        })
        .collect();
    write_json(
        out,
        &FeasibilityOutput {
            metadata: json_metadata(cfg),
            summary,
            feasible_windows,
            samples,
        },
    )
}

fn run_evolve_coherence(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let atom_cfg = cfg.atom.as_ref().expect("validated");
    let atom = atom_params(atom_cfg)?;
    let bath = reservoir(cfg);
    let grid = time_grid(cfg)?.points();
    let (env, labels): (Envelope, Vec<&str>) = match atom_cfg.envelope {
        EnvelopeKind::NullField => {
            let (env, report) =
                coherence_control::null_field(&atom, bath, &grid, cfg.numeric.sin_threshold)
                    .map_err(coherence_failure)?;
            let labels = report.classes.iter().map(Feasibility::label).collect();
            (env, labels)
        }
        EnvelopeKind::Zero => (
            Envelope::zero(grid.clone()).map_err(coherence_failure)?,
            vec!["UNDRIVEN"; grid.len()],
        ),
    };
    let evo = coherence_control::evolve_offdiag(&atom, &env, bath, cfg.initial.state(), &grid)
        .map_err(coherence_failure)?;

    csv_metadata(
        out,
        cfg,
        &["labels: sigma_z|1> = +|1>; rho01 = <0|rho|1>".to_string()],
    )?;
    writeln!(
        out,
        "t,envelope_sq,feasibility,gamma,rho01_re,rho01_im,rho10_re,rho10_im,abs_rho01,rk4_rho01_re,rk4_rho01_im"
    )?;
    for i in 0..grid.len() {
        let q = evo.quadrature[i];
        let r = evo.rk4[i];
        let mut cells = floats(&[grid[i], env.values()[i]]);
        cells.push(labels[i].to_string());
        cells.extend(floats(&[
            evo.rates[i],
            q.rho01.re,
            q.rho01.im,
            q.rho10.re,
            q.rho10.im,
            q.rho01.norm(),
            r.rho01.re,
            r.rho01.im,
        ]));
        csv_row(out, &cells)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RelationOutput {
    safe_residual: f64,
    full_residual: f64,
    operand_norm: f64,
}

#[derive(Serialize)]
struct SusyOutput {
    metadata: Metadata,
    dim: usize,
    multiplicity_k: u32,
    safe_levels: usize,
    max_safe_residual: f64,
    relations: BTreeMap<&'static str, RelationOutput>,
}

fn run_susy_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let k = cfg.jcm.as_ref().expect("validated").k;
    let gen = build_generators(cfg.numeric.fock_dim, k).map_err(invalid)?;
    let report = verify_algebra(&gen);
    let relations = report
        .relations
        .iter()
        .map(|r| {
            (
                r.name,
                RelationOutput {
                    safe_residual: r.safe_residual,
                    full_residual: r.full_residual,
                    operand_norm: r.operand_norm,
                },
            )
        })
        .collect();
    write_json(
        out,
        &SusyOutput {
            metadata: json_metadata(cfg),
            dim: report.dim,
            multiplicity_k: report.multiplicity_k,
            safe_levels: gen.safe_levels(),
            max_safe_residual: report.max_safe_residual(),
            relations,
        },
    )
}

fn run_evolve_polarization(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let jcm = cfg.jcm.as_ref().expect("validated");
    let p = jcm_params(jcm, jcm.m.expect("validated"), jcm.k)?;
    let grid = time_grid(cfg)?.points();
    let opts = evolve_options(cfg);
    let init = cfg.initial.state();
    let pair = jcm_dynamics::evolve_offdiag(&p, init.rho01, init.rho10, &grid, &opts)
        .map_err(jcm_failure)?;
    let uv0 = PolarizationState::from_offdiag(&init);
    let uv = jcm_dynamics::evolve_uv(&p, uv0.u, uv0.v, &grid, &opts).map_err(jcm_failure)?;
    let exps = jcm_dynamics::lambda_exponents(&p);

    csv_metadata(
        out,
        cfg,
        &[
            format!("delta: {}", F(p.delta())),
            format!("lambda_u: {}", F(exps.lambda_u)),
            format!("lambda_v: {}", F(exps.lambda_v)),
            "labels: sigma_z|1> = +|1>; u = rho01 + rho10, v = i(rho01 - rho10)".to_string(),
        ],
    )?;
    writeln!(
        out,
        "t,rho01_re,rho01_im,rho10_re,rho10_im,u,v,uv_u,uv_v,closed_u,closed_v"
    )?;
    for (i, &t) in grid.iter().enumerate() {
        let s = pair[i];
        let from_pair = PolarizationState::from_offdiag(&s);
        let closed = jcm_dynamics::closed_form_zero_detuning(&p, uv0.u, uv0.v, t).unwrap_or(
            PolarizationState {
                u: f64::NAN,
                v: f64::NAN,
            },
        );
        csv_row(
            out,
            &floats(&[
                t,
                s.rho01.re,
                s.rho01.im,
                s.rho10.re,
                s.rho10.im,
                from_pair.u,
                from_pair.v,
                uv[i].u,
                uv[i].v,
                closed.u,
                closed.v,
            ]),
        )?;
    }
    Ok(())
}

fn run_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let jcm = cfg.jcm.as_ref().expect("validated");
    let sweep = cfg.sweep.as_ref().expect("validated");
    let g = time_grid(cfg)?;
    let ends = [g.start(), g.stop()];
    let opts = evolve_options(cfg);
    let uv0 = PolarizationState::from_offdiag(&cfg.initial.state());

    let points = sweep_points(sweep);
    // Collecting an indexed parallel iterator keeps parameter order.
    let rows: Vec<Result<Vec<String>, CliError>> = points
        .par_iter()
        .map(|&pt| {
            let p = sweep_params(jcm, pt)?;
            let e = jcm_dynamics::lambda_exponents(&p);
            let c = jcm_dynamics::coefficients(&p, g.stop());
            let (fin, status) = match jcm_dynamics::evolve_uv(&p, uv0.u, uv0.v, &ends, &opts) {
                Ok(traj) => (traj[1], "ok".to_string()),
                Err(JcmError::GrowthLimit { t, .. }) => (
                    PolarizationState {
                        u: f64::NAN,
                        v: f64::NAN,
                    },
                    format!("growth-limit@{}", F(t)),
                ),
                Err(other) => return Err(jcm_failure(other)),
            };
            let mut cells = vec![pt.m.to_string(), pt.k.to_string()];
            cells.extend(floats(&[
                pt.delta, e.lambda_u, e.lambda_v, c.c1.re, c.c1.im, c.c2, fin.u, fin.v,
            ]));
            cells.push(status);
            Ok(cells)
        })
        .collect();

    csv_metadata(out, cfg, &[format!("t_final: {}", F(g.stop()))])?;
    writeln!(
        out,
        "m,k,delta,lambda_u,lambda_v,c1_re,c1_im,c2,u_final,v_final,status"
    )?;
    for row in rows {
        csv_row(out, &row?)?;
    }
    Ok(())
}
