//! Truncated Fock-space matrices for the multiphoton model and its
//! supersymmetric generators.
//!
//! The field space keeps levels `0..D`. Spin ⊗ field operators are `2D × 2D`
//! in spin-major order: rows/columns `0..D` are the σz = +1 block, `D..2D`
//! the σz = −1 block. In that layout
//!
//! ```text
//! N  = diag(a†a + k/2, aa† − k/2)      N' = diag(a^k (a†)^k, (a†)^k a^k)
//! Q  = [[0, 0], [(a†)^k, 0]]           Q† = [[0, a^k], [0, 0]]
//! ```
//!
//! `N` and `N'` are diagonal and filled from exact eigenvalues and moments, so
//! they are the untruncated operators restricted to the kept levels. `Q` and
//! `Q†` are built from truncated ladder matrices. The algebra therefore holds
//! exactly on the *safe subspace* (Fock index `n ≤ D − 1 − k`) and fails on the
//! boundary rows, which [`verify_algebra`] reports separately.

use ndarray::{s, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SusyError {
    #[error("Fock dimension must be at least {need} (got {got})")]
    DimensionTooSmall { need: usize, got: usize },
    #[error("moment (m={m}, k={k}) overflows double precision (m + k > 170)")]
    MomentOverflow { m: u32, k: u32 },
}

/// Largest `m + k` for which `(m+k)!/m!` is computed.
pub const MAX_MOMENT_ORDER: u32 = 170;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// `D × D`, field only.
    Field,
    /// `2D × 2D`, spin ⊗ field.
    SpinField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    dim: usize,
    space: Space,
    data: Array2<C64>,
}

impl FockOperator {
    fn new(dim: usize, space: Space, data: Array2<C64>) -> Self {
        let n = match space {
            Space::Field => dim,
            Space::SpinField => 2 * dim,
        };
        assert_eq!(
            data.dim(),
            (n, n),
            "operator shape does not match its space"
        );
        Self { dim, space, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.dim, self.space, adjoint(&self.data))
    }
}

pub(crate) fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Truncated annihilation and creation operators on `D` levels.
pub fn ladder_ops(dim: usize) -> Result<(FockOperator, FockOperator), SusyError> {
    if dim < 2 {
        return Err(SusyError::DimensionTooSmall { need: 2, got: dim });
    }
    let mut a = Array2::<C64>::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = c((n as f64).sqrt());
    }
    let a_dag = adjoint(&a);
    Ok((
        FockOperator::new(dim, Space::Field, a),
        FockOperator::new(dim, Space::Field, a_dag),
    ))
}

/// `(m+k)!/m!`, the eigenvalue of `a^k (a†)^k` on `|m⟩`.
pub fn rising_moment(m: u32, k: u32) -> Result<f64, SusyError> {
    if m.checked_add(k).is_none_or(|s| s > MAX_MOMENT_ORDER) {
        return Err(SusyError::MomentOverflow { m, k });
    }
    Ok((1..=k).fold(1.0, |acc, j| acc * f64::from(m + j)))
}

/// `m!/(m−k)!` for `m ≥ k`, the eigenvalue of `(a†)^k a^k` on `|m⟩`; zero
/// below that since `a^k|m⟩ = 0`.
pub fn falling_moment(m: u32, k: u32) -> Result<f64, SusyError> {
    if m.checked_add(k).is_none_or(|s| s > MAX_MOMENT_ORDER) {
        return Err(SusyError::MomentOverflow { m, k });
    }
    if m < k {
        return Ok(0.0);
    }
    Ok((0..k).fold(1.0, |acc, j| acc * f64::from(m - j)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SusyGenerators {
    pub n_op: FockOperator,
    pub n_prime: FockOperator,
    pub q: FockOperator,
    pub q_dagger: FockOperator,
    /// σz ⊗ 1, kept alongside since half of the relations involve it.
    pub sigma_z: FockOperator,
    pub multiplicity_k: u32,
    pub dim: usize,
}

impl SusyGenerators {
    /// Fock levels `n ≤ D − 1 − k`.
    pub fn safe_levels(&self) -> usize {
        self.dim - self.multiplicity_k as usize
    }

    /// Column indices of the safe subspace in both spin blocks.
    pub fn safe_indices(&self) -> Vec<usize> {
        let safe = self.safe_levels();
        (0..safe).chain(self.dim..self.dim + safe).collect()
    }
}

pub(crate) fn matrix_power(m: &Array2<C64>, k: u32) -> Array2<C64> {
    let mut out = Array2::<C64>::eye(m.nrows());
    for _ in 0..k {
        out = out.dot(m);
    }
    out
}

/// Assembles a spin ⊗ field matrix from its `D × D` blocks; missing blocks are zero.
fn embed(
    dim: usize,
    upper_left: Option<&Array2<C64>>,
    upper_right: Option<&Array2<C64>>,
    lower_left: Option<&Array2<C64>>,
    lower_right: Option<&Array2<C64>>,
) -> Array2<C64> {
    let mut out = Array2::<C64>::zeros((2 * dim, 2 * dim));
    if let Some(b) = upper_left {
        out.slice_mut(s![..dim, ..dim]).assign(b);
    }
    if let Some(b) = upper_right {
        out.slice_mut(s![..dim, dim..]).assign(b);
    }
    if let Some(b) = lower_left {
        out.slice_mut(s![dim.., ..dim]).assign(b);
    }
    if let Some(b) = lower_right {
        out.slice_mut(s![dim.., dim..]).assign(b);
    }
    out
}

pub fn build_generators(dim: usize, k: u32) -> Result<SusyGenerators, SusyError> {
    let need = k as usize + 2;
    if dim < need {
        return Err(SusyError::DimensionTooSmall { need, got: dim });
    }
    let top = u32::try_from(dim - 1).unwrap_or(u32::MAX);
    rising_moment(top, k)?;

    let (_, a_dag) = ladder_ops(dim)?;
    let a_dag_k = matrix_power(a_dag.matrix(), k);
    // Taking the adjoint keeps Q and Q† exact conjugates despite rounding.
    let a_k = adjoint(&a_dag_k);

    let half_k = f64::from(k) / 2.0;
    let mut n_op = Array2::<C64>::zeros((2 * dim, 2 * dim));
    let mut n_prime = Array2::<C64>::zeros((2 * dim, 2 * dim));
    let mut sigma_z = Array2::<C64>::zeros((2 * dim, 2 * dim));
    for n in 0..dim {
        let nf = n as f64;
        n_op[[n, n]] = c(nf + half_k);
        n_op[[dim + n, dim + n]] = c(nf + 1.0 - half_k);
        n_prime[[n, n]] = c(rising_moment(n as u32, k)?);
        n_prime[[dim + n, dim + n]] = c(falling_moment(n as u32, k)?);
        sigma_z[[n, n]] = c(1.0);
        sigma_z[[dim + n, dim + n]] = c(-1.0);
    }
    let q = embed(dim, None, None, Some(&a_dag_k), None);
    let q_dagger = embed(dim, None, Some(&a_k), None, None);

    let op = |m| FockOperator::new(dim, Space::SpinField, m);
    Ok(SusyGenerators {
        n_op: op(n_op),
        n_prime: op(n_prime),
        q: op(q),
        q_dagger: op(q_dagger),
        sigma_z: op(sigma_z),
        multiplicity_k: k,
        dim,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationResidual {
    pub name: &'static str,
    /// Max-entry residual on safe-subspace columns, divided by `operand_norm`.
    pub safe_residual: f64,
    /// Same over every column of the truncated space.
    pub full_residual: f64,
    /// `max(1, largest max-entry norm among the products in the relation)`.
    pub operand_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraReport {
    pub dim: usize,
    pub multiplicity_k: u32,
    pub relations: Vec<RelationResidual>,
}

impl AlgebraReport {
    pub fn get(&self, name: &str) -> Option<&RelationResidual> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn max_safe_residual(&self) -> f64 {
        self.relations
            .iter()
            .map(|r| r.safe_residual)
            .fold(0.0, f64::max)
    }
}

pub const RELATION_NAMES: [&str; 11] = [
    "Q^2 = (Q†)^2 = 0",
    "[Q†,Q] = N'σz",
    "[N,N'] = 0",
    "[N,Q] = Q",
    "[N,Q†] = -Q†",
    "{Q†,Q} = N'",
    "{Q,σz} = 0",
    "{Q†,σz} = 0",
    "[Q,σz] = 2Q",
    "[Q†,σz] = -2Q†",
    "(Q†-Q)^2 = -N'",
];

fn max_entry(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_entry_in_columns(m: &Array2<C64>, cols: &[usize]) -> f64 {
    cols.iter()
        .flat_map(|&j| m.column(j).iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// A relation written as `lhs − rhs = 0`, with every intermediate product that
/// contributed, for the norm.
struct Relation {
    residual: Array2<C64>,
    operands: Vec<Array2<C64>>,
}

fn commutator(x: &Array2<C64>, y: &Array2<C64>) -> (Array2<C64>, Vec<Array2<C64>>) {
    let (xy, yx) = (x.dot(y), y.dot(x));
    (&xy - &yx, vec![xy, yx])
}

fn anticommutator(x: &Array2<C64>, y: &Array2<C64>) -> (Array2<C64>, Vec<Array2<C64>>) {
    let (xy, yx) = (x.dot(y), y.dot(x));
    (&xy + &yx, vec![xy, yx])
}

fn relation(lhs: (Array2<C64>, Vec<Array2<C64>>), rhs: Array2<C64>) -> Relation {
    let (value, mut operands) = lhs;
    let residual = &value - &rhs;
    operands.push(rhs);
    Relation { residual, operands }
}

pub fn verify_algebra(gen: &SusyGenerators) -> AlgebraReport {
    let n = gen.n_op.matrix();
    let np = gen.n_prime.matrix();
    let q = gen.q.matrix();
    let qd = gen.q_dagger.matrix();
    let sz = gen.sigma_z.matrix();
    let zero = Array2::<C64>::zeros(q.raw_dim());

    let nilpotent = {
        let (qq, qdqd) = (q.dot(q), qd.dot(qd));
        // Stack both squares so one residual covers the pair.
        let mut residual = Array2::<C64>::zeros((2 * q.nrows(), q.ncols()));
        residual.slice_mut(s![..q.nrows(), ..]).assign(&qq);
        residual.slice_mut(s![q.nrows().., ..]).assign(&qdqd);
        Relation {
            residual,
            operands: vec![qq, qdqd],
        }
    };
    let difference = qd - q;
    let relations = vec![
        nilpotent,
        relation(commutator(qd, q), np.dot(sz)),
        relation(commutator(n, np), zero.clone()),
        relation(commutator(n, q), q.clone()),
        relation(commutator(n, qd), -qd),
        relation(anticommutator(qd, q), np.clone()),
        relation(anticommutator(q, sz), zero.clone()),
        relation(anticommutator(qd, sz), zero.clone()),
        relation(commutator(q, sz), q * c(2.0)),
        relation(commutator(qd, sz), qd * c(-2.0)),
        relation(
            (
                difference.dot(&difference),
                vec![qd.dot(qd), qd.dot(q), q.dot(qd), q.dot(q)],
            ),
            -np,
        ),
    ];

    let safe = gen.safe_indices();
    let relations = RELATION_NAMES
        .iter()
        .zip(relations)
        .map(|(&name, rel)| {
            let operand_norm = rel.operands.iter().map(max_entry).fold(1.0, f64::max);
            RelationResidual {
                name,
                safe_residual: max_entry_in_columns(&rel.residual, &safe) / operand_norm,
                full_residual: max_entry(&rel.residual) / operand_norm,
                operand_norm,
            }
        })
        .collect();
    AlgebraReport {
        dim: gen.dim,
        multiplicity_k: gen.multiplicity_k,
        relations,
    }
}
