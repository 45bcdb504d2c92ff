//! Solver-agnostic conic standard form and a built-in dense interior-point
//! method for desk-scale problems.
//!
//! A [`StandardConicProblem`] maximizes `c·y` subject to one affine matrix
//! (or vector) per block lying in its cone:
//! `F0 + Σ_i y_i F_i  ⪰ 0` for PSD blocks, `f0 + Σ_i y_i f_i ≥ 0` for
//! componentwise-nonnegative blocks. Symmetry of the `F_i` is guaranteed by
//! construction: entries are stored as an upper triangle with the mirrored
//! element implied.

mod ipm;
mod mps;
mod sdpa;

pub use ipm::solve;
pub use mps::{export_mps, import_mps};
pub use sdpa::{export_sdpa, import_sdpa};

use std::fmt;

use nalgebra::DMatrix;

/// Hard cap on the number of decision variables the reference solver accepts.
pub const MAX_VARS: usize = 10_000;

#[derive(Debug)]
pub enum ConicError {
    TooLarge { vars: usize },
    Shape(String),
    Unsupported(String),
    Format { line: usize, msg: String },
    Io(std::io::Error),
}

impl fmt::Display for ConicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConicError::TooLarge { vars } => write!(
                f,
                "problem has {vars} variables; the reference solver is capped at {MAX_VARS}"
            ),
            ConicError::Shape(msg) => write!(f, "malformed problem: {msg}"),
            ConicError::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            ConicError::Format { line, msg } => write!(f, "format error at line {line}: {msg}"),
            ConicError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for ConicError {}

impl From<std::io::Error> for ConicError {
    fn from(e: std::io::Error) -> Self {
        ConicError::Io(e)
    }
}

/// Upper-triangular sparse symmetric matrix: `(row, col, value)` with
/// `row <= col`; the `(col, row)` mirror is implied.
pub type SparseSym = Vec<(u32, u32, f64)>;

/// One semidefinite block of the affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub size: usize,
    pub f0: SparseSym,
    /// Per decision variable, the coefficient matrix entries (often empty).
    pub fi: Vec<SparseSym>,
}

/// One componentwise-nonnegative block.
#[derive(Debug, Clone, PartialEq)]
pub struct LinBlock {
    pub size: usize,
    pub f0: Vec<f64>,
    /// Per decision variable, the sparse coefficient column.
    pub fi: Vec<Vec<(u32, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConeBlock {
    Psd(PsdBlock),
    Nonneg(LinBlock),
}

impl ConeBlock {
    pub fn size(&self) -> usize {
        match self {
            ConeBlock::Psd(b) => b.size,
            ConeBlock::Nonneg(b) => b.size,
        }
    }

    pub fn is_psd(&self) -> bool {
        matches!(self, ConeBlock::Psd(_))
    }
}

impl PsdBlock {
    pub fn new(size: usize, num_vars: usize) -> Self {
        PsdBlock {
            size,
            f0: Vec::new(),
            fi: vec![Vec::new(); num_vars],
        }
    }

    pub fn set_f0(&mut self, r: usize, c: usize, v: f64) {
        push_sym(&mut self.f0, r, c, v);
    }

    pub fn add_fi(&mut self, var: usize, r: usize, c: usize, v: f64) {
        push_sym(&mut self.fi[var], r, c, v);
    }

    /// Dense symmetric realization of `F0 + Σ y_i F_i`.
    pub fn affine(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        scatter_sym(&mut m, &self.f0, 1.0);
        for (yi, f) in y.iter().zip(&self.fi) {
            if *yi != 0.0 && !f.is_empty() {
                scatter_sym(&mut m, f, *yi);
            }
        }
        m
    }

    fn normalize(&mut self) {
        normalize_sym(&mut self.f0);
        for f in &mut self.fi {
            normalize_sym(f);
        }
    }
}

impl LinBlock {
    pub fn new(size: usize, num_vars: usize) -> Self {
        LinBlock {
            size,
            f0: vec![0.0; size],
            fi: vec![Vec::new(); num_vars],
        }
    }

    pub fn add_fi(&mut self, var: usize, r: usize, v: f64) {
        if v != 0.0 {
            self.fi[var].push((r as u32, v));
        }
    }

    pub fn affine(&self, y: &[f64]) -> Vec<f64> {
        let mut out = self.f0.clone();
        for (yi, f) in y.iter().zip(&self.fi) {
            if *yi != 0.0 {
                for &(r, v) in f {
                    out[r as usize] += yi * v;
                }
            }
        }
        out
    }

    fn normalize(&mut self) {
        for f in &mut self.fi {
            f.sort_by_key(|&(r, _)| r);
            f.dedup_by(|later, earlier| {
                if later.0 == earlier.0 {
                    earlier.1 += later.1;
                    true
                } else {
                    false
                }
            });
            f.retain(|&(_, v)| v != 0.0);
        }
    }
}

fn push_sym(entries: &mut SparseSym, r: usize, c: usize, v: f64) {
    if v == 0.0 {
        return;
    }
    let (r, c) = if r <= c { (r, c) } else { (c, r) };
    entries.push((r as u32, c as u32, v));
}

fn normalize_sym(entries: &mut SparseSym) {
    entries.sort_by_key(|&(r, c, _)| (r, c));
    entries.dedup_by(|later, earlier| {
        if later.0 == earlier.0 && later.1 == earlier.1 {
            earlier.2 += later.2;
            true
        } else {
            false
        }
    });
    entries.retain(|&(_, _, v)| v != 0.0);
}

/// Scatter upper-triangle entries into a dense symmetric matrix.
pub(crate) fn scatter_sym(m: &mut DMatrix<f64>, entries: &SparseSym, scale: f64) {
    for &(r, c, v) in entries {
        let (r, c) = (r as usize, c as usize);
        m[(r, c)] += scale * v;
        if r != c {
            m[(c, r)] += scale * v;
        }
    }
}

/// `⟨A, M⟩` for a sparse symmetric `A` against a dense symmetric `M`.
pub(crate) fn dot_sym(entries: &SparseSym, m: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for &(r, c, v) in entries {
        let x = m[(r as usize, c as usize)];
        acc += if r == c { v * x } else { 2.0 * v * x };
    }
    acc
}

pub(crate) fn frob_sym(entries: &SparseSym) -> f64 {
    let mut acc = 0.0;
    for &(r, c, v) in entries {
        acc += if r == c { v * v } else { 2.0 * v * v };
    }
    acc.sqrt()
}

/// `max c·y` over the intersection of the block cones.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardConicProblem {
    pub objective: Vec<f64>,
    pub blocks: Vec<ConeBlock>,
}

impl StandardConicProblem {
    pub fn new(objective: Vec<f64>, blocks: Vec<ConeBlock>) -> Self {
        let mut p = StandardConicProblem { objective, blocks };
        p.normalize();
        p
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Sort and merge coefficient entries so equal problems have equal
    /// representations (and exports are byte-stable).
    pub fn normalize(&mut self) {
        for b in &mut self.blocks {
            match b {
                ConeBlock::Psd(p) => p.normalize(),
                ConeBlock::Nonneg(l) => l.normalize(),
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(ConicError::Shape("no decision variables".into()));
        }
        if n > MAX_VARS {
            return Err(ConicError::TooLarge { vars: n });
        }
        if self.blocks.is_empty() {
            return Err(ConicError::Shape("no cone blocks".into()));
        }
        for (k, b) in self.blocks.iter().enumerate() {
            match b {
                ConeBlock::Psd(p) => {
                    if p.size == 0 {
                        return Err(ConicError::Shape(format!("psd block {k} has size 0")));
                    }
                    if p.fi.len() != n {
                        return Err(ConicError::Shape(format!(
                            "psd block {k} has {} coefficient slots for {n} variables",
                            p.fi.len()
                        )));
                    }
                    for entries in std::iter::once(&p.f0).chain(&p.fi) {
                        for &(r, c, _) in entries {
                            if r > c || c as usize >= p.size {
                                return Err(ConicError::Shape(format!(
                                    "psd block {k}: entry ({r},{c}) outside upper triangle of size {}",
                                    p.size
                                )));
                            }
                        }
                    }
                }
                ConeBlock::Nonneg(l) => {
                    if l.size == 0 {
                        return Err(ConicError::Shape(format!("nonneg block {k} has size 0")));
                    }
                    if l.f0.len() != l.size || l.fi.len() != n {
                        return Err(ConicError::Shape(format!(
                            "nonneg block {k} has inconsistent dimensions"
                        )));
                    }
                    for entries in &l.fi {
                        for &(r, _) in entries {
                            if r as usize >= l.size {
                                return Err(ConicError::Shape(format!(
                                    "nonneg block {k}: row {r} out of range"
                                )));
                            }
                        }
                    }
                }
            }
        }
        // A variable absent from every block makes the Newton system
        // singular (and the problem unbounded unless its objective is 0);
        // reject it as a modeling error.
        for i in 0..n {
            let used = self.blocks.iter().any(|b| match b {
                ConeBlock::Psd(p) => !p.fi[i].is_empty(),
                ConeBlock::Nonneg(l) => !l.fi[i].is_empty(),
            });
            if !used {
                return Err(ConicError::Shape(format!(
                    "variable {i} has no coefficient in any cone block"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::Optimal => write!(f, "optimal"),
            SolveStatus::Infeasible => write!(f, "infeasible"),
            SolveStatus::Unbounded => write!(f, "unbounded"),
            SolveStatus::NumericalLimit => write!(f, "numerical_limit"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    /// Feasibility of the maximization side (slack consistency).
    pub primal_infeas: f64,
    /// Feasibility of the minimization side (multiplier equations).
    pub dual_infeas: f64,
    pub rel_gap: f64,
}

#[derive(Debug, Clone)]
pub enum DualBlock {
    Psd(DMatrix<f64>),
    Nonneg(Vec<f64>),
}

/// Snapshot of one interior-point iteration, recorded when tracing.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub mu: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Decision variables of the maximization problem.
    pub y: Vec<f64>,
    /// One multiplier per cone block (PSD matrix or nonnegative vector).
    pub dual_blocks: Vec<DualBlock>,
    /// `c·y`.
    pub primal_objective: f64,
    /// `Σ ⟨F0, X⟩` — an upper bound on the optimum at dual-feasible points.
    pub dual_objective: f64,
    pub iterations: usize,
    pub residuals: Residuals,
    /// Per-iteration history; filled only when `SolveOptions::trace` is set.
    pub trace: Vec<IterRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub tol_feas: f64,
    /// Relative-gap target. The default is a decade tighter than the 1e-6
    /// the `Optimal` status promises, but not so tight that dense Hankel
    /// moment structure (whose Schur systems exhaust double precision near
    /// mu ~ 1e-9) gets misreported as a numerical failure.
    pub tol_gap: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 200,
            tol_feas: 1e-8,
            tol_gap: 1e-7,
            step_fraction: 0.98,
            trace: false,
        }
    }
}
