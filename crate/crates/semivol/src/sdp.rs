//! Semidefinite relaxations for volume, moment, and weighted-integration
//! bounds over a compact basic semi-algebraic set `K = {x ∈ B : g_j(x) ≥ 0}`.
//!
//! At matrix order `d` (public degree `t = 2d`), the relaxation maximizes
//! `L_{y₁}(p)` over pseudo-moment vectors `y₁` subject to
//!
//! * `M_d(y₁) ⪰ 0` — `y₁` behaves like a measure,
//! * `M_d(y₂ − y₁) ⪰ 0` — that measure is dominated by the reference
//!   measure on `B` (whose moments `y₂` are known in closed form),
//! * `M_{d−r_j}(g_j y₁) ⪰ 0` — its support lies where `g_j ≥ 0`.
//!
//! The optimum decreases to `∫_K p dλ` as `d` grows, so with `p ≡ 1` each
//! level is a certified upper bound on `vol(K)`. The dual multipliers
//! reassemble into a polynomial `h ≥ 𝟙_K` whose positivity is certified in
//! Putinar form `h − p = σ₀ + Σ σ_j g_j`; see [`extract_certificate`].
//!
//! Three modes: [`Mode::Upper`] as above; [`Mode::ComplementLower`], which
//! runs the same machinery on `B ∖ K` and reports `vol(B) − bound` (a lower
//! bound on `vol(K)`); and [`Mode::Integrate`], which swaps in moments of a
//! weight `w` and objective `f` to bound `∫_K f·w dx`.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::conic::{
    self, ConeBlock, ConicError, DualBlock, PsdBlock, SolveOptions, SolveResult, SolveStatus,
    StandardConicProblem,
};
use crate::moments::{ball_moments, box_moments, BoundingKind, BoundingSet, MomentError, MomentVector};
use crate::poly::{basis_product, index_set, rank, Basis, MultiIndex, MultiPoly, PolyError};
use crate::structures::{
    localizing_matrix_map, min_eigenvalue, moment_matrix_map, AffineMatrixMap, StructureError,
};

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("degree {got} is too low for this problem; use at least {required}")]
    DegreeTooLow { required: u32, got: u32 },
    #[error("hierarchy degrees must be positive and even (degree = 2 × matrix order); got {0}")]
    OddDegree(u32),
    #[error("complement mode requires exactly one constraint; this problem has {0}")]
    ComplementConstraints(usize),
    #[error("integrate mode requires weight moments on the problem spec")]
    MissingWeightMoments,
    #[error("this operation requires {expected} mode")]
    WrongMode { expected: &'static str },
    #[error("moment data reaches degree {available} but the relaxation needs {needed}")]
    MomentsTooShort { available: u32, needed: u32 },
    #[error("expected {expected} values/blocks, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dual block {index} has size {got}, expected {expected}")]
    DualSizeMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Conic(#[from] ConicError),
}

/// What the hierarchy bounds.
#[derive(Debug, Clone)]
pub enum Mode {
    /// Upper bounds on `∫_K p dλ` (volume when `p ≡ 1`), decreasing in `d`.
    Upper,
    /// Lower bounds on `vol(K)` via upper bounds on the complement
    /// `{g₁ ≤ 0} ∩ B`; restricted to a single constraint.
    ComplementLower,
    /// Upper bounds on `∫_K f·w dx` where the weight `w` enters through its
    /// moments on `B` (see [`ProblemSpec::weight_moments`]).
    Integrate { integrand: MultiPoly },
}

/// Full description of one volume/moment problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub n: usize,
    pub basis: Basis,
    pub bounding: BoundingSet,
    pub constraints: Vec<MultiPoly>,
    /// Density maximized by [`Mode::Upper`]; defaults to 1. The paper-style
    /// accelerated runs set this to `Π g_j`.
    pub objective: MultiPoly,
    pub mode: Mode,
    /// Radius² of the redundant ball localizer `a² − ‖x‖²`, appended so the
    /// Archimedean condition behind the convergence theorem holds by
    /// construction. `None` disables it. Defaulted from the bounding set:
    /// `n·a²` for a box of half-width `a`, `a²` for a ball.
    pub ball_radius_sq: Option<f64>,
    /// Reference-measure moments for [`Mode::Integrate`] (moments of `w` on
    /// `B`), typically from `weighted_moments` or a user CSV.
    pub weight_moments: Option<MomentVector>,
}

impl ProblemSpec {
    pub fn new(bounding: BoundingSet, constraints: Vec<MultiPoly>) -> Result<Self, SdpError> {
        bounding.validate()?;
        let n = bounding.n;
        for g in &constraints {
            if g.n_vars() != n {
                return Err(SdpError::DimensionMismatch {
                    expected: n,
                    got: g.n_vars(),
                });
            }
        }
        let ball_radius_sq = Some(match bounding.kind {
            BoundingKind::Box => n as f64 * bounding.a * bounding.a,
            BoundingKind::Ball => bounding.a * bounding.a,
        });
        Ok(ProblemSpec {
            n,
            basis: Basis::Monomial,
            bounding,
            constraints,
            objective: MultiPoly::one(n, Basis::Monomial),
            mode: Mode::Upper,
            ball_radius_sq,
            weight_moments: None,
        })
    }

    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }

    pub fn with_objective(mut self, p: MultiPoly) -> Self {
        self.objective = p;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_ball(mut self, radius_sq: Option<f64>) -> Self {
        self.ball_radius_sq = radius_sq;
        self
    }

    pub fn with_weight_moments(mut self, y2: MomentVector) -> Self {
        self.weight_moments = Some(y2);
        self
    }

    /// Closed-form moments of Lebesgue measure on `B`, in the working basis.
    pub fn reference_moments(&self, degree: u32) -> MomentVector {
        let base = match self.bounding.kind {
            BoundingKind::Box => box_moments(self.n, degree, self.bounding.a),
            BoundingKind::Ball => ball_moments(self.n, degree, self.bounding.a),
        };
        base.to_basis(self.basis)
    }

    /// Smallest admissible matrix order, from the degrees of the data.
    pub fn required_order(&self) -> u32 {
        let mut r = 1u32;
        for g in &self.constraints {
            r = r.max(g.degree().div_ceil(2));
        }
        let obj_degree = match &self.mode {
            Mode::Upper => self.objective.degree(),
            Mode::ComplementLower => 0,
            Mode::Integrate { integrand } => integrand.degree(),
        };
        r.max(obj_degree.div_ceil(2))
    }

    /// Mode-appropriate reference moments at the given public degree.
    pub fn measure_moments(&self, degree: u32) -> Result<MomentVector, SdpError> {
        match &self.mode {
            Mode::Integrate { .. } => {
                let w = self
                    .weight_moments
                    .as_ref()
                    .ok_or(SdpError::MissingWeightMoments)?;
                if w.degree() < degree {
                    return Err(SdpError::MomentsTooShort {
                        available: w.degree(),
                        needed: degree,
                    });
                }
                Ok(w.to_basis(self.basis))
            }
            _ => Ok(self.reference_moments(degree)),
        }
    }

    /// Monte Carlo sampling for points just outside `B` where every
    /// constraint still holds — a sign that `K ⊄ B` and the bounds do not
    /// cover all of `K`. Advisory only.
    pub fn containment_warning(&self, samples: usize, seed: u64) -> Option<String> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let reach = 1.25 * self.bounding.a;
        let mut outside = 0usize;
        let mut leaking = 0usize;
        let mut x = vec![0.0; self.n];
        for _ in 0..samples {
            for xi in x.iter_mut() {
                *xi = rng.gen_range(-reach..reach);
            }
            if self.bounding.contains(&x) {
                continue;
            }
            outside += 1;
            if self.constraints.iter().all(|g| {
                let gm = g.convert(Basis::Monomial);
                gm.eval(&x) >= 0.0
            }) {
                leaking += 1;
            }
        }
        if outside > 0 && leaking > 0 {
            Some(format!(
                "{leaking} of {outside} sampled points outside the bounding set satisfy all \
                 constraints; the set being measured may extend beyond B and the bounds then \
                 apply only to its intersection with B"
            ))
        } else {
            None
        }
    }

    fn ball_localizer(&self) -> Option<MultiPoly> {
        let a2 = self.ball_radius_sq?;
        let mut p = MultiPoly::constant(self.n, Basis::Monomial, a2);
        for i in 0..self.n {
            let xi = MultiPoly::var(self.n, Basis::Monomial, i);
            let sq = xi.multiply(&xi).expect("same basis");
            p = p.sub(&sq).expect("same basis");
        }
        Some(p.convert(self.basis))
    }
}

/// One named localizing constraint of an assembled relaxation.
#[derive(Debug)]
pub struct Localizer {
    pub name: String,
    /// The constraint polynomial, in the working basis.
    pub g: MultiPoly,
    pub map: AffineMatrixMap,
}

/// A fully assembled level of the hierarchy, ready for the conic solver.
/// Block order: `M_d(y₁)`, `M_d(y₂ − y₁)`, then one localizing block per
/// entry of `localizers`.
#[derive(Debug)]
pub struct RelaxationProblem {
    pub conic: StandardConicProblem,
    pub n: usize,
    pub basis: Basis,
    /// Matrix order `d`; decision variables are moments up to degree `2d`.
    pub order: u32,
    /// Moment index of each decision variable, graded order.
    pub indices: Vec<MultiIndex>,
    /// Reference moments actually used, truncated to degree `2d`.
    pub y2: MomentVector,
    pub objective_poly: MultiPoly,
    pub moment_map: AffineMatrixMap,
    pub localizers: Vec<Localizer>,
}

impl RelaxationProblem {
    pub fn num_vars(&self) -> usize {
        self.indices.len()
    }

    /// Minimum eigenvalue of every block at a candidate moment vector —
    /// nonnegative (to tolerance) exactly when the candidate is feasible.
    pub fn block_min_eigenvalues(&self, y1: &MomentVector) -> Result<Vec<f64>, SdpError> {
        let y1 = y1.to_basis(self.basis);
        if y1.degree() < 2 * self.order {
            return Err(SdpError::MomentsTooShort {
                available: y1.degree(),
                needed: 2 * self.order,
            });
        }
        let y: Vec<f64> = self
            .indices
            .iter()
            .map(|a| y1.get(a).expect("degree checked"))
            .collect();
        Ok(self
            .conic
            .blocks
            .iter()
            .map(|b| match b {
                ConeBlock::Psd(pb) => min_eigenvalue(&pb.affine(&y)),
                ConeBlock::Nonneg(lb) => {
                    lb.affine(&y).into_iter().fold(f64::INFINITY, f64::min)
                }
            })
            .collect())
    }
}

fn assemble(
    n: usize,
    basis: Basis,
    order: u32,
    y2: &MomentVector,
    objective: &MultiPoly,
    localizers: Vec<(String, MultiPoly)>,
) -> Result<RelaxationProblem, SdpError> {
    let needed = 2 * order;
    let y2 = y2.to_basis(basis);
    if y2.degree() < needed {
        return Err(SdpError::MomentsTooShort {
            available: y2.degree(),
            needed,
        });
    }
    let y2 = y2.truncate(needed)?;
    if objective.degree() > needed {
        return Err(SdpError::DegreeTooLow {
            required: objective.degree().div_ceil(2),
            got: order,
        });
    }
    if objective.n_vars() != n {
        return Err(SdpError::DimensionMismatch {
            expected: n,
            got: objective.n_vars(),
        });
    }

    let indices = index_set(n, needed);
    let nvars = indices.len();
    let moment_map = moment_matrix_map(n, order, basis);
    let s = moment_map.size();

    // M_d(y₁): pure structure, no constant part.
    let mut own = PsdBlock::new(s, nvars);
    // M_d(y₂ − y₁): constants from y₂, negated structure in y₁.
    let mut dominated = PsdBlock::new(s, nvars);
    for (alpha, entries) in moment_map.coefficients() {
        let var = rank(alpha);
        let y2a = y2.get(alpha).expect("truncated to matching degree");
        for &(r, c, v) in entries {
            own.add_fi(var, r as usize, c as usize, v);
            dominated.set_f0(r as usize, c as usize, y2a * v);
            dominated.add_fi(var, r as usize, c as usize, -v);
        }
    }

    let mut blocks = vec![ConeBlock::Psd(own), ConeBlock::Psd(dominated)];
    let mut kept = Vec::with_capacity(localizers.len());
    for (name, g) in localizers {
        let map = localizing_matrix_map(&g, order).map_err(|e| match e {
            StructureError::OrderTooSmall { required, .. } => SdpError::DegreeTooLow {
                required,
                got: order,
            },
            other => SdpError::Structure(other),
        })?;
        let mut b = PsdBlock::new(map.size(), nvars);
        for (alpha, entries) in map.coefficients() {
            let var = rank(alpha);
            for &(r, c, v) in entries {
                b.add_fi(var, r as usize, c as usize, v);
            }
        }
        blocks.push(ConeBlock::Psd(b));
        kept.push(Localizer { name, g, map });
    }

    let mut c = vec![0.0; nvars];
    for (alpha, v) in objective.terms() {
        c[rank(alpha)] = v;
    }

    let conic = StandardConicProblem::new(c, blocks);
    conic.validate()?;
    Ok(RelaxationProblem {
        conic,
        n,
        basis,
        order,
        indices,
        y2,
        objective_poly: objective.clone(),
        moment_map,
        localizers: kept,
    })
}

/// The volume/moment relaxation at matrix order `d` (moments to degree 2d).
pub fn build_qd(
    spec: &ProblemSpec,
    y2: &MomentVector,
    order: u32,
) -> Result<RelaxationProblem, SdpError> {
    let mut locs: Vec<(String, MultiPoly)> = spec
        .constraints
        .iter()
        .enumerate()
        .map(|(j, g)| (format!("g{}", j + 1), g.convert(spec.basis)))
        .collect();
    if let Some(ball) = spec.ball_localizer() {
        locs.push(("ball".to_string(), ball));
    }
    assemble(
        spec.n,
        spec.basis,
        order,
        y2,
        &spec.objective.convert(spec.basis),
        locs,
    )
}

/// The same relaxation aimed at the complement `{g₁ ≤ 0} ∩ B`; its optimum
/// upper-bounds `vol(B ∖ K)`, so `vol(B) − optimum` lower-bounds `vol(K)`.
pub fn build_complement(
    spec: &ProblemSpec,
    y2: &MomentVector,
    order: u32,
) -> Result<RelaxationProblem, SdpError> {
    if spec.constraints.len() != 1 {
        return Err(SdpError::ComplementConstraints(spec.constraints.len()));
    }
    let mut locs = vec![(
        "complement".to_string(),
        spec.constraints[0].convert(spec.basis).scale(-1.0),
    )];
    if let Some(ball) = spec.ball_localizer() {
        locs.push(("ball".to_string(), ball));
    }
    assemble(
        spec.n,
        spec.basis,
        order,
        y2,
        &MultiPoly::one(spec.n, spec.basis),
        locs,
    )
}

/// The weighted-integration relaxation: same constraint blocks, objective
/// `L_{y₁}(f)`, reference moments of the weight instead of Lebesgue.
pub fn build_integrate(
    spec: &ProblemSpec,
    y2: &MomentVector,
    order: u32,
) -> Result<RelaxationProblem, SdpError> {
    let Mode::Integrate { integrand } = &spec.mode else {
        return Err(SdpError::WrongMode {
            expected: "integrate",
        });
    };
    let mut locs: Vec<(String, MultiPoly)> = spec
        .constraints
        .iter()
        .enumerate()
        .map(|(j, g)| (format!("g{}", j + 1), g.convert(spec.basis)))
        .collect();
    if let Some(ball) = spec.ball_localizer() {
        locs.push(("ball".to_string(), ball));
    }
    assemble(
        spec.n,
        spec.basis,
        order,
        y2,
        &integrand.convert(spec.basis),
        locs,
    )
}

/// One level of the hierarchy, solved.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Public degree `t = 2d`.
    pub degree: u32,
    /// Bound achieved by the moment side (mode-adjusted; in complement mode
    /// the two sides are swapped through `vol(B) − ·` so that
    /// `primal ≤ dual` is preserved).
    pub primal: f64,
    /// Bound from the certificate side.
    pub dual: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub seconds: f64,
    /// Recovered moments of the measure on `K` (already flipped back from
    /// the complement in complement mode).
    pub moments: MomentVector,
}

/// A solved level with everything needed for certificates and diagnostics.
#[derive(Debug)]
pub struct DegreeSolution {
    pub report: BoundReport,
    pub relaxation: RelaxationProblem,
    pub raw: SolveResult,
}

/// Build and solve one level at public degree `t` (even).
pub fn solve_degree(
    spec: &ProblemSpec,
    degree: u32,
    opts: &SolveOptions,
) -> Result<DegreeSolution, SdpError> {
    if degree == 0 || degree % 2 != 0 {
        return Err(SdpError::OddDegree(degree));
    }
    let order = degree / 2;
    let required = spec.required_order();
    if order < required {
        return Err(SdpError::DegreeTooLow {
            required: 2 * required,
            got: degree,
        });
    }
    let y2 = spec.measure_moments(degree)?;
    let started = Instant::now();
    let relaxation = match &spec.mode {
        Mode::Upper => build_qd(spec, &y2, order)?,
        Mode::ComplementLower => build_complement(spec, &y2, order)?,
        Mode::Integrate { .. } => build_integrate(spec, &y2, order)?,
    };
    let raw = conic::solve(&relaxation.conic, opts);
    let seconds = started.elapsed().as_secs_f64();

    let mass = relaxation.y2.mass();
    let (primal, dual, values) = match spec.mode {
        Mode::ComplementLower => (
            mass - raw.dual_objective,
            mass - raw.primal_objective,
            relaxation
                .y2
                .values()
                .iter()
                .zip(&raw.y)
                .map(|(total, complement)| total - complement)
                .collect(),
        ),
        _ => (raw.primal_objective, raw.dual_objective, raw.y.clone()),
    };
    let moments = MomentVector::new(relaxation.n, relaxation.basis, degree, values)?;
    let report = BoundReport {
        degree,
        primal,
        dual,
        gap: (primal - dual).abs(),
        status: raw.status,
        seconds,
        moments,
    };
    Ok(DegreeSolution {
        report,
        relaxation,
        raw,
    })
}

/// Sweep the hierarchy over a list of public degrees (each even). Levels
/// solve in parallel; a level that hits the solver's numerical limits still
/// produces a report carrying its status.
pub fn run_hierarchy(
    spec: &ProblemSpec,
    degrees: &[u32],
    opts: &SolveOptions,
) -> Result<Vec<BoundReport>, SdpError> {
    degrees
        .par_iter()
        .map(|&t| solve_degree(spec, t, opts).map(|s| s.report))
        .collect()
}

/// Dual certificate in Putinar form: `h − p = σ₀ + Σ_j σ_j g_j` with every
/// `σ` a sum of squares, hence `h ≥ p` on `K` and (with `p` the indicator
/// surrogate) `h ≥ 𝟙_K` up to the residual.
#[derive(Debug)]
pub struct Certificate {
    /// The polynomial over-approximation of the indicator of `K`.
    pub h: MultiPoly,
    pub gram_h: DMatrix<f64>,
    /// The free SOS multiplier `σ₀`.
    pub sigma0: MultiPoly,
    pub gram_sigma0: DMatrix<f64>,
    /// One SOS multiplier per localizing block, with its block name.
    pub sigmas: Vec<(String, MultiPoly)>,
    pub gram_sigmas: Vec<DMatrix<f64>>,
    /// `‖coeffs(h − p − σ₀ − Σ σ_j g_j)‖_∞`.
    pub residual_norm: f64,
}

/// Reassemble the dual multipliers of a solved relaxation into the
/// certificate polynomials.
pub fn extract_certificate(
    relax: &RelaxationProblem,
    result: &SolveResult,
) -> Result<Certificate, SdpError> {
    let nblocks = relax.conic.blocks.len();
    if result.dual_blocks.len() != nblocks {
        return Err(SdpError::DimensionMismatch {
            expected: nblocks,
            got: result.dual_blocks.len(),
        });
    }
    let psd_dual = |i: usize| -> Result<&DMatrix<f64>, SdpError> {
        let expected = relax.conic.blocks[i].size();
        match &result.dual_blocks[i] {
            DualBlock::Psd(m) if m.nrows() == expected => Ok(m),
            DualBlock::Psd(m) => Err(SdpError::DualSizeMismatch {
                index: i,
                got: m.nrows(),
                expected,
            }),
            DualBlock::Nonneg(v) => Err(SdpError::DualSizeMismatch {
                index: i,
                got: v.len(),
                expected,
            }),
        }
    };

    let rows = relax.moment_map.row_indices();
    let gram_sigma0 = psd_dual(0)?.clone();
    let gram_h = psd_dual(1)?.clone();
    let sigma0 = gram_poly(relax.n, relax.basis, rows, &gram_sigma0);
    let h = gram_poly(relax.n, relax.basis, rows, &gram_h);

    let mut residual = h.sub(&relax.objective_poly)?.sub(&sigma0)?;
    let mut sigmas = Vec::with_capacity(relax.localizers.len());
    let mut gram_sigmas = Vec::with_capacity(relax.localizers.len());
    for (j, loc) in relax.localizers.iter().enumerate() {
        let gram = psd_dual(2 + j)?.clone();
        let sigma = gram_poly(relax.n, relax.basis, loc.map.row_indices(), &gram);
        residual = residual.sub(&sigma.multiply(&loc.g)?)?;
        sigmas.push((loc.name.clone(), sigma));
        gram_sigmas.push(gram);
    }

    Ok(Certificate {
        h,
        gram_h,
        sigma0,
        gram_sigma0,
        sigmas,
        gram_sigmas,
        residual_norm: residual.coeff_inf_norm(),
    })
}

/// `v(x)ᵀ G v(x)` as a polynomial, where `v` stacks the basis elements
/// listed in `rows`.
fn gram_poly(n: usize, basis: Basis, rows: &[MultiIndex], gram: &DMatrix<f64>) -> MultiPoly {
    let mut terms: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for r in 0..rows.len() {
        for c in r..rows.len() {
            let w = if r == c {
                gram[(r, c)]
            } else {
                2.0 * gram[(r, c)]
            };
            if w == 0.0 {
                continue;
            }
            for (idx, coef) in basis_product(basis, &rows[r], &rows[c]) {
                *terms.entry(idx).or_insert(0.0) += w * coef;
            }
        }
    }
    MultiPoly::from_terms(n, basis, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::BoundingSet;
    use crate::poly::parse_poly;

    fn interval_spec() -> ProblemSpec {
        let g = parse_poly("0.5*x1 - x1^2", 1).unwrap();
        ProblemSpec::new(BoundingSet::unit_box(1), vec![g])
            .unwrap()
            .with_ball(None)
    }

    /// Moments of Lebesgue measure on [0, 1/2].
    fn interval_truth(degree: u32) -> MomentVector {
        MomentVector::tabulate(1, Basis::Monomial, degree, |alpha| {
            let k = alpha.0[0];
            0.5_f64.powi(k as i32 + 1) / (k as f64 + 1.0)
        })
    }

    #[test]
    fn interval_order_two_shapes() {
        let spec = interval_spec();
        let y2 = spec.reference_moments(4);
        let relax = build_qd(&spec, &y2, 2).unwrap();
        assert_eq!(relax.num_vars(), 5);
        let sizes: Vec<usize> = relax.conic.blocks.iter().map(|b| b.size()).collect();
        assert_eq!(sizes, vec![3, 3, 2]);
    }

    #[test]
    fn ball_localizer_appends_block() {
        let spec = interval_spec().with_ball(Some(1.0));
        let y2 = spec.reference_moments(4);
        let relax = build_qd(&spec, &y2, 2).unwrap();
        let sizes: Vec<usize> = relax.conic.blocks.iter().map(|b| b.size()).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2]);
        assert_eq!(relax.localizers.last().unwrap().name, "ball");
    }

    #[test]
    fn true_restricted_moments_are_feasible() {
        let spec = interval_spec();
        let y2 = spec.reference_moments(8);
        let relax = build_qd(&spec, &y2, 4).unwrap();
        let eigs = relax.block_min_eigenvalues(&interval_truth(8)).unwrap();
        for (k, e) in eigs.iter().enumerate() {
            assert!(*e >= -1e-9, "block {k}: min eigenvalue {e}");
        }
    }

    #[test]
    fn objective_is_linear_functional_of_density() {
        let spec = interval_spec().with_objective(parse_poly("x1", 1).unwrap());
        let y2 = spec.reference_moments(4);
        let relax = build_qd(&spec, &y2, 2).unwrap();
        assert_eq!(relax.conic.objective, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn too_low_order_is_rejected_with_minimum() {
        let g = parse_poly("1 - x1^6", 1).unwrap();
        let spec = ProblemSpec::new(BoundingSet::unit_box(1), vec![g]).unwrap();
        let y2 = spec.reference_moments(4);
        match build_qd(&spec, &y2, 2) {
            Err(SdpError::DegreeTooLow { required, got }) => {
                assert_eq!(required, 3);
                assert_eq!(got, 2);
            }
            other => panic!("expected degree error, got {other:?}"),
        }
    }

    #[test]
    fn complement_requires_single_constraint() {
        let g = parse_poly("x1", 1).unwrap();
        let spec = ProblemSpec::new(BoundingSet::unit_box(1), vec![g.clone(), g]).unwrap();
        let y2 = spec.reference_moments(4);
        match build_complement(&spec, &y2, 2) {
            Err(SdpError::ComplementConstraints(2)) => {}
            other => panic!("expected constraint-count error, got {other:?}"),
        }
    }

    #[test]
    fn integrate_with_unit_weight_reduces_to_volume_problem() {
        let spec = interval_spec();
        let y2 = spec.reference_moments(4);
        let qd = build_qd(&spec, &y2, 2).unwrap();

        let ispec = interval_spec().with_mode(Mode::Integrate {
            integrand: MultiPoly::one(1, Basis::Monomial),
        });
        let integ = build_integrate(&ispec, &y2, 2).unwrap();
        assert_eq!(qd.conic, integ.conic);
    }

    #[test]
    fn identity_gram_gives_sum_of_squared_basis_elements() {
        let rows = index_set(1, 1);
        let h = gram_poly(
            1,
            Basis::Monomial,
            &rows,
            &DMatrix::identity(2, 2),
        );
        // (1)² + (x)² = 1 + x².
        assert_eq!(h.coeff(&MultiIndex(vec![0])), 1.0);
        assert_eq!(h.coeff(&MultiIndex(vec![2])), 1.0);
        assert_eq!(h.num_terms(), 2);
    }

    #[test]
    fn bean_order_ten_has_231_decision_variables() {
        let g = parse_poly(
            "x1^3 + x1*x2^2 - x1^4 - x1^2*x2^2 - x2^4",
            2,
        )
        .unwrap();
        let spec = ProblemSpec::new(BoundingSet::unit_box(2), vec![g]).unwrap();
        let y2 = spec.reference_moments(20);
        let relax = build_qd(&spec, &y2, 10).unwrap();
        assert_eq!(relax.num_vars(), 231);
    }

    #[test]
    fn odd_or_zero_public_degrees_are_rejected()
    {
        let spec = interval_spec();
        let opts = SolveOptions::default();
        assert!(matches!(
            solve_degree(&spec, 5, &opts),
            Err(SdpError::OddDegree(5))
        ));
        assert!(matches!(
            solve_degree(&spec, 0, &opts),
            Err(SdpError::OddDegree(0))
        ));
    }
}
