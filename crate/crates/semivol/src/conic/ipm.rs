//! Primal-dual path-following interior-point method for block PSD/nonneg
//! cones, with Nesterov–Todd scaling and a dense Cholesky-factored Schur
//! complement. Designed for desk-scale problems (a few hundred variables,
//! blocks up to a couple hundred rows), favouring robustness and determinism
//! over asymptotics.
//!
//! Orientation: the problem maximizes `c·y` with slacks `S_k = F0 + Σ y_i F_i`
//! in the cone; the multiplier blocks `X_k` solve the minimization side
//! `min Σ ⟨F0, X⟩` s.t. `Σ_k ⟨F_i, X_k⟩ = -c_i`, `X ⪰ 0`. Weak duality reads
//! `c·y ≤ Σ ⟨F0, X⟩` at feasible pairs.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::{
    dot_sym, frob_sym, scatter_sym, ConeBlock, DualBlock, IterRecord, Residuals, SolveOptions,
    SolveResult, SolveStatus, SparseSym, StandardConicProblem,
};

/// Run the interior-point method. Invalid problems panic in debug via
/// `validate` at the call sites that construct them; here we re-check and
/// surface a clean error through the result status instead of panicking.
pub fn solve(p: &StandardConicProblem, opts: &SolveOptions) -> SolveResult {
    if let Err(e) = p.validate() {
        // A malformed problem cannot be iterated on at all.
        panic!("solve called on invalid problem: {e}");
    }
    Ipm::new(p, *opts).run()
}

enum BlockState {
    Psd {
        x: DMatrix<f64>,
        s: DMatrix<f64>,
    },
    Lin {
        x: Vec<f64>,
        s: Vec<f64>,
    },
}

enum Scaling {
    Psd {
        w: DMatrix<f64>,
        s_inv: DMatrix<f64>,
    },
    Lin {
        /// `w2[r] = x[r] / s[r]`.
        w2: Vec<f64>,
        s_inv: Vec<f64>,
    },
}

enum Direction {
    Psd { dx: DMatrix<f64>, ds: DMatrix<f64> },
    Lin { dx: Vec<f64>, ds: Vec<f64> },
}

struct Ipm<'a> {
    p: &'a StandardConicProblem,
    opts: SolveOptions,
    n: usize,
    nu: f64,
    /// Variables touching each block, precomputed.
    active: Vec<Vec<usize>>,
    y: Vec<f64>,
    blocks: Vec<BlockState>,
    norm_f0: f64,
    norm_c: f64,
    init_scale: f64,
}

struct Best {
    metric: f64,
    duals: Vec<DualBlock>,
    dobj: f64,
    res: Residuals,
}

/// The variable iterate `y` is judged on primal-side quality only
/// (feasibility of the affine slack and the objective gap). On badly
/// conditioned problems the multiplier side drowns in round-off first,
/// while `y` keeps improving for many more iterations; reporting the best
/// primal-side `y` keeps the recovered solution as good as the arithmetic
/// allows.
struct BestY {
    metric: f64,
    y: Vec<f64>,
    pobj: f64,
}

impl<'a> Ipm<'a> {
    fn new(p: &'a StandardConicProblem, opts: SolveOptions) -> Self {
        let n = p.num_vars();
        let mut active = Vec::with_capacity(p.blocks.len());
        let mut nu = 0.0;
        for b in &p.blocks {
            nu += b.size() as f64;
            let act: Vec<usize> = match b {
                ConeBlock::Psd(pb) => (0..n).filter(|&i| !pb.fi[i].is_empty()).collect(),
                ConeBlock::Nonneg(lb) => (0..n).filter(|&i| !lb.fi[i].is_empty()).collect(),
            };
            active.push(act);
        }
        let norm_f0: f64 = p
            .blocks
            .iter()
            .map(|b| match b {
                ConeBlock::Psd(pb) => frob_sym(&pb.f0).powi(2),
                ConeBlock::Nonneg(lb) => lb.f0.iter().map(|v| v * v).sum(),
            })
            .sum::<f64>()
            .sqrt();
        let norm_c = p.objective.iter().map(|v| v * v).sum::<f64>().sqrt();

        // Infeasible start on the central ray: X = ξI, S = ηI, sized from the
        // data so the first iterations neither collapse nor blow up.
        let mut blocks = Vec::with_capacity(p.blocks.len());
        let mut init_scale: f64 = 1.0;
        for b in &p.blocks {
            let sk = b.size() as f64;
            let (fi_norms, f0_norm): (Vec<f64>, f64) = match b {
                ConeBlock::Psd(pb) => (pb.fi.iter().map(frob_sym).collect(), frob_sym(&pb.f0)),
                ConeBlock::Nonneg(lb) => (
                    lb.fi
                        .iter()
                        .map(|f| f.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt())
                        .collect(),
                    lb.f0.iter().map(|v| v * v).sum::<f64>().sqrt(),
                ),
            };
            let mut xi: f64 = 10.0_f64.max(sk.sqrt());
            for (i, nf) in fi_norms.iter().enumerate() {
                if *nf > 0.0 {
                    xi = xi.max(sk * (1.0 + p.objective[i].abs()) / (1.0 + nf));
                }
            }
            let eta = 10.0_f64
                .max(sk.sqrt())
                .max(f0_norm)
                .max(fi_norms.iter().copied().fold(0.0, f64::max));
            init_scale = init_scale.max(xi).max(eta);
            blocks.push(match b {
                ConeBlock::Psd(pb) => BlockState::Psd {
                    x: DMatrix::identity(pb.size, pb.size) * xi,
                    s: DMatrix::identity(pb.size, pb.size) * eta,
                },
                ConeBlock::Nonneg(lb) => BlockState::Lin {
                    x: vec![xi; lb.size],
                    s: vec![eta; lb.size],
                },
            });
        }
        Ipm {
            p,
            opts,
            n,
            nu,
            active,
            y: vec![0.0; n],
            blocks,
            norm_f0,
            norm_c,
            init_scale,
        }
    }

    fn run(mut self) -> SolveResult {
        let mut trace = Vec::new();
        let mut best: Option<Best> = None;
        let mut best_y: Option<BestY> = None;
        let mut stall_count = 0usize;
        let mut last_metric = f64::INFINITY;

        for iter in 0..self.opts.max_iter {
            let (rp, rd, pinf, dinf) = self.residuals();
            let pobj = self.pobj();
            let dobj = self.dobj();
            let mu = self.mu();
            let rel_gap = (dobj - pobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let res = Residuals {
                primal_infeas: pinf,
                dual_infeas: dinf,
                rel_gap,
            };
            if self.opts.trace {
                trace.push(IterRecord {
                    mu,
                    primal_objective: pobj,
                    dual_objective: dobj,
                    primal_infeas: pinf,
                    dual_infeas: dinf,
                });
            }

            let metric = pinf.max(dinf).max(rel_gap);
            if best.as_ref().is_none_or(|b| metric < b.metric) {
                best = Some(Best {
                    metric,
                    duals: self.duals(),
                    dobj,
                    res,
                });
            }
            let metric_y = pinf.max(rel_gap);
            let y_improved = best_y.as_ref().is_none_or(|b| metric_y < b.metric);
            if y_improved {
                best_y = Some(BestY {
                    metric: metric_y,
                    y: self.y.clone(),
                    pobj,
                });
            }

            if pinf <= self.opts.tol_feas && dinf <= self.opts.tol_feas && rel_gap <= self.opts.tol_gap
            {
                return self.finish(SolveStatus::Optimal, iter, trace, best.unwrap(), best_y.unwrap());
            }

            // Endgame breakdown: once an iterate has been accurate, a
            // residual exploding three orders of magnitude past it means the
            // Schur system has run out of precision; the best iterate is the
            // answer, graded against the tolerances.
            let best_metric = best.as_ref().map(|b| b.metric).unwrap();
            if best_metric < 1e-6 && metric > 1e3 * best_metric {
                let best = best.unwrap();
                let status = self.grade(&best.res);
                return self.finish(status, iter, trace, best, best_y.unwrap());
            }

            // Diverging iterates carry certificates: a multiplier ray with
            // vanishing homogeneous residual and negative objective proves
            // the cone constraints empty; a variable ray whose slack
            // direction stays in the cone with positive objective proves
            // unboundedness.
            if let Some(status) = self.classify_divergence(&rd, dobj, 1e3) {
                return self.finish(status, iter, trace, best.unwrap(), best_y.unwrap());
            }

            // Stall detection: no meaningful progress on the worst residual
            // nor on the primal-side quality of `y`.
            if metric > 0.9999 * last_metric && !y_improved {
                stall_count += 1;
            } else {
                stall_count = 0;
            }
            last_metric = metric;
            if stall_count >= 10 {
                let best = best.unwrap();
                let status = self
                    .classify_divergence(&rd, dobj, 10.0)
                    .unwrap_or_else(|| self.grade(&best.res));
                return self.finish(status, iter, trace, best, best_y.unwrap());
            }

            let Some(scalings) = self.scalings() else {
                let best = best.unwrap();
                let status = self.grade(&best.res);
                return self.finish(status, iter, trace, best, best_y.unwrap());
            };
            let Some(schur) = self.schur_factor(&scalings) else {
                let best = best.unwrap();
                let status = self.grade(&best.res);
                return self.finish(status, iter, trace, best, best_y.unwrap());
            };

            // Predictor: pure Newton step toward mu = 0.
            let predictor = self.direction(&scalings, &schur, &rp, &rd, 0.0, mu);
            let (ax_aff, as_aff) = self.max_steps(&predictor);
            let mu_aff = self.mu_after(&predictor, ax_aff.min(1.0), as_aff.min(1.0));
            let ratio = (mu_aff / mu).clamp(0.0, 1.0);
            let sigma = ratio.powi(3).clamp(1e-8, 0.999);

            // Corrector: recentered step, same Schur factorization.
            let corrector = self.direction(&scalings, &schur, &rp, &rd, sigma, mu);
            let (ax, as_) = self.max_steps(&corrector);
            let theta = if rel_gap < 1e-4 {
                self.opts.step_fraction.max(0.99)
            } else {
                self.opts.step_fraction
            };
            let ax = (theta * ax).min(1.0);
            let as_ = (theta * as_).min(1.0);
            if ax < 1e-10 && as_ < 1e-10 {
                let best = best.unwrap();
                let status = self.grade(&best.res);
                return self.finish(status, iter, trace, best, best_y.unwrap());
            }
            self.take_step(&corrector, ax, as_);
        }
        let best = best.expect("at least one iterate recorded");
        let best_y = best_y.expect("at least one iterate recorded");
        let status = self.grade(&best.res);
        self.finish(status, self.opts.max_iter, trace, best, best_y)
    }

    /// Status for a run that could not proceed: the best iterate may
    /// nevertheless satisfy the tolerances.
    fn grade(&self, res: &Residuals) -> SolveStatus {
        if res.primal_infeas <= self.opts.tol_feas
            && res.dual_infeas <= self.opts.tol_feas
            && res.rel_gap <= self.opts.tol_gap
        {
            SolveStatus::Optimal
        } else {
            SolveStatus::NumericalLimit
        }
    }

    /// Check the current iterate for infeasibility/unboundedness rays once
    /// it has drifted `growth` times past the starting scale.
    fn classify_divergence(&self, rd: &[f64], dobj: f64, growth: f64) -> Option<SolveStatus> {
        let threshold = growth * self.init_scale;

        // Multiplier ray: Σ⟨F_i, X⟩ ≈ 0 (equals rd - c) with ⟨F0, X⟩ < 0.
        let xnorm = self
            .blocks
            .iter()
            .map(|st| match st {
                BlockState::Psd { x, .. } => x.norm_squared(),
                BlockState::Lin { x, .. } => x.iter().map(|v| v * v).sum(),
            })
            .sum::<f64>()
            .sqrt();
        if xnorm > threshold {
            let ray_res = rd
                .iter()
                .zip(&self.p.objective)
                .map(|(r, c)| (r - c).powi(2))
                .sum::<f64>()
                .sqrt()
                / xnorm;
            if ray_res <= 1e-7 && dobj / xnorm < -1e-7 {
                return Some(SolveStatus::Infeasible);
            }
        }

        // Variable ray: F(y) - F0 stays (near) in the cone while c·y grows.
        let ynorm = self.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ynorm > threshold {
            let ray_obj: f64 = self
                .p
                .objective
                .iter()
                .zip(&self.y)
                .map(|(c, y)| c * y / ynorm)
                .sum();
            if ray_obj > 1e-7 && self.ray_slack_min(ynorm) >= -1e-7 {
                return Some(SolveStatus::Unbounded);
            }
        }
        None
    }

    /// Smallest eigenvalue/component of `Σ (y_i/ynorm) F_i` across blocks.
    fn ray_slack_min(&self, ynorm: f64) -> f64 {
        let mut lo = f64::INFINITY;
        for b in &self.p.blocks {
            match b {
                ConeBlock::Psd(pb) => {
                    let mut m = DMatrix::<f64>::zeros(pb.size, pb.size);
                    for (yi, f) in self.y.iter().zip(&pb.fi) {
                        if *yi != 0.0 && !f.is_empty() {
                            scatter_sym(&mut m, f, yi / ynorm);
                        }
                    }
                    let lam = SymmetricEigen::new(m)
                        .eigenvalues
                        .iter()
                        .copied()
                        .fold(f64::INFINITY, f64::min);
                    lo = lo.min(lam);
                }
                ConeBlock::Nonneg(lb) => {
                    let mut v = vec![0.0; lb.size];
                    for (yi, f) in self.y.iter().zip(&lb.fi) {
                        for &(r, fv) in f {
                            v[r as usize] += yi / ynorm * fv;
                        }
                    }
                    lo = v.iter().copied().fold(lo, f64::min);
                }
            }
        }
        lo
    }

    fn finish(
        &self,
        status: SolveStatus,
        iterations: usize,
        trace: Vec<IterRecord>,
        best: Best,
        best_y: BestY,
    ) -> SolveResult {
        // Multipliers, status, and residuals come from the iterate with the
        // best worst-case residual; the variable vector comes from the
        // best primal-side iterate, which on stiff problems keeps improving
        // after round-off has frozen the multiplier side. Its feasibility
        // and gap are no worse than the graded residuals.
        SolveResult {
            status,
            y: best_y.y,
            dual_blocks: best.duals,
            primal_objective: best_y.pobj,
            dual_objective: best.dobj,
            iterations,
            residuals: best.res,
            trace,
        }
    }

    fn pobj(&self) -> f64 {
        self.p.objective.iter().zip(&self.y).map(|(c, y)| c * y).sum()
    }

    fn dobj(&self) -> f64 {
        self.p
            .blocks
            .iter()
            .zip(&self.blocks)
            .map(|(b, st)| match (b, st) {
                (ConeBlock::Psd(pb), BlockState::Psd { x, .. }) => dot_sym(&pb.f0, x),
                (ConeBlock::Nonneg(lb), BlockState::Lin { x, .. }) => {
                    lb.f0.iter().zip(x).map(|(f, xv)| f * xv).sum()
                }
                _ => unreachable!(),
            })
            .sum()
    }

    fn mu(&self) -> f64 {
        let total: f64 = self
            .blocks
            .iter()
            .map(|st| match st {
                BlockState::Psd { x, s } => x.dot(s),
                BlockState::Lin { x, s } => x.iter().zip(s).map(|(a, b)| a * b).sum(),
            })
            .sum();
        total / self.nu
    }

    fn duals(&self) -> Vec<DualBlock> {
        self.blocks
            .iter()
            .map(|st| match st {
                BlockState::Psd { x, .. } => DualBlock::Psd(x.clone()),
                BlockState::Lin { x, .. } => DualBlock::Nonneg(x.clone()),
            })
            .collect()
    }

    /// Slack residual matrices `Rp_k = F0 + Σ y_i F_i - S_k`, multiplier
    /// residual vector `rd_i = c_i + Σ_k ⟨F_i, X_k⟩`, and their scaled norms.
    #[allow(clippy::type_complexity)]
    fn residuals(&self) -> (Vec<Direction>, Vec<f64>, f64, f64) {
        let mut rp = Vec::with_capacity(self.blocks.len());
        let mut rp_norm2 = 0.0;
        let mut rd = self.p.objective.clone();
        for ((b, st), act) in self.p.blocks.iter().zip(&self.blocks).zip(&self.active) {
            match (b, st) {
                (ConeBlock::Psd(pb), BlockState::Psd { x, s }) => {
                    let mut m = pb.affine(&self.y);
                    m -= s;
                    rp_norm2 += m.norm_squared();
                    for &i in act {
                        rd[i] += dot_sym(&pb.fi[i], x);
                    }
                    rp.push(Direction::Psd {
                        dx: DMatrix::zeros(0, 0),
                        ds: m,
                    });
                }
                (ConeBlock::Nonneg(lb), BlockState::Lin { x, s }) => {
                    let mut v = lb.affine(&self.y);
                    for (vr, sr) in v.iter_mut().zip(s) {
                        *vr -= sr;
                    }
                    rp_norm2 += v.iter().map(|a| a * a).sum::<f64>();
                    for &i in act {
                        for &(r, f) in &lb.fi[i] {
                            rd[i] += f * x[r as usize];
                        }
                    }
                    rp.push(Direction::Lin { dx: Vec::new(), ds: v });
                }
                _ => unreachable!(),
            }
        }
        let pinf = rp_norm2.sqrt() / (1.0 + self.norm_f0);
        let dinf = rd.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + self.norm_c);
        (rp, rd, pinf, dinf)
    }

    /// Nesterov–Todd scaling per block: `W S W = X` with symmetric `W ≻ 0`.
    fn scalings(&self) -> Option<Vec<Scaling>> {
        let mut out = Vec::with_capacity(self.blocks.len());
        for st in &self.blocks {
            match st {
                BlockState::Psd { x, s } => {
                    let chol_s = Cholesky::new(s.clone())?;
                    let ls = chol_s.l();
                    // Y = Lsᵀ X Ls is SPD; its eigensystem gives
                    // W = (Ls⁻ᵀ U) Λ^(1/2) (Ls⁻ᵀ U)ᵀ, which satisfies WSW = X.
                    let y = ls.transpose() * x * &ls;
                    let eig = SymmetricEigen::new(y);
                    let lam_max = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
                    let floor = (lam_max * 1e-300).max(f64::MIN_POSITIVE);
                    let g = ls
                        .transpose()
                        .solve_upper_triangular(&eig.eigenvectors)?;
                    let mut g_scaled = g.clone();
                    for (j, mut col) in g_scaled.column_iter_mut().enumerate() {
                        col *= eig.eigenvalues[j].max(floor).sqrt();
                    }
                    let w = &g_scaled * g.transpose();
                    out.push(Scaling::Psd {
                        w,
                        s_inv: chol_s.inverse(),
                    });
                }
                BlockState::Lin { x, s } => {
                    if s.iter().any(|&v| v <= 0.0) {
                        return None;
                    }
                    out.push(Scaling::Lin {
                        w2: x.iter().zip(s).map(|(xv, sv)| xv / sv).collect(),
                        s_inv: s.iter().map(|sv| 1.0 / sv).collect(),
                    });
                }
            }
        }
        Some(out)
    }

    /// Assemble and factor the Schur complement
    /// `M_ij = Σ_k ⟨F_i, W F_j W⟩  (+ Σ_r f_i f_j w2 for nonneg blocks)`.
    /// Assemble and factor the Schur complement; the unfactored matrix is
    /// returned alongside so solves can be iteratively refined.
    fn schur_factor(&self, scalings: &[Scaling]) -> Option<SchurSystem> {
        let mut m = DMatrix::<f64>::zeros(self.n, self.n);
        for ((b, sc), act) in self.p.blocks.iter().zip(scalings).zip(&self.active) {
            match (b, sc) {
                (ConeBlock::Psd(pb), Scaling::Psd { w, .. }) => {
                    for (pos, &i) in act.iter().enumerate() {
                        let t = congruence(w, &pb.fi[i]);
                        for &j in &act[pos..] {
                            let v = dot_sym(&pb.fi[j], &t);
                            m[(i, j)] += v;
                            if i != j {
                                m[(j, i)] += v;
                            }
                        }
                    }
                }
                (ConeBlock::Nonneg(lb), Scaling::Lin { w2, .. }) => {
                    let mut dense = vec![0.0; lb.size];
                    for (pos, &i) in act.iter().enumerate() {
                        for d in dense.iter_mut() {
                            *d = 0.0;
                        }
                        for &(r, v) in &lb.fi[i] {
                            dense[r as usize] = v * w2[r as usize];
                        }
                        for &j in &act[pos..] {
                            let v: f64 = lb.fi[j]
                                .iter()
                                .map(|&(r, f)| f * dense[r as usize])
                                .sum();
                            m[(i, j)] += v;
                            if i != j {
                                m[(j, i)] += v;
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        // Equilibrate before factoring: near convergence the diagonal spans
        // many orders of magnitude (each block contributes ~‖X‖²/μ), and a
        // Cholesky of the symmetrically scaled matrix — unit diagonal —
        // loses far fewer digits than one of the raw matrix.
        let scale = DVector::from_fn(self.n, |i, _| {
            let d = m[(i, i)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        });
        let mut ms = m.clone();
        for j in 0..self.n {
            for i in 0..self.n {
                ms[(i, j)] *= scale[i] * scale[j];
            }
        }
        // Ridge escalation: the Schur complement is PD in exact arithmetic
        // but can lose definiteness to round-off near convergence. The
        // scaled matrix has unit diagonal, so the ridge is absolute.
        let mut ridge = 0.0;
        loop {
            let mut attempt = ms.clone();
            if ridge > 0.0 {
                for i in 0..self.n {
                    attempt[(i, i)] += ridge;
                }
            }
            if let Some(chol) = Cholesky::new(attempt) {
                return Some(SchurSystem { chol, scale, m });
            }
            ridge = if ridge == 0.0 { 1e-14 } else { ridge * 100.0 };
            if ridge > 1e-6 {
                return None;
            }
        }
    }

    /// Solve for the search direction at centering weight `sigma`.
    fn direction(
        &self,
        scalings: &[Scaling],
        schur: &SchurSystem,
        rp: &[Direction],
        rd: &[f64],
        sigma: f64,
        mu: f64,
    ) -> (Vec<f64>, Vec<Direction>) {
        // rhs_i = rd_i + Σ_k ⟨F_i, Rc_k - W Rp_k W⟩,  Rc = σμ S⁻¹ - X.
        let mut rhs = DVector::from_column_slice(rd);
        let mut q_blocks: Vec<Direction> = Vec::with_capacity(self.blocks.len());
        for (((b, sc), st), rp_k) in self
            .p
            .blocks
            .iter()
            .zip(scalings)
            .zip(&self.blocks)
            .zip(rp)
        {
            match (b, sc, st, rp_k) {
                (
                    ConeBlock::Psd(pb),
                    Scaling::Psd { w, s_inv },
                    BlockState::Psd { x, .. },
                    Direction::Psd { ds: rp_mat, .. },
                ) => {
                    let mut q = s_inv * (sigma * mu);
                    q -= x;
                    q -= w * rp_mat * w;
                    for i in 0..self.n {
                        if !pb.fi[i].is_empty() {
                            rhs[i] += dot_sym(&pb.fi[i], &q);
                        }
                    }
                    q_blocks.push(Direction::Psd {
                        dx: q,
                        ds: DMatrix::zeros(0, 0),
                    });
                }
                (
                    ConeBlock::Nonneg(lb),
                    Scaling::Lin { w2, s_inv },
                    BlockState::Lin { x, .. },
                    Direction::Lin { ds: rp_vec, .. },
                ) => {
                    let q: Vec<f64> = (0..lb.size)
                        .map(|r| sigma * mu * s_inv[r] - x[r] - w2[r] * rp_vec[r])
                        .collect();
                    for i in 0..self.n {
                        for &(r, f) in &lb.fi[i] {
                            rhs[i] += f * q[r as usize];
                        }
                    }
                    q_blocks.push(Direction::Lin {
                        dx: q,
                        ds: Vec::new(),
                    });
                }
                _ => unreachable!(),
            }
        }
        // The Schur complement turns badly conditioned as mu shrinks (and
        // the factorization may carry a ridge); iterative refinement against
        // the unperturbed matrix claws back the lost digits. Any solve error
        // left here becomes dual infeasibility after the step, so the
        // residuals are accumulated in twofold precision — plain double
        // residuals stop helping once cond(M)·eps approaches one.
        let dy = refined_solve(schur, &rhs);

        // ΔS = Rp + Σ Δy_i F_i.  Since Q already carries -W Rp W, the
        // complementarity update is ΔX = Rc - W ΔS W = Q - W (Σ Δy_i F_i) W.
        let mut dirs = Vec::with_capacity(self.blocks.len());
        for (((b, sc), rp_k), q_k) in self.p.blocks.iter().zip(scalings).zip(rp).zip(q_blocks) {
            match (b, sc, rp_k, q_k) {
                (
                    ConeBlock::Psd(pb),
                    Scaling::Psd { w, .. },
                    Direction::Psd { ds: rp_mat, .. },
                    Direction::Psd { dx: q, .. },
                ) => {
                    let mut ds_var = DMatrix::<f64>::zeros(pb.size, pb.size);
                    for i in 0..self.n {
                        if dy[i] != 0.0 && !pb.fi[i].is_empty() {
                            scatter_sym(&mut ds_var, &pb.fi[i], dy[i]);
                        }
                    }
                    let mut dx = &q - w * &ds_var * w;
                    // Symmetrize against round-off drift.
                    let dxt = dx.transpose();
                    dx += dxt;
                    dx *= 0.5;
                    dirs.push(Direction::Psd {
                        dx,
                        ds: ds_var + rp_mat,
                    });
                }
                (
                    ConeBlock::Nonneg(lb),
                    Scaling::Lin { w2, .. },
                    Direction::Lin { ds: rp_vec, .. },
                    Direction::Lin { dx: q, .. },
                ) => {
                    let mut ds_var = vec![0.0; lb.size];
                    for i in 0..self.n {
                        if dy[i] != 0.0 {
                            for &(r, f) in &lb.fi[i] {
                                ds_var[r as usize] += dy[i] * f;
                            }
                        }
                    }
                    let dx: Vec<f64> = (0..lb.size)
                        .map(|r| q[r] - w2[r] * ds_var[r])
                        .collect();
                    let ds: Vec<f64> = ds_var
                        .iter()
                        .zip(rp_vec)
                        .map(|(a, b)| a + b)
                        .collect();
                    dirs.push(Direction::Lin { dx, ds });
                }
                _ => unreachable!(),
            }
        }
        (dy.iter().copied().collect(), dirs)
    }

    /// Largest multiples of (ΔX, ΔS) keeping X and S in their cones.
    fn max_steps(&self, dir: &(Vec<f64>, Vec<Direction>)) -> (f64, f64) {
        let mut ax = f64::INFINITY;
        let mut as_ = f64::INFINITY;
        for (st, d) in self.blocks.iter().zip(&dir.1) {
            match (st, d) {
                (BlockState::Psd { x, s }, Direction::Psd { dx, ds }) => {
                    ax = ax.min(psd_max_step(x, dx));
                    as_ = as_.min(psd_max_step(s, ds));
                }
                (BlockState::Lin { x, s }, Direction::Lin { dx, ds }) => {
                    for (xv, dv) in x.iter().zip(dx) {
                        if *dv < 0.0 {
                            ax = ax.min(-xv / dv);
                        }
                    }
                    for (sv, dv) in s.iter().zip(ds) {
                        if *dv < 0.0 {
                            as_ = as_.min(-sv / dv);
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        (ax, as_)
    }

    fn mu_after(&self, dir: &(Vec<f64>, Vec<Direction>), ax: f64, as_: f64) -> f64 {
        let mut total = 0.0;
        for (st, d) in self.blocks.iter().zip(&dir.1) {
            match (st, d) {
                (BlockState::Psd { x, s }, Direction::Psd { dx, ds }) => {
                    let xn = x + dx * ax;
                    let sn = s + ds * as_;
                    total += xn.dot(&sn);
                }
                (BlockState::Lin { x, s }, Direction::Lin { dx, ds }) => {
                    for r in 0..x.len() {
                        total += (x[r] + ax * dx[r]) * (s[r] + as_ * ds[r]);
                    }
                }
                _ => unreachable!(),
            }
        }
        (total / self.nu).max(0.0)
    }

    fn take_step(&mut self, dir: &(Vec<f64>, Vec<Direction>), ax: f64, as_: f64) {
        for (yi, dyi) in self.y.iter_mut().zip(&dir.0) {
            *yi += as_ * dyi;
        }
        for (st, d) in self.blocks.iter_mut().zip(&dir.1) {
            match (st, d) {
                (BlockState::Psd { x, s }, Direction::Psd { dx, ds }) => {
                    *x += dx * ax;
                    *s += ds * as_;
                }
                (BlockState::Lin { x, s }, Direction::Lin { dx, ds }) => {
                    for r in 0..x.len() {
                        x[r] += ax * dx[r];
                        s[r] += as_ * ds[r];
                    }
                }
                _ => unreachable!(),
            }
        }
    }
}

/// `W A W` for sparse symmetric `A`, via rank-one accumulation over the
/// entries of `A` (cheap when `A` has few entries, the common case here).
fn congruence(w: &DMatrix<f64>, a: &SparseSym) -> DMatrix<f64> {
    let s = w.nrows();
    let mut t = DMatrix::zeros(s, s);
    for &(r, c, v) in a {
        let (r, c) = (r as usize, c as usize);
        t.ger(v, &w.column(r), &w.column(c), 1.0);
        if r != c {
            t.ger(v, &w.column(c), &w.column(r), 1.0);
        }
    }
    t
}

/// `b - M x` with products and sums compensated (two-product via FMA,
/// two-sum), so the result stays accurate even when `M x` nearly cancels
/// `b` — the situation iterative refinement lives in.
/// The Schur complement `M`, held twice: the raw matrix for residuals and
/// a Cholesky factor of the symmetrically equilibrated `D^{-1/2} M D^{-1/2}`
/// (unit diagonal) for solves.
struct SchurSystem {
    chol: Cholesky<f64, Dyn>,
    /// `1/√diag(M)` — the equilibration applied on both sides.
    scale: DVector<f64>,
    m: DMatrix<f64>,
}

impl SchurSystem {
    /// One preconditioned solve of `M x = b` (no refinement).
    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut z = b.component_mul(&self.scale);
        self.chol.solve_mut(&mut z);
        z.component_mul(&self.scale)
    }
}

fn compensated_residual(m: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    let mut r = DVector::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        let mut err = 0.0;
        for j in 0..n {
            let a = -m[(i, j)];
            let p = a * x[j];
            let pe = a.mul_add(x[j], -p);
            let t = s + p;
            let z = t - s;
            let se = (s - (t - z)) + (p - z);
            s = t;
            err += pe + se;
        }
        r[i] = s + err;
    }
    r
}

/// Solve `M dy = rhs` through the equilibrated (possibly ridged) factor,
/// polished by iterative refinement with compensated residuals; returns the
/// iterate with the smallest residual norm.
fn refined_solve(schur: &SchurSystem, rhs: &DVector<f64>) -> DVector<f64> {
    let mut dy = schur.solve(rhs);
    let mut best_norm = f64::INFINITY;
    let mut best = dy.clone();
    for _ in 0..4 {
        let r = compensated_residual(&schur.m, &dy, rhs);
        let rn = r.norm();
        if !rn.is_finite() {
            break;
        }
        if rn < best_norm {
            best_norm = rn;
            best.copy_from(&dy);
        } else {
            break;
        }
        if rn == 0.0 {
            break;
        }
        dy += schur.solve(&r);
    }
    let r = compensated_residual(&schur.m, &dy, rhs);
    if r.norm() < best_norm {
        dy
    } else {
        best
    }
}

/// Largest `α` with `X + α ΔX ⪰ 0`, via `λ_min(L⁻¹ ΔX L⁻ᵀ)`.
fn psd_max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let Some(half) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(inner) = l.solve_lower_triangular(&half.transpose()) else {
        return 0.0;
    };
    let mut sym = inner.clone();
    sym += inner.transpose();
    sym *= 0.5;
    let lam_min = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lam_min >= -1e-300 {
        f64::INFINITY
    } else {
        -1.0 / lam_min
    }
}
