mod common;

use nalgebra::SymmetricEigen;
use semivol::conic::{
    export_sdpa, import_sdpa, solve, DualBlock, SolveOptions, SolveStatus,
};

#[test]
fn random_feasible_problems_solve_to_optimality() {
    for seed in 0..100u64 {
        let p = common::random_feasible_sdp(seed);
        let opts = SolveOptions {
            trace: true,
            ..SolveOptions::default()
        };
        let r = solve(&p, &opts);
        assert_eq!(
            r.status,
            SolveStatus::Optimal,
            "seed {seed}: {:?} after {} iterations",
            r.residuals,
            r.iterations
        );
        assert!(
            r.residuals.rel_gap <= 1e-6,
            "seed {seed}: gap {}",
            r.residuals.rel_gap
        );

        // Returned multipliers must lie in their cones.
        for (k, db) in r.dual_blocks.iter().enumerate() {
            match db {
                DualBlock::Psd(x) => {
                    let eig = SymmetricEigen::new(x.clone());
                    let lam_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
                    let lam_max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
                    assert!(
                        lam_min >= -1e-8 * (1.0 + lam_max),
                        "seed {seed} block {k}: min eigenvalue {lam_min}"
                    );
                }
                DualBlock::Nonneg(x) => {
                    for (r_idx, &v) in x.iter().enumerate() {
                        assert!(v >= -1e-8, "seed {seed} block {k} row {r_idx}: {v}");
                    }
                }
            }
        }

        // Weak duality between the two objective values at every iterate
        // that is feasible to tolerance: max-side <= min-side.
        for it in &r.trace {
            if it.primal_infeas <= 1e-8 && it.dual_infeas <= 1e-8 {
                let scale = 1.0 + it.primal_objective.abs() + it.dual_objective.abs();
                assert!(
                    it.primal_objective <= it.dual_objective + 1e-9 * scale,
                    "seed {seed}: weak duality violated: {} > {}",
                    it.primal_objective,
                    it.dual_objective
                );
            }
        }
    }
}

#[test]
fn sdpa_round_trip_on_random_instances() {
    for seed in [3u64, 17, 42] {
        let p = common::random_feasible_sdp(seed);
        let text = export_sdpa(&p);
        let q = import_sdpa(&text).expect("own export must re-import");
        assert_eq!(p, q, "seed {seed}: round trip changed the problem");
        assert_eq!(export_sdpa(&q), text, "seed {seed}: export not byte-stable");
    }
}

#[test]
fn solver_is_deterministic_on_random_instances() {
    let p = common::random_feasible_sdp(11);
    let opts = SolveOptions::default();
    let a = solve(&p, &opts);
    let b = solve(&p, &opts);
    assert_eq!(a.iterations, b.iterations);
    for (x, y) in a.y.iter().zip(&b.y) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}
