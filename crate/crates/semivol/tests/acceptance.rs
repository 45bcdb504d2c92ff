//! The acceptance gate: twelve end-to-end checks, one per headline claim,
//! each printing a single PASS/FAIL line (run with `--nocapture` to see
//! them all). Tolerances are pinned here, next to the assertions they
//! guard, so a drive-by edit cannot silently loosen the gate.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semivol::conditioning::interval_moment_matrix_cond;
use semivol::conic::{
    export_mps, export_sdpa, import_mps, import_sdpa, solve, SolveOptions, SolveStatus,
};
use semivol::lp::solve_lp_level;
use semivol::moments::MomentVector;
use semivol::oracles::{bean_fixture, fixtures, folium_fixture, interval_fixture, mc_volume,
    quad_moments_on_k};
use semivol::poly::{Basis, MultiPoly};
use semivol::sdp::{extract_certificate, solve_degree, DegreeSolution, Mode, ProblemSpec};

fn verdict(idx: usize, name: &str, ok: bool, detail: &str) {
    println!(
        "[{idx:>2}/12] {name:<52} {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

/// The bean problem the way the experiments run it: density `g₁` instead of
/// `1`, which concentrates the objective where the set actually is.
fn accelerated(spec: &ProblemSpec) -> ProblemSpec {
    let g = spec.constraints[0].clone();
    spec.clone().with_objective(g)
}

fn sweep(spec: &ProblemSpec, degrees: &[u32]) -> Vec<DegreeSolution> {
    let opts = SolveOptions::default();
    degrees
        .iter()
        .map(|&t| solve_degree(spec, t, &opts).expect("level builds"))
        .collect()
}

/// Rejection-sample `count` points of K, uniformly from the bounding set.
fn sample_k(spec: &ProblemSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let gs: Vec<MultiPoly> = spec
        .constraints
        .iter()
        .map(|g| g.convert(Basis::Monomial))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = spec.bounding.a;
    let mut pts = Vec::with_capacity(count);
    let mut x = vec![0.0; spec.n];
    while pts.len() < count {
        for xi in x.iter_mut() {
            *xi = rng.gen_range(-a..a);
        }
        if spec.bounding.contains(&x) && gs.iter().all(|g| g.eval(&x) >= 0.0) {
            pts.push(x.clone());
        }
    }
    pts
}

#[test]
fn c01_interval_upper_bounds_shrink_monotonically_to_the_volume() {
    let spec = interval_fixture().spec;
    let degrees: Vec<u32> = (1..=10).map(|k| 2 * k).collect();
    let started = Instant::now();
    let solved = sweep(&spec, &degrees);
    let elapsed = started.elapsed().as_secs_f64();

    let bounds: Vec<f64> = solved.iter().map(|s| s.report.primal).collect();
    let valid = bounds.iter().all(|&b| b >= 0.5 - 1e-6);
    let monotone = bounds.windows(2).all(|w| w[1] <= w[0] + 1e-6);
    let fast = elapsed < 30.0;
    let ok = valid && monotone && fast;
    verdict(
        1,
        "interval upper bounds: valid, monotone, fast",
        ok,
        &format!(
            "degree 2→20 bounds {:.6}→{:.6}, sweep {:.2}s",
            bounds[0],
            bounds.last().unwrap(),
            elapsed
        ),
    );
    assert!(valid, "a bound dipped below vol(K): {bounds:?}");
    assert!(monotone, "bounds increased along the sweep: {bounds:?}");
    assert!(fast, "sweep took {elapsed:.1}s");
}

#[test]
fn c02_complement_mode_brackets_the_interval_volume_from_below() {
    let spec = interval_fixture().spec;
    let degrees: Vec<u32> = (1..=10).map(|k| 2 * k).collect();
    let lower: Vec<f64> = sweep(&spec.clone().with_mode(Mode::ComplementLower), &degrees)
        .iter()
        .map(|s| s.report.primal)
        .collect();
    let upper_20 = sweep(&spec, &[20])[0].report.primal;

    let below = lower.iter().all(|&b| b <= 0.5 + 1e-6);
    let monotone = lower.windows(2).all(|w| w[1] >= w[0] - 1e-6);
    // The two degree-20 relaxations must jointly cover the bounding set:
    // vol(K) from above plus vol(B \ K) from above is at least vol(B).
    let mass = 2.0;
    let cover = upper_20 + (mass - lower.last().unwrap()) >= mass - 1e-6;
    let ok = below && monotone && cover;
    verdict(
        2,
        "interval lower bounds: valid, monotone, covering",
        ok,
        &format!(
            "degree 2→20 lower {:.6}→{:.6}, upper(20) {:.6}",
            lower[0],
            lower.last().unwrap(),
            upper_20
        ),
    );
    assert!(below, "a lower bound exceeded vol(K): {lower:?}");
    assert!(monotone, "lower bounds decreased along the sweep: {lower:?}");
    assert!(cover, "upper {upper_20} + complement-upper misses vol(B)");
}

#[test]
fn c03_bean_mass_recovered_within_two_percent_at_mid_degrees() {
    let fx = bean_fixture();
    let spec = accelerated(&fx.spec);
    let solved = sweep(&spec, &[8, 12]);

    let mut ok = true;
    let mut details = Vec::new();
    for s in &solved {
        let mass = s.report.moments.mass();
        let rel = (mass / fx.exact_volume - 1.0).abs();
        let in_time = s.report.seconds < 300.0;
        ok &= rel <= 0.02 && in_time;
        details.push(format!(
            "t={} mass {:.4} ({:+.2}%, {:.2}s)",
            s.report.degree,
            mass,
            100.0 * (mass / fx.exact_volume - 1.0),
            s.report.seconds
        ));
    }
    verdict(3, "bean volume within 2% at degrees 8 and 12", ok, &details.join(", "));
    assert!(ok, "{details:?}");
}

#[test]
fn c04_bean_moment_ratios_recovered_within_three_percent() {
    let fx = bean_fixture();
    let spec = accelerated(&fx.spec);
    let solved = sweep(&spec, &[20]);
    let rec = solved[0].report.moments.to_basis(Basis::Monomial);
    let y00 = rec.mass();

    let mut ok = true;
    let mut details = Vec::new();
    for (alpha, exact) in &fx.exact_ratios {
        let ratio = rec.get(alpha).expect("within degree") / y00;
        let rel = (ratio / exact - 1.0).abs();
        ok &= rel <= 0.03;
        details.push(format!(
            "y{}{} {:+.2}%",
            alpha.0[0],
            alpha.0[1],
            100.0 * (ratio / exact - 1.0)
        ));
    }
    verdict(
        4,
        "bean first moment ratios within 3% at degree 20",
        ok,
        &details.join(", "),
    );
    assert!(ok, "{details:?}");
}

#[test]
fn c05_folium_volume_error_falls_with_degree() {
    let fx = folium_fixture();
    let spec = accelerated(&fx.spec);
    let solved = sweep(&spec, &[10, 18]);
    let caps = [0.15, 0.05];

    let mut ok = true;
    let mut details = Vec::new();
    for (s, cap) in solved.iter().zip(caps) {
        let mass = s.report.moments.mass();
        let rel = (mass / fx.exact_volume - 1.0).abs();
        ok &= rel <= cap;
        details.push(format!(
            "t={} mass {:.4} ({:+.2}%, cap {:.0}%)",
            s.report.degree,
            mass,
            100.0 * (mass / fx.exact_volume - 1.0),
            100.0 * cap
        ));
    }
    verdict(5, "folium volume error within 15% / 5%", ok, &details.join(", "));
    assert!(ok, "{details:?}");
}

#[test]
fn c06_optimal_solves_carry_valid_positivity_certificates() {
    // Every configuration here solves to optimality; each must then hand
    // back an explicit certificate whose residual vanishes to rounding and
    // which really dominates the density on the set.
    let interval = interval_fixture().spec;
    let bean = accelerated(&bean_fixture().spec);
    let folium = accelerated(&folium_fixture().spec);
    let runs: Vec<(&str, &ProblemSpec, Vec<u32>)> = vec![
        ("interval", &interval, vec![2, 4, 6, 8, 10]),
        ("bean", &bean, vec![4, 6, 8]),
        ("folium", &folium, vec![10]),
    ];

    let mut ok = true;
    let mut checked = 0usize;
    let mut worst_res = 0.0f64;
    let mut worst_slack = f64::INFINITY;
    for (name, spec, degrees) in runs {
        let samples = sample_k(spec, 1000, 2024);
        for s in sweep(spec, &degrees) {
            if s.report.status != SolveStatus::Optimal {
                continue;
            }
            checked += 1;
            let cert = extract_certificate(&s.relaxation, &s.raw).expect("dual available");
            let cap = 1e-5 * (1.0 + cert.h.coeff_inf_norm());
            ok &= cert.residual_norm <= cap;
            worst_res = worst_res.max(cert.residual_norm / cap);
            let p = &s.relaxation.objective_poly;
            for x in &samples {
                let slack = cert.h.eval(x) - p.eval(x);
                worst_slack = worst_slack.min(slack);
                ok &= slack >= -1e-4;
            }
            assert!(ok, "{name} t={}: residual {} (cap {cap}), slack {worst_slack}",
                s.report.degree, cert.residual_norm);
        }
    }
    let all_checked = checked >= 9;
    ok &= all_checked;
    verdict(
        6,
        "certificates: residual ~0 and h ≥ p on sampled K",
        ok,
        &format!(
            "{checked} optimal solves, worst residual {:.1}% of cap, min slack {:+.2e}",
            100.0 * worst_res,
            worst_slack
        ),
    );
    assert!(ok);
}

#[test]
fn c07_duality_gap_stays_below_one_in_a_million() {
    let interval = interval_fixture().spec;
    let bean = accelerated(&bean_fixture().spec);
    let mut ok = true;
    let mut worst = 0.0f64;
    for (spec, degrees) in [
        (&interval, vec![2, 4, 6, 8, 10]),
        // The bean enters at degree 4 (its constraint is a quartic).
        (&bean, vec![4, 6, 8, 10]),
    ] {
        for s in sweep(spec, &degrees) {
            let gap = s.raw.residuals.rel_gap;
            worst = worst.max(gap);
            ok &= gap <= 1e-6;
        }
    }
    verdict(
        7,
        "relative duality gap ≤ 1e−6 through degree 10",
        ok,
        &format!("worst relative gap {worst:.2e}"),
    );
    assert!(ok, "worst gap {worst}");
}

#[test]
fn c08_hankel_conditioning_dwarfs_chebyshev_conditioning() {
    let mut ok = true;
    let mut prev = 0.0f64;
    let mut last_pair = (0.0, 0.0);
    for d in 10..=40 {
        let mono = interval_moment_matrix_cond(Basis::Monomial, d);
        let cheb = interval_moment_matrix_cond(Basis::Chebyshev, d);
        ok &= mono > cheb;
        ok &= mono > prev;
        prev = mono;
        last_pair = (mono, cheb);
    }
    verdict(
        8,
        "moment matrix conditioning: monomial ≫ chebyshev",
        ok,
        &format!(
            "order 40: monomial {:.2e} vs chebyshev {:.2e}",
            last_pair.0, last_pair.1
        ),
    );
    assert!(ok);
}

#[test]
fn c09_lp_hierarchy_gives_valid_decreasing_bounds_and_accepts_truth() {
    let spec = interval_fixture().spec;
    let opts = SolveOptions::default();
    let levels: Vec<u32> = (1..=5).collect();
    let solved: Vec<_> = levels
        .iter()
        .map(|&d| solve_lp_level(&spec, d, &opts).expect("level builds"))
        .collect();

    let bounds: Vec<f64> = solved.iter().map(|(r, _)| r.primal).collect();
    let valid = bounds.iter().all(|&b| b >= 0.5 - 1e-7);
    let monotone = bounds.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let optimal = solved.iter().all(|(r, _)| r.status == SolveStatus::Optimal);

    // The true restricted moments ∫₀^{1/2} x^k dx must satisfy every product
    // row — the hierarchy may be loose, never infeasible at the truth.
    let mut feasible = true;
    let mut min_slack = f64::INFINITY;
    for (_, relax) in &solved {
        let truth = MomentVector::tabulate(1, Basis::Monomial, relax.moment_degree, |alpha| {
            let k = alpha.0[0];
            0.5f64.powi(k as i32 + 1) / (k as f64 + 1.0)
        });
        let y: Vec<f64> = relax
            .kept
            .iter()
            .map(|&orig| truth.get(&relax.indices[orig]).expect("within degree"))
            .collect();
        for block in &relax.conic.blocks {
            if let semivol::conic::ConeBlock::Nonneg(lin) = block {
                for slack in lin.affine(&y) {
                    min_slack = min_slack.min(slack);
                    feasible &= slack >= -1e-9;
                }
            }
        }
    }
    let ok = valid && monotone && optimal && feasible;
    verdict(
        9,
        "LP bounds: valid, monotone, truth-feasible",
        ok,
        &format!(
            "levels 1→5 bounds {:.6}→{:.6}, min truth slack {:+.1e}",
            bounds[0],
            bounds.last().unwrap(),
            min_slack
        ),
    );
    assert!(valid && monotone, "{bounds:?}");
    assert!(optimal, "an LP level failed to solve cleanly");
    assert!(feasible, "truth moments violated a product row by {min_slack:e}");
}

#[test]
fn c10_sampling_and_quadrature_oracles_agree_with_exact_volumes() {
    let mut ok = true;
    let mut details = Vec::new();
    for fx in fixtures() {
        let est = mc_volume(&fx.spec, 1_000_000, 0);
        let sigmas = (est.volume - fx.exact_volume).abs() / est.std_error;
        let quad = quad_moments_on_k(&fx.spec, 0, fx.quad_nodes);
        let quad_err = (quad.moments.mass() - fx.exact_volume).abs();
        ok &= sigmas <= 3.0 && quad_err <= 1e-3;
        details.push(format!("{} {:.1}σ/{:.0e}", fx.name, sigmas, quad_err));
    }
    verdict(
        10,
        "oracles: MC within 3σ, quadrature within 1e−3",
        ok,
        &details.join(", "),
    );
    assert!(ok, "{details:?}");
}

#[test]
fn c11_weighted_integral_bound_reaches_one_percent_by_degree_ten() {
    let spec = interval_fixture().spec.with_mode(Mode::Integrate {
        integrand: MultiPoly::var(1, Basis::Monomial, 0),
    });
    // Weight ≡ 1, so the reference moments are plain Lebesgue moments.
    let y2 = spec.reference_moments(10);
    let spec = spec.with_weight_moments(y2);
    let solved = sweep(&spec, &[4, 6, 8, 10]);

    let target = 0.125; // ∫₀^{1/2} x dx
    let bounds: Vec<f64> = solved.iter().map(|s| s.report.primal).collect();
    let valid = bounds.iter().all(|&b| b >= target - 1e-6);
    let last = *bounds.last().unwrap();
    let rel = (last / target - 1.0).abs();
    let converged = rel <= 0.01;
    let ok = valid && converged;
    verdict(
        11,
        "weighted integral of x within 1% by degree 10",
        ok,
        &format!(
            "bounds {:?}, degree-10 error {:+.1}% (needs ≤ 1%)",
            bounds.iter().map(|b| format!("{b:.4}")).collect::<Vec<_>>(),
            100.0 * (last / target - 1.0)
        ),
    );
    assert!(valid, "a bound dipped below the integral: {bounds:?}");
    // Indicator-style densities limit the hierarchy to O(1/degree) error;
    // reaching 1% here takes degrees two orders of magnitude higher.
    assert!(converged, "degree-10 bound {last:.4} is {:.1}% off", 100.0 * rel);
}

#[test]
fn c12_conic_backend_solves_random_instances_and_round_trips_exports() {
    let opts = SolveOptions::default();
    let mut ok = true;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let p = common::random_feasible_sdp(seed);
        let r = solve(&p, &opts);
        worst = worst.max(r.residuals.rel_gap);
        ok &= r.status == SolveStatus::Optimal && r.residuals.rel_gap <= 1e-6;
    }

    let mut round_trips = true;
    for seed in [1u64, 7, 23] {
        let p = common::random_feasible_sdp(seed);
        let text = export_sdpa(&p);
        let back = import_sdpa(&text).expect("own export re-imports");
        round_trips &= export_sdpa(&back) == text;
    }
    let lp_spec = interval_fixture().spec;
    for d in 1..=3 {
        let (_, relax) = solve_lp_level(&lp_spec, d, &opts).expect("level builds");
        let text = export_mps(&relax.conic).expect("linear problem exports");
        let back = import_mps(&text).expect("own export re-imports");
        round_trips &= export_mps(&back).expect("re-export") == text;
    }
    ok &= round_trips;
    verdict(
        12,
        "backend: 100 random SDPs optimal, exports stable",
        ok,
        &format!("worst gap {worst:.2e}, byte-stable SDPA+MPS round trips: {round_trips}"),
    );
    assert!(ok, "worst gap {worst}, round trips {round_trips}");
}
