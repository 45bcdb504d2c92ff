//! Ground truth the relaxations can be checked against, computed by means
//! that share no code path with the hierarchy itself: seeded Monte Carlo
//! hit counting, indicator-masked tensor quadrature, and a small catalogue
//! of fixtures whose volumes and low-order moments have closed forms.
//!
//! Both estimators are deliberately low-tech. The integrands are indicator
//! functions, so no quadrature rule attains spectral accuracy anyway; what
//! matters here is an error bar we can trust. Monte Carlo reports a normal
//! 99% confidence interval, and the quadrature reports how much its answer
//! moved when the per-axis node count was doubled.

use crate::moments::{BoundingKind, MomentVector};
use crate::poly::{index_set, Basis, MultiIndex, MultiPoly};
use crate::sdp::ProblemSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// z such that P(|N(0,1)| ≤ z) = 0.99.
const Z_99: f64 = 2.575829303549;

/// Samples are split over this many independent RNG streams so the estimate
/// is identical no matter how many threads run them.
const MC_SHARDS: u64 = 64;

/// Monte Carlo volume estimate with a normal-approximation error bar.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub volume: f64,
    /// Standard error of `volume` (binomial, scaled by vol(B)).
    pub std_error: f64,
    /// 99% confidence interval `volume ± z₉₉·std_error`.
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub samples: u64,
}

impl McEstimate {
    /// Whether `truth` lies within `k` standard errors of the estimate.
    pub fn within_sigma(&self, truth: f64, k: f64) -> bool {
        (self.volume - truth).abs() <= k * self.std_error
    }
}

/// Masked tensor-quadrature moments together with a node-doubling error
/// estimate.
#[derive(Debug, Clone)]
pub struct QuadMoments {
    /// Moments of Lebesgue measure restricted to K, in the spec's working
    /// basis, computed on the finer (doubled) grid.
    pub moments: MomentVector,
    /// Per-axis node count of the grid behind `moments`.
    pub nodes: usize,
    /// |mass(fine) − mass(coarse)| — the error indicator. The indicator
    /// mask caps the rule at low order, so this tracks the true error well.
    pub volume_change: f64,
}

/// A problem with known answers: the spec to feed the hierarchy plus the
/// closed-form volume and whatever moment ratios are known exactly.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub spec: ProblemSpec,
    pub exact_volume: f64,
    /// Pairs (α, y_α/y_0) of exact normalized moments of Lebesgue measure
    /// on K.
    pub exact_ratios: Vec<(MultiIndex, f64)>,
    /// Per-axis quadrature nodes that bring the oracle itself below 1e−3
    /// absolute error on this fixture (found empirically; 1D needs far more
    /// than 2D because a lone boundary cell has nothing to cancel against).
    pub quad_nodes: usize,
}

/// Estimate vol(K) by uniform sampling on the bounding set B.
///
/// Points are drawn uniformly on B — directly for a box, by rejection from
/// the enclosing box for a ball (≈21% waste in 2D, accepted for the sake of
/// having one obviously correct sampler). The estimate `vol(B)·hits/samples`
/// is unbiased and deterministic for a given `seed`: the work is split over
/// fixed, seed-derived RNG streams, so thread count cannot change the answer.
///
/// `samples` should be at least 10³ for the normal error bar to mean much.
pub fn mc_volume(spec: &ProblemSpec, samples: u64, seed: u64) -> McEstimate {
    let gs: Vec<MultiPoly> = spec
        .constraints
        .iter()
        .map(|g| g.convert(Basis::Monomial))
        .collect();
    let a = spec.bounding.a;
    let n = spec.n;
    let is_ball = matches!(spec.bounding.kind, BoundingKind::Ball);

    let hits: u64 = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let quota = samples / MC_SHARDS + u64::from(shard < samples % MC_SHARDS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let mut x = vec![0.0f64; n];
            let mut hits = 0u64;
            for _ in 0..quota {
                // Redraw until the point lands in B (immediately true for a box).
                loop {
                    for xi in x.iter_mut() {
                        *xi = rng.gen_range(-a..a);
                    }
                    if !is_ball || x.iter().map(|v| v * v).sum::<f64>() <= a * a {
                        break;
                    }
                }
                if gs.iter().all(|g| g.eval(&x) >= 0.0) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();

    let vol_b = spec.bounding.volume();
    let p = hits as f64 / samples as f64;
    let volume = vol_b * p;
    let std_error = vol_b * (p * (1.0 - p) / samples as f64).sqrt();
    McEstimate {
        volume,
        std_error,
        ci_low: volume - Z_99 * std_error,
        ci_high: volume + Z_99 * std_error,
        hits,
        samples,
    }
}

/// Moments `∫_K x^α dx` for all |α| ≤ degree, by Gauss–Legendre tensor
/// quadrature over the enclosing box with the integrand masked by the
/// indicator of K.
///
/// The mask makes the integrand discontinuous, so the rule is effectively
/// low order no matter how good Gauss–Legendre is on smooth data; `nodes`
/// per axis of at least 64 is a sensible floor, and fixture-quality answers
/// want several hundred (see [`Fixture::quad_nodes`]). The computation runs
/// at `nodes` and `2·nodes` per axis; the finer result is returned and the
/// mass shift between the two is the reported error estimate.
pub fn quad_moments_on_k(spec: &ProblemSpec, degree: u32, nodes: usize) -> QuadMoments {
    let coarse = masked_moments(spec, degree, nodes);
    let fine = masked_moments(spec, degree, 2 * nodes);
    let volume_change = (fine[0] - coarse[0]).abs();
    let mono = MomentVector::new(spec.n, Basis::Monomial, degree, fine)
        .expect("tabulated over the full index set");
    QuadMoments {
        moments: mono.to_basis(spec.basis),
        nodes: 2 * nodes,
        volume_change,
    }
}

/// Raw monomial moments on one masked tensor grid.
fn masked_moments(spec: &ProblemSpec, degree: u32, nodes: usize) -> Vec<f64> {
    let n = spec.n;
    let a = spec.bounding.a;
    let rule = crate::quad::GaussRule::new(nodes).mapped(-a, a);
    let gs: Vec<MultiPoly> = spec
        .constraints
        .iter()
        .map(|g| g.convert(Basis::Monomial))
        .collect();
    let indices = index_set(n, degree);

    // pow[axis node][k] = x_node^k, shared by every moment.
    let powers: Vec<Vec<f64>> = rule
        .pairs()
        .iter()
        .map(|&(x, _)| {
            let mut row = vec![1.0f64; degree as usize + 1];
            for k in 1..=degree as usize {
                row[k] = row[k - 1] * x;
            }
            row
        })
        .collect();

    // One slab per leading-axis node keeps the parallel reduction
    // deterministic: partial sums are combined in slab order.
    let partials: Vec<Vec<f64>> = (0..nodes)
        .into_par_iter()
        .map(|i0| {
            let mut acc = vec![0.0f64; indices.len()];
            let mut x = vec![0.0f64; n];
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            let inner: usize = nodes.pow(n as u32 - 1);
            for flat in 0..inner {
                let mut rem = flat;
                for slot in idx.iter_mut().skip(1).rev() {
                    *slot = rem % nodes;
                    rem /= nodes;
                }
                let mut w = 1.0f64;
                for (xi, &node) in x.iter_mut().zip(&idx) {
                    let (xv, wv) = rule.pairs()[node];
                    *xi = xv;
                    w *= wv;
                }
                if !spec.bounding.contains(&x) {
                    continue;
                }
                if !gs.iter().all(|g| g.eval(&x) >= 0.0) {
                    continue;
                }
                for (acc_a, alpha) in acc.iter_mut().zip(&indices) {
                    let mut m = w;
                    for (ax, &e) in alpha.0.iter().enumerate() {
                        m *= powers[idx[ax]][e as usize];
                    }
                    *acc_a += m;
                }
            }
            acc
        })
        .collect();

    let mut total = vec![0.0f64; indices.len()];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// The three reference problems: an interval cut out of `[−1,1]`, the bean
/// curve's interior in `[−1,1]²`, and the four-petal folium inside the unit
/// disk. Exact volumes are ½, 7√3π/36 and π/2.
pub fn fixtures() -> Vec<Fixture> {
    vec![interval_fixture(), bean_fixture(), folium_fixture()]
}

/// K = [0, ½] described by g = x(½−x) ≥ 0 inside B = [−1, 1].
///
/// Every moment is closed-form: `∫₀^{1/2} x^k dx = (1/2)^{k+1}/(k+1)`.
pub fn interval_fixture() -> Fixture {
    let g = MultiPoly::from_terms(
        1,
        Basis::Monomial,
        [
            (MultiIndex(vec![1]), 0.5),
            (MultiIndex(vec![2]), -1.0),
        ],
    );
    let spec = ProblemSpec::new(crate::moments::BoundingSet::unit_box(1), vec![g])
        .expect("valid interval data");
    Fixture {
        name: "interval",
        spec,
        exact_volume: 0.5,
        exact_ratios: vec![
            (MultiIndex(vec![1]), 0.25),
            (MultiIndex(vec![2]), 1.0 / 12.0),
        ],
        quad_nodes: 2048,
    }
}

/// The bean: K = {x₁(x₁²+x₂²) ≥ x₁⁴+x₁²x₂²+x₂⁴} inside B = [−1, 1]².
///
/// vol(K) = 7√3π/36 and the first normalized moments are 23/42, 23/63 and
/// 113/1008 — small rational targets that make excellent regression bait.
pub fn bean_fixture() -> Fixture {
    let g = MultiPoly::from_terms(
        2,
        Basis::Monomial,
        [
            (MultiIndex(vec![3, 0]), 1.0),
            (MultiIndex(vec![1, 2]), 1.0),
            (MultiIndex(vec![4, 0]), -1.0),
            (MultiIndex(vec![2, 2]), -1.0),
            (MultiIndex(vec![0, 4]), -1.0),
        ],
    );
    let spec = ProblemSpec::new(crate::moments::BoundingSet::unit_box(2), vec![g])
        .expect("valid bean data");
    Fixture {
        name: "bean",
        spec,
        exact_volume: 7.0 * 3.0f64.sqrt() * std::f64::consts::PI / 36.0,
        exact_ratios: vec![
            (MultiIndex(vec![1, 0]), 23.0 / 42.0),
            (MultiIndex(vec![2, 0]), 23.0 / 63.0),
            (MultiIndex(vec![0, 2]), 113.0 / 1008.0),
        ],
        quad_nodes: 512,
    }
}

/// The folium: K = {4x₁²x₂² ≥ (x₁²+x₂²)³} inside the unit disk.
///
/// In polar form this is the rose ρ = |sin 2θ|, four petals of total area
/// π/2. The quadratic moments follow from the same polar integral:
/// y₂₀/y₀₀ = y₀₂/y₀₀ = 3/16, and every odd moment vanishes by symmetry.
pub fn folium_fixture() -> Fixture {
    let g = MultiPoly::from_terms(
        2,
        Basis::Monomial,
        [
            (MultiIndex(vec![6, 0]), -1.0),
            (MultiIndex(vec![4, 2]), -3.0),
            (MultiIndex(vec![2, 4]), -3.0),
            (MultiIndex(vec![0, 6]), -1.0),
            (MultiIndex(vec![2, 2]), 4.0),
        ],
    );
    let spec = ProblemSpec::new(crate::moments::BoundingSet::unit_ball(2), vec![g])
        .expect("valid folium data");
    Fixture {
        name: "folium",
        spec,
        exact_volume: std::f64::consts::FRAC_PI_2,
        exact_ratios: vec![
            (MultiIndex(vec![1, 0]), 0.0),
            (MultiIndex(vec![2, 0]), 3.0 / 16.0),
            (MultiIndex(vec![0, 2]), 3.0 / 16.0),
            (MultiIndex(vec![1, 1]), 0.0),
        ],
        quad_nodes: 1024,
    }
}
