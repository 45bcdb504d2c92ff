//! Shared test helpers: randomized problem generators with known ground
//! truth by construction.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semivol::conic::{ConeBlock, LinBlock, PsdBlock, StandardConicProblem};

/// Random mixed PSD/nonneg conic problem with a strictly feasible point
/// planted on *both* sides, so strong duality holds and the true status is
/// Optimal: pick `y°`, a positive definite slack `S°`, and set
/// `F0 = S° - Σ y°_i F_i`; pick positive definite multipliers `X°` and set
/// `c_i = -Σ_k ⟨F_i, X°_k⟩`.
pub fn random_feasible_sdp(seed: u64) -> StandardConicProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: usize = rng.gen_range(1..=30);
    let nblocks: usize = rng.gen_range(1..=3);

    enum Draft {
        Psd { size: usize, fi: Vec<DMatrix<f64>> },
        Lin { size: usize, fi: Vec<Vec<f64>> },
    }

    let mut drafts = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let size: usize = rng.gen_range(1..=8);
        if rng.gen::<f64>() < 0.75 {
            let fi = (0..m)
                .map(|_| {
                    let mut f = DMatrix::zeros(size, size);
                    for r in 0..size {
                        for c in r..size {
                            if rng.gen::<f64>() < 0.4 {
                                let v = rng.gen_range(-1.0..1.0);
                                f[(r, c)] = v;
                                f[(c, r)] = v;
                            }
                        }
                    }
                    f
                })
                .collect();
            drafts.push(Draft::Psd { size, fi });
        } else {
            let fi = (0..m)
                .map(|_| {
                    (0..size)
                        .map(|_| {
                            if rng.gen::<f64>() < 0.4 {
                                rng.gen_range(-1.0..1.0)
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            drafts.push(Draft::Lin { size, fi });
        }
    }

    // Every variable must touch at least one block.
    for i in 0..m {
        let used = drafts.iter().any(|d| match d {
            Draft::Psd { fi, .. } => fi[i].iter().any(|&v| v != 0.0),
            Draft::Lin { fi, .. } => fi[i].iter().any(|&v| v != 0.0),
        });
        if !used {
            match &mut drafts[0] {
                Draft::Psd { size, fi } => {
                    let r = i % *size;
                    fi[i][(r, r)] = 1.0;
                }
                Draft::Lin { size, fi } => fi[i][i % *size] = 1.0,
            }
        }
    }

    let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut c = vec![0.0; m];
    let mut blocks = Vec::with_capacity(nblocks);
    for d in &drafts {
        match d {
            Draft::Psd { size, fi } => {
                let s = *size;
                let mut a = DMatrix::zeros(s, s);
                for r in 0..s {
                    for cc in 0..s {
                        a[(r, cc)] = rng.gen_range(-1.0..1.0);
                    }
                }
                let s0 = &a * a.transpose() + DMatrix::identity(s, s) * 0.5;
                let mut f0 = s0;
                for (yi, f) in y0.iter().zip(fi) {
                    f0 -= f * *yi;
                }

                let mut b = DMatrix::zeros(s, s);
                for r in 0..s {
                    for cc in 0..s {
                        b[(r, cc)] = rng.gen_range(-1.0..1.0);
                    }
                }
                let x0 = &b * b.transpose() + DMatrix::identity(s, s) * 0.5;
                for (ci, f) in c.iter_mut().zip(fi) {
                    *ci -= f.dot(&x0);
                }

                let mut pb = PsdBlock::new(s, m);
                for r in 0..s {
                    for cc in r..s {
                        pb.set_f0(r, cc, f0[(r, cc)]);
                    }
                }
                for (i, f) in fi.iter().enumerate() {
                    for r in 0..s {
                        for cc in r..s {
                            pb.add_fi(i, r, cc, f[(r, cc)]);
                        }
                    }
                }
                blocks.push(ConeBlock::Psd(pb));
            }
            Draft::Lin { size, fi } => {
                let s = *size;
                let s0: Vec<f64> = (0..s).map(|_| rng.gen_range(0.5..1.5)).collect();
                let x0: Vec<f64> = (0..s).map(|_| rng.gen_range(0.5..1.5)).collect();
                let mut lb = LinBlock::new(s, m);
                for r in 0..s {
                    let mut v = s0[r];
                    for (yi, f) in y0.iter().zip(fi) {
                        v -= yi * f[r];
                    }
                    lb.f0[r] = v;
                }
                for (i, f) in fi.iter().enumerate() {
                    for (r, &v) in f.iter().enumerate() {
                        lb.add_fi(i, r, v);
                    }
                    c[i] -= f.iter().zip(&x0).map(|(fv, xv)| fv * xv).sum::<f64>();
                }
                blocks.push(ConeBlock::Nonneg(lb));
            }
        }
    }
    StandardConicProblem::new(c, blocks)
}
