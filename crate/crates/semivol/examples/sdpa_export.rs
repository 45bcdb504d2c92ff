//! Hand a relaxation to an external solver: SDPA sparse text for the
//! semidefinite side, fixed-form MPS for the linear side.
//!
//! Run with `cargo run --release --example sdpa_export`.

use semivol::conic::{export_mps, export_sdpa, import_mps, import_sdpa, SolveOptions};
use semivol::lp::solve_lp_level;
use semivol::moments::BoundingSet;
use semivol::poly::parse_poly;
use semivol::sdp::{build_qd, ProblemSpec};

fn main() {
    let g = parse_poly("0.5*x1 - x1^2", 1).unwrap();
    let spec = ProblemSpec::new(BoundingSet::unit_box(1), vec![g]).unwrap();

    // The degree-4 relaxation, in the block-diagonal standard form every
    // SDPA-family solver consumes.
    let y2 = spec.measure_moments(4).unwrap();
    let relax = build_qd(&spec, &y2, 2).unwrap();
    let sdpa = export_sdpa(&relax.conic);
    println!("--- qd_t4.dat-s ({} lines) ---", sdpa.lines().count());
    for line in sdpa.lines().take(12) {
        println!("{line}");
    }
    println!("...");

    // Re-importing our own export and exporting again reproduces the text
    // byte for byte, so files can serve as interchange fixtures.
    let back = import_sdpa(&sdpa).unwrap();
    println!("\nround trip byte-identical: {}", export_sdpa(&back) == sdpa);

    // Linear relaxations travel as MPS instead.
    let opts = SolveOptions::default();
    let (_, lp) = solve_lp_level(&spec, 3, &opts).unwrap();
    let mps = export_mps(&lp.conic).unwrap();
    println!("\n--- ld_3.mps ({} lines) ---", mps.lines().count());
    for line in mps.lines().take(10) {
        println!("{line}");
    }
    println!("...");
    let back = import_mps(&mps).unwrap();
    println!(
        "\nround trip byte-identical: {}",
        export_mps(&back).unwrap() == mps
    );
}
