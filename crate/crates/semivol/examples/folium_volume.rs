//! Area of a three-petalled folium, a region whose cusped boundary makes
//! it a stress test for moment-based volume computation.
//!
//! Run with `cargo run --release --example folium_volume`.

use std::f64::consts::PI;

use semivol::conic::SolveOptions;
use semivol::moments::BoundingSet;
use semivol::poly::parse_poly;
use semivol::sdp::{solve_degree, ProblemSpec};

fn main() {
    // In polar coordinates the folium is r ≤ 2·sin(...); implicitising
    // gives a sextic that is nonnegative exactly on the three petals.
    let g = parse_poly(
        "-x1^6 - 3*x1^4*x2^2 - 3*x1^2*x2^4 - x2^6 + 4*x1^2*x2^2",
        2,
    )
    .unwrap();
    let exact = PI / 2.0;

    // The petals meet the unit circle tangentially, so the unit ball is the
    // natural bounding set; the g-weighted objective accelerates the
    // hierarchy exactly as for the bean.
    let spec = ProblemSpec::new(BoundingSet::unit_ball(2), vec![g.clone()])
        .unwrap()
        .with_objective(g);

    let opts = SolveOptions::default();
    println!("exact area π/2 = {exact:.6}\n");
    println!("{:>6} {:>12} {:>9} {:>8}", "degree", "area", "error", "time");
    for t in [8, 10, 12, 14, 16, 18] {
        let s = solve_degree(&spec, t, &opts).unwrap();
        let mass = s.report.moments.mass();
        println!(
            "{:>6} {:>12.6} {:>8.2}% {:>7.1}s",
            t,
            mass,
            100.0 * (mass / exact - 1.0),
            s.report.seconds
        );
    }
    println!("\nThe cusps at the origin slow convergence relative to the bean:");
    println!("the optimal density has to vanish at a point the petals share.");
}
