//! Global Moran's I on two tiny worlds: a perfectly dispersed
//! checkerboard and a perfectly split two-block chain, with both
//! significance methods side by side.
//!
//! Run with: `cargo run -p geosample --example global_moran`

use geosample::grid::{Region, RegionSet};
use geosample::weights::{contiguity_weights, ContiguityRule, WeightMatrix, Standardization};
use geosample::{global_morans_i, Method, SignificanceSpec};

fn report(label: &str, x: &[f64], w: &WeightMatrix) {
    let permutation = SignificanceSpec::permutation(999, 7, 0.05);
    let analytical = SignificanceSpec::analytical(0.05);
    let by_perm = global_morans_i(x, w, &permutation).expect("statistic computes");
    let by_normal = global_morans_i(x, w, &analytical).expect("statistic computes");
    println!("{label}");
    println!("  I = {:+.6}  (S0 = {})", by_perm.i, w.s0());
    println!(
        "  permutation: z = {:+.3}, p = {:.4} ({} draws)",
        by_perm.z_score, by_perm.p_value, by_perm.n_permutations
    );
    println!(
        "  analytical:  z = {:+.3}, p = {:.4}",
        by_normal.z_score, by_normal.p_value
    );
    assert_eq!(by_perm.method, Method::Permutation);
}

fn main() {
    // Four one-cell regions in a 2x2 square, rook adjacency.
    let checkerboard = RegionSet::new(
        vec![
            Region::new("nw", vec![(0, 0)]).unwrap(),
            Region::new("ne", vec![(0, 1)]).unwrap(),
            Region::new("sw", vec![(1, 0)]).unwrap(),
            Region::new("se", vec![(1, 1)]).unwrap(),
        ],
        "example",
    )
    .unwrap();
    let w = contiguity_weights(&checkerboard, ContiguityRule::Edge);
    report("2x2 checkerboard [1,0,0,1] (perfect dispersion)", &[1.0, 0.0, 0.0, 1.0], &w);

    // A 1x4 chain holding two homogeneous blocks.
    let chain = WeightMatrix::from_entries(
        4,
        vec![
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (2, 3, 1.0),
            (3, 2, 1.0),
        ],
        Standardization::None,
    );
    report("\n1x4 chain [1,1,0,0] (two blocks)", &[1.0, 1.0, 0.0, 0.0], &chain);
}
