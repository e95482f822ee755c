//! Local Moran's I, Getis-Ord Gi*, cluster typing, and the region
//! selection rule on a 6x6 lattice with one bright quarter and one dark
//! quarter.
//!
//! Run with: `cargo run -p geosample --example hotspot_selection`

use geosample::grid::{Region, RegionSet};
use geosample::weights::{contiguity_weights, ContiguityRule};
use geosample::{
    classify_clusters, getis_ord_gi_star, local_morans_i, select_sampling_regions,
    SignificanceSpec,
};

fn main() {
    // 36 one-cell regions on a 6x6 lattice.
    let mut regions = Vec::new();
    let mut x = Vec::new();
    for r in 0..6 {
        for c in 0..6 {
            regions.push(Region::new(format!("r{r}{c}"), vec![(r, c)]).unwrap());
            // Bright north-west corner, dark south-east corner, flat rest.
            let value = if r < 3 && c < 3 {
                10.0 + (r + c) as f64
            } else if r >= 3 && c >= 3 {
                -8.0 - (r + c) as f64 * 0.5
            } else {
                (r as f64 - c as f64) * 0.1
            };
            x.push(value);
        }
    }
    let regions = RegionSet::new(regions, "example lattice").unwrap();
    let weights = contiguity_weights(&regions, ContiguityRule::EdgeOrCorner);

    let sig = SignificanceSpec::permutation(999, 11, 0.05);
    let lisa = local_morans_i(&x, &weights, &sig).expect("lisa computes");
    let gi = getis_ord_gi_star(&x, &weights, &sig).expect("gi* computes");
    let clusters = classify_clusters(&lisa, sig.alpha);
    let selected = select_sampling_regions(&clusters, &gi).expect("same universe");

    println!("id     value   I_local      p  cluster         Gi*      p  hotspot  selected");
    for (i, region) in regions.regions().iter().enumerate() {
        println!(
            "{:<5} {:>6.1} {:>9.3} {:>6.3}  {:<14} {:>5.2} {:>6.3}  {:<7}  {}",
            region.id(),
            x[i],
            lisa[i].i_local,
            lisa[i].p_value,
            format!("{:?}", clusters[i]),
            gi[i].g_star,
            gi[i].p_value,
            format!("{:?}", gi[i].hotspot),
            if selected.contains(&i) { "yes" } else { "" },
        );
    }
    println!(
        "\nselected {} of {} regions: (HH|LL) intersect (hot|cold), plus every HL|LH outlier",
        selected.len(),
        regions.len()
    );
}
