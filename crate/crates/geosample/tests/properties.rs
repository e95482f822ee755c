//! Property tests for the structural invariants: symmetry, conservation,
//! invariance under relabeling/translation/affine maps, and determinism.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use proptest::prelude::*;

use geosample::autocorr::{
    classify_clusters, getis_ord_gi_star, global_morans_i, local_morans_i,
    select_sampling_regions, SignificanceSpec,
};
use geosample::eval::{ap_at_n, evaluate, Direction, GroundTruth, RankedRun};
use geosample::grid::{
    parse_ascii_grid, format_ascii_grid, partition_units, region_aggregate, Aggregator, GridKind,
    RasterGrid, Region, RegionSet,
};
use geosample::lsi::{lsi, LsiTarget};
use geosample::taxonomy::{DictionaryMatcher, LabelTree, MatcherThresholds};
use geosample::weights::{
    contiguity_weights, row_standardize, ContiguityRule, Standardization, WeightMatrix,
};

/// Region sets built by colouring a 6x6 grid with up to five region ids
/// (255 = unassigned).
fn region_set_strategy() -> impl Strategy<Value = RegionSet> {
    proptest::collection::vec(0u8..6, 36).prop_filter_map("at least one region", |colours| {
        let mut cells: BTreeMap<u8, Vec<(usize, usize)>> = BTreeMap::new();
        for (idx, &colour) in colours.iter().enumerate() {
            if colour == 5 {
                continue; // unassigned
            }
            cells.entry(colour).or_default().push((idx / 6, idx % 6));
        }
        let regions: Vec<Region> = cells
            .into_iter()
            .map(|(colour, cells)| Region::new(format!("r{colour}"), cells).unwrap())
            .collect();
        if regions.is_empty() {
            return None;
        }
        Some(RegionSet::new(regions, "proptest").unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ascii_grid_round_trips_bit_exactly(
        rows in 1usize..6,
        cols in 1usize..6,
        seed_values in proptest::collection::vec(-1e12f64..1e12, 25),
        cell_size in 0.5f64..1000.0,
    ) {
        let values: Vec<f64> = (0..rows * cols).map(|i| seed_values[i % seed_values.len()]).collect();
        let grid = RasterGrid::new(rows, cols, cell_size, -12.5, 3.25, -9999.0, GridKind::Continuous, values).unwrap();
        let text = format_ascii_grid(&grid);
        let back = parse_ascii_grid(&text, GridKind::Continuous).unwrap();
        prop_assert_eq!(grid, back);
    }

    #[test]
    fn partition_units_tiles_exactly(
        mask in proptest::collection::vec(any::<bool>(), 64),
        unit_rows in 1usize..5,
        unit_cols in 1usize..5,
    ) {
        let cells: Vec<(usize, usize)> = mask
            .iter()
            .enumerate()
            .filter(|(_, &keep)| keep)
            .map(|(idx, _)| (idx / 8, idx % 8))
            .collect();
        prop_assume!(!cells.is_empty());
        let region = Region::new("r", cells.clone()).unwrap();
        let units = partition_units(&region, unit_rows, unit_cols).unwrap();

        let mut seen = HashSet::new();
        for unit in &units.units {
            prop_assert!(!unit.cells.is_empty(), "empty units must be omitted");
            prop_assert!(unit.unit_row < unit_rows && unit.unit_col < unit_cols);
            for &cell in &unit.cells {
                prop_assert!(seen.insert(cell), "cell assigned twice");
            }
        }
        let expected: HashSet<(usize, usize)> = cells.into_iter().collect();
        prop_assert_eq!(seen, expected);
    }

    #[test]
    fn constant_region_mean_is_the_constant(
        mask in proptest::collection::vec(any::<bool>(), 16),
        constant in -1e6f64..1e6,
    ) {
        let cells: Vec<(usize, usize)> = mask
            .iter()
            .enumerate()
            .filter(|(_, &keep)| keep)
            .map(|(idx, _)| (idx / 4, idx % 4))
            .collect();
        prop_assume!(!cells.is_empty());
        let grid = RasterGrid::new(4, 4, 1.0, 0.0, 0.0, -9999.0, GridKind::Continuous, vec![constant; 16]).unwrap();
        let regions = RegionSet::new(vec![Region::new("r", cells).unwrap()], "t").unwrap();
        let x = region_aggregate(&grid, &regions, Aggregator::Mean).unwrap();
        prop_assert_eq!(x[0], constant);
    }

    #[test]
    fn contiguity_is_symmetric_with_s0_twice_the_pairs(regions in region_set_strategy()) {
        for rule in [ContiguityRule::Edge, ContiguityRule::EdgeOrCorner] {
            let w = contiguity_weights(&regions, rule);
            let entries: HashSet<(usize, usize)> =
                w.entries().iter().map(|&(i, j, _)| (i, j)).collect();
            for &(i, j, value) in w.entries() {
                prop_assert_eq!(value, 1.0);
                prop_assert!(entries.contains(&(j, i)), "missing mirror of ({i}, {j})");
            }
            let pairs = entries.iter().filter(|&&(i, j)| i < j).count();
            prop_assert_eq!(w.s0(), 2.0 * pairs as f64);
        }
    }

    #[test]
    fn row_standardize_is_idempotent_and_pattern_preserving(
        raw in proptest::collection::vec((0usize..8, 0usize..8, 0.01f64..10.0), 0..24),
    ) {
        let w = WeightMatrix::from_entries(8, raw, Standardization::None);
        let once = row_standardize(&w);
        let twice = row_standardize(&once);
        prop_assert_eq!(&once, &twice);
        let pattern = |m: &WeightMatrix| -> Vec<(usize, usize)> {
            m.entries().iter().map(|&(i, j, _)| (i, j)).collect()
        };
        prop_assert_eq!(pattern(&w), pattern(&once));
        for i in 0..8 {
            let sum = once.row_sum(i);
            prop_assert!(sum == 0.0 || (sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_csv_round_trips(
        raw in proptest::collection::vec((0usize..6, 0usize..6, 0.01f64..5.0), 0..16),
    ) {
        let w = WeightMatrix::from_entries(6, raw, Standardization::None);
        let back = WeightMatrix::from_csv(&w.to_csv()).unwrap();
        prop_assert_eq!(w, back);
    }

    #[test]
    fn statistics_are_invariant_under_positive_affine_maps(
        values in proptest::collection::vec(0u16..1000, 6..12),
        links in proptest::collection::vec(any::<bool>(), 66),
        scale in 0.1f64..10.0,
        shift in -100.0f64..100.0,
    ) {
        let n = values.len();
        let x: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        prop_assume!(x.iter().any(|&v| v != x[0]));
        let mut entries = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if links[k % links.len()] {
                    entries.push((i, j, 1.0));
                    entries.push((j, i, 1.0));
                }
                k += 1;
            }
        }
        prop_assume!(!entries.is_empty());
        let w = WeightMatrix::from_entries(n, entries, Standardization::None);
        let mapped: Vec<f64> = x.iter().map(|&v| scale * v + shift).collect();
        let sig = SignificanceSpec::analytical(0.05);

        let a = global_morans_i(&x, &w, &sig).unwrap();
        let b = global_morans_i(&mapped, &w, &sig).unwrap();
        prop_assert!((a.i - b.i).abs() < 1e-9, "global I: {} vs {}", a.i, b.i);
        prop_assert!((a.z_score - b.z_score).abs() < 1e-9);

        let la = local_morans_i(&x, &w, &sig).unwrap();
        let lb = local_morans_i(&mapped, &w, &sig).unwrap();
        for (ra, rb) in la.iter().zip(&lb) {
            prop_assert!((ra.i_local - rb.i_local).abs() < 1e-9 * (1.0 + ra.i_local.abs()));
            prop_assert_eq!(ra.cluster, rb.cluster);
        }

        // A fully-connected row makes Gi* degenerate; skip those draws.
        let ga = getis_ord_gi_star(&x, &w, &sig);
        prop_assume!(ga.is_ok());
        let ga = ga.unwrap();
        let gb = getis_ord_gi_star(&mapped, &w, &sig).unwrap();
        for (ra, rb) in ga.iter().zip(&gb) {
            prop_assert!((ra.g_star - rb.g_star).abs() < 1e-9);
            prop_assert_eq!(ra.hotspot, rb.hotspot);
        }

        let ca = classify_clusters(&la, 0.05);
        let cb = classify_clusters(&lb, 0.05);
        prop_assert_eq!(&ca, &cb);
        prop_assert_eq!(
            select_sampling_regions(&ca, &ga).unwrap(),
            select_sampling_regions(&cb, &gb).unwrap()
        );
    }

    /// The LISA components must recompose into the global statistic:
    /// I = (n / S0) * sum_i z_i * lisa_i / sum_i z_i^2, for any weights.
    #[test]
    fn lisa_components_recompose_into_global_i(
        values in proptest::collection::vec(0u16..1000, 4..10),
        links in proptest::collection::vec(any::<bool>(), 45),
    ) {
        let n = values.len();
        let x: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        prop_assume!(x.iter().any(|&v| v != x[0]));
        let mut entries = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if links[k % links.len()] {
                    entries.push((i, j, 1.0));
                    entries.push((j, i, 1.0));
                }
                k += 1;
            }
        }
        prop_assume!(!entries.is_empty());
        let w = WeightMatrix::from_entries(n, entries, Standardization::None);
        let sig = SignificanceSpec::analytical(0.05);

        let global = global_morans_i(&x, &w, &sig).unwrap();
        let lisa = local_morans_i(&x, &w, &sig).unwrap();
        let cross: f64 = lisa.iter().map(|r| r.z_i * r.lisa).sum();
        let ssq: f64 = lisa.iter().map(|r| r.z_i * r.z_i).sum();
        let recomposed = (n as f64 / w.s0()) * cross / ssq;
        prop_assert!((global.i - recomposed).abs() < 1e-9, "{} vs {recomposed}", global.i);
    }

    #[test]
    fn permutation_p_values_sit_on_the_lattice(
        values in proptest::collection::vec(0u16..1000, 4..9),
        seed in any::<u64>(),
    ) {
        let n = values.len();
        let x: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        prop_assume!(x.iter().any(|&v| v != x[0]));
        let mut entries = Vec::new();
        for i in 0..n - 1 {
            entries.push((i, i + 1, 1.0));
            entries.push((i + 1, i, 1.0));
        }
        let w = WeightMatrix::from_entries(n, entries, Standardization::None);
        let m = 37;
        let sig = SignificanceSpec::permutation(m, seed, 0.05);
        let a = global_morans_i(&x, &w, &sig).unwrap();
        let b = global_morans_i(&x, &w, &sig).unwrap();
        prop_assert_eq!(a.p_value, b.p_value, "same seed, same p");
        let k = (a.p_value * (m as f64 + 1.0)).round();
        prop_assert!((a.p_value - k / (m as f64 + 1.0)).abs() < 1e-12);
        prop_assert!(a.p_value > 0.0 && a.p_value <= 1.0);
    }

    /// All-classes LSI only sees whether neighbouring classes differ, so
    /// any relabeling of the class codes leaves it unchanged; shifting
    /// the window leaves it unchanged too.
    #[test]
    fn lsi_is_invariant_under_relabeling_and_translation(
        codes in proptest::collection::vec(0u32..4, 36),
        offset_r in 0usize..4,
        offset_c in 0usize..4,
    ) {
        let values: Vec<f64> = codes.iter().map(|&k| k as f64).collect();
        let grid = RasterGrid::new(6, 6, 1.0, 0.0, 0.0, -9999.0, GridKind::Categorical, values).unwrap();
        let window: Vec<(usize, usize)> = (0..6).flat_map(|r| (0..6).map(move |c| (r, c))).collect();
        let base = lsi(&grid, &window, LsiTarget::AllClasses).unwrap();

        // Relabel: k -> 7 - k keeps distinctness.
        let relabeled: Vec<f64> = codes.iter().map(|&k| (7 - k) as f64).collect();
        let regrid = RasterGrid::new(6, 6, 1.0, 0.0, 0.0, -9999.0, GridKind::Categorical, relabeled).unwrap();
        let relabel = lsi(&regrid, &window, LsiTarget::AllClasses).unwrap();
        prop_assert_eq!(base.value, relabel.value);

        // Translate: embed the same pattern at an offset in a 10x10 grid.
        let mut big = vec![0.0; 100];
        for r in 0..6 {
            for c in 0..6 {
                big[(r + offset_r) * 10 + (c + offset_c)] = codes[r * 6 + c] as f64;
            }
        }
        let big_grid = RasterGrid::new(10, 10, 1.0, 0.0, 0.0, -9999.0, GridKind::Categorical, big).unwrap();
        let shifted: Vec<(usize, usize)> = (0..6)
            .flat_map(|r| (0..6).map(move |c| (r + offset_r, c + offset_c)))
            .collect();
        let translated = lsi(&big_grid, &shifted, LsiTarget::AllClasses).unwrap();
        prop_assert_eq!(base.value, translated.value);
    }

    #[test]
    fn ndcg_stays_in_unit_interval_and_ignores_score_scale(
        label_bits in proptest::collection::vec(0u8..31, 3..12),
        scores in proptest::collection::vec(0.001f64..1.0, 3..12),
    ) {
        let n_items = label_bits.len().min(scores.len());
        let mut items = BTreeMap::new();
        for (i, &bits) in label_bits.iter().take(n_items).enumerate() {
            let labels: BTreeSet<u32> = (0..5u32).filter(|b| bits & (1 << b) != 0 || bits == 0 && *b == 0).collect();
            items.insert(format!("i{i:02}"), labels);
        }
        let truth = GroundTruth::new(items.clone(), 3).unwrap();
        let query = "i00".to_string();
        let triples: Vec<(String, String, f64)> = items
            .keys()
            .filter(|id| **id != query)
            .zip(&scores)
            .map(|(id, &s)| (query.clone(), id.clone(), s))
            .collect();
        prop_assume!(!triples.is_empty());
        let run = RankedRun::from_triples(Direction::ImageToText, triples.clone()).unwrap();
        let report = evaluate(&run, &truth, &[1, 3, 5]).unwrap();
        for n in [1usize, 3, 5] {
            let v = report.means["NDCG"][&n];
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v), "NDCG@{n} = {v}");
        }

        // Positive monotone transform of the scores: same order, same value.
        let transformed: Vec<(String, String, f64)> = triples
            .iter()
            .map(|(q, i, s)| (q.clone(), i.clone(), s * s * 3.0 + 1.0))
            .collect();
        let run2 = RankedRun::from_triples(Direction::ImageToText, transformed).unwrap();
        let report2 = evaluate(&run2, &truth, &[1, 3, 5]).unwrap();
        for n in [1usize, 3, 5] {
            prop_assert_eq!(report.means["NDCG"][&n], report2.means["NDCG"][&n]);
        }
    }

    /// Moving a relevant item up a ranked list never lowers AP.
    #[test]
    fn ap_never_decreases_when_a_relevant_item_moves_up(
        relevance in proptest::collection::vec(any::<bool>(), 2..12),
        upper in 0usize..12,
        lower in 0usize..12,
    ) {
        let len = relevance.len();
        let (upper, lower) = (upper % len, lower % len);
        prop_assume!(upper < lower && relevance[lower]);

        let mut items = BTreeMap::new();
        items.insert("q".to_string(), BTreeSet::from([1u32]));
        for (i, &relevant) in relevance.iter().enumerate() {
            let label = if relevant { 1u32 } else { 2 };
            items.insert(format!("i{i:02}"), BTreeSet::from([label]));
        }
        let truth = GroundTruth::new(items, 3).unwrap();

        let ranked: Vec<String> = (0..len).map(|i| format!("i{i:02}")).collect();
        let mut swapped = ranked.clone();
        swapped.swap(upper, lower);

        let before = ap_at_n(&truth, "q", &ranked, len).unwrap();
        let after = ap_at_n(&truth, "q", &swapped, len).unwrap();
        prop_assert!(after >= before - 1e-15, "AP dropped: {before} -> {after}");
    }

    #[test]
    fn mapping_preserves_accepted_counts(
        counts in proptest::collection::vec((0usize..31, 1u64..100), 1..10),
    ) {
        let mut tree = LabelTree::base();
        let names: Vec<String> = tree.nodes().map(|n| n.name.clone()).collect();
        let mut input = BTreeMap::new();
        for (idx, count) in counts {
            *input.entry(names[idx % names.len()].clone()).or_insert(0) += count;
        }
        input.insert("definitely unknown label".to_string(), 5);
        let expected: u64 = input
            .iter()
            .filter(|(name, _)| name.as_str() != "definitely unknown label")
            .map(|(_, &c)| c)
            .sum();
        let outcome = tree.map_labels(&input);
        prop_assert_eq!(outcome.accepted_total, expected);
        let total: u64 = tree.nodes().map(|n| n.frequency).sum();
        prop_assert_eq!(total, expected);
        prop_assert_eq!(outcome.rejects, vec!["definitely unknown label".to_string()]);
        // Every node in the induced sub-tree carries frequency or covers
        // a descendant that does.
        for node in outcome.subtree.nodes() {
            let mut stack = vec![node.id];
            let mut supported = false;
            while let Some(id) = stack.pop() {
                let n = outcome.subtree.node(id).unwrap();
                if n.frequency > 0 {
                    supported = true;
                    break;
                }
                stack.extend(outcome.subtree.children(id));
            }
            prop_assert!(supported, "unsupported node {} in sub-tree", node.name);
        }
    }

    #[test]
    fn novel_labels_keep_the_tree_valid(
        words in proptest::collection::vec("[a-z]{4,9}", 2..8),
    ) {
        let matcher = DictionaryMatcher::with_default_groups();
        let mut tree = LabelTree::base();
        for (i, word) in words.iter().enumerate() {
            let name = format!("{word} site {i}");
            if tree.find_name(&name).is_some() {
                continue;
            }
            tree.include_novel_label(&name, "a generated place", &matcher, &MatcherThresholds::default()).unwrap();
            tree.validate().unwrap();
        }
        let report = tree.consolidate_duplicates(&matcher).unwrap();
        tree.validate().unwrap();
        let again = tree.consolidate_duplicates(&matcher).unwrap();
        prop_assert!(again.merges.is_empty());
        drop(report);
    }
}
