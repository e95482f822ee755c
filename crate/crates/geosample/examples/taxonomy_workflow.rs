//! The taxonomy lifecycle: place novel labels top-down, consolidate
//! duplicates, map per-image label counts, and lift labels to an
//! evaluation level.
//!
//! Run with: `cargo run -p geosample --example taxonomy_workflow`

use std::collections::{BTreeMap, BTreeSet};

use geosample::taxonomy::{DictionaryMatcher, LabelTree, MatcherThresholds};

fn main() {
    let mut tree = LabelTree::base();
    let matcher = DictionaryMatcher::with_default_groups();
    let thresholds = MatcherThresholds::default();

    println!("base tree: {} labels, per level {:?}", tree.len(), tree.level_counts());

    for (name, description) in [
        (
            "farmyard",
            "buildings for keeping animals, or crop supplies would typically be part of a farmyard",
        ),
        ("restaurant", "a place selling meals, which belongs to amenity in the source tags"),
        ("graveyard", "burial ground next to a place of worship"),
        ("zzyqx", "no description matches anything"),
    ] {
        let placement = tree
            .include_novel_label(name, description, &matcher, &thresholds)
            .expect("novel label placed");
        println!(
            "added {name:?} under {:?} at level {}",
            placement.parent_name, placement.level
        );
    }

    let report = tree.consolidate_duplicates(&matcher).expect("consolidation runs");
    for merge in &report.merges {
        println!(
            "merged {:?} into {:?} ({:?})",
            merge.absorbed_name, merge.survivor_name, merge.reason
        );
    }

    let mut counts = BTreeMap::new();
    counts.insert("church".to_string(), 12u64);
    counts.insert("graveyard".to_string(), 4); // resolves via the synonym
    counts.insert("farmyard".to_string(), 7);
    counts.insert("unknown label".to_string(), 1);
    let outcome = tree.map_labels(&counts);
    println!(
        "mapped {} occurrences, rejects {:?}, occupied sub-tree per level {:?}",
        outcome.accepted_total,
        outcome.rejects,
        outcome.subtree.level_counts()
    );

    let found = tree.find_name("farmyard").expect("present");
    let lifted = tree.ancestor_closure(&BTreeSet::from([found]), 2);
    let names: Vec<&str> = lifted
        .iter()
        .map(|id| tree.node(*id).unwrap().name.as_str())
        .collect();
    println!("farmyard at level 2 -> {names:?}");

    tree.validate().expect("tree stays valid");
    println!("final tree: {} labels, version {}", tree.len(), tree.version());
}
