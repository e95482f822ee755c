//! ACG, NDCG, MAP, and WMAP over a toy multi-label gallery, including the
//! per-query view and what the ideal ranking scores.
//!
//! Run with: `cargo run -p geosample --example retrieval_metrics`

use std::collections::{BTreeMap, BTreeSet};

use geosample::eval::{acg_at_n, evaluate, ndcg_at_n, Direction, GroundTruth, RankedRun};

fn labels(ids: &[u32]) -> BTreeSet<u32> {
    ids.iter().copied().collect()
}

fn main() {
    // A gallery of six items over five labels; "q1" and "q2" double as
    // queries.
    let mut items = BTreeMap::new();
    items.insert("q1".to_string(), labels(&[1, 2, 3]));
    items.insert("q2".to_string(), labels(&[4, 5]));
    items.insert("a".to_string(), labels(&[1, 2]));
    items.insert("b".to_string(), labels(&[3]));
    items.insert("c".to_string(), labels(&[4]));
    items.insert("d".to_string(), labels(&[5, 4]));
    let truth = GroundTruth::new(items, 3).expect("labelled items");

    let run = RankedRun::from_triples(
        Direction::ImageToText,
        vec![
            ("q1".into(), "b".into(), 0.9),
            ("q1".into(), "c".into(), 0.8),
            ("q1".into(), "a".into(), 0.7),
            ("q1".into(), "d".into(), 0.6),
            ("q2".into(), "d".into(), 0.9),
            ("q2".into(), "a".into(), 0.8),
            ("q2".into(), "c".into(), 0.7),
        ],
    )
    .expect("well-formed run");

    let report = evaluate(&run, &truth, &[1, 3, 5]).expect("evaluation runs");
    println!("{}", report.format_table());
    for (query, metrics) in &report.per_query {
        println!("{query}: ACG@3 = {:.4}, NDCG@3 = {:.4}, MAP@3 = {:.4}, WMAP@3 = {:.4}",
            metrics["ACG"][&3], metrics["NDCG"][&3], metrics["MAP"][&3], metrics["WMAP"][&3]);
    }

    // The same query scored against its ideal ordering reaches NDCG 1.
    let ideal = ["a", "b", "d", "c"].map(String::from);
    let (ndcg, _) = ndcg_at_n(&truth, "q1", &ideal, 3).expect("scores");
    println!("\nq1 ideal order {ideal:?}: NDCG@3 = {ndcg:.4}");
    let acg = acg_at_n(&truth, "q1", &ideal, 3).expect("scores");
    println!("q1 ideal order: ACG@3 = {acg:.4}");
}
