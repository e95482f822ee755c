//! The whole chain over the bundled synthetic world: spatial analysis,
//! region selection, landscape-index sampling, and retrieval scoring,
//! driven by one config file exactly as the `geosample` binary would.
//!
//! Run with: `cargo run -p geosample --example full_pipeline`

use std::path::Path;

use geosample::pipeline::{
    run_eval, run_gistar, run_lisa, run_moran, run_sample, run_select_regions, PipelineConfig,
};

fn main() {
    let config_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data/world/config.json");
    let config = PipelineConfig::load(&config_path).expect("bundled config loads");
    let out_dir = std::env::temp_dir().join("geosample_full_pipeline");

    println!("config hash: {}", config.hash());
    let steps: [(&str, Box<dyn Fn() -> _>); 6] = [
        ("moran", Box::new(|| run_moran(&config, &out_dir))),
        ("lisa", Box::new(|| run_lisa(&config, &out_dir, false))),
        ("gistar", Box::new(|| run_gistar(&config, &out_dir))),
        ("select-regions", Box::new(|| run_select_regions(&config, &out_dir))),
        ("sample", Box::new(|| run_sample(&config, &out_dir))),
        ("eval", Box::new(|| run_eval(&config, &out_dir))),
    ];
    for (name, step) in steps {
        let written = step().unwrap_or_else(|e| panic!("{name} failed: {e}"));
        println!("{name}:");
        for path in written {
            println!("  wrote {}", path.display());
        }
    }

    let selected: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("selected_regions.json")).expect("report exists"),
    )
    .expect("report parses");
    println!("\nselected regions: {}", selected["selected"]);

    let allocation: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("allocation.json")).expect("report exists"),
    )
    .expect("report parses");
    println!("allocation per region: {}", allocation["per_region"]);

    println!(
        "\nmetrics:\n{}",
        std::fs::read_to_string(out_dir.join("eval.txt")).expect("table exists")
    );
}
