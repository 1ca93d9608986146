//! Bisect for the critical injection rate of a setup and sandwich the
//! result between the two analytic rate bounds.
//!
//! Run with: cargo run --example beta_star_search
//! (takes a minute or two: every bisection probe is 3 replicas x 2e5 slots)

use std::collections::BTreeMap;
use std::sync::Arc;

use randcompute::analytics::{min_mincut, rate_lower, spectrum};
use randcompute::engine::Mode;
use randcompute::experiments::{estimate_beta_star, ProbeSettings, Setup};
use randcompute::schema::{SchemaNodeId, SchemaTree};
use randcompute::topology::{build, TopologySpec};

fn main() {
    let graph = Arc::new(build(&TopologySpec::Star { n: 5 }).unwrap());
    let tree = Arc::new(SchemaTree::build_from_expression("(x1+x2)+x3").unwrap());
    let mut mapping = BTreeMap::new();
    mapping.insert(SchemaNodeId::new(1, 0), 0);
    mapping.insert(SchemaNodeId::ROOT, 2);
    let setup = Setup {
        graph: Arc::clone(&graph),
        tree,
        mode: Mode::Fixed,
        sources: vec![3, 4, 2],
        sink: 1,
        mapping,
        flexible_cascade: false,
        seed: 31,
    };

    let pm = graph.transition_matrix();
    let lambda_2 = spectrum(&pm).unwrap().lambda_2;
    let lower = rate_lower(lambda_2, 3, 1, 4).unwrap();
    let upper = min_mincut(&pm, setup.sink).delta;
    println!("analytic sandwich for the 5-node star relay:");
    println!("  guaranteed sustainable below {lower:.4} (spectral bound, lambda_2 = {lambda_2})");
    println!("  impossible above {upper:.4} (tightest cut toward the sink)");
    println!();

    let settings = ProbeSettings {
        horizon: 200_000,
        slope_threshold: 5e-3, // see the stability_probe example
        ..ProbeSettings::default()
    };
    let est = estimate_beta_star(&setup, &settings, 0.02).unwrap();

    println!("bisection trail (fresh replica seeds per probe):");
    for p in &est.probes {
        println!("  rate {:.4} -> {}", p.beta, p.verdict);
    }
    println!();
    println!(
        "critical rate in [{:.4}, {:.4}] (bracket width <= 0.02)",
        est.lo, est.hi
    );
    assert!(est.lo >= lower - 1e-12);
    assert!(est.hi <= upper + 0.02 + 1e-12);
    println!("interval sits inside the analytic sandwich, as it must.");
}
