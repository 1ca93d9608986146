//! The rate sandwich and latency bounds per graph family: the spectral
//! lower bound on sustainable injection rates, the min-cut ceiling imposed
//! by the sink's bottleneck, and the closed-form latency bounds for both
//! computation models — then one measured run laid next to its bounds.
//!
//! Run with: cargo run --example rate_bounds

use std::sync::Arc;

use randcompute::analytics::{
    bound_report, BoundConstants, BoundContext, BoundValue, LogBase,
};
use randcompute::engine::{random_injective_mapping, spread_sources, Mode};
use randcompute::experiments::{compare_bounds, ComparisonSettings, Setup};
use randcompute::schema::{Operator, SchemaTree};
use randcompute::topology::{build, TopologySpec};

fn fmt(v: BoundValue) -> String {
    match v {
        BoundValue::Finite(x) => format!("{x:.1}"),
        BoundValue::Infinite => "inf".into(),
        BoundValue::Undefined => "n/a".into(),
    }
}

fn main() {
    let constants = BoundConstants {
        alpha: 1.0,
        alpha_hat: 1.0,
        b: 1.0,
        big_d: 1.0,
    };
    let families = [
        ("cycle-16", TopologySpec::Cycle { n: 16 }),
        ("star-16", TopologySpec::Star { n: 16 }),
        ("complete-16", TopologySpec::Complete { n: 16 }),
        ("hypercube-16", TopologySpec::Hypercube { n: 16 }),
    ];

    println!("K = 4 operands, sink at node 0, rate 0.02, laziness 0.2");
    println!(
        "{:<13} {:>9} {:>9} {:>9} {:>7} {:>12} {:>13}",
        "family", "lambda_2", "rate_low", "rate_up", "t_hit", "fixed_bound", "flex_bound"
    );
    for (name, spec) in &families {
        // lazy variant so the flexible-model bound (which needs a mixing
        // time) is defined on the bipartite members too
        let g = build(spec).unwrap().with_uniform_self_loop(0.2).unwrap();
        let r = bound_report(&BoundContext {
            graph: &g,
            k: 4,
            h: 2,
            sink: 0,
            beta: 0.02,
            c_hat: 0.0,
            constants,
            log_base: LogBase::Two,
            mixing_eps: 0.25,
        })
        .unwrap();
        println!(
            "{name:<13} {:>9.4} {:>9.4} {:>9.4} {:>7.1} {:>12} {:>13}",
            r.lambda_2,
            r.rate_lower.unwrap(),
            r.rate_upper,
            r.t_hit,
            fmt(r.fixed_latency_bound),
            fmt(r.flexible_latency_bound),
        );
    }
    println!();
    println!("rate_low is a guarantee (any rate below it is sustainable); rate_up is the");
    println!("ceiling from the sink's tightest cut; both latency bounds assume an idle system");
    println!("(c = 0) here, so measured congestion can only raise the real figures.");

    // Consolidated report: measure one setup and evaluate the bounds with
    // the busy fraction that run actually exhibited.
    let graph = Arc::new(build(&TopologySpec::Complete { n: 8 }).unwrap());
    let tree = Arc::new(SchemaTree::build_complete(2, Operator::Append, &[]).unwrap());
    let setup = Setup {
        sources: spread_sources(tree.k(), graph.n(), 0).unwrap(),
        mapping: random_injective_mapping(&tree, graph.n(), 3).unwrap(),
        graph,
        tree,
        mode: Mode::Fixed,
        sink: 0,
        flexible_cascade: false,
        seed: 3,
    };
    let cmp = compare_bounds(
        &setup,
        &ComparisonSettings {
            beta: 0.05,
            ell: 50,
            replicas: 3,
            slot_cap: 1_000_000,
            constants,
            log_base: LogBase::Two,
            mixing_eps: 0.25,
            c_hat_burn_in: 0.2,
            salt: 1,
        },
    )
    .unwrap();
    println!();
    println!("measured complete-8, K=2, fixed mode, rate 0.05, 50 rounds x 3 replicas:");
    println!(
        "  measured mean completion {:.1} slots vs fixed-model bound {} (exceeded: {:?})",
        cmp.latency.mean_tau_bar,
        fmt(cmp.report.fixed_latency_bound),
        cmp.own_bound_exceeded
    );
    println!(
        "  measured busy fraction {:.4}; appearance bound exceeded: {}",
        cmp.latency.mean_c_hat, cmp.appearance_bound_exceeded
    );
}
