//! Arrival models compared: independent per-slot coins versus jittered
//! deterministic clocks.  With independent coins the generation times of
//! sibling operands drift apart diffusively (the gap grows like sqrt of the
//! round number); with drifting clocks the gap stays bounded by the jitter.
//!
//! Run with: cargo run --example clock_drift

use std::sync::Arc;

use randcompute::engine::{
    random_injective_mapping, spread_sources, ArrivalModel, Mode, SimConfig, SimState, StopRule,
};
use randcompute::schema::{Operator, SchemaTree};
use randcompute::topology::{build, TopologySpec};

/// Mean absolute gap between the two operands' generation slots, over the
/// given round range.
fn mean_gap(sim: &SimState, rounds: std::ops::RangeInclusive<u64>) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (round, ev) in sim.round_events() {
        if !rounds.contains(round) {
            continue;
        }
        if let (Some(a), Some(b)) = (ev.appearance[0], ev.appearance[1]) {
            total += (a as f64 - b as f64).abs();
            count += 1;
        }
    }
    total / count.max(1) as f64
}

fn run(arrival: ArrivalModel) -> SimState {
    let graph = Arc::new(build(&TopologySpec::Complete { n: 8 }).unwrap());
    let tree = Arc::new(SchemaTree::build_complete(2, Operator::Append, &[]).unwrap());
    let cfg = SimConfig {
        mode: Mode::Fixed,
        sources: spread_sources(tree.k(), graph.n(), 0).unwrap(),
        sink: 0,
        mapping: random_injective_mapping(&tree, graph.n(), 11).unwrap(),
        arrival,
        seed: 11,
        flexible_cascade: false,
        round_limit: Some(400),
        slot_cap: 10_000_000,
    };
    let mut sim = SimState::new(graph, tree, cfg).unwrap();
    sim.run(StopRule::RoundsCompleted(400)).unwrap();
    sim
}

fn main() {
    let beta = 0.05;
    println!("complete-8, K=2, 400 rounds at rate {beta}; gap = |generation slot of x1 -");
    println!("generation slot of x2| per round, averaged over early and late rounds\n");
    println!(
        "{:<34} {:>12} {:>12}",
        "arrival model", "rounds 1-50", "rounds 351-400"
    );

    let models: [(String, ArrivalModel); 3] = [
        (
            "independent coins".into(),
            ArrivalModel::Bernoulli { beta },
        ),
        (
            "drifting clocks (variance 25)".into(),
            ArrivalModel::ClockDrift { beta, gamma: 25.0 },
        ),
        (
            "exact clocks (variance 0)".into(),
            ArrivalModel::ClockDrift { beta, gamma: 0.0 },
        ),
    ];
    for (name, arrival) in models {
        let sim = run(arrival);
        println!(
            "{name:<34} {:>12.1} {:>12.1}",
            mean_gap(&sim, 1..=50),
            mean_gap(&sim, 351..=400)
        );
    }

    println!();
    println!("independent coins: the gap keeps growing (null-recurrent lag between two");
    println!("same-rate counters) — the first combine stage must park the early operand");
    println!("correspondingly long.  drifting clocks: the gap stays at the jitter scale,");
    println!("and with zero variance the sources tick in lockstep.");
}
