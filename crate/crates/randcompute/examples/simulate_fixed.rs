//! End-to-end run of the pinned-combination model: every internal schema
//! node lives on one designated network node, so each partial result must
//! random-walk to its combine site, meet its sibling there, and the root
//! result must then reach the sink.
//!
//! Run with: cargo run --example simulate_fixed

use std::sync::Arc;

use randcompute::engine::{
    random_injective_mapping, reference_payload, spread_sources, ArrivalModel, Mode, SimConfig,
    SimState, StopRule,
};
use randcompute::schema::{Operator, SchemaTree};
use randcompute::topology::{build, TopologySpec};

fn main() {
    let graph = Arc::new(build(&TopologySpec::Cycle { n: 16 }).unwrap());
    let tree = Arc::new(SchemaTree::build_complete(4, Operator::Append, &[]).unwrap());
    let seed = 2024;

    let sink = 0;
    let sources = spread_sources(tree.k(), graph.n(), sink).unwrap();
    let mapping = random_injective_mapping(&tree, graph.n(), seed).unwrap();
    println!("cycle-16, K=4 complete schema, sink at node {sink}");
    println!("sources (operand k at entry k-1): {sources:?}");
    for (id, node) in &mapping {
        println!("  combine stage {id} pinned on network node {node}");
    }

    let cfg = SimConfig {
        mode: Mode::Fixed,
        sources,
        sink,
        mapping,
        arrival: ArrivalModel::Bernoulli { beta: 0.02 },
        seed,
        flexible_cascade: false,
        round_limit: Some(50), // stop injecting after round 50, then drain
        slot_cap: 1_000_000,
    };
    let mut sim = SimState::new(Arc::clone(&graph), Arc::clone(&tree), cfg).unwrap();
    sim.run(StopRule::RoundsCompleted(50)).unwrap();

    let m = sim.metrics(0.2);
    println!();
    println!(
        "completed all 50 rounds in {} slots (busy fraction after burn-in: {:.4})",
        m.slots_run, m.c_hat
    );

    println!();
    println!("first three consumed results, checked against the reference evaluator:");
    for rec in sim.consumed().iter().take(3) {
        let want = reference_payload(&tree, seed, rec.round);
        assert_eq!(rec.value, want.value);
        assert_eq!(rec.trace, want.trace);
        println!(
            "  round {:>2} consumed at slot {:>5}: value {:>20}  trace {}",
            rec.round, rec.slot, rec.value, rec.trace
        );
    }

    println!();
    println!("per-round timeline (last operand appearance -> root consumed):");
    for (round, ev) in sim.round_events().iter().take(5) {
        println!(
            "  round {round}: operands all present at slot {:?}, result consumed at slot {:?}",
            ev.appearance_max(),
            ev.completion
        );
    }

    let (q, c) = sim.total_in_system();
    println!();
    println!("after drain: {q} packets queued, {c} parked at combine stages");
}
