//! Binary computation schemas: complete trees, parsed expressions, operator
//! overrides, and the reference evaluator that produces the oracle value and
//! trace for every round.
//!
//! Run with: cargo run --example schema_playground

use randcompute::engine::reference_payload;
use randcompute::schema::{Operator, SchemaNode, SchemaNodeId, SchemaTree};

fn describe(label: &str, tree: &SchemaTree) {
    println!(
        "{label}: K = {} operands, height {}, {} leaves on the deepest level",
        tree.k(),
        tree.height(),
        tree.leaf_count()
    );
    for id in tree.ids() {
        let indent = "  ".repeat(id.level as usize + 1);
        match tree.node(id).unwrap() {
            SchemaNode::Source { operand, name } => {
                println!("{indent}{id}  operand {operand} ({name})");
            }
            SchemaNode::Internal { op } => {
                let leaves = tree.leaf_set(id);
                println!("{indent}{id}  [{}]  combines operands {leaves:?}", op.symbol());
            }
        }
    }
    let values: Vec<i64> = (1..=tree.k() as i64).collect();
    let payload = tree.reference_evaluate(&values).unwrap();
    println!(
        "  reference_evaluate({values:?}) = {}  trace {}",
        payload.value, payload.trace
    );
    println!();
}

fn main() {
    // Complete tree over four operands, one operator everywhere.
    let complete = SchemaTree::build_complete(4, Operator::Add, &[]).unwrap();
    describe("complete K=4 (+)", &complete);

    // Same shape, but the left subtree multiplies: overrides pin operators
    // onto individual internal nodes.
    let mixed = SchemaTree::build_complete(
        4,
        Operator::Add,
        &[(SchemaNodeId::new(1, 0), Operator::Mul)],
    )
    .unwrap();
    describe("complete K=4 with (x1*x2)", &mixed);

    // Parsed expression; the shape follows the parentheses exactly, so the
    // tree is uneven and the operand order is frozen by position.
    let uneven = SchemaTree::build_from_expression("((x1*x2)+x3)*x4").unwrap();
    describe("expression ((x1*x2)+x3)*x4", &uneven);

    // The order-sensitive combiner: swapping operands changes the value, so
    // silent operand transposition cannot cancel out.
    let append = SchemaTree::build_complete(2, Operator::Append, &[]).unwrap();
    let fwd = append.reference_evaluate(&[10, 20]).unwrap();
    let rev = append.reference_evaluate(&[20, 10]).unwrap();
    println!("order sensitivity of the '#' combiner:");
    println!("  (10 # 20) = {}", fwd.value);
    println!("  (20 # 10) = {}", rev.value);
    assert_ne!(fwd.value, rev.value);
    println!();

    // Per-round operand values are a pure function of (seed, round, operand);
    // this is what simulated results are audited against.
    println!("reference payloads for seed 42:");
    for round in 1..=3 {
        let p = reference_payload(&uneven, 42, round);
        println!("  round {round}: value {:>20}  trace {}", p.value, p.trace);
    }

    // Malformed expressions fail loudly, with the reason.
    for bad in ["(x1+x2", "x1 + x1", "(x1%x2)"] {
        let err = SchemaTree::build_from_expression(bad).unwrap_err();
        println!("rejected {bad:?}: {err}");
    }
}
