//! The random-walk toolbox: stationary distribution, spectrum, hitting
//! times, mixing time, and the fundamental-matrix diagonal, with the two
//! identities that tie them together checked numerically.
//!
//! Run with: cargo run --example walk_analytics

use randcompute::analytics::{
    fundamental_zvv, hitting_times, mixing_time, spectrum, stationary,
};
use randcompute::topology::{build, TopologySpec};

fn main() {
    // Laziness makes the walk aperiodic so every quantity below is finite.
    let g = build(&TopologySpec::RandomRegular { n: 24, degree: 3, seed: 5 })
        .unwrap()
        .with_uniform_self_loop(0.25)
        .unwrap();
    let pm = g.transition_matrix();

    let pi = stationary(&pm);
    println!(
        "random 3-regular, n=24, laziness 0.25: stationary mass is uniform, pi_0 = {:.6}",
        pi[0]
    );

    let spec = spectrum(&pm).unwrap();
    println!(
        "spectrum: lambda_2 = {:.6}, gap = {:.6} (eigenvalues sorted, leading one is 1)",
        spec.lambda_2, spec.spectral_gap
    );

    let hit = hitting_times(&pm);
    println!(
        "worst-case expected hitting time t_hit = {:.2}, attained from node {} to node {}",
        hit.t_hit, hit.worst_pair.0, hit.worst_pair.1
    );

    let t_mix = mixing_time(&pm, 0.25).unwrap();
    println!("mixing time to total-variation 1/4: {t_mix} steps");

    let z = fundamental_zvv(&pm).unwrap();
    println!();
    println!("fundamental-matrix diagonal Z_vv, and the identities it satisfies:");
    println!("  spectral cap: Z_vv <= 1/(1 - lambda_2) = {:.4}", 1.0 / (1.0 - spec.lambda_2));
    for v in [0, 7, 23] {
        // Identity: starting from stationarity, the expected time to reach v
        // is Z_vv / pi_v.
        let from_pi: f64 = (0..g.n()).map(|x| pi[x] * hit.expected[(x, v)]).sum();
        let predicted = z[v] / pi[v];
        println!(
            "  v={v:>2}: Z_vv = {:.4}  E_pi(time to reach v) = {:.4}  Z_vv/pi_v = {:.4}",
            z[v], from_pi, predicted
        );
        assert!((from_pi - predicted).abs() / predicted < 1e-9);
    }

    // Closed forms on structured families make handy sanity checks.
    println!();
    for n in [8usize, 16] {
        let complete = build(&TopologySpec::Complete { n }).unwrap();
        let t = hitting_times(&complete.transition_matrix()).t_hit;
        println!("complete-{n}: t_hit = {t:.0} (equals n - 1)");
    }
    for n in [8usize, 16] {
        let cycle = build(&TopologySpec::Cycle { n }).unwrap();
        let t = hitting_times(&cycle.transition_matrix()).t_hit;
        println!("cycle-{n}:    t_hit = {t:.0} (equals floor(n^2/4))");
    }

    // Periodic chains refuse mixing-time questions instead of looping.
    let periodic = build(&TopologySpec::Cycle { n: 8 }).unwrap();
    let err = mixing_time(&periodic.transition_matrix(), 0.25).unwrap_err();
    println!();
    println!("cycle-8 without laziness: {err}");
}
