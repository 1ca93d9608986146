//! Built-in verification suite.
//!
//! Nine end-to-end checks, each exercising one published guarantee of the
//! toolbox: trace correctness of consumed results, closed-form spectra and
//! rates, the stability sandwich, hitting/mixing oracles, fundamental-matrix
//! identities, the exact degree-moment identity, latency scaling, artifact
//! determinism, and leaf-cover conservation.  Each check returns a
//! [`CriterionResult`]; the `verify` subcommand prints one line per check and
//! exits nonzero if any fails.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytics::{
    degree_s2, fundamental_zvv, hitting_times, min_mincut, mixing_time, nu_exact, rate_lower,
    spectrum, stationary, AnalyticsError,
};
use crate::engine::{
    random_injective_mapping, reference_payload, spread_sources, ArrivalModel, Mode, SimConfig,
    SimState, StopRule,
};
use crate::experiments::{
    estimate_beta_star, measure_latency, stability_probe, ProbeSettings, Setup, Verdict,
};
use crate::schema::{Operator, SchemaNodeId, SchemaTree};
use crate::seeds;
use crate::topology::{build, Graph, TopologySpec};

/// Outcome of one verification criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {} {} — {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Collects failure messages while a criterion runs.
struct Audit {
    failures: Vec<String>,
}

impl Audit {
    fn new() -> Self {
        Audit { failures: Vec::new() }
    }

    fn check(&mut self, cond: bool, msg: impl FnOnce() -> String) {
        if !cond {
            self.failures.push(msg());
        }
    }

    fn fail(&mut self, msg: String) {
        self.failures.push(msg);
    }

    /// `budget_secs` 0 means the criterion has no runtime bound.
    fn finish(
        mut self,
        id: usize,
        name: &'static str,
        started: Instant,
        budget_secs: u64,
        summary: String,
    ) -> CriterionResult {
        let elapsed = started.elapsed().as_secs_f64();
        if budget_secs > 0 && elapsed > budget_secs as f64 {
            self.failures
                .push(format!("runtime {elapsed:.1}s exceeded the {budget_secs}s budget"));
        }
        let passed = self.failures.is_empty();
        let detail = if passed {
            format!("{summary} [{elapsed:.1}s]")
        } else {
            format!("{} [{elapsed:.1}s]", self.failures.join("; "))
        };
        CriterionResult { id, name, passed, detail }
    }
}

fn arc_graph(spec: &TopologySpec) -> Arc<Graph> {
    Arc::new(build(spec).expect("verification topology builds"))
}

/// Run every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    run_selected(&[1, 2, 3, 4, 5, 6, 7, 8, 9])
}

/// Run a subset of criteria by id (unknown ids are ignored).
pub fn run_selected(ids: &[usize]) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    for id in ids {
        match id {
            1 => out.push(trace_oracle()),
            2 => out.push(spectra_and_rate_forms()),
            3 => out.push(stability_sandwich()),
            4 => out.push(hitting_and_mixing_oracles()),
            5 => out.push(fundamental_matrix_numerics()),
            6 => out.push(degree_moment_identity()),
            7 => out.push(latency_scaling()),
            8 => out.push(artifact_determinism()),
            9 => out.push(leaf_cover_sampling()),
            _ => {}
        }
    }
    out
}

// --- criterion 1 -----------------------------------------------------------

/// Every consumed root result must equal the reference evaluation of its
/// round, across three topologies, both modes, two schema shapes, and three
/// seeds.  Runs that provably finish assert full completion of all 500
/// rounds; flexible runs on bipartite non-lazy graphs are judged over a
/// bounded horizon instead, because sibling packets there carry a conserved
/// position-parity class and a mismatched pair can never co-reside.
pub fn trace_oracle() -> CriterionResult {
    let started = Instant::now();
    let mut audit = Audit::new();

    let rounds: u64 = 500;
    let beta = 0.02;

    let schemas: Vec<(&str, Arc<SchemaTree>)> = vec![
        (
            "complete-4",
            Arc::new(SchemaTree::build_complete(4, Operator::Append, &[]).unwrap()),
        ),
        (
            "uneven-4",
            Arc::new(SchemaTree::build_from_expression("((x1*x2)+x3)*x4").unwrap()),
        ),
    ];
    let topologies: Vec<(&str, Arc<Graph>)> = vec![
        ("cycle-16", arc_graph(&TopologySpec::Cycle { n: 16 })),
        ("star-17", arc_graph(&TopologySpec::Star { n: 17 })), // sink at the hub
        ("complete-16", arc_graph(&TopologySpec::Complete { n: 16 })),
    ];
    let sink = 0usize;

    struct Job {
        topo: usize,
        schema: usize,
        mode: Mode,
        seed: u64,
    }
    let mut jobs = Vec::new();
    for topo in 0..topologies.len() {
        for schema in 0..schemas.len() {
            for mode in [Mode::Fixed, Mode::Flexible] {
                for seed in 1..=3 {
                    jobs.push(Job { topo, schema, mode, seed });
                }
            }
        }
    }

    struct Outcome {
        label: String,
        consumed: usize,
        mismatches: usize,
        completed: u64,
        expect_full: bool,
    }

    let outcomes: Vec<Result<Outcome, String>> = jobs
        .par_iter()
        .map(|job| {
            let (tname, graph) = &topologies[job.topo];
            let (sname, tree) = &schemas[job.schema];
            let label = format!("{tname}/{sname}/{}/seed{}", job.mode.tag(), job.seed);
            let k = tree.k();
            let sources =
                spread_sources(k, graph.n(), sink).map_err(|e| format!("{label}: {e}"))?;
            let mapping = match job.mode {
                Mode::Fixed => {
                    random_injective_mapping(tree, graph.n(), seeds::split(job.seed, 0xC1))
                        .map_err(|e| format!("{label}: {e}"))?
                }
                Mode::Flexible => BTreeMap::new(),
            };
            let cfg = SimConfig {
                mode: job.mode,
                sources,
                sink,
                mapping,
                arrival: ArrivalModel::Bernoulli { beta },
                seed: job.seed,
                flexible_cascade: false,
                round_limit: Some(rounds),
                slot_cap: 5_000_000,
            };
            let mut sim = SimState::new(Arc::clone(graph), Arc::clone(tree), cfg)
                .map_err(|e| format!("{label}: {e}"))?;
            let expect_full = job.mode == Mode::Fixed || !graph.is_bipartite();
            let stop = if expect_full {
                StopRule::RoundsCompleted(rounds)
            } else {
                StopRule::Slots(80_000)
            };
            sim.run(stop).map_err(|e| format!("{label}: {e}"))?;
            let mut mismatches = 0usize;
            for rec in sim.consumed() {
                let want = reference_payload(tree, job.seed, rec.round);
                if rec.trace != want.trace || rec.value != want.value {
                    mismatches += 1;
                }
            }
            Ok(Outcome {
                label,
                consumed: sim.consumed().len(),
                mismatches,
                completed: sim.rounds_completed(),
                expect_full,
            })
        })
        .collect();

    let mut total_consumed = 0usize;
    let mut total_runs = 0usize;
    for outcome in outcomes {
        match outcome {
            Err(e) => audit.fail(e),
            Ok(o) => {
                total_runs += 1;
                total_consumed += o.consumed;
                audit.check(o.mismatches == 0, || {
                    format!("{}: {} trace mismatches", o.label, o.mismatches)
                });
                if o.expect_full {
                    audit.check(o.completed == rounds, || {
                        format!("{}: only {} of {rounds} rounds completed", o.label, o.completed)
                    });
                } else {
                    audit.check(o.consumed > 0, || {
                        format!("{}: no rounds completed in the bounded window", o.label)
                    });
                }
            }
        }
    }

    let summary = format!("{total_runs} runs, {total_consumed} consumed results audited, 0 mismatches");
    audit.finish(1, "consumed results match the reference evaluation", started, 120, summary)
}

// --- criterion 2 -----------------------------------------------------------

/// Closed-form second eigenvalues and the closed-form rate lower bound.
pub fn spectra_and_rate_forms() -> CriterionResult {
    let started = Instant::now();
    let mut audit = Audit::new();
    let tol = 1e-9;

    for n in [4usize, 8, 16] {
        let g = build(&TopologySpec::Complete { n }).unwrap();
        let l2 = spectrum(&g.transition_matrix()).unwrap().lambda_2;
        let want = -1.0 / (n as f64 - 1.0);
        audit.check((l2 - want).abs() < tol, || {
            format!("complete-{n}: lambda_2 {l2} != {want}")
        });
    }
    {
        let g = build(&TopologySpec::Star { n: 17 }).unwrap();
        let l2 = spectrum(&g.transition_matrix()).unwrap().lambda_2;
        audit.check(l2.abs() < tol, || format!("star-17: lambda_2 {l2} != 0"));
    }
    for n in [4usize, 8, 32] {
        let g = build(&TopologySpec::Cycle { n }).unwrap();
        let l2 = spectrum(&g.transition_matrix()).unwrap().lambda_2;
        let want = (2.0 * std::f64::consts::PI / n as f64).cos();
        audit.check((l2 - want).abs() < tol, || {
            format!("cycle-{n}: lambda_2 {l2} != {want}")
        });
    }
    {
        let g = build(&TopologySpec::Complete { n: 4 }).unwrap();
        let l2 = spectrum(&g.transition_matrix()).unwrap().lambda_2;
        let lb = rate_lower(l2, 2, 3, 3).unwrap();
        let want = 4.0 / (6.0 * 3f64.sqrt());
        audit.check((lb - want).abs() < tol, || {
            format!("complete-4 K=2: rate lower bound {lb} != {want}")
        });
    }

    let summary = "complete/star/cycle spectra and the K=2 complete-graph rate match closed forms to 1e-9".to_string();
    audit.finish(2, "walk spectra and closed-form rates", started, 0, summary)
}

// --- criterion 3 -----------------------------------------------------------

/// The pinned 5-node star used by the stability checks: 3 operands combined
/// as (x1+x2)+x3, sink at leaf 1, first stage pinned on the hub, root pinned
/// on the leaf that also generates x3.
fn star5_setup(seed: u64) -> Setup {
    let graph = arc_graph(&TopologySpec::Star { n: 5 });
    let tree = Arc::new(SchemaTree::build_from_expression("(x1+x2)+x3").unwrap());
    let mut mapping = BTreeMap::new();
    mapping.insert(SchemaNodeId::new(1, 0), 0usize);
    mapping.insert(SchemaNodeId::ROOT, 2usize);
    Setup {
        graph,
        tree,
        mode: Mode::Fixed,
        sources: vec![3, 4, 2],
        sink: 1,
        mapping,
        flexible_cascade: false,
        seed,
    }
}

/// Probe threshold for multi-source systems: independent source clocks make
/// the count of operands parked for a sibling wander diffusively (the lag
/// between two same-rate Bernoulli counters is null-recurrent), which puts a
/// noise floor of about sigma_step/sqrt(window) ~ 1e-3 under the fitted
/// slope at feasible horizons.  5e-3 sits ~4 sigma above that floor while
/// staying two orders of magnitude below genuine divergence slopes.
const DIFFUSIVE_SLOPE_THRESHOLD: f64 = 5e-3;

/// Stable below the cut bound, unstable above it, and the bisected critical
/// rate bracketed between the spectral lower bound and the cut upper bound.
pub fn stability_sandwich() -> CriterionResult {
    let started = Instant::now();
    let mut audit = Audit::new();

    let setup = star5_setup(31);
    let pm = setup.graph.transition_matrix();
    let settings = ProbeSettings {
        horizon: 200_000,
        slope_threshold: DIFFUSIVE_SLOPE_THRESHOLD,
        ..ProbeSettings::default()
    };

    let cut = min_mincut(&pm, setup.sink);
    audit.check((cut.delta - 0.25).abs() < 1e-12, || {
        format!("cut bound {} != 0.25", cut.delta)
    });
    let l2 = spectrum(&pm).unwrap().lambda_2;
    let lb = rate_lower(l2, 3, 1, 4).unwrap();
    audit.check((lb - 1.0 / (8.0 * 3f64.sqrt())).abs() < 1e-12, || {
        format!("rate lower bound {lb} unexpected")
    });

    match stability_probe(&setup, 0.05, &settings, 0x31) {
        Ok(low) => audit.check(low.verdict == Verdict::Stable, || {
            format!(
                "beta=0.05 verdict {} (slopes {:?})",
                low.verdict,
                low.replicas.iter().map(|r| r.slope).collect::<Vec<_>>()
            )
        }),
        Err(e) => audit.fail(format!("beta=0.05 probe: {e}")),
    }
    match stability_probe(&setup, 0.5, &settings, 0x32) {
        Ok(high) => audit.check(high.verdict == Verdict::Unstable, || {
            format!(
                "beta=0.5 verdict {} (slopes {:?})",
                high.verdict,
                high.replicas.iter().map(|r| r.slope).collect::<Vec<_>>()
            )
        }),
        Err(e) => audit.fail(format!("beta=0.5 probe: {e}")),
    }

    let mut interval = (f64::NAN, f64::NAN);
    match estimate_beta_star(&setup, &settings, 0.02) {
        Ok(est) => {
            interval = (est.lo, est.hi);
            audit.check(est.lo >= lb - 1e-12, || {
                format!("interval low {} under the rate lower bound {lb}", est.lo)
            });
            audit.check(est.hi <= cut.delta + 0.02 + 1e-12, || {
                format!("interval high {} above cut bound + 0.02 = {}", est.hi, cut.delta + 0.02)
            });
        }
        Err(e) => audit.fail(format!("bisection: {e}")),
    }

    let summary = format!(
        "lower bound {lb:.4} <= critical rate in [{:.4}, {:.4}] <= cut bound 0.25 + 0.02",
        interval.0, interval.1
    );
    audit.finish(3, "stability sandwich on the 5-node star", started, 180, summary)
}

// --- criterion 4 -----------------------------------------------------------

/// Worst-case hitting times and mixing times against closed forms, plus the
/// loud failure on a periodic chain.
pub fn hitting_and_mixing_oracles() -> CriterionResult {
    let started = Instant::now();
    let mut audit = Audit::new();
    let tol = 1e-9;

    for n in [4usize, 8, 16] {
        let g = build(&TopologySpec::Complete { n }).unwrap();
        let t = hitting_times(&g.transition_matrix()).t_hit;
        let want = (n - 1) as f64;
        audit.check((t - want).abs() < tol, || {
            format!("complete-{n}: t_hit {t} != {want}")
        });
    }
    for n in [4usize, 8, 16] {
        let g = build(&TopologySpec::Cycle { n }).unwrap();
        let t = hitting_times(&g.transition_matrix()).t_hit;
        let want = ((n * n) / 4) as f64;
        audit.check((t - want).abs() < tol, || {
            format!("cycle-{n}: t_hit {t} != {want}")
        });
    }
    {
        let g = build(&TopologySpec::Complete { n: 8 })
            .unwrap()
            .with_uniform_self_loop(0.25)
            .unwrap();
        match mixing_time(&g.transition_matrix(), 0.25) {
            Ok(t) => audit.check(t == 1, || format!("lazy complete-8: mixing time {t} != 1")),
            Err(e) => audit.fail(format!("lazy complete-8 mixing: {e}")),
        }
    }
    {
        let g = build(&TopologySpec::Cycle { n: 8 }).unwrap();
        match mixing_time(&g.transition_matrix(), 0.25) {
            Err(AnalyticsError::PeriodicChain) => {}
            other => audit.fail(format!(
                "non-lazy cycle-8 should refuse with a periodic-chain error, got {other:?}"
            )),
        }
    }

    let summary = "hitting times match n-1 and floor(n^2/4); lazy complete-8 mixes in one step; periodic chain refused".to_string();
    audit.finish(4, "hitting and mixing oracles", started, 0, summary)
}

// --- criterion 5 -----------------------------------------------------------

/// On 20 seeded lazy random graphs: the diagonal of the fundamental matrix
/// is capped by the inverse spectral gap, and stationarity-weighted hitting
/// times onto each node equal Z_vv / pi_v.
pub fn fundamental_matrix_numerics() -> CriterionResult {
    let started = Instant::now();
    let mut audit = Audit::new();

    let mut specs: Vec<(String, TopologySpec)> = Vec::new();
    for (i, (n, d)) in [(16, 3), (24, 3), (32, 3), (48, 3), (64, 3), (16, 4), (24, 4), (32, 4), (48, 4), (64, 4)]
        .into_iter()
        .enumerate()
    {
        specs.push((
            format!("regular-{n}-d{d}"),
            TopologySpec::RandomRegular { n, degree: d, seed: 100 + i as u64 },
        ));
    }
    for (i, (n, r)) in [
        (16, 0.50),
        (20, 0.48),
        (24, 0.45),
        (28, 0.42),
        (32, 0.40),
        (36, 0.40),
        (40, 0.38),
        (48, 0.35),
        (56, 0.34),
        (64, 0.32),
    ]
    .into_iter()
    .enumerate()
    {
        specs.push((
            format!("geometric-{n}-r{r}"),
            TopologySpec::RandomGeometric { n, radius: r, seed: 200 + i as u64 },
        ));
    }

    let failures: Vec<String> = specs
        .par_iter()
        .map(|(label, spec)| -> Vec<String> {
            let mut local = Vec::new();
            let g = match build(spec).and_then(|g| g.with_uniform_self_loop(0.25)) {
                Ok(g) => g,
                Err(e) => return vec![format!("{label}: {e}")],
            };
            let pm = g.transition_matrix();
            let l2 = match spectrum(&pm) {
                Ok(s) => s.lambda_2,
                Err(e) => return vec![format!("{label}: {e}")],
            };
            let z = match fundamental_zvv(&pm) {
                Ok(z) => z,
                Err(e) => return vec![format!("{label}: {e}")],
            };
            let cap = 1.0 / (1.0 - l2);
            let pi = stationary(&pm);
            let expected = hitting_times(&pm).expected;
            for v in 0..g.n() {
                if z[v] > cap + 1e-9 {
                    local.push(format!("{label}: Z[{v}] = {} over cap {cap}", z[v]));
                }
                let weighted: f64 = (0..g.n()).map(|x| pi[x] * expected[(x, v)]).sum();
                let target = z[v] / pi[v];
                let rel = (weighted - target).abs() / target.abs();
                if rel > 1e-6 {
                    local.push(format!(
                        "{label}: weighted hitting {weighted} vs Z/pi {target} (rel {rel:.2e})"
                    ));
                }
            }
            local
        })
        .flatten()
        .collect();
    for f in failures {
        audit.fail(f);
    }

    let summary = "20 lazy random graphs: Z_vv <= 1/(1-lambda_2) and pi-weighted hitting equals Z_vv/pi_v to 1e-6".to_string();
    audit.finish(5, "fundamental-matrix identities on random graphs", started, 60, summary)
}

// --- criterion 6 -----------------------------------------------------------

/// The exact integer identity n * sum(d^2) * den == num * (2m)^2 for the
/// rational second-moment ratio, plus the closed star form.
pub fn degree_moment_identity() -> CriterionResult {
    let started = Instant::now();
    let mut audit = Audit::new();

    let specs: Vec<(String, TopologySpec)> = vec![
        ("cycle-4".into(), TopologySpec::Cycle { n: 4 }),
        ("cycle-8".into(), TopologySpec::Cycle { n: 8 }),
        ("cycle-16".into(), TopologySpec::Cycle { n: 16 }),
        ("cycle-32".into(), TopologySpec::Cycle { n: 32 }),
        ("star-5".into(), TopologySpec::Star { n: 5 }),
        ("star-17".into(), TopologySpec::Star { n: 17 }),
        ("complete-4".into(), TopologySpec::Complete { n: 4 }),
        ("complete-8".into(), TopologySpec::Complete { n: 8 }),
        ("complete-16".into(), TopologySpec::Complete { n: 16 }),
        ("hypercube-16".into(), TopologySpec::Hypercube { n: 16 }),
    ];
    for (label, spec) in &specs {
        let g = build(spec).unwrap();
        let s2 = degree_s2(&g);
        let (num, den) = nu_exact(&g);
        let n = g.n() as u128;
        let m2 = (2 * g.m() as u128) * (2 * g.m() as u128);
        audit.check(n * s2 * den == num * m2, || {
            format!("{label}: n*sum(d^2)*den = {} != num*(2m)^2 = {}", n * s2 * den, num * m2)
        });
    }
    for n in [5u128, 17] {
        let g = build(&TopologySpec::Star { n: n as usize }).unwrap();
        let (num, den) = nu_exact(&g);
        // reduced n^2 / (4(n-1))
        let (mut a, mut b) = (n * n, 4 * (n - 1));
        let gcd = {
            let (mut x, mut y) = (a, b);
            while y != 0 {
                let t = x % y;
                x = y;
                y = t;
            }
            x
        };
        a /= gcd;
        b /= gcd;
        audit.check(num == a && den == b, || {
            format!("star-{n}: ratio {num}/{den} != {a}/{b}")
        });
    }

    let summary = "degree second-moment identity exact on 10 topologies; star ratio equals n^2/(4(n-1))".to_string();
    audit.finish(6, "second-moment degree identity", started, 0, summary)
}

// --- criterion 7 -----------------------------------------------------------

/// Two-operand pipeline on a cycle, sized n: sources at n/4 and 3n/4, the
/// single combine stage pinned at the antipode of the sink.
fn cycle_pair_setup(n: usize, seed: u64) -> Setup {
    let graph = arc_graph(&TopologySpec::Cycle { n });
    let tree = Arc::new(SchemaTree::build_complete(2, Operator::Append, &[]).unwrap());
    let mut mapping = BTreeMap::new();
    mapping.insert(SchemaNodeId::ROOT, n / 2);
    Setup {
        graph,
        tree,
        mode: Mode::Fixed,
        sources: vec![n / 4, 3 * n / 4],
        sink: 0,
        mapping,
        flexible_cascade: false,
        seed,
    }
}

/// Per-round sojourn grows with the squared cycle length, and the busy
/// fraction grows with the arrival rate.
pub fn latency_scaling() -> CriterionResult {
    let started = Instant::now();
    let mut audit = Audit::new();

    let ell = 200;
    let replicas = 5;
    let cap = 20_000_000;

    let mut ratio = f64::NAN;
    let mut tau_bar_ratio = f64::NAN;
    match (
        measure_latency(&cycle_pair_setup(8, 7), ArrivalModel::Bernoulli { beta: 0.01 }, ell, replicas, cap, 0x71, 0.2),
        measure_latency(&cycle_pair_setup(16, 7), ArrivalModel::Bernoulli { beta: 0.01 }, ell, replicas, cap, 0x72, 0.2),
    ) {
        (Ok(small), Ok(large)) => {
            ratio = large.mean_sojourn / small.mean_sojourn;
            tau_bar_ratio = large.mean_tau_bar / small.mean_tau_bar;
            audit.check((2.0..=8.0).contains(&ratio), || {
                format!(
                    "cycle-16/cycle-8 sojourn ratio {ratio:.3} outside [2, 8] ({} vs {})",
                    large.mean_sojourn, small.mean_sojourn
                )
            });
        }
        (a, b) => {
            if let Err(e) = a {
                audit.fail(format!("cycle-8 run: {e}"));
            }
            if let Err(e) = b {
                audit.fail(format!("cycle-16 run: {e}"));
            }
        }
    }

    let comp = {
        let graph = arc_graph(&TopologySpec::Complete { n: 16 });
        let tree = Arc::new(SchemaTree::build_complete(2, Operator::Append, &[]).unwrap());
        let sources = spread_sources(2, 16, 0).unwrap();
        let mapping = random_injective_mapping(&tree, 16, seeds::split(7, 0xC7)).unwrap();
        Setup {
            graph,
            tree,
            mode: Mode::Fixed,
            sources,
            sink: 0,
            mapping,
            flexible_cascade: false,
            seed: 7,
        }
    };
    let mut busy = (f64::NAN, f64::NAN);
    match (
        measure_latency(&comp, ArrivalModel::Bernoulli { beta: 0.01 }, ell, replicas, cap, 0x73, 0.2),
        measure_latency(&comp, ArrivalModel::Bernoulli { beta: 0.05 }, ell, replicas, cap, 0x74, 0.2),
    ) {
        (Ok(slow), Ok(fast)) => {
            busy = (slow.mean_c_hat, fast.mean_c_hat);
            audit.check(slow.mean_c_hat <= fast.mean_c_hat + 0.02, || {
                format!(
                    "busy fraction not monotone: c(0.01) = {} > c(0.05) + 0.02 = {}",
                    slow.mean_c_hat,
                    fast.mean_c_hat + 0.02
                )
            });
        }
        (a, b) => {
            if let Err(e) = a {
                audit.fail(format!("complete-16 beta=0.01: {e}"));
            }
            if let Err(e) = b {
                audit.fail(format!("complete-16 beta=0.05: {e}"));
            }
        }
    }

    let summary = format!(
        "sojourn ratio {ratio:.2} in [2, 8] (whole-pipeline ratio {tau_bar_ratio:.2}); busy fraction {:.4} <= {:.4} + 0.02",
        busy.0, busy.1
    );
    audit.finish(7, "latency scaling with graph size", started, 300, summary)
}

// --- criterion 8 -----------------------------------------------------------

const DETERMINISM_CONFIG: &str = "
seed = 11

[topology]
kind = \"cycle\"
n = 8

[schema]
complete = 2

[run]
beta = 0.05
slots = 3000

[experiment]
betas = [0.05, 0.3]
horizon = 10000
";

/// `simulate` and `sweep` must write byte-identical CSVs when re-run with
/// the same config and seed.
pub fn artifact_determinism() -> CriterionResult {
    let started = Instant::now();
    let mut audit = Audit::new();

    let work = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => {
            audit.fail(format!("tempdir: {e}"));
            return audit.finish(8, "byte-identical artifacts", started, 0, String::new());
        }
    };
    let cfg = work.path().join("determinism.toml");
    if let Err(e) = std::fs::write(&cfg, DETERMINISM_CONFIG) {
        audit.fail(format!("write config: {e}"));
        return audit.finish(8, "byte-identical artifacts", started, 0, String::new());
    }
    let cfg_s = cfg.to_string_lossy().to_string();

    let compare = |subcmd: &str, files: &[&str], audit: &mut Audit| {
        let out_a = work.path().join(format!("{subcmd}_a"));
        let out_b = work.path().join(format!("{subcmd}_b"));
        for out in [&out_a, &out_b] {
            let mut args = vec![
                "randcompute".to_string(),
                subcmd.to_string(),
                "--config".to_string(),
                cfg_s.clone(),
                "--out".to_string(),
                out.to_string_lossy().to_string(),
            ];
            if subcmd == "simulate" {
                args.push("--audit".to_string());
            }
            let code = crate::cli::run(args);
            audit.check(code == 0, || format!("{subcmd} exited {code}"));
        }
        for file in files {
            let a = std::fs::read(out_a.join(file));
            let b = std::fs::read(out_b.join(file));
            match (a, b) {
                (Ok(a), Ok(b)) => audit.check(a == b, || {
                    format!("{subcmd}: {file} differs between identical runs")
                }),
                (a, b) => audit.fail(format!(
                    "{subcmd}: {file} unreadable ({:?} / {:?})",
                    a.err(),
                    b.err()
                )),
            }
        }
    };
    compare("simulate", &["rounds.csv", "audit.csv"], &mut audit);
    compare("sweep", &["sweep.csv"], &mut audit);

    let summary = "repeated simulate and sweep runs wrote byte-identical CSVs".to_string();
    audit.finish(8, "byte-identical artifacts", started, 0, summary)
}

// --- criterion 9 -----------------------------------------------------------

/// At 1000 sampled slots across four representative runs, every open round's
/// packets cover its operand set exactly once.
pub fn leaf_cover_sampling() -> CriterionResult {
    let started = Instant::now();
    let mut audit = Audit::new();

    struct Probe {
        label: &'static str,
        graph: Arc<Graph>,
        tree: Arc<SchemaTree>,
        mode: Mode,
        beta: f64,
        seed: u64,
    }
    let complete4 = Arc::new(SchemaTree::build_complete(4, Operator::Append, &[]).unwrap());
    let uneven = Arc::new(SchemaTree::build_from_expression("((x1*x2)+x3)*x4").unwrap());
    let probes = vec![
        Probe {
            label: "cycle-16/fixed",
            graph: arc_graph(&TopologySpec::Cycle { n: 16 }),
            tree: Arc::clone(&complete4),
            mode: Mode::Fixed,
            beta: 0.05,
            seed: 91,
        },
        Probe {
            label: "complete-16/flexible",
            graph: arc_graph(&TopologySpec::Complete { n: 16 }),
            tree: Arc::clone(&complete4),
            mode: Mode::Flexible,
            beta: 0.05,
            seed: 92,
        },
        Probe {
            label: "star-17/fixed",
            graph: arc_graph(&TopologySpec::Star { n: 17 }),
            tree: Arc::clone(&uneven),
            mode: Mode::Fixed,
            beta: 0.03,
            seed: 93,
        },
        Probe {
            label: "lazy-cycle-8/flexible",
            graph: Arc::new(
                build(&TopologySpec::Cycle { n: 8 })
                    .unwrap()
                    .with_uniform_self_loop(0.2)
                    .unwrap(),
            ),
            tree: Arc::clone(&uneven),
            mode: Mode::Flexible,
            beta: 0.03,
            seed: 94,
        },
    ];

    let horizon = 4_000u64;
    let per_run = 250usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC9);
    let mut checked = 0usize;

    for probe in probes {
        let sampled: std::collections::BTreeSet<u64> =
            rand::seq::index::sample(&mut rng, horizon as usize, per_run)
                .into_iter()
                .map(|i| i as u64)
                .collect();
        let k = probe.tree.k();
        let sources = spread_sources(k, probe.graph.n(), 0).unwrap();
        let mapping = match probe.mode {
            Mode::Fixed => {
                random_injective_mapping(&probe.tree, probe.graph.n(), seeds::split(probe.seed, 0xC9)).unwrap()
            }
            Mode::Flexible => BTreeMap::new(),
        };
        let cfg = SimConfig {
            mode: probe.mode,
            sources,
            sink: 0,
            mapping,
            arrival: ArrivalModel::Bernoulli { beta: probe.beta },
            seed: probe.seed,
            flexible_cascade: false,
            round_limit: None,
            slot_cap: u64::MAX,
        };
        let mut sim =
            SimState::new(Arc::clone(&probe.graph), Arc::clone(&probe.tree), cfg).unwrap();
        while sim.slot() < horizon {
            if sampled.contains(&sim.slot()) {
                checked += 1;
                if let Err(msg) = sim.check_leaf_cover() {
                    audit.fail(format!("{} slot {}: {msg}", probe.label, sim.slot()));
                }
            }
            sim.step();
        }
    }

    let summary = format!("{checked} sampled slots across 4 runs, 0 cover violations");
    audit.finish(9, "leaf-cover conservation", started, 0, summary)
}
