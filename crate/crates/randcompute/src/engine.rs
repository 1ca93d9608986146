//! Slotted-time gossip simulation of in-network computation.
//!
//! Each slot runs four phases in order:
//!
//! 1. **arrivals** — every source generates at most one new operand packet
//!    for its next round (Bernoulli coin or drifting per-packet clock);
//! 2. **send** — every node with a non-empty queue removes one uniformly
//!    random packet and pushes it to a neighbour drawn per the transmission
//!    kernel (a self-loop draw re-enqueues the packet unchanged);
//! 3. **receive** — deliveries are processed per receiver in ascending
//!    sender order. In `fixed` mode a node pinned to an internal schema node
//!    captures packets carrying its operands, combining them with a buffered
//!    matching-round sibling or parking them in the operand buffer; all other
//!    packets are relayed. In `flexible` mode any received packet combines
//!    with a same-round sibling present at the node (at most one combination
//!    per received packet unless cascading is enabled);
//! 4. **absorption** — a root packet at the sink is consumed and its round
//!    marked complete.
//!
//! Sends draw from the current queue while everything received or combined
//! in a slot lands in the next slot's queue, so a packet never moves twice
//! in one slot. Packets generated in the arrival phase are transmittable in
//! the same slot. A node that generates an operand of its own pinned
//! subfunction applies the receive-path logic to that packet immediately
//! rather than circulating it through the network first.
//!
//! Runs are deterministic: one seed drives a single counter-mode stream, and
//! identical `(config, seed)` pairs replay identical trajectories.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap, HashMap};
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::schema::{Payload, SchemaNodeId, SchemaTree};
use crate::seeds;
use crate::topology::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// every internal schema node is pinned to one network node
    Fixed,
    /// any node may combine matching packets it holds
    Flexible,
}

impl Mode {
    pub fn tag(self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::Flexible => "flexible",
        }
    }
}

/// Per-source packet generation process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalModel {
    /// independent coin of rate `beta` per slot per source
    Bernoulli { beta: f64 },
    /// packet `i` materialises at slot `round(i/beta + N(0, gamma))`
    /// (variance `gamma`, clamped to slot >= 1, at most one emission per
    /// slot per source; surplus due packets spill into following slots)
    ClockDrift { beta: f64, gamma: f64 },
}

impl ArrivalModel {
    pub fn beta(&self) -> f64 {
        match *self {
            ArrivalModel::Bernoulli { beta } | ArrivalModel::ClockDrift { beta, .. } => beta,
        }
    }
}

/// Everything needed to instantiate a simulation on a graph and schema.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub mode: Mode,
    /// operand k is generated at `sources[k-1]`
    pub sources: Vec<usize>,
    pub sink: usize,
    /// `fixed` mode: internal schema id -> network node, injective.
    /// Must be empty in `flexible` mode.
    pub mapping: BTreeMap<SchemaNodeId, usize>,
    pub arrival: ArrivalModel,
    pub seed: u64,
    /// allow a combination result to immediately combine again (flexible)
    pub flexible_cascade: bool,
    /// stop generating new rounds past this one (drain mode)
    pub round_limit: Option<u64>,
    /// hard stop for run-to-completion targets
    pub slot_cap: u64,
}

pub const DEFAULT_SLOT_CAP: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("source list has {got} entries, schema has {expected} operands")]
    SourceCountMismatch { expected: usize, got: usize },
    #[error("source node {0} out of range")]
    SourceOutOfRange(usize),
    #[error("sources must be distinct network nodes")]
    DuplicateSource,
    #[error("sink {0} out of range")]
    SinkOutOfRange(usize),
    #[error("mapping misses internal schema node ({0})")]
    MissingMapping(SchemaNodeId),
    #[error("mapping contains unknown or non-internal schema id ({0})")]
    UnknownMappingId(SchemaNodeId),
    #[error("mapping is not injective: network node {0} pinned twice")]
    NonInjectiveMapping(usize),
    #[error("mapping target {0} out of range")]
    MappingOutOfRange(usize),
    #[error("flexible mode takes no mapping")]
    MappingInFlexible,
    #[error("schema needs {need} pinned nodes but the graph has only {have}")]
    GraphTooSmall { need: usize, have: usize },
    #[error("arrival rate {0} outside (0, 1]")]
    BadRate(f64),
    #[error("clock-drift variance {0} must be finite and >= 0")]
    BadGamma(f64),
    #[error("slot cap {cap} reached with {completed} of {target} rounds completed")]
    SlotCapReached {
        cap: u64,
        completed: u64,
        target: u64,
    },
}

/// A data packet in flight: one subtree's worth of combined operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub round: u64,
    pub id: SchemaNodeId,
    pub payload: Payload,
    pub birth_slot: u64,
    pub uid: u64,
}

#[derive(Debug, Default)]
struct NodeState {
    q: Vec<Packet>,
    /// position of each (round, schema id) in `q`; system-wide uniqueness of
    /// that key is a structural invariant (each packet is created exactly once)
    qpos: HashMap<(u64, SchemaNodeId), usize>,
    /// lands in next slot's queue
    staged: Vec<Packet>,
    /// fixed mode: operand awaiting its sibling, keyed by round
    cbuf: HashMap<u64, Packet>,
}

impl NodeState {
    fn enqueue(&mut self, p: Packet) {
        let prev = self.qpos.insert((p.round, p.id), self.q.len());
        debug_assert!(prev.is_none(), "duplicate (round, id) in queue");
        self.q.push(p);
    }

    fn remove_at(&mut self, idx: usize) -> Packet {
        let p = self.q.swap_remove(idx);
        self.qpos.remove(&(p.round, p.id));
        if idx < self.q.len() {
            let moved = &self.q[idx];
            self.qpos.insert((moved.round, moved.id), idx);
        }
        p
    }

    fn take_queued(&mut self, round: u64, id: SchemaNodeId) -> Option<Packet> {
        let idx = *self.qpos.get(&(round, id))?;
        Some(self.remove_at(idx))
    }

    fn take_staged(&mut self, round: u64, id: SchemaNodeId) -> Option<Packet> {
        let idx = self
            .staged
            .iter()
            .position(|p| p.round == round && p.id == id)?;
        Some(self.staged.remove(idx))
    }
}

/// Per-source generation clock.
#[derive(Debug)]
enum SourceClock {
    Bernoulli {
        generated: u64,
    },
    Drift {
        next_seq: u64,
        /// (due slot, round) pairs not yet emitted
        pending: BinaryHeap<Reverse<(u64, u64)>>,
    },
}

/// What happened to one round so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundEvent {
    /// generation slot per operand (index k-1)
    pub appearance: Vec<Option<u64>>,
    pub completion: Option<u64>,
}

impl RoundEvent {
    pub fn appearance_max(&self) -> Option<u64> {
        self.appearance.iter().copied().max().flatten()
    }
}

/// Root payload consumed at the sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsumedRecord {
    pub round: u64,
    pub slot: u64,
    pub trace: String,
    pub value: i64,
}

#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    /// run exactly this many further slots
    Slots(u64),
    /// run until rounds 1..=l have all completed (respects the slot cap)
    RoundsCompleted(u64),
}

/// Aggregated observables of a finished (or paused) run.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub slots_run: u64,
    pub rounds_completed: u64,
    /// largest l such that rounds 1..=l have all completed
    pub completed_prefix: u64,
    pub round_events: BTreeMap<u64, RoundEvent>,
    pub consumed: Vec<ConsumedRecord>,
    /// per-slot packets across all transmission queues
    pub total_q_series: Vec<u32>,
    /// per-slot packets in queues plus operand buffers
    pub total_qc_series: Vec<u32>,
    /// per-slot maximum single-node queue length
    pub max_q_series: Vec<u32>,
    pub max_queue_per_node: Vec<u32>,
    /// sends per node per neighbour (aligned with `Graph::neighbors`)
    pub send_counts: Vec<Vec<u64>>,
    pub self_sends: Vec<u64>,
    /// fraction of post-burn-in slots in which some queue held >= 2 packets
    pub c_hat: f64,
    pub burn_in: f64,
    pub hit_slot_cap: bool,
}

/// Latency figures for a run that targeted `ell` rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencySummary {
    pub ell: u64,
    /// slot by which every operand of rounds 1..=ell had appeared
    pub tau_app: u64,
    /// slot by which rounds 1..=ell had all completed
    pub tau_fk: u64,
    /// tau_fk / ell
    pub tau_bar: f64,
    /// mean over rounds of (completion - last operand appearance)
    pub mean_sojourn: f64,
}

impl Metrics {
    /// Delay-indicator average over slots past the given burn-in fraction.
    pub fn c_hat_with(&self, burn_in: f64) -> f64 {
        let len = self.max_q_series.len();
        let start = (len as f64 * burn_in).floor() as usize;
        if start >= len {
            return 0.0;
        }
        let hits = self.max_q_series[start..].iter().filter(|&&m| m >= 2).count();
        hits as f64 / (len - start) as f64
    }

    /// Largest single-node queue over slots past the burn-in fraction.
    pub fn max_queue_after(&self, burn_in: f64) -> u32 {
        let len = self.max_q_series.len();
        let start = (len as f64 * burn_in).floor() as usize;
        self.max_q_series[start.min(len)..]
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Latency summary over rounds `1..=ell`; `None` until all have completed.
    pub fn latency_summary(&self, ell: u64) -> Option<LatencySummary> {
        let mut tau_app = 0u64;
        let mut tau_fk = 0u64;
        let mut sojourn_total = 0u64;
        for round in 1..=ell {
            let ev = self.round_events.get(&round)?;
            let app = ev.appearance_max()?;
            if ev.appearance.iter().any(|a| a.is_none()) {
                return None;
            }
            let done = ev.completion?;
            tau_app = tau_app.max(app);
            tau_fk = tau_fk.max(done);
            sojourn_total += done - app;
        }
        Some(LatencySummary {
            ell,
            tau_app,
            tau_fk,
            tau_bar: tau_fk as f64 / ell as f64,
            mean_sojourn: sojourn_total as f64 / ell as f64,
        })
    }
}

/// Deterministic per-round operand value (shared by the simulator and any
/// external reference evaluation).
pub fn operand_value(seed: u64, round: u64, operand: usize) -> i64 {
    seeds::split(seeds::split(seed ^ 0x9d5f_2c11_7b3a_e401, round), operand as u64) as i64
}

/// Ground-truth root payload for `round` under this sim seed.
pub fn reference_payload(tree: &SchemaTree, seed: u64, round: u64) -> Payload {
    let values: Vec<i64> = (1..=tree.k())
        .map(|k| operand_value(seed, round, k))
        .collect();
    tree.reference_evaluate(&values)
        .expect("value vector sized to schema")
}

/// Uniformly random injective pinning of internal schema nodes onto the graph.
pub fn random_injective_mapping(
    tree: &SchemaTree,
    n: usize,
    seed: u64,
) -> Result<BTreeMap<SchemaNodeId, usize>, EngineError> {
    let internal = tree.internal_ids();
    if internal.len() > n {
        return Err(EngineError::GraphTooSmall {
            need: internal.len(),
            have: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    Ok(internal
        .into_iter()
        .zip(nodes)
        .collect())
}

/// Deterministic spread of k source nodes over `0..n`, avoiding the sink.
pub fn spread_sources(k: usize, n: usize, sink: usize) -> Result<Vec<usize>, EngineError> {
    if k + 1 > n {
        return Err(EngineError::GraphTooSmall { need: k + 1, have: n });
    }
    let mut picked = Vec::with_capacity(k);
    for i in 0..k {
        let mut cand = i * n / k;
        while cand == sink || picked.contains(&cand) {
            cand = (cand + 1) % n;
        }
        picked.push(cand);
    }
    Ok(picked)
}

pub struct SimState {
    graph: Arc<Graph>,
    tree: Arc<SchemaTree>,
    cfg: SimConfig,
    /// inverse mapping: node -> internal schema id pinned there
    phi_at: Vec<Option<SchemaNodeId>>,
    nodes: Vec<NodeState>,
    clocks: Vec<SourceClock>,
    drift_noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    slot: u64,
    uid_next: u64,
    delivery_buf: Vec<Vec<Packet>>,
    // observables
    round_events: BTreeMap<u64, RoundEvent>,
    consumed: Vec<ConsumedRecord>,
    rounds_completed: u64,
    completed_prefix: u64,
    total_q_series: Vec<u32>,
    total_qc_series: Vec<u32>,
    max_q_series: Vec<u32>,
    max_queue_per_node: Vec<u32>,
    send_counts: Vec<Vec<u64>>,
    self_sends: Vec<u64>,
    hit_slot_cap: bool,
}

impl SimState {
    pub fn new(
        graph: Arc<Graph>,
        tree: Arc<SchemaTree>,
        cfg: SimConfig,
    ) -> Result<SimState, EngineError> {
        let n = graph.n();
        if cfg.sources.len() != tree.k() {
            return Err(EngineError::SourceCountMismatch {
                expected: tree.k(),
                got: cfg.sources.len(),
            });
        }
        for &s in &cfg.sources {
            if s >= n {
                return Err(EngineError::SourceOutOfRange(s));
            }
        }
        {
            let mut sorted = cfg.sources.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(EngineError::DuplicateSource);
            }
        }
        if cfg.sink >= n {
            return Err(EngineError::SinkOutOfRange(cfg.sink));
        }
        let mut phi_at: Vec<Option<SchemaNodeId>> = vec![None; n];
        match cfg.mode {
            Mode::Fixed => {
                let internal = tree.internal_ids();
                for id in &internal {
                    if !cfg.mapping.contains_key(id) {
                        return Err(EngineError::MissingMapping(*id));
                    }
                }
                for (&id, &node) in &cfg.mapping {
                    if !internal.contains(&id) {
                        return Err(EngineError::UnknownMappingId(id));
                    }
                    if node >= n {
                        return Err(EngineError::MappingOutOfRange(node));
                    }
                    if phi_at[node].is_some() {
                        return Err(EngineError::NonInjectiveMapping(node));
                    }
                    phi_at[node] = Some(id);
                }
            }
            Mode::Flexible => {
                if !cfg.mapping.is_empty() {
                    return Err(EngineError::MappingInFlexible);
                }
            }
        }
        let beta = cfg.arrival.beta();
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(EngineError::BadRate(beta));
        }
        let drift_noise = match cfg.arrival {
            ArrivalModel::Bernoulli { .. } => None,
            ArrivalModel::ClockDrift { gamma, .. } => {
                if !(gamma >= 0.0 && gamma.is_finite()) {
                    return Err(EngineError::BadGamma(gamma));
                }
                Some(Normal::new(0.0, gamma.sqrt()).expect("finite std dev"))
            }
        };
        let clocks = cfg
            .sources
            .iter()
            .map(|_| match cfg.arrival {
                ArrivalModel::Bernoulli { .. } => SourceClock::Bernoulli { generated: 0 },
                ArrivalModel::ClockDrift { .. } => SourceClock::Drift {
                    next_seq: 1,
                    pending: BinaryHeap::new(),
                },
            })
            .collect();
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let send_counts = (0..n).map(|u| vec![0u64; graph.degree(u)]).collect();
        Ok(SimState {
            phi_at,
            nodes: (0..n).map(|_| NodeState::default()).collect(),
            clocks,
            drift_noise,
            rng,
            slot: 0,
            uid_next: 0,
            delivery_buf: (0..n).map(|_| Vec::new()).collect(),
            round_events: BTreeMap::new(),
            consumed: Vec::new(),
            rounds_completed: 0,
            completed_prefix: 0,
            total_q_series: Vec::new(),
            total_qc_series: Vec::new(),
            max_q_series: Vec::new(),
            max_queue_per_node: vec![0; n],
            send_counts,
            self_sends: vec![0; n],
            hit_slot_cap: false,
            graph,
            tree,
            cfg,
        })
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn tree(&self) -> &SchemaTree {
        &self.tree
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn queue(&self, u: usize) -> &[Packet] {
        &self.nodes[u].q
    }

    /// Operand-buffer contents of a node, ordered by round.
    pub fn buffered(&self, u: usize) -> Vec<&Packet> {
        let mut v: Vec<&Packet> = self.nodes[u].cbuf.values().collect();
        v.sort_by_key(|p| p.round);
        v
    }

    /// (packets in queues, packets in queues plus operand buffers)
    pub fn total_in_system(&self) -> (usize, usize) {
        let q: usize = self.nodes.iter().map(|s| s.q.len() + s.staged.len()).sum();
        let c: usize = self.nodes.iter().map(|s| s.cbuf.len()).sum();
        (q, q + c)
    }

    pub fn rounds_completed(&self) -> u64 {
        self.rounds_completed
    }

    pub fn completed_prefix(&self) -> u64 {
        self.completed_prefix
    }

    pub fn consumed(&self) -> &[ConsumedRecord] {
        &self.consumed
    }

    pub fn round_events(&self) -> &BTreeMap<u64, RoundEvent> {
        &self.round_events
    }

    fn next_uid(&mut self) -> u64 {
        self.uid_next += 1;
        self.uid_next
    }

    /// Advance one slot through all four phases.
    pub fn step(&mut self) {
        self.arrival_phase();
        self.send_phase();
        self.receive_phase();
        self.merge_and_sample();
        self.slot += 1;
    }

    /// Run until the stop rule is met. `RoundsCompleted` returns an error if
    /// the slot cap strikes first (observables remain inspectable).
    pub fn run(&mut self, rule: StopRule) -> Result<(), EngineError> {
        match rule {
            StopRule::Slots(t) => {
                for _ in 0..t {
                    self.step();
                }
                Ok(())
            }
            StopRule::RoundsCompleted(target) => {
                while self.completed_prefix < target {
                    if self.slot >= self.cfg.slot_cap {
                        self.hit_slot_cap = true;
                        return Err(EngineError::SlotCapReached {
                            cap: self.cfg.slot_cap,
                            completed: self.completed_prefix,
                            target,
                        });
                    }
                    self.step();
                }
                Ok(())
            }
        }
    }

    /// Snapshot the observables (burn-in fraction fixes the delay estimate).
    pub fn metrics(&self, burn_in: f64) -> Metrics {
        let mut m = Metrics {
            slots_run: self.slot,
            rounds_completed: self.rounds_completed,
            completed_prefix: self.completed_prefix,
            round_events: self.round_events.clone(),
            consumed: self.consumed.clone(),
            total_q_series: self.total_q_series.clone(),
            total_qc_series: self.total_qc_series.clone(),
            max_q_series: self.max_q_series.clone(),
            max_queue_per_node: self.max_queue_per_node.clone(),
            send_counts: self.send_counts.clone(),
            self_sends: self.self_sends.clone(),
            c_hat: 0.0,
            burn_in,
            hit_slot_cap: self.hit_slot_cap,
        };
        m.c_hat = m.c_hat_with(burn_in);
        m
    }

    // ---- phase 1: arrivals ----

    fn arrival_phase(&mut self) {
        let t = self.slot;
        let k_count = self.cfg.sources.len();
        for k in 1..=k_count {
            if let Some(round) = self.draw_arrival(k) {
                let value = operand_value(self.cfg.seed, round, k);
                let packet = Packet {
                    round,
                    id: self.tree.operand_id(k),
                    payload: Payload::atom(self.tree.operand_name(k), value),
                    birth_slot: t,
                    uid: self.next_uid(),
                };
                self.round_events
                    .entry(round)
                    .or_insert_with(|| RoundEvent {
                        appearance: vec![None; k_count],
                        completion: None,
                    })
                    .appearance[k - 1] = Some(t);
                let src = self.cfg.sources[k - 1];
                self.arrival_place(src, packet);
            }
        }
    }

    /// At most one round per source per slot; returns the round generated.
    fn draw_arrival(&mut self, k: usize) -> Option<u64> {
        let limit = self.cfg.round_limit.unwrap_or(u64::MAX);
        let t = self.slot;
        match (&mut self.clocks[k - 1], self.cfg.arrival) {
            (SourceClock::Bernoulli { generated }, ArrivalModel::Bernoulli { beta }) => {
                if *generated >= limit {
                    return None;
                }
                if self.rng.random::<f64>() < beta {
                    *generated += 1;
                    Some(*generated)
                } else {
                    None
                }
            }
            (
                SourceClock::Drift { next_seq, pending },
                ArrivalModel::ClockDrift { beta, gamma },
            ) => {
                // Noise is clamped to +-6 sigma so a bounded lookahead window
                // suffices to have scheduled every packet that could be due.
                let six_sigma = 6.0 * gamma.sqrt();
                let noise = self.drift_noise.expect("drift model");
                while *next_seq <= limit && *next_seq as f64 / beta <= t as f64 + 1.0 + six_sigma
                {
                    let eps = noise
                        .sample(&mut self.rng)
                        .clamp(-six_sigma, six_sigma);
                    let due = (*next_seq as f64 / beta + eps).round().max(1.0) as u64;
                    pending.push(Reverse((due, *next_seq)));
                    *next_seq += 1;
                }
                match pending.peek() {
                    Some(&Reverse((due, _))) if due <= t => {
                        let Reverse((_, seq)) = pending.pop().expect("peeked");
                        Some(seq)
                    }
                    _ => None,
                }
            }
            _ => unreachable!("clock kind fixed at init"),
        }
    }

    /// Place a freshly generated packet at its source.
    fn arrival_place(&mut self, src: usize, p: Packet) {
        if p.id == SchemaNodeId::ROOT && src == self.cfg.sink {
            self.absorb(p);
            return;
        }
        match self.cfg.mode {
            Mode::Fixed => {
                if self.is_operand_of_pin(src, &p) {
                    self.capture_fixed(src, p);
                } else {
                    // transmittable in this same slot
                    self.nodes[src].enqueue(p);
                }
            }
            Mode::Flexible => {
                if let Err(p) = self.try_flexible_combine(src, p) {
                    self.nodes[src].enqueue(p);
                }
            }
        }
    }

    // ---- phase 2: send ----

    fn send_phase(&mut self) {
        let n = self.graph.n();
        for u in 0..n {
            if self.nodes[u].q.is_empty() {
                continue;
            }
            let eps = self.graph.self_loop(u);
            let dest = if eps > 0.0 && self.rng.random::<f64>() < eps {
                u
            } else {
                let nbrs = self.graph.neighbors(u);
                nbrs[self.rng.random_range(0..nbrs.len())]
            };
            let idx = self.rng.random_range(0..self.nodes[u].q.len());
            let p = self.nodes[u].remove_at(idx);
            if dest == u {
                // self-loop: keep the packet, skip receive processing
                self.self_sends[u] += 1;
                self.nodes[u].staged.push(p);
            } else {
                let pos = self
                    .graph
                    .neighbors(u)
                    .binary_search(&dest)
                    .expect("dest is a neighbour");
                self.send_counts[u][pos] += 1;
                self.delivery_buf[dest].push(p);
            }
        }
    }

    // ---- phase 3: receive ----

    fn receive_phase(&mut self) {
        let n = self.graph.n();
        for v in 0..n {
            // deliveries were pushed in ascending sender order
            let dels = std::mem::take(&mut self.delivery_buf[v]);
            for p in dels {
                match self.cfg.mode {
                    Mode::Fixed => self.receive_fixed(v, p),
                    Mode::Flexible => self.receive_flexible(v, p),
                }
            }
        }
    }

    fn is_operand_of_pin(&self, v: usize, p: &Packet) -> bool {
        match (self.phi_at[v], p.id.parent()) {
            (Some(pin), Some(parent)) => pin == parent,
            _ => false,
        }
    }

    fn receive_fixed(&mut self, v: usize, p: Packet) {
        if self.is_operand_of_pin(v, &p) {
            self.capture_fixed(v, p);
        } else {
            self.place_staged(v, p);
        }
    }

    /// Fixed-mode operand handling at the pinned node: combine with the
    /// buffered matching-round sibling or park in the operand buffer.
    fn capture_fixed(&mut self, v: usize, p: Packet) {
        let tree = Arc::clone(&self.tree);
        let buffered = {
            let node = &mut self.nodes[v];
            match node.cbuf.get(&p.round) {
                Some(other) if other.id == p.id => {
                    unreachable!("duplicate operand packet for one round")
                }
                Some(_) => node.cbuf.remove(&p.round),
                None => {
                    node.cbuf.insert(p.round, p);
                    return;
                }
            }
        };
        let sib = buffered.expect("checked occupied");
        let (parent, payload) = tree
            .combine(
                (p.id, &p.payload, p.round),
                (sib.id, &sib.payload, sib.round),
            )
            .expect("buffered packet is the matching sibling");
        let combined = Packet {
            round: p.round,
            id: parent,
            payload,
            birth_slot: self.slot,
            uid: self.next_uid(),
        };
        self.place_staged(v, combined);
    }

    fn receive_flexible(&mut self, v: usize, p: Packet) {
        if let Err(p) = self.try_flexible_combine(v, p) {
            self.place_staged(v, p);
        }
    }

    /// Flexible-mode combination: if a same-round sibling of `p` is present
    /// at `v`, consume it and place the parent packet for the next slot
    /// (cascading further only when configured). Returns `Err(p)` untouched
    /// when no sibling is present so the caller decides placement.
    fn try_flexible_combine(&mut self, v: usize, p: Packet) -> Result<(), Packet> {
        let tree = Arc::clone(&self.tree);
        let mut current = p;
        let mut combined_once = false;
        loop {
            let sib_id = match current.id.sibling() {
                Some(s) if tree.contains(s) => s,
                _ => break,
            };
            let mate = {
                let node = &mut self.nodes[v];
                node.take_queued(current.round, sib_id)
                    .or_else(|| node.take_staged(current.round, sib_id))
            };
            let Some(mate) = mate else { break };
            let (parent, payload) = tree
                .combine(
                    (current.id, &current.payload, current.round),
                    (mate.id, &mate.payload, mate.round),
                )
                .expect("sibling ids of equal round");
            current = Packet {
                round: current.round,
                id: parent,
                payload,
                birth_slot: self.slot,
                uid: self.next_uid(),
            };
            combined_once = true;
            if !self.cfg.flexible_cascade {
                break;
            }
        }
        if combined_once {
            self.place_staged(v, current);
            Ok(())
        } else {
            Err(current)
        }
    }

    /// Packet settles at `v` for the next slot; root packets at the sink are
    /// consumed instead.
    fn place_staged(&mut self, v: usize, p: Packet) {
        if p.id == SchemaNodeId::ROOT && v == self.cfg.sink {
            self.absorb(p);
        } else {
            self.nodes[v].staged.push(p);
        }
    }

    // ---- phase 4: absorption & bookkeeping ----

    fn absorb(&mut self, p: Packet) {
        debug_assert_eq!(p.id, SchemaNodeId::ROOT);
        let ev = self
            .round_events
            .get_mut(&p.round)
            .expect("operands appeared before the root can exist");
        debug_assert!(ev.completion.is_none(), "round completed twice");
        ev.completion = Some(self.slot);
        self.consumed.push(ConsumedRecord {
            round: p.round,
            slot: self.slot,
            trace: p.payload.trace,
            value: p.payload.value,
        });
        self.rounds_completed += 1;
        while self
            .round_events
            .get(&(self.completed_prefix + 1))
            .and_then(|e| e.completion)
            .is_some()
        {
            self.completed_prefix += 1;
        }
    }

    fn merge_and_sample(&mut self) {
        let mut total_q = 0u32;
        let mut max_q = 0u32;
        let mut total_c = 0u32;
        for u in 0..self.nodes.len() {
            let node = &mut self.nodes[u];
            let staged = std::mem::take(&mut node.staged);
            for p in staged {
                node.enqueue(p);
            }
            let qlen = node.q.len() as u32;
            total_q += qlen;
            total_c += node.cbuf.len() as u32;
            max_q = max_q.max(qlen);
            if qlen > self.max_queue_per_node[u] {
                self.max_queue_per_node[u] = qlen;
            }
        }
        self.total_q_series.push(total_q);
        self.total_qc_series.push(total_q + total_c);
        self.max_q_series.push(max_q);
    }

    /// Structural conservation check: for every generated-but-incomplete
    /// round, the operand indices covered by its live packets must be exactly
    /// the set of operands that have appeared, each covered once.
    pub fn check_leaf_cover(&self) -> Result<(), String> {
        let k = self.tree.k();
        let mut cover: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
        let mut record = |p: &Packet| {
            let counts = cover.entry(p.round).or_insert_with(|| vec![0; k]);
            for &op in self.tree.leaf_set(p.id) {
                counts[op - 1] += 1;
            }
        };
        for node in &self.nodes {
            node.q.iter().for_each(&mut record);
            node.staged.iter().for_each(&mut record);
            node.cbuf.values().for_each(&mut record);
        }
        for (&round, ev) in &self.round_events {
            if ev.completion.is_some() {
                if let Some(counts) = cover.get(&round) {
                    if counts.iter().any(|&c| c > 0) {
                        return Err(format!(
                            "round {round} completed but packets remain: {counts:?}"
                        ));
                    }
                }
                continue;
            }
            let empty = vec![0u32; k];
            let counts = cover.get(&round).unwrap_or(&empty);
            for op in 1..=k {
                let appeared = ev.appearance[op - 1].is_some();
                let covered = counts[op - 1];
                if appeared && covered != 1 {
                    return Err(format!(
                        "round {round}: operand {op} appeared but is covered {covered} times"
                    ));
                }
                if !appeared && covered != 0 {
                    return Err(format!(
                        "round {round}: operand {op} never appeared but is covered"
                    ));
                }
            }
        }
        for (round, counts) in &cover {
            if !self.round_events.contains_key(round) {
                return Err(format!("packets exist for unrecorded round {round}: {counts:?}"));
            }
        }
        Ok(())
    }
}
