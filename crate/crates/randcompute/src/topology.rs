//! Graph families and the per-slot transmission kernel.
//!
//! All graphs are finite, simple, undirected and connected, with dense node
//! ids `0..n`. The transmission kernel assigns each ordered pair the
//! probability that a sending node picks that neighbour in a slot: a node `u`
//! with optional self-loop weight `eps(u)` keeps the packet with probability
//! `eps(u)` and otherwise picks among its `d(u)` neighbours uniformly.
//!
//! Random families (regular via stub pairing, geometric on the unit square)
//! are seed-reproducible: the same spec yields a byte-identical canonical
//! edge list.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid topology parameter: {0}")]
    InvalidParameter(String),
    #[error("edge ({0}, {1}) listed more than once")]
    DuplicateEdge(usize, usize),
    #[error("self-loop edge at node {0} not allowed")]
    SelfLoopEdge(usize),
    #[error("edge ({u}, {v}) out of range for n = {n}")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("no connected instance found after {attempts} seeded attempts")]
    GenerationFailed { attempts: u32 },
    #[error("self-loop probability {0} outside [0, 1)")]
    BadSelfLoop(f64),
    #[error("edge list parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
}

/// Constructive description of a graph instance.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    /// Ring of `n >= 3` nodes.
    Cycle { n: usize },
    /// Hub node `0` joined to `n - 1` leaves.
    Star { n: usize },
    /// All pairs adjacent, `n >= 2`.
    Complete { n: usize },
    /// Bit-flip graph on `n = 2^m` nodes.
    Hypercube { n: usize },
    /// `dim`-dimensional wrap-around lattice with `side^dim = n`, `side >= 3`.
    Torus { n: usize, dim: u32 },
    /// Uniform random `degree`-regular graph via repeated stub pairing.
    RandomRegular { n: usize, degree: usize, seed: u64 },
    /// `n` uniform points in the unit square, joined when within `radius`.
    RandomGeometric { n: usize, radius: f64, seed: u64 },
    /// Explicit edge set over `0..n`.
    Explicit { n: usize, edges: Vec<(usize, usize)> },
}

/// Simple connected graph with dense ids and per-node self-loop weight.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    /// canonical form: `u < v`, lexicographically sorted
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    self_loop: Vec<f64>,
}

/// Summary facts about a built graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub n: usize,
    pub m: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub d_avg: f64,
    pub bipartite: bool,
}

impl Graph {
    /// Validate and canonicalise an explicit edge set.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::InvalidParameter(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        let mut canon: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(TopologyError::SelfLoopEdge(a));
            }
            if a >= n || b >= n {
                return Err(TopologyError::EdgeOutOfRange { u: a, v: b, n });
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(TopologyError::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &canon {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let g = Graph {
            n,
            edges: canon,
            adj,
            self_loop: vec![0.0; n],
        };
        if !g.is_connected() {
            return Err(TopologyError::Disconnected);
        }
        Ok(g)
    }

    /// Replace the self-loop weight on every node (`0 <= eps < 1`).
    pub fn with_uniform_self_loop(mut self, eps: f64) -> Result<Self, TopologyError> {
        if !(0.0..1.0).contains(&eps) {
            return Err(TopologyError::BadSelfLoop(eps));
        }
        self.self_loop = vec![eps; self.n];
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn self_loop(&self, u: usize) -> f64 {
        self.self_loop[u]
    }

    pub fn self_loops(&self) -> &[f64] {
        &self.self_loop
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Two-colourability via BFS.
    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![u8::MAX; self.n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        color[0] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if color[v] == u8::MAX {
                    color[v] = 1 - color[u];
                    queue.push_back(v);
                } else if color[v] == color[u] {
                    return false;
                }
            }
        }
        true
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let degs: Vec<usize> = (0..self.n).map(|u| self.degree(u)).collect();
        Diagnostics {
            n: self.n,
            m: self.m(),
            d_min: *degs.iter().min().expect("nonempty"),
            d_max: *degs.iter().max().expect("nonempty"),
            d_avg: 2.0 * self.m() as f64 / self.n as f64,
            bipartite: self.is_bipartite(),
        }
    }

    /// Dense per-slot transmission kernel induced by this graph.
    pub fn transition_matrix(&self) -> TransitionMatrix {
        let n = self.n;
        let mut p = DMatrix::zeros(n, n);
        for u in 0..n {
            let eps = self.self_loop[u];
            p[(u, u)] = eps;
            let w = (1.0 - eps) / self.degree(u) as f64;
            for &v in &self.adj[u] {
                p[(u, v)] = w;
            }
        }
        TransitionMatrix {
            dense: p,
            degrees: (0..n).map(|u| self.degree(u)).collect(),
            self_loop: self.self_loop.clone(),
        }
    }

    /// Canonical text form: `# n=<n> m=<m>` header then one `u v` line per edge.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("# n={} m={}\n", self.n, self.m());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// Parse the `u v` per line edge-list format (`#` starts a comment,
/// ids are 0-based and dense; node count is the largest id plus one).
pub fn parse_edge_list(text: &str) -> Result<Graph, TopologyError> {
    let mut edges = Vec::new();
    let mut max_id = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize, TopologyError> {
            tok.ok_or_else(|| TopologyError::ParseError {
                line: idx + 1,
                msg: "expected two node ids".into(),
            })?
            .parse::<usize>()
            .map_err(|e| TopologyError::ParseError {
                line: idx + 1,
                msg: e.to_string(),
            })
        };
        let u = parse(it.next())?;
        let v = parse(it.next())?;
        if it.next().is_some() {
            return Err(TopologyError::ParseError {
                line: idx + 1,
                msg: "trailing tokens after edge".into(),
            });
        }
        max_id = max_id.max(u).max(v);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(TopologyError::ParseError {
            line: 0,
            msg: "no edges found".into(),
        });
    }
    Graph::from_edges(max_id + 1, &edges)
}

/// Build a graph instance from its spec.
pub fn build(spec: &TopologySpec) -> Result<Graph, TopologyError> {
    match *spec {
        TopologySpec::Cycle { n } => {
            if n < 3 {
                return Err(TopologyError::InvalidParameter(format!(
                    "cycle needs n >= 3, got {n}"
                )));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(n, &edges)
        }
        TopologySpec::Star { n } => {
            if n < 2 {
                return Err(TopologyError::InvalidParameter(format!(
                    "star needs n >= 2, got {n}"
                )));
            }
            let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
            Graph::from_edges(n, &edges)
        }
        TopologySpec::Complete { n } => {
            if n < 2 {
                return Err(TopologyError::InvalidParameter(format!(
                    "complete graph needs n >= 2, got {n}"
                )));
            }
            let mut edges = Vec::with_capacity(n * (n - 1) / 2);
            for u in 0..n {
                for v in (u + 1)..n {
                    edges.push((u, v));
                }
            }
            Graph::from_edges(n, &edges)
        }
        TopologySpec::Hypercube { n } => {
            if n < 2 || !n.is_power_of_two() {
                return Err(TopologyError::InvalidParameter(format!(
                    "hypercube needs n = 2^m >= 2, got {n}"
                )));
            }
            let bits = n.trailing_zeros();
            let mut edges = Vec::new();
            for u in 0..n {
                for b in 0..bits {
                    let v = u ^ (1 << b);
                    if u < v {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, &edges)
        }
        TopologySpec::Torus { n, dim } => build_torus(n, dim),
        TopologySpec::RandomRegular { n, degree, seed } => build_random_regular(n, degree, seed),
        TopologySpec::RandomGeometric { n, radius, seed } => {
            build_random_geometric(n, radius, seed)
        }
        TopologySpec::Explicit { n, ref edges } => Graph::from_edges(n, edges),
    }
}

fn build_torus(n: usize, dim: u32) -> Result<Graph, TopologyError> {
    if dim == 0 {
        return Err(TopologyError::InvalidParameter("torus dim must be >= 1".into()));
    }
    // recover the side length: side^dim = n exactly
    let side = (n as f64).powf(1.0 / dim as f64).round() as usize;
    if side < 3 || side.pow(dim) != n {
        return Err(TopologyError::InvalidParameter(format!(
            "torus needs side^dim = n with side >= 3; n = {n}, dim = {dim}"
        )));
    }
    let coord = |mut id: usize| -> Vec<usize> {
        let mut c = Vec::with_capacity(dim as usize);
        for _ in 0..dim {
            c.push(id % side);
            id /= side;
        }
        c
    };
    let id_of = |c: &[usize]| -> usize {
        c.iter().rev().fold(0, |acc, &x| acc * side + x)
    };
    let mut edges = Vec::new();
    for u in 0..n {
        let c = coord(u);
        for axis in 0..dim as usize {
            let mut cc = c.clone();
            cc[axis] = (cc[axis] + 1) % side;
            let v = id_of(&cc);
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Graph::from_edges(n, &edges)
}

// Rejection sampling budget.  A degree-r pairing is simple with probability
// roughly exp(-(r^2-1)/4), about 2.4% at r = 4, so a three-digit cap still
// strands some seeds; 2000 attempts make that astronomically unlikely while
// keeping the per-seed result deterministic (first success wins).
const MAX_ATTEMPTS: u32 = 2000;

fn build_random_regular(n: usize, degree: usize, seed: u64) -> Result<Graph, TopologyError> {
    if degree < 2 || degree >= n {
        return Err(TopologyError::InvalidParameter(format!(
            "regular degree must satisfy 2 <= r < n; r = {degree}, n = {n}"
        )));
    }
    if n * degree % 2 != 0 {
        return Err(TopologyError::InvalidParameter(format!(
            "n * r must be even; n = {n}, r = {degree}"
        )));
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::split(seed, attempt as u64));
        let mut stubs: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat_n(u, degree)).collect();
        stubs.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * degree / 2);
        let mut simple = true;
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b {
                simple = false;
                break;
            }
            edges.push((a.min(b), a.max(b)));
        }
        if !simple {
            continue;
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        match Graph::from_edges(n, &edges) {
            Ok(g) => return Ok(g),
            Err(TopologyError::Disconnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(TopologyError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
    })
}

fn build_random_geometric(n: usize, radius: f64, seed: u64) -> Result<Graph, TopologyError> {
    if n < 2 {
        return Err(TopologyError::InvalidParameter(format!(
            "geometric graph needs n >= 2, got {n}"
        )));
    }
    if !(radius > 0.0) {
        return Err(TopologyError::InvalidParameter(format!(
            "geometric radius must be positive, got {radius}"
        )));
    }
    let r2 = radius * radius;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::split(seed, attempt as u64));
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
            .collect();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let dx = pts[u].0 - pts[v].0;
                let dy = pts[u].1 - pts[v].1;
                if dx * dx + dy * dy <= r2 {
                    edges.push((u, v));
                }
            }
        }
        match Graph::from_edges(n, &edges) {
            Ok(g) => return Ok(g),
            Err(TopologyError::Disconnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(TopologyError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
    })
}

/// Row-stochastic slot-transmission kernel over a graph.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    dense: DMatrix<f64>,
    degrees: Vec<usize>,
    self_loop: Vec<f64>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.dense.nrows()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.dense[(u, v)]
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn self_loops(&self) -> &[f64] {
        &self.self_loop
    }

    /// True when every off-diagonal support edge has its reverse present and
    /// no node keeps packets with probability 1.
    pub fn is_lazy(&self) -> bool {
        self.self_loop.iter().any(|&e| e > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_sums_ok(p: &TransitionMatrix) {
        for u in 0..p.n() {
            let s: f64 = (0..p.n()).map(|v| p.get(u, v)).sum();
            assert!((s - 1.0).abs() < 1e-12, "row {u} sums to {s}");
        }
    }

    #[test]
    fn cycle_structure() {
        let g = build(&TopologySpec::Cycle { n: 8 }).unwrap();
        assert_eq!(g.n(), 8);
        assert_eq!(g.m(), 8);
        let d = g.diagnostics();
        assert_eq!((d.d_min, d.d_max), (2, 2));
        assert!(d.bipartite); // even cycle
        assert!(!build(&TopologySpec::Cycle { n: 7 }).unwrap().is_bipartite());
        row_sums_ok(&g.transition_matrix());
    }

    #[test]
    fn star_structure_and_kernel() {
        let g = build(&TopologySpec::Star { n: 5 }).unwrap();
        assert_eq!(g.m(), 4);
        assert_eq!(g.degree(0), 4);
        assert_eq!(g.degree(3), 1);
        let p = g.transition_matrix();
        assert_eq!(p.get(0, 3), 0.25);
        assert_eq!(p.get(3, 0), 1.0);
        assert_eq!(p.get(3, 2), 0.0);
        row_sums_ok(&p);
    }

    #[test]
    fn star_with_self_loop_kernel() {
        let g = build(&TopologySpec::Star { n: 5 })
            .unwrap()
            .with_uniform_self_loop(0.5)
            .unwrap();
        let p = g.transition_matrix();
        assert_eq!(p.get(0, 0), 0.5);
        assert_eq!(p.get(0, 1), 0.125);
        assert_eq!(p.get(1, 0), 0.5);
        row_sums_ok(&p);
    }

    #[test]
    fn hypercube_edge_count_matches_bitflip_enumeration() {
        // oracle: every node has log2(n) bit-flip neighbours
        for n in [2usize, 4, 8, 16, 32] {
            let g = build(&TopologySpec::Hypercube { n }).unwrap();
            let bits = n.trailing_zeros() as usize;
            assert_eq!(g.m(), n * bits / 2);
            for u in 0..n {
                assert_eq!(g.degree(u), bits);
                for &v in g.neighbors(u) {
                    assert_eq!((u ^ v).count_ones(), 1);
                }
            }
            assert!(g.is_bipartite());
        }
        assert!(build(&TopologySpec::Hypercube { n: 12 }).is_err());
    }

    #[test]
    fn torus_4x4_is_4_regular() {
        let g = build(&TopologySpec::Torus { n: 16, dim: 2 }).unwrap();
        let d = g.diagnostics();
        assert_eq!((d.d_min, d.d_max, d.m), (4, 4, 32));
        // node 0 neighbours in a 4x4 wrap: +/-1 on each axis
        assert_eq!(g.neighbors(0), &[1, 3, 4, 12]);
        assert!(build(&TopologySpec::Torus { n: 8, dim: 2 }).is_err());
        assert!(build(&TopologySpec::Torus { n: 8, dim: 3 }).is_err()); // side 2 disallowed
    }

    #[test]
    fn torus_dim1_equals_cycle() {
        let t = build(&TopologySpec::Torus { n: 9, dim: 1 }).unwrap();
        let c = build(&TopologySpec::Cycle { n: 9 }).unwrap();
        assert_eq!(t.edges(), c.edges());
    }

    #[test]
    fn random_regular_is_regular_connected_and_reproducible() {
        let spec = TopologySpec::RandomRegular {
            n: 20,
            degree: 3,
            seed: 11,
        };
        let g1 = build(&spec).unwrap();
        let g2 = build(&spec).unwrap();
        assert_eq!(g1.to_edge_list_string(), g2.to_edge_list_string());
        for u in 0..g1.n() {
            assert_eq!(g1.degree(u), 3);
        }
        let other = build(&TopologySpec::RandomRegular {
            n: 20,
            degree: 3,
            seed: 12,
        })
        .unwrap();
        assert_ne!(g1.to_edge_list_string(), other.to_edge_list_string());
        assert!(build(&TopologySpec::RandomRegular {
            n: 7,
            degree: 3,
            seed: 1
        })
        .is_err()); // odd stub count
    }

    #[test]
    fn random_geometric_connects_or_fails_cleanly() {
        let g = build(&TopologySpec::RandomGeometric {
            n: 30,
            radius: 0.35,
            seed: 5,
        })
        .unwrap();
        assert_eq!(g.n(), 30);
        let again = build(&TopologySpec::RandomGeometric {
            n: 30,
            radius: 0.35,
            seed: 5,
        })
        .unwrap();
        assert_eq!(g.to_edge_list_string(), again.to_edge_list_string());
        // radius too small to ever connect 30 points
        let err = build(&TopologySpec::RandomGeometric {
            n: 30,
            radius: 0.01,
            seed: 5,
        });
        assert!(matches!(err, Err(TopologyError::GenerationFailed { .. })));
    }

    #[test]
    fn explicit_rejects_bad_edge_sets() {
        assert!(matches!(
            Graph::from_edges(3, &[(0, 1), (1, 0), (1, 2)]),
            Err(TopologyError::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            Graph::from_edges(3, &[(0, 0), (1, 2)]),
            Err(TopologyError::SelfLoopEdge(0))
        ));
        assert!(matches!(
            Graph::from_edges(3, &[(0, 5)]),
            Err(TopologyError::EdgeOutOfRange { .. })
        ));
        // two components
        assert!(matches!(
            Graph::from_edges(4, &[(0, 1), (2, 3)]),
            Err(TopologyError::Disconnected)
        ));
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = build(&TopologySpec::Torus { n: 27, dim: 3 }).unwrap();
        let text = g.to_edge_list_string();
        let back = parse_edge_list(&text).unwrap();
        assert_eq!(back.to_edge_list_string(), text);
    }

    #[test]
    fn edge_list_parse_errors_carry_line_numbers() {
        let bad = "0 1\n# fine\n2 x\n";
        match parse_edge_list(bad) {
            Err(TopologyError::ParseError { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let path = "0 1\n1 2\n2 3\n";
        assert_eq!(parse_edge_list(path).unwrap().n(), 4);
    }

    #[test]
    fn self_loop_validation() {
        let g = build(&TopologySpec::Cycle { n: 4 }).unwrap();
        assert!(g.clone().with_uniform_self_loop(1.0).is_err());
        assert!(g.clone().with_uniform_self_loop(-0.1).is_err());
        assert!(g.with_uniform_self_loop(0.999).is_ok());
    }
}
