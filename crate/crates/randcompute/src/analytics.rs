//! Exact numerics for the transmission kernel: spectrum, stationary law,
//! hitting and mixing times, fundamental-matrix diagnostics, directed
//! min-cuts, degree statistics, and the closed-form rate and latency bounds
//! they feed.
//!
//! Everything here is deterministic dense linear algebra sized for desk-scale
//! graphs (n up to a couple of thousand); no sparse or iterative solvers.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{Graph, TransitionMatrix};

pub const DEFAULT_MIXING_EPS: f64 = 0.25;
const MAX_MIXING_STEPS: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("chain is periodic (bipartite support, no self-loops); add laziness to make these quantities finite")]
    PeriodicChain,
    #[error("total-variation distance still {tv} after {steps} steps (tolerance {eps})")]
    NoConvergence { steps: u64, eps: f64, tv: f64 },
    #[error("leading eigenvalue {0} departs from 1 beyond tolerance")]
    NotStochastic(f64),
    #[error("fundamental matrix is singular")]
    SingularFundamental,
    #[error("rate bounds need at least two operands")]
    DegenerateSchema,
    #[error("queueing correction {0} is >= 1: the latency bound diverges")]
    SaturatedCorrection(f64),
    #[error("{0}")]
    BadParameter(String),
}

/// Logarithm base used inside the bound formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[serde(rename = "log2")]
    Two,
    #[serde(rename = "ln")]
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }
}

/// Reversible stationary distribution: pi_u proportional to d_u / (1 - eps_u).
pub fn stationary(pm: &TransitionMatrix) -> Vec<f64> {
    let n = pm.n();
    let mut w: Vec<f64> = (0..n)
        .map(|u| pm.degrees()[u] as f64 / (1.0 - pm.self_loops()[u]))
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    debug_assert!({
        let worst = (0..n)
            .map(|v| {
                let col: f64 = (0..n).map(|u| w[u] * pm.get(u, v)).sum();
                (col - w[v]).abs()
            })
            .fold(0.0, f64::max);
        worst <= 1e-12
    });
    w
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkSpectrum {
    /// all eigenvalues, descending; the leading one is 1
    pub eigenvalues: Vec<f64>,
    pub lambda_2: f64,
    pub spectral_gap: f64,
}

/// Eigenvalues of the kernel via the symmetrizing similarity transform
/// diag(pi)^{1/2} P diag(pi)^{-1/2}.
pub fn spectrum(pm: &TransitionMatrix) -> Result<WalkSpectrum, AnalyticsError> {
    let n = pm.n();
    let pi = stationary(pm);
    let mut s = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            s[(u, v)] = (pi[u] / pi[v]).sqrt() * pm.get(u, v);
        }
    }
    // symmetric up to rounding; average to hand the solver an exact symmetric input
    let sym = (&s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).expect("real eigenvalues"));
    if (vals[0] - 1.0).abs() > 1e-9 {
        return Err(AnalyticsError::NotStochastic(vals[0]));
    }
    let lambda_2 = if n > 1 { vals[1] } else { 1.0 };
    Ok(WalkSpectrum {
        lambda_2,
        spectral_gap: 1.0 - lambda_2,
        eigenvalues: vals,
    })
}

/// Expected steps to first reach `target` from every start (0 at the target).
pub fn hitting_to(pm: &TransitionMatrix, target: usize) -> Vec<f64> {
    let n = pm.n();
    assert!(target < n);
    let others: Vec<usize> = (0..n).filter(|&u| u != target).collect();
    let m = others.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (i, &u) in others.iter().enumerate() {
        for (j, &v) in others.iter().enumerate() {
            a[(i, j)] = f64::from(i == j) - pm.get(u, v);
        }
    }
    let b = DVector::<f64>::from_element(m, 1.0);
    let h = a.lu().solve(&b).expect("connected chain: system is regular");
    let mut out = vec![0.0; n];
    for (i, &u) in others.iter().enumerate() {
        out[u] = h[i];
    }
    out
}

#[derive(Debug, Clone)]
pub struct HittingReport {
    /// expected[(x, y)] = expected steps from x to first reach y
    pub expected: DMatrix<f64>,
    pub t_hit: f64,
    /// (start, target) attaining t_hit (lexicographically first on ties)
    pub worst_pair: (usize, usize),
}

/// Worst-case pairwise hitting time, one linear solve per target.
pub fn hitting_times(pm: &TransitionMatrix) -> HittingReport {
    let n = pm.n();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|target| hitting_to(pm, target))
        .collect();
    let mut expected = DMatrix::<f64>::zeros(n, n);
    let mut t_hit = 0.0;
    let mut worst_pair = (0, 0);
    for y in 0..n {
        for x in 0..n {
            let v = cols[y][x];
            expected[(x, y)] = v;
            if v > t_hit + 1e-15 {
                t_hit = v;
                worst_pair = (x, y);
            }
        }
    }
    HittingReport {
        expected,
        t_hit,
        worst_pair,
    }
}

/// A connected reversible chain is aperiodic unless its support is bipartite
/// and no node has a self-loop.
pub fn is_aperiodic(pm: &TransitionMatrix) -> bool {
    if pm.self_loops().iter().any(|&e| e > 0.0) {
        return true;
    }
    let n = pm.n();
    // 2-colour the off-diagonal support
    let mut colour = vec![-1i8; n];
    let mut stack = vec![0usize];
    colour[0] = 0;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if v != u && pm.get(u, v) > 0.0 {
                if colour[v] < 0 {
                    colour[v] = 1 - colour[u];
                    stack.push(v);
                } else if colour[v] == colour[u] {
                    return true; // odd cycle
                }
            }
        }
    }
    false // bipartite and non-lazy
}

/// Smallest t with max_u TV(P^t[u,.], pi) <= eps, by iterated powering.
pub fn mixing_time(pm: &TransitionMatrix, eps: f64) -> Result<u64, AnalyticsError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(AnalyticsError::BadParameter(format!(
            "mixing tolerance {eps} outside (0, 1)"
        )));
    }
    if !is_aperiodic(pm) {
        return Err(AnalyticsError::PeriodicChain);
    }
    let pi = stationary(pm);
    let p = pm.dense();
    let mut power = p.clone();
    let mut tv = f64::INFINITY;
    for t in 1..=MAX_MIXING_STEPS {
        tv = worst_row_tv(&power, &pi);
        if tv <= eps {
            return Ok(t);
        }
        power *= p;
    }
    Err(AnalyticsError::NoConvergence {
        steps: MAX_MIXING_STEPS,
        eps,
        tv,
    })
}

fn worst_row_tv(power: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = pi.len();
    (0..n)
        .map(|u| 0.5 * (0..n).map(|v| (power[(u, v)] - pi[v]).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// P^t reconstructed from the eigendecomposition of the symmetrized kernel —
/// an independent route to the same matrix as repeated multiplication.
pub fn transition_power_eigen(pm: &TransitionMatrix, t: u64) -> DMatrix<f64> {
    let n = pm.n();
    let pi = stationary(pm);
    let mut s = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            s[(u, v)] = (pi[u] / pi[v]).sqrt() * pm.get(u, v);
        }
    }
    let sym = (&s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let q = &eig.eigenvectors;
    let mut out = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += eig.eigenvalues[j].powi(t as i32) * q[(u, j)] * q[(v, j)];
            }
            out[(u, v)] = acc * (pi[v] / pi[u]).sqrt();
        }
    }
    out
}

/// Diagonal of the deviation-from-stationarity series
/// Z_vv = sum_t (P^t[v,v] - pi_v), via the fundamental matrix
/// (I - P + 1 pi)^{-1}.
pub fn fundamental_zvv(pm: &TransitionMatrix) -> Result<Vec<f64>, AnalyticsError> {
    if !is_aperiodic(pm) {
        return Err(AnalyticsError::PeriodicChain);
    }
    let n = pm.n();
    let pi = stationary(pm);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            a[(u, v)] = f64::from(u == v) - pm.get(u, v) + pi[v];
        }
    }
    let inv = a
        .try_inverse()
        .ok_or(AnalyticsError::SingularFundamental)?;
    Ok((0..n).map(|v| inv[(v, v)] - pi[v]).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CutReport {
    /// min over non-sink nodes of the directed min-cut separating them from the sink
    pub delta: f64,
    /// per-node max-flow value into the sink (`None` at the sink itself)
    pub per_node: Vec<Option<f64>>,
    /// node attaining delta (smallest index on ties)
    pub bottleneck: usize,
}

const FLOW_EPS: f64 = 1e-12;

/// Edmonds-Karp max flow on the directed capacity graph c(u, v) = P(u, v).
pub fn max_flow(pm: &TransitionMatrix, source: usize, sink: usize) -> f64 {
    assert_ne!(source, sink);
    let n = pm.n();
    let mut residual = vec![vec![0.0f64; n]; n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                residual[u][v] = pm.get(u, v);
            }
        }
    }
    let mut flow = 0.0;
    let mut parent = vec![usize::MAX; n];
    loop {
        // BFS for the shortest augmenting path
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        parent[source] = source;
        let mut queue = std::collections::VecDeque::from([source]);
        'bfs: while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if parent[v] == usize::MAX && residual[u][v] > FLOW_EPS {
                    parent[v] = u;
                    if v == sink {
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            return flow;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while v != source {
            let u = parent[v];
            bottleneck = bottleneck.min(residual[u][v]);
            v = u;
        }
        let mut v = sink;
        while v != source {
            let u = parent[v];
            residual[u][v] -= bottleneck;
            residual[v][u] += bottleneck;
            v = u;
        }
        flow += bottleneck;
    }
}

/// Directed min-cut from every candidate start node to the sink.
pub fn min_mincut(pm: &TransitionMatrix, sink: usize) -> CutReport {
    let n = pm.n();
    assert!(sink < n);
    let per_node: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i != sink).then(|| max_flow(pm, i, sink)))
        .collect();
    let mut delta = f64::INFINITY;
    let mut bottleneck = 0;
    for (i, f) in per_node.iter().enumerate() {
        if let Some(f) = f {
            if *f < delta - 1e-15 {
                delta = *f;
                bottleneck = i;
            }
        }
    }
    CutReport {
        delta,
        per_node,
        bottleneck,
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Degree-variability ratio n * sum(d^2) / (2m)^2 as a reduced exact fraction.
pub fn nu_exact(g: &Graph) -> (u128, u128) {
    let sum_d2: u128 = (0..g.n()).map(|u| (g.degree(u) as u128).pow(2)).sum();
    let num = g.n() as u128 * sum_d2;
    let den = (2 * g.m() as u128).pow(2);
    let d = gcd_u128(num, den);
    (num / d, den / d)
}

pub fn nu(g: &Graph) -> f64 {
    let (num, den) = nu_exact(g);
    num as f64 / den as f64
}

/// Sum of squared degrees (exact integer).
pub fn degree_s2(g: &Graph) -> u128 {
    (0..g.n()).map(|u| (g.degree(u) as u128).pow(2)).sum()
}

/// Contractible-schedule length max{2, min{n/nu, log K}}.
pub fn l_star(g: &Graph, k: usize, base: LogBase) -> f64 {
    let n_over_nu = g.n() as f64 / nu(g);
    let log_k = if k >= 2 { base.log(k as f64) } else { 0.0 };
    n_over_nu.min(log_k).max(2.0)
}

/// Guaranteed stable rate: (1 - lambda_2) / (2 sqrt(3) (K-1)) * sqrt(d_min/d_max).
pub fn rate_lower(
    lambda_2: f64,
    k: usize,
    d_min: usize,
    d_max: usize,
) -> Result<f64, AnalyticsError> {
    if k < 2 {
        return Err(AnalyticsError::DegenerateSchema);
    }
    let ratio = (d_min as f64 / d_max as f64).sqrt();
    Ok((1.0 - lambda_2) / (2.0 * 3.0f64.sqrt() * (k - 1) as f64) * ratio)
}

#[derive(Debug, Clone, Copy)]
pub struct LatencyBoundInput {
    pub k: usize,
    pub h: u32,
    pub beta: f64,
    pub c_hat: f64,
    pub log_base: LogBase,
}

fn check_latency_input(inp: &LatencyBoundInput) -> Result<(), AnalyticsError> {
    if inp.k < 2 {
        return Err(AnalyticsError::DegenerateSchema);
    }
    if !(inp.beta > 0.0 && inp.beta <= 1.0) {
        return Err(AnalyticsError::BadParameter(format!(
            "rate {} outside (0, 1]",
            inp.beta
        )));
    }
    if inp.c_hat >= 1.0 {
        return Err(AnalyticsError::SaturatedCorrection(inp.c_hat));
    }
    if inp.c_hat < 0.0 {
        return Err(AnalyticsError::BadParameter(format!(
            "queueing correction {} negative",
            inp.c_hat
        )));
    }
    Ok(())
}

/// Pinned-combination latency bound:
/// alpha * log K * (1/beta + h * t_hit / (1 - c)).
pub fn fixed_latency_bound(
    inp: &LatencyBoundInput,
    t_hit: f64,
    alpha: f64,
) -> Result<f64, AnalyticsError> {
    check_latency_input(inp)?;
    let log_k = inp.log_base.log(inp.k as f64);
    Ok(alpha * log_k * (1.0 / inp.beta + inp.h as f64 * t_hit / (1.0 - inp.c_hat)))
}

/// Opportunistic-combination latency bound:
/// alpha_hat * log K * (1/beta + h * t_mix * (log^2 K + n/(nu log n)) / (1 - c)).
pub fn flexible_latency_bound(
    inp: &LatencyBoundInput,
    t_mix: u64,
    n: usize,
    nu: f64,
    alpha_hat: f64,
) -> Result<f64, AnalyticsError> {
    check_latency_input(inp)?;
    let log_k = inp.log_base.log(inp.k as f64);
    let log_n = inp.log_base.log(n as f64);
    let inner = log_k * log_k + n as f64 / (nu * log_n);
    Ok(alpha_hat * log_k * (1.0 / inp.beta + inp.h as f64 * t_mix as f64 * inner / (1.0 - inp.c_hat)))
}

/// Config-supplied constants appearing in the bound formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub alpha: f64,
    pub alpha_hat: f64,
    pub b: f64,
    pub big_d: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            alpha: 1.0,
            alpha_hat: 1.0,
            b: 1.0,
            big_d: 1.0,
        }
    }
}

/// A bound that may be degenerate (K < 2) or divergent (c >= 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Finite(f64),
    Infinite,
    Undefined,
}

impl BoundValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            BoundValue::Finite(x) => Some(*x),
            _ => None,
        }
    }
}

impl Serialize for BoundValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BoundValue::Finite(x) => s.serialize_f64(*x),
            BoundValue::Infinite => s.serialize_str("inf"),
            BoundValue::Undefined => s.serialize_str("undefined"),
        }
    }
}

fn latency_result_to_value(r: Result<f64, AnalyticsError>) -> BoundValue {
    match r {
        Ok(x) => BoundValue::Finite(x),
        Err(AnalyticsError::SaturatedCorrection(_)) => BoundValue::Infinite,
        Err(_) => BoundValue::Undefined,
    }
}

/// Inputs for a full bound report.
#[derive(Debug, Clone, Copy)]
pub struct BoundContext<'a> {
    pub graph: &'a Graph,
    pub k: usize,
    pub h: u32,
    pub sink: usize,
    pub beta: f64,
    pub c_hat: f64,
    pub constants: BoundConstants,
    pub log_base: LogBase,
    pub mixing_eps: f64,
}

/// Every bound and every ingredient, in one serializable bundle.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub h: u32,
    pub d_min: usize,
    pub d_max: usize,
    pub lambda_2: f64,
    pub spectral_gap: f64,
    pub rate_lower: Option<f64>,
    pub rate_upper: f64,
    pub cut_bottleneck: usize,
    /// true when rate_lower exceeds rate_upper beyond rounding — reported, not hidden
    pub sandwich_violated: bool,
    pub t_hit: f64,
    pub t_hit_worst_pair: (usize, usize),
    pub t_mix: Option<u64>,
    pub t_mix_note: Option<String>,
    pub nu: f64,
    pub l_star: f64,
    pub beta: f64,
    pub c_hat: f64,
    pub fixed_latency_bound: BoundValue,
    pub flexible_latency_bound: BoundValue,
    pub constants: BoundConstants,
    pub log_base: LogBase,
    pub mixing_eps: f64,
}

/// Compute the full report for one graph/schema/rate combination.
pub fn bound_report(ctx: &BoundContext) -> Result<BoundReport, AnalyticsError> {
    let g = ctx.graph;
    let pm = g.transition_matrix();
    let diag = g.diagnostics();
    let spec = spectrum(&pm)?;
    let hit = hitting_times(&pm);
    let cut = min_mincut(&pm, ctx.sink);
    let (t_mix, t_mix_note) = match mixing_time(&pm, ctx.mixing_eps) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let rate_lower_v = rate_lower(spec.lambda_2, ctx.k, diag.d_min, diag.d_max).ok();
    let sandwich_violated = rate_lower_v
        .map(|lo| lo > cut.delta + 1e-12)
        .unwrap_or(false);
    let nu_v = nu(g);
    let inp = LatencyBoundInput {
        k: ctx.k,
        h: ctx.h,
        beta: ctx.beta,
        c_hat: ctx.c_hat,
        log_base: ctx.log_base,
    };
    let fixed = latency_result_to_value(fixed_latency_bound(&inp, hit.t_hit, ctx.constants.alpha));
    let flexible = match t_mix {
        Some(t) => latency_result_to_value(flexible_latency_bound(
            &inp,
            t,
            g.n(),
            nu_v,
            ctx.constants.alpha_hat,
        )),
        None => BoundValue::Undefined,
    };
    Ok(BoundReport {
        n: g.n(),
        m: g.m(),
        k: ctx.k,
        h: ctx.h,
        d_min: diag.d_min,
        d_max: diag.d_max,
        lambda_2: spec.lambda_2,
        spectral_gap: spec.spectral_gap,
        rate_lower: rate_lower_v,
        rate_upper: cut.delta,
        cut_bottleneck: cut.bottleneck,
        sandwich_violated,
        t_hit: hit.t_hit,
        t_hit_worst_pair: hit.worst_pair,
        t_mix,
        t_mix_note,
        nu: nu_v,
        l_star: l_star(g, ctx.k, ctx.log_base),
        beta: ctx.beta,
        c_hat: ctx.c_hat,
        fixed_latency_bound: fixed,
        flexible_latency_bound: flexible,
        constants: ctx.constants,
        log_base: ctx.log_base,
        mixing_eps: ctx.mixing_eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build, TopologySpec};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn kernel(spec: &TopologySpec) -> TransitionMatrix {
        build(spec).unwrap().transition_matrix()
    }

    fn lazy_kernel(spec: &TopologySpec, eps: f64) -> TransitionMatrix {
        build(spec)
            .unwrap()
            .with_uniform_self_loop(eps)
            .unwrap()
            .transition_matrix()
    }

    #[test]
    fn lambda_two_closed_forms() {
        let p = kernel(&TopologySpec::Complete { n: 4 });
        assert_abs_diff_eq!(spectrum(&p).unwrap().lambda_2, -1.0 / 3.0, epsilon = 1e-9);

        let p = kernel(&TopologySpec::Complete { n: 16 });
        assert_abs_diff_eq!(spectrum(&p).unwrap().lambda_2, -1.0 / 15.0, epsilon = 1e-9);

        let p = kernel(&TopologySpec::Star { n: 17 });
        assert_abs_diff_eq!(spectrum(&p).unwrap().lambda_2, 0.0, epsilon = 1e-9);

        let p = kernel(&TopologySpec::Cycle { n: 16 });
        assert_abs_diff_eq!(
            spectrum(&p).unwrap().lambda_2,
            (2.0 * PI / 16.0).cos(),
            epsilon = 1e-9
        );

        let p = kernel(&TopologySpec::Cycle { n: 8 });
        assert_abs_diff_eq!(
            spectrum(&p).unwrap().lambda_2,
            (2.0 * PI / 8.0).cos(),
            epsilon = 1e-9
        );

        // a uniform self-loop maps every eigenvalue through eps + (1-eps)*lambda
        let p = lazy_kernel(&TopologySpec::Cycle { n: 16 }, 0.5);
        assert_abs_diff_eq!(
            spectrum(&p).unwrap().lambda_2,
            0.5 + 0.5 * (2.0 * PI / 16.0).cos(),
            epsilon = 1e-9
        );

        // hypercube on 2^d nodes: second eigenvalue 1 - 2/d
        let p = kernel(&TopologySpec::Hypercube { n: 16 });
        assert_abs_diff_eq!(spectrum(&p).unwrap().lambda_2, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn stationary_matches_degree_profile() {
        let p = kernel(&TopologySpec::Cycle { n: 4 });
        for &x in &stationary(&p) {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-12);
        }

        let p = kernel(&TopologySpec::Star { n: 5 });
        let pi = stationary(&p);
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-12);
        for &leaf in &pi[1..] {
            assert_abs_diff_eq!(leaf, 0.125, epsilon = 1e-12);
        }

        // a uniform self-loop leaves the stationary law unchanged
        let p = lazy_kernel(&TopologySpec::Star { n: 5 }, 0.2);
        let pi = stationary(&p);
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-12);

        let p = kernel(&TopologySpec::Complete { n: 4 });
        for &x in &stationary(&p) {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn hitting_time_closed_forms() {
        // complete graph: geometric with success 1/(n-1) from any start
        let rep = hitting_times(&kernel(&TopologySpec::Complete { n: 8 }));
        assert_abs_diff_eq!(rep.t_hit, 7.0, epsilon = 1e-9);
        for x in 0..8 {
            for y in 0..8 {
                let want = if x == y { 0.0 } else { 7.0 };
                assert_abs_diff_eq!(rep.expected[(x, y)], want, epsilon = 1e-9);
            }
        }

        // cycle: worst pair is antipodal, n^2/4 for even n, (n^2-1)/4 for odd
        let rep = hitting_times(&kernel(&TopologySpec::Cycle { n: 16 }));
        assert_abs_diff_eq!(rep.t_hit, 64.0, epsilon = 1e-9);
        let rep = hitting_times(&kernel(&TopologySpec::Cycle { n: 4 }));
        assert_abs_diff_eq!(rep.t_hit, 4.0, epsilon = 1e-9);
        let rep = hitting_times(&kernel(&TopologySpec::Cycle { n: 7 }));
        assert_abs_diff_eq!(rep.t_hit, 12.0, epsilon = 1e-9);

        // star: leaf -> other leaf = 1 + (2n - 3)
        let rep = hitting_times(&kernel(&TopologySpec::Star { n: 5 }));
        assert_abs_diff_eq!(rep.t_hit, 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.expected[(1, 0)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.expected[(0, 1)], 7.0, epsilon = 1e-9);
    }

    #[test]
    fn mixing_time_values_and_periodicity() {
        let p = kernel(&TopologySpec::Complete { n: 8 });
        assert_eq!(mixing_time(&p, 0.25).unwrap(), 1);

        // even cycle without laziness is periodic
        let p = kernel(&TopologySpec::Cycle { n: 4 });
        assert!(matches!(
            mixing_time(&p, 0.25),
            Err(AnalyticsError::PeriodicChain)
        ));
        let p = kernel(&TopologySpec::Cycle { n: 6 });
        assert!(matches!(
            mixing_time(&p, 0.25),
            Err(AnalyticsError::PeriodicChain)
        ));

        // laziness restores convergence
        let p = lazy_kernel(&TopologySpec::Cycle { n: 6 }, 0.1);
        let t = mixing_time(&p, 0.25).unwrap();
        assert!(t >= 1);

        // an odd cycle is aperiodic even without laziness
        let p = kernel(&TopologySpec::Cycle { n: 7 });
        assert!(mixing_time(&p, 0.25).is_ok());

        // two lazy nodes swapping with prob 1/2 mix in one step
        let p = lazy_kernel(&TopologySpec::Complete { n: 2 }, 0.5);
        assert_eq!(mixing_time(&p, 0.25).unwrap(), 1);
        // and the same graph without laziness is periodic
        let p = kernel(&TopologySpec::Complete { n: 2 });
        assert!(matches!(
            mixing_time(&p, 0.25),
            Err(AnalyticsError::PeriodicChain)
        ));
    }

    #[test]
    fn eigen_expansion_matches_repeated_multiplication() {
        let p = lazy_kernel(&TopologySpec::Cycle { n: 9 }, 0.3);
        let dense = p.dense().clone();
        let mut pow = dense.clone();
        for t in 1..=20u64 {
            let via_eigen = transition_power_eigen(&p, t);
            let diff = (&via_eigen - &pow).abs().max();
            assert!(diff <= 1e-9, "t={t}: max deviation {diff}");
            pow *= &dense;
        }
    }

    #[test]
    fn mixing_time_agrees_with_eigen_expansion_route() {
        // second implementation of the same search, using eigen-powers
        let p = lazy_kernel(&TopologySpec::Cycle { n: 8 }, 0.5);
        let pi = stationary(&p);
        let by_powering = mixing_time(&p, 0.25).unwrap();
        let mut by_eigen = None;
        for t in 1..10_000 {
            if worst_row_tv(&transition_power_eigen(&p, t), &pi) <= 0.25 {
                by_eigen = Some(t);
                break;
            }
        }
        assert_eq!(Some(by_powering), by_eigen);
    }

    #[test]
    fn fundamental_diagonal_worked_example() {
        // complete n=4: Z_vv = 9/16, E_pi(tau_v) = Z_vv / pi_v = 9/4,
        // and the spectral cap 1/(1 - lambda_2) = 3/4 holds
        let p = kernel(&TopologySpec::Complete { n: 4 });
        let z = fundamental_zvv(&p).unwrap();
        let pi = stationary(&p);
        let spec = spectrum(&p).unwrap();
        for v in 0..4 {
            assert_abs_diff_eq!(z[v], 9.0 / 16.0, epsilon = 1e-9);
            assert!(z[v] <= 1.0 / spec.spectral_gap + 1e-9);
            assert_abs_diff_eq!(z[v] / pi[v], 9.0 / 4.0, epsilon = 1e-9);
        }
        // cross-check against the hitting-time route: E_pi(tau_v) = sum_u pi_u E_u(tau_v)
        let hit = hitting_times(&p);
        for v in 0..4 {
            let from_hits: f64 = (0..4).map(|u| pi[u] * hit.expected[(u, v)]).sum();
            assert_abs_diff_eq!(from_hits, z[v] / pi[v], epsilon = 1e-8);
        }
    }

    #[test]
    fn fundamental_diagonal_checks_on_lazy_graphs() {
        let specs = [
            TopologySpec::Cycle { n: 11 },
            TopologySpec::Star { n: 9 },
            TopologySpec::Complete { n: 6 },
            TopologySpec::Hypercube { n: 16 },
            TopologySpec::Torus { n: 9, dim: 2 },
            TopologySpec::RandomRegular {
                n: 12,
                degree: 3,
                seed: 4,
            },
        ];
        for spec in &specs {
            let p = lazy_kernel(spec, 0.25);
            let z = fundamental_zvv(&p).unwrap();
            let pi = stationary(&p);
            let s = spectrum(&p).unwrap();
            let hit = hitting_times(&p);
            let n = p.n();
            for v in 0..n {
                assert!(z[v] >= -1e-12, "{spec:?}: Z_vv negative at {v}");
                assert!(
                    z[v] <= 1.0 / s.spectral_gap + 1e-9,
                    "{spec:?}: spectral cap violated at {v}"
                );
                let from_hits: f64 = (0..n).map(|u| pi[u] * hit.expected[(u, v)]).sum();
                assert_abs_diff_eq!(from_hits, z[v] / pi[v], epsilon = 1e-8);
            }
        }
        // bipartite non-lazy chain refuses
        let p = kernel(&TopologySpec::Cycle { n: 4 });
        assert!(matches!(
            fundamental_zvv(&p),
            Err(AnalyticsError::PeriodicChain)
        ));
    }

    /// Exhaustive directed cut enumeration for small n.
    fn brute_force_mincut(pm: &TransitionMatrix, source: usize, sink: usize) -> f64 {
        let n = pm.n();
        assert!(n <= 14);
        let free: Vec<usize> = (0..n).filter(|&u| u != source && u != sink).collect();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << free.len()) {
            let mut in_s = vec![false; n];
            in_s[source] = true;
            for (bit, &u) in free.iter().enumerate() {
                in_s[u] = mask & (1 << bit) != 0;
            }
            let mut cut = 0.0;
            for u in 0..n {
                if !in_s[u] {
                    continue;
                }
                for v in 0..n {
                    if u != v && !in_s[v] {
                        cut += pm.get(u, v);
                    }
                }
            }
            best = best.min(cut);
        }
        best
    }

    #[test]
    fn max_flow_frozen_values() {
        // star, sink at a leaf: every path funnels through the one edge into
        // the sink with capacity 1/(n-1)
        let p = kernel(&TopologySpec::Star { n: 5 });
        let cut = min_mincut(&p, 1);
        assert_abs_diff_eq!(cut.delta, 0.25, epsilon = 1e-10);

        // star, sink at the center: each leaf pushes its full unit edge
        let cut = min_mincut(&p, 0);
        assert_abs_diff_eq!(cut.delta, 1.0, epsilon = 1e-10);

        // cycle: two disjoint half-capacity paths from any node
        let p = kernel(&TopologySpec::Cycle { n: 6 });
        let cut = min_mincut(&p, 3);
        assert_abs_diff_eq!(cut.delta, 1.0, epsilon = 1e-10);

        // complete: direct edge plus n-2 relays, total exactly 1
        let p = kernel(&TopologySpec::Complete { n: 4 });
        assert_abs_diff_eq!(max_flow(&p, 0, 3), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn max_flow_matches_brute_force_enumeration() {
        let specs = [
            TopologySpec::Cycle { n: 7 },
            TopologySpec::Star { n: 8 },
            TopologySpec::Complete { n: 6 },
            TopologySpec::Hypercube { n: 8 },
            TopologySpec::RandomRegular {
                n: 10,
                degree: 3,
                seed: 11,
            },
            TopologySpec::RandomRegular {
                n: 12,
                degree: 4,
                seed: 7,
            },
            TopologySpec::RandomGeometric {
                n: 9,
                radius: 0.6,
                seed: 2,
            },
        ];
        for spec in &specs {
            let g = build(spec).unwrap();
            let p = g.transition_matrix();
            let n = g.n();
            for (s, t) in [(0, n - 1), (1, n / 2), (n - 1, 0)] {
                if s == t {
                    continue;
                }
                let ek = max_flow(&p, s, t);
                let brute = brute_force_mincut(&p, s, t);
                assert_abs_diff_eq!(ek, brute, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn degree_statistics_exact() {
        // regular graphs: nu = 1 exactly
        for spec in [
            TopologySpec::Cycle { n: 5 },
            TopologySpec::Cycle { n: 16 },
            TopologySpec::Complete { n: 16 },
            TopologySpec::Hypercube { n: 32 },
        ] {
            let g = build(&spec).unwrap();
            assert_eq!(nu_exact(&g), (1, 1), "{spec:?}");
        }

        // star on n nodes: nu = n^2 / (4 (n-1))
        for n in [5usize, 16, 17] {
            let g = build(&TopologySpec::Star { n }).unwrap();
            let n2 = (n * n) as u128;
            let den = (4 * (n - 1)) as u128;
            let d = gcd_u128(n2, den);
            assert_eq!(nu_exact(&g), (n2 / d, den / d), "star n={n}");
        }
        let g = build(&TopologySpec::Star { n: 16 }).unwrap();
        assert_eq!(nu_exact(&g), (64, 15));

        // sum of squared degrees equals (2m)^2 * nu / n as exact integers
        for spec in [
            TopologySpec::Cycle { n: 4 },
            TopologySpec::Star { n: 5 },
            TopologySpec::Complete { n: 4 },
            TopologySpec::Torus { n: 16, dim: 2 },
            TopologySpec::RandomGeometric {
                n: 20,
                radius: 0.45,
                seed: 3,
            },
        ] {
            let g = build(&spec).unwrap();
            let s2 = degree_s2(&g);
            let (num, den) = nu_exact(&g);
            let four_m2 = (2 * g.m() as u128).pow(2);
            // nu = n*s2/(2m)^2  <=>  s2 * den * n == num * (2m)^2 ... reduced:
            assert_eq!(
                g.n() as u128 * s2 * den,
                num * four_m2,
                "{spec:?}: degree identity"
            );
        }
        let g = build(&TopologySpec::Cycle { n: 4 }).unwrap();
        assert_eq!(degree_s2(&g), 16);
        let g = build(&TopologySpec::Star { n: 5 }).unwrap();
        assert_eq!(degree_s2(&g), 20);
        let g = build(&TopologySpec::Complete { n: 4 }).unwrap();
        assert_eq!(degree_s2(&g), 36);
    }

    #[test]
    fn schedule_length_examples() {
        let g = build(&TopologySpec::Cycle { n: 16 }).unwrap();
        assert_abs_diff_eq!(l_star(&g, 4, LogBase::Two), 2.0);
        assert_abs_diff_eq!(l_star(&g, 16, LogBase::Two), 4.0);
        // K=1 never pushes below the floor of 2
        assert_abs_diff_eq!(l_star(&g, 1, LogBase::Two), 2.0);
        // heavily skewed star: n/nu can bind instead
        let g = build(&TopologySpec::Star { n: 64 }).unwrap();
        let n_over_nu = 64.0 / nu(&g);
        assert!(n_over_nu < 6.0);
        assert_abs_diff_eq!(
            l_star(&g, 64, LogBase::Two),
            n_over_nu.max(2.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn rate_lower_bound_family_formulas() {
        let sqrt3 = 3.0f64.sqrt();
        for n in [8usize, 16] {
            for k in [2usize, 4] {
                let km1 = (k - 1) as f64;

                let p = kernel(&TopologySpec::Complete { n });
                let s = spectrum(&p).unwrap();
                let got = rate_lower(s.lambda_2, k, n - 1, n - 1).unwrap();
                let want = n as f64 / (2.0 * sqrt3 * (n as f64 - 1.0) * km1);
                assert!((got - want).abs() / want <= 1e-9, "complete n={n} k={k}");

                let p = kernel(&TopologySpec::Star { n });
                let s = spectrum(&p).unwrap();
                let got = rate_lower(s.lambda_2, k, 1, n - 1).unwrap();
                let want = 1.0 / (2.0 * sqrt3 * ((n - 1) as f64).sqrt() * km1);
                assert!((got - want).abs() / want <= 1e-9, "star n={n} k={k}");

                let p = kernel(&TopologySpec::Cycle { n });
                let s = spectrum(&p).unwrap();
                let got = rate_lower(s.lambda_2, k, 2, 2).unwrap();
                let want = (1.0 - (2.0 * PI / n as f64).cos()) / (2.0 * sqrt3 * km1);
                assert!((got - want).abs() / want <= 1e-9, "cycle n={n} k={k}");

                let p = kernel(&TopologySpec::Hypercube { n });
                let s = spectrum(&p).unwrap();
                let d = (n as f64).log2();
                let got = rate_lower(s.lambda_2, k, d as usize, d as usize).unwrap();
                let want = 1.0 / (sqrt3 * d * km1);
                assert!((got - want).abs() / want <= 1e-9, "hypercube n={n} k={k}");
            }
        }

        // frozen reference value
        let p = kernel(&TopologySpec::Complete { n: 4 });
        let s = spectrum(&p).unwrap();
        let got = rate_lower(s.lambda_2, 2, 3, 3).unwrap();
        assert_abs_diff_eq!(got, 4.0 / (6.0 * sqrt3), epsilon = 1e-9);

        // (K-1) scaling
        let lo2 = rate_lower(0.5, 2, 2, 2).unwrap();
        let lo3 = rate_lower(0.5, 3, 2, 2).unwrap();
        assert_abs_diff_eq!(lo3, lo2 / 2.0, epsilon = 1e-12);

        assert!(matches!(
            rate_lower(0.5, 1, 2, 2),
            Err(AnalyticsError::DegenerateSchema)
        ));
    }

    #[test]
    fn latency_bound_formulas() {
        let inp = LatencyBoundInput {
            k: 4,
            h: 2,
            beta: 0.1,
            c_hat: 0.5,
            log_base: LogBase::Two,
        };
        let b = fixed_latency_bound(&inp, 10.0, 1.0).unwrap();
        // log2(4) * (10 + 2*10/0.5) = 2 * 50 = 100
        assert_abs_diff_eq!(b, 100.0, epsilon = 1e-12);

        // doubling h doubles the second term only
        let mut inp2 = inp;
        inp2.h = 4;
        let b2 = fixed_latency_bound(&inp2, 10.0, 1.0).unwrap();
        assert_abs_diff_eq!(b2 - b, 2.0 * 40.0 * 2.0 / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b2, 2.0 * (10.0 + 80.0), epsilon = 1e-9);

        // saturated correction refuses
        let mut sat = inp;
        sat.c_hat = 1.0;
        assert!(matches!(
            fixed_latency_bound(&sat, 10.0, 1.0),
            Err(AnalyticsError::SaturatedCorrection(_))
        ));

        // flexible formula, hand-computed
        let flex = flexible_latency_bound(&inp, 3, 16, 1.0, 1.0).unwrap();
        // inner = log2(4)^2 + 16/(1*log2(16)) = 4 + 4 = 8
        // bound = 2 * (10 + 2*3*8/0.5) = 2 * (10 + 96) = 212
        assert_abs_diff_eq!(flex, 212.0, epsilon = 1e-12);

        assert!(matches!(
            fixed_latency_bound(
                &LatencyBoundInput {
                    k: 1,
                    ..inp
                },
                10.0,
                1.0
            ),
            Err(AnalyticsError::DegenerateSchema)
        ));
    }

    #[test]
    fn bound_report_is_complete_and_consistent() {
        let g = build(&TopologySpec::Complete { n: 4 }).unwrap();
        let ctx = BoundContext {
            graph: &g,
            k: 2,
            h: 1,
            sink: 0,
            beta: 0.1,
            c_hat: 0.2,
            constants: BoundConstants::default(),
            log_base: LogBase::Two,
            mixing_eps: DEFAULT_MIXING_EPS,
        };
        let rep = bound_report(&ctx).unwrap();
        assert_abs_diff_eq!(rep.lambda_2, -1.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.rate_lower.unwrap(), 4.0 / (6.0 * 3.0f64.sqrt()), epsilon = 1e-9);
        assert_abs_diff_eq!(rep.rate_upper, 1.0, epsilon = 1e-10);
        assert!(!rep.sandwich_violated);
        assert_abs_diff_eq!(rep.t_hit, 3.0, epsilon = 1e-9);
        assert_eq!(rep.t_mix, Some(1));
        assert!(rep.fixed_latency_bound.finite().is_some());
        assert!(rep.flexible_latency_bound.finite().is_some());

        // saturated correction surfaces as the explicit infinite marker
        let sat = BoundContext { c_hat: 1.0, ..ctx };
        let rep = bound_report(&sat).unwrap();
        assert_eq!(rep.fixed_latency_bound, BoundValue::Infinite);
        assert_eq!(rep.flexible_latency_bound, BoundValue::Infinite);

        // periodic graph: mixing-dependent entries degrade gracefully
        let g = build(&TopologySpec::Cycle { n: 4 }).unwrap();
        let rep = bound_report(&BoundContext { graph: &g, ..ctx }).unwrap();
        assert_eq!(rep.t_mix, None);
        assert!(rep.t_mix_note.is_some());
        assert_eq!(rep.flexible_latency_bound, BoundValue::Undefined);
        assert!(rep.fixed_latency_bound.finite().is_some());
    }
}
