//! Sum-rate maximization without per-user total budgets.
//!
//! Without a total budget each user either leaves a subcarrier idle or runs
//! it at full power, so the problem is a 0/1 assignment of subcarriers to
//! users. It is cast as a Hitchcock transportation problem: every user ships
//! `N` units, every subcarrier absorbs one unit, and a dummy terminal absorbs
//! the remaining `(K-1)N`. Costs are `c_bar - w_k log2(1 + alpha P / eta)`,
//! so minimum cost is maximum weighted rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{OfdmaInstance, PowerAllocation, SolvedAllocation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitchcockInstance {
    pub supplies: Vec<u64>,
    pub demands: Vec<u64>,
    /// `K x (N+1)`; the last column is the dummy terminal.
    pub cost: Vec<Vec<f64>>,
    pub c_bar: f64,
}

/// Integral optimal flow and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportFlow {
    pub flow: Vec<Vec<u64>>,
    pub cost: f64,
}

fn check_weights(inst: &OfdmaInstance, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0; inst.num_users]),
        Some(w) if w.len() != inst.num_users => Err(Error::DimensionMismatch {
            what: "weights",
            expected: inst.num_users,
            found: w.len(),
        }),
        Some(w) => {
            if let Some((k, x)) = w.iter().enumerate().find(|(_, x)| !(**x >= 0.0 && x.is_finite())) {
                return Err(Error::InvalidWeights(format!(
                    "weight {k} is {x}, expected a finite value >= 0"
                )));
            }
            Ok(w.to_vec())
        }
    }
}

/// Build the transportation instance for a (weighted) sum-rate problem.
pub fn build_hitchcock(inst: &OfdmaInstance, weights: Option<&[f64]>) -> Result<HitchcockInstance> {
    inst.validate()?;
    let w = check_weights(inst, weights)?;
    let (k, n) = (inst.num_users, inst.num_subcarriers);
    let gains: Vec<Vec<f64>> = (0..k)
        .map(|u| (0..n).map(|s| w[u] * inst.full_power_rate(u, s)).collect())
        .collect();
    let c_bar = gains.iter().flatten().copied().fold(0.0, f64::max);
    let cost = gains
        .iter()
        .map(|row| {
            let mut c: Vec<f64> = row.iter().map(|g| c_bar - g).collect();
            c.push(0.0);
            c
        })
        .collect();
    let mut demands = vec![1u64; n];
    demands.push((k as u64 - 1) * n as u64);
    Ok(HitchcockInstance {
        supplies: vec![n as u64; k],
        demands,
        cost,
        c_bar,
    })
}

/// Minimum-cost integral flow by successive shortest paths.
///
/// Paths are found with Bellman-Ford on the residual graph, so negative
/// residual costs need no potentials. Every augmentation pushes an integer
/// bottleneck, which keeps the flow integral.
pub fn solve_transportation(h: &HitchcockInstance) -> Result<TransportFlow> {
    let supply: u64 = h.supplies.iter().sum();
    let demand: u64 = h.demands.iter().sum();
    if supply != demand {
        return Err(Error::Unbalanced { supply, demand });
    }
    let (k, m) = (h.supplies.len(), h.demands.len());
    if h.cost.len() != k {
        return Err(Error::DimensionMismatch {
            what: "cost rows",
            expected: k,
            found: h.cost.len(),
        });
    }
    if let Some(row) = h.cost.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch {
            what: "cost columns",
            expected: m,
            found: row.len(),
        });
    }

    // Nodes: source, K suppliers, M consumers, sink.
    let (src, sink) = (0, k + m + 1);
    let mut g = Graph::new(k + m + 2);
    for (i, &a) in h.supplies.iter().enumerate() {
        g.add_edge(src, 1 + i, a, 0.0);
    }
    let mut flow_edges = vec![vec![0usize; m]; k];
    for i in 0..k {
        for j in 0..m {
            flow_edges[i][j] = g.add_edge(1 + i, 1 + k + j, u64::MAX, h.cost[i][j]);
        }
    }
    for (j, &d) in h.demands.iter().enumerate() {
        g.add_edge(1 + k + j, sink, d, 0.0);
    }

    let mut shipped = 0u64;
    while shipped < supply {
        let Some((prev, _)) = g.shortest_path(src, sink) else {
            break;
        };
        let mut push = u64::MAX;
        let mut v = sink;
        while v != src {
            let e = prev[v];
            push = push.min(g.edges[e].cap);
            v = g.edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != src {
            let e = prev[v];
            g.edges[e].cap -= push;
            g.edges[e ^ 1].cap += push;
            v = g.edges[e ^ 1].to;
        }
        shipped += push;
    }
    debug_assert_eq!(shipped, supply, "complete bipartite network always saturates");

    let flow: Vec<Vec<u64>> = flow_edges
        .iter()
        .map(|row| row.iter().map(|&e| g.edges[e ^ 1].cap).collect())
        .collect();
    let cost = flow
        .iter()
        .zip(&h.cost)
        .map(|(f, c)| f.iter().zip(c).map(|(&x, &y)| x as f64 * y).sum::<f64>())
        .sum();
    Ok(TransportFlow { flow, cost })
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: usize,
    cap: u64,
    cost: f64,
}

struct Graph {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl Graph {
    fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    fn shortest_path(&self, src: usize, sink: usize) -> Option<(Vec<usize>, f64)> {
        const IMPROVE: f64 = 1e-12;
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        dist[src] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &self.adj[u] {
                    let edge = self.edges[e];
                    if edge.cap == 0 {
                        continue;
                    }
                    let nd = dist[u] + edge.cost;
                    if nd < dist[edge.to] - IMPROVE {
                        dist[edge.to] = nd;
                        prev[edge.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist[sink].is_finite().then(|| (prev, dist[sink]))
    }
}

/// Optimal (weighted) sum-rate allocation when only per-subcarrier budgets
/// apply. `value` is `sum_k w_k R_k`, with unit weights when none are given.
pub fn max_sum_rate_no_total_budget(
    inst: &OfdmaInstance,
    weights: Option<&[f64]>,
) -> Result<SolvedAllocation> {
    let h = build_hitchcock(inst, weights)?;
    let (k, n) = (inst.num_users, inst.num_subcarriers);
    let mut alloc = PowerAllocation::zeros(k, n);
    if h.c_bar == 0.0 {
        return Ok(SolvedAllocation { alloc, value: 0.0 });
    }
    let sol = solve_transportation(&h)?;
    for u in 0..k {
        for s in 0..n {
            if sol.flow[u][s] > 0 {
                alloc.power[u][s] = inst.subcarrier_budget[u][s];
            }
        }
    }
    let w = check_weights(inst, weights)?;
    let value = (0..k)
        .map(|u| {
            let rate: f64 = (0..n)
                .filter(|&s| alloc.power[u][s] > 0.0)
                .map(|s| inst.full_power_rate(u, s))
                .sum();
            w[u] * rate
        })
        .sum();
    Ok(SolvedAllocation { alloc, value })
}
