//! Deterministic augmenting max-flow (Dinic) generic over the scalar type,
//! plus the market-network flow operations: plain maximum money flow and the
//! feasibility check for per-agent earning lower bounds. Arc order is fixed
//! by insertion so runs are reproducible.

use crate::mpb::MarketNetwork;
use crate::scalar::{total, Scalar};

struct Arc<T> {
    to: usize,
    cap: T,
    flow: T,
}

pub struct FlowNet<T> {
    arcs: Vec<Arc<T>>,
    adj: Vec<Vec<usize>>,
    source: usize,
    sink: usize,
    level: Vec<usize>,
    cursor: Vec<usize>,
}

impl<T: Scalar> FlowNet<T> {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        FlowNet {
            arcs: Vec::new(),
            adj: vec![Vec::new(); nodes],
            source,
            sink,
            level: vec![usize::MAX; nodes],
            cursor: vec![0; nodes],
        }
    }

    /// Returns the forward arc id; the reverse arc is `id ^ 1`.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: T) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc {
            to,
            cap,
            flow: T::zero(),
        });
        self.arcs.push(Arc {
            to: from,
            cap: T::zero(),
            flow: T::zero(),
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    fn residual(&self, id: usize) -> T {
        self.arcs[id].cap.clone() - self.arcs[id].flow.clone()
    }

    fn usable(&self, id: usize) -> bool {
        self.residual(id) > T::flow_eps()
    }

    fn bfs(&mut self) -> bool {
        self.level.fill(usize::MAX);
        self.level[self.source] = 0;
        let mut queue = std::collections::VecDeque::from([self.source]);
        while let Some(v) = queue.pop_front() {
            for &id in &self.adj[v] {
                let to = self.arcs[id].to;
                if self.level[to] == usize::MAX && self.usable(id) {
                    self.level[to] = self.level[v] + 1;
                    queue.push_back(to);
                }
            }
        }
        self.level[self.sink] != usize::MAX
    }

    fn dfs(&mut self, v: usize, budget: T) -> T {
        if v == self.sink {
            return budget;
        }
        while self.cursor[v] < self.adj[v].len() {
            let id = self.adj[v][self.cursor[v]];
            let to = self.arcs[id].to;
            if self.level[to] == self.level[v] + 1 && self.usable(id) {
                let room = self.residual(id);
                let pushed = self.dfs(to, if budget < room { budget.clone() } else { room });
                if pushed > T::flow_eps() {
                    self.arcs[id].flow = self.arcs[id].flow.clone() + pushed.clone();
                    self.arcs[id ^ 1].flow = self.arcs[id ^ 1].flow.clone() - pushed.clone();
                    return pushed;
                }
            }
            self.cursor[v] += 1;
        }
        T::zero()
    }

    pub fn run(&mut self) -> T {
        let big = self.big();
        let mut value = T::zero();
        while self.bfs() {
            self.cursor.fill(0);
            loop {
                let pushed = self.dfs(self.source, big.clone());
                if pushed <= T::flow_eps() {
                    break;
                }
                value = value + pushed;
            }
        }
        value
    }

    fn big(&self) -> T {
        let mut b = T::one();
        for a in &self.arcs {
            if a.cap > T::zero() {
                b = b + a.cap.clone();
            }
        }
        b
    }

    pub fn flow_on(&self, id: usize) -> T {
        self.arcs[id].flow.clone()
    }

    /// Nodes reachable from the source in the residual graph; after a
    /// max-flow run this separates the minimal source side of a min cut.
    pub fn residual_reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[self.source] = true;
        let mut stack = vec![self.source];
        while let Some(v) = stack.pop() {
            for &id in &self.adj[v] {
                let to = self.arcs[id].to;
                if !seen[to] && self.usable(id) {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen
    }
}

/// A feasible money flow on a market network: f[i][j] is money agent i earns
/// from chore j; earnings are the row sums (the paper's outflows).
#[derive(Clone, Debug, PartialEq)]
pub struct MoneyFlow<T> {
    pub flow: Vec<Vec<T>>,
    pub earnings: Vec<T>,
}

impl<T: Scalar> MoneyFlow<T> {
    pub fn from_matrix(flow: Vec<Vec<T>>) -> Self {
        let earnings = flow.iter().map(|row| total(row.iter().cloned())).collect();
        MoneyFlow { flow, earnings }
    }

    /// The allocation carried by this flow: x_ij = f_ij / p_j.
    pub fn allocation(&self, prices: &[T]) -> Vec<Vec<T>> {
        self.flow
            .iter()
            .map(|row| {
                row.iter()
                    .zip(prices)
                    .map(|(f, p)| f.clone() / p.clone())
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MaxFlowOutcome<T> {
    Flow(MoneyFlow<T>),
    Infeasible,
}

/// Maximum money flow in the network; with `lower_bounds` it instead decides
/// whether all chores can be saturated while each agent earns at least its
/// bound, returning such a flow when one exists. Infeasibility is a value.
pub fn max_flow<T: Scalar>(
    network: &MarketNetwork<T>,
    lower_bounds: Option<&[T]>,
) -> MaxFlowOutcome<T> {
    let n = network.n_agents();
    let m = network.n_chores();
    match lower_bounds {
        None => {
            // s = 0, agents 1..=n, chores n+1..=n+m, t = n+m+1.
            let mut net = FlowNet::new(n + m + 2, 0, n + m + 1);
            let big = network.total_capacity() + T::one();
            let mut pair_arc = vec![vec![usize::MAX; m]; n];
            for i in 0..n {
                net.add_arc(0, 1 + i, big.clone());
                for &j in &network.mpb.agent_edges[i] {
                    pair_arc[i][j] = net.add_arc(1 + i, 1 + n + j, big.clone());
                }
            }
            for j in 0..m {
                net.add_arc(1 + n + j, n + m + 1, network.prices[j].clone());
            }
            net.run();
            let mut flow = vec![vec![T::zero(); m]; n];
            for i in 0..n {
                for j in 0..m {
                    if pair_arc[i][j] != usize::MAX {
                        flow[i][j] = net.flow_on(pair_arc[i][j]);
                    }
                }
            }
            MaxFlowOutcome::Flow(MoneyFlow::from_matrix(flow))
        }
        Some(lb) => {
            assert_eq!(lb.len(), n, "one lower bound per agent");
            // Every chore must be coverable at all.
            if network.mpb.chore_edges.iter().any(|e| e.is_empty()) {
                return MaxFlowOutcome::Infeasible;
            }
            let want = total(lb.iter().cloned());
            if want > network.total_capacity() + T::flow_eps() {
                return MaxFlowOutcome::Infeasible;
            }
            // Reversed orientation: chores ship money to agents, each agent
            // capped at its bound. Bounds are simultaneously reachable iff
            // the max flow saturates them all.
            let mut net = FlowNet::new(n + m + 2, 0, n + m + 1);
            let big = network.total_capacity() + T::one();
            let mut pair_arc = vec![vec![usize::MAX; m]; n];
            for j in 0..m {
                net.add_arc(0, 1 + j, network.prices[j].clone());
            }
            for i in 0..n {
                for &j in &network.mpb.agent_edges[i] {
                    pair_arc[i][j] = net.add_arc(1 + j, 1 + m + i, big.clone());
                }
                net.add_arc(1 + m + i, n + m + 1, lb[i].clone());
            }
            let slack = feasibility_slack(n, m, &network.total_capacity());
            let value = net.run();
            if want.clone() - value > slack {
                return MaxFlowOutcome::Infeasible;
            }
            let mut flow = vec![vec![T::zero(); m]; n];
            for i in 0..n {
                for j in 0..m {
                    if pair_arc[i][j] != usize::MAX {
                        flow[i][j] = net.flow_on(pair_arc[i][j]);
                    }
                }
            }
            // Push the remaining chore supply along first edges (agents are
            // uncapacitated above their bounds).
            for j in 0..m {
                let shipped = total((0..n).map(|i| flow[i][j].clone()));
                let rest = network.prices[j].clone() - shipped;
                if rest > T::zero() {
                    let i = network.mpb.chore_edges[j][0];
                    flow[i][j] = flow[i][j].clone() + rest;
                }
            }
            MaxFlowOutcome::Flow(MoneyFlow::from_matrix(flow))
        }
    }
}

/// Accumulated-rounding slack for feasibility comparisons; zero in exact mode.
pub fn feasibility_slack<T: Scalar>(n: usize, m: usize, scale: &T) -> T {
    T::flow_eps() * T::from_int((n + m + 2) as i64) * (T::one() + scale.clone())
}
