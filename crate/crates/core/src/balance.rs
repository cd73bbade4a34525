//! Balance-allocation: the feasible money flow saturating every chore that
//! maximizes the product of agent earnings, equivalently the flow whose
//! sorted earning vector is lexicographically maximum.
//!
//! Computed by water-filling recursion. Per level, the largest uniform lower
//! bound lambda feasible for all active agents equals the minimum of
//! p(N(U))/|U| over agent subsets U; a Newton iteration over min-cut ratios
//! locates it exactly (each infeasible probe snaps lambda to the exact ratio
//! of the certifying cut). The maximal tight set — the agents unreachable
//! from the source in the residual graph — is frozen at lambda and the
//! recursion continues on the remainder. Degenerate ties therefore resolve
//! to the largest tight set, whose members all earn exactly lambda in every
//! optimal flow.

use thiserror::Error;

use crate::instance::DisutilityMatrix;
use crate::maxflow::{feasibility_slack, FlowNet, MoneyFlow};
use crate::mpb::{mpb_structure, MpbError, MpbStructure};
use crate::scalar::{total, Scalar, Tol};

#[derive(Debug, Error, PartialEq)]
pub enum BalanceError {
    #[error(transparent)]
    Mpb(#[from] MpbError),
    #[error("chore {chore} has no MPB edge and cannot be saturated")]
    ChoreWithoutMpbEdge { chore: usize },
    #[error("agent {agent} has no finite disutility; earnings product is degenerate")]
    AgentWithoutFiniteRow { agent: usize },
    #[error("lambda iteration failed to converge")]
    Stalled,
}

#[derive(Clone, Debug)]
pub struct BalanceResult<T> {
    /// x_ij in units of chore; every column sums to 1.
    pub allocation: Vec<Vec<T>>,
    /// Money flow f_ij = x_ij p_j.
    pub money: MoneyFlow<T>,
    pub earnings: Vec<T>,
    /// Agents attaining the minimum earning (tolerance-aware in approximate mode).
    pub min_set: Vec<usize>,
}

struct Level<'a, T> {
    mpb: &'a MpbStructure<T>,
    prices: &'a [T],
    agents: Vec<usize>,
    chores: Vec<usize>,
}

impl<'a, T: Scalar> Level<'a, T> {
    /// Max flow in the bound-check network: chores ship money, each active
    /// agent is capped at lambda. Returns (value, agents unreachable from s).
    fn probe(&self, lambda: &T) -> (T, Vec<usize>) {
        let mc = self.chores.len();
        let na = self.agents.len();
        let mut chore_pos = vec![usize::MAX; self.prices.len()];
        for (k, &j) in self.chores.iter().enumerate() {
            chore_pos[j] = k;
        }
        let s = 0;
        let t = 1 + mc + na;
        let mut net = FlowNet::new(mc + na + 2, s, t);
        let big = total(self.chores.iter().map(|&j| self.prices[j].clone())) + T::one();
        for (k, &j) in self.chores.iter().enumerate() {
            net.add_arc(s, 1 + k, self.prices[j].clone());
        }
        for (a, &i) in self.agents.iter().enumerate() {
            for &j in &self.mpb.agent_edges[i] {
                if chore_pos[j] != usize::MAX {
                    net.add_arc(1 + chore_pos[j], 1 + mc + a, big.clone());
                }
            }
            net.add_arc(1 + mc + a, t, lambda.clone());
        }
        let value = net.run();
        let reach = net.residual_reachable();
        let tight: Vec<usize> = self
            .agents
            .iter()
            .enumerate()
            .filter(|(a, _)| !reach[1 + mc + a])
            .map(|(_, &i)| i)
            .collect();
        (value, tight)
    }

    /// Chores of this level adjacent to any agent of `set`.
    fn neighborhood(&self, set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for &j in &self.chores {
            if self.mpb.chore_edges[j].iter().any(|i| set.contains(i)) {
                out.push(j);
            }
        }
        out
    }

    fn money_of(&self, chores: &[usize]) -> T {
        total(chores.iter().map(|&j| self.prices[j].clone()))
    }
}

/// The optimal money flow maximizing the earnings product over allocations
/// supported on MPB edges, plus the low-earner set S.
pub fn balance_allocation<T: Scalar>(
    d: &DisutilityMatrix<T>,
    prices: &[T],
    tol: &Tol<T>,
) -> Result<BalanceResult<T>, BalanceError> {
    let mpb = mpb_structure(d, prices, tol)?;
    balance_on_structure(d.n(), &mpb, prices, tol)
}

/// Same, over a precomputed MPB structure.
pub fn balance_on_structure<T: Scalar>(
    n: usize,
    mpb: &MpbStructure<T>,
    prices: &[T],
    tol: &Tol<T>,
) -> Result<BalanceResult<T>, BalanceError> {
    let m = prices.len();
    for (j, edges) in mpb.chore_edges.iter().enumerate() {
        if edges.is_empty() {
            return Err(BalanceError::ChoreWithoutMpbEdge { chore: j });
        }
    }
    for (i, v) in mpb.mpb.iter().enumerate() {
        if v.is_none() {
            return Err(BalanceError::AgentWithoutFiniteRow { agent: i });
        }
    }

    let scale = total(prices.iter().cloned());
    let slack = feasibility_slack::<T>(n, m, &scale);
    let mut money = vec![vec![T::zero(); m]; n];
    let mut earnings = vec![T::zero(); n];
    let mut agents: Vec<usize> = (0..n).collect();
    let mut chores: Vec<usize> = (0..m).collect();
    let mut previous_lambda: Option<T> = None;

    while !agents.is_empty() {
        let level = Level {
            mpb,
            prices,
            agents: agents.clone(),
            chores: chores.clone(),
        };
        debug_assert!(!level.chores.is_empty(), "active agents imply active chores");

        // Newton iteration over cut ratios, starting at the average.
        let mut lambda = level.money_of(&level.chores) / T::from_int(level.agents.len() as i64);
        let tight: Vec<usize>;
        let mut rounds = 0usize;
        loop {
            rounds += 1;
            if rounds > 8 * (n + m) + 16 {
                return Err(BalanceError::Stalled);
            }
            let (value, cut) = level.probe(&lambda);
            let need = lambda.clone() * T::from_int(level.agents.len() as i64);
            if need - value <= slack {
                tight = if cut.is_empty() { level.agents.clone() } else { cut };
                break;
            }
            debug_assert!(!cut.is_empty(), "infeasible probe certifies a nonempty cut");
            if cut.is_empty() {
                return Err(BalanceError::Stalled);
            }
            let ratio = level.money_of(&level.neighborhood(&cut)) / T::from_int(cut.len() as i64);
            if ratio >= lambda {
                // No numeric progress; accept the cut as tight.
                tight = cut;
                break;
            }
            lambda = ratio;
        }

        // Lambdas strictly increase across levels.
        if let Some(prev) = &previous_lambda {
            debug_assert!(T::EXACT == false || lambda > *prev);
        }
        previous_lambda = Some(lambda.clone());

        let block = level.neighborhood(&tight);
        debug_assert!(!block.is_empty());

        // Transportation solve inside the frozen block: all block chores
        // saturate, every tight agent lands exactly on lambda.
        let mc = block.len();
        let na = tight.len();
        let mut chore_pos = vec![usize::MAX; m];
        for (k, &j) in block.iter().enumerate() {
            chore_pos[j] = k;
        }
        let t_node = 1 + mc + na;
        let mut net = FlowNet::new(mc + na + 2, 0, t_node);
        let big = level.money_of(&block) + T::one();
        let mut pair_arc: Vec<Vec<usize>> = vec![Vec::new(); na];
        for (k, &j) in block.iter().enumerate() {
            net.add_arc(0, 1 + k, prices[j].clone());
        }
        for (a, &i) in tight.iter().enumerate() {
            for &j in &mpb.agent_edges[i] {
                if chore_pos[j] != usize::MAX {
                    let id = net.add_arc(1 + chore_pos[j], 1 + mc + a, big.clone());
                    pair_arc[a].push(id);
                }
            }
            net.add_arc(1 + mc + a, t_node, lambda.clone());
        }
        let shipped = net.run();
        debug_assert!(level.money_of(&block) - shipped.clone() <= slack);
        let _ = shipped;
        for (a, &i) in tight.iter().enumerate() {
            let mut arc_iter = pair_arc[a].iter();
            for &j in &mpb.agent_edges[i] {
                if chore_pos[j] != usize::MAX {
                    let id = *arc_iter.next().expect("one arc per block edge");
                    money[i][j] = net.flow_on(id);
                }
            }
            earnings[i] = total(money[i].iter().cloned());
        }

        agents.retain(|a| !tight.contains(a));
        chores.retain(|c| !block.contains(c));
    }

    let min = earnings
        .iter()
        .cloned()
        .reduce(|a, b| if b < a { b } else { a })
        .expect("nonempty earnings");
    let min_set: Vec<usize> = (0..n).filter(|&i| tol.in_min_set(&earnings[i], &min)).collect();
    let allocation = money
        .iter()
        .map(|row| {
            row.iter()
                .zip(prices)
                .map(|(f, p)| f.clone() / p.clone())
                .collect()
        })
        .collect();
    Ok(BalanceResult {
        allocation,
        money: MoneyFlow {
            flow: money,
            earnings: earnings.clone(),
        },
        earnings,
        min_set,
    })
}

/// KKT certificate for the product-maximal flow: whenever agents i and i'
/// are both MPB-adjacent to a chore j and f_ij > 0, either their earnings
/// agree or i is strictly poorer and i' carries no flow on j.
pub fn check_local_balance<T: Scalar>(
    flow: &MoneyFlow<T>,
    mpb: &MpbStructure<T>,
    tol: &Tol<T>,
) -> bool {
    let eps = T::flow_eps();
    for (j, adjacent) in mpb.chore_edges.iter().enumerate() {
        for &i in adjacent {
            if flow.flow[i][j] <= eps {
                continue;
            }
            for &other in adjacent {
                if other == i {
                    continue;
                }
                let ei = &flow.earnings[i];
                let eo = &flow.earnings[other];
                if tol.eq_abs(ei, eo) {
                    continue;
                }
                if ei < eo && flow.flow[other][j] <= eps {
                    continue;
                }
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::DisutilityMatrix;
    use crate::maxflow::{max_flow, MaxFlowOutcome};
    use crate::mpb::build_market_network;
    use crate::scalar::Rat;

    fn matrix(rows: Vec<Vec<i64>>) -> DisutilityMatrix<Rat> {
        DisutilityMatrix::from_options(
            rows.into_iter()
                .map(|r| r.into_iter().map(|v| Some(Rat::from_int(v))).collect())
                .collect(),
        )
        .unwrap()
    }

    fn prices(v: Vec<(i64, i64)>) -> Vec<Rat> {
        v.into_iter().map(|(n, d)| Rat::ratio(n, d)).collect()
    }

    #[test]
    fn equal_split_on_shared_chores() {
        // d=[[1,2],[1,2]], p=(1,2): both agents on both chores, e=(3/2,3/2).
        let d = matrix(vec![vec![1, 2], vec![1, 2]]);
        let r = balance_allocation(&d, &prices(vec![(1, 1), (2, 1)]), &Tol::exact()).unwrap();
        assert_eq!(r.earnings, vec![Rat::ratio(3, 2), Rat::ratio(3, 2)]);
        assert_eq!(r.min_set, vec![0, 1]);
    }

    #[test]
    fn forced_low_earner() {
        // d=[[1,1,2],[2,2,1]], p=(1,1,1): c3 forced to agent 2, e=(2,1), S={2}.
        let d = matrix(vec![vec![1, 1, 2], vec![2, 2, 1]]);
        let r = balance_allocation(&d, &prices(vec![(1, 1), (1, 1), (1, 1)]), &Tol::exact()).unwrap();
        assert_eq!(r.earnings, vec![Rat::from_int(2), Rat::from_int(1)]);
        assert_eq!(r.min_set, vec![1]);
    }

    #[test]
    fn rebalanced_after_price_drop() {
        // Same instance at p=(1,1,1/2): agent 2 reaches everything, e=(5/4,5/4).
        let d = matrix(vec![vec![1, 1, 2], vec![2, 2, 1]]);
        let r = balance_allocation(&d, &prices(vec![(1, 1), (1, 1), (1, 2)]), &Tol::exact()).unwrap();
        assert_eq!(r.earnings, vec![Rat::ratio(5, 4), Rat::ratio(5, 4)]);
        assert_eq!(r.min_set, vec![0, 1]);
    }

    #[test]
    fn chores_always_saturated() {
        let d = matrix(vec![vec![1, 3, 2], vec![2, 1, 1], vec![1, 1, 4]]);
        let p = prices(vec![(1, 1), (1, 1), (1, 1)]);
        let r = balance_allocation(&d, &p, &Tol::exact()).unwrap();
        for j in 0..3 {
            let col = total((0..3).map(|i| r.allocation[i][j].clone()));
            assert_eq!(col, Rat::from_int(1));
        }
        let mpb = mpb_structure(&d, &p, &Tol::exact()).unwrap();
        assert!(check_local_balance(&r.money, &mpb, &Tol::exact()));
        // Support lies on MPB edges.
        for i in 0..3 {
            for j in 0..3 {
                if r.money.flow[i][j] > Rat::from_int(0) {
                    assert!(mpb.has_edge(i, j));
                }
            }
        }
    }

    #[test]
    fn min_earning_is_maximal() {
        // No feasible flow can push every agent strictly above min earnings.
        let d = matrix(vec![vec![1, 1, 2], vec![2, 2, 1]]);
        let p = prices(vec![(1, 1), (1, 1), (1, 1)]);
        let r = balance_allocation(&d, &p, &Tol::exact()).unwrap();
        let min = r.earnings.iter().cloned().reduce(|a, b| if b < a { b } else { a }).unwrap();
        let delta = Rat::ratio(1, 100);
        let bound = min + delta;
        let network = build_market_network(&d, &p, &Tol::exact()).unwrap();
        let lb = vec![bound.clone(), bound];
        assert_eq!(max_flow(&network, Some(&lb)), MaxFlowOutcome::Infeasible);
    }

    #[test]
    fn local_balance_detects_witness_pair() {
        // d=[[1,1],[1,1]], p=(1,1), flow e=(2,0): agent 2 shares an MPB chore
        // with a richer flow carrier.
        let d = matrix(vec![vec![1, 1], vec![1, 1]]);
        let p = prices(vec![(1, 1), (1, 1)]);
        let mpb = mpb_structure(&d, &p, &Tol::exact()).unwrap();
        let flow = MoneyFlow::from_matrix(vec![
            vec![Rat::from_int(1), Rat::from_int(1)],
            vec![Rat::from_int(0), Rat::from_int(0)],
        ]);
        assert!(!check_local_balance(&flow, &mpb, &Tol::exact()));
    }

    #[test]
    fn local_balance_vacuous_without_shared_chores() {
        let d = DisutilityMatrix::from_options(vec![
            vec![Some(Rat::from_int(1)), None],
            vec![None, Some(Rat::from_int(1))],
        ])
        .unwrap();
        let p = prices(vec![(1, 1), (2, 1)]);
        let mpb = mpb_structure(&d, &p, &Tol::exact()).unwrap();
        let flow = MoneyFlow::from_matrix(vec![
            vec![Rat::from_int(1), Rat::from_int(0)],
            vec![Rat::from_int(0), Rat::from_int(2)],
        ]);
        assert!(check_local_balance(&flow, &mpb, &Tol::exact()));
    }
}
