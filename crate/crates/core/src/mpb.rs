//! Minimum-pain-per-buck structure at a price vector, and the money-flow
//! network built on it: agents are uncapacitated sources, each MPB pair is an
//! arc, each chore forwards exactly its price to the sink.

use thiserror::Error;

use crate::instance::{DisutilityMatrix, Entry};
use crate::scalar::{Scalar, Tol};

#[derive(Debug, Error, PartialEq)]
pub enum MpbError {
    #[error("price of chore {chore} is zero or negative")]
    NonPositivePrice { chore: usize },
    #[error("price vector length {got} does not match chore count {expected}")]
    PriceLength { expected: usize, got: usize },
}

/// Per-agent minimum of d_ij / p_j and the pairs attaining it. All minimizing
/// chores become edges; ties are never broken arbitrarily.
#[derive(Clone, Debug)]
pub struct MpbStructure<T> {
    /// `None` for agents whose whole row is infinite.
    pub mpb: Vec<Option<T>>,
    /// Chores attaining the minimum, per agent, ascending.
    pub agent_edges: Vec<Vec<usize>>,
    /// Agents attaining their minimum at this chore, ascending.
    pub chore_edges: Vec<Vec<usize>>,
}

impl<T: Scalar> MpbStructure<T> {
    pub fn has_edge(&self, agent: usize, chore: usize) -> bool {
        self.agent_edges[agent].binary_search(&chore).is_ok()
    }

    /// Chores MPB-adjacent to any agent in `s` (the in-demand set Γ(S)).
    pub fn gamma(&self, s: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = s
            .iter()
            .flat_map(|&i| self.agent_edges[i].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// In approximate mode an edge is included iff d_ij/p_j <= (1+tau)·MPB_i;
/// the relative form keeps the structure scale invariant.
pub fn mpb_structure<T: Scalar>(
    d: &DisutilityMatrix<T>,
    prices: &[T],
    tol: &Tol<T>,
) -> Result<MpbStructure<T>, MpbError> {
    if prices.len() != d.m() {
        return Err(MpbError::PriceLength {
            expected: d.m(),
            got: prices.len(),
        });
    }
    for (j, p) in prices.iter().enumerate() {
        if *p <= T::zero() {
            return Err(MpbError::NonPositivePrice { chore: j });
        }
    }
    let mut mpb = Vec::with_capacity(d.n());
    let mut agent_edges = Vec::with_capacity(d.n());
    let mut chore_edges = vec![Vec::new(); d.m()];
    for i in 0..d.n() {
        let mut min: Option<T> = None;
        let mut ratios: Vec<Option<T>> = Vec::with_capacity(d.m());
        for j in 0..d.m() {
            let ratio = match d.entry(i, j) {
                Entry::Fin(v) => Some(v.clone() / prices[j].clone()),
                Entry::Inf => None,
            };
            if let Some(r) = &ratio {
                if min.as_ref().map_or(true, |m| r < m) {
                    min = Some(r.clone());
                }
            }
            ratios.push(ratio);
        }
        let mut edges = Vec::new();
        if let Some(m) = &min {
            for (j, ratio) in ratios.iter().enumerate() {
                if let Some(r) = ratio {
                    if tol.within_rel_of_min(r, m) {
                        edges.push(j);
                        chore_edges[j].push(i);
                    }
                }
            }
        }
        mpb.push(min);
        agent_edges.push(edges);
    }
    Ok(MpbStructure {
        mpb,
        agent_edges,
        chore_edges,
    })
}

/// Money-flow network at prices p: agent -> chore arcs on MPB pairs
/// (uncapacitated), chore -> sink arcs with capacity p_j.
#[derive(Clone, Debug)]
pub struct MarketNetwork<T> {
    pub mpb: MpbStructure<T>,
    pub prices: Vec<T>,
}

impl<T: Scalar> MarketNetwork<T> {
    pub fn n_agents(&self) -> usize {
        self.mpb.agent_edges.len()
    }

    pub fn n_chores(&self) -> usize {
        self.prices.len()
    }

    pub fn total_capacity(&self) -> T {
        crate::scalar::total(self.prices.iter().cloned())
    }

    /// Debug dump as DOT text.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph market {\n  rankdir=LR;\n");
        for (i, edges) in self.mpb.agent_edges.iter().enumerate() {
            for &j in edges {
                out.push_str(&format!("  a{i} -> c{j};\n"));
            }
        }
        for (j, p) in self.prices.iter().enumerate() {
            out.push_str(&format!("  c{j} -> sink [label=\"{p}\"];\n"));
        }
        out.push_str("}\n");
        out
    }
}

pub fn build_market_network<T: Scalar>(
    d: &DisutilityMatrix<T>,
    prices: &[T],
    tol: &Tol<T>,
) -> Result<MarketNetwork<T>, MpbError> {
    let mpb = mpb_structure(d, prices, tol)?;
    Ok(MarketNetwork {
        mpb,
        prices: prices.to_vec(),
    })
}
