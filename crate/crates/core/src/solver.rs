//! Iterative CEEI engine. Each iteration decreases the prices of the chores
//! in demand (the MPB neighborhood of the low-earning set S) until a new MPB
//! edge leaves S, then either rebalances the whole allocation or transfers
//! the newly reachable chores into S wholesale. The product of agent
//! disutilities is the potential: price updates leave it unchanged,
//! allocation updates never decrease it, and every rebalance multiplies it
//! by at least 1 + alpha^2/16 in rounded mode.

use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::balance::{balance_allocation, BalanceError};
use crate::instance::{
    decompose_ceei, DecomposeError, DisutilityMatrix, Entry, Instance, InstanceError, Model,
    RoundingError,
};
use crate::mpb::{mpb_structure, MpbError};
use crate::scalar::{power_exponent, total, Rat, Scalar, Tol};

/// Frozen constant for the iteration-count acceptance bounds.
pub const ITERATION_BOUND_C: f64 = 16.0;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver requires a CEEI instance")]
    NotCeei,
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Mpb(#[from] MpbError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("epsilon must lie strictly between 0 and 1")]
    BadEpsilon,
    #[error("no finite pair from S leaves Gamma(S); component should have terminated")]
    NoPriceUpdatePair,
    #[error("iteration budget exhausted after {iterations} iterations")]
    IterationBudget { iterations: usize },
    #[error("solver invariant violated: {0}")]
    InvariantViolation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TraceKind {
    #[serde(rename = "price")]
    Price,
    #[serde(rename = "alloc-balance")]
    AllocBalance,
    #[serde(rename = "alloc-transfer")]
    AllocTransfer,
}

/// One phase event. Price updates carry the scaling factor gamma; the
/// potential is the exact product of agent disutilities after the event.
#[derive(Clone, Debug)]
pub struct TraceRecord<T> {
    pub iter: usize,
    pub kind: TraceKind,
    pub gamma: Option<T>,
    pub low_set: Vec<usize>,
    pub potential: T,
}

/// Direction used for the price-update threshold. The pseudocode of the
/// source algorithm reads "min", but keeping every agent of S on MPB chores
/// requires stopping at the first threshold hit while prices decrease,
/// which is the maximum of MPB_i p_j / d_ij (all such ratios are < 1).
/// `LiteralMin` reproduces the literal pseudocode for comparison; it breaks
/// the MPB-support invariant and the solver reports the violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaRule {
    CorrectedMax,
    LiteralMin,
}

#[derive(Clone, Debug)]
pub struct SolveOptions<T> {
    pub tol: Tol<T>,
    pub gamma_rule: GammaRule,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            tol: Tol::for_mode(),
            gamma_rule: GammaRule::CorrectedMax,
        }
    }
}

#[derive(Clone, Debug)]
pub enum SolveMode<T> {
    ExactRounded { alpha: T },
    Fptas { epsilon: T },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModeTag {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "fptas")]
    Fptas,
}

/// Mutable engine state; allocation columns always sum to one and every
/// positive x_ij sits on an MPB edge at the current prices.
#[derive(Clone, Debug)]
pub struct SolverState<T> {
    pub prices: Vec<T>,
    pub allocation: Vec<Vec<T>>,
    pub earnings: Vec<T>,
    /// The low-earning set S.
    pub low_set: Vec<usize>,
    pub iterations: usize,
    pub balance_calls: usize,
}

#[derive(Clone, Debug)]
pub struct CeeiResult<T> {
    /// Normalized so the prices sum to the number of agents.
    pub prices: Vec<T>,
    pub allocation: Vec<Vec<T>>,
    pub earnings: Vec<T>,
    /// max_i |e_i - 1| after normalization.
    pub epsilon_achieved: T,
    pub iterations: usize,
    pub balance_calls: usize,
    pub mode: ModeTag,
    /// One trace per disutility-graph component, in component order.
    pub component_traces: Vec<Vec<TraceRecord<T>>>,
}

/// Initial prices p_j = min_i d_ij: every chore gets an MPB edge from its
/// argmin agent and MPB_i >= 1 for everyone.
pub fn init_prices<T: Scalar>(d: &DisutilityMatrix<T>) -> Vec<T> {
    (0..d.m())
        .map(|j| d.column_min(j).expect("validated matrix covers every chore"))
        .collect()
}

/// Scale prices so they sum to `n_agents`.
pub fn normalize_prices<T: Scalar>(prices: &[T], n_agents: usize) -> Vec<T> {
    let sum = total(prices.iter().cloned());
    let scale = T::from_int(n_agents as i64) / sum;
    prices.iter().map(|p| p.clone() * scale.clone()).collect()
}

/// Product of agent disutilities, the solver potential. `None` if some agent
/// consumes a chore it cannot do.
pub fn potential<T: Scalar>(d: &DisutilityMatrix<T>, x: &[Vec<T>]) -> Option<T> {
    let mut prod = T::one();
    for i in 0..d.n() {
        let mut di = T::zero();
        for j in 0..d.m() {
            if x[i][j] > T::zero() {
                match d.entry(i, j) {
                    Entry::Fin(v) => di = di + v.clone() * x[i][j].clone(),
                    Entry::Inf => return None,
                }
            }
        }
        prod = prod * di;
    }
    Some(prod)
}

pub struct PriceUpdateOutcome<T> {
    pub gamma: T,
    /// New MPB edges from S into the complement of the old Gamma(S).
    pub new_edges: Vec<(usize, usize)>,
}

/// Decrease the prices of Gamma(S) (and the earnings of S) by the threshold
/// factor; the allocation is untouched, so the potential cannot change.
pub fn price_update<T: Scalar>(
    d: &DisutilityMatrix<T>,
    state: &mut SolverState<T>,
    opts: &SolveOptions<T>,
) -> Result<PriceUpdateOutcome<T>, SolverError> {
    if state.low_set.is_empty() {
        return Err(SolverError::InvariantViolation("empty low set".into()));
    }
    let m = d.m();
    let mpb = mpb_structure(d, &state.prices, &opts.tol)?;
    let gamma_s = mpb.gamma(&state.low_set);
    let mut in_gamma = vec![false; m];
    for &j in &gamma_s {
        in_gamma[j] = true;
    }
    let mut chosen: Option<T> = None;
    for &i in &state.low_set {
        let mpb_i = mpb.mpb[i]
            .clone()
            .ok_or_else(|| SolverError::InvariantViolation(format!("agent {i} has no finite row")))?;
        for j in 0..m {
            if in_gamma[j] {
                continue;
            }
            if let Entry::Fin(dij) = d.entry(i, j) {
                let ratio = mpb_i.clone() * state.prices[j].clone() / dij.clone();
                let take = match (&chosen, opts.gamma_rule) {
                    (None, _) => true,
                    (Some(best), GammaRule::CorrectedMax) => ratio > *best,
                    (Some(best), GammaRule::LiteralMin) => ratio < *best,
                };
                if take {
                    chosen = Some(ratio);
                }
            }
        }
    }
    let gamma = chosen.ok_or(SolverError::NoPriceUpdatePair)?;
    if gamma >= T::one() {
        return Err(SolverError::InvariantViolation(format!(
            "price-update factor {gamma} not below 1"
        )));
    }
    for &j in &gamma_s {
        state.prices[j] = state.prices[j].clone() * gamma.clone();
    }
    for &i in &state.low_set {
        state.earnings[i] = state.earnings[i].clone() * gamma.clone();
    }
    let fresh = mpb_structure(d, &state.prices, &opts.tol)?;
    let mut new_edges = Vec::new();
    for &i in &state.low_set {
        for &j in &fresh.agent_edges[i] {
            if !in_gamma[j] {
                new_edges.push((i, j));
            }
        }
    }
    // Edges from S into Gamma(S) must survive a uniform decrease; losing one
    // strands allocated money off the MPB graph (this is what the literal
    // "min" threshold direction does).
    for &i in &state.low_set {
        for &j in &mpb.agent_edges[i] {
            if !fresh.has_edge(i, j) {
                return Err(SolverError::InvariantViolation(format!(
                    "MPB edge ({i},{j}) from S into Gamma(S) lost in price update"
                )));
            }
        }
    }
    Ok(PriceUpdateOutcome { gamma, new_edges })
}

fn select_low_set<T: Scalar>(mode: &SolveMode<T>, earnings: &[T], tol: &Tol<T>) -> Vec<usize> {
    match mode {
        SolveMode::ExactRounded { .. } => {
            let min = earnings
                .iter()
                .cloned()
                .reduce(|a, b| if b < a { b } else { a })
                .expect("nonempty earnings");
            (0..earnings.len())
                .filter(|&i| tol.in_min_set(&earnings[i], &min))
                .collect()
        }
        SolveMode::Fptas { .. } => {
            // Sort by increasing earnings and cut at the largest
            // multiplicative gap e_{k+1}/e_k.
            let n = earnings.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                earnings[a]
                    .partial_cmp(&earnings[b])
                    .expect("earnings are comparable")
                    .then(a.cmp(&b))
            });
            if n == 1 {
                return order;
            }
            let mut cut = 0usize;
            let mut best: Option<T> = None;
            for k in 0..n - 1 {
                let gap = earnings[order[k + 1]].clone() / earnings[order[k]].clone();
                if best.as_ref().map_or(true, |b| gap > *b) {
                    best = Some(gap);
                    cut = k;
                }
            }
            let mut s: Vec<usize> = order[..=cut].to_vec();
            s.sort_unstable();
            s
        }
    }
}

/// Which branch an allocation update took.
pub fn allocation_update<T: Scalar>(
    d: &DisutilityMatrix<T>,
    state: &mut SolverState<T>,
    new_edges: &[(usize, usize)],
    mode: &SolveMode<T>,
    opts: &SolveOptions<T>,
) -> Result<TraceKind, SolverError> {
    let mut j_set: Vec<usize> = new_edges.iter().map(|&(_, j)| j).collect();
    j_set.sort_unstable();
    j_set.dedup();
    if j_set.is_empty() {
        return Err(SolverError::InvariantViolation(
            "price update produced no new MPB edge".into(),
        ));
    }
    let n = d.n();
    let in_s = {
        let mut v = vec![false; n];
        for &i in &state.low_set {
            v[i] = true;
        }
        v
    };
    let e_max = state
        .low_set
        .iter()
        .map(|&i| state.earnings[i].clone())
        .reduce(|a, b| if b > a { b } else { a })
        .ok_or_else(|| SolverError::InvariantViolation("empty low set".into()))?;
    let e_min = (0..n)
        .filter(|&i| !in_s[i])
        .map(|i| state.earnings[i].clone())
        .reduce(|a, b| if b < a { b } else { a })
        .ok_or_else(|| SolverError::InvariantViolation("low set covers all agents".into()))?;
    let new_money = total(j_set.iter().map(|&j| state.prices[j].clone()));
    let two = T::from_int(2);
    // Equality goes to the balance branch: the transfer branch keeps
    // max_S < min_outside strict only when the new money is strictly below
    // half the gap, and the balance jump bound still holds at equality.
    if new_money >= (e_min.clone() - e_max.clone()) / two {
        let bal = balance_allocation(d, &state.prices, &opts.tol)?;
        state.allocation = bal.allocation;
        state.earnings = bal.earnings;
        state.low_set = select_low_set(mode, &state.earnings, &opts.tol);
        state.balance_calls += 1;
        Ok(TraceKind::AllocBalance)
    } else {
        for &j in &j_set {
            // Minimum-earning eligible agent, ties by index.
            let mut pick: Option<usize> = None;
            for &(i, jj) in new_edges {
                if jj != j {
                    continue;
                }
                let better = match pick {
                    None => true,
                    Some(cur) => {
                        state.earnings[i] < state.earnings[cur]
                            || (state.earnings[i] == state.earnings[cur] && i < cur)
                    }
                };
                if better {
                    pick = Some(i);
                }
            }
            let i = pick.expect("every chore in J has a new edge");
            for other in 0..n {
                if other != i && state.allocation[other][j] > T::zero() {
                    debug_assert!(!in_s[other], "Gamma(S) holdings stay inside S");
                    state.earnings[other] = state.earnings[other].clone()
                        - state.allocation[other][j].clone() * state.prices[j].clone();
                    state.allocation[other][j] = T::zero();
                }
            }
            debug_assert!(state.allocation[i][j] <= T::flow_eps());
            state.allocation[i][j] = T::one();
            state.earnings[i] = state.earnings[i].clone() + state.prices[j].clone();
        }
        Ok(TraceKind::AllocTransfer)
    }
}

fn terminated<T: Scalar>(mode: &SolveMode<T>, earnings: &[T]) -> bool {
    match mode {
        SolveMode::ExactRounded { .. } => earnings.iter().all(|e| *e == earnings[0]),
        SolveMode::Fptas { epsilon } => {
            let max = earnings
                .iter()
                .cloned()
                .reduce(|a, b| if b > a { b } else { a })
                .expect("nonempty earnings");
            let min = earnings
                .iter()
                .cloned()
                .reduce(|a, b| if b < a { b } else { a })
                .expect("nonempty earnings");
            max / min < T::one() + epsilon.clone()
        }
    }
}

fn ln_n_dmax<T: Scalar>(n: usize, d: &DisutilityMatrix<T>) -> f64 {
    let v = (n as f64) * d.d_max().to_f64();
    v.ln().max(1.0)
}

/// Lemma-scale iteration bound for rounded instances, with the frozen C.
pub fn exact_iteration_bound(n: usize, m: usize, alpha: f64, ln_ndmax: f64) -> f64 {
    ITERATION_BOUND_C * (n * m) as f64 / (alpha * alpha) * ln_ndmax.max(1.0)
}

/// Lemma-scale balance-call bound for rounded instances.
pub fn exact_balance_bound(n: usize, alpha: f64, ln_ndmax: f64) -> f64 {
    ITERATION_BOUND_C * n as f64 / (alpha * alpha) * ln_ndmax.max(1.0)
}

/// FPTAS iteration bound (n^3 m / eps^2 scale).
pub fn fptas_iteration_bound(n: usize, m: usize, epsilon: f64, ln_ndmax: f64) -> f64 {
    ITERATION_BOUND_C * (n * n * n * m) as f64 / (epsilon * epsilon) * ln_ndmax.max(1.0)
}

struct ComponentRun<T> {
    prices: Vec<T>,
    allocation: Vec<Vec<T>>,
    earnings: Vec<T>,
    iterations: usize,
    balance_calls: usize,
    trace: Vec<TraceRecord<T>>,
}

fn record<T: Scalar>(
    trace: &mut Vec<TraceRecord<T>>,
    d: &DisutilityMatrix<T>,
    state: &SolverState<T>,
    kind: TraceKind,
    gamma: Option<T>,
) -> Result<(), SolverError> {
    let pot = potential(d, &state.allocation).ok_or_else(|| {
        SolverError::InvariantViolation("allocation consumes an infinite-disutility chore".into())
    })?;
    if let Some(prev) = trace.last() {
        match kind {
            TraceKind::Price => {
                if T::EXACT && pot != prev.potential {
                    return Err(SolverError::InvariantViolation(
                        "potential changed across a price update".into(),
                    ));
                }
            }
            _ => {
                if T::EXACT && pot < prev.potential {
                    return Err(SolverError::InvariantViolation(
                        "potential decreased across an allocation update".into(),
                    ));
                }
            }
        }
    }
    trace.push(TraceRecord {
        iter: state.iterations,
        kind,
        gamma,
        low_set: state.low_set.clone(),
        potential: pot,
    });
    Ok(())
}

fn verify_state<T: Scalar>(
    d: &DisutilityMatrix<T>,
    state: &SolverState<T>,
    mode: &SolveMode<T>,
    opts: &SolveOptions<T>,
) -> Result<(), SolverError> {
    let (n, m) = (d.n(), d.m());
    let viol = |msg: String| Err(SolverError::InvariantViolation(msg));
    for j in 0..m {
        let col = total((0..n).map(|i| state.allocation[i][j].clone()));
        if !opts.tol.eq_abs(&col, &T::one()) {
            return viol(format!("chore {j} allocated {col}, expected 1"));
        }
    }
    let mpb = mpb_structure(d, &state.prices, &opts.tol)?;
    for i in 0..n {
        for j in 0..m {
            if state.allocation[i][j] > T::flow_eps() && !mpb.has_edge(i, j) {
                return viol(format!("x[{i}][{j}] > 0 off the MPB graph"));
            }
        }
        let e = total((0..m).map(|j| state.allocation[i][j].clone() * state.prices[j].clone()));
        if !opts.tol.eq_abs(&e, &state.earnings[i]) {
            return viol(format!("earning bookkeeping drifted for agent {i}"));
        }
    }
    if state.low_set.len() < n {
        let in_s: Vec<bool> = {
            let mut v = vec![false; n];
            for &i in &state.low_set {
                v[i] = true;
            }
            v
        };
        let max_s = state
            .low_set
            .iter()
            .map(|&i| state.earnings[i].clone())
            .reduce(|a, b| if b > a { b } else { a })
            .unwrap();
        let min_out = (0..n)
            .filter(|&i| !in_s[i])
            .map(|i| state.earnings[i].clone())
            .reduce(|a, b| if b < a { b } else { a })
            .unwrap();
        if T::EXACT && max_s >= min_out {
            return viol("max earning in S not below min outside S".into());
        }
    }
    if let SolveMode::ExactRounded { alpha } = mode {
        if T::EXACT {
            let base = T::one() + alpha.clone();
            for (j, p) in state.prices.iter().enumerate() {
                if power_exponent(p, &base).is_none() {
                    return viol(format!("price of chore {j} left the (1+alpha) power lattice"));
                }
            }
        }
    }
    Ok(())
}

fn solve_component<T: Scalar>(
    d: &DisutilityMatrix<T>,
    mode: &SolveMode<T>,
    opts: &SolveOptions<T>,
) -> Result<ComponentRun<T>, SolverError> {
    let n = d.n();
    let prices = init_prices(d);
    let bal = balance_allocation(d, &prices, &opts.tol)?;
    let mut state = SolverState {
        prices,
        allocation: bal.allocation,
        earnings: bal.earnings,
        low_set: Vec::new(),
        iterations: 0,
        balance_calls: 1,
    };
    state.low_set = select_low_set(mode, &state.earnings, &opts.tol);
    let mut trace = Vec::new();
    record(&mut trace, d, &state, TraceKind::AllocBalance, None)?;

    let ln_nd = ln_n_dmax(n, d);
    let budget = match mode {
        SolveMode::ExactRounded { alpha } => {
            (8.0 * exact_iteration_bound(n, d.m(), alpha.to_f64(), ln_nd)) as usize + 64
        }
        SolveMode::Fptas { epsilon } => {
            let theory = 8.0 * fptas_iteration_bound(n, d.m(), epsilon.to_f64(), ln_nd);
            (theory.min(1_000_000.0)) as usize + 64
        }
    };

    while !terminated(mode, &state.earnings) {
        state.iterations += 1;
        if state.iterations > budget {
            return Err(SolverError::IterationBudget {
                iterations: state.iterations,
            });
        }
        let update = price_update(d, &mut state, opts)?;
        if let SolveMode::ExactRounded { alpha } = mode {
            if T::EXACT {
                let base = T::one() + alpha.clone();
                match power_exponent(&update.gamma, &base) {
                    Some(k) if k <= -1 => {}
                    _ => {
                        return Err(SolverError::InvariantViolation(format!(
                            "gamma {} is not (1+alpha)^k with k <= -1",
                            update.gamma
                        )))
                    }
                }
            }
        }
        record(&mut trace, d, &state, TraceKind::Price, Some(update.gamma.clone()))?;
        let kind = allocation_update(d, &mut state, &update.new_edges, mode, opts)?;
        record(&mut trace, d, &state, kind, None)?;
        if cfg!(debug_assertions) {
            verify_state(d, &state, mode, opts)?;
        }
    }

    let prices = normalize_prices(&state.prices, n);
    let earnings: Vec<T> = (0..n)
        .map(|i| total((0..d.m()).map(|j| state.allocation[i][j].clone() * prices[j].clone())))
        .collect();
    Ok(ComponentRun {
        prices,
        allocation: state.allocation,
        earnings,
        iterations: state.iterations,
        balance_calls: state.balance_calls,
        trace,
    })
}

fn solve_ceei<T: Scalar>(
    instance: &Instance<T>,
    mode: SolveMode<T>,
    opts: &SolveOptions<T>,
    tag: ModeTag,
) -> Result<CeeiResult<T>, SolverError> {
    if !matches!(instance.model, Model::Ceei) {
        return Err(SolverError::NotCeei);
    }
    let subs = decompose_ceei(instance)?;
    let (n, m) = (instance.n(), instance.m());
    let mut prices = vec![T::zero(); m];
    let mut allocation = vec![vec![T::zero(); m]; n];
    let mut earnings = vec![T::zero(); n];
    let mut iterations = 0;
    let mut balance_calls = 0;
    let mut component_traces = Vec::new();
    for sub in &subs {
        let run = solve_component(&sub.instance.disutility, &mode, opts)?;
        for (lj, &gj) in sub.chores.iter().enumerate() {
            prices[gj] = run.prices[lj].clone();
        }
        for (la, &ga) in sub.agents.iter().enumerate() {
            earnings[ga] = run.earnings[la].clone();
            for (lj, &gj) in sub.chores.iter().enumerate() {
                allocation[ga][gj] = run.allocation[la][lj].clone();
            }
        }
        iterations += run.iterations;
        balance_calls += run.balance_calls;
        component_traces.push(run.trace);
    }
    let epsilon_achieved = earnings
        .iter()
        .map(|e| (e.clone() - T::one()).abs())
        .reduce(|a, b| if b > a { b } else { a })
        .expect("at least one agent");
    Ok(CeeiResult {
        prices,
        allocation,
        earnings,
        epsilon_achieved,
        iterations,
        balance_calls,
        mode: tag,
        component_traces,
    })
}

/// Exact CEEI for (1+alpha)-rounded disutilities: all earnings are exactly 1
/// after normalization.
pub fn solve_exact_rounded(
    instance: &Instance<Rat>,
    alpha: &Rat,
    opts: &SolveOptions<Rat>,
) -> Result<CeeiResult<Rat>, SolverError> {
    if !matches!(instance.model, Model::Ceei) {
        return Err(SolverError::NotCeei);
    }
    instance.check_rounded(alpha)?;
    let result = solve_ceei(
        instance,
        SolveMode::ExactRounded { alpha: alpha.clone() },
        opts,
        ModeTag::Exact,
    )?;
    if result.earnings.iter().any(|e| !e.is_one()) {
        return Err(SolverError::InvariantViolation(
            "exact mode terminated with a non-unit earning".into(),
        ));
    }
    Ok(result)
}

/// (1-epsilon)-approximate CEEI for arbitrary disutilities, run in
/// approximate (f64) mode.
pub fn solve_fptas(
    instance: &Instance<Rat>,
    epsilon: f64,
    opts: &SolveOptions<f64>,
) -> Result<CeeiResult<f64>, SolverError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SolverError::BadEpsilon);
    }
    let approx = instance.to_f64()?;
    solve_ceei(&approx, SolveMode::Fptas { epsilon }, opts, ModeTag::Fptas)
}

/// FPTAS path over any scalar type; exact-mode tests use this to check the
/// fixed points with rational arithmetic.
pub fn solve_fptas_in_mode<T: Scalar>(
    instance: &Instance<T>,
    epsilon: T,
    opts: &SolveOptions<T>,
) -> Result<CeeiResult<T>, SolverError> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(SolverError::BadEpsilon);
    }
    solve_ceei(instance, SolveMode::Fptas { epsilon }, opts, ModeTag::Fptas)
}
