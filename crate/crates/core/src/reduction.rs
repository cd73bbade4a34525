//! Exchange-model hardness instances built from normalized polymatrix games.
//!
//! The construction stacks K layers of chore pairs. Layer-1 pairs absorb the
//! payoff matrix through agent endowments, layers 2..K amplify a boundary
//! price ratio from one layer to the opposite boundary of the next, and a
//! candidate equilibrium price vector on the last layer decodes back into a
//! game strategy. Nothing here attempts to solve the exchange instance; the
//! module builds, audits, and extracts.

use thiserror::Error;

use crate::instance::{
    analyze_structure, DisutilityMatrix, EndowmentMatrix, Entry, Instance, InstanceError, Model,
};
use crate::polymatrix::PolymatrixGame;
use crate::scalar::{total, Rat, Scalar, Tol};
use crate::verify::verify_ce;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("reduction needs at least 2 players (layer count degenerates at n = 1)")]
    DegenerateLayerCount,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("price of layer-K chore {chore} is not positive")]
    NonPositivePrice { chore: usize },
    #[error("symmetric check requires every payoff entry to equal 1/2")]
    NotUniform,
    #[error("price vector length {got} does not match chore count {expected}")]
    PriceLength { expected: usize, got: usize },
}

/// The alpha ladder and derived constants of the construction.
#[derive(Clone, Debug)]
pub struct ReductionParams {
    pub players: usize,
    pub c: u32,
    /// K, always even.
    pub layers: usize,
    /// alpha_1..alpha_K; alpha_1 = 1/n^(3c), each next is 3/2 the previous.
    pub alphas: Vec<Rat>,
    /// delta_k = n alpha_k / 2 for k in 2..=K (index 0 holds delta_2).
    pub deltas: Vec<Rat>,
    /// Approximation quality the hardness argument needs: alpha_1 / (200 n).
    pub epsilon_target: Rat,
}

impl ReductionParams {
    pub fn for_players(n: usize) -> Result<Self, ReductionError> {
        if n < 2 {
            return Err(ReductionError::DegenerateLayerCount);
        }
        let c = 3u32;
        let log2 = (usize::BITS - (n - 1).leading_zeros()) as usize; // ceil(log2 n)
        let layers = 2 * c as usize * log2;
        let n_rat = Rat::from_int(n as i64);
        let alpha_1 = n_rat.powi(-((3 * c) as i32));
        let mut alphas = Vec::with_capacity(layers);
        let mut a = alpha_1.clone();
        for _ in 0..layers {
            alphas.push(a.clone());
            a = a * Rat::ratio(3, 2);
        }
        let deltas = alphas[1..]
            .iter()
            .map(|ak| n_rat.clone() * ak.clone() / Rat::from_int(2))
            .collect();
        let epsilon_target = alpha_1 / (Rat::from_int(200) * n_rat.clone());
        Ok(ReductionParams {
            players: n,
            c,
            layers,
            alphas,
            deltas,
            epsilon_target,
        })
    }

    /// Measured ladder bounds (n^c alpha_1 < alpha_K, alpha_K <= 1/n^c).
    /// The upper bound always holds; the lower one first holds at n = 3
    /// ((3/2)^5 = 7.59 < 8 = 2^3 makes it fail for two players, a constant
    /// slack the asymptotic argument ignores).
    pub fn ladder_bounds(&self) -> (bool, bool) {
        let nc = Rat::from_int(self.players as i64).powi(self.c as i32);
        let lower = nc.clone() * self.alpha(1) < self.alpha(self.layers);
        let upper = self.alpha(self.layers) <= nc.recip();
        (lower, upper)
    }

    /// alpha_k, 1-based layer index.
    pub fn alpha(&self, k: usize) -> Rat {
        self.alphas[k - 1].clone()
    }

    /// delta_k, 1-based layer index, defined for k >= 2.
    pub fn delta(&self, k: usize) -> Rat {
        self.deltas[k - 2].clone()
    }
}

/// Role of an agent in the construction; indices are 1-based as in the
/// layered naming scheme.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentLabel {
    /// Owns n units of its layer's chore and works the next layer's pair
    /// (layers 1..=K-1).
    Chain { layer: usize, index: usize },
    /// Closes the loop with a fixed earning target; works a layer-1 pair.
    Prime { index: usize },
    /// Owns delta_k of both chores of its pair; indifferent between them
    /// (layers 2..=K).
    Buffer { layer: usize, index: usize },
    /// Owns M[row][col] units of the layer-K chore `row`; works the
    /// layer-1 pair of `col`.
    Payoff { row: usize, col: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoreLabel {
    pub layer: usize,
    pub index: usize,
}

/// Bijections between flat instance indices and layered labels.
#[derive(Clone, Debug)]
pub struct LayeredLabels {
    pub players: usize,
    pub layers: usize,
    pub agents: Vec<AgentLabel>,
    pub chores: Vec<ChoreLabel>,
}

impl LayeredLabels {
    /// Flat chore id of b^layer_index (1-based layer and index).
    pub fn chore_id(&self, layer: usize, index: usize) -> usize {
        (layer - 1) * 2 * self.players + (index - 1)
    }

    /// Sum of the layer-K pair prices for player-pair i (1-based).
    pub fn pair_sum(&self, prices: &[Rat], layer: usize, i: usize) -> Rat {
        prices[self.chore_id(layer, 2 * i - 1)].clone()
            + prices[self.chore_id(layer, 2 * i)].clone()
    }
}

fn partner(index: usize) -> usize {
    if index % 2 == 1 {
        index + 1
    } else {
        index - 1
    }
}

/// Build the exchange instance E(I) for a normalized polymatrix game.
pub fn build_reduction(
    game: &PolymatrixGame,
) -> Result<(Instance<Rat>, ReductionParams, LayeredLabels), ReductionError> {
    let n = game.players;
    let params = ReductionParams::for_players(n)?;
    let k_layers = params.layers;
    let two_n = 2 * n;
    let m = two_n * k_layers;

    let mut agents: Vec<AgentLabel> = Vec::new();
    for layer in 1..k_layers {
        for index in 1..=two_n {
            agents.push(AgentLabel::Chain { layer, index });
        }
    }
    for index in 1..=two_n {
        agents.push(AgentLabel::Prime { index });
    }
    for layer in 2..=k_layers {
        for index in 1..=n {
            agents.push(AgentLabel::Buffer { layer, index });
        }
    }
    for row in 1..=two_n {
        for col in 1..=two_n {
            agents.push(AgentLabel::Payoff { row, col });
        }
    }
    let n_agents = agents.len();

    let mut chores: Vec<ChoreLabel> = Vec::with_capacity(m);
    for layer in 1..=k_layers {
        for index in 1..=two_n {
            chores.push(ChoreLabel { layer, index });
        }
    }
    let labels = LayeredLabels {
        players: n,
        layers: k_layers,
        agents,
        chores,
    };

    let one = Rat::from_int(1);
    let n_rat = Rat::from_int(n as i64);
    let mut d: Vec<Vec<Entry<Rat>>> = vec![vec![Entry::Inf; m]; n_agents];
    let mut w: Vec<Vec<Rat>> = vec![vec![Rat::from_int(0); m]; n_agents];

    for (a, label) in labels.agents.iter().enumerate() {
        match label {
            AgentLabel::Chain { layer, index } => {
                // Owns n of b^layer_index; works the pair of b^(layer+1).
                w[a][labels.chore_id(*layer, *index)] = n_rat.clone();
                let up = layer + 1;
                let alpha = params.alpha(up);
                d[a][labels.chore_id(up, *index)] = Entry::Fin(one.clone() - alpha.clone());
                d[a][labels.chore_id(up, partner(*index))] = Entry::Fin(one.clone() + alpha);
            }
            AgentLabel::Prime { index } => {
                // Owns (1 - alpha_K)(2n - colsum(M, index))/2 of each chore
                // of its layer-1 pair; works that pair favoring its side.
                let colsum = total((0..two_n).map(|r| game.matrix[r][index - 1].clone()));
                let amount = (one.clone() - params.alpha(k_layers))
                    * (Rat::from_int(2 * n as i64) - colsum)
                    / Rat::from_int(2);
                let lo = labels.chore_id(1, 2 * ((index + 1) / 2) - 1);
                let hi = labels.chore_id(1, 2 * ((index + 1) / 2));
                w[a][lo] = amount.clone();
                w[a][hi] = amount;
                let alpha = params.alpha(1);
                d[a][labels.chore_id(1, *index)] = Entry::Fin(one.clone() - alpha.clone());
                d[a][labels.chore_id(1, partner(*index))] = Entry::Fin(one.clone() + alpha);
            }
            AgentLabel::Buffer { layer, index } => {
                let delta = params.delta(*layer);
                let lo = labels.chore_id(*layer, 2 * index - 1);
                let hi = labels.chore_id(*layer, 2 * index);
                w[a][lo] = delta.clone();
                w[a][hi] = delta;
                let alpha = params.alpha(*layer);
                d[a][lo] = Entry::Fin(one.clone() - alpha.clone());
                d[a][hi] = Entry::Fin(one.clone() - alpha);
            }
            AgentLabel::Payoff { row, col } => {
                // Owns M[row][col] of b^K_row; works the layer-1 pair of col.
                w[a][labels.chore_id(k_layers, *row)] = game.matrix[row - 1][col - 1].clone();
                let alpha = params.alpha(1);
                d[a][labels.chore_id(1, *col)] = Entry::Fin(one.clone() - alpha.clone());
                d[a][labels.chore_id(1, partner(*col))] = Entry::Fin(one.clone() + alpha);
            }
        }
    }

    let disutility = DisutilityMatrix::new(d)?;
    let endowments = EndowmentMatrix::new(w, n_agents, m)?;
    let instance = Instance::new(disutility, Model::Exchange(endowments), None)?;
    Ok((instance, params, labels))
}

/// Structural audit of a (claimed) reduction instance.
#[derive(Clone, Debug)]
pub struct ReductionReport {
    /// Paired chores have exactly equal endowment totals.
    pub pairwise_equal_endowments_ok: bool,
    /// Totals equal n + n(1-alpha_K) on layer 1 and n + delta_k above.
    pub lemma_totals_ok: bool,
    pub offending_chore_pair: Option<(usize, usize)>,
    /// Disutility graph is a disjoint union of bicliques with the expected
    /// census: n components of 4n+2 agents, n(K-1) components of 3 agents,
    /// two chores each.
    pub sc2_ok: bool,
    pub component_count: usize,
    pub census_ok: bool,
    pub census_detail: Option<String>,
    /// Economy graph strongly connected.
    pub sc1_ok: bool,
    /// Every finite entry is 1 - alpha_k or 1 + alpha_k for its layer.
    pub disutility_values_ok: bool,
    pub pass: bool,
}

pub fn check_reduction_properties(
    instance: &Instance<Rat>,
    labels: &LayeredLabels,
    params: &ReductionParams,
) -> ReductionReport {
    let n = labels.players;
    let k_layers = labels.layers;
    let one = Rat::from_int(1);
    let n_rat = Rat::from_int(n as i64);

    let endow = match &instance.model {
        Model::Exchange(w) => w,
        Model::Ceei => {
            return ReductionReport {
                pairwise_equal_endowments_ok: false,
                lemma_totals_ok: false,
                offending_chore_pair: None,
                sc2_ok: false,
                component_count: 0,
                census_ok: false,
                census_detail: Some("instance is not an exchange instance".into()),
                sc1_ok: false,
                disutility_values_ok: false,
                pass: false,
            }
        }
    };

    // (a) Pairwise equal endowments and the per-layer totals.
    let mut pairwise_equal_endowments_ok = true;
    let mut lemma_totals_ok = true;
    let mut offending_chore_pair = None;
    for layer in 1..=k_layers {
        for i in 1..=n {
            let lo = labels.chore_id(layer, 2 * i - 1);
            let hi = labels.chore_id(layer, 2 * i);
            let t_lo = endow.column_total(lo);
            let t_hi = endow.column_total(hi);
            if t_lo != t_hi {
                pairwise_equal_endowments_ok = false;
                offending_chore_pair.get_or_insert((lo, hi));
            }
            let expected = if layer == 1 {
                n_rat.clone() + n_rat.clone() * (one.clone() - params.alpha(k_layers))
            } else {
                n_rat.clone() + params.delta(layer)
            };
            if t_lo != expected || t_hi != expected {
                lemma_totals_ok = false;
                offending_chore_pair.get_or_insert((lo, hi));
            }
        }
    }

    // (b) SC2 with the component census, (c) SC1.
    let structure = analyze_structure(instance);
    let sc1_ok = structure.is_economy_strongly_connected == Some(true);
    let component_count = structure.components.len();
    let mut census_ok = component_count == n * k_layers;
    let mut census_detail = None;
    if !census_ok {
        census_detail = Some(format!(
            "expected {} components, found {component_count}",
            n * k_layers
        ));
    }
    if census_ok {
        'outer: for comp in &structure.components {
            if comp.chores.len() != 2 {
                census_ok = false;
                census_detail = Some(format!("component with {} chores", comp.chores.len()));
                break;
            }
            let a = &labels.chores[comp.chores[0]];
            let b = &labels.chores[comp.chores[1]];
            if a.layer != b.layer || partner(a.index) != b.index {
                census_ok = false;
                census_detail = Some(format!(
                    "component chores b^{}_{} and b^{}_{} are not a pair",
                    a.layer, a.index, b.layer, b.index
                ));
                break;
            }
            let expected_agents = if a.layer == 1 { 4 * n + 2 } else { 3 };
            if comp.agents.len() != expected_agents {
                census_ok = false;
                census_detail = Some(format!(
                    "layer-{} component has {} agents, expected {expected_agents}",
                    a.layer,
                    comp.agents.len()
                ));
                break 'outer;
            }
        }
    }
    let sc2_ok = structure.is_biclique_union && census_ok;

    // (d) Every finite entry is 1 ± alpha of its chore's layer.
    let mut disutility_values_ok = true;
    'scan: for a in 0..instance.n() {
        for j in 0..instance.m() {
            if let Entry::Fin(v) = instance.disutility.entry(a, j) {
                let alpha = params.alpha(labels.chores[j].layer);
                let lo = one.clone() - alpha.clone();
                let hi = one.clone() + alpha;
                if *v != lo && *v != hi {
                    disutility_values_ok = false;
                    break 'scan;
                }
            }
        }
    }

    let pass = pairwise_equal_endowments_ok
        && lemma_totals_ok
        && sc2_ok
        && sc1_ok
        && disutility_values_ok;
    ReductionReport {
        pairwise_equal_endowments_ok,
        lemma_totals_ok,
        offending_chore_pair,
        sc2_ok,
        component_count,
        census_ok,
        census_detail,
        sc1_ok,
        disutility_values_ok,
        pass,
    }
}

/// Strategy decoded from layer-K prices, with the clamp magnitude applied to
/// force it into [0,1] (nonzero clamps mean the prices violate regulation).
#[derive(Clone, Debug)]
pub struct StrategyExtraction {
    pub x: Vec<Rat>,
    pub max_clamp: Rat,
}

/// x_{2i-1} = (2 p(b^K_{2i-1}) - (1-alpha_K) pi^K_i) / (2 pi^K_i alpha_K),
/// with pi^K_i the pair sum; likewise for x_{2i}.
pub fn extract_strategy(
    prices: &[Rat],
    labels: &LayeredLabels,
    params: &ReductionParams,
) -> Result<StrategyExtraction, ReductionError> {
    let n = labels.players;
    let k_layers = labels.layers;
    if prices.len() != 2 * n * k_layers {
        return Err(ReductionError::PriceLength {
            expected: 2 * n * k_layers,
            got: prices.len(),
        });
    }
    let alpha_k = params.alpha(k_layers);
    let one = Rat::from_int(1);
    let two = Rat::from_int(2);
    let mut x = Vec::with_capacity(2 * n);
    let mut max_clamp = Rat::from_int(0);
    for i in 1..=n {
        for side in [2 * i - 1, 2 * i] {
            let id = labels.chore_id(k_layers, side);
            if prices[id] <= Rat::from_int(0) {
                return Err(ReductionError::NonPositivePrice { chore: id });
            }
            let pi = labels.pair_sum(prices, k_layers, i);
            let raw = (two.clone() * prices[id].clone() - (one.clone() - alpha_k.clone()) * pi.clone())
                / (two.clone() * pi * alpha_k.clone());
            let clamped = if raw < Rat::from_int(0) {
                Rat::from_int(0)
            } else if raw > one {
                one.clone()
            } else {
                raw.clone()
            };
            let clamp = (raw - clamped.clone()).abs();
            if clamp > max_clamp {
                max_clamp = clamp;
            }
            x.push(clamped);
        }
    }
    Ok(StrategyExtraction { x, max_clamp })
}

/// For the uniform game M = 1/2 the instance has an analytically forced
/// symmetric equilibrium: all prices 1 and the natural layered allocation.
/// Builds it and runs the full verifier at epsilon = 0.
pub fn check_symmetric_ce(game: &PolymatrixGame) -> Result<bool, ReductionError> {
    let half = Rat::ratio(1, 2);
    if game.matrix.iter().any(|r| r.iter().any(|v| *v != half)) {
        return Err(ReductionError::NotUniform);
    }
    let (instance, params, labels) = build_reduction(game)?;
    let prices = vec![Rat::from_int(1); instance.m()];
    let x = symmetric_allocation(game, &params, &labels, instance.n(), instance.m());
    let report = verify_ce(&instance, &prices, &x, &Rat::from_int(0), &Tol::exact())
        .expect("shapes match by construction");
    Ok(report.pass)
}

/// The natural allocation at unit prices: every chain agent does n units of
/// its favored next-layer chore, buffers split their pair evenly, primes and
/// payoff agents do their favored layer-1 chore.
pub fn symmetric_allocation(
    game: &PolymatrixGame,
    params: &ReductionParams,
    labels: &LayeredLabels,
    n_agents: usize,
    m: usize,
) -> Vec<Vec<Rat>> {
    let n = labels.players;
    let two_n = 2 * n;
    let one = Rat::from_int(1);
    let n_rat = Rat::from_int(n as i64);
    let mut x = vec![vec![Rat::from_int(0); m]; n_agents];
    for (a, label) in labels.agents.iter().enumerate() {
        match label {
            AgentLabel::Chain { layer, index } => {
                x[a][labels.chore_id(layer + 1, *index)] = n_rat.clone();
            }
            AgentLabel::Prime { index } => {
                let colsum = total((0..two_n).map(|r| game.matrix[r][index - 1].clone()));
                let owed = (one.clone() - params.alpha(labels.layers))
                    * (Rat::from_int(2 * n as i64) - colsum);
                x[a][labels.chore_id(1, *index)] = owed;
            }
            AgentLabel::Buffer { layer, index } => {
                let delta = params.delta(*layer);
                x[a][labels.chore_id(*layer, 2 * index - 1)] = delta.clone();
                x[a][labels.chore_id(*layer, 2 * index)] = delta;
            }
            AgentLabel::Payoff { row, col } => {
                x[a][labels.chore_id(1, *col)] = game.matrix[row - 1][col - 1].clone();
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxflow::{max_flow, MaxFlowOutcome};
    use crate::mpb::build_market_network;
    use crate::polymatrix::{validate_polymatrix, verify_polymatrix_ne};

    fn rat(n: i64, d: i64) -> Rat {
        Rat::ratio(n, d)
    }

    fn uniform_game(n: usize) -> PolymatrixGame {
        let rows = vec![vec![rat(1, 2); 2 * n]; 2 * n];
        validate_polymatrix(rows).unwrap()
    }

    #[test]
    fn params_ladder_n2() {
        let p = ReductionParams::for_players(2).unwrap();
        assert_eq!(p.layers, 6);
        assert_eq!(p.alpha(1), rat(1, 512));
        assert_eq!(p.alpha(6), rat(243, 16384));
        assert_eq!(p.epsilon_target, rat(1, 204_800));
        assert_eq!(p.delta(2), Rat::from_int(2) * p.alpha(2) / Rat::from_int(2));
        // The ladder's lower bound misses at n = 2 by the constant 243/32 vs
        // 8 and holds from n = 3 on; the upper bound always holds.
        assert_eq!(p.ladder_bounds(), (false, true));
        for n in 3..=6 {
            assert_eq!(ReductionParams::for_players(n).unwrap().ladder_bounds(), (true, true));
        }
    }

    #[test]
    fn build_counts_n2() {
        let (inst, _params, labels) = build_reduction(&uniform_game(2)).unwrap();
        assert_eq!(inst.m(), 24);
        assert_eq!(inst.n(), 50);
        assert_eq!(labels.agents.len(), 50);
        assert_eq!(labels.chores.len(), 24);
    }

    #[test]
    fn lemma_totals_instantiated_n2() {
        // Total endowment of b^1_2 = n + n(1 - alpha_K) = 4 - 243/8192.
        let (inst, _params, labels) = build_reduction(&uniform_game(2)).unwrap();
        let w = match &inst.model {
            Model::Exchange(w) => w,
            _ => unreachable!(),
        };
        let total_b12 = w.column_total(labels.chore_id(1, 2));
        assert_eq!(total_b12, Rat::from_int(4) - rat(243, 8192));
    }

    #[test]
    fn degenerate_single_player_rejected() {
        let game = uniform_game(1);
        assert!(matches!(
            build_reduction(&game),
            Err(ReductionError::DegenerateLayerCount)
        ));
    }

    #[test]
    fn fresh_instance_passes_all_checks() {
        let (inst, params, labels) = build_reduction(&uniform_game(2)).unwrap();
        let report = check_reduction_properties(&inst, &labels, &params);
        assert!(report.pass, "{report:?}");
        assert_eq!(report.component_count, 12);
    }

    #[test]
    fn perturbed_endowment_detected() {
        let (inst, params, labels) = build_reduction(&uniform_game(2)).unwrap();
        let mut w = match &inst.model {
            Model::Exchange(w) => w.rows().to_vec(),
            _ => unreachable!(),
        };
        w[0][0] = w[0][0].clone() + rat(1, 1000);
        let perturbed = Instance::new(
            inst.disutility.clone(),
            Model::Exchange(EndowmentMatrix::new(w, inst.n(), inst.m()).unwrap()),
            None,
        )
        .unwrap();
        let report = check_reduction_properties(&perturbed, &labels, &params);
        assert!(!report.pairwise_equal_endowments_ok);
        assert_eq!(report.offending_chore_pair, Some((0, 1)));
        assert!(!report.pass);
    }

    #[test]
    fn deleted_edge_breaks_sc2() {
        let (inst, params, labels) = build_reduction(&uniform_game(2)).unwrap();
        let mut rows: Vec<Vec<Entry<Rat>>> = inst.disutility.rows().to_vec();
        // Remove one finite edge from a layer-2 component.
        let victim = labels.chore_id(2, 1);
        let owner = (0..inst.n())
            .find(|&a| matches!(rows[a][victim], Entry::Fin(_)))
            .unwrap();
        rows[owner][victim] = Entry::Inf;
        let d = DisutilityMatrix::new(rows).unwrap();
        let w = match &inst.model {
            Model::Exchange(w) => w.clone(),
            _ => unreachable!(),
        };
        let broken = Instance::new(d, Model::Exchange(w), None).unwrap();
        let report = check_reduction_properties(&broken, &labels, &params);
        assert!(!report.sc2_ok);
        assert!(!report.pass);
    }

    #[test]
    fn extraction_boundaries() {
        let (inst, params, labels) = build_reduction(&uniform_game(2)).unwrap();
        let k = params.layers;
        let alpha_k = params.alpha(k);
        // All layer-K prices 1: x = 1/2 everywhere.
        let prices = vec![Rat::from_int(1); inst.m()];
        let ext = extract_strategy(&prices, &labels, &params).unwrap();
        assert!(ext.x.iter().all(|v| *v == rat(1, 2)));
        assert_eq!(ext.max_clamp, Rat::from_int(0));

        // Regulation boundary (1-a, 1+a): x = (0, 1); opposite flips.
        let mut prices = vec![Rat::from_int(1); inst.m()];
        prices[labels.chore_id(k, 1)] = Rat::from_int(1) - alpha_k.clone();
        prices[labels.chore_id(k, 2)] = Rat::from_int(1) + alpha_k.clone();
        let ext = extract_strategy(&prices, &labels, &params).unwrap();
        assert_eq!(ext.x[0], Rat::from_int(0));
        assert_eq!(ext.x[1], Rat::from_int(1));

        let mut prices = vec![Rat::from_int(1); inst.m()];
        prices[labels.chore_id(k, 1)] = Rat::from_int(1) + alpha_k.clone();
        prices[labels.chore_id(k, 2)] = Rat::from_int(1) - alpha_k;
        let ext = extract_strategy(&prices, &labels, &params).unwrap();
        assert_eq!(ext.x[0], Rat::from_int(1));
        assert_eq!(ext.x[1], Rat::from_int(0));
    }

    #[test]
    fn symmetric_equilibrium_roundtrip() {
        let game = uniform_game(2);
        assert!(check_symmetric_ce(&game).unwrap());
        // Extraction at unit prices feeds the game verifier.
        let (inst, params, labels) = build_reduction(&game).unwrap();
        let prices = vec![Rat::from_int(1); inst.m()];
        let ext = extract_strategy(&prices, &labels, &params).unwrap();
        let report = verify_polymatrix_ne(&game, &ext.x, &rat(1, 2), &Tol::exact()).unwrap();
        assert!(report.ok);
    }

    #[test]
    fn perturbed_price_fails_symmetric_check() {
        let game = uniform_game(2);
        let (inst, _params, labels) = build_reduction(&game).unwrap();
        let params = ReductionParams::for_players(2).unwrap();
        let mut prices = vec![Rat::from_int(1); inst.m()];
        prices[labels.chore_id(1, 1)] = rat(9, 8);
        let x = symmetric_allocation(&game, &params, &labels, inst.n(), inst.m());
        let report = verify_ce(&inst, &prices, &x, &Rat::from_int(0), &Tol::exact()).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn non_uniform_game_rejected_by_symmetric_check() {
        let mut rows = vec![vec![rat(1, 2); 4]; 4];
        rows[0][0] = rat(3, 4);
        rows[0][1] = rat(1, 4);
        let game = validate_polymatrix(rows).unwrap();
        assert!(matches!(
            check_symmetric_ce(&game),
            Err(ReductionError::NotUniform)
        ));
    }

    #[test]
    fn reverse_ratio_boundary_assignment_feasible() {
        // A layer pair at opposite regulation boundaries admits an exact
        // MPB-consistent assignment (checked as a small feasibility solve).
        let n = 2usize;
        let params = ReductionParams::for_players(n).unwrap();
        for k in 1..params.layers {
            let alpha_k = params.alpha(k);
            let alpha_up = params.alpha(k + 1);
            let delta_up = params.delta(k + 1);
            let one = Rat::from_int(1);
            let n_rat = Rat::from_int(n as i64);
            for flip in [false, true] {
                // Layer-k pair at a boundary, layer-(k+1) at the opposite one.
                let (pk_lo, pk_hi) = if flip {
                    (one.clone() - alpha_k.clone(), one.clone() + alpha_k.clone())
                } else {
                    (one.clone() + alpha_k.clone(), one.clone() - alpha_k.clone())
                };
                let (pu_lo, pu_hi) = if flip {
                    (one.clone() + alpha_up.clone(), one.clone() - alpha_up.clone())
                } else {
                    (one.clone() - alpha_up.clone(), one.clone() + alpha_up.clone())
                };
                // Agents of component D^{k+1}_i: the two chain agents of
                // layer k and the buffer. Chore "prices" carry the full
                // money supply (n + delta) p'_j; the uniform factor leaves
                // the MPB structure unchanged.
                let d = DisutilityMatrix::from_options(vec![
                    vec![
                        Some(one.clone() - alpha_up.clone()),
                        Some(one.clone() + alpha_up.clone()),
                    ],
                    vec![
                        Some(one.clone() + alpha_up.clone()),
                        Some(one.clone() - alpha_up.clone()),
                    ],
                    vec![
                        Some(one.clone() - alpha_up.clone()),
                        Some(one.clone() - alpha_up.clone()),
                    ],
                ])
                .unwrap();
                let money = vec![
                    (n_rat.clone() + delta_up.clone()) * pu_lo.clone(),
                    (n_rat.clone() + delta_up.clone()) * pu_hi.clone(),
                ];
                let requirements = vec![
                    n_rat.clone() * pk_lo.clone(),
                    n_rat.clone() * pk_hi.clone(),
                    delta_up.clone() * (pu_lo.clone() + pu_hi.clone()),
                ];
                let network = build_market_network(&d, &money, &Tol::exact()).unwrap();
                match max_flow(&network, Some(&requirements)) {
                    MaxFlowOutcome::Flow(_) => {}
                    MaxFlowOutcome::Infeasible => {
                        panic!("layer {k} boundary assignment infeasible (flip={flip})")
                    }
                }
            }
        }
    }
}
