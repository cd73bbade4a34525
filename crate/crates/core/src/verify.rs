//! Independent certification of competitive equilibria. The verifier
//! recomputes the MPB structure from scratch and never trusts solver-carried
//! edge sets. Conditions checked: complete allocation, consumption only on
//! MPB chores, and earnings within (1±eps) of each agent's requirement
//! (1 for CEEI after internal normalization, the endowment value for
//! exchange). The structural tolerance tau and the approximation quality
//! eps are deliberately separate knobs.

use thiserror::Error;

use crate::instance::{DisutilityMatrix, Entry, Instance, Model};
use crate::mpb::mpb_structure;
use crate::scalar::{total, Scalar, Tol};
use crate::solver::normalize_prices;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("allocation shape does not match the instance")]
    AllocationShape,
    #[error("price vector length {got} does not match chore count {expected}")]
    PriceLength { expected: usize, got: usize },
    #[error("price of chore {chore} is zero or negative")]
    NonPositivePrice { chore: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum NashWelfareError {
    #[error("agent {agent} consumes chore {chore} with infinite disutility")]
    InfiniteConsumption { agent: usize, chore: usize },
    #[error("allocation shape does not match the matrix")]
    AllocationShape,
}

/// Product of agent disutilities with a log-space companion (the product
/// overflows f64 quickly); zero disutility agents are flagged, not errors.
#[derive(Clone, Debug)]
pub struct NashWelfare<T> {
    pub value: T,
    /// Natural log of the product; `None` when some factor is zero.
    pub ln: Option<f64>,
    pub zero_agents: Vec<usize>,
}

pub fn nash_welfare<T: Scalar>(
    d: &DisutilityMatrix<T>,
    x: &[Vec<T>],
) -> Result<NashWelfare<T>, NashWelfareError> {
    if x.len() != d.n() || x.iter().any(|row| row.len() != d.m()) {
        return Err(NashWelfareError::AllocationShape);
    }
    let mut value = T::one();
    let mut ln_sum = 0.0f64;
    let mut zero_agents = Vec::new();
    for i in 0..d.n() {
        let mut di = T::zero();
        for j in 0..d.m() {
            if x[i][j] > T::zero() {
                match d.entry(i, j) {
                    Entry::Fin(v) => di = di + v.clone() * x[i][j].clone(),
                    Entry::Inf => {
                        return Err(NashWelfareError::InfiniteConsumption { agent: i, chore: j })
                    }
                }
            }
        }
        if di.is_zero() {
            zero_agents.push(i);
        } else {
            ln_sum += di.to_f64().ln();
        }
        value = value * di;
    }
    let ln = zero_agents.is_empty().then_some(ln_sum);
    Ok(NashWelfare {
        value,
        ln,
        zero_agents,
    })
}

/// Per-agent money earned: e_i = sum_j x_ij p_j.
pub fn earnings<T: Scalar>(x: &[Vec<T>], prices: &[T]) -> Vec<T> {
    x.iter()
        .map(|row| total(row.iter().zip(prices).map(|(xi, p)| xi.clone() * p.clone())))
        .collect()
}

#[derive(Clone, Debug)]
pub struct CeReport<T> {
    pub complete_allocation_ok: bool,
    pub max_chore_deficit: T,
    pub mpb_ok: bool,
    pub worst_mpb_pair: Option<(usize, usize)>,
    /// Worst relative slack (d_ij/p_j)/MPB_i − 1 over consumed pairs.
    pub mpb_ratio_slack: T,
    /// Consumption on an infinite-disutility entry, if any.
    pub infinite_consumption: Option<(usize, usize)>,
    pub earning_ok: bool,
    /// e_i / requirement_i per agent (1 when both are zero).
    pub earning_ratios: Vec<T>,
    pub epsilon_achieved: T,
    /// `None` when the allocation consumes an infinite entry.
    pub nash_welfare: Option<NashWelfare<T>>,
    pub pass: bool,
}

/// Check a price/allocation pair against the three equilibrium conditions at
/// approximation quality `epsilon`. CEEI prices are normalized internally to
/// sum to n, so price vectors at any scale verify identically; exchange
/// requirements scale with the prices and need no normalization.
pub fn verify_ce<T: Scalar>(
    instance: &Instance<T>,
    prices: &[T],
    x: &[Vec<T>],
    epsilon: &T,
    tol: &Tol<T>,
) -> Result<CeReport<T>, VerifyError> {
    let d = &instance.disutility;
    let (n, m) = (d.n(), d.m());
    if prices.len() != m {
        return Err(VerifyError::PriceLength {
            expected: m,
            got: prices.len(),
        });
    }
    if x.len() != n || x.iter().any(|row| row.len() != m) {
        return Err(VerifyError::AllocationShape);
    }
    for (j, p) in prices.iter().enumerate() {
        if *p <= T::zero() {
            return Err(VerifyError::NonPositivePrice { chore: j });
        }
    }
    let prices: Vec<T> = match &instance.model {
        Model::Ceei => normalize_prices(prices, n),
        Model::Exchange(_) => prices.to_vec(),
    };

    // (1) Complete allocation: column sums equal the chore supply.
    let mut complete_allocation_ok = true;
    let mut max_chore_deficit = T::zero();
    for j in 0..m {
        let supply = match &instance.model {
            Model::Ceei => T::one(),
            Model::Exchange(w) => w.column_total(j),
        };
        let col = total((0..n).map(|i| x[i][j].clone()));
        let deficit = (col - supply).abs();
        if deficit > max_chore_deficit {
            max_chore_deficit = deficit.clone();
        }
        if !tol.eq_abs(&deficit, &T::zero()) {
            complete_allocation_ok = false;
        }
    }

    // (2) Consume best chores only, against a freshly computed MPB structure.
    let mpb = mpb_structure(d, &prices, tol).map_err(|e| match e {
        crate::mpb::MpbError::NonPositivePrice { chore } => VerifyError::NonPositivePrice { chore },
        crate::mpb::MpbError::PriceLength { expected, got } => {
            VerifyError::PriceLength { expected, got }
        }
    })?;
    let mut mpb_ok = true;
    let mut worst_mpb_pair = None;
    let mut mpb_ratio_slack = T::zero();
    let mut infinite_consumption = None;
    for i in 0..n {
        for j in 0..m {
            if x[i][j] <= T::flow_eps() {
                continue;
            }
            match d.entry(i, j) {
                Entry::Inf => {
                    mpb_ok = false;
                    if infinite_consumption.is_none() {
                        infinite_consumption = Some((i, j));
                        worst_mpb_pair = Some((i, j));
                    }
                }
                Entry::Fin(v) => {
                    let floor = mpb.mpb[i].clone().expect("agent with consumption has a finite row");
                    let ratio = v.clone() / prices[j].clone();
                    let slack = ratio.clone() / floor.clone() - T::one();
                    if slack > mpb_ratio_slack {
                        mpb_ratio_slack = slack;
                        worst_mpb_pair = Some((i, j));
                    }
                    if !tol.within_rel_of_min(&ratio, &floor) {
                        mpb_ok = false;
                    }
                }
            }
        }
    }

    // (3) Approximate earning against the model's requirement.
    let e = earnings(x, &prices);
    let mut earning_ok = true;
    let mut earning_ratios = Vec::with_capacity(n);
    let mut epsilon_achieved = T::zero();
    for i in 0..n {
        let req = match &instance.model {
            Model::Ceei => T::one(),
            Model::Exchange(w) => total(
                (0..m).map(|j| w.amount(i, j).clone() * prices[j].clone()),
            ),
        };
        if req.is_zero() {
            // Nothing owed; the agent must earn nothing.
            earning_ratios.push(T::one());
            if !tol.eq_abs(&e[i], &T::zero()) {
                earning_ok = false;
            }
            continue;
        }
        let ratio = e[i].clone() / req.clone();
        let gap = (ratio.clone() - T::one()).abs();
        if gap > epsilon_achieved {
            epsilon_achieved = gap;
        }
        let lo = (T::one() - epsilon.clone()) * req.clone();
        let hi = (T::one() + epsilon.clone()) * req;
        if e[i] < lo || e[i] > hi {
            earning_ok = false;
        }
        earning_ratios.push(ratio);
    }

    let nash = nash_welfare(d, x).ok();
    let pass = complete_allocation_ok && mpb_ok && earning_ok;
    Ok(CeReport {
        complete_allocation_ok,
        max_chore_deficit,
        mpb_ok,
        worst_mpb_pair,
        mpb_ratio_slack,
        infinite_consumption,
        earning_ok,
        earning_ratios,
        epsilon_achieved,
        nash_welfare: nash,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::DisutilityMatrix;
    use crate::scalar::Rat;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::ratio(n, d)
    }

    fn three_chore() -> Instance<Rat> {
        let d = DisutilityMatrix::from_options(vec![
            vec![Some(Rat::from_int(1)), Some(Rat::from_int(1)), Some(Rat::from_int(2))],
            vec![Some(Rat::from_int(2)), Some(Rat::from_int(2)), Some(Rat::from_int(1))],
        ])
        .unwrap();
        Instance::ceei(d).unwrap()
    }

    fn hand_allocation() -> Vec<Vec<Rat>> {
        // agent 1: c1 + 1/4 c2; agent 2: 3/4 c2 + c3.
        vec![
            vec![rat(1, 1), rat(1, 4), rat(0, 1)],
            vec![rat(0, 1), rat(3, 4), rat(1, 1)],
        ]
    }

    #[test]
    fn hand_trace_passes_exactly() {
        let inst = three_chore();
        let p = vec![rat(4, 5), rat(4, 5), rat(2, 5)];
        let report =
            verify_ce(&inst, &p, &hand_allocation(), &Rat::from_int(0), &Tol::exact()).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.epsilon_achieved, Rat::from_int(0));
        assert_eq!(
            report.nash_welfare.as_ref().unwrap().value,
            rat(5, 4) * rat(5, 2) // D_1 = 5/4, D_2 = 3/4·2 + 1 = 5/2
        );
    }

    #[test]
    fn wrong_prices_fail_mpb_condition() {
        let inst = three_chore();
        let p = vec![rat(1, 1), rat(1, 1), rat(1, 1)];
        let report =
            verify_ce(&inst, &p, &hand_allocation(), &Rat::from_int(0), &Tol::exact()).unwrap();
        assert!(!report.pass);
        assert!(!report.mpb_ok);
        // Agent 2 consumes c2 at ratio 2 while its MPB is 1.
        assert_eq!(report.worst_mpb_pair, Some((1, 1)));
        assert_eq!(report.mpb_ratio_slack, Rat::from_int(1));
    }

    #[test]
    fn verifier_is_scale_invariant_for_ceei() {
        let inst = three_chore();
        let p: Vec<Rat> = vec![rat(4, 5), rat(4, 5), rat(2, 5)]
            .into_iter()
            .map(|v| v * Rat::from_int(7))
            .collect();
        let report =
            verify_ce(&inst, &p, &hand_allocation(), &Rat::from_int(0), &Tol::exact()).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn earnings_examples() {
        let p = vec![rat(1, 1), rat(1, 1)];
        let x = vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(1, 1)]];
        assert_eq!(earnings(&x, &p), vec![rat(1, 1), rat(1, 1)]);
        let x0 = vec![vec![rat(0, 1), rat(0, 1)], vec![rat(0, 1), rat(0, 1)]];
        assert_eq!(earnings(&x0, &p), vec![rat(0, 1), rat(0, 1)]);
        let p3 = vec![rat(1, 1), rat(1, 1), rat(1, 2)];
        let x3 = vec![
            vec![rat(1, 1), rat(1, 4), rat(0, 1)],
            vec![rat(0, 1), rat(3, 4), rat(1, 1)],
        ];
        assert_eq!(earnings(&x3, &p3), vec![rat(5, 4), rat(5, 4)]);
    }

    #[test]
    fn nash_welfare_examples() {
        let d = DisutilityMatrix::from_options(vec![
            vec![Some(Rat::from_int(1)), Some(Rat::from_int(2))],
            vec![Some(Rat::from_int(2)), Some(Rat::from_int(1))],
        ])
        .unwrap();
        let identity = vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(1, 1)]];
        let nw = nash_welfare(&d, &identity).unwrap();
        assert_eq!(nw.value, Rat::from_int(1));
        assert!(nw.zero_agents.is_empty());

        let all_to_one = vec![vec![rat(1, 1), rat(1, 1)], vec![rat(0, 1), rat(0, 1)]];
        let nw = nash_welfare(&d, &all_to_one).unwrap();
        assert_eq!(nw.value, Rat::from_int(0));
        assert_eq!(nw.zero_agents, vec![1]);
        assert!(nw.ln.is_none());
    }

    #[test]
    fn nash_welfare_rejects_infinite_consumption() {
        let d = DisutilityMatrix::from_options(vec![
            vec![Some(Rat::from_int(1)), None],
            vec![Some(Rat::from_int(1)), Some(Rat::from_int(1))],
        ])
        .unwrap();
        let x = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]];
        assert_eq!(
            nash_welfare(&d, &x).unwrap_err(),
            NashWelfareError::InfiniteConsumption { agent: 0, chore: 1 }
        );
    }

    #[test]
    fn disutility_equals_mpb_times_earning_when_mpb_holds() {
        // D_i(x_i) = MPB_i · e_i whenever condition (2) passes exactly.
        let inst = three_chore();
        let p = vec![rat(4, 5), rat(4, 5), rat(2, 5)];
        let x = hand_allocation();
        let mpb = crate::mpb::mpb_structure(&inst.disutility, &p, &Tol::exact()).unwrap();
        let e = earnings(&x, &p);
        for i in 0..2 {
            let mut di = Rat::from_int(0);
            for j in 0..3 {
                if let Entry::Fin(v) = inst.disutility.entry(i, j) {
                    di = di + v.clone() * x[i][j].clone();
                }
            }
            assert_eq!(di, mpb.mpb[i].clone().unwrap() * e[i].clone());
        }
    }
}
