//! Discrete chore division for bivalued disutilities d_ij in {1, beta}:
//! an integral allocation that is EF1 and PO, certified by competitive
//! prices (every owned chore on its owner's MPB ratio, which implies
//! fractional Pareto optimality).
//!
//! The solve starts from the trivial competitive equilibrium (each chore to
//! an argmin-disutility agent at price min_i d_ij) and repeats: if pEF1
//! holds, stop; else transfer an MPB-reachable chore from a strictly richer
//! owner to the least earner whenever the move raises the earning product
//! (p_c < p(x_src) − p(x_least), automatic for the big earner when pEF1
//! fails); else decrease the prices of the MPB closure of the least earners
//! until a new MPB edge leaves it. The product of disutilities never
//! decreases, is invariant across price updates, and strictly increases at
//! every transfer between positive earners.

use thiserror::Error;

use crate::instance::{DisutilityMatrix, Entry};
use crate::mpb::mpb_structure;
use crate::scalar::{total, Rat, Scalar, Tol};

/// Chore -> agent ownership map; every chore owned by exactly one agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralAllocation {
    pub owner: Vec<usize>,
}

impl IntegralAllocation {
    pub fn bundle(&self, agent: usize) -> Vec<usize> {
        (0..self.owner.len()).filter(|&j| self.owner[j] == agent).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PriceCertificate<T> {
    pub prices: Vec<T>,
}

/// Sum of entries where infinities are counted symbolically.
#[derive(Clone, Debug, PartialEq)]
struct ExtSum<T> {
    inf: usize,
    fin: T,
}

impl<T: Scalar> ExtSum<T> {
    fn zero() -> Self {
        ExtSum { inf: 0, fin: T::zero() }
    }

    fn add(&mut self, e: &Entry<T>) {
        match e {
            Entry::Fin(v) => self.fin = self.fin.clone() + v.clone(),
            Entry::Inf => self.inf += 1,
        }
    }

    fn le(&self, other: &Self) -> bool {
        self.inf < other.inf || (self.inf == other.inf && self.fin <= other.fin)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ef1Report {
    pub ok: bool,
    /// First ordered pair (envious, envied) violating the EF1 inequality.
    pub witness: Option<(usize, usize)>,
}

/// EF1 for any additive disutilities: for every ordered pair (i, i'),
/// removing i's largest-disutility chore from its own bundle brings
/// D_i(x_i) down to at most D_i(x_{i'}). Empty bundles pass vacuously.
pub fn check_ef1<T: Scalar>(rows: &[Vec<Entry<T>>], x: &IntegralAllocation) -> Ef1Report {
    let n = rows.len();
    for i in 0..n {
        let bundle = x.bundle(i);
        if bundle.is_empty() {
            continue;
        }
        // D_i(x_i) minus its largest term (infinite entries dominate).
        let mut own = ExtSum::<T>::zero();
        for &c in &bundle {
            own.add(&rows[i][c]);
        }
        let mut reduced = own.clone();
        if reduced.inf > 0 {
            reduced.inf -= 1;
        } else {
            let largest = bundle
                .iter()
                .filter_map(|&c| rows[i][c].as_finite())
                .cloned()
                .reduce(|a, b| if b > a { b } else { a })
                .expect("nonempty finite bundle");
            reduced.fin = reduced.fin - largest;
        }
        for other in 0..n {
            if other == i {
                continue;
            }
            let mut theirs = ExtSum::<T>::zero();
            for &c in &x.bundle(other) {
                theirs.add(&rows[i][c]);
            }
            if !reduced.le(&theirs) {
                return Ef1Report {
                    ok: false,
                    witness: Some((i, other)),
                };
            }
        }
    }
    Ef1Report { ok: true, witness: None }
}

/// pEF1 in price terms: the big earner b (maximum earning after removing its
/// highest-priced chore) must not out-earn the least earner l even after
/// that removal. Empty bundles have removal earning 0.
pub fn check_pef1<T: Scalar>(n_agents: usize, prices: &[T], x: &IntegralAllocation) -> bool {
    let earning = |i: usize| -> T { total(x.bundle(i).iter().map(|&c| prices[c].clone())) };
    let removal = |i: usize| -> T {
        let bundle = x.bundle(i);
        match bundle
            .iter()
            .map(|&c| prices[c].clone())
            .reduce(|a, b| if b > a { b } else { a })
        {
            Some(top) => earning(i) - top,
            None => T::zero(),
        }
    };
    let big = (0..n_agents)
        .map(removal)
        .reduce(|a, b| if b > a { b } else { a })
        .unwrap_or_else(T::zero);
    let least = (0..n_agents)
        .map(earning)
        .reduce(|a, b| if b < a { b } else { a })
        .unwrap_or_else(T::zero);
    big <= least
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoReport {
    pub ok: bool,
    /// First owned pair (agent, chore) off the owner's MPB ratio.
    pub witness: Option<(usize, usize)>,
}

/// A true verdict certifies fractional Pareto optimality (hence PO): every
/// owned pair sits exactly on its owner's minimum pain per buck.
pub fn check_po_certificate<T: Scalar>(
    rows: &[Vec<Entry<T>>],
    prices: &[T],
    x: &IntegralAllocation,
    tol: &Tol<T>,
) -> PoReport {
    for (c, &i) in x.owner.iter().enumerate() {
        let dic = match &rows[i][c] {
            Entry::Fin(v) => v.clone(),
            Entry::Inf => {
                return PoReport { ok: false, witness: Some((i, c)) };
            }
        };
        let mut mpb: Option<T> = None;
        for (j, e) in rows[i].iter().enumerate() {
            if let Entry::Fin(v) = e {
                let r = v.clone() / prices[j].clone();
                if mpb.as_ref().map_or(true, |m| r < *m) {
                    mpb = Some(r);
                }
            }
        }
        let mpb = mpb.expect("owner has a finite entry");
        let ratio = dic / prices[c].clone();
        if !tol.within_rel_of_min(&ratio, &mpb) {
            return PoReport { ok: false, witness: Some((i, c)) };
        }
    }
    PoReport { ok: true, witness: None }
}

#[derive(Clone, Debug)]
pub enum BivaluedEvent {
    Transfer {
        chore: usize,
        from: usize,
        to: usize,
        price: Rat,
        /// p(x_from) and p(x_to) before the move; price < from − to exactly.
        source_earning: Rat,
        least_earning: Rat,
    },
    /// Product-neutral enabling hop: price == p(x_from) − p(x_to) exactly, so
    /// the earning product is preserved while the receiver's earning rises,
    /// unlocking a strict transfer toward the least earner.
    NeutralHop {
        chore: usize,
        from: usize,
        to: usize,
        price: Rat,
        source_earning: Rat,
        receiver_earning: Rat,
    },
    PriceUpdate { gamma: Rat, low_closure: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct BivaluedSolution {
    pub allocation: IntegralAllocation,
    pub certificate: PriceCertificate<Rat>,
    pub transfers: usize,
    pub price_updates: usize,
    pub events: Vec<BivaluedEvent>,
    /// Product of disutilities after each event (same length as `events`).
    pub potentials: Vec<Rat>,
}

#[derive(Debug, Error)]
pub enum BivaluedError {
    #[error("entry at agent {agent}, chore {chore} is not in {{1, beta}}")]
    NotBivalued { agent: usize, chore: usize },
    #[error("beta must be a rational strictly greater than 1")]
    BadBeta,
    #[error("loop budget of {budget} steps exhausted; {transfers} transfers, {price_updates} price updates done")]
    Budget {
        budget: usize,
        transfers: usize,
        price_updates: usize,
        trace: Vec<BivaluedEvent>,
    },
    #[error("no transfer available and Gamma(S) covers all chores; instance stuck")]
    Stuck { trace: Vec<BivaluedEvent> },
    #[error("potential law violated: {0}")]
    PotentialLaw(String),
}

fn bundle_price(prices: &[Rat], x: &IntegralAllocation, agent: usize) -> Rat {
    total(x.bundle(agent).iter().map(|&c| prices[c].clone()))
}

fn disutility_product(d: &DisutilityMatrix<Rat>, x: &IntegralAllocation) -> Rat {
    let mut prod = Rat::from_int(1);
    for i in 0..d.n() {
        let mut di = Rat::from_int(0);
        for &c in &x.bundle(i) {
            if let Entry::Fin(v) = d.entry(i, c) {
                di = di + v.clone();
            }
        }
        prod = prod * di;
    }
    prod
}

/// EF1 + PO integral allocation for a bivalued instance, with the price
/// certificate that proves PO. Exact rational arithmetic throughout.
pub fn solve_bivalued(d: &DisutilityMatrix<Rat>, beta: &Rat) -> Result<BivaluedSolution, BivaluedError> {
    let one = Rat::from_int(1);
    if *beta <= one {
        return Err(BivaluedError::BadBeta);
    }
    let (n, m) = (d.n(), d.m());
    for i in 0..n {
        for j in 0..m {
            match d.entry(i, j) {
                Entry::Fin(v) if *v == one || v == beta => {}
                _ => return Err(BivaluedError::NotBivalued { agent: i, chore: j }),
            }
        }
    }

    // Trivial CE: each chore to an argmin-disutility agent (ties by index)
    // at price min_i d_ij; every owner sits on MPB ratio 1.
    let mut prices: Vec<Rat> = Vec::with_capacity(m);
    let mut owner: Vec<usize> = Vec::with_capacity(m);
    for j in 0..m {
        let mut best: Option<(Rat, usize)> = None;
        for i in 0..n {
            if let Entry::Fin(v) = d.entry(i, j) {
                if best.as_ref().map_or(true, |(b, _)| v < b) {
                    best = Some((v.clone(), i));
                }
            }
        }
        let (p, i) = best.expect("bivalued matrix is all finite");
        prices.push(p);
        owner.push(i);
    }
    let mut x = IntegralAllocation { owner };

    // Convergence is polynomial in n, m and 1/(beta-1); generous constant.
    let gap = beta.clone() - one.clone();
    let gap_sq_inv = (one.clone() / (gap.clone() * gap)).to_f64().ceil().max(1.0) as usize;
    let budget = 64 * n * m * (n + m) * gap_sq_inv;

    let tol = Tol::<Rat>::exact();
    let mut events: Vec<BivaluedEvent> = Vec::new();
    let mut potentials: Vec<Rat> = Vec::new();
    let mut transfers = 0usize;
    let mut price_updates = 0usize;
    let mut last_potential = disutility_product(d, &x);
    // Reversal guard for neutral hops: (chore, from, to) of the last one.
    let mut last_neutral: Option<(usize, usize, usize)> = None;
    // Price updates without an interleaved move can cycle (the least-earner
    // closure may alternate between groups whose updates undo each other in
    // relative-price space); after 2m consecutive updates force a move.
    let mut consecutive_updates = 0usize;

    loop {
        if transfers + price_updates > budget {
            return Err(BivaluedError::Budget {
                budget,
                transfers,
                price_updates,
                trace: events,
            });
        }
        if check_pef1(n, &prices, &x) {
            break;
        }
        let earnings: Vec<Rat> = (0..n).map(|i| bundle_price(&prices, &x, i)).collect();
        let mpb = mpb_structure(d, &prices, &tol).expect("positive prices");
        // Serve the most constrained agent first: among the minimum earners,
        // the one with the fewest MPB options picks before the flexible
        // ones. A wide-MPB agent absorbing a scarce chore (one that a
        // narrow-MPB agent uniquely depends on) can wedge the market.
        let least = (0..n)
            .min_by(|&a, &b| {
                earnings[a]
                    .cmp(&earnings[b])
                    .then(mpb.agent_edges[a].len().cmp(&mpb.agent_edges[b].len()))
                    .then(a.cmp(&b))
            })
            .expect("nonempty agent set");

        // Best beneficial transfer to `rcv`: a chore MPB-reachable by rcv,
        // owned by a strictly richer agent, cheap enough that the earning
        // product strictly increases. Two damping rules keep the greedy
        // loop out of dead ends:
        //  - scarcity first: prefer the chore the fewest agents can do at
        //    MPB (a widely doable chore grabbed early can starve the one
        //    agent that uniquely depends on it), then highest price, then
        //    lowest index;
        //  - non-crossing moves (receiver stays at or below the source,
        //    p_c <= gap/2) are preferred over ones where the receiver
        //    overtakes the source and ends up with a lopsided bundle.
        let candidate_for = |rcv: usize, allow_crossing: bool| -> Option<usize> {
            let mut pick: Option<(usize, usize)> = None; // (capable count, chore)
            for &c in &mpb.agent_edges[rcv] {
                let src = x.owner[c];
                if src == rcv || earnings[src] <= earnings[rcv] {
                    continue;
                }
                let gap = earnings[src].clone() - earnings[rcv].clone();
                if prices[c] >= gap {
                    continue;
                }
                if !allow_crossing && prices[c].clone() * Rat::from_int(2) > gap {
                    continue;
                }
                let capable = mpb.chore_edges[c].len();
                let better = match pick {
                    None => true,
                    Some((cur_cap, cur)) => {
                        capable < cur_cap
                            || (capable == cur_cap
                                && (prices[c] > prices[cur]
                                    || (prices[c] == prices[cur] && c < cur)))
                    }
                };
                if better {
                    pick = Some((capable, c));
                }
            }
            pick.map(|(_, c)| c)
        };

        let mut transfer: Option<(usize, usize)> = candidate_for(least, false).map(|c| (c, least));

        if transfer.is_none() {
            // Price update on the MPB closure of the least earner: grow S
            // until no outside agent owns a chore that is MPB for S, so the
            // decrease cannot break any owner's MPB consistency.
            let mut in_s = vec![false; n];
            in_s[least] = true;
            loop {
                let mut grew = false;
                for c in 0..m {
                    let o = x.owner[c];
                    if !in_s[o] && mpb.chore_edges[c].iter().any(|&i| in_s[i]) {
                        in_s[o] = true;
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
            let closure: Vec<usize> = (0..n).filter(|&i| in_s[i]).collect();
            let gamma_s = mpb.gamma(&closure);
            if gamma_s.len() < m && consecutive_updates < 2 * m {
                let mut in_gamma = vec![false; m];
                for &j in &gamma_s {
                    in_gamma[j] = true;
                }
                let mut gamma: Option<Rat> = None;
                for &i in &closure {
                    let mpb_i = mpb.mpb[i].clone().expect("all finite");
                    for j in 0..m {
                        if in_gamma[j] {
                            continue;
                        }
                        if let Entry::Fin(dij) = d.entry(i, j) {
                            let ratio = mpb_i.clone() * prices[j].clone() / dij.clone();
                            if gamma.as_ref().map_or(true, |g| ratio > *g) {
                                gamma = Some(ratio);
                            }
                        }
                    }
                }
                let gamma = gamma.expect("some pair leaves Gamma(S)");
                debug_assert!(gamma < one);
                for &j in &gamma_s {
                    prices[j] = prices[j].clone() * gamma.clone();
                }
                price_updates += 1;
                consecutive_updates += 1;
                events.push(BivaluedEvent::PriceUpdate {
                    gamma,
                    low_closure: closure,
                });
                let pot = disutility_product(d, &x);
                if pot != last_potential {
                    return Err(BivaluedError::PotentialLaw(
                        "disutility product changed across a price update".into(),
                    ));
                }
                potentials.push(pot);

                // Owner certificate must survive the decrease.
                let check = check_po_certificate(d.rows(), &prices, &x, &tol);
                if !check.ok {
                    return Err(BivaluedError::PotentialLaw(format!(
                        "price update broke the MPB certificate at {:?}",
                        check.witness
                    )));
                }
                continue;
            }
            // Gamma(S) covers all chores, so no price can move. Any strict
            // transfer (poorest receiver first, non-crossing preferred)
            // still raises the earning product and is therefore safe
            // progress; failing that, a single product-neutral hop (price
            // exactly equal to the earning gap) raises some agent's earning
            // and turns a boundary candidate strict on a later round.
            let mut members: Vec<usize> = (0..n).collect();
            members.sort_by(|&a, &b| earnings[a].cmp(&earnings[b]).then(a.cmp(&b)));
            for allow_crossing in [false, true] {
                for &rcv in &members {
                    if let Some(c) = candidate_for(rcv, allow_crossing) {
                        transfer = Some((c, rcv));
                        break;
                    }
                }
                if transfer.is_some() {
                    break;
                }
            }
            if transfer.is_none() {
                // Neutral hop into the poorest receiver possible, skipping
                // the exact reverse of the previous neutral hop. A hop is
                // taken only when the post-hop earnings admit a strict
                // transfer somewhere — purposeless hops cycle.
                let enables_strict = |c_hop: usize, to: usize| -> bool {
                    let from = x.owner[c_hop];
                    let mut e2 = earnings.clone();
                    e2[to] = e2[to].clone() + prices[c_hop].clone();
                    e2[from] = e2[from].clone() - prices[c_hop].clone();
                    for rcv2 in 0..n {
                        for &c2 in &mpb.agent_edges[rcv2] {
                            let src2 = if c2 == c_hop { to } else { x.owner[c2] };
                            if src2 == rcv2 || e2[src2] <= e2[rcv2] {
                                continue;
                            }
                            if prices[c2] < e2[src2].clone() - e2[rcv2].clone() {
                                return true;
                            }
                        }
                    }
                    false
                };
                let mut hop: Option<(usize, usize)> = None;
                'members: for &rcv in &members {
                    let mut pick: Option<usize> = None;
                    for &c in &mpb.agent_edges[rcv] {
                        let src = x.owner[c];
                        if src == rcv
                            || earnings[src] <= earnings[rcv]
                            || prices[c] != earnings[src].clone() - earnings[rcv].clone()
                        {
                            continue;
                        }
                        if last_neutral == Some((c, rcv, src)) {
                            continue;
                        }
                        if !enables_strict(c, rcv) {
                            continue;
                        }
                        let better = match pick {
                            None => true,
                            Some(cur) => {
                                prices[c] > prices[cur] || (prices[c] == prices[cur] && c < cur)
                            }
                        };
                        if better {
                            pick = Some(c);
                        }
                    }
                    if let Some(c) = pick {
                        hop = Some((c, rcv));
                        break 'members;
                    }
                }
                match hop {
                    Some((c, rcv)) => {
                        let src = x.owner[c];
                        events.push(BivaluedEvent::NeutralHop {
                            chore: c,
                            from: src,
                            to: rcv,
                            price: prices[c].clone(),
                            source_earning: earnings[src].clone(),
                            receiver_earning: earnings[rcv].clone(),
                        });
                        last_neutral = Some((c, src, rcv));
                        x.owner[c] = rcv;
                        transfers += 1;
                        consecutive_updates = 0;
                        let pot = disutility_product(d, &x);
                        if pot != last_potential {
                            return Err(BivaluedError::PotentialLaw(
                                "disutility product changed across a neutral hop".into(),
                            ));
                        }
                        potentials.push(pot);
                        continue;
                    }
                    None => return Err(BivaluedError::Stuck { trace: events }),
                }
            }
        }

        let (c, rcv) = transfer.expect("checked above");
        let src = x.owner[c];
        // Exact transfer-step inequality: p_c < p(x_src) - p(x_rcv), hence
        // the pairwise earning product strictly increases.
        let before = earnings[src].clone() * earnings[rcv].clone();
        let after =
            (earnings[src].clone() - prices[c].clone()) * (earnings[rcv].clone() + prices[c].clone());
        if before >= after {
            return Err(BivaluedError::PotentialLaw(format!(
                "transfer of chore {c} does not raise the earning product"
            )));
        }
        events.push(BivaluedEvent::Transfer {
            chore: c,
            from: src,
            to: rcv,
            price: prices[c].clone(),
            source_earning: earnings[src].clone(),
            least_earning: earnings[rcv].clone(),
        });
        x.owner[c] = rcv;
        transfers += 1;
        consecutive_updates = 0;
        let pot = disutility_product(d, &x);
        if pot < last_potential {
            return Err(BivaluedError::PotentialLaw(
                "disutility product decreased at a transfer".into(),
            ));
        }
        last_potential = pot.clone();
        potentials.push(pot);
    }

    Ok(BivaluedSolution {
        allocation: x,
        certificate: PriceCertificate { prices },
        transfers,
        price_updates,
        events,
        potentials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::ratio(n, d)
    }

    fn matrix(rows: Vec<Vec<i64>>) -> DisutilityMatrix<Rat> {
        DisutilityMatrix::from_options(
            rows.into_iter()
                .map(|r| r.into_iter().map(|v| Some(Rat::from_int(v))).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ef1_direct_evaluation() {
        let d = matrix(vec![vec![1, 2, 2], vec![2, 1, 1]]);
        let x = IntegralAllocation { owner: vec![0, 1, 1] };
        assert!(check_ef1(d.rows(), &x).ok);
    }

    #[test]
    fn ef1_envy_beyond_one_chore() {
        // Both chores to agent 1: removing one still leaves 1 > 0 = D_1(x_2).
        let d = matrix(vec![vec![1, 1], vec![1, 1]]);
        let x = IntegralAllocation { owner: vec![0, 0] };
        let r = check_ef1(d.rows(), &x);
        assert!(!r.ok);
        assert_eq!(r.witness, Some((0, 1)));
    }

    #[test]
    fn ef1_single_agent_vacuous() {
        let d = matrix(vec![vec![1, 2]]);
        let x = IntegralAllocation { owner: vec![0, 0] };
        assert!(check_ef1(d.rows(), &x).ok);
    }

    #[test]
    fn pef1_arithmetic() {
        let p = vec![rat(1, 1), rat(1, 1), rat(1, 1)];
        let x = IntegralAllocation { owner: vec![0, 1, 1] };
        assert!(check_pef1(2, &p, &x));
        let x = IntegralAllocation { owner: vec![0, 0, 0] };
        assert!(!check_pef1(2, &p, &x));
        // One chore total: removal earning 0 <= anything.
        let p = vec![rat(5, 1)];
        let x = IntegralAllocation { owner: vec![0] };
        assert!(check_pef1(2, &p, &x));
    }

    #[test]
    fn po_certificate_trivial_ce_and_perturbation() {
        let d = matrix(vec![vec![1, 2, 2], vec![2, 1, 1]]);
        let p = vec![rat(1, 1), rat(1, 1), rat(1, 1)];
        let good = IntegralAllocation { owner: vec![0, 1, 1] };
        assert!(check_po_certificate(d.rows(), &p, &good, &Tol::exact()).ok);
        // Swapping c1 and c2 across agents breaks both MPB ratios.
        let bad = IntegralAllocation { owner: vec![1, 0, 1] };
        let r = check_po_certificate(d.rows(), &p, &bad, &Tol::exact());
        assert!(!r.ok);
        assert_eq!(r.witness, Some((1, 0)));
    }

    #[test]
    fn po_certificate_empty_allocation_vacuous() {
        let rows: Vec<Vec<Entry<Rat>>> = vec![vec![], vec![]];
        let x = IntegralAllocation { owner: vec![] };
        assert!(check_po_certificate(&rows, &[], &x, &Tol::exact()).ok);
    }

    #[test]
    fn solve_trivial_ce_already_pef1() {
        let d = matrix(vec![vec![1, 2, 2], vec![2, 1, 1]]);
        let sol = solve_bivalued(&d, &Rat::from_int(2)).unwrap();
        assert_eq!(sol.allocation.owner, vec![0, 1, 1]);
        assert_eq!(sol.certificate.prices, vec![rat(1, 1), rat(1, 1), rat(1, 1)]);
        assert_eq!(sol.transfers, 0);
        assert!(check_ef1(d.rows(), &sol.allocation).ok);
        assert!(check_po_certificate(d.rows(), &sol.certificate.prices, &sol.allocation, &Tol::exact()).ok);
    }

    #[test]
    fn solve_all_ones() {
        let d = matrix(vec![vec![1, 1], vec![1, 1]]);
        let sol = solve_bivalued(&d, &Rat::from_int(3)).unwrap();
        // One chore each at unit prices.
        let mut counts = vec![0; 2];
        for &o in &sol.allocation.owner {
            counts[o] += 1;
        }
        assert_eq!(counts, vec![1, 1]);
        assert_eq!(sol.certificate.prices, vec![rat(1, 1), rat(1, 1)]);
    }

    #[test]
    fn solve_single_chore() {
        let d = matrix(vec![vec![1], vec![2]]);
        let sol = solve_bivalued(&d, &Rat::from_int(2)).unwrap();
        assert_eq!(sol.allocation.owner, vec![0]);
        assert_eq!(sol.certificate.prices, vec![rat(1, 1)]);
        assert!(check_ef1(d.rows(), &sol.allocation).ok);
    }

    #[test]
    fn non_bivalued_rejected() {
        let d = matrix(vec![vec![1, 3], vec![2, 1]]);
        assert!(matches!(
            solve_bivalued(&d, &Rat::from_int(2)),
            Err(BivaluedError::NotBivalued { .. })
        ));
    }

    #[test]
    fn transfer_chain_terminates_with_certificates() {
        // All chores initially cheapest for agent 0.
        let d = matrix(vec![
            vec![1, 1, 1, 1, 1, 1],
            vec![2, 2, 2, 2, 2, 2],
            vec![2, 2, 1, 1, 2, 2],
        ]);
        let sol = solve_bivalued(&d, &Rat::from_int(2)).unwrap();
        assert!(check_ef1(d.rows(), &sol.allocation).ok);
        assert!(check_po_certificate(d.rows(), &sol.certificate.prices, &sol.allocation, &Tol::exact()).ok);
        assert!(check_pef1(3, &sol.certificate.prices, &sol.allocation));
        // Every logged transfer satisfied the exact inequality.
        for ev in &sol.events {
            if let BivaluedEvent::Transfer { price, source_earning, least_earning, .. } = ev {
                assert!(price.clone() < source_earning.clone() - least_earning.clone());
            }
        }
    }
}
