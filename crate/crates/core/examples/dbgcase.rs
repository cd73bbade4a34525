use chore_market::bivalued::*;
use chore_market::gen::{generate, GenKind};
use chore_market::scalar::{Rat, Scalar};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let i: u64 = args[1].parse().unwrap();
    let n = 2 + (i % 5) as usize;
    let m = 1 + ((i * 3 + 1) % 14) as usize;
    let beta = match i % 4 {
        0 => Rat::from_int(2),
        1 => Rat::from_int(3),
        2 => Rat::ratio(3, 2),
        _ => Rat::from_int(5),
    };
    let inst = generate(&GenKind::Bivalued { beta: beta.clone() }, n, m, 500_000 + i).unwrap();
    let d = &inst.disutility;
    println!("n={n} m={m} beta={beta}");
    for r in 0..n {
        let row: Vec<String> = (0..m).map(|j| format!("{}", d.entry(r, j).as_finite().unwrap())).collect();
        println!("d[{r}] = {}", row.join(" "));
    }
    match solve_bivalued(d, &beta) {
        Ok(sol) => println!("ok transfers={} updates={}", sol.transfers, sol.price_updates),
        Err(BivaluedError::Budget { budget, transfers, price_updates, trace }) => {
            println!("BUDGET {budget}: transfers={transfers} price_updates={price_updates}");
            let mut neutral = 0;
            for ev in &trace {
                if matches!(ev, BivaluedEvent::NeutralHop { .. }) { neutral += 1; }
            }
            println!("neutral hops: {neutral}");
            println!("last 14 events:");
            let k = trace.len().saturating_sub(14);
            for ev in &trace[k..] {
                match ev {
                    BivaluedEvent::Transfer { chore, from, to, price, source_earning, least_earning } =>
                        println!("  T c{chore} {from}->{to} p={} src={} rcv={}", price.to_f64(), source_earning.to_f64(), least_earning.to_f64()),
                    BivaluedEvent::NeutralHop { chore, from, to, price, source_earning, receiver_earning } =>
                        println!("  N c{chore} {from}->{to} p={} src={} rcv={}", price.to_f64(), source_earning.to_f64(), receiver_earning.to_f64()),
                    BivaluedEvent::PriceUpdate { gamma, low_closure } =>
                        println!("  P gamma={} S={:?}", gamma.to_f64(), low_closure),
                }
            }
        }
        Err(BivaluedError::Stuck { trace }) => {
            println!("STUCK after {} events", trace.len());
            let k = trace.len().saturating_sub(10);
            for ev in &trace[k..] {
                match ev {
                    BivaluedEvent::Transfer { chore, from, to, price, .. } =>
                        println!("  T c{chore} {from}->{to} p={}", price.to_f64()),
                    BivaluedEvent::NeutralHop { chore, from, to, price, .. } =>
                        println!("  N c{chore} {from}->{to} p={}", price.to_f64()),
                    BivaluedEvent::PriceUpdate { gamma, low_closure } =>
                        println!("  P gamma={} S={:?}", gamma.to_f64(), low_closure),
                }
            }
        }
        Err(e) => println!("err {e}"),
    }
}
