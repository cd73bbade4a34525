use chore_market::bivalued::*;
use chore_market::gen::{generate, GenKind};
use chore_market::scalar::{Rat, Scalar};
use chore_market::Tol;

fn main() {
    let mut stuck = 0;
    let mut budget = 0;
    let mut ok = 0;
    let mut max_steps = 0;
    for i in 0..20000u64 {
        let n = 2 + (i % 4) as usize;          // 2..=5
        let m = 1 + ((i * 3 + 1) % 12) as usize; // 1..=12
        let beta = if i % 2 == 0 { Rat::from_int(2) } else { Rat::from_int(3) };
        let inst = generate(&GenKind::Bivalued { beta: beta.clone() }, n, m, 900_000 + i).unwrap();
        match solve_bivalued(&inst.disutility, &beta) {
            Ok(sol) => {
                ok += 1;
                let steps = sol.transfers + sol.price_updates;
                if steps > max_steps { max_steps = steps; }
                let ef1 = check_ef1(inst.disutility.rows(), &sol.allocation);
                let po = check_po_certificate(inst.disutility.rows(), &sol.certificate.prices, &sol.allocation, &Tol::exact());
                if !ef1.ok || !po.ok {
                    println!("case {i}: certificates failed ef1={} po={}", ef1.ok, po.ok);
                }
            }
            Err(BivaluedError::Stuck { .. }) => { stuck += 1; println!("case {i}: STUCK (n={n} m={m} beta={beta})"); }
            Err(BivaluedError::Budget { .. }) => { budget += 1; println!("case {i}: BUDGET (n={n} m={m} beta={beta})"); }
            Err(e) => println!("case {i}: {e}"),
        }
    }
    println!("ok={ok} stuck={stuck} budget={budget} max_steps={max_steps}");
}
