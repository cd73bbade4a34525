//! Normalized polymatrix games: validation, approximate-Nash verification
//! with witnesses, and a tiny grid-search oracle for desk-scale instances.

use thiserror::Error;

use crate::scalar::{total, Rat, Scalar, Tol};

/// A 2n x 2n payoff matrix with entries in [0,1] where each row's column
/// pair (2j-1, 2j) sums to exactly 1.
#[derive(Clone, Debug, PartialEq)]
pub struct PolymatrixGame {
    pub players: usize,
    pub matrix: Vec<Vec<Rat>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PolymatrixError {
    #[error("matrix must be square with even dimension at least 2, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("entry ({row},{col}) lies outside [0,1]")]
    EntryRange { row: usize, col: usize },
    #[error("row {row}, column pair {pair} sums to {sum}, expected 1")]
    PairSum { row: usize, pair: usize, sum: String },
    #[error("strategy vector malformed: {0}")]
    MalformedStrategy(String),
    #[error("brute force oracle is limited to n <= 3, got {players}")]
    TooLarge { players: usize },
    #[error("grid step must divide 1")]
    BadGridStep,
    #[error("no grid point satisfied the equilibrium conditions")]
    NoGridEquilibrium,
}

pub fn validate_polymatrix(matrix: Vec<Vec<Rat>>) -> Result<PolymatrixGame, PolymatrixError> {
    let rows = matrix.len();
    if rows == 0 || rows % 2 != 0 || matrix.iter().any(|r| r.len() != rows) {
        let cols = matrix.first().map_or(0, |r| r.len());
        return Err(PolymatrixError::BadShape { rows, cols });
    }
    let one = Rat::from_int(1);
    let zero = Rat::from_int(0);
    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v < zero || *v > one {
                return Err(PolymatrixError::EntryRange { row: i, col: j });
            }
        }
        for pair in 0..rows / 2 {
            let sum = row[2 * pair].clone() + row[2 * pair + 1].clone();
            if sum != one {
                return Err(PolymatrixError::PairSum {
                    row: i,
                    pair,
                    sum: sum.to_string(),
                });
            }
        }
    }
    Ok(PolymatrixGame {
        players: rows / 2,
        matrix,
    })
}

/// A violated best-response implication: the better column beats the other
/// by more than the slack, yet the dominated strategy keeps positive mass.
#[derive(Clone, Debug, PartialEq)]
pub struct NeViolation {
    pub pair: usize,
    pub better_column: usize,
    pub margin: Rat,
    pub dominated_mass: Rat,
}

#[derive(Clone, Debug)]
pub struct NeReport {
    pub ok: bool,
    pub witnesses: Vec<NeViolation>,
}

fn column_value(game: &PolymatrixGame, x: &[Rat], col: usize) -> Rat {
    total(
        x.iter()
            .enumerate()
            .map(|(r, xr)| xr.clone() * game.matrix[r][col].clone()),
    )
}

/// Check the approximate-Nash implications for every strategy pair: a column
/// beating its partner by more than `slack` forces the partner's mass to 0.
pub fn verify_polymatrix_ne(
    game: &PolymatrixGame,
    x: &[Rat],
    slack: &Rat,
    tol: &Tol<Rat>,
) -> Result<NeReport, PolymatrixError> {
    let n2 = 2 * game.players;
    if x.len() != n2 {
        return Err(PolymatrixError::MalformedStrategy(format!(
            "length {} != {n2}",
            x.len()
        )));
    }
    for (k, v) in x.iter().enumerate() {
        if *v < -tol.abs.clone() {
            return Err(PolymatrixError::MalformedStrategy(format!(
                "x[{k}] is negative"
            )));
        }
    }
    let one = Rat::from_int(1);
    for pair in 0..game.players {
        let sum = x[2 * pair].clone() + x[2 * pair + 1].clone();
        if !tol.eq_abs(&sum, &one) {
            return Err(PolymatrixError::MalformedStrategy(format!(
                "pair {pair} sums to {sum}"
            )));
        }
    }
    let mut witnesses = Vec::new();
    for pair in 0..game.players {
        let left = column_value(game, x, 2 * pair);
        let right = column_value(game, x, 2 * pair + 1);
        // left column better by more than slack => right-mass must vanish.
        if left.clone() > right.clone() + slack.clone()
            && !tol.eq_abs(&x[2 * pair + 1], &Rat::from_int(0))
        {
            witnesses.push(NeViolation {
                pair,
                better_column: 2 * pair,
                margin: left.clone() - right.clone(),
                dominated_mass: x[2 * pair + 1].clone(),
            });
        }
        if right.clone() > left.clone() + slack.clone()
            && !tol.eq_abs(&x[2 * pair], &Rat::from_int(0))
        {
            witnesses.push(NeViolation {
                pair,
                better_column: 2 * pair + 1,
                margin: right - left,
                dominated_mass: x[2 * pair].clone(),
            });
        }
    }
    Ok(NeReport {
        ok: witnesses.is_empty(),
        witnesses,
    })
}

/// Grid search over the per-pair simplices, returning the first strategy
/// accepted by the verifier at slack 1/n. A 1/n-approximate equilibrium
/// always exists and a grid of step 1/(4n) leaves enough continuity margin
/// for some grid point to satisfy the strict-inequality implications.
pub fn brute_force_ne(game: &PolymatrixGame, grid_step: &Rat) -> Result<Vec<Rat>, PolymatrixError> {
    let n = game.players;
    if n > 3 {
        return Err(PolymatrixError::TooLarge { players: n });
    }
    let steps_rat = grid_step.recip();
    if !steps_rat.is_integer() || steps_rat <= Rat::from_int(0) {
        return Err(PolymatrixError::BadGridStep);
    }
    let steps = steps_rat.to_integer();
    let steps: i64 = num_traits::ToPrimitive::to_i64(&steps).ok_or(PolymatrixError::BadGridStep)?;
    let slack = Rat::ratio(1, n as i64);
    let tol = Tol::exact();
    let mut counters = vec![0i64; n];
    loop {
        let mut x = Vec::with_capacity(2 * n);
        for &k in &counters {
            let first = grid_step.clone() * Rat::from_int(k);
            x.push(first.clone());
            x.push(Rat::from_int(1) - first);
        }
        if verify_polymatrix_ne(game, &x, &slack, &tol)?.ok {
            return Ok(x);
        }
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == n {
                return Err(PolymatrixError::NoGridEquilibrium);
            }
            counters[pos] += 1;
            if counters[pos] <= steps {
                break;
            }
            counters[pos] = 0;
            pos += 1;
        }
    }
}
