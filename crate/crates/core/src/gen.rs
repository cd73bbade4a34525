//! Seeded instance generators. Deterministic for a given seed: entries are
//! drawn row-major from a ChaCha8 stream, so equal seeds give equal
//! instances byte for byte after serialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{DisutilityMatrix, Entry, Instance, InstanceError, Model};
use crate::polymatrix::{validate_polymatrix, PolymatrixGame};
use crate::scalar::{Rat, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum GenKind {
    /// d_ij = k/100 with k uniform in [100, 1000] (rationals in [1, 10]).
    Uniform,
    /// d_ij = (1+alpha)^k with k uniform in [0, 8].
    Rounded { alpha: Rat },
    /// d_ij in {1, beta} uniform.
    Bivalued { beta: Rat },
}

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("need at least one agent and one chore")]
    BadDimensions,
    #[error("alpha must be positive")]
    BadAlpha,
    #[error("beta must be greater than 1")]
    BadBeta,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

pub fn generate(kind: &GenKind, n: usize, m: usize, seed: u64) -> Result<Instance<Rat>, GenError> {
    if n == 0 || m == 0 {
        return Err(GenError::BadDimensions);
    }
    match kind {
        GenKind::Rounded { alpha } if *alpha <= Rat::from_int(0) => return Err(GenError::BadAlpha),
        GenKind::Bivalued { beta } if *beta <= Rat::from_int(1) => return Err(GenError::BadBeta),
        _ => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(m);
        for _ in 0..m {
            let entry = match kind {
                GenKind::Uniform => Rat::ratio(rng.gen_range(100..=1000), 100),
                GenKind::Rounded { alpha } => {
                    let k: i32 = rng.gen_range(0..=8);
                    (Rat::from_int(1) + alpha.clone()).powi(k)
                }
                GenKind::Bivalued { beta } => {
                    if rng.gen_bool(0.5) {
                        Rat::from_int(1)
                    } else {
                        beta.clone()
                    }
                }
            };
            row.push(Entry::Fin(entry));
        }
        rows.push(row);
    }
    let d = DisutilityMatrix::new(rows)?;
    let alpha = match kind {
        GenKind::Rounded { alpha } => Some(alpha.clone()),
        _ => None,
    };
    Ok(Instance::new(d, Model::Ceei, alpha)?)
}

/// Random normalized polymatrix game with entries strictly inside (0, 1)
/// (pair entries k/64 and 1 - k/64, k in [1, 63]).
pub fn generate_polymatrix(n: usize, seed: u64) -> PolymatrixGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(2 * n);
    for _ in 0..2 * n {
        let mut row = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let k: i64 = rng.gen_range(1..=63);
            row.push(Rat::ratio(k, 64));
            row.push(Rat::ratio(64 - k, 64));
        }
        rows.push(row);
    }
    validate_polymatrix(rows).expect("construction is normalized")
}
