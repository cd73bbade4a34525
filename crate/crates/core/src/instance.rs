//! Market data types: disutility/endowment matrices, instance validation,
//! disutility-graph structure analysis (biclique components, economy-graph
//! connectivity) and the CEEI decomposition into independently solvable
//! components.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{power_exponent, Scalar};

/// A disutility entry: strictly positive and finite, or symbolic infinity
/// (the chore cannot be assigned to the agent). Never a sentinel number.
#[derive(Clone, Debug, PartialEq)]
pub enum Entry<T> {
    Fin(T),
    Inf,
}

impl<T> Entry<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Entry::Fin(_))
    }

    pub fn as_finite(&self) -> Option<&T> {
        match self {
            Entry::Fin(v) => Some(v),
            Entry::Inf => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("instance must have at least one agent and one chore")]
    Empty,
    #[error("dimension mismatch: expected {expected} entries in row {row}, got {got}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("zero or negative disutility entry at agent {agent}, chore {chore}")]
    NonPositiveDisutility { agent: usize, chore: usize },
    #[error("chore {chore} has no finite disutility")]
    UncoveredChore { chore: usize },
    #[error("negative endowment at agent {agent}, chore {chore}")]
    NegativeEndowment { agent: usize, chore: usize },
    #[error("chore {chore} has zero total endowment")]
    ZeroEndowmentColumn { chore: usize },
    #[error("endowment dimensions do not match the disutility matrix")]
    EndowmentShape,
}

/// n×m strictly positive (or infinite) per-unit disutilities.
#[derive(Clone, Debug)]
pub struct DisutilityMatrix<T> {
    n: usize,
    m: usize,
    entries: Vec<Vec<Entry<T>>>,
}

impl<T: Scalar> DisutilityMatrix<T> {
    pub fn new(entries: Vec<Vec<Entry<T>>>) -> Result<Self, InstanceError> {
        let n = entries.len();
        if n == 0 || entries[0].is_empty() {
            return Err(InstanceError::Empty);
        }
        let m = entries[0].len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != m {
                return Err(InstanceError::DimensionMismatch {
                    row: i,
                    expected: m,
                    got: row.len(),
                });
            }
            for (j, e) in row.iter().enumerate() {
                if let Entry::Fin(v) = e {
                    if *v <= T::zero() {
                        return Err(InstanceError::NonPositiveDisutility { agent: i, chore: j });
                    }
                }
            }
        }
        for j in 0..m {
            if !entries.iter().any(|row| row[j].is_finite()) {
                return Err(InstanceError::UncoveredChore { chore: j });
            }
        }
        Ok(DisutilityMatrix { n, m, entries })
    }

    /// Convenience constructor from finite values; `None` marks infinity.
    pub fn from_options(rows: Vec<Vec<Option<T>>>) -> Result<Self, InstanceError> {
        Self::new(
            rows.into_iter()
                .map(|r| {
                    r.into_iter()
                        .map(|v| v.map_or(Entry::Inf, Entry::Fin))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, agent: usize, chore: usize) -> &Entry<T> {
        &self.entries[agent][chore]
    }

    pub fn row(&self, agent: usize) -> &[Entry<T>] {
        &self.entries[agent]
    }

    /// Largest finite entry (the matrix always has one).
    pub fn d_max(&self) -> T {
        let mut best: Option<T> = None;
        for row in &self.entries {
            for e in row {
                if let Entry::Fin(v) = e {
                    if best.as_ref().map_or(true, |b| v > b) {
                        best = Some(v.clone());
                    }
                }
            }
        }
        best.expect("validated matrix has a finite entry")
    }

    /// Column minimum over finite entries, if any.
    pub fn column_min(&self, chore: usize) -> Option<T> {
        let mut best: Option<T> = None;
        for row in &self.entries {
            if let Entry::Fin(v) = &row[chore] {
                if best.as_ref().map_or(true, |b| v < b) {
                    best = Some(v.clone());
                }
            }
        }
        best
    }

    pub fn agent_has_finite_row(&self, agent: usize) -> bool {
        self.entries[agent].iter().any(Entry::is_finite)
    }

    pub fn rows(&self) -> &[Vec<Entry<T>>] {
        &self.entries
    }
}

/// n×m nonnegative endowments; every chore is brought in positive total.
#[derive(Clone, Debug)]
pub struct EndowmentMatrix<T> {
    w: Vec<Vec<T>>,
}

impl<T: Scalar> EndowmentMatrix<T> {
    pub fn new(w: Vec<Vec<T>>, n: usize, m: usize) -> Result<Self, InstanceError> {
        if w.len() != n || w.iter().any(|row| row.len() != m) {
            return Err(InstanceError::EndowmentShape);
        }
        for (i, row) in w.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v < T::zero() {
                    return Err(InstanceError::NegativeEndowment { agent: i, chore: j });
                }
            }
        }
        for j in 0..m {
            let mut col = T::zero();
            for row in &w {
                col = col + row[j].clone();
            }
            if col <= T::zero() {
                return Err(InstanceError::ZeroEndowmentColumn { chore: j });
            }
        }
        Ok(EndowmentMatrix { w })
    }

    pub fn amount(&self, agent: usize, chore: usize) -> &T {
        &self.w[agent][chore]
    }

    /// Raw column sum; endowments are deliberately not normalized on ingest.
    pub fn column_total(&self, chore: usize) -> T {
        let mut col = T::zero();
        for row in &self.w {
            col = col + row[chore].clone();
        }
        col
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.w
    }
}

#[derive(Clone, Debug)]
pub enum Model<T> {
    Ceei,
    Exchange(EndowmentMatrix<T>),
}

impl<T> Model<T> {
    pub fn is_ceei(&self) -> bool {
        matches!(self, Model::Ceei)
    }
}

/// Detected numeric shape of the matrix, recorded at validation time.
#[derive(Clone, Debug)]
pub struct InstanceTraits<T> {
    /// `Some(beta)` when every entry is finite and lies in {1, beta}. An
    /// all-ones matrix reports beta = 2 (any beta > 1 fits).
    pub bivalued_beta: Option<T>,
    /// Alpha for which every finite entry is a power of (1+alpha): the
    /// supplied alpha when it fits exactly, else an inferred candidate.
    pub rounded_alpha: Option<T>,
}

#[derive(Clone, Debug)]
pub struct Instance<T> {
    pub disutility: DisutilityMatrix<T>,
    pub model: Model<T>,
    /// Declared rounding parameter, if the source carried one.
    pub alpha: Option<T>,
    pub traits: InstanceTraits<T>,
}

impl<T: Scalar> Instance<T> {
    pub fn new(
        disutility: DisutilityMatrix<T>,
        model: Model<T>,
        alpha: Option<T>,
    ) -> Result<Self, InstanceError> {
        if let Model::Exchange(w) = &model {
            // EndowmentMatrix::new has checked shape against its own n/m;
            // re-check against the disutility matrix.
            if w.rows().len() != disutility.n() || w.rows()[0].len() != disutility.m() {
                return Err(InstanceError::EndowmentShape);
            }
        }
        let traits = InstanceTraits {
            bivalued_beta: detect_bivalued(&disutility),
            rounded_alpha: detect_rounded(&disutility, alpha.as_ref()),
        };
        Ok(Instance {
            disutility,
            model,
            alpha,
            traits,
        })
    }

    pub fn ceei(disutility: DisutilityMatrix<T>) -> Result<Self, InstanceError> {
        Self::new(disutility, Model::Ceei, None)
    }

    pub fn n(&self) -> usize {
        self.disutility.n()
    }

    pub fn m(&self) -> usize {
        self.disutility.m()
    }

    /// Exact check that every finite entry is a power of (1 + alpha).
    pub fn check_rounded(&self, alpha: &T) -> Result<(), RoundingError> {
        if *alpha <= T::zero() {
            return Err(RoundingError::BadAlpha);
        }
        let base = T::one() + alpha.clone();
        for i in 0..self.n() {
            for j in 0..self.m() {
                if let Entry::Fin(v) = self.disutility.entry(i, j) {
                    if power_exponent(v, &base).is_none() {
                        return Err(RoundingError::NotRounded { agent: i, chore: j });
                    }
                }
            }
        }
        Ok(())
    }
}

impl Instance<crate::scalar::Rat> {
    /// Approximate-mode copy of the instance.
    pub fn to_f64(&self) -> Result<Instance<f64>, InstanceError> {
        let rows = (0..self.n())
            .map(|i| {
                (0..self.m())
                    .map(|j| match self.disutility.entry(i, j) {
                        Entry::Fin(v) => Entry::Fin(v.to_f64()),
                        Entry::Inf => Entry::Inf,
                    })
                    .collect()
            })
            .collect();
        let d = DisutilityMatrix::new(rows)?;
        let model = match &self.model {
            Model::Ceei => Model::Ceei,
            Model::Exchange(w) => Model::Exchange(EndowmentMatrix::new(
                w.rows()
                    .iter()
                    .map(|r| r.iter().map(|v| v.to_f64()).collect())
                    .collect(),
                self.n(),
                self.m(),
            )?),
        };
        Instance::new(d, model, self.alpha.as_ref().map(|a| a.to_f64()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RoundingError {
    #[error("alpha must be positive")]
    BadAlpha,
    #[error("disutilities not (1+alpha)-rounded: entry at agent {agent}, chore {chore}")]
    NotRounded { agent: usize, chore: usize },
}

fn detect_bivalued<T: Scalar>(d: &DisutilityMatrix<T>) -> Option<T> {
    let mut beta: Option<T> = None;
    for i in 0..d.n() {
        for j in 0..d.m() {
            match d.entry(i, j) {
                Entry::Inf => return None,
                Entry::Fin(v) => {
                    if v.is_one() {
                        continue;
                    }
                    if *v < T::one() {
                        return None;
                    }
                    match &beta {
                        None => beta = Some(v.clone()),
                        Some(b) if b == v => {}
                        Some(_) => return None,
                    }
                }
            }
        }
    }
    Some(beta.unwrap_or_else(|| T::from_int(2)))
}

fn detect_rounded<T: Scalar>(d: &DisutilityMatrix<T>, declared: Option<&T>) -> Option<T> {
    let fits = |alpha: &T| -> bool {
        if *alpha <= T::zero() {
            return false;
        }
        let base = T::one() + alpha.clone();
        (0..d.n()).all(|i| {
            (0..d.m()).all(|j| match d.entry(i, j) {
                Entry::Inf => true,
                Entry::Fin(v) => power_exponent(v, &base).is_some(),
            })
        })
    };
    if let Some(a) = declared {
        if fits(a) {
            return Some(a.clone());
        }
    }
    // Inference convenience: the smallest finite entry above 1 (or the
    // reciprocal of the largest below 1) fixes the only plausible base.
    let mut cand: Option<T> = None;
    for i in 0..d.n() {
        for j in 0..d.m() {
            if let Entry::Fin(v) = d.entry(i, j) {
                let above = if *v > T::one() {
                    v.clone()
                } else if *v < T::one() {
                    v.recip()
                } else {
                    continue;
                };
                if cand.as_ref().map_or(true, |c| above < *c) {
                    cand = Some(above);
                }
            }
        }
    }
    let alpha = cand.map(|c| c - T::one())?;
    fits(&alpha).then_some(alpha)
}

/// One connected component of the disutility graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub agents: Vec<usize>,
    pub chores: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct StructureReport {
    pub components: Vec<Component>,
    pub is_biclique_union: bool,
    /// Exchange instances only (SC1); `None` for CEEI.
    pub is_economy_strongly_connected: Option<bool>,
}

/// Connected components and the biclique flag of the finite-disutility
/// bipartite graph; for exchange instances also SC1 connectivity of the
/// economy graph (edge i -> i' iff some chore j has w[i][j] > 0 and
/// d[i'][j] finite).
pub fn analyze_structure<T: Scalar>(instance: &Instance<T>) -> StructureReport {
    let d = &instance.disutility;
    let (n, m) = (d.n(), d.m());
    // Union by BFS over agents (0..n) and chores (n..n+m).
    let mut comp = vec![usize::MAX; n + m];
    let mut components = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX || !d.agent_has_finite_row(start) {
            continue;
        }
        let id = components.len();
        let mut agents = Vec::new();
        let mut chores = Vec::new();
        let mut queue = vec![start];
        comp[start] = id;
        while let Some(v) = queue.pop() {
            if v < n {
                agents.push(v);
                for j in 0..m {
                    if d.entry(v, j).is_finite() && comp[n + j] == usize::MAX {
                        comp[n + j] = id;
                        queue.push(n + j);
                    }
                }
            } else {
                let j = v - n;
                chores.push(j);
                for i in 0..n {
                    if d.entry(i, j).is_finite() && comp[i] == usize::MAX {
                        comp[i] = id;
                        queue.push(i);
                    }
                }
            }
        }
        agents.sort_unstable();
        chores.sort_unstable();
        components.push(Component { agents, chores });
    }

    let is_biclique_union = components.iter().all(|c| {
        c.agents
            .iter()
            .all(|&i| c.chores.iter().all(|&j| d.entry(i, j).is_finite()))
    });

    let is_economy_strongly_connected = match &instance.model {
        Model::Ceei => None,
        Model::Exchange(w) => Some(economy_strongly_connected(d, w)),
    };

    StructureReport {
        components,
        is_biclique_union,
        is_economy_strongly_connected,
    }
}

fn economy_strongly_connected<T: Scalar>(d: &DisutilityMatrix<T>, w: &EndowmentMatrix<T>) -> bool {
    let (n, m) = (d.n(), d.m());
    if n == 1 {
        return true;
    }
    // Per-chore owner/worker lists keep the edge set implicit.
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut workers: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..n {
        for j in 0..m {
            if *w.amount(i, j) > T::zero() {
                owners[j].push(i);
            }
            if d.entry(i, j).is_finite() {
                workers[j].push(i);
            }
        }
    }
    let reach = |forward: bool| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1usize;
        while let Some(v) = stack.pop() {
            for j in 0..m {
                let (from, to) = if forward {
                    (&owners[j], &workers[j])
                } else {
                    (&workers[j], &owners[j])
                };
                if from.contains(&v) {
                    for &u in to {
                        if !seen[u] {
                            seen[u] = true;
                            count += 1;
                            stack.push(u);
                        }
                    }
                }
            }
        }
        count
    };
    reach(true) == n && reach(false) == n
}

#[derive(Debug, Error, PartialEq)]
pub enum DecomposeError {
    #[error("decomposition applies to CEEI instances only")]
    NotCeei,
    #[error("agent {agent} has no finite disutility and can never meet the unit earning requirement")]
    AgentWithoutChores { agent: usize },
    #[error("component {component} is not a biclique; no CEEI existence guarantee")]
    NotBicliqueUnion { component: usize },
}

/// A component of the original instance as a standalone CEEI instance,
/// with the index maps needed to reassemble a global solution.
#[derive(Clone, Debug)]
pub struct SubInstance<T> {
    pub instance: Instance<T>,
    pub agents: Vec<usize>,
    pub chores: Vec<usize>,
}

/// Split a biclique-union CEEI instance into its disutility-graph components.
/// Solving each independently (prices normalized to sum to the component's
/// agent count) and concatenating yields a CEEI of the whole.
pub fn decompose_ceei<T: Scalar>(instance: &Instance<T>) -> Result<Vec<SubInstance<T>>, DecomposeError> {
    if !instance.model.is_ceei() {
        return Err(DecomposeError::NotCeei);
    }
    for i in 0..instance.n() {
        if !instance.disutility.agent_has_finite_row(i) {
            return Err(DecomposeError::AgentWithoutChores { agent: i });
        }
    }
    let report = analyze_structure(instance);
    for (idx, c) in report.components.iter().enumerate() {
        let complete = c
            .agents
            .iter()
            .all(|&i| c.chores.iter().all(|&j| instance.disutility.entry(i, j).is_finite()));
        if !complete {
            return Err(DecomposeError::NotBicliqueUnion { component: idx });
        }
    }
    let mut subs = Vec::with_capacity(report.components.len());
    for c in &report.components {
        let rows = c
            .agents
            .iter()
            .map(|&i| {
                c.chores
                    .iter()
                    .map(|&j| instance.disutility.entry(i, j).clone())
                    .collect()
            })
            .collect();
        let d = DisutilityMatrix::new(rows).expect("component of a valid instance is valid");
        let sub = Instance::new(d, Model::Ceei, instance.alpha.clone())
            .expect("component of a valid instance is valid");
        subs.push(SubInstance {
            instance: sub,
            agents: c.agents.clone(),
            chores: c.chores.clone(),
        });
    }
    Ok(subs)
}
