//! Branch catalogues: compositions of `N` for unit-spaced chains, their
//! limit states, and the families of the unit-square example.

mod square;

pub use square::{
    simulate_square_family, square4_catalogue, square_branch, square_catalogue_run, SquareFamily, SquareOutcome, SquareParams,
};

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{cluster_report, CLUSTER_TOL, SEP_TOL};
use crate::geometry::Partition;
use crate::model::{Configuration, ModelVariant, Pair};
use crate::scenarios::unit_spaced;
use crate::solvers::{solve_caratheodory, ActivationRule, BranchSpec, SolverError};

#[derive(Debug, thiserror::Error)]
pub enum EnumerationError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Ordered block sizes summing to `N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Composition {
    pub parts: Vec<usize>,
}

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self, EnumerationError> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(EnumerationError::Argument(format!("{parts:?} is not a composition")));
        }
        Ok(Self { parts })
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// No two neighbouring blocks are both singletons, or a singleton next to a pair.
    pub fn is_delta2(&self) -> bool {
        self.parts.windows(2).all(|w| w[0] + w[1] >= 3)
    }

    /// Agent ranges of the blocks, in order.
    pub fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.parts
            .iter()
            .map(|&n| {
                let r = start..start + n;
                start += n;
                r
            })
            .collect()
    }

    pub fn partition(&self) -> Partition {
        Partition::from_blocks(self.blocks().into_iter().map(|r| r.collect()).collect())
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(usize::to_string).collect();
        write!(f, "({})", s.join(","))
    }
}

fn check_n(n: usize) -> Result<(), EnumerationError> {
    if n == 0 {
        return Err(EnumerationError::Argument("N must be at least 1".into()));
    }
    if n > 30 {
        return Err(EnumerationError::Argument(format!("N = {n} gives 2^{} compositions", n - 1)));
    }
    Ok(())
}

/// All compositions of `n`, fewest parts first, then larger leading parts first.
pub fn delta1(n: usize) -> Result<Vec<Composition>, EnumerationError> {
    check_n(n)?;
    // bit k of the mask set: a cut between agents k and k + 1
    let mut out: Vec<Composition> = (0u64..1 << (n - 1))
        .map(|mask| {
            let mut parts = Vec::new();
            let mut len = 1;
            for k in 0..n - 1 {
                if mask >> k & 1 == 1 {
                    parts.push(len);
                    len = 1;
                } else {
                    len += 1;
                }
            }
            parts.push(len);
            Composition { parts }
        })
        .collect();
    out.sort_by(|a, b| a.parts.len().cmp(&b.parts.len()).then_with(|| b.parts.cmp(&a.parts)));
    Ok(out)
}

/// Compositions with every pair of neighbouring parts summing to at least three.
pub fn delta2(n: usize) -> Result<Vec<Composition>, EnumerationError> {
    Ok(delta1(n)?.into_iter().filter(Composition::is_delta2).collect())
}

/// A composition with the limit each agent reaches when its block merges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockLimit {
    pub composition: Composition,
    /// Per agent: the barycenter of its block's initial positions.
    pub limits: Vec<f64>,
}

/// Limits of the branch of a unit-spaced chain that merges each block of `comp`.
pub fn limit_state(initial: &Configuration, comp: &Composition) -> Result<BlockLimit, EnumerationError> {
    if initial.dim() != 1 {
        return Err(EnumerationError::Argument("the chain must lie on a line".into()));
    }
    let x = initial.positions();
    if comp.total() != x.len() {
        return Err(EnumerationError::Argument(format!("{comp} does not sum to {} agents", x.len())));
    }
    if let Some(w) = x.windows(2).find(|w| ((w[1] - w[0]) - 1.0).abs() > 1e-12) {
        return Err(EnumerationError::Argument(format!("spacing {} is not one", w[1] - w[0])));
    }
    let mut limits = vec![0.0; x.len()];
    for b in comp.blocks() {
        let m = x[b.clone()].iter().sum::<f64>() / b.len() as f64;
        limits[b].iter_mut().for_each(|l| *l = m);
    }
    Ok(BlockLimit { composition: comp.clone(), limits })
}

/// Branch that merges each block of `comp`: the chain inside block `k` is
/// switched on after `waits[k]`, and the pairs between blocks never are.
///
/// `waits` has one entry per block (singleton entries are ignored) or one per
/// block of two or more agents.
pub fn branch_specs_from_composition(comp: &Composition, waits: &[f64]) -> Result<BranchSpec, EnumerationError> {
    let blocks = comp.blocks();
    let multi: Vec<&std::ops::Range<usize>> = blocks.iter().filter(|b| b.len() > 1).collect();
    let wait_of: Vec<f64> = if waits.len() == blocks.len() {
        blocks.iter().zip(waits).filter(|(b, _)| b.len() > 1).map(|(_, w)| *w).collect()
    } else if waits.len() == multi.len() {
        waits.to_vec()
    } else {
        return Err(EnumerationError::Argument(format!(
            "{comp} needs {} or {} waits, got {}",
            blocks.len(),
            multi.len(),
            waits.len()
        )));
    };
    let mut rules = Vec::new();
    for (b, &w) in multi.iter().zip(&wait_of) {
        let chain: Vec<Pair> = (b.start..b.end - 1).map(|i| Pair::new(i, i + 1)).collect();
        rules.push(ActivationRule::after(&chain, w));
    }
    let cuts: Vec<Pair> = blocks.iter().skip(1).map(|b| Pair::new(b.start - 1, b.start)).collect();
    if !cuts.is_empty() {
        rules.push(ActivationRule::never(&cuts));
    }
    Ok(BranchSpec::new(rules)?)
}

/// One row of an enumeration catalogue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogueEntry {
    pub id: usize,
    pub parts: Vec<usize>,
    pub branch: String,
    pub limits: Vec<f64>,
}

/// Catalogue for the unit-spaced chain of `n` agents: every composition of
/// `n` for the open convention, those in the restricted family for the closed one.
pub fn catalogue(n: usize, variant: ModelVariant) -> Result<Vec<CatalogueEntry>, EnumerationError> {
    if n > 20 {
        return Err(EnumerationError::Argument(format!("N = {n} is above the supported 20")));
    }
    let comps = match variant {
        ModelVariant::OpenAtOne => delta1(n)?,
        ModelVariant::ClosedAtOne => delta2(n)?,
    };
    let initial = unit_spaced(n, variant).initial;
    comps
        .iter()
        .enumerate()
        .map(|(id, c)| {
            let waits = vec![0.0; c.parts.len()];
            Ok(CatalogueEntry {
                id: id + 1,
                parts: c.parts.clone(),
                branch: branch_specs_from_composition(c, &waits)?.to_string(),
                limits: limit_state(&initial, c)?.limits,
            })
        })
        .collect()
}

/// One zero-wait branch of the exhaustive search and where it ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationRun {
    /// Consecutive pairs switched on at the start.
    pub on: Vec<Pair>,
    pub outcome: Result<Partition, String>,
}

/// Runs every zero-wait choice at the start of the unit-spaced chain (each
/// consecutive pair either on at once or never) and collects the terminal
/// partitions of the runs the solver accepts.
pub fn explore_zero_wait(n: usize, variant: ModelVariant, horizon: f64) -> Result<Vec<ExplorationRun>, EnumerationError> {
    check_n(n)?;
    if n > 12 {
        return Err(EnumerationError::Argument(format!("N = {n} is too many for exhaustive runs")));
    }
    let sc = unit_spaced(n, variant);
    let runs = (0u32..1 << (n - 1))
        .into_par_iter()
        .map(|mask| {
            let (on, off): (Vec<Pair>, Vec<Pair>) =
                (0..n - 1).map(|i| Pair::new(i, i + 1)).partition(|p| mask >> p.i & 1 == 1);
            let mut rules = Vec::new();
            if !on.is_empty() {
                rules.push(ActivationRule::after(&on, 0.0));
            }
            if !off.is_empty() {
                rules.push(ActivationRule::never(&off));
            }
            let outcome = BranchSpec::new(rules)
                .and_then(|b| solve_caratheodory(&sc, &b, horizon))
                .map_err(|e| e.to_string())
                .and_then(|tr| cluster_report(&tr, CLUSTER_TOL, SEP_TOL).map(|r| r.clusters).map_err(|e| e.to_string()));
            ExplorationRun { on, outcome }
        })
        .collect();
    Ok(runs)
}

/// Distinct terminal partitions among the accepted runs.
pub fn terminal_partitions(runs: &[ExplorationRun]) -> BTreeSet<Partition> {
    runs.iter().filter_map(|r| r.outcome.as_ref().ok().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts(v: &[Composition]) -> Vec<Vec<usize>> {
        v.iter().map(|c| c.parts.clone()).collect()
    }

    #[test]
    fn small_catalogues() {
        assert_eq!(parts(&delta1(3).unwrap()), vec![vec![3], vec![2, 1], vec![1, 2], vec![1, 1, 1]]);
        assert_eq!(parts(&delta1(1).unwrap()), vec![vec![1]]);
        assert_eq!(delta1(5).unwrap().len(), 16);
        assert_eq!(parts(&delta2(3).unwrap()), vec![vec![3], vec![2, 1], vec![1, 2]]);
        assert_eq!(parts(&delta2(2).unwrap()), vec![vec![2]]);
        let d4: BTreeSet<Vec<usize>> = parts(&delta2(4).unwrap()).into_iter().collect();
        let want: BTreeSet<Vec<usize>> = [vec![4], vec![3, 1], vec![1, 3], vec![2, 2], vec![1, 2, 1]].into_iter().collect();
        assert_eq!(d4, want);
        assert!(delta1(0).is_err());
    }

    #[test]
    fn block_limits() {
        let x = Configuration::line(&[0.0, 1.0, 2.0]).unwrap();
        let c = Composition::new(vec![2, 1]).unwrap();
        assert_eq!(limit_state(&x, &c).unwrap().limits, vec![0.5, 0.5, 2.0]);
        let c = Composition::new(vec![3]).unwrap();
        assert_eq!(limit_state(&x, &c).unwrap().limits, vec![1.0, 1.0, 1.0]);
        let x4 = Configuration::line(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let c = Composition::new(vec![1, 2, 1]).unwrap();
        assert_eq!(limit_state(&x4, &c).unwrap().limits, vec![0.0, 1.5, 1.5, 3.0]);
        assert!(limit_state(&Configuration::line(&[0.0, 1.5]).unwrap(), &Composition::new(vec![2]).unwrap()).is_err());
    }

    #[test]
    fn specs_from_compositions() {
        let c = Composition::new(vec![2, 1]).unwrap();
        let b = branch_specs_from_composition(&c, &[1.0]).unwrap();
        assert_eq!(b.to_string(), BranchSpec::parse("wait=1:1-2 never:2-3").unwrap().to_string());
        assert!(branch_specs_from_composition(&c, &[1.0, 2.0, 3.0]).is_err());
        let c = Composition::new(vec![1, 1, 1]).unwrap();
        assert_eq!(branch_specs_from_composition(&c, &[]).unwrap().rules.len(), 1);
    }
}
