//! The twelve branch families of four agents on the unit square.

use serde::{Deserialize, Serialize};

use super::EnumerationError;
use crate::analysis::{cluster_report, CLUSTER_TOL, SEP_TOL};
use crate::model::{ModelVariant, Pair};
use crate::scenarios::square4;
use crate::solvers::{solve_caratheodory, ActivationRule, BranchSpec};

/// A family of branches, described by the sides that switch on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareFamily {
    pub id: usize,
    /// Sides switched on after the wait (0-based agents).
    pub sides: Vec<Pair>,
    /// Number of free wait parameters.
    pub arity: usize,
    /// Clusters the family is listed with.
    pub clusters: usize,
    /// Limit of each agent: barycenter of its connected component.
    pub limits: Vec<[f64; 2]>,
}

/// Wait parameters for one member of a family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SquareParams {
    /// No parameters (the constant family).
    None,
    /// Stay put until `t`, then switch the family's sides on.
    Single(f64),
    /// Two opposite sides: the first at `t1`, the second at `t2`.
    Separate { t1: f64, t2: f64 },
    /// Both opposite sides at `t1`, the remaining two sides `t3` later.
    Joined { t1: f64, t3: f64 },
}

const CORNERS: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

fn sides() -> [Pair; 4] {
    [Pair::new(0, 1), Pair::new(1, 2), Pair::new(2, 3), Pair::new(0, 3)]
}

fn component_limits(on: &[Pair]) -> Vec<[f64; 2]> {
    let mut comp: Vec<usize> = (0..4).collect();
    for _ in 0..4 {
        for p in on {
            let m = comp[p.i].min(comp[p.j]);
            comp[p.i] = m;
            comp[p.j] = m;
        }
    }
    (0..4)
        .map(|a| {
            let members: Vec<usize> = (0..4).filter(|&b| comp[b] == comp[a]).collect();
            let k = members.len() as f64;
            [members.iter().map(|&b| CORNERS[b][0]).sum::<f64>() / k, members.iter().map(|&b| CORNERS[b][1]).sum::<f64>() / k]
        })
        .collect()
}

/// Case 1 stays put; cases 2-5 merge one side; cases 6 and 7 merge two
/// opposite sides, independently or followed by everything; cases 8-11
/// merge two adjacent sides; case 12 merges all four.
pub fn square4_catalogue() -> Vec<SquareFamily> {
    let [s12, s23, s34, s14] = sides();
    let sets: Vec<(Vec<Pair>, usize)> = vec![
        (vec![], 0),
        (vec![s12], 1),
        (vec![s23], 1),
        (vec![s34], 1),
        (vec![s14], 1),
        (vec![s12, s34], 2),
        (vec![s14, s23], 2),
        (vec![s12, s23], 1),
        (vec![s23, s34], 1),
        (vec![s34, s14], 1),
        (vec![s12, s14], 1),
        (vec![s12, s23, s34, s14], 1),
    ];
    sets.into_iter()
        .enumerate()
        .map(|(k, (on, arity))| {
            let limits = component_limits(&on);
            let mut distinct: Vec<[f64; 2]> = limits.clone();
            distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
            distinct.dedup();
            SquareFamily { id: k + 1, sides: on, arity, clusters: distinct.len(), limits }
        })
        .collect()
}

/// The branch spec of one member of `family`.
pub fn square_branch(family: &SquareFamily, params: SquareParams) -> Result<BranchSpec, EnumerationError> {
    let off: Vec<Pair> = sides().into_iter().filter(|p| !family.sides.contains(p)).collect();
    let mut rules = Vec::new();
    let bad = || EnumerationError::Argument(format!("parameters {params:?} do not fit family {}", family.id));
    match (family.arity, params) {
        (0, SquareParams::None) => {}
        (1, SquareParams::Single(t)) => rules.push(ActivationRule::after(&family.sides, t)),
        (2, SquareParams::Separate { t1, t2 }) => {
            rules.push(ActivationRule::after(&family.sides[..1], t1));
            rules.push(ActivationRule::after(&family.sides[1..], t2));
        }
        (2, SquareParams::Joined { t1, t3 }) => {
            rules.push(ActivationRule::after(&family.sides, t1));
            rules.push(ActivationRule::after(&off, t1 + t3));
            return Ok(BranchSpec::new(rules)?);
        }
        _ => return Err(bad()),
    }
    if !off.is_empty() {
        rules.push(ActivationRule::never(&off));
    }
    Ok(BranchSpec::new(rules)?)
}

/// What a simulated member converged to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareOutcome {
    pub id: usize,
    pub params: SquareParams,
    pub clusters: usize,
    /// Final position of each agent.
    pub limits: Vec<[f64; 2]>,
}

pub fn simulate_square_family(
    family: &SquareFamily,
    variant: ModelVariant,
    params: SquareParams,
    horizon: f64,
) -> Result<SquareOutcome, EnumerationError> {
    let branch = square_branch(family, params)?;
    let tr = solve_caratheodory(&square4(variant), &branch, horizon)?;
    let report = cluster_report(&tr, CLUSTER_TOL, SEP_TOL).map_err(|e| EnumerationError::Argument(e.to_string()))?;
    let f = tr.final_state();
    Ok(SquareOutcome {
        id: family.id,
        params,
        clusters: report.count(),
        limits: (0..4).map(|a| [f.agent(a)[0], f.agent(a)[1]]).collect(),
    })
}

/// Runs one representative member of every family: zero waits (the closed
/// convention allows nothing else) and, for the two-parameter families under
/// the open convention, separate switch-on times.
pub fn square_catalogue_run(
    variant: ModelVariant,
    horizon: f64,
) -> Vec<(SquareFamily, Result<SquareOutcome, String>)> {
    square4_catalogue()
        .into_iter()
        .map(|f| {
            let params = match (f.arity, variant) {
                (0, _) => SquareParams::None,
                (1, _) => SquareParams::Single(0.0),
                (_, ModelVariant::OpenAtOne) => SquareParams::Separate { t1: 0.5, t2: 1.0 },
                (_, ModelVariant::ClosedAtOne) => SquareParams::Separate { t1: 0.0, t2: 0.0 },
            };
            let out = simulate_square_family(&f, variant, params, horizon).map_err(|e| e.to_string());
            (f, out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_cluster_counts() {
        let cat = square4_catalogue();
        assert_eq!(cat.len(), 12);
        let mut hist = [0usize; 5];
        cat.iter().for_each(|f| hist[f.clusters] += 1);
        assert_eq!(hist, [0, 1, 6, 4, 1]);
        assert_eq!(cat[5].limits, vec![[0.5, 0.0], [0.5, 0.0], [0.5, 1.0], [0.5, 1.0]]);
    }
}
