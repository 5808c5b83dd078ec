//! Bookkeeping on the discontinuity set: crossing quantities, their
//! classification, coincidence partitions and convex-hull tests.

mod hull;
mod lp;

use serde::{Deserialize, Serialize};

use crate::model::{boundary_pairs, weight, Configuration, InteractionKernel, ModelVariant, Pair, BOUNDARY_TOL};

pub use hull::{hull_contains, hull_violation};

/// Default band on `alpha` for calling a crossing degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("pair ({0}, {0}) is not a pair of distinct agents")]
    SameAgent(usize),
    #[error("agent index {0} out of range")]
    Index(usize),
    #[error("pair {0} is not at distance one")]
    NotOnBoundary(Pair),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

fn check_pair(config: &Configuration, i: usize, j: usize) -> Result<Pair, GeometryError> {
    let n = config.n_agents();
    if i >= n {
        return Err(GeometryError::Index(i));
    }
    if j >= n {
        return Err(GeometryError::Index(j));
    }
    Pair::try_new(i, j).ok_or(GeometryError::SameAgent(i))
}

/// `theta_ij = |x_i - x_j|^2`.
pub fn theta(config: &Configuration, i: usize, j: usize) -> Result<f64, GeometryError> {
    check_pair(config, i, j)?;
    Ok(config.dist_sq(i, j))
}

/// Half the rate of change of `theta_ij` when the pair itself does not interact:
/// `(x_i - x_j) . (sum_k a_ik (x_k - x_i) - sum_k a_jk (x_k - x_j))`, `k != i, j`.
///
/// With the pair interacting, the rate becomes `alpha - (m_i + m_j) phi_ij(1)`
/// on the boundary (`2 phi_ij(1)` for unit multiplicities).
pub fn alpha(
    config: &Configuration,
    i: usize,
    j: usize,
    kernel: &InteractionKernel,
    variant: ModelVariant,
) -> Result<f64, GeometryError> {
    check_pair(config, i, j)?;
    Ok(alpha_by(config, i, j, kernel, |a, b, d2| weight(kernel, variant, a, b, d2)))
}

/// `alpha` with the weights of the other pairs supplied by `w(a, b, d2)`, `a < b`.
pub(crate) fn alpha_by<W>(config: &Configuration, i: usize, j: usize, kernel: &InteractionKernel, mut w: W) -> f64
where
    W: FnMut(usize, usize, f64) -> f64,
{
    let dim = config.dim();
    let (xi, xj) = (config.agent(i), config.agent(j));
    let mut drift = vec![0.0; dim];
    for k in 0..config.n_agents() {
        if k == i || k == j {
            continue;
        }
        let xk = config.agent(k);
        let wi = w(i.min(k), i.max(k), config.dist_sq(i, k)) * kernel.mass(k);
        let wj = w(j.min(k), j.max(k), config.dist_sq(j, k)) * kernel.mass(k);
        for d in 0..dim {
            drift[d] += wi * (xk[d] - xi[d]) - wj * (xk[d] - xj[d]);
        }
    }
    (0..dim).map(|d| (xi[d] - xj[d]) * drift[d]).sum()
}

/// Rate scale of the pair's own pull on the boundary: `(m_i + m_j) phi_ij(1)`.
pub fn active_pull(kernel: &InteractionKernel, i: usize, j: usize) -> f64 {
    (kernel.mass(i) + kernel.mass(j)) * kernel.phi(i, j, 1.0)
}

/// How a single pair at distance one can continue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CrossingClass {
    /// Moves outward whether or not the pair interacts.
    Separating,
    /// Moves inward whether or not the pair interacts.
    Merging,
    /// `alpha` is zero or exactly cancels the pair's own pull.
    Degenerate,
    /// Several pairs sit at distance one at once.
    MultiplePair,
    /// Outward if inactive, inward if active: both continuations are locally
    /// consistent, so the crossing does not pick a branch by itself.
    Bidirectional,
}

/// Classifies a boundary pair. `tol` is both the boundary band on `theta - 1`
/// (never tighter than [`BOUNDARY_TOL`]) and the degeneracy band on `alpha`.
pub fn classify_crossing(
    config: &Configuration,
    i: usize,
    j: usize,
    kernel: &InteractionKernel,
    variant: ModelVariant,
    tol: f64,
) -> Result<CrossingClass, GeometryError> {
    let pair = check_pair(config, i, j)?;
    let band = tol.max(BOUNDARY_TOL);
    let on = boundary_pairs(config, band);
    if !on.contains(&pair) {
        return Err(GeometryError::NotOnBoundary(pair));
    }
    if on.len() > 1 {
        return Ok(CrossingClass::MultiplePair);
    }
    let a = alpha(config, i, j, kernel, variant)?;
    Ok(classify_alpha(a, active_pull(kernel, i, j), tol))
}

pub(crate) fn classify_alpha(a: f64, pull: f64, tol: f64) -> CrossingClass {
    if a.abs() <= tol || (a - pull).abs() <= tol {
        CrossingClass::Degenerate
    } else if a > pull {
        CrossingClass::Separating
    } else if a < 0.0 {
        CrossingClass::Merging
    } else {
        CrossingClass::Bidirectional
    }
}

/// Disjoint agent blocks, each sorted, blocks ordered by their smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn from_blocks(mut blocks: Vec<Vec<usize>>) -> Self {
        blocks.iter_mut().for_each(|b| b.sort_unstable());
        blocks.retain(|b| !b.is_empty());
        blocks.sort();
        Self { blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, agent: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&agent))
    }
}

/// Groups agents within distance `tol` of each other, closed transitively.
pub fn coincidence_partition(config: &Configuration, tol: f64) -> Partition {
    let n = config.n_agents();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let tol2 = tol * tol;
    for i in 0..n {
        for j in i + 1..n {
            if config.dist_sq(i, j) <= tol2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        blocks[r].push(i);
    }
    Partition::from_blocks(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Configuration {
        Configuration::line(xs).unwrap()
    }

    #[test]
    fn theta_examples() {
        let ice = line(&[-1.0, 0.0, 1.0]);
        assert_eq!(theta(&ice, 0, 2).unwrap(), 4.0);
        assert_eq!(theta(&ice, 0, 1).unwrap(), 1.0);
        let planar = Configuration::new(2, vec![0.0, 0.0, 3.0, 4.0]).unwrap();
        assert_eq!(theta(&planar, 0, 1).unwrap(), 25.0);
        assert_eq!(theta(&ice, 1, 1), Err(GeometryError::SameAgent(1)));
    }

    #[test]
    fn alpha_examples() {
        let k3 = InteractionKernel::constant(3, 1.0).unwrap();
        let open = ModelVariant::OpenAtOne;
        assert_eq!(alpha(&line(&[-1.0, 0.0, 1.0]), 0, 1, &k3, open).unwrap(), 0.0);
        assert_eq!(alpha(&line(&[-1.0, 0.0, 0.5]), 0, 1, &k3, open).unwrap(), 0.5);
        let k2 = InteractionKernel::constant(2, 1.0).unwrap();
        assert_eq!(alpha(&line(&[0.0, 1.0]), 0, 1, &k2, open).unwrap(), 0.0);
    }

    #[test]
    fn classify_examples() {
        let k3 = InteractionKernel::constant(3, 1.0).unwrap();
        let open = ModelVariant::OpenAtOne;
        let ice = line(&[-1.0, 0.0, 1.0]);
        assert_eq!(classify_crossing(&ice, 0, 1, &k3, open, 1e-9).unwrap(), CrossingClass::MultiplePair);
        let c = classify_crossing(&line(&[-1.0, 0.0, 0.5]), 0, 1, &k3, open, 1e-9).unwrap();
        assert_eq!(c, CrossingClass::Bidirectional);
        let k2 = InteractionKernel::constant(2, 1.0).unwrap();
        assert_eq!(classify_crossing(&line(&[0.0, 1.0]), 0, 1, &k2, open, 1e-9).unwrap(), CrossingClass::Degenerate);
        assert!(classify_crossing(&line(&[0.0, 0.5]), 0, 1, &k2, open, 1e-9).is_err());
    }

    #[test]
    fn classify_alpha_bands() {
        assert_eq!(classify_alpha(2.5, 2.0, 1e-9), CrossingClass::Separating);
        assert_eq!(classify_alpha(-0.1, 2.0, 1e-9), CrossingClass::Merging);
        assert_eq!(classify_alpha(2.0, 2.0, 1e-9), CrossingClass::Degenerate);
        assert_eq!(classify_alpha(1.0, 2.0, 1e-9), CrossingClass::Bidirectional);
    }

    #[test]
    fn partition_examples() {
        let p = coincidence_partition(&line(&[-1.0, 0.0, 1.0]), 1e-9);
        assert_eq!(p.blocks, vec![vec![0], vec![1], vec![2]]);
        let p = coincidence_partition(&line(&[0.0, 0.0, 1.0]), 1e-9);
        assert_eq!(p.blocks, vec![vec![0, 1], vec![2]]);
        let p = coincidence_partition(&line(&[0.0, 5e-10, 1e-9]), 1e-9);
        assert_eq!(p.blocks, vec![vec![0, 1, 2]]);
    }
}
