use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Configuration, InteractionKernel, ModelError, Pair};

/// Default band on `|d^2 - 1|` inside which a pair counts as sitting at distance one.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// What the weight does at exactly distance one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    /// `a_ij(1) = 0`
    OpenAtOne,
    /// `a_ij(1) = phi_ij(1)`
    ClosedAtOne,
}

impl ModelVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::OpenAtOne => "open",
            Self::ClosedAtOne => "closed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" | "openatone" => Some(Self::OpenAtOne),
            "closed" | "closedatone" => Some(Self::ClosedAtOne),
            _ => None,
        }
    }
}

/// The weight `a_ij` for a pair at squared distance `d2`. The threshold test is
/// exact on `d2`, so no square root is taken at the boundary.
#[inline]
pub fn weight(kernel: &InteractionKernel, variant: ModelVariant, i: usize, j: usize, d2: f64) -> f64 {
    if d2 < 1.0 {
        kernel.phi(i, j, d2.sqrt())
    } else if d2 == 1.0 && variant == ModelVariant::ClosedAtOne {
        kernel.phi(i, j, 1.0)
    } else {
        0.0
    }
}

fn check_dims(config: &Configuration, kernel: &InteractionKernel) -> Result<(), ModelError> {
    if config.n_agents() != kernel.n_agents() {
        return Err(ModelError::Dimension(format!(
            "configuration has {} agents but the kernel is sized for {}",
            config.n_agents(),
            kernel.n_agents()
        )));
    }
    Ok(())
}

/// Adds `m_j * w(i, j) * (x_j - x_i)` to `out` for every pair the closure weights.
///
/// Agent-major accumulation: each agent's sum runs over `j` in increasing order,
/// so results do not depend on how pairs are visited elsewhere.
pub(crate) fn accumulate<W>(x: &[f64], dim: usize, kernel: &InteractionKernel, mut w: W, out: &mut [f64])
where
    W: FnMut(usize, usize, f64) -> f64,
{
    let n = x.len() / dim;
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        let xi = &x[i * dim..(i + 1) * dim];
        for j in 0..n {
            if j == i {
                continue;
            }
            let xj = &x[j * dim..(j + 1) * dim];
            let d2 = super::config::dist_sq(xi, xj);
            let a = w(i.min(j), i.max(j), d2);
            if a == 0.0 {
                continue;
            }
            let c = a * kernel.mass(j);
            for k in 0..dim {
                out[i * dim + k] += c * (xj[k] - xi[k]);
            }
        }
    }
}

/// Velocity of the model with the variant's convention at distance one.
pub fn rhs(config: &Configuration, kernel: &InteractionKernel, variant: ModelVariant) -> Result<Vec<f64>, ModelError> {
    check_dims(config, kernel)?;
    let mut out = vec![0.0; config.positions().len()];
    accumulate(config.positions(), config.dim(), kernel, |i, j, d2| weight(kernel, variant, i, j, d2), &mut out);
    Ok(out)
}

/// All pairs with `| |x_i - x_j|^2 - 1 | <= tol`, in sorted order.
pub fn boundary_pairs(config: &Configuration, tol: f64) -> Vec<Pair> {
    let n = config.n_agents();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if (config.dist_sq(i, j) - 1.0).abs() <= tol {
                out.push(Pair::new(i, j));
            }
        }
    }
    out
}

/// Coefficients in `[0, 1]` for each boundary pair, picking one element of the
/// convexified velocity set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocitySelection {
    alphas: BTreeMap<Pair, f64>,
}

impl VelocitySelection {
    pub fn new(alphas: BTreeMap<Pair, f64>) -> Self {
        Self { alphas }
    }

    /// The same coefficient on every boundary pair of `config`.
    pub fn uniform(config: &Configuration, tol: f64, alpha: f64) -> Self {
        Self { alphas: boundary_pairs(config, tol).into_iter().map(|p| (p, alpha)).collect() }
    }

    pub fn alphas(&self) -> &BTreeMap<Pair, f64> {
        &self.alphas
    }
}

/// Element of the Filippov set picked by `selection`, using [`BOUNDARY_TOL`].
pub fn filippov_velocity(
    config: &Configuration,
    kernel: &InteractionKernel,
    selection: &VelocitySelection,
) -> Result<Vec<f64>, ModelError> {
    filippov_velocity_with_tol(config, kernel, selection, BOUNDARY_TOL)
}

pub fn filippov_velocity_with_tol(
    config: &Configuration,
    kernel: &InteractionKernel,
    selection: &VelocitySelection,
    tol: f64,
) -> Result<Vec<f64>, ModelError> {
    check_dims(config, kernel)?;
    let boundary = boundary_pairs(config, tol);
    let keys: Vec<Pair> = selection.alphas.keys().copied().collect();
    if keys != boundary {
        return Err(ModelError::Selection(format!(
            "selection covers {} but the boundary pairs are {}",
            fmt_pairs(&keys),
            fmt_pairs(&boundary)
        )));
    }
    if let Some((p, a)) = selection.alphas.iter().find(|(_, a)| !(0.0..=1.0).contains(*a)) {
        return Err(ModelError::Selection(format!("coefficient {a} for pair {p} is outside [0,1]")));
    }
    let mut out = vec![0.0; config.positions().len()];
    accumulate(
        config.positions(),
        config.dim(),
        kernel,
        |i, j, d2| match selection.alphas.get(&Pair { i, j }) {
            Some(a) => a * kernel.phi(i, j, 1.0),
            None if d2 < 1.0 => kernel.phi(i, j, d2.sqrt()),
            None => 0.0,
        },
        &mut out,
    );
    Ok(out)
}

pub(crate) fn fmt_pairs(pairs: &[Pair]) -> String {
    if pairs.is_empty() {
        return "{}".into();
    }
    pairs.iter().map(Pair::to_string).collect::<Vec<_>>().join(",")
}

/// Outcome of [`sublinear_bound_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub holds: bool,
    /// Largest `|v| / bound` over the extreme selections.
    pub worst_ratio: f64,
    pub bound: f64,
}

/// Checks `|v| <= N sqrt(2N) C' (1 + |x|)` for the all-off and all-on selections,
/// with `C'` the largest kernel value (times the largest multiplicity).
pub fn sublinear_bound_check(config: &Configuration, kernel: &InteractionKernel) -> BoundReport {
    let n = config.n_agents() as f64;
    let max_mass = (0..kernel.n_agents()).map(|i| kernel.mass(i)).fold(1.0, f64::max);
    let c = kernel.sup() * max_mass;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let bound = n * (2.0 * n).sqrt() * c * (1.0 + norm(config.positions()));
    let mut worst: f64 = 0.0;
    for alpha in [0.0, 1.0] {
        let sel = VelocitySelection::uniform(config, BOUNDARY_TOL, alpha);
        match filippov_velocity(config, kernel, &sel) {
            Ok(v) => worst = worst.max(norm(&v) / bound),
            Err(_) => worst = f64::INFINITY,
        }
    }
    BoundReport { holds: worst <= 1.0, worst_ratio: worst, bound }
}
