//! Checks of the structural properties every solution shares: barycenter
//! invariance, hull contractivity, decay of the pair potential, membership of
//! the velocity in the convexified field, and clustering of the limits.

pub(crate) mod fd;

use serde::{Deserialize, Serialize};

use crate::geometry::{coincidence_partition, hull_violation, GeometryError, Partition};
use crate::model::{accumulate, dist_sq, Configuration, InteractionKernel, ModelError, Pair};
use crate::solvers::Trajectory;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub const CLUSTER_TOL: f64 = 1e-6;
pub const SEP_TOL: f64 = 1e-6;
/// Largest agent speed over the tail that still counts as converged.
pub const CONVERGENCE_SPEED: f64 = 1e-8;
/// Pairs with `|theta - 1|` below this are treated as boundary pairs by
/// [`filippov_inclusion_residual`].
pub const INCLUSION_BAND: f64 = 1e-7;
/// Largest sample spacing [`filippov_inclusion_residual`] accepts.
pub const INCLUSION_MAX_GAP: f64 = 0.01;

/// `max_t |xbar(t) - xbar(0)|_inf`, with the run's multiplicities as weights.
pub fn barycenter_drift(traj: &Trajectory) -> f64 {
    let Some(first) = traj.states.first() else { return 0.0 };
    let m = traj.multiplicity.as_deref();
    let b0 = first.barycenter(m);
    traj.states
        .iter()
        .map(|s| s.barycenter(m).iter().zip(&b0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

fn distinct_points(c: &Configuration) -> Vec<Vec<f64>> {
    let mut pts = c.points();
    pts.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    pts
}

/// Largest outward distance (sup norm) of a sample's points from the hull of
/// the previous sample and from the initial hull, on samples taken every
/// `stride` (the final sample is always included). Containment is transitive,
/// so consecutive checks cover all pairs; the check against the initial hull
/// catches slow accumulation.
pub fn hull_contractivity_report(traj: &Trajectory, stride: usize) -> Result<f64, AnalysisError> {
    if stride == 0 {
        return Err(AnalysisError::Argument("stride must be at least 1".into()));
    }
    if traj.is_empty() {
        return Ok(0.0);
    }
    let mut idx: Vec<usize> = (0..traj.len()).step_by(stride).collect();
    if *idx.last().unwrap() != traj.len() - 1 {
        idx.push(traj.len() - 1);
    }
    let first = distinct_points(&traj.states[0]);
    let mut prev = first.clone();
    let mut worst = 0.0f64;
    for &k in &idx[1..] {
        let cur = distinct_points(&traj.states[k]);
        for p in &cur {
            worst = worst.max(hull_violation(&prev, p)?).max(hull_violation(&first, p)?);
        }
        prev = cur;
    }
    Ok(worst)
}

/// `V(x) = sum_{i != j} m_i m_j Phi_ij(|x_i - x_j|)`, with
/// `Phi_ij(r) = int_0^min(r,1) phi_ij(s) s ds`.
pub fn lyapunov_v(config: &Configuration, kernel: &InteractionKernel) -> f64 {
    let n = config.n_agents();
    let mut v = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = config.dist_sq(i, j).sqrt();
            v += 2.0 * kernel.mass(i) * kernel.mass(j) * kernel.potential(i, j, r);
        }
    }
    v
}

/// Largest increase of `V` between consecutive samples.
pub fn lyapunov_monotone_check(traj: &Trajectory, kernel: &InteractionKernel) -> f64 {
    let vs: Vec<f64> = traj.states.iter().map(|s| lyapunov_v(s, kernel)).collect();
    vs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub clusters: Partition,
    /// Mean terminal position of each cluster.
    pub positions: Vec<Vec<f64>>,
    /// `(a, b, distance)` for every pair of clusters `a < b`.
    pub separations: Vec<(usize, usize, f64)>,
    /// Cluster pairs closer than one but not coincident.
    pub violations: Vec<(usize, usize, f64)>,
    /// Largest agent speed over the last tenth of the run.
    pub tail_speed: f64,
}

impl ClusterReport {
    pub fn p2_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self) -> usize {
        self.clusters.len()
    }
}

/// Largest sup-norm speed between consecutive samples over the last tenth of
/// the run.
pub fn tail_speed(traj: &Trajectory) -> f64 {
    let n = traj.len();
    if n < 2 {
        return 0.0;
    }
    let t_from = traj.horizon() - 0.1 * (traj.horizon() - traj.times[0]);
    let start = traj.times.partition_point(|&t| t < t_from).min(n - 2);
    let mut worst = 0.0f64;
    for k in start..n - 1 {
        let h = traj.times[k + 1] - traj.times[k];
        let a = traj.states[k].positions();
        let b = traj.states[k + 1].positions();
        let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst = worst.max(d / h);
    }
    worst
}

/// Clusters of the terminal configuration. Separations in
/// `(cluster_tol, 1 - sep_tol)` are violations; exactly one is accepted.
pub fn cluster_report(traj: &Trajectory, cluster_tol: f64, sep_tol: f64) -> Result<ClusterReport, AnalysisError> {
    if traj.is_empty() {
        return Err(AnalysisError::Argument("empty trajectory".into()));
    }
    let speed = tail_speed(traj);
    if speed > CONVERGENCE_SPEED {
        return Err(AnalysisError::NotConverged(format!(
            "agents still move at speed {speed:.3e} at t = {}",
            traj.horizon()
        )));
    }
    Ok(cluster_report_of(traj.final_state(), cluster_tol, sep_tol, speed))
}

/// The same report for a single configuration, taken as the limit.
pub fn cluster_report_of(config: &Configuration, cluster_tol: f64, sep_tol: f64, tail_speed: f64) -> ClusterReport {
    let clusters = coincidence_partition(config, cluster_tol);
    let dim = config.dim();
    let positions: Vec<Vec<f64>> = clusters
        .blocks
        .iter()
        .map(|b| {
            let mut p = vec![0.0; dim];
            for &i in b {
                p.iter_mut().zip(config.agent(i)).for_each(|(s, x)| *s += x);
            }
            p.iter_mut().for_each(|s| *s /= b.len() as f64);
            p
        })
        .collect();
    let mut separations = Vec::new();
    let mut violations = Vec::new();
    for a in 0..positions.len() {
        for b in a + 1..positions.len() {
            let d = dist_sq(&positions[a], &positions[b]).sqrt();
            separations.push((a, b, d));
            if d > cluster_tol && d < 1.0 - sep_tol {
                violations.push((a, b, d));
            }
        }
    }
    ClusterReport { clusters, positions, separations, violations, tail_speed }
}

/// Limits estimated by Aitken extrapolation over the last fifth of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub limit: Vec<f64>,
    /// Fitted exponential rate per coordinate, where the tail is monotone
    /// and geometric enough to fit one.
    pub rates: Vec<Option<f64>>,
    /// Slowest fitted rate.
    pub rate: Option<f64>,
}

pub fn asymptotic_fit(traj: &Trajectory) -> AsymptoticFit {
    let fin = traj.final_state().positions().to_vec();
    let t1 = traj.horizon();
    let t0 = traj.times[0];
    let h = 0.1 * (t1 - t0);
    if traj.len() < 3 || h <= 0.0 {
        return AsymptoticFit { rates: vec![None; fin.len()], limit: fin, rate: None };
    }
    let a = traj.state_at(t1 - 2.0 * h);
    let b = traj.state_at(t1 - h);
    let mut limit = Vec::with_capacity(fin.len());
    let mut rates = Vec::with_capacity(fin.len());
    for (k, &c) in fin.iter().enumerate() {
        let (xa, xb) = (a.positions()[k], b.positions()[k]);
        let (d1, d2) = (xb - xa, c - xb);
        let q = d2 / d1;
        if d1.abs() > 1e-300 && q > 0.0 && q < 1.0 && (d1 - d2).abs() > 1e-15 * c.abs().max(1.0) {
            limit.push(c - d2 * d2 / (d2 - d1));
            rates.push(Some(-q.ln() / h));
        } else {
            limit.push(c);
            rates.push(None);
        }
    }
    let rate = rates.iter().flatten().copied().reduce(f64::min);
    AsymptoticFit { limit, rates, rate }
}

/// Coefficients recovered for the boundary pairs at one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredAlpha {
    pub time: f64,
    pub alphas: Vec<(Pair, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    /// Largest Euclidean distance from a sampled velocity to the Filippov set.
    pub max_residual: f64,
    pub at_time: f64,
    /// Best coefficients at every sample that had boundary pairs.
    pub recovered: Vec<RecoveredAlpha>,
}

impl InclusionReport {
    /// Recovered coefficient of `pair` at the sample nearest to `t`.
    pub fn alpha_near(&self, pair: Pair, t: f64) -> Option<f64> {
        self.recovered
            .iter()
            .filter(|r| r.alphas.iter().any(|(p, _)| *p == pair))
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .and_then(|r| r.alphas.iter().find(|(p, _)| *p == pair).map(|(_, a)| *a))
    }
}

/// Distance of finite-difference velocities to the convexified field: off the
/// boundary the field itself, on it every combination `alpha in [0, 1]^k` of
/// the boundary pairs. Differences never reach across a segment boundary.
pub fn filippov_inclusion_residual(traj: &Trajectory, kernel: &InteractionKernel) -> Result<InclusionReport, AnalysisError> {
    if traj.len() < 3 {
        return Err(AnalysisError::Sampling("need at least three samples".into()));
    }
    if traj.n_agents() != kernel.n_agents() {
        return Err(AnalysisError::Argument(format!(
            "trajectory has {} agents, kernel {}",
            traj.n_agents(),
            kernel.n_agents()
        )));
    }
    if let Some(w) = traj.times.windows(2).find(|w| w[1] - w[0] > INCLUSION_MAX_GAP * (1.0 + 1e-9)) {
        return Err(AnalysisError::Sampling(format!(
            "gap {} after t = {} exceeds {INCLUSION_MAX_GAP}",
            w[1] - w[0],
            w[0]
        )));
    }
    let dim = traj.dim;
    let mut report = InclusionReport { max_residual: 0.0, at_time: traj.times[0], recovered: Vec::new() };
    let mut base = vec![0.0; traj.states[0].positions().len()];
    for (lo, hi) in traj.segment_ranges() {
        if hi <= lo {
            continue;
        }
        for k in lo..=hi {
            let v = fd::velocity_at(traj, k, lo, hi);
            let c = &traj.states[k];
            let x = c.positions();
            let near = |d2: f64| (d2 - 1.0).abs() <= INCLUSION_BAND;
            accumulate(x, dim, kernel, |i, j, d2| if near(d2) || d2 >= 1.0 { 0.0 } else { kernel.phi(i, j, d2.sqrt()) }, &mut base);
            let boundary = crate::model::boundary_pairs(c, INCLUSION_BAND);
            let mut res: Vec<f64> = v.iter().zip(&base).map(|(a, b)| a - b).collect();
            let alphas = if boundary.is_empty() { Vec::new() } else { box_least_squares(c, kernel, &boundary, &mut res) };
            let r = res.iter().map(|e| e * e).sum::<f64>().sqrt();
            if r > report.max_residual {
                report.max_residual = r;
                report.at_time = traj.times[k];
            }
            if !alphas.is_empty() {
                report.recovered.push(RecoveredAlpha { time: traj.times[k], alphas: boundary.into_iter().zip(alphas).collect() });
            }
        }
    }
    Ok(report)
}

/// Minimises `|res - sum_p alpha_p g_p|` over `alpha in [0, 1]^k`, leaving the
/// optimal residual in `res`. Projected Newton on the normal equations: the
/// pair columns can be nearly parallel (agents about to coincide), which
/// makes coordinate sweeps crawl.
fn box_least_squares(c: &Configuration, kernel: &InteractionKernel, pairs: &[Pair], res: &mut [f64]) -> Vec<f64> {
    let dim = c.dim();
    let k = pairs.len();
    // column of pair p, nonzero only on agents i and j
    let cols: Vec<Vec<f64>> = pairs
        .iter()
        .map(|p| {
            let w = kernel.phi(p.i, p.j, 1.0);
            let (xi, xj) = (c.agent(p.i), c.agent(p.j));
            let mut g = vec![0.0; res.len()];
            for d in 0..dim {
                g[p.i * dim + d] = w * kernel.mass(p.j) * (xj[d] - xi[d]);
                g[p.j * dim + d] = w * kernel.mass(p.i) * (xi[d] - xj[d]);
            }
            g
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram: Vec<Vec<f64>> = cols.iter().map(|a| cols.iter().map(|b| dot(a, b)).collect()).collect();
    let rhs: Vec<f64> = cols.iter().map(|a| dot(a, res)).collect();
    let objective = |al: &[f64]| -> f64 {
        let mut q = 0.0;
        for a in 0..k {
            q += al[a] * (0.5 * dot(&gram[a], al) - rhs[a]);
        }
        q
    };
    let ridge = 1e-13 * gram.iter().enumerate().map(|(a, row)| row[a]).fold(0.0, f64::max).max(1e-300);
    let mut alpha = vec![0.0; k];
    let mut f = objective(&alpha);
    for _iter in 0..200 {
        let grad: Vec<f64> = (0..k).map(|a| dot(&gram[a], &alpha) - rhs[a]).collect();
        let free: Vec<usize> =
            (0..k).filter(|&a| !((alpha[a] <= 0.0 && grad[a] > 0.0) || (alpha[a] >= 1.0 && grad[a] < 0.0))).collect();
        if free.is_empty() {
            break;
        }
        let sub: Vec<Vec<f64>> = free.iter().map(|&a| free.iter().map(|&b| gram[a][b]).collect()).collect();
        let step = cholesky_solve(sub, free.iter().map(|&a| -grad[a]).collect(), ridge);
        let mut s = 1.0;
        let mut improved = false;
        for _ in 0..60 {
            let mut trial = alpha.clone();
            for (n, &a) in free.iter().enumerate() {
                trial[a] = (alpha[a] + s * step[n]).clamp(0.0, 1.0);
            }
            let ft = objective(&trial);
            if ft < f {
                let gain = f - ft;
                alpha = trial;
                f = ft;
                improved = gain > 1e-30;
                break;
            }
            s *= 0.5;
        }
        if !improved {
            break;
        }
    }
    for (col, a) in cols.iter().zip(&alpha) {
        res.iter_mut().zip(col).for_each(|(r, g)| *r -= a * g);
    }
    alpha
}

/// Solves `(m + ridge I) x = b` for a symmetric positive semidefinite `m`.
fn cholesky_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>, ridge: f64) -> Vec<f64> {
    let n = b.len();
    for a in 0..n {
        m[a][a] += ridge;
    }
    for j in 0..n {
        let mut d = m[j][j];
        for k in 0..j {
            d -= m[j][k] * m[j][k];
        }
        let d = d.max(ridge).sqrt();
        m[j][j] = d;
        for i in j + 1..n {
            let mut s = m[i][j];
            for k in 0..j {
                s -= m[i][k] * m[j][k];
            }
            m[i][j] = s / d;
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] -= m[i][k] * b[k];
        }
        b[i] /= m[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] -= m[k][i] * b[k];
        }
        b[i] /= m[i][i];
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_values() {
        let k3 = InteractionKernel::constant(3, 1.0).unwrap();
        assert!((lyapunov_v(&Configuration::line(&[-1.0, 0.0, 1.0]).unwrap(), &k3) - 3.0).abs() < 1e-15);
        assert_eq!(lyapunov_v(&Configuration::line(&[0.3, 0.3, 0.3]).unwrap(), &k3), 0.0);
        let k2 = InteractionKernel::constant(2, 1.0).unwrap();
        assert!((lyapunov_v(&Configuration::line(&[0.0, 0.5]).unwrap(), &k2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn box_least_squares_clamps() {
        let c = Configuration::line(&[0.0, 1.0]).unwrap();
        let k = InteractionKernel::constant(2, 1.0).unwrap();
        // target velocity (0.3, -0.3) is alpha = 0.3 up to the ridge; (2, -2) clamps to 1
        let mut r = vec![0.3, -0.3];
        let a = box_least_squares(&c, &k, &[Pair::new(0, 1)], &mut r);
        assert!((a[0] - 0.3).abs() < 1e-12 && r.iter().all(|e| e.abs() < 1e-12));
        let mut r = vec![2.0, -2.0];
        let a = box_least_squares(&c, &k, &[Pair::new(0, 1)], &mut r);
        assert_eq!(a[0], 1.0);
        assert!((r[0] - 1.0).abs() < 1e-15);
    }
}
