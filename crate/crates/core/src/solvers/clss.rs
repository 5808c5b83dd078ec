//! Sample-and-hold (explicit Euler) runs with arbitrary step sequences.

use serde::{Deserialize, Serialize};

use super::dynamics::{theta_of, GraphSystem};
use super::integrator::{integrate, Exit};
use super::{SolveOptions, SolverError, Trajectory};
use crate::model::{accumulate, weight, Pair};
use crate::scenarios::{clss10, Scenario};

/// Positive step lengths; the horizon is their sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    steps: Vec<f64>,
}

impl StepSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self, SolverError> {
        if steps.is_empty() {
            return Err(SolverError::Schedule("a schedule needs at least one step".into()));
        }
        if let Some(s) = steps.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(SolverError::Schedule(format!("step {s} is not positive")));
        }
        Ok(Self { steps })
    }

    /// `k` equal steps covering `[0, horizon]`.
    pub fn uniform(horizon: f64, k: usize) -> Result<Self, SolverError> {
        if k == 0 || !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SolverError::Schedule(format!("cannot split [0, {horizon}] into {k} steps")));
        }
        Self::new(vec![horizon / k as f64; k])
    }

    /// The jump schedule for the ten-agent example: steps of `T / K` up to
    /// node `K - sqrt(K)`, one step of `4 sqrt(K)` units, then unit steps up to
    /// `(r + 1) T / r`, or just past the jump if that comes later.
    pub fn jump(t_ref: f64, k: u64, r: u64) -> Result<Self, SolverError> {
        let root = admissible_root(k, r)?;
        let dt = t_ref / k as f64;
        let before = (k - root) as usize;
        let after_jump = k + 3 * root;
        let end_nodes = ((r + 1) * k / r).max(after_jump);
        let mut steps = vec![dt; before];
        steps.push(4.0 * root as f64 * dt);
        steps.extend(std::iter::repeat_n(dt, (end_nodes - after_jump) as usize));
        Self::new(steps)
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.steps.iter().sum()
    }
}

/// `sqrt(K)` when `K = r^2 m^2` with `m >= 2`.
fn admissible_root(k: u64, r: u64) -> Result<u64, SolverError> {
    if r == 0 {
        return Err(SolverError::Schedule("r must be positive".into()));
    }
    let root = (k as f64).sqrt().round() as u64;
    if root * root != k {
        return Err(SolverError::Schedule(format!("K = {k} is not a perfect square")));
    }
    if root % r != 0 || root / r < 2 {
        return Err(SolverError::Schedule(format!("K = {k} is not r^2 m^2 with m >= 2 for r = {r}")));
    }
    Ok(root)
}

#[derive(Clone, Debug, Default)]
pub struct ClssOptions {
    /// Pairs whose interaction is switched off whatever their distance.
    pub exclude: Vec<Pair>,
    /// Keep every `record_stride`-th node (0: about 10^5 nodes at most).
    pub record_stride: usize,
    /// Pairs whose squared distance is tracked at every node.
    pub watch: Vec<Pair>,
    /// Node times that are always kept in the trajectory, increasing.
    pub keep_times: Vec<f64>,
}

/// Node-level statistics of a watched pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WatchStats {
    pub pair: Pair,
    pub min_theta: f64,
    pub min_at: f64,
    /// Nodes with squared distance below one, first and last.
    pub first_below: Option<f64>,
    pub last_below: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ClssRun {
    pub trajectory: Trajectory,
    pub watch: Vec<WatchStats>,
    /// Node times, all of them.
    pub node_times: Vec<f64>,
}

impl ClssRun {
    /// Squared distance of a watched pair at the node closest to `t`.
    pub fn theta_near(&self, pair: Pair, t: f64) -> Option<f64> {
        let k = self.trajectory.times.iter().enumerate().min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?.0;
        Some(self.trajectory.states[k].dist_sq(pair.i, pair.j))
    }
}

pub fn solve_clss(scenario: &Scenario, schedule: &StepSchedule) -> Result<Trajectory, SolverError> {
    Ok(solve_clss_with(scenario, schedule, &ClssOptions::default())?.trajectory)
}

pub fn solve_clss_with(scenario: &Scenario, schedule: &StepSchedule, opts: &ClssOptions) -> Result<ClssRun, SolverError> {
    let kernel = &scenario.kernel;
    let variant = scenario.variant;
    let n = scenario.n_agents();
    let d = scenario.dim();
    if let Some(p) = opts.exclude.iter().chain(&opts.watch).find(|p| p.j >= n) {
        return Err(SolverError::Argument(format!("pair {p} outside {n} agents")));
    }
    let mut off = vec![false; n * n];
    for p in &opts.exclude {
        off[p.i * n + p.j] = true;
    }
    let total = schedule.len();
    let stride = if opts.record_stride > 0 { opts.record_stride } else { total.div_ceil(100_000).max(1) };
    let mut x = scenario.initial.positions().to_vec();
    let mut v = vec![0.0; x.len()];
    let mut traj = Trajectory::new(d, kernel.multiplicity().map(<[f64]>::to_vec));
    traj.push(0.0, &x);
    let mut watch: Vec<WatchStats> = opts
        .watch
        .iter()
        .map(|&p| WatchStats { pair: p, min_theta: f64::INFINITY, min_at: 0.0, first_below: None, last_below: None })
        .collect();
    let mut node_times = Vec::with_capacity(total + 1);
    let observe = |t: f64, x: &[f64], watch: &mut Vec<WatchStats>| {
        for w in watch.iter_mut() {
            let th = theta_of(x, d, w.pair);
            if th < w.min_theta {
                w.min_theta = th;
                w.min_at = t;
            }
            if th < 1.0 {
                w.first_below.get_or_insert(t);
                w.last_below = Some(t);
            }
        }
    };
    observe(0.0, &x, &mut watch);
    node_times.push(0.0);
    let mut t = 0.0;
    let mut keep = opts.keep_times.iter().peekable();
    for (k, &h) in schedule.steps().iter().enumerate() {
        accumulate(&x, d, kernel, |i, j, d2| if off[i * n + j] { 0.0 } else { weight(kernel, variant, i, j, d2) }, &mut v);
        for (xi, vi) in x.iter_mut().zip(&v) {
            *xi += h * vi;
        }
        t += h;
        node_times.push(t);
        observe(t, &x, &mut watch);
        let mut want = (k + 1) % stride == 0 || k + 1 == total;
        while let Some(&&kt) = keep.peek() {
            if kt <= t + 1e-12 * t.max(1.0) {
                want |= (kt - t).abs() <= 1e-9 * t.max(1.0);
                keep.next();
            } else {
                break;
            }
        }
        if want {
            traj.push(t, &x);
        }
    }
    Ok(ClssRun { trajectory: traj, watch, node_times })
}

/// The jump-schedule run for the ten-agent example (or any scenario whose
/// reference time is `T`), tracking agents 1 and 3.
pub fn solve_clss_jump_schedule(scenario: &Scenario, k: u64, r: u64) -> Result<ClssRun, SolverError> {
    let t_ref = scenario.expected("T").unwrap_or(clss10::T);
    let schedule = StepSchedule::jump(t_ref, k, r)?;
    let root = (k as f64).sqrt().round() as u64;
    let dt = t_ref / k as f64;
    let opts = ClssOptions {
        watch: vec![Pair::new(0, 2)],
        keep_times: vec![(k - root) as f64 * dt, (k + 3 * root) as f64 * dt],
        ..Default::default()
    };
    solve_clss_with(scenario, &schedule, &opts)
}

/// The second piecewise-smooth solution of the ten-agent example: agent 1
/// joins agents 3..10 at `T`, agent 2 joins them once it reaches distance one.
/// Returns the trajectory on `[0, t_end]` and that second switching time.
pub fn clss_reference_interacting(t_end: f64, opts: &SolveOptions) -> Result<(Trajectory, f64), SolverError> {
    let sc = crate::scenarios::clss_ten_agents();
    let kernel = &sc.kernel;
    let n = 10;
    let t0 = clss10::T;
    let dt = opts.sample_dt_for(kernel.rate_scale(), t_end).min(t0 / 10.0);
    let mut traj = Trajectory::new(2, None);
    let flat = |t: f64| -> Vec<f64> { clss10::separate_solution(t).iter().flatten().copied().collect() };
    let mut s = 0.0;
    while s < t0.min(t_end) {
        traj.push(s, &flat(s));
        s += dt;
    }
    let x_t = flat(t0);
    traj.push(t0.min(t_end), &flat(t0.min(t_end)));
    if t_end <= t0 {
        return Ok((traj, f64::NAN));
    }
    let mut stage_b = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !(i == 1 && j >= 2) {
                stage_b.push(Pair::new(i, j));
            }
        }
    }
    let sys = GraphSystem::new(kernel, 2, &stage_b, &[], true);
    let out = integrate(&sys, t0, &x_t, t_end, kernel.rate_scale(), dt, &opts.integrator_for(kernel), &mut |t, x| traj.push(t, x))?;
    traj.push(out.t, &out.x);
    let t_b = match out.exit {
        Exit::Reached => return Ok((traj, f64::NAN)),
        Exit::Event(_) => out.t,
    };
    let all: Vec<Pair> = (0..n).flat_map(|i| (i + 1..n).map(move |j| Pair::new(i, j))).collect();
    let sys = GraphSystem::new(kernel, 2, &all, &[], false);
    let out = integrate(&sys, t_b, &out.x, t_end, kernel.rate_scale(), dt, &opts.integrator_for(kernel), &mut |t, x| traj.push(t, x))?;
    traj.push(out.t, &out.x);
    Ok((traj, t_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::toy_two_agents;
    use crate::ModelVariant;

    #[test]
    fn euler_gap_matches_closed_form() {
        let sc = toy_two_agents(0.0, 0.5, ModelVariant::OpenAtOne);
        for k in [100usize, 1000] {
            let tr = solve_clss(&sc, &StepSchedule::uniform(1.0, k).unwrap()).unwrap();
            let f = tr.final_state().positions();
            let gap = (f[1] - f[0]).abs();
            assert!((gap - 0.5 * (-2f64).exp()).abs() <= 2.0 / k as f64);
        }
    }

    #[test]
    fn schedules_validate() {
        assert!(StepSchedule::jump(0.01, 10, 3).is_err());
        assert!(StepSchedule::jump(0.01, 100, 10).is_err());
        let s = StepSchedule::jump(0.01, 400, 10).unwrap();
        // 380 unit steps, one jump of 80 units, then up to 440
        assert_eq!(s.len(), 380 + 1 + 0);
        let s = StepSchedule::jump(0.01, 900, 10).unwrap();
        assert_eq!(s.len(), 870 + 1 + (990 - 990));
        assert!((StepSchedule::uniform(2.0, 7).unwrap().horizon() - 2.0).abs() < 1e-12);
        assert!(StepSchedule::new(vec![0.1, 0.0]).is_err());
    }

    #[test]
    fn critical_toy_pair_stays_put() {
        let sc = toy_two_agents(0.0, 1.0, ModelVariant::OpenAtOne);
        let tr = solve_clss(&sc, &StepSchedule::uniform(3.0, 77).unwrap()).unwrap();
        assert!(tr.states.iter().all(|s| s.positions() == [0.0, 1.0]));
    }
}
