use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::dynamics::{half_rate, interior_pairs, Guard, GraphSystem};
use super::integrator::{integrate, Exit};
use super::{EventCause, EventRecord, SolveOptions, SolverError, Trajectory};
use crate::geometry::active_pull;
use crate::model::{boundary_pairs, Configuration, InteractionKernel, ModelError, ModelVariant, Pair};

/// A fixed set of interacting pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionGraph {
    edges: BTreeSet<Pair>,
}

impl InteractionGraph {
    pub fn new(n_agents: usize, edges: impl IntoIterator<Item = Pair>) -> Result<Self, SolverError> {
        let edges: BTreeSet<Pair> = edges.into_iter().collect();
        if let Some(p) = edges.iter().find(|p| p.j >= n_agents) {
            return Err(SolverError::Argument(format!("edge {p} outside {n_agents} agents")));
        }
        Ok(Self { edges })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn complete(n_agents: usize) -> Self {
        let mut edges = BTreeSet::new();
        for i in 0..n_agents {
            for j in i + 1..n_agents {
                edges.insert(Pair::new(i, j));
            }
        }
        Self { edges }
    }

    /// Pairs strictly inside distance one.
    pub fn interior(config: &Configuration) -> Self {
        Self { edges: interior_pairs(config, 0.0).into_iter().collect() }
    }

    pub fn edges(&self) -> Vec<Pair> {
        self.edges.iter().copied().collect()
    }

    pub fn contains(&self, p: Pair) -> bool {
        self.edges.contains(&p)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Picks the interaction graph for a configuration on the discontinuity set.
///
/// Starts from the pairs strictly inside distance one and walks the boundary
/// pairs in `ordering` (sorted order when `None`), adding a pair whenever the
/// rest of the current graph does not push it apart faster than half of its
/// own pull: `alpha_ij <= (m_i + m_j) phi_ij(1) / 2`. Every added pair then
/// strictly merges and every skipped one strictly separates, unless a later
/// addition changes the picture, which the run loop checks.
pub fn resolve_graph_at_m(
    config: &Configuration,
    kernel: &InteractionKernel,
    _variant: ModelVariant,
    ordering: Option<&[Pair]>,
) -> Result<InteractionGraph, SolverError> {
    check_sizes(config, kernel)?;
    let band = super::SolveOptions::default().event_band;
    let boundary = boundary_pairs(config, band);
    let order: Vec<Pair> = match ordering {
        Some(o) => {
            if let Some(p) = boundary.iter().find(|p| !o.contains(p)) {
                return Err(SolverError::Argument(format!("ordering misses boundary pair {p}")));
            }
            o.iter().copied().filter(|p| boundary.contains(p)).collect()
        }
        None => boundary,
    };
    let mut edges = interior_pairs(config, band);
    grow(config, kernel, &mut edges, &[], &order)?;
    InteractionGraph::new(config.n_agents(), edges)
}

/// The resolution recursion; `edges` is extended in place.
pub(crate) fn grow(
    config: &Configuration,
    kernel: &InteractionKernel,
    edges: &mut Vec<Pair>,
    pins: &[Pair],
    order: &[Pair],
) -> Result<(), SolverError> {
    let x = config.positions();
    let d = config.dim();
    let mut v = vec![0.0; x.len()];
    for &p in order {
        let sys = GraphSystem::new(kernel, d, edges, pins, false);
        super::integrator::System::eval(&sys, x, &mut v)?;
        if half_rate(x, &v, d, p) <= 0.5 * active_pull(kernel, p.i, p.j) {
            edges.push(p);
        }
    }
    edges.sort();
    Ok(())
}

fn check_sizes(config: &Configuration, kernel: &InteractionKernel) -> Result<(), SolverError> {
    if config.n_agents() != kernel.n_agents() {
        return Err(ModelError::Dimension(format!(
            "configuration has {} agents, kernel {}",
            config.n_agents(),
            kernel.n_agents()
        ))
        .into());
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum SmoothExit {
    Horizon,
    /// Some pair reached distance one; edges from inside, non-edges from outside.
    Event { time: f64, pairs: Vec<Pair> },
}

/// Integrates the graph-restricted dynamics until `horizon` or the first
/// crossing of distance one.
pub fn integrate_smooth(
    config: &Configuration,
    graph: &InteractionGraph,
    kernel: &InteractionKernel,
    horizon: f64,
    opts: &SolveOptions,
) -> Result<(Trajectory, SmoothExit), SolverError> {
    check_sizes(config, kernel)?;
    let d = config.dim();
    let edges = graph.edges();
    let sys = GraphSystem::new(kernel, d, &edges, &[], true);
    let mut traj = Trajectory::new(d, kernel.multiplicity().map(<[f64]>::to_vec));
    traj.push(0.0, config.positions());
    traj.start_segment(edges.clone(), Vec::new());
    let rate = kernel.rate_scale();
    let dt = opts.sample_dt_for(rate, horizon);
    let out = integrate(&sys, 0.0, config.positions(), horizon, rate, dt, &opts.integrator_for(kernel), &mut |t, x| {
        traj.push(t, x)
    })?;
    traj.push(out.t, &out.x);
    let exit = match out.exit {
        Exit::Reached => SmoothExit::Horizon,
        Exit::Event(ks) => {
            let mut pairs: Vec<Pair> = ks
                .iter()
                .filter_map(|&k| match sys.guard(k) {
                    Guard::Above(p) | Guard::Below(p) => Some(p),
                    _ => None,
                })
                .collect();
            pairs.sort();
            pairs.dedup();
            traj.events.push(EventRecord {
                time: out.t,
                cause: EventCause::Crossing,
                pairs: pairs.clone(),
                class: None,
                activated: Vec::new(),
                inactive: Vec::new(),
                pinned: Vec::new(),
                note: String::new(),
            });
            SmoothExit::Event { time: out.t, pairs }
        }
    };
    Ok((traj, exit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_agents_merge_exponentially() {
        let k = InteractionKernel::constant(2, 1.0).unwrap();
        let c = Configuration::line(&[0.0, 1.0 - 1e-9]).unwrap();
        let (traj, exit) = integrate_smooth(&c, &InteractionGraph::complete(2), &k, 5.0, &SolveOptions::default())
            .unwrap();
        assert_eq!(exit, SmoothExit::Horizon);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let gap = s.positions()[0] - s.positions()[1];
            assert!((gap + (1.0 - 1e-9) * (-2.0 * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn pair_graph_leaves_third_agent_alone() {
        let k = InteractionKernel::constant(3, 1.0).unwrap();
        let c = Configuration::line(&[0.0, 0.5, 2.2]).unwrap();
        let g = InteractionGraph::new(3, [Pair::new(0, 1)]).unwrap();
        let (traj, exit) = integrate_smooth(&c, &g, &k, 20.0, &SolveOptions::default()).unwrap();
        assert_eq!(exit, SmoothExit::Horizon);
        let f = traj.final_state().positions();
        assert!((f[0] - 0.25).abs() < 1e-8 && (f[1] - 0.25).abs() < 1e-8 && f[2] == 2.2);
    }

    #[test]
    fn resolution_at_ic_e_and_ic_c() {
        let k = InteractionKernel::constant(3, 1.0).unwrap();
        let e = Configuration::line(&[-1.0, 0.0, 1.0]).unwrap();
        let g = resolve_graph_at_m(&e, &k, ModelVariant::OpenAtOne, None).unwrap();
        assert_eq!(g.edges(), vec![Pair::new(0, 1), Pair::new(1, 2)]);
        let c = Configuration::line(&[-1.0, 0.0, 1.7]).unwrap();
        let g = resolve_graph_at_m(&c, &k, ModelVariant::OpenAtOne, None).unwrap();
        assert_eq!(g.edges(), vec![Pair::new(0, 1)]);
    }
}
