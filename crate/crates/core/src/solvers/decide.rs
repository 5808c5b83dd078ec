//! Local consistency of an interaction graph at a boundary configuration.

use super::dynamics::{half_rate, theta_of, GraphSystem};
use super::integrator::{rk4, System};
use super::{SolveOptions, SolverError};
use crate::model::{Configuration, InteractionKernel, ModelVariant, Pair};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Trend {
    Inward,
    Outward,
    Flat,
}

/// Whether a boundary pair may keep the given status while moving as `trend`.
///
/// Off pairs may sit still only when the weight at distance one is zero;
/// on pairs may sit still only when it is not.
pub(crate) fn admissible(variant: ModelVariant, active: bool, trend: Trend) -> bool {
    match (variant, active, trend) {
        (_, true, Trend::Inward) | (_, false, Trend::Outward) => true,
        (ModelVariant::OpenAtOne, false, Trend::Flat) => true,
        (ModelVariant::ClosedAtOne, true, Trend::Flat) => true,
        _ => false,
    }
}

/// How each pair in `pairs` moves under the graph `edges` with `pins` sliding.
/// First-order rates decide when they are clear; otherwise a short RK4 probe
/// looks at the actual displacement.
pub(crate) fn trends(
    kernel: &InteractionKernel,
    config: &Configuration,
    edges: &[Pair],
    pins: &[Pair],
    pairs: &[Pair],
    opts: &SolveOptions,
) -> Result<Vec<Trend>, SolverError> {
    let x = config.positions();
    let d = config.dim();
    let sys = GraphSystem::new(kernel, d, edges, pins, false);
    let mut v = vec![0.0; x.len()];
    sys.eval(x, &mut v)?;
    let scale = kernel.rate_scale().max(1.0);
    let mut out = Vec::with_capacity(pairs.len());
    let mut probe: Option<Vec<f64>> = None;
    for &p in pairs {
        let h = half_rate(x, &v, d, p);
        let tr = if h < -opts.flat_tol * scale {
            Trend::Inward
        } else if h > opts.flat_tol * scale {
            Trend::Outward
        } else {
            if probe.is_none() {
                probe = Some(rk4(&sys, x, 1e-3 / scale, 20)?);
            }
            let y = probe.as_deref().unwrap();
            let dth = theta_of(y, d, p) - theta_of(x, d, p);
            if dth < -1e-13 {
                Trend::Inward
            } else if dth > 1e-13 {
                Trend::Outward
            } else {
                Trend::Flat
            }
        };
        out.push(tr);
    }
    Ok(out)
}

/// Pairs of `boundary` whose status under `edges` is not admissible.
pub(crate) fn violations(
    kernel: &InteractionKernel,
    variant: ModelVariant,
    config: &Configuration,
    edges: &[Pair],
    pins: &[Pair],
    boundary: &[Pair],
    opts: &SolveOptions,
) -> Result<Vec<(Pair, Trend)>, SolverError> {
    let tr = trends(kernel, config, edges, pins, boundary, opts)?;
    Ok(boundary
        .iter()
        .zip(tr)
        .filter(|(p, t)| !admissible(variant, edges.contains(p), *t))
        .map(|(p, t)| (*p, t))
        .collect())
}

/// Largest subsets first, so the search prefers interacting continuations.
pub(crate) fn subsets_by_size(n: usize) -> Vec<u32> {
    let mut all: Vec<u32> = (0..1u32 << n).collect();
    all.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_off_pair_is_open_only() {
        assert!(admissible(ModelVariant::OpenAtOne, false, Trend::Flat));
        assert!(!admissible(ModelVariant::ClosedAtOne, false, Trend::Flat));
        assert!(!admissible(ModelVariant::OpenAtOne, true, Trend::Outward));
    }

    #[test]
    fn third_order_drift_is_seen_by_the_probe() {
        // square corner: with the two neighbours of a corner pulled along the
        // sides, the opposite side closes at third order
        let k = InteractionKernel::constant(4, 1.0).unwrap();
        let c = Configuration::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let edges = [Pair::new(0, 1), Pair::new(1, 2), Pair::new(2, 3)];
        let tr = trends(&k, &c, &edges, &[], &[Pair::new(0, 3)], &SolveOptions::default()).unwrap();
        assert_eq!(tr, vec![Trend::Inward]);
    }

    #[test]
    fn subset_order() {
        assert_eq!(subsets_by_size(2), vec![0b11, 0b01, 0b10, 0b00]);
    }
}
