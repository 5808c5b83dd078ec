//! Builders for the worked examples: the two-agent toy, the three-agent cases,
//! the unit square, the cluster-distancing construction, the ten-agent
//! sample-and-hold example and the closed-variant two-cluster example.

mod file;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Configuration, InteractionKernel, ModelError, ModelVariant};

pub use file::{read_scenario, scenario_from_toml, scenario_to_toml, write_scenario};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("scenario file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Initial datum plus the model it is run under.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kernel: InteractionKernel,
    pub variant: ModelVariant,
    pub initial: Configuration,
    pub label: String,
    /// Named reference values the scenario is expected to reproduce.
    pub expected: BTreeMap<String, f64>,
}

impl Scenario {
    pub fn new(
        kernel: InteractionKernel,
        variant: ModelVariant,
        initial: Configuration,
        label: impl Into<String>,
    ) -> Result<Self, ScenarioError> {
        if kernel.n_agents() != initial.n_agents() {
            return Err(ScenarioError::Argument(format!(
                "kernel sized for {} agents, initial datum has {}",
                kernel.n_agents(),
                initial.n_agents()
            )));
        }
        Ok(Self { kernel, variant, initial, label: label.into(), expected: BTreeMap::new() })
    }

    pub fn unit(variant: ModelVariant, initial: Configuration, label: &str) -> Self {
        let kernel = InteractionKernel::constant(initial.n_agents(), 1.0).expect("unit kernel");
        Self::new(kernel, variant, initial, label).expect("sizes agree by construction")
    }

    pub fn with_variant(mut self, variant: ModelVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn expect(mut self, name: &str, value: f64) -> Self {
        self.expected.insert(name.to_string(), value);
        self
    }

    pub fn expected(&self, name: &str) -> Option<f64> {
        self.expected.get(name).copied()
    }

    pub fn n_agents(&self) -> usize {
        self.initial.n_agents()
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }
}

/// Two agents on the line with `phi = 1`.
pub fn toy_two_agents(x10: f64, x20: f64, variant: ModelVariant) -> Scenario {
    let initial = Configuration::line(&[x10, x20]).expect("finite toy datum");
    let gap = (x10 - x20).abs();
    let mut s = Scenario::unit(variant, initial, "two agents on the line");
    if gap < 1.0 || (gap == 1.0 && variant == ModelVariant::ClosedAtOne) {
        s = s.expect("limit", 0.5 * (x10 + x20));
    }
    s
}

/// The three-agent initial-condition families on the line, with `x_2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThreeAgentCase {
    /// `x_1 < -1`, `x_3 > 1`; params `[x_1, x_3]`.
    A,
    /// `-1 < x_1 <= 0 <= x_3 < 1`; params `[x_1, x_3]`.
    B,
    /// `x_1 = -1`, `x_3 > 1`; params `[x_3]`.
    C,
    /// `x_1 = -1`, `0 < x_3 < 1`; params `[x_3]`.
    D,
    /// `(-1, 0, 1)`; no params.
    E,
}

impl ThreeAgentCase {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().trim_start_matches("ic-") {
            "a" => Some(Self::A),
            "b" => Some(Self::B),
            "c" => Some(Self::C),
            "d" => Some(Self::D),
            "e" => Some(Self::E),
            _ => None,
        }
    }
}

pub fn three_agents(case: ThreeAgentCase, params: &[f64]) -> Result<Scenario, ScenarioError> {
    let want = match case {
        ThreeAgentCase::A | ThreeAgentCase::B => 2,
        ThreeAgentCase::C | ThreeAgentCase::D => 1,
        ThreeAgentCase::E => 0,
    };
    if params.len() != want {
        return Err(ScenarioError::Argument(format!("case {case:?} takes {want} parameters, got {}", params.len())));
    }
    let bad = |why: &str| Err(ScenarioError::Argument(format!("case {case:?}: {why}")));
    let (x1, x3) = match case {
        ThreeAgentCase::A => {
            if !(params[0] < -1.0 && params[1] > 1.0) {
                return bad("needs x1 < -1 and x3 > 1");
            }
            (params[0], params[1])
        }
        ThreeAgentCase::B => {
            if !(params[0] > -1.0 && params[0] <= 0.0 && params[1] >= 0.0 && params[1] < 1.0) {
                return bad("needs -1 < x1 <= 0 <= x3 < 1");
            }
            (params[0], params[1])
        }
        ThreeAgentCase::C => {
            if !(params[0] > 1.0) {
                return bad("needs x3 > 1");
            }
            (-1.0, params[0])
        }
        ThreeAgentCase::D => {
            if !(params[0] > 0.0 && params[0] < 1.0) {
                return bad("needs 0 < x3 < 1");
            }
            (-1.0, params[0])
        }
        ThreeAgentCase::E => (-1.0, 1.0),
    };
    let initial = Configuration::line(&[x1, 0.0, x3])?;
    let label = format!("three agents, case {case:?}");
    let mut s = Scenario::unit(ModelVariant::OpenAtOne, initial, &label);
    match case {
        ThreeAgentCase::A => s = s.expect("limit_1", x1).expect("limit_2", 0.0).expect("limit_3", x3),
        ThreeAgentCase::B => {
            let m = (x1 + x3) / 3.0;
            s = s.expect("limit_1", m).expect("limit_2", m).expect("limit_3", m);
        }
        ThreeAgentCase::C => s = s.expect("limit_1", -0.5).expect("limit_2", -0.5).expect("limit_3", x3),
        ThreeAgentCase::D => {}
        ThreeAgentCase::E => {
            s = s
                .expect("beta_limit", 0.0)
                .expect("gamma_limit_1", -0.5)
                .expect("gamma_limit_3", 1.0)
                .expect("delta_limit_1", -1.0)
                .expect("delta_limit_2", 0.5)
                .expect("sliding_limit_1", -2.0 / 3.0)
                .expect("sliding_limit_2", 1.0 / 3.0);
        }
    }
    Ok(s)
}

/// Four agents at the corners of the unit square, numbered counterclockwise
/// from the origin.
pub fn square4(variant: ModelVariant) -> Scenario {
    let initial = Configuration::new(2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]).expect("square");
    Scenario::unit(variant, initial, "unit square")
        .expect("barycenter_x", 0.5)
        .expect("barycenter_y", 0.5)
}

/// Contact parameters of the cluster-distancing construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DistancingLayout {
    pub group_sizes: Vec<usize>,
    /// Offset parameter of the second group (empty for fewer than two levels).
    pub epsilons: Vec<f64>,
    /// Position of each group: origin agent first.
    pub positions: Vec<[f64; 2]>,
    /// Time at which the first group reaches distance one from the second.
    pub contact_time: Option<f64>,
}

/// Placement of the construction: one agent at the origin, `N_1` agents at
/// `(1, 0)`, and (level two) `N_2` agents placed so that, while the first
/// `N_1 + 1` agents merge, all of them reach distance one from the new group
/// at the same instant.
///
/// While the first two groups merge their gap is `(N_1 + 1) eps(t)` with
/// `eps(t) = exp(-(N_1 + 1) t) / (N_1 + 1)`, so contact at `eps(t) = eps_2`
/// happens at `t = ln(eps(0) / eps_2) / (N_1 + 1)`.
///
/// Only two levels are supported: a third group would have to touch three
/// separated clusters at once, and their circumradius is below one half.
pub fn distancing_layout(levels: usize, group_sizes: &[usize], epsilons: &[f64]) -> Result<DistancingLayout, ScenarioError> {
    let arg = |m: String| Err(ScenarioError::Argument(m));
    if levels > 2 {
        return arg(format!(
            "{levels} levels requested; simultaneous contact is only constructible for up to two levels"
        ));
    }
    if group_sizes.len() != levels {
        return arg(format!("{levels} levels need {levels} group sizes, got {}", group_sizes.len()));
    }
    if group_sizes.iter().any(|&n| n == 0) || group_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return arg("group sizes must be positive and strictly increasing".into());
    }
    let mut positions = vec![[0.0, 0.0]];
    if levels == 0 {
        return Ok(DistancingLayout { group_sizes: vec![], epsilons: vec![], positions, contact_time: None });
    }
    positions.push([1.0, 0.0]);
    if levels == 1 {
        return Ok(DistancingLayout {
            group_sizes: group_sizes.to_vec(),
            epsilons: vec![],
            positions,
            contact_time: None,
        });
    }
    let n1 = group_sizes[0] as f64;
    let eps0 = 1.0 / (n1 + 1.0);
    let eps2 = match epsilons {
        [] => eps0 * 1e-3,
        [e] => *e,
        _ => return arg("level two takes a single epsilon".into()),
    };
    if !(eps2 > 0.0 && eps2 < eps0) {
        return arg(format!("epsilon {eps2} must lie in (0, {eps0}) for contact to happen after t = 0"));
    }
    let half = eps2 * (n1 + 1.0) / 2.0;
    let under = 1.0 - half * half;
    if under < 0.0 {
        return arg(format!("epsilon {eps2} puts the square root argument below zero"));
    }
    let y = [n1 / (n1 + 1.0) + eps2 * (1.0 - n1) / 2.0, under.sqrt()];
    positions.push(y);
    Ok(DistancingLayout {
        group_sizes: group_sizes.to_vec(),
        epsilons: vec![eps2],
        positions,
        contact_time: Some((eps0 / eps2).ln() / (n1 + 1.0)),
    })
}

fn distancing_expectations(mut s: Scenario, layout: &DistancingLayout) -> Scenario {
    let sizes: Vec<f64> = std::iter::once(1.0).chain(layout.group_sizes.iter().map(|&n| n as f64)).collect();
    let total: f64 = sizes.iter().sum();
    let mut bar = [0.0, 0.0];
    for (m, p) in sizes.iter().zip(&layout.positions) {
        bar[0] += m * p[0] / total;
        bar[1] += m * p[1] / total;
    }
    s = s.expect("interacting_limit_x", bar[0]).expect("interacting_limit_y", bar[1]);
    s.expect("limit_distance", (bar[0] * bar[0] + bar[1] * bar[1]).sqrt())
}

/// The construction with every agent simulated explicitly.
pub fn distancing(levels: usize, group_sizes: &[usize], epsilons: &[f64]) -> Result<Scenario, ScenarioError> {
    let layout = distancing_layout(levels, group_sizes, epsilons)?;
    let mut pts = vec![layout.positions[0].to_vec()];
    for (k, &n) in layout.group_sizes.iter().enumerate() {
        pts.extend(std::iter::repeat(layout.positions[k + 1].to_vec()).take(n));
    }
    let initial = Configuration::from_points(&pts)?;
    let s = Scenario::unit(ModelVariant::OpenAtOne, initial, "cluster distancing");
    Ok(distancing_expectations(s, &layout))
}

/// The same construction with each coincident group lumped into one agent of
/// matching multiplicity. Coincident agents stay coincident under the
/// dynamics, so this is exact and costs three agents instead of thousands.
pub fn distancing_lumped(levels: usize, group_sizes: &[usize], epsilons: &[f64]) -> Result<Scenario, ScenarioError> {
    let layout = distancing_layout(levels, group_sizes, epsilons)?;
    let pts: Vec<Vec<f64>> = layout.positions.iter().map(|p| p.to_vec()).collect();
    let initial = Configuration::from_points(&pts)?;
    let masses = std::iter::once(1.0).chain(layout.group_sizes.iter().map(|&n| n as f64)).collect();
    let kernel = InteractionKernel::constant(pts.len(), 1.0)?.with_multiplicity(masses)?;
    let s = Scenario::new(kernel, ModelVariant::OpenAtOne, initial, "cluster distancing, lumped groups")?;
    Ok(distancing_expectations(s, &layout))
}

/// Constants of the ten-agent sample-and-hold example.
pub mod clss10 {
    pub const EPS: f64 = 0.1;
    pub const T: f64 = 0.01;

    pub fn b() -> f64 {
        127.0 / (10.0 * 91f64.sqrt())
    }

    /// `sqrt(1 - (1/2 - 2 eps)^2)`
    pub fn s() -> f64 {
        let a = 0.5 - 2.0 * EPS;
        (1.0 - a * a).sqrt()
    }

    /// Closed form of the solution in which agents 1, 2 never meet the others.
    pub fn separate_solution(t: f64) -> [[f64; 2]; 10] {
        let b = b();
        let d = (b - s()) * (2.0 * T - 2.0 * t).exp();
        let h = (0.5 - 2.0 * EPS) * (8.0 * T - 8.0 * t).exp();
        let mut out = [[0.0; 2]; 10];
        out[0] = [0.0, b - d];
        out[1] = [0.0, b + d];
        for k in 2..6 {
            out[k] = [h, 0.0];
        }
        for k in 6..10 {
            out[k] = [-h, 0.0];
        }
        out
    }
}

pub fn clss_ten_agents() -> Scenario {
    let pts = clss10::separate_solution(0.0);
    let flat: Vec<f64> = pts.iter().flatten().copied().collect();
    let initial = Configuration::new(2, flat).expect("finite datum");
    Scenario::unit(ModelVariant::OpenAtOne, initial, "ten agents, sample-and-hold non-uniqueness")
        .expect("B", clss10::b())
        .expect("T", clss10::T)
        .expect("eps", clss10::EPS)
        .expect("jump_early_coefficient", 36.0 / 56875.0)
        .expect("jump_late_coefficient", 3186.0 / 1421875.0)
        .expect("uniform_coefficient", 27.0 / 62500.0)
}

/// Closed variant, `(0, eps), (0, -eps), (1, 0)`: the first two merge at the
/// origin, which ends up exactly at distance one from the third agent.
pub fn remark71_scenario(eps: f64) -> Result<Scenario, ScenarioError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(ScenarioError::Argument(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    let initial = Configuration::new(2, vec![0.0, eps, 0.0, -eps, 1.0, 0.0])?;
    Ok(Scenario::unit(ModelVariant::ClosedAtOne, initial, "closed variant, clusters at distance one")
        .expect("limit_12_x", 0.0)
        .expect("limit_12_y", 0.0)
        .expect("limit_3_x", 1.0)
        .expect("limit_3_y", 0.0))
}

/// `0, 1, ..., N-1` on the line.
pub fn unit_spaced(n: usize, variant: ModelVariant) -> Scenario {
    let xs: Vec<f64> = (0..n).map(|k| k as f64).collect();
    Scenario::unit(variant, Configuration::line(&xs).expect("finite"), "unit-spaced chain")
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "toy-critical", "toy-close", "toy-far", "ic-a", "ic-b", "ic-c", "ic-d", "ic-e", "square", "square-closed",
    "distancing", "distancing-lumped", "clss10", "closed-gap",
];

/// Built-in scenarios under their command-line names.
pub fn builtin(name: &str) -> Option<Scenario> {
    use ModelVariant::*;
    let s = match name {
        "toy-critical" => toy_two_agents(0.0, 1.0, OpenAtOne),
        "toy-close" => toy_two_agents(0.0, 0.5, OpenAtOne),
        "toy-far" => toy_two_agents(0.0, 2.0, OpenAtOne),
        "ic-a" => three_agents(ThreeAgentCase::A, &[-1.5, 1.5]).ok()?,
        "ic-b" => three_agents(ThreeAgentCase::B, &[-0.9, 0.9]).ok()?,
        "ic-c" => three_agents(ThreeAgentCase::C, &[1.5]).ok()?,
        "ic-d" => three_agents(ThreeAgentCase::D, &[0.5]).ok()?,
        "ic-e" => three_agents(ThreeAgentCase::E, &[]).ok()?,
        "square" => square4(OpenAtOne),
        "square-closed" => square4(ClosedAtOne),
        "distancing" => distancing(2, &[5, 10], &[]).ok()?,
        "distancing-lumped" => distancing_lumped(2, &[100, 10_000], &[]).ok()?,
        "clss10" => clss_ten_agents(),
        "closed-gap" => remark71_scenario(0.25).ok()?,
        _ => return None,
    };
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_agent_cases() {
        let e = three_agents(ThreeAgentCase::E, &[]).unwrap();
        assert_eq!(e.initial.positions(), &[-1.0, 0.0, 1.0]);
        let c = three_agents(ThreeAgentCase::C, &[1.5]).unwrap();
        assert_eq!(c.initial.positions(), &[-1.0, 0.0, 1.5]);
        assert!(three_agents(ThreeAgentCase::A, &[-1.2, 1.2]).is_ok());
        assert!(three_agents(ThreeAgentCase::A, &[-0.5, 1.2]).is_err());
        assert!(three_agents(ThreeAgentCase::D, &[1.5]).is_err());
    }

    #[test]
    fn clss_constants() {
        let s = clss_ten_agents();
        assert!((s.expected("B").unwrap() - 1.3313217426).abs() < 1e-9);
        assert!(s.initial.dist_sq(0, 1) < 1.0);
        // agents 1 and 3 are just outside distance one at t = 0
        assert!(s.initial.dist_sq(0, 2) > 1.0);
    }

    #[test]
    fn distancing_placement_is_equidistant_at_contact() {
        let layout = distancing_layout(2, &[5, 10], &[0.004]).unwrap();
        let y = layout.positions[2];
        assert!((y[0] - (5.0 / 6.0 - 0.008)).abs() < 1e-15);
        let n1 = 5.0;
        let eps = 0.004;
        let x1 = [n1 / (n1 + 1.0) - n1 * eps, 0.0];
        let xo = [n1 / (n1 + 1.0) + eps, 0.0];
        for p in [x1, xo] {
            let d2 = (p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2);
            assert!((d2 - 1.0).abs() < 1e-14);
        }
        assert!(distancing_layout(3, &[1, 2, 3], &[]).is_err());
        assert!(distancing_layout(2, &[10, 5], &[]).is_err());
        assert_eq!(distancing_layout(0, &[], &[]).unwrap().positions.len(), 1);
    }

    #[test]
    fn closed_gap_range() {
        assert!(remark71_scenario(0.25).is_ok());
        assert!(remark71_scenario(0.49).is_ok());
        assert!(remark71_scenario(0.6).is_err());
    }

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_NAMES {
            assert!(builtin(name).is_some(), "{name}");
        }
    }
}
