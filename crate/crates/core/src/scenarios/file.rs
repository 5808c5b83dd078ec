//! TOML scenario files.
//!
//! ```toml
//! label = "three agents, case E"
//! variant = "open"
//! agents = 3
//! dim = 1
//! positions = [-1.0, 0.0, 1.0]
//!
//! [kernel]
//! kind = "constant"
//! value = 1.0
//!
//! [expected]
//! limit_1 = -0.5
//! ```
//!
//! Kernel kinds: `constant`, `affine`, `table` (shared by every pair),
//! `pairs` (one kernel per pair, upper triangle row by row) and `file`
//! (a table in the `i j r value` text format, path relative to the scenario).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError};
use crate::model::{Configuration, InteractionKernel, ModelVariant, PairKernel};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    label: String,
    variant: String,
    agents: usize,
    dim: usize,
    positions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    multiplicity: Option<Vec<f64>>,
    kernel: KernelSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    expected: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum KernelSpec {
    Constant { value: f64 },
    Affine { at_zero: f64, slope: f64 },
    Table { r: Vec<f64>, value: Vec<f64> },
    Pairs { pairs: Vec<PairKernel> },
    File { path: String },
}

fn spec_of(kernel: &InteractionKernel) -> KernelSpec {
    match kernel.as_uniform() {
        Some(PairKernel::Constant { value }) => KernelSpec::Constant { value: *value },
        Some(PairKernel::Affine { at_zero, slope }) => KernelSpec::Affine { at_zero: *at_zero, slope: *slope },
        Some(PairKernel::Table { r, value }) => KernelSpec::Table { r: r.clone(), value: value.clone() },
        None => {
            let n = kernel.n_agents();
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    pairs.push(kernel.pair(i, j).clone());
                }
            }
            KernelSpec::Pairs { pairs }
        }
    }
}

pub fn scenario_to_toml(s: &Scenario) -> Result<String, ScenarioError> {
    let file = ScenarioFile {
        label: s.label.clone(),
        variant: s.variant.name().to_string(),
        agents: s.n_agents(),
        dim: s.dim(),
        positions: s.initial.positions().to_vec(),
        multiplicity: s.kernel.multiplicity().map(<[f64]>::to_vec),
        kernel: spec_of(&s.kernel),
        expected: s.expected.clone(),
    };
    toml::to_string(&file).map_err(|e| ScenarioError::Format(e.to_string()))
}

/// Parses a scenario; `base` resolves relative kernel-table paths.
pub fn scenario_from_toml(text: &str, base: Option<&Path>) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Format(e.to_string()))?;
    let variant = ModelVariant::parse(&file.variant)
        .ok_or_else(|| ScenarioError::Format(format!("unknown variant {:?}", file.variant)))?;
    if file.positions.len() != file.agents * file.dim {
        return Err(ScenarioError::Format(format!(
            "{} agents in dimension {} need {} coordinates, found {}",
            file.agents,
            file.dim,
            file.agents * file.dim,
            file.positions.len()
        )));
    }
    let initial = Configuration::new(file.dim, file.positions)?;
    let n = file.agents;
    let mut kernel = match file.kernel {
        KernelSpec::Constant { value } => InteractionKernel::constant(n, value)?,
        KernelSpec::Affine { at_zero, slope } => InteractionKernel::uniform(n, PairKernel::Affine { at_zero, slope })?,
        KernelSpec::Table { r, value } => InteractionKernel::uniform(n, PairKernel::Table { r, value })?,
        KernelSpec::Pairs { pairs } => InteractionKernel::per_pair(n, pairs)?,
        KernelSpec::File { path } => {
            let full = base.map_or_else(|| Path::new(&path).to_path_buf(), |b| b.join(&path));
            InteractionKernel::from_table_text(&std::fs::read_to_string(full)?)?
        }
    };
    if let Some(m) = file.multiplicity {
        kernel = kernel.with_multiplicity(m)?;
    }
    let mut s = Scenario::new(kernel, variant, initial, file.label)?;
    s.expected = file.expected;
    Ok(s)
}

pub fn read_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    scenario_from_toml(&text, path.parent())
}

pub fn write_scenario(s: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, scenario_to_toml(s)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    #[test]
    fn round_trips_exactly() {
        let cases = [
            clss_ten_agents(),
            three_agents(ThreeAgentCase::E, &[]).unwrap(),
            distancing_lumped(2, &[100, 10_000], &[]).unwrap(),
            remark71_scenario(0.3).unwrap(),
        ];
        for s in cases {
            let text = scenario_to_toml(&s).unwrap();
            let back = scenario_from_toml(&text, None).unwrap();
            assert_eq!(back, s, "{text}");
        }
    }

    #[test]
    fn per_pair_kernel_round_trips() {
        let ks = vec![
            PairKernel::constant(1.0),
            PairKernel::Affine { at_zero: 2.0, slope: -1.0 },
            PairKernel::Table { r: vec![0.0, 1.0], value: vec![1.0, 0.5] },
        ];
        let kernel = InteractionKernel::per_pair(3, ks).unwrap();
        let s = Scenario::new(kernel, ModelVariant::ClosedAtOne, Configuration::line(&[0.0, 0.3, 0.9]).unwrap(), "mixed")
            .unwrap();
        let back = scenario_from_toml(&scenario_to_toml(&s).unwrap(), None).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_files() {
        let bad = "label='x'\nvariant='sideways'\nagents=1\ndim=1\npositions=[0.0]\n[kernel]\nkind='constant'\nvalue=1.0\n";
        assert!(scenario_from_toml(bad, None).is_err());
        let short = "label='x'\nvariant='open'\nagents=2\ndim=1\npositions=[0.0]\n[kernel]\nkind='constant'\nvalue=1.0\n";
        assert!(scenario_from_toml(short, None).is_err());
    }
}
