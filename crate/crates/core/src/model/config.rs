use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Joint state of `N` agents in `R^n`, stored agent-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    dim: usize,
    positions: Vec<f64>,
}

impl Configuration {
    pub fn new(dim: usize, positions: Vec<f64>) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::Dimension("spatial dimension must be positive".into()));
        }
        if positions.is_empty() || positions.len() % dim != 0 {
            return Err(ModelError::Dimension(format!(
                "{} coordinates do not split into agents of dimension {dim}",
                positions.len()
            )));
        }
        if let Some(k) = positions.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(k));
        }
        Ok(Self { dim, positions })
    }

    /// Agents on the real line.
    pub fn line(xs: &[f64]) -> Result<Self, ModelError> {
        Self::new(1, xs.to_vec())
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, ModelError> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(ModelError::Dimension("points of mixed dimension".into()));
        }
        Self::new(dim, points.concat())
    }

    // Internal constructor for solver hot paths where the buffer is known to be valid.
    pub(crate) fn from_raw(dim: usize, positions: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && positions.len() % dim == 0);
        Self { dim, positions }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_agents(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.positions.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn dist_sq(&self, i: usize, j: usize) -> f64 {
        dist_sq(self.agent(i), self.agent(j))
    }

    /// Mean position, weighted by agent multiplicities when given.
    pub fn barycenter(&self, masses: Option<&[f64]>) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut total = 0.0;
        for i in 0..self.n_agents() {
            let m = masses.map_or(1.0, |m| m[i]);
            total += m;
            for (o, x) in out.iter_mut().zip(self.agent(i)) {
                *o += m * x;
            }
        }
        out.iter_mut().for_each(|o| *o /= total);
        out
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut positions = self.positions.clone();
        for chunk in positions.chunks_mut(self.dim) {
            for (x, s) in chunk.iter_mut().zip(shift) {
                *x += s;
            }
        }
        Self { dim: self.dim, positions }
    }
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Unordered pair of distinct agents (zero-based, stored with `i < j`).
/// Serialized in the one-based `i-j` form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
}

impl Pair {
    /// Panics if `a == b`.
    pub fn new(a: usize, b: usize) -> Self {
        Self::try_new(a, b).expect("a pair needs two distinct agents")
    }

    pub fn try_new(a: usize, b: usize) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self { i: a, j: b }),
            std::cmp::Ordering::Greater => Some(Self { i: b, j: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn contains(&self, k: usize) -> bool {
        self.i == k || self.j == k
    }

    pub fn other(&self, k: usize) -> usize {
        if self.i == k {
            self.j
        } else {
            self.i
        }
    }

    /// Parses the one-based `i-j` form used in files and on the command line.
    pub fn parse_one_based(s: &str) -> Option<Self> {
        let (a, b) = s.trim().split_once(['-', ','])?;
        let a: usize = a.trim().parse().ok()?;
        let b: usize = b.trim().parse().ok()?;
        if a == 0 || b == 0 {
            return None;
        }
        Self::try_new(a - 1, b - 1)
    }
}

/// One-based display, matching how agents are numbered in output files.
impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.i + 1, self.j + 1)
    }
}

impl Serialize for Pair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Pair::parse_one_based(&s).ok_or_else(|| serde::de::Error::custom(format!("bad pair {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_nonfinite() {
        assert!(Configuration::new(2, vec![0.0; 3]).is_err());
        assert!(Configuration::new(1, vec![0.0, f64::NAN]).is_err());
        assert!(Configuration::new(0, vec![]).is_err());
        assert!(Configuration::new(2, vec![]).is_err());
    }

    #[test]
    fn pair_normalizes_and_parses() {
        assert_eq!(Pair::new(3, 1), Pair { i: 1, j: 3 });
        assert_eq!(Pair::parse_one_based("2-3"), Some(Pair::new(1, 2)));
        assert_eq!(Pair::parse_one_based("1,2"), Some(Pair::new(0, 1)));
        assert_eq!(Pair::parse_one_based("2-2"), None);
        assert_eq!(Pair::new(0, 1).to_string(), "1-2");
        let json = serde_json::to_string(&Pair::new(1, 2)).unwrap();
        assert_eq!(json, "\"2-3\"");
        assert_eq!(serde_json::from_str::<Pair>(&json).unwrap(), Pair::new(1, 2));
    }

    #[test]
    fn weighted_barycenter() {
        let c = Configuration::line(&[0.0, 1.0]).unwrap();
        assert_eq!(c.barycenter(None), vec![0.5]);
        assert_eq!(c.barycenter(Some(&[1.0, 3.0])), vec![0.75]);
    }
}
