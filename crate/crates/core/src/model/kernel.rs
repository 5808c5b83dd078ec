use serde::{Deserialize, Serialize};

use super::ModelError;

/// Interaction strength profile `phi: [0,1] -> (0, inf)` for one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PairKernel {
    Constant { value: f64 },
    /// `phi(r) = at_zero + slope * r`
    Affine { at_zero: f64, slope: f64 },
    /// Linear interpolation through `(r, value)` samples covering `[0, 1]`.
    Table { r: Vec<f64>, value: Vec<f64> },
}

impl PairKernel {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Kernel(msg));
        match self {
            Self::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return bad(format!("constant kernel must be positive, got {value}"));
                }
            }
            Self::Affine { at_zero, slope } => {
                let end = at_zero + slope;
                if !(at_zero.is_finite() && slope.is_finite() && *at_zero > 0.0 && end > 0.0) {
                    return bad(format!("affine kernel {at_zero} + {slope} r is not positive on [0,1]"));
                }
            }
            Self::Table { r, value } => {
                if r.len() < 2 || r.len() != value.len() {
                    return bad("a kernel table needs at least two (r, value) rows".into());
                }
                if r[0] != 0.0 || *r.last().unwrap() != 1.0 {
                    return bad("kernel table must start at r = 0 and end at r = 1".into());
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("kernel table radii must be strictly increasing".into());
                }
                if value.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return bad("kernel table values must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        match self {
            Self::Constant { value } => *value,
            Self::Affine { at_zero, slope } => at_zero + slope * r,
            Self::Table { r: rs, value } => {
                let k = rs.partition_point(|&x| x <= r).clamp(1, rs.len() - 1);
                let (r0, r1) = (rs[k - 1], rs[k]);
                let w = (r - r0) / (r1 - r0);
                value[k - 1] * (1.0 - w) + value[k] * w
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Constant { .. } => 0.0,
            Self::Affine { slope, .. } => slope.abs(),
            Self::Table { r, value } => r
                .windows(2)
                .zip(value.windows(2))
                .map(|(r, v)| ((v[1] - v[0]) / (r[1] - r[0])).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Affine { at_zero, slope } => at_zero.max(at_zero + slope),
            Self::Table { value, .. } => value.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `Phi(r) = int_0^min(r,1) phi(s) s ds`.
    pub fn potential(&self, r: f64) -> f64 {
        let top = r.clamp(0.0, 1.0);
        match self {
            Self::Constant { value } => value * top * top / 2.0,
            Self::Table { r: rs, .. } => {
                // Integrate piece by piece so each panel is a smooth cubic.
                let mut acc = 0.0;
                for w in rs.windows(2) {
                    if w[0] >= top {
                        break;
                    }
                    let b = w[1].min(top);
                    acc += adaptive_simpson(&|s| self.eval(s) * s, w[0], b, 1e-13);
                }
                acc
            }
            Self::Affine { .. } => adaptive_simpson(&|s| self.eval(s) * s, 0.0, top, 1e-13),
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 40)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum PairTable {
    Uniform(PairKernel),
    /// Upper triangle, row-major over `i < j`.
    PerPair(Vec<PairKernel>),
}

/// Symmetric table of pair kernels, optionally with agent multiplicities.
///
/// A multiplicity `m_j` lets one simulated agent stand in for `m_j` coincident
/// agents: agent `i` then feels `m_j * a_ij * (x_j - x_i)` from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionKernel {
    n_agents: usize,
    table: PairTable,
    multiplicity: Option<Vec<f64>>,
}

impl InteractionKernel {
    /// `phi_ij = c` for every pair.
    pub fn constant(n_agents: usize, c: f64) -> Result<Self, ModelError> {
        Self::uniform(n_agents, PairKernel::constant(c))
    }

    pub fn uniform(n_agents: usize, phi: PairKernel) -> Result<Self, ModelError> {
        phi.validate()?;
        Ok(Self { n_agents, table: PairTable::Uniform(phi), multiplicity: None })
    }

    /// `pairs` is indexed by the upper triangle in row-major order.
    pub fn per_pair(n_agents: usize, pairs: Vec<PairKernel>) -> Result<Self, ModelError> {
        let want = n_agents * n_agents.saturating_sub(1) / 2;
        if pairs.len() != want {
            return Err(ModelError::Kernel(format!("expected {want} pair kernels, got {}", pairs.len())));
        }
        for p in &pairs {
            p.validate()?;
        }
        Ok(Self { n_agents, table: PairTable::PerPair(pairs), multiplicity: None })
    }

    pub fn with_multiplicity(mut self, m: Vec<f64>) -> Result<Self, ModelError> {
        if m.len() != self.n_agents || m.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ModelError::Kernel("multiplicities must be positive, one per agent".into()));
        }
        self.multiplicity = Some(m);
        Ok(self)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn multiplicity(&self) -> Option<&[f64]> {
        self.multiplicity.as_deref()
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.multiplicity.as_ref().map_or(1.0, |m| m[i])
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairKernel {
        match &self.table {
            PairTable::Uniform(k) => k,
            PairTable::PerPair(ks) => {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                debug_assert!(a != b);
                let n = self.n_agents;
                &ks[a * (2 * n - a - 1) / 2 + (b - a - 1)]
            }
        }
    }

    pub fn phi(&self, i: usize, j: usize, r: f64) -> f64 {
        self.pair(i, j).eval(r)
    }

    pub fn lipschitz(&self, i: usize, j: usize) -> f64 {
        self.pair(i, j).lipschitz()
    }

    /// `max_ij sup phi_ij`.
    pub fn sup(&self) -> f64 {
        match &self.table {
            PairTable::Uniform(k) => k.sup(),
            PairTable::PerPair(ks) => ks.iter().map(PairKernel::sup).fold(0.0, f64::max),
        }
    }

    /// Largest total interaction rate any agent can feel; sets time scales.
    pub fn rate_scale(&self) -> f64 {
        let total_mass: f64 = (0..self.n_agents).map(|i| self.mass(i)).sum();
        self.sup() * total_mass
    }

    /// The shared pair kernel when every pair uses the same one.
    pub fn as_uniform(&self) -> Option<&PairKernel> {
        match &self.table {
            PairTable::Uniform(k) => Some(k),
            PairTable::PerPair(_) => None,
        }
    }

    pub fn is_uniform_constant(&self) -> Option<f64> {
        match &self.table {
            PairTable::Uniform(PairKernel::Constant { value }) => Some(*value),
            _ => None,
        }
    }

    pub fn potential(&self, i: usize, j: usize, r: f64) -> f64 {
        self.pair(i, j).potential(r)
    }

    /// Parses rows `i j r value` (one-based agents) after a header line.
    /// Rows for `(i, j)` and `(j, i)` may both appear but must agree.
    pub fn from_table_text(text: &str) -> Result<Self, ModelError> {
        use std::collections::BTreeMap;
        let mut rows: BTreeMap<(usize, usize), BTreeMap<u64, f64>> = BTreeMap::new();
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines.next().ok_or_else(|| ModelError::Kernel("empty kernel table".into()))?;
        let cols: Vec<&str> = header.split_whitespace().collect();
        if cols != ["i", "j", "r", "value"] {
            return Err(ModelError::Kernel(format!("unexpected kernel table header {header:?}")));
        }
        let mut n = 0;
        for (lineno, line) in lines.enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            let parse_err = || ModelError::Kernel(format!("bad kernel row {}: {line:?}", lineno + 2));
            if f.len() != 4 {
                return Err(parse_err());
            }
            let i: usize = f[0].parse().map_err(|_| parse_err())?;
            let j: usize = f[1].parse().map_err(|_| parse_err())?;
            let r: f64 = f[2].parse().map_err(|_| parse_err())?;
            let v: f64 = f[3].parse().map_err(|_| parse_err())?;
            if i == 0 || j == 0 || i == j {
                return Err(parse_err());
            }
            n = n.max(i).max(j);
            let key = (i.min(j) - 1, i.max(j) - 1);
            let slot = rows.entry(key).or_default();
            if let Some(old) = slot.insert(r.to_bits(), v) {
                if old != v {
                    return Err(ModelError::Kernel(format!(
                        "asymmetric kernel: pair {i}-{j} has values {old} and {v} at r = {r}"
                    )));
                }
            }
        }
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let samples = rows
                    .get(&(a, b))
                    .ok_or_else(|| ModelError::Kernel(format!("no rows for pair {}-{}", a + 1, b + 1)))?;
                let mut pts: Vec<(f64, f64)> = samples.iter().map(|(r, v)| (f64::from_bits(*r), *v)).collect();
                pts.sort_by(|x, y| x.0.total_cmp(&y.0));
                pairs.push(PairKernel::Table {
                    r: pts.iter().map(|p| p.0).collect(),
                    value: pts.iter().map(|p| p.1).collect(),
                });
            }
        }
        Self::per_pair(n, pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_linearly() {
        let k = PairKernel::Table { r: vec![0.0, 0.5, 1.0], value: vec![1.0, 2.0, 1.0] };
        k.validate().unwrap();
        assert_eq!(k.eval(0.25), 1.5);
        assert_eq!(k.eval(0.75), 1.5);
        assert_eq!(k.eval(1.0), 1.0);
        assert_eq!(k.lipschitz(), 2.0);
    }

    #[test]
    fn potential_quadrature_matches_antiderivative() {
        // affine: int_0^r (a + b s) s ds = a r^2/2 + b r^3/3
        let k = PairKernel::Affine { at_zero: 1.5, slope: -0.5 };
        for r in [0.0f64, 0.3, 0.77, 1.0, 2.0] {
            let t: f64 = r.min(1.0);
            let exact = 1.5 * t * t / 2.0 - 0.5 * t * t * t / 3.0;
            assert!((k.potential(r) - exact).abs() < 1e-12, "r = {r}");
        }
        let tab = PairKernel::Table { r: vec![0.0, 0.5, 1.0], value: vec![1.0, 2.0, 1.0] };
        // first panel phi = 1 + 2s: r^2/2 + 2 r^3/3 at r = 0.5
        let exact = 0.125 + 2.0 * 0.125 / 3.0;
        assert!((tab.potential(0.5) - exact).abs() < 1e-12);
    }

    #[test]
    fn per_pair_indexing_is_symmetric() {
        let ks = (0..6).map(|k| PairKernel::constant(1.0 + k as f64)).collect();
        let kern = InteractionKernel::per_pair(4, ks).unwrap();
        let mut seen = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(kern.phi(i, j, 0.5), kern.phi(j, i, 0.5));
                seen.push(kern.phi(i, j, 0.5));
            }
        }
        assert_eq!(seen, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn table_file_roundtrip_and_symmetry_check() {
        let text = "i j r value\n1 2 0 1\n1 2 1 2\n2 1 0.5 1.5\n";
        let k = InteractionKernel::from_table_text(text).unwrap();
        assert_eq!(k.n_agents(), 2);
        assert_eq!(k.phi(0, 1, 0.25), 1.25);
        let bad = "i j r value\n1 2 0 1\n1 2 1 2\n2 1 1 3\n";
        assert!(InteractionKernel::from_table_text(bad).is_err());
        let missing = "i j r value\n1 2 0 1\n1 2 1 2\n1 3 0 1\n1 3 1 1\n";
        assert!(InteractionKernel::from_table_text(missing).is_err());
    }

    #[test]
    fn rejects_nonpositive_kernels() {
        assert!(InteractionKernel::constant(3, 0.0).is_err());
        assert!(InteractionKernel::uniform(3, PairKernel::Affine { at_zero: 1.0, slope: -1.0 }).is_err());
    }
}
