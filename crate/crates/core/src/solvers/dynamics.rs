//! Graph-restricted dynamics with optional sliding pins.
//!
//! Edges interact with `phi(min(r, 1))` regardless of distance; everything else
//! is switched off. A pinned pair sits at distance one and carries a coefficient
//! `beta` in `[0, 1]` on its own pull, chosen at every evaluation so that
//! `d/dt theta = -kappa (theta - 1)` (the drift term only corrects round-off).

use super::SolverError;
use super::integrator::System;
use crate::model::{accumulate, Configuration, InteractionKernel, Pair};

const PIN_KAPPA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Guard {
    /// Non-edge; value `theta - 1`.
    Above(Pair),
    /// Edge; value `1 - theta`.
    Below(Pair),
    /// Pin coefficient leaving `[0, 1]` from below / above.
    PinLow(usize),
    PinHigh(usize),
}

pub(crate) struct GraphSystem<'a> {
    kernel: &'a InteractionKernel,
    dim: usize,
    n: usize,
    edge: Vec<bool>,
    pins: Vec<Pair>,
    guards: Vec<Guard>,
}

impl<'a> GraphSystem<'a> {
    pub fn new(kernel: &'a InteractionKernel, dim: usize, edges: &[Pair], pins: &[Pair], watch: bool) -> Self {
        let n = kernel.n_agents();
        let mut edge = vec![false; n * n];
        for p in edges {
            edge[p.i * n + p.j] = true;
            edge[p.j * n + p.i] = true;
        }
        let mut guards = Vec::new();
        if watch {
            for i in 0..n {
                for j in i + 1..n {
                    let p = Pair { i, j };
                    if pins.contains(&p) {
                        continue;
                    }
                    guards.push(if edge[i * n + j] { Guard::Below(p) } else { Guard::Above(p) });
                }
            }
            for k in 0..pins.len() {
                guards.push(Guard::PinLow(k));
                guards.push(Guard::PinHigh(k));
            }
        }
        Self { kernel, dim, n, edge, pins: pins.to_vec(), guards }
    }

    pub fn guard(&self, k: usize) -> Guard {
        self.guards[k]
    }

    fn base_velocity(&self, x: &[f64], out: &mut [f64]) {
        let (n, kernel, edge) = (self.n, self.kernel, &self.edge);
        accumulate(
            x,
            self.dim,
            kernel,
            |i, j, d2| if edge[i * n + j] { kernel.phi(i, j, d2.sqrt().min(1.0)) } else { 0.0 },
            out,
        );
    }

    /// Contribution of pin `q` with unit coefficient to agent `a`, added into `acc`.
    fn pin_column(&self, x: &[f64], q: Pair, a: usize, scale: f64, acc: &mut [f64]) {
        let d = self.dim;
        let phi = self.kernel.phi(q.i, q.j, 1.0);
        let (me, other) = if a == q.i { (q.i, q.j) } else if a == q.j { (q.j, q.i) } else { return };
        let c = scale * phi * self.kernel.mass(other);
        for k in 0..d {
            acc[k] += c * (x[other * d + k] - x[me * d + k]);
        }
    }

    /// Pin coefficients at `x` given the pin-free velocity `v0`.
    fn solve_pins(&self, x: &[f64], v0: &[f64]) -> Result<Vec<f64>, SolverError> {
        let d = self.dim;
        let m = self.pins.len();
        let mut a = vec![vec![0.0; m + 1]; m];
        let mut ci = vec![0.0; d];
        let mut cj = vec![0.0; d];
        for (r, p) in self.pins.iter().enumerate() {
            let dp: Vec<f64> = (0..d).map(|k| x[p.i * d + k] - x[p.j * d + k]).collect();
            let theta: f64 = dp.iter().map(|v| v * v).sum();
            for (c, q) in self.pins.iter().enumerate() {
                ci.iter_mut().for_each(|v| *v = 0.0);
                cj.iter_mut().for_each(|v| *v = 0.0);
                self.pin_column(x, *q, p.i, 1.0, &mut ci);
                self.pin_column(x, *q, p.j, 1.0, &mut cj);
                a[r][c] = 2.0 * (0..d).map(|k| dp[k] * (ci[k] - cj[k])).sum::<f64>();
            }
            let drift: f64 = (0..d).map(|k| dp[k] * (v0[p.i * d + k] - v0[p.j * d + k])).sum();
            a[r][m] = -PIN_KAPPA * (theta - 1.0) - 2.0 * drift;
        }
        solve_dense(a).ok_or_else(|| {
            SolverError::Sliding(format!("pin system for {} is singular", crate::model::fmt_pairs(&self.pins)))
        })
    }

    pub fn pin_betas(&self, x: &[f64]) -> Result<Vec<f64>, SolverError> {
        if self.pins.is_empty() {
            return Ok(Vec::new());
        }
        let mut v0 = vec![0.0; x.len()];
        self.base_velocity(x, &mut v0);
        self.solve_pins(x, &v0)
    }
}

pub(crate) fn half_rate(x: &[f64], v: &[f64], d: usize, p: Pair) -> f64 {
    (0..d).map(|k| (x[p.i * d + k] - x[p.j * d + k]) * (v[p.i * d + k] - v[p.j * d + k])).sum()
}

pub(crate) fn theta_of(x: &[f64], d: usize, p: Pair) -> f64 {
    (0..d).map(|k| (x[p.i * d + k] - x[p.j * d + k]).powi(2)).sum()
}

impl System for GraphSystem<'_> {
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
        self.base_velocity(x, out);
        if self.pins.is_empty() {
            return Ok(());
        }
        let beta = self.solve_pins(x, out)?;
        let d = self.dim;
        for (q, b) in self.pins.iter().zip(&beta) {
            for a in [q.i, q.j] {
                let mut acc = vec![0.0; d];
                self.pin_column(x, *q, a, *b, &mut acc);
                for k in 0..d {
                    out[a * d + k] += acc[k];
                }
            }
        }
        Ok(())
    }

    fn n_guards(&self) -> usize {
        self.guards.len()
    }

    fn guards(&self, x: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
        let betas = if self.pins.is_empty() { Vec::new() } else { self.pin_betas(x)? };
        for (o, g) in out.iter_mut().zip(&self.guards) {
            *o = match *g {
                Guard::Above(p) => theta_of(x, self.dim, p) - 1.0,
                Guard::Below(p) => 1.0 - theta_of(x, self.dim, p),
                Guard::PinLow(k) => betas[k],
                Guard::PinHigh(k) => 1.0 - betas[k],
            };
        }
        Ok(())
    }
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)` matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    let scale = a.iter().flat_map(|r| r[..m].iter()).fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for col in 0..m {
        let piv = (col..m).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut out = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| a[r][c] * out[c]).sum();
        out[r] = (a[r][m] - s) / a[r][r];
    }
    Some(out)
}

/// The graph a configuration induces strictly inside distance one.
pub(crate) fn interior_pairs(config: &Configuration, band: f64) -> Vec<Pair> {
    let n = config.n_agents();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if config.dist_sq(i, j) < 1.0 - band {
                out.push(Pair { i, j });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sliding_coefficient_at_three_agent_boundary() {
        // (-1, 0, 1) pinned on (1,2) with (2,3) interacting: beta = (x3 - x2) / 2
        let k = InteractionKernel::constant(3, 1.0).unwrap();
        let sys = GraphSystem::new(&k, 1, &[Pair::new(1, 2)], &[Pair::new(0, 1)], true);
        let x = [-1.0, 0.0, 1.0];
        assert!((sys.pin_betas(&x).unwrap()[0] - 0.5).abs() < 1e-15);
        let mut v = [0.0; 3];
        sys.eval(&x, &mut v).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15 && (v[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn edges_saturate_beyond_one() {
        let k = InteractionKernel::uniform(2, crate::model::PairKernel::Affine { at_zero: 2.0, slope: -1.0 }).unwrap();
        let sys = GraphSystem::new(&k, 1, &[Pair::new(0, 1)], &[], false);
        let mut v = [0.0; 2];
        sys.eval(&[0.0, 1.5], &mut v).unwrap();
        assert_eq!(v, [1.5, -1.5]);
    }
}
