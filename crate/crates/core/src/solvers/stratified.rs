//! Stratified solutions for agents on a line.
//!
//! Cells are cut out by the lines `x_i - x_j = +-1`. A cell is identified by
//! one code per pair: `-2` (`d < -1`), `-1` (`d = -1`), `0` (`|d| < 1`),
//! `1` (`d = 1`), `2` (`d > 1`), with `d = x_i - x_j`. Type I cells carry
//! their own graph dynamics; a type II cell is left at once along the
//! dynamics of its exit cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dynamics::GraphSystem;
use super::integrator::{integrate, Exit};
use super::{EventCause, EventRecord, SolveOptions, SolverError, Trajectory};
use crate::model::{ModelVariant, Pair};
use crate::scenarios::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    TypeI,
    TypeII,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub dim: usize,
    pub kind: CellKind,
    pub codes: Vec<i8>,
    /// Pairs interacting under this cell's own dynamics.
    pub edges: Vec<Pair>,
    pub name: String,
    /// A point of the cell (agent positions).
    pub witness: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stratification {
    pub n_agents: usize,
    pub pairs: Vec<Pair>,
    pub cells: Vec<Cell>,
    /// Exit cell of every type II cell.
    pub sigma: BTreeMap<usize, usize>,
    /// Band on `|d -+ 1|` for sitting on a line.
    pub tol: f64,
}

fn all_pairs(n: usize) -> Vec<Pair> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| Pair::new(i, j))).collect()
}

fn code_of(d: f64, tol: f64) -> i8 {
    if (d + 1.0).abs() <= tol {
        -1
    } else if (d - 1.0).abs() <= tol {
        1
    } else if d < -1.0 {
        -2
    } else if d > 1.0 {
        2
    } else {
        0
    }
}

/// Sign of `d - c` for the two lines `c = +1, -1` of a pair.
fn line_signs(code: i8) -> [i8; 2] {
    match code {
        -2 => [-1, -1],
        -1 => [-1, 0],
        0 => [-1, 1],
        1 => [0, 1],
        _ => [1, 1],
    }
}

impl Stratification {
    pub fn codes(&self, x: &[f64]) -> Vec<i8> {
        self.pairs.iter().map(|p| code_of(x[p.i] - x[p.j], self.tol)).collect()
    }

    /// The unique cell containing `x` (agent positions on a line).
    pub fn locate(&self, x: &[f64]) -> Result<usize, SolverError> {
        if x.len() != self.n_agents {
            return Err(SolverError::Stratification(format!(
                "expected {} agents on a line, got {} coordinates",
                self.n_agents,
                x.len()
            )));
        }
        let c = self.codes(x);
        let hits: Vec<usize> = self.cells.iter().filter(|cell| cell.codes == c).map(|cell| cell.id).collect();
        match hits.as_slice() {
            [one] => Ok(*one),
            [] => Err(SolverError::Stratification(format!("configuration {x:?} lies in no cell"))),
            _ => Err(SolverError::Stratification(format!("configuration {x:?} lies in several cells"))),
        }
    }

    pub fn contains(&self, cell: usize, x: &[f64]) -> bool {
        self.cells.get(cell).is_some_and(|c| c.codes == self.codes(x))
    }

    /// Whether `lower` lies in the closure of `upper`.
    pub fn is_face(&self, lower: usize, upper: usize) -> bool {
        let (a, b) = (&self.cells[lower].codes, &self.cells[upper].codes);
        a.iter().zip(b).all(|(&ca, &cb)| {
            let (sa, sb) = (line_signs(ca), line_signs(cb));
            (0..2).all(|k| sa[k] == 0 || sa[k] == sb[k])
        })
    }

    /// Graph followed from a point of `cell`.
    pub fn dynamics_of(&self, cell: usize) -> &[Pair] {
        let c = &self.cells[cell];
        match c.kind {
            CellKind::TypeI => &c.edges,
            CellKind::TypeII => &self.cells[self.sigma[&c.id]].edges,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for c in &self.cells {
            let has = self.sigma.contains_key(&c.id);
            if has != (c.kind == CellKind::TypeII) {
                return Err(SolverError::Stratification(format!("exit map and type disagree on cell {}", c.name)));
            }
        }
        if let Some((a, b)) = self.sigma.iter().find(|(_, b)| **b >= self.cells.len()) {
            return Err(SolverError::Stratification(format!("cell {a} exits to missing cell {b}")));
        }
        Ok(())
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let top = self.cells.iter().map(|c| c.dim).max().unwrap_or(0);
        (0..=top).map(|d| self.cells.iter().filter(|c| c.dim == d).count()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToyVariant {
    /// The two boundary points carry their own (constant) dynamics.
    S1,
    /// The boundary points exit into the interacting cell.
    S2,
}

/// Two agents on a line: five cells cut out by `x_1 - x_2 = +-1`.
pub fn toy_stratification(v: ToyVariant) -> Stratification {
    let pair = Pair::new(0, 1);
    let mut cells = Vec::new();
    let mut sigma = BTreeMap::new();
    for (id, code) in [-2i8, -1, 0, 1, 2].into_iter().enumerate() {
        let boundary = code.abs() == 1;
        let kind = if boundary && v == ToyVariant::S2 { CellKind::TypeII } else { CellKind::TypeI };
        if kind == CellKind::TypeII {
            sigma.insert(id, 2);
        }
        cells.push(Cell {
            id,
            dim: if boundary { 0 } else { 1 },
            kind,
            codes: vec![code],
            edges: if code == 0 { vec![pair] } else { Vec::new() },
            name: format!("d{code:+}"),
            witness: vec![0.0, -f64::from(code) * 0.75],
        });
    }
    Stratification { n_agents: 2, pairs: vec![pair], cells, sigma, tol: 1e-9 }
}

/// Pair differences in the barycentric plane `(u, v) = (x_1, x_2)`, `x_3 = -u - v`.
fn plane_diffs(u: f64, v: f64) -> [f64; 3] {
    // pairs (1,2), (1,3), (2,3)
    [u - v, 2.0 * u + v, u + 2.0 * v]
}

fn plane_point(u: f64, v: f64) -> Vec<f64> {
    vec![u, v, -u - v]
}

/// Line `a u + b v = c` for pair index `k` and offset `c`.
fn plane_line(k: usize, c: f64) -> (f64, f64, f64) {
    match k {
        0 => (1.0, -1.0, c),
        1 => (2.0, 1.0, c),
        _ => (1.0, 2.0, c),
    }
}

/// The stratification of the three-agent line problem in the barycentric
/// plane: 12 points, 30 line pieces and 19 open regions. Points and pieces
/// are type II and exit into the adjacent region containing the point of
/// least norm; ties go to the region listed first.
pub fn builtin_stratification_3agents() -> Stratification {
    let tol = 1e-9;
    let pairs = all_pairs(3);
    let lines: Vec<(f64, f64, f64)> =
        (0..3).flat_map(|k| [1.0, -1.0].into_iter().map(move |c| plane_line(k, c))).collect();
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (a, l1) in lines.iter().enumerate() {
        for l2 in &lines[a + 1..] {
            let det = l1.0 * l2.1 - l1.1 * l2.0;
            if det.abs() < 1e-12 {
                continue;
            }
            let u = (l1.2 * l2.1 - l1.1 * l2.2) / det;
            let v = (l1.0 * l2.2 - l1.2 * l2.0) / det;
            if !points.iter().any(|p| (p.0 - u).abs() < 1e-9 && (p.1 - v).abs() < 1e-9) {
                points.push((u, v));
            }
        }
    }
    // witnesses: points, pieces between consecutive points on each line, rays,
    // then both sides of every piece
    let mut wit: Vec<(f64, f64)> = points.clone();
    let mut pieces: Vec<((f64, f64), (f64, f64))> = Vec::new();
    for l in &lines {
        let dir = (-l.1, l.0);
        let norm = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
        let dir = (dir.0 / norm, dir.1 / norm);
        let mut on: Vec<f64> = points
            .iter()
            .filter(|p| (l.0 * p.0 + l.1 * p.1 - l.2).abs() < 1e-9)
            .map(|p| p.0 * dir.0 + p.1 * dir.1)
            .collect();
        on.sort_by(f64::total_cmp);
        let base = {
            let s = l.0 * l.0 + l.1 * l.1;
            (l.0 * l.2 / s, l.1 * l.2 / s)
        };
        let at = |s: f64| {
            let s0 = base.0 * dir.0 + base.1 * dir.1;
            (base.0 + (s - s0) * dir.0, base.1 + (s - s0) * dir.1)
        };
        let mut params = vec![on[0] - 1.0];
        params.extend(on.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        params.push(on[on.len() - 1] + 1.0);
        for s in params {
            let p = at(s);
            wit.push(p);
            let nrm = (l.0 / norm, l.1 / norm);
            pieces.push((p, nrm));
        }
    }
    for (p, nrm) in &pieces {
        for sgn in [-1.0, 1.0] {
            wit.push((p.0 + sgn * 1e-3 * nrm.0, p.1 + sgn * 1e-3 * nrm.1));
        }
    }
    let mut by_codes: BTreeMap<(usize, Vec<i8>), (f64, f64)> = BTreeMap::new();
    for (u, v) in wit {
        let codes: Vec<i8> = plane_diffs(u, v).iter().map(|&d| code_of(d, tol)).collect();
        let dim = 2 - codes.iter().filter(|c| c.abs() == 1).count();
        by_codes.entry((dim, codes)).or_insert((u, v));
    }
    let mut cells = Vec::new();
    for (id, ((dim, codes), (u, v))) in by_codes.into_iter().enumerate() {
        let edges: Vec<Pair> = pairs.iter().zip(&codes).filter(|(_, c)| **c == 0).map(|(p, _)| *p).collect();
        let name = if dim == 2 { format!("{}{id}", region_letter(&edges)) } else { format!("M{dim}_{id}") };
        cells.push(Cell {
            id,
            dim,
            kind: if dim == 2 { CellKind::TypeI } else { CellKind::TypeII },
            codes,
            edges,
            name,
            witness: plane_point(u, v),
        });
    }
    let mut strat = Stratification { n_agents: 3, pairs, cells, sigma: BTreeMap::new(), tol };
    let regions: Vec<usize> = strat.cells.iter().filter(|c| c.dim == 2).map(|c| c.id).collect();
    let least: BTreeMap<usize, f64> = regions.iter().map(|&r| (r, least_norm(&strat.cells[r].codes, &points))).collect();
    let lower: Vec<usize> = strat.cells.iter().filter(|c| c.dim < 2).map(|c| c.id).collect();
    for l in lower {
        let target = regions
            .iter()
            .filter(|&&r| strat.is_face(l, r))
            .min_by(|&&a, &&b| least[&a].total_cmp(&least[&b]).then(a.cmp(&b)))
            .copied()
            .expect("every piece bounds a region");
        strat.sigma.insert(l, target);
    }
    strat
}

/// Region letter by its graph: A none, B one pair, C/D a chain through
/// agent 1 or 2 / agent 3, E all pairs.
fn region_letter(edges: &[Pair]) -> char {
    match edges.len() {
        0 => 'A',
        1 => 'B',
        3 => 'E',
        _ => {
            let mid = (0..3).find(|&a| edges.iter().all(|p| p.contains(a))).unwrap_or(0);
            if mid == 2 {
                'D'
            } else {
                'C'
            }
        }
    }
}

/// Smallest norm over the closure of a region given by its codes: the
/// minimum sits at the origin, at a foot of perpendicular on a line, or at a
/// vertex.
fn least_norm(codes: &[i8], vertices: &[(f64, f64)]) -> f64 {
    let inside = |u: f64, v: f64| {
        plane_diffs(u, v).iter().zip(codes).all(|(&d, &c)| match c {
            -2 => d <= -1.0 + 1e-9,
            2 => d >= 1.0 - 1e-9,
            _ => d.abs() <= 1.0 + 1e-9,
        })
    };
    let mut cands: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for k in 0..3 {
        for c in [1.0, -1.0] {
            let (a, b, c) = plane_line(k, c);
            let s = a * a + b * b;
            cands.push((a * c / s, b * c / s));
        }
    }
    cands.extend_from_slice(vertices);
    cands.into_iter().filter(|&(u, v)| inside(u, v)).map(|(u, v)| (u * u + v * v).sqrt()).fold(f64::INFINITY, f64::min)
}

/// Runs the stratified solution from the scenario's initial datum.
pub fn solve_stratified(scenario: &Scenario, strat: &Stratification, horizon: f64) -> Result<Trajectory, SolverError> {
    solve_stratified_with(scenario, strat, horizon, &SolveOptions::default())
}

pub fn solve_stratified_with(
    scenario: &Scenario,
    strat: &Stratification,
    horizon: f64,
    opts: &SolveOptions,
) -> Result<Trajectory, SolverError> {
    strat.validate()?;
    if scenario.dim() != 1 || scenario.n_agents() != strat.n_agents {
        return Err(SolverError::Stratification(format!(
            "stratification is for {} agents on a line, scenario has {} agents in dimension {}",
            strat.n_agents,
            scenario.n_agents(),
            scenario.dim()
        )));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(SolverError::Argument(format!("horizon {horizon} must be finite and nonnegative")));
    }
    let kernel = &scenario.kernel;
    let rate = kernel.rate_scale();
    let dt = opts.sample_dt_for(rate, horizon);
    let mut traj = Trajectory::new(1, kernel.multiplicity().map(<[f64]>::to_vec));
    let mut t = 0.0;
    let mut x = scenario.initial.positions().to_vec();
    traj.push(t, &x);
    let mut cause = EventCause::Start;
    for _ in 0..opts.max_events {
        let cell = strat.locate(&x)?;
        let c = &strat.cells[cell];
        let mut edges = strat.dynamics_of(cell).to_vec();
        if c.kind == CellKind::TypeI && scenario.variant == ModelVariant::ClosedAtOne {
            // on a type I line piece the closed convention keeps the boundary pairs on
            edges.extend(strat.pairs.iter().zip(&c.codes).filter(|(_, k)| k.abs() == 1).map(|(p, _)| *p));
            edges.sort();
        }
        let note = match c.kind {
            CellKind::TypeI => format!("cell {}", c.name),
            CellKind::TypeII => format!("cell {} exits to {}", c.name, strat.cells[strat.sigma[&cell]].name),
        };
        let on: Vec<Pair> = strat.pairs.iter().zip(&c.codes).filter(|(_, k)| k.abs() == 1).map(|(p, _)| *p).collect();
        traj.events.push(EventRecord {
            time: t,
            cause,
            activated: on.iter().copied().filter(|p| edges.contains(p)).collect(),
            inactive: on.iter().copied().filter(|p| !edges.contains(p)).collect(),
            pairs: on,
            class: None,
            pinned: Vec::new(),
            note,
        });
        traj.start_segment(edges.clone(), Vec::new());
        if t >= horizon {
            return Ok(traj);
        }
        let sys = GraphSystem::new(kernel, 1, &edges, &[], true);
        let out = integrate(&sys, t, &x, horizon, rate, dt, &opts.integrator_for(kernel), &mut |s, y| traj.push(s, y))?;
        t = out.t;
        x = out.x;
        traj.push(t, &x);
        match out.exit {
            Exit::Reached => return Ok(traj),
            Exit::Event(_) => cause = EventCause::Cell,
        }
    }
    Err(SolverError::Integrator(format!("more than {} cell changes before t = {t}", opts.max_events)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_agent_cell_counts() {
        let s = builtin_stratification_3agents();
        assert_eq!(s.count_by_dim(), vec![12, 30, 19]);
        s.validate().unwrap();
        let letters: String = {
            let mut v: Vec<char> = s.cells.iter().filter(|c| c.dim == 2).map(|c| c.name.as_bytes()[0] as char).collect();
            v.sort();
            v.into_iter().collect()
        };
        assert_eq!(letters, "AAAAAABBBBBBCCCCDDE");
    }

    #[test]
    fn lookups() {
        let s = builtin_stratification_3agents();
        let e = s.locate(&plane_point(0.0, 0.0)).unwrap();
        assert!(s.cells[e].name.starts_with('E'));
        let p = s.locate(&plane_point(0.0, 1.0)).unwrap();
        assert_eq!(s.cells[p].dim, 0);
        assert!(s.cells[s.sigma[&p]].name.starts_with('C'), "{}", s.cells[s.sigma[&p]].name);
        let q = s.locate(&plane_point(-1.0, 1.0)).unwrap();
        assert!(s.cells[s.sigma[&q]].name.starts_with('D'));
        let a = s.locate(&plane_point(-5.0, 5.0)).unwrap();
        assert!(s.cells[a].name.starts_with('A'));
    }

    #[test]
    fn witnesses_locate_to_their_cells() {
        let s = builtin_stratification_3agents();
        for c in &s.cells {
            assert_eq!(s.locate(&c.witness).unwrap(), c.id);
            if c.kind == CellKind::TypeII {
                assert!(s.is_face(c.id, s.sigma[&c.id]));
            }
        }
    }
}
