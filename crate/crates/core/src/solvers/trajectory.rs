use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::geometry::CrossingClass;
use crate::model::{Configuration, Pair};

/// Why the solver stopped to make a decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventCause {
    Start,
    /// Some pair reached distance one.
    Crossing,
    /// A branch rule's wait ran out.
    RuleFired,
    /// A sliding window opened or closed.
    Window,
    /// A sliding coefficient reached the edge of `[0, 1]`.
    SlideExit,
    /// Entry into a new cell (stratified runs).
    Cell,
}

/// One decision point: the boundary pairs found there and what was done with them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub cause: EventCause,
    pub pairs: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<CrossingClass>,
    pub activated: Vec<Pair>,
    pub inactive: Vec<Pair>,
    pub pinned: Vec<Pair>,
    /// Free-form detail, e.g. the stratified cell entered.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// A stretch of constant interaction graph, starting at sample `start`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub start_time: f64,
    pub edges: Vec<Pair>,
    pub pinned: Vec<Pair>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    pub states: Vec<Configuration>,
    pub events: Vec<EventRecord>,
    pub segments: Vec<Segment>,
    /// Agent multiplicities of the kernel the run used, if any.
    pub multiplicity: Option<Vec<f64>>,
}

impl Trajectory {
    pub(crate) fn new(dim: usize, multiplicity: Option<Vec<f64>>) -> Self {
        Self { dim, times: Vec::new(), states: Vec::new(), events: Vec::new(), segments: Vec::new(), multiplicity }
    }

    /// Appends a sample; one landing on the previous time replaces it.
    pub(crate) fn push(&mut self, t: f64, x: &[f64]) {
        let c = Configuration::from_raw(self.dim, x.to_vec());
        if let Some(&last) = self.times.last() {
            if t <= last + 1e-13 {
                *self.states.last_mut().unwrap() = c;
                return;
            }
        }
        self.times.push(t);
        self.states.push(c);
    }

    pub(crate) fn start_segment(&mut self, edges: Vec<Pair>, pinned: Vec<Pair>) {
        let start = self.times.len().saturating_sub(1);
        let start_time = self.times.last().copied().unwrap_or(0.0);
        if let Some(last) = self.segments.last_mut() {
            if last.start == start {
                last.edges = edges;
                last.pinned = pinned;
                return;
            }
        }
        self.segments.push(Segment { start, start_time, edges, pinned });
    }

    pub fn n_agents(&self) -> usize {
        self.states.first().map_or(0, Configuration::n_agents)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &Configuration {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Sample-index ranges `[a, b]` (inclusive) over which the graph is constant.
    pub fn segment_ranges(&self) -> Vec<(usize, usize)> {
        let last = self.len().saturating_sub(1);
        if self.segments.is_empty() {
            return vec![(0, last)];
        }
        let mut out = Vec::new();
        for (k, s) in self.segments.iter().enumerate() {
            let end = self.segments.get(k + 1).map_or(last, |n| n.start);
            if end > s.start || self.segments.len() == 1 {
                out.push((s.start, end));
            }
        }
        out
    }

    /// Linear interpolation in time (clamped to the ends).
    pub fn state_at(&self, t: f64) -> Configuration {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.states[0].clone();
        }
        if k >= self.len() {
            return self.final_state().clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        let a = self.states[k - 1].positions();
        let b = self.states[k].positions();
        Configuration::from_raw(self.dim, a.iter().zip(b).map(|(p, q)| p + w * (q - p)).collect())
    }

    /// CSV: header `t,x1_1,...,xN_n`, values with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.n_agents();
        let mut s = String::from("t");
        for i in 1..=n {
            for k in 1..=self.dim {
                let _ = write!(s, ",x{i}_{k}");
            }
        }
        s.push('\n');
        for (t, c) in self.times.iter().zip(&self.states) {
            let _ = write!(s, "{t:.16e}");
            for v in c.positions() {
                let _ = write!(s, ",{v:.16e}");
            }
            s.push('\n');
        }
        s
    }

    /// Event log, one JSON record per line.
    pub fn events_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&serde_json::to_string(e).expect("event records serialize"));
            s.push('\n');
        }
        s
    }

    /// Writes `path` (CSV) and the event log next to it as `<stem>.events.jsonl`.
    pub fn write(&self, path: &Path) -> Result<PathBuf, SolverError> {
        std::fs::write(path, self.to_csv())?;
        let ev = events_path(path);
        std::fs::write(&ev, self.events_jsonl())?;
        Ok(ev)
    }

    pub fn from_csv(text: &str) -> Result<Self, SolverError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| SolverError::Parse("empty trajectory file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") {
            return Err(SolverError::Parse(format!("header must start with t, got {header:?}")));
        }
        let mut dim = 0;
        let mut agents = 0;
        for c in &cols[1..] {
            let (a, k) = c
                .strip_prefix('x')
                .and_then(|r| r.split_once('_'))
                .and_then(|(a, k)| Some((a.parse::<usize>().ok()?, k.parse::<usize>().ok()?)))
                .ok_or_else(|| SolverError::Parse(format!("bad column name {c:?}")))?;
            agents = agents.max(a);
            dim = dim.max(k);
        }
        if dim == 0 || agents * dim != cols.len() - 1 {
            return Err(SolverError::Parse("columns do not form an agents x dimension grid".into()));
        }
        let mut traj = Trajectory::new(dim, None);
        for (ln, line) in lines.enumerate() {
            let vals: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| SolverError::Parse(format!("line {}: {e}", ln + 2)))?;
            if vals.len() != cols.len() {
                return Err(SolverError::Parse(format!("line {}: expected {} values", ln + 2, cols.len())));
            }
            if let Some(&last) = traj.times.last() {
                if vals[0] <= last {
                    return Err(SolverError::Parse(format!("line {}: times must increase", ln + 2)));
                }
            }
            let c = Configuration::new(dim, vals[1..].to_vec())?;
            traj.times.push(vals[0]);
            traj.states.push(c);
        }
        if traj.is_empty() {
            return Err(SolverError::Parse("trajectory has no samples".into()));
        }
        Ok(traj)
    }

    /// Reads a CSV dump and, if present, its event log; segments are rebuilt
    /// from the event times.
    pub fn read(path: &Path) -> Result<Self, SolverError> {
        let mut traj = Self::from_csv(&std::fs::read_to_string(path)?)?;
        let ev = events_path(path);
        if ev.exists() {
            let f = std::io::BufReader::new(std::fs::File::open(&ev)?);
            for line in f.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: EventRecord =
                    serde_json::from_str(&line).map_err(|e| SolverError::Parse(format!("event log: {e}")))?;
                traj.events.push(rec);
            }
            traj.rebuild_segments();
        }
        Ok(traj)
    }

    fn rebuild_segments(&mut self) {
        self.segments.clear();
        for e in &self.events {
            let k = self.times.partition_point(|&s| s < e.time - 1e-12).min(self.len() - 1);
            let mut edges = e.activated.clone();
            edges.extend(e.pinned.iter().copied());
            if self.segments.last().is_some_and(|s| s.start == k) {
                self.segments.pop();
            }
            self.segments.push(Segment { start: k, start_time: self.times[k], edges, pinned: e.pinned.clone() });
        }
    }

    /// A copy with every time divided by `factor` (velocities scale up by it).
    pub fn time_rescaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.times.iter_mut().for_each(|t| *t /= factor);
        out.segments.iter_mut().for_each(|s| s.start_time /= factor);
        out.events.iter_mut().for_each(|e| e.time /= factor);
        out
    }

    pub fn write_csv_to(&self, w: &mut dyn Write) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

pub fn events_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.events.jsonl"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = Trajectory::new(2, None);
        t.push(0.0, &[0.1, 1.0 / 3.0, -2.0, 1e-300]);
        t.push(0.5, &[std::f64::consts::PI, 0.0, 7.0, -1.0 / 7.0]);
        let back = Trajectory::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back.times, t.times);
        assert_eq!(back.states, t.states);
        assert!(t.to_csv().starts_with("t,x1_1,x1_2,x2_1,x2_2\n"));
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(Trajectory::from_csv("").is_err());
        assert!(Trajectory::from_csv("t,x1_1\n0.0,abc\n").is_err());
        assert!(Trajectory::from_csv("t,x1_1\n1.0,0.0\n0.5,0.0\n").is_err());
    }
}
