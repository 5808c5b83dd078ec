//! Event-driven runs: smooth pieces of graph-restricted dynamics glued at the
//! discontinuity set, where the branch spec, the sliding plan or the default
//! resolution decides which boundary pairs interact next.

use serde::{Deserialize, Serialize};

use super::branch::{ActivationRule, BranchSpec, Target, Wait};
use super::decide::{subsets_by_size, violations, Trend};
use super::dynamics::{interior_pairs, Guard, GraphSystem};
use super::graph::grow;
use super::integrator::{integrate, Exit};
use super::{EventCause, EventRecord, SolveOptions, SolverError, Trajectory};
use crate::geometry::{classify_crossing, CrossingClass};
use crate::model::{boundary_pairs, fmt_pairs, Configuration, ModelVariant, Pair};
use crate::scenarios::Scenario;

/// Scheduled times closer than this count as simultaneous.
const TIME_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Release {
    /// The pair stops interacting when the window closes.
    Detach,
    /// The pair interacts fully when the window closes.
    Activate,
}

/// Hold `pair` at distance one on `[start, end)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinWindow {
    pub pair: Pair,
    pub start: f64,
    pub end: f64,
    pub release: Release,
}

impl PinWindow {
    pub fn new(pair: Pair, start: f64, end: f64, release: Release) -> Self {
        Self { pair, start, end, release }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlidingPlan {
    pub pins: Vec<PinWindow>,
    /// Choices at events the pins do not cover.
    pub branch: BranchSpec,
}

pub fn solve_caratheodory(scenario: &Scenario, branch: &BranchSpec, horizon: f64) -> Result<Trajectory, SolverError> {
    solve_caratheodory_with(scenario, branch, horizon, &SolveOptions::default())
}

pub fn solve_caratheodory_with(
    scenario: &Scenario,
    branch: &BranchSpec,
    horizon: f64,
    opts: &SolveOptions,
) -> Result<Trajectory, SolverError> {
    Runner::new(scenario, branch, &[], horizon, opts)?.run()
}

/// A run that slides along distance one for the pinned pairs inside their
/// windows; the velocity there is the element of the convexified set whose
/// coefficients keep the pinned distances fixed.
pub fn solve_filippov_sliding(
    scenario: &Scenario,
    plan: &SlidingPlan,
    horizon: f64,
    opts: &SolveOptions,
) -> Result<Trajectory, SolverError> {
    Runner::new(scenario, &plan.branch, &plan.pins, horizon, opts)?.run()
}

struct RuleState {
    rule: ActivationRule,
    armed: Option<f64>,
    bound: Vec<Pair>,
    consumed: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Waiting,
    Active,
    Done,
}

struct PinState {
    w: PinWindow,
    phase: Phase,
}

struct Runner<'a> {
    sc: &'a Scenario,
    horizon: f64,
    opts: &'a SolveOptions,
    rules: Vec<RuleState>,
    pins: Vec<PinState>,
    traj: Trajectory,
}

/// What a decision point settled on.
struct Decision {
    edges: Vec<Pair>,
    pins: Vec<Pair>,
}

impl<'a> Runner<'a> {
    fn new(
        sc: &'a Scenario,
        branch: &BranchSpec,
        pins: &[PinWindow],
        horizon: f64,
        opts: &'a SolveOptions,
    ) -> Result<Self, SolverError> {
        branch.validate()?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(SolverError::Argument(format!("horizon {horizon} must be finite and nonnegative")));
        }
        let n = sc.n_agents();
        if sc.variant == ModelVariant::ClosedAtOne && branch.has_positive_wait() {
            return Err(SolverError::Branch(
                "positive waits need the open convention: with the pull switched on at distance one, \
                 staying put is not a solution"
                    .into(),
            ));
        }
        for r in &branch.rules {
            if let Target::Pairs(p) = &r.target {
                if let Some(bad) = p.iter().find(|p| p.j >= n) {
                    return Err(SolverError::Branch(format!("pair {bad} outside {n} agents")));
                }
            }
        }
        for (k, w) in pins.iter().enumerate() {
            if w.pair.j >= n {
                return Err(SolverError::Sliding(format!("pinned pair {} outside {n} agents", w.pair)));
            }
            if !(w.start >= 0.0 && w.start.is_finite() && w.end >= w.start) {
                return Err(SolverError::Sliding(format!("bad window [{}, {}] for {}", w.start, w.end, w.pair)));
            }
            if pins[..k].iter().any(|o| o.pair == w.pair) {
                return Err(SolverError::Sliding(format!("pair {} pinned twice", w.pair)));
            }
        }
        Ok(Self {
            sc,
            horizon,
            opts,
            rules: branch
                .rules
                .iter()
                .map(|r| RuleState { rule: r.clone(), armed: None, bound: Vec::new(), consumed: false })
                .collect(),
            pins: pins.iter().map(|w| PinState { w: w.clone(), phase: Phase::Waiting }).collect(),
            traj: Trajectory::new(sc.dim(), sc.kernel.multiplicity().map(<[f64]>::to_vec)),
        })
    }

    fn run(mut self) -> Result<Trajectory, SolverError> {
        let kernel = &self.sc.kernel;
        let d = self.sc.dim();
        let rate = kernel.rate_scale();
        let dt = self.opts.sample_dt_for(rate, self.horizon);
        let mut t = 0.0;
        let mut x = self.sc.initial.positions().to_vec();
        self.traj.push(t, &x);
        let mut cause = EventCause::Start;
        let mut exits: Vec<(usize, Release)> = Vec::new();
        let mut decisions = 0usize;
        loop {
            decisions += 1;
            if decisions > self.opts.max_events {
                return Err(SolverError::Integrator(format!(
                    "more than {} events before t = {t}; events may be accumulating",
                    self.opts.max_events
                )));
            }
            let dec = self.decide(t, &x, cause, &exits)?;
            exits.clear();
            if t >= self.horizon - TIME_TOL {
                break;
            }
            let next = self.next_scheduled(t);
            let sys = GraphSystem::new(kernel, d, &dec.edges, &dec.pins, true);
            let traj = &mut self.traj;
            let out = integrate(&sys, t, &x, next, rate, dt, &self.opts.integrator_for(kernel), &mut |s, y| traj.push(s, y))?;
            t = out.t;
            x = out.x;
            self.traj.push(t, &x);
            cause = match out.exit {
                Exit::Reached => {
                    if t >= self.horizon - TIME_TOL {
                        break;
                    }
                    if self.pins.iter().any(|p| {
                        (p.phase == Phase::Waiting && (p.w.start - t).abs() <= TIME_TOL)
                            || (p.phase == Phase::Active && (p.w.end - t).abs() <= TIME_TOL)
                    }) {
                        EventCause::Window
                    } else {
                        EventCause::RuleFired
                    }
                }
                Exit::Event(ks) => {
                    let mut slide = false;
                    for k in ks {
                        let (idx, release) = match sys.guard(k) {
                            Guard::PinLow(i) => (i, Release::Detach),
                            Guard::PinHigh(i) => (i, Release::Activate),
                            _ => continue,
                        };
                        let pair = dec.pins[idx];
                        let pos = self.pins.iter().position(|p| p.w.pair == pair).expect("pin exists");
                        exits.push((pos, release));
                        slide = true;
                    }
                    if slide {
                        EventCause::SlideExit
                    } else {
                        EventCause::Crossing
                    }
                }
            };
        }
        if let Some(r) = self.rules.iter().find(|r| r.armed.is_none()) {
            return Err(SolverError::Branch(format!(
                "rule {} never applied: its pairs never met distance one together before t = {}",
                BranchSpec { rules: vec![r.rule.clone()] },
                self.horizon
            )));
        }
        if let Some(p) = self.pins.iter().find(|p| p.phase == Phase::Waiting) {
            return Err(SolverError::Sliding(format!("window for {} never opened before the horizon", p.w.pair)));
        }
        Ok(self.traj)
    }

    fn next_scheduled(&self, t: f64) -> f64 {
        let mut next = self.horizon;
        for r in &self.rules {
            if let (Some(a), Wait::After(w), false) = (r.armed, r.rule.wait, r.consumed) {
                if a + w > t + TIME_TOL {
                    next = next.min(a + w);
                }
            }
        }
        for p in &self.pins {
            match p.phase {
                Phase::Waiting if p.w.start > t + TIME_TOL => next = next.min(p.w.start),
                Phase::Active if p.w.end > t + TIME_TOL => next = next.min(p.w.end),
                _ => {}
            }
        }
        next
    }

    fn decide(
        &mut self,
        t: f64,
        x: &[f64],
        cause: EventCause,
        exits: &[(usize, Release)],
    ) -> Result<Decision, SolverError> {
        let sc = self.sc;
        let kernel = &sc.kernel;
        let band = self.opts.event_band;
        let cfg = Configuration::from_raw(sc.dim(), x.to_vec());
        let on_boundary = boundary_pairs(&cfg, band);
        let mut forced_on: Vec<Pair> = Vec::new();
        let mut forced_off: Vec<Pair> = Vec::new();
        let mut held: Vec<Pair> = Vec::new();

        for &(k, release) in exits {
            self.pins[k].phase = Phase::Done;
            let p = self.pins[k].w.pair;
            match release {
                Release::Detach => forced_off.push(p),
                Release::Activate => forced_on.push(p),
            }
        }
        for ps in &mut self.pins {
            let w = &ps.w;
            let opens = ps.phase == Phase::Waiting && w.start <= t + TIME_TOL;
            let closes = w.end <= t + TIME_TOL;
            if opens && !on_boundary.contains(&w.pair) {
                return Err(SolverError::Sliding(format!(
                    "pair {} is not at distance one when its window opens at t = {t}",
                    w.pair
                )));
            }
            if (opens || ps.phase == Phase::Active) && closes {
                ps.phase = Phase::Done;
                match w.release {
                    Release::Detach => forced_off.push(w.pair),
                    Release::Activate => forced_on.push(w.pair),
                }
            } else if opens {
                ps.phase = Phase::Active;
            }
        }
        let pins: Vec<Pair> = self.pins.iter().filter(|p| p.phase == Phase::Active).map(|p| p.w.pair).collect();
        let boundary: Vec<Pair> = on_boundary.iter().copied().filter(|p| !pins.contains(p)).collect();
        for ps in &self.pins {
            if ps.phase == Phase::Waiting && boundary.contains(&ps.w.pair) {
                held.push(ps.w.pair);
            }
        }

        let mut touched = false;
        for r in &mut self.rules {
            if r.armed.is_none() {
                let bound = match &r.rule.target {
                    Target::Pairs(p) if p.iter().all(|q| boundary.contains(q)) => Some(p.clone()),
                    Target::All if !boundary.is_empty() => Some(boundary.clone()),
                    _ => None,
                };
                if let Some(b) = bound {
                    r.armed = Some(t);
                    r.bound = b;
                }
            }
            let Some(armed) = r.armed else { continue };
            if r.consumed {
                continue;
            }
            let here: Vec<Pair> = r.bound.iter().copied().filter(|p| boundary.contains(p)).collect();
            touched |= !here.is_empty();
            match r.rule.wait {
                Wait::After(w) if armed + w <= t + TIME_TOL => {
                    r.consumed = true;
                    forced_on.extend(here);
                }
                _ => held.extend(here),
            }
        }
        forced_on.retain(|p| boundary.contains(p));
        forced_off.retain(|p| boundary.contains(p));
        held.retain(|p| !forced_off.contains(p));
        if let Some(p) = forced_on.iter().find(|p| held.contains(p) || forced_off.contains(p)) {
            return Err(SolverError::Branch(format!("pair {p} is asked to switch on and stay off at t = {t}")));
        }
        forced_off.extend(held.iter().copied());
        forced_on.sort();
        forced_on.dedup();
        forced_off.sort();
        forced_off.dedup();

        let free: Vec<Pair> =
            boundary.iter().copied().filter(|p| !forced_on.contains(p) && !forced_off.contains(p)).collect();
        let mut base = interior_pairs(&cfg, band);
        base.extend(forced_on.iter().copied());
        base.sort();
        let mut edges = base.clone();
        if !touched {
            grow(&cfg, kernel, &mut edges, &pins, &free)?;
        }

        if !pins.is_empty() {
            let betas = GraphSystem::new(kernel, sc.dim(), &edges, &pins, false).pin_betas(x)?;
            if let Some((p, b)) = pins.iter().zip(&betas).find(|(_, b)| !(-1e-9..=1.0 + 1e-9).contains(*b)) {
                return Err(SolverError::Sliding(format!(
                    "holding {p} at distance one needs coefficient {b:.6} outside [0, 1] at t = {t}"
                )));
            }
        }

        let bad = violations(kernel, sc.variant, &cfg, &edges, &pins, &boundary, self.opts)?;
        if !bad.is_empty() {
            let directed = bad.iter().find(|(p, _)| touched || forced_on.contains(p) || forced_off.contains(p));
            if let Some((p, tr)) = directed {
                let status = if edges.contains(p) { "on" } else { "off" };
                return Err(SolverError::Branch(format!(
                    "pair {p} is kept {status} at t = {t} but then moves {} ({} convention)",
                    trend_word(*tr),
                    sc.variant.name()
                )));
            }
            edges = self.search(&cfg, &base, &free, &pins, &boundary)?.ok_or_else(|| {
                SolverError::Inconsistent(format!(
                    "no choice of interacting pairs among {} is locally consistent at t = {t}",
                    fmt_pairs(&free)
                ))
            })?;
        }

        let class = match on_boundary.len() {
            0 => None,
            1 => classify_crossing(&cfg, on_boundary[0].i, on_boundary[0].j, kernel, sc.variant, band).ok(),
            _ => Some(CrossingClass::MultiplePair),
        };
        let activated: Vec<Pair> = boundary.iter().copied().filter(|p| edges.contains(p)).collect();
        let inactive: Vec<Pair> = boundary.iter().copied().filter(|p| !edges.contains(p)).collect();
        let note = if held.is_empty() { String::new() } else { format!("held off: {}", fmt_pairs(&held)) };
        self.traj.events.push(EventRecord {
            time: t,
            cause,
            pairs: on_boundary,
            class,
            activated,
            inactive,
            pinned: pins.clone(),
            note,
        });
        self.traj.start_segment(edges.clone(), pins.clone());
        Ok(Decision { edges, pins })
    }

    fn search(
        &self,
        cfg: &Configuration,
        base: &[Pair],
        free: &[Pair],
        pins: &[Pair],
        boundary: &[Pair],
    ) -> Result<Option<Vec<Pair>>, SolverError> {
        if free.len() > 16 {
            return Err(SolverError::Inconsistent(format!("{} free boundary pairs is too many to search", free.len())));
        }
        for mask in subsets_by_size(free.len()) {
            let mut edges = base.to_vec();
            edges.extend(free.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, p)| *p));
            edges.sort();
            let bad = violations(&self.sc.kernel, self.sc.variant, cfg, &edges, pins, boundary, self.opts)?;
            if bad.is_empty() {
                return Ok(Some(edges));
            }
        }
        Ok(None)
    }
}

fn trend_word(t: Trend) -> &'static str {
    match t {
        Trend::Inward => "inward",
        Trend::Outward => "outward",
        Trend::Flat => "neither way",
    }
}
