//! Dormand-Prince 5(4) with FSAL, Hairer's dense output and guard-function
//! event location.

use super::SolverError;

/// Right-hand side plus the scalar guards watched for events.
pub(crate) trait System {
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<(), SolverError>;
    fn n_guards(&self) -> usize;
    /// Guard values at `x`; an event happens when one drops to zero.
    fn guards(&self, x: &[f64], out: &mut [f64]) -> Result<(), SolverError>;
}

#[derive(Clone, Debug)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen from the rate scale when `None`.
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub max_steps: usize,
    /// Bisection stops once the bracket is shorter than this.
    pub event_time_tol: f64,
    /// A guard starting at (or near) zero is only watched for a sign change
    /// once it has moved above this value.
    pub arm_threshold: f64,
    /// An unarmed guard still fires if it falls this far below its start value.
    pub drift_threshold: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            initial_step: None,
            min_step: 1e-14,
            max_steps: 20_000_000,
            event_time_tol: 1e-12,
            arm_threshold: 1e-13,
            drift_threshold: 5e-10,
        }
    }
}

pub(crate) enum Exit {
    Reached,
    /// Guards that fired (or sit at zero) at the event time.
    Event(Vec<usize>),
}

pub(crate) struct Outcome {
    pub t: f64,
    pub x: Vec<f64>,
    pub exit: Exit,
}

// Butcher tableau
// (autonomous systems only, so the nodes c_i are not needed)
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// 5th minus 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Work {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }
}

/// One DP step of size `h` from `x` with `k[0] = f(x)` already filled.
/// Writes the 5th-order result to `out` and leaves `k[6] = f(out)`.
fn dp_step<S: System>(sys: &S, x: &[f64], h: f64, w: &mut Work, out: &mut [f64]) -> Result<(), SolverError> {
    let n = x.len();
    macro_rules! stage {
        ($dst:expr, $($c:expr => $k:expr),+) => {{
            for i in 0..n {
                w.tmp[i] = x[i] + h * (0.0 $(+ $c * w.k[$k][i])+);
            }
            sys.eval(&w.tmp, &mut w.k[$dst])?;
        }};
    }
    stage!(1, A21 => 0);
    stage!(2, A31 => 0, A32 => 1);
    stage!(3, A41 => 0, A42 => 1, A43 => 2);
    stage!(4, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
    stage!(5, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
    for i in 0..n {
        out[i] = x[i]
            + h * (A71 * w.k[0][i] + A73 * w.k[2][i] + A74 * w.k[3][i] + A75 * w.k[4][i] + A76 * w.k[5][i]);
    }
    sys.eval(out, &mut w.k[6])?;
    Ok(())
}

fn error_norm(x: &[f64], y: &[f64], h: f64, w: &Work, opts: &IntegratorOptions) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let e = h
            * (E1 * w.k[0][i] + E3 * w.k[2][i] + E4 * w.k[3][i] + E5 * w.k[4][i] + E6 * w.k[5][i]
                + E7 * w.k[6][i]);
        let sc = opts.atol + opts.rtol * x[i].abs().max(y[i].abs());
        acc += (e / sc) * (e / sc);
    }
    (acc / n.max(1) as f64).sqrt()
}

/// Continuous extension over one accepted step.
struct Dense {
    r: [Vec<f64>; 5],
}

impl Dense {
    fn new(x: &[f64], y: &[f64], h: f64, w: &Work) -> Self {
        let n = x.len();
        let mut r: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
        for i in 0..n {
            let dy = y[i] - x[i];
            let bspl = h * w.k[0][i] - dy;
            r[0][i] = x[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * w.k[6][i] - bspl;
            r[4][i] = h
                * (D1 * w.k[0][i] + D3 * w.k[2][i] + D4 * w.k[3][i] + D5 * w.k[4][i] + D6 * w.k[5][i]
                    + D7 * w.k[6][i]);
        }
        Self { r }
    }

    fn eval(&self, s: f64, out: &mut [f64]) {
        let s1 = 1.0 - s;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.r[0][i] + s * (self.r[1][i] + s1 * (self.r[2][i] + s * (self.r[3][i] + s1 * self.r[4][i])));
        }
    }
}

/// Integrates from `(t0, x0)` until `t_end` or the first guard event.
///
/// `sample` is called with every `k * sample_dt` strictly inside the covered
/// interval (dense output); the exit state itself is left to the caller.
pub(crate) fn integrate<S: System>(
    sys: &S,
    t0: f64,
    x0: &[f64],
    t_end: f64,
    rate_hint: f64,
    sample_dt: f64,
    opts: &IntegratorOptions,
    sample: &mut dyn FnMut(f64, &[f64]),
) -> Result<Outcome, SolverError> {
    let n = x0.len();
    let ng = sys.n_guards();
    let mut x = x0.to_vec();
    let mut t = t0;
    if t_end <= t0 {
        return Ok(Outcome { t, x, exit: Exit::Reached });
    }
    let mut g_start = vec![0.0; ng];
    sys.guards(&x, &mut g_start)?;
    let mut armed: Vec<bool> = g_start.iter().map(|&g| g > opts.arm_threshold).collect();
    let fire_level: Vec<f64> = g_start.iter().map(|&g| g.min(0.0) - opts.drift_threshold).collect();
    let triggered = |g: &[f64], armed: &[bool], k: usize| if armed[k] { g[k] < 0.0 } else { g[k] < fire_level[k] };

    let mut w = Work::new(n);
    sys.eval(&x, &mut w.k[0])?;
    let mut h = opts.initial_step.unwrap_or(1e-3 / rate_hint.max(1.0)).min(t_end - t);
    let mut y = vec![0.0; n];
    let mut g = vec![0.0; ng];
    let mut probe = vec![0.0; n];
    // grid index of the next sample; times are k * sample_dt, never accumulated
    let mut k_next = if sample_dt > 0.0 { (t / sample_dt).floor() as u64 + 1 } else { u64::MAX };
    if sample_dt > 0.0 && k_next as f64 * sample_dt - t <= 1e-13 {
        k_next += 1;
    }
    let grid = |k: u64| if sample_dt > 0.0 { k as f64 * sample_dt } else { f64::INFINITY };
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(SolverError::Integrator(format!("step budget exhausted at t = {t}")));
        }
        let last = t + h >= t_end - 1e-15 * t_end.abs().max(1.0);
        if last {
            h = t_end - t;
        } else {
            // a step the clock can represent exactly: otherwise sample times
            // drift by an ulp per step against the state, which fast kernels
            // turn into visible velocity noise
            h = (t + h) - t;
        }
        dp_step(sys, &x, h, &mut w, &mut y)?;
        let err = error_norm(&x, &y, h, &w, opts);
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= fac;
            if h < opts.min_step {
                return Err(SolverError::Integrator(format!(
                    "step size underflow ({h:e}) at t = {t}; events may be accumulating"
                )));
            }
            continue;
        }
        steps += 1;
        let t_new = if last { t_end } else { t + h };
        sys.guards(&y, &mut g)?;
        let fired: Vec<usize> = (0..ng).filter(|&k| triggered(&g, &armed, k)).collect();
        let dense = Dense::new(&x, &y, h, &w);
        if !fired.is_empty() {
            // bisection on the dense output for the earliest trigger
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let mut gp = vec![0.0; ng];
            while (hi - lo) * h > opts.event_time_tol {
                let mid = 0.5 * (lo + hi);
                dense.eval(mid, &mut probe);
                sys.guards(&probe, &mut gp)?;
                if (0..ng).any(|k| triggered(&gp, &armed, k)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            // The interpolant is only fourth order; polish the crossing of the
            // first guard with secant steps on the full scheme.
            let kstar = (0..ng).find(|&k| {
                dense.eval(hi, &mut probe);
                sys.guards(&probe, &mut gp).is_ok() && triggered(&gp, &armed, k)
            });
            if let Some(ks) = kstar {
                let level = if armed[ks] { 0.0 } else { fire_level[ks] };
                let mut w3 = Work::new(n);
                let mut xs = vec![0.0; n];
                let g_at = |tau: f64, w3: &mut Work, xs: &mut Vec<f64>, gp: &mut Vec<f64>| -> Result<f64, SolverError> {
                    w3.k[0].copy_from_slice(&w.k[0]);
                    dp_step(sys, &x, tau * h, w3, xs)?;
                    sys.guards(xs, gp)?;
                    Ok(gp[ks] - level)
                };
                let (mut a, mut b) = (lo, hi);
                let mut ga = g_at(a, &mut w3, &mut xs, &mut gp)?;
                let mut gb = g_at(b, &mut w3, &mut xs, &mut gp)?;
                for _ in 0..8 {
                    if gb.abs() < 1e-15 || gb == ga {
                        break;
                    }
                    let c = b - gb * (b - a) / (gb - ga);
                    if !(c > lo - 1e-3 && c < hi + 1e-3) {
                        break;
                    }
                    let gc = g_at(c, &mut w3, &mut xs, &mut gp)?;
                    (a, ga, b, gb) = (b, gb, c, gc);
                }
                if gb.abs() < 1e-12 && b > 0.0 {
                    hi = b;
                }
            }
            let t_ev = t + hi * h;
            let tau = t_ev - t;
            while grid(k_next) < t_ev - 1e-13 {
                dense.eval((grid(k_next) - t) / h, &mut probe);
                sample(grid(k_next), &probe);
                k_next += 1;
            }
            // exact state at the event: one step of the full scheme
            let mut w2 = Work::new(n);
            w2.k[0].copy_from_slice(&w.k[0]);
            let mut x_ev = vec![0.0; n];
            dp_step(sys, &x, tau, &mut w2, &mut x_ev)?;
            sys.guards(&x_ev, &mut gp)?;
            let hits: Vec<usize> = (0..ng).filter(|&k| triggered(&gp, &armed, k) || gp[k].abs() <= 1e-9).collect();
            let hits = if hits.is_empty() { fired } else { hits };
            return Ok(Outcome { t: t_ev, x: x_ev, exit: Exit::Event(hits) });
        }
        while grid(k_next) < t_new - 1e-13 {
            dense.eval((grid(k_next) - t) / h, &mut probe);
            sample(grid(k_next), &probe);
            k_next += 1;
        }
        for k in 0..ng {
            if !armed[k] && g[k] > opts.arm_threshold {
                armed[k] = true;
            }
        }
        std::mem::swap(&mut x, &mut y);
        let (head, tail) = w.k.split_at_mut(6);
        head[0].copy_from_slice(&tail[0]);
        t = t_new;
        if last {
            return Ok(Outcome { t, x, exit: Exit::Reached });
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
}

/// Fixed-step classical RK4 over `[0, h]`, for short probes.
pub(crate) fn rk4<S: System>(sys: &S, x0: &[f64], h: f64, substeps: usize) -> Result<Vec<f64>, SolverError> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let dt = h / substeps as f64;
    for _ in 0..substeps {
        sys.eval(&x, &mut k1)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        sys.eval(&tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        sys.eval(&tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        sys.eval(&tmp, &mut k4)?;
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// x' = -x with guard x - 1/2.
    struct Decay;

    impl System for Decay {
        fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
            out[0] = -x[0];
            out[1] = x[0];
            Ok(())
        }
        fn n_guards(&self) -> usize {
            1
        }
        fn guards(&self, x: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
            out[0] = x[0] - 0.5;
            Ok(())
        }
    }

    #[test]
    fn exponential_decay_and_event() {
        let mut samples = Vec::new();
        let out = integrate(&Decay, 0.0, &[1.0, 0.0], 5.0, 1.0, 0.1, &IntegratorOptions::default(), &mut |t, x| {
            samples.push((t, x[0]))
        })
        .unwrap();
        assert!(matches!(out.exit, Exit::Event(ref k) if k == &vec![0]));
        // the guard is met to rounding; the time carries the global error
        assert!((out.x[0] - 0.5).abs() < 1e-14);
        assert!((out.t - 2f64.ln()).abs() < 1e-10, "{}", out.t);
        for (t, x) in samples {
            assert!((x - (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn reaches_horizon_without_guards() {
        struct Rot;
        impl System for Rot {
            fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
                out[0] = -x[1];
                out[1] = x[0];
                Ok(())
            }
            fn n_guards(&self) -> usize {
                0
            }
            fn guards(&self, _: &[f64], _: &mut [f64]) -> Result<(), SolverError> {
                Ok(())
            }
        }
        let out = integrate(&Rot, 0.0, &[1.0, 0.0], 10.0, 1.0, 0.0, &IntegratorOptions::default(), &mut |_, _| {})
            .unwrap();
        assert!(matches!(out.exit, Exit::Reached));
        assert!((out.x[0] - 10f64.cos()).abs() < 1e-8);
        assert!((out.x[1] - 10f64.sin()).abs() < 1e-8);
    }
}
