//! Finite differences on irregular sample grids.

use crate::solvers::Trajectory;

/// Fornberg weights for the first derivative at `z` from nodes `xs`.
pub(crate) fn first_derivative_weights(z: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // c[j][k]: weight of node j for derivative k, k in {0, 1}
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// Velocity at sample `k` from five samples of `[lo, hi]` around it, as
/// centred as the range allows. Samples crowding an already chosen node (an
/// event squeezed between grid points) are skipped: near-coincident nodes
/// turn the integrator's rounding into large differences.
pub(crate) fn velocity_at(traj: &Trajectory, k: usize, lo: usize, hi: usize) -> Vec<f64> {
    let t = &traj.times;
    let a = k.saturating_sub(4).max(lo);
    let b = (k + 4).min(hi);
    let h_ref = (a..b).map(|i| t[i + 1] - t[i]).fold(0.0, f64::max);
    let min_sep = 0.3 * h_ref;
    let mut idx = vec![k];
    let (mut left_last, mut right_last) = (k, k);
    let (mut l, mut r) = (k as isize - 1, k + 1);
    let (mut nl, mut nr) = (0, 0);
    while idx.len() < 5 && (l >= lo as isize || r <= hi) {
        let go_left = l >= lo as isize && (nl <= nr || r > hi);
        if go_left {
            let c = l as usize;
            l -= 1;
            if t[left_last] - t[c] >= min_sep {
                idx.push(c);
                left_last = c;
                nl += 1;
            }
        } else {
            let c = r;
            r += 1;
            if t[c] - t[right_last] >= min_sep {
                idx.push(c);
                right_last = c;
                nr += 1;
            }
        }
    }
    idx.sort_unstable();
    let ts: Vec<f64> = idx.iter().map(|&i| t[i]).collect();
    let w = first_derivative_weights(t[k], &ts);
    let m = traj.states[k].positions().len();
    let mut v = vec![0.0; m];
    for (wi, &i) in w.iter().zip(&idx) {
        for (o, x) in v.iter_mut().zip(traj.states[i].positions()) {
            *o += wi * x;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quartics() {
        let xs = [0.0, 0.1, 0.25, 0.3, 0.7];
        let w = first_derivative_weights(0.25, &xs);
        let f = |x: f64| 1.0 + x - 2.0 * x * x + x.powi(3) - 0.5 * x.powi(4);
        let df = |x: f64| 1.0 - 4.0 * x + 3.0 * x * x - 2.0 * x.powi(3);
        let est: f64 = w.iter().zip(&xs).map(|(w, x)| w * f(*x)).sum();
        assert!((est - df(0.25)).abs() < 1e-12);
    }
}
