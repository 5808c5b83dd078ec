//! Dense two-phase simplex for the tiny feasibility programs behind hull tests.
//!
//! Solves `min c.x  s.t.  A x = b, x >= 0` with Bland's rule. Problem sizes here
//! are a handful of rows and a few dozen columns, so a full tableau is fine.

const PIVOT_EPS: f64 = 1e-12;

pub(crate) struct Lp {
    /// Row-major `rows x cols`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    // rows x (cols + 1); last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.t[r].len();
        let p = self.t[r][col];
        for k in 0..w {
            self.t[r][k] /= p;
        }
        for i in 0..self.t.len() {
            if i == r {
                continue;
            }
            let f = self.t[i][col];
            if f != 0.0 {
                for k in 0..w {
                    self.t[i][k] -= f * self.t[r][k];
                }
            }
        }
        self.basis[r] = col;
    }

    /// Minimizes `cost` over the current basis restricted to columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<(), ()> {
        let rhs = self.t[0].len() - 1;
        for _ in 0..10_000 {
            // reduced cost d_j = c_j - c_B B^{-1} A_j
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let d = cost[j] - self.basis.iter().enumerate().map(|(r, &bj)| cost[bj] * self.t[r][j]).sum::<f64>();
                if d < -PIVOT_EPS {
                    entering = Some(j);
                    break; // Bland: smallest index
                }
            }
            let Some(col) = entering else { return Ok(()) };
            let mut best: Option<(f64, usize)> = None;
            for r in 0..self.t.len() {
                let a = self.t[r][col];
                if a > PIVOT_EPS {
                    let ratio = self.t[r][rhs] / a;
                    let better = match best {
                        None => true,
                        Some((q, br)) => ratio < q - 1e-15 || (ratio <= q + 1e-15 && self.basis[r] < self.basis[br]),
                    };
                    if better {
                        best = Some((ratio, r));
                    }
                }
            }
            let Some((_, r)) = best else { return Err(()) };
            self.pivot(r, col);
        }
        Err(())
    }
}

pub(crate) fn solve(lp: &Lp) -> LpOutcome {
    let m = lp.a.len();
    let n = lp.c.len();
    // Phase 1: artificial column per row, rows flipped so b >= 0.
    let mut t = Vec::with_capacity(m);
    for r in 0..m {
        let s = if lp.b[r] < 0.0 { -1.0 } else { 1.0 };
        let mut row: Vec<f64> = lp.a[r].iter().map(|v| s * v).collect();
        row.extend((0..m).map(|k| if k == r { 1.0 } else { 0.0 }));
        row.push(s * lp.b[r]);
        t.push(row);
    }
    let mut tab = Tableau { t, basis: (n..n + m).collect() };
    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    if tab.optimize(&phase1, n + m).is_err() {
        return LpOutcome::Infeasible;
    }
    let rhs = n + m;
    let infeas: f64 = tab.basis.iter().enumerate().filter(|(_, &b)| b >= n).map(|(r, _)| tab.t[r][rhs]).sum();
    if infeas > 1e-9 {
        return LpOutcome::Infeasible;
    }
    // Drive remaining (zero-level) artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| tab.t[r][j].abs() > PIVOT_EPS && !tab.basis.contains(&j)) {
                tab.pivot(r, col);
            }
        }
    }
    let mut cost = lp.c.clone();
    cost.extend(std::iter::repeat(0.0).take(m));
    // Artificials stuck in the basis are redundant rows at level zero; block re-entry.
    if tab.optimize(&cost, n).is_err() {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.t[r][rhs];
        }
    }
    let value = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal { value, x }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // min -x - y  s.t. x + s1 = 1, y + s2 = 2
        let lp = Lp {
            a: vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]],
            b: vec![1.0, 2.0],
            c: vec![-1.0, -1.0, 0.0, 0.0],
        };
        match solve(&lp) {
            LpOutcome::Optimal { value, x } => {
                assert!((value + 3.0).abs() < 1e-12);
                assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_program() {
        // x = -1 with x >= 0
        let lp = Lp { a: vec![vec![1.0]], b: vec![-1.0], c: vec![0.0] };
        assert_eq!(solve(&lp), LpOutcome::Infeasible);
    }
}
