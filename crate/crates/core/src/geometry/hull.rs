use super::lp::{self, Lp, LpOutcome};
use super::GeometryError;

/// Sup-norm distance from `p` to the convex hull of `outer` (0 if inside).
///
/// In one dimension this is an interval test; otherwise it solves the linear
/// program `min s` over convex weights `l` with `|sum_k l_k a_k - p|_inf <= s`.
pub fn hull_violation(outer: &[Vec<f64>], p: &[f64]) -> Result<f64, GeometryError> {
    let dim = p.len();
    if outer.is_empty() {
        return Err(GeometryError::Dimension("empty outer point set".into()));
    }
    if outer.iter().any(|a| a.len() != dim) {
        return Err(GeometryError::Dimension("outer and inner points differ in dimension".into()));
    }
    if outer.iter().any(|a| a.as_slice() == p) {
        return Ok(0.0);
    }
    // Box distance is a lower bound and, per coordinate, exact for n = 1.
    let mut box_gap: f64 = 0.0;
    for d in 0..dim {
        let lo = outer.iter().map(|a| a[d]).fold(f64::INFINITY, f64::min);
        let hi = outer.iter().map(|a| a[d]).fold(f64::NEG_INFINITY, f64::max);
        box_gap = box_gap.max(lo - p[d]).max(p[d] - hi);
    }
    if dim == 1 {
        return Ok(box_gap.max(0.0));
    }
    let m = outer.len();
    // Centred on `p` and scaled to unit size, so thin hulls far from the
    // origin do not drown in the offset.
    let scale = outer.iter().flat_map(|a| a.iter().zip(p).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    // columns: lambda_1..m, s, u_1..dim, w_1..dim
    let cols = m + 1 + 2 * dim;
    let mut a = Vec::with_capacity(2 * dim + 1);
    let mut b = Vec::with_capacity(2 * dim + 1);
    for d in 0..dim {
        for sign in [-1.0, 1.0] {
            let mut row = vec![0.0; cols];
            for k in 0..m {
                row[k] = (outer[k][d] - p[d]) / scale;
            }
            row[m] = sign;
            row[m + 1 + d + if sign > 0.0 { dim } else { 0 }] = -sign;
            a.push(row);
            b.push(0.0);
        }
    }
    let mut row = vec![0.0; cols];
    row[..m].iter_mut().for_each(|v| *v = 1.0);
    a.push(row);
    b.push(1.0);
    let mut c = vec![0.0; cols];
    c[m] = 1.0;
    match lp::solve(&Lp { a, b, c }) {
        LpOutcome::Optimal { value, .. } => Ok((value * scale).max(box_gap).max(0.0)),
        other => Err(GeometryError::Numerical(format!("hull program did not solve: {other:?}"))),
    }
}

/// True iff every inner point lies in the hull of `outer` up to outward slack `tol`.
pub fn hull_contains(outer: &[Vec<f64>], inner: &[Vec<f64>], tol: f64) -> Result<bool, GeometryError> {
    for p in inner {
        if hull_violation(outer, p)? > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[&[f64]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn interval_and_square() {
        let line = pts(&[&[-1.0], &[0.0], &[1.0]]);
        assert!(hull_contains(&line, &pts(&[&[-0.5], &[0.9]]), 0.0).unwrap());
        assert!(!hull_contains(&pts(&[&[-1.0], &[1.0]]), &pts(&[&[1.001]]), 1e-6).unwrap());
        let sq = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        assert!(hull_contains(&sq, &pts(&[&[0.5, 0.5]]), 0.0).unwrap());
        assert!(hull_contains(&sq, &sq, 0.0).unwrap());
    }

    #[test]
    fn violation_is_sup_norm_distance() {
        let sq = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        let v = hull_violation(&sq, &[1.25, 0.5]).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
        // Outside a diagonal edge: triangle (0,0),(1,0),(0,1), point (1,1).
        let tri = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let v = hull_violation(&tri, &[1.0, 1.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
        // Segment in the plane: a point on it is inside.
        let seg = pts(&[&[0.0, 0.0], &[2.0, 2.0]]);
        assert!(hull_violation(&seg, &[0.5, 0.5]).unwrap() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(hull_contains(&pts(&[&[0.0, 0.0]]), &pts(&[&[0.0]]), 0.0).is_err());
    }
}
