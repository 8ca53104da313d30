//! Floating-point helpers for the sampled checks: Jacobians, SVD ranks,
//! tangent spaces and Newton projection onto algebraic sets.

use nalgebra::DMatrix;

use crate::exactpoly::FloatPoly;

/// Membership tolerance for floating-point re-checks.
pub const EPS_MEM: f64 = 1e-9;
/// Singular values above this count toward numerical rank.
pub const EPS_NUM: f64 = 1e-7;
/// Attempts allowed per rejection-sampling request.
pub const REJECTION_BUDGET: usize = 1_000_000;

pub fn jacobian(eqs: &[FloatPoly], x: &[f64]) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = eqs.iter().map(|f| f.gradient(x)).collect();
    DMatrix::from_fn(eqs.len(), x.len(), |i, j| rows[i][j])
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    singular_values(m).into_iter().filter(|&s| s > tol).count()
}

/// Orthonormal basis (as columns) of the null space of `m`.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let cols: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] <= tol).collect();
    DMatrix::from_fn(n, cols.len(), |i, j| vt[(cols[j], i)])
}

/// Determinant of `dproj` restricted to the tangent space of `{eqs = 0}`
/// at `x`, computed in an orthonormal tangent frame. Returns `None` when
/// the tangent space does not have dimension `dproj.nrows()`.
pub fn tangent_determinant(eqs: &[FloatPoly], dproj: &DMatrix<f64>, x: &[f64]) -> Option<f64> {
    let j = jacobian(eqs, x);
    let t = null_space(&j, EPS_NUM);
    if t.ncols() != dproj.nrows() {
        return None;
    }
    Some((dproj * t).determinant())
}

pub fn residual(eqs: &[FloatPoly], x: &[f64]) -> f64 {
    eqs.iter().map(|f| f.eval(x).abs()).fold(0.0, f64::max)
}

/// Gauss–Newton projection with minimum-norm steps. Converges to a point
/// of `{eqs = 0}` near `start`, or gives up after `max_iter` steps.
pub fn newton_project(eqs: &[FloatPoly], start: &[f64], tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let mut x = start.to_vec();
    for _ in 0..max_iter {
        let f: Vec<f64> = eqs.iter().map(|p| p.eval(&x)).collect();
        if f.iter().all(|v| v.abs() <= tol) {
            return Some(x);
        }
        let j = jacobian(eqs, &x);
        let svd = j.svd(true, true);
        let rhs = nalgebra::DVector::from_vec(f);
        let step = svd.solve(&rhs, 1e-12).ok()?;
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= si;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if step.amax() <= 1e-15 * scale {
            break;
        }
    }
    let ok = eqs.iter().all(|p| p.eval(&x).abs() <= tol);
    ok.then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::parse_polynomial;

    #[test]
    fn circle_projection_and_tangent() {
        let names = ["c", "s"];
        let circle = parse_polynomial("c^2 + s^2 - 1", &names).unwrap().to_float();
        let p = newton_project(std::slice::from_ref(&circle), &[0.3, 0.9], 1e-13, 50).unwrap();
        assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-12);
        // projection to c: derivative along the unit tangent is ±s
        let dproj = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let det = tangent_determinant(&[circle], &dproj, &p).unwrap();
        assert!((det.abs() - p[1].abs()).abs() < 1e-9);
    }

    #[test]
    fn rank_of_dependent_rows() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(rank(&m, EPS_NUM), 1);
        assert_eq!(null_space(&m, EPS_NUM).ncols(), 2);
    }
}
