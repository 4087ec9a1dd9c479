//! Conjugate gradient for symmetric positive (semi-)definite systems given
//! only as a matrix-vector product.

#[derive(Clone, Debug, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// `‖A x − b‖ / ‖b‖` of the returned iterate (recomputed from the recurrence).
    pub relative_residual: f64,
    pub converged: bool,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from `x`. Stops when the relative residual
/// reaches `tol` or after `max_iters` iterations. `observe` sees every iterate,
/// including the starting point.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iters: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> CgReport {
    let b_norm = dot(b, b).sqrt();
    observe(0, x);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgReport { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let ax = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut rel = rr.sqrt() / b_norm;
    let mut it = 0;
    while rel > tol && it < max_iters {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // direction of zero curvature: the system is singular along p
            break;
        }
        let alpha = rr / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
        rel = rr.sqrt() / b_norm;
        it += 1;
        observe(it, x);
    }
    CgReport { iterations: it, relative_residual: rel, converged: rel <= tol }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let apply = |v: &[f64]| (0..3).map(|i| (0..3).map(|j| a[i][j] * v[j]).sum()).collect();
        let b = [1.0, 2.0, 3.0];
        let mut x = [0.0; 3];
        let rep = conjugate_gradient(apply, &b, &mut x, 1e-14, 50, |_, _| {});
        assert!(rep.converged);
        assert!(rep.iterations <= 4);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert!((row - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let mut x = [1.0, 2.0];
        let rep = conjugate_gradient(|v| v.to_vec(), &[0.0, 0.0], &mut x, 1e-6, 10, |_, _| {});
        assert_eq!(x, [0.0, 0.0]);
        assert!(rep.converged);
    }

    #[test]
    fn respects_iteration_cap() {
        let apply = |v: &[f64]| v.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).collect();
        let b = vec![1.0; 50];
        let mut x = vec![0.0; 50];
        let rep = conjugate_gradient(apply, &b, &mut x, 1e-30, 3, |_, _| {});
        assert_eq!(rep.iterations, 3);
        assert!(!rep.converged);
    }
}
