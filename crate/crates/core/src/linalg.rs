//! Small dense linear algebra: symmetric solves and spectral-radius
//! estimation. Problem sizes here stay in the low hundreds, so plain
//! O(n^3) routines are plenty.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{CoreError, Result};

/// Solves `A x = b` for symmetric positive definite `A` via Cholesky,
/// falling back to partially pivoted LU when the factorization stalls
/// (rank-deficient normal equations with a zero penalty).
pub fn solve_symmetric(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = check_square(a, b)?;
    match cholesky(a, n) {
        Some(l) => Ok(cholesky_solve(&l, b, n)),
        None => lu_solve(a.clone(), b.clone(), n),
    }
}

fn check_square(a: &Array2<f64>, b: &Array1<f64>) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c || b.len() != r {
        return Err(CoreError::DimensionMismatch(format!(
            "solve: A is {r}x{c}, b has length {}",
            b.len()
        )));
    }
    Ok(r)
}

fn cholesky(a: &Array2<f64>, n: usize) -> Option<Array2<f64>> {
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>, n: usize) -> Array1<f64> {
    // forward L y = b, then backward L^T x = y
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let v = y[k];
            y[i] -= l[[i, k]] * v;
        }
        y[i] /= l[[i, i]];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = y[k];
            y[i] -= l[[k, i]] * v;
        }
        y[i] /= l[[i, i]];
    }
    y
}

fn lu_solve(mut a: Array2<f64>, mut b: Array1<f64>, n: usize) -> Result<Array1<f64>> {
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[[row, col]].abs() > a[[pivot, col]].abs() {
                pivot = row;
            }
        }
        if a[[pivot, col]].abs() < 1e-300 {
            return Err(CoreError::InvalidArgument(
                "singular system in linear solve".into(),
            ));
        }
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
            }
            b.swap(pivot, col);
        }
        for row in (col + 1)..n {
            let factor = a[[row, col]] / a[[col, col]];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[[col, k]];
                a[[row, k]] -= factor * v;
            }
            b[row] -= factor * b[col];
        }
    }
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= a[[i, k]] * b[k];
        }
        b[i] = sum / a[[i, i]];
    }
    Ok(b)
}

/// Power-iteration estimate of the spectral radius (max |eigenvalue|) of a
/// square matrix.
///
/// Plain power iteration stalls when the dominant eigenvalues are a complex
/// conjugate pair, which random reservoir matrices produce routinely. Each
/// iteration therefore fits the two-step recurrence `W^2 p ~ a W p + b p`
/// on the current iterate and reads the dominant modulus off the roots of
/// `z^2 - a z - b`, which covers a real dominant eigenvalue, a dominant
/// pair of distinct real eigenvalues, and a complex pair alike.
///
/// Returns `None` if the iterate collapses to zero or the estimate fails to
/// settle within `max_iter` matrix applications.
pub fn spectral_radius(w: &ArrayView2<f64>, tol: f64, max_iter: usize) -> Option<f64> {
    let n = w.nrows();
    if n != w.ncols() || n == 0 {
        return None;
    }
    if n == 1 {
        return Some(w[[0, 0]].abs());
    }

    // Fixed, generic start vector; alternating signs avoid accidental
    // orthogonality to the dominant eigenvector of sign-structured matrices.
    let mut p = Array1::from_shape_fn(n, |i| {
        let base = if i % 2 == 0 { 1.0 } else { -0.7 };
        base + 0.1 * (i as f64 + 1.0).recip()
    });
    normalize(&mut p)?;

    let mut prev_est = f64::NAN;
    let mut stable = 0usize;
    let mut applications = 0usize;
    while applications < max_iter {
        let q = w.dot(&p);
        let r = w.dot(&q);
        applications += 2;

        let qq = q.dot(&q);
        let qp = q.dot(&p);
        let qr = q.dot(&r);
        let pr = p.dot(&r);
        if !(qq.is_finite() && qr.is_finite() && pr.is_finite()) {
            return None;
        }
        if qq < 1e-300 {
            return None; // W p vanished: radius is (numerically) zero
        }

        // Least-squares fit of r = a q + b p over the Krylov pair.
        let det = qq - qp * qp; // p is unit length
        let est = if det.abs() < 1e-12 * qq {
            qq.sqrt() // q parallel to p: dominant eigenvalue is real
        } else {
            let a = (qr - qp * pr) / det;
            let b = (qq * pr - qp * qr) / det;
            let disc = a * a + 4.0 * b;
            if disc >= 0.0 {
                let root = disc.sqrt();
                (0.5 * (a + root)).abs().max((0.5 * (a - root)).abs())
            } else {
                (-b).sqrt()
            }
        };

        if est.is_finite() && (est - prev_est).abs() <= tol * est.max(1e-300) {
            stable += 1;
            if stable >= 3 {
                return Some(est);
            }
        } else {
            stable = 0;
        }
        prev_est = est;

        p = r;
        normalize(&mut p)?;
    }
    prev_est.is_finite().then_some(prev_est)
}

fn normalize(v: &mut Array1<f64>) -> Option<f64> {
    let norm = v.dot(&*v).sqrt();
    if norm < 1e-300 || !norm.is_finite() {
        return None;
    }
    v.mapv_inplace(|x| x / norm);
    Some(norm)
}

/// Max-norm relative residual of `A x = b`, used by tests and invariants.
pub fn residual_inf(a: &ArrayView2<f64>, x: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    let ax = a.dot(x);
    let num = ax
        .iter()
        .zip(b.iter())
        .map(|(l, r)| (l - r).abs())
        .fold(0.0f64, f64::max);
    let den = b.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
