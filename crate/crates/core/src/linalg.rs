use alloc::vec::Vec;

/// Solves `a x = b` for a dense row-major `n x n` matrix by Gaussian
/// elimination with partial pivoting. Returns `None` when the matrix is
/// numerically singular.
pub(crate) fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        let mut best = m[col * n + col].abs();
        for row in col + 1..n {
            let v = m[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            x.swap(col, pivot);
        }
        let diag = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in col + 1..n {
            acc -= m[col * n + j] * x[j];
        }
        x[col] = acc / m[col * n + col];
    }
    Some(x)
}

/// One step of iterative refinement on top of [`solve`].
pub(crate) fn solve_refined(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut x = solve(a, b, n)?;
    let residual: Vec<f64> = (0..n)
        .map(|i| b[i] - (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>())
        .collect();
    let correction = solve(a, &residual, n)?;
    for (xi, ci) in x.iter_mut().zip(correction) {
        *xi += ci;
    }
    Some(x)
}
