//! Numerical building blocks shared by the solvers.

pub mod quadrature;
pub mod rk45;
pub mod roots;
pub mod tridiag;

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Least squares for `y ≈ Σ_k c_k·basis_k(x)` with a small dense basis,
/// solved through the normal equations with partial pivoting.
pub fn least_squares<const K: usize>(rows: &[[f64; K]], y: &[f64]) -> Option<[f64; K]> {
    let mut a = [[0.0; K]; K];
    let mut b = [0.0; K];
    for (row, yi) in rows.iter().zip(y) {
        for i in 0..K {
            b[i] += row[i] * yi;
            for j in 0..K {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    for col in 0..K {
        let piv = (col..K).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..K {
            let f = a[r][col] / a[col][col];
            #[allow(clippy::needless_range_loop)]
            for c in col..K {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; K];
    for i in (0..K).rev() {
        let mut s = b[i];
        for j in i + 1..K {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (c, m) = linear_fit(&x, &y);
        assert!((c - 2.0).abs() < 1e-14 && (m + 0.5).abs() < 1e-14);
    }

    #[test]
    fn quadratic_basis_fit() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let rows: Vec<[f64; 3]> = xs.iter().map(|&x| [1.0, x, x * x]).collect();
        let y: Vec<f64> = xs.iter().map(|&x| 1.0 - 2.0 * x + 0.25 * x * x).collect();
        let c = least_squares(&rows, &y).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-10 && (c[1] + 2.0).abs() < 1e-10 && (c[2] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn log_add_exp_large() {
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }
}
