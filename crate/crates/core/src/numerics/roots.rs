//! Safeguarded Newton iteration on a sign-changing bracket.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute tolerance on the abscissa.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-12,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds a root of `f` in `[lo, hi]`, where `f` returns the value and the
/// derivative. Newton steps are taken when they stay inside the current
/// bracket and shrink it fast enough; bisection otherwise.
pub fn newton_bisect<F>(f: F, lo: f64, hi: f64, opts: RootOptions) -> Result<Root>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (fa, _) = f(a)?;
    let (fb, _) = f(b)?;
    if fa == 0.0 {
        return Ok(Root { x: a, residual: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, residual: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!(
            "f({a}) = {fa:e} and f({b}) = {fb:e} share a sign"
        )));
    }
    // Orient so that f(a) < 0 < f(b).
    let flip = fa > 0.0;
    let sign = if flip { -1.0 } else { 1.0 };
    let mut x = 0.5 * (a + b);
    let mut dx_old = (b - a).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x)?;
    for it in 1..=opts.max_iter {
        let g = sign * fx;
        if g < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if g == 0.0 {
            return Ok(Root { x, residual: fx, iterations: it });
        }
        let newton_ok = dfx != 0.0 && dfx.is_finite() && {
            let xn = x - fx / dfx;
            xn > a.min(b) && xn < a.max(b) && (2.0 * fx).abs() <= (dx_old * dfx).abs()
        };
        dx_old = dx;
        if newton_ok {
            dx = fx / dfx;
            x -= dx;
        } else {
            dx = 0.5 * (b - a);
            x = a + dx;
        }
        let width = (b - a).abs();
        if dx.abs() <= opts.x_tol || width <= opts.x_tol {
            let (fxn, _) = f(x)?;
            return Ok(Root { x, residual: fxn, iterations: it });
        }
        (fx, dfx) = f(x)?;
    }
    Err(Error::Tolerance {
        residual: fx,
        context: format!("Newton-bisection exhausted {} iterations near x = {x}", opts.max_iter),
    })
}

/// Plain bisection on a predicate that is `false` at `lo` and `true` at `hi`
/// (monotone switch). Returns the final bracket.
pub fn bisect_switch<P>(pred: P, mut lo: f64, mut hi: f64, x_tol: f64, max_iter: usize) -> Result<(f64, f64)>
where
    P: Fn(f64) -> Result<bool>,
{
    for _ in 0..max_iter {
        if (hi - lo).abs() <= x_tol {
            return Ok((lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = newton_bisect(|x| Ok((x * x * x - 2.0, 3.0 * x * x)), 0.0, 3.0, RootOptions::default()).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn decreasing_function() {
        let r = newton_bisect(|x: f64| Ok(((-x).exp() - 0.5, -(-x).exp())), 0.0, 5.0, RootOptions::default()).unwrap();
        assert!((r.x - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bad_derivative_falls_back_to_bisection() {
        let r = newton_bisect(|x| Ok((x - 0.3, 0.0)), 0.0, 1.0, RootOptions::default()).unwrap();
        assert!((r.x - 0.3).abs() < 1e-11);
    }

    #[test]
    fn missing_bracket() {
        assert!(newton_bisect(|x| Ok((x * x + 1.0, 2.0 * x)), -1.0, 1.0, RootOptions::default()).is_err());
    }

    #[test]
    fn switch_bisection() {
        let (lo, hi) = bisect_switch(|x| Ok(x > 0.7), 0.0, 1.0, 1e-10, 100).unwrap();
        assert!(lo <= 0.7 && hi >= 0.7 && hi - lo <= 1e-10);
    }
}
