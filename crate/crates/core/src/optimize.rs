//! Bracketed one-dimensional minimization.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("golden-section search did not converge in {iterations} iterations (bracket width {width:e})")]
    NoConvergence { iterations: usize, width: f64 },
    #[error("objective returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns `(x, f(x))` once the bracket is narrower than `tol`. The
/// objective is assumed unimodal on the bracket; callers that cannot
/// guarantee that should bracket first.
pub fn golden_section<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<(f64, f64), SearchError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut eval = |x: f64| {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(SearchError::NonFinite { x })
        }
    };

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;

    for _ in 0..max_iter {
        if b - a <= tol {
            let x = 0.5 * (a + b);
            let fx = eval(x)?;
            return Ok((x, fx));
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    if b - a <= tol {
        let x = 0.5 * (a + b);
        return Ok((x, eval(x)?));
    }
    Err(SearchError::NoConvergence {
        iterations: max_iter,
        width: b - a,
    })
}
