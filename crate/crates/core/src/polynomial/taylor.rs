use crate::error::{Error, Result};

/// Smallest `n >= 0` with `C e^{-D n} <= C eps^2`, i.e. `n >= (2/D) ln(1/eps)`.
pub fn taylor_order(eps: f64, c: f64, d: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(d > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidParameter("C and D must be positive".into()));
    }
    let x = 2.0 / d * (1.0 / eps).ln();
    let mut n = x.ceil().max(0.0) as usize;
    // Undo rounding that pushes an exact integer bound up by one ulp.
    let holds = |n: usize| (-d * n as f64).exp() <= eps * eps * (1.0 + 1e-12);
    while n > 0 && holds(n - 1) {
        n -= 1;
    }
    while !holds(n) {
        n += 1;
    }
    Ok(n)
}
