//! Least-squares helpers for convergence orders and scaling exponents.

/// Slope of the least-squares line through `(ln x, ln y)`.
///
/// Returns NaN if fewer than two points are supplied or any value is not
/// strictly positive.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "mismatched sample lengths");
    if x.len() < 2 || x.iter().chain(y).any(|v| v.is_nan() || *v <= 0.0) {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Observed order from errors at successive step refinements by `ratio`.
pub fn observed_order(coarse_err: f64, fine_err: f64, ratio: f64) -> f64 {
    (coarse_err / fine_err).ln() / ratio.ln()
}
