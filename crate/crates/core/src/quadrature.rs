//! Trapezoidal quadrature on sampled grids.

/// Integral over `[a, b]` of a function known at grid nodes `s`.
///
/// `node(k)` is the integrand at `s[k]`; `between(x)` evaluates it at an
/// arbitrary abscissa inside the grid and is only used at the window edges.
/// The caller guarantees `s[0] <= a < b <= s[last]`.
pub(crate) fn trapezoid_window(
    s: &[f64],
    a: f64,
    b: f64,
    node: impl Fn(usize) -> f64,
    between: impl Fn(f64) -> f64,
) -> f64 {
    // first node strictly inside (a, b) and first node at or past b
    let first = s.partition_point(|&x| x <= a);
    let end = s.partition_point(|&x| x < b);

    let mut x_prev = a;
    let mut f_prev = between(a);
    let mut total = 0.0;
    for k in first..end {
        let f = node(k);
        total += 0.5 * (f + f_prev) * (s[k] - x_prev);
        x_prev = s[k];
        f_prev = f;
    }
    total + 0.5 * (between(b) + f_prev) * (b - x_prev)
}

/// Linear interpolation of `values` sampled on the increasing grid `s`.
pub(crate) fn interpolate(s: &[f64], values: &[f64], x: f64) -> f64 {
    let k = s.partition_point(|&v| v <= x).clamp(1, s.len() - 1);
    let w = (x - s[k - 1]) / (s[k] - s[k - 1]);
    values[k - 1] + (values[k] - values[k - 1]) * w
}

/// Running trapezoidal antiderivative, starting at zero.
pub(crate) fn cumulative_trapezoid(s: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for k in 1..values.len() {
        let prev = out[k - 1];
        out.push(prev + 0.5 * (values[k] + values[k - 1]) * (s[k] - s[k - 1]));
    }
    out
}
