//! Small fixed-order reductions shared across modules.

/// Neumaier-compensated sum; result does not depend on how the caller
/// partitioned earlier work, only on element order.
pub(crate) fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

/// Population standard deviation.
pub(crate) fn std(values: &[f64]) -> f64 {
    let m = mean(values);
    (sum(values.iter().map(|v| (v - m) * (v - m))) / values.len() as f64).sqrt()
}

/// Linear-interpolated quantile, `q` in [0, 1].
pub(crate) fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Piecewise-linear interpolation over sorted knots, clamped at both ends.
pub(crate) fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let hi = xs.partition_point(|&k| k <= x);
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

/// Cubic Hermite interpolation with three-point slopes (exact on
/// quadratics), clamped at both ends like [`interp_clamped`].
pub(crate) fn interp_cubic_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 3 {
        return interp_clamped(xs, ys, x);
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let secant = |j: usize| (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
    let slope = |i: usize| {
        if i == 0 {
            let (h0, h1) = (xs[1] - xs[0], xs[2] - xs[1]);
            secant(0) - h0 * (secant(1) - secant(0)) / (h0 + h1)
        } else if i == n - 1 {
            let (h0, h1) = (xs[n - 2] - xs[n - 3], xs[n - 1] - xs[n - 2]);
            secant(n - 2) + h1 * (secant(n - 2) - secant(n - 3)) / (h0 + h1)
        } else {
            let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            (h1 * secant(i - 1) + h0 * secant(i)) / (h0 + h1)
        }
    };
    let hi = xs.partition_point(|&k| k <= x);
    let lo = hi - 1;
    let h = xs[hi] - xs[lo];
    let t = (x - xs[lo]) / h;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * ys[lo]
        + (t3 - 2.0 * t2 + t) * h * slope(lo)
        + (-2.0 * t3 + 3.0 * t2) * ys[hi]
        + (t3 - t2) * h * slope(hi)
}
