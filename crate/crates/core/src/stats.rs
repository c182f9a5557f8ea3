//! Small statistics helpers shared by the estimators and experiment summaries.
//!
//! All reductions run sequentially in index order so results do not depend on
//! how the inputs were produced.

/// Sample mean and standard error of the mean (`sd / sqrt(n)`, with `n − 1` in the variance).
/// A single sample has standard error zero.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Population-style sample variance with `n − 1` denominator.
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Ordinary least squares fit `y ≈ a + b t`; returns `(a, b)`.
pub fn linear_fit(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = t.len().min(y.len());
    if n < 2 {
        return None;
    }
    let tm = t[..n].iter().sum::<f64>() / n as f64;
    let ym = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += (t[i] - tm) * (t[i] - tm);
        sxy += (t[i] - tm) * (y[i] - ym);
    }
    if sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    Some((ym - b * tm, b))
}

/// First time at which `|values|` falls to half of `|values[0]|`, linearly
/// interpolated between grid points. `None` if it never does.
pub fn time_to_half(times: &[f64], values: &[f64]) -> Option<f64> {
    let target = 0.5 * values.first()?.abs();
    let mut prev = (times[0], values[0].abs());
    for (&t, &v) in times.iter().zip(values).skip(1) {
        let a = v.abs();
        if !a.is_finite() {
            return None;
        }
        if a <= target {
            let (t0, a0) = prev;
            if a0 == a {
                return Some(t);
            }
            return Some(t0 + (t - t0) * (a0 - target) / (a0 - a));
        }
        prev = (t, a);
    }
    None
}

/// Root mean square of `a − b` over matching entries.
pub fn rms_difference(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n as f64).sqrt()
}
