//! Uniform-grid helpers: node generation, quadrature rules and derivative
//! stencils shared by the spectral and finite-difference code.

/// `n` equally spaced nodes on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| a + i as f64 * h).collect()
        }
    }
}

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// Composite Simpson rule. An odd number of intervals is closed with the
/// 3/8 rule on the last three intervals.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 3 {
        return trapezoid(values, h);
    }
    let intervals = n - 1;
    if intervals % 2 == 0 {
        simpson_even(values, h)
    } else if intervals == 3 {
        three_eighths(values, h)
    } else {
        simpson_even(&values[..n - 3], h) + three_eighths(&values[n - 4..], h)
    }
}

fn simpson_even(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1]
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    h / 3.0 * (values[0] + inner + values[n - 1])
}

fn three_eighths(v: &[f64], h: f64) -> f64 {
    3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3])
}

/// Quadrature weights for `intervals` uniform intervals of width `h`.
///
/// Trapezoid with Gregory end corrections once there are at least six
/// intervals (fourth order); Simpson-type rules on shorter spans.
pub fn gregory_weights(intervals: usize, h: f64) -> Vec<f64> {
    let m = intervals;
    let mut w = match m {
        0 => vec![0.0],
        1 => vec![0.5, 0.5],
        2 => vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        3 => vec![3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
        4 => vec![1.0 / 3.0, 4.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        5 => vec![
            1.0 / 3.0,
            4.0 / 3.0,
            1.0 / 3.0 + 3.0 / 8.0,
            9.0 / 8.0,
            9.0 / 8.0,
            3.0 / 8.0,
        ],
        _ => {
            let mut w = vec![1.0; m + 1];
            let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            for (k, e) in ends.iter().enumerate() {
                w[k] = *e;
                w[m - k] = *e;
            }
            w
        }
    };
    w.iter_mut().for_each(|x| *x *= h);
    w
}

/// Derivative on a uniform grid: central differences inside, second-order
/// one-sided differences at the two ends.
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "derivative needs at least three samples");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d
}

/// Spatial L² norm by the trapezoid rule.
pub fn l2_norm(values: &[f64], h: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    trapezoid(&sq, h).sqrt()
}

/// Max-norm of a difference of two equally long slices.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(n: usize) -> (Vec<f64>, f64) {
        let x = linspace(0.0, 1.0, n);
        let h = x[1] - x[0];
        (x.iter().map(|x| x * x * x).collect(), h)
    }

    #[test]
    fn simpson_is_exact_on_cubics_for_both_parities() {
        for n in [5, 6, 7, 8, 9, 10] {
            let (v, h) = cube(n);
            assert!((simpson(&v, h) - 0.25).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn gregory_weights_integrate_cubics_exactly() {
        for m in 1..20 {
            let (v, h) = cube(m + 1);
            let w = gregory_weights(m, h);
            let s: f64 = w.iter().zip(&v).map(|(w, v)| w * v).sum();
            let tol = if m == 1 { 0.25 } else { 1e-13 };
            assert!((s - 0.25).abs() <= tol, "m = {m}: {s}");
        }
    }

    #[test]
    fn derivative_is_exact_on_quadratics() {
        let x = linspace(0.0, 1.0, 11);
        let v: Vec<f64> = x.iter().map(|x| x * x).collect();
        let d = derivative(&v, 0.1);
        for (xi, di) in x.iter().zip(&d) {
            assert!((di - 2.0 * xi).abs() < 1e-12);
        }
    }
}
