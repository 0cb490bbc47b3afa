//! Small dense-vector helpers shared by retrieval and training.

use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Scales `a` to unit length in place and returns the original norm.
/// A zero vector is left untouched.
pub fn normalize_in_place(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    n
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let mut out = a.to_vec();
    normalize_in_place(&mut out);
    out
}

/// Numerically stable softmax of `xs`, written into `out`.
pub fn softmax_into(xs: &[f64], out: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = libm::exp(x - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// `log(sum(exp(xs)))` without overflow.
pub fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + libm::log(xs.map(|x| libm::exp(x - max)).sum::<f64>())
}

/// Backpropagates through `y = z / |z|`: given `y`, `|z|` and `dL/dy`,
/// returns `dL/dz`.
pub fn normalize_backward(y: &[f64], z_norm: f64, dy: &[f64]) -> Vec<f64> {
    if z_norm == 0.0 {
        return alloc::vec![0.0; y.len()];
    }
    let proj = dot(y, dy);
    y.iter()
        .zip(dy)
        .map(|(yi, dyi)| (dyi - yi * proj) / z_norm)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_sums_to_one_with_large_inputs() {
        let xs = [1000.0, 1001.0, 999.0];
        let mut out = [0.0; 3];
        softmax_into(&xs, &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(out[1] > out[0] && out[0] > out[2]);
    }

    #[test]
    fn log_sum_exp_matches_naive() {
        let xs = [0.1, -2.0, 3.5];
        let naive = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(xs.iter().copied()) - naive).abs() < 1e-12);
    }

    #[test]
    fn normalize_backward_matches_finite_difference() {
        let z = [0.3, -1.2, 0.7];
        let upstream = [0.5, 0.1, -0.4];
        let f = |z: &[f64]| dot(&normalized(z), &upstream);
        let n = norm(&z);
        let y = normalized(&z);
        let g = normalize_backward(&y, n, &upstream);
        for k in 0..3 {
            let mut p = z;
            let mut m = z;
            p[k] += 1e-6;
            m[k] -= 1e-6;
            let fd = (f(&p) - f(&m)) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }
}
