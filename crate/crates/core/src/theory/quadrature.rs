//! Quadrature rules.

use crate::num::Real;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre<T: Real>(order: usize) -> (Vec<T>, Vec<T>) {
    assert!(order >= 1, "quadrature order must be positive");
    let n = order;
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Simpson weights for `points` equally spaced samples with
/// spacing `h`. `points` must be odd.
pub fn simpson_weights<T: Real>(points: usize, h: T) -> Vec<T> {
    assert!(points >= 3 && points % 2 == 1, "Simpson needs an odd number of points >= 3");
    let third = h / T::lit(3.0);
    (0..points)
        .map(|i| {
            if i == 0 || i == points - 1 {
                third
            } else if i % 2 == 1 {
                third * T::lit(4.0)
            } else {
                third * T::lit(2.0)
            }
        })
        .collect()
}

/// Tensor-product Gauss-Legendre integral of `f` over the cube
/// `lo + [0, side]^dim`.
pub fn cube_gauss<T: Real, F: FnMut(&[T]) -> T>(
    f: &mut F,
    dim: usize,
    lo: &[T],
    side: T,
    rule: &(Vec<T>, Vec<T>),
) -> T {
    let (nodes, weights) = rule;
    let g = nodes.len();
    let half = side / T::lit(2.0);
    let mut idx = vec![0usize; dim];
    let mut point = vec![T::zero(); dim];
    let mut total = T::zero();
    loop {
        let mut w = T::one();
        for a in 0..dim {
            point[a] = lo[a] + half * (nodes[idx[a]] + T::one());
            w *= weights[idx[a]];
        }
        total += w * f(&point);
        // odometer
        let mut a = 0;
        loop {
            if a == dim {
                return total * half.powi(dim as i32);
            }
            idx[a] += 1;
            if idx[a] < g {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for order in 1..12 {
            let (x, w) = gauss_legendre::<f64>(order);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            for deg in 0..(2 * order) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert_abs_diff_eq!(approx, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let n = 11;
        let h = 0.3;
        let w = simpson_weights::<f64>(n, h);
        let integral: f64 = (0..n).map(|i| w[i] * (i as f64 * h).powi(3)).sum();
        assert_abs_diff_eq!(integral, (3.0f64).powi(4) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn cube_rule_volume() {
        let rule = gauss_legendre::<f64>(3);
        let v = cube_gauss(&mut |x: &[f64]| x[0] * x[1] * x[2], 3, &[0.0, 0.0, 0.0], 2.0, &rule);
        assert_abs_diff_eq!(v, 8.0, epsilon = 1e-12);
    }
}
