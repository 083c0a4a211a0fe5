//! Gauss-Legendre quadrature nodes and small quadrature helpers.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; accurate to ~1e-15 for the
/// orders used here (n <= 512).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&t| mid + c * t).collect(),
        w.iter().map(|&wi| wi * c).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // 8-point rule is exact through degree 15.
        let (x, w) = gauss_legendre(8);
        let int_x14: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(14)).sum();
        assert!((int_x14 - 2.0 / 15.0).abs() < 1e-14);
        let int_x2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        assert!((int_x2 - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_integral_on_interval() {
        let (x, w) = gauss_legendre_on(64, 0.0, 10.0);
        let v: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * (-xi * xi / 2.0).exp())
            .sum();
        let exact = (std::f64::consts::PI / 2.0).sqrt();
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn known_5_point_nodes() {
        let (x, _) = gauss_legendre(5);
        assert!((x[2]).abs() < 1e-15);
        assert!((x[4] - 0.906_179_845_938_664).abs() < 1e-12);
        assert!((x[3] - 0.538_469_310_105_683).abs() < 1e-12);
    }
}
