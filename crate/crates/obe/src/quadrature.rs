//! Gauss-Legendre quadrature on a finite interval.

use crate::error::{Error, Result};

/// Nodes and weights for integration over `(a, b)`.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Gauss-Legendre rule with `n` nodes on `(a, b)`, exact for
    /// polynomials up to degree `2n - 1`.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("quadrature needs n >= 1".into()));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!(
                "invalid quadrature interval ({a}, {b})"
            )));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = (b - a) / 2.0;
        let mid = (a + b) / 2.0;
        // Roots of P_n by Newton iteration, exploiting symmetry.
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = mid - half * x;
            nodes[n - 1 - i] = mid + half * x;
            weights[i] = half * w;
            weights[n - 1 - i] = half * w;
        }
        Ok(Self { nodes, weights })
    }

    /// Integrate `f` over the rule's interval.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        let q = Quadrature::gauss_legendre(4, -1.0, 1.0).unwrap();
        // Degree 7 is within the exactness guarantee of a 4-node rule.
        let val = q.integrate(|x| 3.0 * x.powi(6) - x.powi(3) + 2.0 * x + 1.0);
        assert_relative_eq!(val, 3.0 * 2.0 / 7.0 + 2.0, max_relative = 1e-13);
    }

    #[test]
    fn integrates_cosine_on_shifted_interval() {
        let q = Quadrature::gauss_legendre(32, 0.0, std::f64::consts::PI / 2.0).unwrap();
        assert_relative_eq!(q.integrate(f64::cos), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn weights_are_positive_and_sum_to_length() {
        let q = Quadrature::gauss_legendre(257, -2.0, 3.0).unwrap();
        assert!(q.weights.iter().all(|&w| w > 0.0));
        let total: f64 = q.weights.iter().sum();
        assert_relative_eq!(total, 5.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(Quadrature::gauss_legendre(0, -1.0, 1.0).is_err());
        assert!(Quadrature::gauss_legendre(8, 1.0, -1.0).is_err());
    }
}
