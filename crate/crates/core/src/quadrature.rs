//! Gauss-Legendre rules on the unit interval and collapsed (Duffy) rules on
//! the reference triangle `(0,0), (1,0), (0,1)`.

use std::f64::consts::PI;

/// Quadrature rule: points and weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
}

impl<P: Copy> Rule<P> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (P, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Rule<f64> {
    assert!(n > 0, "Gauss rule needs at least one point");
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Rule { points, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

/// Rule on `[0, 1]` exact for polynomials of degree `order`.
pub fn segment_rule(order: usize) -> Rule<f64> {
    gauss_legendre(order / 2 + 1)
}

/// Rule on the reference triangle exact for polynomials of total degree
/// `order`. Weights sum to the triangle area ½.
pub fn triangle_rule(order: usize) -> Rule<[f64; 2]> {
    // x = u, y = v (1 - u); the Jacobian (1 - u) raises the degree in u by one.
    let gu = gauss_legendre((order + 2).div_ceil(2));
    let gv = gauss_legendre(order / 2 + 1);
    let mut points = Vec::with_capacity(gu.len() * gv.len());
    let mut weights = Vec::with_capacity(gu.len() * gv.len());
    for (u, wu) in gu.iter() {
        for (v, wv) in gv.iter() {
            points.push([u, v * (1.0 - u)]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    Rule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn gauss_weights_sum_to_one_and_points_are_sorted() {
        for n in 1..12 {
            let r = gauss_legendre(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n = {n}");
            assert!(r.points.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn segment_rules_integrate_monomials_exactly() {
        for order in 0..20 {
            let r = segment_rule(order);
            for a in 0..=order {
                let q: f64 = r.iter().map(|(x, w)| w * x.powi(a as i32)).sum();
                assert!((q - 1.0 / (a as f64 + 1.0)).abs() < 1e-14, "order {order}, x^{a}");
            }
        }
    }

    #[test]
    fn triangle_rules_integrate_monomials_exactly() {
        // ∫_T x^a y^b = a! b! / (a + b + 2)!
        for order in 0..12 {
            let r = triangle_rule(order);
            for a in 0..=order {
                for b in 0..=(order - a) {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let q: f64 = r
                        .iter()
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    assert!((q - exact).abs() < 1e-15, "order {order}, x^{a} y^{b}");
                }
            }
        }
    }
}
