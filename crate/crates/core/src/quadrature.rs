//! Fixed-order quadrature grids.

use num_complex::Complex64;

use crate::error::{contract, Result};

/// Quadrature nodes with their weights.
///
/// Points are strictly increasing and weights strictly positive; the
/// interval covered is `[lower, upper]`, which for Gauss rules lies
/// strictly outside the first and last node.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    points: Vec<f64>,
    weights: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl Grid1D {
    /// Builds a grid from explicit nodes and weights.
    pub fn from_parts(points: Vec<f64>, weights: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(contract("grid needs equally many, and at least one, points and weights"));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(contract("grid points must be strictly increasing"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(contract("grid weights must be finite and positive"));
        }
        if !(lower <= points[0] && upper >= points[points.len() - 1]) {
            return Err(contract("grid interval must contain every point"));
        }
        Ok(Self {
            points,
            weights,
            lower,
            upper,
        })
    }

    /// n-point Gauss–Legendre rule on `[a, b]`.
    pub fn gauss_legendre(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::composite_gauss_legendre(a, b, 1, n)
    }

    /// `panels` equal panels on `[a, b]`, each carrying an n-point Gauss–Legendre rule.
    pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, n: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(contract(format!("invalid interval [{a}, {b}]")));
        }
        if panels == 0 || n == 0 {
            return Err(contract("need at least one panel and one node"));
        }
        let (nodes, weights) = legendre_nodes(n);
        let width = (b - a) / panels as f64;
        let mut pts = Vec::with_capacity(panels * n);
        let mut wts = Vec::with_capacity(panels * n);
        for p in 0..panels {
            let lo = a + width * p as f64;
            let half = 0.5 * width;
            let mid = lo + half;
            for (x, w) in nodes.iter().zip(&weights) {
                pts.push(mid + half * x);
                wts.push(half * w);
            }
        }
        Self::from_parts(pts, wts, a, b)
    }

    /// Gauss–Legendre panels whose breakpoints include every value in `breaks`.
    ///
    /// `breaks` must be increasing; panels wider than `max_width` are split evenly.
    pub fn piecewise_gauss_legendre(breaks: &[f64], max_width: f64, n: usize) -> Result<Self> {
        if breaks.len() < 2 || !(max_width > 0.0) {
            return Err(contract("need two or more breakpoints and a positive panel width"));
        }
        let (nodes, weights) = legendre_nodes(n);
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi < lo {
                return Err(contract("breakpoints must be increasing"));
            }
            if hi == lo {
                continue;
            }
            let panels = ((hi - lo) / max_width).ceil().max(1.0) as usize;
            let width = (hi - lo) / panels as f64;
            for p in 0..panels {
                let half = 0.5 * width;
                let mid = lo + width * p as f64 + half;
                for (x, wt) in nodes.iter().zip(&weights) {
                    pts.push(mid + half * x);
                    wts.push(half * wt);
                }
            }
        }
        Self::from_parts(pts, wts, breaks[0], breaks[breaks.len() - 1])
    }

    /// Uniform trapezoid rule with `n` points including both end points.
    pub fn trapezoid(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || n < 2 {
            return Err(contract("trapezoid rule needs b > a and n ≥ 2"));
        }
        let h = (b - a) / (n - 1) as f64;
        let pts: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
        let mut wts = vec![h; n];
        wts[0] = 0.5 * h;
        wts[n - 1] = 0.5 * h;
        Self::from_parts(pts, wts, a, b)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Uniform spacing, if the grid came from [`Grid1D::trapezoid`].
    pub fn uniform_step(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let h = self.points[1] - self.points[0];
        let uniform = self
            .points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
        uniform.then_some(h)
    }

    /// Σ wᵢ fᵢ for real samples.
    pub fn integrate_real(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.len() {
            return Err(contract(format!(
                "sample count {} does not match grid length {}",
                f.len(),
                self.len()
            )));
        }
        Ok(self.weights.iter().zip(f).map(|(w, v)| w * v).sum())
    }

    /// Applies the rule to `f` evaluated at each node.
    pub fn integrate_fn(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Σ wᵢ fᵢ for complex samples on `grid`.
pub fn integrate(f: &[Complex64], grid: &Grid1D) -> Result<Complex64> {
    if f.len() != grid.len() {
        return Err(contract(format!(
            "sample count {} does not match grid length {}",
            f.len(),
            grid.len()
        )));
    }
    Ok(grid.weights.iter().zip(f).map(|(w, v)| v * *w).sum())
}

/// Gauss–Legendre nodes and weights on [−1, 1], ascending.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_integrand_gives_zero() {
        let g = Grid1D::gauss_legendre(-3.0, 7.0, 17).unwrap();
        let f = vec![Complex64::new(0.0, 0.0); g.len()];
        assert_eq!(integrate(&f, &g).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn constant_reproduces_length() {
        for g in [
            Grid1D::gauss_legendre(0.0, 2.0, 9).unwrap(),
            Grid1D::composite_gauss_legendre(0.0, 2.0, 7, 5).unwrap(),
            Grid1D::trapezoid(0.0, 2.0, 33).unwrap(),
            Grid1D::piecewise_gauss_legendre(&[0.0, 0.3, 0.3, 2.0], 0.25, 6).unwrap(),
        ] {
            let f = vec![Complex64::new(1.0, 0.0); g.len()];
            let v = integrate(&f, &g).unwrap();
            assert!((v.re - 2.0).abs() < 1e-12 * 2.0, "{v}");
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn x_squared_on_unit_interval() {
        let g = Grid1D::gauss_legendre(0.0, 1.0, 64).unwrap();
        let f: Vec<Complex64> = g.points().iter().map(|x| Complex64::new(x * x, 0.0)).collect();
        let v = integrate(&f, &g).unwrap();
        assert!((v.re - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = Grid1D::gauss_legendre(0.0, 1.0, 4).unwrap();
        assert!(integrate(&[Complex64::new(1.0, 0.0)], &g).is_err());
        assert!(g.integrate_real(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn nodes_sorted_and_weights_positive() {
        for n in [1, 2, 3, 10, 64, 513] {
            let g = Grid1D::gauss_legendre(-1.0, 1.0, n).unwrap();
            assert!(g.points().windows(2).all(|w| w[1] > w[0]));
            assert!(g.weights().iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(Grid1D::gauss_legendre(1.0, 1.0, 4).is_err());
        assert!(Grid1D::trapezoid(0.0, 1.0, 1).is_err());
        assert!(Grid1D::from_parts(vec![0.0, 0.0], vec![1.0, 1.0], 0.0, 1.0).is_err());
        assert!(Grid1D::from_parts(vec![0.0, 1.0], vec![1.0, -1.0], 0.0, 1.0).is_err());
    }

    proptest! {
        // n nodes integrate degree ≤ 2n−1 exactly.
        #[test]
        fn gauss_legendre_polynomial_exactness(
            n in 1usize..40,
            seed in proptest::collection::vec(-1.0f64..1.0, 80),
            a in -2.0f64..0.0,
            len in 0.1f64..3.0,
        ) {
            let b = a + len;
            let degree = 2 * n - 1;
            let coeffs = &seed[..=degree.min(seed.len() - 1)];
            let g = Grid1D::gauss_legendre(a, b, n).unwrap();
            let numeric = g.integrate_fn(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c));
            let antiderivative = |x: f64| {
                coeffs.iter().enumerate().map(|(j, c)| c * x.powi(j as i32 + 1) / (j as f64 + 1.0)).sum::<f64>()
            };
            let exact = antiderivative(b) - antiderivative(a);
            let scale = coeffs.iter().enumerate()
                .map(|(j, c)| c.abs() * a.abs().max(b.abs()).powi(j as i32 + 1) / (j as f64 + 1.0))
                .sum::<f64>()
                .max(1e-300);
            prop_assert!((numeric - exact).abs() <= 1e-12 * scale.max(exact.abs()));
        }
    }
}
