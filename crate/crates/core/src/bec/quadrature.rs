//! Gauss-Legendre rules with endpoint clustering.

use std::f64::consts::PI;

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, q) = legendre(n, x);
                let dx = p / (n as f64 * (x * p - q) / (x * x - 1.0));
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (p, q) = legendre(n, x);
            let dp = n as f64 * (x * p - q) / (x * x - 1.0);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Plain rule on `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule on `[a, b]` after the substitution
    /// `x = a + (b - a)(1 - cos(pi t)) / 2`, which flattens square-root
    /// behaviour at both ends.
    pub fn clustered(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let width = b - a;
        let step = 1.0 / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let t0 = p as f64 * step;
            acc += self.integrate(t0, t0 + step, |t| {
                let x = a + width * (1.0 - (PI * t).cos()) / 2.0;
                f(x) * width * PI * (PI * t).sin() / 2.0
            });
        }
        acc
    }
}

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
    (p1, p0)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Absolute change between the last two refinements.
    pub error: f64,
}

impl Estimate {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }
}

/// Integrates over the pieces between consecutive `breaks`, doubling panels
/// on every piece until the relative change drops below `tol` or
/// `max_panels` is reached.
pub fn piecewise(
    rule: &GaussLegendre,
    breaks: &[f64],
    tol: f64,
    max_panels: usize,
    mut f: impl FnMut(f64) -> f64,
) -> Estimate {
    let eval = |panels: usize, f: &mut dyn FnMut(f64) -> f64| -> f64 {
        breaks
            .windows(2)
            .map(|w| rule.clustered(w[0], w[1], panels, &mut *f))
            .sum()
    };
    let mut panels = 1;
    let mut prev = eval(panels, &mut f);
    loop {
        panels *= 2;
        let next = eval(panels, &mut f);
        let error = (next - prev).abs();
        if error <= tol * next.abs() || panels >= max_panels {
            return Estimate { value: next, error };
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_polynomials_are_exact() {
        for n in [1, 2, 5, 16, 20] {
            let g = GaussLegendre::new(n);
            assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for k in 0..2 * n {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = g.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn clustering_handles_square_root_endpoints() {
        let g = GaussLegendre::new(16);
        let got = g.clustered(0.0, 1.0, 4, |x| x.sqrt() + (1.0 - x).sqrt());
        assert!((got - 4.0 / 3.0).abs() < 1e-10);
        let e = piecewise(&g, &[0.0, 0.3, 1.0], 1e-12, 64, |x| (x - 0.3).abs().sqrt());
        let exact = 2.0 / 3.0 * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        assert!((e.value - exact).abs() < 1e-12);
    }
}
