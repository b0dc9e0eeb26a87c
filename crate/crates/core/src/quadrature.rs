//! Gauss-Legendre rules and a globally adaptive product rule on rectangles.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Controls for the adaptive double integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Target relative error of the integral.
    pub tolerance: f64,
    /// Maximum number of cell bisections before giving up.
    pub max_subdivisions: usize,
    /// Points per axis of the coarse rule; the error estimate uses twice as many.
    pub base_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_subdivisions: 20_000,
            base_order: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "quadrature tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(2..=64).contains(&self.base_order) {
            return Err(Error::InvalidConfig(format!(
                "quadrature base order must be in 2..=64, got {}",
                self.base_order
            )));
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Roots of P_n by Newton iteration from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
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
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_bound: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    x: (f64, f64),
    y: (f64, f64),
    value: f64,
    error: f64,
    magnitude: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.x.0.total_cmp(&self.x.0))
            .then_with(|| other.y.0.total_cmp(&self.y.0))
    }
}

/// Globally adaptive tensor-product Gauss-Legendre integration of `f` over
/// `[x0, x1] x [y0, y1]`, starting from a `grid x grid` partition.
///
/// Each cell is integrated with the `base_order` and `2 * base_order` rules;
/// their difference is the cell's error estimate and the finer value is kept.
/// The worst cell is split into four until the summed estimate drops below
/// `tolerance * |I|`, or below a round-off floor relative to `∫|f|` so that
/// integrals cancelling to zero still terminate.
pub fn adaptive_2d(
    f: impl Fn(f64, f64) -> f64,
    x: (f64, f64),
    y: (f64, f64),
    grid: usize,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    spec.validate()?;
    let coarse = GaussLegendre::new(spec.base_order);
    let fine = GaussLegendre::new(2 * spec.base_order);
    let eval = |x: (f64, f64), y: (f64, f64)| -> Cell {
        let product = |rule: &GaussLegendre| {
            let mut sum = 0.0;
            let mut abs = 0.0;
            for (xi, wx) in rule.mapped(x.0, x.1) {
                let mut row = 0.0;
                let mut row_abs = 0.0;
                for (yj, wy) in rule.mapped(y.0, y.1) {
                    let v = f(xi, yj);
                    row += wy * v;
                    row_abs += wy * v.abs();
                }
                sum += wx * row;
                abs += wx * row_abs;
            }
            (sum, abs)
        };
        let (low, _) = product(&coarse);
        let (high, magnitude) = product(&fine);
        Cell {
            x,
            y,
            value: high,
            error: (high - low).abs(),
            magnitude,
        }
    };

    let grid = grid.max(1);
    let split = |(a, b): (f64, f64), k: usize, n: usize| {
        (
            a + (b - a) * k as f64 / n as f64,
            a + (b - a) * (k + 1) as f64 / n as f64,
        )
    };
    let mut heap = BinaryHeap::with_capacity(4 * grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            heap.push(eval(split(x, i, grid), split(y, j, grid)));
        }
    }

    let mut subdivisions = 0;
    let (mut value, mut error, mut magnitude) = totals(heap.iter());
    loop {
        let floor = 64.0 * f64::EPSILON * magnitude;
        if error <= (spec.tolerance * value.abs()).max(floor) {
            // Running sums drift; confirm against a fresh canonical sum.
            (value, error, magnitude) = totals(heap.iter());
            let floor = 64.0 * f64::EPSILON * magnitude;
            if error <= (spec.tolerance * value.abs()).max(floor) {
                return Ok(Integral {
                    value,
                    error_bound: error,
                    subdivisions,
                });
            }
        }
        if subdivisions >= spec.max_subdivisions {
            let (value, error, _) = totals(heap.iter());
            return Err(Error::Convergence {
                estimate: value,
                error_bound: error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("non-empty cell set");
        value -= worst.value;
        error -= worst.error;
        magnitude -= worst.magnitude;
        let xm = 0.5 * (worst.x.0 + worst.x.1);
        let ym = 0.5 * (worst.y.0 + worst.y.1);
        for xs in [(worst.x.0, xm), (xm, worst.x.1)] {
            for ys in [(worst.y.0, ym), (ym, worst.y.1)] {
                let child = eval(xs, ys);
                value += child.value;
                error += child.error;
                magnitude += child.magnitude;
                heap.push(child);
            }
        }
        error = error.max(0.0);
        subdivisions += 1;
    }
}

/// Sums cell contributions in a canonical (position-sorted) order so that the
/// result does not depend on heap layout.
fn totals<'a>(cells: impl Iterator<Item = &'a Cell>) -> (f64, f64, f64) {
    let mut sorted: Vec<&Cell> = cells.collect();
    sorted.sort_by(|a, b| a.x.0.total_cmp(&b.x.0).then(a.y.0.total_cmp(&b.y.0)));
    sorted.iter().fold((0.0, 0.0, 0.0), |(v, e, m), c| {
        (v + c.value, e + c.error, m + c.magnitude)
    })
}
