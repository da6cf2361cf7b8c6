//! Dirichlet grids on intervals and rectangles, and the principal eigenpair
//! of the five-point (three-point in 1D) discrete Laplacian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::Tridiag;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Interval { a: f64, b: f64 },
    Rectangle { a: f64, b: f64, c: f64, d: f64 },
}

/// One grid axis: `n` interior nodes on `(lo, hi)` with spacing `h = (hi − lo)/(n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub h: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid(format!("degenerate bounds ({lo}, {hi})")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 interior nodes per axis, got {n}")));
        }
        Ok(Axis { lo, hi, n, h: (hi - lo) / (n as f64 + 1.0) })
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + self.h * (i as f64 + 1.0)
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Interior nodes of a Dirichlet domain. Fields are stored with the first
/// axis fastest: node `(i, j)` lives at `i + nx·j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub shape: Shape,
    pub axes: Vec<Axis>,
}

impl DomainGrid {
    /// Uniform grid with `resolution` interior nodes on every axis.
    pub fn build(shape: Shape, resolution: usize) -> Result<Self> {
        Self::build_with(shape, &[resolution, resolution])
    }

    /// Per-axis resolutions; extra entries are ignored for intervals.
    pub fn build_with(shape: Shape, resolution: &[usize]) -> Result<Self> {
        let axes = match shape {
            Shape::Interval { a, b } => vec![Axis::new(a, b, resolution[0])?],
            Shape::Rectangle { a, b, c, d } => {
                let ny = *resolution.get(1).unwrap_or(&resolution[0]);
                vec![Axis::new(a, b, resolution[0])?, Axis::new(c, d, ny)?]
            }
        };
        Ok(DomainGrid { shape, axes })
    }

    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::build(Shape::Interval { a, b }, n)
    }

    pub fn rectangle(a: f64, b: f64, c: f64, d: f64, n: usize) -> Result<Self> {
        Self::build(Shape::Rectangle { a, b, c, d }, n)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.h).collect()
    }

    /// Volume element of one node.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.h).product()
    }

    /// Coordinates of node `k`.
    pub fn coords(&self, k: usize) -> Vec<f64> {
        let mut rest = k;
        self.axes
            .iter()
            .map(|a| {
                let i = rest % a.n;
                rest /= a.n;
                a.node(i)
            })
            .collect()
    }

    /// Samples `g(coords)` on every interior node.
    pub fn sample(&self, g: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| g(&self.coords(k))).collect()
    }

    /// Node closest to the point `x`.
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut k = 0;
        let mut stride = 1;
        for (a, &xi) in self.axes.iter().zip(x) {
            let i = ((xi - a.lo) / a.h - 1.0).round().clamp(0.0, (a.n - 1) as f64) as usize;
            k += i * stride;
            stride *= a.n;
        }
        k
    }

    /// `out = Δ_h u` with zero boundary values.
    pub fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut stride = 1;
        for a in &self.axes {
            let inv_h2 = 1.0 / (a.h * a.h);
            for (k, o) in out.iter_mut().enumerate() {
                let i = (k / stride) % a.n;
                let left = if i > 0 { u[k - stride] } else { 0.0 };
                let right = if i + 1 < a.n { u[k + stride] } else { 0.0 };
                *o += (left - 2.0 * u[k] + right) * inv_h2;
            }
            stride *= a.n;
        }
    }

    /// Discrete integral `Σ u·h^d`.
    pub fn integral(&self, u: &[f64]) -> f64 {
        u.iter().sum::<f64>() * self.cell_volume()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda0: f64,
    /// Principal eigenvalue of each axis; `lambda0` is their sum.
    pub axis_lambdas: Vec<f64>,
    /// Eigenfunction with maximum exactly 1.
    pub phi0_sup: Vec<f64>,
    /// Eigenfunction with discrete integral exactly 1.
    pub phi0_mass: Vec<f64>,
    /// `‖Δ_h φ + λ0 φ‖_∞ / λ0` for `φ = phi0_sup`.
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    pub tol: f64,
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { tol: 1e-12, residual_tol: 1e-11, max_iter: 500 }
    }
}

/// Inverse power iteration (shift 0) for `−Δ_h` on one axis.
fn axis_eigenpair(a: &Axis, cfg: &EigenConfig) -> Result<(f64, Vec<f64>, usize)> {
    let n = a.n;
    let inv_h2 = 1.0 / (a.h * a.h);
    let solver = Tridiag::new(n, -inv_h2, 2.0 * inv_h2, -inv_h2);
    let apply = |v: &[f64], i: usize| {
        let left = if i > 0 { v[i - 1] } else { 0.0 };
        let right = if i + 1 < n { v[i + 1] } else { 0.0 };
        (2.0 * v[i] - left - right) * inv_h2
    };
    let mut v = vec![1.0; n];
    let mut lambda = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        solver.solve(&mut v);
        let norm = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        v.iter_mut().for_each(|x| *x /= norm);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            num += v[i] * apply(&v, i);
            den += v[i] * v[i];
        }
        let next = num / den;
        residual = (0..n).map(|i| (apply(&v, i) - next * v[i]).abs()).fold(0.0, f64::max) / next;
        let converged = (next - lambda).abs() <= cfg.tol * next && residual <= cfg.residual_tol;
        lambda = next;
        if converged {
            return Ok((lambda, v, it));
        }
    }
    Err(Error::Stagnation { iterations: cfg.max_iter, residual })
}

/// Principal Dirichlet eigenpair. On rectangles the eigenvector is the tensor
/// product of the axis eigenvectors and `λ0 = λx + λy`; the residual is
/// measured against the full two-dimensional operator.
pub fn principal_eigenpair(grid: &DomainGrid) -> Result<EigenPair> {
    principal_eigenpair_with(grid, &EigenConfig::default())
}

pub fn principal_eigenpair_with(grid: &DomainGrid, cfg: &EigenConfig) -> Result<EigenPair> {
    let mut axis_lambdas = Vec::new();
    let mut phi = vec![1.0];
    let mut iterations = 0;
    for a in &grid.axes {
        let (l, v, it) = axis_eigenpair(a, cfg)?;
        axis_lambdas.push(l);
        iterations += it;
        phi = v.iter().flat_map(|vy| phi.iter().map(move |px| px * vy)).collect();
    }
    let lambda0: f64 = axis_lambdas.iter().sum();
    let max = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let phi0_sup: Vec<f64> = phi.iter().map(|x| x / max).collect();
    let mass = grid.integral(&phi0_sup);
    let phi0_mass: Vec<f64> = phi0_sup.iter().map(|x| x / mass).collect();
    let mut lap = vec![0.0; grid.len()];
    grid.laplacian(&phi0_sup, &mut lap);
    let residual_norm = lap.iter().zip(&phi0_sup).map(|(l, p)| (l + lambda0 * p).abs()).fold(0.0, f64::max) / lambda0;
    if residual_norm > 1e-8 {
        return Err(Error::Stagnation { iterations, residual: residual_norm });
    }
    Ok(EigenPair { lambda0, axis_lambdas, phi0_sup, phi0_mass, residual_norm, iterations })
}
