//! θ-scheme steps for `v_t = Σ_axes (∂²_axis + s_axis) v` on a Dirichlet grid,
//! applied one axis at a time (exact splitting, since the axis operators commute).

use crate::exec::Exec;
use crate::spectral::DomainGrid;
use crate::tridiag::{transpose, Tridiag};

#[derive(Debug, Clone)]
struct AxisStep {
    n: usize,
    implicit: Tridiag,
    /// Explicit part `(I + (1−θ) dt L)`: off-diagonal and diagonal weights.
    off: f64,
    diag: f64,
    explicit: bool,
}

impl AxisStep {
    fn new(n: usize, h: f64, shift: f64, dt: f64, theta: f64) -> Self {
        let r = dt / (h * h);
        let implicit = Tridiag::new(n, -theta * r, 1.0 + 2.0 * theta * r - theta * dt * shift, -theta * r);
        let e = 1.0 - theta;
        AxisStep { n, implicit, off: e * r, diag: 1.0 - 2.0 * e * r + e * dt * shift, explicit: e != 0.0 }
    }

    fn line(&self, row: &mut [f64], tmp: &mut Vec<f64>) {
        if self.explicit {
            tmp.clear();
            tmp.extend_from_slice(row);
            let n = self.n;
            for i in 0..n {
                let left = if i > 0 { tmp[i - 1] } else { 0.0 };
                let right = if i + 1 < n { tmp[i + 1] } else { 0.0 };
                row[i] = self.diag * tmp[i] + self.off * (left + right);
            }
        }
        self.implicit.solve(row);
    }
}

/// One θ-step of size `dt`; `θ = 1` is backward Euler, `θ = ½` Crank–Nicolson.
#[derive(Debug, Clone)]
pub struct DiffusionStep {
    dims: Vec<usize>,
    axes: Vec<AxisStep>,
    pub dt: f64,
    pub theta: f64,
    exec: Exec,
}

impl DiffusionStep {
    /// `shifts[k]` is added to the second difference on axis `k` (zero for the plain heat flow).
    pub fn new(grid: &DomainGrid, dt: f64, theta: f64, shifts: &[f64], exec: Exec) -> Self {
        let axes = grid
            .axes
            .iter()
            .enumerate()
            .map(|(k, a)| AxisStep::new(a.n, a.h, shifts.get(k).copied().unwrap_or(0.0), dt, theta))
            .collect();
        DiffusionStep { dims: grid.axes.iter().map(|a| a.n).collect(), axes, dt, theta, exec }
    }

    pub fn apply(&self, u: &mut [f64]) {
        let nx = self.dims[0];
        let ax = &self.axes[0];
        self.exec.for_each_chunk_mut(u, nx, |row| ax.line(row, &mut Vec::with_capacity(nx)));
        if self.dims.len() == 2 {
            let ny = self.dims[1];
            let ay = &self.axes[1];
            let mut t = vec![0.0; u.len()];
            transpose(u, ny, nx, &mut t);
            self.exec.for_each_chunk_mut(&mut t, ny, |col| ay.line(col, &mut Vec::with_capacity(ny)));
            transpose(&t, nx, ny, u);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::principal_eigenpair;

    #[test]
    fn eigenvector_decays_by_the_scalar_factor() {
        let g = DomainGrid::rectangle(0.0, 1.0, 0.0, 2.0, 15).unwrap();
        let e = principal_eigenpair(&g).unwrap();
        let dt = 1e-3;
        for theta in [0.5, 1.0] {
            let mut u = e.phi0_sup.clone();
            DiffusionStep::new(&g, dt, theta, &[0.0, 0.0], Exec::Sequential).apply(&mut u);
            let factor: f64 = e
                .axis_lambdas
                .iter()
                .map(|l| (1.0 - (1.0 - theta) * dt * l) / (1.0 + theta * dt * l))
                .product();
            for (a, b) in u.iter().zip(&e.phi0_sup) {
                assert!((a - factor * b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn shifted_backward_euler_keeps_the_principal_mode_fixed() {
        let g = DomainGrid::interval(0.0, 1.0, 31).unwrap();
        let e = principal_eigenpair(&g).unwrap();
        let mut u = e.phi0_sup.clone();
        DiffusionStep::new(&g, 0.5, 1.0, &[e.lambda0], Exec::Sequential).apply(&mut u);
        for (a, b) in u.iter().zip(&e.phi0_sup) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn execution_modes_agree_in_2d() {
        let g = DomainGrid::rectangle(0.0, 1.0, 0.0, 1.0, 20).unwrap();
        let u0 = g.sample(|x| x[0] * (1.0 - x[0]) * (x[1] * 3.0).sin().abs());
        let mut s = u0.clone();
        let mut p = u0;
        DiffusionStep::new(&g, 1e-3, 0.5, &[0.0, 0.0], Exec::Sequential).apply(&mut s);
        DiffusionStep::new(&g, 1e-3, 0.5, &[0.0, 0.0], Exec::Parallel).apply(&mut p);
        assert_eq!(s, p);
    }
}
