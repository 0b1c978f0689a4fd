use serde::{Deserialize, Serialize};

use super::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionScheme {
    /// Unconditionally positive; first order in time.
    #[default]
    ImplicitEuler,
    /// Second order in time; positivity only for small d·dt/h².
    CrankNicolson,
}

impl DiffusionScheme {
    fn implicit_weight(self) -> f64 {
        match self {
            DiffusionScheme::ImplicitEuler => 1.0,
            DiffusionScheme::CrankNicolson => 0.5,
        }
    }
}

/// Factored tridiagonal system (I − w·dt·d·Δ_h) for one species, with
/// reflecting ghost cells at both ends.
#[derive(Debug, Clone)]
struct Factored {
    /// Explicit-side coefficient (1 − w)·dt·d/h².
    explicit: f64,
    /// Off-diagonal −w·dt·d/h².
    off: f64,
    /// Modified super-diagonal of the forward sweep.
    sup: Vec<f64>,
    /// Reciprocal pivots of the forward sweep.
    inv_pivot: Vec<f64>,
}

impl Factored {
    fn new(r_implicit: f64, r_explicit: f64, m: usize) -> Result<Self> {
        let off = -r_implicit;
        let mut sup = vec![0.0; m];
        let mut inv_pivot = vec![0.0; m];
        let mut prev_sup = 0.0;
        for row in 0..m {
            let neighbours = if m == 1 {
                0.0
            } else if row == 0 || row == m - 1 {
                1.0
            } else {
                2.0
            };
            let diag = 1.0 + neighbours * r_implicit;
            let pivot = diag - if row == 0 { 0.0 } else { off * prev_sup };
            if !(pivot > 0.0) {
                return Err(Error::SolverBreakdown { row, pivot });
            }
            inv_pivot[row] = 1.0 / pivot;
            sup[row] = if row + 1 < m { off / pivot } else { 0.0 };
            prev_sup = sup[row];
        }
        Ok(Self {
            explicit: r_explicit,
            off,
            sup,
            inv_pivot,
        })
    }

    /// Advance `u` in place; `rhs` is scratch of the same length.
    fn apply(&self, u: &mut [f64], rhs: &mut [f64]) {
        let m = u.len();
        if m == 1 {
            return;
        }
        let r = self.explicit;
        if r == 0.0 {
            rhs.copy_from_slice(u);
        } else {
            rhs[0] = u[0] + r * (u[1] - u[0]);
            for k in 1..m - 1 {
                rhs[k] = u[k] + r * ((u[k - 1] - u[k]) + (u[k + 1] - u[k]));
            }
            rhs[m - 1] = u[m - 1] + r * (u[m - 2] - u[m - 1]);
        }
        // Forward sweep, then back substitution.
        let mut prev = 0.0;
        for k in 0..m {
            let v = (rhs[k] - if k == 0 { 0.0 } else { self.off * prev }) * self.inv_pivot[k];
            rhs[k] = v;
            prev = v;
        }
        u[m - 1] = rhs[m - 1];
        for k in (0..m - 1).rev() {
            u[k] = rhs[k] - self.sup[k] * u[k + 1];
        }
    }
}

/// Per-species diffusion operator for a fixed step size, factored once.
#[derive(Debug, Clone)]
pub struct DiffusionOp {
    species: Vec<Factored>,
    scratch: Vec<f64>,
    cells: usize,
}

impl DiffusionOp {
    pub fn new(d: &[f64], grid: &Grid, scheme: DiffusionScheme, dt: f64) -> Result<Self> {
        let h = grid.h();
        let w = scheme.implicit_weight();
        let species = d
            .iter()
            .map(|&di| {
                let r = dt * di / (h * h);
                Factored::new(w * r, (1.0 - w) * r, grid.cells)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            species,
            scratch: vec![0.0; grid.cells],
            cells: grid.cells,
        })
    }

    /// Advance the species-major N×M array `c` by one step.
    pub fn apply(&mut self, c: &mut [f64]) {
        for (i, f) in self.species.iter().enumerate() {
            let u = &mut c[i * self.cells..(i + 1) * self.cells];
            f.apply(u, &mut self.scratch);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve_check(m: usize, scheme: DiffusionScheme) {
        // Compare one step against an explicit assembly of the same system.
        let grid = Grid::new(2.0, m).unwrap();
        let (d, dt) = (0.7, 0.05);
        let u0: Vec<f64> = (0..m).map(|k| 1.0 + ((k * 7) % 5) as f64).collect();
        let mut u = u0.clone();
        DiffusionOp::new(&[d], &grid, scheme, dt)
            .unwrap()
            .apply(&mut u);

        let r = dt * d / (grid.h() * grid.h());
        let w = scheme.implicit_weight();
        let lap = |v: &[f64], k: usize| {
            let left = if k == 0 { v[0] } else { v[k - 1] };
            let right = if k + 1 == m { v[m - 1] } else { v[k + 1] };
            left - 2.0 * v[k] + right
        };
        for k in 0..m {
            let lhs = u[k] - w * r * lap(&u, k);
            let rhs = u0[k] + (1.0 - w) * r * lap(&u0, k);
            assert!((lhs - rhs).abs() < 1e-12, "row {k}: {lhs} vs {rhs}");
        }
        let before: f64 = u0.iter().sum();
        let after: f64 = u.iter().sum();
        assert!((before - after).abs() <= 1e-13 * before);
    }

    #[test]
    fn solves_the_assembled_system() {
        for m in [1, 2, 3, 17] {
            dense_solve_check(m, DiffusionScheme::ImplicitEuler);
            dense_solve_check(m, DiffusionScheme::CrankNicolson);
        }
    }

    #[test]
    fn constants_are_steady() {
        let grid = Grid::new(1.0, 16).unwrap();
        let mut c = vec![3.0; 32];
        DiffusionOp::new(&[1.0, 0.25], &grid, DiffusionScheme::CrankNicolson, 0.1)
            .unwrap()
            .apply(&mut c);
        assert!(c.iter().all(|v| (v - 3.0).abs() < 1e-14));
    }
}
