//! Cubic Lagrange interpolation of grid profiles.
//!
//! Interpolation acts on `v = r^{-a} u`, with the same reflections as the
//! stiffness matrices (even at the axis, odd at the outer walls), and is zero
//! outside the computational domain.

use super::grid::{Grid, GridKind};
use super::Field;

#[derive(Debug, Clone)]
pub struct Interpolator<'a> {
    grid: &'a Grid,
    v: Vec<f64>,
}

#[inline]
fn lagrange4(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

/// Stencil start, weights, and ghost map for a cell-centered axis.
#[inline]
fn stencil(x: f64, h: f64, n: usize, even_low: bool) -> [(usize, f64); 4] {
    let t = x / h - 0.5;
    let i0 = t.floor();
    let w = lagrange4(t - i0);
    let i0 = i0 as isize;
    let n_i = n as isize;
    let mut out = [(0usize, 0.0); 4];
    for (k, o) in out.iter_mut().enumerate() {
        let idx = i0 - 1 + k as isize;
        *o = if idx < 0 {
            let s = if even_low { 1.0 } else { -1.0 };
            ((-1 - idx) as usize, s * w[k])
        } else if idx >= n_i {
            let m = 2 * n_i - 1 - idx;
            if m < 0 {
                (0, 0.0)
            } else {
                (m as usize, -w[k])
            }
        } else {
            (idx as usize, w[k])
        };
    }
    out
}

impl<'a> Interpolator<'a> {
    pub fn new(field: &'a Field) -> Self {
        let grid = field.grid().as_ref();
        let n_z = grid.n_z();
        let inv_ra = grid.inv_ra();
        let v = field
            .values()
            .iter()
            .enumerate()
            .map(|(k, &u)| u * inv_ra[k / n_z])
            .collect();
        Self { grid, v }
    }

    /// `v(r, z) = r^{-a} u(r, z)`, the smooth part.
    pub fn eval_v(&self, r: f64, z: f64) -> f64 {
        let g = self.grid;
        let r = r.abs();
        if r > g.r_max() {
            return 0.0;
        }
        let rs = stencil(r, g.h_r(), g.n_r(), true);
        match g.kind() {
            GridKind::Radial => rs.iter().map(|&(i, w)| w * self.v[i]).sum(),
            GridKind::Cylindrical => {
                if z.abs() > g.z_max() {
                    return 0.0;
                }
                let n_z = g.n_z();
                let zs = stencil(z + g.z_max(), g.h_z(), n_z, false);
                let mut acc = 0.0;
                for &(i, wr) in &rs {
                    if wr == 0.0 {
                        continue;
                    }
                    let mut line = 0.0;
                    for &(j, wz) in &zs {
                        line += wz * self.v[i * n_z + j];
                    }
                    acc += wr * line;
                }
                acc
            }
        }
    }

    pub fn eval(&self, r: f64, z: f64) -> f64 {
        let a = self.grid.axis_exponent();
        let v = self.eval_v(r, z);
        if a == 0.0 {
            v
        } else {
            r.abs().powf(a) * v
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    #[test]
    fn reproduces_nodes_and_cubics() {
        let g = Arc::new(Grid::radial(3, 32, 4.0).unwrap());
        let f = Field::from_fn(&g, |r, _| 1.0 + r * r);
        let it = Interpolator::new(&f);
        for (i, &r) in g.r().iter().enumerate().take(28) {
            assert!((it.eval(r, 0.0) - f.values()[i]).abs() < 1e-13);
        }
        // even polynomial is reproduced near the axis through the even ghosts
        assert!((it.eval(0.05, 0.0) - (1.0 + 0.0025)).abs() < 1e-12);
        assert!((it.eval(2.3, 0.0) - (1.0 + 2.3 * 2.3)).abs() < 1e-12);
    }

    #[test]
    fn cylindrical_with_axis_exponent() {
        let g = Arc::new(
            Grid::cylindrical(3, 2, 128, 6.0, 128, 6.0)
                .unwrap()
                .with_axis_exponent(1.0)
                .unwrap(),
        );
        let f = Field::from_fn(&g, |r, z| r * (-(r * r) - z * z).exp());
        let it = Interpolator::new(&f);
        let exact = |r: f64, z: f64| r * (-(r * r) - z * z).exp();
        for &(r, z) in &[(0.01, 0.2), (0.7, -0.4), (1.3, 1.1)] {
            let e = it.eval(r, z);
            assert!((e - exact(r, z)).abs() < 1e-5, "({r},{z}): {e} vs {}", exact(r, z));
        }
        assert_eq!(it.eval(7.0, 0.0), 0.0);
    }
}
