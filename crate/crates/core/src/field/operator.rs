//! The discrete operator `L = (-Δ_h)^m + μ|y|^{-2m}` and banded solves for
//! shifted versions of it.
//!
//! For `m = 1`, `W L = W A_r + W A_z + W q` where `W A_r` is the radial
//! stiffness of the grid and `q = (μ - a(a + K - 2)) / r²` is what remains
//! of the singular potential after the `r^a` substitution. For `m = 2` the
//! axis exponent is 0 and `L = (A_r + A_z)² + μ/r⁴`.
//!
//! Solves diagonalize the axial operator once (`A_z = Q diag(β) Qᵀ`) and
//! factor one banded radial matrix per axial mode.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::banded::{Banded, BandedLu, Scalar};
use crate::error::{Error, Result};

use super::grid::{Grid, GridKind};

#[derive(Debug, Clone)]
pub struct Operator<'g> {
    grid: &'g Grid,
    m: usize,
    mu: f64,
    /// Potential multiplying `u` (for `m = 1` the residual `q`, for `m = 2`
    /// `μ / r⁴`), per radial node.
    potential: Vec<f64>,
}

impl<'g> Operator<'g> {
    pub fn new(grid: &'g Grid, m: usize, mu: f64) -> Result<Self> {
        let a = grid.axis_exponent();
        let k = grid.dim_k() as f64;
        let potential = match m {
            1 => {
                let mu_a = a * (a + k - 2.0);
                grid.r().iter().map(|&r| (mu - mu_a) / (r * r)).collect()
            }
            2 => {
                if a != 0.0 {
                    return Err(Error::Unsupported("m = 2 needs a grid with axis exponent 0".into()));
                }
                grid.r().iter().map(|&r| mu / r.powi(4)).collect()
            }
            _ => return Err(Error::Unsupported(format!("m = {m}; only 1 and 2"))),
        };
        Ok(Self { grid, m, mu, potential })
    }

    pub fn grid(&self) -> &'g Grid {
        self.grid
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `y = -Δ_h x`
    pub fn apply_laplacian<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        self.apply_core(x, y);
        if self.m == 1 {
            // the part of the Hardy potential absorbed by r^a
            let g = self.grid;
            let n_z = g.n_z();
            let a = g.axis_exponent();
            let mu_a = a * (a + g.dim_k() as f64 - 2.0);
            if mu_a != 0.0 {
                for (i, &r) in g.r().iter().enumerate() {
                    let c = -mu_a / (r * r);
                    for j in 0..n_z {
                        y[i * n_z + j] += x[i * n_z + j] * c;
                    }
                }
            }
        }
    }

    /// `y = L x`
    pub fn apply<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        let g = self.grid;
        let n_z = g.n_z();
        match self.m {
            1 => {
                self.apply_core(x, y);
                for (i, &q) in self.potential.iter().enumerate() {
                    for j in 0..n_z {
                        y[i * n_z + j] += x[i * n_z + j] * q;
                    }
                }
            }
            _ => {
                let mut t = vec![T::zero(); x.len()];
                self.apply_laplacian(x, &mut t);
                self.apply_laplacian(&t, y);
                for (i, &q) in self.potential.iter().enumerate() {
                    for j in 0..n_z {
                        y[i * n_z + j] += x[i * n_z + j] * q;
                    }
                }
            }
        }
    }

    /// Stiffness part `W⁻¹S_u + A_z`, without any `1/r²` term.
    fn apply_core<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        let g = self.grid;
        let n_r = g.n_r();
        let n_z = g.n_z();
        let wr = g.radial_weights();
        let mut col = vec![T::zero(); n_r];
        let mut out = vec![T::zero(); n_r];
        for j in 0..n_z {
            for i in 0..n_r {
                col[i] = x[i * n_z + j];
            }
            g.radial_stiffness().apply(&col, &mut out);
            for i in 0..n_r {
                y[i * n_z + j] = out[i] * (1.0 / wr[i]);
            }
        }
        if g.kind() == GridKind::Cylindrical {
            let mut line = vec![T::zero(); n_z];
            for i in 0..n_r {
                g.axial_stiffness().apply(&x[i * n_z..(i + 1) * n_z], &mut line);
                for j in 0..n_z {
                    y[i * n_z + j] += line[j];
                }
            }
        }
    }

    /// `⟨u, (-Δ_h)^m u⟩_w`, assembled from the stiffness forms.
    pub fn seminorm_form(&self, u: &[f64]) -> f64 {
        let g = self.grid;
        let n_r = g.n_r();
        let n_z = g.n_z();
        match self.m {
            1 => {
                let mut acc = 0.0;
                let mut col = vec![0.0; n_r];
                for j in 0..n_z {
                    for i in 0..n_r {
                        col[i] = u[i * n_z + j];
                    }
                    acc += g.radial_stiffness().quadratic_form(&col);
                }
                acc *= g.h_z();
                if g.kind() == GridKind::Cylindrical {
                    let wr = g.radial_weights();
                    for i in 0..n_r {
                        acc += wr[i] * g.h_z() * g.axial_stiffness().quadratic_form(&u[i * n_z..(i + 1) * n_z]);
                    }
                }
                let a = g.axis_exponent();
                let mu_a = a * (a + g.dim_k() as f64 - 2.0);
                if mu_a != 0.0 {
                    let w = g.weights();
                    let mut pot = 0.0;
                    for i in 0..n_r {
                        let inv = 1.0 / (g.r()[i] * g.r()[i]);
                        for j in 0..n_z {
                            let k = i * n_z + j;
                            pot += w[k] * u[k] * u[k] * inv;
                        }
                    }
                    acc -= mu_a * pot;
                }
                acc
            }
            _ => {
                let mut t = vec![0.0; u.len()];
                self.apply_laplacian(u, &mut t);
                g.weights().iter().zip(&t).map(|(w, t)| w * t * t).sum()
            }
        }
    }

    /// `W (A_r + β)^m + W diag(extra)` for one axial mode, as a banded
    /// radial matrix.
    pub fn radial_block(&self, beta: f64, extra: &[f64]) -> Banded<f64> {
        let g = self.grid;
        let wr = g.radial_weights();
        let n_r = g.n_r();
        let mut s = g.radial_stiffness().clone();
        let shift: Vec<f64> = wr.iter().map(|w| w * beta).collect();
        s.add_diagonal(&shift);
        let mut block = match self.m {
            1 => s,
            _ => {
                let inv: Vec<f64> = wr.iter().map(|w| 1.0 / w).collect();
                s.mul_diag_mul(&inv, &s)
            }
        };
        let d: Vec<f64> = (0..n_r).map(|i| wr[i] * extra[i]).collect();
        block.add_diagonal(&d);
        block
    }
}

/// Axial eigenbasis `A_z = Q diag(β) Qᵀ`; trivial on radial grids.
#[derive(Debug, Clone)]
pub struct AxialModes {
    q: Option<DMatrix<f64>>,
    beta: Vec<f64>,
}

impl AxialModes {
    pub fn new(grid: &Grid) -> Self {
        if grid.kind() == GridKind::Radial {
            return Self {
                q: None,
                beta: vec![0.0],
            };
        }
        let n = grid.n_z();
        let a = grid.axial_stiffness();
        let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let eig = SymmetricEigen::new(dense);
        Self {
            beta: eig.eigenvalues.iter().copied().collect(),
            q: Some(eig.eigenvectors),
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.beta
    }

    /// `x̂(i, k) = Σ_j Q[j, k] x(i, j)`, in place.
    fn forward<T: Scalar>(&self, x: &mut [T], n_r: usize) {
        let Some(q) = &self.q else { return };
        let n = q.nrows();
        let mut tmp = vec![T::zero(); n];
        for i in 0..n_r {
            let line = &mut x[i * n..(i + 1) * n];
            for (k, t) in tmp.iter_mut().enumerate() {
                let col = q.column(k);
                let mut acc = T::zero();
                for j in 0..n {
                    acc += line[j] * col[j];
                }
                *t = acc;
            }
            line.copy_from_slice(&tmp);
        }
    }

    fn backward<T: Scalar>(&self, x: &mut [T], n_r: usize) {
        let Some(q) = &self.q else { return };
        let n = q.nrows();
        let mut tmp = vec![T::zero(); n];
        for i in 0..n_r {
            let line = &mut x[i * n..(i + 1) * n];
            tmp.iter_mut().for_each(|t| *t = T::zero());
            for k in 0..n {
                let c = line[k];
                let col = q.column(k);
                for j in 0..n {
                    tmp[j] += c * col[j];
                }
            }
            line.copy_from_slice(&tmp);
        }
    }
}

/// Factored `W (c + L')` per axial mode, with `L'` any operator of the form
/// built by [`Operator::radial_block`].
#[derive(Debug, Clone)]
pub struct ModalSolver<T> {
    n_r: usize,
    n_z: usize,
    radial_weights: Vec<f64>,
    modes: AxialModes,
    lus: Vec<BandedLu<T>>,
}

impl<T: Scalar> ModalSolver<T> {
    /// `build(β_k)` returns the banded radial matrix of mode `k`.
    pub fn new(grid: &Grid, modes: AxialModes, build: impl Fn(f64) -> Result<Banded<T>>) -> Result<Self> {
        let lus = modes
            .beta
            .iter()
            .map(|&b| build(b).and_then(|m| m.factor()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_r: grid.n_r(),
            n_z: grid.n_z(),
            radial_weights: grid.radial_weights().to_vec(),
            modes,
            lus,
        })
    }

    /// Solves `B x = W f` for each mode, in place (`x` holds `f` on entry).
    pub fn solve_in_place(&self, x: &mut [T]) {
        let n_r = self.n_r;
        let n_z = self.n_z;
        self.modes.forward(x, n_r);
        let mut col = vec![T::zero(); n_r];
        for k in 0..n_z {
            for i in 0..n_r {
                col[i] = x[i * n_z + k] * self.radial_weights[i];
            }
            self.lus[k].solve_in_place(&mut col);
            for i in 0..n_r {
                x[i * n_z + k] = col[i];
            }
        }
        self.modes.backward(x, n_r);
    }
}

/// `P = c + L⁺`, where `L⁺` drops negative parts of the potential.
pub fn preconditioner(op: &Operator<'_>, modes: AxialModes, shift: f64) -> Result<ModalSolver<f64>> {
    let extra: Vec<f64> = op.potential().iter().map(|&q| shift + q.max(0.0)).collect();
    ModalSolver::new(op.grid(), modes, |b| Ok(op.radial_block(b, &extra)))
}

/// `W + i (dt/2) W L` per mode, for Crank–Nicolson.
pub fn crank_nicolson(op: &Operator<'_>, modes: AxialModes, dt: f64) -> Result<ModalSolver<Complex64>> {
    let wr = op.grid().radial_weights().to_vec();
    ModalSolver::new(op.grid(), modes, |b| {
        let block: Banded<Complex64> = op.radial_block(b, op.potential()).cast();
        let mut m = Banded::<Complex64>::zeros(block.dim(), 0);
        m.add_diagonal(&wr.iter().map(|&w| Complex64::new(w, 0.0)).collect::<Vec<_>>());
        Ok(m.add_scaled(Complex64::new(0.0, 0.5 * dt), &block))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot_w(g: &Grid, a: &[f64], b: &[f64]) -> f64 {
        g.weights().iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }

    #[test]
    fn operator_is_self_adjoint_in_weighted_product() {
        let g = Grid::cylindrical(3, 2, 24, 4.0, 16, 3.0)
            .unwrap()
            .with_axis_exponent(1.0)
            .unwrap();
        let op = Operator::new(&g, 1, 1.0).unwrap();
        let a = g.sample(|r, z| (-(r - 1.0).powi(2) - z * z).exp());
        let b = g.sample(|r, z| r * (-(r * r) - (z - 0.3).powi(2)).exp());
        let mut la = vec![0.0; a.len()];
        let mut lb = vec![0.0; a.len()];
        op.apply(&a, &mut la);
        op.apply(&b, &mut lb);
        let x = dot_w(&g, &la, &b);
        let y = dot_w(&g, &a, &lb);
        assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()));
    }

    #[test]
    fn bilaplacian_self_adjoint() {
        let g = Grid::radial(4, 40, 6.0).unwrap();
        let op = Operator::new(&g, 2, 0.5).unwrap();
        let a = g.sample(|r, _| (-r * r).exp());
        let b = g.sample(|r, _| (1.0 + r) * (-r * r / 2.0).exp());
        let mut la = vec![0.0; 40];
        let mut lb = vec![0.0; 40];
        op.apply(&a, &mut la);
        op.apply(&b, &mut lb);
        let x = dot_w(&g, &la, &b);
        let y = dot_w(&g, &a, &lb);
        assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()));
    }

    #[test]
    fn preconditioner_inverts_shifted_operator() {
        let g = Grid::cylindrical(3, 2, 20, 4.0, 12, 3.0)
            .unwrap()
            .with_axis_exponent(1.0)
            .unwrap();
        let op = Operator::new(&g, 1, 1.0).unwrap();
        let p = preconditioner(&op, AxialModes::new(&g), 2.0).unwrap();
        let x = g.sample(|r, z| r * (-(r * r) - z * z).exp());
        let mut y = vec![0.0; x.len()];
        op.apply(&x, &mut y);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += 2.0 * xi;
        }
        p.solve_in_place(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
