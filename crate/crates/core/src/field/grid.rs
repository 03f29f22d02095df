//! Symmetry-reduced grids and the stiffness matrices of the reduced
//! Laplacian.
//!
//! Radial nodes are cell centered, `r_i = (i + 1/2) h_r`, so no node sits on
//! the axis. Profiles are stored as `u = r^a v` where `a` is the axis
//! exponent of the grid; `v` is reflected evenly at `r = 0` and oddly at
//! `r = R`. For `m = 1` the exponent is the regular root of
//! `a(a + K - 2) = μ`, which makes `v` smooth for true solutions and removes
//! the singular potential from the stiffness matrix. Axial nodes are cell
//! centered on `[-Z, Z]` with odd reflection at both ends.

use serde::Serialize;

use crate::banded::Banded;
use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::special::sphere_area;

/// Coefficients of the sixth-order staggered first derivative.
const FACE_COEFFS: [f64; 3] = [75.0 / 64.0, -25.0 / 384.0, 3.0 / 640.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Radial,
    Cylindrical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parity {
    Even,
    Odd,
}

/// Geometry parameters, used for reporting and CSV headers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridParams {
    pub kind: GridKind,
    pub n: usize,
    pub k: usize,
    pub n_r: usize,
    pub r_max: f64,
    pub n_z: usize,
    pub z_max: f64,
    pub axis_exponent: f64,
}

#[derive(Debug, Clone)]
pub struct Grid {
    params: GridParams,
    h_r: f64,
    h_z: f64,
    r: Vec<f64>,
    z: Vec<f64>,
    /// `ω_{K-1} r_i^{K-1} h_r`
    radial_weights: Vec<f64>,
    /// Full quadrature weights, r-major.
    weights: Vec<f64>,
    /// `r_i^{-a}`
    inv_ra: Vec<f64>,
    /// Weighted radial stiffness acting on `u`: `W A_r`.
    radial_stiffness: Banded<f64>,
    /// Axial stiffness `A_z` (unweighted; the axial weight is uniform).
    axial_stiffness: Banded<f64>,
}

/// Regular root of `a(a + K - 2) = μ` for `m = 1`, and 0 otherwise.
pub fn axis_exponent(k: usize, m: usize, mu: f64) -> f64 {
    if m != 1 {
        return 0.0;
    }
    let b = k as f64 - 2.0;
    let disc = b * b + 4.0 * mu;
    if disc < 0.0 {
        return -b / 2.0;
    }
    (-b + disc.sqrt()) / 2.0
}

impl Grid {
    /// Radial grid for `K = N`.
    pub fn radial(n: usize, n_r: usize, r_max: f64) -> Result<Self> {
        Self::build(n, n, n_r, r_max, 1, 0.0, 0.0)
    }

    /// Cylindrical grid for `N = K + 1`.
    pub fn cylindrical(n: usize, k: usize, n_r: usize, r_max: f64, n_z: usize, z_max: f64) -> Result<Self> {
        if n != k + 1 {
            return Err(Error::Unsupported(format!(
                "cylindrical grids need N = K + 1 (N = {n}, K = {k})"
            )));
        }
        Self::build(n, k, n_r, r_max, n_z, z_max, 0.0)
    }

    /// Grid matched to a problem: radial when `K = N`, cylindrical when
    /// `N = K + 1`, with the axis exponent of `(K, m, μ)`.
    pub fn for_problem(spec: &ProblemSpec, n_r: usize, r_max: f64, n_z: usize, z_max: f64) -> Result<Self> {
        let a = axis_exponent(spec.k, spec.m, spec.mu);
        match spec.n - spec.k {
            0 => Self::build(spec.n, spec.k, n_r, r_max, 1, 0.0, a),
            1 => Self::build(spec.n, spec.k, n_r, r_max, n_z, z_max, a),
            d => Err(Error::Unsupported(format!("N - K = {d}; only 0 and 1 are supported"))),
        }
    }

    /// Same geometry with a different axis exponent.
    pub fn with_axis_exponent(&self, a: f64) -> Result<Self> {
        let p = &self.params;
        Self::build(p.n, p.k, p.n_r, p.r_max, p.n_z, p.z_max, a)
    }

    fn build(n: usize, k: usize, n_r: usize, r_max: f64, n_z: usize, z_max: f64, a: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::constraint("K ≥ 2", format!("K = {k}")));
        }
        if n_r < 4 {
            return Err(Error::constraint("n_r ≥ 4", format!("n_r = {n_r}")));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::constraint("R > 0", format!("R = {r_max}")));
        }
        let kind = if n == k {
            GridKind::Radial
        } else {
            GridKind::Cylindrical
        };
        let (n_z, z_max) = match kind {
            GridKind::Radial => (1, 0.0),
            GridKind::Cylindrical => {
                if n_z < 4 {
                    return Err(Error::constraint("n_z ≥ 4", format!("n_z = {n_z}")));
                }
                if !(z_max > 0.0) || !z_max.is_finite() {
                    return Err(Error::constraint("Z > 0", format!("Z = {z_max}")));
                }
                (n_z, z_max)
            }
        };
        if !a.is_finite() || a <= -(k as f64 - 1.0) / 2.0 {
            return Err(Error::Range(format!("axis exponent {a} not square integrable")));
        }
        let h_r = r_max / n_r as f64;
        let h_z = if kind == GridKind::Cylindrical {
            2.0 * z_max / n_z as f64
        } else {
            1.0
        };
        let omega = sphere_area(k);
        let r: Vec<f64> = (0..n_r).map(|i| (i as f64 + 0.5) * h_r).collect();
        let z: Vec<f64> = if kind == GridKind::Cylindrical {
            (0..n_z).map(|j| -z_max + (j as f64 + 0.5) * h_z).collect()
        } else {
            vec![0.0]
        };
        let km1 = k as f64 - 1.0;
        let radial_weights: Vec<f64> = r.iter().map(|&ri| omega * ri.powf(km1) * h_r).collect();
        let weights: Vec<f64> = radial_weights
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w * h_z, n_z))
            .collect();
        let inv_ra: Vec<f64> = r.iter().map(|&ri| ri.powf(-a)).collect();

        // S̃ = Dᵀ W̃_F D on v, then W A_r = R^{-a} S̃ R^{-a}.
        let face_w: Vec<f64> = (0..n_r)
            .map(|f| omega * ((f + 1) as f64 * h_r).powf(km1 + 2.0 * a) * h_r)
            .collect();
        let mut radial_stiffness = stiffness(n_r, h_r, Parity::Even, 0, n_r, &face_w);
        scale_sym(&mut radial_stiffness, &inv_ra);

        let axial_stiffness = if kind == GridKind::Cylindrical {
            // faces -1..n_z-1, shifted by one
            stiffness(n_z, h_z, Parity::Odd, -1, n_z + 1, &vec![1.0; n_z + 1])
        } else {
            Banded::zeros(1, 0)
        };

        Ok(Self {
            params: GridParams {
                kind,
                n,
                k,
                n_r,
                r_max,
                n_z,
                z_max,
                axis_exponent: a,
            },
            h_r,
            h_z,
            r,
            z,
            radial_weights,
            weights,
            inv_ra,
            radial_stiffness,
            axial_stiffness,
        })
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }
    pub fn kind(&self) -> GridKind {
        self.params.kind
    }
    pub fn dim_n(&self) -> usize {
        self.params.n
    }
    pub fn dim_k(&self) -> usize {
        self.params.k
    }
    pub fn n_r(&self) -> usize {
        self.params.n_r
    }
    pub fn n_z(&self) -> usize {
        self.params.n_z
    }
    pub fn len(&self) -> usize {
        self.params.n_r * self.params.n_z
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn h_r(&self) -> f64 {
        self.h_r
    }
    pub fn h_z(&self) -> f64 {
        self.h_z
    }
    pub fn r_max(&self) -> f64 {
        self.params.r_max
    }
    pub fn z_max(&self) -> f64 {
        self.params.z_max
    }
    pub fn axis_exponent(&self) -> f64 {
        self.params.axis_exponent
    }
    pub fn r(&self) -> &[f64] {
        &self.r
    }
    pub fn z(&self) -> &[f64] {
        &self.z
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }
    pub(crate) fn inv_ra(&self) -> &[f64] {
        &self.inv_ra
    }
    pub(crate) fn radial_stiffness(&self) -> &Banded<f64> {
        &self.radial_stiffness
    }
    pub(crate) fn axial_stiffness(&self) -> &Banded<f64> {
        &self.axial_stiffness
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.params.n_z + j
    }

    /// Node coordinates `(r, z)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r
            .iter()
            .flat_map(move |&ri| self.z.iter().map(move |&zj| (ri, zj)))
    }

    /// Samples `f(r, z)` at every node (`z = 0` on radial grids).
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.nodes().map(|(r, z)| f(r, z)).collect()
    }

    /// Same geometry (axis exponent included).
    pub fn same_as(&self, other: &Grid) -> bool {
        self.params == other.params
    }
}

/// Assembles `Σ_f w_f d_f d_fᵀ` where `d_f` is the face gradient row for
/// faces `first, ..., first + count - 1` (face `f` sits between nodes `f`
/// and `f + 1`).
fn stiffness(n: usize, h: f64, lower: Parity, first: isize, count: usize, face_w: &[f64]) -> Banded<f64> {
    let mut s = Banded::zeros(n, 5);
    for (slot, f) in (first..first + count as isize).enumerate() {
        let row = face_row(n, h, lower, f);
        let w = face_w[slot];
        for &(i, ci) in &row {
            for &(j, cj) in &row {
                s.add_to(i, j, w * ci * cj);
            }
        }
    }
    s
}

/// Face gradient with ghosts folded in; the upper end is always odd.
fn face_row(n: usize, h: f64, lower: Parity, f: isize) -> Vec<(usize, f64)> {
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(6);
    let mut push = |node: isize, c: f64| {
        let n_i = n as isize;
        let (idx, sign) = if node < 0 {
            let s = if lower == Parity::Even { 1.0 } else { -1.0 };
            (-1 - node, s)
        } else if node >= n_i {
            (2 * n_i - 1 - node, -1.0)
        } else {
            (node, 1.0)
        };
        debug_assert!((0..n_i).contains(&idx));
        let idx = idx as usize;
        if let Some(e) = row.iter_mut().find(|e| e.0 == idx) {
            e.1 += sign * c;
        } else {
            row.push((idx, sign * c));
        }
    };
    for (k, &a) in FACE_COEFFS.iter().enumerate() {
        let k = k as isize + 1;
        push(f + k, a / h);
        push(f + 1 - k, -a / h);
    }
    row
}

/// `S ← D S D` for diagonal `D`.
fn scale_sym(s: &mut Banded<f64>, d: &[f64]) {
    let n = s.dim();
    let bw = s.bandwidth();
    let mut out = Banded::zeros(n, bw);
    for i in 0..n {
        for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
            out.add_to(i, j, s.get(i, j) * d[i] * d[j]);
        }
    }
    *s = out;
}
