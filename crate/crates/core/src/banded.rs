//! Banded matrices and an unpivoted banded LU, generic over real and complex
//! scalars.
//!
//! The systems solved here are symmetric positive definite (preconditioner)
//! or complex symmetric with positive definite real part (Crank–Nicolson),
//! so elimination without pivoting is stable.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + From<f64>
    + Mul<f64, Output = Self>
    + Send
    + Sync
{
    fn zero() -> Self {
        Self::from(0.0)
    }
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Square banded matrix with half-bandwidth `bw`.
#[derive(Debug, Clone, PartialEq)]
pub struct Banded<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Scalar> Banded<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![T::zero(); n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) <= self.bw && i < self.n && j < self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            T::zero()
        }
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(self.in_band(i, j), "({i},{j}) outside band {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn add_diagonal(&mut self, diag: &[T]) {
        for (i, &d) in diag.iter().enumerate() {
            self.add_to(i, i, d);
        }
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let mut acc = T::zero();
            for j in lo..=hi {
                acc += self.data[self.idx(i, j)] * x[j];
            }
            y[i] = acc;
        }
    }

    /// Converts a real banded matrix into any scalar type.
    pub fn cast<U: Scalar>(&self) -> Banded<U>
    where
        T: Into<f64>,
    {
        Banded {
            n: self.n,
            bw: self.bw,
            data: self.data.iter().map(|&v| U::from(v.into())).collect(),
        }
    }

    /// `A + c B`, band widened as needed.
    pub fn add_scaled(&self, c: T, other: &Banded<T>) -> Banded<T> {
        assert_eq!(self.n, other.n);
        let bw = self.bw.max(other.bw);
        let mut out = Banded::zeros(self.n, bw);
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j) + c * other.get(i, j);
                let k = out.idx(i, j);
                out.data[k] = v;
            }
        }
        out
    }

    /// `A diag(d) B`
    pub fn mul_diag_mul(&self, d: &[T], other: &Banded<T>) -> Banded<T> {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let bw = self.bw + other.bw;
        let mut out = Banded::zeros(n, bw);
        for i in 0..n {
            let klo = i.saturating_sub(self.bw);
            let khi = (i + self.bw).min(n - 1);
            for k in klo..=khi {
                let a = self.get(i, k) * d[k];
                let jlo = k.saturating_sub(other.bw);
                let jhi = (k + other.bw).min(n - 1);
                for j in jlo..=jhi {
                    let idx = out.idx(i, j);
                    out.data[idx] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// In-place LU factorization without pivoting.
    pub fn factor(mut self) -> Result<BandedLu<T>> {
        let n = self.n;
        let bw = self.bw;
        for k in 0..n {
            let pivot = self.data[self.idx(k, k)];
            if !(pivot.modulus() > 0.0) || !pivot.modulus().is_finite() {
                return Err(Error::LinearSolve(format!(
                    "zero pivot at row {k} (|pivot| = {:e})",
                    pivot.modulus()
                )));
            }
            let hi = (k + bw).min(n - 1);
            for i in k + 1..=hi {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                for j in k + 1..=hi {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Ok(BandedLu { lu: self })
    }
}

impl Banded<f64> {
    /// `y = A x` for a real matrix and any scalar vector.
    pub fn apply<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let mut acc = T::zero();
            for j in lo..=hi {
                acc += x[j] * self.data[self.idx(i, j)];
            }
            y[i] = acc;
        }
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let mut row = 0.0;
            for j in lo..=hi {
                row += self.data[self.idx(i, j)] * x[j];
            }
            acc += row * x[i];
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    lu: Banded<T>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// Solves in place.
    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.lu.n;
        let bw = self.lu.bw;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut acc = x[i];
            for j in lo..i {
                acc -= self.lu.data[self.lu.idx(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut acc = x[i];
            for j in i + 1..=hi {
                acc -= self.lu.data[self.lu.idx(i, j)] * x[j];
            }
            x[i] = acc / self.lu.data[self.lu.idx(i, i)];
        }
    }
}
