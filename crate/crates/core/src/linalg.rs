//! Small dense complex matrices and a Hermitian Cholesky solver.
//!
//! The amplitude subproblem only ever has `M = Σ_c (A_c + 1)` unknowns, so
//! everything here is a straightforward O(M³) kernel.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[col * self.rows + row] = value;
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [Complex64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (col, &coef) in v.iter().enumerate() {
            for (o, h) in out.iter_mut().zip(self.column(col)) {
                *o += h * coef;
            }
        }
        out
    }

    /// `self* · v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.cols)
            .map(|col| self.column(col).iter().zip(v).map(|(h, x)| h.conj() * x).sum())
            .collect()
    }

    /// `self* · self + shift · I`.
    pub fn gram(&self, shift: f64) -> CMatrix {
        let mut g = CMatrix::zeros(self.cols, self.cols);
        for j in 0..self.cols {
            for i in 0..=j {
                let v: Complex64 = self
                    .column(i)
                    .iter()
                    .zip(self.column(j))
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                g.set(i, j, v);
                g.set(j, i, v.conj());
            }
            let d = g.get(j, j);
            g.set(j, j, Complex64::new(d.re + shift, 0.0));
        }
        g
    }
}

/// Lower-triangular factor `L` with `G = L L*`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<Complex64>,
}

impl Cholesky {
    /// Factors a Hermitian matrix. `strict_rank` enables the relative pivot
    /// test used when no ridge guarantees positive definiteness.
    pub fn factor(g: &CMatrix, strict_rank: bool) -> Result<Self> {
        let dim = g.rows();
        let max_diag = (0..dim).map(|i| g.get(i, i).re).fold(0.0, f64::max);
        let tol = if strict_rank { 1e-12 * max_diag } else { 0.0 };
        let mut lower = vec![Complex64::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            let mut d = g.get(j, j).re;
            for k in 0..j {
                d -= lower[j * dim + k].norm_sqr();
            }
            if !(d > tol) {
                return Err(Error::RankDeficient { pivot: j });
            }
            let ljj = d.sqrt();
            lower[j * dim + j] = Complex64::new(ljj, 0.0);
            for i in j + 1..dim {
                let mut s = g.get(i, j);
                for k in 0..j {
                    s -= lower[i * dim + k] * lower[j * dim + k].conj();
                }
                lower[i * dim + j] = s / ljj;
            }
        }
        Ok(Self { dim, lower })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `G x = rhs`.
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let l = &self.lower;
        let mut z = rhs.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= l[i * n + k] * z[k];
            }
            z[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= l[k * n + i].conj() * z[k];
            }
            z[i] = s / l[i * n + i];
        }
        z
    }
}
