//! Dense complex matrix helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry modulus of `m − m†`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entry modulus of `u†u − 1`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// True when every off-diagonal entry is below `tolerance` in modulus.
pub fn is_diagonal(m: &CMatrix, tolerance: f64) -> bool {
    (0..m.nrows()).all(|r| (0..m.ncols()).all(|k| r == k || m[(r, k)].norm() <= tolerance))
}

/// Smallest eigenvalue of a Hermitian matrix. Uses the closed form for 2×2.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    match m.nrows() {
        0 => f64::INFINITY,
        1 => m[(0, 0)].re,
        2 => {
            let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
            let b = m[(0, 1)].norm_sqr();
            let half = 0.5 * (a + d);
            half - (0.25 * (a - d) * (a - d) + b).sqrt()
        }
        _ => SymmetricEigen::new(hermitize(m))
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
    }
}

/// `exp(−i·scale·H)` for Hermitian `H` via its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, scale: f64) -> CMatrix {
    let eig = SymmetricEigen::new(hermitize(h));
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| (-I * scale * l).exp()),
    );
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Frobenius norm of the entries outside the diagonal `block × block` blocks.
pub fn off_block_norm(m: &CMatrix, block: usize) -> f64 {
    let mut total = 0.0;
    for r in 0..m.nrows() {
        for k in 0..m.ncols() {
            if r / block != k / block {
                total += m[(r, k)].norm_sqr();
            }
        }
    }
    total.sqrt()
}

/// Diagonal block `index` of size `block`.
pub fn diagonal_block(m: &CMatrix, block: usize, index: usize) -> CMatrix {
    m.view((index * block, index * block), (block, block)).into_owned()
}

/// `exp(−i·scale·H)`, exponentiated block by block when `H` has no entries
/// outside its diagonal blocks, so the result keeps exact zeros there.
pub fn expm_hermitian_blocked(h: &CMatrix, block: usize, scale: f64) -> CMatrix {
    let n = h.nrows();
    if block == 0 || n % block != 0 || off_block_norm(h, block) != 0.0 {
        return expm_hermitian(h, scale);
    }
    let mut u = CMatrix::zeros(n, n);
    for b in 0..n / block {
        let ub = expm_hermitian(&diagonal_block(h, block, b), scale);
        u.view_mut((b * block, b * block), (block, block)).copy_from(&ub);
    }
    u
}

/// `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Complex matrix as a pair of real arrays, the exchange form used in
/// configs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexMatrixRepr {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl ComplexMatrixRepr {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if self.re.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidApparatus("ragged real part".into()));
        }
        if let Some(im) = &self.im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(Error::InvalidApparatus(
                    "imaginary part shape differs from real part".into(),
                ));
            }
        }
        Ok(CMatrix::from_fn(rows, cols, |r, k| {
            let im = self.im.as_ref().map_or(0.0, |m| m[r][k]);
            c(self.re[r][k], im)
        }))
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let re = (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| m[(r, k)].re).collect()).collect();
        let im = (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| m[(r, k)].im).collect()).collect();
        Self { re, im: Some(im) }
    }
}

/// Complex vector as a pair of real arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexVectorRepr {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Option<Vec<f64>>,
}

impl ComplexVectorRepr {
    pub fn to_vector(&self) -> Result<CVector> {
        if let Some(im) = &self.im {
            if im.len() != self.re.len() {
                return Err(Error::InvalidApparatus(
                    "imaginary part length differs from real part".into(),
                ));
            }
        }
        Ok(CVector::from_fn(self.re.len(), |r, _| {
            c(self.re[r], self.im.as_ref().map_or(0.0, |v| v[r]))
        }))
    }
}

pub mod pauli {
    use super::{c, CMatrix};

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_pauli_y() {
        // exp(−iθY) = cos θ·1 − i sin θ·Y
        let theta = 0.3;
        let u = expm_hermitian(&pauli::y(), theta);
        let expected = CMatrix::identity(2, 2).scale(theta.cos()) - pauli::y() * (I * theta.sin());
        assert!(max_abs(&(u - expected)) < 1e-14);
    }

    #[test]
    fn blocked_expm_has_exact_zeros() {
        let h = kron(&CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)])), &pauli::x());
        let u = expm_hermitian_blocked(&h, 2, 0.7);
        assert_eq!(off_block_norm(&u, 2), 0.0);
        assert!(max_abs(&(u - expm_hermitian(&h, 0.7))) < 1e-14);
    }

    #[test]
    fn min_eigenvalue_closed_form_matches_general() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(0.3, 0.0)]);
        let general = SymmetricEigen::new(m.clone()).eigenvalues.min();
        assert!((min_eigenvalue(&m) - general).abs() < 1e-14);
    }
}
