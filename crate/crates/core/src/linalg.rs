//! Small dense complex matrices (2x2 and 4x4) and the handful of
//! decompositions the simulator needs.
//!
//! Tensor products use the row-major block convention: entry
//! `(2i + k, 2j + l)` of `a ⊗ b` is `a(i, j) * b(k, l)`. Two-qubit
//! operators are therefore written in the basis `|00>, |01>, |10>, |11>`
//! with the first factor acting on subsystem A.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `|m - m^dagger|` accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_CLAMP` are clamped to zero by [`psd_sqrt`].
pub const PSD_CLAMP: f64 = 1e-10;
/// Off-diagonal Frobenius norm at which the Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which tensor factor an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    A,
    B,
}

/// A square complex matrix of dimension 2 or 4, stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: [Complex64; 16],
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        match dim {
            2 | 4 => Ok(Self {
                dim,
                data: [ZERO; 16],
            }),
            other => Err(Error::InvalidDimension(other)),
        }
    }

    pub(crate) fn zeros_unchecked(dim: usize) -> Self {
        debug_assert!(dim == 2 || dim == 4);
        Self {
            dim,
            data: [ZERO; 16],
        }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        Ok(m)
    }

    pub(crate) fn identity_unchecked(dim: usize) -> Self {
        let mut m = Self::zeros_unchecked(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from rows; the number of rows fixes the dimension.
    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let mut m = Self::zeros(rows.len())?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m.dim {
                return Err(Error::DimensionMismatch {
                    expected: m.dim,
                    found: row.len(),
                });
            }
            for (j, &z) in row.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        Ok(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let mut m = Self::zeros(rows.len())?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m.dim {
                return Err(Error::DimensionMismatch {
                    expected: m.dim,
                    found: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = Complex64::new(x, 0.0);
            }
        }
        Ok(m)
    }

    pub fn diag_real(values: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(values.len())?;
        for (i, &x) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        Ok(m)
    }

    /// `|v><v|` for a vector of length 2 or 4.
    pub fn outer(v: &[Complex64]) -> Result<Self> {
        let mut m = Self::zeros(v.len())?;
        for i in 0..v.len() {
            for j in 0..v.len() {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros_unchecked(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros_unchecked(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(j, i)];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let mut out = *self;
        for z in out.data[..self.dim * self.dim].iter_mut() {
            *z = f(*z);
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus, the `‖·‖_∞` used for all matrix tolerances.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(m + m^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale(0.5)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data[..self.dim * self.dim]
    }

    /// Distance to another matrix of the same dimension in `‖·‖_∞`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    /// `k · m · k^dagger`.
    pub fn conjugate_by(&self, k: &Self) -> Self {
        *k * *self * k.adjoint()
    }

    /// `k · m · k` for Hermitian `k` (Lüders-style sandwich).
    pub fn sandwich(&self, k: &Self) -> Self {
        *k * *self * *k
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.dim && c < self.dim);
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.dim && c < self.dim);
        &mut self.data[r * self.dim + c]
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(mut self, rhs: CMatrix) -> CMatrix {
        self += rhs;
        self
    }
}

impl AddAssign for CMatrix {
    fn add_assign(&mut self, rhs: CMatrix) {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim * self.dim;
        for (a, b) in self.data[..n].iter_mut().zip(&rhs.data[..n]) {
            *a += *b;
        }
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(mut self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim * self.dim;
        for (a, b) in self.data[..n].iter_mut().zip(&rhs.data[..n]) {
            *a -= *b;
        }
        self
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros_unchecked(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Pauli matrix `σ_q` for `q ∈ {0, 1, 2, 3}` with `σ_0 = I_2`.
pub fn pauli(q: usize) -> CMatrix {
    let i = Complex64::i();
    let rows: [[Complex64; 2]; 2] = match q {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -i], [i, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("Pauli index {q} out of range"),
    };
    let mut m = CMatrix::zeros_unchecked(2);
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = rows[r][c];
        }
    }
    m
}

/// `σ_p ⊗ σ_q`.
pub fn pauli_pair(p: usize, q: usize) -> CMatrix {
    kron(&pauli(p), &pauli(q))
}

pub(crate) fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    debug_assert!(a.dim == 2 && b.dim == 2);
    let mut out = CMatrix::zeros_unchecked(4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of two 2x2 matrices.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    for m in [a, b] {
        if m.dim != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: m.dim,
            });
        }
    }
    Ok(kron(a, b))
}

fn require_dim(m: &CMatrix, dim: usize) -> Result<()> {
    if m.dim == dim {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: dim,
            found: m.dim,
        })
    }
}

/// Partial transpose of a two-qubit operator on the chosen factor.
/// Pure index permutation, so applying it twice is exact.
pub fn partial_transpose(rho: &CMatrix, subsystem: Subsystem) -> Result<CMatrix> {
    require_dim(rho, 4)?;
    let mut out = CMatrix::zeros_unchecked(4);
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    let (r, c) = match subsystem {
                        Subsystem::A => (2 * j + k, 2 * i + l),
                        Subsystem::B => (2 * i + l, 2 * j + k),
                    };
                    out[(r, c)] = rho[(2 * i + k, 2 * j + l)];
                }
            }
        }
    }
    Ok(out)
}

/// Spectrum of a Hermitian matrix; eigenvalues descending, eigenvectors
/// stored as the matching columns of `eigenvectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, index: usize) -> Vec<Complex64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|r| self.eigenvectors[(r, index)]).collect()
    }

    /// `Σ f(e_i) v_i v_i^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvectors.dim();
        let mut out = CMatrix::zeros_unchecked(n);
        for (idx, &e) in self.eigenvalues.iter().enumerate() {
            let w = f(e);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] +=
                        self.eigenvectors[(i, idx)] * self.eigenvectors[(j, idx)].conj() * w;
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(|e| e)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition by cyclic complex Jacobi rotations.
pub fn hermitian_eig(m: &CMatrix) -> Result<EigenDecomposition> {
    let deviation = m.hermiticity_defect();
    if deviation > HERMITIAN_TOL || !deviation.is_finite() {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.dim;
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity_unchecked(n);
    let stop = JACOBI_TOL * a.frobenius_norm().max(1.0);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                // Rotate the phase of a_pq away, then apply the real
                // symmetric Jacobi rotation that annihilates it.
                let phase = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let mut g = CMatrix::identity_unchecked(n);
                g[(p, p)] = Complex64::new(c, 0.0);
                g[(p, q)] = Complex64::new(s, 0.0);
                g[(q, p)] = -phase.conj() * s;
                g[(q, q)] = phase.conj() * c;

                a = g.adjoint() * a * g;
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                for i in 0..n {
                    a[(i, i)].im = 0.0;
                }
                v = v * g;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = CMatrix::zeros_unchecked(n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, col)] = v[(r, src)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    let min = eig.min_eigenvalue();
    if min < -PSD_CLAMP {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    // Eigenvalues at the Jacobi noise floor are exact zeros; their square
    // roots would otherwise inject O(1e-8) noise.
    let floor = JACOBI_TOL * m.frobenius_norm().max(1.0);
    Ok(eig
        .reconstruct_with(|e| if e <= floor { 0.0 } else { e.sqrt() })
        .hermitian_part())
}

/// `Tr[a · b]`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
    require_dim(b, a.dim)?;
    let n = a.dim;
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(s)
}

/// Real part of `Tr[a · b]` for Hermitian pairs; the imaginary part is
/// returned alongside for diagnostics.
pub fn trace_product_real(a: &CMatrix, b: &CMatrix) -> Result<(f64, f64)> {
    let z = trace_product(a, b)?;
    Ok((z.re, z.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell_phi_plus() -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::outer(&[c(h, 0.0), ZERO, ZERO, c(h, 0.0)]).unwrap()
    }

    #[test]
    fn tensor_identity_and_diagonal() {
        let i2 = pauli(0);
        assert_eq!(tensor(&i2, &i2).unwrap(), CMatrix::identity(4).unwrap());
        let zz = tensor(&pauli(3), &pauli(3)).unwrap();
        assert_eq!(zz, CMatrix::diag_real(&[1.0, -1.0, -1.0, 1.0]).unwrap());
    }

    #[test]
    fn tensor_x_z_block_layout() {
        // σ1 ⊗ σ3 = [[0, Z], [Z, 0]] with Z = diag(1, -1)
        let expected = CMatrix::from_real_rows(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, -1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, -1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(tensor(&pauli(1), &pauli(3)).unwrap(), expected);
    }

    #[test]
    fn tensor_rejects_four_by_four() {
        let i4 = CMatrix::identity(4).unwrap();
        assert!(matches!(
            tensor(&i4, &pauli(0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_transpose_of_product_state() {
        let ra = CMatrix::from_rows(&[&[c(0.7, 0.0), c(0.1, 0.2)], &[c(0.1, -0.2), c(0.3, 0.0)]])
            .unwrap();
        let rb = CMatrix::from_rows(&[&[c(0.4, 0.0), c(0.0, -0.3)], &[c(0.0, 0.3), c(0.6, 0.0)]])
            .unwrap();
        let rho = tensor(&ra, &rb).unwrap();
        let pt = partial_transpose(&rho, Subsystem::B).unwrap();
        assert_eq!(pt, tensor(&ra, &rb.transpose()).unwrap());
        let pta = partial_transpose(&rho, Subsystem::A).unwrap();
        assert_eq!(pta, tensor(&ra.transpose(), &rb).unwrap());
    }

    #[test]
    fn partial_transpose_of_maximally_mixed() {
        let mixed = CMatrix::identity(4).unwrap().scale(0.25);
        assert_eq!(partial_transpose(&mixed, Subsystem::A).unwrap(), mixed);
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = partial_transpose(&bell_phi_plus(), Subsystem::B).unwrap();
        let eig = hermitian_eig(&pt).unwrap();
        for (got, want) in eig.eigenvalues.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn bell_partial_transpose_characteristic_polynomial() {
        // PT(Φ+) = swap/2; det(PT - x I) = (1/2 - x)^3 (-1/2 - x).
        // Independent check: evaluate the determinant by cofactor expansion at
        // the claimed negative root and at a non-root.
        let pt = partial_transpose(&bell_phi_plus(), Subsystem::B).unwrap();
        let det_at = |x: f64| {
            let mut m = [[0.0f64; 4]; 4];
            for (i, row) in m.iter_mut().enumerate() {
                for (j, e) in row.iter_mut().enumerate() {
                    *e = pt[(i, j)].re - if i == j { x } else { 0.0 };
                }
            }
            det4(&m)
        };
        assert_abs_diff_eq!(det_at(-0.5), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(det_at(0.0), -1.0 / 16.0, epsilon = 1e-14);
        let eig = hermitian_eig(&pt).unwrap();
        assert_abs_diff_eq!(eig.min_eigenvalue(), -0.5, epsilon = 1e-12);
        assert_eq!(eig.eigenvalues.iter().filter(|&&e| e < 0.0).count(), 1);
    }

    fn det3(m: [[f64; 3]; 3]) -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    fn det4(m: &[[f64; 4]; 4]) -> f64 {
        (0..4)
            .map(|c| {
                let mut minor = [[0.0; 3]; 3];
                for r in 1..4 {
                    let mut cc = 0;
                    for (k, &x) in m[r].iter().enumerate() {
                        if k != c {
                            minor[r - 1][cc] = x;
                            cc += 1;
                        }
                    }
                }
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][c] * det3(minor)
            })
            .sum()
    }

    #[test]
    fn eig_of_diagonal_and_pauli() {
        let d = CMatrix::diag_real(&[1.0, 3.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            hermitian_eig(&d).unwrap().eigenvalues,
            vec![3.0, 1.0, 1.0, 0.0]
        );
        let eig = hermitian_eig(&pauli(1)).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eig.eigenvalues[1], -1.0, epsilon = 1e-15);
        let eig = hermitian_eig(&pauli(2)).unwrap();
        assert_abs_diff_eq!(
            eig.reconstruct().max_abs_diff(&pauli(2)),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn psd_sqrt_special_cases() {
        let p = CMatrix::outer(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!(psd_sqrt(&p).unwrap().max_abs_diff(&p) < 1e-12);
        let a = CMatrix::identity(4).unwrap().scale(0.49);
        assert!(
            psd_sqrt(&a)
                .unwrap()
                .max_abs_diff(&CMatrix::identity(4).unwrap().scale(0.7))
                < 1e-14
        );
    }

    #[test]
    fn psd_sqrt_matches_unsharp_closed_form() {
        // Q = λP + (1-λ)I/2 with P = |0><0|; √Q has I and σ3 coefficients
        // (√(1+λ) ± √(1-λ)) / (2√2).
        let lambda: f64 = 0.6;
        let q = CMatrix::diag_real(&[(1.0 + lambda) / 2.0, (1.0 - lambda) / 2.0]).unwrap();
        let (sp, sm) = ((1.0 + lambda).sqrt(), (1.0 - lambda).sqrt());
        let k = 1.0 / (2.0 * 2f64.sqrt());
        let closed = pauli(0).scale(k * (sp + sm)) + pauli(3).scale(k * (sp - sm));
        assert!(psd_sqrt(&q).unwrap().max_abs_diff(&closed) < 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_negative_input() {
        let m = CMatrix::diag_real(&[1.0, -1e-6]).unwrap();
        assert!(matches!(psd_sqrt(&m), Err(Error::NotPositive { .. })));
        // Round-off-sized negatives are clamped.
        let m = CMatrix::diag_real(&[1.0, -1e-12]).unwrap();
        assert!(psd_sqrt(&m).is_ok());
    }

    #[test]
    fn trace_product_examples() {
        let rho = bell_phi_plus();
        let i4 = CMatrix::identity(4).unwrap();
        assert_abs_diff_eq!(trace_product(&i4, &rho).unwrap().re, 1.0, epsilon = 1e-15);
        let zz = pauli_pair(3, 3);
        assert_abs_diff_eq!(trace_product(&zz, &rho).unwrap().re, 1.0, epsilon = 1e-15);
        let ket01 = CMatrix::outer(&[ZERO, ONE, ZERO, ZERO]).unwrap();
        assert_abs_diff_eq!(
            trace_product(&zz, &ket01).unwrap().re,
            -1.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            trace_product(&zz, &pauli(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn arb_hermitian(dim: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec(-1.0f64..1.0, dim * dim * 2).prop_map(move |xs| {
            let mut m = CMatrix::zeros(dim).unwrap();
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] = c(xs[2 * (i * dim + j)], xs[2 * (i * dim + j) + 1]);
                }
            }
            m.hermitian_part()
        })
    }

    fn arb_psd() -> impl Strategy<Value = CMatrix> {
        arb_hermitian(4).prop_map(|h| h * h)
    }

    proptest! {
        #[test]
        fn eig_reconstructs_and_is_orthonormal(m in arb_hermitian(4)) {
            let eig = hermitian_eig(&m).unwrap();
            prop_assert!(eig.reconstruct().max_abs_diff(&m) <= 1e-12);
            let v = eig.eigenvectors;
            let gram = v.adjoint() * v;
            prop_assert!(gram.max_abs_diff(&CMatrix::identity(4).unwrap()) <= 1e-12);
            prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn psd_sqrt_squares_back(m in arb_psd()) {
            let r = psd_sqrt(&m).unwrap();
            prop_assert!((r * r).max_abs_diff(&m) <= 1e-10);
            prop_assert!(r.is_hermitian(1e-14));
            prop_assert!(hermitian_eig(&r).unwrap().min_eigenvalue() >= -1e-10);
        }

        #[test]
        fn partial_transpose_is_an_involution(m in arb_hermitian(4), on_a in any::<bool>()) {
            let s = if on_a { Subsystem::A } else { Subsystem::B };
            let back = partial_transpose(&partial_transpose(&m, s).unwrap(), s).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn tensor_spectrum_is_product_of_spectra(a in arb_hermitian(2), b in arb_hermitian(2)) {
            let ea = hermitian_eig(&a).unwrap().eigenvalues;
            let eb = hermitian_eig(&b).unwrap().eigenvalues;
            let mut products: Vec<f64> = ea.iter().flat_map(|x| eb.iter().map(move |y| x * y)).collect();
            products.sort_by(|x, y| y.total_cmp(x));
            let got = hermitian_eig(&tensor(&a, &b).unwrap()).unwrap().eigenvalues;
            for (g, w) in got.iter().zip(&products) {
                prop_assert!((g - w).abs() <= 1e-10);
            }
        }

        #[test]
        fn trace_product_conjugate_symmetry(a in arb_hermitian(4), b in arb_hermitian(4)) {
            let lhs = trace_product(&a, &b).unwrap();
            let rhs = trace_product(&b.adjoint(), &a.adjoint()).unwrap().conj();
            prop_assert!((lhs - rhs).norm() <= 1e-12);
            prop_assert!(lhs.im.abs() <= 1e-12);
        }
    }
}
