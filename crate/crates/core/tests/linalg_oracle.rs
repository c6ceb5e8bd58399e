//! The Jacobi eigensolver and PSD square root checked against nalgebra.

use approx::assert_abs_diff_eq;
use nalgebra::{Complex, Matrix4};
use num_complex::Complex64;
use proptest::prelude::*;

use ssdse::linalg::{hermitian_eig, psd_sqrt, CMatrix};

fn to_nalgebra(m: &CMatrix) -> Matrix4<Complex<f64>> {
    Matrix4::from_fn(|i, j| {
        let z = m[(i, j)];
        Complex::new(z.re, z.im)
    })
}

fn hermitian_from(entries: &[(f64, f64)]) -> CMatrix {
    let mut m = CMatrix::zeros(4).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let (re, im) = entries[4 * i + j];
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    (m + m.adjoint()).scale(0.5)
}

fn entries() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)
}

proptest! {
    #[test]
    fn eigenvalues_match_nalgebra(e in entries()) {
        let m = hermitian_from(&e);
        let ours = hermitian_eig(&m).unwrap();
        let mut theirs: Vec<f64> = to_nalgebra(&m).symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.eigenvalues.iter().zip(&theirs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-11);
        }
        assert!(ours.reconstruct().max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn psd_sqrt_matches_nalgebra(e in entries()) {
        let a = hermitian_from(&e);
        let psd = a * a;
        let ours = psd_sqrt(&psd).unwrap();
        let eig = to_nalgebra(&psd).symmetric_eigen();
        let roots = eig.eigenvalues.map(|x| Complex::new(x.max(0.0).sqrt(), 0.0));
        let theirs = eig.eigenvectors
            * Matrix4::from_diagonal(&roots)
            * eig.eigenvectors.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                let d = ours[(i, j)] - Complex64::new(theirs[(i, j)].re, theirs[(i, j)].im);
                prop_assert!(d.norm() < 1e-7, "entry ({i},{j}) off by {}", d.norm());
            }
        }
        prop_assert!((ours * ours).max_abs_diff(&psd) < 1e-11);
    }
}
