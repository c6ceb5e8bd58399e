//! Two-qubit density matrices, the two orthogonal-pair families used by the
//! protocol, Pauli correlators and Schmidt-form rotations.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::linalg::{self, hermitian_eig, pauli, pauli_pair, psd_sqrt, CMatrix};

/// Tolerance used when validating density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Schmidt coefficients at or below this are treated as product states.
pub const SCHMIDT_MIN: f64 = 1e-12;

/// A 4x4 Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: m.dim(),
            });
        }
        let defect = m.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:e})"
            )));
        }
        let m = m.hermitian_part();
        let tr = m.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min = hermitian_eig(&m)?.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    /// `|ψ><ψ|` for a normalized 4-vector.
    pub fn from_pure(psi: &[Complex64; 4]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("state norm^2 {norm} != 1")));
        }
        Self::new(CMatrix::outer(psi)?)
    }

    pub fn maximally_mixed() -> Self {
        Self(CMatrix::identity_unchecked(4).scale(0.25))
    }

    /// Wraps a matrix produced by a trace-preserving map of a valid state
    /// without re-running the eigenvalue check.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self(m.hermitian_part())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// `Tr[op · ρ]` (real part).
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        linalg::trace_product(op, &self.0)
            .map(|z| z.re)
            .expect("two-qubit observable")
    }

    /// `Tr[σ_p ⊗ σ_q ρ]`.
    pub fn correlator(&self, p: usize, q: usize) -> f64 {
        self.expectation(&pauli_pair(p, q))
    }

    /// `Tr[ρ σ]`, the overlap used as an orthogonality check.
    pub fn overlap(&self, other: &DensityMatrix) -> f64 {
        self.expectation(&other.0)
    }

    /// `(U_A ⊗ U_B) ρ (U_A ⊗ U_B)^dagger`.
    pub fn rotated(&self, local: &LocalUnitaries) -> DensityMatrix {
        DensityMatrix::from_trusted(self.0.conjugate_by(&local.joint()))
    }

    /// Frobenius distance between two states.
    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        (self.0 - other.0).frobenius_norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralFamilyParams {
    mu1: f64,
    mu2: f64,
    theta: f64,
}

impl GeneralFamilyParams {
    pub fn new(mu1: f64, mu2: f64, theta: f64) -> Result<Self> {
        check_range("mu1", mu1, "(0, 1)", mu1 > 0.0 && mu1 < 1.0)?;
        check_range("mu2", mu2, "(0, 1)", mu2 > 0.0 && mu2 < 1.0)?;
        check_range(
            "theta",
            theta,
            "(0, pi/2]",
            theta > 0.0 && theta <= FRAC_PI_2,
        )?;
        Ok(Self { mu1, mu2, theta })
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn mu(&self, label: StateLabel) -> f64 {
        match label {
            StateLabel::First => self.mu1,
            StateLabel::Second => self.mu2,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `√μ1|00> + √(1-μ1)|1ς>` and `√μ2|01> + √(1-μ2)|1ς⊥>` with
    /// `|ς> = cosθ|0> + sinθ|1>`, `|ς⊥> = -sinθ|0> + cosθ|1>`.
    pub fn vectors(&self) -> [[Complex64; 4]; 2] {
        let (s, c) = self.theta.sin_cos();
        let r = |x: f64| Complex64::new(x, 0.0);
        let a1 = self.mu1.sqrt();
        let b1 = (1.0 - self.mu1).sqrt();
        let a2 = self.mu2.sqrt();
        let b2 = (1.0 - self.mu2).sqrt();
        [
            [r(a1), r(0.0), r(b1 * c), r(b1 * s)],
            [r(0.0), r(a2), r(-b2 * s), r(b2 * c)],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecialFamilyParams {
    gamma1: f64,
    gamma2: f64,
}

impl SpecialFamilyParams {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        check_range("gamma1", gamma1, "(0, 1)", gamma1 > 0.0 && gamma1 < 1.0)?;
        check_range("gamma2", gamma2, "(0, 1)", gamma2 > 0.0 && gamma2 < 1.0)?;
        Ok(Self { gamma1, gamma2 })
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    /// `ϑ_b = √(γ_b (1 - γ_b))`, the off-diagonal weight of state `b`.
    pub fn vartheta(&self, label: StateLabel) -> f64 {
        let g = match label {
            StateLabel::First => self.gamma1,
            StateLabel::Second => self.gamma2,
        };
        (g * (1.0 - g)).sqrt()
    }

    /// `√γ1|01> + √(1-γ1)|10>` and `√γ2|00> + √(1-γ2)|11>`.
    pub fn vectors(&self) -> [[Complex64; 4]; 2] {
        let r = |x: f64| Complex64::new(x, 0.0);
        [
            [
                r(0.0),
                r(self.gamma1.sqrt()),
                r((1.0 - self.gamma1).sqrt()),
                r(0.0),
            ],
            [
                r(self.gamma2.sqrt()),
                r(0.0),
                r(0.0),
                r((1.0 - self.gamma2).sqrt()),
            ],
        ]
    }
}

/// Index of a state in the two-element ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StateLabel {
    First,
    Second,
}

impl StateLabel {
    pub const BOTH: [StateLabel; 2] = [StateLabel::First, StateLabel::Second];

    pub fn index(self) -> usize {
        match self {
            StateLabel::First => 0,
            StateLabel::Second => 1,
        }
    }

    /// `(-1)^(b+1)`: +1 for the first state, -1 for the second.
    pub fn sign(self) -> f64 {
        match self {
            StateLabel::First => 1.0,
            StateLabel::Second => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    General,
    Special,
}

/// Two orthogonal pure states prepared with equal priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EnsembleSpec {
    General(GeneralFamilyParams),
    Special(SpecialFamilyParams),
}

impl EnsembleSpec {
    pub const PRIORS: [f64; 2] = [0.5, 0.5];

    pub fn family(&self) -> Family {
        match self {
            EnsembleSpec::General(_) => Family::General,
            EnsembleSpec::Special(_) => Family::Special,
        }
    }

    pub fn vectors(&self) -> [[Complex64; 4]; 2] {
        match self {
            EnsembleSpec::General(p) => p.vectors(),
            EnsembleSpec::Special(p) => p.vectors(),
        }
    }

    pub fn states(&self) -> Result<[DensityMatrix; 2]> {
        match self {
            EnsembleSpec::General(p) => general_pair(p),
            EnsembleSpec::Special(p) => special_pair(p),
        }
    }
}

fn pair_from_vectors(vectors: [[Complex64; 4]; 2]) -> Result<[DensityMatrix; 2]> {
    let rho1 = DensityMatrix::from_pure(&vectors[0])?;
    let rho2 = DensityMatrix::from_pure(&vectors[1])?;
    let overlap = rho1.overlap(&rho2);
    if overlap.abs() > 1e-12 {
        return Err(Error::InvalidState(format!(
            "ensemble states are not orthogonal (overlap {overlap:e})"
        )));
    }
    Ok([rho1, rho2])
}

pub fn general_pair(p: &GeneralFamilyParams) -> Result<[DensityMatrix; 2]> {
    GeneralFamilyParams::new(p.mu1, p.mu2, p.theta)?;
    pair_from_vectors(p.vectors())
}

pub fn special_pair(p: &SpecialFamilyParams) -> Result<[DensityMatrix; 2]> {
    SpecialFamilyParams::new(p.gamma1, p.gamma2)?;
    pair_from_vectors(p.vectors())
}

/// All sixteen `Tr[σ_p ⊗ σ_q ρ]`, indexed `[p][q]` with `σ_0 = I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorTable {
    pub values: [[f64; 4]; 4],
}

impl CorrelatorTable {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.values[p][q]
    }
}

pub fn correlators(rho: &DensityMatrix) -> CorrelatorTable {
    let mut values = [[0.0; 4]; 4];
    for (p, row) in values.iter_mut().enumerate() {
        for (q, v) in row.iter_mut().enumerate() {
            *v = rho.correlator(p, q);
        }
    }
    CorrelatorTable { values }
}

/// A pair of local unitaries `(U_A, U_B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalUnitaries {
    pub alice: CMatrix,
    pub bob: CMatrix,
}

impl LocalUnitaries {
    pub fn identity() -> Self {
        Self {
            alice: pauli(0),
            bob: pauli(0),
        }
    }

    pub fn joint(&self) -> CMatrix {
        linalg::kron(&self.alice, &self.bob)
    }

    pub fn apply(&self, psi: &[Complex64; 4]) -> [Complex64; 4] {
        let u = self.joint();
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, z) in psi.iter().enumerate() {
                *o += u[(i, j)] * z;
            }
        }
        out
    }

    /// `‖U_A - I‖_F² + ‖U_B - I‖_F²`.
    pub fn distance_to_identity(&self) -> f64 {
        let i2 = pauli(0);
        (self.alice - i2).frobenius_norm().powi(2) + (self.bob - i2).frobenius_norm().powi(2)
    }
}

/// Local unitaries taking a pure state to `√m|01> + √(1-m)|10>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmidtForm {
    pub unitaries: LocalUnitaries,
    /// The smaller Schmidt coefficient, `m ∈ (0, 1/2]`.
    pub coefficient: f64,
}

/// `k = U diag(σ) W^dagger` for a 2x2 matrix, `σ` descending.
fn svd2(k: &CMatrix) -> (CMatrix, [f64; 2], CMatrix) {
    let gram = k.adjoint() * *k;
    let eig = hermitian_eig(&gram).expect("Gram matrix is Hermitian");
    let w = eig.eigenvectors;
    let sigma = [
        eig.eigenvalues[0].max(0.0).sqrt(),
        eig.eigenvalues[1].max(0.0).sqrt(),
    ];

    let column = |m: &CMatrix, c: usize| [m[(0, c)], m[(1, c)]];
    let apply = |v: [Complex64; 2]| {
        [
            k[(0, 0)] * v[0] + k[(0, 1)] * v[1],
            k[(1, 0)] * v[0] + k[(1, 1)] * v[1],
        ]
    };
    let tiny = 1e-300;
    let u1 = if sigma[0] > tiny {
        let kw = apply(column(&w, 0));
        [kw[0] / sigma[0], kw[1] / sigma[0]]
    } else {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    };
    // Second left vector: orthogonal complement of the first, phased so
    // that k w2 = σ2 u2.
    let mut u2 = [-u1[1].conj(), u1[0].conj()];
    let kw2 = apply(column(&w, 1));
    let proj = u2[0].conj() * kw2[0] + u2[1].conj() * kw2[1];
    if proj.norm() > tiny {
        let phase = proj / proj.norm();
        u2 = [u2[0] * phase, u2[1] * phase];
    }
    let u = CMatrix::from_rows(&[&[u1[0], u2[0]], &[u1[1], u2[1]]]).expect("2x2");
    (u, sigma, w)
}

fn unit_phase(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n > 1e-300 {
        z.conj() / n
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Schmidt rotation of a normalized two-qubit pure state.
///
/// Returns `U_A, U_B` with `(U_A ⊗ U_B)|ψ> = √m|01> + √(1-m)|10>`. The
/// remaining phase (and, for `m = 1/2`, unitary) freedom is fixed by
/// minimizing the Frobenius distance of the pair to the identity; when
/// that still ties, Alice's unitary is kept closest to the identity.
pub fn schmidt_rotation(psi: &[Complex64; 4]) -> Result<SchmidtForm> {
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidState(format!("state norm^2 {norm} != 1")));
    }
    let amp = CMatrix::from_rows(&[&[psi[0], psi[1]], &[psi[2], psi[3]]])?;
    let (v, sigma, w) = svd2(&amp);
    let m = sigma[1] * sigma[1];
    if m <= SCHMIDT_MIN {
        return Err(Error::ProductState {
            schmidt_coefficient: m,
        });
    }
    let x = pauli(1);

    let unitaries = if (sigma[0] - sigma[1]).abs() <= 1e-10 {
        // amp = s·N with N unitary; U_B^T = N^dagger U_A^dagger X, so
        // Re tr U_A + Re tr U_B = Re tr(U_A^dagger (I + X N^dagger)).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let n = amp.scale(1.0 / s);
        let k = pauli(0) + x * n.adjoint();
        let (ku, ks, kw) = svd2(&k);
        let mut polar = CMatrix::zeros_unchecked(2);
        for col in 0..2 {
            let mut phase = Complex64::new(1.0, 0.0);
            if ks[col] <= 1e-12 {
                // Null direction: free phase, chosen to maximize Re tr U_A.
                let overlap =
                    kw[(0, col)].conj() * ku[(0, col)] + kw[(1, col)].conj() * ku[(1, col)];
                phase = unit_phase(overlap);
            }
            for r in 0..2 {
                for c in 0..2 {
                    polar[(r, c)] += ku[(r, col)] * phase * kw[(c, col)].conj();
                }
            }
        }
        let alice = polar;
        let bob = (n.adjoint() * alice.adjoint() * x).transpose();
        LocalUnitaries { alice, bob }
    } else {
        // amp = V Σ W^dagger, U_A = X V^dagger, U_B = W^T, then the residual
        // diagonal phases diag(a, b) ⊗ diag(b*, a*) are chosen greedily.
        let alice = x * v.adjoint();
        let bob = w.transpose();
        let a = unit_phase(alice[(0, 0)] + bob[(1, 1)].conj());
        let b = unit_phase(alice[(1, 1)] + bob[(0, 0)].conj());
        let d1 = CMatrix::from_rows(&[
            &[a, Complex64::new(0.0, 0.0)],
            &[Complex64::new(0.0, 0.0), b],
        ])?;
        let d2 = CMatrix::from_rows(&[
            &[b.conj(), Complex64::new(0.0, 0.0)],
            &[Complex64::new(0.0, 0.0), a.conj()],
        ])?;
        LocalUnitaries {
            alice: d1 * alice,
            bob: d2 * bob,
        }
    };

    Ok(SchmidtForm {
        unitaries,
        coefficient: m,
    })
}

/// Local unitaries for a mixed state that was prepared from `psi`; used to
/// view later rounds of the protocol in the initial state's Schmidt frame.
pub fn schmidt_frame(psi: &[Complex64; 4]) -> Result<LocalUnitaries> {
    schmidt_rotation(psi).map(|s| s.unitaries)
}

/// Purity-preserving helper: the principal square root of a state.
pub fn sqrt_state(rho: &DensityMatrix) -> Result<CMatrix> {
    psd_sqrt(rho.matrix())
}
