//! Local POVMs for both ensemble families.
//!
//! Every element is a product `A ⊗ B` of two 2x2 effects. Unsharp effects
//! `Q = λP + (1-λ)I/2` keep their projector and sharpness so that square
//! roots can be taken in closed form:
//! `√Q = [(√(1+λ) + √(1-λ)) I + (√(1+λ) - √(1-λ)) σ_n] / (2√2)` with
//! `σ_n = 2P - I`.

use num_complex::Complex64;

use crate::error::{check_range, Error, Result};
use crate::linalg::{hermitian_eig, kron, pauli, psd_sqrt, CMatrix};
use crate::states::{EnsembleSpec, StateLabel};

const PROJECTOR_TOL: f64 = 1e-12;
/// Tolerance used when a POVM is validated at construction.
pub const POVM_TOL: f64 = 1e-12;

/// One local (2x2) effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalEffect {
    /// `λP + (1-λ)I/2` for a rank-1 projector `P`.
    Unsharp { projector: CMatrix, lambda: f64 },
    /// Any other PSD effect; square roots go through the eigensolver.
    General(CMatrix),
}

impl LocalEffect {
    pub fn matrix(&self) -> CMatrix {
        match self {
            LocalEffect::Unsharp { projector, lambda } => unsharp_unchecked(projector, *lambda),
            LocalEffect::General(m) => *m,
        }
    }

    /// Principal square root; closed form for unsharp effects.
    pub fn sqrt(&self) -> Result<CMatrix> {
        match self {
            LocalEffect::Unsharp { projector, lambda } => Ok(unsharp_sqrt(projector, *lambda)),
            LocalEffect::General(m) => psd_sqrt(m),
        }
    }

    /// Square root via the eigensolver regardless of the variant.
    pub fn sqrt_by_eig(&self) -> Result<CMatrix> {
        psd_sqrt(&self.matrix())
    }
}

/// The `(A-side, B-side)` factorization of one POVM element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFactors {
    pub alice: LocalEffect,
    pub bob: LocalEffect,
}

impl LocalFactors {
    pub fn product(&self) -> CMatrix {
        kron(&self.alice.matrix(), &self.bob.matrix())
    }
}

/// Four-outcome product POVM with an explicit guess for each outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmSet {
    elements: [CMatrix; 4],
    local_factors: [LocalFactors; 4],
    guess_map: [StateLabel; 4],
    sharpness: f64,
}

impl PovmSet {
    /// Builds the elements from their local factors and validates the set.
    pub fn from_factors(
        local_factors: [LocalFactors; 4],
        guess_map: [StateLabel; 4],
        sharpness: f64,
    ) -> Result<Self> {
        let elements = local_factors.map(|f| f.product());
        let povm = Self::new_unchecked(elements, local_factors, guess_map, sharpness);
        let report = assert_povm(&povm, POVM_TOL);
        if !report.passed {
            return Err(Error::PovmInvariant(report.to_string()));
        }
        Ok(povm)
    }

    /// Assembles a set without any validation; intended for diagnostics
    /// (for example feeding a corrupted set to [`assert_povm`]).
    pub fn new_unchecked(
        elements: [CMatrix; 4],
        local_factors: [LocalFactors; 4],
        guess_map: [StateLabel; 4],
        sharpness: f64,
    ) -> Self {
        Self {
            elements,
            local_factors,
            guess_map,
            sharpness,
        }
    }

    pub fn elements(&self) -> &[CMatrix; 4] {
        &self.elements
    }

    pub fn local_factors(&self) -> &[LocalFactors; 4] {
        &self.local_factors
    }

    pub fn guess_map(&self) -> &[StateLabel; 4] {
        &self.guess_map
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    /// Sum of the elements whose outcome is read as `label`.
    pub fn guess_operator(&self, label: StateLabel) -> CMatrix {
        let mut out = CMatrix::zeros_unchecked(4);
        for (e, g) in self.elements.iter().zip(self.guess_map.iter()) {
            if *g == label {
                out += *e;
            }
        }
        out
    }
}

/// `√A ⊗ √B` for each element of a [`PovmSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtFactors {
    pub factors: [CMatrix; 4],
}

fn check_lambda(lambda: f64) -> Result<()> {
    check_range("lambda", lambda, "[0, 1]", (0.0..=1.0).contains(&lambda))
}

fn unsharp_unchecked(p: &CMatrix, lambda: f64) -> CMatrix {
    p.scale(lambda) + pauli(0).scale((1.0 - lambda) / 2.0)
}

fn unsharp_sqrt(p: &CMatrix, lambda: f64) -> CMatrix {
    let sp = (1.0 + lambda).sqrt();
    let sm = (1.0 - lambda).max(0.0).sqrt();
    let k = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
    let sigma_n = p.scale(2.0) - pauli(0);
    pauli(0).scale(k * (sp + sm)) + sigma_n.scale(k * (sp - sm))
}

fn check_projector(p: &CMatrix) -> Result<()> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: p.dim(),
        });
    }
    let idempotency = (*p * *p - *p).max_abs();
    let hermiticity = p.hermiticity_defect();
    let rank = (p.trace() - Complex64::new(1.0, 0.0)).norm();
    let residual = idempotency.max(hermiticity).max(rank);
    if residual > PROJECTOR_TOL {
        return Err(Error::NotProjector { residual });
    }
    Ok(())
}

/// `λP + (1-λ)I/2` for a rank-1 projector `P`.
pub fn unsharp(p: &CMatrix, lambda: f64) -> Result<CMatrix> {
    check_projector(p)?;
    check_lambda(lambda)?;
    Ok(unsharp_unchecked(p, lambda))
}

fn unsharp_effect(p: CMatrix, lambda: f64) -> LocalEffect {
    LocalEffect::Unsharp {
        projector: p,
        lambda,
    }
}

fn basis_projector(i: usize) -> CMatrix {
    let mut m = CMatrix::zeros_unchecked(2);
    m[(i, i)] = Complex64::new(1.0, 0.0);
    m
}

/// `|ς><ς|` and `|ς⊥><ς⊥|` with `|ς> = cosθ|0> + sinθ|1>`.
pub fn varsigma_projectors(theta: f64) -> (CMatrix, CMatrix) {
    let (s, c) = theta.sin_cos();
    let p = CMatrix::from_real_rows(&[&[c * c, c * s], &[c * s, s * s]]).expect("2x2");
    let q = CMatrix::from_real_rows(&[&[s * s, -c * s], &[-c * s, c * c]]).expect("2x2");
    (p, q)
}

fn check_theta(theta: f64) -> Result<()> {
    check_range(
        "theta",
        theta,
        "(0, pi/2]",
        theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2,
    )
}

/// The four elements `A_0⊗B_{0|0}, A_0⊗B_{1|0}, A_1⊗B_{0|1}, A_1⊗B_{1|1}`,
/// every local factor smeared with the same sharpness `λ`.
pub fn unsharp_general_povm(theta: f64, lambda: f64) -> Result<PovmSet> {
    check_theta(theta)?;
    check_lambda(lambda)?;
    let (varsigma, varsigma_perp) = varsigma_projectors(theta);
    let a0 = unsharp_effect(basis_projector(0), lambda);
    let a1 = unsharp_effect(basis_projector(1), lambda);
    let factors = [
        LocalFactors {
            alice: a0,
            bob: unsharp_effect(basis_projector(0), lambda),
        },
        LocalFactors {
            alice: a0,
            bob: unsharp_effect(basis_projector(1), lambda),
        },
        LocalFactors {
            alice: a1,
            bob: unsharp_effect(varsigma, lambda),
        },
        LocalFactors {
            alice: a1,
            bob: unsharp_effect(varsigma_perp, lambda),
        },
    ];
    use StateLabel::{First, Second};
    PovmSet::from_factors(factors, [First, Second, First, Second], lambda)
}

/// The sharp (`λ = 1`) general-family measurement.
pub fn sharp_general_povm(theta: f64) -> Result<PovmSet> {
    unsharp_general_povm(theta, 1.0)
}

/// `Ō_1..Ō_4 = A_0⊗B_1, A_0⊗B_0, A_1⊗B_0, A_1⊗B_1` (unsharp computational
/// basis effects); outcomes 1 and 3 name the first state.
pub fn unsharp_special_povm(lambda: f64) -> Result<PovmSet> {
    check_lambda(lambda)?;
    let e = |i| unsharp_effect(basis_projector(i), lambda);
    let factors = [
        LocalFactors {
            alice: e(0),
            bob: e(1),
        },
        LocalFactors {
            alice: e(0),
            bob: e(0),
        },
        LocalFactors {
            alice: e(1),
            bob: e(0),
        },
        LocalFactors {
            alice: e(1),
            bob: e(1),
        },
    ];
    use StateLabel::{First, Second};
    PovmSet::from_factors(factors, [First, Second, First, Second], lambda)
}

/// The family-appropriate POVM at sharpness `λ`.
pub fn povm_for(ensemble: &EnsembleSpec, lambda: f64) -> Result<PovmSet> {
    match ensemble {
        EnsembleSpec::General(p) => unsharp_general_povm(p.theta(), lambda),
        EnsembleSpec::Special(_) => unsharp_special_povm(lambda),
    }
}

/// Lüders factors `√A ⊗ √B`, closed form where available.
pub fn sqrt_factors(povm: &PovmSet) -> SqrtFactors {
    let factors = povm.local_factors.map(|f| {
        let a = f.alice.sqrt().expect("validated POVM has PSD factors");
        let b = f.bob.sqrt().expect("validated POVM has PSD factors");
        kron(&a, &b)
    });
    SqrtFactors { factors }
}

/// Largest entrywise gap between the closed-form factors and the
/// eigensolver square roots of each local side.
pub fn sqrt_factor_deviation(povm: &PovmSet) -> Result<f64> {
    let closed = sqrt_factors(povm);
    let mut worst: f64 = 0.0;
    for (f, c) in povm.local_factors.iter().zip(closed.factors.iter()) {
        let by_eig = kron(&f.alice.sqrt_by_eig()?, &f.bob.sqrt_by_eig()?);
        worst = worst.max(by_eig.max_abs_diff(c));
    }
    Ok(worst)
}

/// Diagnostics produced by [`assert_povm`].
#[derive(Debug, Clone, PartialEq)]
pub struct PovmReport {
    pub completeness_residual: f64,
    pub min_eigenvalues: [f64; 4],
    pub factorization_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl std::fmt::Display for PovmReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let min = self
            .min_eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        write!(
            f,
            "{} (completeness {:.3e}, min eigenvalue {:.3e}, factorization {:.3e}, tol {:.1e})",
            if self.passed { "pass" } else { "fail" },
            self.completeness_residual,
            min,
            self.factorization_residual,
            self.tol
        )
    }
}

pub fn assert_povm(povm: &PovmSet, tol: f64) -> PovmReport {
    let mut sum = CMatrix::zeros_unchecked(4);
    for e in &povm.elements {
        sum += *e;
    }
    let completeness_residual = sum.max_abs_diff(&CMatrix::identity_unchecked(4));

    let min_eigenvalues = povm.elements.map(|e| {
        hermitian_eig(&e)
            .map(|d| d.min_eigenvalue())
            .unwrap_or(f64::NEG_INFINITY)
    });
    let factorization_residual = povm
        .elements
        .iter()
        .zip(povm.local_factors.iter())
        .map(|(e, f)| e.max_abs_diff(&f.product()))
        .fold(0.0, f64::max);

    let passed = completeness_residual <= tol
        && min_eigenvalues.iter().all(|&m| m >= -tol.max(1e-10))
        && factorization_residual <= tol;
    PovmReport {
        completeness_residual,
        min_eigenvalues,
        factorization_residual,
        tol,
        passed,
    }
}
