//! Coefficient recursions for the four correlators
//! `<σ3σ3>, <Iσ3>, <σ3σ1>, <Iσ1>` of the general family under repeated
//! unsharp Lüders updates, and the six-term decomposition of the success
//! probability built on them.
//!
//! With `c = (<33>, <03>, <31>, <01>)` of the initial state:
//!
//! ```text
//! <33>_k = R1 c33 + R2 c03 + R3 c31 + R4 c01
//! <03>_k = R2 c33 + R1 c03 + R4 c31 + R3 c01
//! <31>_k = R'1 c31 + R'2 c01 + R'3 c33 + R'4 c03
//! <01>_k = R'2 c31 + R'1 c01 + R'4 c33 + R'3 c03
//! ```

use serde::Serialize;

use crate::error::{check_range, Result};
use crate::states::{CorrelatorTable, GeneralFamilyParams, StateLabel};

/// Coefficient of `Σ_b Q_k^b` in `P_k = 1/2 + c Σ_b Q_k^b`.
///
/// Measured against brute-force success probabilities at `k = 1` (see
/// [`calibrate_success_normalization`]) and frozen here.
pub const SUCCESS_NORMALIZATION: f64 = 0.5;

/// `R_1..R_4` and `R'_1..R'_4` after `k` rounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RState {
    pub r: [f64; 4],
    pub r_prime: [f64; 4],
    pub k: usize,
    pub theta: f64,
    pub lambdas: Vec<f64>,
}

impl RState {
    /// The identity map on correlators.
    pub fn initial(theta: f64) -> Self {
        Self {
            r: [1.0, 0.0, 0.0, 0.0],
            r_prime: [1.0, 0.0, 0.0, 0.0],
            k: 0,
            theta,
            lambdas: Vec::new(),
        }
    }

    /// Advances through every sharpness in `lambdas`.
    pub fn after(theta: f64, lambdas: &[f64]) -> Result<Self> {
        let mut s = Self::initial(theta);
        for &l in lambdas {
            s = r_step(&s, l)?;
        }
        Ok(s)
    }
}

pub(crate) fn r_step_impl(state: &RState, lambda: f64, flip_cross_sign: bool) -> RState {
    let th = state.theta;
    let alpha = (1.0 - lambda * lambda).max(0.0).sqrt();
    let (s4, c4) = (4.0 * th).sin_cos();
    let beta = 0.25 * (1.0 - alpha);
    let a = 0.5 * (1.0 + alpha) + beta * (1.0 + c4);
    let a_prime = 0.5 * (1.0 + alpha) - beta * (1.0 + c4);
    let b = beta * s4;
    let bp = lambda * beta * (1.0 - c4);
    let mut bs = lambda * beta * s4;
    if flip_cross_sign {
        bs = -bs;
    }

    let [r1, r2, r3, r4] = state.r;
    let [p1, p2, p3, p4] = state.r_prime;
    let r = [
        a * r1 + b * p3 + bp * r2 - bs * p4,
        a * r2 + b * p4 + bp * r1 - bs * p3,
        a * r3 + b * p1 + bp * r4 - bs * p2,
        a * r4 + b * p2 + bp * r3 - bs * p1,
    ];
    let r_prime = [
        a_prime * p1 + b * r3 - bp * p2 - bs * r4,
        a_prime * p2 + b * r4 - bp * p1 - bs * r3,
        a_prime * p3 + b * r1 - bp * p4 - bs * r2,
        a_prime * p4 + b * r2 - bp * p3 - bs * r1,
    ];
    let mut lambdas = state.lambdas.clone();
    lambdas.push(lambda);
    RState {
        r,
        r_prime,
        k: state.k + 1,
        theta: th,
        lambdas,
    }
}

/// One round of the recursion with `α = √(1 - λ²)`.
///
/// The `R'` diagonal coefficient is `(1+α)/2 - (1-α)(1+cos4θ)/4`; the
/// `R` diagonal coefficient carries the `+` sign.
pub fn r_step(state: &RState, lambda_next: f64) -> Result<RState> {
    check_range(
        "lambda",
        lambda_next,
        "[0, 1]",
        (0.0..=1.0).contains(&lambda_next),
    )?;
    Ok(r_step_impl(state, lambda_next, false))
}

/// Correlators `(<33>, <03>, <31>, <01>)` after `state.k` rounds.
pub fn correlators_via_r(initial: &CorrelatorTable, state: &RState) -> [f64; 4] {
    let (c33, c03, c31, c01) = (
        initial.get(3, 3),
        initial.get(0, 3),
        initial.get(3, 1),
        initial.get(0, 1),
    );
    let [r1, r2, r3, r4] = state.r;
    let [p1, p2, p3, p4] = state.r_prime;
    [
        r1 * c33 + r2 * c03 + r3 * c31 + r4 * c01,
        r2 * c33 + r1 * c03 + r4 * c31 + r3 * c01,
        p1 * c31 + p2 * c01 + p3 * c33 + p4 * c03,
        p2 * c31 + p1 * c01 + p4 * c33 + p3 * c03,
    ]
}

/// The six terms `A..F` of `Q_k^b` and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QBreakdown {
    pub terms: [f64; 6],
    pub q: f64,
}

/// Six-term expression from the coefficients after `k - 1` rounds and the
/// round-`k` sharpness.
pub fn q_from_state(prev: &RState, lambda: f64, mu: f64) -> QBreakdown {
    let (s, c) = (2.0 * prev.theta).sin_cos();
    let [r1, r2, r3, r4] = prev.r;
    let [p1, p2, p3, p4] = prev.r_prime;
    let l = lambda;
    let nu = 1.0 - mu;
    let minus = 1.0 - l + (1.0 + l) * c;
    let terms = [
        l * mu / 4.0 * (r1 + r2) * (1.0 + l + (1.0 - l) * c),
        l * (1.0 - l) * mu / 4.0 * s * (p3 + p4),
        l / 4.0 * s * nu * (r3 - r4) * minus,
        l / 4.0 * s * s * nu * (1.0 + l) * (p1 - p2),
        l / 4.0 * c * nu * (r1 - r2) * minus,
        l / 4.0 * s * c * nu * (1.0 + l) * (p3 - p4),
    ];
    QBreakdown {
        terms,
        q: terms.iter().sum(),
    }
}

/// `Q_k^b` for state `label` of a general-family ensemble; `lambdas` must
/// hold at least `k` sharpness values.
pub fn q_breakdown(
    k: usize,
    label: StateLabel,
    params: &GeneralFamilyParams,
    lambdas: &[f64],
) -> Result<QBreakdown> {
    check_range(
        "k",
        k as f64,
        "[1, len(lambdas)]",
        k >= 1 && k <= lambdas.len(),
    )?;
    let prev = RState::after(params.theta(), &lambdas[..k - 1])?;
    let l = lambdas[k - 1];
    check_range("lambda", l, "[0, 1]", (0.0..=1.0).contains(&l))?;
    Ok(q_from_state(&prev, l, params.mu(label)))
}

/// `1/2 + c (Q_k^1 + Q_k^2)` with the frozen normalization.
pub fn success_from_q(k: usize, params: &GeneralFamilyParams, lambdas: &[f64]) -> Result<f64> {
    let q1 = q_breakdown(k, StateLabel::First, params, lambdas)?.q;
    let q2 = q_breakdown(k, StateLabel::Second, params, lambdas)?.q;
    Ok(0.5 + SUCCESS_NORMALIZATION * (q1 + q2))
}

/// `(P_1 - 1/2) / Σ_b Q_1^b` with `P_1` from the brute-force simulator.
pub fn calibrate_success_normalization(params: &GeneralFamilyParams, lambda1: f64) -> Result<f64> {
    use crate::measurement::unsharp_general_povm;
    use crate::protocol::success_probability;

    let [r1, r2] = crate::states::general_pair(params)?;
    let povm = unsharp_general_povm(params.theta(), lambda1)?;
    let p = success_probability(&r1, &r2, &povm);
    let q = q_breakdown(1, StateLabel::First, params, &[lambda1])?.q
        + q_breakdown(1, StateLabel::Second, params, &[lambda1])?.q;
    Ok((p - 0.5) / q)
}

/// One failed sign claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignViolation {
    pub k: usize,
    pub claim: &'static str,
    pub value: f64,
}

/// Checks, for every `k ≥ 1` along `lambdas`, the sign claims made for
/// `θ ∈ (π/4, π/2)`: `R1 ± R2 > 0`, `R'3 ± R'4 < 0`, `R3 - R4 < 0`,
/// `R'1 - R'2 > 0`. At `θ = π/2`, `R'3 ± R'4` and `R3 - R4` vanish
/// identically, so that endpoint is excluded.
pub fn sign_table_violations(theta: f64, lambdas: &[f64]) -> Result<Vec<SignViolation>> {
    check_range(
        "theta",
        theta,
        "(pi/4, pi/2)",
        theta > std::f64::consts::FRAC_PI_4 && theta < std::f64::consts::FRAC_PI_2,
    )?;
    let mut out = Vec::new();
    let mut s = RState::initial(theta);
    for &l in lambdas {
        s = r_step(&s, l)?;
        let [r1, r2, r3, r4] = s.r;
        let [p1, p2, p3, p4] = s.r_prime;
        let claims: [(&'static str, f64, bool); 6] = [
            ("R1+R2>0", r1 + r2, r1 + r2 > 0.0),
            ("R1-R2>0", r1 - r2, r1 - r2 > 0.0),
            ("R'3+R'4<0", p3 + p4, p3 + p4 < 0.0),
            ("R'3-R'4<0", p3 - p4, p3 - p4 < 0.0),
            ("R3-R4<0", r3 - r4, r3 - r4 < 0.0),
            ("R'1-R'2>0", p1 - p2, p1 - p2 > 0.0),
        ];
        for (claim, value, ok) in claims {
            if !ok {
                out.push(SignViolation {
                    k: s.k,
                    claim,
                    value,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::unsharp_general_povm;
    use crate::protocol::{luders_update, success_probability};
    use crate::states::{correlators, general_pair};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn zero_sharpness_is_identity() {
        let s = r_step(&RState::initial(1.1), 0.0).unwrap();
        assert_eq!(s.r, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.r_prime, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.k, 1);
    }

    #[test]
    fn half_pi_step() {
        let s = r_step(&RState::initial(FRAC_PI_2), 0.6).unwrap();
        assert_abs_diff_eq!(s.r[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.r[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.r[2], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.r[3], 0.0, epsilon = 1e-15);
        // R'1 = (1+α)/2 - (1-α)/2 = α at θ = π/2.
        assert_abs_diff_eq!(s.r_prime[0], 0.8, epsilon = 1e-15);
        assert!(r_step(&s, 1.2).is_err());
    }

    #[test]
    fn correlators_identity_and_linearity() {
        let p = GeneralFamilyParams::new(0.3, 0.6, 1.0).unwrap();
        let [r1, _] = general_pair(&p).unwrap();
        let t = correlators(&r1);
        let got = correlators_via_r(&t, &RState::initial(1.0));
        assert_eq!(got, [t.get(3, 3), t.get(0, 3), t.get(3, 1), t.get(0, 1)]);
        let zero = CorrelatorTable {
            values: [[0.0; 4]; 4],
        };
        let s = RState::after(1.0, &[0.3, 0.7]).unwrap();
        assert_eq!(correlators_via_r(&zero, &s), [0.0; 4]);
    }

    #[test]
    fn first_round_terms() {
        let p = GeneralFamilyParams::new(0.5, 0.5, FRAC_PI_4).unwrap();
        for label in StateLabel::BOTH {
            let q = q_breakdown(1, label, &p, &[0.5]).unwrap();
            assert_eq!(q.terms[1], 0.0);
            assert_eq!(q.terms[2], 0.0);
            assert_eq!(q.terms[5], 0.0);
            assert_eq!(q.q, q.terms.iter().sum::<f64>());
        }
        assert_abs_diff_eq!(
            success_from_q(1, &p, &[0.5]).unwrap(),
            0.6875,
            epsilon = 1e-15
        );
    }

    #[test]
    fn normalization_calibrates_to_half() {
        for (mu1, mu2, theta, l) in [
            (0.5, 0.5, FRAC_PI_4, 0.5),
            (0.2, 0.7, 1.2, 0.3),
            (0.9, 0.1, 0.4, 0.8),
        ] {
            let p = GeneralFamilyParams::new(mu1, mu2, theta).unwrap();
            let c = calibrate_success_normalization(&p, l).unwrap();
            assert_abs_diff_eq!(c, SUCCESS_NORMALIZATION, epsilon = 1e-12);
        }
    }

    #[test]
    fn injected_sign_defect_is_visible() {
        let p = GeneralFamilyParams::new(0.3, 0.6, 1.0).unwrap();
        let [r1, _] = general_pair(&p).unwrap();
        let t = correlators(&r1);
        let good = r_step(&RState::initial(1.0), 0.7).unwrap();
        let bad = r_step_impl(&RState::initial(1.0), 0.7, true);
        let brute =
            correlators(&luders_update(&r1, &unsharp_general_povm(1.0, 0.7).unwrap()).unwrap());
        let want = [
            brute.get(3, 3),
            brute.get(0, 3),
            brute.get(3, 1),
            brute.get(0, 1),
        ];
        let dev = |s: &RState| {
            correlators_via_r(&t, s)
                .iter()
                .zip(want)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        assert!(dev(&good) < 1e-14);
        assert!(dev(&bad) > 1e-3);
    }

    proptest! {
        #[test]
        fn recursion_matches_brute_force(
            mu1 in 0.01f64..0.99, mu2 in 0.01f64..0.99, theta in 0.01f64..=FRAC_PI_2,
            lambdas in proptest::collection::vec(0.0f64..1.0, 1..8),
        ) {
            let p = GeneralFamilyParams::new(mu1, mu2, theta).unwrap();
            let mut states = general_pair(&p).unwrap();
            let initial = states.map(|r| correlators(&r));
            let mut rs = RState::initial(theta);
            for &l in &lambdas {
                let povm = unsharp_general_povm(theta, l).unwrap();
                let k = rs.k + 1;
                let p_brute = success_probability(&states[0], &states[1], &povm);
                let p_q = success_from_q(k, &p, &lambdas).unwrap();
                prop_assert!((p_brute - p_q).abs() <= 1e-10);
                states = [luders_update(&states[0], &povm).unwrap(), luders_update(&states[1], &povm).unwrap()];
                rs = r_step(&rs, l).unwrap();
                for (init, rho) in initial.iter().zip(states.iter()) {
                    let t = correlators(rho);
                    let brute = [t.get(3, 3), t.get(0, 3), t.get(3, 1), t.get(0, 1)];
                    let via = correlators_via_r(init, &rs);
                    for (a, b) in brute.iter().zip(via.iter()) {
                        prop_assert!((a - b).abs() <= 1e-10);
                    }
                }
            }
        }

        #[test]
        fn sign_table_holds(theta in (FRAC_PI_4 + 1e-9)..(FRAC_PI_2 - 1e-9), lambdas in proptest::collection::vec(1e-6f64..1.0, 1..10)) {
            let v = sign_table_violations(theta, &lambdas).unwrap();
            prop_assert!(v.is_empty(), "{:?}", v);
        }

        #[test]
        fn q_positive_below_quarter_pi(
            mu in 0.01f64..0.99, theta in 0.01f64..=FRAC_PI_4,
            lambdas in proptest::collection::vec(0.01f64..1.0, 1..10),
        ) {
            let p = GeneralFamilyParams::new(mu, mu, theta).unwrap();
            for k in 1..=lambdas.len() {
                prop_assert!(q_breakdown(k, StateLabel::First, &p, &lambdas).unwrap().q > 0.0);
            }
        }
    }
}
