//! Closed-form bound functions used in the positivity argument for
//! `k ≥ 3`, and a checker for completed protocol traces.

use serde::Serialize;

use crate::error::{check_range, Result};
use crate::protocol::ProtocolTrace;

fn alpha(lambda: f64) -> f64 {
    (1.0 - lambda * lambda).max(0.0).sqrt()
}

fn check_lambda_theta(lk: f64, lm: f64, theta: f64) -> Result<()> {
    check_range("lambda_k", lk, "(0, 1)", lk > 0.0 && lk < 1.0)?;
    check_range("lambda_k-1", lm, "(0, 1)", lm > 0.0 && lm < 1.0)?;
    check_range(
        "theta",
        theta,
        "(pi/4, pi/2]",
        theta > std::f64::consts::FRAC_PI_4 && theta <= std::f64::consts::FRAC_PI_2,
    )
}

/// `h(λ_k, λ_{k-1}, θ)`, transcribed as printed (`λ3 = λ_k`, `λ2 = λ_{k-1}`).
///
/// At `θ = π/2` the `csc 2θ` factor is cancelled by the `sin 2θ` and
/// `sin 4θ` it multiplies; the limit is evaluated there.
pub fn h_value(lambda_k: f64, lambda_km1: f64, theta: f64) -> Result<f64> {
    check_lambda_theta(lambda_k, lambda_km1, theta)?;
    let (l3, l2) = (lambda_k, lambda_km1);
    let (a2, a3) = (alpha(l2), alpha(l3));
    let (s2, c2) = (2.0 * theta).sin_cos();
    let (s4, c4) = (4.0 * theta).sin_cos();
    let mix2 = 1.0 - l2 + (1.0 + l2) * c4;
    // csc2θ · sin2θ = 1 and csc2θ · sin4θ = 2cos2θ.
    let value = (-1.0 + l3 - (1.0 + l3) * c2)
        * (1.0 + a2 + 0.5 * (-1.0 - a2) + 0.25 * (1.0 - a2) * mix2)
        - 0.25 * (1.0 + l3) * (1.0 + l2) * (1.0 - a2) * s2 * s4
        + 1.0 / (1.0 + l2)
            * (1.0 - l2 + (1.0 + l2) * c2).abs()
            * ((1.0 + l3) * (0.5 * (1.0 + a3) - 0.25 * (1.0 - a2) * mix2)
                + 0.25 * (1.0 + l2) * (1.0 - a2) * (1.0 - l3 + (1.0 + l3) * c2) * 2.0 * c2);
    Ok(value)
}

/// The auxiliary quantities `p, q, X, r, Y, W, Z` at one sharpness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParts {
    pub p: f64,
    pub q: f64,
    pub x: f64,
    pub r: f64,
    pub y: f64,
    pub w: f64,
    pub z: f64,
}

pub fn bound_parts(lambda: f64, theta: f64) -> BoundParts {
    let a = alpha(lambda);
    let (s2, c2) = (2.0 * theta).sin_cos();
    let c4 = (4.0 * theta).cos();
    let mix = 1.0 - lambda + (1.0 + lambda) * c2;
    let base = 0.5 * (1.0 + a);
    let diag = 0.25 * (1.0 - a) * (1.0 + c4);
    let cross = 0.25 * lambda * (1.0 - a) * (1.0 - c4);
    BoundParts {
        p: c2 * mix,
        q: (1.0 + lambda) * s2 * c2,
        x: 0.25 * (1.0 - a) * (1.0 + lambda),
        r: base + diag - cross,
        y: base - diag - cross,
        w: (1.0 + lambda) * s2 * s2,
        z: s2 * mix,
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `a(λ_k, λ_{k-1}, θ)`; the sign factor `p r / |p r|` is taken as 0 when
/// `p r = 0`.
pub fn a_value(lambda_k: f64, lambda_km1: f64, theta: f64) -> Result<f64> {
    check_lambda_theta(lambda_k, lambda_km1, theta)?;
    let now = bound_parts(lambda_k, theta);
    let prev = bound_parts(lambda_km1, theta);
    let sg = sign(now.p * prev.r);
    Ok(sg * prev.w + prev.z * now.x + prev.w * now.y)
}

/// `c(λ_k, λ_{k-1}, θ)`, same sign convention as [`a_value`].
pub fn c_value(lambda_k: f64, lambda_km1: f64, theta: f64) -> Result<f64> {
    check_lambda_theta(lambda_k, lambda_km1, theta)?;
    let now = bound_parts(lambda_k, theta);
    let prev = bound_parts(lambda_km1, theta);
    let sg = sign(now.p * prev.r);
    Ok(sg * prev.z + prev.z * now.r + prev.x * now.w)
}

/// What [`increasing_schedule_check`] found wrong first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleViolation {
    pub k: usize,
    pub kind: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub rounds: usize,
    pub passed: bool,
    pub first_violation: Option<ScheduleViolation>,
}

/// Strictly increasing `λ`, success above 1/2 and positive log-negativity
/// for both states, every round.
pub fn increasing_schedule_check(trace: &ProtocolTrace) -> ScheduleReport {
    let mut first = None;
    let mut prev: Option<f64> = None;
    for r in &trace.records {
        let found = if prev.is_some_and(|p| r.lambda <= p) {
            Some(("lambda not increasing", r.lambda))
        } else if r.success_prob <= 0.5 {
            Some(("success not above 1/2", r.success_prob))
        } else {
            r.negativities
                .iter()
                .find(|&&e| e <= 0.0)
                .map(|e| ("log-negativity not positive", *e))
        };
        if let Some((kind, value)) = found {
            first = Some(ScheduleViolation {
                k: r.k,
                kind,
                value,
            });
            break;
        }
        prev = Some(r.lambda);
    }
    ScheduleReport {
        rounds: trace.records.len(),
        passed: first.is_none(),
        first_violation: first,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{run, RunOptions, SharpnessSchedule};
    use crate::states::{EnsembleSpec, SpecialFamilyParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    /// Term-by-term accumulation of `h`, kept literal (including `csc 2θ`)
    /// as a second transcription path.
    fn h_termwise(l3: f64, l2: f64, th: f64) -> f64 {
        let a2 = (1.0 - l2 * l2).sqrt();
        let a3 = (1.0 - l3 * l3).sqrt();
        let c2 = (2.0 * th).cos();
        let s2 = (2.0 * th).sin();
        let c4 = (4.0 * th).cos();
        let s4 = (4.0 * th).sin();
        let mut acc = 0.0;
        acc += (-1.0 + l3 - (1.0 + l3) * c2)
            * (1.0 + a2 + 0.5 * (-1.0 - a2) + 0.25 * (1.0 - a2) * (1.0 - l2 + (1.0 + l2) * c4));
        acc += -0.25 * (1.0 + l3) * (1.0 + l2) * (1.0 - a2) * s2 * s4;
        let inner =
            (1.0 + l3) * (0.5 * (1.0 + a3) - 0.25 * (1.0 - a2) * (1.0 - l2 + (1.0 + l2) * c4)) * s2
                + 0.25 * (1.0 + l2) * (1.0 - a2) * (1.0 - l3 + (1.0 + l3) * c2) * s4;
        acc += 1.0 / (1.0 + l2) * (1.0 - l2 + (1.0 + l2) * c2).abs() / s2 * inner;
        acc
    }

    #[test]
    fn h_matches_second_path_and_frozen_values() {
        // Frozen from an independent numpy transcription.
        let frozen = [
            ((2e-3, 1e-3, FRAC_PI_3), 0.0019976282485318353),
            ((0.04, 0.01, 1.0), 0.059185700735511215),
            ((0.5, 0.3, 1.4), 1.4785737742491478),
        ];
        for ((l3, l2, th), want) in frozen {
            let got = h_value(l3, l2, th).unwrap();
            assert_abs_diff_eq!(got, want, epsilon = 1e-14);
            assert_abs_diff_eq!(got, h_termwise(l3, l2, th), epsilon = 1e-14);
        }
        assert!(h_value(2e-3, 1e-3, FRAC_PI_3).unwrap() > 0.0);
        // Boundary probe λ3 = λ2: evaluated, sign not asserted.
        assert!(h_value(1e-3, 1e-3, FRAC_PI_3).unwrap().is_finite());
        assert!(h_value(1e-3, 1e-3, FRAC_PI_2).unwrap().is_finite());
        assert!(h_value(0.0, 1e-3, 1.0).is_err());
        assert!(h_value(0.1, 1e-3, 0.5).is_err());
    }

    #[test]
    fn a_c_frozen_values() {
        let frozen = [
            (
                (2e-3, 1e-3, FRAC_PI_3),
                (-7.232758025832453e-07, -2.3040168179318588e-07),
            ),
            (
                (0.04, 0.01, 1.0),
                (-0.0002953014693590772, -0.00016739166566934798),
            ),
            ((0.5, 0.3, 1.4), (0.26393429533707413, -0.3471608050360689)),
        ];
        for ((lk, lm, th), (a, c)) in frozen {
            assert_abs_diff_eq!(a_value(lk, lm, th).unwrap(), a, epsilon = 1e-15);
            assert_abs_diff_eq!(c_value(lk, lm, th).unwrap(), c, epsilon = 1e-15);
        }
    }

    #[test]
    fn schedule_check_examples() {
        let ens = EnsembleSpec::Special(SpecialFamilyParams::new(0.4, 0.6).unwrap());
        let trace = |l: Vec<f64>| {
            run(
                &ens,
                &SharpnessSchedule::fixed(l).unwrap(),
                RunOptions::default(),
            )
            .unwrap()
        };
        let bad = increasing_schedule_check(&trace(vec![0.3, 0.2]));
        assert!(!bad.passed);
        assert_eq!(bad.first_violation.unwrap().k, 2);
        assert!(increasing_schedule_check(&trace(vec![0.3, 0.31])).passed);
    }
}
