//! The sequential discrimination chain.
//!
//! Each round a fresh observer pair measures the (outcome-averaged) states
//! left by the previous pair with a POVM of sharpness `λ_k`, guesses, and
//! passes the Lüders-updated states on. Witness-driven schedules pick
//! `λ_{k+1}` from the witness thresholds of the round-`k` states.

use serde::Serialize;
use thiserror::Error;

use crate::entanglement::{
    epsilon_feasible_bound, g2_threshold, log_negativity, negativity_special_closed,
    next_lambda_from_thresholds, witness_value, EpsilonRule, Infeasibility, Threshold,
    WitnessParams,
};
use crate::error::{check_range, Error, Result};
use crate::linalg::{hermitian_eig, CMatrix};
use crate::measurement::{povm_for, sqrt_factors, PovmSet};
use crate::states::{
    schmidt_frame, DensityMatrix, EnsembleSpec, LocalUnitaries, SpecialFamilyParams, StateLabel,
};

/// Tolerance for the per-round invariant and closed-form checks in [`run`].
pub const RUN_TOL: f64 = 1e-10;
/// Thresholds at or below this cannot seed a growing schedule.
pub const DEGENERATE_THRESHOLD: f64 = 1e-15;

/// How `λ_1, λ_2, ...` are produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SharpnessSchedule {
    Fixed {
        lambdas: Vec<f64>,
    },
    WitnessDriven {
        lambda1: f64,
        epsilon: EpsilonRule,
        rounds: usize,
    },
}

impl SharpnessSchedule {
    pub fn fixed(lambdas: Vec<f64>) -> Result<Self> {
        let s = SharpnessSchedule::Fixed { lambdas };
        s.validate()?;
        Ok(s)
    }

    pub fn witness_driven(lambda1: f64, epsilon: EpsilonRule, rounds: usize) -> Result<Self> {
        let s = SharpnessSchedule::WitnessDriven {
            lambda1,
            epsilon,
            rounds,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn rounds(&self) -> usize {
        match self {
            SharpnessSchedule::Fixed { lambdas } => lambdas.len(),
            SharpnessSchedule::WitnessDriven { rounds, .. } => *rounds,
        }
    }

    /// Fixed lists accept the closed interval so that the random-guess and
    /// perfect-discrimination limits can be run directly.
    pub fn validate(&self) -> Result<()> {
        match self {
            SharpnessSchedule::Fixed { lambdas } => {
                if lambdas.is_empty() {
                    return Err(Error::InvalidParameter(
                        "fixed schedule has no rounds".into(),
                    ));
                }
                for &l in lambdas {
                    check_range("lambda", l, "[0, 1]", (0.0..=1.0).contains(&l))?;
                }
            }
            SharpnessSchedule::WitnessDriven {
                lambda1, rounds, ..
            } => {
                check_range(
                    "lambda1",
                    *lambda1,
                    "(0, 1)",
                    *lambda1 > 0.0 && *lambda1 < 1.0,
                )?;
                if *rounds == 0 {
                    return Err(Error::InvalidParameter(
                        "schedule needs at least one round".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunOptions {
    /// Evaluate witness thresholds and values in the Schmidt frame of each
    /// initial state (local unitaries fixed once, from round 0).
    pub schmidt_basis: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub k: usize,
    pub lambda: f64,
    pub success_prob: f64,
    pub post_states: [DensityMatrix; 2],
    pub negativities: [f64; 2],
    /// `Tr[W ρ_b^k]` with `g2 = λ_{k+1}` (witness-driven) or `g2 = 1` (fixed).
    pub witness_values: [f64; 2],
    pub witness_g2: f64,
    pub thresholds: [Threshold; 2],
    /// `ε_k` and `λ_{k+1}` for witness-driven schedules.
    pub epsilon: Option<f64>,
    pub next_lambda: Option<f64>,
    /// `S_k`, special family only.
    pub s_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTrace {
    pub ensemble: EnsembleSpec,
    pub schedule: SharpnessSchedule,
    pub options: RunOptions,
    pub records: Vec<RoundRecord>,
}

impl ProtocolTrace {
    pub fn lambdas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.lambda).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("schedule infeasible at round {round}: {reason}")]
    ScheduleInfeasible {
        round: usize,
        reason: Infeasibility,
        /// Rounds completed before the schedule broke down.
        trace: Box<ProtocolTrace>,
    },
    #[error(transparent)]
    Invalid(#[from] Error),
}

/// `Σ_j √O_j ρ √O_j`.
pub fn luders_update(rho: &DensityMatrix, povm: &PovmSet) -> Result<DensityMatrix> {
    let roots = sqrt_factors(povm);
    let mut out = CMatrix::zeros_unchecked(4);
    for k in &roots.factors {
        out += rho.matrix().sandwich(k);
    }
    let tr = out.trace().re;
    if (tr - 1.0).abs() > RUN_TOL {
        return Err(Error::PovmInvariant(format!(
            "Lüders update changed the trace to {tr}"
        )));
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// `½ Σ_b Tr[G_b ρ_b]` where `G_b` sums the elements that guess `b`.
pub fn success_probability(rho1: &DensityMatrix, rho2: &DensityMatrix, povm: &PovmSet) -> f64 {
    let p1 = rho1.expectation(&povm.guess_operator(StateLabel::First));
    let p2 = rho2.expectation(&povm.guess_operator(StateLabel::Second));
    0.5 * (p1 + p2)
}

/// `S_1 = λ_1²`, `S_l = λ_l² + S_{l-1}(1 - λ_l²)`.
pub fn s_sequence(lambdas: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(lambdas.len());
    let mut s = 0.0;
    for &l in lambdas {
        check_range("lambda", l, "[0, 1]", (0.0..=1.0).contains(&l))?;
        let l2 = l * l;
        s = l2 + s * (1.0 - l2);
        out.push(s);
    }
    Ok(out)
}

/// Special-family states after the off-diagonals have shrunk by `1 - S_k`.
pub fn special_closed_states(params: &SpecialFamilyParams, s_k: f64) -> Result<[DensityMatrix; 2]> {
    check_range("s_k", s_k, "[0, 1]", (0.0..=1.0).contains(&s_k))?;
    let [r1, r2] = crate::states::special_pair(params)?;
    let shrink = |rho: DensityMatrix, (i, j): (usize, usize)| {
        let mut m = rho.into_matrix();
        m[(i, j)] = m[(i, j)].scale(1.0 - s_k);
        m[(j, i)] = m[(j, i)].scale(1.0 - s_k);
        DensityMatrix::new(m)
    };
    Ok([shrink(r1, (1, 2))?, shrink(r2, (0, 3))?])
}

fn check_state(rho: &DensityMatrix, what: &str) -> Result<()> {
    let m = rho.matrix();
    let tr = m.trace().re;
    let min = hermitian_eig(m)?.min_eigenvalue();
    if (tr - 1.0).abs() > RUN_TOL || min < -RUN_TOL {
        return Err(Error::InvalidState(format!(
            "{what}: trace {tr}, min eigenvalue {min:e}"
        )));
    }
    Ok(())
}

struct Frames {
    frames: [LocalUnitaries; 2],
}

impl Frames {
    fn new(ensemble: &EnsembleSpec, schmidt_basis: bool) -> Result<Self> {
        let frames = if schmidt_basis {
            let [v1, v2] = ensemble.vectors();
            [schmidt_frame(&v1)?, schmidt_frame(&v2)?]
        } else {
            [LocalUnitaries::identity(); 2]
        };
        Ok(Self { frames })
    }

    fn view(&self, states: &[DensityMatrix; 2]) -> [DensityMatrix; 2] {
        [
            states[0].rotated(&self.frames[0]),
            states[1].rotated(&self.frames[1]),
        ]
    }
}

/// Runs every round of `schedule` on `ensemble`.
pub fn run(
    ensemble: &EnsembleSpec,
    schedule: &SharpnessSchedule,
    options: RunOptions,
) -> std::result::Result<ProtocolTrace, RunError> {
    schedule.validate()?;
    let frames = Frames::new(ensemble, options.schmidt_basis)?;
    let mut trace = ProtocolTrace {
        ensemble: *ensemble,
        schedule: schedule.clone(),
        options,
        records: Vec::with_capacity(schedule.rounds()),
    };
    let mut states = ensemble.states()?;
    let mut s_k = 0.0;

    let mut lambda = match schedule {
        SharpnessSchedule::Fixed { lambdas } => lambdas[0],
        SharpnessSchedule::WitnessDriven { lambda1, .. } => *lambda1,
    };
    // T_{k-1}(1 + ε_{k-1}); before the first round this is λ_1 itself.
    let mut carried = lambda;

    for k in 1..=schedule.rounds() {
        let povm = povm_for(ensemble, lambda)?;
        let success_prob = success_probability(&states[0], &states[1], &povm);
        if success_prob < 0.5 - 1e-12 {
            return Err(Error::InvalidState(format!(
                "round {k}: success probability {success_prob} below 1/2"
            ))
            .into());
        }
        let post = [
            luders_update(&states[0], &povm)?,
            luders_update(&states[1], &povm)?,
        ];
        check_state(&post[0], "first post-measurement state")?;
        check_state(&post[1], "second post-measurement state")?;
        let negativities = [log_negativity(&post[0]), log_negativity(&post[1])];

        let special_s = if let EnsembleSpec::Special(p) = ensemble {
            s_k = lambda * lambda + s_k * (1.0 - lambda * lambda);
            verify_special_round(p, lambda, s_k, success_prob, &post, &negativities)?;
            Some(s_k)
        } else {
            None
        };

        let viewed = frames.view(&post);
        let thresholds = [g2_threshold(&viewed[0]), g2_threshold(&viewed[1])];

        let mut record = RoundRecord {
            k,
            lambda,
            success_prob,
            post_states: post,
            negativities,
            witness_values: [f64::NAN; 2],
            witness_g2: 1.0,
            thresholds,
            epsilon: None,
            next_lambda: None,
            s_k: special_s,
        };

        match schedule {
            SharpnessSchedule::Fixed { lambdas } => {
                let w = WitnessParams::new(1.0)?;
                record.witness_values =
                    [witness_value(&viewed[0], w), witness_value(&viewed[1], w)];
                trace.records.push(record);
                if k < lambdas.len() {
                    lambda = lambdas[k];
                }
            }
            SharpnessSchedule::WitnessDriven { epsilon: rule, .. } => {
                let step = next_from_thresholds(thresholds, carried, *rule);
                let (eps, next, t_k) = match step {
                    Ok(v) => v,
                    Err(reason) => {
                        trace.records.push(record);
                        return Err(RunError::ScheduleInfeasible {
                            round: k,
                            reason,
                            trace: Box::new(trace),
                        });
                    }
                };
                let w = WitnessParams::new(next)?;
                record.witness_values =
                    [witness_value(&viewed[0], w), witness_value(&viewed[1], w)];
                record.witness_g2 = next;
                record.epsilon = Some(eps);
                record.next_lambda = Some(next);
                trace.records.push(record);
                carried = t_k * (1.0 + eps);
                lambda = next;
            }
        }
        states = post;
    }
    Ok(trace)
}

/// `(ε_k, λ_{k+1}, T_k)` or the reason no admissible `λ_{k+1}` exists.
fn next_from_thresholds(
    thresholds: [Threshold; 2],
    carried: f64,
    rule: EpsilonRule,
) -> std::result::Result<(f64, f64, f64), Infeasibility> {
    let t = match (thresholds[0], thresholds[1]) {
        (Threshold::Value(a), Threshold::Value(b)) => a.max(b),
        (Threshold::Infeasible(r), _) | (_, Threshold::Infeasible(r)) => return Err(r),
    };
    if t <= DEGENERATE_THRESHOLD {
        return Err(Infeasibility::Degenerate { threshold: t });
    }
    let bound = epsilon_feasible_bound(carried, t, 0.0)
        .map_err(|_| Infeasibility::OutOfRange { value: t })?;
    let eps = rule.next(bound);
    match next_lambda_from_thresholds(thresholds[0], thresholds[1], eps) {
        Ok(Threshold::Value(l)) if l > 0.0 && l < 1.0 => Ok((eps, l, t)),
        Ok(Threshold::Value(l)) => Err(Infeasibility::OutOfRange { value: l }),
        Ok(Threshold::Infeasible(r)) => Err(r),
        Err(_) => Err(Infeasibility::OutOfRange { value: eps }),
    }
}

fn verify_special_round(
    p: &SpecialFamilyParams,
    lambda: f64,
    s_k: f64,
    success_prob: f64,
    post: &[DensityMatrix; 2],
    negativities: &[f64; 2],
) -> Result<()> {
    let closed_success = 0.5 + 0.5 * lambda * lambda;
    let dev = (closed_success - success_prob).abs();
    if dev > RUN_TOL {
        return Err(Error::ClosedFormMismatch {
            what: "special-family success probability",
            deviation: dev,
        });
    }
    let closed = special_closed_states(p, s_k)?;
    for (label, (c, b)) in StateLabel::BOTH.iter().zip(closed.iter().zip(post.iter())) {
        let dev = c.distance(b);
        if dev > RUN_TOL {
            return Err(Error::ClosedFormMismatch {
                what: "special-family post-measurement state",
                deviation: dev,
            });
        }
        let e = negativity_special_closed(p.vartheta(*label), s_k)?;
        let dev = (e - negativities[label.index()]).abs();
        if dev > RUN_TOL {
            return Err(Error::ClosedFormMismatch {
                what: "special-family log-negativity",
                deviation: dev,
            });
        }
    }
    Ok(())
}
