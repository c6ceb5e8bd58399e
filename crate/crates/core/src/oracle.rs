//! Randomized cross-checks of every closed form against the brute-force
//! density-matrix simulator.
//!
//! Each sample draws its parameters from its own ChaCha stream (seed plus
//! sample index), so reports are identical under sequential and parallel
//! execution.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::recursion::{correlators_via_r, r_step_impl, success_from_q, RState};
use crate::entanglement::{log_negativity, negativity_special_closed};
use crate::error::{Error, Result};
use crate::measurement::{unsharp_general_povm, unsharp_special_povm};
use crate::parallel::{map_indexed, Execution};
use crate::protocol::{luders_update, special_closed_states, success_probability};
use crate::states::{
    correlators, general_pair, special_pair, GeneralFamilyParams, SpecialFamilyParams, StateLabel,
};

pub const CHECK_NAMES: [&str; 5] = [
    "success_closed_form",
    "negativity_closed_form",
    "special_closed_states",
    "correlator_recursion",
    "q_decomposition",
];

/// A deliberately broken code path, used to prove the oracle can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Defect {
    /// Flip the sign of the `λ(1-α) sin4θ / 4` cross term in the
    /// correlator recursion.
    CorrelatorSign,
}

impl FromStr for Defect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cof" | "correlator_sign" => Ok(Defect::CorrelatorSign),
            other => Err(Error::InvalidParameter(format!("unknown defect '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleConfig {
    pub samples: usize,
    pub rounds: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub inject: Option<Defect>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            rounds: 10,
            seed: 0,
            tolerance: 1e-10,
            inject: None,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter(
                "oracle needs at least one sample".into(),
            ));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidParameter(
                "oracle needs at least one round".into(),
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::OutOfRange {
                name: "tolerance",
                value: self.tolerance,
                domain: "(0, inf)",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub samples: usize,
    pub rounds: usize,
    pub seed: u64,
    pub checks: Vec<OracleCheck>,
    pub passed: bool,
}

impl OracleReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &OracleCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<24} {}  max deviation {:.3e} (tol {:.1e})",
                c.name,
                if c.passed { "ok  " } else { "FAIL" },
                c.max_deviation,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

/// Uniform draw from the open interval `(lo, hi)`.
fn open(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    loop {
        let x = rng.gen_range(lo..hi);
        if x > lo {
            return x;
        }
    }
}

pub(crate) fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn special_sample(rng: &mut ChaCha8Rng, rounds: usize) -> Result<[f64; 3]> {
    let p = SpecialFamilyParams::new(open(rng, 0.0, 1.0), open(rng, 0.0, 1.0))?;
    let lambdas: Vec<f64> = (0..rounds).map(|_| open(rng, 0.0, 1.0)).collect();
    let mut states = special_pair(&p)?;
    let mut s = 0.0;
    let mut dev = [0.0f64; 3];
    for &l in &lambdas {
        let povm = unsharp_special_povm(l)?;
        let succ = success_probability(&states[0], &states[1], &povm);
        dev[0] = dev[0].max((succ - (0.5 + 0.5 * l * l)).abs());
        states = [
            luders_update(&states[0], &povm)?,
            luders_update(&states[1], &povm)?,
        ];
        s = l * l + s * (1.0 - l * l);
        let closed = special_closed_states(&p, s)?;
        for b in StateLabel::BOTH {
            let i = b.index();
            let e = negativity_special_closed(p.vartheta(b), s)?;
            dev[1] = dev[1].max((log_negativity(&states[i]) - e).abs());
            dev[2] = dev[2].max(states[i].distance(&closed[i]));
        }
    }
    Ok(dev)
}

fn general_sample(rng: &mut ChaCha8Rng, rounds: usize, inject: Option<Defect>) -> Result<[f64; 2]> {
    let p = GeneralFamilyParams::new(
        open(rng, 0.0, 1.0),
        open(rng, 0.0, 1.0),
        open(rng, 0.0, FRAC_PI_2),
    )?;
    let theta = p.theta();
    let lambdas: Vec<f64> = (0..rounds).map(|_| open(rng, 0.0, 1.0)).collect();
    let mut states = general_pair(&p)?;
    let initial = states.map(|r| correlators(&r));
    let flip = inject == Some(Defect::CorrelatorSign);
    let mut rs = RState::initial(theta);
    let mut dev = [0.0f64; 2];
    for (i, &l) in lambdas.iter().enumerate() {
        let povm = unsharp_general_povm(theta, l)?;
        let succ = success_probability(&states[0], &states[1], &povm);
        dev[1] = dev[1].max((succ - success_from_q(i + 1, &p, &lambdas)?).abs());
        states = [
            luders_update(&states[0], &povm)?,
            luders_update(&states[1], &povm)?,
        ];
        rs = r_step_impl(&rs, l, flip);
        for (init, rho) in initial.iter().zip(states.iter()) {
            let t = correlators(rho);
            let brute = [t.get(3, 3), t.get(0, 3), t.get(3, 1), t.get(0, 1)];
            for (a, b) in brute.iter().zip(correlators_via_r(init, &rs)) {
                dev[0] = dev[0].max((a - b).abs());
            }
        }
    }
    Ok(dev)
}

/// Runs all five checks and reports the worst deviation of each.
pub fn run_oracle(config: &OracleConfig, execution: Execution) -> Result<OracleReport> {
    config.validate()?;
    let per_sample = map_indexed(config.samples, execution, |i| -> Result<[f64; 5]> {
        let mut rng = sample_rng(config.seed, i);
        let s = special_sample(&mut rng, config.rounds)?;
        let g = general_sample(&mut rng, config.rounds, config.inject)?;
        Ok([s[0], s[1], s[2], g[0], g[1]])
    });
    let mut worst = [0.0f64; 5];
    for sample in per_sample {
        for (w, d) in worst.iter_mut().zip(sample?) {
            // NaN must not hide behind max().
            *w = if d.is_nan() { f64::INFINITY } else { w.max(d) };
        }
    }
    let checks: Vec<OracleCheck> = CHECK_NAMES
        .iter()
        .zip(worst)
        .map(|(name, max_deviation)| OracleCheck {
            name,
            max_deviation,
            tolerance: config.tolerance,
            passed: max_deviation <= config.tolerance,
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(OracleReport {
        samples: config.samples,
        rounds: config.rounds,
        seed: config.seed,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OracleConfig {
        OracleConfig {
            samples: 12,
            rounds: 6,
            seed: 7,
            ..OracleConfig::default()
        }
    }

    #[test]
    fn clean_run_passes() {
        let report = run_oracle(&small(), Execution::Parallel).unwrap();
        assert!(report.passed, "{report}");
        assert_eq!(report.checks.len(), 5);
    }

    #[test]
    fn injected_defect_fails_only_recursion_check() {
        let config = OracleConfig {
            inject: Some(Defect::CorrelatorSign),
            ..small()
        };
        let report = run_oracle(&config, Execution::Sequential).unwrap();
        assert!(!report.passed);
        let failed: Vec<_> = report.failed_checks().map(|c| c.name).collect();
        assert_eq!(failed, vec!["correlator_recursion"]);
    }

    #[test]
    fn zero_samples_rejected() {
        let config = OracleConfig {
            samples: 0,
            ..small()
        };
        assert!(run_oracle(&config, Execution::Sequential).is_err());
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let a = run_oracle(&small(), Execution::Sequential).unwrap();
        let b = run_oracle(&small(), Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
