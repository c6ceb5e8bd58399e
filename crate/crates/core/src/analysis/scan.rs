//! Grid scans of the positivity functions over `(θ, λ_{k-1}, λ_k)`.
//!
//! For round `k` the coefficients `R, R'` are taken after
//! `prefix ++ [λ_{k-1}]` (so `prefix` holds `λ_1..λ_{k-2}`) and the functions
//! are evaluated at `λ_k`:
//!
//! ```text
//! f = (R1+R2)(1+λ+(1-λ)cos2θ) + (1-λ) sin2θ (R'3+R'4)
//! g = (R3-R4)(1-λ+(1+λ)cos2θ) + (1+λ) sin2θ (R'1-R'2)
//! t = cos2θ [(R1-R2)(1-λ+(1+λ)cos2θ) + (1+λ) sin2θ (R'3-R'4)]
//! s = t + sin2θ g
//! ```

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::bounds::{a_value, c_value, h_value};
use super::recursion::{q_from_state, r_step, RState};
use crate::error::{check_range, Error, Result};
use crate::parallel::{map_indexed, Execution};

/// Inset applied to every open or half-open axis end in default grids.
pub const DEFAULT_INSET: f64 = 1e-3;
pub const DEFAULT_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionId {
    F,
    G,
    T,
    S,
    H,
    A,
    C,
    Q,
}

impl FunctionId {
    pub const ALL: [FunctionId; 8] = [
        FunctionId::F,
        FunctionId::G,
        FunctionId::T,
        FunctionId::S,
        FunctionId::H,
        FunctionId::A,
        FunctionId::C,
        FunctionId::Q,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionId::F => "f",
            FunctionId::G => "g",
            FunctionId::T => "t",
            FunctionId::S => "s",
            FunctionId::H => "h",
            FunctionId::A => "a",
            FunctionId::C => "c",
            FunctionId::Q => "q",
        }
    }

    /// `h`, `a` and `c` compare consecutive rounds and are only meaningful
    /// for strictly increasing `λ`; their default grids skip other cells.
    pub fn needs_increasing(self) -> bool {
        matches!(self, FunctionId::H | FunctionId::A | FunctionId::C)
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scan function '{s}'")))
    }
}

/// Evenly spaced samples `lo, ..., hi` (both ends included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.points == 1 {
            return self.lo;
        }
        self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }

    fn validate(
        &self,
        name: &'static str,
        ok: impl Fn(f64) -> bool,
        domain: &'static str,
    ) -> Result<()> {
        if self.points == 0 {
            return Err(Error::InvalidParameter(format!(
                "axis {name} has no points"
            )));
        }
        if self.lo > self.hi {
            return Err(Error::InvalidParameter(format!("axis {name} has lo > hi")));
        }
        check_range(name, self.lo, domain, ok(self.lo))?;
        check_range(name, self.hi, domain, ok(self.hi))
    }
}

/// A complete scan request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSpec {
    pub function: FunctionId,
    /// Round index `k ≥ 2`; `prefix` must hold `k - 2` values.
    pub k: usize,
    pub theta: Axis,
    pub lambda_prev: Axis,
    pub lambda: Axis,
    pub prefix: Vec<f64>,
    /// `μ_b` for the `q` function.
    pub mu: f64,
    /// Skip cells with `λ_k ≤ λ_{k-1}`.
    pub increasing_only: bool,
}

impl ScanSpec {
    /// 50³ grid on `θ ∈ [π/4+δ, π/2-δ]`, `λ ∈ [δ, 1-δ]` (`λ ≤ 0.05` for
    /// `h`, `a`, `c`), `k = 2`.
    pub fn default_for(function: FunctionId) -> Self {
        let d = DEFAULT_INSET;
        let lambda_hi = if function.needs_increasing() {
            0.05
        } else {
            1.0 - d
        };
        Self {
            function,
            k: 2,
            theta: Axis::new(FRAC_PI_4 + d, FRAC_PI_2 - d, DEFAULT_POINTS),
            lambda_prev: Axis::new(d, lambda_hi, DEFAULT_POINTS),
            lambda: Axis::new(d, lambda_hi, DEFAULT_POINTS),
            prefix: Vec::new(),
            mu: 0.5,
            increasing_only: function.needs_increasing(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!(
                "scan round k = {} must be >= 2",
                self.k
            )));
        }
        if self.prefix.len() != self.k - 2 {
            return Err(Error::InvalidParameter(format!(
                "round k = {} needs {} prefix sharpness values, got {}",
                self.k,
                self.k - 2,
                self.prefix.len()
            )));
        }
        self.theta
            .validate("theta", |t| t > FRAC_PI_4 && t <= FRAC_PI_2, "(pi/4, pi/2]")?;
        let open = |l: f64| l > 0.0 && l < 1.0;
        self.lambda_prev.validate("lambda_prev", open, "(0, 1)")?;
        self.lambda.validate("lambda", open, "(0, 1)")?;
        for &l in &self.prefix {
            check_range("prefix lambda", l, "(0, 1)", open(l))?;
        }
        check_range("mu", self.mu, "(0, 1)", open(self.mu))
    }

    fn cell_count(&self) -> usize {
        self.theta.points * self.lambda_prev.points * self.lambda.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanCell {
    pub theta: f64,
    pub lambda_prev: f64,
    pub lambda: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSummary {
    pub cells: usize,
    pub min: f64,
    pub max: f64,
    pub negative_cells: usize,
    pub positive_cells: usize,
    pub argmin: [f64; 3],
    pub argmax: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanGrid {
    pub spec: ScanSpec,
    pub cells: Vec<ScanCell>,
    pub summary: ScanSummary,
}

impl ScanGrid {
    /// Cell whose value is closest to `target`, with the gap.
    pub fn closest_to(&self, target: f64) -> Option<(ScanCell, f64)> {
        self.cells
            .iter()
            .map(|c| (*c, (c.value - target).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Evaluates `function` at one cell. `prev` holds the coefficients after
/// `prefix ++ [λ_{k-1}]`.
pub fn eval_cell(spec: &ScanSpec, prev: &RState, lambda_prev: f64, lambda: f64) -> Result<f64> {
    let theta = prev.theta;
    let (s, c) = (2.0 * theta).sin_cos();
    let [r1, r2, r3, r4] = prev.r;
    let [p1, p2, p3, p4] = prev.r_prime;
    let l = lambda;
    let minus = 1.0 - l + (1.0 + l) * c;
    let g = || (r3 - r4) * minus + (1.0 + l) * s * (p1 - p2);
    let t = || c * ((r1 - r2) * minus + (1.0 + l) * s * (p3 - p4));
    Ok(match spec.function {
        FunctionId::F => (r1 + r2) * (1.0 + l + (1.0 - l) * c) + (1.0 - l) * s * (p3 + p4),
        FunctionId::G => g(),
        FunctionId::T => t(),
        FunctionId::S => t() + s * g(),
        FunctionId::H => h_value(lambda, lambda_prev, theta)?,
        FunctionId::A => a_value(lambda, lambda_prev, theta)?,
        FunctionId::C => c_value(lambda, lambda_prev, theta)?,
        FunctionId::Q => q_from_state(prev, lambda, spec.mu).q,
    })
}

/// Evaluates the grid; cells are independent and may run in parallel.
pub fn scan_function(spec: &ScanSpec, execution: Execution) -> Result<ScanGrid> {
    spec.validate()?;
    let (np, nl) = (spec.lambda_prev.points, spec.lambda.points);
    let evaluated = map_indexed(
        spec.cell_count(),
        execution,
        |idx| -> Result<Option<ScanCell>> {
            let (it, rest) = (idx / (np * nl), idx % (np * nl));
            let (ip, il) = (rest / nl, rest % nl);
            let theta = spec.theta.value(it);
            let lambda_prev = spec.lambda_prev.value(ip);
            let lambda = spec.lambda.value(il);
            if spec.increasing_only && lambda <= lambda_prev {
                return Ok(None);
            }
            let mut prev = RState::initial(theta);
            for &l in spec.prefix.iter().chain(std::iter::once(&lambda_prev)) {
                prev = r_step(&prev, l)?;
            }
            let value = eval_cell(spec, &prev, lambda_prev, lambda)?;
            Ok(Some(ScanCell {
                theta,
                lambda_prev,
                lambda,
                value,
            }))
        },
    );
    let mut cells = Vec::with_capacity(evaluated.len());
    for c in evaluated {
        if let Some(c) = c? {
            cells.push(c);
        }
    }
    if cells.is_empty() {
        return Err(Error::InvalidParameter(
            "scan grid has no admissible cells".into(),
        ));
    }
    let summary = summarize(&cells);
    Ok(ScanGrid {
        spec: spec.clone(),
        cells,
        summary,
    })
}

fn summarize(cells: &[ScanCell]) -> ScanSummary {
    let mut min = cells[0];
    let mut max = cells[0];
    let mut negative_cells = 0;
    let mut positive_cells = 0;
    for c in cells {
        if c.value < min.value {
            min = *c;
        }
        if c.value > max.value {
            max = *c;
        }
        if c.value < 0.0 {
            negative_cells += 1;
        } else if c.value > 0.0 {
            positive_cells += 1;
        }
    }
    let at = |c: ScanCell| [c.theta, c.lambda_prev, c.lambda];
    ScanSummary {
        cells: cells.len(),
        min: min.value,
        max: max.value,
        negative_cells,
        positive_cells,
        argmin: at(min),
        argmax: at(max),
    }
}
