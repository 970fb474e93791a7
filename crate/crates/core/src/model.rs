//! Instance data model, achievable rates under the OFDMA property, and the
//! four system utilities.
//!
//! Rates are spectral efficiencies in bits per channel use. Because at most
//! one user transmits on each subcarrier, the SINR of user `k` on subcarrier
//! `n` collapses to `gain[k][n] * p[k][n] / noise[k][n]`; cross-channel gains
//! never enter and are not part of the data model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multi-user OFDMA system with `K` users sharing `N` subcarriers.
///
/// Matrices are user-major: `direct_gain[k][n]` is the gain of user `k` on
/// subcarrier `n`. A min-power instance carries `rate_target`, a utility
/// instance carries `user_budget`; at least one of the two must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmaInstance {
    #[serde(rename = "K")]
    pub num_users: usize,
    #[serde(rename = "N")]
    pub num_subcarriers: usize,
    pub direct_gain: Vec<Vec<f64>>,
    pub noise: Vec<Vec<f64>>,
    pub subcarrier_budget: Vec<Vec<f64>>,
    #[serde(default)]
    pub user_budget: Option<Vec<f64>>,
    #[serde(default)]
    pub rate_target: Option<Vec<f64>>,
}

/// One failed invariant of an [`OfdmaInstance`], located by field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Returns every invariant violation of `inst`; empty iff well-formed.
pub fn validate_instance(inst: &OfdmaInstance) -> Vec<Violation> {
    let (k, n) = (inst.num_users, inst.num_subcarriers);
    let mut out = Vec::new();

    if k == 0 {
        out.push(Violation::new("K", "num_users must be positive"));
    }
    if n == 0 {
        out.push(Violation::new("N", "num_subcarriers must be positive"));
    }
    if n < k {
        out.push(Violation::new("N", "num_subcarriers < num_users"));
    }

    let mut check_matrix = |name: &str, m: &[Vec<f64>], ok: fn(f64) -> bool, msg: &str| {
        if m.len() != k {
            out.push(Violation::new(name, format!("expected {k} rows, found {}", m.len())));
            return;
        }
        for (i, row) in m.iter().enumerate() {
            if row.len() != n {
                out.push(Violation::new(
                    format!("{name}[{i}]"),
                    format!("expected {n} columns, found {}", row.len()),
                ));
                continue;
            }
            for (j, &v) in row.iter().enumerate() {
                if !ok(v) {
                    out.push(Violation::new(format!("{name}[{i}][{j}]"), msg));
                }
            }
        }
    };
    check_matrix(
        "direct_gain",
        &inst.direct_gain,
        |v| v.is_finite() && v >= 0.0,
        "direct_gain must be >= 0",
    );
    check_matrix(
        "noise",
        &inst.noise,
        |v| v.is_finite() && v > 0.0,
        "noise must be > 0",
    );
    check_matrix(
        "subcarrier_budget",
        &inst.subcarrier_budget,
        |v| v.is_finite() && v >= 0.0,
        "subcarrier_budget must be >= 0",
    );

    for (name, vec) in [
        ("user_budget", &inst.user_budget),
        ("rate_target", &inst.rate_target),
    ] {
        let Some(v) = vec else { continue };
        if v.len() != k {
            out.push(Violation::new(name, format!("expected {k} entries, found {}", v.len())));
            continue;
        }
        for (i, &x) in v.iter().enumerate() {
            if !(x.is_finite() && x > 0.0) {
                out.push(Violation::new(format!("{name}[{i}]"), format!("{name} must be > 0")));
            }
        }
    }
    if inst.user_budget.is_none() && inst.rate_target.is_none() {
        out.push(Violation::new(
            "",
            "one of user_budget or rate_target is required",
        ));
    }
    out
}

impl OfdmaInstance {
    pub fn validate(&self) -> Result<()> {
        let v = validate_instance(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    /// Rate of user `k` on subcarrier `n` when transmitting power `p`.
    pub fn link_rate(&self, k: usize, n: usize, p: f64) -> f64 {
        (1.0 + self.direct_gain[k][n] * p / self.noise[k][n]).log2()
    }

    /// Rate of user `k` on subcarrier `n` at full per-subcarrier budget.
    pub fn full_power_rate(&self, k: usize, n: usize) -> f64 {
        self.link_rate(k, n, self.subcarrier_budget[k][n])
    }

    /// Sum of all per-subcarrier budgets; the infeasibility sentinel of the
    /// assignment formulation.
    pub fn total_subcarrier_budget(&self) -> f64 {
        self.subcarrier_budget.iter().flatten().sum()
    }

    pub fn rate_targets(&self) -> Result<&[f64]> {
        self.rate_target
            .as_deref()
            .ok_or(Error::MissingField("rate_target"))
    }

    pub fn user_budgets(&self) -> Result<&[f64]> {
        self.user_budget
            .as_deref()
            .ok_or(Error::MissingField("user_budget"))
    }
}

/// The power matrix `power[k][n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerAllocation {
    pub power: Vec<Vec<f64>>,
}

impl PowerAllocation {
    pub fn zeros(num_users: usize, num_subcarriers: usize) -> Self {
        Self {
            power: vec![vec![0.0; num_subcarriers]; num_users],
        }
    }

    pub fn num_users(&self) -> usize {
        self.power.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.power.first().map_or(0, Vec::len)
    }

    /// True iff every subcarrier carries strictly positive power for at most
    /// one user. Checked with exact zero.
    pub fn is_ofdma(&self) -> bool {
        self.first_shared_subcarrier().is_none()
    }

    fn first_shared_subcarrier(&self) -> Option<usize> {
        (0..self.num_subcarriers())
            .find(|&n| self.power.iter().filter(|row| row[n] > 0.0).count() > 1)
    }

    /// Owner of each subcarrier, or `None` when nobody transmits on it.
    pub fn assignment(&self) -> Result<SubcarrierAssignment> {
        if let Some(n) = self.first_shared_subcarrier() {
            return Err(Error::NotOfdma { subcarrier: n });
        }
        let owner = (0..self.num_subcarriers())
            .map(|n| self.power.iter().position(|row| row[n] > 0.0))
            .collect();
        Ok(SubcarrierAssignment { owner })
    }

    pub fn user_total(&self, k: usize) -> f64 {
        self.power[k].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.power.iter().flatten().sum()
    }
}

/// Map from subcarrier to owning user (`None` = unassigned).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubcarrierAssignment {
    pub owner: Vec<Option<usize>>,
}

impl SubcarrierAssignment {
    /// Subcarrier indices owned by each of `num_users` users, ascending.
    pub fn blocks(&self, num_users: usize) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); num_users];
        for (n, owner) in self.owner.iter().enumerate() {
            if let Some(k) = owner {
                blocks[*k].push(n);
            }
        }
        blocks
    }
}

/// An allocation together with its objective value: total power for the
/// min-power problems, utility for the maximization problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedAllocation {
    pub alloc: PowerAllocation,
    pub value: f64,
}

/// Per-user achievable rates `R_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateVector(pub Vec<f64>);

impl RateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `R_k = sum_n log2(1 + gain * p / noise)` for every user.
///
/// Fails if `alloc` does not have the instance's shape or violates the
/// OFDMA property, since the interference-free SINR only holds under it.
pub fn rates(inst: &OfdmaInstance, alloc: &PowerAllocation) -> Result<RateVector> {
    check_shape(inst, alloc)?;
    if let Some(n) = alloc.first_shared_subcarrier() {
        return Err(Error::NotOfdma { subcarrier: n });
    }
    let r = alloc
        .power
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .enumerate()
                .map(|(n, &p)| inst.link_rate(k, n, p))
                .sum()
        })
        .collect();
    Ok(RateVector(r))
}

pub(crate) fn check_shape(inst: &OfdmaInstance, alloc: &PowerAllocation) -> Result<()> {
    if alloc.power.len() != inst.num_users {
        return Err(Error::DimensionMismatch {
            what: "allocation rows",
            expected: inst.num_users,
            found: alloc.power.len(),
        });
    }
    for row in &alloc.power {
        if row.len() != inst.num_subcarriers {
            return Err(Error::DimensionMismatch {
                what: "allocation columns",
                expected: inst.num_subcarriers,
                found: row.len(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityKind {
    SumRate,
    ProportionalFairness,
    HarmonicMean,
    MinRate,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 4] = [
        UtilityKind::SumRate,
        UtilityKind::ProportionalFairness,
        UtilityKind::HarmonicMean,
        UtilityKind::MinRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UtilityKind::SumRate => "sum-rate",
            UtilityKind::ProportionalFairness => "proportional-fairness",
            UtilityKind::HarmonicMean => "harmonic-mean",
            UtilityKind::MinRate => "min-rate",
        }
    }
}

impl fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UtilityKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sum-rate" | "sumrate" | "h1" => Ok(UtilityKind::SumRate),
            "proportional-fairness" | "proportionalfairness" | "h2" => {
                Ok(UtilityKind::ProportionalFairness)
            }
            "harmonic-mean" | "harmonicmean" | "h3" => Ok(UtilityKind::HarmonicMean),
            "min-rate" | "minrate" | "h4" => Ok(UtilityKind::MinRate),
            other => Err(format!("unknown utility kind `{other}`")),
        }
    }
}

/// System utility of a rate vector.
///
/// Arithmetic, geometric and harmonic means and the minimum. Any zero rate
/// makes the last three zero, their continuous limit. An empty vector has
/// utility zero.
pub fn utility(kind: UtilityKind, r: &RateVector) -> f64 {
    let r = r.as_slice();
    if r.is_empty() {
        return 0.0;
    }
    let k = r.len() as f64;
    let any_zero = r.iter().any(|&x| x <= 0.0);
    match kind {
        UtilityKind::SumRate => r.iter().sum::<f64>() / k,
        _ if any_zero => 0.0,
        UtilityKind::ProportionalFairness => {
            (r.iter().map(|x| x.ln()).sum::<f64>() / k).exp()
        }
        UtilityKind::HarmonicMean => k / r.iter().map(|x| x.recip()).sum::<f64>(),
        UtilityKind::MinRate => r.iter().copied().fold(f64::INFINITY, f64::min),
    }
}
