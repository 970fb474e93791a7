use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, ValueEnum};
use ofdma_core::assignment::{min_power_offset_with_eps, min_power_square};
use ofdma_core::exact::{exact_max_utility_with, exact_min_power_with, ExactOptions};
use ofdma_core::transport::max_sum_rate_no_total_budget;
use ofdma_core::waterfill::{kkt_residual, max_rate_single_user, min_power_single_user, SingleUserChannel};
use ofdma_core::{rates, utility, Error as CoreError, OfdmaInstance, PowerAllocation, RateVector, SolvedAllocation, UtilityKind};
use serde::{Deserialize, Serialize};

use crate::io::{self, InputError, EXIT_BUDGET, EXIT_DISAGREEMENT, EXIT_INFEASIBLE, EXIT_OK};
use crate::GlobalOpts;

/// Rate targets must hold to this absolute tolerance in a verified report.
pub const RATE_CHECK_TOL: f64 = 1e-8;
/// Budgets may be exceeded by at most this much, relative to the budget.
pub const BUDGET_CHECK_TOL: f64 = 1e-9;
/// Largest accepted optimality residual, natural-log units.
pub const KKT_CHECK_TOL: f64 = 1e-6;
/// Relative agreement between the reported value and the recomputed one.
pub const VALUE_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    Waterfill,
    Assignment,
    Transport,
    Exact,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    /// min-power when the instance has rate targets, else utility.
    Auto,
    MinPower,
    Utility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "utility")]
pub enum Objective {
    MinPower,
    Utility(UtilityKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    BudgetExceeded,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "Optimal",
            Status::Infeasible => "Infeasible",
            Status::BudgetExceeded => "BudgetExceeded",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub kkt: f64,
    /// `min_k (R_k - gamma_k)`; min-power only.
    pub rate_slack: Option<f64>,
    /// Smallest remaining headroom over every enforced budget.
    pub budget_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub objective: Objective,
    pub status: Status,
    /// Total power for min-power, utility of the rates otherwise.
    pub value: Option<f64>,
    pub alloc: Option<PowerAllocation>,
    pub rates: Option<RateVector>,
    pub residuals: Option<Residuals>,
    pub weights: Option<Vec<f64>>,
    pub eps: f64,
    pub wall_time: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance JSON file.
    pub instance: PathBuf,

    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,

    #[arg(long, value_enum, default_value_t = ObjectiveArg::Auto)]
    pub objective: ObjectiveArg,

    /// Utility maximized by the utility objective.
    #[arg(long, default_value = "sum-rate")]
    pub utility: UtilityKind,

    /// Per-user weights for the weighted sum-rate, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,

    /// Write the JSON report here and print a summary instead.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub method: Method,
    pub objective: ObjectiveArg,
    pub utility: UtilityKind,
    pub weights: Option<Vec<f64>>,
}

pub fn run(a: &SolveArgs, g: &GlobalOpts) -> Result<u8> {
    let inst: OfdmaInstance = io::read_json(&a.instance)?;
    let cfg = SolveConfig {
        method: a.method,
        objective: a.objective,
        utility: a.utility,
        weights: a.weights.clone(),
    };
    let report = solve_instance(&inst, &cfg, g)?;
    let problems = check_report(&inst, &report);

    match &a.report {
        Some(path) => {
            io::write_json(path, &report)?;
            println!("{}", summary(&report));
        }
        None => print!("{}", io::to_json(&report)?),
    }
    for p in &problems {
        eprintln!("verification: {p}");
    }
    Ok(match report.status {
        _ if !problems.is_empty() => EXIT_DISAGREEMENT,
        Status::Optimal => EXIT_OK,
        Status::Infeasible => EXIT_INFEASIBLE,
        Status::BudgetExceeded => {
            eprintln!("error: instance exceeds the enumeration budget; raise --enum-budget or --c-bound");
            EXIT_BUDGET
        }
    })
}

pub fn summary(r: &SolveReport) -> String {
    let mut s = format!("method={} status={}", r.method, r.status);
    if let Some(v) = r.value {
        s += &format!(" value={v}");
    }
    if let Some(res) = &r.residuals {
        s += &format!(" kkt={:.3e} budget_slack={:.3e}", res.kkt, res.budget_slack);
        if let Some(rs) = res.rate_slack {
            s += &format!(" rate_slack={rs:.3e}");
        }
    }
    s + &format!(" wall_time={:.6}s", r.wall_time)
}

pub fn resolve_objective(inst: &OfdmaInstance, cfg: &SolveConfig) -> Objective {
    match cfg.objective {
        ObjectiveArg::MinPower => Objective::MinPower,
        ObjectiveArg::Utility => Objective::Utility(cfg.utility),
        ObjectiveArg::Auto if inst.rate_target.is_some() => Objective::MinPower,
        ObjectiveArg::Auto => Objective::Utility(cfg.utility),
    }
}

pub fn resolve_method(inst: &OfdmaInstance, objective: Objective, requested: Method, c_bound: usize) -> Method {
    if requested != Method::Auto {
        return requested;
    }
    let (k, n) = (inst.num_users, inst.num_subcarriers);
    match objective {
        _ if k == 1 => Method::Waterfill,
        Objective::MinPower if n >= k && n - k <= c_bound => Method::Assignment,
        Objective::Utility(UtilityKind::SumRate) if inst.user_budget.is_none() => Method::Transport,
        _ => Method::Exact,
    }
}

/// Run one solver. Problems the user can fix (wrong method for the
/// instance, missing fields) come back as errors; an exhausted budget and
/// infeasibility are reported through the status.
pub fn solve_instance(inst: &OfdmaInstance, cfg: &SolveConfig, g: &GlobalOpts) -> Result<SolveReport> {
    inst.validate()?;
    let objective = resolve_objective(inst, cfg);
    if objective == Objective::MinPower {
        inst.rate_targets()?;
    }
    let method = resolve_method(inst, objective, cfg.method, g.c_bound);
    if cfg.weights.is_some() && method != Method::Transport {
        return Err(InputError(format!("--weights applies to the transport method, not {method}")).into());
    }

    let start = Instant::now();
    let outcome = dispatch(inst, objective, method, cfg.weights.as_deref(), g);
    let wall_time = start.elapsed().as_secs_f64();

    let mut report = SolveReport {
        method,
        objective,
        status: Status::Optimal,
        value: None,
        alloc: None,
        rates: None,
        residuals: None,
        weights: cfg.weights.clone(),
        eps: g.eps,
        wall_time,
    };
    match outcome {
        Ok(Some(sol)) => {
            report.rates = Some(rates(inst, &sol.alloc)?);
            report.residuals = Some(residuals(inst, objective, &sol.alloc)?);
            report.value = Some(sol.value);
            report.alloc = Some(sol.alloc);
        }
        Ok(None) => report.status = Status::Infeasible,
        Err(e) if matches!(e.downcast_ref::<CoreError>(), Some(CoreError::EnumerationBudgetExceeded { .. })) => {
            report.status = Status::BudgetExceeded;
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn dispatch(
    inst: &OfdmaInstance,
    objective: Objective,
    method: Method,
    weights: Option<&[f64]>,
    g: &GlobalOpts,
) -> Result<Option<SolvedAllocation>> {
    let (k, n) = (inst.num_users, inst.num_subcarriers);
    let opts = ExactOptions { enum_budget: g.enum_budget, eps: g.eps };
    match (method, objective) {
        (Method::Auto, _) => unreachable!("method resolved before dispatch"),
        (Method::Waterfill, _) if k != 1 => {
            Err(InputError(format!("waterfill solves single-user instances, this one has K = {k}")).into())
        }
        (Method::Waterfill, Objective::MinPower) => {
            let gamma = inst.rate_targets()?[0];
            let all: Vec<usize> = (0..n).collect();
            let ch = match SingleUserChannel::for_user(inst, 0, &all) {
                Ok(ch) => ch,
                Err(CoreError::InvalidChannel(_)) => return Ok(None),
                Err(e) => return Err(e.into()),
            };
            Ok(min_power_single_user(&ch, gamma, g.eps)?.map(|s| {
                let mut alloc = PowerAllocation::zeros(1, n);
                alloc.power[0] = s.powers;
                SolvedAllocation { value: alloc.total(), alloc }
            }))
        }
        (Method::Waterfill, Objective::Utility(kind)) => {
            let budget = effective_budgets(inst)[0];
            let all: Vec<usize> = (0..n).collect();
            let mut alloc = PowerAllocation::zeros(1, n);
            if let Ok(ch) = SingleUserChannel::for_user(inst, 0, &all) {
                alloc.power[0] = max_rate_single_user(&ch, budget).powers;
            }
            let value = utility(kind, &rates(inst, &alloc)?);
            Ok(Some(SolvedAllocation { alloc, value }))
        }
        (Method::Assignment, Objective::Utility(_)) => {
            Err(InputError("the assignment method solves the min-power objective only".into()).into())
        }
        (Method::Assignment, Objective::MinPower) => {
            if n < k {
                return Err(InputError(format!("assignment needs N >= K, got K = {k}, N = {n}")).into());
            }
            if n == k {
                return Ok(min_power_square(inst)?);
            }
            let c = n - k;
            if c > g.c_bound {
                return Err(CoreError::EnumerationBudgetExceeded {
                    required: ofdma_core::assignment::stirling(n, k) as f64,
                    budget: g.enum_budget,
                }
                .into());
            }
            Ok(min_power_offset_with_eps(inst, c, g.eps)?)
        }
        (Method::Transport, Objective::MinPower) => {
            Err(InputError("the transport method solves the sum-rate objective only".into()).into())
        }
        (Method::Transport, Objective::Utility(kind)) => {
            if kind != UtilityKind::SumRate {
                return Err(InputError(format!("the transport method solves sum-rate, not {kind}")).into());
            }
            if let Some(b) = &inst.user_budget {
                let binding = (0..k).any(|u| inst.subcarrier_budget[u].iter().sum::<f64>() > b[u]);
                if binding {
                    return Err(InputError("the transport method needs user budgets that never bind".into()).into());
                }
            }
            let sol = max_sum_rate_no_total_budget(inst, weights)?;
            Ok(Some(SolvedAllocation { value: sol.value / k as f64, alloc: sol.alloc }))
        }
        (Method::Exact, Objective::MinPower) => Ok(exact_min_power_with(inst, &opts)?),
        (Method::Exact, Objective::Utility(kind)) => {
            let sol = if inst.user_budget.is_some() {
                exact_max_utility_with(inst, kind, &opts)?
            } else {
                let mut full = inst.clone();
                full.user_budget = Some(effective_budgets(inst));
                exact_max_utility_with(&full, kind, &opts)?
            };
            Ok(Some(sol))
        }
    }
}

/// User budgets, or the sum of each user's subcarrier budgets when the
/// instance has none.
fn effective_budgets(inst: &OfdmaInstance) -> Vec<f64> {
    inst.user_budget
        .clone()
        .unwrap_or_else(|| inst.subcarrier_budget.iter().map(|row| row.iter().sum()).collect())
}

fn residuals(inst: &OfdmaInstance, objective: Objective, alloc: &PowerAllocation) -> Result<Residuals> {
    let k = inst.num_users;
    let blocks = alloc.assignment()?.blocks(k);
    // Min-power blocks are optimal for the max-rate problem at their own
    // total; utility blocks at the user budget.
    let budgets: Vec<f64> = match objective {
        Objective::MinPower => (0..k).map(|u| alloc.user_total(u)).collect(),
        Objective::Utility(_) => effective_budgets(inst),
    };

    let mut kkt = 0.0f64;
    for (u, block) in blocks.iter().enumerate() {
        let Ok(ch) = SingleUserChannel::for_user(inst, u, block) else { continue };
        let powers: Vec<f64> = block.iter().map(|&s| alloc.power[u][s]).collect();
        let wl = max_rate_single_user(&ch, budgets[u]).water_level;
        kkt = kkt.max(kkt_residual(&ch, budgets[u], &powers, &wl));
    }

    let mut budget_slack = f64::INFINITY;
    for u in 0..k {
        for s in 0..inst.num_subcarriers {
            budget_slack = budget_slack.min(inst.subcarrier_budget[u][s] - alloc.power[u][s]);
        }
        if let (Objective::Utility(_), Some(b)) = (objective, &inst.user_budget) {
            budget_slack = budget_slack.min(b[u] - alloc.user_total(u));
        }
    }

    let rate_slack = match objective {
        Objective::MinPower => {
            let r = rates(inst, alloc)?;
            let targets = inst.rate_targets()?;
            Some(r.0.iter().zip(targets).map(|(r, g)| r - g).fold(f64::INFINITY, f64::min))
        }
        Objective::Utility(_) => None,
    };
    Ok(Residuals { kkt, rate_slack, budget_slack })
}

/// Independent re-check of an Optimal report against the instance: shape,
/// OFDMA property, budgets, rate targets and the reported value, all
/// recomputed from the allocation alone.
pub fn check_report(inst: &OfdmaInstance, r: &SolveReport) -> Vec<String> {
    let mut problems = Vec::new();
    if r.status != Status::Optimal {
        return problems;
    }
    let (Some(alloc), Some(value)) = (&r.alloc, r.value) else {
        problems.push("optimal report without allocation or value".into());
        return problems;
    };
    let rv = match rates(inst, alloc) {
        Ok(rv) => rv,
        Err(e) => {
            problems.push(e.to_string());
            return problems;
        }
    };
    let (k, n) = (inst.num_users, inst.num_subcarriers);

    for u in 0..k {
        for s in 0..n {
            let p = alloc.power[u][s];
            let cap = inst.subcarrier_budget[u][s];
            if !(p >= 0.0 && p <= cap + BUDGET_CHECK_TOL * cap.max(1.0)) {
                problems.push(format!("power[{u}][{s}] = {p} outside [0, {cap}]"));
            }
        }
    }
    if let (Objective::Utility(_), Some(b)) = (r.objective, &inst.user_budget) {
        for (u, &bu) in b.iter().enumerate() {
            let t = alloc.user_total(u);
            if t > bu + BUDGET_CHECK_TOL * bu.max(1.0) {
                problems.push(format!("user {u} spends {t}, budget {bu}"));
            }
        }
    }

    let recomputed = match r.objective {
        Objective::MinPower => {
            if let Ok(targets) = inst.rate_targets() {
                for (u, (&ru, &g)) in rv.0.iter().zip(targets).enumerate() {
                    if ru < g - RATE_CHECK_TOL {
                        problems.push(format!("user {u} rate {ru} below target {g}"));
                    }
                }
            }
            alloc.total()
        }
        Objective::Utility(kind) => match &r.weights {
            Some(w) => w.iter().zip(&rv.0).map(|(w, r)| w * r).sum::<f64>() / k as f64,
            None => utility(kind, &rv),
        },
    };
    if (recomputed - value).abs() > VALUE_CHECK_TOL * recomputed.abs().max(1.0) {
        problems.push(format!("reported value {value} but allocation gives {recomputed}"));
    }
    if let Some(res) = &r.residuals {
        if res.kkt > KKT_CHECK_TOL {
            problems.push(format!("optimality residual {} exceeds {KKT_CHECK_TOL}", res.kkt));
        }
    }
    problems
}
