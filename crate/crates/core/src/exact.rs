//! Exhaustive solvers over every subcarrier assignment.
//!
//! Each of the `(K+1)^N` maps from subcarriers to `{unassigned, user 1..K}`
//! splits the joint problem into independent single-user problems, one per
//! user on the block it received. Since the per-user answer depends only on
//! the block, it is tabulated once per `(user, block)` when the table fits in
//! memory.

use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{utility, OfdmaInstance, PowerAllocation, RateVector, SolvedAllocation, UtilityKind};
use crate::waterfill::{
    max_rate_single_user, min_power_single_user, SingleUserChannel, DEFAULT_EPS, RATE_TOL,
};

pub const DEFAULT_ENUM_BUDGET: u64 = 100_000_000;

const MAX_TABLE: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOptions {
    /// Largest `(K+1)^N` that will be enumerated.
    pub enum_budget: u64,
    pub eps: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            enum_budget: DEFAULT_ENUM_BUDGET,
            eps: DEFAULT_EPS,
        }
    }
}

/// Number of assignments, `(K+1)^N`, as a float so that it never overflows.
pub fn assignment_count(num_users: usize, num_subcarriers: usize) -> f64 {
    (num_users as f64 + 1.0).powi(num_subcarriers as i32)
}

fn check_budget(inst: &OfdmaInstance, opts: &ExactOptions) -> Result<()> {
    let required = assignment_count(inst.num_users, inst.num_subcarriers);
    if required > opts.enum_budget as f64 {
        return Err(Error::EnumerationBudgetExceeded {
            required,
            budget: opts.enum_budget,
        });
    }
    if inst.num_subcarriers > 63 {
        return Err(Error::Unsupported(format!(
            "exact enumeration supports at most 63 subcarriers, got {}",
            inst.num_subcarriers
        )));
    }
    Ok(())
}

/// Mixed-radix counter over assignments with a fixed prefix.
///
/// Digit `d` is `0` for unassigned and `u + 1` for user `u`. Per-user masks of
/// owned subcarriers are kept in step with the digits.
#[derive(Debug, Clone)]
struct Odometer {
    radix: usize,
    fixed: usize,
    digits: Vec<usize>,
    masks: Vec<u64>,
    index: u64,
    done: bool,
}

impl Odometer {
    fn new(k: usize, n: usize, prefix: &[usize], index: u64) -> Self {
        let mut digits = vec![0; n];
        digits[..prefix.len()].copy_from_slice(prefix);
        let mut masks = vec![0u64; k];
        for (s, &d) in prefix.iter().enumerate() {
            if d > 0 {
                masks[d - 1] |= 1 << s;
            }
        }
        Self {
            radix: k + 1,
            fixed: prefix.len(),
            digits,
            masks,
            index,
            done: false,
        }
    }

    fn advance(&mut self) {
        self.index += 1;
        for s in (self.fixed..self.digits.len()).rev() {
            let d = self.digits[s];
            if d > 0 {
                self.masks[d - 1] &= !(1 << s);
            }
            if d + 1 < self.radix {
                self.digits[s] = d + 1;
                self.masks[d] |= 1 << s;
                return;
            }
            self.digits[s] = 0;
        }
        self.done = true;
    }

    fn visit<B>(&mut self, mut f: impl FnMut(u64, &[u64], &[usize]) -> ControlFlow<B>) -> Option<B> {
        while !self.done {
            if let ControlFlow::Break(b) = f(self.index, &self.masks, &self.digits) {
                return Some(b);
            }
            self.advance();
        }
        None
    }
}

/// Independent slices of the assignment space for parallel workers: every
/// choice of the leading digits, with the global index of each slice's first
/// assignment. Indices follow the lexicographic order of the digit strings.
fn chunks(k: usize, n: usize) -> Vec<Odometer> {
    let radix = k + 1;
    let mut fixed = 0;
    let mut count = 1usize;
    while fixed < n && count < 256 {
        fixed += 1;
        count *= radix;
    }
    let per_chunk = (radix as u64).pow((n - fixed) as u32);
    (0..count)
        .map(|c| {
            let mut prefix = vec![0; fixed];
            let mut rest = c;
            for s in (0..fixed).rev() {
                prefix[s] = rest % radix;
                rest /= radix;
            }
            Odometer::new(k, n, &prefix, c as u64 * per_chunk)
        })
        .collect()
}

/// Every map from subcarriers to `{unassigned, user}`, each exactly once,
/// `(K+1)^N` in total.
#[derive(Debug, Clone)]
pub struct AssignmentEnumeration {
    odometer: Odometer,
}

impl AssignmentEnumeration {
    pub fn new(num_users: usize, num_subcarriers: usize) -> Self {
        assert!(num_subcarriers <= 63, "at most 63 subcarriers");
        Self {
            odometer: Odometer::new(num_users, num_subcarriers, &[], 0),
        }
    }
}

impl Iterator for AssignmentEnumeration {
    type Item = Vec<Option<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.odometer.done {
            return None;
        }
        let item = self
            .odometer
            .digits
            .iter()
            .map(|&d| d.checked_sub(1))
            .collect();
        self.odometer.advance();
        Some(item)
    }
}

fn mask_members(mask: u64) -> Vec<usize> {
    (0..64).filter(|&s| mask >> s & 1 == 1).collect()
}

/// Per-(user, block) values, dense when small enough, computed on demand
/// otherwise.
struct BlockTable<'a, T> {
    dense: Option<Vec<T>>,
    width: usize,
    f: &'a (dyn Fn(usize, u64) -> T + Sync),
}

impl<'a, T: Copy + Send + Sync> BlockTable<'a, T> {
    fn new(k: usize, n: usize, f: &'a (dyn Fn(usize, u64) -> T + Sync)) -> Self {
        let width = 1usize << n;
        let dense = (k.saturating_mul(width) <= MAX_TABLE).then(|| {
            (0..k * width)
                .into_par_iter()
                .map(|i| f(i / width, (i % width) as u64))
                .collect()
        });
        Self { dense, width, f }
    }

    fn get(&self, user: usize, mask: u64) -> T {
        match &self.dense {
            Some(d) => d[user * self.width + mask as usize],
            None => (self.f)(user, mask),
        }
    }
}

/// Best assignment under `score` (lower is better when `minimize`), ties
/// broken by the lexicographically first assignment.
fn best_assignment(
    k: usize,
    n: usize,
    minimize: bool,
    score: impl Fn(&[u64]) -> Option<f64> + Sync,
) -> Option<(f64, Vec<usize>)> {
    let key = |v: f64| if minimize { v } else { -v };
    chunks(k, n)
        .into_par_iter()
        .filter_map(|mut odo| {
            let mut best: Option<(f64, u64, Vec<usize>)> = None;
            odo.visit::<()>(|idx, masks, digits| {
                if let Some(v) = score(masks) {
                    if best.as_ref().is_none_or(|b| key(v) < key(b.0)) {
                        best = Some((v, idx, digits.to_vec()));
                    }
                }
                ControlFlow::Continue(())
            });
            best
        })
        .reduce_with(|a, b| {
            if (key(b.0), b.1) < (key(a.0), a.1) {
                b
            } else {
                a
            }
        })
        .map(|(v, _, digits)| (v, digits))
}

fn blocks_of(k: usize, digits: &[usize]) -> Vec<Vec<usize>> {
    let mut blocks = vec![Vec::new(); k];
    for (s, &d) in digits.iter().enumerate() {
        if d > 0 {
            blocks[d - 1].push(s);
        }
    }
    blocks
}

fn block_channel(inst: &OfdmaInstance, user: usize, block: &[usize]) -> Result<Option<SingleUserChannel>> {
    match SingleUserChannel::for_user(inst, user, block) {
        Ok(ch) => Ok(Some(ch)),
        Err(Error::InvalidChannel(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn min_power_block(inst: &OfdmaInstance, user: usize, block: &[usize], gamma: f64, eps: f64) -> Option<(f64, Vec<f64>)> {
    let ch = block_channel(inst, user, block).ok()??;
    let sol = min_power_single_user(&ch, gamma, eps).ok()??;
    Some((sol.total_power, sol.powers))
}

fn max_rate_block(inst: &OfdmaInstance, user: usize, block: &[usize], budget: f64) -> (f64, Vec<f64>) {
    match block_channel(inst, user, block) {
        Ok(Some(ch)) => {
            let sol = max_rate_single_user(&ch, budget);
            (sol.rate, sol.powers)
        }
        _ => (0.0, vec![0.0; block.len()]),
    }
}

fn feasible_block(inst: &OfdmaInstance, user: usize, block: &[usize], gamma: f64) -> bool {
    let full: f64 = block.iter().map(|&s| inst.full_power_rate(user, s)).sum();
    full >= gamma - RATE_TOL * gamma.max(1.0)
}

/// Global minimum total power meeting every rate target; `None` when no
/// assignment is feasible.
pub fn exact_min_power(inst: &OfdmaInstance) -> Result<Option<SolvedAllocation>> {
    exact_min_power_with(inst, &ExactOptions::default())
}

pub fn exact_min_power_with(inst: &OfdmaInstance, opts: &ExactOptions) -> Result<Option<SolvedAllocation>> {
    inst.validate()?;
    let targets = inst.rate_targets()?;
    check_budget(inst, opts)?;
    if !(opts.eps.is_finite() && opts.eps > 0.0) {
        return Err(Error::InvalidChannel(format!("eps must be positive, got {}", opts.eps)));
    }
    let (k, n) = (inst.num_users, inst.num_subcarriers);
    let cost = |user: usize, mask: u64| -> f64 {
        min_power_block(inst, user, &mask_members(mask), targets[user], opts.eps)
            .map_or(f64::INFINITY, |(p, _)| p)
    };
    let table = BlockTable::new(k, n, &cost);
    let best = best_assignment(k, n, true, |masks| {
        let mut total = 0.0;
        for (u, &m) in masks.iter().enumerate() {
            total += table.get(u, m);
            if total.is_infinite() {
                return None;
            }
        }
        Some(total)
    });
    let Some((_, digits)) = best else {
        return Ok(None);
    };
    let mut alloc = PowerAllocation::zeros(k, n);
    for (u, block) in blocks_of(k, &digits).iter().enumerate() {
        let (_, powers) = min_power_block(inst, u, block, targets[u], opts.eps)
            .expect("chosen block was feasible during enumeration");
        for (&s, &p) in block.iter().zip(&powers) {
            alloc.power[u][s] = p;
        }
    }
    Ok(Some(SolvedAllocation {
        value: alloc.total(),
        alloc,
    }))
}

/// Whether some assignment lets every user reach its rate target at full
/// power on its block.
pub fn exact_feasibility(inst: &OfdmaInstance) -> Result<bool> {
    exact_feasibility_with(inst, &ExactOptions::default())
}

pub fn exact_feasibility_with(inst: &OfdmaInstance, opts: &ExactOptions) -> Result<bool> {
    inst.validate()?;
    let targets = inst.rate_targets()?;
    check_budget(inst, opts)?;
    let (k, n) = (inst.num_users, inst.num_subcarriers);
    let ok = |user: usize, mask: u64| feasible_block(inst, user, &mask_members(mask), targets[user]);
    let table = BlockTable::new(k, n, &ok);
    Ok(chunks(k, n).into_par_iter().any(|mut odo| {
        odo.visit(|_, masks, _| {
            if masks.iter().enumerate().all(|(u, &m)| table.get(u, m)) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .is_some()
    }))
}

/// Global maximum of a utility of the rate vector under per-user total
/// budgets and per-subcarrier caps.
pub fn exact_max_utility(inst: &OfdmaInstance, kind: UtilityKind) -> Result<SolvedAllocation> {
    exact_max_utility_with(inst, kind, &ExactOptions::default())
}

pub fn exact_max_utility_with(
    inst: &OfdmaInstance,
    kind: UtilityKind,
    opts: &ExactOptions,
) -> Result<SolvedAllocation> {
    inst.validate()?;
    let budgets = inst.user_budgets()?;
    check_budget(inst, opts)?;
    let (k, n) = (inst.num_users, inst.num_subcarriers);
    let rate = |user: usize, mask: u64| max_rate_block(inst, user, &mask_members(mask), budgets[user]).0;
    let table = BlockTable::new(k, n, &rate);
    let (value, digits) = best_assignment(k, n, false, |masks| {
        let r: Vec<f64> = masks.iter().enumerate().map(|(u, &m)| table.get(u, m)).collect();
        Some(utility(kind, &RateVector(r)))
    })
    .expect("the empty assignment always scores");
    let mut alloc = PowerAllocation::zeros(k, n);
    for (u, block) in blocks_of(k, &digits).iter().enumerate() {
        let (_, powers) = max_rate_block(inst, u, block, budgets[u]);
        for (&s, &p) in block.iter().zip(&powers) {
            alloc.power[u][s] = p;
        }
    }
    Ok(SolvedAllocation { alloc, value })
}
