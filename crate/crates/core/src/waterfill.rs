//! Single-user power control by capped ("extended") water-filling.
//!
//! For a water level `tau`, subcarrier `n` receives
//! `p[n] = min(cap[n], max(0, tau - noise[n] / gain[n]))`. Both the rate and
//! the total power are continuous and nondecreasing in `tau`, piecewise with
//! breakpoints at the floors `noise/gain` and ceilings `noise/gain + cap`.
//!
//! * [`min_power_single_user`] picks `tau` so that the rate meets a target;
//!   the breakpoints bracket the answer and bisection finishes it.
//! * [`max_rate_single_user`] picks `tau` so that the power meets a budget;
//!   inside a bracket the total power is affine in `tau`, so the level is
//!   obtained in closed form.
//!
//! Subcarriers with zero gain never receive power and contribute no
//! breakpoints.

use crate::error::{Error, Result};
use crate::model::OfdmaInstance;

/// Absolute slack (scaled by `max(1, target)`) granted when comparing a
/// full-power rate against a rate target.
pub const RATE_TOL: f64 = 1e-9;

/// Default bisection width on the water level.
pub const DEFAULT_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SingleUserChannel {
    gain: Vec<f64>,
    noise: Vec<f64>,
    cap: Vec<f64>,
}

impl SingleUserChannel {
    pub fn new(gain: Vec<f64>, noise: Vec<f64>, cap: Vec<f64>) -> Result<Self> {
        if gain.len() != noise.len() || gain.len() != cap.len() {
            return Err(Error::InvalidChannel(format!(
                "length mismatch: gain {}, noise {}, cap {}",
                gain.len(),
                noise.len(),
                cap.len()
            )));
        }
        if let Some(n) = noise.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::InvalidChannel(format!("noise[{n}] must be > 0")));
        }
        if let Some(n) = gain.iter().position(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::InvalidChannel(format!("gain[{n}] must be >= 0")));
        }
        if let Some(n) = cap.iter().position(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::InvalidChannel(format!("cap[{n}] must be >= 0")));
        }
        let ch = Self { gain, noise, cap };
        if !ch.is_usable() {
            return Err(Error::InvalidChannel(
                "no subcarrier with positive gain and positive cap".into(),
            ));
        }
        Ok(ch)
    }

    /// Channel seen by user `k` on the given subcarriers of `inst`.
    pub fn for_user(inst: &OfdmaInstance, k: usize, subcarriers: &[usize]) -> Result<Self> {
        let pick = |m: &[Vec<f64>]| subcarriers.iter().map(|&n| m[k][n]).collect();
        Self::new(
            pick(&inst.direct_gain),
            pick(&inst.noise),
            pick(&inst.subcarrier_budget),
        )
    }

    pub fn len(&self) -> usize {
        self.gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gain.is_empty()
    }

    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn cap(&self) -> &[f64] {
        &self.cap
    }

    fn is_usable(&self) -> bool {
        self.gain.iter().zip(&self.cap).any(|(&g, &c)| g > 0.0 && c > 0.0)
    }

    /// `noise / gain`, the level at which subcarrier `n` starts to fill.
    fn floor(&self, n: usize) -> Option<f64> {
        (self.gain[n] > 0.0).then(|| self.noise[n] / self.gain[n])
    }

    pub fn rate(&self, powers: &[f64]) -> f64 {
        powers
            .iter()
            .enumerate()
            .map(|(n, &p)| (1.0 + self.gain[n] * p / self.noise[n]).log2())
            .sum()
    }

    pub fn full_power_rate(&self) -> f64 {
        self.rate(&self.cap)
    }

    /// Sum of caps over subcarriers that can carry rate.
    pub fn usable_cap_total(&self) -> f64 {
        (0..self.len())
            .filter(|&n| self.gain[n] > 0.0)
            .map(|n| self.cap[n])
            .sum()
    }

    pub fn rate_at(&self, tau: f64) -> f64 {
        self.rate(&allocation_at(self, tau))
    }

    pub fn power_at(&self, tau: f64) -> f64 {
        allocation_at(self, tau).iter().sum()
    }
}

/// Water level `tau` together with its Lagrange multiplier `lambda = 1/tau`.
/// A budget that never binds has `lambda = 0` and `tau = +inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterLevel {
    pub tau: f64,
    pub lambda: f64,
}

impl WaterLevel {
    pub fn from_tau(tau: f64) -> Self {
        Self {
            tau,
            lambda: tau.recip(),
        }
    }

    pub fn unconstrained() -> Self {
        Self {
            tau: f64::INFINITY,
            lambda: 0.0,
        }
    }
}

/// The `2N` breakpoints `{noise/gain, noise/gain + cap}` in nondecreasing
/// order; zero-gain subcarriers are omitted. Duplicates are kept.
pub fn breakpoints(ch: &SingleUserChannel) -> Vec<f64> {
    let mut b: Vec<f64> = (0..ch.len())
        .filter_map(|n| ch.floor(n).map(|f| [f, f + ch.cap[n]]))
        .flatten()
        .collect();
    b.sort_by(f64::total_cmp);
    b
}

/// Capped water-filling powers at level `tau`.
pub fn allocation_at(ch: &SingleUserChannel, tau: f64) -> Vec<f64> {
    (0..ch.len())
        .map(|n| match ch.floor(n) {
            // Compare against the ceiling breakpoint itself so that a level
            // sitting on it yields the cap exactly, free of rounding in tau - f.
            Some(f) if tau >= f + ch.cap[n] => ch.cap[n],
            Some(f) => (tau - f).max(0.0),
            None => 0.0,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinPowerSolution {
    pub powers: Vec<f64>,
    pub total_power: f64,
    pub water_level: WaterLevel,
    /// Rate achieved by `powers`.
    pub rate: f64,
    /// Rate spread across the final bisection interval; the achieved rate
    /// exceeds the target by at most this much.
    pub eps_rate: f64,
}

/// Minimum total power meeting `rate >= gamma`; `None` when even full power
/// on every subcarrier falls short of the target.
///
/// The bisection stops once the water-level interval is at most `eps` wide
/// and returns its upper end, so the achieved rate is never below `gamma`
/// except inside the [`RATE_TOL`] band where full power is returned.
pub fn min_power_single_user(
    ch: &SingleUserChannel,
    gamma: f64,
    eps: f64,
) -> Result<Option<MinPowerSolution>> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidChannel(format!(
            "rate target must be positive, got {gamma}"
        )));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidChannel(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let full = ch.full_power_rate();
    if full < gamma - RATE_TOL * gamma.max(1.0) {
        return Ok(None);
    }

    let b = breakpoints(ch);
    let top = *b.last().expect("usable channel has breakpoints");
    if full <= gamma {
        return Ok(Some(min_power_at(ch, top, 0.0)));
    }

    // v(b[0]) = 0 < gamma and v(top) = full > gamma, so 1 <= i < b.len().
    let i = b.partition_point(|&t| ch.rate_at(t) < gamma);
    if ch.rate_at(b[i]) == gamma {
        return Ok(Some(min_power_at(ch, b[i], 0.0)));
    }
    let (mut lo, mut hi) = (b[i - 1], b[i]);
    while hi - lo > eps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ch.rate_at(mid) < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps_rate = ch.rate_at(hi) - ch.rate_at(lo);
    Ok(Some(min_power_at(ch, hi, eps_rate)))
}

fn min_power_at(ch: &SingleUserChannel, tau: f64, eps_rate: f64) -> MinPowerSolution {
    let powers = allocation_at(ch, tau);
    MinPowerSolution {
        total_power: powers.iter().sum(),
        rate: ch.rate(&powers),
        water_level: WaterLevel::from_tau(tau),
        powers,
        eps_rate,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxRateSolution {
    pub powers: Vec<f64>,
    pub rate: f64,
    pub total_power: f64,
    pub water_level: WaterLevel,
}

/// Maximum rate under a total power budget.
///
/// When the budget covers every usable cap the answer is full power with an
/// inactive budget multiplier. Otherwise the totals at the breakpoints
/// bracket the level and the affine equation
/// `saturated + m * tau - sum(active floors) = budget` gives it exactly.
pub fn max_rate_single_user(ch: &SingleUserChannel, budget: f64) -> MaxRateSolution {
    let b = breakpoints(ch);
    let cap_total = ch.usable_cap_total();
    let top = *b.last().expect("usable channel has breakpoints");

    let tau = if budget >= cap_total {
        let wl = if budget > cap_total {
            WaterLevel::unconstrained()
        } else {
            WaterLevel::from_tau(top)
        };
        return max_rate_at(ch, top, wl);
    } else if budget <= 0.0 {
        b[0]
    } else {
        let i = b.partition_point(|&t| ch.power_at(t) < budget);
        if ch.power_at(b[i]) == budget {
            b[i]
        } else {
            let (lo, hi) = (b[i - 1], b[i]);
            let mut saturated = 0.0;
            let mut active = 0usize;
            let mut floor_sum = 0.0;
            for n in 0..ch.len() {
                let Some(f) = ch.floor(n) else { continue };
                if f + ch.cap[n] <= lo {
                    saturated += ch.cap[n];
                } else if f < hi {
                    active += 1;
                    floor_sum += f;
                }
            }
            debug_assert!(active > 0);
            ((budget - saturated + floor_sum) / active as f64).clamp(lo, hi)
        }
    };
    max_rate_at(ch, tau, WaterLevel::from_tau(tau))
}

fn max_rate_at(ch: &SingleUserChannel, tau: f64, water_level: WaterLevel) -> MaxRateSolution {
    let powers = allocation_at(ch, tau);
    MaxRateSolution {
        rate: ch.rate(&powers),
        total_power: powers.iter().sum(),
        powers,
        water_level,
    }
}

/// Largest violation of the optimality system of the max-rate problem with
/// budget `budget`, at `powers` and the multiplier of `water_level`.
///
/// Box multipliers are built by the usual three-case rule (zero power, interior,
/// at cap) so stationarity holds by construction; what remains are sign
/// violations of those multipliers, primal infeasibility, and the
/// complementarity product of the budget constraint. Stationarity is written
/// for the natural-log objective, where the marginal rate of subcarrier `n`
/// is `1 / (noise/gain + p)`.
pub fn kkt_residual(
    ch: &SingleUserChannel,
    budget: f64,
    powers: &[f64],
    water_level: &WaterLevel,
) -> f64 {
    let lambda = water_level.lambda;
    let total: f64 = powers.iter().sum();
    let mut worst = (total - budget).max(0.0);
    worst = worst.max((-lambda).max(0.0));
    if lambda != 0.0 {
        worst = worst.max((lambda * (total - budget)).abs());
    }

    for (n, &p) in powers.iter().enumerate() {
        let cap = ch.cap[n];
        worst = worst.max((-p).max(0.0)).max((p - cap).max(0.0));
        let marginal = match ch.floor(n) {
            Some(f) => 1.0 / (f + p),
            None => 0.0,
        };
        let violation = if cap <= 0.0 {
            // both bounds bind, so either multiplier absorbs the gradient
            0.0
        } else if p <= 0.0 {
            // xi = 0, nu = lambda - marginal must be >= 0
            (marginal - lambda).max(0.0)
        } else if p >= cap {
            // nu = 0, xi = marginal - lambda must be >= 0
            (lambda - marginal).max(0.0)
        } else {
            (marginal - lambda).abs()
        };
        worst = worst.max(violation);
    }
    worst
}


#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;
    use crate::model::{rates, PowerAllocation};
    use crate::testing::channel;

    fn one_user(ch: &SingleUserChannel) -> OfdmaInstance {
        OfdmaInstance {
            num_users: 1,
            num_subcarriers: ch.len(),
            direct_gain: vec![ch.gain().to_vec()],
            noise: vec![ch.noise().to_vec()],
            subcarrier_budget: vec![ch.cap().to_vec()],
            user_budget: None,
            rate_target: Some(vec![1.0]),
        }
    }

    /// Textbook water-filling without caps, `sum (tau - f)+ = budget`, by
    /// bisection on `tau`.
    fn uncapped_rate(gain: &[f64], noise: &[f64], budget: f64) -> f64 {
        let floors: Vec<f64> = (0..gain.len())
            .filter(|&n| gain[n] > 0.0)
            .map(|n| noise[n] / gain[n])
            .collect();
        let used = |tau: f64| floors.iter().map(|f| (tau - f).max(0.0)).sum::<f64>();
        let (mut lo, mut hi) = (0.0, floors.iter().copied().fold(0.0, f64::max) + budget);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if used(mid) < budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        floors.iter().map(|f| ((hi - f).max(0.0) / f).ln_1p()).sum::<f64>() / std::f64::consts::LN_2
    }

    proptest! {
        #[test]
        fn rate_and_power_nondecreasing_in_level(ch in channel(8), a in 0.0..30.0f64, d in 0.0..5.0f64) {
            prop_assert!(ch.rate_at(a + d) >= ch.rate_at(a));
            prop_assert!(ch.power_at(a + d) >= ch.power_at(a));
            let tiny = 1e-9;
            prop_assert!((ch.power_at(a + tiny) - ch.power_at(a)).abs() <= tiny * ch.len() as f64 + 1e-12);
        }

        #[test]
        fn min_power_meets_target(ch in channel(10), u in 0.01..0.999f64) {
            let gamma = ch.full_power_rate() * u;
            let sol = min_power_single_user(&ch, gamma, DEFAULT_EPS).unwrap().unwrap();
            let inst = one_user(&ch);
            let alloc = PowerAllocation { power: vec![sol.powers.clone()] };
            let r = rates(&inst, &alloc).unwrap().0[0];
            prop_assert!(r >= gamma - sol.eps_rate - 1e-12);
            prop_assert!(kkt_residual(&ch, sol.total_power, &sol.powers, &sol.water_level) <= 1e-8);
        }

        #[test]
        fn min_power_and_max_rate_are_dual(ch in channel(10), u in 0.01..0.999f64, v in 0.01..0.999f64) {
            let gamma = ch.full_power_rate() * u;
            let mp = min_power_single_user(&ch, gamma, DEFAULT_EPS).unwrap().unwrap();
            prop_assert!((max_rate_single_user(&ch, mp.total_power).rate - gamma).abs() <= 1e-6);

            let budget = ch.usable_cap_total() * v;
            let mr = max_rate_single_user(&ch, budget);
            prop_assert!(kkt_residual(&ch, budget, &mr.powers, &mr.water_level) <= 1e-8);
            let back = min_power_single_user(&ch, mr.rate, DEFAULT_EPS).unwrap().unwrap();
            prop_assert!((back.total_power - budget).abs() <= 1e-6);
        }

        #[test]
        fn large_caps_give_textbook_water_filling(ch in channel(8), budget in 0.01..20.0f64) {
            let wide = SingleUserChannel::new(
                ch.gain().to_vec(),
                ch.noise().to_vec(),
                vec![budget * 2.0; ch.len()],
            ).unwrap();
            let got = max_rate_single_user(&wide, budget).rate;
            let want = uncapped_rate(ch.gain(), ch.noise(), budget);
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
        }
    }
}
