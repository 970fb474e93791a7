//! Min-power allocation when subcarriers barely outnumber users.
//!
//! With `N = K` every user gets exactly one subcarrier, so the problem is a
//! linear assignment between users and subcarriers whose edge weight is the
//! single-subcarrier power needed to reach the user's target. Infeasible
//! edges carry the sentinel `big_m`, the sum of every per-subcarrier budget.
//!
//! With `N = K + C` the subcarriers are first split into `K` nonempty blocks
//! (there are `S(K+C, K)` ways), each block weight is a single-user min-power
//! solve, and the assignment step pairs users with blocks. The best value over
//! all partitions is the optimum.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{OfdmaInstance, PowerAllocation, SolvedAllocation};
use crate::waterfill::{min_power_single_user, SingleUserChannel, DEFAULT_EPS, RATE_TOL};

/// User-by-column edge weights with the infeasibility sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub w: Vec<Vec<f64>>,
    pub big_m: f64,
}

impl WeightMatrix {
    pub fn rows(&self) -> usize {
        self.w.len()
    }

    pub fn cols(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }
}

/// A bijection `perm[user] = column` and its total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub value: f64,
}

/// Single-subcarrier weights `(2^gamma_k - 1) * noise / gain` for edges whose
/// full-power rate reaches the target, `big_m` elsewhere. Requires `N = K`.
pub fn edge_weights_square(inst: &OfdmaInstance) -> Result<WeightMatrix> {
    if inst.num_subcarriers != inst.num_users {
        return Err(Error::Shape(format!(
            "square assignment needs N = K, got K = {}, N = {}",
            inst.num_users, inst.num_subcarriers
        )));
    }
    Ok(square_weights(inst)?.0)
}

fn square_weights(inst: &OfdmaInstance) -> Result<(WeightMatrix, Vec<Vec<bool>>)> {
    let targets = inst.rate_targets()?;
    let big_m = inst.total_subcarrier_budget();
    let k = inst.num_users;
    let mut w = vec![vec![big_m; k]; k];
    let mut feasible = vec![vec![false; k]; k];
    for (user, &gamma) in targets.iter().enumerate() {
        for n in 0..k {
            let gain = inst.direct_gain[user][n];
            if gain <= 0.0 {
                continue;
            }
            if inst.full_power_rate(user, n) >= gamma - RATE_TOL * gamma.max(1.0) {
                let need = (gamma.exp2() - 1.0) * inst.noise[user][n] / gain;
                w[user][n] = need.min(inst.subcarrier_budget[user][n]);
                feasible[user][n] = true;
            }
        }
    }
    Ok((WeightMatrix { w, big_m }, feasible))
}

/// Minimum-weight perfect matching of a square matrix, `O(K^3)`.
///
/// Shortest augmenting paths with row and column potentials; among optimal
/// matchings the one found first in index order is returned.
pub fn hungarian(w: &WeightMatrix) -> Result<Assignment> {
    let n = w.rows();
    if w.w.iter().any(|row| row.len() != n) {
        return Err(Error::NotSquare {
            rows: n,
            cols: w.w.iter().map(Vec::len).find(|&c| c != n).unwrap_or(n),
        });
    }
    if n == 0 {
        return Ok(Assignment {
            perm: Vec::new(),
            value: 0.0,
        });
    }

    let cost = &w.w;
    // 1-based potentials; column 0 is the virtual root of each search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[row_of[j] - 1] = j - 1;
    }
    let value = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(Assignment { perm, value })
}

/// Optimal assignment that uses only feasible edges, if one exists.
///
/// Normally the sentinel alone decides: a matching that needs a `big_m` edge
/// costs at least `big_m`, a feasible one at most `big_m`. The two can tie
/// when a feasible matching spends every budget exactly, so a matching that
/// picked a sentinel edge is re-solved with the sentinel raised above any
/// feasible total.
fn feasible_assignment(w: &WeightMatrix, feasible: &[Vec<bool>]) -> Result<Option<Assignment>> {
    let uses_only_feasible =
        |a: &Assignment| a.perm.iter().enumerate().all(|(i, &j)| feasible[i][j]);
    let a = hungarian(w)?;
    if uses_only_feasible(&a) {
        return Ok(Some(a));
    }
    let raised = 2.0 * w.big_m + 1.0;
    let inflated = WeightMatrix {
        w: w.w
            .iter()
            .zip(feasible)
            .map(|(row, ok)| {
                row.iter()
                    .zip(ok)
                    .map(|(&x, &f)| if f { x } else { raised })
                    .collect()
            })
            .collect(),
        big_m: raised,
    };
    let b = hungarian(&inflated)?;
    Ok(uses_only_feasible(&b).then_some(b))
}

/// Global optimum of the min-power problem for `N = K`; `None` if infeasible.
pub fn min_power_square(inst: &OfdmaInstance) -> Result<Option<SolvedAllocation>> {
    inst.validate()?;
    if inst.num_subcarriers != inst.num_users {
        return Err(Error::Shape(format!(
            "square assignment needs N = K, got K = {}, N = {}",
            inst.num_users, inst.num_subcarriers
        )));
    }
    let (w, feasible) = square_weights(inst)?;
    let Some(a) = feasible_assignment(&w, &feasible)? else {
        return Ok(None);
    };
    let mut alloc = PowerAllocation::zeros(inst.num_users, inst.num_subcarriers);
    for (user, &n) in a.perm.iter().enumerate() {
        alloc.power[user][n] = w.w[user][n];
    }
    Ok(Some(SolvedAllocation {
        value: alloc.total(),
        alloc,
    }))
}

/// A set partition into unlabeled nonempty blocks, each sorted ascending;
/// blocks are ordered by their smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

/// Iterator over the partitions of `{0, .., n-1}` into exactly `k` blocks.
///
/// Walks restricted growth strings (`a[0] = 0`, `a[i] <= 1 + max(a[..i])`)
/// whose maximum is `k - 1`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Partitions {
    n: usize,
    k: usize,
    rgs: Vec<usize>,
    pending: bool,
}

pub fn partitions(n: usize, k: usize) -> Partitions {
    let pending = k <= n && (k > 0 || n == 0);
    let rgs = if pending {
        (0..n).map(|i| (i + k).saturating_sub(n)).collect()
    } else {
        Vec::new()
    };
    Partitions { n, k, rgs, pending }
}

impl Partitions {
    fn advance(&mut self) -> bool {
        let (n, k) = (self.n, self.k);
        let mut prefix_max = vec![0usize; n];
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(self.rgs[i - 1]);
        }
        for i in (1..n).rev() {
            let next = self.rgs[i] + 1;
            if next > prefix_max[i] + 1 || next > k - 1 {
                continue;
            }
            let mut top = prefix_max[i].max(next);
            if k - 1 - top > n - 1 - i {
                continue;
            }
            self.rgs[i] = next;
            for j in i + 1..n {
                if k - 1 - top < n - j {
                    self.rgs[j] = 0;
                } else {
                    top += 1;
                    self.rgs[j] = top;
                }
            }
            return true;
        }
        false
    }
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if !self.pending {
            return None;
        }
        let mut blocks = vec![Vec::new(); self.k];
        for (i, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        self.pending = self.advance();
        Some(Partition { blocks })
    }
}

/// Stirling number of the second kind `S(n, k)` by the recurrence
/// `S(n+1, k) = S(n, k-1) + k S(n, k)`.
///
/// Panics if the value does not fit in a `u128`.
pub fn stirling(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            row[j] = (j as u128)
                .checked_mul(row[j])
                .and_then(|x| x.checked_add(row[j - 1]))
                .expect("Stirling number overflows u128");
        }
        row[0] = 0;
    }
    row[k]
}

/// Cost, enumeration index, partition and block-to-user matching.
type Candidate = (f64, usize, Partition, Vec<usize>);

/// Global optimum of the min-power problem for `N = K + C`; `None` if
/// infeasible. Enumerates all `S(K+C, K)` partitions in parallel.
pub fn min_power_offset(inst: &OfdmaInstance, c: usize) -> Result<Option<SolvedAllocation>> {
    min_power_offset_with_eps(inst, c, DEFAULT_EPS)
}

pub fn min_power_offset_with_eps(
    inst: &OfdmaInstance,
    c: usize,
    eps: f64,
) -> Result<Option<SolvedAllocation>> {
    inst.validate()?;
    let k = inst.num_users;
    if inst.num_subcarriers != k + c {
        return Err(Error::Shape(format!(
            "offset assignment needs N = K + C, got K = {k}, N = {}, C = {c}",
            inst.num_subcarriers
        )));
    }
    let targets = inst.rate_targets()?;
    let big_m = inst.total_subcarrier_budget();

    let block_cost = |user: usize, block: &[usize]| -> Result<Option<f64>> {
        match SingleUserChannel::for_user(inst, user, block) {
            Ok(ch) => Ok(min_power_single_user(&ch, targets[user], eps)?.map(|s| s.total_power)),
            Err(Error::InvalidChannel(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let best = partitions(k + c, k)
        .enumerate()
        .par_bridge()
        .map(|(idx, part)| -> Result<Option<Candidate>> {
            let mut w = vec![vec![big_m; k]; k];
            let mut feasible = vec![vec![false; k]; k];
            for user in 0..k {
                for (b, block) in part.blocks.iter().enumerate() {
                    if let Some(cost) = block_cost(user, block)? {
                        w[user][b] = cost;
                        feasible[user][b] = true;
                    }
                }
            }
            let wm = WeightMatrix { w, big_m };
            Ok(feasible_assignment(&wm, &feasible)?.map(|a| (a.value, idx, part, a.perm)))
        })
        .try_reduce(
            || None,
            |a, b| {
                Ok(match (a, b) {
                    (None, x) | (x, None) => x,
                    (Some(x), Some(y)) => {
                        if (y.0, y.1) < (x.0, x.1) {
                            Some(y)
                        } else {
                            Some(x)
                        }
                    }
                })
            },
        )?;

    let Some((_, _, part, perm)) = best else {
        return Ok(None);
    };
    let mut alloc = PowerAllocation::zeros(k, inst.num_subcarriers);
    for (user, &b) in perm.iter().enumerate() {
        let block = &part.blocks[b];
        let ch = SingleUserChannel::for_user(inst, user, block)?;
        let sol = min_power_single_user(&ch, targets[user], eps)?
            .expect("block was feasible during enumeration");
        for (&n, &p) in block.iter().zip(&sol.powers) {
            alloc.power[user][n] = p;
        }
    }
    Ok(Some(SolvedAllocation {
        value: alloc.total(),
        alloc,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wm(w: Vec<Vec<f64>>) -> WeightMatrix {
        WeightMatrix { w, big_m: 100.0 }
    }

    fn single(gain: f64, noise: f64, budget: f64, gamma: f64) -> OfdmaInstance {
        OfdmaInstance {
            num_users: 1,
            num_subcarriers: 1,
            direct_gain: vec![vec![gain]],
            noise: vec![vec![noise]],
            subcarrier_budget: vec![vec![budget]],
            user_budget: None,
            rate_target: Some(vec![gamma]),
        }
    }

    #[test]
    fn square_weights_examples() {
        let w = edge_weights_square(&single(1.0, 1.0, 7.0, 3.0)).unwrap();
        assert_eq!(w.w, vec![vec![7.0]]);
        assert_eq!(w.big_m, 7.0);

        let w = edge_weights_square(&single(1.0, 1.0, 3.0, 3.0)).unwrap();
        assert_eq!(w.w, vec![vec![w.big_m]]);

        let w = edge_weights_square(&single(1.0, 1.0, 3.0, 1e-12)).unwrap();
        assert!(w.w[0][0] < 1e-11);
    }

    #[test]
    fn square_weights_need_square_instance() {
        let mut inst = single(1.0, 1.0, 7.0, 3.0);
        inst.num_subcarriers = 2;
        assert!(matches!(edge_weights_square(&inst), Err(Error::Shape(_))));
    }

    #[test]
    fn hungarian_small() {
        let a = hungarian(&wm(vec![vec![1.0, 9.0], vec![9.0, 1.0]])).unwrap();
        assert_eq!(a.perm, vec![0, 1]);
        assert_eq!(a.value, 2.0);

        let a = hungarian(&wm(vec![vec![1.0, 2.0], vec![1.0, 2.0]])).unwrap();
        assert_eq!(a.value, 3.0);

        let a = hungarian(&wm(vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ]))
        .unwrap();
        assert_eq!(a.value, 5.0);
    }

    #[test]
    fn hungarian_rejects_rectangular() {
        let err = hungarian(&wm(vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]));
        assert!(matches!(err, Err(Error::NotSquare { rows: 2, cols: 3 })));
    }

    #[test]
    fn square_single_user() {
        let s = min_power_square(&single(1.0, 1.0, 7.0, 3.0)).unwrap().unwrap();
        assert_eq!(s.value, 7.0);
        assert_eq!(s.alloc.power, vec![vec![7.0]]);
    }

    #[test]
    fn square_forced_matching() {
        // User 0 can only reach its target on subcarrier 1, user 1 only on 0.
        let inst = OfdmaInstance {
            num_users: 2,
            num_subcarriers: 2,
            direct_gain: vec![vec![0.1, 1.0], vec![1.0, 0.1]],
            noise: vec![vec![1.0; 2]; 2],
            subcarrier_budget: vec![vec![3.0; 2]; 2],
            user_budget: None,
            rate_target: Some(vec![1.0, 2.0]),
        };
        let s = min_power_square(&inst).unwrap().unwrap();
        assert_eq!(s.alloc.power, vec![vec![0.0, 1.0], vec![3.0, 0.0]]);
        assert_eq!(s.value, 4.0);
    }

    #[test]
    fn square_infeasible_row() {
        let inst = OfdmaInstance {
            num_users: 2,
            num_subcarriers: 2,
            direct_gain: vec![vec![1.0; 2]; 2],
            noise: vec![vec![1.0; 2]; 2],
            subcarrier_budget: vec![vec![3.0; 2]; 2],
            user_budget: None,
            rate_target: Some(vec![1.0, 2.5]),
        };
        assert!(min_power_square(&inst).unwrap().is_none());
    }

    #[test]
    fn partition_counts() {
        assert_eq!(partitions(4, 4).count(), 1);
        assert_eq!(
            partitions(3, 3).next().unwrap().blocks,
            vec![vec![0], vec![1], vec![2]]
        );
        assert_eq!(partitions(5, 4).count(), 10);
        assert_eq!(partitions(4, 2).count(), 7);
        assert_eq!(partitions(3, 4).count(), 0);
        assert_eq!(partitions(3, 0).count(), 0);
    }

    #[test]
    fn partitions_are_distinct_and_valid() {
        let all: Vec<_> = partitions(6, 3).collect();
        let mut seen = std::collections::HashSet::new();
        for p in &all {
            assert_eq!(p.blocks.len(), 3);
            assert!(p.blocks.iter().all(|b| !b.is_empty()));
            let mut items: Vec<usize> = p.blocks.iter().flatten().copied().collect();
            items.sort_unstable();
            assert_eq!(items, (0..6).collect::<Vec<_>>());
            assert!(seen.insert(p.clone()));
        }
        assert_eq!(all.len() as u128, stirling(6, 3));
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling(5, 4), 10);
        assert_eq!(stirling(7, 3), 301);
        assert_eq!(stirling(4, 2), 7);
        assert_eq!(stirling(0, 0), 1);
        assert_eq!(stirling(3, 0), 0);
        for k in 0..12 {
            assert_eq!(stirling(k, k), 1);
            assert_eq!(stirling(k + 1, k), (k * (k + 1) / 2) as u128);
        }
    }

    #[test]
    fn offset_zero_matches_square() {
        let inst = OfdmaInstance {
            num_users: 2,
            num_subcarriers: 2,
            direct_gain: vec![vec![0.5, 2.0], vec![1.5, 1.0]],
            noise: vec![vec![1.0, 0.5], vec![2.0, 1.0]],
            subcarrier_budget: vec![vec![8.0; 2]; 2],
            user_budget: None,
            rate_target: Some(vec![1.5, 2.0]),
        };
        let a = min_power_square(&inst).unwrap().unwrap();
        let b = min_power_offset(&inst, 0).unwrap().unwrap();
        assert!((a.value - b.value).abs() < 1e-8, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn offset_shape_checked() {
        let inst = single(1.0, 1.0, 7.0, 3.0);
        assert!(matches!(min_power_offset(&inst, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn offset_infeasible_everywhere() {
        let inst = OfdmaInstance {
            num_users: 1,
            num_subcarriers: 3,
            direct_gain: vec![vec![1.0; 3]],
            noise: vec![vec![1.0; 3]],
            subcarrier_budget: vec![vec![1.0; 3]],
            user_budget: None,
            rate_target: Some(vec![3.5]),
        };
        assert!(min_power_offset(&inst, 2).unwrap().is_none());
    }
}
