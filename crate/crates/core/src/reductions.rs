//! Hardness gadgets built from 3-dimensional matching (3DM) instances.
//!
//! A 3DM instance of size `K` is a relation `R` of triples `(x, y, z)` with
//! every component in `1..=K`. The feasibility gadget has one user per `x`
//! and one subcarrier per `y` (first `K` subcarriers) and per `z` (last `K`).
//! User `x` sees noise 1 on the `y`s and noise 2 on the `z`s it shares a
//! triple with, and gain 1 on all of them; everything else is noise 3 and
//! gain 0.25. Per-subcarrier budgets are 3 on the `y` block and 2 on the `z`
//! block, and every user must reach rate 3.
//!
//! The gadget encodes only which `y`s and which `z`s each `x` is related to,
//! not which `(y, z)` pairs. Its feasibility therefore matches 3DM on
//! [`ThreeDMInstance::pair_closure`], which coincides with `R` whenever no
//! `x` has two triples that could be recombined.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{exact_feasibility_with, exact_max_utility_with, ExactOptions};
use crate::model::{OfdmaInstance, PowerAllocation, UtilityKind};

/// Largest 3DM size the backtracking solver accepts by default.
pub const DEFAULT_3DM_BOUND: usize = 8;

/// Slack used when comparing a utility optimum against a threshold.
pub const THRESHOLD_TOL: f64 = 1e-9;

pub type Triple = [usize; 3];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawThreeDm")]
pub struct ThreeDMInstance {
    size: usize,
    triples: Vec<Triple>,
}

#[derive(Deserialize)]
struct RawThreeDm {
    size: usize,
    triples: Vec<Triple>,
}

impl TryFrom<RawThreeDm> for ThreeDMInstance {
    type Error = Error;

    fn try_from(raw: RawThreeDm) -> Result<Self> {
        Self::new(raw.size, raw.triples)
    }
}

impl ThreeDMInstance {
    /// Components are 1-based. Rejects out-of-range components and repeated
    /// triples.
    pub fn new(size: usize, triples: Vec<Triple>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidThreeDm("size must be positive".into()));
        }
        let mut seen = HashSet::new();
        for t in &triples {
            if t.iter().any(|&c| c == 0 || c > size) {
                return Err(Error::InvalidThreeDm(format!(
                    "triple {t:?} has a component outside 1..={size}"
                )));
            }
            if !seen.insert(*t) {
                return Err(Error::InvalidThreeDm(format!("triple {t:?} is repeated")));
            }
        }
        Ok(Self { size, triples })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// The relation `{(x, y, z) : y in Y_x, z in Z_x}`, where `Y_x` and `Z_x`
    /// are the `y`s and `z`s appearing in triples of `x`.
    pub fn pair_closure(&self) -> Self {
        let mut triples = Vec::new();
        for x in 1..=self.size {
            let mut ys: Vec<usize> = self.triples.iter().filter(|t| t[0] == x).map(|t| t[1]).collect();
            let mut zs: Vec<usize> = self.triples.iter().filter(|t| t[0] == x).map(|t| t[2]).collect();
            ys.sort_unstable();
            ys.dedup();
            zs.sort_unstable();
            zs.dedup();
            for &y in &ys {
                for &z in &zs {
                    triples.push([x, y, z]);
                }
            }
        }
        Self {
            size: self.size,
            triples,
        }
    }

    /// A uniformly random relation with exactly `num_triples` triples.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, size: usize, num_triples: usize) -> Result<Self> {
        let total = size.pow(3);
        if num_triples > total {
            return Err(Error::InvalidThreeDm(format!(
                "cannot draw {num_triples} distinct triples from {total}"
            )));
        }
        let mut picked = sample(rng, total, num_triples).into_vec();
        picked.sort_unstable();
        let triples = picked
            .into_iter()
            .map(|i| [i / (size * size) + 1, i / size % size + 1, i % size + 1])
            .collect();
        Self::new(size, triples)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub chosen: Vec<Triple>,
}

/// The instance used to illustrate the feasibility gadget: size 4 with seven
/// triples.
pub fn worked_example() -> ThreeDMInstance {
    ThreeDMInstance::new(
        4,
        vec![
            [1, 2, 2],
            [1, 2, 4],
            [2, 1, 2],
            [2, 1, 3],
            [3, 2, 2],
            [3, 4, 3],
            [4, 3, 1],
        ],
    )
    .expect("valid instance")
}

/// The match of [`worked_example`].
pub fn worked_example_match() -> Match {
    Match {
        chosen: vec![[1, 2, 4], [2, 1, 2], [3, 4, 3], [4, 3, 1]],
    }
}

/// Whether `m` is drawn from the relation, pairwise disjoint in every
/// coordinate, and covers all three coordinate sets.
pub fn is_match(tdm: &ThreeDMInstance, m: &Match) -> bool {
    let k = tdm.size;
    if m.chosen.len() != k {
        return false;
    }
    let rel: HashSet<&Triple> = tdm.triples.iter().collect();
    let mut used = vec![vec![false; k + 1]; 3];
    for t in &m.chosen {
        if !rel.contains(t) {
            return false;
        }
        for (axis, &c) in t.iter().enumerate() {
            if used[axis][c] {
                return false;
            }
            used[axis][c] = true;
        }
    }
    true
}

/// Backtracking search assigning one triple to each `x` in turn.
pub fn solve_3dm_exact(tdm: &ThreeDMInstance) -> Result<Option<Match>> {
    solve_3dm_exact_with_bound(tdm, DEFAULT_3DM_BOUND)
}

pub fn solve_3dm_exact_with_bound(tdm: &ThreeDMInstance, bound: usize) -> Result<Option<Match>> {
    let k = tdm.size;
    if k > bound {
        return Err(Error::SizeBoundExceeded { size: k, bound });
    }
    let mut by_x: Vec<Vec<Triple>> = vec![Vec::new(); k + 1];
    for t in &tdm.triples {
        by_x[t[0]].push(*t);
    }
    if by_x[1..].iter().any(Vec::is_empty) {
        return Ok(None);
    }

    fn search(
        x: usize,
        by_x: &[Vec<Triple>],
        used_y: &mut [bool],
        used_z: &mut [bool],
        chosen: &mut Vec<Triple>,
    ) -> bool {
        if x == by_x.len() {
            return true;
        }
        for t in &by_x[x] {
            if used_y[t[1]] || used_z[t[2]] {
                continue;
            }
            used_y[t[1]] = true;
            used_z[t[2]] = true;
            chosen.push(*t);
            if search(x + 1, by_x, used_y, used_z, chosen) {
                return true;
            }
            chosen.pop();
            used_y[t[1]] = false;
            used_z[t[2]] = false;
        }
        false
    }

    let mut chosen = Vec::with_capacity(k);
    let found = search(
        1,
        &by_x,
        &mut vec![false; k + 1],
        &mut vec![false; k + 1],
        &mut chosen,
    );
    Ok(found.then_some(Match { chosen }))
}

/// Parameters of user `x` (0-based) on the gadget's `2K` subcarriers.
struct GadgetRow {
    gain: Vec<f64>,
    noise: Vec<f64>,
    budget: Vec<f64>,
}

fn gadget_rows(tdm: &ThreeDMInstance) -> Vec<GadgetRow> {
    let k = tdm.size;
    let mut rows: Vec<GadgetRow> = (0..k)
        .map(|_| GadgetRow {
            gain: vec![0.25; 2 * k],
            noise: vec![3.0; 2 * k],
            budget: [vec![3.0; k], vec![2.0; k]].concat(),
        })
        .collect();
    for &[x, y, z] in &tdm.triples {
        let row = &mut rows[x - 1];
        row.noise[y - 1] = 1.0;
        row.noise[k + z - 1] = 2.0;
        row.gain[y - 1] = 1.0;
        row.gain[k + z - 1] = 1.0;
    }
    rows
}

/// Feasibility gadget: `K` users, `2K` subcarriers, every target 3.
pub fn reduce_feasibility(tdm: &ThreeDMInstance) -> OfdmaInstance {
    let k = tdm.size;
    let rows = gadget_rows(tdm);
    OfdmaInstance {
        num_users: k,
        num_subcarriers: 2 * k,
        direct_gain: rows.iter().map(|r| r.gain.clone()).collect(),
        noise: rows.iter().map(|r| r.noise.clone()).collect(),
        subcarrier_budget: rows.iter().map(|r| r.budget.clone()).collect(),
        user_budget: None,
        rate_target: Some(vec![3.0; k]),
    }
}

/// Power 3 on each chosen `y` and 2 on each chosen `z`.
pub fn match_to_allocation(tdm: &ThreeDMInstance, m: &Match) -> Result<PowerAllocation> {
    if !is_match(tdm, m) {
        return Err(Error::NotAMatch);
    }
    let k = tdm.size;
    let mut alloc = PowerAllocation::zeros(k, 2 * k);
    for &[x, y, z] in &m.chosen {
        alloc.power[x - 1][y - 1] = 3.0;
        alloc.power[x - 1][k + z - 1] = 2.0;
    }
    Ok(alloc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Part of the embedded gadget.
    #[serde(rename = "type-i")]
    TypeI,
    /// Padding that is satisfied on its own.
    #[serde(rename = "type-ii")]
    TypeII,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedInstanceBundle {
    pub instance: OfdmaInstance,
    /// Utility level reached iff the source instance has a match; absent for
    /// feasibility gadgets.
    pub threshold: Option<f64>,
    pub utility: Option<UtilityKind>,
    pub user_roles: Vec<Role>,
    pub subcarrier_roles: Vec<Role>,
    pub source: ThreeDMInstance,
}

/// Dimensions of a padded gadget for `c = num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PaddedShape {
    /// Type-I users, the 3DM size.
    gadget_users: usize,
    users: usize,
    subcarriers: usize,
    /// True when `c > 2`: a single Type-II user takes every Type-II
    /// subcarrier. Otherwise each Type-II user takes one.
    single_dummy: bool,
}

impl PaddedShape {
    fn type_two_users(&self) -> usize {
        self.users - self.gadget_users
    }

    fn type_two_subcarriers(&self) -> usize {
        self.subcarriers - 2 * self.gadget_users
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn padded_shape(gadget_users: usize, num: u64, den: u64) -> Result<PaddedShape> {
    let bad = |reason: String| Error::InvalidRatio { num, den, reason };
    if den == 0 {
        return Err(bad("denominator must be positive".into()));
    }
    if num <= den {
        return Err(bad("c must exceed 1".into()));
    }
    let g = gcd(num, den);
    let (p, q) = (num / g, den / g);
    let k1 = gadget_users as u64;
    let (users, single_dummy) = if 2 * q > p {
        // (c-1)K Type-I users, so K = k1 q / (p - q).
        if !(k1 * q).is_multiple_of(p - q) {
            return Err(bad(format!(
                "(c-1)K = {k1} needs K = {k1}*{q}/{} to be an integer",
                p - q
            )));
        }
        (k1 * q / (p - q), false)
    } else if 2 * q < p {
        (k1 + 1, true)
    } else {
        (k1, false)
    };
    if users % q != 0 {
        return Err(bad(format!(
            "N = cK must be an integer, so K = {users} must be a multiple of {q}"
        )));
    }
    Ok(PaddedShape {
        gadget_users,
        users: users as usize,
        subcarriers: (users * p / q) as usize,
        single_dummy,
    })
}

fn padded_bundle(tdm: &ThreeDMInstance, shape: PaddedShape) -> ReducedInstanceBundle {
    let k1 = shape.gadget_users;
    let (k, n) = (shape.users, shape.subcarriers);
    let rows = gadget_rows(tdm);
    let user_roles: Vec<Role> = (0..k).map(|u| if u < k1 { Role::TypeI } else { Role::TypeII }).collect();
    let subcarrier_roles: Vec<Role> = (0..n)
        .map(|s| if s < 2 * k1 { Role::TypeI } else { Role::TypeII })
        .collect();
    let mut gain = vec![vec![0.0; n]; k];
    let mut noise = vec![vec![0.0; n]; k];
    let mut budget = vec![vec![0.0; n]; k];
    for u in 0..k {
        for s in 0..n {
            let (a, e, p) = match (user_roles[u], subcarrier_roles[s]) {
                (Role::TypeI, Role::TypeI) => (rows[u].gain[s], rows[u].noise[s], rows[u].budget[s]),
                (Role::TypeII, Role::TypeII) => (1.0, 0.3, 3.0),
                _ => (0.25, 3.0, 1.0),
            };
            gain[u][s] = a;
            noise[u][s] = e;
            budget[u][s] = p;
        }
    }
    let dummy_target = if shape.single_dummy {
        shape.type_two_subcarriers() as f64 * 11f64.log2()
    } else {
        11f64.log2()
    };
    let targets = user_roles
        .iter()
        .map(|r| if *r == Role::TypeI { 3.0 } else { dummy_target })
        .collect();
    ReducedInstanceBundle {
        instance: OfdmaInstance {
            num_users: k,
            num_subcarriers: n,
            direct_gain: gain,
            noise,
            subcarrier_budget: budget,
            user_budget: None,
            rate_target: Some(targets),
        },
        threshold: None,
        utility: None,
        user_roles,
        subcarrier_roles,
        source: tdm.clone(),
    }
}

/// Feasibility gadget for `N = cK` with `c = num/den > 1`.
///
/// The 3DM instance supplies the Type-I users. For `1 < c < 2` the Type-II
/// users each need `log2 11`, which one Type-II subcarrier at full power
/// provides; for `c > 2` a single Type-II user needs `log2 11` per Type-II
/// subcarrier. Type-II pairs have noise 0.3, gain 1, budget 3; mixed pairs
/// have noise 3, gain 0.25, budget 1.
pub fn reduce_feasibility_c(tdm: &ThreeDMInstance, num: u64, den: u64) -> Result<ReducedInstanceBundle> {
    let shape = padded_shape(tdm.size, num, den)?;
    Ok(padded_bundle(tdm, shape))
}

/// Utility gadget at `c = 2`: the feasibility gadget with user budgets 5.
/// Every utility reaches 3 iff the source instance has a match.
pub fn reduce_utility(tdm: &ThreeDMInstance, kind: UtilityKind) -> ReducedInstanceBundle {
    let k = tdm.size;
    let mut instance = reduce_feasibility(tdm);
    instance.user_budget = Some(vec![5.0; k]);
    instance.rate_target = None;
    ReducedInstanceBundle {
        instance,
        threshold: Some(3.0),
        utility: Some(kind),
        user_roles: vec![Role::TypeI; k],
        subcarrier_roles: vec![Role::TypeI; 2 * k],
        source: tdm.clone(),
    }
}

/// Sum-rate gadget for `N = cK`: the padded feasibility gadget with user
/// budgets 5 for Type-I users and 3 per intended Type-II subcarrier for
/// Type-II users. The threshold is the mean rate when every Type-I user gets
/// 3 and every Type-II user its target.
pub fn reduce_utility_c(
    tdm: &ThreeDMInstance,
    kind: UtilityKind,
    num: u64,
    den: u64,
) -> Result<ReducedInstanceBundle> {
    let shape = padded_shape(tdm.size, num, den)?;
    if shape.type_two_users() == 0 {
        return Ok(reduce_utility(tdm, kind));
    }
    if kind != UtilityKind::SumRate {
        return Err(Error::Unsupported(format!(
            "padded utility gadgets are defined for sum-rate only, got {kind}"
        )));
    }
    let mut b = padded_bundle(tdm, shape);
    let dummy_budget = if shape.single_dummy {
        3.0 * shape.type_two_subcarriers() as f64
    } else {
        3.0
    };
    let targets = b.instance.rate_target.take().expect("padded gadget has targets");
    b.instance.user_budget = Some(
        b.user_roles
            .iter()
            .map(|r| if *r == Role::TypeI { 5.0 } else { dummy_budget })
            .collect(),
    );
    b.threshold = Some(targets.iter().sum::<f64>() / shape.users as f64);
    b.utility = Some(kind);
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "variant")]
pub enum Variant {
    Feasibility,
    FeasibilityC { num: u64, den: u64 },
    Utility { kind: UtilityKind },
    UtilityC { kind: UtilityKind, num: u64, den: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub tdm_answer: bool,
    pub ofdma_answer: bool,
    pub agree: bool,
}

/// Build the gadget for `variant`, then compare the 3DM answer with the
/// exhaustive answer on the gadget.
pub fn verify_reduction_roundtrip(
    tdm: &ThreeDMInstance,
    variant: Variant,
    opts: &ExactOptions,
) -> Result<RoundTrip> {
    let tdm_answer = solve_3dm_exact(tdm)?.is_some();
    let ofdma_answer = match variant {
        Variant::Feasibility => exact_feasibility_with(&reduce_feasibility(tdm), opts)?,
        Variant::FeasibilityC { num, den } => {
            exact_feasibility_with(&reduce_feasibility_c(tdm, num, den)?.instance, opts)?
        }
        Variant::Utility { kind } => utility_answer(&reduce_utility(tdm, kind), opts)?,
        Variant::UtilityC { kind, num, den } => {
            utility_answer(&reduce_utility_c(tdm, kind, num, den)?, opts)?
        }
    };
    Ok(RoundTrip {
        tdm_answer,
        ofdma_answer,
        agree: tdm_answer == ofdma_answer,
    })
}

fn utility_answer(b: &ReducedInstanceBundle, opts: &ExactOptions) -> Result<bool> {
    let kind = b.utility.expect("utility bundle");
    let threshold = b.threshold.expect("utility bundle");
    let best = exact_max_utility_with(&b.instance, kind, opts)?;
    Ok(best.value >= threshold - THRESHOLD_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rates;

    #[test]
    fn three_dm_validation() {
        assert!(ThreeDMInstance::new(2, vec![[1, 2, 3]]).is_err());
        assert!(ThreeDMInstance::new(2, vec![[0, 1, 1]]).is_err());
        assert!(ThreeDMInstance::new(2, vec![[1, 1, 1], [1, 1, 1]]).is_err());
        assert!(ThreeDMInstance::new(0, vec![]).is_err());
        let parsed: std::result::Result<ThreeDMInstance, _> =
            serde_json::from_str(r#"{"size":2,"triples":[[1,1,3]]}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn is_match_examples() {
        let tdm = worked_example();
        assert!(is_match(&tdm, &worked_example_match()));
        assert!(!is_match(&tdm, &Match { chosen: vec![] }));
        let shared_y = Match {
            chosen: vec![[1, 2, 2], [2, 1, 3], [3, 2, 2], [4, 3, 1]],
        };
        assert!(!is_match(&tdm, &shared_y));
        let foreign = Match {
            chosen: vec![[1, 1, 1], [2, 2, 2], [3, 3, 3], [4, 4, 4]],
        };
        assert!(!is_match(&tdm, &foreign));
    }

    #[test]
    fn solver_examples() {
        let m = solve_3dm_exact(&worked_example()).unwrap().unwrap();
        assert!(is_match(&worked_example(), &m));

        let k = 3;
        let all: Vec<Triple> = (1..=k)
            .flat_map(|x| (1..=k).flat_map(move |y| (1..=k).map(move |z| [x, y, z])))
            .collect();
        assert!(solve_3dm_exact(&ThreeDMInstance::new(k, all.clone()).unwrap())
            .unwrap()
            .is_some());
        let no_x1: Vec<Triple> = all.into_iter().filter(|t| t[0] != 1).collect();
        assert!(solve_3dm_exact(&ThreeDMInstance::new(k, no_x1).unwrap())
            .unwrap()
            .is_none());

        let big = ThreeDMInstance::new(9, vec![[1, 1, 1]]).unwrap();
        assert!(matches!(
            solve_3dm_exact(&big),
            Err(Error::SizeBoundExceeded { size: 9, bound: 8 })
        ));
    }

    #[test]
    fn worked_example_gadget() {
        let inst = reduce_feasibility(&worked_example());
        assert_eq!(inst.num_users, 4);
        assert_eq!(inst.num_subcarriers, 8);
        for row in &inst.subcarrier_budget {
            assert_eq!(row, &vec![3.0, 3.0, 3.0, 3.0, 2.0, 2.0, 2.0, 2.0]);
        }
        assert_eq!(inst.noise[0], vec![3.0, 1.0, 3.0, 3.0, 3.0, 2.0, 3.0, 2.0]);
        assert_eq!(inst.direct_gain[2], vec![0.25, 1.0, 0.25, 1.0, 0.25, 1.0, 1.0, 0.25]);

        let alloc = match_to_allocation(&worked_example(), &worked_example_match()).unwrap();
        assert_eq!(alloc.power[0], vec![0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(alloc.power[3], vec![0.0, 0.0, 3.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        assert!(alloc.is_ofdma());
        assert_eq!(rates(&inst, &alloc).unwrap().0, vec![3.0; 4]);
    }

    #[test]
    fn match_to_allocation_rejects_non_match() {
        let m = Match {
            chosen: vec![[1, 2, 2]],
        };
        assert_eq!(match_to_allocation(&worked_example(), &m), Err(Error::NotAMatch));
    }

    #[test]
    fn padded_shapes() {
        let s = padded_shape(2, 3, 1).unwrap();
        assert_eq!((s.users, s.subcarriers, s.type_two_subcarriers()), (3, 9, 5));
        assert!(s.single_dummy);

        let s = padded_shape(2, 3, 2).unwrap();
        assert_eq!((s.users, s.subcarriers, s.type_two_users()), (4, 6, 2));

        let s = padded_shape(3, 4, 2).unwrap();
        assert_eq!((s.users, s.subcarriers), (3, 6));

        assert!(matches!(padded_shape(3, 5, 3), Err(Error::InvalidRatio { .. })));
        assert!(matches!(padded_shape(2, 5, 2), Err(Error::InvalidRatio { .. })));
        assert!(padded_shape(2, 1, 1).is_err());
    }

    #[test]
    fn padded_feasibility_parameters() {
        let tdm = ThreeDMInstance::new(2, vec![[1, 1, 1], [2, 2, 2]]).unwrap();
        let b = reduce_feasibility_c(&tdm, 3, 2).unwrap();
        let inst = &b.instance;
        assert_eq!(b.user_roles, vec![Role::TypeI, Role::TypeI, Role::TypeII, Role::TypeII]);
        assert_eq!(b.subcarrier_roles.iter().filter(|r| **r == Role::TypeI).count(), 4);
        assert_eq!(inst.noise[2][4], 0.3);
        assert_eq!(inst.direct_gain[2][4], 1.0);
        assert_eq!(inst.subcarrier_budget[2][4], 3.0);
        assert_eq!(inst.noise[0][5], 3.0);
        assert_eq!(inst.direct_gain[3][0], 0.25);
        assert_eq!(inst.subcarrier_budget[3][0], 1.0);
        assert_eq!(inst.rate_target.as_ref().unwrap()[2], 11f64.log2());
        assert!(inst.full_power_rate(2, 4) >= 11f64.log2() - 1e-12);

        let b = reduce_feasibility_c(&tdm, 3, 1).unwrap();
        assert_eq!(b.instance.rate_target.as_ref().unwrap()[2], 5.0 * 11f64.log2());
    }

    #[test]
    fn c_two_delegates() {
        let tdm = worked_example();
        let b = reduce_feasibility_c(&tdm, 4, 2).unwrap();
        assert_eq!(b.instance, reduce_feasibility(&tdm));
        let u = reduce_utility_c(&tdm, UtilityKind::MinRate, 2, 1).unwrap();
        assert_eq!(u, reduce_utility(&tdm, UtilityKind::MinRate));
    }

    #[test]
    fn utility_thresholds() {
        let tdm = ThreeDMInstance::new(2, vec![[1, 1, 1], [2, 2, 2]]).unwrap();
        let l = 11f64.log2();
        let b = reduce_utility_c(&tdm, UtilityKind::SumRate, 3, 2).unwrap();
        assert!((b.threshold.unwrap() - (3.0 * 0.5 + 0.5 * l)).abs() < 1e-12);
        let b = reduce_utility_c(&tdm, UtilityKind::SumRate, 3, 1).unwrap();
        assert!((b.threshold.unwrap() - (3.0 * 2.0 + 5.0 * l) / 3.0).abs() < 1e-12);
        assert!(reduce_utility_c(&tdm, UtilityKind::MinRate, 3, 1).is_err());
    }

    #[test]
    fn closure_contains_relation() {
        let tdm = worked_example();
        let c = tdm.pair_closure();
        let set: HashSet<_> = c.triples().iter().collect();
        assert!(tdm.triples().iter().all(|t| set.contains(t)));
        assert!(set.contains(&[3, 2, 3]));
        assert_eq!(reduce_feasibility(&c), reduce_feasibility(&tdm));
    }

    #[test]
    fn random_instances_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let t = ThreeDMInstance::random(&mut rng, 3, 7).unwrap();
            assert_eq!(t.triples().len(), 7);
        }
        assert!(ThreeDMInstance::random(&mut rng, 2, 9).is_err());
    }
}
