//! Strategies shared by the property tests.

use proptest::prelude::*;

use crate::model::OfdmaInstance;
use crate::waterfill::SingleUserChannel;

pub fn positive(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

pub fn channel(max_len: usize) -> impl Strategy<Value = SingleUserChannel> {
    (1..=max_len)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![1 => Just(0.0), 9 => positive(0.05, 20.0)], n),
                prop::collection::vec(positive(0.05, 20.0), n),
                prop::collection::vec(positive(0.05, 20.0), n),
            )
        })
        .prop_filter_map("needs a usable subcarrier", |(g, e, p)| {
            SingleUserChannel::new(g, e, p).ok()
        })
}

/// Instance with every parameter drawn independently; both objectives set.
pub fn instance(k: usize, n: usize) -> impl Strategy<Value = OfdmaInstance> {
    let mat = |lo, hi| prop::collection::vec(prop::collection::vec(positive(lo, hi), n), k);
    (
        mat(0.1, 10.0),
        mat(0.1, 10.0),
        mat(0.2, 5.0),
        prop::collection::vec(0.1..3.0f64, k),
        prop::collection::vec(positive(0.5, 10.0), k),
    )
        .prop_map(move |(g, e, p, gamma, budget)| OfdmaInstance {
            num_users: k,
            num_subcarriers: n,
            direct_gain: g,
            noise: e,
            subcarrier_budget: p,
            user_budget: Some(budget),
            rate_target: Some(gamma),
        })
}

/// Instance with `K` in `1..=max_k` and `N` in `K..=K + max_extra`.
pub fn sized_instance(max_k: usize, max_extra: usize) -> impl Strategy<Value = OfdmaInstance> {
    (1..=max_k, 0..=max_extra).prop_flat_map(|(k, c)| instance(k, k + c))
}
