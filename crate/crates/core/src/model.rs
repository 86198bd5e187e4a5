//! Two-bidder multi-unit auction domain: valuations, price schedules,
//! allocations, outcomes, and the welfare oracle.
//!
//! Alice's valuation is conventionally `v`, Bob's is `u`. Both are indexed by
//! bundle size `k = 0..=m`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Rat, Result};

/// A normalized, non-decreasing valuation over bundles of `0..=m` identical items.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Valuation(Vec<Rat>);

impl Valuation {
    pub fn new(values: Vec<Rat>) -> Result<Valuation> {
        if values.len() < 3 {
            return Err(Error::TooFewItems(values.len().saturating_sub(1)));
        }
        if !values[0].is_zero() {
            return Err(Error::NotNormalized);
        }
        for (k, x) in values.iter().enumerate() {
            if x.is_negative() {
                return Err(Error::Negative(k));
            }
        }
        for k in 1..values.len() {
            if values[k] < values[k - 1] {
                return Err(Error::NotMonotone(k));
            }
        }
        Ok(Valuation(values))
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_pairs(values: &[(i64, i64)]) -> Result<Valuation> {
        Valuation::new(values.iter().map(|&(n, d)| Rat::new(n, d)).collect())
    }

    /// Convenience constructor from integers.
    pub fn from_ints(values: &[i64]) -> Result<Valuation> {
        Valuation::new(values.iter().map(|&n| Rat::int(n)).collect())
    }

    pub fn zero(m: usize) -> Valuation {
        Valuation(vec![Rat::zero(); m + 1])
    }

    /// Number of items.
    pub fn m(&self) -> usize {
        self.0.len() - 1
    }

    pub fn at(&self, k: usize) -> &Rat {
        &self.0[k]
    }

    pub fn top(&self) -> &Rat {
        &self.0[self.m()]
    }

    pub fn values(&self) -> &[Rat] {
        &self.0
    }

    /// `α·v`. Panics if `factor` is negative.
    pub fn scale(&self, factor: &Rat) -> Valuation {
        assert!(!factor.is_negative(), "negative scaling factor");
        Valuation(self.0.iter().map(|x| x * factor).collect())
    }
}

impl<'de> Deserialize<'de> for Valuation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Valuation, D::Error> {
        let values = Vec::<Rat>::deserialize(deserializer)?;
        Valuation::new(values).map_err(serde::de::Error::custom)
    }
}

/// Per-bundle prices posted to one bidder; `prices[k]` is the price of `k` items.
///
/// Prices need not be monotone in `k`: the shifted welfare maximizer charges
/// more for `m - 1` items than for `m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaymentSchedule(Vec<Rat>);

impl PaymentSchedule {
    pub fn new(prices: Vec<Rat>) -> Result<PaymentSchedule> {
        if prices.len() < 3 {
            return Err(Error::TooFewItems(prices.len().saturating_sub(1)));
        }
        if !prices[0].is_zero() {
            return Err(Error::NonZeroEmptyPrice);
        }
        if let Some(k) = prices.iter().position(Rat::is_negative) {
            return Err(Error::Negative(k));
        }
        Ok(PaymentSchedule(prices))
    }

    pub fn m(&self) -> usize {
        self.0.len() - 1
    }

    pub fn at(&self, k: usize) -> &Rat {
        &self.0[k]
    }

    pub fn prices(&self) -> &[Rat] {
        &self.0
    }

    pub fn scale(&self, factor: &Rat) -> PaymentSchedule {
        PaymentSchedule(self.0.iter().map(|x| x * factor).collect())
    }

    /// Whether `prices[k] <= prices[k']` for all `k < k'`.
    pub fn is_monotone(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Bundle sizes `(Alice, Bob)` with `alice + bob <= m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Allocation2 {
    pub alice: usize,
    pub bob: usize,
}

impl Allocation2 {
    pub const fn new(alice: usize, bob: usize) -> Allocation2 {
        Allocation2 { alice, bob }
    }

    pub fn items(&self) -> usize {
        self.alice + self.bob
    }

    pub fn is_feasible(&self, m: usize) -> bool {
        self.items() <= m
    }

    /// Every allocation of at most `m` items, ordered by `(alice, bob)`.
    pub fn all(m: usize) -> Vec<Allocation2> {
        (0..=m).flat_map(|a| (0..=m - a).map(move |b| Allocation2::new(a, b))).collect()
    }

    pub fn welfare(&self, v: &Valuation, u: &Valuation) -> Rat {
        v.at(self.alice) + u.at(self.bob)
    }
}

impl std::fmt::Display for Allocation2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.alice, self.bob)
    }
}

/// The result of one auction run.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub allocation: Allocation2,
    pub pay_alice: Rat,
    pub pay_bob: Rat,
    pub util_alice: Rat,
    pub util_bob: Rat,
    pub welfare: Rat,
}

impl Outcome {
    pub fn new(v: &Valuation, u: &Valuation, allocation: Allocation2, pay_alice: Rat, pay_bob: Rat) -> Outcome {
        let util_alice = v.at(allocation.alice) - &pay_alice;
        let util_bob = u.at(allocation.bob) - &pay_bob;
        Outcome { allocation, welfare: allocation.welfare(v, u), pay_alice, pay_bob, util_alice, util_bob }
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    Ok(())
}

/// Bundle sizes maximizing `v(k) - prices[k]`.
///
/// Never empty; since the empty bundle is free, the maximal profit is at least 0.
pub fn winning_set(v: &Valuation, sched: &PaymentSchedule) -> Result<BTreeSet<usize>> {
    check_len(v.values().len(), sched.prices().len())?;
    let profits: Vec<Rat> = (0..=v.m()).map(|k| v.at(k) - sched.at(k)).collect();
    let best = profits.iter().max().expect("non-empty");
    Ok(profits.iter().enumerate().filter(|(_, p)| *p == best).map(|(k, _)| k).collect())
}

/// Maximum welfare `max_k v(k) + u(m-k)` with the smallest maximizing `k` as witness.
pub fn optimal_welfare2(v: &Valuation, u: &Valuation) -> Result<(Rat, Allocation2)> {
    check_len(v.values().len(), u.values().len())?;
    let m = v.m();
    let mut best: Option<(Rat, Allocation2)> = None;
    for k in 0..=m {
        let alloc = Allocation2::new(k, m - k);
        let w = alloc.welfare(v, u);
        if best.as_ref().is_none_or(|(b, _)| w > *b) {
            best = Some((w, alloc));
        }
    }
    Ok(best.expect("m >= 2"))
}

/// Approximation ratio `opt / achieved`, defined as 1 when `opt = 0`.
pub fn ratio(opt: &Rat, achieved: &Rat) -> Result<Rat> {
    if opt.is_negative() || achieved.is_negative() {
        return Err(Error::NegativeInput);
    }
    if achieved > opt {
        return Err(Error::AchievedExceedsOpt { opt: opt.to_string(), achieved: achieved.to_string() });
    }
    if opt.is_zero() {
        return Ok(Rat::one());
    }
    Ok(opt / achieved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use proptest::prelude::*;

    fn val(xs: &[i64]) -> Valuation {
        Valuation::from_ints(xs).unwrap()
    }

    fn sched(xs: &[i64]) -> PaymentSchedule {
        PaymentSchedule::new(xs.iter().map(|&x| Rat::int(x)).collect()).unwrap()
    }

    #[test]
    fn make_valuation() {
        assert_eq!(val(&[0, 3, 5]).m(), 2);
        assert_eq!(Valuation::from_ints(&[1, 3, 5]), Err(Error::NotNormalized));
        assert_eq!(Valuation::from_ints(&[0, 5, 3]), Err(Error::NotMonotone(2)));
        assert_eq!(Valuation::from_ints(&[0, -1, 3]), Err(Error::Negative(1)));
        assert_eq!(Valuation::from_ints(&[0, 1]), Err(Error::TooFewItems(1)));
    }

    #[test]
    fn winning_set_examples() {
        let ws = winning_set(&val(&[0, 3, 5]), &sched(&[0, 2, 4])).unwrap();
        assert_eq!(ws.into_iter().collect::<Vec<_>>(), vec![1, 2]);
        let ws = winning_set(&val(&[0, 2, 4]), &sched(&[0, 2, 5])).unwrap();
        assert_eq!(ws.into_iter().collect::<Vec<_>>(), vec![0, 1]);
        let ws = winning_set(&val(&[0, 0, 0]), &sched(&[0, 0, 0])).unwrap();
        assert_eq!(ws.into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(winning_set(&val(&[0, 0, 0, 0]), &sched(&[0, 0, 0])), Err(Error::LengthMismatch(4, 3)));
    }

    #[test]
    fn optimal_welfare_examples() {
        let (w, a) = optimal_welfare2(&val(&[0, 3, 5]), &val(&[0, 2, 4])).unwrap();
        assert_eq!((w, a), (Rat::int(5), Allocation2::new(1, 1)));
        let (w, a) = optimal_welfare2(&val(&[0, 1, 1, 4]), &val(&[0, 2, 3, 3])).unwrap();
        assert_eq!((w, a), (Rat::int(4), Allocation2::new(1, 2)));
        let (w, a) = optimal_welfare2(&val(&[0, 0, 0]), &val(&[0, 0, 0])).unwrap();
        assert_eq!((w, a), (Rat::zero(), Allocation2::new(0, 2)));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(ratio(&Rat::one(), &rat(7, 10)).unwrap(), rat(10, 7));
        assert_eq!(ratio(&Rat::zero(), &Rat::zero()).unwrap(), Rat::one());
        assert_eq!(ratio(&Rat::int(5), &Rat::int(5)).unwrap(), Rat::one());
        assert!(matches!(ratio(&Rat::one(), &Rat::int(2)), Err(Error::AchievedExceedsOpt { .. })));
        assert_eq!(ratio(&Rat::int(-1), &Rat::zero()), Err(Error::NegativeInput));
    }

    #[test]
    fn outcome_utilities() {
        let v = val(&[0, 3, 5]);
        let u = val(&[0, 2, 4]);
        let o = Outcome::new(&v, &u, Allocation2::new(2, 0), Rat::int(4), Rat::zero());
        assert_eq!(o.util_alice, Rat::one());
        assert_eq!(o.util_bob, Rat::zero());
        assert_eq!(o.welfare, Rat::int(5));
    }

    fn arb_valuation(m: usize) -> impl Strategy<Value = Valuation> {
        proptest::collection::vec(0i64..12, m).prop_map(|mut xs| {
            xs.sort_unstable();
            let mut values = vec![Rat::zero()];
            values.extend(xs.into_iter().map(|x| Rat::new(x, 3)));
            Valuation::new(values).unwrap()
        })
    }

    fn arb_pair() -> impl Strategy<Value = (Valuation, Valuation)> {
        (2usize..=8).prop_flat_map(|m| (arb_valuation(m), arb_valuation(m)))
    }

    proptest! {
        #[test]
        fn optimal_welfare_matches_all_allocations((v, u) in arb_pair()) {
            let (w, a) = optimal_welfare2(&v, &u).unwrap();
            let naive = Allocation2::all(v.m())
                .into_iter()
                .map(|a| a.welfare(&v, &u))
                .max()
                .unwrap();
            prop_assert_eq!(&w, &naive);
            prop_assert_eq!(a.welfare(&v, &u), w);
        }

        #[test]
        fn optimal_welfare_is_homogeneous((v, u) in arb_pair(), n in 1i64..20, d in 1i64..20) {
            let alpha = Rat::new(n, d);
            let (w, _) = optimal_welfare2(&v, &u).unwrap();
            let (ws, _) = optimal_welfare2(&v.scale(&alpha), &u.scale(&alpha)).unwrap();
            prop_assert_eq!(ws, &alpha * &w);
        }

        #[test]
        fn winning_set_nonempty_with_nonnegative_profit(
            v in arb_valuation(4),
            raw in proptest::collection::vec(0i64..15, 4),
        ) {
            let mut prices = vec![Rat::zero()];
            prices.extend(raw.into_iter().map(|x| Rat::new(x, 3)));
            let s = PaymentSchedule::new(prices).unwrap();
            let ws = winning_set(&v, &s).unwrap();
            prop_assert!(!ws.is_empty());
            let k = *ws.iter().next().unwrap();
            let profit = v.at(k) - s.at(k);
            prop_assert!(!profit.is_negative());
            prop_assert_eq!(profit.is_zero(), ws.contains(&0));
        }
    }
}
