//! Two-item mechanisms induced by an `m`-item mechanism.
//!
//! A two-item valuation `(v1, v2)` is stretched to `m` items by an
//! `(l, h)`-extension: nothing below `l` items, `v1` from `l` up to `h - 1`,
//! `v2` from `h` on. Running the `m`-item mechanism on Alice's
//! `(l1, h1)`-extension and Bob's `(l2, h2)`-extension, then reading bundles
//! back through the thresholds, gives a two-item mechanism. Its posted prices
//! are the `m`-item prices at the thresholds: Bob pays `f_{l2}` for one item
//! and `f_{h2}` for two.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::exec::{self, Execution};
use crate::mechanisms::Mechanism;
use crate::model::{Allocation2, Outcome, PaymentSchedule, Valuation};
use crate::normal_form::FittedParams;
use crate::verify::{Bidder, Counterexample, PropertyReport};
use crate::{Error, Rat, Result};

/// Thresholds `(l1, h1, l2, h2)` for an `m`-item mechanism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InducedIndex {
    pub m: usize,
    pub l1: usize,
    pub h1: usize,
    pub l2: usize,
    pub h2: usize,
}

impl InducedIndex {
    /// Requires `1 <= l < h <= m` on both sides, `l1 + l2 <= m`, and
    /// `l1 + h2 > m`, `l2 + h1 > m`, so one item each fits and two items for
    /// one bidder leave nothing for the other.
    pub fn new(m: usize, l1: usize, h1: usize, l2: usize, h2: usize) -> Result<InducedIndex> {
        let idx = InducedIndex { m, l1, h1, l2, h2 };
        let bad = |why: &str| Err(Error::BadIndices(format!("{idx} with m = {m}: {why}")));
        if l1 == 0 || l2 == 0 {
            return bad("thresholds must be positive");
        }
        if !(l1 < h1 && h1 <= m && l2 < h2 && h2 <= m) {
            return bad("need l < h <= m");
        }
        if l1 + l2 > m {
            return bad("l1 + l2 > m");
        }
        if l1 + h2 <= m {
            return bad("l1 + h2 <= m");
        }
        if l2 + h1 <= m {
            return bad("l2 + h1 <= m");
        }
        Ok(idx)
    }

    /// Every valid index, in lexicographic order.
    pub fn all_valid(m: usize) -> Vec<InducedIndex> {
        let mut out = Vec::new();
        for l1 in 1..=m {
            for h1 in l1 + 1..=m {
                for l2 in 1..=m {
                    for h2 in l2 + 1..=m {
                        if let Ok(idx) = InducedIndex::new(m, l1, h1, l2, h2) {
                            out.push(idx);
                        }
                    }
                }
            }
        }
        out
    }
}

impl std::fmt::Display for InducedIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.l1, self.h1, self.l2, self.h2)
    }
}

/// `(v1, v2)` with `0 <= v1 <= v2`; the empty bundle is worth 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoItemValuation {
    pub v1: Rat,
    pub v2: Rat,
}

impl TwoItemValuation {
    pub fn new(v1: Rat, v2: Rat) -> Result<TwoItemValuation> {
        if v1.is_negative() {
            return Err(Error::Negative(1));
        }
        if v2 < v1 {
            return Err(Error::NotMonotone(2));
        }
        Ok(TwoItemValuation { v1, v2 })
    }

    pub fn to_valuation(&self) -> Valuation {
        Valuation::new(vec![Rat::zero(), self.v1.clone(), self.v2.clone()]).expect("validated")
    }
}

impl TryFrom<&Valuation> for TwoItemValuation {
    type Error = Error;

    fn try_from(v: &Valuation) -> Result<TwoItemValuation> {
        if v.m() != 2 {
            return Err(Error::LengthMismatch(3, v.m() + 1));
        }
        Ok(TwoItemValuation { v1: v.at(1).clone(), v2: v.at(2).clone() })
    }
}

/// The `(l, h)`-extension of `v` to `m` items.
pub fn extend_valuation(v: &TwoItemValuation, l: usize, h: usize, m: usize) -> Result<Valuation> {
    if !(1 <= l && l < h && h <= m) {
        return Err(Error::BadIndices(format!("need 1 <= l < h <= m, got l = {l}, h = {h}, m = {m}")));
    }
    let values = (0..=m)
        .map(|k| match k {
            k if k < l => Rat::zero(),
            k if k < h => v.v1.clone(),
            _ => v.v2.clone(),
        })
        .collect();
    Valuation::new(values)
}

/// Reads an `m`-item bundle size back as 0, 1 or 2 items.
pub fn collapse(k: usize, l: usize, h: usize) -> usize {
    if k < l {
        0
    } else if k < h {
        1
    } else {
        2
    }
}

/// The two-item mechanism induced by `inner` at `index`.
#[derive(Clone, Debug)]
pub struct Induced<M> {
    pub inner: M,
    pub index: InducedIndex,
}

impl<M: Mechanism> Induced<M> {
    pub fn new(inner: M, index: InducedIndex) -> Induced<M> {
        Induced { inner, index }
    }

    fn extend_alice(&self, v: &Valuation) -> Result<Valuation> {
        let i = &self.index;
        extend_valuation(&TwoItemValuation::try_from(v)?, i.l1, i.h1, i.m)
    }

    fn extend_bob(&self, u: &Valuation) -> Result<Valuation> {
        let i = &self.index;
        extend_valuation(&TwoItemValuation::try_from(u)?, i.l2, i.h2, i.m)
    }
}

fn thresholds(sched: PaymentSchedule, l: usize, h: usize) -> Result<PaymentSchedule> {
    PaymentSchedule::new(vec![Rat::zero(), sched.at(l).clone(), sched.at(h).clone()])
}

impl<M: Mechanism> Mechanism for Induced<M> {
    fn label(&self) -> String {
        format!("induced{} of {}", self.index, self.inner.label())
    }

    fn run(&self, v: &Valuation, u: &Valuation) -> Result<Outcome> {
        let ev = self.extend_alice(v)?;
        let eu = self.extend_bob(u)?;
        let out = self.inner.run(&ev, &eu)?;
        let i = &self.index;
        let alloc =
            Allocation2::new(collapse(out.allocation.alice, i.l1, i.h1), collapse(out.allocation.bob, i.l2, i.h2));
        Ok(Outcome::new(v, u, alloc, out.pay_alice, out.pay_bob))
    }

    fn alice_prices(&self, bob: &Valuation) -> Option<Result<PaymentSchedule>> {
        let eu = match self.extend_bob(bob) {
            Ok(eu) => eu,
            Err(e) => return Some(Err(e)),
        };
        let i = self.index;
        self.inner.alice_prices(&eu).map(|r| r.and_then(|g| thresholds(g, i.l1, i.h1)))
    }

    fn bob_prices(&self, alice: &Valuation) -> Option<Result<PaymentSchedule>> {
        let ev = match self.extend_alice(alice) {
            Ok(ev) => ev,
            Err(e) => return Some(Err(e)),
        };
        let i = self.index;
        self.inner.bob_prices(&ev).map(|r| r.and_then(|f| thresholds(f, i.l2, i.h2)))
    }
}

/// Runs the induced mechanism once.
pub fn induced_outcome<M: Mechanism + ?Sized>(
    mech: &M,
    index: InducedIndex,
    v: &TwoItemValuation,
    u: &TwoItemValuation,
) -> Result<Outcome> {
    Induced::new(mech, index).run(&v.to_valuation(), &u.to_valuation())
}

/// Reads `(w, θ_A, θ_B)` off the induced Bob prices at Alice reports
/// `(0, 1)` and `(1, 1)`, without validating them.
pub fn fit_induced_raw<M: Mechanism + ?Sized>(mech: &M, index: InducedIndex) -> Result<FittedParams> {
    let induced = Induced::new(mech, index);
    let price = |v1: i64| -> Result<PaymentSchedule> {
        let v = TwoItemValuation::new(Rat::int(v1), Rat::one())?.to_valuation();
        induced.bob_prices(&v).ok_or(Error::NoSchedules)?
    };
    let at_01 = price(0)?;
    let at_11 = price(1)?;
    for (sched, at) in [(&at_01, "(0,1)"), (&at_11, "(1,1)")] {
        if !sched.at(2).is_positive() {
            return Err(Error::ZeroTwoItemPrice(at.into()));
        }
    }
    let w = at_01.at(2).clone();
    Ok(FittedParams { theta_a: &w / at_11.at(2), theta_b: at_01.at(1) / &w, w })
}

/// [`fit_induced_raw`], rejecting values outside the triage constraints.
pub fn fit_induced_params<M: Mechanism + ?Sized>(mech: &M, index: InducedIndex) -> Result<FittedParams> {
    let fitted = fit_induced_raw(mech, index)?;
    fitted.to_params()?;
    Ok(fitted)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    W,
    ThetaA,
    ThetaB,
}

impl Param {
    pub fn of(self, p: &FittedParams) -> &Rat {
        match self {
            Param::W => &p.w,
            Param::ThetaA => &p.theta_a,
            Param::ThetaB => &p.theta_b,
        }
    }
}

/// Parameters two induced mechanisms must share: `w` always; all three when
/// the indices differ only in one `h`; `θ_A` when they differ only in `l2`,
/// `θ_B` when only in `l1`.
pub fn shared_params(a: &InducedIndex, b: &InducedIndex) -> Vec<Param> {
    let diff = [a.l1 != b.l1, a.h1 != b.h1, a.l2 != b.l2, a.h2 != b.h2];
    match diff {
        [false, true, false, false] | [false, false, false, true] | [false, false, false, false] => {
            vec![Param::W, Param::ThetaA, Param::ThetaB]
        }
        [false, false, true, false] => vec![Param::W, Param::ThetaA],
        [true, false, false, false] => vec![Param::W, Param::ThetaB],
        _ => vec![Param::W],
    }
}

/// Every unordered pair of valid indices.
pub fn all_index_pairs(m: usize) -> Vec<(InducedIndex, InducedIndex)> {
    let all = InducedIndex::all_valid(m);
    let mut out = Vec::new();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            out.push((*a, *b));
        }
    }
    out
}

fn fit_many<M: Mechanism + ?Sized>(
    mech: &M,
    indices: &BTreeSet<InducedIndex>,
    exec: Execution,
) -> Result<BTreeMap<InducedIndex, FittedParams>> {
    let list: Vec<InducedIndex> = indices.iter().copied().collect();
    let fits = exec::map(exec, &list, |idx| fit_induced_raw(mech, *idx));
    list.into_iter().zip(fits).map(|(i, f)| f.map(|f| (i, f))).collect()
}

/// Checks that fitted parameters agree wherever [`shared_params`] says they must.
pub fn check_param_equalities<M: Mechanism + ?Sized>(
    mech: &M,
    pairs: &[(InducedIndex, InducedIndex)],
    exec: Execution,
) -> Result<PropertyReport> {
    let indices: BTreeSet<InducedIndex> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let fits = fit_many(mech, &indices, exec)?;
    let mut comparisons = 0u64;
    let mut cx = None;
    'outer: for (a, b) in pairs {
        for param in shared_params(a, b) {
            comparisons += 1;
            let (x, y) = (param.of(&fits[a]), param.of(&fits[b]));
            if x != y {
                cx = Some(Counterexample::ParameterMismatch {
                    first: *a,
                    second: *b,
                    parameter: param,
                    first_value: x.clone(),
                    second_value: y.clone(),
                });
                break 'outer;
            }
        }
    }
    Ok(PropertyReport::from_parts("induced_param_equalities", mech.label(), pairs.len() as u64, comparisons, cx))
}

/// `θ_A = θ_B = 1` at every index `(l1, m, l2, m)` with `l1, l2 >= 2`.
pub fn check_top_thresholds<M: Mechanism + ?Sized>(mech: &M, m: usize, exec: Execution) -> Result<PropertyReport> {
    let indices: BTreeSet<InducedIndex> =
        InducedIndex::all_valid(m).into_iter().filter(|i| i.h1 == m && i.h2 == m && i.l1 >= 2 && i.l2 >= 2).collect();
    let fits = fit_many(mech, &indices, exec)?;
    let cx = fits.iter().find_map(|(idx, fit)| {
        [Param::ThetaA, Param::ThetaB].into_iter().find_map(|param| {
            let actual = param.of(fit);
            (*actual != Rat::one()).then(|| Counterexample::ParameterValue {
                index: *idx,
                parameter: param,
                expected: Rat::one(),
                actual: actual.clone(),
            })
        })
    });
    let n = indices.len() as u64;
    Ok(PropertyReport::from_parts("induced_top_thresholds", mech.label(), n, 2 * n, cx))
}

/// An `l`-simple valuation: 0 below `l`, `mid` from `l` to `m - 1`, `top` at `m`.
pub fn make_simple(l: usize, mid: Rat, top: Rat, m: usize) -> Result<Valuation> {
    if !(0 < l && l < m) {
        return Err(Error::BadIndices(format!("need 0 < l < m, got l = {l}, m = {m}")));
    }
    let values = (0..=m)
        .map(|k| match k {
            k if k < l => Rat::zero(),
            k if k < m => mid.clone(),
            _ => top.clone(),
        })
        .collect();
    Valuation::new(values)
}

/// Every `l`-simple valuation with `mid <= top` drawn from `levels`.
pub fn simple_valuations(m: usize, levels: &[Rat]) -> Vec<Valuation> {
    let mut out = BTreeSet::new();
    for l in 1..m {
        for mid in levels {
            for top in levels.iter().filter(|t| *t >= mid) {
                if let Ok(v) = make_simple(l, mid.clone(), top.clone(), m) {
                    out.insert(v);
                }
            }
        }
    }
    out.into_iter().collect()
}

/// For every `v` with `v(1) = 0` and every `k ∉ {1, m-1}`: Bob's price for
/// `k` items is `w·(v(m) - v(m-k))` and Alice's is `(v(m) - v(m-k))/w`.
pub fn check_simple_payments<M: Mechanism + ?Sized>(
    mech: &M,
    w: &Rat,
    universe: &[Valuation],
    exec: Execution,
) -> Result<PropertyReport> {
    if !w.is_positive() {
        return Err(Error::NonPositiveWeight);
    }
    let relevant: Vec<&Valuation> = universe.iter().filter(|v| v.at(1).is_zero()).collect();
    let found = exec::map(exec, &relevant, |v| -> Result<(u64, Option<Counterexample>)> {
        let m = v.m();
        let f = mech.bob_prices(v).ok_or(Error::NoSchedules)??;
        let g = mech.alice_prices(v).ok_or(Error::NoSchedules)??;
        let mut count = 0;
        for k in (1..=m).filter(|&k| k != 1 && k != m - 1) {
            let diff = v.top() - v.at(m - k);
            for (charged, sched, expected) in [(Bidder::Bob, &f, w * &diff), (Bidder::Alice, &g, &diff / w)] {
                count += 1;
                if *sched.at(k) != expected {
                    let cx = Counterexample::Price {
                        valuation: (*v).clone(),
                        charged,
                        bundle: k,
                        expected,
                        actual: sched.at(k).clone(),
                    };
                    return Ok((count, Some(cx)));
                }
            }
        }
        Ok((count, None))
    });
    let mut comparisons = 0;
    let mut cx = None;
    for item in found {
        let (count, found) = item?;
        comparisons += count;
        if cx.is_none() {
            cx = found;
        }
    }
    Ok(PropertyReport::from_parts("simple_payments", mech.label(), relevant.len() as u64, comparisons, cx))
}

/// `v(1) = 0` and `v(m-1) = v(m-2)`.
pub fn is_degenerate(v: &Valuation) -> bool {
    let m = v.m();
    m > 2 && v.at(1).is_zero() && v.at(m - 1) == v.at(m - 2)
}

/// How the weight enters the welfare the mechanism is claimed to maximize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightReading {
    /// `v(k) + w·u(m-k)`.
    Literal,
    /// `v(k) + u(m-k)/w`, which is what prices `w·(v(m) - v(m-k))` to Bob reward.
    Inverse,
}

impl WeightReading {
    pub fn multiplier(self, w: &Rat) -> Rat {
        match self {
            WeightReading::Literal => w.clone(),
            WeightReading::Inverse => w.recip(),
        }
    }
}

/// The output on a degenerate pair, scored under both weight readings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateOutcome {
    pub allocation: Allocation2,
    pub welfare: Rat,
    pub literal: Rat,
    pub literal_max: Rat,
    pub inverse: Rat,
    pub inverse_max: Rat,
}

impl DegenerateOutcome {
    pub fn passed(&self, reading: WeightReading) -> bool {
        match reading {
            WeightReading::Literal => self.literal == self.literal_max,
            WeightReading::Inverse => self.inverse == self.inverse_max,
        }
    }
}

/// `max_k v(k) + c·u(m-k)`.
pub fn weighted_optimum(v: &Valuation, u: &Valuation, c: &Rat) -> Rat {
    let m = v.m();
    (0..=m).map(|k| v.at(k) + c * u.at(m - k)).max().expect("m >= 2")
}

pub fn degenerate_welfare<M: Mechanism + ?Sized>(
    mech: &M,
    w: &Rat,
    v: &Valuation,
    u: &Valuation,
) -> Result<DegenerateOutcome> {
    for (name, x) in [("alice", v), ("bob", u)] {
        if !is_degenerate(x) {
            return Err(Error::NotDegenerate(format!("{name} {:?}", x.values())));
        }
    }
    if !w.is_positive() {
        return Err(Error::NonPositiveWeight);
    }
    let out = mech.run(v, u)?;
    let a = out.allocation;
    let score = |c: &Rat| v.at(a.alice) + c * u.at(a.bob);
    let inv = w.recip();
    Ok(DegenerateOutcome {
        allocation: a,
        welfare: out.welfare,
        literal: score(w),
        literal_max: weighted_optimum(v, u, w),
        inverse: score(&inv),
        inverse_max: weighted_optimum(v, u, &inv),
    })
}

/// The weighted welfare of the output is maximal on every degenerate pair
/// drawn from `universe`.
pub fn check_degenerate_welfare<M: Mechanism + ?Sized>(
    mech: &M,
    w: &Rat,
    universe: &[Valuation],
    reading: WeightReading,
    exec: Execution,
) -> Result<PropertyReport> {
    let degenerate: Vec<&Valuation> = universe.iter().filter(|v| is_degenerate(v)).collect();
    let c = reading.multiplier(w);
    let rows = exec::map(exec, &degenerate, |v| -> Result<Option<Counterexample>> {
        for u in &degenerate {
            let d = degenerate_welfare(mech, w, v, u)?;
            if !d.passed(reading) {
                let (achieved, optimum) = match reading {
                    WeightReading::Literal => (d.literal, d.literal_max),
                    WeightReading::Inverse => (d.inverse, d.inverse_max),
                };
                return Ok(Some(Counterexample::WeightedWelfare {
                    alice: (*v).clone(),
                    bob: (*u).clone(),
                    weight: c.clone(),
                    achieved,
                    optimum,
                }));
            }
        }
        Ok(None)
    });
    let mut cx = None;
    for row in rows {
        if let (None, Some(found)) = (&cx, row?) {
            cx = Some(found);
        }
    }
    let n = degenerate.len() as u64;
    let name = match reading {
        WeightReading::Literal => "degenerate_weighted_welfare",
        WeightReading::Inverse => "degenerate_inverse_weighted_welfare",
    };
    Ok(PropertyReport::from_parts(name, mech.label(), n * n, n * n, cx))
}
