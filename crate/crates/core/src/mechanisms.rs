//! Price-schedule constructors for the four truthful families (triage,
//! weighted VCG, shifted welfare maximizer, fractions auction) and the
//! taxation-principle engine that turns a pair of schedules into an outcome.
//!
//! Every family here is a taxation mechanism: Alice faces prices that depend
//! only on Bob's report and vice versa, and each bidder receives a
//! profit-maximizing bundle.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{optimal_welfare2, winning_set, Allocation2, Outcome, PaymentSchedule, Valuation};
use crate::{Error, Rat, Result};

/// Parameters `(w, θ_A, θ_B)` of a triage auction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TriageParams {
    pub w: Rat,
    pub theta_a: Rat,
    pub theta_b: Rat,
}

impl TriageParams {
    /// Requires `w > 0`, `θ_A, θ_B ∈ (0, 1]` and `θ_A >= 1 - θ_B`.
    pub fn new(w: Rat, theta_a: Rat, theta_b: Rat) -> Result<TriageParams> {
        if !w.is_positive() {
            return Err(Error::ConstraintViolated(format!("w = {w} must be positive")));
        }
        for (name, t) in [("theta_a", &theta_a), ("theta_b", &theta_b)] {
            if !t.is_positive() || *t > Rat::one() {
                return Err(Error::ConstraintViolated(format!("{name} = {t} must lie in (0, 1]")));
            }
        }
        if theta_a < Rat::one() - &theta_b {
            return Err(Error::ConstraintViolated(format!(
                "theta_a = {theta_a} < 1 - theta_b = {}",
                Rat::one() - &theta_b
            )));
        }
        Ok(TriageParams { w, theta_a, theta_b })
    }

    /// Like [`TriageParams::new`] but skips the `θ_A >= 1 - θ_B` check, for
    /// probing what happens when the constraint is dropped.
    pub fn unchecked(w: Rat, theta_a: Rat, theta_b: Rat) -> TriageParams {
        TriageParams { w, theta_a, theta_b }
    }

    /// `(1, 1, 1)`, the VCG point.
    pub fn vcg() -> TriageParams {
        TriageParams { w: Rat::one(), theta_a: Rat::one(), theta_b: Rat::one() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftedParams {
    pub alpha: Rat,
}

impl ShiftedParams {
    pub fn new(alpha: Rat) -> Result<ShiftedParams> {
        if !alpha.is_positive() || alpha > Rat::one() {
            return Err(Error::ConstraintViolated(format!("alpha = {alpha} must lie in (0, 1]")));
        }
        Ok(ShiftedParams { alpha })
    }
}

/// Fractions `α_1 <= … <= α_{m-1}`; `alphas[t - 1]` is `α_t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FractionsParams {
    pub alphas: Vec<Rat>,
}

impl FractionsParams {
    pub fn new(alphas: Vec<Rat>) -> Result<FractionsParams> {
        if alphas.is_empty() {
            return Err(Error::ConstraintViolated("need at least one fraction".into()));
        }
        if !alphas[0].is_positive() {
            return Err(Error::ZeroAlpha);
        }
        if alphas.windows(2).any(|w| w[0] > w[1]) || alphas[alphas.len() - 1] > Rat::one() {
            return Err(Error::ConstraintViolated("fractions must satisfy alpha_1 <= ... <= alpha_(m-1) <= 1".into()));
        }
        Ok(FractionsParams { alphas })
    }

    /// `α_t` for `1 <= t <= m - 1`.
    pub fn alpha(&self, t: usize) -> &Rat {
        &self.alphas[t - 1]
    }

    pub fn m(&self) -> usize {
        self.alphas.len() + 1
    }
}

/// Which bidder a schedule is posted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Prices Bob faces, induced by Alice's valuation; uses `w`.
    ChargeBob,
    /// Prices Alice faces, induced by Bob's valuation; uses `1/w` with the
    /// roles of `θ_A` and `θ_B` exchanged.
    ChargeAlice,
}

/// Triage prices induced by `other`.
///
/// For [`Side::ChargeBob`] with Alice's valuation `v`:
/// `p_m = w·v(m)` if `v(1) < θ_A·v(m)`, else `w·v(1)/θ_A`;
/// `p_k = p_m - w·v(m-k)` for `2 <= k <= m-1`;
/// `p_1 = p_m - w·v(m-1)` if `v(m-1) > (1-θ_B)·v(m)`, else `p_m - w·(1-θ_B)·v(m)`.
pub fn triage_schedule(other: &Valuation, params: &TriageParams, side: Side) -> PaymentSchedule {
    let (weight, theta_top, theta_one) = match side {
        Side::ChargeBob => (params.w.clone(), &params.theta_a, &params.theta_b),
        Side::ChargeAlice => (params.w.recip(), &params.theta_b, &params.theta_a),
    };
    let m = other.m();
    let top = other.top();
    let p_m = if other.at(1) < &(theta_top * top) { &weight * top } else { &weight * other.at(1) / theta_top };
    let mut prices = vec![Rat::zero(); m + 1];
    for k in 2..m {
        prices[k] = &p_m - &weight * other.at(m - k);
    }
    let one_minus = Rat::one() - theta_one;
    prices[1] = if other.at(m - 1) > &(&one_minus * top) {
        &p_m - &weight * other.at(m - 1)
    } else {
        &p_m - &weight * &one_minus * top
    };
    prices[m] = p_m;
    PaymentSchedule::new(prices).expect("triage prices are non-negative")
}

/// Weighted VCG prices `weight·(v(m) - v(m-t))`. Pass `1/w` for Alice's side.
pub fn wvcg_schedule(other: &Valuation, weight: &Rat) -> Result<PaymentSchedule> {
    if !weight.is_positive() {
        return Err(Error::NonPositiveWeight);
    }
    let m = other.m();
    let prices = (0..=m).map(|t| weight * (other.top() - other.at(m - t))).collect();
    PaymentSchedule::new(prices)
}

/// Shifted welfare maximizer prices: `(1+α)·v(m) - v(m-t)` for `0 < t < m`,
/// `v(m)` for `t = m`. The same formula serves both sides.
pub fn shifted_schedule(other: &Valuation, params: &ShiftedParams) -> PaymentSchedule {
    let m = other.m();
    let shifted_top = (Rat::one() + &params.alpha) * other.top();
    let mut prices: Vec<Rat> = (0..=m).map(|t| &shifted_top - other.at(m - t)).collect();
    prices[0] = Rat::zero();
    prices[m] = other.top().clone();
    PaymentSchedule::new(prices).expect("shifted prices are non-negative")
}

/// Fractions auction schedules `(Alice's, Bob's)`.
///
/// Bob pays `α_t·v(m)` for `0 < t < m` and `v(m)` for `m`. Alice pays
/// `max{u(m), u(m-1)/α_{m-1}, …, u(m-t)/α_{m-t}}` for `t > 0`, where the term for
/// index 0 is taken as 0.
pub fn fractions_schedules(
    v: &Valuation,
    u: &Valuation,
    params: &FractionsParams,
) -> Result<(PaymentSchedule, PaymentSchedule)> {
    if v.m() != u.m() {
        return Err(Error::LengthMismatch(v.m() + 1, u.m() + 1));
    }
    Ok((fractions_alice(u, params)?, fractions_bob(v, params)?))
}

fn check_fraction_len(m: usize, params: &FractionsParams) -> Result<()> {
    if params.m() != m {
        return Err(Error::LengthMismatch(params.alphas.len(), m - 1));
    }
    if !params.alphas[0].is_positive() {
        return Err(Error::ZeroAlpha);
    }
    Ok(())
}

fn fractions_bob(v: &Valuation, params: &FractionsParams) -> Result<PaymentSchedule> {
    let m = v.m();
    check_fraction_len(m, params)?;
    let mut prices: Vec<Rat> =
        (0..=m).map(|t| if t == 0 || t == m { Rat::zero() } else { params.alpha(t) * v.top() }).collect();
    prices[m] = v.top().clone();
    PaymentSchedule::new(prices)
}

fn fractions_alice(u: &Valuation, params: &FractionsParams) -> Result<PaymentSchedule> {
    let m = u.m();
    check_fraction_len(m, params)?;
    let term = |k: usize| -> Rat {
        match k {
            0 => Rat::zero(),
            k if k == m => u.top().clone(),
            k => u.at(k) / params.alpha(k),
        }
    };
    let mut prices = vec![Rat::zero(); m + 1];
    let mut running = Rat::zero();
    for t in 1..=m {
        let candidate = term(m - t);
        if t == 1 {
            running = Rat::max_of(&term(m), &candidate).clone();
        } else if candidate > running {
            running = candidate;
        }
        prices[t] = running.clone();
    }
    PaymentSchedule::new(prices)
}

/// Orders candidates by score, then by total items, then by Alice's bundle.
fn prefer(a: (&Rat, Allocation2), b: (&Rat, Allocation2)) -> Ordering {
    a.0.cmp(b.0).then(a.1.items().cmp(&b.1.items())).then(a.1.alice.cmp(&b.1.alice))
}

/// Runs the taxation principle: each bidder takes a profit-maximizing bundle.
///
/// Among feasible pairs of winning bundles the one with the highest welfare is
/// chosen, ties broken by more items in total, then more items for Alice.
pub fn taxation_outcome(
    v: &Valuation,
    u: &Valuation,
    sched_alice: &PaymentSchedule,
    sched_bob: &PaymentSchedule,
) -> Result<Outcome> {
    if v.m() != u.m() {
        return Err(Error::LengthMismatch(v.m() + 1, u.m() + 1));
    }
    let m = v.m();
    let wa = winning_set(v, sched_alice)?;
    let wb = winning_set(u, sched_bob)?;
    let mut best: Option<(Rat, Allocation2)> = None;
    for &s in &wa {
        for &t in &wb {
            let alloc = Allocation2::new(s, t);
            if !alloc.is_feasible(m) {
                continue;
            }
            let w = alloc.welfare(v, u);
            let better = match &best {
                None => true,
                Some((bw, ba)) => prefer((&w, alloc), (bw, *ba)) == Ordering::Greater,
            };
            if better {
                best = Some((w, alloc));
            }
        }
    }
    let (_, alloc) = best.ok_or_else(|| Error::InfeasibleMechanism {
        alice: wa.iter().copied().collect(),
        bob: wb.iter().copied().collect(),
    })?;
    Ok(Outcome::new(v, u, alloc, sched_alice.at(alloc.alice).clone(), sched_bob.at(alloc.bob).clone()))
}

/// An affine maximizer `argmax_{s ∈ range} α_A·v(s_A) + α_B·u(s_B) + β_s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineSpec {
    pub range: BTreeSet<Allocation2>,
    pub alpha_a: Rat,
    pub alpha_b: Rat,
    /// Missing entries count as 0.
    pub betas: BTreeMap<Allocation2, Rat>,
}

impl AffineSpec {
    pub fn new(
        range: BTreeSet<Allocation2>,
        alpha_a: Rat,
        alpha_b: Rat,
        betas: BTreeMap<Allocation2, Rat>,
    ) -> Result<AffineSpec> {
        if range.is_empty() {
            return Err(Error::InvalidAffine("empty range".into()));
        }
        if alpha_a.is_negative() || alpha_b.is_negative() {
            return Err(Error::InvalidAffine("negative weight".into()));
        }
        if alpha_a.is_zero() && alpha_b.is_zero() {
            return Err(Error::InvalidAffine("both weights are zero".into()));
        }
        Ok(AffineSpec { range, alpha_a, alpha_b, betas })
    }

    /// Welfare maximizer over every allocation of `m` items.
    pub fn welfare_maximizer(m: usize) -> AffineSpec {
        AffineSpec {
            range: Allocation2::all(m).into_iter().collect(),
            alpha_a: Rat::one(),
            alpha_b: Rat::one(),
            betas: BTreeMap::new(),
        }
    }

    pub fn beta(&self, s: &Allocation2) -> Rat {
        self.betas.get(s).cloned().unwrap_or_default()
    }

    pub fn score(&self, s: &Allocation2, v: &Valuation, u: &Valuation) -> Rat {
        &self.alpha_a * v.at(s.alice) + &self.alpha_b * u.at(s.bob) + self.beta(s)
    }
}

/// Allocation chosen by an affine maximizer, with the same tie-breaking as
/// [`taxation_outcome`].
pub fn affine_outcome(spec: &AffineSpec, v: &Valuation, u: &Valuation) -> Allocation2 {
    spec.range
        .iter()
        .filter(|s| s.alice <= v.m() && s.bob <= u.m())
        .map(|s| (spec.score(s, v, u), *s))
        .max_by(|a, b| prefer((&a.0, a.1), (&b.0, b.1)))
        .map(|(_, s)| s)
        .expect("non-empty range")
}

/// A two-bidder mechanism viewed as a black box over valuation pairs.
pub trait Mechanism: Sync {
    fn label(&self) -> String;

    fn run(&self, v: &Valuation, u: &Valuation) -> Result<Outcome>;

    /// Prices posted to Alice given Bob's report, for taxation mechanisms.
    fn alice_prices(&self, _bob: &Valuation) -> Option<Result<PaymentSchedule>> {
        None
    }

    /// Prices posted to Bob given Alice's report, for taxation mechanisms.
    fn bob_prices(&self, _alice: &Valuation) -> Option<Result<PaymentSchedule>> {
        None
    }
}

impl<M: Mechanism + ?Sized> Mechanism for &M {
    fn label(&self) -> String {
        (**self).label()
    }
    fn run(&self, v: &Valuation, u: &Valuation) -> Result<Outcome> {
        (**self).run(v, u)
    }
    fn alice_prices(&self, bob: &Valuation) -> Option<Result<PaymentSchedule>> {
        (**self).alice_prices(bob)
    }
    fn bob_prices(&self, alice: &Valuation) -> Option<Result<PaymentSchedule>> {
        (**self).bob_prices(alice)
    }
}

/// The four truthful families with their parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    WeightedVcg { weight: Rat },
    Triage(TriageParams),
    Shifted(ShiftedParams),
    Fractions(FractionsParams),
}

impl Family {
    pub fn vcg() -> Family {
        Family::WeightedVcg { weight: Rat::one() }
    }

    pub fn triage(w: Rat, theta_a: Rat, theta_b: Rat) -> Result<Family> {
        TriageParams::new(w, theta_a, theta_b).map(Family::Triage)
    }

    pub fn schedules(&self, v: &Valuation, u: &Valuation) -> Result<(PaymentSchedule, PaymentSchedule)> {
        Ok((self.alice_schedule(u)?, self.bob_schedule(v)?))
    }

    fn alice_schedule(&self, u: &Valuation) -> Result<PaymentSchedule> {
        match self {
            Family::WeightedVcg { weight } => {
                if !weight.is_positive() {
                    return Err(Error::NonPositiveWeight);
                }
                wvcg_schedule(u, &weight.recip())
            }
            Family::Triage(p) => Ok(triage_schedule(u, p, Side::ChargeAlice)),
            Family::Shifted(p) => Ok(shifted_schedule(u, p)),
            Family::Fractions(p) => fractions_alice(u, p),
        }
    }

    fn bob_schedule(&self, v: &Valuation) -> Result<PaymentSchedule> {
        match self {
            Family::WeightedVcg { weight } => wvcg_schedule(v, weight),
            Family::Triage(p) => Ok(triage_schedule(v, p, Side::ChargeBob)),
            Family::Shifted(p) => Ok(shifted_schedule(v, p)),
            Family::Fractions(p) => fractions_bob(v, p),
        }
    }
}

impl Mechanism for Family {
    fn label(&self) -> String {
        match self {
            Family::WeightedVcg { weight } => format!("wvcg(w={weight})"),
            Family::Triage(p) => format!("triage(w={}, theta_a={}, theta_b={})", p.w, p.theta_a, p.theta_b),
            Family::Shifted(p) => format!("shifted(alpha={})", p.alpha),
            Family::Fractions(p) => {
                let xs: Vec<String> = p.alphas.iter().map(|a| a.to_string()).collect();
                format!("fractions(alphas=[{}])", xs.join(","))
            }
        }
    }

    fn run(&self, v: &Valuation, u: &Valuation) -> Result<Outcome> {
        let (sa, sb) = self.schedules(v, u)?;
        taxation_outcome(v, u, &sa, &sb)
    }

    fn alice_prices(&self, bob: &Valuation) -> Option<Result<PaymentSchedule>> {
        Some(self.alice_schedule(bob))
    }

    fn bob_prices(&self, alice: &Valuation) -> Option<Result<PaymentSchedule>> {
        Some(self.bob_schedule(alice))
    }
}

/// Builds both schedules for `family` and runs the taxation principle.
pub fn run(family: &Family, v: &Valuation, u: &Valuation) -> Result<Outcome> {
    family.run(v, u)
}

/// Non-truthful control: welfare-maximizing allocation, each winner pays
/// their own reported value for the bundle received.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstPriceStrawman;

impl Mechanism for FirstPriceStrawman {
    fn label(&self) -> String {
        "strawman-firstprice".into()
    }

    fn run(&self, v: &Valuation, u: &Valuation) -> Result<Outcome> {
        let (_, alloc) = optimal_welfare2(v, u)?;
        Ok(Outcome::new(v, u, alloc, v.at(alloc.alice).clone(), u.at(alloc.bob).clone()))
    }
}
