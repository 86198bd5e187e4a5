//! Brute-force property oracles over finite valuation grids.
//!
//! Every check treats the mechanism as a black box `(v, u) -> Outcome`.
//! Truthfulness is checked against misreports drawn from the same finite
//! universe, so a pass means "no profitable lie inside the grid".
//! Failures carry a [`Counterexample`] that can be replayed on its own.

pub mod affine;
pub mod lp;

use std::collections::BTreeSet;

use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::exec::{self, Execution};
use crate::induced::{fit_induced_raw, weighted_optimum, InducedIndex, Param};
use crate::mechanisms::Mechanism;
use crate::model::{optimal_welfare2, ratio, Outcome, PaymentSchedule, Valuation};
use crate::{Error, Rat, Result};

pub use affine::{affine_samples, affine_witness, AffineCertificate, AffineSample, AffineVerdict};

/// All monotone normalized valuations on `m` items with values in
/// `{0, 1/d, 2/d, …, max_value}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub m: usize,
    pub max_value: Rat,
    pub denominator: u32,
}

impl Grid {
    pub fn new(m: usize, max_value: Rat, denominator: u32) -> Result<Grid> {
        if m < 2 {
            return Err(Error::InvalidGrid(format!("m = {m} < 2")));
        }
        if denominator == 0 {
            return Err(Error::InvalidGrid("denominator must be positive".into()));
        }
        if max_value.is_negative() {
            return Err(Error::InvalidGrid("negative maximum".into()));
        }
        let steps = &max_value * &Rat::int(denominator.into());
        if !steps.denom().is_one() {
            return Err(Error::InvalidGrid(format!("{max_value} is not a multiple of 1/{denominator}")));
        }
        Ok(Grid { m, max_value, denominator })
    }

    pub fn levels(&self) -> Vec<Rat> {
        let d = i64::from(self.denominator);
        let steps = (&self.max_value * &Rat::int(d)).numer().to_i64().expect("grid fits in i64");
        (0..=steps).map(|k| Rat::new(k, d)).collect()
    }

    /// Valuations in lexicographic order.
    pub fn valuations(&self) -> Vec<Valuation> {
        let levels = self.levels();
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.m];
        loop {
            let mut values = Vec::with_capacity(self.m + 1);
            values.push(Rat::zero());
            values.extend(idx.iter().map(|&i| levels[i].clone()));
            out.push(Valuation::new(values).expect("grid points are valid"));
            // Next non-decreasing index vector.
            let Some(pos) = (0..self.m).rev().find(|&p| idx[p] + 1 < levels.len()) else {
                break;
            };
            let next = idx[pos] + 1;
            for slot in &mut idx[pos..] {
                *slot = next;
            }
        }
        out
    }

    pub fn count(&self) -> usize {
        // C(L + m - 1, m) with L levels.
        let levels = self.levels().len();
        (1..=self.m).fold(1usize, |acc, i| acc * (levels + i - 1) / i)
    }
}

/// Sorted union of several grids' valuations, without duplicates.
pub fn merged_valuations(grids: &[Grid]) -> Vec<Valuation> {
    let set: BTreeSet<Valuation> = grids.iter().flat_map(Grid::valuations).collect();
    set.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bidder {
    Alice,
    Bob,
}

/// A concrete instance on which a property fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// `bidder` gains by reporting `misreport` instead of their true valuation.
    Deviation {
        bidder: Bidder,
        alice: Valuation,
        bob: Valuation,
        misreport: Valuation,
        truthful_utility: Rat,
        deviating_utility: Rat,
    },
    /// The run errored or handed out more than `m` items.
    Infeasible {
        alice: Valuation,
        bob: Valuation,
        detail: String,
    },
    NegativeUtility {
        bidder: Bidder,
        alice: Valuation,
        bob: Valuation,
        utility: Rat,
    },
    Scaling {
        alice: Valuation,
        bob: Valuation,
        factor: Rat,
        detail: String,
    },
    /// A realized payment differs from the posted price for the bundle won.
    PostedPrice {
        alice: Valuation,
        bob: Valuation,
        detail: String,
    },
    /// The price `charged` faces for `bundle`, given the opponent's `valuation`.
    Price {
        valuation: Valuation,
        charged: Bidder,
        bundle: usize,
        expected: Rat,
        actual: Rat,
    },
    /// Two induced mechanisms that should share a parameter do not.
    ParameterMismatch {
        first: InducedIndex,
        second: InducedIndex,
        parameter: Param,
        first_value: Rat,
        second_value: Rat,
    },
    ParameterValue {
        index: InducedIndex,
        parameter: Param,
        expected: Rat,
        actual: Rat,
    },
    /// `v(a) + weight·u(b)` falls short of `max_k v(k) + weight·u(m-k)`.
    WeightedWelfare {
        alice: Valuation,
        bob: Valuation,
        weight: Rat,
        achieved: Rat,
        optimum: Rat,
    },
}

impl Counterexample {
    /// Re-runs the mechanism on this instance alone and confirms the failure.
    pub fn replay<M: Mechanism + ?Sized>(&self, mech: &M) -> bool {
        match self {
            Counterexample::Deviation { bidder, alice, bob, misreport, truthful_utility, deviating_utility } => {
                let Ok(truth) = mech.run(alice, bob) else { return false };
                let (truthful, deviating) = match bidder {
                    Bidder::Alice => {
                        let Ok(lie) = mech.run(misreport, bob) else { return false };
                        (truth.util_alice, alice.at(lie.allocation.alice) - &lie.pay_alice)
                    }
                    Bidder::Bob => {
                        let Ok(lie) = mech.run(alice, misreport) else { return false };
                        (truth.util_bob, bob.at(lie.allocation.bob) - &lie.pay_bob)
                    }
                };
                truthful == *truthful_utility && deviating == *deviating_utility && deviating > truthful
            }
            Counterexample::Infeasible { alice, bob, .. } => match mech.run(alice, bob) {
                Err(_) => true,
                Ok(out) => !out.allocation.is_feasible(alice.m()),
            },
            Counterexample::NegativeUtility { bidder, alice, bob, utility } => match mech.run(alice, bob) {
                Ok(out) => {
                    let u = match bidder {
                        Bidder::Alice => out.util_alice,
                        Bidder::Bob => out.util_bob,
                    };
                    u == *utility && u.is_negative()
                }
                Err(_) => false,
            },
            Counterexample::Scaling { alice, bob, factor, .. } => {
                scaling_defect(mech, alice, bob, factor, true, true).is_some()
            }
            Counterexample::PostedPrice { alice, bob, .. } => posted_price_defect(mech, alice, bob).is_some(),
            Counterexample::Price { valuation, charged, bundle, expected, actual } => {
                let sched = match charged {
                    Bidder::Alice => mech.alice_prices(valuation),
                    Bidder::Bob => mech.bob_prices(valuation),
                };
                matches!(sched, Some(Ok(s)) if s.at(*bundle) == actual && actual != expected)
            }
            Counterexample::ParameterMismatch { first, second, parameter, first_value, second_value } => {
                match (fit_induced_raw(mech, *first), fit_induced_raw(mech, *second)) {
                    (Ok(a), Ok(b)) => {
                        parameter.of(&a) == first_value
                            && parameter.of(&b) == second_value
                            && first_value != second_value
                    }
                    _ => false,
                }
            }
            Counterexample::ParameterValue { index, parameter, expected, actual } => {
                fit_induced_raw(mech, *index).is_ok_and(|f| parameter.of(&f) == actual && actual != expected)
            }
            Counterexample::WeightedWelfare { alice, bob, weight, achieved, optimum } => match mech.run(alice, bob) {
                Ok(out) => {
                    let a = out.allocation;
                    let got = alice.at(a.alice) + weight * bob.at(a.bob);
                    got == *achieved && weighted_optimum(alice, bob, weight) == *optimum && got < *optimum
                }
                Err(_) => false,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub mechanism: String,
    pub passed: bool,
    /// Valuation pairs examined.
    pub instances_checked: u64,
    /// Individual comparisons made (deviations, scalings, …).
    pub comparisons: u64,
    pub counterexample: Option<Counterexample>,
}

impl PropertyReport {
    pub fn from_parts(
        property: &str,
        mechanism: String,
        instances: u64,
        comparisons: u64,
        cx: Option<Counterexample>,
    ) -> Self {
        PropertyReport {
            property: property.into(),
            mechanism,
            passed: cx.is_none(),
            instances_checked: instances,
            comparisons,
            counterexample: cx,
        }
    }
}

fn pairs(n: usize) -> u64 {
    (n as u64) * (n as u64)
}

fn infeasible(alice: &Valuation, bob: &Valuation, err: Error) -> Counterexample {
    Counterexample::Infeasible { alice: alice.clone(), bob: bob.clone(), detail: err.to_string() }
}

/// Distinct `(bundle, price)` menus a bidder can reach by some report in the
/// universe, with the first report reaching each.
fn reachable(outs: &[Outcome], bidder: Bidder) -> Vec<(usize, Rat, usize)> {
    let mut seen = BTreeSet::new();
    let mut menu = Vec::new();
    for (k, out) in outs.iter().enumerate() {
        let (bundle, price) = match bidder {
            Bidder::Alice => (out.allocation.alice, &out.pay_alice),
            Bidder::Bob => (out.allocation.bob, &out.pay_bob),
        };
        if seen.insert((bundle, price.clone())) {
            menu.push((bundle, price.clone(), k));
        }
    }
    menu
}

/// Checks one side: holding the opponent fixed at `universe[fixed]`, no report
/// in the universe beats the truth for any true valuation in the universe.
fn deviation_on_line<M: Mechanism + ?Sized>(
    mech: &M,
    universe: &[Valuation],
    fixed: usize,
    bidder: Bidder,
) -> Option<Counterexample> {
    let opp = &universe[fixed];
    let mut outs = Vec::with_capacity(universe.len());
    for own in universe {
        let res = match bidder {
            Bidder::Alice => mech.run(own, opp),
            Bidder::Bob => mech.run(opp, own),
        };
        match res {
            Ok(out) => outs.push(out),
            Err(e) => {
                return Some(match bidder {
                    Bidder::Alice => infeasible(own, opp, e),
                    Bidder::Bob => infeasible(opp, own, e),
                })
            }
        }
    }
    let menu = reachable(&outs, bidder);
    for (i, own) in universe.iter().enumerate() {
        let truthful = match bidder {
            Bidder::Alice => outs[i].util_alice.clone(),
            Bidder::Bob => outs[i].util_bob.clone(),
        };
        let best = menu
            .iter()
            .map(|(bundle, price, k)| (own.at(*bundle) - price, *k))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .expect("menu is non-empty");
        if best.0 > truthful {
            let (alice, bob) = match bidder {
                Bidder::Alice => (own.clone(), opp.clone()),
                Bidder::Bob => (opp.clone(), own.clone()),
            };
            return Some(Counterexample::Deviation {
                bidder,
                alice,
                bob,
                misreport: universe[best.1].clone(),
                truthful_utility: truthful,
                deviating_utility: best.0,
            });
        }
    }
    None
}

/// Dominant-strategy truthfulness against every misreport in `universe`, for
/// both bidders.
pub fn check_truthfulness<M: Mechanism + ?Sized>(mech: &M, universe: &[Valuation], exec: Execution) -> PropertyReport {
    let n = universe.len();
    let found = exec::map_range(exec, 2 * n, |job| {
        let bidder = if job < n { Bidder::Alice } else { Bidder::Bob };
        deviation_on_line(mech, universe, job % n, bidder)
    });
    let cx = found.into_iter().flatten().next();
    PropertyReport::from_parts("truthfulness", mech.label(), pairs(n), 2 * pairs(n) * n as u64, cx)
}

/// Runs every pair in row-major order (Alice's valuation outer) and returns
/// the first defect `probe` reports.
fn first_defect<M, F>(mech: &M, universe: &[Valuation], exec: Execution, probe: F) -> Option<Counterexample>
where
    M: Mechanism + ?Sized,
    F: Fn(&Valuation, &Valuation, Result<Outcome>) -> Option<Counterexample> + Sync + Send,
{
    let rows = exec::map(exec, universe, |v| universe.iter().find_map(|u| probe(v, u, mech.run(v, u))));
    rows.into_iter().flatten().next()
}

/// Every run succeeds and hands out at most `m` items.
pub fn check_feasibility<M: Mechanism + ?Sized>(mech: &M, universe: &[Valuation], exec: Execution) -> PropertyReport {
    let cx = first_defect(mech, universe, exec, |v, u, res| match res {
        Err(e) => Some(infeasible(v, u, e)),
        Ok(out) if !out.allocation.is_feasible(v.m()) => Some(Counterexample::Infeasible {
            alice: v.clone(),
            bob: u.clone(),
            detail: format!("allocation {} exceeds {} items", out.allocation, v.m()),
        }),
        Ok(_) => None,
    });
    let n = universe.len();
    PropertyReport::from_parts("feasibility", mech.label(), pairs(n), pairs(n), cx)
}

/// Truthful utilities are non-negative.
pub fn check_individual_rationality<M: Mechanism + ?Sized>(
    mech: &M,
    universe: &[Valuation],
    exec: Execution,
) -> PropertyReport {
    let cx = first_defect(mech, universe, exec, |v, u, res| {
        let out = match res {
            Err(e) => return Some(infeasible(v, u, e)),
            Ok(out) => out,
        };
        let negative = |bidder, utility: Rat| Counterexample::NegativeUtility {
            bidder,
            alice: v.clone(),
            bob: u.clone(),
            utility,
        };
        if out.util_alice.is_negative() {
            Some(negative(Bidder::Alice, out.util_alice))
        } else if out.util_bob.is_negative() {
            Some(negative(Bidder::Bob, out.util_bob))
        } else {
            None
        }
    });
    let n = universe.len();
    PropertyReport::from_parts("individual_rationality", mech.label(), pairs(n), 2 * pairs(n), cx)
}

fn schedules_scale(
    scaled: Option<Result<PaymentSchedule>>,
    base: Option<Result<PaymentSchedule>>,
    factor: &Rat,
) -> std::result::Result<(), String> {
    match (scaled, base) {
        (None, None) => Ok(()),
        (Some(Ok(s)), Some(Ok(b))) => {
            if s == b.scale(factor) {
                Ok(())
            } else {
                Err(format!("schedule {:?} does not scale to {:?}", b.prices(), s.prices()))
            }
        }
        (Some(Err(e)), _) | (_, Some(Err(e))) => Err(e.to_string()),
        _ => Err("schedule availability changed under scaling".into()),
    }
}

/// What, if anything, breaks when both reports are multiplied by `factor`.
fn scaling_defect<M: Mechanism + ?Sized>(
    mech: &M,
    v: &Valuation,
    u: &Valuation,
    factor: &Rat,
    allocation: bool,
    payment: bool,
) -> Option<String> {
    let sv = v.scale(factor);
    let su = u.scale(factor);
    let base = match mech.run(v, u) {
        Ok(o) => o,
        Err(e) => return Some(e.to_string()),
    };
    let scaled = match mech.run(&sv, &su) {
        Ok(o) => o,
        Err(e) => return Some(format!("scaled run: {e}")),
    };
    if allocation && scaled.allocation != base.allocation {
        return Some(format!("allocation {} became {}", base.allocation, scaled.allocation));
    }
    if payment {
        if scaled.pay_alice != &base.pay_alice * factor || scaled.pay_bob != &base.pay_bob * factor {
            return Some(format!(
                "payments ({}, {}) became ({}, {})",
                base.pay_alice, base.pay_bob, scaled.pay_alice, scaled.pay_bob
            ));
        }
        if let Err(e) = schedules_scale(mech.alice_prices(&su), mech.alice_prices(u), factor) {
            return Some(format!("Alice's prices: {e}"));
        }
        if let Err(e) = schedules_scale(mech.bob_prices(&sv), mech.bob_prices(v), factor) {
            return Some(format!("Bob's prices: {e}"));
        }
    }
    None
}

fn scalability_report<M: Mechanism + ?Sized>(
    mech: &M,
    universe: &[Valuation],
    factors: &[Rat],
    exec: Execution,
    (allocation, payment): (bool, bool),
    name: &str,
) -> PropertyReport {
    assert!(factors.iter().all(Rat::is_positive), "scaling factors must be positive");
    let rows = exec::map(exec, universe, |v| {
        universe.iter().find_map(|u| {
            factors.iter().find_map(|f| {
                scaling_defect(mech, v, u, f, allocation, payment).map(|detail| Counterexample::Scaling {
                    alice: v.clone(),
                    bob: u.clone(),
                    factor: f.clone(),
                    detail,
                })
            })
        })
    });
    let cx = rows.into_iter().flatten().next();
    let n = universe.len();
    PropertyReport::from_parts(name, mech.label(), pairs(n), pairs(n) * factors.len() as u64, cx)
}

/// The allocation is unchanged when both reports are scaled.
pub fn check_allocation_scalability<M: Mechanism + ?Sized>(
    mech: &M,
    universe: &[Valuation],
    factors: &[Rat],
    exec: Execution,
) -> PropertyReport {
    scalability_report(mech, universe, factors, exec, (true, false), "allocation_scalability")
}

/// Realized payments, and every posted price when the mechanism exposes its
/// schedules, scale with the reports.
pub fn check_payment_scalability<M: Mechanism + ?Sized>(
    mech: &M,
    universe: &[Valuation],
    factors: &[Rat],
    exec: Execution,
) -> PropertyReport {
    scalability_report(mech, universe, factors, exec, (false, true), "payment_scalability")
}

/// Allocation and payment scalability together.
pub fn check_scalability<M: Mechanism + ?Sized>(
    mech: &M,
    universe: &[Valuation],
    factors: &[Rat],
    exec: Execution,
) -> PropertyReport {
    scalability_report(mech, universe, factors, exec, (true, true), "scalability")
}

fn posted_price_defect<M: Mechanism + ?Sized>(mech: &M, v: &Valuation, u: &Valuation) -> Option<String> {
    let out = match mech.run(v, u) {
        Ok(o) => o,
        Err(e) => return Some(e.to_string()),
    };
    let sides = [
        ("Alice", mech.alice_prices(u), out.allocation.alice, &out.pay_alice),
        ("Bob", mech.bob_prices(v), out.allocation.bob, &out.pay_bob),
    ];
    for (who, sched, bundle, paid) in sides {
        match sched {
            None => {}
            Some(Err(e)) => return Some(e.to_string()),
            Some(Ok(s)) if s.at(bundle) != paid => {
                return Some(format!("{who} paid {paid} for {bundle} items, posted price {}", s.at(bundle)))
            }
            Some(Ok(_)) => {}
        }
    }
    None
}

/// Each realized payment equals the posted price of the bundle won, for
/// mechanisms that expose their schedules.
pub fn check_posted_prices<M: Mechanism + ?Sized>(mech: &M, universe: &[Valuation], exec: Execution) -> PropertyReport {
    let rows = exec::map(exec, universe, |v| {
        universe.iter().find_map(|u| {
            posted_price_defect(mech, v, u).map(|detail| Counterexample::PostedPrice {
                alice: v.clone(),
                bob: u.clone(),
                detail,
            })
        })
    });
    let n = universe.len();
    PropertyReport::from_parts("posted_prices", mech.label(), pairs(n), 2 * pairs(n), rows.into_iter().flatten().next())
}

/// One instance of an approximation sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alice: Valuation,
    pub bob: Valuation,
    pub outcome: Outcome,
    pub opt: Rat,
    pub ratio: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sweep {
    pub mechanism: String,
    pub instances: u64,
    pub worst_ratio: Rat,
    /// First instance (row-major) attaining the worst ratio.
    pub worst: Option<SweepRow>,
}

fn sweep_row<M: Mechanism + ?Sized>(mech: &M, v: &Valuation, u: &Valuation) -> Result<SweepRow> {
    let outcome = mech.run(v, u)?;
    let (opt, _) = optimal_welfare2(v, u)?;
    let r = ratio(&opt, &outcome.welfare)?;
    Ok(SweepRow { alice: v.clone(), bob: u.clone(), outcome, opt, ratio: r })
}

/// Every instance of `universe²` in row-major order.
pub fn sweep_rows<M: Mechanism + ?Sized>(mech: &M, universe: &[Valuation], exec: Execution) -> Result<Vec<SweepRow>> {
    let rows =
        exec::map(exec, universe, |v| universe.iter().map(|u| sweep_row(mech, v, u)).collect::<Result<Vec<_>>>());
    let mut out = Vec::with_capacity(universe.len() * universe.len());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

/// Worst `OPT / ALG` over `universe²`; the first failing run's error is propagated.
pub fn sweep_approximation<M: Mechanism + ?Sized>(mech: &M, universe: &[Valuation], exec: Execution) -> Result<Sweep> {
    let per_row = exec::map(exec, universe, |v| -> Result<Option<SweepRow>> {
        let mut worst: Option<SweepRow> = None;
        for u in universe {
            let row = sweep_row(mech, v, u)?;
            if worst.as_ref().is_none_or(|w| row.ratio > w.ratio) {
                worst = Some(row);
            }
        }
        Ok(worst)
    });
    let mut worst: Option<SweepRow> = None;
    for row in per_row {
        if let Some(row) = row? {
            if worst.as_ref().is_none_or(|w| row.ratio > w.ratio) {
                worst = Some(row);
            }
        }
    }
    Ok(Sweep {
        mechanism: mech.label(),
        instances: pairs(universe.len()),
        worst_ratio: worst.as_ref().map_or_else(Rat::one, |w| w.ratio.clone()),
        worst,
    })
}
