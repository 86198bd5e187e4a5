//! Is a sampled allocation rule an affine maximizer?
//!
//! An affine maximizer picks `argmax_{s ∈ R} α_A·v(s_A) + α_B·u(s_B) + β_s`.
//! Given samples `(v, u, chosen)`, every candidate range `R` containing the
//! chosen allocations yields a linear system in `(α_A, α_B, β)`: the chosen
//! allocation must score at least as much as every alternative in `R` (weakly,
//! since ties may be broken arbitrarily). We normalize `α_A + α_B = 1` and solve
//! each system exactly.
//!
//! An infeasible system comes with non-negative multipliers on sample rows
//! whose `β` terms cancel (a circulation over `R`) while both `α` coefficients
//! sum to something negative. Whatever `α >= 0` and `β` are chosen, that
//! combination of non-negative slacks would be negative, so no affine maximizer
//! over `R` reproduces the samples. The certificate is checked with plain
//! arithmetic and does not depend on the solver.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::lp::{self, LpOutcome};
use crate::exec::{self, Execution};
use crate::mechanisms::{affine_outcome, AffineSpec, Mechanism};
use crate::model::{Allocation2, Valuation};
use crate::{Error, Rat, Result};

/// Beyond this many optional allocations the range enumeration is refused.
const MAX_FREE_ALLOCATIONS: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineSample {
    pub alice: Valuation,
    pub bob: Valuation,
    pub chosen: Allocation2,
}

impl AffineSample {
    /// Score advantage of the chosen allocation over `alt`, split by bidder.
    fn advantage(&self, alt: &Allocation2) -> (Rat, Rat) {
        (
            self.alice.at(self.chosen.alice) - self.alice.at(alt.alice),
            self.bob.at(self.chosen.bob) - self.bob.at(alt.bob),
        )
    }
}

/// Runs `mech` on every pair of `universe` and records the allocations.
pub fn affine_samples<M: Mechanism + ?Sized>(
    mech: &M,
    universe: &[Valuation],
    exec: Execution,
) -> Result<Vec<AffineSample>> {
    let rows = exec::map(exec, universe, |v| {
        universe
            .iter()
            .map(|u| {
                mech.run(v, u).map(|out| AffineSample { alice: v.clone(), bob: u.clone(), chosen: out.allocation })
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::new();
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

/// An affine maximizer reproducing every sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineCertificate {
    /// Weights normalized so the larger one is 1.
    pub spec: AffineSpec,
    /// Feasible interval of `α_A / (α_A + α_B)` on this range.
    pub alpha_share: (Rat, Rat),
}

impl AffineCertificate {
    /// Each sample's chosen allocation lies in the range and maximizes the
    /// affine score (weakly).
    pub fn check(&self, samples: &[AffineSample]) -> bool {
        samples.iter().all(|s| {
            self.spec.range.contains(&s.chosen) && {
                let best = self.spec.score(&affine_outcome(&self.spec, &s.alice, &s.bob), &s.alice, &s.bob);
                self.spec.score(&s.chosen, &s.alice, &s.bob) == best
            }
        })
    }
}

/// One weighted optimality condition: `sample.chosen` beats `alternative`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedRow {
    pub multiplier: Rat,
    pub sample: AffineSample,
    pub alternative: Allocation2,
}

/// Proof that no affine maximizer with range `range` fits the samples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeRefutation {
    pub range: BTreeSet<Allocation2>,
    pub rows: Vec<WeightedRow>,
}

impl RangeRefutation {
    /// Sums of the weighted advantages for Alice and Bob; both negative in a
    /// valid refutation.
    pub fn totals(&self) -> (Rat, Rat) {
        let mut ta = Rat::zero();
        let mut tb = Rat::zero();
        for row in &self.rows {
            let (x, y) = row.sample.advantage(&row.alternative);
            ta += &(&row.multiplier * &x);
            tb += &(&row.multiplier * &y);
        }
        (ta, tb)
    }

    /// Verifies the refutation without any solver.
    pub fn check(&self) -> bool {
        if self.rows.is_empty() {
            return false;
        }
        let mut net: BTreeMap<Allocation2, Rat> = BTreeMap::new();
        for row in &self.rows {
            if !row.multiplier.is_positive()
                || !self.range.contains(&row.alternative)
                || !self.range.contains(&row.sample.chosen)
            {
                return false;
            }
            *net.entry(row.sample.chosen).or_default() += &row.multiplier;
            *net.entry(row.alternative).or_default() -= &row.multiplier;
        }
        let (ta, tb) = self.totals();
        net.values().all(Rat::is_zero) && ta.is_negative() && tb.is_negative()
    }

    /// The rows' samples are genuine outputs of `mech`.
    pub fn replay<M: Mechanism + ?Sized>(&self, mech: &M) -> bool {
        self.rows
            .iter()
            .all(|r| mech.run(&r.sample.alice, &r.sample.bob).is_ok_and(|o| o.allocation == r.sample.chosen))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AffineVerdict {
    Rationalizable(AffineCertificate),
    /// One refutation per range containing every sampled output.
    NotAffine {
        refutations: Vec<RangeRefutation>,
    },
}

impl AffineVerdict {
    pub fn is_affine(&self) -> bool {
        matches!(self, AffineVerdict::Rationalizable(_))
    }
}

/// Advantage rows `(x, y, sample index)` keyed by `(chosen, alternative)`.
type RowGroups = BTreeMap<(Allocation2, Allocation2), Vec<(Rat, Rat, usize)>>;

/// Pareto-minimal advantage rows per (chosen, alternative) pair; a dominated
/// row is implied by the one dominating it.
fn pruned_rows(samples: &[AffineSample], range: &BTreeSet<Allocation2>) -> Vec<(usize, Allocation2, Rat, Rat)> {
    let mut groups = RowGroups::new();
    for (i, s) in samples.iter().enumerate() {
        for alt in range {
            if *alt == s.chosen {
                continue;
            }
            let (x, y) = s.advantage(alt);
            groups.entry((s.chosen, *alt)).or_default().push((x, y, i));
        }
    }
    let mut rows = Vec::new();
    for ((_, alt), mut pts) in groups {
        pts.sort();
        let mut min_y: Option<Rat> = None;
        for (x, y, i) in pts {
            if min_y.as_ref().is_none_or(|m| y < *m) {
                min_y = Some(y.clone());
                rows.push((i, alt, x, y));
            }
        }
    }
    rows
}

struct System {
    a: Vec<Vec<Rat>>,
    b: Vec<Rat>,
    /// Sample rows only; the last two LP rows are the normalization.
    rows: Vec<(usize, Allocation2, Rat, Rat)>,
    nodes: Vec<Allocation2>,
}

fn build_system(samples: &[AffineSample], range: &BTreeSet<Allocation2>) -> System {
    let nodes: Vec<Allocation2> = range.iter().copied().collect();
    let pos = |s: &Allocation2| nodes.iter().position(|n| n == s).expect("in range");
    let rows = pruned_rows(samples, range);
    let width = 2 + nodes.len();
    let mut a = Vec::with_capacity(rows.len() + 2);
    let mut b = Vec::with_capacity(rows.len() + 2);
    for (i, alt, x, y) in &rows {
        // -x·α_A - y·α_B - β_chosen + β_alt <= 0
        let mut row = vec![Rat::zero(); width];
        row[0] = -x;
        row[1] = -y;
        row[2 + pos(&samples[*i].chosen)] -= &Rat::one();
        row[2 + pos(alt)] += &Rat::one();
        a.push(row);
        b.push(Rat::zero());
    }
    let mut norm = vec![Rat::zero(); width];
    norm[0] = Rat::one();
    norm[1] = Rat::one();
    a.push(norm.clone());
    b.push(Rat::one());
    a.push(norm.iter().map(|x| -x).collect());
    b.push(-Rat::one());
    System { a, b, rows, nodes }
}

fn alpha_bound(sys: &System, sign: i64) -> Rat {
    let mut c = vec![Rat::zero(); sys.a[0].len()];
    c[0] = Rat::int(sign);
    match lp::solve(&sys.a, &sys.b, &c) {
        LpOutcome::Optimal { value, .. } => &value * &Rat::int(sign),
        other => unreachable!("bounded feasible system, got {other:?}"),
    }
}

/// β as shortest-path potentials for fixed weights: each row demands
/// `β_alt - β_chosen <= α_A·x + α_B·y`.
fn potentials(sys: &System, samples: &[AffineSample], alpha_a: &Rat, alpha_b: &Rat) -> BTreeMap<Allocation2, Rat> {
    let k = sys.nodes.len();
    let pos = |s: &Allocation2| sys.nodes.iter().position(|n| n == s).expect("in range");
    let edges: Vec<(usize, usize, Rat)> =
        sys.rows.iter().map(|(i, alt, x, y)| (pos(&samples[*i].chosen), pos(alt), alpha_a * x + alpha_b * y)).collect();
    let mut dist = vec![Rat::zero(); k];
    for _ in 0..k {
        let mut changed = false;
        for (from, to, w) in &edges {
            let cand = &dist[*from] + w;
            if cand < dist[*to] {
                dist[*to] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    sys.nodes.iter().zip(dist).filter(|(_, d)| !d.is_zero()).map(|(n, d)| (*n, d)).collect()
}

fn certificate(sys: &System, samples: &[AffineSample], range: &BTreeSet<Allocation2>) -> AffineCertificate {
    let lo = alpha_bound(sys, -1);
    let hi = alpha_bound(sys, 1);
    let half = Rat::new(1, 2);
    let share = if half < lo {
        lo.clone()
    } else if half > hi {
        hi.clone()
    } else {
        half
    };
    let rest = Rat::one() - &share;
    let top = Rat::max_of(&share, &rest).clone();
    let (alpha_a, alpha_b) = (&share / &top, &rest / &top);
    let betas = potentials(sys, samples, &alpha_a, &alpha_b);
    AffineCertificate { spec: AffineSpec { range: range.clone(), alpha_a, alpha_b, betas }, alpha_share: (lo, hi) }
}

fn refutation(
    sys: &System,
    samples: &[AffineSample],
    range: &BTreeSet<Allocation2>,
    farkas: &[Rat],
) -> RangeRefutation {
    debug_assert!(lp::is_farkas_certificate(&sys.a, &sys.b, farkas));
    let rows = sys
        .rows
        .iter()
        .zip(farkas)
        .filter(|(_, z)| z.is_positive())
        .map(|((i, alt, _, _), z)| WeightedRow {
            multiplier: z.clone(),
            sample: samples[*i].clone(),
            alternative: *alt,
        })
        .collect();
    RangeRefutation { range: range.clone(), rows }
}

/// Decides whether some affine maximizer reproduces `samples`.
///
/// Every range containing the sampled outputs is tried, smallest first; the
/// first feasible one yields the certificate.
pub fn affine_witness(samples: &[AffineSample]) -> Result<AffineVerdict> {
    let Some(first) = samples.first() else {
        return Err(Error::InvalidAffine("no samples".into()));
    };
    let m = first.alice.m();
    let mut seen: BTreeMap<(&Valuation, &Valuation), Allocation2> = BTreeMap::new();
    for s in samples {
        if s.alice.m() != m || s.bob.m() != m {
            return Err(Error::LengthMismatch(m + 1, s.alice.m().max(s.bob.m()) + 1));
        }
        if !s.chosen.is_feasible(m) {
            return Err(Error::InvalidAffine(format!("sampled allocation {} exceeds {m} items", s.chosen)));
        }
        if let Some(prev) = seen.insert((&s.alice, &s.bob), s.chosen) {
            if prev != s.chosen {
                return Err(Error::InconsistentSamples { first: prev, second: s.chosen });
            }
        }
    }
    let outputs: BTreeSet<Allocation2> = samples.iter().map(|s| s.chosen).collect();
    let optional: Vec<Allocation2> = Allocation2::all(m).into_iter().filter(|a| !outputs.contains(a)).collect();
    if optional.len() > MAX_FREE_ALLOCATIONS {
        return Err(Error::InvalidAffine(format!("{} optional allocations is too many ranges", optional.len())));
    }
    let mut masks: Vec<u32> = (0..1u32 << optional.len()).collect();
    masks.sort_by_key(|mask| (mask.count_ones(), *mask));

    let mut refutations = Vec::new();
    for mask in masks {
        let mut range = outputs.clone();
        range.extend(optional.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| *a));
        let sys = build_system(samples, &range);
        let zero = vec![Rat::zero(); sys.a[0].len()];
        match lp::solve(&sys.a, &sys.b, &zero) {
            LpOutcome::Optimal { .. } => {
                return Ok(AffineVerdict::Rationalizable(certificate(&sys, samples, &range)));
            }
            LpOutcome::Infeasible { farkas } => refutations.push(refutation(&sys, samples, &range, &farkas)),
            LpOutcome::Unbounded => unreachable!("zero objective"),
        }
    }
    Ok(AffineVerdict::NotAffine { refutations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::Family;
    use crate::rat;
    use crate::verify::Grid;

    fn samples(mech: &Family, d: u32) -> Vec<AffineSample> {
        let universe = Grid::new(2, Rat::int(1), d).unwrap().valuations();
        affine_samples(mech, &universe, Execution::Sequential).unwrap()
    }

    #[test]
    fn vcg_is_rationalized_by_welfare() {
        let s = samples(&Family::vcg(), 2);
        match affine_witness(&s).unwrap() {
            AffineVerdict::Rationalizable(cert) => {
                assert_eq!((cert.spec.alpha_a.clone(), cert.spec.alpha_b.clone()), (Rat::one(), Rat::one()));
                assert!(cert.spec.betas.is_empty());
                assert!(cert.check(&s));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_samples_rejected() {
        let v = Valuation::from_ints(&[0, 1, 1]).unwrap();
        let a = AffineSample { alice: v.clone(), bob: v.clone(), chosen: Allocation2::new(1, 1) };
        let b = AffineSample { chosen: Allocation2::new(2, 0), ..a.clone() };
        assert_eq!(
            affine_witness(&[a, b]),
            Err(Error::InconsistentSamples { first: Allocation2::new(1, 1), second: Allocation2::new(2, 0) })
        );
    }

    #[test]
    fn hand_built_contradiction() {
        // Sample 1 prefers (2,0) to (1,1) although that costs Bob 1 and
        // gains Alice nothing; sample 2 prefers (1,1) to (2,0) although that
        // costs Alice 1 and gains Bob nothing.
        let s1 = AffineSample {
            alice: Valuation::from_ints(&[0, 1, 1]).unwrap(),
            bob: Valuation::from_ints(&[0, 1, 1]).unwrap(),
            chosen: Allocation2::new(2, 0),
        };
        let s2 = AffineSample {
            alice: Valuation::from_ints(&[0, 0, 1]).unwrap(),
            bob: Valuation::from_ints(&[0, 0, 0]).unwrap(),
            chosen: Allocation2::new(1, 1),
        };
        match affine_witness(&[s1, s2]).unwrap() {
            AffineVerdict::NotAffine { refutations } => {
                assert_eq!(refutations.len(), 16);
                assert!(refutations.iter().all(RangeRefutation::check));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weighted_vcg_weight_interval() {
        // Bob pays w times Alice's externality, so the rule maximizes w·v + u.
        let s = samples(&Family::WeightedVcg { weight: Rat::int(2) }, 4);
        match affine_witness(&s).unwrap() {
            AffineVerdict::Rationalizable(cert) => {
                let (lo, hi) = &cert.alpha_share;
                assert!(*lo <= rat(2, 3) && rat(2, 3) <= *hi, "{lo} {hi}");
                assert!(rat(1, 3) < *lo);
                assert!(cert.check(&s));
            }
            other => panic!("{other:?}"),
        }
    }
}
