//! The `(p, q, f, g)` description of two-item scalable mechanisms.
//!
//! By scalability a two-item mechanism is determined by what it does on
//! valuations `(0, r, 1)`. Bob's prices induced by Alice's `(0, r, 1)` are
//! `p_2 = p(r)` and `p_1 = f(r)·p(r)`; Alice's prices induced by Bob's
//! `(0, s, 1)` are `q(s)` and `g(s)·q(s)`.
//!
//! For a triage auction these functions are three-piece:
//!
//! | range of `r`            | `p(r)`    | `f(r)`    |
//! |-------------------------|-----------|-----------|
//! | `r <= 1 - θ_B`          | `w`       | `θ_B`     |
//! | `1 - θ_B < r < θ_A`     | `w`       | `1 - r`   |
//! | `r >= θ_A`              | `w·r/θ_A` | `1 - θ_A` |
//!
//! and symmetrically for `q, g` with `1/w` and the thetas exchanged.
//! [`probe_characterization`] checks a sampled mechanism against the chain of
//! structural facts that forces this shape.

use serde::{Deserialize, Serialize};

use crate::mechanisms::{Mechanism, Side, TriageParams};
use crate::model::{PaymentSchedule, Valuation};
use crate::{Error, Rat, Result};

/// `p, f` sampled at `rs` and `q, g` sampled at `ss`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalFormSample {
    pub rs: Vec<Rat>,
    pub p_vals: Vec<Rat>,
    pub f_vals: Vec<Rat>,
    pub ss: Vec<Rat>,
    pub q_vals: Vec<Rat>,
    pub g_vals: Vec<Rat>,
}

impl NormalFormSample {
    fn lookup<'a>(xs: &[Rat], ys: &'a [Rat], x: &Rat) -> Option<&'a Rat> {
        xs.binary_search(x).ok().map(|i| &ys[i])
    }

    pub fn p(&self, r: &Rat) -> Option<&Rat> {
        Self::lookup(&self.rs, &self.p_vals, r)
    }

    pub fn f(&self, r: &Rat) -> Option<&Rat> {
        Self::lookup(&self.rs, &self.f_vals, r)
    }

    pub fn q(&self, s: &Rat) -> Option<&Rat> {
        Self::lookup(&self.ss, &self.q_vals, s)
    }

    pub fn g(&self, s: &Rat) -> Option<&Rat> {
        Self::lookup(&self.ss, &self.g_vals, s)
    }

    fn r_points(&self) -> impl Iterator<Item = (&Rat, &Rat, &Rat)> {
        self.rs.iter().zip(&self.p_vals).zip(&self.f_vals).map(|((r, p), f)| (r, p, f))
    }
}

/// `{0, 1/d, …, 1}`.
pub fn unit_grid(d: u32) -> Vec<Rat> {
    let d = i64::from(d.max(1));
    (0..=d).map(|k| Rat::new(k, d)).collect()
}

fn unit_valuation(x: &Rat) -> Result<Valuation> {
    Valuation::new(vec![Rat::zero(), x.clone(), Rat::one()])
}

fn split(sched: PaymentSchedule, at: &Rat) -> Result<(Rat, Rat)> {
    let two = sched.at(2).clone();
    if !two.is_positive() {
        return Err(Error::ZeroTwoItemPrice(at.to_string()));
    }
    let frac = sched.at(1) / &two;
    Ok((two, frac))
}

fn sorted_unique(xs: &[Rat]) -> Vec<Rat> {
    let mut v = xs.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Samples `p, f` at `rs` and `q, g` at `ss` from a two-item mechanism's
/// posted prices.
pub fn extract_normal_form<M: Mechanism + ?Sized>(mech: &M, rs: &[Rat], ss: &[Rat]) -> Result<NormalFormSample> {
    let rs = sorted_unique(rs);
    let ss = sorted_unique(ss);
    let mut out = NormalFormSample {
        rs: rs.clone(),
        p_vals: Vec::new(),
        f_vals: Vec::new(),
        ss: ss.clone(),
        q_vals: Vec::new(),
        g_vals: Vec::new(),
    };
    for r in &rs {
        let sched = mech.bob_prices(&unit_valuation(r)?).ok_or(Error::NoSchedules)??;
        if sched.m() != 2 {
            return Err(Error::LengthMismatch(3, sched.m() + 1));
        }
        let (p, f) = split(sched, r)?;
        out.p_vals.push(p);
        out.f_vals.push(f);
    }
    for s in &ss {
        let sched = mech.alice_prices(&unit_valuation(s)?).ok_or(Error::NoSchedules)??;
        if sched.m() != 2 {
            return Err(Error::LengthMismatch(3, sched.m() + 1));
        }
        let (q, g) = split(sched, s)?;
        out.q_vals.push(q);
        out.g_vals.push(g);
    }
    Ok(out)
}

/// The closed form: `(p(x), f(x))` for [`Side::ChargeBob`], `(q(x), g(x))`
/// for [`Side::ChargeAlice`].
pub fn triage_normal_form(params: &TriageParams, x: &Rat, side: Side) -> (Rat, Rat) {
    let (w, top, one) = match side {
        Side::ChargeBob => (params.w.clone(), &params.theta_a, &params.theta_b),
        Side::ChargeAlice => (params.w.recip(), &params.theta_b, &params.theta_a),
    };
    if *x <= Rat::one() - one {
        (w, one.clone())
    } else if x < top {
        (w, Rat::one() - x)
    } else {
        (&w * x / top, Rat::one() - top)
    }
}

/// A [`NormalFormSample`] computed from the closed form.
pub fn triage_sample(params: &TriageParams, rs: &[Rat], ss: &[Rat]) -> NormalFormSample {
    let rs = sorted_unique(rs);
    let ss = sorted_unique(ss);
    let (p_vals, f_vals) = rs.iter().map(|r| triage_normal_form(params, r, Side::ChargeBob)).unzip();
    let (q_vals, g_vals) = ss.iter().map(|s| triage_normal_form(params, s, Side::ChargeAlice)).unzip();
    NormalFormSample { rs, p_vals, f_vals, ss, q_vals, g_vals }
}

/// `(w, θ_A, θ_B) = (p(0), g(0), f(0))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FittedParams {
    pub w: Rat,
    pub theta_a: Rat,
    pub theta_b: Rat,
}

impl FittedParams {
    /// Reads the parameters off the sample without validating them.
    pub fn raw(sample: &NormalFormSample) -> Result<FittedParams> {
        let zero = Rat::zero();
        match (sample.p(&zero), sample.g(&zero), sample.f(&zero)) {
            (Some(p), Some(g), Some(f)) => Ok(FittedParams { w: p.clone(), theta_a: g.clone(), theta_b: f.clone() }),
            _ => Err(Error::MissingOrigin),
        }
    }

    pub fn to_params(&self) -> Result<TriageParams> {
        TriageParams::new(self.w.clone(), self.theta_a.clone(), self.theta_b.clone())
    }

    fn thresholds_valid(&self) -> bool {
        self.to_params().is_ok()
    }
}

impl From<&TriageParams> for FittedParams {
    fn from(p: &TriageParams) -> Self {
        FittedParams { w: p.w.clone(), theta_a: p.theta_a.clone(), theta_b: p.theta_b.clone() }
    }
}

/// Fits triage parameters and insists they satisfy the triage constraints.
pub fn fit_triage_params(sample: &NormalFormSample) -> Result<FittedParams> {
    let fitted = FittedParams::raw(sample)?;
    fitted.to_params()?;
    Ok(fitted)
}

/// The parameter points used for exhaustive round-trips:
/// `w ∈ {1/2, 1, 2}`, `θ_A, θ_B ∈ {3/5, 4/5, 1}`.
pub fn standard_param_grid() -> Vec<TriageParams> {
    let ws = [Rat::new(1, 2), Rat::one(), Rat::int(2)];
    let thetas = [Rat::new(3, 5), Rat::new(4, 5), Rat::one()];
    let mut out = Vec::new();
    for w in &ws {
        for a in &thetas {
            for b in &thetas {
                if let Ok(p) = TriageParams::new(w.clone(), a.clone(), b.clone()) {
                    out.push(p);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeCheck {
    /// Letter `a` through `n`.
    pub id: char,
    pub name: String,
    pub passed: bool,
    pub points_checked: usize,
    /// First failing point, or why the check could not hold.
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub fitted: FittedParams,
    pub checks: Vec<ProbeCheck>,
}

impl ProbeReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_ids(&self) -> Vec<char> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }
}

/// Accumulates one check over sample points, keeping the first failure.
struct Tally {
    points: usize,
    failure: Option<String>,
}

impl Tally {
    fn new() -> Tally {
        Tally { points: 0, failure: None }
    }

    fn point(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.points += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(detail());
        }
    }

    fn fail(&mut self, detail: String) {
        if self.failure.is_none() {
            self.failure = Some(detail);
        }
    }

    fn finish(self, id: char, name: &str) -> ProbeCheck {
        ProbeCheck {
            id,
            name: name.into(),
            passed: self.failure.is_none(),
            points_checked: self.points,
            detail: self.failure,
        }
    }
}

fn require_density(sample: &NormalFormSample, fitted: &FittedParams) -> Result<()> {
    for (label, xs) in [("r", &sample.rs), ("s", &sample.ss)] {
        if xs.len() < 3 || xs.first() != Some(&Rat::zero()) || xs.last() != Some(&Rat::one()) {
            return Err(Error::InsufficientSample(format!("{label} grid must contain 0 and 1 and an interior point")));
        }
    }
    if !fitted.thresholds_valid() {
        // The checks themselves will report the broken thresholds.
        return Ok(());
    }
    let one = Rat::one();
    let ranges =
        [("r", &sample.rs, &fitted.theta_b, &fitted.theta_a), ("s", &sample.ss, &fitted.theta_a, &fitted.theta_b)];
    for (label, xs, one_t, top_t) in ranges {
        let low_end = &one - one_t;
        if low_end < *top_t && !xs.iter().any(|x| *x > low_end && x < top_t) {
            return Err(Error::InsufficientSample(format!("no {label} strictly inside ({low_end}, {top_t})")));
        }
        if !xs.contains(top_t) {
            return Err(Error::InsufficientSample(format!("{label} grid misses the threshold {top_t}")));
        }
    }
    Ok(())
}

/// Runs the fourteen structural checks `(a)`–`(n)` on a sampled two-item
/// mechanism, exactly.
///
/// Thresholds come from `fitted`; the point checks quantify over the sample.
pub fn probe_characterization(sample: &NormalFormSample, fitted: &FittedParams) -> Result<ProbeReport> {
    require_density(sample, fitted)?;
    let zero = Rat::zero();
    let one = Rat::one();
    let (Some(p0), Some(q0), Some(g0)) = (sample.p(&zero), sample.q(&zero), sample.g(&zero)) else {
        return Err(Error::MissingOrigin);
    };
    let w = &fitted.w;
    let ta = &fitted.theta_a;
    let tb = &fitted.theta_b;
    let in_unit = |t: &Rat| t.is_positive() && *t <= one;
    let mut checks = Vec::with_capacity(14);

    // (a)
    let mut t = Tally::new();
    for pair in sample.rs.iter().zip(&sample.p_vals).collect::<Vec<_>>().windows(2) {
        let ((r1, p1), (r2, p2)) = (pair[0], pair[1]);
        t.point(p1 <= p2, || format!("p({r1}) = {p1} > p({r2}) = {p2}"));
    }
    checks.push(t.finish('a', "p is non-decreasing"));

    // (b)
    let mut t = Tally::new();
    let prod = p0 * q0;
    t.point(prod == one, || format!("p(0)·q(0) = {prod}"));
    checks.push(t.finish('b', "p(0)·q(0) = 1"));

    // (c)
    let mut t = Tally::new();
    for (r, p, _) in sample.r_points().filter(|(r, _, _)| *r < g0) {
        t.point(p == p0, || format!("p({r}) = {p} != p(0) = {p0}"));
    }
    checks.push(t.finish('c', "p is constant below g(0)"));

    // (d), (e): the line r / (g(0)·q(0)).
    let slope_den = g0 * q0;
    let mut td = Tally::new();
    let mut te = Tally::new();
    if slope_den.is_zero() {
        td.fail("g(0)·q(0) = 0".into());
        te.fail("g(0)·q(0) = 0".into());
    } else {
        for (r, p, _) in sample.r_points() {
            let line = r / &slope_den;
            td.point(*p >= line, || format!("p({r}) = {p} < {line}"));
            if r > g0 {
                te.point(*p == line, || format!("p({r}) = {p} != {line}"));
            }
        }
    }
    checks.push(td.finish('d', "p(r) >= r/(g(0)q(0))"));
    checks.push(te.finish('e', "p(r) = r/(g(0)q(0)) above g(0)"));

    // (f)
    let mut t = Tally::new();
    if !in_unit(ta) {
        t.fail(format!("theta_a = {ta} outside (0, 1]"));
    } else {
        for (r, p, _) in sample.r_points() {
            let expect = if r <= ta { w.clone() } else { w * r / ta };
            t.point(*p == expect, || format!("p({r}) = {p}, expected {expect}"));
        }
    }
    checks.push(t.finish('f', "p = w up to theta_a, w·r/theta_a beyond"));

    // (g)
    let mut t = Tally::new();
    for (r, _, f) in sample.r_points().filter(|(r, _, _)| *r <= ta) {
        t.point(f <= tb, || format!("f({r}) = {f} > theta_b = {tb}"));
    }
    checks.push(t.finish('g', "f <= theta_b up to theta_a"));

    // (h)
    let mut t = Tally::new();
    for (r, _, f) in sample.r_points().filter(|(r, _, _)| *r <= ta) {
        for (s, g) in sample.ss.iter().zip(&sample.g_vals).filter(|(s, _)| *s <= tb) {
            t.point((s <= f) == (r <= g), || format!("r = {r}, s = {s}: f(r) = {f}, g(s) = {g}"));
        }
    }
    checks.push(t.finish('h', "s <= f(r) iff r <= g(s)"));

    // (i)
    let mut t = Tally::new();
    let low: Vec<_> = sample.r_points().filter(|(r, _, _)| *r <= ta).collect();
    for pair in low.windows(2) {
        let ((r1, _, f1), (r2, _, f2)) = (pair[0], pair[1]);
        t.point(f1 >= f2, || format!("f({r1}) = {f1} < f({r2}) = {f2}"));
    }
    checks.push(t.finish('i', "f is non-increasing up to theta_a"));

    // (j); at r = 1 the bound is vacuous.
    let mut t = Tally::new();
    let below: Vec<_> = sample.r_points().filter(|(r, _, _)| *r < ta && *r < &one).collect();
    for (i, (r, _, f)) in below.iter().enumerate() {
        for (rp, _, fp) in &below[..i] {
            let bound = (*r - *rp) * *f / (&one - *r);
            let gap = *fp - *f;
            t.point(gap <= bound, || format!("f({rp}) - f({r}) = {gap} > {bound}"));
        }
    }
    checks.push(t.finish('j', "f is Lipschitz below theta_a"));

    // (k), (l)
    let mid_low = &one - tb;
    let mut tk = Tally::new();
    let mut tl = Tally::new();
    for (r, _, f) in sample.r_points().filter(|(r, _, _)| **r > mid_low && *r < ta) {
        let expect = &one - r;
        tk.point(*f == expect, || format!("f({r}) = {f}, expected {expect}"));
        if let Some(g) = sample.g(f) {
            tl.point(g == r, || format!("g(f({r})) = g({f}) = {g}"));
        }
    }
    checks.push(tk.finish('k', "f(r) = 1 - r on (1 - theta_b, theta_a)"));
    checks.push(tl.finish('l', "g(f(r)) = r on (1 - theta_b, theta_a)"));

    // (m)
    let mut t = Tally::new();
    for (label, theta, val) in [("f", ta, sample.f(ta)), ("g", tb, sample.g(tb))] {
        if !in_unit(theta) {
            t.fail(format!("theta = {theta} outside (0, 1]"));
            continue;
        }
        match val {
            Some(v) => {
                let expect = &one - theta;
                t.point(*v == expect, || format!("{label}({theta}) = {v}, expected {expect}"));
            }
            None => t.fail(format!("{theta} not sampled")),
        }
    }
    checks.push(t.finish('m', "f(theta_a) = 1 - theta_a, g(theta_b) = 1 - theta_b"));

    // (n): the one-item price normalized by w.
    let mut t = Tally::new();
    if !in_unit(ta) {
        t.fail(format!("theta_a = {ta} outside (0, 1]"));
    } else {
        for (r, p, f) in sample.r_points().filter(|(r, _, _)| *r > ta) {
            let lhs = f * p;
            let rhs = w * (r / ta - r);
            t.point(lhs == rhs, || format!("f({r})·p({r}) = {lhs}, expected {rhs}"));
        }
    }
    checks.push(t.finish('n', "f(r)·p(r) = w(r/theta_a - r) above theta_a"));

    Ok(ProbeReport { fitted: fitted.clone(), checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{Family, ShiftedParams};
    use crate::rat;

    fn tp(w: Rat, a: Rat, b: Rat) -> TriageParams {
        TriageParams::new(w, a, b).unwrap()
    }

    #[test]
    fn extraction_examples() {
        let fam = Family::Triage(tp(Rat::one(), rat(4, 5), rat(4, 5)));
        let s = extract_normal_form(&fam, &[rat(1, 2), rat(9, 10)], &[Rat::zero()]).unwrap();
        assert_eq!((s.p_vals[0].clone(), s.f_vals[0].clone()), (Rat::one(), rat(1, 2)));
        assert_eq!((s.p_vals[1].clone(), s.f_vals[1].clone()), (rat(9, 8), rat(1, 5)));
        let fam = Family::Triage(tp(Rat::int(2), rat(3, 5), rat(4, 5)));
        let s = extract_normal_form(&fam, &[Rat::zero()], &[Rat::zero()]).unwrap();
        assert_eq!((s.p_vals[0].clone(), s.f_vals[0].clone()), (Rat::int(2), rat(4, 5)));
    }

    #[test]
    fn zero_two_item_price() {
        struct Free;
        impl Mechanism for Free {
            fn label(&self) -> String {
                "free".into()
            }
            fn run(&self, _: &Valuation, _: &Valuation) -> Result<crate::model::Outcome> {
                unimplemented!()
            }
            fn bob_prices(&self, _: &Valuation) -> Option<Result<PaymentSchedule>> {
                Some(PaymentSchedule::new(vec![Rat::zero(); 3]))
            }
        }
        assert_eq!(extract_normal_form(&Free, &[Rat::zero()], &[]), Err(Error::ZeroTwoItemPrice("0".into())));
    }

    #[test]
    fn closed_form_examples() {
        let p = tp(Rat::one(), rat(4, 5), rat(4, 5));
        assert_eq!(triage_normal_form(&p, &rat(1, 10), Side::ChargeBob), (Rat::one(), rat(4, 5)));
        assert_eq!(triage_normal_form(&p, &rat(4, 5), Side::ChargeBob), (Rat::one(), rat(1, 5)));
        for k in 0..=10 {
            let r = rat(k, 10);
            assert_eq!(triage_normal_form(&TriageParams::vcg(), &r, Side::ChargeBob), (Rat::one(), Rat::one() - &r));
        }
        // Alice side: 1/w, thresholds swapped.
        let p = tp(Rat::int(2), rat(3, 5), rat(4, 5));
        assert_eq!(triage_normal_form(&p, &Rat::zero(), Side::ChargeAlice), (rat(1, 2), rat(3, 5)));
        assert_eq!(triage_normal_form(&p, &Rat::one(), Side::ChargeAlice), (rat(5, 8), rat(1, 5)));
    }

    #[test]
    fn fit_round_trip_and_errors() {
        let g = unit_grid(40);
        for p in standard_param_grid() {
            let s = extract_normal_form(&Family::Triage(p.clone()), &g, &g).unwrap();
            assert_eq!(fit_triage_params(&s).unwrap(), FittedParams::from(&p));
        }
        let s = extract_normal_form(&Family::vcg(), &g, &g).unwrap();
        assert_eq!(fit_triage_params(&s).unwrap(), FittedParams::from(&TriageParams::vcg()));
        let no_origin = extract_normal_form(&Family::vcg(), &[rat(1, 2)], &[rat(1, 2)]).unwrap();
        assert_eq!(fit_triage_params(&no_origin), Err(Error::MissingOrigin));
        let shifted = Family::Shifted(ShiftedParams::new(rat(1, 2)).unwrap());
        let s = extract_normal_form(&shifted, &g, &g).unwrap();
        assert!(matches!(fit_triage_params(&s), Err(Error::ConstraintViolated(_))));
    }

    #[test]
    fn probes_pass_on_triage() {
        let g = unit_grid(40);
        for p in [tp(Rat::one(), rat(4, 5), rat(4, 5)), tp(Rat::int(2), rat(3, 5), rat(4, 5))] {
            let s = extract_normal_form(&Family::Triage(p), &g, &g).unwrap();
            let rep = probe_characterization(&s, &fit_triage_params(&s).unwrap()).unwrap();
            assert!(rep.all_passed(), "{:?}", rep.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
            assert_eq!(rep.checks.len(), 14);
            assert!(rep.checks.iter().all(|c| c.points_checked > 0), "{:?}", rep.checks);
        }
    }

    #[test]
    fn literal_high_range_identity_fails() {
        // Unnormalized: f(r) = r/θ_A - r would be 9/8 - 9/10 = 9/40, but f(9/10) = 1/5.
        let p = tp(Rat::one(), rat(4, 5), rat(4, 5));
        let (_, f) = triage_normal_form(&p, &rat(9, 10), Side::ChargeBob);
        assert_ne!(f, rat(9, 8) - rat(9, 10));
        let (pv, f) = triage_normal_form(&p, &rat(9, 10), Side::ChargeBob);
        assert_eq!(&f * &pv, rat(9, 40));
    }

    #[test]
    fn shifted_control_fails_some_probes() {
        let g = unit_grid(40);
        let shifted = Family::Shifted(ShiftedParams::new(rat(1, 2)).unwrap());
        let s = extract_normal_form(&shifted, &g, &g).unwrap();
        let fitted = FittedParams::raw(&s).unwrap();
        assert_eq!(fitted, FittedParams { w: Rat::one(), theta_a: rat(3, 2), theta_b: rat(3, 2) });
        let rep = probe_characterization(&s, &fitted).unwrap();
        assert!(!rep.all_passed());
        assert!(rep.failed_ids().contains(&'k'));
    }

    #[test]
    fn sparse_sample_rejected() {
        let s = extract_normal_form(&Family::vcg(), &[Rat::zero(), Rat::one()], &[Rat::zero(), Rat::one()]).unwrap();
        let fitted = fit_triage_params(&s).unwrap();
        assert!(matches!(probe_characterization(&s, &fitted), Err(Error::InsufficientSample(_))));
    }
}
