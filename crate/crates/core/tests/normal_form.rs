use proptest::prelude::*;

use triage_core::mechanisms::{triage_schedule, wvcg_schedule, Family, Mechanism, Side, TriageParams};
use triage_core::model::Valuation;
use triage_core::normal_form::{
    extract_normal_form, fit_triage_params, probe_characterization, standard_param_grid, triage_normal_form,
    triage_sample, unit_grid, FittedParams,
};
use triage_core::verify::Grid;
use triage_core::{rat, Rat};

fn unit(r: &Rat) -> Valuation {
    Valuation::new(vec![Rat::zero(), r.clone(), Rat::one()]).unwrap()
}

#[test]
fn schedule_and_closed_form_agree_on_grid() {
    let rs = unit_grid(40);
    for params in standard_param_grid() {
        for r in &rs {
            let bob = triage_schedule(&unit(r), &params, Side::ChargeBob);
            let (p, f) = triage_normal_form(&params, r, Side::ChargeBob);
            assert_eq!(bob.prices(), &[Rat::zero(), &f * &p, p.clone()], "{params:?} r={r}");
            let alice = triage_schedule(&unit(r), &params, Side::ChargeAlice);
            let (q, g) = triage_normal_form(&params, r, Side::ChargeAlice);
            assert_eq!(alice.prices(), &[Rat::zero(), &g * &q, q.clone()]);
        }
        let fam = Family::Triage(params.clone());
        assert_eq!(extract_normal_form(&fam, &rs, &rs).unwrap(), triage_sample(&params, &rs, &rs));
    }
}

#[test]
fn closed_form_scales_to_all_two_item_valuations() {
    for params in standard_param_grid() {
        for v in Grid::new(2, Rat::int(2), 4).unwrap().valuations() {
            let top = v.top().clone();
            let bob = triage_schedule(&v, &params, Side::ChargeBob);
            if top.is_zero() {
                assert!(bob.prices().iter().all(Rat::is_zero));
                continue;
            }
            let (p, f) = triage_normal_form(&params, &(v.at(1) / &top), Side::ChargeBob);
            assert_eq!(bob.at(2), &(&p * &top));
            assert_eq!(bob.at(1), &(&(&f * &p) * &top));
        }
    }
}

#[test]
fn all_ones_is_vcg() {
    let fam = Family::Triage(TriageParams::vcg());
    let universe = Grid::new(2, Rat::int(2), 4).unwrap().valuations();
    for v in &universe {
        assert_eq!(triage_schedule(v, &TriageParams::vcg(), Side::ChargeBob), wvcg_schedule(v, &Rat::one()).unwrap());
        for u in &universe {
            assert_eq!(fam.run(v, u).unwrap(), Family::vcg().run(v, u).unwrap());
        }
    }
}

#[test]
fn fit_round_trips_parameter_grid() {
    let g = unit_grid(40);
    for params in standard_param_grid() {
        let s = extract_normal_form(&Family::Triage(params.clone()), &g, &g).unwrap();
        assert_eq!(fit_triage_params(&s).unwrap(), FittedParams::from(&params));
    }
}

#[test]
fn probes_on_parameter_grid() {
    let g = unit_grid(40);
    for params in standard_param_grid() {
        let s = extract_normal_form(&Family::Triage(params.clone()), &g, &g).unwrap();
        let rep = probe_characterization(&s, &fit_triage_params(&s).unwrap()).unwrap();
        assert!(rep.all_passed(), "{params:?}: {:?}", rep.failed_ids());
    }
}

#[test]
fn probe_check_b_value() {
    let g = unit_grid(40);
    let params = TriageParams::new(Rat::int(2), rat(3, 5), rat(4, 5)).unwrap();
    let s = extract_normal_form(&Family::Triage(params), &g, &g).unwrap();
    assert_eq!(s.p(&Rat::zero()).unwrap() * s.q(&Rat::zero()).unwrap(), Rat::one());
    assert_eq!(s.q(&Rat::zero()), Some(&rat(1, 2)));
}

fn arb_params() -> impl Strategy<Value = TriageParams> {
    (1i64..=6, 1i64..=3, 1i64..=20, 1i64..=20)
        .prop_filter_map("constraint", |(wn, wd, a, b)| TriageParams::new(rat(wn, wd), rat(a, 20), rat(b, 20)).ok())
}

proptest! {
    #[test]
    fn closed_form_matches_schedule(params in arb_params(), k in 0i64..=60) {
        let r = rat(k, 60);
        let bob = triage_schedule(&unit(&r), &params, Side::ChargeBob);
        let (p, f) = triage_normal_form(&params, &r, Side::ChargeBob);
        prop_assert_eq!(bob.at(2), &p);
        prop_assert_eq!(bob.at(1), &(&f * &p));
    }

    #[test]
    fn fitted_params_round_trip(params in arb_params()) {
        let g = unit_grid(20);
        let s = extract_normal_form(&Family::Triage(params.clone()), &g, &g).unwrap();
        prop_assert_eq!(fit_triage_params(&s).unwrap(), FittedParams::from(&params));
    }
}
