use triage_cli::{parse_valuation, random_valuations, run_from, InstanceFile, Output};
use triage_core::Rat;

fn triage(args: &[&str]) -> Output {
    run_from(std::iter::once("triage").chain(args.iter().copied()))
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", out.stdout))
}

#[test]
fn vcg_run_example() {
    let out = triage(&["run", "--mech", "vcg", "--alice", "0,3,5", "--bob", "0,2,4"]);
    assert_eq!(out.code, 0);
    let v = json(&out);
    assert_eq!(v["outcome"]["allocation"]["alice"], 2);
    assert_eq!(v["outcome"]["allocation"]["bob"], 0);
    assert_eq!(v["outcome"]["pay_alice"], "4");
    assert_eq!(v["ratio"], "1");
}

#[test]
fn triage_run_matches_library() {
    let out = triage(&[
        "run",
        "--mech",
        "triage",
        "--w",
        "1",
        "--theta-a",
        "4/5",
        "--theta-b",
        "4/5",
        "--alice",
        "0,9/10,1",
        "--bob",
        "0,7/10,3/4",
    ]);
    assert_eq!(out.code, 0);
    let v = json(&out);
    let fam =
        triage_core::mechanisms::Family::triage(Rat::one(), triage_core::rat(4, 5), triage_core::rat(4, 5)).unwrap();
    let lib = triage_core::mechanisms::run(
        &fam,
        &parse_valuation("0,9/10,1").unwrap(),
        &parse_valuation("0,7/10,3/4").unwrap(),
    )
    .unwrap();
    assert_eq!(v["outcome"], serde_json::to_value(&lib).unwrap());
}

#[test]
fn violated_constraint_is_a_usage_error() {
    let out = triage(&[
        "run",
        "--mech",
        "triage",
        "--theta-a",
        "1/5",
        "--theta-b",
        "1/5",
        "--alice",
        "0,1,1",
        "--bob",
        "0,1,1",
    ]);
    assert_eq!(out.code, 2);
    assert!(out.stdout.contains("constraint"), "{}", out.stdout);
    assert_eq!(triage(&["run", "--alice", "0,2,1", "--bob", "0,1,1"]).code, 2);
    assert_eq!(triage(&["run", "--alice", "0,x,1", "--bob", "0,1,1"]).code, 2);
    assert_eq!(triage(&["sweep", "--denom", "0"]).code, 2);
}

#[test]
fn verify_exit_codes() {
    let ok = triage(&[
        "verify",
        "--mech",
        "triage",
        "--theta-a",
        "4/5",
        "--theta-b",
        "4/5",
        "--props",
        "truthful,feasible,scalable,ir",
        "--m",
        "2",
        "--denom",
        "4",
        "--max",
        "2",
    ]);
    assert_eq!(ok.code, 0, "{}", ok.stdout);
    assert_eq!(json(&ok)["reports"].as_array().unwrap().len(), 4);

    let bad = triage(&["verify", "--mech", "strawman-firstprice", "--props", "truthful", "--out", "csv"]);
    assert_eq!(bad.code, 1);
    let mut rows = csv::Reader::from_reader(bad.stdout.as_bytes());
    let row = rows.records().next().unwrap().unwrap();
    assert_eq!(&row[2], "false");
    assert!(row[5].contains("deviation"));

    let frac = triage(&["verify", "--mech", "fractions", "--alphas", "1/2", "--props", "feasible", "--m", "2"]);
    assert_eq!(frac.code, 0);
    assert_eq!(triage(&["verify", "--mech", "fractions", "--props", "feasible"]).code, 2);
}

#[test]
fn sweep_csv_columns_and_witness() {
    let out = triage(&["sweep", "--theta-a", "4/5", "--theta-b", "4/5", "--denom", "2", "--max", "1", "--out", "csv"]);
    assert_eq!(out.code, 0);
    let mut r = csv::Reader::from_reader(out.stdout.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["alice", "bob", "alloc_a", "alloc_b", "pay_a", "pay_b", "welfare", "opt", "ratio"]);
    assert_eq!(r.records().count(), 36);
    assert!(!out.stdout.contains('.'), "decimal in exact output");

    let j = triage(&["sweep", "--theta-a", "4/5", "--theta-b", "4/5", "--denom", "8", "--max", "2", "--bound", "5/4"]);
    assert_eq!(j.code, 0);
    let v = json(&j);
    let worst: Rat = v["worst_ratio"].as_str().unwrap().parse().unwrap();
    assert!(worst <= triage_core::rat(5, 4));
    assert_eq!(v["witness"]["ratio"], v["worst_ratio"]);

    let tight =
        triage(&["sweep", "--theta-a", "4/5", "--theta-b", "4/5", "--denom", "8", "--max", "2", "--bound", "1"]);
    assert_eq!(tight.code, 1);
}

#[test]
fn probe_fit_affine() {
    let p = triage(&["probe", "--mech", "triage", "--w", "2", "--theta-a", "3/5", "--theta-b", "4/5", "--denom", "40"]);
    assert_eq!(p.code, 0);
    assert_eq!(json(&p)["passed"], 14);

    let shifted = triage(&["probe", "--mech", "shifted", "--alpha", "1/2", "--denom", "40"]);
    assert_eq!(shifted.code, 1);

    let f = triage(&["fit", "--mech", "triage", "--w", "2", "--theta-a", "3/5", "--theta-b", "4/5"]);
    let v = json(&f);
    assert_eq!(v["fits"][0]["w"], "2");
    assert_eq!(v["fits"][0]["theta_a"], "3/5");
    assert_eq!(v["fits"][0]["theta_b"], "4/5");
    let induced = triage(&["fit", "--theta-a", "4/5", "--theta-b", "4/5", "--m", "4"]);
    assert_eq!(induced.code, 0);
    assert_eq!(json(&induced)["fits"].as_array().unwrap().len(), 15);

    let a =
        triage(&["affine", "--mech", "triage", "--w", "1", "--theta-a", "3/5", "--theta-b", "3/5", "--denom", "10"]);
    let v = json(&a);
    assert_eq!(v["affine"], false);
    assert_eq!(v["result"]["verdict"], "not_affine");
    let vcg = json(&triage(&["affine", "--mech", "vcg", "--denom", "4"]));
    assert_eq!(vcg["result"]["verdict"], "rationalizable");
}

#[test]
fn instance_file_round_trips() {
    let vals = random_valuations(3, 4, &Rat::int(2), 10, 42).unwrap();
    let file = InstanceFile { m: 3, valuations: vals };
    let text = file.render().unwrap();
    let back = InstanceFile::parse(&text).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.render().unwrap(), text);
    assert!(InstanceFile::parse(r#"{"m": 3, "valuations": [["0","1","2"]]}"#).is_err());
    assert!(InstanceFile::parse(r#"{"m": 2, "valuations": [["0","2","1"]]}"#).is_err());
    let ok = InstanceFile::parse(r#"{"m": 2, "valuations": [["0","3","5"], ["0","1/2","1"]]}"#).unwrap();
    assert_eq!(ok.valuations[0], parse_valuation("0,3,5").unwrap());
}

#[test]
fn instance_file_drives_verify() {
    let dir = std::env::temp_dir().join(format!("triage-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("inst.json");
    let gen = triage(&["gen", "--m", "3", "--count", "6", "--seed", "5"]);
    std::fs::write(&path, &gen.stdout).unwrap();
    let p = path.to_str().unwrap();
    let out = triage(&["verify", "--theta-a", "3/5", "--theta-b", "3/5", "--instances", p]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert_eq!(json(&out)["universe"]["m"], 3);
    assert_eq!(triage(&["verify", "--instances", p, "--m", "2"]).code, 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn random_draws_are_seeded_and_sorted() {
    let a = random_valuations(4, 10, &Rat::one(), 50, 9).unwrap();
    assert_eq!(a, random_valuations(4, 10, &Rat::one(), 50, 9).unwrap());
    assert_ne!(a, random_valuations(4, 10, &Rat::one(), 50, 10).unwrap());
    assert!(a.iter().all(|v| v.values().windows(2).all(|w| w[0] <= w[1]) && *v.top() <= Rat::one()));
}
