//! Argument parsing, instance plumbing and report rendering for the
//! `triage` binary. Every command returns its full stdout as a string plus
//! an exit status so the same code paths are usable from tests.

use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use triage_core::induced::{
    all_index_pairs, check_param_equalities, check_top_thresholds, fit_induced_params, InducedIndex,
};
use triage_core::mechanisms::{Family, FirstPriceStrawman, FractionsParams, Mechanism, ShiftedParams};
use triage_core::model::{optimal_welfare2, ratio, Valuation};
use triage_core::normal_form::{extract_normal_form, fit_triage_params, probe_characterization, unit_grid};
use triage_core::verify::{
    affine_samples, affine_witness, check_feasibility, check_individual_rationality, check_posted_prices,
    check_scalability, check_truthfulness, merged_valuations, sweep_approximation, sweep_rows, AffineVerdict, Grid,
    PropertyReport, SweepRow,
};
use triage_core::{Execution, Rat};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] triage_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Usage, parse and parameter errors all exit with status 2.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "triage",
    version,
    about = "Truthful two-bidder multi-unit auctions with exact brute-force verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one instance and print the outcome.
    Run(RunArgs),
    /// Check properties over an exhaustive grid; exit 1 if any fails.
    Verify(VerifyArgs),
    /// Exhaustive approximation-ratio sweep.
    Sweep(SweepArgs),
    /// Normal-form characterization probes on the unit grid.
    Probe(ProbeArgs),
    /// Fit (w, θ_A, θ_B) directly (m = 2) or for every induced mechanism (m > 2).
    Fit(FitArgs),
    /// Search for an affine-maximizer certificate or its refutation.
    Affine(AffineArgs),
    /// Write a seeded random instance file.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechKind {
    Vcg,
    Triage,
    Shifted,
    Fractions,
    StrawmanFirstprice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct MechArgs {
    #[arg(long, value_enum, default_value = "triage")]
    pub mech: MechKind,
    /// Weight; for `vcg` a value other than 1 selects weighted VCG.
    #[arg(long, default_value = "1")]
    pub w: Rat,
    #[arg(long, default_value = "1")]
    pub theta_a: Rat,
    #[arg(long, default_value = "1")]
    pub theta_b: Rat,
    /// Shift for the shifted welfare maximizer.
    #[arg(long, default_value = "1")]
    pub alpha: Rat,
    /// Comma-separated α_1..α_{m-1} for the fractions auction.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<Rat>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Items; defaults to 2, or to the instance file's `m`.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub denom: u32,
    #[arg(long, default_value = "1")]
    pub max: Rat,
    /// Merge the grids for every denominator 1..=denom.
    #[arg(long)]
    pub upto: bool,
    /// Read valuations from an instance file instead of the grid.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Add this many seeded random valuations to the universe.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Disable the thread pool (output is identical either way).
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[arg(long, value_parser = parse_valuation)]
    pub alice: Valuation,
    #[arg(long, value_parser = parse_valuation)]
    pub bob: Valuation,
    #[arg(long, value_enum, default_value_t)]
    pub out: OutFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Prop {
    Truthful,
    Feasible,
    Ir,
    Scalable,
    Posted,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "truthful,feasible,ir,scalable")]
    pub props: Vec<Prop>,
    /// Scaling factors for `scalable`.
    #[arg(long, value_delimiter = ',', default_value = "2,3,1/2")]
    pub factors: Vec<Rat>,
    #[arg(long, value_enum, default_value_t)]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Exit 1 if the worst ratio exceeds this.
    #[arg(long)]
    pub bound: Option<Rat>,
    #[arg(long, value_enum, default_value_t)]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[arg(long, default_value_t = 40)]
    pub denom: u32,
    #[arg(long, value_enum, default_value_t)]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 40)]
    pub denom: u32,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long, value_enum, default_value_t)]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct AffineArgs {
    #[command(flatten)]
    pub mech: MechArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t)]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 4)]
    pub denom: u32,
    #[arg(long, default_value = "1")]
    pub max: Rat,
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// `{"m": 2, "valuations": [["0","3","5"], …]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub valuations: Vec<Valuation>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> CliResult<InstanceFile> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if let Some(bad) = file.valuations.iter().find(|v| v.m() != file.m) {
            return Err(CliError::Usage(format!("valuation has {} items, file declares m = {}", bad.m(), file.m)));
        }
        Ok(file)
    }

    pub fn render(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn parse_valuation(s: &str) -> Result<Valuation, String> {
    let values =
        s.split(',').map(|x| Rat::from_str(x.trim())).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    Valuation::new(values).map_err(|e| e.to_string())
}

fn show_valuation(v: &Valuation) -> String {
    v.values().iter().map(Rat::to_string).collect::<Vec<_>>().join(",")
}

/// A mechanism selected on the command line.
pub enum Selected {
    Family(Family),
    Strawman,
}

impl Selected {
    pub fn as_mechanism(&self) -> &dyn Mechanism {
        match self {
            Selected::Family(f) => f,
            Selected::Strawman => &FirstPriceStrawman,
        }
    }

    pub fn family(&self) -> Option<&Family> {
        match self {
            Selected::Family(f) => Some(f),
            Selected::Strawman => None,
        }
    }
}

pub fn select(args: &MechArgs) -> CliResult<Selected> {
    Ok(match args.mech {
        MechKind::Vcg => Selected::Family(Family::WeightedVcg { weight: args.w.clone() }),
        MechKind::Triage => {
            Selected::Family(Family::triage(args.w.clone(), args.theta_a.clone(), args.theta_b.clone())?)
        }
        MechKind::Shifted => Selected::Family(Family::Shifted(ShiftedParams::new(args.alpha.clone())?)),
        MechKind::Fractions => {
            if args.alphas.is_empty() {
                return Err(CliError::Usage("--alphas is required for the fractions auction".into()));
            }
            Selected::Family(Family::Fractions(FractionsParams::new(args.alphas.clone())?))
        }
        MechKind::StrawmanFirstprice => Selected::Strawman,
    })
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Sorted uniform draws from the `1/denom` grid on `[0, max]`.
pub fn random_valuations(m: usize, denom: u32, max: &Rat, count: usize, seed: u64) -> CliResult<Vec<Valuation>> {
    let grid = Grid::new(m, max.clone(), denom)?;
    let levels = grid.levels();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut idx: Vec<usize> = (0..m).map(|_| rng.gen_range(0..levels.len())).collect();
        idx.sort_unstable();
        let mut values = vec![Rat::zero()];
        values.extend(idx.into_iter().map(|i| levels[i].clone()));
        out.push(Valuation::new(values)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct UniverseSpec {
    pub m: usize,
    pub denominator: u32,
    pub max_value: Rat,
    pub all_denominators: bool,
    pub instance_file: Option<String>,
    pub random: usize,
    pub seed: u64,
    pub valuations: usize,
}

pub fn build_universe(g: &GridArgs) -> CliResult<(Vec<Valuation>, UniverseSpec)> {
    let mut vals = if let Some(path) = &g.instances {
        let text =
            fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        let file = InstanceFile::parse(&text)?;
        if let Some(m) = g.m.filter(|m| *m != file.m) {
            return Err(CliError::Usage(format!("--m {m} disagrees with instance file m = {}", file.m)));
        }
        file.valuations
    } else if g.upto {
        let grids = (1..=g.denom)
            .filter(|d| (&g.max * &Rat::int(i64::from(*d))).denom() == Rat::one().denom())
            .map(|d| Grid::new(g.m.unwrap_or(2), g.max.clone(), d))
            .collect::<Result<Vec<_>, _>>()?;
        merged_valuations(&grids)
    } else {
        Grid::new(g.m.unwrap_or(2), g.max.clone(), g.denom)?.valuations()
    };
    let m = vals.first().map_or(g.m.unwrap_or(2), Valuation::m);
    if g.random > 0 {
        vals.extend(random_valuations(m, g.denom, &g.max, g.random, g.seed)?);
        vals.sort();
        vals.dedup();
    }
    let spec = UniverseSpec {
        m,
        denominator: g.denom,
        max_value: g.max.clone(),
        all_denominators: g.upto,
        instance_file: g.instances.as_ref().map(|p| p.display().to_string()),
        random: g.random,
        seed: g.seed,
        valuations: vals.len(),
    };
    Ok((vals, spec))
}

/// Standard output plus exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub code: i32,
}

impl Output {
    fn new(stdout: String, ok: bool) -> Output {
        Output { stdout, code: if ok { 0 } else { 1 } }
    }
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const SWEEP_COLUMNS: [&str; 9] = ["alice", "bob", "alloc_a", "alloc_b", "pay_a", "pay_b", "welfare", "opt", "ratio"];

fn sweep_cells(r: &SweepRow) -> Vec<String> {
    vec![
        show_valuation(&r.alice),
        show_valuation(&r.bob),
        r.outcome.allocation.alice.to_string(),
        r.outcome.allocation.bob.to_string(),
        r.outcome.pay_alice.to_string(),
        r.outcome.pay_bob.to_string(),
        r.outcome.welfare.to_string(),
        r.opt.to_string(),
        r.ratio.to_string(),
    ]
}

pub fn dispatch(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Affine(a) => cmd_affine(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    mechanism: String,
    family: Option<&'a Family>,
    alice: &'a Valuation,
    bob: &'a Valuation,
    outcome: triage_core::model::Outcome,
    opt: Rat,
    ratio: Rat,
}

pub fn cmd_run(a: &RunArgs) -> CliResult<Output> {
    let sel = select(&a.mech)?;
    let mech = sel.as_mechanism();
    if a.alice.m() != a.bob.m() {
        return Err(CliError::Usage(format!("--alice has {} items, --bob has {}", a.alice.m(), a.bob.m())));
    }
    let outcome = mech.run(&a.alice, &a.bob)?;
    let (opt, _) = optimal_welfare2(&a.alice, &a.bob)?;
    let r = ratio(&opt, &outcome.welfare)?;
    let text = match a.out {
        OutFormat::Json => json(&RunReport {
            mechanism: mech.label(),
            family: sel.family(),
            alice: &a.alice,
            bob: &a.bob,
            outcome,
            opt,
            ratio: r,
        })?,
        OutFormat::Csv => {
            let row = SweepRow { alice: a.alice.clone(), bob: a.bob.clone(), outcome, opt, ratio: r };
            csv_string(&SWEEP_COLUMNS, vec![sweep_cells(&row)])?
        }
    };
    Ok(Output::new(text, true))
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    mechanism: String,
    family: Option<&'a Family>,
    universe: UniverseSpec,
    passed: bool,
    reports: Vec<PropertyReport>,
}

pub fn cmd_verify(a: &VerifyArgs) -> CliResult<Output> {
    let sel = select(&a.mech)?;
    let mech = sel.as_mechanism();
    let (universe, spec) = build_universe(&a.grid)?;
    let ex = exec(a.grid.sequential);
    let reports: Vec<PropertyReport> = a
        .props
        .iter()
        .map(|p| match p {
            Prop::Truthful => check_truthfulness(mech, &universe, ex),
            Prop::Feasible => check_feasibility(mech, &universe, ex),
            Prop::Ir => check_individual_rationality(mech, &universe, ex),
            Prop::Scalable => check_scalability(mech, &universe, &a.factors, ex),
            Prop::Posted => check_posted_prices(mech, &universe, ex),
        })
        .collect();
    let passed = reports.iter().all(|r| r.passed);
    let text = match a.out {
        OutFormat::Json => {
            json(&VerifyReport { mechanism: mech.label(), family: sel.family(), universe: spec, passed, reports })?
        }
        OutFormat::Csv => {
            let rows = reports
                .iter()
                .map(|r| {
                    Ok(vec![
                        r.property.clone(),
                        r.mechanism.clone(),
                        r.passed.to_string(),
                        r.instances_checked.to_string(),
                        r.comparisons.to_string(),
                        match &r.counterexample {
                            Some(cx) => serde_json::to_string(cx)?,
                            None => String::new(),
                        },
                    ])
                })
                .collect::<CliResult<Vec<_>>>()?;
            csv_string(&["property", "mechanism", "passed", "instances", "comparisons", "counterexample"], rows)?
        }
    };
    Ok(Output::new(text, passed))
}

#[derive(Serialize)]
struct SweepReport<'a> {
    mechanism: String,
    family: Option<&'a Family>,
    universe: UniverseSpec,
    instances: u64,
    worst_ratio: Rat,
    bound: Option<&'a Rat>,
    within_bound: bool,
    witness: Option<SweepRow>,
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult<Output> {
    let sel = select(&a.mech)?;
    let mech = sel.as_mechanism();
    let (universe, spec) = build_universe(&a.grid)?;
    let ex = exec(a.grid.sequential);
    match a.out {
        OutFormat::Json => {
            let s = sweep_approximation(mech, &universe, ex)?;
            let within = a.bound.as_ref().is_none_or(|b| s.worst_ratio <= *b);
            let text = json(&SweepReport {
                mechanism: s.mechanism,
                family: sel.family(),
                universe: spec,
                instances: s.instances,
                worst_ratio: s.worst_ratio,
                bound: a.bound.as_ref(),
                within_bound: within,
                witness: s.worst,
            })?;
            Ok(Output::new(text, within))
        }
        OutFormat::Csv => {
            let rows = sweep_rows(mech, &universe, ex)?;
            let within = a.bound.as_ref().is_none_or(|b| rows.iter().all(|r| r.ratio <= *b));
            let text = csv_string(&SWEEP_COLUMNS, rows.iter().map(sweep_cells).collect())?;
            Ok(Output::new(text, within))
        }
    }
}

#[derive(Serialize)]
struct ProbeOut<'a> {
    mechanism: String,
    denominator: u32,
    passed: usize,
    total: usize,
    report: &'a triage_core::normal_form::ProbeReport,
}

pub fn cmd_probe(a: &ProbeArgs) -> CliResult<Output> {
    let sel = select(&a.mech)?;
    let mech = sel.as_mechanism();
    let g = unit_grid(a.denom);
    let sample = extract_normal_form(mech, &g, &g)?;
    let fitted = fit_triage_params(&sample).or_else(|_| triage_core::normal_form::FittedParams::raw(&sample))?;
    let report = probe_characterization(&sample, &fitted)?;
    let ok = report.all_passed();
    let text = match a.out {
        OutFormat::Json => json(&ProbeOut {
            mechanism: mech.label(),
            denominator: a.denom,
            passed: report.passed(),
            total: report.checks.len(),
            report: &report,
        })?,
        OutFormat::Csv => csv_string(
            &["id", "name", "passed", "points", "detail"],
            report
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.id.to_string(),
                        c.name.clone(),
                        c.passed.to_string(),
                        c.points_checked.to_string(),
                        c.detail.clone().unwrap_or_default(),
                    ]
                })
                .collect(),
        )?,
    };
    Ok(Output::new(text, ok))
}

#[derive(Serialize)]
struct FitRow {
    index: Option<InducedIndex>,
    w: Rat,
    theta_a: Rat,
    theta_b: Rat,
}

#[derive(Serialize)]
struct FitReport {
    mechanism: String,
    m: usize,
    fits: Vec<FitRow>,
    checks: Vec<PropertyReport>,
    passed: bool,
}

pub fn cmd_fit(a: &FitArgs) -> CliResult<Output> {
    let sel = select(&a.mech)?;
    let mech = sel.as_mechanism();
    let ex = exec(a.sequential);
    let (fits, checks) = if a.m == 2 {
        let g = unit_grid(a.denom);
        let f = fit_triage_params(&extract_normal_form(mech, &g, &g)?)?;
        (vec![FitRow { index: None, w: f.w, theta_a: f.theta_a, theta_b: f.theta_b }], Vec::new())
    } else {
        let fits = InducedIndex::all_valid(a.m)
            .into_iter()
            .map(|idx| {
                fit_induced_params(mech, idx).map(|f| FitRow {
                    index: Some(idx),
                    w: f.w,
                    theta_a: f.theta_a,
                    theta_b: f.theta_b,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let checks =
            vec![check_param_equalities(mech, &all_index_pairs(a.m), ex)?, check_top_thresholds(mech, a.m, ex)?];
        (fits, checks)
    };
    let passed = checks.iter().all(|c| c.passed);
    let text = match a.out {
        OutFormat::Json => json(&FitReport { mechanism: mech.label(), m: a.m, fits, checks, passed })?,
        OutFormat::Csv => csv_string(
            &["index", "w", "theta_a", "theta_b"],
            fits.iter()
                .map(|f| {
                    vec![
                        f.index.map(|i| i.to_string()).unwrap_or_default(),
                        f.w.to_string(),
                        f.theta_a.to_string(),
                        f.theta_b.to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    Ok(Output::new(text, passed))
}

#[derive(Serialize)]
struct AffineReport {
    mechanism: String,
    universe: UniverseSpec,
    samples: usize,
    affine: bool,
    result: AffineVerdict,
}

pub fn cmd_affine(a: &AffineArgs) -> CliResult<Output> {
    let sel = select(&a.mech)?;
    let mech = sel.as_mechanism();
    let (universe, spec) = build_universe(&a.grid)?;
    let samples = affine_samples(mech, &universe, exec(a.grid.sequential))?;
    let verdict = affine_witness(&samples)?;
    let text = match a.out {
        OutFormat::Json => json(&AffineReport {
            mechanism: mech.label(),
            universe: spec,
            samples: samples.len(),
            affine: verdict.is_affine(),
            result: verdict,
        })?,
        OutFormat::Csv => {
            let header =
                ["verdict", "range", "alpha_a", "alpha_b", "multiplier", "alice", "bob", "chosen", "alternative"];
            let show_range = |r: &std::collections::BTreeSet<triage_core::model::Allocation2>| {
                r.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
            };
            let rows = match &verdict {
                AffineVerdict::Rationalizable(c) => vec![vec![
                    "rationalizable".into(),
                    show_range(&c.spec.range),
                    c.spec.alpha_a.to_string(),
                    c.spec.alpha_b.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]],
                AffineVerdict::NotAffine { refutations } => refutations
                    .iter()
                    .flat_map(|r| {
                        r.rows.iter().map(|w| {
                            vec![
                                "not_affine".into(),
                                show_range(&r.range),
                                String::new(),
                                String::new(),
                                w.multiplier.to_string(),
                                show_valuation(&w.sample.alice),
                                show_valuation(&w.sample.bob),
                                w.sample.chosen.to_string(),
                                w.alternative.to_string(),
                            ]
                        })
                    })
                    .collect(),
            };
            csv_string(&header, rows)?
        }
    };
    Ok(Output::new(text, true))
}

pub fn cmd_gen(a: &GenArgs) -> CliResult<Output> {
    let valuations = random_valuations(a.m, a.denom, &a.max, a.count, a.seed)?;
    Ok(Output::new(InstanceFile { m: a.m, valuations }.render()?, true))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return Output { stdout: e.to_string(), code };
        }
    };
    match dispatch(&cli) {
        Ok(out) => out,
        Err(e) => Output { stdout: format!("error: {e}\n"), code: e.exit_code() },
    }
}
