//! `liouville-lab`: classification, Dirichlet solves, comparison checks, reproduction of
//! the worked examples, ends and Monte Carlo from the command line.
//!
//! Exit codes: 0 success or decisive, 1 check failure, 2 usage or spec error,
//! 3 inconclusive.

mod golden;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use liouville_core::comparison::{radial_scan, transplant_exit_check, transplant_green_check};
use liouville_core::counterexamples::{build_example1, build_example2, certify_l1_after_rescale, on_ray};
use liouville_core::model::{l1_evidence_general as l1_evidence, TermBound};
use liouville_core::subgraph::ends;
use liouville_core::walker::{exit_samples, survival_curve, WalkStats, MAX_CENSORED_FRACTION};
use liouville_core::{
    classify, curvature_dominance, Answer, BallSystem, Direction, Error, GraphSpec, Growth, Label,
    RadialModel, Sequence, SolverMode, WalkConfig, DEFAULT_N_MAX,
};

use golden::Golden;
use output::{num, RunManifest, Sink};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(
                Error::Singular { .. }
                | Error::Residual { .. }
                | Error::NoConvergence { .. }
                | Error::Integration { .. }
                | Error::Internal(_),
            ) => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Ok,
    Failed,
    Inconclusive,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Failed => 1,
            Outcome::Inconclusive => 3,
        }
    }
}

fn radius(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("radius must be at least 1".into()),
        Ok(r) => Ok(r),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Parser, Debug)]
#[command(name = "liouville-lab", version, about = "Potential theory on infinite weighted graphs")]
struct Cli {
    /// Directory for output files; without it only the main output is printed to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Solver {
    Auto,
    Direct,
    Cg,
}

impl From<Solver> for SolverMode {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Auto => SolverMode::Auto,
            Solver::Direct => SolverMode::Direct,
            Solver::Cg => SolverMode::Cg,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Example {
    Example1,
    Example2,
    Section4,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Decide parabolicity, stochastic completeness and the L1-Liouville property of a
    /// radial model.
    Classify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "n-max", default_value_t = DEFAULT_N_MAX)]
        n_max: usize,
        /// JSON list of term bounds.
        #[arg(long)]
        certificates: Option<PathBuf>,
    },
    /// Dirichlet Green function g_R(x0, ·) on B_R(x0).
    Green {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        x0: Option<String>,
        #[arg(long = "R", value_parser = radius)]
        r: usize,
        #[arg(long, value_enum, default_value = "auto")]
        solver: Solver,
    },
    /// Mean exit time E_R on B_R(x0).
    Exit {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        x0: Option<String>,
        #[arg(long = "R", value_parser = radius)]
        r: usize,
        #[arg(long, value_enum, default_value = "auto")]
        solver: Solver,
    },
    /// Curvature dominance against a model and the transplant checks that apply.
    Compare {
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "R", value_parser = radius)]
        r: usize,
        #[arg(long)]
        x0: Option<String>,
    },
    /// Rebuild and certify one of the worked examples.
    Reproduce {
        #[arg(value_enum)]
        example: Example,
        #[arg(long = "R", value_parser = radius)]
        r: Option<usize>,
        /// Directory of golden files to compare against.
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Rewrite the golden file instead of comparing.
        #[arg(long, requires = "golden")]
        update_golden: bool,
        /// Omori–Yau parameter (example2).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Omori–Yau index (example2).
        #[arg(long)]
        n: Option<usize>,
        /// Search (epsilon, n) instead of using 0.3 and 2 (example2).
        #[arg(long, conflicts_with_all = ["epsilon", "n"])]
        auto: bool,
    },
    /// Components of B_R \ K and which of them reach the frontier.
    Ends {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated vertex labels.
        #[arg(long = "K", value_delimiter = ',', required = true)]
        k: Vec<String>,
        #[arg(long = "R", value_parser = radius)]
        r: usize,
        #[arg(long = "R2", value_parser = radius)]
        r2: usize,
    },
    /// Growth of the Green mass Σ g_R(x0, ·) m over balls.
    Evidence {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        x0: Option<String>,
        #[arg(long = "Rmax", value_parser = radius)]
        r_max: usize,
    },
    /// Monte Carlo exit times or survival probabilities.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        start: String,
        /// `S<r>` for the sphere of radius r, or comma-separated labels (needs --R).
        #[arg(long)]
        absorb: Option<String>,
        /// Ball radius to materialize; survival mode absorbs on its boundary.
        #[arg(long = "R", value_parser = radius)]
        r: Option<usize>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long = "t-max", default_value_t = 1e9)]
        t_max: f64,
        /// Survival mode: comma-separated times.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        /// Also write the per-sample table (needs --out).
        #[arg(long, requires = "out")]
        samples_csv: bool,
    },
    /// Re-run the command recorded in an output file's manifest.
    Replay { file: PathBuf },
}

struct Ctx {
    args: Vec<String>,
    sink: Sink,
}

impl Ctx {
    fn manifest(&self, command: &str, specs: &[&Path], parameters: Value) -> RunManifest {
        let mut m = RunManifest::new(command, specs.iter().map(|p| p.display().to_string()).collect(), parameters);
        m.args = self.args.clone();
        m
    }
}

fn load_spec(path: &Path) -> Result<GraphSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    GraphSpec::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<RadialModel, CliError> {
    load_spec(path)?.radial_model().ok_or_else(|| {
        CliError::Usage(format!(
            "{} is not a radial model; use `evidence` for general graphs",
            path.display()
        ))
    })
}

fn label(spec: &GraphSpec, text: Option<&str>) -> Result<Label, CliError> {
    match text {
        None => Ok(spec.root()),
        Some(t) => t.parse::<Label>().map_err(|e| CliError::Usage(e.to_string())),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn answer(a: Answer) -> &'static str {
    match a {
        Answer::Yes => "yes",
        Answer::No => "no",
        Answer::Unknown => "unknown",
    }
}

fn cmd_classify(ctx: &mut Ctx, spec: &Path, n_max: usize, certificates: Option<&Path>) -> Result<Outcome, CliError> {
    let model = load_model(spec)?;
    let certs: Vec<TermBound> = match certificates {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => Vec::new(),
    };
    let c = classify(&model, n_max, &certs)?;
    let mut specs = vec![spec];
    if let Some(p) = certificates {
        specs.push(p);
    }
    let m = ctx.manifest("classify", &specs, json!({ "n_max": n_max }));
    ctx.sink.json("classification.json", &m, &to_value(&c))?;
    let mut rows = Vec::new();
    for s in [&c.parabolic, &c.stochastically_complete, &c.l1_liouville] {
        let name = to_value(&s.series);
        for &(k, v) in &s.trajectory {
            rows.push(vec![name.as_str().unwrap_or_default().to_string(), k.to_string(), num(v)]);
        }
    }
    ctx.sink.csv("partial_sums.csv", &m, &["series", "k", "partial_sum"], &rows)?;
    eprintln!(
        "{}: parabolic {}, stochastically complete {}, L1-Liouville {}",
        c.model,
        answer(c.summary.parabolic),
        answer(c.summary.stochastically_complete),
        answer(c.summary.l1_liouville)
    );
    if let Some(v) = c.stochastically_complete.verdict.value() {
        eprintln!("Σ m(B_k)/∂B(k) = {}", num(v));
    }
    Ok(if c.is_decisive() { Outcome::Ok } else { Outcome::Inconclusive })
}

fn cmd_table(ctx: &mut Ctx, which: &str, spec_path: &Path, x0: Option<&str>, r: usize, solver: Solver) -> Result<Outcome, CliError> {
    let spec = load_spec(spec_path)?;
    let x0 = label(&spec, x0)?;
    let g = spec.ball_around(&x0, r)?;
    let center = g.find(&x0).ok_or_else(|| CliError::Usage(format!("vertex {x0} is not in the graph")))?;
    let sys = BallSystem::new(&g, center, r, solver.into())?;
    let (table, residual) = if which == "green" {
        let t = sys.green(center)?;
        (t.table, t.residual)
    } else {
        let t = sys.exit()?;
        (t.table, t.residual)
    };
    let m = ctx.manifest(which, &[spec_path], json!({ "x0": x0.to_string(), "R": r, "residual": residual }));
    let rows: Vec<Vec<String>> = table
        .rows()
        .into_iter()
        .map(|(l, rad, v)| vec![l.to_string(), rad.to_string(), num(v)])
        .collect();
    ctx.sink.csv(&format!("{which}.csv"), &m, &["label", "radius", "value"], &rows)?;
    Ok(Outcome::Ok)
}

/// Dominance followed by every transplant whose preconditions hold.
fn comparison_report(spec: &GraphSpec, model: &RadialModel, x0: &Label, r: usize) -> Result<(Value, Outcome), CliError> {
    let dom = curvature_dominance(spec, model, x0, r)?;
    let mut doc = json!({ "dominance": to_value(&dom) });
    let mut outcome = Outcome::Ok;
    match (dom.direction, dom.stronger_from) {
        (Direction::Stronger | Direction::Equal, Some(r0)) if r0 < r => {
            match transplant_green_check(spec, model, x0, r, r0) {
                Ok(rep) => {
                    if !rep.passed {
                        outcome = Outcome::Failed;
                    }
                    doc["green_transplant"] = to_value(&rep);
                }
                Err(Error::Precondition(why)) => doc["green_transplant_skipped"] = json!(why),
                Err(e) => return Err(e.into()),
            }
            match transplant_exit_check(spec, model, x0, r, r0) {
                Ok(rep) => {
                    if !rep.passed {
                        outcome = Outcome::Failed;
                    }
                    doc["exit_transplant"] = to_value(&rep);
                }
                Err(Error::Precondition(why)) => doc["exit_transplant_skipped"] = json!(why),
                Err(e) => return Err(e.into()),
            }
        }
        (Direction::Neither, _) => outcome = Outcome::Failed,
        _ => doc["note"] = json!("no transplant applies in this direction"),
    }
    Ok((doc, outcome))
}

fn cmd_compare(ctx: &mut Ctx, g_path: &Path, model_path: &Path, r: usize, x0: Option<&str>) -> Result<Outcome, CliError> {
    let spec = load_spec(g_path)?;
    let model = load_model(model_path)?;
    let x0 = label(&spec, x0)?;
    let (doc, outcome) = comparison_report(&spec, &model, &x0, r)?;
    let m = ctx.manifest("compare", &[g_path, model_path], json!({ "x0": x0.to_string(), "R": r }));
    ctx.sink.json("compare.json", &m, &doc)?;
    eprintln!(
        "direction {}, R0 {}",
        doc["dominance"]["direction"],
        doc["dominance"]["threshold_radius"]
    );
    Ok(outcome)
}

fn unit_half_line() -> RadialModel {
    RadialModel::new(Sequence::Const(1.0), Sequence::Const(1.0)).named("halfline_unit")
}

fn cubic_model() -> RadialModel {
    RadialModel::new(Sequence::Const(1.0), Sequence::shifted_power(3.0)).named("model_pow3")
}

fn reproduce_example1(r: usize) -> Result<(Value, bool, Vec<(&'static str, f64)>), CliError> {
    let (_, rep) = build_example1(&GraphSpec::Model(unit_half_line()), &cubic_model(), r)?;
    let ok = rep.green_preservation <= 1e-9 && rep.minorant_holds;
    let fields = vec![
        ("green_preservation", 1e-9),
        ("minorant", 0.0),
        ("v1_volume", 0.0),
        ("minorant_holds", 0.0),
        ("rescaled_mass_v1", 1e-8),
        ("unscaled_mass_v1", 1e-8),
        ("lambda_sq_max", 1e-8),
        ("m2_series.kind", 0.0),
    ];
    Ok((to_value(&rep), ok, fields))
}

fn reproduce_example2(r: usize, choice: Option<(f64, usize)>) -> Result<(Value, bool, Vec<(&'static str, f64)>), CliError> {
    let ex = build_example2(&Sequence::shifted_power(3.0), r, choice)?;
    let schedule: Vec<usize> = (0..4).map(|i| r + 5 * i).collect();
    let l1 = certify_l1_after_rescale(&ex.spec, &Label::grid(0, 0), &schedule, &on_ray)?;
    let ok = ex.report.certified && l1.all_hold;
    let doc = json!({
        "omori_yau": to_value(&ex.report),
        "green_on_ray": to_value(&ex.green_on_ray),
        "lambda_sq_on_ray": to_value(&ex.lambda_sq_on_ray),
        "l1": to_value(&l1),
    });
    let fields = vec![
        ("omori_yau.epsilon", 1e-12),
        ("omori_yau.n", 0.0),
        ("omori_yau.alpha", 1e-15),
        ("omori_yau.f_star", 1e-9),
        ("omori_yau.condition_2", 0.0),
        ("omori_yau.omega_vertices", 0.0),
        ("omori_yau.max_laplacian_on_omega", 1e-9),
        ("omori_yau.certified", 0.0),
        ("l1.rows.0.partial_sum", 1e-8),
        ("l1.rows.0.minorant", 0.0),
        ("l1.all_hold", 0.0),
    ];
    Ok((doc, ok, fields))
}

fn reproduce_section4(r: usize) -> Result<(Value, bool, Vec<(&'static str, f64)>), CliError> {
    let (tilde, g) = (RadialModel::section4_tilde(), RadialModel::section4());
    let spec = GraphSpec::Model(g.clone());
    let (mut doc, outcome) = comparison_report(&spec, &tilde, &spec.root(), r)?;
    let scan = radial_scan(&g, &tilde, 1, 10_000)?;
    let series_a = RadialModel::new(Sequence::geometric((-1.0f64).exp()), Sequence::shifted_power(3.0));
    let series_b = RadialModel::new(Sequence::Const(2.0), Sequence::shifted_power(3.0));
    let verdicts: Vec<Value> = [&tilde, &series_a, &series_b]
        .iter()
        .map(|m| classify(m, DEFAULT_N_MAX, &[]).map(|c| to_value(&c.stochastically_complete.verdict)))
        .collect::<Result<_, _>>()?;
    let converge = verdicts.iter().all(|v| v["kind"] == "converges_to");
    let dom_ok = doc["dominance"]["stronger_from"] == json!(1);
    doc["closed_form_scan"] = to_value(&scan);
    doc["series"] = json!({ "tilde_stochastic_completeness": verdicts[0], "exponential_part": verdicts[1], "linear_part": verdicts[2] });
    let ok = outcome == Outcome::Ok
        && dom_ok
        && scan.holds
        && converge
        && doc.get("green_transplant").is_some()
        && doc.get("exit_transplant").is_some();
    let fields = vec![
        ("dominance.direction", 0.0),
        ("dominance.stronger_from", 0.0),
        ("closed_form_scan.holds", 0.0),
        ("green_transplant.passed", 0.0),
        ("green_transplant.laplacian_v.min_slack", 1e-12),
        ("exit_transplant.passed", 0.0),
        ("exit_transplant.laplacian.min_slack", 1e-12),
        ("series.tilde_stochastic_completeness.value", 1e-9),
        ("series.exponential_part.value", 1e-9),
        ("series.linear_part.value", 1e-9),
    ];
    Ok((doc, ok, fields))
}

#[allow(clippy::too_many_arguments)]
fn cmd_reproduce(
    ctx: &mut Ctx,
    example: Example,
    r: Option<usize>,
    golden_dir: Option<&Path>,
    update: bool,
    epsilon: Option<f64>,
    n: Option<usize>,
    auto: bool,
) -> Result<Outcome, CliError> {
    let (name, r) = match example {
        Example::Example1 => ("example1", r.unwrap_or(40)),
        Example::Example2 => ("example2", r.unwrap_or(50)),
        Example::Section4 => ("section4", r.unwrap_or(60)),
    };
    let choice = (!auto).then(|| (epsilon.unwrap_or(0.3), n.unwrap_or(2)));
    let (doc, certified, fields) = match example {
        Example::Example1 => reproduce_example1(r)?,
        Example::Example2 => reproduce_example2(r, choice)?,
        Example::Section4 => reproduce_section4(r)?,
    };
    let m = ctx.manifest(
        "reproduce",
        &[],
        json!({ "example": name, "R": r, "epsilon": choice.map(|c| c.0), "n": choice.map(|c| c.1) }),
    );
    ctx.sink.json(&format!("{name}.json"), &m, &doc)?;
    eprintln!("{name} at R = {r}: {}", if certified { "certified" } else { "NOT certified" });
    let mut outcome = if certified { Outcome::Ok } else { Outcome::Failed };
    if let Some(dir) = golden_dir {
        let path = dir.join(format!("{name}.json"));
        if update {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
            Golden::capture(name, r, &doc, &fields)?.save(&path)?;
            eprintln!("golden written to {}", path.display());
        } else {
            let golden = Golden::load(&path)?;
            if golden.radius != r {
                return Err(CliError::Usage(format!(
                    "{} was recorded at R = {}, not {r}",
                    path.display(),
                    golden.radius
                )));
            }
            let bad = golden.compare(&doc);
            for b in &bad {
                eprintln!("golden mismatch at {}: expected {}, got {:?} (tol {})", b.path, b.expected, b.actual, b.tol);
            }
            if !bad.is_empty() {
                outcome = Outcome::Failed;
            } else {
                eprintln!("golden match ({} fields)", golden.fields.len());
            }
        }
    }
    Ok(outcome)
}

fn parse_labels(items: &[String]) -> Result<Vec<Label>, CliError> {
    items
        .iter()
        .map(|s| s.parse::<Label>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

fn cmd_ends(ctx: &mut Ctx, spec_path: &Path, k: &[String], r: usize, r2: usize) -> Result<Outcome, CliError> {
    let spec = load_spec(spec_path)?;
    let k = parse_labels(k)?;
    let rep = ends(&spec, &k, r, r2)?;
    let m = ctx.manifest("ends", &[spec_path], json!({ "K": k.iter().map(|l| l.to_string()).collect::<Vec<_>>(), "R": r, "R2": r2 }));
    ctx.sink.json("ends.json", &m, &to_value(&rep))?;
    let rows: Vec<Vec<String>> = rep
        .components
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            let flag = rep.unbounded[i];
            c.iter().map(move |l| vec![i.to_string(), flag.to_string(), l.to_string()])
        })
        .collect();
    ctx.sink.csv("components.csv", &m, &["component", "unbounded", "label"], &rows)?;
    eprintln!(
        "{} components, {} unbounded{}",
        rep.components.len(),
        rep.unbounded_count,
        if rep.stable { "" } else { " (unstable between R and R2)" }
    );
    Ok(if rep.stable { Outcome::Ok } else { Outcome::Inconclusive })
}

fn cmd_evidence(ctx: &mut Ctx, spec_path: &Path, x0: Option<&str>, r_max: usize) -> Result<Outcome, CliError> {
    let spec = load_spec(spec_path)?;
    let x0 = label(&spec, x0)?;
    let rep = l1_evidence(&spec, &x0, r_max)?;
    let m = ctx.manifest("evidence", &[spec_path], json!({ "x0": x0.to_string(), "Rmax": r_max }));
    ctx.sink.json("evidence.json", &m, &to_value(&rep))?;
    let rows: Vec<Vec<String>> = rep
        .radii
        .iter()
        .zip(&rep.green_mass)
        .map(|(r, v)| vec![r.to_string(), num(*v)])
        .collect();
    ctx.sink.csv("green_mass.csv", &m, &["radius", "green_mass"], &rows)?;
    eprintln!("{} ({})", rep.growth, rep.conclusion);
    Ok(if rep.growth == Growth::Insufficient { Outcome::Inconclusive } else { Outcome::Ok })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    ctx: &mut Ctx,
    spec_path: &Path,
    start: &str,
    absorb: Option<&str>,
    r: Option<usize>,
    n: usize,
    seed: u64,
    t_max: f64,
    times: &[f64],
    samples_csv: bool,
) -> Result<Outcome, CliError> {
    let spec = load_spec(spec_path)?;
    let start_label: Label = start.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let params = json!({ "start": start, "absorb": absorb, "R": r, "n": n, "seed": seed, "t_max": t_max, "times": times });
    if !times.is_empty() {
        let r = r.ok_or_else(|| CliError::Usage("survival mode needs --R".into()))?;
        let g = spec.materialize(r)?;
        let x0 = g.find(&start_label).ok_or_else(|| CliError::Usage(format!("{start} is not in B_{r}")))?;
        let curve = survival_curve(&g, x0, r, times, n, seed)?;
        let m = ctx.manifest("simulate", &[spec_path], params);
        let rows: Vec<Vec<String>> = curve
            .iter()
            .map(|s| vec![num(s.t), num(s.estimate), num(s.standard_error)])
            .collect();
        ctx.sink.csv("survival.csv", &m, &["t", "estimate", "standard_error"], &rows)?;
        return Ok(Outcome::Ok);
    }
    let absorb = absorb.ok_or_else(|| CliError::Usage("give --absorb or --times".into()))?;
    let (g, absorbing) = if let Some(rad) = absorb.strip_prefix('S').and_then(|s| s.parse::<usize>().ok()) {
        let g = spec.materialize(rad)?;
        let root = g.find(&spec.root()).expect("root is materialized");
        let dec = g.sphere_decompose(root)?;
        let sphere = if rad <= dec.max_radius() { dec.sphere(rad).to_vec() } else { Vec::new() };
        (g, sphere)
    } else {
        let r = r.ok_or_else(|| CliError::Usage("an explicit absorbing set needs --R".into()))?;
        let g = spec.materialize(r)?;
        let labels = parse_labels(&absorb.split(',').map(str::to_string).collect::<Vec<_>>())?;
        let ids = labels
            .iter()
            .map(|l| g.find(l).ok_or_else(|| CliError::Usage(format!("{l} is not in B_{r}"))))
            .collect::<Result<Vec<_>, _>>()?;
        (g, ids)
    };
    let x0 = g.find(&start_label).ok_or_else(|| CliError::Usage(format!("{start} is not in the ball")))?;
    let cfg = WalkConfig {
        start: x0,
        absorbing,
        t_max,
        n_samples: n,
        seed,
    };
    let samples = exit_samples(&g, &cfg)?;
    let stats = WalkStats::from_samples(&samples);
    let m = ctx.manifest("simulate", &[spec_path], params);
    ctx.sink.json("simulate.json", &m, &to_value(&stats))?;
    if samples_csv {
        let rows: Vec<Vec<String>> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| vec![i.to_string(), num(s.time), s.absorbed.to_string()])
            .collect();
        ctx.sink.csv("samples.csv", &m, &["sample", "time", "absorbed"], &rows)?;
    }
    eprintln!(
        "mean exit {} ± {} ({} censored)",
        num(stats.mean),
        num(stats.standard_error),
        stats.count_censored
    );
    Ok(if stats.censored_fraction() >= MAX_CENSORED_FRACTION {
        Outcome::Inconclusive
    } else {
        Outcome::Ok
    })
}

fn run(args: Vec<String>) -> Result<Outcome, CliError> {
    let cli = match Cli::try_parse_from(std::iter::once("liouville-lab".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            e.print().ok();
            if code == 0 {
                return Ok(Outcome::Ok);
            }
            return Err(CliError::Usage(String::new()));
        }
    };
    let mut ctx = Ctx {
        args: strip_out(args),
        sink: Sink::new(cli.out.clone())?,
    };
    match &cli.cmd {
        Cmd::Classify { spec, n_max, certificates } => cmd_classify(&mut ctx, spec, *n_max, certificates.as_deref()),
        Cmd::Green { spec, x0, r, solver } => cmd_table(&mut ctx, "green", spec, x0.as_deref(), *r, *solver),
        Cmd::Exit { spec, x0, r, solver } => cmd_table(&mut ctx, "exit", spec, x0.as_deref(), *r, *solver),
        Cmd::Compare { g, model, r, x0 } => cmd_compare(&mut ctx, g, model, *r, x0.as_deref()),
        Cmd::Reproduce {
            example,
            r,
            golden,
            update_golden,
            epsilon,
            n,
            auto,
        } => cmd_reproduce(&mut ctx, *example, *r, golden.as_deref(), *update_golden, *epsilon, *n, *auto),
        Cmd::Ends { spec, k, r, r2 } => cmd_ends(&mut ctx, spec, k, *r, *r2),
        Cmd::Evidence { spec, x0, r_max } => cmd_evidence(&mut ctx, spec, x0.as_deref(), *r_max),
        Cmd::Simulate {
            spec,
            start,
            absorb,
            r,
            n,
            seed,
            t_max,
            times,
            samples_csv,
        } => cmd_simulate(
            &mut ctx,
            spec,
            start,
            absorb.as_deref(),
            *r,
            *n,
            *seed,
            *t_max,
            times,
            *samples_csv,
        ),
        Cmd::Replay { file } => {
            let m = RunManifest::read_from(file)?;
            let mut args = m.args;
            if let Some(out) = &cli.out {
                args.push("--out".into());
                args.push(out.display().to_string());
            }
            run(args)
        }
    }
}

/// Drops `--out DIR` (or `--out=DIR`): manifests record what was computed, not where it went.
fn strip_out(args: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a);
        }
    }
    out
}

fn main() -> ExitCode {
    match run(std::env::args().skip(1).collect()) {
        Ok(o) => ExitCode::from(o.code()),
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.code())
        }
    }
}
