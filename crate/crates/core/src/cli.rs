//! The `dilation` command-line front end.
//!
//! Every verb prints a text report on stdout and, with `--output DIR`, writes
//! `DIR/report.json` plus any matrices it produced. Exit codes: 0 success or
//! feasible, 1 error, 2 certified infeasible or failed check, 3 indeterminate.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dilation::{arveson_pure, frazho_bunce, verify_arveson, verify_coextension, DilationResult};
use crate::error::{Error, Result};
use crate::fock::{creation_row, multiplier_row, TruncatedFock};
use crate::io::{read_matrix, read_row_operator, write_matrix, PickFile};
use crate::lifting::{
    arveson_lifting, min_norm_lifting, ConstraintKind, LiftingProblem, LiftingSide, LiftingSolution, SolveStatus,
    SolverOptions, Verdict,
};
use crate::linalg::{spectral_norm, CMatrix, C64};
use crate::operator::{
    counterexample_obstruction, counterexample_operators, von_neumann_check, RowOperator,
};
use crate::pick::{model_x, pick_matrix, psd_test, solve_np, NpOutcome, PickSystem};
use crate::sampling;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "dilation", version, about = "Dilations, commutant lifting and Pick interpolation on truncated Fock spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dimensions and operator norms of the truncated Fock spaces.
    Fock(FockArgs),
    /// Build a dilation of a row contraction and check its contracts.
    Dilate(DilateArgs),
    /// Minimal-norm commutant lifting through a dilation.
    Lift(LiftArgs),
    /// Nevanlinna-Pick feasibility and multiplier recovery.
    Np(NpArgs),
    /// The commuting row contraction without a norm-preserving commuting lifting.
    Counterexample(CounterexampleArgs),
    /// Von Neumann inequality against the truncated shift models.
    VnCheck(VnArgs),
    /// Quick end-to-end checks of every module.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutputArgs {
    /// Directory for report.json and matrix files.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FockArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DilationMode {
    /// Minimal isometric co-extension on ℋ ⊕ F_n ⊗ 𝒟.
    FrazhoBunce,
    /// Pure commuting dilation on H²_n ⊗ 𝒟.
    Arveson,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RowSource {
    /// Row operator file; a random instance from --seed when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of operators in a random row.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Dimension of a random row.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Row norm of a random row.
    #[arg(long, default_value_t = 0.9)]
    pub row_norm: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DilateArgs {
    #[command(flatten)]
    pub source: RowSource,
    #[arg(long, value_enum, default_value_t = DilationMode::Arveson)]
    pub mode: DilationMode,
    #[arg(long, default_value_t = 6)]
    pub d: usize,
    /// Tolerance for contractivity and the defect rank.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LiftArgs {
    #[command(flatten)]
    pub source: RowSource,
    /// Matrix file for X; a random polynomial in T when absent.
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DilationMode::Arveson)]
    pub mode: DilationMode,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// Gap between certified bounds at which the solve stops.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Feasible when a lifting of norm at most ‖X‖ + slack is found.
    #[arg(long, default_value_t = 1e-3)]
    pub slack: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct NpArgs {
    /// Pick system file; a random system from --seed when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Number of nodes of a random system.
    #[arg(long, default_value_t = 3)]
    pub nodes: usize,
    /// ‖X‖ of a random system.
    #[arg(long, default_value_t = 0.9)]
    pub scale: f64,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Largest accepted interpolation residual at a node.
    #[arg(long, default_value_t = 1e-5)]
    pub residual_tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 12)]
    pub d: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Also report the obstruction margin on a grid of ε decreasing to 0.
    #[arg(long)]
    pub sweep: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VnMode {
    /// Commuting rows against the Drury-Arveson shift.
    Commuting,
    /// Arbitrary rows against the left creation operators.
    Free,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VnArgs {
    /// Row operator file; random rows from --seed when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = VnMode::Commuting)]
    pub mode: VnMode,
    #[arg(long, default_value_t = 6)]
    pub d: usize,
    /// Maximal polynomial degree.
    #[arg(long, default_value_t = 3)]
    pub deg: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

/// Result of one invocation.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
    pub report: Value,
}

struct Report {
    text: String,
    results: serde_json::Map<String, Value>,
    matrices: Vec<(String, CMatrix)>,
}

impl Report {
    fn new() -> Self {
        Report { text: String::new(), results: serde_json::Map::new(), matrices: Vec::new() }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn field(&mut self, key: &str, value: impl Serialize + std::fmt::Debug) {
        let v = serde_json::to_value(&value).unwrap_or(Value::Null);
        let shown = match &v {
            Value::Number(_) | Value::Bool(_) => v.to_string(),
            Value::String(s) => s.clone(),
            _ => format!("{value:?}"),
        };
        let _ = writeln!(self.text, "{key}: {shown}");
        self.results.insert(key.to_string(), v);
    }

    fn value(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn matrix(&mut self, name: &str, m: &CMatrix) {
        self.matrices.push((name.to_string(), m.clone()));
    }
}

/// Parse `args` (program name first) and run the verb.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli.command),
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
            Outcome { code, text: e.to_string(), report: Value::Null }
        }
    }
}

pub fn execute(command: &Command) -> Outcome {
    let (name, config, out) = match command {
        Command::Fock(a) => ("fock", serde_json::to_value(a), &a.out),
        Command::Dilate(a) => ("dilate", serde_json::to_value(a), &a.out),
        Command::Lift(a) => ("lift", serde_json::to_value(a), &a.out),
        Command::Np(a) => ("np", serde_json::to_value(a), &a.out),
        Command::Counterexample(a) => ("counterexample", serde_json::to_value(a), &a.out),
        Command::VnCheck(a) => ("vn-check", serde_json::to_value(a), &a.out),
        Command::Selftest(a) => ("selftest", serde_json::to_value(a), &a.out),
    };
    let config = config.unwrap_or(Value::Null);
    let mut rep = Report::new();
    let _ = writeln!(rep.text, "# dilation {name}");
    let result = match command {
        Command::Fock(a) => cmd_fock(a, &mut rep),
        Command::Dilate(a) => cmd_dilate(a, &mut rep),
        Command::Lift(a) => cmd_lift(a, &mut rep),
        Command::Np(a) => cmd_np(a, &mut rep),
        Command::Counterexample(a) => cmd_counterexample(a, &mut rep),
        Command::VnCheck(a) => cmd_vn(a, &mut rep),
        Command::Selftest(a) => cmd_selftest(a, &mut rep),
    };
    let (code, error) = match result {
        Ok(code) => (code, None),
        Err(e) => {
            rep.line(format!("error: {e}"));
            (EXIT_ERROR, Some(e.to_string()))
        }
    };
    let report = json!({
        "command": name,
        "config": config,
        "results": Value::Object(rep.results),
        "exit_code": code,
        "error": error,
    });
    let mut text = rep.text;
    if let Some(dir) = &out.output {
        if let Err(e) = write_outputs(dir, &report, &rep.matrices) {
            let _ = writeln!(text, "error: writing {}: {e}", dir.display());
            return Outcome { code: EXIT_ERROR, text, report };
        }
    }
    Outcome { code, text, report }
}

fn write_outputs(dir: &Path, report: &Value, matrices: &[(String, CMatrix)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    for (name, m) in matrices {
        write_matrix(m, &dir.join(format!("{name}.json")))?;
    }
    Ok(())
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Feasible => EXIT_OK,
        Verdict::Infeasible => EXIT_INFEASIBLE,
        Verdict::Indeterminate => EXIT_INDETERMINATE,
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Feasible => "feasible",
        Verdict::Infeasible => "infeasible",
        Verdict::Indeterminate => "indeterminate",
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("--{name} must be positive, got {x}")))
    }
}

fn cmd_fock(a: &FockArgs, rep: &mut Report) -> Result<i32> {
    let f = TruncatedFock::new(a.n, a.d)?;
    rep.field("n_full", f.n_full());
    rep.field("n_sym", f.n_sym());
    let top = f.multi_degree_range(a.d);
    let samples: Vec<(Vec<usize>, u64)> = top
        .clone()
        .take(8)
        .map(|pos| (f.multi_index(pos).0.clone(), f.count_at(pos)))
        .collect();
    rep.line(format!("|P_k| at degree {} (first {} of {}):", a.d, samples.len(), top.len()));
    for (k, c) in &samples {
        rep.line(format!("  k = {k:?}: {c}"));
    }
    rep.value("word_counts", &samples);
    const DENSE_LIMIT: usize = 1500;
    let m_norm = (f.n_sym() <= DENSE_LIMIT).then(|| multiplier_row(&f).row_norm());
    let l_norm = (f.n_full() <= DENSE_LIMIT).then(|| creation_row(&f).row_norm());
    rep.field("row_norm_m", m_norm);
    rep.field("row_norm_l", l_norm);
    Ok(EXIT_OK)
}

fn load_row(src: &RowSource, commuting: bool) -> Result<RowOperator> {
    match &src.input {
        Some(p) => read_row_operator(p),
        None => {
            if src.n == 0 || src.m == 0 {
                return Err(Error::InvalidParameter("--n and --m must be positive".into()));
            }
            check_positive("row-norm", src.row_norm)?;
            let mut rng = sampling::rng(src.seed);
            Ok(if commuting {
                sampling::commuting_row(&mut rng, src.n, src.m, src.row_norm)
            } else {
                sampling::free_row(&mut rng, src.n, src.m, src.row_norm)
            })
        }
    }
}

fn build_dilation(t: &RowOperator, mode: DilationMode, d: usize, tol: f64) -> Result<DilationResult> {
    t.check_contraction(tol)?;
    match mode {
        DilationMode::FrazhoBunce => frazho_bunce(t, d, tol),
        DilationMode::Arveson => arveson_pure(t, d, tol),
    }
}

fn cmd_dilate(a: &DilateArgs, rep: &mut Report) -> Result<i32> {
    let t = load_row(&a.source, a.mode == DilationMode::Arveson)?;
    rep.field("row_norm", t.row_norm());
    if a.mode == DilationMode::Arveson {
        let (ok, res) = t.is_commuting(1e-8);
        rep.field("commutator_residual", res);
        if !ok {
            return Err(Error::NotCommuting { residual: res });
        }
    }
    let dil = build_dilation(&t, a.mode, a.d, a.tol)?;
    rep.field("kind", dil.kind);
    rep.field("dim", dil.dim());
    rep.field("multiplicity", dil.multiplicity);
    rep.field("trunc_degree", dil.trunc_degree);
    match a.mode {
        DilationMode::FrazhoBunce => {
            let r = verify_coextension(&t, &dil)?;
            rep.line("contract residuals:");
            for (k, v) in [
                ("isometry_residual", r.isometry_residual),
                ("orthogonality_residual", r.orthogonality_residual),
                ("co_extension_residual", r.co_extension_residual),
                ("word_residual", r.word_residual),
            ] {
                rep.line(format!("  {k}: {v:e}"));
            }
            rep.line(format!("  span_rank: {} of {}", r.span_rank, r.dim));
            rep.value("residuals", &r);
        }
        DilationMode::Arveson => {
            let r = verify_arveson(&t, &dil)?;
            rep.line("contract residuals:");
            for (k, v) in [
                ("truncation_identity", r.truncation_identity),
                ("intertwining", r.intertwining),
                ("top_degree_spill", r.top_degree_spill),
                ("co_invariance", r.co_invariance),
                ("isometry_defect", r.isometry_defect),
            ] {
                rep.line(format!("  {k}: {v:e}"));
            }
            rep.value("residuals", &r);
            rep.field("purity_tail", dil.purity_tail);
        }
    }
    for w in &dil.warnings {
        rep.line(format!("warning: {w}"));
    }
    rep.value("warnings", &dil.warnings);
    for (i, b) in dil.v.blocks().iter().enumerate() {
        rep.matrix(&format!("V_{i}"), b);
    }
    rep.matrix("embed", &dil.embed);
    if let Some(w) = &dil.generator_map {
        rep.matrix("W", w);
    }
    Ok(EXIT_OK)
}

fn solver_opts(tol: f64, target: Option<f64>, max_iter: usize) -> Result<SolverOptions> {
    check_positive("tol", tol)?;
    Ok(SolverOptions { tol, target, max_iter, ..Default::default() })
}

fn report_solution(rep: &mut Report, sol: &LiftingSolution) {
    rep.field("status", sol.status);
    rep.field("iterations", sol.iterations);
    rep.field("norm_x", sol.norm_x);
    rep.field("achieved_norm", sol.achieved_norm);
    rep.field("lower_bound", sol.lower_bound);
    rep.line(format!("commutation_residual: {:e}", sol.residuals.commutation));
    rep.line(format!("dilation_residual: {:e}", sol.residuals.dilation));
    rep.value("residuals", &sol.residuals);
}

fn cmd_lift(a: &LiftArgs, rep: &mut Report) -> Result<i32> {
    check_positive("slack", a.slack)?;
    let t = load_row(&a.source, true)?;
    let x = match &a.x {
        Some(p) => read_matrix(p)?,
        None => {
            let mut rng = sampling::rng(a.source.seed.wrapping_add(1));
            let p = sampling::polynomial(&mut rng, t.n(), 2, true);
            t.poly_eval(&p, 1e-8)?
        }
    };
    let norm_x = spectral_norm(&x);
    let opts = solver_opts(a.tol, Some(norm_x + a.slack), a.max_iter)?;
    let sol = match a.mode {
        DilationMode::Arveson => {
            t.check_contraction(1e-10)?;
            let (dil, _, sol) = arveson_lifting(&t, &x, a.d, 1e-8, &opts)?;
            rep.field("dim", dil.dim());
            sol
        }
        DilationMode::FrazhoBunce => {
            let dil = build_dilation(&t, a.mode, a.d, 1e-10)?;
            rep.field("dim", dil.dim());
            let problem = LiftingProblem::commutant(LiftingSide::from_dilation(&dil), x, ConstraintKind::CoExtension)?
                .with_originals(t.clone(), t.clone());
            problem.check_hypothesis(1e-8)?;
            min_norm_lifting(&problem, &opts)?
        }
    };
    report_solution(rep, &sol);
    let verdict = sol.status.verdict();
    rep.value("verdict", verdict_name(verdict));
    rep.line(format!(
        "verdict: {} (‖Z‖ = {:.9}, ‖X‖ = {:.9}, lower bound {:.9})",
        verdict_name(verdict),
        sol.achieved_norm,
        sol.norm_x,
        sol.lower_bound
    ));
    rep.matrix("Z", &sol.z);
    Ok(verdict_code(verdict))
}

fn cmd_np(a: &NpArgs, rep: &mut Report) -> Result<i32> {
    let sys = match &a.input {
        Some(p) => PickFile::read(p)?.to_system()?,
        None => {
            if a.n == 0 || a.nodes == 0 {
                return Err(Error::InvalidParameter("--n and --nodes must be positive".into()));
            }
            check_positive("scale", a.scale)?;
            let mut rng = sampling::rng(a.seed);
            let nodes: Vec<Vec<C64>> = (0..a.nodes).map(|_| sampling::ball_point(&mut rng, a.n, 0.9)).collect();
            let w: Vec<C64> = (0..a.nodes).map(|_| sampling::complex_normal(&mut rng)).collect();
            let raw = PickSystem::scalar(nodes, &w)?;
            let norm = model_x(&raw).norm;
            if norm > 0.0 {
                raw.scaled(C64::new(a.scale / norm, 0.0))
            } else {
                raw
            }
        }
    };
    let test = psd_test(&pick_matrix(&sys));
    rep.field("nodes", sys.len());
    rep.field("pick_min_eigenvalue", test.min_eigenvalue);
    rep.field("pick_psd", test.psd);
    rep.field("norm_x", model_x(&sys).norm);
    check_positive("residual-tol", a.residual_tol)?;
    let opts = solver_opts(a.tol, None, 20_000)?;
    match solve_np(&sys, a.d, &opts)? {
        NpOutcome::Infeasible { min_eigenvalue, .. } => {
            rep.field("verdict", "infeasible");
            rep.line(format!("certificate: Pick matrix eigenvalue {min_eigenvalue:e} < 0"));
            Ok(EXIT_INFEASIBLE)
        }
        NpOutcome::Solved(sol) => {
            rep.field("achieved_norm", sol.achieved_norm);
            rep.field("lower_bound", sol.lower_bound);
            rep.field("status", sol.status);
            rep.field("max_node_residual", sol.max_residual());
            let coeffs: Vec<Value> = sol
                .coefficients
                .iter()
                .map(|(k, c)| json!({ "k": k.0, "coefficient": crate::io::MatrixFile::from_matrix(c) }))
                .collect();
            rep.value("coefficients", coeffs);
            rep.value("node_residuals", &sol.node_residuals);
            rep.line("coefficients with modulus above 1e-8:");
            for (k, c) in &sol.coefficients {
                if c.norm() > 1e-8 {
                    if c.len() == 1 {
                        rep.line(format!("  {:?}: {:.10} {:+.10}i", k.0, c[(0, 0)].re, c[(0, 0)].im));
                    } else {
                        rep.line(format!("  {:?}: norm {:.10}", k.0, c.norm()));
                    }
                }
            }
            let settled = sol.max_residual() <= a.residual_tol;
            let verdict = if settled { "feasible" } else { "indeterminate" };
            rep.field("verdict", verdict);
            Ok(if settled { EXIT_OK } else { EXIT_INDETERMINATE })
        }
    }
}

/// Lifting problem for the counterexample: the Arveson dilation of `B`, with
/// `ℋ = span{e_2, e_3}` embedded through `polar(W ι)`, and `X` pinned on it.
pub fn counterexample_problem(r: f64, eps: f64, d: usize) -> Result<LiftingProblem> {
    let cx = counterexample_operators(r, eps)?;
    if !cx.contractive {
        return Err(Error::NotAContraction { norm: cx.row_norm_b, tol: 0.0 });
    }
    let dil = arveson_pure(&cx.b, d, 1e-10)?;
    let side = LiftingSide::arveson_compressed(&dil, &cx.embed)?;
    LiftingProblem::commutant(side, cx.x.clone(), ConstraintKind::Compression)
}

fn cmd_counterexample(a: &CounterexampleArgs, rep: &mut Report) -> Result<i32> {
    let cx = counterexample_operators(a.r, a.eps)?;
    rep.field("commutator_residual_t", cx.t.commutator_residual());
    rep.field("commutator_residual_b", cx.b.commutator_residual());
    rep.field("row_norm_b", cx.row_norm_b);
    rep.field("contractive", cx.contractive);
    let x_commutes = cx.t.blocks().iter().map(|ti| spectral_norm(&(ti * &cx.x - &cx.x * ti))).fold(0.0, f64::max);
    rep.field("x_commutator_residual", x_commutes);
    let obs = counterexample_obstruction(a.r, a.eps)?;
    rep.line(format!(
        "obstruction: y ↦ {:.6}(y − 1) and y ↦ {:.6}(y + 1) vanish at {} and {}",
        obs.a, obs.b, obs.zero_a, obs.zero_b
    ));
    rep.field("algebraic_margin", obs.minimax);
    rep.value("obstruction", &obs);
    let problem = counterexample_problem(a.r, a.eps, a.d)?;
    let opts = solver_opts(a.tol, Some(1.0), 20_000)?;
    let sol = min_norm_lifting(&problem, &opts)?;
    report_solution(rep, &sol);
    let solver_margin = sol.lower_bound - 1.0;
    rep.field("solver_margin", solver_margin);
    let certified = sol.status == SolveStatus::InfeasibleAtTarget && solver_margin > 10.0 * a.tol;
    let agree = (obs.minimax > 0.0) == (solver_margin > 0.0);
    rep.field("solver_certified", certified);
    rep.field("margins_agree", agree);
    if a.sweep {
        let grid = [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001];
        let mut rows = Vec::new();
        rep.line("sweep (eps, algebraic margin):");
        for &e in grid.iter().filter(|&&e| e != a.r) {
            let o = counterexample_obstruction(a.r, e)?;
            rep.line(format!("  {e:<8} {:.6e}", o.minimax));
            rows.push(json!({ "eps": e, "algebraic_margin": o.minimax }));
        }
        rep.value("sweep", rows);
    }
    let verdict = sol.status.verdict();
    rep.field("verdict", verdict_name(verdict));
    rep.matrix("Z", &sol.z);
    Ok(verdict_code(verdict))
}

fn cmd_vn(a: &VnArgs, rep: &mut Report) -> Result<i32> {
    if a.trials == 0 {
        return Err(Error::InvalidParameter("--trials must be positive".into()));
    }
    let commuting = a.mode == VnMode::Commuting;
    let fixed = match &a.input {
        Some(p) => Some(read_row_operator(p)?),
        None => None,
    };
    let mut rng = sampling::rng(a.seed);
    let mut rows = Vec::new();
    let mut all_pass = true;
    let mut monotone = true;
    rep.line("trial  lhs            rhs(d)         rhs(d+1)       pass");
    for trial in 0..a.trials {
        let t = match &fixed {
            Some(t) => t.clone(),
            None => {
                let norm = 0.2 + 0.79 * rand::Rng::gen::<f64>(&mut rng);
                if commuting {
                    sampling::commuting_row(&mut rng, a.n, a.m, norm)
                } else {
                    sampling::free_row(&mut rng, a.n, a.m, norm)
                }
            }
        };
        let p = sampling::polynomial(&mut rng, t.n(), a.deg, commuting);
        let r = von_neumann_check(&t, &p, a.d, a.tol)?;
        all_pass &= r.pass;
        monotone &= r.rhs_next >= r.rhs - 1e-12 * r.rhs.max(1.0);
        rep.line(format!("{trial:<6} {:<14.8e} {:<14.8e} {:<14.8e} {}", r.lhs, r.rhs, r.rhs_next, r.pass));
        rows.push(r);
    }
    rep.value("trials", &rows);
    rep.field("all_pass", all_pass);
    rep.field("rhs_monotone", monotone);
    Ok(if all_pass && monotone { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn cmd_selftest(a: &SelftestArgs, rep: &mut Report) -> Result<i32> {
    let mut checks: Vec<(String, bool)> = Vec::new();
    let mut check = |name: &str, ok: Result<bool>| {
        let ok = matches!(ok, Ok(true));
        checks.push((name.to_string(), ok));
    };
    check("fock dimensions", (|| {
        let f = TruncatedFock::new(2, 3)?;
        Ok(f.n_full() == 15 && f.n_sym() == 10)
    })());
    let mut rng = sampling::rng(a.seed);
    let t = sampling::commuting_row(&mut rng, 2, 2, 0.8);
    check("co-extension contracts", (|| {
        let dil = frazho_bunce(&t, 3, 1e-10)?;
        let r = verify_coextension(&t, &dil)?;
        Ok(r.isometry_residual < 1e-10 && r.co_extension_residual < 1e-10 && r.word_residual < 1e-10)
    })());
    check("arveson truncation identity", (|| {
        let dil = arveson_pure(&t, 4, 1e-10)?;
        Ok(verify_arveson(&t, &dil)?.truncation_identity < 1e-10)
    })());
    check("commutant lifting", (|| {
        let x = t.block(0) + t.block(1) * C64::new(0.5, 0.25);
        let nx = spectral_norm(&x);
        let opts = SolverOptions { target: Some(nx + 1e-3), ..Default::default() };
        let (_, _, sol) = arveson_lifting(&t, &x, 4, 1e-8, &opts)?;
        Ok(sol.achieved_norm <= nx + 1e-3 && sol.residuals.commutation < 1e-6)
    })());
    check("counterexample obstruction", (|| Ok(counterexample_obstruction(0.5, 0.1)?.minimax > 0.0))());
    check("pick identity multiplier", (|| {
        let sys = PickSystem::scalar(
            vec![vec![C64::new(0.0, 0.0)], vec![C64::new(0.5, 0.0)]],
            &[C64::new(0.0, 0.0), C64::new(0.5, 0.0)],
        )?;
        Ok((model_x(&sys).norm - 1.0).abs() < 1e-10 && psd_test(&pick_matrix(&sys)).psd)
    })());
    check("von neumann inequality", (|| {
        let mut ok = true;
        for _ in 0..5 {
            let p = sampling::polynomial(&mut rng, 2, 3, true);
            ok &= von_neumann_check(&t, &p, 6, 1e-10)?.pass;
        }
        Ok(ok)
    })());
    let mut all = true;
    for (name, ok) in &checks {
        all &= ok;
        rep.line(format!("{} {name}", if *ok { "PASS" } else { "FAIL" }));
    }
    rep.value("checks", checks.iter().map(|(n, ok)| json!({ "name": n, "pass": ok })).collect::<Vec<_>>());
    rep.field("all_pass", all);
    Ok(if all { EXIT_OK } else { EXIT_ERROR })
}
