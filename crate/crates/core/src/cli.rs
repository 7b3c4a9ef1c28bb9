//! Command-line front end.
//!
//! Exit codes: 0 success or positive verdict, 1 negative verdict, 2 usage or
//! configuration error, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config;
use crate::dynamics::{self, Trajectory};
use crate::error::{Error, Result};
use crate::expr::{Expr, ParseContext};
use crate::field::{shift_normal_form, Form, VectorField};
use crate::grid::{Signal, TimeGrid};
use crate::helmholtz::{self, HelmholtzReport, Verdict};
use crate::reconstruct::{self, Provenance};
use crate::sampling::{sample_box, PhasePoint, SampleSpec};
use crate::solve::SolveOptions;
use crate::system::{self, BuiltinParams, SystemDef};

#[derive(Debug, Parser)]
#[command(
    name = "dhelm",
    version,
    about = "Helmholtz conditions and variational integrators for discrete Hamiltonian systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide the discrete Helmholtz conditions on sampled phase points.
    Check(CheckArgs),
    /// Rebuild a Hamiltonian by the homotopy formula and verify it.
    Reconstruct(ReconstructArgs),
    /// Integrate a trajectory and write it as CSV.
    Integrate(IntegrateArgs),
    /// Evaluate the discrete action along a trajectory and test criticality.
    Action(ActionArgs),
    /// Transform a (Δ, Δ) system to its (Δ, ∇) normal form.
    NormalForm(NormalFormArgs),
    /// Reproduce the verdicts of a built-in example family.
    Demo(DemoArgs),
}

fn parse_grid(s: &str) -> std::result::Result<TimeGrid, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected a,b,N".into());
    }
    let a: f64 = parts[0].parse().map_err(|_| format!("bad a `{}`", parts[0]))?;
    let b: f64 = parts[1].parse().map_err(|_| format!("bad b `{}`", parts[1]))?;
    let n: usize = parts[2].parse().map_err(|_| format!("bad N `{}`", parts[2]))?;
    TimeGrid::new(a, b, n).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// `builtin:NAME` or a path to a system file.
    pub system: String,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Potential for `builtin:newton`, e.g. "Q1^4".
    #[arg(long = "U")]
    pub potential: Option<String>,
    /// Dimension for `builtin:newton` (default: inferred from U).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub form: Option<Form>,
    /// Time step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Grid `a,b,N`; fixes the step to (b-a)/N.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<TimeGrid>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// Number of quasi-random sample points.
    #[arg(long, default_value_t = 128)]
    pub samples: usize,
    /// Half-width r of the sample box [-r, r]^{2d}.
    #[arg(long = "box", default_value_t = 2.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub q0: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p0: Vec<f64>,
    /// Number of steps N on the grid [0, N h].
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub sampling: SampleArgs,
    #[arg(long, default_value_t = helmholtz::DEFAULT_TOL)]
    pub tol: f64,
    /// JSON report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub sampling: SampleArgs,
    #[arg(long, default_value_t = reconstruct::DEFAULT_QUAD_ORDER)]
    pub quad_order: usize,
    /// Tolerance on the gradient residuals.
    #[arg(long, default_value_t = reconstruct::VERIFY_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
    /// Fixed-point tolerance of the implicit momentum update.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// CSV path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ActionArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
    /// Largest accepted first variation along a unit direction.
    #[arg(long, default_value_t = 1e-11)]
    pub tol: f64,
    #[arg(long, default_value_t = 16)]
    pub directions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report criticality of the trajectory with interior positions
    /// perturbed by a random amount of this size.
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Quadrature order used when the Hamiltonian has to be reconstructed.
    #[arg(long, default_value_t = reconstruct::DEFAULT_QUAD_ORDER)]
    pub quad_order: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NormalFormArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub sampling: SampleArgs,
    #[arg(long, default_value_t = helmholtz::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    /// linear | newton | friction | modified-oscillator | all
    pub name: String,
    #[command(flatten)]
    pub sampling: SampleArgs,
    #[arg(long, default_value_t = helmholtz::DEFAULT_TOL)]
    pub tol: f64,
    /// JSON report path; the table is always printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

pub fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Check(a) => cmd_check(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Action(a) => cmd_action(a),
        Command::NormalForm(a) => cmd_normal_form(a),
        Command::Demo(a) => cmd_demo(a),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(format!("--{name} must be positive and finite, got {v}")))
    }
}

fn same_step(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Resolves the system argument to a loaded system.
pub fn load_system(a: &SystemArgs) -> Result<SystemDef> {
    if let Some(h) = a.h {
        positive("h", h)?;
    }
    if let (Some(h), Some(g)) = (a.h, a.grid) {
        if !same_step(h, g.h()) {
            return Err(invalid(format!("--h {h} disagrees with the grid step {}", g.h())));
        }
    }
    if let Some(name) = a.system.strip_prefix("builtin:") {
        let params = BuiltinParams {
            alpha: a.alpha,
            beta: a.beta,
            gamma: a.gamma,
            delta: a.delta,
            m: a.m,
            potential: a.potential.clone(),
            dim: a.dim,
            form: a.form.unwrap_or(Form::DeltaNabla),
            h: a.h.or(a.grid.map(|g| g.h())).unwrap_or(0.1),
        };
        let mut sys = system::builtin(name, &params)?;
        sys.grid = a.grid;
        return Ok(sys);
    }
    let builtin_only = [
        ("alpha", a.alpha.is_some()),
        ("beta", a.beta.is_some()),
        ("gamma", a.gamma.is_some()),
        ("delta", a.delta.is_some()),
        ("m", a.m.is_some()),
        ("U", a.potential.is_some()),
        ("dim", a.dim.is_some()),
        ("form", a.form.is_some()),
    ];
    if let Some((flag, _)) = builtin_only.iter().find(|(_, set)| *set) {
        return Err(invalid(format!("--{flag} only applies to builtin systems")));
    }
    let mut sys = config::load(Path::new(&a.system))?;
    let h = sys.field.h();
    if let Some(fh) = a.h {
        if !same_step(fh, h) {
            return Err(invalid(format!("--h {fh} disagrees with the system step {h}")));
        }
    }
    if let Some(g) = a.grid {
        if !same_step(g.h(), h) {
            return Err(invalid(format!(
                "grid step {} disagrees with the system step {h}",
                g.h()
            )));
        }
        sys.grid = Some(g);
    }
    Ok(sys)
}

/// The (Δ, ∇) field of a system: itself, or its shift normal form.
pub fn canonical_field(sys: &SystemDef) -> Result<(Arc<dyn VectorField>, bool)> {
    match sys.field.form() {
        Form::DeltaNabla => Ok((Arc::new(sys.field.clone()), false)),
        Form::DeltaDelta => Ok((Arc::new(shift_normal_form(&sys.field)?), true)),
    }
}

fn samples(d: usize, a: &SampleArgs) -> Result<(SampleSpec, Vec<PhasePoint>)> {
    if a.samples == 0 {
        return Err(invalid("--samples must be at least 1"));
    }
    positive("box", a.radius)?;
    let spec = SampleSpec {
        count: a.samples,
        radius: a.radius,
        seed: a.seed,
    };
    Ok((spec, sample_box(d, spec)))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    match out {
        Some(path) if path != Path::new("-") => std::fs::write(path, text + "\n")?,
        _ => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct CheckOutput {
    #[serde(flatten)]
    pub report: HelmholtzReport,
    pub normal_form: bool,
    pub sampling: SampleSpec,
}

pub fn cmd_check(a: &CheckArgs) -> Result<i32> {
    if !(a.tol.is_finite() && a.tol >= 0.0) {
        return Err(invalid("--tol must be non-negative"));
    }
    let sys = load_system(&a.system)?;
    let (field, normal_form) = canonical_field(&sys)?;
    let (spec, pts) = samples(field.dim(), &a.sampling)?;
    let report = helmholtz::check(field.as_ref(), &pts, a.tol)?;
    eprintln!(
        "{}: {} (max ch1 {:.3e}, ch2q {:.3e}, ch2p {:.3e}, {} skipped)",
        report.system,
        report.verdict.as_str(),
        report.max_ch1,
        report.max_ch2q,
        report.max_ch2p,
        report.skipped.len()
    );
    let code = if report.is_hamiltonian() { 0 } else { 1 };
    write_json(
        &CheckOutput {
            report,
            normal_form,
            sampling: spec,
        },
        a.out.as_deref(),
    )?;
    Ok(code)
}

#[derive(Debug, Serialize)]
pub struct ReconstructPoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(rename = "H")]
    pub h: f64,
}

#[derive(Debug, Serialize)]
pub struct VerifySummary {
    pub max_residual_q: f64,
    pub max_residual_p: f64,
    pub tolerance: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ReconstructOutput {
    pub system: String,
    pub quad_order: usize,
    pub normal_form: bool,
    pub sampling: SampleSpec,
    pub points: Vec<ReconstructPoint>,
    pub verify: VerifySummary,
    /// `max |H_rec - (H - H(0))|` against the system's own closed form.
    pub closed_form_max_diff: Option<f64>,
}

pub fn cmd_reconstruct(a: &ReconstructArgs) -> Result<i32> {
    positive("tol", a.tol)?;
    let sys = load_system(&a.system)?;
    let (field, normal_form) = canonical_field(&sys)?;
    let (spec, pts) = samples(field.dim(), &a.sampling)?;
    let ham = reconstruct::reconstruct(field.clone(), a.quad_order)?;
    let report = reconstruct::verify_generates(field.as_ref(), &ham, &pts, reconstruct::DEFAULT_FD_STEP)?;
    let pass = report.failures.is_empty() && report.max_residual_q <= a.tol && report.max_residual_p <= a.tol;
    let closed_form_max_diff = match (&sys.hamiltonian, normal_form) {
        (Some(exact), false) => {
            let d = field.dim();
            let zero = vec![0.0; d];
            let offset = exact.eval(&zero, &zero)?;
            let mut worst: f64 = 0.0;
            for r in &report.samples {
                worst = worst.max((r.h - (exact.eval(&r.q, &r.p)? - offset)).abs());
            }
            Some(worst)
        }
        _ => None,
    };
    eprintln!(
        "{}: reconstruction {} (max residual q {:.3e}, p {:.3e})",
        field.name(),
        if pass {
            "generates the field"
        } else {
            "does not generate the field"
        },
        report.max_residual_q,
        report.max_residual_p
    );
    let out = ReconstructOutput {
        system: field.name().to_string(),
        quad_order: a.quad_order,
        normal_form,
        sampling: spec,
        points: report
            .samples
            .iter()
            .map(|r| ReconstructPoint {
                q: r.q.clone(),
                p: r.p.clone(),
                h: r.h,
            })
            .collect(),
        verify: VerifySummary {
            max_residual_q: report.max_residual_q,
            max_residual_p: report.max_residual_p,
            tolerance: a.tol,
            failures: report.failures,
            pass,
        },
        closed_form_max_diff,
    };
    write_json(&out, a.out.as_deref())?;
    Ok(if pass { 0 } else { 1 })
}

fn initial_state(sys: &SystemDef, t: &TrajectoryArgs) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = sys.field.dim();
    let fill = |v: &[f64], name: &str| -> Result<Vec<f64>> {
        match v.len() {
            0 => Ok(vec![0.0; d]),
            1 if d > 1 => Ok(vec![v[0]; d]),
            n if n == d => Ok(v.to_vec()),
            n => Err(invalid(format!("--{name} has {n} components, system has dim {d}"))),
        }
    };
    let q0 = fill(&t.q0, "q0")?;
    let p0 = fill(&t.p0, "p0")?;
    if q0.iter().chain(&p0).any(|v| !v.is_finite()) {
        return Err(invalid("initial condition must be finite"));
    }
    Ok((q0, p0))
}

fn trajectory_grid(sys: &SystemDef, t: &TrajectoryArgs) -> Result<TimeGrid> {
    let h = sys.field.h();
    match (t.steps, sys.grid) {
        (Some(n), None) => TimeGrid::from_step(h, n).map_err(|e| invalid(e.to_string())),
        (Some(n), Some(g)) if n == g.n_steps() => Ok(g),
        (Some(n), Some(g)) => Err(invalid(format!(
            "--steps {n} disagrees with the grid's {} steps",
            g.n_steps()
        ))),
        (None, Some(g)) => Ok(g),
        (None, None) => Err(invalid("need --steps or --grid")),
    }
}

pub fn cmd_integrate(a: &IntegrateArgs) -> Result<i32> {
    positive("tol", a.tol)?;
    let sys = load_system(&a.system)?;
    let (q0, p0) = initial_state(&sys, &a.trajectory)?;
    let grid = trajectory_grid(&sys, &a.trajectory)?;
    let traj = match sys.field.form() {
        Form::DeltaNabla => dynamics::integrate_delta_nabla_with(
            &sys.field,
            &q0,
            &p0,
            grid,
            SolveOptions {
                tol: a.tol,
                ..SolveOptions::default()
            },
        )?,
        Form::DeltaDelta => dynamics::integrate_delta_delta(&sys.field, &q0, &p0, grid)?,
    };
    let traj = match &sys.hamiltonian {
        Some(ham) => traj.with_energy(ham)?,
        None => traj,
    };
    write_trajectory(&traj, a.out.as_deref())?;
    let worst = traj.diagnostics.iter().fold(0.0f64, |m, s| m.max(s.residual));
    eprintln!(
        "{}: {} steps of the {} scheme, max step residual {:.3e}",
        sys.name(),
        grid.n_steps(),
        sys.field.form(),
        worst
    );
    Ok(0)
}

fn write_trajectory(traj: &Trajectory, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) if path != Path::new("-") => traj.write_csv(std::fs::File::create(path)?),
        _ => traj.write_csv(std::io::stdout().lock()),
    }
}

#[derive(Debug, Serialize)]
pub struct PerturbedSummary {
    pub size: f64,
    pub criticality: f64,
}

#[derive(Debug, Serialize)]
pub struct ActionOutput {
    pub system: String,
    pub normal_form: bool,
    pub hamiltonian: Provenance,
    pub steps: usize,
    pub h: f64,
    pub action: f64,
    pub criticality: f64,
    pub directions: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub critical: bool,
    pub perturbed: Option<PerturbedSummary>,
}

pub fn cmd_action(a: &ActionArgs) -> Result<i32> {
    positive("tol", a.tol)?;
    if a.directions == 0 {
        return Err(invalid("--directions must be at least 1"));
    }
    let sys = load_system(&a.system)?;
    let (q0, p0) = initial_state(&sys, &a.trajectory)?;
    let grid = trajectory_grid(&sys, &a.trajectory)?;
    let (field, normal_form) = canonical_field(&sys)?;
    let ham = match (&sys.hamiltonian, normal_form) {
        (Some(h), false) => h.clone(),
        _ => reconstruct::reconstruct(field.clone(), a.quad_order)?,
    };
    // in normal-form variables the second coordinate is Z_0 = P_1
    let z0 = if normal_form {
        let (_, xp) = sys.field.eval(&q0, &p0)?;
        p0.iter().zip(&xp).map(|(p, x)| p + grid.h() * x).collect()
    } else {
        p0
    };
    let traj = dynamics::integrate_delta_nabla(field.as_ref(), &q0, &z0, grid)?;
    let value = dynamics::action(&ham, &traj.q, &traj.p)?;
    let criticality = dynamics::action_criticality(&ham, &traj.q, &traj.p, a.directions, a.seed)?;
    let perturbed = match a.perturb {
        Some(size) => {
            positive("perturb", size)?;
            let q = perturb_interior(&traj.q, size, a.seed)?;
            Some(PerturbedSummary {
                size,
                criticality: dynamics::action_criticality(&ham, &q, &traj.p, a.directions, a.seed)?,
            })
        }
        None => None,
    };
    let critical = criticality <= a.tol;
    eprintln!(
        "{}: action {:.12e}, first variation {:.3e} ({})",
        field.name(),
        value,
        criticality,
        if critical { "critical" } else { "not critical" }
    );
    write_json(
        &ActionOutput {
            system: field.name().to_string(),
            normal_form,
            hamiltonian: ham.provenance(),
            steps: grid.n_steps(),
            h: grid.h(),
            action: value,
            criticality,
            directions: a.directions,
            seed: a.seed,
            tolerance: a.tol,
            critical,
            perturbed,
        },
        a.out.as_deref(),
    )?;
    Ok(if critical { 0 } else { 1 })
}

fn perturb_interior(q: &Signal, size: f64, seed: u64) -> Result<Signal> {
    let n = q.grid().n_steps();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    q.map(q.dim(), |k, v| {
        if k == 0 || k == n {
            v.to_vec()
        } else {
            v.iter().map(|x| x + size * rng.gen_range(-1.0..1.0)).collect()
        }
    })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Serialize)]
pub struct JacobianJson {
    pub dxq_dq: Vec<Vec<f64>>,
    pub dxq_dz: Vec<Vec<f64>>,
    pub dxp_dq: Vec<Vec<f64>>,
    pub dxp_dz: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct NormalFormPoint {
    pub q: Vec<f64>,
    pub z: Vec<f64>,
    /// Momentum `P = Z - h X̃_P` recovered by the shift.
    pub p: Vec<f64>,
    pub xq: Vec<f64>,
    pub xp: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct NormalFormOutput {
    pub system: String,
    pub h: f64,
    pub jacobian_at_origin: JacobianJson,
    pub points: Vec<NormalFormPoint>,
    pub sampling: SampleSpec,
    pub verdict: Verdict,
    pub max_ch1: f64,
    pub max_ch2q: f64,
    pub max_ch2p: f64,
}

pub fn cmd_normal_form(a: &NormalFormArgs) -> Result<i32> {
    let sys = load_system(&a.system)?;
    let shifted = shift_normal_form(&sys.field)?;
    let d = shifted.dim();
    let (spec, pts) = samples(d, &a.sampling)?;
    let zero = vec![0.0; d];
    let j = shifted.jacobian(&zero, &zero)?;
    let mut points = Vec::with_capacity(pts.len());
    for pt in &pts {
        let (w, p) = shifted.solve_momentum(&pt.q, &pt.p)?;
        let (xq, _) = shifted.eval(&pt.q, &pt.p)?;
        points.push(NormalFormPoint {
            q: pt.q.clone(),
            z: pt.p.clone(),
            p,
            xq,
            xp: w,
        });
    }
    let report = helmholtz::check(&shifted, &pts, a.tol)?;
    eprintln!("{}: {}", shifted.name(), report.verdict.as_str());
    write_json(
        &NormalFormOutput {
            system: shifted.name().to_string(),
            h: sys.field.h(),
            jacobian_at_origin: JacobianJson {
                dxq_dq: rows(&j.dxq_dq),
                dxq_dz: rows(&j.dxq_dp),
                dxp_dq: rows(&j.dxp_dq),
                dxp_dz: rows(&j.dxp_dp),
            },
            points,
            sampling: spec,
            verdict: report.verdict,
            max_ch1: report.max_ch1,
            max_ch2q: report.max_ch2q,
            max_ch2p: report.max_ch2p,
        },
        a.out.as_deref(),
    )?;
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoRow {
    pub family: String,
    pub case: String,
    pub form: Form,
    pub expected: Verdict,
    pub verdict: Verdict,
    pub max_ch1: f64,
    pub max_ch2q: f64,
    pub max_ch2p: f64,
    /// Closed-form value of `max_ch1` over the samples, when one is known.
    pub expected_ch1: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct DemoOutput {
    pub demo: String,
    pub h: f64,
    pub tolerance: f64,
    pub sampling: SampleSpec,
    pub rows: Vec<DemoRow>,
    pub pass: bool,
}

pub const DEMOS: [&str; 4] = ["linear", "newton", "friction", "modified-oscillator"];

const DEMO_H: f64 = 0.1;

type ExpectedResidual = Box<dyn Fn(&[PhasePoint]) -> Result<f64>>;

struct DemoCase {
    case: String,
    sys: SystemDef,
    expected: Verdict,
    expected_ch1: Option<ExpectedResidual>,
}

fn verdict_if(b: bool) -> Verdict {
    if b {
        Verdict::Hamiltonian
    } else {
        Verdict::NotHamiltonian
    }
}

fn demo_cases(name: &str, tol: f64) -> Result<Vec<DemoCase>> {
    let h = DEMO_H;
    let mut cases = Vec::new();
    match name {
        "linear" => {
            let params: [(f64, f64, f64, f64); 4] = [
                (1.0, 1.0, -1.0, -1.0),
                (0.5, 2.0, -0.3, -0.5),
                (1.0, 1.0, -1.0, 1.0),
                (0.2, -1.0, 0.7, 0.0),
            ];
            for (al, be, ga, de) in params {
                let expected = verdict_if((al + de).abs() <= tol);
                cases.push(DemoCase {
                    case: format!("alpha={al} beta={be} gamma={ga} delta={de}"),
                    sys: system::linear(al, be, ga, de, Form::DeltaNabla, h)?,
                    expected,
                    expected_ch1: Some(Box::new(move |_| Ok((al + de).abs()))),
                });
            }
        }
        "newton" => {
            let m = 1.0;
            for u in ["Q1^2/2", "Q1^4", "sin(Q1)", "3*Q1"] {
                cases.push(DemoCase {
                    case: format!("U={u} m={m}"),
                    sys: system::newton(m, u, 1, Form::DeltaNabla, h)?,
                    expected: Verdict::Hamiltonian,
                    expected_ch1: Some(Box::new(|_| Ok(0.0))),
                });
                let consts = std::collections::BTreeMap::new();
                let u2 = Expr::parse(u, &ParseContext::phase(1, &consts))?.diff(0).diff(0);
                let linear = u2.is_constant()
                    && u2.eval(&[0.0, 0.0]).map_err(|d| Error::Domain {
                        component: "U''".into(),
                        detail: d,
                    })? == 0.0;
                cases.push(DemoCase {
                    case: format!("U={u} m={m}"),
                    sys: system::newton(m, u, 1, Form::DeltaDelta, h)?,
                    expected: verdict_if(linear),
                    expected_ch1: Some(Box::new(move |pts| {
                        let mut worst: f64 = 0.0;
                        for pt in pts {
                            let v = u2.eval(&[pt.q[0], pt.p[0]]).map_err(|d| Error::Domain {
                                component: "U''".into(),
                                detail: d,
                            })?;
                            worst = worst.max(h * v.abs() / m);
                        }
                        Ok(worst)
                    })),
                });
            }
        }
        "friction" => {
            let m = 1.0;
            for g in [0.0, 0.05, 0.1, 0.15, 0.3] {
                cases.push(DemoCase {
                    case: format!("gamma={g} m={m}"),
                    sys: system::friction(g, m, Form::DeltaNabla, h)?,
                    expected: verdict_if(g == 0.0),
                    expected_ch1: Some(Box::new(move |_| Ok(f64::abs(g)))),
                });
                cases.push(DemoCase {
                    case: format!("gamma={g} m={m}"),
                    sys: system::friction(g, m, Form::DeltaDelta, h)?,
                    expected: verdict_if((g - h / m).abs() <= tol),
                    expected_ch1: Some(Box::new(move |_| Ok((h / m - g).abs() / (1.0 - h * g)))),
                });
            }
        }
        "modified-oscillator" => {
            cases.push(DemoCase {
                case: "P2 coupling".into(),
                sys: system::modified_oscillator(Form::DeltaNabla, h)?,
                expected: Verdict::NotHamiltonian,
                expected_ch1: Some(Box::new(|_| Ok(0.0))),
            });
        }
        other => {
            return Err(invalid(format!(
                "unknown demo `{other}` (expected one of {}, or all)",
                DEMOS.join(", ")
            )))
        }
    }
    Ok(cases)
}

/// Runs one demo family and compares each verdict with the expected one.
pub fn run_demo(name: &str, sampling: &SampleArgs, tol: f64) -> Result<Vec<DemoRow>> {
    let cases = demo_cases(name, tol)?;
    let mut out = Vec::with_capacity(cases.len());
    for c in cases {
        let (field, _) = canonical_field(&c.sys)?;
        let (_, pts) = samples(field.dim(), sampling)?;
        let report = helmholtz::check(field.as_ref(), &pts, tol)?;
        let used: Vec<PhasePoint> = report
            .samples
            .iter()
            .map(|r| PhasePoint::new(r.q.clone(), r.p.clone()))
            .collect();
        let expected_ch1 = match &c.expected_ch1 {
            Some(f) => Some(f(&used)?),
            None => None,
        };
        let ch1_ok = expected_ch1.is_none_or(|e| (report.max_ch1 - e).abs() <= 1e-6 * e.max(1e-3));
        out.push(DemoRow {
            family: name.to_string(),
            case: c.case,
            form: c.sys.field.form(),
            expected: c.expected,
            verdict: report.verdict,
            max_ch1: report.max_ch1,
            max_ch2q: report.max_ch2q,
            max_ch2p: report.max_ch2p,
            expected_ch1,
            pass: report.verdict == c.expected && ch1_ok,
        });
    }
    Ok(out)
}

pub fn format_table(rows: &[DemoRow]) -> String {
    let mut s = format!(
        "{:<20} {:<34} {:<12} {:<16} {:<16} {:>11} {:>11} {:>11}  {}\n",
        "family", "case", "form", "expected", "verdict", "max_ch1", "max_ch2q", "max_ch2p", "result"
    );
    for r in rows {
        s += &format!(
            "{:<20} {:<34} {:<12} {:<16} {:<16} {:>11.4e} {:>11.4e} {:>11.4e}  {}\n",
            r.family,
            r.case,
            r.form.as_str(),
            r.expected.as_str(),
            r.verdict.as_str(),
            r.max_ch1,
            r.max_ch2q,
            r.max_ch2p,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    s
}

pub fn cmd_demo(a: &DemoArgs) -> Result<i32> {
    if !(a.tol.is_finite() && a.tol >= 0.0) {
        return Err(invalid("--tol must be non-negative"));
    }
    let names: Vec<&str> = if a.name == "all" {
        DEMOS.to_vec()
    } else {
        vec![a.name.as_str()]
    };
    let mut all = Vec::new();
    for name in names {
        all.extend(run_demo(name, &a.sampling, a.tol)?);
    }
    print!("{}", format_table(&all));
    let pass = all.iter().all(|r| r.pass);
    if let Some(out) = &a.out {
        write_json(
            &DemoOutput {
                demo: a.name.clone(),
                h: DEMO_H,
                tolerance: a.tol,
                sampling: SampleSpec {
                    count: a.sampling.samples,
                    radius: a.sampling.radius,
                    seed: a.sampling.seed,
                },
                rows: all,
                pass,
            },
            Some(out),
        )?;
    }
    Ok(if pass { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("dhelm").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn negative_flag_values_parse() {
        let cli = parse(&[
            "check",
            "builtin:linear",
            "--alpha",
            "1",
            "--delta",
            "-1",
            "--grid",
            "-1,1,10",
        ]);
        let Command::Check(a) = cli.command else { panic!() };
        assert_eq!(a.system.delta, Some(-1.0));
        assert_eq!(a.system.grid.unwrap().h(), 0.2);
        let sys = load_system(&a.system).unwrap();
        assert_eq!(sys.field.h(), 0.2);
    }

    #[test]
    fn conflicting_steps_are_rejected() {
        let cli = parse(&["check", "builtin:harmonic", "--h", "0.1", "--grid", "0,1,20"]);
        let Command::Check(a) = cli.command else { panic!() };
        assert!(matches!(load_system(&a.system), Err(Error::Config(_))));
    }

    #[test]
    fn every_demo_reproduces_its_verdicts() {
        let sampling = SampleArgs {
            samples: 32,
            radius: 2.0,
            seed: 0,
        };
        for name in DEMOS {
            let rows = run_demo(name, &sampling, helmholtz::DEFAULT_TOL).unwrap();
            assert!(rows.iter().all(|r| r.pass), "{}", format_table(&rows));
        }
    }
}
