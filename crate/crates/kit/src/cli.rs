//! Argument grammar and subcommand dispatch.
//!
//! Exit codes: 0 on success, 2 on a usage or input error, 1 when a
//! numerical operation fails. Angles are radians everywhere.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use balayage_core::balayage::{growth_verdict_swept, sweep_ray_system, GenusChoice, PreCheck, SweepMethod, SweepPlan};
use balayage_core::crg::{crg_check_ray, crg_check_ray_system, CrgConfig, CrgVerdict, CriterionTrace};
use balayage_core::growth::{
    akhiezer_class_verdict, blaschke_functional, boundedness_detector, integral_estimate_check, lindelof_functional,
    ConditionTrace, LogModulusOracle, Monotonicity, Verdict,
};
use balayage_core::kernels::{
    hadamard_kernel, harmonic_charge_angle, harmonic_charge_interval, harmonic_charge_slitplane,
    harmonic_measure_interval, poisson_kernel, AngleSpec, Side,
};
use balayage_core::measures::{estimate_order_type, GrowthClass, GrowthVerdict, RadialProfile, RaySystem};
use balayage_core::quadrature::QuadSpec;
use balayage_core::Complex64;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::exec::RayonExecutor;
use crate::io::{self, IoError, SCHEMA};

#[derive(Debug, Error)]
pub enum KitError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid {flag}: {message}")]
    Usage { flag: &'static str, message: String },
    #[error("{op} failed: {message}")]
    Numeric { op: &'static str, message: String },
    #[error("cannot write output: {0}")]
    Output(String),
}

impl KitError {
    pub fn exit_code(&self) -> i32 {
        match self {
            KitError::Numeric { .. } => 1,
            KitError::Output(_) => 1,
            KitError::Io(_) | KitError::Usage { .. } => 2,
        }
    }
}

fn numeric<E: Display>(op: &'static str) -> impl FnOnce(E) -> KitError {
    move |e| KitError::Numeric { op, message: e.to_string() }
}

fn usage(flag: &'static str, message: impl Into<String>) -> KitError {
    KitError::Usage { flag, message: message.into() }
}

fn output<E: Display>(e: E) -> KitError {
    KitError::Output(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

/// `min:max:points[:log|lin]`; spacing defaults to log, or linear when `min = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected min:max:points[:log|lin], got {s:?}"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("{t:?} is not a number"));
        let min = num(parts[0])?;
        let max = num(parts[1])?;
        let points: usize = parts[2].trim().parse().map_err(|_| format!("{:?} is not a point count", parts[2]))?;
        let spacing = match parts.get(3).map(|t| t.trim()) {
            None if min > 0.0 => Spacing::Log,
            None => Spacing::Linear,
            Some("log") => Spacing::Log,
            Some("lin") | Some("linear") => Spacing::Linear,
            Some(other) => return Err(format!("unknown spacing {other:?}")),
        };
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(format!("need finite min < max, got {min}:{max}"));
        }
        if points < 2 {
            return Err("need at least 2 points".into());
        }
        if spacing == Spacing::Log && min <= 0.0 {
            return Err("log spacing needs min > 0".into());
        }
        Ok(Self { min, max, points, spacing })
    }
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let u = i as f64 / n;
                match (i, self.spacing) {
                    (0, _) => self.min,
                    (i, _) if i + 1 == self.points => self.max,
                    (_, Spacing::Log) => self.min * (self.max / self.min).powf(u),
                    (_, Spacing::Linear) => self.min + (self.max - self.min) * u,
                }
            })
            .collect()
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("{a:?} is not a number"))?;
    let b = b.trim().parse().map_err(|_| format!("{b:?} is not a number"))?;
    Ok((a, b))
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    parse_pair(s).map(|(re, im)| Complex64::new(re, im))
}

fn parse_genus(s: &str) -> Result<GenusChoice, String> {
    match s {
        "auto" => Ok(GenusChoice::Auto),
        _ => s.parse().map(GenusChoice::Fixed).map_err(|_| format!("expected auto or an integer, got {s:?}")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "balayage-kit", version, about = "Genus-q balayage, growth conditions and the CRG criterion")]
pub struct Cli {
    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    pub quad_abs_tol: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    pub quad_rel_tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a closed-form kernel.
    Kernel(KernelArgs),
    /// Sweep a charge onto a ray system and sample the result.
    Sweep(SweepArgs),
    /// Growth-condition traces with a boundedness verdict.
    Condition(ConditionArgs),
    /// Completely-regular-growth check along rays.
    Crg(CrgArgs),
    /// Order and type of a charge or of its half-plane sweep.
    Estimate(EstimateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    /// Harmonic measure of an interval.
    Omega,
    /// Genus-q Poisson kernel at one or more t.
    Poisson,
    /// Genus-q harmonic charge of an interval.
    Charge,
    /// Genus-q harmonic charge of [0, x] in the slit plane.
    Slit,
    /// Genus-q harmonic charge of a segment on a side ray of an angle.
    Angle,
    /// Weierstrass-Hadamard kernel.
    Hadamard,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub kind: KernelKind,
    #[arg(long, default_value_t = 0)]
    pub genus: u32,
    /// Point `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub z: Complex64,
    /// Comma-separated abscissae for `poisson`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Vec<f64>,
    /// Interval `t1,t2` (radial `s1,s2` for `angle`).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub interval: Option<(f64, f64)>,
    /// Right end of `[0, x]` for `slit`.
    #[arg(long)]
    pub x: Option<f64>,
    /// Second point `re,im` for `hadamard`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub zeta: Option<Complex64>,
    /// Angle `alpha,beta` for `angle`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub angle: Option<(f64, f64)>,
    /// Side ray for `angle`.
    #[arg(long, value_enum, default_value = "alpha")]
    pub side: SideArg,
    /// Digits after the decimal point.
    #[arg(long, default_value_t = 10)]
    pub digits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Alpha,
    Beta,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Charge file (JSON or CSV).
    #[arg(long)]
    pub input: PathBuf,
    /// Rays file `{"angles": [...]}`; the real axis when omitted.
    #[arg(long)]
    pub rays: Option<PathBuf>,
    #[arg(long)]
    pub order: f64,
    /// Inner radius; defaults to the charge's inner gap, else 1.
    #[arg(long)]
    pub r0: Option<f64>,
    /// `auto` or a fixed genus.
    #[arg(long, value_parser = parse_genus, default_value = "auto")]
    pub genus: GenusChoice,
    /// Sample points `min:max:points[:log|lin]` in t >= 0.
    #[arg(long)]
    pub grid: GridSpec,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Plan JSON destination; stderr when omitted.
    #[arg(long)]
    pub plan_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionKind {
    Blaschke,
    Lindelof,
    Akhiezer,
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleForm {
    /// `sum m log|z - a|`.
    Plain,
    /// Weierstrass primary factors of genus `floor(order)`.
    Canonical,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    #[arg(long, value_enum)]
    pub kind: ConditionKind,
    /// Charge or zero file (JSON or CSV); multiplicities default to 1.
    #[arg(long)]
    pub charge: PathBuf,
    /// Angle `alpha,beta`; the upper half-plane when omitted.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub angle: Option<(f64, f64)>,
    #[arg(long)]
    pub order: f64,
    /// Radii `min:max:points[:log|lin]`.
    #[arg(long)]
    pub grid: GridSpec,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    /// Log-modulus oracle for `akhiezer` and `estimate`.
    #[arg(long, value_enum, default_value = "canonical")]
    pub form: OracleForm,
    /// Weight `g(t) = t^s` for `estimate`; increasing for s >= 0.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub g_power: f64,
    /// Enlargement parameter in (0, 1/4] for `estimate`.
    #[arg(long, default_value_t = 0.25)]
    pub b: f64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrgArgs {
    /// Zero sequence (JSON or CSV); multiplicities default to 1.
    #[arg(long)]
    pub zeros: PathBuf,
    #[arg(long)]
    pub order: f64,
    /// Rays file; the positive axis alone when omitted.
    #[arg(long)]
    pub rays: Option<PathBuf>,
    #[arg(long)]
    pub xmin: f64,
    #[arg(long)]
    pub xmax: f64,
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    /// Comma-separated truncation radii.
    #[arg(long, value_delimiter = ',')]
    pub truncation_study: Vec<f64>,
    /// Jitter seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Inner radius of the ray-system sweep.
    #[arg(long, default_value_t = 0.5)]
    pub r0: f64,
    /// Genus of the ray-system sweep.
    #[arg(long, value_parser = parse_genus, default_value = "auto")]
    pub genus: GenusChoice,
    /// Drop the tail correction and its error bar.
    #[arg(long)]
    pub no_tail: bool,
    /// CSV destination for (x, phi, tail_bar); not written when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Charge or zero file (JSON or CSV); multiplicities default to 1.
    #[arg(long)]
    pub charge: PathBuf,
    /// Radii `min:max:points[:log|lin]`.
    #[arg(long)]
    pub grid: GridSpec,
    #[arg(long)]
    pub order: Option<f64>,
    /// Estimate the genus-q half-plane sweep instead of the charge itself.
    #[arg(long)]
    pub sweep_genus: Option<u32>,
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn quad_spec(cli: &Cli, base: QuadSpec) -> Result<QuadSpec, KitError> {
    let mut spec = base;
    if let Some(a) = cli.quad_abs_tol {
        spec.abs_tol = a;
    }
    if let Some(r) = cli.quad_rel_tol {
        spec.rel_tol = r;
    }
    if !(spec.abs_tol > 0.0 && spec.rel_tol >= 0.0) {
        return Err(usage("--quad-abs-tol/--quad-rel-tol", "need abs > 0 and rel >= 0"));
    }
    Ok(spec)
}

pub fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), KitError> {
    match &cli.command {
        Command::Kernel(a) => kernel(a, stdout),
        Command::Sweep(a) => sweep(a, &quad_spec(cli, QuadSpec::default())?, stdout, stderr),
        Command::Condition(a) => condition(a, &quad_spec(cli, QuadSpec::with_tol(1e-8, 1e-8))?, stdout),
        Command::Crg(a) => crg(a, &quad_spec(cli, CrgConfig::new(1.0, 2.0, 2).quad)?, stdout),
        Command::Estimate(a) => estimate(a, &quad_spec(cli, QuadSpec::default())?, stdout),
    }
}

fn need<T: Copy>(v: Option<T>, flag: &'static str, kind: &str) -> Result<T, KitError> {
    v.ok_or_else(|| usage(flag, format!("required for --kind {kind}")))
}

fn kernel(a: &KernelArgs, out: &mut dyn Write) -> Result<(), KitError> {
    let q = a.genus;
    let values: Vec<f64> = match a.kind {
        KernelKind::Omega => {
            let (t1, t2) = need(a.interval, "--interval", "omega")?;
            vec![harmonic_measure_interval(a.z, t1, t2).map_err(numeric("harmonic_measure_interval"))?]
        }
        KernelKind::Poisson => {
            if a.t.is_empty() {
                return Err(usage("--t", "required for --kind poisson"));
            }
            a.t.iter()
                .map(|&t| poisson_kernel(q, t, a.z))
                .collect::<Result<_, _>>()
                .map_err(numeric("poisson_kernel"))?
        }
        KernelKind::Charge => {
            let (t1, t2) = need(a.interval, "--interval", "charge")?;
            vec![harmonic_charge_interval(q, a.z, t1, t2).map_err(numeric("harmonic_charge_interval"))?]
        }
        KernelKind::Slit => {
            let x = need(a.x, "--x", "slit")?;
            vec![harmonic_charge_slitplane(q, a.z, x).map_err(numeric("harmonic_charge_slitplane"))?]
        }
        KernelKind::Angle => {
            let (alpha, beta) = need(a.angle, "--angle", "angle")?;
            let (s1, s2) = need(a.interval, "--interval", "angle")?;
            let angle = AngleSpec::new(alpha, beta).map_err(|e| usage("--angle", e.to_string()))?;
            let side = match a.side {
                SideArg::Alpha => Side::Alpha,
                SideArg::Beta => Side::Beta,
            };
            vec![harmonic_charge_angle(q, a.z, side, s1, s2, &angle).map_err(numeric("harmonic_charge_angle"))?]
        }
        KernelKind::Hadamard => {
            let zeta = need(a.zeta, "--zeta", "hadamard")?;
            vec![hadamard_kernel(q, zeta, a.z).map_err(numeric("hadamard_kernel"))?]
        }
    };
    let line: Vec<String> = values.iter().map(|v| format!("{:.*}", a.digits, v)).collect();
    writeln!(out, "{}", line.join(",")).map_err(output)
}

fn open_output<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, KitError> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(io::create(p)?)),
        None => Box::new(stdout),
    })
}

fn pre_check_name(p: PreCheck) -> &'static str {
    match p {
        PreCheck::NotNeeded => "not_needed",
        PreCheck::InsufficientGrid => "insufficient_grid",
        PreCheck::Ran(Verdict::Bounded) => "bounded",
        PreCheck::Ran(Verdict::Unbounded) => "unbounded",
        PreCheck::Ran(Verdict::Inconclusive) => "inconclusive",
    }
}

fn plan_json(plan: &SweepPlan) -> serde_json::Value {
    let angles: Vec<_> = plan
        .angles
        .iter()
        .map(|a| {
            json!({
                "alpha": a.alpha,
                "beta": a.beta,
                "genus": a.genus,
                "method": match a.method {
                    SweepMethod::ClassicalGenus0 => "classical_genus0",
                    SweepMethod::GenusQ => "genus_q",
                },
                "pre_check": pre_check_name(a.pre_check),
            })
        })
        .collect();
    json!({ "schema": SCHEMA, "order": plan.order, "r0": plan.r0, "angles": angles })
}

fn sweep(a: &SweepArgs, spec: &QuadSpec, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), KitError> {
    let charge = io::read_charge(&a.input)?;
    let rays = match &a.rays {
        Some(p) => io::read_rays(p)?,
        None => RaySystem::new(vec![0.0, std::f64::consts::PI]).map_err(numeric("ray system"))?,
    };
    if a.grid.min < 0.0 {
        return Err(usage("--grid", "ray parameters must be >= 0"));
    }
    let r0 = a.r0.or(charge.inner_gap()).unwrap_or(1.0);
    let (swept, plan) = sweep_ray_system(&charge, &rays, a.order, r0, a.genus).map_err(numeric("sweep_ray_system"))?;
    let ray_mass: Vec<f64> = (0..swept.rays.len())
        .map(|j| swept.ray_mass_by_quadrature(j, spec).map(|r| r.value))
        .collect::<Result<_, _>>()
        .map_err(numeric("ray mass quadrature"))?;
    let rows = io::swept_rows(&swept, &a.grid.values(), &ray_mass).map_err(numeric("swept distribution"))?;
    let mut out = open_output(a.output.as_deref(), stdout)?;
    io::write_swept_csv(&mut out, &rows).map_err(output)?;
    drop(out);
    let plan = serde_json::to_string(&plan_json(&plan)).map_err(output)?;
    match &a.plan_out {
        Some(p) => {
            let mut f = io::create(p)?;
            writeln!(f, "{plan}").map_err(output)?;
        }
        None => writeln!(stderr, "{plan}").map_err(output)?,
    }
    Ok(())
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Bounded => "bounded",
        Verdict::Unbounded => "unbounded",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn trace_json(t: &ConditionTrace) -> serde_json::Value {
    json!({ "verdict": verdict_name(t.verdict), "slope": t.slope, "ratio": t.ratio })
}

fn oracle(a: &ConditionArgs, charge: &balayage_core::measures::DiscreteCharge) -> Result<LogModulusOracle, KitError> {
    Ok(match a.form {
        OracleForm::Plain => LogModulusOracle::new(charge, vec![]),
        OracleForm::Canonical => {
            LogModulusOracle::canonical(charge, a.order.floor() as u32).map_err(numeric("canonical oracle"))?
        }
    })
}

fn condition(a: &ConditionArgs, spec: &QuadSpec, stdout: &mut dyn Write) -> Result<(), KitError> {
    let charge = io::read_zero_sequence(&a.charge, 0)?;
    let (alpha, beta) = a.angle.unwrap_or((0.0, std::f64::consts::PI));
    let angle = AngleSpec::new(alpha, beta).map_err(|e| usage("--angle", e.to_string()))?;
    if a.grid.min <= a.r0 {
        return Err(usage("--grid", format!("radii must exceed --r0 = {}", a.r0)));
    }
    let grid = a.grid.values();
    let (header, rows, verdict): (Vec<&str>, Vec<Vec<f64>>, serde_json::Value) = match a.kind {
        ConditionKind::Blaschke | ConditionKind::Lindelof => {
            let values: Vec<f64> = match a.kind {
                ConditionKind::Blaschke => grid
                    .iter()
                    .map(|&r| blaschke_functional(&charge, &angle, a.order, a.r0, r))
                    .collect::<Result<_, _>>()
                    .map_err(numeric("blaschke_functional"))?,
                _ => {
                    if a.order.fract() != 0.0 || a.order < 0.0 {
                        return Err(usage("--order", "lindelof needs a non-negative integer order"));
                    }
                    grid.iter()
                        .map(|&r| lindelof_functional(&charge, a.order as u32, a.r0, r))
                        .collect::<Result<_, _>>()
                        .map_err(numeric("lindelof_functional"))?
                }
            };
            let trace = boundedness_detector(&grid, &values).map_err(numeric("boundedness_detector"))?;
            let rows = grid.iter().zip(&values).map(|(r, v)| vec![*r, *v]).collect();
            (vec!["r", "value"], rows, trace_json(&trace))
        }
        ConditionKind::Akhiezer => {
            let v = oracle(a, &charge)?;
            let out = akhiezer_class_verdict(&v, &angle, a.order, a.r0, &grid, spec)
                .map_err(numeric("akhiezer_class_verdict"))?;
            let rows = grid
                .iter()
                .zip(out.j_trace.values.iter().zip(&out.blaschke_trace.values))
                .map(|(r, (j, b))| vec![*r, *j, *b])
                .collect();
            let verdict = json!({
                "verdict": verdict_name(out.j_trace.verdict),
                "slope": out.j_trace.slope,
                "ratio": out.j_trace.ratio,
                "blaschke": trace_json(&out.blaschke_trace),
                "agree": out.agree,
            });
            (vec!["r", "j", "blaschke"], rows, verdict)
        }
        ConditionKind::Estimate => {
            let v = oracle(a, &charge)?;
            let s = a.g_power;
            let monotone = if s >= 0.0 { Monotonicity::Increasing } else { Monotonicity::Decreasing };
            let rep = integral_estimate_check(&v, |t: f64| t.powf(s), monotone, a.r0, a.b, &grid, 10.0, spec)
                .map_err(numeric("integral_estimate_check"))?;
            let rows = (0..rep.grid.len()).map(|i| vec![rep.grid[i], rep.lhs[i], rep.rhs[i], rep.ratio[i]]).collect();
            let verdict = json!({
                "verdict": if rep.bounded { "bounded" } else { "unbounded" },
                "spread": rep.spread,
            });
            (vec!["r", "lhs", "rhs", "ratio"], rows, verdict)
        }
    };
    {
        let mut out = open_output(a.output.as_deref(), stdout)?;
        io::write_table(&mut out, &header, &rows).map_err(output)?;
    }
    let mut doc = json!({ "schema": SCHEMA, "command": "condition", "kind": kind_name(a.kind) });
    if let (Some(d), serde_json::Value::Object(v)) = (doc.as_object_mut(), verdict) {
        d.extend(v);
    }
    writeln!(stdout, "{doc}").map_err(output)
}

fn kind_name(k: ConditionKind) -> &'static str {
    match k {
        ConditionKind::Blaschke => "blaschke",
        ConditionKind::Lindelof => "lindelof",
        ConditionKind::Akhiezer => "akhiezer",
        ConditionKind::Estimate => "estimate",
    }
}

fn crg_name(v: CrgVerdict) -> &'static str {
    match v {
        CrgVerdict::Crg => "CRG",
        CrgVerdict::NotCrg => "NotCRG",
        CrgVerdict::Inconclusive => "Inconclusive",
    }
}

#[derive(Serialize)]
struct RayReport {
    ray_angle: f64,
    genus: u32,
    verdict: &'static str,
    limit: f64,
    spread: f64,
    stable: bool,
    tail_dominated: usize,
    points: usize,
    truncation_radii: Vec<f64>,
}

#[derive(Serialize)]
struct CrgReport {
    schema: &'static str,
    command: &'static str,
    verdict: &'static str,
    order: f64,
    seed: u64,
    rays: Vec<RayReport>,
}

/// All rays CRG gives CRG; any not-CRG ray gives not-CRG.
fn overall(traces: &[CriterionTrace]) -> CrgVerdict {
    if traces.iter().any(|t| t.verdict == CrgVerdict::NotCrg) {
        CrgVerdict::NotCrg
    } else if traces.iter().all(|t| t.verdict == CrgVerdict::Crg) {
        CrgVerdict::Crg
    } else {
        CrgVerdict::Inconclusive
    }
}

fn crg(a: &CrgArgs, spec: &QuadSpec, stdout: &mut dyn Write) -> Result<(), KitError> {
    if !(a.order > 0.0 && a.order.is_finite()) {
        return Err(usage("--order", "must be positive"));
    }
    let zeros = io::read_zero_sequence(&a.zeros, (2.0 * a.order).floor() as u32)?;
    let mut cfg = CrgConfig::new(a.xmin, a.xmax, a.points);
    cfg.seed = a.seed;
    cfg.quad = *spec;
    cfg.tail_correction = !a.no_tail;
    cfg.truncation_radii = a.truncation_study.clone();
    let exec = RayonExecutor::from_env().map_err(numeric("thread pool"))?;
    let traces = match &a.rays {
        None => vec![crg_check_ray(&exec, &zeros, a.order, &cfg).map_err(numeric("crg_check_ray"))?],
        Some(p) => {
            let rays = io::read_rays(p)?;
            crg_check_ray_system(&exec, &zeros, a.order, &rays, a.r0, a.genus, &cfg)
                .map_err(numeric("crg_check_ray_system"))?
        }
    };
    if let Some(path) = &a.output {
        let rows: Vec<Vec<f64>> = traces
            .iter()
            .enumerate()
            .flat_map(|(j, t)| {
                (0..t.x.len()).map(move |i| vec![j as f64, t.x[i], t.phi[i], t.tail_bar[i], t.quad_error[i]])
            })
            .collect();
        let mut f = std::io::BufWriter::new(io::create(path)?);
        io::write_table(&mut f, &["ray_index", "x", "phi", "tail_bar", "quad_error"], &rows).map_err(output)?;
    }
    let report = CrgReport {
        schema: SCHEMA,
        command: "crg",
        verdict: crg_name(overall(&traces)),
        order: a.order,
        seed: a.seed,
        rays: traces
            .iter()
            .map(|t| RayReport {
                ray_angle: t.ray_angle,
                genus: t.genus,
                verdict: crg_name(t.verdict),
                limit: t.limit,
                spread: t.spread,
                stable: t.stable,
                tail_dominated: t.tail_dominated,
                points: t.x.len(),
                truncation_radii: t.truncation.iter().map(|r| r.radius).collect(),
            })
            .collect(),
    };
    writeln!(stdout, "{}", serde_json::to_string(&report).map_err(output)?).map_err(output)
}

fn class_name(c: GrowthClass) -> &'static str {
    match c {
        GrowthClass::FiniteType => "finite_type",
        GrowthClass::LogExcess => "log_excess",
        GrowthClass::ExceedsOrder => "exceeds_order",
    }
}

fn growth_json(v: &GrowthVerdict) -> serde_json::Value {
    json!({
        "fitted_order": v.fitted_order,
        "order": v.order,
        "class": v.class.map(class_name),
        "type_estimate": v.type_estimate,
        "ratio_slope": v.ratio_slope,
    })
}

fn estimate(a: &EstimateArgs, spec: &QuadSpec, stdout: &mut dyn Write) -> Result<(), KitError> {
    let charge = io::read_zero_sequence(&a.charge, a.sweep_genus.unwrap_or(0))?;
    let grid = a.grid.values();
    let doc = match a.sweep_genus {
        None => {
            let profile = RadialProfile::from_charge(&charge, &grid).map_err(numeric("radial profile"))?;
            let v = estimate_order_type(&profile, a.order).map_err(numeric("estimate_order_type"))?;
            json!({ "schema": SCHEMA, "command": "estimate", "swept": false, "growth": growth_json(&v) })
        }
        Some(q) => {
            let p = a.order.ok_or_else(|| usage("--order", "required with --sweep-genus"))?;
            let rep = growth_verdict_swept(&charge, p, q, &grid, spec).map_err(numeric("growth_verdict_swept"))?;
            json!({
                "schema": SCHEMA,
                "command": "estimate",
                "swept": true,
                "genus": q,
                "growth": growth_json(&rep.verdict),
                "blaschke": rep.blaschke.map(verdict_name),
            })
        }
    };
    writeln!(stdout, "{doc}").map_err(output)
}
