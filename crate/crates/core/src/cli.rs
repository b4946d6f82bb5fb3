//! The `vpwf` command line: `generate`, `simulate`, `analyze`, `rescale`.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 I/O or input errors, 4 flow
//! errors. `VPWF_THREADS` caps the worker pool.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::config::read_config;
use crate::ddg::GeometryCache;
use crate::diagnostics::{self, DiagnosticsRecord, RecordContext};
use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, StopCriteria, Trajectory};
use crate::functionals::{self, EnergyReport};
use crate::generate::{Perturbation, Shape};
use crate::io;
use crate::mesh::{TriMesh, Vec3};
use crate::quality::QualityConfig;
use crate::rescale::{self, RescaleSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_ARGS: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FLOW: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "vpwf", version, about = "Volume-preserving Willmore flow of closed surfaces")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated mesh as OBJ.
    Generate(GenerateArgs),
    /// Run the flow and write the trajectory, step log and snapshots.
    Simulate(SimulateArgs),
    /// Print one diagnostics row and the sphere fit of a mesh.
    Analyze(AnalyzeArgs),
    /// Parabolically rescale a trajectory, its snapshots, or extract a blow-up window.
    Rescale(RescaleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeKind {
    Icosphere,
    Ellipsoid,
    Torus,
    PerturbedSphere,
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    #[arg(long, value_enum, default_value = "icosphere")]
    pub shape: ShapeKind,
    /// Subdivision level of the icosahedron.
    #[arg(long, default_value_t = 4)]
    pub level: u32,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Ellipsoid semi-axes.
    #[arg(long, default_value_t = 1.2)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 0.85)]
    pub c: f64,
    /// Torus center-line radius.
    #[arg(long, default_value_t = 2.0)]
    pub major: f64,
    /// Torus tube radius.
    #[arg(long, default_value_t = 1.0)]
    pub minor: f64,
    #[arg(long, default_value_t = 64)]
    pub nu: usize,
    #[arg(long, default_value_t = 32)]
    pub nv: usize,
    /// Spherical-harmonic degree of the perturbation.
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub order: i32,
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
    /// Uniform radial noise amplitude.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ShapeArgs {
    pub fn shape(&self) -> Shape {
        match self.shape {
            ShapeKind::Icosphere => Shape::Icosphere {
                level: self.level,
                radius: self.radius,
            },
            ShapeKind::Ellipsoid => Shape::Ellipsoid {
                a: self.a,
                b: self.b,
                c: self.c,
                level: self.level,
            },
            ShapeKind::Torus => Shape::Torus {
                major: self.major,
                minor: self.minor,
                nu: self.nu,
                nv: self.nv,
            },
            ShapeKind::PerturbedSphere => Shape::PerturbedSphere {
                level: self.level,
                radius: self.radius,
                perturbation: Perturbation {
                    degree: self.degree,
                    order: self.order,
                    amplitude: self.amplitude,
                    noise: self.noise,
                    seed: self.seed,
                },
            },
        }
    }

    fn describe(&self) -> String {
        match self.shape {
            ShapeKind::Icosphere => format!("icosphere level={} radius={}", self.level, self.radius),
            ShapeKind::Ellipsoid => format!("ellipsoid a={} b={} c={} level={}", self.a, self.b, self.c, self.level),
            ShapeKind::Torus => format!("torus major={} minor={} nu={} nv={}", self.major, self.minor, self.nu, self.nv),
            ShapeKind::PerturbedSphere => format!(
                "perturbed-sphere level={} radius={} degree={} order={} amplitude={} noise={} seed={}",
                self.level, self.radius, self.degree, self.order, self.amplitude, self.noise, self.seed
            ),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// key = value file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Output OBJ path.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input OBJ/OFF mesh; a generated shape is used when absent.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Directory for trajectory.csv, steps.csv, snapshots/ and final.obj.
    #[arg(long, default_value = "vpwf-out")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub dt_safety: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub projection_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub dissipation_tol: f64,
    #[arg(long, default_value_t = 20)]
    pub max_halvings: usize,
    #[arg(long, default_value_t = f64::INFINITY)]
    pub max_time: f64,
    #[arg(long, default_value_t = 2_000_000)]
    pub max_steps: usize,
    /// Stop when max|ξ| drops below this (0 disables).
    #[arg(long, default_value_t = 0.25)]
    pub speed_tol: f64,
    /// Stop when W̄ drops below this (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub wbar_tol: f64,
    /// Enable the edge-flip and tangential-smoothing pass.
    #[arg(long)]
    pub quality: bool,
    /// Write report.txt without printing it.
    #[arg(long, short)]
    pub quiet: bool,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub flip_threshold: f64,
    #[arg(long, default_value_t = 0.1)]
    pub smoothing_weight: f64,
    #[arg(long, default_value_t = 100)]
    pub quality_cadence: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub min_quality: f64,
    #[arg(long, default_value_t = 1000)]
    pub record_cadence: usize,
    /// Comma-separated, strictly increasing ball radii for κ̂.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1")]
    pub kappa_radii: Vec<f64>,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Vec<f64>,
    /// Also snapshot every N steps.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

impl SimulateArgs {
    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            dt_safety: self.dt_safety,
            dt_max: self.dt_max,
            projection_tol: self.projection_tol,
            dissipation_tol: self.dissipation_tol,
            max_halvings: self.max_halvings,
            stop: StopCriteria {
                max_time: self.max_time,
                max_steps: self.max_steps,
                speed_tol: self.speed_tol,
                wbar_tol: self.wbar_tol,
            },
            quality: QualityConfig {
                enabled: self.quality,
                flip_threshold_angle: self.flip_threshold,
                tangential_smoothing_weight: self.smoothing_weight,
                cadence_steps: self.quality_cadence,
                min_quality: self.min_quality,
            },
            record_cadence: self.record_cadence,
            kappa_radii: self.kappa_radii.clone(),
            snapshot_times: self.snapshot_times.clone(),
            snapshot_every: self.snapshot_every,
            keep_step_log: true,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// OBJ or OFF mesh.
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1")]
    pub kappa_radii: Vec<f64>,
    /// Also report the concentration radius for this threshold.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Write the row as a one-line trajectory CSV.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RescaleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trajectory CSV written by `simulate`.
    pub trajectory: PathBuf,
    /// Length ratio ρ > 0.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub rho: f64,
    /// Origin x₀ as `x,y,z`.
    #[arg(long, value_delimiter = ',', default_value = "0,0,0", allow_negative_numbers = true)]
    pub origin: Vec<f64>,
    /// Step log; defaults to steps.csv next to the trajectory when present.
    #[arg(long)]
    pub steps: Option<PathBuf>,
    /// Snapshot directory; defaults to snapshots/ next to the trajectory when present.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// Output CSV for the rescaled trajectory.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Print the λ-accumulators before and after with relative deltas.
    #[arg(long)]
    pub check_invariants: bool,
    /// Extract a blow-up window starting at the first snapshot at or after this time.
    #[arg(long)]
    pub blowup_time: Option<f64>,
    /// Concentration threshold ε for the window radius.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Window constant ĉ.
    #[arg(long, default_value_t = 0.1)]
    pub c_hat: f64,
}

/// Splices `key = value` entries of the `--config` file in front of the
/// command-line flags, so that explicit flags override them.
fn expand_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, (i32, String)> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config_path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            config_path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(p.to_string());
        }
    }
    let Some(config_path) = config_path else {
        return Ok(args);
    };
    let Some(sub_pos) = strs
        .iter()
        .position(|a| ["generate", "simulate", "analyze", "rescale"].contains(&a.as_str()))
    else {
        return Ok(args);
    };
    let entries = read_config(&config_path).map_err(|e| (exit_code_for_input(&e), e.to_string()))?;
    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(&strs[sub_pos])
        .expect("known subcommand");
    let mut injected = Vec::new();
    for e in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(e.key.as_str()) && !a.is_positional());
        let positional = sub
            .get_arguments()
            .find(|a| a.is_positional() && a.get_id().as_str().replace('_', "-") == e.key);
        match (arg, positional) {
            (Some(_), _) if e.key == "config" => {
                return Err((EXIT_BAD_ARGS, format!("{config_path}:{}: config files cannot nest", e.line)));
            }
            (Some(a), _) => {
                if a.get_action().takes_values() {
                    injected.push(format!("--{}={}", e.key, e.value));
                } else {
                    match e.value.as_str() {
                        "true" | "yes" | "1" => injected.push(format!("--{}", e.key)),
                        "false" | "no" | "0" => {}
                        v => {
                            return Err((
                                EXIT_BAD_ARGS,
                                format!("{config_path}:{}: {} expects true or false, got {v:?}", e.line, e.key),
                            ))
                        }
                    }
                }
            }
            (None, Some(_)) => {
                // positional arguments given on the command line win
                let given = strs.len() > sub_pos + 1 && strs[sub_pos + 1..].iter().any(|a| !a.starts_with('-'));
                if !given {
                    injected.push(e.value.clone());
                }
            }
            (None, None) => {
                return Err((
                    EXIT_BAD_ARGS,
                    format!("{config_path}:{}: unknown key {:?} for {}", e.line, e.key, strs[sub_pos]),
                ))
            }
        }
    }
    let mut out: Vec<OsString> = args[..=sub_pos].to_vec();
    out.extend(injected.into_iter().map(OsString::from));
    out.extend(args[sub_pos + 1..].iter().cloned());
    Ok(out)
}

fn exit_code_for_input(e: &Error) -> i32 {
    match e {
        Error::BadParams(_) => EXIT_BAD_ARGS,
        _ => EXIT_IO,
    }
}

fn exit_code_for_flow(e: &Error) -> i32 {
    if e.is_flow_error() {
        EXIT_FLOW
    } else {
        exit_code_for_input(e)
    }
}

/// Applies `VPWF_THREADS` to the global worker pool.
pub fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var("VPWF_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("VPWF_THREADS must be a positive integer, got {v:?}"))?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_BAD_ARGS;
    }
    let args = match expand_config(args) {
        Ok(a) => a,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_ARGS } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Analyze(a) => analyze(&a),
        Command::Rescale(a) => rescale_cmd(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

type CmdResult = std::result::Result<(), (i32, String)>;

fn input_err(e: Error) -> (i32, String) {
    (exit_code_for_input(&e), e.to_string())
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn build_shape(shape: &ShapeArgs) -> std::result::Result<TriMesh, (i32, String)> {
    shape.shape().build().map_err(|e| match e {
        Error::BadParams(m) => (EXIT_BAD_ARGS, m),
        other => (EXIT_IO, other.to_string()),
    })
}

fn generate(a: &GenerateArgs) -> CmdResult {
    let mesh = build_shape(&a.shape)?;
    let comments = vec![format!("shape={}", a.shape.describe())];
    io::write_obj(&a.output, &mesh, &comments).map_err(input_err)?;
    let topo = mesh.validate().map_err(input_err)?;
    println!(
        "wrote {}: {} vertices, {} faces, chi = {}",
        a.output.display(),
        topo.vertex_count,
        topo.face_count,
        topo.euler_characteristic
    );
    Ok(())
}

fn print_record(rec: &DiagnosticsRecord) {
    let rows: [(&str, f64); 15] = [
        ("t", rec.t),
        ("A", rec.area),
        ("V", rec.volume),
        ("W", rec.willmore),
        ("Wbar", rec.wbar),
        ("gb_defect", rec.gauss_bonnet_defect),
        ("lambda", rec.lambda),
        ("L43", rec.accum_l43),
        ("L2A", rec.accum_l2a),
        ("diam", rec.diameter),
        ("diam_bound", rec.diameter_bound),
        ("isop_ratio", rec.isoperimetric_ratio),
        ("scale_defect", rec.scale_defect),
        ("trans_defect", rec.translation_defect),
        ("min_quality", rec.min_face_quality),
    ];
    for (k, v) in rows {
        println!("{k}: {}", io::fmt_f64(v));
    }
    for (r, v) in &rec.kappa {
        println!("{}: {}", io::kappa_column(*r), io::fmt_f64(*v));
    }
    println!("li_yau: {}", rec.li_yau);
}

fn fit_lines(mesh: &TriMesh) -> Vec<String> {
    match diagnostics::sphere_fit(mesh) {
        Ok(fit) => vec![
            format!(
                "sphere_fit_center: {} {} {}",
                io::fmt_f64(fit.center.x),
                io::fmt_f64(fit.center.y),
                io::fmt_f64(fit.center.z)
            ),
            format!("sphere_fit_radius: {}", io::fmt_f64(fit.radius)),
            format!("sphere_fit_rms: {}", io::fmt_f64(fit.rms_deviation)),
            format!("sphere_fit_max_deviation: {}", io::fmt_f64(fit.max_deviation)),
        ],
        Err(e) => vec![format!("sphere_fit: {e}")],
    }
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("step_{step:08}.obj"))
}

fn write_snapshot(dir: &Path, s: &flow::Snapshot) -> Result<PathBuf> {
    let path = snapshot_path(dir, s.step);
    io::write_obj(&path, &s.mesh, &[format!("t={}", io::fmt_f64(s.time)), format!("step={}", s.step)])?;
    Ok(path)
}

fn simulate(a: &SimulateArgs) -> CmdResult {
    let config = a.flow_config();
    config.validate().map_err(input_err)?;
    // load the input before touching the output directory
    let (mesh, source) = match &a.input {
        Some(p) => (io::read_mesh(p).map_err(input_err)?.mesh, format!("input={}", p.display())),
        None => (build_shape(&a.shape)?, format!("shape={}", a.shape.describe())),
    };
    let v0 = functionals::signed_volume(&mesh);

    ensure_dir(&a.out_dir).map_err(input_err)?;
    let snap_dir = a.out_dir.join("snapshots");
    if !config.snapshot_times.is_empty() || config.snapshot_every.is_some() {
        ensure_dir(&snap_dir).map_err(input_err)?;
    }
    let comments = vec![
        "vpwf simulate".to_string(),
        source,
        format!("dt_safety={}", config.dt_safety),
        format!("record_cadence={}", config.record_cadence),
    ];
    let traj_path = a.out_dir.join("trajectory.csv");
    let mut writer = io::TrajectoryWriter::create(&traj_path, &config.kappa_radii, &comments).map_err(input_err)?;
    let mut write_err = None;
    let outcome = flow::run_with(mesh, &config, |rec| {
        if write_err.is_none() {
            write_err = writer.write(rec).err();
        }
    });
    if let Some(e) = write_err {
        return Err(input_err(e));
    }
    writer.finish().map_err(input_err)?;

    let (traj, state, stop): (Trajectory, Option<flow::FlowState>, std::result::Result<flow::StopReason, Error>) =
        match outcome {
            Ok(out) => (out.trajectory, Some(out.state), Ok(out.stop)),
            Err(f) => {
                let f = *f;
                (f.trajectory, f.state, Err(f.error))
            }
        };
    io::write_steps(a.out_dir.join("steps.csv"), &traj.steps, &comments).map_err(input_err)?;
    for s in &traj.snapshots {
        write_snapshot(&snap_dir, s).map_err(input_err)?;
    }

    match stop {
        Ok(reason) => {
            let state = state.expect("finished runs carry a state");
            let final_path = a.out_dir.join("final.obj");
            io::write_obj(&final_path, &state.mesh, &[format!("t={}", io::fmt_f64(state.t))]).map_err(input_err)?;
            let e = EnergyReport::compute(&state.mesh, &state.cache);
            let target_radius = (3.0 * v0 / (4.0 * std::f64::consts::PI)).cbrt();
            let mut lines = vec![
                format!("stop_reason: {reason}"),
                format!("steps: {}", state.step_index),
                format!("t: {}", io::fmt_f64(state.t)),
                format!("A: {}", io::fmt_f64(e.area)),
                format!("V: {}", io::fmt_f64(e.signed_volume)),
                format!("V0: {}", io::fmt_f64(state.target_volume)),
                format!("W: {}", io::fmt_f64(e.willmore)),
                format!("Wbar: {}", io::fmt_f64(e.wbar)),
                format!("gb_defect: {}", io::fmt_f64(e.gauss_bonnet_defect)),
                format!("lambda: {}", io::fmt_f64(e.lambda)),
                format!("max_speed: {}", io::fmt_f64(state.last_max_speed)),
                format!("L43: {}", io::fmt_f64(state.accum_l43)),
                format!("L2A: {}", io::fmt_f64(state.accum_l2a)),
                format!("target_radius: {}", io::fmt_f64(target_radius)),
            ];
            lines.extend(fit_lines(&state.mesh));
            let text = lines.join("\n") + "\n";
            if !a.quiet {
                print!("{text}");
            }
            fs::write(a.out_dir.join("report.txt"), &text).map_err(|e| input_err(Error::io(a.out_dir.join("report.txt"), e)))?;
            Ok(())
        }
        Err(error) => {
            let mut msg = format!("flow failed: {error}");
            if let Some(state) = state {
                let path = a.out_dir.join("last_good.obj");
                if io::write_obj(&path, &state.mesh, &[format!("t={}", io::fmt_f64(state.t)), format!("step={}", state.step_index)]).is_ok() {
                    msg += &format!("; last good state (t = {}, step {}) written to {}", state.t, state.step_index, path.display());
                }
            }
            Err((exit_code_for_flow(&error), msg))
        }
    }
}

fn analyze(a: &AnalyzeArgs) -> CmdResult {
    FlowConfig {
        kappa_radii: a.kappa_radii.clone(),
        ..FlowConfig::default()
    }
    .validate()
    .map_err(input_err)?;
    let file = io::read_mesh(&a.input).map_err(input_err)?;
    let mesh = file.mesh;
    let topo = mesh.validate().map_err(input_err)?;
    let cache = GeometryCache::build(&mesh).map_err(input_err)?;
    let rec = diagnostics::record(&mesh, &cache, RecordContext::default(), &a.kappa_radii).map_err(input_err)?;
    println!("vertices: {}", topo.vertex_count);
    println!("edges: {}", topo.edge_count);
    println!("faces: {}", topo.face_count);
    println!("chi: {}", topo.euler_characteristic);
    println!("genus: {}", topo.genus);
    print_record(&rec);
    println!("gauss_bonnet_sum: {}", io::fmt_f64(cache.total_gaussian_curvature()));
    for l in fit_lines(&mesh) {
        println!("{l}");
    }
    if let Some(eps) = a.eps {
        match diagnostics::concentration_radius(&mesh, &cache, eps) {
            Ok(r) => println!("concentration_radius: {}", io::fmt_f64(r)),
            Err(e @ Error::NoFiniteRadius { .. }) => println!("concentration_radius: none ({e})"),
            Err(e) => return Err(input_err(e)),
        }
    }
    if let Some(out) = &a.output {
        io::write_trajectory(out, &a.kappa_radii, &[rec], &[format!("vpwf analyze input={}", a.input.display())])
            .map_err(input_err)?;
    }
    Ok(())
}

fn load_snapshots(dir: &Path) -> Result<Vec<flow::Snapshot>> {
    let mut out = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("obj") {
            continue;
        }
        let file = io::read_obj(&path)?;
        let time = file
            .comment_value("t")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(&path, 1, "snapshot lacks a `# t=` comment"))?;
        let step = file.comment_value("step").and_then(|v| v.parse().ok()).unwrap_or(0);
        out.push(flow::Snapshot {
            time,
            step,
            mesh: file.mesh,
        });
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(out)
}

fn rel_delta(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn rescale_cmd(a: &RescaleArgs) -> CmdResult {
    let [ox, oy, oz] = a.origin[..] else {
        return Err((EXIT_BAD_ARGS, format!("--origin expects x,y,z, got {} values", a.origin.len())));
    };
    let origin = Vec3::new(ox, oy, oz);
    let spec = RescaleSpec::new(a.rho, origin).map_err(input_err)?;
    let table = io::read_trajectory(&a.trajectory).map_err(input_err)?;
    let parent = a.trajectory.parent().unwrap_or(Path::new("."));
    let steps_path = a.steps.clone().or_else(|| {
        let p = parent.join("steps.csv");
        p.exists().then_some(p)
    });
    let steps = match &steps_path {
        Some(p) => io::read_steps(p).map_err(input_err)?.1,
        None => Vec::new(),
    };
    let snap_dir = a.snapshots.clone().or_else(|| {
        let p = parent.join("snapshots");
        p.is_dir().then_some(p)
    });
    let snapshots = match &snap_dir {
        Some(d) => load_snapshots(d).map_err(input_err)?,
        None => Vec::new(),
    };
    let traj = Trajectory {
        records: table.records,
        kappa_radii: table.kappa_radii,
        snapshots,
        steps,
    };

    if let Some(t) = a.blowup_time {
        let w = rescale::blowup_window(&traj, t, a.eps, a.c_hat).map_err(|e| match e {
            Error::NoFiniteRadius { .. } | Error::SnapshotMissing(_) | Error::BadParams(_) => (EXIT_BAD_ARGS, e.to_string()),
            other => input_err(other),
        })?;
        let comments = vec![
            format!("source={}", a.trajectory.display()),
            format!("t_j={}", io::fmt_f64(w.t_j)),
            format!("r_j={}", io::fmt_f64(w.r_j)),
            format!("x_j={},{},{}", io::fmt_f64(w.x_j.x), io::fmt_f64(w.x_j.y), io::fmt_f64(w.x_j.z)),
            format!("c_hat={}", a.c_hat),
            format!("eps={}", a.eps),
            format!("t={}", io::fmt_f64(w.window_time)),
        ];
        io::write_obj(&a.output, &w.mesh, &comments).map_err(input_err)?;
        println!("t_j: {}", io::fmt_f64(w.t_j));
        println!("r_j: {}", io::fmt_f64(w.r_j));
        println!("window_time: {}", io::fmt_f64(w.window_time));
        println!("kappa_source_r_j: {}", io::fmt_f64(w.source_kappa));
        println!("kappa_window_1: {}", io::fmt_f64(w.window_kappa));
        return Ok(());
    }

    let out = rescale::rescale_trajectory(&traj, &spec);
    let mut comments = table.comments.clone();
    comments.extend([
        format!("rescale rho={}", a.rho),
        format!("rescale origin={ox},{oy},{oz}"),
        format!("rescale source={}", a.trajectory.display()),
        format!(
            "rescale steps={}",
            steps_path.as_ref().map_or("none".to_string(), |p| p.display().to_string())
        ),
    ]);
    io::write_trajectory(&a.output, &out.kappa_radii, &out.records, &comments).map_err(input_err)?;
    if !out.snapshots.is_empty() {
        let dir = a.output.with_extension("snapshots");
        ensure_dir(&dir).map_err(input_err)?;
        for s in &out.snapshots {
            write_snapshot(&dir, s).map_err(input_err)?;
        }
    }
    if a.check_invariants {
        if let (Some(before), Some(after)) = (traj.records.last(), out.records.last()) {
            let d43 = rel_delta(before.accum_l43, after.accum_l43);
            let d2a = rel_delta(before.accum_l2a, after.accum_l2a);
            println!("L43 before: {} after: {} rel_delta: {:.3e}", io::fmt_f64(before.accum_l43), io::fmt_f64(after.accum_l43), d43);
            println!("L2A before: {} after: {} rel_delta: {:.3e}", io::fmt_f64(before.accum_l2a), io::fmt_f64(after.accum_l2a), d2a);
            let ok = d43 <= 1e-12 && d2a <= 1e-12;
            println!("invariants: {}", if ok { "ok" } else { "VIOLATED" });
            if !ok {
                return Err((EXIT_FLOW, "λ-accumulators not preserved to 1e-12".into()));
            }
        }
    }
    Ok(())
}
