use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use cavity_gates::analytic::closed_form_trajectory;
use cavity_gates::coupling::{CouplingProfile, CouplingTrace};
use cavity_gates::export::{fmt17, write_table};
use cavity_gates::fieldgrid::{
    coupling_trace_from_field, mode_volume, mode_volume_2d, peak_energy_point, polarization_fraction, synthesize_mode, FieldGrid, PathSpec,
};
use cavity_gates::gates::{calibrate_velocity, truth_table, Engine, GateLabel, GateReport, GateSettings, TransitFamily};
use cavity_gates::ode::{evolve, SubspaceHamiltonian, Trajectory};
use cavity_gates::sweep::{linspace, surface, LogicalInput, Surface};
use cavity_gates::units::{omega_from_wavelength, CavityParams};
use cavity_gates::{svg, AmplitudeVector, BasisKet, C64};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod config;

use config::{ConfigError, EngineChoice, RunConfig, Scenario};

/// Velocity at which field-derived traces are sampled; other velocities
/// rescale the time axis.
const TRACE_REFERENCE_VELOCITY: f64 = 100.0;
/// Samples per exported coupling profile.
const PROFILE_POINTS: usize = 2001;

#[derive(Debug, Parser)]
#[command(name = "cavity-gates", version, about = "Two atoms crossing a photonic-crystal cavity: dynamics, calibration and gate reports")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Tabular output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Reserved; every computation is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time evolution of the atom/photon probabilities.
    Evolve {
        #[arg(long, value_enum)]
        engine: Option<EngineChoice>,
        /// Also write an SVG plot next to each trajectory.
        #[arg(long)]
        svg: bool,
    },
    /// Final amplitude surfaces over velocity and coupling ratio.
    Sweep {
        #[arg(long)]
        svg: bool,
    },
    /// Velocity that realises the configured gate.
    Calibrate,
    /// Mode volume, peak point, g₀ and polarization of the cavity field.
    FieldStats {
        /// Also write the (loaded or synthesized) grid as field JSON.
        #[arg(long)]
        emit_grid: bool,
    },
    /// Truth table, fidelities and feasibility of the configured gate.
    GateReport {
        #[arg(long, value_enum)]
        engine: Option<EngineChoice>,
    },
    /// Coupling traces seen by both atoms.
    Profile {
        #[arg(long)]
        svg: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use cavity_gates::Error as E;
    for cause in e.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::Domain(_) | E::Format(_) | E::Json(_) => 2,
                E::Quadrature { .. } | E::StepUnderflow { .. } => 3,
                E::Calibration { .. } => 4,
                _ => 1,
            };
        }
    }
    1
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.parallel {
        if n == 0 {
            return Err(ConfigError("--parallel must be >= 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker pool")?;
    }
    if cli.seed.is_some() {
        log::info!("--seed is reserved; results do not depend on it");
    }
    let path = cli.config.as_ref().ok_or_else(|| ConfigError("--config is required".into()))?;
    let cfg = RunConfig::load(path)?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let ctx = RunContext::build(&cfg)?;
    match &cli.command {
        Command::Evolve { engine, svg } => cmd_evolve(cli, &cfg, &ctx, engine.or(cfg.engine).unwrap_or(EngineChoice::Both), *svg),
        Command::Sweep { svg } => cmd_sweep(cli, &cfg, &ctx, *svg),
        Command::Calibrate => cmd_calibrate(cli, &cfg, &ctx),
        Command::FieldStats { emit_grid } => cmd_field_stats(cli, &cfg, &ctx, *emit_grid),
        Command::GateReport { engine } => cmd_gate_report(cli, &cfg, &ctx, engine.or(cfg.engine).unwrap_or(EngineChoice::Both)),
        Command::Profile { svg } => cmd_profile(cli, &cfg, &ctx, *svg),
    }
}

/// Field data resolved from a field scenario.
struct FieldInfo {
    grid: FieldGrid,
    cavity: CavityParams,
    /// Mode volume computed from the grid (m³).
    v_mode: f64,
    /// g₀ implied by `v_mode` (rad/s), before any override.
    g0_from_grid: f64,
}

/// Everything derived from a config before a subcommand runs.
struct RunContext {
    family: TransitFamily,
    omega_cav: f64,
    field: Option<FieldInfo>,
}

impl RunContext {
    fn build(cfg: &RunConfig) -> Result<Self> {
        match cfg.scenario {
            Scenario::Generic => {
                let params = cfg.generic_family().expect("validated");
                Ok(Self { family: TransitFamily::Generic(params), omega_cav: cfg.omega_rad_s.expect("validated"), field: None })
            }
            Scenario::Field2d | Scenario::Field3d => {
                let f = cfg.field.as_ref().expect("validated");
                let grid = match (&f.grid_file, &f.synthesize) {
                    (Some(file), _) => FieldGrid::load(file).with_context(|| format!("loading {}", file.display()))?,
                    (None, Some(spec)) => synthesize_mode(spec)?,
                    _ => unreachable!("validated"),
                };
                let want_2d = cfg.scenario == Scenario::Field2d;
                if grid.is_2d() != want_2d {
                    return Err(
                        ConfigError(format!("scenario {:?} does not match a grid with dims {:?}", cfg.scenario, grid.dims())).into()
                    );
                }
                let omega = cfg.omega_rad_s.unwrap_or_else(|| omega_from_wavelength(f.wavelength_m));
                let peak = peak_energy_point(&grid)?;
                // a 2D grid's z spacing is its effective height
                let v_mode = if grid.is_2d() { mode_volume_2d(&grid, grid.spacing()[2])? } else { mode_volume(&grid)? };
                let from_grid = CavityParams::from_mode_volume(omega, peak.eps_m, v_mode, f.dipole_moment_c_m)?;
                let cavity = match f.g0_rad_s {
                    Some(g0) => CavityParams::from_g0(omega, peak.eps_m, g0, f.dipole_moment_c_m)?,
                    None => from_grid,
                };
                let path = match &f.path {
                    Some(p) => match p.length_m {
                        Some(len) => {
                            PathSpec::new([-0.5 * len, p.y_m, p.z_m], [1.0, 0.0, 0.0], len, TRACE_REFERENCE_VELOCITY, cfg.atoms.zeta_a_rad)?
                        }
                        None => PathSpec::across(&grid, p.y_m, p.z_m, TRACE_REFERENCE_VELOCITY, cfg.atoms.zeta_a_rad)?,
                    },
                    None => PathSpec::across(&grid, 0.0, 0.0, TRACE_REFERENCE_VELOCITY, cfg.atoms.zeta_a_rad)?,
                };
                let trace = coupling_trace_from_field(&grid, &path, &cavity, f.n_samples, f.coupling_mode)?;
                Ok(Self {
                    family: TransitFamily::Trace { trace, reference_velocity: TRACE_REFERENCE_VELOCITY },
                    omega_cav: omega,
                    field: Some(FieldInfo { grid, cavity, v_mode, g0_from_grid: from_grid.g0 }),
                })
            }
        }
    }

    /// Configured velocity, or the calibrated one when the config omits it.
    fn velocity(&self, cfg: &RunConfig) -> Result<f64> {
        if let Some(v) = cfg.atoms.velocity_m_s {
            return Ok(v);
        }
        let gate = cfg.gate.ok_or_else(|| ConfigError("atoms.velocity_m_s is omitted, so `gate` is needed to calibrate it".into()))?;
        let cal = calibrate_velocity(&self.family, cfg.atoms.p, gate, cfg.bounds())?;
        log::info!("calibrated velocity {} m/s", cal.velocity);
        Ok(cal.velocity)
    }

    fn settings(&self, cfg: &RunConfig) -> Result<GateSettings> {
        let target = cfg.gate.ok_or_else(|| ConfigError("`gate` is required".into()))?;
        Ok(GateSettings {
            family: self.family.clone(),
            velocity: self.velocity(cfg)?,
            p: cfg.atoms.p,
            target,
            q_factor: cfg.q_factor,
            omega_cav: self.omega_cav,
            ode: cfg.evolve_options(),
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn input_tag(input: LogicalInput) -> &'static str {
    match input {
        LogicalInput::AExcited => "10",
        LogicalInput::BExcited => "01",
    }
}

fn engines(choice: EngineChoice) -> Vec<Engine> {
    match choice {
        EngineChoice::Analytic => vec![Engine::Analytic],
        EngineChoice::Ode => vec![Engine::Ode],
        EngineChoice::Both => vec![Engine::Analytic, Engine::Ode],
    }
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Analytic => "analytic",
        Engine::Ode => "ode",
    }
}

#[derive(Serialize)]
struct TrajectoryJson<'a> {
    labels: Vec<String>,
    time_s: &'a [f64],
    probabilities: Vec<Vec<f64>>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn trajectory_json(tr: &Trajectory) -> TrajectoryJson<'_> {
    let basis = tr.final_state().basis();
    let col = |f: &dyn Fn(C64) -> f64| -> Vec<Vec<f64>> {
        (0..basis.len()).map(|k| tr.states.iter().map(|s| f(s.amplitudes()[k])).collect()).collect()
    };
    TrajectoryJson {
        labels: basis.iter().map(|b| b.label()).collect(),
        time_s: &tr.times,
        probabilities: col(&|c| c.norm_sqr()),
        re: col(&|c| c.re),
        im: col(&|c| c.im),
    }
}

fn cmd_evolve(cli: &Cli, cfg: &RunConfig, ctx: &RunContext, choice: EngineChoice, want_svg: bool) -> Result<()> {
    let v = ctx.velocity(cfg)?;
    let p = cfg.atoms.p;
    let a = ctx.family.profile_at(v)?;
    let b = CouplingProfile::Scaled { base: Box::new(a.clone()), factor: p };
    let opts = cfg.evolve_options();
    let tag = input_tag(cfg.initial);
    let input = match cfg.initial {
        LogicalInput::AExcited => 0,
        LogicalInput::BExcited => 1,
    };
    for engine in engines(choice) {
        let tr = match engine {
            Engine::Analytic => closed_form_trajectory(&a, p, input, opts.output_points)?,
            Engine::Ode => {
                let h = SubspaceHamiltonian::build(1)?;
                let ket = h.basis()[input];
                let (t0, t1) = a.window();
                evolve(
                    &h,
                    |t| C64::new(a.interaction(t), 0.0),
                    |t| C64::new(b.interaction(t), 0.0),
                    &AmplitudeVector::basis_state(ket),
                    t0,
                    t1,
                    opts,
                )?
            }
        };
        let stem = format!("trajectory_{}_{tag}", engine_name(engine));
        match cli.format {
            Format::Csv => {
                let path = cli.out.join(format!("{stem}.csv"));
                let mut w = create(&path)?;
                tr.write_csv(&mut w)?;
            }
            Format::Json => write_json(&cli.out.join(format!("{stem}.json")), &trajectory_json(&tr))?,
        }
        let fin = tr.final_state().probabilities();
        let labels: Vec<String> = tr.final_state().basis().iter().map(BasisKet::label).collect();
        let summary: Vec<String> = labels.iter().zip(&fin).map(|(l, p)| format!("P_{l}={p:.6}")).collect();
        println!("{:<8} V={v:.3} m/s p={p}  final: {}  norm drift {:.2e}", engine_name(engine), summary.join(" "), tr.norm_drift());
        if want_svg {
            let t_us: Vec<f64> = tr.times.iter().map(|t| t * 1e6).collect();
            let probs = trajectory_json(&tr).probabilities;
            let names: Vec<String> = labels.iter().map(|l| format!("|{l}⟩")).collect();
            let series: Vec<svg::Series> = names.iter().zip(&probs).map(|(label, y)| svg::Series { label, x: &t_us, y }).collect();
            let doc = svg::line_plot(&format!("{} – {}", cfg.description, engine_name(engine)), "t (μs)", "probability", &series);
            std::fs::write(cli.out.join(format!("{stem}.svg")), doc)?;
        }
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli, cfg: &RunConfig, ctx: &RunContext, want_svg: bool) -> Result<()> {
    let TransitFamily::Generic(params) = &ctx.family else {
        return Err(ConfigError("sweep needs the generic scenario".into()).into());
    };
    let s = cfg.sweep.clone().unwrap_or_default();
    let v_values = linspace(s.v_min_m_s, s.v_max_m_s, s.n_v);
    let p_values = linspace(s.p_min, s.p_max, s.n_p);
    let grid = surface(params, &v_values, &p_values, cfg.initial)?;
    let tag = input_tag(cfg.initial);
    match cli.format {
        Format::Csv => {
            for (which, name) in [(Surface::A, "a"), (Surface::B, "b")] {
                let mut w = create(&cli.out.join(format!("surface_{name}_{tag}.csv")))?;
                grid.write_surface_csv(&mut w, which)?;
            }
        }
        Format::Json => write_json(&cli.out.join(format!("surface_{tag}.json")), &grid)?,
    }
    if want_svg {
        for (values, name) in [(&grid.a, "a"), (&grid.b, "b")] {
            let doc = svg::heatmap(&format!("{} – {name}", cfg.description), "V (m/s)", "p", &grid.v_values, &grid.p_values, values);
            std::fs::write(cli.out.join(format!("surface_{name}_{tag}.svg")), doc)?;
        }
    }
    println!("sweep {}×{} cells written to {}", v_values.len(), p_values.len(), cli.out.display());
    Ok(())
}

fn cmd_calibrate(cli: &Cli, cfg: &RunConfig, ctx: &RunContext) -> Result<()> {
    let gate = cfg.gate.ok_or_else(|| ConfigError("calibrate needs `gate`".into()))?;
    let bounds = cfg.bounds();
    let cal = calibrate_velocity(&ctx.family, cfg.atoms.p, gate, bounds)?;
    #[derive(Serialize)]
    struct Out {
        gate: GateLabel,
        p: f64,
        v_min_m_s: f64,
        v_max_m_s: f64,
        velocity_m_s: f64,
        odd_multiple: u32,
        lambda: f64,
        residual: f64,
    }
    write_json(
        &cli.out.join("calibration.json"),
        &Out {
            gate,
            p: cfg.atoms.p,
            v_min_m_s: bounds.0,
            v_max_m_s: bounds.1,
            velocity_m_s: cal.velocity,
            odd_multiple: cal.odd_multiple,
            lambda: cal.lambda,
            residual: cal.residual,
        },
    )?;
    println!("V* = {:.4} m/s  (Λ = {}π, residual {:.2e})", cal.velocity, cal.odd_multiple, cal.residual);
    Ok(())
}

fn cmd_field_stats(cli: &Cli, _cfg: &RunConfig, ctx: &RunContext, emit_grid: bool) -> Result<()> {
    let info = ctx.field.as_ref().ok_or_else(|| ConfigError("field-stats needs a field scenario".into()))?;
    let peak = peak_energy_point(&info.grid)?;
    let polarization = if info.grid.components() == 3 {
        let [_, _, nz] = info.grid.dims();
        let plane = peak.index % nz;
        Some(polarization_fraction(&info.grid, plane)?)
    } else {
        None
    };
    #[derive(Serialize)]
    struct Out {
        v_mode_m3: f64,
        r_m: [f64; 3],
        eps_m: f64,
        g0_rad_s: f64,
        polarization_fraction: Option<f64>,
        g0_from_mode_volume_rad_s: f64,
    }
    let out = Out {
        v_mode_m3: info.v_mode,
        r_m: peak.position,
        eps_m: peak.eps_m,
        g0_rad_s: info.cavity.g0,
        polarization_fraction: polarization,
        g0_from_mode_volume_rad_s: info.g0_from_grid,
    };
    write_json(&cli.out.join("field_stats.json"), &out)?;
    if emit_grid {
        info.grid.save(&cli.out.join("field_grid.json"))?;
    }
    println!("V_mode = {:.6e} m³  ε_m = {}  r_m = {:?} m", out.v_mode_m3, out.eps_m, out.r_m);
    println!("g₀ = {:.6e} rad/s (from grid {:.6e})", out.g0_rad_s, out.g0_from_mode_volume_rad_s);
    match polarization {
        Some(p) => println!("TM polarization fraction P = {p:.6}"),
        None => println!("TM polarization fraction: n/a (scalar grid)"),
    }
    Ok(())
}

fn print_report(r: &GateReport) {
    println!("engine {}  target {:?}  V = {:.4} m/s  p = {}", engine_name(r.engine), r.target, r.velocity_m_s, r.p);
    println!("  G_A = {:.6}  G_B = {:.6}  Λ = {:.6} rad", r.pulse_areas.g_a, r.pulse_areas.g_b, r.lambda);
    println!("  {:<6} {:>22} {:>22} {:>22} {:>10} {:>9}", "input", "|10⟩", "|01⟩", "|γ⟩", "fidelity", "phase");
    for i in &r.inputs {
        let cell = |k: usize| format!("{:+.5}{:+.5}i", i.output_re[k], i.output_im[k]);
        println!("  |{}⟩  {:>22} {:>22} {:>22} {:>10.6} {:>9.4}", i.input, cell(0), cell(1), cell(2), i.fidelity, i.phase);
    }
    println!("  process fidelity {:.6}  residual cavity population {:.3e}", r.process_fidelity, r.residual_cavity_population);
    println!("  global phase {:.4}  relative phase {:.4}", r.global_phase, r.relative_phase);
    println!(
        "  operation time {:.4e} s  photon lifetime {:.4e} s  margin {:.1}",
        r.operation_time_s, r.photon_lifetime_s, r.lifetime_margin
    );
    match r.classified {
        Some(label) => println!("  classified as {label:?}"),
        None => println!("  no gate reaches the classification threshold"),
    }
    if let Some(s) = &r.swap {
        println!(
            "  |11⟩ return {:.6} (ode) / {:.6} (expm), phase {:.4}; SWAP process fidelity {:.4}",
            s.doubly_excited_return, s.doubly_excited_return_expm, s.doubly_excited_phase, s.swap_process_fidelity
        );
        println!("  note: {}", s.note);
    }
}

fn cmd_gate_report(cli: &Cli, cfg: &RunConfig, ctx: &RunContext, choice: EngineChoice) -> Result<()> {
    let settings = ctx.settings(cfg)?;
    let reports = engines(choice).into_iter().map(|e| truth_table(&settings, e)).collect::<cavity_gates::Result<Vec<_>>>()?;
    for r in &reports {
        print_report(r);
    }
    write_json(&cli.out.join("gate_report.json"), &reports)?;
    Ok(())
}

fn sampled_trace(profile: &CouplingProfile, n: usize) -> Result<CouplingTrace> {
    let (t0, t1) = profile.window();
    let times = linspace(t0, t1, n);
    let values = times.iter().map(|&t| profile.value(t)).collect();
    Ok(CouplingTrace::new(
        times,
        values,
        match profile {
            CouplingProfile::Trace(tr) => tr.mode(),
            _ => Default::default(),
        },
    )?)
}

fn cmd_profile(cli: &Cli, cfg: &RunConfig, ctx: &RunContext, want_svg: bool) -> Result<()> {
    let v = ctx.velocity(cfg)?;
    let p = cfg.atoms.p;
    let a = ctx.family.profile_at(v)?;
    let b = CouplingProfile::Scaled { base: Box::new(a.clone()), factor: p };
    let trace_a = sampled_trace(&a, PROFILE_POINTS)?;
    let trace_b = sampled_trace(&b, PROFILE_POINTS)?;
    let ga = trace_a.interaction_samples();
    let gb = trace_b.interaction_samples();
    match cli.format {
        Format::Csv => {
            let rows = (0..trace_a.times().len()).map(|k| vec![trace_a.times()[k], ga[k], gb[k]]);
            write_table(create(&cli.out.join("profile.csv"))?, &["time_s", "g_a_rad_per_s", "g_b_rad_per_s"], rows)?;
            trace_a.write_csv(create(&cli.out.join("coupling_a.csv"))?)?;
            trace_b.write_csv(create(&cli.out.join("coupling_b.csv"))?)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                time_s: &'a [f64],
                g_a_rad_per_s: &'a [f64],
                g_b_rad_per_s: &'a [f64],
            }
            write_json(&cli.out.join("profile.json"), &Out { time_s: trace_a.times(), g_a_rad_per_s: ga, g_b_rad_per_s: gb })?;
        }
    }
    let peak = |g: &[f64]| g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    println!("V = {v:.4} m/s  p = {p}  transit {} s", fmt17(a.window().1 - a.window().0));
    println!("peak |g_A| = {:.6e} rad/s  peak |g_B| = {:.6e} rad/s", peak(ga), peak(gb));
    if want_svg {
        let t_us: Vec<f64> = trace_a.times().iter().map(|t| t * 1e6).collect();
        let g0 = peak(ga).max(f64::MIN_POSITIVE);
        let na: Vec<f64> = ga.iter().map(|g| g / g0).collect();
        let nb: Vec<f64> = gb.iter().map(|g| g / g0).collect();
        let series = [svg::Series { label: "atom A", x: &t_us, y: &na }, svg::Series { label: "atom B", x: &t_us, y: &nb }];
        std::fs::write(cli.out.join("profile.svg"), svg::line_plot(&cfg.description, "t (μs)", "g / max|g_A|", &series))?;
    }
    Ok(())
}
