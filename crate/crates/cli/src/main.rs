//! `mcnn`: batch front end for the memristor CNN simulator.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use memcnn::cell::DrivingPoint;
use memcnn::chaos::{self, CellNonlinearity, ChaosConfig, Memristor, System};
use memcnn::config::{self, RunConfig};
use memcnn::device::{hysteresis_trace, MemductanceProfile};
use memcnn::io;
use memcnn::lattice::{run, DecayMode, Event, Image};
use memcnn::protocols::{
    self, builtin_template, FluxDecay, SuspendTimes, TemplateName, WaveBand, DEFAULT_DT,
};

use output::{Manifest, OutDir};

#[derive(Parser, Debug)]
#[command(name = "mcnn", version, about = "Memristor cellular neural network simulator")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a lattice described by a configuration file.
    Simulate(SimulateArgs),
    /// Equilibria of an isolated cell `dv/dt = -v + a f(v) + i`.
    Equilibria {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        bias: f64,
    },
    /// Trace a sinusoidally driven memristor as CSV `t,v,phi,W,i`.
    Hysteresis(HysteresisArgs),
    /// Integrate one of the two-cell chaotic systems.
    Chaos(ChaosArgs),
    /// Run one of the built-in experiments.
    Experiment(ExperimentArgs),
    /// Show the built-in templates.
    Templates {
        /// Print every template with its values.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Configuration file.
    #[arg(long, short)]
    config: PathBuf,
    /// Input image, overriding `image`.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Output directory, overriding `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct HysteresisArgs {
    #[arg(long, default_value_t = 0.2)]
    omega: f64,
    #[arg(long, default_value_t = 100.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// CSV file to write; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SystemArg {
    Reference,
    Memristor,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CellsArg {
    Circuit,
    Printed,
}

#[derive(Args, Debug)]
struct ChaosArgs {
    #[arg(long, value_enum)]
    system: SystemArg,
    #[arg(long, default_value_t = 3000.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Keep every n-th state in the trajectory file.
    #[arg(long, default_value_t = 10)]
    stride: usize,
    /// Sign convention of the memristor system's cell resistors.
    #[arg(long, value_enum, default_value = "circuit")]
    cells: CellsArg,
    /// Also write the Poincaré section at multiples of the drive period.
    #[arg(long)]
    poincare: bool,
    /// Also write the memristor powers `p_A`, `p_B`.
    #[arg(long)]
    power: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ExperimentKind {
    #[value(alias = "hole-filling-suspend")]
    Suspend,
    FluxDecay,
    Parasitic,
    Wave,
    ImageHold,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Preserve,
    Flip,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// Template; each experiment has its own default.
    #[arg(long)]
    template: Option<String>,
    /// Input PGM; a synthetic image is used if absent.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    store_start: Option<f64>,
    #[arg(long)]
    store_duration: Option<f64>,
    #[arg(long)]
    off_until: Option<f64>,
    #[arg(long)]
    recovery_duration: Option<f64>,
    /// Fraction of stored fluxes to decay.
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "preserve")]
    mode: ModeArg,
    /// Parasitic conductance.
    #[arg(long, default_value_t = 0.01)]
    g: f64,
    /// Switch-off time of the image-holding run.
    #[arg(long)]
    t_off: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    band_a: f64,
    #[arg(long, default_value_t = 4000.0)]
    band_b: f64,
    /// Snapshot times of the wave run.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MCNN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("MCNN_THREADS must be a non-negative integer (got '{raw}')"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("could not configure the thread pool")?;
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Equilibria { a, bias } => equilibria(a, bias),
        Command::Hysteresis(args) => hysteresis(args),
        Command::Chaos(args) => run_chaos(args),
        Command::Experiment(args) => experiment(args),
        Command::Templates { list } => {
            templates(list);
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    let mut cfg = config::parse_config(&text).with_context(|| format!("in {}", args.config.display()))?;
    apply_overrides(&mut cfg, &args)?;

    let base = args.config.parent().unwrap_or(Path::new("."));
    let image_path = match (&args.image, &cfg.image) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) if p.is_relative() => base.join(p),
        (None, Some(p)) => p.clone(),
        (None, None) => bail!("no input image: set 'image' in the config or pass --image"),
    };
    if !image_path.is_file() {
        bail!("input image {} does not exist", image_path.display());
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|p| if p.is_relative() { base.join(p) } else { p.clone() }))
        .context("no output directory: set 'out' in the config or pass --out")?;

    let image = Image::encode(&io::read_pgm(&image_path)?)?;
    let state = cfg.lattice(image)?;
    let dynamics = state.dynamics();
    let record = run(state, &cfg.script(), cfg.t_end, cfg.dt)?;

    let dir = OutDir::create(&out)?;
    for snap in &record.snapshots {
        dir.output(&format!("{:.4}", snap.t), &snap.y, dynamics)?;
        if let Some(g) = &snap.gates {
            dir.ppm(&format!("gates-{:.4}", snap.t), &io::gate_colors(g))?;
        }
    }
    dir.output("final", &record.final_y, dynamics)?;

    let mut m = Manifest::new("simulate");
    for (k, v) in cfg.manifest().into_iter().filter(|(k, _)| k != "image") {
        m.push(&k, v);
    }
    m.push("image", image_path.display());
    dir.manifest(&m)?;
    dir.summary(&record_summary(&record))?;
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} steps, output in {}", record.steps, out.display());
    Ok(())
}

fn apply_overrides(cfg: &mut RunConfig, args: &SimulateArgs) -> Result<()> {
    if let Some(dt) = args.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            bail!("dt must be positive");
        }
        cfg.dt = dt;
    }
    if let Some(t) = args.t_end {
        if !(t >= 0.0 && t.is_finite()) {
            bail!("t_end must be non-negative");
        }
        cfg.t_end = t;
        if let Some(s) = cfg.snapshots.iter().find(|s| **s > t) {
            bail!("snapshot time {s} outside [0, {t}]");
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        for ev in &mut cfg.events {
            if let Event::FluxDecay { seed: s, .. } = ev {
                *s = seed;
            }
        }
    }
    Ok(())
}

fn record_summary(record: &memcnn::lattice::RunRecord) -> Vec<(String, String)> {
    let mut s = vec![
        ("steps".to_string(), record.steps.to_string()),
        ("recovery_checked".to_string(), record.recovery_checked.to_string()),
        ("recovery_violations".to_string(), record.recovery_violations.to_string()),
        ("gate_events".to_string(), record.gate_events.len().to_string()),
    ];
    for (k, w) in record.warnings.iter().enumerate() {
        s.push((format!("warning.{k}"), w.clone()));
    }
    s
}

fn equilibria(a: f64, bias: f64) -> Result<()> {
    let cell = DrivingPoint::new(a, bias)?;
    println!("a = {a}, i = {bias}");
    for e in cell.equilibria() {
        println!("v = {}  {:?}", e.v, e.stability);
    }
    Ok(())
}

fn hysteresis(args: HysteresisArgs) -> Result<()> {
    let trace = hysteresis_trace(&MemductanceProfile::neuron_window(), args.omega, args.t_end, args.dt)?;
    let rows = trace.iter().map(|s| vec![s.t, s.v, s.phi, s.w, s.i]);
    let header = ["t", "v", "phi", "W", "i"];
    match args.out {
        Some(path) => io::write_csv(&header, rows, &path)?,
        None => print!("{}", io::encode_csv(&header, rows)?),
    }
    Ok(())
}

fn run_chaos(args: ChaosArgs) -> Result<()> {
    let system = match args.system {
        SystemArg::Reference => System::Reference,
        SystemArg::Memristor => System::MemristorCoupled,
    };
    let mut cfg = ChaosConfig::new(system, args.t_end).with_stride(args.stride);
    cfg.dt = args.dt;
    cfg.cells = match args.cells {
        CellsArg::Circuit => CellNonlinearity::Circuit,
        CellsArg::Printed => CellNonlinearity::Printed,
    };
    if args.power && system == System::Reference {
        bail!("--power needs the memristor system");
    }
    let traj = chaos::simulate(&cfg)?;
    let dir = OutDir::create(&args.out)?;
    let memristive = system == System::MemristorCoupled;
    let header: &[&str] = if memristive {
        &["t", "v1", "v2", "phi_a", "phi_b"]
    } else {
        &["t", "v1", "v2"]
    };
    dir.csv(
        "trajectory",
        header,
        traj.samples.iter().map(|s| {
            let mut row = vec![s.t, s.v1, s.v2];
            if let Some((a, b)) = s.flux {
                row.extend([a, b]);
            }
            row
        }),
    )?;
    if memristive {
        dir.csv(
            "toggles",
            &["t", "memristor", "on"],
            traj.toggles.iter().map(|g| {
                let which = if g.memristor == Memristor::A { 0.0 } else { 1.0 };
                vec![g.t, which, if g.on { 1.0 } else { 0.0 }]
            }),
        )?;
    }
    if args.poincare {
        let section = chaos::poincare_section(&traj, &cfg.drive)?;
        let period = cfg.drive.period();
        dir.csv(
            "poincare",
            &["t", "v1", "v2"],
            section.iter().enumerate().map(|(k, &(a, b))| vec![k as f64 * period, a, b]),
        )?;
    }
    if args.power {
        dir.csv(
            "power",
            &["t", "p_a", "p_b"],
            chaos::power_series(&traj)?.into_iter().map(|(t, a, b)| vec![t, a, b]),
        )?;
    }
    let mut m = Manifest::new("chaos");
    m.push("system", format!("{system:?}"));
    m.push("drive.amplitude", cfg.drive.amplitude);
    m.push("drive.omega", cfg.drive.omega);
    m.push("cells", format!("{:?}", cfg.cells));
    m.push("dt", cfg.dt);
    m.push("t_end", cfg.t_end);
    m.push("stride", cfg.stride);
    m.push("poincare", args.poincare);
    m.push("power", args.power);
    dir.manifest(&m)?;
    println!(
        "max |v| = {}, {} memristor toggles, output in {}",
        traj.max_abs,
        traj.toggles.len(),
        args.out.display()
    );
    Ok(())
}

fn parse_template(name: &str) -> Result<TemplateName> {
    Ok(name.parse::<TemplateName>()?)
}

fn load_image(path: &Option<PathBuf>, fallback: impl FnOnce() -> memcnn::Result<Image>) -> Result<Image> {
    match path {
        Some(p) => Ok(Image::encode(
            &io::read_pgm(p).with_context(|| format!("cannot read {}", p.display()))?,
        )?),
        None => Ok(fallback()?),
    }
}

fn default_image(name: TemplateName) -> memcnn::Result<Image> {
    use TemplateName::*;
    match name {
        HoleFilling => protocols::ring_image(32, 8, 2),
        HalfToning | GrayScaleEdge | Smoothing | Sharpening => protocols::gradient_image(64, 64),
        Dilation | Erosion | ShadowProjection => protocols::ring_image(64, 16, 3),
    }
}

fn suspend_times(name: TemplateName, args: &ExperimentArgs) -> Result<SuspendTimes> {
    let mut t = SuspendTimes::for_template(name)?;
    t.store_start = args.store_start.unwrap_or(t.store_start);
    t.store_duration = args.store_duration.unwrap_or(t.store_duration);
    t.off_until = args.off_until.unwrap_or(t.off_until);
    t.recovery_duration = args.recovery_duration.unwrap_or(t.recovery_duration);
    t.t_end = args.t_end.unwrap_or(t.t_end);
    Ok(t)
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let default_template = match args.kind {
        ExperimentKind::Suspend | ExperimentKind::FluxDecay | ExperimentKind::Wave => TemplateName::HoleFilling,
        ExperimentKind::Parasitic => TemplateName::Dilation,
        ExperimentKind::ImageHold => TemplateName::GrayScaleEdge,
    };
    let name = match &args.template {
        Some(s) => parse_template(s)?,
        None => default_template,
    };
    if args.kind == ExperimentKind::Wave && name != TemplateName::HoleFilling {
        bail!("the wave experiment runs the hole-filling template only");
    }
    let image = load_image(&args.image, || default_image(name))?;
    let dir = OutDir::create(&args.out)?;
    let mut m = Manifest::new("experiment");
    m.push("kind", format!("{:?}", args.kind).to_lowercase());
    m.push("template", name);
    m.push(
        "image",
        args.image.as_ref().map_or("synthetic".to_string(), |p| p.display().to_string()),
    );
    m.push("dt", args.dt);
    let dynamics = builtin_template(name).dynamics;

    match args.kind {
        ExperimentKind::Suspend | ExperimentKind::FluxDecay => {
            let times = suspend_times(name, &args)?;
            let decay = (args.kind == ExperimentKind::FluxDecay).then_some(FluxDecay {
                fraction: args.fraction,
                epsilon: args.epsilon,
                mode: match args.mode {
                    ModeArg::Preserve => DecayMode::Preserve,
                    ModeArg::Flip => DecayMode::Flip,
                },
                seed: args.seed,
            });
            let r = protocols::suspend_resume_run(name, image, times, decay, args.dt)?;
            m.push("store_start", times.store_start);
            m.push("store_duration", times.store_duration);
            m.push("off_until", times.off_until);
            m.push("recovery_duration", times.recovery_duration);
            m.push("t_end", times.t_end);
            if let Some(d) = decay {
                m.push("decay.fraction", d.fraction);
                m.push("decay.epsilon", d.epsilon);
                m.push("decay.mode", format!("{:?}", d.mode).to_lowercase());
                m.push("seed", d.seed);
            }
            for snap in &r.record.snapshots {
                dir.output(&format!("{:.4}", snap.t), &snap.y, dynamics)?;
            }
            dir.output("recovered", &r.y_recovered, dynamics)?;
            dir.output("final", &r.y_final, dynamics)?;
            dir.output("uninterrupted", &r.y_uninterrupted, dynamics)?;
            if let (Some(mask), Some(d)) = (&r.record.decay_mask, decay) {
                dir.ppm("decay-mask", &output::decay_colors(mask, d.mode))?;
            }
            let mut s = record_summary(&r.record);
            s.push(("matches_uninterrupted".into(), r.matches.to_string()));
            dir.summary(&s)?;
            for w in &r.record.warnings {
                eprintln!("warning: {w}");
            }
            println!("final output matches uninterrupted run: {}", r.matches);
        }
        ExperimentKind::Parasitic => {
            let t_end = args.t_end.unwrap_or(50.0);
            let r = protocols::parasitic_comparison(name, image, args.g, t_end, args.dt)?;
            m.push("g", args.g);
            m.push("t_end", t_end);
            dir.output("with-g", &r.y_g, dynamics)?;
            dir.output("without-g", &r.y_0, dynamics)?;
            dir.summary(&[("identical".into(), r.identical.to_string())])?;
            println!("outputs identical: {}", r.identical);
        }
        ExperimentKind::Wave => {
            let t_end = args.t_end.unwrap_or(2000.0);
            let times = args.snapshots.clone().unwrap_or_else(|| vec![0.0, 500.0, 1000.0, t_end]);
            let band = WaveBand {
                alpha: args.alpha,
                beta: args.beta,
                a: args.band_a,
                b: args.band_b,
            };
            let record = protocols::wave_run(image, band, t_end, &times, args.dt)?;
            m.push("alpha", band.alpha);
            m.push("beta", band.beta);
            m.push("band_a", band.a);
            m.push("band_b", band.b);
            m.push("t_end", t_end);
            m.push(
                "snapshots",
                times.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", "),
            );
            for snap in &record.snapshots {
                dir.output(&format!("{:.4}", snap.t), &snap.y, record.final_state.dynamics())?;
                if let Some(g) = &snap.gates {
                    dir.ppm(&format!("gates-{:.4}", snap.t), &io::gate_colors(g))?;
                }
            }
            dir.summary(&record_summary(&record))?;
            println!("{} steps, output in {}", record.steps, args.out.display());
        }
        ExperimentKind::ImageHold => {
            let (t_off, t_end) = match name {
                TemplateName::ShadowProjection => (40.0, 50.0),
                _ => (80.0, 150.0),
            };
            let t_off = args.t_off.unwrap_or(t_off);
            let t_end = args.t_end.unwrap_or(t_end);
            let r = protocols::image_holding_run(name, image, t_off, t_end, args.dt)?;
            m.push("t_off", t_off);
            m.push("t_end", t_end);
            dir.output("before", &r.y_before, dynamics)?;
            dir.output("after", &r.y_after, dynamics)?;
            for snap in &r.record.snapshots {
                if let Some(g) = &snap.gates {
                    dir.ppm(&format!("gates-{:.4}", snap.t), &io::gate_colors(g))?;
                }
            }
            let mut s = record_summary(&r.record);
            s.push(("held".into(), r.held.to_string()));
            dir.summary(&s)?;
            println!("output held: {}", r.held);
        }
    }
    dir.manifest(&m)?;
    Ok(())
}

fn templates(list: bool) {
    for name in TemplateName::ALL {
        if !list {
            println!("{name}");
            continue;
        }
        let nt = builtin_template(name);
        let row = |m: &[[f64; 3]; 3]| {
            m.iter()
                .map(|r| r.iter().map(|x| format!("{x:>6}")).collect::<Vec<_>>().join(" "))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        println!("{name}");
        println!("  dynamics  {}", config::dynamics_name(nt.dynamics));
        println!("  A         {}", row(&nt.template.a));
        println!("  B         {}", row(&nt.template.b));
        println!("  z         {}", nt.template.z);
        println!("  init      {:?}", nt.init);
        println!("  boundary  v = {}, u = {}", nt.boundary.v0, nt.boundary.u0);
        if let Some(p) = nt.profile {
            println!("  W(phi)    {p:?}");
        }
    }
}
