//! Built-in templates and the named experiments run on them.

use std::fmt;
use std::str::FromStr;

use crate::device::MemductanceProfile;
use crate::lattice::{
    run, Boundary, DecayMode, Dynamics, Event, ExperimentScript, Grid, GridState, Image, RunRecord,
    Template,
};
use crate::{Error, Result};

/// Euler step used by every lattice experiment unless overridden.
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateName {
    HoleFilling,
    HalfToning,
    Dilation,
    Erosion,
    Smoothing,
    Sharpening,
    GrayScaleEdge,
    ShadowProjection,
}

impl TemplateName {
    pub const ALL: [TemplateName; 8] = [
        TemplateName::HoleFilling,
        TemplateName::HalfToning,
        TemplateName::Dilation,
        TemplateName::Erosion,
        TemplateName::Smoothing,
        TemplateName::Sharpening,
        TemplateName::GrayScaleEdge,
        TemplateName::ShadowProjection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::HoleFilling => "hole-filling",
            TemplateName::HalfToning => "half-toning",
            TemplateName::Dilation => "dilation",
            TemplateName::Erosion => "erosion",
            TemplateName::Smoothing => "smoothing",
            TemplateName::Sharpening => "sharpening",
            TemplateName::GrayScaleEdge => "gray-scale-edge",
            TemplateName::ShadowProjection => "shadow-projection",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TemplateName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown template '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitRule {
    Zero,
    One,
    FromInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputClass {
    /// Binary input, binary output.
    Binary,
    /// Gray-scale input, binary output.
    BinaryFromGray,
}

/// A template together with the initial state, boundary frame, dynamics and
/// memductance it is run with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NamedTemplate {
    pub name: TemplateName,
    pub template: Template,
    pub init: InitRule,
    pub boundary: Boundary,
    pub output: OutputClass,
    pub dynamics: Dynamics,
    pub profile: Option<MemductanceProfile>,
}

const Z3: [[f64; 3]; 3] = [[0.0; 3]; 3];

fn center(x: f64) -> [[f64; 3]; 3] {
    let mut m = Z3;
    m[1][1] = x;
    m
}

fn cross(edge: f64, mid: f64) -> [[f64; 3]; 3] {
    [[0.0, edge, 0.0], [edge, mid, edge], [0.0, edge, 0.0]]
}

pub fn builtin_template(name: TemplateName) -> NamedTemplate {
    use TemplateName::*;
    let zero = Boundary::zero();
    let dark = Boundary::new(-1.0, -1.0);
    let (template, init, boundary, output, dynamics, profile) = match name {
        HoleFilling => (
            Template::new(cross(1.0, 3.0), center(4.0), -1.0),
            InitRule::One,
            zero,
            OutputClass::Binary,
            Dynamics::Modified,
            None,
        ),
        HalfToning => (
            Template::new(
                [[-0.07, -0.1, -0.07], [-0.1, 1.15, -0.1], [-0.07, -0.1, -0.07]],
                [[0.07, 0.1, 0.07], [0.1, 0.32, 0.1], [0.07, 0.1, 0.07]],
                0.0,
            ),
            InitRule::FromInput,
            zero,
            OutputClass::BinaryFromGray,
            Dynamics::Modified,
            None,
        ),
        Dilation => (
            Template::new(center(2.0), cross(1.0, 1.0), 4.5),
            InitRule::Zero,
            dark,
            OutputClass::Binary,
            Dynamics::Memristor,
            Some(MemductanceProfile::gate()),
        ),
        Erosion => (
            Template::new(center(2.0), cross(1.0, 1.0), -4.5),
            InitRule::Zero,
            dark,
            OutputClass::Binary,
            Dynamics::Memristor,
            Some(MemductanceProfile::refractory()),
        ),
        Smoothing => (
            Template::new(cross(1.0, 2.0), Z3, 0.0),
            InitRule::FromInput,
            zero,
            OutputClass::BinaryFromGray,
            Dynamics::Memristor,
            Some(MemductanceProfile::refractory()),
        ),
        Sharpening => (
            Template::new(center(2.0), cross(-1.0, 5.0), 0.5),
            InitRule::Zero,
            zero,
            OutputClass::BinaryFromGray,
            Dynamics::Memristor,
            Some(MemductanceProfile::gate()),
        ),
        GrayScaleEdge => (
            Template::new(
                center(2.0),
                [[-1.0, -1.0, -1.0], [-1.0, 8.0, -1.0], [-1.0, -1.0, -1.0]],
                -0.5,
            ),
            InitRule::Zero,
            zero,
            OutputClass::BinaryFromGray,
            Dynamics::Modified,
            None,
        ),
        ShadowProjection => {
            let mut a = center(2.0);
            a[1][2] = 2.0;
            (
                Template::new(a, center(2.0), 0.0),
                InitRule::One,
                zero,
                OutputClass::Binary,
                Dynamics::Modified,
                None,
            )
        }
    };
    NamedTemplate {
        name,
        template,
        init,
        boundary,
        output,
        dynamics,
        profile,
    }
}

impl NamedTemplate {
    pub fn initial_state(&self, image: &Image) -> Grid<f64> {
        let (rows, cols) = image.shape();
        match self.init {
            InitRule::Zero => Grid::new(rows, cols, 0.0),
            InitRule::One => Grid::new(rows, cols, 1.0),
            InitRule::FromInput => image.values().clone(),
        }
    }

    /// Lattice with this template's bound dynamics and memductance.
    pub fn lattice(&self, image: Image) -> Result<GridState> {
        self.lattice_with(image, self.dynamics, self.profile)
    }

    /// Lattice with explicitly chosen dynamics and memductance.
    pub fn lattice_with(
        &self,
        image: Image,
        dynamics: Dynamics,
        profile: Option<MemductanceProfile>,
    ) -> Result<GridState> {
        let init = self.initial_state(&image);
        GridState::new(dynamics, self.template, self.boundary, image, init, profile)
    }
}

fn count_undecided(y: &Grid<f64>) -> usize {
    y.iter().filter(|&&v| v == 0.0).count()
}

#[derive(Debug, Clone)]
pub struct HoldResult {
    pub y_before: Grid<f64>,
    pub y_after: Grid<f64>,
    pub held: bool,
    pub record: RunRecord,
}

/// Run a template, cut its coupling at `t_off` and check the output does not
/// change up to `t_end`.
///
/// Modified-dynamics templates are cut by the switch. Memristor templates
/// are left alone: their memristors close by themselves as flux builds up.
pub fn image_holding_run(name: TemplateName, image: Image, t_off: f64, t_end: f64, dt: f64) -> Result<HoldResult> {
    use TemplateName::*;
    if !matches!(
        name,
        GrayScaleEdge | ShadowProjection | Dilation | Sharpening | Smoothing | Erosion
    ) {
        return Err(Error::Unsupported(format!("{name} is not an image-holding template")));
    }
    if !(t_off < t_end) {
        return Err(Error::InvalidParameter(format!("switch-off time {t_off} must precede {t_end}")));
    }
    let nt = builtin_template(name);
    let state = nt.lattice(image)?;
    let mut script = ExperimentScript::new().with_snapshots([t_off, t_end]);
    if nt.dynamics == Dynamics::Modified {
        script = script.with_event(Event::SwitchOff { at: t_off });
    } else {
        script = script.with_gate_log();
    }
    let record = run(state, &script, t_end, dt)?;
    let y_before = record.snapshot(t_off).expect("requested").y.clone();
    let y_after = record.snapshot(t_end).expect("requested").y.clone();
    let undecided = count_undecided(&y_before);
    if undecided > 0 {
        return Err(Error::NotConverged {
            t: t_off,
            cells: undecided,
        });
    }
    Ok(HoldResult {
        held: y_before == y_after,
        y_before,
        y_after,
        record,
    })
}

/// Event times of a store / power-off / recovery / resume cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspendTimes {
    pub store_start: f64,
    /// Store window length `T`. Power goes off when it closes.
    pub store_duration: f64,
    /// Power returns and recovery starts at `t1`.
    pub off_until: f64,
    /// Recovery window length `Δt`.
    pub recovery_duration: f64,
    pub t_end: f64,
}

impl SuspendTimes {
    pub fn hole_filling() -> Self {
        SuspendTimes {
            store_start: 60.0,
            store_duration: 10.0,
            off_until: 120.0,
            recovery_duration: 10.0,
            t_end: 340.0,
        }
    }

    pub fn half_toning() -> Self {
        SuspendTimes {
            store_start: 0.35,
            store_duration: 0.25,
            off_until: 1.0,
            recovery_duration: 0.1,
            t_end: 5.0,
        }
    }

    pub fn for_template(name: TemplateName) -> Result<Self> {
        match name {
            TemplateName::HoleFilling => Ok(Self::hole_filling()),
            TemplateName::HalfToning => Ok(Self::half_toning()),
            other => Err(Error::Unsupported(format!("{other} has no suspend/resume protocol"))),
        }
    }

    pub fn power_off(&self) -> f64 {
        self.store_start + self.store_duration
    }

    pub fn script(&self) -> ExperimentScript {
        ExperimentScript::new()
            .with_event(Event::StoreWindow {
                start: self.store_start,
                duration: self.store_duration,
            })
            .with_event(Event::PowerOff {
                at: self.power_off(),
                until: self.off_until,
            })
            .with_event(Event::RecoveryWindow {
                start: self.off_until,
                duration: self.recovery_duration,
            })
            .with_snapshots([
                self.power_off(),
                self.off_until + self.recovery_duration,
                self.t_end,
            ])
    }
}

/// Flux perturbation applied when the power returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxDecay {
    pub fraction: f64,
    pub epsilon: f64,
    pub mode: DecayMode,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SuspendResult {
    pub y_recovered: Grid<f64>,
    pub y_final: Grid<f64>,
    pub y_uninterrupted: Grid<f64>,
    /// `y_final == y_uninterrupted`, bitwise.
    pub matches: bool,
    pub record: RunRecord,
}

fn check_suspend_template(name: TemplateName) -> Result<NamedTemplate> {
    match name {
        TemplateName::HoleFilling | TemplateName::HalfToning => Ok(builtin_template(name)),
        other => Err(Error::Unsupported(format!("{other} has no suspend/resume protocol"))),
    }
}

/// Final output of the same lattice run without interruption.
pub fn uninterrupted_output(name: TemplateName, image: Image, t_end: f64, dt: f64) -> Result<Grid<f64>> {
    let nt = builtin_template(name);
    let state = nt.lattice(image)?;
    Ok(run(state, &ExperimentScript::new(), t_end, dt)?.final_y)
}

/// Store the output into memristor flux, power down, recover each cell's
/// sign from its flux and resume; compare with an uninterrupted run.
pub fn suspend_resume_run(
    name: TemplateName,
    image: Image,
    times: SuspendTimes,
    decay: Option<FluxDecay>,
    dt: f64,
) -> Result<SuspendResult> {
    let nt = check_suspend_template(name)?;
    if !(times.store_duration > 0.0
        && times.power_off() <= times.off_until
        && times.recovery_duration > 0.0
        && times.off_until + times.recovery_duration <= times.t_end)
    {
        return Err(Error::Script(format!("inconsistent suspend times {times:?}")));
    }
    let mut script = times.script();
    if let Some(d) = decay {
        script = script.with_event(Event::FluxDecay {
            at: times.off_until,
            fraction: d.fraction,
            epsilon: d.epsilon,
            mode: d.mode,
            seed: d.seed,
        });
    }
    let state = nt.lattice(image.clone())?;
    let record = run(state, &script, times.t_end, dt)?;
    let y_uninterrupted = uninterrupted_output(name, image, times.t_end, dt)?;
    let y_recovered = record.recovered_y.clone().expect("script has a recovery window");
    let y_final = record.final_y.clone();
    Ok(SuspendResult {
        matches: y_final == y_uninterrupted,
        y_recovered,
        y_final,
        y_uninterrupted,
        record,
    })
}

#[derive(Debug, Clone)]
pub struct FluxDecayResult {
    pub y_final: Grid<f64>,
    pub y_uninterrupted: Grid<f64>,
    pub matches: bool,
    pub decay_mask: Grid<bool>,
    pub record: RunRecord,
}

/// Suspend/resume with a fraction of the stored fluxes decayed to `±ε` at
/// power-on.
pub fn flux_decay_run(
    name: TemplateName,
    image: Image,
    times: SuspendTimes,
    decay: FluxDecay,
    dt: f64,
) -> Result<FluxDecayResult> {
    let r = suspend_resume_run(name, image, times, Some(decay), dt)?;
    Ok(FluxDecayResult {
        decay_mask: r.record.decay_mask.clone().expect("decay event present"),
        y_final: r.y_final,
        y_uninterrupted: r.y_uninterrupted,
        matches: r.matches,
        record: r.record,
    })
}

#[derive(Debug, Clone)]
pub struct ParasiticResult {
    pub y_g: Grid<f64>,
    pub y_0: Grid<f64>,
    pub identical: bool,
}

/// Two memristor runs differing only in the parasitic conductance `G`.
pub fn parasitic_comparison(name: TemplateName, image: Image, g: f64, t_end: f64, dt: f64) -> Result<ParasiticResult> {
    let nt = builtin_template(name);
    if nt.dynamics != Dynamics::Memristor {
        return Err(Error::Unsupported(format!("{name} does not run on memristor dynamics")));
    }
    let script = ExperimentScript::new();
    let mut with_g = nt.lattice(image.clone())?;
    with_g.set_parasitic(g)?;
    let y_g = run(with_g, &script, t_end, dt)?.final_y;
    let y_0 = run(nt.lattice(image)?, &script, t_end, dt)?.final_y;
    Ok(ParasiticResult {
        identical: y_g == y_0,
        y_g,
        y_0,
    })
}

/// Parameters `(α, β, a, b)` of a wave-band memductance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveBand {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
}

impl WaveBand {
    pub fn profile(&self) -> Result<MemductanceProfile> {
        MemductanceProfile::wave_band(self.alpha, self.beta, self.a, self.b)
    }
}

/// Hole-filling template on the inductor-augmented memristor lattice, with
/// state and input both set to the binary image.
pub fn wave_lattice(image: Image, band: WaveBand) -> Result<GridState> {
    if !image.is_binary() {
        return Err(Error::InvalidParameter("wave runs need a binary image".into()));
    }
    let mut nt = builtin_template(TemplateName::HoleFilling);
    nt.init = InitRule::FromInput;
    nt.lattice_with(image, Dynamics::Wave, Some(band.profile()?))
}

pub fn wave_run(image: Image, band: WaveBand, t_end: f64, snapshot_times: &[f64], dt: f64) -> Result<RunRecord> {
    let state = wave_lattice(image, band)?;
    let script = ExperimentScript::new().with_snapshots(snapshot_times.iter().copied());
    run(state, &script, t_end, dt)
}

/// Binary image of one square ring, `thickness` cells wide, centred in a
/// `size × size` white field, with `margin` white cells outside it.
pub fn ring_image(size: usize, margin: usize, thickness: usize) -> Result<Image> {
    if size == 0 || 2 * (margin + thickness) >= size {
        return Err(Error::InvalidParameter(format!(
            "ring with margin {margin} and thickness {thickness} does not fit in {size}x{size}"
        )));
    }
    let lo = margin;
    let hi = size - 1 - margin;
    Image::from_values(Grid::from_fn(size, size, |r, c| {
        let inside = (lo..=hi).contains(&r) && (lo..=hi).contains(&c);
        let core = (lo + thickness..=hi - thickness).contains(&r) && (lo + thickness..=hi - thickness).contains(&c);
        if inside && !core {
            1.0
        } else {
            -1.0
        }
    }))
}

/// Gray-scale test image: a diagonal ramp from white to black with a darker
/// disc in the upper left quadrant.
pub fn gradient_image(rows: usize, cols: usize) -> Result<Image> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyImage);
    }
    let span = ((rows - 1) + (cols - 1)).max(1) as f64;
    let (cr, cc) = (rows as f64 / 3.0, cols as f64 / 3.0);
    let radius = rows.min(cols) as f64 / 6.0;
    Image::from_values(Grid::from_fn(rows, cols, |r, c| {
        let ramp = -1.0 + 2.0 * (r + c) as f64 / span;
        let d = ((r as f64 - cr).powi(2) + (c as f64 - cc).powi(2)).sqrt();
        if d <= radius {
            (ramp + 0.8).min(1.0)
        } else {
            ramp
        }
    }))
}
