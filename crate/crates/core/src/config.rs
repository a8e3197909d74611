//! Run configuration files.
//!
//! The format is line oriented: `key = value` pairs grouped under
//! `[section]` headers, `#` starting a comment. Keys before the first header
//! belong to `[run]`. Every key is checked, so a misspelt key is an error
//! rather than a silently ignored setting.
//!
//! ```text
//! dt = 0.01
//! t_end = 340
//! template = hole-filling
//! image = ring.pgm
//! snapshots = 70, 130, 340
//!
//! [events]
//! store = 60, 10
//! power_off = 70, 120
//! flux_decay = 120, 0.5, 0.001, preserve
//! recovery = 120, 10
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use crate::device::{Endpoints, MemductanceProfile};
use crate::lattice::{Boundary, DecayMode, Dynamics, Event, ExperimentScript, GridState, Image, Template};
use crate::protocols::{builtin_template, InitRule, NamedTemplate, TemplateName, DEFAULT_DT};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub template: NamedTemplate,
    /// Template values were given in `[template]` rather than by name.
    pub inline: bool,
    pub dynamics: Dynamics,
    pub profile: Option<MemductanceProfile>,
    pub parasitic: f64,
    pub image: Option<PathBuf>,
    pub dt: f64,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub events: Vec<Event>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(line: usize, key: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| err(line, format!("{key}: cannot parse '{}' as a number", s.trim())))
}

fn parse_list(line: usize, key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| parse_num(line, key, t))
        .collect()
}

fn parse_fixed<const N: usize>(line: usize, key: &str, s: &str) -> Result<[f64; N]> {
    let v = parse_list(line, key, s)?;
    v.try_into()
        .map_err(|v: Vec<f64>| err(line, format!("{key}: expected {N} numbers, got {}", v.len())))
}

fn parse_matrix(line: usize, key: &str, s: &str) -> Result<[[f64; 3]; 3]> {
    let v: [f64; 9] = parse_fixed(line, key, s)?;
    Ok([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
}

pub fn parse_dynamics(s: &str) -> Option<Dynamics> {
    match s {
        "standard" => Some(Dynamics::Standard),
        "modified" => Some(Dynamics::Modified),
        "memristor" => Some(Dynamics::Memristor),
        "wave" => Some(Dynamics::Wave),
        _ => None,
    }
}

pub fn dynamics_name(d: Dynamics) -> &'static str {
    match d {
        Dynamics::Standard => "standard",
        Dynamics::Modified => "modified",
        Dynamics::Memristor => "memristor",
        Dynamics::Wave => "wave",
    }
}

#[derive(Default)]
struct Raw {
    run: Vec<(usize, String, String)>,
    template: Vec<(usize, String, String)>,
    memductance: Vec<(usize, String, String)>,
    events: Vec<(usize, String, String)>,
}

fn split(text: &str) -> Result<Raw> {
    let mut raw = Raw::default();
    let mut section = "run".to_string();
    for (k, full) in text.lines().enumerate() {
        let line = k + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("unterminated section header '{content}'")))?
                .trim();
            if !matches!(name, "run" | "template" | "memductance" | "events") {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            return Err(err(line, "empty key"));
        }
        let bucket = match section.as_str() {
            "run" => &mut raw.run,
            "template" => &mut raw.template,
            "memductance" => &mut raw.memductance,
            _ => &mut raw.events,
        };
        if section != "events" {
            if let Some((first, ..)) = bucket.iter().find(|(_, k, _)| *k == key) {
                return Err(err(line, format!("duplicate key '{key}' (first set on line {first})")));
            }
        }
        bucket.push((line, key, value));
    }
    Ok(raw)
}

fn lookup<'a>(entries: &'a [(usize, String, String)], key: &str) -> Option<(usize, &'a str)> {
    entries.iter().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()))
}

fn check_keys(entries: &[(usize, String, String)], section: &str, allowed: &[&str]) -> Result<()> {
    for (line, key, _) in entries {
        if !allowed.contains(&key.as_str()) {
            return Err(err(*line, format!("unknown key '{key}' in [{section}]")));
        }
    }
    Ok(())
}

fn parse_profile(entries: &[(usize, String, String)]) -> Result<Option<MemductanceProfile>> {
    check_keys(
        entries,
        "memductance",
        &["kind", "lo", "hi", "on", "endpoints", "inner", "outer", "alpha", "beta", "a", "b"],
    )?;
    let Some((kline, kind)) = lookup(entries, "kind") else {
        if let Some((line, _, _)) = entries.first() {
            return Err(err(*line, "[memductance] needs a 'kind'"));
        }
        return Ok(None);
    };
    let num = |key: &str, default: Option<f64>| -> Result<f64> {
        match lookup(entries, key) {
            Some((l, v)) => parse_num(l, key, v),
            None => default.ok_or_else(|| err(kline, format!("{kind} memductance needs '{key}'"))),
        }
    };
    let allowed: &[&str] = match kind {
        "window" => &["kind", "lo", "hi", "on", "endpoints"],
        "twin-peak" => &["kind", "inner", "outer"],
        "ramp-store" => &["kind"],
        "wave-band" => &["kind", "alpha", "beta", "a", "b"],
        other => return Err(err(kline, format!("unknown memductance kind '{other}'"))),
    };
    check_keys(entries, &format!("memductance] of kind [{kind}"), allowed)?;
    let profile = match kind {
        "window" => {
            let endpoints = match lookup(entries, "endpoints") {
                None | Some((_, "closed")) => Endpoints::Closed,
                Some((_, "open")) => Endpoints::Open,
                Some((l, other)) => return Err(err(l, format!("endpoints must be closed or open, got '{other}'"))),
            };
            MemductanceProfile::window(num("lo", None)?, num("hi", None)?, num("on", Some(1.0))?, endpoints)
        }
        "twin-peak" => MemductanceProfile::twin_peak(num("inner", Some(2.0))?, num("outer", Some(10.0))?),
        "ramp-store" => Ok(MemductanceProfile::RampStore),
        _ => MemductanceProfile::wave_band(num("alpha", None)?, num("beta", None)?, num("a", None)?, num("b", None)?),
    };
    profile.map(Some).map_err(|e| err(kline, e.to_string()))
}

fn parse_events(entries: &[(usize, String, String)], seed: u64) -> Result<Vec<Event>> {
    let mut out = Vec::with_capacity(entries.len());
    for (line, key, value) in entries {
        let line = *line;
        let ev = match key.as_str() {
            "switch_off" => Event::SwitchOff {
                at: parse_num(line, key, value)?,
            },
            "switch_on" => Event::SwitchOn {
                at: parse_num(line, key, value)?,
            },
            "resume" => Event::ResumeAt {
                at: parse_num(line, key, value)?,
            },
            "power_off" => {
                let [at, until] = parse_fixed(line, key, value)?;
                Event::PowerOff { at, until }
            }
            "store" => {
                let [start, duration] = parse_fixed(line, key, value)?;
                Event::StoreWindow { start, duration }
            }
            "recovery" => {
                let [start, duration] = parse_fixed(line, key, value)?;
                Event::RecoveryWindow { start, duration }
            }
            "parasitic" => {
                let [at, g] = parse_fixed(line, key, value)?;
                Event::SetParasitic { at, g }
            }
            "flux_decay" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 4 {
                    return Err(err(line, "flux_decay = <time>, <fraction>, <epsilon>, <preserve|flip>"));
                }
                let mode = match parts[3] {
                    "preserve" => DecayMode::Preserve,
                    "flip" => DecayMode::Flip,
                    other => return Err(err(line, format!("decay mode must be preserve or flip, got '{other}'"))),
                };
                Event::FluxDecay {
                    at: parse_num(line, key, parts[0])?,
                    fraction: parse_num(line, key, parts[1])?,
                    epsilon: parse_num(line, key, parts[2])?,
                    mode,
                    seed,
                }
            }
            other => return Err(err(line, format!("unknown event kind '{other}'"))),
        };
        out.push(ev);
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw = split(text)?;
    check_keys(
        &raw.run,
        "run",
        &["template", "dynamics", "image", "dt", "t_end", "snapshots", "seed", "out", "parasitic"],
    )?;
    check_keys(&raw.template, "template", &["a", "b", "z", "init", "boundary_v", "boundary_u"])?;

    let (tline, tname) = lookup(&raw.run, "template")
        .ok_or_else(|| err(0, "missing required key 'template'"))?;
    let mut template = if tname == "inline" {
        NamedTemplate {
            template: Template::zero(),
            init: InitRule::Zero,
            boundary: Boundary::zero(),
            ..builtin_template(TemplateName::HoleFilling)
        }
    } else {
        builtin_template(TemplateName::from_str(tname).map_err(|e| err(tline, e.to_string()))?)
    };
    if tname == "inline" {
        for key in ["a", "b", "z"] {
            if lookup(&raw.template, key).is_none() {
                return Err(err(tline, format!("inline template needs '{key}' in [template]")));
            }
        }
    }
    if let Some((l, v)) = lookup(&raw.template, "a") {
        template.template.a = parse_matrix(l, "a", v)?;
    }
    if let Some((l, v)) = lookup(&raw.template, "b") {
        template.template.b = parse_matrix(l, "b", v)?;
    }
    if let Some((l, v)) = lookup(&raw.template, "z") {
        template.template.z = parse_num(l, "z", v)?;
    }
    if let Some((l, v)) = lookup(&raw.template, "init") {
        template.init = match v {
            "zero" => InitRule::Zero,
            "one" => InitRule::One,
            "input" => InitRule::FromInput,
            other => return Err(err(l, format!("init must be zero, one or input, got '{other}'"))),
        };
    }
    if let Some((l, v)) = lookup(&raw.template, "boundary_v") {
        template.boundary.v0 = parse_num(l, "boundary_v", v)?;
    }
    if let Some((l, v)) = lookup(&raw.template, "boundary_u") {
        template.boundary.u0 = parse_num(l, "boundary_u", v)?;
    }

    let dynamics = match lookup(&raw.run, "dynamics") {
        Some((l, v)) => parse_dynamics(v).ok_or_else(|| err(l, format!("unknown dynamics '{v}'")))?,
        None => template.dynamics,
    };
    let profile = match parse_profile(&raw.memductance)? {
        Some(p) => Some(p),
        None if dynamics == template.dynamics => template.profile,
        None => None,
    };
    if dynamics.uses_memristor() && profile.is_none() {
        return Err(err(tline, format!("{} dynamics needs a [memductance] section", dynamics_name(dynamics))));
    }

    let dt = match lookup(&raw.run, "dt") {
        Some((l, v)) => {
            let dt: f64 = parse_num(l, "dt", v)?;
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(err(l, "dt must be positive"));
            }
            dt
        }
        None => DEFAULT_DT,
    };
    let (eline, t_end) = match lookup(&raw.run, "t_end") {
        Some((l, v)) => (l, parse_num::<f64>(l, "t_end", v)?),
        None => return Err(err(0, "missing required key 't_end'")),
    };
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(err(eline, "t_end must be non-negative"));
    }
    let snapshots = match lookup(&raw.run, "snapshots") {
        Some((l, v)) => {
            let s = parse_list(l, "snapshots", v)?;
            if let Some(t) = s.iter().find(|t| !(0.0..=t_end).contains(*t)) {
                return Err(err(l, format!("snapshot time {t} outside [0, {t_end}]")));
            }
            s
        }
        None => Vec::new(),
    };
    let seed = match lookup(&raw.run, "seed") {
        Some((l, v)) => parse_num(l, "seed", v)?,
        None => 0,
    };
    let parasitic = match lookup(&raw.run, "parasitic") {
        Some((l, v)) => {
            let g: f64 = parse_num(l, "parasitic", v)?;
            if !(g >= 0.0 && g.is_finite()) {
                return Err(err(l, "parasitic must be non-negative"));
            }
            g
        }
        None => 0.0,
    };
    let events = parse_events(&raw.events, seed)?;

    Ok(RunConfig {
        template,
        inline: tname == "inline",
        dynamics,
        profile,
        parasitic,
        image: lookup(&raw.run, "image").map(|(_, v)| PathBuf::from(v)),
        dt,
        t_end,
        snapshots,
        events,
        seed,
        out: lookup(&raw.run, "out").map(|(_, v)| PathBuf::from(v)),
    })
}

impl RunConfig {
    pub fn script(&self) -> ExperimentScript {
        ExperimentScript {
            events: self.events.clone(),
            snapshots: self.snapshots.clone(),
            log_gates: false,
        }
    }

    pub fn lattice(&self, image: Image) -> Result<GridState> {
        let mut state = self.template.lattice_with(image, self.dynamics, self.profile)?;
        if self.dynamics.uses_memristor() {
            state.set_parasitic(self.parasitic)?;
        }
        Ok(state)
    }

    /// Resolved settings as `key = value` lines, defaults included.
    pub fn manifest(&self) -> Vec<(String, String)> {
        let t = &self.template.template;
        let flat = |m: &[[f64; 3]; 3]| m.iter().flatten().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = vec![
            (
                "template".to_string(),
                if self.inline { "inline".to_string() } else { self.template.name.to_string() },
            ),
            ("template.a".to_string(), flat(&t.a)),
            ("template.b".to_string(), flat(&t.b)),
            ("template.z".to_string(), t.z.to_string()),
            (
                "template.init".to_string(),
                match self.template.init {
                    InitRule::Zero => "zero",
                    InitRule::One => "one",
                    InitRule::FromInput => "input",
                }
                .to_string(),
            ),
            ("boundary_v".to_string(), self.template.boundary.v0.to_string()),
            ("boundary_u".to_string(), self.template.boundary.u0.to_string()),
            ("dynamics".to_string(), dynamics_name(self.dynamics).to_string()),
            (
                "memductance".to_string(),
                self.profile.map_or("none".to_string(), |p| format!("{p:?}")),
            ),
            ("parasitic".to_string(), self.parasitic.to_string()),
            (
                "image".to_string(),
                self.image.as_ref().map_or("none".to_string(), |p| p.display().to_string()),
            ),
            ("dt".to_string(), self.dt.to_string()),
            ("t_end".to_string(), self.t_end.to_string()),
            (
                "snapshots".to_string(),
                self.snapshots.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", "),
            ),
            ("seed".to_string(), self.seed.to_string()),
        ];
        for (k, ev) in self.events.iter().enumerate() {
            out.push((format!("event.{k}"), format!("{ev:?}")));
        }
        out
    }
}
