//! Scenario files: schema, defaults and validation.
//!
//! Energies are in eV, lengths in Å, times in fs; waveguide blocks are in cm.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tuntime::{PiecewisePotential, Segment, UnitSystem};

/// A config problem, tagged with the key path that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    PhaseTime,
    BlTime,
    Dwell,
    OrTimes,
    Causality,
    TwoPhase,
    DoubleBarrierScan,
    HartmanScan,
    Waveguide,
}

impl Observable {
    pub const ALL: [Observable; 9] = [
        Observable::PhaseTime,
        Observable::BlTime,
        Observable::Dwell,
        Observable::OrTimes,
        Observable::Causality,
        Observable::TwoPhase,
        Observable::DoubleBarrierScan,
        Observable::HartmanScan,
        Observable::Waveguide,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::PhaseTime => "phase-time",
            Observable::BlTime => "bl-time",
            Observable::Dwell => "dwell",
            Observable::OrTimes => "or-times",
            Observable::Causality => "causality",
            Observable::TwoPhase => "two-phase",
            Observable::DoubleBarrierScan => "double-barrier-scan",
            Observable::HartmanScan => "hartman-scan",
            Observable::Waveguide => "waveguide",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Observable::PhaseTime => "stationary phase time across the outer barrier edges",
            Observable::BlTime => "Büttiker–Landauer time (sub-barrier energies only)",
            Observable::Dwell => "stationary dwell time over the barrier",
            Observable::OrTimes => "packet flux times: tunnelling duration, entry/exit instants, dwell",
            Observable::Causality => "integral, delay and effective-instant causality checks",
            Observable::TwoPhase => "times from the two-phase form of a single rectangular barrier",
            Observable::DoubleBarrierScan => "total phase time of a double barrier with resonance flags",
            Observable::HartmanScan => "phase, BL and dwell times against the barrier width",
            Observable::Waveguide => "evanescent TE-mode phase time and its mapped barrier",
        }
    }

    /// True when rows are produced per packet rather than per energy.
    pub fn uses_packets(self) -> bool {
        matches!(self, Observable::OrTimes | Observable::Causality)
    }

    pub fn uses_energy(self) -> bool {
        !matches!(self, Observable::Waveguide) && !self.uses_packets()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Single { v0: f64, a: f64 },
    Double { v0: f64, a: f64, l: f64 },
    Custom { segments: Vec<SegmentSpec> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub x_start: f64,
    pub x_end: f64,
    pub height: f64,
}

impl PotentialSpec {
    pub fn family(&self) -> &'static str {
        match self {
            PotentialSpec::Single { .. } => "single",
            PotentialSpec::Double { .. } => "double",
            PotentialSpec::Custom { .. } => "custom",
        }
    }

    pub fn build(&self) -> tuntime::Result<PiecewisePotential> {
        match self {
            PotentialSpec::Single { v0, a } => PiecewisePotential::rectangular(*v0, *a),
            PotentialSpec::Double { v0, a, l } => PiecewisePotential::double_rectangular(*v0, *a, *l),
            PotentialSpec::Custom { segments } => PiecewisePotential::new(
                segments
                    .iter()
                    .map(|s| Segment {
                        x_start: s.x_start,
                        x_end: s.x_end,
                        height: s.height,
                    })
                    .collect(),
            ),
        }
    }

    fn parameters(&self) -> &'static [&'static str] {
        match self {
            PotentialSpec::Single { .. } => &["v0", "a"],
            PotentialSpec::Double { .. } => &["v0", "a", "l", "gap"],
            PotentialSpec::Custom { .. } => &[],
        }
    }

    /// Sets a named parameter; `gap` moves the second barrier to L = a + gap.
    pub fn set(&mut self, name: &str, value: f64) {
        match (self, name) {
            (PotentialSpec::Single { v0, .. } | PotentialSpec::Double { v0, .. }, "v0") => *v0 = value,
            (PotentialSpec::Single { a, .. }, "a") => *a = value,
            (PotentialSpec::Double { a, l, .. }, "a") => {
                let gap = *l - *a;
                *a = value;
                *l = value + gap;
            }
            (PotentialSpec::Double { l, .. }, "l") => *l = value,
            (PotentialSpec::Double { a, l, .. }, "gap") => *l = *a + value,
            _ => {}
        }
    }

    fn min_height(&self) -> f64 {
        match self {
            PotentialSpec::Single { v0, .. } | PotentialSpec::Double { v0, .. } => *v0,
            PotentialSpec::Custom { segments } => segments.iter().map(|s| s.height).fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    /// Mean energy Ē; give this or `k_bar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_bar: Option<f64>,
    pub delta_k: f64,
    /// Keep only sub-barrier components.
    #[serde(default = "default_true")]
    pub cutoff: bool,
    #[serde(default = "default_n_k")]
    pub n_k: usize,
    /// Distance upstream of x = 0 at which the free packet is focused at t = 0.
    #[serde(default)]
    pub standoff: f64,
}

fn default_true() -> bool {
    true
}

fn default_n_k() -> usize {
    tuntime::wavepacket::DEFAULT_NK
}

impl PacketSpec {
    fn gaussian_packet(energy: f64, delta_k: f64) -> Self {
        Self {
            energy: Some(energy),
            k_bar: None,
            delta_k,
            cutoff: true,
            n_k: default_n_k(),
            standoff: 0.0,
        }
    }

    pub fn k_bar(&self, units: &UnitSystem) -> f64 {
        match (self.k_bar, self.energy) {
            (Some(k), _) => k,
            (None, Some(e)) => units.wavenumber(e),
            (None, None) => f64::NAN,
        }
    }

    pub fn mean_energy(&self, units: &UnitSystem) -> f64 {
        units.energy(self.k_bar(units))
    }
}

/// The five (Ē, Δk) combinations used as the default packet family.
pub fn default_packets() -> Vec<PacketSpec> {
    [(2.5, 0.02), (5.0, 0.02), (7.5, 0.02), (5.0, 0.04), (5.0, 0.06)]
        .iter()
        .map(|&(e, dk)| PacketSpec::gaussian_packet(e, dk))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl ScanAxis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideBlock {
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_one")]
    pub m: u32,
    #[serde(default)]
    pub n: u32,
    pub l: f64,
    pub lambda: f64,
}

fn default_one() -> u32 {
    1
}

impl WaveguideBlock {
    pub fn set(&mut self, name: &str, value: f64) {
        match name {
            "waveguide.a" => self.a = value,
            "waveguide.b" => self.b = value,
            "waveguide.l" => self.l = value,
            "waveguide.lambda" => self.lambda = value,
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub potential: PotentialSpec,
    /// Stationary energy for per-energy observables.
    #[serde(default = "default_energy")]
    pub energy: f64,
    #[serde(default = "default_packets")]
    pub packets: Vec<PacketSpec>,
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub scan: Vec<ScanAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waveguide: Option<WaveguideBlock>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_energy() -> f64 {
    5.0
}

const REQUIRED: [&str; 2] = ["potential", "observables"];

/// Reads, parses and validates a scenario file.
pub fn load(path: &Path) -> Result<(Scenario, Value), Vec<ConfigError>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![ConfigError::new("", format!("cannot read {}: {e}", path.display()))])?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<(Scenario, Value), Vec<ConfigError>> {
    let raw: Value = serde_json::from_str(text).map_err(|e| vec![ConfigError::new("", format!("not valid JSON: {e}"))])?;
    let Some(obj) = raw.as_object() else {
        return Err(vec![ConfigError::new("", "top level must be an object")]);
    };
    let missing: Vec<ConfigError> = REQUIRED
        .iter()
        .filter(|k| !obj.contains_key(**k))
        .map(|k| ConfigError::new(*k, "required key is missing"))
        .collect();
    if !missing.is_empty() {
        return Err(missing);
    }
    let scenario: Scenario = serde_path_to_error::deserialize(&raw).map_err(|e| {
        let path = e.path().to_string();
        vec![ConfigError::new(if path == "." { String::new() } else { path }, e.into_inner().to_string())]
    })?;
    let errors = validate(&scenario);
    if errors.is_empty() {
        Ok((scenario, raw))
    } else {
        Err(errors)
    }
}

fn positive(errors: &mut Vec<ConfigError>, path: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        errors.push(ConfigError::new(path, format!("must be a positive number, got {v}")));
    }
}

/// Schema and physics checks that need no computation.
pub fn validate(s: &Scenario) -> Vec<ConfigError> {
    let mut errors = Vec::new();
    let units = UnitSystem::electron();

    match &s.potential {
        PotentialSpec::Single { v0, a } => {
            positive(&mut errors, "potential.v0", *v0);
            positive(&mut errors, "potential.a", *a);
        }
        PotentialSpec::Double { v0, a, l } => {
            positive(&mut errors, "potential.v0", *v0);
            positive(&mut errors, "potential.a", *a);
            if !(l >= a) {
                errors.push(ConfigError::new("potential.l", format!("second barrier must start at L ≥ a, got L = {l}")));
            }
        }
        PotentialSpec::Custom { segments } => {
            if segments.is_empty() {
                errors.push(ConfigError::new("potential.segments", "needs at least one segment"));
            }
            if let Err(e) = s.potential.build() {
                errors.push(ConfigError::new("potential.segments", e.to_string()));
            }
        }
    }

    if s.observables.is_empty() {
        errors.push(ConfigError::new("observables", "list at least one observable"));
    }
    let uses_energy = s.observables.iter().any(|o| o.uses_energy());
    if uses_energy {
        positive(&mut errors, "energy", s.energy);
    }

    let mut allowed: Vec<&str> = s.potential.parameters().to_vec();
    allowed.extend(["energy", "delta_k"]);
    if s.waveguide.is_some() {
        allowed.extend(["waveguide.a", "waveguide.b", "waveguide.l", "waveguide.lambda"]);
    }
    for (i, axis) in s.scan.iter().enumerate() {
        let p = format!("scan[{i}]");
        if !allowed.contains(&axis.name.as_str()) {
            errors.push(ConfigError::new(
                format!("{p}.name"),
                format!("`{}` is not a parameter of a {} scenario (allowed: {})", axis.name, s.potential.family(), allowed.join(", ")),
            ));
        }
        if !(axis.min.is_finite() && axis.max.is_finite() && axis.min < axis.max) {
            errors.push(ConfigError::new(p.clone(), format!("range needs min < max, got ({}, {})", axis.min, axis.max)));
        }
        if axis.steps < 2 {
            errors.push(ConfigError::new(format!("{p}.steps"), format!("must be at least 2, got {}", axis.steps)));
        }
        if s.scan[..i].iter().any(|b| b.name == axis.name) {
            errors.push(ConfigError::new(format!("{p}.name"), format!("`{}` is scanned twice", axis.name)));
        }
    }

    if s.observables.iter().any(|o| o.uses_packets()) {
        if s.packets.is_empty() {
            errors.push(ConfigError::new("packets", "packet observables need at least one packet"));
        }
        let vmin = s.potential.min_height();
        for (i, p) in s.packets.iter().enumerate() {
            let path = format!("packets[{i}]");
            match (p.energy, p.k_bar) {
                (Some(_), Some(_)) => errors.push(ConfigError::new(&path, "give either `energy` or `k_bar`, not both")),
                (None, None) => errors.push(ConfigError::new(&path, "needs `energy` or `k_bar`")),
                (Some(e), None) => positive(&mut errors, &format!("{path}.energy"), e),
                (None, Some(k)) => positive(&mut errors, &format!("{path}.k_bar"), k),
            }
            positive(&mut errors, &format!("{path}.delta_k"), p.delta_k);
            let kb = p.k_bar(&units);
            if kb.is_finite() && !(kb > 6.0 * p.delta_k) {
                errors.push(ConfigError::new(
                    format!("{path}.delta_k"),
                    format!("packet needs k̄ > 6Δk (k̄ = {kb}, Δk = {})", p.delta_k),
                ));
            }
            if p.cutoff && kb.is_finite() && !(p.mean_energy(&units) < vmin) {
                errors.push(ConfigError::new(
                    format!("{path}.energy"),
                    format!("with `cutoff` the mean energy {} eV must lie below the barrier ({vmin} eV)", p.mean_energy(&units)),
                ));
            }
            if p.n_k < 128 {
                errors.push(ConfigError::new(format!("{path}.n_k"), "needs at least 128 k-nodes"));
            }
            if !(p.standoff.is_finite() && p.standoff >= 0.0) {
                errors.push(ConfigError::new(format!("{path}.standoff"), "must be ≥ 0"));
            }
        }
    }

    let scanned = |n: &str| s.scan.iter().any(|a| a.name == n);
    for &o in &s.observables {
        match o {
            Observable::HartmanScan | Observable::TwoPhase if !matches!(s.potential, PotentialSpec::Single { .. }) => {
                errors.push(ConfigError::new("observables", format!("`{}` needs a single barrier", o.name())));
            }
            Observable::DoubleBarrierScan if !matches!(s.potential, PotentialSpec::Double { .. }) => {
                errors.push(ConfigError::new("observables", "`double-barrier-scan` needs a double barrier"));
            }
            Observable::Waveguide if s.waveguide.is_none() => {
                errors.push(ConfigError::new("waveguide", "`waveguide` observable needs a waveguide block"));
            }
            _ => {}
        }
        if o == Observable::HartmanScan && !scanned("a") {
            errors.push(ConfigError::new("scan", "`hartman-scan` needs a scan axis named `a`"));
        }
    }
    if let Some(w) = &s.waveguide {
        if let Err(e) = tuntime::emguide::WaveguideSpec::new(w.a, w.b, w.m, w.n, w.l, w.lambda) {
            errors.push(ConfigError::new("waveguide", e.to_string()));
        }
    }
    errors
}
