//! TOML experiment description. Frequencies are given in Hz and converted to
//! angular frequencies here; times in s, fields in T. See `docs/config.md`
//! for the full schema.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ionsps::atom::{
    AtomicConstants, DetectionGeometry, DetectionMode, Envelope, FieldEnvironment, LaserField, LevelScheme,
    Polarization, Transition,
};
use ionsps::bloch::{photon_wavepacket, InitialState, PulseSequence, Segment, WavepacketDensity};
use ionsps::calibrate::{Bounds, FitParams, Mask, ScanModel};
use ionsps::detect::{Configuration, DetectorModel, ModeEfficiencies, RunConfig, SourceModel};
use ionsps::tags::Channel;
use ionsps::C64;
use nalgebra::Vector3;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub atom: AtomSection,
    pub field: Option<FieldSection>,
    pub cooling: Option<LaserSection>,
    pub repump: Option<LaserSection>,
    #[serde(default)]
    pub detection: DetectionSection,
    pub sequence: Option<SequenceSection>,
    pub scan: Option<ScanSection>,
    pub fit: Option<FitSection>,
    pub source: Option<SourceSection>,
    pub detectors: Option<DetectorsSection>,
    pub run: Option<RunSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Overrides of the ¹³⁸Ba⁺ defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    pub lande_s: Option<f64>,
    pub lande_p: Option<f64>,
    pub lande_d: Option<f64>,
    pub gamma_ps_hz: Option<f64>,
    pub gamma_pd_hz: Option<f64>,
    pub wavelength_ps_m: Option<f64>,
    pub wavelength_pd_m: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub magnitude_t: f64,
    /// Normalized on load.
    #[serde(default = "z_axis")]
    pub direction: [f64; 3],
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserSection {
    pub rabi_hz: f64,
    #[serde(default)]
    pub detuning_hz: f64,
    #[serde(default)]
    pub polarization: PolarizationSection,
}

/// Either angles relative to the field (major axis θ from B, ellipticity χ)
/// or explicit spherical components (σ⁻, π, σ⁺) as [re, im] pairs.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarizationSection {
    pub theta: Option<f64>,
    pub chi: Option<f64>,
    pub spherical: Option<[[f64; 2]; 3]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum DetectionKind {
    #[default]
    All,
    Directional,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    #[serde(default)]
    pub mode: DetectionKind,
    pub direction: Option<[f64; 3]>,
    /// Linear analyzer axis, transverse to `direction`.
    pub analyzer: Option<[f64; 3]>,
    pub efficiency: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    #[default]
    UniformShelved,
    Simulated,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSection {
    #[serde(default = "default_cooling_s")]
    pub cooling_s: f64,
    #[serde(default = "default_pumping_s")]
    pub pumping_s: f64,
    #[serde(default = "default_dark_s")]
    pub dark_s: f64,
    /// Repump-on time after the trigger; defaults to `window_s`.
    pub emission_s: Option<f64>,
    pub window_s: f64,
    #[serde(default = "default_dt_s")]
    pub dt_s: f64,
    #[serde(default = "default_rise_s")]
    pub repump_rise_s: f64,
    #[serde(default)]
    pub initial: InitialKind,
}

fn default_cooling_s() -> f64 {
    2e-6
}
fn default_pumping_s() -> f64 {
    1e-6
}
fn default_dark_s() -> f64 {
    500e-9
}
fn default_dt_s() -> f64 {
    1e-9
}
fn default_rise_s() -> f64 {
    90e-9
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
}

/// Bounds in configuration units; unset entries keep the defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub omega_g_hz: Option<f64>,
    pub omega_r_hz: Option<f64>,
    pub delta_g_hz: Option<f64>,
    pub theta: Option<f64>,
    pub chi: Option<f64>,
    pub field_t: Option<f64>,
    pub scale: Option<f64>,
    pub background_cps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Names from `omega_g, omega_r, delta_g, theta, chi, field, scale, background`.
    pub free: Vec<String>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub background_cps: f64,
    #[serde(default)]
    pub lower: BoundSection,
    #[serde(default)]
    pub upper: BoundSection,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ArrivalSection {
    Exponential { tau_s: f64 },
    /// Bloch-simulated wavepacket from `[sequence]` and the lasers.
    Simulated,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    #[serde(default = "one")]
    pub p_emit: f64,
    #[serde(default)]
    pub p_multi: f64,
    /// Reflected configuration: single mode efficiency.
    pub eta: Option<f64>,
    /// Symmetric configuration: the two mode efficiencies.
    pub eta_1: Option<f64>,
    pub eta_2: Option<f64>,
    pub arrival: ArrivalSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub quantum_efficiency: f64,
    #[serde(default)]
    pub dark_rate_cps: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorsSection {
    pub a: DetectorSection,
    pub b: DetectorSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "reflected")]
    pub configuration: Configuration,
    pub period_s: Option<f64>,
    pub rate_hz: Option<f64>,
    pub window_s: f64,
    pub n_triggers: u64,
    #[serde(default)]
    pub seed: u64,
}

fn reflected() -> Configuration {
    Configuration::Reflected
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

fn missing(section: &str, command: &str) -> CliError {
    CliError::Config(format!("section [{section}] is required by `{command}`"))
}

fn unit_vector(v: [f64; 3], what: &str) -> CliResult<Vector3<f64>> {
    let v = Vector3::from(v);
    let n = v.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(CliError::Config(format!("{what} must be a non-zero vector")));
    }
    Ok(v / n)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn scheme(&self) -> CliResult<LevelScheme> {
        let a = &self.atom;
        let d = AtomicConstants::default();
        LevelScheme::new(AtomicConstants {
            lande_s: a.lande_s.unwrap_or(d.lande_s),
            lande_p: a.lande_p.unwrap_or(d.lande_p),
            lande_d: a.lande_d.unwrap_or(d.lande_d),
            gamma_ps: a.gamma_ps_hz.map_or(d.gamma_ps, |v| TWO_PI * v),
            gamma_pd: a.gamma_pd_hz.map_or(d.gamma_pd, |v| TWO_PI * v),
            wavelength_ps: a.wavelength_ps_m.unwrap_or(d.wavelength_ps),
            wavelength_pd: a.wavelength_pd_m.unwrap_or(d.wavelength_pd),
        })
        .map_err(CliError::config)
    }

    pub fn environment(&self, command: &str) -> CliResult<FieldEnvironment> {
        let f = self.field.as_ref().ok_or_else(|| missing("field", command))?;
        FieldEnvironment::new(f.magnitude_t, unit_vector(f.direction, "field.direction")?).map_err(CliError::config)
    }

    fn laser(&self, transition: Transition, command: &str) -> CliResult<LaserField> {
        let (name, section) = match transition {
            Transition::Cooling => ("cooling", &self.cooling),
            Transition::Repump => ("repump", &self.repump),
        };
        let s = section.as_ref().ok_or_else(|| missing(name, command))?;
        let pol = polarization(&s.polarization, name)?;
        let laser = LaserField::new(transition, TWO_PI * s.rabi_hz, TWO_PI * s.detuning_hz, pol);
        laser.validate().map_err(|e| CliError::Config(format!("[{name}]: {e}")))?;
        Ok(laser)
    }

    pub fn cooling(&self, command: &str) -> CliResult<LaserField> {
        self.laser(Transition::Cooling, command)
    }

    pub fn repump(&self, command: &str) -> CliResult<LaserField> {
        self.laser(Transition::Repump, command)
    }

    pub fn detection_mode(&self) -> CliResult<DetectionMode> {
        let d = &self.detection;
        match d.mode {
            DetectionKind::All => Ok(DetectionMode::AllModes),
            DetectionKind::Directional => {
                let need = |v: Option<[f64; 3]>, what: &str| {
                    v.ok_or_else(|| CliError::Config(format!("directional detection needs detection.{what}")))
                };
                let dir = unit_vector(need(d.direction, "direction")?, "detection.direction")?;
                let ana = unit_vector(need(d.analyzer, "analyzer")?, "detection.analyzer")?;
                let geometry =
                    DetectionGeometry::linear(dir, ana, d.efficiency.unwrap_or(1.0)).map_err(CliError::config)?;
                Ok(DetectionMode::Directional(geometry))
            }
        }
    }

    pub fn sequence(&self, command: &str) -> CliResult<(PulseSequence, &SequenceSection)> {
        let s = self.sequence.as_ref().ok_or_else(|| missing("sequence", command))?;
        let cooling = self.cooling(command)?;
        let repump = self.repump(command)?;
        if !(s.repump_rise_s > 0.0) {
            return Err(CliError::Config("sequence.repump_rise_s must be positive".into()));
        }
        let ramp = Envelope::ErfRamp { t_half: 1.5 * s.repump_rise_s, rise: s.repump_rise_s };
        let seq = PulseSequence {
            segments: vec![
                Segment { duration: s.cooling_s, lasers: vec![cooling, repump] },
                Segment { duration: s.pumping_s, lasers: vec![cooling] },
                Segment { duration: s.dark_s, lasers: vec![] },
                Segment { duration: s.emission_s.unwrap_or(s.window_s), lasers: vec![repump.with_envelope(ramp)] },
            ],
            trigger: 3,
            initial: match s.initial {
                InitialKind::UniformShelved => InitialState::UniformShelved,
                InitialKind::Simulated => InitialState::Simulated,
            },
        };
        seq.validate().map_err(CliError::config)?;
        Ok((seq, s))
    }

    /// Repump detuning grid in Hz; command-line values take precedence.
    pub fn scan_grid(&self, start: Option<f64>, stop: Option<f64>, points: Option<usize>) -> CliResult<Vec<f64>> {
        let s = self.scan.as_ref();
        let pick = |flag: Option<f64>, cfg: Option<f64>, what: &str| {
            flag.or(cfg).ok_or_else(|| CliError::Config(format!("scan {what} not given in [scan] or on the command line")))
        };
        let start = pick(start, s.map(|s| s.start_hz), "start")?;
        let n = points.or(s.map(|s| s.points)).ok_or_else(|| CliError::Config("scan points not given".into()))?;
        if n == 0 {
            return Err(CliError::Config("scan grid is empty (points = 0)".into()));
        }
        if n == 1 {
            return Ok(vec![start]);
        }
        let stop = pick(stop, s.map(|s| s.stop_hz), "stop")?;
        Ok((0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect())
    }

    pub fn scan_model(&self, command: &str) -> CliResult<ScanModel> {
        let f = self.field.as_ref().ok_or_else(|| missing("field", command))?;
        Ok(ScanModel::new(self.scheme()?, unit_vector(f.direction, "field.direction")?, self.detection_mode()?))
    }

    /// Initial guess, bounds and mask for `fit`. The guess is read from the
    /// laser sections; both lasers must use the cooling beam's angles.
    pub fn fit_setup(&self, free_override: Option<&[String]>) -> CliResult<(FitParams, Bounds, Mask)> {
        let cmd = "fit";
        let fit = self.fit.as_ref().ok_or_else(|| missing("fit", cmd))?;
        let cooling = self.cooling.as_ref().ok_or_else(|| missing("cooling", cmd))?;
        let repump = self.repump.as_ref().ok_or_else(|| missing("repump", cmd))?;
        let field = self.field.as_ref().ok_or_else(|| missing("field", cmd))?;
        let (Some(theta), chi) = (cooling.polarization.theta, cooling.polarization.chi.unwrap_or(0.0)) else {
            return Err(CliError::Config("fit needs cooling.polarization given as angles (theta, chi)".into()));
        };
        let guess = FitParams {
            omega_g: TWO_PI * cooling.rabi_hz,
            omega_r: TWO_PI * repump.rabi_hz,
            delta_g: TWO_PI * cooling.detuning_hz,
            theta,
            chi,
            field: field.magnitude_t,
            scale: fit.scale,
            background: fit.background_cps,
        };
        let mut bounds = Bounds::default();
        apply_bounds(&mut bounds.lower, &fit.lower);
        apply_bounds(&mut bounds.upper, &fit.upper);
        let names = free_override.unwrap_or(&fit.free);
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let mask = Mask::only(&names).map_err(CliError::config)?;
        Ok((guess, bounds, mask))
    }

    pub fn detectors(&self, command: &str) -> CliResult<(DetectorModel, DetectorModel)> {
        let d = self.detectors.as_ref().ok_or_else(|| missing("detectors", command))?;
        let make = |c, s: &DetectorSection| {
            DetectorModel::new(c, s.quantum_efficiency, s.dark_rate_cps)
                .map_err(|e| CliError::Config(format!("detector {}: {e}", Channel::label(c))))
        };
        Ok((make(Channel::A, &d.a)?, make(Channel::B, &d.b)?))
    }

    /// Run settings; `seed` from the command line replaces the configured one.
    pub fn run(&self, command: &str, seed: Option<u64>) -> CliResult<RunConfig> {
        let r = self.run.as_ref().ok_or_else(|| missing("run", command))?;
        let period = match (r.period_s, r.rate_hz) {
            (Some(p), None) => p,
            (None, Some(f)) if f > 0.0 => 1.0 / f,
            _ => return Err(CliError::Config("give exactly one of run.period_s and a positive run.rate_hz".into())),
        };
        let cfg = RunConfig {
            configuration: r.configuration,
            period,
            window: r.window_s,
            n_triggers: r.n_triggers,
            seed: seed.unwrap_or(r.seed),
        };
        cfg.validate().map_err(CliError::config)?;
        Ok(cfg)
    }

    pub fn source(&self, command: &str, run: &RunConfig) -> CliResult<SourceModel> {
        let s = self.source.as_ref().ok_or_else(|| missing("source", command))?;
        let modes = match (run.configuration, s.eta, s.eta_1, s.eta_2) {
            (Configuration::Reflected, Some(eta), None, None) => ModeEfficiencies::Reflected { eta },
            (Configuration::Symmetric, None, Some(eta_1), Some(eta_2)) => ModeEfficiencies::Symmetric { eta_1, eta_2 },
            (Configuration::Reflected, ..) => {
                return Err(CliError::Config("reflected runs need source.eta (and no eta_1/eta_2)".into()))
            }
            (Configuration::Symmetric, ..) => {
                return Err(CliError::Config("symmetric runs need source.eta_1 and source.eta_2 (and no eta)".into()))
            }
        };
        let arrival = match s.arrival {
            ArrivalSection::Exponential { tau_s } => {
                if !(tau_s > 0.0) {
                    return Err(CliError::Config("source.arrival.tau_s must be positive".into()));
                }
                // support long enough that the truncated tail is negligible
                let span = (40.0 * tau_s).min(run.period).max(run.window);
                let dt = (tau_s / 200.0).min(span / 1000.0);
                WavepacketDensity::exponential(tau_s, 1.0, span, dt).map_err(CliError::config)?
            }
            ArrivalSection::Simulated => self.wavepacket(command)?,
        };
        let src = SourceModel { p_emit: s.p_emit, arrival, modes, p_multi: s.p_multi };
        src.validate().map_err(CliError::config)?;
        Ok(src)
    }

    pub fn wavepacket(&self, command: &str) -> CliResult<WavepacketDensity> {
        let (seq, s) = self.sequence(command)?;
        Ok(photon_wavepacket(&self.scheme()?, &seq, &self.environment(command)?, &self.detection_mode()?, s.window_s, s.dt_s)?)
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf).or_else(|| self.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."))
    }
}

fn polarization(p: &PolarizationSection, laser: &str) -> CliResult<Polarization> {
    match (p.theta, p.chi, p.spherical) {
        (_, _, Some(c)) if p.theta.is_none() && p.chi.is_none() => {
            Polarization::new(c.map(|[re, im]| C64::new(re, im))).map_err(|e| CliError::Config(format!("[{laser}]: {e}")))
        }
        (_, _, Some(_)) => Err(CliError::Config(format!("[{laser}] polarization: give angles or spherical components, not both"))),
        (theta, chi, None) => Ok(Polarization::from_angles(theta.unwrap_or(0.0), chi.unwrap_or(0.0))),
    }
}

fn apply_bounds(p: &mut FitParams, b: &BoundSection) {
    let set = |dst: &mut f64, v: Option<f64>, factor: f64| {
        if let Some(v) = v {
            *dst = factor * v;
        }
    };
    set(&mut p.omega_g, b.omega_g_hz, TWO_PI);
    set(&mut p.omega_r, b.omega_r_hz, TWO_PI);
    set(&mut p.delta_g, b.delta_g_hz, TWO_PI);
    set(&mut p.theta, b.theta, 1.0);
    set(&mut p.chi, b.chi, 1.0);
    set(&mut p.field, b.field_t, 1.0);
    set(&mut p.scale, b.scale, 1.0);
    set(&mut p.background, b.background_cps, 1.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_report_their_location() {
        let err = ExperimentConfig::from_toml("[field]\nmagnitude_t = 1e-4\ncolour = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("colour") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn missing_sections_name_the_command() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        let msg = cfg.environment("scan").unwrap_err().to_string();
        assert!(msg.contains("[field]") && msg.contains("scan"), "{msg}");
    }

    #[test]
    fn frequencies_are_converted_to_angular_units() {
        let cfg = ExperimentConfig::from_toml("[cooling]\nrabi_hz = 1e6\ndetuning_hz = -2e6\n").unwrap();
        let l = cfg.cooling("scan").unwrap();
        assert!((l.rabi - TWO_PI * 1e6).abs() < 1e-6 && (l.detuning + TWO_PI * 2e6).abs() < 1e-6);
    }

    #[test]
    fn grid_from_flags_overrides_config() {
        let cfg = ExperimentConfig::from_toml("[scan]\nstart_hz = -1e6\nstop_hz = 1e6\npoints = 3\n").unwrap();
        assert_eq!(cfg.scan_grid(None, None, None).unwrap(), vec![-1e6, 0.0, 1e6]);
        assert_eq!(cfg.scan_grid(Some(5.0), None, Some(1)).unwrap(), vec![5.0]);
        assert!(cfg.scan_grid(None, None, Some(0)).is_err());
    }
}
