use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::{num_complex::Complex, FftPlanner};

use super::density::DensityMatrix;
use super::evolve::evolve;
use super::liouvillian::build_liouvillian;
use super::rate::scattering_rate;
use super::steady::steady_state;
use crate::atom::{DetectionMode, Envelope, FieldEnvironment, LaserField, LevelScheme, D_LEVELS};
use crate::{Error, Result};

/// A stretch of constant laser configuration. Envelope times are measured from
/// the start of the segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub lasers: Vec<LaserField>,
}

/// State of the ion when the trigger segment begins.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Equal incoherent mixture of the four D3/2 sublevels.
    UniformShelved,
    Explicit(DensityMatrix),
    /// Steady state of the first segment propagated through the remaining
    /// segments up to the trigger.
    Simulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub segments: Vec<Segment>,
    /// Index of the segment whose start defines t = 0 of the detection window.
    pub trigger: usize,
    pub initial: InitialState,
}

/// 10–90 % switching time of the repump AOM.
pub const REPUMP_RISE: f64 = 90e-9;

impl PulseSequence {
    /// Cooling (2 µs, both beams), optical pumping (1 µs, cooling only),
    /// 500 ns with both beams off, then the repump alone switched on with an
    /// erf ramp to trigger the photon. The ion enters the trigger segment
    /// evenly shelved over D3/2.
    pub fn single_photon(cooling: LaserField, repump: LaserField, emission: f64) -> Self {
        let ramp = Envelope::ErfRamp { t_half: 1.5 * REPUMP_RISE, rise: REPUMP_RISE };
        PulseSequence {
            segments: vec![
                Segment { duration: 2e-6, lasers: vec![cooling, repump] },
                Segment { duration: 1e-6, lasers: vec![cooling] },
                Segment { duration: 500e-9, lasers: vec![] },
                Segment { duration: emission, lasers: vec![repump.with_envelope(ramp)] },
            ],
            trigger: 3,
            initial: InitialState::UniformShelved,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() || self.trigger >= self.segments.len() {
            return Err(Error::config("pulse sequence needs a trigger segment"));
        }
        if let Some(s) = self.segments.iter().find(|s| !(s.duration > 0.0 && s.duration.is_finite())) {
            return Err(Error::config(format!("segment duration {} must be positive", s.duration)));
        }
        self.segments.iter().flat_map(|s| &s.lasers).try_for_each(|l| l.validate())
    }

    /// Time available after the trigger.
    pub fn emission_time(&self) -> f64 {
        self.segments[self.trigger..].iter().map(|s| s.duration).sum()
    }
}

/// Arrival-time density of the detected photon on a uniform grid t_i = i·dt.
#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketDensity {
    dt: f64,
    density: Vec<f64>,
}

impl WavepacketDensity {
    pub fn new(dt: f64, density: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || density.len() < 2 {
            return Err(Error::config("wavepacket needs dt > 0 and at least two samples"));
        }
        if let Some(v) = density.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Invariant(format!("wavepacket density {v} is negative or not finite")));
        }
        Ok(WavepacketDensity { dt, density })
    }

    /// `probability/τ · exp(−t/τ)` sampled over `window`; stands in for a
    /// Bloch-simulated shape where only a lifetime is known.
    pub fn exponential(tau: f64, probability: f64, window: f64, dt: f64) -> Result<Self> {
        if !(tau > 0.0) || !(0.0..=1.0).contains(&probability) {
            return Err(Error::config("exponential wavepacket needs τ > 0 and probability in [0, 1]"));
        }
        let n = (window / dt).round() as usize + 1;
        Self::new(dt, (0..n).map(|i| probability / tau * (-(i as f64) * dt / tau).exp()).collect())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn window(&self) -> f64 {
        self.dt * (self.density.len() - 1) as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(move |i| i as f64 * self.dt)
    }

    /// Running trapezoid integral, starting at 0.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.density.len());
        out.push(0.0);
        for w in self.density.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * self.dt;
            out.push(acc);
        }
        out
    }

    /// ∫ density dt over the window: probability that a photon reaches the
    /// detection mode inside it.
    pub fn contained_probability(&self) -> f64 {
        *self.cumulative().last().unwrap()
    }

    /// Probability mass before `t` (linear in the last interval).
    pub fn probability_before(&self, t: f64) -> f64 {
        let c = self.cumulative();
        if t <= 0.0 {
            return 0.0;
        }
        let x = t / self.dt;
        let i = x.floor() as usize;
        if i + 1 >= c.len() {
            return *c.last().unwrap();
        }
        c[i] + (x - i as f64) * (c[i + 1] - c[i])
    }

    /// Area-normalized copy.
    pub fn normalized(&self) -> Result<Self> {
        let p = self.contained_probability();
        if !(p > 0.0) {
            return Err(Error::Domain { what: "contained probability", value: p, domain: "(0, 1]" });
        }
        Ok(WavepacketDensity { dt: self.dt, density: self.density.iter().map(|v| v / p).collect() })
    }

    pub fn mean_arrival_time(&self) -> Result<f64> {
        let weighted = WavepacketDensity {
            dt: self.dt,
            density: self.times().zip(&self.density).map(|(t, v)| t * v).collect(),
        };
        let p = self.contained_probability();
        if !(p > 0.0) {
            return Err(Error::Domain { what: "contained probability", value: p, domain: "(0, 1]" });
        }
        Ok(weighted.contained_probability() / p)
    }

    /// Inverse-CDF sampler over the window.
    pub fn sampler(&self) -> Result<ArrivalSampler> {
        let c = self.cumulative();
        let total = *c.last().unwrap();
        if !(total > 0.0) {
            return Err(Error::Domain { what: "contained probability", value: total, domain: "(0, 1]" });
        }
        Ok(ArrivalSampler { dt: self.dt, cdf: c.iter().map(|v| v / total).collect() })
    }
}

/// Draws arrival times distributed as a wavepacket density.
#[derive(Debug, Clone)]
pub struct ArrivalSampler {
    dt: f64,
    cdf: Vec<f64>,
}

impl ArrivalSampler {
    /// Arrival time for a uniform variate `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (lo, hi) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        (i as f64 - 1.0 + frac.clamp(0.0, 1.0)) * self.dt
    }

    pub fn window(&self) -> f64 {
        self.dt * (self.cdf.len() - 1) as f64
    }
}

/// State at the start of the trigger segment.
fn trigger_state(scheme: &LevelScheme, seq: &PulseSequence, env: &FieldEnvironment) -> Result<DensityMatrix> {
    match &seq.initial {
        InitialState::UniformShelved => DensityMatrix::uniform_mixture(8, D_LEVELS),
        InitialState::Explicit(rho) => {
            rho.check()?;
            Ok(rho.clone())
        }
        InitialState::Simulated => {
            let first = &seq.segments[0];
            let mut rho = steady_state(&build_liouvillian(scheme, &first.lasers, env, Some(0.0))?)?;
            for seg in &seq.segments[1..seq.trigger] {
                let l = build_liouvillian(scheme, &seg.lasers, env, None)?;
                rho = evolve(&rho, &l, &[0.0, seg.duration])?.last().clone();
            }
            Ok(rho)
        }
    }
}

/// Detected-photon arrival density after the trigger: the scattering rate
/// into `mode` along the Bloch trajectory, sampled every `dt` for `window`.
pub fn photon_wavepacket(
    scheme: &LevelScheme,
    seq: &PulseSequence,
    env: &FieldEnvironment,
    mode: &DetectionMode,
    window: f64,
    dt: f64,
) -> Result<WavepacketDensity> {
    seq.validate()?;
    if !(window > 0.0 && dt > 0.0) {
        return Err(Error::config("window and dt must be positive"));
    }
    let available = seq.emission_time();
    if window > available * (1.0 + 1e-12) {
        return Err(Error::config(format!("window {window:e} s exceeds the {available:e} s after the trigger")));
    }
    let n = (window / dt).round() as usize + 1;
    let mut rho = trigger_state(scheme, seq, env)?;
    let mut density = Vec::with_capacity(n);
    let mut seg_start = 0.0;
    let mut next = 0usize;
    for seg in &seq.segments[seq.trigger..] {
        let seg_end = seg_start + seg.duration;
        let mut local = vec![0.0];
        let mut indices = Vec::new();
        while next < n && (next as f64 * dt) <= seg_end * (1.0 + 1e-12) {
            let t = next as f64 * dt - seg_start;
            if t > *local.last().unwrap() {
                local.push(t);
            }
            indices.push(local.len() - 1);
            next += 1;
        }
        if local.last() != Some(&seg.duration) && next < n {
            local.push(seg.duration);
        }
        let l = build_liouvillian(scheme, &seg.lasers, env, None)?;
        let tr = if local.len() > 1 {
            evolve(&rho, &l, &local)?
        } else {
            super::evolve::Trajectory { times: local.clone(), states: vec![rho.clone()] }
        };
        for &k in &indices {
            density.push(scattering_rate(&tr.states[k], scheme, mode, env));
        }
        rho = tr.last().clone();
        seg_start = seg_end;
        if next >= n {
            break;
        }
    }
    WavepacketDensity::new(dt, density)
}

/// Outcome of a beat search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beat {
    /// Dominant modulation frequency [Hz], uncertain to ± `resolution` = 1/window.
    Detected { frequency: f64, resolution: f64 },
    NoBeat,
}

/// Smallest relative modulation depth reported as a beat.
const MIN_MODULATION: f64 = 5e-3;
/// The tail is cut where the density falls below this fraction of its peak.
const TAIL_FLOOR: f64 = 1e-4;
/// Degree of the polynomial fitted to the log density as the smooth envelope.
const TREND_DEGREE: usize = 3;
/// At least this many periods must fit into the analysed tail.
const MIN_CYCLES: f64 = 3.0;
const ZERO_PAD: usize = 8;

/// Dominant modulation frequency of the arrival-time density.
///
/// Only the tail after the density maximum is analysed, so the switch-on edge
/// does not leak into the spectrum. The smooth envelope, a cubic in log
/// density, is divided out; the remaining relative modulation is Hann
/// windowed, zero padded and Fourier transformed. The strongest line with at
/// least [`MIN_CYCLES`] periods in the tail and a depth of [`MIN_MODULATION`]
/// is refined by parabolic interpolation.
pub fn beat_frequency(wp: &WavepacketDensity) -> Result<Beat> {
    let d = &wp.density;
    let (peak_i, peak) = d.iter().cloned().enumerate().fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if !(peak > 0.0) {
        return Ok(Beat::NoBeat);
    }
    let floor = TAIL_FLOOR * peak;
    let end = (peak_i..d.len()).rev().find(|&i| d[i] > floor).unwrap_or(peak_i);
    let tail = &d[peak_i..=end];
    let n = tail.len();
    if n < 4 * (TREND_DEGREE + 1) {
        return Err(Error::config("wavepacket tail too short for a spectral beat search"));
    }

    let x = |i: usize| 2.0 * i as f64 / (n - 1) as f64 - 1.0;
    let design = DMatrix::from_fn(n, TREND_DEGREE + 1, |i, k| x(i).powi(k as i32));
    let logs = DVector::from_iterator(n, tail.iter().map(|&v| v.max(floor).ln()));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&logs, 1e-12)
        .map_err(|e| Error::Invariant(format!("envelope fit failed: {e}")))?;
    let trend = design * coef;

    let padded = (ZERO_PAD * n).next_power_of_two();
    let mut buf = vec![Complex::new(0.0, 0.0); padded];
    let mut weight = 0.0;
    for (i, (&v, t)) in tail.iter().zip(trend.iter()).enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
        buf[i] = Complex::new(w * (v / t.exp() - 1.0), 0.0);
        weight += w;
    }
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let amp: Vec<f64> = buf[..padded / 2].iter().map(|z| 2.0 * z.norm() / weight).collect();

    let bin = 1.0 / (padded as f64 * wp.dt);
    let first = (MIN_CYCLES / (n as f64 * wp.dt) / bin).ceil() as usize;
    let best = (first.max(1)..amp.len() - 1)
        .filter(|&k| amp[k] > amp[k - 1] && amp[k] >= amp[k + 1])
        .max_by(|&a, &b| amp[a].total_cmp(&amp[b]));
    let Some(k) = best.filter(|&k| amp[k] >= MIN_MODULATION) else { return Ok(Beat::NoBeat) };
    let (a, b, c) = (amp[k - 1], amp[k], amp[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    Ok(Beat::Detected { frequency: (k as f64 + shift) * bin, resolution: 1.0 / wp.window() })
}
