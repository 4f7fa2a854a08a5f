//! RF wavefield simulation and per-antenna phase extraction.
//!
//! The field at an antenna is `A·sin(k·d + ω(t − t0) + φ)` with `d` the
//! antenna-to-source distance, so the recovered phase grows with distance.
//! Consequently [`dipole_aoa`] is positive when the source lies on the side
//! of the *first* antenna of the pair (the nearer antenna leads).

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{normalize_angle, Pose, Vec2};
use crate::random::{RandomError, RngStream};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Tolerance on `|asin argument| - 1` before a reading is declared
/// geometrically impossible.
const ASIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RfError {
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("sample time {0} is negative")]
    NegativeTime(f64),
    #[error("antenna coincides with the source (singular field point)")]
    AtSource,
    #[error("window of {samples} samples spans {cycles} carrier periods, not an integer count")]
    NonIntegerPeriods { samples: usize, cycles: f64 },
    #[error("sample rate {sample_rate} Hz is below 8x the carrier {carrier} Hz")]
    Undersampled { sample_rate: f64, carrier: f64 },
    #[error("window has no energy at the carrier")]
    ZeroWindow,
    #[error("dipole spacing {spacing} m exceeds half the wavelength {wavelength} m")]
    SpacingTooLarge { spacing: f64, wavelength: f64 },
    #[error("phase exceeds geometric bound (asin argument {0})")]
    PhaseExceedsBound(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error(transparent)]
    Random(#[from] RandomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfSource {
    /// World position of the emitter.
    pub position: Vec2,
    /// Height of the emitter relative to the antenna plane.
    #[serde(default)]
    pub height_offset: f64,
    pub amplitude: f64,
    /// Carrier frequency in Hz.
    pub frequency: f64,
    #[serde(default)]
    pub initial_phase: f64,
    #[serde(default)]
    pub t0: f64,
}

impl RfSource {
    pub fn new(position: Vec2, amplitude: f64, frequency: f64) -> Result<Self, RfError> {
        let s = Self {
            position,
            height_offset: 0.0,
            amplitude,
            frequency,
            initial_phase: 0.0,
            t0: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), RfError> {
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(RfError::InvalidSource(format!(
                "frequency must be positive, got {}",
                self.frequency
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(RfError::InvalidSource(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if !self.position.is_finite() || !self.initial_phase.is_finite() || !self.t0.is_finite() {
            return Err(RfError::NonFinite);
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength()
    }

    pub fn angular_frequency(&self) -> f64 {
        TAU * self.frequency
    }
}

/// Instantaneous field value at a world-frame antenna position.
pub fn sample_wave(source: &RfSource, antenna: Vec2, t: f64) -> Result<f64, RfError> {
    if t < 0.0 {
        return Err(RfError::NegativeTime(t));
    }
    if !t.is_finite() || !antenna.is_finite() {
        return Err(RfError::NonFinite);
    }
    let planar = antenna - source.position;
    let d = (planar.norm_sq() + source.height_offset * source.height_offset).sqrt();
    if d == 0.0 {
        return Err(RfError::AtSource);
    }
    let arg = source.wavenumber() * d + source.angular_frequency() * (t - source.t0) + source.initial_phase;
    Ok(source.amplitude * arg.sin())
}

/// Phase of the window's projection onto the carrier.
///
/// For samples `A·sin(ω·n/fs + ψ)`, `n = 0..N`, the result is `ψ` wrapped to
/// (−π, π]. The window must hold an integer number of carrier periods, which
/// makes the single-bin projection leakage-free without a taper.
pub fn extract_phase(samples: &[f64], sample_rate: f64, carrier: f64) -> Result<f64, RfError> {
    if !(sample_rate.is_finite() && carrier.is_finite() && carrier > 0.0) {
        return Err(RfError::NonFinite);
    }
    if sample_rate < 8.0 * carrier {
        return Err(RfError::Undersampled {
            sample_rate,
            carrier,
        });
    }
    let n = samples.len();
    let cycles = n as f64 * carrier / sample_rate;
    if cycles < 0.5 || (cycles - cycles.round()).abs() > 1e-6 * cycles.max(1.0) {
        return Err(RfError::NonIntegerPeriods { samples: n, cycles });
    }
    let step = TAU * carrier / sample_rate;
    let (mut in_phase, mut quadrature) = (0.0, 0.0);
    for (i, &x) in samples.iter().enumerate() {
        let (s, c) = (step * i as f64).sin_cos();
        // sin(wt + psi) = sin(wt)cos(psi) + cos(wt)sin(psi)
        quadrature += x * s;
        in_phase += x * c;
    }
    if !(in_phase.is_finite() && quadrature.is_finite()) {
        return Err(RfError::NonFinite);
    }
    if in_phase == 0.0 && quadrature == 0.0 {
        return Err(RfError::ZeroWindow);
    }
    Ok(normalize_angle(in_phase.atan2(quadrature)))
}

/// Carrier-bin power of a window, `|X(f_c)|² / N²` (0.25·A² for a pure tone).
pub fn carrier_power(samples: &[f64], sample_rate: f64, carrier: f64) -> f64 {
    let step = TAU * carrier / sample_rate;
    let (mut i_acc, mut q_acc) = (0.0, 0.0);
    for (i, &x) in samples.iter().enumerate() {
        let (s, c) = (step * i as f64).sin_cos();
        q_acc += x * s;
        i_acc += x * c;
    }
    let n = samples.len().max(1) as f64;
    (i_acc * i_acc + q_acc * q_acc) / (n * n)
}

/// Angle off the dipole broadside from the phases of its two antennas.
///
/// `Δφ = wrap(phase_b − phase_a)`; the result is `asin(Δφ·λ / (2π·spacing))`
/// in [−π/2, π/2], positive toward antenna `a`.
pub fn dipole_aoa(phase_a: f64, phase_b: f64, spacing: f64, wavelength: f64) -> Result<f64, RfError> {
    if !(phase_a.is_finite() && phase_b.is_finite() && spacing.is_finite() && wavelength.is_finite()) {
        return Err(RfError::NonFinite);
    }
    if !(spacing > 0.0) || spacing > wavelength / 2.0 * (1.0 + 1e-12) {
        return Err(RfError::SpacingTooLarge {
            spacing,
            wavelength,
        });
    }
    let dphi = normalize_angle(phase_b - phase_a);
    let arg = dphi * wavelength / (2.0 * PI * spacing);
    if arg.abs() > 1.0 + ASIN_SLACK {
        return Err(RfError::PhaseExceedsBound(arg));
    }
    Ok(arg.clamp(-1.0, 1.0).asin())
}

/// Geometric layout tag; selects the solver path in `aoa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ArrayLayout {
    /// A1=(d,−d), A2=(d,d), A3=(−d,d), A4=(−d,−d) with dipoles A1A2, A3A4.
    Square { half_side: f64 },
    /// Three antennas where the middle one is shared by both dipoles.
    ThreeAntenna,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaArray {
    /// Body-frame antenna positions.
    pub body_positions: Vec<Vec2>,
    /// Antenna indices of the two dipoles, `(a, b)` ordered.
    pub pairs: [(usize, usize); 2],
    /// Optional third dipole used to pick between geometrically consistent
    /// source hypotheses (the A2A3 top edge for the square layout).
    pub cross_pair: Option<(usize, usize)>,
    pub wavelength: f64,
    pub layout: ArrayLayout,
}

impl AntennaArray {
    /// Square layout with side `2·half_side`.
    pub fn square(half_side: f64, wavelength: f64) -> Self {
        let d = half_side;
        Self {
            body_positions: vec![
                Vec2::new(d, -d),
                Vec2::new(d, d),
                Vec2::new(-d, d),
                Vec2::new(-d, -d),
            ],
            pairs: [(0, 1), (2, 3)],
            cross_pair: Some((1, 2)),
            wavelength,
            layout: ArrayLayout::Square { half_side },
        }
    }

    /// Three antennas `r1, r2, r4`; dipoles are (r1, r2) and (r2, r4).
    pub fn three_antenna(r1: Vec2, r2: Vec2, r4: Vec2, wavelength: f64) -> Self {
        Self {
            body_positions: vec![r1, r2, r4],
            pairs: [(0, 1), (1, 2)],
            cross_pair: None,
            wavelength,
            layout: ArrayLayout::ThreeAntenna,
        }
    }

    pub fn general(body_positions: Vec<Vec2>, pairs: [(usize, usize); 2], wavelength: f64) -> Self {
        Self {
            body_positions,
            pairs,
            cross_pair: None,
            wavelength,
            layout: ArrayLayout::General,
        }
    }

    pub fn spacing(&self, pair: (usize, usize)) -> f64 {
        self.body_positions[pair.0].distance(self.body_positions[pair.1])
    }

    pub fn midpoint(&self, pair: (usize, usize)) -> Vec2 {
        (self.body_positions[pair.0] + self.body_positions[pair.1]) * 0.5
    }

    /// Largest distance between any two antennas.
    pub fn aperture(&self) -> f64 {
        let p = &self.body_positions;
        let mut best = 0.0f64;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                best = best.max(p[i].distance(p[j]));
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReading {
    /// Per-antenna carrier phase, wrapped to (−π, π].
    pub phases: Vec<f64>,
    /// Per-antenna carrier-bin power.
    pub carrier_bin_power: Vec<f64>,
}

/// Sampling and channel parameters for the simulated receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfConfig {
    pub frequency: f64,
    pub amplitude: f64,
    /// Carrier periods per window.
    pub periods: usize,
    /// Samples per carrier period.
    pub oversample: usize,
    /// Additive white Gaussian noise on each sample, in amplitude units.
    pub noise_sigma: f64,
    /// Half the side of the square antenna array.
    pub half_side: f64,
    pub height_offset: f64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            frequency: 300.0e6,
            amplitude: 1.0,
            periods: 8,
            oversample: 16,
            noise_sigma: 0.0,
            half_side: 0.225,
            height_offset: 0.0,
        }
    }
}

impl RfConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    pub fn sample_rate(&self) -> f64 {
        self.frequency * self.oversample as f64
    }

    pub fn window_len(&self) -> usize {
        self.periods * self.oversample
    }

    pub fn square_array(&self) -> AntennaArray {
        AntennaArray::square(self.half_side, self.wavelength())
    }

    pub fn source_at(&self, position: Vec2) -> Result<RfSource, RfError> {
        let mut s = RfSource::new(position, self.amplitude, self.frequency)?;
        s.height_offset = self.height_offset;
        Ok(s)
    }
}

/// Samples the field at every antenna of `array` mounted on a drone at
/// `pose`, optionally adds noise, and extracts the per-antenna phases.
pub fn simulate_phases(
    source: &RfSource,
    array: &AntennaArray,
    pose: &Pose,
    cfg: &RfConfig,
    mut noise: Option<&mut RngStream>,
) -> Result<PhaseReading, RfError> {
    let fs = cfg.sample_rate();
    let n = cfg.window_len();
    let mut phases = Vec::with_capacity(array.body_positions.len());
    let mut powers = Vec::with_capacity(array.body_positions.len());
    let mut window = vec![0.0; n];
    for &body in &array.body_positions {
        let world = pose.to_world(body);
        for (i, w) in window.iter_mut().enumerate() {
            let t = source.t0 + i as f64 / fs;
            *w = sample_wave(source, world, t)?;
        }
        if let Some(rng) = noise.as_deref_mut() {
            if cfg.noise_sigma > 0.0 {
                for w in window.iter_mut() {
                    *w += rng.gaussian(0.0, cfg.noise_sigma)?;
                }
            }
        }
        phases.push(extract_phase(&window, fs, source.frequency)?);
        powers.push(carrier_power(&window, fs, source.frequency));
    }
    Ok(PhaseReading {
        phases,
        carrier_bin_power: powers,
    })
}
