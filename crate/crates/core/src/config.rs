//! Processing configuration records.

use crate::error::{Error, Result};
use crate::geometry::PsfModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaftVariant {
    /// Plain average of the directional 1D SAFT results.
    Pure,
    /// Angular-window merge in k-space.
    DSaft,
    /// Fourier accumulation without the directional windows.
    FaSaftDir0,
    /// Fourier accumulation with the directional windows.
    FaSaftDir1,
}

impl SaftVariant {
    pub fn name(self) -> &'static str {
        match self {
            SaftVariant::Pure => "pure",
            SaftVariant::DSaft => "dsaft",
            SaftVariant::FaSaftDir0 => "fa-dir0",
            SaftVariant::FaSaftDir1 => "fa-dir1",
        }
    }
}

impl std::str::FromStr for SaftVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pure" => Ok(SaftVariant::Pure),
            "dsaft" | "d-saft" => Ok(SaftVariant::DSaft),
            "fa-dir0" | "fasaft-dir0" | "fa0" => Ok(SaftVariant::FaSaftDir0),
            "fa-dir1" | "fasaft-dir1" | "fa1" => Ok(SaftVariant::FaSaftDir1),
            other => Err(Error::InvalidConfig(format!("unknown SAFT variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaftConfig {
    pub variant: SaftVariant,
    /// Number of synthesis directions `N'`.
    pub n_directions: usize,
    /// Sharpening exponent of the Fourier accumulation.
    pub gamma: f64,
    pub use_cf: bool,
    pub use_sir: bool,
    /// Guard on the accumulation denominator, relative to its largest value.
    /// Zero disables the guard.
    pub epsilon_rel: f64,
}

impl Default for SaftConfig {
    fn default() -> Self {
        Self {
            variant: SaftVariant::FaSaftDir1,
            n_directions: 16,
            gamma: 0.2,
            use_cf: true,
            use_sir: true,
            epsilon_rel: 1e-6,
        }
    }
}

impl SaftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_directions == 0 {
            return Err(Error::InvalidConfig("n_directions must be at least 1".into()));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidConfig(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.epsilon_rel.is_finite() && self.epsilon_rel >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon_rel
            )));
        }
        Ok(())
    }

    /// Synthesis angles `n * pi / N'`.
    pub fn angles(&self) -> Vec<f64> {
        direction_angles(self.n_directions)
    }
}

pub fn direction_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * std::f64::consts::PI / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeconvMethod {
    RichardsonLucy,
    Mb2d,
    Dmb,
}

impl std::str::FromStr for DeconvMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rl" | "r-l" | "richardson-lucy" => Ok(DeconvMethod::RichardsonLucy),
            "mb2d" | "mb" => Ok(DeconvMethod::Mb2d),
            "dmb" | "d-mb" => Ok(DeconvMethod::Dmb),
            other => Err(Error::InvalidConfig(format!("invalid method '{other}'"))),
        }
    }
}

impl DeconvMethod {
    pub fn name(self) -> &'static str {
        match self {
            DeconvMethod::RichardsonLucy => "rl",
            DeconvMethod::Mb2d => "mb2d",
            DeconvMethod::Dmb => "dmb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeconvConfig {
    pub method: DeconvMethod,
    /// Richardson-Lucy iterations.
    pub iterations: usize,
    /// Upper bound on FISTA iterations.
    pub fista_iterations: usize,
    /// Early stop on relative objective change.
    pub fista_tolerance: f64,
    /// Sparsity weight relative to `max |H^T y|` of the input image.
    pub lambda: f64,
    /// Number of phase shifts `M`.
    pub n_phases: usize,
    /// Standard deviation of the post-deconvolution smoothing, metres.
    /// `None` uses `fwhm_focus / 6`.
    pub smoothing_sigma: Option<f64>,
    /// Downscale factor applied before deconvolution; 1 disables it.
    pub prescale: f64,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        Self {
            method: DeconvMethod::Dmb,
            iterations: 15,
            fista_iterations: 300,
            fista_tolerance: 1e-8,
            lambda: 0.1,
            n_phases: 4,
            smoothing_sigma: None,
            prescale: 1.0,
        }
    }
}

/// Prescale factor used when pre-scaling is switched on without a value.
pub const DEFAULT_PRESCALE: f64 = 0.5;

impl DeconvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.n_phases == 0 {
            return Err(Error::InvalidConfig("M must be at least 1".into()));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.fista_tolerance.is_finite() && self.fista_tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "FISTA tolerance must be >= 0, got {}",
                self.fista_tolerance
            )));
        }
        if !(self.prescale > 0.0 && self.prescale <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "prescale must lie in (0, 1], got {}",
                self.prescale
            )));
        }
        if let Some(s) = self.smoothing_sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidConfig(format!("smoothing sigma must be >= 0, got {s}")));
            }
        }
        Ok(())
    }

    pub fn smoothing_sigma_for(&self, psf: &PsfModel) -> f64 {
        self.smoothing_sigma.unwrap_or(psf.fwhm_focus / 6.0)
    }

    /// Phase shifts `m pi / (2M)`.
    pub fn phases(&self) -> Vec<f64> {
        (0..self.n_phases)
            .map(|m| m as f64 * std::f64::consts::PI / (2.0 * self.n_phases as f64))
            .collect()
    }
}
