//! `key = value` run configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys are case-insensitive and `-` may stand for `_`. Unknown keys are
//! rejected. Every key mirrors a command-line flag of the same name.

use std::path::PathBuf;
use std::str::FromStr;

use arpam::deconv::{AxialMethod, AxialParams};
use arpam::{AcquisitionGeometry, DeconvConfig, Error, NoiseSpec, PsfModel, SaftConfig};

/// Focal plane sample used when `t0` is not given.
pub const DEFAULT_FOCUS_SAMPLE: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: AcquisitionGeometry,
    pub psf: PsfModel,
    pub dims: (usize, usize, usize),
    pub saft: SaftConfig,
    pub deconv: DeconvConfig,
    pub slicewise: bool,
    /// Axial pass after slice-wise deconvolution.
    pub axial: Option<AxialParams>,
    pub scene: Option<PathBuf>,
    pub noise: Option<NoiseSpec>,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
    /// Explicit `t0`; otherwise the focal plane sits on `focus_sample`.
    pub t0: Option<f64>,
    pub focus_sample: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let geometry = AcquisitionGeometry::default();
        Self {
            geometry,
            psf: PsfModel::default(),
            dims: (121, 121, 64),
            saft: SaftConfig::default(),
            deconv: DeconvConfig::default(),
            slicewise: false,
            axial: None,
            scene: None,
            noise: None,
            output_dir: PathBuf::from("."),
            threads: None,
            t0: None,
            focus_sample: DEFAULT_FOCUS_SAMPLE,
        }
    }
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("invalid value '{v}' for {key}"))
}

fn flag(key: &str, v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("invalid boolean '{v}' for {key}")),
    }
}

fn noise_mut(cfg: &mut RunConfig) -> &mut NoiseSpec {
    cfg.noise.get_or_insert(NoiseSpec { target_psnr: f64::INFINITY, seed: 0 })
}

fn axial_mut(cfg: &mut RunConfig) -> &mut AxialParams {
    cfg.axial.get_or_insert_with(AxialParams::default)
}

impl RunConfig {
    pub fn parse(text: &str) -> arpam::Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            cfg.set(k.trim(), v.trim()).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assign one key. Returns a message naming the problem on failure.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let k = key.to_ascii_lowercase().replace('-', "_");
        let g = &mut self.geometry;
        match k.as_str() {
            "focal_length" => g.focal_length = value(&k, v)?,
            "na" | "numerical_aperture" => {
                g.numerical_aperture = value(&k, v)?;
                self.psf.numerical_aperture = g.numerical_aperture;
            }
            "c" | "sound_speed" => g.sound_speed = value(&k, v)?,
            "dx" => g.dx = value(&k, v)?,
            "dy" => g.dy = value(&k, v)?,
            "dt" => g.dt = value(&k, v)?,
            "t0" => self.t0 = Some(value(&k, v)?),
            "focus_sample" => self.focus_sample = value(&k, v)?,
            "center_frequency" => g.center_frequency = value(&k, v)?,
            "fwhm" | "fwhm_focus" => self.psf.fwhm_focus = value(&k, v)?,
            "nx" => self.dims.0 = value(&k, v)?,
            "ny" => self.dims.1 = value(&k, v)?,
            "nt" => self.dims.2 = value(&k, v)?,
            "variant" => self.saft.variant = v.parse().map_err(|e: Error| e.to_string())?,
            "n_dirs" | "n_directions" => self.saft.n_directions = value(&k, v)?,
            "gamma" => self.saft.gamma = value(&k, v)?,
            "cf" | "use_cf" => self.saft.use_cf = flag(&k, v)?,
            "sir" | "use_sir" => self.saft.use_sir = flag(&k, v)?,
            "epsilon" => self.saft.epsilon_rel = value(&k, v)?,
            "method" => self.deconv.method = v.parse().map_err(|e: Error| e.to_string())?,
            "iterations" => self.deconv.iterations = value(&k, v)?,
            "fista_iterations" => self.deconv.fista_iterations = value(&k, v)?,
            "fista_tolerance" => self.deconv.fista_tolerance = value(&k, v)?,
            "lambda" => self.deconv.lambda = value(&k, v)?,
            "m" | "n_phases" => self.deconv.n_phases = value(&k, v)?,
            "smoothing_sigma" => self.deconv.smoothing_sigma = Some(value(&k, v)?),
            "prescale" => self.deconv.prescale = value(&k, v)?,
            "slicewise" => self.slicewise = flag(&k, v)?,
            "axial" => match v.to_ascii_lowercase().as_str() {
                "none" | "off" => self.axial = None,
                m => axial_mut(self).method = m.parse::<AxialMethod>().map_err(|e| e.to_string())?,
            },
            "axial_fwhm" => axial_mut(self).fwhm = value(&k, v)?,
            "scene" => self.scene = Some(PathBuf::from(v)),
            "noise_psnr" => noise_mut(self).target_psnr = value(&k, v)?,
            "noise_seed" => noise_mut(self).seed = value(&k, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "threads" => self.threads = Some(value(&k, v)?),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Geometry with `t0` resolved.
    pub fn resolved_geometry(&self) -> AcquisitionGeometry {
        let mut g = self.geometry;
        g.t0 = self
            .t0
            .unwrap_or(g.focal_length / g.sound_speed - self.focus_sample * g.dt);
        g
    }

    pub fn validate(&self) -> arpam::Result<()> {
        self.resolved_geometry().validate()?;
        self.psf.validate()?;
        self.saft.validate()?;
        self.deconv.validate()?;
        let (nx, ny, nt) = self.dims;
        if nx == 0 || ny == 0 || nt == 0 {
            return Err(Error::InvalidConfig("dimensions must be positive".into()));
        }
        if let Some(a) = &self.axial {
            if !(a.fwhm.is_finite() && a.fwhm > 0.0) {
                return Err(Error::InvalidConfig("axial_fwhm must be positive".into()));
            }
        }
        if !self.focus_sample.is_finite() {
            return Err(Error::InvalidConfig("focus_sample must be finite".into()));
        }
        if self.noise.is_some_and(|n| n.target_psnr.is_nan()) {
            return Err(Error::InvalidConfig("noise_psnr is NaN".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Serialize every setting; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let mut lines = vec![
            format!("focal_length = {}", g.focal_length),
            format!("na = {}", g.numerical_aperture),
            format!("sound_speed = {}", g.sound_speed),
            format!("dx = {}", g.dx),
            format!("dy = {}", g.dy),
            format!("dt = {}", g.dt),
            format!("focus_sample = {}", self.focus_sample),
            format!("center_frequency = {}", g.center_frequency),
            format!("fwhm = {}", self.psf.fwhm_focus),
            format!("nx = {}", self.dims.0),
            format!("ny = {}", self.dims.1),
            format!("nt = {}", self.dims.2),
            format!("variant = {}", self.saft.variant.name()),
            format!("n_dirs = {}", self.saft.n_directions),
            format!("gamma = {}", self.saft.gamma),
            format!("cf = {}", self.saft.use_cf),
            format!("sir = {}", self.saft.use_sir),
            format!("epsilon = {}", self.saft.epsilon_rel),
            format!("method = {}", self.deconv.method.name()),
            format!("iterations = {}", self.deconv.iterations),
            format!("fista_iterations = {}", self.deconv.fista_iterations),
            format!("fista_tolerance = {}", self.deconv.fista_tolerance),
            format!("lambda = {}", self.deconv.lambda),
            format!("m = {}", self.deconv.n_phases),
            format!("prescale = {}", self.deconv.prescale),
            format!("slicewise = {}", self.slicewise),
            format!("output_dir = {}", self.output_dir.display()),
        ];
        if let Some(t0) = self.t0 {
            lines.push(format!("t0 = {t0}"));
        }
        if let Some(s) = self.deconv.smoothing_sigma {
            lines.push(format!("smoothing_sigma = {s}"));
        }
        if let Some(a) = &self.axial {
            let m = match a.method {
                AxialMethod::RichardsonLucy => "rl",
                AxialMethod::Mb => "mb",
            };
            lines.push(format!("axial = {m}"));
            lines.push(format!("axial_fwhm = {}", a.fwhm));
        }
        if let Some(s) = &self.scene {
            lines.push(format!("scene = {}", s.display()));
        }
        if let Some(n) = &self.noise {
            lines.push(format!("noise_psnr = {}", n.target_psnr));
            lines.push(format!("noise_seed = {}", n.seed));
        }
        if let Some(t) = self.threads {
            lines.push(format!("threads = {t}"));
        }
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use arpam::{DeconvMethod, SaftVariant};

    #[test]
    fn empty_text_gives_defaults() {
        let c = RunConfig::parse("# nothing here\n\n").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.resolved_geometry(), AcquisitionGeometry::default());
    }

    #[test]
    fn reads_keys_and_comments() {
        let c = RunConfig::parse(
            "variant = dsaft  # merge\nN-DIRS=8\ngamma=0.5\nmethod=rl\nm = 2\naxial = mb\nnoise_psnr = 20\nscene = a b.txt\n",
        )
        .unwrap();
        assert_eq!(c.saft.variant, SaftVariant::DSaft);
        assert_eq!(c.saft.n_directions, 8);
        assert_eq!(c.saft.gamma, 0.5);
        assert_eq!(c.deconv.method, DeconvMethod::RichardsonLucy);
        assert_eq!(c.deconv.n_phases, 2);
        assert_eq!(c.axial.unwrap().method, AxialMethod::Mb);
        assert_eq!(c.noise.unwrap().target_psnr, 20.0);
        assert_eq!(c.scene.unwrap(), PathBuf::from("a b.txt"));
    }

    #[test]
    fn dt_moves_t0_unless_given() {
        let c = RunConfig::parse("dt = 4e-9").unwrap();
        let g = c.resolved_geometry();
        assert!((g.depth_at(16.0) - g.focal_length).abs() < 1e-12);
        let c = RunConfig::parse("dt = 4e-9\nt0 = 0.001").unwrap();
        assert_eq!(c.resolved_geometry().t0, 0.001);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            RunConfig::parse("gamma = 0.2\nbogus = 1\n"),
            Err(Error::Parse { line: 2, message: "unknown key 'bogus'".into() })
        );
        assert!(matches!(RunConfig::parse("\n\ngamma 0.2"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(RunConfig::parse("cf = maybe"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(RunConfig::parse("gamma = -1"), Err(Error::InvalidConfig(_))));
        assert!(RunConfig::parse("nx = 0").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::parse("lambda = 0.05\nsmoothing_sigma = 1e-5\naxial = rl\nthreads = 3\nt0 = 0.0044").unwrap();
        c.scene = Some("s.txt".into());
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }
}
