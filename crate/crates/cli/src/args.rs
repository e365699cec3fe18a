//! Command-line grammar. Every processing flag mirrors a run-config key and
//! overrides the value loaded from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "arpam", version, about = "AR-PAM reconstruction: SAFT, directional deconvolution and metrics")]
pub struct Cli {
    /// Run-config file (`key = value` lines); flags win over its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for the parallel stages.
    #[arg(long, global = true, env = "ARPAM_THREADS", value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene file into a PAV1 volume.
    Simulate(SimulateArgs),
    /// Synthetic aperture focusing of a PAV1 volume.
    Saft(SaftArgs),
    /// Deconvolve a volume's MAP (or every slice) or a 2D image.
    Deconv(DeconvArgs),
    /// Report FWHM, SNR and resolvability as CSV.
    Measure(MeasureArgs),
    /// Simulate (or load), SAFT, deconvolve and measure in one go.
    Pipeline(PipelineArgs),
}

/// Collects `(key, value)` pairs for the flags that were given.
#[derive(Default)]
pub struct Overrides(pub Vec<(&'static str, String)>);

impl Overrides {
    fn opt<T: ToString>(&mut self, key: &'static str, v: &Option<T>) {
        if let Some(v) = v {
            self.0.push((key, v.to_string()));
        }
    }

    fn flag(&mut self, key: &'static str, set: bool, value: &str) {
        if set {
            self.0.push((key, value.to_string()));
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct GeometryArgs {
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub nt: Option<usize>,
    /// Lateral pitch along x (m).
    #[arg(long)]
    pub dx: Option<f64>,
    /// Lateral pitch along y (m).
    #[arg(long)]
    pub dy: Option<f64>,
    /// Time sample pitch (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Time of the first sample (s); default puts the focus on `--focus-sample`.
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub focus_sample: Option<f64>,
    #[arg(long)]
    pub focal_length: Option<f64>,
    #[arg(long)]
    pub na: Option<f64>,
    #[arg(long)]
    pub sound_speed: Option<f64>,
    #[arg(long)]
    pub center_frequency: Option<f64>,
    /// In-focus lateral PSF FWHM (m).
    #[arg(long)]
    pub fwhm: Option<f64>,
    /// Add Gaussian noise to the simulated volume at this PSNR (dB).
    #[arg(long)]
    pub noise_psnr: Option<f64>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
}

impl GeometryArgs {
    fn collect(&self, o: &mut Overrides) {
        o.opt("nx", &self.nx);
        o.opt("ny", &self.ny);
        o.opt("nt", &self.nt);
        o.opt("dx", &self.dx);
        o.opt("dy", &self.dy);
        o.opt("dt", &self.dt);
        o.opt("t0", &self.t0);
        o.opt("focus_sample", &self.focus_sample);
        o.opt("focal_length", &self.focal_length);
        o.opt("na", &self.na);
        o.opt("sound_speed", &self.sound_speed);
        o.opt("center_frequency", &self.center_frequency);
        o.opt("fwhm", &self.fwhm);
        o.opt("noise_psnr", &self.noise_psnr);
        o.opt("noise_seed", &self.noise_seed);
    }
}

#[derive(Debug, Args, Default)]
pub struct SaftFlags {
    /// pure, dsaft, fa-dir0 or fa-dir1.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub n_dirs: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Relative regularizer of the accumulation denominator.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Disable coherence-factor weighting.
    #[arg(long)]
    pub no_cf: bool,
    /// Disable SIR weighting.
    #[arg(long)]
    pub no_sir: bool,
}

impl SaftFlags {
    fn collect(&self, o: &mut Overrides) {
        o.opt("variant", &self.variant);
        o.opt("n_dirs", &self.n_dirs);
        o.opt("gamma", &self.gamma);
        o.opt("epsilon", &self.epsilon);
        o.flag("cf", self.no_cf, "false");
        o.flag("sir", self.no_sir, "false");
    }
}

#[derive(Debug, Args, Default)]
pub struct DeconvFlags {
    /// rl, mb2d or dmb.
    #[arg(long)]
    pub method: Option<String>,
    /// Richardson-Lucy iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub fista_iterations: Option<usize>,
    #[arg(long)]
    pub fista_tolerance: Option<f64>,
    /// Sparsity weight relative to max |H^T y|.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of decomposition phases for dmb.
    #[arg(long)]
    pub m: Option<usize>,
    /// Recomposition smoothing sigma (m).
    #[arg(long)]
    pub smoothing_sigma: Option<f64>,
    /// Shrink factor in (0, 1]; below 1 both scales are written.
    #[arg(long)]
    pub prescale: Option<f64>,
    /// Deconvolve every lateral slice instead of the MAP.
    #[arg(long)]
    pub slicewise: bool,
    /// Axial pass after slice-wise deconvolution: none, rl or mb.
    #[arg(long)]
    pub axial: Option<String>,
    /// Axial PSF FWHM (m).
    #[arg(long)]
    pub axial_fwhm: Option<f64>,
}

impl DeconvFlags {
    fn collect(&self, o: &mut Overrides) {
        o.opt("method", &self.method);
        o.opt("iterations", &self.iterations);
        o.opt("fista_iterations", &self.fista_iterations);
        o.opt("fista_tolerance", &self.fista_tolerance);
        o.opt("lambda", &self.lambda);
        o.opt("m", &self.m);
        o.opt("smoothing_sigma", &self.smoothing_sigma);
        o.opt("prescale", &self.prescale);
        o.flag("slicewise", self.slicewise, "true");
        o.opt("axial", &self.axial);
        o.opt("axial_fwhm", &self.axial_fwhm);
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene file; falls back to the `scene` config key.
    pub scene: Option<PathBuf>,
    /// Output PAV1 file.
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Debug, Args)]
pub struct SaftArgs {
    /// Input PAV1 file.
    pub input: PathBuf,
    /// Output PAV1 file; timings go to `<output>.timing.csv`.
    #[arg(short, long)]
    pub output: PathBuf,
    /// In-focus lateral PSF FWHM (m).
    #[arg(long)]
    pub fwhm: Option<f64>,
    #[command(flatten)]
    pub saft: SaftFlags,
}

#[derive(Debug, Args)]
pub struct DeconvArgs {
    /// PAV1 volume, 16-bit PGM (with optional scale sidecar) or CSV matrix.
    pub input: PathBuf,
    /// Output prefix: writes PREFIX.pgm, PREFIX.scale.csv and PREFIX.csv.
    #[arg(short, long)]
    pub output: PathBuf,
    /// In-focus lateral PSF FWHM (m).
    #[arg(long)]
    pub fwhm: Option<f64>,
    /// Pixel pitch for images without a scale sidecar (m).
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dy: Option<f64>,
    #[command(flatten)]
    pub deconv: DeconvFlags,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// PAV1 volume (measured on its MAP), PGM image or CSV matrix.
    pub input: PathBuf,
    /// FWHM along the segment X0,Y0,X1,Y1 (m, centred coordinates). Repeatable.
    #[arg(long, value_name = "X0,Y0,X1,Y1", allow_hyphen_values = true)]
    pub profile: Vec<String>,
    /// Report SNR.
    #[arg(long)]
    pub snr: bool,
    /// Signal region `ix0:ix1,iy0:iy1` or `frame:N` (default: whole image).
    #[arg(long)]
    pub signal: Option<String>,
    /// Background region (default: a border frame a tenth of the image thick).
    #[arg(long)]
    pub background: Option<String>,
    /// Two-line scene for the resolvability scan: centre, direction in degrees,
    /// length, separation at the wide and at the narrow end (m).
    #[arg(long, value_name = "CX,CY,DEG,LEN,WIDE,NARROW", allow_hyphen_values = true)]
    pub lines: Option<String>,
    /// Part of the lines to scan, as fractions of their length.
    #[arg(long, value_name = "S0,S1", default_value = "0.05,0.97")]
    pub segment: String,
    /// Pixel pitch for images without a scale sidecar (m).
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dy: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Start from this PAV1 volume instead of simulating the configured scene.
    pub input: Option<PathBuf>,
    /// Scene file (overrides the `scene` key).
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub saft: SaftFlags,
    #[command(flatten)]
    pub deconv: DeconvFlags,
}

impl Command {
    /// Config overrides carried by the subcommand's flags.
    pub fn overrides(&self) -> Overrides {
        let mut o = Overrides::default();
        match self {
            Command::Simulate(a) => a.geometry.collect(&mut o),
            Command::Saft(a) => {
                o.opt("fwhm", &a.fwhm);
                a.saft.collect(&mut o);
            }
            Command::Deconv(a) => {
                o.opt("fwhm", &a.fwhm);
                o.opt("dx", &a.dx);
                o.opt("dy", &a.dy);
                a.deconv.collect(&mut o);
            }
            Command::Measure(a) => {
                o.opt("dx", &a.dx);
                o.opt("dy", &a.dy);
            }
            Command::Pipeline(a) => {
                o.opt("scene", &a.scene.as_ref().map(|p| p.display().to_string()));
                o.opt("output_dir", &a.output_dir.as_ref().map(|p| p.display().to_string()));
                a.geometry.collect(&mut o);
                a.saft.collect(&mut o);
                a.deconv.collect(&mut o);
            }
        }
        o
    }
}
