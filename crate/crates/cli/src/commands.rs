//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use arpam::deconv::{deconvolve, dmb_slicewise_3d};
use arpam::metrics::{extract_profile, fwhm, min_resolvable_distance, snr_db, Region, Resolvability, TwoLineScene};
use arpam::phantom::{add_noise, simulate};
use arpam::saft::{merge_stack, DirectionalStack};
use arpam::{map_projection, DeconvMethod, Error, LateralImage, PsfModel, RfVolume, SceneSpec};

use crate::args::{Cli, Command, DeconvArgs, MeasureArgs, Overrides, PipelineArgs, SaftArgs, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::runconfig::RunConfig;
use crate::{matrix_csv, pav1, pgm};

/// Load `--config` (if any) and apply the flag overrides on top.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            RunConfig::parse(&text).map_err(CliError::in_file(p))?
        }
        None => RunConfig::default(),
    };
    for (key, value) in &overrides.0 {
        cfg.set(key, value).map_err(|m| CliError::Usage(format!("--{}: {m}", key.replace('_', "-"))))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = load_config(cli.config.as_deref(), &cli.command.overrides())?;
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // fails only if a pool already exists, which keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &cfg),
        Command::Saft(a) => cmd_saft(a, &cfg),
        Command::Deconv(a) => cmd_deconv(a, &cfg),
        Command::Measure(a) => cmd_measure(a, &cfg),
        Command::Pipeline(a) => cmd_pipeline(a, &cfg),
    }
}

/// PSF for a volume: the configured focal FWHM with the volume's aperture.
fn psf_for(cfg: &RunConfig, vol: &RfVolume) -> PsfModel {
    PsfModel { numerical_aperture: vol.geometry.numerical_aperture, ..cfg.psf }
}

fn simulate_scene(scene_path: &Path, cfg: &RunConfig) -> CliResult<RfVolume> {
    let text = fs::read_to_string(scene_path).map_err(|e| CliError::io(scene_path, e))?;
    let scene = SceneSpec::parse(&text).map_err(CliError::in_file(scene_path))?;
    let vol = simulate(&scene, &cfg.resolved_geometry(), &cfg.psf, cfg.dims)?;
    match &cfg.noise {
        Some(noise) => Ok(add_noise(&vol, noise)?),
        None => Ok(vol),
    }
}

fn cmd_simulate(a: &SimulateArgs, cfg: &RunConfig) -> CliResult<()> {
    let scene = a
        .scene
        .as_ref()
        .or(cfg.scene.as_ref())
        .ok_or_else(|| CliError::Usage("no scene file given".into()))?;
    let vol = simulate_scene(scene, cfg)?;
    pav1::write(&a.output, &vol)
}

/// Timing sidecar next to a SAFT output: `out.pav1` -> `out.timing.csv`.
pub fn timing_path(output: &Path) -> PathBuf {
    output.with_extension("timing.csv")
}

fn saft_volume(vol: &RfVolume, cfg: &RunConfig, timing: &Path) -> CliResult<RfVolume> {
    let psf = psf_for(cfg, vol);
    let start = Instant::now();
    let stack = DirectionalStack::synthesize(vol, &cfg.saft.angles(), &psf, &cfg.saft)?;
    let synth = start.elapsed().as_secs_f64();
    let out = merge_stack(&stack, &cfg.saft)?;
    let total = start.elapsed().as_secs_f64();
    let (nx, ny, nt) = vol.dims();
    let csv = format!(
        "stage,seconds\nsynthesis,{synth:.6}\nmerge,{:.6}\ntotal,{total:.6}\n",
        total - synth
    );
    fs::write(timing, csv).map_err(|e| CliError::io(timing, e))?;
    eprintln!(
        "saft: {} N'={} on {nx}x{ny}x{nt} in {total:.2} s",
        cfg.saft.variant.name(),
        cfg.saft.n_directions
    );
    Ok(out)
}

fn cmd_saft(a: &SaftArgs, cfg: &RunConfig) -> CliResult<()> {
    let vol = pav1::read(&a.input)?;
    let out = saft_volume(&vol, cfg, &timing_path(&a.output))?;
    pav1::write(&a.output, &out)
}

/// Anything the deconvolution and measurement commands accept.
pub enum Input {
    Volume(RfVolume),
    Image(LateralImage),
}

impl Input {
    /// The image itself, or the volume's maximum amplitude projection.
    pub fn into_image(self) -> CliResult<LateralImage> {
        match self {
            Input::Volume(v) => Ok(map_projection(&v, None)?),
            Input::Image(img) => Ok(img),
        }
    }
}

/// Read a PAV1 volume, a PGM image or a CSV matrix, told apart by content.
pub fn read_input(path: &Path, cfg: &RunConfig) -> CliResult<Input> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let pitch = (cfg.geometry.dx, cfg.geometry.dy);
    if bytes.starts_with(pav1::MAGIC) {
        return Ok(Input::Volume(pav1::decode(&bytes).map_err(CliError::in_file(path))?));
    }
    if bytes.starts_with(b"P5") {
        return Ok(Input::Image(pgm::read_image(path, pitch)?));
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::in_file(path)(Error::Format("not a PAV1 volume, PGM image or CSV matrix".into())))?;
    let values = matrix_csv::decode(&text).map_err(CliError::in_file(path))?;
    Ok(Input::Image(LateralImage::new(values, pitch.0, pitch.1).map_err(CliError::in_file(path))?))
}

/// Output prefix without a trailing `.pgm`.
fn prefix_of(output: &Path) -> PathBuf {
    match output.extension() {
        Some(e) if e == "pgm" => output.with_extension(""),
        _ => output.to_path_buf(),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Write `PREFIX.pgm`, `PREFIX.scale.csv` and the raw `PREFIX.csv`.
pub fn write_outputs(prefix: &Path, img: &LateralImage) -> CliResult<()> {
    pgm::write_image(&with_suffix(prefix, ".pgm"), img)?;
    matrix_csv::write(&with_suffix(prefix, ".csv"), img.pixels())
}

/// Deconvolve per the config and write the outputs under `prefix`.
fn deconv_input(input: Input, cfg: &RunConfig, prefix: &Path) -> CliResult<LateralImage> {
    if cfg.slicewise {
        let Input::Volume(vol) = input else {
            return Err(CliError::Usage("--slicewise needs a PAV1 volume".into()));
        };
        if cfg.deconv.method != DeconvMethod::Dmb {
            return Err(CliError::Usage("--slicewise runs the dmb method".into()));
        }
        let out = dmb_slicewise_3d(&vol, &psf_for(cfg, &vol), &cfg.deconv, cfg.axial.as_ref())?;
        pav1::write(&with_suffix(prefix, ".pav1"), &out)?;
        let map = map_projection(&out, None)?;
        write_outputs(prefix, &map)?;
        return Ok(map);
    }
    let psf = match &input {
        Input::Volume(v) => psf_for(cfg, v),
        Input::Image(_) => cfg.psf,
    };
    let img = input.into_image()?;
    let out = deconvolve(&img, &psf, &cfg.deconv)?;
    if let Some(reduced) = &out.reduced {
        write_outputs(&with_suffix(prefix, ".reduced"), reduced)?;
    }
    write_outputs(prefix, &out.full)?;
    Ok(out.full)
}

fn cmd_deconv(a: &DeconvArgs, cfg: &RunConfig) -> CliResult<()> {
    let input = read_input(&a.input, cfg)?;
    deconv_input(input, cfg, &prefix_of(&a.output))?;
    Ok(())
}

/// One report row: `metric,value,unit,region`.
pub struct Row {
    pub metric: String,
    pub value: String,
    pub unit: &'static str,
    pub region: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn report(rows: &[Row]) -> String {
    let mut out = String::from("metric,value,unit,region\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", csv_field(&r.metric), r.value, r.unit, csv_field(&r.region)));
    }
    out
}

fn numbers<const N: usize>(flag: &str, s: &str) -> CliResult<[f64; N]> {
    let bad = || CliError::Usage(format!("--{flag} expects {N} comma-separated numbers, got '{s}'"));
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<CliResult<_>>()?;
    v.try_into().map_err(|_| bad())
}

fn region(flag: &str, s: &str) -> CliResult<Region> {
    s.parse().map_err(|e: Error| CliError::Usage(format!("--{flag}: {e}")))
}

/// Everything inside a border frame of the given thickness.
fn interior(dims: (usize, usize), thickness: usize) -> CliResult<Region> {
    if 2 * thickness >= dims.0 || 2 * thickness >= dims.1 {
        return Err(Error::DegenerateBackground.into());
    }
    Ok(Region::Rect { ix0: thickness, ix1: dims.0 - thickness, iy0: thickness, iy1: dims.1 - thickness })
}

fn snr_row(img: &LateralImage, signal: &Region, background: &Region) -> CliResult<Row> {
    let snr = snr_db(img, signal, background)?;
    Ok(Row {
        metric: "snr".into(),
        value: format!("{snr:.6}"),
        unit: "dB",
        region: format!("signal {signal} background {background}"),
    })
}

fn measure_image(img: &LateralImage, a: &MeasureArgs) -> CliResult<Vec<Row>> {
    let mut rows = Vec::new();
    for p in &a.profile {
        let [x0, y0, x1, y1] = numbers::<4>("profile", p)?;
        let w = fwhm(&extract_profile(img, (x0, y0), (x1, y1))?)?;
        rows.push(Row { metric: "fwhm".into(), value: format!("{w:e}"), unit: "m", region: p.clone() });
    }
    let want_snr = a.snr || a.signal.is_some() || a.background.is_some();
    if let Some(l) = &a.lines {
        let [cx, cy, deg, len, wide, narrow] = numbers::<6>("lines", l)?;
        let [s0, s1] = numbers::<2>("segment", &a.segment)?;
        if !(0.0..=1.0).contains(&s0) || !(0.0..=1.0).contains(&s1) || s0 >= s1 {
            return Err(CliError::Usage(format!("--segment must satisfy 0 <= S0 < S1 <= 1, got '{}'", a.segment)));
        }
        let scene = TwoLineScene::symmetric((cx, cy), deg.to_radians(), len, wide, narrow).segment(s0, s1);
        let value = match min_resolvable_distance(img, &scene)? {
            Resolvability::Resolved(d) => format!("{d:e}"),
            Resolvability::Unresolved => "unresolved".into(),
        };
        rows.push(Row { metric: "min_resolvable_distance".into(), value, unit: "m", region: l.clone() });
    }
    if want_snr || rows.is_empty() {
        let dims = img.dims();
        let background = match &a.background {
            Some(s) => region("background", s)?,
            None => Region::default_background(dims),
        };
        let signal = match (&a.signal, background) {
            (Some(s), _) => region("signal", s)?,
            (None, Region::Frame { thickness }) => interior(dims, thickness)?,
            (None, Region::Rect { .. }) => {
                return Err(CliError::Usage("--signal is required with a rectangular --background".into()))
            }
        };
        rows.push(snr_row(img, &signal, &background)?);
    }
    Ok(rows)
}

fn cmd_measure(a: &MeasureArgs, cfg: &RunConfig) -> CliResult<()> {
    let img = read_input(&a.input, cfg)?.into_image()?;
    let text = report(&measure_image(&img, a)?);
    match &a.output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_pipeline(a: &PipelineArgs, cfg: &RunConfig) -> CliResult<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let vol = match (&a.input, &cfg.scene) {
        (Some(p), _) => pav1::read(p)?,
        (None, Some(scene)) => simulate_scene(scene, cfg)?,
        (None, None) => return Err(CliError::Usage("pipeline needs an input volume or a scene".into())),
    };
    let config_path = dir.join("run.cfg");
    fs::write(&config_path, cfg.to_text()).map_err(|e| CliError::io(&config_path, e))?;
    pav1::write(&dir.join("raw.pav1"), &vol)?;
    let raw_map = map_projection(&vol, None)?;
    write_outputs(&dir.join("raw_map"), &raw_map)?;

    let focused = saft_volume(&vol, cfg, &dir.join("saft.timing.csv"))?;
    pav1::write(&dir.join("saft.pav1"), &focused)?;
    let saft_map = map_projection(&focused, None)?;
    write_outputs(&dir.join("saft_map"), &saft_map)?;

    let start = Instant::now();
    let deconvolved = deconv_input(Input::Volume(focused), cfg, &dir.join("deconv"))?;
    eprintln!("deconv: {} in {:.2} s", cfg.deconv.method.name(), start.elapsed().as_secs_f64());

    let dims = raw_map.dims();
    let background = Region::default_background(dims);
    let Region::Frame { thickness } = background else { unreachable!("default background is a frame") };
    let signal = interior(dims, thickness)?;
    let mut rows = Vec::new();
    for (stage, img) in [("raw", &raw_map), ("saft", &saft_map), ("deconv", &deconvolved)] {
        match snr_row(img, &signal, &background) {
            Ok(mut row) => {
                row.metric = format!("{stage}.snr");
                rows.push(row);
            }
            // an empty or noise-free border has no defined SNR; skip the row
            Err(CliError::Core(Error::DegenerateBackground)) => {}
            Err(e) => return Err(e),
        }
    }
    let report_path = dir.join("report.csv");
    fs::write(&report_path, report(&rows)).map_err(|e| CliError::io(&report_path, e))
}
