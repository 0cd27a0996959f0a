//! Experiment configuration, command dispatch and output files.
//!
//! Configuration is a TOML document; every key is optional and unknown keys
//! are rejected. Defaults reproduce the 40 m × 10 m, `K_E = 0.01`,
//! `d_H = 3 m`, two-waveguide, 20-antenna setup.
//!
//! ```toml
//! k_e = 0.01
//! d_h = 3.0
//! seed = 1
//! trials = 2000
//! output_dir = "out"
//!
//! [area]
//! d_w = 10.0
//! d_l = 40.0
//! exclusion_side = 1.0
//!
//! [resolution]
//! nx = 200
//! ny = 50
//!
//! [array]
//! kind = "waveguide"      # waveguide | circular | square-cluster | focal-segment
//! n = 20
//! n_wg = 2
//! ```

use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::closed_form::{optimal_spacing_analytic, optimize_spacing_numeric};
use crate::crlb::RangeModel;
use crate::error::Error;
use crate::estimation::{run_mc_with, McOptions, McReport, NoiseMode};
use crate::experiments::{
    compare_arrays, gradient_check, heatmap_labeled, linspace_step, local_maxima, per_waveguide,
    spacing_sweep, CrlbField, GRADIENT_FD_STEP,
};
use crate::format;
use crate::geometry::{
    make_circular_array, make_focal_segment_array, make_square_cluster, make_waveguide_array,
    AntennaArray, Point3, ServiceArea, DEFAULT_WAVELENGTH,
};
use crate::svg;

/// Relative-error threshold of `gradient-check`.
pub const GRADIENT_TOLERANCE: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k_e: f64,
    pub d_h: f64,
    pub seed: u64,
    pub trials: usize,
    pub output_dir: String,
    pub area: AreaConfig,
    pub resolution: ResolutionConfig,
    pub array: ArraySpec,
    pub user: UserConfig,
    pub sweep: SweepConfig,
    pub optimize: OptimizeConfig,
    pub compare: CompareConfig,
    pub mc: McConfig,
    pub gradient: GradientConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k_e: 0.01,
            d_h: 3.0,
            seed: 1,
            trials: 2000,
            output_dir: "out".into(),
            area: AreaConfig::default(),
            resolution: ResolutionConfig::default(),
            array: ArraySpec::default(),
            user: UserConfig::default(),
            sweep: SweepConfig::default(),
            optimize: OptimizeConfig::default(),
            compare: CompareConfig::default(),
            mc: McConfig::default(),
            gradient: GradientConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaConfig {
    pub d_w: f64,
    pub d_l: f64,
    pub exclusion_side: f64,
}

impl Default for AreaConfig {
    fn default() -> Self {
        Self {
            d_w: 10.0,
            d_l: 40.0,
            exclusion_side: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolutionConfig {
    pub nx: usize,
    pub ny: usize,
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        Self { nx: 200, ny: 50 }
    }
}

/// Antenna layout. `kind` is required whenever an `[array]` table is given;
/// unset optional fields derive from the area and height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArraySpec {
    Waveguide {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_n_wg")]
        n_wg: usize,
    },
    Circular {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_wavelength")]
        wavelength: f64,
    },
    SquareCluster {
        #[serde(default = "default_one")]
        n_bar: usize,
        /// Defaults to `√2·d_H`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spacing: Option<f64>,
        #[serde(default)]
        center_x: f64,
        #[serde(default)]
        center_y: f64,
    },
    FocalSegment {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_n_wg")]
        n_wg: usize,
        /// Defaults to `−D_L/4`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        focal_x: Option<f64>,
        /// Defaults to `D_L/2`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        segment_length: Option<f64>,
    },
}

fn default_n() -> usize {
    20
}
fn default_n_wg() -> usize {
    2
}
fn default_one() -> usize {
    1
}
fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH
}

impl Default for ArraySpec {
    fn default() -> Self {
        ArraySpec::Waveguide {
            n: default_n(),
            n_wg: default_n_wg(),
        }
    }
}

impl ArraySpec {
    fn kind(&self) -> &'static str {
        match self {
            ArraySpec::Waveguide { .. } => "waveguide",
            ArraySpec::Circular { .. } => "circular",
            ArraySpec::SquareCluster { .. } => "square-cluster",
            ArraySpec::FocalSegment { .. } => "focal-segment",
        }
    }
}

/// Ground position of the user in Monte-Carlo runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserConfig {
    pub x: f64,
    pub y: f64,
}

impl Default for UserConfig {
    fn default() -> Self {
        Self { x: 5.0, y: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_bar: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_bar: 1,
            delta_min: 0.5,
            delta_max: 10.0,
            delta_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub n_bar: usize,
    /// Defaults to `(0.1·d_H, 20·d_H)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    pub tol: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            n_bar: 1,
            bracket: None,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub counts: Vec<usize>,
    pub n_wg: usize,
    pub wavelength: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            counts: crate::experiments::COMPARE_COUNTS.to_vec(),
            n_wg: 2,
            wavelength: DEFAULT_WAVELENGTH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub coarse_resolution: usize,
    pub noiseless: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            coarse_resolution: crate::estimation::DEFAULT_COARSE_RESOLUTION,
            noiseless: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradientConfig {
    pub nx: usize,
    pub ny: usize,
    pub step: f64,
}

impl Default for GradientConfig {
    fn default() -> Self {
        Self {
            nx: 20,
            ny: 20,
            step: GRADIENT_FD_STEP,
        }
    }
}

/// A rejected configuration: the offending key, why, and where.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<String>,
    pub line: Option<usize>,
    pub key: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.file, self.line) {
            (Some(file), Some(line)) => write!(f, "{file}:{line}: ")?,
            (Some(file), None) => write!(f, "{file}: ")?,
            (None, Some(line)) => write!(f, "line {line}: ")?,
            (None, None) => {}
        }
        if self.key.is_empty() {
            write!(f, "{}", self.reason)
        } else {
            write!(f, "{}: {}", self.key, self.reason)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a configuration document.
pub fn parse_config(document: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = toml::from_str(document).map_err(|e| {
        let line = e.span().map(|s| {
            document[..s.start.min(document.len())]
                .matches('\n')
                .count()
                + 1
        });
        ConfigError {
            file: None,
            line,
            key: String::new(),
            reason: e.message().to_owned(),
        }
    })?;
    config.validate().map_err(|(key, reason)| ConfigError {
        file: None,
        line: find_key_line(document, &key),
        key,
        reason,
    })?;
    Ok(config)
}

/// Line (1-based) where dotted `path` is assigned, if it appears literally.
fn find_key_line(document: &str, path: &str) -> Option<usize> {
    let (section, key) = match path.rsplit_once('.') {
        Some((s, k)) => (s, k),
        None => ("", path),
    };
    let mut current = String::new();
    for (no, raw) in document.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_owned();
            continue;
        }
        if current == section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(no + 1);
                }
            }
        }
    }
    None
}

type Violation = (String, String);

fn positive(key: &str, v: f64) -> Result<(), Violation> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err((key.into(), format!("must be positive, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<(), Violation> {
    if v >= min {
        Ok(())
    } else {
        Err((key.into(), format!("must be at least {min}, got {v}")))
    }
}

fn from_domain(prefix: &str, e: Error) -> Violation {
    match e {
        Error::Invalid { key, reason } => (format!("{prefix}{key}"), reason),
        other => (prefix.trim_end_matches('.').to_owned(), other.to_string()),
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), Violation> {
        positive("k_e", self.k_e)?;
        positive("d_h", self.d_h)?;
        at_least("trials", self.trials, 100)?;
        positive("area.d_w", self.area.d_w)?;
        positive("area.d_l", self.area.d_l)?;
        self.service_area().map_err(|e| from_domain("area.", e))?;
        at_least("resolution.nx", self.resolution.nx, 16)?;
        at_least("resolution.ny", self.resolution.ny, 16)?;
        self.antenna_array().map_err(|e| from_domain("array.", e))?;
        let region = self.service_area().map_err(|e| from_domain("area.", e))?;
        if !region.contains(&self.user_point()) {
            return Err(("user".into(), "must lie inside the service area".into()));
        }
        at_least("sweep.n_bar", self.sweep.n_bar, 1)?;
        positive("sweep.delta_min", self.sweep.delta_min)?;
        positive("sweep.delta_step", self.sweep.delta_step)?;
        if !(self.sweep.delta_max > self.sweep.delta_min) {
            return Err((
                "sweep.delta_max".into(),
                "must exceed sweep.delta_min".into(),
            ));
        }
        at_least("optimize.n_bar", self.optimize.n_bar, 1)?;
        positive("optimize.tol", self.optimize.tol)?;
        let [lo, hi] = self.optimize_bracket();
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(("optimize.bracket".into(), "need 0 < lower < upper".into()));
        }
        if self.compare.counts.is_empty() {
            return Err(("compare.counts".into(), "must not be empty".into()));
        }
        at_least("compare.n_wg", self.compare.n_wg, 1)?;
        positive("compare.wavelength", self.compare.wavelength)?;
        for &n in &self.compare.counts {
            at_least("compare.counts", n, 2)?;
            per_waveguide(n, self.compare.n_wg).map_err(|e| from_domain("compare.", e))?;
        }
        at_least("mc.coarse_resolution", self.mc.coarse_resolution, 8)?;
        at_least("gradient.nx", self.gradient.nx, 1)?;
        at_least("gradient.ny", self.gradient.ny, 1)?;
        positive("gradient.step", self.gradient.step)?;
        Ok(())
    }

    pub fn range_model(&self) -> crate::Result<RangeModel> {
        RangeModel::new(self.k_e)
    }

    pub fn service_area(&self) -> crate::Result<ServiceArea> {
        ServiceArea::new(self.area.d_w, self.area.d_l, self.area.exclusion_side)
    }

    pub fn user_point(&self) -> Point3 {
        Point3::ground(self.user.x, self.user.y)
    }

    pub fn optimize_bracket(&self) -> [f64; 2] {
        self.optimize
            .bracket
            .unwrap_or([0.1 * self.d_h, 20.0 * self.d_h])
    }

    pub fn antenna_array(&self) -> crate::Result<AntennaArray> {
        let area = self.service_area()?;
        match self.array {
            ArraySpec::Waveguide { n, n_wg } => {
                make_waveguide_array(n_wg, per_waveguide(n, n_wg)?, &area, self.d_h)
            }
            ArraySpec::Circular { n, wavelength } => make_circular_array(n, wavelength, self.d_h),
            ArraySpec::SquareCluster {
                n_bar,
                spacing,
                center_x,
                center_y,
            } => make_square_cluster(
                &Point3::ground(center_x, center_y),
                spacing.unwrap_or_else(|| optimal_spacing_analytic(self.d_h)),
                n_bar,
                self.d_h,
            ),
            ArraySpec::FocalSegment {
                n,
                n_wg,
                focal_x,
                segment_length,
            } => make_focal_segment_array(
                focal_x.unwrap_or(-area.d_l() / 4.0),
                segment_length.unwrap_or(area.d_l() / 2.0),
                n_wg,
                per_waveguide(n, n_wg)?,
                &area,
                self.d_h,
            ),
        }
    }

    /// The resolved configuration as TOML, defaults filled in.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Resolved config for file headers. The output location is left out so
/// that identical runs into different directories give identical files.
fn header_toml(config: &ExperimentConfig) -> String {
    config
        .to_toml()
        .lines()
        .filter(|l| !l.starts_with("output_dir ="))
        .map(|l| format!("{l}\n"))
        .collect()
}

// ---------------------------------------------------------------------------
// Command line

#[derive(Debug, Parser)]
#[command(
    name = "pinching-crlb",
    about = "Positioning CRLB experiments for pinching-antenna and conventional arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
enum Command {
    /// CRLB field over the service area (field.csv, field.svg).
    Heatmap(CommonArgs),
    /// Averaged CRLB of pinching vs conventional arrays per antenna count.
    Compare(CommonArgs),
    /// Square-cluster CRLB as a function of antenna spacing.
    SweepSpacing(CommonArgs),
    /// Numerically optimal square-cluster spacing.
    OptimizeSpacing(CommonArgs),
    /// Monte-Carlo ML estimator MSE against the bound.
    ValidateMc(CommonArgs),
    /// Analytic gradient against central finite differences.
    GradientCheck(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Heatmap(_) => "heatmap",
            Command::Compare(_) => "compare",
            Command::SweepSpacing(_) => "sweep-spacing",
            Command::OptimizeSpacing(_) => "optimize-spacing",
            Command::ValidateMc(_) => "validate-mc",
            Command::GradientCheck(_) => "gradient-check",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Heatmap(a)
            | Command::Compare(a)
            | Command::SweepSpacing(a)
            | Command::OptimizeSpacing(a)
            | Command::ValidateMc(a)
            | Command::GradientCheck(a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Args)]
struct CommonArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Noise seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Grid resolution as `<nx>x<ny>` (overrides `[resolution]`).
    #[arg(long, value_parser = parse_resolution)]
    resolution: Option<(usize, usize)>,
    /// Suppress progress and result lines on stdout.
    #[arg(long)]
    quiet: bool,
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected <nx>x<ny>, got {s:?}"))?;
    let nx = a.trim().parse().map_err(|_| format!("bad nx in {s:?}"))?;
    let ny = b.trim().parse().map_err(|_| format!("bad ny in {s:?}"))?;
    Ok((nx, ny))
}

#[derive(Debug)]
enum RunError {
    Config(ConfigError),
    Domain(Error),
    Io(PathBuf, std::io::Error),
    CheckFailed(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Domain(e) => write!(f, "{e}"),
            RunError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            RunError::CheckFailed(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Domain(e)
    }
}

/// Entry point of the binary: runs `argv` (without the program name) and
/// returns the process exit status.
///
/// Exit status is 0 on success, 1 when a validation check fails or an
/// experiment errors, 2 on usage or configuration errors.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = std::iter::once(std::ffi::OsString::from("pinching-crlb"))
        .chain(argv.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, RunError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                RunError::Config(ConfigError {
                    file: Some(path.display().to_string()),
                    line: None,
                    key: String::new(),
                    reason: e.to_string(),
                })
            })?;
            parse_config(&text).map_err(|mut e| {
                e.file = Some(path.display().to_string());
                RunError::Config(e)
            })?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some((nx, ny)) = args.resolution {
        config.resolution = ResolutionConfig { nx, ny };
    }
    if let Some(out) = &args.out {
        config.output_dir = out.display().to_string();
    }
    config.validate().map_err(|(key, reason)| {
        RunError::Config(ConfigError {
            file: None,
            line: None,
            key,
            reason,
        })
    })?;
    Ok(config)
}

struct Output {
    dir: Option<PathBuf>,
    header: String,
    quiet: bool,
}

impl Output {
    fn new(command: &Command, config: &ExperimentConfig, write_files: bool) -> Self {
        let header = format!(
            "pinching-crlb {}\ncommand = \"{}\"\n\n{}",
            env!("CARGO_PKG_VERSION"),
            command.name(),
            header_toml(config)
        );
        Self {
            dir: write_files.then(|| PathBuf::from(&config.output_dir)),
            header,
            quiet: command.args().quiet,
        }
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn write(&self, name: &str, body: &str, comment: &str) -> Result<(), RunError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(|e| RunError::Io(dir.clone(), e))?;
        let path = dir.join(name);
        let text = if comment == "<!--" {
            // SVG bodies carry their own header comment.
            body.to_owned()
        } else {
            format::comment_block(&self.header, comment) + body
        };
        fs::write(&path, text).map_err(|e| RunError::Io(path.clone(), e))
    }

    fn summary(&self, lines: &[String]) -> Result<(), RunError> {
        for l in lines {
            self.say(l);
        }
        self.write("summary.txt", &(lines.join("\n") + "\n"), "# ")
    }
}

fn execute(command: Command) -> Result<(), RunError> {
    let args = command.args();
    let config = load_config(args)?;
    let write_files = match &command {
        Command::GradientCheck(a) => a.out.is_some(),
        _ => true,
    };
    let out = Output::new(&command, &config, write_files);
    match &command {
        Command::Heatmap(_) => cmd_heatmap(&config, &out),
        Command::Compare(_) => cmd_compare(&config, &out),
        Command::SweepSpacing(_) => cmd_sweep(&config, &out),
        Command::OptimizeSpacing(_) => cmd_optimize(&config, &out),
        Command::ValidateMc(_) => cmd_validate_mc(&config, &out),
        Command::GradientCheck(_) => cmd_gradient(&config, &out),
    }
}

/// CSV body of a field: `i,j,x,y,crlb` rows, `j` outer.
pub fn field_csv(field: &CrlbField) -> String {
    let mut s = format!(
        "# array = {}\n# nx = {}\n# ny = {}\ni,j,x,y,crlb\n",
        field.array_id, field.nx, field.ny
    );
    for j in 0..field.ny {
        for i in 0..field.nx {
            let c = field.center(i, j);
            s.push_str(&format!(
                "{i},{j},{},{},{}\n",
                format::sig(c.x),
                format::sig(c.y),
                format::crlb(field.get(i, j))
            ));
        }
    }
    s
}

fn cmd_heatmap(config: &ExperimentConfig, out: &Output) -> Result<(), RunError> {
    let model = config.range_model()?;
    let area = config.service_area()?;
    let array = config.antenna_array()?;
    let res = (config.resolution.nx, config.resolution.ny);
    let field = heatmap_labeled(&model, &array, &area, res, config.array.kind())?;
    out.write("field.csv", &field_csv(&field), "# ")?;
    let svg_header = format::comment_block(&out.header, "");
    out.write(
        "field.svg",
        &svg::render_field(&field, array.antennas(), &svg_header),
        "<!--",
    )?;
    let maxima = local_maxima(&field);
    let (i, j) = field.argmin().unwrap_or((0, 0));
    let best = field.center(i, j);
    out.summary(&[
        format!("cells = {}", field.nx * field.ny),
        format!("non_finite_cells = {}", field.count_non_finite()),
        format!(
            "min_crlb = {}",
            field.min_value().map_or("inf".into(), format::sig)
        ),
        format!(
            "min_crlb_at = ({}, {})",
            format::sig(best.x),
            format::sig(best.y)
        ),
        format!(
            "max_finite_crlb = {}",
            field.max_finite().map_or("inf".into(), format::sig)
        ),
        format!("local_maxima = {}", maxima.len()),
    ])
}

fn cmd_compare(config: &ExperimentConfig, out: &Output) -> Result<(), RunError> {
    let model = config.range_model()?;
    let area = config.service_area()?;
    let res = (config.resolution.nx, config.resolution.ny);
    let rows = compare_arrays(
        &model,
        &area,
        &config.compare.counts,
        config.compare.n_wg,
        config.compare.wavelength,
        config.d_h,
        res,
    )?;
    let mut csv = String::from("n,pinching_avg,conventional_avg,delta_crb\n");
    let mut lines = Vec::new();
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            format::sig(r.pinching),
            format::sig(r.conventional),
            format::sig(r.delta)
        ));
        lines.push(format!(
            "n = {:>3}  pinching = {}  conventional = {}  delta = {}",
            r.n,
            format::sig(r.pinching),
            format::sig(r.conventional),
            format::sig(r.delta)
        ));
    }
    let dominated = rows.iter().all(|r| r.pinching < r.conventional);
    lines.push(format!("pinching_better_for_all_n = {dominated}"));
    out.write("curve.csv", &csv, "# ")?;
    out.summary(&lines)
}

fn cmd_sweep(config: &ExperimentConfig, out: &Output) -> Result<(), RunError> {
    let s = &config.sweep;
    let deltas = linspace_step(s.delta_min, s.delta_max, s.delta_step);
    let curve = spacing_sweep(s.n_bar, config.d_h, config.k_e, &deltas)?;
    let mut csv = String::from("delta,crb\n");
    for (d, c) in &curve.points {
        csv.push_str(&format!("{},{}\n", format::sig(*d), format::sig(*c)));
    }
    out.write("curve.csv", &csv, "# ")?;
    let m = curve.argmin().unwrap_or(0);
    let mut lines = vec![
        format!("n_bar = {}", s.n_bar),
        format!("sampled_argmin = {}", format::sig(curve.points[m].0)),
        format!("sampled_min_crb = {}", format::sig(curve.points[m].1)),
        format!("unimodal = {}", curve.is_unimodal()),
    ];
    lines.push(format!(
        "analytic_optimum = {}  (sqrt(2) * d_h, exact for n_bar = 1)",
        format::sig(optimal_spacing_analytic(config.d_h))
    ));
    out.summary(&lines)
}

fn cmd_optimize(config: &ExperimentConfig, out: &Output) -> Result<(), RunError> {
    let o = &config.optimize;
    let [lo, hi] = config.optimize_bracket();
    let delta = optimize_spacing_numeric(o.n_bar, config.d_h, config.k_e, (lo, hi), o.tol)?;
    let mut lines = vec![
        format!("n_bar = {}", o.n_bar),
        format!("optimal_spacing = {}", format::sig(delta)),
    ];
    if o.n_bar == 1 {
        let analytic = optimal_spacing_analytic(config.d_h);
        lines.push(format!("analytic_optimum = {}", format::sig(analytic)));
        lines.push(format!(
            "abs_difference = {}",
            format::sig((delta - analytic).abs())
        ));
    }
    out.summary(&lines)
}

/// TOML body of a Monte-Carlo report.
pub fn report_toml(report: &McReport, user: &Point3) -> String {
    format!(
        "trials = {}\nmse = {}\ncrlb_paper = {}\ncrlb_full = {}\nratio_paper = {}\n\n\
         [user]\nx = {}\ny = {}\n\n[mean_estimate]\nx = {}\ny = {}\n",
        report.trials,
        format::sig(report.mse),
        format::crlb(report.crlb_paper),
        format::crlb(report.crlb_full),
        format::sig(report.ratio_paper),
        format::sig(user.x),
        format::sig(user.y),
        format::sig(report.mean_estimate.x),
        format::sig(report.mean_estimate.y),
    )
}

fn cmd_validate_mc(config: &ExperimentConfig, out: &Output) -> Result<(), RunError> {
    let model = config.range_model()?;
    let area = config.service_area()?;
    let array = config.antenna_array()?;
    let user = config.user_point();
    let options = McOptions {
        coarse_resolution: config.mc.coarse_resolution,
        noise: if config.mc.noiseless {
            NoiseMode::Noiseless
        } else {
            NoiseMode::Model
        },
    };
    let report = run_mc_with(
        &model,
        &user,
        &array,
        config.trials,
        config.seed,
        area,
        options,
    )?;
    out.write("report.toml", &report_toml(&report, &user), "# ")?;
    out.summary(&[
        format!("trials = {}", report.trials),
        format!("mse = {}", format::sig(report.mse)),
        format!("crlb_paper = {}", format::crlb(report.crlb_paper)),
        format!("crlb_full = {}", format::crlb(report.crlb_full)),
        format!("ratio_paper = {}", format::sig(report.ratio_paper)),
    ])
}

fn cmd_gradient(config: &ExperimentConfig, out: &Output) -> Result<(), RunError> {
    let model = config.range_model()?;
    let area = config.service_area()?.without_exclusion();
    let array = config.antenna_array()?;
    let g = &config.gradient;
    let check = gradient_check(&model, &array, &area, (g.nx, g.ny), g.step);
    out.summary(&[
        format!("probes = {}", check.probes),
        format!("skipped_singular = {}", check.skipped),
        format!(
            "max_relative_error = {}",
            format::sig(check.max_relative_error)
        ),
        format!("tolerance = {}", format::sig(GRADIENT_TOLERANCE)),
    ])?;
    if check.max_relative_error < GRADIENT_TOLERANCE {
        Ok(())
    } else {
        Err(RunError::CheckFailed(format!(
            "max relative gradient error {} >= {}",
            format::sig(check.max_relative_error),
            format::sig(GRADIENT_TOLERANCE)
        )))
    }
}
