//! Run configuration, run records and report files, plus the command
//! runners the `mml` binary dispatches to.
//!
//! A [`RunConfig`] is assembled from built-in defaults, then a TOML file,
//! then command-line overrides. Every runner validates the whole config
//! before touching the cache or computing anything, and returns a
//! [`RunRecord`] whose `results` payload is reproducible byte for byte.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{cf_required_n_max, constant_cf, measure_bundles, scan_bundles, synthetic_scan, CfPlan, PredictionInputs, ResidualScan};
use crate::error::{MmlError, Result};
use crate::hecke_coeffs::{
    check_generated, generate_tau_table, ingest_coefficients, load_or_generate, CacheStatus, CoefficientTable,
    FormDescriptor, InvariantReport,
};
use crate::moments::{
    mean_value_check, sharp_moment, smoothed_moment, Cutoff, MeanValue, MomentEngine, MomentRequest, MomentResult,
    QuadratureConfig, Variant, MEAN_VALUE_MAX_N, MIN_T,
};
use crate::oscillatory_lab::{default_problems, load_problem_file, outcomes_csv, run_problem, ProblemOutcome};
use crate::special_functions::{CutoffKernel, KernelKind, DEFAULT_KERNEL_WIDTH};
use crate::test_functions::{integral_c, BumpFunction};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable that overrides the configured cache directory.
pub const CACHE_DIR_ENV: &str = "MML_CACHE_DIR";

/// Header of the residual CSV table.
pub const RESIDUAL_CSV_HEADER: &str =
    "T,measured_re,measured_im,predicted_re,predicted_im,residual_re,residual_im,abs_residual,abs_residual_over_T_half,abs_residual_over_T_two_thirds,quad_error";

/// Header of the moment CSV row.
pub const MOMENT_CSV_HEADER: &str = "T,variant,cutoff,value_re,value_im,quad_error,eval_count,panels";

/// τ values printed by `coeffs` (they all fit in i64).
const TAU_PRINT_LIMIT: usize = 200;

/// Generated tables are rounded up to a multiple of this so nearby T
/// values share one cache file.
const CACHE_GRANULE: usize = 1 << 14;

/// `MML_CACHE_DIR` when set and non-empty.
pub fn env_cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Coeffs,
    Moment,
    Verify,
    Osclab,
    Meanvalue,
    Constants,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::Moment => "moment",
            Command::Verify => "verify",
            Command::Osclab => "osclab",
            Command::Meanvalue => "meanvalue",
            Command::Constants => "constants",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralConfig {
    /// Directory of the coefficient cache.
    pub cache_dir: Option<PathBuf>,
    /// CSV coefficient file used instead of generated Δ coefficients.
    pub coefficients: Option<PathBuf>,
    /// JSON record destination; stdout when absent.
    pub output: Option<PathBuf>,
    /// CSV table destination.
    pub csv: Option<PathBuf>,
    /// Two-column |residual| vs T data file (verify only).
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Delta,
    MaassEven,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormConfig {
    pub kind: FormKind,
    /// Spectral parameter of a Maass form.
    pub r: Option<f64>,
}

impl Default for FormConfig {
    fn default() -> Self {
        FormConfig { kind: FormKind::Delta, r: None }
    }
}

impl FormConfig {
    pub fn descriptor(&self) -> Result<FormDescriptor> {
        let form = match self.kind {
            FormKind::Delta => FormDescriptor::delta(),
            FormKind::MaassEven => FormDescriptor::maass_even(
                self.r.ok_or_else(|| MmlError::Validation("a maass_even form needs r".into()))?,
            ),
        };
        form.validate()?;
        Ok(form)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub width: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { kind: KernelKind::Gauss, width: DEFAULT_KERNEL_WIDTH }
    }
}

impl KernelConfig {
    pub fn kernel(&self) -> Result<CutoffKernel> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(MmlError::Validation(format!("kernel width {} must be positive", self.width)));
        }
        Ok(CutoffKernel { kind: self.kind, width: self.width })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Plain,
    Plateau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub kind: WeightKind,
    /// Plateau sharpness Δ.
    pub delta: Option<f64>,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { kind: WeightKind::Plain, delta: None }
    }
}

impl WeightConfig {
    pub fn bump(&self) -> Result<BumpFunction> {
        let v = match self.kind {
            WeightKind::Plain => BumpFunction::plain(),
            WeightKind::Plateau => BumpFunction::plateau(
                self.delta.ok_or_else(|| MmlError::Validation("a plateau weight needs delta".into()))?,
            ),
        };
        v.validate()?;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    Smoothed,
    Sharp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    pub n_max: usize,
    /// Validate this CSV file instead of generating Δ.
    pub ingest: Option<PathBuf>,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        CoeffsConfig { n_max: 1000, ingest: None }
    }
}

impl CoeffsConfig {
    fn validate(&self) -> Result<()> {
        if self.ingest.is_none() && self.n_max == 0 {
            return Err(MmlError::Validation("n_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentConfig {
    #[serde(rename = "T")]
    pub t_big: f64,
    pub variant: Variant,
    pub cutoff: CutoffKind,
}

impl Default for MomentConfig {
    fn default() -> Self {
        MomentConfig { t_big: 500.0, variant: Variant::ZetaLinear, cutoff: CutoffKind::Smoothed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(rename = "T_list")]
    pub t_list: Vec<f64>,
    pub variant: Variant,
    pub cutoff: CutoffKind,
    /// Exit 0 iff the fitted exponent is at most this.
    pub threshold: f64,
    /// Replace the measurement by main term + T^e.
    pub synthetic_exponent: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            t_list: vec![500.0, 1000.0, 2000.0, 4000.0],
            variant: Variant::ZetaLinear,
            cutoff: CutoffKind::Smoothed,
            threshold: 0.75,
            synthetic_exponent: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanValueConfig {
    /// Real parts of a_1..a_N.
    pub coefficients: Vec<f64>,
    /// Imaginary parts; zero when empty.
    pub coefficients_im: Vec<f64>,
    #[serde(rename = "T")]
    pub t_big: f64,
}

impl Default for MeanValueConfig {
    fn default() -> Self {
        MeanValueConfig { coefficients: vec![1.0, 1.0], coefficients_im: Vec::new(), t_big: 10.0 }
    }
}

impl MeanValueConfig {
    pub fn sequence(&self) -> Result<Vec<Complex64>> {
        if !self.coefficients_im.is_empty() && self.coefficients_im.len() != self.coefficients.len() {
            return Err(MmlError::Validation("coefficients_im must match coefficients in length".into()));
        }
        Ok(self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, &re)| Complex64::new(re, self.coefficients_im.get(i).copied().unwrap_or(0.0)))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OsclabConfig {
    /// Problem file; the built-in problems when absent.
    pub problems: Option<PathBuf>,
}

/// Every knob of every command, grouped in TOML sections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub general: GeneralConfig,
    pub form: FormConfig,
    pub kernel: KernelConfig,
    pub weight: WeightConfig,
    pub quadrature: QuadratureConfig,
    pub coeffs: CoeffsConfig,
    pub moment: MomentConfig,
    pub verify: VerifyConfig,
    pub meanvalue: MeanValueConfig,
    pub osclab: OsclabConfig,
}

impl RunConfig {
    /// Defaults overlaid with a TOML file; missing keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| MmlError::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MmlError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| MmlError::Parse(format!("config: {e}")))
    }

    /// Cache directory: the configured one, then `MML_CACHE_DIR`, then a
    /// directory under the system temp dir. The CLI puts the environment
    /// variable above the config file by overriding `general.cache_dir`.
    pub fn cache_dir(&self) -> PathBuf {
        self.general
            .cache_dir
            .clone()
            .or_else(env_cache_dir)
            .unwrap_or_else(|| std::env::temp_dir().join("mml-cache"))
    }

    /// Check everything `command` will use.
    pub fn validate(&self, command: Command) -> Result<()> {
        match command {
            Command::Coeffs => self.coeffs.validate(),
            Command::Moment => {
                self.moment_request()?.validate()?;
                self.form.descriptor()?;
                self.kernel.kernel()?;
                Ok(())
            }
            Command::Verify => {
                let v = &self.verify;
                if v.t_list.len() < 3 {
                    return Err(MmlError::Validation(format!("T_list needs at least 3 values, got {}", v.t_list.len())));
                }
                if v.t_list.iter().any(|t| !(*t >= MIN_T && t.is_finite())) || v.t_list.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(MmlError::Validation(format!("T_list must be increasing with every T >= {MIN_T}")));
                }
                if !v.threshold.is_finite() {
                    return Err(MmlError::Validation("threshold must be finite".into()));
                }
                if let Some(e) = v.synthetic_exponent {
                    if !e.is_finite() {
                        return Err(MmlError::Validation("synthetic exponent must be finite".into()));
                    }
                }
                self.weight.bump()?;
                self.form.descriptor()?;
                self.kernel.kernel()?;
                self.quadrature.validate()
            }
            Command::Osclab => Ok(()),
            Command::Meanvalue => {
                let a = self.meanvalue.sequence()?;
                if a.is_empty() || a.len() > MEAN_VALUE_MAX_N {
                    return Err(MmlError::Validation(format!("need 1..={MEAN_VALUE_MAX_N} coefficients")));
                }
                if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(MmlError::Validation("coefficients must be finite".into()));
                }
                if !(self.meanvalue.t_big > 0.0 && self.meanvalue.t_big.is_finite()) {
                    return Err(MmlError::Validation("T must be positive".into()));
                }
                Ok(())
            }
            Command::Constants => {
                self.weight.bump()?;
                self.form.descriptor()?;
                Ok(())
            }
        }
    }

    pub fn moment_request(&self) -> Result<MomentRequest> {
        let cutoff = match self.moment.cutoff {
            CutoffKind::Smoothed => Cutoff::Smoothed { weight: self.weight.bump()? },
            CutoffKind::Sharp => Cutoff::Sharp,
        };
        Ok(MomentRequest { t_big: self.moment.t_big, variant: self.moment.variant, cutoff, quadrature: self.quadrature })
    }

    /// The config with everything that cannot change the results (paths of
    /// outputs and cache) cleared.
    fn hash_view(&self) -> RunConfig {
        let mut c = self.clone();
        c.general.cache_dir = None;
        c.general.output = None;
        c.general.csv = None;
        c.general.plot = None;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    ThresholdFail,
}

/// One command run. `results` is the reproducible payload; `wall_time` and
/// `log` vary between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: Command,
    pub config: RunConfig,
    pub results: serde_json::Value,
    pub status: RunStatus,
    pub version: String,
    /// SHA-256 of the command, the result-relevant config and the contents
    /// of any input files.
    pub input_hash: String,
    pub wall_time: f64,
    pub log: Vec<String>,
}

impl RunRecord {
    /// Compact JSON of the results payload, the byte-comparable part.
    pub fn results_payload(&self) -> String {
        serde_json::to_string(&self.results).expect("JSON values always serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| MmlError::Parse(format!("run record: {e}")))
    }
}

/// Machine-readable error record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub command: Option<String>,
    pub code: String,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorRecord {
    pub fn new(command: Option<Command>, e: &MmlError) -> Self {
        ErrorRecord {
            command: command.map(|c| c.name().to_string()),
            code: e.code().to_string(),
            message: e.to_string(),
            exit_code: exit_code_for(e),
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

pub fn exit_code_for(e: &MmlError) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_INTERNAL
    }
}

/// Side files a run wants written (CSV table, plot data).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub record: Option<RunRecord>,
    pub csv: Option<String>,
    pub plot: Option<String>,
}

fn input_hash(command: Command, config: &RunConfig, files: &[&Path]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(command.name().as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(&config.hash_view()).expect("configs always serialize"));
    for f in files {
        h.update([0]);
        h.update(std::fs::read(f).map_err(|e| MmlError::Io(format!("{}: {e}", f.display())))?);
    }
    Ok(format!("{:x}", h.finalize()))
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("result types always serialize")
}

/// Coefficients for `form` covering n ≤ required: the configured CSV file,
/// or generated Δ coefficients through the cache.
fn coefficient_table(config: &RunConfig, required: usize, log: &mut Vec<String>) -> Result<CoefficientTable> {
    if let Some(path) = &config.general.coefficients {
        let (table, _) = ingest_coefficients(path)?;
        if table.n_max() < required {
            return Err(MmlError::InsufficientCoefficients { required, available: table.n_max() });
        }
        log.push(format!("coefficients: {} ({} values)", path.display(), table.n_max()));
        return Ok(table);
    }
    if config.form.kind != FormKind::Delta {
        return Err(MmlError::Validation("only Δ coefficients can be generated; give a coefficient file".into()));
    }
    let n_max = required.div_ceil(CACHE_GRANULE) * CACHE_GRANULE;
    let dir = config.cache_dir();
    let (table, status) = load_or_generate(&dir, n_max)?;
    log.push(format!(
        "cache {}: {}",
        if status == CacheStatus::Hit { "hit" } else { "miss" },
        crate::hecke_coeffs::cache_path(&dir, n_max).display()
    ));
    Ok(table)
}

fn input_files(config: &RunConfig) -> Vec<&Path> {
    config.general.coefficients.as_deref().into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffsResults {
    pub n_max: usize,
    pub source: String,
    pub report: InvariantReport,
    /// τ(1..) up to a print limit, for generated tables.
    pub tau: Vec<i64>,
    pub warnings: Vec<String>,
}

/// Generate (and cache) or ingest a coefficient table and check it.
pub fn run_coeffs(config: &RunConfig) -> Result<RunOutput> {
    config.validate(Command::Coeffs)?;
    let start = Instant::now();
    let mut log = Vec::new();
    let (results, files): (CoeffsResults, Vec<&Path>) = match &config.coeffs.ingest {
        Some(path) => {
            let (table, report) = ingest_coefficients(path)?;
            let tau = table.exact_values().map(print_tau).unwrap_or_default();
            let r = CoeffsResults {
                n_max: table.n_max(),
                source: "ingested".into(),
                report,
                tau,
                warnings: table.warnings().to_vec(),
            };
            (r, vec![path.as_path()])
        }
        None => {
            let n_max = config.coeffs.n_max;
            let table = generate_tau_table(n_max)?;
            let report = check_generated(&table)?;
            let dir = config.cache_dir();
            let path = crate::hecke_coeffs::cache_path(&dir, n_max);
            let hit = std::fs::read(&path)
                .ok()
                .and_then(|b| crate::hecke_coeffs::decode_cache(&b).ok())
                .is_some_and(|t| t.values() == table.values());
            if hit {
                log.push(format!("cache hit: {}", path.display()));
            } else {
                std::fs::create_dir_all(&dir)?;
                let tmp = path.with_extension("tmp");
                std::fs::write(&tmp, crate::hecke_coeffs::encode_cache(&table))?;
                std::fs::rename(&tmp, &path)?;
                log.push(format!("cache written: {}", path.display()));
            }
            let tau = table.exact_values().map(print_tau).unwrap_or_default();
            (CoeffsResults { n_max, source: "generated".into(), report, tau, warnings: Vec::new() }, Vec::new())
        }
    };
    let record = RunRecord {
        command: Command::Coeffs,
        config: config.clone(),
        results: to_value(&results),
        status: RunStatus::Ok,
        version: VERSION.into(),
        input_hash: input_hash(Command::Coeffs, config, &files)?,
        wall_time: start.elapsed().as_secs_f64(),
        log,
    };
    Ok(RunOutput { record: Some(record), csv: None, plot: None })
}

fn print_tau(tau: &[i128]) -> Vec<i64> {
    tau.iter().take(TAU_PRINT_LIMIT).map(|&t| t as i64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResults {
    #[serde(rename = "T")]
    pub t_big: f64,
    pub variant: Variant,
    pub cutoff: CutoffKind,
    pub moment: MomentResult,
}

pub fn run_moment(config: &RunConfig) -> Result<RunOutput> {
    config.validate(Command::Moment)?;
    let start = Instant::now();
    let mut log = Vec::new();
    let req = config.moment_request()?;
    let form = config.form.descriptor()?;
    let kernel = config.kernel.kernel()?;
    let required = MomentEngine::required_n_max(&form, kernel, req.t_max());
    let table = coefficient_table(config, required, &mut log)?;
    let engine = MomentEngine::new(&form, &table, kernel, req.t_max())?;
    let moment = match req.cutoff {
        Cutoff::Smoothed { .. } => smoothed_moment(&req, &engine)?,
        Cutoff::Sharp => sharp_moment(req.t_big, req.variant, &engine, &req.quadrature)?,
    };
    let results = MomentResults { t_big: req.t_big, variant: req.variant, cutoff: config.moment.cutoff, moment };
    let csv = format!(
        "{MOMENT_CSV_HEADER}\n{:?},{},{},{:?},{:?},{:?},{},{}\n",
        results.t_big,
        results.variant.name(),
        match results.cutoff {
            CutoffKind::Smoothed => "smoothed",
            CutoffKind::Sharp => "sharp",
        },
        results.moment.value.re,
        results.moment.value.im,
        results.moment.quad_error,
        results.moment.eval_count,
        results.moment.panels
    );
    let record = RunRecord {
        command: Command::Moment,
        config: config.clone(),
        results: to_value(&results),
        status: RunStatus::Ok,
        version: VERSION.into(),
        input_hash: input_hash(Command::Moment, config, &input_files(config))?,
        wall_time: start.elapsed().as_secs_f64(),
        log,
    };
    Ok(RunOutput { record: Some(record), csv: Some(csv), plot: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyResults {
    pub inputs: PredictionInputs,
    pub scan: ResidualScan,
    pub threshold: f64,
    pub synthetic_exponent: Option<f64>,
    pub pass: bool,
}

/// Residual CSV with the fixed header.
pub fn residual_csv(scan: &ResidualScan) -> String {
    let mut out = String::from(RESIDUAL_CSV_HEADER);
    out.push('\n');
    for r in &scan.rows {
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            r.t_big,
            r.measured.re,
            r.measured.im,
            r.predicted.re,
            r.predicted.im,
            r.residual.re,
            r.residual.im,
            r.abs_residual,
            r.scaled_half,
            r.scaled_two_thirds,
            r.quad_error
        ));
    }
    out
}

/// Gnuplot-readable two columns: T and |R(T)|.
pub fn residual_plot_data(scan: &ResidualScan) -> String {
    let mut out = format!("# {} residuals: T |R(T)|\n", scan.variant.name());
    for r in &scan.rows {
        out.push_str(&format!("{:?} {:?}\n", r.t_big, r.abs_residual));
    }
    out
}

/// Exit-0 rule of verify: the fitted exponent is at most the threshold. A
/// scan whose residuals sit at the noise floor has no exponent and passes.
pub fn verify_passes(scan: &ResidualScan, threshold: f64) -> bool {
    match scan.slope {
        Some(s) => s <= threshold,
        None => scan.not_a_fit,
    }
}

pub fn run_verify(config: &RunConfig) -> Result<RunOutput> {
    config.validate(Command::Verify)?;
    let start = Instant::now();
    let mut log = Vec::new();
    let v = &config.verify;
    let weight = config.weight.bump()?;
    let form = config.form.descriptor()?;
    let kernel = config.kernel.kernel()?;
    let t_max = 2.0 * v.t_list.last().copied().unwrap_or(MIN_T);
    let required = cf_required_n_max(&form, &CfPlan::default())
        .max(if v.synthetic_exponent.is_some() { 0 } else { MomentEngine::required_n_max(&form, kernel, t_max) });
    let table = coefficient_table(config, required, &mut log)?;
    let inputs = PredictionInputs::compute(&weight, &form, &table)?;
    let scan = match v.synthetic_exponent {
        Some(e) => synthetic_scan(v.variant, &inputs, &v.t_list, Some(e))?,
        None => {
            let engine = MomentEngine::new(&form, &table, kernel, t_max)?;
            let bundles = measure_bundles(&v.t_list, &engine, &config.quadrature)?;
            let cutoff = match v.cutoff {
                CutoffKind::Smoothed => Cutoff::Smoothed { weight },
                CutoffKind::Sharp => Cutoff::Sharp,
            };
            scan_bundles(&bundles, v.variant, &cutoff, &inputs)?
        }
    };
    let pass = verify_passes(&scan, v.threshold);
    let csv = residual_csv(&scan);
    let plot = residual_plot_data(&scan);
    let results = VerifyResults { inputs, scan, threshold: v.threshold, synthetic_exponent: v.synthetic_exponent, pass };
    let record = RunRecord {
        command: Command::Verify,
        config: config.clone(),
        results: to_value(&results),
        status: if pass { RunStatus::Ok } else { RunStatus::ThresholdFail },
        version: VERSION.into(),
        input_hash: input_hash(Command::Verify, config, &input_files(config))?,
        wall_time: start.elapsed().as_secs_f64(),
        log,
    };
    Ok(RunOutput { record: Some(record), csv: Some(csv), plot: Some(plot) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsclabResults {
    pub outcomes: Vec<ProblemOutcome>,
    pub pass: bool,
}

pub fn run_osclab(config: &RunConfig) -> Result<RunOutput> {
    config.validate(Command::Osclab)?;
    let start = Instant::now();
    let (file, files) = match &config.osclab.problems {
        Some(p) => (load_problem_file(p)?, vec![p.as_path()]),
        None => (default_problems(), Vec::new()),
    };
    let outcomes = file.problem.iter().map(run_problem).collect::<Result<Vec<_>>>()?;
    let pass = outcomes.iter().all(ProblemOutcome::pass);
    let csv = outcomes_csv(&outcomes)?;
    let results = OsclabResults { outcomes, pass };
    let record = RunRecord {
        command: Command::Osclab,
        config: config.clone(),
        results: to_value(&results),
        status: if pass { RunStatus::Ok } else { RunStatus::ThresholdFail },
        version: VERSION.into(),
        input_hash: input_hash(Command::Osclab, config, &files)?,
        wall_time: start.elapsed().as_secs_f64(),
        log: Vec::new(),
    };
    Ok(RunOutput { record: Some(record), csv: Some(csv), plot: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanValueResults {
    pub n: usize,
    #[serde(rename = "T")]
    pub t_big: f64,
    pub check: MeanValue,
    /// lhs ≤ 3·rhs
    pub pass: bool,
}

pub fn run_meanvalue(config: &RunConfig) -> Result<RunOutput> {
    config.validate(Command::Meanvalue)?;
    let start = Instant::now();
    let a = config.meanvalue.sequence()?;
    let check = mean_value_check(&a, config.meanvalue.t_big)?;
    let pass = check.lhs <= 3.0 * check.rhs;
    let csv = format!("N,T,lhs,rhs,lhs_error\n{},{:?},{:?},{:?},{:?}\n", a.len(), config.meanvalue.t_big, check.lhs, check.rhs, check.lhs_error);
    let results = MeanValueResults { n: a.len(), t_big: config.meanvalue.t_big, check, pass };
    let record = RunRecord {
        command: Command::Meanvalue,
        config: config.clone(),
        results: to_value(&results),
        status: if pass { RunStatus::Ok } else { RunStatus::ThresholdFail },
        version: VERSION.into(),
        input_hash: input_hash(Command::Meanvalue, config, &[])?,
        wall_time: start.elapsed().as_secs_f64(),
        log: Vec::new(),
    };
    Ok(RunOutput { record: Some(record), csv: Some(csv), plot: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsResults {
    pub c: f64,
    pub c_f: Complex64,
    pub c_f_term1: Complex64,
    pub c_f_term2: Complex64,
    pub c_f_quad_error: f64,
    pub l_one: f64,
}

pub fn run_constants(config: &RunConfig) -> Result<RunOutput> {
    config.validate(Command::Constants)?;
    let start = Instant::now();
    let mut log = Vec::new();
    let weight = config.weight.bump()?;
    let form = config.form.descriptor()?;
    let table = coefficient_table(config, cf_required_n_max(&form, &CfPlan::default()), &mut log)?;
    let cf = constant_cf(&weight, &form, &table)?;
    let results = ConstantsResults {
        c: integral_c(&weight)?,
        c_f: cf.c_f,
        c_f_term1: cf.term1,
        c_f_term2: cf.term2,
        c_f_quad_error: cf.quad_error,
        l_one: crate::asymptotics::l_at_one(&form, &table)?,
    };
    let record = RunRecord {
        command: Command::Constants,
        config: config.clone(),
        results: to_value(&results),
        status: RunStatus::Ok,
        version: VERSION.into(),
        input_hash: input_hash(Command::Constants, config, &input_files(config))?,
        wall_time: start.elapsed().as_secs_f64(),
        log,
    };
    Ok(RunOutput { record: Some(record), csv: None, plot: None })
}

pub fn run(command: Command, config: &RunConfig) -> Result<RunOutput> {
    match command {
        Command::Coeffs => run_coeffs(config),
        Command::Moment => run_moment(config),
        Command::Verify => run_verify(config),
        Command::Osclab => run_osclab(config),
        Command::Meanvalue => run_meanvalue(config),
        Command::Constants => run_constants(config),
    }
}

/// Write the side files of a run; called once, after the run succeeded.
pub fn write_outputs(config: &RunConfig, out: &RunOutput) -> Result<()> {
    let write = |path: &Option<PathBuf>, body: &Option<String>| -> Result<()> {
        if let (Some(p), Some(b)) = (path, body) {
            std::fs::write(p, b).map_err(|e| MmlError::Io(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    };
    write(&config.general.csv, &out.csv)?;
    write(&config.general.plot, &out.plot)?;
    if let (Some(p), Some(r)) = (&config.general.output, &out.record) {
        std::fs::write(p, r.to_json() + "\n").map_err(|e| MmlError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}
