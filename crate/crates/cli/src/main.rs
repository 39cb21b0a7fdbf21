//! `mml`: command-line driver for the moment laboratory.
//!
//! Settings come from built-in defaults, then `--config FILE`, then flags.
//! The JSON run record goes to stdout (or `--output`); a short human
//! summary goes to stderr. Exit codes: 0 success, 1 internal error,
//! 2 validation error, 3 threshold failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mml_core::moments::Variant;
use mml_core::reports::{
    env_cache_dir, run, write_outputs, Command, CutoffKind, ErrorRecord, RunConfig, RunOutput, RunStatus, WeightKind,
    EXIT_THRESHOLD,
};
use mml_core::special_functions::KernelKind;
use mml_core::MmlError;

#[derive(Parser, Debug)]
#[command(name = "mml", version, about = "Mixed-moment laboratory for Hecke L-functions and zeta")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Coefficient cache directory; overrides MML_CACHE_DIR, which overrides the config file.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// CSV coefficient file to use instead of generated Δ coefficients.
    #[arg(long, global = true)]
    coefficients: Option<PathBuf>,
    /// Write the JSON record here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Write the CSV table here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Write |residual| vs T plot data here (verify).
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// Worker threads (0: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Cap on integrand evaluations.
    #[arg(long, global = true)]
    max_evaluations: Option<usize>,
    #[arg(long, global = true, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long, global = true)]
    kernel_width: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate (or ingest) Hecke coefficients and check their invariants.
    Coeffs {
        #[arg(long)]
        n_max: Option<usize>,
        /// Validate a CSV coefficient file instead of generating.
        #[arg(long)]
        ingest: Option<PathBuf>,
    },
    /// One moment integral over [T, 2T].
    Moment {
        #[arg(long = "T", alias = "t")]
        t_big: Option<f64>,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long, value_enum)]
        cutoff: Option<CutoffArg>,
        #[command(flatten)]
        weight: WeightArgs,
    },
    /// Residuals against the predicted main term over a list of T.
    Verify {
        #[arg(long = "T-list", alias = "t-list", value_delimiter = ',')]
        t_list: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long, value_enum)]
        cutoff: Option<CutoffArg>,
        /// Pass iff the fitted residual exponent is at most this.
        #[arg(long)]
        threshold: Option<f64>,
        /// Plant measured = main term + T^e instead of integrating.
        #[arg(long)]
        synthetic_exponent: Option<f64>,
        #[command(flatten)]
        weight: WeightArgs,
    },
    /// Stationary-phase experiments from a problem file.
    Osclab {
        #[arg(long)]
        problems: Option<PathBuf>,
    },
    /// Mean-value inequality for a coefficient sequence.
    Meanvalue {
        /// Real coefficients a_1,...,a_N.
        #[arg(long = "a", id = "a", value_delimiter = ',', allow_negative_numbers = true)]
        coefficients: Option<Vec<f64>>,
        #[arg(long = "T", alias = "t")]
        t_big: Option<f64>,
    },
    /// Print c, c_f and L(1, f).
    Constants {
        #[command(flatten)]
        weight: WeightArgs,
    },
}

#[derive(Args, Debug, Default)]
struct WeightArgs {
    #[arg(long, value_enum)]
    weight: Option<WeightArg>,
    /// Plateau sharpness Δ.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum VariantArg {
    ZetaSquare,
    ZetaLinear,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum CutoffArg {
    Smoothed,
    Sharp,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum WeightArg {
    Plain,
    Plateau,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum KernelArg {
    Gauss,
    Quartic,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::ZetaSquare => Variant::ZetaSquare,
            VariantArg::ZetaLinear => Variant::ZetaLinear,
        }
    }
}

impl From<CutoffArg> for CutoffKind {
    fn from(c: CutoffArg) -> Self {
        match c {
            CutoffArg::Smoothed => CutoffKind::Smoothed,
            CutoffArg::Sharp => CutoffKind::Sharp,
        }
    }
}

fn apply_weight(config: &mut RunConfig, w: &WeightArgs) {
    if let Some(k) = w.weight {
        config.weight.kind = match k {
            WeightArg::Plain => WeightKind::Plain,
            WeightArg::Plateau => WeightKind::Plateau,
        };
    }
    if w.delta.is_some() {
        config.weight.delta = w.delta;
    }
}

/// Overlay the flags on the config.
fn build_config(cli: &Cli) -> Result<(Command, RunConfig), MmlError> {
    let g = &cli.global;
    let mut config = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($field:expr, $value:expr) => {
            if let Some(v) = $value.clone() {
                $field = v.into();
            }
        };
    }
    if let Some(dir) = g.cache_dir.clone().or_else(env_cache_dir) {
        config.general.cache_dir = Some(dir);
    }
    if g.coefficients.is_some() {
        config.general.coefficients = g.coefficients.clone();
    }
    if g.output.is_some() {
        config.general.output = g.output.clone();
    }
    if g.csv.is_some() {
        config.general.csv = g.csv.clone();
    }
    if g.plot.is_some() {
        config.general.plot = g.plot.clone();
    }
    set!(config.quadrature.workers, g.workers);
    if g.max_evaluations.is_some() {
        config.quadrature.max_evaluations = g.max_evaluations;
    }
    if let Some(k) = g.kernel {
        config.kernel.kind = match k {
            KernelArg::Gauss => KernelKind::Gauss,
            KernelArg::Quartic => KernelKind::Quartic,
        };
    }
    set!(config.kernel.width, g.kernel_width);
    let command = match &cli.command {
        Cmd::Coeffs { n_max, ingest } => {
            set!(config.coeffs.n_max, n_max);
            if ingest.is_some() {
                config.coeffs.ingest = ingest.clone();
            }
            Command::Coeffs
        }
        Cmd::Moment { t_big, variant, cutoff, weight } => {
            set!(config.moment.t_big, t_big);
            set!(config.moment.variant, variant);
            set!(config.moment.cutoff, cutoff);
            apply_weight(&mut config, weight);
            Command::Moment
        }
        Cmd::Verify { t_list, variant, cutoff, threshold, synthetic_exponent, weight } => {
            set!(config.verify.t_list, t_list);
            set!(config.verify.variant, variant);
            set!(config.verify.cutoff, cutoff);
            set!(config.verify.threshold, threshold);
            if synthetic_exponent.is_some() {
                config.verify.synthetic_exponent = *synthetic_exponent;
            }
            apply_weight(&mut config, weight);
            Command::Verify
        }
        Cmd::Osclab { problems } => {
            if problems.is_some() {
                config.osclab.problems = problems.clone();
            }
            Command::Osclab
        }
        Cmd::Meanvalue { coefficients, t_big } => {
            if let Some(a) = coefficients {
                config.meanvalue.coefficients = a.clone();
                config.meanvalue.coefficients_im.clear();
            }
            set!(config.meanvalue.t_big, t_big);
            Command::Meanvalue
        }
        Cmd::Constants { weight } => {
            apply_weight(&mut config, weight);
            Command::Constants
        }
    };
    Ok((command, config))
}

fn summarize(command: Command, out: &RunOutput) {
    let Some(record) = &out.record else { return };
    for line in &record.log {
        eprintln!("{line}");
    }
    let r = &record.results;
    match command {
        Command::Coeffs => {
            if let Some(tau) = r["tau"].as_array() {
                for (i, t) in tau.iter().enumerate() {
                    eprintln!("tau({}) = {}", i + 1, t);
                }
            }
            eprintln!("invariants: {}", r["report"]);
        }
        Command::Verify => {
            eprintln!(
                "fitted exponent {} (threshold {}): {}",
                r["scan"]["slope"],
                r["threshold"],
                if record.status == RunStatus::Ok { "PASS" } else { "FAIL" }
            );
        }
        _ => {}
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut command = None;
    let result = build_config(&cli).and_then(|(cmd, config)| {
        command = Some(cmd);
        let out = run(cmd, &config)?;
        write_outputs(&config, &out)?;
        Ok((cmd, config, out))
    });
    match result {
        Ok((cmd, config, out)) => {
            summarize(cmd, &out);
            let record = out.record.as_ref().expect("every command produces a record");
            if config.general.output.is_none() {
                println!("{}", record.to_json());
            }
            if record.status == RunStatus::ThresholdFail {
                ExitCode::from(EXIT_THRESHOLD as u8)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let rec = ErrorRecord::new(command, &e);
            eprintln!("error [{}]: {}", rec.code, rec.message);
            println!("{}", serde_json::to_string(&rec).expect("error records always serialize"));
            ExitCode::from(rec.exit_code as u8)
        }
    }
}
