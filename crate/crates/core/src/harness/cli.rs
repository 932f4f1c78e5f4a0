use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::config::{parse_grid, parse_region};
use super::{
    run_conditional_verification, run_identity_suite, run_intensity_check, run_psi_expectation, sample_batch,
    verify_all, ExperimentConfig, ExperimentReport, HarnessError, OutputFormat, ReportRow,
};
use crate::functional::EULER_GAMMA;
use crate::gaf::configurations_to_csv;
use crate::geom::{polar_quadrature, ReferenceMeasure, Region};
use crate::spectra::{
    bergman_kernel, count_distribution_disc, det2, fredholm_det, hole_probability_disc, nystrom_restrict,
    radial_eigenvalues, RadialSymbol, Sign, DEFAULT_DET2_K_MAX,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

#[derive(Debug, Parser)]
#[command(name = "gafzeros", version, about = "Monte Carlo checks for the zeros of the hyperbolic GAF")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    #[arg(long, global = true)]
    pub window: Option<f64>,
    /// Conditioning disc: `r` or `cx,cy,r`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub region: Option<String>,
    /// Quadrature grid `RADIALxANGULAR`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// stated | oracle | finite-radius | calibrated[:value]
    #[arg(long, global = true)]
    pub norm_mode: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV of the Ψ̃ partial products of the first sample.
    #[arg(long, global = true)]
    pub trace_out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample configurations and write them as CSV (or JSON).
    SampleGaf,
    /// First and second intensity checks.
    Intensity,
    /// Expectation of the regularized functional and its calibration.
    Psi,
    /// Carleman determinant det2(1 ± K1).
    Det2 {
        #[arg(long, value_enum, default_value = "minus")]
        sign: SignArg,
        #[arg(long, default_value_t = DEFAULT_DET2_K_MAX)]
        k_max: usize,
    },
    /// Hole probability (and optionally P(# = m)) of a centered disc.
    HoleProb {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Law-of-total-expectation checks of the conditional L-ensembles.
    Conditional,
    /// Deterministic identity checks.
    Identities,
    /// Every suite.
    VerifyAll,
}

impl Cli {
    /// The experiment configuration: defaults, then the config file, then flags.
    pub fn experiment_config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_kv_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.degree {
            cfg.degree = v;
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(v) = &self.region {
            cfg.region = parse_region(v)?;
        }
        if let Some(v) = &self.grid {
            cfg.grid = parse_grid(v)?;
        }
        if let Some(v) = &self.norm_mode {
            cfg.norm_mode = v.parse()?;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = &self.trace_out {
            cfg.trace_out = Some(v.clone());
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn det2_report(cfg: &ExperimentConfig, sign: SignArg, k_max: usize) -> Result<ExperimentReport, HarnessError> {
    let start = std::time::Instant::now();
    let mut report = ExperimentReport::new("det2", cfg);
    let (s, oracle, label) = match sign {
        SignArg::Minus => (Sign::Minus, (EULER_GAMMA - 1.0).exp(), "det2(1-K1)"),
        SignArg::Plus => (Sign::Plus, (1.0 - EULER_GAMMA).exp() / 2.0, "det2(1+K1)"),
    };
    let d = det2(&radial_eigenvalues(RadialSymbol::OneMinusRho, k_max)?, s);
    let unc = d.value_uncertainty().unwrap_or(f64::NAN);
    let mut row = ReportRow::exact(
        &format!("{label}, k_max={k_max}"),
        d.value,
        oracle,
        unc.abs().max(1e-12) * 1.5,
        "Euler-Mascheroni limit of the harmonic numbers",
    );
    row.std_error = unc;
    report.rows.push(row);
    report.notes.push(format!("truncation bound on |log det2 - log value|: {:?}", d.tail_bound));
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn hole_report(cfg: &ExperimentConfig, r: f64, m: Option<usize>) -> Result<ExperimentReport, HarnessError> {
    let start = std::time::Instant::now();
    let mut report = ExperimentReport::new("hole-prob", cfg);
    let disc = Region::centered_disc(r);
    disc.validate()?;
    let km = nystrom_restrict(bergman_kernel, &polar_quadrature(disc, 12, 24, ReferenceMeasure::Lebesgue)?);
    report.rows.push(ReportRow::exact(
        &format!("P(no zero in |z|<{r})"),
        hole_probability_disc(r)?,
        fredholm_det(&km, Sign::Minus)?,
        1e-5,
        "Nystrom det(I-K) on a 12x24 Gauss-Legendre grid",
    ));
    if let Some(m) = m {
        let eig = km.eigenvalues()?;
        let law = crate::spectra::count_distribution(&eig, m);
        report.rows.push(ReportRow::exact(
            &format!("P(#{{|z|<{r}}} = {m})"),
            count_distribution_disc(r, m)?,
            law[m],
            1e-5,
            "Poisson-binomial law of the Nystrom eigenvalues",
        ));
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    let cfg = cli.experiment_config()?;
    let report = match &cli.command {
        Command::SampleGaf => {
            let configs = sample_batch(&cfg, 0)?;
            let write = |out: Box<dyn std::io::Write>| -> Result<(), HarnessError> {
                match cfg.format {
                    OutputFormat::Csv => configurations_to_csv(&configs, out)?,
                    OutputFormat::Json => serde_json::to_writer_pretty(out, &configs)?,
                }
                Ok(())
            };
            match &cfg.out {
                Some(p) => write(Box::new(std::fs::File::create(p)?))?,
                None => write(Box::new(std::io::stdout().lock()))?,
            }
            return Ok(true);
        }
        Command::Intensity => run_intensity_check(&cfg)?,
        Command::Psi => run_psi_expectation(&cfg)?,
        Command::Det2 { sign, k_max } => det2_report(&cfg, *sign, *k_max)?,
        Command::HoleProb { r, m } => hole_report(&cfg, *r, *m)?,
        Command::Conditional => run_conditional_verification(&cfg)?,
        Command::Identities => run_identity_suite(&cfg)?,
        Command::VerifyAll => verify_all(&cfg)?,
    };
    report.emit(cfg.format, cfg.out.as_ref())?;
    if let Some(w) = &report.winner {
        log::info!("winner: {w}");
    }
    Ok(report.passed())
}

/// Parses `argv` (including the program name) and runs the command. Returns
/// 0 when every gating row passes, 1 when one fails and 2 on errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
