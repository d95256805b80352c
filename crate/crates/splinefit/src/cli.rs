//! Command-line front end: `fit`, `grid`, `band`, and `diagnose`
//! subcommands over CSV data. The binary in `main.rs` is a thin wrapper
//! around [`run`].

use crate::basis::{place_knots, BasisError, BasisSpec, Family, KnotPlacement};
use crate::dataset::{self, DataError, DataSet, SplitMode};
use crate::fit::{fit, FitConfig, FitError, FittedModel, LambdaChoice, SelectionCriterion};
use crate::inference::{self, BandKind, InferenceError};
use crate::penalty::{PenaltyKind, PenaltySpec};
use crate::selection::{self, GridSpec, ModelFamily, SelectionError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::PathBuf;
use thiserror::Error;

/// Exit code 2: bad usage or degenerate input. Exit code 1: numeric or
/// domain failure during computation.
#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 1,
        }
    }
}

fn classify_data(e: DataError) -> CliError {
    CliError::Usage(e.to_string())
}

fn classify_basis(e: BasisError) -> CliError {
    match e {
        BasisError::OutOfDomain(_, _, _) | BasisError::OutOfDomainAt { .. } => {
            CliError::Numeric(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    }
}

fn classify_fit(e: FitError) -> CliError {
    match e {
        FitError::Basis(b) => classify_basis(b),
        FitError::Penalty(p) => CliError::Usage(p.to_string()),
        FitError::EmptyGrid => CliError::Usage(e.to_string()),
        _ => CliError::Numeric(e.to_string()),
    }
}

fn classify_inference(e: InferenceError) -> CliError {
    match e {
        InferenceError::Basis(b) => classify_basis(b),
        InferenceError::BadAlpha(_) | InferenceError::TooFewDraws(_) | InferenceError::NoPoints => {
            CliError::Usage(e.to_string())
        }
        InferenceError::DegenerateCovariance(_) => CliError::Numeric(e.to_string()),
    }
}

fn classify_selection(e: SelectionError) -> CliError {
    match e {
        SelectionError::Data(d) => classify_data(d),
        SelectionError::EmptySpec => CliError::Usage(e.to_string()),
        SelectionError::NoSuccessfulFits => CliError::Numeric(e.to_string()),
        SelectionError::Io(io) => CliError::Numeric(io.to_string()),
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "splinefit",
    about = "Penalized polynomial-spline regression over CSV data",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Tp,
    Bspline,
    Pspline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectArg {
    Gcv,
    Loocv,
    Aic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitModeArg {
    Random,
    Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RescaleArg {
    None,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandKindArg {
    Pointwise,
    Bonferroni,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Markdown,
}

/// Options shared by every subcommand that reads a dataset.
#[derive(Args, Debug, Clone)]
pub struct InputOpts {
    /// Input CSV file with a header row
    pub input: PathBuf,
    /// Covariate column name (default: first column)
    #[arg(long)]
    pub x_col: Option<String>,
    /// Response column name (default: second column)
    #[arg(long)]
    pub y_col: Option<String>,
    /// Field delimiter
    #[arg(long, default_value = ",")]
    pub delimiter: String,
}

/// Options describing a single model fit.
#[derive(Args, Debug, Clone)]
pub struct ModelOpts {
    /// Spline family
    #[arg(long, value_enum, default_value = "pspline")]
    pub family: FamilyArg,
    /// Spline degree
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    /// Number of interior knots (equidistant)
    #[arg(long, default_value_t = 20)]
    pub knots: usize,
    /// Difference order of the P-spline penalty (0 = plain ridge)
    #[arg(long, default_value_t = 2)]
    pub diff_order: usize,
    /// Fixed smoothing parameter; overrides --select
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Criterion for smoothing-parameter selection (P-spline)
    #[arg(long, value_enum, default_value = "gcv")]
    pub select: SelectArg,
    /// Affine rescaling of the covariate before fitting
    #[arg(long, value_enum, default_value = "none")]
    pub rescale: RescaleArg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit one model; write a model JSON and a fitted-curve CSV
    Fit {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        model: ModelOpts,
        /// Master seed (also from SPLINEFIT_SEED; default 42)
        #[arg(long)]
        seed: Option<u64>,
        /// Output path for the model JSON
        #[arg(long, default_value = "model.json")]
        out_model: PathBuf,
        /// Output path for the fitted-curve CSV (columns z,fitted)
        #[arg(long, default_value = "curve.csv")]
        out_curve: PathBuf,
        /// Number of curve grid points
        #[arg(long, default_value_t = 500)]
        curve_points: usize,
    },
    /// Sweep a model grid over a train/test split and emit a report
    Grid {
        #[command(flatten)]
        input: InputOpts,
        /// Named preset: tp-table2 | bspline-table3 | pspline-table4
        #[arg(long)]
        preset: Option<String>,
        /// Family for a custom grid
        #[arg(long, value_enum, default_value = "pspline")]
        family: FamilyArg,
        /// Comma-separated degree list for a custom grid
        #[arg(long, value_delimiter = ',')]
        degrees: Vec<usize>,
        /// Comma-separated interior-knot counts for a custom grid
        #[arg(long, value_delimiter = ',')]
        knots: Vec<usize>,
        /// Comma-separated difference orders (P-spline grids)
        #[arg(long, value_delimiter = ',')]
        diff_orders: Vec<usize>,
        /// Training fraction of the split
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        /// Master seed (also from SPLINEFIT_SEED; default 42)
        #[arg(long)]
        seed: Option<u64>,
        /// Split mode
        #[arg(long, value_enum, default_value = "random")]
        split_mode: SplitModeArg,
        /// Smoothing-parameter selection criterion for P-spline cells
        #[arg(long, value_enum, default_value = "gcv")]
        select: SelectArg,
        /// Report format
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Output path for the report
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
        /// Also print the best row (cvmspe, then test MSE, then AIC)
        #[arg(long)]
        best: bool,
    },
    /// Confidence band for a fitted curve
    Band {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        model: ModelOpts,
        /// Band construction
        #[arg(long, value_enum, default_value = "pointwise")]
        kind: BandKindArg,
        /// Significance level
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Number of equally spaced evaluation points over the domain
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Read evaluation points from a file (one value per line) instead
        #[arg(long)]
        points_from: Option<PathBuf>,
        /// Simulation draws (simulated bands)
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        /// Master seed (also from SPLINEFIT_SEED; default 42)
        #[arg(long)]
        seed: Option<u64>,
        /// Output path for the band CSV
        #[arg(long, default_value = "band.csv")]
        out: PathBuf,
    },
    /// Residual-vs-fitted diagnostic table for one fitted model
    Diagnose {
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        model: ModelOpts,
        /// Moving-average window for the residual smoother (odd)
        #[arg(long, default_value_t = 7)]
        window: usize,
        /// Master seed (also from SPLINEFIT_SEED; default 42)
        #[arg(long)]
        seed: Option<u64>,
        /// Output path for the residual CSV
        #[arg(long, default_value = "residuals.csv")]
        out: PathBuf,
    },
}

/// Master seed resolution: flag, then SPLINEFIT_SEED, then 42. The split
/// uses the master seed directly; simulated bands use master + 1.
pub fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("SPLINEFIT_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(42)
}

fn load_input(opts: &InputOpts) -> Result<DataSet, CliError> {
    let delim = opts.delimiter.as_bytes();
    if delim.len() != 1 {
        return Err(CliError::Usage(format!(
            "delimiter must be one byte, got '{}'",
            opts.delimiter
        )));
    }
    let (x_col, y_col) = match (&opts.x_col, &opts.y_col) {
        (Some(x), Some(y)) => (x.clone(), y.clone()),
        _ => {
            // default to the first two header columns
            let mut rdr = csv::ReaderBuilder::new()
                .delimiter(delim[0])
                .from_path(&opts.input)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let headers = rdr
                .headers()
                .map_err(|e| CliError::Usage(e.to_string()))?
                .clone();
            if headers.len() < 2 {
                return Err(CliError::Usage("input needs at least two columns".into()));
            }
            (
                opts.x_col.clone().unwrap_or_else(|| headers[0].to_string()),
                opts.y_col.clone().unwrap_or_else(|| headers[1].to_string()),
            )
        }
    };
    dataset::load_csv(&opts.input, &x_col, &y_col, delim[0]).map_err(classify_data)
}

struct PreparedFit {
    model: FittedModel,
    /// maps internal z back to original units
    unmap: Box<dyn Fn(f64) -> f64>,
    domain: (f64, f64),
}

fn fit_model(data: &DataSet, opts: &ModelOpts) -> Result<PreparedFit, CliError> {
    let (work, offset, scale) = match opts.rescale {
        RescaleArg::None => (data.clone(), 0.0, 1.0),
        RescaleArg::Unit => data.rescale_unit(),
    };
    let kv = place_knots(&work.z, opts.knots, KnotPlacement::Equidistant).map_err(classify_basis)?;
    let family = match opts.family {
        FamilyArg::Tp => Family::TruncatedPower,
        _ => Family::BSpline,
    };
    let spec = BasisSpec::new(family, opts.degree, kv.clone());
    let d = spec.dimension();
    let config = match opts.family {
        FamilyArg::Pspline => {
            let kind = if opts.diff_order == 0 {
                PenaltyKind::Ridge
            } else {
                PenaltyKind::Difference {
                    order: opts.diff_order,
                }
            };
            let lambda = match opts.lambda {
                Some(l) => LambdaChoice::Fixed(l),
                None => LambdaChoice::SelectBy(match opts.select {
                    SelectArg::Gcv => SelectionCriterion::Gcv,
                    SelectArg::Loocv => SelectionCriterion::Loocv,
                    SelectArg::Aic => SelectionCriterion::Aic,
                }),
            };
            FitConfig::new(spec, PenaltySpec { kind, dimension: d }, lambda)
        }
        _ => {
            let mut c = FitConfig::unpenalized(spec);
            if let Some(l) = opts.lambda {
                if l != 0.0 {
                    return Err(CliError::Usage(
                        "--lambda > 0 requires --family pspline".into(),
                    ));
                }
                c.lambda = LambdaChoice::Fixed(l);
            }
            c
        }
    };
    let model = fit(&config, &work.z, &work.y).map_err(classify_fit)?;
    let domain = (kv.lo(), kv.hi());
    Ok(PreparedFit {
        model,
        unmap: Box::new(move |z| z * scale + offset),
        domain,
    })
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Run a parsed invocation. The caller maps the error to an exit code.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            input,
            model,
            seed: _seed,
            out_model,
            out_curve,
            curve_points,
        } => {
            let data = load_input(&input)?;
            let prepared = fit_model(&data, &model)?;
            let mut w = create(&out_model)?;
            serde_json::to_writer_pretty(&mut w, &prepared.model.dump())
                .map_err(|e| CliError::Numeric(e.to_string()))?;
            w.flush().map_err(|e| CliError::Numeric(e.to_string()))?;
            let mut w = create(&out_curve)?;
            writeln!(w, "z,fitted").map_err(|e| CliError::Numeric(e.to_string()))?;
            let (lo, hi) = prepared.domain;
            let n = curve_points.max(2);
            for i in 0..n {
                let z = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                let pred = inference::predict(&prepared.model, &[z])
                    .map_err(classify_inference)?[0];
                writeln!(w, "{},{}", (prepared.unmap)(z), pred)
                    .map_err(|e| CliError::Numeric(e.to_string()))?;
            }
            Ok(())
        }
        Command::Grid {
            input,
            preset,
            family,
            degrees,
            knots,
            diff_orders,
            fraction,
            seed,
            split_mode,
            select,
            format,
            out,
            best,
        } => {
            let data = load_input(&input)?;
            let seed = resolve_seed(seed);
            let mut spec = match preset {
                Some(name) => selection::preset(&name)
                    .ok_or_else(|| CliError::Usage(format!("unknown preset '{name}'")))?,
                None => {
                    let fam = match family {
                        FamilyArg::Tp => ModelFamily::TruncatedPower,
                        FamilyArg::Bspline => ModelFamily::BSpline,
                        FamilyArg::Pspline => ModelFamily::PSpline,
                    };
                    let mut s = GridSpec::new(fam, degrees, knots);
                    s.diff_orders = diff_orders;
                    s
                }
            };
            spec.fraction = fraction;
            spec.seed = seed;
            spec.split_mode = match split_mode {
                SplitModeArg::Random => SplitMode::Random,
                SplitModeArg::Head => SplitMode::Head,
            };
            spec.selection = match select {
                SelectArg::Gcv => SelectionCriterion::Gcv,
                SelectArg::Loocv => SelectionCriterion::Loocv,
                SelectArg::Aic => SelectionCriterion::Aic,
            };
            let report = selection::run_grid(&spec, &data).map_err(classify_selection)?;
            let w = create(&out)?;
            match format {
                FormatArg::Csv => selection::emit_csv(&report, w),
                FormatArg::Json => selection::emit_json(&report, w),
                FormatArg::Markdown => selection::emit_markdown(&report, w),
            }
            .map_err(classify_selection)?;
            if best {
                let row = selection::best_model(&report.rows, &selection::DEFAULT_PRIORITY)
                    .map_err(classify_selection)?;
                println!(
                    "best: family={} degree={} knots={} diff_order={:?} cvmspe={:.4} mse_test={:.4}",
                    row.family.label(),
                    row.degree,
                    row.knots,
                    row.diff_order,
                    row.cvmspe,
                    row.mse_test
                );
            }
            Ok(())
        }
        Command::Band {
            input,
            model,
            kind,
            alpha,
            points,
            points_from,
            draws,
            seed,
            out,
        } => {
            let data = load_input(&input)?;
            let seed = resolve_seed(seed);
            let prepared = fit_model(&data, &model)?;
            let (lo, hi) = prepared.domain;
            let pts: Vec<f64> = match &points_from {
                Some(path) => {
                    let mut text = String::new();
                    File::open(path)
                        .and_then(|mut f| f.read_to_string(&mut text))
                        .map_err(|e| {
                            CliError::Usage(format!("cannot read {}: {e}", path.display()))
                        })?;
                    let mut vals = Vec::new();
                    for (i, line) in text.lines().enumerate() {
                        let line = line.trim();
                        if line.is_empty() || (i == 0 && line.parse::<f64>().is_err()) {
                            continue; // optional header
                        }
                        let v: f64 = line.parse().map_err(|_| {
                            CliError::Usage(format!("line {}: cannot parse '{line}'", i + 1))
                        })?;
                        vals.push(v);
                    }
                    for (i, &v) in vals.iter().enumerate() {
                        if v < lo || v > hi {
                            return Err(CliError::Numeric(format!(
                                "point {i} (z = {v}) is outside the fitted domain [{lo}, {hi}]"
                            )));
                        }
                    }
                    vals
                }
                None => {
                    let n = points.max(2);
                    (0..n)
                        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                        .collect()
                }
            };
            let band = match kind {
                BandKindArg::Pointwise => inference::pointwise_band(&prepared.model, &pts, alpha),
                BandKindArg::Bonferroni => inference::bonferroni_band(&prepared.model, &pts, alpha),
                BandKindArg::Simulated => {
                    inference::simulated_band(&prepared.model, &pts, alpha, draws, seed + 1)
                }
            }
            .map_err(classify_inference)?;
            let mut w = create(&out)?;
            writeln!(w, "z,estimate,lower,upper,half_width,kind,alpha")
                .map_err(|e| CliError::Numeric(e.to_string()))?;
            let kind_label = match band.kind {
                BandKind::Pointwise => "pointwise",
                BandKind::Bonferroni => "bonferroni",
                BandKind::Simulated => "simulated",
            };
            for p in &band.points {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    (prepared.unmap)(p.z),
                    p.estimate,
                    p.lower,
                    p.upper,
                    p.half_width,
                    kind_label,
                    band.alpha
                )
                .map_err(|e| CliError::Numeric(e.to_string()))?;
            }
            Ok(())
        }
        Command::Diagnose {
            input,
            model,
            window,
            seed: _seed,
            out,
        } => {
            let data = load_input(&input)?;
            let prepared = fit_model(&data, &model)?;
            let residuals: Vec<f64> = data
                .y
                .iter()
                .zip(&prepared.model.fitted)
                .map(|(y, f)| y - f)
                .collect();
            let rows = dataset::residual_diagnostic(&prepared.model.fitted, &residuals, window)
                .map_err(classify_data)?;
            let mut w = create(&out)?;
            writeln!(w, "fitted,residual,smoothed").map_err(|e| CliError::Numeric(e.to_string()))?;
            for (f, r, s) in rows {
                writeln!(w, "{f},{r},{s}").map_err(|e| CliError::Numeric(e.to_string()))?;
            }
            Ok(())
        }
    }
}
