use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coaxline::budget::ParticipationBudget;
use coaxline::coupling::{predict_qc, CouplingSeries};
use coaxline::io::{self, Parsed};
use coaxline::pipeline::{
    budget_sections, coupling_fit, coupling_section, dispersive_batch_sections, dispersive_sections, fit_section,
    fit_traces, limit_curves_section, run_pipeline, waveguide_section,
};
use coaxline::report::{digest_inputs, Report, Section};
use coaxline::resonator::{
    model_s21_hanger, synthesize_trace, FitOptions, FitResult, HangerModelParams, ResonanceTrace,
};
use coaxline::units::{mm_to_m, GHZ};
use coaxline::waveguide::{ModeId, WaveguideSpec, CALIBRATED_LOADING};
use coaxline::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "coaxline", version, about = "Coaxial-tunnel resonator and qubit analysis")]
struct Cli {
    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,

    /// Do not echo warnings to stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Seed for synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evanescent attenuation of a circular waveguide mode.
    Waveguide(WaveguideArgs),
    /// Exponential coupling-versus-distance fits and predictions.
    Coupling {
        #[command(subcommand)]
        mode: CouplingMode,
    },
    /// Hanger-resonator S21 fit.
    Fit(FitArgs),
    /// Derived circuit parameters from measured device values.
    Dispersive(DispersiveArgs),
    /// Participation loss budget.
    Budget(BudgetArgs),
    /// Run every analysis named in a TOML config.
    Pipeline { config: PathBuf },
    /// Write a synthetic hanger trace as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct WaveguideArgs {
    #[arg(long, default_value_t = 2.8)]
    diameter_mm: f64,
    /// Relative permittivity of the fill; defaults to the calibrated value.
    #[arg(long, conflicts_with = "empty")]
    loading: Option<f64>,
    /// Vacuum-filled guide.
    #[arg(long)]
    empty: bool,
    #[arg(long, default_value = "TE11")]
    mode: String,
    #[arg(long)]
    freq_ghz: f64,
    /// Lengths for a field-ratio table.
    #[arg(long, value_delimiter = ',')]
    lengths_mm: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SeriesArg {
    /// Coupling Q versus recess depth.
    Qc,
    /// Coupling strength versus separation.
    G,
}

#[derive(Debug, Subcommand)]
enum CouplingMode {
    /// Fit `value = A·exp(rate·distance)` to a `distance_mm,value` CSV.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: SeriesArg,
        /// Hold the rate fixed (Np/mm) and fit the amplitude only.
        #[arg(long)]
        fixed_rate_np_per_mm: Option<f64>,
        /// Refine on linear residuals after the log-linear fit.
        #[arg(long, conflicts_with = "fixed_rate_np_per_mm")]
        linear_refine: bool,
        #[arg(long, value_delimiter = ',')]
        predict_mm: Vec<f64>,
    },
    /// Qc at a new depth from a reference point and a field decay constant.
    Predict {
        #[arg(long)]
        qc_ref: f64,
        #[arg(long)]
        d_ref_mm: f64,
        #[arg(long)]
        d_mm: f64,
        #[arg(long)]
        alpha_np_per_mm: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TraceFormat {
    Csv,
    S2p,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Trace files; repeat for a batch.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Override the format implied by the extension.
    #[arg(long, value_enum)]
    format: Option<TraceFormat>,
    /// Stop after the circle and phase fits.
    #[arg(long)]
    no_refine: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write data, model and residuals as CSV (one input only).
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DispersiveArgs {
    /// Device TOML file, or a device table CSV with `--batch`.
    input: PathBuf,
    #[arg(long)]
    batch: bool,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    input: PathBuf,
    /// Best measured Qi, for material-bound inversion.
    #[arg(long)]
    qi_best: Option<f64>,
    /// Per-diameter participation CSV.
    #[arg(long)]
    sweep_diameter: Option<PathBuf>,
    /// Write limit curves here as CSV.
    #[arg(long, requires = "sweep_diameter")]
    curves_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    f0_ghz: f64,
    #[arg(long)]
    qi: f64,
    #[arg(long)]
    qc: f64,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long, default_value_t = 1.0)]
    amp: f64,
    #[arg(long, default_value_t = 0.0)]
    theta0: f64,
    #[arg(long, default_value_t = 0.0)]
    tau_ns: f64,
    #[arg(long, default_value_t = 401)]
    points: usize,
    /// Span in loaded linewidths.
    #[arg(long, default_value_t = 5.0)]
    span_linewidths: f64,
    /// Omit for a noiseless trace.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Some(report)) => {
            if !cli.quiet {
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
            }
            match cli.output {
                OutputFormat::Json => print!("{}", report.to_json()),
                OutputFormat::Text => print!("{}", report.to_text()),
            }
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<Option<Report>> {
    match &cli.command {
        Command::Waveguide(a) => waveguide(a).map(Some),
        Command::Coupling { mode } => coupling(mode).map(Some),
        Command::Fit(a) => fit(a).map(Some),
        Command::Dispersive(a) => dispersive(a).map(Some),
        Command::Budget(a) => budget(a).map(Some),
        Command::Pipeline { config } => run_pipeline(config).map(Some),
        Command::Synth(a) => synth(a, cli.seed).map(|()| None),
    }
}

fn report(inputs: &[(String, Vec<u8>)], sections: Vec<Section>, warnings: Vec<String>) -> Report {
    let mut r = Report::new(digest_inputs(inputs.iter().map(|(n, b)| (n.as_str(), b.as_slice()))));
    r.sections = sections;
    r.warnings = warnings;
    r
}

fn read(path: &Path) -> Result<(String, Vec<u8>)> {
    Ok((path.display().to_string(), io::read_file(path)?))
}

fn waveguide(a: &WaveguideArgs) -> Result<Report> {
    let d = mm_to_m(a.diameter_mm);
    let spec = if a.empty {
        WaveguideSpec::empty(d)?
    } else {
        WaveguideSpec::new(d, a.loading.unwrap_or(CALIBRATED_LOADING))?
    };
    let mode: ModeId = a.mode.parse()?;
    let lengths: Vec<f64> = a.lengths_mm.iter().map(|&z| mm_to_m(z)).collect();
    let args = format!("{a:?}");
    let section = waveguide_section(&spec, mode, a.freq_ghz * GHZ, &lengths)?;
    Ok(report(
        &[("arguments".into(), args.into_bytes())],
        vec![section],
        Vec::new(),
    ))
}

fn coupling(mode: &CouplingMode) -> Result<Report> {
    match mode {
        CouplingMode::Fit {
            input,
            kind,
            fixed_rate_np_per_mm,
            linear_refine,
            predict_mm,
        } => {
            let kind = match kind {
                SeriesArg::Qc => coaxline::coupling::SeriesKind::QcVsDepth,
                SeriesArg::G => coaxline::coupling::SeriesKind::GVsSeparation,
            };
            let file = read(input)?;
            let series: CouplingSeries = io::parse_series_csv(&file.1, kind)?.value;
            let (law, warnings) = coupling_fit(&series, fixed_rate_np_per_mm.map(|r| r * 1e3), *linear_refine)?;
            let predict: Vec<f64> = predict_mm.iter().map(|&d| mm_to_m(d)).collect();
            Ok(report(
                &[file],
                vec![coupling_section(&series, &law, &predict)],
                warnings,
            ))
        }
        CouplingMode::Predict {
            qc_ref,
            d_ref_mm,
            d_mm,
            alpha_np_per_mm,
        } => {
            let alpha = alpha_np_per_mm * 1e3;
            let qc = predict_qc(*qc_ref, mm_to_m(*d_ref_mm), mm_to_m(*d_mm), alpha)?;
            let s = Section::new("coupling prediction")
                .with("qc_ref", *qc_ref)
                .with("d_ref_mm", *d_ref_mm)
                .with("d_mm", *d_mm)
                .with("alpha_np_per_mm", *alpha_np_per_mm)
                .with("qc_predicted", qc);
            Ok(report(
                &[("arguments".into(), format!("{mode:?}").into_bytes())],
                vec![s],
                Vec::new(),
            ))
        }
    }
}

fn load_trace(path: &Path, format: Option<TraceFormat>) -> Result<(Vec<u8>, Parsed<ResonanceTrace>)> {
    let bytes = io::read_file(path)?;
    let touchstone = match format {
        Some(f) => f == TraceFormat::S2p,
        None => path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("s2p")),
    };
    let mut parsed = if touchstone {
        io::parse_touchstone(&bytes)
    } else {
        io::parse_trace_csv(&bytes)
    }
    .map_err(|e| match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    parsed.value.meta.label = path.display().to_string();
    Ok((bytes, parsed))
}

fn fit(a: &FitArgs) -> Result<Report> {
    if a.emit_plot_data.is_some() && a.input.len() != 1 {
        return Err(Error::Usage("--emit-plot-data takes exactly one --input".into()));
    }
    let mut inputs = Vec::new();
    let mut traces = Vec::new();
    let mut warnings = Vec::new();
    for p in &a.input {
        let (bytes, parsed) = load_trace(p, a.format)?;
        inputs.push((p.display().to_string(), bytes));
        warnings.extend(parsed.warnings.into_iter().map(|w| format!("{}: {w}", p.display())));
        traces.push(parsed.value);
    }
    let results = fit_traces(&traces, FitOptions { refine: !a.no_refine });
    let mut sections = Vec::new();
    let mut fitted = Vec::new();
    for (t, r) in traces.iter().zip(results) {
        let r = r.map_err(|e| label_error(e, &t.meta.label))?;
        warnings.extend(r.diagnostics.warnings.iter().map(|w| format!("{}: {w}", t.meta.label)));
        sections.push(fit_section(&t.meta.label, &r));
        fitted.push(r);
    }
    let rep = report(&inputs, sections, warnings);
    if let Some(path) = &a.report {
        io::write_file(path, rep.to_json().as_bytes())?;
    }
    if let Some(path) = &a.emit_plot_data {
        io::write_file(path, plot_data(&traces[0], &fitted[0]).as_bytes())?;
    }
    Ok(rep)
}

fn label_error(e: Error, label: &str) -> Error {
    match e {
        Error::NoResonance(m) => Error::NoResonance(format!("{label}: {m}")),
        Error::FitFailure { message, last_iterate } => Error::FitFailure {
            message: format!("{label}: {message}"),
            last_iterate,
        },
        other => other,
    }
}

fn plot_data(t: &ResonanceTrace, r: &FitResult) -> String {
    let mut out = String::from("freq_hz,s21_re,s21_im,model_re,model_im,residual_re,residual_im\n");
    for (&f, &z) in t.freqs().iter().zip(t.s21()) {
        let m = model_s21_hanger(&r.params, f);
        let d = z - m;
        let _ = writeln!(
            out,
            "{f:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            z.re, z.im, m.re, m.im, d.re, d.im
        );
    }
    out
}

fn dispersive(a: &DispersiveArgs) -> Result<Report> {
    let file = read(&a.input)?;
    let mut warnings = Vec::new();
    let sections = if a.batch {
        let parsed = io::parse_device_table(&file.1)?;
        warnings.extend(parsed.warnings);
        dispersive_batch_sections(&parsed.value, &mut warnings)?
    } else {
        let text = std::str::from_utf8(&file.1).map_err(|e| Error::Parse {
            line: 0,
            column: 0,
            message: format!("not UTF-8: {e}"),
        })?;
        let parsed = io::parse_device_file(text)?;
        warnings.extend(parsed.warnings);
        dispersive_sections(&parsed.value, &mut warnings)?
    };
    Ok(report(&[file], sections, warnings))
}

fn budget(a: &BudgetArgs) -> Result<Report> {
    let file = read(&a.input)?;
    let sources = io::parse_budget_csv(&file.1)?.value;
    let budget = ParticipationBudget::new(sources, a.qi_best)?;
    let mut sections = budget_sections(&budget)?;
    let mut inputs = vec![file];
    if let Some(sweep) = &a.sweep_diameter {
        let f = read(sweep)?;
        let table = io::parse_sweep_csv(&f.1)?.value;
        inputs.push(f);
        let curves = table.limit_curves(Some(budget.sources()))?;
        match &a.curves_out {
            Some(path) => io::write_file(path, io::write_limit_curves(&curves).as_bytes())?,
            None => sections.push(limit_curves_section(&curves)),
        }
    }
    Ok(report(&inputs, sections, Vec::new()))
}

fn synth(a: &SynthArgs, seed: u64) -> Result<()> {
    let mut p = HangerModelParams::canonical(a.f0_ghz * GHZ, a.qi, a.qc, a.phi);
    p.amp = a.amp;
    p.theta0 = a.theta0;
    p.tau = a.tau_ns * 1e-9;
    let span = a.span_linewidths * p.f0 / p.loaded_q();
    let trace = synthesize_trace(&p, a.points, span, a.snr_db, seed)?;
    io::write_file(&a.out, io::write_trace_csv(&trace).as_bytes())
}
