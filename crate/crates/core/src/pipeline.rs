//! Section builders shared by the command line and the batch pipeline, and
//! the pipeline itself: one TOML config naming inputs and analyses, one
//! report out.
//!
//! Config grammar (TOML, unknown keys rejected; paths relative to the
//! config file):
//!
//! ```toml
//! [waveguide]
//! diameter_mm = 2.8       # default 2.8
//! frequency_ghz = 5.4
//! mode = "TE11"           # default TE11
//! loading = 1.78          # default: calibrated loading; or set empty = true
//! lengths_mm = [1.0, 3.0] # optional field-ratio table
//!
//! [[fit]]                 # repeatable
//! input = "trace.csv"     # .csv or .s2p
//! refine = true
//!
//! [coupling]
//! input = "qc_vs_depth.csv"
//! kind = "qc_vs_depth"    # or "g_vs_separation"
//! fixed_rate_per_mm = 1.95  # optional
//! predict_mm = [3.0]        # optional
//!
//! [budget]
//! input = "budget.csv"
//! qi_best = 8e6           # optional
//! sweep = "sweep.csv"     # optional
//!
//! [dispersive]
//! device = "device.toml"  # and/or
//! batch = "devices.csv"
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::budget::{
    dominant_source, material_bound_interval, total_qi, total_qi_range, LossSource, ParticipationBudget,
};
use crate::coupling::{fit_exponential, g_from_chi, refine_linear, CouplingSeries, ExponentialLaw, SeriesKind};
use crate::dispersive::{
    detuning, deviation_table, purcell_check, pure_dephasing, q_from_lifetime, q_from_linewidth, spearman,
    DephasingKind, PurcellClass, DEVIATION_CONVENTION,
};
use crate::error::{Error, Result};
use crate::io::{
    self, parse_budget_csv, parse_device_file, parse_device_table, parse_series_csv, parse_sweep_csv, DeviceFile,
    DeviceRecord, LimitCurves,
};
use crate::report::{digest_inputs, Report, Section, Table, Value};
use crate::resonator::{fit_hanger_with, FitOptions, FitResult, ResonanceTrace};
use crate::units::{hz_to_mhz, m_to_mm, mm_to_m, s_to_us, GHZ};
use crate::waveguide::{
    attenuation_constant, cutoff_frequency, ModeId, WaveguideSpec, CALIBRATED_LOADING, REFERENCE_DIAMETER,
};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub waveguide: Option<WaveguideConfig>,
    #[serde(default)]
    pub fit: Vec<FitConfig>,
    pub coupling: Option<CouplingConfig>,
    pub budget: Option<BudgetConfig>,
    pub dispersive: Option<DispersiveConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideConfig {
    #[serde(default = "default_diameter_mm")]
    pub diameter_mm: f64,
    pub frequency_ghz: f64,
    #[serde(default = "default_mode")]
    pub mode: String,
    pub loading: Option<f64>,
    #[serde(default)]
    pub empty: bool,
    #[serde(default)]
    pub lengths_mm: Vec<f64>,
}

fn default_diameter_mm() -> f64 {
    m_to_mm(REFERENCE_DIAMETER)
}

fn default_mode() -> String {
    "TE11".into()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub input: PathBuf,
    #[serde(default = "default_true")]
    pub refine: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub input: PathBuf,
    pub kind: String,
    pub fixed_rate_per_mm: Option<f64>,
    #[serde(default)]
    pub linear_refine: bool,
    #[serde(default)]
    pub predict_mm: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub input: PathBuf,
    pub qi_best: Option<f64>,
    pub sweep: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersiveConfig {
    pub device: Option<PathBuf>,
    pub batch: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<Config> {
    toml::from_str(text).map_err(|e| io::toml_error(text, &e))
}

pub fn parse_series_kind(s: &str) -> Result<SeriesKind> {
    match s {
        "qc_vs_depth" => Ok(SeriesKind::QcVsDepth),
        "g_vs_separation" => Ok(SeriesKind::GVsSeparation),
        other => Err(Error::Usage(format!(
            "unknown series kind '{other}' (expected qc_vs_depth or g_vs_separation)"
        ))),
    }
}

/// Waveguide attenuation with an optional field-ratio table.
pub fn waveguide_section(spec: &WaveguideSpec, mode: ModeId, frequency: f64, lengths: &[f64]) -> Result<Section> {
    let a = attenuation_constant(spec, mode, frequency)?;
    let mut s = Section::new("waveguide")
        .with("mode", mode.to_string())
        .with("diameter_mm", m_to_mm(spec.diameter()))
        .with("loading_factor", spec.loading_factor())
        .with("frequency_hz", frequency)
        .with("cutoff_hz", cutoff_frequency(spec, mode))
        .with("alpha_np_per_m", a.alpha)
        .with("alpha_db_per_mm", a.db_per_mm())
        .with("scale_length_mm", m_to_mm(a.scale_length()));
    if !lengths.is_empty() {
        let mut rows = Vec::new();
        for &z in lengths {
            let r = a.field_ratio(z)?;
            rows.push(vec![
                Value::Num(m_to_mm(z)),
                Value::Num(r),
                Value::Num(-20.0 * r.log10()),
            ]);
        }
        s.table = Some(Table {
            columns: vec!["length_mm".into(), "field_ratio".into(), "attenuation_db".into()],
            rows,
        });
    }
    Ok(s)
}

pub fn waveguide_from_config(c: &WaveguideConfig) -> Result<Section> {
    let d = mm_to_m(c.diameter_mm);
    let spec = match (c.empty, c.loading) {
        (true, Some(_)) => return Err(Error::Usage("waveguide: 'empty' and 'loading' conflict".into())),
        (true, None) => WaveguideSpec::empty(d)?,
        (false, l) => WaveguideSpec::new(d, l.unwrap_or(CALIBRATED_LOADING))?,
    };
    let mode: ModeId = c.mode.parse()?;
    let lengths: Vec<f64> = c.lengths_mm.iter().map(|&z| mm_to_m(z)).collect();
    waveguide_section(&spec, mode, c.frequency_ghz * GHZ, &lengths)
}

pub fn fit_section(label: &str, r: &FitResult) -> Section {
    let p = &r.params;
    let e = &r.std_errors;
    let d = &r.diagnostics;
    Section::new(format!("fit {label}"))
        .with("f0_hz", p.f0)
        .with("f0_se_hz", e.f0)
        .with("qi", p.qi)
        .with("qi_se", e.qi)
        .with("qc_mag", p.qc_mag)
        .with("qc_mag_se", e.qc_mag)
        .with("phi_rad", p.phi)
        .with("phi_se_rad", e.phi)
        .with("qc_real", r.qc_real)
        .with("loaded_q", r.loaded_q)
        .with("loaded_q_se", r.loaded_q_std_err)
        .with("amp", p.amp)
        .with("amp_se", e.amp)
        .with("theta0_rad", p.theta0)
        .with("theta0_se_rad", e.theta0)
        .with("tau_s", p.tau)
        .with("tau_se_s", e.tau)
        .with("qi_convention", r.convention.label())
        .with("qi_abs_qc_convention", r.qi_abs_convention())
        .with("residual_norm", r.residual_norm)
        .with("dof", r.dof)
        .with("reduced_residual", r.reduced_residual)
        .with("refined", d.refined)
        .with("rank_deficient", d.rank_deficient)
        .with("overcoupled_pathology", d.overcoupled_pathology)
        .with("phase_wrap_warning", d.phase_wrap_warning)
}

/// Fits traces concurrently; results keep input order.
pub fn fit_traces(traces: &[ResonanceTrace], options: FitOptions) -> Vec<Result<FitResult>> {
    traces.par_iter().map(|t| fit_hanger_with(t, options)).collect()
}

/// Implied field attenuation from a fitted rate: Qc grows as e^{2αd}, g
/// falls as e^{−αz}.
pub fn implied_alpha(kind: SeriesKind, rate: f64) -> f64 {
    match kind {
        SeriesKind::QcVsDepth => rate / 2.0,
        SeriesKind::GVsSeparation => -rate,
    }
}

pub fn coupling_section(series: &CouplingSeries, law: &ExponentialLaw, predict: &[f64]) -> Section {
    let kind = series.kind();
    let alpha = implied_alpha(kind, law.rate);
    let mut s = Section::new("coupling")
        .with(
            "kind",
            match kind {
                SeriesKind::QcVsDepth => "qc_vs_depth",
                SeriesKind::GVsSeparation => "g_vs_separation",
            },
        )
        .with("points", series.len())
        .with("amplitude", law.amplitude)
        .with("amplitude_se", law.amplitude_std_err)
        .with("rate_per_mm", law.rate / 1e3)
        .with("rate_se_per_mm", law.rate_std_err / 1e3)
        .with("rate_fixed", law.rate_fixed)
        .with("implied_alpha_np_per_mm", alpha / 1e3)
        .with("implied_alpha_db_per_mm", crate::units::np_per_m_to_db_per_mm(alpha))
        .with("log_residual_rms", law.log_residual_rms)
        .with("dof", law.dof)
        .with("sign_consistent", law.sign_consistent(kind));
    if !predict.is_empty() {
        s.table = Some(Table {
            columns: vec!["distance_mm".into(), "predicted".into()],
            rows: predict
                .iter()
                .map(|&d| vec![Value::Num(m_to_mm(d)), Value::Num(law.predict(d))])
                .collect(),
        });
    }
    s
}

pub fn coupling_fit(
    series: &CouplingSeries,
    fixed_rate: Option<f64>,
    linear: bool,
) -> Result<(ExponentialLaw, Vec<String>)> {
    let law = fit_exponential(series, fixed_rate)?;
    let mut warnings = Vec::new();
    if !law.sign_consistent(series.kind()) {
        warnings.push(format!(
            "fitted rate {:.4e} /m has the wrong sign for this series; check the distance convention",
            law.rate
        ));
    }
    if linear && fixed_rate.is_none() {
        return Ok((refine_linear(series, &law)?, warnings));
    }
    Ok((law, warnings))
}

/// Budget table, totals and ranking.
pub fn budget_sections(budget: &ParticipationBudget) -> Result<Vec<Section>> {
    let qi_best = budget.qi_measured_best;
    let mut rows = Vec::new();
    for s in budget.sources() {
        let lim = s.q_limit();
        let mut row = vec![
            Value::from(s.name.as_str()),
            Value::Num(s.p.lo),
            Value::Num(s.p.hi),
            Value::Num(s.q_material.lo),
            Value::Num(s.q_material.hi),
            Value::from(s.bound_kind.as_str()),
            Value::Num(lim.lo),
            Value::Num(lim.hi),
        ];
        match qi_best {
            Some(q) => {
                let mb = material_bound_interval(s.p, q)?;
                row.push(Value::Num(mb.lo));
                row.push(Value::Num(mb.hi));
            }
            None => row.extend([Value::Missing, Value::Missing]),
        }
        rows.push(row);
    }
    let range = total_qi_range(budget)?;
    let mut table = Section::new("budget")
        .with("sources", budget.sources().len())
        .with("qi_best", qi_best)
        .with("total_qi", total_qi(budget)?)
        .with("total_qi_min", range.lo)
        .with("total_qi_max", range.hi)
        .with("total_qi_rule", "midpoint participation, lower material Q");
    table.table = Some(Table {
        columns: [
            "name",
            "p_min",
            "p_max",
            "q_material_min",
            "q_material_max",
            "bound_kind",
            "q_limit_min",
            "q_limit_max",
            "material_bound_min",
            "material_bound_max",
        ]
        .map(String::from)
        .to_vec(),
        rows,
    });
    let mut ranking = Section::new("budget ranking");
    ranking.table = Some(Table {
        columns: vec!["name".into(), "loss_share".into()],
        rows: dominant_source(budget)?
            .into_iter()
            .map(|(n, s)| vec![Value::Text(n), Value::Num(s)])
            .collect(),
    });
    Ok(vec![table, ranking])
}

pub fn limit_curves_section(c: &LimitCurves) -> Section {
    let mut s = Section::new("limit curves");
    for (name, q, _) in &c.curves {
        s.push(format!("q_material_{name}"), *q);
    }
    let mut columns = vec!["diameter_mm".to_string(), "qi_measured".to_string()];
    columns.extend(c.curves.iter().map(|(n, _, _)| format!("{n}_q_limit")));
    let rows = (0..c.diameters_mm.len())
        .map(|i| {
            let mut r = vec![
                Value::Num(c.diameters_mm[i]),
                c.qi_measured.as_ref().and_then(|m| m[i]).into(),
            ];
            r.extend(c.curves.iter().map(|(_, _, l)| Value::Num(l[i])));
            r
        })
        .collect();
    s.table = Some(Table { columns, rows });
    s
}

fn result_value<T>(r: Result<T>, f: impl FnOnce(T) -> Value, warnings: &mut Vec<String>, what: &str) -> Value {
    match r {
        Ok(v) => f(v),
        Err(Error::IncompleteSet(_)) => Value::Missing,
        Err(e) => {
            warnings.push(format!("{what}: {e}"));
            Value::Missing
        }
    }
}

/// Derived quantities for one device, plus the deviation table when a
/// simulated set is present.
pub fn dispersive_sections(file: &DeviceFile, warnings: &mut Vec<String>) -> Result<Vec<Section>> {
    let m = file.measured.dispersive();
    let q = file.measured.qubit();
    let name = file.device.clone().unwrap_or_else(|| "device".into());
    let mut s = Section::new(format!("dispersive {name}"));
    let delta = result_value(detuning(&m), |d| hz_to_mhz(d).into(), warnings, "detuning");
    let g = match (m.chi_qr, detuning(&m)) {
        (Some(chi), Ok(d)) => result_value(g_from_chi(chi, d), |g| hz_to_mhz(g).into(), warnings, "g from chi_qr"),
        _ => Value::Missing,
    };
    s.push("detuning_mhz", delta);
    s.push("g_mhz", g);
    for (label, kind) in [
        ("t_phi_echo_us", DephasingKind::Echo),
        ("t_phi_ramsey_us", DephasingKind::Ramsey),
    ] {
        let v = result_value(pure_dephasing(&q, kind), |d| s_to_us(d.t_phi).into(), warnings, label);
        s.push(label, v);
    }
    let qubit_q = match (m.omega_q, q.t1) {
        (Some(f), Some(t1)) => result_value(q_from_lifetime(f, t1), Value::Num, warnings, "qubit Q"),
        _ => Value::Missing,
    };
    s.push("qubit_q_from_t1", qubit_q);
    let readout_q = match (m.omega_r, m.kappa_r) {
        (Some(f), Some(k)) => result_value(q_from_linewidth(f, k), Value::Num, warnings, "readout Q"),
        _ => Value::Missing,
    };
    s.push("readout_q_from_kappa", readout_q);
    let storage = file.measured.storage();
    let storage_q = match (m.omega_s, storage.t1) {
        (Some(f), Some(t1)) => result_value(q_from_lifetime(f, t1), Value::Num, warnings, "storage Q"),
        _ => Value::Missing,
    };
    s.push("storage_q_from_t1", storage_q);

    let mut out = vec![s];
    if let Some(sim) = &file.simulated {
        let sim = sim.dispersive();
        if let (Some(rate), Some(kq)) = (sim.kappa_q, m.kappa_q) {
            let c = purcell_check(rate, kq)?;
            out[0].push("purcell_ratio", c.ratio);
            out[0].push(
                "purcell_class",
                match c.class {
                    PurcellClass::PurcellLimited => "purcell-limited",
                    PurcellClass::OtherLossDominated => "other-loss-dominated",
                },
            );
        }
        let rows = deviation_table(&m, &sim)?;
        let mut dev = Section::new(format!("deviation {name}")).with("convention", DEVIATION_CONVENTION);
        dev.table = Some(Table {
            columns: ["name", "unit", "measured", "simulated", "deviation_pct"]
                .map(String::from)
                .to_vec(),
            rows: rows
                .into_iter()
                .map(|r| {
                    vec![
                        Value::Text(r.name),
                        Value::Text(r.unit),
                        Value::Num(r.measured),
                        Value::Num(r.simulated),
                        Value::Num(r.deviation_pct),
                    ]
                })
                .collect(),
        });
        out.push(dev);
    }
    Ok(out)
}

/// Per-device derived columns and summary statistics over a device table.
///
/// Dispersive shifts listed as magnitudes take the sign of the detuning
/// when converted to g.
pub fn dispersive_batch_sections(records: &[DeviceRecord], warnings: &mut Vec<String>) -> Result<Vec<Section>> {
    let mut rows = Vec::new();
    let mut kappa_t1s = Vec::new();
    for r in records {
        let d = &r.dispersive;
        let mut w = Vec::new();
        let delta = detuning(d).ok();
        let g = match (d.chi_qr, delta) {
            (Some(chi), Some(dl)) => result_value(
                g_from_chi(chi.abs() * dl.signum(), dl),
                |g| hz_to_mhz(g).into(),
                &mut w,
                "g",
            ),
            _ => Value::Missing,
        };
        let tphi_echo = result_value(
            pure_dephasing(&r.qubit, DephasingKind::Echo),
            |t| s_to_us(t.t_phi).into(),
            &mut w,
            "T_phi echo",
        );
        let tphi_ramsey = result_value(
            pure_dephasing(&r.qubit, DephasingKind::Ramsey),
            |t| s_to_us(t.t_phi).into(),
            &mut w,
            "T_phi Ramsey",
        );
        let storage_q = match (d.omega_s, r.storage.t1) {
            (Some(f), Some(t)) => result_value(q_from_lifetime(f, t), Value::Num, &mut w, "storage Q"),
            _ => Value::Missing,
        };
        warnings.extend(w.into_iter().map(|m| format!("device {}: {m}", r.id)));
        if let (Some(k), Some(t)) = (d.kappa_r, r.storage.t1) {
            kappa_t1s.push((k, t));
        }
        rows.push(vec![
            Value::Text(r.id.clone()),
            delta.map(hz_to_mhz).into(),
            g,
            tphi_echo,
            tphi_ramsey,
            storage_q,
            r.storage_qi.into(),
        ]);
    }
    let mut table = Section::new("dispersive batch").with("devices", records.len());
    table.table = Some(Table {
        columns: [
            "device",
            "detuning_mhz",
            "g_mhz",
            "t_phi_echo_us",
            "t_phi_ramsey_us",
            "storage_q_from_t1",
            "storage_qi_listed",
        ]
        .map(String::from)
        .to_vec(),
        rows,
    });
    let mut summary = Section::new("dispersive summary").with("pairs_kappa_r_t1_storage", kappa_t1s.len());
    let (k, t): (Vec<f64>, Vec<f64>) = kappa_t1s.into_iter().unzip();
    let rho = match spearman(&k, &t) {
        Ok(r) => Value::Num(r),
        Err(e) => {
            warnings.push(format!("rank correlation: {e}"));
            Value::Missing
        }
    };
    summary.push("spearman_kappa_r_vs_t1_storage", rho);
    Ok(vec![table, summary])
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Runs every analysis the config names; sections follow a fixed order
/// (waveguide, fits, coupling, budget, dispersive).
pub fn run_pipeline(config_path: &Path) -> Result<Report> {
    let config_bytes = io::read_file(config_path)?;
    let text =
        std::str::from_utf8(&config_bytes).map_err(|e| Error::parse(0, 0, format!("config is not UTF-8: {e}")))?;
    let config = parse_config(text).map_err(|e| io::with_path(e, config_path))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    run_config(&config, base, &config_bytes)
}

pub fn run_config(config: &Config, base: &Path, config_bytes: &[u8]) -> Result<Report> {
    // Inputs are keyed by the path as written, so reports do not depend on
    // the working directory.
    let mut inputs: Vec<(String, Vec<u8>)> = vec![("config".into(), config_bytes.to_vec())];
    let mut read = |p: &Path| -> Result<Vec<u8>> {
        let bytes = io::read_file(&resolve(base, p))?;
        inputs.push((p.display().to_string(), bytes.clone()));
        Ok(bytes)
    };

    let mut sections = Vec::new();
    let mut warnings = Vec::new();

    if let Some(w) = &config.waveguide {
        sections.push(waveguide_from_config(w)?);
    }

    if !config.fit.is_empty() {
        let mut traces = Vec::new();
        for f in &config.fit {
            let path = resolve(base, &f.input);
            read(&f.input)?;
            let parsed = io::read_trace(&path)?;
            let label = f.input.display().to_string();
            warnings.extend(parsed.warnings.into_iter().map(|w| format!("{label}: {w}")));
            let mut t = parsed.value;
            t.meta.label = label;
            traces.push((t, FitOptions { refine: f.refine }));
        }
        let results: Vec<Result<FitResult>> = traces.par_iter().map(|(t, o)| fit_hanger_with(t, *o)).collect();
        for ((t, _), r) in traces.iter().zip(results) {
            let r = r.map_err(|e| annotate(e, &t.meta.label))?;
            warnings.extend(r.diagnostics.warnings.iter().map(|w| format!("{}: {w}", t.meta.label)));
            sections.push(fit_section(&t.meta.label, &r));
        }
    }

    if let Some(c) = &config.coupling {
        let kind = parse_series_kind(&c.kind)?;
        let bytes = read(&c.input)?;
        let series = parse_series_csv(&bytes, kind)
            .map_err(|e| io::with_path(e, &c.input))?
            .value;
        let (law, w) = coupling_fit(&series, c.fixed_rate_per_mm.map(|r| r * 1e3), c.linear_refine)?;
        warnings.extend(w);
        let predict: Vec<f64> = c.predict_mm.iter().map(|&d| mm_to_m(d)).collect();
        sections.push(coupling_section(&series, &law, &predict));
    }

    if let Some(b) = &config.budget {
        let bytes = read(&b.input)?;
        let sources: Vec<LossSource> = parse_budget_csv(&bytes).map_err(|e| io::with_path(e, &b.input))?.value;
        let budget = ParticipationBudget::new(sources, b.qi_best)?;
        sections.extend(budget_sections(&budget)?);
        if let Some(sweep) = &b.sweep {
            let bytes = read(sweep)?;
            let table = parse_sweep_csv(&bytes).map_err(|e| io::with_path(e, sweep))?.value;
            sections.push(limit_curves_section(&table.limit_curves(Some(budget.sources()))?));
        }
    }

    if let Some(d) = &config.dispersive {
        if d.device.is_none() && d.batch.is_none() {
            return Err(Error::Usage("[dispersive] needs 'device' or 'batch'".into()));
        }
        if let Some(p) = &d.device {
            let bytes = read(p)?;
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::parse(0, 0, e.to_string()))?;
            let parsed = parse_device_file(text).map_err(|e| io::with_path(e, p))?;
            warnings.extend(parsed.warnings);
            sections.extend(dispersive_sections(&parsed.value, &mut warnings)?);
        }
        if let Some(p) = &d.batch {
            let bytes = read(p)?;
            let parsed = parse_device_table(&bytes).map_err(|e| io::with_path(e, p))?;
            warnings.extend(parsed.warnings);
            sections.extend(dispersive_batch_sections(&parsed.value, &mut warnings)?);
        }
    }

    let digest = digest_inputs(inputs.iter().map(|(n, b)| (n.as_str(), b.as_slice())));
    let mut report = Report::new(digest);
    report.sections = sections;
    report.warnings = warnings;
    Ok(report)
}

fn annotate(e: Error, label: &str) -> Error {
    match e {
        Error::FitFailure { message, last_iterate } => Error::FitFailure {
            message: format!("{label}: {message}"),
            last_iterate,
        },
        Error::NoResonance(m) => Error::NoResonance(format!("{label}: {m}")),
        Error::DegenerateGeometry(m) => Error::DegenerateGeometry(format!("{label}: {m}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(parse_config("[waveguide]\nfrequency_ghz = 5.4\n").is_ok());
        match parse_config("[waveguide]\nfrequency_ghz = 5.4\ncolour = 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_config("[extra]\n").is_err());
    }

    #[test]
    fn waveguide_only_config_gives_one_section() {
        let c = parse_config("[waveguide]\nfrequency_ghz = 5.4\n").unwrap();
        let r = run_config(&c, Path::new("."), b"x").unwrap();
        assert_eq!(r.sections.len(), 1);
        let s = &r.sections[0];
        let Some(Value::Num(db)) = s.get("alpha_db_per_mm") else {
            panic!()
        };
        assert!((db / 8.5 - 1.0).abs() < 0.005);
    }

    #[test]
    fn conflicting_waveguide_options() {
        let c = parse_config("[waveguide]\nfrequency_ghz = 5.4\nempty = true\nloading = 2.0\n").unwrap();
        assert!(matches!(run_config(&c, Path::new("."), b""), Err(Error::Usage(_))));
        let c = parse_config("[dispersive]\n").unwrap();
        assert!(matches!(run_config(&c, Path::new("."), b""), Err(Error::Usage(_))));
    }

    #[test]
    fn implied_alpha_signs() {
        assert_eq!(implied_alpha(SeriesKind::QcVsDepth, 2.0), 1.0);
        assert_eq!(implied_alpha(SeriesKind::GVsSeparation, -3.0), 3.0);
    }
}
