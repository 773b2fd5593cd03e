//! Sweeps comparing the direct and integral-equation pipelines, and their CSV/JSON output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StokesError};
use crate::ieq::{solve_fixed_point, ConvolutionMethod, IeqParams, Mode, RaySolution, SignConvention};
use crate::metric::{metric_sample, MetricPdeParams, MetricSample};
use crate::ode::OdeParams;
use crate::oper::oper_spectral_coords;
use crate::pde::{hitchin_setup, hitchin_spectral_coords_de, richardson_error, PdeMethod, PdeParams};
use crate::periods::{base_periods, numeric_periods, period_of};
use crate::theory::{build_differentials, get_theory_by_name, DifferentialTuple, Theory};
use crate::PeriodVector;

/// `2|a - b| / (|a| + |b|)`
pub fn reldiff(a: Complex64, b: Complex64) -> Result<f64> {
    let den = a.norm() + b.norm();
    if den == 0.0 {
        return Err(StokesError::BothZero);
    }
    Ok(2.0 * (a - b).norm() / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Oper,
    Hitchin,
    Metric,
}

/// Solver settings; field names follow the parameter tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub ode_thresh: f64,
    pub ode_rstep: f64,
    /// Single grid for `hitchin-de` and the metric; the Hitchin sweep uses `pde_ladder`.
    pub pde_nmesh: Option<usize>,
    pub pde_ladder: Vec<usize>,
    pub pde_thresh: Option<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    pub steps: usize,
    pub tolerance: f64,
    pub damping: f64,
    pub max_iter: usize,
    pub eps: f64,
    /// PDE backend.
    pub method: PdeMethod,
    /// Convolution backend of the integral equations.
    pub ieq_method: ConvolutionMethod,
    pub rmax: f64,
    /// Skip the direct solves.
    pub ieq_only: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let ode = OdeParams::default();
        let ieq = IeqParams::default();
        Self {
            ode_thresh: ode.thresh,
            ode_rstep: ode.rstep,
            pde_nmesh: None,
            pde_ladder: vec![255, 511, 1023],
            pde_thresh: None,
            l: ieq.l,
            steps: ieq.steps,
            tolerance: ieq.tolerance,
            damping: ieq.damping,
            max_iter: ieq.max_iter,
            eps: 1e-6,
            method: PdeMethod::Fourier,
            ieq_method: ieq.method,
            rmax: 10.0,
            ieq_only: false,
        }
    }
}

impl SolverSettings {
    pub fn ode(&self) -> OdeParams {
        OdeParams::new(self.ode_thresh, self.ode_rstep)
    }

    pub fn ieq(&self) -> IeqParams {
        IeqParams {
            l: self.l,
            steps: self.steps,
            tolerance: self.tolerance,
            damping: self.damping,
            max_iter: self.max_iter,
            method: self.ieq_method,
        }
    }

    /// PDE settings for the Hitchin section at grid size `nmesh`.
    pub fn pde(&self, nmesh: usize) -> PdeParams {
        let mut p = PdeParams { method: self.method, nmesh, ..PdeParams::default() };
        if let Some(t) = self.pde_thresh {
            p.thresh = t;
        }
        p
    }

    pub fn metric_pde(&self) -> MetricPdeParams {
        let mut p = MetricPdeParams { rmax: self.rmax, ..MetricPdeParams::default() };
        if let Some(n) = self.pde_nmesh {
            p.pde.nmesh = n;
        }
        if let Some(t) = self.pde_thresh {
            p.pde.thresh = t;
        }
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub theory: String,
    pub mode: SweepMode,
    /// Family parameters as `[re, im]`.
    #[serde(default)]
    pub params: BTreeMap<String, [f64; 2]>,
    /// Phase of `hbar` or `zeta`; the catalog angle when absent.
    #[serde(default)]
    pub theta: Option<f64>,
    /// `|hbar|^{-1}`, `R` or `c` values.
    pub schedule: Vec<f64>,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl RunConfig {
    pub fn validate(&self) -> Result<Theory> {
        let theory = get_theory_by_name(&self.theory)?;
        if self.schedule.is_empty() {
            return Err(StokesError::Config("empty parameter schedule".into()));
        }
        if self.schedule.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(StokesError::Config("schedule values must be positive".into()));
        }
        if self.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(StokesError::Config("schedule must be strictly increasing".into()));
        }
        let ladder = &self.solver.pde_ladder;
        if self.mode == SweepMode::Hitchin && (ladder.len() != 3 || ladder.windows(2).any(|w| w[1] <= w[0])) {
            return Err(StokesError::Config("pde_ladder needs three increasing grid sizes".into()));
        }
        if self.mode == SweepMode::Metric && theory.name != crate::theory::TheoryName::A1A2 {
            return Err(StokesError::Config("the metric is implemented for A1A2 only".into()));
        }
        Ok(theory)
    }

    pub fn family_params(&self) -> BTreeMap<String, Complex64> {
        self.params.iter().map(|(k, v)| (k.clone(), Complex64::new(v[0], v[1]))).collect()
    }
}

/// Log-spaced points over `[1e-3, 0.1)` followed by linear points over `[0.1, cutoff]`.
pub fn default_schedule(cutoff: f64, n_small: usize, n_large: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..n_small).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / n_small as f64)).collect();
    if n_large == 1 {
        out.push(0.1);
    } else {
        out.extend((0..n_large).map(|k| 0.1 + (cutoff - 0.1) * k as f64 / (n_large - 1) as f64));
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoordinateComparison {
    pub de: Option<Complex64>,
    pub ieq: Option<Complex64>,
    pub reldiff: Option<f64>,
    pub de_error_estimate: Option<f64>,
    pub richardson_exponent: Option<f64>,
    /// WKB (oper) or semiflat (Hitchin) value.
    pub asymptote: Option<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub parameter: f64,
    pub coords: Vec<CoordinateComparison>,
    pub de_error: Option<String>,
    pub ieq_error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SweepOutput {
    Coordinates(Vec<ComparisonRecord>),
    Metric(Vec<MetricSample>),
}

/// Direct Hitchin coordinates on a three-grid ladder with a per-coordinate error estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HitchinLadder {
    pub nmesh: Vec<usize>,
    /// Coordinates per grid, coarsest first.
    pub values: Vec<Vec<Complex64>>,
    /// Richardson estimate (or the finest-step difference when the fit is rejected) plus the
    /// ODE estimate of the finest grid.
    pub estimates: Vec<f64>,
    pub exponents: Vec<Option<f64>>,
    pub fallback: Vec<bool>,
}

impl HitchinLadder {
    pub fn finest(&self) -> &[Complex64] {
        self.values.last().unwrap()
    }
}

pub fn hitchin_de_ladder(
    theory: &Theory,
    w: &DifferentialTuple,
    r_param: f64,
    zeta: Complex64,
    ladder: &[usize],
    settings: &SolverSettings,
    convention: SignConvention,
) -> Result<HitchinLadder> {
    if ladder.len() != 3 {
        return Err(StokesError::Config("ladder needs three grids".into()));
    }
    let (_, half_width) = hitchin_setup(w, r_param)?;
    let ode = settings.ode();
    let mut values = Vec::new();
    let mut ode_est = Vec::new();
    for &n in ladder {
        let res = hitchin_spectral_coords_de(theory, w, r_param, zeta, &settings.pde(n), &ode, convention)?;
        values.push(res.coords.values);
        ode_est = res.ode_error_estimate;
    }
    let spacing = |n: usize| 2.0 * half_width / (n + 1) as f64;
    let mut estimates = Vec::new();
    let mut exponents = Vec::new();
    let mut fallback = Vec::new();
    for i in 0..values[0].len() {
        let samples = [0, 1, 2].map(|k| (spacing(ladder[k]), values[k][i]));
        let fit = richardson_error(samples).ok();
        exponents.push(fit.and_then(|f| f.exponent));
        let (est, fb) = match fit {
            Some(f) if f.accepted => (f.estimate, false),
            _ => ((values[2][i] - values[1][i]).norm(), true),
        };
        estimates.push(est + ode_est[i]);
        fallback.push(fb);
    }
    Ok(HitchinLadder { nmesh: ladder.to_vec(), values, estimates, exponents, fallback })
}

fn periods_for(theory: &Theory, params: &BTreeMap<String, Complex64>) -> Result<PeriodVector> {
    if params.is_empty() {
        Ok(base_periods(theory))
    } else {
        numeric_periods(theory, params)
    }
}

fn basis_periods(theory: &Theory, pv: &PeriodVector) -> Result<Vec<Complex64>> {
    (0..theory.lattice_rank).map(|i| period_of(&theory.basis_charge(i), pv)).collect()
}

fn fill_reldiff(coords: &mut [CoordinateComparison]) {
    for c in coords {
        if let (Some(a), Some(b)) = (c.de, c.ieq) {
            c.reldiff = reldiff(a, b).ok();
        }
    }
}

/// Runs the configured sweep. Configuration errors abort; per-point solver failures are kept
/// in the records.
pub fn run_sweep(config: &RunConfig) -> Result<SweepOutput> {
    let theory = config.validate()?;
    let params = config.family_params();
    let s = &config.solver;
    if config.mode == SweepMode::Metric {
        let pde = s.metric_pde();
        let ieq = s.ieq();
        let samples = config
            .schedule
            .par_iter()
            .map(|&c| metric_sample(Complex64::new(c, 0.0), s.eps, &ieq, (!s.ieq_only).then_some(&pde)))
            .collect::<Result<Vec<_>>>()?;
        return Ok(SweepOutput::Metric(samples));
    }
    let w = build_differentials(&theory, &params)?;
    let pv = periods_for(&theory, &params)?;
    let z = basis_periods(&theory, &pv)?;
    let theta = config.theta.unwrap_or(theory.theta0);
    let phase = Complex64::from_polar(1.0, theta);
    let rank = theory.lattice_rank;
    let records = match config.mode {
        SweepMode::Oper => {
            // the oper solution does not depend on hbar
            let sol = solve_fixed_point(&theory, &pv, Mode::Oper, &s.ieq()).and_then(RaySolution::require_converged);
            config
                .schedule
                .par_iter()
                .map(|&hinv| {
                    let hbar = phase / hinv;
                    let mut coords = vec![CoordinateComparison::default(); rank];
                    let mut rec = ComparisonRecord { parameter: hinv, coords: Vec::new(), de_error: None, ieq_error: None };
                    for (c, zi) in coords.iter_mut().zip(&z) {
                        c.asymptote = Some((zi / hbar).exp());
                    }
                    match &sol {
                        Ok(sol) => match sol.cluster_at(&theory, hbar, SignConvention::Paper) {
                            Ok(x) => coords.iter_mut().zip(x).for_each(|(c, v)| c.ieq = Some(v)),
                            Err(e) => rec.ieq_error = Some(e.to_string()),
                        },
                        Err(e) => rec.ieq_error = Some(e.to_string()),
                    }
                    if !s.ieq_only {
                        match oper_spectral_coords(&theory, &w, hbar, &s.ode(), SignConvention::Paper) {
                            Ok(res) => {
                                for (i, c) in coords.iter_mut().enumerate() {
                                    c.de = Some(res.coords.values[i]);
                                    c.de_error_estimate = Some(res.error_estimate[i]);
                                }
                            }
                            Err(e) => rec.de_error = Some(e.to_string()),
                        }
                    }
                    fill_reldiff(&mut coords);
                    rec.coords = coords;
                    rec
                })
                .collect()
        }
        SweepMode::Hitchin => config
            .schedule
            .par_iter()
            .map(|&r| {
                let zeta = phase;
                let mut coords = vec![CoordinateComparison::default(); rank];
                let mut rec = ComparisonRecord { parameter: r, coords: Vec::new(), de_error: None, ieq_error: None };
                for (c, zi) in coords.iter_mut().zip(&z) {
                    c.asymptote = Some((r * zi / zeta + r * zeta * zi.conj()).exp());
                }
                let ieq = solve_fixed_point(&theory, &pv, Mode::Hitchin { r }, &s.ieq())
                    .and_then(RaySolution::require_converged)
                    .and_then(|sol| sol.cluster_at(&theory, zeta, SignConvention::Paper));
                match ieq {
                    Ok(x) => coords.iter_mut().zip(x).for_each(|(c, v)| c.ieq = Some(v)),
                    Err(e) => rec.ieq_error = Some(e.to_string()),
                }
                if !s.ieq_only {
                    match hitchin_de_ladder(&theory, &w, r, zeta, &s.pde_ladder, s, SignConvention::Paper) {
                        Ok(l) => {
                            for (i, c) in coords.iter_mut().enumerate() {
                                c.de = Some(l.finest()[i]);
                                c.de_error_estimate = Some(l.estimates[i]);
                                c.richardson_exponent = l.exponents[i];
                            }
                        }
                        Err(e) => rec.de_error = Some(e.to_string()),
                    }
                }
                fill_reldiff(&mut coords);
                rec.coords = coords;
                rec
            })
            .collect(),
        SweepMode::Metric => unreachable!(),
    };
    Ok(SweepOutput::Coordinates(records))
}

/// `log((sqrt 5 - 1) / 2)`, the small-`R` plateau of the A1A2 instanton part.
pub fn conformal_plateau() -> f64 {
    ((5f64.sqrt() - 1.0) / 2.0).ln()
}

/// Linear interpolation of the stored instanton part of state `g` at ray parameter `t`.
fn inst_on_ray(sol: &RaySolution, g: usize, t: f64) -> Complex64 {
    let h = sol.grid.spacing();
    let s = ((t + sol.grid.l) / h).clamp(0.0, (sol.grid.steps - 1) as f64);
    let k = (s.floor() as usize).min(sol.grid.steps - 2);
    let f = s - k as f64;
    sol.inst[g][k] * (1.0 - f) + sol.inst[g][k + 1] * f
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConformalRow {
    pub r: f64,
    pub hbar_abs: f64,
    /// Hitchin instanton part at `zeta = R hbar`.
    pub hitchin: Complex64,
    /// Oper instanton part at `hbar`.
    pub oper: Complex64,
    pub difference: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConformalReport {
    pub rows: Vec<ConformalRow>,
    /// Instanton part at `|zeta| = 1` for the smallest `R`.
    pub plateau: Complex64,
    pub plateau_target: f64,
    /// The two smallest `R` approach the oper values monotonically at every `hbar`.
    pub monotone: bool,
    /// Instanton part at the two ends of the sampled ray for the smallest `R`.
    pub tails: [Complex64; 2],
}

/// Compares `x^inst(R, zeta = R hbar)` with the oper `x^inst(hbar)` on the ray of the first basis
/// charge, for `hbar` on that ray with the given moduli.
pub fn conformal_limit_check(theory: &Theory, hbar_abs: &[f64], r_ladder: &[f64], params: &IeqParams) -> Result<ConformalReport> {
    if r_ladder.len() < 2 || hbar_abs.is_empty() || r_ladder.iter().chain(hbar_abs).any(|v| !(*v > 0.0)) {
        return Err(StokesError::Config("need at least two positive R values and one positive |hbar|".into()));
    }
    let pv = base_periods(theory);
    let gamma = theory.basis_charge(0);
    let oper = solve_fixed_point(theory, &pv, Mode::Oper, params)?.require_converged()?;
    let state = |sol: &RaySolution| {
        sol.states.iter().position(|s| s.charge == gamma).ok_or_else(|| StokesError::IndexError("first basis charge is not a stored state".into()))
    };
    let g_oper = state(&oper)?;
    let mut ladder = r_ladder.to_vec();
    ladder.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    let mut last = None;
    for &r in &ladder {
        let sol = solve_fixed_point(theory, &pv, Mode::Hitchin { r }, params)?.require_converged()?;
        let g = state(&sol)?;
        for &h in hbar_abs {
            let s = h.ln();
            let hitchin = inst_on_ray(&sol, g, s + r.ln());
            let op = inst_on_ray(&oper, g_oper, s);
            rows.push(ConformalRow { r, hbar_abs: h, hitchin, oper: op, difference: (hitchin - op).norm() });
        }
        last = Some((inst_on_ray(&sol, g, 0.0), [sol.inst[g][0], sol.inst[g][sol.grid.steps - 1]]));
    }
    let n = hbar_abs.len();
    let k = rows.len();
    let monotone = (0..n).all(|i| rows[k - n + i].difference <= rows[k - 2 * n + i].difference);
    let (plateau, tails) = last.unwrap();
    Ok(ConformalReport { rows, plateau, plateau_target: conformal_plateau(), monotone, tails })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

const COORD_COLUMNS: [&str; 9] =
    ["de_re", "de_im", "ieq_re", "ieq_im", "reldiff", "error_estimate", "richardson_p", "asymptote_re", "asymptote_im"];

/// Column names for records with `n` coordinates.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h = vec!["parameter".to_string()];
    for i in 1..=n {
        h.extend(COORD_COLUMNS.iter().map(|c| format!("X{i}_{c}")));
    }
    h.push("de_error".into());
    h.push("ieq_error".into());
    h
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_string(), |x| x.to_string())
}

fn parse_cell(s: &str) -> Result<Option<f64>> {
    if s == "null" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| StokesError::Config(format!("bad numeric cell `{s}`")))
}

pub fn records_to_csv(records: &[ComparisonRecord]) -> Result<String> {
    let n = records.first().map_or(0, |r| r.coords.len());
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(csv_header(n))?;
    for r in records {
        let mut row = vec![r.parameter.to_string()];
        for c in &r.coords {
            row.extend([
                cell(c.de.map(|v| v.re)),
                cell(c.de.map(|v| v.im)),
                cell(c.ieq.map(|v| v.re)),
                cell(c.ieq.map(|v| v.im)),
                cell(c.reldiff),
                cell(c.de_error_estimate),
                cell(c.richardson_exponent),
                cell(c.asymptote.map(|v| v.re)),
                cell(c.asymptote.map(|v| v.im)),
            ]);
        }
        row.push(r.de_error.clone().unwrap_or_else(|| "null".into()));
        row.push(r.ieq_error.clone().unwrap_or_else(|| "null".into()));
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| StokesError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn records_from_csv(text: &str) -> Result<Vec<ComparisonRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let width = rdr.headers()?.len();
    if width < 3 || (width - 3) % COORD_COLUMNS.len() != 0 {
        return Err(StokesError::Config(format!("unexpected CSV width {width}")));
    }
    let n = (width - 3) / COORD_COLUMNS.len();
    let complex = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(re), Some(im)) => Some(Complex64::new(re, im)),
        _ => None,
    };
    let text_cell = |s: &str| (s != "null").then(|| s.to_string());
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let parameter = parse_cell(&row[0])?.ok_or_else(|| StokesError::Config("null parameter".into()))?;
        let mut coords = Vec::new();
        for i in 0..n {
            let v: Vec<Option<f64>> =
                (0..COORD_COLUMNS.len()).map(|j| parse_cell(&row[1 + i * COORD_COLUMNS.len() + j])).collect::<Result<_>>()?;
            coords.push(CoordinateComparison {
                de: complex(v[0], v[1]),
                ieq: complex(v[2], v[3]),
                reldiff: v[4],
                de_error_estimate: v[5],
                richardson_exponent: v[6],
                asymptote: complex(v[7], v[8]),
            });
        }
        out.push(ComparisonRecord {
            parameter,
            coords,
            de_error: text_cell(&row[width - 2]),
            ieq_error: text_cell(&row[width - 1]),
        });
    }
    Ok(out)
}

pub fn metric_to_csv(samples: &[MetricSample]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["c_re", "c_im", "g_de", "g_ieq", "g_sf", "i_in", "i_out", "eps", "de_error", "ieq_error"])?;
    for s in samples {
        wtr.write_record([
            s.c.re.to_string(),
            s.c.im.to_string(),
            cell(s.g_de),
            cell(s.g_ieq),
            s.g_sf.to_string(),
            cell(s.i_in),
            cell(s.i_out),
            s.eps.to_string(),
            s.de_error.clone().unwrap_or_else(|| "null".into()),
            s.ieq_error.clone().unwrap_or_else(|| "null".into()),
        ])?;
    }
    let bytes = wtr.into_inner().map_err(|e| StokesError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Boundary between the log-scaled and linear plot regions.
pub const REGION_SPLIT: f64 = 0.1;

/// Plot series for the small and large parameter regions: parameter, then reldiff and error
/// estimate per coordinate.
pub fn plot_series(records: &[ComparisonRecord]) -> Result<[String; 2]> {
    let n = records.first().map_or(0, |r| r.coords.len());
    let mut header = vec!["parameter".to_string()];
    for i in 1..=n {
        header.push(format!("X{i}_reldiff"));
        header.push(format!("X{i}_error_estimate"));
    }
    let mut parts = [csv::Writer::from_writer(Vec::new()), csv::Writer::from_writer(Vec::new())];
    for w in parts.iter_mut() {
        w.write_record(&header)?;
    }
    for r in records {
        let mut row = vec![r.parameter.to_string()];
        for c in &r.coords {
            row.push(cell(c.reldiff));
            row.push(cell(c.de_error_estimate));
        }
        parts[usize::from(r.parameter >= REGION_SPLIT)].write_record(&row)?;
    }
    let [a, b] = parts;
    let finish = |w: csv::Writer<Vec<u8>>| -> Result<String> {
        let bytes = w.into_inner().map_err(|e| StokesError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    };
    Ok([finish(a)?, finish(b)?])
}

/// Writes `<stem>.csv` or `<stem>.json` into `dir`, plus `<stem>_small.csv` and `<stem>_large.csv`
/// plot series when requested. Returns the written paths.
pub fn emit_outputs(records: &[ComparisonRecord], format: OutputFormat, plotdata: bool, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(StokesError::Config("no records to write".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let main = match format {
        OutputFormat::Csv => (dir.join(format!("{stem}.csv")), records_to_csv(records)?),
        OutputFormat::Json => (dir.join(format!("{stem}.json")), serde_json::to_string_pretty(records)?),
    };
    std::fs::write(&main.0, main.1)?;
    written.push(main.0);
    if plotdata {
        let [small, large] = plot_series(records)?;
        for (suffix, body) in [("small", small), ("large", large)] {
            let path = dir.join(format!("{stem}_{suffix}.csv"));
            std::fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reldiff_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(reldiff(one, one).unwrap(), 0.0);
        assert_eq!(reldiff(one, -one).unwrap(), 2.0);
        assert!((reldiff(one, Complex64::new(1.0 + 1e-9, 0.0)).unwrap() - 1e-9).abs() < 1e-15);
        assert!(matches!(reldiff(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), Err(StokesError::BothZero)));
    }

    #[test]
    fn schedule_regions() {
        let s = default_schedule(2.0, 4, 5);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(s[0], 1e-3);
        assert_eq!(s.iter().filter(|v| **v < REGION_SPLIT).count(), 4);
        assert_eq!(*s.last().unwrap(), 2.0);
    }
}
