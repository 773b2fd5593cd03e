use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use stokes_core::compare::{
    conformal_limit_check, emit_outputs, hitchin_de_ladder, metric_to_csv, OutputFormat, RunConfig, SolverSettings,
    SweepOutput,
};
use stokes_core::ieq::{solve_fixed_point, ConvolutionMethod, Mode, SignConvention};
use stokes_core::metric::{a1a2_family_poly, de_metric, emit_integrand_grids, metric_sample, semiflat_fields};
use stokes_core::oper::oper_spectral_coords;
use stokes_core::pde::{hitchin_spectral_coords_de, FieldGrid, FieldKind, PdeMethod};
use stokes_core::periods::{base_periods, numeric_periods, period_of};
use stokes_core::theory::{build_differentials, get_theory, get_theory_by_name};
use stokes_core::{Complex64, ComplexPoly, PeriodVector, Theory, TheoryName};

#[derive(Parser)]
#[command(name = "stokes", version, about = "Spectral coordinates from integral equations and direct ODE/PDE solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Paper,
    Code,
}

impl From<Convention> for SignConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Paper => SignConvention::Paper,
            Convention::Code => SignConvention::Code,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum IeqMode {
    Oper,
    Hitchin,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Euler,
    Fourier,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convolution {
    Fourier,
    Simps,
}

#[derive(Args, Clone)]
struct TheoryArgs {
    #[arg(long, default_value = "A1A2")]
    theory: String,
    /// Family parameter as `name=re` or `name=re:im`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
    /// Phase of `hbar` or `zeta`; the catalog angle by default.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum, default_value = "code")]
    convention: Convention,
}

/// Overrides of the tabulated solver parameters.
#[derive(Args, Clone, Default)]
struct SolverArgs {
    #[arg(long = "ode_thresh")]
    ode_thresh: Option<f64>,
    #[arg(long = "ode_rstep")]
    ode_rstep: Option<f64>,
    #[arg(long = "pde_nmesh")]
    pde_nmesh: Option<usize>,
    #[arg(long = "pde_thresh")]
    pde_thresh: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// PDE backend.
    #[arg(long, value_enum)]
    method: Option<Backend>,
    /// Convolution backend of the integral equations.
    #[arg(long = "ieq_method", value_enum)]
    ieq_method: Option<Convolution>,
}

impl SolverArgs {
    fn settings(&self) -> SolverSettings {
        let mut s = SolverSettings::default();
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { s.$f = v; })* };
        }
        set!(ode_thresh, ode_rstep, l, steps, tolerance, damping, eps);
        s.pde_nmesh = self.pde_nmesh.or(s.pde_nmesh);
        s.pde_thresh = self.pde_thresh.or(s.pde_thresh);
        if let Some(m) = self.method {
            s.method = match m {
                Backend::Euler => PdeMethod::Euler,
                Backend::Fourier => PdeMethod::Fourier,
            };
        }
        if let Some(m) = self.ieq_method {
            s.ieq_method = match m {
                Convolution::Fourier => ConvolutionMethod::Fourier,
                Convolution::Simps => ConvolutionMethod::Simps,
            };
        }
        s
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print catalog entries with their basis periods.
    Catalog {
        #[arg(long)]
        theory: Option<String>,
    },
    /// Solve the integral equations and print the basis coordinates.
    Ieq {
        #[command(flatten)]
        theory: TheoryArgs,
        #[arg(long, value_enum, default_value = "hitchin")]
        mode: IeqMode,
        /// `R` for the Hitchin section.
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// `|hbar|^{-1}` for opers or `|zeta|` for the Hitchin section.
        #[arg(long, default_value_t = 1.0)]
        modulus: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Oper coordinates from parallel transport.
    OperDe {
        #[command(flatten)]
        theory: TheoryArgs,
        #[arg(long = "hbar_inv", default_value_t = 1.0)]
        hbar_inv: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Hitchin-section coordinates from the self-duality PDE and parallel transport.
    HitchinDe {
        #[command(flatten)]
        theory: TheoryArgs,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Run the {255, 511, 1023} ladder and report Richardson error estimates.
        #[arg(long)]
        ladder: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Metric coefficient g(c) on the A1A2 family.
    Metric {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long = "c_im", default_value_t = 0.0)]
        c_im: f64,
        #[arg(long)]
        rmax: Option<f64>,
        /// Skip the direct computation.
        #[arg(long = "ieq_only")]
        ieq_only: bool,
        /// Directory for integrand and field dumps.
        #[arg(long)]
        grids: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run a sweep described by a JSON configuration file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "sweep")]
        stem: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        plotdata: bool,
    },
    /// Compare small-R Hitchin instanton parts with the oper ones (A1A2).
    ConformalCheck {
        /// `R = exp(-k/2)` for `k` in `0..ladder`.
        #[arg(long, default_value_t = 20)]
        ladder: usize,
        /// `|hbar|` values on the ray of the first basis charge.
        #[arg(long = "hbar", value_delimiter = ',', default_values_t = vec![0.1, 0.3, 1.0, 3.0, 10.0])]
        hbar: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, Complex64>> {
    raw.iter()
        .map(|p| {
            let (name, val) = p.split_once('=').ok_or_else(|| anyhow!("parameter `{p}` is not `name=value`"))?;
            let z = match val.split_once(':') {
                Some((re, im)) => Complex64::new(re.parse()?, im.parse()?),
                None => Complex64::new(val.parse()?, 0.0),
            };
            Ok((name.to_string(), z))
        })
        .collect()
}

fn setup(args: &TheoryArgs) -> Result<(Theory, BTreeMap<String, Complex64>, PeriodVector)> {
    let theory = get_theory_by_name(&args.theory)?;
    let params = parse_params(&args.params)?;
    let pv = if params.is_empty() { base_periods(&theory) } else { numeric_periods(&theory, &params)? };
    Ok((theory, params, pv))
}

fn cplx(z: Complex64) -> serde_json::Value {
    json!([z.re, z.im])
}

fn print(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_grid(dir: &std::path::Path, name: &str, grid: &FieldGrid) -> Result<()> {
    std::fs::write(dir.join(format!("{name}.bin")), grid.to_bytes()).with_context(|| format!("writing {name}"))?;
    let meta = json!({"kind": grid.kind, "nmesh": grid.grid.nmesh, "r": grid.grid.r, "spacing": grid.grid.spacing()});
    std::fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn split_complex(f: &FieldGrid<Complex64>) -> (FieldGrid, FieldGrid) {
    let part = |g: fn(&Complex64) -> f64| FieldGrid { grid: f.grid, kind: FieldKind::F, values: f.values.iter().map(g).collect() };
    (part(|z| z.re), part(|z| z.im))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Catalog { theory } => {
            let names: Vec<TheoryName> = match theory {
                Some(n) => vec![n.parse()?],
                None => TheoryName::ALL.to_vec(),
            };
            let out: Vec<_> = names
                .into_iter()
                .map(|n| {
                    let t = get_theory(n);
                    let pv = base_periods(&t);
                    json!({"theory": t, "periods": pv.values.iter().map(|z| cplx(*z)).collect::<Vec<_>>()})
                })
                .collect();
            print(&json!(out))
        }
        Command::Ieq { theory: targs, mode, r, modulus, solver } => {
            let (theory, _, pv) = setup(&targs)?;
            let s = solver.settings();
            let theta = targs.theta.unwrap_or(theory.theta0);
            let (mode, param) = match mode {
                IeqMode::Oper => (Mode::Oper, Complex64::from_polar(1.0 / modulus, theta)),
                IeqMode::Hitchin => (Mode::Hitchin { r }, Complex64::from_polar(modulus, theta)),
            };
            let start = std::time::Instant::now();
            let sol = solve_fixed_point(&theory, &pv, mode, &s.ieq())?.require_converged()?;
            let x = sol.cluster_at(&theory, param, targs.convention.into())?;
            print(&json!({
                "theory": theory.name.to_string(),
                "spectral_parameter": cplx(param),
                "cluster": x.iter().map(|z| cplx(*z)).collect::<Vec<_>>(),
                "iterations": sol.iterations_used,
                "seconds": start.elapsed().as_secs_f64(),
            }))
        }
        Command::OperDe { theory: targs, hbar_inv, solver } => {
            let (theory, params, _) = setup(&targs)?;
            let w = build_differentials(&theory, &params)?;
            let theta = targs.theta.unwrap_or(theory.theta0);
            let hbar = Complex64::from_polar(1.0 / hbar_inv, theta);
            let res = oper_spectral_coords(&theory, &w, hbar, &solver.settings().ode(), targs.convention.into())?;
            print(&json!({
                "theory": theory.name.to_string(),
                "hbar": cplx(hbar),
                "cluster": res.coords.values.iter().map(|z| cplx(*z)).collect::<Vec<_>>(),
                "error_estimate": res.error_estimate,
                "precision_warnings": res.coords.precision_warnings,
                "radius": res.radius,
            }))
        }
        Command::HitchinDe { theory: targs, r, ladder, solver } => {
            let (theory, params, pv) = setup(&targs)?;
            let w = build_differentials(&theory, &params)?;
            let theta = targs.theta.unwrap_or(theory.theta0);
            let zeta = Complex64::from_polar(1.0, theta);
            let mut s = solver.settings();
            let conv: SignConvention = targs.convention.into();
            let semiflat: Vec<_> = (0..theory.lattice_rank)
                .map(|i| {
                    let z = period_of(&theory.basis_charge(i), &pv)?;
                    Ok(cplx((r * z / zeta + r * zeta * z.conj()).exp()))
                })
                .collect::<Result<_>>()?;
            if ladder {
                if let Some(n) = s.pde_nmesh {
                    s.pde_ladder = vec![(n + 1) / 4 - 1, (n + 1) / 2 - 1, n];
                }
                let l = hitchin_de_ladder(&theory, &w, r, zeta, &s.pde_ladder.clone(), &s, conv)?;
                print(&json!({
                    "theory": theory.name.to_string(),
                    "zeta": cplx(zeta),
                    "nmesh": l.nmesh,
                    "values": l.values.iter().map(|v| v.iter().map(|z| cplx(*z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    "cluster": l.finest().iter().map(|z| cplx(*z)).collect::<Vec<_>>(),
                    "error_estimate": l.estimates,
                    "richardson_exponent": l.exponents,
                    "fallback": l.fallback,
                    "semiflat_paper": semiflat,
                }))
            } else {
                let nmesh = s.pde_nmesh.unwrap_or(1023);
                let res = hitchin_spectral_coords_de(&theory, &w, r, zeta, &s.pde(nmesh), &s.ode(), conv)?;
                print(&json!({
                    "theory": theory.name.to_string(),
                    "zeta": cplx(zeta),
                    "nmesh": nmesh,
                    "half_width": res.grid.r,
                    "cluster": res.coords.values.iter().map(|z| cplx(*z)).collect::<Vec<_>>(),
                    "ode_error_estimate": res.ode_error_estimate,
                    "pde": res.pde,
                    "semiflat_paper": semiflat,
                }))
            }
        }
        Command::Metric { c, c_im, rmax, ieq_only, grids, solver } => {
            let mut s = solver.settings();
            if let Some(r) = rmax {
                s.rmax = r;
            }
            let c = Complex64::new(c, c_im);
            let pde = s.metric_pde();
            if let Some(dir) = grids {
                if ieq_only {
                    bail!("--grids needs the direct computation");
                }
                std::fs::create_dir_all(&dir)?;
                let m = de_metric(c, &pde)?;
                let p = a1a2_family_poly(c);
                let p_dot = ComplexPoly::new(vec![Complex64::new(-1.0, 0.0)]);
                let (u_sf, f_sf) = semiflat_fields(m.u.grid, &p, &p_dot);
                let [full, sf, diff] = emit_integrand_grids(&m.u, &m.f, &u_sf, &f_sf, &p, &p_dot);
                let (f_re, f_im) = split_complex(&m.f);
                for (name, g) in [("u", &m.u), ("f_re", &f_re), ("f_im", &f_im), ("integrand", &full), ("integrand_sf", &sf), ("integrand_diff", &diff)] {
                    write_grid(&dir, name, g)?;
                }
            }
            let sample = metric_sample(c, s.eps, &s.ieq(), (!ieq_only).then_some(&pde))?;
            print!("{}", metric_to_csv(std::slice::from_ref(&sample))?);
            Ok(())
        }
        Command::Sweep { config, out, stem, format, plotdata } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg: RunConfig = serde_json::from_str(&text).context("parsing the run configuration")?;
            match stokes_core::compare::run_sweep(&cfg)? {
                SweepOutput::Coordinates(recs) => {
                    let fmt = match format {
                        Format::Csv => OutputFormat::Csv,
                        Format::Json => OutputFormat::Json,
                    };
                    for p in emit_outputs(&recs, fmt, plotdata, &out, &stem)? {
                        println!("{}", p.display());
                    }
                }
                SweepOutput::Metric(samples) => {
                    std::fs::create_dir_all(&out)?;
                    let path = out.join(format!("{stem}.csv"));
                    std::fs::write(&path, metric_to_csv(&samples)?)?;
                    println!("{}", path.display());
                }
            }
            Ok(())
        }
        Command::ConformalCheck { ladder, hbar, solver } => {
            let theory = get_theory(TheoryName::A1A2);
            let r_values: Vec<f64> = (0..ladder).map(|k| (-(k as f64) / 2.0).exp()).collect();
            let report = conformal_limit_check(&theory, &hbar, &r_values, &solver.settings().ieq())?;
            print(&serde_json::to_value(&report)?)
        }
    }
}

fn main() -> Result<()> {
    run(Cli::parse())
}
