//! Batch front end: `thermolanczos <command> --config <file.json> [--out <path>]`.
//!
//! Exit codes: 0 success, 2 usage (bad arguments, configuration or model),
//! 3 numerical failure. Errors go to stderr as `{"kind", "message"}` JSON.

pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::Parser;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::error::Error;
use crate::exact::format_rational;
use crate::finite_ref::scaled_coefficients;
use crate::models::CumulantModel;
use crate::series::{lanczos_taylor, lanczos_taylor_f64, table::partition_table};
use crate::spectral::{default_xi_samples, gap_classify, overlap_details, weight_leading};
use crate::tl_solver::{
    equilibrium_density, gse_bounds, solve_curve, solve_curve_partial, solve_point_with, toda_march,
    MarchOptions,
};

pub use config::{Command, Format, RunConfig};
use output::{canonical_hash, render_csv, render_json, sha256_hex, write_atomic, Provenance, Table};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "thermolanczos", version, about = "Thermodynamic-limit Lanczos coefficients")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage {
        kind: String,
        message: String,
        path: Option<String>,
    },
    Numerical(Error),
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError::Usage {
            kind: "usage".into(),
            message: message.into(),
            path: None,
        }
    }

    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Usage {
            kind: "schema".into(),
            message: message.into(),
            path: Some(path.into()),
        }
    }

    /// Model construction errors are configuration errors.
    fn model(e: Error) -> Self {
        CliError::Usage {
            kind: e.kind().into(),
            message: e.to_string(),
            path: Some("model".into()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Usage { kind, message, path } => {
                let mut v = json!({"kind": kind, "message": message});
                if let Some(p) = path {
                    v["path"] = json!(p);
                }
                v
            }
            CliError::Numerical(e) => json!({"kind": e.kind(), "message": e.to_string()}),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

/// A rendered artifact and where it goes.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub contents: String,
    pub path: Option<PathBuf>,
}

fn params<T: DeserializeOwned>(v: &Value) -> Result<T, CliError> {
    let v = if v.is_null() { json!({}) } else { v.clone() };
    serde_path_to_error::deserialize(v).map_err(|e| {
        let p = e.path().to_string();
        let path = if p == "." { "params".to_string() } else { format!("params.{p}") };
        CliError::at(path, e.inner().to_string())
    })
}

fn grid(g: &config::Grid, field: &str) -> Result<Vec<f64>, CliError> {
    g.values().map_err(|m| CliError::at(format!("params.{field}"), m))
}

fn check_solver(p: &config::SolverParams) -> Result<(), CliError> {
    p.validate()
        .map_err(|(f, m)| CliError::at(format!("params.{f}"), m))
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let p = e.path().to_string();
        CliError::at(if p == "." { "$".into() } else { p }, e.inner().to_string())
    })
}

struct Ctx {
    command: Command,
    config_hash: String,
    model: Option<CumulantModel>,
}

impl Ctx {
    fn model(&self) -> &CumulantModel {
        self.model.as_ref().expect("model presence checked")
    }

    fn provenance(&self, tolerances: Value, nodes: Option<usize>) -> Provenance {
        let spec = self
            .model
            .as_ref()
            .map(|m| serde_json::to_value(m.spec()).expect("model spec serializes"));
        Provenance {
            program: "thermolanczos".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.name().into(),
            config_sha256: self.config_hash.clone(),
            model_sha256: spec.as_ref().map(canonical_hash),
            model: spec,
            tolerances,
            nodes,
            notes: Vec::new(),
        }
    }
}

enum Body {
    Csv(Table),
    Json(Value),
    Both(Table, Value),
}

/// Run one configuration and render its artifact.
pub fn run(command: Command, config_text: &str, out: Option<PathBuf>) -> Result<Artifact, CliError> {
    let cfg = parse_config(config_text)?;
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::at(
                "command",
                format!("config is for `{}` but `{}` was requested", c.name(), command.name()),
            ));
        }
    }
    let model = match (&cfg.model, command.needs_model()) {
        (Some(spec), _) => Some(spec.build().map_err(CliError::model)?),
        (None, true) => return Err(CliError::at("model", "missing field `model`")),
        (None, false) => None,
    };
    let format = cfg.output.format.unwrap_or(command.default_format());
    if format == Format::Csv && !command.supports_csv() {
        return Err(CliError::at(
            "output.format",
            format!("`{}` has no CSV form", command.name()),
        ));
    }
    let canonical: Value = serde_json::from_str(config_text).map_err(|e| CliError::usage(e.to_string()))?;
    let ctx = Ctx {
        command,
        config_hash: canonical_hash(&canonical),
        model,
    };
    let (mut prov, body) = dispatch(&ctx, &cfg.params)?;
    prov.config_sha256 = ctx.config_hash.clone();
    let contents = match (format, body) {
        (Format::Csv, Body::Csv(t) | Body::Both(t, _)) => render_csv(&prov, &t),
        (Format::Json, Body::Json(v) | Body::Both(_, v)) => render_json(&prov, v),
        (Format::Json, Body::Csv(t)) => render_json(&prov, table_json(&t)),
        (Format::Csv, Body::Json(_)) => unreachable!("csv support checked above"),
    };
    Ok(Artifact {
        contents,
        path: out.or(cfg.output.path),
    })
}

fn table_json(t: &Table) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            let m: serde_json::Map<String, Value> = t
                .header
                .iter()
                .zip(r)
                .map(|(h, v)| (h.to_string(), json!(v)))
                .collect();
            Value::Object(m)
        })
        .collect();
    Value::Array(rows)
}

fn dispatch(ctx: &Ctx, raw: &Value) -> Result<(Provenance, Body), CliError> {
    match ctx.command {
        Command::Curve => {
            let p: config::CurveParams = params(raw)?;
            check_solver(&p.solver)?;
            let s = grid(&p.s_grid, "s_grid")?;
            let opts = p.solver.options();
            let mut notes = Vec::new();
            let curve = if p.partial {
                let (c, err) = solve_curve_partial(ctx.model(), &s, &opts);
                if let Some(e) = err {
                    notes.push(format!("stopped early: {e}"));
                }
                c
            } else {
                solve_curve(ctx.model(), &s, &opts)?
            };
            let mut t = Table::new(vec!["s", "alpha", "beta2", "eps_minus", "eps_plus", "res_supp", "res_norm"]);
            for pt in &curve.points {
                t.push(vec![pt.s, pt.alpha, pt.beta2, pt.eps_minus(), pt.eps_plus(), pt.residuals.0, pt.residuals.1]);
            }
            if !curve.is_monotone() {
                notes.push(format!("envelope monotonicity violated at rows {:?}", curve.monotonicity_violations));
            }
            let nodes = curve.points.iter().map(|p| p.nodes).max();
            let mut prov = ctx.provenance(json!({"solver": p.solver.tolerance}), nodes);
            prov.notes = notes;
            let v = serde_json::to_value(&curve).expect("curve serializes");
            Ok((prov, Body::Both(t, v)))
        }
        Command::Series => {
            let p: config::SeriesParams = params(raw)?;
            if p.n_max > crate::series::DEFAULT_N_MAX {
                return Err(CliError::at(
                    "params.n_max",
                    format!("at most {}", crate::series::DEFAULT_N_MAX),
                ));
            }
            let k = 2 * p.n_max + 3;
            let m = ctx.model();
            let (json_v, a, b) = match m.exact_cumulants(k)? {
                Some(c) => {
                    let s = lanczos_taylor(&c, p.n_max)?;
                    let f = s.to_f64();
                    let v = json!({
                        "exact": true,
                        "c1": format_rational(&s.c1),
                        "a": s.a.iter().map(format_rational).collect::<Vec<_>>(),
                        "b": s.b.iter().map(format_rational).collect::<Vec<_>>(),
                    });
                    (v, f.a, f.b)
                }
                None => {
                    let s = lanczos_taylor_f64(&m.cumulants(k)?, p.n_max)?;
                    let v = json!({"exact": false, "c1": s.c1, "a": s.a, "b": s.b});
                    (v, s.a, s.b)
                }
            };
            let mut t = Table::new(vec!["n", "a_n", "b_n"]);
            for n in 0..=p.n_max {
                t.push(vec![n as f64, a[n], b[n]]);
            }
            Ok((ctx.provenance(json!({}), None), Body::Both(t, json_v)))
        }
        Command::Table => {
            let p: config::TableParams = params(raw)?;
            let n_max = p.n.unwrap_or(p.n_max);
            if n_max > crate::series::table::MAX_PARTITION_ORDER {
                return Err(CliError::at(
                    "params.n",
                    format!("at most {}", crate::series::table::MAX_PARTITION_ORDER),
                ));
            }
            let terms: Vec<_> = partition_table(n_max)?
                .into_iter()
                .filter(|t| p.n.map_or(true, |n| t.n == n) && p.which.map_or(true, |w| t.which == w))
                .collect();
            let v = serde_json::to_value(&terms).expect("terms serialize");
            Ok((ctx.provenance(json!({"exact": true}), None), Body::Json(v)))
        }
        Command::Gse => {
            let p: config::CurveParams = params(raw)?;
            check_solver(&p.solver)?;
            let s = grid(&p.s_grid, "s_grid")?;
            let (curve, err) = solve_curve_partial(ctx.model(), &s, &p.solver.options());
            if curve.points.is_empty() {
                return Err(err.unwrap_or(Error::Internal("empty curve".into())).into());
            }
            let bounds = gse_bounds(&curve);
            let v = json!({
                "bounds": bounds,
                "eps0_estimate": bounds.eps0_estimate(),
                "points": curve.points.len(),
                "s_last": curve.points.last().map(|p| p.s),
                "monotone": curve.is_monotone(),
                "stopped": err.map(|e| json!({"kind": e.kind(), "message": e.to_string()})),
            });
            let nodes = curve.points.iter().map(|p| p.nodes).max();
            Ok((ctx.provenance(json!({"solver": p.solver.tolerance}), nodes), Body::Json(v)))
        }
        Command::Weight => {
            let p: config::WeightParams = params(raw)?;
            if !(p.n_sites > 0.0) {
                return Err(CliError::at("params.N", "must be positive"));
            }
            let eps = grid(&p.epsilon, "epsilon")?;
            let mut t = Table::new(vec!["epsilon", "xi", "w_leading", "u"]);
            for e in eps {
                let w = weight_leading(ctx.model(), e, p.n_sites)?;
                t.push(vec![w.epsilon, w.xi, w.w_leading, w.u]);
            }
            Ok((ctx.provenance(json!({}), None), Body::Csv(t)))
        }
        Command::Overlap => {
            let _: config::ClassifyParams = params(raw)?;
            let o = overlap_details(ctx.model())?;
            let mut t = Table::new(vec!["log_overlap", "cutoff", "body", "tail", "quadrature_error"]);
            t.push(vec![o.log_overlap, o.cutoff, o.body, o.tail, o.quadrature_error]);
            let mut v = serde_json::to_value(o).expect("overlap serializes");
            v["classification"] = o.classification.to_json();
            Ok((ctx.provenance(json!({"quadrature": 1e-13}), None), Body::Both(t, v)))
        }
        Command::Density => {
            let p: config::DensityParams = params(raw)?;
            check_solver(&p.solver)?;
            if !(p.s > 0.0) {
                return Err(CliError::at("params.s", "must be positive"));
            }
            let pt = solve_point_with(ctx.model(), p.s, None, &p.solver.options())?;
            let d = equilibrium_density(ctx.model(), &pt, p.nodes)?;
            let mut t = Table::new(vec!["eps", "sigma"]);
            for (e, s) in d.eps.iter().zip(&d.sigma) {
                t.push(vec![*e, *s]);
            }
            let mut prov = ctx.provenance(json!({"solver": p.solver.tolerance}), Some(pt.nodes));
            prov.notes.push(format!("mass = {:.16e}", d.mass));
            prov.notes.push(format!("force_residual = {:.16e}", d.force_residual));
            let v = serde_json::to_value(&d).expect("density serializes");
            Ok((prov, Body::Both(t, v)))
        }
        Command::Classify => {
            let p: config::ClassifyParams = params(raw)?;
            let xi = p.xi_samples.unwrap_or_else(default_xi_samples);
            if xi.iter().any(|v| !(*v < 0.0)) {
                return Err(CliError::at("params.xi_samples", "samples must be negative"));
            }
            let g = gap_classify(ctx.model(), &xi)?;
            Ok((ctx.provenance(json!({"fit_threshold": crate::spectral::GAP_FIT_THRESHOLD}), None), Body::Json(g.to_json())))
        }
        Command::Crosscheck => {
            let p: config::CrosscheckParams = params(raw)?;
            check_solver(&p.solver)?;
            let s = grid(&p.s_values, "s_values")?;
            if s[0] <= 0.0 {
                return Err(CliError::at("params.s_values", "values must be positive"));
            }
            for (name, v) in [
                ("series", p.tolerances.series),
                ("march", p.tolerances.march),
                ("finite", p.tolerances.finite),
            ] {
                if !(v > 0.0) {
                    return Err(CliError::at(format!("params.tolerances.{name}"), "must be positive"));
                }
            }
            let report = crosscheck(ctx.model(), &s, &p);
            let prov = ctx.provenance(serde_json::to_value(p.tolerances).unwrap(), None);
            Ok((prov, Body::Json(report)))
        }
    }
}

fn err_json(e: &Error) -> Value {
    json!({"kind": e.kind(), "message": e.to_string()})
}

/// Pairwise comparison of the solver with the series, the march and the
/// finite-N recurrence; route failures are recorded, not raised.
pub fn crosscheck(model: &CumulantModel, s: &[f64], p: &config::CrosscheckParams) -> Value {
    let tol = p.tolerances;
    let mut failures = Vec::new();
    let opts = p.solver.options();
    let (curve, err) = solve_curve_partial(model, s, &opts);
    if let Some(e) = err {
        failures.push(json!({"route": "solver", "error": err_json(&e)}));
    }
    let series = model
        .cumulants(2 * p.n_max + 3)
        .and_then(|c| lanczos_taylor_f64(&c, p.n_max));
    if let Err(e) = &series {
        failures.push(json!({"route": "series", "error": err_json(e)}));
    }
    let s_max = *s.last().unwrap();
    let march_opts = MarchOptions {
        half_width: p.march.half_width,
        dt: p.march.dt,
        ds: p.march.ds,
        samples: ((s_max / 1e-3).ceil() as usize).max(1),
    };
    let march = toda_march(model, s_max, &march_opts);
    if let Err(e) = &march {
        failures.push(json!({"route": "march", "error": err_json(e)}));
    }
    let mut rows = Vec::new();
    let mut all_pass = failures.is_empty();
    for pt in &curve.points {
        let mut row = json!({"s": pt.s, "solver": {"alpha": pt.alpha, "beta2": pt.beta2}});
        let mut check = |alpha: f64, beta2: f64, tolerance: f64, use_alpha: bool| {
            let (da, db) = ((alpha - pt.alpha).abs(), (beta2 - pt.beta2).abs());
            let worst = if use_alpha { da.max(db) } else { db };
            let pass = worst <= tolerance;
            all_pass &= pass;
            json!({"alpha": alpha, "beta2": beta2, "d_alpha": da, "d_beta2": db, "tolerance": tolerance, "pass": pass})
        };
        if let Ok(sr) = &series {
            row["series"] = check(sr.alpha(pt.s), sr.beta2(pt.s), tol.series, true);
        }
        if let Ok(m) = &march {
            if let Some((a, b)) = m.interpolate(pt.s) {
                row["march"] = check(a, b, tol.march, false);
            }
        }
        if let Some(n_sites) = p.n_sites {
            let n = (pt.s * n_sites as f64).round() as usize;
            let exact_s = n as f64 / n_sites as f64;
            if n >= 1 && (exact_s - pt.s).abs() <= 1e-12 * pt.s.max(1.0) {
                match scaled_coefficients(model, n_sites, n) {
                    Ok((a, b)) => row["finite"] = check(a, b, tol.finite, true),
                    Err(e) => failures.push(json!({"route": "finite", "s": pt.s, "error": err_json(&e)})),
                }
            } else {
                row["finite"] = json!({"skipped": format!("s·N is not an integer for N = {n_sites}")});
            }
        }
        rows.push(row);
    }
    if !failures.is_empty() {
        all_pass = false;
    }
    json!({
        "model": model.id(),
        "points": rows,
        "failures": failures,
        "pass": all_pass,
    })
}

/// Parse arguments, run, write the artifact; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            report(&CliError::usage(e.to_string().trim().to_string()));
            return EXIT_USAGE;
        }
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            let err = CliError::usage(format!("cannot read {}: {e}", args.config.display()));
            report(&err);
            return err.exit_code();
        }
    };
    match run(args.command, &text, args.out) {
        Ok(a) => match &a.path {
            Some(p) => match write_atomic(p, &a.contents) {
                Ok(()) => 0,
                Err(e) => {
                    let err = CliError::usage(format!("cannot write {}: {e}", p.display()));
                    report(&err);
                    err.exit_code()
                }
            },
            None => {
                print!("{}", a.contents);
                0
            }
        },
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}

fn report(e: &CliError) {
    eprintln!("{}", e.to_json());
}

/// Hash of raw bytes, for callers that want to tag artifacts themselves.
pub fn config_digest(text: &str) -> String {
    sha256_hex(text.as_bytes())
}
