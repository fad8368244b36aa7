//! Command-line front end. Every subcommand prints one JSON document
//! {schema_version, command, inputs, results, diagnostics}; `poles` prints CSV.
//! Errors print {error: {kind, detail}} and exit 2 (bad input) or 3 (numerical failure).
//! Angles are in radians, areas in steradians.

use clap::{Args, Parser, Subcommand, ValueEnum};
use liouville::correlators::*;
use liouville::dozz::*;
use liouville::mc::McConfig;
use liouville::semiclassical::*;
use liouville::special_fn::{upsilon, UpsilonConfig};
use liouville::sphere_geom::*;
use liouville::wrong_sign::*;
use liouville::Error;
use num_complex::Complex64;
use serde_json::{json, Value};
use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "liouville", version, about = "Timelike Liouville numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Random seed for every Monte Carlo estimate
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; changes wall time only, never results
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Write the document here instead of standard output
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Υ_b(z)
    Upsilon {
        #[arg(long)]
        b: f64,
        /// complex as re or re:im
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Timelike DOZZ structure constant
    Dozz {
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// three charges, comma separated, each re or re:im
        #[arg(long, allow_hyphen_values = true)]
        alphas: String,
    },
    /// k-point function by Monte Carlo
    Kpoint {
        #[arg(long, value_enum, default_value_t = FrameArg::Plane)]
        frame: FrameArg,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// charges, comma separated
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        /// plane positions re:im, comma separated (mapped to the sphere for --frame sphere)
        #[arg(long, allow_hyphen_values = true)]
        pos: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Complex Selberg integral: Monte Carlo against the closed form
    SelbergCheck {
        #[arg(long)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha1: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha2: f64,
        #[arg(long)]
        w: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Möbius covariance residual
    Sl2cCheck {
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, allow_hyphen_values = true)]
        alphas: String,
        #[arg(long, allow_hyphen_values = true)]
        pos: String,
        /// a,b,c,d of z ↦ (az+b)/(cz+d), each re or re:im
        #[arg(long, allow_hyphen_values = true)]
        map: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Closed)]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Pole scan over an (α₁, α₂) grid, CSV alpha1,alpha2,alpha3,flag
    Poles {
        #[arg(long)]
        b: f64,
        #[arg(long)]
        w: u32,
        /// a1min,a1max,n1,a2min,a2max,n2
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Heavy-operator variational problem
    Semiclassical(SemiArgs),
    /// Naive continuation against the wrong-sign expectation
    WrongSignDemo,
    /// Backward heat flow E h(x + i√(2t) W)
    BackwardHeat {
        #[arg(long, value_enum)]
        h: HeatFn,
        /// frequency c for exp(cx) and cos(cx)
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        c: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Terms of the regularized correlation series
    RegularizedSeries {
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, allow_hyphen_values = true)]
        alphas: String,
        #[arg(long, allow_hyphen_values = true)]
        pos: String,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 200)]
        cutoff: usize,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

#[derive(Args, Debug)]
struct SemiArgs {
    /// reduced charges α̃_j, comma separated
    #[arg(long, allow_hyphen_values = true)]
    alphas: String,
    /// insertion points lat:lon in radians, comma separated
    #[arg(long, allow_hyphen_values = true)]
    points: String,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// mesh resolution; π/eps must be an even integer
    #[arg(long, default_value_t = std::f64::consts::PI / 32.0)]
    eps: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// per-cell CSV of ρ̂ and ψ̂
    #[arg(long)]
    csv: Option<std::path::PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FrameArg {
    Plane,
    Sphere,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Closed,
    Mc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HeatFn {
    Square,
    Cube,
    Exp,
    Cos,
}

enum Output {
    Json(Value),
    Csv(String),
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn parse_complex(s: &str) -> Result<Complex64, Error> {
    let s = s.trim();
    let (re, im) = match s.split_once(':') {
        Some((a, b)) => (a, b),
        None => (s, "0"),
    };
    let p = |x: &str| x.trim().parse::<f64>().map_err(|_| invalid(format!("cannot parse number '{x}'")));
    Ok(Complex64::new(p(re)?, p(im)?))
}

fn parse_list(s: &str) -> Result<Vec<Complex64>, Error> {
    s.split(',').map(parse_complex).collect()
}

fn parse_reals(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| invalid(format!("cannot parse number '{x}'")))).collect()
}

fn three<T: Copy>(v: &[T], what: &str) -> Result<[T; 3], Error> {
    v.try_into().map_err(|_| invalid(format!("{what} needs exactly three entries")))
}

fn cx(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn cxs(v: &[Complex64]) -> Value {
    Value::Array(v.iter().map(|z| cx(*z)).collect())
}

fn estimate(e: &CorrelationEstimate) -> (Value, Value) {
    (
        json!({"mean": cx(e.mean), "stderr": e.stderr, "n_samples": e.n_samples, "prefactor_log": cx(e.prefactor_log)}),
        json!({
            "max_weight_ratio": e.max_weight_ratio,
            "delta_moment": e.delta_moment,
            "heavy_tail_warning": e.heavy_tail_warning,
            "statistical_failure": e.statistical_failure,
        }),
    )
}

fn doc(command: &str, inputs: Value, results: Value, diagnostics: Value) -> Output {
    Output::Json(json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "results": results,
        "diagnostics": diagnostics,
    }))
}

fn run(cli: &Cli) -> Result<Output, Error> {
    let mc = |samples: usize| McConfig::new(samples, cli.seed, cli.workers);
    match &cli.command {
        Command::Upsilon { b, z } => {
            let z = parse_complex(z)?;
            if !(*b > 0.0 && *b <= 1.0) {
                return Err(invalid("b must lie in (0, 1]"));
            }
            let q = b + 1.0 / b;
            let canon = if z.re < q / 2.0 { q - z } else { z };
            let v = upsilon(*b, z, &UpsilonConfig::default())?;
            Ok(doc(
                "upsilon",
                json!({"b": b, "z": cx(z)}),
                json!({"value": cx(v), "z_canonical": cx(canon)}),
                json!({}),
            ))
        }
        Command::Dozz { b, mu, alphas } => {
            let p = LiouvilleParams::new(*b, *mu)?;
            let al = three(&parse_list(alphas)?, "--alphas")?;
            let sc = structure_constant(&p, al, &UpsilonConfig::default())?;
            Ok(doc(
                "dozz",
                json!({"b": b, "mu": mu, "alphas": cxs(&al)}),
                json!({"value": cx(sc.value), "log_value": cx(sc.log_value), "w": sc.w}),
                json!({"factors": serde_json::to_value(sc.factors).unwrap()}),
            ))
        }
        Command::Kpoint { frame, b, mu, alpha, pos, samples } => {
            let p = LiouvilleParams::new(*b, *mu)?;
            let al = parse_list(alpha)?;
            let zs = parse_list(pos)?;
            let ins = InsertionSet::plane(&zs, &al)?;
            let e = match frame {
                FrameArg::Plane => kpoint_plane(&p, &ins, &mc(*samples)?)?,
                FrameArg::Sphere => kpoint_sphere(&p, &ins.to_sphere()?, &mc(*samples)?)?,
            };
            let w = neutrality(&p, &ins).w_int;
            let (mut res, diag) = estimate(&e);
            res["w"] = json!(w);
            let frame = match frame {
                FrameArg::Plane => "plane",
                FrameArg::Sphere => "sphere",
            };
            Ok(doc(
                "kpoint",
                json!({"frame": frame, "b": b, "mu": mu, "alphas": cxs(&al), "positions": cxs(&zs), "samples": samples, "seed": cli.seed}),
                res,
                diag,
            ))
        }
        Command::SelbergCheck { b, alpha1, alpha2, w, samples } => {
            let e = selberg_complex(*b, *alpha1, *alpha2, *w, &mc(*samples)?)?;
            let a3 = b - 1.0 / b - alpha1 - alpha2 - b * *w as f64;
            let c = |x: f64| Complex64::new(x, 0.0);
            let closed = selberg_closed_form(*b, c(*alpha1), c(*alpha2), c(a3), *w)?;
            let sigmas = (e.mean - closed).norm() / e.stderr;
            let (_, diag) = estimate(&e);
            Ok(doc(
                "selberg-check",
                json!({"b": b, "alpha1": alpha1, "alpha2": alpha2, "w": w, "samples": samples, "seed": cli.seed}),
                json!({"mc": cx(e.mean), "stderr": e.stderr, "closed_form": cx(closed), "sigmas": sigmas}),
                diag,
            ))
        }
        Command::Sl2cCheck { b, mu, alphas, pos, map, mode, samples } => {
            let p = LiouvilleParams::new(*b, *mu)?;
            let al = parse_list(alphas)?;
            let zs = parse_list(pos)?;
            let m = parse_list(map)?;
            if m.len() != 4 {
                return Err(invalid("--map needs a,b,c,d"));
            }
            let f = MobiusMap::new(m[0], m[1], m[2], m[3])?;
            let (mode_v, mode_name) = match mode {
                ModeArg::Closed => (Sl2cMode::ClosedForm(UpsilonConfig::default()), "closed"),
                ModeArg::Mc => (Sl2cMode::MonteCarlo(mc(*samples)?), "mc"),
            };
            let r = sl2c_residual(&p, &al, &zs, &f, &mode_v)?;
            let unit = if mode_name == "closed" { "relative" } else { "sigmas" };
            Ok(doc(
                "sl2c-check",
                json!({"b": b, "mu": mu, "alphas": cxs(&al), "positions": cxs(&zs), "map": cxs(&m), "mode": mode_name, "samples": samples, "seed": cli.seed}),
                json!({"residual": r, "unit": unit}),
                json!({}),
            ))
        }
        Command::Poles { b, w, grid } => {
            let p = LiouvilleParams::new(*b, 1.0)?;
            let g = parse_reals(grid)?;
            if g.len() != 6 || g[2] < 0.0 || g[5] < 0.0 || g[2].fract() != 0.0 || g[5].fract() != 0.0 {
                return Err(invalid("--grid needs a1min,a1max,n1,a2min,a2max,n2 with integer counts"));
            }
            let grid = ScanGrid {
                alpha1_min: g[0],
                alpha1_max: g[1],
                n1: g[2] as usize,
                alpha2_min: g[3],
                alpha2_max: g[4],
                n2: g[5] as usize,
            };
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["alpha1", "alpha2", "alpha3", "flag"]).unwrap();
            for (a1, a2) in grid.points() {
                let a3 = p.q - a1 - a2 - b * *w as f64;
                let flag = pole_condition(&p, *w, a1, a2).is_some() as u8;
                wtr.serialize((a1, a2, a3, flag)).unwrap();
            }
            Ok(Output::Csv(String::from_utf8(wtr.into_inner().unwrap()).unwrap()))
        }
        Command::Semiclassical(a) => semiclassical(a),
        Command::WrongSignDemo => {
            let d = naive_vs_correct_demo()?;
            let toy = expect_wrong_sign(
                &AnalyticFn::univariate(|z| (-z.exp() - (-z).exp()).exp()),
                &QuadratureSpec::default_for(1),
            )?;
            Ok(doc(
                "wrong-sign-demo",
                json!({}),
                json!({"naive": cx(d.naive), "correct": cx(d.correct), "toy_quadrature": cx(toy), "toy_series": toy_series()}),
                json!({}),
            ))
        }
        Command::BackwardHeat { h, c, t, x } => {
            let c = *c;
            let (f, exact, name): (AnalyticFn, Box<dyn Fn(f64, f64) -> f64>, _) = match h {
                HeatFn::Square => (AnalyticFn::univariate(|z| z * z), Box::new(|t, x| x * x - 2.0 * t), "x^2"),
                HeatFn::Cube => (AnalyticFn::univariate(|z| z * z * z), Box::new(|t, x| x * x * x - 6.0 * t * x), "x^3"),
                HeatFn::Exp => (
                    AnalyticFn::univariate(move |z| (c * z).exp()),
                    Box::new(move |t, x| (c * x - c * c * t).exp()),
                    "exp(cx)",
                ),
                HeatFn::Cos => (
                    AnalyticFn::univariate(move |z| (c * z).cos()),
                    Box::new(move |t: f64, x: f64| (c * c * t).exp() * (c * x).cos()),
                    "cos(cx)",
                ),
            };
            let v = backward_heat(&f, *t, &[*x], &QuadratureSpec::default_for(1))?;
            Ok(doc(
                "backward-heat",
                json!({"h": name, "c": c, "t": t, "x": x}),
                json!({"value": cx(v), "closed_form": exact(*t, *x)}),
                json!({}),
            ))
        }
        Command::RegularizedSeries { b, mu, alphas, pos, lambda, cutoff, epsilon, n_max, samples } => {
            let p = LiouvilleParams::new(*b, *mu)?;
            let al = parse_list(alphas)?;
            let zs = parse_list(pos)?;
            let ins = InsertionSet::plane(&zs, &al)?;
            let cfg = RegularizationConfig::new(*lambda, *cutoff, *epsilon)?;
            let terms = regularized_series(&p, &ins, &cfg, *n_max, &mc(*samples)?)?;
            let list: Vec<Value> = terms
                .iter()
                .enumerate()
                .map(|(n, t)| json!({"n": n, "mean": cx(t.mean), "stderr": t.stderr, "prefactor_log": cx(t.prefactor_log)}))
                .collect();
            let sum: Complex64 = terms.iter().map(|t| t.mean).sum();
            let w = neutrality(&p, &ins).w_exact;
            Ok(doc(
                "regularized-series",
                json!({"b": b, "mu": mu, "alphas": cxs(&al), "positions": cxs(&zs), "lambda": lambda, "cutoff": cutoff, "epsilon": epsilon, "n_max": n_max, "samples": samples, "seed": cli.seed}),
                json!({"terms": list, "partial_sum": cx(sum)}),
                json!({"w": cx(w)}),
            ))
        }
    }
}

fn semiclassical(a: &SemiArgs) -> Result<Output, Error> {
    let alphas = parse_reals(&a.alphas)?;
    let pts: Vec<SpherePoint> = parse_list(&a.points)?.iter().map(|z| SpherePoint::from_lat_lon(z.re, z.im)).collect();
    let problem = SemiclassicalProblem::new(alphas.clone(), pts, a.mu)?;
    let mesh = Arc::new(build_trapezoid_mesh(a.eps)?);
    let r = minimize_s(&problem, mesh.clone(), a.damping, a.max_iter)?;
    let psi = psi_hat(&problem, &r)?;
    let lim = limit_value(&problem, &r)?;
    let mean = psi_hat_mean(&psi, &mesh);
    let c0 = Complex64::new(
        -0.5 * r.multiplier_lambda + 0.5 * problem.beta.ln() - 0.5 * problem.mu_tilde.ln(),
        std::f64::consts::FRAC_PI_2,
    );
    let tests = [LegendreField::constant()]
        .into_iter()
        .chain(problem.points.iter().flat_map(|x| (1..=2).map(move |l| LegendreField { degree: l, axis: *x })))
        .collect::<Vec<_>>();
    let weak = weak_form_residuals(&problem, &r, &tests, false)?;
    let negative = weak_form_residuals(&problem, &r, &tests[..1], true)?[0];
    if let Some(path) = &a.csv {
        let mut wtr = csv::Writer::from_path(path).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
        wtr.write_record(["x", "y", "z", "area", "rho_hat", "psi_re", "psi_im"]).unwrap();
        for (m, cell) in mesh.cells.iter().enumerate() {
            let [x, y, z] = cell.center.coords;
            wtr.serialize((x, y, z, cell.area, r.rho_hat.values[m], psi[m].re, psi[m].im))
                .map_err(|e| invalid(e.to_string()))?;
        }
        wtr.flush().map_err(|e| invalid(e.to_string()))?;
    }
    let points: Vec<Value> = problem.points.iter().map(|x| json!(x.lat_lon())).collect();
    Ok(doc(
        "semiclassical",
        json!({"alphas_tilde": alphas, "points_lat_lon": points, "mu_tilde": a.mu, "eps": a.eps, "max_iter": a.max_iter, "damping": a.damping}),
        json!({
            "beta": problem.beta,
            "s_value": r.s_value,
            "multiplier_lambda": r.multiplier_lambda,
            "limit_value": cx(lim),
            "psi_hat_mean": cx(mean),
        }),
        json!({
            "cells": mesh.len(),
            "iterations": r.iterations,
            "fixed_point_residual": r.fixed_point_residual,
            "density_identity_error": hatrho_identity_error(&problem, &r)?,
            "zero_mode_error": (mean - c0).norm(),
            "weak_form_residuals": weak,
            "weak_form_without_imaginary_part": negative,
            "csv": a.csv.as_ref().map(|p| p.display().to_string()),
        }),
    ))
}

fn emit(out: &Option<std::path::PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn error_doc(kind: &str, detail: &str) -> String {
    let mut s = serde_json::to_string_pretty(&json!({"error": {"kind": kind, "detail": detail}})).unwrap();
    s.push('\n');
    s
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            print!("{}", error_doc("UsageError", &e.kind().to_string()));
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let (text, code) = match run(&cli) {
        Ok(Output::Json(v)) => {
            let mut s = serde_json::to_string_pretty(&v).unwrap();
            s.push('\n');
            (s, 0)
        }
        Ok(Output::Csv(s)) => (s, 0),
        Err(e) => (error_doc(e.kind(), &e.to_string()), if e.is_validation() { 2 } else { 3 }),
    };
    if let Err(e) = emit(&cli.output, &text) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
