//! Command-line front end. The binary only calls [`main`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_curve_json, parse_lambdas, seeded_curve, CurveDoc};
use crate::curve::ZnCurve;
use crate::error::{Error, Result};
use crate::kernel::{compare_szego, sample_pairs, KernelEngine};
use crate::partition::{mu, q_pair_closed, thomae_exponents, Partition, Q};
use crate::quadrature::QuadConfig;
use crate::report::{checks_csv, CheckLine, FayLine, PeriodReport, Provenance, ThomaeReport, VerifyDetails};
use crate::surface::{MarkedCurve, Settings};
use crate::thomae::{self, FdCheck};

#[derive(Parser, Debug)]
#[command(name = "zn-thomae", version, about = "Thomae formula and Szegő kernel checks for Z_N curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Period matrices, τ and diagnostics.
    Periods(CommonArgs),
    /// Thomae constants and every enabled identity check.
    Verify(CommonArgs),
    /// Exact exponent tables.
    Tables(CommonArgs),
    /// Analytic against algebraic Szegő kernel on sample pairs, with Fay residuals.
    Szego(CommonArgs),
    /// Finite-difference checks of dτ/dλ_i and of the λ-derivative of log θ[e_Λ](0).
    Variation(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// JSON file {"N": .., "lambdas": [[re, im], ..]}, or an inline list "re,im;re,im;..".
    #[arg(long)]
    pub lambdas: Option<String>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Partition such as "1,2|3,4|5,6" (1-based); repeatable. Default: the standard sample.
    #[arg(long)]
    pub partition: Vec<String>,
    #[arg(long, default_value_t = 1e-15)]
    pub tol_theta: f64,
    #[arg(long, default_value_t = 1e-13)]
    pub tol_quad: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_char: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_spread: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol_vanish: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub tol_control: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_szego: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_modulus: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_fay: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_fd: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol_exchange: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol_hyper: f64,
    /// "double"; extended precision is not available.
    #[arg(long, default_value = "double")]
    pub precision: String,
    /// JSON output path (stdout when absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV mirror path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Comma-separated subset of thomae,vanishing,szego,fay,variation,lambda,exchange,hyperelliptic.
    #[arg(long, value_delimiter = ',')]
    pub check: Vec<String>,
    /// Include the negative-control characteristic in the vanishing check.
    #[arg(long)]
    pub control: bool,
    /// Worker threads (0: rayon default).
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
    /// Sample pairs for the Szegő comparison.
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    /// Finite-difference step for the variation checks.
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
    /// 1-based branch points for the variation checks (default: first and last).
    #[arg(long, value_delimiter = ',')]
    pub branches: Vec<usize>,
}

pub const CHECKS: [&str; 8] = ["thomae", "vanishing", "szego", "fay", "variation", "lambda", "exchange", "hyperelliptic"];

impl CommonArgs {
    fn validate(&self) -> Result<()> {
        if self.precision != "double" {
            return Err(Error::Input(format!("precision '{}' is not supported; only 'double' is available", self.precision)));
        }
        let tols = [
            self.tol_theta, self.tol_quad, self.tol_char, self.tol_spread, self.tol_vanish, self.tol_control,
            self.tol_szego, self.tol_modulus, self.tol_fay, self.tol_fd, self.tol_exchange, self.tol_hyper, self.h,
        ];
        if tols.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Input("tolerances and steps must be positive".into()));
        }
        if let Some(bad) = self.check.iter().find(|c| !CHECKS.contains(&c.as_str())) {
            return Err(Error::Input(format!("unknown check '{bad}'; expected one of {}", CHECKS.join(","))));
        }
        Ok(())
    }

    fn enabled(&self, name: &str) -> bool {
        self.check.is_empty() || self.check.iter().any(|c| c == name)
    }

    fn settings(&self) -> Settings {
        let quad = QuadConfig { rel_tol: self.tol_quad, ..QuadConfig::default() };
        Settings { quad, theta_tol: self.tol_theta, char_tol: self.tol_char }
    }

    pub fn curve(&self) -> Result<ZnCurve> {
        match &self.lambdas {
            None => seeded_curve(self.n, self.m, self.seed),
            Some(src) => {
                let path = std::path::Path::new(src);
                if path.exists() {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{src}: {e}")))?;
                    parse_curve_json(&text)
                } else {
                    ZnCurve::new(self.n, parse_lambdas(src)?)
                }
            }
        }
    }

    fn partitions(&self, curve: &ZnCurve) -> Result<Vec<Partition>> {
        if self.partition.is_empty() {
            return Ok(thomae::standard_sample(curve.sheets(), curve.m()));
        }
        self.partition.iter().map(|s| s.parse()).collect()
    }

    fn provenance(&self, command: &str, curve: &ZnCurve) -> Provenance {
        Provenance {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            curve: CurveDoc::from_curve(curve),
            seed: self.lambdas.is_none().then_some(self.seed),
            tolerances: serde_json::json!({
                "theta": self.tol_theta, "quad": self.tol_quad, "char": self.tol_char,
                "spread": self.tol_spread, "vanish": self.tol_vanish, "control": self.tol_control,
                "szego": self.tol_szego, "modulus": self.tol_modulus, "fay": self.tol_fay,
                "fd": self.tol_fd, "fd_step": self.h, "exchange": self.tol_exchange, "hyperelliptic": self.tol_hyper,
            }),
        }
    }
}

/// Serialized output of one command and whether its gating checks passed.
pub struct Output {
    pub json: String,
    pub csv: Option<String>,
    pub pass: bool,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn fd_line(name: String, c: &FdCheck, tol: f64) -> CheckLine {
    CheckLine { name, value: c.error_h, tolerance: tol, pass: c.passes(tol), gating: true }
}

pub fn run_periods(args: &CommonArgs) -> Result<Output> {
    let curve = args.curve()?;
    let prov = args.provenance("periods", &curve);
    let mc = MarkedCurve::build(curve, args.settings())?;
    let rep = PeriodReport::new(&mc, prov);
    let pass = rep.symmetry_residual < 1e-8 && rep.re_tau_max_eigenvalue < 0.0;
    Ok(Output { json: to_json(&rep), csv: Some(rep.to_csv()), pass })
}

fn frac(q: Q) -> String {
    q.to_string()
}

#[derive(Serialize)]
struct TableReport {
    n: usize,
    mu: String,
    /// q(0, j) for j = 0..N-1.
    q0: Vec<String>,
    /// Power of (Λ_iΛ_j) in the Thomae formula for |i - j| = d, d = 0..N/2.
    block_powers: Vec<String>,
    theta_power: usize,
    det_power: usize,
    partition: String,
    /// e_ij = 2N q(k_i,k_j) + Nμ for i < j.
    exponents: Vec<(usize, usize, String)>,
}

pub fn run_tables(args: &CommonArgs) -> Result<Output> {
    let n = args.n;
    if n < 2 || args.m == 0 {
        return Err(Error::Input("tables need N ≥ 2 and m ≥ 1".into()));
    }
    let lambda = match args.partition.first() {
        Some(s) => s.parse()?,
        None => Partition::consecutive(n, args.m),
    };
    let ni = n as i64;
    let nq = Q::from_integer(ni);
    let table = thomae_exponents(&lambda);
    let mut exponents = Vec::new();
    for i in 0..table.e.len() {
        for j in i + 1..table.e.len() {
            exponents.push((i + 1, j + 1, frac(table.e[i][j])));
        }
    }
    let rep = TableReport {
        n,
        mu: frac(mu(n)),
        q0: (0..ni).map(|j| frac(q_pair_closed(n, 0, j))).collect(),
        block_powers: (0..=ni / 2).map(|d| frac(Q::from_integer(2) * nq * q_pair_closed(n, 0, d) + nq * mu(n))).collect(),
        theta_power: 2 * n,
        det_power: n,
        partition: lambda.to_string(),
        exponents,
    };
    Ok(Output { json: to_json(&rep), csv: Some(table.to_csv()), pass: true })
}

fn fay_lines(engine: &KernelEngine, e: &crate::theta::Characteristic, pairs: &[(crate::kernel::KernelPoint, crate::kernel::KernelPoint)]) -> Result<Vec<FayLine>> {
    pairs
        .iter()
        .map(|(x, y)| {
            let h = engine.default_step(x, y);
            Ok(FayLine {
                x: x.z(),
                y: y.z(),
                h,
                residual: engine.fay(x, y, e, h)?.residual,
                residual_2h: engine.fay(x, y, e, 2.0 * h)?.residual,
            })
        })
        .collect()
}

fn fay_checks(lines: &[FayLine], tol: f64) -> Vec<CheckLine> {
    let worst = lines.iter().map(|f| f.residual).fold(0.0, f64::max);
    let ratios: Vec<f64> = lines.iter().map(|f| f.residual_2h / f.residual).collect();
    let order_ok = ratios.iter().all(|r| *r > 2.5 && *r < 6.0);
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    vec![
        CheckLine::below("fay.residual", worst, tol),
        CheckLine { name: "fay.order_ratio".into(), value: mean, tolerance: 4.0, pass: order_ok, gating: true },
    ]
}

fn branch_list(args: &CommonArgs, curve: &ZnCurve) -> Result<Vec<usize>> {
    let count = curve.branch_count();
    if args.branches.is_empty() {
        return Ok(vec![0, count - 1]);
    }
    args.branches
        .iter()
        .map(|&b| if b >= 1 && b <= count { Ok(b - 1) } else { Err(Error::Input(format!("branch {b} out of range 1..={count}"))) })
        .collect()
}

pub fn run_verify(args: &CommonArgs) -> Result<Output> {
    let curve = args.curve()?;
    let prov = args.provenance("verify", &curve);
    let partitions = args.partitions(&curve)?;
    let mc = MarkedCurve::build(curve, args.settings())?;
    let n = mc.curve.sheets();
    let mut checks = Vec::new();
    let mut d = VerifyDetails::default();
    if args.enabled("thomae") {
        d.thomae = thomae::thomae_records(&mc, &partitions)?;
        let spread = thomae::c_spread(&d.thomae);
        d.c_spread = Some(spread);
        checks.push(CheckLine::below("thomae.c_spread", spread, args.tol_spread));
        let worst = d.thomae.iter().map(|r| r.char_residual).fold(0.0, f64::max);
        checks.push(CheckLine::below("thomae.char_residual", worst, args.tol_char));
    }
    if args.enabled("vanishing") {
        d.vanishing = partitions.iter().map(|p| thomae::check_derivative_vanishing(&mc, p)).collect::<Result<_>>()?;
        let worst = d.vanishing.iter().map(|v| v.ratio).fold(0.0, f64::max);
        checks.push(CheckLine::below("vanishing.ratio", worst, args.tol_vanish));
        if args.control {
            let r = thomae::gradient_ratio(&mc, &thomae::control_characteristic(mc.genus(), args.seed))?;
            d.control_ratio = Some(r);
            checks.push(CheckLine::above("vanishing.control_ratio", r, args.tol_control));
        }
    }
    if args.enabled("szego") || args.enabled("fay") {
        let engine = KernelEngine::new(&mc)?;
        let pairs = sample_pairs(&engine, args.pairs, args.seed)?;
        if args.enabled("szego") {
            let cmp = compare_szego(&engine, &partitions[0], &pairs)?;
            checks.push(CheckLine::below("szego.deviation", cmp.max_deviation, args.tol_szego));
            checks.push(CheckLine::below("szego.modulus", cmp.max_modulus_deviation, args.tol_modulus));
            d.szego = Some(cmp);
        }
        if args.enabled("fay") {
            let e = mc.e_lambda(&partitions[0])?.rounded;
            d.fay = fay_lines(&engine, &e, &pairs[..pairs.len().min(3)])?;
            checks.extend(fay_checks(&d.fay, args.tol_fay));
        }
    }
    let branches = branch_list(args, &mc.curve)?;
    if args.enabled("variation") {
        for &i in &branches {
            let c = thomae::check_variation(&mc, i, args.h)?;
            checks.push(fd_line(format!("variation.branch{}", i + 1), &c, args.tol_fd));
            d.variation.push(c);
        }
    }
    if args.enabled("lambda") {
        for &i in &branches {
            let c = thomae::check_lambda_derivative(&mc, &partitions[0], i, args.h)?;
            checks.push(fd_line(format!("lambda.branch{}", i + 1), &c, args.tol_fd));
            d.lambda_derivative.push(c);
        }
    }
    if args.enabled("exchange") {
        d.exchange = partitions.iter().map(|p| thomae::check_exchange_ratio(&mc, p)).collect::<Result<_>>()?;
        let worst = d.exchange.iter().map(|x| x.deviation).fold(0.0, f64::max);
        checks.push(CheckLine::below("exchange.deviation", worst, args.tol_exchange));
    }
    if args.enabled("hyperelliptic") && n == 2 {
        let h = thomae::hyperelliptic_constant(&mc, &partitions[0])?;
        checks.push(CheckLine::below("hyperelliptic.abs_c_sq", h.deviation, args.tol_hyper).informational());
        d.hyperelliptic = Some(h);
    }
    let rep = ThomaeReport::new(&mc, prov, checks, d);
    let csv = format!("{}\n{}", checks_csv(&rep.checks), rep.to_csv());
    Ok(Output { json: to_json(&rep), csv: Some(csv), pass: rep.pass })
}

#[derive(Serialize)]
struct SzegoReport {
    provenance: Provenance,
    comparison: crate::kernel::SzegoComparison,
    fay: Vec<FayLine>,
    checks: Vec<CheckLine>,
}

pub fn run_szego(args: &CommonArgs) -> Result<Output> {
    let curve = args.curve()?;
    let prov = args.provenance("szego", &curve);
    let partitions = args.partitions(&curve)?;
    let mc = MarkedCurve::build(curve, args.settings())?;
    let engine = KernelEngine::new(&mc)?;
    let pairs = sample_pairs(&engine, args.pairs, args.seed)?;
    let comparison = compare_szego(&engine, &partitions[0], &pairs)?;
    let e = mc.e_lambda(&partitions[0])?.rounded;
    let fay = fay_lines(&engine, &e, &pairs)?;
    let mut checks = vec![
        CheckLine::below("szego.deviation", comparison.max_deviation, args.tol_szego),
        CheckLine::below("szego.modulus", comparison.max_modulus_deviation, args.tol_modulus),
    ];
    checks.extend(fay_checks(&fay, args.tol_fay));
    let mut csv = String::from("x_re,x_im,y_re,y_im,abs_r,abs_f,deviation,fay_residual\n");
    for (s, f) in comparison.samples.iter().zip(&fay) {
        csv.push_str(&format!("{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n", s.x[0], s.x[1], s.y[0], s.y[1], s.r_abs, s.f_abs, s.deviation, f.residual));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(Output { json: to_json(&SzegoReport { provenance: prov, comparison, fay, checks }), csv: Some(csv), pass })
}

#[derive(Serialize)]
struct VariationReport {
    provenance: Provenance,
    variation: Vec<FdCheck>,
    lambda_derivative: Vec<FdCheck>,
    checks: Vec<CheckLine>,
}

pub fn run_variation(args: &CommonArgs) -> Result<Output> {
    let curve = args.curve()?;
    let prov = args.provenance("variation", &curve);
    let partitions = args.partitions(&curve)?;
    let mc = MarkedCurve::build(curve, args.settings())?;
    let branches = branch_list(args, &mc.curve)?;
    let mut checks = Vec::new();
    let mut variation = Vec::new();
    let mut lambda_derivative = Vec::new();
    for &i in &branches {
        let v = thomae::check_variation(&mc, i, args.h)?;
        checks.push(fd_line(format!("variation.branch{}", i + 1), &v, args.tol_fd));
        variation.push(v);
        let l = thomae::check_lambda_derivative(&mc, &partitions[0], i, args.h)?;
        checks.push(fd_line(format!("lambda.branch{}", i + 1), &l, args.tol_fd));
        lambda_derivative.push(l);
    }
    let pass = checks.iter().all(|c| c.pass);
    let csv = checks_csv(&checks);
    Ok(Output { json: to_json(&VariationReport { provenance: prov, variation, lambda_derivative, checks }), csv: Some(csv), pass })
}

pub fn run(cli: &Cli) -> Result<Output> {
    let (args, f): (&CommonArgs, fn(&CommonArgs) -> Result<Output>) = match &cli.command {
        Command::Periods(a) => (a, run_periods),
        Command::Verify(a) => (a, run_verify),
        Command::Tables(a) => (a, run_tables),
        Command::Szego(a) => (a, run_szego),
        Command::Variation(a) => (a, run_variation),
    };
    args.validate()?;
    if args.parallel > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.parallel)
            .build()
            .map_err(|e| Error::Input(format!("--parallel: {e}")))?;
        return pool.install(|| f(args));
    }
    f(args)
}

fn write_out(path: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Exit codes: 0 pass, 1 check failure, 2 input error, 3 numerical failure.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Periods(a) | Command::Verify(a) | Command::Tables(a) | Command::Szego(a) | Command::Variation(a) => a.clone(),
    };
    let started = std::time::Instant::now();
    match run(&cli) {
        Ok(out) => {
            eprintln!("runtime {:.2} s", started.elapsed().as_secs_f64());
            if let Err(e) = write_out(&args.report, &out.json) {
                eprintln!("error: writing report: {e}");
                return ExitCode::from(2);
            }
            if let (Some(path), Some(csv)) = (&args.csv, &out.csv) {
                if let Err(e) = std::fs::write(path, csv) {
                    eprintln!("error: writing CSV: {e}");
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(if out.pass { 0 } else { 1 })
        }
        Err(e) => {
            let kind = if e.is_input() { "input" } else { "numerical" };
            let doc = serde_json::json!({ "error": kind, "message": e.to_string() });
            eprintln!("error: {e}");
            let _ = write_out(&args.report, &to_json(&doc));
            ExitCode::from(if e.is_input() { 2 } else { 3 })
        }
    }
}
