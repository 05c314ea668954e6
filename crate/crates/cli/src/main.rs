//! Command line interface for the exactness engine.
//!
//! Three subcommands: `check` reports the six exactness conditions,
//! `reduce` searches for product-form integrating factors and builds the
//! first integral, `verify` applies a user-supplied factor and re-checks.
//!
//! Exit codes: 0 success with a result, 1 no factor found, 2 input error,
//! 3 sampling failure.

mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use exact3::exactness::{
    check_exact, first_integral, verify_first_integral, BasePoint, Equation, FirstIntegral,
    FirstIntegralError,
};
use exact3::expr::{is_zero, parse, simplify};
use exact3::mu_search::{apply_mu, search, Certificate, XiForm};
use exact3::{Expr, Rat, Sampler};

use report::{
    conditions_json, factor_json, first_integral_json, print_conditions, print_equation,
    print_factors, print_first_integral, FactorJson, Report,
};

const EXIT_OK: u8 = 0;
const EXIT_NO_FACTOR: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SAMPLING: u8 = 3;

#[derive(Parser)]
#[command(
    name = "exact3",
    about = "Exactness, integrating factors, and first integrals of third-order ODEs \
             F3*y''' + F2*y'' + F1*y' + F0 = 0",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the six exactness conditions.
    Check(CommonArgs),
    /// Find product-form integrating factors and the first integral.
    Reduce(ReduceArgs),
    /// Multiply by a given factor and re-check exactness and the integral.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Coefficient of y''' (expression over t, y, y', y'').
    #[arg(long, allow_hyphen_values = true)]
    f3: Option<String>,
    /// Coefficient of y''.
    #[arg(long, allow_hyphen_values = true)]
    f2: Option<String>,
    /// Coefficient of y'.
    #[arg(long, allow_hyphen_values = true)]
    f1: Option<String>,
    /// Constant-term coefficient.
    #[arg(long, allow_hyphen_values = true)]
    f0: Option<String>,
    /// JSON file holding the same fields as the inline flags.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Base point "t0,y0,y1_0,y2_0" for the first integral (default 1,1,1,1).
    #[arg(long, allow_hyphen_values = true)]
    base: Option<String>,
    /// RNG seed for the sampler.
    #[arg(long)]
    seed: Option<u64>,
    /// Relative tolerance for numeric agreement.
    #[arg(long)]
    tol: Option<f64>,
    /// Emit the JSON report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Product-form ansatz to try first, e.g. "t*y'" or "t^2".
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Integrating factor to apply.
    #[arg(long, allow_hyphen_values = true)]
    mu: String,
}

/// Fields accepted in an `--input` file; inline flags take precedence.
#[derive(Deserialize, Default)]
struct InputFile {
    f3: Option<String>,
    f2: Option<String>,
    f1: Option<String>,
    f0: Option<String>,
    base: Option<String>,
    xi: Option<String>,
    seed: Option<u64>,
    tol: Option<f64>,
}

/// Resolved run configuration.
struct RunConfig {
    equation: Equation,
    base: BasePoint,
    sampler: Sampler,
    xi: Option<XiForm>,
    json: bool,
    seed: u64,
}

struct InputError(String);

impl<T: std::fmt::Display> From<T> for InputError {
    fn from(e: T) -> Self {
        InputError(e.to_string())
    }
}

fn main() -> ExitCode {
    // Die quietly when stdout is a closed pipe (e.g. piped into `head`)
    // instead of panicking mid-report.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = Cli::parse();
    let code = match cli.command {
        Command::Check(args) => run(args, None, None, run_check),
        Command::Reduce(args) => run(args.common, args.xi, None, run_reduce),
        Command::Verify(args) => run(args.common, None, Some(args.mu), run_verify),
    };
    ExitCode::from(code)
}

fn run(
    args: CommonArgs,
    xi: Option<String>,
    mu: Option<String>,
    body: fn(&RunConfig, Option<&Expr>) -> u8,
) -> u8 {
    let (config, mu_expr) = match configure(args, xi, mu) {
        Ok(pair) => pair,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_INPUT;
        }
    };
    body(&config, mu_expr.as_ref())
}

fn configure(
    args: CommonArgs,
    xi: Option<String>,
    mu: Option<String>,
) -> Result<(RunConfig, Option<Expr>), InputError> {
    let file: InputFile = match &args.input {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| InputError(format!("{}: {e}", path.display())))?
        }
        None => InputFile::default(),
    };

    let inline = [&args.f3, &args.f2, &args.f1, &args.f0];
    let any_inline = inline.iter().any(|c| c.is_some());
    if args.input.is_some() && any_inline {
        return Err(InputError(
            "pass the coefficients inline or via --input, not both".into(),
        ));
    }

    let coeff = |flag: &Option<String>, from_file: &Option<String>, name: &str| {
        flag.clone()
            .or_else(|| from_file.clone())
            .ok_or_else(|| InputError(format!("missing coefficient --{name}")))
    };
    let f3 = coeff(&args.f3, &file.f3, "f3")?;
    let f2 = coeff(&args.f2, &file.f2, "f2")?;
    let f1 = coeff(&args.f1, &file.f1, "f1")?;
    let f0 = coeff(&args.f0, &file.f0, "f0")?;

    let parse_named = |name: &str, text: &str| {
        parse(text).map_err(|e| InputError(format!("--{name} \"{text}\": {e}")))
    };

    let equation = Equation::new(
        parse_named("f3", &f3)?,
        parse_named("f2", &f2)?,
        parse_named("f1", &f1)?,
        parse_named("f0", &f0)?,
    )?;

    let base = match args.base.or(file.base) {
        Some(text) => parse_base(&text)?,
        None => BasePoint::ones(),
    };

    let seed = args.seed.or(file.seed).unwrap_or(42);
    let mut sampler = Sampler::with_seed(seed);
    if let Some(tol) = args.tol.or(file.tol) {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(InputError("--tol must be a positive finite number".into()));
        }
        sampler.tol = tol;
    }

    let xi = match xi.or(file.xi) {
        Some(text) => {
            let e = parse_named("xi", &text)?;
            Some(XiForm::from_expr(&e).map_err(|err| InputError(format!("--xi: {err}")))?)
        }
        None => None,
    };

    let mu_expr = match mu {
        Some(text) => {
            let e = parse_named("mu", &text)?;
            if is_zero(&e, &sampler).unwrap_or(false) {
                return Err(InputError("--mu must not be identically zero".into()));
            }
            Some(e)
        }
        None => None,
    };

    Ok((
        RunConfig {
            equation,
            base,
            sampler,
            xi,
            json: args.json,
            seed,
        },
        mu_expr,
    ))
}

fn parse_base(text: &str) -> Result<BasePoint, InputError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(InputError(format!(
            "--base expects four comma-separated rationals, got \"{text}\""
        )));
    }
    let mut values: Vec<Rat> = Vec::with_capacity(4);
    for part in parts {
        let e = parse(part).map_err(|e| InputError(format!("--base component \"{part}\": {e}")))?;
        match simplify(&e) {
            Expr::Const(c) => values.push(c),
            _ => {
                return Err(InputError(format!(
                    "--base component \"{part}\" is not a rational constant"
                )))
            }
        }
    }
    let y20 = values.pop().unwrap();
    let y10 = values.pop().unwrap();
    let y0 = values.pop().unwrap();
    let t0 = values.pop().unwrap();
    Ok(BasePoint::new(t0, y0, y10, y20))
}

fn emit(report: &Report) {
    println!("{}", serde_json::to_string(report).expect("report serializes"));
}

fn run_check(config: &RunConfig, _mu: Option<&Expr>) -> u8 {
    let report = match check_exact(&config.equation, &config.sampler) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SAMPLING;
        }
    };
    if config.json {
        emit(&Report {
            exact: report.is_exact(),
            conditions: conditions_json(&report),
            factors: Vec::new(),
            first_integral: None,
            verified: None,
            seed: config.seed,
        });
    } else {
        print_equation("equation", &config.equation);
        print_conditions(&report);
    }
    EXIT_OK
}

fn run_reduce(config: &RunConfig, _mu: Option<&Expr>) -> u8 {
    let original_report = match check_exact(&config.equation, &config.sampler) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SAMPLING;
        }
    };

    let factors = search(&config.equation, config.xi.as_ref(), &config.sampler);

    // First integral of the multiplied equation, using the best factor.
    let mut multiplied: Option<Equation> = None;
    let mut fi: Option<FirstIntegral> = None;
    if let Some(best) = factors.first() {
        let m = apply_mu(&config.equation, &best.mu);
        match first_integral(&m, &config.base) {
            Ok(found) => fi = Some(found),
            Err(FirstIntegralError::Sampling(e)) => {
                eprintln!("error: {e}");
                return EXIT_SAMPLING;
            }
            Err(e) => eprintln!("note: first integral unavailable: {e}"),
        }
        multiplied = Some(m);
    }

    if config.json {
        emit(&Report {
            exact: original_report.is_exact(),
            conditions: conditions_json(&original_report),
            factors: factors.iter().map(factor_json).collect(),
            first_integral: fi.as_ref().map(first_integral_json),
            verified: None,
            seed: config.seed,
        });
    } else {
        print_equation("equation", &config.equation);
        print_conditions(&original_report);
        print_factors(&factors);
        if let Some(m) = &multiplied {
            if !original_report.is_exact() {
                print_equation("multiplied equation", m);
            }
        }
        if let Some(fi) = &fi {
            print_first_integral(fi);
        }
    }

    if factors.is_empty() {
        EXIT_NO_FACTOR
    } else {
        EXIT_OK
    }
}

fn run_verify(config: &RunConfig, mu: Option<&Expr>) -> u8 {
    let mu = mu.expect("verify always carries a factor");
    let multiplied = apply_mu(&config.equation, mu);
    let report = match check_exact(&multiplied, &config.sampler) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SAMPLING;
        }
    };

    let mut fi: Option<FirstIntegral> = None;
    let mut verified = false;
    if report.is_exact() {
        match first_integral(&multiplied, &config.base) {
            Ok(found) => {
                match verify_first_integral(&multiplied, &found, &config.sampler) {
                    Ok(ok) => verified = ok,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_SAMPLING;
                    }
                }
                fi = Some(found);
            }
            Err(FirstIntegralError::Sampling(e)) => {
                eprintln!("error: {e}");
                return EXIT_SAMPLING;
            }
            Err(e) => eprintln!("note: first integral unavailable: {e}"),
        }
    }

    let factor_entry = report.is_exact().then(|| FactorJson {
        xi: None,
        mu: mu.to_string(),
        certificate: if report.is_symbolically_exact() {
            Certificate::Symbolic.label()
        } else {
            Certificate::Numeric.label()
        },
    });

    if config.json {
        emit(&Report {
            exact: report.is_exact(),
            conditions: conditions_json(&report),
            factors: factor_entry.into_iter().collect(),
            first_integral: fi.as_ref().map(first_integral_json),
            verified: Some(verified),
            seed: config.seed,
        });
    } else {
        print_equation("multiplied equation", &multiplied);
        print_conditions(&report);
        if let Some(fi) = &fi {
            print_first_integral(fi);
        }
        println!(
            "first integral verification: {}",
            if verified { "pass" } else { "FAIL" }
        );
    }
    EXIT_OK
}
