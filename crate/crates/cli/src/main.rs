use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use solenoid::dirac::{
    assembled_cover_spectrum, circle_spectrum, cn_norms, crossed_spectrum, radii_divergence, torus_spectrum,
    RadiiModel, SpectrumMultiset, UhfModel,
};
use solenoid::intlat::{self, IntMatrix, Rational};
use solenoid::lattice::{enumerate_quotient, schur_orthogonality_check, smith_order, Covering};
use solenoid::nctorus::{NcCovering, RationalAngle};
use solenoid::spectral::{self, ZetaForm};
use solenoid::{Error, Result};

const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "solenoid", version, about = "Deck groups, covering algebras and Dirac spectra of solenoidal towers")]
struct Cli {
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SpectrumModel {
    Torus,
    Assembled,
    Crossed,
    Uhf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RadiiKind {
    Torus,
    Crossed,
    Nctorus,
    Uhf,
}

#[derive(clap::Args, Debug, Clone)]
struct SpectrumArgs {
    #[arg(long, value_enum, default_value_t = SpectrumModel::Torus)]
    model: SpectrumModel,
    /// Covering matrix, rows separated by `;`.
    #[arg(long, default_value = "2,0;0,2")]
    matrix: String,
    #[arg(long, default_value_t = 0)]
    level: u32,
    #[arg(long, default_value_t = 40.0)]
    cutoff: f64,
    /// UHF branching.
    #[arg(long, default_value_t = 2)]
    r: u64,
    /// UHF exponent.
    #[arg(long, default_value = "1")]
    s: String,
    /// UHF truncation depth above the level.
    #[arg(long, default_value_t = 20)]
    kmax: u32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smith form, determinant, cofactor, A and the expansion report.
    Analyze {
        #[arg(long)]
        matrix: String,
        /// Levels of the C_n table (purely expanding matrices only).
        #[arg(long, default_value_t = 6)]
        levels: u32,
    },
    /// Deck group, dual representatives and Schur orthogonality.
    Group {
        #[arg(long)]
        matrix: String,
    },
    /// Weighted Dirac spectrum.
    Spectrum {
        #[command(flatten)]
        args: SpectrumArgs,
        /// Compare the assembled and lattice spectra; exit 2 on mismatch.
        #[arg(long)]
        check_equivalence: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Truncated zeta values and the dimension fit.
    Zeta {
        #[command(flatten)]
        args: SpectrumArgs,
        /// Comma-separated exponents.
        #[arg(long, default_value = "2.5,3,4")]
        at: String,
    },
    /// Quotient norms of the normalized monomials y_k.
    Radii {
        #[arg(long, value_enum)]
        model: RadiiKind,
        #[arg(long, default_value = "2,0;0,2")]
        matrix: String,
        #[arg(long, default_value_t = 10)]
        kmax: u32,
        #[arg(long, default_value = "1/3")]
        theta: String,
        #[arg(long, default_value_t = 2)]
        r: u64,
        #[arg(long, default_value = "1")]
        s: String,
        #[arg(long, default_value_t = 2)]
        depth: u32,
    },
    /// Rational rotation algebra checks.
    Nctorus {
        #[command(subcommand)]
        action: NcAction,
    },
    /// UHF abscissa, residues and zeta values per level.
    Uhf {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        s: String,
        /// Comma-separated levels.
        #[arg(long, default_value = "0")]
        levels: String,
        /// Add closed-form zeta values on a grid above the abscissa.
        #[arg(long)]
        zeta_grid: bool,
    },
    /// Perturbation and residue-stability lemmas.
    Appendix {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Dimension, residue and Dixmier summary of a spectrum.
    Report {
        #[command(flatten)]
        args: SpectrumArgs,
    },
}

#[derive(Subcommand, Debug)]
enum NcAction {
    Check {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        matrix: String,
    },
}

/// A command's output: JSON or raw text, plus whether its checks held.
struct Output {
    body: Body,
    ok: bool,
}

enum Body {
    Json(Value),
    Text(String),
}

fn json_out(command: &str, mut value: Value, ok: bool) -> Output {
    let obj = value.as_object_mut().expect("report is an object");
    obj.insert("schema".into(), json!(SCHEMA));
    obj.insert("command".into(), json!(command));
    Output { body: Body::Json(value), ok }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn parse_s(text: &str) -> Result<Rational> {
    intlat::parse_rational(text.trim())
        .ok_or_else(|| Error::Parse { position: 0, message: format!("not a rational number: {text:?}") })
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    let mut pos = 0;
    for part in text.split(',') {
        let v = part
            .trim()
            .parse()
            .map_err(|_| Error::Parse { position: pos, message: format!("bad list entry {part:?}") })?;
        out.push(v);
        pos += part.len() + 1;
    }
    Ok(out)
}

fn build_spectrum(a: &SpectrumArgs) -> Result<SpectrumMultiset> {
    match a.model {
        SpectrumModel::Uhf => UhfModel::new(a.r, parse_s(&a.s)?)?.spectrum(a.level, a.kmax),
        model => {
            let cov = Covering::new(&IntMatrix::parse(&a.matrix)?)?;
            match model {
                SpectrumModel::Torus => torus_spectrum(&cov, a.level, a.cutoff),
                SpectrumModel::Assembled => assembled_cover_spectrum(&cov, a.level, a.cutoff),
                _ => {
                    let base = if cov.dim() == 1 { circle_spectrum(a.cutoff)? } else { torus_spectrum(&cov, 0, a.cutoff)? };
                    crossed_spectrum(&base, &cov, a.level, a.cutoff)
                }
            }
        }
    }
}

fn analyze(matrix: &str, levels: u32) -> Result<Output> {
    let b = IntMatrix::parse(matrix)?;
    let snf = intlat::smith_normal_form(&b)?;
    let expansion = intlat::purely_expanding(&b)?;
    let cn = if expansion.purely_expanding && levels > 0 {
        to_value(&cn_norms(&Covering::new(&b)?, levels)?)
    } else {
        Value::Null
    };
    let order = smith_order(&snf);
    Ok(json_out(
        "analyze",
        json!({
            "matrix": b.to_string(),
            "det": b.det().to_string(),
            "smith": to_value(&snf),
            "factors": snf.factors().iter().map(|f| f.to_string()).collect::<Vec<_>>(),
            "order": order.to_string(),
            "cofactor": to_value(&intlat::cofactor_matrix(&b)),
            "a": to_value(&intlat::inverse_transpose(&b)?),
            "expansion": to_value(&expansion),
            "cn_norms": cn,
        }),
        true,
    ))
}

fn group(matrix: &str) -> Result<Output> {
    let b = IntMatrix::parse(matrix)?;
    let g = enumerate_quotient(&b)?;
    let schur = schur_orthogonality_check(&g);
    let ok = schur.is_ok();
    let failures: Vec<String> = schur.err().unwrap_or_default().iter().map(|x| x.to_string()).collect();
    let mut value = to_value(&g);
    value["matrix"] = json!(b.to_string());
    value["schur_orthogonality"] = json!(ok);
    value["schur_failures"] = json!(failures);
    Ok(json_out("group", value, ok))
}

fn spectrum(args: &SpectrumArgs, check: bool, format: Format) -> Result<Output> {
    if check {
        let cov = Covering::new(&IntMatrix::parse(&args.matrix)?)?;
        // returns InvariantViolation on a mismatch
        assembled_cover_spectrum(&cov, args.level, args.cutoff)?;
    }
    let spec = build_spectrum(args)?;
    Ok(match format {
        Format::Csv => Output { body: Body::Text(spec.to_csv()), ok: true },
        Format::Json => {
            let mut value = to_value(&spec);
            value["eigenvalue_count"] = json!(spec.count());
            value["total_weight"] = json!(spec.total_weight().to_string());
            if check {
                value["equivalence"] = json!("assembled and lattice spectra agree");
            }
            json_out("spectrum", value, true)
        }
    })
}

fn zeta(args: &SpectrumArgs, at: &str) -> Result<Output> {
    let spec = build_spectrum(args)?;
    let exps: Vec<f64> = parse_list(at)?;
    let rows: Vec<Value> = exps
        .iter()
        .map(|&s| {
            json!({
                "s": s,
                "abs_power": spectral::zeta_truncated(&spec, s, ZetaForm::AbsPower),
                "resolvent": spectral::zeta_truncated(&spec, s, ZetaForm::Resolvent),
            })
        })
        .collect();
    let fit = spectral::dimension_and_residue(&spec).ok().map(|f| to_value(&f));
    Ok(json_out("zeta", json!({ "model": spec.meta.model, "cutoff": spec.meta.cutoff, "values": rows, "fit": fit }), true))
}

fn e11(r: u64) -> DMatrix<Complex64> {
    let mut b = DMatrix::zeros(r as usize, r as usize);
    b[(0, 0)] = Complex64::new(1.0, 0.0);
    b
}

fn radii(kind: RadiiKind, matrix: &str, kmax: u32, theta: &str, r: u64, s: &str, depth: u32) -> Result<Output> {
    let model = match kind {
        RadiiKind::Torus => RadiiModel::Torus(IntMatrix::parse(matrix)?),
        RadiiKind::Crossed => RadiiModel::Crossed(IntMatrix::parse(matrix)?),
        RadiiKind::Nctorus => RadiiModel::NcTorus(IntMatrix::parse(matrix)?, RationalAngle::parse(theta)?),
        RadiiKind::Uhf => RadiiModel::Uhf { model: UhfModel::new(r, parse_s(s)?)?, b: e11(r), depth },
    };
    let table = radii_divergence(&model, kmax)?;
    Ok(json_out("radii", to_value(&table), true))
}

fn nctorus_check(theta: &str, matrix: &str) -> Result<Output> {
    let report = NcCovering::new(RationalAngle::parse(theta)?, &IntMatrix::parse(matrix)?)?.fixed_point_identities();
    let ok = report.all_hold;
    Ok(json_out("nctorus check", to_value(&report), ok))
}

fn uhf(r: u64, s: &str, levels: &str, grid: bool) -> Result<Output> {
    let model = UhfModel::new(r, parse_s(s)?)?;
    let levels: Vec<u32> = parse_list(levels)?;
    let abscissa = model.abscissa();
    let d = intlat::rat_to_f64(&abscissa);
    let mut rows = Vec::new();
    let mut ok = true;
    for &n in &levels {
        let stability = spectral::uhf_residue_stability(&model, n);
        ok &= stability.equal;
        let mut row = json!({ "level": n, "residue": to_value(&model.residue(n)), "stability": to_value(&stability) });
        if grid {
            let samples: Vec<Value> = spectral::default_grid()
                .iter()
                .map(|&h| json!({ "h": h, "t": d + h, "zeta": model.zeta_closed_form(n, d + h), "h_times_zeta": h * model.zeta_closed_form(n, d + h) }))
                .collect();
            row["zeta_grid"] = json!(samples);
        }
        rows.push(row);
    }
    let first = levels.first().map(|&n| model.residue(n).value);
    let residues_equal = ok && levels.iter().all(|&n| Some(model.residue(n).value) == first);
    Ok(json_out(
        "uhf",
        json!({ "r": r, "s": model.s.to_string(), "abscissa": abscissa.to_string(), "levels": rows, "residues_equal": residues_equal }),
        ok && residues_equal,
    ))
}

fn appendix(seed: u64, trials: usize) -> Result<Output> {
    let reports = spectral::random_perturbation_trials(seed, trials);
    let passed = reports.iter().filter(|r| r.passed).count();
    let cutoff = 2.0 * std::f64::consts::PI * 50.0;
    let cov = Covering::new(&IntMatrix::scalar(2, 2))?;
    let base = torus_spectrum(&cov, 0, cutoff)?;
    let cover = torus_spectrum(&cov, 2, cutoff)?;
    let torus = spectral::residue_stability_check(&base, &cover, 2.0, &spectral::default_grid())?;
    let model = UhfModel::new(2, Rational::from_integer(1.into()))?;
    let uhf: Vec<_> = (0..=3).map(|n| spectral::uhf_residue_stability(&model, n)).collect();
    let failures: Vec<&solenoid::spectral::PerturbationReport> = reports.iter().filter(|r| !r.passed).collect();
    let ok = passed == trials && torus.form_bound_holds && uhf.iter().all(|u| u.equal);
    Ok(json_out(
        "appendix",
        json!({
            "seed": seed,
            "perturbation": { "trials": trials, "passed": passed, "failures": to_value(&failures) },
            "torus_residue_stability": to_value(&torus),
            "uhf_residue_stability": to_value(&uhf),
        }),
        ok,
    ))
}

fn report(args: &SpectrumArgs) -> Result<Output> {
    let spec = build_spectrum(args)?;
    Ok(json_out("report", to_value(&spectral::report(&spec)?), true))
}

fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Analyze { matrix, levels } => analyze(matrix, *levels),
        Command::Group { matrix } => group(matrix),
        Command::Spectrum { args, check_equivalence, format } => spectrum(args, *check_equivalence, *format),
        Command::Zeta { args, at } => zeta(args, at),
        Command::Radii { model, matrix, kmax, theta, r, s, depth } => radii(*model, matrix, *kmax, theta, *r, s, *depth),
        Command::Nctorus { action: NcAction::Check { theta, matrix } } => nctorus_check(theta, matrix),
        Command::Uhf { r, s, levels, zeta_grid } => uhf(*r, s, levels, *zeta_grid),
        Command::Appendix { trials } => appendix(cli.seed, *trials),
        Command::Report { args } => report(args),
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let err = json!({ "schema": SCHEMA, "error": { "kind": kind, "message": message } });
    eprintln!("{}", serde_json::to_string(&err).expect("error serializes"));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 3),
    };
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            match &out.body {
                Body::Json(v) => writeln!(stdout, "{}", serde_json::to_string_pretty(v).expect("report serializes")),
                Body::Text(t) => write!(stdout, "{t}"),
            }
            .ok();
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e @ Error::InvariantViolation(_)) => fail(e.kind(), e.to_string(), 2),
        Err(e) => fail(e.kind(), e.to_string(), 3),
    }
}
