use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use incidence::flags::{default_limit, enumerate_scheme, Members, Point};
use incidence::harness::{self, Experiment, ExperimentConfig};
use incidence::polyio::parse_poly;
use incidence::schubert::predict;
use incidence::smoothness::{classify_all, classify_flag, ClassReport};
use incidence::{Error, FieldCtx, FieldElem, Flag, Multiplicity, MultiPoly, Result, Scheme};

/// Exit code for invalid input, I/O failures and usage errors.
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "incidence", version, about = "Point-line incidence schemes of hypersurfaces over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    #[value(alias = "X")]
    X,
    #[value(alias = "Y")]
    Y,
    #[value(alias = "Z")]
    Z,
}

#[derive(Subcommand)]
enum Command {
    /// Rational points of X_F, flags of Y_{F,m} or lines of Z_F.
    Enumerate {
        /// `p` or `p^k`; must match the polynomial file.
        #[arg(long)]
        field: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        poly: PathBuf,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Contact order for Y: an integer or `inf`.
        #[arg(long)]
        m: Option<Multiplicity>,
        /// Enumerate over GF(q^J).
        #[arg(long, default_value_t = 1)]
        ext_deg: u32,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Largest ambient point count to scan.
        #[arg(long, default_value_t = default_limit())]
        limit: u64,
    },
    /// Classify flags of Y_{F,m} as smooth, W^0 or W_2.
    #[command(group(ArgGroup::new("which").required(true).args(["all_flags", "flag"])))]
    Smooth {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long)]
        m: Multiplicity,
        #[arg(long)]
        all_flags: bool,
        /// `"p;v"` with whitespace-separated coordinates.
        #[arg(long)]
        flag: Option<String>,
        #[arg(long, default_value_t = default_limit())]
        limit: u64,
    },
    /// Expected dimension, count and degrees of Y_{F,m} from the Chow ring of the flag variety.
    Predict {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        m: Multiplicity,
    },
    /// Run an experiment; exit 0 = pass, 1 = a check failed, 2 = undecided.
    Verify {
        experiment: Experiment,
        /// JSON object overriding the experiment's preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-item records as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_poly(path: &Path) -> Result<MultiPoly> {
    parse_poly(&read(path)?)
}

fn elem(ctx: &FieldCtx, a: FieldElem) -> Value {
    if ctx.degree() == 1 {
        json!(a.index())
    } else {
        json!(ctx.format(a))
    }
}

fn point(ctx: &FieldCtx, p: &[FieldElem]) -> Value {
    Value::Array(p.iter().map(|&a| elem(ctx, a)).collect())
}

fn flag_json(ctx: &FieldCtx, fl: &Flag) -> Value {
    json!({ "p": point(ctx, fl.p()), "v": point(ctx, fl.v()) })
}

fn coords_text(ctx: &FieldCtx, p: &[FieldElem]) -> String {
    p.iter().map(|&a| ctx.format(a)).collect::<Vec<_>>().join(" ")
}

fn parse_coords(ctx: &FieldCtx, s: &str) -> Result<Point> {
    let words: Vec<&str> = if ctx.degree() == 1 {
        s.split(|c: char| c.is_whitespace() || c == ',').filter(|w| !w.is_empty()).collect()
    } else {
        s.split_whitespace().collect()
    };
    words.into_iter().map(|w| ctx.parse_elem(w)).collect()
}

fn parse_flag(ctx: &FieldCtx, n: usize, s: &str) -> Result<Flag> {
    let (p, v) = s.split_once(';').ok_or_else(|| Error::Parse(format!("flag {s:?} is not of the form \"p;v\"")))?;
    let (p, v) = (parse_coords(ctx, p)?, parse_coords(ctx, v)?);
    if p.len() != n + 1 {
        return Err(Error::Arity { expected: n + 1, got: p.len() });
    }
    Flag::new(ctx, &p, &v)
}

fn class_json(ctx: &FieldCtx, fl: &Flag, r: &ClassReport) -> Value {
    json!({
        "flag": flag_json(ctx, fl),
        "multiplicity": r.multiplicity,
        "rank": r.rank,
        "class": r.class,
        "a_m_zero": r.a_m_zero,
    })
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|_| out.flush());
}

fn print(v: &Value) {
    emit(&serde_json::to_string_pretty(v).expect("JSON serializes"));
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    field: &str,
    n: usize,
    poly: &Path,
    scheme: SchemeArg,
    m: Option<Multiplicity>,
    ext_deg: u32,
    csv_path: Option<&Path>,
    limit: u64,
) -> Result<()> {
    let start = Instant::now();
    let base = FieldCtx::parse_spec(field)?;
    let f = load_poly(poly)?;
    if f.ctx() != &base {
        return Err(Error::Inconsistent(format!("--field {field} but the polynomial is over {}", f.ctx().spec_string())));
    }
    if f.n() != n {
        return Err(Error::Inconsistent(format!("--n {n} but the polynomial has n = {}", f.n())));
    }
    let which = match (scheme, m) {
        (SchemeArg::X, None) => Scheme::X,
        (SchemeArg::Z, None) => Scheme::Z,
        (SchemeArg::Y, Some(m)) => {
            incidence::flags::check_order(m, f.d())?;
            Scheme::Y(m)
        }
        (SchemeArg::Y, None) => return Err(Error::Precondition("--scheme y needs --m".into())),
        (_, Some(_)) => return Err(Error::Precondition("--m only applies to --scheme y".into())),
    };
    let (ctx, _) = base.extension(ext_deg)?;
    let res = enumerate_scheme(&f, which, &ctx, limit)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let (key, members, header): (&str, Vec<Value>, Vec<&str>) = match &res.members {
        Members::Points(pts) => {
            rows.extend(pts.iter().map(|p| vec![coords_text(&ctx, p)]));
            ("points", pts.iter().map(|p| point(&ctx, p)).collect(), vec!["point"])
        }
        Members::Flags(fls) => {
            rows.extend(fls.iter().map(|fl| vec![coords_text(&ctx, fl.p()), coords_text(&ctx, fl.v())]));
            ("flags", fls.iter().map(|fl| flag_json(&ctx, fl)).collect(), vec!["p", "v"])
        }
        Members::Lines(lines) => {
            rows.extend(lines.iter().map(|l| l.basis().iter().map(|b| coords_text(&ctx, b)).collect()));
            ("lines", lines.iter().map(|l| Value::Array(l.basis().iter().map(|b| point(&ctx, b)).collect())).collect(), vec!["a", "b"])
        }
    };
    if let Some(path) = csv_path {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(&header).map_err(io)?;
        for r in &rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        write(path, &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    }
    let mut out = json!({
        "field": ctx.spec_string(),
        "n": n,
        "scheme": match which { Scheme::X => "X", Scheme::Y(_) => "Y", Scheme::Z => "Z" },
        "count": res.count,
        key: members,
        "runtime_ms": start.elapsed().as_millis() as u64,
    });
    if let Scheme::Y(m) = which {
        out["m"] = json!(m);
    }
    print(&out);
    Ok(())
}

fn smooth(poly: &Path, m: Multiplicity, flag: Option<&str>, limit: u64) -> Result<()> {
    let f = load_poly(poly)?;
    let ctx = f.ctx();
    match flag {
        Some(s) => {
            let fl = parse_flag(ctx, f.n(), s)?;
            let r = classify_flag(&f, &fl, m)?;
            print(&class_json(ctx, &fl, &r));
        }
        None => {
            let all = classify_all(&f, m, limit)?;
            let mut by_class = std::collections::BTreeMap::<String, u64>::new();
            for (_, r) in &all {
                *by_class.entry(json!(r.class).as_str().unwrap_or_default().to_string()).or_default() += 1;
            }
            let flags: Vec<Value> = all.iter().map(|(fl, r)| class_json(ctx, fl, r)).collect();
            print(&json!({ "m": m, "count": all.len(), "by_class": by_class, "flags": flags }));
        }
    }
    Ok(())
}

fn verify(
    experiment: Experiment,
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
    csv_path: Option<&Path>,
) -> Result<u8> {
    let start = Instant::now();
    let mut cfg = match config {
        Some(path) => {
            let v: Value = serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&v, Some(experiment))?
        }
        None => ExperimentConfig::preset(experiment),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = harness::run(&cfg)?;
    match out {
        Some(path) => write(path, &(report.to_json() + "\n"))?,
        None => emit(&report.to_json()),
    }
    if let Some(path) = csv_path {
        write(path, &report.records_csv()?)?;
    }
    eprintln!("{experiment}: {:?} in {} ms", report.outcome, start.elapsed().as_millis());
    Ok(report.outcome.exit_code() as u8)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Enumerate { field, n, poly, scheme, m, ext_deg, csv, limit } => {
            enumerate(&field, n, &poly, scheme, m, ext_deg, csv.as_deref(), limit).map(|_| 0)
        }
        Command::Smooth { poly, m, all_flags: _, flag, limit } => smooth(&poly, m, flag.as_deref(), limit).map(|_| 0),
        Command::Predict { n, d, m } => {
            print(&serde_json::to_value(predict(n, d, m)?).expect("prediction serializes"));
            Ok(0)
        }
        Command::Verify { experiment, config, seed, out, csv } => {
            verify(experiment, config.as_deref(), seed, out.as_deref(), csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
