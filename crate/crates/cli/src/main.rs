use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use unisum::coupling::{
    monte_carlo_ks, sample_triples, synthesize_biatomic, synthesize_for_target, synthesize_triatomic, verify_coupling,
    PiecewiseCoupling, Synthesis, TriAtomicParams, TriCase,
};
use unisum::oracle::{discretize, feasible, grid_extreme_prob, GridSpec, GridTarget, GridVerdict};
use unisum::{
    cdf_bounds, decide, max_closed_interval, min_open_interval, Direction, Error, MixtureDistribution, Rational, Sense,
    ShapeHint, Verdict,
};

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_NOINPUT: u8 = 66;
const EX_SOFTWARE: u8 = 70;
const EX_IOERR: u8 = 74;

/// Membership, couplings, bounds and a grid oracle for sums of uniforms.
///
/// Exit codes: 0 success or Member, 1 NonMember or a failed check,
/// 2 Unknown, 64 bad usage or malformed JSON, 65 invalid input data,
/// 66 unreadable input, 70 internal error, 74 write failure.
#[derive(Parser)]
#[command(name = "unisum", version)]
struct Cli {
    /// Seed for all sampling.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Print nothing; rely on the exit code and any output files.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a distribution is an achievable sum law.
    Check(CheckArgs),
    /// Build an explicit two-margin coupling for an atomic target.
    Synthesize(SynthesizeArgs),
    /// Sharp interval bounds (n >= 3) or tail bounds (n >= 2).
    Bounds(BoundsArgs),
    /// Exact grid feasibility or grid extreme probabilities.
    Oracle(OracleArgs),
    /// Check a coupling exactly, optionally with Monte Carlo.
    Verify(VerifyArgs),
    /// Stream samples `x y x+y` from a coupling, then a KS report.
    Sample(SampleArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Distribution JSON file.
    dist: PathBuf,
    #[arg(long)]
    n: u32,
    /// Declare a unimodal density with this mode.
    #[arg(long, value_name = "MODE", group = "shape")]
    assume_unimodal: Option<Rational>,
    /// Declare a monotone density.
    #[arg(long, value_enum, group = "shape")]
    assume_monotone: Option<MonotoneArg>,
    /// Declare a unimodal density symmetric about its mean.
    #[arg(long, group = "shape")]
    assume_symmetric: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MonotoneArg {
    Increasing,
    Decreasing,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Also write the unit-frame coupling to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    kind: SynthKind,
}

#[derive(Subcommand)]
enum SynthKind {
    /// Two atoms `{a, a + 1/b_inv}` with mean one.
    Biatomic {
        #[arg(long)]
        b_inv: u64,
        #[arg(long)]
        a: Rational,
    },
    /// Three atoms `{c - 2, c - 1, c}` in the frame `X ~ U[0, T]`, `Y ~ U[-T, 0]`.
    Triatomic {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        period: Rational,
        #[arg(long)]
        top: Rational,
        /// Mass of the middle atom; defaults to its smallest attainable value.
        #[arg(long)]
        middle: Option<Rational>,
    },
    /// Whatever construction fits a unit-frame distribution file.
    Target { dist: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    A,
    B,
    C,
}

#[derive(Clone, Copy, ValueEnum)]
enum SenseArg {
    Min,
    Max,
}

impl From<SenseArg> for Sense {
    fn from(s: SenseArg) -> Self {
        match s {
            SenseArg::Min => Sense::Minimize,
            SenseArg::Max => Sense::Maximize,
        }
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: u32,
    /// Left end of the interval.
    #[arg(long, requires = "b")]
    a: Option<Rational>,
    /// Interval length.
    #[arg(long, requires = "a")]
    b: Option<Rational>,
    /// Only the minimum over `(a, a+b)` or the maximum over `[a, a+b]`.
    #[arg(long, value_enum, requires = "a")]
    sense: Option<SenseArg>,
    /// Write the attaining distribution to this file.
    #[arg(long, requires = "sense")]
    emit_attaining: Option<PathBuf>,
    /// Upper bounds on `P(S <= x)` and `P(S >= x)` instead.
    #[arg(long, value_name = "X", conflicts_with = "a")]
    cdf_at: Option<Rational>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    m: usize,
    /// Grid target (`{"masses": [...]}`) or a distribution to discretize.
    #[arg(long, required_unless_present = "sense")]
    target: Option<PathBuf>,
    /// Optimize the probability of an index-sum range instead.
    #[arg(long, value_enum, requires = "range", conflicts_with = "target")]
    sense: Option<SenseArg>,
    /// Inclusive index-sum range `LO:HI`.
    #[arg(long, value_parser = parse_range)]
    range: Option<(usize, usize)>,
    /// Write the witness joint to this file.
    #[arg(long)]
    emit_witness: Option<PathBuf>,
    /// Lift the default size cap for three margins.
    #[arg(long)]
    uncapped: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Coupling JSON file.
    coupling: PathBuf,
    /// Target law; defaults to the one stored in the coupling.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Also run a Monte Carlo KS check with this many samples.
    #[arg(long, value_name = "N")]
    mc: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    /// Coupling JSON file.
    coupling: PathBuf,
    #[arg(long, short = 'N', default_value_t = 100_000)]
    samples: usize,
    /// Target law; defaults to the one stored in the coupling.
    #[arg(long)]
    target: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
    let lo = lo.trim().parse().map_err(|e| format!("bad LO `{lo}`: {e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("bad HI `{hi}`: {e}"))?;
    Ok((lo, hi))
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Json(_) | Error::InvalidParameter(_) | Error::Domain(_) | Error::WrongShape(_) => EX_USAGE,
            Error::InvalidDistribution(_)
            | Error::MeanMismatch(_)
            | Error::InvalidCoupling(_)
            | Error::DimensionMismatch(_) => EX_DATAERR,
            Error::Verification(_) => EX_SOFTWARE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EX_IOERR, e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

struct Output {
    json: bool,
    quiet: bool,
}

impl Output {
    fn emit<T: Serialize>(&self, value: &T, human: impl FnOnce() -> String) -> Result<(), Failure> {
        if self.quiet {
            return Ok(());
        }
        let text = if self.json {
            serde_json::to_string_pretty(value).map_err(|e| Failure::new(EX_SOFTWARE, e.to_string()))?
        } else {
            human()
        };
        let mut stdout = io::stdout().lock();
        writeln!(stdout, "{text}")?;
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EX_NOINPUT, format!("{}: {e}", path.display())))
}

fn read_distribution(path: &Path) -> Result<MixtureDistribution, Failure> {
    MixtureDistribution::from_json(&read(path)?).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn read_coupling(path: &Path) -> Result<PiecewiseCoupling, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::new(EX_USAGE, format!("{}: malformed coupling JSON: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(EX_SOFTWARE, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Failure::new(EX_IOERR, format!("{}: {e}", path.display())))
}

fn describe(f: &MixtureDistribution) -> String {
    let atoms: Vec<String> = f.atoms().iter().map(|a| format!("{}: {}", a.loc, a.mass)).collect();
    let pieces: Vec<String> = f.pieces().iter().map(|p| format!("U[{}, {}]: {}", p.lo, p.hi, p.weight)).collect();
    atoms.into_iter().chain(pieces).collect::<Vec<_>>().join(", ")
}

fn run_check(args: &CheckArgs, out: &Output) -> Outcome {
    let f = read_distribution(&args.dist)?;
    let hint = if let Some(mode) = &args.assume_unimodal {
        ShapeHint::UnimodalDensity { mode: mode.clone() }
    } else if let Some(dir) = args.assume_monotone {
        let direction = match dir {
            MonotoneArg::Increasing => Direction::Increasing,
            MonotoneArg::Decreasing => Direction::Decreasing,
        };
        ShapeHint::MonotoneDensity { direction }
    } else if args.assume_symmetric {
        ShapeHint::UnimodalSymmetricDensity
    } else {
        ShapeHint::None
    };
    let d = decide(&f, args.n, &hint)?;
    out.emit(&d, || {
        let cert = serde_json::to_string(&d.certificate).unwrap_or_default();
        format!("verdict: {:?}\nrule: {:?}\ncertificate: {cert}", d.verdict, d.rule)
    })?;
    Ok(match d.verdict {
        Verdict::Member => 0,
        Verdict::NonMember => 1,
        Verdict::Unknown => 2,
    })
}

fn run_synthesize(args: &SynthesizeArgs, out: &Output) -> Outcome {
    let s: Synthesis = match &args.kind {
        SynthKind::Biatomic { b_inv, a } => synthesize_biatomic(*b_inv, a)?,
        SynthKind::Triatomic { case, period, top, middle } => {
            let case = match case {
                CaseArg::A => TriCase::A,
                CaseArg::B => TriCase::B,
                CaseArg::C => TriCase::C,
            };
            let params = TriAtomicParams { period: period.clone(), top: top.clone(), middle_mass: middle.clone() };
            synthesize_triatomic(case, &params)?
        }
        SynthKind::Target { dist } => synthesize_for_target(&read_distribution(dist)?)?,
    };
    for c in [&s.native, &s.unit] {
        let target = c.target.as_ref().ok_or_else(|| Failure::new(EX_SOFTWARE, "coupling without target"))?;
        let report = verify_coupling(c, target);
        if !report.all_ok() {
            return Err(Failure::new(EX_SOFTWARE, format!("construction failed verification: {:?}", report.discrepancies)));
        }
    }
    if let Some(path) = &args.out {
        write_json(path, &s.unit)?;
    }
    out.emit(&s, || {
        let maps = |c: &PiecewiseCoupling| match &c.mixture {
            Some(m) => format!("{} segments, mixed with weight {} into {} segments", c.segments.len(), m.weight, m.segments.len()),
            None => format!("{} segments", c.segments.len()),
        };
        let law = |c: &PiecewiseCoupling| c.target.as_ref().map(describe).unwrap_or_default();
        format!(
            "native frame x in [{}, {}]: {}; sum law {}\nunit frame: {}; sum law {}\nverified exactly",
            s.native.frame.x.0,
            s.native.frame.x.1,
            maps(&s.native),
            law(&s.native),
            maps(&s.unit),
            law(&s.unit)
        )
    })?;
    Ok(0)
}

fn run_bounds(args: &BoundsArgs, out: &Output) -> Outcome {
    if let Some(x) = &args.cdf_at {
        let (cdf, tail) = cdf_bounds(args.n, x)?;
        let value = json!({ "n": args.n, "x": x, "upper_cdf": cdf, "upper_tail": tail });
        out.emit(&value, || format!("P(S <= {x}) <= {cdf}\nP(S >= {x}) <= {tail}"))?;
        return Ok(0);
    }
    let (Some(a), Some(b)) = (&args.a, &args.b) else {
        return Err(Failure::new(EX_USAGE, "give --a and --b, or --cdf-at"));
    };
    if args.n < 3 {
        return Err(Failure::new(EX_USAGE, "sharp interval bounds need n >= 3; for n = 2 use --cdf-at"));
    }
    let hi = a + b;
    let min = || min_open_interval(args.n, a, b);
    let max = || max_closed_interval(args.n, a, b);
    match args.sense {
        Some(sense) => {
            let (res, label) = match sense {
                SenseArg::Min => (min()?, format!("min P(S in ({a}, {hi}))")),
                SenseArg::Max => (max()?, format!("max P(S in [{a}, {hi}])")),
            };
            if let Some(path) = &args.emit_attaining {
                write_json(path, &res.attaining)?;
            }
            out.emit(&res, || {
                format!("{label} = {}\nattained by {:?} law {}", res.value, res.attaining_kind, describe(&res.attaining))
            })?;
        }
        None => {
            let (lo, up) = (min()?, max()?);
            let value = json!({ "min": lo, "max": up });
            out.emit(&value, || {
                format!(
                    "min P(S in ({a}, {hi})) = {} attained by {}\nmax P(S in [{a}, {hi}]) = {} attained by {}",
                    lo.value,
                    describe(&lo.attaining),
                    up.value,
                    describe(&up.attaining)
                )
            })?;
        }
    }
    Ok(0)
}

fn read_grid_target(path: &Path, n: u32, m: usize) -> Result<GridTarget, Failure> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::new(EX_USAGE, format!("{}: malformed JSON: {e}", path.display())))?;
    if value.get("masses").is_some() {
        let raw: GridTarget = serde_json::from_value(value)
            .map_err(|e| Failure::new(EX_USAGE, format!("{}: malformed grid target: {e}", path.display())))?;
        return Ok(GridTarget::new(raw.masses)?);
    }
    Ok(discretize(&read_distribution(path)?, n, m)?)
}

fn run_oracle(args: &OracleArgs, out: &Output) -> Outcome {
    let spec = if args.uncapped { GridSpec::uncapped(args.n, args.m)? } else { GridSpec::new(args.n, args.m)? };
    if let (Some(sense), Some((lo, hi))) = (args.sense, args.range) {
        let res = grid_extreme_prob(&spec, lo, hi, sense.into())?;
        if let Some(path) = &args.emit_witness {
            write_json(path, &res.witness)?;
        }
        let value = json!({ "n": spec.n, "m": spec.m, "range": [lo, hi], "value": res.value, "pivots": res.pivots });
        out.emit(&value, || format!("{} = {} ({} pivots)", if matches!(sense, SenseArg::Min) { "min" } else { "max" }, res.value, res.pivots))?;
        return Ok(0);
    }
    let path = args.target.as_ref().ok_or_else(|| Failure::new(EX_USAGE, "--target is required"))?;
    let target = read_grid_target(path, spec.n, spec.m)?;
    let mut res = feasible(&target, &spec)?;
    if let (Some(path), Some(w)) = (&args.emit_witness, &res.witness) {
        write_json(path, w)?;
    }
    res.witness = None;
    out.emit(&res, || format!("{:?} (n = {}, m = {}, {} pivots)", res.verdict, spec.n, spec.m, res.pivots))?;
    Ok(if res.verdict == GridVerdict::Feasible { 0 } else { 1 })
}

fn target_for(c: &PiecewiseCoupling, path: Option<&PathBuf>) -> Result<MixtureDistribution, Failure> {
    match path {
        Some(p) => read_distribution(p),
        None => c.target.clone().ok_or_else(|| Failure::new(EX_USAGE, "coupling declares no target; pass --target")),
    }
}

fn run_verify(args: &VerifyArgs, seed: u64, out: &Output) -> Outcome {
    let c = read_coupling(&args.coupling)?;
    let target = target_for(&c, args.target.as_ref())?;
    let report = verify_coupling(&c, &target);
    let mc = if report.margin_x_ok && report.margin_y_ok {
        args.mc.map(|n| monte_carlo_ks(&c, &target, n, seed)).transpose()?
    } else {
        None
    };
    let value = json!({ "report": report, "monte_carlo": mc });
    out.emit(&value, || {
        let mut lines = vec![format!(
            "margin x: {}\nmargin y: {}\nsum law: {}",
            ok(report.margin_x_ok),
            ok(report.margin_y_ok),
            ok(report.sum_law_ok)
        )];
        lines.extend(report.discrepancies.iter().map(|d| format!("  {d}")));
        if let Some(mc) = &mc {
            lines.push(format!("monte carlo: N = {}, KS = {:.3e}, 99% band {:.3e}, {}", mc.samples, mc.ks, mc.dkw_epsilon, ok(mc.within_band)));
        }
        lines.join("\n")
    })?;
    if !(report.margin_x_ok && report.margin_y_ok) {
        return Ok(EX_DATAERR);
    }
    Ok(if report.sum_law_ok && mc.as_ref().is_none_or(|m| m.within_band) { 0 } else { 1 })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

fn run_sample(args: &SampleArgs, seed: u64, out: &Output) -> Outcome {
    let c = read_coupling(&args.coupling)?;
    let target = target_for(&c, args.target.as_ref())?;
    let report = verify_coupling(&c, &target);
    if !(report.margin_x_ok && report.margin_y_ok) {
        return Err(Failure::new(EX_DATAERR, format!("invalid coupling: {}", report.discrepancies.join("; "))));
    }
    let triples = sample_triples(&c, args.samples, seed)?;
    let mc = monte_carlo_ks(&c, &target, args.samples, seed)?;
    if !out.quiet {
        let mut w = BufWriter::new(io::stdout().lock());
        for (x, y, s) in &triples {
            writeln!(w, "{x} {y} {s}")?;
        }
        if out.json {
            writeln!(w, "{}", serde_json::to_string(&mc).map_err(|e| Failure::new(EX_SOFTWARE, e.to_string()))?)?;
        } else {
            writeln!(w, "ks {:.6e} dkw99 {:.6e} within_band {} samples {} seed {}", mc.ks, mc.dkw_epsilon, mc.within_band, mc.samples, mc.seed)?;
        }
        w.flush()?;
    }
    Ok(if mc.within_band { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EX_USAGE } else { 0 });
        }
    };
    let out = Output { json: cli.json, quiet: cli.quiet };
    let result = match &cli.command {
        Command::Check(a) => run_check(a, &out),
        Command::Synthesize(a) => run_synthesize(a, &out),
        Command::Bounds(a) => run_bounds(a, &out),
        Command::Oracle(a) => run_oracle(a, &out),
        Command::Verify(a) => run_verify(a, cli.seed, &out),
        Command::Sample(a) => run_sample(a, cli.seed, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) if f.code == EX_IOERR && f.message.contains("Broken pipe") => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("unisum: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
