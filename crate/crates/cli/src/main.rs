use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use quartic_cm::algebra::is_prime;
use quartic_cm::curve::{is_smooth_modp, QuarticCurve};
use quartic_cm::engine::{CurveEngine, EngineOptions, Path, PrimeOutcome, Status};
use quartic_cm::forest::{range_cartier_manin, RangeOptions};
use quartic_cm::oracle::{cartier_manin_bruteforce, count_points_ext, lpoly_from_counts, BRUTEFORCE_BOUND};
use quartic_cm::{Error, Result};

mod record;

use record::{Format, OutputRecord, CSV_HEADER};

/// Cartier-Manin matrices and Frobenius traces of smooth plane quartics.
#[derive(Parser)]
#[command(name = "quartic-cm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CurveSource {
    /// File with the 15 coefficients in lex order (x0^4, x0^3 x1, ...), or JSON {"coeffs": [...]}
    #[arg(long, conflicts_with = "coeffs", required_unless_present = "coeffs")]
    curve: Option<PathBuf>,
    /// The 15 coefficients inline, comma or space separated
    #[arg(long, allow_hyphen_values = true)]
    coeffs: Option<String>,
}

impl CurveSource {
    fn load(&self) -> Result<QuarticCurve> {
        match (&self.curve, &self.coeffs) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
                QuarticCurve::parse(&text)
            }
            (None, Some(c)) => QuarticCurve::parse(c),
            (None, None) => Err(Error::Usage("a curve is required".into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// A_p, a_p and L_p(T) mod p for a single prime
    Modp {
        #[command(flatten)]
        source: CurveSource,
        /// The prime
        #[arg(short = 'p')]
        p: u64,
        /// Verify against the oracles that fit their budgets
        #[arg(long)]
        check: bool,
        /// Use the 28x28 transport instead of the 16x16 one
        #[arg(long, conflicts_with = "streamed")]
        uncompressed: bool,
        /// Push vectors through M(t) without forming C_p
        #[arg(long)]
        streamed: bool,
        /// Seed for the change-of-variables search
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// All primes p <= N with the remainder forest
    Range {
        #[command(flatten)]
        source: CurveSource,
        /// Largest prime to report
        #[arg(short = 'N')]
        n: u64,
        /// Split into 2^kappa subtrees [default: floor(2 log2 log2 N)]
        #[arg(long)]
        kappa: Option<u32>,
        /// Worker threads [default: all cores]
        #[arg(long)]
        threads: Option<usize>,
        /// Write records here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// One JSON object per line, or CSV with a fixed 23-column header
        #[arg(long, value_enum, default_value_t = Format::Jsonl)]
        format: Format,
        /// Cross-check every p <= B against the per-prime engine and oracles
        #[arg(long, value_name = "B", default_value_t = 0)]
        check_upto: u64,
        /// Seed for the change-of-variables search
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Add per-record elapsed milliseconds (makes output nondeterministic)
        #[arg(long)]
        timing: bool,
        /// Keep lambda in the tree products instead of dividing it out
        #[arg(long)]
        no_strip: bool,
        /// Print forest statistics to stderr
        #[arg(long)]
        stats: bool,
    },
    /// Run one oracle on its own
    Oracle {
        #[command(flatten)]
        source: CurveSource,
        /// The prime
        #[arg(short = 'p')]
        p: u64,
        #[command(subcommand)]
        what: OracleKind,
    },
}

#[derive(Subcommand, Clone, Copy)]
enum OracleKind {
    /// #X(F_{p^r}) by enumeration
    Count {
        #[arg(short = 'r', default_value_t = 1)]
        r: u32,
    },
    /// A_p by expanding f^(p-1)
    Cm,
    /// L_p(T) from the counts over F_p, F_{p^2}, F_{p^3}
    Lpoly,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) => 2,
        Error::Degenerate(_) => 3,
        Error::BadReduction(_) | Error::Internal(_) => 4,
    }
}

fn require_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::Usage(format!("{p} is not prime")))
    }
}

fn engine_for(curve: &QuarticCurve, seed: u64) -> Result<CurveEngine> {
    CurveEngine::new(curve, seed).map_err(|e| match e {
        Error::Degenerate(msg) => {
            Error::Degenerate(format!("{msg}; try a unimodular change of variables of the input model"))
        }
        other => other,
    })
}

fn mismatch(what: &str, p: u64, got: impl std::fmt::Debug, want: impl std::fmt::Debug) -> Error {
    Error::Internal(format!("check failed at p = {p}: {what} {got:?} != {want:?}"))
}

/// Oracle checks that fit the budgets; returns their names.
fn oracle_checks(curve: &QuarticCurve, o: &PrimeOutcome) -> Result<Vec<String>> {
    let mut done = Vec::new();
    let Some(cm) = o.cm else { return Ok(done) };
    let p = o.p;
    let c = curve.reduce(p)?;
    if p <= BRUTEFORCE_BOUND {
        let bf = cartier_manin_bruteforce(&c);
        if bf != cm.a {
            return Err(mismatch("A_p", p, cm.a, bf));
        }
        done.push("bruteforce_cm".to_string());
    }
    if let Ok(n1) = count_points_ext(&c, 1) {
        if let Some(count) = o.count {
            if count != n1 {
                return Err(mismatch("count", p, count, n1));
            }
        }
        if (p + 1 + p - n1 % p) % p != cm.trace() {
            return Err(mismatch("trace", p, cm.trace(), n1));
        }
        done.push("count".to_string());
        if let (Ok(n2), Ok(n3)) = (count_points_ext(&c, 2), count_points_ext(&c, 3)) {
            let l = lpoly_from_counts(p, [n1, n2, n3]);
            let l: Vec<u64> = l.iter().map(|x| x.rem_euclid(p as i128) as u64).collect();
            if l != cm.lpoly_modp() {
                return Err(mismatch("L_p(T) mod p", p, cm.lpoly_modp(), l));
            }
            done.push("lpoly".to_string());
        }
    }
    Ok(done)
}

fn print_line(line: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{line}").map_err(|e| Error::Usage(format!("cannot write output: {e}")))
}

fn cmd_modp(source: &CurveSource, p: u64, check: bool, path: Path, seed: u64) -> Result<()> {
    require_prime(p)?;
    let curve = source.load()?;
    let opts = EngineOptions { path, seed, ..EngineOptions::default() };
    let outcome = match engine_for(&curve, seed) {
        Ok(engine) => engine.compute(p, &opts)?,
        // degenerate over Q: the model may still be fine modulo p
        Err(Error::Degenerate(_)) => quartic_cm::engine::cartier_manin_modp(&curve.reduce(p)?, &opts)?,
        Err(e) => return Err(e),
    };
    let mut rec = OutputRecord::from(&outcome);
    if check {
        let mut done = oracle_checks(&curve, &outcome)?;
        if outcome.status == Status::Ok && p > 2 {
            let other = if path == Path::Uncompressed { Path::Compressed } else { Path::Uncompressed };
            let alt = quartic_cm::engine::cartier_manin_modp(&curve.reduce(p)?, &EngineOptions { path: other, ..opts })?;
            if alt.cm != outcome.cm {
                return Err(mismatch("other transport", p, alt.cm.map(|c| c.a), outcome.cm.map(|c| c.a)));
            }
            done.push("alternate_path".to_string());
        }
        rec.verified = Some(done);
    }
    print_line(&rec.to_json())
}

struct RangeArgs {
    n: u64,
    kappa: Option<u32>,
    out: Option<PathBuf>,
    format: Format,
    check_upto: u64,
    seed: u64,
    timing: bool,
    strip: bool,
    stats: bool,
}

fn cmd_range(source: &CurveSource, a: RangeArgs) -> Result<()> {
    if a.n < 2 {
        return Err(Error::Usage("N must be at least 2".into()));
    }
    let curve = source.load()?;
    let engine = engine_for(&curve, a.seed)?;
    let io_err = |e: io::Error| Error::Usage(format!("cannot write output: {e}"));
    let sink: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(File::create(path).map_err(io_err)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    if a.format == Format::Csv {
        writeln!(w, "{CSV_HEADER}").map_err(io_err)?;
    }
    let engine_opts = EngineOptions { seed: a.seed, ..EngineOptions::default() };
    let opts = RangeOptions { kappa: a.kappa, strip_lambda: a.strip, engine: engine_opts.clone() };
    let mut last = Instant::now();
    let stats = range_cartier_manin(&engine, a.n, &opts, |o| {
        let mut rec = OutputRecord::from(&o);
        if o.p <= a.check_upto {
            let per_prime = engine.compute(o.p, &engine_opts)?;
            if per_prime != o {
                return Err(mismatch("per-prime result", o.p, &per_prime, &o));
            }
            oracle_checks(&curve, &o)?;
        }
        if a.timing {
            let now = Instant::now();
            rec.time_ms = Some((now - last).as_secs_f64() * 1e3);
            last = now;
        }
        writeln!(w, "{}", rec.encode(a.format)).map_err(io_err)
    })?;
    w.flush().map_err(io_err)?;
    if a.stats {
        eprintln!(
            "chunks={} max_chunk_bits={} max_carry_bits={} build={:?} descend={:?} carry={:?}",
            stats.chunks, stats.max_chunk_bits, stats.max_carry_bits, stats.build_time, stats.descend_time, stats.carry_time
        );
    }
    Ok(())
}

fn cmd_oracle(source: &CurveSource, p: u64, what: OracleKind) -> Result<()> {
    require_prime(p)?;
    let curve = source.load()?;
    let c = curve.reduce(p)?;
    let value = match what {
        OracleKind::Count { r } => {
            if !(1..=3).contains(&r) {
                return Err(Error::Usage("r must be 1, 2 or 3".into()));
            }
            json!({ "p": p, "oracle": "count", "r": r, "count": count_points_ext(&c, r)? })
        }
        OracleKind::Cm => {
            if p > BRUTEFORCE_BOUND {
                return Err(Error::Usage(format!("brute-force A_p is limited to p <= {BRUTEFORCE_BOUND}")));
            }
            if !is_smooth_modp(&c) {
                json!({ "p": p, "oracle": "cm", "status": "bad_reduction", "A_p": null })
            } else {
                let a = cartier_manin_bruteforce(&c);
                let trace = (a[0][0] + a[1][1] + a[2][2]) % p;
                json!({ "p": p, "oracle": "cm", "status": "ok", "A_p": a, "trace": trace })
            }
        }
        OracleKind::Lpoly => {
            let counts = [count_points_ext(&c, 1)?, count_points_ext(&c, 2)?, count_points_ext(&c, 3)?];
            if !is_smooth_modp(&c) {
                return Err(Error::Usage(format!("the curve has bad reduction at {p}")));
            }
            let l = lpoly_from_counts(p, counts);
            let lmod: Vec<u64> = l.iter().map(|x| x.rem_euclid(p as i128) as u64).collect();
            let l: Vec<i64> = l.iter().map(|&x| x as i64).collect();
            json!({ "p": p, "oracle": "lpoly", "counts": counts, "lpoly": l, "lpoly_modp": lmod })
        }
    };
    print_line(&value.to_string())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Modp { source, p, check, uncompressed, streamed, seed } => {
            let path = match (uncompressed, streamed) {
                (true, _) => Path::Uncompressed,
                (_, true) => Path::Streamed,
                _ => Path::Compressed,
            };
            cmd_modp(&source, p, check, path, seed)
        }
        Command::Range { source, n, kappa, threads, out, format, check_upto, seed, timing, no_strip, stats } => {
            let args = RangeArgs { n, kappa, out, format, check_upto, seed, timing, strip: !no_strip, stats };
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(t) = threads {
                if t == 0 {
                    return Err(Error::Usage("--threads must be positive".into()));
                }
                pool = pool.num_threads(t);
            }
            let pool = pool.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| cmd_range(&source, args))
        }
        Command::Oracle { source, p, what } => cmd_oracle(&source, p, what),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("quartic-cm: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
