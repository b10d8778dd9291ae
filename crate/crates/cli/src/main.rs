mod cache;
mod query;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use selfmap_chow::divisors::{
    class_dp, class_fix, class_h, class_hprime, class_per, class_psi, class_psi_with, class_resultant, Axis,
};
use selfmap_chow::engine::{self, IntersectionQuery};
use selfmap_chow::picard::{basis, quotient_reducer, reduce_to_basis, to_quotient};
use selfmap_chow::pullbacks::{pullback_compose, pullback_selfcompose};
use selfmap_chow::rational::{format_rational, parse_rational};
use selfmap_chow::selfcheck::{self, Level};
use selfmap_chow::{DivClass, Error, WeightTuple};

use crate::cache::{Cache, DEFAULT_PATH};
use crate::query::{parse_query, strict, QueryDocument};

#[derive(Parser)]
#[command(
    name = "selfmap-chow",
    version,
    about = "Exact divisor classes and intersection numbers on moduli of self-maps of P^1"
)]
struct Cli {
    /// Print a single JSON object instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Result cache file.
    #[arg(long, global = true, env = "SELFMAP_CHOW_CACHE", default_value = DEFAULT_PATH)]
    cache: PathBuf,
    /// Worker threads for independent monomials (1 disables parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the Picard basis of Y_{d,n}, and with weights its unstable part.
    Basis {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated marking weights such as `1/2,1`.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<String>>,
    },
    /// Compute a top intersection number.
    Intersect {
        /// JSON query document; alternatively use --d, --weights and --factor.
        query: Option<PathBuf>,
        #[arg(long, conflicts_with = "query", required_unless_present = "query")]
        d: Option<u32>,
        #[arg(long, value_delimiter = ',', conflicts_with = "query")]
        weights: Vec<String>,
        /// A factor expression such as `2*D|B=1|k=1 - H`; repeat per factor.
        #[arg(long = "factor", conflicts_with = "query", allow_hyphen_values = true)]
        factors: Vec<String>,
    },
    /// Print a named divisor class.
    Class {
        kind: ClassKind,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        n: usize,
        /// Marking index for h, hprime, fix and psi.
        #[arg(long, default_value_t = 1)]
        i: usize,
        #[arg(long, value_enum, default_value_t = AxisArg::First)]
        axis: AxisArg,
        /// Period for per.
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Auxiliary markings for psi.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        pair: Option<Vec<usize>>,
    },
    /// Reduce a class expression to the basis, and with weights to the quotient.
    Identify {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<String>>,
        #[arg(allow_hyphen_values = true)]
        expression: String,
    },
    /// Pull a class back along composition or self-composition.
    Pullback {
        #[command(subcommand)]
        map: PullbackMap,
    },
    /// Run the invariant suites.
    Selfcheck {
        /// Include randomized degree-3 cases.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Subcommand)]
enum PullbackMap {
    /// Y_{d1,n1} x Y_{d2,0} -> Y_{d1 d2,n1}; the class lives on the target.
    Compose {
        #[arg(long)]
        d1: u32,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        d2: u32,
        #[arg(long, allow_hyphen_values = true)]
        class: String,
    },
    /// f -> f^m from Y_{d,n} to Y_{d^m,n}; the class lives on the target.
    Selfcompose {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: u32,
        #[arg(long, allow_hyphen_values = true)]
        class: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassKind {
    H,
    Hprime,
    Dp,
    Fix,
    Psi,
    Per,
    Resultant,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    First,
    Second,
}

/// Raised when a self-check suite fails.
#[derive(Debug)]
struct SuiteFailure;

impl std::fmt::Display for SuiteFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("self-check failed")
    }
}

impl std::error::Error for SuiteFailure {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            if json {
                println!("{}", json!({ "error": format!("{err:#}"), "exit_code": code }));
            }
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<SuiteFailure>()) {
        return 1;
    }
    let internal = err
        .chain()
        .filter_map(|e| e.downcast_ref::<Error>())
        .any(Error::is_internal);
    if internal {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.jobs {
        Some(0) => bail!("--jobs must be at least 1"),
        Some(1) => engine::set_parallel(false),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("could not start the worker pool")?,
        None => {}
    }
    let out = Output { json: cli.json };
    match cli.command {
        Command::Basis { d, n, weights } => cmd_basis(&out, d, n, weights),
        Command::Intersect {
            query,
            d,
            weights,
            factors,
        } => {
            let query = match query {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    parse_query(&text)?
                }
                None => {
                    let d = d.expect("clap enforces --d without a query file");
                    let wt = WeightTuple::new(d, parse_weights(&weights)?)?;
                    let factors = factors
                        .iter()
                        .map(|f| DivClass::parse(d, wt.n(), f))
                        .collect::<selfmap_chow::Result<Vec<_>>>()?;
                    IntersectionQuery::new(wt, factors)
                }
            };
            cmd_intersect(&out, &cli.cache, &query)
        }
        Command::Class {
            kind,
            d,
            n,
            i,
            axis,
            m,
            pair,
        } => {
            let cls = match kind {
                ClassKind::H => class_h(d, n, i, axis.into())?,
                ClassKind::Hprime => class_hprime(d, n, i)?,
                ClassKind::Dp => class_dp(d, n),
                ClassKind::Fix => class_fix(d, n, i)?,
                ClassKind::Psi => match pair.as_deref() {
                    Some(&[a, b]) => class_psi_with(d, n, i, a, b)?,
                    _ => class_psi(d, n, i)?,
                },
                ClassKind::Per => class_per(d, n, m)?,
                ClassKind::Resultant => class_resultant(d, n),
            };
            out.class("class", &cls);
            Ok(())
        }
        Command::Identify {
            d,
            n,
            weights,
            expression,
        } => {
            let raw = DivClass::parse(d, n, &expression)?;
            let reduced = reduce_to_basis(&raw);
            let quotient = match weights {
                Some(w) => {
                    let wt = WeightTuple::new(d, parse_weights(&w)?)?;
                    if wt.n() != n {
                        bail!(Error::Parse(format!("{} weights given for n = {n}", wt.n())));
                    }
                    Some(to_quotient(&raw, &wt)?)
                }
                None => None,
            };
            if out.json {
                let mut obj = Map::new();
                obj.insert("basis".into(), class_json(&reduced));
                if let Some(q) = &quotient {
                    obj.insert("quotient".into(), class_json(q));
                }
                println!("{}", Value::Object(obj));
            } else {
                println!("basis: {reduced}");
                if let Some(q) = &quotient {
                    println!("quotient: {q}");
                }
            }
            Ok(())
        }
        Command::Pullback { map } => match map {
            PullbackMap::Compose { d1, n1, d2, class } => {
                let cls = DivClass::parse(d1 * d2, n1, &class)?;
                let (first, second) = pullback_compose(d1, n1, d2, &cls)?;
                if out.json {
                    println!(
                        "{}",
                        json!({ "first": class_json(&first), "second": class_json(&second) })
                    );
                } else {
                    println!("Y_{{{d1},{n1}}}: {first}");
                    println!("Y_{{{d2},0}}: {second}");
                }
                Ok(())
            }
            PullbackMap::Selfcompose { d, n, m, class } => {
                let big = d.checked_pow(m).ok_or_else(|| anyhow!("{d}^{m} is too large"))?;
                let cls = DivClass::parse(big, n, &class)?;
                out.class("pullback", &pullback_selfcompose(d, n, m, &cls)?);
                Ok(())
            }
        },
        Command::Selfcheck { full } => cmd_selfcheck(&out, &cli.cache, if full { Level::Full } else { Level::Quick }),
    }
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Axis {
        match a {
            AxisArg::First => Axis::First,
            AxisArg::Second => Axis::Second,
        }
    }
}

struct Output {
    json: bool,
}

impl Output {
    fn class(&self, label: &str, cls: &DivClass) {
        if self.json {
            println!("{}", json!({ "d": cls.d(), "n": cls.n(), label: class_json(cls) }));
        } else {
            println!("{cls}");
        }
    }
}

fn class_json(cls: &DivClass) -> Value {
    Value::Object(
        cls.terms()
            .map(|(g, c)| (g.to_string(), Value::String(strict(c))))
            .collect(),
    )
}

fn parse_weights(raw: &[String]) -> anyhow::Result<Vec<selfmap_chow::Rational>> {
    raw.iter()
        .filter(|w| !w.trim().is_empty())
        .map(|w| Ok(parse_rational(w)?))
        .collect()
}

fn cmd_basis(out: &Output, d: u32, n: Option<usize>, weights: Option<Vec<String>>) -> anyhow::Result<()> {
    let wt = match (&weights, n) {
        (Some(w), _) => Some(WeightTuple::new(d, parse_weights(w)?)?),
        (None, Some(0)) => Some(WeightTuple::new(d, Vec::new())?),
        (None, Some(_)) => None,
        (None, None) => bail!(Error::Parse("give --n or --weights".into())),
    };
    let n = match (n, &wt) {
        (Some(n), Some(wt)) if n != wt.n() => bail!(Error::Parse(format!("{} weights given for n = {n}", wt.n()))),
        (Some(n), _) => n,
        (None, Some(wt)) => wt.n(),
        (None, None) => unreachable!(),
    };
    let generators = basis(d, n);
    let mut unstable = Vec::new();
    let mut survivors = Vec::new();
    if let Some(wt) = &wt {
        wt.require_admissible()?;
        for &g in &generators {
            if let Some((set, k)) = g.as_boundary() {
                if !wt.boundary_stable(set, k)? {
                    unstable.push(g);
                }
            }
        }
        survivors = quotient_reducer(wt)?.survivors().to_vec();
    }
    if out.json {
        let names = |gs: &[selfmap_chow::GeneratorId]| gs.iter().map(|g| g.to_string()).collect::<Vec<_>>();
        let mut obj = json!({ "d": d, "n": n, "rank": generators.len(), "basis": names(&generators) });
        if let Some(wt) = &wt {
            obj["weights"] = json!(wt.weights().iter().map(strict).collect::<Vec<_>>());
            obj["unstable"] = json!(names(&unstable));
            obj["survivors"] = json!(names(&survivors));
        }
        println!("{obj}");
    } else {
        println!("Y_{{{d},{n}}}: rank {}", generators.len());
        for g in &generators {
            let mark = if unstable.contains(g) { "  (unstable)" } else { "" };
            println!("  {g}{mark}");
        }
        if let Some(wt) = &wt {
            println!(
                "M{wt}: {} unstable, {} surviving in the quotient",
                unstable.len(),
                survivors.len()
            );
        }
    }
    Ok(())
}

fn cmd_intersect(out: &Output, cache_path: &Path, query: &IntersectionQuery) -> anyhow::Result<()> {
    let canonical = query.canonical()?;
    let text = QueryDocument(&canonical).to_string();
    let mut cache = open_cache(cache_path);
    let (value, hit) = match cache.lookup(&text) {
        Some(v) => (v, true),
        None => {
            let v = canonical.evaluate()?;
            if let Err(e) = cache.insert(&text, &v) {
                eprintln!("warning: could not write cache {}: {e}", cache.path().display());
            }
            (v, false)
        }
    };
    if out.json {
        let stats = engine::stats();
        let doc: Value = serde_json::to_value(QueryDocument(&canonical))?;
        println!(
            "{}",
            json!({
                "query": doc,
                "value": strict(&value),
                "cache": {
                    "path": cache.path().display().to_string(),
                    "hit": hit,
                    "hits": cache.hits,
                    "misses": cache.misses,
                    "records": cache.len(),
                },
                "engine": { "memo_hits": stats.memo_hits, "memo_misses": stats.memo_misses },
            })
        );
    } else {
        println!("{}", format_rational(&value));
    }
    Ok(())
}

fn open_cache(path: &Path) -> Cache {
    let (cache, report) = Cache::open(path);
    if !report.problems.is_empty() {
        eprintln!(
            "warning: cache {} was corrupted ({}); rebuilt with {} records",
            path.display(),
            report.problems.join("; "),
            report.records
        );
    }
    cache
}

fn cmd_selfcheck(out: &Output, cache_path: &Path, level: Level) -> anyhow::Result<()> {
    let cache = open_cache(cache_path);
    let reports = selfcheck::run_all(level);
    let all_passed = reports.iter().all(|r| r.passed());
    if out.json {
        let suites: Vec<Value> = reports
            .iter()
            .map(|r| {
                json!({
                    "suite": r.name,
                    "passed": r.passed(),
                    "checks": r.checks,
                    "seconds": r.seconds,
                    "failures": r.failures,
                })
            })
            .collect();
        println!(
            "{}",
            json!({ "passed": all_passed, "suites": suites, "cache_records": cache.len() })
        );
    } else {
        for r in &reports {
            let status = if r.passed() { "PASS" } else { "FAIL" };
            println!("{status}  {:<30} {:>6} checks  {:>7.2}s", r.name, r.checks, r.seconds);
            for f in r.failures.iter().take(5) {
                println!("      {f}");
            }
        }
    }
    if all_passed {
        Ok(())
    } else {
        Err(SuiteFailure.into())
    }
}
