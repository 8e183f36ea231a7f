//! The `resonance` command line: subcommands, config resolution, and report
//! emission with provenance.

use crate::bump::Bump;
use crate::config::{load_config_value, Format, RunConfig};
use crate::dirichlet::{grid_sup_window, resonance_guided_search, SearchOptions, SearchResult};
use crate::error::{Error, Result};
use crate::moments::{self, ratio_and_bounds, MomentReport, DEFAULT_QUAD_REL_TOL};
use crate::oracle::{self, ToyResonator};
use crate::resonator::{PrimeWeights, Resonator, ResonatorSummary};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "resonance",
    version,
    about = "Resonance-method certificates for sup |D_N(t)|"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moment report with the certified lower bound for sup |D_N(t)|.
    Certify(Flags),
    /// Grid search for sup |D_N(t)| (certified unless --guided).
    Search(SearchFlags),
    /// Brute-force cross-checks on small instances.
    Oracle(OracleFlags),
    /// Resonator parameters for the configured X.
    Resonator(Flags),
    /// Certify over the product of comma-separated --n, --c, --delta, --seed lists.
    Sweep(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat JSON config (or an earlier JSON report); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<String>,
    /// Exponent with T = N^C.
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// one, arch:ALPHA or steinhaus
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub nu: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub trace_stride: Option<usize>,
    #[arg(long)]
    pub budget_terms: Option<u64>,
    /// Grid points times terms allowed in a search.
    #[arg(long)]
    pub eval_budget: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SearchFlags {
    #[command(flatten)]
    pub common: Flags,
    /// Left end of the search window (default -T).
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    /// Right end of the search window (default T).
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    /// Resonance-guided heuristic search (no slack certificate).
    #[arg(long)]
    pub guided: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OracleFlags {
    #[command(flatten)]
    pub common: Flags,
    /// Resonator length X for the brute-force loops.
    #[arg(long)]
    pub x: u64,
    /// Explicit toy resonator as n:r pairs, e.g. "1:1,2:1".
    #[arg(long, conflicts_with = "toy_primes")]
    pub toy: Option<String>,
    /// Squarefree multiplicative toy from p:r(p) pairs, e.g. "2:0.5,3:0.25".
    #[arg(long)]
    pub toy_primes: Option<String>,
}

/// A failed invocation: message plus process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::OutOfRange { .. } => EXIT_USAGE,
            Error::ResourceLimit(_) => EXIT_RESOURCE,
            Error::NumericalFailure { .. } => EXIT_FAILURE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: msg.into(),
    }
}

fn parse_list<T: std::str::FromStr>(name: &str, s: &str) -> std::result::Result<Vec<T>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| usage(format!("bad value '{v}' for --{name}")))
        })
        .collect()
}

fn single<T: std::str::FromStr + Copy>(name: &str, s: &Option<String>) -> std::result::Result<Option<T>, CliError> {
    match s {
        None => Ok(None),
        Some(s) => {
            let v = parse_list::<T>(name, s)?;
            if v.len() != 1 {
                return Err(usage(format!("--{name} takes a single value outside sweep")));
            }
            Ok(Some(v[0]))
        }
    }
}

fn set(obj: &mut serde_json::Map<String, serde_json::Value>, key: &str, v: impl Serialize) {
    obj.insert(key.to_string(), serde_json::to_value(v).expect("serializable"));
}

/// Config file (if any) with the non-list flags applied on top.
fn base_object(flags: &Flags) -> std::result::Result<serde_json::Map<String, serde_json::Value>, CliError> {
    let mut obj = match &flags.config {
        Some(p) => load_config_value(p)?.as_object().cloned().unwrap_or_default(),
        None => serde_json::Map::new(),
    };
    if flags.t.is_some() && flags.c.is_some() {
        return Err(usage("give exactly one of --c and --t"));
    }
    if let Some(t) = flags.t {
        set(&mut obj, "t", t);
        obj.remove("c");
    }
    if let Some(v) = flags.gamma {
        set(&mut obj, "gamma", v);
    }
    if let Some(v) = &flags.f {
        set(&mut obj, "f", v);
    }
    if let Some(v) = flags.eps {
        set(&mut obj, "eps", v);
    }
    if let Some(v) = flags.nu {
        set(&mut obj, "nu", v);
    }
    if let Some(v) = flags.alpha {
        set(&mut obj, "alpha", v);
    }
    if let Some(v) = &flags.out {
        set(&mut obj, "out", v);
    }
    if let Some(v) = flags.format {
        set(&mut obj, "format", v);
    }
    if let Some(v) = flags.trace_stride {
        set(&mut obj, "trace_stride", v);
    }
    if let Some(v) = flags.budget_terms {
        set(&mut obj, "budget_terms", v);
    }
    if let Some(v) = flags.eval_budget {
        set(&mut obj, "eval_budget", v);
    }
    Ok(obj)
}

fn finish(obj: serde_json::Map<String, serde_json::Value>) -> std::result::Result<RunConfig, CliError> {
    if !obj.contains_key("n") {
        return Err(usage("--n is required (flag or config file)"));
    }
    let cfg: RunConfig =
        serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| usage(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves a single-run config from file plus flags.
pub fn resolve(flags: &Flags) -> std::result::Result<RunConfig, CliError> {
    let mut obj = base_object(flags)?;
    if let Some(n) = single::<u64>("n", &flags.n)? {
        set(&mut obj, "n", n);
    }
    if let Some(c) = single::<f64>("c", &flags.c)? {
        set(&mut obj, "c", c);
        obj.remove("t");
    }
    if let Some(d) = single::<f64>("delta", &flags.delta)? {
        set(&mut obj, "delta", d);
    }
    if let Some(s) = single::<u64>("seed", &flags.seed)? {
        set(&mut obj, "seed", s);
    }
    finish(obj)
}

/// Expands sweep lists in deterministic order: N, then C (or T), then delta, then
/// seed. Sweeps default to CSV.
pub fn resolve_sweep(flags: &Flags) -> std::result::Result<Vec<RunConfig>, CliError> {
    let mut base = base_object(flags)?;
    base.entry("format").or_insert_with(|| serde_json::json!(Format::Csv));
    let list = |name: &str, flag: &Option<String>| -> std::result::Result<Vec<serde_json::Value>, CliError> {
        match flag {
            Some(s) => Ok(parse_list::<f64>(name, s)?
                .into_iter()
                .map(|v| serde_json::json!(v))
                .collect()),
            None => Ok(match base.get(name) {
                Some(serde_json::Value::Array(a)) => a.clone(),
                Some(v) => vec![v.clone()],
                None => vec![serde_json::Value::Null],
            }),
        }
    };
    let ns: Vec<serde_json::Value> = match &flags.n {
        Some(s) => parse_list::<u64>("n", s)?
            .into_iter()
            .map(|v| serde_json::json!(v))
            .collect(),
        None => list("n", &None)?,
    };
    let cs = list("c", &flags.c)?;
    let deltas = list("delta", &flags.delta)?;
    let seeds: Vec<serde_json::Value> = match &flags.seed {
        Some(s) => parse_list::<u64>("seed", s)?
            .into_iter()
            .map(|v| serde_json::json!(v))
            .collect(),
        None => list("seed", &None)?,
    };
    let mut out = Vec::new();
    for n in &ns {
        for c in &cs {
            for d in &deltas {
                for s in &seeds {
                    let mut obj = base.clone();
                    for (k, v) in [("n", n), ("c", c), ("delta", d), ("seed", s)] {
                        if v.is_null() {
                            obj.remove(k);
                        } else {
                            obj.insert(k.to_string(), v.clone());
                        }
                    }
                    if flags.c.is_some() {
                        obj.remove("t");
                    }
                    out.push(finish(obj)?);
                }
            }
        }
    }
    Ok(out)
}

/// Report wrapper carrying provenance.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub config_hash: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub generated_at: u64,
    pub result: T,
}

fn timestamp() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return v;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn envelope<'a, T: Serialize>(command: &'static str, config: &'a RunConfig, result: T) -> Envelope<'a, T> {
    Envelope {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        config_hash: config.hash(),
        generated_at: timestamp(),
        result,
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn csv_preamble(command: &str, config: &RunConfig) -> String {
    format!(
        "# {} {} {command} config_hash={} generated_at={}\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        config.hash(),
        timestamp()
    )
}

fn emit(out: &Option<PathBuf>, text: &str) -> std::result::Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError {
            code: EXIT_FAILURE,
            message: format!("cannot write {}: {e}", p.display()),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError {
                    code: EXIT_FAILURE,
                    message: format!("stdout: {e}"),
                })
        }
    }
}

/// Builds the certificate report for one config.
pub fn certify_report(cfg: &RunConfig) -> Result<MomentReport> {
    let table = cfg.factor_table()?;
    let f = cfg.build_f(&table)?;
    ratio_and_bounds(&cfg.moment_config(), &f, &Bump::default(), &table)
}

pub fn cmd_certify(cfg: &RunConfig) -> std::result::Result<String, CliError> {
    let report = certify_report(cfg)?;
    Ok(match cfg.format {
        Format::Json => json(&envelope("certify", cfg, &report)),
        Format::Csv => format!(
            "{}{}\n{}\n",
            csv_preamble("certify", cfg),
            report.csv_header(),
            report.csv_row()
        ),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub n: u64,
    pub f: String,
    pub eps: f64,
    pub mode: &'static str,
    pub search: SearchResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<(f64, f64)>>,
}

pub fn search_report(cfg: &RunConfig) -> Result<SearchReport> {
    let table = cfg.factor_table()?;
    let f = cfg.build_f(&table)?;
    let t_max = cfg.log_t().exp();
    let lo = cfg.search_lo.unwrap_or(-t_max);
    let hi = cfg.search_hi.unwrap_or(t_max);
    let eps = cfg.eps_or_default();
    let opts = SearchOptions {
        eval_budget: cfg.eval_budget,
        trace_stride: cfg.trace_stride,
    };
    let (search, trace, mode) = if cfg.guided {
        let res = Resonator::from_log_x(cfg.moment_config().log_x(), &table)?;
        let support = res.support(res.x(), crate::resonator::DEFAULT_SUPPORT_BUDGET)?;
        let r = resonance_guided_search(&support, &f, cfg.n, lo, hi, eps, &table, &opts)?;
        (r, None, "guided")
    } else {
        let (r, trace) = grid_sup_window(&f, cfg.n, lo, hi, eps, &table, &opts)?;
        (r, cfg.trace_stride.map(|_| trace), "grid")
    };
    Ok(SearchReport {
        n: cfg.n,
        f: f.kind().label(),
        eps,
        mode,
        search,
        trace,
    })
}

pub fn cmd_search(cfg: &RunConfig) -> std::result::Result<String, CliError> {
    if cfg.format == Format::Csv && cfg.trace_stride.is_some() && cfg.out.is_none() {
        return Err(usage(
            "CSV traces are written next to --out; give --out or use --format json",
        ));
    }
    let report = search_report(cfg)?;
    Ok(match cfg.format {
        Format::Json => json(&envelope("search", cfg, &report)),
        Format::Csv => {
            if let (Some(trace), Some(out)) = (&report.trace, &cfg.out) {
                let mut text = String::from("t,abs_dn\n");
                for (t, v) in trace {
                    text.push_str(&format!("{t},{v}\n"));
                }
                emit(&Some(trace_path(out)), &text)?;
            }
            let s = &report.search;
            format!(
                "{}n,f,eps,mode,lo,hi,t_star,value,grid_step,grid_points,refinement_iterations,certified_slack\n\
                 {},{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_preamble("search", cfg),
                report.n,
                report.f,
                report.eps,
                report.mode,
                s.lo,
                s.hi,
                s.t_star,
                s.value,
                s.grid_step,
                s.grid_points,
                s.refinement_iterations,
                s.certified_slack.map(|v| v.to_string()).unwrap_or_default()
            )
        }
    })
}

/// `<out>.trace.csv` next to the main output.
pub fn trace_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".trace.csv");
    out.with_file_name(name)
}

#[derive(Debug, Clone, Serialize)]
pub struct M2Oracle {
    pub t: f64,
    pub bruteforce_quadrature: f64,
    pub exact: Option<f64>,
    pub adaptive_quadrature: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub n: u64,
    pub x: u64,
    pub multiplicative: bool,
    pub diagonal_bruteforce: f64,
    pub diagonal_sum: Option<f64>,
    pub restricted_diagonal_lower_bound: Option<f64>,
    pub diagonal_rel_error: Option<f64>,
    pub bijection: bool,
    pub min_offdiag_gap: Option<f64>,
    pub m2: Option<M2Oracle>,
}

fn parse_pairs(s: &str) -> Result<Vec<(u64, f64)>> {
    s.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("expected key:value, got '{kv}'")))?;
            let k = k.trim().parse().map_err(|_| Error::invalid(format!("bad key '{k}'")))?;
            let v = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad value '{v}'")))?;
            Ok((k, v))
        })
        .collect()
}

pub fn oracle_report(cfg: &RunConfig, flags: &OracleFlags, with_t: bool) -> Result<OracleReport> {
    let n = cfg.n;
    let x = flags.x;
    if x == 0 {
        return Err(Error::invalid("--x must be positive"));
    }
    let table = crate::ntcore::FactorTable::new((x.max(n).max(16) + 1).min(u32::MAX as u64) as u32)?;
    let toy = if let Some(s) = &flags.toy {
        ToyResonator::new(x, parse_pairs(s)?)?
    } else if let Some(s) = &flags.toy_primes {
        let w: Vec<(u32, f64)> = parse_pairs(s)?
            .into_iter()
            .map(|(p, r)| {
                u32::try_from(p)
                    .map(|p| (p, r))
                    .map_err(|_| Error::invalid("prime too large"))
            })
            .collect::<Result<_>>()?;
        ToyResonator::from_prime_weights(x, &w)?
    } else {
        let res = Resonator::from_log_x(cfg.moment_config().log_x(), &cfg.factor_table()?)?;
        ToyResonator::from_resonator(&res, x, &cfg.factor_table()?)?
    };
    let multiplicative = toy.is_multiplicative_squarefree();
    let diagonal_bruteforce = oracle::diagonal_sum_bruteforce(&toy, n, x)?;
    let (mut diagonal_sum, mut restricted, mut rel) = (None, None, None);
    let support = if multiplicative { Some(toy.to_support()?) } else { None };
    if let Some(s) = &support {
        let d = moments::diagonal_sum(s, n, cfg.budget_terms)?;
        rel = Some(if diagonal_bruteforce == 0.0 {
            d.abs()
        } else {
            (d - diagonal_bruteforce).abs() / diagonal_bruteforce
        });
        diagonal_sum = Some(d);
        restricted = Some(moments::restricted_diagonal_lower_bound(s, n, cfg.budget_terms)?);
    }
    let m2 = if with_t {
        let t_len = cfg.log_t().exp();
        let f = cfg.f_spec()?.build(cfg.seed, table.limit() as u64)?;
        let brute = oracle::m2_bruteforce_quadrature(&toy, &f, n, t_len, &table)?;
        let (mut exact, mut adaptive) = (None, None);
        if let Some(s) = &support {
            exact = Some(moments::m2_exact(
                s,
                &f,
                n,
                t_len,
                &Bump::default(),
                cfg.budget_terms,
                &table,
            )?);
            adaptive = Some(moments::m2_quadrature(
                s,
                &f,
                n,
                t_len,
                DEFAULT_QUAD_REL_TOL,
                cfg.budget_terms,
                &table,
            )?);
        }
        Some(M2Oracle {
            t: t_len,
            bruteforce_quadrature: brute,
            exact,
            adaptive_quadrature: adaptive,
        })
    } else {
        None
    };
    Ok(OracleReport {
        n,
        x,
        multiplicative,
        diagonal_bruteforce,
        diagonal_sum,
        restricted_diagonal_lower_bound: restricted,
        diagonal_rel_error: rel,
        bijection: oracle::parametrization_bijection_check(n, x)?,
        min_offdiag_gap: moments::min_offdiag_gap(n, x)?,
        m2,
    })
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_oracle(cfg: &RunConfig, flags: &OracleFlags, with_t: bool) -> std::result::Result<String, CliError> {
    let r = oracle_report(cfg, flags, with_t)?;
    Ok(match cfg.format {
        Format::Json => json(&envelope("oracle", cfg, &r)),
        Format::Csv => format!(
            "{}n,x,multiplicative,diagonal_bruteforce,diagonal_sum,restricted_diagonal_lower_bound,diagonal_rel_error,bijection,min_offdiag_gap,m2_bruteforce,m2_exact,m2_quadrature\n\
             {},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_preamble("oracle", cfg),
            r.n,
            r.x,
            r.multiplicative,
            r.diagonal_bruteforce,
            opt_str(r.diagonal_sum),
            opt_str(r.restricted_diagonal_lower_bound),
            opt_str(r.diagonal_rel_error),
            r.bijection,
            opt_str(r.min_offdiag_gap),
            opt_str(r.m2.as_ref().map(|m| m.bruteforce_quadrature)),
            opt_str(r.m2.as_ref().and_then(|m| m.exact)),
            opt_str(r.m2.as_ref().and_then(|m| m.adaptive_quadrature)),
        ),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonatorReport {
    pub x: Option<f64>,
    pub primes: Vec<u32>,
    pub summary: ResonatorSummary,
}

pub fn cmd_resonator(cfg: &RunConfig) -> std::result::Result<String, CliError> {
    let table = cfg.factor_table()?;
    let res = Resonator::from_log_x(cfg.moment_config().log_x(), &table)?;
    let x = res.x();
    let summary = res.summary(Some(x));
    let r = ResonatorReport {
        x: x.is_finite().then_some(x),
        primes: res.primes(),
        summary,
    };
    Ok(match cfg.format {
        Format::Json => json(&envelope("resonator", cfg, &r)),
        Format::Csv => {
            let s = &r.summary;
            format!(
                "{}log_x,lambda,support_lo,support_hi,prime_count,degenerate,alpha_default,sum_r_squared,log_euler_product\n\
                 {},{},{},{},{},{},{},{},{}\n",
                csv_preamble("resonator", cfg),
                s.log_x,
                s.lambda,
                s.support_lo,
                s.support_hi,
                s.prime_count,
                s.degenerate,
                s.alpha_default,
                opt_str(s.sum_r_squared),
                s.log_euler_product
            )
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub f: String,
    pub config_hash: String,
    pub report: MomentReport,
}

pub fn sweep_rows(cfgs: &[RunConfig]) -> Result<Vec<SweepRow>> {
    // rows are independent; collect keeps them in input order
    cfgs.par_iter()
        .map(|cfg| {
            Ok(SweepRow {
                seed: cfg.seed,
                f: cfg.f.clone(),
                config_hash: cfg.hash(),
                report: certify_report(cfg)?,
            })
        })
        .collect()
}

pub fn cmd_sweep(cfgs: &[RunConfig]) -> std::result::Result<String, CliError> {
    let first = cfgs.first().ok_or_else(|| usage("empty sweep"))?;
    let rows = sweep_rows(cfgs)?;
    Ok(match first.format {
        Format::Json => json(&envelope("sweep", first, &rows)),
        Format::Csv => {
            let mut s = csv_preamble("sweep", first);
            s.push_str(&format!("seed,f,config_hash,{}\n", rows[0].report.csv_header()));
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    r.seed,
                    r.f,
                    r.config_hash,
                    r.report.csv_row()
                ));
            }
            s
        }
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> std::result::Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 {
                Ok(())
            } else {
                Err(CliError {
                    code: EXIT_USAGE,
                    message: String::new(),
                })
            };
        }
    };
    match cli.command {
        Command::Certify(flags) => {
            let cfg = resolve(&flags)?;
            emit(&cfg.out, &cmd_certify(&cfg)?)
        }
        Command::Search(sf) => {
            let mut cfg = resolve(&sf.common)?;
            if sf.lo.is_some() {
                cfg.search_lo = sf.lo;
            }
            if sf.hi.is_some() {
                cfg.search_hi = sf.hi;
            }
            cfg.guided |= sf.guided;
            emit(&cfg.out, &cmd_search(&cfg)?)
        }
        Command::Oracle(of) => {
            // T is optional here: without it only the diagonal checks run
            let with_t = of.common.t.is_some() || of.common.c.is_some();
            let mut flags = of.common.clone();
            if !with_t {
                flags.t = Some(1.0);
            }
            let cfg = resolve(&flags)?;
            emit(&cfg.out, &cmd_oracle(&cfg, &of, with_t)?)
        }
        Command::Resonator(flags) => {
            let cfg = resolve(&flags)?;
            emit(&cfg.out, &cmd_resonator(&cfg)?)
        }
        Command::Sweep(flags) => {
            let cfgs = resolve_sweep(&flags)?;
            emit(&cfgs[0].out, &cmd_sweep(&cfgs)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(n: &str, c: &str) -> Flags {
        Flags {
            n: Some(n.into()),
            c: Some(c.into()),
            ..Flags::default()
        }
    }

    #[test]
    fn resolve_applies_flags_over_defaults() {
        let mut fl = flags("100", "3");
        fl.f = Some("one".into());
        let cfg = resolve(&fl).unwrap();
        assert_eq!(cfg.n, 100);
        assert_eq!(cfg.c, Some(3.0));
        assert_eq!(cfg.f, "one");
        let mut bad = flags("100", "3");
        bad.t = Some(10.0);
        assert!(resolve(&bad).is_err());
        assert_eq!(resolve(&flags("1,2", "3")).unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn sweep_expands_in_order() {
        let mut fl = flags("10,20", "3");
        fl.seed = Some("1,2,3".into());
        let cfgs = resolve_sweep(&fl).unwrap();
        assert_eq!(cfgs.len(), 6);
        assert_eq!((cfgs[0].n, cfgs[0].seed), (10, 1));
        assert_eq!((cfgs[5].n, cfgs[5].seed), (20, 3));
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::invalid("x")).code, EXIT_USAGE);
        assert_eq!(CliError::from(Error::resource("x")).code, EXIT_RESOURCE);
        assert_eq!(run(["resonance", "certify"]).unwrap_err().code, EXIT_USAGE);
        assert_eq!(run(["resonance", "bogus"]).unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn trace_path_is_sibling() {
        assert_eq!(
            trace_path(Path::new("/tmp/a.csv")),
            PathBuf::from("/tmp/a.csv.trace.csv")
        );
    }
}
