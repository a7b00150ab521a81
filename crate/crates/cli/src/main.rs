//! Command-line front end: simulation, privacy audits, tradeoff/bound
//! tables, constant-gap certification, and subpacketization tables.
//!
//! Exit codes: 0 on success (and PASS for audits/gap checks), 1 on a failed
//! check or runtime error, 2 on usage errors.

mod format;
mod records;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use privcache_core::audit::{
    audit_file_realizations, audit_privacy, AuditConfig, Example1Runner, PrivacyKeyRunner,
    Verdict,
};
use privcache_core::baselines::{virtual_user_points, Example1Params};
use privcache_core::bounds::{
    converse_sfr_exact, cutset_bound_exact, gap_report, nonprivate_curve, privacy_key_curve,
    r_d_exact, virtual_user_curve, GapReport,
};
use privcache_core::combin::{binom_u64, Subset};
use privcache_core::scheme::{
    simulate, split_library, uniform_residue, Library, SystemParams, Variant,
};
use privcache_core::FqVector;

use format::{
    binom_string, decimal, fraction, hex_symbols, parse_colluders, parse_demand_list,
    parse_rational,
};

#[derive(Parser)]
#[command(
    name = "privcache",
    about = "Coded caching with demand privacy against colluding users",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one placement/delivery/decode round and emit the run record
    Simulate(SimulateArgs),
    /// Emit the tradeoff and bound curves over a cache-size grid
    Tradeoff(TradeoffArgs),
    /// Exact privacy audit by exhaustive enumeration
    Audit(AuditArgs),
    /// Certify the constant-gap regime table numerically
    Gap(GapArgs),
    /// Subpacketization comparison table
    Subpacketization(SubpacketizationArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    t: usize,
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// File length in symbols; defaults to the subpacketization C(K,t)
    #[arg(long)]
    b: Option<usize>,
    #[arg(long, default_value = "sfr")]
    variant: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit demands, e.g. "1,0,0;0,1,0"; random when omitted
    #[arg(long)]
    demands: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TradeoffArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "0.01")]
    grid_step: String,
    /// csv or json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Append exact num/den columns to the CSV
    #[arg(long, default_value_t = false)]
    exact: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// privkey, privkey-sfr, privkey-lfr, or example1
    #[arg(long, default_value = "privkey")]
    scheme: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    t: usize,
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long)]
    b: Option<usize>,
    #[arg(long, default_value = "sfr")]
    variant: String,
    /// Cache size for the example1 baseline (rational, e.g. "0" or "3/2")
    #[arg(long, default_value = "0")]
    m: String,
    /// One colluder set as 1-based indices ("1,3", "none" for the empty
    /// set); audits every subset when omitted
    #[arg(long)]
    colluders: Option<String>,
    #[arg(long, default_value_t = privcache_core::audit::DEFAULT_AUDIT_BUDGET)]
    budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GapArgs {
    /// Single pair when both --n and --k are given; otherwise sweeps
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    #[arg(long, default_value_t = 12)]
    k_max: usize,
    /// sfr, lfr, or both
    #[arg(long, default_value = "both")]
    variant: String,
    #[arg(long, default_value = "0.01")]
    grid_step: String,
    /// text or json
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SubpacketizationArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A usage error (exit 2) as opposed to a failed check (exit 1).
struct UsageError(String);

impl<T: std::fmt::Display> From<T> for UsageError {
    fn from(e: T) -> Self {
        UsageError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Tradeoff(args) => cmd_tradeoff(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Gap(args) => cmd_gap(args),
        Command::Subpacketization(args) => cmd_subpacketization(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), UsageError> {
    match out {
        Some(path) => {
            std::fs::write(path, content).map_err(|e| UsageError(format!("{}: {e}", path.display())))
        }
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .map_err(|e| UsageError(e.to_string()))
        }
    }
}

fn parse_variant(s: &str) -> Result<Variant, UsageError> {
    s.parse::<Variant>().map_err(|e| UsageError(e.to_string()))
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, UsageError> {
    let variant = parse_variant(&args.variant)?;
    let b = args
        .b
        .unwrap_or(binom_u64(args.k as u64, args.t as u64) as usize);
    let params = SystemParams::new(args.n, args.k, args.t, args.q, b, variant)?;
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    // Draw order is fixed: files, then demands (when random), then keys.
    let library = Library::random(&params, &mut rng);
    let demands: Vec<FqVector> = match &args.demands {
        Some(list) => parse_demand_list(list)?
            .into_iter()
            .map(|v| FqVector::new(params.field(), v))
            .collect::<Result<_, _>>()?,
        None => random_demands(&params, &mut rng),
    };
    if demands.len() != params.k_users() {
        return Err(UsageError(format!(
            "expected {} demand vectors, got {}",
            params.k_users(),
            demands.len()
        )));
    }
    let run = simulate(&library, &demands, &mut rng)?;
    let sspace = params.signal_space();
    let record = records::RunRecord {
        params: records::ParamsRecord {
            n: args.n,
            k: args.k,
            t: args.t,
            q: args.q,
            b,
            variant: variant.as_str().to_string(),
        },
        seed: args.seed,
        demands: run.demands.iter().map(|d| d.as_raw().to_vec()).collect(),
        leaders: run.signal.leaders.iter().map(|&l| l + 1).collect(),
        queries: run
            .signal
            .queries
            .iter()
            .map(|q| q.as_raw().to_vec())
            .collect(),
        payload: run
            .signal
            .payload
            .iter()
            .map(|p| records::PayloadRecord {
                subset: sspace.get(p.rank).members().map(|u| u + 1).collect(),
                symbols: hex_symbols(&p.symbols),
            })
            .collect(),
        decoded_ok: run.decoded_ok,
        measured_load: fraction(&run.measured_load),
    };
    let mut json = serde_json::to_string_pretty(&record).expect("serializable record");
    json.push('\n');
    emit(&args.out, &json)?;
    Ok(if run.decoded_ok { 0 } else { 1 })
}

fn random_demands(params: &SystemParams, rng: &mut impl RngCore) -> Vec<FqVector> {
    (0..params.k_users())
        .map(|_| match params.variant() {
            Variant::Sfr => FqVector::unit(
                params.field(),
                params.n_files(),
                uniform_residue(rng, params.n_files() as u32) as usize,
            ),
            Variant::Lfr => {
                let vals = (0..params.n_files())
                    .map(|_| uniform_residue(rng, params.field().modulus()))
                    .collect();
                FqVector::new(params.field(), vals).expect("residues in range")
            }
        })
        .collect()
}

fn cmd_tradeoff(args: TradeoffArgs) -> Result<u8, UsageError> {
    if args.n < 2 || args.k < 2 {
        return Err(UsageError("need N >= 2 and K >= 2".into()));
    }
    let step = parse_rational(&args.grid_step)?;
    if !step.is_positive() {
        return Err(UsageError("grid step must be positive".into()));
    }
    let (n, k) = (args.n, args.k);
    let rf = privacy_key_curve(n, k, Variant::Sfr);
    let rl = privacy_key_curve(n, k, Variant::Lfr);
    let rc = nonprivate_curve(n, k);
    let vu = virtual_user_curve(n, k);
    let n_rat = BigRational::from_integer(BigInt::from(n));

    let mut rows: Vec<(BigRational, Vec<BigRational>)> = Vec::new();
    let mut i = 0u64;
    loop {
        let m = &step * BigRational::from_integer(BigInt::from(i));
        if m > n_rat {
            break;
        }
        let values = vec![
            rf.eval(&m).expect("grid point in range"),
            rl.eval(&m).expect("grid point in range"),
            converse_sfr_exact(&m, n, k),
            cutset_bound_exact(&m, n),
            rc.eval(&m).expect("grid point in range"),
            r_d_exact(&m, n, k).expect("grid point in range"),
            vu.eval(&m).expect("grid point in range"),
        ];
        rows.push((m, values));
        i += 1;
    }

    const COLUMNS: [&str; 7] = [
        "R_F",
        "R_L",
        "converse",
        "cutset",
        "r_C",
        "r_D",
        "virtual_user_envelope",
    ];
    let content = match args.format.as_str() {
        "csv" => {
            let mut out = String::from("M");
            for c in COLUMNS {
                out.push(',');
                out.push_str(c);
            }
            if args.exact {
                for c in COLUMNS {
                    out.push_str(&format!(",{c}_exact"));
                }
            }
            out.push('\n');
            for (m, values) in &rows {
                out.push_str(&decimal(m, 12));
                for v in values {
                    out.push(',');
                    out.push_str(&decimal(v, 12));
                }
                if args.exact {
                    for v in values {
                        out.push(',');
                        out.push_str(&fraction(v));
                    }
                }
                out.push('\n');
            }
            out
        }
        "json" => {
            let objs: Vec<serde_json::Value> = rows
                .iter()
                .map(|(m, values)| {
                    let mut obj = serde_json::Map::new();
                    obj.insert("M".into(), decimal(m, 12).into());
                    for (c, v) in COLUMNS.iter().zip(values) {
                        obj.insert((*c).into(), decimal(v, 12).into());
                    }
                    serde_json::Value::Object(obj)
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&objs).expect("serializable rows");
            s.push('\n');
            s
        }
        other => return Err(UsageError(format!("unknown format: {other}"))),
    };
    emit(&args.out, &content)?;
    Ok(0)
}

fn cmd_audit(args: AuditArgs) -> Result<u8, UsageError> {
    let (n, k) = (args.n, args.k);
    let colluder_sets = match &args.colluders {
        Some(list) => Some(vec![Subset::from_members(&parse_colluders(list, k)?)]),
        None => None,
    };
    let config = AuditConfig {
        colluder_sets,
        budget: args.budget,
    };

    enum Runner {
        PrivacyKey(Box<PrivacyKeyRunner>),
        Example1(Example1Runner),
    }
    impl Runner {
        fn report(
            &self,
            config: &AuditConfig,
        ) -> Result<privcache_core::audit::AuditReport, privcache_core::audit::AuditError>
        {
            match self {
                Runner::PrivacyKey(r) => audit_privacy(r.as_ref(), config),
                Runner::Example1(r) => audit_privacy(r, config),
            }
        }
        fn demand_label(&self, index: usize) -> String {
            match self {
                Runner::PrivacyKey(r) => r
                    .demand_vector(index)
                    .as_raw()
                    .iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
                Runner::Example1(_) => (index + 1).to_string(),
            }
        }
    }

    let scheme = args.scheme.as_str();
    let (runners, config_record): (Vec<Runner>, records::AuditConfigRecord) = match scheme {
        "privkey" | "privkey-sfr" | "privkey-lfr" => {
            let variant = match scheme {
                "privkey-sfr" => Variant::Sfr,
                "privkey-lfr" => Variant::Lfr,
                _ => parse_variant(&args.variant)?,
            };
            let b = args
                .b
                .unwrap_or(binom_u64(k as u64, args.t as u64) as usize);
            let params = SystemParams::new(n, k, args.t, args.q, b, variant)?;
            let runners = audit_file_realizations(n, b, args.q)
                .into_iter()
                .map(|files| {
                    Ok(Runner::PrivacyKey(Box::new(PrivacyKeyRunner::new(
                        split_library(files, &params)?,
                    ))))
                })
                .collect::<Result<Vec<_>, UsageError>>()?;
            let record = records::AuditConfigRecord {
                scheme: format!("privkey-{}", variant.as_str()),
                n,
                k,
                t: Some(args.t),
                q: Some(args.q),
                b,
                m: None,
                colluders: args.colluders.clone().unwrap_or_else(|| "all".into()),
                budget: args.budget,
                file_realizations: 3,
            };
            (runners, record)
        }
        "example1" => {
            let m = parse_rational(&args.m)?;
            let b = args.b.unwrap_or(1);
            let params = Example1Params::new(n, k, &m, b)?;
            let runners = audit_file_realizations(n, b, 2)
                .into_iter()
                .map(|files| Runner::Example1(Example1Runner::new(params, files)))
                .collect();
            let record = records::AuditConfigRecord {
                scheme: "example1".into(),
                n,
                k,
                t: None,
                q: None,
                b,
                m: Some(args.m.clone()),
                colluders: args.colluders.clone().unwrap_or_else(|| "all".into()),
                budget: args.budget,
                file_realizations: 3,
            };
            (runners, record)
        }
        other => return Err(UsageError(format!("unknown scheme: {other}"))),
    };

    let mut per_s: Vec<records::SetRecord> = Vec::new();
    let mut verdict = Verdict::Pass;
    let mut witness: Option<records::WitnessRecord> = None;
    let mut witness_tv = BigRational::zero();
    for (real_idx, runner) in runners.iter().enumerate() {
        let report = runner.report(&config)?;
        if report.verdict == Verdict::Fail {
            verdict = Verdict::Fail;
        }
        for set in &report.per_set {
            let s: Vec<usize> = set.colluders.members().map(|u| u + 1).collect();
            match per_s.iter_mut().find(|r| r.s == s) {
                Some(existing) => {
                    let existing_tv = parse_rational(&existing.tv_max).expect("own rendering");
                    if set.tv_max > existing_tv {
                        existing.tv_max = fraction(&set.tv_max);
                        existing.tv_max_float = set.tv_max.to_f64().unwrap_or(f64::NAN);
                    }
                    existing.mi = existing.mi.max(set.mi_bits);
                }
                None => per_s.push(records::SetRecord {
                    s,
                    tv_max: fraction(&set.tv_max),
                    tv_max_float: set.tv_max.to_f64().unwrap_or(f64::NAN),
                    mi: set.mi_bits,
                }),
            }
        }
        if let Some(w) = report.witness {
            if w.tv > witness_tv {
                witness_tv = w.tv.clone();
                witness = Some(records::WitnessRecord {
                    realization: real_idx,
                    s: w.colluders.members().map(|u| u + 1).collect(),
                    free_users: w.free_users.iter().map(|&u| u + 1).collect(),
                    demands_a: w.demands_a.iter().map(|&d| runner.demand_label(d)).collect(),
                    demands_b: w.demands_b.iter().map(|&d| runner.demand_label(d)).collect(),
                    tv: fraction(&w.tv),
                });
            }
        }
    }
    let record = records::AuditRecord {
        config: config_record,
        verdict: match verdict {
            Verdict::Pass => "PASS".into(),
            Verdict::Fail => "FAIL".into(),
        },
        per_s,
        witness,
    };
    let mut json = serde_json::to_string_pretty(&record).expect("serializable record");
    json.push('\n');
    emit(&args.out, &json)?;
    Ok(if verdict == Verdict::Pass { 0 } else { 1 })
}

fn cmd_gap(args: GapArgs) -> Result<u8, UsageError> {
    let step = parse_rational(&args.grid_step)?
        .to_f64()
        .filter(|s| *s > 0.0)
        .ok_or_else(|| UsageError("grid step must be positive".into()))?;
    let variants: Vec<Variant> = match args.variant.as_str() {
        "both" => vec![Variant::Sfr, Variant::Lfr],
        v => vec![parse_variant(v)?],
    };
    let pairs: Vec<(usize, usize)> = match (args.n, args.k) {
        (Some(n), Some(k)) => vec![(n, k)],
        (None, None) => (2..=args.n_max)
            .flat_map(|n| (2..=args.k_max).map(move |k| (n, k)))
            .collect(),
        _ => return Err(UsageError("pass both --n and --k, or neither".into())),
    };
    let mut reports: Vec<GapReport> = Vec::new();
    for &(n, k) in &pairs {
        for &variant in &variants {
            reports.push(gap_report(n, k, variant, step));
        }
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let content = match args.format.as_str() {
        "text" => {
            let mut out = String::new();
            for r in &reports {
                out.push_str(&format!(
                    "gap N={} K={} variant={} overall_max={:.6} {}\n",
                    r.n,
                    r.k,
                    r.variant.as_str(),
                    r.overall_max,
                    if r.pass { "PASS" } else { "FAIL" }
                ));
                for reg in &r.regimes {
                    out.push_str(&format!(
                        "  [{}] max_ratio={:.6} at M={:.2} bound={} {}\n",
                        reg.label,
                        reg.max_ratio,
                        reg.argmax_m,
                        reg.bound,
                        if reg.pass { "PASS" } else { "FAIL" }
                    ));
                }
            }
            out.push_str(&format!(
                "{} report(s), {}\n",
                reports.len(),
                if all_pass { "all PASS" } else { "FAILURES PRESENT" }
            ));
            out
        }
        "json" => {
            let recs: Vec<records::GapRecord> = reports
                .iter()
                .map(|r| records::GapRecord {
                    n: r.n,
                    k: r.k,
                    variant: r.variant.as_str().to_string(),
                    grid_step: r.grid_step,
                    regimes: r
                        .regimes
                        .iter()
                        .map(|reg| records::GapRegimeRecord {
                            regime: reg.label.to_string(),
                            m_lo: reg.m_lo,
                            m_hi: reg.m_hi,
                            bound: reg.bound,
                            max_ratio: reg.max_ratio,
                            argmax_m: reg.argmax_m,
                            points: reg.points,
                            pass: reg.pass,
                        })
                        .collect(),
                    overall_max: r.overall_max,
                    pass: r.pass,
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&recs).expect("serializable reports");
            s.push('\n');
            s
        }
        other => return Err(UsageError(format!("unknown format: {other}"))),
    };
    emit(&args.out, &content)?;
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_subpacketization(args: SubpacketizationArgs) -> Result<u8, UsageError> {
    let (n, k) = (args.n, args.k);
    if n < 2 || k < 2 {
        return Err(UsageError("need N >= 2 and K >= 2".into()));
    }
    let vu = virtual_user_points(n, k);
    let mut out = String::from("t,privacy_key_m,privacy_key_f,virtual_user_m,virtual_user_f\n");
    for (t, vu_point) in vu.iter().enumerate().take(k + 1) {
        let m_pk = BigRational::new(BigInt::from(k + t * (n - 1)), BigInt::from(k));
        let m_vu = &vu_point.m;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t,
            decimal(&m_pk, 6),
            binom_string(k as u64, t as u64),
            decimal(m_vu, 6),
            binom_string((k * n) as u64, t as u64),
        ));
    }
    match args.format.as_str() {
        "csv" => {}
        other => return Err(UsageError(format!("unknown format: {other}"))),
    }
    emit(&args.out, &out)?;
    Ok(0)
}
