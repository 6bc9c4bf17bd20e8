mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use cantor_core::algebraic::{certify_pisot, epsilon_constant, power_distance, IntPolynomial, Irreducibility, PisotVerdict};
use cantor_core::dimension::{cocycle_audit, correlation_integral, correlation_slope, dim_slope, CorrelationMethod, SlopeEstimate};
use cantor_core::diophantine::{find_lambda, verify_witness, FindConfig, WitnessList, WitnessRecord};
use cantor_core::lattice::{build_rotation, cover_tau, good_cover, tau_rel, PairParam, Skew, TauOptions};
use cantor_core::measures::CantorParam;
use cantor_core::real::{parse_rational, rpow, MAX_PREC};
use cantor_core::spectral::{c1_constant, from_recentred, mu_hat, pisot_scan, scan_csv, to_recentred, Freq, RecentredMeasure};
use cantor_core::{Error, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;
use serde_json::{json, Value};

use output::{bounded, f, real};

#[derive(Parser)]
#[command(name = "cantor", version, about = "Certified dimension and Fourier numerics for Cantor convolutions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// key=value file mirroring the long flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working precision in bits
    #[arg(long, global = true, env = "CANTOR_PRECISION", default_value_t = 128)]
    precision: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; written as <path>.partial and renamed when complete
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Meaning of --lambda: scaling of [0,1]-supported measures, or the
    /// recentred convention of the Fourier side
    #[arg(long, global = true, value_enum, default_value_t = Convention::Standard)]
    convention: Convention,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Convention {
    Standard,
    Recentred,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exact,
    Montecarlo,
}

#[derive(Args, Clone)]
struct PairArgs {
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    /// Rational lambda, or s=<rational> for lambda = e^s
    #[arg(long, default_value = "1")]
    lambda: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dimension slope of log tau_n (or log C(a^n)) against n log a
    Dim {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, value_parser = parse_range, default_value = "4..14")]
        n: (u32, u32),
        /// Relative enclosure width per level
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Table of tau_n enclosures
    Tau {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, value_parser = parse_range, default_value = "0..8")]
        n: (u32, u32),
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Ratios tau_{m+n}(s) / (tau_n(s) tau_m(R^n s)) over a skew grid
    CocycleAudit {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, value_parser = parse_range, default_value = "0..4")]
        m: (u32, u32),
        #[arg(long, value_parser = parse_range, default_value = "0..4")]
        n: (u32, u32),
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
        /// Skip levels projected to end after this many seconds (makes the
        /// set of computed entries timing-dependent)
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Fourier transforms of the recentred measures and their convolution
    Fourier {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: Option<String>,
        #[arg(long, default_value = "1")]
        lambda: String,
        /// Frequency pi * <rational>
        #[arg(long, conflicts_with = "xi")]
        xi_pi: Option<String>,
        /// Frequency <rational>
        #[arg(long)]
        xi: Option<String>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// |Phi(pi a^-N)| along a range of N or a witness list
    PisotScan {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_range, default_value = "8..16")]
        n: (u32, u32),
        /// JSON from find-lambda; its lambda and (n, m) pairs replace --lambda and --n
        #[arg(long)]
        witnesses: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Pisot certificate, power distances and the epsilon constant
    PisotCheck {
        /// Integer coefficients, constant term first
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long, default_value_t = 40)]
        n_max: u32,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Nested-interval construction of lambda with K witness pairs
    FindLambda {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long = "K", default_value_t = 3)]
        k: usize,
        /// Defaults to the epsilon constant of x - 1/b when 1/b is an integer
        #[arg(long)]
        eps: Option<String>,
        /// Open target interval lo,hi for lambda
        #[arg(long, default_value = "1/2,2")]
        target: String,
        #[arg(long, default_value_t = 0)]
        min_index: u32,
        #[arg(long, default_value_t = 4096)]
        search_bound: u32,
    },
    /// Monte-Carlo correlation integral C(a^n)
    Mc {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_range, default_value = "4")]
        n: (u32, u32),
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Also compute the certified value and compare within 4 sigma
        #[arg(long)]
        check_exact: bool,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Good-cover checks: 4^-1 tau_n <= sum_C eta(C)^2 <= 4 tau_n at random offsets
    Covers {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        /// Draw a fresh skew per trial instead of using --lambda
        #[arg(long)]
        random_skew: bool,
    },
}

fn parse_range(s: &str) -> std::result::Result<(u32, u32), String> {
    let t = s.trim();
    let (lo, hi) = match t.split_once("..") {
        Some((l, h)) => (l, h.strip_prefix('=').unwrap_or(h)),
        None => (t, t),
    };
    let lo: u32 = lo.trim().parse().map_err(|_| format!("invalid range start in {s:?} at byte 0"))?;
    let hi: u32 = hi.trim().parse().map_err(|_| format!("invalid range end in {s:?} at byte {}", t.find("..").map_or(0, |p| p + 2)))?;
    if hi < lo {
        return Err(format!("empty range {s:?}"));
    }
    Ok((lo, hi))
}

struct Artifact {
    body: String,
    complete: bool,
}

fn json_artifact(v: Value, complete: bool) -> Artifact {
    let mut body = serde_json::to_string_pretty(&v).expect("serializable");
    body.push('\n');
    Artifact { body, complete }
}

fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}

/// Skew in the standard convention for the pair in the order given.
fn standard_skew(pa: &CantorParam, pb: &CantorParam, text: &str, conv: Convention) -> Result<Skew> {
    let s = Skew::parse(text)?;
    Ok(match conv {
        Convention::Standard => s,
        Convention::Recentred => from_recentred(pa.a(), pb.a(), &s),
    })
}

struct Setup {
    pp: PairParam,
    skew: Skew,
    swapped: bool,
}

fn setup(p: &PairArgs, conv: Convention) -> Result<Setup> {
    let pa = CantorParam::parse(&p.a)?;
    let pb = CantorParam::parse(&p.b)?;
    let skew = standard_skew(&pa, &pb, &p.lambda, conv)?;
    let (pp, skew, swapped) = PairParam::normalized(pa, pb, skew)?;
    Ok(Setup { pp, skew, swapped })
}

fn default_eps(b: &Rational, precision: u32) -> Result<Rational> {
    let inv = Rational::from(b.recip_ref());
    if *inv.denom() != 1 || inv < 2 {
        return precondition(format!("no default epsilon for b = {b}; pass --eps"));
    }
    let k = inv.numer().to_i64().ok_or_else(|| Error::Precondition(format!("1/b = {inv} too large")))?;
    let cert = match certify_pisot(&IntPolynomial::from_i64(&[-k, 1])?, precision)? {
        PisotVerdict::Pisot(cert) => cert,
        PisotVerdict::Rejected(r) => return precondition(format!("x - {k} not certified Pisot: {r:?}")),
    };
    let e = epsilon_constant(&cert)?;
    match (e.is_point(), e.lo().to_rational()) {
        (true, Some(r)) => Ok(r),
        _ => precondition(format!("epsilon for x - {k} is not exact; pass --eps")),
    }
}

fn header(cmd: &str, st: &Setup, c: &Common) -> Value {
    json!({
        "schema": format!("cantor-{cmd}/1"),
        "a": st.pp.a().to_string(),
        "b": st.pp.b().to_string(),
        "swapped": st.swapped,
        "lambda": st.skew.to_string(),
        "lambda_enclosure": real(&st.skew.lambda(c.precision)),
        "seed": c.seed,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn slope_json(est: &SlopeEstimate) -> Value {
    json!({
        "q": est.q,
        "n_range": [est.n_range.0, est.n_range.1],
        "slope": { "value": est.slope, "stderr": est.stderr },
        "enclosure_slack": est.enclosure_slack,
        "levels": est.levels.iter().map(|l| json!({ "n": l.n, "lo": l.tau.lo, "hi": l.tau.hi })).collect::<Vec<_>>(),
        "unresolved": est.unresolved,
    })
}

fn run(cli: Cli) -> Result<Artifact> {
    let c = &cli.common;
    if c.precision < 53 || c.precision > MAX_PREC {
        return precondition(format!("precision {} must lie in [53, {MAX_PREC}]", c.precision));
    }
    let csv_only = |what: &str| -> Result<()> {
        if c.format == Format::Csv {
            return precondition(format!("{what} has no CSV form; use --format json"));
        }
        Ok(())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    match &cli.cmd {
        Cmd::Dim { pair, q, n, tol, method, samples } => {
            let st = setup(pair, c.convention)?;
            let est = match method {
                Method::Exact => {
                    let sc = build_rotation(&st.pp, None)?;
                    dim_slope(&st.pp, &sc, &st.skew, *q, *n, *tol)?
                }
                Method::Montecarlo => {
                    if *q != 2.0 {
                        return precondition("the Monte-Carlo slope is the correlation dimension, q = 2");
                    }
                    correlation_slope(&st.pp, &st.skew, *n, CorrelationMethod::MonteCarlo { samples: *samples }, &mut rng)?
                }
            };
            if c.format == Format::Csv {
                return Ok(Artifact { body: est.levels_csv(), complete: est.unresolved.is_empty() });
            }
            let m = if *method == Method::Exact { "exact" } else { "montecarlo" };
            let v = merge(header("dim", &st, c), slope_json(&est));
            let v = merge(v, json!({ "method": m, "dim_sum": real(st.pp.dim_sum()) }));
            Ok(json_artifact(v, est.unresolved.is_empty()))
        }
        Cmd::Tau { pair, q, n, tol } => {
            let st = setup(pair, c.convention)?;
            let sc = build_rotation(&st.pp, None)?;
            let mut rows = Vec::new();
            for k in n.0..=n.1 {
                rows.push(tau_rel(&st.pp, &sc, k, &st.skew, *q, *tol)?);
            }
            if c.format == Format::Csv {
                let mut s = String::from("# cantor tau v1\nn,q,lo,hi,extra_depth,occupied\n");
                for t in &rows {
                    s.push_str(&format!("{},{},{},{},{},{}\n", t.n, t.q, f(t.value.lo), f(t.value.hi), t.extra_depth, t.occupied));
                }
                return Ok(Artifact { body: s, complete: true });
            }
            let table: Vec<Value> = rows
                .iter()
                .map(|t| json!({ "n": t.n, "tau": bounded(&t.value), "extra_depth": t.extra_depth, "occupied": t.occupied }))
                .collect();
            Ok(json_artifact(merge(header("tau", &st, c), json!({ "q": q, "rel_tol": tol, "rows": table })), true))
        }
        Cmd::CocycleAudit { a, b, m, n, grid, tol, budget } => {
            let pp = PairParam::parse(a, b)?;
            let sc = build_rotation(&pp, None)?;
            let rep = cocycle_audit(&pp, &sc, *m, *n, *grid, *tol, budget.map(Duration::from_secs))?;
            if c.format == Format::Csv {
                let mut s = String::from("# cantor cocycle-audit v1\nm,n,s_index,s,wrapped,ratio_lo,ratio_hi,skipped\n");
                for e in &rep.entries {
                    let (lo, hi) = e.ratio.map(|r| (f(r.lo), f(r.hi))).unwrap_or_default();
                    let why = e.skipped.clone().unwrap_or_default().replace(',', ";");
                    s.push_str(&format!("{},{},{},{},{},{},{},{}\n", e.m, e.n, e.s_index, f(e.s), e.wrapped, lo, hi, why));
                }
                return Ok(Artifact { body: s, complete: rep.complete });
            }
            let entries: Vec<Value> = rep
                .entries
                .iter()
                .map(|e| {
                    json!({
                        "m": e.m, "n": e.n, "s_index": e.s_index, "s": e.s, "wrapped": e.wrapped,
                        "ratio": e.ratio.map(|r| bounded(&r)), "skipped": e.skipped,
                    })
                })
                .collect();
            let v = json!({
                "schema": "cantor-cocycle-audit/1",
                "a": pp.a().to_string(),
                "b": pp.b().to_string(),
                "beta": real(sc.beta()),
                "m_range": [m.0, m.1],
                "n_range": [n.0, n.1],
                "grid": grid,
                "rel_tol": tol,
                "max_a_upper": rep.max_a,
                "max_a_coarse_upper": rep.max_a_coarse,
                "stable_10pct": rep.stable(0.1),
                "complete": rep.complete,
                "entries": entries,
            });
            Ok(json_artifact(v, rep.complete))
        }
        Cmd::Fourier { a, b, lambda, xi_pi, xi, tol } => {
            csv_only("fourier")?;
            let pa = CantorParam::parse(a)?;
            let freq = match (xi_pi, xi) {
                (Some(q), None) => Freq::pi_times(parse_rational(q)?),
                (None, Some(x)) => Freq::Real(cantor_core::Real::from_rational(&parse_rational(x)?, c.precision)),
                _ => return precondition("give exactly one of --xi-pi and --xi"),
            };
            let ma = RecentredMeasure::from_param(&pa);
            let fa = mu_hat(&ma, &freq, *tol)?;
            let mut v = json!({
                "schema": "cantor-fourier/1",
                "a": pa.a().to_string(),
                "xi": real(&freq.enclosure(c.precision)),
                "mu_hat_a": { "value": real(&fa.value), "truncation": fa.truncation, "tail_log_bound": fa.tail, "exact_zero": fa.zero_flag },
            });
            if let Some(b) = b {
                let pb = CantorParam::parse(b)?;
                let given = Skew::parse(lambda)?;
                let rec = match c.convention {
                    Convention::Standard => to_recentred(pa.a(), pb.a(), &given),
                    Convention::Recentred => given,
                };
                let mb = RecentredMeasure::from_param(&pb);
                let fb = mu_hat(&mb, &freq.scale_skew(&rec), *tol)?;
                let prod = fa.mul(&fb);
                v = merge(
                    v,
                    json!({
                        "b": pb.a().to_string(),
                        "lambda_recentred": rec.to_string(),
                        "lambda_standard": from_recentred(pa.a(), pb.a(), &rec).to_string(),
                        "mu_hat_b": { "value": real(&fb.value), "truncation": fb.truncation, "tail_log_bound": fb.tail, "exact_zero": fb.zero_flag },
                        "phi": { "value": real(&prod.value), "abs": real(&prod.abs()), "sign_certified": !prod.indeterminate_sign() },
                    }),
                );
            }
            Ok(json_artifact(v, true))
        }
        Cmd::PisotScan { pair, n, witnesses, tol } => {
            let pa = CantorParam::parse(&pair.a)?;
            let pb = CantorParam::parse(&pair.b)?;
            let (lambda, rows): (Skew, Vec<(u32, Option<u32>)>) = match witnesses {
                Some(path) => {
                    let text =
                        std::fs::read_to_string(path).map_err(|e| Error::Precondition(format!("reading {}: {e}", path.display())))?;
                    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Precondition(format!("{}: {e}", path.display())))?;
                    let rec: WitnessRecord = serde_json::from_value(doc.get("witnesses").cloned().unwrap_or(doc))
                        .map_err(|e| Error::Precondition(format!("{}: {e}", path.display())))?;
                    let pp = PairParam::new(pa.clone(), pb.clone())?;
                    let list = WitnessList::from_record(&pp, &rec)?;
                    let rows = list.pairs.iter().map(|p| (p.n, Some(p.m))).collect();
                    (list.lambda, rows)
                }
                None => {
                    let given = Skew::parse(&pair.lambda)?;
                    let rec = match c.convention {
                        Convention::Standard => to_recentred(pa.a(), pb.a(), &given),
                        Convention::Recentred => given,
                    };
                    (rec, (n.0..=n.1).map(|k| (k, None)).collect())
                }
            };
            let out = pisot_scan(&pa, &pb, &lambda, &rows, *tol)?;
            if c.format == Format::Csv {
                return Ok(Artifact { body: scan_csv(&out), complete: true });
            }
            let rows: Vec<Value> = out
                .iter()
                .map(|r| {
                    json!({
                        "N": r.n, "M": r.m, "sigma": r.sigma.as_ref().map(real),
                        "phi1": real(&r.phi1.value), "phi2": real(&r.phi2.value), "phi_abs": real(&r.phi_abs),
                        "min_factor": r.min_factor.as_ref().map(real), "flagged": r.flagged,
                    })
                })
                .collect();
            let lower = out
                .iter()
                .filter(|r| r.m.is_some())
                .map(|r| r.phi_abs.lo_f64())
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));
            let v = json!({
                "schema": "cantor-pisot-scan/1",
                "a": pa.a().to_string(),
                "b": pb.a().to_string(),
                "lambda_recentred": lambda.to_string(),
                "lambda_enclosure": real(&lambda.lambda(c.precision)),
                "min_witness_lower_bound": lower,
                "rows": rows,
            });
            Ok(json_artifact(v, true))
        }
        Cmd::PisotCheck { poly, n_max, tol } => {
            csv_only("pisot-check")?;
            let (p, note) = parse_poly(poly)?;
            if let Some(n) = &note {
                eprintln!("note: {n}");
            }
            let irreducibility = match p.irreducibility() {
                Irreducibility::Irreducible => "irreducible".to_string(),
                Irreducibility::Reducible(w) => format!("reducible: {w}"),
                Irreducibility::Asserted => "asserted (degree above 4 is not checked)".to_string(),
            };
            let base = json!({
                "schema": "cantor-pisot-check/1",
                "poly": p.to_string(),
                "coefficients_constant_first": p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "order_note": note,
                "irreducibility": irreducibility,
                "precision": c.precision,
            });
            match certify_pisot(&p, c.precision)? {
                PisotVerdict::Rejected(r) => Ok(json_artifact(merge(base, json!({ "pisot": false, "reason": r.reason })), true)),
                PisotVerdict::Pisot(cert) => {
                    let mut table = Vec::new();
                    let mut all = true;
                    for k in 1..=*n_max {
                        let pd = power_distance(&cert, k)?;
                        all &= pd.bound_holds();
                        table.push(json!({
                            "n": k, "power_sum": pd.power_sum.to_string(), "dist": real(&pd.dist),
                            "conjugate_sum": real(&pd.conjugate_sum), "bound": real(&pd.bound), "holds": pd.bound_holds(),
                        }));
                    }
                    let eps = epsilon_constant(&cert)?;
                    let c1 = if cert.theta.gt_rational(&Rational::from(2)) { Some(real(&c1_constant(&cert, *tol)?)) } else { None };
                    let conj: Vec<Value> = cert
                        .conjugates
                        .iter()
                        .map(|d| json!({ "re": real(&d.box_re()), "im": real(&d.box_im()), "modulus": real(&d.modulus()) }))
                        .collect();
                    let v = merge(
                        base,
                        json!({
                            "pisot": true, "theta": real(&cert.theta), "r": cert.r, "gamma": real(&cert.gamma),
                            "conjugates": conj, "power_distance": table, "all_bounds_hold": all,
                            "epsilon": real(&eps), "c1": c1,
                        }),
                    );
                    Ok(json_artifact(v, true))
                }
            }
        }
        Cmd::FindLambda { a, b, k, eps, target, min_index, search_bound } => {
            csv_only("find-lambda")?;
            let pp = PairParam::parse(a, b)?;
            let eps = match eps {
                Some(e) => parse_rational(e)?,
                None => default_eps(pp.b(), c.precision)?,
            };
            let (lo, hi) = match target.split_once(',') {
                Some((l, h)) => (parse_rational(l)?, parse_rational(h)?),
                None => return Err(Error::Parse { input: target.clone(), position: target.len(), message: "expected lo,hi".into() }),
            };
            let cfg = FindConfig { min_index: *min_index, search_bound: *search_bound };
            let list = find_lambda(&pp, &eps, (&lo, &hi), *k, &cfg)?;
            let checks: Vec<Value> = list
                .pairs
                .iter()
                .map(|p| {
                    let w = verify_witness(&pp, &list.lambda, &eps, p.n, p.m);
                    json!({ "n": w.n, "m": w.m, "residual": real(&w.residual), "pass": w.pass })
                })
                .collect();
            let all = checks.iter().all(|c| c["pass"] == json!(true));
            let v = json!({
                "schema": "cantor-find-lambda/1",
                "a": pp.a().to_string(),
                "b": pp.b().to_string(),
                "convention": "recentred",
                "witnesses": list.to_record(),
                "lambda_standard": from_recentred(pp.a(), pp.b(), &list.lambda).to_string(),
                "intervals": list.intervals.iter().map(|(l, h)| [l.to_string(), h.to_string()]).collect::<Vec<_>>(),
                "verification": checks,
                "all_pass": all,
            });
            Ok(json_artifact(v, list.complete))
        }
        Cmd::Mc { pair, n, samples, check_exact, tol } => {
            csv_only("mc")?;
            let st = setup(pair, c.convention)?;
            let mut rows = Vec::new();
            let mut agree_all = true;
            for k in n.0..=n.1 {
                let mc = correlation_integral(&st.pp, &st.skew, k, CorrelationMethod::MonteCarlo { samples: *samples }, &mut rng)?;
                let mut row = json!({
                    "n": k, "radius": real(&cantor_core::Real::from_rational(&rpow(st.pp.a(), k), 64)),
                    "estimate": { "value": mc.estimate, "stderr": mc.stderr },
                });
                if *check_exact {
                    let ex = correlation_integral(&st.pp, &st.skew, k, CorrelationMethod::Exact { tol: *tol }, &mut rng)?;
                    let gap = (ex.bound.lo - mc.estimate).max(mc.estimate - ex.bound.hi).max(0.0);
                    let agree = gap <= 4.0 * mc.stderr;
                    agree_all &= agree;
                    row = merge(row, json!({ "exact": bounded(&ex.bound), "within_4_sigma": agree }));
                }
                rows.push(row);
            }
            let mut v = merge(header("mc", &st, c), json!({ "samples": samples, "rows": rows }));
            if *check_exact {
                v = merge(v, json!({ "all_agree": agree_all }));
            }
            Ok(json_artifact(v, true))
        }
        Cmd::Covers { pair, n_max, trials, tol, random_skew } => {
            let st = setup(pair, c.convention)?;
            let sc = build_rotation(&st.pp, None)?;
            let beta = sc.beta().lo_f64();
            let opts = TauOptions { rel: Some(*tol), tol: 0.0, ..TauOptions::default() };
            let mut rows = Vec::new();
            for _ in 0..*trials {
                let n = rng.gen_range(0..=*n_max);
                let skew = if *random_skew {
                    let num = (rng.gen_range(0.0..1.0) * beta * (1u64 << 30) as f64).floor() as i64;
                    Skew::from_log(Rational::from((num, 1i64 << 30)))
                } else {
                    st.skew.clone()
                };
                let frac = Rational::from((rng.gen_range(0..1u64 << 30), 1u64 << 30));
                let offset = rpow(st.pp.a(), n) * frac;
                let t = tau_rel(&st.pp, &sc, n, &skew, 2.0, *tol)?.value;
                let cv = cover_tau(&st.pp, &sc, n, &skew, &offset, &opts)?.value;
                let cover = good_cover(&st.pp, &sc, n, &skew, &offset)?;
                let holds = cv.lo >= t.hi / 4.0 && cv.hi <= 4.0 * t.lo;
                rows.push((n, skew, offset, t, cv, cover.certain.len(), cover.possible.len(), holds));
            }
            let all = rows.iter().all(|r| r.7);
            if c.format == Format::Csv {
                let mut s =
                    String::from("# cantor covers v1\nn,skew,offset,tau_lo,tau_hi,cover_lo,cover_hi,certain_cells,possible_cells,holds\n");
                for r in &rows {
                    s.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{}\n",
                        r.0,
                        r.1,
                        r.2,
                        f(r.3.lo),
                        f(r.3.hi),
                        f(r.4.lo),
                        f(r.4.hi),
                        r.5,
                        r.6,
                        r.7
                    ));
                }
                return Ok(Artifact { body: s, complete: true });
            }
            let table: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "n": r.0, "skew": r.1.to_string(), "offset": r.2.to_string(), "tau": bounded(&r.3),
                        "cover_sum": bounded(&r.4), "certain_cells": r.5, "possible_cells": r.6, "holds": r.7,
                    })
                })
                .collect();
            Ok(json_artifact(merge(header("covers", &st, c), json!({ "rel_tol": tol, "all_hold": all, "trials": table })), true))
        }
    }
}

/// Constant-first coefficients. A list whose constant-first reading is not
/// monic but whose reversed reading is, is taken leading-first.
fn parse_poly(text: &str) -> Result<(IntPolynomial, Option<String>)> {
    match IntPolynomial::parse(text) {
        Ok(p) => Ok((p, None)),
        Err(Error::Precondition(why)) => {
            let rev: Vec<&str> = text.split(',').rev().collect();
            match IntPolynomial::parse(&rev.join(",")) {
                Ok(p) => {
                    let note = format!("{text} is not monic constant-first; read leading-first as {p}");
                    Ok((p, Some(note)))
                }
                Err(_) => Err(Error::Precondition(why)),
            }
        }
        Err(e) => Err(e),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Precondition(_) | Error::Parse { .. } => 2,
        Error::PrecisionCap { .. } | Error::Unresolved(_) => 3,
    }
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cmd = Cli::command();
    let argv = match config::expand(argv, &cmd) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let matches = cmd.get_matches_from(argv);
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let out = cli.common.output.clone();
    match run(cli) {
        Ok(art) => match output::emit(out.as_deref(), &art.body, art.complete) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: writing output: {e}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
