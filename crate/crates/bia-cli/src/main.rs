//! `bia` — command-line front end for the blind interference alignment
//! workbench.
//!
//! Every subcommand resolves problems and schemes from built-in names or
//! JSON files, writes its artifact to stdout (or `--out`), and keeps the
//! human-readable summary on stderr. Stochastic commands require a seed
//! (`--seed` or the `BIA_SEED` environment variable) so that identical
//! invocations produce byte-identical artifacts.
//!
//! Exit codes: 0 on success, 1 when `verify` rejects a scheme, 2 on usage
//! or input errors.

use bia_core::channel::{sample_channels, FadingSpec};
use bia_core::gic::{self, CodedMessage, GICProblem, HalfDofVerdict};
use bia_core::net::{self, CBProblem, Direction};
use bia_core::scheme::{self, LinearScheme, Schedule};
use bia_core::verify::{self, DEFAULT_TOLERANCE};
use bia_core::{bounds, sim, Error, Rat, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bia", version, about = "Blind interference alignment workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a built-in network problem as JSON.
    GenTopology {
        /// Built-in name: four_cell_downlink[_merged], four_cell_uplink[_merged],
        /// linear_kK, square_RxC, hex_RxC, macro_femto, or duk_D_U_K.
        #[arg(long)]
        family: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct a built-in scheme for a problem and emit it as JSON.
    BuildScheme {
        /// Problem name or JSON file path.
        #[arg(long)]
        problem: String,
        /// Scheme name (coherent, iid, aligned_reuse, conventional_reuse,
        /// duk, interference_diversity) or a scheme JSON file path.
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scheme with the rank verifier and report achieved DoF.
    Verify {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        scheme: String,
        /// Coherence block length in slots.
        #[arg(long)]
        tau: usize,
        #[arg(long, default_value_t = 20)]
        draws: usize,
        #[arg(long, env = "BIA_SEED")]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Also run the exact rational oracle this many times.
        #[arg(long)]
        exact_trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute converse DoF bounds (sum, per message, per cell) by exact LP.
    Bound {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best interference-free (orthogonal scheduling) value.
    Orthogonal {
        #[arg(long)]
        problem: String,
        #[arg(long, value_enum)]
        objective: Objective,
        /// Also write the optimizing schedule as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Map a network problem to its Gaussian index coding problem.
    MapCbGic {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expand an index coding problem into a one-transmitter-per-message
    /// network problem.
    MapGicCb {
        /// Index coding problem name (five_unicast, or any problem built-in
        /// taken through its index coding form) or a JSON file path.
        #[arg(long)]
        gic: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether every message can reach 1/2 DoF simultaneously.
    HalfDof {
        #[arg(long)]
        gic: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a message-level XOR plan against an index coding problem.
    XorCheck {
        #[arg(long)]
        gic: String,
        /// Inline plan, e.g. "Wab=a2+b1,Wac=a1+c1".
        #[arg(long, conflicts_with = "plan_file")]
        plan: Option<String>,
        /// JSON plan: [{"id": "...", "terms": ["...", ...]}, ...].
        #[arg(long)]
        plan_file: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo zero-forcing rates over an SNR sweep, as CSV.
    Simulate {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        tau: usize,
        /// Comma-separated SNR points in dB.
        #[arg(long, value_delimiter = ',', required = true)]
        snr: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        draws: usize,
        #[arg(long, env = "BIA_SEED")]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Swap transmitter and receiver roles of a problem.
    Reciprocal {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the whole scheme suite and print a summary table.
    Report {
        #[arg(long, env = "BIA_SEED")]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Sum,
    Symmetric,
}

impl From<Objective> for bounds::OrthoObjective {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Sum => bounds::OrthoObjective::Sum,
            Objective::Symmetric => bounds::OrthoObjective::Symmetric,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

// ─── Input resolution ────────────────────────────────────────────────────────

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
}

/// Prints a line to stdout, exiting quietly if the reader closed the pipe
/// (the `bia ... | head` case).
fn print_out(text: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout(), "{text}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(Error::InvalidParameter(format!("cannot write to stdout: {e}"))),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))),
        None => print_out(text),
    }
}

fn builtin_problem(name: &str) -> Result<CBProblem> {
    match name {
        "four_cell_downlink" => return net::make_four_cell(Direction::Downlink, false),
        "four_cell_downlink_merged" => return net::make_four_cell(Direction::Downlink, true),
        "four_cell_uplink" => return net::make_four_cell(Direction::Uplink, false),
        "four_cell_uplink_merged" => return net::make_four_cell(Direction::Uplink, true),
        "macro_femto" => return net::make_macro_femto(),
        _ => {}
    }
    if let Some(k) = name.strip_prefix("linear_k") {
        if let Ok(k) = k.parse() {
            return net::make_linear_array(k);
        }
    }
    type ArrayMaker = fn(usize, usize) -> Result<CBProblem>;
    for (prefix, make) in [
        ("square_", net::make_square_array as ArrayMaker),
        ("hex_", net::make_hex_array as ArrayMaker),
    ] {
        if let Some((rows, cols)) = name.strip_prefix(prefix).and_then(|dims| dims.split_once('x')) {
            if let (Ok(rows), Ok(cols)) = (rows.parse(), cols.parse()) {
                return make(rows, cols);
            }
        }
    }
    if let Some([d, u, k]) = parse_duk_name(name) {
        return net::make_symmetric_duk(d, u, k);
    }
    Err(Error::InvalidParameter(format!(
        "unknown problem {name}; built-ins are four_cell_downlink[_merged], \
         four_cell_uplink[_merged], linear_kK, square_RxC, hex_RxC, macro_femto, \
         and duk_D_U_K, or pass a JSON file path"
    )))
}

fn parse_duk_name(name: &str) -> Option<[usize; 3]> {
    let parts: Vec<usize> = name
        .strip_prefix("duk_")?
        .split('_')
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    parts.try_into().ok()
}

/// A problem given as a built-in name or a JSON file path.
fn resolve_problem(spec: &str) -> Result<CBProblem> {
    if Path::new(spec).is_file() {
        return net::load_problem(&read_file(Path::new(spec))?);
    }
    builtin_problem(spec)
}

/// An index coding problem given as a built-in name or a JSON file path.
/// Network built-ins are accepted through their index coding form.
fn resolve_gic(spec: &str) -> Result<GICProblem> {
    if Path::new(spec).is_file() {
        return gic::load_gic(&read_file(Path::new(spec))?);
    }
    match spec {
        "five_unicast" => Ok(gic::five_unicast_example()),
        other => Ok(gic::cb_to_gic(&builtin_problem(other)?)),
    }
}

/// Smallest horizon realizing every phase weight as whole slots.
fn schedule_denominator(s: &Schedule) -> Result<usize> {
    fn gcd(mut a: BigInt, mut b: BigInt) -> BigInt {
        while b != BigInt::from(0) {
            let r = &a % &b;
            a = std::mem::replace(&mut b, r);
        }
        a
    }
    let mut lcm = BigInt::from(1);
    for ph in &s.phases {
        let d = ph.weight.denom().clone();
        let g = gcd(lcm.clone(), d.clone());
        lcm = lcm / g * d;
    }
    usize::try_from(lcm)
        .map_err(|_| Error::InvalidParameter("schedule horizon does not fit in memory".into()))
}

fn schedule_as_scheme(sched: &Schedule, p: &CBProblem) -> Result<LinearScheme> {
    scheme::schedule_to_scheme(sched, p, schedule_denominator(sched)?)
}

/// A scheme given as a built-in name (interpreted against the problem) or a
/// JSON file path.
fn resolve_scheme(spec: &str, problem_spec: &str, p: &CBProblem) -> Result<LinearScheme> {
    if Path::new(spec).is_file() {
        let s = scheme::load_scheme(&read_file(Path::new(spec))?)?;
        s.validate(p)?;
        return Ok(s);
    }
    match spec {
        "coherent" => scheme::four_cell_downlink_coherent(p)
            .or_else(|_| scheme::four_cell_uplink_coherent(p)),
        "iid" => scheme::four_cell_downlink_iid(p).or_else(|_| scheme::four_cell_uplink_iid(p)),
        "aligned_reuse" => schedule_as_scheme(&scheme::aligned_reuse(p)?, p),
        "conventional_reuse" => schedule_as_scheme(&scheme::conventional_reuse(p)?, p),
        "duk" => {
            let Some([d, u, k]) = parse_duk_name(problem_spec) else {
                return Err(Error::InvalidParameter(
                    "the duk scheme needs its duk_D_U_K problem given by name".into(),
                ));
            };
            scheme::symmetric_duk_scheme(d, u, k)
        }
        "interference_diversity" => scheme::interference_diversity_scheme(p),
        other => Err(Error::InvalidParameter(format!(
            "unknown scheme {other}; built-ins are coherent, iid, aligned_reuse, \
             conventional_reuse, duk, and interference_diversity, or pass a JSON file path"
        ))),
    }
}

fn parse_inline_plan(text: &str) -> Result<Vec<CodedMessage>> {
    text.split(',')
        .map(|entry| {
            let (id, terms) = entry.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("plan entry {entry} is not of the form id=a+b"))
            })?;
            Ok(CodedMessage {
                id: id.trim().to_string(),
                terms: terms.split('+').map(|t| t.trim().to_string()).collect(),
            })
        })
        .collect()
}

// ─── Command dispatch ────────────────────────────────────────────────────────

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::GenTopology { family, out } => {
            emit(&net::store_problem(&builtin_problem(&family)?), &out)?;
        }
        Command::BuildScheme { problem, scheme: scheme_spec, out } => {
            let p = resolve_problem(&problem)?;
            let s = resolve_scheme(&scheme_spec, &problem, &p)?;
            emit(&scheme::store_scheme(&s), &out)?;
        }
        Command::Verify {
            problem,
            scheme: scheme_spec,
            tau,
            draws,
            seed,
            tolerance,
            exact_trials,
            out,
        } => {
            let p = resolve_problem(&problem)?;
            let s = resolve_scheme(&scheme_spec, &problem, &p)?;
            if tau == 0 || s.slots % tau != 0 {
                return Err(Error::InvalidParameter(format!(
                    "scheme horizon {} is not a positive multiple of coherence time {tau}",
                    s.slots
                )));
            }
            let base = FadingSpec { tau, ..FadingSpec::default_with_seed(seed) };
            let report = verify::verify_with_sampler(&p, &s, draws, tolerance, (tau, seed), |d| {
                let draw = FadingSpec { seed: seed.wrapping_add(d), ..base.clone() };
                sample_channels(&p, s.slots, &draw)
            })?;
            emit(&report.to_json(), &out)?;
            if let Some(trials) = exact_trials {
                let exact = verify::verify_exact(&p, &s, tau, trials)?;
                eprintln!("exact oracle ({trials} trials): {}", if exact { "pass" } else { "fail" });
                if exact != report.pass {
                    eprintln!("warning: exact oracle disagrees with the float verifier");
                }
            }
            if report.pass {
                eprintln!("pass: sum DoF {}", report.sum_dof);
            } else {
                eprintln!("FAIL: failing receivers {}", report.failing_receivers().join(", "));
                return Ok(ExitCode::from(1));
            }
        }
        Command::Bound { problem, out } => {
            let p = resolve_problem(&problem)?;
            emit(&bounds::converse_lp(&p)?.to_json(&p), &out)?;
        }
        Command::Orthogonal { problem, objective, out } => {
            let p = resolve_problem(&problem)?;
            let best = bounds::orthogonal_max(&p, objective.into())?;
            print_out(&best.value.to_string())?;
            if !best.proven_optimal {
                eprintln!("note: enumeration cap exceeded; value is a greedy lower bound");
            }
            if out.is_some() {
                let doc = serde_json::json!({
                    "value": best.value.to_string(),
                    "proven_optimal": best.proven_optimal,
                    "schedule": parsed(&scheme::store_schedule(&best.schedule)),
                });
                emit(&pretty(&doc), &out)?;
            }
        }
        Command::MapCbGic { problem, out } => {
            let p = resolve_problem(&problem)?;
            emit(&gic::store_gic(&gic::cb_to_gic(&p)), &out)?;
        }
        Command::MapGicCb { gic: gic_spec, out } => {
            let g = resolve_gic(&gic_spec)?;
            emit(&net::store_problem(&gic::gic_to_cb(&g)?), &out)?;
        }
        Command::HalfDof { gic: gic_spec, out } => {
            let g = resolve_gic(&gic_spec)?;
            match gic::half_dof_feasible(&g)? {
                HalfDofVerdict::Feasible { groups, scheme: s } => {
                    eprintln!("feasible: {} alignment groups", groups.len());
                    let doc = serde_json::json!({
                        "feasible": true,
                        "groups": groups,
                        "scheme": parsed(&scheme::store_scheme(&s)),
                    });
                    emit(&pretty(&doc), &out)?;
                }
                HalfDofVerdict::Infeasible { receiver, desired, interferer, chain } => {
                    eprintln!(
                        "infeasible: at receiver {receiver}, {desired} is chained to its own interferer {interferer}"
                    );
                    let doc = serde_json::json!({
                        "feasible": false,
                        "receiver": receiver,
                        "desired": desired,
                        "interferer": interferer,
                        "chain": chain,
                    });
                    emit(&pretty(&doc), &out)?;
                }
            }
        }
        Command::XorCheck { gic: gic_spec, plan, plan_file, out } => {
            let g = resolve_gic(&gic_spec)?;
            let plan = match (plan, plan_file) {
                (Some(text), None) => parse_inline_plan(&text)?,
                (None, Some(path)) => serde_json::from_str(&read_file(&path)?)
                    .map_err(|e| Error::Parse(format!("plan file: {e}")))?,
                _ => {
                    return Err(Error::InvalidParameter(
                        "provide exactly one of --plan or --plan-file".into(),
                    ))
                }
            };
            let report = gic::verify_xor_scheme(&g, &plan)?;
            eprintln!("total DoF {}", report.dof);
            let doc = serde_json::json!({
                "dof": report.dof,
                "delivered": report.delivered,
                "per_receiver": report.per_receiver,
            });
            emit(&pretty(&doc), &out)?;
        }
        Command::Simulate { problem, scheme: scheme_spec, tau, snr, draws, seed, out } => {
            let p = resolve_problem(&problem)?;
            let s = resolve_scheme(&scheme_spec, &problem, &p)?;
            let spec = FadingSpec { tau, ..FadingSpec::default_with_seed(seed) };
            let table = sim::simulate_rates(&p, &s, &spec, &snr, draws)?;
            emit(&sim::to_csv(&table), &out)?;
            let lo = snr.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = snr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                eprintln!(
                    "sum-rate slope {lo} dB -> {hi} dB: {:.3} DoF",
                    sim::estimate_dof(&table, lo, hi)?
                );
            }
        }
        Command::Reciprocal { problem, out } => {
            let p = resolve_problem(&problem)?;
            emit(&net::store_problem(&net::reciprocal(&p)?), &out)?;
        }
        Command::Report { seed } => report(seed)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn parsed(json: &str) -> serde_json::Value {
    serde_json::from_str(json).expect("artifact round-trips through JSON")
}

fn pretty(doc: &serde_json::Value) -> String {
    serde_json::to_string_pretty(doc).expect("document serializes")
}

// ─── Suite report ────────────────────────────────────────────────────────────

struct ReportRow {
    label: &'static str,
    claimed: Rat,
    verified: bool,
    bound: Option<Rat>,
    orthogonal: String,
}

fn report_row(
    label: &'static str,
    p: &CBProblem,
    s: &LinearScheme,
    tau: usize,
    seed: u64,
) -> Result<ReportRow> {
    let spec = FadingSpec { tau, ..FadingSpec::default_with_seed(seed) };
    let rep = verify::verify(p, s, &spec, 20)?;
    let bound = match bounds::converse_lp(p) {
        Ok(b) => Some(b.sum),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let best = bounds::orthogonal_max(p, bounds::OrthoObjective::Sum)?;
    let orthogonal = if best.proven_optimal {
        best.value.to_string()
    } else {
        format!(">={} (greedy)", best.value)
    };
    Ok(ReportRow { label, claimed: s.claimed_sum_dof(), verified: rep.pass, bound, orthogonal })
}

fn report(seed: u64) -> Result<()> {
    let mut rows = Vec::new();

    let dl = net::make_four_cell(Direction::Downlink, false)?;
    rows.push(report_row(
        "four-cell downlink, coherent (tau=3)",
        &dl,
        &scheme::four_cell_downlink_coherent(&dl)?,
        3,
        seed,
    )?);
    rows.push(report_row(
        "four-cell downlink, i.i.d. (tau=1)",
        &dl,
        &scheme::four_cell_downlink_iid(&dl)?,
        1,
        seed,
    )?);

    let ul = net::make_four_cell(Direction::Uplink, false)?;
    rows.push(report_row(
        "four-cell uplink, coherent (tau=3)",
        &ul,
        &scheme::four_cell_uplink_coherent(&ul)?,
        3,
        seed,
    )?);
    rows.push(report_row(
        "four-cell uplink, i.i.d. (tau=1)",
        &ul,
        &scheme::four_cell_uplink_iid(&ul)?,
        1,
        seed,
    )?);

    type ArrayEntry = (&'static str, Result<CBProblem>);
    let arrays: [ArrayEntry; 3] = [
        ("linear K=12, aligned reuse", net::make_linear_array(12)),
        ("square 5x5, aligned reuse", net::make_square_array(5, 5)),
        ("hex 7x7, aligned reuse", net::make_hex_array(7, 7)),
    ];
    for (label, p) in arrays {
        let p = p?;
        let s = schedule_as_scheme(&scheme::aligned_reuse(&p)?, &p)?;
        rows.push(report_row(label, &p, &s, 1, seed)?);
    }

    let ring_1 = net::make_symmetric_duk(1, 1, 5)?;
    rows.push(report_row(
        "symmetric (1,1,5) ring (tau=1)",
        &ring_1,
        &scheme::symmetric_duk_scheme(1, 1, 5)?,
        1,
        seed,
    )?);
    let ring_2 = net::make_symmetric_duk(2, 1, 5)?;
    rows.push(report_row(
        "symmetric (2,1,5) ring (tau=4)",
        &ring_2,
        &scheme::symmetric_duk_scheme(2, 1, 5)?,
        4,
        seed,
    )?);
    let overlay = net::make_macro_femto()?;
    rows.push(report_row(
        "macro/femto overlay, diversity (tau=3)",
        &overlay,
        &scheme::interference_diversity_scheme(&overlay)?,
        3,
        seed,
    )?);

    print_out(&format!(
        "{:<40} {:>8} {:>9} {:>9} {:>14}",
        "scheme", "claimed", "verified", "LP bound", "orthogonal"
    ))?;
    for row in &rows {
        print_out(&format!(
            "{:<40} {:>8} {:>9} {:>9} {:>14}",
            row.label,
            row.claimed.to_string(),
            if row.verified { "pass" } else { "FAIL" },
            row.bound.as_ref().map_or_else(|| "n/a".to_string(), Rat::to_string),
            row.orthogonal,
        ))?;
    }
    print_out(&format!(
        "\nnote: even with full transmitter cooperation the four-cell cluster is capped at {} total DoF.",
        bounds::four_cell_cooperation_bound()
    ))?;
    Ok(())
}
