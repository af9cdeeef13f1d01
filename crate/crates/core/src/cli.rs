//! Command-line front end. Exit codes: 0 pass, 1 identity failure, 2 numerical guard, 3 usage.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::backlund::{backlund_frechet_invariance_check, backlund_identity_check, backlund_order_eps_check};
use crate::frobenius::{theta_by_residue, FrobError, ThetaTable};
use crate::hamiltonian::{negative_recursion_check, positive_recursion_check};
use crate::lax::tau_symmetry_suite;
use crate::report::Report;
use crate::ring::RingElem;
use crate::simulator::{conserved_densities, integrate, Flow, IntegratorConfig, LatticeState, SimError};
use crate::superext::{odd_flow_commutativity_check, odd_lax_check, recursion_consistency_check, verify_ab};
use crate::virasoro::{virasoro_suite, Window};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_IDENTITY: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

pub const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "alh", version, about = "Extended Ablowitz-Ladik hierarchy: symbolic identities and lattice runs")]
pub struct Cli {
    /// Record wall time in the manifest; output is then no longer reproducible byte for byte.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// θ_{α,k} for a range of levels.
    Theta {
        #[arg(long)]
        alpha: u8,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        kmin: i64,
        #[arg(long, allow_negative_numbers = true)]
        kmax: i64,
        #[arg(long, value_enum, default_value_t = Method::Recursion)]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an identity suite.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Truncation order; each suite has its own default.
        #[arg(long)]
        order: Option<u32>,
        /// Virasoro window.
        #[arg(long, default_value_t = 12)]
        pmax: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a base flow on a periodic lattice.
    Simulate {
        #[arg(long = "N", default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = FlowArg::T20)]
        flow: FlowArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Init::Smooth)]
        init: Init,
        #[arg(long, default_value_t = 100)]
        cadence: usize,
        #[arg(long, default_value_t = 3)]
        hmax: i64,
        #[arg(long, default_value_t = 2)]
        qmax: u32,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Recursion,
    Residue,
    /// Both routes with a diff report.
    Cross,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    TauSymmetry,
    Recursion,
    Virasoro,
    Backlund,
    Super,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowArg {
    T20,
    T0m1,
}

impl From<FlowArg> for Flow {
    fn from(f: FlowArg) -> Flow {
        match f {
            FlowArg::T20 => Flow::T20,
            FlowArg::T0m1 => Flow::T0m1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Smooth,
    Random,
}

fn manifest(command: &str, parameters: Value, truncation: Value) -> Value {
    json!({
        "tool": "alh",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "parameters": parameters,
        "truncation": truncation,
    })
}

fn expr(label: String, e: &RingElem) -> Value {
    json!({ "label": label, "expression": e.to_string() })
}

struct Outcome {
    json: Value,
    code: i32,
    message: Option<String>,
}

fn theta_cmd(alpha: u8, kmin: i64, kmax: i64, method: Method) -> Outcome {
    let params = json!({ "alpha": alpha, "kmin": kmin, "kmax": kmax, "method": method });
    let trunc = json!({ "residue_depth": "k + 2" });
    let mut table = ThetaTable::new();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut mismatches = Vec::new();
    let mut code = EXIT_PASS;
    let mut message = None;
    for k in kmin..=kmax {
        let label = format!("({alpha},{k})");
        let rec = match method {
            Method::Residue => None,
            _ => match table.theta(alpha, k) {
                Ok(e) => Some(e),
                Err(FrobError::OutOfDomain(..)) | Err(FrobError::Unsupported(..)) => {
                    skipped.push(label);
                    continue;
                }
                Err(e) => {
                    return Outcome { json: Value::Null, code: EXIT_IDENTITY, message: Some(e.to_string()) };
                }
            },
        };
        let res = match method {
            Method::Recursion => None,
            _ => match theta_by_residue(alpha, k) {
                Ok(e) => Some(e),
                Err(_) => {
                    if method == Method::Residue {
                        skipped.push(label);
                        continue;
                    }
                    None
                }
            },
        };
        match (rec, res) {
            (Some(a), Some(b)) => {
                if !crate::frobenius::veq(&a, &b) {
                    code = EXIT_IDENTITY;
                    message.get_or_insert_with(|| format!("theta{label}: recursion {a} != residue {b}"));
                    mismatches.push(json!({ "label": label, "recursion": a.to_string(), "residue": b.to_string() }));
                }
                rows.push(expr(label, &a));
            }
            (Some(a), None) | (None, Some(a)) => rows.push(expr(label, &a)),
            (None, None) => skipped.push(label),
        }
    }
    let mut out = json!({
        "schema": SCHEMA,
        "manifest": manifest("theta", params, trunc),
        "thetas": rows,
        "skipped": skipped,
    });
    if method == Method::Cross {
        out["mismatches"] = Value::Array(mismatches);
    }
    Outcome { json: out, code, message }
}

fn default_order(suite: Suite) -> u32 {
    match suite {
        Suite::TauSymmetry | Suite::Recursion => 2,
        _ => 3,
    }
}

fn run_suite(suite: Suite, order: u32, pmax: i64) -> Result<Vec<Report>, String> {
    let n = order as i64;
    Ok(match suite {
        Suite::TauSymmetry => vec![tau_symmetry_suite(order, order).map_err(|e| e.to_string())?],
        Suite::Recursion => {
            let mut v: Vec<Report> = (1..=order).map(positive_recursion_check).collect();
            v.extend((1..order).map(negative_recursion_check));
            v
        }
        Suite::Virasoro => vec![virasoro_suite(n, Window { pmax }).map_err(|e| e.to_string())?],
        Suite::Backlund => vec![backlund_identity_check(), backlund_order_eps_check(), backlund_frechet_invariance_check()],
        Suite::Super => {
            let mut v = vec![verify_ab(order as usize + 2).map_err(|e| e.to_string())?];
            for j in 0..n {
                for k in j..n {
                    v.push(odd_flow_commutativity_check(j, k));
                }
            }
            v.push(odd_lax_check(order as usize).map_err(|e| e.to_string())?);
            v.extend((-1..n).map(recursion_consistency_check));
            v
        }
        Suite::All => {
            let mut v = Vec::new();
            for s in [Suite::TauSymmetry, Suite::Recursion, Suite::Virasoro, Suite::Backlund, Suite::Super] {
                v.extend(run_suite(s, default_order(s), pmax)?);
            }
            v
        }
    })
}

fn verify_cmd(suite: Suite, order: Option<u32>, pmax: i64) -> Outcome {
    let order_used = order.unwrap_or_else(|| default_order(suite));
    let params = json!({ "suite": suite, "order": order_used, "pmax": pmax });
    let trunc = json!({ "order": order_used, "virasoro_window": pmax });
    let reports = match run_suite(suite, order_used, pmax) {
        Ok(r) => r,
        Err(e) => return Outcome { json: Value::Null, code: EXIT_USAGE, message: Some(e) },
    };
    let failure = reports.iter().find_map(|r| r.first_failure().map(|c| (r.suite.clone(), c.clone())));
    let passed = failure.is_none();
    let out = json!({
        "schema": SCHEMA,
        "manifest": manifest("verify", params, trunc),
        "passed": passed,
        "reports": reports,
        "first_failure": failure.as_ref().map(|(s, c)| json!({ "suite": s, "check": c })),
    });
    let message = failure.map(|(s, c)| format!("{s}: {} failed\n  lhs: {}\n  rhs: {}", c.name, c.lhs, c.rhs));
    Outcome { json: out, code: if passed { EXIT_PASS } else { EXIT_IDENTITY }, message }
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(n: usize, dt: f64, steps: usize, flow: FlowArg, seed: u64, init: Init, cadence: usize, hmax: i64, qmax: u32, csv: Option<&PathBuf>) -> Outcome {
    let params = json!({
        "N": n, "dt": dt, "steps": steps, "flow": flow, "seed": seed, "init": init,
        "cadence": cadence, "csv": csv.map(|p| p.display().to_string()),
    });
    let trunc = json!({ "hmax": hmax, "qmax": qmax });
    if n < 3 {
        return Outcome { json: Value::Null, code: EXIT_USAGE, message: Some("N must be at least 3".into()) };
    }
    let state = match init {
        Init::Smooth => LatticeState::smooth(n, seed),
        Init::Random => LatticeState::random(n, seed),
    };
    let cfg = IntegratorConfig { dt, steps, cadence };
    let dens = conserved_densities(hmax, qmax);
    let run = match integrate(&state, flow.into(), &cfg, &dens) {
        Ok(r) => r,
        Err(e @ SimError::Config(_)) => return Outcome { json: Value::Null, code: EXIT_USAGE, message: Some(e.to_string()) },
        Err(e) => return Outcome { json: Value::Null, code: EXIT_NUMERIC, message: Some(e.to_string()) },
    };
    if let Some(path) = csv {
        let written = File::create(path).map_err(|e| e.to_string()).and_then(|f| run.write_csv(BufWriter::new(f)).map_err(|e| e.to_string()));
        if let Err(e) = written {
            return Outcome { json: Value::Null, code: EXIT_USAGE, message: Some(format!("{}: {e}", path.display())) };
        }
    }
    let drifts: serde_json::Map<String, Value> = run.drifts().into_iter().map(|(l, d)| (l, json!(d))).collect();
    let out = json!({
        "schema": SCHEMA,
        "manifest": manifest("simulate", params, trunc),
        "max_drift": run.max_drift(),
        "drift": drifts,
        "final_state": { "P": run.state.p, "Q": run.state.q },
    });
    Outcome { json: out, code: EXIT_PASS, message: None }
}

fn emit(json: &Value, path: Option<&PathBuf>, out: &mut dyn Write) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(json).expect("serializable") + "\n";
    match path {
        Some(p) => std::fs::write(p, text),
        None => out.write_all(text.as_bytes()),
    }
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_PASS;
        }
    };
    let start = Instant::now();
    let (outcome, path) = match &cli.command {
        Command::Theta { alpha, kmin, kmax, method, out } => {
            if kmin > kmax {
                (Outcome { json: Value::Null, code: EXIT_USAGE, message: Some("kmin > kmax".into()) }, out.clone())
            } else {
                (theta_cmd(*alpha, *kmin, *kmax, *method), out.clone())
            }
        }
        Command::Verify { suite, order, pmax, out } => (verify_cmd(*suite, *order, *pmax), out.clone()),
        Command::Simulate { n, dt, steps, flow, seed, init, cadence, hmax, qmax, csv, out } => {
            (simulate_cmd(*n, *dt, *steps, *flow, *seed, *init, *cadence, *hmax, *qmax, csv.as_ref()), out.clone())
        }
    };
    let Outcome { mut json, code, message } = outcome;
    if let Some(m) = &message {
        let _ = writeln!(err, "{m}");
    }
    if !json.is_null() {
        if cli.timing {
            json["manifest"]["wall_time_s"] = json!(start.elapsed().as_secs_f64());
        }
        if let Err(e) = emit(&json, path.as_ref(), out) {
            let _ = writeln!(err, "{e}");
            return EXIT_USAGE;
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["alh"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn theta_alpha2() {
        let (code, out, _) = call(&["theta", "--alpha", "2", "--kmax", "2"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema"], 1);
        assert!(v["thetas"].as_array().unwrap().iter().any(|t| t["label"] == "(2,1)"));
    }

    #[test]
    fn theta_negative_levels() {
        let (code, out, _) = call(&["theta", "--alpha", "0", "--kmin", "-2", "--kmax", "-1"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["thetas"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn cross_method_agrees() {
        let (code, out, _) = call(&["theta", "--method", "cross", "--alpha", "1", "--kmin", "1", "--kmax", "2"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["mismatches"].as_array().unwrap().is_empty());
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&["theta"]).0, EXIT_USAGE);
        assert_eq!(call(&["bogus"]).0, EXIT_USAGE);
        assert_eq!(call(&["theta", "--alpha", "1", "--kmin", "3", "--kmax", "1"]).0, EXIT_USAGE);
        assert_eq!(call(&["simulate", "--dt", "0"]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, EXIT_PASS);
    }

    #[test]
    fn verify_backlund() {
        let (code, out, _) = call(&["verify", "--suite", "backlund"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["passed"], true);
    }

    #[test]
    fn simulate_zero_steps_echoes_state() {
        let (code, out, _) = call(&["simulate", "--N", "8", "--steps", "0", "--seed", "4"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let s = LatticeState::smooth(8, 4);
        assert_eq!(v["final_state"]["P"], json!(s.p));
        assert_eq!(v["final_state"]["Q"], json!(s.q));
    }

    #[test]
    fn simulate_guard_exit() {
        let (code, _, err) = call(&["simulate", "--init", "random", "--seed", "7", "--cadence", "0"]);
        assert_eq!(code, EXIT_NUMERIC);
        assert!(err.contains("site"), "{err}");
    }
}
