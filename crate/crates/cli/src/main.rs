//! Command-line surface over the controllability toolkit. JSON in, JSON
//! out by default; CSV is reserved for the trajectory and orbit streams.
//! Exit codes: 0 success, 2 validation error, 3 numerical failure
//! (overflow, truncation, or a steering plan that did not converge).

use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use reach_core::algebra::{
    classify, exp_element, indefinite_form, inner_product, AlgebraElement, GroupElement,
};
use reach_core::canonical::{monotone_value, normalize_hyperbolic, reduce_single};
use reach_core::controllability::{
    omega_set, verdict_multi, verdict_single, verdict_single_bounded, Verdict,
};
use reach_core::morphisms::{hyperboloid_orbit, rho1_algebra, rho1_group, rho2_algebra, rho2_group};
use reach_core::representation::{build_rep, check_rep, coherent_state, transition_check};
use reach_core::simulator::{
    certify_monotone, propagate_with_substeps, random_schedules, reachable_sample,
    ControlSchedule,
};
use reach_core::steering::plan;
use reach_core::Error;

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Target {
    So21,
    Sl2r,
}

#[derive(Parser)]
#[command(
    name = "reach",
    version,
    about = "Controllability verdicts, certificates, exact simulation, and steering on SU(1,1)"
)]
struct Cli {
    /// Output format; csv applies to the simulate and orbit streams only
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for every randomized command
    #[arg(long, global = true, env = "REACH_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an algebra element by the sign of its indefinite form
    Classify {
        #[arg(long)]
        m: String,
    },
    /// Print both bilinear forms of a pair of algebra elements
    Forms {
        #[arg(long)]
        m: String,
        #[arg(long)]
        n: String,
    },
    /// Single-input controllability verdict with certificate
    Verdict {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Single-input verdict under the symmetric control bound |u| <= bound
    VerdictBounded {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        bound: f64,
    },
    /// Verdict for one to three control directions (repeat --b)
    VerdictMulti {
        #[arg(long)]
        a: String,
        #[arg(long = "b", required = true)]
        b: Vec<String>,
    },
    /// Solution set of the ellipticity quadratic with an interior witness
    Omega {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Frame angles taking a hyperbolic direction onto the K_y axis
    Normalize {
        #[arg(long)]
        b: String,
    },
    /// Reduce a single-input system to canonical (epsilon, a) form
    Canonical {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Map an algebra or group element into the 3x3 or 2x2 picture
    Map {
        #[arg(long, value_enum)]
        to: Target,
        #[arg(long)]
        algebra: Option<String>,
        #[arg(long)]
        group: Option<String>,
    },
    /// Push a base point along a one-parameter subgroup on the hyperboloid
    Orbit {
        #[arg(long)]
        generator: String,
        /// Base point as a JSON array [x, y, z] on either hyperboloid
        #[arg(long)]
        p0: String,
        #[arg(long, default_value_t = 6.283185307179586)]
        t_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Propagate a piecewise-constant schedule exactly on the group
    Simulate {
        #[arg(long)]
        a: String,
        #[arg(long = "b", required = true)]
        b: Vec<String>,
        #[arg(long)]
        schedule: String,
        /// Emit at least this many states per segment
        #[arg(long, default_value_t = 1)]
        substeps: usize,
    },
    /// Check the trapping function on canonical (epsilon, a) systems over
    /// seeded random schedules
    Certify {
        #[arg(long)]
        epsilon: f64,
        #[arg(long = "a")]
        a_param: f64,
        #[arg(long, default_value_t = 200)]
        schedules: usize,
        #[arg(long, default_value_t = 8)]
        segments: usize,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 2.0)]
        control_scale: f64,
    },
    /// Final states of seeded random schedules, with monotone values
    Sample {
        #[arg(long)]
        a: String,
        #[arg(long = "b", required = true)]
        b: Vec<String>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        segments: usize,
        #[arg(long, default_value_t = 5.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1.0)]
        control_scale: f64,
    },
    /// Plan a schedule steering the identity to a target group element
    Steer {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Build the truncated representation and print relation residuals
    Rep {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        n: usize,
        /// Fail (exit 3) when any interior residual exceeds 1e-10
        #[arg(long)]
        check: bool,
    },
    /// Apply the displacement exponential to the lowest weight state
    Coherent {
        /// Complex displacement, e.g. 0.3+0.1i
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        n: usize,
    },
    /// Compare group-level label transport against the truncated propagation
    Transition {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        schedule: String,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        n: usize,
    },
}

fn parse_algebra(s: &str, what: &str) -> Result<AlgebraElement, Error> {
    let m: AlgebraElement = serde_json::from_str(s).map_err(|e| {
        Error::InvalidInput(format!(
            "{what}: expected AlgebraElement JSON {{\"kx\":..,\"ky\":..,\"kz\":..}} ({e})"
        ))
    })?;
    if !m.is_finite() {
        return Err(Error::InvalidInput(format!("{what}: non-finite coefficients")));
    }
    Ok(m)
}

fn parse_group(s: &str, what: &str) -> Result<GroupElement, Error> {
    let x: GroupElement = serde_json::from_str(s).map_err(|e| {
        Error::InvalidInput(format!(
            "{what}: expected GroupElement JSON {{\"x1\":..,\"x2\":..,\"x3\":..,\"x4\":..}} ({e})"
        ))
    })?;
    x.validate(1e-6)
        .map_err(|_| Error::InvalidInput(format!("{what}: point is off the group quadric")))?;
    Ok(x)
}

fn parse_schedule(s: &str) -> Result<ControlSchedule, Error> {
    serde_json::from_str(s).map_err(|e| {
        Error::InvalidInput(format!(
            "schedule: expected {{\"segments\":[{{\"duration\":..,\"controls\":[..]}}]}} ({e})"
        ))
    })
}

fn parse_controls(b: &[String]) -> Result<Vec<AlgebraElement>, Error> {
    b.iter()
        .enumerate()
        .map(|(i, s)| parse_algebra(s, &format!("--b[{i}]")))
        .collect()
}

fn verdict_value(v: &Verdict) -> Value {
    let mut val = serde_json::to_value(v).expect("verdicts always serialize");
    if let Some(u) = v.witness() {
        val.as_object_mut()
            .expect("verdict serializes to an object")
            .insert("witness".into(), json!(u));
    }
    val
}

/// Print one output line; a closed pipe downstream ends the stream cleanly.
fn out_line(line: std::fmt::Arguments) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_fmt(line).and_then(|_| stdout.write_all(b"\n")) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: stdout: {e}");
        std::process::exit(3);
    }
}

fn emit(value: &Value) {
    out_line(format_args!(
        "{}",
        serde_json::to_string(value).expect("output serializes")
    ));
}

fn require_json(format: Format) -> Result<(), Error> {
    if format == Format::Csv {
        return Err(Error::InvalidInput(
            "--format csv applies only to simulate and orbit".into(),
        ));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Classify { m } => {
            require_json(cli.format)?;
            let m = parse_algebra(&m, "--m")?;
            let cls = classify(&m);
            let mut out = json!({ "kind": format!("{:?}", cls.kind), "form_value": cls.form_value });
            if m.norm() == 0.0 {
                out.as_object_mut()
                    .unwrap()
                    .insert("warning".into(), json!("zero element"));
            }
            emit(&out);
        }
        Command::Forms { m, n } => {
            require_json(cli.format)?;
            let m = parse_algebra(&m, "--m")?;
            let n = parse_algebra(&n, "--n")?;
            emit(&json!({
                "inner_product": inner_product(&m, &n),
                "indefinite_form": indefinite_form(&m, &n),
            }));
        }
        Command::Verdict { a, b } => {
            require_json(cli.format)?;
            let a = parse_algebra(&a, "--a")?;
            let b = parse_algebra(&b, "--b")?;
            emit(&verdict_value(&verdict_single(&a, &b)));
        }
        Command::VerdictBounded { a, b, bound } => {
            require_json(cli.format)?;
            let a = parse_algebra(&a, "--a")?;
            let b = parse_algebra(&b, "--b")?;
            let v = verdict_single_bounded(&a, &b, bound)?;
            let mut out = verdict_value(&v);
            out.as_object_mut().unwrap().insert("bound".into(), json!(bound));
            emit(&out);
        }
        Command::VerdictMulti { a, b } => {
            require_json(cli.format)?;
            let a = parse_algebra(&a, "--a")?;
            let bs = parse_controls(&b)?;
            emit(&verdict_value(&verdict_multi(&a, &bs)?));
        }
        Command::Omega { a, b } => {
            require_json(cli.format)?;
            let a = parse_algebra(&a, "--a")?;
            let b = parse_algebra(&b, "--b")?;
            emit(&serde_json::to_value(omega_set(&a, &b)?).unwrap());
        }
        Command::Normalize { b } => {
            require_json(cli.format)?;
            let b = parse_algebra(&b, "--b")?;
            emit(&serde_json::to_value(normalize_hyperbolic(&b)?).unwrap());
        }
        Command::Canonical { a, b } => {
            require_json(cli.format)?;
            let a = parse_algebra(&a, "--a")?;
            let b = parse_algebra(&b, "--b")?;
            emit(&serde_json::to_value(reduce_single(&a, &b)?).unwrap());
        }
        Command::Map { to, algebra, group } => {
            require_json(cli.format)?;
            let out = match (algebra, group, to) {
                (Some(s), None, Target::So21) => {
                    json!({ "to": "so21", "matrix": rho1_algebra(&parse_algebra(&s, "--algebra")?) })
                }
                (Some(s), None, Target::Sl2r) => {
                    json!({ "to": "sl2r", "matrix": rho2_algebra(&parse_algebra(&s, "--algebra")?) })
                }
                (None, Some(s), Target::So21) => {
                    json!({ "to": "so21", "matrix": rho1_group(&parse_group(&s, "--group")?)?.r })
                }
                (None, Some(s), Target::Sl2r) => {
                    json!({ "to": "sl2r", "matrix": rho2_group(&parse_group(&s, "--group")?)?.m })
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "map: provide exactly one of --algebra or --group".into(),
                    ))
                }
            };
            emit(&out);
        }
        Command::Orbit { generator, p0, t_max, steps } => {
            let gen = parse_algebra(&generator, "--generator")?;
            let p0: [f64; 3] = serde_json::from_str(&p0).map_err(|e| {
                Error::InvalidInput(format!("--p0: expected a JSON array [x, y, z] ({e})"))
            })?;
            if steps == 0 || !(t_max > 0.0) || !t_max.is_finite() {
                return Err(Error::InvalidInput(
                    "orbit: steps must be positive and t-max positive and finite".into(),
                ));
            }
            let times: Vec<f64> = (0..=steps)
                .map(|i| t_max * i as f64 / steps as f64)
                .collect();
            let path = times
                .iter()
                .map(|&t| rho1_group(&exp_element(&gen, t)))
                .collect::<Result<Vec<_>, _>>()?;
            let points = hyperboloid_orbit(&path, p0)?;
            match cli.format {
                Format::Csv => {
                    out_line(format_args!("t,x,y,z"));
                    for (t, p) in times.iter().zip(&points) {
                        out_line(format_args!("{t},{},{},{}", p[0], p[1], p[2]));
                    }
                }
                Format::Json => {
                    let rows: Vec<Value> = times
                        .iter()
                        .zip(&points)
                        .map(|(t, p)| json!({ "t": t, "x": p[0], "y": p[1], "z": p[2] }))
                        .collect();
                    emit(&json!({ "points": rows }));
                }
            }
        }
        Command::Simulate { a, b, schedule, substeps } => {
            let a = parse_algebra(&a, "--a")?;
            let bs = parse_controls(&b)?;
            let schedule = parse_schedule(&schedule)?;
            let traj = propagate_with_substeps(&a, &bs, &schedule, substeps.max(1))?;
            match cli.format {
                Format::Csv => {
                    out_line(format_args!("t,x1,x2,x3,x4,residual,monotone"));
                    for ((t, x), m) in traj.times.iter().zip(&traj.states).zip(&traj.monitors) {
                        out_line(format_args!(
                            "{t},{},{},{},{},{},{}",
                            x.x1, x.x2, x.x3, x.x4, m.residual, m.monotone
                        ));
                    }
                }
                Format::Json => emit(&serde_json::to_value(&traj).unwrap()),
            }
        }
        Command::Certify {
            epsilon,
            a_param,
            schedules,
            segments,
            horizon,
            control_scale,
        } => {
            require_json(cli.format)?;
            let batch = random_schedules(1, schedules, segments, horizon, control_scale, cli.seed)?;
            let report = certify_monotone(epsilon, a_param, &batch)?;
            let mut out = serde_json::to_value(report).unwrap();
            let obj = out.as_object_mut().unwrap();
            obj.insert("epsilon".into(), json!(epsilon));
            obj.insert("a".into(), json!(a_param));
            obj.insert("seed".into(), json!(cli.seed));
            emit(&out);
        }
        Command::Sample {
            a,
            b,
            count,
            segments,
            horizon,
            control_scale,
        } => {
            require_json(cli.format)?;
            let a = parse_algebra(&a, "--a")?;
            let bs = parse_controls(&b)?;
            let finals = reachable_sample(&a, &bs, count, segments, horizon, control_scale, cli.seed)?;
            let monotone: Vec<f64> = finals.iter().map(monotone_value).collect();
            emit(&json!({
                "seed": cli.seed,
                "states": finals,
                "monotone_values": monotone,
            }));
        }
        Command::Steer { a, b, target, bound, tol } => {
            require_json(cli.format)?;
            let a = parse_algebra(&a, "--a")?;
            let b = parse_algebra(&b, "--b")?;
            let target = parse_group(&target, "--target")?;
            let result = plan(&a, &b, &target, bound, tol, cli.seed)?;
            let mut out = serde_json::to_value(&result).unwrap();
            out.as_object_mut().unwrap().insert("seed".into(), json!(cli.seed));
            emit(&out);
            if !result.converged {
                return Err(Error::Numerical(format!(
                    "steer: best plan error {:.3e} exceeds tol {tol:.3e} (NotConverged)",
                    result.error
                )));
            }
        }
        Command::Rep { k, n, check } => {
            require_json(cli.format)?;
            let rep = build_rep(k, n)?;
            let res = check_rep(&rep);
            let mut out = serde_json::to_value(res).unwrap();
            let obj = out.as_object_mut().unwrap();
            obj.insert("k".into(), json!(k));
            obj.insert("n".into(), json!(n));
            emit(&out);
            let worst = res
                .raising_residual
                .max(res.ladder_interior_residual)
                .max(res.casimir_interior_residual);
            if check && worst > 1e-10 {
                return Err(Error::Numerical(format!(
                    "rep: interior residual {worst:.3e} exceeds 1e-10"
                )));
            }
        }
        Command::Coherent { alpha, k, n } => {
            require_json(cli.format)?;
            let alpha = Complex64::from_str(&alpha).map_err(|_| {
                Error::InvalidInput("--alpha: expected a complex number like 0.3+0.1i".into())
            })?;
            let state = coherent_state(alpha, k, n)?;
            emit(&serde_json::to_value(&state).unwrap());
        }
        Command::Transition { a, b, schedule, k, n } => {
            require_json(cli.format)?;
            let a = parse_algebra(&a, "--a")?;
            let b = parse_algebra(&b, "--b")?;
            let schedule = parse_schedule(&schedule)?;
            let report = transition_check(&a, &b, &schedule, k, n)?;
            emit(&serde_json::to_value(report).unwrap());
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(if e.is_validation() { 2 } else { 3 });
        }
    }
}
