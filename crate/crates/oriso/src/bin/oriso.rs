//! Command-line front end: every pipeline of the library behind one batch
//! binary with JSON (and DOT) file I/O.
//!
//! Exit codes: 0 on success, 2 on a negative mathematical answer (not
//! divisible, no shift, no solution), 1 on errors of any other kind.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use oriso::curve::Curve;
use oriso::division::{divide_by_integer, divide_general, Divided};
use oriso::field::{Config, Tower};
use oriso::io;
use oriso::orientation::{action_word, enc, ideal_action, primitivise, twist, OrientedCurve};
use oriso::quadratic::{enumerate_class_group, QuadOrder};
use oriso::vectorisation::{
    hidden_shift_instance, solve_hidden_shift_bruteforce, vectorise, vectorise_effective,
    vectorise_same_orbit_with,
};
use oriso::volcano::{export_volcano, walk_to_crater};
use oriso::{Error, Result};

#[derive(Parser)]
#[command(name = "oriso", version, about = "oriented supersingular curves at desk scale")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Seed for all randomized draws.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Smoothness exponent: generator norms up to ceil(log^(2+epsilon)|disc|).
    #[arg(long, global = true, default_value_t = 1.0)]
    epsilon: f64,
    /// Worker count for the parallelizable phases.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Cap on extension degrees d of F_{p^(2d)}.
    #[arg(long = "max-ext-degree", global = true, default_value_t = 24)]
    max_ext_degree: u32,
    /// Kernel extraction handles degrees smooth over primes up to this cap.
    #[arg(long = "prime-cap", global = true, default_value_t = 64)]
    prime_cap: u64,
    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for graph commands.
    #[arg(long, global = true, default_value = "json")]
    format: Format,
    /// Re-check post-conditions before reporting success.
    #[arg(long, global = true, default_value_t = true, action = clap::ArgAction::Set)]
    verify: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Divide an isogeny chain by an integer.
    Divide {
        /// Chain JSON file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: u64,
    },
    /// Divide an isogeny by an isogeny: the psi with phi = psi o eta.
    DivideGeneral {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        eta: PathBuf,
    },
    /// Primitivise an orientation given by a curve and an endomorphism.
    Primitivise {
        /// JSON file: {"curve": <curve>, "theta": <expr>}.
        #[arg(long)]
        input: PathBuf,
    },
    /// Act on an oriented curve by an ideal given as a form "a,b,c".
    Act {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        form: String,
    },
    /// Find the ideal class sending one oriented curve to another.
    Vectorise {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
    /// Vectorise and materialize the connecting isogeny on a third curve.
    VectoriseEffective {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        f: PathBuf,
    },
    /// Volcano navigation.
    Volcano {
        #[command(subcommand)]
        sub: VolcanoCmd,
    },
    /// Enumerate the class group of a discriminant.
    Classgroup {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
    },
    /// Canonical encoding of an oriented isomorphism class.
    Enc {
        #[arg(long)]
        input: PathBuf,
    },
    /// Build a toy hidden-shift instance and solve it by brute force.
    HiddenShiftDemo {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long, default_value_t = 200)]
        cap: u64,
    },
}

#[derive(Subcommand)]
enum VolcanoCmd {
    /// Walk to the crater of the ell-volcano.
    Walk {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        ell: u64,
    },
    /// BFS export of the volcano component (JSON or DOT).
    Graph {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        ell: u64,
        #[arg(long = "depth-cap", default_value_t = 1)]
        depth_cap: u32,
        #[arg(long, default_value_t = 256)]
        budget: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((value, text)) => {
            let body = match text {
                Some(t) => t,
                None => serde_json::to_string_pretty(&value).expect("serializable") + "\n",
            };
            match &cli.global.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, body) {
                        eprintln!("{}", json!({"error": e.to_string()}));
                        return ExitCode::from(1);
                    }
                }
                None => print!("{body}"),
            }
            let negative = value.get("negative").and_then(Value::as_bool).unwrap_or(false);
            ExitCode::from(if negative { 2 } else { 0 })
        }
        Err(e) => {
            let code = match e {
                Error::NoShift | Error::NoSolution => 2,
                _ => 1,
            };
            eprintln!("{}", json!({"error": e.to_string()}));
            ExitCode::from(code)
        }
    }
}

fn read_json(path: &PathBuf) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn tower_for(g: &Global, p: u64) -> Tower {
    Tower::new(
        p,
        Config { ext_cap: g.max_ext_degree, prime_cap: g.prime_cap, ..Config::default() },
    )
}

fn prime_of(v: &Value) -> Result<u64> {
    v.get("p")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::InvalidInput("input lacks the field prime p".into()))
}

fn load_oriented(g: &Global, path: &PathBuf) -> Result<(Tower, OrientedCurve)> {
    let v = read_json(path)?;
    let tower = tower_for(g, prime_of(&v)?);
    let wire: io::OrientedWire = serde_json::from_value(v)?;
    let x = io::oriented_from_wire(&tower, &wire)?;
    Ok((tower, x))
}

fn parse_form(s: &str) -> Result<oriso::quadratic::QuadForm> {
    let parts: Vec<i128> = s
        .split(',')
        .map(|t| t.trim().parse::<i128>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("form must be \"a,b,c\", got {s}")))?;
    if parts.len() != 3 {
        return Err(Error::InvalidInput("form must have three coefficients".into()));
    }
    Ok(oriso::quadratic::QuadForm::new(parts[0], parts[1], parts[2]))
}

fn run(cli: &Cli) -> Result<(Value, Option<String>)> {
    let g = &cli.global;
    match &cli.command {
        Command::Divide { input, n } => {
            let v = read_json(input)?;
            let tower = tower_for(g, prime_of(&v)?);
            let wire: io::ChainWire = serde_json::from_value(v)?;
            let chain = io::chain_from_wire(&tower, &wire)?;
            match divide_by_integer(&chain.clone().into(), *n as u128)? {
                Divided::NotDivisible => Ok((
                    json!({
                        "schema": "oriso/divide-result/v1",
                        "result": "not_divisible",
                        "negative": true,
                    }),
                    None,
                )),
                Divided::Quotient(psi) => {
                    let mut verified = None;
                    if g.verify {
                        if !division_holds(&chain, &psi, *n as u128)? {
                            return Err(Error::InvalidInput(
                                "verification failed: n psi != phi on sample points".into(),
                            ));
                        }
                        verified = Some(true);
                    }
                    Ok((
                        json!({
                            "schema": "oriso/divide-result/v1",
                            "result": "quotient",
                            "degree": psi.degree().to_string(),
                            "chain": serde_json::to_value(io::chain_to_wire(&psi)?)?,
                            "verified": verified,
                        }),
                        None,
                    ))
                }
            }
        }
        Command::DivideGeneral { phi, eta } => {
            let pv = read_json(phi)?;
            let tower = tower_for(g, prime_of(&pv)?);
            let pw: io::ChainWire = serde_json::from_value(pv)?;
            let ew: io::ChainWire = serde_json::from_value(read_json(eta)?)?;
            let phi_c = io::chain_from_wire(&tower, &pw)?;
            let eta_c = io::chain_from_wire(&tower, &ew)?;
            match divide_general(&phi_c, &eta_c)? {
                Divided::NotDivisible => Ok((
                    json!({
                        "schema": "oriso/divide-result/v1",
                        "result": "not_divisible",
                        "negative": true,
                    }),
                    None,
                )),
                Divided::Quotient(psi) => Ok((
                    json!({
                        "schema": "oriso/divide-result/v1",
                        "result": "quotient",
                        "degree": psi.degree().to_string(),
                        "chain": serde_json::to_value(io::chain_to_wire(&psi)?)?,
                    }),
                    None,
                )),
            }
        }
        Command::Primitivise { input } => {
            let v = read_json(input)?;
            let tower = tower_for(g, prime_of(&v)?);
            let curve_w: io::CurveWire = serde_json::from_value(
                v.get("curve")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("missing curve".into()))?,
            )?;
            let theta_w: io::ExprWire = serde_json::from_value(
                v.get("theta")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("missing theta".into()))?,
            )?;
            let curve = io::curve_from_wire(&tower, &curve_w)?;
            let theta = io::expr_from_wire(&tower, &theta_w)?;
            let out = primitivise(&curve, &theta, None)?;
            if g.verify {
                out.verify()?;
            }
            Ok((
                json!({
                    "schema": "oriso/primitivise-result/v1",
                    "disc": out.orientation.order.disc.to_string(),
                    "oriented": serde_json::to_value(io::oriented_to_wire(&out)?)?,
                    "key": enc(&out)?.hex(),
                }),
                None,
            ))
        }
        Command::Act { input, form } => {
            let (_, x) = load_oriented(g, input)?;
            let f = parse_form(form)?;
            let y = ideal_action(&x, &f)?;
            if g.verify {
                y.verify()?;
            }
            Ok((
                json!({
                    "schema": "oriso/act-result/v1",
                    "form": {"a": f.a.to_string(), "b": f.b.to_string(), "c": f.c.to_string()},
                    "oriented": serde_json::to_value(io::oriented_to_wire(&y)?)?,
                    "key": enc(&y)?.hex(),
                }),
                None,
            ))
        }
        Command::Vectorise { x, y } => {
            let (_, xo) = load_oriented(g, x)?;
            let (_, yo) = load_oriented(g, y)?;
            let r = if g.threads > 1 {
                // parallel fill applies to the same-orbit search; fall back
                // to the orbit-dispatching solver when it fails
                vectorise_same_orbit_with(&xo, &yo, g.epsilon, g.seed, g.threads)
                    .or_else(|_| vectorise(&xo, &yo, g.epsilon, g.seed))?
            } else {
                vectorise(&xo, &yo, g.epsilon, g.seed)?
            };
            if g.verify {
                let base = if r.twisted { twist(&xo) } else { xo.clone() };
                let back = action_word(&base, &r.word)?;
                if enc(&back)? != enc(&yo)? {
                    return Err(Error::InvalidInput(
                        "verification failed: word does not connect the inputs".into(),
                    ));
                }
            }
            Ok((vectorisation_json(&r)?, None))
        }
        Command::VectoriseEffective { x, y, f } => {
            let (_, xo) = load_oriented(g, x)?;
            let (_, yo) = load_oriented(g, y)?;
            let (_, fo) = load_oriented(g, f)?;
            let (r, chain) = vectorise_effective(&xo, &yo, &fo, g.epsilon, g.seed)?;
            let mut out = vectorisation_json(&r)?;
            out["chain"] = serde_json::to_value(io::chain_to_wire(&chain)?)?;
            out["chain_degree"] = json!(chain.degree().to_string());
            Ok((out, None))
        }
        Command::Volcano { sub } => match sub {
            VolcanoCmd::Walk { input, ell } => {
                let (_, x) = load_oriented(g, input)?;
                let (top, transcript) = walk_to_crater(&x, *ell as u128)?;
                Ok((
                    json!({
                        "schema": "oriso/volcano-walk-result/v1",
                        "steps": transcript.steps.len(),
                        "degree": transcript.degree().to_string(),
                        "start": transcript.start.hex(),
                        "end": transcript.end.hex(),
                        "end_disc": top.orientation.order.disc.to_string(),
                        "oriented": serde_json::to_value(io::oriented_to_wire(&top)?)?,
                    }),
                    None,
                ))
            }
            VolcanoCmd::Graph { input, ell, depth_cap, budget } => {
                let (_, x) = load_oriented(g, input)?;
                let graph = export_volcano(&x, *ell as u128, *depth_cap, *budget)?;
                if g.format == Format::Dot {
                    return Ok((
                        json!({"schema": "oriso/volcano-graph/dot"}),
                        Some(graph.to_dot()),
                    ));
                }
                Ok((graph.to_json(), None))
            }
        },
        Command::Classgroup { disc } => {
            let order = QuadOrder::from_disc(*disc as i128)?;
            let cg = enumerate_class_group(&order, 1_000_000)?;
            Ok((
                json!({
                    "schema": "oriso/classgroup-result/v1",
                    "disc": disc.to_string(),
                    "h": cg.h().to_string(),
                    "elements": cg.elements.iter().map(|f| json!({
                        "a": f.a.to_string(), "b": f.b.to_string(), "c": f.c.to_string(),
                    })).collect::<Vec<_>>(),
                    "decomposition": cg.decomposition.iter().map(|(f, n)| json!({
                        "generator": {
                            "a": f.a.to_string(), "b": f.b.to_string(), "c": f.c.to_string(),
                        },
                        "order": n.to_string(),
                    })).collect::<Vec<_>>(),
                }),
                None,
            ))
        }
        Command::Enc { input } => {
            let (_, x) = load_oriented(g, input)?;
            let key = enc(&x)?;
            if g.verify && enc(&x)? != key {
                return Err(Error::InvalidInput("verification failed: enc is unstable".into()));
            }
            Ok((
                json!({
                    "schema": "oriso/enc-result/v1",
                    "disc": x.orientation.order.disc.to_string(),
                    "key": key.hex(),
                }),
                None,
            ))
        }
        Command::HiddenShiftDemo { x, y, cap } => {
            let (_, xo) = load_oriented(g, x)?;
            let (_, yo) = load_oriented(g, y)?;
            let inst = hidden_shift_instance(&xo, &yo, *cap as u128)?;
            let shift = solve_hidden_shift_bruteforce(&inst)?;
            if g.verify {
                for (v, key) in &inst.f1 {
                    if inst.f0.get(&inst.add(&shift, v)) != Some(key) {
                        return Err(Error::InvalidInput(
                            "verification failed: shift identity does not hold".into(),
                        ));
                    }
                }
            }
            Ok((
                json!({
                    "schema": "oriso/hidden-shift-result/v1",
                    "group": inst.group.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
                    "shift": shift,
                    "group_order": inst.group_order().to_string(),
                }),
                None,
            ))
        }
    }
}

fn vectorisation_json(r: &oriso::vectorisation::VectorisationResult) -> Result<Value> {
    Ok(json!({
        "schema": "oriso/vectorise-result/v1",
        "ideal": {
            "a": r.ideal.a.to_string(),
            "b": r.ideal.b.to_string(),
            "c": r.ideal.c.to_string(),
        },
        "word": r.word.iter().map(|(f, e)| json!({
            "form": {"a": f.a.to_string(), "b": f.b.to_string(), "c": f.c.to_string()},
            "exp": e,
        })).collect::<Vec<_>>(),
        "smooth_bound": r.smooth_bound,
        "prime_factor_count": r.prime_factor_count,
        "twisted": r.twisted,
        "transcript": serde_json::to_value(&r.transcript)?,
    }))
}

/// 20 deterministic sample points across two extension degrees.
fn division_holds(
    phi: &oriso::isogeny::IsogenyChain,
    psi: &oriso::isogeny::IsogenyChain,
    n: u128,
) -> Result<bool> {
    let e1: &Curve = &phi.domain;
    for d in [1u32, 2] {
        for pt in e1.sample_points(d, 10)? {
            if psi.evaluate(&pt.mul_i128(n as i128)?)? != phi.evaluate(&pt)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
