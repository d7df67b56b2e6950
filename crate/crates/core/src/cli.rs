//! Command-line front end.
//!
//! Exit codes: 0 success, 1 other errors (including bad arguments),
//! 2 convex-order or domination violation, 3 malformed input file,
//! 4 a check or tolerance failed.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::barrier_sim::{compare, open_vs_closed, simulate_with, SimConfig, StopRule};
use crate::coupling::{
    barrier_family, check_lipschitz, check_martingale_lifted, check_monotone, check_shadow_property, check_two_graph,
    shadow_coupling_with, LiftedCoupling, SlabRule,
};
use crate::error::{Error, Result};
use crate::io;
use crate::lift::{Lift, LiftKind};
use crate::lp::{certify_optimal, CERTIFY_TOL};
use crate::measure::{leq_convex, leq_convex_positive, leq_diatomic, leq_stochastic, DiscreteMeasure};
use crate::shadow::shadow;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_ORDER: i32 = 2;
pub const EXIT_MALFORMED: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "shadow-coupling", version, about = "Shadow martingale couplings of atomic measures")]
pub struct Cli {
    /// Also write a run manifest here (commands with --out-dir always write
    /// one into that directory).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare two measures in the convex, convex-positive, stochastic and
    /// diatomic orders.
    CheckOrder {
        /// First measure (JSON).
        mu: PathBuf,
        /// Second measure (JSON).
        nu: PathBuf,
    },
    /// Shadow of SOURCE in TARGET, printed as measure JSON.
    Shadow {
        /// Target measure ν (JSON).
        target: PathBuf,
        /// Source measure (JSON).
        source: PathBuf,
        /// Write the shadow here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the shadow coupling; writes coupling.csv, lifted.csv,
    /// barrier.csv and lift.json.
    Couple {
        #[command(flatten)]
        input: CoupleInput,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run checks on a lifted coupling and print a JSON report.
    Verify {
        #[command(flatten)]
        input: CoupleInput,
        /// Lifted coupling CSV (u0,u1,x,y,mass); built from the lift when
        /// absent.
        #[arg(long)]
        coupling: Option<PathBuf>,
        /// Comma-separated subset of martingale,monotone,shadow,lipschitz,two-graph,
        /// optimal.
        #[arg(long, value_delimiter = ',', default_value = "martingale,monotone,shadow,optimal")]
        checks: Vec<String>,
        /// Tolerance for every check (defaults: martingale 1e-9, monotone
        /// 1e-6, shadow 1e-9, lipschitz 1e-6, two-graph 1e-9, optimal 1e-7).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Embed the coupling with its barrier by Monte Carlo; writes
    /// empirical.csv, barrier.csv and comparison.json.
    Simulate {
        #[command(flatten)]
        input: CoupleInput,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        /// Time step of the Gaussian walk.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
        /// Stopping rule: closed (touch) or open (strict entry).
        #[arg(long, default_value = "closed")]
        stop: StopRule,
        /// Also rerun the same paths under the other rule and report the
        /// distance.
        #[arg(long)]
        open_vs_closed: bool,
        /// Number of equal u-blocks in the per-slab comparison.
        #[arg(long, default_value_t = 16)]
        compare_slabs: usize,
        /// Largest accepted plane W1 distance to the constructed coupling.
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Debug)]
struct CoupleInput {
    /// First marginal μ (JSON).
    mu: PathBuf,
    /// Second marginal ν (JSON).
    nu: PathBuf,
    /// left-curtain, right-curtain, sunset, middle, or a lift JSON file.
    #[arg(long, default_value = "left-curtain")]
    lift: String,
    /// Approximate number of slabs; each lift piece is split into
    /// max(1, round(K / pieces)) parts.
    #[arg(long, default_value_t = 256)]
    slices: usize,
    /// Per-slab construction: exact (event splitting) or window.
    #[arg(long, default_value = "exact")]
    rule: SlabRule,
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Record of one run: rerunning with the same manifest inputs reproduces
/// the listed outputs byte for byte.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    inputs: Vec<FileDigest>,
    parameters: Value,
    seed: Option<u64>,
    version: &'static str,
    outputs: Vec<FileDigest>,
}

struct Run {
    manifest: RunManifest,
    out_dir: Option<PathBuf>,
    code: i32,
}

impl Run {
    fn new(command: &str, parameters: Value) -> Self {
        Run {
            manifest: RunManifest {
                command: command.into(),
                inputs: Vec::new(),
                parameters,
                seed: None,
                version: env!("CARGO_PKG_VERSION"),
                outputs: Vec::new(),
            },
            out_dir: None,
            code: EXIT_OK,
        }
    }

    fn input<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.manifest.inputs.push(FileDigest { path: path.display().to_string(), sha256: io::sha256_hex(&bytes) });
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        io::from_json(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn output_dir(&mut self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        self.out_dir = Some(dir.to_path_buf());
        Ok(())
    }

    fn emit(&mut self, path: &Path, contents: &str) -> Result<()> {
        io::write_file(path, contents)?;
        self.manifest
            .outputs
            .push(FileDigest { path: path.display().to_string(), sha256: io::sha256_hex(contents.as_bytes()) });
        Ok(())
    }

    fn emit_in_dir(&mut self, name: &str, contents: &str) -> Result<()> {
        let dir = self.out_dir.clone().ok_or_else(|| Error::Io("no output directory".into()))?;
        self.emit(&dir.join(name), contents)
    }

    /// Prints to stdout and records the digest under the name `-`.
    fn print(&mut self, contents: &str) {
        print!("{contents}");
        self.manifest.outputs.push(FileDigest { path: "-".into(), sha256: io::sha256_hex(contents.as_bytes()) });
    }

    fn finish(self, extra: Option<&Path>) -> Result<i32> {
        let text = io::to_json(&self.manifest)?;
        if let Some(dir) = &self.out_dir {
            io::write_file(&dir.join("manifest.json"), &text)?;
        }
        if let Some(p) = extra {
            io::write_file(p, &text)?;
        }
        Ok(self.code)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotInConvexOrder | Error::NotDominated | Error::OrderViolation(_) => EXIT_ORDER,
        Error::Parse(_) | Error::InvalidAtom(_) | Error::ZeroMass => EXIT_MALFORMED,
        Error::MaxStepsExceeded { .. } => EXIT_TOLERANCE,
        _ => EXIT_OTHER,
    }
}

fn load_lift(run: &mut Run, spec: &str, mu: &DiscreteMeasure) -> Result<Lift> {
    match spec.parse::<LiftKind>() {
        Ok(kind) => kind.build(mu),
        Err(_) => {
            let l: Lift = run.input(Path::new(spec))?;
            if !l.validate(mu) {
                return Err(Error::MassError(format!("lift {spec} does not have marginal mu")));
            }
            Ok(l)
        }
    }
}

struct Prepared {
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    lift: Lift,
    rule: SlabRule,
    k: usize,
}

fn prepare(run: &mut Run, input: &CoupleInput) -> Result<Prepared> {
    let mu: DiscreteMeasure = run.input(&input.mu)?;
    let nu: DiscreteMeasure = run.input(&input.nu)?;
    let lift = load_lift(run, &input.lift, &mu)?;
    if !leq_convex(&mu, &nu) {
        return Err(Error::NotInConvexOrder);
    }
    let k = ((input.slices as f64 / lift.len().max(1) as f64).round() as usize).max(1);
    Ok(Prepared { mu, nu, lift, rule: input.rule, k })
}

fn input_params(input: &CoupleInput) -> Value {
    json!({ "lift": input.lift, "slices": input.slices, "rule": format!("{:?}", input.rule).to_lowercase() })
}

fn build(p: &Prepared) -> Result<LiftedCoupling> {
    shadow_coupling_with(&p.lift, &p.nu, p.k, p.rule)
}

fn check_order(run: &mut Run, mu: &Path, nu: &Path) -> Result<()> {
    let a: DiscreteMeasure = run.input(mu)?;
    let b: DiscreteMeasure = run.input(nu)?;
    let convex = leq_convex(&a, &b);
    let report = json!({
        "convex": convex,
        "convex_positive": leq_convex_positive(&a, &b),
        "stochastic": leq_stochastic(&a, &b).ok(),
        "diatomic": leq_diatomic(&a, &b).ok(),
    });
    run.print(&io::to_json(&report)?);
    if !convex {
        run.code = EXIT_ORDER;
    }
    Ok(())
}

fn cmd_shadow(run: &mut Run, target: &Path, source: &Path, output: Option<&Path>) -> Result<()> {
    let nu: DiscreteMeasure = run.input(target)?;
    let src: DiscreteMeasure = run.input(source)?;
    let text = io::to_json(&shadow(&nu, &src)?)?;
    match output {
        Some(p) => run.emit(p, &text),
        None => {
            run.print(&text);
            Ok(())
        }
    }
}

fn couple(run: &mut Run, input: &CoupleInput, out_dir: &Path) -> Result<()> {
    let p = prepare(run, input)?;
    let lc = build(&p)?;
    let barrier = barrier_family(&p.lift, &p.nu, &lc.boundaries())?;
    run.output_dir(out_dir)?;
    run.emit_in_dir("coupling.csv", &io::coupling_csv(&lc.project())?)?;
    run.emit_in_dir("lifted.csv", &io::lifted_csv(&lc)?)?;
    run.emit_in_dir("barrier.csv", &io::barrier_csv(&barrier)?)?;
    run.emit_in_dir("lift.json", &io::to_json(&p.lift)?)
}

fn verify(
    run: &mut Run,
    input: &CoupleInput,
    coupling: Option<&Path>,
    checks: &[String],
    tol: Option<f64>,
) -> Result<()> {
    let p = prepare(run, input)?;
    let lc = match coupling {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            run.manifest.inputs.push(FileDigest { path: path.display().to_string(), sha256: io::sha256_hex(&bytes) });
            io::parse_lifted_csv(&String::from_utf8_lossy(&bytes))?
        }
        None => build(&p)?,
    };
    let mut report = serde_json::Map::new();
    let mut pass = true;
    for check in checks {
        let (value, ok) = match check.as_str() {
            "martingale" => {
                let r = check_martingale_lifted(&lc, tol.unwrap_or(1e-9));
                (json!(r), r.pass)
            }
            "monotone" => {
                let r = check_monotone(&lc, tol.unwrap_or(1e-6));
                (json!(r), r.pass)
            }
            "shadow" => {
                let r = check_shadow_property(&lc, &p.lift, &p.nu, tol.unwrap_or(1e-9))?;
                (json!(r), r.pass)
            }
            "lipschitz" => {
                let r = check_lipschitz(&lc.project(), tol.unwrap_or(1e-6))?;
                (json!(r), r.pass)
            }
            "two-graph" => {
                let r = check_two_graph(&lc, tol.unwrap_or(1e-9));
                (json!(r), r.pass)
            }
            "optimal" => {
                let r = certify_optimal(&lc, &p.lift, &p.nu, tol.unwrap_or(CERTIFY_TOL))?;
                (json!(r), r.pass)
            }
            other => return Err(Error::InvalidConfig(format!("unknown check {other:?}"))),
        };
        pass &= ok;
        report.insert(check.clone(), value);
    }
    report.insert("pass".into(), json!(pass));
    run.print(&io::to_json(&report)?);
    if !pass {
        run.code = EXIT_TOLERANCE;
    }
    Ok(())
}

struct SimArgs {
    cfg: SimConfig,
    stop: StopRule,
    open_vs_closed: bool,
    compare_slabs: usize,
    tol: f64,
}

fn cmd_simulate(run: &mut Run, input: &CoupleInput, a: &SimArgs, out_dir: &Path) -> Result<()> {
    a.cfg.validate()?;
    let p = prepare(run, input)?;
    let lc = build(&p)?;
    let barrier = barrier_family(&p.lift, &p.nu, &lc.boundaries())?;
    let sim = simulate_with(&p.lift, &barrier, &a.cfg, a.stop)?;
    let cmp = compare(&sim.lifted, &lc, a.compare_slabs)?;
    let barycenter = p.mu.barycenter()?;
    let mean_ok = (sim.mean - barycenter).abs() <= 3.0 * sim.std_error + 1e-12;
    let ovc = if a.open_vs_closed { Some(open_vs_closed(&p.lift, &barrier, &a.cfg)?) } else { None };
    let ovc_ok = ovc.as_ref().is_none_or(|r| r.plane_w1 <= a.tol);
    let pass = cmp.plane_w1 <= a.tol && mean_ok && ovc_ok;
    let report = json!({
        "comparison": cmp,
        "mean": sim.mean,
        "std_error": sim.std_error,
        "barycenter": barycenter,
        "failed_paths": sim.failed,
        "open_vs_closed": ovc,
        "tol": a.tol,
        "pass": pass,
    });
    run.output_dir(out_dir)?;
    run.emit_in_dir("empirical.csv", &io::lifted_csv(&sim.lifted)?)?;
    run.emit_in_dir("barrier.csv", &io::barrier_csv(&barrier)?)?;
    let text = io::to_json(&report)?;
    run.emit_in_dir("comparison.json", &text)?;
    print!("{text}");
    if !pass {
        run.code = EXIT_TOLERANCE;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    let manifest = cli.manifest.clone();
    let mut run;
    let result = match &cli.command {
        Command::CheckOrder { mu, nu } => {
            run = Run::new("check-order", json!({}));
            check_order(&mut run, mu, nu)
        }
        Command::Shadow { target, source, output } => {
            run = Run::new("shadow", json!({}));
            cmd_shadow(&mut run, target, source, output.as_deref())
        }
        Command::Couple { input, out_dir } => {
            run = Run::new("couple", input_params(input));
            couple(&mut run, input, out_dir)
        }
        Command::Verify { input, coupling, checks, tol } => {
            let mut params = input_params(input);
            params["checks"] = json!(checks);
            params["tol"] = json!(tol);
            run = Run::new("verify", params);
            verify(&mut run, input, coupling.as_deref(), checks, *tol)
        }
        Command::Simulate {
            input,
            paths,
            step,
            seed,
            max_steps,
            stop,
            open_vs_closed,
            compare_slabs,
            tol,
            out_dir,
        } => {
            let cfg = SimConfig { paths: *paths, step: *step, seed: *seed, max_steps: *max_steps };
            let mut params = input_params(input);
            params["sim"] = json!(cfg);
            params["stop"] = json!(stop);
            params["open_vs_closed"] = json!(open_vs_closed);
            params["compare_slabs"] = json!(compare_slabs);
            params["tol"] = json!(tol);
            run = Run::new("simulate", params);
            run.manifest.seed = Some(*seed);
            let args =
                SimArgs { cfg, stop: *stop, open_vs_closed: *open_vs_closed, compare_slabs: *compare_slabs, tol: *tol };
            cmd_simulate(&mut run, input, &args, out_dir)
        }
    };
    result?;
    run.finish(manifest.as_deref())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_OTHER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
