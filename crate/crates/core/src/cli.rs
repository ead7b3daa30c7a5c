//! Command-line driver. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code: 0 on success (or a feasible credal
//! set), 2 when the credal set is empty, 1 on any error.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{load_config, Scenario, ScenarioConfig};
use crate::credal::{born_product_witness, feasibility, lower_upper, BoundsResult, FeasibilityCertificate};
use crate::events::parse_sset_pair;
use crate::report::{self, BoundsEntry, BranchEntry, FeasibilityEntry, RunReport, Timing, TypicalityEntry};
use crate::scenarios::{builtin, BUILTIN};
use crate::typicality::{typicality_report, verify_w11, TypicalityReport, W11Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

/// Threshold used by `typicality` when neither the flag nor the config sets one.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "iqp", version, about = "Credal sets, LP bounds and typicality checks for finite quantum systems")]
pub struct Cli {
    /// Scenario configuration file (JSON, schema iqp-config/1).
    #[arg(long, global = true, conflicts_with = "scenario")]
    pub config: Option<PathBuf>,
    /// Use a built-in scenario instead of a file.
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    /// Seed for vertex sampling; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for independent bound queries.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print Ψ(t) and label weights at every grid time.
    Simulate,
    /// Lower and upper probabilities of event expressions.
    Bounds {
        /// Event expression, e.g. "(t=0,{0}) & (t=1,{0})". Repeatable;
        /// defaults to the config's query events.
        #[arg(long)]
        event: Vec<String>,
    },
    /// Decide whether the credal set is empty and write the certificate.
    Feasibility,
    /// Typicality reports for s-set pairs.
    Typicality {
        /// Pair such as "(t=1,{0}),(t=2,{0})". Repeatable.
        #[arg(long)]
        pair: Vec<String>,
        /// Typicality ε; defaults to the config's rules.epsilon, then 1e-6.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Branch statistics and the two branch bounds on sampled vertices.
    Branch {
        /// Branch name; all declared branches when omitted.
        #[arg(long)]
        name: Option<String>,
        /// Tail threshold; overrides query.delta.
        #[arg(long)]
        delta: Option<f64>,
        /// Number of sampled vertices; overrides query.samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Print a built-in scenario configuration.
    Scenario {
        /// One of beam-splitter, mach-zehnder, spreading-packet, adversarial, leaky-branch.
        name: String,
        /// Write to this file instead of stdout.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run every query of the scenario and write all tables plus report.json.
    Report,
}

type Res<T> = Result<T, String>;

fn tag<E: Display>(module: &'static str) -> impl Fn(E) -> String {
    move |e| format!("{module}: {e}")
}

fn io<E: Display>(e: E) -> String {
    format!("io: {e}")
}

/// Parse `args` (including the program name) and run. Normal output goes to
/// `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn scenario_config(cli: &Cli) -> Res<ScenarioConfig> {
    match (&cli.config, &cli.scenario) {
        (Some(path), _) => load_config(path).map_err(tag("config")),
        (None, Some(name)) => builtin(name)
            .ok_or_else(|| format!("config: unknown scenario \"{name}\" (available: {})", BUILTIN.join(", "))),
        (None, None) => Err("config: pass --config <file> or --scenario <name>".into()),
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Res<i32> {
    if let Command::Scenario { name, file } = &cli.command {
        let cfg = builtin(name)
            .ok_or_else(|| format!("config: unknown scenario \"{name}\" (available: {})", BUILTIN.join(", ")))?;
        let json = cfg.to_json() + "\n";
        match file {
            Some(path) => std::fs::write(path, json).map_err(io)?,
            None => out.write_all(json.as_bytes()).map_err(io)?,
        }
        return Ok(EXIT_OK);
    }
    let cfg = scenario_config(cli)?;
    let sc = cfg.build().map_err(tag("config"))?;
    let seed = cli.seed.unwrap_or(cfg.query.seed);
    let jobs = cli.jobs.max(1);
    match &cli.command {
        Command::Simulate => simulate(&sc, &cli.out, out),
        Command::Bounds { event } => {
            let events = if event.is_empty() { cfg.query.events.clone() } else { event.clone() };
            if events.is_empty() {
                return Err("bounds: no --event given and the config declares none".into());
            }
            let rows = bounds(&sc, &events, jobs)?;
            for (e, b) in &rows {
                writeln!(out, "{e}: {:.6}, {:.6} ({})", b.lower, b.upper, report::status(b.status)).map_err(io)?;
            }
            write_file(&cli.out, "bounds.csv", &report::bounds_csv(&rows))?;
            Ok(EXIT_OK)
        }
        Command::Feasibility => {
            let (entry, code) = feasibility_step(&sc, &cli.out)?;
            print_feasibility(&entry, out)?;
            Ok(code)
        }
        Command::Typicality { pair, epsilon } => {
            let pairs = if pair.is_empty() { cfg.query.pairs.clone() } else { pair.clone() };
            if pairs.is_empty() {
                return Err("typicality: no --pair given and the config declares none".into());
            }
            let eps = epsilon.or(cfg.rules.epsilon).unwrap_or(DEFAULT_EPSILON);
            let rows = typicality(&sc, &pairs, eps)?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{}: weight {:.6}, relative distance {:.6}, ratio {:.6}, fires {}, {}",
                    r.pair.0, r.pair.1, r.weight, r.relative_distance, r.measured_ratio, r.qtr_fires, r.passes
                )
                .map_err(io)?;
            }
            write_file(&cli.out, "typicality.csv", &report::typicality_csv(&rows))?;
            Ok(EXIT_OK)
        }
        Command::Branch { name, delta, samples } => {
            let delta = delta.unwrap_or(cfg.query.delta);
            let samples = samples.unwrap_or(cfg.query.samples);
            let reports = branches(&sc, name.as_deref(), delta, samples, seed)?;
            for (n, r) in &reports {
                writeln!(
                    out,
                    "{n}: epsilon {:.3e}, delta {:.3e}, worst E(Y|S1) {:.9} vs {:.9} [{}], worst tail {:.9} vs {:.9} [{}]",
                    r.epsilon,
                    r.delta,
                    r.worst_expectation,
                    r.expectation_bound,
                    r.expectation_verdict,
                    r.worst_tail,
                    r.tail_bound,
                    r.tail_verdict
                )
                .map_err(io)?;
            }
            write_file(&cli.out, "branch.csv", &report::branch_csv(&reports))?;
            Ok(EXIT_OK)
        }
        Command::Report => full_report(&sc, seed, jobs, &cli.out, out),
        Command::Scenario { .. } => unreachable!("handled above"),
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Res<PathBuf> {
    std::fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| format!("io: {}: {e}", path.display()))?;
    Ok(path)
}

fn simulate(sc: &Scenario, dir: &Path, out: &mut dyn Write) -> Res<i32> {
    let sys = &sc.system;
    let mut rows = Vec::new();
    for t in 0..sys.n_times() {
        let psi = sys.evolve(t).map_err(tag("quantum"))?;
        writeln!(out, "t={t}").map_err(io)?;
        for (l, a) in psi.iter().enumerate() {
            let w = a.norm_sqr();
            writeln!(out, "  {:<12} {:>+.6} {:>+.6}i  weight {:.6}", sys.labels()[l], a.re, a.im, w).map_err(io)?;
            rows.push((t, l, a.re, a.im, w));
        }
    }
    write_file(dir, "states.csv", &report::states_csv(&rows))?;
    Ok(EXIT_OK)
}

/// Bounds for each event, computed on up to `jobs` threads; the result
/// order follows `events`.
pub fn bounds(sc: &Scenario, events: &[String], jobs: usize) -> Res<Vec<(String, BoundsResult)>> {
    let parsed = events
        .iter()
        .map(|e| sc.event(e).map_err(|x| format!("events: `{e}`: {x}")))
        .collect::<Res<Vec<_>>>()?;
    let solve = |i: usize| lower_upper(&sc.constraints, &parsed[i]).map_err(tag("credal"));
    let results: Vec<Res<BoundsResult>> = if jobs <= 1 || parsed.len() <= 1 {
        (0..parsed.len()).map(solve).collect()
    } else {
        let chunk = parsed.len().div_ceil(jobs);
        let idx: Vec<usize> = (0..parsed.len()).collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = idx
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(|&i| solve(i)).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("bound worker panicked")).collect()
        })
    };
    events
        .iter()
        .zip(results)
        .map(|(e, r)| r.map(|b| (e.clone(), b)))
        .collect()
}

fn feasibility_step(sc: &Scenario, dir: &Path) -> Res<(FeasibilityEntry, i32)> {
    let cs = &sc.constraints;
    write_file(dir, "constraints.csv", &report::constraints_csv(cs))?;
    let cert = feasibility(cs).map_err(tag("credal"))?;
    let verified = cert.verify(cs);
    Ok(match &cert {
        FeasibilityCertificate::Witness(p) => {
            let path = write_file(dir, "certificate.csv", &report::certificate_csv(p))?;
            (
                FeasibilityEntry {
                    feasible: true,
                    certificate: path.display().to_string(),
                    verified,
                    margin: None,
                    max_violation: Some(cs.max_violation(p)),
                },
                EXIT_OK,
            )
        }
        FeasibilityCertificate::Farkas(f) => {
            let path = write_file(dir, "farkas.csv", &report::farkas_csv(cs, f))?;
            (
                FeasibilityEntry {
                    feasible: false,
                    certificate: path.display().to_string(),
                    verified,
                    margin: Some(f.recompute_margin(&cs.space)),
                    max_violation: None,
                },
                EXIT_INFEASIBLE,
            )
        }
    })
}

fn print_feasibility(e: &FeasibilityEntry, out: &mut dyn Write) -> Res<()> {
    if e.feasible {
        writeln!(
            out,
            "feasible: witness {} (max violation {:.3e}, verified {})",
            e.certificate,
            e.max_violation.unwrap_or(0.0),
            e.verified
        )
    } else {
        writeln!(
            out,
            "infeasible: Farkas certificate {} (margin {:.9}, verified {})",
            e.certificate,
            e.margin.unwrap_or(f64::NAN),
            e.verified
        )
    }
    .map_err(io)
}

pub fn typicality(sc: &Scenario, pairs: &[String], eps: f64) -> Res<Vec<TypicalityReport>> {
    pairs
        .iter()
        .map(|p| {
            let (s1, s2) = parse_sset_pair(p, sc.space.m()).map_err(|e| format!("events: `{p}`: {e}"))?;
            typicality_report(&sc.system, &sc.constraints, &s1, &s2, eps).map_err(tag("typicality"))
        })
        .collect()
}

pub fn branches(
    sc: &Scenario,
    name: Option<&str>,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Res<Vec<(String, W11Report)>> {
    let chosen: Vec<_> = match name {
        Some(n) => vec![sc
            .branches
            .iter()
            .find(|(b, _)| b == n)
            .ok_or_else(|| format!("typicality: no branch named \"{n}\""))?],
        None => sc.branches.iter().collect(),
    };
    if chosen.is_empty() {
        return Err("typicality: the scenario declares no branches".into());
    }
    let product = born_product_witness(&sc.system, &sc.space);
    chosen
        .into_iter()
        .map(|(n, b)| {
            verify_w11(&sc.constraints, b, delta, samples, seed, std::slice::from_ref(&product))
                .map(|r| (n.clone(), r))
                .map_err(tag("typicality"))
        })
        .collect()
}

fn timed(step: &str, start: Instant) -> Timing {
    Timing {
        step: step.into(),
        millis: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn full_report(sc: &Scenario, seed: u64, jobs: usize, dir: &Path, out: &mut dyn Write) -> Res<i32> {
    let cfg = &sc.config;
    let mut rep = RunReport::new(&cfg.name, cfg.hash(), seed, &sc.space, &sc.constraints);

    let start = Instant::now();
    let (entry, code) = feasibility_step(sc, dir)?;
    rep.timings.push(timed("feasibility", start));
    print_feasibility(&entry, out)?;
    let feasible = entry.feasible;
    rep.feasibility = Some(entry);

    let start = Instant::now();
    let rows = bounds(sc, &cfg.query.events, jobs)?;
    rep.timings.push(timed("bounds", start));
    for (e, b) in &rows {
        writeln!(out, "{e}: {:.6}, {:.6}", b.lower, b.upper).map_err(io)?;
    }
    rep.bounds = rows.iter().map(|(e, b)| BoundsEntry::new(e, b)).collect();
    write_file(dir, "bounds.csv", &report::bounds_csv(&rows))?;

    if feasible {
        let start = Instant::now();
        let eps = cfg.rules.epsilon.unwrap_or(DEFAULT_EPSILON);
        let typ = typicality(sc, &cfg.query.pairs, eps)?;
        rep.timings.push(timed("typicality", start));
        rep.typicality = typ
            .iter()
            .map(|r| TypicalityEntry {
                pair: format!("{},{}", r.pair.0, r.pair.1),
                relative_distance: r.relative_distance,
                ratio: r.measured_ratio,
                verdict: r.passes.to_string(),
            })
            .collect();
        write_file(dir, "typicality.csv", &report::typicality_csv(&typ))?;

        let start = Instant::now();
        let br = if sc.branches.is_empty() {
            Vec::new()
        } else {
            branches(sc, None, cfg.query.delta, cfg.query.samples, seed)?
        };
        rep.timings.push(timed("branch", start));
        rep.branches = br
            .iter()
            .map(|(n, r)| BranchEntry {
                name: n.clone(),
                epsilon: r.epsilon,
                delta: r.delta,
                worst_expectation: r.worst_expectation,
                worst_tail: r.worst_tail,
                expectation_verdict: r.expectation_verdict.to_string(),
                tail_verdict: r.tail_verdict.to_string(),
            })
            .collect();
        write_file(dir, "branch.csv", &report::branch_csv(&br))?;
    }

    let path = write_file(dir, "report.json", &(rep.to_json() + "\n"))?;
    writeln!(out, "report: {}", path.display()).map_err(io)?;
    Ok(code)
}
