use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hypermon::analysis::{check_reflexivity, check_symmetry, check_transitivity};
use hypermon::engine::{
    lockstep_events, run_offline_alternating, run_offline_universal, run_online_sequential,
    run_parallel_offline, run_parallel_online, Outcome, SequentialOptions, SessionStats, Verdict,
};
use hypermon::formula::{parse_formula, QuantifiedFormula};
use hypermon::gen::{GeneratorKind, GeneratorSpec};
use hypermon::monitor::MonitorTemplate;
use hypermon::monitorability::{classify_model_support, Model as MonModel};
use hypermon::trace::{
    format_trace_file, parse_stream, parse_trace_file, sequential_events, StreamEvent, Trace,
};
use hypermon::triestore::{run_trie_parallel, run_trie_sequential};

#[derive(Parser)]
#[command(name = "hypermon", version, about = "Runtime verification of HyperLTL formulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monitor a trace file or event stream against a formula.
    Monitor(MonitorArgs),
    /// Report symmetry, transitivity and reflexivity of a universal formula.
    Analyze { formula: PathBuf },
    /// Decide monitorability of a formula.
    Monitorability {
        formula: PathBuf,
        #[arg(long, value_enum, default_value = "unbounded")]
        model: MonModelArg,
        #[arg(long, default_value_t = 1)]
        bound: usize,
    },
    /// Generate a trace file.
    Gen(GenArgs),
    /// Monitor generated bounded observational determinism traces and emit stats rows.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Parallel,
    Sequential,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Online,
    /// Template acceptance over the whole trace set.
    Offline,
    /// Finite-trace semantics per tuple, evaluated backwards.
    Backwards,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MonModelArg {
    Unbounded,
    Bounded,
    Parallel,
}

#[derive(Args)]
struct MonitorArgs {
    formula: PathBuf,
    /// Trace file or stream; `-` or absent reads stdin.
    traces: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sequential")]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "online")]
    mode: ModeArg,
    /// Take at most this many traces (bounded sequential model).
    #[arg(long)]
    bound: Option<usize>,
    #[arg(long)]
    spec_analysis: bool,
    #[arg(long)]
    trace_analysis: bool,
    #[arg(long)]
    trie: bool,
    /// Keep monitoring after a violation, discarding violating traces.
    #[arg(long)]
    keep_going: bool,
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    dump_template: bool,
    /// Write zero in the runtime column so output is reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Also write the witness traces to this trace file.
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Random,
    Perturbed,
    Obsdet,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 10)]
    length: usize,
    #[arg(long, default_value = "a", value_delimiter = ',')]
    aps: Vec<String>,
    #[arg(long, default_value_t = 0.01)]
    flip: f64,
    #[arg(long)]
    empty_base: bool,
    #[arg(long, default_value_t = 6)]
    n: u32,
    #[arg(long, default_value_t = 3)]
    c: u32,
    #[arg(long, default_value_t = 0.002)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace file to write; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where the obsdet generator writes its formula.
    #[arg(long)]
    formula_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 6)]
    n: u32,
    #[arg(long, default_value_t = 3)]
    c: u32,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 50)]
    length: usize,
    #[arg(long, default_value_t = 0.002)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_trace_analysis: bool,
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    stats: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Monitor(args) => cmd_monitor(&args),
        Command::Analyze { formula } => cmd_analyze(&read_formula(&formula)?),
        Command::Monitorability {
            formula,
            model,
            bound,
        } => cmd_monitorability(&read_formula(&formula)?, model, bound),
        Command::Gen(args) => cmd_gen(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn read_formula(path: &Path) -> Result<QuantifiedFormula> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_formula(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
        }
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn is_stream(text: &str) -> bool {
    text.lines().any(|l| {
        let l = l.trim_start();
        l.starts_with("#trace") || l.starts_with("#step") || l.starts_with("#end")
    })
}

/// Collects the traces of a sequential stream, ignoring protocol details.
fn traces_of_stream(events: &[StreamEvent]) -> Result<Vec<Trace>> {
    let mut out: Vec<Trace> = Vec::new();
    let mut open = false;
    for ev in events {
        match ev {
            StreamEvent::Begin(name) => {
                let mut t = Trace::new(out.len(), Vec::new());
                t.name = name.clone();
                out.push(t);
                open = true;
            }
            StreamEvent::Step(s) if open => out.last_mut().expect("open trace").steps.push(s.clone()),
            StreamEvent::End => open = false,
            _ => bail!("offline modes need a trace file or a sequential stream"),
        }
    }
    Ok(out)
}

fn cmd_monitor(args: &MonitorArgs) -> Result<u8> {
    if args.trie && args.trace_analysis {
        bail!("--trie and --trace-analysis cannot be combined");
    }
    if args.bound == Some(0) {
        bail!("--bound must be at least 1");
    }
    let phi = read_formula(&args.formula)?;
    if args.dump_template {
        print!("{}", MonitorTemplate::from_formula(&phi)?.dump());
    }
    let text = read_input(args.traces.as_deref())?;
    let stream = is_stream(&text);
    let events = if stream {
        parse_stream(&text)?
    } else {
        Vec::new()
    };
    let traces = || -> Result<Vec<Trace>> {
        if stream {
            traces_of_stream(&events)
        } else {
            Ok(parse_trace_file(&text)?)
        }
    };
    let opts = SequentialOptions {
        bound: args.bound,
        spec_analysis: args.spec_analysis,
        trace_analysis: args.trace_analysis,
        stop_on_violation: !args.keep_going,
    };
    let outcome: Outcome = match (args.mode, args.model) {
        (ModeArg::Online, ModelArg::Sequential) => {
            let events = if stream {
                events.clone()
            } else {
                sequential_events(&traces()?)
            };
            if args.trie {
                run_trie_sequential(&phi, &events, opts)?
            } else {
                run_online_sequential(&phi, &events, opts)?
            }
        }
        (ModeArg::Online, ModelArg::Parallel) => {
            let events = if events.iter().any(|e| matches!(e, StreamEvent::Lockstep(_))) {
                events.clone()
            } else {
                lockstep_events(&traces()?)
            };
            if args.trie {
                run_trie_parallel(&phi, &events)?
            } else {
                run_parallel_online(&phi, &events)?
            }
        }
        (ModeArg::Offline, _) => {
            let ts = traces()?;
            if phi.is_universal() {
                run_offline_universal(&phi, &ts, args.jobs)?
            } else {
                run_offline_alternating(&phi, &ts)?
            }
        }
        (ModeArg::Backwards, _) => run_parallel_offline(&phi, &traces()?),
    };
    report(&outcome, args)
}

fn report(outcome: &Outcome, args: &MonitorArgs) -> Result<u8> {
    let mut out = io::stdout().lock();
    if let Some(b) = outcome.bound_exceeded {
        writeln!(out, "bound exceeded: traces after the first {b} were ignored")?;
    }
    let code = match &outcome.verdict {
        Verdict::Satisfied | Verdict::Running => {
            writeln!(out, "verdict: satisfied")?;
            0
        }
        Verdict::Violation(w) => {
            writeln!(out, "verdict: violation")?;
            let mut file = String::new();
            for (var, t) in &w.bindings {
                let name = t.name.as_deref().map(|n| format!(" ({n})")).unwrap_or_default();
                file.push_str(&format!("# witness {var} = {}{name}\n{}\n", t.label(), t.to_line()));
            }
            write!(out, "{file}")?;
            if let Some(p) = &args.witness_out {
                fs::write(p, &file).with_context(|| format!("writing {}", p.display()))?;
            }
            1
        }
    };
    let s = outcome.stats;
    writeln!(
        out,
        "traces seen {}, stored {}, pruned {}, violating {}, tuples checked {}",
        s.traces_seen, s.traces_stored, s.traces_pruned, s.violations_found, s.tuples_checked
    )?;
    if let Some(p) = &args.stats {
        write_stats(p, &outcome.rows, args.no_timing)?;
    }
    Ok(code)
}

fn write_stats(path: &Path, rows: &[SessionStats], no_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let trie = rows.iter().any(|r| r.trie_nodes.is_some());
    let mut header = vec![
        "traces_seen",
        "traces_stored",
        "traces_pruned",
        "violations_found",
        "tuples_checked",
        "instances_live",
        "runtime_ms",
    ];
    if trie {
        header.push("trie_nodes");
    }
    w.write_record(&header)?;
    for r in rows {
        let ms = if no_timing { 0 } else { r.runtime_ms };
        let mut rec = vec![
            r.traces_seen.to_string(),
            r.traces_stored.to_string(),
            r.traces_pruned.to_string(),
            r.violations_found.to_string(),
            r.tuples_checked.to_string(),
            r.instances_live.to_string(),
            ms.to_string(),
        ];
        if trie {
            rec.push(r.trie_nodes.unwrap_or(0).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_analyze(phi: &QuantifiedFormula) -> Result<u8> {
    let timed = |f: &dyn Fn() -> Result<String>| -> Result<(String, f64)> {
        let start = Instant::now();
        let r = f()?;
        Ok((r, start.elapsed().as_secs_f64() * 1000.0))
    };
    let (sym, t1) = timed(&|| Ok(yes_no(check_symmetry(phi)?).to_string()))?;
    let (trans, t2) = timed(&|| {
        Ok(match check_transitivity(phi)? {
            Some(b) => yes_no(b).to_string(),
            None => "n/a".to_string(),
        })
    })?;
    let (refl, t3) = timed(&|| Ok(yes_no(check_reflexivity(phi)?).to_string()))?;
    println!("symmetric: {sym} ({t1:.1} ms)");
    println!("transitive: {trans} ({t2:.1} ms)");
    println!("reflexive: {refl} ({t3:.1} ms)");
    Ok(0)
}

fn cmd_monitorability(phi: &QuantifiedFormula, model: MonModelArg, bound: usize) -> Result<u8> {
    let model = match model {
        MonModelArg::Unbounded => MonModel::Unbounded,
        MonModelArg::Bounded => MonModel::Bounded(bound),
        MonModelArg::Parallel => MonModel::Parallel(bound),
    };
    let r = classify_model_support(phi, model)?;
    println!("result: {:?}", r.result);
    println!("reason: {:?}", r.reason);
    match r.fsm_states {
        Some(n) => println!("fsm states: {n}"),
        None => println!("fsm states: -"),
    }
    Ok(0)
}

fn cmd_gen(args: &GenArgs) -> Result<u8> {
    if !(0.0..=1.0).contains(&args.flip) || !(0.0..=1.0).contains(&args.noise) {
        bail!("probabilities must lie in [0, 1]");
    }
    let kind = match args.kind {
        GenKind::Random => GeneratorKind::Random {
            aps: args.aps.clone(),
        },
        GenKind::Perturbed => GeneratorKind::Perturbed {
            aps: args.aps.clone(),
            flip: args.flip,
            empty_base: args.empty_base,
        },
        GenKind::Obsdet => GeneratorKind::BoundedObsDet {
            n: args.n,
            c: args.c,
            noise: args.noise,
        },
    };
    let spec = GeneratorSpec {
        kind,
        count: args.count,
        length: args.length,
        seed: args.seed,
    };
    let text = format_trace_file(&spec.generate());
    match &args.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    if let (Some(f), Some(p)) = (spec.formula(), &args.formula_out) {
        fs::write(p, f).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(0)
}

fn cmd_bench(args: &BenchArgs) -> Result<u8> {
    let spec = GeneratorSpec {
        kind: GeneratorKind::BoundedObsDet {
            n: args.n,
            c: args.c,
            noise: args.noise,
        },
        count: args.count,
        length: args.length,
        seed: args.seed,
    };
    let phi = parse_formula(&spec.formula().expect("obsdet has a formula"))?;
    let opts = SequentialOptions {
        trace_analysis: !args.no_trace_analysis,
        stop_on_violation: false,
        ..Default::default()
    };
    let outcome = run_online_sequential(&phi, &sequential_events(&spec.generate()), opts)?;
    let s = outcome.stats;
    println!(
        "n={} c={}: seen {}, stored {}, pruned {}, violating {}",
        args.n, args.c, s.traces_seen, s.traces_stored, s.traces_pruned, s.violations_found
    );
    if let Some(p) = &args.stats {
        write_stats(p, &outcome.rows, args.no_timing)?;
    }
    Ok(0)
}
