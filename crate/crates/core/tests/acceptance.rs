//! One pass/fail line per acceptance criterion. Exits non-zero when any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use hypermon::analysis::{
    check_reflexivity, check_symmetry, check_transitivity, minimize_insert, DominanceCheck,
};
use hypermon::engine::{run_online_sequential, SequentialOptions};
use hypermon::formula::{QuantifiedFormula, TraceVar};
use hypermon::gen::{GeneratorKind, GeneratorSpec};
use hypermon::monitor::MonitorTemplate;
use hypermon::monitorability::{classify_model_support, Model, MonitorabilityResult};
use hypermon::semantics::{eval_backwards, eval_recursive};
use hypermon::trace::{sequential_events, zip_tuple, Trace};
use hypermon::triestore::{run_trie_sequential, Trie};
use rand::Rng;

/// Wall-clock limit for a single symmetry, transitivity or reflexivity check.
const ANALYSIS_LIMIT: Duration = Duration::from_secs(1);
/// Wall-clock limit for the exhaustive dominance oracle.
const ORACLE_LIMIT: Duration = Duration::from_secs(300);
/// Minimum pruned fraction at the strictest obsdet guard.
const PRUNED_FRACTION: f64 = 0.5;
/// Maximum growth of backwards evaluation time when the length doubles.
const SCALING_LIMIT: f64 = 2.5;
/// Maximum trie size relative to the total number of steps.
const TRIE_FRACTION: f64 = 0.5;

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, ok: bool, detail: String) {
        println!("criterion {id:>2}: {} {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id);
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn criterion_1(r: &mut Report) {
    // (name, formula, symmetric, transitive, reflexive) as tabulated.
    let table = [
        ("ObsDet1", OBSDET1, true, false, true),
        ("ObsDet2", OBSDET2, true, false, true),
        ("ObsDet3", OBSDET3, true, false, true),
        ("QuantNoninf", QUANT_NONINF, true, false, true),
        ("EQ", EQ, true, true, true),
        ("ConfMan", CONFMAN, false, false, false),
    ];
    let mut matched = 0;
    let mut slowest = Duration::ZERO;
    let mut mismatches = Vec::new();
    for (name, text, sym, trans, refl) in table {
        let f = phi(text);
        let (s, d1) = timed(|| check_symmetry(&f).unwrap());
        let (tr, d2) = timed(|| check_transitivity(&f).unwrap().unwrap_or(false));
        let (rf, d3) = timed(|| check_reflexivity(&f).unwrap());
        slowest = slowest.max(d1).max(d2).max(d3);
        for (col, got, want) in [("symm", s, sym), ("trans", tr, trans), ("refl", rf, refl)] {
            if got == want {
                matched += 1;
            } else {
                mismatches.push(format!("{name}.{col}={got}"));
            }
        }
    }
    r.line(
        1,
        matched == 18 && slowest < ANALYSIS_LIMIT,
        format!(
            "analysis table {matched}/18, slowest check {slowest:?}{}",
            if mismatches.is_empty() {
                String::new()
            } else {
                format!(", mismatches: {}", mismatches.join(" "))
            }
        ),
    );
}

fn criterion_2(r: &mut Report) {
    let fe = DominanceCheck::new(&phi("forall p. exists q. G (a[p] -> b[q])")).unwrap();
    let ef = DominanceCheck::new(&phi("exists p. forall q. G (a[p] -> b[q])")).unwrap();
    let cm = DominanceCheck::new(&phi(CONFMAN)).unwrap();
    let cases = [
        fe.dominates(&t(&["a", "a"]), &t(&["a", "-"])),
        fe.dominates(&t(&["b", "b"]), &t(&["b", "-"])),
        ef.dominates(&t(&["a", "-"]), &t(&["a", "a"])),
        ef.dominates(&t(&["b", "-"]), &t(&["b", "b"])),
        cm.dominates(&t(&["-", "s", "s", "-", "-"]), &t(&["-", "s", "-", "-", "-"])),
    ];
    let held = cases.iter().filter(|&&b| b).count();
    r.line(2, held == 5, format!("dominance pairs {held}/5 {cases:?}"));
}

fn criterion_3(r: &mut Report) {
    let uni = universe(&["a"], 2);
    let mut rng = rng(3);
    let mut discrepancies = Vec::new();
    let mut dominating = 0;
    let (_, took) = timed(|| {
        for k in 0..20 {
            let f = random_forall(&mut rng, 2, &["a"], 4);
            let check = DominanceCheck::new(&f).unwrap();
            for i in 0..uni.len() {
                for j in 0..uni.len() {
                    let fast = check.dominates(&uni[i], &uni[j]);
                    let oracle = redundant_in_universe(check.template(), &uni, i, j);
                    dominating += usize::from(fast);
                    if fast != oracle {
                        discrepancies.push(format!("#{k} {} ({}, {}) fast={fast}", f, uni[i], uni[j]));
                    }
                }
            }
        }
    });
    r.line(
        3,
        discrepancies.is_empty() && took < ORACLE_LIMIT,
        format!(
            "dominance vs redundancy oracle: {} discrepancies over 20x{} pairs ({dominating} dominating), {took:?}{}",
            discrepancies.len(),
            uni.len() * uni.len(),
            discrepancies.first().map(|d| format!(", first: {d}")).unwrap_or_default()
        ),
    );
}

fn criterion_4(r: &mut Report) {
    let mut rng = rng(4);
    let mut violations = 0;
    for _ in 0..10 {
        let f = random_forall(&mut rng, 2, &["a", "b"], 3);
        let check = DominanceCheck::new(&f).unwrap();
        let mut set = Vec::new();
        for t in random_traces(&mut rng, 100, &["a", "b"], 5) {
            minimize_insert(&mut set, t, &check);
        }
        for (i, x) in set.iter().enumerate() {
            for (j, y) in set.iter().enumerate() {
                if i != j && check.dominates(x, y) {
                    violations += 1;
                }
            }
        }
    }
    let mut disagreements = 0;
    for _ in 0..200 {
        let f = random_forall(&mut rng, 2, &["a"], 3);
        let traces = random_traces(&mut rng, 12, &["a"], 4);
        let events = sequential_events(&traces);
        let run = |trace_analysis| {
            let opts = SequentialOptions {
                trace_analysis,
                ..Default::default()
            };
            class(&run_online_sequential(&f, &events, opts).unwrap().verdict)
        };
        if run(true) != run(false) {
            disagreements += 1;
        }
    }
    r.line(
        4,
        violations == 0 && disagreements == 0,
        format!("dominating stored pairs {violations}, on/off verdict disagreements {disagreements}/200"),
    );
}

fn criterion_5(r: &mut Report) {
    let mut parts = Vec::new();
    let mut accounting = true;
    let mut strictest = 0.0;
    for n in [2u32, 4, 6] {
        let spec = GeneratorSpec {
            kind: GeneratorKind::BoundedObsDet { n, c: 3, noise: 0.002 },
            count: 1000,
            length: 50,
            seed: 5,
        };
        let f = phi(&spec.formula().unwrap());
        let opts = SequentialOptions {
            trace_analysis: true,
            stop_on_violation: false,
            ..Default::default()
        };
        let out = run_online_sequential(&f, &sequential_events(&spec.generate()), opts).unwrap();
        accounting &= out.rows.len() == 1000 && out.rows.iter().all(|s| s.accounting_holds());
        let s = out.stats;
        let frac = s.traces_pruned as f64 / s.traces_seen as f64;
        if n == 6 {
            strictest = frac;
        }
        parts.push(format!(
            "n={n}: stored {} pruned {} violating {}",
            s.traces_stored, s.traces_pruned, s.violations_found
        ));
    }
    r.line(
        5,
        accounting && strictest > PRUNED_FRACTION,
        format!(
            "pruned fraction at n=6 {:.1}%, accounting {accounting}; {}",
            strictest * 100.0,
            parts.join("; ")
        ),
    );
}

/// Tuples checked for each new trace, from the cumulative per-trace rows.
fn per_trace(f: &QuantifiedFormula, traces: &[Trace], spec_analysis: bool) -> (Vec<usize>, bool) {
    let opts = SequentialOptions {
        spec_analysis,
        ..Default::default()
    };
    let out = run_online_sequential(f, &sequential_events(traces), opts).unwrap();
    let mut prev = 0;
    let deltas = out
        .rows
        .iter()
        .map(|s| {
            let d = s.tuples_checked - prev;
            prev = s.tuples_checked;
            d
        })
        .collect();
    (deltas, class(&out.verdict))
}

fn criterion_6(r: &mut Report) {
    let mut rng = rng(6);
    let k_max = 20;
    // Output equals input, so ObsDet1 holds and every trace is stored.
    let io: Vec<Trace> = (0..=k_max)
        .map(|id| {
            let steps = (0..6)
                .map(|_| if rng.gen_bool(0.5) { "i,o" } else { "-" })
                .collect::<Vec<_>>();
            Trace::from_literals(id, &steps)
        })
        .collect();
    let obsdet = phi(OBSDET1);
    let (naive, v1) = per_trace(&obsdet, &io, false);
    let (halved, v2) = per_trace(&obsdet, &io, true);
    let naive_ok = naive.iter().enumerate().all(|(k, &d)| d == 2 * k + 1);
    let halved_ok = halved.iter().enumerate().all(|(k, &d)| d == k);
    let same: Vec<Trace> = (0..=k_max).map(|id| Trace::from_literals(id, &["a", "-", "a"])).collect();
    let eq = phi(EQ);
    let (eq_naive, v3) = per_trace(&eq, &same, false);
    let (eq_trans, v4) = per_trace(&eq, &same, true);
    let trans_ok = eq_trans[0] == 0 && eq_trans[1..].iter().all(|&d| d == 1);
    let eq_naive_ok = eq_naive.iter().enumerate().all(|(k, &d)| d == 2 * k + 1);
    r.line(
        6,
        naive_ok && halved_ok && trans_ok && eq_naive_ok && v1 == v2 && v3 == v4,
        format!(
            "k={k_max}: naive {} (2k+1), symmetric+reflexive {} (k), transitive EQ {} (1); verdicts {}",
            naive[k_max],
            halved[k_max],
            eq_trans[k_max],
            if v1 == v2 && v3 == v4 { "unchanged" } else { "changed" }
        ),
    );
}

fn criterion_7(r: &mut Report) {
    let mut rng = rng(7);
    let mut disagreements = 0;
    let mut first = None;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=3);
        let aps: &[&str] = &["a", "b", "c"][..rng.gen_range(1..=3)];
        let f = random_forall(&mut rng, n, aps, 4);
        let tuple = random_traces(&mut rng, n, aps, 8);
        let vars = f.vars();
        let refs: Vec<&Trace> = tuple.iter().collect();
        let word = zip_tuple(&refs, &vars).unwrap();
        // Unequal lengths are compared on the min-length truncation.
        let m = tuple.iter().map(Trace::len).min().unwrap_or(0);
        let pi = vars.iter().cloned().zip(tuple.iter().map(|t| t.truncate(m))).collect();
        if eval_backwards(&word, &f.body.desugar()) != eval_recursive(&pi, &f.body) {
            disagreements += 1;
            first.get_or_insert_with(|| {
                let ts: Vec<String> = tuple.iter().map(Trace::to_line).collect();
                format!("{f} on ({})", ts.join(", "))
            });
        }
    }
    let f = phi("forall p1. forall p2. G ((a[p1] U b[p2]) -> F (c[p1] <-> X c[p2])) & (a[p2] W G b[p1])");
    let vars: Vec<TraceVar> = f.vars();
    let core = f.body.desugar();
    let median = |len: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let tuple = [
            Trace::new(0, (0..len).map(|_| random_step(rng, &["a", "b", "c"])).collect()),
            Trace::new(1, (0..len).map(|_| random_step(rng, &["a", "b", "c"])).collect()),
        ];
        let refs: Vec<&Trace> = tuple.iter().collect();
        let word = zip_tuple(&refs, &vars).unwrap();
        let mut runs: Vec<Duration> = (0..20).map(|_| timed(|| eval_backwards(&word, &core)).1).collect();
        runs.sort();
        runs[10]
    };
    let short = median(20_000, &mut rng);
    let long = median(40_000, &mut rng);
    let ratio = long.as_secs_f64() / short.as_secs_f64();
    r.line(
        7,
        disagreements == 0 && ratio <= SCALING_LIMIT,
        format!(
            "backwards vs recursive disagreements {disagreements}/1000, time ratio at 2x length {ratio:.2}{}",
            first.map(|d| format!(", first: {d}")).unwrap_or_default()
        ),
    );
}

fn criterion_8(r: &mut Report) {
    let mut rng = rng(8);
    let mut agree = 0;
    let mut live_ok = true;
    let mut worst_fraction: f64 = 0.0;
    let formulas = [EQ, "forall p1. forall p2. G (a[p1] -> X (a[p2] | !a[p1]))"];
    for run in 0..200 {
        let spec = GeneratorSpec {
            kind: GeneratorKind::Perturbed {
                aps: vec!["a".into()],
                flip: 0.01,
                empty_base: false,
            },
            count: 200,
            length: 30,
            seed: rng.gen(),
        };
        let traces = spec.generate();
        let f = phi(formulas[run % 2]);
        let events = sequential_events(&traces);
        let naive = run_online_sequential(&f, &events, SequentialOptions::default()).unwrap();
        let trie = run_trie_sequential(&f, &events, SequentialOptions::default()).unwrap();
        agree += usize::from(class(&naive.verdict) == class(&trie.verdict));
        live_ok &= trie.rows.iter().all(|s| s.instances_live <= s.tuples_checked);
        let mut store = Trie::new();
        for t in &traces {
            store.insert(t);
        }
        worst_fraction = worst_fraction.max(store.node_count() as f64 / (200.0 * 30.0));
    }
    r.line(
        8,
        agree == 200 && live_ok && worst_fraction < TRIE_FRACTION,
        format!(
            "trie/naive agreement {agree}/200, worst node fraction {:.1}%, live<=checked {live_ok}",
            worst_fraction * 100.0
        ),
    );
}

fn criterion_9(r: &mut Report) {
    use MonitorabilityResult::*;
    let cases = [
        ("forall p. exists q. G (a[p] -> b[q])", NotMonitorable),
        ("forall p. G F a[p]", NotMonitorable),
        (EQ, Monitorable),
        ("exists p. F a[p]", Monitorable),
        ("forall p. true", Monitorable),
    ];
    let mut held = 0;
    let mut got = Vec::new();
    for (text, want) in cases {
        let res = classify_model_support(&phi(text), Model::Unbounded).unwrap().result;
        held += usize::from(res == want);
        got.push(format!("{res:?}"));
    }
    r.line(9, held == 5, format!("monitorability {held}/5 [{}]", got.join(", ")));
}

fn criterion_10(r: &mut Report) {
    let mut rng = rng(10);
    let mut unsound = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=2);
        let f = random_forall(&mut rng, n, &["a", "b"], 4);
        let tpl = MonitorTemplate::from_formula(&f).unwrap();
        let tuple = random_traces(&mut rng, n, &["a", "b"], 6);
        let refs: Vec<&Trace> = tuple.iter().collect();
        if eval_recursive(&binding(&tpl, &refs), &f.body) && !tpl.accepts_tuple(&refs) {
            unsound += 1;
        }
    }
    let mut witnesses = 0;
    let mut bad_witnesses = 0;
    for _ in 0..300 {
        let f = random_forall(&mut rng, 2, &["a"], 3);
        let tpl = MonitorTemplate::from_formula(&f).unwrap();
        let traces = random_traces(&mut rng, 6, &["a"], 5);
        let out = run_online_sequential(&f, &sequential_events(&traces), SequentialOptions::default()).unwrap();
        if let hypermon::engine::Verdict::Violation(w) = out.verdict {
            witnesses += 1;
            if tpl.accepts_tuple(&w.traces()) {
                bad_witnesses += 1;
            }
        }
    }
    let mut not_closed = 0;
    for _ in 0..500 {
        let f = random_forall(&mut rng, 2, &["a", "b"], 4);
        let tpl = MonitorTemplate::from_formula(&f).unwrap();
        let tuple = random_traces(&mut rng, 2, &["a", "b"], 6);
        let refs: Vec<&Trace> = tuple.iter().collect();
        if tpl.accepts_tuple(&refs) {
            let m = tuple.iter().map(Trace::len).min().unwrap_or(0);
            for len in 0..m {
                let cut: Vec<Trace> = tuple.iter().map(|t| t.truncate(len)).collect();
                if !tpl.accepts_tuple(&cut.iter().collect::<Vec<_>>()) {
                    not_closed += 1;
                    break;
                }
            }
        }
    }
    r.line(
        10,
        unsound == 0 && bad_witnesses == 0 && not_closed == 0,
        format!(
            "soundness failures {unsound}/1000, rejected witnesses {}/{witnesses} ok, prefix-closure failures {not_closed}/500",
            witnesses - bad_witnesses
        ),
    );
}

fn main() -> ExitCode {
    let mut r = Report { failed: Vec::new() };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r);
    if r.failed.is_empty() {
        println!("all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {:?}", r.failed);
        ExitCode::FAILURE
    }
}
