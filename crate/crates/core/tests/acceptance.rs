//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the report is always printed; exits non-zero if any
//! criterion fails.

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use risp::bench::{benchmark, sparse_workload, EngineKind};
use risp::builders::{build_comparator, build_gate, Comparator, ComparatorSpec, GateKind, TieBreak};
use risp::cartpole::{EpisodeConfig, StartDistribution};
use risp::engine::{run, run_event_driven, RecordMode, SpikeSchedule};
use risp::evolve::{evaluate, evolve_with_progress, test_generalization, EvolutionConfig, EvolutionResult, Variant};
use risp::model::{build_network, Interval, Network, NetworkSpec, ValueMode};
use risp::optimizer::{simplify, SimplifyConfig};
use risp::workload::{
    random_network, random_schedule, relay_heavy_network, InputModel, LeakSetting, RandomNetworkConfig,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- 1

fn and_gate() -> Verdict {
    let gate = build_gate(GateKind::And);
    let net = &gate.network;
    let (a, b, x) = (net.id("A").unwrap(), net.id("B").unwrap(), net.id("X").unwrap());
    let combos = [(false, false), (false, true), (true, false), (true, true)];
    // every combination, three times, back to back in one run
    let spacing = 2;
    let mut sched = SpikeSchedule::new();
    let mut expected = Vec::new();
    let mut t = 0;
    for _ in 0..3 {
        for &(sa, sb) in &combos {
            if sa {
                sched.push(a, t, 1.0);
            }
            if sb {
                sched.push(b, t, 1.0);
            }
            if sa && sb {
                expected.push(t + 1);
            }
            t += spacing;
        }
    }
    let horizon = t + 2;
    let mut ok = true;
    for engine in [run, run_event_driven] {
        let r = engine(net, &sched, horizon, RecordMode::OutputsOnly).unwrap();
        ok &= r.times(x) == expected;
    }
    verdict(ok, format!("X fired at {expected:?} over 12 back-to-back trials"))
}

// ---------------------------------------------------------------- 2

fn bits(mask: u32, t: u64) -> Vec<u64> {
    (0..t).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Runs two consecutive comparisons in one simulation and checks both.
fn comparator_pair(c: &Comparator, t: u64, first: (&[u64], &[u64]), second: (&[u64], &[u64])) -> bool {
    let gap = t + 3;
    let mut s = SpikeSchedule::new();
    for (offset, (xs, ys)) in [(0, first), (gap, second)] {
        s.push(c.bias, offset, 1.0);
        for &i in xs {
            s.push(c.input_x, offset + i, 1.0);
        }
        for &i in ys {
            s.push(c.input_y, offset + i, 1.0);
        }
    }
    let r = run_event_driven(&c.network, &s, 2 * gap + 2, RecordMode::OutputsOnly).unwrap();
    let expect = |offset: u64, (xs, ys): (&[u64], &[u64])| {
        let at = vec![offset + c.output_timestep];
        match xs.len().cmp(&ys.len()) {
            std::cmp::Ordering::Greater => (at, vec![]),
            std::cmp::Ordering::Less => (vec![], at),
            std::cmp::Ordering::Equal => (vec![], vec![]),
        }
    };
    let (ex1, ey1) = expect(0, first);
    let (ex2, ey2) = expect(gap, second);
    let ex: Vec<u64> = ex1.into_iter().chain(ex2).collect();
    let ey: Vec<u64> = ey1.into_iter().chain(ey2).collect();
    r.times(c.output_x) == ex && r.times(c.output_y) == ey
}

fn comparator_contract() -> Verdict {
    let mut checked = 0usize;
    let mut failures = 0usize;
    for t in 1..=4u64 {
        let c = build_comparator(ComparatorSpec {
            t,
            tie_break: TieBreak::None,
        })
        .unwrap();
        let n = 1u32 << t;
        for mx in 0..n {
            for my in 0..n {
                let (xs, ys) = (bits(mx, t), bits(my, t));
                // pair each placement with its mirror image as the following trial
                if !comparator_pair(&c, t, (&xs, &ys), (&ys, &xs)) {
                    failures += 1;
                }
                checked += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in 5..=8u64 {
        let c = build_comparator(ComparatorSpec {
            t,
            tie_break: TieBreak::None,
        })
        .unwrap();
        for _ in 0..150 {
            let pick = |rng: &mut ChaCha8Rng| bits(rng.random_range(0..1u32 << t), t);
            let (x1, y1, x2, y2) = (pick(&mut rng), pick(&mut rng), pick(&mut rng), pick(&mut rng));
            if !comparator_pair(&c, t, (&x1, &y1), (&x2, &y2)) {
                failures += 1;
            }
            checked += 1;
        }
    }
    verdict(
        failures == 0,
        format!("{checked} paired trials (exhaustive t=1..4, 600 random t=5..8), {failures} wrong"),
    )
}

// ---------------------------------------------------------------- 3

fn engine_cross_validation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let leaks = [LeakSetting::All, LeakSetting::None, LeakSetting::Mixed];
    let mut mismatches = 0;
    let mut fires = 0usize;
    let cases = 1200;
    for k in 0..cases {
        let cfg = RandomNetworkConfig {
            neurons: rng.random_range(1..=20),
            fan_out: rng.random_range(0.5..4.0),
            inputs: rng.random_range(1..=4),
            outputs: rng.random_range(1..=4),
            max_delay: rng.random_range(1..=10),
            mode: if k % 2 == 0 { ValueMode::discrete() } else { ValueMode::analog() },
            leak: leaks[(k / 2) % 3],
        };
        let net = random_network(&mut rng, &cfg);
        let horizon = rng.random_range(1..=200);
        let model = InputModel {
            probability: rng.random_range(0.05..0.9),
            value: 1.0,
        };
        let sched = random_schedule(&mut rng, &net, horizon, model);
        let a = run(&net, &sched, horizon, RecordMode::AllNeurons).unwrap();
        let b = run_event_driven(&net, &sched, horizon, RecordMode::AllNeurons).unwrap();
        fires += a.fires.len();
        if a != b {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("{cases} random networks, {fires} fires compared, {mismatches} mismatching rasters"),
    )
}

// ---------------------------------------------------------------- 4

fn relay_chain() -> Network {
    let mode = ValueMode::analog().with_ranges(Interval::new(-2.0, 2.0), Interval::new(-1.0, 1.0));
    let mut s = NetworkSpec::new(mode);
    s.add_neuron("u", 1.0, false)
        .add_neuron("B", 0.2, false)
        .add_neuron("C", -0.3, false)
        .add_neuron("v", 0.5, true)
        .add_synapse("u", "B", 0.4, 2)
        .add_synapse("B", "C", 0.4, 2)
        .add_synapse("C", "v", 0.9, 2)
        .add_input("u")
        .add_output("v");
    build_network(&s).unwrap()
}

fn four_input_normalization() -> Network {
    let mode = ValueMode::analog().with_ranges(Interval::new(-2.0, 2.0), Interval::new(-1.0, 1.0));
    let mut s = NetworkSpec::new(mode);
    for (i, w) in [0.5, 0.8, 0.9, 1.6].into_iter().enumerate() {
        let name = format!("i{i}");
        s.add_neuron(name.clone(), 1.0, false).add_input(name.clone());
        s.add_synapse(name, "n", w, 1 + i as i64);
    }
    s.add_neuron("n", -0.21, false).add_output("n");
    build_network(&s).unwrap()
}

fn pass_soundness() -> Verdict {
    let cfg = SimplifyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let leaks = [LeakSetting::All, LeakSetting::None, LeakSetting::Mixed];
    let cases = 1000;
    let (mut counterexamples, mut neurons, mut synapses, mut values) = (0, 0, 0, 0);
    for k in 0..cases {
        let net_cfg = RandomNetworkConfig {
            neurons: rng.random_range(2..=16),
            fan_out: rng.random_range(0.5..3.0),
            inputs: rng.random_range(1..=3),
            outputs: rng.random_range(1..=3),
            max_delay: rng.random_range(1..=6),
            mode: if k % 2 == 0 { ValueMode::discrete() } else { ValueMode::analog() },
            leak: leaks[(k / 2) % 3],
        };
        let relays = rng.random_range(1..=4);
        let net = if k % 4 < 3 {
            relay_heavy_network(&mut rng, &net_cfg, relays)
        } else {
            random_network(&mut rng, &net_cfg)
        };
        let (_, report, v) = simplify(&net, &SimplifyConfig { seed: k as u64, ..cfg.clone() });
        if !v.equivalent {
            counterexamples += 1;
        }
        neurons += report.neurons_removed;
        synapses += report.synapses_removed;
        values += report.values_normalized;
    }

    let chain = relay_chain();
    let (collapsed, chain_report, chain_v) = simplify(&chain, &cfg);
    let chain_ok = chain_v.equivalent
        && chain_report.neurons_removed == 2
        && collapsed.synapse_count() == 1
        && collapsed.synapses()[0].delay == 6;

    let four = four_input_normalization();
    let (unit, four_report, four_v) = simplify(&four, &cfg);
    let unit_ok = four_v.equivalent
        && unit.synapses().iter().all(|s| s.weight == 1.0)
        && unit.thresholds().iter().all(|&t| t == 1.0)
        && four_report.values_normalized == 5;

    verdict(
        counterexamples == 0 && chain_ok && unit_ok,
        format!(
            "{cases} networks: {counterexamples} counterexamples; removed {neurons} neurons, {synapses} synapses, \
             normalized {values} values; relay chain collapsed to delay 6: {chain_ok}; \
             {{0.5,0.8,0.9,1.6}}/-0.21 normalized to unit values: {unit_ok}"
        ),
    )
}

// ---------------------------------------------------------------- 6, 5, 7

const TRAINING_SEEDS: u64 = 10;

fn train_all() -> Vec<EvolutionResult> {
    (0..TRAINING_SEEDS)
        .map(|seed| {
            let cfg = EvolutionConfig {
                seed,
                ..Default::default()
            };
            let clock = Instant::now();
            let r = evolve_with_progress(Variant::RispAL, &cfg, |_| {}).unwrap();
            println!(
                "      seed {seed}: fitness {} / {}, epochs {}, {:.0} s",
                r.best_fitness.total(),
                r.perfect_fitness,
                r.history.len(),
                clock.elapsed().as_secs_f64()
            );
            r
        })
        .collect()
}

fn desk_scale_training(runs: &[EvolutionResult]) -> Verdict {
    let perfect = runs.iter().filter(|r| r.is_perfect()).count();
    let mut fitness: Vec<u64> = runs.iter().map(|r| r.best_fitness.total()).collect();
    fitness.sort_unstable();
    // median of an even count: mean of the two middle values
    let n = fitness.len();
    let median = (fitness[(n - 1) / 2] + fitness[n / 2]) as f64 / 2.0;
    let target = 0.9 * runs[0].perfect_fitness as f64;
    let epochs: Vec<String> = runs
        .iter()
        .map(|r| r.epochs_to_perfect.map_or_else(|| "-".into(), |e| e.to_string()))
        .collect();
    verdict(
        perfect >= 5 && median >= target,
        format!(
            "RISP-A-L pop 100, <=150 epochs: {perfect}/{n} seeds perfect, median fitness {median:.0} \
             (need >= {target:.0}); epochs to perfect [{}]",
            epochs.join(", ")
        ),
    )
}

fn reduction_on_evolved(runs: &[EvolutionResult]) -> Verdict {
    let cfg = SimplifyConfig::default();
    let episode = EpisodeConfig::default();
    let (mut reduced, mut normalized, mut all_equivalent, mut same_fitness) = (0, 0, true, true);
    let mut lines = Vec::new();
    for (seed, r) in runs.iter().enumerate() {
        let net = &r.best.network;
        let (out, report, v) = simplify(net, &cfg);
        all_equivalent &= v.equivalent;
        if report.neurons_removed > 0 && report.synapses_removed > 0 {
            reduced += 1;
        }
        if report.values_normalized > 0 {
            normalized += 1;
        }
        let simplified = risp::evolve::Genome { network: out.clone() };
        let after = evaluate(&simplified, &r.training_starts, &episode).unwrap();
        same_fitness &= after == r.best_fitness;
        let unit_thresholds = out.thresholds().iter().filter(|&&t| t == 1.0).count();
        let unit_weights = out.synapses().iter().filter(|s| s.weight.abs() == 1.0).count();
        lines.push(format!(
            "      seed {seed}: neurons {} -> {} ({:.0}% fewer), synapses {} -> {} ({:.0}% fewer), \
             unit thresholds {}/{}, unit weights {}/{}",
            net.neuron_count(),
            out.neuron_count(),
            100.0 * report.neurons_removed as f64 / net.neuron_count() as f64,
            net.synapse_count(),
            out.synapse_count(),
            100.0 * report.synapses_removed as f64 / net.synapse_count().max(1) as f64,
            unit_thresholds,
            out.neuron_count(),
            unit_weights,
            out.synapse_count(),
        ));
    }
    for l in &lines {
        println!("{l}");
    }
    let n = runs.len();
    verdict(
        reduced >= 8 && normalized == n && all_equivalent,
        format!(
            "{reduced}/{n} networks lost neurons and synapses (need >= 8), {normalized}/{n} had values \
             normalized (need {n}); equivalence held: {all_equivalent}; training fitness unchanged: {same_fitness}"
        ),
    )
}

fn generalization(runs: &[EvolutionResult]) -> Verdict {
    // best training fitness, earliest seed on ties
    let best = runs
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.best_fitness.total().cmp(&b.best_fitness.total()).then(j.cmp(i)))
        .map(|(i, _)| i)
        .unwrap();
    let seconds = test_generalization(
        &runs[best].best,
        100,
        7_000,
        &EpisodeConfig::default(),
        &StartDistribution::default(),
    )
    .unwrap();
    verdict(
        seconds >= 180.0,
        format!("genome from seed {best}: mean {seconds:.1} s over 100 test starts (need >= 180 s)"),
    )
}

// ---------------------------------------------------------------- 8

fn risp(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_risp")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let f = |name: &str| d.join(name).to_str().unwrap().to_owned();
    std::fs::write(f("both.txt"), "apply A 0 1\napply B 0 1\napply A 3 1\napply B 5 1\n").unwrap();
    std::fs::write(f("cmp.txt"), "apply Bias 0 1\napply I_X 0 1\napply I_X 2 1\napply I_Y 1 1\n").unwrap();

    // commands run once per round; round number is substituted for {r}
    let commands: Vec<Vec<String>> = vec![
        vec!["gates", "--kind", "xor", "--out", "{d}/xor{r}.json"],
        vec!["comparator", "--t", "4", "--out", "{d}/cmp{r}.json"],
        vec!["sim", "--network", "{d}/xor{r}.json", "--schedule", "{d}/both.txt", "--horizon", "12", "--engine", "ref", "--all-neurons", "--out", "{d}/xor_ref{r}.raster"],
        vec!["sim", "--network", "{d}/cmp{r}.json", "--schedule", "{d}/cmp.txt", "--horizon", "10", "--out", "{d}/cmp{r}.raster"],
        vec!["viz", "--network", "{d}/cmp{r}.json", "--out", "{d}/cmp{r}.dot"],
        vec!["train", "--variant", "risp-a-l", "--population", "100", "--epochs", "150", "--seed", "7", "--out", "{d}/best{r}.json", "--history", "{d}/history{r}.csv"],
        vec!["simplify", "--network", "{d}/best{r}.json", "--out", "{d}/simple{r}.json", "--seed", "3"],
        vec!["episode", "--network", "{d}/simple{r}.json", "--x", "0.2", "--theta", "0.03", "--max-intervals", "2000", "--trace", "{d}/trace{r}.csv"],
        vec!["test", "--network", "{d}/best{r}.json", "--tests", "20", "--seed", "5", "--max-intervals", "3000"],
    ]
    .into_iter()
    .map(|c| c.into_iter().map(str::to_owned).collect())
    .collect();

    let dstr = d.to_str().unwrap().to_owned();
    let mut outputs: Vec<Vec<(String, Vec<u8>)>> = vec![Vec::new(), Vec::new()];
    let mut failed_commands = Vec::new();
    for (round, collected) in outputs.iter_mut().enumerate() {
        for cmd in &commands {
            let args: Vec<String> = cmd
                .iter()
                .map(|a| a.replace("{d}", &dstr).replace("{r}", &round.to_string()))
                .collect();
            let argv: Vec<&str> = args.iter().map(String::as_str).collect();
            let (code, stdout) = risp(&argv);
            if code != 0 {
                failed_commands.push(cmd[0].clone());
            }
            collected.push((format!("{} stdout", cmd[0]), stdout));
        }
        for name in ["xor", "cmp", "best", "simple"] {
            let bytes = std::fs::read(d.join(format!("{name}{round}.json"))).unwrap_or_default();
            collected.push((format!("{name}.json"), bytes));
        }
        for name in ["xor_ref{r}.raster", "cmp{r}.raster", "cmp{r}.dot", "history{r}.csv", "trace{r}.csv"] {
            let file = name.replace("{r}", &round.to_string());
            collected.push((name.replace("{r}", ""), std::fs::read(d.join(file)).unwrap_or_default()));
        }
    }
    let differing: Vec<&str> = outputs[0]
        .iter()
        .zip(&outputs[1])
        .filter(|(a, b)| a.1 != b.1 || a.1.is_empty() && !a.0.ends_with("stdout"))
        .map(|(a, _)| a.0.as_str())
        .collect();
    verdict(
        differing.is_empty() && failed_commands.is_empty(),
        format!(
            "{} outputs compared across two rounds; differing or empty: {differing:?}; failed: {failed_commands:?}",
            outputs[0].len()
        ),
    )
}

// ---------------------------------------------------------------- 9

fn throughput() -> Verdict {
    let (net, workload) = sparse_workload(200, 3000, 9);
    let reference = benchmark(&net, &workload, EngineKind::Reference, 5).unwrap();
    let event = benchmark(&net, &workload, EngineKind::EventDriven, 5).unwrap();
    let well_formed = [&reference, &event].iter().all(|r| {
        r.neurons == 200
            && r.horizon == 3000
            && r.wall_seconds > 0.0
            && (r.deliveries_per_second - r.deliveries as f64 / r.wall_seconds).abs()
                <= 1e-6 * r.deliveries_per_second
    });
    let same = reference.deliveries == event.deliveries && reference.fires == event.fires;
    let faster = event.deliveries_per_second >= reference.deliveries_per_second;
    if !faster {
        println!("      warning: event-driven engine slower than reference on this machine");
    }
    verdict(
        well_formed && same && reference.deliveries > 0,
        format!(
            "N=200 M={} horizon 3000: {} deliveries on both engines: {same}; reference {:.3e}/s, \
             event-driven {:.3e}/s ({:.1}x)",
            net.synapse_count(),
            event.deliveries,
            reference.deliveries_per_second,
            event.deliveries_per_second,
            event.deliveries_per_second / reference.deliveries_per_second
        ),
    )
}

fn main() {
    let mut results: Vec<(u8, &str, Verdict, f64)> = Vec::new();
    let mut record = |id: u8, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let clock = Instant::now();
        let v = f();
        let secs = clock.elapsed().as_secs_f64();
        println!(
            "[{}] {id}. {name} ({secs:.1} s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((id, name, v, secs));
    };

    record(1, "AND gate exactness", &mut and_gate);
    record(2, "comparator contract", &mut comparator_contract);
    record(3, "engine cross-validation", &mut engine_cross_validation);
    record(4, "pass soundness", &mut pass_soundness);
    let mut runs = Vec::new();
    record(6, "desk-scale training", &mut || {
        runs = train_all();
        desk_scale_training(&runs)
    });
    record(5, "reduction on evolved networks", &mut || reduction_on_evolved(&runs));
    record(7, "generalization", &mut || generalization(&runs));
    record(8, "determinism", &mut determinism);
    record(9, "throughput report", &mut throughput);

    let failed: Vec<u8> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
