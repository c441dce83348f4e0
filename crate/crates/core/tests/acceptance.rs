//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tscgp::gp::evolve::{evolve, GpConfig};
use tscgp::gp::tree::{crossover, mutate, ExprTree, Op, TreeGen};
use tscgp::metrics::{aggregate, compute, MetricsReport};
use tscgp::network::{
    generate_flow, generate_grid, read_flow, read_roadnet, write_flow, write_roadnet, FlowParams, Intersection,
    RoadNetwork, Turn, MOVEMENTS_PER_INTERSECTION, PHASE_COUNT,
};
use tscgp::policy::{
    AsymmetricUrgencyPolicy, Baseline, FixedTime, MaxPressure, PolicyMode, RandomPhase, SymmetricUrgencyPolicy,
    UrgencyPolicy,
};
use tscgp::sim::{run_scenario, Controller, Observation, Scenario, SignalMode, SimOptions, SimState};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Congested 2x2 reference scenario (criteria 6 and 8).
const GRID2_RATE: f64 = 500.0;
/// 1x1 training scenario (criterion 7).
const GRID1_RATE: f64 = 700.0;
const HORIZON: u32 = 3600;

fn scenario(rows: usize, cols: usize, rate: f64, flow_seed: u64) -> Scenario {
    let network = generate_grid(rows, cols, 300.0).unwrap();
    let params = FlowParams {
        horizon: HORIZON,
        rate,
        turn_probs: [0.1, 0.8, 0.1],
    };
    let flow = generate_flow(&network, &params, flow_seed).unwrap();
    Scenario {
        network,
        flow,
        horizon: HORIZON,
    }
}

fn random_observation(inter: &Intersection, index: usize, max_count: u32, rng: &mut ChaCha8Rng) -> Observation {
    let mut obs = Observation::empty(index, inter);
    for lane in inter.lanes {
        let c = rng.random_range(0..=max_count);
        let w = rng.random_range(0..=c);
        obs.set_lane_counts(lane, w, c);
    }
    obs
}

fn random_tree(gen: &TreeGen, rng: &mut ChaCha8Rng) -> ExprTree {
    let depth = rng.random_range(0..=6);
    if rng.random_bool(0.5) {
        gen.full(depth, rng)
    } else {
        gen.grow(0, depth, rng)
    }
}

fn swapped(inter: &Intersection) -> Intersection {
    let mut out = inter.clone();
    for p in out.phases.iter_mut() {
        p.movements.swap(0, 1);
    }
    out
}

fn symmetry() -> Outcome {
    let net = generate_grid(1, 1, 300.0).unwrap();
    let inter = &net.intersections[0];
    let relabeled = swapped(inter);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let sym_gen = TreeGen::new(8);
    let asym_gen = TreeGen::new(16);
    let mut asym_counterexamples = 0;
    for k in 0..1000 {
        let obs = random_observation(inter, 0, 40, &mut rng);
        let p = rng.random_range(0..PHASE_COUNT);

        let sym = SymmetricUrgencyPolicy::new(random_tree(&sym_gen, &mut rng)).unwrap();
        let a = sym.phase_urgency(inter, &obs, &inter.phases[p]);
        let b = sym.phase_urgency(inter, &obs, &relabeled.phases[p]);
        if a.to_bits() != b.to_bits() {
            return Err(format!("pair {k}: urgency {a} != {b} after exchange ({})", sym.tree()));
        }
        if sym.choose_phase(inter, &obs) != sym.choose_phase(&relabeled, &obs) {
            return Err(format!("pair {k}: choice changed under relabeling ({})", sym.tree()));
        }

        let asym = AsymmetricUrgencyPolicy::new(random_tree(&asym_gen, &mut rng)).unwrap();
        let a = asym.phase_urgency(inter, &obs, &inter.phases[p]);
        let b = asym.phase_urgency(inter, &obs, &relabeled.phases[p]);
        if a.to_bits() != b.to_bits() {
            asym_counterexamples += 1;
        }
    }
    if asym_counterexamples == 0 {
        return Err("asymmetric mode showed no counterexample".into());
    }
    Ok(format!("1000 pairs exact; asymmetric counterexamples {asym_counterexamples}"))
}

fn protected_division() -> Outcome {
    if Op::Div.apply(7.5, 0.0) != 1.0 {
        return Err("x / 0 is not 1".into());
    }
    let zero_div = ExprTree::parse("(/ C2 (- W1 W1))").unwrap();
    if zero_div.eval(&[0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 9.0, 0.0]) != 1.0 {
        return Err("C2 / (W1 - W1) is not 1".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let gen = TreeGen::new(8);
    let scales = [0.0, 1.0, 40.0, 1e6, 1e150, 1e300];
    for k in 0..100_000 {
        let tree = random_tree(&gen, &mut rng);
        let scale = scales[rng.random_range(0..scales.len())];
        let x: Vec<f64> = (0..8)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(-1.0..=1.0) * scale
                }
            })
            .collect();
        let y = tree.eval(&x);
        if !y.is_finite() {
            return Err(format!("case {k}: {tree} on {x:?} gave {y}"));
        }
    }
    Ok("100000 random trees finite; x/0 = 1".into())
}

fn gp_structure() -> Outcome {
    let gen = TreeGen::new(8);
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut pool: Vec<ExprTree> = gen.ramped_half_and_half(50, 3, 6, &mut rng);
    for k in 0..100_000 {
        let i = rng.random_range(0..pool.len());
        let j = rng.random_range(0..pool.len());
        if rng.random_bool(0.5) {
            let (a, b) = crossover(&pool[i], &pool[j], 6, &mut rng);
            pool[i] = a;
            pool[j] = b;
        } else {
            pool[i] = mutate(&pool[i], &gen, 6, &mut rng);
        }
        if let Some(t) = [&pool[i], &pool[j]].into_iter().find(|t| t.depth() > 6) {
            return Err(format!("operation {k} produced depth {}", t.depth()));
        }
    }
    if let Some(t) = pool.iter().find(|t| t.depth() > 6 || ExprTree::parse(&t.to_sexpr()).as_ref() != Ok(*t)) {
        return Err(format!("invalid tree after fuzzing: {t}"));
    }

    let init = gen.ramped_half_and_half(100, 3, 6, &mut ChaCha8Rng::seed_from_u64(304));
    let mut per_depth = [0usize; 7];
    for (i, t) in init.iter().enumerate() {
        let d = t.depth();
        if !(3..=6).contains(&d) {
            return Err(format!("initial tree {i} has depth {d}"));
        }
        per_depth[d] += 1;
        let target = 3 + i % 4;
        let full = (i / 4) % 2 == 0;
        if full && t.len() != (1 << (target + 1)) - 1 {
            return Err(format!("tree {i} should be full at depth {target}"));
        }
        if !full && d > target {
            return Err(format!("grow tree {i} exceeds its depth bucket {target}"));
        }
    }
    let full_depths: Vec<usize> = init.iter().enumerate().filter(|(i, _)| (i / 4) % 2 == 0).map(|(_, t)| t.depth()).collect();
    if (3..=6).any(|d| !full_depths.contains(&d)) {
        return Err("a depth bucket is missing".into());
    }

    let sc = scenario(1, 1, GRID1_RATE, 7);
    let config = GpConfig {
        population_size: 20,
        generations: 20,
        seed: 3,
        ..GpConfig::default()
    };
    let (_, log) = evolve(&config, &sc, PolicyMode::Symmetric).map_err(|e| e.to_string())?;
    let series: Vec<f64> = log.generations.iter().map(|g| g.best_att).collect();
    if series.len() != 20 || series.windows(2).any(|w| w[1] > w[0]) {
        return Err(format!("best series not non-increasing: {series:?}"));
    }
    Ok(format!(
        "depth <= 6 over 100000 ops; init depths {:?}; best ATT {:.2} -> {:.2} over 20 generations",
        &per_depth[3..],
        series[0],
        series[19]
    ))
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let grids = [(1, 1), (1, 2), (2, 2)];
    let mut steps = 0usize;
    let mut crossings = 0usize;
    let mut switches = 0usize;
    for episode in 0..100 {
        let (rows, cols) = grids[rng.random_range(0..grids.len())];
        let net = generate_grid(rows, cols, rng.random_range(60.0..=300.0)).unwrap();
        let mut probs = [rng.random::<f64>() + 0.05, rng.random::<f64>() + 0.05, rng.random::<f64>() + 0.05];
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        probs[1] = 1.0 - probs[0] - probs[2];
        let horizon = rng.random_range(300..=900);
        let params = FlowParams {
            horizon,
            rate: rng.random_range(50.0..=1200.0),
            turn_probs: probs,
        };
        let flow = generate_flow(&net, &params, rng.random()).unwrap();
        let mut controller: Box<dyn Controller> = match episode % 4 {
            0 => Box::new(RandomPhase::new(rng.random())),
            1 => Box::new(FixedTime::default()),
            2 => Box::new(MaxPressure),
            _ => {
                let tree = random_tree(&TreeGen::new(8), &mut rng);
                Box::new(UrgencyPolicy::new(PolicyMode::Symmetric, tree).unwrap())
            }
        };
        let mut state = SimState::new(&net, &flow, horizon, controller.as_mut(), SimOptions::default());
        while !state.is_finished() {
            state.step(controller.as_mut());
            steps += 1;
            if state.spawned() != state.in_network() + state.completed() {
                return Err(format!(
                    "episode {episode} t={}: spawned {} != in network {} + completed {}",
                    state.clock(),
                    state.spawned(),
                    state.in_network(),
                    state.completed()
                ));
            }
            for c in state.last_crossings() {
                crossings += 1;
                if c.kind == Turn::Right {
                    continue;
                }
                let inter = &net.intersections[c.intersection];
                let allowed = inter.phases[c.phase]
                    .movements
                    .iter()
                    .any(|m| m.index() % MOVEMENTS_PER_INTERSECTION == c.movement);
                if c.mode != SignalMode::Green || !allowed {
                    return Err(format!("episode {episode} t={}: red-light crossing {c:?}", state.clock()));
                }
            }
        }
        let result = state.finish();
        for i in 0..result.signalized {
            let runs = mode_runs((0..horizon as usize).map(|t| result.snapshot(t, i)));
            let last = runs.len() - 1;
            for (k, &(mode, phase, len)) in runs.iter().enumerate() {
                let truncated = k == last;
                let ok = match mode {
                    SignalMode::Green => truncated || len >= 10,
                    SignalMode::Yellow => (truncated && len <= 3) || len == 3,
                    SignalMode::AllRed => (truncated && len <= 2) || len == 2,
                };
                if !ok {
                    return Err(format!("episode {episode} intersection {i}: {mode:?} lasted {len} s"));
                }
                if let Some(&(next, next_phase, _)) = runs.get(k + 1) {
                    let expected = match mode {
                        SignalMode::Green => SignalMode::Yellow,
                        SignalMode::Yellow => SignalMode::AllRed,
                        SignalMode::AllRed => SignalMode::Green,
                    };
                    if next != expected {
                        return Err(format!("episode {episode}: {mode:?} followed by {next:?}"));
                    }
                    if mode == SignalMode::AllRed && next_phase == phase {
                        return Err(format!("episode {episode}: switched to the same phase"));
                    }
                    if mode == SignalMode::Green {
                        switches += 1;
                    }
                }
            }
        }
    }
    Ok(format!("100 episodes, {steps} steps, {crossings} crossings, {switches} phase changes"))
}

/// Maximal runs of equal mode, with the phase in force and the run length.
fn mode_runs(snaps: impl Iterator<Item = tscgp::sim::SignalSnapshot>) -> Vec<(SignalMode, u8, u32)> {
    let mut runs: Vec<(SignalMode, u8, u32)> = Vec::new();
    for s in snaps {
        match runs.last_mut() {
            Some((m, p, n)) if *m == s.mode && (*m != SignalMode::Green || *p == s.phase) => *n += 1,
            _ => runs.push((s.mode, s.phase, 1)),
        }
    }
    runs
}

fn oracle() -> Outcome {
    let net = generate_grid(1, 1, 300.0).unwrap();
    let inter = &net.intersections[0];
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let gen = TreeGen::new(8);
    let mut ties = 0;
    for k in 0..1000 {
        // small counts and tiny trees make ties common
        let (max_count, tree) = if k % 2 == 0 {
            (2, gen.grow(0, 1, &mut rng))
        } else {
            (40, random_tree(&gen, &mut rng))
        };
        let obs = random_observation(inter, 0, max_count, &mut rng);
        let urgencies = brute_force_urgencies(&net, inter, &obs, &tree);
        let mut best = 0;
        for p in 1..PHASE_COUNT {
            if urgencies[p] > urgencies[best] {
                best = p;
            }
        }
        if urgencies.iter().filter(|&&u| u == urgencies[best]).count() > 1 {
            ties += 1;
        }
        let policy = SymmetricUrgencyPolicy::new(tree.clone()).unwrap();
        let got = policy.choose_phase(inter, &obs);
        if got != best {
            return Err(format!("observation {k}: chose {got}, brute force {best} ({tree}, {urgencies:?})"));
        }
    }
    if ties == 0 {
        return Err("no tie cases were exercised".into());
    }
    Ok(format!("1000 observations agree, {ties} with tied maxima"))
}

/// Phase urgencies computed straight from the lane counts.
fn brute_force_urgencies(net: &RoadNetwork, inter: &Intersection, obs: &Observation, tree: &ExprTree) -> [f64; 8] {
    std::array::from_fn(|p| {
        inter.phases[p]
            .movements
            .iter()
            .map(|&id| {
                let m = net.movement(id);
                let mut lanes = vec![m.incoming_lane];
                lanes.extend(net.road(m.outgoing_road).lanes);
                let (w, c): (Vec<f64>, Vec<f64>) = lanes
                    .iter()
                    .map(|&l| {
                        let (w, c) = obs.lane_counts(l).unwrap();
                        (w as f64, c as f64)
                    })
                    .unzip();
                let x: Vec<f64> = w.into_iter().chain(c).collect();
                tree.eval(&x)
            })
            .sum()
    })
}

fn baseline_reports(method: Baseline, seeds: std::ops::Range<u64>) -> Vec<MetricsReport> {
    seeds
        .map(|seed| {
            let sc = scenario(2, 2, GRID2_RATE, seed);
            let mut c = method.controller(seed);
            compute(&run_scenario(&sc, c.as_mut()))
        })
        .collect()
}

fn baseline_ordering() -> Outcome {
    let start = Instant::now();
    let stat = |b| aggregate(&baseline_reports(b, 0..10)).unwrap().att;
    let (mp, fx, rnd) = (stat(Baseline::MaxPressure), stat(Baseline::Fixed), stat(Baseline::Random));
    let elapsed = start.elapsed();
    let text = format!(
        "ATT max-pressure {:.1}±{:.1} < fixed {:.1}±{:.1} < random {:.1}±{:.1} in {:.1}s",
        mp.mean,
        mp.std,
        fx.mean,
        fx.std,
        rnd.mean,
        rnd.std,
        elapsed.as_secs_f64()
    );
    let gap_ok = |lo: tscgp::metrics::Stat, hi: tscgp::metrics::Stat| hi.mean - lo.mean > lo.std.max(hi.std);
    if !(mp.mean < fx.mean && fx.mean < rnd.mean) || !gap_ok(mp, fx) || !gap_ok(fx, rnd) {
        return Err(text);
    }
    if elapsed > Duration::from_secs(300) {
        return Err(format!("too slow: {text}"));
    }
    Ok(text)
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

/// Mean convergence over a fixed seed panel; demand and GP share the seed.
fn learning() -> Outcome {
    let config = GpConfig {
        population_size: 30,
        generations: 15,
        ..GpConfig::default()
    };
    let (mut initial, mut fin, mut mp) = (Vec::new(), Vec::new(), Vec::new());
    let mut slowest = Duration::ZERO;
    for seed in 0..10u64 {
        let sc = scenario(1, 1, GRID1_RATE, seed);
        let start = Instant::now();
        let config = GpConfig { seed, ..config };
        let (_, log) = with_pool(4, || evolve(&config, &sc, PolicyMode::Symmetric)).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        initial.push(log.initial_best().unwrap());
        fin.push(log.final_best().unwrap());
        mp.push(compute(&run_scenario(&sc, &mut MaxPressure)).att);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (i, f, m) = (mean(&initial), mean(&fin), mean(&mp));
    let below = initial.iter().zip(&fin).filter(|(i, f)| **f > 0.98 * **i).count();
    let text = format!(
        "mean initial best {i:.2}, final best {f:.2} (ratio {:.3}), max-pressure {m:.2}; \
         {below}/10 runs improved by less than 2%; slowest run {:.1}s",
        f / i,
        slowest.as_secs_f64()
    );
    if f <= 0.98 * i && f <= 1.05 * m && slowest <= Duration::from_secs(900) {
        Ok(text)
    } else {
        Err(text)
    }
}

fn symmetric_vs_asymmetric() -> Outcome {
    let mut sym = Vec::new();
    let mut asym = Vec::new();
    for seed in 0..5u64 {
        let sc = scenario(2, 2, GRID2_RATE, 100 + seed);
        for (mode, out) in [(PolicyMode::Symmetric, &mut sym), (PolicyMode::Asymmetric, &mut asym)] {
            let config = GpConfig {
                population_size: 30,
                generations: 15,
                seed,
                ..GpConfig::default()
            };
            let (_, log) = with_pool(4, || evolve(&config, &sc, mode)).map_err(|e| e.to_string())?;
            out.push((log.initial_best().unwrap(), log.final_best().unwrap()));
        }
    }
    let mean = |v: &[(f64, f64)], f: fn(&(f64, f64)) -> f64| v.iter().map(f).sum::<f64>() / v.len() as f64;
    let (si, ai) = (mean(&sym, |r| r.0), mean(&asym, |r| r.0));
    let (sf, af) = (mean(&sym, |r| r.1), mean(&asym, |r| r.1));
    let text = format!("mean initial best symmetric {si:.2} vs asymmetric {ai:.2} (final {sf:.2} vs {af:.2})");
    if si <= ai {
        Ok(text)
    } else {
        Err(text)
    }
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tscgp"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TSCGP_OUT")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn snapshot_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let mut snapshots = Vec::new();
    for (run, jobs) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let out = format!("{run}/out");
        let scen = format!("{run}/scenario");
        let policy = format!("{out}/seed_3/best_policy.toml");
        run_cli(&["gen-grid", "--grid", "2x2", "--rate", "400", "--seed", "9", "--out", &scen], root)?;
        run_cli(
            &["--jobs", jobs, "evolve", "--grid", "1x1", "--rate", "500", "--pop", "12", "--gens", "4", "--seed", "3,4", "--out", &out],
            root,
        )?;
        run_cli(&["--jobs", jobs, "baseline", "all", "--scenario", &scen, "--seed", "1,2", "--out", &out], root)?;
        run_cli(
            &["--jobs", jobs, "evaluate", "--policy", &policy, "--scenario", &scen, "--seed", "1", "--trace", "--out", &out],
            root,
        )?;
        run_cli(&["report", &out], root)?;
        snapshots.push(snapshot_dir(&root.join(run)));
    }
    let files = snapshots[0].len();
    if files < 12 {
        return Err(format!("only {files} output files"));
    }
    for (k, s) in snapshots.iter().enumerate().skip(1) {
        if s != &snapshots[0] {
            let differing: Vec<&str> = s
                .iter()
                .zip(&snapshots[0])
                .filter(|(a, b)| a != b)
                .map(|(a, _)| a.0.as_str())
                .collect();
            return Err(format!("run {k} differs: {differing:?}"));
        }
    }
    Ok(format!("{files} files byte-identical across 3 runs (--jobs 1, 4, 4)"))
}

fn round_trips() -> Outcome {
    let mut checked = 0;
    for (rows, cols) in [(1, 1), (2, 2), (3, 4)] {
        let net = generate_grid(rows, cols, 300.0).unwrap();
        let text = write_roadnet(&net);
        let back = read_roadnet(&text).map_err(|e| e.to_string())?;
        if write_roadnet(&back) != text {
            return Err(format!("{rows}x{cols} roadnet changed on round trip"));
        }
        let flow = generate_flow(&net, &FlowParams::default(), 5).unwrap();
        let ftext = write_flow(&flow, &net);
        if write_flow(&read_flow(&ftext, &back).map_err(|e| e.to_string())?, &back) != ftext {
            return Err(format!("{rows}x{cols} flow changed on round trip"));
        }
        checked += 2;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for (mode, n_vars) in [(PolicyMode::Symmetric, 8), (PolicyMode::Asymmetric, 16)] {
        let gen = TreeGen::new(n_vars);
        for _ in 0..500 {
            let policy = UrgencyPolicy::new(mode, random_tree(&gen, &mut rng)).unwrap();
            let text = policy.to_file_string();
            let back = UrgencyPolicy::from_file_string(&text).map_err(|e| format!("{e}: {text}"))?;
            if back.to_file_string() != text || back != policy {
                return Err(format!("policy changed on round trip: {text}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} files stable under write -> read -> write"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("symmetry property", symmetry),
        ("protected-division totality", protected_division),
        ("GP structural suite", gp_structure),
        ("simulator conservation and signal timing", conservation),
        ("oracle equivalence of phase choice", oracle),
        ("baseline ordering on the congested 2x2 grid", baseline_ordering),
        ("learning effectiveness on the 1x1 grid", learning),
        ("symmetric vs asymmetric initialization", symmetric_vs_asymmetric),
        ("CLI determinism across --jobs", determinism),
        ("file round-trips", round_trips),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == n.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
