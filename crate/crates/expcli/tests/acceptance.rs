//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria can be selected by number: `cargo test --test acceptance -- 1 4 9`.
//! Criteria 6 and 7 train 90 desk-scale populations and take over an hour
//! on a single core; their metrics are kept under the cargo target tmpdir.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::Array2;
use netmfc::env::{empirical_mean_field, Action, AgentState, GameKind, GridSpec, MeanField};
use netmfc::estimation::{estimate_average_reward, estimate_mean_field};
use netmfc::exchange::{adoption_round, PolicyPacket};
use netmfc::learner::{
    encode_observation, munchausen_target, Observation, QParams, SoftQConstants, Transition,
};
use netmfc::netgraph::{build_vis_graph, CommGraph, RadiusPolicy, VisGraph};
use netmfc::orchestrator::{run_training, Architecture, ExperimentConfig};
use netmfc::system::agent_streams;
use netmfc_exp::{read_metrics, run_sweep, SweepSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REWARD_TOL: f64 = 1e-12;
const GRAD_REL_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;
const MUNCHAUSEN_TOL: f64 = 1e-10;
const CENTRAL_MARGIN: f64 = 0.02;
const DESK_SEEDS: [u64; 3] = [0, 1, 2];
const FINAL_WINDOW: usize = 10;

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Self {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_graph(n: usize, edge_prob: f64, rng: &mut ChaCha8Rng) -> CommGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < edge_prob {
                edges.push((i, j));
            }
        }
    }
    CommGraph::from_edges(n, &edges)
}

fn random_connected_graph(n: usize, rng: &mut ChaCha8Rng) -> CommGraph {
    // A random spanning tree plus a few chords.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        edges.push((order[k], parent));
    }
    for _ in 0..rng.random_range(0..n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    CommGraph::from_edges(n, &edges)
}

fn random_positions(n: usize, grid: GridSpec, rng: &mut ChaCha8Rng) -> Vec<AgentState> {
    (0..n)
        .map(|_| {
            AgentState::new(
                rng.random_range(0..grid.height),
                rng.random_range(0..grid.width),
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 1. Estimator exactness

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(101);
    let mut worst_reward = 0.0f64;
    let mut mf_exact = true;
    for case in 0..40 {
        let grid = GridSpec::new(rng.random_range(1..=10), rng.random_range(1..=10)).unwrap();
        let n = if case == 0 {
            50
        } else {
            rng.random_range(1..=60)
        };
        let positions = random_positions(n, grid, &mut rng);
        let rewards: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let truth = rewards.iter().sum::<f64>() / n as f64;
        let complete = CommGraph::complete(n);
        for est in estimate_average_reward(&rewards, &complete, 1) {
            worst_reward = worst_reward.max((est - truth).abs());
        }
        // Complete visibility, no communication at all.
        let vis = build_vis_graph(&RadiusPolicy::new(1.0, 1.0, 0.0), grid);
        let true_mf = empirical_mean_field(&positions, grid);
        let estimates =
            estimate_mean_field(&positions, grid, &vis, &CommGraph::empty(n), 0).unwrap();
        mf_exact &= estimates.iter().all(|m| *m == true_mf);
    }
    let elapsed = start.elapsed();
    let pass = worst_reward <= REWARD_TOL && mf_exact && within(elapsed, 1.0);
    Verdict::new(
        pass,
        format!(
            "max |r~ - mean r| = {worst_reward:.1e} (tol {REWARD_TOL:.0e}), mean field exact: {mf_exact}, {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Gossip estimators against brute-force oracles

fn hop_ball(graph: &CommGraph, source: usize, radius: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        if dist[u] == radius {
            continue;
        }
        for &v in graph.neighbours(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (0..graph.len()).filter(|&j| dist[j] <= radius).collect()
}

fn reward_oracle(rewards: &[f64], graph: &CommGraph, rounds: usize) -> Vec<f64> {
    (0..graph.len())
        .map(|i| {
            let ball = hop_ball(graph, i, rounds);
            ball.iter().map(|&j| rewards[j]).sum::<f64>() / ball.len() as f64
        })
        .collect()
}

/// Step-by-step replay of mean-field estimation over plain nested vectors.
fn mean_field_replay(
    positions: &[AgentState],
    grid: GridSpec,
    vis: &VisGraph,
    comm: &CommGraph,
    rounds: usize,
) -> Vec<MeanField> {
    let n = positions.len();
    let states = grid.num_states();
    let cell: Vec<usize> = positions.iter().map(|&p| grid.index(p)).collect();
    let mut counts: Vec<Vec<Option<u64>>> = vec![vec![None; states]; n];
    for i in 0..n {
        for &s in vis.visible_from(cell[i]) {
            counts[i][s] = Some(cell.iter().filter(|&&c| c == s).count() as u64);
        }
    }
    for _ in 0..rounds {
        let broadcast = counts.clone();
        let mut next = vec![vec![None; states]; n];
        for (i, held) in next.iter_mut().enumerate() {
            let mut group = vec![i];
            group.extend_from_slice(comm.neighbours(i));
            for (s, slot) in held.iter_mut().enumerate() {
                for &j in &group {
                    if broadcast[j][s].is_some() {
                        *slot = broadcast[j][s];
                    }
                }
            }
        }
        counts = next;
    }
    counts
        .iter()
        .map(|v| {
            let counted: u64 = v.iter().flatten().sum();
            let uncounted = n as u64 - counted;
            let unseen = v.iter().filter(|c| c.is_none()).count();
            let probs = v
                .iter()
                .map(|c| match c {
                    Some(c) => *c as f64 / n as f64,
                    None => uncounted as f64 / (n as f64 * unseen as f64),
                })
                .collect();
            MeanField::from_probs(probs)
        })
        .collect()
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(202);
    let (mut reward_ok, mut mf_ok) = (0, 0);
    let cases = 200;
    for _ in 0..cases {
        let n = rng.random_range(1..=12);
        let graph = random_graph(n, rng.random_range(0.0..0.6), &mut rng);
        let rounds = rng.random_range(0..=5);
        let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let got = estimate_average_reward(&rewards, &graph, rounds);
        let want = reward_oracle(&rewards, &graph, rounds);
        if got
            .iter()
            .zip(&want)
            .all(|(a, b)| a.to_bits() == b.to_bits())
        {
            reward_ok += 1;
        }

        let grid = GridSpec::new(rng.random_range(1..=5), rng.random_range(1..=5)).unwrap();
        let positions = random_positions(n, grid, &mut rng);
        let vis_frac = [0.0, 0.2, 0.4, 0.6, 1.0][rng.random_range(0..5)];
        let vis = build_vis_graph(&RadiusPolicy::new(1.0, vis_frac, 0.0), grid);
        let got = estimate_mean_field(&positions, grid, &vis, &graph, rounds).unwrap();
        let want = mean_field_replay(&positions, grid, &vis, &graph, rounds);
        let same = got.iter().zip(&want).all(|(a, b)| {
            a.probs()
                .iter()
                .zip(b.probs())
                .all(|(x, y)| x.to_bits() == y.to_bits())
        });
        if same {
            mf_ok += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = reward_ok == cases && mf_ok == cases && within(elapsed, 10.0);
    Verdict::new(
        pass,
        format!(
            "average reward {reward_ok}/{cases} and mean field {mf_ok}/{cases} graphs bit-identical to oracles, {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. Backpropagation against central finite differences

/// Adds `delta` to the `idx`-th parameter in flattened tensor order.
fn nudge(params: &mut QParams, idx: usize, delta: f64) {
    let mut seen = 0;
    for t in params.tensors_mut() {
        if idx < seen + t.len() {
            t[idx - seen] += delta;
            return;
        }
        seen += t.len();
    }
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(303);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for _ in 0..10 {
        let depth = rng.random_range(1..=3);
        let mut widths = vec![rng.random_range(2..=7)];
        for _ in 1..depth {
            widths.push(rng.random_range(2..=8));
        }
        widths.push(5);
        let params = QParams::init(&widths, &mut rng);
        let rows = rng.random_range(1..=6);
        let inputs = Array2::from_shape_fn((rows, widths[0]), |_| rng.random_range(-1.0..1.0));
        let actions: Vec<usize> = (0..rows).map(|_| rng.random_range(0..5)).collect();
        let targets: Vec<f64> = (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect();
        let weights: Vec<f64> = (0..rows).map(|_| rng.random_range(0.1..1.0)).collect();
        let loss = |p: &QParams| {
            p.loss_and_grad(inputs.view(), &actions, &targets, &weights)
                .unwrap()
                .0
        };
        let (_, grads) = params
            .loss_and_grad(inputs.view(), &actions, &targets, &weights)
            .unwrap();
        let analytic: Vec<f64> = grads.tensors().flat_map(|t| t.iter().copied()).collect();

        let mut probe = params.clone();
        let mut numeric = Vec::with_capacity(analytic.len());
        let total = params.num_params();
        for idx in 0..total {
            nudge(&mut probe, idx, FD_STEP);
            let up = loss(&probe);
            nudge(&mut probe, idx, -2.0 * FD_STEP);
            let down = loss(&probe);
            nudge(&mut probe, idx, FD_STEP);
            numeric.push((up - down) / (2.0 * FD_STEP));
        }
        for (a, n) in analytic.iter().zip(&numeric) {
            let scale = a.abs().max(n.abs());
            if scale > 1e-6 {
                worst = worst.max((a - n).abs() / scale);
            } else {
                worst = worst.max((a - n).abs());
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < GRAD_REL_TOL && within(elapsed, 10.0);
    Verdict::new(
        pass,
        format!(
            "max relative error {worst:.2e} over {checked} parameters in 10 nets (tol {GRAD_REL_TOL:.0e}), {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. Munchausen target against a scalar oracle

/// `r + clip(τ ln π(a|o), cl, 0) + γ Σ_b π(b|o')(q'(b) − τ ln π(b|o'))`
/// with plain exponentials and logarithms.
fn munchausen_oracle(
    reward: f64,
    q: &[f64],
    action: usize,
    q_next: &[f64],
    c: &SoftQConstants,
) -> f64 {
    let softmax = |v: &[f64]| -> Vec<f64> {
        let z: f64 = v.iter().map(|x| (x / c.tau_q).exp()).sum();
        v.iter().map(|x| (x / c.tau_q).exp() / z).collect()
    };
    let pi = softmax(q);
    let bonus = (c.tau_q * pi[action].ln()).max(c.clip).min(0.0);
    let pi_next = softmax(q_next);
    let soft_value: f64 = pi_next
        .iter()
        .zip(q_next)
        .map(|(p, qn)| {
            if *p > 0.0 {
                p * (qn - c.tau_q * p.ln())
            } else {
                0.0
            }
        })
        .sum();
    reward + bonus + c.gamma * soft_value
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(404);
    let c = SoftQConstants {
        tau_q: 0.03,
        gamma: 0.9,
        clip: -1.0,
    };
    let grid = GridSpec::new(2, 2).unwrap();
    let mut target = QParams::init(&[Observation::width_for(grid), 16, 16, 5], &mut rng);
    // Widen the Q spread so the log-policy clip binds on some transitions.
    target.layers[2].weights.mapv_inplace(|w| w * 12.0);
    let random_obs = |rng: &mut ChaCha8Rng| {
        let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mf = MeanField::from_probs(raw.iter().map(|x| x / total).collect());
        let s = AgentState::new(rng.random_range(0..2), rng.random_range(0..2));
        encode_observation(s, Some(&mf), grid)
    };
    let mut worst = 0.0f64;
    let mut clipped = 0;
    for _ in 0..100 {
        let obs = random_obs(&mut rng);
        let next_obs = random_obs(&mut rng);
        let action = rng.random_range(0..5);
        let reward = rng.random_range(-1.0..2.0);
        let t = Transition {
            obs: obs.clone(),
            action: Action::from_index(action),
            reward,
            next_obs: next_obs.clone(),
        };
        let got = munchausen_target(&t, &target, &c).unwrap();
        let (obs, next) = (obs.as_slice().to_vec(), next_obs.as_slice().to_vec());
        let q = target.forward(&obs).unwrap();
        let q_next = target.forward(&next).unwrap();
        let want = munchausen_oracle(reward, &q, action, &q_next, &c);
        let z: f64 = q.iter().map(|x| (x / c.tau_q).exp()).sum();
        clipped += (c.tau_q * ((q[action] / c.tau_q).exp() / z).ln() < c.clip) as usize;
        worst = worst.max((got - want).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst < MUNCHAUSEN_TOL && within(elapsed, 1.0);
    Verdict::new(
        pass,
        format!(
            "max |target - oracle| = {worst:.2e} on 100 transitions, {clipped} clipped (tol {MUNCHAUSEN_TOL:.0e}), {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. Max-consensus of adoption at vanishing temperature

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut rng = rng(505);
    let mut converged = 0;
    let cases = 50;
    for case in 0..cases {
        let n = rng.random_range(2..=30);
        let graph = random_connected_graph(n, &mut rng);
        let diameter = graph.diameter().expect("generator builds connected graphs");
        let mut sigmas: Vec<f64> = (0..n)
            .map(|i| i as f64 * 0.37 + rng.random_range(0.0..0.1))
            .collect();
        sigmas.shuffle(&mut rng);
        let best = (0..n)
            .max_by(|&a, &b| sigmas[a].total_cmp(&sigmas[b]))
            .unwrap();
        let start_packets: Vec<PolicyPacket> = sigmas
            .iter()
            .map(|&sigma| PolicyPacket {
                sigma,
                params: Arc::new(QParams::zeros(&[1, 1])),
            })
            .collect();
        let mut held = start_packets.clone();
        let mut rngs = agent_streams(case, n);
        for _ in 0..diameter {
            held = adoption_round(&held, &graph, 1e-18, &mut rngs).0;
        }
        if held
            .iter()
            .all(|p| Arc::ptr_eq(&p.params, &start_packets[best].params))
        {
            converged += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = converged == cases && within(elapsed, 5.0);
    Verdict::new(
        pass,
        format!(
            "{converged}/{cases} connected graphs reached max-consensus within diameter rounds, {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 6 and 7. Architecture ordering at the desk preset

fn acceptance_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name)
}

/// Mean over seeds of the mean `v_pop_hat` over the final iterations, keyed
/// by (game, architecture).
fn final_returns(spec: &SweepSpec) -> Result<BTreeMap<(String, String), f64>, String> {
    let report = run_sweep(spec).map_err(|e| format!("{e:#}"))?;
    if let Some(failed) = report.failures().next() {
        return Err(format!(
            "run {} failed: {}",
            failed.name,
            failed.error.as_deref().unwrap_or("")
        ));
    }
    let rows = read_metrics(&spec.output_dir.join(&report.merged)).map_err(|e| format!("{e:#}"))?;
    let k_total = spec.base.iterations;
    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.k + FINAL_WINDOW >= k_total) {
        let e = sums
            .entry((r.game.clone(), r.architecture.clone()))
            .or_default();
        e.0 += r.v_pop_hat;
        e.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(key, (s, c))| (key, s / c as f64))
        .collect())
}

fn desk_sweep(name: &str, architectures: Vec<Architecture>, link_failure_prob: f64) -> SweepSpec {
    let base = ExperimentConfig {
        comm_radius: 1.0,
        link_failure_prob,
        ..ExperimentConfig::desk()
    };
    let mut spec = SweepSpec::single(base, acceptance_dir(name));
    spec.games = GameKind::ALL.to_vec();
    spec.architectures = architectures;
    spec.seeds = DESK_SEEDS.to_vec();
    spec
}

fn lookup(table: &BTreeMap<(String, String), f64>, game: GameKind, arch: Architecture) -> f64 {
    table[&(game.name().to_string(), arch.name().to_string())]
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let spec = desk_sweep("criterion6", Architecture::ALL.to_vec(), 0.0);
    let table = match final_returns(&spec) {
        Ok(t) => t,
        Err(e) => return Verdict::new(false, format!("sweep failed: {e}")),
    };
    let mut details = Vec::new();
    let (mut beats_ind, mut coord_ok, mut coord_total, mut anti_wins) = (0, 0, 0, 0);
    for game in GameKind::ALL {
        let net = lookup(&table, game, Architecture::Networked);
        let ind = lookup(&table, game, Architecture::Independent);
        let cen = lookup(&table, game, Architecture::CentralAgent);
        beats_ind += (net > ind) as usize;
        if game.is_coordination() {
            coord_total += 1;
            coord_ok += (net >= cen - CENTRAL_MARGIN) as usize;
        } else {
            anti_wins += (net > cen) as usize;
        }
        details.push(format!(
            "{:<17} networked {net:.4}  independent {ind:.4}  central {cen:.4}",
            game.name()
        ));
    }
    let pass = beats_ind == 6 && coord_ok == coord_total && anti_wins >= 3;
    let mut v = Verdict::new(
        pass,
        format!(
            "networked > independent in {beats_ind}/6 (need 6), >= central-{CENTRAL_MARGIN} in {coord_ok}/{coord_total} coordination (need all), > central in {anti_wins}/4 anti-coordination (need 3), {:.0}s",
            start.elapsed().as_secs_f64()
        ),
    );
    v.details = details;
    v
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    // Independent agents have no links, so the failure probability leaves
    // their runs unchanged; they are rerun here to keep the check standalone.
    let spec = desk_sweep(
        "criterion7",
        vec![Architecture::Networked, Architecture::Independent],
        0.9,
    );
    let table = match final_returns(&spec) {
        Ok(t) => t,
        Err(e) => return Verdict::new(false, format!("sweep failed: {e}")),
    };
    let mut details = Vec::new();
    let mut wins = 0;
    for game in GameKind::ALL {
        let net = lookup(&table, game, Architecture::Networked);
        let ind = lookup(&table, game, Architecture::Independent);
        wins += (net > ind) as usize;
        details.push(format!(
            "{:<17} networked {net:.4}  independent {ind:.4}",
            game.name()
        ));
    }
    let mut v = Verdict::new(
        wins >= 5,
        format!(
            "with 90% link failure networked > independent in {wins}/6 (need 5), {:.0}s",
            start.elapsed().as_secs_f64()
        ),
    );
    v.details = details;
    v
}

// ---------------------------------------------------------------------------
// 8. Determinism across reruns and worker counts

fn sweep_bytes(spec: &SweepSpec, threads: usize) -> Result<Vec<u8>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    let report = pool
        .install(|| run_sweep(spec))
        .map_err(|e| format!("{e:#}"))?;
    if !report.all_ok() {
        return Err("a run failed".into());
    }
    std::fs::read(spec.output_dir.join(&report.merged)).map_err(|e| e.to_string())
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let base = ExperimentConfig {
        iterations: 3,
        link_failure_prob: 0.3,
        comm_radius: 0.4,
        ..ExperimentConfig::desk()
    };
    let mut spec = SweepSpec::single(base, acceptance_dir("criterion8/a"));
    spec.games = vec![GameKind::TargetCoverage];
    spec.architectures = Architecture::ALL.to_vec();
    spec.seeds = vec![11, 12];
    let first = sweep_bytes(&spec, 1);
    spec.output_dir = acceptance_dir("criterion8/b");
    let second = sweep_bytes(&spec, 1);
    spec.output_dir = acceptance_dir("criterion8/c");
    let parallel = sweep_bytes(&spec, 8);
    let elapsed = start.elapsed().as_secs_f64();
    match (first, second, parallel) {
        (Ok(a), Ok(b), Ok(c)) => Verdict::new(
            a == b && a == c && !a.is_empty(),
            format!(
                "rerun identical: {}, 1 vs 8 workers identical: {} ({} bytes), {elapsed:.0}s",
                a == b,
                a == c,
                a.len()
            ),
        ),
        (a, b, c) => Verdict::new(
            false,
            format!("sweep failed: {:?}", [a.err(), b.err(), c.err()]),
        ),
    }
}

// ---------------------------------------------------------------------------
// 9. Non-episodic clock

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for (k, m, e, cp) in [(2, 20, 20, 1), (3, 5, 7, 2), (1, 1, 1, 0)] {
        for arch in Architecture::ALL {
            let cfg = ExperimentConfig {
                architecture: arch,
                iterations: k,
                collect_steps: m,
                eval_steps: e,
                policy_rounds: cp,
                train_steps: 2,
                ..ExperimentConfig::desk()
            };
            let expected = match arch {
                Architecture::Networked => k * (m + e + cp),
                _ => k * m,
            } as u64;
            match run_training(&cfg) {
                Ok(out) => {
                    let ok = out.final_t == expected;
                    pass &= ok;
                    if !ok {
                        details.push(format!(
                            "{arch} K={k} M={m} E={e} C_p={cp}: t={} expected {expected}",
                            out.final_t
                        ));
                    }
                }
                Err(err) => {
                    pass = false;
                    details.push(format!("{arch}: {err}"));
                }
            }
        }
    }
    let mut v = Verdict::new(
        pass,
        format!(
            "final t equals K(M+E+C_p) for networked and K*M otherwise in 9/9 configurations: {pass}, {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
    v.details = details;
    v
}

// ---------------------------------------------------------------------------

type Criterion = (usize, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 9] = [
    (1, "estimator exactness", criterion_1),
    (2, "gossip oracle equivalence", criterion_2),
    (3, "gradient correctness", criterion_3),
    (4, "munchausen target", criterion_4),
    (5, "max-consensus", criterion_5),
    (6, "architecture ordering at desk preset", criterion_6),
    (7, "robustness to 90% link failure", criterion_7),
    (8, "determinism", criterion_8),
    (9, "non-episodic clock", criterion_9),
];

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            println!("SKIP criterion {id} ({name})");
            continue;
        }
        let verdict = check();
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} ({name}): {}", verdict.summary);
        for line in &verdict.details {
            println!("       {line}");
        }
        failed += (!verdict.pass) as usize;
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all selected criteria passed");
        ExitCode::SUCCESS
    }
}
