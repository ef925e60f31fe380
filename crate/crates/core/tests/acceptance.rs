//! Acceptance runner: one PASS/FAIL/SKIP line per criterion, non-zero exit if
//! any criterion fails. Built with `harness = false` so the lines are visible
//! under a plain `cargo test`.

mod common;

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simserve::bench::{random_actions, run_benchmark, BenchConfig};
use simserve::client::{settings, Client};
use simserve::render::{render_camera, CameraConfig};
use simserve::scalar::Pose;
use simserve::session::{AgentId, Engine, Executed, FrameHost, Scheduler, TickState, DEFAULT_FRAME_BUDGET, DEFAULT_QUEUE_LIMIT};
use simserve::sim::Fnv1a;
use simserve::transport::{serve, ServerConfig};
use simserve::wire::{decode_message, encode_message, Body, EpisodeStateTag, Message, Settings, Tensor, Uid};
use simserve::SceneRegistry;

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("WTM oracle equivalence", wtm_oracle),
        ("Protocol round-trip", protocol_round_trip),
        ("Determinism replay", determinism_replay),
        ("Ordering under concurrency", ordering),
        ("Block Settle frame accounting", block_settle_accounting),
        ("Throughput scaling", throughput),
        ("Renderer goldens", renderer_goldens),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.to_lowercase().contains(&f.to_lowercase())) {
            continue;
        }
        let began = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = began.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) if detail.starts_with("SKIPPED") => println!("[SKIP] {name}: {detail} ({secs:.1} s)"),
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.1} s)");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed or skipped");
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ── WTM oracle ──────────────────────────────────────────────────

/// Pending/future loop written directly from the algorithm description: each
/// pending agent drains its queue until a MustTick; agents that ticked with work
/// left form the next pending list; the world ticks once per pass if anyone
/// asked for it. Returns the frame index each request executed in.
fn reference_schedule(queues: &[Vec<TickState>]) -> Vec<Vec<u64>> {
    let mut cursor = vec![0usize; queues.len()];
    let mut frames: Vec<Vec<u64>> = vec![Vec::new(); queues.len()];
    let mut pending: Vec<usize> = (0..queues.len()).filter(|&a| !queues[a].is_empty()).collect();
    let mut frame = 0u64;
    while !pending.is_empty() {
        let mut future = Vec::new();
        for &a in &pending {
            while cursor[a] < queues[a].len() {
                let state = queues[a][cursor[a]];
                cursor[a] += 1;
                frames[a].push(frame);
                if state == TickState::MustTick {
                    future.push(a);
                    break;
                }
            }
        }
        if !future.is_empty() {
            frame += 1;
        }
        pending = future.into_iter().filter(|&a| cursor[a] < queues[a].len()).collect();
    }
    frames
}

struct Recorder {
    ids: Vec<AgentId>,
    frame: u64,
    frames: Vec<Vec<u64>>,
}

impl FrameHost for Recorder {
    type Request = TickState;

    fn execute(&mut self, agent: AgentId, request: TickState) -> Executed<TickState> {
        let slot = self.ids.iter().position(|&a| a == agent).expect("known agent");
        self.frames[slot].push(self.frame);
        Executed::done(request)
    }

    fn advance(&mut self, _ticked: &[AgentId]) {
        self.frame += 1;
    }
}

fn wtm_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let states = [TickState::MayTick, TickState::MustTick, TickState::MustNotTick];
    let mut mismatches = 0;
    let mut first = None;
    for scenario in 0..10_000 {
        let agents = rng.gen_range(1..=4);
        let total = rng.gen_range(0..=50);
        let mut queues = vec![Vec::new(); agents];
        for _ in 0..total {
            queues[rng.gen_range(0..agents)].push(states[rng.gen_range(0..3)]);
        }
        // sparse ascending ids, so visiting order is tested against id order
        let mut ids: Vec<AgentId> = Vec::new();
        while ids.len() < agents {
            let id = rng.gen_range(1..1_000u64);
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        ids.sort_unstable();
        // submission order shuffled so it cannot stand in for id order
        let mut order: Vec<usize> = (0..agents).collect();
        for i in (1..agents).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }

        let mut sched = Scheduler::new(DEFAULT_QUEUE_LIMIT, DEFAULT_FRAME_BUDGET);
        for &a in &order {
            for &s in &queues[a] {
                sched.schedule(ids[a], s).map_err(|e| e.to_string())?;
            }
        }
        let mut host = Recorder { ids: ids.clone(), frame: 0, frames: vec![Vec::new(); agents] };
        while !sched.is_idle() {
            sched.run_frame_cycle(&mut host);
        }
        let expected = reference_schedule(&queues);
        if host.frames != expected {
            mismatches += 1;
            first.get_or_insert(scenario);
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatching scenarios, first #{}", first.unwrap()))?;
    Ok("10000 scenarios, 0 mismatches".into())
}

// ── protocol ────────────────────────────────────────────────────

fn protocol_round_trip() -> Outcome {
    const GENERATED: usize = 50_000;
    const FUZZ: usize = 1_000_000;
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha));
    let strategy = common::arb_message();
    let mut valid = Vec::with_capacity(256);
    let mut bad = 0;
    for i in 0..GENERATED {
        let msg = strategy.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let bytes = encode_message(&msg).map_err(|e| e.to_string())?;
        match decode_message(&bytes) {
            Ok(back) if back == msg => {}
            _ => bad += 1,
        }
        if i % 200 == 0 {
            valid.push(bytes);
        }
    }
    ensure(bad == 0, || format!("{bad}/{GENERATED} generated messages failed to round-trip"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0xf022);
    let mut crashes = 0;
    let mut accepted = 0;
    let mut noncanonical = 0;
    for i in 0..FUZZ {
        let input: Vec<u8> = match i % 3 {
            0 => (0..rng.gen_range(0..=64)).map(|_| rng.gen()).collect(),
            1 => {
                let mut v = valid[rng.gen_range(0..valid.len())].clone();
                for _ in 0..rng.gen_range(1..4) {
                    let at = rng.gen_range(0..v.len());
                    v[at] ^= 1 << rng.gen_range(0..8);
                }
                if rng.gen_bool(0.3) {
                    v.truncate(rng.gen_range(0..=v.len()));
                }
                v
            }
            _ => {
                // well-formed prefix and known tag, random body
                let body: Vec<u8> = (0..rng.gen_range(0..=55)).map(|_| rng.gen()).collect();
                let tag = [0x01, 0x02, 0x03, 0x04, 0x07, 0x81, 0x82, 0x83, 0x84, 0x86, 0xFF][rng.gen_range(0..11)];
                let mut v = ((9 + body.len()) as u32).to_le_bytes().to_vec();
                v.push(tag);
                v.extend_from_slice(&rng.gen::<u64>().to_le_bytes());
                v.extend_from_slice(&body);
                v
            }
        };
        match panic::catch_unwind(AssertUnwindSafe(|| decode_message(&input))) {
            Err(_) => crashes += 1,
            Ok(Ok(msg)) => {
                accepted += 1;
                if encode_message(&msg).ok().as_deref() != Some(&input[..]) {
                    noncanonical += 1;
                }
            }
            Ok(Err(_)) => {}
        }
    }
    ensure(crashes == 0, || format!("decoder panicked on {crashes} fuzz inputs"))?;
    ensure(noncanonical == 0, || format!("{noncanonical} accepted inputs did not re-encode to the same bytes"))?;
    Ok(format!("{GENERATED} generated messages round-trip; {FUZZ} fuzz inputs, 0 crashes, {accepted} accepted and canonical"))
}

// ── determinism replay ──────────────────────────────────────────

fn spawn_server() -> Result<(Child, String), String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_simserve"))
        .args(["serve", "--uri_address=127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).map_err(|e| e.to_string())?;
    let addr = line.trim().strip_prefix("listening on ").ok_or(format!("bad banner {line:?}"))?.to_string();
    Ok((child, addr))
}

/// Plays one episode against `addr` and hashes every StepResponse frame.
fn replay(addr: &str, script: &[BTreeMap<Uid, Tensor>]) -> Result<(u64, usize, EpisodeStateTag, usize), String> {
    let mut c = Client::connect(addr).map_err(|e| e.to_string())?;
    let world = c
        .create_world(settings([("scene", Tensor::scalar_string("seek_avoid")), ("seed", Tensor::scalar_i64(7))]))
        .map_err(|e| e.to_string())?;
    let specs = c.join_world(&world, settings([])).map_err(|e| e.to_string())?;
    let all: Vec<Uid> = specs.sensors.iter().map(|s| s.uid).collect();
    let pixels = specs.sensor("PIXELS").ok_or("no PIXELS sensor")?.uid;
    let mut h = Fnv1a::new();
    let mut pixel_frames = 0;
    for (i, actions) in script.iter().enumerate() {
        let seq = c
            .send(Body::StepRequest { actions: actions.clone(), requested_observations: all.clone() })
            .map_err(|e| e.to_string())?;
        let reply = c.recv().map_err(|e| e.to_string())?;
        ensure(reply.sequence == seq, || "sequence mismatch".into())?;
        h.write(&encode_message(&reply).map_err(|e| e.to_string())?);
        let Body::StepResponse { state, observations } = reply.body else {
            return Err(format!("step {i}: {:?}", reply.body));
        };
        if observations.get(&pixels).is_some_and(|t| t.shape() == [72, 96, 3]) {
            pixel_frames += 1;
        }
        if state.is_terminal() {
            return Ok((h.finish(), i + 1, state, pixel_frames));
        }
    }
    Err("episode still running after the script".into())
}

fn determinism_replay() -> Outcome {
    let specs = {
        let mut e: Engine<f64> = Engine::default();
        e.call(1, 1, Body::CreateWorldRequest { settings: settings([("world_name", Tensor::scalar_string("w"))]) });
        match e.call(1, 2, Body::JoinWorldRequest { world_name: "w".into(), settings: Settings::new() }).body {
            Body::JoinWorldResponse { specs } => specs,
            other => return Err(format!("{other:?}")),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let script: Vec<_> = (0..900).map(|_| random_actions(&specs, &mut rng)).collect();

    let server = serve(ServerConfig::with_address("127.0.0.1:0")).map_err(|e| e.to_string())?;
    let first = replay(&server.connect_addr().to_string(), &script);
    server.shutdown();
    let (mut child, addr) = spawn_server()?;
    let second = replay(&addr, &script);
    let _ = child.kill();
    let _ = child.wait();
    let (a, steps, state, pixel_frames) = first?;
    let (b, steps_b, _, _) = second?;
    ensure(pixel_frames == steps, || format!("PIXELS missing from {} responses", steps - pixel_frames))?;
    ensure(a == b && steps == steps_b, || format!("stream hashes differ: {a:016x} vs {b:016x}"))?;
    Ok(format!("{steps} steps to {state:?}, in-process and fresh process stream hash {a:016x}"))
}

// ── ordering ────────────────────────────────────────────────────

fn ordering_agent(addr: std::net::SocketAddr, world: String, agent: u64) -> Result<usize, String> {
    const REQUESTS: usize = 1000;
    const WINDOW: usize = 64;
    let stream = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    stream.set_nodelay(true).ok();
    let mut writer = stream.try_clone().map_err(|e| e.to_string())?;
    let mut reader = BufReader::new(stream);
    let mut rng = ChaCha8Rng::seed_from_u64(agent);

    let mut requests = Vec::with_capacity(REQUESTS);
    requests.push(Body::JoinWorldRequest { world_name: world, settings: Settings::new() });
    while requests.len() < REQUESTS {
        requests.push(match rng.gen_range(0..20) {
            0 => Body::ResetRequest { settings: Settings::new() },
            1 => Body::StepRequest { actions: BTreeMap::new(), requested_observations: vec![99] },
            2..=5 => Body::StepRequest { actions: BTreeMap::new(), requested_observations: vec![1, 4] },
            _ => Body::StepRequest {
                actions: [(1, Tensor::scalar_f32(rng.gen_range(-1.0..1.0))), (3, Tensor::scalar_f32(0.3))]
                    .into_iter()
                    .collect(),
                requested_observations: vec![1],
            },
        });
    }
    let base = agent * 1_000_000;
    let (mut sent, mut violations) = (0usize, 0usize);
    let mut inflight = std::collections::VecDeque::new();
    while sent < REQUESTS || !inflight.is_empty() {
        while sent < REQUESTS && inflight.len() < WINDOW {
            let seq = base + sent as u64;
            let frame = encode_message(&Message::new(seq, requests[sent].clone())).map_err(|e| e.to_string())?;
            writer.write_all(&frame).map_err(|e| e.to_string())?;
            inflight.push_back((seq, sent));
            sent += 1;
        }
        let mut prefix = [0u8; 4];
        reader.read_exact(&mut prefix).map_err(|e| e.to_string())?;
        let mut frame = prefix.to_vec();
        frame.resize(4 + u32::from_le_bytes(prefix) as usize, 0);
        reader.read_exact(&mut frame[4..]).map_err(|e| e.to_string())?;
        let reply = decode_message(&frame).map_err(|e| e.to_string())?;
        let (seq, index) = inflight.pop_front().unwrap();
        if reply.sequence != seq || !requests[index].answers(&reply.body) {
            violations += 1;
        }
        if matches!(reply.body, Body::Error { code: 8, .. }) {
            return Err("backpressure hit inside the window".into());
        }
    }
    Ok(violations)
}

fn ordering() -> Outcome {
    let server = serve(ServerConfig::with_address("127.0.0.1:0")).map_err(|e| e.to_string())?;
    let addr = server.connect_addr();
    let mut admin = Client::connect(addr).map_err(|e| e.to_string())?;
    let world = admin
        .create_world(settings([("scene", Tensor::scalar_string("seek_avoid")), ("seed", Tensor::scalar_i64(1))]))
        .map_err(|e| e.to_string())?;
    let handles: Vec<_> = (1..=4)
        .map(|a| {
            let world = world.clone();
            thread::spawn(move || ordering_agent(addr, world, a))
        })
        .collect();
    let mut violations = 0;
    for h in handles {
        violations += h.join().map_err(|_| "agent thread panicked".to_string())??;
    }
    server.shutdown();
    ensure(violations == 0, || format!("{violations} out-of-order or mismatched responses"))?;
    Ok("4 agents x 1000 pipelined requests, 0 violations".into())
}

// ── Block Settle accounting ─────────────────────────────────────

/// Hand rule: the placement frame (ball enters column 0) plus one frame per
/// column the ball rolls while the next stack is no taller than the current.
fn hand_rule(heights: &mut [i32], column: usize) -> (u64, bool) {
    heights[column] += 1;
    let mut frames = 1;
    let mut at = 0;
    while at + 1 < heights.len() && heights[at + 1] <= heights[at] {
        at += 1;
        frames += 1;
    }
    (frames, at + 1 == heights.len())
}

fn block_settle_accounting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut e: Engine<f64> = Engine::default();
    let (mut steps, mut seq) = (0usize, 10u64);
    for s in 0..500 {
        let width = rng.gen_range(2..=12usize);
        let name = format!("b{s}");
        let created = e.call(1, 1, Body::CreateWorldRequest {
            settings: settings([
                ("scene", Tensor::scalar_string("block_settle")),
                ("world_name", Tensor::scalar_string(name.clone())),
                ("columns", Tensor::scalar_i64(width as i64)),
            ]),
        });
        ensure(matches!(created.body, Body::CreateWorldResponse { .. }), || format!("{created:?}"))?;
        e.call(1, 2, Body::JoinWorldRequest { world_name: name.clone(), settings: Settings::new() });
        let mut heights = vec![0i32; width];
        let mut actions = 0;
        for _ in 0..rng.gen_range(1..=60) {
            let column = rng.gen_range(0..width);
            let before = e.sim.world(&name).unwrap().frame_index();
            seq += 1;
            let reply = e.call(1, seq, Body::StepRequest {
                actions: [(1, Tensor::scalar_i32(column as i32))].into_iter().collect(),
                requested_observations: vec![1],
            });
            let delta = e.sim.world(&name).unwrap().frame_index() - before;
            let (frames, end) = hand_rule(&mut heights, column);
            actions += 1;
            steps += 1;
            ensure(delta == frames, || format!("sequence {s}: {delta} frames, hand rule says {frames}"))?;
            let Body::StepResponse { state, observations } = reply.body else { return Err(format!("{:?}", reply.body)) };
            ensure(observations[&1].as_i32() == Some(&heights[..]), || format!("sequence {s}: heights diverge"))?;
            let expected = if end {
                EpisodeStateTag::Terminated
            } else if actions == 20 {
                EpisodeStateTag::Interrupted
            } else {
                EpisodeStateTag::Running
            };
            ensure(state == expected, || format!("sequence {s}: state {state:?}, expected {expected:?}"))?;
            if state.is_terminal() {
                seq += 1;
                e.call(1, seq, Body::ResetRequest { settings: Settings::new() });
                heights.iter_mut().for_each(|h| *h = 0);
                actions = 0;
            }
        }
        e.call(1, 3, Body::LeaveWorldRequest);
        e.call(1, 4, Body::DestroyWorldRequest { world_name: name });
    }
    Ok(format!("500 sequences, {steps} steps, every frame delta matches"))
}

// ── throughput ──────────────────────────────────────────────────

fn throughput() -> Outcome {
    let cores = num_cpus::get_physical();
    if cores < 4 {
        return Ok(format!("SKIPPED: {cores} physical core(s), criterion needs at least 4"));
    }
    let k = cores.min(8);
    let cfg = BenchConfig { instances: vec![1, k], seconds: 5.0, trials: 3, ..BenchConfig::default() };
    let (report, err) = run_benchmark(&cfg);
    if let Some(e) = err {
        return Err(e.to_string());
    }
    let one = report.row(1).unwrap().mean;
    let many = report.row(k).unwrap().mean;
    let ratio = many / one;
    ensure(ratio >= 0.7 * k as f64, || format!("K={k} total {many:.0} fps is {ratio:.2}x the K=1 rate {one:.0}"))?;
    Ok(format!("K={k}: {many:.0} fps = {ratio:.2}x K=1 ({one:.0} fps)"))
}

// ── renderer goldens ────────────────────────────────────────────

struct Golden {
    scene: &'static str,
    seed: u64,
    pose: (f64, f64, f64),
    size: (u32, u32),
    hash: u64,
}

const GOLDENS: [Golden; 5] = [
    Golden { scene: "seek_avoid", seed: 7, pose: (5.0, 5.0, 0.0), size: (96, 72), hash: 0x5bacb824bd116845 },
    Golden { scene: "seek_avoid", seed: 7, pose: (2.0, 2.0, 0.8), size: (96, 72), hash: 0x73f3ecf865130087 },
    Golden { scene: "seek_avoid", seed: 11, pose: (9.0, 1.0, 2.5), size: (96, 72), hash: 0x5e25432c121d16ea },
    Golden { scene: "seek_avoid", seed: 3, pose: (5.0, 5.0, -1.9), size: (160, 120), hash: 0xbf69f3459dd90555 },
    Golden { scene: "block_settle", seed: 0, pose: (5.0, 5.0, 0.0), size: (64, 48), hash: 0x9166e972820089e5 },
];

fn renderer_goldens() -> Outcome {
    let registry = SceneRegistry::default();
    let mut lines = Vec::new();
    for g in &GOLDENS {
        let world = registry.create_world("golden", g.scene, g.seed, &Settings::new()).map_err(|e| e.to_string())?;
        let cfg = CameraConfig::with_resolution(g.size.0, g.size.1);
        let pose = Pose::new(g.pose.0, g.pose.1, g.pose.2);
        let first = render_camera(&world, pose, &cfg);
        for _ in 1..10 {
            ensure(render_camera(&world, pose, &cfg) == first, || format!("{} {:?}: repeated render differs", g.scene, g.pose))?;
        }
        let (w, h) = g.size;
        ensure(first.pixels.len() == (w * h * 3) as usize, || "wrong byte count".into())?;
        ensure(first.clone().into_tensor().shape() == [h, w, 3], || "wrong tensor shape".into())?;
        let hash = first.hash();
        lines.push(format!("{hash:016x}"));
        ensure(hash == g.hash, || format!("{} {:?}: hash {hash:016x}, golden {:016x}", g.scene, g.pose, g.hash))?;

        let out = Command::new(env!("CARGO_BIN_EXE_simserve"))
            .arg("render")
            .arg(format!("--scene={}", g.scene))
            .arg(format!("--seed={}", g.seed))
            .arg(format!("--pose={},{},{}", g.pose.0, g.pose.1, g.pose.2))
            .arg(format!("--resolution={w}x{h}"))
            .arg("--hash")
            .output()
            .map_err(|e| e.to_string())?;
        let printed = String::from_utf8_lossy(&out.stdout).trim().to_string();
        ensure(printed == format!("{hash:016x}"), || format!("fresh process printed {printed:?}"))?;
    }
    Ok(format!("5 goldens stable over 10 renders and a process restart ({})", lines.join(" ")))
}
