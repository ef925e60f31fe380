//! Throughput benchmark: K independent server instances, each driven by one
//! uniform-random agent over loopback that requests only the camera sensor.
//! Frames are counted agent-side as received step responses.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::client::{settings, Client, ClientError};
use crate::transport::{serve, ServerConfig, ServerHandle};
use crate::wire::{element_count, ActuatorSpec, DType, SpecSet, Tensor, TensorData, Uid};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    /// Each instance is a server in this process with its own simulation
    /// thread.
    InProcess,
    /// Each instance is a separate `serve` process of the given executable.
    Subprocess(PathBuf),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub instances: Vec<usize>,
    pub seconds: f64,
    pub trials: usize,
    pub warmup_steps: u64,
    pub scene: String,
    pub width: u32,
    pub height: u32,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            instances: vec![1],
            seconds: 30.0,
            trials: 3,
            warmup_steps: 30,
            scene: crate::envs::seek_avoid::SCENE_ID.to_owned(),
            width: 96,
            height: 72,
            mode: Mode::InProcess,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    Config(String),
    #[error("instance {instance} failed to start: {reason}")]
    Startup { instance: usize, reason: String },
    #[error("agent {instance} failed: {source}")]
    Agent { instance: usize, source: ClientError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instances: usize,
    /// Total frames/sec of each trial.
    pub totals: Vec<f64>,
    pub mean: f64,
    pub sigma: f64,
    /// Mean frames/sec of each instance across trials.
    pub per_instance: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub failures: Vec<String>,
}

impl BenchReport {
    pub fn row(&self, k: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.instances == k)
    }

    /// Aligned table in the shape of the published CPU results.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>9}  {:>16}  {:>8}", "Instances", "Total frames/sec", "σ");
        for r in &self.rows {
            let _ = writeln!(s, "{:>9}  {:>16.0}  {:>8.0}", r.instances, r.mean, r.sigma);
        }
        s
    }

    /// One `key=value` line per trial and per row.
    pub fn machine_lines(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            for (t, total) in r.totals.iter().enumerate() {
                let _ = writeln!(s, "bench_trial instances={} trial={} total_fps={:.3}", r.instances, t, total);
            }
            let per: Vec<String> = r.per_instance.iter().map(|v| format!("{v:.3}")).collect();
            let _ = writeln!(
                s,
                "bench_result instances={} mean_fps={:.3} sigma={:.3} per_instance={}",
                r.instances,
                r.mean,
                r.sigma,
                per.join(",")
            );
        }
        for f in &self.failures {
            let _ = writeln!(s, "bench_failure {f}");
        }
        s
    }
}

/// Sample mean and standard deviation (n − 1 denominator; 0 for one value).
pub fn mean_sigma(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Uniform random value within an actuator's bounds (unit range when
/// unbounded floats, zero for unbounded integers).
pub fn random_action(spec: &ActuatorSpec, rng: &mut impl Rng) -> Option<Tensor> {
    let n = element_count(&spec.shape)? as usize;
    let (lo, hi) = if spec.bounded { (spec.min, spec.max) } else { (-1.0, 1.0) };
    let data = match spec.dtype {
        DType::F32 => TensorData::F32((0..n).map(|_| rng.gen_range(lo..=hi) as f32).collect()),
        DType::F64 => TensorData::F64((0..n).map(|_| rng.gen_range(lo..=hi)).collect()),
        DType::I32 if spec.bounded => {
            TensorData::I32((0..n).map(|_| rng.gen_range(lo.ceil() as i32..=hi.floor() as i32)).collect())
        }
        DType::I64 if spec.bounded => {
            TensorData::I64((0..n).map(|_| rng.gen_range(lo.ceil() as i64..=hi.floor() as i64)).collect())
        }
        DType::I32 => TensorData::I32(vec![0; n]),
        DType::I64 => TensorData::I64(vec![0; n]),
        DType::U8 => TensorData::U8((0..n).map(|_| rng.gen()).collect()),
        DType::Bool => TensorData::Bool((0..n).map(|_| rng.gen()).collect()),
        DType::String => return None,
    };
    Tensor::new(spec.shape.clone(), data).ok()
}

pub fn random_actions(specs: &SpecSet, rng: &mut impl Rng) -> BTreeMap<Uid, Tensor> {
    specs
        .actuators
        .iter()
        .filter_map(|a| Some((a.uid, random_action(a, rng)?)))
        .collect()
}

enum Instance {
    Local(ServerHandle),
    Process(Child, SocketAddr),
}

impl Instance {
    fn start(mode: &Mode) -> Result<Instance, String> {
        match mode {
            Mode::InProcess => {
                serve(ServerConfig::with_address("127.0.0.1:0")).map(Instance::Local).map_err(|e| e.to_string())
            }
            Mode::Subprocess(exe) => {
                let mut child = Command::new(exe)
                    .args(["serve", "--uri_address=127.0.0.1:0"])
                    .stdout(Stdio::piped())
                    .stderr(Stdio::null())
                    .spawn()
                    .map_err(|e| format!("{}: {e}", exe.display()))?;
                let stdout = child.stdout.take().expect("piped");
                let mut line = String::new();
                BufReader::new(stdout).read_line(&mut line).map_err(|e| e.to_string())?;
                let addr = line
                    .trim()
                    .strip_prefix("listening on ")
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| format!("unexpected startup line {line:?}"));
                match addr {
                    Ok(addr) => Ok(Instance::Process(child, addr)),
                    Err(e) => {
                        let _ = child.kill();
                        let _ = child.wait();
                        Err(e)
                    }
                }
            }
        }
    }

    fn addr(&self) -> SocketAddr {
        match self {
            Instance::Local(h) => h.connect_addr(),
            Instance::Process(_, a) => *a,
        }
    }

    fn stop(self) {
        match self {
            Instance::Local(h) => h.shutdown(),
            Instance::Process(mut c, _) => {
                let _ = c.kill();
                let _ = c.wait();
            }
        }
    }
}

/// Drives one instance: returns frames/sec over the measured window.
fn drive(addr: SocketAddr, cfg: &BenchConfig, instance: usize, start: &Barrier) -> Result<f64, ClientError> {
    let mut client = Client::connect(addr)?;
    let world = client.create_world(settings([
        ("scene", Tensor::scalar_string(cfg.scene.clone())),
        ("seed", Tensor::scalar_i64((cfg.seed + instance as u64) as i64)),
    ]))?;
    let join = if cfg.scene == crate::envs::seek_avoid::SCENE_ID {
        settings([
            ("camera_width", Tensor::scalar_i64(i64::from(cfg.width))),
            ("camera_height", Tensor::scalar_i64(i64::from(cfg.height))),
        ])
    } else {
        settings([])
    };
    let specs = client.join_world(&world, join)?;
    let observe: Vec<Uid> = specs.sensor("PIXELS").map(|s| vec![s.uid]).unwrap_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((instance as u64) << 32));
    let mut step = |client: &mut Client| -> Result<(), ClientError> {
        let (state, _) = client.step(random_actions(&specs, &mut rng), observe.clone())?;
        if state.is_terminal() {
            client.reset(Default::default())?;
        }
        Ok(())
    };
    for _ in 0..cfg.warmup_steps {
        step(&mut client)?;
    }
    start.wait();
    let window = Duration::from_secs_f64(cfg.seconds);
    let began = Instant::now();
    let mut frames = 0u64;
    while began.elapsed() < window {
        step(&mut client)?;
        frames += 1;
    }
    Ok(frames as f64 / began.elapsed().as_secs_f64())
}

fn trial(cfg: &BenchConfig, k: usize) -> Result<Vec<f64>, BenchError> {
    let mut instances = Vec::with_capacity(k);
    for i in 0..k {
        match Instance::start(&cfg.mode) {
            Ok(inst) => instances.push(inst),
            Err(reason) => {
                instances.into_iter().for_each(Instance::stop);
                return Err(BenchError::Startup { instance: i, reason });
            }
        }
    }
    let barrier = Arc::new(Barrier::new(k));
    let results: Vec<Result<f64, ClientError>> = thread::scope(|s| {
        let handles: Vec<_> = instances
            .iter()
            .enumerate()
            .map(|(i, inst)| {
                let addr = inst.addr();
                let barrier = barrier.clone();
                s.spawn(move || drive(addr, cfg, i, &barrier))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("agent thread panicked")).collect()
    });
    instances.into_iter().for_each(Instance::stop);
    results
        .into_iter()
        .enumerate()
        .map(|(instance, r)| r.map_err(|source| BenchError::Agent { instance, source }))
        .collect()
}

/// Runs every configured instance count for `cfg.trials` trials. A failing
/// instance count is recorded in `failures` and the error of the first
/// failure is returned alongside the partial report.
pub fn run_benchmark(cfg: &BenchConfig) -> (BenchReport, Option<BenchError>) {
    let mut report = BenchReport::default();
    if cfg.instances.is_empty() || cfg.instances.contains(&0) || cfg.seconds < 1.0 || cfg.trials == 0 {
        let e = BenchError::Config("need instances ≥ 1, seconds ≥ 1 and trials ≥ 1".into());
        report.failures.push(e.to_string());
        return (report, Some(e));
    }
    let mut first_error = None;
    for &k in &cfg.instances {
        let mut totals = Vec::new();
        let mut per = vec![0.0; k];
        let mut failed = false;
        for t in 0..cfg.trials {
            match trial(cfg, k) {
                Ok(rates) => {
                    totals.push(rates.iter().sum());
                    for (p, r) in per.iter_mut().zip(&rates) {
                        *p += r;
                    }
                    log::info!("instances={k} trial={t} total={:.1}", totals.last().unwrap());
                }
                Err(e) => {
                    report.failures.push(format!("instances={k} trial={t}: {e}"));
                    first_error.get_or_insert(e);
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            continue;
        }
        let (mean, sigma) = mean_sigma(&totals);
        let n = totals.len() as f64;
        report.rows.push(BenchRow {
            instances: k,
            totals,
            mean,
            sigma,
            per_instance: per.into_iter().map(|p| p / n).collect(),
        });
    }
    (report, first_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_sigma(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        // sample variance 32/7
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_sigma(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn random_actions_stay_in_bounds() {
        let spec = ActuatorSpec {
            uid: 1,
            name: "COLUMN".into(),
            dtype: DType::I32,
            shape: vec![],
            min: 0.0,
            max: 7.0,
            bounded: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [false; 8];
        for _ in 0..500 {
            let v = random_action(&spec, &mut rng).unwrap().as_i32().unwrap()[0];
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
        let f = ActuatorSpec { dtype: DType::F32, min: -1.0, max: 1.0, ..spec };
        for _ in 0..500 {
            let v = random_action(&f, &mut rng).unwrap().as_f32().unwrap()[0];
            assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn report_rendering() {
        let report = BenchReport {
            rows: vec![BenchRow { instances: 2, totals: vec![10.0, 12.0], mean: 11.0, sigma: 1.4, per_instance: vec![5.5, 5.5] }],
            failures: vec![],
        };
        assert!(report.table().contains("Total frames/sec"));
        assert!(report.machine_lines().contains("bench_result instances=2 mean_fps=11.000"));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = BenchConfig { instances: vec![0], ..BenchConfig::default() };
        let (report, err) = run_benchmark(&cfg);
        assert!(err.is_some() && report.rows.is_empty());
    }
}
