use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use simserve::bench::{run_benchmark, BenchConfig, Mode};
use simserve::render::{render_camera, CameraConfig};
use simserve::scalar::Pose;
use simserve::transport::{serve, ServerConfig, DEFAULT_ADDRESS};
use simserve::wire::Settings;
use simserve::SceneRegistry;

#[derive(Parser)]
#[command(name = "simserve", version, about = "Deterministic agent-environment simulation server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve worlds to remote agents.
    Serve(ServeArgs),
    /// Measure total frames/sec over concurrent instances.
    Bench(BenchArgs),
    /// Render one camera view to a PPM image.
    Render(RenderArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long = "uri_address", default_value = DEFAULT_ADDRESS)]
    uri_address: String,
    /// Create a world named "default" with this scene at startup.
    #[arg(long)]
    scene: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max_connections", default_value_t = 64)]
    max_connections: usize,
    #[arg(long = "queue_limit", default_value_t = simserve::session::DEFAULT_QUEUE_LIMIT)]
    queue_limit: usize,
    /// Refuse CreateWorld requests.
    #[arg(long = "no_create")]
    no_create: bool,
    /// Log to a file (default simserve.log) instead of stderr.
    #[arg(long, num_args = 0..=1, default_missing_value = "simserve.log")]
    logfile: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    instances: Vec<usize>,
    #[arg(long, default_value_t = 30.0)]
    seconds: f64,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value = "seek_avoid")]
    scene: String,
    #[arg(long, default_value = "96x72", value_parser = parse_resolution)]
    resolution: (u32, u32),
    #[arg(long, default_value_t = 30)]
    warmup: u64,
    /// Run each instance as a separate server process.
    #[arg(long)]
    subprocess: bool,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, default_value = "seek_avoid")]
    scene: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Camera pose as X,Y,HEADING (metres, radians).
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    pose: Option<(f64, f64, f64)>,
    #[arg(long, default_value = "96x72", value_parser = parse_resolution)]
    resolution: (u32, u32),
    /// PPM output path; omit to skip writing.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print the FNV-1a hash of the pixel bytes.
    #[arg(long)]
    hash: bool,
}

fn parse_resolution(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
    let w: u32 = w.parse().map_err(|_| "bad width")?;
    let h: u32 = h.parse().map_err(|_| "bad height")?;
    if w == 0 || h == 0 {
        return Err("resolution must be at least 1x1".into());
    }
    Ok((w, h))
}

fn parse_pose(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, h] => Ok((x, y, h)),
        _ => Err("expected X,Y,HEADING".into()),
    }
}

fn init_logging(logfile: Option<&PathBuf>) -> Result<()> {
    let mut builder = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    if let Some(path) = logfile {
        let file = File::create(path).with_context(|| format!("cannot open log file {}", path.display()))?;
        builder.target(env_logger::Target::Pipe(Box::new(file)));
    }
    builder.init();
    Ok(())
}

fn run_serve(args: ServeArgs) -> Result<()> {
    init_logging(args.logfile.as_ref())?;
    let cfg = ServerConfig {
        address: args.uri_address,
        max_connections: args.max_connections,
        queue_limit: args.queue_limit,
        allow_create: !args.no_create,
        scene: args.scene,
        seed: args.seed,
        ..ServerConfig::default()
    };
    let handle = serve(cfg)?;
    let mut out = io::stdout();
    writeln!(out, "listening on {}", handle.local_addr())?;
    out.flush()?;
    handle.wait();
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    init_logging(None)?;
    let mode = if args.subprocess {
        Mode::Subprocess(std::env::current_exe().context("cannot locate own executable")?)
    } else {
        Mode::InProcess
    };
    let cfg = BenchConfig {
        instances: args.instances,
        seconds: args.seconds,
        trials: args.trials,
        warmup_steps: args.warmup,
        scene: args.scene,
        width: args.resolution.0,
        height: args.resolution.1,
        mode,
        ..BenchConfig::default()
    };
    let (report, err) = run_benchmark(&cfg);
    print!("{}", report.table());
    print!("{}", report.machine_lines());
    if let Some(e) = err {
        bail!(e);
    }
    Ok(())
}

fn run_render(args: RenderArgs) -> Result<()> {
    let world = SceneRegistry::default()
        .create_world("render", &args.scene, args.seed, &Settings::new())
        .map_err(anyhow::Error::msg)?;
    let pose = match args.pose {
        Some((x, y, h)) => Pose::new(x, y, h),
        None => simserve::envs::seek_avoid::spawn_pose(),
    };
    let cfg = CameraConfig::with_resolution(args.resolution.0, args.resolution.1);
    if let Err(e) = cfg.validate() {
        bail!(e);
    }
    let frame = render_camera(&world, pose, &cfg);
    if let Some(path) = &args.output {
        let mut f = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
        frame.write_ppm(&mut f)?;
        f.flush()?;
    }
    if args.hash {
        println!("{:016x}", frame.hash());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve(a) => run_serve(a),
        Command::Bench(a) => run_bench(a),
        Command::Render(a) => run_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simserve: {e:#}");
            ExitCode::FAILURE
        }
    }
}
