use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Parser;
use stereoportal::harness::{emit_csv, emit_frames, run_bench, BenchConfig, BenchRun, SceneSelector, Trajectory};
use stereoportal::scheduler::{plan_passes, PortalGeometry, RenderMode, RenderOptions};
use stereoportal_stream::{ServerConfig, SessionConfig};

/// Renders portal scenes in stereo and reports pass and fragment counts.
#[derive(Debug, Parser)]
#[command(name = "stereoportal", version)]
struct Args {
    /// Scene file, `test:N` for the test scene with N pairs (0..=3), or
    /// `test:all` for all four test scenes.
    #[arg(long, default_value = "test:3")]
    scene: String,
    /// naive, stencil, instanced or stencil-instanced.
    #[arg(long, default_value = "naive")]
    mode: RenderMode,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    /// Per-eye resolution.
    #[arg(long, default_value = "256x256")]
    res: Resolution,
    /// fixed, orbit or walk.
    #[arg(long, default_value = "fixed")]
    trajectory: Trajectory,
    /// Per-frame CSV; the summary matrix goes next to it.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for PNG frame dumps.
    #[arg(long)]
    dump_frames: Option<PathBuf>,
    /// Dump every k-th frame.
    #[arg(long, default_value_t = 1, requires = "dump_frames")]
    every: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Apply the headset hidden-area mask.
    #[arg(long)]
    hidden_area: bool,
    /// Draw portals as flat quads instead of boxes.
    #[arg(long)]
    portal_plane: bool,
    /// Print the pass list of the first frame.
    #[arg(long)]
    dump_plan: bool,
    /// Serve the scene to browser viewers on this port instead of
    /// benchmarking.
    #[arg(long)]
    serve: Option<u16>,
    /// Viewer files to serve with `--serve`.
    #[arg(long, requires = "serve")]
    static_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct Resolution(usize, usize);

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad resolution `{s}`"));
        Ok(Resolution(parse(w)?, parse(h)?))
    }
}

fn selectors(scene: &str) -> Result<Vec<SceneSelector>> {
    if scene == "test:all" {
        return Ok((0..=3).map(SceneSelector::Test).collect());
    }
    Ok(vec![scene.parse().map_err(anyhow::Error::msg)?])
}

fn render_options(args: &Args) -> RenderOptions {
    RenderOptions {
        hidden_area: args.hidden_area,
        portal_geometry: if args.portal_plane { PortalGeometry::Plane } else { PortalGeometry::Box },
        ..RenderOptions::default()
    }
}

fn report(run: &BenchRun) {
    let s = &run.summary;
    println!(
        "{:<12} {:<17} portals={} frames={} fps={:.1} frame_ms={:.2} plan_ms={:.3} raster_ms={:.2} passes={:.2} fragments={:.0} teleports={}",
        run.config.scene.to_string(),
        s.mode.name(),
        s.portals,
        run.series.len(),
        s.fps,
        s.frame_ms,
        s.plan_ms,
        s.raster_ms,
        s.passes,
        s.fragments,
        run.teleports,
    );
}

fn bench(args: &Args) -> Result<()> {
    let Resolution(width, height) = args.res;
    if args.every == 0 {
        bail!("--every must be at least 1");
    }
    let mut runs = Vec::new();
    for scene in selectors(&args.scene)? {
        let config = BenchConfig {
            scene,
            mode: args.mode,
            frames: args.frames,
            width,
            height,
            trajectory: args.trajectory,
            seed: args.seed,
            capture_every: args.dump_frames.as_ref().map(|_| args.every),
            render: render_options(args),
        };
        config.validate()?;
        if args.dump_plan {
            let loaded = config.scene.load()?;
            let plan = plan_passes(&loaded, &loaded.start_rig(), config.mode, &config.render_options())?;
            println!("# plan for {} ({} passes)\n{}", config.scene, plan.pass_count(), plan.dump());
        }
        let run = run_bench(&config).with_context(|| format!("benchmark of {} failed", config.scene))?;
        report(&run);
        if let Some(dir) = &args.dump_frames {
            let dir = if args.scene == "test:all" { dir.join(format!("pairs{}", run.portals / 2)) } else { dir.clone() };
            let written = emit_frames(&run, &dir, args.every)?;
            println!("wrote {} frames to {}", written.len(), dir.display());
        }
        runs.push(run);
    }
    if let Some(path) = &args.csv {
        for summary in emit_csv(&runs, path)? {
            println!("wrote {} and {}", path.display(), summary.display());
        }
    }
    Ok(())
}

fn serve(args: &Args, port: u16) -> Result<()> {
    let Resolution(width, height) = args.res;
    if width < 16 || height < 16 {
        bail!("resolution {width}x{height} is below 16x16");
    }
    let selectors = selectors(&args.scene)?;
    let [selector] = selectors.as_slice() else {
        bail!("--serve needs a single scene");
    };
    let scene = selector.load()?;
    let mut session = SessionConfig {
        width,
        height,
        ..SessionConfig::default()
    };
    session.flags.stencil = args.mode.uses_stencil();
    session.flags.instanced = args.mode.is_instanced();
    session.flags.hidden_area = args.hidden_area;
    session.flags.portal_box = !args.portal_plane;
    let config = ServerConfig {
        session,
        static_dir: args.static_dir.clone(),
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(stereoportal_stream::serve(scene, config, port))?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    let result = match args.serve {
        Some(port) => serve(&args, port),
        None => bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
