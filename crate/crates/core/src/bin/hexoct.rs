use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hexoct::pipeline::{run_pipeline, PipelineConfig};
use hexoct::quadtree2d::{extract_dual_2d, Quadtree, Vec2};

#[derive(Parser)]
#[command(
    name = "hexoct",
    version,
    about = "Adaptive all-hex meshing of closed triangle surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh a closed triangle surface (OBJ, OFF or STL) into a VTK hexahedral mesh.
    Mesh(MeshArgs),
    /// Write the all-quad dual of a quadtree refined around a circle as SVG.
    Quad2d(Quad2dArgs),
}

#[derive(Args)]
struct MeshArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Flat key = value settings, overridden by the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    base_level: Option<u8>,
    #[arg(long)]
    max_level: Option<u8>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Write VTK files of the octree, dual, core and buffer stages here.
    #[arg(long)]
    dump_stages: Option<PathBuf>,
    /// Write key=value report records here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Do not print the optimizer progress lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct Quad2dArgs {
    #[arg(short, long)]
    output: PathBuf,
    /// Level of every leaf away from the circle.
    #[arg(long, default_value_t = 2)]
    base_level: u8,
    /// Level of the leaves crossed by the circle.
    #[arg(long, default_value_t = 5)]
    max_level: u8,
    /// Circle radius as a fraction of the root edge.
    #[arg(long, default_value_t = 0.3)]
    radius: f64,
}

fn mesh(args: MeshArgs) -> ExitCode {
    let mut cfg = PipelineConfig::new(&args.input, &args.output);
    cfg.optimizer.progress = !args.quiet;
    if let Some(path) = &args.config {
        if let Err(e) = cfg.apply_file(path) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if args.quiet {
        cfg.optimizer.progress = false;
    }
    if let Some(b) = args.base_level {
        cfg.base_level = Some(b);
    }
    if let Some(m) = args.max_level {
        cfg.max_level = Some(m);
    }
    if let Some(a) = args.alpha {
        cfg.optimizer.alpha = a;
    }
    if args.dump_stages.is_some() {
        cfg.dump_dir = args.dump_stages;
    }
    if args.report.is_some() {
        cfg.report = args.report;
    }
    match run_pipeline(&cfg) {
        Ok(report) => {
            let summary = report.to_records();
            print!(
                "{}",
                summary
                    .lines()
                    .last()
                    .map_or(String::new(), |l| format!("{l}\n"))
            );
            if report.below_target() {
                eprintln!(
                    "warning: min scaled Jacobian {:.4} is below the target {}",
                    report.min_sj, report.target_min_sj
                );
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn quad2d(args: Quad2dArgs) -> ExitCode {
    if args.base_level > args.max_level || !(args.radius > 0.0 && args.radius < 0.5) {
        eprintln!("error: need base level <= max level and a radius in (0, 0.5)");
        return ExitCode::from(2);
    }
    let root = 1.0;
    let center = Vec2::repeat(0.5);
    let mut tree = Quadtree::new(root);
    let mut stack = vec![0];
    while let Some(id) = stack.pop() {
        let q = tree.quadrant(id);
        let level = q.level;
        let h = tree.edge(level);
        let c = tree.cell_center(id);
        // the circle crosses the cell if the center distance range straddles the radius
        let half = Vec2::repeat(h / 2.0);
        let near = (c - center).abs() - half;
        let near = near.map(|v| v.max(0.0)).norm();
        let far = ((c - center).abs() + half).norm();
        let crossed = near <= args.radius * root && far >= args.radius * root;
        if level < args.base_level || (crossed && level < args.max_level) {
            match tree.subdivide(id) {
                Ok(kids) => stack.extend(kids),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
    }
    tree.balance();
    let result = extract_dual_2d(&tree).and_then(|m| {
        m.write_svg(&args.output)?;
        Ok(m.num_quads())
    });
    match result {
        Ok(n) => {
            println!("quads={n} leaves={}", tree.num_leaves());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Mesh(args) => mesh(args),
        Command::Quad2d(args) => quad2d(args),
    }
}
