//! The batch pipeline: surface file in, optimized hex mesh and quality report out.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use thiserror::Error;

use crate::coremesh::{check_restriction, clear_buffer, remove_exterior, RestrictionReport};
use crate::dualmesh::{detect_transitions, extract_dual, HexMesh};
use crate::error::HexError;
use crate::geom::Vec3;
use crate::octree::{build_initial_octree, enforce_strong_balance, RefinementConfig, MAX_LEVEL};
use crate::quality::{build_buffer_layer, optimize, Optimized, OptimizerConfig};
use crate::surface::{Normalization, TriangleSurface};
use crate::vtk;

pub const DEFAULT_BASE_LEVEL: u8 = 5;
/// Levels of refinement above the base level when only the base level is given.
pub const DEFAULT_LEVEL_SPAN: u8 = 4;
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Octree,
    Balance,
    Transitions,
    Dual,
    Exterior,
    Clearance,
    Buffer,
    Optimize,
    Write,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Octree => "octree",
            Stage::Balance => "balance",
            Stage::Transitions => "transitions",
            Stage::Dual => "dual",
            Stage::Exterior => "exterior",
            Stage::Clearance => "clearance",
            Stage::Buffer => "buffer",
            Stage::Optimize => "optimize",
            Stage::Write => "write",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: HexError,
}

impl PipelineError {
    /// Process exit status: 2 for bad input or configuration, 3 for topology failures,
    /// 4 for optimizer failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use HexError::*;
        match (&self.source, self.stage) {
            (Io { .. }, Stage::Write) => 1,
            (
                Io { .. }
                | Parse { .. }
                | NonTriangleFace(_)
                | DegenerateTriangle(_)
                | OpenBoundaryEdge(..)
                | NonManifoldEdge(..)
                | InconsistentOrientation(..)
                | DuplicateTriangle(_)
                | EmptySurface
                | ZeroAreaTriangle(_)
                | VanishingArea(_)
                | InvalidRefinement(_)
                | SurfaceOutsideRoot
                | Config(_),
                _,
            ) => 2,
            (EmptyCore | Topology(_), _) => 3,
            (Divergence(_), _) => 4,
            _ => 1,
        }
    }
}

fn at(stage: Stage) -> impl FnOnce(HexError) -> PipelineError {
    move |source| PipelineError { stage, source }
}

/// Which intermediate meshes go to the dump directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dumps {
    pub octree: bool,
    pub dual: bool,
    pub core: bool,
    pub buffer: bool,
}

impl Default for Dumps {
    fn default() -> Self {
        Self {
            octree: true,
            dual: true,
            core: true,
            buffer: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub base_level: Option<u8>,
    pub max_level: Option<u8>,
    pub curvature_thresholds: Option<Vec<f64>>,
    pub thickness_thresholds: Option<Vec<f64>>,
    pub optimizer: OptimizerConfig,
    /// Minimum scaled Jacobian the run is expected to reach.
    pub target_min_sj: f64,
    pub dump_dir: Option<PathBuf>,
    pub dumps: Dumps,
    pub report: Option<PathBuf>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> crate::Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| HexError::Config(format!("{key} = {value}: {e}")))
}

fn parse_list(key: &str, value: &str) -> crate::Result<Vec<f64>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn list(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            output: output.into(),
            base_level: None,
            max_level: None,
            curvature_thresholds: None,
            thickness_thresholds: None,
            optimizer: OptimizerConfig::default(),
            target_min_sj: 0.5,
            dump_dir: None,
            dumps: Dumps::default(),
            report: None,
        }
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> crate::Result<()> {
        let o = &mut self.optimizer;
        match key {
            "base_level" => self.base_level = Some(parse(key, value)?),
            "max_level" => self.max_level = Some(parse(key, value)?),
            "curvature_thresholds" => self.curvature_thresholds = Some(parse_list(key, value)?),
            "thickness_thresholds" => self.thickness_thresholds = Some(parse_list(key, value)?),
            "alpha" => o.alpha = parse(key, value)?,
            "eps_sj" => o.eps_sj = parse(key, value)?,
            "eps_sj_step" => o.eps_sj_step = parse(key, value)?,
            "maintenance_period" => o.maintenance_period = parse(key, value)?,
            "snap_tolerance" => o.snap_tolerance = parse(key, value)?,
            "max_iterations" => o.max_iterations = parse(key, value)?,
            "plateau_periods" => o.plateau_periods = parse(key, value)?,
            "divergence_periods" => o.divergence_periods = parse(key, value)?,
            "progress" => o.progress = parse(key, value)?,
            "target_min_sj" => self.target_min_sj = parse(key, value)?,
            "dump_dir" => self.dump_dir = Some(value.into()),
            "dump_octree" => self.dumps.octree = parse(key, value)?,
            "dump_dual" => self.dumps.dual = parse(key, value)?,
            "dump_core" => self.dumps.core = parse(key, value)?,
            "dump_buffer" => self.dumps.buffer = parse(key, value)?,
            "report" => self.report = Some(value.into()),
            _ => return Err(HexError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> crate::Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HexError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| HexError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> crate::Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| HexError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text)
    }

    /// Resolved refinement settings. A missing max level is the base level plus
    /// [`DEFAULT_LEVEL_SPAN`]; a missing base level is [`DEFAULT_BASE_LEVEL`], lowered to the
    /// max level when that is smaller.
    pub fn refinement(&self) -> RefinementConfig {
        let base = match (self.base_level, self.max_level) {
            (Some(b), _) => b,
            (None, Some(m)) => DEFAULT_BASE_LEVEL.min(m),
            (None, None) => DEFAULT_BASE_LEVEL,
        };
        let max = self
            .max_level
            .unwrap_or(base.saturating_add(DEFAULT_LEVEL_SPAN));
        let mut r = RefinementConfig::new(base, max);
        if let Some(c) = &self.curvature_thresholds {
            r.curvature_thresholds = c.clone();
        }
        if let Some(t) = &self.thickness_thresholds {
            r.thickness_thresholds = t.clone();
        }
        r
    }

    pub fn validate(&self) -> crate::Result<()> {
        let r = self.refinement();
        if r.max_level > MAX_LEVEL {
            return Err(HexError::Config(format!(
                "max level {} exceeds {MAX_LEVEL}",
                r.max_level
            )));
        }
        r.validate()?;
        if !(self.optimizer.alpha > 0.0 && self.optimizer.alpha < 1.0) {
            return Err(HexError::Config("alpha must lie in (0, 1)".into()));
        }
        self.optimizer.validate()?;
        let dir = match self.output.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        if !dir.is_dir() {
            return Err(HexError::Config(format!(
                "output directory {} does not exist",
                dir.display()
            )));
        }
        Ok(())
    }

    /// Every effective setting, in a fixed order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let r = self.refinement();
        let o = &self.optimizer;
        vec![
            ("input", self.input.display().to_string()),
            ("output", self.output.display().to_string()),
            ("base_level", r.base_level.to_string()),
            ("max_level", r.max_level.to_string()),
            ("curvature_thresholds", list(&r.curvature_thresholds)),
            ("thickness_thresholds", list(&r.thickness_thresholds)),
            ("alpha", o.alpha.to_string()),
            ("eps_sj", o.eps_sj.to_string()),
            ("eps_sj_step", o.eps_sj_step.to_string()),
            ("maintenance_period", o.maintenance_period.to_string()),
            ("snap_tolerance", o.snap_tolerance.to_string()),
            ("max_iterations", o.max_iterations.to_string()),
            ("plateau_periods", o.plateau_periods.to_string()),
            ("divergence_periods", o.divergence_periods.to_string()),
            ("target_min_sj", self.target_min_sj.to_string()),
        ]
    }
}

/// Timing and counters of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: Stage,
    pub seconds: f64,
    pub fields: Vec<(&'static str, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub vertices: usize,
    pub elements: usize,
    pub min_sj: f64,
    pub max_sj: f64,
    /// Per-hex min scaled Jacobian in 20 equal bins over [-1, 1]; 1 falls in the last bin.
    pub histogram: [usize; HISTOGRAM_BINS],
    pub base_level: u8,
    pub max_level: u8,
    /// Leaf levels present after balancing.
    pub leaf_levels: (u8, u8),
    /// Highest threshold the optimizer met with the boundary on the surface.
    pub eps_sj: Option<f64>,
    pub target_min_sj: f64,
    pub stages: Vec<StageRecord>,
    pub config: Vec<(&'static str, String)>,
}

pub fn histogram_bin(sj: f64) -> usize {
    (((sj + 1.0) * HISTOGRAM_BINS as f64 / 2.0).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

impl QualityReport {
    pub fn below_target(&self) -> bool {
        self.min_sj < self.target_min_sj
    }

    /// Lower edge of the lowest nonempty histogram bin.
    pub fn worst_bin_floor(&self) -> Option<f64> {
        self.histogram
            .iter()
            .position(|&c| c > 0)
            .map(|b| -1.0 + 2.0 * b as f64 / HISTOGRAM_BINS as f64)
    }

    /// One `key=value` record per line: the configuration, every stage, and a summary.
    pub fn to_records(&self) -> String {
        let mut s = String::from("record=config");
        for (k, v) in &self.config {
            write!(s, " {k}={v}").unwrap();
        }
        s.push('\n');
        for r in &self.stages {
            write!(s, "record=stage stage={} seconds={:.6}", r.stage, r.seconds).unwrap();
            for (k, v) in &r.fields {
                write!(s, " {k}={v}").unwrap();
            }
            s.push('\n');
        }
        let hist: Vec<String> = self.histogram.iter().map(|c| c.to_string()).collect();
        writeln!(
            s,
            "record=summary vertices={} elements={} min_sj={} max_sj={} eps_sj={} base_level={} max_level={} leaf_levels={}..{} histogram={}",
            self.vertices,
            self.elements,
            self.min_sj,
            self.max_sj,
            self.eps_sj.map_or("none".to_string(), |e| format!("{e:.2}")),
            self.base_level,
            self.max_level,
            self.leaf_levels.0,
            self.leaf_levels.1,
            hist.join(",")
        )
        .unwrap();
        s
    }
}

/// Everything a run produces, in the normalized domain.
#[derive(Debug, Clone)]
pub struct Meshed {
    pub leaf_levels: (u8, u8),
    /// Core after exterior removal and buffer clearance.
    pub core: HexMesh,
    pub restriction: RestrictionReport,
    pub optimized: Optimized,
    pub stages: Vec<StageRecord>,
}

struct Dumper<'a> {
    dir: Option<&'a Path>,
    norm: Normalization,
}

impl Dumper<'_> {
    fn write(&self, on: bool, name: &str, text: impl FnOnce(&dyn Fn(&Vec3) -> Vec3) -> String) {
        let Some(dir) = self.dir.filter(|_| on) else {
            return;
        };
        let path = dir.join(name);
        let norm = self.norm;
        if let Err(e) = vtk::write_text(&path, &text(&move |p| norm.to_original(p))) {
            warn!("debug dump skipped: {e}");
        }
    }
}

/// Run every meshing stage on a loaded surface. Debug dumps of finished stages are written
/// to `dump_dir` even when a later stage fails.
pub fn mesh_surface(
    surface: &TriangleSurface,
    refinement: &RefinementConfig,
    optimizer: &OptimizerConfig,
    dump_dir: Option<&Path>,
    dumps: Dumps,
) -> Result<Meshed, PipelineError> {
    let dump = Dumper {
        dir: dump_dir,
        norm: *surface.normalization(),
    };
    let mut stages = Vec::new();
    let mut clock = Instant::now();
    let mut record = |stage: Stage, fields: Vec<(&'static str, String)>| {
        let now = Instant::now();
        let seconds = (now - clock).as_secs_f64();
        clock = now;
        info!("{stage}: {seconds:.3} s");
        stages.push(StageRecord {
            stage,
            seconds,
            fields,
        });
    };

    let tree = build_initial_octree(surface, refinement).map_err(at(Stage::Octree))?;
    record(
        Stage::Octree,
        vec![("leaves", tree.num_leaves().to_string())],
    );
    let mut tree = enforce_strong_balance(tree);
    tree.classify_leaves(surface);
    let leaf_levels = (tree.min_leaf_level(), tree.max_leaf_level());
    dump.write(dumps.octree, "octree.vtk", |m| vtk::octree_vtk(&tree, m));
    record(
        Stage::Balance,
        vec![
            ("leaves", tree.num_leaves().to_string()),
            ("levels", format!("{}..{}", leaf_levels.0, leaf_levels.1)),
        ],
    );
    let transitions = detect_transitions(&tree).map_err(at(Stage::Transitions))?;
    record(
        Stage::Transitions,
        vec![("records", transitions.len().to_string())],
    );
    let dual = extract_dual(&tree, &transitions).map_err(at(Stage::Dual))?;
    dump.write(dumps.dual, "dual.vtk", |m| vtk::hex_mesh_vtk(&dual, m));
    record(Stage::Dual, vec![("hexes", dual.num_hexes().to_string())]);
    let (core, _) = remove_exterior(&dual, surface).map_err(at(Stage::Exterior))?;
    record(
        Stage::Exterior,
        vec![("hexes", core.num_hexes().to_string())],
    );
    let cleared = clear_buffer(&core, surface).map_err(at(Stage::Clearance))?;
    let restriction = check_restriction(&cleared.mesh);
    dump.write(dumps.core, "core.vtk", |m| {
        vtk::hex_mesh_vtk(&cleared.mesh, m)
    });
    record(
        Stage::Clearance,
        vec![
            ("hexes", cleared.mesh.num_hexes().to_string()),
            ("removed", cleared.removed.to_string()),
            ("deep_removed", cleared.deep_removed.to_string()),
            ("violations", restriction.violations.len().to_string()),
        ],
    );
    let (mesh, bindings) = build_buffer_layer(&cleared.mesh, surface);
    dump.write(dumps.buffer, "buffer.vtk", |m| vtk::hex_mesh_vtk(&mesh, m));
    record(
        Stage::Buffer,
        vec![
            ("hexes", mesh.num_hexes().to_string()),
            ("surface_vertices", bindings.len().to_string()),
            ("min_sj", mesh.min_scaled_jacobian().to_string()),
        ],
    );
    let optimized = optimize(mesh, bindings, surface, optimizer).map_err(at(Stage::Optimize))?;
    record(
        Stage::Optimize,
        vec![
            ("iterations", optimized.iterations.to_string()),
            ("min_sj", optimized.min_sj.to_string()),
        ],
    );
    Ok(Meshed {
        leaf_levels,
        core: cleared.mesh,
        restriction,
        optimized,
        stages,
    })
}

/// Load, mesh, and write the final mesh in input coordinates plus the optional report.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<QualityReport, PipelineError> {
    cfg.validate().map_err(at(Stage::Config))?;
    let refinement = cfg.refinement();
    if let Some(dir) = &cfg.dump_dir {
        std::fs::create_dir_all(dir)
            .map_err(|source| HexError::Io {
                path: dir.clone(),
                source,
            })
            .map_err(at(Stage::Config))?;
    }
    let start = Instant::now();
    let surface =
        TriangleSurface::load(&cfg.input, refinement.root_edge()).map_err(at(Stage::Load))?;
    let load = StageRecord {
        stage: Stage::Load,
        seconds: start.elapsed().as_secs_f64(),
        fields: vec![
            ("vertices", surface.vertices().len().to_string()),
            ("triangles", surface.triangles().len().to_string()),
        ],
    };
    let meshed = mesh_surface(
        &surface,
        &refinement,
        &cfg.optimizer,
        cfg.dump_dir.as_deref(),
        cfg.dumps,
    )?;

    let write_start = Instant::now();
    let mesh = &meshed.optimized.mesh;
    let norm = *surface.normalization();
    vtk::write_text(
        &cfg.output,
        &vtk::hex_mesh_vtk(mesh, |p| norm.to_original(p)),
    )
    .map_err(at(Stage::Write))?;
    let mut stages = vec![load];
    stages.extend(meshed.stages);
    stages.push(StageRecord {
        stage: Stage::Write,
        seconds: write_start.elapsed().as_secs_f64(),
        fields: vec![("path", cfg.output.display().to_string())],
    });

    let sj: Vec<f64> = (0..mesh.num_hexes())
        .map(|h| mesh.quality(h).min_sj)
        .collect();
    let mut histogram = [0; HISTOGRAM_BINS];
    for &q in &sj {
        histogram[histogram_bin(q)] += 1;
    }
    let report = QualityReport {
        vertices: mesh.vertices.len(),
        elements: mesh.num_hexes(),
        min_sj: sj.iter().copied().fold(f64::INFINITY, f64::min),
        max_sj: sj.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        histogram,
        base_level: refinement.base_level,
        max_level: refinement.max_level,
        leaf_levels: meshed.leaf_levels,
        eps_sj: meshed.optimized.eps_sj,
        target_min_sj: cfg.target_min_sj,
        stages,
        config: cfg.pairs(),
    };
    if let Some(path) = &cfg.report {
        vtk::write_text(path, &report.to_records()).map_err(at(Stage::Write))?;
    }
    if report.below_target() {
        warn!(
            "min scaled Jacobian {:.4} is below the target {}",
            report.min_sj, report.target_min_sj
        );
    }
    Ok(report)
}
