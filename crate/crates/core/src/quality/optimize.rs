//! Buffer-zone quality improvement: gradient steps on E coupled with periodic smart Laplacian
//! smoothing of the two outermost vertex layers.

use log::{info, warn};

use crate::dualmesh::HexMesh;
use crate::error::{HexError, Result};
use crate::geom::Vec3;
use crate::surface::TriangleSurface;

use super::buffer::BufferBinding;
use super::energy::{energy_and_gradient, fit_target, hex_term, Energy};
use super::metrics::{hex_quality_points, HexQuality, HEX_EDGES};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Gradient step.
    pub alpha: f64,
    /// Initial scaled Jacobian threshold.
    pub eps_sj: f64,
    /// Threshold increment once the current one is met.
    pub eps_sj_step: f64,
    /// Iterations between cache refresh, smoothing and threshold updates.
    pub maintenance_period: usize,
    /// Largest surface distance at which bound vertices are pulled onto the surface.
    pub snap_tolerance: f64,
    pub max_iterations: usize,
    /// Periods without a new best min SJ or a met threshold before stopping.
    pub plateau_periods: usize,
    /// Consecutive periods in which the merit rises above its value when the current threshold
    /// was set while the min SJ falls; that many end the run as divergence.
    pub divergence_periods: usize,
    /// Print one key=value line per period to standard output.
    pub progress: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8e-3,
            eps_sj: 0.01,
            eps_sj_step: 0.01,
            maintenance_period: 1000,
            snap_tolerance: 1e-6,
            max_iterations: 2_000_000,
            plateau_periods: 100,
            divergence_periods: 3,
            progress: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HexError::Config(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.eps_sj_step > 0.0) || !(self.eps_sj > -1.0 && self.eps_sj <= 1.0) {
            return bad("eps_sj must lie in (-1, 1] with a positive step");
        }
        if self.maintenance_period == 0 || self.plateau_periods == 0 {
            return bad("maintenance_period and plateau_periods must be positive");
        }
        if !(self.snap_tolerance >= 0.0) {
            return bad("snap_tolerance must be non-negative");
        }
        Ok(())
    }
}

/// Snapshot taken at the end of a maintenance period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodRecord {
    pub iteration: usize,
    pub energy: Energy,
    /// [`OptimizerState::merit`] at the end of the period.
    pub merit: f64,
    pub min_sj: f64,
    pub min_j: f64,
    pub eps_sj: f64,
    pub max_distance: f64,
}

/// Live optimizer data.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub mesh: HexMesh,
    pub bindings: Vec<BufferBinding>,
    pub eps_sj: f64,
    pub iteration: usize,
    pub energy: Energy,
    quality: Vec<HexQuality>,
    vertex_hexes: Vec<Vec<usize>>,
}

impl OptimizerState {
    pub fn new(mesh: HexMesh, bindings: Vec<BufferBinding>, eps_sj: f64) -> Self {
        let quality = (0..mesh.num_hexes()).map(|h| mesh.quality(h)).collect();
        let vertex_hexes = mesh.vertex_hexes();
        Self {
            mesh,
            bindings,
            eps_sj,
            iteration: 0,
            energy: Energy::default(),
            quality,
            vertex_hexes,
        }
    }

    pub fn min_sj(&self) -> f64 {
        self.quality
            .iter()
            .map(|q| q.min_sj)
            .fold(f64::INFINITY, f64::min)
    }

    /// Fitting energy minus the per-hex quality clamped at the threshold: inverted hexes count
    /// their min Jacobian, the rest `min(min_sj, eps_sj)`. Unlike [`Energy::total`] it does not
    /// jump when a hex crosses the threshold, so it is the quantity the steps descend.
    pub fn merit(&self, gf: f64) -> f64 {
        gf - self
            .quality
            .iter()
            .map(|q| {
                if q.min_j < 0.0 {
                    q.min_j
                } else {
                    q.min_sj.min(self.eps_sj)
                }
            })
            .sum::<f64>()
    }

    pub fn min_j(&self) -> f64 {
        self.quality
            .iter()
            .map(|q| q.min_j)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance from a bound vertex to its cached surface point.
    pub fn max_distance(&self) -> f64 {
        self.bindings
            .iter()
            .map(|b| (self.mesh.vertices[b.surface_vertex] - b.point).norm())
            .fold(0.0, f64::max)
    }

    fn refresh(&mut self, vertices: impl IntoIterator<Item = usize>) {
        let mut dirty: Vec<usize> = vertices
            .into_iter()
            .flat_map(|v| self.vertex_hexes[v].iter().copied())
            .collect();
        dirty.sort_unstable();
        dirty.dedup();
        for h in dirty {
            self.quality[h] = self.mesh.quality(h);
        }
    }

    /// One gradient step on every vertex with a nonzero gradient. Returns the number of
    /// vertices moved.
    pub fn step(&mut self, surface: &TriangleSurface, alpha: f64) -> usize {
        let mut grad: Vec<(usize, Vec3)> = Vec::new();
        for b in &self.bindings {
            let x = self.mesh.vertices[b.surface_vertex];
            let d = x - fit_target(surface, b.triangle, &x);
            if d != Vec3::zeros() {
                grad.push((b.surface_vertex, d * 2.0));
            }
        }
        for (h, q) in self.quality.iter().enumerate() {
            if q.min_j >= 0.0 && q.min_sj >= self.eps_sj {
                continue;
            }
            if let Some(t) = hex_term(&self.mesh.hex_points(h), self.eps_sj) {
                for (k, &v) in self.mesh.hexes[h].iter().enumerate() {
                    grad.push((v, -t.grad[k]));
                }
            }
        }
        // accumulate in a fixed order so runs are bit-identical
        grad.sort_by_key(|&(v, _)| v);
        let mut moved = Vec::new();
        let mut i = 0;
        while i < grad.len() {
            let v = grad[i].0;
            let mut g = Vec3::zeros();
            while i < grad.len() && grad[i].0 == v {
                g += grad[i].1;
                i += 1;
            }
            if g != Vec3::zeros() {
                self.mesh.vertices[v] -= g * alpha;
                moved.push(v);
            }
        }
        let n = moved.len();
        self.refresh(moved);
        self.iteration += 1;
        n
    }
}

/// The two outermost vertex layers: bound surface vertices and their other neighbors.
#[derive(Debug, Clone, Default)]
pub struct Layers {
    /// Binding index per vertex for surface-layer vertices.
    pub binding_of: Vec<Option<usize>>,
    /// Second-layer vertices, ascending.
    pub second: Vec<usize>,
    /// Edge neighbors of every vertex, ascending.
    pub neighbors: Vec<Vec<usize>>,
}

impl Layers {
    pub fn new(mesh: &HexMesh, bindings: &[BufferBinding]) -> Self {
        let mut neighbors = vec![Vec::new(); mesh.vertices.len()];
        for hex in &mesh.hexes {
            for e in HEX_EDGES {
                let (a, b) = (hex[e[0]], hex[e[1]]);
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }
        let mut binding_of = vec![None; mesh.vertices.len()];
        for (i, b) in bindings.iter().enumerate() {
            binding_of[b.surface_vertex] = Some(i);
        }
        let mut second: Vec<usize> = bindings
            .iter()
            .flat_map(|b| neighbors[b.surface_vertex].iter().copied())
            .filter(|&v| binding_of[v].is_none())
            .collect();
        second.sort_unstable();
        second.dedup();
        Self {
            binding_of,
            second,
            neighbors,
        }
    }
}

fn incident_min_sj(mesh: &HexMesh, hexes: &[usize], v: usize, at: Vec3) -> f64 {
    hexes
        .iter()
        .map(|&h| {
            let p = mesh.hexes[h].map(|u| if u == v { at } else { mesh.vertices[u] });
            hex_quality_points(&p).min_sj
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smart Laplacian pass over the two outermost layers, in vertex order. A surface vertex moves
/// to the surface point closest to the average of its surface neighbors, a second-layer
/// vertex to the average of all its neighbors. A move is kept only if every incident hex
/// stays above `eps_sj`. The surface vertex farthest from the surface only needs to keep
/// them valid.
/// Returns the moved vertices.
pub fn smart_laplacian(
    mesh: &mut HexMesh,
    bindings: &mut [BufferBinding],
    surface: &TriangleSurface,
    layers: &Layers,
    vertex_hexes: &[Vec<usize>],
    eps_sj: f64,
) -> Vec<usize> {
    let farthest = bindings
        .iter()
        .enumerate()
        .map(|(i, b)| (i, (mesh.vertices[b.surface_vertex] - b.point).norm()))
        .filter(|&(_, d)| d > 0.0)
        .fold(None, |acc: Option<(usize, f64)>, (i, d)| match acc {
            Some((_, bd)) if bd >= d => acc,
            _ => Some((i, d)),
        })
        .map(|(i, _)| bindings[i].surface_vertex);
    let mut order: Vec<usize> = bindings.iter().map(|b| b.surface_vertex).collect();
    order.extend(&layers.second);
    order.sort_unstable();
    let mut moved = Vec::new();
    for v in order {
        let binding = layers.binding_of[v];
        let nbrs: Vec<usize> = layers.neighbors[v]
            .iter()
            .copied()
            .filter(|&u| binding.is_none() || layers.binding_of[u].is_some())
            .collect();
        if nbrs.is_empty() {
            continue;
        }
        let avg = nbrs.iter().map(|&u| mesh.vertices[u]).sum::<Vec3>() / nbrs.len() as f64;
        let (candidate, cp) = match binding {
            Some(b) => {
                let cp = surface.closest_point(&avg, Some(bindings[b].triangle));
                (cp.point, Some(cp))
            }
            None => (avg, None),
        };
        if candidate == mesh.vertices[v] {
            continue;
        }
        let after = incident_min_sj(mesh, &vertex_hexes[v], v, candidate);
        let accept = after > eps_sj || (Some(v) == farthest && after > 0.0);
        if accept {
            mesh.vertices[v] = candidate;
            if let (Some(b), Some(cp)) = (binding, cp) {
                bindings[b].point = cp.point;
                bindings[b].triangle = cp.triangle;
            }
            moved.push(v);
        }
    }
    moved
}

/// Result of [`optimize`].
#[derive(Debug, Clone)]
pub struct Optimized {
    pub mesh: HexMesh,
    pub bindings: Vec<BufferBinding>,
    pub min_sj: f64,
    /// Highest threshold met with every bound vertex on the surface; `None` if none was.
    pub eps_sj: Option<f64>,
    pub iterations: usize,
    pub history: Vec<PeriodRecord>,
}

/// Minimize E by gradient steps with periodic maintenance: closest-triangle refresh, smart
/// Laplacian smoothing, snapping and threshold increments. Returns the last state that met
/// its threshold with every bound vertex on the surface, or the best state seen (snapped)
/// when none did.
pub fn optimize(
    mesh: HexMesh,
    bindings: Vec<BufferBinding>,
    surface: &TriangleSurface,
    cfg: &OptimizerConfig,
) -> Result<Optimized> {
    cfg.validate()?;
    let layers = Layers::new(&mesh, &bindings);
    let mut st = OptimizerState::new(mesh, bindings, cfg.eps_sj);
    let mut history: Vec<PeriodRecord> = Vec::new();
    let mut certified: Option<(HexMesh, Vec<BufferBinding>, f64)> = None;
    let mut best: Option<(HexMesh, Vec<BufferBinding>, f64)> = None;
    let mut stale = 0;
    let mut worsening = 0;
    // merit when the current threshold was set; chattering stays below it, a blow-up does not
    let mut level_merit = {
        let (e, _) = energy_and_gradient(&st.mesh, &st.bindings, surface, st.eps_sj);
        st.merit(e.gf)
    };
    loop {
        let period_end = (st.iteration + cfg.maintenance_period).min(cfg.max_iterations);
        let mut active = false;
        while st.iteration < period_end {
            if st.step(surface, cfg.alpha) == 0 {
                // nothing moves until the next maintenance
                st.iteration = period_end;
                break;
            }
            active = true;
        }

        for b in st.bindings.iter_mut() {
            let cp = surface.closest_point(&st.mesh.vertices[b.surface_vertex], Some(b.triangle));
            b.point = cp.point;
            b.triangle = cp.triangle;
        }
        let smoothed = smart_laplacian(
            &mut st.mesh,
            &mut st.bindings,
            surface,
            &layers,
            &st.vertex_hexes,
            st.eps_sj,
        );
        active |= !smoothed.is_empty();
        st.refresh(smoothed);
        let max_distance = st.max_distance();
        let on_surface = max_distance < cfg.snap_tolerance;
        if on_surface && max_distance > 0.0 {
            let bound: Vec<usize> = st.bindings.iter().map(|b| b.surface_vertex).collect();
            for b in &st.bindings {
                st.mesh.vertices[b.surface_vertex] = b.point;
            }
            st.refresh(bound);
        }

        let (energy, _) = energy_and_gradient(&st.mesh, &st.bindings, surface, st.eps_sj);
        if !energy.total().is_finite() {
            return Err(HexError::Divergence(format!(
                "energy is not finite at iteration {}",
                st.iteration
            )));
        }
        let min_sj = st.min_sj();
        let merit = st.merit(energy.gf);
        let rec = PeriodRecord {
            iteration: st.iteration,
            energy,
            merit,
            min_sj,
            min_j: st.min_j(),
            eps_sj: st.eps_sj,
            max_distance: if on_surface { 0.0 } else { max_distance },
        };
        if cfg.progress {
            println!(
                "iteration={} energy={:.9e} min_sj={:.6} eps_sj={:.2} max_distance={:.3e} m={} n={}",
                rec.iteration,
                energy.total(),
                min_sj,
                rec.eps_sj,
                rec.max_distance,
                energy.m,
                energy.n
            );
        }
        if let Some(prev) = history.last() {
            let worse = merit > prev.merit && merit > level_merit && min_sj < prev.min_sj;
            worsening = if worse && prev.eps_sj == st.eps_sj {
                worsening + 1
            } else {
                0
            };
            if worsening >= cfg.divergence_periods {
                return Err(HexError::Divergence(format!(
                    "merit rose above its level at the current threshold and min scaled Jacobian fell for {worsening} periods (iteration {})",
                    st.iteration
                )));
            }
        }
        history.push(rec);
        st.energy = energy;

        let mut progress = false;
        if best.as_ref().is_none_or(|b| min_sj > b.2) {
            best = Some((st.mesh.clone(), st.bindings.clone(), min_sj));
            progress = true;
        }
        let mut done = false;
        if on_surface && min_sj >= st.eps_sj {
            let mut met = st.eps_sj;
            if !active {
                // idle periods change nothing until the threshold passes the mesh minimum
                while met + cfg.eps_sj_step <= min_sj {
                    met += cfg.eps_sj_step;
                }
            }
            certified = Some((st.mesh.clone(), st.bindings.clone(), met));
            progress = true;
            st.eps_sj = met + cfg.eps_sj_step;
            level_merit = st.merit(energy.gf);
            done = st.eps_sj > 1.0;
        }
        stale = if progress { 0 } else { stale + 1 };
        if done || stale >= cfg.plateau_periods || st.iteration >= cfg.max_iterations {
            break;
        }
    }

    let iterations = st.iteration;
    if let Some((mesh, bindings, eps)) = certified {
        let min_sj = mesh.min_scaled_jacobian();
        info!("optimizer met eps_sj = {eps:.2} after {iterations} iterations, min SJ {min_sj:.4}");
        return Ok(Optimized {
            mesh,
            bindings,
            min_sj,
            eps_sj: Some(eps),
            iterations,
            history,
        });
    }
    let (mut mesh, bindings, _) = best.expect("at least one period ran");
    for b in &bindings {
        mesh.vertices[b.surface_vertex] = b.point;
    }
    let min_sj = mesh.min_scaled_jacobian();
    warn!(
        "optimizer stopped below its first threshold after {iterations} iterations; min SJ {min_sj:.4} after snapping"
    );
    Ok(Optimized {
        mesh,
        bindings,
        min_sj,
        eps_sj: None,
        iterations,
        history,
    })
}
