//! End-to-end runs through `run_pipeline`, checked by reading the written files back.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use hexoct::geom::Vec3;
use hexoct::pipeline::{histogram_bin, run_pipeline, PipelineConfig, QualityReport};
use hexoct::surface::io::write_obj;
use hexoct::surface::shapes::{box_mesh, icosphere};

struct Vtk {
    points: Vec<Vec3>,
    cells: Vec<[usize; 8]>,
    types: Vec<u8>,
    min_sj: Vec<f64>,
}

/// Minimal legacy ASCII unstructured-grid reader for the sections the writer emits.
fn read_vtk(path: &Path) -> Vtk {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let mut vtk = Vtk {
        points: vec![],
        cells: vec![],
        types: vec![],
        min_sj: vec![],
    };
    while let Some(line) = lines.next() {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.first().copied() {
            Some("POINTS") => {
                let n: usize = words[1].parse().unwrap();
                for _ in 0..n {
                    let c: Vec<f64> = lines
                        .next()
                        .unwrap()
                        .split_whitespace()
                        .map(|w| w.parse().unwrap())
                        .collect();
                    vtk.points.push(Vec3::new(c[0], c[1], c[2]));
                }
            }
            Some("CELLS") => {
                let n: usize = words[1].parse().unwrap();
                for _ in 0..n {
                    let ids: Vec<usize> = lines
                        .next()
                        .unwrap()
                        .split_whitespace()
                        .map(|w| w.parse().unwrap())
                        .collect();
                    assert_eq!(ids[0], 8);
                    vtk.cells.push(std::array::from_fn(|i| ids[i + 1]));
                }
            }
            Some("CELL_TYPES") => {
                let n: usize = words[1].parse().unwrap();
                vtk.types = (0..n)
                    .map(|_| lines.next().unwrap().trim().parse().unwrap())
                    .collect();
            }
            Some("SCALARS") if words[1] == "min_sj" => {
                lines.next(); // LOOKUP_TABLE
                vtk.min_sj = (0..vtk.cells.len())
                    .map(|_| lines.next().unwrap().trim().parse().unwrap())
                    .collect();
            }
            _ => {}
        }
    }
    vtk
}

const FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [2, 3, 7, 6],
    [0, 4, 7, 3],
    [1, 2, 6, 5],
];

/// Boundary quads, after checking that no face has more than two owners and that interior
/// faces are traversed in opposite directions by their two owners.
fn conforming_boundary(cells: &[[usize; 8]]) -> Vec<[usize; 4]> {
    let mut owners: HashMap<[usize; 4], Vec<[usize; 4]>> = HashMap::new();
    for c in cells {
        assert_eq!(c.iter().collect::<HashSet<_>>().len(), 8);
        for f in FACES {
            let q = f.map(|i| c[i]);
            let mut k = q;
            k.sort_unstable();
            owners.entry(k).or_default().push(q);
        }
    }
    let mut boundary = Vec::new();
    for o in owners.values() {
        match o.len() {
            1 => boundary.push(o[0]),
            2 => {
                let i = o[1].iter().position(|&v| v == o[0][0]).unwrap();
                assert_ne!(
                    o[1][(i + 1) % 4],
                    o[0][1],
                    "interior face with equal orientation"
                );
            }
            n => panic!("face shared by {n} hexes"),
        }
    }
    boundary
}

fn euler(quads: &[[usize; 4]]) -> i64 {
    let v: HashSet<usize> = quads.iter().flatten().copied().collect();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for q in quads {
        for i in 0..4 {
            let (a, b) = (q[i], q[(i + 1) % 4]);
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    assert!(edges.values().all(|&c| c == 2), "boundary is not closed");
    v.len() as i64 - edges.len() as i64 + quads.len() as i64
}

fn shape_file(dir: &Path, name: &str, mesh: (Vec<Vec3>, Vec<[usize; 3]>)) -> PathBuf {
    let path = dir.join(format!("{name}.obj"));
    write_obj(&path, &mesh.0, &mesh.1).unwrap();
    path
}

fn unit_cube_file(dir: &Path) -> PathBuf {
    shape_file(dir, "cube", box_mesh(Vec3::zeros(), Vec3::repeat(1.0), 8))
}

fn config(input: &Path, output: &Path, base: u8, max: u8) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(input, output);
    cfg.base_level = Some(base);
    cfg.max_level = Some(max);
    cfg
}

#[test]
fn cube_output_is_a_valid_closed_all_hex_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cube.vtk");
    let report = run_pipeline(&config(&unit_cube_file(dir.path()), &out, 2, 2)).unwrap();
    let vtk = read_vtk(&out);
    assert_eq!(vtk.cells.len(), report.elements);
    assert_eq!(vtk.points.len(), report.vertices);
    assert!(vtk.types.iter().all(|&t| t == 12));
    assert_eq!(vtk.min_sj.len(), vtk.cells.len());
    assert!(vtk.min_sj.iter().all(|&s| s > 0.0));
    let worst = vtk.min_sj.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(worst, report.min_sj);
    assert_eq!(euler(&conforming_boundary(&vtk.cells)), 2);
}

#[test]
fn boundary_vertices_land_on_the_input_surface() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cube.vtk");
    run_pipeline(&config(&unit_cube_file(dir.path()), &out, 2, 2)).unwrap();
    let vtk = read_vtk(&out);
    let on_box = |p: &Vec3| {
        let inside = p.iter().all(|&c| (-1e-9..=1.0 + 1e-9).contains(&c));
        let on_face = p
            .iter()
            .any(|&c| c.abs() <= 1e-9 || (c - 1.0).abs() <= 1e-9);
        inside && on_face
    };
    let boundary: HashSet<usize> = conforming_boundary(&vtk.cells)
        .into_iter()
        .flatten()
        .collect();
    for v in boundary {
        assert!(on_box(&vtk.points[v]), "{:?}", vtk.points[v]);
    }
    assert!(vtk
        .points
        .iter()
        .all(|p| p.iter().all(|&c| (-1e-9..=1.0 + 1e-9).contains(&c))));
}

fn report_without_timings(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .split_whitespace()
        .filter(|w| !w.starts_with("seconds="))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = unit_cube_file(dir.path());
    let out = dir.path().join("cube.vtk");
    let mut cfg = config(&input, &out, 2, 2);
    cfg.report = Some(dir.path().join("report.txt"));
    let mut runs = Vec::new();
    for _ in 0..2 {
        run_pipeline(&cfg).unwrap();
        runs.push((
            std::fs::read(&out).unwrap(),
            report_without_timings(cfg.report.as_ref().unwrap()),
        ));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn sphere_report_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let input = shape_file(dir.path(), "sphere", icosphere(4, 1.0, Vec3::zeros()));
    let out = dir.path().join("sphere.vtk");
    let mut cfg = config(&input, &out, 3, 3);
    let report_path = dir.path().join("report.txt");
    cfg.report = Some(report_path.clone());
    let report: QualityReport = run_pipeline(&cfg).unwrap();
    assert_eq!(report.histogram.iter().sum::<usize>(), report.elements);
    assert!(!report.below_target(), "min SJ {}", report.min_sj);
    assert!(report.worst_bin_floor().unwrap() >= 0.5);

    // the histogram agrees with the per-cell data in the file
    let vtk = read_vtk(&out);
    let mut counts = [0usize; 20];
    for &s in &vtk.min_sj {
        counts[histogram_bin(s)] += 1;
    }
    assert_eq!(counts, report.histogram);

    let text = std::fs::read_to_string(&report_path).unwrap();
    let summary = text
        .lines()
        .find(|l| l.starts_with("record=summary"))
        .unwrap();
    let hist = summary
        .split_whitespace()
        .find_map(|w| w.strip_prefix("histogram="))
        .unwrap();
    let parsed: Vec<usize> = hist.split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(parsed, counts);
    assert!(text
        .lines()
        .any(|l| l.starts_with("record=stage stage=optimize")));
}
