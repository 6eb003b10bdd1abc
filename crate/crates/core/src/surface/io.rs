//! OBJ / OFF / STL readers producing an indexed triangle soup.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{HexError, Result};
use crate::geom::{Aabb, Vec3};

pub struct RawMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

pub fn read_mesh(path: &Path) -> Result<RawMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let bytes = fs::read(path).map_err(|source| HexError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match ext.as_str() {
        "obj" => parse_obj(path, &String::from_utf8_lossy(&bytes)),
        "off" => parse_off(path, &String::from_utf8_lossy(&bytes)),
        "stl" => parse_stl(path, &bytes),
        _ => Err(HexError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("unsupported extension '{ext}'"),
        }),
    }
}

fn perr(path: &Path, line: usize, msg: impl Into<String>) -> HexError {
    HexError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_f64(path: &Path, line: usize, tok: Option<&str>) -> Result<f64> {
    tok.ok_or_else(|| perr(path, line, "missing coordinate"))?
        .parse::<f64>()
        .map_err(|e| perr(path, line, e.to_string()))
}

pub fn parse_obj(path: &Path, text: &str) -> Result<RawMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(path, line, toks.next())?;
                let y = parse_f64(path, line, toks.next())?;
                let z = parse_f64(path, line, toks.next())?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(3);
                for t in toks {
                    let head = t.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|_| perr(path, line, format!("bad face index '{t}'")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(perr(path, line, "face index 0"));
                    };
                    if resolved < 0 {
                        return Err(perr(path, line, "face index out of range"));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() != 3 {
                    return Err(HexError::NonTriangleFace(triangles.len()));
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok(RawMesh {
        vertices,
        triangles,
    })
}

pub fn parse_off(path: &Path, text: &str) -> Result<RawMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| perr(path, 1, "empty file"))?;
    let mut counts_line = header;
    let mut counts_ln = ln;
    if let Some(rest) = header.strip_prefix("OFF") {
        let rest = rest.trim();
        if rest.is_empty() {
            let (l2, c) = lines
                .next()
                .ok_or_else(|| perr(path, ln, "missing counts"))?;
            counts_line = c;
            counts_ln = l2;
        } else {
            counts_line = rest;
        }
    }
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| perr(path, counts_ln, e.to_string()))
        })
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(perr(path, counts_ln, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines
            .next()
            .ok_or_else(|| perr(path, counts_ln, "truncated vertex list"))?;
        let mut t = s.split_whitespace();
        let x = parse_f64(path, l, t.next())?;
        let y = parse_f64(path, l, t.next())?;
        let z = parse_f64(path, l, t.next())?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut triangles = Vec::with_capacity(nf);
    for fi in 0..nf {
        let (l, s) = lines
            .next()
            .ok_or_else(|| perr(path, counts_ln, "truncated face list"))?;
        let nums: Vec<usize> = s
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| perr(path, l, e.to_string())))
            .collect::<Result<_>>()?;
        if nums.is_empty() || nums[0] != 3 || nums.len() < 4 {
            return Err(HexError::NonTriangleFace(fi));
        }
        triangles.push([nums[1], nums[2], nums[3]]);
    }
    Ok(RawMesh {
        vertices,
        triangles,
    })
}

pub fn parse_stl(path: &Path, bytes: &[u8]) -> Result<RawMesh> {
    let soup = if is_binary_stl(bytes) {
        stl_binary(path, bytes)?
    } else {
        stl_ascii(path, &String::from_utf8_lossy(bytes))?
    };
    Ok(weld(&soup))
}

fn is_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    84 + n * 50 == bytes.len()
}

fn stl_binary(path: &Path, bytes: &[u8]) -> Result<Vec<[Vec3; 3]>> {
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let mut out = Vec::with_capacity(n);
    let rd =
        |o: usize| f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64;
    for i in 0..n {
        let base = 84 + i * 50 + 12;
        if base + 36 > bytes.len() {
            return Err(perr(path, 0, "truncated binary STL"));
        }
        let mut tri = [Vec3::zeros(); 3];
        for (k, t) in tri.iter_mut().enumerate() {
            let o = base + k * 12;
            *t = Vec3::new(rd(o), rd(o + 4), rd(o + 8));
        }
        out.push(tri);
    }
    Ok(out)
}

fn stl_ascii(path: &Path, text: &str) -> Result<Vec<[Vec3; 3]>> {
    let mut out = Vec::new();
    let mut cur: Vec<Vec3> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let mut t = raw.split_whitespace();
        match t.next() {
            Some("vertex") => {
                let x = parse_f64(path, ln + 1, t.next())?;
                let y = parse_f64(path, ln + 1, t.next())?;
                let z = parse_f64(path, ln + 1, t.next())?;
                cur.push(Vec3::new(x, y, z));
            }
            Some("endfacet") => {
                if cur.len() != 3 {
                    return Err(HexError::NonTriangleFace(out.len()));
                }
                out.push([cur[0], cur[1], cur[2]]);
                cur.clear();
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Merge STL corner positions closer than 1e-8 of the bounding-box diagonal.
fn weld(soup: &[[Vec3; 3]]) -> RawMesh {
    let bb = Aabb::from_points(soup.iter().flat_map(|t| t.iter()));
    let tol = (bb.diagonal() * 1e-8).max(f64::MIN_POSITIVE);
    let key = |p: &Vec3| -> [i64; 3] {
        [
            (p.x / tol).floor() as i64,
            (p.y / tol).floor() as i64,
            (p.z / tol).floor() as i64,
        ]
    };
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::with_capacity(soup.len());
    for tri in soup {
        let mut idx = [0usize; 3];
        for (k, p) in tri.iter().enumerate() {
            let kc = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(list) = buckets.get(&[kc[0] + dx, kc[1] + dy, kc[2] + dz]) {
                            for &vi in list {
                                if (vertices[vi] - p).norm() <= tol {
                                    found = Some(vi);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
            }
            idx[k] = found.unwrap_or_else(|| {
                vertices.push(*p);
                buckets.entry(kc).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
        }
        triangles.push(idx);
    }
    RawMesh {
        vertices,
        triangles,
    }
}

/// Write a triangle mesh as OBJ (1-based indices).
pub fn write_obj(path: &Path, vertices: &[Vec3], triangles: &[[usize; 3]]) -> Result<()> {
    use std::fmt::Write as _;
    let mut s = String::new();
    for v in vertices {
        let _ = writeln!(s, "v {:.17} {:.17} {:.17}", v.x, v.y, v.z);
    }
    for t in triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    fs::write(path, s).map_err(|source| HexError::Io {
        path: path.to_path_buf(),
        source,
    })
}
