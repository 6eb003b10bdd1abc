//! Write the test shapes as OBJ files: `cargo run --example make_shapes -- <dir>`.

use std::path::PathBuf;

use hexoct::geom::Vec3;
use hexoct::surface::io::write_obj;
use hexoct::surface::shapes::{blob, box_mesh, icosphere, torus};

fn main() -> hexoct::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "shapes".into()));
    std::fs::create_dir_all(&dir).map_err(|source| hexoct::HexError::Io {
        path: dir.clone(),
        source,
    })?;
    let shapes = [
        ("sphere", icosphere(4, 1.0, Vec3::zeros())),
        ("cube", box_mesh(Vec3::zeros(), Vec3::repeat(1.0), 8)),
        ("torus", torus(1.0, 0.4, 48, 24)),
        ("blob", blob(4)),
    ];
    for (name, (v, t)) in shapes {
        let path = dir.join(format!("{name}.obj"));
        write_obj(&path, &v, &t)?;
        println!("{} ({} triangles)", path.display(), t.len());
    }
    Ok(())
}
