use std::fmt::Write as _;
use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Loads an ASCII Wavefront OBJ file containing triangles.
pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path)
}

/// Parses OBJ text. `v` records may carry an optional trailing RGB triple;
/// `o`/`g` records start a new face group. Faces must be triangles.
pub fn parse_obj(text: &str, origin: &Path) -> Result<Mesh> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut colors: Vec<Vec3> = Vec::new();
    let mut colored = 0usize;
    let mut faces = Vec::new();
    let mut face_groups = Vec::new();
    let mut group_names: Vec<String> = vec!["default".to_string()];
    let mut current_group = 0u32;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or("");
        match keyword {
            "v" => {
                let nums = tokens
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(line_no, format!("bad number {t:?} in vertex")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                match nums.len() {
                    3 | 4 => {
                        vertices.push([nums[0], nums[1], nums[2]]);
                        colors.push([0.5; 3]);
                    }
                    6 | 7 => {
                        vertices.push([nums[0], nums[1], nums[2]]);
                        let c = if nums.len() == 6 { &nums[3..6] } else { &nums[4..7] };
                        colors.push([c[0], c[1], c[2]]);
                        colored += 1;
                    }
                    n => return Err(err(line_no, format!("vertex with {n} components"))),
                }
            }
            "f" => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(err(
                        line_no,
                        format!("non-triangular face ({} vertices)", refs.len()),
                    ));
                }
                let mut face = [0u32; 3];
                for (k, r) in refs.iter().enumerate() {
                    let head = r.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|_| err(line_no, format!("bad face index {r:?}")))?;
                    let n = vertices.len() as i64;
                    let zero_based = if i > 0 { i - 1 } else { n + i };
                    if i == 0 || zero_based < 0 || zero_based >= n {
                        return Err(err(
                            line_no,
                            format!("face index {i} out of range ({n} vertices defined)"),
                        ));
                    }
                    face[k] = zero_based as u32;
                }
                if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                    return Err(err(line_no, "degenerate face".to_string()));
                }
                faces.push(face);
                face_groups.push(current_group);
            }
            "o" | "g" => {
                let name = tokens.collect::<Vec<_>>().join(" ");
                let name = if name.is_empty() { "default".to_string() } else { name };
                current_group = match group_names.iter().position(|g| *g == name) {
                    Some(p) => p as u32,
                    None => {
                        group_names.push(name);
                        (group_names.len() - 1) as u32
                    }
                };
            }
            // Normals, texture coordinates, materials and smoothing groups
            // carry nothing the renderer uses.
            _ => {}
        }
    }

    let mesh = Mesh::with_groups(vertices, faces, face_groups, group_names)?;
    if colored > 0 {
        mesh.with_vertex_colors(colors)
    } else {
        Ok(mesh)
    }
}

/// Serializes a mesh as OBJ, including vertex colors and groups when present.
pub fn write_obj(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let colors = mesh.vertex_colors();
    for (i, v) in mesh.vertices().iter().enumerate() {
        match colors {
            Some(c) => {
                let c = c[i];
                writeln!(out, "v {} {} {} {} {} {}", v[0], v[1], v[2], c[0], c[1], c[2]).unwrap()
            }
            None => writeln!(out, "v {} {} {}", v[0], v[1], v[2]).unwrap(),
        }
    }
    let mut group = None;
    for (f, &g) in mesh.faces().iter().zip(mesh.face_groups()) {
        if group != Some(g) {
            writeln!(out, "g {}", mesh.group_names()[g as usize]).unwrap();
            group = Some(g);
        }
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
