use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{edge_key, Mesh, TopologySignature};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

/// Axis-aligned box in rest-pose coordinates; selects faces by centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

/// How a logo region is described on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionSpec {
    /// Explicit face indices, optionally pinned to a topology.
    Faces {
        faces: Vec<usize>,
        topology: Option<TopologySignature>,
    },
    /// Union of boxes; a face is selected when its centroid lies in any box.
    Boxes(Vec<Aabb>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BoxFile {
    One(Aabb),
    Many(Vec<Aabb>),
}

impl RegionSpec {
    /// Reads a `.faces` list or a JSON box file (one `{min,max}` object or an
    /// array of them).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let boxes = match serde_json::from_str::<BoxFile>(&text)? {
                BoxFile::One(b) => vec![b],
                BoxFile::Many(v) => v,
            };
            Ok(RegionSpec::Boxes(boxes))
        } else {
            Self::parse_faces(&text, path)
        }
    }

    /// Parses newline-separated decimal face indices. A `# topology <hex>`
    /// comment line pins the list to a mesh topology.
    pub fn parse_faces(text: &str, origin: &Path) -> Result<Self> {
        let mut faces = Vec::new();
        let mut topology = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(sig) = comment.trim().strip_prefix("topology") {
                    topology = Some(TopologySignature::try_from(sig.trim().to_string()).map_err(
                        |msg| Error::Parse {
                            path: origin.to_path_buf(),
                            line: i + 1,
                            msg,
                        },
                    )?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            faces.push(line.parse::<usize>().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg: format!("bad face index {line:?}"),
            })?);
        }
        Ok(RegionSpec::Faces { faces, topology })
    }
}

/// An edge shared by two region faces, with its frozen rest length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorEdge {
    pub vertices: (u32, u32),
    pub faces: (u32, u32),
    pub rest_length: f64,
}

/// The trainable subset of a mesh's faces and the edges the mesh TV loss
/// runs over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogoRegion {
    face_ids: Vec<u32>,
    interior_edges: Vec<InteriorEdge>,
    topology: TopologySignature,
    mesh_faces: usize,
}

impl LogoRegion {
    /// Builds a region on `mesh`, computing interior edges and their lengths
    /// from this mesh's vertex positions.
    pub fn select(mesh: &Mesh, spec: &RegionSpec) -> Result<Self> {
        let faces: Vec<usize> = match spec {
            RegionSpec::Faces { faces, topology } => {
                if let Some(sig) = topology {
                    if *sig != mesh.topology() {
                        return Err(Error::TopologyMismatch {
                            expected: sig.to_string(),
                            found: mesh.topology().to_string(),
                        });
                    }
                }
                faces.clone()
            }
            RegionSpec::Boxes(boxes) => (0..mesh.face_count())
                .filter(|&f| {
                    let c = mesh.centroid(f);
                    boxes.iter().any(|b| b.contains(c))
                })
                .collect(),
        };
        Self::from_faces(mesh, &faces)
    }

    pub fn from_faces(mesh: &Mesh, faces: &[usize]) -> Result<Self> {
        let n = mesh.face_count();
        if let Some(&bad) = faces.iter().find(|&&f| f >= n) {
            return Err(Error::FaceOutOfRange {
                index: bad,
                faces: n,
            });
        }
        let mut face_ids: Vec<u32> = faces.iter().map(|&f| f as u32).collect();
        face_ids.sort_unstable();
        face_ids.dedup();
        if face_ids.is_empty() {
            return Err(Error::EmptyRegion);
        }

        let mut member = vec![false; n];
        for &f in &face_ids {
            member[f as usize] = true;
        }
        let mut adjacency: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
        for (fi, f) in mesh.faces().iter().enumerate() {
            for k in 0..3 {
                adjacency
                    .entry(edge_key(f[k], f[(k + 1) % 3]))
                    .or_default()
                    .push(fi as u32);
            }
        }
        let mut interior_edges = Vec::new();
        for (edge, owners) in adjacency {
            if let [f1, f2] = owners[..] {
                if member[f1 as usize] && member[f2 as usize] {
                    let len = geom::norm(geom::sub(
                        mesh.vertices()[edge.0 as usize],
                        mesh.vertices()[edge.1 as usize],
                    ));
                    if len.is_nan() || len <= 0.0 {
                        return Err(Error::InvalidMesh(format!(
                            "zero-length interior edge {edge:?}"
                        )));
                    }
                    interior_edges.push(InteriorEdge {
                        vertices: edge,
                        faces: (f1, f2),
                        rest_length: len,
                    });
                }
            }
        }
        Ok(LogoRegion {
            face_ids,
            interior_edges,
            topology: mesh.topology(),
            mesh_faces: n,
        })
    }

    /// Binds this region to another mesh of the same topology. Rest lengths
    /// stay those of the reference mesh.
    pub fn transfer(&self, mesh: &Mesh) -> Result<Self> {
        self.check_mesh(mesh)?;
        Ok(self.clone())
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if mesh.topology() != self.topology {
            return Err(Error::TopologyMismatch {
                expected: self.topology.to_string(),
                found: mesh.topology().to_string(),
            });
        }
        Ok(())
    }

    pub fn face_ids(&self) -> &[u32] {
        &self.face_ids
    }

    pub fn interior_edges(&self) -> &[InteriorEdge] {
        &self.interior_edges
    }

    pub fn topology(&self) -> TopologySignature {
        self.topology
    }

    /// Face count of the mesh this region indexes into.
    pub fn mesh_face_count(&self) -> usize {
        self.mesh_faces
    }

    pub fn len(&self) -> usize {
        self.face_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.face_ids.is_empty()
    }

    /// Per-face membership mask over the whole mesh.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.mesh_faces];
        for &f in &self.face_ids {
            m[f as usize] = true;
        }
        m
    }

    /// `.faces` text: topology comment then one index per line.
    pub fn to_faces_text(&self) -> String {
        let mut s = format!("# topology {}\n", self.topology);
        for f in &self.face_ids {
            writeln!(s, "{f}").unwrap();
        }
        s
    }

    pub fn write_faces(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_faces_text()).map_err(|e| Error::io(path, e))
    }

    pub fn spec(&self) -> RegionSpec {
        RegionSpec::Faces {
            faces: self.face_ids.iter().map(|&f| f as usize).collect(),
            topology: Some(self.topology),
        }
    }
}
