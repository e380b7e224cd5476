//! Triangle meshes, subdivision, logo regions and per-face texture atlases.

mod atlas;
mod obj;
mod region;
mod subdivide;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use atlas::TextureAtlas;
pub use obj::{load_obj, parse_obj, write_obj};
pub use region::{Aabb, InteriorEdge, LogoRegion, RegionSpec};
pub use subdivide::subdivide_simple;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

/// Order-sensitive hash of a mesh's face index array.
///
/// Two meshes share a signature iff they list identical faces in identical
/// order, which is what lets one face-index region apply to every pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct TopologySignature(pub u64);

impl TopologySignature {
    pub fn of_faces(faces: &[[u32; 3]]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update((faces.len() as u64).to_le_bytes());
        for f in faces {
            for &i in f {
                hasher.update(i.to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        TopologySignature(u64::from_be_bytes(head))
    }
}

impl fmt::Display for TopologySignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl From<TopologySignature> for String {
    fn from(s: TopologySignature) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for TopologySignature {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        u64::from_str_radix(s.trim(), 16)
            .map(TopologySignature)
            .map_err(|e| format!("bad topology signature {s:?}: {e}"))
    }
}

/// Triangle mesh with optional per-vertex colors and per-face group labels.
///
/// Group labels come from OBJ `o`/`g` records and identify body parts; they
/// are used to recolor clothing when synthesizing detector training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    vertex_colors: Option<Vec<Vec3>>,
    face_groups: Vec<u32>,
    group_names: Vec<String>,
    signature: TopologySignature,
}

impl Mesh {
    /// Builds a mesh with every face in a single unnamed group.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let groups = vec![0; faces.len()];
        Self::with_groups(vertices, faces, groups, vec!["default".to_string()])
    }

    pub fn with_groups(
        vertices: Vec<Vec3>,
        faces: Vec<[u32; 3]>,
        face_groups: Vec<u32>,
        group_names: Vec<String>,
    ) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex out of range ({n} vertices)"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} is degenerate: {f:?}")));
            }
        }
        if face_groups.len() != faces.len() {
            return Err(Error::InvalidMesh("face group count mismatch".into()));
        }
        if face_groups.iter().any(|&g| g as usize >= group_names.len().max(1)) {
            return Err(Error::InvalidMesh("face group id out of range".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let signature = TopologySignature::of_faces(&faces);
        Ok(Mesh {
            vertices,
            faces,
            vertex_colors: None,
            face_groups,
            group_names,
            signature,
        })
    }

    /// Attaches per-vertex colors (clamped to [0,1]).
    pub fn with_vertex_colors(mut self, colors: Vec<Vec3>) -> Result<Self> {
        if colors.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "{} vertex colors for {} vertices",
                colors.len(),
                self.vertices.len()
            )));
        }
        self.vertex_colors = Some(
            colors
                .into_iter()
                .map(|c| c.map(|v| v.clamp(0.0, 1.0)))
                .collect(),
        );
        Ok(self)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn vertex_colors(&self) -> Option<&[Vec3]> {
        self.vertex_colors.as_deref()
    }

    pub fn face_groups(&self) -> &[u32] {
        &self.face_groups
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn topology(&self) -> TopologySignature {
        self.signature
    }

    pub fn face_vertices(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_vertices(f);
        geom::scale(geom::add(geom::add(a, b), c), 1.0 / 3.0)
    }

    /// The mesh's own colors as an atlas: mean vertex color per face, or a
    /// uniform mid-gray when the mesh carries no colors.
    pub fn base_atlas(&self) -> TextureAtlas {
        match &self.vertex_colors {
            Some(vc) => TextureAtlas::from_colors(
                self.faces
                    .iter()
                    .map(|f| {
                        let s = geom::add(
                            geom::add(vc[f[0] as usize], vc[f[1] as usize]),
                            vc[f[2] as usize],
                        );
                        geom::scale(s, 1.0 / 3.0)
                    })
                    .collect(),
            ),
            None => TextureAtlas::uniform(self.face_count(), [0.5; 3]),
        }
    }

    /// Unique undirected edges as sorted vertex pairs, in first-seen order.
    pub fn unique_edges(&self) -> Vec<(u32, u32)> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for f in &self.faces {
            for k in 0..3 {
                let e = edge_key(f[k], f[(k + 1) % 3]);
                if seen.insert(e) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Axis-aligned bounds of the vertices, `None` for an empty mesh.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (
                [lo[0].min(v[0]), lo[1].min(v[1]), lo[2].min(v[2])],
                [hi[0].max(v[0]), hi[1].max(v[1]), hi[2].max(v[2])],
            )
        }))
    }

    /// Returns an error unless `other` shares this mesh's topology.
    pub fn check_same_topology(&self, other: &Mesh) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::TopologyMismatch {
                expected: self.signature.to_string(),
                found: other.signature.to_string(),
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}
