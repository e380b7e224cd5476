use std::collections::HashMap;

use super::{edge_key, Mesh};
use crate::geom;

/// One level of non-smoothing midpoint subdivision.
///
/// Every triangle is split into four through its edge midpoints. Original
/// vertices keep their positions bit-exactly and keep their indices; new
/// midpoints are appended in first-seen edge order, so any two meshes with
/// the same topology produce the same subdivided topology.
pub fn subdivide_simple(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices().to_vec();
    let mut colors = mesh.vertex_colors().map(|c| c.to_vec());
    let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();

    let mut mid = |a: u32, b: u32, vertices: &mut Vec<geom::Vec3>| -> u32 {
        *midpoints.entry(edge_key(a, b)).or_insert_with(|| {
            vertices.push(geom::midpoint(vertices[a as usize], vertices[b as usize]));
            if let Some(c) = colors.as_mut() {
                c.push(geom::midpoint(c[a as usize], c[b as usize]));
            }
            (vertices.len() - 1) as u32
        })
    };

    let mut faces = Vec::with_capacity(mesh.face_count() * 4);
    let mut groups = Vec::with_capacity(mesh.face_count() * 4);
    for (f, &g) in mesh.faces().iter().zip(mesh.face_groups()) {
        let [a, b, c] = *f;
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        faces.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        groups.extend_from_slice(&[g; 4]);
    }

    let out = Mesh::with_groups(vertices, faces, groups, mesh.group_names().to_vec())
        .expect("subdivision of a valid mesh is valid");
    match colors {
        Some(c) => out.with_vertex_colors(c).expect("one color per vertex"),
        None => out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures;
    use std::collections::BTreeSet;

    /// Independent unique-edge counter over sorted pairs.
    fn brute_edges(m: &Mesh) -> usize {
        let mut s = BTreeSet::new();
        for f in m.faces() {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                s.insert((a.min(b), a.max(b)));
            }
        }
        s.len()
    }

    #[test]
    fn single_triangle() {
        let m = subdivide_simple(&fixtures::triangle());
        assert_eq!((m.vertex_count(), m.face_count()), (6, 4));
    }

    #[test]
    fn tetrahedron_counts() {
        let t = fixtures::tetrahedron();
        assert_eq!(brute_edges(&t), 6);
        let m = subdivide_simple(&t);
        assert_eq!((m.vertex_count(), m.face_count()), (10, 16));
    }

    #[test]
    fn twice_on_triangle() {
        let t = fixtures::triangle();
        let once = subdivide_simple(&t);
        assert_eq!(once.vertex_count(), 3 + brute_edges(&t));
        let twice = subdivide_simple(&once);
        assert_eq!(twice.vertex_count(), once.vertex_count() + brute_edges(&once));
        assert_eq!((twice.vertex_count(), twice.face_count()), (15, 16));
    }

    #[test]
    fn original_vertices_bit_exact() {
        let t = fixtures::tetrahedron();
        let m = subdivide_simple(&t);
        for (a, b) in t.vertices().iter().zip(m.vertices()) {
            assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }

    #[test]
    fn same_topology_in_same_topology_out() {
        let t = fixtures::tetrahedron();
        let moved = Mesh::new(
            t.vertices().iter().map(|v| geom::scale(*v, 2.0)).collect(),
            t.faces().to_vec(),
        )
        .unwrap();
        assert_eq!(
            subdivide_simple(&t).topology(),
            subdivide_simple(&moved).topology()
        );
    }
}
