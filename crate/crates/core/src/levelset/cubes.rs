use std::collections::{HashMap, HashSet};

use super::tables::TRIANGLES;
use super::{BoundaryGeometry, ScalarFieldGrid, TriangleMesh};

// Corner offsets (x, y, z) in the classic numbering.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Marching cubes with the 256-case table and linear edge interpolation.
///
/// Vertices are shared between neighbouring cubes (one per crossed grid edge),
/// so the mesh is watertight away from the domain boundary. Triangles are
/// wound so their normals point toward increasing field values.
///
/// # Panics
///
/// If the field is not three-dimensional.
pub fn extract_zero_level_3d(field: &ScalarFieldGrid) -> BoundaryGeometry {
    let spec = field.spec();
    assert_eq!(spec.dim(), 3, "marching cubes needs a 3D field");
    let res = spec.resolution();
    let strides = spec.strides();
    let v = field.values();

    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mesh = TriangleMesh::default();

    for i in 0..res[0] - 1 {
        for j in 0..res[1] - 1 {
            for k in 0..res[2] - 1 {
                let base = [i, j, k];
                let node = |c: usize| {
                    let o = CORNERS[c];
                    (base[0] + o[0]) * strides[0] + (base[1] + o[1]) * strides[1] + (base[2] + o[2]) * strides[2]
                };
                let vals: [f64; 8] = std::array::from_fn(|c| v[node(c)]);
                // Table convention: bit set for corners below the level.
                let case = vals
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (c, &val)| acc | (((val < 0.0) as usize) << c));
                if case == 0 || case == 255 {
                    continue;
                }
                let row = &TRIANGLES[case];
                for tri in row.chunks_exact(3).take_while(|t| t[0] >= 0) {
                    let mut ids = [0usize; 3];
                    for (slot, &e) in ids.iter_mut().zip(tri) {
                        let [a, b] = EDGES[e as usize];
                        let (na, nb) = (node(a), node(b));
                        let key = (na.min(nb), na.max(nb));
                        *slot = *index.entry(key).or_insert_with(|| {
                            let (va, vb) = (vals[a], vals[b]);
                            let t = va / (va - vb);
                            let pa = spec.node(na);
                            let pb = spec.node(nb);
                            mesh.vertices.push(std::array::from_fn(|d| pa[d] + t * (pb[d] - pa[d])));
                            mesh.vertices.len() - 1
                        });
                    }
                    // The table winds normals toward the lower corners.
                    mesh.triangles.push([ids[0], ids[2], ids[1]]);
                }
            }
        }
    }
    BoundaryGeometry::Mesh { mesh }
}

/// `V - E + F` of a triangle mesh, counting unique undirected edges.
pub fn euler_characteristic(mesh: &TriangleMesh) -> i64 {
    let mut edges = HashSet::new();
    for t in &mesh.triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    mesh.vertices.len() as i64 - edges.len() as i64 + mesh.triangles.len() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::GridSpec;

    fn mesh_of(g: BoundaryGeometry) -> TriangleMesh {
        match g {
            BoundaryGeometry::Mesh { mesh } => mesh,
            _ => panic!("expected mesh"),
        }
    }

    fn normal(m: &TriangleMesh, t: &[usize; 3]) -> [f64; 3] {
        let [a, b, c] = t.map(|i| m.vertices[i]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let w = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        [
            u[1] * w[2] - u[2] * w[1],
            u[2] * w[0] - u[0] * w[2],
            u[0] * w[1] - u[1] * w[0],
        ]
    }

    #[test]
    fn sphere_is_closed_and_oriented_inward() {
        let spec = GridSpec::cube(3, -2.0, 2.0, 41).unwrap();
        let field = ScalarFieldGrid::from_fn(spec, |x| 1.0 - x.iter().map(|v| v * v).sum::<f64>())
            .unwrap();
        let mesh = mesh_of(extract_zero_level_3d(&field));
        assert!(!mesh.triangles.is_empty());
        assert_eq!(euler_characteristic(&mesh), 2);
        for v in &mesh.vertices {
            let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 0.1);
        }
        // The field increases toward the centre, so normals point inward.
        for t in &mesh.triangles {
            let n = normal(&mesh, t);
            let a = mesh.vertices[t[0]];
            let dot = n[0] * a[0] + n[1] * a[1] + n[2] * a[2];
            assert!(dot <= 0.0, "outward-facing triangle {t:?}");
        }
    }

    #[test]
    fn constant_field_is_empty() {
        let spec = GridSpec::cube(3, -1.0, 1.0, 6).unwrap();
        let field = ScalarFieldGrid::from_fn(spec, |_| -2.0).unwrap();
        assert!(extract_zero_level_3d(&field).is_empty());
    }

    #[test]
    fn plane_is_exact() {
        let spec = GridSpec::cube(3, -1.0, 1.0, 10).unwrap();
        let field = ScalarFieldGrid::from_fn(spec, |x| x[2]).unwrap();
        let mesh = mesh_of(extract_zero_level_3d(&field));
        assert_eq!(mesh.vertices.len(), 100);
        assert!(mesh.vertices.iter().all(|v| v[2].abs() <= 1e-12));
        for t in &mesh.triangles {
            assert!(normal(&mesh, t)[2] > 0.0);
        }
        // An open square sheet: V - E + F = 1.
        assert_eq!(euler_characteristic(&mesh), 1);
    }
}
