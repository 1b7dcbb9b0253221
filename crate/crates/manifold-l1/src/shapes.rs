//! Procedural test meshes: icosahedron/icosphere, torus variants, and small
//! fixtures. Used by the examples, the test suites, and the benchmarks, so
//! nothing here depends on external data files.

use crate::mesh::TriangleMesh;
use crate::rng::SplitMix64;

/// Single right triangle (0,0,0), (1,0,0), (0,1,0) with area 1/2.
pub fn unit_right_triangle() -> TriangleMesh {
    TriangleMesh::new(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        vec![[0, 1, 2]],
    )
    .expect("fixed fixture")
}

/// A single triangle with arbitrary corners.
pub fn single_triangle(p0: [f64; 3], p1: [f64; 3], p2: [f64; 3]) -> Option<TriangleMesh> {
    TriangleMesh::new(vec![p0, p1, p2], vec![[0, 1, 2]]).ok()
}

/// Regular tetrahedron with the given edge length.
pub fn regular_tetrahedron(edge: f64) -> TriangleMesh {
    let s = edge / 2f64.sqrt() / 2.0;
    let vertices = vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
    TriangleMesh::new(vertices, faces).expect("fixed fixture")
}

/// Regular icosahedron with circumradius `radius`.
pub fn icosahedron(radius: f64) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let scale = radius / (1.0 + phi * phi).sqrt();
    let vertices: Vec<[f64; 3]> = raw
        .iter()
        .map(|v| [v[0] * scale, v[1] * scale, v[2] * scale])
        .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriangleMesh::new(vertices, faces).expect("fixed fixture")
}

/// Icosphere: icosahedron subdivided `levels` times with every vertex pushed
/// back to the sphere of the given radius after each level.
pub fn icosphere(radius: f64, levels: usize) -> TriangleMesh {
    let mut mesh = icosahedron(radius);
    for _ in 0..levels {
        let (sub, _) = mesh.midpoint_subdivide(1).expect("subdividable fixture");
        let vertices: Vec<[f64; 3]> = sub
            .vertices()
            .iter()
            .map(|v| {
                let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                let s = radius / r;
                [v[0] * s, v[1] * s, v[2] * s]
            })
            .collect();
        mesh = TriangleMesh::new(vertices, sub.faces().to_vec())
            .expect("projection keeps faces valid");
    }
    mesh
}

/// Torus with `nu` x `nv` vertices, major radius `major`, tube radius
/// `minor`. The grid quads are split along one diagonal, which makes the
/// triangle shapes (and therefore vertex cell areas) non-uniform.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64) -> TriangleMesh {
    assert!(nu >= 3 && nv >= 3, "torus needs at least a 3x3 grid");
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let ring = major + minor * v.cos();
            vertices.push([ring * u.cos(), ring * u.sin(), minor * v.sin()]);
        }
    }
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        let i1 = (i + 1) % nu;
        for j in 0..nv {
            let j1 = (j + 1) % nv;
            let a = i * nv + j;
            let b = i1 * nv + j;
            let c = i1 * nv + j1;
            let d = i * nv + j1;
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("fixed fixture")
}

/// Torus whose tube radius is modulated by a few fixed low-frequency bumps.
/// The bumps break the rotational symmetries, which pins localized modes to
/// geometric features and makes cross-resolution comparisons meaningful.
pub fn bumpy_torus(nu: usize, nv: usize, major: f64, minor: f64, amplitude: f64) -> TriangleMesh {
    assert!(nu >= 3 && nv >= 3, "torus needs at least a 3x3 grid");
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let bump = 1.0
                + amplitude
                    * ((2.0 * u).cos() * 0.6
                        + (3.0 * u + 1.0).sin() * 0.4
                        + (u + 2.0 * v).cos() * 0.3);
            let r = minor * bump;
            let ring = major + r * v.cos();
            vertices.push([ring * u.cos(), ring * u.sin(), r * v.sin()]);
        }
    }
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        let i1 = (i + 1) % nu;
        for j in 0..nv {
            let j1 = (j + 1) % nv;
            let a = i * nv + j;
            let b = i1 * nv + j;
            let c = i1 * nv + j1;
            let d = i * nv + j1;
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("fixed fixture")
}

/// Random non-degenerate triangle with corners drawn uniformly from the unit
/// cube. Resamples until the area clears the degeneracy threshold.
pub fn random_triangle(rng: &mut SplitMix64) -> TriangleMesh {
    loop {
        let mut p = [[0.0; 3]; 3];
        for corner in p.iter_mut() {
            for c in corner.iter_mut() {
                *c = rng.next_f64();
            }
        }
        if let Some(mesh) = single_triangle(p[0], p[1], p[2]) {
            if mesh.face_areas()[0] > 1e-3 {
                return mesh;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_counts() {
        let mesh = icosahedron(1.0);
        assert_eq!(mesh.vertex_count(), 12);
        assert_eq!(mesh.face_count(), 20);
        for v in mesh.vertices() {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn icosphere_area_approaches_sphere() {
        // 1% of 4*pi at three subdivision levels.
        let mesh = icosphere(1.0, 3);
        let sphere = 4.0 * std::f64::consts::PI;
        assert!((mesh.total_area() - sphere).abs() < 0.01 * sphere);
        assert_eq!(mesh.vertex_count(), 642);
    }

    #[test]
    fn torus_is_closed_and_nonuniform() {
        let mesh = torus(16, 12, 1.0, 0.4);
        assert_eq!(mesh.vertex_count(), 192);
        assert_eq!(mesh.face_count(), 384);
        // closed surface: every edge shared by exactly two faces
        let mut edge_count = std::collections::HashMap::new();
        for face in mesh.faces() {
            for (a, b) in [(face[0], face[1]), (face[1], face[2]), (face[2], face[0])] {
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
            }
        }
        assert!(edge_count.values().all(|&c| c == 2));
        let areas = mesh.vertex_cell_areas(crate::mesh::AreaScheme::Barycentric);
        let min = areas.areas().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = areas.areas().iter().cloned().fold(0.0, f64::max);
        assert!(max / min > 1.05, "cell areas should be non-uniform");
    }
}
