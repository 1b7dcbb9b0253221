//! Cotangent stiffness and lumped mass assembly.

use crate::error::Result;
use crate::mesh::{AreaScheme, TriangleMesh};
use crate::sparse::{DiagonalMatrix, SparseSymmetric, SymmetricAssembler};

/// Cotangent stiffness matrix W.
///
/// Off-diagonal entries are -(cot a + cot b)/2 summed over the one or two
/// triangles containing the edge; diagonal entries make every row sum to
/// zero. Cotangents come from edge-vector dot and cross products, never from
/// extracted angles, and negative cotangent weights are kept as they are:
/// clamping would change the operator.
pub fn cotangent_stiffness(mesh: &TriangleMesh) -> SparseSymmetric {
    let n = mesh.vertex_count();
    let mut asm = SymmetricAssembler::new(n);
    for face in mesh.faces() {
        let p = [
            mesh.vertices()[face[0]],
            mesh.vertices()[face[1]],
            mesh.vertices()[face[2]],
        ];
        // edge (i, j) opposite corner k: contributes cot(angle at k) / 2
        for k in 0..3 {
            let i = (k + 1) % 3;
            let j = (k + 2) % 3;
            let u = [p[i][0] - p[k][0], p[i][1] - p[k][1], p[i][2] - p[k][2]];
            let v = [p[j][0] - p[k][0], p[j][1] - p[k][1], p[j][2] - p[k][2]];
            let cx = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let cross_norm = (cx[0] * cx[0] + cx[1] * cx[1] + cx[2] * cx[2]).sqrt();
            let cot = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]) / cross_norm;
            let half_cot = 0.5 * cot;
            asm.add_sym(face[i], face[j], -half_cot);
            asm.add_diag(face[i], half_cot);
            asm.add_diag(face[j], half_cot);
        }
    }
    asm.build()
}

/// Diagonal (lumped) mass matrix from vertex cell areas.
pub fn lumped_mass(mesh: &TriangleMesh, scheme: AreaScheme) -> DiagonalMatrix {
    DiagonalMatrix::from_cell_areas(&mesh.vertex_cell_areas(scheme))
}

/// Write a matrix as ASCII coordinate triplets, one `i j value` line per
/// stored entry, 0-based.
pub fn write_coordinate_file(
    matrix: &SparseSymmetric,
    writer: &mut impl std::io::Write,
) -> Result<()> {
    for (i, j, v) in matrix.triplets() {
        writeln!(writer, "{i} {j} {v:.17e}")?;
    }
    Ok(())
}
