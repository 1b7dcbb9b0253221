//! Discrete L1 norms of piecewise-linear vertex functions.
//!
//! Three discretizations of the surface integral of |f|:
//!
//! * [`norm_naive`] — plain sum of absolute sample values. Ignores the mesh
//!   geometry entirely; kept as the baseline everything else is measured
//!   against.
//! * [`norm_zeroth`] — cell-area weighted sum, treating f as piecewise
//!   constant on vertex cells.
//! * [`norm_first`] — the exact integral of |f_hat| where f_hat is the
//!   piecewise-linear interpolant. Each triangle is split along the zero line
//!   of the interpolant and integrated in closed form; see
//!   [`first_order_weights`].
//!
//! [`quadrature_norm`] integrates |f_hat| with a deterministic low-discrepancy
//! rule and serves as the independent reference the closed-form route is
//! tested against.

use crate::error::{Error, Result};
use crate::mesh::{CellAreaVector, TriangleMesh};
use crate::rng::{hash_f64_slice, SplitMix64};

/// Which L1 discretization a weight vector (or an IRLS run) uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Scheme {
    Zeroth,
    First,
}

/// A vertex-sampled scalar function, validated to be finite.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Parse(format!(
                    "function value {i} is not finite: {v}"
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl std::ops::Deref for VertexFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// First-order weights w_i together with the scheme and a fingerprint of the
/// (mesh, function) pair that produced them.
#[derive(Clone, Debug)]
pub struct L1Weights {
    weights: Vec<f64>,
    scheme: L1Scheme,
    source_hash: u64,
}

impl L1Weights {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> L1Scheme {
        self.scheme
    }

    pub fn source_hash(&self) -> u64 {
        self.source_hash
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Sum of absolute sample values. No area weighting.
pub fn norm_naive(f: &[f64]) -> f64 {
    f.iter().map(|v| v.abs()).sum()
}

/// Cell-area weighted sum of absolute sample values.
pub fn norm_zeroth(f: &[f64], areas: &CellAreaVector) -> Result<f64> {
    check_len(areas.len(), f.len())?;
    Ok(f.iter().zip(areas.areas()).map(|(v, a)| v.abs() * a).sum())
}

/// Zeroth-order weights: w_i = a_i * sign(f_i), with sign(0) = 0.
pub fn zeroth_order_weights(f: &[f64], areas: &CellAreaVector) -> Result<L1Weights> {
    check_len(areas.len(), f.len())?;
    let weights = f
        .iter()
        .zip(areas.areas())
        .map(|(&v, &a)| {
            if v > 0.0 {
                a
            } else if v < 0.0 {
                -a
            } else {
                0.0
            }
        })
        .collect();
    Ok(L1Weights {
        weights,
        scheme: L1Scheme::Zeroth,
        source_hash: hash_f64_slice(0, f),
    })
}

/// Exact per-vertex weights w_i = integral of b_i * sign(f_hat).
///
/// Triangles whose values are all >= 0 or all <= 0 contribute
/// sign * area / 3 to each corner. In a mixed-sign triangle the interpolant's
/// zero set is a straight segment; the triangle is split into a corner
/// triangle and a quadrilateral, the quadrilateral is split again at the
/// corner that is the triangle vertex with the smallest global index, and
/// each piece is integrated exactly (the mean of a linear function over a
/// triangle is its value at the corner average).
///
/// Near-zero values are never snapped: correctness is checked against the
/// quadrature reference, not a tolerance.
pub fn first_order_weights(mesh: &TriangleMesh, f: &[f64]) -> Result<L1Weights> {
    check_len(mesh.vertex_count(), f.len())?;
    let mut weights = vec![0.0; f.len()];

    for (t, face) in mesh.faces().iter().enumerate() {
        let area = mesh.face_areas()[t];
        let values = [f[face[0]], f[face[1]], f[face[2]]];
        let pos = values.iter().filter(|&&v| v > 0.0).count();
        let neg = values.iter().filter(|&&v| v < 0.0).count();

        if pos == 0 || neg == 0 {
            // uniform sign; zeros are compatible with either side
            let s = if pos > 0 {
                1.0
            } else if neg > 0 {
                -1.0
            } else {
                continue;
            };
            let third = s * area / 3.0;
            for &v in face {
                weights[v] += third;
            }
            continue;
        }

        // Mixed sign. The apex is the lone strict-sign vertex; when one value
        // is exactly zero (one positive, one negative) the positive vertex is
        // the apex and one crossing degenerates onto the zero vertex.
        let apex = if pos == 1 && neg >= 1 {
            values.iter().position(|&v| v > 0.0).unwrap()
        } else {
            values.iter().position(|&v| v < 0.0).unwrap()
        };
        let b = (apex + 1) % 3;
        let c = (apex + 2) % 3;
        let fa = values[apex];
        let tau_b = fa / (fa - values[b]);
        let tau_c = fa / (fa - values[c]);
        let s_a = if fa > 0.0 { 1.0 } else { -1.0 };

        // corners in barycentric coordinates over (apex, b, c)
        let e_a = [1.0, 0.0, 0.0];
        let e_b = [0.0, 1.0, 0.0];
        let e_c = [0.0, 0.0, 1.0];
        let x_ab = [1.0 - tau_b, tau_b, 0.0];
        let x_ac = [1.0 - tau_c, 0.0, tau_c];

        let mut add_subtriangle = |p1: [f64; 3], p2: [f64; 3], p3: [f64; 3], sign: f64| {
            // area ratio from the (alpha, beta) affine chart
            let det = (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]);
            let sub_area = det.abs() * area;
            if sub_area == 0.0 {
                return;
            }
            let local = [apex, b, c];
            for k in 0..3 {
                let mean_hat = (p1[k] + p2[k] + p3[k]) / 3.0;
                weights[face[local[k]]] += sign * sub_area * mean_hat;
            }
        };

        // corner triangle on the apex side
        add_subtriangle(e_a, x_ab, x_ac, s_a);

        // quadrilateral (x_ab, b, c, x_ac) on the opposite side, split at the
        // smaller-global-index triangle vertex among b and c
        if face[b] <= face[c] {
            add_subtriangle(e_b, e_c, x_ac, -s_a);
            add_subtriangle(e_b, x_ac, x_ab, -s_a);
        } else {
            add_subtriangle(e_c, x_ac, x_ab, -s_a);
            add_subtriangle(e_c, x_ab, e_b, -s_a);
        }
    }

    Ok(L1Weights {
        weights,
        scheme: L1Scheme::First,
        source_hash: hash_f64_slice(mesh.geometry_hash(), f),
    })
}

/// Exact integral of |f_hat| over the mesh: the dot product of f with the
/// first-order weights. Nonnegative by construction.
pub fn norm_first(mesh: &TriangleMesh, f: &[f64]) -> Result<f64> {
    let w = first_order_weights(mesh, f)?;
    Ok(f.iter().zip(w.weights()).map(|(a, b)| a * b).sum())
}

/// Quadrature reference for the integral of |f_hat|.
///
/// Uses an additive-recurrence low-discrepancy sequence in the unit square,
/// shifted per triangle (decorrelates errors across triangles), folded onto
/// the reference triangle, and then symmetrized over the three cyclic
/// barycentric rotations. The cyclic orbit averages to the centroid, so
/// linear integrands are integrated exactly and uniform-sign functions
/// reproduce [`norm_first`] to rounding. The effective point count is
/// `points_per_triangle` rounded up to a multiple of 3.
pub fn quadrature_norm(mesh: &TriangleMesh, f: &[f64], points_per_triangle: usize) -> Result<f64> {
    check_len(mesh.vertex_count(), f.len())?;
    let base_count = points_per_triangle.div_ceil(3).max(1);

    // plastic-constant additive recurrence
    const G1: f64 = 0.754_877_666_246_692_7;
    const G2: f64 = 0.569_840_290_998_053_2;

    let mut total = 0.0;
    for (t, face) in mesh.faces().iter().enumerate() {
        let fv = [f[face[0]], f[face[1]], f[face[2]]];
        let mut rng = SplitMix64::new(0x5EED_0000 + t as u64);
        let shift_u = rng.next_f64();
        let shift_v = rng.next_f64();

        let mut acc = 0.0;
        for q in 0..base_count {
            let mut u = (0.5 + shift_u + q as f64 * G1).fract();
            let mut v = (0.5 + shift_v + q as f64 * G2).fract();
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            let b = [1.0 - u - v, u, v];
            // cyclic orbit of the barycentric point
            for r in 0..3 {
                let val = fv[0] * b[r % 3] + fv[1] * b[(r + 1) % 3] + fv[2] * b[(r + 2) % 3];
                acc += val.abs();
            }
        }
        total += mesh.face_areas()[t] * acc / (3 * base_count) as f64;
    }
    Ok(total)
}

#[cfg(test)]
pub(crate) mod test_oracles {
    use super::*;

    /// Quadrature reference for the weights themselves: per-vertex integral
    /// of b_i * sign(f_hat), same point construction as [`quadrature_norm`].
    pub fn quadrature_weights(
        mesh: &TriangleMesh,
        f: &[f64],
        points_per_triangle: usize,
    ) -> Vec<f64> {
        let base_count = points_per_triangle.div_ceil(3).max(1);
        const G1: f64 = 0.754_877_666_246_692_7;
        const G2: f64 = 0.569_840_290_998_053_2;

        let mut weights = vec![0.0; f.len()];
        for (t, face) in mesh.faces().iter().enumerate() {
            let fv = [f[face[0]], f[face[1]], f[face[2]]];
            let mut rng = SplitMix64::new(0x5EED_0000 + t as u64);
            let shift_u = rng.next_f64();
            let shift_v = rng.next_f64();

            let mut acc = [0.0f64; 3];
            for q in 0..base_count {
                let mut u = (0.5 + shift_u + q as f64 * G1).fract();
                let mut v = (0.5 + shift_v + q as f64 * G2).fract();
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                let b = [1.0 - u - v, u, v];
                for r in 0..3 {
                    let bary = [b[r % 3], b[(r + 1) % 3], b[(r + 2) % 3]];
                    let val = fv[0] * bary[0] + fv[1] * bary[1] + fv[2] * bary[2];
                    let s = if val > 0.0 {
                        1.0
                    } else if val < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    for k in 0..3 {
                        acc[k] += bary[k] * s;
                    }
                }
            }
            let scale = mesh.face_areas()[t] / (3 * base_count) as f64;
            for k in 0..3 {
                weights[face[k]] += acc[k] * scale;
            }
        }
        weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::AreaScheme;
    use crate::shapes;
    use proptest::prelude::*;

    #[test]
    fn naive_norm_examples() {
        assert_eq!(norm_naive(&[1.0, -2.0, 3.0]), 6.0);
        assert_eq!(norm_naive(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn zeroth_norm_examples() {
        let mesh = shapes::unit_right_triangle();
        let areas = mesh.vertex_cell_areas(AreaScheme::Barycentric);
        // f == 1 integrates to the surface area
        let total = norm_zeroth(&[1.0, 1.0, 1.0], &areas).unwrap();
        assert!((total - 0.5).abs() < 1e-15);
        // |f| == 1 everywhere gives the same value
        let mixed = norm_zeroth(&[1.0, -1.0, 1.0], &areas).unwrap();
        assert!((mixed - 0.5).abs() < 1e-15);
        // dimension mismatch
        assert!(matches!(
            norm_zeroth(&[1.0], &areas),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uniform_sign_triangle_weights() {
        let mesh = shapes::unit_right_triangle();
        let t = mesh.face_areas()[0];
        let w = first_order_weights(&mesh, &[2.0, 1.0, 0.5]).unwrap();
        for &wi in w.weights() {
            assert!((wi - t / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sign_split_triangle_exact_values() {
        // f = (1, -1, 0): the zero line runs from the midpoint of the first
        // edge to the third vertex; w = (T/6, -T/6, 0) and the norm is T/3.
        let mesh = shapes::unit_right_triangle();
        let t = mesh.face_areas()[0];
        let f = [1.0, -1.0, 0.0];
        let w = first_order_weights(&mesh, &f).unwrap();
        assert!(
            (w.weights()[0] - t / 6.0).abs() < 1e-15,
            "w0 = {}",
            w.weights()[0]
        );
        assert!(
            (w.weights()[1] + t / 6.0).abs() < 1e-15,
            "w1 = {}",
            w.weights()[1]
        );
        assert!(w.weights()[2].abs() < 1e-15, "w2 = {}", w.weights()[2]);

        let norm = norm_first(&mesh, &f).unwrap();
        assert!((norm - t / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sign_split_matches_quadrature_on_random_triangles() {
        let mut rng = SplitMix64::new(77);
        for trial in 0..50 {
            let mesh = shapes::random_triangle(&mut rng);
            let mut f = [
                rng.next_symmetric(),
                rng.next_symmetric(),
                rng.next_symmetric(),
            ];
            if trial % 5 == 0 {
                // zero-at-vertex degeneracy with opposite signs elsewhere
                f[trial % 3] = 0.0;
                f[(trial + 1) % 3] = f[(trial + 1) % 3].abs();
                f[(trial + 2) % 3] = -f[(trial + 2) % 3].abs().max(1e-3);
            }
            let w = first_order_weights(&mesh, &f).unwrap();
            let oracle = test_oracles::quadrature_weights(&mesh, &f, 100_000);
            for i in 0..3 {
                let err = (w.weights()[i] - oracle[i]).abs();
                assert!(err < 1e-3, "trial {trial}: w[{i}] err {err}");
            }
        }
    }

    #[test]
    fn first_norm_matches_quadrature_on_a_mesh() {
        let mesh = shapes::torus(12, 9, 1.0, 0.4);
        let mut rng = SplitMix64::new(3);
        let f: Vec<f64> = (0..mesh.vertex_count())
            .map(|_| rng.next_normal())
            .collect();
        let exact = norm_first(&mesh, &f).unwrap();
        let quad = quadrature_norm(&mesh, &f, 3000).unwrap();
        assert!(
            (exact - quad).abs() <= 1e-4 * exact,
            "exact {exact}, quad {quad}"
        );
    }

    #[test]
    fn quadrature_exact_on_constants_and_uniform_sign() {
        let mesh = shapes::icosphere(1.0, 1);
        let n = mesh.vertex_count();
        let ones = vec![1.0; n];
        let quad = quadrature_norm(&mesh, &ones, 300).unwrap();
        assert!((quad - mesh.total_area()).abs() <= 1e-12 * mesh.total_area());

        let mut rng = SplitMix64::new(4);
        let pos: Vec<f64> = (0..n).map(|_| rng.next_f64() + 0.01).collect();
        let quad = quadrature_norm(&mesh, &pos, 300).unwrap();
        let exact = norm_first(&mesh, &pos).unwrap();
        assert!((quad - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn quadrature_converges_with_point_doubling() {
        let mesh = shapes::unit_right_triangle();
        let f = [1.0, -1.0, 0.0];
        let exact = mesh.face_areas()[0] / 3.0;
        let mut last = f64::INFINITY;
        for points in [1000, 10_000, 100_000, 1_000_000] {
            let err = (quadrature_norm(&mesh, &f, points).unwrap() - exact).abs() / exact;
            assert!(
                err < last * 2.0,
                "err {err} after {points} points (last {last})"
            );
            last = err;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn uniform_sign_collapse_with_zeros() {
        let mesh = shapes::torus(10, 8, 1.0, 0.35);
        let areas = mesh.vertex_cell_areas(AreaScheme::Barycentric);
        let mut rng = SplitMix64::new(12);
        let f: Vec<f64> = (0..mesh.vertex_count())
            .map(|i| if i % 7 == 0 { 0.0 } else { rng.next_f64() })
            .collect();
        let zeroth = norm_zeroth(&f, &areas).unwrap();
        let first = norm_first(&mesh, &f).unwrap();
        assert!((zeroth - first).abs() <= 1e-12 * zeroth.max(1.0));
    }

    #[test]
    fn weights_bounded_by_cell_areas() {
        let mesh = shapes::icosphere(1.0, 2);
        let areas = mesh.vertex_cell_areas(AreaScheme::Barycentric);
        let mut rng = SplitMix64::new(21);
        let f: Vec<f64> = (0..mesh.vertex_count())
            .map(|_| rng.next_normal())
            .collect();
        let w = first_order_weights(&mesh, &f).unwrap();
        for (wi, ai) in w.weights().iter().zip(areas.areas()) {
            assert!(
                wi.abs() <= ai * (1.0 + 1e-12),
                "|w| {} vs a {}",
                wi.abs(),
                ai
            );
        }
    }

    #[test]
    fn source_hash_tracks_inputs() {
        let mesh = shapes::unit_right_triangle();
        let w1 = first_order_weights(&mesh, &[1.0, -1.0, 0.5]).unwrap();
        let w2 = first_order_weights(&mesh, &[1.0, -1.0, 0.5]).unwrap();
        let w3 = first_order_weights(&mesh, &[1.0, -1.0, 0.6]).unwrap();
        assert_eq!(w1.source_hash(), w2.source_hash());
        assert_ne!(w1.source_hash(), w3.source_hash());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn homogeneity_and_sign_flip(values in proptest::collection::vec(-10.0f64..10.0, 42),
                                     alpha in -4.0f64..4.0) {
            let mesh = shapes::icosphere(1.0, 1);
            let areas = mesh.vertex_cell_areas(AreaScheme::Barycentric);
            let scaled: Vec<f64> = values.iter().map(|v| alpha * v).collect();
            let flipped: Vec<f64> = values.iter().map(|v| -v).collect();

            let n0 = norm_naive(&values);
            let nz = norm_zeroth(&values, &areas).unwrap();
            let nf = norm_first(&mesh, &values).unwrap();
            prop_assert!(nf >= 0.0);

            prop_assert!((norm_naive(&scaled) - alpha.abs() * n0).abs() <= 1e-12 * n0.max(1.0));
            prop_assert!((norm_zeroth(&scaled, &areas).unwrap() - alpha.abs() * nz).abs() <= 1e-12 * nz.max(1.0));
            prop_assert!((norm_first(&mesh, &scaled).unwrap() - alpha.abs() * nf).abs() <= 1e-11 * nf.max(1.0));

            prop_assert_eq!(norm_naive(&flipped), n0);
            prop_assert_eq!(norm_zeroth(&flipped, &areas).unwrap(), nz);
            prop_assert!((norm_first(&mesh, &flipped).unwrap() - nf).abs() <= 1e-12 * nf.max(1.0));

            let w = first_order_weights(&mesh, &values).unwrap();
            let wf = first_order_weights(&mesh, &flipped).unwrap();
            for (a, b) in w.weights().iter().zip(wf.weights()) {
                prop_assert!((a + b).abs() <= 1e-15);
            }
        }
    }
}
