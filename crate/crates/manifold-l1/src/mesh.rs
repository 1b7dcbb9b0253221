//! Triangle mesh representation and ingestion.
//!
//! A [`TriangleMesh`] owns vertices, faces, precomputed face areas and
//! per-vertex incidence rings. It is immutable after construction and safe
//! to share read-only across threads. Meshes with boundary or non-manifold
//! edges are accepted; all downstream formulas are per-triangle sums.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::fnv1a;

/// Relative tolerance for degenerate faces: a face whose area is at most
/// `DEGENERATE_TOL` times the squared bounding-box diagonal is rejected.
/// Degenerate faces are a hard error rather than being dropped, since a
/// silent drop would change every area-weighted quantity.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    Auto,
}

/// Vertex cell-area scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaScheme {
    /// One third of each incident face area. Exactly partitions the surface.
    Barycentric,
    /// Voronoi cell areas inside non-obtuse triangles, barycentric thirds
    /// inside obtuse ones. Also partitions the surface exactly per triangle.
    MixedVoronoi,
}

#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    face_areas: Vec<f64>,
    vertex_rings: Vec<Vec<usize>>,
    geometry_hash: u64,
}

/// Per-vertex cell areas together with the scheme that produced them.
#[derive(Clone, Debug)]
pub struct CellAreaVector {
    areas: Vec<f64>,
    scheme: AreaScheme,
}

impl CellAreaVector {
    /// Wrap externally computed positive areas. Useful for synthetic
    /// problems that have no underlying mesh.
    pub fn from_areas(areas: Vec<f64>, scheme: AreaScheme) -> Result<Self> {
        if areas.is_empty() {
            return Err(Error::InvalidMesh("empty cell area vector".into()));
        }
        for (i, &a) in areas.iter().enumerate() {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "cell area {i} is {a}, expected a positive finite value"
                )));
            }
        }
        Ok(Self { areas, scheme })
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn scheme(&self) -> AreaScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.areas.iter().sum()
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn triangle_area(p0: [f64; 3], p1: [f64; 3], p2: [f64; 3]) -> f64 {
    0.5 * norm(cross(sub(p1, p0), sub(p2, p0)))
}

impl TriangleMesh {
    /// Build a mesh from raw vertices and triangle indices, validating
    /// indices, face areas and vertex incidence.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if n == 0 {
            return Err(Error::InvalidMesh("mesh has no vertices".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMesh(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }
        for (f, face) in faces.iter().enumerate() {
            for &idx in face {
                if idx >= n {
                    return Err(Error::IndexOutOfRange {
                        face: f,
                        index: idx,
                        count: n,
                    });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {f} repeats a vertex index: {face:?}"
                )));
            }
        }

        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &vertices {
            for c in 0..3 {
                lo[c] = lo[c].min(v[c]);
                hi[c] = hi[c].max(v[c]);
            }
        }
        let diag_sq = (0..3)
            .map(|c| (hi[c] - lo[c]) * (hi[c] - lo[c]))
            .sum::<f64>();
        let tol = DEGENERATE_TOL * diag_sq;

        let mut face_areas = Vec::with_capacity(faces.len());
        for (f, face) in faces.iter().enumerate() {
            let area = triangle_area(vertices[face[0]], vertices[face[1]], vertices[face[2]]);
            if !(area > tol) {
                return Err(Error::DegenerateFace { face: f, area, tol });
            }
            face_areas.push(area);
        }

        let mut vertex_rings = vec![Vec::new(); n];
        for (f, face) in faces.iter().enumerate() {
            for &idx in face {
                vertex_rings[idx].push(f);
            }
        }
        for (i, ring) in vertex_rings.iter().enumerate() {
            if ring.is_empty() {
                return Err(Error::InvalidMesh(format!(
                    "vertex {i} is not referenced by any face; remove unused vertices before loading"
                )));
            }
        }

        let geometry_hash = Self::hash_geometry(&vertices, &faces);
        Ok(Self {
            vertices,
            faces,
            face_areas,
            vertex_rings,
            geometry_hash,
        })
    }

    fn hash_geometry(vertices: &[[f64; 3]], faces: &[[usize; 3]]) -> u64 {
        let mut bytes = Vec::with_capacity(16 + vertices.len() * 24 + faces.len() * 24);
        bytes.extend((vertices.len() as u64).to_le_bytes());
        bytes.extend((faces.len() as u64).to_le_bytes());
        for v in vertices {
            for c in v {
                bytes.extend(c.to_bits().to_le_bytes());
            }
        }
        for f in faces {
            for &idx in f {
                bytes.extend((idx as u64).to_le_bytes());
            }
        }
        fnv1a(bytes)
    }

    /// Load a mesh from an OFF or OBJ file. `MeshFormat::Auto` picks by
    /// file extension and falls back to content sniffing.
    pub fn load(path: impl AsRef<Path>, format: MeshFormat) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let format = match format {
            MeshFormat::Auto => {
                let ext = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .map(|e| e.to_ascii_lowercase());
                match ext.as_deref() {
                    Some("off") => MeshFormat::Off,
                    Some("obj") => MeshFormat::Obj,
                    _ => {
                        if text.trim_start().starts_with("OFF") {
                            MeshFormat::Off
                        } else {
                            MeshFormat::Obj
                        }
                    }
                }
            }
            f => f,
        };
        match format {
            MeshFormat::Off => Self::parse_off(&text),
            MeshFormat::Obj => Self::parse_obj(&text),
            MeshFormat::Auto => unreachable!(),
        }
    }

    /// Parse ASCII OFF. The counts may follow "OFF" on the same line or sit
    /// on the next one. Per-face trailing fields (colors) are ignored, and
    /// polygons with more than three vertices are fan-triangulated at their
    /// first vertex.
    pub fn parse_off(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| match l.find('#') {
                Some(p) => &l[..p],
                None => l,
            })
            .filter(|l| !l.trim().is_empty());

        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty OFF file".into()))?;
        let mut header_tokens = header.split_whitespace();
        let magic = header_tokens.next().unwrap_or("");
        if magic != "OFF" {
            return Err(Error::Parse(format!(
                "expected OFF header, found {magic:?}"
            )));
        }
        let rest: Vec<&str> = header_tokens.collect();
        let counts: Vec<&str> = if rest.is_empty() {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("OFF file ends before the counts line".into()))?;
            line.split_whitespace().collect()
        } else {
            rest
        };
        if counts.len() < 2 {
            return Err(Error::Parse(format!("bad OFF counts line: {counts:?}")));
        }
        let nv: usize = counts[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad vertex count {:?}", counts[0])))?;
        let nf: usize = counts[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad face count {:?}", counts[1])))?;

        let mut vertices = Vec::with_capacity(nv);
        for i in 0..nv {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("OFF file ends at vertex {i} of {nv}")))?;
            let mut it = line.split_whitespace();
            let mut v = [0.0; 3];
            for c in v.iter_mut() {
                let tok = it
                    .next()
                    .ok_or_else(|| Error::Parse(format!("vertex {i}: expected 3 coordinates")))?;
                *c = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("vertex {i}: bad coordinate {tok:?}")))?;
            }
            vertices.push(v);
        }

        let mut faces = Vec::with_capacity(nf);
        for f in 0..nf {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("OFF file ends at face {f} of {nf}")))?;
            let mut it = line.split_whitespace();
            let count: usize = it
                .next()
                .ok_or_else(|| Error::Parse(format!("face {f}: missing vertex count")))?
                .parse()
                .map_err(|_| Error::Parse(format!("face {f}: bad vertex count")))?;
            if count < 3 {
                return Err(Error::Parse(format!(
                    "face {f}: polygon with {count} vertices"
                )));
            }
            let mut poly = Vec::with_capacity(count);
            for k in 0..count {
                let tok = it.next().ok_or_else(|| {
                    Error::Parse(format!("face {f}: expected {count} indices, found {k}"))
                })?;
                let idx: usize = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("face {f}: bad index {tok:?}")))?;
                poly.push(idx);
            }
            fan_triangulate(&poly, &mut faces);
        }
        Self::new(vertices, faces)
    }

    /// Parse Wavefront OBJ ("v" and "f" records). Indices are 1-based;
    /// negative (relative) indices are not supported. Texture and normal
    /// fields in face entries are parsed and ignored.
    pub fn parse_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let mut v = [0.0; 3];
                    for c in v.iter_mut() {
                        let tok = it.next().ok_or_else(|| {
                            Error::Parse(format!(
                                "line {}: vertex with fewer than 3 coordinates",
                                lineno + 1
                            ))
                        })?;
                        *c = tok.parse().map_err(|_| {
                            Error::Parse(format!("line {}: bad coordinate {tok:?}", lineno + 1))
                        })?;
                    }
                    vertices.push(v);
                }
                Some("f") => {
                    let mut poly = Vec::new();
                    for entry in it {
                        let first = entry.split('/').next().unwrap_or("");
                        let idx: i64 = first.parse().map_err(|_| {
                            Error::Parse(format!("line {}: bad face index {entry:?}", lineno + 1))
                        })?;
                        if idx < 1 {
                            return Err(Error::Parse(format!(
                                "line {}: non-positive face index {idx} (negative indices unsupported)",
                                lineno + 1
                            )));
                        }
                        poly.push((idx - 1) as usize);
                    }
                    if poly.len() < 3 {
                        return Err(Error::Parse(format!(
                            "line {}: face with {} vertices",
                            lineno + 1,
                            poly.len()
                        )));
                    }
                    fan_triangulate(&poly, &mut faces);
                }
                _ => {}
            }
        }
        Self::new(vertices, faces)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// Face indices incident to vertex `i`, in ascending face order.
    pub fn vertex_ring(&self, i: usize) -> &[usize] {
        &self.vertex_rings[i]
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    pub fn geometry_hash(&self) -> u64 {
        self.geometry_hash
    }

    pub fn average_edge_length(&self) -> f64 {
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(self.faces.len() * 3);
        for face in &self.faces {
            for (a, b) in [(face[0], face[1]), (face[1], face[2]), (face[2], face[0])] {
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let total: f64 = edges
            .iter()
            .map(|&(a, b)| norm(sub(self.vertices[b], self.vertices[a])))
            .sum();
        total / edges.len() as f64
    }

    /// Per-vertex cell areas under the requested scheme. Both schemes
    /// partition each triangle exactly, so the entries sum to the total
    /// surface area.
    pub fn vertex_cell_areas(&self, scheme: AreaScheme) -> CellAreaVector {
        let n = self.vertices.len();
        let mut areas = vec![0.0; n];
        match scheme {
            AreaScheme::Barycentric => {
                for (f, face) in self.faces.iter().enumerate() {
                    let third = self.face_areas[f] / 3.0;
                    for &v in face {
                        areas[v] += third;
                    }
                }
            }
            AreaScheme::MixedVoronoi => {
                for (f, face) in self.faces.iter().enumerate() {
                    let p = [
                        self.vertices[face[0]],
                        self.vertices[face[1]],
                        self.vertices[face[2]],
                    ];
                    // cot at corner c, and squared length of the edge opposite c
                    let mut cots = [0.0; 3];
                    let mut obtuse = false;
                    for c in 0..3 {
                        let u = sub(p[(c + 1) % 3], p[c]);
                        let v = sub(p[(c + 2) % 3], p[c]);
                        let d = dot(u, v);
                        if d < 0.0 {
                            obtuse = true;
                        }
                        cots[c] = d / norm(cross(u, v));
                    }
                    if obtuse {
                        let third = self.face_areas[f] / 3.0;
                        for &v in face {
                            areas[v] += third;
                        }
                    } else {
                        for c in 0..3 {
                            let j = (c + 1) % 3;
                            let k = (c + 2) % 3;
                            let e_cj = sub(p[j], p[c]);
                            let e_ck = sub(p[k], p[c]);
                            // Voronoi corner area at c: opposite-angle cotangents
                            // weight the two incident edges.
                            areas[face[c]] +=
                                (dot(e_cj, e_cj) * cots[k] + dot(e_ck, e_ck) * cots[j]) / 8.0;
                        }
                    }
                }
            }
        }
        CellAreaVector { areas, scheme }
    }

    /// Uniform 1-to-4 midpoint subdivision, repeated `levels` times.
    ///
    /// Original vertices keep their indices, so restriction of a fine vertex
    /// function to the coarse mesh is a prefix slice. The returned
    /// [`InterpolationMap`] prolongs coarse vertex functions to the fine mesh
    /// (midpoint values are edge-endpoint averages, exact on piecewise-linear
    /// functions).
    pub fn midpoint_subdivide(&self, levels: usize) -> Result<(TriangleMesh, InterpolationMap)> {
        if levels == 0 {
            return Err(Error::InvalidOptions(
                "subdivision levels must be >= 1".into(),
            ));
        }
        let mut mesh = self.clone();
        let mut stages = Vec::with_capacity(levels);
        for _ in 0..levels {
            let (next, stage) = mesh.subdivide_once()?;
            stages.push(stage);
            mesh = next;
        }
        Ok((mesh, InterpolationMap { stages }))
    }

    fn subdivide_once(&self) -> Result<(TriangleMesh, InterpolationStage)> {
        let n = self.vertices.len();
        let mut vertices = self.vertices.clone();
        let mut midpoint_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint_parents = Vec::new();
        let mut faces = Vec::with_capacity(self.faces.len() * 4);

        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint_of.entry(key).or_insert_with(|| {
                let pa = vertices[key.0];
                let pb = vertices[key.1];
                vertices.push([
                    0.5 * (pa[0] + pb[0]),
                    0.5 * (pa[1] + pb[1]),
                    0.5 * (pa[2] + pb[2]),
                ]);
                midpoint_parents.push(key);
                vertices.len() - 1
            })
        };

        for face in &self.faces {
            let [v0, v1, v2] = *face;
            let m01 = midpoint(v0, v1, &mut vertices);
            let m12 = midpoint(v1, v2, &mut vertices);
            let m20 = midpoint(v2, v0, &mut vertices);
            faces.push([v0, m01, m20]);
            faces.push([v1, m12, m01]);
            faces.push([v2, m20, m12]);
            faces.push([m01, m12, m20]);
        }

        let mesh = TriangleMesh::new(vertices, faces)?;
        Ok((
            mesh,
            InterpolationStage {
                coarse_len: n,
                midpoint_parents,
            },
        ))
    }
}

fn fan_triangulate(poly: &[usize], out: &mut Vec<[usize; 3]>) {
    for i in 1..poly.len() - 1 {
        out.push([poly[0], poly[i], poly[i + 1]]);
    }
}

#[derive(Clone, Debug)]
struct InterpolationStage {
    coarse_len: usize,
    /// Parents of vertex `coarse_len + e` at this stage.
    midpoint_parents: Vec<(usize, usize)>,
}

/// Linear transfer of vertex functions across one or more midpoint
/// subdivision levels.
#[derive(Clone, Debug)]
pub struct InterpolationMap {
    stages: Vec<InterpolationStage>,
}

impl InterpolationMap {
    pub fn coarse_len(&self) -> usize {
        self.stages[0].coarse_len
    }

    pub fn fine_len(&self) -> usize {
        let last = self.stages.last().unwrap();
        last.coarse_len + last.midpoint_parents.len()
    }

    /// Prolong a coarse vertex function to the fine mesh.
    pub fn prolong(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        if coarse.len() != self.coarse_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coarse_len(),
                got: coarse.len(),
            });
        }
        let mut values = coarse.to_vec();
        for stage in &self.stages {
            debug_assert_eq!(values.len(), stage.coarse_len);
            values.reserve(stage.midpoint_parents.len());
            for &(a, b) in &stage.midpoint_parents {
                let v = 0.5 * (values[a] + values[b]);
                values.push(v);
            }
        }
        Ok(values)
    }

    /// Restrict a fine vertex function to the coarse mesh by sampling at the
    /// original vertices (which keep their indices under subdivision).
    pub fn restrict(&self, fine: &[f64]) -> Result<Vec<f64>> {
        if fine.len() != self.fine_len() {
            return Err(Error::DimensionMismatch {
                expected: self.fine_len(),
                got: fine.len(),
            });
        }
        Ok(fine[..self.coarse_len()].to_vec())
    }
}
