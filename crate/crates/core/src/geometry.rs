//! Triangle meshes, RWG edge basis, symmetry mapping matrices and generator cells.
//!
//! Basis functions are flux-normalised RWG functions: on the plus triangle
//! `ψ_n(r) = (r - p⁺)/(2A⁺)`, on the minus triangle `ψ_n(r) = (p⁻ - r)/(2A⁻)`.
//! The net current crossing edge `n` equals the expansion coefficient `I_n`, and
//! a delta-gap of voltage `v` across the edge contributes `V_n = v`. Standard
//! RWG functions are these multiplied by the edge length.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use crate::point_group::{PointGroup, SymmetryOp};
use crate::{Error, RMatrix, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// Gmsh ASCII format 2.x. Triangles are element type 2; two-node lines
    /// (type 1) mark port edges, their first tag being the port label.
    Gmsh,
    /// Object File Format. Polygons other than triangles are rejected.
    Off,
}

impl MeshFormat {
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "msh" | "gmsh" => Ok(MeshFormat::Gmsh),
            "off" => Ok(MeshFormat::Off),
            other => Err(Error::Invalid(format!("unknown mesh format `{other}`"))),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        Self::from_tag(ext)
    }
}

/// A labelled mesh edge usable as a delta-gap port location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortEdge {
    pub label: usize,
    pub vertices: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub ports: Vec<PortEdge>,
    /// Characteristic length: radius of the origin-centred sphere enclosing the mesh.
    pub length: f64,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, ports: Vec<PortEdge>) -> Result<Self> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::Parse("mesh has no triangles".into()));
        }
        let length = circumscribing_radius(&vertices);
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Parse(format!("triangle {t} references a missing vertex")));
            }
            let area = tri_area(&vertices, tri);
            if !(area > 1e-12 * length * length) {
                return Err(Error::DegenerateTriangle(t));
            }
        }
        for p in &ports {
            if p.vertices.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Parse(format!("port {} references a missing vertex", p.label)));
            }
        }
        Ok(TriMesh { vertices, triangles, ports, length })
    }

    /// Radius `a` of the sphere about the origin that encloses the structure.
    ///
    /// Symmetric meshes are centred on the symmetry elements, which all pass
    /// through the origin, so this is the circumscribing sphere used for `ka`.
    pub fn circumscribing_radius(&self) -> f64 {
        self.length
    }
}

fn circumscribing_radius(vertices: &[Vec3]) -> f64 {
    vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn tri_area(vertices: &[Vec3], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|i| vertices[i]);
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub fn load_mesh(path: &Path, fmt: MeshFormat) -> Result<TriMesh> {
    let text = fs::read_to_string(path)?;
    parse_mesh(&text, fmt)
}

pub fn parse_mesh(text: &str, fmt: MeshFormat) -> Result<TriMesh> {
    match fmt {
        MeshFormat::Gmsh => parse_gmsh(text),
        MeshFormat::Off => parse_off(text),
    }
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {}: {msg}", line + 1))
}

fn parse_gmsh(text: &str) -> Result<TriMesh> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.iter().all(|l| l.trim().is_empty()) {
        return Err(Error::Parse("empty mesh file".into()));
    }
    let find = |tag: &str| lines.iter().position(|l| l.trim() == tag);
    if let Some(i) = find("$MeshFormat") {
        let version = lines.get(i + 1).and_then(|l| l.split_whitespace().next()).unwrap_or("");
        if !version.starts_with('2') {
            return Err(parse_err(i + 1, format!("unsupported Gmsh version `{version}`")));
        }
    }
    let nodes_at = find("$Nodes").ok_or_else(|| Error::Parse("missing $Nodes section".into()))?;
    let elems_at = find("$Elements").ok_or_else(|| Error::Parse("missing $Elements section".into()))?;

    let count = |at: usize| -> Result<usize> {
        lines.get(at + 1).and_then(|l| l.trim().parse().ok()).ok_or_else(|| parse_err(at + 1, "expected a count"))
    };

    let n_nodes = count(nodes_at)?;
    let mut vertices = Vec::with_capacity(n_nodes);
    let mut node_index = HashMap::with_capacity(n_nodes);
    for k in 0..n_nodes {
        let ln = nodes_at + 2 + k;
        let line = lines.get(ln).ok_or_else(|| parse_err(ln, "truncated $Nodes"))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 4 {
            return Err(parse_err(ln, "node needs id x y z"));
        }
        let id: i64 = f[0].parse().map_err(|_| parse_err(ln, "bad node id"))?;
        let mut xyz = [0.0; 3];
        for (c, s) in xyz.iter_mut().zip(&f[1..4]) {
            *c = s.parse().map_err(|_| parse_err(ln, format!("bad coordinate `{s}`")))?;
        }
        node_index.insert(id, vertices.len());
        vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }

    let n_elems = count(elems_at)?;
    let mut triangles = Vec::new();
    let mut ports = Vec::new();
    for k in 0..n_elems {
        let ln = elems_at + 2 + k;
        let line = lines.get(ln).ok_or_else(|| parse_err(ln, "truncated $Elements"))?;
        let f: Vec<i64> = line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| parse_err(ln, format!("bad integer `{s}`"))))
            .collect::<Result<_>>()?;
        if f.len() < 3 {
            return Err(parse_err(ln, "element line too short"));
        }
        let (ty, ntags) = (f[1], f[2] as usize);
        let nodes = f.get(3 + ntags..).ok_or_else(|| parse_err(ln, "element line too short"))?;
        let lookup = |id: &i64| node_index.get(id).copied().ok_or_else(|| parse_err(ln, format!("unknown node {id}")));
        match ty {
            2 if nodes.len() == 3 => {
                triangles.push([lookup(&nodes[0])?, lookup(&nodes[1])?, lookup(&nodes[2])?]);
            }
            1 if nodes.len() == 2 => {
                let label = if ntags > 0 { f[3] } else { f[0] };
                if label <= 0 {
                    return Err(parse_err(ln, "port labels must be positive"));
                }
                ports.push(PortEdge { label: label as usize, vertices: [lookup(&nodes[0])?, lookup(&nodes[1])?] });
            }
            // points and other element types carry no surface information
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles, ports)
}

fn parse_off(text: &str) -> Result<TriMesh> {
    let mut it = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = it.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
    let rest_of_header = header.strip_prefix("OFF").ok_or_else(|| parse_err(ln, "missing OFF header"))?;
    let counts_line = if rest_of_header.trim().is_empty() {
        it.next().ok_or_else(|| parse_err(ln, "missing counts"))?
    } else {
        (ln, rest_of_header.trim())
    };
    let counts: Vec<usize> = counts_line
        .1
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| parse_err(counts_line.0, "bad count")))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(parse_err(counts_line.0, "expected vertex and face counts"));
    }
    let mut vertices = Vec::with_capacity(counts[0]);
    for _ in 0..counts[0] {
        let (ln, l) = it.next().ok_or_else(|| Error::Parse("truncated vertex list".into()))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|s| s.parse().map_err(|_| parse_err(ln, "bad coordinate")))
            .collect::<Result<_>>()?;
        if c.len() != 3 {
            return Err(parse_err(ln, "vertex needs three coordinates"));
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut triangles = Vec::with_capacity(counts[1]);
    for _ in 0..counts[1] {
        let (ln, l) = it.next().ok_or_else(|| Error::Parse("truncated face list".into()))?;
        let f: Vec<usize> =
            l.split_whitespace().map(|s| s.parse().map_err(|_| parse_err(ln, "bad index"))).collect::<Result<_>>()?;
        if f.first() != Some(&3) || f.len() < 4 {
            return Err(parse_err(ln, "only triangular faces are supported"));
        }
        triangles.push([f[1], f[2], f[3]]);
    }
    TriMesh::new(vertices, triangles, Vec::new())
}

/// Write a mesh as Gmsh 2.2 ASCII, ports included as tagged line elements.
pub fn write_gmsh(mesh: &TriMesh) -> String {
    use std::fmt::Write;
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{} {:.17e} {:.17e} {:.17e}", i + 1, v.x, v.y, v.z);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.ports.len() + mesh.triangles.len());
    let mut id = 1;
    for p in &mesh.ports {
        let _ = writeln!(s, "{id} 1 2 {} {} {} {}", p.label, p.label, p.vertices[0] + 1, p.vertices[1] + 1);
        id += 1;
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "{id} 2 2 0 0 {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

/// Precomputed triangle geometry.
#[derive(Debug, Clone)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub points: [Vec3; 3],
    pub area: f64,
    pub normal: Vec3,
    pub centroid: Vec3,
    /// Longest edge.
    pub size: f64,
}

/// One RWG function: the interior edge it lives on and its two triangles.
#[derive(Debug, Clone)]
pub struct EdgeBasis {
    /// Edge end points, sorted ascending.
    pub edge: [usize; 2],
    pub plus: usize,
    pub minus: usize,
    /// Vertex of `plus` opposite the edge.
    pub free_plus: usize,
    pub free_minus: usize,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct EdgeBasisSet {
    pub mesh: TriMesh,
    pub triangles: Vec<Triangle>,
    pub functions: Vec<EdgeBasis>,
    edge_lookup: HashMap<[usize; 2], usize>,
}

impl EdgeBasisSet {
    /// Number of unknowns `N_u`.
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Basis index living on the edge `(a, b)`.
    pub fn index_of_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&sorted(a, b)).copied()
    }

    /// Basis index for the mesh port with the given label.
    pub fn port_index(&self, label: usize) -> Result<usize> {
        let p = self.mesh.ports.iter().find(|p| p.label == label).ok_or(Error::InvalidPosition(label))?;
        self.index_of_edge(p.vertices[0], p.vertices[1]).ok_or(Error::InvalidPosition(label))
    }

    /// Port labels of the mesh, ascending.
    pub fn port_labels(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.mesh.ports.iter().map(|p| p.label).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Basis indices of labelled ports that resolve to an interior edge.
    pub fn port_indices(&self) -> Vec<usize> {
        self.port_labels().into_iter().filter_map(|l| self.port_index(l).ok()).collect()
    }

    /// Radius of the circumscribing sphere (meters).
    pub fn radius(&self) -> f64 {
        self.mesh.circumscribing_radius()
    }

    /// For triangle `t`, the list of `(basis index, sign, free vertex)` supported on it.
    pub fn triangle_functions(&self) -> Vec<Vec<(usize, f64, usize)>> {
        let mut out = vec![Vec::new(); self.triangles.len()];
        for (n, f) in self.functions.iter().enumerate() {
            out[f.plus].push((n, 1.0, f.free_plus));
            out[f.minus].push((n, -1.0, f.free_minus));
        }
        out
    }
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// One basis function per interior edge, numbered by the sorted vertex pair of
/// the edge; the plus triangle is the one with the smaller triangle index.
pub fn build_edge_basis(mesh: &TriMesh) -> Result<EdgeBasisSet> {
    let triangles: Vec<Triangle> = mesh
        .triangles
        .iter()
        .map(|&t| {
            let points = t.map(|i| mesh.vertices[i]);
            let cross = (points[1] - points[0]).cross(&(points[2] - points[0]));
            let area = 0.5 * cross.norm();
            let size =
                [(0, 1), (1, 2), (2, 0)].iter().map(|&(a, b)| (points[a] - points[b]).norm()).fold(0.0, f64::max);
            Triangle {
                vertices: t,
                points,
                area,
                normal: cross / (2.0 * area),
                centroid: (points[0] + points[1] + points[2]) / 3.0,
                size,
            }
        })
        .collect();

    let mut edges: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
    for (ti, t) in mesh.triangles.iter().enumerate() {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.entry(sorted(a, b)).or_default().push(ti);
        }
    }

    let mut functions = Vec::new();
    let mut edge_lookup = HashMap::new();
    for (edge, tris) in edges {
        match tris.len() {
            1 => continue,
            2 => {}
            k => return Err(Error::NonManifoldEdge(edge[0], edge[1], k)),
        }
        let (plus, minus) = (tris[0].min(tris[1]), tris[0].max(tris[1]));
        let free =
            |t: usize| *mesh.triangles[t].iter().find(|v| !edge.contains(v)).expect("triangle has a free vertex");
        edge_lookup.insert(edge, functions.len());
        functions.push(EdgeBasis {
            edge,
            plus,
            minus,
            free_plus: free(plus),
            free_minus: free(minus),
            length: (mesh.vertices[edge[0]] - mesh.vertices[edge[1]]).norm(),
        });
    }
    Ok(EdgeBasisSet { mesh: mesh.clone(), triangles, functions, edge_lookup })
}

/// Signed permutation `C(R)`: column `n` has its single nonzero `sign` in row `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingMatrix {
    pub op: String,
    /// `(target row, sign)` per column.
    pub columns: Vec<(usize, i8)>,
}

impl MappingMatrix {
    pub fn identity(n: usize) -> Self {
        MappingMatrix { op: "E".into(), columns: (0..n).map(|i| (i, 1)).collect() }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Dense integer matrix.
    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        let n = self.len();
        let mut m = vec![vec![0i8; n]; n];
        for (col, &(row, s)) in self.columns.iter().enumerate() {
            m[row][col] = s;
        }
        m
    }

    pub fn to_real(&self) -> RMatrix {
        let n = self.len();
        let mut m = RMatrix::zeros(n, n);
        for (col, &(row, s)) in self.columns.iter().enumerate() {
            m[(row, col)] = s as f64;
        }
        m
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &MappingMatrix) -> MappingMatrix {
        let columns = other
            .columns
            .iter()
            .map(|&(mid, s1)| {
                let (row, s2) = self.columns[mid];
                (row, s1 * s2)
            })
            .collect();
        MappingMatrix { op: format!("{}*{}", self.op, other.op), columns }
    }

    /// `C(R) x`.
    pub fn apply<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Neg<Output = T>,
    {
        let mut y = vec![T::default(); x.len()];
        for (col, &(row, s)) in self.columns.iter().enumerate() {
            y[row] = if s > 0 { x[col] } else { -x[col] };
        }
        y
    }

    /// Coordinate list `(row, col, sign)`, sorted by row.
    pub fn coo(&self) -> Vec<(usize, usize, i8)> {
        let mut v: Vec<_> = self.columns.iter().enumerate().map(|(c, &(r, s))| (r, c, s)).collect();
        v.sort_unstable();
        v
    }
}

/// Default vertex-matching tolerance: `1e-6 · L`.
pub fn default_tolerance(basis: &EdgeBasisSet) -> f64 {
    1e-6 * basis.mesh.length
}

pub fn build_mapping_matrix(basis: &EdgeBasisSet, op: &SymmetryOp, tol: f64) -> Result<MappingMatrix> {
    let mesh = &basis.mesh;
    let broken = || Error::SymmetryBroken(op.label.clone());
    let q = op.matrix();

    // vertex images via a sort on x to avoid the quadratic scan
    let mut order: Vec<usize> = (0..mesh.vertices.len()).collect();
    order.sort_by(|&a, &b| mesh.vertices[a].x.total_cmp(&mesh.vertices[b].x));
    let xs: Vec<f64> = order.iter().map(|&i| mesh.vertices[i].x).collect();
    let find = |p: Vec3| -> Option<usize> {
        let start = xs.partition_point(|&x| x < p.x - tol);
        order[start..]
            .iter()
            .take_while(|&&i| mesh.vertices[i].x <= p.x + tol)
            .find(|&&i| (mesh.vertices[i] - p).norm() <= tol)
            .copied()
    };
    let vmap: Vec<usize> = mesh.vertices.iter().map(|v| find(q * v).ok_or_else(broken)).collect::<Result<_>>()?;

    let mut tri_lookup: HashMap<[usize; 3], usize> = HashMap::new();
    for (i, t) in mesh.triangles.iter().enumerate() {
        let mut k = *t;
        k.sort_unstable();
        tri_lookup.insert(k, i);
    }
    let tri_image = |t: usize| -> Option<usize> {
        let mut k = mesh.triangles[t].map(|v| vmap[v]);
        k.sort_unstable();
        tri_lookup.get(&k).copied()
    };

    let columns = basis
        .functions
        .iter()
        .map(|f| {
            let target = basis.index_of_edge(vmap[f.edge[0]], vmap[f.edge[1]]).ok_or_else(broken)?;
            let img_plus = tri_image(f.plus).ok_or_else(broken)?;
            let g = &basis.functions[target];
            let sign = if img_plus == g.plus {
                1
            } else if img_plus == g.minus {
                -1
            } else {
                return Err(broken());
            };
            Ok((target, sign))
        })
        .collect::<Result<_>>()?;
    Ok(MappingMatrix { op: op.label.clone(), columns })
}

/// Mapping matrices for every operation of the group, in group order.
pub fn build_mapping_matrices(basis: &EdgeBasisSet, group: &PointGroup, tol: f64) -> Result<Vec<MappingMatrix>> {
    group.ops.iter().map(|op| build_mapping_matrix(basis, op, tol)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorCell {
    /// Representatives of orbits of full size `g`.
    pub interior: Vec<usize>,
    /// Representatives of orbits fixed (up to sign) by some non-identity operation.
    pub boundary: Vec<usize>,
    /// Every other index: images of the representatives.
    pub replicated: Vec<usize>,
    /// All orbits, each sorted, listed by representative.
    pub orbits: Vec<Vec<usize>>,
}

impl GeneratorCell {
    pub fn contains(&self, idx: usize) -> bool {
        self.interior.contains(&idx) || self.boundary.contains(&idx)
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.boundary.contains(&idx)
    }

    pub fn orbit_of(&self, idx: usize) -> Option<&Vec<usize>> {
        self.orbits.iter().find(|o| o.contains(&idx))
    }
}

/// Partition basis indices into orbits. Orbit representatives are the
/// smallest index unless an index from `preferred` lies in the orbit.
pub fn find_generator_cell(maps: &[MappingMatrix], preferred: &[usize]) -> GeneratorCell {
    let n = maps.first().map_or(0, MappingMatrix::len);
    let g = maps.len();
    let mut seen = vec![false; n];
    let mut cell = GeneratorCell { interior: vec![], boundary: vec![], replicated: vec![], orbits: vec![] };
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut orbit: Vec<usize> = maps.iter().map(|m| m.columns[start].0).collect();
        orbit.sort_unstable();
        orbit.dedup();
        for &i in &orbit {
            seen[i] = true;
        }
        let rep = preferred.iter().copied().find(|p| orbit.contains(p)).unwrap_or(orbit[0]);
        if orbit.len() == g {
            cell.interior.push(rep);
        } else {
            cell.boundary.push(rep);
        }
        cell.replicated.extend(orbit.iter().copied().filter(|&i| i != rep));
        cell.orbits.push(orbit);
    }
    cell.replicated.sort_unstable();
    cell
}
