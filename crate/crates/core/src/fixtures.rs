//! Built-in test structures.
//!
//! - [`star_mesh`]: six triangles, five basis functions, `C2v`. Its basis
//!   numbering and orientation reproduce the classic five-function example used
//!   to illustrate symmetry adaptation; port label `n` sits on basis `n`.
//! - [`rim_mesh`]: a flat rectangular rim, outer size `2L × L`, strip width
//!   `L/10`, `C2v`. Fifteen candidate port edges run through the first quadrant
//!   from the yz mirror plane (label 1) around the corner to the xz mirror plane
//!   (label 15).
//! - [`strip_dipole_mesh`]: a thin centre-fed strip along x.
//! - [`pinwheel_mesh`]: a square plate whose diagonals break every mirror,
//!   leaving `C4`.

use std::collections::HashMap;

use crate::geometry::{PortEdge, TriMesh};
use crate::Vec3;

pub fn star_mesh() -> TriMesh {
    let t = 1.2;
    let vertices = vec![
        Vec3::new(0.0, 1.0, 0.0),  // 0: north
        Vec3::new(1.0, 0.0, 0.0),  // 1: east
        Vec3::new(-1.0, 0.0, 0.0), // 2: west
        Vec3::new(0.0, -1.0, 0.0), // 3: south
        Vec3::new(t, t, 0.0),
        Vec3::new(-t, t, 0.0),
        Vec3::new(t, -t, 0.0),
        Vec3::new(-t, -t, 0.0),
    ];
    // triangle order fixes the plus/minus orientation of every function
    let triangles = vec![[0, 5, 2], [1, 0, 2], [1, 4, 0], [2, 7, 3], [2, 3, 1], [3, 6, 1]];
    let ports = [[0, 1], [0, 2], [1, 2], [1, 3], [2, 3]]
        .iter()
        .enumerate()
        .map(|(i, &vertices)| PortEdge { label: i + 1, vertices })
        .collect();
    TriMesh::new(vertices, triangles, ports).expect("star fixture is valid")
}

/// Rim dimensions and discretisation.
#[derive(Debug, Clone, Copy)]
pub struct RimParams {
    /// Outer extent along x (`2L`).
    pub long: f64,
    /// Outer extent along y (`L`).
    pub short: f64,
    /// Strip width (`L/10`).
    pub width: f64,
    /// Quads along the straight part of the half long side.
    pub long_segments: usize,
    /// Quads along the straight part of the half short side.
    pub short_segments: usize,
}

impl Default for RimParams {
    fn default() -> Self {
        RimParams { long: 2.0, short: 1.0, width: 0.1, long_segments: 18, short_segments: 8 }
    }
}

pub fn rim_mesh() -> TriMesh {
    rim_mesh_with(RimParams::default())
}

/// Build the rim quadrant `x, y >= 0` and mirror it into the other three.
///
/// Ports: labels `1..=n_long/2+1` on every other cut of the long side starting
/// at `x = 0`, then every other cut of the short side ending at `y = 0`.
/// Segment counts must be even.
pub fn rim_mesh_with(p: RimParams) -> TriMesh {
    assert!(p.long_segments.is_multiple_of(2) && p.short_segments.is_multiple_of(2), "segment counts must be even");
    let (hx, hy, w) = (p.long / 2.0, p.short / 2.0, p.width);
    let mut q = Quadrant::default();

    let top: Vec<(usize, usize)> = (0..=p.long_segments)
        .map(|i| {
            let x = (hx - w) * i as f64 / p.long_segments as f64;
            (q.vertex(x, hy - w), q.vertex(x, hy))
        })
        .collect();
    let side: Vec<(usize, usize)> = (0..=p.short_segments)
        .map(|j| {
            let y = (hy - w) * (1.0 - j as f64 / p.short_segments as f64);
            (q.vertex(hx - w, y), q.vertex(hx, y))
        })
        .collect();

    for win in top.windows(2) {
        let ((i0, o0), (i1, o1)) = (win[0], win[1]);
        q.quad(i0, i1, o1, o0);
    }
    // corner square, split along its diagonal through the outer corner
    let corner = q.vertex(hx, hy);
    let (ci, _) = top[p.long_segments];
    q.tris.push([ci, side[0].1, corner]);
    q.tris.push([ci, corner, top[p.long_segments].1]);
    for win in side.windows(2) {
        let ((i0, o0), (i1, o1)) = (win[0], win[1]);
        q.quad(i0, o0, o1, i1);
    }

    let mut ports = Vec::new();
    for i in (0..=p.long_segments).step_by(2) {
        ports.push([top[i].0, top[i].1]);
    }
    for j in (0..=p.short_segments).step_by(2) {
        ports.push([side[j].0, side[j].1]);
    }
    q.mirror_c2v(ports)
}

/// Thin strip of `length` × `width` along x, one element across, centre-fed at
/// the cut `x = 0` (port label 1). Uniform diagonals make it `C2` symmetric.
/// `segments` must be even.
pub fn strip_dipole_mesh(length: f64, width: f64, segments: usize) -> TriMesh {
    assert!(segments.is_multiple_of(2) && segments >= 2);
    let mut verts = Vec::new();
    for i in 0..=segments {
        let x = -length / 2.0 + length * i as f64 / segments as f64;
        verts.push(Vec3::new(x, -width / 2.0, 0.0));
        verts.push(Vec3::new(x, width / 2.0, 0.0));
    }
    let mut tris = Vec::new();
    for i in 0..segments {
        let (b0, t0, b1, t1) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
        tris.push([b0, b1, t1]);
        tris.push([b0, t1, t0]);
    }
    let c = segments / 2;
    let ports = vec![PortEdge { label: 1, vertices: [2 * c, 2 * c + 1] }];
    TriMesh::new(verts, tris, ports).expect("dipole fixture is valid")
}

/// Square plate `[-1, 1]²`, 2 × 2 quads per quadrant, four rotated copies.
pub fn pinwheel_mesh() -> TriMesh {
    let mut q = Quadrant::default();
    let h = 0.5;
    // diagonal choice per cell, chosen so that no mirror maps the pattern onto itself
    let main = [[true, false], [true, false]];
    for (i, column) in main.iter().enumerate() {
        for (j, &diagonal) in column.iter().enumerate() {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let a = q.vertex(x, y);
            let b = q.vertex(x + h, y);
            let c = q.vertex(x + h, y + h);
            let d = q.vertex(x, y + h);
            if diagonal {
                q.quad(a, b, c, d);
            } else {
                q.quad(b, c, d, a);
            }
        }
    }
    q.rotate_c4()
}

#[derive(Default)]
struct Quadrant {
    verts: Vec<Vec3>,
    tris: Vec<[usize; 3]>,
}

impl Quadrant {
    fn vertex(&mut self, x: f64, y: f64) -> usize {
        let p = Vec3::new(x, y, 0.0);
        if let Some(i) = self.verts.iter().position(|v| (v - p).norm() < 1e-12) {
            return i;
        }
        self.verts.push(p);
        self.verts.len() - 1
    }

    fn quad(&mut self, a: usize, b: usize, c: usize, d: usize) {
        self.tris.push([a, b, c]);
        self.tris.push([a, c, d]);
    }

    /// Images under the four rotations about z.
    fn rotate_c4(self) -> TriMesh {
        let maps: Vec<fn(&Vec3) -> Vec3> =
            vec![|v| Vec3::new(v.x, v.y, v.z), |v| Vec3::new(-v.y, v.x, v.z), |v| Vec3::new(-v.x, -v.y, v.z), |v| {
                Vec3::new(v.y, -v.x, v.z)
            }];
        let (verts, tris, _) = self.images(&maps, |_| false);
        TriMesh::new(verts, tris, Vec::new()).expect("rotated fixture is valid")
    }

    /// Transformed copies with merged coincident vertices. `flips(k)` tells
    /// whether copy `k` reverses orientation. Also returns the vertex map of
    /// the first copy.
    fn images(
        &self,
        maps: &[fn(&Vec3) -> Vec3],
        flips: impl Fn(usize) -> bool,
    ) -> (Vec<Vec3>, Vec<[usize; 3]>, Vec<usize>) {
        let key = |v: &Vec3| ((v.x * 1e9).round() as i64, (v.y * 1e9).round() as i64, (v.z * 1e9).round() as i64);
        let mut index: HashMap<(i64, i64, i64), usize> = HashMap::new();
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        let mut first_map = Vec::new();
        for (k, f) in maps.iter().enumerate() {
            let map: Vec<usize> = self
                .verts
                .iter()
                .map(|v| {
                    let mut img = f(v);
                    // avoid negative zero in written files
                    img.x += 0.0;
                    img.y += 0.0;
                    *index.entry(key(&img)).or_insert_with(|| {
                        verts.push(img);
                        verts.len() - 1
                    })
                })
                .collect();
            for t in &self.tris {
                let mut m = t.map(|i| map[i]);
                if flips(k) {
                    m.swap(1, 2); // keep normals along +z
                }
                tris.push(m);
            }
            if k == 0 {
                first_map = map;
            }
        }
        (verts, tris, first_map)
    }

    /// Images under E, σyz, C2z, σxz with merged coincident vertices.
    fn mirror_c2v(self, ports: Vec<[usize; 2]>) -> TriMesh {
        let maps: Vec<fn(&Vec3) -> Vec3> =
            vec![|v| Vec3::new(v.x, v.y, v.z), |v| Vec3::new(-v.x, v.y, v.z), |v| Vec3::new(-v.x, -v.y, v.z), |v| {
                Vec3::new(v.x, -v.y, v.z)
            }];
        let (verts, tris, first_map) = self.images(&maps, |k| k % 2 == 1);
        let ports = ports
            .into_iter()
            .enumerate()
            .map(|(i, e)| PortEdge { label: i + 1, vertices: e.map(|v| first_map[v]) })
            .collect();
        TriMesh::new(verts, tris, ports).expect("mirrored fixture is valid")
    }
}
