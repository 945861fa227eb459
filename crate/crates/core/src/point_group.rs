//! Finite point groups, their irreducible representations and species bookkeeping.
//!
//! Supported: `C1`, `Cs`, `Ci`, `Cn` and `Cnv` for `2 <= n <= 8`.
//!
//! Conventions:
//! - the principal axis is `z`; rotations are counterclockwise by `2πk/n`;
//! - the vertical plane `σ_j` of `Cnv` contains `z` and makes the angle `jπ/n`
//!   with the x-axis, so `σ_0` is the xz plane (it fixes the x-axis);
//! - `Cs` uses the xz mirror;
//! - operations are stored identity first, then rotations by increasing angle,
//!   then reflections by increasing plane angle (inversion last, for `Ci`);
//! - two-dimensional irreps `E_m` of `Cnv` map a rotation by `θ` onto the 2×2
//!   rotation by `mθ` and the plane at angle `φ` onto the 2×2 reflection across
//!   the line at angle `mφ`;
//! - the non-real irreps of `Cn` (`n >= 3`) are kept as one-dimensional complex
//!   characters `exp(2πi·m·k/n)`, labelled `E{m}a` / `E{m}b` for `m` and `n-m`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix3;

use crate::{CMatrix, Error, Result, Vec3, C64};

const MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Identity,
    Rotation,
    Reflection,
    Inversion,
}

/// A proper or improper orthogonal transform of 3-space.
#[derive(Debug, Clone)]
pub struct SymmetryOp {
    pub kind: OpKind,
    /// Rotation axis, or reflection-plane normal. Unused for identity and inversion.
    pub axis: Vec3,
    /// Rotation angle in radians (zero for anything but rotations).
    pub angle: f64,
    pub label: String,
}

impl SymmetryOp {
    pub fn identity() -> Self {
        SymmetryOp { kind: OpKind::Identity, axis: Vec3::z(), angle: 0.0, label: "E".into() }
    }

    pub fn rotation_z(angle: f64, label: impl Into<String>) -> Self {
        SymmetryOp { kind: OpKind::Rotation, axis: Vec3::z(), angle, label: label.into() }
    }

    /// Reflection across the vertical plane containing `z` at angle `phi` from the x-axis.
    pub fn vertical_mirror(phi: f64, label: impl Into<String>) -> Self {
        // plane normal is perpendicular to the in-plane direction (cos φ, sin φ, 0)
        let axis = Vec3::new(-phi.sin(), phi.cos(), 0.0);
        SymmetryOp { kind: OpKind::Reflection, axis, angle: 0.0, label: label.into() }
    }

    pub fn inversion() -> Self {
        SymmetryOp { kind: OpKind::Inversion, axis: Vec3::z(), angle: 0.0, label: "i".into() }
    }

    /// The 3×3 spatial transform.
    pub fn matrix(&self) -> Matrix3<f64> {
        match self.kind {
            OpKind::Identity => Matrix3::identity(),
            OpKind::Inversion => -Matrix3::identity(),
            OpKind::Reflection => {
                let n = self.axis.normalize();
                Matrix3::identity() - 2.0 * n * n.transpose()
            }
            OpKind::Rotation => {
                let axis = nalgebra::Unit::new_normalize(self.axis);
                *nalgebra::Rotation3::from_axis_angle(&axis, self.angle).matrix()
            }
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.matrix() * p
    }
}

impl fmt::Display for SymmetryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Irreducible representation: one `dim × dim` matrix per group operation,
/// indexed like [`PointGroup::ops`].
#[derive(Debug, Clone)]
pub struct Irrep {
    pub label: String,
    pub dim: usize,
    pub matrices: Vec<CMatrix>,
}

impl Irrep {
    pub fn is_real(&self) -> bool {
        self.matrices.iter().all(|m| m.iter().all(|z| z.im.abs() < 1e-14))
    }
}

/// Species `(α, i)`: irrep index and zero-based row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Species {
    pub irrep: usize,
    pub row: usize,
}

#[derive(Debug, Clone)]
pub struct PointGroup {
    pub name: String,
    pub ops: Vec<SymmetryOp>,
    pub irreps: Vec<Irrep>,
    /// `table[a][b]` is the index of `ops[a] ∘ ops[b]` (apply `b` first).
    table: Vec<Vec<usize>>,
}

pub const SUPPORTED: &str = "C1, Cs, Ci, C2..C8, C2v..C8v";

/// Build a point group from its Schoenflies label.
pub fn build_group(name: &str) -> Result<PointGroup> {
    let unsupported = || Error::UnsupportedGroup(name.to_string());
    let (ops, irreps) = match name {
        "C1" => (vec![SymmetryOp::identity()], vec![one_dim("A", &[1.0])]),
        "Cs" => (
            vec![SymmetryOp::identity(), SymmetryOp::vertical_mirror(0.0, "sigma_xz")],
            vec![one_dim("A'", &[1.0, 1.0]), one_dim("A''", &[1.0, -1.0])],
        ),
        "Ci" => (
            vec![SymmetryOp::identity(), SymmetryOp::inversion()],
            vec![one_dim("Ag", &[1.0, 1.0]), one_dim("Au", &[1.0, -1.0])],
        ),
        _ => {
            let rest = name.strip_prefix('C').ok_or_else(unsupported)?;
            let (digits, vertical) = match rest.strip_suffix('v') {
                Some(d) => (d, true),
                None => (rest, false),
            };
            let n: usize = digits.parse().map_err(|_| unsupported())?;
            if !(2..=8).contains(&n) {
                return Err(unsupported());
            }
            if vertical {
                cnv(n)
            } else {
                cn(n)
            }
        }
    };
    PointGroup::new(name, ops, irreps)
}

fn one_dim(label: &str, values: &[f64]) -> Irrep {
    Irrep {
        label: label.into(),
        dim: 1,
        matrices: values.iter().map(|&v| CMatrix::from_element(1, 1, C64::new(v, 0.0))).collect(),
    }
}

fn rotation_label(k: usize, n: usize) -> String {
    let g = gcd(k, n);
    let (p, q) = (k / g, n / g);
    match (p, q) {
        (1, 2) => "C2z".to_string(),
        (1, q) => format!("C{q}"),
        (p, q) => format!("C{q}^{p}"),
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn rotations(n: usize) -> Vec<SymmetryOp> {
    let mut ops = vec![SymmetryOp::identity()];
    for k in 1..n {
        ops.push(SymmetryOp::rotation_z(2.0 * PI * k as f64 / n as f64, rotation_label(k, n)));
    }
    ops
}

fn mirror_label(j: usize, n: usize) -> String {
    if j == 0 {
        "sigma_xz".into()
    } else if 2 * j == n {
        "sigma_yz".into()
    } else {
        format!("sigma_v{j}")
    }
}

fn cn(n: usize) -> (Vec<SymmetryOp>, Vec<Irrep>) {
    let ops = rotations(n);
    let mut irreps = vec![one_dim("A", &vec![1.0; n])];
    if n.is_multiple_of(2) {
        let vals: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        irreps.push(one_dim("B", &vals));
    }
    for m in 1..=(n - 1) / 2 {
        for (suffix, mm) in [("a", m), ("b", n - m)] {
            let matrices = (0..n)
                .map(|k| {
                    let phase = 2.0 * PI * (mm * k) as f64 / n as f64;
                    CMatrix::from_element(1, 1, C64::from_polar(1.0, phase))
                })
                .collect();
            irreps.push(Irrep { label: format!("E{m}{suffix}"), dim: 1, matrices });
        }
    }
    (ops, irreps)
}

fn cnv(n: usize) -> (Vec<SymmetryOp>, Vec<Irrep>) {
    let mut ops = rotations(n);
    for j in 0..n {
        ops.push(SymmetryOp::vertical_mirror(PI * j as f64 / n as f64, mirror_label(j, n)));
    }
    let ones = vec![1.0; 2 * n];
    let mut a2 = vec![1.0; n];
    a2.extend(vec![-1.0; n]);
    let mut irreps = vec![one_dim("A1", &ones), one_dim("A2", &a2)];
    if n.is_multiple_of(2) {
        let alt = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut b1: Vec<f64> = (0..n).map(alt).collect();
        b1.extend((0..n).map(alt));
        let mut b2: Vec<f64> = (0..n).map(alt).collect();
        b2.extend((0..n).map(|j| -alt(j)));
        irreps.push(one_dim("B1", &b1));
        irreps.push(one_dim("B2", &b2));
    }
    let n_e = (n - 1) / 2;
    for m in 1..=n_e {
        let label = if n_e == 1 { "E".to_string() } else { format!("E{m}") };
        let mut matrices = Vec::with_capacity(2 * n);
        for k in 0..n {
            let t = 2.0 * PI * (m * k) as f64 / n as f64;
            matrices.push(real2(t.cos(), -t.sin(), t.sin(), t.cos()));
        }
        for j in 0..n {
            let t = 2.0 * PI * (m * j) as f64 / n as f64;
            matrices.push(real2(t.cos(), t.sin(), t.sin(), -t.cos()));
        }
        irreps.push(Irrep { label, dim: 2, matrices });
    }
    (ops, irreps)
}

fn real2(a: f64, b: f64, c: f64, d: f64) -> CMatrix {
    let r = |x: f64| C64::new(clean(x), 0.0);
    CMatrix::from_row_slice(2, 2, &[r(a), r(b), r(c), r(d)])
}

// trig of multiples of π/4 etc. leaves 1e-16 residue; snap those to exact values
fn clean(x: f64) -> f64 {
    for v in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        if (x - v).abs() < 1e-15 {
            return v;
        }
    }
    x
}

impl PointGroup {
    fn new(name: &str, ops: Vec<SymmetryOp>, irreps: Vec<Irrep>) -> Result<Self> {
        let mats: Vec<Matrix3<f64>> = ops.iter().map(SymmetryOp::matrix).collect();
        let mut table = vec![vec![0; ops.len()]; ops.len()];
        for (a, ma) in mats.iter().enumerate() {
            for (b, mb) in mats.iter().enumerate() {
                let prod = ma * mb;
                table[a][b] = mats
                    .iter()
                    .position(|m| (m - prod).abs().max() < MATCH_TOL)
                    .ok_or_else(|| Error::Invalid(format!("{name}: operation set is not closed")))?;
            }
        }
        Ok(PointGroup { name: name.to_string(), ops, irreps, table })
    }

    pub fn order(&self) -> usize {
        self.ops.len()
    }

    /// Index of `ops[a] ∘ ops[b]`.
    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        (0..self.order()).find(|&b| self.table[a][b] == 0).expect("group has inverses")
    }

    pub fn op_index(&self, label: &str) -> Result<usize> {
        self.ops.iter().position(|o| o.label == label).ok_or_else(|| Error::UnknownOp(label.to_string()))
    }

    pub fn irrep_index(&self, label: &str) -> Result<usize> {
        self.irreps.iter().position(|r| r.label == label).ok_or_else(|| Error::UnknownIrrep(label.to_string()))
    }

    pub fn irrep(&self, label: &str) -> Result<&Irrep> {
        Ok(&self.irreps[self.irrep_index(label)?])
    }

    /// True when every irrep has real matrices.
    pub fn is_real(&self) -> bool {
        self.irreps.iter().all(Irrep::is_real)
    }

    /// All species in canonical order (irreps in table order, rows ascending).
    pub fn species(&self) -> Vec<Species> {
        self.irreps
            .iter()
            .enumerate()
            .flat_map(|(irrep, r)| (0..r.dim).map(move |row| Species { irrep, row }))
            .collect()
    }

    pub fn species_label(&self, s: Species) -> String {
        let r = &self.irreps[s.irrep];
        format!("({},{})", r.label, s.row + 1)
    }

    /// Parses `"A1"` (row 1) or `"E,2"` / `"(E,2)"`.
    pub fn parse_species(&self, text: &str) -> Result<Species> {
        let t = text.trim().trim_start_matches('(').trim_end_matches(')');
        let (label, row) = match t.split_once(',') {
            Some((l, r)) => {
                let row: usize =
                    r.trim().parse().map_err(|_| Error::Invalid(format!("bad species row in `{text}`")))?;
                (l.trim(), row)
            }
            None => (t, 1),
        };
        let irrep = self.irrep_index(label)?;
        if row == 0 || row > self.irreps[irrep].dim {
            return Err(Error::Invalid(format!("species row {row} out of range for {label}")));
        }
        Ok(Species { irrep, row: row - 1 })
    }

    /// `χ^(α)(R) = trace D^(α)(R)`.
    pub fn character(&self, irrep: &str, op: &str) -> Result<C64> {
        let a = self.irrep_index(irrep)?;
        let r = self.op_index(op)?;
        Ok(self.irreps[a].matrices[r].trace())
    }

    /// Dual (contragredient) representation `(D^{-1})^T`.
    pub fn dual_rep(&self, irrep: &str, op: &str) -> Result<CMatrix> {
        let a = self.irrep_index(irrep)?;
        let r = self.op_index(op)?;
        Ok(self.dual_rep_at(a, r))
    }

    pub fn dual_rep_at(&self, irrep: usize, op: usize) -> CMatrix {
        // irreps are unitary: D^{-1} = D(R^{-1})
        self.irreps[irrep].matrices[self.inverse(op)].transpose()
    }

    /// `N_s = Σ_α g^(α)`.
    pub fn max_orthogonal_states(&self) -> usize {
        self.irreps.iter().map(|r| r.dim).sum()
    }

    /// `N_p = g`.
    pub fn min_ports(&self) -> usize {
        self.order()
    }
}

/// Every label accepted by [`build_group`].
pub fn supported_groups() -> Vec<String> {
    let mut v = vec!["C1".to_string(), "Cs".into(), "Ci".into()];
    v.extend((2..=8).map(|n| format!("C{n}")));
    v.extend((2..=8).map(|n| format!("C{n}v")));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_err(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn c2v_layout() {
        let g = build_group("C2v").unwrap();
        let labels: Vec<_> = g.ops.iter().map(|o| o.label.as_str()).collect();
        assert_eq!(labels, ["E", "C2z", "sigma_xz", "sigma_yz"]);
        let irreps: Vec<_> = g.irreps.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(irreps, ["A1", "A2", "B1", "B2"]);
    }

    #[test]
    fn c2v_character_table() {
        let g = build_group("C2v").unwrap();
        let table = [
            ("A1", [1.0, 1.0, 1.0, 1.0]),
            ("A2", [1.0, 1.0, -1.0, -1.0]),
            ("B1", [1.0, -1.0, 1.0, -1.0]),
            ("B2", [1.0, -1.0, -1.0, 1.0]),
        ];
        for (irrep, row) in table {
            for (op, want) in ["E", "C2z", "sigma_xz", "sigma_yz"].iter().zip(row) {
                assert_eq!(g.character(irrep, op).unwrap(), C64::new(want, 0.0), "{irrep} {op}");
            }
        }
    }

    #[test]
    fn unknown_labels() {
        let g = build_group("C2v").unwrap();
        assert!(matches!(g.character("E", "E"), Err(Error::UnknownIrrep(_))));
        assert!(matches!(g.character("A1", "C4"), Err(Error::UnknownOp(_))));
        assert!(matches!(build_group("D3h"), Err(Error::UnsupportedGroup(_))));
        assert!(matches!(build_group("C9v"), Err(Error::UnsupportedGroup(_))));
        assert!(matches!(build_group("C1v"), Err(Error::UnsupportedGroup(_))));
    }

    #[test]
    fn trivial_group() {
        let g = build_group("C1").unwrap();
        assert_eq!((g.order(), g.irreps.len()), (1, 1));
        assert_eq!(g.max_orthogonal_states(), 1);
        assert_eq!(g.min_ports(), 1);
    }

    #[test]
    fn c4v_counts_and_dual() {
        let g = build_group("C4v").unwrap();
        assert_eq!(g.order(), 8);
        let dims: Vec<_> = g.irreps.iter().map(|r| r.dim).collect();
        assert_eq!(dims, [1, 1, 1, 1, 2]);
        assert_eq!((g.max_orthogonal_states(), g.min_ports()), (6, 8));
        let id = g.dual_rep("E", "E").unwrap();
        assert!(mat_err(&id, &CMatrix::identity(2, 2)) < 1e-15);
        let c4 = g.dual_rep("E", "C4").unwrap();
        let want = real2(0.0, -1.0, 1.0, 0.0);
        assert!(mat_err(&c4, &want) < 1e-15);
    }

    #[test]
    fn identity_character_is_dimension() {
        for name in supported_groups() {
            let g = build_group(&name).unwrap();
            for r in &g.irreps {
                let chi = g.character(&r.label, "E").unwrap();
                assert_eq!(chi, C64::new(r.dim as f64, 0.0), "{name} {}", r.label);
            }
        }
    }

    #[test]
    fn every_group_satisfies_the_axioms() {
        for name in supported_groups() {
            let g = build_group(&name).unwrap();
            let n = g.order();
            // spatial transforms orthogonal and of finite order
            for op in &g.ops {
                let q = op.matrix();
                assert!((q.transpose() * q - Matrix3::identity()).abs().max() < 1e-12);
                let mut p = Matrix3::identity();
                let mut k = 0;
                loop {
                    p = q * p;
                    k += 1;
                    if (p - Matrix3::identity()).abs().max() < 1e-12 {
                        break;
                    }
                    assert!(k <= n, "{name}: {} has no finite order", op.label);
                }
            }
            // Burnside
            let burnside: usize = g.irreps.iter().map(|r| r.dim * r.dim).sum();
            assert_eq!(burnside, n, "{name}");
            // homomorphism
            for r in &g.irreps {
                for a in 0..n {
                    for b in 0..n {
                        let lhs = &r.matrices[g.compose(a, b)];
                        let rhs = &r.matrices[a] * &r.matrices[b];
                        assert!(mat_err(lhs, &rhs) < 1e-12, "{name} {}", r.label);
                    }
                }
            }
            // great orthogonality on diagonal entries
            for (ia, ra) in g.irreps.iter().enumerate() {
                for (ib, rb) in g.irreps.iter().enumerate() {
                    for i in 0..ra.dim {
                        for j in 0..rb.dim {
                            let s: C64 = (0..n).map(|k| ra.matrices[k][(i, i)].conj() * rb.matrices[k][(j, j)]).sum();
                            let want = if ia == ib && i == j { n as f64 / ra.dim as f64 } else { 0.0 };
                            assert!((s - want).norm() < 1e-12, "{name} {} {}", ra.label, rb.label);
                        }
                    }
                }
            }
            // dual rep equals (D^{-1})^T
            for (ia, r) in g.irreps.iter().enumerate() {
                for k in 0..n {
                    let inv = r.matrices[k].clone().try_inverse().unwrap();
                    assert!(mat_err(&g.dual_rep_at(ia, k), &inv.transpose()) < 1e-12);
                }
            }
            assert_eq!(g.max_orthogonal_states(), g.irreps.iter().map(|r| r.dim).sum::<usize>());
            assert_eq!(g.min_ports(), n);
        }
    }

    #[test]
    fn species_parse() {
        let g = build_group("C4v").unwrap();
        let s = g.parse_species("(E,2)").unwrap();
        assert_eq!(g.species_label(s), "(E,2)");
        assert_eq!(g.parse_species("A2").unwrap(), Species { irrep: 1, row: 0 });
        assert!(g.parse_species("E,3").is_err());
        assert_eq!(g.species().len(), 6);
    }
}
