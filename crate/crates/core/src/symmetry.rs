//! Symmetry adaptation, symmetry-adapted bases, block diagonalization and
//! species-resolved characteristic modes.
//!
//! The species projector is `P^(α,i) = (g^(α)/g) Σ_R d̃^(α)_ii(R) C(R)` with
//! the dual representation `d̃ = (D⁻¹)ᵀ`. Because `C` is an orthogonal
//! representation, every `P^(α,i)` is an orthogonal projector and projectors of
//! distinct species annihilate each other.

use crate::em::OperatorMatrix;
use crate::geometry::{GeneratorCell, MappingMatrix};
use crate::linalg::{frobenius, orthonormal_columns, semidefinite_pencil};
use crate::point_group::{PointGroup, Species};
use crate::{par, CMatrix, CVector, Error, Result, C64};

/// Relative norm at or below which an adapted vector counts as zero.
pub const COLLISION_TOL: f64 = 1e-12;
/// Drop tolerance of the orthonormalisation that builds `Γ`.
pub const BASIS_DROP_TOL: f64 = 1e-10;
/// Relative congruence residual above which an operator is not invariant.
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Relative `R0` eigenvalue treated as zero in the modal pencil.
pub const MODE_NULL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SymmetryAdaptedExcitation {
    pub species: Species,
    pub vector: CVector,
    /// Basis indices of the generator-cell sources.
    pub positions: Vec<usize>,
    /// Source amplitudes at `positions`.
    pub amplitudes: CVector,
    /// The source cancelled under this species.
    pub collided: bool,
}

/// Apply the species projector to `v`, without any generator-cell check.
pub fn project(v: &CVector, group: &PointGroup, maps: &[MappingMatrix], s: Species) -> CVector {
    let g = group.order() as f64;
    let ga = group.irreps[s.irrep].dim as f64;
    let mut out = CVector::zeros(v.len());
    for (r, m) in maps.iter().enumerate() {
        let coef = group.dual_rep_at(s.irrep, r)[(s.row, s.row)] * (ga / g);
        if coef.norm() == 0.0 {
            continue;
        }
        for (col, &(row, sign)) in m.columns.iter().enumerate() {
            out[row] += coef * v[col] * sign as f64;
        }
    }
    out
}

/// Symmetry-adapt an excitation supported in the generator cell.
pub fn adapt_vector(
    v: &CVector,
    group: &PointGroup,
    maps: &[MappingMatrix],
    cell: &GeneratorCell,
    species: Species,
) -> Result<SymmetryAdaptedExcitation> {
    let positions: Vec<usize> = (0..v.len()).filter(|&i| v[i].norm() != 0.0).collect();
    if let Some(&bad) = positions.iter().find(|&&i| !cell.contains(i)) {
        return Err(Error::SourceOutsideGenerator(bad));
    }
    let vector = project(v, group, maps, species);
    let collided = vector.norm() <= COLLISION_TOL * v.norm();
    let amplitudes = CVector::from_iterator(positions.len(), positions.iter().map(|&i| v[i]));
    Ok(SymmetryAdaptedExcitation { species, vector, positions, amplitudes, collided })
}

/// Species reachable by a unit source on basis index `xi`.
pub fn realizable_species(xi: usize, group: &PointGroup, maps: &[MappingMatrix]) -> Vec<Species> {
    let n = maps.first().map_or(0, MappingMatrix::len);
    let mut e = CVector::zeros(n);
    e[xi] = C64::new(1.0, 0.0);
    group.species().into_iter().filter(|&s| project(&e, group, maps, s).norm() > COLLISION_TOL).collect()
}

/// Symmetry-adapted bases `Γ^(α,i)` of every species.
#[derive(Debug, Clone)]
pub struct AdaptedBasis {
    pub species: Vec<Species>,
    /// `Γ^(α,i)`, one per species, orthonormal columns.
    pub blocks: Vec<CMatrix>,
}

impl AdaptedBasis {
    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.ncols()).collect()
    }

    /// Horizontal concatenation of all blocks.
    pub fn full(&self) -> CMatrix {
        let n = self.blocks.first().map_or(0, |b| b.nrows());
        let total: usize = self.dims().iter().sum();
        let mut m = CMatrix::zeros(n, total);
        let mut off = 0;
        for b in &self.blocks {
            m.columns_mut(off, b.ncols()).copy_from(b);
            off += b.ncols();
        }
        m
    }

    pub fn block(&self, s: Species) -> Option<&CMatrix> {
        self.species.iter().position(|&t| t == s).map(|k| &self.blocks[k])
    }

    /// Coordinates of `v` in every species subspace, `Γ^(α,i)ᴴ v`.
    pub fn components(&self, v: &CVector) -> Vec<CVector> {
        self.blocks.iter().map(|b| b.adjoint() * v).collect()
    }
}

/// Orbits have disjoint supports, so each species basis is assembled orbit by
/// orbit from projected unit vectors.
pub fn build_adapted_basis(group: &PointGroup, maps: &[MappingMatrix], n: usize) -> Result<AdaptedBasis> {
    if maps.iter().any(|m| m.len() != n) || maps.len() != group.order() {
        return Err(Error::Dimension("mapping matrices do not match the basis or group".into()));
    }
    let cell = crate::geometry::find_generator_cell(maps, &[]);
    let species = group.species();
    let blocks: Vec<CMatrix> = par::map_indexed(species.len(), |k| {
        let s = species[k];
        let mut cols: Vec<CVector> = Vec::new();
        for orbit in &cell.orbits {
            let mut local = CMatrix::zeros(orbit.len(), orbit.len());
            for (j, &idx) in orbit.iter().enumerate() {
                let mut e = CVector::zeros(n);
                e[idx] = C64::new(1.0, 0.0);
                let p = project(&e, group, maps, s);
                for (i, &row) in orbit.iter().enumerate() {
                    local[(i, j)] = p[row];
                }
            }
            let q = orthonormal_columns(&local, BASIS_DROP_TOL);
            for c in q.column_iter() {
                let mut v = CVector::zeros(n);
                for (i, &row) in orbit.iter().enumerate() {
                    v[row] = c[i];
                }
                cols.push(v);
            }
        }
        if cols.is_empty() {
            CMatrix::zeros(n, 0)
        } else {
            CMatrix::from_columns(&cols)
        }
    });
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    if total != n {
        return Err(Error::Invalid(format!("adapted bases span {total} of {n} dimensions")));
    }
    Ok(AdaptedBasis { species, blocks })
}

/// Largest relative congruence residual `‖C(R)ᵀ A C(R) − A‖_F / ‖A‖_F`.
pub fn invariance_residual(a: &CMatrix, maps: &[MappingMatrix]) -> f64 {
    let norm = frobenius(a);
    if norm == 0.0 {
        return 0.0;
    }
    maps.iter()
        .map(|m| {
            let mut acc = 0.0;
            for (i, &(ti, si)) in m.columns.iter().enumerate() {
                for (j, &(tj, sj)) in m.columns.iter().enumerate() {
                    let v = a[(ti, tj)] * (si * sj) as f64 - a[(i, j)];
                    acc += v.norm_sqr();
                }
            }
            acc.sqrt() / norm
        })
        .fold(0.0, f64::max)
}

/// Per-species blocks `Â^(α,i) = Γ^(α,i)ᴴ A Γ^(α,i)`.
pub fn block_diagonalize(a: &OperatorMatrix, basis: &AdaptedBasis, maps: &[MappingMatrix]) -> Result<Vec<CMatrix>> {
    let res = invariance_residual(&a.data, maps);
    if res > INVARIANCE_TOL {
        return Err(Error::NotInvariant(res));
    }
    Ok(basis.blocks.iter().map(|g| g.adjoint() * &a.data * g).collect())
}

/// `‖Γᴴ A Γ − blockdiag(Â)‖_F / ‖A‖_F`.
pub fn off_block_residual(a: &CMatrix, basis: &AdaptedBasis) -> f64 {
    let g = basis.full();
    let mut full = g.adjoint() * a * &g;
    let mut off = 0;
    for d in basis.dims() {
        full.view_mut((off, off), (d, d)).fill(C64::default());
        off += d;
    }
    frobenius(&full) / frobenius(a).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone)]
pub struct CharacteristicModeSet {
    /// `None` for modes of the unreduced problem.
    pub species: Option<Species>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Block-space eigenvectors `Î_m`.
    pub reduced: CMatrix,
    /// `I_m = Γ Î_m`, normalised to `½ I_nᴴ R0 I_m = δ_mn`.
    pub modes: CMatrix,
}

/// Characteristic modes `X0 I = λ R0 I`, per species when `basis` is given.
pub fn characteristic_modes(
    r0: &OperatorMatrix,
    x0: &OperatorMatrix,
    basis: Option<&AdaptedBasis>,
) -> Result<Vec<CharacteristicModeSet>> {
    let sqrt2 = C64::new(2f64.sqrt(), 0.0);
    match basis {
        None => {
            let (eigenvalues, v) = semidefinite_pencil(&x0.data, &r0.data, MODE_NULL_TOL)?;
            let modes = v * sqrt2;
            Ok(vec![CharacteristicModeSet { species: None, eigenvalues, reduced: modes.clone(), modes }])
        }
        Some(b) => {
            let solved: Vec<Result<CharacteristicModeSet>> = par::map_indexed(b.blocks.len(), |k| {
                let g = &b.blocks[k];
                let rb = g.adjoint() * &r0.data * g;
                let xb = g.adjoint() * &x0.data * g;
                let (eigenvalues, v) = semidefinite_pencil(&xb, &rb, MODE_NULL_TOL)?;
                let reduced = v * sqrt2;
                let modes = g * &reduced;
                Ok(CharacteristicModeSet { species: Some(b.species[k]), eigenvalues, reduced, modes })
            });
            solved.into_iter().collect()
        }
    }
}

/// Normwise backward error of `(λ, I)` for `X0 I = λ R0 I`:
/// `‖X0 I − λ R0 I‖ / ((‖X0‖ + |λ| ‖R0‖) ‖I‖)`, Frobenius operator norms.
pub fn pencil_residual(x0: &CMatrix, r0: &CMatrix, lambda: f64, i: &CVector) -> f64 {
    let r = x0 * i - (r0 * i) * C64::new(lambda, 0.0);
    let scale = (x0.norm() + lambda.abs() * r0.norm()) * i.norm();
    if scale == 0.0 {
        0.0
    } else {
        r.norm() / scale
    }
}

/// Quadratic-form matrices `|V_mᴴ A V_n|` and the largest normalised
/// cross-species entry for each operator.
#[derive(Debug, Clone)]
pub struct OrthogonalityReport {
    /// One `|V_mᴴ A V_n|` table per operator.
    pub tables: Vec<Vec<Vec<f64>>>,
    /// Per operator, max over pairs of distinct species of
    /// `|V_mᴴ A V_n| / max(‖V_m‖‖A V_n‖, ‖Aᴴ V_m‖‖V_n‖)`.
    pub max_cross: Vec<f64>,
    /// Per operator, max over pairs of distinct species of
    /// `|V_mᴴ A V_n| / (‖A‖₂ ‖V_m‖ ‖V_n‖)`. Unlike `max_cross` this stays at
    /// rounding level for vectors that `A` nearly annihilates, such as weakly
    /// radiating modes under `R0`.
    pub max_cross_normwise: Vec<f64>,
}

impl OrthogonalityReport {
    pub fn worst(&self) -> f64 {
        self.max_cross.iter().cloned().fold(0.0, f64::max)
    }

    pub fn worst_normwise(&self) -> f64 {
        self.max_cross_normwise.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn orthogonality_check(vectors: &[(Species, CVector)], operators: &[&CMatrix]) -> OrthogonalityReport {
    let mut tables = Vec::new();
    let mut max_cross = Vec::new();
    let mut max_cross_normwise = Vec::new();
    for a in operators {
        let norm2 = a.singular_values().max();
        let av: Vec<CVector> = vectors.iter().map(|(_, v)| *a * v).collect();
        let ahv: Vec<CVector> = vectors.iter().map(|(_, v)| a.adjoint() * v).collect();
        let mut t = vec![vec![0.0; vectors.len()]; vectors.len()];
        let mut worst: f64 = 0.0;
        let mut worst_nw: f64 = 0.0;
        for (m, (sm, vm)) in vectors.iter().enumerate() {
            for (n, (sn, vn)) in vectors.iter().enumerate() {
                let q = vm.dotc(&av[n]).norm();
                t[m][n] = q;
                if sm != sn {
                    let den = (vm.norm() * av[n].norm()).max(ahv[m].norm() * vn.norm());
                    if den > 0.0 {
                        worst = worst.max(q / den);
                    }
                    let den = norm2 * vm.norm() * vn.norm();
                    if den > 0.0 {
                        worst_nw = worst_nw.max(q / den);
                    }
                }
            }
        }
        tables.push(t);
        max_cross.push(worst);
        max_cross_normwise.push(worst_nw);
    }
    OrthogonalityReport { tables, max_cross, max_cross_normwise }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{build_edge_basis, build_mapping_matrices, default_tolerance, find_generator_cell};
    use crate::point_group::build_group;

    fn star() -> (PointGroup, Vec<MappingMatrix>, GeneratorCell) {
        let b = build_edge_basis(&fixtures::star_mesh()).unwrap();
        let g = build_group("C2v").unwrap();
        let maps = build_mapping_matrices(&b, &g, default_tolerance(&b)).unwrap();
        let cell = find_generator_cell(&maps, &[0]);
        (g, maps, cell)
    }

    fn unit(n: usize, i: usize) -> CVector {
        let mut e = CVector::zeros(n);
        e[i] = C64::new(1.0, 0.0);
        e
    }

    fn real(v: &[f64]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))
    }

    #[test]
    fn star_adapted_vectors() {
        let (g, maps, cell) = star();
        let e1 = unit(5, 0);
        let cases = [
            ("A1", [1.0, -1.0, 0.0, 1.0, -1.0]),
            ("A2", [1.0, 1.0, 0.0, -1.0, -1.0]),
            ("B1", [1.0, 1.0, 0.0, 1.0, 1.0]),
            ("B2", [1.0, -1.0, 0.0, -1.0, 1.0]),
        ];
        for (label, want) in cases {
            let s = g.parse_species(label).unwrap();
            let a = adapt_vector(&e1, &g, &maps, &cell, s).unwrap();
            let want = real(&want) * C64::new(0.25, 0.0);
            assert!((a.vector - want).norm() < 1e-15, "{label}");
            assert!(!a.collided);
        }
    }

    #[test]
    fn zero_and_outside_sources() {
        let (g, maps, cell) = star();
        for s in g.species() {
            let a = adapt_vector(&CVector::zeros(5), &g, &maps, &cell, s).unwrap();
            assert_eq!(a.vector.norm(), 0.0);
        }
        let err = adapt_vector(&unit(5, 1), &g, &maps, &cell, g.species()[0]).unwrap_err();
        assert!(matches!(err, Error::SourceOutsideGenerator(1)));
    }

    #[test]
    fn fixed_source_reaches_one_species() {
        // the centre edge lies on both mirror planes and is reversed by σxz and C2z
        let (g, maps, _) = star();
        let labels: Vec<String> =
            realizable_species(2, &g, &maps).iter().map(|&s| g.irreps[s.irrep].label.clone()).collect();
        assert_eq!(labels, ["B2"]);
        assert_eq!(realizable_species(0, &g, &maps).len(), 4);
        let c1 = build_group("C1").unwrap();
        let b = build_edge_basis(&fixtures::star_mesh()).unwrap();
        let m1 = build_mapping_matrices(&b, &c1, 1e-6).unwrap();
        assert_eq!(realizable_species(3, &c1, &m1).len(), 1);
    }

    #[test]
    fn adaptation_is_idempotent() {
        let (g, maps, _) = star();
        let v = real(&[0.3, -1.2, 0.7, 2.0, 0.1]);
        for s in g.species() {
            let once = project(&v, &g, &maps, s);
            let twice = project(&once, &g, &maps, s);
            assert!((&once - &twice).norm() <= 1e-12 * once.norm().max(1.0));
        }
    }

    /// Rank of the character projector by brute-force dense matrix.
    fn projector_rank(g: &PointGroup, maps: &[MappingMatrix], irrep: usize) -> usize {
        let n = maps[0].len();
        let mut p = CMatrix::zeros(n, n);
        for (r, m) in maps.iter().enumerate() {
            let chi = g.irreps[irrep].matrices[r].trace().conj();
            p += m.to_real().map(|x| C64::new(x, 0.0)) * chi;
        }
        p *= C64::new(g.irreps[irrep].dim as f64 / g.order() as f64, 0.0);
        let svd = p.svd(false, false);
        svd.singular_values.iter().filter(|&&s| s > 1e-10).count()
    }

    #[test]
    fn star_basis_dimensions_and_projectors() {
        let (g, maps, _) = star();
        let basis = build_adapted_basis(&g, &maps, 5).unwrap();
        assert_eq!(basis.dims().iter().sum::<usize>(), 5);
        for (k, s) in basis.species.iter().enumerate() {
            assert_eq!(basis.blocks[k].ncols(), projector_rank(&g, &maps, s.irrep));
            let gm = &basis.blocks[k];
            let eye = gm.adjoint() * gm;
            assert!((eye - CMatrix::identity(gm.ncols(), gm.ncols())).norm() < 1e-12);
            let p = gm * gm.adjoint();
            assert!((&p * &p - &p).norm() < 1e-12);
        }
        let b2 = basis.block(g.parse_species("B2").unwrap()).unwrap();
        assert_eq!(b2.ncols(), 2);
    }

    #[test]
    fn identity_blocks_and_non_invariant_rejection() {
        let (g, maps, _) = star();
        let basis = build_adapted_basis(&g, &maps, 5).unwrap();
        let eye = OperatorMatrix::new(crate::em::Role::Custom, CMatrix::identity(5, 5), 0.0, 0.0);
        for b in block_diagonalize(&eye, &basis, &maps).unwrap() {
            assert!((&b - CMatrix::identity(b.nrows(), b.ncols())).norm() < 1e-12);
        }
        let bad = CMatrix::from_fn(5, 5, |i, j| C64::new((i * 7 + j * 3) as f64 % 5.0, j as f64));
        let op = OperatorMatrix::new(crate::em::Role::Custom, bad, 0.0, 0.0);
        assert!(matches!(block_diagonalize(&op, &basis, &maps), Err(Error::NotInvariant(_))));
    }

    #[test]
    fn complex_irreps_give_complete_bases() {
        let rim = build_edge_basis(&fixtures::rim_mesh()).unwrap();
        let pinwheel = build_edge_basis(&fixtures::pinwheel_mesh()).unwrap();
        for (b, name) in [(&rim, "C2"), (&rim, "Cs"), (&rim, "C2v"), (&pinwheel, "C4")] {
            let g = build_group(name).unwrap();
            let maps = build_mapping_matrices(b, &g, default_tolerance(b)).unwrap();
            let basis = build_adapted_basis(&g, &maps, b.len()).unwrap();
            let full = basis.full();
            let gram = full.adjoint() * &full;
            assert!((gram - CMatrix::identity(b.len(), b.len())).norm() < 1e-10, "{name}");
        }
    }

    #[test]
    fn orthogonality_of_star_vectors() {
        let (g, maps, cell) = star();
        let vecs: Vec<(Species, CVector)> = g
            .species()
            .into_iter()
            .map(|s| (s, adapt_vector(&unit(5, 0), &g, &maps, &cell, s).unwrap().vector))
            .collect();
        let eye = CMatrix::identity(5, 5);
        let rep = orthogonality_check(&vecs, &[&eye]);
        assert_eq!(rep.worst(), 0.0);
        assert!((rep.tables[0][0][0] - 0.25).abs() < 1e-15);
    }
}
