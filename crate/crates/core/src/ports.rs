//! Port matrices, port voltages, TARC and optimal generator-cell amplitudes.
//!
//! Every port is a delta gap on one interior edge, so the port matrix `P`
//! has unit columns and `PᵀP = 1`. Ports are obtained by replicating the
//! generator-cell positions `ξ` with every mapping matrix.

use crate::em::{ImpedanceSystem, OperatorMatrix};
use crate::geometry::MappingMatrix;
use crate::linalg::hermitian_definite_pencil;
use crate::point_group::{PointGroup, Species};
use crate::symmetry::{project, COLLISION_TOL};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Characteristic impedance of every feeding line unless overridden (Ω).
pub const DEFAULT_Z0_LINE: f64 = 50.0;
/// Largest relative residual accepted by [`recover_port_voltages`].
pub const COLUMN_SPACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PortConfiguration {
    pub n_unknowns: usize,
    /// Basis index of each port, i.e. the nonzero row of each column of `P`.
    pub ports: Vec<usize>,
    pub z0_line: f64,
    /// Generator positions `ξ` as basis indices.
    pub positions: Vec<usize>,
    /// Positions whose orbit is smaller than the group (on a symmetry element).
    pub on_boundary: Vec<bool>,
    /// Species in canonical group order, with their port-indexing matrices.
    pub species: Vec<Species>,
    /// `p^(α,i)`, `N_p × N_ξ`.
    pub indexing: Vec<CMatrix>,
}

impl PortConfiguration {
    pub fn n_ports(&self) -> usize {
        self.ports.len()
    }

    /// Dense `P`.
    pub fn port_matrix(&self) -> CMatrix {
        let mut p = CMatrix::zeros(self.n_unknowns, self.ports.len());
        for (c, &r) in self.ports.iter().enumerate() {
            p[(r, c)] = C64::new(1.0, 0.0);
        }
        p
    }

    /// `P v`.
    pub fn expand(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.n_unknowns);
        for (c, &r) in self.ports.iter().enumerate() {
            out[r] += v[c];
        }
        out
    }

    /// `Pᵀ x`.
    pub fn restrict(&self, x: &CVector) -> CVector {
        CVector::from_iterator(self.ports.len(), self.ports.iter().map(|&r| x[r]))
    }

    pub fn indexing_of(&self, s: Species) -> Option<&CMatrix> {
        self.species.iter().position(|&t| t == s).map(|k| &self.indexing[k])
    }

    /// Species reached by at least one position.
    pub fn realizable(&self) -> Vec<Species> {
        self.species
            .iter()
            .zip(&self.indexing)
            .filter(|(_, p)| p.column_iter().any(|c| c.norm() > COLLISION_TOL))
            .map(|(&s, _)| s)
            .collect()
    }

    /// Port voltages of a single-amplitude-per-position excitation, `p^(α,i) κ`.
    pub fn voltages(&self, s: Species, kappa: &CVector) -> Option<CVector> {
        self.indexing_of(s).map(|p| p * kappa)
    }
}

pub fn build_port_configuration(
    group: &PointGroup,
    maps: &[MappingMatrix],
    positions: &[usize],
    z0_line: f64,
) -> Result<PortConfiguration> {
    let n = maps.first().map_or(0, MappingMatrix::len);
    if positions.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(z0_line > 0.0) {
        return Err(Error::Invalid(format!("line impedance must be positive, got {z0_line}")));
    }
    let mut ports: Vec<usize> = Vec::new();
    let mut on_boundary = Vec::new();
    for &xi in positions {
        if xi >= n {
            return Err(Error::InvalidPosition(xi));
        }
        if ports.contains(&xi) {
            // a second position inside an already replicated orbit
            return Err(Error::InvalidPosition(xi));
        }
        let before = ports.len();
        for m in maps {
            let t = m.columns[xi].0;
            if !ports.contains(&t) {
                ports.push(t);
            }
        }
        on_boundary.push(ports.len() - before < maps.len());
    }

    let species = group.species();
    let indexing = species
        .iter()
        .map(|&s| {
            let mut p = CMatrix::zeros(ports.len(), positions.len());
            for (k, &xi) in positions.iter().enumerate() {
                let mut e = CVector::zeros(n);
                e[xi] = C64::new(1.0, 0.0);
                let adapted = project(&e, group, maps, s);
                for (row, &port) in ports.iter().enumerate() {
                    p[(row, k)] = adapted[port];
                }
            }
            p
        })
        .collect();
    Ok(PortConfiguration {
        n_unknowns: n,
        ports,
        z0_line,
        positions: positions.to_vec(),
        on_boundary,
        species,
        indexing,
    })
}

/// `v = (PᴴP)⁻¹ Pᴴ V`.
pub fn recover_port_voltages(cfg: &PortConfiguration, v_full: &CVector) -> Result<CVector> {
    if v_full.len() != cfg.n_unknowns {
        return Err(Error::Dimension(format!("vector of length {} for {} unknowns", v_full.len(), cfg.n_unknowns)));
    }
    let v = cfg.restrict(v_full);
    let res = (cfg.expand(&v) - v_full).norm();
    if res > COLUMN_SPACE_TOL * v_full.norm() {
        return Err(Error::NotInColumnSpace(res / v_full.norm()));
    }
    Ok(v)
}

/// Port-level view of the structure at one frequency.
#[derive(Debug, Clone)]
pub struct PortNetwork {
    /// `Y P = Z⁻¹ P`, `N_u × N_p`.
    pub currents: CMatrix,
    /// Port admittance `y = Pᵀ Z⁻¹ P`.
    pub y: CMatrix,
    /// `k = 1 + Z0 y`.
    pub k: CMatrix,
    pub z0_line: f64,
}

pub fn port_network(cfg: &PortConfiguration, sys: &ImpedanceSystem) -> PortNetwork {
    let currents = sys.solve_matrix(&cfg.port_matrix());
    let np = cfg.n_ports();
    let y = CMatrix::from_fn(np, np, |i, j| currents[(cfg.ports[i], j)]);
    let k = CMatrix::identity(np, np) + &y * C64::new(cfg.z0_line, 0.0);
    PortNetwork { currents, y, k, z0_line: cfg.z0_line }
}

#[derive(Debug, Clone)]
pub struct TarcResult {
    pub species: Option<Species>,
    pub ka: f64,
    pub t: f64,
    /// Port voltages `v`.
    pub voltages: CVector,
    /// Generator amplitudes `κ`, when the state came from them.
    pub kappa: Option<CVector>,
}

/// `t(v) = sqrt(1 − 4 Z0 vᴴPᴴYᴴR0YPv / (vᴴkᴴkv))`.
pub fn tarc(v: &CVector, net: &PortNetwork, r0: &OperatorMatrix) -> Result<f64> {
    if v.norm() == 0.0 {
        return Err(Error::ZeroExcitation);
    }
    let i = &net.currents * v;
    let num = 4.0 * net.z0_line * i.dotc(&(&r0.data * &i)).re;
    let kv = &net.k * v;
    let den = kv.norm_squared();
    Ok(ratio_to_tarc(num / den))
}

fn ratio_to_tarc(efficiency: f64) -> f64 {
    (1.0 - efficiency).max(0.0).sqrt()
}

/// TARC from its definition: solve for the currents, then compare radiated
/// power `½ IᴴR0I` with incident power `½ aᴴa`, `a = (v + Z0 PᵀI)/(2√Z0)`.
pub fn tarc_definitional(
    v: &CVector,
    cfg: &PortConfiguration,
    sys: &ImpedanceSystem,
    r0: &OperatorMatrix,
) -> Result<f64> {
    if v.norm() == 0.0 {
        return Err(Error::ZeroExcitation);
    }
    let sol = sys.solve(&cfg.expand(v))?;
    let i_ports = cfg.restrict(&sol.i);
    let z0 = cfg.z0_line;
    let a = (v + i_ports * C64::new(z0, 0.0)) / C64::new(2.0 * z0.sqrt(), 0.0);
    let p_in = 0.5 * a.norm_squared();
    let p_rad = 0.5 * sol.i.dotc(&(&r0.data * &sol.i)).re;
    Ok(ratio_to_tarc(p_rad / p_in))
}

/// `sqrt(mean(t²))`.
pub fn tarc_rms(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok((values.iter().map(|t| t * t).sum::<f64>() / values.len() as f64).sqrt())
}

/// Best generator amplitudes for one species: the eigenvector of the largest
/// eigenvalue of `A κ = λ B κ`, `A = 4Z0 (YPp)ᴴR0(YPp)`, `B = (kp)ᴴ(kp)`.
///
/// Positions that cannot excite the species get zero amplitude. The returned
/// `κ` has its first nonzero entry real and equal to one.
pub fn optimal_kappa(
    s: Species,
    cfg: &PortConfiguration,
    net: &PortNetwork,
    r0: &OperatorMatrix,
) -> Result<(CVector, f64)> {
    let p = cfg.indexing_of(s).ok_or_else(|| Error::Invalid("species not in the group".into()))?;
    let live: Vec<usize> = (0..p.ncols()).filter(|&c| p.column(c).norm() > COLLISION_TOL).collect();
    if live.is_empty() {
        return Err(Error::ZeroExcitation);
    }
    let pl = p.select_columns(&live);
    let u = &net.currents * &pl;
    let a = (u.adjoint() * &r0.data * &u) * C64::new(4.0 * net.z0_line, 0.0);
    let kp = &net.k * &pl;
    let b = kp.adjoint() * &kp;
    let (values, vecs) = if live.len() == 1 {
        (vec![(a[(0, 0)] / b[(0, 0)]).re], CMatrix::from_element(1, 1, C64::new(1.0, 0.0)))
    } else {
        hermitian_definite_pencil(&a, &b)?
    };
    let top = values.len() - 1;
    let mut kappa = CVector::zeros(p.ncols());
    for (j, &c) in live.iter().enumerate() {
        kappa[c] = vecs[(j, top)];
    }
    let lead = kappa[live[0]];
    if lead.norm() > 0.0 {
        kappa /= lead;
    }
    Ok((kappa, ratio_to_tarc(values[top])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::{assemble_z0, radiation_part};
    use crate::fixtures;
    use crate::geometry::{build_edge_basis, build_mapping_matrices, default_tolerance};
    use crate::point_group::build_group;

    fn star_cfg() -> (PointGroup, Vec<MappingMatrix>, PortConfiguration) {
        let b = build_edge_basis(&fixtures::star_mesh()).unwrap();
        let g = build_group("C2v").unwrap();
        let maps = build_mapping_matrices(&b, &g, default_tolerance(&b)).unwrap();
        let cfg = build_port_configuration(&g, &maps, &[0], DEFAULT_Z0_LINE).unwrap();
        (g, maps, cfg)
    }

    #[test]
    fn star_ports_replicate_to_four() {
        let (g, maps, cfg) = star_cfg();
        assert_eq!(cfg.ports, vec![0, 4, 3, 1]);
        assert_eq!(cfg.on_boundary, vec![false]);
        // V^(A1,1) restricted to the ports, ordered as in P
        let mut e = CVector::zeros(5);
        e[0] = C64::new(1.0, 0.0);
        let va = project(&e, &g, &maps, g.parse_species("A1").unwrap());
        let v = recover_port_voltages(&cfg, &va).unwrap();
        let want = [0.25, -0.25, 0.25, -0.25];
        for (x, w) in v.iter().zip(want) {
            assert!((x.re - w).abs() < 1e-15 && x.im == 0.0);
        }
        assert!((cfg.expand(&v) - va).norm() < 1e-15);
        assert_eq!(recover_port_voltages(&cfg, &CVector::zeros(5)).unwrap().norm(), 0.0);
        let mut off = CVector::zeros(5);
        off[2] = C64::new(1.0, 0.0);
        assert!(matches!(recover_port_voltages(&cfg, &off), Err(Error::NotInColumnSpace(_))));
    }

    #[test]
    fn fixed_position_is_its_own_port() {
        let b = build_edge_basis(&fixtures::star_mesh()).unwrap();
        let g = build_group("C2v").unwrap();
        let maps = build_mapping_matrices(&b, &g, default_tolerance(&b)).unwrap();
        let cfg = build_port_configuration(&g, &maps, &[2], DEFAULT_Z0_LINE).unwrap();
        assert_eq!(cfg.n_ports(), 1);
        assert_eq!(cfg.on_boundary, vec![true]);
        assert_eq!(cfg.realizable().len(), 1);
        assert!(build_port_configuration(&g, &maps, &[0, 4], DEFAULT_Z0_LINE).is_err());
        assert!(build_port_configuration(&g, &maps, &[9], DEFAULT_Z0_LINE).is_err());
        assert!(matches!(build_port_configuration(&g, &maps, &[], DEFAULT_Z0_LINE), Err(Error::EmptySet)));
    }

    #[test]
    fn routes_agree_and_scale_out() {
        let (g, _, cfg) = star_cfg();
        let b = build_edge_basis(&fixtures::star_mesh()).unwrap();
        let z = assemble_z0(&b, 2.0);
        let r0 = radiation_part(&z);
        let sys = ImpedanceSystem::new(z).unwrap();
        let net = port_network(&cfg, &sys);
        for s in g.species() {
            let v = cfg.voltages(s, &CVector::from_element(1, C64::new(1.0, 0.0))).unwrap();
            let t1 = tarc(&v, &net, &r0).unwrap();
            let t2 = tarc_definitional(&v, &cfg, &sys, &r0).unwrap();
            assert!((t1 - t2).abs() <= 1e-10 * t1.max(1e-3));
            let t3 = tarc(&(&v * C64::new(0.0, -7.5)), &net, &r0).unwrap();
            assert!((t1 - t3).abs() <= 1e-12);
            assert!((0.0..=1.0).contains(&t1));
            let (kappa, tb) = optimal_kappa(s, &cfg, &net, &r0).unwrap();
            assert_eq!(kappa[0], C64::new(1.0, 0.0));
            assert!((tb - t1).abs() < 1e-10);
        }
        assert!(matches!(tarc(&CVector::zeros(4), &net, &r0), Err(Error::ZeroExcitation)));
    }

    #[test]
    fn rms_arithmetic() {
        assert_eq!(tarc_rms(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(tarc_rms(&[0.37]).unwrap(), 0.37);
        assert!((tarc_rms(&[0.2, 0.4, 0.6, 0.8]).unwrap() - 0.3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(tarc_rms(&[]), Err(Error::EmptySet)));
    }
}
