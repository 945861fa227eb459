use super::assemble::OperatorMatrix;
use crate::linalg::Lu;
use crate::{CMatrix, CVector, Error, Result};

/// Relative residual every solve must meet.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CurrentSolution {
    pub i: CVector,
    pub v: CVector,
}

/// An impedance matrix together with its factorisation, reused for every
/// right-hand side at one frequency.
#[derive(Debug, Clone)]
pub struct ImpedanceSystem {
    pub z: OperatorMatrix,
    lu: Lu,
}

impl ImpedanceSystem {
    pub fn new(z: OperatorMatrix) -> Result<Self> {
        let lu = Lu::new(&z.data)?;
        Ok(ImpedanceSystem { z, lu })
    }

    pub fn dim(&self) -> usize {
        self.z.dim()
    }

    pub fn condition(&self) -> f64 {
        self.lu.condition
    }

    pub fn solve(&self, v: &CVector) -> Result<CurrentSolution> {
        if v.len() != self.dim() {
            return Err(Error::Dimension(format!("excitation of length {} for {} unknowns", v.len(), self.dim())));
        }
        let mut i = self.lu.solve(v);
        let vn = v.norm();
        let mut res = v - &self.z.data * &i;
        if res.norm() > RESIDUAL_LIMIT * vn {
            // one step of iterative refinement before giving up
            i += self.lu.solve(&res);
            res = v - &self.z.data * &i;
            if res.norm() > RESIDUAL_LIMIT * vn {
                return Err(Error::SingularMatrix(self.lu.condition));
            }
        }
        Ok(CurrentSolution { i, v: v.clone() })
    }

    /// `Z⁻¹ B` column by column.
    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        self.lu.solve_matrix(b)
    }
}

pub fn solve_currents(z: &OperatorMatrix, v: &CVector) -> Result<CurrentSolution> {
    ImpedanceSystem::new(z.clone())?.solve(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::{assemble_z0, radiation_part};
    use crate::fixtures;
    use crate::geometry::build_edge_basis;
    use crate::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_excitation_gives_zero_current() {
        let b = build_edge_basis(&fixtures::star_mesh()).unwrap();
        let sys = ImpedanceSystem::new(assemble_z0(&b, 1.0)).unwrap();
        let s = sys.solve(&CVector::zeros(5)).unwrap();
        assert!(s.i.iter().all(|z| z.norm() == 0.0));
        assert!(matches!(sys.solve(&CVector::zeros(4)), Err(Error::Dimension(_))));
    }

    #[test]
    fn random_excitations_respect_power_balance() {
        let b = build_edge_basis(&fixtures::rim_mesh()).unwrap();
        let z = assemble_z0(&b, 3.0);
        let r0 = radiation_part(&z);
        let sys = ImpedanceSystem::new(z).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let v =
                CVector::from_fn(b.len(), |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let s = sys.solve(&v).unwrap();
            let res = (&v - &sys.z.data * &s.i).norm();
            assert!(res <= RESIDUAL_LIMIT * v.norm());
            let prad = 0.5 * s.i.dotc(&(&r0.data * &s.i)).re;
            let pin = 0.5 * s.i.dotc(&v).re;
            assert!(prad >= 0.0 && prad <= pin * (1.0 + 1e-9));
        }
    }
}
