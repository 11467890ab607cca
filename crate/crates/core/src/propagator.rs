//! Time-ordered evolution under the drive Hamiltonians.
//!
//! The propagator is a midpoint product of exact 2×2 exponentials, so the only
//! discretization error comes from time ordering and is second order in the
//! slice width.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::spin::{
    c, drive_hamiltonian, eigensystem, max_abs2, DensityMatrix, DriveProtocol, Operator,
    HBAR_PEV_US,
};
use crate::C64;

pub const DEFAULT_STEPS: usize = 5000;
/// Max-norm change between `n` and `2n` slices accepted as converged.
pub const CONVERGENCE_TOL: f64 = 1e-8;
pub const UNITARITY_TOL: f64 = 1e-10;
const MAX_STEPS: usize = 1 << 22;
const TRANSITION_SYMMETRY_TOL: f64 = 1e-9;

/// A 2×2 unitary, optionally tagged with the protocol that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryMap {
    matrix: Matrix2<C64>,
    protocol: Option<DriveProtocol>,
    n_steps: usize,
}

impl UnitaryMap {
    pub fn new(matrix: Matrix2<C64>) -> Result<Self> {
        let defect = unitarity_defect(&matrix);
        if defect > UNITARITY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(UnitaryMap {
            matrix,
            protocol: None,
            n_steps: 0,
        })
    }

    pub fn identity() -> Self {
        UnitaryMap {
            matrix: Matrix2::identity(),
            protocol: None,
            n_steps: 0,
        }
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.matrix
    }

    pub fn protocol(&self) -> Option<&DriveProtocol> {
        self.protocol.as_ref()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// `max |U†U - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMap {
            matrix: self.matrix.adjoint(),
            protocol: None,
            n_steps: self.n_steps,
        }
    }

    /// The map that applies `self` first and `next` afterwards.
    pub fn then(&self, next: &UnitaryMap) -> Self {
        UnitaryMap {
            matrix: next.matrix * self.matrix,
            protocol: None,
            n_steps: self.n_steps + next.n_steps,
        }
    }

    /// Max-norm distance between the two matrices.
    pub fn distance(&self, other: &UnitaryMap) -> f64 {
        max_abs2(&(self.matrix - other.matrix))
    }
}

fn unitarity_defect(m: &Matrix2<C64>) -> f64 {
    max_abs2(&(m.adjoint() * m - Matrix2::identity()))
}

/// `exp(-i H dt / ħ)` in closed axis-angle form.
pub fn slice_exponential(h: &Operator, dt: f64) -> Matrix2<C64> {
    let (a0, a) = h.bloch();
    let norm = libm::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    let angle = norm * dt / HBAR_PEV_US;
    let global = C64::from_polar(1.0, -a0 * dt / HBAR_PEV_US);
    if norm == 0.0 {
        return Matrix2::identity() * global;
    }
    let axis = Operator::from_bloch(0.0, [a[0] / norm, a[1] / norm, a[2] / norm]);
    let rotation =
        Matrix2::identity() * c(libm::cos(angle), 0.0) - axis.matrix() * c(0.0, libm::sin(angle));
    rotation * global
}

/// Midpoint time-sliced propagator with `n_steps` slices, applied in time order.
pub fn evolve_unitary(p: &DriveProtocol, n_steps: usize) -> Result<UnitaryMap> {
    if n_steps == 0 {
        return Err(Error::OutOfRange {
            name: "n_steps",
            value: 0.0,
            reason: "at least one slice is required",
        });
    }
    let dt = p.tau() / n_steps as f64;
    let mut u = Matrix2::identity();
    for k in 0..n_steps {
        let t = (k as f64 + 0.5) * dt;
        let h = drive_hamiltonian(t, p)?;
        u = slice_exponential(&h, dt) * u;
    }
    Ok(UnitaryMap {
        matrix: u,
        protocol: Some(*p),
        n_steps,
    })
}

/// Doubles the slice count from `n_steps` until the propagator changes by less
/// than [`CONVERGENCE_TOL`]; returns the finer of the last pair.
pub fn evolve_converged(p: &DriveProtocol, n_steps: usize) -> Result<UnitaryMap> {
    let mut coarse = evolve_unitary(p, n_steps)?;
    let mut n = n_steps;
    loop {
        n *= 2;
        let fine = evolve_unitary(p, n)?;
        let change = fine.distance(&coarse);
        if change < CONVERGENCE_TOL {
            return Ok(fine);
        }
        if n >= MAX_STEPS {
            return Err(Error::NotConverged { n_steps: n, change });
        }
        coarse = fine;
    }
}

/// Probability `ξ` that `u` flips the system between instantaneous eigenstates
/// of `h_initial` and `h_final`.
///
/// Both cross elements are computed; unitarity of a 2×2 map forces them to be
/// equal, and a mismatch is reported as an error.
pub fn transition_probability(
    u: &UnitaryMap,
    h_initial: &Operator,
    h_final: &Operator,
) -> Result<f64> {
    let initial = eigensystem(h_initial)?;
    let fin = eigensystem(h_final)?;
    let element = |bra: &nalgebra::Vector2<C64>, ket: &nalgebra::Vector2<C64>| {
        (bra.adjoint() * u.matrix() * ket)[(0, 0)].norm_sqr()
    };
    let up = element(fin.excited(), initial.ground());
    let down = element(fin.ground(), initial.excited());
    if (up - down).abs() > TRANSITION_SYMMETRY_TOL {
        return Err(Error::InconsistentTransition {
            forward: up,
            backward: down,
        });
    }
    Ok((0.5 * (up + down)).clamp(0.0, 1.0))
}

/// `U ρ U†`.
pub fn propagate_state(rho: &DensityMatrix, u: &UnitaryMap) -> DensityMatrix {
    DensityMatrix::from_trusted(u.matrix() * rho.matrix() * u.matrix().adjoint())
}
