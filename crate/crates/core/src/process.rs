//! Process (Choi) matrices of single-qubit channels.
//!
//! A channel is written `ρ ↦ Σ_kj Υ_kj Ξ_k ρ Ξ_j†` over the operator basis
//! `Ξ_0 = i·1`, `Ξ_1..3 = σx, σy, σz`.

use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::propagator::{UnitaryMap, UNITARITY_TOL};
use crate::spin::{c, max_abs2, DensityMatrix, Operator};
use crate::C64;

/// Tolerance for the Hermiticity, positivity and trace-preservation checks.
pub const PROCESS_TOL: f64 = 1e-10;

/// The operator basis `Ξ_k`.
pub fn basis() -> [Matrix2<C64>; 4] {
    [
        Matrix2::identity() * c(0.0, 1.0),
        *Operator::sigma_x().matrix(),
        *Operator::sigma_y().matrix(),
        *Operator::sigma_z().matrix(),
    ]
}

fn max_abs4(m: &Matrix4<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessMatrix {
    matrix: Matrix4<C64>,
}

impl ProcessMatrix {
    /// Validates Hermiticity, complete positivity and trace preservation.
    pub fn new(matrix: Matrix4<C64>) -> Result<Self> {
        if max_abs4(&(matrix - matrix.adjoint())) > PROCESS_TOL {
            return Err(Error::InvalidProcess("process matrix is not Hermitian"));
        }
        let herm = (matrix + matrix.adjoint()) * c(0.5, 0.0);
        let min_eig = herm
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PROCESS_TOL {
            return Err(Error::InvalidProcess("process matrix is not positive"));
        }
        let p = ProcessMatrix { matrix: herm };
        if p.trace_preservation_defect() > PROCESS_TOL {
            return Err(Error::InvalidProcess("process is not trace preserving"));
        }
        Ok(p)
    }

    pub fn identity() -> Self {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = c(1.0, 0.0);
        ProcessMatrix { matrix: m }
    }

    /// Equal mixture of all four basis conjugations; maps every state to `1/2`.
    pub fn fully_depolarizing() -> Self {
        ProcessMatrix {
            matrix: Matrix4::identity() * c(0.25, 0.0),
        }
    }

    /// Process matrix of the channel with the given Kraus operators.
    pub fn from_kraus(kraus: &[Matrix2<C64>]) -> Result<Self> {
        let mut m = Matrix4::zeros();
        for k in kraus {
            let v = coefficients(k);
            m += v * v.adjoint();
        }
        ProcessMatrix::new(m)
    }

    /// `(1 - p)·self + p·other`.
    pub fn mix(&self, other: &ProcessMatrix, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                name: "mixing weight",
                value: p,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(ProcessMatrix {
            matrix: self.matrix * c(1.0 - p, 0.0) + other.matrix * c(p, 0.0),
        })
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.matrix
    }

    /// Largest imaginary part of any entry.
    pub fn imaginary_defect(&self) -> f64 {
        self.matrix.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn trace_preservation_defect(&self) -> f64 {
        let xi = basis();
        let mut sum = Matrix2::<C64>::zeros();
        for k in 0..4 {
            for j in 0..4 {
                sum += xi[j].adjoint() * xi[k] * self.matrix[(k, j)];
            }
        }
        max_abs2(&(sum - Matrix2::identity()))
    }

    /// Applies the channel to an arbitrary 2×2 operator.
    pub fn apply_matrix(&self, m: &Matrix2<C64>) -> Matrix2<C64> {
        let xi = basis();
        let mut out = Matrix2::zeros();
        for k in 0..4 {
            for j in 0..4 {
                let w = self.matrix[(k, j)];
                if w != c(0.0, 0.0) {
                    out += xi[k] * m * xi[j].adjoint() * w;
                }
            }
        }
        out
    }
}

/// Expansion coefficients `tr(Ξ_k† A)/2`.
fn coefficients(a: &Matrix2<C64>) -> Vector4<C64> {
    let xi = basis();
    Vector4::from_fn(|k, _| (xi[k].adjoint() * a).trace() * c(0.5, 0.0))
}

/// Rank-one process matrix of `ρ ↦ UρU†`.
///
/// The global phase of `U` is removed first so the result is real.
pub fn choi_from_unitary(u: &UnitaryMap) -> Result<ProcessMatrix> {
    let defect = u.unitarity_defect();
    if defect > UNITARITY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    let m = u.matrix();
    let phase = m.determinant().sqrt();
    let special = m / phase;
    let v = coefficients(&special);
    Ok(ProcessMatrix {
        matrix: v * v.adjoint(),
    })
}

pub fn apply_process(y: &ProcessMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::new(y.apply_matrix(rho.matrix()))
}

/// `‖ℰ(1) - 1‖` in the max-norm.
pub fn unitality_defect(y: &ProcessMatrix) -> f64 {
    max_abs2(&(y.apply_matrix(&Matrix2::identity()) - Matrix2::identity()))
}

/// `½ tr|Υ_a - Υ_b|`.
pub fn process_trace_distance(a: &ProcessMatrix, b: &ProcessMatrix) -> f64 {
    let d = a.matrix - b.matrix;
    let d = (d + d.adjoint()) * c(0.5, 0.0);
    0.5 * d
        .symmetric_eigenvalues()
        .iter()
        .map(|e| e.abs())
        .sum::<f64>()
}
