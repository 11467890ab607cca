//! Two-level-system primitives.
//!
//! Unit convention: energies in peV, frequencies in kHz, times in µs. The
//! Planck constant is fixed at [`PLANCK_PEV_PER_KHZ`] so that a gap frequency
//! `nu` corresponds to the energy `PLANCK_PEV_PER_KHZ * nu`. Boltzmann's
//! constant is absorbed into temperatures, which are quoted as `kT` in peV.

use core::f64::consts::PI;

use log::warn;
use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::C64;

/// h in peV per kHz (equivalently peV·ms).
pub const PLANCK_PEV_PER_KHZ: f64 = 4.135667696;

/// ħ in peV·µs.
pub const HBAR_PEV_US: f64 = PLANCK_PEV_PER_KHZ * 1.0e3 / (2.0 * PI);

pub const DEFAULT_NU1_KHZ: f64 = 2.0;
pub const DEFAULT_NU2_KHZ: f64 = 3.6;

/// Cold-source spin temperature of the reference experiment.
pub const DEFAULT_KT_COLD_PEV: f64 = 6.6;
/// Hot-source spin temperature, preparation A.
pub const KT_HOT_OPTION_A_PEV: f64 = 21.5;
/// Hot-source spin temperature, preparation B.
pub const KT_HOT_OPTION_B_PEV: f64 = 40.5;

pub(crate) const HERMITIAN_TOL: f64 = 1e-12;
const DEGENERATE_GAP_PEV: f64 = 1e-14;

/// Energy in peV of a frequency in kHz.
pub fn energy_of(nu_khz: f64) -> f64 {
    PLANCK_PEV_PER_KHZ * nu_khz
}

/// Inverse temperature `1/kT`; `kT = +inf` maps to zero.
pub fn beta(kt: f64) -> f64 {
    if kt.is_infinite() {
        0.0
    } else {
        1.0 / kt
    }
}

/// Gibbs polarization `p0 - p1 = tanh(gap / 2kT)` of a two-level system.
pub fn polarization(gap: f64, kt: f64) -> f64 {
    libm::tanh(0.5 * gap * beta(kt))
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn max_abs2(m: &Matrix2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// A 2×2 complex operator with a cached Hermiticity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator {
    matrix: Matrix2<C64>,
    hermitian: bool,
}

impl Operator {
    pub fn new(matrix: Matrix2<C64>) -> Self {
        let hermitian = max_abs2(&(matrix - matrix.adjoint())) <= HERMITIAN_TOL;
        Operator { matrix, hermitian }
    }

    /// Hermitian operator `a0·1 + a·σ`.
    pub fn from_bloch(a0: f64, a: [f64; 3]) -> Self {
        Operator::new(Matrix2::new(
            c(a0 + a[2], 0.0),
            c(a[0], -a[1]),
            c(a[0], a[1]),
            c(a0 - a[2], 0.0),
        ))
    }

    pub fn identity() -> Self {
        Operator::from_bloch(1.0, [0.0; 3])
    }

    pub fn sigma_x() -> Self {
        Operator::from_bloch(0.0, [1.0, 0.0, 0.0])
    }

    pub fn sigma_y() -> Self {
        Operator::from_bloch(0.0, [0.0, 1.0, 0.0])
    }

    pub fn sigma_z() -> Self {
        Operator::from_bloch(0.0, [0.0, 0.0, 1.0])
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn scaled(&self, factor: f64) -> Operator {
        Operator::new(self.matrix * c(factor, 0.0))
    }

    /// `(a0, [ax, ay, az])` with `self = a0·1 + a·σ`; imaginary parts of the
    /// coefficients are discarded, so this is only meaningful for Hermitian input.
    pub fn bloch(&self) -> (f64, [f64; 3]) {
        let m = &self.matrix;
        let a0 = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
        let az = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
        let off = 0.5 * (m[(1, 0)] + m[(0, 1)].conj());
        (a0, [off.re, off.im, az])
    }

    /// `tr(self · rho)`, real for Hermitian operators.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        (self.matrix * rho.matrix()).trace().re
    }
}

impl core::ops::Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::new(-self.matrix)
    }
}

impl core::ops::Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator::new(self.matrix + rhs.matrix)
    }
}

/// Ascending energies and orthonormal eigenvectors of a nondegenerate
/// Hermitian 2×2 operator. Each eigenvector has its first nonzero component
/// real and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigensystem {
    pub energies: [f64; 2],
    pub vectors: [Vector2<C64>; 2],
}

impl Eigensystem {
    pub fn gap(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    pub fn ground(&self) -> &Vector2<C64> {
        &self.vectors[0]
    }

    pub fn excited(&self) -> &Vector2<C64> {
        &self.vectors[1]
    }
}

fn fix_phase(v: Vector2<C64>) -> Vector2<C64> {
    let v = v / c(v.norm(), 0.0);
    let lead = if v[0].norm() > 1e-14 { v[0] } else { v[1] };
    v * (lead.conj() / lead.norm())
}

/// Eigen-decomposition of a Hermitian 2×2 matrix that tolerates degeneracy
/// (falls back to the computational basis when the matrix is scalar).
pub(crate) fn hermitian_eigen(m: &Matrix2<C64>) -> ([f64; 2], [Vector2<C64>; 2]) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let mid = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = libm::hypot(half, b.norm());
    let energies = [mid - r, mid + r];
    if r <= 0.5 * DEGENERATE_GAP_PEV {
        let e0 = Vector2::new(c(1.0, 0.0), c(0.0, 0.0));
        let e1 = Vector2::new(c(0.0, 0.0), c(1.0, 0.0));
        return (energies, [e0, e1]);
    }
    let vector_for = |lambda: f64| {
        let from_row0 = Vector2::new(b, c(lambda - a, 0.0));
        let from_row1 = Vector2::new(c(lambda - d, 0.0), b.conj());
        if from_row0.norm() >= from_row1.norm() {
            fix_phase(from_row0)
        } else {
            fix_phase(from_row1)
        }
    };
    (energies, [vector_for(energies[0]), vector_for(energies[1])])
}

/// Ascending eigen-decomposition with the deterministic phase convention.
pub fn eigensystem(h: &Operator) -> Result<Eigensystem> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian);
    }
    let (energies, vectors) = hermitian_eigen(h.matrix());
    let gap = energies[1] - energies[0];
    if gap < DEGENERATE_GAP_PEV {
        return Err(Error::DegenerateHamiltonian { gap });
    }
    Ok(Eigensystem { energies, vectors })
}

/// A valid qubit state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    matrix: Matrix2<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: Matrix2<C64>) -> Result<Self> {
        if max_abs2(&(matrix - matrix.adjoint())) > HERMITIAN_TOL {
            return Err(Error::InvalidState("not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState("trace differs from one"));
        }
        let (eig, _) = hermitian_eigen(&matrix);
        if eig[0] < -HERMITIAN_TOL {
            return Err(Error::InvalidState("negative eigenvalue"));
        }
        Ok(DensityMatrix { matrix })
    }

    /// Wraps a matrix known to be a state up to rounding, Hermitizing it.
    pub(crate) fn from_trusted(matrix: Matrix2<C64>) -> Self {
        DensityMatrix {
            matrix: (matrix + matrix.adjoint()) * c(0.5, 0.0),
        }
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            matrix: Matrix2::identity() * c(0.5, 0.0),
        }
    }

    /// `Σ p_i |v_i⟩⟨v_i|` in the eigenbasis of `basis`.
    pub fn from_populations(basis: &Eigensystem, populations: [f64; 2]) -> Result<Self> {
        let m = basis.vectors[0] * basis.vectors[0].adjoint() * c(populations[0], 0.0)
            + basis.vectors[1] * basis.vectors[1].adjoint() * c(populations[1], 0.0);
        DensityMatrix::new(m)
    }

    /// Closest valid state to an arbitrary matrix: Hermitize, clip negative
    /// eigenvalues, renormalize the trace.
    pub fn repaired(matrix: Matrix2<C64>) -> Result<Self> {
        let herm = (matrix + matrix.adjoint()) * c(0.5, 0.0);
        let (eig, vecs) = hermitian_eigen(&herm);
        let clipped = [eig[0].max(0.0), eig[1].max(0.0)];
        let total = clipped[0] + clipped[1];
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidState("no positive spectral weight"));
        }
        let m = vecs[0] * vecs[0].adjoint() * c(clipped[0] / total, 0.0)
            + vecs[1] * vecs[1].adjoint() * c(clipped[1] / total, 0.0);
        // Reconstruction rounding can leave ~1e-17 anti-Hermitian residue.
        let m = (m + m.adjoint()) * c(0.5, 0.0);
        DensityMatrix::new(m)
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.matrix
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 2] {
        hermitian_eigen(&self.matrix).0
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    /// Diagonal of the state in the eigenbasis of `basis`, ground level first.
    pub fn populations(&self, basis: &Eigensystem) -> [f64; 2] {
        let pop = |v: &Vector2<C64>| (v.adjoint() * self.matrix * v)[(0, 0)].re;
        [pop(&basis.vectors[0]), pop(&basis.vectors[1])]
    }

    /// `-tr(ρ ln ρ)` in nats.
    pub fn von_neumann_entropy(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * libm::log(p))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Expansion,
    Compression,
}

/// Linear gap ramp between `nu1` and `nu2` over a drive of length `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveProtocol {
    nu1: f64,
    nu2: f64,
    tau: f64,
    phase: Phase,
}

impl DriveProtocol {
    pub fn new(nu1: f64, nu2: f64, tau: f64, phase: Phase) -> Result<Self> {
        for (name, value) in [("nu1", nu1), ("nu2", nu2), ("tau", tau)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(DriveProtocol {
            nu1,
            nu2,
            tau,
            phase,
        })
    }

    /// Expansion from 2.0 kHz to 3.6 kHz in `tau` µs.
    pub fn reference(tau: f64) -> Result<Self> {
        DriveProtocol::new(DEFAULT_NU1_KHZ, DEFAULT_NU2_KHZ, tau, Phase::Expansion)
    }

    pub fn nu1(&self) -> f64 {
        self.nu1
    }

    pub fn nu2(&self) -> f64 {
        self.nu2
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// `r = nu2 / nu1`.
    pub fn compression_factor(&self) -> f64 {
        self.nu2 / self.nu1
    }

    pub fn with_phase(&self, phase: Phase) -> Self {
        DriveProtocol { phase, ..*self }
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        DriveProtocol::new(self.nu1, self.nu2, tau, self.phase)
    }

    /// Hamiltonian at the start of the expansion, `H_exp(0)`.
    pub fn cold_hamiltonian(&self) -> Operator {
        expansion_hamiltonian(0.0, self)
    }

    /// Hamiltonian at the end of the expansion, `H_exp(tau)`.
    pub fn hot_hamiltonian(&self) -> Operator {
        expansion_hamiltonian(self.tau, self)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.tau).contains(&t) {
            Ok(())
        } else {
            Err(Error::TimeOutsideDrive { t, tau: self.tau })
        }
    }
}

/// Spin temperatures of the cold and hot sources, as `kT` in peV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    kt_cold: f64,
    kt_hot: f64,
}

impl ThermalParams {
    /// Either temperature may be `f64::INFINITY`.
    pub fn new(kt_cold: f64, kt_hot: f64) -> Result<Self> {
        for (name, value) in [("kt_cold", kt_cold), ("kt_hot", kt_hot)] {
            if !(value > 0.0) {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    reason: "temperature must be positive",
                });
            }
        }
        Ok(ThermalParams { kt_cold, kt_hot })
    }

    pub fn option_a() -> Self {
        ThermalParams {
            kt_cold: DEFAULT_KT_COLD_PEV,
            kt_hot: KT_HOT_OPTION_A_PEV,
        }
    }

    pub fn option_b() -> Self {
        ThermalParams {
            kt_cold: DEFAULT_KT_COLD_PEV,
            kt_hot: KT_HOT_OPTION_B_PEV,
        }
    }

    pub fn kt_cold(&self) -> f64 {
        self.kt_cold
    }

    pub fn kt_hot(&self) -> f64 {
        self.kt_hot
    }

    pub fn beta_cold(&self) -> f64 {
        beta(self.kt_cold)
    }

    pub fn beta_hot(&self) -> f64 {
        beta(self.kt_hot)
    }

    /// `1 - T_cold / T_hot`.
    pub fn carnot_efficiency(&self) -> f64 {
        1.0 - self.beta_hot() / self.beta_cold()
    }
}

/// Instantaneous gap frequency in kHz. The compression phase runs the ramp
/// backwards.
pub fn gap_frequency(t: f64, p: &DriveProtocol) -> Result<f64> {
    p.check_time(t)?;
    let s = match p.phase {
        Phase::Expansion => t / p.tau,
        Phase::Compression => (p.tau - t) / p.tau,
    };
    Ok(p.nu1 * (1.0 - s) + p.nu2 * s)
}

fn expansion_hamiltonian(t: f64, p: &DriveProtocol) -> Operator {
    let s = t / p.tau;
    let nu = p.nu1 * (1.0 - s) + p.nu2 * s;
    let angle = 0.5 * PI * s;
    let amp = -0.5 * energy_of(nu);
    Operator::from_bloch(0.0, [amp * libm::cos(angle), amp * libm::sin(angle), 0.0])
}

/// Drive Hamiltonian at time `t`: the field rotates from the x axis to the y
/// axis while the gap ramps. The compression stroke is `-H_exp(tau - t)`.
pub fn drive_hamiltonian(t: f64, p: &DriveProtocol) -> Result<Operator> {
    p.check_time(t)?;
    Ok(match p.phase {
        Phase::Expansion => expansion_hamiltonian(t, p),
        Phase::Compression => -expansion_hamiltonian(p.tau - t, p),
    })
}

/// Thermal state `exp(-H/kT)/Z`; `kT = +inf` gives the maximally mixed state.
pub fn gibbs_state(h: &Operator, kt: f64) -> Result<DensityMatrix> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian);
    }
    if !(kt > 0.0) {
        return Err(Error::OutOfRange {
            name: "kT",
            value: kt,
            reason: "temperature must be positive",
        });
    }
    let (energies, vectors) = hermitian_eigen(h.matrix());
    let b = beta(kt);
    // Shift by the ground energy so the exponentials cannot overflow.
    let w1 = libm::exp(-b * (energies[1] - energies[0]));
    let z = 1.0 + w1;
    DensityMatrix::from_populations(&Eigensystem { energies, vectors }, [1.0 / z, w1 / z])
}

/// Spin temperature `kT = h·nu / ln(p0/p1)` of a population pair.
///
/// Pairs whose sum is not one are renormalized (which leaves the ratio and so
/// the temperature unchanged) and a warning is logged.
pub fn spin_temperature(p0: f64, p1: f64, nu: f64) -> Result<f64> {
    if !(p1 > 0.0) || !p0.is_finite() {
        return Err(Error::OutOfRange {
            name: "p1",
            value: p1,
            reason: "excited population must be positive",
        });
    }
    if p0 <= p1 {
        return Err(Error::NonPositiveTemperature);
    }
    let total = p0 + p1;
    if (total - 1.0).abs() > 1e-9 {
        warn!("populations sum to {total}, renormalizing");
    }
    let (p0, p1) = (p0 / total, p1 / total);
    Ok(energy_of(nu) / libm::log(p0 / p1))
}
