//! Two-point-measurement statistics of the engine.
//!
//! Distributions are kept as exact atom lists. Each of the sixteen histories
//! `(n, m, k, j)` records a cold-state level `n`, the level `m` reached after
//! the expansion, the hot-state level `k` and the level `j` reached after the
//! compression. Its internal-energy change is
//! `ε_m^τ - ε_n^0 + ε_j^0 - ε_k^τ`, and the work extracted along it is the
//! negative of that change.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spin::{eigensystem, energy_of, polarization, DriveProtocol, ThermalParams};
use crate::C64;

/// Atoms closer than this (in peV) are merged.
pub const MERGE_TOL_PEV: f64 = 1e-9;
const NORMALIZATION_TOL: f64 = 1e-12;
const POPULATION_TOL: f64 = 1e-9;
/// Recovered weights below this are treated as empty grid points.
const INVERSION_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnergyKind {
    Work,
    Heat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

impl Atom {
    pub fn new(value: f64, prob: f64) -> Self {
        Atom { value, prob }
    }
}

/// Finite probability distribution over energies, sorted by value.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDistribution {
    atoms: Vec<Atom>,
    kind: EnergyKind,
}

impl EnergyDistribution {
    /// Sorts, merges atoms closer than [`MERGE_TOL_PEV`] and drops empty ones.
    pub fn new(kind: EnergyKind, atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let mut raw: Vec<Atom> = atoms.into_iter().collect();
        if raw
            .iter()
            .any(|a| !a.value.is_finite() || !a.prob.is_finite())
        {
            return Err(Error::InvalidDistribution("non-finite atom"));
        }
        if raw.iter().any(|a| a.prob < 0.0) {
            return Err(Error::InvalidDistribution("negative probability"));
        }
        let total: f64 = raw.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(
                "probabilities do not sum to one",
            ));
        }
        raw.sort_by(|a, b| a.value.total_cmp(&b.value));

        let mut atoms: Vec<Atom> = Vec::with_capacity(raw.len());
        for atom in raw {
            match atoms.last_mut() {
                Some(last) if atom.value - last.value < MERGE_TOL_PEV => {
                    let prob = last.prob + atom.prob;
                    if prob > 0.0 {
                        last.value = (last.value * last.prob + atom.value * atom.prob) / prob;
                    }
                    last.prob = prob;
                }
                _ => atoms.push(atom),
            }
        }
        atoms.retain(|a| a.prob > 0.0);
        Ok(EnergyDistribution { atoms, kind })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn kind(&self) -> EnergyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob).sum()
    }

    /// Weight of the atom within `tol` of `value`, or zero.
    pub fn probability_at(&self, value: f64, tol: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.value - value).abs() <= tol)
            .map(|a| a.prob)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob * a.value).sum()
    }
}

/// Exact mean of a distribution.
pub fn mean(dist: &EnergyDistribution) -> f64 {
    dist.mean()
}

/// Level energies (ground first) of the cold Hamiltonian `H_exp(0)` and the hot
/// Hamiltonian `H_exp(tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectra {
    pub cold: [f64; 2],
    pub hot: [f64; 2],
}

impl Spectra {
    pub fn of_protocol(p: &DriveProtocol) -> Result<Self> {
        Ok(Spectra {
            cold: eigensystem(&p.cold_hamiltonian())?.energies,
            hot: eigensystem(&p.hot_hamiltonian())?.energies,
        })
    }
}

/// One of the sixteen level histories of a cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryHistory {
    /// `(n, m, k, j)`.
    pub levels: [usize; 4],
    pub delta_e: f64,
    pub prob: f64,
    /// `(p_n, p_{m|n}, q_k, q_{j|k})`; `prob` is their product.
    pub factors: [f64; 4],
}

impl TrajectoryHistory {
    /// Work extracted along this history.
    pub fn work(&self) -> f64 {
        -self.delta_e
    }
}

/// `p_{m|n} = ξ + (1 - 2ξ) δ_{mn}` as a row-stochastic matrix indexed `[n][m]`.
pub fn transition_matrix(xi: f64) -> Result<[[f64; 2]; 2]> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::OutOfRange {
            name: "xi",
            value: xi,
            reason: "transition probability must lie in [0, 1]",
        });
    }
    Ok([[1.0 - xi, xi], [xi, 1.0 - xi]])
}

fn check_populations(p: [f64; 2]) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0)) || (p[0] + p[1] - 1.0).abs() > POPULATION_TOL {
        return Err(Error::InvalidDistribution(
            "populations must be nonnegative and sum to one",
        ));
    }
    Ok(())
}

/// Level populations after a drive with flip probability `xi`.
pub fn post_drive_populations(p: [f64; 2], xi: f64) -> Result<[f64; 2]> {
    let t = transition_matrix(xi)?;
    Ok([
        p[0] * t[0][0] + p[1] * t[1][0],
        p[0] * t[0][1] + p[1] * t[1][1],
    ])
}

/// All sixteen histories for cold populations `cold`, hot populations `hot`
/// and a common flip probability `xi` for both strokes.
pub fn enumerate_histories(
    cold: [f64; 2],
    hot: [f64; 2],
    xi: f64,
    spectra: &Spectra,
) -> Result<Vec<TrajectoryHistory>> {
    check_populations(cold)?;
    check_populations(hot)?;
    let t = transition_matrix(xi)?;
    let mut out = Vec::with_capacity(16);
    for n in 0..2 {
        for m in 0..2 {
            for k in 0..2 {
                for j in 0..2 {
                    let factors = [cold[n], t[n][m], hot[k], t[k][j]];
                    out.push(TrajectoryHistory {
                        levels: [n, m, k, j],
                        delta_e: spectra.hot[m] - spectra.cold[n] + spectra.cold[j]
                            - spectra.hot[k],
                        prob: factors.iter().product(),
                        factors,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Extracted-work distribution `P_eng(W)` of a set of histories.
pub fn work_distribution(histories: &[TrajectoryHistory]) -> Result<EnergyDistribution> {
    EnergyDistribution::new(
        EnergyKind::Work,
        histories.iter().map(|h| Atom::new(h.work(), h.prob)),
    )
}

/// Extracted-work distribution of a single drive stroke from the spectrum
/// `from` to the spectrum `to`, starting in `populations`.
pub fn stroke_work_distribution(
    populations: [f64; 2],
    xi: f64,
    from: [f64; 2],
    to: [f64; 2],
) -> Result<EnergyDistribution> {
    check_populations(populations)?;
    let t = transition_matrix(xi)?;
    let atoms = (0..2)
        .flat_map(|n| (0..2).map(move |m| Atom::new(from[n] - to[m], populations[n] * t[n][m])));
    EnergyDistribution::new(EnergyKind::Work, atoms)
}

/// Distribution of the sum of two independent variables.
pub fn convolve(a: &EnergyDistribution, b: &EnergyDistribution) -> Result<EnergyDistribution> {
    let atoms = a.atoms().iter().flat_map(|x| {
        b.atoms()
            .iter()
            .map(move |y| Atom::new(x.value + y.value, x.prob * y.prob))
    });
    EnergyDistribution::new(a.kind(), atoms)
}

/// Heat absorbed from the hot source: the state leaves the expansion with
/// populations `s` and is replaced by the hot Gibbs populations `q0`, so
/// `Q = ε_k - ε_m` with weight `s_m q_k`.
pub fn heat_distribution(
    s: [f64; 2],
    q0: [f64; 2],
    hot_spectrum: [f64; 2],
) -> Result<EnergyDistribution> {
    check_populations(s)?;
    check_populations(q0)?;
    let atoms = (0..2).flat_map(|m| {
        (0..2).map(move |k| Atom::new(hot_spectrum[k] - hot_spectrum[m], s[m] * q0[k]))
    });
    EnergyDistribution::new(EnergyKind::Heat, atoms)
}

/// Samples of `χ(u) = Σ p e^{iuE}` on a grid of `u` values (1/peV).
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSamples {
    pub kind: EnergyKind,
    pub u: Vec<f64>,
    pub values: Vec<C64>,
}

pub fn characteristic_function(dist: &EnergyDistribution, u_grid: &[f64]) -> CharacteristicSamples {
    let values = u_grid
        .iter()
        .map(|&u| {
            dist.atoms()
                .iter()
                .map(|a| C64::from_polar(a.prob, u * a.value))
                .sum()
        })
        .collect();
    CharacteristicSamples {
        kind: dist.kind(),
        u: u_grid.to_vec(),
        values,
    }
}

/// `n` samples `u_k = k·du` whose inversion grid has spacing `energy_step`.
pub fn aligned_u_grid(energy_step: f64, n: usize) -> Vec<f64> {
    let du = 2.0 * PI / (n as f64 * energy_step);
    (0..n).map(|k| k as f64 * du).collect()
}

/// Discrete inversion on a uniform grid `u_k = u_0 + k·du`.
///
/// The implied energy grid is `E_j = j·2π/(N du)` for
/// `j = -N/2 .. N - N/2 - 1`; atoms are recovered exactly when they sit on
/// that grid.
pub fn invert_characteristic(samples: &CharacteristicSamples) -> Result<EnergyDistribution> {
    let n = samples.u.len();
    if n < 2 || samples.values.len() != n {
        return Err(Error::NonUniformGrid);
    }
    let u0 = samples.u[0];
    let du = samples.u[1] - u0;
    if !(du.abs() > 0.0) {
        return Err(Error::NonUniformGrid);
    }
    let tol = 1e-9 * du.abs() * n as f64;
    for (k, &u) in samples.u.iter().enumerate() {
        if (u - (u0 + k as f64 * du)).abs() > tol {
            return Err(Error::NonUniformGrid);
        }
    }
    let step = 2.0 * PI / (n as f64 * du);
    let half = (n / 2) as i64;
    let mut atoms = Vec::new();
    for j in -half..(n as i64 - half) {
        let energy = j as f64 * step;
        let weight: C64 = samples
            .u
            .iter()
            .zip(&samples.values)
            .map(|(&u, &chi)| chi * C64::from_polar(1.0, -u * energy))
            .sum::<C64>()
            / n as f64;
        if weight.re > INVERSION_FLOOR {
            atoms.push(Atom::new(energy, weight.re));
        }
    }
    let total: f64 = atoms.iter().map(|a| a.prob).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidDistribution("inversion recovered no weight"));
    }
    for a in &mut atoms {
        a.prob /= total;
    }
    EnergyDistribution::new(samples.kind, atoms)
}

fn polarizations(p: &DriveProtocol, t: &ThermalParams) -> (f64, f64) {
    (
        polarization(energy_of(p.nu1()), t.kt_cold()),
        polarization(energy_of(p.nu2()), t.kt_hot()),
    )
}

/// Closed-form mean extracted work per cycle.
///
/// Gibbs polarizations enter as `tanh(βhν/2)`, the population difference of
/// levels at `±hν/2`.
pub fn mean_work_closed_form(p: &DriveProtocol, t: &ThermalParams, xi: f64) -> f64 {
    let (cold, hot) = polarizations(p, t);
    let h = energy_of(1.0);
    0.5 * h * (p.nu2() - p.nu1()) * (cold - hot) - h * xi * (p.nu1() * hot + p.nu2() * cold)
}

/// Closed-form mean heat absorbed from the hot source.
pub fn mean_heat_closed_form(p: &DriveProtocol, t: &ThermalParams, xi: f64) -> f64 {
    let (cold, hot) = polarizations(p, t);
    let gap2 = energy_of(p.nu2());
    0.5 * gap2 * (cold - hot) - xi * gap2 * cold
}

/// Sum of unit-area Lorentzians of full width `fwhm`, one per atom, sampled
/// on `grid`.
pub fn lorentzian_broaden(dist: &EnergyDistribution, fwhm: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if !(fwhm > 0.0) || !fwhm.is_finite() {
        return Err(Error::OutOfRange {
            name: "fwhm",
            value: fwhm,
            reason: "line width must be positive",
        });
    }
    let hw = 0.5 * fwhm;
    Ok(grid
        .iter()
        .map(|&e| {
            dist.atoms()
                .iter()
                .map(|a| {
                    let x = e - a.value;
                    a.prob * hw / (PI * (x * x + hw * hw))
                })
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{gibbs_state, DEFAULT_NU1_KHZ, DEFAULT_NU2_KHZ};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference_spectra() -> Spectra {
        Spectra::of_protocol(&DriveProtocol::reference(100.0).unwrap()).unwrap()
    }

    fn gibbs_pops(gap: f64, kt: f64) -> [f64; 2] {
        let w = libm::exp(-gap / kt);
        [1.0 / (1.0 + w), w / (1.0 + w)]
    }

    #[test]
    fn transition_matrix_cases() {
        assert_eq!(transition_matrix(0.0).unwrap(), [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(transition_matrix(0.5).unwrap(), [[0.5, 0.5], [0.5, 0.5]]);
        let t = transition_matrix(0.38).unwrap();
        assert_abs_diff_eq!(t[0][0], 0.62, epsilon = 1e-15);
        assert_abs_diff_eq!(t[1][0], 0.38, epsilon = 1e-15);
        assert!(transition_matrix(1.2).is_err());
        assert!(transition_matrix(-0.1).is_err());
    }

    #[test]
    fn transitionless_histories() {
        let h = enumerate_histories([0.78, 0.22], [0.6, 0.4], 0.0, &reference_spectra()).unwrap();
        assert_eq!(h.len(), 16);
        let live: Vec<_> = h.iter().filter(|x| x.prob > 0.0).collect();
        assert_eq!(live.len(), 4);
        assert!(live
            .iter()
            .all(|x| x.levels[0] == x.levels[1] && x.levels[2] == x.levels[3]));
    }

    #[test]
    fn history_energies_match_reference_peaks() {
        let h = enumerate_histories([0.78, 0.22], [0.6, 0.4], 0.3, &reference_spectra()).unwrap();
        let peaks = [0.0, 6.62, 8.27, 14.89, 23.16];
        for x in &h {
            let e = x.delta_e.abs();
            assert!(peaks.iter().any(|p| (p - e).abs() < 0.01), "unexpected {e}");
            let product: f64 = x.factors.iter().product();
            assert_abs_diff_eq!(product, x.prob, epsilon = 1e-12);
        }
    }

    #[test]
    fn transitionless_work_has_three_atoms() {
        let sp = reference_spectra();
        let h = enumerate_histories(gibbs_pops(8.2713, 6.6), gibbs_pops(14.888, 40.5), 0.0, &sp)
            .unwrap();
        let w = work_distribution(&h).unwrap();
        assert_eq!(w.len(), 3);
        let step = energy_of(DEFAULT_NU2_KHZ - DEFAULT_NU1_KHZ);
        assert_abs_diff_eq!(w.atoms()[0].value, -step, epsilon = 1e-12);
        assert_abs_diff_eq!(w.atoms()[1].value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.atoms()[2].value, step, epsilon = 1e-12);
    }

    #[test]
    fn engine_work_has_nine_atoms() {
        let sp = reference_spectra();
        let h = enumerate_histories(gibbs_pops(8.2713, 6.6), gibbs_pops(14.888, 40.5), 0.38, &sp)
            .unwrap();
        let w = work_distribution(&h).unwrap();
        assert_eq!(w.len(), 9);
        let expected = [-23.16, -14.89, -8.27, -6.62, 0.0, 6.62, 8.27, 14.89, 23.16];
        for (a, e) in w.atoms().iter().zip(expected) {
            assert!((a.value - e).abs() < 0.01, "{} vs {e}", a.value);
        }
    }

    #[test]
    fn equal_populations_give_symmetric_work() {
        let sp = reference_spectra();
        let h = enumerate_histories([0.7, 0.3], [0.7, 0.3], 0.0, &sp).unwrap();
        let w = work_distribution(&h).unwrap();
        assert_abs_diff_eq!(w.mean(), 0.0, epsilon = 1e-12);
        for a in w.atoms() {
            assert_abs_diff_eq!(a.prob, w.probability_at(-a.value, 1e-9), epsilon = 1e-15);
        }
    }

    #[test]
    fn characteristic_function_basics() {
        let d = EnergyDistribution::new(EnergyKind::Work, [Atom::new(2.5, 1.0)]).unwrap();
        let grid = [0.0, 0.3, -1.1];
        let s = characteristic_function(&d, &grid);
        assert_eq!(s.values[0], C64::new(1.0, 0.0));
        for (u, v) in grid.iter().zip(&s.values) {
            assert!((v - C64::from_polar(1.0, u * 2.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn characteristic_factorizes_over_strokes() {
        let p = DriveProtocol::reference(100.0).unwrap();
        let sp = Spectra::of_protocol(&p).unwrap();
        let cold = gibbs_pops(sp.cold[1] - sp.cold[0], 6.6);
        let hot = gibbs_pops(sp.hot[1] - sp.hot[0], 40.5);
        let xi = 0.27;
        let expansion = stroke_work_distribution(cold, xi, sp.cold, sp.hot).unwrap();
        let compression = stroke_work_distribution(hot, xi, sp.hot, sp.cold).unwrap();
        let engine = work_distribution(&enumerate_histories(cold, hot, xi, &sp).unwrap()).unwrap();
        let conv = convolve(&expansion, &compression).unwrap();
        assert_eq!(conv.len(), engine.len());

        let grid: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.037).collect();
        let ce = characteristic_function(&expansion, &grid);
        let cc = characteristic_function(&compression, &grid);
        let cg = characteristic_function(&engine, &grid);
        for i in 0..grid.len() {
            assert!((ce.values[i] * cc.values[i] - cg.values[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn inversion_simple_cases() {
        let delta = EnergyDistribution::new(EnergyKind::Work, [Atom::new(0.0, 1.0)]).unwrap();
        let s = characteristic_function(&delta, &aligned_u_grid(1.0, 32));
        assert!(s
            .values
            .iter()
            .all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-15));
        let back = invert_characteristic(&s).unwrap();
        assert_eq!(back.len(), 1);
        assert_abs_diff_eq!(back.atoms()[0].value, 0.0, epsilon = 1e-12);

        let pair = EnergyDistribution::new(
            EnergyKind::Work,
            [Atom::new(-3.0, 0.5), Atom::new(3.0, 0.5)],
        )
        .unwrap();
        let s = characteristic_function(&pair, &aligned_u_grid(1.5, 16));
        for (u, v) in s.u.iter().zip(&s.values) {
            assert!((v.re - libm::cos(3.0 * u)).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
        let back = invert_characteristic(&s).unwrap();
        assert_eq!(back.len(), 2);
        assert_abs_diff_eq!(back.atoms()[0].prob, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(back.atoms()[1].value, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn inversion_rejects_nonuniform_grid() {
        let d = EnergyDistribution::new(EnergyKind::Work, [Atom::new(0.0, 1.0)]).unwrap();
        let s = characteristic_function(&d, &[0.0, 0.1, 0.25, 0.3]);
        assert_eq!(invert_characteristic(&s), Err(Error::NonUniformGrid));
    }

    #[test]
    fn engine_distribution_round_trips() {
        let sp = reference_spectra();
        let h = enumerate_histories(gibbs_pops(8.2713, 6.6), gibbs_pops(14.888, 40.5), 0.38, &sp)
            .unwrap();
        let w = work_distribution(&h).unwrap();
        // Every reference peak is a multiple of h·0.4 kHz.
        let samples = characteristic_function(&w, &aligned_u_grid(energy_of(0.4), 64));
        let back = invert_characteristic(&samples).unwrap();
        assert_eq!(back.len(), w.len());
        for (a, b) in w.atoms().iter().zip(back.atoms()) {
            assert!((a.value - b.value).abs() < 1e-9);
            assert!((a.prob - b.prob).abs() < 1e-6);
        }
    }

    #[test]
    fn heat_distribution_support_and_mean() {
        let gap2 = energy_of(DEFAULT_NU2_KHZ);
        let sp = reference_spectra();
        let q0 = gibbs_pops(gap2, 40.5);
        let d = heat_distribution(q0, q0, sp.hot).unwrap();
        assert_eq!(d.len(), 3);
        assert_abs_diff_eq!(d.mean(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.atoms()[0].value, -14.888, epsilon = 1e-3);
        assert_abs_diff_eq!(d.atoms()[2].value, 14.888, epsilon = 1e-3);

        // Slow drive: populations stay close to the cold Gibbs ones and heat
        // flows in from the hot source.
        let p0 = gibbs_pops(energy_of(DEFAULT_NU1_KHZ), 6.6);
        let s = post_drive_populations(p0, 0.0015).unwrap();
        let d = heat_distribution(s, q0, sp.hot).unwrap();
        assert!(d.mean() > 0.0);
        let closed = mean_heat_closed_form(
            &DriveProtocol::reference(700.0).unwrap(),
            &ThermalParams::option_b(),
            0.0015,
        );
        assert_abs_diff_eq!(d.mean(), closed, epsilon = 1e-10);
    }

    #[test]
    fn closed_forms_special_cases() {
        // Equal polarizations: kT scales with the gap.
        let p = DriveProtocol::reference(100.0).unwrap();
        let t = ThermalParams::new(6.6, 6.6 * 1.8).unwrap();
        assert_abs_diff_eq!(mean_work_closed_form(&p, &t, 0.0), 0.0, epsilon = 1e-14);

        let t = ThermalParams::option_b();
        let eta = mean_work_closed_form(&p, &t, 0.0) / mean_heat_closed_form(&p, &t, 0.0);
        assert_abs_diff_eq!(eta, 1.0 - 2.0 / 3.6, epsilon = 1e-12);
        let w0 = mean_work_closed_form(&p, &t, 0.0);
        let w1 = mean_work_closed_form(&p, &t, 0.1);
        assert!(w1 < w0);
    }

    #[test]
    fn transitionless_mean_matches_closed_form() {
        let p = DriveProtocol::reference(100.0).unwrap();
        let t = ThermalParams::option_b();
        let sp = Spectra::of_protocol(&p).unwrap();
        let cold = gibbs_state(&p.cold_hamiltonian(), t.kt_cold()).unwrap();
        let hot = gibbs_state(&p.hot_hamiltonian(), t.kt_hot()).unwrap();
        let cold = cold.populations(&eigensystem(&p.cold_hamiltonian()).unwrap());
        let hot = hot.populations(&eigensystem(&p.hot_hamiltonian()).unwrap());
        let w = work_distribution(&enumerate_histories(cold, hot, 0.0, &sp).unwrap()).unwrap();
        assert_abs_diff_eq!(
            mean(&w),
            mean_work_closed_form(&p, &t, 0.0),
            epsilon = 1e-10
        );
    }

    #[test]
    fn lorentzian_shape() {
        let d = EnergyDistribution::new(EnergyKind::Work, [Atom::new(1.0, 1.0)]).unwrap();
        let curve = lorentzian_broaden(&d, 0.8, &[1.0, 0.6, 1.4]).unwrap();
        assert_abs_diff_eq!(curve[0], 2.0 / (PI * 0.8), epsilon = 1e-15);
        assert_abs_diff_eq!(curve[1], 0.5 * curve[0], epsilon = 1e-15);
        assert_abs_diff_eq!(curve[1], curve[2], epsilon = 1e-15);
        assert!(lorentzian_broaden(&d, 0.0, &[0.0]).is_err());

        let sp = reference_spectra();
        let h = enumerate_histories([0.78, 0.22], [0.6, 0.4], 0.38, &sp).unwrap();
        let w = work_distribution(&h).unwrap();
        let step = 0.01;
        let grid: Vec<f64> = (-10_000..=10_000).map(|k| k as f64 * step).collect();
        let area: f64 = lorentzian_broaden(&w, 1.2, &grid)
            .unwrap()
            .iter()
            .sum::<f64>()
            * step;
        assert!((area - 1.0).abs() < 0.01, "area {area}");
    }

    #[test]
    fn distribution_validation() {
        assert!(EnergyDistribution::new(EnergyKind::Work, [Atom::new(0.0, 0.5)]).is_err());
        assert!(EnergyDistribution::new(
            EnergyKind::Work,
            [Atom::new(0.0, 1.5), Atom::new(1.0, -0.5)]
        )
        .is_err());
        let d = EnergyDistribution::new(
            EnergyKind::Heat,
            [
                Atom::new(1.0, 0.25),
                Atom::new(1.0 + 1e-12, 0.25),
                Atom::new(-1.0, 0.5),
            ],
        )
        .unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.atoms()[0].value, -1.0);
        assert_abs_diff_eq!(d.atoms()[1].prob, 0.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn histories_normalized_and_mean_consistent(
            p0 in 0.0..1.0f64, q0 in 0.0..1.0f64, xi in 0.0..1.0f64
        ) {
            let sp = reference_spectra();
            let h = enumerate_histories([p0, 1.0 - p0], [q0, 1.0 - q0], xi, &sp).unwrap();
            let total: f64 = h.iter().map(|x| x.prob).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let w = work_distribution(&h).unwrap();
            prop_assert!(w.len() <= 9);
            let direct: f64 = h.iter().map(|x| x.prob * x.work()).sum();
            prop_assert!((w.mean() - direct).abs() < 1e-12);
        }

        #[test]
        fn characteristic_symmetries(p0 in 0.0..1.0f64, q0 in 0.0..1.0f64, xi in 0.0..1.0f64, u in -3.0..3.0f64) {
            let sp = reference_spectra();
            let w = work_distribution(&enumerate_histories([p0, 1.0 - p0], [q0, 1.0 - q0], xi, &sp).unwrap()).unwrap();
            let s = characteristic_function(&w, &[0.0, u, -u]);
            prop_assert!((s.values[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
            prop_assert!((s.values[1] - s.values[2].conj()).norm() < 1e-12);
        }
    }
}
