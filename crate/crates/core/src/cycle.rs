//! The four-stroke Otto cycle and its figures of merit.
//!
//! Strokes: the cold Gibbs state of `H_exp(0)` is driven by `U` (expansion),
//! replaced by the hot Gibbs state of `H_exp(tau)` (full thermalization), driven
//! by `V = U†` (compression) and finally rethermalized with the cold source.
//! Thermalization is instantaneous in the state description; its duration only
//! enters the cycle period used for power.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::propagator::{
    evolve_converged, propagate_state, transition_probability, UnitaryMap, DEFAULT_STEPS,
};
use crate::spin::{
    c, energy_of, gibbs_state, hermitian_eigen, polarization, DensityMatrix, DriveProtocol,
    Operator, Phase, ThermalParams,
};

/// Duration of the heating stroke in µs.
pub const DEFAULT_T_THERM_US: f64 = 7000.0;
/// Default Gaussian width of the per-element density-matrix noise.
pub const DEFAULT_REL_NOISE: f64 = 0.01;

const SUPPORT_TOL: f64 = 1e-12;
const XI_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    /// Expansion protocol; the compression is its time reverse.
    pub protocol: DriveProtocol,
    pub thermal: ThermalParams,
    /// Initial slice count for the converged propagator.
    pub n_steps: usize,
    /// Heating-stroke duration, µs.
    pub t_therm: f64,
    /// Cooling-stroke duration, µs.
    pub t_cool: f64,
}

impl CycleConfig {
    pub fn new(protocol: DriveProtocol, thermal: ThermalParams) -> Self {
        CycleConfig {
            protocol: protocol.with_phase(Phase::Expansion),
            thermal,
            n_steps: DEFAULT_STEPS,
            t_therm: DEFAULT_T_THERM_US,
            t_cool: 0.0,
        }
    }

    /// Reference drive (2.0 → 3.6 kHz) with the given hot-source preparation.
    pub fn reference(tau: f64, thermal: ThermalParams) -> Result<Self> {
        Ok(CycleConfig::new(DriveProtocol::reference(tau)?, thermal))
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Ok(CycleConfig {
            protocol: self.protocol.with_tau(tau)?,
            ..*self
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::OutOfRange {
                name: "n_steps",
                value: 0.0,
                reason: "at least one slice is required",
            });
        }
        if !(self.t_therm > 0.0) || !self.t_therm.is_finite() {
            return Err(Error::OutOfRange {
                name: "t_therm",
                value: self.t_therm,
                reason: "must be positive",
            });
        }
        if !(self.t_cool >= 0.0) || !self.t_cool.is_finite() {
            return Err(Error::OutOfRange {
                name: "t_cool",
                value: self.t_cool,
                reason: "must be nonnegative",
            });
        }
        Ok(())
    }

    /// `2·tau + t_therm + t_cool`, µs.
    pub fn period(&self) -> f64 {
        2.0 * self.protocol.tau() + self.t_therm + self.t_cool
    }
}

/// Working-medium state at the start of each stroke (and the end of the last).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleStates {
    /// Cold Gibbs state of `H_exp(0)`.
    pub eq_cold: DensityMatrix,
    /// `U ρ_eq,cold U†`.
    pub after_expansion: DensityMatrix,
    /// Hot Gibbs state of `H_exp(tau)`.
    pub eq_hot: DensityMatrix,
    /// `V ρ_eq,hot V†`.
    pub after_compression: DensityMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleReport {
    pub tau: f64,
    pub xi: f64,
    /// Mean extracted work, peV.
    pub mean_work: f64,
    pub mean_heat_hot: f64,
    pub mean_heat_cold: f64,
    /// `W / Q_hot`; `None` when no heat is exchanged with the hot source.
    pub efficiency: Option<f64>,
    pub eta_otto: f64,
    pub eta_carnot: f64,
    pub lag: Option<f64>,
    /// Entropy produced by both drives, nats.
    pub entropy_production: f64,
    /// Mean work per cycle period, peV/ms.
    pub power: f64,
    pub extraction_ok: bool,
}

/// Everything computed for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRun {
    pub report: CycleReport,
    pub states: CycleStates,
    pub cold_hamiltonian: Operator,
    pub hot_hamiltonian: Operator,
    pub expansion: UnitaryMap,
    pub compression: UnitaryMap,
}

/// `tr[ρ_a (ln ρ_a - ln ρ_b)]` in nats.
pub fn relative_entropy(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let (pa, _) = hermitian_eigen(a.matrix());
    let self_term: f64 = pa
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * libm::log(p))
        .sum();
    let (pb, vb) = hermitian_eigen(b.matrix());
    let mut cross = 0.0;
    for (mu, v) in pb.iter().zip(vb.iter()) {
        let weight = (v.adjoint() * a.matrix() * v)[(0, 0)].re;
        if *mu < SUPPORT_TOL {
            if weight > SUPPORT_TOL {
                return Err(Error::RelativeEntropyInfinite);
            }
            continue;
        }
        cross += weight * libm::log(*mu);
    }
    Ok((self_term - cross).max(0.0))
}

/// Efficiency lag `[S(ρ_τ¹‖ρ_eq,hot) + S(ρ_τ²‖ρ_eq,cold)] / (β_cold ⟨Q_hot⟩)`.
pub fn efficiency_lag(
    after_expansion: &DensityMatrix,
    eq_hot: &DensityMatrix,
    after_compression: &DensityMatrix,
    eq_cold: &DensityMatrix,
    mean_heat_hot: f64,
    beta_cold: f64,
) -> Result<f64> {
    if mean_heat_hot == 0.0 {
        return Err(Error::ZeroHeat);
    }
    if !(beta_cold > 0.0) {
        return Err(Error::OutOfRange {
            name: "beta_cold",
            value: beta_cold,
            reason: "cold source must have finite temperature",
        });
    }
    let produced =
        relative_entropy(after_expansion, eq_hot)? + relative_entropy(after_compression, eq_cold)?;
    Ok(produced / (beta_cold * mean_heat_hot))
}

/// Mean heats `(Q_hot, Q_cold)` taken from the sources.
pub fn mean_heats(states: &CycleStates, h_cold: &Operator, h_hot: &Operator) -> (f64, f64) {
    let q_hot = h_hot.expectation(&states.eq_hot) - h_hot.expectation(&states.after_expansion);
    let q_cold =
        h_cold.expectation(&states.eq_cold) - h_cold.expectation(&states.after_compression);
    (q_hot, q_cold)
}

/// Mean work extracted by both drives, from the energy changes of each stroke.
pub fn mean_work_from_states(states: &CycleStates, h_cold: &Operator, h_hot: &Operator) -> f64 {
    let expansion =
        h_hot.expectation(&states.after_expansion) - h_cold.expectation(&states.eq_cold);
    let compression =
        h_cold.expectation(&states.after_compression) - h_hot.expectation(&states.eq_hot);
    -(expansion + compression)
}

/// `Σ_drive = -β_cold ⟨Q_cold⟩ - β_hot ⟨Q_hot⟩`.
pub fn entropy_production_drive(
    states: &CycleStates,
    h_cold: &Operator,
    h_hot: &Operator,
    thermal: &ThermalParams,
) -> f64 {
    let (q_hot, q_cold) = mean_heats(states, h_cold, h_hot);
    -thermal.beta_cold() * q_cold - thermal.beta_hot() * q_hot
}

/// The same entropy production as the sum of two relative entropies.
pub fn drive_relative_entropy(states: &CycleStates) -> Result<f64> {
    Ok(relative_entropy(&states.after_expansion, &states.eq_hot)?
        + relative_entropy(&states.after_compression, &states.eq_cold)?)
}

/// `1 <= nu2/nu1 <= T_hot/T_cold`.
pub fn classical_bound_holds(p: &DriveProtocol, t: &ThermalParams) -> bool {
    let r = p.compression_factor();
    r >= 1.0 && r <= t.kt_hot() / t.kt_cold()
}

/// Largest transition probability that still allows work extraction; zero when
/// the classical bound fails.
pub fn extraction_bound(p: &DriveProtocol, t: &ThermalParams) -> f64 {
    if !classical_bound_holds(p, t) {
        return 0.0;
    }
    let cold = polarization(energy_of(p.nu1()), t.kt_cold());
    let hot = polarization(energy_of(p.nu2()), t.kt_hot());
    let num = (p.nu2() - p.nu1()) * (cold - hot);
    let den = 2.0 * (p.nu1() * hot + p.nu2() * cold);
    if den > 0.0 {
        (num / den).max(0.0)
    } else {
        0.0
    }
}

/// Smallest hot-source temperature for which work can be extracted at
/// transition probability `xi`; `None` when `xi` exceeds the infinite-temperature
/// limit `(1 - nu1/nu2)/2`.
pub fn critical_hot_temperature(p: &DriveProtocol, kt_cold: f64, xi: f64) -> Result<Option<f64>> {
    let r = p.compression_factor();
    let lo_kt = r * kt_cold;
    if xi <= 0.0 {
        return Ok(Some(lo_kt));
    }
    if r <= 1.0 || xi >= 0.5 * (1.0 - 1.0 / r) {
        return Ok(None);
    }
    let bound = |kt_hot: f64| -> Result<f64> {
        Ok(extraction_bound(p, &ThermalParams::new(kt_cold, kt_hot)?))
    };
    let mut lo = lo_kt;
    let mut hi = 2.0 * lo_kt;
    while bound(hi)? <= xi {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Ok(None);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound(mid)? > xi {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(Some(hi))
}

/// Efficiency as a function of the transition probability,
/// `1 - (nu1/nu2)(1 - 2ξF)/(1 + 2ξG)` with `F = P_hot/(P_hot - P_cold)` and
/// `G = F·P_cold/P_hot`, where `P = tanh(βhν/2)`.
pub fn efficiency_closed_form(p: &DriveProtocol, t: &ThermalParams, xi: f64) -> Result<f64> {
    let cold = polarization(energy_of(p.nu1()), t.kt_cold());
    let hot = polarization(energy_of(p.nu2()), t.kt_hot());
    let spread = hot - cold;
    if spread.abs() < 1e-15 {
        return Err(Error::EfficiencyUndefined("equal polarizations"));
    }
    let f = hot / spread;
    let g = cold / spread;
    let den = 1.0 + 2.0 * xi * g;
    if den == 0.0 {
        return Err(Error::EfficiencyUndefined("no heat absorbed"));
    }
    Ok(1.0 - p.nu1() / p.nu2() * (1.0 - 2.0 * xi * f) / den)
}

fn figures_of_merit(
    cfg: &CycleConfig,
    states: &CycleStates,
    h_cold: &Operator,
    h_hot: &Operator,
    xi: f64,
) -> Result<CycleReport> {
    let (q_hot, q_cold) = mean_heats(states, h_cold, h_hot);
    let work = mean_work_from_states(states, h_cold, h_hot);
    let beta_cold = cfg.thermal.beta_cold();
    let lag = if q_hot == 0.0 || beta_cold == 0.0 {
        None
    } else {
        Some(efficiency_lag(
            &states.after_expansion,
            &states.eq_hot,
            &states.after_compression,
            &states.eq_cold,
            q_hot,
            beta_cold,
        )?)
    };
    Ok(CycleReport {
        tau: cfg.protocol.tau(),
        xi,
        mean_work: work,
        mean_heat_hot: q_hot,
        mean_heat_cold: q_cold,
        efficiency: (q_hot != 0.0).then(|| work / q_hot),
        eta_otto: 1.0 - cfg.protocol.nu1() / cfg.protocol.nu2(),
        eta_carnot: cfg.thermal.carnot_efficiency(),
        lag,
        entropy_production: entropy_production_drive(states, h_cold, h_hot, &cfg.thermal),
        power: work / cfg.period() * 1.0e3,
        extraction_ok: work > 0.0,
    })
}

/// Simulates one cycle and keeps the intermediate states and propagators.
pub fn simulate_cycle(cfg: &CycleConfig) -> Result<CycleRun> {
    cfg.validate()?;
    let expansion_protocol = cfg.protocol.with_phase(Phase::Expansion);
    let h_cold = expansion_protocol.cold_hamiltonian();
    let h_hot = expansion_protocol.hot_hamiltonian();
    let u = evolve_converged(&expansion_protocol, cfg.n_steps)?;
    let v = evolve_converged(
        &expansion_protocol.with_phase(Phase::Compression),
        cfg.n_steps,
    )?;

    let xi = transition_probability(&u, &h_cold, &h_hot)?;
    let xi_back = transition_probability(&v, &h_hot, &h_cold)?;
    if (xi - xi_back).abs() > XI_AGREEMENT_TOL {
        return Err(Error::InconsistentTransition {
            forward: xi,
            backward: xi_back,
        });
    }

    let eq_cold = gibbs_state(&h_cold, cfg.thermal.kt_cold())?;
    let eq_hot = gibbs_state(&h_hot, cfg.thermal.kt_hot())?;
    let states = CycleStates {
        eq_cold,
        after_expansion: propagate_state(&eq_cold, &u),
        eq_hot,
        after_compression: propagate_state(&eq_hot, &v),
    };
    let report = figures_of_merit(cfg, &states, &h_cold, &h_hot, xi)?;
    Ok(CycleRun {
        report,
        states,
        cold_hamiltonian: h_cold,
        hot_hamiltonian: h_hot,
        expansion: u,
        compression: v,
    })
}

pub fn run_cycle(cfg: &CycleConfig) -> Result<CycleReport> {
    Ok(simulate_cycle(cfg)?.report)
}

/// One report per drive duration, in input order.
pub fn sweep_tau(cfg: &CycleConfig, taus: &[f64]) -> Result<Vec<CycleReport>> {
    if taus.is_empty() {
        return Err(Error::EmptySweep);
    }
    taus.iter()
        .map(|&tau| run_cycle(&cfg.with_tau(tau)?))
        .collect()
}

/// Sample mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn estimate(&self) -> Estimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        Estimate {
            mean: self.mean,
            std_dev: libm::sqrt(var.max(0.0)),
        }
    }
}

/// Monte Carlo spread of the figures of merit under tomographic noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyReport {
    pub point: CycleReport,
    pub samples: usize,
    pub rel_noise: f64,
    pub xi: Estimate,
    pub mean_work: Estimate,
    pub mean_heat_hot: Estimate,
    pub mean_heat_cold: Estimate,
    pub efficiency: Estimate,
    pub lag: Estimate,
    pub entropy_production: Estimate,
    pub power: Estimate,
}

fn perturb(rho: &DensityMatrix, sigma: f64, rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    let mut m = *rho.matrix();
    m[(0, 0)].re += sigma * draw();
    m[(1, 1)].re += sigma * draw();
    let off = c(sigma * draw(), sigma * draw());
    m[(0, 1)] += off;
    m[(1, 0)] += off.conj();
    DensityMatrix::repaired(m)
}

fn estimate_xi(states: &CycleStates, h_cold: &Operator, h_hot: &Operator) -> Result<f64> {
    let cold = crate::spin::eigensystem(h_cold)?;
    let hot = crate::spin::eigensystem(h_hot)?;
    let p = states.eq_cold.populations(&cold);
    let s = states.after_expansion.populations(&hot);
    Ok((p[0] - s[0]) / (p[0] - p[1]))
}

/// Resamples the four stroke states of an existing run.
///
/// Every element of each density matrix receives Gaussian noise of width
/// `rel_noise` (in units of the unit trace); the result is Hermitized, its
/// negative eigenvalues clipped and its trace renormalized before all figures
/// of merit are recomputed. Sample `i` draws from ChaCha stream `i` of `seed`,
/// so results do not depend on evaluation order.
pub fn monte_carlo_from_run(
    cfg: &CycleConfig,
    run: &CycleRun,
    rel_noise: f64,
    n_samples: usize,
    seed: u64,
) -> Result<UncertaintyReport> {
    if !(rel_noise >= 0.0) || !rel_noise.is_finite() {
        return Err(Error::OutOfRange {
            name: "rel_noise",
            value: rel_noise,
            reason: "must be nonnegative",
        });
    }
    if n_samples == 0 {
        return Err(Error::OutOfRange {
            name: "n_samples",
            value: 0.0,
            reason: "at least one sample is required",
        });
    }
    let (h_cold, h_hot) = (&run.cold_hamiltonian, &run.hot_hamiltonian);
    let mut acc = [Welford::default(); 8];
    for index in 0..n_samples {
        let report = if rel_noise == 0.0 {
            run.report
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let s = &run.states;
            let states = CycleStates {
                eq_cold: perturb(&s.eq_cold, rel_noise, &mut rng)?,
                after_expansion: perturb(&s.after_expansion, rel_noise, &mut rng)?,
                eq_hot: perturb(&s.eq_hot, rel_noise, &mut rng)?,
                after_compression: perturb(&s.after_compression, rel_noise, &mut rng)?,
            };
            let xi = estimate_xi(&states, h_cold, h_hot)?;
            figures_of_merit(cfg, &states, h_cold, h_hot, xi)?
        };
        let values = [
            report.xi,
            report.mean_work,
            report.mean_heat_hot,
            report.mean_heat_cold,
            report.efficiency.unwrap_or(f64::NAN),
            report.lag.unwrap_or(f64::NAN),
            report.entropy_production,
            report.power,
        ];
        for (w, x) in acc.iter_mut().zip(values) {
            w.push(x);
        }
    }
    let e = acc.map(|w| w.estimate());
    Ok(UncertaintyReport {
        point: run.report,
        samples: n_samples,
        rel_noise,
        xi: e[0],
        mean_work: e[1],
        mean_heat_hot: e[2],
        mean_heat_cold: e[3],
        efficiency: e[4],
        lag: e[5],
        entropy_production: e[6],
        power: e[7],
    })
}

pub fn monte_carlo_uncertainty(
    cfg: &CycleConfig,
    rel_noise: f64,
    n_samples: usize,
    seed: u64,
) -> Result<UncertaintyReport> {
    let run = simulate_cycle(cfg)?;
    monte_carlo_from_run(cfg, &run, rel_noise, n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{eigensystem, KT_HOT_OPTION_B_PEV};
    use crate::tpm::{mean_heat_closed_form, mean_work_closed_form};
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix2;
    use proptest::prelude::*;

    fn diag(p: f64) -> DensityMatrix {
        DensityMatrix::new(Matrix2::new(
            c(p, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0 - p, 0.0),
        ))
        .unwrap()
    }

    fn bloch_state(r: [f64; 3]) -> DensityMatrix {
        DensityMatrix::new(
            *Operator::from_bloch(0.5, [0.5 * r[0], 0.5 * r[1], 0.5 * r[2]]).matrix(),
        )
        .unwrap()
    }

    #[test]
    fn relative_entropy_cases() {
        let rho = diag(0.3);
        assert_abs_diff_eq!(relative_entropy(&rho, &rho).unwrap(), 0.0, epsilon = 1e-14);

        let q: f64 = 0.8;
        let expected = -libm::log(2.0) - 0.5 * libm::log(q) - 0.5 * libm::log(1.0 - q);
        let got = relative_entropy(&DensityMatrix::maximally_mixed(), &diag(q)).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-13);

        assert_eq!(
            relative_entropy(&DensityMatrix::maximally_mixed(), &diag(1.0)),
            Err(Error::RelativeEntropyInfinite)
        );
        assert!(relative_entropy(&diag(1.0), &diag(1.0)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn reference_cycle_slow_drive_approaches_otto() {
        let cfg = CycleConfig::reference(700.0, ThermalParams::option_b()).unwrap();
        let r = run_cycle(&cfg).unwrap();
        assert_abs_diff_eq!(r.eta_otto, 1.0 - 2.0 / 3.6, epsilon = 1e-15);
        assert!((r.efficiency.unwrap() - r.eta_otto).abs() < 0.03);
        assert!(r.extraction_ok);
        assert_abs_diff_eq!(r.eta_carnot, 1.0 - 6.6 / 40.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.power, r.mean_work / 8400.0 * 1e3, epsilon = 1e-15);
    }

    #[test]
    fn fast_drive_extracts_no_work() {
        let cfg = CycleConfig::reference(100.0, ThermalParams::option_b()).unwrap();
        let r = run_cycle(&cfg).unwrap();
        assert!(r.mean_work < 0.0);
        assert!(!r.extraction_ok);
    }

    #[test]
    fn equal_gaps_never_extract() {
        for tau in [50.0, 200.0, 600.0] {
            let p = DriveProtocol::new(2.0, 2.0, tau, Phase::Expansion).unwrap();
            let r = run_cycle(&CycleConfig::new(p, ThermalParams::option_b())).unwrap();
            assert!(r.mean_work <= 1e-12, "tau={tau}: {}", r.mean_work);
        }
    }

    #[test]
    fn cycle_matches_closed_forms_and_first_law() {
        for tau in [100.0, 260.0, 500.0] {
            for thermal in [ThermalParams::option_a(), ThermalParams::option_b()] {
                let cfg = CycleConfig::reference(tau, thermal).unwrap();
                let run = simulate_cycle(&cfg).unwrap();
                let r = run.report;
                let w = mean_work_closed_form(&cfg.protocol, &thermal, r.xi);
                let q = mean_heat_closed_form(&cfg.protocol, &thermal, r.xi);
                assert_abs_diff_eq!(r.mean_work, w, epsilon = 1e-10);
                assert_abs_diff_eq!(r.mean_heat_hot, q, epsilon = 1e-10);
                assert!((r.mean_heat_cold + r.mean_heat_hot - r.mean_work).abs() < 1e-10);
                let eta = r.efficiency.unwrap();
                assert!((eta - (r.eta_carnot - r.lag.unwrap())).abs() < 1e-9);
                let via_entropy = drive_relative_entropy(&run.states).unwrap();
                assert_abs_diff_eq!(r.entropy_production, via_entropy, epsilon = 1e-10);
                assert_abs_diff_eq!(
                    r.entropy_production,
                    thermal.beta_cold() * r.mean_heat_hot * r.lag.unwrap(),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn extraction_bound_cases() {
        let p = DriveProtocol::reference(100.0).unwrap();
        assert_eq!(
            extraction_bound(&p, &ThermalParams::new(6.6, 6.6).unwrap()),
            0.0
        );

        let t = ThermalParams::option_b();
        let xi_max = extraction_bound(&p, &t);
        assert!(xi_max > 0.0 && xi_max < 0.5);
        assert_abs_diff_eq!(mean_work_closed_form(&p, &t, xi_max), 0.0, epsilon = 1e-12);
        for k in 0..=1000 {
            let xi = k as f64 / 1000.0 * 0.5;
            if (xi - xi_max).abs() < 1e-9 {
                continue;
            }
            let w = mean_work_closed_form(&p, &t, xi);
            assert_eq!(w > 0.0, xi < xi_max, "xi={xi}");
        }
    }

    #[test]
    fn extraction_contour_is_monotone() {
        let p = DriveProtocol::reference(100.0).unwrap();
        for xi in [0.0, 0.02, 0.1] {
            let mut last = 0.0;
            for k in 1..=30 {
                let kt_cold = k as f64;
                let kt_hot = critical_hot_temperature(&p, kt_cold, xi).unwrap().unwrap();
                assert!(kt_hot > last);
                last = kt_hot;
                let bound = extraction_bound(&p, &ThermalParams::new(kt_cold, kt_hot).unwrap());
                assert!((bound - xi).abs() < 1e-9);
            }
        }
        assert_eq!(critical_hot_temperature(&p, 6.6, 0.3).unwrap(), None);
    }

    #[test]
    fn efficiency_closed_form_cases() {
        let p = DriveProtocol::reference(100.0).unwrap();
        let t = ThermalParams::option_b();
        assert_abs_diff_eq!(
            efficiency_closed_form(&p, &t, 0.0).unwrap(),
            0.4444444444444444,
            epsilon = 1e-12
        );
        let xi_max = extraction_bound(&p, &t);
        assert_abs_diff_eq!(
            efficiency_closed_form(&p, &t, xi_max).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let mut last = f64::INFINITY;
        for k in 0..=100 {
            let eta = efficiency_closed_form(&p, &t, xi_max * k as f64 / 100.0).unwrap();
            assert!(eta < last);
            last = eta;
        }
        let equal = ThermalParams::new(6.6, 6.6 * 1.8).unwrap();
        assert!(matches!(
            efficiency_closed_form(&p, &equal, 0.1),
            Err(Error::EfficiencyUndefined(_))
        ));
    }

    #[test]
    fn transitionless_lag_is_carnot_minus_otto() {
        // Direct construction with ξ = 0: populations carried over unchanged.
        let p = DriveProtocol::reference(300.0).unwrap();
        let t = ThermalParams::option_b();
        let h1 = p.cold_hamiltonian();
        let h2 = p.hot_hamiltonian();
        let (e1, e2) = (eigensystem(&h1).unwrap(), eigensystem(&h2).unwrap());
        let eq_cold = gibbs_state(&h1, t.kt_cold()).unwrap();
        let eq_hot = gibbs_state(&h2, t.kt_hot()).unwrap();
        let states = CycleStates {
            eq_cold,
            after_expansion: DensityMatrix::from_populations(&e2, eq_cold.populations(&e1))
                .unwrap(),
            eq_hot,
            after_compression: DensityMatrix::from_populations(&e1, eq_hot.populations(&e2))
                .unwrap(),
        };
        let (q_hot, _) = mean_heats(&states, &h1, &h2);
        let lag = efficiency_lag(
            &states.after_expansion,
            &states.eq_hot,
            &states.after_compression,
            &states.eq_cold,
            q_hot,
            t.beta_cold(),
        )
        .unwrap();
        let eta_otto = 1.0 - 2.0 / 3.6;
        assert_abs_diff_eq!(lag, t.carnot_efficiency() - eta_otto, epsilon = 1e-10);
        assert_eq!(
            efficiency_lag(&eq_cold, &eq_hot, &eq_cold, &eq_cold, 0.0, 1.0),
            Err(Error::ZeroHeat)
        );
    }

    #[test]
    fn identity_drive_lag_equals_carnot() {
        // With nu1 == nu2 and no transitions, the medium just carries heat.
        let h = Operator::sigma_x().scaled(-0.5 * energy_of(2.0));
        let t = ThermalParams::option_b();
        let eq_cold = gibbs_state(&h, t.kt_cold()).unwrap();
        let eq_hot = gibbs_state(&h, t.kt_hot()).unwrap();
        let states = CycleStates {
            eq_cold,
            after_expansion: eq_cold,
            eq_hot,
            after_compression: eq_hot,
        };
        let (q_hot, _) = mean_heats(&states, &h, &h);
        assert!(q_hot > 0.0);
        assert_abs_diff_eq!(mean_work_from_states(&states, &h, &h), 0.0, epsilon = 1e-14);
        let lag =
            efficiency_lag(&eq_cold, &eq_hot, &eq_hot, &eq_cold, q_hot, t.beta_cold()).unwrap();
        assert_abs_diff_eq!(lag, t.carnot_efficiency(), epsilon = 1e-12);
    }

    #[test]
    fn reversible_limit_produces_no_entropy() {
        let h1 = Operator::sigma_x().scaled(-0.5 * energy_of(2.0));
        let h2 = Operator::sigma_x().scaled(-0.5 * energy_of(3.6));
        let t = ThermalParams::new(6.6, 6.6 * 1.8).unwrap();
        let eq_cold = gibbs_state(&h1, t.kt_cold()).unwrap();
        let eq_hot = gibbs_state(&h2, t.kt_hot()).unwrap();
        let states = CycleStates {
            eq_cold,
            after_expansion: eq_cold,
            eq_hot,
            after_compression: eq_hot,
        };
        assert_abs_diff_eq!(
            entropy_production_drive(&states, &h1, &h2, &t),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sweep_preserves_order_and_matches_single_runs() {
        let cfg = CycleConfig::reference(100.0, ThermalParams::option_b()).unwrap();
        let taus = [420.0, 100.0, 260.0];
        let sweep = sweep_tau(&cfg, &taus).unwrap();
        for (tau, r) in taus.iter().zip(&sweep) {
            assert_eq!(r.tau, *tau);
            assert_eq!(*r, run_cycle(&cfg.with_tau(*tau).unwrap()).unwrap());
        }
        assert_eq!(sweep_tau(&cfg, &[]), Err(Error::EmptySweep));
    }

    #[test]
    fn monte_carlo_zero_noise_is_exact() {
        let cfg = CycleConfig::reference(320.0, ThermalParams::option_b()).unwrap();
        let mc = monte_carlo_uncertainty(&cfg, 0.0, 25, 7).unwrap();
        assert_eq!(mc.mean_work.mean, mc.point.mean_work);
        assert_eq!(mc.efficiency.mean, mc.point.efficiency.unwrap());
        assert_eq!(mc.lag.mean, mc.point.lag.unwrap());
        assert_eq!(mc.xi.mean, mc.point.xi);
        assert_eq!(mc.power.std_dev, 0.0);
        assert_eq!(mc.mean_heat_hot.std_dev, 0.0);
    }

    #[test]
    fn monte_carlo_is_seeded_and_linear_in_noise() {
        let cfg = CycleConfig::reference(320.0, ThermalParams::option_b()).unwrap();
        let run = simulate_cycle(&cfg).unwrap();
        let a = monte_carlo_from_run(&cfg, &run, 0.01, 400, 11).unwrap();
        let b = monte_carlo_from_run(&cfg, &run, 0.01, 400, 11).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_from_run(&cfg, &run, 0.01, 400, 12).unwrap();
        assert_ne!(a.mean_work, c.mean_work);

        let half = monte_carlo_from_run(&cfg, &run, 0.005, 400, 11).unwrap();
        let ratio = a.mean_heat_hot.std_dev / half.mean_heat_hot.std_dev;
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
        let ratio = a.mean_work.std_dev / half.mean_work.std_dev;
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
        assert!(monte_carlo_from_run(&cfg, &run, -0.1, 10, 0).is_err());
        assert!(monte_carlo_from_run(&cfg, &run, 0.01, 0, 0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = CycleConfig::reference(100.0, ThermalParams::option_b()).unwrap();
        assert_eq!(cfg.t_therm, DEFAULT_T_THERM_US);
        cfg.t_cool = -1.0;
        assert!(run_cycle(&cfg).is_err());
        assert_eq!(ThermalParams::option_b().kt_hot(), KT_HOT_OPTION_B_PEV);
    }

    proptest! {
        #[test]
        fn relative_entropy_nonnegative_and_jointly_convex(
            a1 in proptest::array::uniform3(-0.57..0.57f64),
            a2 in proptest::array::uniform3(-0.57..0.57f64),
            b1 in proptest::array::uniform3(-0.57..0.57f64),
            b2 in proptest::array::uniform3(-0.57..0.57f64),
            lambda in 0.0..1.0f64,
        ) {
            let (ra1, ra2, rb1, rb2) = (bloch_state(a1), bloch_state(a2), bloch_state(b1), bloch_state(b2));
            let mix = |x: &DensityMatrix, y: &DensityMatrix| DensityMatrix::new(
                x.matrix() * c(lambda, 0.0) + y.matrix() * c(1.0 - lambda, 0.0)).unwrap();
            let lhs = relative_entropy(&mix(&ra1, &ra2), &mix(&rb1, &rb2)).unwrap();
            let rhs = lambda * relative_entropy(&ra1, &rb1).unwrap()
                + (1.0 - lambda) * relative_entropy(&ra2, &rb2).unwrap();
            prop_assert!(lhs >= 0.0);
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn entropy_production_nonnegative(
            tau in 20.0..800.0f64, kt_cold in 2.0..30.0f64, hot_factor in 1.0..10.0f64,
            nu1 in 1.0..3.0f64, r in 1.0..3.0f64
        ) {
            let p = DriveProtocol::new(nu1, nu1 * r, tau, Phase::Expansion).unwrap();
            let t = ThermalParams::new(kt_cold, kt_cold * hot_factor).unwrap();
            let mut cfg = CycleConfig::new(p, t);
            cfg.n_steps = 500;
            let run = simulate_cycle(&cfg).unwrap();
            prop_assert!(run.report.entropy_production >= -1e-12);
            let direct = drive_relative_entropy(&run.states).unwrap();
            prop_assert!((direct - run.report.entropy_production).abs() < 1e-10);
            let xi_max = extraction_bound(&p, &t);
            if classical_bound_holds(&p, &t) && (run.report.xi - xi_max).abs() > 1e-9 {
                prop_assert_eq!(run.report.mean_work > 0.0, run.report.xi < xi_max);
            }
        }
    }
}
