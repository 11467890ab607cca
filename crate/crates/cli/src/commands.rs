//! Table builders behind each subcommand.

use qotto_core::cycle::{
    extraction_bound, monte_carlo_from_run, simulate_cycle, UncertaintyReport,
};
use qotto_core::process::{
    choi_from_unitary, process_trace_distance, unitality_defect, ProcessMatrix,
};
use qotto_core::spin::eigensystem;
use qotto_core::tpm::{
    enumerate_histories, heat_distribution, lorentzian_broaden, work_distribution,
    EnergyDistribution, Spectra,
};
use qotto_core::Result;

use crate::config::{HotOption, RunConfig};
use crate::table::{Cell, Table};

pub const SWEEP_COLUMNS: [&str; 25] = [
    "tau_us",
    "hot_option",
    "kt_cold_pev",
    "kt_hot_pev",
    "xi",
    "xi_max",
    "mean_work_pev",
    "mean_heat_hot_pev",
    "mean_heat_cold_pev",
    "efficiency",
    "eta_otto",
    "eta_carnot",
    "lag",
    "entropy_production",
    "power_pev_per_ms",
    "extraction_ok",
    "mc_samples",
    "xi_std",
    "mean_work_std",
    "mean_heat_hot_std",
    "mean_heat_cold_std",
    "efficiency_std",
    "lag_std",
    "entropy_production_std",
    "power_std",
];

pub const DIST_COLUMNS: [&str; 3] = ["series", "energy_pev", "value"];

pub const QPT_COLUMNS: [&str; 6] = ["map", "quantity", "k", "j", "re", "im"];

fn hot_label(cfg: &RunConfig) -> &'static str {
    match cfg.thermal.hot_option {
        HotOption::A => "A",
        HotOption::B => "B",
        HotOption::Custom => "custom",
    }
}

fn report_row(cfg: &RunConfig, tau: f64) -> Result<Vec<Cell>> {
    let cycle = cfg.cycle_config(tau)?;
    let run = simulate_cycle(&cycle)?;
    let r = run.report;
    let mc: Option<UncertaintyReport> = if cfg.monte_carlo.samples > 0 {
        Some(monte_carlo_from_run(
            &cycle,
            &run,
            cfg.monte_carlo.rel_noise,
            cfg.monte_carlo.samples,
            cfg.monte_carlo.seed,
        )?)
    } else {
        None
    };
    let std = |f: fn(&UncertaintyReport) -> f64| -> Cell { mc.as_ref().map(f).into() };
    Ok(vec![
        tau.into(),
        hot_label(cfg).into(),
        cycle.thermal.kt_cold().into(),
        cycle.thermal.kt_hot().into(),
        r.xi.into(),
        extraction_bound(&cycle.protocol, &cycle.thermal).into(),
        r.mean_work.into(),
        r.mean_heat_hot.into(),
        r.mean_heat_cold.into(),
        r.efficiency.into(),
        r.eta_otto.into(),
        r.eta_carnot.into(),
        r.lag.into(),
        r.entropy_production.into(),
        r.power.into(),
        r.extraction_ok.into(),
        cfg.monte_carlo.samples.into(),
        std(|m| m.xi.std_dev),
        std(|m| m.mean_work.std_dev),
        std(|m| m.mean_heat_hot.std_dev),
        std(|m| m.mean_heat_cold.std_dev),
        std(|m| m.efficiency.std_dev),
        std(|m| m.lag.std_dev),
        std(|m| m.entropy_production.std_dev),
        std(|m| m.power.std_dev),
    ])
}

/// One row per entry of `sweep.tau_list`, in order.
pub fn sweep(cfg: &RunConfig) -> Result<Table> {
    let taus = &cfg.sweep.tau_list;
    if taus.is_empty() {
        return Err(qotto_core::Error::EmptySweep);
    }
    // Rows are independent, so they are computed concurrently and reassembled
    // in input order.
    let rows: Vec<Result<Vec<Cell>>> = std::thread::scope(|s| {
        let handles: Vec<_> = taus
            .iter()
            .map(|&tau| s.spawn(move || report_row(cfg, tau)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut table = Table::new(&SWEEP_COLUMNS);
    for row in rows {
        table.push(row?);
    }
    Ok(table)
}

/// The single-τ report for `sweep.tau`.
pub fn cycle(cfg: &RunConfig) -> Result<Table> {
    let mut table = Table::new(&SWEEP_COLUMNS);
    table.push(report_row(cfg, cfg.sweep.tau)?);
    Ok(table)
}

fn distribution_table(cfg: &RunConfig, dist: &EnergyDistribution) -> Result<Table> {
    let mut table = Table::new(&DIST_COLUMNS);
    for a in dist.atoms() {
        table.push(vec!["atom".into(), a.value.into(), a.prob.into()]);
    }
    let grid = cfg.curve_grid();
    if !grid.is_empty() {
        let curve = lorentzian_broaden(dist, cfg.output.lorentzian_fwhm, &grid)?;
        for (e, d) in grid.iter().zip(curve) {
            table.push(vec!["curve".into(), (*e).into(), d.into()]);
        }
    }
    Ok(table)
}

/// Extracted-work distribution of the whole cycle at `sweep.tau`.
pub fn work_dist(cfg: &RunConfig) -> Result<Table> {
    let cycle = cfg.cycle_config(cfg.sweep.tau)?;
    let run = simulate_cycle(&cycle)?;
    let cold = eigensystem(&run.cold_hamiltonian)?;
    let hot = eigensystem(&run.hot_hamiltonian)?;
    let histories = enumerate_histories(
        run.states.eq_cold.populations(&cold),
        run.states.eq_hot.populations(&hot),
        run.report.xi,
        &Spectra::of_protocol(&cycle.protocol)?,
    )?;
    distribution_table(cfg, &work_distribution(&histories)?)
}

/// Distribution of the heat taken from the hot source at `sweep.tau`.
pub fn heat_dist(cfg: &RunConfig) -> Result<Table> {
    let cycle = cfg.cycle_config(cfg.sweep.tau)?;
    let run = simulate_cycle(&cycle)?;
    let hot = eigensystem(&run.hot_hamiltonian)?;
    let dist = heat_distribution(
        run.states.after_expansion.populations(&hot),
        run.states.eq_hot.populations(&hot),
        hot.energies,
    )?;
    distribution_table(cfg, &dist)
}

fn push_process(
    table: &mut Table,
    name: &str,
    implemented: &ProcessMatrix,
    target: &ProcessMatrix,
) {
    let m = implemented.matrix();
    for k in 0..4 {
        for j in 0..4 {
            let z = m[(k, j)];
            table.push(vec![
                name.into(),
                "upsilon".into(),
                k.into(),
                j.into(),
                z.re.into(),
                z.im.into(),
            ]);
        }
    }
    let scalars = [
        ("unitality_defect", unitality_defect(implemented)),
        ("delta_ideal", process_trace_distance(implemented, target)),
        ("imag_max", implemented.imaginary_defect()),
    ];
    for (q, v) in scalars {
        table.push(vec![
            name.into(),
            q.into(),
            Cell::Missing,
            Cell::Missing,
            v.into(),
            Cell::Missing,
        ]);
    }
}

/// Process matrices of both drives and their composite, each mixed with the
/// fully depolarizing channel at weight `qpt.noise_mix`.
pub fn qpt(cfg: &RunConfig) -> Result<Table> {
    let run = simulate_cycle(&cfg.cycle_config(cfg.sweep.tau)?)?;
    let dep = ProcessMatrix::fully_depolarizing();
    let p = cfg.qpt.noise_mix;
    let expansion = choi_from_unitary(&run.expansion)?;
    let compression = choi_from_unitary(&run.compression)?;
    let composite = choi_from_unitary(&run.expansion.then(&run.compression))?;
    let mut table = Table::new(&QPT_COLUMNS);
    push_process(
        &mut table,
        "expansion",
        &expansion.mix(&dep, p)?,
        &expansion,
    );
    push_process(
        &mut table,
        "compression",
        &compression.mix(&dep, p)?,
        &compression,
    );
    push_process(
        &mut table,
        "composite",
        &composite.mix(&dep, p)?,
        &ProcessMatrix::identity(),
    );
    Ok(table)
}
