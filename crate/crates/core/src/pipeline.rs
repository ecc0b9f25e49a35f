//! Batch commands: load a run configuration, run one stage, write reports.
//!
//! Each command validates the whole configuration and parses every input
//! before the first solve. Model evaluations run on the current rayon pool
//! (see [`with_jobs`]); all ranking and report writing is sequential, so
//! the files depend only on the configuration and seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::{
    best_seeds, brute_force, correct_recharge, refine, residual_uncertainty, BruteForceEntry,
    CalibrationProblem, NllConfig, RefineOptions, RefinedResult, UncertaintyReport,
};
use crate::config::{Command, RunConfig};
use crate::error::{Error, Result};
use crate::gwflow::io::{load_boundaries, load_grid, load_wells, write_budget, write_heads};
use crate::gwflow::{compute_qoi, Budget, QoIBundle, SteadySolver};
use crate::hydrology::{
    basin_recharge_flux, compute_recharge, load_basins, load_stations, Period, RechargeSeries,
    RechargeSummary,
};
use crate::morris::{run_morris, MorrisReport, MorrisSettings, ParameterDef, ParameterSpace};
use crate::report::{fmt_f64, write_csv, write_csv_records, write_json};
use crate::scenario::synthetic::{generate, SyntheticOptions};
use crate::scenario::{load_columns, Scenario, ScenarioModel, SCREENING_QOIS};

/// Runs `f` on a rayon pool with `jobs` workers (default: all cores).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::invalid("--jobs must be at least 1"));
        }
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn prepare_out(cfg: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn period(cfg: &RunConfig) -> Period {
    Period {
        start: cfg.scenario.period_start,
        end: cfg.scenario.period_end,
    }
}

/// Weekly series and period summary from the met and basin files.
pub fn load_recharge(cfg: &RunConfig) -> Result<(Vec<RechargeSeries>, RechargeSummary)> {
    let s = &cfg.scenario;
    let stations = load_stations(&cfg.resolve(&s.stations), &cfg.resolve(&s.met))?;
    let basins = load_basins(&cfg.resolve(&s.basins))?;
    let (series, provenance) = compute_recharge(&basins, &stations, s.donor.as_deref())?;
    let mut summary = basin_recharge_flux(&series, period(cfg))?;
    summary.provenance = provenance;
    Ok((series, summary))
}

/// Loads the flow model and places precipitation recharge on it.
pub fn load_scenario(cfg: &RunConfig) -> Result<Scenario> {
    let s = &cfg.scenario;
    let grid = load_grid(&cfg.resolve(&s.grid), &cfg.resolve(&s.zones), &s.dims)?;
    let bcs = load_boundaries(&cfg.resolve(&s.boundaries), &grid)?;
    let wells = load_wells(&cfg.resolve(&s.wells), &grid)?;
    let columns = load_columns(&cfg.resolve(&s.columns), &grid)?;
    let (_, summary) = load_recharge(cfg)?;
    let mut scenario = Scenario {
        dims: s.dims.clone(),
        grid,
        bcs,
        wells,
        columns,
        river_length: s.river_length,
        precip_recharge: Vec::new(),
    };
    scenario.set_precip_recharge(&summary)?;
    Ok(scenario)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WellRow {
    id: String,
    observed: f64,
    modelled: f64,
    residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub values: BTreeMap<String, f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub budget: Budget,
    pub budget_discrepancy: f64,
    pub qoi: Option<QoIBundle>,
    /// Irrigation recharge net of rice-drain removal [m/s].
    pub effective_r_irrig: Option<f64>,
}

/// One solve at `[values]`: writes `heads.csv`, `budget.csv`, `wells.csv`
/// and `simulation.json`. A solve that does not converge still writes its
/// budget and then fails.
pub fn cmd_simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<SimulationSummary> {
    cfg.validate(Command::Simulate)?;
    let scenario = load_scenario(cfg)?;
    let names: Vec<String> = cfg.values.keys().cloned().collect();
    let values: Vec<f64> = cfg.values.values().copied().collect();
    let model = ScenarioModel::new(scenario, &names, &BTreeMap::new(), cfg.solver.clone())?;
    let dir = prepare_out(cfg, out)?;
    let (k, bcs) = model.build(&values)?;
    let s = model.scenario();
    let result = SteadySolver::new(&s.grid, &k, &bcs, cfg.solver.clone())?.solve()?;
    write_budget(&dir.join("budget.csv"), &result)?;
    write_heads(&dir.join("heads.csv"), &s.grid, &result)?;
    let modelled = s.wells.modelled(&s.grid, &result.heads);
    write_csv(
        &dir.join("wells.csv"),
        s.wells.wells().iter().zip(&modelled).map(|(w, &m)| WellRow {
            id: w.id.clone(),
            observed: w.head,
            modelled: m,
            residual: m - w.head,
        }),
    )?;
    let qoi = if result.converged {
        Some(compute_qoi(&s.grid, &result, &bcs, &s.wells, s.river_length)?)
    } else {
        None
    };
    let effective_r_irrig = cfg.values.get("R_Irrig").map(|&r| {
        correct_recharge(r, s.irrigated_area(), result.budget.drn_rice_out)
    });
    let summary = SimulationSummary {
        values: cfg.values.clone(),
        converged: result.converged,
        iterations: result.iterations,
        final_residual: result.final_residual,
        budget: result.budget,
        budget_discrepancy: result.budget.discrepancy(),
        qoi,
        effective_r_irrig,
    };
    write_json(&dir.join("simulation.json"), &summary)?;
    if !result.converged {
        return Err(Error::NotConverged {
            iterations: result.iterations,
            residual: result.final_residual,
        });
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WeeklyRow {
    basin: String,
    week_start: chrono::NaiveDate,
    p_mm: f64,
    p_e_mm: f64,
    pet_mm: f64,
    r_p_mm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MonthlyRow {
    basin: String,
    month: String,
    weeks: usize,
    r_p_mm: f64,
}

/// Writes `recharge_weekly.csv`, `recharge_monthly.csv` (weekly depths summed
/// by the month each week starts in) and `recharge_summary.json`.
pub fn cmd_recharge(cfg: &RunConfig, out: Option<&Path>) -> Result<RechargeSummary> {
    cfg.validate(Command::Recharge)?;
    let (series, summary) = load_recharge(cfg)?;
    let dir = prepare_out(cfg, out)?;
    write_csv(
        &dir.join("recharge_weekly.csv"),
        series.iter().flat_map(|s| {
            s.weeks.iter().map(move |w| WeeklyRow {
                basin: s.basin.clone(),
                week_start: w.week_start,
                p_mm: w.p,
                p_e_mm: w.p_e,
                pet_mm: w.pet,
                r_p_mm: w.r_p,
            })
        }),
    )?;
    let mut monthly = Vec::new();
    for s in &series {
        let mut by_month: BTreeMap<String, (usize, f64)> = BTreeMap::new();
        for w in &s.weeks {
            let e = by_month.entry(w.week_start.format("%Y-%m").to_string()).or_default();
            e.0 += 1;
            e.1 += w.r_p;
        }
        monthly.extend(by_month.into_iter().map(|(month, (weeks, r))| MonthlyRow {
            basin: s.basin.clone(),
            month,
            weeks,
            r_p_mm: r,
        }));
    }
    write_csv(&dir.join("recharge_monthly.csv"), monthly)?;
    write_json(&dir.join("recharge_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisRunSummary {
    pub r: usize,
    pub r_effective: usize,
    pub r_failed: usize,
    pub selected: Vec<usize>,
    pub failed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisSummary {
    pub seed: u64,
    pub pool_size: usize,
    pub parameters: Vec<ParameterDef>,
    pub runs: Vec<MorrisRunSummary>,
}

fn stats_rows(
    report: &MorrisReport,
    run: usize,
    space: &ParameterSpace,
    qois: std::ops::Range<usize>,
    label: impl Fn(&str) -> String,
) -> Vec<Vec<String>> {
    let res = &report.runs[run].result;
    let mut rows = Vec::new();
    for q in qois {
        for (i, p) in space.names().iter().enumerate() {
            let s = res.stats[q][i];
            rows.push(vec![
                label(&res.qoi_names[q]),
                p.clone(),
                fmt_f64(s.mu),
                fmt_f64(s.mu_star),
                fmt_f64(s.sigma),
                res.r_effective.to_string(),
            ]);
        }
    }
    rows
}

/// Screens every `[[parameters]]` entry. Writes per r `morris_r<r>.csv`
/// (scalar outputs) and `morris_wells_r<r>.csv` (one row per well and
/// parameter), then `morris_ranks.csv` with the `μ*` rank of every
/// parameter at each r and `morris_summary.json`.
pub fn cmd_morris(cfg: &RunConfig, out: Option<&Path>, seed: Option<u64>) -> Result<(MorrisReport, MorrisSummary)> {
    cfg.validate(Command::Morris)?;
    let m = cfg.morris.as_ref().expect("validated");
    let settings = MorrisSettings {
        r_list: m.r_list.clone(),
        pool_size: m.pool_size,
        seed: seed.or(m.seed).expect("validated"),
        strategy: m.strategy,
    };
    let space = cfg.parameter_space()?;
    let scenario = load_scenario(cfg)?;
    let model = ScenarioModel::new(scenario, &space.names(), &cfg.values, cfg.solver.clone())?;
    let dir = prepare_out(cfg, out)?;
    let qoi_names = model.screening_output_names();
    let report = run_morris(&space, &|x: &[f64]| model.screening_outputs(x), &qoi_names, &settings)?;

    let header: Vec<String> = ["qoi", "parameter", "mu", "mu_star", "sigma", "r_effective"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut well_header = header.clone();
    well_header[0] = "well".into();
    let nq = SCREENING_QOIS.len();
    for (k, run) in report.runs.iter().enumerate() {
        let rows = stats_rows(&report, k, &space, 0..nq, |q| q.to_string());
        write_csv_records(&dir.join(format!("morris_r{}.csv", run.r)), &header, &rows)?;
        let rows = stats_rows(&report, k, &space, nq..qoi_names.len(), |q| {
            q.trim_start_matches("head:").to_string()
        });
        write_csv_records(&dir.join(format!("morris_wells_r{}.csv", run.r)), &well_header, &rows)?;
    }
    let mut rank_header = vec!["qoi".to_string(), "parameter".to_string()];
    rank_header.extend(report.runs.iter().map(|r| format!("rank_r{}", r.r)));
    let mut rank_rows = Vec::new();
    for (q, qn) in SCREENING_QOIS.iter().enumerate() {
        let ranks: Vec<Vec<usize>> = report.runs.iter().map(|r| r.result.ranks(q)).collect();
        for (i, p) in space.names().iter().enumerate() {
            let mut row = vec![qn.to_string(), p.clone()];
            row.extend(ranks.iter().map(|r| r[i].to_string()));
            rank_rows.push(row);
        }
    }
    write_csv_records(&dir.join("morris_ranks.csv"), &rank_header, &rank_rows)?;
    let summary = MorrisSummary {
        seed: settings.seed,
        pool_size: settings.pool_size,
        parameters: space.params().to_vec(),
        runs: report
            .runs
            .iter()
            .map(|r| MorrisRunSummary {
                r: r.r,
                r_effective: r.result.r_effective,
                r_failed: r.result.r_failed,
                selected: r.selected.clone(),
                failed: r.result.failed.clone(),
            })
            .collect(),
    };
    write_json(&dir.join("morris_summary.json"), &summary)?;
    Ok((report, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeRow {
    pub parameter: String,
    pub initial_low: f64,
    pub initial_high: f64,
    pub optimum: f64,
    pub std: f64,
    pub final_low: f64,
    pub final_high: f64,
    pub narrower: bool,
    pub truth: Option<f64>,
    pub truth_inside: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub parameters: Vec<String>,
    pub fixed: BTreeMap<String, f64>,
    pub feasible_tuples: usize,
    pub failed_tuples: usize,
    pub best: RefinedResult,
    /// Present when the Hessian at the optimum is positive definite.
    pub uncertainty: Option<UncertaintyReport>,
    pub uncertainty_error: Option<String>,
    pub ranges: Vec<RangeRow>,
    pub all_narrower: Option<bool>,
    /// All truths inside their final ranges, when truths are configured.
    pub truth_recovered: Option<bool>,
    pub rice_drain_q: f64,
    pub effective_r_irrig: Option<f64>,
}

fn brute_force_rows(names: &[String], ranked: &[BruteForceEntry]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["rank".to_string(), "index".to_string()];
    header.extend(names.iter().cloned());
    header.extend(
        ["sigma_h", "nll", "rmse_h", "h_pas", "gw_flux_per_m"]
            .iter()
            .map(|s| s.to_string()),
    );
    let rows = ranked
        .iter()
        .enumerate()
        .map(|(rank, e)| {
            let mut row = vec![(rank + 1).to_string(), e.index.to_string()];
            row.extend(e.params.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(e.sigma_h));
            row.push(fmt_f64(e.nll));
            match e.evaluation.as_ref().and_then(|ev| ev.qoi) {
                Some(q) => {
                    row.push(fmt_f64(q.rmse_h));
                    row.push(fmt_f64(q.h_pas));
                    row.push(fmt_f64(q.gw_flux_per_m));
                }
                None => row.extend(["", "", ""].iter().map(|s| s.to_string())),
            }
            row
        })
        .collect();
    (header, rows)
}

fn refinement_rows(names: &[String], refined: &[RefinedResult]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["seed_index".to_string()];
    header.extend(names.iter().map(|n| format!("seed_{n}")));
    header.push("seed_sigma_h".into());
    header.push("seed_nll".into());
    header.extend(names.iter().cloned());
    header.extend(
        ["sigma_h", "nll", "rmse_h", "h_pas", "gw_flux_per_m", "iterations", "converged", "best"]
            .iter()
            .map(|s| s.to_string()),
    );
    let rows = refined
        .iter()
        .map(|r| {
            let mut row = vec![r.seed_index.to_string()];
            row.extend(r.seed_params.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(r.seed_sigma_h));
            row.push(fmt_f64(r.seed_nll));
            row.extend(r.params.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(r.sigma_h));
            row.push(fmt_f64(r.nll));
            match r.evaluation.as_ref().and_then(|e| e.qoi) {
                Some(q) => {
                    row.push(fmt_f64(q.rmse_h));
                    row.push(fmt_f64(q.h_pas));
                    row.push(fmt_f64(q.gw_flux_per_m));
                }
                None => row.extend(["", "", ""].iter().map(|s| s.to_string())),
            }
            row.push(r.iterations.to_string());
            row.push(r.converged.to_string());
            row.push(r.best.to_string());
            row
        })
        .collect();
    (header, rows)
}

/// Brute force over the configured grid, Nelder-Mead refinement of the best
/// seeds and residual uncertainty at the best refined result. Writes
/// `brute_force.csv`, `refinement.csv`, `ranges.csv` and
/// `calibration_summary.json`. A non-positive-definite Hessian is reported
/// after the other files are written.
pub fn cmd_calibrate(cfg: &RunConfig, out: Option<&Path>) -> Result<CalibrationSummary> {
    cfg.validate(Command::Calibrate)?;
    let c = cfg.calibrate.as_ref().expect("validated");
    let grid = c.brute_force_grid()?;
    let space = cfg.parameter_space()?;
    let scenario = load_scenario(cfg)?;
    let observed = scenario.wells.observed();
    let nll_cfg = NllConfig {
        sigma_h: c.sigma_scan.low,
        h_pas_ref: c.nll.h_pas_ref,
        sigma_hpas: c.nll.sigma_hpas,
        n_wells: c.nll.n_wells.unwrap_or(observed.len()),
    };
    nll_cfg.validate()?;
    if nll_cfg.n_wells != observed.len() {
        return Err(Error::invalid(format!(
            "n_wells = {} but the scenario has {} wells",
            nll_cfg.n_wells,
            observed.len()
        )));
    }
    let model = ScenarioModel::new(scenario, &grid.names, &c.fixed, cfg.solver.clone())?;
    let params: Vec<ParameterDef> = grid
        .names
        .iter()
        .map(|n| space.get(n).cloned().expect("validated"))
        .collect();
    let dir = prepare_out(cfg, out)?;
    let eval = |x: &[f64]| model.evaluation(x);

    let ranked = brute_force(&grid, &eval, &observed, c.sigma_scan, &nll_cfg)?;
    let (h, rows) = brute_force_rows(&grid.names, &ranked);
    write_csv_records(&dir.join("brute_force.csv"), &h, &rows)?;

    let problem = CalibrationProblem::new(
        params.clone(),
        &grid.constraints,
        observed,
        nll_cfg,
        (c.sigma_bounds[0], c.sigma_bounds[1]),
        &eval,
    )?;
    let seeds = best_seeds(&ranked, c.seeds);
    let refined = refine(
        &problem,
        &seeds,
        &RefineOptions {
            nelder_mead: c.nelder_mead.clone(),
        },
    )?;
    let (h, rows) = refinement_rows(&grid.names, &refined);
    write_csv_records(&dir.join("refinement.csv"), &h, &rows)?;
    let best = refined.iter().find(|r| r.best).cloned().expect("one best");

    let uncertainty = residual_uncertainty(&problem, &best, &c.uncertainty);
    let truth = c.truth.as_ref();
    let ranges: Vec<RangeRow> = params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (std, lo, hi) = match &uncertainty {
                Ok(u) => (u.std[i], u.lower[i], u.upper[i]),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN),
            };
            let t = truth.and_then(|t| t.get(&p.name)).copied();
            RangeRow {
                parameter: p.name.clone(),
                initial_low: p.low,
                initial_high: p.high,
                optimum: best.params[i],
                std,
                final_low: lo,
                final_high: hi,
                narrower: hi - lo < p.high - p.low,
                truth: t,
                truth_inside: t.map(|t| t >= lo && t <= hi),
            }
        })
        .collect();
    write_csv(&dir.join("ranges.csv"), &ranges)?;

    let run = model.run(&best.params)?;
    let rice_drain_q = run.result.budget.drn_rice_out;
    let r_irrig = grid
        .names
        .iter()
        .position(|n| n == "R_Irrig")
        .map(|i| best.params[i])
        .or_else(|| c.fixed.get("R_Irrig").copied());
    let effective_r_irrig =
        r_irrig.map(|r| correct_recharge(r, model.scenario().irrigated_area(), rice_drain_q));
    let ok = uncertainty.is_ok();
    let summary = CalibrationSummary {
        parameters: grid.names.clone(),
        fixed: c.fixed.clone(),
        feasible_tuples: ranked.len(),
        failed_tuples: ranked.iter().filter(|e| !e.nll.is_finite()).count(),
        best,
        uncertainty_error: uncertainty.as_ref().err().map(|e| e.to_string()),
        all_narrower: ok.then(|| ranges.iter().all(|r| r.narrower)),
        truth_recovered: if ok && truth.is_some() {
            Some(ranges.iter().all(|r| r.truth_inside.unwrap_or(true)))
        } else {
            None
        },
        uncertainty: uncertainty.as_ref().ok().cloned(),
        ranges,
        rice_drain_q,
        effective_r_irrig,
    };
    write_json(&dir.join("calibration_summary.json"), &summary)?;
    uncertainty?;
    Ok(summary)
}

/// Writes the bundled synthetic scenario and its `config.toml` into `dir`.
pub fn scenario_init(dir: &Path, seed: Option<u64>) -> Result<PathBuf> {
    let mut opts = SyntheticOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    let syn = generate(&opts)?;
    syn.write(dir)?;
    Ok(dir.join("config.toml"))
}
