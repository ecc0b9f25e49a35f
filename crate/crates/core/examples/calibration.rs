//! Brute force, Nelder-Mead refinement and residual uncertainty on the
//! synthetic scenario over a reduced grid.

use std::collections::BTreeMap;

use aquacal::calibrate::{
    best_seeds, brute_force, refine, residual_uncertainty, BruteForceGrid, CalibrationProblem,
    NllConfig, RefineOptions, SigmaScan, UncertaintyOptions,
};
use aquacal::gwflow::{NonlinearMethod, SolverOptions};
use aquacal::scenario::synthetic::{conductivity_ordering, generate, screening_parameters, SyntheticOptions};
use aquacal::scenario::ScenarioModel;

fn main() -> aquacal::Result<()> {
    let syn = generate(&SyntheticOptions::default())?;
    let truth = syn.options.truth.clone();
    let names: Vec<String> = ["K_zone1", "K_zone2", "K_zone3", "R_Irrig"].iter().map(|s| s.to_string()).collect();
    let fixed: BTreeMap<String, f64> = truth.iter().filter(|(k, _)| !names.contains(k)).map(|(k, v)| (k.clone(), *v)).collect();
    let solver = SolverOptions {
        method: NonlinearMethod::Picard,
        ..Default::default()
    };
    let model = ScenarioModel::new(syn.scenario.clone(), &names, &fixed, solver)?;
    let eval = |x: &[f64]| model.evaluation(x);

    let grid = BruteForceGrid {
        names: names.clone(),
        values: vec![
            vec![1.46e-4, 2.24e-4, 3.43e-4],
            vec![3.68e-4, 1e-3],
            vec![1.93e-3, 3.73e-3],
            vec![1.27e-8, 3.36e-8],
        ],
        constraints: conductivity_ordering().iter().map(|c| c.parse()).collect::<Result<_, _>>()?,
    };
    let observed = syn.scenario.wells.observed();
    let cfg = NllConfig {
        sigma_h: 1.0,
        h_pas_ref: 1.0,
        sigma_hpas: 0.3,
        n_wells: observed.len(),
    };
    let scan = SigmaScan {
        count: 50,
        low: 0.3,
        high: 4.5,
    };
    let ranked = brute_force(&grid, &eval, &observed, scan, &cfg)?;
    println!("{} feasible tuples, best NLL {:.3}", ranked.len(), ranked[0].nll);

    let params = screening_parameters().into_iter().filter(|p| names.contains(&p.name)).collect();
    let problem = CalibrationProblem::new(params, &grid.constraints, observed, cfg, (0.01, 100.0), &eval)?;
    let refined = refine(&problem, &best_seeds(&ranked, 3), &RefineOptions::default())?;
    for r in &refined {
        println!("seed {:4}: NLL {:.3} -> {:.3}{}", r.seed_index, r.seed_nll, r.nll, if r.best { " (best)" } else { "" });
    }

    let best = refined.iter().find(|r| r.best).expect("one best result");
    let u = residual_uncertainty(&problem, best, &UncertaintyOptions::default())?;
    for (i, n) in u.names.iter().enumerate() {
        println!(
            "{n:8} {:.3e} +/- {:.1e}  [{:.3e}, {:.3e}]  truth {:.3e}",
            u.optimum[i], 2.0 * u.std[i], u.lower[i], u.upper[i], truth[n]
        );
    }
    Ok(())
}
