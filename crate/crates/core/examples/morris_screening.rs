//! Elementary-effects screening of the synthetic scenario's seven parameters.

use std::collections::BTreeMap;

use aquacal::gwflow::{NonlinearMethod, SolverOptions};
use aquacal::morris::{run_morris, MorrisSettings, ParameterSpace, Strategy};
use aquacal::scenario::synthetic::{generate, screening_parameters, SyntheticOptions};
use aquacal::scenario::ScenarioModel;

fn main() -> aquacal::Result<()> {
    let syn = generate(&SyntheticOptions::default())?;
    let space = ParameterSpace::new(screening_parameters())?;
    let solver = SolverOptions {
        method: NonlinearMethod::Picard,
        ..Default::default()
    };
    let model = ScenarioModel::new(syn.scenario, &space.names(), &BTreeMap::new(), solver)?;
    let outputs = model.screening_output_names();

    let settings = MorrisSettings {
        r_list: vec![10],
        pool_size: 40,
        seed: 2014,
        strategy: Strategy::Greedy,
    };
    let report = run_morris(&space, &|x: &[f64]| model.screening_outputs(x), &outputs, &settings)?;

    let res = &report.runs[0].result;
    for q in 0..3 {
        println!("{}", res.qoi_names[q]);
        let ranks = res.ranks(q);
        let mut order: Vec<usize> = (0..ranks.len()).collect();
        order.sort_by_key(|&i| ranks[i]);
        for i in order {
            let s = res.stats[q][i];
            println!("  {:8} mu* {:10.3e}  sigma {:10.3e}", res.param_names[i], s.mu_star, s.sigma);
        }
    }
    Ok(())
}
