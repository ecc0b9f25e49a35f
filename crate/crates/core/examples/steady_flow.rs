//! Unconfined flow between two fixed heads compared with the Dupuit parabola.

use std::collections::BTreeMap;

use aquacal::gwflow::{
    build_grid, solve_steady, BoundarySet, Cell, ConstantHead, GridSpec, LayerKind, NonlinearMethod,
    SolverOptions,
};

fn main() -> aquacal::Result<()> {
    let n = 50;
    let (h0, hl, length) = (10.0, 5.0, 1000.0);
    let mut spec = GridSpec::uniform(1, n, length / n as f64, 1.0, 50.0, 0.0);
    spec.layer_fractions = vec![1.0];
    spec.layer_kind = vec![LayerKind::Convertible];
    spec.zone_id = vec![1; n];
    let grid = build_grid(spec)?;

    let mut bcs = BoundarySet::new(&grid);
    for (col, head) in [(0, h0), (n - 1, hl)] {
        bcs.chd.push(ConstantHead {
            cell: Cell::new(0, 0, col),
            head,
            river: false,
        });
    }
    let k = BTreeMap::from([(1, 1e-4)]);

    for method in [NonlinearMethod::Picard, NonlinearMethod::Newton] {
        let opts = SolverOptions {
            method,
            ..Default::default()
        };
        let res = solve_steady(&grid, &k, &bcs, &opts)?;
        let l = (n - 1) as f64 * grid.dx();
        let worst = (0..n)
            .map(|i| {
                let x = i as f64 * grid.dx();
                let exact = (h0 * h0 - (h0 * h0 - hl * hl) * x / l).sqrt();
                (res.heads[i] - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        println!(
            "{method:?}: {} iterations, max relative error {worst:.2e}, budget discrepancy {:.2e}",
            res.iterations,
            res.budget.discrepancy()
        );
    }
    Ok(())
}
