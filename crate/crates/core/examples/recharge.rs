//! Weekly precipitation recharge for the synthetic sub-basins.

use aquacal::hydrology::{basin_recharge_flux, compute_recharge};
use aquacal::scenario::synthetic::{generate, SyntheticOptions};

fn main() -> aquacal::Result<()> {
    let syn = generate(&SyntheticOptions::default())?;
    let (series, filled) = compute_recharge(&syn.basins, &syn.stations, Some(syn.donor.as_str()))?;
    println!("{} values filled from the donor station", filled.len());

    for s in &series {
        println!("{} ({} km2)", s.basin, s.area_km2);
        println!("  week        P      Pe     PET    R");
        for w in s.weeks.iter().filter(|w| syn.period.contains(w.week_start)) {
            println!(
                "  {}  {:6.1} {:6.1} {:6.1} {:6.1}",
                w.week_start, w.p, w.p_e, w.pet, w.r_p
            );
        }
    }

    let summary = basin_recharge_flux(&series, syn.period)?;
    for b in &summary.basins {
        println!("{}: {:.2} mm/week = {:.3e} m/s", b.basin, b.mean_r_p_mm_week, b.flux);
    }
    println!("domain: {:.3e} m/s", summary.domain_flux);
    Ok(())
}
