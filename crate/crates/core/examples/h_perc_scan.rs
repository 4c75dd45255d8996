use contact_lattice::graphical::SnapshotPlan;
use contact_lattice::percolation::{check_envelope, h_perc_scan, FiniteSizeOptions, ScanSettings};
use contact_lattice::{Geometry, RateSet};

fn main() -> contact_lattice::Result<()> {
    let fixed = RateSet::model_b(0.4, 0.05, 0.0, 0.0, 0.5)?;
    let s = ScanSettings {
        geometry: Geometry::torus(32, 32)?,
        n: 6,
        eps_hat: 0.05,
        bisection_tol: 0.1,
        h_max: 8.0,
        plan: SnapshotPlan {
            burn_in: 20.0,
            spacing: 2.0,
            count: 20,
        },
        replicas: 10,
        seed: 3,
        check: FiniteSizeOptions::default(),
    };
    let entries = h_perc_scan(&fixed, &[0.05, 0.15, 0.25], &s)?;
    for e in &entries {
        println!("lambda {:.2}: h_perc in [{:.3}, {:.3}]", e.lambda, e.h_lo, e.h_hi);
    }
    println!("envelope {:?}", check_envelope(&entries));
    Ok(())
}
