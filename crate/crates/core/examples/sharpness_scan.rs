use contact_lattice::graphical::SnapshotPlan;
use contact_lattice::harness::{sharpness_scan, SharpnessSettings};
use contact_lattice::percolation::{FiniteSizeOptions, TailOptions};
use contact_lattice::{Geometry, QParameterization};

fn main() -> contact_lattice::Result<()> {
    let base = QParameterization::model_b_ratios(3.0, 1.0, 4.0, 1.0, 1.0)?;
    let settings = SharpnessSettings {
        plan: SnapshotPlan {
            burn_in: 50.0,
            spacing: 2.0,
            count: 50,
        },
        replicas: 4,
        eps_hat: 0.05,
        n_grid: (1..=12).collect(),
        tail: TailOptions {
            all_origins: true,
            ..TailOptions::default()
        },
        check: FiniteSizeOptions::default(),
    };
    let q = [0.3, 0.6, 0.8, 0.95];
    let report = sharpness_scan(&base, &q, &Geometry::torus(64, 64)?, &[8, 16], &settings, 1)?;
    for r in &report.rows {
        let d: Vec<_> = r
            .checks
            .iter()
            .map(|c| (c.n, c.decision, c.horizontal_count))
            .collect();
        println!("q = {:.2}: density {:.4} tail {:?} decisions {:?}", r.q, r.density, r.tail.classification, d);
    }
    println!("consistent ordering: {}", report.consistent);
    Ok(())
}
