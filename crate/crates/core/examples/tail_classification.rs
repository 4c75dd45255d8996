use contact_lattice::dynamics::Engine;
use contact_lattice::percolation::{label_clusters, tail_estimate, TailOptions};
use contact_lattice::rng;
use contact_lattice::{Configuration, Geometry, RateSet, SiteState};

fn main() -> contact_lattice::Result<()> {
    let g = Geometry::torus(48, 48)?;
    let rates = RateSet::model_b(1.0, 0.2, 0.15, 0.05, 0.4)?;
    let mut e = Engine::new(Configuration::uniform(g, SiteState::Occupied), rates)?;
    let mut r = rng::stream(3);
    let mut reports = Vec::new();
    for k in 0..200 {
        e.advance(20.0 + k as f64, &mut r);
        reports.push(label_clusters(e.config()).without_labels());
    }
    let opts = TailOptions {
        all_origins: true,
        ..TailOptions::default()
    };
    let est = tail_estimate(&reports, &[1, 2, 3, 4, 6, 8, 12, 16], &opts)?;
    for p in &est.points {
        println!("P(|C| >= {:>2}) = {:.3e}", p.n, p.p_hat);
    }
    println!("{:?}, fit {:?}", est.classification, est.fit);
    Ok(())
}
