use contact_lattice::{Configuration, Geometry, QParameterization, RateSet, SiteState};

fn main() -> contact_lattice::Result<()> {
    let g = Geometry::torus(4, 3)?;
    let mut c = Configuration::uniform(g, SiteState::Vacant);
    c.set(g.index(1, 1), SiteState::Occupied);
    c.set(g.index(2, 1), SiteState::Degraded);
    println!("sites {} occupied {} density {:.3}", g.site_count(), c.occupied_count(), c.density());
    for (d, n) in g.neighbors(g.index(0, 0))? {
        println!("  neighbour {d:?}: {n:?}");
    }

    let b = RateSet::model_b(0.3, 0.1, 0.2, 0.05, 0.05)?;
    println!("model B rates {b:?}");
    println!("line total {:.3}, up block {:.3}", b.line_total(), b.up_total());

    let p = QParameterization::model_b_ratios(3.0, 1.0, 4.0, 1.0, 1.0)?;
    for q in [0.1, 0.5, 0.9] {
        let r = p.rates_at(q)?;
        println!("q = {q}: kappa {:.4} kappa* {:.4} lambda {:.4} h {:.4} h~ {:.4}", r.kappa, r.kappa_tilde, r.lambda, r.h, r.h_tilde);
    }
    Ok(())
}
