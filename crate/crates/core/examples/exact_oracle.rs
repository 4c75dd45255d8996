use contact_lattice::oracle::{build_generator, export_vectors, stationary, tv_curve};
use contact_lattice::{Configuration, Geometry, RateSet, SiteState};

fn main() -> contact_lattice::Result<()> {
    let g = Geometry::torus(2, 2)?;
    let b = RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4)?;
    let gen = build_generator(&b, &g)?;
    let pi = stationary(&gen)?;
    println!("{} states, stationary site-0 law {:?}", gen.dimension(), pi.marginal(&[0]));

    let start = Configuration::uniform(g, SiteState::Degraded);
    let (_, curve) = tv_curve(&gen, &start, &[0], &[0.5, 1.0, 2.0, 4.0, 8.0])?;
    for p in &curve {
        println!("t = {:>3}: tv {:.3e}  bound {:.3e}", p.t, p.tv, p.bound);
    }
    let v = export_vectors(&gen, &start, &[0], &[1.0])?;
    println!("exported vector: {} probabilities, encoding: {}", v.stationary.len(), v.encoding);
    Ok(())
}
