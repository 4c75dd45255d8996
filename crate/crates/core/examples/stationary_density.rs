use contact_lattice::dynamics::{stationary_density, StationaryOptions};
use contact_lattice::oracle::{build_generator, stationary};
use contact_lattice::rng;
use contact_lattice::{Geometry, RateSet};

fn main() -> contact_lattice::Result<()> {
    // Without contact every site is an independent chain with uniform law.
    let g = Geometry::torus(16, 16)?;
    let a = RateSet::model_a(1.0, 1.0, 0.0, 0.0, 1.0, 1.0)?;
    let est = stationary_density(&a, &g, &StationaryOptions::new(50.0, 500.0), &mut rng::stream(1))?;
    println!("no-contact model A: rho = {:.4} +- {:.4} (exact 1/3)", est.rho, 3.0 * est.std_err);

    let small = Geometry::torus(2, 2)?;
    let b = RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4)?;
    let exact = stationary(&build_generator(&b, &small)?)?.occupied_probability(0);
    let est = stationary_density(&b, &small, &StationaryOptions::new(200.0, 20_000.0), &mut rng::stream(2))?;
    println!("model B 2x2: rho = {:.4} +- {:.4}, exact {:.4}", est.rho, 2.576 * est.std_err, exact);
    Ok(())
}
