use contact_lattice::dynamics::{run, RateSchedule};
use contact_lattice::rng;
use contact_lattice::{Configuration, Geometry, RateSet, SiteState};

fn main() -> contact_lattice::Result<()> {
    let g = Geometry::torus(32, 32)?;
    let fixed = RateSet::model_a(1.0, 0.2, 0.6, 0.3, 0.05, 0.1)?;
    // Spontaneous births switch off halfway.
    let schedule = RateSchedule::new(fixed, 10.0, vec![0.6, 0.6, 0.6, 0.6], vec![0.5, 0.5, 0.0, 0.0])?;
    let start = Configuration::uniform(g, SiteState::Vacant);
    let res = run(start, &schedule, 40.0, &mut rng::stream(7), 5.0)?;
    println!("events {}", res.event_count);
    for (k, d) in res.density_trace.iter().enumerate() {
        println!("t = {:>4.1}  density {:.4}", k as f64 * res.sample_dt, d);
    }
    Ok(())
}
