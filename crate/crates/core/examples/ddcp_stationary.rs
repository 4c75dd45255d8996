use contact_lattice::ddcp::{solve_stationary_multistart, DensityLaw, StationarySolveOptions};
use contact_lattice::dynamics::StationaryOptions;
use contact_lattice::{Geometry, RateSet};

fn main() -> contact_lattice::Result<()> {
    let law = DensityLaw::Kefi {
        beta: 2.0,
        delta: 0.3,
        epsilon: 0.9,
        g: 0.5,
    };
    let fixed = RateSet::model_b(0.4, 0.1, 0.0, 0.0, 0.5)?;
    let opts = StationarySolveOptions {
        tol: 5e-3,
        ..StationarySolveOptions::new(StationaryOptions::new(30.0, 100.0))
    };
    let starts = [(0.05, 0.05), (0.4, 0.3)];
    let pts = solve_stationary_multistart(&law, &fixed, &Geometry::torus(24, 24)?, &starts, &opts, 11)?;
    for (s, p) in starts.iter().zip(&pts) {
        println!(
            "start {s:?}: lambda* {:.4} h* {:.4} rho* {:.4} residual {:.1e} ({} iterations)",
            p.lambda_star, p.h_star, p.rho_star, p.residual, p.iterations
        );
    }
    Ok(())
}
