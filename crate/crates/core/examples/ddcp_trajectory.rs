use contact_lattice::ddcp::{solve_trajectory, DensityLaw, InitialLaw, TrajectoryOptions};
use contact_lattice::{Geometry, RateSet};

fn main() -> contact_lattice::Result<()> {
    let law = DensityLaw::Kefi {
        beta: 2.0,
        delta: 0.3,
        epsilon: 0.9,
        g: 0.5,
    };
    let fixed = RateSet::model_b(0.4, 0.1, 0.0, 0.0, 0.5)?;
    let opts = TrajectoryOptions {
        horizon: 10.0,
        dt_grid: 0.5,
        replicas: 16,
        tol: 0.01,
        max_sweeps: 30,
        initial_window: 4,
    };
    let sol = solve_trajectory(&law, &fixed, &InitialLaw::all_occupied(), &Geometry::torus(24, 24)?, &opts, 5)?;
    println!("converged {} after {} sweeps, residual {:.2e}", sol.converged, sol.sweeps, sol.residual);
    for (c, ((r, l), h)) in sol.rho.iter().zip(&sol.lambda).zip(&sol.h).enumerate().step_by(4) {
        println!("t = {:>4.1}: rho {:.3} lambda {:.3} h {:.3}", c as f64 * sol.grid_dt, r, l, h);
    }
    Ok(())
}
