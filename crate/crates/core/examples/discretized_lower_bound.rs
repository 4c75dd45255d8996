use contact_lattice::graphical::{dropped_symbol_count, eta_qn, implied_lower_bound, indicators, GraphicalTimeline};
use contact_lattice::{Geometry, QParameterization};

fn main() -> contact_lattice::Result<()> {
    let g = Geometry::torus(12, 12)?;
    let p = QParameterization::model_b_ratios(3.0, 1.0, 4.0, 1.0, 1.0)?;
    let (q, delta, n) = (0.8, 0.05, 9);
    let x = g.index(6, 6);
    for seed in 0..5 {
        let tl = GraphicalTimeline::build(g, -3.0, 0.0, &p, seed)?;
        let eta = eta_qn(&tl, x, q, n)?;
        let lower = implied_lower_bound(&tl, q, delta, x, n)?;
        let dropped = dropped_symbol_count(&tl, q, delta, x, n)?;
        let ind = indicators(&tl, q, delta)?;
        println!("seed {seed}: eta {eta:?} lower {lower:?} dropped {dropped} indicators {}", ind.ones());
    }
    Ok(())
}
