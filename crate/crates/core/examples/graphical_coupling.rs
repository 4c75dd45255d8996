use contact_lattice::graphical::{couple_monotone, replay, GraphicalTimeline, SymbolType};
use contact_lattice::{Configuration, Geometry, QParameterization, SiteState};

fn main() -> contact_lattice::Result<()> {
    let g = Geometry::torus(16, 16)?;
    let p = QParameterization::model_b_ratios(3.0, 1.0, 4.0, 1.0, 1.0)?;
    let tl = GraphicalTimeline::build(g, 0.0, 20.0, &p, 42)?;
    println!("{} symbols on {} sites over [0, 20]", tl.len(), g.site_count());

    let start = Configuration::uniform(g, SiteState::Occupied);
    for q in [0.3, 0.6, 0.9] {
        let types = tl.resolve_all(q)?;
        let ups = types.iter().filter(|t| t.is_up()).count();
        let arrows = types.iter().filter(|t| matches!(t, SymbolType::A1(_))).count();
        let end = replay(&tl, q, &start)?;
        println!("q = {q}: {ups} up symbols ({arrows} arrows), final density {:.3}", end.density());
    }

    let low = Configuration::uniform(g, SiteState::Degraded);
    let check = couple_monotone(&tl, 0.4, 0.7, &low, &start, 20.0)?;
    println!("coupled q = 0.4 / 0.7: ordered {} after {} symbols", check.ordered, check.events);

    let mut bytes = Vec::new();
    tl.write_binary(&mut bytes)?;
    let back = GraphicalTimeline::read_binary(bytes.as_slice())?;
    println!("binary timeline {} bytes, round trip equal: {}", bytes.len(), back == tl);
    Ok(())
}
