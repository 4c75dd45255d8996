use contact_lattice::percolation::{crossing, label_clusters, CrossDirection, Rect};
use contact_lattice::{Configuration, Geometry};

fn main() -> contact_lattice::Result<()> {
    let rows = [
        "1 1 0 0 0 1",
        "0 1 0 -1 0 0",
        "0 1 1 0 1 1",
        "0 0 0 0 0 1",
        "1 0 -1 1 0 0",
    ];
    let vals: Vec<i8> = rows
        .iter()
        .flat_map(|r| r.split_whitespace().map(|v| v.parse::<i8>().unwrap()))
        .collect();
    let c = Configuration::from_values(Geometry::torus(6, 5)?, &vals)?;
    let r = label_clusters(&c);
    println!("cluster sizes {:?}, origin cluster {} (wraps {})", r.sizes, r.origin_size, r.origin_wraps);
    println!("histogram {:?}", r.size_histogram());
    let rect = Rect::new(0, 0, 3, 4);
    println!(
        "window {rect:?}: horizontal {} vertical {}",
        crossing(&c, rect, CrossDirection::Horizontal)?,
        crossing(&c, rect, CrossDirection::Vertical)?
    );
    Ok(())
}
