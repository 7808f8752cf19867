//! Refines the start mesh towards the corner (0, 0) by newest-vertex
//! bisection and prints the element count and the smallest angle per level.
//!
//! ```text
//! cargo run --example mesh_refinement -- corner.txt
//! ```

use layerfem::mesh::{uniform_initial_mesh, Rectangle};

fn main() -> layerfem::Result<()> {
    let mut mesh = uniform_initial_mesh(Rectangle::unit_square(), 6)?;
    let initial_angle = mesh.min_angle().to_degrees();
    println!("level  elements  vertices  min angle (deg)");
    for level in 0..=12 {
        println!(
            "{level:>5}  {:>8}  {:>8}  {:>8.3}",
            mesh.num_triangles(),
            mesh.num_vertices(),
            mesh.min_angle().to_degrees()
        );
        let marked: Vec<usize> = (0..mesh.num_triangles())
            .filter(|&t| {
                let c = mesh.geometry(t).centroid();
                c[0].hypot(c[1]) < 0.25
            })
            .collect();
        mesh = mesh.refine(&marked);
    }
    println!("start mesh min angle {initial_angle:.3} deg, area {:.15}", mesh.total_area());

    if let Some(path) = std::env::args().nth(1) {
        mesh.write_dump(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
