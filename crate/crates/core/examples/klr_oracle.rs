//! Exact Cheeger sets of convex polygons: the square, an equilateral triangle
//! and a random hull. Prints h and t* and writes the boundary of the last one.
//!
//!     cargo run --release --example klr_oracle [out.csv]

use alpha_cheeger::klr::{cheeger_exact, ConvexPolygon};
use std::fs::File;
use std::io::BufWriter;

fn main() -> alpha_cheeger::Result<()> {
    let hull = ConvexPolygon::hull(&[
        [0.1, 0.2],
        [0.8, 0.05],
        [0.95, 0.6],
        [0.5, 0.9],
        [0.15, 0.7],
        [0.5, 0.5],
    ])?;
    let shapes = [
        ("unit square", ConvexPolygon::unit_square()),
        ("triangle", ConvexPolygon::equilateral_triangle(1.0)),
        ("hull", hull),
    ];
    for (name, poly) in &shapes {
        let exact = cheeger_exact(poly)?;
        println!(
            "{name:12} h = {:.12}  t* = {:.12}  |C| = {:.6}  |dC| = {:.6}",
            exact.h,
            exact.t_star,
            exact.area(),
            exact.perimeter()
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        let exact = cheeger_exact(&shapes[2].1)?;
        exact.write_polyline_csv(64, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}
