//! Plain PGM rasters of densities and SVG overlays of packings.

use std::io::Write;

use crate::error::Result;
use crate::grid::PhaseSystem;
use crate::packing::PackingResult;
use crate::shape::Shape;

/// 8-bit grayscale raster, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    /// Binary PGM (P5, maxval 255).
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)?;
        w.flush()?;
        Ok(())
    }
}

fn to_gray(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

/// Node indices of the rendered plane (the middle z-slice in 3D), in raster
/// order with `y` growing upwards.
fn raster_nodes(sys: &PhaseSystem) -> (usize, Vec<usize>) {
    let g = sys.grid();
    let m = g.m();
    let z = if g.dim() == 3 {
        (m / 2) * g.stride(2)
    } else {
        0
    };
    let mut idx = Vec::with_capacity(m * m);
    for row in 0..m {
        let j = m - 1 - row;
        for i in 0..m {
            idx.push(z + j * g.stride(1) + i);
        }
    }
    (m, idx)
}

/// `round(255 u_i)` per node.
pub fn phase_image(sys: &PhaseSystem, phase: usize) -> GrayImage {
    let (m, idx) = raster_nodes(sys);
    let u = sys.phase(phase).values();
    GrayImage {
        width: m,
        height: m,
        pixels: idx.iter().map(|&n| to_gray(u[n])).collect(),
    }
}

/// Each node shows the gray level `255 (i + 1) / k` of its dominant phase `i`,
/// or black where no phase exceeds 1/2.
pub fn composite_image(sys: &PhaseSystem) -> GrayImage {
    let (m, idx) = raster_nodes(sys);
    let k = sys.k();
    let pixels = idx
        .iter()
        .map(|&n| {
            let (best, val) = (0..k)
                .map(|i| (i, sys.phase(i).values()[n]))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            if val > 0.5 {
                (255.0 * (best + 1) as f64 / k as f64).round() as u8
            } else {
                0
            }
        })
        .collect();
    GrayImage {
        width: m,
        height: m,
        pixels,
    }
}

/// Disks (or the `z`-projection of balls) over the domain outline.
pub fn packing_svg<W: Write>(res: &PackingResult, mut w: W) -> Result<()> {
    let ext = &res.config.domain.extent;
    let size = 512.0;
    let scale = size / ext[0].max(ext[1]);
    let (wd, ht) = (ext[0] * scale, ext[1] * scale);
    let px = |x: f64| x * scale;
    let py = |y: f64| ht - y * scale;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{wd:.1}" height="{ht:.1}" viewBox="0 0 {wd:.1} {ht:.1}">"#
    )?;
    let style = r##"fill="none" stroke="#000" stroke-width="1.5""##;
    match &res.config.domain.shape {
        Shape::Box => writeln!(
            w,
            r#"<rect x="0" y="0" width="{wd:.3}" height="{ht:.3}" {style}/>"#
        )?,
        Shape::Ball { center, radius } => writeln!(
            w,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" {style}/>"#,
            px(center[0]),
            py(center[1]),
            radius * scale
        )?,
        Shape::Polygon { vertices } => {
            let pts: Vec<String> = vertices
                .iter()
                .map(|v| format!("{:.3},{:.3}", px(v[0]), py(v[1])))
                .collect();
            writeln!(w, r#"<polygon points="{}" {style}/>"#, pts.join(" "))?;
        }
        Shape::Tetrahedron { vertices } => {
            for a in 0..4 {
                for b in a + 1..4 {
                    writeln!(
                        w,
                        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" {style}/>"#,
                        px(vertices[a][0]),
                        py(vertices[a][1]),
                        px(vertices[b][0]),
                        py(vertices[b][1])
                    )?;
                }
            }
        }
        Shape::Implicit(_) => {}
    }
    for (c, r) in res.config.centers.iter().zip(&res.config.radii) {
        writeln!(
            w,
            r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="#9ab" fill-opacity="0.6" stroke="#234"/>"##,
            px(c[0]),
            py(c[1]),
            r * scale
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}
