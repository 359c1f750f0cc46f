//! Legacy ASCII VTK output.

use std::io::Write;

use crate::error::Result;
use crate::geometry::mesh::Mesh2D;

/// Write the mesh with region tags as cell data and optional point data arrays.
pub fn write_vtk<W: Write + ?Sized>(out: &mut W, mesh: &Mesh2D, point_data: &[(&str, &[f64])]) -> Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "cornerlab mesh h={}", mesh.h)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.vertices.len())?;
    for p in &mesh.vertices {
        writeln!(out, "{:.17e} {:.17e} 0", p.x, p.y)?;
    }
    let nt = mesh.triangles.len();
    writeln!(out, "CELLS {} {}", nt, 4 * nt)?;
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    writeln!(out, "CELL_DATA {nt}")?;
    writeln!(out, "SCALARS region int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for r in &mesh.regions {
        writeln!(out, "{}", r.tag())?;
    }
    if !point_data.is_empty() {
        writeln!(out, "POINT_DATA {}", mesh.vertices.len())?;
        for (name, data) in point_data {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in data.iter() {
                writeln!(out, "{v:.17e}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};

    #[test]
    fn header_and_counts() {
        let m = build_mesh(&DomainSpec::square(0.5), 0.2, 1.0, 0.3, 1.0).unwrap();
        let vals = vec![1.0; m.vertices.len()];
        let mut buf = Vec::new();
        write_vtk(&mut buf, &m, &[("abs", &vals)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("# vtk DataFile Version 3.0"));
        assert!(s.contains(&format!("POINTS {} double", m.vertices.len())));
        assert!(s.contains(&format!("CELLS {} {}", m.triangles.len(), 4 * m.triangles.len())));
        assert!(s.contains("SCALARS abs double 1"));
    }
}
