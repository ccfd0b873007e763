//! Legacy ASCII VTK output of a run's final fields.
//!
//! Layout (frozen, golden-tested): an unstructured grid of triangles with
//! the design φ as a vertex scalar, and the velocity (value at the element
//! centroid — the mean of the three edge dofs), pressure, and the two local
//! error indicators as cell data.

use std::io::Write;
use std::path::Path;

use topoflow::estimator::Indicators;
use topoflow::fespace::{PhaseField, PressureField, VelocityField};
use topoflow::mesh::Mesh;

pub fn render_vtk(
    mesh: &Mesh,
    phi: &PhaseField,
    u: &VelocityField,
    p: &PressureField,
    indicators: &Indicators,
) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("topoflow fields\n");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");

    let n_v = mesh.n_vertices();
    let n_t = mesh.n_elements();
    s.push_str(&format!("POINTS {n_v} double\n"));
    for v in &mesh.vertices {
        s.push_str(&format!("{} {} 0\n", v[0], v[1]));
    }
    s.push_str(&format!("CELLS {n_t} {}\n", 4 * n_t));
    for e in &mesh.elements {
        s.push_str(&format!("3 {} {} {}\n", e[0], e[1], e[2]));
    }
    s.push_str(&format!("CELL_TYPES {n_t}\n"));
    for _ in 0..n_t {
        s.push_str("5\n");
    }

    s.push_str(&format!("POINT_DATA {n_v}\n"));
    s.push_str("SCALARS phi double 1\nLOOKUP_TABLE default\n");
    for &v in &phi.nodal_values {
        s.push_str(&format!("{v}\n"));
    }

    s.push_str(&format!("CELL_DATA {n_t}\n"));
    s.push_str("VECTORS velocity double\n");
    for t in 0..n_t {
        let loc = u.local(mesh, t);
        let cx = (loc[0][0] + loc[1][0] + loc[2][0]) / 3.0;
        let cy = (loc[0][1] + loc[1][1] + loc[2][1]) / 3.0;
        s.push_str(&format!("{cx} {cy} 0\n"));
    }
    s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for &v in &p.cell_values {
        s.push_str(&format!("{v}\n"));
    }
    for (name, sq) in [("eta1", &indicators.eta1_sq), ("eta2", &indicators.eta2_sq)] {
        s.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for &v in sq.iter() {
            s.push_str(&format!("{}\n", v.sqrt()));
        }
    }
    s
}

pub fn write_vtk(
    mesh: &Mesh,
    phi: &PhaseField,
    u: &VelocityField,
    p: &PressureField,
    indicators: &Indicators,
    path: &Path,
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(render_vtk(mesh, phi, u, p, indicators).as_bytes())
}
