//! CSV serialization of profiles.

use std::io::{self, Write};

use super::grid::{Grid, GridKind};
use super::{ComplexField, Field};

fn header(grid: &Grid) -> String {
    let p = grid.params();
    let kind = match p.kind {
        GridKind::Radial => "radial",
        GridKind::Cylindrical => "cylindrical",
    };
    let mut s = format!(
        "# grid kind={kind} N={} K={} n_r={} r_max={:.16e} axis_exponent={:.16e}",
        p.n, p.k, p.n_r, p.r_max, p.axis_exponent
    );
    if p.kind == GridKind::Cylindrical {
        s.push_str(&format!(" n_z={} z_max={:.16e}", p.n_z, p.z_max));
    }
    s
}

fn write_rows<W: Write>(out: &mut W, grid: &Grid, columns: &str, row: impl Fn(usize) -> String) -> io::Result<()> {
    writeln!(out, "{}", header(grid))?;
    let cyl = grid.kind() == GridKind::Cylindrical;
    if cyl {
        writeln!(out, "r,z,{columns}")?;
    } else {
        writeln!(out, "r,{columns}")?;
    }
    for (k, (r, z)) in grid.nodes().enumerate() {
        if cyl {
            writeln!(out, "{r:.16e},{z:.16e},{}", row(k))?;
        } else {
            writeln!(out, "{r:.16e},{}", row(k))?;
        }
    }
    Ok(())
}

/// `r[,z],value`
pub fn write_profile_csv<W: Write>(field: &Field, out: &mut W) -> io::Result<()> {
    let v = field.values();
    write_rows(out, field.grid(), "value", |k| format!("{:.16e}", v[k]))
}

/// `r[,z],re,im`
pub fn write_complex_csv<W: Write>(field: &ComplexField, out: &mut W) -> io::Result<()> {
    let v = field.values();
    write_rows(out, field.grid(), "re,im", |k| {
        format!("{:.16e},{:.16e}", v[k].re, v[k].im)
    })
}
