use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::grid::GridFunction;
use crate::solver::GroundStateResult;

/// CSV writer: UTF-8, LF line endings, header first.
pub struct Csv {
    out: BufWriter<File>,
    columns: usize,
}

impl Csv {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(header.join(",").as_bytes())?;
        out.write_all(b"\n")?;
        Ok(Self { out, columns: header.len() })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        self.out.write_all(cells.join(",").as_bytes())?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal, empty for `None`.
pub fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Grid coordinates followed by the field value, one row per point.
pub fn write_field(path: &Path, field: &GridFunction, name: &str) -> Result<()> {
    let grid = field.grid();
    let axes = ["x", "y", "z"];
    let mut header: Vec<&str> = axes[..grid.dim()].to_vec();
    header.push(name);
    let mut csv = Csv::create(path, &header)?;
    for (idx, &v) in field.values().iter().enumerate() {
        let x = grid.point(idx);
        let mut row: Vec<String> = x[..grid.dim()].iter().map(|c| c.to_string()).collect();
        row.push(v.to_string());
        csv.row(&row)?;
    }
    csv.finish()
}

#[derive(Serialize)]
struct DumpSidecar<'a> {
    format: &'static str,
    layout: &'static str,
    dim: usize,
    length: f64,
    n: usize,
    count: usize,
    occupations: &'a [f64],
    mu: &'a [f64],
    energy: f64,
    p: f64,
    mass: f64,
}

/// Orbitals as consecutive little-endian f64 arrays plus a JSON sidecar.
/// Returns the two file names.
pub fn dump_orbitals(dir: &Path, tag: &str, state: &GroundStateResult) -> Result<[String; 2]> {
    let bin = format!("orbitals_{tag}.f64");
    let side = format!("orbitals_{tag}.json");
    let mut out = BufWriter::new(File::create(dir.join(&bin))?);
    for u in state.orbitals.orbitals() {
        for v in u.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    let grid = &state.grid;
    let sidecar = DumpSidecar {
        format: "f64le",
        layout: "orbital-major; each orbital row-major over the grid, last axis fastest; x_j = -L/2 + j L/n",
        dim: grid.dim(),
        length: grid.length(),
        n: grid.n(),
        count: state.orbitals.len(),
        occupations: state.orbitals.occupations(),
        mu: &state.mu,
        energy: state.energy,
        p: state.params.p,
        mass: state.params.mass,
    };
    std::fs::write(dir.join(&side), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok([bin, side])
}

/// Reads a dump written by [`dump_orbitals`].
pub fn read_orbital_dump(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}
