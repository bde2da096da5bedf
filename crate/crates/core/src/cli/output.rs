use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::BoundaryTrace;
use crate::grid::GridSpec;
use crate::state::StateSnapshot;

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// CSV text with a header and rows of floats in 17-digit scientific notation.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub const CONTROL_HEADER: &str = "t,node_index,component,value";

/// Control levels as `t,node_index,component,value` rows.
pub fn control_to_csv(grid: &GridSpec, h: &[BoundaryTrace]) -> String {
    let mut s = String::from(CONTROL_HEADER);
    s.push('\n');
    for (k, level) in h.iter().enumerate() {
        let t = grid.time(k);
        for ((node, c), v) in level.values.indexed_iter() {
            let _ = writeln!(s, "{t:.16e},{node},{c},{v:.16e}");
        }
    }
    s
}

/// Reads a control file written by [`control_to_csv`] and checks it against `grid`.
pub fn control_from_csv(grid: &GridSpec, text: &str) -> Result<Vec<BoundaryTrace>> {
    let levels = grid.n_steps() + 1;
    let (nodes, comps) = (grid.n_boundary(), grid.n_dir);
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CONTROL_HEADER => {}
        _ => return Err(Error::Config(format!("control file: line 1: expected header '{CONTROL_HEADER}'"))),
    }
    let mut out = vec![BoundaryTrace { values: Array2::zeros((nodes, comps)) }; levels];
    let mut seen = vec![false; levels * nodes * comps];
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Config(format!("control file: line {n}: {what}"));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(bad("expected 4 columns"));
        }
        let t: f64 = f[0].parse().map_err(|_| bad("bad time"))?;
        let node: usize = f[1].parse().map_err(|_| bad("bad node index"))?;
        let c: usize = f[2].parse().map_err(|_| bad("bad component"))?;
        let v: f64 = f[3].parse().map_err(|_| bad("bad value"))?;
        let k = (t / grid.dt).round();
        if !(k >= 0.0 && (k as usize) < levels && (grid.time(k as usize) - t).abs() <= 1e-9 * grid.dt) {
            return Err(bad(&format!("time {t} is not a level of the grid")));
        }
        let k = k as usize;
        if node >= nodes || c >= comps {
            return Err(bad(&format!("index ({node}, {c}) outside {nodes} nodes x {comps} components")));
        }
        if !v.is_finite() {
            return Err(bad("non-finite value"));
        }
        let slot = (k * nodes + node) * comps + c;
        if seen[slot] {
            return Err(bad("duplicate entry"));
        }
        seen[slot] = true;
        out[k].values[[node, c]] = v;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        let k = missing / (nodes * comps);
        return Err(Error::Config(format!(
            "control file: {} entries missing, first at level {k}",
            seen.iter().filter(|s| !**s).count()
        )));
    }
    Ok(out)
}

fn vtk_header(grid: &GridSpec, title: &str) -> String {
    format!(
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS {} {} 1\nORIGIN {:.16e} {:.16e} 0\nSPACING {:.16e} {:.16e} 1\nPOINT_DATA {}\n",
        grid.nx,
        grid.ny,
        0.5 * grid.dx(),
        0.5 * grid.dy(),
        grid.dx(),
        grid.dy(),
        grid.nx * grid.ny
    )
}

/// Cell-centered velocity, director and pressure as three legacy VTK files.
pub fn vtk_files(grid: &GridSpec, s: &StateSnapshot, step: usize) -> Vec<(String, String)> {
    let (nx, ny) = (grid.nx, grid.ny);
    let points = || (0..ny).flat_map(move |j| (0..nx).map(move |i| (i, j)));
    let mut vel = vtk_header(grid, &format!("velocity t={:.16e}", s.t));
    vel.push_str("VECTORS velocity double\n");
    for (i, j) in points() {
        let u = 0.5 * (s.v.u[[i, j]] + s.v.u[[i + 1, j]]);
        let v = 0.5 * (s.v.v[[i, j]] + s.v.v[[i, j + 1]]);
        let _ = writeln!(vel, "{u:.16e} {v:.16e} 0");
    }
    let mut dir = vtk_header(grid, &format!("director t={:.16e}", s.t));
    dir.push_str("VECTORS director double\n");
    for (i, j) in points() {
        let d = s.d.at(i, j);
        let z = d.get(2).copied().unwrap_or(0.0);
        let _ = writeln!(dir, "{:.16e} {:.16e} {z:.16e}", d[0], d[1]);
    }
    let mut pre = vtk_header(grid, &format!("pressure t={:.16e}", s.t));
    pre.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for (i, j) in points() {
        let _ = writeln!(pre, "{:.16e}", s.p.data[[i, j]]);
    }
    vec![
        (format!("velocity_{step:06}.vtk"), vel),
        (format!("director_{step:06}.vtk"), dir),
        (format!("pressure_{step:06}.vtk"), pre),
    ]
}
