//! Quantities of interest (crack opening, crack length, tension indicator)
//! and file output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::element::{gauss_points, point_fields, shape, CellState};
use crate::mesh::QuadMesh;
use crate::physics::heaviside_plus;
use crate::scalar::Real;

/// Crack opening at `x = x0`: the integral of `u . grad phi` over the
/// vertical line through the domain, composite trapezoid rule with steps of
/// `h_min / 2` and cellwise gradients.
pub fn cod_at<T: Real>(mesh: &QuadMesh<T>, u: &[T], phi: &[T], x0: T) -> Result<T> {
    let size = mesh.domain_size();
    if !(x0 >= T::zero() && x0 <= size) {
        return Err(Error::Invalid(format!("COD abscissa {x0} outside the domain (0, {size})")));
    }
    let dy = mesh.h_min() * T::lit(0.5);
    let n = (size / dy).round().to_usize().unwrap_or(0);
    let half = T::lit(0.5);
    let mut total = T::zero();
    for k in 0..n {
        let y0 = T::lit(k as f64) * dy;
        let y1 = y0 + dy;
        // the whole sub-interval lies in the cell holding its midpoint
        let loc = mesh.locate([x0, (y0 + y1) * half]);
        let (origin, h) = mesh.leaf_box(loc.leaf);
        let f = |y: T| {
            let mut l = loc;
            l.eta = ((y - origin[1]) / h).max(T::zero()).min(T::one());
            let vs = mesh.leaf_vertices(loc.leaf);
            let w = crate::mesh::bilinear_weights(l.xi, l.eta);
            let ux: T = (0..4).map(|i| w[i] * u[2 * vs[i]]).sum();
            let uy: T = (0..4).map(|i| w[i] * u[2 * vs[i] + 1]).sum();
            let gl = mesh.gradient_in(phi, &l);
            ux * gl[0] + uy * gl[1]
        };
        total += half * dy * (f(y0) + f(y1));
    }
    Ok(total)
}

/// COD sampled at the given abscissae.
pub fn cod_profile<T: Real>(mesh: &QuadMesh<T>, u: &[T], phi: &[T], xs: &[T]) -> Result<Vec<T>> {
    xs.iter().map(|&x| cod_at(mesh, u, phi, x)).collect()
}

/// Length of `{x : phi(x, y_line) <= 0.5}`, from the piecewise linear
/// interpolant of samples spaced `h_min / 2`.
pub fn crack_length<T: Real>(mesh: &QuadMesh<T>, phi: &[T], y_line: T) -> T {
    let size = mesh.domain_size();
    let dx = mesh.h_min() * T::lit(0.5);
    let n = (size / dx).round().to_usize().unwrap_or(0);
    let thr = T::lit(0.5);
    let sample = |k: usize| mesh.interpolate(phi, [T::lit(k as f64) * dx, y_line]);
    let mut len = T::zero();
    let mut f0 = sample(0);
    for k in 1..=n {
        let f1 = sample(k);
        len += if f0 <= thr && f1 <= thr {
            dx
        } else if f0 > thr && f1 > thr {
            T::zero()
        } else {
            let below = if f0 <= thr { thr - f0 } else { thr - f1 };
            dx * below.abs() / (f1 - f0).abs()
        };
        f0 = f1;
    }
    len
}

/// Largest COD over abscissae spaced `h_min` across the damaged part of the
/// crack line.
pub fn max_cod<T: Real>(mesh: &QuadMesh<T>, u: &[T], phi: &[T], center: [T; 2]) -> Result<T> {
    let half_len = crack_length(mesh, phi, center[1]) * T::lit(0.5);
    let h = mesh.h_min();
    let reach = half_len + h * T::lit(2.0);
    let steps = (reach / h).ceil().to_usize().unwrap_or(0);
    let size = mesh.domain_size();
    let mut best = cod_at(mesh, u, phi, center[0])?;
    for k in 1..=steps {
        for x in [center[0] - T::lit(k as f64) * h, center[0] + T::lit(k as f64) * h] {
            if x >= T::zero() && x <= size {
                best = best.max(cod_at(mesh, u, phi, x)?);
            }
        }
    }
    Ok(best)
}

/// Cellwise mean over the Gauss points of `H+(tr eps)`.
pub fn tensile_indicator<T: Real>(mesh: &QuadMesh<T>, u: &[T]) -> Vec<T> {
    let quarter = T::lit(0.25);
    (0..mesh.n_leaves())
        .map(|l| {
            let vs = mesh.leaf_vertices(l);
            let st = CellState {
                h: mesh.leaf_size(l),
                u: vs.map(|v| [u[2 * v], u[2 * v + 1]]),
                phi: [T::one(); 4],
                phi_tilde: [T::one(); 4],
            };
            gauss_points::<T>()
                .iter()
                .map(|&(xi, eta)| heaviside_plus(point_fields(&shape(xi, eta, st.h), &st).strain.trace()))
                .sum::<T>()
                * quarter
        })
        .collect()
}

/// Write a legacy ASCII VTK unstructured grid of quadrilaterals.
pub fn write_vtk<T: Real>(path: &Path, mesh: &QuadMesh<T>, u: &[T], phi: &[T]) -> Result<()> {
    let nv = mesh.n_vertices();
    let nc = mesh.n_leaves();
    let theta = tensile_indicator(mesh, u);
    let mut s = String::with_capacity(nv * 64 + nc * 48);
    s.push_str("# vtk DataFile Version 3.0\nphase-field fracture state\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:e} {:e} 0", p[0].to_f64_lossy(), p[1].to_f64_lossy());
    }
    let _ = writeln!(s, "CELLS {nc} {}", 5 * nc);
    for l in 0..nc {
        let v = mesh.leaf_vertices(l);
        let _ = writeln!(s, "4 {} {} {} {}", v[0], v[1], v[2], v[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("9\n");
    }
    let _ = writeln!(s, "CELL_DATA {nc}\nSCALARS theta_u double 1\nLOOKUP_TABLE default");
    for t in &theta {
        let _ = writeln!(s, "{:e}", t.to_f64_lossy());
    }
    s.push_str("SCALARS level int 1\nLOOKUP_TABLE default\n");
    for l in 0..nc {
        let _ = writeln!(s, "{}", mesh.leaf_level(l));
    }
    let _ = writeln!(s, "POINT_DATA {nv}\nVECTORS displacement double");
    for v in 0..nv {
        let _ = writeln!(s, "{:e} {:e} 0", u[2 * v].to_f64_lossy(), u[2 * v + 1].to_f64_lossy());
    }
    s.push_str("SCALARS phi double 1\nLOOKUP_TABLE default\n");
    for v in phi {
        let _ = writeln!(s, "{:e}", v.to_f64_lossy());
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Contents of a VTK file written by [`write_vtk`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 4]>,
    pub displacement: Vec<[f64; 3]>,
    pub phi: Vec<f64>,
    pub theta_u: Vec<f64>,
    pub level: Vec<u32>,
}

pub fn read_vtk(path: &Path) -> Result<VtkData> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Invalid(format!("{}: {m}", path.display()));
    let mut lines = text.lines();
    let mut out = VtkData::default();
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad("malformed number"));
    fn next<'a>(lines: &mut std::str::Lines<'a>, path: &Path) -> Result<&'a str> {
        lines.next().ok_or_else(|| Error::Invalid(format!("{}: unexpected end of file", path.display())))
    }
    while let Some(line) = lines.next() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("POINTS") => {
                let n: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("POINTS count"))?;
                for _ in 0..n {
                    let v: Vec<f64> = next(&mut lines, path)?.split_whitespace().map(num).collect::<Result<_>>()?;
                    out.points.push([v[0], v[1], v[2]]);
                }
            }
            Some("CELLS") => {
                let n: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("CELLS count"))?;
                for _ in 0..n {
                    let v: Vec<usize> = next(&mut lines, path)?.split_whitespace().filter_map(|t| t.parse().ok()).collect();
                    if v.len() != 5 || v[0] != 4 {
                        return Err(bad("expected quadrilateral cell"));
                    }
                    out.cells.push([v[1], v[2], v[3], v[4]]);
                }
            }
            Some("VECTORS") => {
                for _ in 0..out.points.len() {
                    let v: Vec<f64> = next(&mut lines, path)?.split_whitespace().map(num).collect::<Result<_>>()?;
                    out.displacement.push([v[0], v[1], v[2]]);
                }
            }
            Some("SCALARS") => {
                let name = it.next().unwrap_or("");
                next(&mut lines, path)?; // lookup table
                match name {
                    "phi" => {
                        for _ in 0..out.points.len() {
                            out.phi.push(num(next(&mut lines, path)?.trim())?);
                        }
                    }
                    "theta_u" => {
                        for _ in 0..out.cells.len() {
                            out.theta_u.push(num(next(&mut lines, path)?.trim())?);
                        }
                    }
                    "level" => {
                        for _ in 0..out.cells.len() {
                            out.level.push(next(&mut lines, path)?.trim().parse().map_err(|_| bad("level"))?);
                        }
                    }
                    _ => {}
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// One row of `timeseries.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub max_cod: f64,
    pub crack_length: f64,
    pub e_mech: f64,
    pub e_frac: f64,
    pub newton_iters: usize,
    pub gmres_avg: f64,
    pub active_set_size: usize,
}

pub const TIMESERIES_HEADER: &str = "step,time,max_cod,crack_length,E_mech,E_frac,newton_iters,gmres_avg,active_set_size";

/// Float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl StepRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.step,
            fmt17(self.time),
            fmt17(self.max_cod),
            fmt17(self.crack_length),
            fmt17(self.e_mech),
            fmt17(self.e_frac),
            self.newton_iters,
            fmt17(self.gmres_avg),
            self.active_set_size
        )
    }
}

pub fn write_timeseries(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut s = String::from(TIMESERIES_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_timeseries(path: &Path) -> Result<Vec<StepRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = || Error::Invalid(format!("{}: malformed time series", path.display()));
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 9 {
                return Err(bad());
            }
            let fl = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
            let us = |i: usize| f[i].parse::<usize>().map_err(|_| bad());
            Ok(StepRecord {
                step: us(0)?,
                time: fl(1)?,
                max_cod: fl(2)?,
                crack_length: fl(3)?,
                e_mech: fl(4)?,
                e_frac: fl(5)?,
                newton_iters: us(6)?,
                gmres_avg: fl(7)?,
                active_set_size: us(8)?,
            })
        })
        .collect()
}
