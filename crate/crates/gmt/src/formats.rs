//! Binary field/measure files and JSON summaries.
//!
//! Layout (all little-endian): 4-byte magic, `u32` spatial dimension `D`,
//! `u32` components `M`, `D` node counts as `u64`, `D` lower corners and `D`
//! upper corners as `f64`, then the values as `f64`. Fields (`GMTF`) store
//! `M` values per node, measures (`GMTM`) one mass per cell. Both are
//! row-major with the last axis fastest.

use std::io::{Read, Write};

use gmt_core::area::AreaReport;
use gmt_core::degree::DegreeField;
use gmt_core::field::{Aabb, Grid, SampledField};
use gmt_core::measure::GridMeasure;
use serde::Serialize;
use thiserror::Error;

pub const FIELD_MAGIC: &[u8; 4] = b"GMTF";
pub const MEASURE_MAGIC: &[u8; 4] = b"GMTM";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {0:?}")]
    Magic([u8; 4]),
    #[error("expected dimension {expected}x{components}, file has {found}x{found_components}")]
    Shape { expected: usize, components: usize, found: usize, found_components: usize },
    #[error("invalid grid: {0}")]
    Grid(#[from] gmt_core::Error),
    #[error("{0} trailing bytes")]
    Trailing(usize),
}

type Result<T> = std::result::Result<T, FormatError>;

fn write_header<const D: usize>(w: &mut impl Write, magic: &[u8; 4], grid: &Grid<D>, m: usize) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&(D as u32).to_le_bytes())?;
    w.write_all(&(m as u32).to_le_bytes())?;
    for n in grid.nodes {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for v in grid.bbox.lo.iter().chain(&grid.bbox.hi) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_header<const D: usize>(r: &mut impl Read, magic: &[u8; 4], m: usize) -> Result<Grid<D>> {
    let mut got = [0; 4];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(FormatError::Magic(got));
    }
    let d = read_u32(r)? as usize;
    let c = read_u32(r)? as usize;
    if d != D || c != m {
        return Err(FormatError::Shape { expected: D, components: m, found: d, found_components: c });
    }
    let mut nodes = [0usize; D];
    for n in &mut nodes {
        *n = read_u64(r)? as usize;
    }
    let mut lo = [0.0; D];
    let mut hi = [0.0; D];
    for v in lo.iter_mut().chain(hi.iter_mut()) {
        *v = read_f64(r)?;
    }
    Ok(Grid::free(Aabb::new(lo, hi)?, nodes.map(|n| n.saturating_sub(1)))?)
}

fn expect_end(r: &mut impl Read) -> Result<()> {
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if rest.is_empty() {
        Ok(())
    } else {
        Err(FormatError::Trailing(rest.len()))
    }
}

pub fn write_field<const D: usize, const M: usize>(w: &mut impl Write, f: &SampledField<D, M>) -> Result<()> {
    write_header(w, FIELD_MAGIC, &f.grid, M)?;
    for v in f.values.iter().flatten() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<const D: usize, const M: usize>(r: &mut impl Read) -> Result<SampledField<D, M>> {
    let grid = read_header::<D>(r, FIELD_MAGIC, M)?;
    let mut values = Vec::with_capacity(grid.node_count());
    for _ in 0..grid.node_count() {
        let mut v = [0.0; M];
        for x in &mut v {
            *x = read_f64(r)?;
        }
        values.push(v);
    }
    expect_end(r)?;
    Ok(SampledField::new(grid, values)?)
}

fn write_masses<const D: usize>(w: &mut impl Write, grid: &Grid<D>, masses: impl Iterator<Item = f64>) -> Result<()> {
    write_header(w, MEASURE_MAGIC, grid, 1)?;
    for v in masses {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_measure<const D: usize>(w: &mut impl Write, m: &GridMeasure<D>) -> Result<()> {
    write_masses(w, &m.grid, m.masses.iter().copied())
}

pub fn read_measure<const D: usize>(r: &mut impl Read) -> Result<GridMeasure<D>> {
    let (grid, masses) = read_measure_values::<D>(r)?;
    Ok(GridMeasure::new(grid, masses)?)
}

/// Header and raw values of a `GMTM` file; unlike [`read_measure`] this
/// accepts the NaN markers of degree files.
pub fn read_measure_values<const D: usize>(r: &mut impl Read) -> Result<(Grid<D>, Vec<f64>)> {
    let grid = read_header::<D>(r, MEASURE_MAGIC, 1)?;
    let values = (0..grid.cell_count()).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
    expect_end(r)?;
    Ok((grid, values))
}

/// Degree values as a `GMTM` file; cells of unknown degree are stored as NaN.
pub fn write_degree<const D: usize>(w: &mut impl Write, d: &DegreeField<D>) -> Result<()> {
    let values = d.values.iter().zip(&d.unknown).map(|(&v, &u)| if u { f64::NAN } else { v as f64 });
    write_masses(w, &d.grid, values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSummary {
    pub total_variation: f64,
    /// Masses of the `2^(D·depth)` dyadic subcubes, for each depth up to 3
    /// at which the grid is aligned.
    pub dyadic: Vec<DyadicLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicLevel {
    pub depth: u32,
    pub masses: Vec<f64>,
}

pub fn measure_summary<const D: usize>(m: &GridMeasure<D>) -> MeasureSummary {
    let dyadic = (0..=3)
        .filter_map(|depth| m.dyadic_masses(depth).ok().map(|masses| DyadicLevel { depth, masses }))
        .collect();
    MeasureSummary { total_variation: m.total_variation(), dyadic }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeSummary {
    pub integral: f64,
    pub l1_integral: f64,
    pub unknown_volume: f64,
}

pub fn degree_summary<const D: usize>(d: &DegreeField<D>) -> DegreeSummary {
    DegreeSummary { integral: d.integral, l1_integral: d.l1_integral, unknown_volume: d.unknown_volume }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaSummary {
    /// One-based slicing axis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub resolutions: Vec<usize>,
    pub areas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<&'static str>,
}

pub fn area_summary(a: &AreaReport) -> AreaSummary {
    AreaSummary {
        axis: a.axis.map(|k| k + 1),
        t: a.t,
        resolutions: a.resolutions.clone(),
        areas: a.areas.clone(),
        estimate: a.estimate,
        flag: a.divergent.then_some("divergent"),
    }
}
