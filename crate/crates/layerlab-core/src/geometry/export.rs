//! Flat binary export of metric fields with a JSON provenance sidecar.
//!
//! Layout (all little-endian):
//!
//! ```text
//! u64 dim | u64 codim
//! per base axis:  u64 n_points | f64 origin | f64 spacing
//! per fiber axis: u64 n_points | f64 origin | f64 spacing
//! u64 n_records
//! records: base-major, fiber fastest; each = packed lower triangle of G
//!          (D(D+1)/2 f64 values, D = dim + codim)
//! ```

use super::{FermiMetricField, GeometryError};
use crate::grid::Axis;
use crate::smat;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricBinaryHeader {
    pub dim: usize,
    pub codim: usize,
    pub base_axes: Vec<Axis>,
    pub fiber_axes: Vec<Axis>,
    pub n_records: usize,
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Write the metric samples and a JSON sidecar (`<path>.json`) carrying
/// provenance.
pub fn write_metric_binary(
    field: &FermiMetricField,
    path: &Path,
    scenario: &str,
    params: &serde_json::Value,
) -> Result<(), GeometryError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_u64(&mut w, field.dim as u64)?;
    write_u64(&mut w, field.codim as u64)?;
    for ax in &field.base.axes {
        write_u64(&mut w, ax.n_points as u64)?;
        write_f64(&mut w, ax.origin)?;
        write_f64(&mut w, ax.spacing)?;
    }
    for ax in &field.fiber.axes {
        write_u64(&mut w, ax.n_points as u64)?;
        write_f64(&mut w, ax.origin)?;
        write_f64(&mut w, ax.spacing)?;
    }
    let n_records = field.n_layer_points();
    write_u64(&mut w, n_records as u64)?;
    let pd = smat::packed_len(field.total_dim());
    for lp in 0..n_records {
        for &v in &field.gg[lp * pd..(lp + 1) * pd] {
            write_f64(&mut w, v)?;
        }
    }
    w.flush()?;

    let sidecar = serde_json::json!({
        "scenario": scenario,
        "parameters": params,
        "dim": field.dim,
        "codim": field.codim,
        "base_shape": field.base.shape(),
        "fiber_shape": field.fiber.shape(),
        "record_values": pd,
    });
    let side_path = path.with_extension(format!(
        "{}json",
        path.extension().map(|e| format!("{}.", e.to_string_lossy())).unwrap_or_default()
    ));
    std::fs::write(side_path, format!("{:#}\n", sidecar))?;
    Ok(())
}

/// Read back header and packed records.
pub fn read_metric_binary(path: &Path) -> Result<(MetricBinaryHeader, Vec<f64>), GeometryError> {
    let mut r = BufReader::new(File::open(path)?);
    let dim = read_u64(&mut r)? as usize;
    let codim = read_u64(&mut r)? as usize;
    let mut base_axes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let n = read_u64(&mut r)? as usize;
        let origin = read_f64(&mut r)?;
        let spacing = read_f64(&mut r)?;
        base_axes.push(Axis::new(n, origin, spacing));
    }
    let mut fiber_axes = Vec::with_capacity(codim);
    for _ in 0..codim {
        let n = read_u64(&mut r)? as usize;
        let origin = read_f64(&mut r)?;
        let spacing = read_f64(&mut r)?;
        fiber_axes.push(Axis::new(n, origin, spacing));
    }
    let n_records = read_u64(&mut r)? as usize;
    let pd = smat::packed_len(dim + codim);
    let mut data = vec![0.0; n_records * pd];
    for v in data.iter_mut() {
        *v = read_f64(&mut r)?;
    }
    Ok((MetricBinaryHeader { dim, codim, base_axes, fiber_axes, n_records }, data))
}
