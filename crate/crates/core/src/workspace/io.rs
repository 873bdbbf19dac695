//! Map file formats.
//!
//! Text maps hold one ASCII layer per z-slice, separated by blank lines.
//! Within a layer the first line is the top row (highest `y`) and columns
//! run along `x`; `#` marks an occupied cell and `.` a free one.
//!
//! Binary grids start with the 8-byte magic `TPGRID01`, then `nx`, `ny`, `nz`
//! as little-endian `u32`, then the resolution and the origin `x`, `y`, `z` as
//! little-endian `f64`, followed by one byte per cell (x fastest, then y,
//! then z; non-zero is occupied).

use std::io::{Read, Write};

use super::{VoxelGrid, WorkspaceError, WorldPoint};

pub const BINARY_MAGIC: &[u8; 8] = b"TPGRID01";

pub fn read_text_map(text: &str, resolution: f64, origin: WorldPoint) -> Result<VoxelGrid, WorkspaceError> {
    let mut layers: Vec<Vec<(usize, &str)>> = vec![Vec::new()];
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            if !layers.last().unwrap().is_empty() {
                layers.push(Vec::new());
            }
        } else {
            layers.last_mut().unwrap().push((n + 1, line));
        }
    }
    if layers.last().is_some_and(|l| l.is_empty()) {
        layers.pop();
    }
    let first = layers.first().ok_or(WorkspaceError::TextFormat { line: 1, message: "map is empty".into() })?;
    let ny = first.len();
    let nx = first[0].1.chars().count();
    let nz = layers.len();

    let mut occupied = vec![false; nx * ny * nz];
    for (z, layer) in layers.iter().enumerate() {
        if layer.len() != ny {
            return Err(WorkspaceError::TextFormat {
                line: layer[0].0,
                message: format!("layer {z} has {} rows, expected {ny}", layer.len()),
            });
        }
        for (row, (line_no, line)) in layer.iter().enumerate() {
            if line.chars().count() != nx {
                return Err(WorkspaceError::TextFormat {
                    line: *line_no,
                    message: format!("row has {} columns, expected {nx}", line.chars().count()),
                });
            }
            let y = ny - 1 - row;
            for (x, ch) in line.chars().enumerate() {
                let occ = match ch {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(WorkspaceError::TextFormat {
                            line: *line_no,
                            message: format!("unexpected character {other:?} in column {}", x + 1),
                        })
                    }
                };
                occupied[x + nx * (y + ny * z)] = occ;
            }
        }
    }
    VoxelGrid::from_occupancy([nx, ny, nz], resolution, origin, occupied)
}

pub fn write_text_map(grid: &VoxelGrid) -> String {
    let [nx, ny, nz] = grid.dims();
    let mut out = String::with_capacity((nx + 1) * ny * nz + nz);
    for z in 0..nz {
        if z > 0 {
            out.push('\n');
        }
        for y in (0..ny).rev() {
            for x in 0..nx {
                out.push(if grid.occupancy()[x + nx * (y + ny * z)] { '#' } else { '.' });
            }
            out.push('\n');
        }
    }
    out
}

pub fn read_binary_grid<R: Read>(mut reader: R) -> Result<VoxelGrid, WorkspaceError> {
    let mut header = [0u8; 8 + 12 + 32];
    reader
        .read_exact(&mut header)
        .map_err(|e| WorkspaceError::BinaryFormat(format!("truncated header: {e}")))?;
    if &header[..8] != BINARY_MAGIC {
        return Err(WorkspaceError::BinaryFormat("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let dims = [u32_at(8), u32_at(12), u32_at(16)];
    let resolution = f64_at(20);
    let origin = WorldPoint::new(f64_at(28), f64_at(36), f64_at(44));
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| WorkspaceError::BinaryFormat("dimensions overflow".into()))?;
    let mut cells = vec![0u8; len];
    reader
        .read_exact(&mut cells)
        .map_err(|e| WorkspaceError::BinaryFormat(format!("truncated occupancy: {e}")))?;
    VoxelGrid::from_occupancy(dims, resolution, origin, cells.into_iter().map(|b| b != 0).collect())
}

pub fn write_binary_grid<W: Write>(grid: &VoxelGrid, mut writer: W) -> Result<(), WorkspaceError> {
    writer.write_all(BINARY_MAGIC)?;
    for d in grid.dims() {
        let d = u32::try_from(d).map_err(|_| WorkspaceError::BinaryFormat("dimension exceeds u32".into()))?;
        writer.write_all(&d.to_le_bytes())?;
    }
    writer.write_all(&grid.resolution().to_le_bytes())?;
    for v in grid.origin().coords.iter() {
        writer.write_all(&v.to_le_bytes())?;
    }
    let bytes: Vec<u8> = grid.occupancy().iter().map(|&o| o as u8).collect();
    writer.write_all(&bytes)?;
    Ok(())
}
